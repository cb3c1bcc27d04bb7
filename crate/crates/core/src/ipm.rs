//! Primal-dual interior-point solver for the reduced problem.
//!
//! The affine constraint `T(Y) = α I` is eliminated by writing `Y = Σ x_k G_k`
//! over a sparse Hermitian basis of `{Y : T(Y) ∝ I}`, leaving the LMI problem
//!
//! ```text
//! minimize cᵀx  subject to  S₁ = Y(x) ⪰ 0,  S₂ = Y(x) - D ⪰ 0
//! ```
//!
//! with dual `maximize ⟨D, Z₂⟩` over `Z₁, Z₂ ⪰ 0`, `⟨G_k, Z₁ + Z₂⟩ = c_k`.
//! Iterates stay primal and dual feasible; steps use the HKM direction with
//! a Mehrotra predictor-corrector.

use crate::matkit::{self, c, ComplexMatrix, C64};
use crate::{Error, Result};

/// Hermitian matrix stored as its nonzero entries (both triangles).
#[derive(Clone, Debug)]
struct SparseHermitian {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    /// `Re Tr(G M)`.
    fn trace_with(&self, m: &ComplexMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(r, col, g)| (g * m[(col, r)]).re)
            .sum()
    }

    fn add_scaled_to(&self, s: f64, out: &mut ComplexMatrix) {
        for &(r, col, g) in &self.entries {
            out[(r, col)] += g * s;
        }
    }
}

/// Basis of Hermitian `n² × n²` matrices whose channel sum is a multiple of
/// the identity. The last element is the identity; `c` weights give `α`.
struct AffineBasis {
    n: usize,
    elems: Vec<SparseHermitian>,
}

impl AffineBasis {
    fn new(n: usize) -> Self {
        let m = n * n;
        let one = c(1.0, 0.0);
        let i1 = c(0.0, 1.0);
        let idx = |block: usize, a: usize| block * n + a;
        let mut elems = Vec::with_capacity(m * m - m + 1);
        let pair = |r: usize, col: usize, v: C64| vec![(r, col, v), (col, r, v.conj())];

        // Entries coupling different output indices never enter T.
        for r in 0..m {
            for col in r + 1..m {
                if r % n != col % n {
                    elems.push(SparseHermitian {
                        entries: pair(r, col, one),
                    });
                    elems.push(SparseHermitian {
                        entries: pair(r, col, i1),
                    });
                }
            }
        }
        // Same output index, different input blocks: the n entries must sum to 0.
        for j in 0..n {
            for i in j + 1..n {
                for a in 1..n {
                    for v in [one, i1] {
                        let mut e = pair(idx(j, a), idx(i, a), v);
                        e.extend(pair(idx(j, 0), idx(i, 0), -v));
                        elems.push(SparseHermitian { entries: e });
                    }
                }
            }
        }
        // Diagonal blocks: traces shared through the identity element.
        for i in 0..n {
            for a in 1..n {
                elems.push(SparseHermitian {
                    entries: vec![(idx(i, a), idx(i, a), one), (idx(i, 0), idx(i, 0), -one)],
                });
            }
        }
        elems.push(SparseHermitian {
            entries: (0..m).map(|r| (r, r, one)).collect(),
        });
        AffineBasis { n, elems }
    }

    fn len(&self) -> usize {
        self.elems.len()
    }

    /// Objective weights: `α = Tr(Y) / n`.
    fn cost(&self) -> Vec<f64> {
        let mut cost = vec![0.0; self.len()];
        *cost.last_mut().expect("identity element") = self.n as f64;
        cost
    }

    fn assemble(&self, x: &[f64]) -> ComplexMatrix {
        let m = self.n * self.n;
        let mut y = ComplexMatrix::zeros(m, m);
        for (g, &xi) in self.elems.iter().zip(x) {
            g.add_scaled_to(xi, &mut y);
        }
        y.hermitian_part()
    }

    /// Coordinates of a `y` with `T(y) ∝ I`, in basis order.
    fn coords(&self, y: &ComplexMatrix) -> Vec<f64> {
        let n = self.n;
        let m = n * n;
        let t = y.trace().re / m as f64;
        let mut x = Vec::with_capacity(self.len());
        for r in 0..m {
            for col in r + 1..m {
                if r % n != col % n {
                    x.push(y[(r, col)].re);
                    x.push(y[(r, col)].im);
                }
            }
        }
        for j in 0..n {
            for i in j + 1..n {
                for a in 1..n {
                    let v = y[(j * n + a, i * n + a)];
                    x.push(v.re);
                    x.push(v.im);
                }
            }
        }
        for i in 0..n {
            for a in 1..n {
                x.push(y[(i * n + a, i * n + a)].re - t);
            }
        }
        x.push(t);
        x
    }
}

/// In-place Cholesky solve of a dense symmetric positive-definite system.
fn cholesky_solve(mut h: Vec<f64>, k: usize, rhs: &mut [f64]) -> Result<()> {
    for j in 0..k {
        let mut d = h[j * k + j];
        for p in 0..j {
            d -= h[j * k + p] * h[j * k + p];
        }
        if !(d > 0.0) {
            return Err(Error::numerical(
                "interior-point Schur matrix lost definiteness",
                d,
            ));
        }
        let d = d.sqrt();
        h[j * k + j] = d;
        for i in j + 1..k {
            let mut s = h[i * k + j];
            for p in 0..j {
                s -= h[i * k + p] * h[j * k + p];
            }
            h[i * k + j] = s / d;
        }
    }
    for i in 0..k {
        let mut s = rhs[i];
        for p in 0..i {
            s -= h[i * k + p] * rhs[p];
        }
        rhs[i] = s / h[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = rhs[i];
        for p in i + 1..k {
            s -= h[p * k + i] * rhs[p];
        }
        rhs[i] = s / h[i * k + i];
    }
    Ok(())
}

/// Largest `t ≤ cap` keeping `m + t·d ⪰ 0`, for `m ≻ 0` with inverse root `m_isqrt`.
fn max_step(m_isqrt: &ComplexMatrix, d: &ComplexMatrix, cap: f64) -> Result<f64> {
    let w = m_isqrt.matmul(d).matmul(m_isqrt).hermitian_part();
    let lmin = matkit::min_eigenvalue(&w)?;
    Ok(if lmin >= 0.0 {
        cap
    } else {
        cap.min(-1.0 / lmin)
    })
}

struct Block {
    inv: ComplexMatrix,
    isqrt: ComplexMatrix,
}

fn factor(s: &ComplexMatrix) -> Result<Block> {
    let eig = matkit::hermitian_eig(s)?;
    let lmin = eig.min_eigenvalue();
    if !(lmin > 0.0) {
        return Err(Error::numerical(
            "interior-point iterate left the cone",
            lmin,
        ));
    }
    Ok(Block {
        inv: eig.rebuild(|l| 1.0 / l),
        isqrt: eig.rebuild(|l| 1.0 / l.sqrt()),
    })
}

/// Outcome of an interior-point solve.
pub(crate) struct IpmResult {
    pub alpha: f64,
    pub y: ComplexMatrix,
    /// `Z₁ + Z₂`; its channel sum is a dual density candidate.
    pub dual_sum: ComplexMatrix,
    pub gap: f64,
    pub iterations: usize,
}

pub(crate) struct IpmSettings {
    pub gap_tol: f64,
    pub max_iter: usize,
}

/// Minimizes `α` from a strictly feasible `y0` (`T(y0) ∝ I`, `y0 ≻ 0`,
/// `y0 - d ≻ 0`).
pub(crate) fn solve(
    n: usize,
    d: &ComplexMatrix,
    y0: &ComplexMatrix,
    settings: &IpmSettings,
) -> Result<IpmResult> {
    let m = n * n;
    let basis = AffineBasis::new(n);
    let k = basis.len();
    let cost = basis.cost();
    let mut x = basis.coords(y0);
    let total = 2.0 * m as f64;

    let mut z = [
        ComplexMatrix::identity(m).scale(0.5 / n as f64),
        ComplexMatrix::identity(m).scale(0.5 / n as f64),
    ];
    let mut iterations = 0;

    loop {
        let y = basis.assemble(&x);
        let s = [y.clone(), &y - d];
        let gap: f64 = (0..2).map(|b| s[b].matmul(&z[b]).trace().re).sum();
        let alpha = n as f64 * x[k - 1];
        if gap <= settings.gap_tol * alpha.abs().max(1.0) || iterations >= settings.max_iter {
            return Ok(IpmResult {
                alpha,
                y,
                dual_sum: &z[0] + &z[1],
                gap,
                iterations,
            });
        }
        let step = (|| -> Result<(Vec<f64>, [ComplexMatrix; 2], f64, f64)> {
            let blocks = [factor(&s[0])?, factor(&s[1])?];
            let z_isqrt = [
                matkit::hermitian_eig(&z[0])?.rebuild(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()),
                matkit::hermitian_eig(&z[1])?.rebuild(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()),
            ];
            let mu = gap / total;

            // Schur matrix H_ij = Σ_b Re Tr(G_i S_b⁻¹ G_j Z_b).
            let mut h = vec![0.0; k * k];
            let pz: Vec<Vec<ComplexMatrix>> = (0..2)
                .map(|b| {
                    basis
                        .elems
                        .iter()
                        .map(|g| {
                            // S_b⁻¹ G Z_b, kept dense; the basis is sparse so this is cheap.
                            let mut gz = ComplexMatrix::zeros(m, m);
                            for &(r, col, v) in &g.entries {
                                for q in 0..m {
                                    gz[(r, q)] += v * z[b][(col, q)];
                                }
                            }
                            blocks[b].inv.matmul(&gz)
                        })
                        .collect()
                })
                .collect();
            for i in 0..k {
                for j in 0..=i {
                    let v: f64 = (0..2).map(|b| basis.elems[i].trace_with(&pz[b][j])).sum();
                    h[i * k + j] = v;
                    h[j * k + i] = v;
                }
            }

            // Right-hand side for a given centering target and second-order term.
            let direction = |sigma_mu: f64,
                             corr: Option<&[ComplexMatrix; 2]>|
             -> Result<(Vec<f64>, ComplexMatrix, [ComplexMatrix; 2])> {
                let mut rhs: Vec<f64> = (0..k)
                    .map(|i| {
                        let g = &basis.elems[i];
                        let mut v = -cost[i];
                        for b in 0..2 {
                            v += sigma_mu * g.trace_with(&blocks[b].inv);
                            if let Some(cr) = corr {
                                v -= g.trace_with(&blocks[b].inv.matmul(&cr[b]));
                            }
                        }
                        v
                    })
                    .collect();
                cholesky_solve(h.clone(), k, &mut rhs)?;
                let mut dy = ComplexMatrix::zeros(m, m);
                for (g, &dx) in basis.elems.iter().zip(&rhs) {
                    g.add_scaled_to(dx, &mut dy);
                }
                let dy = dy.hermitian_part();
                let dz = [0, 1].map(|b| {
                    let mut inner = dy.matmul(&z[b]);
                    if let Some(cr) = corr {
                        inner += &cr[b];
                    }
                    let raw =
                        &(&blocks[b].inv.scale(sigma_mu) - &z[b]) - &blocks[b].inv.matmul(&inner);
                    raw.hermitian_part()
                });
                Ok((rhs, dy, dz))
            };
            let steps = |dy: &ComplexMatrix, dz: &[ComplexMatrix; 2]| -> Result<(f64, f64)> {
                let mut tp = 1.0f64;
                let mut td = 1.0f64;
                for b in 0..2 {
                    tp = max_step(&blocks[b].isqrt, dy, tp)?;
                    td = max_step(&z_isqrt[b], &dz[b], td)?;
                }
                Ok((tp, td))
            };

            // Predictor.
            let (_, dy_a, dz_a) = direction(0.0, None)?;
            let (tp_a, td_a) = steps(&dy_a, &dz_a)?;
            let s_aff = [&s[0] + &dy_a.scale(tp_a), &s[1] + &dy_a.scale(tp_a)];
            let gap_aff: f64 = (0..2)
                .map(|b| s_aff[b].matmul(&(&z[b] + &dz_a[b].scale(td_a))).trace().re)
                .sum();
            let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let corr = [dy_a.matmul(&dz_a[0]), dy_a.matmul(&dz_a[1])];
            let (dx, dy, dz) = direction(sigma * mu, Some(&corr))?;
            let (tp, td) = steps(&dy, &dz)?;
            Ok((dx, dz, 0.98 * tp, 0.98 * td))
        })();
        let (dx, dz, tp, td) = match step {
            Ok(v) => v,
            // Near a degenerate optimum the Newton system can break down;
            // the current iterate is still strictly feasible.
            Err(e) if iterations > 0 => {
                log::debug!("interior point stopped early: {e}");
                return Ok(IpmResult {
                    alpha,
                    y,
                    dual_sum: &z[0] + &z[1],
                    gap,
                    iterations,
                });
            }
            Err(e) => return Err(e),
        };
        iterations += 1;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += tp * di;
        }
        for b in 0..2 {
            z[b] = (&z[b] + &dz[b].scale(td)).hermitian_part();
        }
    }
}
