//! Relations derived from mixing probabilities: containment, the triangle
//! combination, composition, a diamond-norm bracket and a key-rate bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{ChoiRep, KrausChannel};
use crate::disguise::{upper_hull, ProfileCurve, TradeoffPoint};
use crate::matkit::{self, ComplexMatrix};
use crate::{Error, Result};

/// PSD tolerance of the containment bisection.
pub const CONTAINMENT_PSD_TOL: f64 = 1e-10;
/// Bisection steps of the containment search.
pub const CONTAINMENT_ITERS: usize = 60;
/// Relative smallest eigenvalue of `C_F` below which the closed form is avoided.
pub const SINGULAR_REL_TOL: f64 = 1e-8;
/// Stride used by [`triangle_region`] unless dense sampling is requested.
pub const TRIANGLE_STRIDE: usize = 5;

const Q_ZERO: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ContainmentResult {
    /// Smallest `q` with `E = (1 - q) F + q F_Δ`.
    pub q_min: f64,
    /// `(C_E - (1 - q) C_F) / q`, present when `q_min > 0`.
    pub harmonizer: Option<ChoiRep>,
}

/// Smallest `q` such that `C_E - (1 - q) C_F ⪰ 0`.
pub fn containment_min_q(e: &KrausChannel, f: &KrausChannel) -> Result<ContainmentResult> {
    containment_min_q_choi(&e.choi(), &f.choi())
}

pub fn containment_min_q_choi(ce: &ChoiRep, cf: &ChoiRep) -> Result<ContainmentResult> {
    if ce.dim() != cf.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {} vs {}",
            ce.dim(),
            cf.dim()
        )));
    }
    let (a, b) = (ce.matrix(), cf.matrix());
    let eig_f = matkit::hermitian_eig(b)?;
    let invertible = eig_f.min_eigenvalue() >= SINGULAR_REL_TOL * eig_f.spectral_radius();

    let q = if invertible {
        let inv_sqrt = eig_f.rebuild(|l| 1.0 / l.sqrt());
        let m = inv_sqrt.matmul(a).matmul(&inv_sqrt).hermitian_part();
        1.0 - matkit::min_eigenvalue(&m)?.clamp(0.0, 1.0)
    } else {
        let scale = a.max_abs().max(b.max_abs()).max(1.0);
        // Tolerance scaled by q so that the harmonizer, which divides by q,
        // stays PSD to the same tolerance.
        let min_eig = |q: f64| matkit::min_eigenvalue(&(a - &b.scale(1.0 - q)));
        let dominated =
            |q: f64| -> Result<bool> { Ok(min_eig(q)? >= -CONTAINMENT_PSD_TOL * scale * q) };
        if min_eig(0.0)? >= -CONTAINMENT_PSD_TOL * scale {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..CONTAINMENT_ITERS {
                let mid = 0.5 * (lo + hi);
                if dominated(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };

    let harmonizer = if q > Q_ZERO {
        let m = (a - &b.scale(1.0 - q)).scale(1.0 / q).hermitian_part();
        Some(ChoiRep::from_matrix(m)?)
    } else {
        None
    };
    Ok(ContainmentResult {
        q_min: q,
        harmonizer,
    })
}

fn check_point(pt: TradeoffPoint, what: &str) -> Result<()> {
    for (name, v) in [("p", pt.p), ("q", pt.q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::validation(format!(
                "{what}: {name} = {v} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Achievable `(p″, q″)` for `(E, G)` from `(p, q)` for `(E, F)` and
/// `(p′, q′)` for `(G, F)`: `p′` weights G's harmonizer, `q′` weights F's.
///
/// ```text
/// p″ = [p(1 - q′) + (1 - q) q′] / (1 - q q′)
/// q″ = [p′(1 - q) + (1 - q′) q] / (1 - q q′)
/// ```
pub fn triangle_combine(pq_ef: TradeoffPoint, pq_gf: TradeoffPoint) -> Result<TradeoffPoint> {
    check_point(pq_ef, "E-F pair")?;
    check_point(pq_gf, "G-F pair")?;
    let TradeoffPoint { p, q } = pq_ef;
    let TradeoffPoint { p: pp, q: qp } = pq_gf;
    if q == 1.0 && qp == 1.0 {
        return Err(Error::validation(
            "triangle combination undefined when q = q' = 1",
        ));
    }
    let den = 1.0 - q * qp;
    let p2 = (p * (1.0 - qp) + (1.0 - q) * qp) / den;
    let q2 = (pp * (1.0 - q) + (1.0 - qp) * q) / den;
    Ok(TradeoffPoint::new(p2.clamp(0.0, 1.0), q2.clamp(0.0, 1.0)))
}

/// Pairwise triangle combinations and their lower-left boundary.
#[derive(Clone, Debug, Serialize)]
pub struct TriangleRegion {
    pub points: Vec<TradeoffPoint>,
    /// Convex, Pareto-minimal boundary ordered by `p`.
    pub boundary: Vec<TradeoffPoint>,
}

fn subsample(points: &[TradeoffPoint], dense: bool) -> Vec<TradeoffPoint> {
    if dense || points.len() <= 2 {
        return points.to_vec();
    }
    let mut out: Vec<TradeoffPoint> = points.iter().copied().step_by(TRIANGLE_STRIDE).collect();
    let last = *points.last().expect("nonempty");
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Drops points weakly dominated by another point.
fn pareto_minimal(points: &[TradeoffPoint]) -> Vec<TradeoffPoint> {
    let mut best_q = f64::INFINITY;
    let mut out = Vec::new();
    for pt in points {
        if pt.q < best_q {
            out.push(*pt);
            best_q = pt.q;
        }
    }
    out
}

/// Region from achievable `(E, F)` points and achievable `(F, G)` points
/// (both oriented as `(first weight, second weight)`).
pub fn triangle_region_points(
    ef: &[TradeoffPoint],
    fg: &[TradeoffPoint],
    dense: bool,
) -> Result<TriangleRegion> {
    if ef.is_empty() || fg.is_empty() {
        return Err(Error::validation("triangle region needs nonempty curves"));
    }
    let ef = subsample(ef, dense);
    let gf: Vec<TradeoffPoint> = subsample(fg, dense)
        .into_iter()
        .map(|pt| TradeoffPoint::new(pt.q, pt.p))
        .collect();
    let points = ef
        .par_iter()
        .flat_map_iter(|&a| {
            gf.iter().filter_map(move |&b| {
                match triangle_combine(a, b) {
                    Ok(pt) => Some(Ok(pt)),
                    // q = q′ = 1 pairs carry no information.
                    Err(Error::Validation(_)) if a.q == 1.0 && b.q == 1.0 => None,
                    Err(e) => Some(Err(e)),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Err(Error::validation("every pair had q = q' = 1"));
    }
    let boundary = pareto_minimal(&upper_hull(&points)?);
    Ok(TriangleRegion { points, boundary })
}

/// Achievable region for `(E, G)` from the profiles of `(E, F)` and `(F, G)`.
///
/// Uses each profile's upper (achievable) points together with the trivial
/// corners `(0, 1)` and `(1, 0)`; every 5th point is combined unless `dense`.
pub fn triangle_region(
    profile_ef: &ProfileCurve,
    profile_fg: &ProfileCurve,
    dense: bool,
) -> Result<TriangleRegion> {
    let with_corners = |c: &ProfileCurve| {
        let mut pts = c.upper_points.clone();
        pts.insert(0, TradeoffPoint::new(0.0, 1.0));
        pts.push(TradeoffPoint::new(1.0, 0.0));
        pts
    };
    triangle_region_points(&with_corners(profile_ef), &with_corners(profile_fg), dense)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComposeMode {
    /// `p = p₁ + p₂ - p₁ p₂`.
    Product,
    /// `p = min(p₁ + p₂, 1)`.
    Sum,
}

impl std::str::FromStr for ComposeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(ComposeMode::Product),
            "sum" => Ok(ComposeMode::Sum),
            other => Err(Error::validation(format!("unknown compose mode '{other}'"))),
        }
    }
}

/// Mixing probabilities that make `E₂∘E₁` and `F₂∘F₁` equal.
pub fn compose_mixing(
    pq1: TradeoffPoint,
    pq2: TradeoffPoint,
    mode: ComposeMode,
) -> Result<TradeoffPoint> {
    check_point(pq1, "first pair")?;
    check_point(pq2, "second pair")?;
    let f = |x: f64, y: f64| match mode {
        ComposeMode::Product => x + y - x * y,
        ComposeMode::Sum => (x + y).min(1.0),
    };
    Ok(TradeoffPoint::new(f(pq1.p, pq2.p), f(pq1.q, pq2.q)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiamondBracket {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on `‖E - F‖◇` from the smallest equal mixing probability.
pub fn diamond_bracket(p_eq: f64, n: usize) -> Result<DiamondBracket> {
    if !(0.0..=0.5).contains(&p_eq) {
        return Err(Error::validation(format!(
            "equal mixing probability {p_eq} outside [0, 0.5]"
        )));
    }
    if n < 2 {
        return Err(Error::validation(format!(
            "dimension must be >= 2, got {n}"
        )));
    }
    let nn = (n * n) as f64;
    Ok(DiamondBracket {
        lower: p_eq / (nn * (1.0 - p_eq)),
        upper: (4.0 * p_eq).min(2.0),
    })
}

/// Upper bound `p log₂ n` on the key rate when `F = (1 - p) E + p E_Δ`.
pub fn qkd_rate_bound(p: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("probability {p} outside [0, 1]")));
    }
    if n < 2 {
        return Err(Error::validation(format!(
            "dimension must be >= 2, got {n}"
        )));
    }
    Ok(p * (n as f64).log2())
}

/// Expands `(E₂′∘E₁′)` into `(1 - p) E₂∘E₁ + p E_Δ` with the product-mode
/// weight `p = p₁ + p₂ - p₁p₂`; returns the Choi matrix of the whole mixture.
pub fn composed_mixture_choi(
    first: (&KrausChannel, &KrausChannel, f64),
    second: (&KrausChannel, &KrausChannel, f64),
) -> Result<ComplexMatrix> {
    use crate::channels::compose;
    let (c1, h1, p1) = first;
    let (c2, h2, p2) = second;
    let terms = [
        ((1.0 - p1) * (1.0 - p2), compose(c2, c1)?),
        (p1 * (1.0 - p2), compose(c2, h1)?),
        ((1.0 - p1) * p2, compose(h2, c1)?),
        (p1 * p2, compose(h2, h1)?),
    ];
    let n = c1.dim();
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for (w, ch) in &terms {
        out += &ch.choi().matrix().scale(*w);
    }
    Ok(out)
}
