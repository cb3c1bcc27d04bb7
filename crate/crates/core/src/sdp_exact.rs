//! Exact optimum of the reduced problem at fixed β:
//!
//! ```text
//! minimize α  over Hermitian X
//! subject to  Δ₊ + X ⪰ 0,  Δ₋ + X ⪰ 0,  T(Δ₊ + X) = α I
//! ```
//!
//! Working with `Y = Δ₊ + X`, the feasible set at a given α is the
//! intersection of the PSD cone, the shifted cone `Y ⪰ Δ₊ - Δ₋`, and the
//! affine set `T(Y) = α I`. Feasibility is decided by Dykstra's alternating
//! projections and α is bisected between the analytic bounds.
//!
//! Every accepted point is turned into an exact certificate: if `Y` meets the
//! affine constraint and both cones up to `r`, then `Y + r I` meets all of
//! them at `α + n r`, because `T(I_{n²}) = n I`.

use rayon::prelude::*;

use crate::channels::{channel_sum, channel_sum_adjoint, ChoiRep, KrausChannel};
use crate::disguise::{
    alpha_bounds, alpha_to_pq, delta_split, AlphaBounds, DeltaSplit, ProfileCurve, TradeoffPoint,
};
use crate::ipm;
use crate::matkit::{self, ComplexMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WarmStart {
    /// Start each feasibility run from the best certificate found so far.
    #[default]
    Auto,
    /// Start from `Y = Δ₊`.
    None,
}

impl std::str::FromStr for WarmStart {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(WarmStart::Auto),
            "none" => Ok(WarmStart::None),
            other => Err(Error::validation(format!("unknown warm start '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Primal-dual interior point on the reduced problem.
    #[default]
    InteriorPoint,
    /// Bisection on α with Dykstra feasibility runs.
    Bisection,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ipm" | "interior-point" => Ok(SolverMethod::InteriorPoint),
            "bisection" => Ok(SolverMethod::Bisection),
            other => Err(Error::validation(format!(
                "unknown solver method '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Target width of the certified bracket on α.
    pub tol: f64,
    /// Largest constraint violation accepted as feasible.
    pub feas_tol: f64,
    /// Iteration cap of one feasibility run.
    pub max_iter: usize,
    pub warm_start: WarmStart,
    /// Window over which the residual must improve.
    pub plateau_window: usize,
    /// Relative improvement per window below which a run is declared infeasible.
    pub plateau_rel: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: SolverMethod::InteriorPoint,
            tol: 1e-6,
            feas_tol: 1e-8,
            max_iter: 20_000,
            warm_start: WarmStart::Auto,
            plateau_window: 500,
            plateau_rel: 1e-12,
        }
    }
}

/// Everything the solver needs about one `(E, F, β)` instance.
#[derive(Clone, Debug)]
pub struct ExactProblem {
    pub ce: ChoiRep,
    pub cf: ChoiRep,
    pub beta: f64,
    pub split: DeltaSplit,
    pub bounds: AlphaBounds,
    /// `Δ₊ - Δ₋`.
    shift: ComplexMatrix,
}

impl ExactProblem {
    pub fn new(ce: ChoiRep, cf: ChoiRep, beta: f64) -> Result<Self> {
        let split = delta_split(&ce, &cf, beta)?;
        let bounds = alpha_bounds(&split.plus, ce.dim())?;
        let shift = &split.plus - &split.minus;
        Ok(ExactProblem {
            ce,
            cf,
            beta,
            split,
            bounds,
            shift,
        })
    }

    pub fn from_channels(e: &KrausChannel, f: &KrausChannel, beta: f64) -> Result<Self> {
        Self::new(e.choi(), f.choi(), beta)
    }

    pub fn dim(&self) -> usize {
        self.ce.dim()
    }

    pub fn plus(&self) -> &ComplexMatrix {
        &self.split.plus
    }

    pub fn minus(&self) -> &ComplexMatrix {
        &self.split.minus
    }

    /// Projection onto `T(Y) = α I`.
    fn project_affine(&self, y: &ComplexMatrix, alpha: f64) -> ComplexMatrix {
        let n = self.dim();
        let t = channel_sum(y).expect("n² x n² iterate");
        let gap = (&ComplexMatrix::identity(n).scale(alpha) - &t).scale(1.0 / n as f64);
        (y + &channel_sum_adjoint(&gap)).hermitian_part()
    }

    /// Largest cone violation of an affine-feasible iterate.
    fn cone_violation(&self, y: &ComplexMatrix) -> Result<f64> {
        let a = matkit::min_eigenvalue(y)?;
        let b = matkit::min_eigenvalue(&(y - &self.shift))?;
        Ok((-a).max(-b).max(0.0))
    }

    /// Lower bound on the optimum from a density matrix `z`.
    ///
    /// With `W = zᵗ ⊗ I`, every `0 ⪯ B ⪯ W` satisfies `α = ⟨W, Y⟩ ≥ ⟨B, Y⟩
    /// ≥ ⟨B, Δ₊ - Δ₋⟩` for any feasible `Y`; the best such `B` gives the
    /// positive trace of `W^½ (Δ₊ - Δ₋) W^½`.
    pub fn dual_bound(&self, z: &ComplexMatrix) -> Result<f64> {
        let n = self.dim();
        if z.rows() != n || z.cols() != n {
            return Err(Error::validation("dual matrix has the wrong shape"));
        }
        let z = matkit::project_psd(&z.hermitian_part())?;
        let tr = z.trace().re;
        if !(tr > 0.0) {
            return Ok(0.0);
        }
        let root = matkit::psd_sqrt(&z.scale(1.0 / tr))?;
        let w = channel_sum_adjoint(&root);
        let m = w.matmul(&self.shift).matmul(&w).hermitian_part();
        let eig = matkit::hermitian_eig(&m)?;
        Ok(eig.eigenvalues.iter().filter(|&&l| l > 0.0).sum())
    }

    /// Turns an affine-feasible `y` at `alpha` into an exact certificate.
    fn certify(&self, y: &ComplexMatrix, alpha: f64) -> Result<Certificate> {
        let y = self.project_affine(y, alpha);
        let r = self.cone_violation(&y)?;
        let n = self.dim();
        let y = if r > 0.0 {
            &y + &ComplexMatrix::identity(n * n).scale(r)
        } else {
            y
        };
        Ok(Certificate {
            alpha: alpha + n as f64 * r,
            y,
            repair: r,
        })
    }

    /// Feasible points from the two upper-bound constructions.
    fn initial_certificate(&self) -> Result<Certificate> {
        let n = self.dim();
        let t = channel_sum(self.plus())?.hermitian_part();
        let norm = matkit::spectral_norm(&t);
        let mut best = {
            // X = C_E - Δ₊ makes Y = C_E, feasible at α = 1.
            self.certify(self.ce.matrix(), 1.0)?
        };
        if norm <= 1.0 {
            // X = |D₀⟩⟨D₀| with D₀†D₀ = ‖T(Δ₊)‖ I - T(Δ₊).
            let m = &ComplexMatrix::identity(n).scale(norm) - &t;
            let d0 = matkit::psd_sqrt(&m.hermitian_part())?;
            let v = d0.vec();
            let x = ComplexMatrix::outer(&v, &v);
            let cert = self.certify(&(self.plus() + &x), norm)?;
            if cert.alpha < best.alpha {
                best = cert;
            }
        }
        Ok(best)
    }
}

#[derive(Clone, Debug)]
struct Certificate {
    alpha: f64,
    y: ComplexMatrix,
    repair: f64,
}

/// Result of one feasibility run.
#[derive(Clone, Debug)]
pub struct FeasibilityOutcome {
    pub feasible: bool,
    /// Best iterate found (`Y = Δ₊ + X`), affine-feasible at the tested α.
    pub y: ComplexMatrix,
    /// Cone violation of `y`.
    pub residual: f64,
    pub iterations: usize,
}

/// Residual is evaluated every this many iterations.
const CHECK_EVERY: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RunStatus {
    Feasible,
    Plateau,
    /// A dual bound above the tested α proves infeasibility.
    Refuted,
    Capped,
}

#[derive(Clone, Debug)]
struct Run {
    status: RunStatus,
    y: ComplexMatrix,
    residual: f64,
    iterations: usize,
    /// Best dual lower bound seen during the run.
    lower: f64,
}

/// Dykstra's alternating projections at fixed `alpha`; stops once the cone
/// violation drops to `accept`, on a residual plateau, or at the cap.
fn run_dykstra(
    problem: &ExactProblem,
    alpha: f64,
    start: Option<&ComplexMatrix>,
    accept: f64,
    opts: &SolverOptions,
) -> Result<Run> {
    if !(alpha >= 0.0) {
        return Err(Error::validation(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    let big = problem.dim() * problem.dim();
    let mut x = match start {
        Some(s) => {
            if s.rows() != big || s.cols() != big {
                return Err(Error::validation("warm start has the wrong shape"));
            }
            s.hermitian_part()
        }
        None => problem.plus().clone(),
    };
    x = problem.project_affine(&x, alpha);
    let mut best_r = problem.cone_violation(&x)?;
    let mut best_y = x.clone();
    let mut lower = 0.0f64;
    let done = |status, y, residual, iterations, lower| {
        Ok(Run {
            status,
            y,
            residual,
            iterations,
            lower,
        })
    };
    if best_r <= accept {
        return done(RunStatus::Feasible, best_y, best_r, 0, lower);
    }

    let zero = ComplexMatrix::zeros(big, big);
    let (mut inc_psd, mut inc_shift) = (zero.clone(), zero);
    let window = opts.plateau_window.max(CHECK_EVERY);
    let mut window_best = best_r;

    for it in 1..=opts.max_iter {
        let t = &x + &inc_psd;
        let y = matkit::project_psd(&t)?;
        inc_psd = &t - &y;

        let t = &y + &inc_shift;
        let y = &matkit::project_psd(&(&t - &problem.shift))? + &problem.shift;
        inc_shift = &t - &y;

        x = problem.project_affine(&y, alpha);
        if it % CHECK_EVERY != 0 && it != opts.max_iter {
            continue;
        }
        let r = problem.cone_violation(&x)?;
        if r < best_r {
            best_r = r;
            best_y = x.clone();
        }
        if best_r <= accept {
            return done(RunStatus::Feasible, best_y, best_r, it, lower);
        }
        // The Dykstra corrections approximate the multipliers of the two
        // cones; their channel sum is a candidate for the dual density.
        let z = channel_sum(&(-&(&inc_psd + &inc_shift)))?;
        lower = lower.max(problem.dual_bound(&z)?);
        if lower > alpha {
            return done(RunStatus::Refuted, best_y, best_r, it, lower);
        }
        if it % window == 0 {
            if window_best - best_r <= opts.plateau_rel * window_best {
                return done(RunStatus::Plateau, best_y, best_r, it, lower);
            }
            window_best = best_r;
        }
    }
    done(RunStatus::Capped, best_y, best_r, opts.max_iter, lower)
}

/// Decides whether some Hermitian `X` satisfies the constraints at `alpha`.
///
/// Feasible means a `Y = Δ₊ + X` with cone violation at most `feas_tol` was
/// found; infeasible means the residual stalled above it. Returns
/// [`Error::Inconclusive`] when the iteration cap is reached while the
/// residual is still improving.
pub fn feasibility(
    problem: &ExactProblem,
    alpha: f64,
    start: Option<&ComplexMatrix>,
    opts: &SolverOptions,
) -> Result<FeasibilityOutcome> {
    let run = run_dykstra(problem, alpha, start, opts.feas_tol, opts)?;
    match run.status {
        RunStatus::Capped => Err(Error::Inconclusive {
            iterations: run.iterations,
            residual: run.residual,
        }),
        status => Ok(FeasibilityOutcome {
            feasible: status == RunStatus::Feasible,
            y: run.y,
            residual: run.residual,
            iterations: run.iterations,
        }),
    }
}

/// Harmonizing channels recovered from a feasible `Y`.
#[derive(Clone, Debug)]
pub struct Harmonizers {
    /// `C_{F_Δ} = Y / α`; absent when `α = 0` (no mixing of F needed).
    pub choi_f_delta: Option<ChoiRep>,
    /// `C_{E_Δ} = (Y - Δ₊ + Δ₋) / (α + β - 1)`; absent when `p = 0`.
    pub choi_e_delta: Option<ChoiRep>,
    pub point: TradeoffPoint,
    /// `max|(1-p)C_E + p C_{E_Δ} - (1-q)C_F - q C_{F_Δ}|`.
    pub mixture_defect: f64,
}

const DEGENERATE_TOL: f64 = 1e-12;

pub fn recover_harmonizers(
    problem: &ExactProblem,
    y: &ComplexMatrix,
    alpha: f64,
) -> Result<Harmonizers> {
    let beta = problem.beta;
    let point = alpha_to_pq(alpha, beta)?;
    let e_part = y - &problem.shift;

    let choi_f_delta = if alpha > DEGENERATE_TOL {
        Some(ChoiRep::from_matrix(y.scale(1.0 / alpha).hermitian_part())?)
    } else {
        None
    };
    let s = alpha + beta - 1.0;
    let choi_e_delta = if s > DEGENERATE_TOL {
        Some(ChoiRep::from_matrix(
            e_part.scale(1.0 / s).hermitian_part(),
        )?)
    } else if e_part.max_abs() > 1e-9 {
        return Err(Error::numerical(
            "α + β - 1 vanishes but Δ₋ + X does not",
            e_part.max_abs(),
        ));
    } else {
        None
    };

    let mut lhs = problem.ce.matrix().scale(1.0 - point.p);
    if let Some(c) = &choi_e_delta {
        lhs += &c.matrix().scale(point.p);
    }
    let mut rhs = problem.cf.matrix().scale(1.0 - point.q);
    if let Some(c) = &choi_f_delta {
        rhs += &c.matrix().scale(point.q);
    }
    Ok(Harmonizers {
        choi_f_delta,
        choi_e_delta,
        point,
        mixture_defect: lhs.max_abs_diff(&rhs),
    })
}

#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub alpha_hat: f64,
    pub beta: f64,
    pub bounds: AlphaBounds,
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
    pub harmonizers: Harmonizers,
    /// Lower end of the final bracket on the optimum.
    pub lower_bound: f64,
    /// Cone violation of the returned `Y` (rounding level after repair).
    pub residual: f64,
    /// Interior-point or Dykstra iterations, summed.
    pub iterations: usize,
    /// Interior-point solves or bisection midpoints.
    pub bisection_steps: usize,
    /// Bisection midpoints where the feasibility run hit its cap.
    pub inconclusive_steps: usize,
}

impl ExactSolution {
    pub fn point(&self) -> TradeoffPoint {
        self.harmonizers.point
    }

    pub fn trace_x(&self) -> f64 {
        self.x.trace().re
    }
}

struct Search {
    best: Certificate,
    /// Certified lower bound, except after inconclusive bisection steps.
    lo: f64,
    iterations: usize,
    steps: usize,
    inconclusive: usize,
}

fn interior_point(problem: &ExactProblem, opts: &SolverOptions, search: &mut Search) -> Result<()> {
    let n = problem.dim();
    // Strictly feasible start: the initial certificate pushed into the interior.
    let y0 = &search.best.y + &ComplexMatrix::identity(n * n).scale(0.1);
    let settings = ipm::IpmSettings {
        gap_tol: 1e-3 * opts.tol,
        max_iter: 100,
    };
    let out = ipm::solve(n, &problem.shift, &y0, &settings)?;
    search.iterations += out.iterations;
    search.steps += 1;
    let cert = problem.certify(&out.y, out.alpha)?;
    if cert.alpha < search.best.alpha {
        search.best = cert;
    }
    let dual = problem.dual_bound(&channel_sum(&out.dual_sum)?)?;
    search.lo = search.lo.max(dual.min(search.best.alpha));
    log::trace!(
        "beta={} ipm alpha={:.12} gap={:.3e} dual={:.12} iterations={}",
        problem.beta,
        out.alpha,
        out.gap,
        dual,
        out.iterations
    );
    if search.best.alpha - search.lo > opts.tol {
        // Early stop left the bracket open; finish by bisection from here.
        bisect(problem, opts, search)?;
    }
    Ok(())
}

fn bisect(problem: &ExactProblem, opts: &SolverOptions, search: &mut Search) -> Result<()> {
    let n = problem.dim();
    // A run may stop as soon as its repaired certificate lands within a
    // quarter tolerance of the midpoint.
    let accept = opts.feas_tol.max(0.25 * opts.tol / n as f64);
    while search.best.alpha - search.lo > opts.tol {
        let hi = search.best.alpha;
        let mid = 0.5 * (search.lo + hi);
        let start = match opts.warm_start {
            WarmStart::Auto => {
                Some(&search.best.y + &ComplexMatrix::identity(n * n).scale((mid - hi) / n as f64))
            }
            WarmStart::None => None,
        };
        search.steps += 1;
        let run = run_dykstra(problem, mid, start.as_ref(), accept, opts)?;
        search.iterations += run.iterations;
        let cert = problem.certify(&run.y, mid)?;
        if cert.alpha < hi {
            search.best = cert;
        }
        search.lo = search.lo.max(run.lower.min(search.best.alpha));
        log::trace!(
            "beta={} mid={mid:.10} status={:?} residual={:.3e} dual={:.10} iterations={} hi={:.10}",
            problem.beta,
            run.status,
            run.residual,
            run.lower,
            run.iterations,
            search.best.alpha
        );
        match run.status {
            RunStatus::Feasible | RunStatus::Refuted => {}
            RunStatus::Plateau => search.lo = search.lo.max(mid),
            RunStatus::Capped => {
                search.inconclusive += 1;
                // No verdict. Unless the certificate moved at least halfway
                // to the midpoint, give up on the lower half so the bracket
                // keeps shrinking geometrically.
                if search.best.alpha > 0.5 * (hi + mid) {
                    search.lo = search.lo.max(mid);
                }
            }
        }
    }
    Ok(())
}

/// Minimizes α between the analytic bounds.
///
/// The returned `α̂` always carries an exact feasibility certificate, so it
/// can only err upward. `lower_bound` is a dual certificate below the
/// optimum; the bracket is certified unless bisection had inconclusive steps.
pub fn solve_alpha(problem: &ExactProblem, opts: &SolverOptions) -> Result<ExactSolution> {
    if !(opts.tol > 0.0) || !(opts.feas_tol > 0.0) {
        return Err(Error::validation("solver tolerances must be positive"));
    }
    let bounds = problem.bounds;
    let initial = if bounds.tight {
        problem.certify(problem.plus(), bounds.lower)?
    } else {
        problem.initial_certificate()?
    };
    let mut search = Search {
        best: initial,
        lo: bounds.lower,
        iterations: 0,
        steps: 0,
        inconclusive: 0,
    };
    if !bounds.tight {
        match opts.method {
            SolverMethod::InteriorPoint => interior_point(problem, opts, &mut search)?,
            SolverMethod::Bisection => bisect(problem, opts, &mut search)?,
        }
    }
    let Search {
        best,
        lo,
        iterations,
        steps,
        inconclusive,
    } = search;
    log::debug!(
        "beta={} alpha_hat={} bounds=[{}, {}] steps={} iterations={} repair={:e}",
        problem.beta,
        best.alpha,
        bounds.lower,
        bounds.upper,
        steps,
        iterations,
        best.repair
    );

    let residual = problem.cone_violation(&best.y)?;
    if !(residual <= opts.feas_tol) || !best.alpha.is_finite() {
        return Err(Error::numerical(
            format!("certificate at beta={} failed verification", problem.beta),
            residual,
        ));
    }
    let harmonizers = recover_harmonizers(problem, &best.y, best.alpha)?;
    Ok(ExactSolution {
        alpha_hat: best.alpha,
        beta: problem.beta,
        bounds,
        x: &best.y - problem.plus(),
        y: best.y,
        harmonizers,
        lower_bound: lo,
        residual,
        iterations,
        bisection_steps: steps,
        inconclusive_steps: inconclusive,
    })
}

/// Convenience wrapper for a channel pair.
pub fn solve_channels(
    e: &KrausChannel,
    f: &KrausChannel,
    beta: f64,
    opts: &SolverOptions,
) -> Result<ExactSolution> {
    solve_alpha(&ExactProblem::from_channels(e, f, beta)?, opts)
}

/// Fills `alpha_exact` for every sample of a profile.
pub fn attach_exact(
    profile: &mut ProfileCurve,
    ce: &ChoiRep,
    cf: &ChoiRep,
    opts: &SolverOptions,
) -> Result<()> {
    let solved = profile
        .samples
        .par_iter()
        .map(|s| {
            ExactProblem::new(ce.clone(), cf.clone(), s.beta)
                .and_then(|p| solve_alpha(&p, opts))
                .map(|sol| sol.alpha_hat)
                .map_err(|e| match e {
                    Error::Numerical { message, residual } => Error::Numerical {
                        message: format!("beta={}: {message}", s.beta),
                        residual,
                    },
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    for (s, a) in profile.samples.iter_mut().zip(solved) {
        s.alpha_exact = Some(a);
    }
    Ok(())
}
