//! Trade-off profiles between two channels.
//!
//! For a fixed ratio `β = (1 - q) / (1 - p)` the Choi difference
//! `C_E - β C_F` is split into orthogonal PSD parts `Δ₊ - Δ₋`, and the
//! optimal `α = q / (1 - p)` is bracketed by
//!
//! ```text
//! Tr T(Δ₊) / n  ≤  α  ≤  min(‖T(Δ₊)‖, 1)
//! ```
//!
//! Each bound maps back to a point on the β line through
//! `p = 1 - 1/(α + β)`, `q = α/(α + β)`. Sweeping β gives the lower and
//! upper curves.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{channel_sum, ChoiRep, KrausChannel};
use crate::io::fmt_sig;
use crate::matkit::{self, ComplexMatrix, DEFAULT_ZERO_TOL};
use crate::{Error, Result};

/// `T(Δ₊)` within this distance of a multiple of `I` makes the bounds coincide.
pub const TIGHT_TOL: f64 = 1e-8;

pub const DEFAULT_BETA_MIN: f64 = 1e-2;
pub const DEFAULT_BETA_MAX: f64 = 1e2;
pub const DEFAULT_BETA_COUNT: usize = 400;

/// A pair of mixing probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub p: f64,
    pub q: f64,
}

impl TradeoffPoint {
    pub const fn new(p: f64, q: f64) -> Self {
        TradeoffPoint { p, q }
    }
}

/// `count` log-spaced values on `[lo, hi]`, both ends included.
pub fn log_beta_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::validation(format!(
            "invalid beta range [{lo}, {hi}]"
        )));
    }
    match count {
        0 => Err(Error::validation("beta grid needs at least one point")),
        1 => Ok(vec![lo]),
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (count - 1) as f64;
            Ok((0..count)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == count - 1 {
                        hi
                    } else {
                        (a + step * k as f64).exp()
                    }
                })
                .collect())
        }
    }
}

pub fn default_beta_grid() -> Vec<f64> {
    log_beta_grid(DEFAULT_BETA_MIN, DEFAULT_BETA_MAX, DEFAULT_BETA_COUNT)
        .expect("default grid is valid")
}

/// `C_E - β C_F = Δ₊ - Δ₋`.
#[derive(Clone, Debug)]
pub struct DeltaSplit {
    pub beta: f64,
    pub plus: ComplexMatrix,
    pub minus: ComplexMatrix,
    /// Positive / negative eigenvalue counts of `C_E - β C_F`.
    pub inertia: (usize, usize),
    /// `‖C_E - β C_F‖`.
    pub norm: f64,
}

pub fn delta_split(ce: &ChoiRep, cf: &ChoiRep, beta: f64) -> Result<DeltaSplit> {
    delta_split_with_tol(ce, cf, beta, DEFAULT_ZERO_TOL)
}

pub fn delta_split_with_tol(
    ce: &ChoiRep,
    cf: &ChoiRep,
    beta: f64,
    zero_tol: f64,
) -> Result<DeltaSplit> {
    if ce.dim() != cf.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {} vs {}",
            ce.dim(),
            cf.dim()
        )));
    }
    check_beta(beta)?;
    let diff = ce.matrix() - &cf.matrix().scale(beta);
    let split = matkit::split_pos_neg(&diff, zero_tol)?;
    Ok(DeltaSplit {
        beta,
        norm: split.eigen.spectral_radius(),
        plus: split.plus,
        minus: split.minus,
        inertia: split.inertia,
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::validation(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaBounds {
    pub lower: f64,
    pub upper: f64,
    pub tight: bool,
}

/// Analytic bracket on the optimal α from `Δ₊` alone.
pub fn alpha_bounds(plus: &ComplexMatrix, n: usize) -> Result<AlphaBounds> {
    if plus.rows() != n * n || plus.cols() != n * n {
        return Err(Error::validation(format!(
            "Δ₊ is {}x{}, expected {}x{}",
            plus.rows(),
            plus.cols(),
            n * n,
            n * n
        )));
    }
    let t = channel_sum(plus)?.hermitian_part();
    let mean = t.trace().re / n as f64;
    let lower = mean.max(0.0);
    let norm = matkit::spectral_norm(&t);
    let upper = norm.min(1.0);
    let deviation = matkit::spectral_norm(&(&t - &ComplexMatrix::identity(n).scale(mean)));
    Ok(AlphaBounds {
        lower,
        upper,
        tight: deviation <= TIGHT_TOL,
    })
}

/// Relative size of `α + β - 1` treated as zero.
pub const PQ_SNAP_TOL: f64 = 1e-12;

/// Maps α on the β line to `(p, q)`. When `α + β < 1` (only reachable
/// through rounding) the point is clamped to `p = 0, q = 1 - β`.
pub fn alpha_to_pq(alpha: f64, beta: f64) -> Result<TradeoffPoint> {
    check_beta(beta)?;
    if !(alpha >= -1e-12) || !alpha.is_finite() {
        return Err(Error::validation(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    let alpha = alpha.max(0.0);
    let s = alpha + beta;
    // `α + β - 1` at the noise level of the eigensolvers means `p = 0`; left
    // alone it scatters points around the q axis and confuses the hull.
    let excess = s - 1.0;
    if excess <= PQ_SNAP_TOL * s {
        return Ok(TradeoffPoint::new(0.0, (1.0 - beta).max(0.0)));
    }
    Ok(TradeoffPoint::new(excess / s, alpha / s))
}

/// One β of the profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaSample {
    pub beta: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub tight: bool,
    pub lower: TradeoffPoint,
    pub upper: TradeoffPoint,
    /// Inertia of `C_E - β C_F`, used for cusp detection.
    pub inertia: (usize, usize),
    /// Exact optimum, when solved.
    pub alpha_exact: Option<f64>,
}

/// Evaluates the bracket at a single β.
pub fn sample_beta(ce: &ChoiRep, cf: &ChoiRep, beta: f64) -> Result<BetaSample> {
    let split = delta_split(ce, cf, beta)?;
    let bounds = alpha_bounds(&split.plus, ce.dim())?;
    Ok(BetaSample {
        beta,
        alpha_lower: bounds.lower,
        alpha_upper: bounds.upper,
        tight: bounds.tight,
        lower: alpha_to_pq(bounds.lower, beta)?,
        upper: alpha_to_pq(bounds.upper, beta)?,
        inertia: split.inertia,
        alpha_exact: None,
    })
}

/// Lower/upper trade-off curves over a β grid.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileCurve {
    pub samples: Vec<BetaSample>,
    pub lower_points: Vec<TradeoffPoint>,
    pub upper_points: Vec<TradeoffPoint>,
    /// Lower-left convex hull of the upper points and the `q = 1 - p` chord.
    pub upper_hull_points: Vec<TradeoffPoint>,
}

/// A slope discontinuity of the lower curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cusp {
    pub beta_before: f64,
    pub beta_after: f64,
    /// Eigenvalue sign changes across the interval.
    pub multiplicity: usize,
    /// Intersection of the lower-curve segments on either side, when both
    /// exist and are not parallel.
    pub location: Option<TradeoffPoint>,
}

impl ProfileCurve {
    pub fn from_samples(samples: Vec<BetaSample>) -> Result<Self> {
        let lower_points = assemble_curve(samples.iter().map(|s| s.lower));
        let upper_points = assemble_curve(samples.iter().map(|s| s.upper));
        let upper_hull_points = if upper_points.is_empty() {
            Vec::new()
        } else {
            upper_hull(&upper_points)?
        };
        Ok(ProfileCurve {
            samples,
            lower_points,
            upper_points,
            upper_hull_points,
        })
    }

    /// Number of eigenvalue sign changes of `C_E - β C_F` across the grid.
    pub fn cusp_count(&self) -> usize {
        self.cusps().iter().map(|c| c.multiplicity).sum()
    }

    pub fn cusps(&self) -> Vec<Cusp> {
        let s = &self.samples;
        let mut out = Vec::new();
        for i in 1..s.len() {
            let (p0, n0) = s[i - 1].inertia;
            let (p1, n1) = s[i].inertia;
            let changes = p0.abs_diff(p1).max(n0.abs_diff(n1));
            if changes == 0 {
                continue;
            }
            let location = if i >= 2 && i + 1 < s.len() {
                line_intersection(s[i - 2].lower, s[i - 1].lower, s[i].lower, s[i + 1].lower)
            } else {
                None
            };
            out.push(Cusp {
                beta_before: s[i - 1].beta,
                beta_after: s[i].beta,
                multiplicity: changes,
                location,
            });
        }
        out
    }

    /// Writes `beta,alpha_lo,alpha_hi,p_lo,q_lo,p_hi,q_hi,tight`, plus an
    /// `alpha_exact` column when any sample carries one.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let exact = self.samples.iter().any(|s| s.alpha_exact.is_some());
        write!(w, "beta,alpha_lo,alpha_hi,p_lo,q_lo,p_hi,q_hi,tight")?;
        if exact {
            write!(w, ",alpha_exact")?;
        }
        writeln!(w)?;
        for s in &self.samples {
            write!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt_sig(s.beta, 12),
                fmt_sig(s.alpha_lower, 12),
                fmt_sig(s.alpha_upper, 12),
                fmt_sig(s.lower.p, 12),
                fmt_sig(s.lower.q, 12),
                fmt_sig(s.upper.p, 12),
                fmt_sig(s.upper.q, 12),
                s.tight
            )?;
            if exact {
                match s.alpha_exact {
                    Some(a) => write!(w, ",{}", fmt_sig(a, 12))?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Writes the hull as `p,q` rows.
    pub fn write_hull_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_points_csv(&self.upper_hull_points, w)
    }
}

pub fn write_points_csv<W: Write>(points: &[TradeoffPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "p,q")?;
    for pt in points {
        writeln!(w, "{},{}", fmt_sig(pt.p, 12), fmt_sig(pt.q, 12))?;
    }
    Ok(())
}

fn line_intersection(
    a0: TradeoffPoint,
    a1: TradeoffPoint,
    b0: TradeoffPoint,
    b1: TradeoffPoint,
) -> Option<TradeoffPoint> {
    let (dx1, dy1) = (a1.p - a0.p, a1.q - a0.q);
    let (dx2, dy2) = (b1.p - b0.p, b1.q - b0.q);
    let den = dx1 * dy2 - dy1 * dx2;
    let scale = (dx1.hypot(dy1) * dx2.hypot(dy2)).max(f64::MIN_POSITIVE);
    if den.abs() <= 1e-12 * scale {
        return None;
    }
    let t = ((b0.p - a0.p) * dy2 - (b0.q - a0.q) * dx2) / den;
    Some(TradeoffPoint::new(a0.p + t * dx1, a0.q + t * dy1))
}

/// Sorts by `p` and keeps the smallest `q` for repeated `p`.
pub fn assemble_curve(points: impl IntoIterator<Item = TradeoffPoint>) -> Vec<TradeoffPoint> {
    let mut pts: Vec<TradeoffPoint> = points.into_iter().collect();
    pts.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.q.total_cmp(&b.q)));
    pts.dedup_by(|later, first| later.p == first.p);
    pts
}

/// Traces the profile of `(E, F)` over `beta_grid`; samples are evaluated on
/// the current rayon pool and kept in grid order.
pub fn trace_profile(
    e: &KrausChannel,
    f: &KrausChannel,
    beta_grid: &[f64],
) -> Result<ProfileCurve> {
    trace_profile_choi(&e.choi(), &f.choi(), beta_grid)
}

pub fn trace_profile_choi(ce: &ChoiRep, cf: &ChoiRep, beta_grid: &[f64]) -> Result<ProfileCurve> {
    if ce.dim() != cf.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {} vs {}",
            ce.dim(),
            cf.dim()
        )));
    }
    for &b in beta_grid {
        check_beta(b)?;
    }
    let samples = beta_grid
        .par_iter()
        .map(|&beta| sample_beta(ce, cf, beta))
        .collect::<Result<Vec<_>>>()?;
    ProfileCurve::from_samples(samples)
}

/// Lower-left convex boundary of `points ∪ {(0,1), (1,0)}`, ordered by `p`.
pub fn upper_hull(points: &[TradeoffPoint]) -> Result<Vec<TradeoffPoint>> {
    if points.is_empty() {
        return Err(Error::validation("hull of an empty point set"));
    }
    let pts = assemble_curve(
        points
            .iter()
            .copied()
            .chain([TradeoffPoint::new(0.0, 1.0), TradeoffPoint::new(1.0, 0.0)]),
    );
    let mut hull: Vec<TradeoffPoint> = Vec::with_capacity(pts.len());
    for pt in pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let (u, v) = ((a.p - o.p, a.q - o.q), (pt.p - o.p, pt.q - o.q));
            let cross = u.0 * v.1 - u.1 * v.0;
            // Angle tolerance: drops `a` only when it sits within rounding of the chord.
            if cross <= 1e-14 * u.0.hypot(u.1) * v.0.hypot(v.1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    Ok(hull)
}

/// Interpolated `q` of a piecewise-linear curve ordered by `p`; `None`
/// outside its `p` range.
pub fn interpolate_q(curve: &[TradeoffPoint], p: f64) -> Option<f64> {
    let first = curve.first()?;
    let last = curve.last()?;
    if p < first.p || p > last.p {
        return None;
    }
    for w in curve.windows(2) {
        if p >= w[0].p && p <= w[1].p {
            let span = w[1].p - w[0].p;
            if span == 0.0 {
                return Some(w[0].q.min(w[1].q));
            }
            let t = (p - w[0].p) / span;
            return Some(w[0].q + t * (w[1].q - w[0].q));
        }
    }
    Some(last.q)
}

/// Extent of a flat segment of a curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    pub from: f64,
    pub to: f64,
}

impl Plateau {
    pub fn extent(&self) -> f64 {
        self.to - self.from
    }
}

/// Range of `p` over which `q ≤ tol`.
pub fn q_zero_plateau(points: &[TradeoffPoint], tol: f64) -> Option<Plateau> {
    plateau(points.iter().filter(|pt| pt.q <= tol).map(|pt| pt.p))
}

/// Range of `q` over which `p ≤ tol`.
pub fn p_zero_plateau(points: &[TradeoffPoint], tol: f64) -> Option<Plateau> {
    plateau(points.iter().filter(|pt| pt.p <= tol).map(|pt| pt.q))
}

fn plateau(values: impl Iterator<Item = f64>) -> Option<Plateau> {
    values.fold(None, |acc, v| match acc {
        None => Some(Plateau { from: v, to: v }),
        Some(pl) => Some(Plateau {
            from: pl.from.min(v),
            to: pl.to.max(v),
        }),
    })
}

/// Closed-form optimal curve for bit-flip(`a`) versus phase-flip(`b`).
///
/// On the β line the Choi difference is
/// `(1-a-β+bβ)|e₁⟩⟨e₁| - bβ|e₂⟩⟨e₂| + a|e₃⟩⟨e₃|`, giving two linear
/// branches that meet at a single cusp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlipProfile {
    pub a: f64,
    pub b: f64,
}

/// One branch of [`FlipProfile`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipBranch {
    /// `p = b (1 - q)`, valid while `1 - a - β + bβ ≥ 0`.
    PFromQ,
    /// `q = a (1 - p)`, valid while `1 - a - β + bβ < 0`.
    QFromP,
}

pub fn analytic_flip_profile(a: f64, b: f64) -> Result<FlipProfile> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::validation(format!("{name} = {v} outside [0, 1]")));
        }
    }
    Ok(FlipProfile { a, b })
}

impl FlipProfile {
    /// Branches that contribute a segment of positive length. Degenerate
    /// parameters (`a` or `b` in {0, 1}) push the cusp onto the square's
    /// boundary and leave a single branch.
    pub fn branches(&self) -> Vec<FlipBranch> {
        let FlipProfile { a, b } = *self;
        let mut out = Vec::with_capacity(2);
        if b > 0.0 && a < 1.0 {
            out.push(FlipBranch::PFromQ);
        }
        if a > 0.0 && b < 1.0 {
            out.push(FlipBranch::QFromP);
        }
        if out.is_empty() {
            // a = b = 0 (identical) or a = b = 1: both branches collapse onto
            // the same set; report the first.
            out.push(FlipBranch::PFromQ);
        }
        out
    }

    pub fn branch_for_beta(&self, beta: f64) -> FlipBranch {
        if 1.0 - self.a - beta + self.b * beta >= 0.0 {
            FlipBranch::PFromQ
        } else {
            FlipBranch::QFromP
        }
    }

    /// Optimal α on the β line.
    pub fn alpha(&self, beta: f64) -> f64 {
        match self.branch_for_beta(beta) {
            FlipBranch::PFromQ => 1.0 - beta + self.b * beta,
            FlipBranch::QFromP => self.a,
        }
    }

    /// Residual of the branch equation that governs `beta`.
    pub fn branch_residual(&self, beta: f64, pt: TradeoffPoint) -> f64 {
        match self.branch_for_beta(beta) {
            FlipBranch::PFromQ => pt.p - self.b * (1.0 - pt.q),
            FlipBranch::QFromP => pt.q - self.a * (1.0 - pt.p),
        }
    }

    /// Intersection of the two branches.
    pub fn cusp(&self) -> Option<TradeoffPoint> {
        let FlipProfile { a, b } = *self;
        let den = 1.0 - a * b;
        if den <= 0.0 {
            return None;
        }
        Some(TradeoffPoint::new(b * (1.0 - a) / den, a * (1.0 - b) / den))
    }

    /// Smallest achievable `q` at a given `p ∈ [0, 1]`.
    pub fn optimal_q(&self, p: f64) -> f64 {
        let FlipProfile { a, b } = *self;
        // b = 0 makes branch 1 the vertical line p = 0, which bounds nothing.
        let branch1 = if b > 0.0 {
            1.0 - p / b
        } else {
            f64::NEG_INFINITY
        };
        let branch2 = a * (1.0 - p);
        branch1.max(branch2).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bit_flip, phase_flip, random_channel, x_channel, KrausChannel};
    use crate::matkit::{re, C64};
    use proptest::prelude::*;

    fn ev(v: [f64; 4]) -> Vec<C64> {
        v.iter().map(|&x| re(x)).collect()
    }

    fn proj(v: [f64; 4]) -> ComplexMatrix {
        let v = ev(v);
        ComplexMatrix::outer(&v, &v)
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = default_beta_grid();
        assert_eq!(g.len(), 400);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[399], 1e2);
        let r0 = g[1] / g[0];
        assert!(g.windows(2).all(|w| ((w[1] / w[0]) - r0).abs() < 1e-12));
        assert!(log_beta_grid(0.0, 1.0, 3).is_err());
        assert!(log_beta_grid(1.0, 2.0, 0).is_err());
        assert_eq!(log_beta_grid(0.5, 0.5, 1).unwrap(), vec![0.5]);
    }

    #[test]
    fn delta_split_identical_channels() {
        let c = random_channel(2, 3, 1).unwrap().choi();
        let s = delta_split(&c, &c, 1.0).unwrap();
        assert_eq!(s.plus.max_abs(), 0.0);
        assert_eq!(s.minus.max_abs(), 0.0);
    }

    #[test]
    fn delta_split_bit_vs_phase() {
        // β = 1, a = 0.2, b = 0.4: (1-a-β+bβ) = 0.2, bβ = 0.4, a = 0.2.
        let ce = bit_flip(0.2).unwrap().choi();
        let cf = phase_flip(0.4).unwrap().choi();
        let s = delta_split(&ce, &cf, 1.0).unwrap();
        let plus = &proj([1.0, 0.0, 0.0, 1.0]).scale(0.2) + &proj([0.0, 1.0, 1.0, 0.0]).scale(0.2);
        let minus = proj([1.0, 0.0, 0.0, -1.0]).scale(0.4);
        assert!(s.plus.max_abs_diff(&plus) < 1e-14);
        assert!(s.minus.max_abs_diff(&minus) < 1e-14);
        let ep = matkit::hermitian_eig(&s.plus).unwrap().eigenvalues;
        assert!((ep[0] - 0.4).abs() < 1e-14 && (ep[1] - 0.4).abs() < 1e-14);
        let em = matkit::hermitian_eig(&s.minus).unwrap().eigenvalues;
        assert!((em[0] - 0.8).abs() < 1e-14);
        assert_eq!(s.inertia, (2, 1));
    }

    #[test]
    fn delta_split_identity_vs_x() {
        let ce = KrausChannel::identity(2).unwrap().choi();
        let cf = x_channel().choi();
        let s = delta_split(&ce, &cf, 1.0).unwrap();
        assert!(s.plus.max_abs_diff(ce.matrix()) < 1e-14);
        assert!(s.minus.max_abs_diff(cf.matrix()) < 1e-14);
    }

    #[test]
    fn delta_split_rejects_bad_input() {
        let c2 = bit_flip(0.1).unwrap().choi();
        let c3 = random_channel(3, 1, 0).unwrap().choi();
        assert!(delta_split(&c2, &c3, 1.0).is_err());
        assert!(delta_split(&c2, &c2, 0.0).is_err());
        assert!(delta_split(&c2, &c2, -1.0).is_err());
    }

    #[test]
    fn alpha_bounds_examples() {
        let b = alpha_bounds(&ComplexMatrix::zeros(4, 4), 2).unwrap();
        assert_eq!((b.lower, b.upper, b.tight), (0.0, 0.0, true));

        let ce = bit_flip(0.2).unwrap().choi();
        let cf = phase_flip(0.4).unwrap().choi();
        let s = delta_split(&ce, &cf, 1.0).unwrap();
        let b = alpha_bounds(&s.plus, 2).unwrap();
        assert!(b.tight);
        assert!((b.lower - 0.4).abs() < 1e-14 && (b.upper - 0.4).abs() < 1e-14);

        assert!(alpha_bounds(&ComplexMatrix::zeros(4, 4), 3).is_err());
    }

    #[test]
    fn alpha_bounds_can_clip_at_one_in_four_dims() {
        // Scan seeded 4-dim pairs for a case with ‖T(Δ₊)‖ > 1.
        let mut clipped = false;
        for seed in 0..40 {
            let ce = random_channel(4, 4, 2 * seed).unwrap().choi();
            let cf = random_channel(4, 4, 2 * seed + 1).unwrap().choi();
            for beta in [0.25, 0.5, 1.0] {
                let s = delta_split(&ce, &cf, beta).unwrap();
                let b = alpha_bounds(&s.plus, 4).unwrap();
                assert!(b.lower <= b.upper + 1e-9);
                let raw = matkit::spectral_norm(&channel_sum(&s.plus).unwrap());
                clipped |= raw > 1.0 && b.upper == 1.0;
            }
        }
        assert!(clipped, "expected at least one ‖T(Δ₊)‖ > 1 case");
    }

    #[test]
    fn alpha_to_pq_examples() {
        assert_eq!(alpha_to_pq(1.0, 1.0).unwrap(), TradeoffPoint::new(0.5, 0.5));
        assert_eq!(alpha_to_pq(0.0, 1.0).unwrap(), TradeoffPoint::new(0.0, 0.0));
        let pt = alpha_to_pq(0.2, 1.0).unwrap();
        assert!((pt.p - 1.0 / 6.0).abs() < 1e-15 && (pt.q - 1.0 / 6.0).abs() < 1e-15);
        assert!(alpha_to_pq(0.2, 0.0).is_err());
        assert!(alpha_to_pq(-0.5, 1.0).is_err());
        // Clamp below the feasible boundary.
        assert_eq!(alpha_to_pq(0.1, 0.5).unwrap(), TradeoffPoint::new(0.0, 0.5));
    }

    #[test]
    fn identical_channels_profile_sits_on_the_axes() {
        let e = random_channel(2, 2, 8).unwrap();
        let grid = log_beta_grid(0.1, 10.0, 41).unwrap();
        let prof = trace_profile(&e, &e, &grid).unwrap();
        for s in &prof.samples {
            assert!(s.tight);
            assert!(s.lower.p * s.lower.q < 1e-12, "{s:?}");
        }
        // β = 1 is on this grid and is the origin.
        let mid = &prof.samples[20];
        assert!((mid.beta - 1.0).abs() < 1e-12);
        assert!(mid.lower.p.abs() < 1e-12 && mid.lower.q.abs() < 1e-12);
        assert!(prof
            .upper_hull_points
            .iter()
            .any(|pt| pt.p.abs() < 1e-12 && pt.q.abs() < 1e-12));
    }

    #[test]
    fn flip_profile_matches_closed_form() {
        let (a, b) = (0.2, 0.2);
        let prof = trace_profile(
            &bit_flip(a).unwrap(),
            &phase_flip(b).unwrap(),
            &default_beta_grid(),
        )
        .unwrap();
        let fp = analytic_flip_profile(a, b).unwrap();
        for s in &prof.samples {
            assert!(s.tight);
            assert!((s.alpha_lower - fp.alpha(s.beta)).abs() < 1e-10);
            assert!(fp.branch_residual(s.beta, s.lower).abs() < 1e-8);
        }
        let cusps = prof.cusps();
        assert_eq!(cusps.len(), 1);
        let loc = cusps[0].location.unwrap();
        assert!((loc.p - 1.0 / 6.0).abs() < 1e-6 && (loc.q - 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn analytic_flip_examples() {
        let fp = analytic_flip_profile(0.2, 0.2).unwrap();
        let cusp = fp.cusp().unwrap();
        assert!((cusp.p - 1.0 / 6.0).abs() < 1e-15 && (cusp.q - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(fp.branches().len(), 2);

        // q = 0 on branch 1 gives p = b.
        let fp = analytic_flip_profile(0.2, 0.4).unwrap();
        assert!((fp.optimal_q(0.4) - 0.2 * 0.6).abs() < 1e-15);
        assert_eq!(fp.branch_residual(0.1, TradeoffPoint::new(0.4, 0.0)), 0.0);

        // a = 0: E is the identity, branch 2 collapses to q = 0.
        let fp = analytic_flip_profile(0.0, 0.3).unwrap();
        assert_eq!(fp.branches(), vec![FlipBranch::PFromQ]);
        assert_eq!(fp.optimal_q(0.3), 0.0);
        assert_eq!(fp.optimal_q(0.9), 0.0);
        assert!(analytic_flip_profile(1.5, 0.1).is_err());
    }

    #[test]
    fn hull_examples() {
        let h = upper_hull(&[TradeoffPoint::new(0.3, 0.3)]).unwrap();
        assert_eq!(
            h,
            vec![
                TradeoffPoint::new(0.0, 1.0),
                TradeoffPoint::new(0.3, 0.3),
                TradeoffPoint::new(1.0, 0.0)
            ]
        );
        let chord: Vec<_> = (1..10)
            .map(|k| TradeoffPoint::new(k as f64 / 10.0, 1.0 - k as f64 / 10.0))
            .collect();
        let h = upper_hull(&chord).unwrap();
        assert_eq!(
            h,
            vec![TradeoffPoint::new(0.0, 1.0), TradeoffPoint::new(1.0, 0.0)]
        );
        assert!(upper_hull(&[]).is_err());
    }

    fn noisy_convex(seed: u64) -> Vec<TradeoffPoint> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(seed);
        (0..60)
            .map(|_| {
                let p: f64 = rng.random_range(0.0..1.0);
                let base = (1.0 - p.sqrt()).powi(2);
                TradeoffPoint::new(p, (base + rng.random_range(0.0..0.05)).min(1.0))
            })
            .collect()
    }

    proptest! {
        #[test]
        fn hull_is_convex_and_below_inputs(seed in 0u64..2000) {
            let pts = noisy_convex(seed);
            let hull = upper_hull(&pts).unwrap();
            // Vertices come from the input (or the two endpoints).
            for v in &hull {
                let endpoint = *v == TradeoffPoint::new(0.0, 1.0) || *v == TradeoffPoint::new(1.0, 0.0);
                prop_assert!(endpoint || pts.contains(v));
            }
            // Pairwise-slope oracle: slopes increase along the hull, q never increases.
            let slopes: Vec<f64> = hull.windows(2).map(|w| (w[1].q - w[0].q) / (w[1].p - w[0].p)).collect();
            prop_assert!(slopes.windows(2).all(|s| s[0] <= s[1] + 1e-12));
            prop_assert!(hull.windows(2).all(|w| w[1].q <= w[0].q + 1e-15));
            for pt in &pts {
                let q = interpolate_q(&hull, pt.p).unwrap();
                prop_assert!(pt.q >= q - 1e-12);
                prop_assert!(q <= 1.0 - pt.p + 1e-12);
            }
        }

        #[test]
        fn split_channel_sums_differ_by_identity(seed in 0u64..3000, n in 2usize..5, bi in 0usize..5) {
            let beta = [0.25, 0.5, 1.0, 2.0, 4.0][bi];
            let ce = random_channel(n, 2, 2 * seed).unwrap().choi();
            let cf = random_channel(n, 3.min(n * n), 2 * seed + 1).unwrap().choi();
            let s = delta_split(&ce, &cf, beta).unwrap();
            let tp = channel_sum(&s.plus).unwrap();
            let tm = channel_sum(&s.minus).unwrap();
            let target = ComplexMatrix::identity(n).scale(1.0 - beta);
            prop_assert!(matkit::spectral_norm(&(&(&tp - &tm) - &target)) <= 1e-9);
        }

        #[test]
        fn profile_invariants(seed in 0u64..500) {
            let e = random_channel(2, 4, 2 * seed).unwrap();
            let f = random_channel(2, 4, 2 * seed + 1).unwrap();
            let grid = log_beta_grid(0.05, 20.0, 40).unwrap();
            let prof = trace_profile(&e, &f, &grid).unwrap();
            for s in &prof.samples {
                prop_assert!(s.alpha_lower >= 0.0);
                prop_assert!(s.alpha_lower <= s.alpha_upper + 1e-9);
                prop_assert!(s.alpha_upper <= 1.0);
                prop_assert!(s.lower.p <= s.upper.p + 1e-12 && s.lower.q <= s.upper.q + 1e-12);
                if s.tight { prop_assert!((s.alpha_upper - s.alpha_lower).abs() <= 1e-8); }
                for pt in [s.lower, s.upper] {
                    prop_assert!((pt.q - (1.0 - s.beta * (1.0 - pt.p))).abs() <= 1e-9);
                }
            }
            for pt in &prof.upper_points {
                let q = interpolate_q(&prof.upper_hull_points, pt.p).unwrap();
                prop_assert!(q <= pt.q + 1e-12);
            }
            for k in 0..=20 {
                let p = k as f64 / 20.0;
                let q = interpolate_q(&prof.upper_hull_points, p).unwrap();
                prop_assert!(q <= 1.0 - p + 1e-12);
            }
            prop_assert!(prof.cusp_count() <= 4);
        }
    }
}
