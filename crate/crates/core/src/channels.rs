//! Kraus and Choi representations of channels on an `n`-dimensional space.
//!
//! Conventions: computational basis `|0⟩ … |n-1⟩`, Choi matrix
//! `C = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)` (the input index selects the block), and
//! column-stacking `vec`, so that `C = Σ_k |vec K_k⟩⟨vec K_k|`.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

use crate::matkit::{self, c, re, ComplexMatrix, C64, DEFAULT_ZERO_TOL};
use crate::{Error, Result};

/// Tolerance on `T(C) = I` / `Σ K†K = I`.
pub const TP_TOL: f64 = 1e-9;
/// Tolerance on the smallest Choi eigenvalue for complete positivity.
pub const CP_TOL: f64 = 1e-10;

/// A channel given by Kraus operators `ρ ↦ Σ_i K_i ρ K_i†`.
///
/// Construction checks shapes only; trace preservation is a property that
/// can be queried ([`KrausChannel::tp_defect`]) since non-TP maps are useful
/// in tests and intermediate steps.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::validation("a channel needs at least one Kraus operator"))?;
        let dim = first.rows();
        if dim < 2 {
            return Err(Error::validation(format!(
                "dimension must be >= 2, got {dim}"
            )));
        }
        for (i, k) in ops.iter().enumerate() {
            if k.rows() != dim || k.cols() != dim {
                return Err(Error::validation(format!(
                    "Kraus operator {i} is {}x{}, expected {dim}x{dim}",
                    k.rows(),
                    k.cols()
                )));
            }
        }
        Ok(KrausChannel { dim, ops })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(vec![ComplexMatrix::identity(dim)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    /// `Σ_i K_i† K_i`.
    pub fn kraus_sum(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            s += &k.adjoint().matmul(k);
        }
        s
    }

    /// `max|Σ K†K - I|`.
    pub fn tp_defect(&self) -> f64 {
        self.kraus_sum()
            .max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.tp_defect() <= tol
    }

    pub fn ensure_trace_preserving(&self, tol: f64) -> Result<()> {
        let d = self.tp_defect();
        if d > tol {
            return Err(Error::validation(format!(
                "channel is not trace preserving: max|ΣK†K - I| = {d:e} > {tol:e}"
            )));
        }
        Ok(())
    }

    /// `Σ_i K_i ρ K_i†`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.dim || rho.cols() != self.dim {
            return Err(Error::validation(format!(
                "state is {}x{}, channel acts on dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out += &k.matmul(rho).matmul(&k.adjoint());
        }
        Ok(out)
    }

    pub fn choi(&self) -> ChoiRep {
        choi_from_kraus(self)
    }
}

/// Choi matrix of a linear map together with its CP/TP status.
#[derive(Clone, Debug)]
pub struct ChoiRep {
    dim: usize,
    matrix: ComplexMatrix,
    cp: bool,
    tp: bool,
}

impl ChoiRep {
    /// Wraps an `n² × n²` Hermitian matrix, evaluating the CP and TP flags.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let dim = choi_dim(&matrix)?;
        matrix.check_hermitian("Choi matrix")?;
        let eig = matkit::hermitian_eig(&matrix)?;
        let scale = eig.spectral_radius().max(1.0);
        let cp = eig.min_eigenvalue() >= -CP_TOL * scale;
        let t = channel_sum(&matrix)?;
        let tp = t.max_abs_diff(&ComplexMatrix::identity(dim)) <= TP_TOL;
        Ok(ChoiRep {
            dim,
            matrix,
            cp,
            tp,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn is_cp(&self) -> bool {
        self.cp
    }

    pub fn is_tp(&self) -> bool {
        self.tp
    }

    pub fn channel_sum(&self) -> ComplexMatrix {
        channel_sum(&self.matrix).expect("ChoiRep always has n² x n² shape")
    }

    /// Smallest eigenvalue of the Choi matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        matkit::min_eigenvalue(&self.matrix).unwrap_or(f64::NEG_INFINITY)
    }

    /// `max|T(C) - I|`.
    pub fn tp_defect(&self) -> f64 {
        self.channel_sum()
            .max_abs_diff(&ComplexMatrix::identity(self.dim))
    }
}

/// Returns `n` for an `n² × n²` matrix.
fn choi_dim(m: &ComplexMatrix) -> Result<usize> {
    let big = m.check_square("Choi matrix")?;
    let n = (big as f64).sqrt().round() as usize;
    if n * n != big || n < 1 {
        return Err(Error::validation(format!(
            "Choi-like matrix must be n²xn², got {big}x{big}"
        )));
    }
    Ok(n)
}

/// `C = Σ_k vec(K_k) vec(K_k)†`.
pub fn choi_from_kraus(ch: &KrausChannel) -> ChoiRep {
    let n = ch.dim();
    let mut m = ComplexMatrix::zeros(n * n, n * n);
    for k in ch.kraus_ops() {
        let v = k.vec();
        m += &ComplexMatrix::outer(&v, &v);
    }
    ChoiRep::from_matrix(m).expect("Kraus-built Choi matrix is Hermitian with n² shape")
}

/// Kraus operators from the eigendecomposition of a CP Choi matrix; one
/// operator per eigenvalue above `DEFAULT_ZERO_TOL · ‖C‖`.
pub fn kraus_from_choi(choi: &ChoiRep) -> Result<KrausChannel> {
    if !choi.is_cp() {
        return Err(Error::validation(format!(
            "Choi matrix is not PSD (min eigenvalue {:e})",
            choi.min_eigenvalue()
        )));
    }
    let n = choi.dim();
    let eig = matkit::hermitian_eig(choi.matrix())?;
    let cut = DEFAULT_ZERO_TOL * eig.spectral_radius();
    let mut ops = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= cut {
            continue;
        }
        let v: Vec<C64> = eig
            .vector(k)
            .into_iter()
            .map(|z| z * lambda.sqrt())
            .collect();
        ops.push(ComplexMatrix::unvec(n, &v)?);
    }
    if ops.is_empty() {
        // The zero map; keep a single zero operator so the dimension survives.
        ops.push(ComplexMatrix::zeros(n, n));
    }
    KrausChannel::new(ops)
}

/// Channel sum `T(C) = Tr₂ᵗ(C)`, i.e. `T_ij = Σ_a C[(j,a),(i,a)]`.
pub fn channel_sum(choi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = choi_dim(choi)?;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|a| choi[(j * n + a, i * n + a)]).sum()
    }))
}

/// Adjoint of the channel sum: `Z ↦ Zᵗ ⊗ I_n`.
pub(crate) fn channel_sum_adjoint(z: &ComplexMatrix) -> ComplexMatrix {
    let n = z.rows();
    z.transpose().kron(&ComplexMatrix::identity(n))
}

pub fn apply(ch: &KrausChannel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    ch.apply(rho)
}

/// `(1 - prob) A + prob B` as a Kraus set.
pub fn mix(a: &KrausChannel, b: &KrausChannel, prob: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::validation(format!(
            "mixing probability {prob} outside [0, 1]"
        )));
    }
    same_dim(a, b)?;
    let wa = (1.0 - prob).sqrt();
    let wb = prob.sqrt();
    let ops = a
        .kraus_ops()
        .iter()
        .map(|k| k.scale(wa))
        .chain(b.kraus_ops().iter().map(|k| k.scale(wb)))
        .collect();
    KrausChannel::new(ops)
}

/// `second ∘ first`: Kraus set `{B_j A_i}`.
pub fn compose(second: &KrausChannel, first: &KrausChannel) -> Result<KrausChannel> {
    same_dim(second, first)?;
    let mut ops = Vec::with_capacity(second.kraus_ops().len() * first.kraus_ops().len());
    for b in second.kraus_ops() {
        for a in first.kraus_ops() {
            ops.push(b.matmul(a));
        }
    }
    KrausChannel::new(ops)
}

fn same_dim(a: &KrausChannel, b: &KrausChannel) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Random TP channel from a seeded Stinespring isometry.
///
/// A `(k·n) × n` complex Gaussian matrix is drawn from a SplitMix64 stream,
/// its columns are orthonormalized by modified Gram–Schmidt, and the `k`
/// stacked `n × n` blocks become the Kraus operators.
pub fn random_channel(dim: usize, num_kraus: usize, seed: u64) -> Result<KrausChannel> {
    if dim < 2 {
        return Err(Error::validation(format!(
            "dimension must be >= 2, got {dim}"
        )));
    }
    if num_kraus == 0 || num_kraus > dim * dim {
        return Err(Error::validation(format!(
            "number of Kraus operators must be in 1..={}, got {num_kraus}",
            dim * dim
        )));
    }
    let rows = num_kraus * dim;
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut cols: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); rows]; dim];
    for i in 0..rows {
        for col in cols.iter_mut() {
            col[i] = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }

    for j in 0..dim {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for u in done.iter() {
            let proj: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::numerical("degenerate Gaussian draw", norm));
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
    }

    let ops = (0..num_kraus)
        .map(|b| ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][b * dim + i]))
        .collect();
    KrausChannel::new(ops)
}

fn check_prob(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::validation(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

// Operators with zero weight are dropped, so `p = 0` gives the bare identity.
fn two_op_channel(p: f64, op: ComplexMatrix) -> Result<KrausChannel> {
    let ops = [(1.0 - p, ComplexMatrix::identity(2)), (p, op)]
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, m)| m.scale(w.sqrt()))
        .collect();
    KrausChannel::new(ops)
}

/// `(1-a) ρ + a XρX`.
pub fn bit_flip(a: f64) -> Result<KrausChannel> {
    check_prob("a", a)?;
    two_op_channel(a, pauli_x())
}

/// `(1-b) ρ + b ZρZ`.
pub fn phase_flip(b: f64) -> Result<KrausChannel> {
    check_prob("b", b)?;
    two_op_channel(b, pauli_z())
}

/// `(1-c) ρ + c (XZ)ρ(XZ)†`.
pub fn xz_flip(c: f64) -> Result<KrausChannel> {
    check_prob("c", c)?;
    two_op_channel(c, pauli_x().matmul(&pauli_z()))
}

/// The conjugation channel `ρ ↦ XρX`.
pub fn x_channel() -> KrausChannel {
    KrausChannel::new(vec![pauli_x()]).expect("2x2 operator")
}

const PUBLISHED_E: [[[f64; 2]; 2]; 4] = [
    [[-0.504828, -0.331944], [-0.0133105, 0.295026]],
    [[0.419485, 0.158018], [0.330761, 0.0616354]],
    [[0.464696, 0.251826], [-0.312786, 0.165248]],
    [[0.160149, -0.346665], [-0.346665, 0.750403]],
];

const PUBLISHED_F: [[[f64; 2]; 2]; 4] = [
    [[-0.20917, -0.248828], [0.382771, -0.451866]],
    [[-0.62412, -0.425856], [0.286902, -0.0613943]],
    [[0.216184, -0.422341], [-0.403389, 0.451605]],
    [[0.236514, 0.269256], [0.269256, 0.306531]],
];

fn from_table(table: &[[[f64; 2]; 2]; 4]) -> KrausChannel {
    let ops = table
        .iter()
        .map(|m| ComplexMatrix::from_fn(2, 2, |i, j| re(m[i][j])))
        .collect();
    KrausChannel::new(ops).expect("2x2 operators")
}

/// The published pair of random qubit channels (four real Kraus operators
/// each, six significant digits, so TP only to about 1e-6).
pub fn published_pair() -> (KrausChannel, KrausChannel) {
    (from_table(&PUBLISHED_E), from_table(&PUBLISHED_F))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::testutil::random_hermitian;
    use proptest::prelude::*;

    fn e_vec(v: [f64; 4]) -> Vec<C64> {
        v.iter().map(|&x| re(x)).collect()
    }

    fn proj(v: [f64; 4]) -> ComplexMatrix {
        let v = e_vec(v);
        ComplexMatrix::outer(&v, &v)
    }

    const E1: [f64; 4] = [1.0, 0.0, 0.0, 1.0];
    const E2: [f64; 4] = [1.0, 0.0, 0.0, -1.0];
    const E3: [f64; 4] = [0.0, 1.0, 1.0, 0.0];

    /// `E(|i⟩⟨j|)` for every basis matrix.
    fn basis_action(ch: &KrausChannel) -> Vec<ComplexMatrix> {
        let n = ch.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut b = ComplexMatrix::zeros(n, n);
                b[(i, j)] = re(1.0);
                out.push(ch.apply(&b).unwrap());
            }
        }
        out
    }

    fn same_action(a: &KrausChannel, b: &KrausChannel, tol: f64) -> bool {
        basis_action(a)
            .iter()
            .zip(basis_action(b))
            .all(|(x, y)| x.max_abs_diff(&y) <= tol)
    }

    #[test]
    fn choi_of_identity_and_x() {
        let id = KrausChannel::identity(2).unwrap().choi();
        assert!(id.matrix().max_abs_diff(&proj(E1)) < 1e-15);
        assert!(id.is_cp() && id.is_tp());
        let x = x_channel().choi();
        assert!(x.matrix().max_abs_diff(&proj(E3)) < 1e-15);
    }

    #[test]
    fn choi_of_flips() {
        let bf = bit_flip(0.2).unwrap().choi();
        let expected = &proj(E1).scale(0.8) + &proj(E3).scale(0.2);
        assert!(bf.matrix().max_abs_diff(&expected) < 1e-15);
        let pf = phase_flip(0.2).unwrap().choi();
        let expected = &proj(E1).scale(0.8) + &proj(E2).scale(0.2);
        assert!(pf.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn choi_matches_block_definition() {
        // Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|) built block by block.
        let ch = random_channel(3, 4, 9).unwrap();
        let n = 3;
        let actions = basis_action(&ch);
        let mut direct = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let block = &actions[i * n + j];
                for a in 0..n {
                    for b in 0..n {
                        direct[(i * n + a, j * n + b)] = block[(a, b)];
                    }
                }
            }
        }
        assert!(ch.choi().matrix().max_abs_diff(&direct) < 1e-14);
    }

    #[test]
    fn kraus_round_trip_examples() {
        let id = KrausChannel::identity(2).unwrap();
        let back = kraus_from_choi(&id.choi()).unwrap();
        assert_eq!(back.kraus_ops().len(), 1);
        assert!(same_action(&id, &back, 1e-12));

        let bf = bit_flip(0.2).unwrap();
        let back = kraus_from_choi(&bf.choi()).unwrap();
        assert_eq!(back.kraus_ops().len(), 2);
        assert!(same_action(&bf, &back, 1e-9));

        let (e, _) = published_pair();
        let back = kraus_from_choi(&e.choi()).unwrap();
        assert!(back.kraus_ops().len() <= 4);
        assert!(same_action(&e, &back, 1e-9));
    }

    #[test]
    fn kraus_from_non_psd_choi_fails() {
        let m = &proj(E1) - &proj(E3);
        let choi = ChoiRep::from_matrix(m).unwrap();
        assert!(!choi.is_cp());
        assert!(matches!(kraus_from_choi(&choi), Err(Error::Validation(_))));
    }

    #[test]
    fn channel_sum_examples() {
        let id = KrausChannel::identity(2).unwrap().choi();
        assert!(id.channel_sum().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        let half = channel_sum(&id.matrix().scale(0.5)).unwrap();
        assert!(half.max_abs_diff(&id.channel_sum().scale(0.5)) < 1e-15);
        assert!(channel_sum(&ComplexMatrix::zeros(3, 3)).is_err());
        assert!(channel_sum(&ComplexMatrix::zeros(4, 5)).is_err());
    }

    #[test]
    fn channel_sum_equals_kraus_sum_for_nonhermitian_free_maps() {
        // T(C) = Σ K†K even for non-TP Kraus sets.
        let ch = KrausChannel::new(vec![
            ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]),
            ComplexMatrix::from_row_major(2, 2, vec![c(0.0, 1.0), re(0.5), re(0.0), c(0.3, -0.2)])
                .unwrap(),
        ])
        .unwrap();
        let t = ch.choi().channel_sum();
        assert!(t.max_abs_diff(&ch.kraus_sum()) < 1e-14);
    }

    #[test]
    fn apply_examples() {
        let mut zero = ComplexMatrix::zeros(2, 2);
        zero[(0, 0)] = re(1.0);
        let id = KrausChannel::identity(2).unwrap();
        assert!(id.apply(&zero).unwrap().max_abs_diff(&zero) < 1e-15);
        let out = bit_flip(0.2).unwrap().apply(&zero).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::from_diag(&[0.8, 0.2])) < 1e-15);
        assert!(id.apply(&ComplexMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn mix_examples() {
        let e = bit_flip(0.3).unwrap();
        let f = phase_flip(0.1).unwrap();
        assert!(same_action(&mix(&e, &f, 0.0).unwrap(), &e, 1e-15));
        assert!(same_action(&mix(&e, &f, 1.0).unwrap(), &f, 1e-15));
        let a = bit_flip(0.2).unwrap();
        let b = phase_flip(0.2).unwrap();
        let m = mix(&a, &b, 0.5).unwrap().choi();
        let avg = (a.choi().matrix() + b.choi().matrix()).scale(0.5);
        assert!(m.matrix().max_abs_diff(&avg) < 1e-10);
        assert!(mix(&a, &b, 1.5).is_err());
        assert!(mix(&a, &random_channel(3, 1, 0).unwrap(), 0.5).is_err());
    }

    #[test]
    fn compose_examples() {
        let id = KrausChannel::identity(2).unwrap();
        let e = random_channel(2, 3, 4).unwrap();
        assert!(same_action(&compose(&id, &e).unwrap(), &e, 1e-14));
        let xx = compose(&x_channel(), &x_channel()).unwrap();
        assert!(same_action(&xx, &id, 1e-15));
        // Two independent flips flip with probability 2a(1-a).
        let a = 0.2;
        let twice = compose(&bit_flip(a).unwrap(), &bit_flip(a).unwrap()).unwrap();
        let expected = bit_flip(2.0 * a * (1.0 - a)).unwrap();
        assert!(twice.choi().matrix().max_abs_diff(expected.choi().matrix()) < 1e-14);
        assert!(compose(&id, &random_channel(3, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn random_channel_properties() {
        let a = random_channel(2, 4, 42).unwrap();
        let b = random_channel(2, 4, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_channel(2, 4, 43).unwrap());
        assert!(a.tp_defect() <= 1e-9);
        assert!((a.choi().matrix().trace().re - 2.0).abs() < 1e-12);
        assert!(random_channel(1, 1, 0).is_err());
        assert!(random_channel(2, 5, 0).is_err());
        assert!(random_channel(2, 0, 0).is_err());
    }

    #[test]
    fn fixture_examples() {
        assert!(same_action(
            &bit_flip(0.0).unwrap(),
            &KrausChannel::identity(2).unwrap(),
            0.0
        ));
        assert!(bit_flip(-0.1).is_err());
        assert!(phase_flip(1.1).is_err());
        assert!(xz_flip(2.0).is_err());
        let (e, f) = published_pair();
        assert_eq!(e.kraus_ops()[0][(0, 0)], re(-0.504828));
        assert_eq!(f.kraus_ops()[3][(1, 1)], re(0.306531));
        assert!(e.tp_defect() < 1e-6 && f.tp_defect() < 1e-6);
        assert!(xz_flip(0.2).unwrap().tp_defect() < 1e-15);
    }

    #[test]
    fn tp_iff_channel_sum_is_identity() {
        let tp = random_channel(3, 2, 5).unwrap();
        assert!(tp.is_trace_preserving(TP_TOL));
        assert!(tp.choi().is_tp());
        let non_tp =
            KrausChannel::new(tp.kraus_ops().iter().map(|k| k.scale(1.01)).collect()).unwrap();
        assert!(!non_tp.is_trace_preserving(TP_TOL));
        assert!(!non_tp.choi().is_tp());
    }

    proptest! {
        #[test]
        fn round_trip_preserves_action(seed in 0u64..5000, n in 2usize..5, k in 1usize..5) {
            let ch = random_channel(n, k.min(n * n), seed).unwrap();
            let back = kraus_from_choi(&ch.choi()).unwrap();
            prop_assert!(same_action(&ch, &back, 1e-9));
        }

        #[test]
        fn trace_of_choi_equals_trace_of_channel_sum(seed in 0u64..5000, n in 2usize..5) {
            let m = random_hermitian(n * n, seed);
            let t = channel_sum(&m).unwrap();
            prop_assert!((m.trace() - t.trace()).norm() <= 1e-9);
        }

        #[test]
        fn channel_sum_of_psd_is_psd(seed in 0u64..5000, n in 2usize..4) {
            let m = random_hermitian(n * n, seed);
            let psd = m.matmul(&m);
            let t = channel_sum(&psd).unwrap().hermitian_part();
            let min = crate::matkit::min_eigenvalue(&t).unwrap();
            prop_assert!(min >= -1e-10 * psd.max_abs());
        }

        #[test]
        fn mix_is_linear_in_choi(s1 in 0u64..1000, s2 in 0u64..1000, p in 0.0f64..=1.0) {
            let a = random_channel(2, 3, s1).unwrap();
            let b = random_channel(2, 2, s2 + 7777).unwrap();
            let m = mix(&a, &b, p).unwrap().choi();
            let expected = &a.choi().matrix().scale(1.0 - p) + &b.choi().matrix().scale(p);
            prop_assert!(m.matrix().max_abs_diff(&expected) <= 1e-10);
        }
    }
}
