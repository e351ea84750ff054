//! Completely positive maps in Kraus form and their matrix representations.
//!
//! A map `X ↦ Σ_i A_i X A_i†` is stored as its Kraus list. The transfer
//! matrix uses column-stacking, so `vec(T(X)) = M vec(X)` with
//! `M = Σ_i conj(A_i) ⊗ A_i`. The Choi matrix is `Σ_i v_i v_i†` where `v_i` is
//! the row-major flattening of `A_i`, i.e. `ω[(a,b),(c,d)] = Σ_i A_i[a,b] conj(A_i[c,d])`
//! at row `a*D + b`; its rank is the Kraus rank.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{self, c, herm_eig, CMat, CVec, C64};

/// Relative tolerance used for numerical ranks unless overridden.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// A CP map given by Kraus operators. Transfer and Choi matrices are computed
/// lazily and cached; the caches are thread-safe.
#[derive(Clone, Debug)]
pub struct KrausMap {
    dim: usize,
    kraus: Vec<CMat>,
    transfer: OnceLock<CMat>,
    choi: OnceLock<ChoiMatrix>,
}

/// Hermitian PSD Choi matrix `ω(T) = (T ⊗ I)(|φ⟩⟨φ|)`.
#[derive(Clone, Debug)]
pub struct ChoiMatrix(pub CMat);

impl ChoiMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    /// `‖ω − ω†‖_F / ‖ω‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = linalg::fro(&self.0);
        if n == 0.0 {
            return 0.0;
        }
        linalg::fro(&(&self.0 - self.0.adjoint())) / n
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::herm_eigenvalues(&self.0)
    }

    /// Numerical rank and the ratio `λ_min / λ_max`.
    pub fn rank(&self, rel_tol: f64) -> (usize, f64) {
        linalg::psd_rank(&self.0, rel_tol)
    }

    pub fn is_psd(&self) -> bool {
        let vals = self.eigenvalues();
        let lmax = vals.last().cloned().unwrap_or(0.0).max(0.0);
        vals.first().is_none_or(|&l| l >= -1e-9 * lmax.max(f64::MIN_POSITIVE))
            && self.hermiticity_residual() <= 1e-10
    }
}

impl KrausMap {
    /// Builds a map from its Kraus operators. All operators must be square
    /// with a common dimension, the list must be non-empty, and every entry finite.
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidArgument("zero-dimensional Kraus operator".into()));
        }
        for (i, a) in kraus.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {dim}x{dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "Kraus operator {i} has non-finite entries"
                )));
            }
        }
        Ok(Self {
            dim,
            kraus,
            transfer: OnceLock::new(),
            choi: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of listed Kraus operators (may exceed the Kraus rank).
    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<CMat> {
        self.kraus
    }

    /// `Σ_i A_i X A_i†`.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        self.check_input(x)?;
        Ok(self
            .kraus
            .iter()
            .fold(CMat::zeros(self.dim, self.dim), |acc, a| acc + a * x * a.adjoint()))
    }

    /// The Hilbert-Schmidt adjoint `Σ_i A_i† X A_i`.
    pub fn apply_adjoint(&self, x: &CMat) -> Result<CMat> {
        self.check_input(x)?;
        Ok(self
            .kraus
            .iter()
            .fold(CMat::zeros(self.dim, self.dim), |acc, a| acc + a.adjoint() * x * a))
    }

    fn check_input(&self, x: &CMat) -> Result<()> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "input is {}x{}, map acts on {}x{}",
                x.nrows(),
                x.ncols(),
                self.dim,
                self.dim
            )));
        }
        Ok(())
    }

    /// `D² x D²` transfer matrix `Σ_i conj(A_i) ⊗ A_i`.
    pub fn transfer(&self) -> &CMat {
        self.transfer.get_or_init(|| {
            let d2 = self.dim * self.dim;
            self.kraus.iter().fold(CMat::zeros(d2, d2), |acc, a| {
                acc + linalg::kron(&a.map(|z| z.conj()), a)
            })
        })
    }

    /// Transfer matrix of the adjoint map; equals `transfer()†`.
    pub fn adjoint_transfer(&self) -> CMat {
        self.transfer().adjoint()
    }

    pub fn choi(&self) -> &ChoiMatrix {
        self.choi.get_or_init(|| {
            let d2 = self.dim * self.dim;
            let mut w = CMat::zeros(d2, d2);
            for a in &self.kraus {
                let v = flatten_row_major(a);
                w += &v * v.adjoint();
            }
            ChoiMatrix(w)
        })
    }

    pub fn kraus_rank(&self) -> usize {
        self.kraus_rank_with(DEFAULT_RANK_TOL)
    }

    pub fn kraus_rank_with(&self, rel_tol: f64) -> usize {
        self.choi().rank(rel_tol).0
    }

    /// `self ∘ other` (apply `other` first). Kraus operators are all products
    /// `A_i B_j`.
    pub fn compose(&self, other: &KrausMap) -> Result<KrausMap> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose maps on dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        let mut out = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                out.push(a * b);
            }
        }
        KrausMap::new(out)
    }

    /// Transfer matrix of `T^n` by repeated squaring.
    pub fn power_transfer(&self, n: u64) -> CMat {
        linalg::mat_pow(self.transfer(), n)
    }

    /// Choi matrix of `T^n`, obtained by reshuffling the transfer power.
    pub fn choi_of_power(&self, n: u64) -> ChoiMatrix {
        ChoiMatrix(choi_from_transfer(&self.power_transfer(n), self.dim))
    }

    /// An equivalent map whose Kraus list is linearly independent. Lists that
    /// are already independent are returned unchanged; otherwise the operators
    /// are rebuilt from the Choi eigenvectors scaled by `√λ`.
    pub fn minimal_kraus(&self) -> KrausMap {
        self.minimal_kraus_with(DEFAULT_RANK_TOL)
    }

    pub fn minimal_kraus_with(&self, rel_tol: f64) -> KrausMap {
        if self.listed_rank(rel_tol) == self.kraus.len() {
            return self.clone();
        }
        let kraus = kraus_from_choi(self.choi().matrix(), self.dim, rel_tol);
        KrausMap::new(kraus).unwrap_or_else(|_| {
            KrausMap::new(vec![CMat::zeros(self.dim, self.dim)]).expect("zero map")
        })
    }

    /// Rank of the `r x D²` stacking of the listed operators.
    pub fn listed_rank(&self, rel_tol: f64) -> usize {
        let d2 = self.dim * self.dim;
        let mut stack = CMat::zeros(d2, self.kraus.len());
        for (i, a) in self.kraus.iter().enumerate() {
            stack.set_column(i, &linalg::vec_of(a));
        }
        linalg::orth(&stack, rel_tol.sqrt()).0.ncols()
    }

    /// `‖Σ A_i†A_i − 𝟙‖_op`.
    pub fn tp_residual(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(CMat::zeros(self.dim, self.dim), |acc, a| acc + a.adjoint() * a);
        linalg::op_norm(&(s - linalg::identity(self.dim)))
    }

    /// `‖Σ A_i A_i† − 𝟙‖_op`.
    pub fn unital_residual(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(CMat::zeros(self.dim, self.dim), |acc, a| acc + a * a.adjoint());
        linalg::op_norm(&(s - linalg::identity(self.dim)))
    }

    /// The adjoint map, Kraus operators `A_i†`.
    pub fn adjoint_map(&self) -> KrausMap {
        KrausMap::new(self.kraus.iter().map(|a| a.adjoint()).collect()).expect("valid")
    }

    /// Kraus operators `S A_i S⁻¹`.
    pub fn similarity(&self, s: &CMat, s_inv: &CMat) -> Result<KrausMap> {
        if s.nrows() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "similarity of size {} on a map of dimension {}",
                s.nrows(),
                self.dim
            )));
        }
        KrausMap::new(self.kraus.iter().map(|a| s * a * s_inv).collect())
    }

    /// Kraus operators `W A_i W†` for unitary `W`.
    pub fn rotate(&self, w: &CMat) -> Result<KrausMap> {
        self.similarity(w, &w.adjoint())
    }

    pub fn scaled(&self, factor: f64) -> KrausMap {
        KrausMap::new(self.kraus.iter().map(|a| a * c(factor, 0.0)).collect()).expect("valid")
    }
}

fn flatten_row_major(a: &CMat) -> CVec {
    let d = a.nrows();
    CVec::from_fn(d * a.ncols(), |k, _| a[(k / d, k % d)])
}

/// Realigns a transfer matrix (column-stacking convention) into the Choi
/// matrix: `ω[a·D+b, c·D+d] = M[a + D·c, b + D·d]`.
pub fn choi_from_transfer(m: &CMat, d: usize) -> CMat {
    let d2 = d * d;
    CMat::from_fn(d2, d2, |row, col| {
        let (a, b) = (row / d, row % d);
        let (cc, dd) = (col / d, col % d);
        m[(a + d * cc, b + d * dd)]
    })
}

/// Kraus operators from the eigendecomposition of a Choi matrix, keeping
/// eigenvalues above `rel_tol * λ_max`, ordered by decreasing eigenvalue. Each
/// eigenvector's phase is fixed so its largest-magnitude entry is real positive.
pub fn kraus_from_choi(choi: &CMat, d: usize, rel_tol: f64) -> Vec<CMat> {
    let (vals, vecs) = herm_eig(choi);
    let lmax = vals.last().cloned().unwrap_or(0.0);
    let mut out = Vec::new();
    for k in (0..vals.len()).rev() {
        if lmax <= 0.0 || vals[k] <= rel_tol * lmax {
            continue;
        }
        let v = vecs.column(k);
        let pivot = v
            .iter()
            .cloned()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        let s = vals[k].sqrt();
        out.push(CMat::from_fn(d, d, |a, b| v[a * d + b] * phase * s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_gaussian_matrix, ONE, ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sx() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }
    fn sz() -> CMat {
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    fn identity_channel() -> KrausMap {
        KrausMap::new(vec![linalg::identity(2)]).unwrap()
    }

    fn depolarizing() -> KrausMap {
        let mut ks = vec![];
        for i in 0..2 {
            for j in 0..2 {
                let mut m = CMat::zeros(2, 2);
                m[(i, j)] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                ks.push(m);
            }
        }
        KrausMap::new(ks).unwrap()
    }

    fn random_map(d: usize, r: usize, seed: u64) -> KrausMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        KrausMap::new((0..r).map(|_| random_gaussian_matrix(d, d, &mut rng)).collect()).unwrap()
    }

    #[test]
    fn identity_apply_and_transfer() {
        let x = CMat::from_row_slice(2, 2, &[c(1., 2.), c(3., 0.), c(0., -1.), c(5., 5.)]);
        assert_eq!(identity_channel().apply(&x).unwrap(), x);
        assert_eq!(*identity_channel().transfer(), linalg::identity(4));
    }

    #[test]
    fn depolarizing_kills_traceless() {
        let x = CMat::from_diagonal(&CVec::from_vec(vec![ONE, -ONE]));
        let y = depolarizing().apply(&x).unwrap();
        assert!(linalg::fro(&y) < 1e-15);
        let w = depolarizing().choi().matrix().clone();
        assert!(linalg::fro(&(w - linalg::identity(4) * c(0.5, 0.0))) < 1e-15);
        assert_eq!(depolarizing().kraus_rank(), 4);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = identity_channel().apply(&CMat::zeros(3, 3)).unwrap_err();
        assert!(err.to_string().contains("3x3"));
        assert!(KrausMap::new(vec![CMat::zeros(2, 2), CMat::zeros(3, 3)]).is_err());
        assert!(KrausMap::new(vec![]).is_err());
    }

    #[test]
    fn pauli_x_transfer() {
        let m = KrausMap::new(vec![sx()]).unwrap();
        assert_eq!(*m.transfer(), linalg::kron(&sx(), &sx()));
        let sq = m.compose(&m).unwrap();
        assert!(linalg::fro(&(sq.transfer() - linalg::identity(4))) < 1e-15);
        assert!(linalg::fro(&(m.power_transfer(2) - linalg::identity(4))) < 1e-15);
    }

    #[test]
    fn transfer_matches_apply() {
        let m = random_map(3, 2, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let x = random_gaussian_matrix(3, 3, &mut rng);
            let lhs = m.transfer() * linalg::vec_of(&x);
            let rhs = linalg::vec_of(&m.apply(&x).unwrap());
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_choi_is_maximally_entangled_projector() {
        let w = identity_channel().choi().matrix().clone();
        let phi = CVec::from_vec(vec![ONE, ZERO, ZERO, ONE]);
        assert!(linalg::fro(&(w.clone() - &phi * phi.adjoint())) < 1e-15);
        assert_eq!(identity_channel().kraus_rank(), 1);
        assert!((linalg::trace(&w) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn choi_round_trip_reconstructs_map() {
        let m = random_map(3, 4, 5);
        let rebuilt = KrausMap::new(kraus_from_choi(m.choi().matrix(), 3, 1e-12)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let x = random_gaussian_matrix(3, 3, &mut rng);
            let d = m.apply(&x).unwrap() - rebuilt.apply(&x).unwrap();
            assert!(linalg::fro(&d) < 1e-10);
        }
    }

    #[test]
    fn choi_from_transfer_agrees_with_direct_choi() {
        let m = random_map(2, 3, 8);
        let w = choi_from_transfer(m.transfer(), 2);
        assert!(linalg::fro(&(w - m.choi().matrix())) < 1e-13);
    }

    #[test]
    fn minimal_kraus_merges_duplicates() {
        let m = KrausMap::new(vec![linalg::identity(2), linalg::identity(2)]).unwrap();
        let mk = m.minimal_kraus();
        assert_eq!(mk.num_kraus(), 1);
        let expected = linalg::identity(2) * c(2f64.sqrt(), 0.0);
        assert!(linalg::fro(&(mk.kraus()[0].clone() - expected)) < 1e-12);

        let m = KrausMap::new(vec![sx(), sx(), sz()]).unwrap();
        let mk = m.minimal_kraus();
        assert_eq!(mk.num_kraus(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let x = random_gaussian_matrix(2, 2, &mut rng);
            let d = m.apply(&x).unwrap() - mk.apply(&x).unwrap();
            assert!(linalg::fro(&d) < 1e-10);
        }
    }

    #[test]
    fn residuals() {
        let m = KrausMap::new(vec![linalg::identity(2) * c(2.0, 0.0)]).unwrap();
        assert!((m.tp_residual() - 3.0).abs() < 1e-12);
        let mut a0 = CMat::zeros(2, 2);
        a0[(0, 1)] = ONE;
        let mut a1 = CMat::zeros(2, 2);
        a1[(1, 0)] = ONE;
        let flip = KrausMap::new(vec![a0, a1]).unwrap();
        assert!(flip.tp_residual() < 1e-12 && flip.unital_residual() < 1e-12);
    }

    #[test]
    fn adjoint_transfer_is_dagger() {
        let m = random_map(2, 2, 4);
        let adj = m.adjoint_map();
        assert!(linalg::fro(&(adj.transfer() - m.adjoint_transfer())) < 1e-13);
    }
}
