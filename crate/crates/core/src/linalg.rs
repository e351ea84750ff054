//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Matrices are `DMatrix<Complex<f64>>`. Vectorization stacks columns, which
//! coincides with nalgebra's column-major storage: `vec(X)[i + D*j] = X[(i, j)]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Column-stacking vectorization.
pub fn vec_of(x: &CMat) -> CVec {
    CVec::from_column_slice(x.as_slice())
}

/// Inverse of [`vec_of`] for a square `d x d` matrix.
pub fn unvec(v: &CVec, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn hermitize(x: &CMat) -> CMat {
    (x + x.adjoint()) * c(0.5, 0.0)
}

pub fn trace(x: &CMat) -> C64 {
    x.diagonal().iter().sum()
}

/// Frobenius norm.
pub fn fro(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn op_norm(x: &CMat) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// All eigenvalues of a general square complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok(t.diagonal().iter().cloned().collect())
}

/// Complex Schur decomposition `m = Q T Q†`.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "schur of non-square {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok((m.clone(), m.clone()));
    }
    let s = m.clone().try_schur(f64::EPSILON, 100_000).ok_or_else(|| {
        Error::Eigen(format!(
            "Schur iteration did not converge (dim {}, norm {:.3e})",
            m.nrows(),
            fro(m)
        ))
    })?;
    Ok(s.unpack())
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
/// The input is Hermitized first.
pub fn herm_eig(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (vec![], h.clone());
    }
    let eig = SymmetricEigen::new(hermitize(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn herm_eigenvalues(h: &CMat) -> Vec<f64> {
    herm_eig(h).0
}

/// Singular value decomposition with singular values sorted descending.
/// Returns `(U, s, V)` with `m = U diag(s) V†`.
pub fn svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let k = m.nrows().min(m.ncols());
    let s = m.clone().svd(true, true);
    let u = s.u.expect("svd u");
    let v = s.v_t.expect("svd v_t").adjoint();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s.singular_values[b].total_cmp(&s.singular_values[a]));
    let mut uo = CMat::zeros(m.nrows(), k);
    let mut vo = CMat::zeros(m.ncols(), k);
    let mut so = Vec::with_capacity(k);
    for (j, &i) in order.iter().enumerate() {
        uo.set_column(j, &u.column(i));
        vo.set_column(j, &v.column(i));
        so.push(s.singular_values[i]);
    }
    (uo, so, vo)
}

/// Orthonormal basis of the numerical null space of a square matrix. Singular
/// values below `rel_tol * max(1, s_max)` count as zero; at least `min_dim`
/// vectors are returned (the ones with smallest singular values).
pub fn null_space(m: &CMat, rel_tol: f64, min_dim: usize) -> (CMat, Vec<f64>) {
    let n = m.ncols();
    let (_, s, v) = svd(&pad_square(m));
    let smax = s.first().cloned().unwrap_or(0.0).max(1.0);
    let mut idx: Vec<usize> = (0..n).filter(|&i| s[i] <= rel_tol * smax).collect();
    if idx.len() < min_dim {
        idx = (n.saturating_sub(min_dim)..n).collect();
    }
    let mut out = CMat::zeros(n, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        out.set_column(j, &v.column(i));
    }
    (out, s)
}

fn pad_square(m: &CMat) -> CMat {
    if m.nrows() >= m.ncols() {
        return m.clone();
    }
    let mut p = CMat::zeros(m.ncols(), m.ncols());
    p.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    p
}

/// Orthonormal basis for the column span, keeping singular values above
/// `rel_tol * s_max`.
pub fn orth(m: &CMat, rel_tol: f64) -> (CMat, Vec<f64>) {
    if m.ncols() == 0 || m.nrows() == 0 {
        return (CMat::zeros(m.nrows(), 0), vec![]);
    }
    let (u, s, _) = svd(m);
    let smax = s.first().cloned().unwrap_or(0.0);
    let keep = if smax == 0.0 {
        0
    } else {
        s.iter().filter(|&&x| x > rel_tol * smax).count()
    };
    (u.columns(0, keep).into_owned(), s)
}

/// Numerical rank of a Hermitian PSD matrix: eigenvalues above `rel_tol * λ_max`.
/// Returns `(rank, λ_min / λ_max)`.
pub fn psd_rank(h: &CMat, rel_tol: f64) -> (usize, f64) {
    let vals = herm_eigenvalues(h);
    let lmax = vals.last().cloned().unwrap_or(0.0);
    if lmax <= 0.0 {
        return (0, 0.0);
    }
    let rank = vals.iter().filter(|&&v| v > rel_tol * lmax).count();
    (rank, vals[0] / lmax)
}

/// `f(H)` for Hermitian `H` through its eigendecomposition.
pub fn herm_fn(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = herm_eig(h);
    let d = CMat::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(f(v), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Square root and inverse square root of a positive-definite matrix.
pub fn pd_sqrt_pair(rho: &CMat) -> (CMat, CMat) {
    let s = herm_fn(rho, |v| v.max(0.0).sqrt());
    let si = herm_fn(rho, |v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt());
    (s, si)
}

/// Unitary factor of the polar decomposition `X = V |X|`.
pub fn polar_unitary(x: &CMat) -> CMat {
    let (u, _, v) = svd(x);
    u * v.adjoint()
}

/// `‖X X† − 𝟙‖_op`.
pub fn unitarity_residual(x: &CMat) -> f64 {
    op_norm(&(x * x.adjoint() - identity(x.nrows())))
}

/// Matrix power by repeated squaring.
pub fn mat_pow(m: &CMat, mut n: u64) -> CMat {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Determinant through LU factorization.
pub fn det_lu(x: &CMat) -> C64 {
    x.clone().lu().determinant()
}

/// The normalized antisymmetric vector `Ψ− = (n!)^{-1/2} Σ_π sgn(π) |π(0)…π(n−1)⟩`
/// in `(ℂ^n)^{⊗n}`, first tensor factor most significant.
pub fn antisymmetrizer(n: usize) -> CVec {
    let dim = n.pow(n as u32);
    let mut v = CVec::zeros(dim);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut count = 0usize;
    permutations(&mut perm, 0, &mut |p| {
        let idx = p.iter().fold(0usize, |acc, &x| acc * n + x);
        v[idx] = c(permutation_sign(p), 0.0);
        count += 1;
    });
    v / c((count as f64).sqrt(), 0.0)
}

/// `⟨Ψ−| X^{⊗n} |Ψ−⟩`, which equals `det X`.
pub fn det_via_antisymmetrizer(x: &CMat) -> C64 {
    let n = x.nrows();
    let psi = antisymmetrizer(n);
    let mut xn = x.clone();
    for _ in 1..n {
        xn = kron(&xn, x);
    }
    (psi.adjoint() * xn * &psi)[(0, 0)]
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Standard complex Gaussian entry (unit variance).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-random unitary (QR of a Ginibre matrix with the phase correction).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = random_gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

/// Random invertible matrix `U diag(s) V†` with singular values spread so
/// that the condition number is `cond`.
pub fn random_invertible<R: Rng + ?Sized>(n: usize, cond: f64, rng: &mut R) -> CMat {
    let u = random_unitary(n, rng);
    let v = random_unitary(n, rng);
    let s = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let f = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            c(cond.powf(-f), 0.0)
        }),
    );
    u * CMat::from_diagonal(&s) * v.adjoint()
}

pub fn inverse(x: &CMat) -> Result<CMat> {
    x.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("matrix is singular".into()))
}

/// Principal angles between the column spans of two matrices with
/// orthonormal columns: returns `‖(𝟙 − P_a) P_b‖_op`.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    let pa = a * a.adjoint();
    let proj = (identity(a.nrows()) - pa) * b;
    op_norm(&proj)
}
