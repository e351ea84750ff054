//! Low-lying spectra of translation-invariant Hamiltonians `Σ_i τ^i(h)` on a
//! periodic chain.
//!
//! The operator is applied matrix-free. Small chains are diagonalized densely.
//! Medium chains are diagonalized densely within each momentum sector of the
//! translation `τ^step`. Beyond that, Lanczos with full reorthogonalization and
//! locking of converged eigenvectors recovers degenerate eigenvalues one copy
//! at a time.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64};

/// Dimensions up to this are diagonalized densely.
pub const DENSE_LIMIT: usize = 256;
/// Momentum sectors up to this size are diagonalized densely.
pub const SECTOR_LIMIT: usize = 1024;
/// Largest Hilbert space accepted by the matrix-free solver.
pub const MATRIX_FREE_CAP: usize = 1 << 20;
/// Eigenvalues within this of the minimum form the ground cluster.
pub const GROUND_TOL: f64 = 1e-8;

/// `H = Σ_{j} τ^{j·step}(h)` where `h` acts on `l` consecutive sites.
#[derive(Clone, Debug)]
pub struct ChainHamiltonian {
    pub h: CMat,
    pub phys_dim: usize,
    pub l: usize,
    pub n: usize,
    pub step: usize,
    terms: Vec<Term>,
    dim: usize,
}

#[derive(Clone, Debug)]
struct Term {
    bases: Vec<usize>,
    offsets: Vec<usize>,
}

impl ChainHamiltonian {
    pub fn new(h: CMat, phys_dim: usize, l: usize, n: usize, step: usize) -> Result<Self> {
        let local = phys_dim.pow(l as u32);
        if h.shape() != (local, local) {
            return Err(Error::DimensionMismatch(format!(
                "local term is {}×{}, expected {local}×{local} for r = {phys_dim}, L = {l}",
                h.nrows(),
                h.ncols()
            )));
        }
        if l > n || step == 0 || !n.is_multiple_of(step) {
            return Err(Error::InvalidArgument(format!(
                "need L ≤ N and step dividing N (L = {l}, N = {n}, step = {step})"
            )));
        }
        let dim = checked_pow(phys_dim, n)?;
        let weight = |p: usize| phys_dim.pow((n - 1 - p) as u32);
        let mut terms = Vec::new();
        for start in (0..n).step_by(step) {
            let pos: Vec<usize> = (0..l).map(|j| (start + j) % n).collect();
            let offsets: Vec<usize> = (0..local)
                .map(|loc| {
                    let mut rem = loc;
                    let mut off = 0;
                    for j in (0..l).rev() {
                        off += (rem % phys_dim) * weight(pos[j]);
                        rem /= phys_dim;
                    }
                    off
                })
                .collect();
            let bases = (0..dim)
                .filter(|&idx| pos.iter().all(|&p| (idx / weight(p)) % phys_dim == 0))
                .collect();
            terms.push(Term { bases, offsets });
        }
        Ok(Self {
            h,
            phys_dim,
            l,
            n,
            step,
            terms,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// `H x`.
    pub fn apply(&self, x: &CVec) -> CVec {
        let local = self.h.nrows();
        let mut y = CVec::zeros(self.dim);
        let mut buf = CVec::zeros(local);
        for term in &self.terms {
            for &b in &term.bases {
                for (k, &o) in term.offsets.iter().enumerate() {
                    buf[k] = x[b + o];
                }
                let out = &self.h * &buf;
                for (k, &o) in term.offsets.iter().enumerate() {
                    y[b + o] += out[k];
                }
            }
        }
        y
    }

    /// Cyclic shift of the basis index by `step` sites.
    fn translate_index(&self, idx: usize) -> usize {
        let head = self.phys_dim.pow((self.n - self.step) as u32);
        (idx % head) * self.phys_dim.pow(self.step as u32) + idx / head
    }

    /// Number of distinct translations `τ^{j·step}`.
    pub fn num_sectors(&self) -> usize {
        self.n / self.step
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        let local = self.h.nrows();
        for term in &self.terms {
            for &b in &term.bases {
                for a in 0..local {
                    for cc in 0..local {
                        let v = self.h[(a, cc)];
                        if v != c(0.0, 0.0) {
                            m[(b + term.offsets[a], b + term.offsets[cc])] += v;
                        }
                    }
                }
            }
        }
        m
    }
}

fn checked_pow(r: usize, n: usize) -> Result<usize> {
    let mut v: usize = 1;
    for _ in 0..n {
        v = v
            .checked_mul(r)
            .filter(|&x| x <= MATRIX_FREE_CAP)
            .ok_or_else(|| Error::CapExceeded(format!("r^N = {r}^{n} exceeds {MATRIX_FREE_CAP}")))?;
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Dense,
    /// Dense within each momentum sector.
    DenseSectors,
    Lanczos,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub ground_energy: f64,
    pub degeneracy: usize,
    /// First eigenvalue above the ground cluster minus the ground energy;
    /// `None` if every computed eigenvalue lies in the cluster.
    pub gap: Option<f64>,
    pub solver: SolverKind,
    /// Largest eigen-residual `‖H v − λ v‖` of the computed pairs (Lanczos only).
    pub max_residual: f64,
    pub ground_tol: f64,
}

impl SpectrumSummary {
    fn from_values(eigenvalues: Vec<f64>, solver: SolverKind, max_residual: f64) -> Self {
        let e0 = eigenvalues[0];
        let degeneracy = eigenvalues.iter().filter(|&&e| e <= e0 + GROUND_TOL).count();
        let gap = eigenvalues.get(degeneracy).map(|e| e - e0);
        Self {
            eigenvalues,
            ground_energy: e0,
            degeneracy,
            gap,
            solver,
            max_residual,
            ground_tol: GROUND_TOL,
        }
    }
}

/// Lowest `k` eigenvalues and eigenvectors (as columns).
pub fn lowest(h: &ChainHamiltonian, k: usize) -> Result<(Vec<f64>, CMat, SolverKind, f64)> {
    let solver = if h.dim() <= DENSE_LIMIT {
        SolverKind::Dense
    } else if h.dim() <= SECTOR_LIMIT * h.num_sectors() {
        SolverKind::DenseSectors
    } else {
        SolverKind::Lanczos
    };
    lowest_with(h, k, solver)
}

/// Like [`lowest`] with an explicit solver. Dense is refused above `2^14`.
pub fn lowest_with(h: &ChainHamiltonian, k: usize, solver: SolverKind) -> Result<(Vec<f64>, CMat, SolverKind, f64)> {
    let k = k.clamp(1, h.dim());
    match solver {
        SolverKind::Dense => {
            if h.dim() > 1 << 14 {
                return Err(Error::CapExceeded(format!("dense solve of dimension {}", h.dim())));
            }
            let (vals, vecs) = linalg::herm_eig(&h.to_dense());
            Ok((vals[..k].to_vec(), vecs.columns(0, k).into_owned(), SolverKind::Dense, 0.0))
        }
        SolverKind::DenseSectors => {
            let (vals, vecs) = sector_lowest(h, k)?;
            Ok((vals, vecs, SolverKind::DenseSectors, 0.0))
        }
        SolverKind::Lanczos => {
            let (vals, vecs, res) = lanczos_lowest(|x| h.apply(x), h.dim(), k, h.num_terms() as f64, 1e-9)?;
            Ok((vals, vecs, SolverKind::Lanczos, res))
        }
    }
}

/// Translation orbits of the product basis.
struct Orbits {
    /// Representative and period of each orbit.
    reps: Vec<(usize, usize)>,
    /// For each basis state: its orbit and the shift `l` with `T^l rep = x`.
    member: Vec<(usize, usize)>,
}

fn orbits(h: &ChainHamiltonian) -> Orbits {
    const NONE: usize = usize::MAX;
    let mut member = vec![(NONE, 0); h.dim()];
    let mut reps = Vec::new();
    for s in 0..h.dim() {
        if member[s].0 != NONE {
            continue;
        }
        let id = reps.len();
        let mut x = s;
        let mut p = 0;
        loop {
            member[x] = (id, p);
            p += 1;
            x = h.translate_index(x);
            if x == s {
                break;
            }
        }
        reps.push((s, p));
    }
    Orbits { reps, member }
}

/// Exact lowest `k` eigenpairs from dense diagonalization of every momentum
/// block. With `θ = 2πq/P` the Bloch state of orbit `(s, p)` is
/// `p^{-1/2} Σ_{j<p} e^{-iθj} T^j|s⟩`; it exists when `q·p ≡ 0 (mod P)`, and
/// `⟨a|H|b⟩ = √(p_b/p_a) Σ_l e^{iθl} (H|s_b⟩)[T^l s_a]`.
fn sector_lowest(h: &ChainHamiltonian, k: usize) -> Result<(Vec<f64>, CMat)> {
    let sectors = h.num_sectors();
    let orb = orbits(h);
    let columns: Vec<Vec<(usize, C64)>> = orb
        .reps
        .par_iter()
        .map(|&(s, _)| {
            let mut e = CVec::zeros(h.dim());
            e[s] = c(1.0, 0.0);
            h.apply(&e).iter().enumerate().filter(|(_, v)| v.norm() > 0.0).map(|(x, &v)| (x, v)).collect()
        })
        .collect();
    let blocks: Vec<(Vec<usize>, Vec<f64>, CMat)> = (0..sectors)
        .into_par_iter()
        .map(|q| {
            let members: Vec<usize> = (0..orb.reps.len()).filter(|&a| (q * orb.reps[a].1).is_multiple_of(sectors)).collect();
            let mut pos = vec![usize::MAX; orb.reps.len()];
            for (i, &a) in members.iter().enumerate() {
                pos[a] = i;
            }
            let theta = TAU * q as f64 / sectors as f64;
            let mut m = CMat::zeros(members.len(), members.len());
            for (jb, &b) in members.iter().enumerate() {
                let pb = orb.reps[b].1 as f64;
                for &(x, v) in &columns[b] {
                    let (a, l) = orb.member[x];
                    if pos[a] != usize::MAX {
                        let pa = orb.reps[a].1 as f64;
                        m[(pos[a], jb)] += C64::from_polar((pb / pa).sqrt(), theta * l as f64) * v;
                    }
                }
            }
            let (vals, vecs) = linalg::herm_eig(&linalg::hermitize(&m));
            (members, vals, vecs)
        })
        .collect();
    let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(h.dim());
    for (q, (_, vals, _)) in blocks.iter().enumerate() {
        all.extend(vals.iter().enumerate().map(|(i, &v)| (v, q, i)));
    }
    if all.len() != h.dim() {
        return Err(Error::Eigen(format!("momentum sectors cover {} of {} states", all.len(), h.dim())));
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let k = k.min(all.len());
    let mut vecs = CMat::zeros(h.dim(), k);
    for (col, &(_, q, i)) in all[..k].iter().enumerate() {
        let (members, _, evecs) = &blocks[q];
        let theta = TAU * q as f64 / sectors as f64;
        for (r, &a) in members.iter().enumerate() {
            let (s, p) = orb.reps[a];
            let amp = evecs[(r, i)] / c((p as f64).sqrt(), 0.0);
            let mut x = s;
            for j in 0..p {
                vecs[(x, col)] += amp * C64::from_polar(1.0, -theta * j as f64);
                x = h.translate_index(x);
            }
        }
    }
    Ok((all[..k].iter().map(|x| x.0).collect(), vecs))
}

pub fn summarize(h: &ChainHamiltonian, k: usize) -> Result<SpectrumSummary> {
    let (vals, _, solver, res) = lowest(h, k)?;
    Ok(SpectrumSummary::from_values(vals, solver, res))
}

/// Lowest `k` eigenpairs of a Hermitian operator given by `apply`.
///
/// Each round runs Lanczos with full reorthogonalization in the orthogonal
/// complement of the already locked vectors and locks the lowest Ritz pair once
/// its residual is below `tol · norm_bound`. Unconverged rounds restart from
/// the current Ritz vector.
pub fn lanczos_lowest<F>(apply: F, dim: usize, k: usize, norm_bound: f64, tol: f64) -> Result<(Vec<f64>, CMat, f64)>
where
    F: Fn(&CVec) -> CVec,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut locked: Vec<CVec> = Vec::new();
    let mut vals = Vec::new();
    let mut worst_res: f64 = 0.0;
    let thresh = tol * norm_bound.max(1.0);
    let project_out = |v: &mut CVec, first: &[CVec], second: &[CVec]| {
        for _ in 0..2 {
            for b in first.iter().chain(second) {
                let ov = b.dotc(v);
                v.axpy(-ov, b, c(1.0, 0.0));
            }
        }
    };
    while locked.len() < k {
        let free = dim - locked.len();
        let max_steps = free.min(160);
        let mut start = CVec::from_fn(dim, |_, _| linalg::complex_gaussian(&mut rng));
        let mut converged = false;
        for _restart in 0..60 {
            project_out(&mut start, &locked, &[]);
            let nrm = start.norm();
            if nrm == 0.0 {
                return Err(Error::Eigen("Lanczos start vector vanished".into()));
            }
            let mut q: Vec<CVec> = vec![start.unscale(nrm)];
            let mut alpha: Vec<f64> = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            for j in 0..max_steps {
                let mut w = apply(&q[j]);
                let hn = w.norm();
                let a = q[j].dotc(&w).re;
                alpha.push(a);
                project_out(&mut w, &locked, &q);
                let b = w.norm();
                // tiny β means the Krylov space is invariant; dividing by it would amplify noise
                if j + 1 == max_steps || b <= 1e-10 * hn.max(f64::MIN_POSITIVE) {
                    break;
                }
                if (j + 1) % 10 == 0 {
                    let s = tridiagonal_eigvecs(&alpha, &beta);
                    if b * s[(j, 0)].norm() <= 0.1 * thresh {
                        break;
                    }
                }
                beta.push(b);
                q.push(w.unscale(b));
            }
            let m = alpha.len();
            let s = tridiagonal_eigvecs(&alpha, &beta[..m - 1]);
            let mut ritz = CVec::zeros(dim);
            for i in 0..m {
                ritz.axpy(s[(i, 0)], &q[i], c(1.0, 0.0));
            }
            project_out(&mut ritz, &locked, &[]);
            let rn = ritz.norm();
            ritz.unscale_mut(rn);
            let hr = apply(&ritz);
            let lam = ritz.dotc(&hr).re;
            let res = (hr - &ritz * c(lam, 0.0)).norm();
            if res <= thresh {
                worst_res = worst_res.max(res);
                vals.push(lam);
                locked.push(ritz);
                converged = true;
                break;
            }
            start = ritz;
        }
        if !converged {
            return Err(Error::Eigen(format!(
                "Lanczos did not converge for eigenvalue {} of {k}",
                locked.len() + 1
            )));
        }
    }
    // locking order is ascending up to rounding; sort for safety
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let mut vecs = CMat::zeros(dim, k);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &locked[i]);
    }
    let vals = order.iter().map(|&i| vals[i]).collect();
    Ok((vals, vecs, worst_res))
}

fn tridiagonal_eigvecs(alpha: &[f64], beta: &[f64]) -> CMat {
    let m = alpha.len();
    let mut t = CMat::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = c(alpha[i], 0.0);
        if i + 1 < m {
            t[(i, i + 1)] = c(beta[i], 0.0);
            t[(i + 1, i)] = c(beta[i], 0.0);
        }
    }
    linalg::herm_eig(&t).1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap_perm(n: usize, r: usize) -> CMat {
        // permutation τ: |i_1 … i_N⟩ ↦ |i_N i_1 … i_{N−1}⟩
        let dim = r.pow(n as u32);
        let mut p = CMat::zeros(dim, dim);
        for idx in 0..dim {
            let last = idx % r;
            let rest = idx / r;
            let new = last * r.pow((n - 1) as u32) + rest;
            p[(new, idx)] = c(1.0, 0.0);
        }
        p
    }

    fn random_herm(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        linalg::hermitize(&linalg::random_gaussian_matrix(n, n, &mut rng))
    }

    #[test]
    fn dense_matches_permutation_conjugation() {
        let (r, n, l) = (2, 4, 2);
        let h = random_herm(4, 1);
        let chain = ChainHamiltonian::new(h.clone(), r, l, n, 1).unwrap();
        let first = linalg::kron(&h, &linalg::identity(r.pow((n - l) as u32)));
        let tau = swap_perm(n, r);
        let mut expected = CMat::zeros(16, 16);
        let mut p = linalg::identity(16);
        for _ in 0..n {
            expected += &p * &first * p.adjoint();
            p = &tau * p;
        }
        assert!(linalg::fro(&(chain.to_dense() - expected)) < 1e-12);
        let x = CVec::from_fn(16, |i, _| c(i as f64, 1.0));
        assert!((chain.apply(&x) - chain.to_dense() * &x).norm() < 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let chain = ChainHamiltonian::new(random_herm(8, 2), 2, 3, 5, 1).unwrap();
        let tau = swap_perm(5, 2);
        let hd = chain.to_dense();
        assert!(linalg::fro(&(&tau * &hd - &hd * &tau)) < 1e-12);
    }

    #[test]
    fn zero_term() {
        let chain = ChainHamiltonian::new(CMat::zeros(4, 4), 2, 2, 4, 1).unwrap();
        assert_eq!(linalg::max_abs(&chain.to_dense()), 0.0);
    }

    #[test]
    fn lanczos_matches_dense_with_degeneracy() {
        // projector-type term gives degenerate low spectrum
        let mut h = linalg::identity(4);
        h[(0, 0)] = c(0.0, 0.0);
        h[(3, 3)] = c(0.0, 0.0);
        let chain = ChainHamiltonian::new(h + random_herm(4, 3) * c(0.01, 0.0), 2, 2, 8, 1).unwrap();
        let (dense, _) = linalg::herm_eig(&chain.to_dense());
        let (vals, vecs, _) = lanczos_lowest(|x| chain.apply(x), chain.dim(), 5, 8.0, 1e-10).unwrap();
        for (a, b) in vals.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(linalg::unitarity_residual(&(vecs.adjoint() * &vecs)) < 1e-8);
    }

    #[test]
    fn sectors_match_dense() {
        for (r, l, n, step, seed) in [(2usize, 2usize, 6, 1, 4u64), (3, 2, 4, 1, 5), (2, 4, 6, 2, 6), (2, 3, 6, 3, 7)] {
            let local = r.pow(l as u32);
            let chain = ChainHamiltonian::new(random_herm(local, seed), r, l, n, step).unwrap();
            let (dense, _) = linalg::herm_eig(&chain.to_dense());
            let (vals, vecs) = sector_lowest(&chain, chain.dim()).unwrap();
            for (a, b) in vals.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-10, "r={r} n={n} step={step}: {a} vs {b}");
            }
            assert!(linalg::unitarity_residual(&(vecs.adjoint() * &vecs)) < 1e-10);
            for (j, &v) in vals.iter().enumerate().take(6) {
                let x = vecs.column(j).into_owned();
                assert!((chain.apply(&x) - &x * c(v, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn orbit_periods() {
        let chain = ChainHamiltonian::new(CMat::zeros(4, 4), 2, 2, 4, 1).unwrap();
        let orb = orbits(&chain);
        let mut periods: Vec<usize> = orb.reps.iter().map(|x| x.1).collect();
        periods.sort();
        // 0000, 1111 | 0101 | 0001, 0011, 0111
        assert_eq!(periods, [1, 1, 2, 4, 4, 4]);
    }
}
