//! Translation-invariant matrix product states with periodic boundary.
//!
//! `|Ψ⟩ = Σ tr(A_{i_1} ⋯ A_{i_N}) |i_1 … i_N⟩`, with `i_1` the most
//! significant digit of the basis index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::KrausMap;
use crate::constructions::tp_normalize_with;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, ONE};
use crate::perron_frobenius::{radius_projector, Classifier, FrobeniusForm};

/// Default cap on `r^N`.
pub const DEFAULT_STATE_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub sites: usize,
    pub phys_dim: usize,
    pub amplitudes: CVec,
}

impl StateVector {
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Cyclic translation by one site: the amplitude of `|i_1 i_2 … i_N⟩` moves
    /// to `|i_N i_1 … i_{N−1}⟩`.
    pub fn translate(&self) -> StateVector {
        self.translate_by(1)
    }

    pub fn translate_by(&self, k: usize) -> StateVector {
        let (r, n) = (self.phys_dim, self.sites);
        let k = k % n.max(1);
        let len = self.amplitudes.len();
        let tail = r.pow(k as u32);
        let head = len / tail;
        let mut out = CVec::zeros(len);
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            // the last k digits move to the front
            let (hi, lo) = (idx / tail, idx % tail);
            out[lo * head + hi] = a;
        }
        StateVector {
            sites: n,
            phys_dim: r,
            amplitudes: out,
        }
    }
}

fn check_cap(r: usize, n: usize, cap: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..n {
        len = len
            .checked_mul(r)
            .filter(|&l| l <= cap)
            .ok_or_else(|| Error::CapExceeded(format!("r^N = {r}^{n} exceeds the cap {cap}")))?;
    }
    Ok(len)
}

/// Amplitudes `tr(X A_{i_1} ⋯ A_{i_N})`.
pub fn mps_vector_with_boundary(kraus: &[CMat], n: usize, boundary: &CMat, cap: usize) -> Result<StateVector> {
    let r = kraus.len();
    if r == 0 || n == 0 {
        return Err(Error::InvalidArgument("need at least one Kraus operator and one site".into()));
    }
    let d = kraus[0].nrows();
    if kraus.iter().any(|a| a.shape() != (d, d)) || boundary.shape() != (d, d) {
        return Err(Error::DimensionMismatch("MPS tensors must be square of equal size".into()));
    }
    let len = check_cap(r, n, cap)?;
    let mut amps = CVec::zeros(len);
    // prefix[k] = X A_{i_1} ⋯ A_{i_k}
    let mut prefix: Vec<CMat> = vec![boundary.clone(); n + 1];
    let mut digits = vec![0usize; n];
    let mut depth = 0;
    loop {
        // descend from `depth` with the current digits
        for k in depth..n {
            prefix[k + 1] = &prefix[k] * &kraus[digits[k]];
        }
        let idx = digits.iter().fold(0, |acc, &x| acc * r + x);
        amps[idx] = linalg::trace(&prefix[n]);
        // increment the digit string, i_N fastest
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(StateVector {
                    sites: n,
                    phys_dim: r,
                    amplitudes: amps,
                });
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < r {
                break;
            }
            digits[k] = 0;
        }
        depth = k;
    }
}

pub fn mps_vector(kraus: &[CMat], n: usize) -> Result<StateVector> {
    let d = kraus.first().map(|a| a.nrows()).unwrap_or(0);
    mps_vector_with_boundary(kraus, n, &linalg::identity(d), DEFAULT_STATE_CAP)
}

/// One irreducible block of the canonical form.
#[derive(Clone, Debug)]
pub struct CanonicalBlock {
    /// Trace-preserving block map in its Frobenius basis, so the adjoint is unital.
    pub map: KrausMap,
    pub weight: f64,
    pub irreducible: bool,
    pub degree: usize,
    pub frobenius: Option<FrobeniusForm>,
    /// Columns spanning the block in the input basis (`D × d`).
    pub embed: CMat,
    /// Rows with `project · embed = 𝟙` (`d × D`).
    pub project: CMat,
    /// Coordinate projectors of the Frobenius blocks in the block basis.
    pub projectors: Vec<CMat>,
}

/// `A_i ≃ scale · ⊕_a weight_a B_i^{(a)}` up to a similarity and discarded
/// off-diagonal blocks, which never contribute to traces of products.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub blocks: Vec<CanonicalBlock>,
    /// Similarity whose columns are the block embeddings.
    pub basis: CMat,
    pub scale: f64,
}

impl CanonicalForm {
    /// `‖project_a · A_i · embed_b‖` over `a > b`: the part a lower triangular
    /// block would need. Zero up to rounding.
    pub fn lower_residual(&self, kraus: &[CMat]) -> f64 {
        let mut worst: f64 = 0.0;
        for (ia, a) in self.blocks.iter().enumerate() {
            for b in &self.blocks[..ia] {
                for k in kraus {
                    worst = worst.max(linalg::op_norm(&(&a.project * k * &b.embed)));
                }
            }
        }
        worst
    }

    /// `scale^N Σ_a weight_a^N |Ψ(B^{(a)})⟩`.
    pub fn reassemble(&self, n: usize) -> Result<StateVector> {
        let mut acc: Option<StateVector> = None;
        for b in &self.blocks {
            let v = mps_vector(b.map.kraus(), n)?;
            let f = c((self.scale * b.weight).powi(n as i32), 0.0);
            acc = Some(match acc {
                None => StateVector {
                    amplitudes: v.amplitudes * f,
                    ..v
                },
                Some(mut s) => {
                    s.amplitudes += v.amplitudes * f;
                    s
                }
            });
        }
        acc.ok_or_else(|| Error::Diagnostic("canonical form has no blocks".into()))
    }
}

/// A node of the splitting recursion: `B_i = Y A_i X`.
struct Piece {
    x: CMat,
    y: CMat,
    kraus: Vec<CMat>,
}

const SPLIT_RESIDUAL: f64 = 1e-8;
const SPLIT_DRAWS: usize = 10;

/// Canonical decomposition into irreducible blocks.
pub fn canonical_decompose(kraus: &[CMat]) -> Result<CanonicalForm> {
    canonical_decompose_with(&Classifier::default(), kraus, 0)
}

pub fn canonical_decompose_with(cl: &Classifier, kraus: &[CMat], seed: u64) -> Result<CanonicalForm> {
    let input = KrausMap::new(kraus.to_vec())?;
    let d = input.dim();
    let mu = cl.spectral_data(&input)?.mu;
    if mu <= 0.0 {
        return Err(Error::InvalidArgument("map has spectral radius zero; the MPS vanishes for large N".into()));
    }
    let s = c(1.0 / mu.sqrt(), 0.0);
    let root = Piece {
        x: linalg::identity(d),
        y: linalg::identity(d),
        kraus: kraus.iter().map(|a| a * s).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leaves = Vec::new();
    split(cl, root, 0, d, &mut rng, &mut leaves)?;

    let mut raw = Vec::with_capacity(leaves.len());
    for leaf in leaves {
        let block = KrausMap::new(leaf.kraus.clone())?;
        let mu_a = cl.spectral_data(&block)?.mu;
        if mu_a <= 1e-12 {
            continue;
        }
        raw.push((leaf, block, mu_a));
    }
    let mu_max = raw.iter().map(|x| x.2).fold(0.0, f64::max);
    let mut blocks = Vec::with_capacity(raw.len());
    for (leaf, block, mu_a) in raw {
        let nrm = tp_normalize_with(cl, &block)?;
        // tp form: B' = S B S^{-1}/√μ_a with S = σ^{1/2}
        let (sq, sq_inv) = linalg::pd_sqrt_pair(&nrm.rho);
        let irr = cl.is_irreducible(&nrm.map)?;
        if !irr.passed {
            return Err(Error::Diagnostic(format!(
                "leaf block of dimension {} is not irreducible",
                block.dim()
            )));
        }
        let form = cl.frobenius_form(&nrm.map)?;
        let q = form.basis.clone();
        let map = nrm.map.rotate(&q.adjoint())?;
        let embed = &leaf.x * &sq_inv * &q;
        let project = q.adjoint() * &sq * &leaf.y;
        let mut projectors = Vec::with_capacity(form.degree);
        let mut off = 0;
        for &dk in &form.dims {
            let mut p = CMat::zeros(block.dim(), block.dim());
            for j in off..off + dk {
                p[(j, j)] = ONE;
            }
            projectors.push(p);
            off += dk;
        }
        blocks.push(CanonicalBlock {
            map,
            weight: (mu_a / mu_max).sqrt(),
            irreducible: true,
            degree: form.degree,
            frobenius: (form.degree >= 2).then_some(form),
            embed,
            project,
            projectors,
        });
    }
    if blocks.is_empty() {
        return Err(Error::Diagnostic("no block with positive spectral radius".into()));
    }
    let total: usize = blocks.iter().map(|b| b.embed.ncols()).sum();
    let mut basis = CMat::zeros(d, total);
    let mut off = 0;
    for b in &blocks {
        basis.columns_mut(off, b.embed.ncols()).copy_from(&b.embed);
        off += b.embed.ncols();
    }
    Ok(CanonicalForm {
        blocks,
        basis,
        scale: (mu * mu_max).sqrt(),
    })
}

/// Vector iteration `v ← P v` from an approximate fixed vector. Removes the
/// error that repeated squaring leaves in decaying directions.
fn polish(p: &CMat, mut v: CVec) -> CVec {
    let mut last = f64::INFINITY;
    for _ in 0..500 {
        let mut next = p * &v;
        let n = next.norm();
        if n == 0.0 {
            return v;
        }
        next.unscale_mut(n / v.norm());
        let diff = (&next - &v).norm();
        v = next;
        if diff <= 1e-15 * v.norm() || diff >= last {
            break;
        }
        last = diff;
    }
    v
}

/// Splits `piece` along a unitary `[Q1 Q2]` where `span Q1` is invariant;
/// the upper off-diagonal block is dropped.
fn split_invariant(piece: &Piece, q1: &CMat, q2: &CMat) -> (Piece, Piece) {
    let part = |q: &CMat| Piece {
        x: &piece.x * q,
        y: q.adjoint() * &piece.y,
        kraus: piece.kraus.iter().map(|a| q.adjoint() * a * q).collect(),
    };
    (part(q1), part(q2))
}

/// Proper invariant subspace read off the support (or kernel, with
/// `kernel`) of a positive fixed point. Several candidates are tried and the
/// one with the smallest leak `max_i ‖Q2† A_i Q1‖` wins.
fn best_invariant(kraus: &[CMat], points: &[CMat], rank_tol: f64, kernel: bool) -> Option<(CMat, CMat)> {
    let d = kraus[0].nrows();
    let mut best: Option<(f64, CMat, CMat)> = None;
    for x in points {
        // fixed points come with an arbitrary sign
        let x = if linalg::trace(x).re < 0.0 { -x } else { x.clone() };
        let (vals, vecs) = linalg::herm_eig(&x);
        let top = vals[d - 1].abs().max(vals[0].abs());
        if top == 0.0 {
            continue;
        }
        for tol in [rank_tol.sqrt(), rank_tol, rank_tol.powf(0.75)] {
            // eigenvalues ascend; the support is the trailing block
            let k = vals.iter().filter(|&&v| v <= tol * top).count();
            if k == 0 || k == d {
                continue;
            }
            let low = vecs.columns(0, k).into_owned();
            let high = vecs.columns(k, d - k).into_owned();
            let (q1, q2) = if kernel { (low, high) } else { (high, low) };
            let leak = kraus.iter().map(|a| linalg::op_norm(&(q2.adjoint() * a * &q1))).fold(0.0, f64::max);
            log::trace!("invariant candidate dim {} leak {leak:.3e}", q1.ncols());
            if best.as_ref().is_none_or(|b| leak < b.0) {
                best = Some((leak, q1, q2));
            }
        }
    }
    best.map(|(_, q1, q2)| (q1, q2))
}

fn split(
    cl: &Classifier,
    piece: Piece,
    depth: usize,
    max_depth: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Piece>,
) -> Result<()> {
    let d = piece.kraus[0].nrows();
    let map = KrausMap::new(piece.kraus.clone())?;
    let m = map.transfer();
    let sd = cl.spectral_data(&map)?;
    if sd.mu <= 1e-12 || d == 1 {
        out.push(piece);
        return Ok(());
    }
    if depth > max_depth {
        return Err(Error::Diagnostic(format!(
            "block of dimension {d} not resolved within recursion depth {max_depth}"
        )));
    }
    let pi = radius_projector(m, sd.mu);
    let one = linalg::vec_of(&linalg::identity(d));
    let mh = m / c(sd.mu, 0.0);
    let avg = (&mh + &mh * &mh) * c(0.5, 0.0);
    let raw_r = &pi * &one;
    let raw_s = pi.adjoint() * &one;
    let fixed = |v: CVec| linalg::hermitize(&linalg::unvec(&v, d));
    let rhos = [fixed(polish(&avg, raw_r.clone())), fixed(raw_r)];
    let sigmas = [fixed(polish(&avg.adjoint(), raw_s.clone())), fixed(raw_s)];

    // support of ρ is invariant under every A_i
    if let Some((sup, rest)) = best_invariant(&piece.kraus, &rhos, cl.tol.rank, false) {
        let (a, b) = split_invariant(&piece, &sup, &rest);
        split(cl, a, depth + 1, max_depth, rng, out)?;
        return split(cl, b, depth + 1, max_depth, rng, out);
    }
    // kernel of σ is invariant under every A_i
    if let Some((ker, sup_s)) = best_invariant(&piece.kraus, &sigmas, cl.tol.rank, true) {
        let (a, b) = split_invariant(&piece, &ker, &sup_s);
        split(cl, a, depth + 1, max_depth, rng, out)?;
        return split(cl, b, depth + 1, max_depth, rng, out);
    }
    let rho = if linalg::trace(&rhos[0]).re < 0.0 { -&rhos[0] } else { rhos[0].clone() };
    let (_, s, _) = linalg::svd(&pi);
    let fixed_dim = s.iter().filter(|&&x| x > 1e-6 * s[0]).count();
    if fixed_dim <= 1 {
        out.push(piece);
        return Ok(());
    }
    // unital gauge C_i = ρ^{-1/2} B_i ρ^{1/2} / √μ; the fixed points of C form an
    // algebra whose spectral projectors reduce every C_i
    let (sq, sq_inv) = linalg::pd_sqrt_pair(&rho);
    let f = c(1.0 / sd.mu.sqrt(), 0.0);
    let ck: Vec<CMat> = piece.kraus.iter().map(|a| &sq_inv * a * &sq * f).collect();
    let cmap = KrausMap::new(ck.clone())?;
    let pic = radius_projector(cmap.transfer(), 1.0);
    let scale = ck.iter().map(linalg::op_norm).fold(0.0, f64::max).max(1.0);
    for _ in 0..SPLIT_DRAWS {
        let g = linalg::hermitize(&linalg::random_gaussian_matrix(d, d, rng));
        let x = linalg::hermitize(&linalg::unvec(&(&pic * linalg::vec_of(&g)), d));
        let (vals, vecs) = linalg::herm_eig(&x);
        let spread = vals[d - 1] - vals[0];
        if spread <= 1e-10 * linalg::fro(&x).max(1e-300) {
            continue;
        }
        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for j in 1..d {
            if vals[j] - vals[j - 1] > 1e-6 * spread {
                groups.push((start, j - start));
                start = j;
            }
        }
        groups.push((start, d - start));
        if groups.len() < 2 {
            continue;
        }
        let qs: Vec<CMat> = groups.iter().map(|&(o, n)| vecs.columns(o, n).into_owned()).collect();
        let mut off = 0.0f64;
        for (j, qj) in qs.iter().enumerate() {
            for (l, ql) in qs.iter().enumerate() {
                if j != l {
                    for a in &ck {
                        off = off.max(linalg::op_norm(&(qj.adjoint() * a * ql)));
                    }
                }
            }
        }
        if off > SPLIT_RESIDUAL * scale {
            log::debug!("rejected split with off-diagonal residual {off:.3e}");
            continue;
        }
        for q in qs {
            let child = Piece {
                x: &piece.x * &sq * &q,
                y: q.adjoint() * &sq_inv * &piece.y,
                kraus: piece.kraus.iter().map(|a| q.adjoint() * &sq_inv * a * &sq * &q).collect(),
            };
            split(cl, child, depth + 1, max_depth, rng, out)?;
        }
        return Ok(());
    }
    Err(Error::Diagnostic(format!(
        "could not split a block of dimension {d} with a {fixed_dim}-dimensional fixed space after {SPLIT_DRAWS} draws"
    )))
}

/// Components `tr(P_k B_{i_1} ⋯ B_{i_N})` of a block of degree `m`.
///
/// Returns an empty list when `m` does not divide `N`; the block's MPS is then
/// the zero vector.
pub fn periodic_decomposition(block: &CanonicalBlock, n: usize) -> Result<Vec<StateVector>> {
    periodic_components(block.map.kraus(), &block.projectors, n)
}

pub fn periodic_components(kraus: &[CMat], projectors: &[CMat], n: usize) -> Result<Vec<StateVector>> {
    let m = projectors.len();
    if m == 0 || !n.is_multiple_of(m) {
        return Ok(Vec::new());
    }
    projectors
        .iter()
        .map(|p| mps_vector_with_boundary(kraus, n, p, DEFAULT_STATE_CAP))
        .collect()
}
