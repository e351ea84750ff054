//! Parent Hamiltonians of translation-invariant MPS and gapped paths between them.
//!
//! For Kraus operators `A_i` the space `G_[1,L]` is spanned by the vectors
//! `Ψ(Y) = Σ tr(Y A_{i_1} ⋯ A_{i_L}) |i_1 … i_L⟩`. The local term `h` projects onto
//! its orthogonal complement and `H = Σ_i τ^i(h)` on a ring of `N` sites.
//!
//! Degree-`m` MPS are handled by blocking `m` sites into one super-site; the
//! resulting Hamiltonian is only invariant under translations by `m` sites.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::KrausMap;
use crate::constructions::{direct_sum, tp_normalize};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::mps::{canonical_decompose_with, CanonicalForm, StateVector};
use crate::paths::{connect_irreducible_fixed_degree, connect_primitive, CertifiedPath, PathConfig};
use crate::perron_frobenius::{Classifier, PrimitivityMethod};
use crate::spectrum::{self, ChainHamiltonian, SpectrumSummary};

/// Default cap on `r^L` for local terms.
pub const LOCAL_CAP: usize = 1 << 12;
/// Relative eigenvalue threshold separating image and kernel of reduced densities.
pub const IMAGE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct GroundSpace {
    pub l: usize,
    pub phys_dim: usize,
    /// Orthonormal columns spanning `G_[1,L]`.
    pub vectors: CMat,
    pub source: String,
}

impl GroundSpace {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Products `A_{i_1} ⋯ A_{i_L}` for all strings, `i_1` most significant.
pub fn string_products(kraus: &[CMat], l: usize, cap: usize) -> Result<Vec<CMat>> {
    let r = kraus.len();
    if r == 0 || l == 0 {
        return Err(Error::InvalidArgument("need Kraus operators and L ≥ 1".into()));
    }
    let mut len: usize = 1;
    for _ in 0..l {
        len = len
            .checked_mul(r)
            .filter(|&x| x <= cap)
            .ok_or_else(|| Error::CapExceeded(format!("r^L = {r}^{l} exceeds {cap}")))?;
    }
    let mut level: Vec<CMat> = kraus.to_vec();
    for _ in 1..l {
        level = level
            .iter()
            .flat_map(|p| kraus.iter().map(move |a| p * a))
            .collect();
    }
    Ok(level)
}

/// Columns `Ψ(E_ab)[I] = (A_I)[b, a]` for all matrix units.
fn generating_vectors(kraus: &[CMat], l: usize) -> Result<CMat> {
    let prods = string_products(kraus, l, LOCAL_CAP)?;
    let d = kraus[0].nrows();
    Ok(CMat::from_fn(prods.len(), d * d, |i, col| {
        let (a, b) = (col % d, col / d);
        prods[i][(b, a)]
    }))
}

pub fn ground_space(kraus: &[CMat], l: usize) -> Result<GroundSpace> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!("interaction length must be ≥ 2 (got {l})")));
    }
    let g = generating_vectors(kraus, l)?;
    let (vectors, _) = linalg::orth(&g, IMAGE_TOL.sqrt());
    Ok(GroundSpace {
        l,
        phys_dim: kraus.len(),
        vectors,
        source: format!("single list, D = {}", kraus[0].nrows()),
    })
}

/// Sum of the ground spaces of several blocks. Fails if they are not
/// linearly independent.
pub fn ground_space_of_blocks(blocks: &[Vec<CMat>], l: usize) -> Result<GroundSpace> {
    let mut parts = Vec::with_capacity(blocks.len());
    for b in blocks {
        parts.push(ground_space(b, l)?);
    }
    let total: usize = parts.iter().map(|p| p.dim()).sum();
    let rows = parts[0].vectors.nrows();
    let mut stacked = CMat::zeros(rows, total);
    let mut off = 0;
    for p in &parts {
        stacked.columns_mut(off, p.dim()).copy_from(&p.vectors);
        off += p.dim();
    }
    let (vectors, _) = linalg::orth(&stacked, IMAGE_TOL.sqrt());
    if vectors.ncols() != total {
        return Err(Error::Diagnostic(format!(
            "block ground spaces are linearly dependent at L = {l}: rank {} of {total}",
            vectors.ncols()
        )));
    }
    Ok(GroundSpace {
        l,
        phys_dim: blocks[0].len(),
        vectors,
        source: format!(
            "{} blocks of dims {:?}",
            blocks.len(),
            parts.iter().map(|p| p.dim()).collect::<Vec<_>>()
        ),
    })
}

pub fn ground_space_of_form(form: &CanonicalForm, l: usize) -> Result<GroundSpace> {
    let blocks: Vec<Vec<CMat>> = form.blocks.iter().map(|b| b.map.kraus().to_vec()).collect();
    ground_space_of_blocks(&blocks, l)
}

/// `ρ[I, J] = (1/D) tr(A_I A_J†)`.
pub fn reduced_density(kraus: &[CMat], l: usize) -> Result<CMat> {
    let prods = string_products(kraus, l, LOCAL_CAP)?;
    let d = kraus[0].nrows();
    let v = CMat::from_fn(prods.len(), d * d, |i, col| prods[i][(col % d, col / d)]);
    Ok(linalg::hermitize(&(&v * v.adjoint())) / c(d as f64, 0.0))
}

/// `𝟙 − Σ |v⟩⟨v|`.
pub fn local_projector(space: &GroundSpace) -> CMat {
    let n = space.vectors.nrows();
    if space.dim() == n {
        log::warn!("ground space is the full local space; the local term vanishes");
    }
    linalg::hermitize(&(linalg::identity(n) - &space.vectors * space.vectors.adjoint()))
}

/// Projector onto the kernel of a PSD matrix and the rank of its image.
pub fn projector_from_density(rho: &CMat) -> (CMat, usize) {
    let (vals, vecs) = linalg::herm_eig(rho);
    let n = vals.len();
    let top = vals.last().cloned().unwrap_or(0.0);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > IMAGE_TOL * top).collect();
    let mut h = linalg::identity(n);
    for &i in &keep {
        let v = vecs.column(i);
        h -= v * v.adjoint();
    }
    (linalg::hermitize(&h), keep.len())
}

/// A local projector assembled on a periodic chain.
#[derive(Clone, Debug)]
pub struct ParentModel {
    pub h: CMat,
    pub l: usize,
    pub n: usize,
    pub phys_dim: usize,
    /// Translation step: 1, or `m` for blocked models.
    pub step: usize,
    pub ground_dim: usize,
    pub hamiltonian: ChainHamiltonian,
    pub spectrum: Option<SpectrumSummary>,
}

impl ParentModel {
    pub fn diagonalize(&mut self, k: usize) -> Result<&SpectrumSummary> {
        let s = spectrum::summarize(&self.hamiltonian, k)?;
        Ok(self.spectrum.insert(s))
    }

    /// `‖H ψ‖ / (‖H‖_bound ‖ψ‖)` with `‖H‖ ≤ number of terms`.
    pub fn kernel_residual(&self, psi: &StateVector) -> f64 {
        let nrm = psi.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        let hv = self.hamiltonian.apply(&psi.amplitudes);
        hv.norm() / (nrm * self.hamiltonian.num_terms() as f64)
    }

    pub fn projector_residual(&self) -> f64 {
        linalg::max_abs(&(&self.h * &self.h - &self.h)).max(linalg::max_abs(&(&self.h - self.h.adjoint())))
    }
}

/// `H = Σ_{j} τ^{j·step}(h)` with `h` on `l` sites of dimension `phys_dim`.
pub fn assemble_hamiltonian(h: CMat, phys_dim: usize, n: usize, l: usize, step: usize) -> Result<ParentModel> {
    let ground_dim = h.nrows() - linalg::psd_rank(&h, 1e-9).0;
    let hamiltonian = ChainHamiltonian::new(h.clone(), phys_dim, l, n, step)?;
    Ok(ParentModel {
        h,
        l,
        n,
        phys_dim,
        step,
        ground_dim,
        hamiltonian,
        spectrum: None,
    })
}

/// Unblocked parent Hamiltonian of an MPS.
pub fn parent_model(kraus: &[CMat], l: usize, n: usize) -> Result<ParentModel> {
    let space = ground_space(kraus, l)?;
    let h = local_projector(&space);
    assemble_hamiltonian(h, kraus.len(), n, l, 1)
}

/// Products of `m` consecutive Kraus operators, indexed like `m` physical sites.
pub fn super_site_kraus(kraus: &[CMat], m: usize) -> Result<Vec<CMat>> {
    string_products(kraus, m, LOCAL_CAP)
}

/// Parent Hamiltonian of a degree-`m` MPS on the chain blocked into super-sites
/// of `m` physical sites. The local term covers `l_blocks` super-sites and the
/// model is translated by `m` physical sites.
pub fn blocked_parent_model(kraus: &[CMat], m: usize, l_blocks: usize, n: usize) -> Result<ParentModel> {
    if m == 0 || !n.is_multiple_of(m) {
        return Err(Error::InvalidArgument(format!("blocking needs m | N (m = {m}, N = {n})")));
    }
    if m == 1 {
        return parent_model(kraus, l_blocks, n);
    }
    let sup = super_site_kraus(kraus, m)?;
    let space = ground_space(&sup, l_blocks)?;
    let h = local_projector(&space);
    assemble_hamiltonian(h, kraus.len(), n, m * l_blocks, m)
}

/// Cheapest interaction length with a full-rank ground space: `n* + 1`,
/// counted in super-sites of `m` sites. For `m > 1` the largest Wielandt
/// index over the primitive blocks of `T^m` is used. Falls back to 2 when no
/// primitive structure is found (e.g. direct sums).
pub fn default_interaction_length(cl: &Classifier, kraus: &[CMat], m: usize) -> Result<usize> {
    let map = KrausMap::new(kraus.to_vec())?;
    let blocks = if m > 1 {
        match cl.primitive_block_decomposition(&map) {
            Ok(b) if b.len() == m => b,
            _ => return Ok(2),
        }
    } else {
        vec![map]
    };
    let mut n_star = 1;
    for b in &blocks {
        match cl.is_primitive(b, PrimitivityMethod::WIELANDT)?.n_star {
            Some(n) => n_star = n_star.max(n as usize),
            None => return Ok(2),
        }
    }
    Ok(n_star + 1)
}

/// `D⁴ + 1` super-sites: long enough for any primitive block.
pub fn universal_interaction_length(kraus: &[CMat]) -> usize {
    kraus[0].nrows().pow(4) + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub ground_energy: f64,
    pub degeneracy: usize,
    pub gap: Option<f64>,
}

/// Gap and degeneracy for every admissible ring size up to `n_max`: multiples
/// of `m` from `m·(l + 1)` on. Finite-size data only.
pub fn gap_scaling(kraus: &[CMat], m: usize, l: usize, n_max: usize, k: usize) -> Result<Vec<ScalingPoint>> {
    let sizes: Vec<usize> = (m * (l + 1)..=n_max).step_by(m.max(1)).collect();
    sizes
        .par_iter()
        .map(|&n| {
            let mut model = blocked_parent_model(kraus, m, l, n)?;
            let s = model.diagonalize(k)?;
            Ok(ScalingPoint {
                n,
                ground_energy: s.ground_energy,
                degeneracy: s.degeneracy,
                gap: s.gap,
            })
        })
        .collect()
}

/// Local term from the reduced density of `l` sites (or `l` super-sites of `m` sites).
fn local_term(kraus: &[CMat], m: usize, l: usize) -> Result<(CMat, usize)> {
    let k = if m > 1 { super_site_kraus(kraus, m)? } else { kraus.to_vec() };
    Ok(projector_from_density(&reduced_density(&k, l)?))
}

/// Ranks of the reduced densities and the largest entrywise jump of the local
/// term between consecutive maps.
pub fn projector_jumps(maps: &[Vec<CMat>], m: usize, l: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let terms: Vec<(CMat, usize)> = maps.par_iter().map(|k| local_term(k, m, l)).collect::<Result<_>>()?;
    let ranks = terms.iter().map(|x| x.1).collect();
    let jumps = terms.windows(2).map(|w| linalg::max_abs(&(&w[1].0 - &w[0].0))).collect();
    Ok((ranks, jumps))
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub l: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_retries: usize,
    /// Smallest acceptable gap as a fraction of the smaller endpoint gap.
    pub gap_floor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 6,
            l: 3,
            samples: 21,
            seed: 0,
            max_retries: 20,
            gap_floor: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRow {
    pub t: f64,
    pub gap: Option<f64>,
    pub degeneracy: usize,
    pub ground_dim: usize,
    pub h_jump: f64,
    pub certificate_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Block structure shared by both endpoints: `(dim, degree)` per block.
    pub structure: Vec<(usize, usize)>,
    pub blocking: usize,
    pub rows: Vec<ExperimentRow>,
    pub min_gap: f64,
    pub endpoint_gap: f64,
    pub accepted: bool,
    pub message: String,
    /// Finite-size data only; no extrapolation to the infinite chain.
    pub note: &'static str,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,gap,degeneracy,h_jump,certificate_ok\n");
        for r in &self.rows {
            let gap = r.gap.map(|g| format!("{g:.16e}")).unwrap_or_else(|| "nan".into());
            s.push_str(&format!(
                "{:.16e},{gap},{},{:.16e},{}\n",
                r.t, r.degeneracy, r.h_jump, r.certificate_ok
            ));
        }
        s
    }
}

fn structure_of(form: &CanonicalForm) -> Vec<(usize, usize)> {
    let mut s: Vec<(usize, usize)> = form.blocks.iter().map(|b| (b.map.dim(), b.degree)).collect();
    s.sort();
    s
}

fn as_tp(cl: &Classifier, map: &KrausMap) -> Result<KrausMap> {
    if map.tp_residual() <= cl.tol.tp {
        Ok(map.clone())
    } else {
        tp_normalize(map)
    }
}

/// Follows a certified channel path between two MPS and tracks the parent
/// Hamiltonian spectrum at every sample.
///
/// Supported structures: a single irreducible block (primitive, or of degree
/// `m` via the `m`-blocked model with `L` super-sites) and direct sums of
/// primitive blocks, connected block by block. Endpoints whose block
/// structures differ are refused.
pub fn hamiltonian_path_experiment(a: &KrausMap, b: &KrausMap, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let cl = Classifier::default();
    let fa = canonical_decompose_with(&cl, a.kraus(), cfg.seed)?;
    let fb = canonical_decompose_with(&cl, b.kraus(), cfg.seed)?;
    let (sa, sb) = (structure_of(&fa), structure_of(&fb));
    if sa != sb {
        let ga = ground_space_of_form(&fa, cfg.l).map(|g| g.dim()).unwrap_or(0);
        let gb = ground_space_of_form(&fb, cfg.l).map(|g| g.dim()).unwrap_or(0);
        return Err(Error::Refused(format!(
            "block structures differ ((dim, degree) {sa:?} vs {sb:?}); ground-space dimension mismatch at L = {}: {ga} vs {gb}",
            cfg.l
        )));
    }
    let pcfg = PathConfig {
        samples: cfg.samples,
        max_retries: cfg.max_retries,
        seed: cfg.seed,
        ..PathConfig::default()
    };
    let all_primitive = sa.iter().all(|&(_, m)| m == 1);
    let (paths, blocking, weights): (Vec<CertifiedPath>, usize, Option<(Vec<f64>, Vec<f64>)>) = if sa.len() == 1 {
        let (ta, tb) = (as_tp(&cl, a)?, as_tp(&cl, b)?);
        let m = sa[0].1;
        let p = if m == 1 {
            connect_primitive(&ta, &tb, true, &pcfg)?
        } else {
            connect_irreducible_fixed_degree(&ta, &tb, &pcfg)?
        };
        (vec![p], m, None)
    } else if all_primitive {
        let order = |f: &CanonicalForm| {
            let mut idx: Vec<usize> = (0..f.blocks.len()).collect();
            idx.sort_by_key(|&i| f.blocks[i].map.dim());
            idx
        };
        let (oa, ob) = (order(&fa), order(&fb));
        let mut paths = Vec::new();
        let (mut wa, mut wb) = (Vec::new(), Vec::new());
        for (&ia, &ib) in oa.iter().zip(&ob) {
            paths.push(connect_primitive(&fa.blocks[ia].map, &fb.blocks[ib].map, true, &pcfg)?);
            wa.push(fa.blocks[ia].weight);
            wb.push(fb.blocks[ib].weight);
        }
        (paths, 1, Some((wa, wb)))
    } else {
        return Err(Error::Refused(format!(
            "mixed block structure {sa:?} is not supported; use a single irreducible block or primitive blocks"
        )));
    };
    let path_ok = paths.iter().all(|p| p.accepted);
    let expected = if blocking > 1 { blocking } else { sa.len() };
    let grid: Vec<f64> = paths[0].samples.iter().map(|s| s.t).collect();
    let maps: Vec<Vec<CMat>> = (0..grid.len())
        .map(|j| match &weights {
            None => Ok(paths[0].samples[j].map.kraus().to_vec()),
            Some((wa, wb)) => {
                let t = grid[j];
                let blocks: Vec<KrausMap> = paths.iter().map(|p| p.samples[j].map.clone()).collect();
                let w: Vec<f64> = wa.iter().zip(wb).map(|(x, y)| (1.0 - t) * x + t * y).collect();
                Ok(direct_sum(&blocks, &w)?.into_kraus())
            }
        })
        .collect::<Result<_>>()?;
    let sample_ok: Vec<bool> = (0..grid.len())
        .map(|j| paths.iter().all(|p| p.samples[j].passed()))
        .collect();
    let n = cfg.n;
    let l = cfg.l;
    let spectra: Vec<(CMat, usize, SpectrumSummary)> = maps
        .par_iter()
        .map(|k| {
            let (h, rank) = local_term(k, blocking, l)?;
            let r = k.len();
            let model = assemble_hamiltonian(h.clone(), r, n, blocking * l, blocking)?;
            let s = spectrum::summarize(&model.hamiltonian, expected + 3)?;
            Ok((h, rank, s))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(grid.len());
    for (j, (h, rank, s)) in spectra.iter().enumerate() {
        let h_jump = if j == 0 { 0.0 } else { linalg::max_abs(&(h - &spectra[j - 1].0)) };
        rows.push(ExperimentRow {
            t: grid[j],
            gap: s.gap,
            degeneracy: s.degeneracy,
            ground_dim: *rank,
            h_jump,
            certificate_ok: sample_ok[j],
        });
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap.unwrap_or(0.0)).collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let endpoint_gap = gaps[0].min(*gaps.last().expect("non-empty grid"));
    let g0 = rows[0].degeneracy;
    let dim0 = rows[0].ground_dim;
    let mut problems = Vec::new();
    if !path_ok {
        problems.push("channel path not certified".to_string());
    }
    if let Some(r) = rows.iter().find(|r| r.degeneracy != g0) {
        problems.push(format!("degeneracy changes from {g0} to {} at t = {:.4}", r.degeneracy, r.t));
    }
    if let Some(r) = rows.iter().find(|r| r.ground_dim != dim0) {
        problems.push(format!("ground-space dimension changes from {dim0} to {} at t = {:.4}", r.ground_dim, r.t));
    }
    if g0 != expected {
        problems.push(format!("ground degeneracy {g0}, expected {expected}"));
    }
    if !(min_gap >= cfg.gap_floor * endpoint_gap && min_gap > 0.0) {
        problems.push(format!(
            "minimum gap {min_gap:.4e} below {} × endpoint gap {endpoint_gap:.4e}",
            cfg.gap_floor
        ));
    }
    let accepted = problems.is_empty();
    Ok(ExperimentReport {
        config: cfg.clone(),
        structure: sa,
        blocking,
        rows,
        min_gap,
        endpoint_gap,
        accepted,
        message: if accepted { "accepted".into() } else { problems.join("; ") },
        note: crate::io::FINITE_SIZE_NOTE,
    })
}

/// Amplitudes of a state as a column vector; convenience for kernel checks.
pub fn state_column(psi: &StateVector) -> CVec {
    psi.amplitudes.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{aklt_kraus, flip_channel, ghz_kraus, random_channel, shift_channel, weyl_channel};
    use crate::mps::mps_vector;

    #[test]
    fn ghz_ground_space_and_density() {
        let g = ground_space(&ghz_kraus(), 2).unwrap();
        assert_eq!(g.dim(), 2);
        let rho = reduced_density(&ghz_kraus(), 2).unwrap();
        let mut expected = CMat::zeros(4, 4);
        expected[(0, 0)] = c(0.5, 0.0);
        expected[(3, 3)] = c(0.5, 0.0);
        assert!(linalg::fro(&(rho - expected)) < 1e-14);
        let h = local_projector(&g);
        assert_eq!(linalg::psd_rank(&h, 1e-9).0, 2);
    }

    #[test]
    fn weyl_ground_space_full() {
        let k = weyl_channel(2, 3).unwrap().into_kraus();
        let g = ground_space(&k, 3).unwrap();
        assert_eq!(g.dim(), 4);
        let rho = reduced_density(&k, 3).unwrap();
        let (vals, vecs) = linalg::herm_eig(&rho);
        let top = vals.last().cloned().unwrap();
        let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-9 * top).collect();
        let img = CMat::from_columns(&idx.iter().map(|&i| vecs.column(i).into_owned()).collect::<Vec<_>>());
        assert!(linalg::subspace_distance(&img, &g.vectors) < 1e-10);
    }

    #[test]
    fn density_trace_matches_transfer() {
        let map = random_channel(2, 3, 4).unwrap().scaled(0.8);
        let d = map.dim();
        for l in 2..=4 {
            let rho = reduced_density(map.kraus(), l).unwrap();
            let one = linalg::vec_of(&linalg::identity(d));
            let expected = (one.adjoint() * map.power_transfer(l as u64) * &one)[(0, 0)] / c(d as f64, 0.0);
            assert!((linalg::trace(&rho) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn aklt_projector_rank_and_symmetry() {
        let g = ground_space(&aklt_kraus(), 2).unwrap();
        assert_eq!(g.dim(), 4);
        let h = local_projector(&g);
        assert_eq!(linalg::psd_rank(&h, 1e-9).0, 5);
        // total S_z and S_x on two spin-1 sites
        let s = 1.0 / 2f64.sqrt();
        let sz = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]));
        let sx = CMat::from_row_slice(3, 3, &[
            c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0),
            c(s, 0.0), c(0.0, 0.0), c(s, 0.0),
            c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0),
        ]);
        for op in [sz, sx] {
            let tot = linalg::kron(&op, &linalg::identity(3)) + linalg::kron(&linalg::identity(3), &op);
            assert!(linalg::fro(&(&tot * &h - &h * &tot)) < 1e-8);
        }
    }

    #[test]
    fn ghz_model_kernel() {
        let mut model = parent_model(&ghz_kraus(), 2, 4).unwrap();
        assert!(model.projector_residual() < 1e-10);
        let s = model.diagonalize(6).unwrap();
        assert_eq!(s.degeneracy, 2);
        assert!(s.gap.unwrap() > 0.0);
        let psi = mps_vector(&ghz_kraus(), 4).unwrap();
        assert!(model.kernel_residual(&psi) < 1e-12);
    }

    #[test]
    fn aklt_model_unique_ground_state() {
        let mut model = parent_model(&aklt_kraus(), 2, 6).unwrap();
        let s = model.diagonalize(4).unwrap().clone();
        assert_eq!(s.degeneracy, 1);
        assert!(s.gap.unwrap() > 0.1);
        let psi = mps_vector(&aklt_kraus(), 6).unwrap();
        assert!(model.kernel_residual(&psi) < 1e-10);
    }

    #[test]
    fn aklt_lanczos_matches_dense() {
        let model = parent_model(&aklt_kraus(), 2, 6).unwrap();
        let (dense, _, _, _) = spectrum::lowest_with(&model.hamiltonian, 6, spectrum::SolverKind::Dense).unwrap();
        let (krylov, _, _, _) = spectrum::lowest_with(&model.hamiltonian, 6, spectrum::SolverKind::Lanczos).unwrap();
        for (a, b) in dense.iter().zip(&krylov) {
            assert!((a - b).abs() < 1e-8, "{dense:?} vs {krylov:?}");
        }
    }

    #[test]
    fn blocked_neel_model() {
        let k = flip_channel().into_kraus();
        let mut model = blocked_parent_model(&k, 2, 2, 6).unwrap();
        let s = model.diagonalize(5).unwrap();
        assert_eq!(s.degeneracy, 2);
        let psi = mps_vector(&k, 6).unwrap();
        assert!(psi.norm() > 1.0);
        assert!(model.kernel_residual(&psi) < 1e-12);
        assert!(blocked_parent_model(&k, 2, 2, 5).is_err());
    }

    #[test]
    fn blocked_degree_three() {
        let k = shift_channel(&[1, 1, 1], 2, 5).unwrap().into_kraus();
        let mut model = blocked_parent_model(&k, 3, 2, 6).unwrap();
        assert_eq!(model.diagonalize(6).unwrap().degeneracy, 3);
    }

    #[test]
    fn blocked_with_m_one_is_unblocked() {
        let k = aklt_kraus();
        let a = blocked_parent_model(&k, 1, 2, 4).unwrap();
        let b = parent_model(&k, 2, 4).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!(a.step, b.step);
    }

    #[test]
    fn experiment_refuses_dimension_mismatch() {
        let a = weyl_channel(2, 3).unwrap();
        let b = weyl_channel(3, 3).unwrap();
        let cfg = ExperimentConfig { n: 4, l: 2, samples: 3, ..Default::default() };
        match hamiltonian_path_experiment(&a, &b, &cfg) {
            Err(Error::Refused(msg)) => assert!(msg.contains("ground-space dimension mismatch"), "{msg}"),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn default_lengths() {
        let cl = Classifier::default();
        // AKLT products of length 2 already span all 2×2 matrices
        assert_eq!(default_interaction_length(&cl, &aklt_kraus(), 1).unwrap(), 3);
        let flip = flip_channel();
        assert_eq!(default_interaction_length(&cl, flip.kraus(), 2).unwrap(), 2);
        assert_eq!(default_interaction_length(&cl, &ghz_kraus(), 1).unwrap(), 2);
        assert_eq!(universal_interaction_length(&aklt_kraus()), 17);
    }

    #[test]
    fn aklt_gap_scaling() {
        let pts = gap_scaling(&aklt_kraus(), 1, 2, 6, 3).unwrap();
        assert_eq!(pts.iter().map(|p| p.n).collect::<Vec<_>>(), [3, 4, 5, 6]);
        assert!(pts.iter().all(|p| p.degeneracy == 1 && p.gap.unwrap() > 0.1));
    }
}
