//! Spectral classification of CP maps.
//!
//! Two independent routes decide primitivity: the rank of the Choi matrix of
//! powers (`Wielandt`) and the peripheral spectrum together with positivity of
//! the fixed points (`Spectral`). Irreducibility is decided on the spectrum and
//! cross-checked against primitivity of the averaged map `½(T + T²)`.
//!
//! For irreducible maps of degree `m ≥ 2` the Frobenius form is computed from
//! the unitary eigenvector `U` of the adjoint of the trace-preserving
//! normalization, `T*(U) = βU` with `β = e^{2πi/m}`. Its spectral projectors
//! `P_1, …, P_m` satisfy `A_i P_{k−1} = P_k A_i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{choi_from_transfer, kraus_from_choi, KrausMap};
use crate::constructions::tp_normalize_with;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64};

/// Numerical thresholds used by every classification. All are relative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Numerical rank: eigenvalues above `rank * λ_max` count.
    pub rank: f64,
    /// Peripheral spectrum: `|λ| ≥ μ (1 − peripheral)`.
    pub peripheral: f64,
    /// Positive definiteness: `λ_min > pd * tr`.
    pub pd: f64,
    /// Angular tolerance (radians) for peripheral phases.
    pub phase: f64,
    /// Minimum separation (radians) between eigenvalue clusters of `U`.
    pub cluster: f64,
    /// A map with `tp_residual` below this is treated as trace preserving.
    pub tp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: 1e-9,
            peripheral: 1e-8,
            pd: 1e-9,
            phase: 1e-6,
            cluster: 1e-4,
            tp: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Spectral radius.
    pub mu: f64,
    /// All `D²` transfer eigenvalues, sorted by decreasing modulus.
    pub eigenvalues: Vec<C64>,
    /// Eigenvalues with `|λ| ≥ μ (1 − ε_per)`.
    pub peripheral: Vec<C64>,
    /// Fixed point of the map, Hermitian with unit trace.
    pub rho_right: CMat,
    /// Fixed point of the adjoint map, Hermitian with unit trace.
    pub sigma_left: CMat,
    /// Number of eigenvalues that coincide with `μ` within tolerance.
    pub mu_multiplicity: usize,
    pub mu_degenerate: bool,
}

impl SpectralData {
    /// `λ_min(ρ) / tr ρ` and the same for `σ`.
    pub fn fixed_point_margins(&self) -> (f64, f64) {
        (min_eig_ratio(&self.rho_right), min_eig_ratio(&self.sigma_left))
    }

    /// `1 − |λ₂| / μ` over non-peripheral eigenvalues (1 if there are none).
    pub fn peripheral_gap(&self) -> f64 {
        let n = self.peripheral.len();
        match self.eigenvalues.get(n) {
            Some(l) if self.mu > 0.0 => 1.0 - l.norm() / self.mu,
            _ => 1.0,
        }
    }
}

fn min_eig_ratio(x: &CMat) -> f64 {
    let vals = linalg::herm_eigenvalues(x);
    let tr: f64 = vals.iter().sum();
    if tr <= 0.0 {
        return 0.0;
    }
    vals[0] / tr
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Primitive,
    Irreducible,
    Degree,
    KrausRank,
    TpResidual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Verdict {
    Bool(bool),
    Int(usize),
    Real(f64),
}

/// Outcome of one numerical test together with the evidence behind it.
///
/// `margin` is the distance to the decision threshold when the test passes
/// (e.g. `λ_min/λ_max` of the relevant Choi matrix, the peripheral gap, or
/// `tol − residual`), and a measure of the failure otherwise (e.g. the rank
/// deficit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub passed: bool,
    pub verdict: Verdict,
    pub margin: f64,
    /// Primitivity index found by the Wielandt test.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_star: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Certificate {
    fn new(kind: CertificateKind, passed: bool, verdict: Verdict, margin: f64) -> Self {
        Self {
            kind,
            passed,
            verdict,
            margin,
            n_star: None,
            detail: None,
        }
    }

    fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimitivityMethod {
    /// Full Choi rank of `T^n` for some `n ≤ n_max` (default `D⁴`).
    Wielandt { n_max: Option<u64> },
    /// Simple spectral radius, trivial peripheral spectrum, positive definite fixed points.
    Spectral,
}

impl PrimitivityMethod {
    pub const WIELANDT: Self = Self::Wielandt { n_max: None };
}

/// Cyclic block dimensions `(d_1, …, d_m)` stored as the lexicographically
/// smallest rotation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiplicityIndex(Vec<usize>);

impl MultiplicityIndex {
    pub fn canonical(dims: &[usize]) -> Self {
        let m = dims.len();
        let best = (0..m.max(1))
            .map(|s| (0..m).map(|k| dims[(k + s) % m]).collect::<Vec<_>>())
            .min()
            .unwrap_or_default();
        Self(best)
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrobeniusResiduals {
    /// `‖U U† − 𝟙‖`.
    pub unitarity: f64,
    /// `‖T*(U) − μβ U‖ / μ`.
    pub eigen: f64,
    /// `max_{i,k} ‖A_i P_{k−1} − P_k A_i‖`.
    pub intertwining: f64,
    /// Largest deviation of an eigenphase of `U` from its bin centre.
    pub phase_deviation: f64,
}

/// Frobenius data of an irreducible map.
///
/// Everything refers to the trace-preserving normalization of the input
/// (`normalized` records whether that differs from the input). The block with
/// label `k` (position `k−1` in the vectors) is the eigenspace of `U` for
/// `β^k`; the Kraus operators map block `k−1` into block `k`.
#[derive(Clone, Debug)]
pub struct FrobeniusForm {
    pub degree: usize,
    pub beta: C64,
    pub u: CMat,
    pub projectors: Vec<CMat>,
    pub dims: Vec<usize>,
    /// Unitary whose columns diagonalize `U`, grouped block by block.
    pub basis: CMat,
    /// The trace-preserving map the form was computed for.
    pub map: KrausMap,
    pub normalized: bool,
    pub residuals: FrobeniusResiduals,
}

impl FrobeniusForm {
    /// Row/column offsets of each block in `basis`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut o = Vec::with_capacity(self.dims.len());
        let mut acc = 0;
        for &d in &self.dims {
            o.push(acc);
            acc += d;
        }
        o
    }

    /// Kraus operators of `map` expressed in `basis`.
    pub fn aligned_kraus(&self) -> Vec<CMat> {
        self.map
            .kraus()
            .iter()
            .map(|a| self.basis.adjoint() * a * &self.basis)
            .collect()
    }

    pub fn multiplicity_index(&self) -> MultiplicityIndex {
        MultiplicityIndex::canonical(&self.dims)
    }
}

/// `max_{i,k} ‖A_i P_{k−1} − P_k A_i‖_op`.
pub fn intertwining_residual(kraus: &[CMat], projectors: &[CMat]) -> f64 {
    let m = projectors.len();
    let mut worst: f64 = 0.0;
    for a in kraus {
        for k in 0..m {
            let prev = &projectors[(k + m - 1) % m];
            let r = a * prev - &projectors[k] * a;
            worst = worst.max(linalg::op_norm(&r));
        }
    }
    worst
}

/// Stateless entry point carrying the tolerances.
#[derive(Clone, Copy, Debug, Default)]
pub struct Classifier {
    pub tol: Tolerances,
}

impl Classifier {
    pub fn new(tol: Tolerances) -> Self {
        Self { tol }
    }

    pub fn spectral_data(&self, map: &KrausMap) -> Result<SpectralData> {
        spectral_data_of_transfer(map.transfer(), map.dim(), &self.tol)
    }

    pub fn is_primitive(&self, map: &KrausMap, method: PrimitivityMethod) -> Result<Certificate> {
        match method {
            PrimitivityMethod::Wielandt { n_max } => Ok(self.wielandt(map, n_max)),
            PrimitivityMethod::Spectral => {
                let sd = self.spectral_data(map)?;
                Ok(self.spectral_primitive(&sd))
            }
        }
    }

    fn wielandt(&self, map: &KrausMap, n_max: Option<u64>) -> Certificate {
        let d = map.dim();
        let full = d * d;
        let n_max = n_max.unwrap_or((d as u64).pow(4)).max(1);
        let m = map.transfer();
        let mut p = m.clone();
        let mut best_rank = 0;
        for n in 1..=n_max {
            if n > 1 {
                p = &p * m;
            }
            let scale = linalg::max_abs(&p);
            if scale == 0.0 {
                break;
            }
            p /= c(scale, 0.0);
            let choi = choi_from_transfer(&p, d);
            let (rank, ratio) = linalg::psd_rank(&choi, self.tol.rank);
            best_rank = best_rank.max(rank);
            if rank == full {
                let mut cert = Certificate::new(
                    CertificateKind::Primitive,
                    true,
                    Verdict::Bool(true),
                    ratio,
                );
                cert.n_star = Some(n);
                return cert;
            }
        }
        Certificate::new(
            CertificateKind::Primitive,
            false,
            Verdict::Bool(false),
            (full - best_rank) as f64,
        )
        .with_detail(format!(
            "Choi rank of powers up to n = {n_max} reached {best_rank} of {full}"
        ))
    }

    fn spectral_primitive(&self, sd: &SpectralData) -> Certificate {
        let (mr, ms) = sd.fixed_point_margins();
        let pd_ok = mr > self.tol.pd && ms > self.tol.pd;
        let simple = !sd.mu_degenerate && sd.peripheral.len() == 1 && sd.mu > 0.0;
        let passed = simple && pd_ok;
        let margin = if passed {
            sd.peripheral_gap().min(mr).min(ms)
        } else if !simple {
            (sd.peripheral.len().max(sd.mu_multiplicity) - 1) as f64
        } else {
            mr.min(ms).abs()
        };
        let mut cert =
            Certificate::new(CertificateKind::Primitive, passed, Verdict::Bool(passed), margin);
        if !passed {
            cert = cert.with_detail(format!(
                "peripheral count {}, mu multiplicity {}, fixed point margins ({mr:.3e}, {ms:.3e})",
                sd.peripheral.len(),
                sd.mu_multiplicity
            ));
        }
        cert
    }

    /// Runs both primitivity tests and, for maps that are not trace
    /// preserving but have a full-rank fixed point, both tests again on the
    /// similar trace-preserving map `X ↦ μ⁻¹ ρ^{1/2} T*(ρ^{-1/2} X ρ^{-1/2}) ρ^{1/2}`.
    /// Any disagreement is a diagnostic failure.
    pub fn primitivity_crosscheck(&self, map: &KrausMap) -> Result<bool> {
        let w = self.is_primitive(map, PrimitivityMethod::WIELANDT)?;
        let sd = self.spectral_data(map)?;
        let s = self.spectral_primitive(&sd);
        let mut results = vec![("wielandt", w), ("spectral", s)];
        let (mr, _) = sd.fixed_point_margins();
        if map.tp_residual() > self.tol.tp && mr > self.tol.pd && sd.mu > 0.0 {
            let (sq, sq_inv) = linalg::pd_sqrt_pair(&sd.rho_right);
            let f = c(1.0 / sd.mu.sqrt(), 0.0);
            let kraus = map
                .kraus()
                .iter()
                .map(|a| &sq * a.adjoint() * &sq_inv * f)
                .collect();
            let similar = KrausMap::new(kraus)?;
            results.push((
                "similar-tp wielandt",
                self.is_primitive(&similar, PrimitivityMethod::WIELANDT)?,
            ));
            results.push((
                "similar-tp spectral",
                self.is_primitive(&similar, PrimitivityMethod::Spectral)?,
            ));
        }
        let verdict = results[0].1.passed;
        if results.iter().any(|(_, r)| r.passed != verdict) {
            let report: Vec<String> = results
                .iter()
                .map(|(name, r)| format!("{name}: {} (margin {:.3e})", r.passed, r.margin))
                .collect();
            return Err(Error::Diagnostic(format!(
                "primitivity tests disagree: {}",
                report.join("; ")
            )));
        }
        Ok(verdict)
    }

    /// Irreducibility from the spectrum (simple spectral radius with positive
    /// definite fixed points), cross-checked against primitivity of the bar map.
    pub fn is_irreducible(&self, map: &KrausMap) -> Result<Certificate> {
        let sd = self.spectral_data(map)?;
        let primary = self.irreducible_spectral(&sd);
        let bar = bar_map(map);
        let secondary = self.is_primitive(&bar, PrimitivityMethod::WIELANDT)?;
        if primary.passed != secondary.passed {
            return Err(Error::Diagnostic(format!(
                "irreducibility tests disagree: spectral {} (margin {:.3e}), bar-map primitivity {} (margin {:.3e})",
                primary.passed, primary.margin, secondary.passed, secondary.margin
            )));
        }
        Ok(primary)
    }

    fn irreducible_spectral(&self, sd: &SpectralData) -> Certificate {
        if sd.mu_degenerate || sd.mu <= 0.0 {
            return Certificate::new(
                CertificateKind::Irreducible,
                false,
                Verdict::Bool(false),
                sd.mu_multiplicity.saturating_sub(1) as f64,
            )
            .with_detail("spectral radius is degenerate");
        }
        let (mr, ms) = sd.fixed_point_margins();
        let passed = mr > self.tol.pd && ms > self.tol.pd;
        let cert = Certificate::new(
            CertificateKind::Irreducible,
            passed,
            Verdict::Bool(passed),
            if passed { mr.min(ms) } else { mr.min(ms).abs() },
        );
        if passed {
            cert
        } else {
            cert.with_detail(format!(
                "fixed point not positive definite: margins ({mr:.3e}, {ms:.3e})"
            ))
        }
    }

    /// Degree `m`: the number of peripheral eigenvalues of an irreducible map.
    /// The peripheral eigenvalues divided by `μ` must be the `m`-th roots of unity.
    pub fn degree(&self, map: &KrausMap) -> Result<(usize, Certificate)> {
        let irr = self.is_irreducible(map)?;
        if !irr.passed {
            return Err(Error::NotIrreducible { margin: irr.margin });
        }
        let sd = self.spectral_data(map)?;
        let m = sd.peripheral.len();
        let dev = root_of_unity_deviation(&sd.peripheral, sd.mu, m)?;
        if dev > self.tol.phase {
            return Err(Error::Diagnostic(format!(
                "peripheral phases deviate from the {m}-th roots of unity by {dev:.3e} rad"
            )));
        }
        let cert = Certificate::new(
            CertificateKind::Degree,
            true,
            Verdict::Int(m),
            sd.peripheral_gap(),
        );
        Ok((m, cert))
    }

    pub fn frobenius_form(&self, map: &KrausMap) -> Result<FrobeniusForm> {
        let (m, _) = self.degree(map)?;
        let (work, normalized) = if map.tp_residual() <= self.tol.tp {
            (map.clone(), false)
        } else {
            (tp_normalize_with(self, map)?.map, true)
        };
        let d = work.dim();
        if m == 1 {
            return Ok(FrobeniusForm {
                degree: 1,
                beta: c(1.0, 0.0),
                u: linalg::identity(d),
                projectors: vec![linalg::identity(d)],
                dims: vec![d],
                basis: linalg::identity(d),
                map: work,
                normalized,
                residuals: FrobeniusResiduals {
                    unitarity: 0.0,
                    eigen: 0.0,
                    intertwining: 0.0,
                    phase_deviation: 0.0,
                },
            });
        }
        let sd = self.spectral_data(&work)?;
        let mu = sd.mu;
        let beta = C64::from_polar(1.0, 2.0 * PI / m as f64);
        let target = beta * mu;
        // multiplicity of μβ̄ in T equals that of μβ in T*
        let mult = sd
            .eigenvalues
            .iter()
            .filter(|l| (**l - target.conj()).norm() <= 1e-6 * mu)
            .count();
        if mult != 1 {
            return Err(Error::Diagnostic(format!(
                "eigenvalue μβ has multiplicity {mult}, expected 1"
            )));
        }
        let adj = work.adjoint_transfer();
        let x = linalg::unvec(&smallest_singular_vector(&adj, target), d);
        let v = linalg::polar_unitary(&x);
        let (q, t) = linalg::schur(&v)?;
        let phases: Vec<f64> = t.diagonal().iter().map(|z| z.arg()).collect();
        let mf = m as f64;
        let z: C64 = phases.iter().map(|&th| C64::from_polar(1.0, mf * th)).sum();
        let shift = -z.arg() / mf;
        let bin = 2.0 * PI / mf;
        let mut labels = Vec::with_capacity(d);
        let mut worst_dev: f64 = 0.0;
        for &th in &phases {
            let a = (th + shift).rem_euclid(2.0 * PI);
            let k = (a / bin).round() as i64;
            let dev = (a - k as f64 * bin).abs();
            worst_dev = worst_dev.max(dev);
            if dev > bin / 2.0 - self.tol.cluster {
                return Err(Error::Diagnostic(format!(
                    "eigenvalue clustering of U is ambiguous (deviation {dev:.3e} rad, bin half-width {:.3e})",
                    bin / 2.0
                )));
            }
            // label k ∈ {1..m}, eigenvalue β^k
            let label = ((k.rem_euclid(m as i64)) as usize + m - 1) % m + 1;
            labels.push(label);
        }
        let mut basis = CMat::zeros(d, d);
        let mut dims = vec![0usize; m];
        let mut col = 0;
        for label in 1..=m {
            for (j, &l) in labels.iter().enumerate() {
                if l == label {
                    basis.set_column(col, &q.column(j));
                    col += 1;
                    dims[label - 1] += 1;
                }
            }
        }
        if dims.contains(&0) {
            return Err(Error::Diagnostic(format!(
                "eigenvalue clusters of U have dims {dims:?}; every block must be non-empty"
            )));
        }
        // re-orthonormalize to remove Schur noise
        let basis = linalg::polar_unitary(&basis);
        let mut projectors = Vec::with_capacity(m);
        let mut off = 0;
        let mut u = CMat::zeros(d, d);
        for (k, &dk) in dims.iter().enumerate() {
            let b = basis.columns(off, dk);
            let p = b * b.adjoint();
            u += &p * beta.powu((k + 1) as u32);
            projectors.push(p);
            off += dk;
        }
        let eigen_res = linalg::op_norm(&(work.apply_adjoint(&u)? - &u * target)) / mu;
        let inter = intertwining_residual(work.kraus(), &projectors);
        if inter > 1e-6 {
            return Err(Error::Diagnostic(format!(
                "Frobenius intertwining residual {inter:.3e} too large"
            )));
        }
        Ok(FrobeniusForm {
            degree: m,
            beta,
            residuals: FrobeniusResiduals {
                unitarity: linalg::unitarity_residual(&u),
                eigen: eigen_res,
                intertwining: inter,
                phase_deviation: worst_dev,
            },
            u,
            projectors,
            dims,
            basis,
            map: work,
            normalized,
        })
    }

    pub fn multiplicity_index(&self, map: &KrausMap) -> Result<MultiplicityIndex> {
        Ok(self.frobenius_form(map)?.multiplicity_index())
    }

    /// The `m` block maps of `T^m` compressed to the Frobenius blocks; each
    /// must be primitive.
    pub fn primitive_block_decomposition(&self, map: &KrausMap) -> Result<Vec<KrausMap>> {
        let form = self.frobenius_form(map)?;
        self.blocks_of_power(&form.aligned_kraus(), &form.dims)
    }

    /// Compresses `T^m` (for the given aligned Kraus operators) onto each
    /// diagonal block and checks primitivity of every block.
    pub fn blocks_of_power(&self, aligned: &[CMat], dims: &[usize]) -> Result<Vec<KrausMap>> {
        let m = dims.len();
        let aligned_map = KrausMap::new(aligned.to_vec())?;
        let d = aligned_map.dim();
        let pw = aligned_map.power_transfer(m as u64);
        let mut out = Vec::with_capacity(m);
        let mut off = 0;
        for (k, &dk) in dims.iter().enumerate() {
            let idx: Vec<usize> = (0..dk * dk)
                .map(|v| {
                    let (a, cc) = (v % dk, v / dk);
                    (off + a) + d * (off + cc)
                })
                .collect();
            let sub = CMat::from_fn(dk * dk, dk * dk, |i, j| pw[(idx[i], idx[j])]);
            let choi = choi_from_transfer(&sub, dk);
            let mut kraus = kraus_from_choi(&choi, dk, self.tol.rank);
            if kraus.is_empty() {
                kraus.push(CMat::zeros(dk, dk));
            }
            let block = KrausMap::new(kraus)?;
            let cert = self.is_primitive(&block, PrimitivityMethod::WIELANDT)?;
            if !cert.passed {
                return Err(Error::Diagnostic(format!(
                    "block {} of T^{m} (dim {dk}) is not primitive: {}",
                    k + 1,
                    cert.detail.unwrap_or_default()
                )));
            }
            out.push(block);
            off += dk;
        }
        Ok(out)
    }

    /// Certificate that the map is irreducible of degree exactly `m` with all
    /// `m` blocks of `T^m` primitive. Never errors; failures carry a detail.
    pub fn degree_certificate(&self, map: &KrausMap, m: usize) -> Certificate {
        let fail = |msg: String| {
            Certificate::new(CertificateKind::Degree, false, Verdict::Int(0), 0.0).with_detail(msg)
        };
        let (found, cert) = match self.degree(map) {
            Ok(x) => x,
            Err(e) => return fail(e.to_string()),
        };
        if found != m {
            return Certificate::new(CertificateKind::Degree, false, Verdict::Int(found), 0.0)
                .with_detail(format!("degree {found}, required {m}"));
        }
        if m > 1 {
            if let Err(e) = self.primitive_block_decomposition(map) {
                return fail(e.to_string());
            }
        }
        cert
    }

    /// Full certificate bundle for a single map.
    pub fn analyze(&self, map: &KrausMap) -> Result<Analysis> {
        let prim = self.is_primitive(map, PrimitivityMethod::WIELANDT)?;
        let irr = self.is_irreducible(map)?;
        let (degree, index, frobenius) = if irr.passed {
            let form = self.frobenius_form(map)?;
            (
                Some(form.degree),
                Some(form.multiplicity_index().dims().to_vec()),
                Some(FrobeniusSummary {
                    dims: form.dims.clone(),
                    normalized: form.normalized,
                    residuals: form.residuals.clone(),
                }),
            )
        } else {
            (None, None, None)
        };
        Ok(Analysis {
            dim: map.dim(),
            num_kraus: map.num_kraus(),
            kraus_rank: map.kraus_rank_with(self.tol.rank),
            tp_residual: map.tp_residual(),
            unital_residual: map.unital_residual(),
            primitive: PrimitiveSummary {
                verdict: prim.passed,
                n_star: prim.n_star,
                margin: prim.margin,
            },
            irreducible: IrreducibleSummary {
                verdict: irr.passed,
                margin: irr.margin,
            },
            degree,
            multiplicity_index: index,
            frobenius,
            tolerances: self.tol,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PrimitiveSummary {
    pub verdict: bool,
    pub n_star: Option<u64>,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IrreducibleSummary {
    pub verdict: bool,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrobeniusSummary {
    pub dims: Vec<usize>,
    pub normalized: bool,
    pub residuals: FrobeniusResiduals,
}

#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub dim: usize,
    pub num_kraus: usize,
    pub kraus_rank: usize,
    pub tp_residual: f64,
    pub unital_residual: f64,
    pub primitive: PrimitiveSummary,
    pub irreducible: IrreducibleSummary,
    pub degree: Option<usize>,
    pub multiplicity_index: Option<Vec<usize>>,
    pub frobenius: Option<FrobeniusSummary>,
    pub tolerances: Tolerances,
}

/// `½(T + T²)`: Kraus set `{A_i/√2} ∪ {A_i A_j/√2}`, reduced to a minimal list.
pub fn bar_map(map: &KrausMap) -> KrausMap {
    let f = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut kraus: Vec<CMat> = map.kraus().iter().map(|a| a * f).collect();
    for a in map.kraus() {
        for b in map.kraus() {
            kraus.push(a * b * f);
        }
    }
    KrausMap::new(kraus).expect("valid").minimal_kraus()
}

fn root_of_unity_deviation(peripheral: &[C64], mu: f64, m: usize) -> Result<f64> {
    if m == 0 || mu <= 0.0 {
        return Err(Error::Diagnostic("empty peripheral spectrum".into()));
    }
    let bin = 2.0 * PI / m as f64;
    let mut seen = vec![false; m];
    let mut worst: f64 = 0.0;
    for l in peripheral {
        let a = (l / mu).arg().rem_euclid(2.0 * PI);
        let k = (a / bin).round() as usize % m;
        let dev = {
            let raw = (a - (a / bin).round() * bin).abs();
            raw.min(2.0 * PI - raw)
        };
        worst = worst.max(dev);
        if seen[k] {
            return Err(Error::Diagnostic(format!(
                "two peripheral eigenvalues share the root of unity e^(2πi·{k}/{m})"
            )));
        }
        seen[k] = true;
    }
    Ok(worst)
}

/// Right singular vector of `m − λ𝟙` for its smallest singular value.
pub(crate) fn smallest_singular_vector(m: &CMat, lambda: C64) -> CVec {
    let n = m.nrows();
    let shifted = m - linalg::identity(n) * lambda;
    let (_, _, v) = linalg::svd(&shifted);
    v.column(n - 1).into_owned()
}

/// Spectral projector onto the eigenvalue `μ` (assumed to be the spectral
/// radius) computed as the limit of powers of `½(M/μ + (M/μ)²)`; that average
/// maps every other eigenvalue of modulus at most one strictly inside the unit disc.
pub(crate) fn radius_projector(m: &CMat, mu: f64) -> CMat {
    let mh = m / c(mu, 0.0);
    let mut p = (&mh + &mh * &mh) * c(0.5, 0.0);
    for _ in 0..200 {
        let next = &p * &p;
        let scale = linalg::max_abs(&next);
        if scale == 0.0 {
            return next;
        }
        // keep the iterate O(1): a slightly misestimated μ makes it grow or decay
        let next = if !(1e-6..=1e6).contains(&scale) { next / c(scale, 0.0) } else { next };
        let diff = linalg::max_abs(&(&next - &p));
        p = next;
        if diff <= 1e-15 * linalg::max_abs(&p) {
            break;
        }
    }
    p
}

/// Hermitian, trace-one representative of an eigenvector of a
/// Hermiticity-preserving map.
pub(crate) fn normalize_fixed_point(x: &CMat) -> CMat {
    let tr = linalg::trace(x);
    let phase = if tr.norm() > 1e-8 * linalg::fro(x) {
        tr.conj() / tr.norm()
    } else {
        let pivot = x
            .diagonal()
            .iter()
            .cloned()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(c(1.0, 0.0));
        if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            c(1.0, 0.0)
        }
    };
    let h = linalg::hermitize(&(x * phase));
    let t = linalg::trace(&h).re;
    if t > 0.0 {
        h / c(t, 0.0)
    } else {
        let n = linalg::fro(&h);
        if n > 0.0 {
            h / c(n, 0.0)
        } else {
            h
        }
    }
}

pub(crate) fn spectral_data_of_transfer(m: &CMat, d: usize, tol: &Tolerances) -> Result<SpectralData> {
    let mut eigenvalues = linalg::eigenvalues(m)?;
    eigenvalues.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let mu = eigenvalues.first().map(|z| z.norm()).unwrap_or(0.0);
    let scale = linalg::max_abs(m).max(f64::MIN_POSITIVE);
    if mu <= 1e-14 * scale {
        let zero = CMat::zeros(d, d);
        return Ok(SpectralData {
            mu: 0.0,
            peripheral: eigenvalues.clone(),
            eigenvalues,
            rho_right: zero.clone(),
            sigma_left: zero,
            mu_multiplicity: d * d,
            mu_degenerate: true,
        });
    }
    let peripheral: Vec<C64> = eigenvalues
        .iter()
        .cloned()
        .filter(|l| l.norm() >= mu * (1.0 - tol.peripheral))
        .collect();
    let mut peripheral = peripheral;
    let mut mu_multiplicity = eigenvalues
        .iter()
        .filter(|l| (l.norm() - mu).abs() <= mu * tol.peripheral && l.arg().abs() <= tol.phase)
        .count()
        .max(1);
    if mu_multiplicity == 1 {
        // A defective eigenvalue splits by ~sqrt(ε); such partners sit within κ·ε of μ,
        // where κ = ‖ρ‖‖σ‖/|⟨σ, ρ⟩| is the eigenvalue condition number.
        let muc = c(mu, 0.0);
        let r = smallest_singular_vector(m, muc);
        let l = smallest_singular_vector(&m.adjoint(), muc);
        let overlap = l.dotc(&r).norm().max(f64::MIN_POSITIVE);
        let radius = (1e-12 * scale / overlap).max(mu * tol.peripheral);
        let cluster: Vec<C64> = eigenvalues.iter().cloned().filter(|z| (z - muc).norm() <= radius).collect();
        if cluster.len() > 1 {
            mu_multiplicity = cluster.len();
            for z in cluster {
                if !peripheral.contains(&z) {
                    peripheral.push(z);
                }
            }
        }
    }
    let mu_degenerate = mu_multiplicity >= 2;
    let (rho, sigma) = if mu_degenerate {
        let p = radius_projector(m, mu);
        let one = linalg::vec_of(&linalg::identity(d));
        (
            linalg::unvec(&(&p * &one), d),
            linalg::unvec(&(p.adjoint() * &one), d),
        )
    } else {
        let muc = c(mu, 0.0);
        (
            linalg::unvec(&smallest_singular_vector(m, muc), d),
            linalg::unvec(&smallest_singular_vector(&m.adjoint(), muc), d),
        )
    };
    Ok(SpectralData {
        mu,
        eigenvalues,
        peripheral,
        rho_right: normalize_fixed_point(&rho),
        sigma_left: normalize_fixed_point(&sigma),
        mu_multiplicity,
        mu_degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{shift_channel, weyl_channel};
    use crate::linalg::{ONE, ZERO};

    fn flip() -> KrausMap {
        let mut a0 = CMat::zeros(2, 2);
        a0[(0, 1)] = ONE;
        let mut a1 = CMat::zeros(2, 2);
        a1[(1, 0)] = ONE;
        KrausMap::new(vec![a0, a1]).unwrap()
    }

    fn identity_channel() -> KrausMap {
        KrausMap::new(vec![linalg::identity(2)]).unwrap()
    }

    #[test]
    fn identity_is_degenerate_and_not_primitive() {
        let cl = Classifier::default();
        let sd = cl.spectral_data(&identity_channel()).unwrap();
        assert!((sd.mu - 1.0).abs() < 1e-14);
        assert!(sd.mu_degenerate);
        assert_eq!(sd.peripheral.len(), 4);
        let w = cl.is_primitive(&identity_channel(), PrimitivityMethod::WIELANDT).unwrap();
        assert!(!w.passed);
        assert_eq!(w.margin, 3.0);
        assert!(!cl.primitivity_crosscheck(&identity_channel()).unwrap());
    }

    #[test]
    fn flip_channel_spectrum() {
        let cl = Classifier::default();
        let sd = cl.spectral_data(&flip()).unwrap();
        let mut ev: Vec<f64> = sd.eigenvalues.iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let expected = [-1.0, 0.0, 0.0, 1.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let half = linalg::identity(2) * c(0.5, 0.0);
        assert!(linalg::fro(&(sd.rho_right.clone() - half)) < 1e-12);
        assert!(!cl.is_primitive(&flip(), PrimitivityMethod::Spectral).unwrap().passed);
        assert!(cl.is_irreducible(&flip()).unwrap().passed);
        assert_eq!(cl.degree(&flip()).unwrap().0, 2);
    }

    #[test]
    fn direct_sum_of_scalars_is_reducible() {
        let a0 = CMat::from_diagonal(&CVec::from_vec(vec![ONE, ZERO]));
        let a1 = CMat::from_diagonal(&CVec::from_vec(vec![ZERO, ONE]));
        let m = KrausMap::new(vec![a0, a1]).unwrap();
        let cl = Classifier::default();
        assert!(!cl.is_irreducible(&m).unwrap().passed);
        assert!(cl.degree(&m).is_err());
    }

    #[test]
    fn bar_map_transfer_identity() {
        let m = weyl_channel(2, 3).unwrap();
        let b = bar_map(&m);
        let t = m.transfer();
        let expected = (t + t * t) * c(0.5, 0.0);
        assert!(linalg::fro(&(b.transfer() - expected)) < 1e-12);
        let bf = bar_map(&flip());
        assert!(Classifier::default()
            .is_primitive(&bf, PrimitivityMethod::WIELANDT)
            .unwrap()
            .passed);
        let bi = bar_map(&identity_channel());
        assert!(linalg::fro(&(bi.transfer() - linalg::identity(4))) < 1e-12);
    }

    #[test]
    fn flip_frobenius_form() {
        let cl = Classifier::default();
        let form = cl.frobenius_form(&flip()).unwrap();
        assert_eq!(form.dims, vec![1, 1]);
        // U is σ_z up to a global sign
        let sz = CMat::from_diagonal(&CVec::from_vec(vec![ONE, -ONE]));
        let d1 = linalg::fro(&(form.u.clone() - &sz));
        let d2 = linalg::fro(&(form.u.clone() + &sz));
        assert!(d1.min(d2) < 1e-10);
        assert!(form.residuals.intertwining < 1e-8);
        assert_eq!(cl.multiplicity_index(&flip()).unwrap().dims(), &[1, 1]);
        let blocks = cl.primitive_block_decomposition(&flip()).unwrap();
        assert_eq!(blocks.len(), 2);
        for b in &blocks {
            assert_eq!(b.dim(), 1);
            assert!((b.transfer()[(0, 0)] - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_rotation() {
        assert_eq!(MultiplicityIndex::canonical(&[2, 1, 1]).dims(), &[1, 1, 2]);
        assert_eq!(MultiplicityIndex::canonical(&[1, 2, 1]).dims(), &[1, 1, 2]);
        assert_eq!(MultiplicityIndex::canonical(&[3]).dims(), &[3]);
    }

    #[test]
    fn weyl_is_primitive_with_index_two() {
        let cl = Classifier::default();
        let m = weyl_channel(2, 3).unwrap();
        let w = cl.is_primitive(&m, PrimitivityMethod::WIELANDT).unwrap();
        assert!(w.passed);
        assert_eq!(w.n_star, Some(2));
        assert_eq!(cl.degree(&m).unwrap().0, 1);
        assert_eq!(cl.multiplicity_index(&m).unwrap().dims(), &[2]);
    }

    #[test]
    fn shift_channel_three_cycle() {
        let cl = Classifier::default();
        let m = shift_channel(&[2, 1, 1], 2, 4).unwrap();
        assert_eq!(cl.degree(&m).unwrap().0, 3);
        let idx = cl.multiplicity_index(&m).unwrap();
        assert_eq!(idx.dims(), &[1, 1, 2]);
        let form = cl.frobenius_form(&m).unwrap();
        assert!(form.residuals.intertwining < 1e-8);
        assert!(form.residuals.eigen < 1e-8);
        assert!(form.residuals.unitarity < 1e-8);
    }

    #[test]
    fn nilpotent_map_is_not_irreducible() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = ONE;
        let m = KrausMap::new(vec![a]).unwrap();
        let cl = Classifier::default();
        assert!(!cl.is_irreducible(&m).unwrap().passed);
        assert!(!cl.primitivity_crosscheck(&m).unwrap());
    }
}
