//! Certified interpolating paths between CP maps.
//!
//! Kraus lists are interpolated entrywise along a complex curve `γ(t)` with
//! `γ(0) = 0`, `γ(1) = 1`:
//!
//! ```text
//! A_i(t) = (1 − γ(t)) A_i + γ(t) B_i
//! ```
//!
//! A path is certified by evaluating the required certificates on a uniform
//! grid. Grid certification is evidence, not proof: a failure strictly between
//! two samples goes unnoticed. If a sample fails, the curve is re-drawn with a
//! random imaginary bump and the grid is evaluated again.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::KrausMap;
use crate::constructions::tp_normalize_with;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};
use crate::perron_frobenius::{
    intertwining_residual, Certificate, CertificateKind, Classifier, PrimitivityMethod, Verdict,
};

/// `γ(t) = t + i·t(1−t)·p(t)` with `p(t) = Σ_k x_k t^k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub coeffs: Vec<f64>,
}

impl CurveSpec {
    pub fn straight() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// Degree-3 bump with coefficients uniform in `[−scale, scale]`.
    pub fn random<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Self {
        Self {
            coeffs: (0..4).map(|_| rng.random_range(-1.0..=1.0) * scale).collect(),
        }
    }

    pub fn gamma(&self, t: f64) -> C64 {
        let p = self.coeffs.iter().rev().fold(0.0, |acc, &x| acc * t + x);
        c(t, t * (1.0 - t) * p)
    }
}

/// A certificate demanded at every sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    KrausRank(usize),
    /// Wielandt test with an optional cap on the power (default `D⁴`).
    Primitive { n_max: Option<u64> },
    Irreducible,
    /// Irreducible of this degree with every block of `T^m` primitive.
    Degree(usize),
    TpResidual(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathMode {
    FixedRank,
    Primitive,
    PrimitiveTp,
    FixedDegree,
}

impl std::str::FromStr for PathMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-rank" => Ok(Self::FixedRank),
            "primitive" => Ok(Self::Primitive),
            "primitive-tp" => Ok(Self::PrimitiveTp),
            "fixed-degree" => Ok(Self::FixedDegree),
            _ => Err(Error::InvalidArgument(format!("unknown path mode {s:?}"))),
        }
    }
}

/// How the Kraus list of the second endpoint is matched to the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    AsGiven,
    /// Greedy assignment maximizing `|tr(A_i† B_j)|`.
    Greedy,
    /// `B'_i = B_{perm[i]}`.
    Permutation(Vec<usize>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathConfig {
    pub samples: usize,
    pub max_retries: usize,
    pub seed: u64,
    pub pairing: Pairing,
    /// Cap on the Wielandt power along the path (default `D⁴`).
    pub n_max: Option<u64>,
    pub tp_tol: f64,
    #[serde(skip)]
    pub classifier: Classifier,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            samples: 41,
            max_retries: 20,
            seed: 0,
            pairing: Pairing::Greedy,
            n_max: None,
            tp_tol: 1e-10,
            classifier: Classifier::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PathSample {
    pub t: f64,
    pub map: KrausMap,
    pub certificates: Vec<Certificate>,
    /// Fixed point used for trace-preserving renormalization.
    pub rho_t: Option<CMat>,
    pub mu_t: f64,
}

impl PathSample {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }
}

/// Everything needed to evaluate the path at any `t`.
#[derive(Clone, Debug)]
struct Geometry {
    a: Vec<CMat>,
    b: Vec<CMat>,
    tp: bool,
    /// `W` with `a = W A W†`; samples are conjugated back by `W(1−t)`.
    rotation: Option<CMat>,
    /// Frobenius projectors of the second endpoint; segments are compressed to them.
    projectors: Option<Vec<CMat>>,
}

#[derive(Clone, Debug)]
pub struct CertifiedPath {
    pub mode: PathMode,
    pub endpoints: (KrausMap, KrausMap),
    pub curve: CurveSpec,
    /// Hermitian `H` with `W(t) = exp(iHt)`.
    pub rotation: Option<CMat>,
    /// Cyclic block shift used by the Frobenius alignment.
    pub shift: Option<usize>,
    pub samples: Vec<PathSample>,
    pub requirements: Vec<Requirement>,
    pub accepted: bool,
    pub retries_used: usize,
    pub failures: Vec<String>,
    geometry: Geometry,
    config: PathConfig,
}

impl CertifiedPath {
    /// The map on the path at parameter `t`, without certification.
    pub fn map_at(&self, t: f64) -> Result<KrausMap> {
        Ok(evaluate(&self.geometry, &self.curve, t, &self.config.classifier)?.0)
    }

    /// Same curve on a uniform grid of `samples` points, re-certified.
    pub fn resample(&self, samples: usize) -> Result<CertifiedPath> {
        let grid = uniform_grid(samples)?;
        let s = certify_grid(&self.geometry, &self.curve, &grid, &self.requirements, &self.config);
        let mut out = self.clone();
        out.accepted = s.iter().all(|x| x.passed());
        out.samples = s;
        Ok(out)
    }

    /// Largest entrywise distance between the samples at `t = 0, 1` and the endpoints.
    pub fn endpoint_error(&self) -> f64 {
        let err = |s: &PathSample, e: &KrausMap| {
            s.map
                .kraus()
                .iter()
                .zip(e.kraus())
                .map(|(x, y)| linalg::max_abs(&(x - y)))
                .fold(0.0, f64::max)
        };
        match (self.samples.first(), self.samples.last()) {
            (Some(f), Some(l)) => err(f, &self.endpoints.0).max(err(l, &self.endpoints.1)),
            _ => f64::INFINITY,
        }
    }
}

/// `A_i(t) = (1 − γ(t)) A_i + γ(t) B_i`.
pub fn kraus_segment(a: &KrausMap, b: &KrausMap, curve: &CurveSpec, t: f64) -> Result<KrausMap> {
    if a.dim() != b.dim() || a.num_kraus() != b.num_kraus() {
        return Err(Error::DimensionMismatch(format!(
            "segment endpoints have (D, r) = ({}, {}) and ({}, {})",
            a.dim(),
            a.num_kraus(),
            b.dim(),
            b.num_kraus()
        )));
    }
    KrausMap::new(segment(a.kraus(), b.kraus(), curve.gamma(t)))
}

fn segment(a: &[CMat], b: &[CMat], g: C64) -> Vec<CMat> {
    a.iter().zip(b).map(|(x, y)| x * (c(1.0, 0.0) - g) + y * g).collect()
}

/// Evaluates each requirement on `map`. Never fails; failures carry a margin.
pub fn certify_point(cl: &Classifier, map: &KrausMap, requirements: &[Requirement]) -> Vec<Certificate> {
    requirements.iter().map(|req| certify_one(cl, map, req)).collect()
}

fn failed(kind: CertificateKind, detail: String) -> Certificate {
    Certificate {
        kind,
        passed: false,
        verdict: Verdict::Bool(false),
        margin: 0.0,
        n_star: None,
        detail: Some(detail),
    }
}

fn certify_one(cl: &Classifier, map: &KrausMap, req: &Requirement) -> Certificate {
    match req {
        Requirement::KrausRank(r) => {
            let (rank, ratio) = map.choi().rank(cl.tol.rank);
            let passed = rank == *r;
            Certificate {
                kind: CertificateKind::KrausRank,
                passed,
                verdict: Verdict::Int(rank),
                margin: if passed { ratio } else { rank.abs_diff(*r) as f64 },
                n_star: None,
                detail: None,
            }
        }
        Requirement::Primitive { n_max } => cl
            .is_primitive(map, PrimitivityMethod::Wielandt { n_max: *n_max })
            .unwrap_or_else(|e| failed(CertificateKind::Primitive, e.to_string())),
        Requirement::Irreducible => cl
            .is_irreducible(map)
            .unwrap_or_else(|e| failed(CertificateKind::Irreducible, e.to_string())),
        Requirement::Degree(m) => cl.degree_certificate(map, *m),
        Requirement::TpResidual(tol) => {
            let res = map.tp_residual();
            Certificate {
                kind: CertificateKind::TpResidual,
                passed: res <= *tol,
                verdict: Verdict::Real(res),
                margin: if res <= *tol { tol - res } else { res - tol },
                n_star: None,
                detail: None,
            }
        }
    }
}

fn uniform_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("a path grid needs at least 2 samples (got {n})")));
    }
    Ok((0..n).map(|j| j as f64 / (n - 1) as f64).collect())
}

fn evaluate(g: &Geometry, curve: &CurveSpec, t: f64, cl: &Classifier) -> Result<(KrausMap, Option<CMat>, f64)> {
    let mut kraus = segment(&g.a, &g.b, curve.gamma(t));
    if let Some(ps) = &g.projectors {
        let m = ps.len();
        kraus = kraus
            .iter()
            .map(|k| (0..m).map(|j| &ps[j] * k * &ps[(j + m - 1) % m]).sum())
            .collect();
    }
    let mut map = KrausMap::new(kraus)?;
    let (mut rho, mut mu) = (None, 1.0);
    if g.tp {
        let n = tp_normalize_with(cl, &map)?;
        map = n.map;
        rho = Some(n.rho);
        mu = n.mu;
    }
    if let Some(w) = &g.rotation {
        let wt = unitary_interpolation(w, 1.0 - t)?;
        map = map.rotate(&wt.adjoint())?;
    }
    Ok((map, rho, mu))
}

fn certify_grid(
    g: &Geometry,
    curve: &CurveSpec,
    grid: &[f64],
    reqs: &[Requirement],
    cfg: &PathConfig,
) -> Vec<PathSample> {
    let cl = cfg.classifier;
    grid.par_iter()
        .map(|&t| match evaluate(g, curve, t, &cl) {
            Ok((map, rho_t, mu_t)) => {
                let certificates = certify_point(&cl, &map, reqs);
                PathSample {
                    t,
                    map,
                    certificates,
                    rho_t,
                    mu_t,
                }
            }
            Err(e) => {
                let raw = KrausMap::new(segment(&g.a, &g.b, curve.gamma(t))).expect("segment is valid");
                PathSample {
                    t,
                    map: raw,
                    certificates: vec![failed(CertificateKind::Primitive, e.to_string())],
                    rho_t: None,
                    mu_t: 0.0,
                }
            }
        })
        .collect()
}

/// Greedy assignment: repeatedly pair the remaining `(i, j)` with the largest overlap.
fn greedy_pairing(a: &[CMat], b: &[CMat]) -> Vec<usize> {
    let r = a.len();
    let mut scores: Vec<(f64, usize, usize)> = Vec::with_capacity(r * r);
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            scores.push((linalg::trace(&(x.adjoint() * y)).norm(), i, j));
        }
    }
    scores.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut perm = vec![usize::MAX; r];
    let mut used = vec![false; r];
    for (_, i, j) in scores {
        if perm[i] == usize::MAX && !used[j] {
            perm[i] = j;
            used[j] = true;
        }
    }
    perm
}

fn apply_pairing(a: &[CMat], b: &[CMat], pairing: &Pairing) -> Result<Vec<CMat>> {
    let perm = match pairing {
        Pairing::AsGiven => return Ok(b.to_vec()),
        Pairing::Greedy => greedy_pairing(a, b),
        Pairing::Permutation(p) => {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if sorted != (0..b.len()).collect::<Vec<_>>() {
                return Err(Error::InvalidArgument(format!("{p:?} is not a permutation of 0..{}", b.len())));
            }
            p.clone()
        }
    };
    Ok(perm.into_iter().map(|j| b[j].clone()).collect())
}

fn check_pair(a: &KrausMap, b: &KrausMap, cl: &Classifier) -> Result<(KrausMap, KrausMap, usize)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "endpoints act on dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let a = a.minimal_kraus_with(cl.tol.rank);
    let b = b.minimal_kraus_with(cl.tol.rank);
    if a.num_kraus() != b.num_kraus() {
        return Err(Error::RankMismatch {
            a: a.num_kraus(),
            b: b.num_kraus(),
        });
    }
    let r = a.num_kraus();
    Ok((a, b, r))
}

fn run(
    mode: PathMode,
    geometry: Geometry,
    endpoints: (KrausMap, KrausMap),
    requirements: Vec<Requirement>,
    rotation: Option<CMat>,
    shift: Option<usize>,
    cfg: &PathConfig,
) -> Result<CertifiedPath> {
    let grid = uniform_grid(cfg.samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut failures = Vec::new();
    let mut last = None;
    for attempt in 0..=cfg.max_retries {
        let curve = if attempt == 0 {
            CurveSpec::straight()
        } else {
            CurveSpec::random(attempt as f64, &mut rng)
        };
        let samples = certify_grid(&geometry, &curve, &grid, &requirements, cfg);
        let bad: Vec<&PathSample> = samples.iter().filter(|s| !s.passed()).collect();
        if bad.is_empty() {
            return Ok(CertifiedPath {
                mode,
                endpoints,
                curve,
                rotation,
                shift,
                samples,
                requirements,
                accepted: true,
                retries_used: attempt,
                failures,
                geometry,
                config: cfg.clone(),
            });
        }
        let first = bad[0];
        let cert = first.certificates.iter().find(|c| !c.passed).expect("a failed certificate");
        let msg = format!(
            "attempt {attempt}: {} of {} samples failed; first at t = {:.4}: {:?} (margin {:.3e}{})",
            bad.len(),
            samples.len(),
            first.t,
            cert.kind,
            cert.margin,
            cert.detail.as_deref().map(|d| format!(", {d}")).unwrap_or_default()
        );
        log::debug!("{msg}");
        failures.push(msg);
        last = Some((curve, samples));
    }
    let (curve, samples) = last.expect("at least one attempt");
    Ok(CertifiedPath {
        mode,
        endpoints,
        curve,
        rotation,
        shift,
        samples,
        requirements,
        accepted: false,
        retries_used: cfg.max_retries,
        failures,
        geometry,
        config: cfg.clone(),
    })
}

/// Path of constant Kraus rank `r`.
pub fn connect_fixed_rank(a: &KrausMap, b: &KrausMap, cfg: &PathConfig) -> Result<CertifiedPath> {
    let (a, b, r) = check_pair(a, b, &cfg.classifier)?;
    let bk = apply_pairing(a.kraus(), b.kraus(), &cfg.pairing)?;
    let b = KrausMap::new(bk)?;
    let geometry = Geometry {
        a: a.kraus().to_vec(),
        b: b.kraus().to_vec(),
        tp: false,
        rotation: None,
        projectors: None,
    };
    run(
        PathMode::FixedRank,
        geometry,
        (a, b),
        vec![Requirement::KrausRank(r)],
        None,
        None,
        cfg,
    )
}

/// Path of primitive maps of constant Kraus rank. With `tp = true` every
/// sample is renormalized to a trace-preserving map.
pub fn connect_primitive(a: &KrausMap, b: &KrausMap, tp: bool, cfg: &PathConfig) -> Result<CertifiedPath> {
    let cl = &cfg.classifier;
    let (a, b, r) = check_pair(a, b, cl)?;
    for (name, m) in [("first", &a), ("second", &b)] {
        if !cl.is_primitive(m, PrimitivityMethod::WIELANDT)?.passed {
            return Err(Error::InvalidArgument(format!("{name} endpoint is not primitive")));
        }
        if tp && m.tp_residual() > cfg.tp_tol {
            return Err(Error::InvalidArgument(format!(
                "{name} endpoint is not trace preserving (residual {:.3e})",
                m.tp_residual()
            )));
        }
    }
    let b = KrausMap::new(apply_pairing(a.kraus(), b.kraus(), &cfg.pairing)?)?;
    let mut reqs = vec![Requirement::KrausRank(r), Requirement::Primitive { n_max: cfg.n_max }];
    if tp {
        reqs.push(Requirement::TpResidual(cfg.tp_tol));
    }
    let geometry = Geometry {
        a: a.kraus().to_vec(),
        b: b.kraus().to_vec(),
        tp,
        rotation: None,
        projectors: None,
    };
    let mode = if tp { PathMode::PrimitiveTp } else { PathMode::Primitive };
    run(mode, geometry, (a, b), reqs, None, None, cfg)
}

/// Result of [`align_frobenius`].
#[derive(Clone, Debug)]
pub struct Alignment {
    pub w: CMat,
    /// `W A_i W†`, block-structured like the second map.
    pub rotated: KrausMap,
    pub shift: usize,
    /// Projectors of the second map.
    pub projectors: Vec<CMat>,
    pub residual: f64,
}

/// Unitary `W` carrying the Frobenius blocks of `a` onto those of `b`.
///
/// Block `k + s` of `a` is sent to block `k` of `b`, with `s` the smallest
/// cyclic shift matching the block dimensions. Both forms refer to the
/// trace-preserving normalizations of the inputs.
pub fn align_frobenius(cl: &Classifier, a: &KrausMap, b: &KrausMap) -> Result<Alignment> {
    let fa = cl.frobenius_form(a)?;
    let fb = cl.frobenius_form(b)?;
    if fa.degree != fb.degree || fa.multiplicity_index() != fb.multiplicity_index() {
        return Err(Error::IndexMismatch {
            a: fa.multiplicity_index().dims().to_vec(),
            b: fb.multiplicity_index().dims().to_vec(),
        });
    }
    let m = fa.degree;
    let shift = (0..m)
        .find(|&s| (0..m).all(|k| fa.dims[(k + s) % m] == fb.dims[k]))
        .expect("equal indices admit a shift");
    let (oa, ob) = (fa.offsets(), fb.offsets());
    let d = a.dim();
    let mut w = CMat::zeros(d, d);
    for k in 0..m {
        let ka = (k + shift) % m;
        let qa = fa.basis.columns(oa[ka], fa.dims[ka]);
        let qb = fb.basis.columns(ob[k], fb.dims[k]);
        w += qb * qa.adjoint();
    }
    let rotated = fa.map.rotate(&w)?;
    let residual = intertwining_residual(rotated.kraus(), &fb.projectors);
    if residual > 1e-7 {
        return Err(Error::Diagnostic(format!(
            "aligned map violates the block structure of the target (residual {residual:.3e})"
        )));
    }
    Ok(Alignment {
        w,
        rotated,
        shift,
        projectors: fb.projectors,
        residual,
    })
}

/// Eigen-decomposition `W = Q diag(e^{iθ_j}) Q†` with `θ_j ∈ (−π, π]`.
fn unitary_phases(w: &CMat) -> Result<(CMat, Vec<f64>)> {
    if linalg::unitarity_residual(w) > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "matrix is not unitary (residual {:.3e})",
            linalg::unitarity_residual(w)
        )));
    }
    let (q, t) = linalg::schur(w)?;
    let phases = t
        .diagonal()
        .iter()
        .map(|z| {
            let th = z.arg();
            if (th + PI).abs() < 1e-9 {
                log::warn!("eigenphase at -π; taking the branch +π");
                PI
            } else {
                th
            }
        })
        .collect();
    Ok((q, phases))
}

/// Hermitian generator `H` with `W = exp(iH)`, eigenphases in `(−π, π]`.
pub fn unitary_log(w: &CMat) -> Result<CMat> {
    let (q, th) = unitary_phases(w)?;
    let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(th.len(), th.iter().map(|&x| c(x, 0.0))));
    Ok(linalg::hermitize(&(&q * diag * q.adjoint())))
}

/// `W(t) = exp(iHt)` with `H` the principal generator of `W`.
pub fn unitary_interpolation(w: &CMat, t: f64) -> Result<CMat> {
    let (q, th) = unitary_phases(w)?;
    let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        th.len(),
        th.iter().map(|&x| C64::from_polar(1.0, x * t)),
    ));
    Ok(&q * diag * q.adjoint())
}

/// Path of trace-preserving irreducible maps of fixed degree `m`.
///
/// The first endpoint is rotated by the alignment unitary `W` onto the block
/// structure of the second, interpolated inside that structure, renormalized,
/// and conjugated back by `W(1−t)`, so the path starts at the first endpoint.
pub fn connect_irreducible_fixed_degree(a: &KrausMap, b: &KrausMap, cfg: &PathConfig) -> Result<CertifiedPath> {
    let cl = &cfg.classifier;
    let (a, b, r) = check_pair(a, b, cl)?;
    for (name, m) in [("first", &a), ("second", &b)] {
        if m.tp_residual() > cfg.tp_tol {
            return Err(Error::InvalidArgument(format!(
                "{name} endpoint is not trace preserving (residual {:.3e})",
                m.tp_residual()
            )));
        }
        if !cl.is_irreducible(m)?.passed {
            return Err(Error::InvalidArgument(format!("{name} endpoint is not irreducible")));
        }
    }
    let (ma, _) = cl.degree(&a)?;
    let (mb, _) = cl.degree(&b)?;
    let (ia, ib) = (cl.multiplicity_index(&a)?, cl.multiplicity_index(&b)?);
    if ma != mb || ia != ib {
        return Err(Error::IndexMismatch {
            a: ia.dims().to_vec(),
            b: ib.dims().to_vec(),
        });
    }
    let al = align_frobenius(cl, &a, &b)?;
    let bk = apply_pairing(al.rotated.kraus(), b.kraus(), &cfg.pairing)?;
    let b = KrausMap::new(bk)?;
    let h = unitary_log(&al.w)?;
    let geometry = Geometry {
        a: al.rotated.kraus().to_vec(),
        b: b.kraus().to_vec(),
        tp: true,
        rotation: Some(al.w.clone()),
        projectors: Some(al.projectors.clone()),
    };
    let reqs = vec![
        Requirement::KrausRank(r),
        Requirement::Irreducible,
        Requirement::Degree(ma),
        Requirement::TpResidual(cfg.tp_tol),
    ];
    run(
        PathMode::FixedDegree,
        geometry,
        (a, b),
        reqs,
        Some(h),
        Some(al.shift),
        cfg,
    )
}

/// Dispatches on the mode.
pub fn connect(mode: PathMode, a: &KrausMap, b: &KrausMap, cfg: &PathConfig) -> Result<CertifiedPath> {
    match mode {
        PathMode::FixedRank => connect_fixed_rank(a, b, cfg),
        PathMode::Primitive => connect_primitive(a, b, false, cfg),
        PathMode::PrimitiveTp => connect_primitive(a, b, true, cfg),
        PathMode::FixedDegree => connect_irreducible_fixed_degree(a, b, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{flip_channel, random_channel, shift_channel, weyl_channel};
    use crate::linalg::ONE;

    #[test]
    fn curve_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cv = CurveSpec::random(2.0, &mut rng);
        assert_eq!(cv.gamma(0.0), c(0.0, 0.0));
        assert_eq!(cv.gamma(1.0), c(1.0, 0.0));
        assert_eq!(CurveSpec::straight().gamma(0.25), c(0.25, 0.0));
    }

    #[test]
    fn segment_midpoint() {
        let a = weyl_channel(2, 3).unwrap();
        let b = random_channel(2, 3, 5).unwrap();
        let mid = kraus_segment(&a, &b, &CurveSpec::straight(), 0.5).unwrap();
        for ((x, y), z) in a.kraus().iter().zip(b.kraus()).zip(mid.kraus()) {
            assert!(linalg::fro(&((x + y) * c(0.5, 0.0) - z)) < 1e-14);
        }
        let end = kraus_segment(&a, &b, &CurveSpec::straight(), 1.0).unwrap();
        assert_eq!(end.kraus(), b.kraus());
    }

    #[test]
    fn certify_identity_fails_primitivity() {
        let id = KrausMap::new(vec![linalg::identity(2)]).unwrap();
        let certs = certify_point(&Classifier::default(), &id, &[Requirement::Primitive { n_max: None }]);
        assert!(!certs[0].passed);
        assert_eq!(certs[0].margin, 3.0);
        let certs = certify_point(&Classifier::default(), &flip_channel(), &[Requirement::Degree(2)]);
        assert!(certs[0].passed);
    }

    #[test]
    fn constant_path() {
        let a = weyl_channel(2, 3).unwrap();
        let p = connect_fixed_rank(&a, &a, &PathConfig::default()).unwrap();
        assert!(p.accepted);
        assert_eq!(p.retries_used, 0);
        assert!(p.endpoint_error() < 1e-14);
    }

    #[test]
    fn primitive_tp_path() {
        let a = weyl_channel(2, 3).unwrap();
        let b = random_channel(2, 3, 11).unwrap();
        let p = connect_primitive(&a, &b, true, &PathConfig::default()).unwrap();
        assert!(p.accepted, "{:?}", p.failures);
        assert!(p.endpoint_error() < 1e-10);
        assert!(p.samples.iter().all(|s| s.map.tp_residual() < 1e-10));
    }

    #[test]
    fn rank_mismatch_rejected() {
        let a = weyl_channel(2, 3).unwrap();
        let b = weyl_channel(2, 2).unwrap();
        assert!(matches!(
            connect_primitive(&a, &b, true, &PathConfig::default()),
            Err(Error::RankMismatch { a: 3, b: 2 })
        ));
    }

    #[test]
    fn interpolation_square_root() {
        let sx = crate::constructions::WeylPair::new(2).u1;
        let h = unitary_interpolation(&sx, 0.5).unwrap();
        assert!(linalg::fro(&(&h * &h - &sx)) < 1e-12);
        let id = unitary_interpolation(&linalg::identity(3), 0.3).unwrap();
        assert!(linalg::fro(&(id - linalg::identity(3))) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = linalg::random_unitary(3, &mut rng);
        for j in 0..=10 {
            let ut = unitary_interpolation(&u, j as f64 / 10.0).unwrap();
            assert!(linalg::unitarity_residual(&ut) < 1e-12);
        }
        assert!(linalg::fro(&(unitary_interpolation(&u, 1.0).unwrap() - &u)) < 1e-10);
        let _ = ONE;
    }

    #[test]
    fn alignment_of_rotated_flip() {
        let cl = Classifier::default();
        let f = flip_channel();
        let al = align_frobenius(&cl, &f, &f).unwrap();
        assert_eq!(al.shift, 0);
        assert!(al.residual < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = linalg::random_unitary(2, &mut rng);
        let g = f.rotate(&w).unwrap();
        let al = align_frobenius(&cl, &g, &f).unwrap();
        assert!(al.residual < 1e-8);
    }

    #[test]
    fn alignment_shift_one() {
        let cl = Classifier::default();
        let a = shift_channel(&[2, 1], 2, 1).unwrap();
        let b = shift_channel(&[1, 2], 2, 2).unwrap();
        let al = align_frobenius(&cl, &a, &b).unwrap();
        assert!(al.residual < 1e-7);
        let fa = cl.frobenius_form(&a).unwrap();
        let fb = cl.frobenius_form(&b).unwrap();
        let m = 2;
        assert!((0..m).all(|k| fa.dims[(k + al.shift) % m] == fb.dims[k]));
    }

    #[test]
    fn fixed_degree_path() {
        let a = flip_channel();
        let b = shift_channel(&[1, 1], 2, 9).unwrap();
        let p = connect_irreducible_fixed_degree(&a, &b, &PathConfig::default()).unwrap();
        assert!(p.accepted, "{:?}", p.failures);
        assert!(p.endpoint_error() < 1e-10);
    }

    #[test]
    fn fixed_degree_index_mismatch() {
        let a = shift_channel(&[2, 2], 3, 1).unwrap();
        let b = shift_channel(&[1, 3], 3, 1).unwrap();
        assert!(matches!(
            connect_irreducible_fixed_degree(&a, &b, &PathConfig::default()),
            Err(Error::IndexMismatch { .. })
        ));
    }
}
