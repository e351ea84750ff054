//! Quick checks of each module against independent oracles.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::KrausMap;
use crate::constructions::{direct_sum, flip_channel, ghz_kraus, random_channel, shift_channel, weyl_channel};
use crate::error::Result;
use crate::linalg::{self, c, CMat, CVec};
use crate::mps::{canonical_decompose, mps_vector};
use crate::parent_hamiltonian::{parent_model, reduced_density, string_products, LOCAL_CAP};
use crate::perron_frobenius::{bar_map, Classifier, PrimitivityMethod};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type CheckFn = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("weyl channel is CPTPU, rank r, primitive", weyl),
    ("wielandt and spectral tests agree", primitivity_agreement),
    ("irreducible iff bar map primitive", bar_map_criterion),
    ("multiplicity index of shift channel", index),
    ("determinant from antisymmetrizer", determinant),
    ("choi of power equals enumeration", choi_power),
    ("mps translation invariance", translation),
    ("canonical form recovers direct sum", canonical),
    ("reduced density trace", density_trace),
    ("ghz parent hamiltonian degeneracy", ghz_parent),
];

pub fn run() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = match f() {
                Ok(x) => x,
                Err(e) => (false, format!("error: {e}")),
            };
            Check {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

pub fn table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for ch in checks {
        s.push_str(&format!(
            "{:<width$}  {}  {:>7.3}s  {}\n",
            ch.name,
            if ch.passed { "PASS" } else { "FAIL" },
            ch.seconds,
            ch.detail
        ));
    }
    s
}

fn weyl() -> Result<(bool, String)> {
    let cl = Classifier::default();
    let mut worst = 0.0f64;
    for d in [2, 3] {
        for r in 2..=d * d {
            let m = weyl_channel(d, r)?;
            worst = worst.max(m.tp_residual()).max(m.unital_residual());
            let cert = cl.is_primitive(&m, PrimitivityMethod::WIELANDT)?;
            if m.kraus_rank() != r || !cert.passed {
                return Ok((false, format!("D={d} r={r}: rank {} primitive {}", m.kraus_rank(), cert.passed)));
            }
        }
    }
    Ok((worst < 1e-12, format!("max CPTPU residual {worst:.1e}")))
}

fn corpus() -> Result<Vec<KrausMap>> {
    let mut v = vec![flip_channel(), KrausMap::new(vec![linalg::identity(2)])?];
    for s in 0..4 {
        v.push(random_channel(2, 2, s)?);
        v.push(random_channel(3, 2, s)?.scaled(0.7));
        v.push(shift_channel(&[1, 2], 2, s)?);
    }
    v.push(direct_sum(&[random_channel(2, 2, 9)?, random_channel(1, 1, 9)?], &[1.0, 0.5])?);
    Ok(v)
}

fn primitivity_agreement() -> Result<(bool, String)> {
    let cl = Classifier::default();
    let maps = corpus()?;
    for (i, m) in maps.iter().enumerate() {
        if let Err(e) = cl.primitivity_crosscheck(m) {
            return Ok((false, format!("map {i}: {e}")));
        }
    }
    Ok((true, format!("{} maps", maps.len())))
}

fn bar_map_criterion() -> Result<(bool, String)> {
    let cl = Classifier::default();
    let maps = corpus()?;
    for (i, m) in maps.iter().enumerate() {
        let irr = cl.spectral_data(m).map(|s| s.fixed_point_margins().0 > 0.0).unwrap_or(false);
        let bar = cl.is_primitive(&bar_map(m), PrimitivityMethod::WIELANDT)?.passed;
        let irr_cert = cl.is_irreducible(m)?.passed;
        if bar != irr_cert || (irr_cert && !irr) {
            return Ok((false, format!("map {i}: bar {bar}, irreducible {irr_cert}")));
        }
    }
    Ok((true, format!("{} maps", maps.len())))
}

fn index() -> Result<(bool, String)> {
    let cl = Classifier::default();
    let m = shift_channel(&[2, 1, 1], 2, 1)?;
    let idx = cl.multiplicity_index(&m)?;
    Ok((idx.dims() == [1, 1, 2], format!("{:?}", idx.dims())))
}

fn determinant() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for _ in 0..5 {
            let x = linalg::random_gaussian_matrix(n, n, &mut rng);
            let d = linalg::det_lu(&x);
            worst = worst.max((linalg::det_via_antisymmetrizer(&x) - d).norm() / d.norm().max(1.0));
        }
    }
    Ok((worst < 1e-10, format!("max error {worst:.1e}")))
}

/// `Σ_I vec_row(A_I) vec_row(A_I)†` over all strings of length `n`.
pub fn choi_by_enumeration(kraus: &[CMat], n: usize) -> Result<CMat> {
    let d = kraus[0].nrows();
    let mut w = CMat::zeros(d * d, d * d);
    for p in string_products(kraus, n, LOCAL_CAP)? {
        let v = CVec::from_fn(d * d, |k, _| p[(k / d, k % d)]);
        w += &v * v.adjoint();
    }
    Ok(w)
}

fn choi_power() -> Result<(bool, String)> {
    let m = random_channel(2, 3, 2)?;
    let err = linalg::max_abs(&(m.choi_of_power(2).matrix() - choi_by_enumeration(m.kraus(), 2)?));
    Ok((err < 1e-10, format!("error {err:.1e}")))
}

fn translation() -> Result<(bool, String)> {
    let m = random_channel(2, 2, 5)?;
    let v = mps_vector(m.kraus(), 5)?;
    let err = (&v.translate().amplitudes - &v.amplitudes).camax();
    Ok((err < 1e-12, format!("error {err:.1e}")))
}

fn canonical() -> Result<(bool, String)> {
    let m = direct_sum(&[weyl_channel(2, 2)?, shift_channel(&[1, 1], 2, 3)?], &[1.0, 0.8])?;
    let form = canonical_decompose(m.kraus())?;
    let mut got: Vec<(usize, usize)> = form.blocks.iter().map(|b| (b.map.dim(), b.degree)).collect();
    got.sort();
    Ok((got == [(2, 1), (2, 2)], format!("{got:?}")))
}

fn density_trace() -> Result<(bool, String)> {
    let m = random_channel(2, 2, 8)?.scaled(0.9);
    let rho = reduced_density(m.kraus(), 3)?;
    let one = linalg::vec_of(&linalg::identity(2));
    let expected = (one.adjoint() * m.power_transfer(3) * &one)[(0, 0)] / c(2.0, 0.0);
    let err = (linalg::trace(&rho) - expected).norm();
    Ok((err < 1e-12, format!("error {err:.1e}")))
}

fn ghz_parent() -> Result<(bool, String)> {
    let mut model = parent_model(&ghz_kraus(), 2, 4)?;
    let s = model.diagonalize(4)?;
    Ok((s.degeneracy == 2, format!("degeneracy {}, gap {:?}", s.degeneracy, s.gap)))
}
