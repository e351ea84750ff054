//! Channel families: Weyl channels, random channels, cyclic shift channels,
//! direct sums and a few named fixtures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::KrausMap;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64, ONE, ZERO};
use crate::perron_frobenius::{Classifier, MultiplicityIndex};

/// Clock, shift and irrational clock matrices of dimension `D`.
#[derive(Clone, Debug)]
pub struct WeylPair {
    /// `diag(e^{2πik/D})`.
    pub u0: CMat,
    /// `Σ_k |k+1⟩⟨k|` (indices mod `D`).
    pub u1: CMat,
    /// `diag(e^{i(k+1)})`.
    pub u0hat: CMat,
}

impl WeylPair {
    pub fn new(d: usize) -> Self {
        let u0 = CMat::from_diagonal(&CVec::from_fn(d, |k, _| {
            C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64)
        }));
        let mut u1 = CMat::zeros(d, d);
        for k in 0..d {
            u1[((k + 1) % d, k)] = ONE;
        }
        let u0hat = CMat::from_diagonal(&CVec::from_fn(d, |k, _| C64::from_polar(1.0, (k + 1) as f64)));
        Self { u0, u1, u0hat }
    }
}

/// Index set of the Weyl channel: `(0,0), (0,1), (1,0)` followed by the
/// remaining pairs in row-major order.
fn weyl_indices(d: usize, r: usize) -> Vec<(usize, usize)> {
    let mut idx = vec![(0, 0), (0, 1), (1, 0)];
    for i in 0..d {
        for j in 0..d {
            if idx.len() >= r {
                break;
            }
            if !idx.contains(&(i, j)) {
                idx.push((i, j));
            }
        }
    }
    idx.truncate(r);
    idx
}

/// Unital trace-preserving primitive channel of Kraus rank `r`.
///
/// For `r ≥ 3` the Kraus operators are `U0^i U1^j / √r`; for `r = 2` they are
/// `Û0/√2` and `U1/√2`.
pub fn weyl_channel(d: usize, r: usize) -> Result<KrausMap> {
    if d < 2 || r < 2 || r > d * d {
        return Err(Error::InvalidArgument(format!(
            "weyl channel needs D ≥ 2 and 2 ≤ r ≤ D² (got D = {d}, r = {r})"
        )));
    }
    let w = WeylPair::new(d);
    let kraus = if r == 2 {
        let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        vec![&w.u0hat * s, &w.u1 * s]
    } else {
        let s = c(1.0 / (r as f64).sqrt(), 0.0);
        weyl_indices(d, r)
            .into_iter()
            .map(|(i, j)| linalg::mat_pow(&w.u0, i as u64) * linalg::mat_pow(&w.u1, j as u64) * s)
            .collect()
    };
    KrausMap::new(kraus)
}

/// Result of bringing a map to trace-preserving form.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub map: KrausMap,
    /// Fixed point of the adjoint map (unit trace).
    pub rho: CMat,
    pub mu: f64,
}

/// `Ã_i = μ^{-1/2} ρ^{1/2} A_i ρ^{-1/2}` with `T*(ρ) = μρ`.
pub fn tp_normalize(map: &KrausMap) -> Result<KrausMap> {
    Ok(tp_normalize_with(&Classifier::default(), map)?.map)
}

pub fn tp_normalize_with(cl: &Classifier, map: &KrausMap) -> Result<Normalized> {
    let sd = cl.spectral_data(map)?;
    let (_, ms) = sd.fixed_point_margins();
    if sd.mu <= 0.0 || ms <= cl.tol.pd {
        return Err(Error::NotNormalizable { ratio: ms });
    }
    let (sq, sq_inv) = linalg::pd_sqrt_pair(&sd.sigma_left);
    let f = c(1.0 / sd.mu.sqrt(), 0.0);
    let kraus = map.kraus().iter().map(|a| &sq * a * &sq_inv * f).collect();
    Ok(Normalized {
        map: KrausMap::new(kraus)?,
        rho: sd.sigma_left,
        mu: sd.mu,
    })
}

/// Haar-like random trace-preserving channel: the `r` Kraus operators are the
/// `D×D` blocks of a random `rD × D` isometry.
pub fn random_channel(d: usize, r: usize, seed: u64) -> Result<KrausMap> {
    if d == 0 || r == 0 || r > d * d {
        return Err(Error::InvalidArgument(format!(
            "random channel needs 1 ≤ r ≤ D² (got D = {d}, r = {r})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let g = linalg::random_gaussian_matrix(r * d, d, &mut rng);
        let q = g.qr().q();
        let kraus: Vec<CMat> = (0..r).map(|i| q.rows(i * d, d).into_owned()).collect();
        let map = KrausMap::new(kraus)?;
        if map.listed_rank(crate::channel::DEFAULT_RANK_TOL) == r {
            return Ok(map);
        }
    }
    Err(Error::Diagnostic(format!(
        "random channel D = {d}, r = {r}: Kraus rank deficient after 10 draws"
    )))
}

/// Random trace-preserving channel with cyclic block structure: block `k`
/// (dimension `d_k`) is mapped into block `k+1`. Irreducible of degree `m`
/// with multiplicity index `dims`.
///
/// Each block column is a random isometry of shape `r·d_{k+1} × d_k`, which
/// needs `r·d_{k+1} ≥ d_k`. The Kraus rank is `r`, so `r` may not exceed
/// `Σ_k d_{k+1} d_k`.
pub fn shift_channel(dims: &[usize], r: usize, seed: u64) -> Result<KrausMap> {
    let m = dims.len();
    if m < 2 || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "shift channel needs at least two non-empty blocks (got {dims:?})"
        )));
    }
    let capacity: usize = (0..m).map(|k| dims[k] * dims[(k + 1) % m]).sum();
    if r == 0 || r > capacity {
        return Err(Error::InvalidArgument(format!(
            "shift channel with dims {dims:?} supports 1 ≤ r ≤ {capacity} (got {r})"
        )));
    }
    for k in 0..m {
        if r * dims[(k + 1) % m] < dims[k] {
            return Err(Error::InvalidArgument(format!(
                "shift channel with dims {dims:?}: r = {r} too small to map a block of dim {} into one of dim {}",
                dims[k],
                dims[(k + 1) % m]
            )));
        }
    }
    let d: usize = dims.iter().sum();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &x| {
            let o = *acc;
            *acc += x;
            Some(o)
        })
        .collect();
    let cl = Classifier::default();
    let target = MultiplicityIndex::canonical(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_err = String::new();
    for _ in 0..10 {
        let mut kraus = vec![CMat::zeros(d, d); r];
        for k in 0..m {
            let (dk, dn) = (dims[k], dims[(k + 1) % m]);
            let g = linalg::random_gaussian_matrix(r * dn, dk, &mut rng);
            let q = g.qr().q();
            for (i, a) in kraus.iter_mut().enumerate() {
                a.view_mut((offsets[(k + 1) % m], offsets[k]), (dn, dk))
                    .copy_from(&q.rows(i * dn, dn));
            }
        }
        let map = KrausMap::new(kraus)?;
        if map.listed_rank(crate::channel::DEFAULT_RANK_TOL) != r {
            last_err = "Kraus rank deficient".into();
            continue;
        }
        match cl.multiplicity_index(&map) {
            Ok(idx) if idx == target => return Ok(map),
            Ok(idx) => last_err = format!("index {:?}", idx.dims()),
            Err(e) => last_err = e.to_string(),
        }
    }
    Err(Error::Diagnostic(format!(
        "shift channel {dims:?}: verification failed after 10 draws ({last_err})"
    )))
}

/// Block-diagonal Kraus operators `diag(λ_1 A_i^{(1)}, …, λ_b A_i^{(b)})`.
/// Blocks with fewer Kraus operators are padded with zeros.
pub fn direct_sum(blocks: &[KrausMap], weights: &[f64]) -> Result<KrausMap> {
    if blocks.is_empty() || blocks.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "direct sum needs one weight per block ({} blocks, {} weights)",
            blocks.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
        return Err(Error::InvalidArgument(format!("weight {w} outside (0, 1]")));
    }
    let d: usize = blocks.iter().map(|b| b.dim()).sum();
    let r = blocks.iter().map(|b| b.num_kraus()).max().unwrap_or(0);
    let mut kraus = vec![CMat::zeros(d, d); r];
    let mut off = 0;
    for (b, &w) in blocks.iter().zip(weights) {
        let db = b.dim();
        for (i, a) in b.kraus().iter().enumerate() {
            kraus[i]
                .view_mut((off, off), (db, db))
                .copy_from(&(a * c(w, 0.0)));
        }
        off += db;
    }
    KrausMap::new(kraus)
}

/// `{|0⟩⟨1|, |1⟩⟨0|}`: unital, trace preserving, irreducible of degree 2.
pub fn flip_channel() -> KrausMap {
    let mut a0 = CMat::zeros(2, 2);
    a0[(0, 1)] = ONE;
    let mut a1 = CMat::zeros(2, 2);
    a1[(1, 0)] = ONE;
    KrausMap::new(vec![a0, a1]).expect("valid")
}

/// `{diag(1,0), diag(0,1)}`, the MPS of the GHZ state.
pub fn ghz_kraus() -> Vec<CMat> {
    vec![
        CMat::from_diagonal(&CVec::from_vec(vec![ONE, ZERO])),
        CMat::from_diagonal(&CVec::from_vec(vec![ZERO, ONE])),
    ]
}

/// AKLT tensors `A_+ = √(2/3) σ_+`, `A_0 = −√(1/3) σ_z`, `A_− = −√(2/3) σ_−`.
pub fn aklt_kraus() -> Vec<CMat> {
    let s = (2.0f64 / 3.0).sqrt();
    let z = (1.0f64 / 3.0).sqrt();
    let mut plus = CMat::zeros(2, 2);
    plus[(0, 1)] = c(s, 0.0);
    let zero = CMat::from_diagonal(&CVec::from_vec(vec![c(-z, 0.0), c(z, 0.0)]));
    let mut minus = CMat::zeros(2, 2);
    minus[(1, 0)] = c(-s, 0.0);
    vec![plus, zero, minus]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perron_frobenius::PrimitivityMethod;

    #[test]
    fn weyl_pair_invariants() {
        for d in [2, 3] {
            let w = WeylPair::new(d);
            for u in [&w.u0, &w.u1, &w.u0hat] {
                assert!(linalg::unitarity_residual(u) < 1e-12);
            }
            let id = linalg::identity(d);
            assert!(linalg::fro(&(linalg::mat_pow(&w.u0, d as u64) - &id)) < 1e-12);
            assert!(linalg::fro(&(linalg::mat_pow(&w.u1, d as u64) - &id)) < 1e-12);
            for m in 1..=(d as u64).pow(4) {
                assert!(linalg::fro(&(linalg::mat_pow(&w.u0hat, m) - &id)) > 1e-6);
            }
        }
    }

    #[test]
    fn weyl_index_order() {
        assert_eq!(weyl_indices(2, 4), vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(weyl_indices(3, 5), vec![(0, 0), (0, 1), (1, 0), (0, 2), (1, 1)]);
    }

    #[test]
    fn weyl_23_is_identity_z_x() {
        let m = weyl_channel(2, 3).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let z = CMat::from_diagonal(&CVec::from_vec(vec![ONE, -ONE]));
        let expected = [linalg::identity(2), WeylPair::new(2).u1, z];
        for (a, e) in m.kraus().iter().zip(expected) {
            assert!(linalg::fro(&(a - e * c(s, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn weyl_range_errors() {
        assert!(weyl_channel(2, 5).is_err());
        assert!(weyl_channel(2, 1).is_err());
        assert!(weyl_channel(1, 2).is_err());
    }

    #[test]
    fn weyl_32_primitive_rank_two() {
        let m = weyl_channel(3, 2).unwrap();
        assert_eq!(m.kraus_rank(), 2);
        let cert = Classifier::default()
            .is_primitive(&m, PrimitivityMethod::WIELANDT)
            .unwrap();
        assert!(cert.passed);
        assert!(cert.n_star.unwrap() <= 81);
    }

    #[test]
    fn tp_normalize_scalar_multiple() {
        let m = KrausMap::new(vec![linalg::identity(2) * c(2.0, 0.0)]).unwrap();
        let n = tp_normalize(&m).unwrap();
        assert!(linalg::fro(&(n.kraus()[0].clone() - linalg::identity(2))) < 1e-12);
    }

    #[test]
    fn tp_normalize_spectrum_ratio() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![ONE, c(0.5, 0.0)]));
        let b = WeylPair::new(2).u1 * c(0.5, 0.0);
        let m = KrausMap::new(vec![a, b]).unwrap();
        let cl = Classifier::default();
        let nm = tp_normalize_with(&cl, &m).unwrap();
        assert!(nm.map.tp_residual() < 1e-10);
        let old = cl.spectral_data(&m).unwrap();
        let new = cl.spectral_data(&nm.map).unwrap();
        for (x, y) in old.eigenvalues.iter().zip(&new.eigenvalues) {
            assert!((x / nm.mu - y).norm() < 1e-8);
        }
    }

    #[test]
    fn random_channel_deterministic_and_tp() {
        let a = random_channel(2, 2, 1).unwrap();
        assert!(a.tp_residual() < 1e-12);
        let b = random_channel(2, 2, 1).unwrap();
        assert_eq!(a.kraus(), b.kraus());
        let p = random_channel(2, 4, 7).unwrap();
        assert!(Classifier::default()
            .is_primitive(&p, PrimitivityMethod::WIELANDT)
            .unwrap()
            .passed);
    }

    #[test]
    fn shift_channel_indices() {
        let cl = Classifier::default();
        for (dims, r) in [(vec![1, 1], 2), (vec![2, 1], 2), (vec![1, 1, 1], 2), (vec![2, 2], 2)] {
            let m = shift_channel(&dims, r, 3).unwrap();
            assert!(m.tp_residual() < 1e-12);
            assert_eq!(cl.multiplicity_index(&m).unwrap(), MultiplicityIndex::canonical(&dims));
        }
        assert!(shift_channel(&[3, 1], 2, 0).is_err());
        assert!(shift_channel(&[2], 2, 0).is_err());
    }

    #[test]
    fn direct_sum_ghz_and_reducible() {
        let one = KrausMap::new(vec![linalg::identity(1)]).unwrap();
        let zero = KrausMap::new(vec![CMat::zeros(1, 1), linalg::identity(1)]).unwrap();
        let s = direct_sum(&[one, zero], &[1.0, 1.0]).unwrap();
        let ghz = ghz_kraus();
        assert_eq!(s.kraus()[0], ghz[0]);
        assert_eq!(s.kraus()[1].clone(), CMat::from_diagonal(&CVec::from_vec(vec![ZERO, ONE])));

        let w = weyl_channel(2, 3).unwrap();
        let sum = direct_sum(&[w.clone(), w.clone()], &[1.0, 0.5]).unwrap();
        assert!(!Classifier::default().is_irreducible(&sum).unwrap().passed);
        let single = direct_sum(std::slice::from_ref(&w), &[1.0]).unwrap();
        assert_eq!(single.kraus(), w.kraus());
    }

    #[test]
    fn aklt_is_tp() {
        let m = KrausMap::new(aklt_kraus()).unwrap();
        assert!(m.tp_residual() < 1e-12);
        assert!(m.unital_residual() < 1e-12);
    }
}
