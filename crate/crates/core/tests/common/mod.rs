#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use anyonic::fqh_interferometer::{fqh_p_coefficients, FqhSettings, DEFAULT_SERIES_TOL};
use anyonic::mach_zehnder::{p_coefficients, InterferometerSettings, PCoefficients, Placement, ProbeEnsemble};
use anyonic::model_library::{fib, hierarchy, ising, moore_read, rr_bar_31, z_n, Level};
use anyonic::state_space::{Ket, PairDensityMatrix};
use anyonic::{AnyonModel, Charge};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn model_pool() -> Vec<Arc<AnyonModel>> {
    vec![
        Arc::new(fib()),
        Arc::new(ising()),
        Arc::new(z_n(4, Level::Half(1)).unwrap()),
        Arc::new(moore_read()),
        Arc::new(rr_bar_31()),
        Arc::new(hierarchy(1, 3).unwrap()),
    ]
}

fn random_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

fn all_kets(model: &AnyonModel) -> Vec<Ket> {
    let n = model.size();
    let mut out = Vec::new();
    for a in 0..n {
        for cc in 0..n {
            for f in 0..n {
                for mu in 0..model.n(a, cc, f) as usize {
                    out.push(Ket::new(a, cc, f, mu));
                }
            }
        }
    }
    out
}

/// Random pure superposition over at most `width` kets, respecting `sectors` when given.
pub fn random_pure(model: &Arc<AnyonModel>, sectors: Option<&[i64]>, width: usize, rng: &mut ChaCha8Rng) -> Vec<(Ket, Complex64)> {
    let kets = all_kets(model);
    let first = kets[rng.random_range(0..kets.len())];
    let pool: Vec<Ket> = kets
        .into_iter()
        .filter(|k| *k != first)
        .filter(|k| sectors.is_none_or(|s| s[k.a] == s[first.a] && s[k.c] == s[first.c]))
        .collect();
    let mut chosen = vec![first];
    for _ in 1..width {
        if pool.is_empty() {
            break;
        }
        let k = pool[rng.random_range(0..pool.len())];
        if !chosen.contains(&k) {
            chosen.push(k);
        }
    }
    let mut amps: Vec<(Ket, Complex64)> =
        chosen.into_iter().map(|k| (k, random_phase(rng) * rng.random_range(0.05..1.0))).collect();
    let norm: f64 = amps.iter().map(|(_, z)| z.norm_sqr()).sum::<f64>().sqrt();
    for (_, z) in &mut amps {
        *z /= norm;
    }
    amps
}

/// Random mixture of up to three random pure states.
pub fn random_state(model: &Arc<AnyonModel>, superselect: bool, rng: &mut ChaCha8Rng) -> PairDensityMatrix {
    let sectors = if superselect { PairDensityMatrix::electric_sectors(model) } else { None };
    let parts = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..parts).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc: Option<PairDensityMatrix> = None;
    for w in weights {
        let width = rng.random_range(1..=4);
        let amps = random_pure(model, sectors.as_deref(), width, rng);
        let pure = PairDensityMatrix::from_pure(Arc::clone(model), &amps, sectors.clone()).unwrap().scaled(w / total);
        acc = Some(match acc {
            None => pure,
            Some(x) => x.plus(&pure),
        });
    }
    acc.unwrap()
}

pub fn random_mz_settings(rng: &mut ChaCha8Rng) -> InterferometerSettings {
    let mut leg = || {
        let t = rng.random_range(0.0..1.0f64);
        (random_phase(rng) * t.sqrt(), random_phase(rng) * (1.0 - t).sqrt())
    };
    let (t1, r1) = leg();
    let (t2, r2) = leg();
    let s = InterferometerSettings::new(t1, r1, t2, r2, rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)).unwrap();
    let q = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.0..1.0) };
    let placement = [Placement::BelowRight, Placement::Above, Placement::BetweenOutputs][rng.random_range(0..3)];
    s.with_q(q).with_placement(placement)
}

pub fn random_probe(model: &AnyonModel, two_direction: bool, rng: &mut ChaCha8Rng) -> ProbeEnsemble {
    let k = rng.random_range(1..=3);
    let charges: Vec<Charge> = (0..k).map(|_| rng.random_range(0..model.size())).collect();
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    if !two_direction {
        let pr: Vec<(Charge, f64)> = charges.iter().zip(&weights).map(|(b, w)| (*b, w / total)).collect();
        return ProbeEnsemble::mixture(&pr).unwrap();
    }
    let w = charges
        .iter()
        .zip(&weights)
        .map(|(b, w)| {
            let a = Matrix2::new(random_phase(rng), random_phase(rng) * rng.random_range(0.0..1.0), c(0.0, 0.0), random_phase(rng));
            let m = a * a.adjoint();
            let tr = m.trace().re;
            (*b, m * c(w / total / tr, 0.0))
        })
        .collect();
    ProbeEnsemble::with_directions(w).unwrap()
}

/// One randomized measurement setup: a target state and the probe coefficients acting on it.
pub struct Case {
    pub rho: PairDensityMatrix,
    pub p: PCoefficients,
    pub label: String,
}

pub fn random_case(models: &[Arc<AnyonModel>], model_idx: usize, seed: u64) -> Case {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = &models[model_idx % models.len()];
    let fqh_device = model.fqh().is_some() && rng.random_bool(0.5);
    if fqh_device {
        let rho = random_state(model, true, &mut rng);
        let t1 = Complex64::from_polar(rng.random_range(0.0..0.2), rng.random_range(0.0..2.0 * PI));
        let t2 = Complex64::from_polar(rng.random_range(0.0..0.2), rng.random_range(0.0..2.0 * PI));
        let q = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.0..1.0) };
        let s = FqhSettings::new(t1, t2, rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)).unwrap().with_q(q);
        let b = if rng.random_bool(0.5) { model.fqh().unwrap().quasihole } else { rng.random_range(0..model.size()) };
        let p = fqh_p_coefficients(model, b, &s, DEFAULT_SERIES_TOL).unwrap();
        return Case { rho, p, label: format!("{} fqh seed {seed}", model.name()) };
    }
    let rho = random_state(model, false, &mut rng);
    let mut s = random_mz_settings(&mut rng);
    let two = rng.random_bool(0.25);
    if two {
        s = s.with_placement(Placement::BelowRight);
    }
    let probe = random_probe(model, two, &mut rng);
    let p = p_coefficients(model, &probe, &s).unwrap();
    Case { rho, p, label: format!("{} mz seed {seed}", model.name()) }
}

/// First failing check of a state, if any.
pub fn state_problem(rho: &PairDensityMatrix) -> Option<String> {
    let r = rho.check_state();
    let first = r.failures().next().map(|c| format!("{}: {:?}", c.name, c.violations));
    first
}
