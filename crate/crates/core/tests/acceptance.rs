//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use anyonic::fqh_interferometer::{
    beta_grid, channel_evolution, conductance_curve, harmonics, p_first_order, p_offdiagonal_exact, suppression_settings, FqhSettings,
    fqh_p_coefficients, p_exact_diagonal, DEFAULT_SERIES_TOL,
};
use anyonic::mach_zehnder::{
    charge_classes, fixed_state, n_probe_posterior, p_coefficients, sample_run, single_probe_update, z_star, InterferometerSettings,
    Outcome, PCoefficients, ProbeEnsemble, CLASS_TOL,
};
use anyonic::model_library::{fib, fib_bar, hierarchy, ising, moore_read, phi, rr_bar_31, z_n, Level};
use anyonic::state_space::{Ket, PairDensityMatrix};
use anyonic::{AnyonError, AnyonModel, Charge};
use common::{c, random_case, random_state, state_problem};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome_ = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn diag_state(model: &Arc<AnyonModel>, charges: &[(Charge, f64)], superselect: bool) -> PairDensityMatrix {
    let vac = model.vacuum();
    let entries = charges.iter().map(|&(a, w)| {
        let k = Ket::new(a, model.dual(a), vac, 0);
        ((k, k), c(w, 0.0))
    });
    let sel = if superselect { PairDensityMatrix::electric_sectors(model) } else { None };
    PairDensityMatrix::new(Arc::clone(model), entries, sel).unwrap()
}

fn model_suites() -> Outcome_ {
    let models = vec![
        fib(),
        fib_bar(),
        ising(),
        z_n(8, Level::Half(1)).unwrap(),
        z_n(10, Level::Integer(3)).unwrap(),
        moore_read(),
        rr_bar_31(),
        hierarchy(1, 3).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for m in &models {
        let r = m.verify_model();
        let w = r.report.worst_residual();
        ensure(r.passed() && w < 1e-9, || format!("{} fails verification (worst residual {w:e})", m.name()))?;
        worst = worst.max(w);
    }
    let mr = moore_read();
    ensure(mr.size() == 12, || format!("MR has {} charges", mr.size()))?;
    ensure((mr.total_dimension() - 4.0).abs() < 1e-6, || format!("MR D = {}", mr.total_dimension()))?;
    let rr = rr_bar_31();
    let want = (10.0 * (phi() + 2.0)).sqrt();
    ensure((rr.total_dimension() - want).abs() < 1e-6, || format!("RR D = {} vs {want}", rr.total_dimension()))?;
    Ok(format!("{} models verified, worst residual {worst:.1e}; MR D = 4, RR D = {want:.6}", models.len()))
}

fn fib_readout() -> Outcome_ {
    let m = fib();
    let eps = m.charge("eps").unwrap();
    let p = p_coefficients(&m, &ProbeEnsemble::single(eps), &InterferometerSettings::symmetric(0.5, PI)).unwrap();
    let (p1, p2) = (p.diag(&m, 0), p.diag(&m, eps));
    let want = 1.0 - 1.0 / (2.0 * phi());
    ensure(p1.abs() < 1e-12, || format!("p1 = {p1:e}"))?;
    ensure((p2 - want).abs() < 1e-6, || format!("p2 = {p2} vs {want}"))?;
    Ok(format!("p1 = {p1:.1e}, p2 = {p2:.10}"))
}

/// `p^→` of a charge with monodromy `m` with the probe, straight from the two-path amplitude sum.
fn two_path_p(s: &InterferometerSettings, m: f64) -> f64 {
    let cross = s.t1 * s.r1.conj() * s.t2.conj() * s.r2.conj() * Complex64::from_polar(1.0, s.theta_i - s.theta_ii);
    s.t1.norm_sqr() * s.r2.norm_sqr() + s.r1.norm_sqr() * s.t2.norm_sqr() + 2.0 * m * cross.re
}

fn ising_readout() -> Outcome_ {
    let m = ising();
    let (one, sigma, psi) = (m.charge("1").unwrap(), m.charge("sigma").unwrap(), m.charge("psi").unwrap());
    let sym = InterferometerSettings::symmetric(0.5, PI);
    let p = p_coefficients(&m, &ProbeEnsemble::single(sigma), &sym).unwrap();
    let (p1, ppsi) = (p.diag(&m, one), p.diag(&m, psi));
    // A handful of ulp from sqrt(1/2)^2 and e^{iπ}; see the readout notes in the README.
    let ulp = 8.0 * f64::EPSILON;
    ensure(p1.abs() <= ulp && (ppsi - 1.0).abs() <= ulp, || format!("p(1) = {p1:e}, p(psi) = {ppsi:.17}"))?;

    let generic = InterferometerSettings::new(
        Complex64::from_polar(0.6, 0.3),
        Complex64::from_polar(0.8, -1.1),
        Complex64::from_polar(0.5, 2.0),
        Complex64::from_polar(0.75f64.sqrt(), 0.4),
        0.9,
        -0.2,
    )
    .unwrap();
    for s in [sym, generic] {
        let p = p_coefficients(&m, &ProbeEnsemble::single(psi), &s).unwrap();
        let part = charge_classes(&m, &p, CLASS_TOL);
        let sets: Vec<Vec<Charge>> = part.classes.iter().map(|k| k.charges.clone()).collect();
        let mut want = vec![vec![one, psi], vec![sigma]];
        want.sort();
        let mut got = sets.clone();
        for g in &mut got {
            g.sort();
        }
        got.sort();
        ensure(got == want, || format!("psi-probe classes {sets:?}"))?;
        for (charges, mono) in [(vec![one, psi], 1.0), (vec![sigma], -1.0)] {
            let formula = two_path_p(&s, mono);
            for a in charges {
                let v = p.diag(&m, a);
                ensure((v - formula).abs() < 1e-12, || format!("p({}) = {v} vs {formula}", m.label(a)))?;
            }
        }
    }
    Ok(format!("sigma probes: p(1) = {p1:.1e}, p(psi) = 1{:+.1e}; psi probes: {{1,psi}}, {{sigma}} match the two-path formulas", ppsi - 1.0))
}

fn rr_fringe_ratio() -> Outcome_ {
    let m = Arc::new(rr_bar_31());
    let b = m.fqh().unwrap().quasihole;
    let grid = beta_grid(64);
    let s = FqhSettings::weak(0.05, 0.0).unwrap();
    let amp = |label: &str| -> f64 {
        let rho = diag_state(&m, &[(m.charge(label).unwrap(), 1.0)], true);
        let g: Vec<f64> = conductance_curve(&rho, b, &s, &grid).unwrap().into_iter().map(|x| x.1).collect();
        harmonics(&g, 1)[1]
    };
    let ratio = amp("(eps,[0]_10)") / amp("(1,[0]_10)");
    let want = phi().powi(-2);
    ensure((ratio - want).abs() < 1e-6, || format!("ratio {ratio} vs {want}"))?;
    Ok(format!("amplitude ratio {ratio:.10}"))
}

fn mr_odd_suppression() -> Outcome_ {
    let m = Arc::new(moore_read());
    let b = m.fqh().unwrap().quasihole;
    let grid = beta_grid(64);
    let odd = m.charge("(sigma,[1]_8)").unwrap();
    let rho = diag_state(&m, &[(odd, 1.0)], true);
    let ts: Vec<f64> = (0..10).map(|j| 0.01 * 10f64.powf(j as f64 / 9.0)).collect();
    let mut worst_h1: f64 = 0.0;
    let mut pts = Vec::new();
    for &t in &ts {
        let s = FqhSettings::weak(t, 0.0).unwrap();
        let g: Vec<f64> = conductance_curve(&rho, b, &s, &grid).unwrap().into_iter().map(|x| x.1).collect();
        let h = harmonics(&g, 2);
        worst_h1 = worst_h1.max(h[1]);
        pts.push((t.ln(), h[2].ln()));
    }
    ensure(worst_h1 < 1e-12, || format!("harmonic 1 reaches {worst_h1:e}"))?;
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    ensure((slope - 4.0).abs() <= 0.05, || format!("harmonic-2 slope {slope}"))?;

    let mut worst_sup: f64 = 0.0;
    for k in [0, 2, 4, 6] {
        let a = m.charge(&format!("(1,[{k}]_8)")).unwrap();
        let psi = m.charge(&format!("(psi,[{k}]_8)")).unwrap();
        let sup = suppression_settings(&m, a, b).unwrap().ok_or("no suppression phase")?;
        for t in [0.01, 0.05, 0.1] {
            let got = p_exact_diagonal(&m, psi, b, &sup.settings(t).unwrap()).unwrap().1;
            worst_sup = worst_sup.max((got - 4.0 * t * t / (1.0 + t * t).powi(2)).abs());
        }
    }
    ensure(worst_sup < 1e-12, || format!("suppressed p deviates by {worst_sup:e}"))?;
    Ok(format!("harmonic 1 <= {worst_h1:.1e}, harmonic-2 slope {slope:.4}, suppression error {worst_sup:.1e}"))
}

fn z_table() -> Outcome_ {
    let table = [(0.3173, 1.0), (0.0455, 2.0), (0.01, 2.576), (0.001, 3.2905), (0.0001, 3.89059)];
    let mut worst: f64 = 0.0;
    for (alpha, want) in table {
        let z = z_star(alpha).unwrap();
        worst = worst.max((z - want).abs());
    }
    ensure(worst < 5e-4, || format!("worst deviation {worst}"))?;
    Ok(format!("5 entries, worst deviation {worst:.1e}"))
}

/// Sums `Pr(string) ρ_string` over every outcome string, grouped by the number of `→` outcomes.
fn enumerate(rho: &PairDensityMatrix, p: &PCoefficients, depth: u64, acc: &mut BTreeMap<u64, (f64, Option<PairDensityMatrix>)>) {
    fn walk(
        state: &PairDensityMatrix,
        weight: f64,
        left: u64,
        rights: u64,
        p: &PCoefficients,
        acc: &mut BTreeMap<u64, (f64, Option<PairDensityMatrix>)>,
    ) {
        if left == 0 {
            let slot = acc.entry(rights).or_insert((0.0, None));
            slot.0 += weight;
            let term = state.scaled(weight);
            slot.1 = Some(match slot.1.take() {
                None => term,
                Some(x) => x.plus(&term),
            });
            return;
        }
        for s in [Outcome::Right, Outcome::Up] {
            match single_probe_update(state, p, s) {
                Ok((pr, next)) => walk(&next, weight * pr, left - 1, rights + u64::from(s == Outcome::Right), p, acc),
                Err(AnyonError::ZeroProbability(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
    walk(rho, 1.0, depth, 0, p, acc);
}

fn brute_force_case(label: &str, rho: &PairDensityMatrix, p: &PCoefficients, n_total: u64) -> Result<f64, String> {
    let mut acc = BTreeMap::new();
    enumerate(rho, p, n_total, &mut acc);
    let mut worst: f64 = 0.0;
    for n in 0..=n_total {
        let (brute_pr, brute_sum) = acc.remove(&n).unwrap_or((0.0, None));
        match n_probe_posterior(rho, p, n_total, n) {
            Ok((pr, post)) => {
                worst = worst.max((pr - brute_pr).abs());
                let sum = brute_sum.ok_or_else(|| format!("{label}: n = {n} unreachable by enumeration, Pr = {pr:e}"))?;
                worst = worst.max(post.scaled(pr).distance(&sum));
                if pr > 1e-6 {
                    worst = worst.max(post.distance(&sum.scaled(1.0 / brute_pr)));
                }
            }
            Err(AnyonError::ZeroProbability(_)) => worst = worst.max(brute_pr),
            Err(e) => return Err(format!("{label}: {e}")),
        }
    }
    ensure(worst < 1e-10, || format!("{label}: deviation {worst:e}"))?;
    Ok(worst)
}

fn superposition(model: &Arc<AnyonModel>, charges: &[&str], superselect: bool) -> PairDensityMatrix {
    let vac = model.vacuum();
    let mut amps: Vec<(Ket, Complex64)> = charges
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let a = model.charge(l).unwrap();
            (Ket::new(a, model.dual(a), vac, 0), Complex64::from_polar(1.0 + 0.3 * j as f64, 0.7 * j as f64))
        })
        .collect();
    let norm = amps.iter().map(|x| x.1.norm_sqr()).sum::<f64>().sqrt();
    for x in &mut amps {
        x.1 /= norm;
    }
    let sel = if superselect { PairDensityMatrix::electric_sectors(model) } else { None };
    PairDensityMatrix::from_pure(Arc::clone(model), &amps, sel).unwrap()
}

fn brute_force_oracle() -> Outcome_ {
    let settings = InterferometerSettings::new(
        Complex64::from_polar(0.55, 0.2),
        Complex64::from_polar((1.0f64 - 0.3025).sqrt(), -0.5),
        Complex64::from_polar(0.7, 1.3),
        Complex64::from_polar(0.51f64.sqrt(), 0.1),
        1.2,
        0.3,
    )
    .unwrap();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let f = Arc::new(fib());
    let i = Arc::new(ising());
    let mr = Arc::new(moore_read());
    let mut setups: Vec<(String, PairDensityMatrix, PCoefficients)> = Vec::new();
    let eps = f.charge("eps").unwrap();
    let p_f = p_coefficients(&f, &ProbeEnsemble::single(eps), &settings).unwrap();
    setups.push(("fib 1+eps".into(), superposition(&f, &["1", "eps"], false), p_f.clone()));
    setups.push(("fib random".into(), random_state(&f, false, &mut rng), p_f));
    let p_i = p_coefficients(&i, &ProbeEnsemble::mixture(&[(1, 0.7), (2, 0.3)]).unwrap(), &settings).unwrap();
    setups.push(("ising 1+sigma+psi".into(), superposition(&i, &["1", "sigma", "psi"], false), p_i.clone()));
    setups.push(("ising random".into(), random_state(&i, false, &mut rng), p_i));
    let qh = mr.fqh().unwrap().quasihole;
    let p_mz = p_coefficients(&mr, &ProbeEnsemble::single(qh), &settings).unwrap();
    let target = superposition(&mr, &["(1,[0]_8)", "(psi,[0]_8)"], true);
    setups.push(("MR 1+psi (Mach-Zehnder)".into(), target.clone(), p_mz));
    let fs = FqhSettings::new(Complex64::from_polar(0.15, 0.4), Complex64::from_polar(0.12, -0.9), 0.6, 0.2).unwrap();
    let p_q = fqh_p_coefficients(&mr, qh, &fs, DEFAULT_SERIES_TOL).unwrap();
    setups.push(("MR 1+psi (point contacts)".into(), target, p_q.clone()));
    setups.push(("MR random".into(), random_state(&mr, true, &mut rng), p_q));

    for (label, rho, p) in &setups {
        for n_total in [1, 5, 12] {
            worst = worst.max(brute_force_case(&format!("{label}, N = {n_total}"), rho, p, n_total)?);
            cases += 1;
        }
    }
    Ok(format!("{cases} enumerations up to N = 12 (2^12 strings), worst deviation {worst:.1e}"))
}

fn update_case(models: &[Arc<AnyonModel>], idx: usize, seed: u64) -> Result<(), TestCaseError> {
    let case = random_case(models, idx, seed);
    let fail = |m: String| TestCaseError::fail(format!("{}: {m}", case.label));
    if let Some(e) = state_problem(&case.rho) {
        return Err(fail(format!("generated state invalid: {e}")));
    }
    let model = case.rho.model();
    let vac = model.vacuum();
    for (&(a, a2, e), v) in case.p.entries() {
        if v[0].norm() + v[1].norm() > 1.0 + 1e-9 {
            return Err(fail(format!("|p^->| + |p^up| = {} at ({a},{a2},{e})", v[0].norm() + v[1].norm())));
        }
        if a == a2 && e == vac && (v[0] + v[1] - c(1.0, 0.0)).norm() > 1e-9 {
            return Err(fail(format!("diagonal sum rule broken at {a}: {:?}", v)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for s in [Outcome::Right, Outcome::Up] {
        match single_probe_update(&case.rho, &case.p, s) {
            Ok((pr, post)) if pr > 1e-6 => {
                if let Some(e) = state_problem(&post) {
                    return Err(fail(format!("after {s:?}: {e}")));
                }
            }
            Ok(_) | Err(AnyonError::ZeroProbability(_)) => {}
            Err(e) => return Err(fail(e.to_string())),
        }
    }
    let n_total = rng.random_range(1..=25u64);
    let n = rng.random_range(0..=n_total);
    match n_probe_posterior(&case.rho, &case.p, n_total, n) {
        Ok((pr, post)) if pr > 1e-9 => {
            if let Some(e) = state_problem(&post) {
                return Err(fail(format!("after N = {n_total}, n = {n}: {e}")));
            }
        }
        Ok(_) | Err(AnyonError::ZeroProbability(_)) => {}
        Err(e) => return Err(fail(e.to_string())),
    }
    Ok(())
}

fn update_contract() -> Outcome_ {
    let models = common::model_pool();
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, rng_seed: RngSeed::Fixed(0x616e_796f), ..Config::default() });
    let k = models.len();
    runner
        .run(&(0..k, any::<u64>()), |(idx, seed)| update_case(&models, idx, seed))
        .map_err(|e| e.to_string())?;
    Ok("10000 randomized cases: Hermitian, unit trace, PSD blocks, sum rules".into())
}

fn collapse_statistics() -> Outcome_ {
    let m = Arc::new(fib());
    let eps = m.charge("eps").unwrap();
    let rho = superposition(&m, &["1", "eps"], false);
    let weights = rho.trace_out_partner();
    let p = p_coefficients(&m, &ProbeEnsemble::single(eps), &InterferometerSettings::symmetric(0.5, PI / 3.0)).unwrap();
    let part = charge_classes(&m, &p, CLASS_TOL);
    ensure(part.classes.len() == 2, || format!("{} classes", part.classes.len()))?;
    let fixed: Vec<PairDensityMatrix> = (0..2).map(|k| fixed_state(&rho, &p, &part, k).unwrap().1).collect();
    let mut counts = [0usize; 2];
    let mut worst_dist: f64 = 0.0;
    let mut worst_mono: f64 = 0.0;
    for seed in 0..100u64 {
        let run = sample_run(&rho, std::slice::from_ref(&p), 5000, seed, false).map_err(|e| e.to_string())?;
        let state = run.state();
        let probs = part.class_probabilities(state);
        let k = if probs[0] > probs[1] { 0 } else { 1 };
        counts[k] += 1;
        worst_dist = worst_dist.max(state.distance(&fixed[k]));
        // Components with M_eB != 1 must be gone: filtering them out leaves the state unchanged.
        let kept = state
            .apply_e_map(|_, _, e| if (p.m_b(e) - c(1.0, 0.0)).norm() < 1e-7 { c(1.0, 0.0) } else { c(0.0, 0.0) })
            .map_err(|e| e.to_string())?;
        worst_mono = worst_mono.max(kept.distance(state));
    }
    let expect: Vec<f64> = part.classes.iter().map(|k| k.charges.iter().map(|a| weights[a]).sum()).collect();
    for k in 0..2 {
        let sigma = (100.0 * expect[k] * (1.0 - expect[k])).sqrt();
        let dev = (counts[k] as f64 - 100.0 * expect[k]).abs();
        ensure(dev <= 3.0 * sigma, || format!("class {k}: {} of 100 runs, expected {:.1}", counts[k], 100.0 * expect[k]))?;
    }
    ensure(worst_dist < 1e-6, || format!("distance to fixed state {worst_dist:e}"))?;
    ensure(worst_mono < 1e-9, || format!("a component with M_eB != 1 survives ({worst_mono:e})"))?;
    Ok(format!(
        "class counts {:?} (expected {:.0}/{:.0}), max distance {worst_dist:.1e}, M_eB != 1 residue {worst_mono:.1e}",
        counts,
        100.0 * expect[0],
        100.0 * expect[1]
    ))
}

fn fqh_order_consistency() -> Outcome_ {
    let models = [moore_read(), rr_bar_31(), hierarchy(1, 3).unwrap(), hierarchy(2, 5).unwrap()];
    let mut worst_ratio: f64 = 0.0;
    let mut worst_unit: f64 = 0.0;
    let mut checked = 0usize;
    for m in &models {
        let q = m.fqh().unwrap();
        let b = q.quasihole;
        for (t1, t2) in [(0.01, 0.01), (0.05, 0.03), (0.1, 0.1), (0.07, 0.1)] {
            for j in 0..8 {
                let beta = 2.0 * PI * j as f64 / 8.0;
                let s = FqhSettings::new(c(t1, 0.0), Complex64::from_polar(t2, 0.4), beta, 0.0).unwrap();
                let t: f64 = f64::max(t1, t2);
                for a in 0..m.size() {
                    for ch in channel_evolution(m, a, b, &s).map_err(|e| e.to_string())? {
                        worst_unit = worst_unit.max(ch.unitarity_residual());
                    }
                    for a2 in 0..m.size() {
                        if q.sector(a) != q.sector(a2) {
                            continue;
                        }
                        for e in 0..m.size() {
                            if m.n(a2, e, a) == 0 {
                                continue;
                            }
                            let exact = p_offdiagonal_exact(m, a, a2, e, b, &s, DEFAULT_SERIES_TOL).map_err(|e| e.to_string())?;
                            let (fr, fl) = p_first_order(m, a, a2, e, b, &s);
                            let dev = (exact[0] - fr).norm().max((exact[1] - fl).norm());
                            worst_ratio = worst_ratio.max(dev / t.powi(4));
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    ensure(worst_ratio <= 10.0, || format!("|p_exact - p_first| reaches {worst_ratio:.3} t^4"))?;
    ensure(worst_unit < 1e-9, || format!("unitarity residual {worst_unit:e}"))?;
    Ok(format!("{checked} coefficients, worst |p_exact - p_first| = {worst_ratio:.3} t^4, unitarity residual {worst_unit:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome_); 10] = [
        ("model suites", model_suites),
        ("Fibonacci readout", fib_readout),
        ("Ising readout", ising_readout),
        ("RR fringe ratio", rr_fringe_ratio),
        ("MR odd-n suppression", mr_odd_suppression),
        ("z* table", z_table),
        ("brute-force oracle", brute_force_oracle),
        ("update contract", update_contract),
        ("collapse statistics", collapse_statistics),
        ("FQH order consistency", fqh_order_consistency),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
