//! Mach-Zehnder interferometric measurement of a target anyon's charge.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;
use statrs::function::gamma::ln_gamma;

use crate::anyon_model::AnyonModel;
use crate::charge_algebra::Charge;
use crate::error::{AnyonError, Result};
use crate::state_space::PairDensityMatrix;

/// Default tolerance on p-values for class grouping and rogue detection.
pub const CLASS_TOL: f64 = 1e-7;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Where the target's entangled partner `C` sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    BelowRight,
    Above,
    BetweenOutputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Right,
    Up,
}

impl Outcome {
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Right => 0,
            Outcome::Up => 1,
        }
    }

    pub fn index(self) -> usize {
        self.bit() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerSettings {
    pub t1: Complex64,
    pub r1: Complex64,
    pub t2: Complex64,
    pub r2: Complex64,
    pub theta_i: f64,
    pub theta_ii: f64,
    pub q: f64,
    pub placement: Placement,
}

impl InterferometerSettings {
    pub fn new(t1: Complex64, r1: Complex64, t2: Complex64, r2: Complex64, theta_i: f64, theta_ii: f64) -> Result<Self> {
        let s = InterferometerSettings { t1, r1, t2, r2, theta_i, theta_ii, q: 1.0, placement: Placement::BelowRight };
        s.validate()?;
        Ok(s)
    }

    /// Real amplitudes `|t_j|² = t_sq`, `θ_I = θ`, `θ_II = 0`.
    pub fn symmetric(t_sq: f64, theta: f64) -> Self {
        let t = Complex64::new(t_sq.sqrt(), 0.0);
        let r = Complex64::new((1.0 - t_sq).sqrt(), 0.0);
        InterferometerSettings { t1: t, r1: r, t2: t, r2: r, theta_i: theta, theta_ii: 0.0, q: 1.0, placement: Placement::BelowRight }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (j, t, r) in [(1, self.t1, self.r1), (2, self.t2, self.r2)] {
            let s = t.norm_sqr() + r.norm_sqr();
            if (s - 1.0).abs() > 1e-12 {
                return Err(AnyonError::InvalidParameter(format!("|t{j}|^2 + |r{j}|^2 = {s}, expected 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(AnyonError::InvalidParameter(format!("Q = {} outside [0, 1]", self.q)));
        }
        Ok(())
    }

    /// `T e^{iθ} = t1 r1* t2* r2* e^{i(θI − θII)}`.
    pub fn visibility(&self) -> Complex64 {
        self.t1 * self.r1.conj() * self.t2.conj() * self.r2.conj() * Complex64::from_polar(1.0, self.theta_i - self.theta_ii)
    }
}

/// Per-charge probe weights with a 2×2 direction matrix over `{→, ↑}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEnsemble {
    weights: Vec<(Charge, Matrix2<Complex64>)>,
}

impl ProbeEnsemble {
    pub fn single(b: Charge) -> Self {
        Self::mixture(&[(b, 1.0)]).expect("unit weight")
    }

    /// Probes entering along `→` with charge distribution `Pr_B`.
    pub fn mixture(pr: &[(Charge, f64)]) -> Result<Self> {
        let w = pr
            .iter()
            .map(|&(b, p)| (b, Matrix2::new(Complex64::new(p, 0.0), ZERO, ZERO, ZERO)))
            .collect();
        Self::with_directions(w)
    }

    pub fn with_directions(weights: Vec<(Charge, Matrix2<Complex64>)>) -> Result<Self> {
        let total: f64 = weights.iter().map(|(_, w)| w.trace().re).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AnyonError::InvalidParameter(format!("probe weights sum to {total}")));
        }
        for (b, w) in &weights {
            if (w - w.adjoint()).norm() > 1e-9 {
                return Err(AnyonError::InvalidParameter(format!("direction matrix of probe #{b} is not Hermitian")));
            }
            let ev = w.symmetric_eigenvalues();
            if ev.min() < -1e-9 {
                return Err(AnyonError::InvalidParameter(format!("direction matrix of probe #{b} is not PSD")));
            }
        }
        Ok(ProbeEnsemble { weights })
    }

    pub fn weights(&self) -> &[(Charge, Matrix2<Complex64>)] {
        &self.weights
    }

    pub fn is_single_direction(&self) -> bool {
        self.weights.iter().all(|(_, w)| w[(0, 1)].norm() + w[(1, 0)].norm() + w[(1, 1)].norm() < 1e-15)
    }

    /// `M_xB = Σ_b tr(w_b) M_xb`.
    pub fn m_xb(&self, model: &AnyonModel, x: Charge) -> Complex64 {
        self.weights.iter().map(|(b, w)| model.m(x, *b) * w.trace().re).sum()
    }
}

/// `p^s_{aa'e,B}` for every admissible `(a, a', e)`, with `M_xB` alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct PCoefficients {
    entries: BTreeMap<(Charge, Charge, Charge), [Complex64; 2]>,
    m_b: Vec<Complex64>,
}

impl PCoefficients {
    /// Assembles coefficients computed elsewhere, e.g. by the quantum Hall device.
    pub fn from_parts<I>(entries: I, m_b: Vec<Complex64>) -> Self
    where
        I: IntoIterator<Item = ((Charge, Charge, Charge), [Complex64; 2])>,
    {
        PCoefficients { entries: entries.into_iter().collect(), m_b }
    }

    /// `[p^→, p^↑]`, zero where the triple is inadmissible.
    pub fn get(&self, a: Charge, a2: Charge, e: Charge) -> [Complex64; 2] {
        self.entries.get(&(a, a2, e)).copied().unwrap_or([ZERO, ZERO])
    }

    pub fn outcome(&self, a: Charge, a2: Charge, e: Charge, s: Outcome) -> Complex64 {
        self.get(a, a2, e)[s.index()]
    }

    /// `p^→_{aa1,B}` (real).
    pub fn diag(&self, model: &AnyonModel, a: Charge) -> f64 {
        self.get(a, a, model.vacuum())[0].re
    }

    pub fn m_b(&self, x: Charge) -> Complex64 {
        self.m_b[x]
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(Charge, Charge, Charge), &[Complex64; 2])> {
        self.entries.iter()
    }
}

/// Contracted monodromy data for one direction pair `(r, r')`.
struct Contracted {
    w: Complex64,
    ma: Complex64,
    ma2: Complex64,
    ma_conj: Complex64,
    ma2_conj: Complex64,
    me: Complex64,
    me_conj: Complex64,
}

fn contract(model: &AnyonModel, probe: &ProbeEnsemble, r: usize, r2: usize, a: Charge, a2: Charge, e: Charge) -> Contracted {
    let mut c = Contracted { w: ZERO, ma: ZERO, ma2: ZERO, ma_conj: ZERO, ma2_conj: ZERO, me: ZERO, me_conj: ZERO };
    for (b, wm) in probe.weights() {
        let w = wm[(r, r2)];
        c.w += w;
        c.ma += w * model.m(a, *b);
        c.ma2 += w * model.m(a2, *b);
        c.ma_conj += w * model.m(a, *b).conj();
        c.ma2_conj += w * model.m(a2, *b).conj();
        c.me += w * model.m(e, *b);
        c.me_conj += w * model.m(e, *b).conj();
    }
    c
}

fn p_pair(s: &InterferometerSettings, dirs: (usize, usize), c: &Contracted) -> [Complex64; 2] {
    let (t1, r1, t2, r2) = (s.t1, s.r1, s.t2, s.r2);
    let ph = Complex64::from_polar(s.q, s.theta_i - s.theta_ii);
    let phc = Complex64::from_polar(s.q, -(s.theta_i - s.theta_ii));
    let (at1, ar1, at2, ar2) = (t1.norm_sqr(), r1.norm_sqr(), t2.norm_sqr(), r2.norm_sqr());
    let x = t1 * r1.conj() * t2.conj() * r2.conj() * ph;
    let y = t1.conj() * r1 * t2 * r2 * phc;
    match (s.placement, dirs) {
        (Placement::BelowRight, (0, 0)) => [
            c.me * (at1 * ar2) + x * c.ma + y * c.ma2_conj + c.w * (ar1 * at2),
            c.me * (at1 * at2) - x * c.ma - y * c.ma2_conj + c.w * (ar1 * ar2),
        ],
        (Placement::BelowRight, (0, 1)) => [
            t1 * r1 * ar2 * c.me - t1 * t1 * t2.conj() * r2.conj() * ph * c.ma + r1 * r1 * t2 * r2 * phc * c.ma2_conj
                - t1 * r1 * at2 * c.w,
            t1 * r1 * at2 * c.me + t1 * t1 * t2.conj() * r2.conj() * ph * c.ma - r1 * r1 * t2 * r2 * phc * c.ma2_conj
                - t1 * r1 * ar2 * c.w,
        ],
        (Placement::BelowRight, (1, 0)) => {
            let (t1c, r1c) = (t1.conj(), r1.conj());
            [
                t1c * r1c * ar2 * c.me + r1c * r1c * t2.conj() * r2.conj() * ph * c.ma - t1c * t1c * t2 * r2 * phc * c.ma2_conj
                    - t1c * r1c * at2 * c.w,
                t1c * r1c * at2 * c.me - r1c * r1c * t2.conj() * r2.conj() * ph * c.ma + t1c * t1c * t2 * r2 * phc * c.ma2_conj
                    - t1c * r1c * ar2 * c.w,
            ]
        }
        (Placement::BelowRight, _) => [
            c.me * (ar1 * ar2) - x * c.ma - y * c.ma2_conj + c.w * (at1 * at2),
            c.me * (ar1 * at2) + x * c.ma + y * c.ma2_conj + c.w * (at1 * ar2),
        ],
        (Placement::Above, _) => [
            c.w * (at1 * ar2) + x * c.ma2 + y * c.ma_conj + c.me_conj * (ar1 * at2),
            c.w * (at1 * at2) - x * c.ma2 - y * c.ma_conj + c.me_conj * (ar1 * ar2),
        ],
        (Placement::BetweenOutputs, _) => [
            c.w * (at1 * ar2) + x * c.ma2 + y * c.ma_conj + c.me_conj * (ar1 * at2),
            c.me * (at1 * at2) - x * c.ma - y * c.ma2_conj + c.w * (ar1 * ar2),
        ],
    }
}

/// All `p^s_{aa'e,B}` with `N_{a'e}^a > 0`.
pub fn p_coefficients(model: &AnyonModel, probe: &ProbeEnsemble, settings: &InterferometerSettings) -> Result<PCoefficients> {
    settings.validate()?;
    let single = probe.is_single_direction();
    if !single && settings.placement != Placement::BelowRight {
        return Err(AnyonError::InvalidParameter(
            "two-direction probes are only defined for the default partner placement".into(),
        ));
    }
    for (b, _) in probe.weights() {
        if *b >= model.size() {
            return Err(AnyonError::UnknownCharge(format!("#{b}")));
        }
    }
    let n = model.size();
    let pairs: &[(usize, usize)] = if single { &[(0, 0)] } else { &[(0, 0), (0, 1), (1, 0), (1, 1)] };
    let mut entries = BTreeMap::new();
    for a in 0..n {
        for a2 in 0..n {
            for e in 0..n {
                if model.n(a2, e, a) == 0 {
                    continue;
                }
                let mut acc = [ZERO, ZERO];
                for &d in pairs {
                    let c = contract(model, probe, d.0, d.1, a, a2, e);
                    let p = p_pair(settings, d, &c);
                    acc[0] += p[0];
                    acc[1] += p[1];
                }
                entries.insert((a, a2, e), acc);
            }
        }
    }
    let m_b = (0..n).map(|x| probe.m_xb(model, x)).collect();
    Ok(PCoefficients { entries, m_b })
}

/// `Pr(s)` and the posterior after one probe.
pub fn single_probe_update(rho: &PairDensityMatrix, p: &PCoefficients, s: Outcome) -> Result<(f64, PairDensityMatrix)> {
    let pr = outcome_probability(rho, p, s);
    if pr < 1e-15 {
        return Err(AnyonError::ZeroProbability(pr));
    }
    let out = rho.apply_e_map(|a, a2, e| p.outcome(a, a2, e, s) / pr)?;
    Ok((pr, out))
}

pub fn outcome_probability(rho: &PairDensityMatrix, p: &PCoefficients, s: Outcome) -> f64 {
    let vac = rho.model().vacuum();
    rho.entries()
        .filter(|((x, y), _)| x == y)
        .map(|((x, _), v)| v.re * p.outcome(x.a, x.a, vac, s).re)
        .sum()
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln W_N(n; p, q)` as a complex log, `None` when `W` vanishes exactly.
fn ln_w(n_total: u64, n: u64, p: Complex64, q: Complex64) -> Option<Complex64> {
    let mut acc = Complex64::new(ln_binomial(n_total, n), 0.0);
    for (base, exp) in [(p, n), (q, n_total - n)] {
        if exp == 0 {
            continue;
        }
        if base.norm() == 0.0 {
            return None;
        }
        acc += base.ln() * exp as f64;
    }
    Some(acc)
}

fn ln_pr_n(rho: &PairDensityMatrix, p: &PCoefficients, n_total: u64, n: u64) -> Option<f64> {
    let vac = rho.model().vacuum();
    let terms: Vec<f64> = rho
        .entries()
        .filter(|((x, y), v)| x == y && v.re > 0.0)
        .filter_map(|((x, _), v)| {
            let [pr, pu] = p.get(x.a, x.a, vac);
            ln_w(n_total, n, Complex64::new(pr.re, 0.0), Complex64::new(pu.re, 0.0)).map(|l| l.re + v.re.ln())
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    Some(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
}

/// `Pr_N(n)` and the posterior after `N` identical probes with `n` outcomes `→`.
pub fn n_probe_posterior(rho: &PairDensityMatrix, p: &PCoefficients, n_total: u64, n: u64) -> Result<(f64, PairDensityMatrix)> {
    if n > n_total {
        return Err(AnyonError::InvalidParameter(format!("n = {n} exceeds N = {n_total}")));
    }
    let ln_pr = ln_pr_n(rho, p, n_total, n).ok_or(AnyonError::ZeroProbability(0.0))?;
    let pr = ln_pr.exp();
    let out = rho.apply_e_map(|a, a2, e| {
        let [pr_, pu] = p.get(a, a2, e);
        match ln_w(n_total, n, pr_, pu) {
            Some(l) => (l - ln_pr).exp(),
            None => ZERO,
        }
    })?;
    Ok((pr, out))
}

/// Finite-`N` factor `Δ_N = W_N(n; p^→, p^↑) / Pr_N(n)` of one component.
pub fn delta_n(rho: &PairDensityMatrix, p: &PCoefficients, n_total: u64, n: u64, a: Charge, a2: Charge, e: Charge) -> Result<Complex64> {
    let ln_pr = ln_pr_n(rho, p, n_total, n).ok_or(AnyonError::ZeroProbability(0.0))?;
    let [pr, pu] = p.get(a, a2, e);
    Ok(ln_w(n_total, n, pr, pu).map_or(ZERO, |l| (l - ln_pr).exp()))
}

/// The outcome-averaged state after `N` probes.
pub fn averaged_state(rho: &PairDensityMatrix, p: &PCoefficients, n_total: u64) -> Result<PairDensityMatrix> {
    let exp = u32::try_from(n_total).map_err(|_| AnyonError::InvalidParameter("N too large".into()))?;
    rho.apply_e_map(|a, a2, e| {
        let [pr, pu] = p.get(a, a2, e);
        (pr + pu).powu(exp)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeClass {
    pub charges: Vec<Charge>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeClassPartition {
    pub classes: Vec<ChargeClass>,
    pub tol: f64,
}

impl ChargeClassPartition {
    pub fn class_of(&self, a: Charge) -> Option<usize> {
        self.classes.iter().position(|k| k.charges.contains(&a))
    }

    /// `Pr_A(κ)` for every class.
    pub fn class_probabilities(&self, rho: &PairDensityMatrix) -> Vec<f64> {
        let marg = rho.trace_out_partner();
        self.classes.iter().map(|k| k.charges.iter().map(|a| marg.get(a).copied().unwrap_or(0.0)).sum()).collect()
    }
}

/// Groups charges by `p^→_{aa1,B}`: sorted values joined while consecutive gaps stay within `tol`.
pub fn charge_classes(model: &AnyonModel, p: &PCoefficients, tol: f64) -> ChargeClassPartition {
    let mut vals: Vec<(f64, Charge)> = (0..model.size()).map(|a| (p.diag(model, a), a)).collect();
    vals.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut classes: Vec<(Vec<(f64, Charge)>, f64)> = Vec::new();
    for (v, a) in vals {
        match classes.last_mut() {
            Some((members, last)) if v - *last <= tol => {
                members.push((v, a));
                *last = v;
            }
            _ => classes.push((vec![(v, a)], v)),
        }
    }
    let mut classes: Vec<ChargeClass> = classes
        .into_iter()
        .map(|(m, _)| {
            let p = m.iter().map(|x| x.0).sum::<f64>() / m.len() as f64;
            let mut charges: Vec<Charge> = m.into_iter().map(|x| x.1).collect();
            charges.sort_unstable();
            ChargeClass { charges, p }
        })
        .collect();
    classes.sort_by_key(|k| k.charges[0]);
    ChargeClassPartition { classes, tol }
}

/// `Pr_A(κ)` and the fixed state of class `κ`.
pub fn fixed_state(
    rho: &PairDensityMatrix,
    p: &PCoefficients,
    partition: &ChargeClassPartition,
    kappa: usize,
) -> Result<(f64, PairDensityMatrix)> {
    let class = partition
        .classes
        .get(kappa)
        .ok_or_else(|| AnyonError::InvalidParameter(format!("no class {kappa}")))?;
    let pr = partition.class_probabilities(rho)[kappa];
    if pr < 1e-15 {
        return Err(AnyonError::ZeroProbability(pr));
    }
    let members: BTreeSet<Charge> = class.charges.iter().copied().collect();
    let tol = partition.tol;
    let out = rho.apply_e_map(|a, a2, e| {
        if members.contains(&a) && members.contains(&a2) && (p.m_b(e) - ONE).norm() < tol {
            Complex64::new(1.0 / pr, 0.0)
        } else {
            ZERO
        }
    })?;
    Ok((pr, out.pruned(1e-300)))
}

#[derive(Debug, Clone)]
pub struct LimitDescription {
    /// Maximizers of `p_κ^r (1 − p_κ)^{1−r}` among supported classes.
    pub congruous: Vec<usize>,
    /// Limiting diagonal factor shared by the congruous classes.
    pub delta: f64,
    /// Components whose magnitude survives but whose phase keeps rotating.
    pub oscillating: Vec<(Charge, Charge, Charge)>,
    pub state: PairDensityMatrix,
}

fn log_score(p: f64, q: f64, r: f64) -> f64 {
    let term = |x: f64, w: f64| if w == 0.0 { 0.0 } else if x == 0.0 { f64::NEG_INFINITY } else { w * x.ln() };
    term(p, r) + term(q, 1.0 - r)
}

/// Large-`N` limit of the posterior for an observed outcome fraction `r`.
pub fn classify_limit(
    rho: &PairDensityMatrix,
    p: &PCoefficients,
    partition: &ChargeClassPartition,
    r: f64,
) -> Result<LimitDescription> {
    if !(0.0..=1.0).contains(&r) {
        return Err(AnyonError::InvalidParameter(format!("r = {r} outside [0, 1]")));
    }
    let prs = partition.class_probabilities(rho);
    let scores: Vec<f64> = partition.classes.iter().map(|k| log_score(k.p, 1.0 - k.p, r)).collect();
    let best = scores
        .iter()
        .zip(&prs)
        .filter(|(_, pr)| **pr > 1e-15)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(AnyonError::ZeroProbability(0.0));
    }
    let tie = 1e-9 * best.abs().max(1.0);
    let congruous: Vec<usize> =
        (0..scores.len()).filter(|&k| prs[k] > 1e-15 && (scores[k] - best).abs() <= tie).collect();
    let total: f64 = congruous.iter().map(|&k| prs[k]).sum();
    let delta = 1.0 / total;
    let members: BTreeSet<Charge> = congruous.iter().flat_map(|&k| partition.classes[k].charges.iter().copied()).collect();
    let mut oscillating = Vec::new();
    let state = rho.apply_e_map(|a, a2, e| {
        if !(members.contains(&a) && members.contains(&a2)) {
            return ZERO;
        }
        let [pr, pu] = p.get(a, a2, e);
        let s = log_score(pr.norm(), pu.norm(), r);
        if (s - best).abs() > tie {
            return ZERO;
        }
        let rotating = (r > 0.0 && pr.arg().abs() > partition.tol) || (r < 1.0 && pu.arg().abs() > partition.tol);
        if rotating {
            oscillating.push((a, a2, e));
            return ZERO;
        }
        Complex64::new(delta, 0.0)
    })?;
    oscillating.sort_unstable();
    oscillating.dedup();
    Ok(LimitDescription { congruous, delta, oscillating, state: state.pruned(1e-300) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiFixed {
    pub a: Charge,
    pub a2: Charge,
    pub e: Charge,
    pub p_kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m_eb: (f64, f64),
    /// Residuals of the three tuning conditions for quasi-fixed elements.
    pub conditions: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RogueReport {
    /// Which no-interference case applies, if any.
    pub trivial_case: Option<String>,
    pub quasi_fixed: Vec<QuasiFixed>,
    /// `(a, a', θ)` phases at which `a` and `a'` become indistinguishable.
    pub tuning_phases: Vec<(Charge, Charge, [f64; 2])>,
    pub interferometer_phase: f64,
}

impl RogueReport {
    /// Quasi-fixed elements with `|M_eB| ≠ 1`.
    pub fn non_unit_modulus(&self) -> impl Iterator<Item = &QuasiFixed> {
        self.quasi_fixed.iter().filter(|q| ((q.m_eb.0.powi(2) + q.m_eb.1.powi(2)).sqrt() - 1.0).abs() > CLASS_TOL)
    }
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Searches for elements that keep their magnitude but not their phase under probing.
pub fn detect_rogue(model: &AnyonModel, probe: &ProbeEnsemble, settings: &InterferometerSettings, tol: f64) -> Result<RogueReport> {
    let p = p_coefficients(model, probe, settings)?;
    let s = settings;
    let small = |z: Complex64| z.norm() < 1e-15;
    let trivial_case = if small(s.t1) {
        Some("t1 = 0".to_string())
    } else if small(s.r1) {
        Some("r1 = 0".to_string())
    } else if small(s.t2) {
        Some("t2 = 0".to_string())
    } else if small(s.r2) {
        Some("r2 = 0".to_string())
    } else {
        None
    };
    let theta = s.visibility().arg();
    let n = model.size();
    let mut tuning_phases = Vec::new();
    for a in 0..n {
        for a2 in a + 1..n {
            let d = p.m_b(a) - p.m_b(a2);
            if d.norm() > tol {
                let base = -d.arg();
                tuning_phases.push((a, a2, [wrap(base + PI / 2.0), wrap(base - PI / 2.0)]));
            }
        }
    }
    let (at1, ar1, at2, ar2) = (s.t1.norm(), s.r1.norm(), s.t2.norm(), s.r2.norm());
    let mut quasi_fixed = Vec::new();
    for (&(a, a2, e), &[pr, pu]) in p.entries() {
        let me = p.m_b(e);
        if (me - ONE).norm() <= tol {
            continue;
        }
        if (pr.norm() + pu.norm() - 1.0).abs() >= tol {
            continue;
        }
        let (ma, ma2) = (p.m_b(a), p.m_b(a2));
        let eth = Complex64::from_polar(1.0, theta);
        let im_sum = (eth * ma + eth.conj() * ma2.conj()).im;
        let c1 = if (ma - ma2).norm() > tol {
            let base = -(ma - ma2).arg();
            wrap(theta - base - PI / 2.0).abs().min(wrap(theta - base + PI / 2.0).abs())
        } else {
            f64::NAN
        };
        let (c2, c3) = if trivial_case.is_none() {
            let c2 = im_sum * im_sum - (at1 * at1 / (ar1 * ar1)) * (1.0 - me.norm_sqr()) - 2.0 * (1.0 - me.re);
            let c3 = (eth * ma).re * (1.0 - me.re)
                - ((at1 / (4.0 * ar1)) * (at2 / ar2 - ar2 / at2) * (1.0 - me.norm_sqr()) + 0.5 * me.im * im_sum);
            (c2, c3)
        } else {
            (f64::NAN, f64::NAN)
        };
        quasi_fixed.push(QuasiFixed {
            a,
            a2,
            e,
            p_kappa: pr.norm(),
            alpha: pr.arg(),
            beta: pu.arg(),
            m_eb: (me.re, me.im),
            conditions: [c1, c2, c3],
        });
    }
    Ok(RogueReport { trivial_case, quasi_fixed, tuning_phases, interferometer_phase: theta })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRun {
    pub outcomes: Vec<u8>,
    pub r_trace: Vec<f64>,
    pub final_state: Vec<crate::state_space::DensityEntry>,
    #[serde(skip)]
    pub state: Option<PairDensityMatrix>,
}

impl SampleRun {
    pub fn bit_string(&self) -> String {
        self.outcomes.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
    }

    pub fn state(&self) -> &PairDensityMatrix {
        self.state.as_ref().expect("live run")
    }
}

/// Draws `steps` outcomes, cycling through `probes`. With `reset`, each probe meets the initial state.
pub fn sample_run(rho: &PairDensityMatrix, probes: &[PCoefficients], steps: usize, seed: u64, reset: bool) -> Result<SampleRun> {
    if probes.is_empty() {
        return Err(AnyonError::InvalidParameter("empty probe list".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = rho.clone();
    let mut outcomes = Vec::with_capacity(steps);
    let mut r_trace = Vec::with_capacity(steps);
    let mut rights = 0usize;
    for k in 0..steps {
        let p = &probes[k % probes.len()];
        let current = if reset { rho } else { &state };
        let pr_right = outcome_probability(current, p, Outcome::Right);
        let u: f64 = rng.random();
        let s = if u < pr_right { Outcome::Right } else { Outcome::Up };
        if !reset {
            state = single_probe_update(&state, p, s)?.1;
        }
        if s == Outcome::Right {
            rights += 1;
        }
        outcomes.push(s.bit());
        r_trace.push(rights as f64 / (k + 1) as f64);
    }
    Ok(SampleRun { outcomes, r_trace, final_state: state.to_entries(), state: Some(state) })
}

/// `z*_{α/2}` with `1 − α = erf(z*/√2)`.
pub fn z_star(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnyonError::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")));
    }
    Ok(std::f64::consts::SQRT_2 * erf_inv(1.0 - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeEstimate {
    Indistinguishable,
    Needed { estimate: f64, probes: u64 },
}

impl ProbeEstimate {
    fn from_estimate(x: f64) -> Self {
        if x.is_finite() {
            ProbeEstimate::Needed { estimate: x, probes: x.ceil() as u64 }
        } else {
            ProbeEstimate::Indistinguishable
        }
    }
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnyonError::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Probes needed to separate `p1` from `p2` at confidence `1 − α`.
pub fn probes_needed(p1: f64, p2: f64, alpha: f64) -> Result<ProbeEstimate> {
    check_prob(p1)?;
    check_prob(p2)?;
    let z = z_star(alpha)?;
    let dp = (p1 - p2).abs();
    if dp < 1e-15 {
        return Ok(ProbeEstimate::Indistinguishable);
    }
    let spread = (p1 * (1.0 - p1)).sqrt() + (p2 * (1.0 - p2)).sqrt();
    Ok(ProbeEstimate::from_estimate((z * spread / dp).powi(2)))
}

pub fn probes_needed_conservative(dp: f64, alpha: f64) -> Result<ProbeEstimate> {
    let z = z_star(alpha)?;
    if dp.abs() < 1e-15 {
        return Ok(ProbeEstimate::Indistinguishable);
    }
    Ok(ProbeEstimate::from_estimate((z / dp.abs()).powi(2)))
}

/// Small-tunneling estimate `(z*/(t ΔM))²`.
pub fn probes_needed_small_t(t: f64, dm: f64, alpha: f64) -> Result<ProbeEstimate> {
    let z = z_star(alpha)?;
    if (t * dm).abs() < 1e-15 {
        return Ok(ProbeEstimate::Indistinguishable);
    }
    Ok(ProbeEstimate::from_estimate((z / (t * dm)).powi(2)))
}

/// Elementary charge in coulombs.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Measurement time in seconds for a total current `i_tot` in amperes.
pub fn measurement_time(t: f64, dm: f64, alpha: f64, i_tot: f64) -> Result<Option<f64>> {
    if i_tot == 0.0 {
        return Err(AnyonError::InvalidParameter("zero current".into()));
    }
    Ok(match probes_needed_small_t(t, dm, alpha)? {
        ProbeEstimate::Needed { estimate, .. } => Some(ELEMENTARY_CHARGE / i_tot.abs() * estimate),
        ProbeEstimate::Indistinguishable => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distinguishability {
    Never,
    Sometimes,
    Always,
}

/// Single-shot distinguishability of every class pair.
pub fn perfect_distinguishability(partition: &ChargeClassPartition) -> Vec<(usize, usize, Distinguishability)> {
    let tol = partition.tol;
    let edge = |p: f64| p.abs() <= tol || (p - 1.0).abs() <= tol;
    let mut out = Vec::new();
    for i in 0..partition.classes.len() {
        for j in i + 1..partition.classes.len() {
            let (p, q) = (partition.classes[i].p, partition.classes[j].p);
            let kind = if edge(p) && edge(q) && (p - q).abs() > 0.5 {
                Distinguishability::Always
            } else if edge(p) || edge(q) {
                Distinguishability::Sometimes
            } else {
                Distinguishability::Never
            };
            out.push((i, j, kind));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_library::{fib, ising, phi, z_n, Level};
    use crate::state_space::Ket;
    use std::sync::Arc;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn fib_readout_values() {
        let m = fib();
        let p = p_coefficients(&m, &ProbeEnsemble::single(1), &InterferometerSettings::symmetric(0.5, PI)).unwrap();
        assert!(p.diag(&m, 0).abs() < 1e-12);
        assert!((p.diag(&m, 1) - (1.0 - 1.0 / (2.0 * phi()))).abs() < 1e-12);
    }

    #[test]
    fn vacuum_probe_is_charge_blind() {
        let m = ising();
        let s = InterferometerSettings::symmetric(0.3, 0.7);
        let p = p_coefficients(&m, &ProbeEnsemble::single(0), &s).unwrap();
        let want = 0.3 * 0.7 + 2.0 * s.visibility().re + 0.7 * 0.3;
        for (_, v) in p.entries() {
            assert!((v[0] - c(want)).norm() < 1e-12);
        }
    }

    #[test]
    fn sum_rule_default_placement() {
        let m = fib();
        let s = InterferometerSettings::new(
            Complex64::from_polar(0.6, 0.3),
            Complex64::from_polar(0.8, -1.1),
            Complex64::from_polar(0.28, 2.0),
            Complex64::from_polar(0.96, 0.4),
            0.9,
            -0.2,
        )
        .unwrap();
        let p = p_coefficients(&m, &ProbeEnsemble::single(1), &s).unwrap();
        for (&(_, _, e), v) in p.entries() {
            let want = s.t1.norm_sqr() * m.m(e, 1) + s.r1.norm_sqr();
            assert!((v[0] + v[1] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn direction_formulas_reduce_to_single_direction() {
        let m = ising();
        let s = InterferometerSettings::symmetric(0.4, 1.3);
        let w = Matrix2::new(c(1.0), ZERO, ZERO, ZERO);
        let general = ProbeEnsemble::with_directions(vec![(1, w)]).unwrap();
        // force the four-pair path by adding a zero-weight up entry
        let padded = ProbeEnsemble { weights: vec![(1, w), (2, Matrix2::new(ZERO, ZERO, ZERO, c(1e-300)))] };
        let a = p_coefficients(&m, &general, &s).unwrap();
        let b = p_coefficients(&m, &padded, &s).unwrap();
        for ((k, x), (_, y)) in a.entries().zip(b.entries()) {
            assert!((x[0] - y[0]).norm() < 1e-12 && (x[1] - y[1]).norm() < 1e-12, "{k:?}");
        }
    }

    #[test]
    fn up_input_swaps_roles_for_vacuum_probe() {
        let m = fib();
        let s = InterferometerSettings::symmetric(0.25, 0.4);
        let up = ProbeEnsemble::with_directions(vec![(0, Matrix2::new(ZERO, ZERO, ZERO, c(1.0)))]).unwrap();
        let right = p_coefficients(&m, &ProbeEnsemble::single(0), &s).unwrap();
        let p = p_coefficients(&m, &up, &s).unwrap();
        let d = p.diag(&m, 1);
        assert!((d + right.diag(&m, 1) - 1.0).abs() < 1e-12);
        assert!((p.get(1, 1, 0)[0] + p.get(1, 1, 0)[1] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn ising_sigma_collapse_single_probe() {
        let m = Arc::new(ising());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rho = PairDensityMatrix::from_pure(
            Arc::clone(&m),
            &[(Ket::new(0, 0, 0, 0), c(h)), (Ket::new(2, 2, 0, 0), c(h))],
            None,
        )
        .unwrap();
        let p = p_coefficients(&m, &ProbeEnsemble::single(1), &InterferometerSettings::symmetric(0.5, PI)).unwrap();
        let (pr, post) = single_probe_update(&rho, &p, Outcome::Up).unwrap();
        assert!((pr - 0.5).abs() < 1e-12);
        let want = PairDensityMatrix::from_pure(m, &[(Ket::new(0, 0, 0, 0), c(1.0))], None).unwrap();
        assert!(post.distance(&want) < 1e-12);
    }

    #[test]
    fn classes_ising_and_t1_zero() {
        let m = ising();
        let s = InterferometerSettings::symmetric(0.5, PI);
        let psi = charge_classes(&m, &p_coefficients(&m, &ProbeEnsemble::single(2), &s).unwrap(), CLASS_TOL);
        assert_eq!(psi.classes.iter().map(|k| k.charges.clone()).collect::<Vec<_>>(), vec![vec![0, 2], vec![1]]);
        let sig = charge_classes(&m, &p_coefficients(&m, &ProbeEnsemble::single(1), &s).unwrap(), CLASS_TOL);
        assert_eq!(sig.classes.len(), 3);
        let off = InterferometerSettings::symmetric(0.0, 0.3);
        let none = charge_classes(&m, &p_coefficients(&m, &ProbeEnsemble::single(1), &off).unwrap(), CLASS_TOL);
        assert_eq!(none.classes.len(), 1);
        let d = perfect_distinguishability(&sig);
        let one_psi = d.iter().find(|(i, j, _)| sig.classes[*i].charges == [0] && sig.classes[*j].charges == [2]).unwrap();
        assert_eq!(one_psi.2, Distinguishability::Always);
    }

    #[test]
    fn z_star_table() {
        for (alpha, z) in [(0.3173, 1.0), (0.0455, 2.0), (0.01, 2.576), (0.001, 3.2905), (0.0001, 3.89059)] {
            assert!((z_star(alpha).unwrap() - z).abs() < 5e-4);
        }
        assert!(z_star(0.0).is_err());
    }

    #[test]
    fn plan_example() {
        match probes_needed(0.25, 0.75, 0.0455).unwrap() {
            ProbeEstimate::Needed { estimate, probes } => {
                assert!((estimate - 12.0).abs() < 0.01);
                assert_eq!(probes, 13);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(probes_needed(0.3, 0.3, 0.05).unwrap(), ProbeEstimate::Indistinguishable);
    }

    #[test]
    fn zn_quasi_fixed_example() {
        let m = z_n(3, Level::Integer(1)).unwrap();
        let b = 1;
        let (a, a2) = (1, 2);
        let phi_a = m.m(a, b).arg();
        let phi_a2 = m.m(a2, b).arg();
        let theta = -(phi_a + phi_a2) / 2.0;
        let s = InterferometerSettings::symmetric(0.3, theta);
        let rep = detect_rogue(&m, &ProbeEnsemble::single(b), &s, CLASS_TOL).unwrap();
        let e = (a + 3 - a2) % 3;
        let hit = rep.quasi_fixed.iter().find(|q| q.a == a && q.a2 == a2 && q.e == e).expect("quasi-fixed element");
        let phi_e = phi_a - phi_a2;
        let (t, r) = (0.3f64.sqrt(), 0.7f64.sqrt());
        let want = (Complex64::from_polar(t * r, phi_e / 2.0) + t * r).powi(2);
        let p = p_coefficients(&m, &ProbeEnsemble::single(b), &s).unwrap();
        assert!((p.get(a, a2, e)[0] - want).norm() < 1e-12);
        assert!((hit.p_kappa - want.norm()).abs() < 1e-12);
        assert_eq!(rep.non_unit_modulus().count(), 0);
    }

    #[test]
    fn no_rogues_generic() {
        for m in [ising(), fib()] {
            for b in 0..m.size() {
                let rep = detect_rogue(&m, &ProbeEnsemble::single(b), &InterferometerSettings::symmetric(0.37, 0.913), CLASS_TOL).unwrap();
                assert!(rep.quasi_fixed.is_empty());
            }
        }
    }
}
