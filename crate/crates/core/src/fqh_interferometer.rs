//! Double point-contact quantum Hall interferometer, summed to all orders in tunneling.
//!
//! Each fusion channel `g` of `a × b` winds with the scalar eigenphase `λ_g = θ_g/(θ_a θ_b)`,
//! so the multiple-reflection series is geometric per channel. With
//! `z = t1* t2 e^{i(θI+θII)}` the two exit amplitudes are
//!
//! * `→`: `r1 r2 e^{iθII} / (1 + z λ)`
//! * `←`: `(t1 + t2 e^{i(θI+θII)} λ) / (1 + z λ)`
//!
//! Coherences between `a` and `a'` in difference channel `e` pair ket channel `g ∈ a × b`
//! with bra channel `g' ∈ a' × b` through the weight
//! `K(g, g') = d_g/(d_a d_b) |[F^{e a' b}_g]_{a g'}|²`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anyon_model::AnyonModel;
use crate::charge_algebra::Charge;
use crate::error::{AnyonError, Result};
use crate::mach_zehnder::{n_probe_posterior, PCoefficients};
use crate::state_space::PairDensityMatrix;

pub const DEFAULT_MAX_TUNNELING: f64 = 0.2;
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Attached to every quantum Hall result.
pub const MULTI_TUNNELING_CAVEAT: &str =
    "all-order sums assume only the chosen quasihole species tunnels; other excitations may contribute when higher orders matter";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FqhSettings {
    pub t1: Complex64,
    pub t2: Complex64,
    #[serde(default)]
    pub r1_phase: f64,
    #[serde(default)]
    pub r2_phase: f64,
    pub theta_i: f64,
    #[serde(default)]
    pub theta_ii: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "default_max")]
    pub max_tunneling: f64,
}

fn one() -> f64 {
    1.0
}

fn default_max() -> f64 {
    DEFAULT_MAX_TUNNELING
}

impl FqhSettings {
    pub fn new(t1: Complex64, t2: Complex64, theta_i: f64, theta_ii: f64) -> Result<Self> {
        let s = FqhSettings {
            t1,
            t2,
            r1_phase: 0.0,
            r2_phase: 0.0,
            theta_i,
            theta_ii,
            q: 1.0,
            max_tunneling: DEFAULT_MAX_TUNNELING,
        };
        s.validate()?;
        Ok(s)
    }

    /// Real `t1 = t2 = t` with the interference phase set to `β`.
    pub fn weak(t: f64, beta: f64) -> Result<Self> {
        Self::new(Complex64::new(t, 0.0), Complex64::new(t, 0.0), beta, 0.0)
    }

    /// Real `t1`, `t2` without the tunneling bound, for numerical experiments.
    pub fn unchecked(t1: f64, t2: f64, beta: f64) -> Self {
        FqhSettings {
            t1: Complex64::new(t1, 0.0),
            t2: Complex64::new(t2, 0.0),
            r1_phase: 0.0,
            r2_phase: 0.0,
            theta_i: beta,
            theta_ii: 0.0,
            q: 1.0,
            max_tunneling: 1.0,
        }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_max_tunneling(mut self, max: f64) -> Self {
        self.max_tunneling = max;
        self
    }

    /// Shifts `θ_I` so that `β` takes the given value.
    pub fn with_beta(mut self, beta: f64) -> Self {
        let base = (self.t1.conj() * self.t2).arg();
        self.theta_i = beta - base - self.theta_ii;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (j, t) in [(1, self.t1), (2, self.t2)] {
            if t.norm() > self.max_tunneling + 1e-15 {
                return Err(AnyonError::InvalidParameter(format!(
                    "|t{j}| = {} exceeds the weak-tunneling bound {}",
                    t.norm(),
                    self.max_tunneling
                )));
            }
            if t.norm() > 1.0 {
                return Err(AnyonError::InvalidParameter(format!("|t{j}| > 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(AnyonError::InvalidParameter(format!("Q = {} outside [0, 1]", self.q)));
        }
        Ok(())
    }

    pub fn r1(&self) -> Complex64 {
        Complex64::from_polar((1.0 - self.t1.norm_sqr()).max(0.0).sqrt(), self.r1_phase)
    }

    pub fn r2(&self) -> Complex64 {
        Complex64::from_polar((1.0 - self.t2.norm_sqr()).max(0.0).sqrt(), self.r2_phase)
    }

    fn theta_plus(&self) -> f64 {
        self.theta_i + self.theta_ii
    }

    /// `z = t1* t2 e^{i(θI+θII)} = |t1 t2| e^{iβ}`.
    pub fn z(&self) -> Complex64 {
        self.t1.conj() * self.t2 * Complex64::from_polar(1.0, self.theta_plus())
    }

    pub fn beta(&self) -> f64 {
        self.z().arg()
    }

    fn amp_right(&self, lambda: Complex64) -> Complex64 {
        self.r1() * self.r2() * Complex64::from_polar(1.0, self.theta_ii) / (1.0 + self.z() * lambda)
    }

    fn amp_left(&self, lambda: Complex64) -> Complex64 {
        (self.t1 + self.t2 * Complex64::from_polar(1.0, self.theta_plus()) * lambda) / (1.0 + self.z() * lambda)
    }
}

/// The 2×2 evolution of one fusion channel, basis order `(←, →)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEvolution {
    pub channel: Charge,
    pub multiplicity: usize,
    pub matrix: Matrix2<Complex64>,
}

impl ChannelEvolution {
    pub fn unitarity_residual(&self) -> f64 {
        (self.matrix * self.matrix.adjoint() - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_pole(s: &FqhSettings, lambda: Complex64) -> Result<()> {
    let d = (1.0 + s.z() * lambda).norm();
    if d < 1e-12 {
        return Err(AnyonError::Pole(format!("|1 + z λ| = {d:e}")));
    }
    Ok(())
}

pub fn channel_evolution(model: &AnyonModel, a: Charge, b: Charge, s: &FqhSettings) -> Result<Vec<ChannelEvolution>> {
    model.conjugate(a)?;
    model.conjugate(b)?;
    let mut out = Vec::new();
    let (r1, r2) = (s.r1(), s.r2());
    let tp = Complex64::from_polar(1.0, s.theta_plus());
    for &(c, m) in model.products(a, b) {
        let lambda = model.eigenphase(a, b, c);
        check_pole(s, lambda)?;
        let den = 1.0 + s.z() * lambda;
        for mu in 0..m as usize {
            let rab = model.r_symbols().get(a, b, c).map_or(ZERO, |r| r[(mu, mu)]);
            let rba = model.r_symbols().get(b, a, c).map_or(ZERO, |r| r[(mu, mu)]);
            let u11 = r1.conj() * r2.conj() * Complex64::from_polar(1.0, s.theta_i) * rab / den;
            let u12 = (s.t1 + s.t2 * tp * lambda) / den;
            let u21 = -(s.t2.conj() + s.t1.conj() * tp * lambda) / den;
            let u22 = r1 * r2 * Complex64::from_polar(1.0, s.theta_ii) * rba / den;
            out.push(ChannelEvolution { channel: c, multiplicity: mu, matrix: Matrix2::new(u11, u12, u21, u22) });
        }
    }
    Ok(out)
}

/// Exact `(p^→, p^←)` for a target of definite charge `a`.
pub fn p_exact_diagonal(model: &AnyonModel, a: Charge, b: Charge, s: &FqhSettings) -> Result<(f64, f64)> {
    s.validate()?;
    model.conjugate(a)?;
    model.conjugate(b)?;
    if s.q < 1.0 {
        let [pr, pl] = p_offdiagonal_series(model, a, a, model.vacuum(), b, s, DEFAULT_SERIES_TOL)?;
        return Ok((pr.re, pl.re));
    }
    let (r1, r2) = (s.r1().norm_sqr(), s.r2().norm_sqr());
    let tt = (s.t1 * s.t2).norm();
    let mut right = 0.0;
    for &(c, m) in model.products(a, b) {
        let lambda = model.eigenphase(a, b, c);
        check_pole(s, lambda)?;
        let w = f64::from(m) * model.dim(c) / (model.dim(a) * model.dim(b));
        let den = 1.0 + tt * tt + 2.0 * tt * (s.beta() + lambda.arg()).cos();
        right += w * r1 * r2 / den;
    }
    Ok((right, 1.0 - right))
}

/// Quadratic-order `(p^→, p^←)` with `Q` on the `|t1 t2|` cross terms.
pub fn p_first_order(model: &AnyonModel, a: Charge, a2: Charge, e: Charge, b: Charge, s: &FqhSettings) -> (Complex64, Complex64) {
    let (at1, at2) = (s.t1.norm_sqr(), s.t2.norm_sqr());
    let tt = (s.t1 * s.t2).norm();
    let eb = Complex64::from_polar(1.0, s.beta());
    let cross = (eb * model.m(a, b) + eb.conj() * model.m(a2, b).conj()) * (s.q * tt);
    let right = Complex64::new(1.0 - at1 - at2, 0.0) - cross;
    let left = Complex64::new(at1, 0.0) + cross + model.m(e, b) * at2;
    (right, left)
}

/// `(g, g', K(g, g'))` pairing ket channels of `a × b` with bra channels of `a' × b`.
pub fn coherence_kernel(model: &AnyonModel, a: Charge, a2: Charge, e: Charge, b: Charge) -> Vec<(Charge, Charge, f64)> {
    let nea = model.n(e, a2, a) as usize;
    if nea == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &(g, _) in model.products(a, b) {
        let blk = model.f_symbols().block(e, a2, b, g);
        for &(g2, _) in model.products(a2, b) {
            let mut acc = 0.0;
            if let Some(blk) = blk {
                for (i, row) in blk.rows.iter().enumerate() {
                    if row.0 != a {
                        continue;
                    }
                    for (j, col) in blk.cols.iter().enumerate() {
                        if col.0 == g2 {
                            acc += blk.mat[(i, j)].norm_sqr();
                        }
                    }
                }
            }
            let k = model.dim(g) / (model.dim(a) * model.dim(b)) * acc / nea as f64;
            if k > 0.0 {
                out.push((g, g2, k));
            }
        }
    }
    out
}

/// Exact `p^s_{aa'e,b}` for `s ∈ {→, ←}`; closed form at `Q = 1`, winding series otherwise.
pub fn p_offdiagonal_exact(
    model: &AnyonModel,
    a: Charge,
    a2: Charge,
    e: Charge,
    b: Charge,
    s: &FqhSettings,
    series_tol: f64,
) -> Result<[Complex64; 2]> {
    s.validate()?;
    if s.q < 1.0 {
        return p_offdiagonal_series(model, a, a2, e, b, s, series_tol);
    }
    let mut out = [ZERO, ZERO];
    for (g, g2, k) in coherence_kernel(model, a, a2, e, b) {
        let (l, l2) = (model.eigenphase(a, b, g), model.eigenphase(a2, b, g2));
        check_pole(s, l)?;
        check_pole(s, l2)?;
        out[0] += s.amp_right(l) * s.amp_right(l2).conj() * k;
        out[1] += s.amp_left(l) * s.amp_left(l2).conj() * k;
    }
    Ok(out)
}

/// Winding-number series `Σ_{n,m} c_n c_m* Q^{|n−m|} Σ K λ^n λ'^{*m}`, truncated by a geometric bound.
pub fn p_offdiagonal_series(
    model: &AnyonModel,
    a: Charge,
    a2: Charge,
    e: Charge,
    b: Charge,
    s: &FqhSettings,
    series_tol: f64,
) -> Result<[Complex64; 2]> {
    let z = s.z();
    let zn = z.norm();
    if zn >= 1.0 {
        return Err(AnyonError::NonConvergence(format!("|t1 t2| = {zn} >= 1")));
    }
    let r12 = s.r1() * s.r2() * Complex64::from_polar(1.0, s.theta_ii);
    let lead = s.t2 * Complex64::from_polar(1.0, s.theta_plus()) * s.r1().norm_sqr();
    // |c_k| <= c_max |z|^(k-1); tail of both sums bounded by 2 S Σ_{k>=L} |c_k|
    let c_max = r12.norm().max(lead.norm()).max(s.t1.norm()).max(1e-300);
    let total = c_max * (1.0 + 1.0 / (1.0 - zn));
    let mut len = 1usize;
    while zn > 0.0 && 2.0 * total * c_max * zn.powi(len as i32 - 1) / (1.0 - zn) >= series_tol {
        len += 1;
        if len > 100_000 {
            return Err(AnyonError::NonConvergence("winding series exceeds 100000 terms".into()));
        }
    }
    let len = len + 1;
    let mut c_right = Vec::with_capacity(len);
    let mut c_left = Vec::with_capacity(len);
    let mut pow = Complex64::new(1.0, 0.0);
    for k in 0..len {
        c_right.push(r12 * pow);
        c_left.push(if k == 0 { s.t1 } else { lead * pow / -z });
        pow *= -z;
    }
    if zn == 0.0 {
        c_left[1..].iter_mut().for_each(|c| *c = ZERO);
        c_left.iter_mut().skip(1).take(1).for_each(|c| *c = lead);
    }
    let kernel = coherence_kernel(model, a, a2, e, b);
    let powers = |lambda: Complex64| {
        let mut v = Vec::with_capacity(len);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..len {
            v.push(p);
            p *= lambda;
        }
        v
    };
    let mut out = [ZERO, ZERO];
    for (g, g2, k) in kernel {
        let pl = powers(model.eigenphase(a, b, g));
        let pl2 = powers(model.eigenphase(a2, b, g2).conj());
        for n in 0..len {
            for m in 0..len {
                let w = pl[n] * pl2[m] * (k * s.q.powi((n as i32 - m as i32).abs()));
                out[0] += c_right[n] * c_right[m].conj() * w;
                out[1] += c_left[n] * c_left[m].conj() * w;
            }
        }
    }
    Ok(out)
}

/// `G(β) ∝ Σ_a Pr(a) p^←_{aa1,b}(β)` over the grid.
pub fn conductance_curve(rho: &PairDensityMatrix, b: Charge, s: &FqhSettings, betas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let model = rho.model();
    let marg = rho.trace_out_partner();
    betas
        .iter()
        .map(|&beta| {
            let sb = s.with_beta(beta);
            let mut g = 0.0;
            for (&a, &pr) in &marg {
                if pr != 0.0 {
                    g += pr * p_exact_diagonal(model, a, b, &sb)?.1;
                }
            }
            Ok((beta, g))
        })
        .collect()
}

/// Uniform `β` grid over one period.
pub fn beta_grid(points: usize) -> Vec<f64> {
    (0..points).map(|j| 2.0 * PI * j as f64 / points as f64).collect()
}

/// Fourier amplitudes `|G_k|` for `k = 0..=kmax` of samples on a uniform full-period grid.
pub fn harmonics(values: &[f64], kmax: usize) -> Vec<f64> {
    let n = values.len() as f64;
    (0..=kmax)
        .map(|k| {
            let acc: Complex64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| Complex64::from_polar(*v, -2.0 * PI * (k * j) as f64 / n))
                .sum();
            if k == 0 {
                acc.norm() / n
            } else {
                2.0 * acc.norm() / n
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalWitness {
    pub survives: bool,
    pub checked_up_to: usize,
    pub first_violation: Option<usize>,
}

/// Moment test `Σ_c N_ab^c (d_c/d_a)(θ_c/θ_a)^n` equal for `a` and `a'` at all `n`.
pub fn survival_condition(model: &AnyonModel, a: Charge, a2: Charge, b: Charge) -> Result<SurvivalWitness> {
    for x in [a, a2, b] {
        model.conjugate(x)?;
    }
    let side = |x: Charge| -> Vec<(Complex64, f64)> {
        model
            .products(x, b)
            .iter()
            .map(|&(c, m)| (model.theta(c) / model.theta(x), f64::from(m) * model.dim(c) / model.dim(x)))
            .collect()
    };
    let (lhs, rhs) = (side(a), side(a2));
    let mut phases: Vec<Complex64> = Vec::new();
    for (p, _) in lhs.iter().chain(&rhs) {
        if !phases.iter().any(|q| (q - p).norm() < 1e-9) {
            phases.push(*p);
        }
    }
    let n_max = phases.len();
    let moment = |v: &[(Complex64, f64)], n: usize| -> Complex64 { v.iter().map(|(p, w)| p.powu(n as u32) * *w).sum() };
    for n in 0..=n_max {
        if (moment(&lhs, n) - moment(&rhs, n)).norm() > 1e-9 {
            return Ok(SurvivalWitness { survives: false, checked_up_to: n, first_violation: Some(n) });
        }
    }
    Ok(SurvivalWitness { survives: true, checked_up_to: n_max, first_violation: None })
}

/// p-coefficients of the quantum Hall device in the measurement-theory layout (`→`, `←`).
pub fn fqh_p_coefficients(model: &AnyonModel, b: Charge, s: &FqhSettings, series_tol: f64) -> Result<PCoefficients> {
    let n = model.size();
    let mut entries = Vec::new();
    for a in 0..n {
        for a2 in 0..n {
            for e in 0..n {
                if model.n(a2, e, a) == 0 {
                    continue;
                }
                let v = if a == a2 && e == model.vacuum() && s.q >= 1.0 {
                    let (r, l) = p_exact_diagonal(model, a, b, s)?;
                    [Complex64::new(r, 0.0), Complex64::new(l, 0.0)]
                } else {
                    p_offdiagonal_exact(model, a, a2, e, b, s, series_tol)?
                };
                entries.push(((a, a2, e), v));
            }
        }
    }
    let m_b = (0..n).map(|x| model.m(x, b)).collect();
    Ok(PCoefficients::from_parts(entries, m_b))
}

/// Posterior after `N` quasihole probes with `n` transmitted (`→`) outcomes.
pub fn fqh_collapse(rho: &PairDensityMatrix, b: Charge, s: &FqhSettings, n_total: u64, n: u64) -> Result<(f64, PairDensityMatrix)> {
    let model = rho.model();
    if model.fqh().is_none() {
        return Err(AnyonError::InvalidParameter(format!("{} has no quantum Hall data", model.name())));
    }
    if rho.superselection().is_none() {
        return Err(AnyonError::InvalidParameter("quantum Hall targets need electric superselection".into()));
    }
    let p = fqh_p_coefficients(model, b, s, DEFAULT_SERIES_TOL)?;
    n_probe_posterior(rho, &p, n_total, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Suppression {
    /// Interference phase at which `p^← = 0` for every `|t1| = |t2| = t`.
    pub beta: f64,
}

impl Suppression {
    pub fn settings(&self, t: f64) -> Result<FqhSettings> {
        FqhSettings::weak(t, self.beta)
    }
}

/// The `β` that cancels tunneling of `b` past `a` in every channel, if one exists.
pub fn suppression_settings(model: &AnyonModel, a: Charge, b: Charge) -> Result<Option<Suppression>> {
    model.conjugate(a)?;
    model.conjugate(b)?;
    let phases: Vec<Complex64> = model.products(a, b).iter().map(|&(c, _)| model.eigenphase(a, b, c)).collect();
    let first = phases[0];
    if phases.iter().any(|p| (p - first).norm() > 1e-9) {
        return Ok(None);
    }
    let beta = (PI - first.arg()).rem_euclid(2.0 * PI);
    Ok(Some(Suppression { beta }))
}
