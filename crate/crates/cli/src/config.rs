use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyonic::fqh_interferometer::{FqhSettings, DEFAULT_MAX_TUNNELING, DEFAULT_SERIES_TOL};
use anyonic::mach_zehnder::{InterferometerSettings, Placement, ProbeEnsemble, CLASS_TOL};
use anyonic::model_file::read_model;
use anyonic::model_library::builtin;
use anyonic::state_space::{DensityEntry, Ket, PairDensityMatrix, STATE_TOL};
use anyonic::{AnyonError, AnyonModel, Charge};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex number as `[re, im]`.
pub type C = [f64; 2];

fn cx(c: C) -> Complex64 {
    Complex64::new(c[0], c[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Device {
    #[default]
    MachZehnder,
    Fqh,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsBlock {
    /// Shortcut for real `|t1|² = |t2|² = t_sq`.
    pub t_sq: Option<f64>,
    /// Shortcut interference phase: `θ_I` for the Mach-Zehnder device, `β` for the quantum Hall device.
    pub theta: Option<f64>,
    pub t1: Option<C>,
    pub r1: Option<C>,
    pub t2: Option<C>,
    pub r2: Option<C>,
    pub theta_i: Option<f64>,
    pub theta_ii: Option<f64>,
    pub r1_phase: Option<f64>,
    pub r2_phase: Option<f64>,
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub placement: Option<Placement>,
    pub max_tunneling: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    /// `(label, weight)` pairs; one entry means identical probes of one charge.
    #[serde(default)]
    pub charges: Vec<(String, f64)>,
    /// Per-charge 2×2 entry-direction matrices, same order as `charges`.
    pub directions: Option<Vec<[[C; 2]; 2]>>,
    /// Probe list cycled through during sampling.
    pub sequence: Option<Vec<ProbeBlock>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PureAmp {
    pub ket: (String, String, String, usize),
    pub amp: C,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBlock {
    pub pure: Option<Vec<PureAmp>>,
    pub density: Option<Vec<DensityEntry>>,
    /// Classical mixture of definite charges `a` paired with `ā` in the vacuum channel.
    pub charges: Option<Vec<(String, f64)>>,
    /// Defaults to on for quantum Hall models.
    pub superselection: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    ClosedForm,
    Sampling,
    Averaged,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default)]
    pub mode: RunMode,
    pub n_total: Option<u64>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub seed_count: Option<u64>,
    pub steps: Option<usize>,
    #[serde(default)]
    pub reset: bool,
    pub beta_points: Option<usize>,
    pub harmonics: Option<usize>,
    /// Definite target charges given their own conductance curves.
    pub curve_charges: Option<Vec<String>>,
    pub alpha: Option<f64>,
    pub p: Option<(f64, f64)>,
    pub t: Option<f64>,
    pub dm: Option<f64>,
    pub current: Option<f64>,
    #[serde(default)]
    pub include_sequences: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "d_class")]
    pub class_tol: f64,
    #[serde(default = "d_series")]
    pub series_tol: f64,
    #[serde(default = "d_state")]
    pub state_tol: f64,
    #[serde(default = "d_max")]
    pub max_tunneling: f64,
}

fn d_class() -> f64 {
    CLASS_TOL
}
fn d_series() -> f64 {
    DEFAULT_SERIES_TOL
}
fn d_state() -> f64 {
    STATE_TOL
}
fn d_max() -> f64 {
    DEFAULT_MAX_TUNNELING
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { class_tol: CLASS_TOL, series_tol: DEFAULT_SERIES_TOL, state_tol: STATE_TOL, max_tunneling: DEFAULT_MAX_TUNNELING }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in name (`fib`, `z_n:8:1/2`, ...) or path to a model file.
    pub model: String,
    #[serde(default)]
    pub device: Device,
    #[serde(default)]
    pub settings: SettingsBlock,
    #[serde(default)]
    pub probe: ProbeBlock,
    #[serde(default)]
    pub target: TargetBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
}

pub fn parse_config(text: &str) -> anyonic::Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| AnyonError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

/// Built-in name, or a file path (resolved against `base`).
pub fn load_model(model_arg: &str, base: Option<&Path>) -> anyonic::Result<AnyonModel> {
    let p = PathBuf::from(model_arg);
    let p = match base {
        Some(b) if p.is_relative() && !p.exists() => b.join(p),
        _ => p,
    };
    if p.is_file() || model_arg.ends_with(".json") {
        read_model(&p)
    } else {
        builtin(model_arg)
    }
}

/// A config bound to its model.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: Arc<AnyonModel>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig, base: Option<&Path>, max_override: Option<f64>) -> anyonic::Result<Self> {
        let mut config = config;
        if let Some(m) = max_override {
            config.tolerances.max_tunneling = m;
        }
        let model = Arc::new(load_model(&config.model, base)?);
        let e = Experiment { config, model };
        e.target()?;
        match e.config.device {
            Device::MachZehnder => {
                e.mz_settings()?;
                e.mz_probes()?;
            }
            Device::Fqh => {
                e.fqh_settings()?;
                e.fqh_probe()?;
            }
        }
        Ok(e)
    }

    pub fn charge(&self, label: &str) -> anyonic::Result<Charge> {
        self.model.charge(label)
    }

    pub fn mz_settings(&self) -> anyonic::Result<InterferometerSettings> {
        let s = &self.config.settings;
        let mut out = if let Some(tsq) = s.t_sq {
            if !(0.0..=1.0).contains(&tsq) {
                return Err(AnyonError::InvalidParameter(format!("t_sq = {tsq} outside [0, 1]")));
            }
            let mut x = InterferometerSettings::symmetric(tsq, s.theta.or(s.theta_i).unwrap_or(0.0));
            x.theta_ii = s.theta_ii.unwrap_or(0.0);
            x
        } else {
            let need = |v: Option<C>, n: &str| v.ok_or_else(|| AnyonError::InvalidParameter(format!("settings.{n} missing")));
            InterferometerSettings::new(
                cx(need(s.t1, "t1")?),
                cx(need(s.r1, "r1")?),
                cx(need(s.t2, "t2")?),
                cx(need(s.r2, "r2")?),
                s.theta_i.or(s.theta).unwrap_or(0.0),
                s.theta_ii.unwrap_or(0.0),
            )?
        };
        out = out.with_q(s.q.unwrap_or(1.0)).with_placement(s.placement.unwrap_or_default());
        out.validate()?;
        Ok(out)
    }

    pub fn fqh_settings(&self) -> anyonic::Result<FqhSettings> {
        let s = &self.config.settings;
        let max = s.max_tunneling.unwrap_or(self.config.tolerances.max_tunneling);
        let real = |v: f64| [v, 0.0];
        let (t1, t2) = match s.t_sq {
            Some(tsq) => (real(tsq.sqrt()), real(tsq.sqrt())),
            None => (
                s.t1.ok_or_else(|| AnyonError::InvalidParameter("settings.t1 missing".into()))?,
                s.t2.ok_or_else(|| AnyonError::InvalidParameter("settings.t2 missing".into()))?,
            ),
        };
        let mut out = FqhSettings {
            t1: cx(t1),
            t2: cx(t2),
            r1_phase: s.r1_phase.unwrap_or(0.0),
            r2_phase: s.r2_phase.unwrap_or(0.0),
            theta_i: s.theta_i.unwrap_or(0.0),
            theta_ii: s.theta_ii.unwrap_or(0.0),
            q: s.q.unwrap_or(1.0),
            max_tunneling: max,
        };
        if let Some(beta) = s.beta.or(s.theta) {
            out = out.with_beta(beta);
        }
        out.validate()?;
        Ok(out)
    }

    fn ensemble(&self, block: &ProbeBlock) -> anyonic::Result<ProbeEnsemble> {
        if block.charges.is_empty() {
            return Err(AnyonError::InvalidParameter("probe.charges is empty".into()));
        }
        let charges = block
            .charges
            .iter()
            .map(|(l, w)| Ok((self.charge(l)?, *w)))
            .collect::<anyonic::Result<Vec<_>>>()?;
        match &block.directions {
            None => ProbeEnsemble::mixture(&charges),
            Some(dirs) => {
                if dirs.len() != charges.len() {
                    return Err(AnyonError::InvalidParameter("probe.directions must match probe.charges".into()));
                }
                let weights = charges
                    .iter()
                    .zip(dirs)
                    .map(|(&(b, w), m)| (b, Matrix2::new(cx(m[0][0]), cx(m[0][1]), cx(m[1][0]), cx(m[1][1])) * Complex64::new(w, 0.0)))
                    .collect();
                ProbeEnsemble::with_directions(weights)
            }
        }
    }

    /// Probe ensembles in the order they are sent; one entry for identical probes.
    pub fn mz_probes(&self) -> anyonic::Result<Vec<ProbeEnsemble>> {
        match &self.config.probe.sequence {
            Some(seq) if !seq.is_empty() => seq.iter().map(|b| self.ensemble(b)).collect(),
            _ => Ok(vec![self.ensemble(&self.config.probe)?]),
        }
    }

    /// Tunneling species; defaults to the fundamental quasihole.
    pub fn fqh_probe(&self) -> anyonic::Result<Charge> {
        let fqh = self
            .model
            .fqh()
            .ok_or_else(|| AnyonError::InvalidParameter(format!("model {} has no quantum Hall data", self.model.name())))?;
        match self.config.probe.charges.as_slice() {
            [] => Ok(fqh.quasihole),
            [(l, _)] => self.charge(l),
            _ => Err(AnyonError::InvalidParameter("the quantum Hall device takes a single probe species".into())),
        }
    }

    pub fn superselection(&self) -> Option<Vec<i64>> {
        let on = self.config.target.superselection.unwrap_or(self.model.fqh().is_some());
        if on {
            PairDensityMatrix::electric_sectors(&self.model)
        } else {
            None
        }
    }

    pub fn target(&self) -> anyonic::Result<PairDensityMatrix> {
        let t = &self.config.target;
        let ss = self.superselection();
        let set = [t.pure.is_some(), t.density.is_some(), t.charges.is_some()].iter().filter(|x| **x).count();
        if set != 1 {
            return Err(AnyonError::InvalidParameter("target needs exactly one of pure, density, charges".into()));
        }
        let m = &self.model;
        let rho = if let Some(p) = &t.pure {
            let amps = p
                .iter()
                .map(|x| Ok((Ket::new(self.charge(&x.ket.0)?, self.charge(&x.ket.1)?, self.charge(&x.ket.2)?, x.ket.3), cx(x.amp))))
                .collect::<anyonic::Result<Vec<_>>>()?;
            PairDensityMatrix::from_pure(Arc::clone(m), &amps, ss)?
        } else if let Some(d) = &t.density {
            PairDensityMatrix::from_entries(Arc::clone(m), d, ss)?
        } else {
            let list = t.charges.as_ref().expect("checked above");
            let mut entries = Vec::new();
            for (l, w) in list {
                let a = self.charge(l)?;
                let k = Ket::new(a, m.dual(a), m.vacuum(), 0);
                entries.push(((k, k), Complex64::new(*w, 0.0)));
            }
            PairDensityMatrix::new(Arc::clone(m), entries, ss)?
        };
        let report = rho.check_state();
        if !report.passed() {
            let names: Vec<String> = report.failures().map(|c| format!("{}: {:?}", c.name, c.violations)).collect();
            return Err(AnyonError::InvalidState(names.join("; ")));
        }
        Ok(rho)
    }
}
