use std::collections::BTreeMap;

use anyonic::fqh_interferometer::{
    beta_grid, conductance_curve, fqh_p_coefficients, harmonics, MULTI_TUNNELING_CAVEAT,
};
use anyonic::mach_zehnder::{
    averaged_state, charge_classes, fixed_state, n_probe_posterior, p_coefficients, perfect_distinguishability,
    probes_needed, probes_needed_conservative, probes_needed_small_t, measurement_time, sample_run, z_star,
    ChargeClassPartition, Distinguishability, PCoefficients, ProbeEstimate,
};
use anyonic::state_space::{DensityEntry, PairDensityMatrix};
use anyonic::{AnyonError, AnyonModel, Charge, VerifyReport};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Device, Experiment, RunMode, Tolerances};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub version: String,
    pub tolerances: Tolerances,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub command: String,
    pub passed: bool,
    pub payload: Value,
    pub provenance: Provenance,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn provenance(exp_hash: String, seed: Option<u64>, tol: Tolerances, model: &AnyonModel, fqh: bool) -> Provenance {
    Provenance {
        config_sha256: exp_hash,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        tolerances: tol,
        model: model.name().to_string(),
        caveat: fqh.then(|| MULTI_TUNNELING_CAVEAT.to_string()),
    }
}

pub fn cmd_verify(model: &AnyonModel, model_arg: &str) -> ResultRecord {
    let report: VerifyReport = model.verify_model();
    ResultRecord {
        command: "verify".into(),
        passed: report.passed(),
        payload: serde_json::to_value(&report).expect("report serializes"),
        provenance: provenance(sha256_hex(model_arg.as_bytes()), None, Tolerances::default(), model, false),
    }
}

/// Runs `f` and wraps the payload with provenance.
pub struct Ctx<'a> {
    pub exp: &'a Experiment,
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Ctx<'_> {
    fn record(&self, command: &str, passed: bool, payload: Value) -> ResultRecord {
        let exp = self.exp;
        ResultRecord {
            command: command.into(),
            passed,
            payload,
            provenance: provenance(
                self.config_hash.clone(),
                self.seed,
                exp.config.tolerances,
                &exp.model,
                exp.config.device == Device::Fqh,
            ),
        }
    }

    fn label(&self, a: Charge) -> String {
        self.exp.model.label(a).to_string()
    }

    /// p-coefficients for each probe in send order.
    fn coefficients(&self) -> anyonic::Result<Vec<PCoefficients>> {
        let exp = self.exp;
        match exp.config.device {
            Device::MachZehnder => {
                let s = exp.mz_settings()?;
                exp.mz_probes()?.iter().map(|pr| p_coefficients(&exp.model, pr, &s)).collect()
            }
            Device::Fqh => {
                let s = exp.fqh_settings()?;
                Ok(vec![fqh_p_coefficients(&exp.model, exp.fqh_probe()?, &s, exp.config.tolerances.series_tol)?])
            }
        }
    }

    fn partition_json(&self, part: &ChargeClassPartition, rho: &PairDensityMatrix) -> Value {
        let prs = part.class_probabilities(rho);
        let classes: Vec<Value> = part
            .classes
            .iter()
            .zip(&prs)
            .map(|(k, pr)| {
                json!({
                    "charges": k.charges.iter().map(|&a| self.label(a)).collect::<Vec<_>>(),
                    "p_right": k.p,
                    "pr_target": pr,
                })
            })
            .collect();
        let pairs: Vec<Value> = perfect_distinguishability(part)
            .into_iter()
            .map(|(i, j, d)| json!({"classes": [i, j], "single_shot": d}))
            .collect();
        json!({"classes": classes, "distinguishability": pairs})
    }

    pub fn classes(&self) -> anyonic::Result<ResultRecord> {
        let exp = self.exp;
        let rho = exp.target()?;
        let ps = self.coefficients()?;
        let part = charge_classes(&exp.model, &ps[0], exp.config.tolerances.class_tol);
        let mut payload = self.partition_json(&part, &rho);
        let always = perfect_distinguishability(&part).iter().all(|x| x.2 == Distinguishability::Always);
        payload["all_pairs_single_shot"] = json!(always);
        Ok(self.record("classes", true, payload))
    }

    fn state_json(&self, rho: &PairDensityMatrix) -> Vec<DensityEntry> {
        rho.clone().pruned(self.exp.config.tolerances.state_tol * 1e-6).to_entries()
    }

    fn marginal_json(&self, rho: &PairDensityMatrix) -> BTreeMap<String, f64> {
        rho.trace_out_partner().into_iter().map(|(a, p)| (self.label(a), p)).collect()
    }

    pub fn run(&self) -> anyonic::Result<ResultRecord> {
        let exp = self.exp;
        let rho = exp.target()?;
        let ps = self.coefficients()?;
        let run = &exp.config.run;
        let part = charge_classes(&exp.model, &ps[0], exp.config.tolerances.class_tol);
        match run.mode {
            RunMode::ClosedForm => {
                if ps.len() != 1 {
                    return Err(AnyonError::InvalidParameter("closed form needs identical probes".into()));
                }
                let n_total = run.n_total.ok_or_else(|| AnyonError::InvalidParameter("run.n_total missing".into()))?;
                let n = run.n.ok_or_else(|| AnyonError::InvalidParameter("run.n missing".into()))?;
                let (pr, post) = n_probe_posterior(&rho, &ps[0], n_total, n)?;
                let check = post.check_state();
                let payload = json!({
                    "n_total": n_total,
                    "n": n,
                    "pr_n": pr,
                    "posterior": self.state_json(&post),
                    "posterior_marginal": self.marginal_json(&post),
                    "posterior_classes": self.partition_json(&part, &post),
                    "state_checks": check,
                });
                Ok(self.record("run", check.passed(), payload))
            }
            RunMode::Averaged => {
                let n_total = run.n_total.ok_or_else(|| AnyonError::InvalidParameter("run.n_total missing".into()))?;
                let avg = averaged_state(&rho, &ps[0], n_total)?;
                let check = avg.check_state();
                let payload = json!({
                    "n_total": n_total,
                    "averaged": self.state_json(&avg),
                    "state_checks": check,
                });
                Ok(self.record("run", check.passed(), payload))
            }
            RunMode::Sampling => self.sampling(&rho, &ps, &part),
        }
    }

    fn sampling(&self, rho: &PairDensityMatrix, ps: &[PCoefficients], part: &ChargeClassPartition) -> anyonic::Result<ResultRecord> {
        let run = &self.exp.config.run;
        let steps = run.steps.ok_or_else(|| AnyonError::InvalidParameter("run.steps missing".into()))?;
        let base = self.seed.or(run.seed).unwrap_or(0);
        let seeds: Vec<u64> = match (&run.seeds, run.seed_count) {
            (Some(s), _) => s.clone(),
            (None, Some(k)) => (0..k).map(|i| base.wrapping_add(i)).collect(),
            (None, None) => vec![base],
        };
        let prs = part.class_probabilities(rho);
        let runs: Vec<anyonic::Result<Value>> = seeds
            .par_iter()
            .map(|&seed| {
                let r = sample_run(rho, ps, steps, seed, run.reset)?;
                let fin = r.state();
                let fin_prs = part.class_probabilities(fin);
                let kappa = (0..fin_prs.len()).max_by(|&i, &j| fin_prs[i].total_cmp(&fin_prs[j])).unwrap_or(0);
                let dist = if run.reset || ps.len() != 1 {
                    None
                } else {
                    fixed_state(rho, &ps[0], part, kappa).ok().map(|(_, fx)| fx.distance(fin))
                };
                let rights = r.outcomes.iter().filter(|b| **b == 0).count();
                let mut v = json!({
                    "seed": seed,
                    "rights": rights,
                    "r": rights as f64 / steps.max(1) as f64,
                    "class": kappa,
                    "class_weight": fin_prs[kappa],
                    "distance_to_fixed": dist,
                });
                if run.include_sequences {
                    v["outcomes"] = json!(r.bit_string());
                    v["final_state"] = json!(self.state_json(fin));
                }
                Ok(v)
            })
            .collect();
        let runs = runs.into_iter().collect::<anyonic::Result<Vec<_>>>()?;
        let total = runs.len() as f64;
        let mut stats = Vec::new();
        let mut ok = true;
        for (k, &p) in prs.iter().enumerate() {
            let count = runs.iter().filter(|r| r["class"] == json!(k)).count() as f64;
            let sigma = (total * p * (1.0 - p)).sqrt();
            let within = (count - total * p).abs() <= 3.0 * sigma.max(f64::EPSILON) || (p * (1.0 - p) == 0.0 && (count - total * p).abs() < 0.5);
            ok &= within;
            stats.push(json!({"class": k, "expected": p, "count": count, "frequency": count / total, "sigma": sigma, "within_3_sigma": within}));
        }
        let payload = json!({
            "steps": steps,
            "seeds": seeds,
            "class_statistics": stats,
            "partition": self.partition_json(part, rho),
            "runs": runs,
        });
        Ok(self.record("run", ok, payload))
    }

    pub fn curve(&self) -> anyonic::Result<(ResultRecord, String)> {
        let exp = self.exp;
        if exp.config.device != Device::Fqh {
            return Err(AnyonError::InvalidParameter("curve needs device = fqh".into()));
        }
        let s = exp.fqh_settings()?;
        let b = exp.fqh_probe()?;
        let points = exp.config.run.beta_points.unwrap_or(64);
        let kmax = exp.config.run.harmonics.unwrap_or(4).min(points / 2);
        if points < 2 {
            return Err(AnyonError::InvalidParameter("beta_points must be at least 2".into()));
        }
        let grid = beta_grid(points);
        let mut targets: Vec<(String, PairDensityMatrix)> = Vec::new();
        match &exp.config.run.curve_charges {
            Some(list) => {
                for l in list {
                    let a = exp.charge(l)?;
                    let k = anyonic::state_space::Ket::new(a, exp.model.dual(a), exp.model.vacuum(), 0);
                    let rho = PairDensityMatrix::new(std::sync::Arc::clone(&exp.model), [((k, k), num_complex::Complex64::new(1.0, 0.0))], None)?;
                    targets.push((l.clone(), rho));
                }
            }
            None => targets.push(("target".into(), exp.target()?)),
        }
        let mut curves = Vec::new();
        let mut csv = String::from("target,beta,g_relative\n");
        for (name, rho) in &targets {
            let pts: Vec<anyonic::Result<(f64, f64)>> =
                grid.par_iter().map(|&beta| conductance_curve(rho, b, &s, &[beta]).map(|v| v[0])).collect();
            let pts = pts.into_iter().collect::<anyonic::Result<Vec<_>>>()?;
            let vals: Vec<f64> = pts.iter().map(|x| x.1).collect();
            let h = harmonics(&vals, kmax);
            let dominant = (1..h.len()).max_by(|&i, &j| h[i].total_cmp(&h[j]));
            for (beta, g) in &pts {
                csv.push_str(&format!("{name},{beta},{g}\n"));
            }
            curves.push(json!({
                "target": name,
                "beta": grid,
                "g_relative": vals,
                "harmonics": h,
                "dominant_harmonic": dominant,
            }));
        }
        let ratios: Vec<Value> = if curves.len() > 1 {
            let base = curves[0]["harmonics"][1].as_f64().unwrap_or(0.0);
            curves
                .iter()
                .map(|c| {
                    let a1 = c["harmonics"][1].as_f64().unwrap_or(0.0);
                    json!({"target": c["target"], "harmonic1_ratio_to_first": if base > 0.0 { Some(a1 / base) } else { None }})
                })
                .collect()
        } else {
            Vec::new()
        };
        let payload = json!({"probe": self.label(b), "curves": curves, "fringe_ratios": ratios});
        Ok((self.record("curve", true, payload), csv))
    }

    pub fn plan(&self) -> anyonic::Result<ResultRecord> {
        let exp = self.exp;
        let run = &exp.config.run;
        let alpha = run.alpha.unwrap_or(0.0455);
        let zs = z_star(alpha)?;
        let est = |e: ProbeEstimate| serde_json::to_value(e).expect("estimate serializes");
        let mut rows = Vec::new();
        let pairs: Vec<(String, f64, f64)> = match run.p {
            Some((p1, p2)) => vec![("given".into(), p1, p2)],
            None => {
                let ps = self.coefficients()?;
                let part = charge_classes(&exp.model, &ps[0], exp.config.tolerances.class_tol);
                let mut v = Vec::new();
                for i in 0..part.classes.len() {
                    for j in i + 1..part.classes.len() {
                        v.push((format!("{i}-{j}"), part.classes[i].p, part.classes[j].p));
                    }
                }
                v
            }
        };
        for (name, p1, p2) in pairs {
            rows.push(json!({
                "pair": name,
                "p": [p1, p2],
                "exact": est(probes_needed(p1, p2, alpha)?),
                "conservative": est(probes_needed_conservative((p1 - p2).abs(), alpha)?),
            }));
        }
        let mut payload = json!({"alpha": alpha, "z_star": zs, "estimates": rows});
        if let (Some(t), Some(dm)) = (run.t, run.dm) {
            payload["small_t"] = est(probes_needed_small_t(t, dm, alpha)?);
            if let Some(i) = run.current {
                payload["tau_seconds"] = json!(measurement_time(t, dm, alpha, i)?);
            }
        }
        Ok(self.record("plan", true, payload))
    }
}
