//! Model-definition files: JSON with labelled charges and explicit `[re, im]` pairs.
//!
//! Export is canonical (charges in model order, fusion/F/R entries sorted, zeros
//! dropped), so `export(import(export(m)))` is byte-identical to `export(m)`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anyon_model::{AnyonModel, FKey, FSymbolTable, RSymbolTable};
use crate::charge_algebra::{FusionAlgebra, FusionTensor};
use crate::error::{AnyonError, Result};
use crate::model_library::FqhData;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeDecl {
    pub label: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vacuum: bool,
}

/// `N_ab^c` as `[a, b, c, N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionDecl(pub String, pub String, pub String, pub u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FEntry {
    /// `[a, b, c, d, e, f]` of `[F^{abc}_d]_{ef}`.
    pub index: [String; 6],
    /// `[α, β, μ, ν]`; omitted when all zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mult: Option<[usize; 4]>,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct REntry {
    /// `[a, b, c]` of `R^{ab}_c`.
    pub index: [String; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mult: Option<[usize; 2]>,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FqhDecl {
    pub quasihole: String,
    pub electron: String,
    /// The quasihole carries electric charge `1/electric_unit`.
    pub electric_unit: i64,
    pub period: i64,
    /// Quasihole count per charge label.
    pub counts: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub charges: Vec<ChargeDecl>,
    pub fusion: Vec<FusionDecl>,
    #[serde(rename = "F")]
    pub f: Vec<FEntry>,
    #[serde(rename = "R")]
    pub r: Vec<REntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fqh: Option<FqhDecl>,
}

fn c2(v: Complex64) -> [f64; 2] {
    [v.re, v.im]
}

impl ModelFile {
    pub fn from_model(model: &AnyonModel) -> Self {
        let lab = |a: usize| model.label(a).to_string();
        let charges = (0..model.size()).map(|a| ChargeDecl { label: lab(a), vacuum: a == model.vacuum() }).collect();
        let mut fusion: Vec<_> = model.tensor().entries().filter(|(_, &m)| m > 0).map(|(&k, &m)| (k, m)).collect();
        fusion.sort_unstable();
        let fusion = fusion.into_iter().map(|((a, b, c), m)| FusionDecl(lab(a), lab(b), lab(c), m)).collect();
        let f = model
            .f_symbols()
            .entries()
            .into_iter()
            .map(|(k, v)| {
                let mult = [k.e.1, k.e.2, k.f.1, k.f.2];
                FEntry {
                    index: [lab(k.a), lab(k.b), lab(k.c), lab(k.d), lab(k.e.0), lab(k.f.0)],
                    mult: (mult != [0; 4]).then_some(mult),
                    value: c2(v),
                }
            })
            .collect();
        let mut r_raw = Vec::new();
        for (&(a, b, c), mat) in model.r_symbols().iter() {
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    if mat[(i, j)] != Complex64::new(0.0, 0.0) {
                        r_raw.push(((a, b, c, i, j), mat[(i, j)]));
                    }
                }
            }
        }
        r_raw.sort_by(|x, y| x.0.cmp(&y.0));
        let r = r_raw
            .into_iter()
            .map(|((a, b, c, i, j), v)| REntry {
                index: [lab(a), lab(b), lab(c)],
                mult: (i != 0 || j != 0).then_some([i, j]),
                value: c2(v),
            })
            .collect();
        let fqh = model.fqh().map(|d| FqhDecl {
            quasihole: lab(d.quasihole),
            electron: lab(d.electron),
            electric_unit: d.electric_den,
            period: d.period,
            counts: d.counts.iter().enumerate().map(|(a, &n)| (lab(a), n)).collect(),
        });
        ModelFile { name: model.name().to_string(), charges, fusion, f, r, fqh }
    }

    pub fn to_model(&self) -> Result<AnyonModel> {
        let labels: Vec<String> = self.charges.iter().map(|c| c.label.clone()).collect();
        let mut index = HashMap::new();
        for (i, c) in self.charges.iter().enumerate() {
            let l = &c.label;
            if index.insert(l.as_str(), i).is_some() {
                return Err(AnyonError::InvalidModel(format!("duplicate charge label `{l}`")));
            }
        }
        let vac: Vec<usize> = self.charges.iter().enumerate().filter(|(_, c)| c.vacuum).map(|(i, _)| i).collect();
        let [vacuum] = vac[..] else {
            return Err(AnyonError::InvalidModel(format!("expected exactly one vacuum charge, found {}", vac.len())));
        };
        let look = |l: &str| index.get(l).copied().ok_or_else(|| AnyonError::UnknownCharge(l.to_string()));
        let mut fus = Vec::new();
        for FusionDecl(a, b, c, m) in &self.fusion {
            fus.push(((look(a)?, look(b)?, look(c)?), *m));
        }
        let tensor = FusionTensor::new(labels.len(), vacuum, fus);
        let alg = FusionAlgebra::new(labels, tensor)?;
        let mut fe = Vec::new();
        for e in &self.f {
            let [a, b, c, d, x, y] = &e.index;
            let [al, be, mu, nu] = e.mult.unwrap_or([0; 4]);
            let key = FKey { a: look(a)?, b: look(b)?, c: look(c)?, d: look(d)?, e: (look(x)?, al, be), f: (look(y)?, mu, nu) };
            fe.push((key, Complex64::new(e.value[0], e.value[1])));
        }
        let mut re = Vec::new();
        for e in &self.r {
            let [a, b, c] = &e.index;
            let [i, j] = e.mult.unwrap_or([0; 2]);
            re.push(((look(a)?, look(b)?, look(c)?, i, j), Complex64::new(e.value[0], e.value[1])));
        }
        let f = FSymbolTable::from_entries(&alg, fe);
        let r = RSymbolTable::from_entries(&alg, re);
        let mut model = AnyonModel::new(self.name.clone(), alg, f, r);
        if let Some(q) = &self.fqh {
            let mut counts = vec![0; model.size()];
            for (l, &n) in &q.counts {
                counts[look(l)?] = n;
            }
            if q.counts.len() != model.size() {
                return Err(AnyonError::InvalidModel("fqh.counts must list every charge".into()));
            }
            if q.period <= 0 || q.electric_unit <= 0 {
                return Err(AnyonError::InvalidModel("fqh period and electric_unit must be positive".into()));
            }
            let data = FqhData {
                quasihole: look(&q.quasihole)?,
                electron: look(&q.electron)?,
                electric_den: q.electric_unit,
                counts,
                period: q.period,
            };
            model = model.with_fqh(data);
        }
        Ok(model)
    }
}

/// Parses JSON text, reporting line and column on failure.
pub fn parse_model(text: &str) -> Result<ModelFile> {
    serde_json::from_str(text).map_err(|e| AnyonError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub fn import_model(text: &str) -> Result<AnyonModel> {
    parse_model(text)?.to_model()
}

pub fn read_model(path: &Path) -> Result<AnyonModel> {
    let text = std::fs::read_to_string(path).map_err(|e| AnyonError::Parse(format!("{}: {e}", path.display())))?;
    import_model(&text).map_err(|e| match e {
        AnyonError::Parse(m) => AnyonError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn export_model(model: &AnyonModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model files always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_library::{builtin, ising, moore_read};

    #[test]
    fn builtins_round_trip_bit_identically() {
        for name in ["ising", "fib", "fib_bar", "moore_read", "rr_bar_31", "trivial", "z_n:8:1/2", "z_n:10:3", "hierarchy:1:3"] {
            let m = builtin(name).unwrap();
            let text = export_model(&m);
            let back = import_model(&text).unwrap();
            assert_eq!(export_model(&back), text, "{name}");
            assert!(back.verify_model().passed(), "{name}");
            assert_eq!(back.fqh().is_some(), m.fqh().is_some());
        }
    }

    #[test]
    fn imported_model_matches_original() {
        let m = moore_read();
        let back = import_model(&export_model(&m)).unwrap();
        assert!((back.total_dimension() - 4.0).abs() < 1e-12);
        for a in 0..m.size() {
            assert!((back.theta(a) - m.theta(a)).norm() == 0.0);
            assert_eq!(back.fqh().unwrap().sector(a), m.fqh().unwrap().sector(a));
        }
    }

    #[test]
    fn parse_error_has_position() {
        let err = import_model("{\n  \"name\": \"x\",\n  oops\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_label_rejected() {
        let mut f = ModelFile::from_model(&ising());
        f.fusion.push(FusionDecl("sigma".into(), "tau".into(), "1".into(), 1));
        assert!(matches!(f.to_model(), Err(AnyonError::UnknownCharge(_))));
    }

    #[test]
    fn corrupted_r_fails_ribbon() {
        let mut f = ModelFile::from_model(&ising());
        for e in &mut f.r {
            if e.index == ["sigma", "psi", "sigma"] || e.index == ["psi", "sigma", "sigma"] {
                e.value = [1.0, 0.0];
            }
        }
        let rep = f.to_model().unwrap().verify_model();
        assert!(!rep.passed());
        assert!(!rep.report.check("ribbon property").unwrap().passed);
    }
}
