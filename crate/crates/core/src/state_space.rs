//! Pair density matrices `ρ^A` over `|a,c;f,μ⟩`.
//!
//! Stored coefficients follow the convention in which the operator reads
//! `Σ ρ_{(a,c;f,μ)(a',c';f,μ')} (1/d_f) |a,c;f,μ⟩⟨a',c';f,μ'|`, so the quantum trace is the
//! plain diagonal sum.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anyon_model::AnyonModel;
use crate::charge_algebra::Charge;
use crate::error::{AnyonError, Result};
use crate::report::{Check, ValidationReport};

pub const STATE_TOL: f64 = 1e-9;

/// Basis label `|a,c;f,μ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ket {
    pub a: Charge,
    pub c: Charge,
    pub f: Charge,
    pub mu: usize,
}

impl Ket {
    pub fn new(a: Charge, c: Charge, f: Charge, mu: usize) -> Self {
        Ket { a, c, f, mu }
    }
}

/// One serialized coefficient with charge labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEntry {
    pub ket: (String, String, String, usize),
    pub bra: (String, String, String, usize),
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone)]
pub struct PairDensityMatrix {
    model: Arc<AnyonModel>,
    coeff: BTreeMap<(Ket, Ket), Complex64>,
    superselection: Option<Vec<i64>>,
}

fn check_ket(model: &AnyonModel, k: &Ket) -> Result<()> {
    let n = model.size();
    if k.a >= n || k.c >= n || k.f >= n {
        return Err(AnyonError::UnknownCharge(format!("{k:?}")));
    }
    if k.mu >= model.n(k.a, k.c, k.f) as usize {
        return Err(AnyonError::InvalidState(format!(
            "{} x {} -> {} has no vertex index {}",
            model.label(k.a),
            model.label(k.c),
            model.label(k.f),
            k.mu
        )));
    }
    Ok(())
}

impl PairDensityMatrix {
    /// Builds from raw coefficients. Entries whose ket and bra carry different `f` are rejected.
    pub fn new<I>(model: Arc<AnyonModel>, entries: I, superselection: Option<Vec<i64>>) -> Result<Self>
    where
        I: IntoIterator<Item = ((Ket, Ket), Complex64)>,
    {
        let mut coeff = BTreeMap::new();
        for ((x, y), v) in entries {
            check_ket(&model, &x)?;
            check_ket(&model, &y)?;
            if x.f != y.f {
                return Err(AnyonError::InvalidState(format!(
                    "ket and bra carry different total charge ({} vs {})",
                    model.label(x.f),
                    model.label(y.f)
                )));
            }
            if v != Complex64::new(0.0, 0.0) {
                *coeff.entry((x, y)).or_insert(Complex64::new(0.0, 0.0)) += v;
            }
        }
        if let Some(s) = &superselection {
            if s.len() != model.size() {
                return Err(AnyonError::InvalidParameter("superselection table has the wrong length".into()));
            }
        }
        Ok(PairDensityMatrix { model, coeff, superselection })
    }

    /// `|ψ⟩⟨ψ|` for normalized amplitudes.
    pub fn from_pure(model: Arc<AnyonModel>, amps: &[(Ket, Complex64)], superselection: Option<Vec<i64>>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|(_, z)| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(AnyonError::InvalidState(format!("amplitudes have norm^2 {norm}")));
        }
        let entries = amps
            .iter()
            .flat_map(|&(x, zx)| amps.iter().filter(move |(y, _)| y.f == x.f).map(move |&(y, zy)| ((x, y), zx * zy.conj())));
        Self::new(model, entries, superselection)
    }

    /// Electric-charge superselection from the model's quantum Hall metadata.
    pub fn electric_sectors(model: &AnyonModel) -> Option<Vec<i64>> {
        model.fqh().map(|q| (0..model.size()).map(|a| q.sector(a)).collect())
    }

    pub fn model(&self) -> &Arc<AnyonModel> {
        &self.model
    }

    pub fn superselection(&self) -> Option<&[i64]> {
        self.superselection.as_deref()
    }

    pub fn get(&self, x: Ket, y: Ket) -> Complex64 {
        self.coeff.get(&(x, y)).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(Ket, Ket), &Complex64)> {
        self.coeff.iter()
    }

    pub fn len(&self) -> usize {
        self.coeff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeff.is_empty()
    }

    pub fn quantum_trace(&self) -> Complex64 {
        self.coeff.iter().filter(|((x, y), _)| x == y).map(|(_, v)| *v).sum()
    }

    pub fn standard_trace(&self) -> Complex64 {
        self.coeff
            .iter()
            .filter(|((x, y), _)| x == y)
            .map(|((x, _), v)| *v / self.model.dim(x.f))
            .sum()
    }

    /// Marginal distribution of the target charge `a`.
    pub fn trace_out_partner(&self) -> BTreeMap<Charge, f64> {
        let mut out = BTreeMap::new();
        for ((x, y), v) in &self.coeff {
            if x == y {
                *out.entry(x.a).or_insert(0.0) += v.re;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.coeff.values_mut() {
            *v *= s;
        }
        out
    }

    /// `self + other` (same model assumed).
    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.coeff {
            *out.coeff.entry(*k).or_default() += *v;
        }
        out
    }

    /// Largest coefficient-wise difference.
    pub fn distance(&self, other: &Self) -> f64 {
        let keys: BTreeSet<_> = self.coeff.keys().chain(other.coeff.keys()).collect();
        keys.into_iter()
            .map(|k| (self.coeff.get(k).copied().unwrap_or_default() - other.coeff.get(k).copied().unwrap_or_default()).norm())
            .fold(0.0, f64::max)
    }

    /// Hermitian coefficient matrix of one total-charge block, over its `(a,c,μ)` labels.
    pub fn f_block(&self, f: Charge) -> (Vec<Ket>, DMatrix<Complex64>) {
        let labels: Vec<Ket> = self
            .coeff
            .keys()
            .filter(|(x, _)| x.f == f)
            .flat_map(|(x, y)| [*x, *y])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos = |k: &Ket| labels.binary_search(k).expect("label present");
        let mut m = DMatrix::zeros(labels.len(), labels.len());
        for ((x, y), v) in self.coeff.iter().filter(|((x, _), _)| x.f == f) {
            m[(pos(x), pos(y))] = *v;
        }
        (labels, m)
    }

    pub fn check_state(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let lab = |k: &Ket| {
            format!("({},{};{},{})", self.model.label(k.a), self.model.label(k.c), self.model.label(k.f), k.mu)
        };

        let mut herm = Check::new("hermiticity");
        for ((x, y), v) in &self.coeff {
            let r = (*v - self.get(*y, *x).conj()).norm();
            herm.residual(r, STATE_TOL, || format!("{} / {}", lab(x), lab(y)));
        }
        report.push(herm);

        let mut trace = Check::new("unit quantum trace");
        let tr = self.quantum_trace();
        trace.residual((tr - Complex64::new(1.0, 0.0)).norm(), STATE_TOL, || format!("trace = {tr}"));
        report.push(trace);

        let mut psd = Check::new("positivity");
        let fs: BTreeSet<Charge> = self.coeff.keys().map(|(x, _)| x.f).collect();
        for f in fs {
            let (_, m) = self.f_block(f);
            let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
            let min = h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            psd.residual((-min).max(0.0), STATE_TOL, || format!("f = {} has eigenvalue {min:e}", self.model.label(f)));
        }
        report.push(psd);

        let mut sec = Check::new("superselection");
        if let Some(s) = &self.superselection {
            for ((x, y), v) in &self.coeff {
                if (s[x.a] != s[y.a] || s[x.c] != s[y.c]) && v.norm() > STATE_TOL {
                    sec.fail(format!("{} / {} couples sectors", lab(x), lab(y)));
                }
            }
        }
        report.push(sec);
        report
    }

    /// Applies a map diagonal in the difference charge `e`: every `(a,c,a',c')` block is moved
    /// to the `e` basis, its components scaled by `factor(a, a', e)`, and moved back.
    pub fn apply_e_map<G>(&self, mut factor: G) -> Result<Self>
    where
        G: FnMut(Charge, Charge, Charge) -> Complex64,
    {
        let model = &self.model;
        let mut groups: BTreeMap<[Charge; 4], Vec<(Ket, Ket, Complex64)>> = BTreeMap::new();
        for ((x, y), v) in &self.coeff {
            groups.entry([x.a, x.c, y.a, y.c]).or_default().push((*x, *y, *v));
        }
        let mut out = BTreeMap::new();
        for ([a, c, a2, c2], items) in groups {
            let mv = model.bent(a, c, a2, c2);
            let inv = mv.inverse.as_ref().ok_or_else(|| {
                AnyonError::Inconsistent(format!(
                    "bent F-move ({},{},{},{}) is not invertible",
                    model.label(a),
                    model.label(c),
                    model.label(a2),
                    model.label(c2)
                ))
            })?;
            let cols = &mv.block.cols;
            let rows = &mv.block.rows;
            let mut vecf = vec![Complex64::new(0.0, 0.0); cols.len()];
            for (x, y, v) in items {
                let j = cols
                    .iter()
                    .position(|&(f, mu, nu)| f == x.f && mu == x.mu && nu == y.mu)
                    .expect("admissible coefficient has a bent column");
                vecf[j] = v / model.dim(x.f).sqrt();
            }
            let mut w = vec![Complex64::new(0.0, 0.0); rows.len()];
            for (i, &(e, _, _)) in rows.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, vf) in vecf.iter().enumerate() {
                    acc += vf * inv[(j, i)];
                }
                w[i] = acc * factor(a, a2, e);
            }
            for (j, &(f, mu, nu)) in cols.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, wi) in w.iter().enumerate() {
                    acc += wi * mv.block.mat[(i, j)];
                }
                acc *= model.dim(f).sqrt();
                if acc.norm() > 1e-300 {
                    out.insert((Ket::new(a, c, f, mu), Ket::new(a2, c2, f, nu)), acc);
                }
            }
        }
        Ok(PairDensityMatrix { model: Arc::clone(&self.model), coeff: out, superselection: self.superselection.clone() })
    }

    /// Drops numerically vanishing coefficients.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.coeff.retain(|_, v| v.norm() > tol);
        self
    }

    pub fn to_entries(&self) -> Vec<DensityEntry> {
        let m = &self.model;
        let l = |k: &Ket| (m.label(k.a).to_string(), m.label(k.c).to_string(), m.label(k.f).to_string(), k.mu);
        self.coeff
            .iter()
            .map(|((x, y), v)| DensityEntry { ket: l(x), bra: l(y), re: v.re, im: v.im })
            .collect()
    }

    pub fn from_entries(model: Arc<AnyonModel>, entries: &[DensityEntry], superselection: Option<Vec<i64>>) -> Result<Self> {
        let parse = |t: &(String, String, String, usize)| -> Result<Ket> {
            Ok(Ket::new(model.charge(&t.0)?, model.charge(&t.1)?, model.charge(&t.2)?, t.3))
        };
        let items = entries
            .iter()
            .map(|e| Ok(((parse(&e.ket)?, parse(&e.bra)?), Complex64::new(e.re, e.im))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Arc::clone(&model), items, superselection)
    }
}
