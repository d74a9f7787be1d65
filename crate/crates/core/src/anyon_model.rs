//! F- and R-symbols, derived topological data (spins, S, monodromy) and the
//! consistency suite run by [`AnyonModel::verify_model`].

use std::collections::HashMap;
use std::ops::Deref;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charge_algebra::{validate_fusion, Charge, FusionAlgebra};
use crate::error::{AnyonError, Result};
use crate::model_library::FqhData;
use crate::report::{Check, ValidationReport};

pub const MODEL_TOL: f64 = 1e-9;

/// A fusion-space basis label: an intermediate charge with the multiplicity indices of
/// its two vertices (zero-based).
pub type Channel = (Charge, usize, usize);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One F-move matrix with explicit row and column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FBlock {
    pub rows: Vec<Channel>,
    pub cols: Vec<Channel>,
    pub mat: DMatrix<Complex64>,
}

impl FBlock {
    pub fn get(&self, row: Channel, col: Channel) -> Complex64 {
        match (self.rows.iter().position(|&r| r == row), self.cols.iter().position(|&c| c == col)) {
            (Some(i), Some(j)) => self.mat[(i, j)],
            _ => ZERO,
        }
    }

    fn unitarity_residual(&self) -> f64 {
        if self.rows.len() != self.cols.len() {
            return f64::INFINITY;
        }
        let n = self.rows.len();
        let prod = &self.mat * self.mat.adjoint();
        (prod - DMatrix::<Complex64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Key of one upper F-symbol `[F_d^{abc}]_{(e,α,β)(f,μ,ν)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FKey {
    pub a: Charge,
    pub b: Charge,
    pub c: Charge,
    pub d: Charge,
    pub e: Channel,
    pub f: Channel,
}

/// Upper F-symbols, stored per admissible `(a,b,c,d)`.
#[derive(Debug, Clone, Default)]
pub struct FSymbolTable {
    blocks: HashMap<[Charge; 4], FBlock>,
}

pub fn upper_rows(alg: &FusionAlgebra, a: Charge, b: Charge, c: Charge, d: Charge) -> Vec<Channel> {
    let mut out = Vec::new();
    for &(e, nab) in alg.products(a, b) {
        let nec = alg.n(e, c, d) as usize;
        for al in 0..nab as usize {
            for be in 0..nec {
                out.push((e, al, be));
            }
        }
    }
    out
}

pub fn upper_cols(alg: &FusionAlgebra, a: Charge, b: Charge, c: Charge, d: Charge) -> Vec<Channel> {
    let mut out = Vec::new();
    for &(f, nbc) in alg.products(b, c) {
        let naf = alg.n(a, f, d) as usize;
        for mu in 0..nbc as usize {
            for nu in 0..naf {
                out.push((f, mu, nu));
            }
        }
    }
    out
}

/// Every `d` reachable as `(a b) c`.
fn totals(alg: &FusionAlgebra, a: Charge, b: Charge, c: Charge) -> Vec<Charge> {
    let mut ds: Vec<Charge> = alg
        .products(a, b)
        .iter()
        .flat_map(|&(e, _)| alg.products(e, c).iter().map(|&(d, _)| d))
        .collect();
    ds.sort_unstable();
    ds.dedup();
    ds
}

impl FSymbolTable {
    /// Multiplicity-free constructor from a closure `(a,b,c,d,e,f) -> [F_d^{abc}]_{ef}`.
    pub fn from_fn<G>(alg: &FusionAlgebra, g: G) -> Self
    where
        G: Fn(Charge, Charge, Charge, Charge, Charge, Charge) -> Complex64,
    {
        let n = alg.size();
        let mut blocks = HashMap::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in totals(alg, a, b, c) {
                        let rows = upper_rows(alg, a, b, c, d);
                        let cols = upper_cols(alg, a, b, c, d);
                        let mat = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
                            g(a, b, c, d, rows[i].0, cols[j].0)
                        });
                        blocks.insert([a, b, c, d], FBlock { rows, cols, mat });
                    }
                }
            }
        }
        FSymbolTable { blocks }
    }

    /// Builds blocks from sparse entries; entries missing from an admissible block are zero
    /// and entries at inadmissible positions are ignored.
    pub fn from_entries<I>(alg: &FusionAlgebra, entries: I) -> Self
    where
        I: IntoIterator<Item = (FKey, Complex64)>,
    {
        let lookup: HashMap<FKey, Complex64> = entries.into_iter().collect();
        let n = alg.size();
        let mut blocks = HashMap::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in totals(alg, a, b, c) {
                        let rows = upper_rows(alg, a, b, c, d);
                        let cols = upper_cols(alg, a, b, c, d);
                        let mat = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
                            let key = FKey { a, b, c, d, e: rows[i], f: cols[j] };
                            lookup.get(&key).copied().unwrap_or(ZERO)
                        });
                        blocks.insert([a, b, c, d], FBlock { rows, cols, mat });
                    }
                }
            }
        }
        FSymbolTable { blocks }
    }

    pub fn from_blocks(blocks: HashMap<[Charge; 4], FBlock>) -> Self {
        FSymbolTable { blocks }
    }

    pub fn block(&self, a: Charge, b: Charge, c: Charge, d: Charge) -> Option<&FBlock> {
        self.blocks.get(&[a, b, c, d])
    }

    /// `[F_d^{abc}]_{ef}`; zero whenever a vertex is inadmissible.
    pub fn get(&self, a: Charge, b: Charge, c: Charge, d: Charge, e: Channel, f: Channel) -> Complex64 {
        self.block(a, b, c, d).map_or(ZERO, |blk| blk.get(e, f))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&[Charge; 4], &FBlock)> {
        self.blocks.iter()
    }

    /// All entries in canonical order, zeros dropped.
    pub fn entries(&self) -> Vec<(FKey, Complex64)> {
        let mut out = Vec::new();
        for (&[a, b, c, d], blk) in &self.blocks {
            for (i, &e) in blk.rows.iter().enumerate() {
                for (j, &f) in blk.cols.iter().enumerate() {
                    let v = blk.mat[(i, j)];
                    if v != ZERO {
                        out.push((FKey { a, b, c, d, e, f }, v));
                    }
                }
            }
        }
        out.sort_by(|x, y| x.0.cmp(&y.0));
        out
    }
}

/// R-symbols `[R_c^{ab}]_{μν}` as matrices over the vertex multiplicity.
#[derive(Debug, Clone, Default)]
pub struct RSymbolTable {
    entries: HashMap<(Charge, Charge, Charge), DMatrix<Complex64>>,
}

impl RSymbolTable {
    pub fn from_fn<G>(alg: &FusionAlgebra, g: G) -> Self
    where
        G: Fn(Charge, Charge, Charge) -> Complex64,
    {
        let n = alg.size();
        let mut entries = HashMap::new();
        for a in 0..n {
            for b in 0..n {
                for &(c, m) in alg.products(a, b) {
                    let m = m as usize;
                    let mut mat = DMatrix::zeros(m, m);
                    let v = g(a, b, c);
                    for i in 0..m {
                        mat[(i, i)] = v;
                    }
                    entries.insert((a, b, c), mat);
                }
            }
        }
        RSymbolTable { entries }
    }

    /// Sparse entries keyed by `(a, b, c, μ, ν)`; missing entries are zero.
    pub fn from_entries<I>(alg: &FusionAlgebra, entries: I) -> Self
    where
        I: IntoIterator<Item = ((Charge, Charge, Charge, usize, usize), Complex64)>,
    {
        let lookup: HashMap<_, _> = entries.into_iter().collect();
        let n = alg.size();
        let mut out = HashMap::new();
        for a in 0..n {
            for b in 0..n {
                for &(c, m) in alg.products(a, b) {
                    let m = m as usize;
                    let mat = DMatrix::from_fn(m, m, |i, j| lookup.get(&(a, b, c, i, j)).copied().unwrap_or(ZERO));
                    out.insert((a, b, c), mat);
                }
            }
        }
        RSymbolTable { entries: out }
    }

    pub fn from_map(entries: HashMap<(Charge, Charge, Charge), DMatrix<Complex64>>) -> Self {
        RSymbolTable { entries }
    }

    pub fn get(&self, a: Charge, b: Charge, c: Charge) -> Option<&DMatrix<Complex64>> {
        self.entries.get(&(a, b, c))
    }

    pub fn get_mut(&mut self, a: Charge, b: Charge, c: Charge) -> Option<&mut DMatrix<Complex64>> {
        self.entries.get_mut(&(a, b, c))
    }

    /// Leading diagonal entry; zero when the vertex is inadmissible.
    pub fn scalar(&self, a: Charge, b: Charge, c: Charge) -> Complex64 {
        self.get(a, b, c).filter(|m| m.nrows() > 0).map_or(ZERO, |m| m[(0, 0)])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Charge, Charge, Charge), &DMatrix<Complex64>)> {
        self.entries.iter()
    }
}

/// A bent F-move `[F_{cd}^{ab}]` with its inverse, as used by the density-matrix updates.
#[derive(Debug, Clone)]
pub struct BentMove {
    pub block: FBlock,
    pub inverse: Option<DMatrix<Complex64>>,
}

/// Outcome of [`AnyonModel::verify_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub model: String,
    pub report: ValidationReport,
    pub modular: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

pub struct AnyonModel {
    name: String,
    algebra: FusionAlgebra,
    f: FSymbolTable,
    r: RSymbolTable,
    theta: Vec<Complex64>,
    s: DMatrix<Complex64>,
    m: DMatrix<Complex64>,
    fqh: Option<FqhData>,
    bent_cache: RwLock<HashMap<[Charge; 4], Arc<BentMove>>>,
}

impl std::fmt::Debug for AnyonModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnyonModel")
            .field("name", &self.name)
            .field("charges", &self.algebra.labels())
            .finish_non_exhaustive()
    }
}

impl Deref for AnyonModel {
    type Target = FusionAlgebra;
    fn deref(&self) -> &FusionAlgebra {
        &self.algebra
    }
}

impl AnyonModel {
    /// Assembles a model and derives spins, S and M. Inconsistent symbol data is accepted
    /// here and surfaced by [`verify_model`](Self::verify_model).
    pub fn new(name: impl Into<String>, algebra: FusionAlgebra, f: FSymbolTable, r: RSymbolTable) -> Self {
        let n = algebra.size();
        let theta: Vec<Complex64> = (0..n)
            .map(|a| {
                let mut t = ZERO;
                for &(c, _) in algebra.products(a, a) {
                    if let Some(rm) = r.get(a, a, c) {
                        t += rm.trace() * (algebra.dim(c) / algebra.dim(a));
                    }
                }
                t
            })
            .collect();
        let big_d = algebra.total_dimension();
        let s = DMatrix::from_fn(n, n, |a, b| {
            let mut acc = ZERO;
            for &(c, m) in algebra.products(a, b) {
                acc += theta[c] / (theta[a] * theta[b]) * (f64::from(m) * algebra.dim(c));
            }
            acc / big_d
        });
        let m = DMatrix::from_fn(n, n, |a, b| {
            let mut acc = ZERO;
            for &(c, mult) in algebra.products(a, b) {
                acc += theta[c] / (theta[a] * theta[b]) * (f64::from(mult) * algebra.dim(c));
            }
            acc / (algebra.dim(a) * algebra.dim(b))
        });
        AnyonModel {
            name: name.into(),
            algebra,
            f,
            r,
            theta,
            s,
            m,
            fqh: None,
            bent_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_fqh(mut self, fqh: FqhData) -> Self {
        self.fqh = Some(fqh);
        self
    }

    pub fn fqh(&self) -> Option<&FqhData> {
        self.fqh.as_ref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> &FusionAlgebra {
        &self.algebra
    }

    pub fn f_symbols(&self) -> &FSymbolTable {
        &self.f
    }

    pub fn r_symbols(&self) -> &RSymbolTable {
        &self.r
    }

    /// Unchecked spin.
    #[inline]
    pub fn theta(&self, a: Charge) -> Complex64 {
        self.theta[a]
    }

    pub fn topological_spin(&self, a: Charge) -> Result<Complex64> {
        self.algebra.conjugate(a)?;
        let t = self.theta[a];
        if (t.norm() - 1.0).abs() > MODEL_TOL {
            return Err(AnyonError::Inconsistent(format!(
                "topological spin of {} has modulus {}",
                self.label(a),
                t.norm()
            )));
        }
        Ok(t)
    }

    pub fn s_matrix(&self) -> &DMatrix<Complex64> {
        &self.s
    }

    /// Unchecked monodromy scalar (spin-sum route).
    #[inline]
    pub fn m(&self, a: Charge, b: Charge) -> Complex64 {
        self.m[(a, b)]
    }

    pub fn monodromy_table(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    fn monodromy_via_s(&self, a: Charge, b: Charge) -> Complex64 {
        let one = self.vacuum();
        self.s[(a, b)] * self.s[(one, one)] / (self.s[(one, a)] * self.s[(one, b)])
    }

    /// `M_ab` from the spin sum, cross-checked against the S-matrix route.
    pub fn monodromy_scalar(&self, a: Charge, b: Charge) -> Result<Complex64> {
        self.algebra.conjugate(a)?;
        self.algebra.conjugate(b)?;
        let direct = self.m[(a, b)];
        let via_s = self.monodromy_via_s(a, b);
        if (direct - via_s).norm() > MODEL_TOL {
            return Err(AnyonError::Inconsistent(format!(
                "M({}, {}) = {direct} from spins but {via_s} from S",
                self.label(a),
                self.label(b)
            )));
        }
        Ok(direct)
    }

    /// Channel eigenphase `θ_c / (θ_a θ_b)` of the full monodromy of `a` and `b`.
    #[inline]
    pub fn eigenphase(&self, a: Charge, b: Charge, c: Charge) -> Complex64 {
        self.theta[c] / (self.theta[a] * self.theta[b])
    }

    /// `R_{ba} R_{ab}` in the channel basis `(c, μ)` of `a × b`, built from the R-symbols.
    pub fn monodromy_matrix(&self, a: Charge, b: Charge) -> Result<(Vec<(Charge, usize)>, DMatrix<Complex64>)> {
        self.algebra.conjugate(a)?;
        self.algebra.conjugate(b)?;
        let mut labels = Vec::new();
        for &(c, m) in self.products(a, b) {
            for mu in 0..m as usize {
                labels.push((c, mu));
            }
        }
        let mut mat = DMatrix::zeros(labels.len(), labels.len());
        let mut offset = 0;
        for &(c, m) in self.products(a, b) {
            let m = m as usize;
            if let (Some(rab), Some(rba)) = (self.r.get(a, b, c), self.r.get(b, a, c)) {
                let prod = rab * rba;
                mat.view_mut((offset, offset), (m, m)).copy_from(&prod);
            }
            offset += m;
        }
        Ok((labels, mat))
    }

    /// `[F_d^{abc}]_{ef}`, zero for inadmissible vertices.
    pub fn f_upper(&self, a: Charge, b: Charge, c: Charge, d: Charge, e: Channel, f: Channel) -> Complex64 {
        self.f.get(a, b, c, d, e, f)
    }

    /// Bent F-move `[F_{cd}^{ab}]` derived from the upper table. Rows `(e,α,β)` with
    /// `α < N_{ce}^a`, `β < N_{eb}^d`; columns `(f,μ,ν)` with `μ < N_{ab}^f`, `ν < N_{cd}^f`.
    pub fn bent(&self, a: Charge, b: Charge, c: Charge, d: Charge) -> Arc<BentMove> {
        let key = [a, b, c, d];
        if let Some(hit) = self.bent_cache.read().expect("bent cache poisoned").get(&key) {
            return Arc::clone(hit);
        }
        let mv = Arc::new(self.compute_bent(a, b, c, d));
        self.bent_cache
            .write()
            .expect("bent cache poisoned")
            .insert(key, Arc::clone(&mv));
        mv
    }

    fn compute_bent(&self, a: Charge, b: Charge, c: Charge, d: Charge) -> BentMove {
        let alg = &self.algebra;
        let mut rows = Vec::new();
        for e in 0..alg.size() {
            let nce = alg.n(c, e, a) as usize;
            let neb = alg.n(e, b, d) as usize;
            for al in 0..nce {
                for be in 0..neb {
                    rows.push((e, al, be));
                }
            }
        }
        let mut cols = Vec::new();
        for &(f, nab) in alg.products(a, b) {
            let ncd = alg.n(c, d, f) as usize;
            for mu in 0..nab as usize {
                for nu in 0..ncd {
                    cols.push((f, mu, nu));
                }
            }
        }
        let mat = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            let (e, al, be) = rows[i];
            let (f, mu, nu) = cols[j];
            let scale = (alg.dim(e) * alg.dim(f) / (alg.dim(a) * alg.dim(d))).sqrt();
            self.f.get(c, e, b, f, (a, al, mu), (d, be, nu)).conj() * scale
        });
        let inverse = if rows.len() == cols.len() { mat.clone().try_inverse() } else { None };
        BentMove { block: FBlock { rows, cols, mat }, inverse }
    }

    /// Scans `M_ce = M_ae M_be` over all `N_ab^c ≠ 0` with `|M_be| = 1`.
    pub fn check_fused_monodromy(&self) -> Check {
        let mut check = Check::new("fused monodromy");
        let n = self.size();
        for a in 0..n {
            for b in 0..n {
                for &(c, _) in self.products(a, b) {
                    for e in 0..n {
                        if (self.m(b, e).norm() - 1.0).abs() > MODEL_TOL {
                            continue;
                        }
                        let r = (self.m(c, e) - self.m(a, e) * self.m(b, e)).norm();
                        check.residual(r, MODEL_TOL, || {
                            format!("({}, {}, {}, {})", self.label(a), self.label(b), self.label(c), self.label(e))
                        });
                    }
                }
            }
        }
        check
    }

    /// Runs every consistency identity in a fixed order and flags modularity.
    pub fn verify_model(&self) -> VerifyReport {
        let alg = &self.algebra;
        let n = alg.size();
        let one = alg.vacuum();
        let tol = MODEL_TOL;
        let lab = |x: Charge| alg.label(x).to_string();
        let mut report = ValidationReport::default();

        let mut fusion = Check::new("fusion axioms");
        for v in validate_fusion(alg.tensor()) {
            fusion.fail(v.to_string());
        }
        report.push(fusion);
        report.push(alg.dimension_check());

        let mut unit = Check::new("F unitarity");
        let mut keys: Vec<_> = self.f.blocks().map(|(k, _)| *k).collect();
        keys.sort_unstable();
        for k in &keys {
            let blk = self.f.block(k[0], k[1], k[2], k[3]).expect("listed");
            let r = blk.unitarity_residual();
            unit.residual(r, tol, || format!("F^({},{},{})_{}", lab(k[0]), lab(k[1]), lab(k[2]), lab(k[3])));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in totals(alg, a, b, c) {
                        if self.f.block(a, b, c, d).is_none() {
                            unit.fail(format!("missing F^({},{},{})_{}", lab(a), lab(b), lab(c), lab(d)));
                        }
                    }
                }
            }
        }
        report.push(unit);

        let mut norm = Check::new("F normalization");
        for a in 0..n {
            for b in 0..n {
                let mv = self.bent(a, b, a, b);
                for &(c, nab) in alg.products(a, b) {
                    let want = (alg.dim(c) / (alg.dim(a) * alg.dim(b))).sqrt();
                    for mu in 0..nab as usize {
                        for nu in 0..nab as usize {
                            let got = mv.block.get((one, 0, 0), (c, mu, nu));
                            let target = if mu == nu { want } else { 0.0 };
                            let r = (got - target).norm();
                            norm.residual(r, tol, || format!("[F^({},{})_({},{})]_(1,{})", lab(a), lab(b), lab(a), lab(b), lab(c)));
                        }
                    }
                }
            }
        }
        report.push(norm);

        let mut bent = Check::new("bent/upper relation");
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for &(f, _) in alg.products(a, b) {
                        for &(d, _) in alg.products(f, alg.dual(c)) {
                            if alg.n(c, d, f) == 0 {
                                continue;
                            }
                            let mv = self.bent(a, b, c, d);
                            if mv.block.rows.is_empty() {
                                continue;
                            }
                            let r = mv.block.unitarity_residual();
                            bent.residual(r, tol, || format!("[F^({},{})_({},{})]", lab(a), lab(b), lab(c), lab(d)));
                        }
                    }
                }
            }
        }
        report.push(bent);

        let mut runit = Check::new("R unitarity");
        for a in 0..n {
            for b in 0..n {
                for &(c, m) in alg.products(a, b) {
                    let m = m as usize;
                    let (Some(rab), Some(rba)) = (self.r.get(a, b, c), self.r.get(b, a, c)) else {
                        runit.fail(format!("missing R^({},{})_{}", lab(a), lab(b), lab(c)));
                        continue;
                    };
                    let id = DMatrix::<Complex64>::identity(m, m);
                    let r1 = (rab * rab.adjoint() - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let r2 = match rab.clone().try_inverse() {
                        Some(inv) => (inv - rba.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max),
                        None => f64::INFINITY,
                    };
                    runit.residual(r1.max(r2), tol, || format!("R^({},{})_{}", lab(a), lab(b), lab(c)));
                }
            }
        }
        report.push(runit);

        let mut spins = Check::new("topological spins");
        spins.residual((self.theta[one] - ONE).norm(), tol, || "theta_1 != 1".into());
        for a in 0..n {
            spins.residual((self.theta[a].norm() - 1.0).abs(), tol, || format!("|theta_{}| != 1", lab(a)));
            spins.residual((self.theta[a] - self.theta[alg.dual(a)]).norm(), tol, || {
                format!("theta_{} != theta of its conjugate", lab(a))
            });
        }
        report.push(spins);

        let mut ribbon = Check::new("ribbon property");
        for a in 0..n {
            for b in 0..n {
                for &(c, m) in alg.products(a, b) {
                    let m = m as usize;
                    let (Some(rab), Some(rba)) = (self.r.get(a, b, c), self.r.get(b, a, c)) else {
                        continue;
                    };
                    let want = DMatrix::<Complex64>::identity(m, m) * self.eigenphase(a, b, c);
                    let r = (rab * rba - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    ribbon.residual(r, tol, || format!("({},{},{})", lab(a), lab(b), lab(c)));
                }
            }
        }
        report.push(ribbon);

        let mut smat = Check::new("S symmetry and conjugation");
        for a in 0..n {
            for b in 0..n {
                let s = self.s[(a, b)];
                smat.residual((s - self.s[(b, a)]).norm(), tol, || format!("S not symmetric at ({},{})", lab(a), lab(b)));
                smat.residual((s - self.s[(alg.dual(a), b)].conj()).norm(), tol, || {
                    format!("S_ab != conj(S_abar b) at ({},{})", lab(a), lab(b))
                });
            }
            let ratio = self.s[(one, a)] / self.s[(one, one)];
            smat.residual((ratio - Complex64::new(alg.dim(a), 0.0)).norm(), tol, || {
                format!("d_{} != S_1a/S_11", lab(a))
            });
        }
        report.push(smat);

        let mut mcross = Check::new("M cross-check");
        let mut mbound = Check::new("|M| <= 1");
        for a in 0..n {
            for b in 0..n {
                let r = (self.m(a, b) - self.monodromy_via_s(a, b)).norm();
                mcross.residual(r, tol, || format!("({},{})", lab(a), lab(b)));
                mbound.residual(self.m(a, b).norm() - 1.0, tol, || format!("|M({},{})| = {}", lab(a), lab(b), self.m(a, b).norm()));
            }
            mbound.residual((self.m(one, a) - ONE).norm(), tol, || format!("M(1,{}) != 1", lab(a)));
        }
        report.push(mcross);
        report.push(mbound);
        report.push(self.check_fused_monodromy());

        let id = DMatrix::<Complex64>::identity(n, n);
        let modular_res = (&self.s * self.s.adjoint() - id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        VerifyReport { model: self.name.clone(), report, modular: modular_res < tol }
    }
}
