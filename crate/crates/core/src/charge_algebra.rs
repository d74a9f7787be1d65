//! Fusion algebra: interned charge labels, sparse multiplicities, conjugates and
//! quantum dimensions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{AnyonError, Result};
use crate::report::Check;

/// Absolute tolerance for real comparisons in this module.
pub const FUSION_TOL: f64 = 1e-9;

/// Dense index of a charge inside one model.
pub type Charge = usize;

/// Sparse fusion multiplicities `N_ab^c`; an absent key means zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionTensor {
    size: usize,
    vacuum: Charge,
    entries: BTreeMap<(Charge, Charge, Charge), u32>,
    products: Vec<Vec<(Charge, u32)>>,
}

impl FusionTensor {
    pub fn new<I>(size: usize, vacuum: Charge, entries: I) -> Self
    where
        I: IntoIterator<Item = ((Charge, Charge, Charge), u32)>,
    {
        let mut map = BTreeMap::new();
        for ((a, b, c), n) in entries {
            if n > 0 {
                *map.entry((a, b, c)).or_insert(0) += n;
            }
        }
        let mut products = vec![Vec::new(); size * size];
        for (&(a, b, c), &n) in &map {
            if a < size && b < size && c < size {
                products[a * size + b].push((c, n));
            }
        }
        FusionTensor { size, vacuum, entries: map, products }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn vacuum(&self) -> Charge {
        self.vacuum
    }

    #[inline]
    pub fn n(&self, a: Charge, b: Charge, c: Charge) -> u32 {
        self.entries.get(&(a, b, c)).copied().unwrap_or(0)
    }

    /// Channels `c` with `N_ab^c > 0`, ascending by index.
    #[inline]
    pub fn products(&self, a: Charge, b: Charge) -> &[(Charge, u32)] {
        &self.products[a * self.size + b]
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(Charge, Charge, Charge), &u32)> {
        self.entries.iter()
    }
}

/// One violated fusion axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FusionViolation {
    VacuumOutOfRange,
    Commutativity { a: Charge, b: Charge, c: Charge },
    Vacuum { a: Charge, b: Charge },
    Conjugation { a: Charge, found: usize },
    Involution { a: Charge },
    Associativity { a: Charge, b: Charge, c: Charge, d: Charge },
}

impl fmt::Display for FusionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionViolation::VacuumOutOfRange => write!(f, "vacuum index outside the charge set"),
            FusionViolation::Commutativity { a, b, c } => {
                write!(f, "commutativity: N_({a},{b})^{c} != N_({b},{a})^{c}")
            }
            FusionViolation::Vacuum { a, b } => {
                write!(f, "vacuum axiom violated at ({a},1,{b})")
            }
            FusionViolation::Conjugation { a, found } => {
                write!(f, "conjugation: charge {a} has {found} candidate conjugates")
            }
            FusionViolation::Involution { a } => write!(f, "conjugation is not an involution at {a}"),
            FusionViolation::Associativity { a, b, c, d } => {
                write!(f, "associativity fails at ({a},{b},{c};{d})")
            }
        }
    }
}

/// Checks every fusion axiom; an empty result means the tensor is valid.
pub fn validate_fusion(t: &FusionTensor) -> Vec<FusionViolation> {
    let n = t.size;
    let one = t.vacuum;
    let mut out = Vec::new();
    if one >= n {
        out.push(FusionViolation::VacuumOutOfRange);
        return out;
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if t.n(a, b, c) != t.n(b, a, c) && a < b {
                    out.push(FusionViolation::Commutativity { a, b, c });
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            let want = u32::from(a == b);
            if t.n(a, one, b) != want || t.n(one, a, b) != want {
                out.push(FusionViolation::Vacuum { a, b });
            }
        }
    }
    let mut conj = vec![None; n];
    for a in 0..n {
        let cands: Vec<Charge> = (0..n).filter(|&b| t.n(a, b, one) > 0).collect();
        let unique = cands.len() == 1 && t.n(a, cands[0], one) == 1;
        if unique {
            conj[a] = Some(cands[0]);
        } else {
            out.push(FusionViolation::Conjugation { a, found: cands.len() });
        }
    }
    for a in 0..n {
        if let Some(b) = conj[a] {
            if conj[b] != Some(a) {
                out.push(FusionViolation::Involution { a });
            }
        }
    }
    if conj[one].is_some() && conj[one] != Some(one) {
        out.push(FusionViolation::Involution { a: one });
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let lhs: u64 = t
                        .products(a, b)
                        .iter()
                        .map(|&(e, nab)| u64::from(nab) * u64::from(t.n(e, c, d)))
                        .sum();
                    let rhs: u64 = t
                        .products(b, c)
                        .iter()
                        .map(|&(f, nbc)| u64::from(nbc) * u64::from(t.n(a, f, d)))
                        .sum();
                    if lhs != rhs {
                        out.push(FusionViolation::Associativity { a, b, c, d });
                    }
                }
            }
        }
    }
    out
}

/// Validated fusion algebra with interned labels, conjugates and quantum dimensions.
#[derive(Debug, Clone)]
pub struct FusionAlgebra {
    labels: Vec<String>,
    index: HashMap<String, Charge>,
    tensor: FusionTensor,
    dual: Vec<Charge>,
    dims: Vec<f64>,
    total_dim: f64,
}

impl FusionAlgebra {
    pub fn new(labels: Vec<String>, tensor: FusionTensor) -> Result<Self> {
        if labels.len() != tensor.size() {
            return Err(AnyonError::InvalidModel(format!(
                "{} labels for a fusion tensor of size {}",
                labels.len(),
                tensor.size()
            )));
        }
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(AnyonError::InvalidModel(format!("duplicate charge label `{l}`")));
            }
        }
        let violations = validate_fusion(&tensor);
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().take(8).map(|v| v.to_string()).collect();
            return Err(AnyonError::InvalidModel(format!("fusion axioms: {}", msg.join("; "))));
        }
        let one = tensor.vacuum();
        let n = tensor.size();
        let dual = (0..n)
            .map(|a| (0..n).find(|&b| tensor.n(a, b, one) == 1).expect("validated"))
            .collect();
        let dims = perron_frobenius_dims(&tensor)?;
        let total_dim = dims.iter().map(|d| d * d).sum::<f64>().sqrt();
        Ok(FusionAlgebra { labels, index, tensor, dual, dims, total_dim })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn vacuum(&self) -> Charge {
        self.tensor.vacuum()
    }

    pub fn tensor(&self) -> &FusionTensor {
        &self.tensor
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, a: Charge) -> &str {
        &self.labels[a]
    }

    pub fn charge(&self, label: &str) -> Result<Charge> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| AnyonError::UnknownCharge(label.to_string()))
    }

    fn known(&self, a: Charge) -> Result<()> {
        if a < self.size() {
            Ok(())
        } else {
            Err(AnyonError::UnknownCharge(format!("#{a}")))
        }
    }

    #[inline]
    pub fn n(&self, a: Charge, b: Charge, c: Charge) -> u32 {
        self.tensor.n(a, b, c)
    }

    #[inline]
    pub fn products(&self, a: Charge, b: Charge) -> &[(Charge, u32)] {
        self.tensor.products(a, b)
    }

    /// Unchecked conjugate.
    #[inline]
    pub fn dual(&self, a: Charge) -> Charge {
        self.dual[a]
    }

    /// Unchecked quantum dimension.
    #[inline]
    pub fn dim(&self, a: Charge) -> f64 {
        self.dims[a]
    }

    pub fn dims(&self) -> &[f64] {
        &self.dims
    }

    pub fn total_dimension(&self) -> f64 {
        self.total_dim
    }

    pub fn fuse(&self, a: Charge, b: Charge) -> Result<Vec<(Charge, u32)>> {
        self.known(a)?;
        self.known(b)?;
        Ok(self.products(a, b).to_vec())
    }

    pub fn conjugate(&self, a: Charge) -> Result<Charge> {
        self.known(a)?;
        Ok(self.dual[a])
    }

    pub fn quantum_dimension(&self, a: Charge) -> Result<f64> {
        self.known(a)?;
        Ok(self.dims[a])
    }

    /// Both criteria (single fusion channel with every charge, unit dimension) must agree.
    pub fn is_abelian(&self, a: Charge) -> Result<bool> {
        self.known(a)?;
        let by_fusion = (0..self.size())
            .all(|b| self.products(a, b).iter().map(|&(_, n)| n).sum::<u32>() == 1);
        let by_dim = (self.dims[a] - 1.0).abs() < FUSION_TOL;
        if by_fusion != by_dim {
            return Err(AnyonError::Inconsistent(format!(
                "charge {} has d = {} but fusion abelian = {by_fusion}",
                self.labels[a], self.dims[a]
            )));
        }
        Ok(by_fusion)
    }

    /// Residuals of `d_a d_b = sum_c N_ab^c d_c`.
    pub fn dimension_check(&self) -> Check {
        let mut check = Check::new("dimension compatibility");
        let n = self.size();
        for a in 0..n {
            for b in 0..n {
                let rhs: f64 = self.products(a, b).iter().map(|&(c, m)| f64::from(m) * self.dims[c]).sum();
                let r = (self.dims[a] * self.dims[b] - rhs).abs();
                check.residual(r, FUSION_TOL, || format!("({}, {})", self.labels[a], self.labels[b]));
            }
            let r = (self.dims[a] - self.dims[self.dual[a]]).abs();
            check.residual(r, FUSION_TOL, || format!("d_a != d_abar at {}", self.labels[a]));
        }
        check
    }
}

/// Perron-Frobenius dimensions. The sum of all fusion matrices is strictly positive and
/// shares its PF vector with every `N_a`; normalising that vector at the vacuum gives `d`.
fn perron_frobenius_dims(t: &FusionTensor) -> Result<Vec<f64>> {
    let n = t.size();
    let one = t.vacuum();
    let mut total = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (&(_, b, c), &m) in t.entries() {
        total[(b, c)] += f64::from(m);
    }
    let mut v = nalgebra::DVector::<f64>::from_element(n, 1.0);
    for _ in 0..10_000 {
        let mut w = &total * &v;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        w /= norm;
        let delta = (&w - &v).amax();
        v = w;
        if delta < 1e-15 {
            break;
        }
    }
    // the eigen-equation residuals below decide convergence
    if n == 0 || v[one] <= 0.0 {
        return Err(AnyonError::Convergence("Perron-Frobenius iteration failed".into()));
    }
    let dims: Vec<f64> = (0..n).map(|a| v[a] / v[one]).collect();
    for a in 0..n {
        for b in 0..n {
            let lhs: f64 = t.products(a, b).iter().map(|&(c, m)| f64::from(m) * dims[c]).sum();
            if (lhs - dims[a] * dims[b]).abs() > FUSION_TOL * (1.0 + lhs.abs()) {
                return Err(AnyonError::Convergence(format!(
                    "quantum dimension of charge #{a} did not converge (residual {:e})",
                    (lhs - dims[a] * dims[b]).abs()
                )));
            }
        }
    }
    Ok(dims)
}
