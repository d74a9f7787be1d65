//! Concrete anyon models and the combinators that build the quantum Hall models.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anyon_model::{AnyonModel, Channel, FBlock, FSymbolTable, RSymbolTable};
use crate::charge_algebra::{Charge, FusionAlgebra, FusionTensor};
use crate::error::{AnyonError, Result};

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The golden ratio.
pub fn phi() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// Level `w` of a `Z_N^(w)` model: an integer or an odd multiple of 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Integer(i64),
    /// `w = k/2` with `k` odd.
    Half(i64),
}

impl Level {
    pub fn value(self) -> f64 {
        match self {
            Level::Integer(w) => w as f64,
            Level::Half(k) => k as f64 / 2.0,
        }
    }

    /// Parses `"3"`, `"1/2"`, `"-3/2"` or `"0.5"`.
    pub fn parse(s: &str) -> Result<Level> {
        let s = s.trim();
        let bad = || AnyonError::InvalidParameter(format!("level `{s}` is not an integer or half-integer"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            let den: i64 = den.trim().parse().map_err(|_| bad())?;
            return match den {
                1 => Ok(Level::Integer(num)),
                2 if num % 2 == 0 => Ok(Level::Integer(num / 2)),
                2 => Ok(Level::Half(num)),
                _ => Err(bad()),
            };
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        let twice = (2.0 * x).round();
        if (2.0 * x - twice).abs() > 1e-12 {
            return Err(bad());
        }
        let k = twice as i64;
        Ok(if k % 2 == 0 { Level::Integer(k / 2) } else { Level::Half(k) })
    }
}

fn zn_label(a: usize, n: usize) -> String {
    format!("[{a}]_{n}")
}

/// `Z_N^(w)`: charges `[0]_N .. [N-1]_N` fused by addition mod N.
pub fn z_n(n: usize, w: Level) -> Result<AnyonModel> {
    if n == 0 {
        return Err(AnyonError::InvalidParameter("Z_N needs N >= 1".into()));
    }
    if let Level::Half(k) = w {
        if k % 2 == 0 {
            return Err(AnyonError::InvalidParameter("half-integer level needs an odd numerator".into()));
        }
        if n % 2 != 0 {
            return Err(AnyonError::InvalidParameter(format!("half-integer level requires even N, got N = {n}")));
        }
    }
    let labels = (0..n).map(|a| zn_label(a, n)).collect();
    let tensor = FusionTensor::new(n, 0, (0..n).flat_map(|a| (0..n).map(move |b| ((a, b, (a + b) % n), 1))));
    let alg = FusionAlgebra::new(labels, tensor)?;
    let nf = n as f64;
    let f = FSymbolTable::from_fn(&alg, |a, b, c, _, _, _| match w {
        Level::Integer(_) => ONE,
        Level::Half(_) => {
            let wrap = (b + c - (b + c) % n) as f64;
            cis(PI * a as f64 * wrap / nf)
        }
    });
    let wv = w.value();
    let r = RSymbolTable::from_fn(&alg, |a, b, _| cis(2.0 * PI * wv * (a * b) as f64 / nf));
    let name = match w {
        Level::Integer(k) => format!("Z_{n}^({k})"),
        Level::Half(k) => format!("Z_{n}^({k}/2)"),
    };
    Ok(AnyonModel::new(name, alg, f, r))
}

/// The one-charge model.
pub fn trivial() -> AnyonModel {
    let alg = FusionAlgebra::new(vec!["1".into()], FusionTensor::new(1, 0, [((0, 0, 0), 1)])).expect("trivial");
    let f = FSymbolTable::from_fn(&alg, |_, _, _, _, _, _| ONE);
    let r = RSymbolTable::from_fn(&alg, |_, _, _| ONE);
    AnyonModel::new("trivial", alg, f, r)
}

fn fib_algebra() -> FusionAlgebra {
    let entries = [((0, 0, 0), 1), ((0, 1, 1), 1), ((1, 0, 1), 1), ((1, 1, 0), 1), ((1, 1, 1), 1)];
    FusionAlgebra::new(vec!["1".into(), "eps".into()], FusionTensor::new(2, 0, entries)).expect("fib fusion")
}

fn fib_f(alg: &FusionAlgebra) -> FSymbolTable {
    let p = phi();
    FSymbolTable::from_fn(alg, |a, b, c, d, e, f| {
        if (a, b, c, d) == (1, 1, 1, 1) {
            match (e, f) {
                (0, 0) => Complex64::new(1.0 / p, 0.0),
                (1, 1) => Complex64::new(-1.0 / p, 0.0),
                _ => Complex64::new(p.powf(-0.5), 0.0),
            }
        } else {
            ONE
        }
    })
}

fn fib_with(conjugate: bool) -> AnyonModel {
    let alg = fib_algebra();
    let f = fib_f(&alg);
    let sign = if conjugate { -1.0 } else { 1.0 };
    let r = RSymbolTable::from_fn(&alg, |a, b, c| match (a, b, c) {
        (1, 1, 0) => cis(-sign * 4.0 * PI / 5.0),
        (1, 1, 1) => cis(sign * 3.0 * PI / 5.0),
        _ => ONE,
    });
    AnyonModel::new(if conjugate { "Fib-bar" } else { "Fib" }, alg, f, r)
}

/// Fibonacci anyons `{1, eps}`.
pub fn fib() -> AnyonModel {
    fib_with(false)
}

/// Fibonacci with every R-symbol (and hence spin) conjugated.
pub fn fib_bar() -> AnyonModel {
    fib_with(true)
}

/// Ising anyons `{1, sigma, psi}`.
pub fn ising() -> AnyonModel {
    let (one, s, p) = (0usize, 1usize, 2usize);
    let mut entries = vec![];
    for a in 0..3 {
        entries.push(((one, a, a), 1));
        if a != one {
            entries.push(((a, one, a), 1));
        }
    }
    entries.extend([((s, s, one), 1), ((s, s, p), 1), ((s, p, s), 1), ((p, s, s), 1), ((p, p, one), 1)]);
    let alg = FusionAlgebra::new(vec!["1".into(), "sigma".into(), "psi".into()], FusionTensor::new(3, one, entries))
        .expect("ising fusion");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let f = FSymbolTable::from_fn(&alg, |a, b, c, d, e, f| match (a, b, c, d) {
        (1, 1, 1, 1) => Complex64::new(if e == p && f == p { -h } else { h }, 0.0),
        (1, 2, 1, 2) | (2, 1, 2, 1) => -ONE,
        _ => ONE,
    });
    let r = RSymbolTable::from_fn(&alg, |a, b, c| match (a, b, c) {
        (1, 1, 0) => cis(-PI / 8.0),
        (1, 1, 2) => cis(3.0 * PI / 8.0),
        (1, 2, 1) | (2, 1, 1) => Complex64::new(0.0, -1.0),
        (2, 2, 0) => -ONE,
        _ => ONE,
    });
    AnyonModel::new("Ising", alg, f, r)
}

/// Componentwise product; labels render as `(x,y)`.
pub fn direct_product(x: &AnyonModel, y: &AnyonModel) -> AnyonModel {
    let (nx, ny) = (x.size(), y.size());
    let idx = |a: Charge, b: Charge| a * ny + b;
    let labels: Vec<String> =
        (0..nx).flat_map(|a| (0..ny).map(move |b| (a, b))).map(|(a, b)| format!("({},{})", x.label(a), y.label(b))).collect();
    let mut entries = Vec::new();
    for (&(a1, b1, c1), &m1) in x.tensor().entries() {
        for (&(a2, b2, c2), &m2) in y.tensor().entries() {
            entries.push(((idx(a1, a2), idx(b1, b2), idx(c1, c2)), m1 * m2));
        }
    }
    let alg = FusionAlgebra::new(labels, FusionTensor::new(nx * ny, idx(x.vacuum(), y.vacuum()), entries))
        .expect("product of valid fusion rules is valid");

    let combine = |c1: Channel, c2: Channel, m_first: usize, m_second: usize| -> Channel {
        (idx(c1.0, c2.0), c1.1 * m_first + c2.1, c1.2 * m_second + c2.2)
    };
    let mut blocks = HashMap::new();
    for (k1, b1) in x.f_symbols().blocks() {
        for (k2, b2) in y.f_symbols().blocks() {
            let [a1, bb1, c1, d1] = *k1;
            let [a2, bb2, c2, d2] = *k2;
            let rows: Vec<Channel> = b1
                .rows
                .iter()
                .flat_map(|&r1| {
                    b2.rows.iter().map(move |&r2| {
                        let m_ab = y.n(a2, bb2, r2.0) as usize;
                        let m_ec = y.n(r2.0, c2, d2) as usize;
                        combine(r1, r2, m_ab, m_ec)
                    })
                })
                .collect();
            let cols: Vec<Channel> = b1
                .cols
                .iter()
                .flat_map(|&f1| {
                    b2.cols.iter().map(move |&f2| {
                        let m_bc = y.n(bb2, c2, f2.0) as usize;
                        let m_af = y.n(a2, f2.0, d2) as usize;
                        combine(f1, f2, m_bc, m_af)
                    })
                })
                .collect();
            let mat = b1.mat.kronecker(&b2.mat);
            blocks.insert([idx(a1, a2), idx(bb1, bb2), idx(c1, c2), idx(d1, d2)], FBlock { rows, cols, mat });
        }
    }
    let mut rmap = HashMap::new();
    for (&(a1, b1, c1), r1) in x.r_symbols().iter() {
        for (&(a2, b2, c2), r2) in y.r_symbols().iter() {
            rmap.insert((idx(a1, a2), idx(b1, b2), idx(c1, c2)), r1.kronecker(r2));
        }
    }
    AnyonModel::new(
        format!("{} x {}", x.name(), y.name()),
        alg,
        FSymbolTable::from_blocks(blocks),
        RSymbolTable::from_map(rmap),
    )
}

/// Restricts to a sub-spectrum closed under fusion and conjugation. D and S are recomputed.
pub fn restrict(model: &AnyonModel, spectrum: &[Charge], name: &str) -> Result<AnyonModel> {
    let mut keep: Vec<Charge> = spectrum.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let mut new_index = vec![None; model.size()];
    for (i, &a) in keep.iter().enumerate() {
        if a >= model.size() {
            return Err(AnyonError::UnknownCharge(format!("#{a}")));
        }
        new_index[a] = Some(i);
    }
    if new_index[model.vacuum()].is_none() {
        return Err(AnyonError::InvalidParameter("restricted spectrum must contain the vacuum".into()));
    }
    for &a in &keep {
        if new_index[model.dual(a)].is_none() {
            return Err(AnyonError::InvalidParameter(format!(
                "spectrum not closed under conjugation at {}",
                model.label(a)
            )));
        }
        for &b in &keep {
            for &(c, _) in model.products(a, b) {
                if new_index[c].is_none() {
                    return Err(AnyonError::InvalidParameter(format!(
                        "spectrum not closed under fusion: {} x {} -> {}",
                        model.label(a),
                        model.label(b),
                        model.label(c)
                    )));
                }
            }
        }
    }
    let map = |a: Charge| new_index[a].expect("closed spectrum");
    let labels = keep.iter().map(|&a| model.label(a).to_string()).collect();
    let entries = model
        .tensor()
        .entries()
        .filter(|(&(a, b, c), _)| new_index[a].is_some() && new_index[b].is_some() && new_index[c].is_some())
        .map(|(&(a, b, c), &m)| ((map(a), map(b), map(c)), m))
        .collect::<Vec<_>>();
    let alg = FusionAlgebra::new(labels, FusionTensor::new(keep.len(), map(model.vacuum()), entries))?;
    let mut blocks = HashMap::new();
    for (k, blk) in model.f_symbols().blocks() {
        if k.iter().all(|&x| new_index[x].is_some()) {
            let relabel = |ch: &Channel| (map(ch.0), ch.1, ch.2);
            blocks.insert(
                [map(k[0]), map(k[1]), map(k[2]), map(k[3])],
                FBlock { rows: blk.rows.iter().map(relabel).collect(), cols: blk.cols.iter().map(relabel).collect(), mat: blk.mat.clone() },
            );
        }
    }
    let mut rmap = HashMap::new();
    for (&(a, b, c), r) in model.r_symbols().iter() {
        if new_index[a].is_some() && new_index[b].is_some() && new_index[c].is_some() {
            rmap.insert((map(a), map(b), map(c)), r.clone());
        }
    }
    Ok(AnyonModel::new(name, alg, FSymbolTable::from_blocks(blocks), RSymbolTable::from_map(rmap)))
}

/// Electric data of one anyonic charge, in units of the electron charge magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FqhChargeMeta {
    pub quasihole_count: i64,
    /// Electric charge `num/den`.
    pub electric: (i64, i64),
}

/// Quantum Hall metadata attached to a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FqhData {
    pub quasihole: Charge,
    pub electron: Charge,
    /// The fundamental quasihole carries `1/electric_den`.
    pub electric_den: i64,
    /// Quasihole count per charge, defined modulo `period`.
    pub counts: Vec<i64>,
    pub period: i64,
}

impl FqhData {
    pub fn meta(&self, a: Charge) -> FqhChargeMeta {
        FqhChargeMeta { quasihole_count: self.counts[a], electric: (self.counts[a], self.electric_den) }
    }

    /// Superselection sector of a charge.
    pub fn sector(&self, a: Charge) -> i64 {
        self.counts[a].rem_euclid(self.period)
    }

    /// Every fusion triple whose counts are not additive modulo the period.
    pub fn additivity_violations(&self, model: &AnyonModel) -> Vec<(Charge, Charge, Charge)> {
        let mut bad = Vec::new();
        for (&(a, b, c), _) in model.tensor().entries() {
            if (self.counts[a] + self.counts[b] - self.counts[c]).rem_euclid(self.period) != 0 {
                bad.push((a, b, c));
            }
        }
        bad
    }
}

/// Moore-Read: Ising x Z_8^(1/2) restricted to `(1|psi, even)` and `(sigma, odd)`.
pub fn moore_read() -> AnyonModel {
    let prod = direct_product(&ising(), &z_n(8, Level::Half(1)).expect("Z_8^(1/2)"));
    // product index = ising * 8 + z
    let spectrum: Vec<Charge> = (0..3usize)
        .flat_map(|i| (0..8usize).map(move |z| (i, z)))
        .filter(|&(i, z)| (i == 1) == (z % 2 == 1))
        .map(|(i, z)| i * 8 + z)
        .collect();
    let model = restrict(&prod, &spectrum, "MR").expect("MR spectrum is closed");
    let counts = (0..model.size()).map(|a| zn_component(model.label(a)) as i64).collect();
    let fqh = FqhData {
        quasihole: model.charge("(sigma,[1]_8)").expect("label"),
        electron: model.charge("(psi,[4]_8)").expect("label"),
        electric_den: 4,
        counts,
        period: 8,
    };
    model.with_fqh(fqh)
}

/// Particle-hole conjugate of the k=3, M=1 Read-Rezayi state: Fib-bar x Z_10^(3).
pub fn rr_bar_31() -> AnyonModel {
    let prod = direct_product(&fib_bar(), &z_n(10, Level::Integer(3)).expect("Z_10^(3)"));
    let all: Vec<Charge> = (0..prod.size()).collect();
    let model = restrict(&prod, &all, "RR-bar_3,1").expect("full spectrum");
    let counts = (0..model.size()).map(|a| zn_component(model.label(a)) as i64).collect();
    let fqh = FqhData {
        quasihole: model.charge("(eps,[1]_10)").expect("label"),
        electron: model.charge("(1,[5]_10)").expect("label"),
        electric_den: 5,
        counts,
        period: 10,
    };
    model.with_fqh(fqh)
}

/// The odd `p` in `[1, 2m)` with `n p ≡ 1 (mod m)`.
pub fn hierarchy_p(n: i64, m: i64) -> Result<i64> {
    if m <= 0 || m % 2 == 0 {
        return Err(AnyonError::InvalidParameter(format!("hierarchy needs odd m > 0, got {m}")));
    }
    if n <= 0 || n >= m {
        return Err(AnyonError::InvalidParameter(format!("hierarchy needs 0 < n < m, got n = {n}, m = {m}")));
    }
    let p0 = (0..m)
        .find(|&p| (n * p).rem_euclid(m) == 1 % m)
        .ok_or_else(|| AnyonError::InvalidParameter(format!("n = {n} has no inverse mod {m}")))?;
    Ok(if p0 % 2 == 1 { p0 } else { p0 + m })
}

/// Abelian hierarchy state at filling `n/m`: `Z_2m^(p)`.
pub fn hierarchy(n: i64, m: i64) -> Result<AnyonModel> {
    let p = hierarchy_p(n, m)?;
    let size = (2 * m) as usize;
    let base = z_n(size, Level::Integer(p))?;
    let all: Vec<Charge> = (0..size).collect();
    let model = restrict(&base, &all, &format!("hierarchy {n}/{m}"))?;
    let fqh = FqhData {
        quasihole: 1,
        electron: m as usize,
        electric_den: m,
        counts: (0..size as i64).collect(),
        period: 2 * m,
    };
    Ok(model.with_fqh(fqh))
}

fn zn_component(label: &str) -> usize {
    let open = label.rfind('[').expect("product label");
    let close = label[open..].find(']').expect("product label") + open;
    label[open + 1..close].parse().expect("integer Z_N component")
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] =
    &["ising", "fib", "fib_bar", "moore_read", "rr_bar_31", "trivial", "z_n:<N>:<w>", "hierarchy:<n>:<m>"];

/// Looks up a built-in model by name, e.g. `ising`, `z_n:8:1/2`, `hierarchy:1:3`.
pub fn builtin(name: &str) -> Result<AnyonModel> {
    let parts: Vec<&str> = name.split(':').collect();
    let bad = || AnyonError::InvalidParameter(format!("unknown built-in model `{name}`"));
    match parts.as_slice() {
        ["ising"] => Ok(ising()),
        ["fib"] => Ok(fib()),
        ["fib_bar"] => Ok(fib_bar()),
        ["moore_read"] | ["mr"] => Ok(moore_read()),
        ["rr_bar_31"] | ["rr"] => Ok(rr_bar_31()),
        ["trivial"] => Ok(trivial()),
        ["z_n", n, w] => z_n(n.parse().map_err(|_| bad())?, Level::parse(w)?),
        ["hierarchy", n, m] => hierarchy(n.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?),
        _ => Err(bad()),
    }
}

/// Kronecker helper kept public for synthetic multiplicity tests.
pub fn scalar_matrix(v: Complex64) -> DMatrix<Complex64> {
    DMatrix::from_element(1, 1, v)
}
