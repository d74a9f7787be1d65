//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use anyonic::state_space::{Ket, PairDensityMatrix};
use anyonic::AnyonModel;
use num_complex::Complex64;

/// Equal-weight superposition of `|a, ā; 1⟩` over `labels`, with the model's electric superselection.
pub fn vacuum_superposition(model: &Arc<AnyonModel>, labels: &[&str]) -> PairDensityMatrix {
    let vac = model.vacuum();
    let w = Complex64::new((labels.len() as f64).recip().sqrt(), 0.0);
    let amps: Vec<(Ket, Complex64)> = labels
        .iter()
        .map(|l| {
            let a = model.charge(l).expect("label in model");
            (Ket::new(a, model.dual(a), vac, 0), w)
        })
        .collect();
    PairDensityMatrix::from_pure(Arc::clone(model), &amps, PairDensityMatrix::electric_sectors(model)).expect("valid target")
}
