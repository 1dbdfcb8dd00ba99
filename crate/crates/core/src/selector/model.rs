//! Transistor-count area estimate for new complex cells.

use serde::Serialize;

use super::SelectError;
use crate::boolfn::{quine_mccluskey, Literal, MinimizedSop};
use crate::library::CellLibrary;
use crate::scalar::Scalar;
use crate::truth::TruthTable;

fn complemented_vars(sop: &MinimizedSop) -> usize {
    (0..sop.arity)
        .filter(|&v| sop.cubes.iter().any(|c| c.literal(v) == Literal::Negative))
        .count()
}

/// Transistors of a static CMOS realisation of `f`.
///
/// A single stage computes the complement of a sum of products. `f` is
/// built either directly as `!(sop(!f))` or as `!(sop(f))` followed by an
/// output inverter; complemented literals need an input inverter each.
pub fn transistor_count(f: &TruthTable) -> Result<usize, SelectError> {
    if f.is_constant() {
        return Err(SelectError::Constant);
    }
    let on = quine_mccluskey(f);
    let off = quine_mccluskey(&f.complement());
    let direct = 2 * off.literal_count() + 2 * complemented_vars(&off);
    let inverted = 2 * on.literal_count() + 2 * complemented_vars(&on) + 2;
    Ok(direct.min(inverted))
}

/// `area = alpha + beta * transistors`, fit by least squares over a library.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AreaModel<S> {
    pub alpha: S,
    pub beta: S,
}

impl<S: Scalar> AreaModel<S> {
    /// Fits over every non-constant cell of `lib`.
    pub fn fit(lib: &CellLibrary) -> Result<Self, SelectError> {
        let points: Vec<(f64, f64)> = lib
            .cells()
            .iter()
            .filter_map(|c| transistor_count(&c.function).ok().map(|t| (t as f64, c.area)))
            .collect();
        if points.len() < 2 {
            return Err(SelectError::Regression(points.len()));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(SelectError::Regression(points.len()));
        }
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let beta = sxy / sxx;
        Ok(Self { alpha: S::from_area(my - beta * mx), beta: S::from_area(beta) })
    }

    pub fn area(&self, transistors: usize) -> S {
        self.alpha + self.beta * S::from_area(transistors as f64)
    }
}

/// Estimated area of a cell implementing `sop`, priced with a model fit
/// over `base`.
pub fn estimate_cell_area<S: Scalar>(sop: &MinimizedSop, base: &CellLibrary) -> Result<S, SelectError> {
    let model = AreaModel::<S>::fit(base)?;
    let t = transistor_count(&sop.to_table())?;
    Ok(model.area(t))
}
