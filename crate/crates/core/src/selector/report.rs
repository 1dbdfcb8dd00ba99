//! Summary of one extension run.

use serde::Serialize;

use super::{AreaModel, CandidateCell, QoRWeights, Strategy};
use crate::egraph::SaturationReport;
use crate::graphify::GraphCounts;
use crate::scalar::{round2, Scalar};

/// `100 * (1 - extended / original)`, two decimals; 0 for an empty design.
pub fn reduction_pct(original: f64, extended: f64) -> f64 {
    if original <= 0.0 {
        return 0.0;
    }
    round2(100.0 * (1.0 - extended / original))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub name: String,
    pub truth: String,
    pub sop: String,
    pub inputs: Vec<String>,
    pub output: String,
    pub transistors: usize,
    pub est_area: f64,
    pub support: usize,
    pub patterns: usize,
    pub instances: usize,
}

impl CellReport {
    pub fn new<S: Scalar>(c: &CandidateCell<S>, instances: usize) -> Self {
        let ct = c.cell_type();
        Self {
            name: c.name.clone(),
            truth: c.function.to_literal(),
            sop: c.sop.to_string(),
            inputs: ct.inputs,
            output: ct.output,
            transistors: c.transistors,
            est_area: ct.area,
            support: c.support,
            patterns: c.members.len(),
            instances,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MiningStats {
    pub patterns: usize,
    pub truncated: bool,
    pub groups: usize,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub circuit: String,
    pub original_area: f64,
    pub extended_area: f64,
    pub reduction_pct: f64,
    pub depth_original: usize,
    pub depth_extended: usize,
    pub gates_original: usize,
    pub gates_extended: usize,
    pub max_cells: usize,
    pub strategy: Strategy,
    pub qor_weights: QoRWeights,
    pub area_model: AreaModel<f64>,
    pub saturation: SaturationReport,
    pub graph: GraphCounts,
    pub mining: MiningStats,
    pub cells: Vec<CellReport>,
}

pub const CSV_HEADER: &str = "circuit,original_area,extended_area,reduction_pct,depth_original,depth_extended,gates_original,gates_extended,cells";

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Header plus one row; cell names are `;`-separated.
    pub fn to_csv(&self) -> String {
        let cells: Vec<&str> = self.cells.iter().map(|c| c.name.as_str()).collect();
        format!(
            "{CSV_HEADER}\n{},{:.2},{:.2},{:.2},{},{},{},{},{}\n",
            self.circuit,
            self.original_area,
            self.extended_area,
            self.reduction_pct,
            self.depth_original,
            self.depth_extended,
            self.gates_original,
            self.gates_extended,
            cells.join(";")
        )
    }
}
