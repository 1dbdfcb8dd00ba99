//! End-to-end stages: saturate, mine, select, write results.

use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::boolfn::{group_by_function, BoolFnError, PatternGroup};
use crate::egraph::{build_egraph, saturate, EGraph, RewriteRule, SaturationLimits, SaturationReport};
use crate::graphify::{egraph_to_graph, GraphifyError, PatternGraph};
use crate::library::{serialize_library, CellLibrary};
use crate::miner::{mine, patterns_to_json, MiningError, MiningParams, MiningResult};
use crate::netlist::{serialize_netlist, Netlist};
use crate::scalar::{round2, Scalar};
use crate::selector::{
    build_candidates, check_equivalence, emit_netlist, extend_library, reduction_pct, select_cells, AreaModel,
    CandidateCell, CellReport, Evaluator, MiningStats, QoRWeights, Report, SelectError, Strategy,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graphify(#[from] GraphifyError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    BoolFn(#[from] BoolFnError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: io::Error },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub name: String,
    /// `None` scales the node limit to the netlist.
    pub limits: Option<SaturationLimits>,
    pub mining: MiningParams,
    pub max_cells: usize,
    pub strategy: Strategy,
    pub weights: QoRWeights,
    /// Random simulation words when the design is too wide to enumerate.
    pub verify_rounds: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "design".to_string(),
            limits: None,
            mining: MiningParams::default(),
            max_cells: 5,
            strategy: Strategy::Greedy,
            weights: QoRWeights::default(),
            verify_rounds: 64,
            seed: 0,
        }
    }
}

pub struct Saturated {
    pub egraph: EGraph,
    pub report: SaturationReport,
    pub graph: PatternGraph,
}

pub fn saturate_netlist(
    netlist: &Netlist,
    lib: &CellLibrary,
    rules: &[RewriteRule],
    limits: Option<&SaturationLimits>,
) -> Result<Saturated, PipelineError> {
    let mut egraph = build_egraph(netlist, lib);
    let limits = limits.cloned().unwrap_or_else(|| SaturationLimits::for_gates(netlist.gate_count()));
    let t = Instant::now();
    let report = saturate(&mut egraph, rules, &limits);
    log::info!(
        "saturated in {:?}: {} e-nodes, {} classes, {:?}",
        t.elapsed(),
        report.enodes,
        report.classes,
        report.stop_reason
    );
    let graph = egraph_to_graph(&egraph, lib)?;
    Ok(Saturated { egraph, report, graph })
}

pub struct Mined<S> {
    pub result: MiningResult,
    pub groups: Vec<PatternGroup>,
    pub candidates: Vec<CandidateCell<S>>,
    pub model: AreaModel<S>,
}

impl<S> Mined<S> {
    pub fn stats(&self) -> MiningStats {
        MiningStats {
            patterns: self.result.patterns.len(),
            truncated: self.result.truncated,
            groups: self.groups.len(),
            candidates: self.candidates.len(),
        }
    }
}

pub fn mine_candidates<S: Scalar>(
    sat: &Saturated,
    lib: &CellLibrary,
    params: &MiningParams,
) -> Result<Mined<S>, PipelineError> {
    let t = Instant::now();
    let result = mine(&sat.graph, params)?;
    let groups = group_by_function(&result.patterns, &sat.graph, lib)?;
    let model = AreaModel::fit(lib)?;
    let candidates = build_candidates(&groups, &result.patterns, &sat.graph, lib, &model);
    log::info!(
        "mined {} patterns, {} functions, {} candidates in {:?}",
        result.patterns.len(),
        groups.len(),
        candidates.len(),
        t.elapsed()
    );
    Ok(Mined { result, groups, candidates, model })
}

pub struct Extension<S> {
    pub report: Report,
    pub library: CellLibrary,
    pub netlist: Netlist,
    pub selected: Vec<CandidateCell<S>>,
}

/// Chooses among `candidates` for `netlist` and maps it onto the result.
///
/// The candidates may have been mined on a different design. With nothing
/// selected the original netlist is kept.
pub fn apply_candidates<S: Scalar>(
    netlist: &Netlist,
    lib: &CellLibrary,
    sat: &Saturated,
    candidates: &[CandidateCell<S>],
    model: &AreaModel<S>,
    stats: MiningStats,
    config: &RunConfig,
) -> Result<Extension<S>, PipelineError> {
    let ev = Evaluator::new(&sat.egraph, &sat.graph, lib, candidates);
    let mut sel = select_cells(&ev, config.max_cells, config.strategy, &config.weights)?;
    let original_area = netlist.area(lib);
    if !sel.chosen.is_empty() && sel.result.area.to_report() >= original_area {
        // extraction prices shared logic per consumer, so the mapped result
        // can lose to the input netlist; keep the input then
        log::info!("selection does not beat the input netlist; keeping it");
        sel.chosen.clear();
    }
    for &k in &sel.chosen {
        let c = &candidates[k];
        assert!(c.arity() <= config.mining.max_inputs, "{} exceeds the input limit", c.name);
        assert!(c.members.iter().all(|m| m.gates <= config.mining.max_gates), "{} exceeds the gate limit", c.name);
    }
    let selected: Vec<CandidateCell<S>> = sel.chosen.iter().map(|&k| candidates[k].clone()).collect();
    let refs: Vec<&CandidateCell<S>> = selected.iter().collect();
    let library = extend_library(lib, &refs)?;
    let out = if sel.chosen.is_empty() {
        netlist.clone()
    } else {
        let n = emit_netlist(&sat.egraph, &sel.result, &library, |k| candidates[k].name.clone())?;
        check_equivalence(netlist, lib, &n, &library, config.verify_rounds, config.seed)?;
        n
    };
    let extended_area = out.area(&library);
    let cells = sel
        .chosen
        .iter()
        .map(|&k| CellReport::new(&candidates[k], sel.result.instances(k)))
        .collect();
    let report = Report {
        circuit: config.name.clone(),
        original_area: round2(original_area),
        extended_area: round2(extended_area),
        reduction_pct: reduction_pct(original_area, extended_area),
        depth_original: netlist.depth(),
        depth_extended: out.depth(),
        gates_original: netlist.gate_count(),
        gates_extended: out.gate_count(),
        max_cells: config.max_cells,
        strategy: sel.strategy,
        qor_weights: config.weights,
        area_model: AreaModel { alpha: model.alpha.to_report(), beta: model.beta.to_report() },
        saturation: sat.report.clone(),
        graph: sat.graph.counts(),
        mining: stats,
        cells,
    };
    Ok(Extension { report, library, netlist: out, selected })
}

pub struct RunOutput<S> {
    pub saturated: Saturated,
    pub mined: Mined<S>,
    pub extension: Extension<S>,
}

/// Saturate, mine and select on one design.
pub fn run_extend<S: Scalar>(
    netlist: &Netlist,
    lib: &CellLibrary,
    rules: &[RewriteRule],
    config: &RunConfig,
) -> Result<RunOutput<S>, PipelineError> {
    let saturated = saturate_netlist(netlist, lib, rules, config.limits.as_ref())?;
    let mined = mine_candidates::<S>(&saturated, lib, &config.mining)?;
    let extension =
        apply_candidates(netlist, lib, &saturated, &mined.candidates, &mined.model, mined.stats(), config)?;
    Ok(RunOutput { saturated, mined, extension })
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), PipelineError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })
}

pub fn saturation_json(sat: &Saturated) -> String {
    serde_json::to_string_pretty(&sat.report).expect("serializable")
}

pub fn egraph_json(sat: &Saturated) -> String {
    serde_json::to_string_pretty(&sat.egraph.snapshot()).expect("serializable")
}

pub fn patterns_json(sat: &Saturated, result: &MiningResult) -> String {
    serde_json::to_string_pretty(&patterns_to_json(&sat.graph, &result.patterns)).expect("serializable")
}

/// Writes every artifact of a run into `dir`, creating it if needed.
pub fn write_outputs<S: Scalar>(dir: &Path, run: &RunOutput<S>, dot: bool) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.display().to_string(), source })?;
    let ext = &run.extension;
    write_file(dir, "report.json", &ext.report.to_json())?;
    write_file(dir, "report.csv", &ext.report.to_csv())?;
    write_file(dir, "extended_library.json", &serialize_library(&ext.library))?;
    write_file(dir, "netlist_extended.json", &serialize_netlist(&ext.netlist, &ext.library))?;
    write_file(dir, "patterns.json", &patterns_json(&run.saturated, &run.mined.result))?;
    write_file(dir, "saturation.json", &saturation_json(&run.saturated))?;
    write_file(dir, "egraph.json", &egraph_json(&run.saturated))?;
    if dot {
        write_file(dir, "pattern_graph.dot", &run.saturated.graph.to_dot())?;
    }
    Ok(())
}
