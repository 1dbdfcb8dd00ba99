//! Candidate cells from function groups, and choosing which ones to add.

mod emit;
pub mod model;
pub mod report;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boolfn::{canonicalize, MinimizedSop, PatternGroup};
use crate::egraph::{Composite, EClassId, EGraph, ExtractError, Extracted, Extractor, OpCosts, TermNode};
use crate::graphify::{Origin, PatternGraph};
use crate::library::{CellLibrary, CellType, LibraryError};
use crate::miner::{find_embeddings, DfsCode, PatternGroupRaw};
use crate::netlist::NetlistError;
use crate::scalar::Scalar;
use crate::truth::TruthTable;

pub use emit::{check_equivalence, emit_netlist};
pub use model::{estimate_cell_area, transistor_count, AreaModel};
pub use report::{reduction_pct, CellReport, MiningStats, Report};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("constant functions have no cell realisation")]
    Constant,
    #[error("area model needs at least two distinct non-constant cells, got {0}")]
    Regression(usize),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("library has no buffer to drive an output from a shared net")]
    NoBuffer,
    #[error("QoR weights must be finite and nonnegative")]
    Weights,
    #[error("extended netlist differs from the original on output `{0}`")]
    Mismatch(String),
}

/// One mined pattern realising a candidate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateMember {
    pub code: DfsCode,
    /// Pattern vertex feeding each cell input, in pin order.
    pub inputs: Vec<usize>,
    pub output: usize,
    pub gates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateCell<S> {
    pub name: String,
    pub function: TruthTable,
    pub sop: MinimizedSop,
    pub transistors: usize,
    pub est_area: S,
    pub support: usize,
    pub members: Vec<CandidateMember>,
}

/// Input pin names `A, B, C, ...`.
pub fn pin_names(arity: usize) -> Vec<String> {
    (0..arity).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
}

pub const OUTPUT_PIN: &str = "Y";

impl<S: Scalar> CandidateCell<S> {
    pub fn arity(&self) -> usize {
        self.function.arity()
    }

    pub fn cell_type(&self) -> CellType {
        CellType {
            name: self.name.clone(),
            inputs: pin_names(self.arity()),
            output: OUTPUT_PIN.to_string(),
            area: self.est_area.to_report(),
            function: self.function,
        }
    }
}

/// Base library plus the cells chosen for it.
pub fn extend_library<S: Scalar>(
    base: &CellLibrary,
    cells: &[&CandidateCell<S>],
) -> Result<CellLibrary, SelectError> {
    let mut lib = base.clone();
    for c in cells {
        lib.push(c.cell_type())?;
    }
    Ok(lib)
}

fn base_transistors(pg: &PatternGraph, base: &CellLibrary, code: &DfsCode) -> Option<usize> {
    let mut t = 0;
    for &l in code.labels().iter().filter(|&&l| l != 0) {
        let cell = pg.label_cell(l)?;
        t += transistor_count(&base.cell(cell).function).ok()?;
    }
    Some(t)
}

/// Turns function groups into candidate cells.
///
/// Dropped: constants, functions ignoring one of their inputs, and
/// functions some base cell already implements up to input order. A cell is
/// priced at the cheaper of its own transistor count and that of its
/// smallest discrete realisation.
pub fn build_candidates<S: Scalar>(
    groups: &[PatternGroup],
    patterns: &[PatternGroupRaw],
    pg: &PatternGraph,
    base: &CellLibrary,
    model: &AreaModel<S>,
) -> Vec<CandidateCell<S>> {
    let existing: BTreeSet<TruthTable> =
        base.cells().iter().map(|c| canonicalize(&c.function).table).collect();
    let mut out = Vec::new();
    for grp in groups {
        let f = grp.function;
        if f.is_constant() || (0..f.arity()).any(|i| !f.depends_on(i)) || existing.contains(&f) {
            continue;
        }
        let Ok(own) = transistor_count(&f) else { continue };
        let members: Vec<CandidateMember> = grp
            .members
            .iter()
            .map(|m| CandidateMember {
                code: patterns[m.pattern].code.clone(),
                inputs: m.inputs.clone(),
                output: m.output,
                gates: m.gates,
            })
            .collect();
        let discrete = members.iter().filter_map(|m| base_transistors(pg, base, &m.code)).min();
        let transistors = discrete.map_or(own, |d| d.min(own));
        let est_area = model.area(transistors);
        if est_area <= S::zero() {
            continue;
        }
        out.push(CandidateCell {
            name: format!("CELLX{}_{}", f.arity(), f.to_hex()),
            function: f,
            sop: grp.sop.clone(),
            transistors,
            est_area,
            support: grp.support,
            members,
        });
    }
    out
}

/// Exponents of the objective `delay^d * power^p * area^a`.
///
/// Delay is the unit-delay depth and power is approximated by the number of
/// cell instances; the default scores area alone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QoRWeights {
    pub delay: f64,
    pub power: f64,
    pub area: f64,
}

impl Default for QoRWeights {
    fn default() -> Self {
        Self { delay: 0.0, power: 0.0, area: 1.0 }
    }
}

impl QoRWeights {
    pub fn is_valid(&self) -> bool {
        [self.delay, self.power, self.area].iter().all(|w| w.is_finite() && *w >= 0.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Greedy,
    Exhaustive,
}

/// Largest candidate count the exhaustive search accepts.
pub const EXHAUSTIVE_LIMIT: usize = 15;

/// Result of extracting a design with a given set of added cells.
#[derive(Clone, Debug)]
pub struct Evaluation<S> {
    pub chosen: Vec<usize>,
    pub area: S,
    pub gates: usize,
    pub depth: usize,
    pub extracted: Extracted<S>,
    pub composites: Vec<Composite<S>>,
}

impl<S: Scalar> Evaluation<S> {
    pub fn score(&self, w: &QoRWeights) -> S {
        let pow = |x: S, e: f64| if e == 0.0 { S::one() } else { x.powf(S::from_area(e)) };
        pow(self.area, w.area)
            * pow(S::from_area(self.depth as f64), w.delay)
            * pow(S::from_area(self.gates as f64), w.power)
    }

    /// Instances of candidate `k` in the extracted design.
    pub fn instances(&self, k: usize) -> usize {
        self.extracted
            .nodes
            .iter()
            .filter(|n| matches!(n, TermNode::Composite { index, .. } if self.composites[*index].cell == k))
            .count()
    }
}

/// Prices a saturated e-graph under different candidate subsets.
pub struct Evaluator<'a, S> {
    g: &'a EGraph,
    costs: OpCosts<S>,
    candidates: &'a [CandidateCell<S>],
    composites: Vec<Vec<Composite<S>>>,
    roots: Vec<EClassId>,
}

fn class_at(pg: &PatternGraph, v: u32) -> EClassId {
    match pg.origin[v as usize] {
        Origin::Class(c) => c,
        Origin::Node(n) => panic!("pattern boundary maps to node {n}"),
    }
}

impl<'a, S: Scalar> Evaluator<'a, S> {
    /// `pg` must be the graph of `g`; candidates may come from another design.
    pub fn new(g: &'a EGraph, pg: &PatternGraph, base: &CellLibrary, candidates: &'a [CandidateCell<S>]) -> Self {
        let composites = candidates
            .par_iter()
            .enumerate()
            .map(|(k, cand)| {
                let mut seen: BTreeSet<(EClassId, Vec<EClassId>)> = BTreeSet::new();
                for m in &cand.members {
                    for p in find_embeddings(pg, &m.code) {
                        let root = class_at(pg, p[m.output]);
                        let inputs = m.inputs.iter().map(|&v| class_at(pg, p[v])).collect();
                        seen.insert((root, inputs));
                    }
                }
                seen.into_iter()
                    .map(|(root, inputs)| Composite { root, inputs, cost: cand.est_area, cell: k })
                    .collect()
            })
            .collect();
        Self {
            g,
            costs: OpCosts::area(base),
            candidates,
            composites,
            roots: g.roots().values().map(|&c| g.find(c)).collect(),
        }
    }

    pub fn candidates(&self) -> &[CandidateCell<S>] {
        self.candidates
    }

    /// Places where candidate `k` can be instantiated.
    pub fn matches(&self, k: usize) -> usize {
        self.composites[k].len()
    }

    pub fn evaluate(&self, chosen: &[usize]) -> Result<Evaluation<S>, SelectError> {
        let composites: Vec<Composite<S>> =
            chosen.iter().flat_map(|&k| self.composites[k].iter().cloned()).collect();
        let ex = Extractor::new(self.g, &self.costs, &composites);
        let extracted = ex.extract(self.g, &self.roots)?;
        let mut area = S::zero();
        let mut gates = 0;
        let mut level = vec![0usize; extracted.nodes.len()];
        for (i, n) in extracted.nodes.iter().enumerate() {
            let (cost, kids) = match n {
                TermNode::Input(_) => continue,
                TermNode::Cell { cell, children } => (self.costs.cells[*cell], children),
                TermNode::Composite { index, children } => (composites[*index].cost, children),
            };
            area = area + cost;
            gates += 1;
            level[i] = 1 + kids.iter().map(|&c| level[c]).max().unwrap_or(0);
        }
        let depth = extracted.roots.iter().map(|&r| level[r]).max().unwrap_or(0);
        Ok(Evaluation { chosen: chosen.to_vec(), area, gates, depth, extracted, composites })
    }
}

#[derive(Clone, Debug)]
pub struct Selection<S> {
    pub chosen: Vec<usize>,
    pub strategy: Strategy,
    pub baseline: Evaluation<S>,
    pub result: Evaluation<S>,
}

/// Picks at most `budget` candidates minimising the weighted score.
///
/// Greedy adds the best improving candidate each round; ties go to larger
/// support, then smaller area, then name. Exhaustive tries every subset and
/// falls back to greedy above [`EXHAUSTIVE_LIMIT`] candidates.
pub fn select_cells<S: Scalar>(
    ev: &Evaluator<'_, S>,
    budget: usize,
    strategy: Strategy,
    weights: &QoRWeights,
) -> Result<Selection<S>, SelectError> {
    if !weights.is_valid() {
        return Err(SelectError::Weights);
    }
    let baseline = ev.evaluate(&[])?;
    let n = ev.candidates.len();
    if strategy == Strategy::Exhaustive && n <= EXHAUSTIVE_LIMIT {
        let mut best = baseline.clone();
        let mut best_names: Vec<&str> = Vec::new();
        for mask in 1u32..(1 << n) {
            if mask.count_ones() as usize > budget {
                continue;
            }
            let chosen: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            let e = ev.evaluate(&chosen)?;
            let mut names: Vec<&str> = chosen.iter().map(|&k| ev.candidates[k].name.as_str()).collect();
            names.sort();
            let (s, b) = (e.score(weights), best.score(weights));
            if s < b || (s == b && (names.len(), &names) < (best_names.len(), &best_names)) {
                best = e;
                best_names = names;
            }
        }
        return Ok(Selection { chosen: best.chosen.clone(), strategy, baseline, result: best });
    }
    if strategy == Strategy::Exhaustive {
        log::warn!("{n} candidates exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}; using greedy");
    }
    let mut current = baseline.clone();
    while current.chosen.len() < budget {
        let base_score = current.score(weights);
        let trials: Vec<Result<Evaluation<S>, SelectError>> = (0..n)
            .into_par_iter()
            .filter(|k| !current.chosen.contains(k))
            .map(|k| {
                let mut c = current.chosen.clone();
                c.push(k);
                ev.evaluate(&c)
            })
            .collect();
        let mut best: Option<(S, Evaluation<S>)> = None;
        for t in trials {
            let e = t?;
            let gain = base_score - e.score(weights);
            let k = *e.chosen.last().expect("one added");
            let better = match &best {
                None => true,
                Some((g, b)) => {
                    let (c, o) = (&ev.candidates[k], &ev.candidates[*b.chosen.last().expect("one added")]);
                    gain > *g
                        || (gain == *g
                            && (c.support > o.support
                                || (c.support == o.support
                                    && (c.est_area < o.est_area || (c.est_area == o.est_area && c.name < o.name)))))
                }
            };
            if better {
                best = Some((gain, e));
            }
        }
        match best {
            Some((gain, e)) if gain > S::zero() => {
                log::info!("selected {} (gain {})", ev.candidates[*e.chosen.last().unwrap()].name, gain);
                current = e;
            }
            _ => break,
        }
    }
    Ok(Selection { chosen: current.chosen.clone(), strategy: Strategy::Greedy, baseline, result: current })
}
