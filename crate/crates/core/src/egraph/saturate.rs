use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rules::{RewriteRule, Subst};
use super::{EClassId, EGraph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaturationLimits {
    pub max_iterations: usize,
    pub max_enodes: usize,
    pub time_budget: Duration,
}

impl Default for SaturationLimits {
    fn default() -> Self {
        Self { max_iterations: 16, max_enodes: 100_000, time_budget: Duration::from_secs(60) }
    }
}

impl SaturationLimits {
    /// Defaults scaled to a netlist: 10 e-nodes per gate.
    pub fn for_gates(gates: usize) -> Self {
        Self { max_enodes: (10 * gates).max(1), ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Saturated,
    IterationLimit,
    NodeLimit,
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub iterations: usize,
    pub enodes: usize,
    pub classes: usize,
    pub stop_reason: StopReason,
}

/// Runs match/apply/rebuild rounds until nothing changes or a limit trips.
///
/// Matches are collected per rule in ascending class order and applied in
/// that same order, so the result does not depend on the thread count.
pub fn saturate(g: &mut EGraph, rules: &[RewriteRule], limits: &SaturationLimits) -> SaturationReport {
    let start = Instant::now();
    if !g.is_clean() {
        g.rebuild();
    }
    let mut iterations = 0;
    let stop_reason = loop {
        if iterations >= limits.max_iterations {
            break StopReason::IterationLimit;
        }
        if start.elapsed() > limits.time_budget {
            break StopReason::TimeLimit;
        }
        iterations += 1;
        let class_ids: Vec<EClassId> = g.class_ids().collect();
        let matches: Vec<(usize, EClassId, Subst)> = rules
            .iter()
            .enumerate()
            .flat_map(|(ri, rule)| {
                let graph = &*g;
                class_ids
                    .par_iter()
                    .flat_map_iter(|&c| rule.search(graph, c).into_iter().map(move |s| (ri, c, s)))
                    .collect::<Vec<_>>()
            })
            .collect();
        log::debug!("iteration {iterations}: {} matches", matches.len());

        let nodes_before = g.arena_len();
        let mut merged = false;
        let mut capped = false;
        for (ri, class, subst) in &matches {
            let rule = &rules[*ri];
            if g.node_count() + rule.rhs.size() > limits.max_enodes {
                capped = true;
                break;
            }
            let rhs = rule.instantiate(g, subst);
            if g.find(rhs) != g.find(*class) {
                g.merge(*class, rhs);
                merged = true;
            }
        }
        merged |= g.rebuild() > 0;
        let added = g.arena_len() > nodes_before;
        if capped {
            break StopReason::NodeLimit;
        }
        if !added && !merged {
            break StopReason::Saturated;
        }
    };
    let report = SaturationReport {
        iterations,
        enodes: g.node_count(),
        classes: g.class_count(),
        stop_reason,
    };
    log::info!(
        "saturation: {} iterations, {} e-nodes, {} classes, {:?}",
        report.iterations,
        report.enodes,
        report.classes,
        report.stop_reason
    );
    report
}
