//! Direct enumeration of legal subcircuits as cones below an output class.
//!
//! Every legal pattern has exactly one class without a parent gate, and
//! every gate is reachable from it downwards. Walking classes breadth-first
//! from that root and deciding once per class whether it is a pattern input
//! or is implemented by one of its member gates therefore produces each
//! legal gate set exactly once.

use super::code::{minimal_code, CodeGraph};
use super::{DfsCode, MiningParams, Projection};
use crate::graphify::PatternGraph;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Decision {
    Input,
    Gate(u32),
}

struct Walk<'a> {
    pg: &'a PatternGraph,
    params: &'a MiningParams,
    queue: Vec<u32>,
    decided: Vec<(u32, Decision)>,
    gates: usize,
    inputs: usize,
    out: Vec<(DfsCode, Vec<Projection>)>,
}

impl Walk<'_> {
    fn decision(&self, class: u32) -> Option<Decision> {
        self.decided.iter().find(|(c, _)| *c == class).map(|(_, d)| *d)
    }

    fn children(&self, node: u32) -> impl Iterator<Item = u32> + '_ {
        self.pg.out_edges[node as usize].iter().map(move |&e| self.pg.edge(e).dst)
    }

    /// Whether `target` is reachable from `from` through decided gates.
    fn reaches(&self, from: u32, target: u32) -> bool {
        let mut stack = vec![from];
        let mut seen: Vec<u32> = Vec::new();
        while let Some(c) = stack.pop() {
            if c == target {
                return true;
            }
            if seen.contains(&c) {
                continue;
            }
            seen.push(c);
            if let Some(Decision::Gate(n)) = self.decision(c) {
                stack.extend(self.children(n));
            }
        }
        false
    }

    fn step(&mut self, qi: usize) {
        if qi == self.queue.len() {
            self.emit();
            return;
        }
        let undecided = self.queue.len() - qi;
        let spare = self.params.max_gates - self.gates;
        if self.inputs + undecided.saturating_sub(spare) > self.params.max_inputs {
            return;
        }
        let c = self.queue[qi];
        if qi > 0 && self.inputs < self.params.max_inputs {
            self.decided.push((c, Decision::Input));
            self.inputs += 1;
            self.step(qi + 1);
            self.inputs -= 1;
            self.decided.pop();
        }
        if spare == 0 {
            return;
        }
        for &e in &self.pg.out_edges[c as usize] {
            let m = self.pg.edge(e).dst;
            if self.pg.is_input_node(m) {
                continue;
            }
            self.decided.push((c, Decision::Gate(m)));
            if self.children(m).any(|d| self.reaches(d, c)) {
                self.decided.pop();
                continue;
            }
            let mark = self.queue.len();
            let kids: Vec<u32> = self.children(m).collect();
            for d in kids {
                if !self.queue.contains(&d) {
                    self.queue.push(d);
                }
            }
            self.gates += 1;
            self.step(qi + 1);
            self.gates -= 1;
            self.queue.truncate(mark);
            self.decided.pop();
        }
    }

    fn emit(&mut self) {
        // local vertices: the decided classes, then the chosen gates
        let classes: Vec<u32> = self.queue.clone();
        let gates: Vec<u32> = self
            .decided
            .iter()
            .filter_map(|(_, d)| match d {
                Decision::Gate(n) => Some(*n),
                Decision::Input => None,
            })
            .collect();
        let host: Vec<u32> = classes.iter().chain(&gates).copied().collect();
        let local = |h: u32| host.iter().position(|&x| x == h).expect("in pattern") as u8;
        let mut g = CodeGraph {
            labels: host.iter().map(|&h| self.pg.labels[h as usize]).collect(),
            edges: Vec::new(),
            incident: vec![Vec::new(); host.len()],
        };
        for &n in &gates {
            let owner = self.pg.edge(self.pg.in_edges[n as usize][0]);
            let mut edges = vec![(local(owner.src), local(n), owner.pin)];
            for &e in &self.pg.out_edges[n as usize] {
                let ed = self.pg.edge(e);
                edges.push((local(n), local(ed.dst), ed.pin));
            }
            for (s, d, p) in edges {
                g.incident[s as usize].push(g.edges.len());
                g.incident[d as usize].push(g.edges.len());
                g.edges.push((s, d, p));
            }
        }
        let (code, orders) = minimal_code(&g);
        let projections = orders.into_iter().map(|o| o.into_iter().map(|v| host[v]).collect()).collect();
        self.out.push((code, projections));
    }
}

/// Every legal pattern whose output vertex maps to host class `root`, as
/// its minimal code and the embeddings realising it on this gate set.
pub(crate) fn cones_at(pg: &PatternGraph, params: &MiningParams, root: u32) -> Vec<(DfsCode, Vec<Projection>)> {
    let mut w = Walk {
        pg,
        params,
        queue: vec![root],
        decided: Vec::new(),
        gates: 0,
        inputs: 0,
        out: Vec::new(),
    };
    w.step(0);
    w.out
}
