//! Frequent single-output subcircuit mining over a [`PatternGraph`].
//!
//! Patterns grow one edge at a time along the rightmost path of their DFS
//! code and are kept only in canonical (minimal) form. Support is the
//! minimum, over pattern vertices, of the number of distinct host vertices
//! that vertex maps to, which never grows as a pattern is extended.

mod code;
mod cone;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graphify::{Origin, PatternGraph};

pub use code::{is_minimal, minimal_code, CodeGraph, DfsCode, DfsEdge, Dir, EdgeLabel};

/// Pattern vertex index -> host vertex.
pub type Projection = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MiningParams {
    pub min_support: usize,
    /// Maximum gates per pattern.
    pub max_gates: usize,
    /// Maximum pattern inputs.
    pub max_inputs: usize,
    pub max_patterns: usize,
}

impl Default for MiningParams {
    fn default() -> Self {
        Self { min_support: 4, max_gates: 5, max_inputs: 3, max_patterns: 100_000 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MiningError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("pattern vertices exceed the code width of 255")]
    TooWide,
}

impl MiningParams {
    pub fn validate(&self) -> Result<(), MiningError> {
        for (v, name) in [
            (self.min_support, "min_support"),
            (self.max_gates, "max_gates"),
            (self.max_inputs, "max_inputs"),
            (self.max_patterns, "max_patterns"),
        ] {
            if v == 0 {
                return Err(MiningError::NonPositive(name));
            }
        }
        if self.max_gates * 8 > 250 {
            return Err(MiningError::TooWide);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternGroupRaw {
    pub code: DfsCode,
    pub projections: Vec<Projection>,
    pub support: usize,
    /// Distinct host classes the output vertex maps to.
    pub root_images: usize,
}

impl PatternGroupRaw {
    pub fn gates(&self) -> usize {
        self.code.labels().iter().filter(|&&l| l != 0).count()
    }

    pub fn shape(&self) -> Shape {
        Shape::of(&self.code.graph())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MiningResult {
    pub patterns: Vec<PatternGroupRaw>,
    pub truncated: bool,
}

/// Boundary of a complete pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub output: usize,
    /// Input class vertices in order of first appearance.
    pub inputs: Vec<usize>,
    pub gates: Vec<usize>,
}

impl Shape {
    fn of(g: &CodeGraph) -> Shape {
        let n = g.labels.len();
        let mut output = 0;
        let mut inputs = Vec::new();
        let mut gates = Vec::new();
        for v in 0..n {
            if g.labels[v] != 0 {
                gates.push(v);
            } else if g.out_degree(v) == 0 {
                inputs.push(v);
            } else if g.in_degree(v) == 0 {
                output = v;
            }
        }
        Shape { output, inputs, gates }
    }
}

/// Number of distinct images of the least-varied pattern vertex.
pub fn support(projections: &[Projection]) -> usize {
    let Some(first) = projections.first() else { return 0 };
    (0..first.len())
        .map(|k| projections.iter().map(|p| p[k]).collect::<HashSet<_>>().len())
        .min()
        .unwrap_or(0)
}

fn image_count(projections: &[Projection], k: usize) -> usize {
    projections.iter().map(|p| p[k]).collect::<HashSet<_>>().len()
}

fn incident(pg: &PatternGraph, h: u32) -> impl Iterator<Item = (u32, EdgeLabel)> + '_ {
    let outs = pg.out_edges[h as usize].iter().map(move |&e| {
        let ed = pg.edge(e);
        (ed.dst, EdgeLabel { dir: Dir::Out, pin: ed.pin })
    });
    let ins = pg.in_edges[h as usize].iter().map(move |&e| {
        let ed = pg.edge(e);
        (ed.src, EdgeLabel { dir: Dir::In, pin: ed.pin })
    });
    outs.chain(ins)
}

/// All class-first single-edge codes meeting `min_support`, in code order.
/// Edges touching primary-input leaves are not mined.
pub fn find_frequent_1edge(pg: &PatternGraph, min_support: usize) -> Vec<(DfsCode, Vec<Projection>)> {
    let mut groups: BTreeMap<DfsEdge, Vec<Projection>> = BTreeMap::new();
    for c in 0..pg.class_count() as u32 {
        for (n, lab) in incident(pg, c) {
            if pg.is_input_node(n) {
                continue;
            }
            let e = DfsEdge::new(0, 1, pg.labels[c as usize], lab, pg.labels[n as usize]);
            groups.entry(e).or_default().push(vec![c, n]);
        }
    }
    groups
        .into_iter()
        .filter(|(_, p)| support(p) >= min_support)
        .map(|(e, p)| (DfsCode::new(vec![e]), p))
        .collect()
}

/// Every rightmost-path extension of `code` realised by the given
/// projections, with the projections extended by one step.
pub fn find_extensions(
    pg: &PatternGraph,
    min_support: usize,
    code: &DfsCode,
    projections: &[Projection],
) -> Vec<(DfsCode, Vec<Projection>)> {
    let rmpath = code.rightmost_path();
    let Some(&rm) = rmpath.first() else { return Vec::new() };
    let labels = code.labels();
    let used: HashSet<(u8, u8, u16)> = code.edges.iter().map(DfsEdge::directed).collect();
    let mut groups: BTreeMap<DfsEdge, Vec<Projection>> = BTreeMap::new();
    for p in projections {
        let h = p[rm as usize];
        for (other, lab) in incident(pg, h) {
            if pg.is_input_node(other) {
                continue;
            }
            if let Some(j) = p.iter().position(|&x| x == other) {
                let j = j as u8;
                if j == rm || !rmpath.contains(&j) {
                    continue;
                }
                let e = DfsEdge::new(rm, j, labels[rm as usize], lab, labels[j as usize]);
                if !used.contains(&e.directed()) {
                    groups.entry(e).or_default().push(p.clone());
                }
            }
        }
        for &i in &rmpath {
            for (other, lab) in incident(pg, p[i as usize]) {
                if pg.is_input_node(other) || p.contains(&other) {
                    continue;
                }
                let e = DfsEdge::new(i, rm + 1, labels[i as usize], lab, pg.labels[other as usize]);
                let mut q = p.clone();
                q.push(other);
                groups.entry(e).or_default().push(q);
            }
        }
    }
    groups
        .into_iter()
        .filter(|(_, ps)| support(ps) >= min_support)
        .map(|(e, ps)| {
            let mut c = code.clone();
            c.edges.push(e);
            (c, ps)
        })
        .collect()
}

/// True when no extension of the pattern can become a legal subcircuit.
///
/// Besides the size, uniqueness and cycle checks this uses the fact that
/// extensions only touch rightmost-path vertices: every other vertex is
/// already final, so an incomplete gate there can never be completed.
pub fn is_illegal(pg: &PatternGraph, params: &MiningParams, code: &DfsCode) -> bool {
    illegal(pg, params, &code.graph(), &code.rightmost_path())
}

fn illegal(pg: &PatternGraph, params: &MiningParams, g: &CodeGraph, rmpath: &[u8]) -> bool {
    let n = g.labels.len();
    let mut gates = 0;
    let mut roots = 0;
    let mut open = 0;
    let mut missing_pins = 0;
    let mut detached = 0;
    let mut final_roots = 0;
    let mut final_open = 0;
    for v in 0..n {
        let frozen = !rmpath.contains(&(v as u8));
        let (indeg, outdeg) = (g.in_degree(v), g.out_degree(v));
        if g.labels[v] == 0 {
            if outdeg >= 2 {
                return true;
            }
            if outdeg == 0 {
                open += 1;
                final_open += usize::from(frozen);
            }
            if indeg == 0 {
                roots += 1;
                final_roots += usize::from(frozen);
            }
        } else {
            gates += 1;
            let arity = pg.label_arity(g.labels[v]);
            if frozen && (indeg != 1 || outdeg != arity) {
                return true;
            }
            missing_pins += arity.saturating_sub(outdeg);
            if indeg == 0 {
                detached += 1;
            }
        }
    }
    if gates > params.max_gates || final_roots > 1 || final_open > params.max_inputs || g.has_cycle() {
        return true;
    }
    let spare = params.max_gates - gates;
    if spare == 0 && roots > missing_pins + 1 {
        return true;
    }
    open > params.max_inputs + spare + detached
}

/// Whether the pattern is a complete single-output subcircuit within the
/// size and input bounds.
pub fn satisfies_constraints(pg: &PatternGraph, params: &MiningParams, code: &DfsCode) -> bool {
    satisfies(pg, params, &code.graph())
}

fn satisfies(pg: &PatternGraph, params: &MiningParams, g: &CodeGraph) -> bool {
    let input_label = pg.input_label();
    let mut gates = 0;
    let mut outputs = 0;
    let mut inputs = 0;
    for v in 0..g.labels.len() {
        let (indeg, outdeg) = (g.in_degree(v), g.out_degree(v));
        if g.labels[v] == 0 {
            if outdeg > 1 {
                return false;
            }
            if outdeg == 0 {
                inputs += 1;
            } else if indeg == 0 {
                outputs += 1;
            }
            if indeg == 0 && outdeg == 0 {
                return false;
            }
        } else {
            if g.labels[v] == input_label {
                return false;
            }
            gates += 1;
            if indeg != 1 || outdeg != pg.label_arity(g.labels[v]) {
                return false;
            }
        }
    }
    gates >= 1 && gates <= params.max_gates && outputs == 1 && inputs <= params.max_inputs && !g.has_cycle()
}

fn grow(
    pg: &PatternGraph,
    params: &MiningParams,
    code: &DfsCode,
    projections: &[Projection],
    out: &mut Vec<PatternGroupRaw>,
) {
    if !is_minimal(code) {
        return;
    }
    let g = code.graph();
    if illegal(pg, params, &g, &code.rightmost_path()) {
        return;
    }
    let sup = support(projections);
    if satisfies(pg, params, &g) {
        let shape = Shape::of(&g);
        out.push(PatternGroupRaw {
            code: code.clone(),
            projections: projections.to_vec(),
            support: sup,
            root_images: image_count(projections, shape.output),
        });
    }
    for (child, ps) in find_extensions(pg, params.min_support, code, projections) {
        debug_assert!(support(&ps) <= sup);
        grow(pg, params, &child, &ps, out);
    }
}

/// Mines every canonical legal pattern with support at least
/// `params.min_support`, sorted by code.
///
/// Legal patterns are enumerated as cones below each class and keyed by
/// their minimal DFS code; the result is the same set [`mine_gspan`]
/// reaches by edge-wise growth, computed without visiting partial gates.
pub fn mine(pg: &PatternGraph, params: &MiningParams) -> Result<MiningResult, MiningError> {
    params.validate()?;
    let per_root: Vec<Vec<(DfsCode, Vec<Projection>)>> = (0..pg.class_count() as u32)
        .into_par_iter()
        .map(|c| cone::cones_at(pg, params, c))
        .collect();
    let mut groups: BTreeMap<DfsCode, Vec<Projection>> = BTreeMap::new();
    for (code, ps) in per_root.into_iter().flatten() {
        groups.entry(code).or_default().extend(ps);
    }
    let patterns = groups
        .into_iter()
        .filter_map(|(code, mut ps)| {
            ps.sort_unstable();
            ps.dedup();
            let sup = support(&ps);
            (sup >= params.min_support).then(|| {
                let output = Shape::of(&code.graph()).output;
                let root_images = image_count(&ps, output);
                PatternGroupRaw { code, projections: ps, support: sup, root_images }
            })
        })
        .collect();
    Ok(finish(patterns, params))
}

/// Edge-by-edge gSpan search with rightmost-path extensions. Exact but
/// slow on saturated graphs, where most partial patterns hold half-built
/// gates; kept as the reference for [`mine`].
pub fn mine_gspan(pg: &PatternGraph, params: &MiningParams) -> Result<MiningResult, MiningError> {
    params.validate()?;
    let seeds = find_frequent_1edge(pg, params.min_support);
    let mut patterns: Vec<PatternGroupRaw> = seeds
        .par_iter()
        .flat_map_iter(|(code, ps)| {
            let mut out = Vec::new();
            grow(pg, params, code, ps, &mut out);
            out
        })
        .collect();
    patterns.sort_by(|a, b| a.code.cmp(&b.code));
    for p in &mut patterns {
        p.projections.sort_unstable();
    }
    Ok(finish(patterns, params))
}

fn finish(mut patterns: Vec<PatternGroupRaw>, params: &MiningParams) -> MiningResult {
    let truncated = patterns.len() > params.max_patterns;
    if truncated {
        log::warn!("mining produced {} patterns, keeping {}", patterns.len(), params.max_patterns);
        patterns.truncate(params.max_patterns);
    }
    log::info!("mined {} patterns", patterns.len());
    MiningResult { patterns, truncated }
}

/// All embeddings of an arbitrary code in `pg`.
pub fn find_embeddings(pg: &PatternGraph, code: &DfsCode) -> Vec<Projection> {
    let Some(first) = code.edges.first() else { return Vec::new() };
    let mut projs: Vec<Projection> =
        (0..pg.vertex_count() as u32).filter(|&v| pg.labels[v as usize] == first.li).map(|v| vec![v]).collect();
    for e in &code.edges {
        let mut next = Vec::new();
        for p in &projs {
            let h = p[e.i as usize];
            for (other, lab) in incident(pg, h) {
                if lab != e.lij || pg.labels[other as usize] != e.lj {
                    continue;
                }
                if e.is_forward() {
                    if !p.contains(&other) {
                        let mut q = p.clone();
                        q.push(other);
                        next.push(q);
                    }
                } else if p[e.j as usize] == other {
                    next.push(p.clone());
                }
            }
        }
        projs = next;
        if projs.is_empty() {
            break;
        }
    }
    projs
}

#[derive(Serialize)]
struct PatternJson {
    code: Vec<(u8, u8, String, String, String)>,
    support: usize,
    root_images: usize,
    projections_sample: Vec<Vec<String>>,
    gates: usize,
    inputs: usize,
}

/// Export form: `{code, support, root_images, projections_sample, gates, inputs}`.
pub fn patterns_to_json(pg: &PatternGraph, patterns: &[PatternGroupRaw]) -> serde_json::Value {
    let name = |v: u32| match pg.origin[v as usize] {
        Origin::Class(c) => c.to_string(),
        Origin::Node(n) => n.to_string(),
    };
    let items: Vec<PatternJson> = patterns
        .iter()
        .map(|p| PatternJson {
            code: p
                .code
                .edges
                .iter()
                .map(|e| {
                    (
                        e.i,
                        e.j,
                        pg.label_names[e.li as usize].clone(),
                        pg.pin_name(e.lij.pin).to_string(),
                        pg.label_names[e.lj as usize].clone(),
                    )
                })
                .collect(),
            support: p.support,
            root_images: p.root_images,
            projections_sample: p.projections.iter().take(10).map(|q| q.iter().map(|&v| name(v)).collect()).collect(),
            gates: p.gates(),
            inputs: p.shape().inputs.len(),
        })
        .collect();
    serde_json::to_value(items).expect("serializable")
}
