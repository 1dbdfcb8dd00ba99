//! Flattening of an e-graph into a bipartite, pin-labelled directed graph.
//!
//! Vertices are the canonical e-classes (ascending id) followed by the live
//! e-nodes (ascending id). A class points at each of its member nodes with
//! the node's output pin as edge label; a node points at each child class
//! with the consuming input pin as label.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::egraph::{EClassId, EGraph, ENodeId, Op};
use crate::library::{CellLibrary, INPUT_CELL, PSEUDO_CELLS};

/// Label of every class vertex; sorts before all cell labels.
pub const CLASS_LABEL: &str = "eclass";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphifyError {
    #[error("e-node {0} uses cell `{1}` which is not in the library")]
    MissingOp(ENodeId, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Class(EClassId),
    Node(ENodeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub pin: u16,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GraphCounts {
    pub classes: usize,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Clone, Debug)]
pub struct PatternGraph {
    /// Vertex label ids; 0 is the class label, cells follow in name order.
    pub labels: Vec<u32>,
    pub origin: Vec<Origin>,
    /// Operator of node vertices, `None` for class vertices.
    pub ops: Vec<Option<Op>>,
    pub label_names: Vec<String>,
    pub pin_names: Vec<String>,
    pub edges: Vec<Edge>,
    pub out_edges: Vec<Vec<u32>>,
    pub in_edges: Vec<Vec<u32>>,
    /// For each pin id, its position among the inputs of each cell (by
    /// library index), if the cell has that input pin.
    pin_pos: Vec<Vec<Option<u8>>>,
    /// Library index behind each label, if it names a cell.
    label_cell: Vec<Option<usize>>,
    label_arity: Vec<usize>,
    classes: usize,
}

impl PatternGraph {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn node_count(&self) -> usize {
        self.labels.len() - self.classes
    }

    pub fn is_class(&self, v: u32) -> bool {
        (v as usize) < self.classes
    }

    pub fn label_name(&self, v: u32) -> &str {
        &self.label_names[self.labels[v as usize] as usize]
    }

    pub fn label_cell(&self, label: u32) -> Option<usize> {
        self.label_cell[label as usize]
    }

    /// Input count of the cell a label names; 0 for classes and inputs.
    pub fn label_arity(&self, label: u32) -> usize {
        self.label_arity[label as usize]
    }

    pub fn input_label(&self) -> u32 {
        self.label_names.iter().position(|n| n == INPUT_CELL).expect("input label") as u32
    }

    pub fn pin_name(&self, pin: u16) -> &str {
        &self.pin_names[pin as usize]
    }

    pub fn edge(&self, e: u32) -> Edge {
        self.edges[e as usize]
    }

    /// Input position that `pin` occupies on node vertex `v`.
    pub fn pin_position(&self, v: u32, pin: u16) -> Option<usize> {
        match self.ops[v as usize]? {
            Op::Cell(c) => self.pin_pos[pin as usize][c as usize].map(usize::from),
            Op::Input(_) => None,
        }
    }

    /// Input position of `pin` on library cell `cell`.
    pub fn cell_pin_position(&self, cell: usize, pin: u16) -> Option<usize> {
        self.pin_pos[pin as usize][cell].map(usize::from)
    }

    pub fn is_input_node(&self, v: u32) -> bool {
        matches!(self.ops[v as usize], Some(Op::Input(_)))
    }

    /// Number of input pins of the cell at node vertex `v`.
    pub fn arity(&self, v: u32) -> usize {
        self.out_edges[v as usize].len()
    }

    pub fn counts(&self) -> GraphCounts {
        vertex_count_report(self)
    }

    /// Graphviz rendering; classes are ellipses, nodes boxes.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph pattern_graph {\n");
        for v in 0..self.vertex_count() as u32 {
            match self.origin[v as usize] {
                Origin::Class(c) => {
                    let _ = writeln!(s, "  v{v} [shape=ellipse,label=\"{c}\"];");
                }
                Origin::Node(n) => {
                    let _ = writeln!(s, "  v{v} [shape=box,label=\"{}\\n{n}\"];", self.label_name(v));
                }
            }
        }
        for e in &self.edges {
            let _ = writeln!(s, "  v{} -> v{} [label=\"{}\"];", e.src, e.dst, self.pin_name(e.pin));
        }
        s.push_str("}\n");
        s
    }
}

pub fn vertex_count_report(pg: &PatternGraph) -> GraphCounts {
    GraphCounts { classes: pg.class_count(), nodes: pg.node_count(), edges: pg.edges.len() }
}

/// Builds the bipartite graph of a rebuilt e-graph.
pub fn egraph_to_graph(g: &EGraph, lib: &CellLibrary) -> Result<PatternGraph, GraphifyError> {
    let input_pin = PSEUDO_CELLS.iter().find(|p| p.name == INPUT_CELL).map(|p| p.pin).unwrap_or("O");

    let mut names: BTreeSet<&str> = lib.cells().iter().map(|c| c.name.as_str()).collect();
    names.insert(INPUT_CELL);
    let mut label_names = vec![CLASS_LABEL.to_string()];
    label_names.extend(names.iter().map(|s| s.to_string()));
    let label_of = |name: &str| -> u32 {
        label_names.iter().skip(1).position(|n| n == name).map(|p| p as u32 + 1).expect("known")
    };

    let mut pins: BTreeSet<&str> = BTreeSet::new();
    pins.insert(input_pin);
    for c in lib.cells() {
        pins.insert(&c.output);
        pins.extend(c.inputs.iter().map(String::as_str));
    }
    let label_cell: Vec<Option<usize>> = label_names
        .iter()
        .enumerate()
        .map(|(i, n)| if i == 0 { None } else { lib.index_of(n) })
        .collect();
    let label_arity: Vec<usize> =
        label_cell.iter().map(|c| c.map_or(0, |i| lib.cell(i).arity())).collect();
    let pin_names: Vec<String> = pins.iter().map(|s| s.to_string()).collect();
    let pin_id = |p: &str| pin_names.iter().position(|n| n == p).expect("known pin") as u16;
    let pin_pos: Vec<Vec<Option<u8>>> = pin_names
        .iter()
        .map(|p| lib.cells().iter().map(|c| c.input_index(p).map(|i| i as u8)).collect())
        .collect();

    let class_ids: Vec<EClassId> = g.class_ids().collect();
    let node_ids: Vec<ENodeId> = g.live_nodes().map(|(id, _)| id).collect();
    let classes = class_ids.len();
    let total = classes + node_ids.len();

    let class_vertex = |c: EClassId| class_ids.binary_search(&c).expect("canonical class") as u32;
    let node_vertex = |n: ENodeId| (classes + node_ids.binary_search(&n).expect("live node")) as u32;

    let mut labels = vec![0u32; classes];
    let mut origin: Vec<Origin> = class_ids.iter().map(|&c| Origin::Class(c)).collect();
    let mut ops = vec![None; classes];
    for &n in &node_ids {
        let node = g.node(n);
        let name = match node.op {
            Op::Input(_) => INPUT_CELL,
            Op::Cell(c) => {
                let cell = g.library().cell(c as usize);
                if lib.index_of(&cell.name) != Some(c as usize) {
                    return Err(GraphifyError::MissingOp(n, cell.name.clone()));
                }
                &cell.name
            }
        };
        labels.push(label_of(name));
        origin.push(Origin::Node(n));
        ops.push(Some(node.op));
    }

    let mut edges = Vec::new();
    // stage 1: class -> member nodes, labelled by the output pin
    for &c in &class_ids {
        for &n in &g.class(c).nodes {
            let pin = match g.node(n).op {
                Op::Input(_) => pin_id(input_pin),
                Op::Cell(k) => pin_id(&lib.cell(k as usize).output),
            };
            edges.push(Edge { src: class_vertex(c), dst: node_vertex(n), pin });
        }
    }
    // stage 2: node -> child classes, labelled by input pins in order
    for &n in &node_ids {
        let node = g.node(n);
        if let Op::Cell(k) = node.op {
            for (pin, &child) in lib.cell(k as usize).inputs.iter().zip(&node.children) {
                edges.push(Edge { src: node_vertex(n), dst: class_vertex(g.find(child)), pin: pin_id(pin) });
            }
        }
    }

    let mut out_edges = vec![Vec::new(); total];
    let mut in_edges = vec![Vec::new(); total];
    for (i, e) in edges.iter().enumerate() {
        out_edges[e.src as usize].push(i as u32);
        in_edges[e.dst as usize].push(i as u32);
    }
    Ok(PatternGraph { labels, origin, ops, label_names, pin_names, edges, out_edges, in_edges, pin_pos, label_cell, label_arity, classes })
}
