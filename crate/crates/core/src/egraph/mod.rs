//! E-graph over library cells with hashconsing and union-find.
//!
//! Congruence is restored by [`EGraph::rebuild`], which re-canonicalizes every
//! live e-node and merges the classes of nodes that become identical. Nodes
//! that collapse onto an older identical node are retired, so the hashcons
//! holds exactly one live node per `(op, canonical children)`.

mod extract;
mod rules;
mod saturate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::library::{CellLibrary, INPUT_CELL};
use crate::netlist::{Driver, Netlist};

pub use extract::{
    extract_term, Choice, Composite, ExtractError, Extracted, Extractor, OpCosts, TermNode,
};
pub use rules::{default_rules, parse_rules, Pattern, RewriteRule, RuleError, DEFAULT_RULES};
pub use saturate::{saturate, SaturationLimits, SaturationReport, StopReason};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EClassId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ENodeId(pub u32);

impl fmt::Display for EClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

impl fmt::Display for ENodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Operator of an e-node: a primary input leaf or a library cell.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Op {
    Input(u32),
    Cell(u32),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ENode {
    pub op: Op,
    pub children: Vec<EClassId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EGraphError {
    #[error("`{op}` takes {expected} inputs, got {got}")]
    Arity { op: String, expected: usize, got: usize },
    #[error("unknown cell `{0}`")]
    UnknownOp(String),
    #[error("unknown e-class {0}")]
    UnknownClass(EClassId),
    #[error("snapshot is inconsistent: {0}")]
    Snapshot(String),
}

#[derive(Clone, Debug, Default)]
pub struct EClass {
    pub nodes: Vec<ENodeId>,
    /// Live nodes that have this class among their children.
    pub parents: Vec<ENodeId>,
}

#[derive(Clone, Debug)]
pub struct EGraph {
    lib: CellLibrary,
    pi_names: Vec<String>,
    nodes: Vec<ENode>,
    node_class: Vec<EClassId>,
    live: Vec<bool>,
    parent: Vec<u32>,
    memo: HashMap<ENode, ENodeId>,
    classes: BTreeMap<EClassId, EClass>,
    roots: IndexMap<String, EClassId>,
    leaves: IndexMap<String, EClassId>,
    dirty: bool,
}

impl EGraph {
    pub fn new(lib: &CellLibrary) -> Self {
        Self {
            lib: lib.clone(),
            pi_names: Vec::new(),
            nodes: Vec::new(),
            node_class: Vec::new(),
            live: Vec::new(),
            parent: Vec::new(),
            memo: HashMap::new(),
            classes: BTreeMap::new(),
            roots: IndexMap::new(),
            leaves: IndexMap::new(),
            dirty: false,
        }
    }

    pub fn library(&self) -> &CellLibrary {
        &self.lib
    }

    pub fn find(&self, id: EClassId) -> EClassId {
        let mut x = id.0;
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        EClassId(x)
    }

    fn find_compress(&mut self, id: EClassId) -> EClassId {
        let root = self.find(id);
        let mut x = id.0;
        while self.parent[x as usize] != root.0 {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root.0;
            x = next;
        }
        root
    }

    fn canonical(&self, node: &ENode) -> ENode {
        ENode { op: node.op, children: node.children.iter().map(|&c| self.find(c)).collect() }
    }

    pub fn op_name(&self, op: Op) -> &str {
        match op {
            Op::Input(_) => INPUT_CELL,
            Op::Cell(c) => &self.lib.cell(c as usize).name,
        }
    }

    pub fn op_arity(&self, op: Op) -> usize {
        match op {
            Op::Input(_) => 0,
            Op::Cell(c) => self.lib.cell(c as usize).arity(),
        }
    }

    /// Name of the primary input a leaf op refers to.
    pub fn pi_name(&self, index: u32) -> &str {
        &self.pi_names[index as usize]
    }

    /// Adds (or looks up) a primary-input leaf.
    pub fn add_input(&mut self, name: &str) -> EClassId {
        if let Some(&c) = self.leaves.get(name) {
            return self.find(c);
        }
        let idx = self.pi_names.len() as u32;
        self.pi_names.push(name.to_string());
        let c = self.insert(ENode { op: Op::Input(idx), children: Vec::new() });
        self.leaves.insert(name.to_string(), c);
        c
    }

    /// Adds a cell e-node by library name.
    pub fn add_cell(&mut self, cell: &str, children: &[EClassId]) -> Result<EClassId, EGraphError> {
        let idx = self.lib.index_of(cell).ok_or_else(|| EGraphError::UnknownOp(cell.to_string()))?;
        self.add_enode(Op::Cell(idx as u32), children)
    }

    /// Adds an e-node, returning the class of an existing identical node
    /// when the hashcons already holds it.
    pub fn add_enode(&mut self, op: Op, children: &[EClassId]) -> Result<EClassId, EGraphError> {
        let expected = match op {
            Op::Input(i) if (i as usize) < self.pi_names.len() => 0,
            Op::Input(_) => return Err(EGraphError::UnknownOp(INPUT_CELL.to_string())),
            Op::Cell(c) if (c as usize) < self.lib.len() => self.op_arity(op),
            Op::Cell(c) => return Err(EGraphError::UnknownOp(format!("#{c}"))),
        };
        if children.len() != expected {
            return Err(EGraphError::Arity {
                op: self.op_name(op).to_string(),
                expected,
                got: children.len(),
            });
        }
        for &c in children {
            if c.0 as usize >= self.parent.len() {
                return Err(EGraphError::UnknownClass(c));
            }
        }
        Ok(self.insert(ENode { op, children: children.to_vec() }))
    }

    fn insert(&mut self, node: ENode) -> EClassId {
        let node = self.canonical(&node);
        if let Some(&id) = self.memo.get(&node) {
            return self.find(self.node_class[id.0 as usize]);
        }
        let nid = ENodeId(self.nodes.len() as u32);
        let cid = EClassId(self.parent.len() as u32);
        self.parent.push(cid.0);
        for &child in &node.children {
            let cls = self.classes.get_mut(&child).expect("canonical child class");
            if !cls.parents.contains(&nid) {
                cls.parents.push(nid);
            }
        }
        self.classes.insert(cid, EClass { nodes: vec![nid], parents: Vec::new() });
        self.memo.insert(node.clone(), nid);
        self.nodes.push(node);
        self.node_class.push(cid);
        self.live.push(true);
        cid
    }

    /// Unions two classes. Congruence is repaired by the next `rebuild`.
    pub fn merge(&mut self, a: EClassId, b: EClassId) -> EClassId {
        let a = self.find_compress(a);
        let b = self.find_compress(b);
        if a == b {
            return a;
        }
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        self.parent[gone.0 as usize] = keep.0;
        let moved = self.classes.remove(&gone).expect("live class");
        let k = self.classes.get_mut(&keep).expect("live class");
        k.nodes.extend(moved.nodes);
        k.parents.extend(moved.parents);
        self.dirty = true;
        keep
    }

    /// Restores the congruence invariant; returns the number of extra
    /// unions it had to perform.
    pub fn rebuild(&mut self) -> usize {
        let mut unions = 0;
        loop {
            let mut changed = false;
            self.memo.clear();
            for i in 0..self.nodes.len() {
                if !self.live[i] {
                    continue;
                }
                let canon = self.canonical(&self.nodes[i]);
                self.nodes[i] = canon.clone();
                match self.memo.get(&canon) {
                    Some(&other) => {
                        let a = self.node_class[other.0 as usize];
                        let b = self.node_class[i];
                        if self.find(a) != self.find(b) {
                            self.merge(a, b);
                            unions += 1;
                            changed = true;
                        }
                        self.live[i] = false;
                    }
                    None => {
                        self.memo.insert(canon, ENodeId(i as u32));
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for c in self.node_class.clone().iter().enumerate() {
            let root = self.find_compress(*c.1);
            self.node_class[c.0] = root;
        }
        for cls in self.classes.values_mut() {
            cls.nodes.clear();
            cls.parents.clear();
        }
        for i in 0..self.nodes.len() {
            if !self.live[i] {
                continue;
            }
            let nid = ENodeId(i as u32);
            let owner = self.node_class[i];
            self.classes.get_mut(&owner).expect("owner").nodes.push(nid);
            for k in 0..self.nodes[i].children.len() {
                let child = self.nodes[i].children[k];
                let cls = self.classes.get_mut(&child).expect("child");
                if cls.parents.last() != Some(&nid) {
                    cls.parents.push(nid);
                }
            }
        }
        let roots: Vec<_> = self.roots.values().copied().collect();
        for (slot, r) in self.roots.values_mut().zip(roots) {
            *slot = find_in(&self.parent, r);
        }
        let leaves: Vec<_> = self.leaves.values().copied().collect();
        for (slot, r) in self.leaves.values_mut().zip(leaves) {
            *slot = find_in(&self.parent, r);
        }
        self.dirty = false;
        unions
    }

    pub fn is_clean(&self) -> bool {
        !self.dirty
    }

    pub fn node(&self, id: ENodeId) -> &ENode {
        &self.nodes[id.0 as usize]
    }

    pub fn is_live(&self, id: ENodeId) -> bool {
        self.live[id.0 as usize]
    }

    pub fn class_of(&self, id: ENodeId) -> EClassId {
        self.find(self.node_class[id.0 as usize])
    }

    /// Canonical class ids in ascending order.
    pub fn class_ids(&self) -> impl Iterator<Item = EClassId> + '_ {
        self.classes.keys().copied()
    }

    pub fn class(&self, id: EClassId) -> &EClass {
        &self.classes[&self.find(id)]
    }

    pub fn classes(&self) -> impl Iterator<Item = (EClassId, &EClass)> + '_ {
        self.classes.iter().map(|(k, v)| (*k, v))
    }

    /// Live e-nodes in ascending id order.
    pub fn live_nodes(&self) -> impl Iterator<Item = (ENodeId, &ENode)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.live[*i])
            .map(|(i, n)| (ENodeId(i as u32), n))
    }

    pub fn node_count(&self) -> usize {
        self.live.iter().filter(|&&l| l).count()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Arena size including retired nodes; an upper bound on node ids.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn roots(&self) -> &IndexMap<String, EClassId> {
        &self.roots
    }

    pub fn leaves(&self) -> &IndexMap<String, EClassId> {
        &self.leaves
    }

    pub fn set_root(&mut self, name: &str, class: EClassId) {
        let c = self.find(class);
        self.roots.insert(name.to_string(), c);
    }

    /// Finds the live node equal to `(op, children)` after canonicalization.
    pub fn lookup(&self, op: Op, children: &[EClassId]) -> Option<EClassId> {
        let key = ENode { op, children: children.iter().map(|&c| self.find(c)).collect() };
        self.memo.get(&key).map(|&n| self.class_of(n))
    }

    /// Scans all live nodes for a congruence violation.
    pub fn check_congruence(&self) -> Result<(), (ENodeId, ENodeId)> {
        let mut seen: HashMap<ENode, ENodeId> = HashMap::new();
        for (id, n) in self.live_nodes() {
            let key = self.canonical(n);
            if let Some(&other) = seen.get(&key) {
                return Err((other, id));
            }
            seen.insert(key, id);
        }
        Ok(())
    }
}

fn find_in(parent: &[u32], id: EClassId) -> EClassId {
    let mut x = id.0;
    while parent[x as usize] != x {
        x = parent[x as usize];
    }
    EClassId(x)
}

/// Loads a netlist: one leaf per PI, one e-node per gate in topological
/// order with children in pin order, and a root per PO.
pub fn build_egraph(netlist: &Netlist, lib: &CellLibrary) -> EGraph {
    let mut g = EGraph::new(lib);
    let mut class_of_net: HashMap<usize, EClassId> = HashMap::new();
    for &p in netlist.pis() {
        let c = g.add_input(netlist.net_name(p));
        class_of_net.insert(p, c);
    }
    for &gi in netlist.topo_order() {
        let gate = &netlist.gates()[gi];
        let children: Vec<EClassId> = gate.inputs.iter().map(|n| class_of_net[n]).collect();
        let c = g
            .add_enode(Op::Cell(gate.cell as u32), &children)
            .expect("validated netlist matches library arity");
        class_of_net.insert(gate.output, c);
    }
    for &p in netlist.pos() {
        let c = match netlist.driver(p) {
            Driver::Input(_) | Driver::Gate(_) => class_of_net[&p],
        };
        g.set_root(netlist.net_name(p), c);
    }
    g
}

/// Serializable image of a rebuilt e-graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub inputs: Vec<String>,
    pub roots: IndexMap<String, EClassId>,
    pub classes: Vec<SnapshotClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotClass {
    pub id: EClassId,
    pub nodes: Vec<SnapshotNode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub id: ENodeId,
    pub op: String,
    pub children: Vec<EClassId>,
}

impl EGraph {
    /// Captures the graph; call on a rebuilt graph.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            inputs: self.pi_names.clone(),
            roots: self.roots.clone(),
            classes: self
                .classes
                .iter()
                .map(|(&id, cls)| SnapshotClass {
                    id,
                    nodes: cls
                        .nodes
                        .iter()
                        .map(|&n| {
                            let node = &self.nodes[n.0 as usize];
                            SnapshotNode {
                                id: n,
                                op: match node.op {
                                    Op::Input(i) => self.pi_names[i as usize].clone(),
                                    Op::Cell(_) => self.op_name(node.op).to_string(),
                                },
                                children: node.children.clone(),
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Restores a snapshot. Leaf nodes carry the PI name as their op.
    pub fn from_snapshot(snap: &Snapshot, lib: &CellLibrary) -> Result<Self, EGraphError> {
        let bad = |m: String| EGraphError::Snapshot(m);
        let mut g = EGraph::new(lib);
        g.pi_names = snap.inputs.clone();
        let max_class = snap.classes.iter().map(|c| c.id.0).max().map_or(0, |m| m + 1);
        let max_node =
            snap.classes.iter().flat_map(|c| c.nodes.iter().map(|n| n.id.0)).max().map_or(0, |m| m + 1);
        g.parent = (0..max_class).collect();
        g.nodes = vec![ENode { op: Op::Input(0), children: Vec::new() }; max_node as usize];
        g.node_class = vec![EClassId(0); max_node as usize];
        g.live = vec![false; max_node as usize];
        for cls in &snap.classes {
            g.classes.insert(cls.id, EClass::default());
        }
        for cls in &snap.classes {
            for n in &cls.nodes {
                let op = if n.children.is_empty() && !lib.index_of(&n.op).is_some_and(|i| lib.cell(i).arity() == 0) {
                    let i = g
                        .pi_names
                        .iter()
                        .position(|p| *p == n.op)
                        .ok_or_else(|| bad(format!("unknown op `{}`", n.op)))?;
                    g.leaves.insert(n.op.clone(), cls.id);
                    Op::Input(i as u32)
                } else {
                    let i = lib.index_of(&n.op).ok_or_else(|| bad(format!("unknown op `{}`", n.op)))?;
                    Op::Cell(i as u32)
                };
                if n.children.len() != g.op_arity(op) {
                    return Err(bad(format!("arity of node {}", n.id)));
                }
                for c in &n.children {
                    if !g.classes.contains_key(c) {
                        return Err(bad(format!("node {} refers to missing class {c}", n.id)));
                    }
                }
                let slot = n.id.0 as usize;
                if g.live[slot] {
                    return Err(bad(format!("duplicate node {}", n.id)));
                }
                g.nodes[slot] = ENode { op, children: n.children.clone() };
                g.node_class[slot] = cls.id;
                g.live[slot] = true;
            }
        }
        for (name, &r) in &snap.roots {
            if !g.classes.contains_key(&r) {
                return Err(bad(format!("root `{name}` refers to missing class {r}")));
            }
            g.roots.insert(name.clone(), r);
        }
        g.rebuild();
        Ok(g)
    }
}
