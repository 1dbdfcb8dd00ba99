use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{EClassId, EGraph, ENodeId, Op};
use crate::library::CellLibrary;
use crate::scalar::Scalar;

/// Cost of each library cell by index; primary inputs are free.
#[derive(Clone, Debug, PartialEq)]
pub struct OpCosts<S> {
    pub cells: Vec<S>,
}

impl<S: Scalar> OpCosts<S> {
    pub fn area(lib: &CellLibrary) -> Self {
        Self { cells: lib.cells().iter().map(|c| S::from_area(c.area)).collect() }
    }

    pub fn unit(lib: &CellLibrary) -> Self {
        Self { cells: vec![S::one(); lib.len()] }
    }

    pub fn set(&mut self, lib: &CellLibrary, cell: &str, cost: S) -> bool {
        match lib.index_of(cell) {
            Some(i) => {
                self.cells[i] = cost;
                true
            }
            None => false,
        }
    }

    fn of(&self, op: Op) -> S {
        match op {
            Op::Input(_) => S::zero(),
            Op::Cell(c) => self.cells[c as usize],
        }
    }
}

/// An implementation option that covers `root` by one extra cell whose
/// pins read `inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Composite<S> {
    pub root: EClassId,
    pub inputs: Vec<EClassId>,
    pub cost: S,
    pub cell: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choice {
    Node(ENodeId),
    Composite(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermNode {
    Input(String),
    Cell { cell: usize, children: Vec<usize> },
    /// Index into the composite list the extractor was built with.
    Composite { index: usize, children: Vec<usize> },
}

/// Extracted terms with shared subterms stored once, children before parents.
#[derive(Clone, Debug, PartialEq)]
pub struct Extracted<S> {
    pub nodes: Vec<TermNode>,
    pub roots: Vec<usize>,
    /// Tree cost of each root.
    pub costs: Vec<S>,
}

impl<S> Extracted<S> {
    pub fn root(&self) -> usize {
        self.roots[0]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("e-class {0} has no finite-cost term")]
    NoTerm(EClassId),
    #[error("zero-cost cycle through e-class {0}")]
    Cyclic(EClassId),
}

/// Best implementation per class, relaxed to a fixpoint.
#[derive(Clone, Debug)]
pub struct Extractor<'c, S> {
    best: BTreeMap<EClassId, (S, Choice)>,
    composites: &'c [Composite<S>],
}

impl<'c, S: Scalar> Extractor<'c, S> {
    pub fn new(g: &EGraph, costs: &OpCosts<S>, composites: &'c [Composite<S>]) -> Self {
        let mut by_root: HashMap<EClassId, Vec<usize>> = HashMap::new();
        for (i, c) in composites.iter().enumerate() {
            by_root.entry(g.find(c.root)).or_default().push(i);
        }
        let mut best: BTreeMap<EClassId, (S, Choice)> = BTreeMap::new();
        let better = |cand: (S, Choice), cur: Option<&(S, Choice)>| match cur {
            None => true,
            Some(&(c, ch)) => cand.0 < c || (cand.0 == c && cand.1 < ch),
        };
        loop {
            let mut changed = false;
            for (cid, cls) in g.classes() {
                for &nid in &cls.nodes {
                    let node = g.node(nid);
                    let mut total = costs.of(node.op);
                    let mut ok = true;
                    for ch in &node.children {
                        match best.get(&g.find(*ch)) {
                            Some(&(c, _)) => total = total + c,
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok && better((total, Choice::Node(nid)), best.get(&cid)) {
                        best.insert(cid, (total, Choice::Node(nid)));
                        changed = true;
                    }
                }
                for &ci in by_root.get(&cid).map(Vec::as_slice).unwrap_or(&[]) {
                    let comp = &composites[ci];
                    let mut total = comp.cost;
                    let mut ok = true;
                    for ch in &comp.inputs {
                        match best.get(&g.find(*ch)) {
                            Some(&(c, _)) => total = total + c,
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok && better((total, Choice::Composite(ci)), best.get(&cid)) {
                        best.insert(cid, (total, Choice::Composite(ci)));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Self { best, composites }
    }

    pub fn cost(&self, g: &EGraph, class: EClassId) -> Option<S> {
        self.best.get(&g.find(class)).map(|b| b.0)
    }

    pub fn choice(&self, g: &EGraph, class: EClassId) -> Option<Choice> {
        self.best.get(&g.find(class)).map(|b| b.1)
    }

    /// Builds the chosen terms for all `roots`, sharing common classes.
    pub fn extract(&self, g: &EGraph, roots: &[EClassId]) -> Result<Extracted<S>, ExtractError> {
        let mut out = Extracted { nodes: Vec::new(), roots: Vec::new(), costs: Vec::new() };
        let mut memo: HashMap<EClassId, usize> = HashMap::new();
        let mut on_stack: HashMap<EClassId, ()> = HashMap::new();
        for &r in roots {
            let idx = self.visit(g, g.find(r), &mut out.nodes, &mut memo, &mut on_stack)?;
            out.roots.push(idx);
            out.costs.push(self.best[&g.find(r)].0);
        }
        Ok(out)
    }

    fn visit(
        &self,
        g: &EGraph,
        class: EClassId,
        nodes: &mut Vec<TermNode>,
        memo: &mut HashMap<EClassId, usize>,
        on_stack: &mut HashMap<EClassId, ()>,
    ) -> Result<usize, ExtractError> {
        if let Some(&i) = memo.get(&class) {
            return Ok(i);
        }
        if on_stack.insert(class, ()).is_some() {
            return Err(ExtractError::Cyclic(class));
        }
        let (_, choice) = *self.best.get(&class).ok_or(ExtractError::NoTerm(class))?;
        let term = match choice {
            Choice::Node(nid) => {
                let node = g.node(nid);
                match node.op {
                    Op::Input(i) => TermNode::Input(g.pi_name(i).to_string()),
                    Op::Cell(c) => {
                        let mut children = Vec::with_capacity(node.children.len());
                        for &ch in &node.children {
                            children.push(self.visit(g, g.find(ch), nodes, memo, on_stack)?);
                        }
                        TermNode::Cell { cell: c as usize, children }
                    }
                }
            }
            Choice::Composite(ci) => {
                let mut children = Vec::new();
                for &ch in &self.composites[ci].inputs {
                    children.push(self.visit(g, g.find(ch), nodes, memo, on_stack)?);
                }
                TermNode::Composite { index: ci, children }
            }
        };
        on_stack.remove(&class);
        nodes.push(term);
        let idx = nodes.len() - 1;
        memo.insert(class, idx);
        Ok(idx)
    }
}

/// Minimum-cost term for one root; ties go to the lowest e-node id.
pub fn extract_term<S: Scalar>(
    g: &EGraph,
    root: EClassId,
    costs: &OpCosts<S>,
) -> Result<Extracted<S>, ExtractError> {
    Extractor::new(g, costs, &[]).extract(g, &[root])
}
