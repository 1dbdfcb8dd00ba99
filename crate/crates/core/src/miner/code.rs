//! DFS codes: the canonical string form of mined patterns.

use std::cmp::Ordering;
use std::fmt;

/// Direction of a code edge relative to its `i` endpoint.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Dir {
    /// The underlying edge points from vertex `i` to vertex `j`.
    Out,
    /// The underlying edge points from vertex `j` to vertex `i`.
    In,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeLabel {
    pub dir: Dir,
    pub pin: u16,
}

impl EdgeLabel {
    pub fn flip(self) -> Self {
        let dir = match self.dir {
            Dir::Out => Dir::In,
            Dir::In => Dir::Out,
        };
        Self { dir, pin: self.pin }
    }
}

/// One step of a DFS code: `(i, j, Li, Lij, Lj)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct DfsEdge {
    pub i: u8,
    pub j: u8,
    pub li: u32,
    pub lij: EdgeLabel,
    pub lj: u32,
}

impl DfsEdge {
    pub fn new(i: u8, j: u8, li: u32, lij: EdgeLabel, lj: u32) -> Self {
        Self { i, j, li, lij, lj }
    }

    pub fn is_forward(&self) -> bool {
        self.i < self.j
    }

    /// The directed edge it stands for, as `(src, dst, pin)`.
    pub fn directed(&self) -> (u8, u8, u16) {
        match self.lij.dir {
            Dir::Out => (self.i, self.j, self.lij.pin),
            Dir::In => (self.j, self.i, self.lij.pin),
        }
    }
}

impl Ord for DfsEdge {
    fn cmp(&self, o: &Self) -> Ordering {
        let pos = match (self.is_forward(), o.is_forward()) {
            (true, true) => self.j.cmp(&o.j).then(o.i.cmp(&self.i)),
            (false, false) => self.i.cmp(&o.i).then(self.j.cmp(&o.j)),
            (false, true) => {
                if self.i < o.j {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            (true, false) => {
                if self.j <= o.i {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        };
        pos.then_with(|| (self.li, self.lij, self.lj).cmp(&(o.li, o.lij, o.lj)))
    }
}

impl PartialOrd for DfsEdge {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct DfsCode {
    pub edges: Vec<DfsEdge>,
}

impl DfsCode {
    pub fn new(edges: Vec<DfsEdge>) -> Self {
        Self { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.edges.iter().map(|e| e.i.max(e.j) as usize + 1).max().unwrap_or(0)
    }

    /// Label of every pattern vertex in discovery order.
    pub fn labels(&self) -> Vec<u32> {
        let mut labels = vec![0; self.vertex_count()];
        for e in &self.edges {
            labels[e.i as usize] = e.li;
            labels[e.j as usize] = e.lj;
        }
        labels
    }

    /// Vertices on the rightmost path, rightmost vertex first.
    pub fn rightmost_path(&self) -> Vec<u8> {
        rightmost_path(&self.edges)
    }

    pub fn graph(&self) -> CodeGraph {
        let labels = self.labels();
        let n = labels.len();
        let mut g = CodeGraph { labels, edges: Vec::new(), incident: vec![Vec::new(); n] };
        for e in &self.edges {
            let (s, d, p) = e.directed();
            g.incident[s as usize].push(g.edges.len());
            g.incident[d as usize].push(g.edges.len());
            g.edges.push((s, d, p));
        }
        g
    }

    /// Whether the code was produced by a legal DFS construction.
    pub fn is_valid(&self) -> bool {
        let mut next = 0u8;
        let mut seen = std::collections::HashSet::new();
        for (k, e) in self.edges.iter().enumerate() {
            if k == 0 {
                if (e.i, e.j) != (0, 1) {
                    return false;
                }
                next = 2;
            } else {
                let rmp = rightmost_path(&self.edges[..k]);
                if e.is_forward() {
                    if e.j != next || !rmp.contains(&e.i) {
                        return false;
                    }
                    next += 1;
                } else if e.i != rmp[0] || !rmp.contains(&e.j) || e.j == e.i {
                    return false;
                }
            }
            if !seen.insert(e.directed()) {
                return false;
            }
        }
        let labels = self.labels();
        self.edges.iter().all(|e| labels[e.i as usize] == e.li && labels[e.j as usize] == e.lj)
    }
}

fn rightmost_path(edges: &[DfsEdge]) -> Vec<u8> {
    let n = edges.iter().map(|e| e.i.max(e.j) as usize + 1).max().unwrap_or(0);
    if n == 0 {
        return Vec::new();
    }
    let mut parent = vec![None; n];
    for e in edges.iter().filter(|e| e.is_forward()) {
        parent[e.j as usize] = Some(e.i);
    }
    let mut path = vec![(n - 1) as u8];
    while let Some(p) = parent[*path.last().unwrap() as usize] {
        path.push(p);
    }
    path
}

/// Directed multigraph described by a code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeGraph {
    pub labels: Vec<u32>,
    /// `(src, dst, pin)` per edge, in code order.
    pub edges: Vec<(u8, u8, u16)>,
    pub incident: Vec<Vec<usize>>,
}

impl CodeGraph {
    pub fn out_degree(&self, v: usize) -> usize {
        self.incident[v].iter().filter(|&&e| self.edges[e].0 as usize == v).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.incident[v].iter().filter(|&&e| self.edges[e].1 as usize == v).count()
    }

    /// Whether the directed edges contain a cycle.
    pub fn has_cycle(&self) -> bool {
        let n = self.labels.len();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.in_degree(v)).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &e in &self.incident[v] {
                let (s, d, _) = self.edges[e];
                if s as usize == v {
                    indeg[d as usize] -= 1;
                    if indeg[d as usize] == 0 {
                        stack.push(d as usize);
                    }
                }
            }
        }
        seen < n
    }

    fn label_from(&self, v: usize, e: usize) -> (usize, EdgeLabel) {
        let (s, d, pin) = self.edges[e];
        if s as usize == v {
            (d as usize, EdgeLabel { dir: Dir::Out, pin })
        } else {
            (s as usize, EdgeLabel { dir: Dir::In, pin })
        }
    }
}

#[derive(Clone)]
struct Trial {
    /// Pattern vertex -> discovery index.
    index: Vec<Option<u8>>,
    /// Discovery index -> pattern vertex.
    order: Vec<usize>,
    used: Vec<bool>,
}

impl Trial {
    fn candidates(&self, g: &CodeGraph, rmpath: &[u8], out: &mut Vec<(DfsEdge, usize, Option<usize>)>) {
        let r = (self.order.len() - 1) as u8;
        let rv = self.order[r as usize];
        for &e in &g.incident[rv] {
            if self.used[e] {
                continue;
            }
            let (u, lab) = g.label_from(rv, e);
            if let Some(j) = self.index[u] {
                if j != r && rmpath.contains(&j) {
                    out.push((DfsEdge::new(r, j, g.labels[rv], lab, g.labels[u]), e, None));
                }
            }
        }
        for &i in rmpath {
            let v = self.order[i as usize];
            for &e in &g.incident[v] {
                if self.used[e] {
                    continue;
                }
                let (u, lab) = g.label_from(v, e);
                if self.index[u].is_none() {
                    out.push((DfsEdge::new(i, r + 1, g.labels[v], lab, g.labels[u]), e, Some(u)));
                }
            }
        }
    }

    fn apply(&self, e: usize, new_vertex: Option<usize>) -> Trial {
        let mut t = self.clone();
        t.used[e] = true;
        if let Some(u) = new_vertex {
            t.index[u] = Some(t.order.len() as u8);
            t.order.push(u);
        }
        t
    }
}

fn first_edges(g: &CodeGraph) -> (Option<DfsEdge>, Vec<Trial>) {
    let n = g.labels.len();
    let mut best: Option<DfsEdge> = None;
    let mut trials = Vec::new();
    for v in 0..n {
        for &e in &g.incident[v] {
            let (u, lab) = g.label_from(v, e);
            let cand = DfsEdge::new(0, 1, g.labels[v], lab, g.labels[u]);
            if best.is_some_and(|b| cand > b) {
                continue;
            }
            if best != Some(cand) {
                best = Some(cand);
                trials.clear();
            }
            let mut index = vec![None; n];
            index[v] = Some(0);
            index[u] = Some(1);
            let mut used = vec![false; g.edges.len()];
            used[e] = true;
            trials.push(Trial { index, order: vec![v, u], used });
        }
    }
    (best, trials)
}

/// Whether `code` is the smallest DFS code of the graph it describes.
pub fn is_minimal(code: &DfsCode) -> bool {
    if code.len() <= 1 {
        return true;
    }
    let g = code.graph();
    let (first, mut trials) = first_edges(&g);
    match first {
        Some(f) if f == code.edges[0] => {}
        Some(f) if f < code.edges[0] => return false,
        _ => return true,
    }
    let mut cands = Vec::new();
    for k in 1..code.len() {
        let rmpath = rightmost_path(&code.edges[..k]);
        let target = code.edges[k];
        let mut best: Option<DfsEdge> = None;
        let mut next: Vec<Trial> = Vec::new();
        for t in &trials {
            cands.clear();
            t.candidates(&g, &rmpath, &mut cands);
            for &(c, e, u) in &cands {
                if c < target {
                    return false;
                }
                if c != target {
                    continue;
                }
                best = Some(c);
                next.push(t.apply(e, u));
            }
        }
        if best.is_none() {
            // target unreachable from any minimal prefix: the code was not
            // built by a legal DFS, so it cannot be canonical either
            return false;
        }
        trials = next;
    }
    true
}

/// Smallest DFS code of the directed labelled multigraph `g`, with every
/// vertex order that produces it.
pub fn minimal_code(g: &CodeGraph) -> (DfsCode, Vec<Vec<usize>>) {
    let (first, mut trials) = first_edges(g);
    let Some(first) = first else { return (DfsCode::default(), Vec::new()) };
    let mut edges = vec![first];
    let mut cands = Vec::new();
    while edges.len() < g.edges.len() {
        let rmpath = rightmost_path(&edges);
        let mut best: Option<DfsEdge> = None;
        let mut next: Vec<Trial> = Vec::new();
        for t in &trials {
            cands.clear();
            t.candidates(g, &rmpath, &mut cands);
            for &(c, e, u) in &cands {
                if best.is_some_and(|b| c > b) {
                    continue;
                }
                if best != Some(c) {
                    best = Some(c);
                    next.clear();
                }
                next.push(t.apply(e, u));
            }
        }
        match best {
            Some(b) => edges.push(b),
            None => break,
        }
        trials = next;
    }
    let mut orders: Vec<Vec<usize>> = trials.into_iter().map(|t| t.order).collect();
    orders.sort();
    orders.dedup();
    (DfsCode::new(edges), orders)
}

impl fmt::Display for DfsCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.edges.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            let d = match e.lij.dir {
                Dir::Out => '>',
                Dir::In => '<',
            };
            write!(f, "({},{},{},{}{},{})", e.i, e.j, e.li, d, e.lij.pin, e.lj)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OUT: Dir = Dir::Out;
    const IN: Dir = Dir::In;

    fn e(i: u8, j: u8, li: u32, dir: Dir, pin: u16, lj: u32) -> DfsEdge {
        DfsEdge::new(i, j, li, EdgeLabel { dir, pin }, lj)
    }

    #[test]
    fn edge_order() {
        // backward before forward at the same rightmost vertex
        assert!(e(2, 0, 0, OUT, 0, 0) < e(2, 3, 0, OUT, 0, 0));
        // forward edges: deeper source first
        assert!(e(2, 3, 5, OUT, 0, 0) < e(1, 3, 0, OUT, 0, 0));
        // backward edges: smaller target first
        assert!(e(3, 0, 9, OUT, 0, 0) < e(3, 1, 0, OUT, 0, 0));
        // labels break ties
        assert!(e(0, 1, 0, OUT, 1, 2) < e(0, 1, 0, IN, 0, 1));
        assert!(e(0, 1, 0, OUT, 1, 2) < e(0, 1, 0, OUT, 1, 3));
    }

    #[test]
    fn one_edge_is_minimal() {
        assert!(is_minimal(&DfsCode::new(vec![e(0, 1, 3, IN, 0, 0)])));
    }

    #[test]
    fn path_start_matters() {
        // class(0) -Y-> NAND(2) -A-> class(0): a 2-edge path
        let good = DfsCode::new(vec![e(0, 1, 0, OUT, 3, 2), e(1, 2, 2, OUT, 0, 0)]);
        let bad = DfsCode::new(vec![e(0, 1, 0, IN, 0, 2), e(1, 2, 2, IN, 3, 0)]);
        assert!(good.is_valid() && bad.is_valid());
        assert_eq!(good.graph().edges.len(), bad.graph().edges.len());
        assert!(is_minimal(&good));
        assert!(!is_minimal(&bad));
        let (min, orders) = minimal_code(&bad.graph());
        assert_eq!(min, good);
        assert_eq!(orders, vec![vec![2, 1, 0]]);
    }

    #[test]
    fn symmetric_pattern_has_all_orders() {
        // class -> NAND, NAND -A-> class1, NAND -B-> class2
        let code = DfsCode::new(vec![e(0, 1, 0, OUT, 3, 2), e(1, 2, 2, OUT, 0, 0), e(1, 3, 2, OUT, 1, 0)]);
        assert!(code.is_valid());
        assert!(is_minimal(&code));
        let g = code.graph();
        assert!(!g.has_cycle());
        assert_eq!(g.out_degree(1), 2);
        assert_eq!(code.rightmost_path(), vec![3, 1, 0]);
        assert_eq!(code.to_string(), "(0,1,0,>3,2) (1,2,2,>0,0) (1,3,2,>1,0)");
    }

    #[test]
    fn detects_invalid_codes() {
        assert!(!DfsCode::new(vec![e(0, 2, 0, OUT, 0, 1)]).is_valid());
        let dup = DfsCode::new(vec![e(0, 1, 0, OUT, 0, 1), e(1, 0, 1, IN, 0, 0)]);
        assert!(!dup.is_valid());
    }

    #[test]
    fn cycle_detection() {
        // c0 -> n1 -> c0
        let code = DfsCode::new(vec![e(0, 1, 0, OUT, 3, 2), e(1, 0, 2, OUT, 0, 0)]);
        assert!(code.is_valid());
        assert!(code.graph().has_cycle());
    }
}
