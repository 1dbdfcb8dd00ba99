//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use cellx::boolfn::{Cube, MinimizedSop};
use cellx::egraph::{build_egraph, saturate, Pattern, SaturationLimits, TermNode};
use cellx::graphify::{egraph_to_graph, PatternGraph};
use cellx::miner::{satisfies_constraints, CodeGraph, DfsCode, DfsEdge, Dir, EdgeLabel, MiningParams};
use cellx::{CellLibrary, Netlist, NetlistBuilder, TruthTable};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random combinational netlist over `lib`. Every PI is read and every
/// unread gate output is a PO.
pub fn random_netlist(rng: &mut impl Rng, lib: &CellLibrary, max_pis: usize, max_gates: usize) -> Netlist {
    let usable: Vec<&str> = lib.cells().iter().filter(|c| c.arity() > 0).map(|c| c.name.as_str()).collect();
    loop {
        let pis = rng.gen_range(1..=max_pis);
        let gates = rng.gen_range(1..=max_gates);
        let mut nets: Vec<String> = (0..pis).map(|i| format!("i{i}")).collect();
        let mut read = vec![false; pis];
        let mut b = NetlistBuilder::new();
        for n in &nets {
            b.input(n.clone());
        }
        for k in 0..gates {
            let cell = lib.get(usable.choose(rng).unwrap()).unwrap();
            let mut ins: Vec<usize> = Vec::new();
            for pin in 0..cell.arity() {
                // unread PIs first so every input gets used
                let unread: Vec<usize> = (0..pis).filter(|&p| !read[p] && !ins.contains(&p)).collect();
                let pick = if pin == 0 && !unread.is_empty() {
                    *unread.choose(rng).unwrap()
                } else {
                    let free: Vec<usize> = (0..nets.len()).filter(|n| !ins.contains(n)).collect();
                    *free.choose(rng).unwrap_or(&rng.gen_range(0..nets.len()))
                };
                ins.push(pick);
            }
            for &i in &ins {
                read[i] = true;
            }
            let names: Vec<&str> = ins.iter().map(|&i| nets[i].as_str()).collect();
            let out = format!("w{k}");
            b.gate(lib, format!("g{k}"), &cell.name, &names, &out);
            nets.push(out);
            read.push(false);
        }
        let mut any = false;
        for i in pis..nets.len() {
            if !read[i] || rng.gen_bool(0.15) {
                b.output(nets[i].clone());
                any = true;
            }
        }
        if !any || read[..pis].iter().any(|r| !r) {
            continue;
        }
        if let Ok(n) = b.build(lib) {
            return n;
        }
    }
}

/// Gate-by-gate evaluation, looping until every net is known.
pub fn simulate(n: &Netlist, lib: &CellLibrary, inputs: &[bool]) -> Vec<bool> {
    let mut val: HashMap<usize, bool> = n.pis().iter().copied().zip(inputs.iter().copied()).collect();
    let mut left: Vec<_> = n.gates().iter().collect();
    while !left.is_empty() {
        let before = left.len();
        left.retain(|g| {
            if g.inputs.iter().all(|i| val.contains_key(i)) {
                let ins: Vec<bool> = g.inputs.iter().map(|i| val[i]).collect();
                val.insert(g.output, lib.cell(g.cell).function.eval(&ins));
                false
            } else {
                true
            }
        });
        assert!(left.len() < before, "netlist has a cycle");
    }
    n.pos().iter().map(|p| val[p]).collect()
}

/// Value of every extracted root, with primary inputs looked up by name.
pub fn eval_extracted(
    nodes: &[TermNode],
    roots: &[usize],
    lib: &CellLibrary,
    pis: &[&str],
    inputs: &[bool],
) -> Vec<bool> {
    let mut v = Vec::with_capacity(nodes.len());
    for n in nodes {
        let x = match n {
            TermNode::Input(name) => inputs[pis.iter().position(|p| p == name).expect("known input")],
            TermNode::Cell { cell, children } => {
                let ins: Vec<bool> = children.iter().map(|&c| v[c]).collect();
                lib.cell(*cell).function.eval(&ins)
            }
            TermNode::Composite { .. } => panic!("no composites expected"),
        };
        v.push(x);
    }
    roots.iter().map(|&r| v[r]).collect()
}

pub fn eval_pattern(p: &Pattern, lib: &CellLibrary, vars: &[bool]) -> bool {
    match p {
        Pattern::Var(i) => vars[*i],
        Pattern::Cell { cell, children } => {
            let ins: Vec<bool> = children.iter().map(|c| eval_pattern(c, lib, vars)).collect();
            lib.cell(*cell).function.eval(&ins)
        }
    }
}

/// Input rows of `n` bits, all of them.
pub fn all_rows(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1usize << n).map(move |r| (0..n).map(|i| r >> i & 1 == 1).collect())
}

fn rel_label(g: &CodeGraph, v: usize, e: usize) -> (usize, EdgeLabel) {
    let (s, d, pin) = g.edges[e];
    if s as usize == v {
        (d as usize, EdgeLabel { dir: Dir::Out, pin })
    } else {
        (s as usize, EdgeLabel { dir: Dir::In, pin })
    }
}

struct Walk<'a> {
    g: &'a CodeGraph,
    order: Vec<usize>,
    idx: Vec<Option<u8>>,
    used: Vec<bool>,
    code: Vec<DfsEdge>,
    out: Vec<(DfsCode, Vec<usize>)>,
}

impl Walk<'_> {
    fn rec(&mut self, stack: Vec<usize>) {
        if self.order.len() == self.g.labels.len() {
            self.out.push((DfsCode::new(self.code.clone()), self.order.clone()));
            return;
        }
        let mut stack = stack;
        while let Some(&u) = stack.last() {
            let opts: Vec<usize> = self.g.incident[u]
                .iter()
                .copied()
                .filter(|&e| !self.used[e] && self.idx[rel_label(self.g, u, e).0].is_none())
                .collect();
            if opts.is_empty() {
                stack.pop();
                continue;
            }
            for e in opts {
                let (w, lab) = rel_label(self.g, u, e);
                let (mark_code, mark_used) = (self.code.len(), self.used.clone());
                let j = self.order.len() as u8;
                self.code.push(DfsEdge::new(self.idx[u].unwrap(), j, self.g.labels[u], lab, self.g.labels[w]));
                self.used[e] = true;
                self.idx[w] = Some(j);
                self.order.push(w);
                let mut back: Vec<(DfsEdge, usize)> = Vec::new();
                for &f in &self.g.incident[w] {
                    if self.used[f] {
                        continue;
                    }
                    let (x, l) = rel_label(self.g, w, f);
                    if let Some(xi) = self.idx[x] {
                        back.push((DfsEdge::new(j, xi, self.g.labels[w], l, self.g.labels[x]), f));
                    }
                }
                back.sort();
                for (b, f) in back {
                    self.code.push(b);
                    self.used[f] = true;
                }
                let mut next = stack.clone();
                next.push(w);
                self.rec(next);
                self.order.pop();
                self.idx[w] = None;
                self.used = mark_used;
                self.code.truncate(mark_code);
            }
            return;
        }
    }
}

/// Code and vertex order of every DFS traversal of a connected graph.
pub fn all_dfs_codes(g: &CodeGraph) -> Vec<(DfsCode, Vec<usize>)> {
    let n = g.labels.len();
    let mut w = Walk { g, order: Vec::new(), idx: vec![None; n], used: vec![false; g.edges.len()], code: Vec::new(), out: Vec::new() };
    for v in 0..n {
        w.idx[v] = Some(0);
        w.order.push(v);
        w.rec(vec![v]);
        w.order.pop();
        w.idx[v] = None;
    }
    w.out
}

/// Smallest code over all traversals and the vertex orders reaching it.
pub fn min_code(g: &CodeGraph) -> (DfsCode, Vec<Vec<usize>>) {
    let all = all_dfs_codes(g);
    let best = all.iter().map(|(c, _)| c).min().expect("connected graph with edges").clone();
    let mut orders: Vec<Vec<usize>> = all.into_iter().filter(|(c, _)| *c == best).map(|(_, o)| o).collect();
    orders.sort();
    orders.dedup();
    (best, orders)
}

pub fn is_connected(g: &CodeGraph) -> bool {
    let n = g.labels.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        for &e in &g.incident[v] {
            stack.push(rel_label(g, v, e).0);
        }
    }
    seen.into_iter().all(|s| s)
}

/// Subgraph of `pg` made of `gates`, their owning classes and their child
/// classes.
pub fn gate_subgraph(pg: &PatternGraph, gates: &[u32]) -> (CodeGraph, Vec<u32>) {
    let mut host: BTreeSet<u32> = gates.iter().copied().collect();
    for &n in gates {
        host.insert(pg.edge(pg.in_edges[n as usize][0]).src);
        for &e in &pg.out_edges[n as usize] {
            host.insert(pg.edge(e).dst);
        }
    }
    let host: Vec<u32> = host.into_iter().collect();
    let local = |h: u32| host.iter().position(|&x| x == h).unwrap() as u8;
    let mut g = CodeGraph { labels: host.iter().map(|&h| pg.labels[h as usize]).collect(), edges: Vec::new(), incident: vec![Vec::new(); host.len()] };
    for &n in gates {
        let mut es = vec![pg.in_edges[n as usize][0]];
        es.extend(pg.out_edges[n as usize].iter().copied());
        for e in es {
            let ed = pg.edge(e);
            let (s, d) = (local(ed.src), local(ed.dst));
            g.incident[s as usize].push(g.edges.len());
            g.incident[d as usize].push(g.edges.len());
            g.edges.push((s, d, ed.pin));
        }
    }
    (g, host)
}

fn combinations(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, k, i + 1, cur, f);
        cur.pop();
    }
}

/// Minimum over pattern vertices of the number of distinct host images.
pub fn mni(projections: &BTreeSet<Vec<u32>>) -> usize {
    let Some(first) = projections.iter().next() else { return 0 };
    (0..first.len())
        .map(|k| projections.iter().map(|p| p[k]).collect::<BTreeSet<_>>().len())
        .min()
        .unwrap_or(0)
}

/// Every gate subset up to the size bound, canonicalised by exhaustive
/// traversal, filtered by the legality check and support.
pub fn brute_force_mine(pg: &PatternGraph, params: &MiningParams) -> BTreeMap<DfsCode, usize> {
    let gates: Vec<u32> = (pg.class_count() as u32..pg.vertex_count() as u32).filter(|&v| !pg.is_input_node(v)).collect();
    let mut found: BTreeMap<DfsCode, BTreeSet<Vec<u32>>> = BTreeMap::new();
    for k in 1..=params.max_gates.min(gates.len()) {
        combinations(gates.len(), k, 0, &mut Vec::new(), &mut |sel| {
            let chosen: Vec<u32> = sel.iter().map(|&i| gates[i]).collect();
            let (g, host) = gate_subgraph(pg, &chosen);
            if !is_connected(&g) {
                return;
            }
            let (code, orders) = min_code(&g);
            let entry = found.entry(code).or_default();
            for o in orders {
                entry.insert(o.into_iter().map(|v| host[v]).collect());
            }
        });
    }
    found
        .into_iter()
        .filter(|(code, _)| satisfies_constraints(pg, params, code))
        .map(|(code, ps)| (code, mni(&ps)))
        .filter(|&(_, s)| s >= params.min_support)
        .collect()
}

/// Graph of a small random netlist, optionally partly saturated.
pub fn random_pattern_graph(rng: &mut impl Rng, lib: &CellLibrary, rules: &[cellx::egraph::RewriteRule], max_vertices: usize) -> PatternGraph {
    loop {
        let n = random_netlist(rng, lib, 4, 5);
        let mut g = build_egraph(&n, lib);
        let limits = SaturationLimits { max_iterations: rng.gen_range(0..3), ..SaturationLimits::for_gates(n.gate_count()) };
        saturate(&mut g, rules, &limits);
        let pg = egraph_to_graph(&g, lib).unwrap();
        if pg.vertex_count() <= max_vertices {
            return pg;
        }
    }
}

pub fn is_implicant(t: &TruthTable, c: &Cube) -> bool {
    (0..t.rows()).filter(|&r| c.covers(r)).all(|r| t.get(r))
}

/// Exactness, primality and irredundancy of a cover.
pub fn check_cover(t: &TruthTable, sop: &MinimizedSop) -> Result<(), String> {
    for r in 0..t.rows() {
        if sop.cubes.iter().any(|c| c.covers(r)) != t.get(r) {
            return Err(format!("row {r} wrong"));
        }
    }
    for c in &sop.cubes {
        if !is_implicant(t, c) {
            return Err(format!("{c:?} not an implicant"));
        }
        for v in 0..t.arity() {
            if c.care >> v & 1 == 1 {
                let bigger = Cube { care: c.care & !(1 << v), value: c.value & !(1 << v) };
                if is_implicant(t, &bigger) {
                    return Err(format!("{c:?} not prime"));
                }
            }
        }
    }
    for (k, _) in sop.cubes.iter().enumerate() {
        let rest = (0..t.rows()).filter(|&r| t.get(r)).all(|r| {
            sop.cubes.iter().enumerate().any(|(m, c)| m != k && c.covers(r))
        });
        if rest {
            return Err(format!("cube {k} redundant"));
        }
    }
    Ok(())
}
