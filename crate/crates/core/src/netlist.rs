//! Gate-level netlists: the JSON document format, structural validation,
//! simulation and the ripple-carry adder generator.

use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::library::CellLibrary;
use crate::truth::TruthTable;

pub type NetId = usize;

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("netlist document is malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("gate `{gate}` uses unknown cell `{cell}`")]
    UnknownCell { gate: String, cell: String },
    #[error("gate `{gate}` connects unknown pin `{pin}` of `{cell}`")]
    UnknownPin { gate: String, cell: String, pin: String },
    #[error("input pin `{pin}` of gate `{gate}` is not connected")]
    FloatingInput { gate: String, pin: String },
    #[error("output pin of gate `{0}` is not connected")]
    FloatingOutput(String),
    #[error("net `{0}` has more than one driver")]
    MultipleDrivers(String),
    #[error("net `{0}` is read but never driven")]
    Undriven(String),
    #[error("output of gate `{0}` drives nothing")]
    Dangling(String),
    #[error("duplicate gate id `{0}`")]
    DuplicateGate(String),
    #[error("combinational cycle through gate `{0}`")]
    Cycle(String),
    #[error("primary output `{0}` is listed twice")]
    DuplicateOutput(String),
    #[error("assignment is missing primary input `{0}`")]
    MissingInput(String),
    #[error("adder width must be positive")]
    ZeroWidth,
    #[error("library has no cell implementing {0}")]
    MissingFunction(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    Gate(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub id: String,
    /// Index into the library the netlist was validated against.
    pub cell: usize,
    /// Driving net per input pin, in library pin order.
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

/// A validated combinational netlist. Gates are kept in document order;
/// `topo` lists them inputs-first.
#[derive(Clone, Debug)]
pub struct Netlist {
    nets: Vec<String>,
    pis: Vec<NetId>,
    pos: Vec<NetId>,
    gates: Vec<Gate>,
    drivers: Vec<Driver>,
    topo: Vec<usize>,
}

/// Incremental construction by net name; `build` validates.
#[derive(Clone, Debug, Default)]
pub struct NetlistBuilder {
    pis: Vec<String>,
    pos: Vec<String>,
    gates: Vec<(String, String, IndexMap<String, String>)>,
}

impl NetlistBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, net: impl Into<String>) -> &mut Self {
        self.pis.push(net.into());
        self
    }

    pub fn output(&mut self, net: impl Into<String>) -> &mut Self {
        self.pos.push(net.into());
        self
    }

    /// Adds a gate whose pins are connected positionally: `inputs` in
    /// library pin order, then the output net.
    pub fn gate(
        &mut self,
        lib: &CellLibrary,
        id: impl Into<String>,
        cell: &str,
        inputs: &[&str],
        output: &str,
    ) -> &mut Self {
        let mut conn = IndexMap::new();
        if let Some(c) = lib.get(cell) {
            for (pin, net) in c.inputs.iter().zip(inputs) {
                conn.insert(pin.clone(), net.to_string());
            }
            conn.insert(c.output.clone(), output.to_string());
        }
        self.gates.push((id.into(), cell.to_string(), conn));
        self
    }

    pub fn gate_pins(
        &mut self,
        id: impl Into<String>,
        cell: impl Into<String>,
        conn: IndexMap<String, String>,
    ) -> &mut Self {
        self.gates.push((id.into(), cell.into(), conn));
        self
    }

    pub fn build(&self, lib: &CellLibrary) -> Result<Netlist, NetlistError> {
        let mut nets: Vec<String> = Vec::new();
        let mut by_name: HashMap<String, NetId> = HashMap::new();
        let mut intern = |name: &str, nets: &mut Vec<String>| -> NetId {
            *by_name.entry(name.to_string()).or_insert_with(|| {
                nets.push(name.to_string());
                nets.len() - 1
            })
        };

        let mut drivers: HashMap<NetId, Driver> = HashMap::new();
        let mut pis = Vec::with_capacity(self.pis.len());
        for (k, name) in self.pis.iter().enumerate() {
            let n = intern(name, &mut nets);
            if drivers.insert(n, Driver::Input(k)).is_some() {
                return Err(NetlistError::MultipleDrivers(name.clone()));
            }
            pis.push(n);
        }

        let mut gates = Vec::with_capacity(self.gates.len());
        let mut seen = HashMap::new();
        for (gi, (id, cell_name, conn)) in self.gates.iter().enumerate() {
            if seen.insert(id.clone(), gi).is_some() {
                return Err(NetlistError::DuplicateGate(id.clone()));
            }
            let cell_idx = lib.index_of(cell_name).ok_or_else(|| NetlistError::UnknownCell {
                gate: id.clone(),
                cell: cell_name.clone(),
            })?;
            let cell = lib.cell(cell_idx);
            for pin in conn.keys() {
                if cell.input_index(pin).is_none() && *pin != cell.output {
                    return Err(NetlistError::UnknownPin {
                        gate: id.clone(),
                        cell: cell_name.clone(),
                        pin: pin.clone(),
                    });
                }
            }
            let mut inputs = Vec::with_capacity(cell.arity());
            for pin in &cell.inputs {
                let net = conn.get(pin).ok_or_else(|| NetlistError::FloatingInput {
                    gate: id.clone(),
                    pin: pin.clone(),
                })?;
                inputs.push(intern(net, &mut nets));
            }
            let out_name = conn
                .get(&cell.output)
                .ok_or_else(|| NetlistError::FloatingOutput(id.clone()))?;
            let output = intern(out_name, &mut nets);
            if drivers.insert(output, Driver::Gate(gi)).is_some() {
                return Err(NetlistError::MultipleDrivers(out_name.clone()));
            }
            gates.push(Gate { id: id.clone(), cell: cell_idx, inputs, output });
        }

        let mut pos = Vec::with_capacity(self.pos.len());
        for name in &self.pos {
            let n = intern(name, &mut nets);
            if pos.contains(&n) {
                return Err(NetlistError::DuplicateOutput(name.clone()));
            }
            pos.push(n);
        }

        let mut driver_vec = Vec::with_capacity(nets.len());
        for (n, name) in nets.iter().enumerate() {
            match drivers.get(&n) {
                Some(d) => driver_vec.push(*d),
                None => return Err(NetlistError::Undriven(name.clone())),
            }
        }

        let mut used = vec![false; nets.len()];
        for g in &gates {
            for &i in &g.inputs {
                used[i] = true;
            }
        }
        for &p in &pos {
            used[p] = true;
        }
        for g in &gates {
            if !used[g.output] {
                return Err(NetlistError::Dangling(g.id.clone()));
            }
        }

        let topo = topo_order(&gates, &driver_vec)?;
        Ok(Netlist { nets, pis, pos, gates, drivers: driver_vec, topo })
    }
}

fn topo_order(gates: &[Gate], drivers: &[Driver]) -> Result<Vec<usize>, NetlistError> {
    let mut indegree = vec![0usize; gates.len()];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    for (gi, g) in gates.iter().enumerate() {
        for &i in &g.inputs {
            if let Driver::Gate(src) = drivers[i] {
                indegree[gi] += 1;
                fanout[src].push(gi);
            }
        }
    }
    let mut order = Vec::with_capacity(gates.len());
    let mut ready: Vec<usize> = (0..gates.len()).filter(|&g| indegree[g] == 0).rev().collect();
    while let Some(g) = ready.pop() {
        order.push(g);
        for &s in fanout[g].iter().rev() {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(s);
            }
        }
    }
    if order.len() != gates.len() {
        let stuck = (0..gates.len()).find(|&g| indegree[g] > 0).unwrap_or(0);
        return Err(NetlistError::Cycle(gates[stuck].id.clone()));
    }
    Ok(order)
}

#[derive(Serialize, Deserialize)]
struct NetlistDoc {
    pis: Vec<String>,
    pos: Vec<String>,
    gates: Vec<GateDoc>,
}

#[derive(Serialize, Deserialize)]
struct GateDoc {
    id: String,
    cell: String,
    conn: IndexMap<String, String>,
}

pub fn parse_netlist(text: &str, lib: &CellLibrary) -> Result<Netlist, NetlistError> {
    let doc: NetlistDoc = serde_json::from_str(text)?;
    let mut b = NetlistBuilder::new();
    for p in doc.pis {
        b.input(p);
    }
    for p in doc.pos {
        b.output(p);
    }
    for g in doc.gates {
        b.gate_pins(g.id, g.cell, g.conn);
    }
    b.build(lib)
}

pub fn serialize_netlist(n: &Netlist, lib: &CellLibrary) -> String {
    let doc = NetlistDoc {
        pis: n.pis.iter().map(|&p| n.nets[p].clone()).collect(),
        pos: n.pos.iter().map(|&p| n.nets[p].clone()).collect(),
        gates: n
            .gates
            .iter()
            .map(|g| {
                let cell = lib.cell(g.cell);
                let mut conn = IndexMap::new();
                for (pin, &net) in cell.inputs.iter().zip(&g.inputs) {
                    conn.insert(pin.clone(), n.nets[net].clone());
                }
                conn.insert(cell.output.clone(), n.nets[g.output].clone());
                GateDoc { id: g.id.clone(), cell: cell.name.clone(), conn }
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("netlist serializes");
    s.push('\n');
    s
}

impl Netlist {
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn pis(&self) -> &[NetId] {
        &self.pis
    }

    pub fn pos(&self) -> &[NetId] {
        &self.pos
    }

    pub fn net_name(&self, n: NetId) -> &str {
        &self.nets[n]
    }

    pub fn pi_names(&self) -> Vec<&str> {
        self.pis.iter().map(|&n| self.nets[n].as_str()).collect()
    }

    pub fn po_names(&self) -> Vec<&str> {
        self.pos.iter().map(|&n| self.nets[n].as_str()).collect()
    }

    pub fn driver(&self, n: NetId) -> Driver {
        self.drivers[n]
    }

    /// Gate indices ordered so that every gate follows its drivers.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Vertices of the DAG view: PIs, gates and one `output` vertex per PO.
    pub fn vertex_count(&self) -> usize {
        self.pis.len() + self.gates.len() + self.pos.len()
    }

    /// Pin-to-pin connections of the DAG view, including PO sinks.
    pub fn edge_count(&self) -> usize {
        self.gates.iter().map(|g| g.inputs.len()).sum::<usize>() + self.pos.len()
    }

    pub fn area(&self, lib: &CellLibrary) -> f64 {
        self.gates.iter().map(|g| lib.cell(g.cell).area).sum()
    }

    /// Longest PI-to-PO path counted in gates.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.nets.len()];
        for &gi in &self.topo {
            let g = &self.gates[gi];
            level[g.output] = 1 + g.inputs.iter().map(|&i| level[i]).max().unwrap_or(0);
        }
        self.pos.iter().map(|&p| level[p]).max().unwrap_or(0)
    }

    /// Evaluates 64 input vectors at once; `inputs[k]` carries PI `k`.
    /// Returns one word per PO.
    pub fn simulate_words(&self, lib: &CellLibrary, inputs: &[u64]) -> Vec<u64> {
        assert_eq!(inputs.len(), self.pis.len(), "one word per primary input");
        let mut value = vec![0u64; self.nets.len()];
        for (k, &p) in self.pis.iter().enumerate() {
            value[p] = inputs[k];
        }
        let mut args = Vec::with_capacity(6);
        for &gi in &self.topo {
            let g = &self.gates[gi];
            args.clear();
            args.extend(g.inputs.iter().map(|&i| value[i]));
            value[g.output] = lib.cell(g.cell).function.eval_words(&args);
        }
        self.pos.iter().map(|&p| value[p]).collect()
    }

    /// Single-vector simulation in PI order, returning PO values in order.
    pub fn simulate_vec(&self, lib: &CellLibrary, inputs: &[bool]) -> Vec<bool> {
        let words: Vec<u64> = inputs.iter().map(|&b| if b { 1 } else { 0 }).collect();
        self.simulate_words(lib, &words).into_iter().map(|w| w & 1 == 1).collect()
    }

    pub fn simulate(
        &self,
        lib: &CellLibrary,
        assignment: &BTreeMap<String, bool>,
    ) -> Result<BTreeMap<String, bool>, NetlistError> {
        let inputs = self
            .pis
            .iter()
            .map(|&p| {
                assignment
                    .get(&self.nets[p])
                    .copied()
                    .ok_or_else(|| NetlistError::MissingInput(self.nets[p].clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let out = self.simulate_vec(lib, &inputs);
        Ok(self.pos.iter().map(|&p| self.nets[p].clone()).zip(out).collect())
    }
}

fn require(lib: &CellLibrary, f: TruthTable, what: &'static str) -> Result<String, NetlistError> {
    lib.find_by_function(f)
        .map(|i| lib.cell(i).name.clone())
        .ok_or(NetlistError::MissingFunction(what))
}

/// Ripple-carry adder with PIs `a0..`, `b0..`, `cin` and POs `s0..`, `cout`.
///
/// Every stage uses the same six-gate template (cells matched by function):
/// `p = XNOR(a, b)`, `s = XNOR(p, c)`, `n = INV(p)`, `g = NAND(a, b)`,
/// `t = NAND(n, c)`, `c' = NAND(g, t)`.
pub fn make_adder(width: usize, lib: &CellLibrary) -> Result<Netlist, NetlistError> {
    if width == 0 {
        return Err(NetlistError::ZeroWidth);
    }
    let xnor = require(lib, TruthTable::from_fn(2, |x| x[0] == x[1]).unwrap(), "XNOR2")?;
    let inv = require(lib, TruthTable::from_fn(1, |x| !x[0]).unwrap(), "INV")?;
    let nand = require(lib, TruthTable::from_fn(2, |x| !(x[0] && x[1])).unwrap(), "NAND2")?;

    let mut b = NetlistBuilder::new();
    for i in 0..width {
        b.input(format!("a{i}"));
    }
    for i in 0..width {
        b.input(format!("b{i}"));
    }
    b.input("cin");
    for i in 0..width {
        b.output(format!("s{i}"));
    }
    b.output("cout");

    for i in 0..width {
        let a = format!("a{i}");
        let bb = format!("b{i}");
        let c = if i == 0 { "cin".to_string() } else { format!("c{i}") };
        let co = if i + 1 == width { "cout".to_string() } else { format!("c{}", i + 1) };
        let (p, s, n, g, t) =
            (format!("p{i}"), format!("s{i}"), format!("n{i}"), format!("g{i}"), format!("t{i}"));
        b.gate(lib, format!("fa{i}_p"), &xnor, &[&a, &bb], &p);
        b.gate(lib, format!("fa{i}_s"), &xnor, &[&p, &c], &s);
        b.gate(lib, format!("fa{i}_n"), &inv, &[&p], &n);
        b.gate(lib, format!("fa{i}_g"), &nand, &[&a, &bb], &g);
        b.gate(lib, format!("fa{i}_t"), &nand, &[&n, &c], &t);
        b.gate(lib, format!("fa{i}_c"), &nand, &[&g, &t], &co);
    }
    b.build(lib)
}

/// Input vector for `make_adder(width)` encoding `a + b + cin`.
pub fn adder_inputs(width: usize, a: u64, b: u64, cin: bool) -> Vec<bool> {
    let mut v = Vec::with_capacity(2 * width + 1);
    v.extend((0..width).map(|i| (a >> i) & 1 == 1));
    v.extend((0..width).map(|i| (b >> i) & 1 == 1));
    v.push(cin);
    v
}

/// Decodes `make_adder` outputs into the integer sum including carry-out.
pub fn adder_outputs(out: &[bool]) -> u128 {
    out.iter().enumerate().fold(0u128, |acc, (i, &b)| acc | ((b as u128) << i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::CellLibrary;

    fn lib() -> CellLibrary {
        CellLibrary::default_library()
    }

    const TWO_GATES: &str = r#"{
  "pis": ["a", "b"],
  "pos": ["y"],
  "gates": [
    {"id": "g1", "cell": "AND2X2", "conn": {"A": "a", "B": "b", "Y": "w"}},
    {"id": "g2", "cell": "INVX1", "conn": {"A": "w", "Y": "y"}}
  ]
}"#;

    #[test]
    fn two_gate_netlist_counts() {
        let n = parse_netlist(TWO_GATES, &lib()).unwrap();
        assert_eq!(n.gate_count(), 2);
        assert_eq!(n.vertex_count(), 5);
        // a->g1, b->g1, g1->g2, g2->PO
        assert_eq!(n.edge_count(), 4);
        assert_eq!(n.depth(), 2);
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let text = r#"{"pis": ["a"], "pos": ["y"], "gates": [
            {"id": "g1", "cell": "AND2X2", "conn": {"A": "a", "B": "y", "Y": "y"}}]}"#;
        assert!(matches!(parse_netlist(text, &lib()), Err(NetlistError::Cycle(g)) if g == "g1"));
    }

    #[test]
    fn structural_errors() {
        let l = lib();
        let unknown = r#"{"pis": ["a"], "pos": ["y"], "gates": [
            {"id": "g1", "cell": "FOO", "conn": {"A": "a", "Y": "y"}}]}"#;
        assert!(matches!(parse_netlist(unknown, &l), Err(NetlistError::UnknownCell { .. })));
        let pin = r#"{"pis": ["a"], "pos": ["y"], "gates": [
            {"id": "g1", "cell": "INVX1", "conn": {"Q": "a", "Y": "y"}}]}"#;
        assert!(matches!(parse_netlist(pin, &l), Err(NetlistError::UnknownPin { .. })));
        let floating = r#"{"pis": ["a"], "pos": ["y"], "gates": [
            {"id": "g1", "cell": "AND2X2", "conn": {"A": "a", "Y": "y"}}]}"#;
        assert!(matches!(parse_netlist(floating, &l), Err(NetlistError::FloatingInput { .. })));
        let multi = r#"{"pis": ["a"], "pos": ["y"], "gates": [
            {"id": "g1", "cell": "INVX1", "conn": {"A": "a", "Y": "y"}},
            {"id": "g2", "cell": "INVX1", "conn": {"A": "a", "Y": "y"}}]}"#;
        assert!(matches!(parse_netlist(multi, &l), Err(NetlistError::MultipleDrivers(_))));
        let undriven = r#"{"pis": ["a"], "pos": ["y"], "gates": [
            {"id": "g1", "cell": "AND2X2", "conn": {"A": "a", "B": "zz", "Y": "y"}}]}"#;
        assert!(matches!(parse_netlist(undriven, &l), Err(NetlistError::Undriven(_))));
        let dangling = r#"{"pis": ["a"], "pos": ["y"], "gates": [
            {"id": "g1", "cell": "INVX1", "conn": {"A": "a", "Y": "y"}},
            {"id": "g2", "cell": "INVX1", "conn": {"A": "a", "Y": "w"}}]}"#;
        assert!(matches!(parse_netlist(dangling, &l), Err(NetlistError::Dangling(_))));
    }

    #[test]
    fn serialize_round_trip() {
        let l = lib();
        let n = make_adder(3, &l).unwrap();
        let text = serialize_netlist(&n, &l);
        let again = parse_netlist(&text, &l).unwrap();
        assert_eq!(serialize_netlist(&again, &l), text);
    }

    #[test]
    fn simulate_basics() {
        let l = lib();
        let mut b = NetlistBuilder::new();
        b.input("a").output("y");
        b.gate(&l, "i1", "INVX1", &["a"], "w").gate(&l, "i2", "INVX1", &["w"], "y");
        let chain = b.build(&l).unwrap();
        assert_eq!(chain.simulate_vec(&l, &[true]), vec![true]);

        let mut b = NetlistBuilder::new();
        b.input("a").input("b").output("y");
        b.gate(&l, "n", "NAND2X1", &["a", "b"], "y");
        let nand = b.build(&l).unwrap();
        let out = nand
            .simulate(&l, &[("a".into(), true), ("b".into(), true)].into_iter().collect())
            .unwrap();
        assert_eq!(out["y"], false);
        assert!(matches!(
            nand.simulate(&l, &[("a".into(), true)].into_iter().collect()),
            Err(NetlistError::MissingInput(_))
        ));
    }

    #[test]
    fn adder_generator() {
        let l = lib();
        assert!(matches!(make_adder(0, &l), Err(NetlistError::ZeroWidth)));
        let one = make_adder(1, &l).unwrap();
        let out = one.simulate_vec(&l, &adder_inputs(1, 1, 1, false));
        assert_eq!(out, vec![false, true]);
        assert_eq!(make_adder(16, &l).unwrap().gate_count(), 96);
        assert_eq!(make_adder(128, &l).unwrap().gate_count(), 768);
        let empty = CellLibrary::default();
        assert!(matches!(make_adder(2, &empty), Err(NetlistError::MissingFunction(_))));
    }
}
