//! Mapped netlist from an extracted DAG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Evaluation, SelectError};
use crate::egraph::{EGraph, TermNode};
use crate::library::CellLibrary;
use crate::netlist::{Netlist, NetlistBuilder};
use crate::scalar::Scalar;
use crate::truth::TruthTable;

/// Writes the extracted design as a netlist over `lib`.
///
/// `cell_of` maps a candidate index to its name in `lib`. Inputs and outputs
/// keep the e-graph's order and names; an output that is a primary input
/// or shares its driver with an earlier output is driven through a buffer.
pub fn emit_netlist<S: Scalar>(
    g: &EGraph,
    ev: &Evaluation<S>,
    lib: &CellLibrary,
    cell_of: impl Fn(usize) -> String,
) -> Result<Netlist, SelectError> {
    let ex = &ev.extracted;
    let pis: Vec<&str> = g.leaves().keys().map(String::as_str).collect();
    let pos: Vec<&str> = g.roots().keys().map(String::as_str).collect();
    let mut prefix = String::from("_n");
    while pis.iter().chain(&pos).any(|n| n.starts_with(&prefix)) {
        prefix.insert(0, '_');
    }

    let mut net: Vec<String> = ex
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| match n {
            TermNode::Input(name) => name.clone(),
            _ => format!("{prefix}{i}"),
        })
        .collect();
    let mut buffers: Vec<(usize, &str)> = Vec::new();
    let mut claimed = vec![false; ex.nodes.len()];
    for (&r, &po) in ex.roots.iter().zip(&pos) {
        match &ex.nodes[r] {
            TermNode::Input(name) if name == po => {}
            TermNode::Cell { .. } | TermNode::Composite { .. } if !claimed[r] => {
                claimed[r] = true;
                net[r] = po.to_string();
            }
            _ => buffers.push((r, po)),
        }
    }

    let mut b = NetlistBuilder::new();
    for p in &pis {
        b.input(*p);
    }
    for p in &pos {
        b.output(*p);
    }
    let mut id = 0;
    for (i, n) in ex.nodes.iter().enumerate() {
        let (cell, kids) = match n {
            TermNode::Input(_) => continue,
            TermNode::Cell { cell, children } => (lib.cell(*cell).name.clone(), children),
            TermNode::Composite { index, children } => (cell_of(ev.composites[*index].cell), children),
        };
        let ins: Vec<&str> = kids.iter().map(|&c| net[c].as_str()).collect();
        b.gate(lib, format!("U{id}"), &cell, &ins, &net[i]);
        id += 1;
    }
    if !buffers.is_empty() {
        let buf = lib.find_by_function(TruthTable::var(1, 0).expect("arity 1")).ok_or(SelectError::NoBuffer)?;
        let buf = lib.cell(buf).name.clone();
        for (r, po) in buffers {
            b.gate(lib, format!("U{id}"), &buf, &[net[r].as_str()], po);
            id += 1;
        }
    }
    Ok(b.build(lib)?)
}

/// Simulates both netlists on the same stimuli and compares outputs by
/// name. Exhaustive up to 16 inputs, otherwise `rounds` random words.
pub fn check_equivalence(
    a: &Netlist,
    lib_a: &CellLibrary,
    b: &Netlist,
    lib_b: &CellLibrary,
    rounds: usize,
    seed: u64,
) -> Result<(), SelectError> {
    let names = a.pi_names();
    let mut order = Vec::with_capacity(names.len());
    for n in b.pi_names() {
        order.push(names.iter().position(|x| *x == n).ok_or_else(|| SelectError::Mismatch(n.to_string()))?);
    }
    let b_pos = b.po_names();
    let out_map: Vec<Option<usize>> = a.po_names().iter().map(|n| b_pos.iter().position(|x| x == n)).collect();
    if let Some(i) = out_map.iter().position(Option::is_none) {
        return Err(SelectError::Mismatch(a.po_names()[i].to_string()));
    }
    let n = names.len();
    let mut stimuli: Vec<Vec<u64>> = Vec::new();
    if n <= 16 {
        let rows = 1usize << n;
        for start in (0..rows).step_by(64) {
            stimuli.push(
                (0..n)
                    .map(|v| {
                        (0..64.min(rows - start)).fold(0u64, |w, k| w | ((((start + k) >> v) & 1) as u64) << k)
                    })
                    .collect(),
            );
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..rounds {
            stimuli.push((0..n).map(|_| rng.gen()).collect());
        }
    }
    let mask_for = |s: usize| if n <= 16 && (1usize << n) - s * 64 < 64 { (1u64 << ((1usize << n) - s * 64)) - 1 } else { u64::MAX };
    for (s, words) in stimuli.iter().enumerate() {
        let wa = a.simulate_words(lib_a, words);
        let wb_in: Vec<u64> = order.iter().map(|&k| words[k]).collect();
        let wb = b.simulate_words(lib_b, &wb_in);
        let mask = mask_for(s);
        for (i, m) in out_map.iter().enumerate() {
            if (wa[i] ^ wb[m.expect("checked")]) & mask != 0 {
                return Err(SelectError::Mismatch(a.po_names()[i].to_string()));
            }
        }
    }
    Ok(())
}
