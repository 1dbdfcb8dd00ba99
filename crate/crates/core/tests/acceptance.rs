//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cellx::boolfn::{prime_implicants, quine_mccluskey, Cube};
use cellx::egraph::{
    build_egraph, default_rules, extract_term, parse_rules, saturate, EGraph, OpCosts, SaturationLimits,
    SaturationReport, StopReason,
};
use cellx::graphify::GraphCounts;
use cellx::miner::{is_minimal, mine, minimal_code, CodeGraph, MiningParams};
use cellx::pipeline::{run_extend, RunConfig};
use cellx::RunOutput;
use cellx::scalar::round2;
use cellx::selector::{reduction_pct, AreaModel, Evaluator, MiningStats, QoRWeights, Report, Strategy};
use cellx::{make_adder, serialize_library, serialize_netlist, CellLibrary, TruthTable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const MAJ3: u64 = 0b1110_1000;
const XOR3: u64 = 0b1001_0110;

fn lib() -> CellLibrary {
    CellLibrary::default_library()
}

// 1
fn rule_soundness() -> Outcome {
    let lib = lib();
    let rules = default_rules(&lib).map_err(|e| e.to_string())?;
    for r in &rules {
        ensure(r.vars.len() <= 3, || format!("{} has {} variables", r.name, r.vars.len()))?;
        for row in all_rows(r.vars.len()) {
            let (l, rh) = (eval_pattern(&r.lhs, &lib, &row), eval_pattern(&r.rhs, &lib, &row));
            ensure(l == rh, || format!("{} differs on {row:?}", r.name))?;
        }
    }
    Ok(format!("{} rules, exhaustive", rules.len()))
}

// 2
fn saturation_soundness() -> Outcome {
    let lib = lib();
    let rules = default_rules(&lib).unwrap();
    let costs = OpCosts::<f64>::area(&lib);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rows = 0usize;
    let mut enodes = 0usize;
    for case in 0..200 {
        let n = random_netlist(&mut rng, &lib, 10, 50);
        let mut g = build_egraph(&n, &lib);
        let rep = saturate(&mut g, &rules, &SaturationLimits::for_gates(n.gate_count()));
        enodes += rep.enodes;
        let pis = n.pi_names();
        let terms: Vec<_> = n
            .po_names()
            .iter()
            .map(|po| extract_term(&g, g.roots()[*po], &costs).map_err(|e| format!("case {case}: {e}")))
            .collect::<Result<_, _>>()?;
        ensure(pis.len() <= 10, || "too many inputs".into())?;
        for row in all_rows(pis.len()) {
            let want = simulate(&n, &lib, &row);
            for (k, t) in terms.iter().enumerate() {
                let got = eval_extracted(&t.nodes, &t.roots, &lib, &pis, &row)[0];
                ensure(got == want[k], || format!("case {case}: output {} differs on {row:?}", n.po_names()[k]))?;
            }
            rows += 1;
        }
    }
    Ok(format!("200 netlists, {rows} exhaustive rows, {enodes} e-nodes total"))
}

// 3
fn fig3_trace() -> Outcome {
    let lib = lib();
    let mut g = EGraph::new(&lib);
    let a = g.add_input("a");
    let b = g.add_input("b");
    let and = g.add_cell("AND2X2", &[a, b]).unwrap();
    let top = g.add_cell("INVX1", &[and]).unwrap();
    let rules = parse_rules(
        "and_comm: AND2X2(x,y) => AND2X2(y,x)\nnot_and: INVX1(AND2X2(x,y)) => NAND2X1(x,y)\n",
        &lib,
    )
    .unwrap();
    let rep = saturate(&mut g, &rules, &SaturationLimits::default());
    ensure(rep.stop_reason == StopReason::Saturated, || format!("{:?}", rep.stop_reason))?;
    let ops: BTreeSet<String> =
        g.class(g.find(top)).nodes.iter().map(|&n| g.op_name(g.node(n).op).to_string()).collect();
    ensure(ops.contains("INVX1") && ops.contains("NAND2X1"), || format!("top class holds {ops:?}"))?;
    let and_nodes = g.class(g.find(and)).nodes.len();
    ensure(and_nodes == 2, || format!("AND class has {and_nodes} nodes"))?;

    let mut h = EGraph::new(&lib);
    let x = h.add_input("a");
    let n1 = h.add_cell("INVX1", &[x]).unwrap();
    let n2 = h.add_cell("INVX1", &[n1]).unwrap();
    let inv = default_rules(&lib).unwrap().into_iter().filter(|r| r.name == "involution").collect::<Vec<_>>();
    ensure(inv.len() == 1, || "no involution rule".into())?;
    saturate(&mut h, &inv, &SaturationLimits::default());
    ensure(h.find(n2) == h.find(x), || "NOT(NOT(a)) did not merge with a".into())?;
    Ok(format!("top class {ops:?}; NOT(NOT(a)) == a"))
}

// 4
fn miner_oracle() -> Outcome {
    let lib = lib();
    let rules = default_rules(&lib).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut patterns = 0;
    for case in 0..100 {
        let pg = random_pattern_graph(&mut rng, &lib, &rules, 30);
        let params = MiningParams {
            min_support: rng.gen_range(1..=2),
            max_gates: rng.gen_range(1..=3),
            max_inputs: rng.gen_range(1..=3),
            max_patterns: usize::MAX,
        };
        let got: BTreeMap<_, _> =
            mine(&pg, &params).unwrap().patterns.into_iter().map(|p| (p.code, p.support)).collect();
        let want = brute_force_mine(&pg, &params);
        ensure(got == want, || {
            let extra: Vec<_> = got.keys().filter(|k| !want.contains_key(*k)).map(|k| k.to_string()).collect();
            let missing: Vec<_> = want.keys().filter(|k| !got.contains_key(*k)).map(|k| k.to_string()).collect();
            format!("case {case} {params:?}: extra {extra:?}, missing {missing:?}")
        })?;
        patterns += got.len();
    }
    Ok(format!("100 graphs, {patterns} patterns matched"))
}

fn permuted(g: &CodeGraph, rng: &mut impl Rng) -> CodeGraph {
    let n = g.labels.len();
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    let mut labels = vec![0; n];
    for v in 0..n {
        labels[p[v]] = g.labels[v];
    }
    let mut edges: Vec<(u8, u8, u16)> = g.edges.iter().map(|&(s, d, pin)| (p[s as usize] as u8, p[d as usize] as u8, pin)).collect();
    edges.shuffle(rng);
    let mut incident = vec![Vec::new(); n];
    for (k, &(s, d, _)) in edges.iter().enumerate() {
        incident[s as usize].push(k);
        incident[d as usize].push(k);
    }
    CodeGraph { labels, edges, incident }
}

// 5
fn dfs_canonicality() -> Outcome {
    let lib = lib();
    let rules = default_rules(&lib).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = MiningParams { min_support: 1, max_gates: 4, max_inputs: 3, max_patterns: usize::MAX };
    let mut checked = 0;
    let mut rejected = 0;
    while checked < 1000 {
        let pg = random_pattern_graph(&mut rng, &lib, &rules, 40);
        let pats = mine(&pg, &params).unwrap().patterns;
        if pats.is_empty() {
            continue;
        }
        for _ in 0..10 {
            let p = pats.choose(&mut rng).unwrap();
            let g = permuted(&p.code.graph(), &mut rng);
            let all = all_dfs_codes(&g);
            let (best, orders) = min_code(&g);
            ensure(is_minimal(&best), || format!("minimum {best} rejected"))?;
            let (lib_code, mut lib_orders) = minimal_code(&g);
            lib_orders.sort();
            ensure(lib_code == best, || format!("minimal_code {lib_code} != oracle {best}"))?;
            ensure(lib_orders == orders, || format!("orders differ for {best}"))?;
            let others: BTreeSet<_> = all.into_iter().map(|(c, _)| c).filter(|c| *c != best).collect();
            for c in others.iter().take(25) {
                ensure(!is_minimal(c), || format!("non-minimal {c} accepted (min {best})"))?;
                rejected += 1;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} subcircuits, {rejected} non-minimal codes rejected"))
}

fn oracle_primes(t: &TruthTable) -> BTreeSet<(u8, u8)> {
    let n = t.arity();
    let mut cubes = Vec::new();
    for care in 0..1u16 << n {
        for value in 0..1u16 << n {
            if value & !care == 0 {
                cubes.push(Cube { care: care as u8, value: value as u8 });
            }
        }
    }
    let imps: Vec<Cube> = cubes.into_iter().filter(|c| is_implicant(t, c)).collect();
    imps.iter()
        .filter(|c| {
            !imps.iter().any(|d| d.care != c.care && d.care & c.care == d.care && c.value & d.care == d.value)
        })
        .map(|c| (c.care, c.value))
        .collect()
}

// 6
fn quine_mccluskey_exact() -> Outcome {
    let mut n = 0;
    for arity in [3usize, 4] {
        for bits in 0..1u64 << (1 << arity) {
            let t = TruthTable::new(arity, bits).unwrap();
            let sop = quine_mccluskey(&t);
            check_cover(&t, &sop).map_err(|e| format!("{arity}-input {bits:#x}: {e}"))?;
            let primes: BTreeSet<(u8, u8)> = prime_implicants(&t).iter().map(|c| (c.care, c.value)).collect();
            ensure(primes == oracle_primes(&t), || format!("{arity}-input {bits:#x}: prime sets differ"))?;
            n += 1;
        }
    }
    Ok(format!("{n} tables exact, prime and irredundant"))
}

fn adder_run(width: usize, max_cells: usize, seed: u64) -> RunOutput {
    let lib = lib();
    let rules = default_rules(&lib).unwrap();
    let n = make_adder(width, &lib).unwrap();
    let cfg = RunConfig { name: format!("adder{width}"), max_cells, seed, ..RunConfig::default() };
    run_extend::<f64>(&n, &lib, &rules, &cfg).unwrap()
}

// 7
fn adder_case_study(first: &mut Option<RunOutput>) -> Outcome {
    let lib = lib();
    let defaults = adder_run(16, RunConfig::default().max_cells, 0);
    let fns: BTreeSet<u64> = defaults.mined.candidates.iter().map(|c| c.function.bits()).collect();
    ensure(fns.contains(&MAJ3) && fns.contains(&XOR3), || format!("candidates {fns:x?}"))?;

    // every pair of adder16 candidates, priced exhaustively
    let sat = &defaults.saturated;
    let cands = &defaults.mined.candidates;
    let ev = Evaluator::new(&sat.egraph, &sat.graph, &lib, cands);
    let mut best: Option<(f64, Vec<u64>)> = None;
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let a = ev.evaluate(&[i, j]).unwrap().area;
            if best.as_ref().map_or(true, |(b, _)| a < *b) {
                best = Some((a, vec![cands[i].function.bits(), cands[j].function.bits()]));
            }
        }
    }
    let (_, pair) = best.unwrap();
    ensure(pair.contains(&MAJ3) && pair.contains(&XOR3), || format!("best pair {pair:x?}"))?;

    let mut lines = Vec::new();
    for width in [16usize, 32, 64, 128, 256] {
        let t = Instant::now();
        let run = adder_run(width, 2, 0);
        let took = t.elapsed();
        let r = &run.extension.report;
        let picked: BTreeSet<u64> = run.extension.selected.iter().map(|c| c.function.bits()).collect();
        ensure(picked == BTreeSet::from([MAJ3, XOR3]), || format!("adder{width} picked {picked:x?}"))?;
        let ratio = r.gates_extended as f64 / r.gates_original as f64;
        ensure((ratio - 1.0 / 3.0).abs() <= 0.05, || format!("adder{width} gate ratio {ratio:.3}"))?;
        ensure(r.reduction_pct > 0.0, || format!("adder{width} reduction {}", r.reduction_pct))?;
        ensure(took < Duration::from_secs(60), || format!("adder{width} took {took:?}"))?;
        lines.push(format!("w{width}: ratio {ratio:.3}, area -{:.2}%, {:.1}s", r.reduction_pct, took.as_secs_f64()));
        if width == 16 {
            *first = Some(run);
        }
    }
    Ok(lines.join("; "))
}

// 8
fn scale_guard() -> Outcome {
    let lib = lib();
    let n = make_adder(128, &lib).unwrap();
    let mut g = build_egraph(&n, &lib);
    let rep = saturate(&mut g, &default_rules(&lib).unwrap(), &SaturationLimits::for_gates(n.gate_count()));
    let growth = rep.enodes as f64 / n.gate_count() as f64;
    ensure(growth <= 10.0, || format!("{} e-nodes for {} gates", rep.enodes, n.gate_count()))?;
    Ok(format!("{} e-nodes / {} gates = {growth:.2}x ({:?})", rep.enodes, n.gate_count(), rep.stop_reason))
}

// 9
fn report_arithmetic() -> Outcome {
    let pct = reduction_pct(2373.25, 1438.80);
    ensure(pct == 39.37, || format!("got {pct}"))?;
    let r = Report {
        circuit: "adder128".into(),
        original_area: round2(2373.25),
        extended_area: round2(1438.80),
        reduction_pct: pct,
        depth_original: 0,
        depth_extended: 0,
        gates_original: 0,
        gates_extended: 0,
        max_cells: 0,
        strategy: Strategy::Greedy,
        qor_weights: QoRWeights::default(),
        area_model: AreaModel { alpha: 0.0, beta: 0.0 },
        saturation: SaturationReport { iterations: 0, enodes: 0, classes: 0, stop_reason: StopReason::Saturated },
        graph: GraphCounts::default(),
        mining: MiningStats::default(),
        cells: Vec::new(),
    };
    let csv = r.to_csv();
    ensure(csv.contains(",2373.25,1438.80,39.37,"), || csv.clone())?;
    ensure(r.to_json().contains("\"reduction_pct\": 39.37"), || "json".into())?;
    Ok("2373.25 -> 1438.80 prints 39.37%".into())
}

// 10
fn determinism(first: Option<&RunOutput>) -> Outcome {
    let first = first.ok_or("criterion 7 did not produce a run")?;
    let again = adder_run(16, 2, 0);
    let (a, b) = (&first.extension, &again.extension);
    ensure(a.report.to_json() == b.report.to_json(), || "report.json differs".into())?;
    ensure(a.report.to_csv() == b.report.to_csv(), || "report.csv differs".into())?;
    ensure(serialize_library(&a.library) == serialize_library(&b.library), || "library differs".into())?;
    ensure(serialize_netlist(&a.netlist, &a.library) == serialize_netlist(&b.netlist, &b.library), || {
        "netlist differs".into()
    })?;
    Ok("two adder16 runs byte-identical".into())
}

fn main() {
    let mut failed = 0;
    let mut first: Option<RunOutput> = None;
    let mut run = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("PASS criterion {id:>2} {name}: {d} [{secs:.1}s]"),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {e} [{secs:.1}s]");
            }
        }
    };
    run(1, "rule soundness", &mut rule_soundness);
    run(2, "saturation soundness", &mut saturation_soundness);
    run(3, "NOT/AND trace", &mut fig3_trace);
    run(4, "miner vs brute force", &mut miner_oracle);
    run(5, "DFS code canonicality", &mut dfs_canonicality);
    run(6, "Quine-McCluskey", &mut quine_mccluskey_exact);
    run(7, "adder case study", &mut || adder_case_study(&mut first));
    run(8, "e-node growth", &mut scale_guard);
    run(9, "report arithmetic", &mut report_arithmetic);
    run(10, "determinism", &mut || determinism(first.as_ref()));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
