//! Boolean functions of mined patterns: evaluation, two-level
//! minimization and grouping up to input permutation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::graphify::PatternGraph;
use crate::library::CellLibrary;
use crate::miner::{CodeGraph, PatternGroupRaw};
use crate::truth::{TruthTable, MAX_ARITY};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoolFnError {
    #[error("pattern has {0} inputs; at most {MAX_ARITY} are supported")]
    Arity(usize),
    #[error("pattern vertex {0} is not a library cell")]
    NotACell(usize),
}

/// Function of a pattern over its input classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternFunction {
    /// Pattern vertex indices of the inputs, in first-appearance order.
    pub inputs: Vec<usize>,
    pub table: TruthTable,
}

/// Evaluates the pattern's gates over every input assignment.
pub fn pattern_function(
    pattern: &PatternGroupRaw,
    pg: &PatternGraph,
    lib: &CellLibrary,
) -> Result<PatternFunction, BoolFnError> {
    let g = pattern.code.graph();
    let shape = pattern.shape();
    let arity = shape.inputs.len();
    if arity > MAX_ARITY {
        return Err(BoolFnError::Arity(arity));
    }
    let mut value: Vec<Option<u64>> = vec![None; g.labels.len()];
    for (i, &v) in shape.inputs.iter().enumerate() {
        value[v] = Some(TruthTable::var(arity, i).expect("arity checked").bits());
    }
    let out = eval(&g, pg, lib, shape.output, &mut value)?;
    let table = TruthTable::new(arity, out & mask(arity)).expect("arity checked");
    Ok(PatternFunction { inputs: shape.inputs, table })
}

fn mask(arity: usize) -> u64 {
    if arity >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << arity)) - 1
    }
}

fn eval(
    g: &CodeGraph,
    pg: &PatternGraph,
    lib: &CellLibrary,
    v: usize,
    value: &mut Vec<Option<u64>>,
) -> Result<u64, BoolFnError> {
    if let Some(x) = value[v] {
        return Ok(x);
    }
    let x = if g.labels[v] == 0 {
        // a class takes the value of its single member gate
        let e = g.incident[v].iter().find(|&&e| g.edges[e].0 as usize == v).expect("closed class");
        eval(g, pg, lib, g.edges[*e].1 as usize, value)?
    } else {
        let cell = pg.label_cell(g.labels[v]).ok_or(BoolFnError::NotACell(v))?;
        let ct = lib.cell(cell);
        let mut ins = vec![0u64; ct.arity()];
        for &e in &g.incident[v] {
            let (s, d, pin) = g.edges[e];
            if s as usize == v {
                let pos = pg.cell_pin_position(cell, pin).ok_or(BoolFnError::NotACell(v))?;
                ins[pos] = eval(g, pg, lib, d as usize, value)?;
            }
        }
        ct.function.eval_words(&ins)
    };
    value[v] = Some(x);
    Ok(x)
}

/// Literal of one variable in a cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Positive,
    Negative,
    Absent,
}

/// Product term: `care` bits select variables, `value` gives their polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cube {
    pub care: u8,
    pub value: u8,
}

impl Cube {
    pub fn literal(&self, var: usize) -> Literal {
        if self.care & (1 << var) == 0 {
            Literal::Absent
        } else if self.value & (1 << var) != 0 {
            Literal::Positive
        } else {
            Literal::Negative
        }
    }

    pub fn literal_count(&self) -> usize {
        self.care.count_ones() as usize
    }

    pub fn covers(&self, row: usize) -> bool {
        (row as u8) & self.care == self.value
    }

    fn key(&self, arity: usize) -> Vec<Literal> {
        (0..arity).map(|v| self.literal(v)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimizedSop {
    pub arity: usize,
    pub cubes: Vec<Cube>,
}

impl MinimizedSop {
    pub fn literal_count(&self) -> usize {
        self.cubes.iter().map(Cube::literal_count).sum()
    }

    pub fn eval(&self, row: usize) -> bool {
        self.cubes.iter().any(|c| c.covers(row))
    }

    pub fn to_table(&self) -> TruthTable {
        TruthTable::from_fn(self.arity, |x| {
            let row = x.iter().enumerate().fold(0, |r, (i, &b)| r | (usize::from(b) << i));
            self.eval(row)
        })
        .expect("arity within range")
    }
}

const VAR_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

impl fmt::Display for MinimizedSop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cubes.is_empty() {
            return f.write_str("0");
        }
        for (k, c) in self.cubes.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if c.care == 0 {
                f.write_str("1")?;
                continue;
            }
            let mut first = true;
            for v in 0..self.arity {
                let lit = c.literal(v);
                if lit == Literal::Absent {
                    continue;
                }
                if !first {
                    f.write_str("*")?;
                }
                first = false;
                if lit == Literal::Negative {
                    f.write_str("!")?;
                }
                f.write_str(VAR_NAMES[v])?;
            }
        }
        Ok(())
    }
}

/// All prime implicants of `t`, by repeated pairwise merging.
pub fn prime_implicants(t: &TruthTable) -> Vec<Cube> {
    let n = t.arity();
    let full = if n == 0 { 0 } else { ((1u16 << n) - 1) as u8 };
    let mut current: HashSet<Cube> =
        (0..t.rows()).filter(|&r| t.get(r)).map(|r| Cube { care: full, value: r as u8 }).collect();
    let mut primes = Vec::new();
    while !current.is_empty() {
        let mut next = HashSet::new();
        let mut merged = HashSet::new();
        let list: Vec<Cube> = current.iter().copied().collect();
        for (i, a) in list.iter().enumerate() {
            for b in &list[i + 1..] {
                if a.care != b.care {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    next.insert(Cube { care: a.care & !diff, value: a.value & !diff });
                    merged.insert(*a);
                    merged.insert(*b);
                }
            }
        }
        primes.extend(list.into_iter().filter(|c| !merged.contains(c)));
        current = next;
    }
    primes.sort_by(|a, b| a.key(n).cmp(&b.key(n)));
    primes
}

/// Minimum-cube cover of `t` by prime implicants; ties go to fewer
/// literals, then to the lexicographically smallest cube list.
pub fn quine_mccluskey(t: &TruthTable) -> MinimizedSop {
    let n = t.arity();
    let primes = prime_implicants(t);
    let minterms: Vec<usize> = (0..t.rows()).filter(|&r| t.get(r)).collect();
    let mut best: Option<Vec<usize>> = None;
    let mut chosen = Vec::new();
    search(&primes, &minterms, n, &mut chosen, &mut best);
    let mut idx = best.unwrap_or_default();
    idx.sort_unstable();
    MinimizedSop { arity: n, cubes: idx.into_iter().map(|i| primes[i]).collect() }
}

fn cost(primes: &[Cube], pick: &[usize]) -> (usize, usize) {
    (pick.len(), pick.iter().map(|&i| primes[i].literal_count()).sum())
}

fn better(primes: &[Cube], a: &[usize], b: &[usize]) -> bool {
    match cost(primes, a).cmp(&cost(primes, b)) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            let mut x = a.to_vec();
            let mut y = b.to_vec();
            x.sort_unstable();
            y.sort_unstable();
            x < y
        }
    }
}

fn search(primes: &[Cube], minterms: &[usize], n: usize, chosen: &mut Vec<usize>, best: &mut Option<Vec<usize>>) {
    if let Some(b) = best {
        let (bc, bl) = cost(primes, b);
        let (cc, cl) = cost(primes, chosen);
        if cc > bc || (cc == bc && cl > bl) {
            return;
        }
    }
    let uncovered: Vec<usize> =
        minterms.iter().copied().filter(|&m| !chosen.iter().any(|&i| primes[i].covers(m))).collect();
    if uncovered.is_empty() {
        if best.as_ref().map_or(true, |b| better(primes, chosen, b)) {
            *best = Some(chosen.clone());
        }
        return;
    }
    if let Some(b) = best {
        if chosen.len() + 1 > b.len() {
            return;
        }
    }
    // branch on the minterm with the fewest covering primes
    let m = *uncovered
        .iter()
        .min_by_key(|&&m| primes.iter().filter(|p| p.covers(m)).count())
        .expect("nonempty");
    for (i, p) in primes.iter().enumerate() {
        if p.covers(m) && !chosen.contains(&i) {
            chosen.push(i);
            search(primes, minterms, n, chosen, best);
            chosen.pop();
        }
    }
}

/// Representative of a function's class under input permutation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalFunction {
    pub table: TruthTable,
    /// `table == original.permute(&perm)`: canonical input `i` is original
    /// input `perm[i]`.
    pub perm: Vec<usize>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn rec(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    rec(0, &mut cur, &mut out);
    out.sort();
    out
}

/// Smallest table over all input permutations, with the first (in
/// lexicographic order) permutation reaching it.
pub fn canonicalize(t: &TruthTable) -> CanonicalFunction {
    let mut best: Option<(u64, Vec<usize>)> = None;
    for perm in permutations(t.arity()) {
        let bits = t.permute(&perm).bits();
        if best.as_ref().map_or(true, |(b, _)| bits < *b) {
            best = Some((bits, perm));
        }
    }
    let (bits, perm) = best.expect("at least the identity");
    CanonicalFunction { table: TruthTable::new(t.arity(), bits).expect("same arity"), perm }
}

/// One pattern of a group and how its inputs land on the group's
/// canonical inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupMember {
    /// Index into the mined pattern list.
    pub pattern: usize,
    /// Pattern vertex of each canonical input, in canonical order.
    pub inputs: Vec<usize>,
    pub output: usize,
    pub gates: usize,
}

/// Patterns computing the same function up to input permutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternGroup {
    pub function: TruthTable,
    pub sop: MinimizedSop,
    pub members: Vec<GroupMember>,
    /// Distinct host output classes over all members.
    pub support: usize,
}

/// Buckets patterns by canonical function, in order of canonical table.
pub fn group_by_function(
    patterns: &[PatternGroupRaw],
    pg: &PatternGraph,
    lib: &CellLibrary,
) -> Result<Vec<PatternGroup>, BoolFnError> {
    let mut buckets: BTreeMap<TruthTable, (Vec<GroupMember>, HashSet<u32>)> = BTreeMap::new();
    for (k, p) in patterns.iter().enumerate() {
        let f = pattern_function(p, pg, lib)?;
        let canon = canonicalize(&f.table);
        let shape = p.shape();
        let member = GroupMember {
            pattern: k,
            inputs: canon.perm.iter().map(|&i| f.inputs[i]).collect(),
            output: shape.output,
            gates: shape.gates.len(),
        };
        let entry = buckets.entry(canon.table).or_default();
        entry.1.extend(p.projections.iter().map(|q| q[shape.output]));
        entry.0.push(member);
    }
    Ok(buckets
        .into_iter()
        .map(|(table, (members, roots))| PatternGroup {
            function: table,
            sop: quine_mccluskey(&table),
            members,
            support: roots.len(),
        })
        .collect())
}
