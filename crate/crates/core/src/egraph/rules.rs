//! Rewrite rules written as `name: LHS => RHS` over library cell names.

use std::fmt;

use thiserror::Error;

use super::{EClassId, EGraph, Op};
use crate::library::CellLibrary;

/// Rule set bundled with the crate: 14 commutativity, 4 De Morgan,
/// 6 inverter-absorption rules and double-inversion removal.
pub const DEFAULT_RULES: &str = include_str!("../../data/default.rules");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("rule `{rule}`: unknown cell `{op}`")]
    UnknownOp { rule: String, op: String },
    #[error("rule `{rule}`: `{op}` takes {expected} inputs, got {got}")]
    Arity { rule: String, op: String, expected: usize, got: usize },
    #[error("rule `{rule}`: variable `{var}` is not bound by the left-hand side")]
    Unbound { rule: String, var: String },
    #[error("rule `{0}`: left-hand side must start with a cell")]
    BareLhs(String),
    #[error("duplicate rule name `{0}`")]
    Duplicate(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    /// Index into the owning rule's variable table.
    Var(usize),
    Cell { cell: usize, children: Vec<Pattern> },
}

impl Pattern {
    pub fn size(&self) -> usize {
        match self {
            Pattern::Var(_) => 0,
            Pattern::Cell { children, .. } => 1 + children.iter().map(Pattern::size).sum::<usize>(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteRule {
    pub name: String,
    pub vars: Vec<String>,
    pub lhs: Pattern,
    pub rhs: Pattern,
}

pub type Subst = Vec<Option<EClassId>>;

impl RewriteRule {
    /// All substitutions under which the left-hand side matches `class`.
    pub fn search(&self, g: &EGraph, class: EClassId) -> Vec<Subst> {
        let mut out = Vec::new();
        ematch(g, &self.lhs, g.find(class), vec![None; self.vars.len()], &mut out);
        out
    }

    /// Adds the right-hand side under `subst`, returning its class.
    pub fn instantiate(&self, g: &mut EGraph, subst: &Subst) -> EClassId {
        build(g, &self.rhs, subst)
    }

    pub fn display<'a>(&'a self, lib: &'a CellLibrary) -> impl fmt::Display + 'a {
        RuleDisplay { rule: self, lib }
    }
}

fn ematch(g: &EGraph, pat: &Pattern, class: EClassId, subst: Subst, out: &mut Vec<Subst>) {
    match pat {
        Pattern::Var(v) => match subst[*v] {
            Some(bound) if bound != class => {}
            Some(_) => out.push(subst),
            None => {
                let mut s = subst;
                s[*v] = Some(class);
                out.push(s);
            }
        },
        Pattern::Cell { cell, children } => {
            for &nid in &g.class(class).nodes {
                let node = g.node(nid);
                if node.op != Op::Cell(*cell as u32) {
                    continue;
                }
                let mut partial = vec![subst.clone()];
                for (child_pat, &child) in children.iter().zip(&node.children) {
                    let mut next = Vec::new();
                    for s in partial {
                        ematch(g, child_pat, g.find(child), s, &mut next);
                    }
                    partial = next;
                    if partial.is_empty() {
                        break;
                    }
                }
                out.extend(partial);
            }
        }
    }
}

fn build(g: &mut EGraph, pat: &Pattern, subst: &Subst) -> EClassId {
    match pat {
        Pattern::Var(v) => subst[*v].expect("rhs variables are bound"),
        Pattern::Cell { cell, children } => {
            let kids: Vec<EClassId> = children.iter().map(|c| build(g, c, subst)).collect();
            g.add_enode(Op::Cell(*cell as u32), &kids).expect("rule arity validated")
        }
    }
}

struct RuleDisplay<'a> {
    rule: &'a RewriteRule,
    lib: &'a CellLibrary,
}

impl RuleDisplay<'_> {
    fn pat(&self, p: &Pattern, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match p {
            Pattern::Var(v) => f.write_str(&self.rule.vars[*v]),
            Pattern::Cell { cell, children } => {
                write!(f, "{}(", self.lib.cell(*cell).name)?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    self.pat(c, f)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.rule.name)?;
        self.pat(&self.rule.lhs, f)?;
        f.write_str(" => ")?;
        self.pat(&self.rule.rhs, f)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

#[derive(Debug)]
enum Ast {
    Ident(String),
    Call(String, Vec<Ast>),
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> RuleError {
        RuleError::Syntax { line: self.line, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<String, RuleError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected identifier at column {}", start + 1)));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Ast, RuleError> {
        let name = self.ident()?;
        if !self.eat(b'(') {
            return Ok(Ast::Ident(name));
        }
        let mut args = Vec::new();
        if !self.eat(b')') {
            loop {
                args.push(self.expr()?);
                if self.eat(b')') {
                    break;
                }
                if !self.eat(b',') {
                    return Err(self.err("expected `,` or `)`"));
                }
            }
        }
        Ok(Ast::Call(name, args))
    }
}

fn is_var(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

fn lower(
    ast: &Ast,
    rule: &str,
    lib: &CellLibrary,
    vars: &mut Vec<String>,
    bind: bool,
) -> Result<Pattern, RuleError> {
    let (name, args): (&str, &[Ast]) = match ast {
        Ast::Ident(n) if is_var(n) => {
            return match vars.iter().position(|v| v == n) {
                Some(i) => Ok(Pattern::Var(i)),
                None if bind => {
                    vars.push(n.clone());
                    Ok(Pattern::Var(vars.len() - 1))
                }
                None => Err(RuleError::Unbound { rule: rule.to_string(), var: n.clone() }),
            };
        }
        Ast::Ident(n) => (n, &[]),
        Ast::Call(n, a) => (n, a),
    };
    let cell = lib
        .index_of(name)
        .ok_or_else(|| RuleError::UnknownOp { rule: rule.to_string(), op: name.to_string() })?;
    let expected = lib.cell(cell).arity();
    if expected != args.len() {
        return Err(RuleError::Arity {
            rule: rule.to_string(),
            op: name.to_string(),
            expected,
            got: args.len(),
        });
    }
    let children =
        args.iter().map(|a| lower(a, rule, lib, vars, bind)).collect::<Result<Vec<_>, _>>()?;
    Ok(Pattern::Cell { cell, children })
}

/// Parses a rule document. Blank lines and `#` comments are ignored.
pub fn parse_rules(text: &str, lib: &CellLibrary) -> Result<Vec<RewriteRule>, RuleError> {
    let mut rules: Vec<RewriteRule> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |msg: &str| RuleError::Syntax { line: line_no, msg: msg.to_string() };
        let (name, body) = line.split_once(':').ok_or_else(|| syntax("expected `name: LHS => RHS`"))?;
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(syntax("invalid rule name"));
        }
        let (lhs_text, rhs_text) = body.split_once("=>").ok_or_else(|| syntax("missing `=>`"))?;
        let parse_side = |s: &str| -> Result<Ast, RuleError> {
            let mut p = Parser { src: s.as_bytes(), pos: 0, line: line_no };
            let ast = p.expr()?;
            p.skip_ws();
            if p.pos != p.src.len() {
                return Err(p.err("trailing characters"));
            }
            Ok(ast)
        };
        let lhs_ast = parse_side(lhs_text)?;
        let rhs_ast = parse_side(rhs_text)?;
        let mut vars = Vec::new();
        let lhs = lower(&lhs_ast, name, lib, &mut vars, true)?;
        if matches!(lhs, Pattern::Var(_)) {
            return Err(RuleError::BareLhs(name.to_string()));
        }
        let rhs = lower(&rhs_ast, name, lib, &mut vars, false)?;
        if rules.iter().any(|r| r.name == name) {
            return Err(RuleError::Duplicate(name.to_string()));
        }
        rules.push(RewriteRule { name: name.to_string(), vars, lhs, rhs });
    }
    Ok(rules)
}

pub fn default_rules(lib: &CellLibrary) -> Result<Vec<RewriteRule>, RuleError> {
    parse_rules(DEFAULT_RULES, lib)
}
