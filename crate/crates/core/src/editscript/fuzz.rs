//! Grammar fuzzer for small Python statement pairs.
//!
//! Statements are drawn from a small expression grammar:
//!
//! ```text
//! stmt  := expr | target = expr | name op= expr | return [expr] | assert expr
//!        | raise call | del target | if expr: pass | while expr: pass
//!        | for name in expr: pass | import name | pass
//! expr  := name | int | float | string | True | False | None
//!        | expr.name | expr(args) | expr[expr] | expr binop expr
//!        | expr cmpop expr | expr and/or expr | not expr | -expr
//!        | [exprs] | (exprs,) | {exprs} | {k: v} | expr if expr else expr
//! ```
//!
//! A pair is either a mutation of one statement (a local edit at a random
//! position: rename, literal change, operator change, argument add/remove/
//! swap, wrapping in a call or attribute, subtree replacement) or, one time in
//! five, two independent statements. Pairs whose parse trees exceed the node
//! budget are redrawn. Generation is seeded, so a seed fixes the corpus.

use crate::astcore::parse_fragment;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: &[&str] = &["a", "b", "x", "y", "self", "foo", "bar", "data", "value", "obj"];
const ATTRS: &[&str] = &["name", "items", "get", "append", "size", "_x", "value"];
const FUNCS: &[&str] = &["f", "g", "len", "str", "int", "compute", "print"];
const KWARGS: &[&str] = &["key", "default", "timeout", "end"];
const BINOPS: &[&str] = &["+", "-", "*", "/", "%", "//", "**", "|", "&"];
const CMPOPS: &[&str] = &["==", "!=", "<", "<=", ">", ">=", "is", "is not", "in", "not in"];
const AUGOPS: &[&str] = &["+=", "-=", "*=", "|="];

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    NoneLit,
    Attr(Box<Expr>, String),
    Call(Box<Expr>, Vec<Expr>, Vec<(String, Expr)>),
    Sub(Box<Expr>, Box<Expr>),
    Bin(Box<Expr>, &'static str, Box<Expr>),
    Cmp(Box<Expr>, &'static str, Box<Expr>),
    BoolOp(Box<Expr>, &'static str, Box<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Set(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    IfExp(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Stmt {
    Expr(Expr),
    Assign(Expr, Expr),
    Aug(String, &'static str, Expr),
    Return(Option<Expr>),
    Assert(Expr),
    Raise(Expr),
    Del(Expr),
    If(Expr),
    While(Expr),
    For(String, Expr),
    Import(String),
    Pass,
}

fn atomic(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Name(_)
            | Expr::Int(_)
            | Expr::Float(_)
            | Expr::Str(_)
            | Expr::Bool(_)
            | Expr::NoneLit
            | Expr::Attr(..)
            | Expr::Call(..)
            | Expr::Sub(..)
            | Expr::List(_)
            | Expr::Tuple(_)
            | Expr::Set(_)
            | Expr::Dict(_)
    )
}

fn render(e: &Expr) -> String {
    let p = |e: &Expr| {
        if atomic(e) {
            render(e)
        } else {
            format!("({})", render(e))
        }
    };
    let join = |xs: &[Expr]| xs.iter().map(render).collect::<Vec<_>>().join(", ");
    match e {
        Expr::Name(n) => n.clone(),
        Expr::Int(i) => i.to_string(),
        Expr::Float(f) => format!("{f:?}"),
        Expr::Str(s) => format!("'{s}'"),
        Expr::Bool(b) => if *b { "True" } else { "False" }.into(),
        Expr::NoneLit => "None".into(),
        Expr::Attr(o, a) => format!("{}.{a}", p(o)),
        Expr::Call(f, args, kw) => {
            let mut parts: Vec<String> = args.iter().map(render).collect();
            parts.extend(kw.iter().map(|(k, v)| format!("{k}={}", render(v))));
            format!("{}({})", p(f), parts.join(", "))
        }
        Expr::Sub(o, i) => format!("{}[{}]", p(o), render(i)),
        Expr::Bin(l, op, r) | Expr::Cmp(l, op, r) | Expr::BoolOp(l, op, r) => {
            format!("{} {op} {}", p(l), p(r))
        }
        Expr::Not(x) => format!("not {}", p(x)),
        Expr::Neg(x) => format!("-{}", p(x)),
        Expr::List(xs) => format!("[{}]", join(xs)),
        Expr::Tuple(xs) if xs.len() == 1 => format!("({},)", render(&xs[0])),
        Expr::Tuple(xs) => format!("({})", join(xs)),
        Expr::Set(xs) if xs.is_empty() => "set()".into(),
        Expr::Set(xs) => format!("{{{}}}", join(xs)),
        Expr::Dict(kv) => {
            let parts: Vec<String> = kv
                .iter()
                .map(|(k, v)| format!("{}: {}", render(k), render(v)))
                .collect();
            format!("{{{}}}", parts.join(", "))
        }
        Expr::IfExp(a, c, b) => format!("{} if {} else {}", p(a), p(c), p(b)),
    }
}

fn render_stmt(s: &Stmt) -> String {
    match s {
        Stmt::Expr(e) => render(e),
        Stmt::Assign(t, e) => format!("{} = {}", render(t), render(e)),
        Stmt::Aug(n, op, e) => format!("{n} {op} {}", render(e)),
        Stmt::Return(None) => "return".into(),
        Stmt::Return(Some(e)) => format!("return {}", render(e)),
        Stmt::Assert(e) => format!("assert {}", render(e)),
        Stmt::Raise(e) => format!("raise {}", render(e)),
        Stmt::Del(e) => format!("del {}", render(e)),
        Stmt::If(e) => format!("if {}:\n    pass", render(e)),
        Stmt::While(e) => format!("while {}:\n    pass", render(e)),
        Stmt::For(n, e) => format!("for {n} in {}:\n    pass", render(e)),
        Stmt::Import(n) => format!("import {n}"),
        Stmt::Pass => "pass".into(),
    }
}

pub struct StatementFuzzer {
    rng: ChaCha8Rng,
    max_nodes: usize,
}

impl StatementFuzzer {
    pub fn new(seed: u64) -> Self {
        StatementFuzzer {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_nodes: 25,
        }
    }

    pub fn with_max_nodes(mut self, n: usize) -> Self {
        self.max_nodes = n;
        self
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        *xs.choose(&mut self.rng).unwrap()
    }

    fn name(&mut self) -> String {
        self.pick(NAMES).to_string()
    }

    fn literal(&mut self) -> Expr {
        match self.rng.gen_range(0..6) {
            0 | 1 => Expr::Int(self.rng.gen_range(0..100)),
            2 => Expr::Float(self.rng.gen_range(0..40) as f64 / 4.0),
            3 => Expr::Str(self.pick(&["", "a", "key", "utf-8", "%s"]).to_string()),
            4 => Expr::Bool(self.rng.gen()),
            _ => Expr::NoneLit,
        }
    }

    fn leaf(&mut self) -> Expr {
        if self.rng.gen_bool(0.6) {
            Expr::Name(self.name())
        } else {
            self.literal()
        }
    }

    fn exprs(&mut self, depth: u32, max: usize) -> Vec<Expr> {
        let n = self.rng.gen_range(0..=max);
        (0..n).map(|_| self.expr(depth)).collect()
    }

    fn call(&mut self, depth: u32) -> Expr {
        let f = if self.rng.gen_bool(0.5) {
            Expr::Name(self.pick(FUNCS).to_string())
        } else {
            Expr::Attr(Box::new(Expr::Name(self.name())), self.pick(ATTRS).to_string())
        };
        let args = self.exprs(depth, 2);
        let kw = if self.rng.gen_bool(0.2) {
            vec![(self.pick(KWARGS).to_string(), self.expr(depth))]
        } else {
            Vec::new()
        };
        Expr::Call(Box::new(f), args, kw)
    }

    fn expr(&mut self, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.leaf();
        }
        let d = depth - 1;
        let b = |e: Expr| Box::new(e);
        match self.rng.gen_range(0..14) {
            0 => Expr::Attr(b(self.expr(d)), self.pick(ATTRS).to_string()),
            1 | 2 => self.call(d),
            3 => Expr::Sub(b(self.expr(d)), b(self.expr(d))),
            4 => Expr::Bin(b(self.expr(d)), self.pick(BINOPS), b(self.expr(d))),
            5 => Expr::Cmp(b(self.expr(d)), self.pick(CMPOPS), b(self.expr(d))),
            6 => Expr::BoolOp(b(self.expr(d)), self.pick(&["and", "or"]), b(self.expr(d))),
            7 => Expr::Not(b(self.expr(d))),
            8 => Expr::Neg(b(self.expr(d))),
            9 => Expr::List(self.exprs(d, 3)),
            10 => Expr::Tuple({
                let mut xs = self.exprs(d, 3);
                if xs.is_empty() {
                    xs.push(self.leaf());
                }
                xs
            }),
            11 => Expr::Set(self.exprs(d, 2)),
            12 => {
                let n = self.rng.gen_range(0..=2);
                Expr::Dict((0..n).map(|_| (self.literal(), self.expr(d))).collect())
            }
            _ => Expr::IfExp(b(self.expr(d)), b(self.expr(d)), b(self.expr(d))),
        }
    }

    fn target(&mut self) -> Expr {
        match self.rng.gen_range(0..3) {
            0 => Expr::Attr(Box::new(Expr::Name(self.name())), self.pick(ATTRS).to_string()),
            1 => Expr::Sub(Box::new(Expr::Name(self.name())), Box::new(self.leaf())),
            _ => Expr::Name(self.name()),
        }
    }

    fn stmt(&mut self) -> Stmt {
        let depth = 3;
        match self.rng.gen_range(0..12) {
            0 | 1 => Stmt::Expr(self.call(depth - 1)),
            2 | 3 => Stmt::Assign(self.target(), self.expr(depth)),
            4 => Stmt::Aug(self.name(), self.pick(AUGOPS), self.expr(depth)),
            5 => Stmt::Return(self.rng.gen_bool(0.9).then(|| self.expr(depth))),
            6 => Stmt::Assert(self.expr(depth)),
            7 => Stmt::Raise(self.call(1)),
            8 => Stmt::Del(self.target()),
            9 => Stmt::If(self.expr(depth)),
            10 => match self.rng.gen_range(0..4) {
                0 => Stmt::While(self.expr(depth)),
                1 => Stmt::Import(self.name()),
                2 => Stmt::Pass,
                _ => Stmt::For(self.name(), self.expr(2)),
            },
            _ => Stmt::Assign(Expr::Name(self.name()), self.call(depth - 1)),
        }
    }

    /// A local edit at the current node.
    fn edit_here(&mut self, e: &Expr) -> Expr {
        let b = |e: Expr| Box::new(e);
        let roll = self.rng.gen_range(0..10);
        match (e, roll) {
            (Expr::Name(_), 0..=5) => Expr::Name(self.name()),
            (Expr::Int(i), 0..=5) => Expr::Int(i + self.rng.gen_range(1..5)),
            (Expr::Bool(v), 0..=5) => Expr::Bool(!v),
            (Expr::Str(_), 0..=3) => Expr::Str("b".into()),
            (Expr::Attr(o, _), 0..=3) => Expr::Attr(o.clone(), self.pick(ATTRS).to_string()),
            (Expr::Call(f, args, kw), 0..=5) => {
                let (mut args, mut kw) = (args.clone(), kw.clone());
                match self.rng.gen_range(0..5) {
                    0 => args.push(self.leaf()),
                    1 if !args.is_empty() => {
                        let i = self.rng.gen_range(0..args.len());
                        args.remove(i);
                    }
                    2 if args.len() >= 2 => args.swap(0, 1),
                    3 if !kw.is_empty() => kw[0].0 = self.pick(KWARGS).to_string(),
                    3 => kw.push((self.pick(KWARGS).to_string(), self.leaf())),
                    _ => {
                        return Expr::Call(b(Expr::Name(self.pick(FUNCS).to_string())), args, kw)
                    }
                }
                Expr::Call(f.clone(), args, kw)
            }
            (Expr::Bin(l, _, r), 0..=4) => Expr::Bin(l.clone(), self.pick(BINOPS), r.clone()),
            (Expr::Cmp(l, _, r), 0..=4) => Expr::Cmp(l.clone(), self.pick(CMPOPS), r.clone()),
            (Expr::BoolOp(l, op, r), 0..=2) => {
                Expr::BoolOp(l.clone(), if *op == "and" { "or" } else { "and" }, r.clone())
            }
            (Expr::BoolOp(l, _, _), 3..=4) => (**l).clone(),
            (Expr::Not(x), 0..=3) => (**x).clone(),
            (Expr::List(xs), 0..=4) => {
                let mut xs = xs.clone();
                xs.push(self.leaf());
                Expr::List(xs)
            }
            (_, 6) => Expr::Call(b(Expr::Name(self.pick(FUNCS).to_string())), vec![e.clone()], vec![]),
            (_, 7) => Expr::Attr(b(e.clone()), self.pick(ATTRS).to_string()),
            (_, 8) => Expr::BoolOp(b(e.clone()), "and", b(self.leaf())),
            (_, 9) => Expr::Not(b(e.clone())),
            _ => self.expr(2),
        }
    }

    /// Applies one edit at a random position below `e`.
    fn mutate(&mut self, e: &Expr) -> Expr {
        let kids: Vec<&Expr> = match e {
            Expr::Attr(o, _) => vec![o],
            Expr::Call(f, args, kw) => std::iter::once(&**f)
                .chain(args.iter())
                .chain(kw.iter().map(|(_, v)| v))
                .collect(),
            Expr::Sub(a, b)
            | Expr::Bin(a, _, b)
            | Expr::Cmp(a, _, b)
            | Expr::BoolOp(a, _, b) => vec![a, b],
            Expr::Not(x) | Expr::Neg(x) => vec![x],
            Expr::List(xs) | Expr::Tuple(xs) | Expr::Set(xs) => xs.iter().collect(),
            Expr::Dict(kv) => kv.iter().map(|(_, v)| v).collect(),
            Expr::IfExp(a, c, b) => vec![a, c, b],
            _ => vec![],
        };
        if kids.is_empty() || self.rng.gen_bool(0.4) {
            return self.edit_here(e);
        }
        let i = self.rng.gen_range(0..kids.len());
        let new_kid = self.mutate(kids[i]);
        replace_child(e, i, new_kid)
    }

    fn mutate_stmt(&mut self, s: &Stmt) -> Stmt {
        match s {
            Stmt::Expr(e) => Stmt::Expr(self.mutate(e)),
            Stmt::Assign(t, e) if self.rng.gen_bool(0.25) => Stmt::Assign(self.mutate(t), e.clone()),
            Stmt::Assign(t, e) => Stmt::Assign(t.clone(), self.mutate(e)),
            Stmt::Aug(n, _, e) if self.rng.gen_bool(0.3) => Stmt::Aug(n.clone(), self.pick(AUGOPS), e.clone()),
            Stmt::Aug(n, op, e) => Stmt::Aug(n.clone(), op, self.mutate(e)),
            Stmt::Return(Some(e)) => Stmt::Return(Some(self.mutate(e))),
            Stmt::Return(None) => Stmt::Return(Some(self.leaf())),
            Stmt::Assert(e) => Stmt::Assert(self.mutate(e)),
            Stmt::Raise(e) => Stmt::Raise(self.mutate(e)),
            Stmt::Del(e) => Stmt::Del(self.mutate(e)),
            Stmt::If(e) => Stmt::If(self.mutate(e)),
            Stmt::While(e) => Stmt::While(self.mutate(e)),
            Stmt::For(n, e) => Stmt::For(n.clone(), self.mutate(e)),
            Stmt::Import(_) => Stmt::Import(self.name()),
            Stmt::Pass => self.stmt(),
        }
    }

    /// Random statement source within the node budget.
    pub fn statement(&mut self) -> String {
        loop {
            let s = render_stmt(&self.stmt());
            if parse_fragment(&s).len() <= self.max_nodes {
                return s;
            }
        }
    }

    /// A (before, after) pair of statement sources, both within the node
    /// budget and both free of parse errors.
    pub fn pair(&mut self) -> (String, String) {
        loop {
            let s = self.stmt();
            let t = if self.rng.gen_bool(0.2) {
                self.stmt()
            } else {
                self.mutate_stmt(&s)
            };
            let (a, b) = (render_stmt(&s), render_stmt(&t));
            let ok = |src: &str| {
                let tree = parse_fragment(src);
                tree.len() <= self.max_nodes && !tree.contains_label(tree.root(), "ERROR")
            };
            if ok(&a) && ok(&b) {
                return (a, b);
            }
        }
    }
}

fn replace_child(e: &Expr, i: usize, new: Expr) -> Expr {
    let mut e = e.clone();
    let slot: &mut Expr = match &mut e {
        Expr::Attr(o, _) => o,
        Expr::Call(f, args, kw) => {
            if i == 0 {
                f
            } else if i - 1 < args.len() {
                &mut args[i - 1]
            } else {
                &mut kw[i - 1 - args.len()].1
            }
        }
        Expr::Sub(a, b) | Expr::Bin(a, _, b) | Expr::Cmp(a, _, b) | Expr::BoolOp(a, _, b) => {
            if i == 0 {
                a
            } else {
                b
            }
        }
        Expr::Not(x) | Expr::Neg(x) => x,
        Expr::List(xs) | Expr::Tuple(xs) | Expr::Set(xs) => &mut xs[i],
        Expr::Dict(kv) => &mut kv[i].1,
        Expr::IfExp(a, c, b) => match i {
            0 => a,
            1 => c,
            _ => b,
        },
        _ => unreachable!("leaves have no children"),
    };
    *slot = new;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_bounded() {
        let mut f1 = StatementFuzzer::new(7);
        let mut f2 = StatementFuzzer::new(7);
        for _ in 0..200 {
            let p = f1.pair();
            assert_eq!(p, f2.pair());
            assert!(parse_fragment(&p.0).len() <= 25);
            assert!(parse_fragment(&p.1).len() <= 25);
        }
    }

    #[test]
    fn mostly_distinct_pairs() {
        let mut f = StatementFuzzer::new(1);
        let changed = (0..200).filter(|_| {
            let (a, b) = f.pair();
            a != b
        });
        assert!(changed.count() > 150);
    }
}
