//! Fragment parsing, divergence location and single-statement selection.

mod parse;
pub mod tree;

pub use parse::{
    grammar_labels, label_vocabulary, label_vocabulary_version, parse_fragment, ERROR_LABEL,
    LABELS_FILE, OPERATOR_LABEL,
};
pub use tree::{
    from_sexp, isomorphic, trees_isomorphic, NodeId, ShapeInterner, Span, SyntaxNode, SyntaxTree,
    TreeBuilder,
};

use serde::Serialize;

/// Productions counted as statements. Compound statements count through
/// their header only.
pub const STATEMENT_LABELS: &[&str] = &[
    "expression_statement",
    "return_statement",
    "raise_statement",
    "assert_statement",
    "import_statement",
    "import_from_statement",
    "future_import_statement",
    "print_statement",
    "exec_statement",
    "delete_statement",
    "global_statement",
    "nonlocal_statement",
    "pass_statement",
    "break_statement",
    "continue_statement",
    "type_alias_statement",
    "if_statement",
    "elif_clause",
    "for_statement",
    "while_statement",
    "try_statement",
    "except_clause",
    "with_statement",
    "function_definition",
    "class_definition",
];

/// Children that belong to a compound statement's body rather than its
/// header.
pub const BODY_LABELS: &[&str] = &[
    "block",
    "else_clause",
    "elif_clause",
    "except_clause",
    "except_group_clause",
    "finally_clause",
    "case_clause",
];

pub fn is_statement_label(label: &str) -> bool {
    STATEMENT_LABELS.contains(&label)
}

/// First point where two trees disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DivergencePoint {
    pub path_before: Vec<usize>,
    pub path_after: Vec<usize>,
    pub node_before: NodeId,
    pub node_after: NodeId,
}

/// Lockstep descent. Stops at a node pair whose label, value or child count
/// differ, or whose children disagree at two or more positions (the node
/// then roots every difference). With exactly one disagreeing child pair the
/// descent continues into it.
pub fn locate_divergence(before: &SyntaxTree, after: &SyntaxTree) -> Option<DivergencePoint> {
    if before.is_empty() || after.is_empty() {
        return None;
    }
    let mut interner = ShapeInterner::new();
    let cb = interner.classify(before);
    let ca = interner.classify(after);
    let (mut b, mut a) = (before.root(), after.root());
    if cb[b] == ca[a] {
        return None;
    }
    let mut path = Vec::new();
    loop {
        let (nb, na) = (before.node(b), after.node(a));
        if nb.label != na.label || nb.value != na.value || nb.children.len() != na.children.len() {
            break;
        }
        let mut differing = nb
            .children
            .iter()
            .zip(&na.children)
            .enumerate()
            .filter(|(_, (&x, &y))| cb[x] != ca[y]);
        let first = differing.next();
        match (first, differing.next()) {
            (Some((i, (&x, &y))), None) => {
                path.push(i);
                b = x;
                a = y;
            }
            _ => break,
        }
    }
    Some(DivergencePoint {
        path_before: path.clone(),
        path_after: path,
        node_before: b,
        node_after: a,
    })
}

/// The nearest statement-labeled node at or above `id`.
pub fn enclosing_statement(tree: &SyntaxTree, id: NodeId) -> Option<NodeId> {
    std::iter::once(id)
        .chain(tree.ancestors(id))
        .find(|&n| is_statement_label(tree.label(n)))
}

fn statement_descendants(tree: &SyntaxTree, id: NodeId) -> usize {
    tree.descendants(id)
        .skip(1)
        .filter(|&d| is_statement_label(tree.label(d)))
        .count()
}

/// Enclosing statement pair of a divergence, or `None` when the divergence
/// lies outside any statement, the statements do not correspond by position,
/// or a divergence node roots two or more statements.
pub fn statement_scope(
    d: &DivergencePoint,
    before: &SyntaxTree,
    after: &SyntaxTree,
) -> Option<(NodeId, NodeId)> {
    if statement_descendants(before, d.node_before) >= 2
        || statement_descendants(after, d.node_after) >= 2
    {
        return None;
    }
    let sb = enclosing_statement(before, d.node_before)?;
    let sa = enclosing_statement(after, d.node_after)?;
    (before.path(sb) == after.path(sa)).then_some((sb, sa))
}

/// The statement as a standalone tree. Compound statements keep only their
/// header (body blocks and clauses are dropped).
pub fn statement_view(tree: &SyntaxTree, stmt: NodeId) -> SyntaxTree {
    tree.subtree_filtered(stmt, |t, c| !BODY_LABELS.contains(&t.label(c)))
}

/// Why a fragment pair was not accepted as a single-statement change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    NoDivergence,
    OutsideStatement,
    MultipleStatements,
    ParseError,
    HeaderUnchanged,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::NoDivergence => "no_divergence",
            Rejection::OutsideStatement => "outside_statement",
            Rejection::MultipleStatements => "multiple_statements",
            Rejection::ParseError => "parse_error",
            Rejection::HeaderUnchanged => "header_unchanged",
        }
    }
}

/// The changed statement, before and after, as standalone trees.
#[derive(Debug, Clone)]
pub struct StatementPair {
    pub before: SyntaxTree,
    pub after: SyntaxTree,
}

fn has_error(tree: &SyntaxTree, stmt: NodeId, view: &SyntaxTree) -> bool {
    view.contains_label(view.root(), ERROR_LABEL)
        || tree.ancestors(stmt).any(|a| tree.label(a) == ERROR_LABEL)
}

/// Run the divergence and statement gates over two parsed fragments.
pub fn select_statement(before: &SyntaxTree, after: &SyntaxTree) -> Result<StatementPair, Rejection> {
    let d = locate_divergence(before, after).ok_or(Rejection::NoDivergence)?;
    if statement_descendants(before, d.node_before) >= 2
        || statement_descendants(after, d.node_after) >= 2
    {
        return Err(Rejection::MultipleStatements);
    }
    let (sb, sa) = statement_scope(&d, before, after).ok_or(Rejection::OutsideStatement)?;
    let vb = statement_view(before, sb);
    let va = statement_view(after, sa);
    if has_error(before, sb, &vb) || has_error(after, sa, &va) {
        return Err(Rejection::ParseError);
    }
    if trees_isomorphic(&vb, &va) {
        return Err(Rejection::HeaderUnchanged);
    }
    Ok(StatementPair { before: vb, after: va })
}

/// Lines `idx - context ..= idx + context`, dedented as a unit by their
/// smallest indentation. Returns the fragment text.
pub fn fragment_window(lines: &[&str], idx: usize, context: usize) -> String {
    let lo = idx.saturating_sub(context);
    let hi = (idx + context + 1).min(lines.len());
    let window: Vec<&str> = lines[lo..hi]
        .iter()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let indent_of = |l: &str| l.chars().take_while(|c| *c == ' ' || *c == '\t').count();
    let dedent = window
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| indent_of(l))
        .min()
        .unwrap_or(0);
    let mut out = String::new();
    for l in window {
        let strip = indent_of(l).min(dedent);
        let byte = l.char_indices().nth(strip).map(|(b, _)| b).unwrap_or(l.len());
        out.push_str(&l[byte..]);
        out.push('\n');
    }
    out
}

/// Parse the fragments around a changed line pair and select the changed
/// statement. The full context window is tried first; when that only fails
/// on a parse error, the changed lines alone are retried.
pub fn select_from_lines(
    before_lines: &[&str],
    before_idx: usize,
    after_lines: &[&str],
    after_idx: usize,
    context: usize,
) -> Result<StatementPair, Rejection> {
    let attempt = |ctx: usize| {
        let fb = parse_fragment(&fragment_window(before_lines, before_idx, ctx));
        let fa = parse_fragment(&fragment_window(after_lines, after_idx, ctx));
        select_statement(&fb, &fa)
    };
    match attempt(context) {
        Err(Rejection::ParseError) if context > 0 => attempt(0),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: every preorder pair at equal paths, first one where
    /// the subtrees differ locally.
    fn oracle_first_local_difference(b: &SyntaxTree, a: &SyntaxTree) -> Option<(Vec<usize>, Vec<usize>)> {
        for x in b.preorder() {
            let p = b.path(x);
            let Some(y) = a.node_at_path(&p) else { continue };
            let (nx, ny) = (b.node(x), a.node(y));
            if nx.label != ny.label || nx.value != ny.value || nx.children.len() != ny.children.len() {
                return Some((p.clone(), p));
            }
        }
        None
    }

    #[test]
    fn identical_trees_have_no_divergence() {
        let t = parse_fragment("x = f(a, b)\n");
        assert!(locate_divergence(&t, &t.clone()).is_none());
    }

    #[test]
    fn identifier_divergence() {
        let b = parse_fragment("f(a)");
        let a = parse_fragment("f(b)");
        let d = locate_divergence(&b, &a).unwrap();
        assert_eq!(b.label(d.node_before), "identifier");
        assert_eq!(b.value(d.node_before), Some("a"));
        assert_eq!(a.value(d.node_after), Some("b"));
        let (p, _) = oracle_first_local_difference(&b, &a).unwrap();
        assert_eq!(d.path_before, p);
    }

    #[test]
    fn child_count_divergence() {
        let b = parse_fragment("f(a)");
        let a = parse_fragment("f(a, b)");
        let d = locate_divergence(&b, &a).unwrap();
        assert_eq!(b.label(d.node_before), "argument_list");
        let (p, _) = oracle_first_local_difference(&b, &a).unwrap();
        assert_eq!(d.path_before, p);
    }

    #[test]
    fn two_differences_stop_at_common_parent() {
        let b = parse_fragment("a=1; b=2");
        let a = parse_fragment("a=2; b=3");
        let d = locate_divergence(&b, &a).unwrap();
        assert_eq!(d.node_before, b.root());
        assert!(statement_scope(&d, &b, &a).is_none());
        assert_eq!(select_statement(&b, &a).unwrap_err(), Rejection::MultipleStatements);
    }

    #[test]
    fn scope_expression_statement() {
        let b = parse_fragment("x = f(a)");
        let a = parse_fragment("x = f(b)");
        let d = locate_divergence(&b, &a).unwrap();
        let (sb, sa) = statement_scope(&d, &b, &a).unwrap();
        assert_eq!(b.label(sb), "expression_statement");
        assert_eq!(a.label(sa), "expression_statement");
    }

    #[test]
    fn scope_second_small_statement() {
        let b = parse_fragment("a=1; b=2");
        let a = parse_fragment("a=1; b=3");
        let d = locate_divergence(&b, &a).unwrap();
        let (sb, _) = statement_scope(&d, &b, &a).unwrap();
        assert_eq!(b.path(sb), vec![1]);
        assert_eq!(b.node_text(sb), "b=2");
    }

    #[test]
    fn class_header_is_a_statement() {
        let b = parse_fragment("class A:\n    pass\n");
        let a = parse_fragment("class B:\n    pass\n");
        let pair = select_statement(&b, &a).unwrap();
        assert_eq!(pair.before.label(0), "class_definition");
        assert_eq!(pair.before.text(), "class A:");
    }

    #[test]
    fn decorator_is_outside_statements() {
        let b = parse_fragment("@foo\ndef f():\n    pass\n");
        let a = parse_fragment("@bar\ndef f():\n    pass\n");
        let d = locate_divergence(&b, &a).unwrap();
        assert!(statement_scope(&d, &b, &a).is_none());
        assert_eq!(select_statement(&b, &a).unwrap_err(), Rejection::OutsideStatement);
    }

    #[test]
    fn header_view_drops_body() {
        let b = parse_fragment("if x > 1:\n    a = 1\n    b = 2\n");
        let a = parse_fragment("if x > 2:\n    a = 1\n    b = 2\n");
        let pair = select_statement(&b, &a).unwrap();
        assert_eq!(
            pair.before.to_sexp(),
            r#"(if_statement (comparison_operator (identifier "x") (operator ">") (integer "1")))"#
        );
        assert_eq!(pair.after.text(), "if x > 2:");
    }

    #[test]
    fn statement_inside_body() {
        let b = parse_fragment("def f():\n    return a\n");
        let a = parse_fragment("def f():\n    return b\n");
        let pair = select_statement(&b, &a).unwrap();
        assert_eq!(pair.before.label(0), "return_statement");
    }

    #[test]
    fn unparsable_statement_rejected() {
        let b = parse_fragment("print(x))\n");
        let a = parse_fragment("print(y))\n");
        assert_eq!(select_statement(&b, &a).unwrap_err(), Rejection::ParseError);
    }

    #[test]
    fn scoped_statements_have_statement_labels() {
        let cases = [
            ("x = 1", "x = 2"),
            ("import os", "import sys"),
            ("while a: pass", "while b: pass"),
            ("for i in a:\n    pass", "for i in b:\n    pass"),
            ("raise E(a)", "raise E(b)"),
        ];
        for (b, a) in cases {
            let pair = select_statement(&parse_fragment(b), &parse_fragment(a)).unwrap();
            assert!(is_statement_label(pair.before.label(0)));
            assert!(is_statement_label(pair.after.label(0)));
        }
    }

    #[test]
    fn fragment_dedent() {
        let lines = ["def f():", "    if a:", "        x = 1", "        y = 2", "    return x"];
        let frag = fragment_window(&lines, 2, 1);
        assert_eq!(frag, "if a:\n    x = 1\n    y = 2\n");
        assert_eq!(fragment_window(&lines, 0, 0), "def f():\n");
    }

    #[test]
    fn window_retry_without_context() {
        // preceding context starts in the middle of a call and breaks parsing
        let before = ["    b,", ")", "x = f(a)", "y = 2"];
        let after = ["    b,", ")", "x = f(c)", "y = 2"];
        let pair = select_from_lines(&before, 2, &after, 2, 3).unwrap();
        assert_eq!(pair.before.text(), "x = f(a)");
    }
}
