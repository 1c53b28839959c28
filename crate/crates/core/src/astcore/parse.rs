//! Error-tolerant parsing of Python fragments into [`SyntaxTree`]s.
//!
//! Node labels are the tree-sitter-python production names with a few
//! normalizations:
//! - comments and line continuations are dropped;
//! - anonymous operator tokens of operator expressions become `operator`
//!   leaves carrying the token text, other anonymous tokens are dropped;
//! - string literals without interpolation collapse into one `string` leaf
//!   whose value is the full literal text (prefix and quotes included);
//! - syntax errors and missing tokens become `ERROR` nodes;
//! - empty `argument_list` and `parameters` nodes are elided, so `f()` is a
//!   call with a single child.

use super::tree::{NodeId, Span, SyntaxNode, SyntaxTree};
use std::cell::RefCell;
use std::sync::Arc;
use tree_sitter::{Node, Parser};

pub const ERROR_LABEL: &str = "ERROR";
pub const OPERATOR_LABEL: &str = "operator";

const OPERATOR_PARENTS: &[&str] = &[
    "binary_operator",
    "comparison_operator",
    "boolean_operator",
    "unary_operator",
    "augmented_assignment",
];

const SKIPPED: &[&str] = &["comment", "line_continuation"];
const ELIDED_WHEN_EMPTY: &[&str] = &["argument_list", "parameters"];

thread_local! {
    static PARSER: RefCell<Parser> = RefCell::new({
        let mut p = Parser::new();
        p.set_language(&tree_sitter_python::LANGUAGE.into())
            .expect("tree-sitter-python grammar is ABI compatible");
        p
    });
}

struct Pending {
    label: String,
    value: Option<String>,
    span: Span,
    bytes: (usize, usize),
    children: Vec<Pending>,
}

fn span_of(n: &Node) -> Span {
    let (s, e) = (n.start_position(), n.end_position());
    Span {
        start_line: s.row + 1,
        start_col: s.column,
        end_line: e.row + 1,
        end_col: e.column,
    }
}

fn leaf(label: &str, value: Option<String>, n: &Node) -> Pending {
    Pending {
        label: label.to_string(),
        value,
        span: span_of(n),
        bytes: (n.start_byte(), n.end_byte()),
        children: Vec::new(),
    }
}

fn has_interpolation(n: &Node) -> bool {
    let mut c = n.walk();
    let found = n.children(&mut c).any(|ch| ch.kind() == "interpolation");
    found
}

fn non_empty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

fn convert(n: Node, src: &str, is_root: bool) -> Option<Pending> {
    let text = &src[n.byte_range()];
    if n.is_missing() {
        return Some(leaf(ERROR_LABEL, None, &n));
    }
    let kind = n.kind();
    if SKIPPED.contains(&kind) {
        return None;
    }
    if (kind == "string" && !has_interpolation(&n)) || kind == "string_content" {
        return Some(leaf(kind, Some(text.to_string()), &n));
    }
    let label = if n.is_error() { ERROR_LABEL } else { kind };
    let operator_parent = OPERATOR_PARENTS.contains(&kind);

    let mut children = Vec::new();
    let mut cursor = n.walk();
    for c in n.children(&mut cursor) {
        if c.is_missing() {
            children.push(leaf(ERROR_LABEL, None, &c));
        } else if c.is_named() {
            if let Some(p) = convert(c, src, false) {
                children.push(p);
            }
        } else if operator_parent {
            children.push(leaf(OPERATOR_LABEL, Some(src[c.byte_range()].to_string()), &c));
        } else if c.is_error() {
            children.push(leaf(ERROR_LABEL, non_empty(&src[c.byte_range()]), &c));
        }
    }

    if children.is_empty() && !is_root && ELIDED_WHEN_EMPTY.contains(&label) {
        return None;
    }
    let value = if !children.is_empty() {
        None
    } else if n.child_count() == 0 || label == ERROR_LABEL {
        non_empty(text)
    } else {
        None
    };
    Some(Pending {
        label: label.to_string(),
        value,
        span: span_of(&n),
        bytes: (n.start_byte(), n.end_byte()),
        children,
    })
}

fn flatten(p: Pending, parent: Option<NodeId>, out: &mut Vec<SyntaxNode>) -> NodeId {
    let id = out.len();
    out.push(SyntaxNode {
        label: p.label,
        value: p.value,
        children: Vec::new(),
        parent,
        span: p.span,
        bytes: p.bytes,
    });
    for c in p.children {
        let cid = flatten(c, Some(id), out);
        out[id].children.push(cid);
    }
    id
}

/// Parse a code fragment. Never fails: unparsable regions appear as `ERROR`
/// nodes. The root is always a `module` node.
pub fn parse_fragment(code: &str) -> SyntaxTree {
    let ts_tree = PARSER.with(|p| p.borrow_mut().parse(code, None));
    let mut nodes = Vec::new();
    let root = ts_tree
        .as_ref()
        .and_then(|t| convert(t.root_node(), code, true));
    match root {
        Some(mut p) => {
            // the grammar reports a top-level error as an ERROR root
            if p.label != "module" {
                let bytes = (0, code.len());
                let span = p.span;
                p = Pending {
                    label: "module".into(),
                    value: None,
                    span,
                    bytes,
                    children: vec![p],
                };
            }
            flatten(p, None, &mut nodes);
        }
        None => {
            nodes.push(SyntaxNode {
                label: "module".into(),
                value: None,
                children: Vec::new(),
                parent: None,
                span: Span::default(),
                bytes: (0, code.len()),
            });
        }
    }
    SyntaxTree::from_parts(nodes, Arc::from(code))
}

/// Frozen label vocabulary shipped with the tool.
pub const LABELS_FILE: &str = include_str!("../../labels.txt");

/// Version line of [`LABELS_FILE`].
pub fn label_vocabulary_version() -> &'static str {
    LABELS_FILE
        .lines()
        .find_map(|l| l.strip_prefix("# version:"))
        .map(str::trim)
        .unwrap_or("unknown")
}

pub fn label_vocabulary() -> Vec<&'static str> {
    LABELS_FILE
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Named node kinds the grammar can produce, after the normalizations above.
pub fn grammar_labels() -> Vec<String> {
    let lang: tree_sitter::Language = tree_sitter_python::LANGUAGE.into();
    let mut labels: Vec<String> = (0..lang.node_kind_count() as u16)
        .filter(|&id| lang.node_kind_is_named(id) && lang.node_kind_is_visible(id))
        .filter_map(|id| lang.node_kind_for_id(id))
        .filter(|k| !SKIPPED.contains(k))
        .map(str::to_string)
        .chain([ERROR_LABEL.to_string(), OPERATOR_LABEL.to_string()])
        .collect();
    labels.sort();
    labels.dedup();
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sexp(code: &str) -> String {
        parse_fragment(code).to_sexp()
    }

    #[test]
    fn simple_assignment() {
        // same shape as tree-sitter-python's own output for `x = 1`
        assert_eq!(
            sexp("x = 1"),
            r#"(module (expression_statement (assignment (identifier "x") (integer "1"))))"#
        );
    }

    #[test]
    fn empty_is_empty_module() {
        let t = parse_fragment("");
        assert_eq!(t.to_sexp(), "(module)");
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn malformed_has_error() {
        let t = parse_fragment("def f(:");
        assert!(t.contains_label(t.root(), ERROR_LABEL), "{}", t.to_sexp());
        let t = parse_fragment("print(x))");
        assert!(t.contains_label(t.root(), ERROR_LABEL));
    }

    #[test]
    fn operators_and_literals() {
        assert_eq!(
            sexp("a not in b and not c"),
            r#"(module (expression_statement (boolean_operator (comparison_operator (identifier "a") (operator "not in") (identifier "b")) (operator "and") (not_operator (identifier "c")))))"#
        );
        assert_eq!(
            sexp("x += -1"),
            r#"(module (expression_statement (augmented_assignment (identifier "x") (operator "+=") (unary_operator (operator "-") (integer "1")))))"#
        );
        assert_eq!(
            sexp("y = True or None"),
            r#"(module (expression_statement (assignment (identifier "y") (boolean_operator (true "True") (operator "or") (none "None")))))"#
        );
    }

    #[test]
    fn strings_collapse_unless_interpolated() {
        assert_eq!(
            sexp(r"s = u'a\n'"),
            r#"(module (expression_statement (assignment (identifier "s") (string "u'a\\n'"))))"#
        );
        let t = parse_fragment("s = f'a{b}c'");
        let s = t.preorder().find(|&i| t.label(i) == "string").unwrap();
        assert!(!t.node(s).is_leaf());
        assert!(t.to_sexp().contains(r#"(interpolation (identifier "b"))"#));
    }

    #[test]
    fn empty_argument_list_elided() {
        assert_eq!(
            sexp("f()"),
            r#"(module (expression_statement (call (identifier "f"))))"#
        );
        assert_eq!(
            sexp("f(x)"),
            r#"(module (expression_statement (call (identifier "f") (argument_list (identifier "x")))))"#
        );
    }

    #[test]
    fn comments_dropped() {
        assert_eq!(sexp("a=1; b=2 # c"), sexp("a=1; b=2"));
    }

    #[test]
    fn interior_nodes_carry_no_value() {
        let t = parse_fragment("if a.b(c, d=[1, 'x']):\n    pass\n");
        for n in t.nodes() {
            if !n.is_leaf() {
                assert!(n.value.is_none(), "{}", n.label);
            }
            for &c in &n.children {
                let cs = t.node(c).bytes;
                assert!(cs.0 >= n.bytes.0 && cs.1 <= n.bytes.1);
            }
            for w in n.children.windows(2) {
                assert!(t.node(w[0]).bytes.1 <= t.node(w[1]).bytes.0);
            }
        }
    }

    #[test]
    fn vocabulary_file_matches_grammar() {
        let frozen: Vec<String> = label_vocabulary().into_iter().map(String::from).collect();
        assert_eq!(frozen, grammar_labels());
        assert_eq!(label_vocabulary_version(), "1");
    }

    #[test]
    fn emitted_labels_are_in_vocabulary() {
        let vocab = label_vocabulary();
        let code = "import os\nfrom . import x as y\n@dec\nclass A(B):\n    def f(self, a=1, *b, **c) -> int:\n        return [i async for i in a if i] or {k: v for k, v in c.items()}\n    x = lambda: (yield)\nwhile not done: del a[1:2]\nprint >>f, 'x'\n";
        let t = parse_fragment(code);
        for n in t.nodes() {
            assert!(vocab.contains(&n.label.as_str()), "{}", n.label);
        }
    }
}
