//! Tree differencing: GumTree node mappings and Chawathe edit scripts over
//! [`SyntaxTree`]s.

mod chawathe;
pub mod fuzz;
mod gumtree;

pub use chawathe::EditError;
pub use gumtree::{match_trees_with, GumTreeParams};

use crate::astcore::{NodeId, SyntaxTree};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Injective, label-preserving pairing of before-nodes with after-nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeMapping {
    pairs: Vec<(NodeId, NodeId)>,
}

impl NodeMapping {
    /// Builds a mapping; pairs are sorted by before-id.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> NodeMapping {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_unstable();
        NodeMapping { pairs }
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dst_of(&self, src: NodeId) -> Option<NodeId> {
        self.pairs
            .binary_search_by_key(&src, |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn src_of(&self, dst: NodeId) -> Option<NodeId> {
        self.pairs.iter().find(|p| p.1 == dst).map(|p| p.0)
    }

    /// Checks injectivity and label equality against the two trees.
    pub fn is_consistent(&self, before: &SyntaxTree, after: &SyntaxTree) -> bool {
        let mut seen_src = vec![false; before.len()];
        let mut seen_dst = vec![false; after.len()];
        self.pairs.iter().all(|&(a, b)| {
            a < before.len()
                && b < after.len()
                && !std::mem::replace(&mut seen_src[a], true)
                && !std::mem::replace(&mut seen_dst[b], true)
                && before.label(a) == after.label(b)
        })
    }
}

/// GumTree mapping with the default parameters.
pub fn match_trees(before: &SyntaxTree, after: &SyntaxTree) -> NodeMapping {
    match_trees_with(before, after, GumTreeParams::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OpKind {
    Insert,
    Move,
    Update,
    Delete,
}

impl OpKind {
    pub const ALL: [OpKind; 4] = [OpKind::Insert, OpKind::Move, OpKind::Update, OpKind::Delete];

    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Insert => "INSERT",
            OpKind::Move => "MOVE",
            OpKind::Update => "UPDATE",
            OpKind::Delete => "DELETE",
        }
    }

    fn title(self) -> &'static str {
        match self {
            OpKind::Insert => "Insert",
            OpKind::Move => "Move",
            OpKind::Update => "Update",
            OpKind::Delete => "Delete",
        }
    }
}

/// One edit operation. Serialized as `{"kind","node","parent","pos","value"}`.
///
/// `node_id`/`parent_id` address nodes of the working tree during replay:
/// before-nodes keep their ids, the virtual root above the before-tree has
/// id `before.len()`, and each INSERT allocates the next free id. They are
/// not part of the serialized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditOp {
    pub kind: OpKind,
    #[serde(rename = "node")]
    pub node_label: String,
    #[serde(rename = "parent")]
    pub parent_label: String,
    #[serde(rename = "pos")]
    pub position: usize,
    pub value: Option<String>,
    #[serde(skip)]
    pub node_id: NodeId,
    #[serde(skip)]
    pub parent_id: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("edit scripts always serialize")
    }
}

/// Chawathe script turning `before` into `after` under mapping `m`.
pub fn compute_edit_script(before: &SyntaxTree, after: &SyntaxTree, m: &NodeMapping) -> EditScript {
    chawathe::generate(before, after, m)
}

/// Convenience: match then generate.
pub fn diff_trees(before: &SyntaxTree, after: &SyntaxTree) -> EditScript {
    compute_edit_script(before, after, &match_trees(before, after))
}

/// Replays a script produced for `before`.
pub fn apply_script(before: &SyntaxTree, s: &EditScript) -> Result<SyntaxTree, EditError> {
    chawathe::apply(before, s)
}

/// An edit operation reduced to its kind and grammar labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractOpType {
    pub kind: OpKind,
    pub node_label: String,
    /// Empty for UPDATE and DELETE.
    pub parent_label: String,
}

impl AbstractOpType {
    pub fn of(op: &EditOp) -> AbstractOpType {
        let parent_label = match op.kind {
            OpKind::Insert | OpKind::Move => op.parent_label.clone(),
            OpKind::Update | OpKind::Delete => String::new(),
        };
        AbstractOpType {
            kind: op.kind,
            node_label: op.node_label.clone(),
            parent_label,
        }
    }
}

impl fmt::Display for AbstractOpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OpKind::Insert | OpKind::Move => {
                write!(f, "{}({}, {})", self.kind.title(), self.node_label, self.parent_label)
            }
            OpKind::Update | OpKind::Delete => write!(f, "{}({})", self.kind.title(), self.node_label),
        }
    }
}

impl FromStr for AbstractOpType {
    type Err = String;

    /// Parses `Kind(node[, parent])`, resolving label aliases.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| format!("bad op type: {s}"))?;
        let inner = s[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| format!("bad op type: {s}"))?;
        let kind = match &s[..open] {
            "Insert" => OpKind::Insert,
            "Move" => OpKind::Move,
            "Update" => OpKind::Update,
            "Delete" => OpKind::Delete,
            k => return Err(format!("unknown op kind: {k}")),
        };
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let (node, parent) = match (kind, parts.as_slice()) {
            (OpKind::Insert | OpKind::Move, [n, p]) => (*n, *p),
            (OpKind::Update | OpKind::Delete, [n]) => (*n, ""),
            _ => return Err(format!("wrong arity: {s}")),
        };
        Ok(AbstractOpType {
            kind,
            node_label: canonical_label(node).to_string(),
            parent_label: canonical_label(parent).to_string(),
        })
    }
}

/// Shorthand label spellings found in the literature mapped to the frozen
/// vocabulary.
pub const LABEL_ALIASES: &[(&str, &str)] = &[
    ("arg_list", "argument_list"),
    ("args", "argument_list"),
    ("assign", "assignment"),
    ("attr", "attribute"),
    ("aug_assign", "augmented_assignment"),
    ("bin_op", "binary_operator"),
    ("binary_op", "binary_operator"),
    ("bool_op", "boolean_operator"),
    ("boolean_op", "boolean_operator"),
    ("compare", "comparison_operator"),
    ("comparison", "comparison_operator"),
    ("dict", "dictionary"),
    ("expr_stmt", "expression_statement"),
    ("id", "identifier"),
    ("if", "if_statement"),
    ("int", "integer"),
    ("kwarg", "keyword_argument"),
    ("name", "identifier"),
    ("num", "integer"),
    ("op", "operator"),
    ("str", "string"),
    ("subscript_op", "subscript"),
    ("unary_op", "unary_operator"),
];

pub fn canonical_label(label: &str) -> &str {
    LABEL_ALIASES
        .iter()
        .find(|(a, _)| *a == label)
        .map_or(label, |(_, c)| c)
}

pub fn abstract_ops(s: &EditScript) -> BTreeSet<AbstractOpType> {
    s.ops.iter().map(AbstractOpType::of).collect()
}
