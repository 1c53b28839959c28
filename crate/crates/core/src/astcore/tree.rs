use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

pub type NodeId = usize;

/// Source span: 1-based lines, 0-based byte columns, end exclusive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub label: String,
    pub value: Option<String>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub span: Span,
    /// Byte range into the tree's source.
    pub bytes: (usize, usize),
}

impl SyntaxNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Arena tree. Node ids are preorder indices, so the root is always 0.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    nodes: Vec<SyntaxNode>,
    source: Arc<str>,
    // byte range of the text the root stands for; narrower than the root's
    // own range for statement header views
    text_range: (usize, usize),
}

impl SyntaxTree {
    pub(crate) fn from_parts(nodes: Vec<SyntaxNode>, source: Arc<str>) -> Self {
        let text_range = nodes.first().map(|n| n.bytes).unwrap_or((0, 0));
        let tree = SyntaxTree {
            nodes,
            source,
            text_range,
        };
        debug_assert!(tree.check_preorder());
        tree
    }

    pub const ROOT: NodeId = 0;

    pub fn root(&self) -> NodeId {
        Self::ROOT
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &SyntaxNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[SyntaxNode] {
        &self.nodes
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id].label
    }

    pub fn value(&self, id: NodeId) -> Option<&str> {
        self.nodes[id].value.as_deref()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    /// Index of `id` among its parent's children.
    pub fn child_index(&self, id: NodeId) -> Option<usize> {
        let p = self.parent(id)?;
        self.children(p).iter().position(|&c| c == id)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Source text of a node.
    pub fn node_text(&self, id: NodeId) -> &str {
        let (s, e) = self.nodes[id].bytes;
        &self.source[s..e]
    }

    /// Source text the whole tree stands for.
    pub fn text(&self) -> &str {
        &self.source[self.text_range.0..self.text_range.1]
    }

    /// Path of child indices from the root.
    pub fn path(&self, mut id: NodeId) -> Vec<usize> {
        let mut path = Vec::new();
        while let Some(i) = self.child_index(id) {
            path.push(i);
            id = self.parent(id).unwrap();
        }
        path.reverse();
        path
    }

    pub fn node_at_path(&self, path: &[usize]) -> Option<NodeId> {
        let mut id = self.root();
        for &i in path {
            id = *self.children(id).get(i)?;
        }
        Some(id)
    }

    /// Strict ancestors, nearest first.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |&p| self.parent(p))
    }

    /// Preorder ids of the subtree rooted at `id` (including `id`). Because
    /// ids are preorder indices this is a contiguous range.
    pub fn descendants(&self, id: NodeId) -> std::ops::Range<NodeId> {
        id..id + self.size(id)
    }

    pub fn size(&self, id: NodeId) -> usize {
        1 + self
            .children(id)
            .iter()
            .map(|&c| self.size(c))
            .sum::<usize>()
    }

    pub fn preorder(&self) -> std::ops::Range<NodeId> {
        0..self.nodes.len()
    }

    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        fn go(t: &SyntaxTree, id: NodeId, out: &mut Vec<NodeId>) {
            for &c in t.children(id) {
                go(t, c, out);
            }
            out.push(id);
        }
        if !self.is_empty() {
            go(self, self.root(), &mut out);
        }
        out
    }

    /// Heights for every node; leaves have height 1.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![1; self.len()];
        for id in (0..self.len()).rev() {
            if let Some(p) = self.parent(id) {
                h[p] = h[p].max(h[id] + 1);
            }
        }
        h
    }

    pub fn contains_label(&self, id: NodeId, label: &str) -> bool {
        self.descendants(id).any(|d| self.label(d) == label)
    }

    /// Copy of the subtree at `id` with fresh preorder ids.
    pub fn subtree(&self, id: NodeId) -> SyntaxTree {
        self.subtree_filtered(id, |_, _| true)
    }

    /// Copy of the subtree at `id`, dropping every child `c` of the root for
    /// which `keep_root_child(self, c)` is false. The copied tree's text ends
    /// where the first dropped child starts.
    pub fn subtree_filtered(
        &self,
        id: NodeId,
        keep_root_child: impl Fn(&SyntaxTree, NodeId) -> bool,
    ) -> SyntaxTree {
        let mut nodes = Vec::new();
        let mut text_end = self.nodes[id].bytes.1;
        fn copy(
            t: &SyntaxTree,
            id: NodeId,
            parent: Option<NodeId>,
            nodes: &mut Vec<SyntaxNode>,
        ) -> NodeId {
            let new_id = nodes.len();
            let src = &t.nodes[id];
            nodes.push(SyntaxNode {
                label: src.label.clone(),
                value: src.value.clone(),
                children: Vec::new(),
                parent,
                span: src.span,
                bytes: src.bytes,
            });
            for &c in &src.children {
                let cid = copy(t, c, Some(new_id), nodes);
                nodes[new_id].children.push(cid);
            }
            new_id
        }
        let src = &self.nodes[id];
        nodes.push(SyntaxNode {
            label: src.label.clone(),
            value: src.value.clone(),
            children: Vec::new(),
            parent: None,
            span: src.span,
            bytes: src.bytes,
        });
        for &c in &src.children {
            if keep_root_child(self, c) {
                let cid = copy(self, c, Some(0), &mut nodes);
                nodes[0].children.push(cid);
            } else {
                text_end = text_end.min(self.nodes[c].bytes.0);
            }
        }
        let start = src.bytes.0;
        let trimmed = self.source[start..text_end].trim_end();
        SyntaxTree {
            nodes,
            source: self.source.clone(),
            text_range: (start, start + trimmed.len()),
        }
    }

    /// S-expression rendering with leaf values, e.g.
    /// `(call (identifier "f") (argument_list (identifier "a")))`.
    pub fn to_sexp(&self) -> String {
        let mut out = String::new();
        if !self.is_empty() {
            self.write_sexp(self.root(), &mut out);
        }
        out
    }

    pub fn sexp_of(&self, id: NodeId) -> String {
        let mut out = String::new();
        self.write_sexp(id, &mut out);
        out
    }

    fn write_sexp(&self, id: NodeId, out: &mut String) {
        let n = &self.nodes[id];
        out.push('(');
        out.push_str(&n.label);
        if let Some(v) = &n.value {
            let _ = write!(out, " {}", serde_json::to_string(v).unwrap_or_default());
        }
        for &c in &n.children {
            out.push(' ');
            self.write_sexp(c, out);
        }
        out.push(')');
    }

    fn check_preorder(&self) -> bool {
        self.nodes.iter().enumerate().all(|(id, n)| {
            n.children.iter().all(|&c| c > id && self.nodes[c].parent == Some(id))
        })
    }
}

/// Label+value isomorphism of two subtrees.
pub fn isomorphic(a: &SyntaxTree, ai: NodeId, b: &SyntaxTree, bi: NodeId) -> bool {
    let (na, nb) = (a.node(ai), b.node(bi));
    na.label == nb.label
        && na.value == nb.value
        && na.children.len() == nb.children.len()
        && na
            .children
            .iter()
            .zip(&nb.children)
            .all(|(&x, &y)| isomorphic(a, x, b, y))
}

pub fn trees_isomorphic(a: &SyntaxTree, b: &SyntaxTree) -> bool {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => true,
        (false, false) => isomorphic(a, a.root(), b, b.root()),
        _ => false,
    }
}

/// Assigns each distinct (label, value, child classes) shape an integer, so
/// that two subtrees are isomorphic iff their classes are equal. One interner
/// can be shared across several trees.
#[derive(Debug, Default)]
pub struct ShapeInterner {
    classes: HashMap<(String, Option<String>, Vec<u32>), u32>,
}

impl ShapeInterner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn classify(&mut self, tree: &SyntaxTree) -> Vec<u32> {
        let mut out = vec![0u32; tree.len()];
        for id in (0..tree.len()).rev() {
            let n = tree.node(id);
            let key = (
                n.label.clone(),
                n.value.clone(),
                n.children.iter().map(|&c| out[c]).collect::<Vec<_>>(),
            );
            let next = self.classes.len() as u32;
            out[id] = *self.classes.entry(key).or_insert(next);
        }
        out
    }
}

/// Builds trees programmatically, in preorder.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<SyntaxNode>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node under `parent` (which must already exist) and returns its
    /// id. Children must be added in preorder: a node's subtree is complete
    /// before its next sibling is started.
    pub fn add(&mut self, label: &str, value: Option<&str>, parent: Option<NodeId>) -> NodeId {
        let id = self.nodes.len();
        assert!(parent.is_some() || id == 0, "only the first node may be a root");
        self.nodes.push(SyntaxNode {
            label: label.to_string(),
            value: value.map(str::to_string),
            children: Vec::new(),
            parent,
            span: Span::default(),
            bytes: (0, 0),
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    pub fn finish(self) -> SyntaxTree {
        SyntaxTree::from_parts(self.nodes, Arc::from(""))
    }
}

/// Parses the s-expression form emitted by [`SyntaxTree::to_sexp`].
pub fn from_sexp(s: &str) -> Option<SyntaxTree> {
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let mut b = TreeBuilder::new();

    fn skip_ws(chars: &[char], pos: &mut usize) {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    }

    fn parse_node(chars: &[char], pos: &mut usize, b: &mut TreeBuilder, parent: Option<NodeId>) -> Option<()> {
        skip_ws(chars, pos);
        if chars.get(*pos) != Some(&'(') {
            return None;
        }
        *pos += 1;
        let start = *pos;
        while *pos < chars.len() && !chars[*pos].is_whitespace() && chars[*pos] != '(' && chars[*pos] != ')' {
            *pos += 1;
        }
        let label: String = chars[start..*pos].iter().collect();
        skip_ws(chars, pos);
        let mut value = None;
        if chars.get(*pos) == Some(&'"') {
            let start = *pos;
            *pos += 1;
            while *pos < chars.len() && chars[*pos] != '"' {
                if chars[*pos] == '\\' {
                    *pos += 1;
                }
                *pos += 1;
            }
            *pos += 1;
            let lit: String = chars[start..(*pos).min(chars.len())].iter().collect();
            value = Some(serde_json::from_str::<String>(&lit).ok()?);
        }
        let id = b.add(&label, value.as_deref(), parent);
        loop {
            skip_ws(chars, pos);
            match chars.get(*pos) {
                Some(')') => {
                    *pos += 1;
                    return Some(());
                }
                Some('(') => parse_node(chars, pos, b, Some(id))?,
                _ => return None,
            }
        }
    }

    parse_node(&chars, &mut pos, &mut b, None)?;
    skip_ws(&chars, &mut pos);
    (pos == chars.len()).then(|| b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SyntaxTree {
        from_sexp(r#"(call (identifier "f") (argument_list (identifier "a") (integer "1")))"#).unwrap()
    }

    #[test]
    fn sexp_roundtrip() {
        let t = sample();
        assert_eq!(t.len(), 5);
        assert_eq!(
            t.to_sexp(),
            r#"(call (identifier "f") (argument_list (identifier "a") (integer "1")))"#
        );
        assert!(from_sexp("(a (b)").is_none());
        let quoted = from_sexp(r#"(string "\"x\\y\"")"#).unwrap();
        assert_eq!(quoted.value(0), Some("\"x\\y\""));
    }

    #[test]
    fn structure_queries() {
        let t = sample();
        assert_eq!(t.path(4), vec![1, 1]);
        assert_eq!(t.node_at_path(&[1, 1]), Some(4));
        assert_eq!(t.ancestors(4).collect::<Vec<_>>(), vec![2, 0]);
        assert_eq!(t.heights(), vec![3, 1, 2, 1, 1]);
        assert_eq!(t.size(2), 3);
        assert_eq!(t.postorder(), vec![1, 3, 4, 2, 0]);
        assert_eq!(t.child_index(2), Some(1));
    }

    #[test]
    fn subtree_reindexes() {
        let t = sample();
        let s = t.subtree(2);
        assert_eq!(s.to_sexp(), r#"(argument_list (identifier "a") (integer "1"))"#);
        assert_eq!(s.parent(0), None);
        assert!(isomorphic(&t, 2, &s, 0));
    }

    #[test]
    fn shape_classes_match_isomorphism() {
        let a = sample();
        let b = from_sexp(r#"(call (identifier "g") (argument_list (identifier "a") (integer "1")))"#).unwrap();
        let mut interner = ShapeInterner::new();
        let ca = interner.classify(&a);
        let cb = interner.classify(&b);
        for x in a.preorder() {
            for y in b.preorder() {
                assert_eq!(ca[x] == cb[y], isomorphic(&a, x, &b, y));
            }
        }
    }
}
