//! Edit script generation (Chawathe et al. 1996, as used by GumTree) and
//! replay.

use super::{EditOp, EditScript, NodeMapping, OpKind};
use crate::astcore::{SyntaxTree, TreeBuilder};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditError {
    #[error("invalid edit op #{index}: {reason}")]
    InvalidOp { index: usize, reason: String },
}

#[derive(Debug, Clone)]
struct WorkNode {
    label: String,
    value: Option<String>,
    children: Vec<usize>,
    parent: Option<usize>,
    alive: bool,
}

/// Mutable copy of the before-tree with a virtual root on top.
struct WorkTree {
    nodes: Vec<WorkNode>,
    fake: usize,
}

impl WorkTree {
    fn new(t: &SyntaxTree) -> WorkTree {
        let mut nodes: Vec<WorkNode> = t
            .nodes()
            .iter()
            .map(|n| WorkNode {
                label: n.label.clone(),
                value: n.value.clone(),
                children: n.children.clone(),
                parent: n.parent,
                alive: true,
            })
            .collect();
        let fake = nodes.len();
        let mut root_children = Vec::new();
        if fake > 0 {
            nodes[0].parent = Some(fake);
            root_children.push(0);
        }
        nodes.push(WorkNode {
            label: String::new(),
            value: None,
            children: root_children,
            parent: None,
            alive: true,
        });
        WorkTree { nodes, fake }
    }

    fn live(&self, id: usize) -> bool {
        id < self.nodes.len() && self.nodes[id].alive
    }

    fn parent(&self, id: usize) -> usize {
        self.nodes[id].parent.expect("non-root work node has a parent")
    }

    fn index_in_parent(&self, id: usize) -> usize {
        let p = self.parent(id);
        self.nodes[p].children.iter().position(|&c| c == id).unwrap()
    }

    fn detach(&mut self, id: usize) {
        let p = self.parent(id);
        self.nodes[p].children.retain(|&c| c != id);
        self.nodes[id].parent = None;
    }

    fn attach(&mut self, id: usize, parent: usize, pos: usize) {
        self.nodes[parent].children.insert(pos, id);
        self.nodes[id].parent = Some(parent);
    }

    fn add(&mut self, label: &str, value: Option<&str>, parent: usize, pos: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(WorkNode {
            label: label.to_string(),
            value: value.map(str::to_string),
            children: Vec::new(),
            parent: None,
            alive: true,
        });
        self.attach(id, parent, pos);
        id
    }

    fn is_ancestor_or_self(&self, anc: usize, mut id: usize) -> bool {
        loop {
            if id == anc {
                return true;
            }
            match self.nodes[id].parent {
                Some(p) => id = p,
                None => return false,
            }
        }
    }

    fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(self.fake, false)];
        while let Some((n, expanded)) = stack.pop() {
            if expanded {
                out.push(n);
            } else {
                stack.push((n, true));
                for &c in self.nodes[n].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    fn into_tree(self) -> Option<SyntaxTree> {
        let [root] = self.nodes[self.fake].children[..] else {
            return None;
        };
        let mut b = TreeBuilder::new();
        let mut stack = vec![(root, None)];
        while let Some((n, parent)) = stack.pop() {
            let node = &self.nodes[n];
            let id = b.add(&node.label, node.value.as_deref(), parent);
            for &c in node.children.iter().rev() {
                stack.push((c, Some(id)));
            }
        }
        Some(b.finish())
    }
}

struct Gen<'a> {
    dst: &'a SyntaxTree,
    w: WorkTree,
    fake_dst: usize,
    w2d: Vec<Option<usize>>,
    d2w: Vec<Option<usize>>,
    w_in_order: Vec<bool>,
    d_in_order: Vec<bool>,
    ops: Vec<EditOp>,
}

impl<'a> Gen<'a> {
    fn link(&mut self, a: usize, b: usize) {
        self.w2d[a] = Some(b);
        self.d2w[b] = Some(a);
    }

    fn dst_parent(&self, x: usize) -> usize {
        self.dst.parent(x).unwrap_or(self.fake_dst)
    }

    fn dst_children(&self, y: usize) -> &'a [usize] {
        if y == self.fake_dst {
            std::slice::from_ref(&SyntaxTree::ROOT)
        } else {
            self.dst.children(y)
        }
    }

    fn push(&mut self, kind: OpKind, node: usize, position: usize, value: Option<String>) {
        let parent = self.w.parent(node);
        self.ops.push(EditOp {
            kind,
            node_label: self.w.nodes[node].label.clone(),
            parent_label: self.w.nodes[parent].label.clone(),
            position,
            value,
            node_id: node,
            parent_id: parent,
        });
    }

    /// Target index for `x` among its partner parent's children: right after
    /// the partner of the nearest in-order left sibling.
    fn find_pos(&self, x: usize) -> usize {
        let y = self.dst_parent(x);
        let siblings = self.dst_children(y);
        if let Some(&first) = siblings.iter().find(|&&c| self.d_in_order[c]) {
            if first == x {
                return 0;
            }
        }
        let xpos = siblings.iter().position(|&c| c == x).unwrap();
        match siblings[..xpos].iter().rev().find(|&&c| self.d_in_order[c]) {
            None => 0,
            Some(&v) => {
                let u = self.d2w[v].expect("in-order nodes are mapped");
                self.w.index_in_parent(u) + 1
            }
        }
    }

    /// Moves `node` under `parent` at `k` (an index computed before removal)
    /// and returns the index it ends up at.
    fn move_to(&mut self, node: usize, parent: usize, k: usize) -> usize {
        let old_parent = self.w.parent(node);
        let old_idx = self.w.index_in_parent(node);
        self.w.detach(node);
        let k = if old_parent == parent && old_idx < k { k - 1 } else { k };
        self.w.attach(node, parent, k);
        k
    }

    fn align_children(&mut self, wn: usize, x: usize) {
        let w_children = self.w.nodes[wn].children.clone();
        let d_children = self.dst_children(x);
        for &c in &w_children {
            self.w_in_order[c] = false;
        }
        for &c in d_children {
            self.d_in_order[c] = false;
        }
        let s1: Vec<usize> = w_children
            .iter()
            .copied()
            .filter(|&c| self.w2d[c].is_some_and(|d| d_children.contains(&d)))
            .collect();
        let s2: Vec<usize> = d_children
            .iter()
            .copied()
            .filter(|&c| self.d2w[c].is_some_and(|a| w_children.contains(&a)))
            .collect();
        let common = lcs(&s1, &s2, |a, b| self.w2d[a] == Some(b));
        for &(a, b) in &common {
            self.w_in_order[a] = true;
            self.d_in_order[b] = true;
        }
        for &b in &s2 {
            let a = self.d2w[b].unwrap();
            if common.iter().any(|&(ca, _)| ca == a) {
                continue;
            }
            let k = self.find_pos(b);
            let eff = self.move_to(a, wn, k);
            self.push(OpKind::Move, a, eff, None);
            self.w_in_order[a] = true;
            self.d_in_order[b] = true;
        }
    }

    fn run(mut self) -> EditScript {
        for x in self.dst.preorder() {
            let y = self.dst_parent(x);
            let z = self.d2w[y].expect("parents are processed first");
            let wn = match self.d2w[x] {
                None => {
                    let k = self.find_pos(x);
                    let id = self.w.add(self.dst.label(x), self.dst.value(x), z, k);
                    self.w2d.push(None);
                    self.w_in_order.push(false);
                    self.link(id, x);
                    self.push(OpKind::Insert, id, k, self.dst.value(x).map(str::to_string));
                    id
                }
                Some(wn) => {
                    let new_value = self.dst.value(x);
                    if self.w.nodes[wn].value.as_deref() != new_value {
                        self.w.nodes[wn].value = new_value.map(str::to_string);
                        let pos = self.w.index_in_parent(wn);
                        self.push(OpKind::Update, wn, pos, new_value.map(str::to_string));
                    }
                    if self.w.parent(wn) != z {
                        let k = self.find_pos(x);
                        let eff = self.move_to(wn, z, k);
                        self.push(OpKind::Move, wn, eff, None);
                    }
                    wn
                }
            };
            self.w_in_order[wn] = true;
            self.d_in_order[x] = true;
            self.align_children(wn, x);
        }
        for n in self.w.postorder() {
            if n != self.w.fake && self.w2d[n].is_none() {
                let pos = self.w.index_in_parent(n);
                self.push(OpKind::Delete, n, pos, None);
                self.w.detach(n);
                self.w.nodes[n].alive = false;
            }
        }
        EditScript { ops: self.ops }
    }
}

/// LCS of two sequences under `eq`; earliest matches win ties.
fn lcs(a: &[usize], b: &[usize], eq: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut t = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            t[i][j] = if eq(a[i], b[j]) {
                t[i + 1][j + 1] + 1
            } else {
                t[i + 1][j].max(t[i][j + 1])
            };
        }
    }
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < n && j < m {
        if eq(a[i], b[j]) {
            out.push((a[i], b[j]));
            i += 1;
            j += 1;
        } else if t[i + 1][j] >= t[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

pub(crate) fn generate(src: &SyntaxTree, dst: &SyntaxTree, m: &NodeMapping) -> EditScript {
    let w = WorkTree::new(src);
    let fake = w.fake;
    let mut g = Gen {
        dst,
        w,
        fake_dst: dst.len(),
        w2d: vec![None; src.len() + 1],
        d2w: vec![None; dst.len() + 1],
        w_in_order: vec![false; src.len() + 1],
        d_in_order: vec![false; dst.len() + 1],
        ops: Vec::new(),
    };
    for &(a, b) in m.pairs() {
        g.link(a, b);
    }
    g.link(fake, dst.len());
    g.w_in_order[fake] = true;
    g.d_in_order[dst.len()] = true;
    g.run()
}

pub(crate) fn apply(before: &SyntaxTree, s: &EditScript) -> Result<SyntaxTree, EditError> {
    let mut w = WorkTree::new(before);
    for (index, op) in s.ops.iter().enumerate() {
        let fail = |reason: String| EditError::InvalidOp { index, reason };
        let check_label = |w: &WorkTree, id: usize, want: &str, what: &str| {
            if w.nodes[id].label == want {
                Ok(())
            } else {
                Err(fail(format!("{what} label {:?} != {want:?}", w.nodes[id].label)))
            }
        };
        match op.kind {
            OpKind::Insert => {
                if op.node_id != w.nodes.len() {
                    return Err(fail(format!("insert id {} out of sequence", op.node_id)));
                }
                if !w.live(op.parent_id) {
                    return Err(fail(format!("no parent {}", op.parent_id)));
                }
                check_label(&w, op.parent_id, &op.parent_label, "parent")?;
                if op.position > w.nodes[op.parent_id].children.len() {
                    return Err(fail(format!("position {} out of range", op.position)));
                }
                w.add(&op.node_label, op.value.as_deref(), op.parent_id, op.position);
            }
            OpKind::Move => {
                if !w.live(op.node_id) || op.node_id == w.fake || !w.live(op.parent_id) {
                    return Err(fail("move of a missing node".into()));
                }
                check_label(&w, op.node_id, &op.node_label, "node")?;
                check_label(&w, op.parent_id, &op.parent_label, "parent")?;
                if w.is_ancestor_or_self(op.node_id, op.parent_id) {
                    return Err(fail("move into own subtree".into()));
                }
                w.detach(op.node_id);
                if op.position > w.nodes[op.parent_id].children.len() {
                    return Err(fail(format!("position {} out of range", op.position)));
                }
                w.attach(op.node_id, op.parent_id, op.position);
            }
            OpKind::Update => {
                if !w.live(op.node_id) || op.node_id == w.fake {
                    return Err(fail("update of a missing node".into()));
                }
                check_label(&w, op.node_id, &op.node_label, "node")?;
                if !w.nodes[op.node_id].children.is_empty() {
                    return Err(fail("update of an interior node".into()));
                }
                let Some(v) = &op.value else {
                    return Err(fail("update without value".into()));
                };
                w.nodes[op.node_id].value = Some(v.clone());
            }
            OpKind::Delete => {
                if !w.live(op.node_id) || op.node_id == w.fake {
                    return Err(fail("delete of a missing node".into()));
                }
                check_label(&w, op.node_id, &op.node_label, "node")?;
                if !w.nodes[op.node_id].children.is_empty() {
                    return Err(fail("delete of an interior node".into()));
                }
                w.detach(op.node_id);
                w.nodes[op.node_id].alive = false;
            }
        }
    }
    let roots = w.nodes[w.fake].children.len();
    w.into_tree().ok_or(EditError::InvalidOp {
        index: s.ops.len(),
        reason: format!("result has {roots} roots"),
    })
}
