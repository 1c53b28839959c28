//! Two-phase GumTree matching: greedy top-down matching of isomorphic
//! subtrees, then bottom-up container matching with an optimal
//! (Zhang-Shasha) recovery pass on small containers.

use super::NodeMapping;
use crate::astcore::{NodeId, ShapeInterner, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumTreeParams {
    pub min_height: usize,
    pub min_dice: f64,
    pub max_size: usize,
}

impl Default for GumTreeParams {
    fn default() -> Self {
        GumTreeParams {
            min_height: 2,
            min_dice: 0.5,
            max_size: 100,
        }
    }
}

/// Whether two nodes may be paired at all: equal labels, and both carry a
/// value or neither does.
pub(crate) fn compatible(src: &SyntaxTree, a: NodeId, dst: &SyntaxTree, b: NodeId) -> bool {
    src.label(a) == dst.label(b) && src.value(a).is_some() == dst.value(b).is_some()
}

struct Matcher<'t> {
    src: &'t SyntaxTree,
    dst: &'t SyntaxTree,
    params: GumTreeParams,
    src_to_dst: Vec<Option<NodeId>>,
    dst_to_src: Vec<Option<NodeId>>,
}

impl<'t> Matcher<'t> {
    fn link(&mut self, a: NodeId, b: NodeId) {
        debug_assert!(self.src_to_dst[a].is_none() && self.dst_to_src[b].is_none());
        self.src_to_dst[a] = Some(b);
        self.dst_to_src[b] = Some(a);
    }

    /// Pairs two isomorphic subtrees node by node; their preorder layouts are
    /// identical.
    fn link_isomorphic(&mut self, a: NodeId, b: NodeId) {
        for (x, y) in self.src.descendants(a).zip(self.dst.descendants(b)) {
            self.link(x, y);
        }
    }

    fn subtree_unmapped_src(&self, a: NodeId) -> bool {
        self.src.descendants(a).all(|x| self.src_to_dst[x].is_none())
    }

    fn subtree_unmapped_dst(&self, b: NodeId) -> bool {
        self.dst.descendants(b).all(|y| self.dst_to_src[y].is_none())
    }

    /// Dice coefficient over strict descendants.
    fn dice(&self, a: NodeId, b: NodeId) -> f64 {
        let da = self.src.descendants(a).skip(1);
        let db = self.dst.descendants(b);
        let (na, nb) = (self.src.size(a) - 1, self.dst.size(b) - 1);
        if na + nb == 0 {
            return 0.0;
        }
        let common = da
            .filter(|&x| {
                self.src_to_dst[x].is_some_and(|y| y > b && db.contains(&y))
            })
            .count();
        2.0 * common as f64 / (na + nb) as f64
    }

    fn top_down(&mut self) {
        let mut interner = ShapeInterner::new();
        let cs = interner.classify(self.src);
        let cd = interner.classify(self.dst);
        let hs = self.src.heights();
        let hd = self.dst.heights();
        let min_h = self.params.min_height;

        let mut l1 = vec![self.src.root()];
        let mut l2 = vec![self.dst.root()];
        let mut candidates: Vec<(NodeId, NodeId)> = Vec::new();
        let peek = |l: &[NodeId], h: &[usize]| l.iter().map(|&n| h[n]).max().unwrap_or(0);
        let pop = |l: &mut Vec<NodeId>, h: &[usize], height: usize| {
            let (mut taken, rest): (Vec<_>, Vec<_>) = l.iter().partition(|&&n| h[n] == height);
            *l = rest;
            taken.sort_unstable();
            taken
        };

        loop {
            let (p1, p2) = (peek(&l1, &hs), peek(&l2, &hd));
            if p1.min(p2) < min_h {
                break;
            }
            if p1 > p2 {
                for t in pop(&mut l1, &hs, p1) {
                    l1.extend_from_slice(self.src.children(t));
                }
            } else if p2 > p1 {
                for t in pop(&mut l2, &hd, p2) {
                    l2.extend_from_slice(self.dst.children(t));
                }
            } else {
                let h1 = pop(&mut l1, &hs, p1);
                let h2 = pop(&mut l2, &hd, p2);
                let mut in_candidates_1 = vec![false; h1.len()];
                let mut in_candidates_2 = vec![false; h2.len()];
                for (i, &t1) in h1.iter().enumerate() {
                    for (j, &t2) in h2.iter().enumerate() {
                        if cs[t1] != cd[t2] {
                            continue;
                        }
                        let ambiguous = h2.iter().any(|&tx| tx != t2 && cd[tx] == cs[t1])
                            || h1.iter().any(|&ty| ty != t1 && cs[ty] == cd[t2]);
                        if ambiguous {
                            candidates.push((t1, t2));
                            in_candidates_1[i] = true;
                            in_candidates_2[j] = true;
                        } else if self.src_to_dst[t1].is_none() && self.dst_to_src[t2].is_none() {
                            self.link_isomorphic(t1, t2);
                        }
                    }
                }
                for (i, &t1) in h1.iter().enumerate() {
                    if !in_candidates_1[i] && self.src_to_dst[t1].is_none() {
                        l1.extend_from_slice(self.src.children(t1));
                    }
                }
                for (j, &t2) in h2.iter().enumerate() {
                    if !in_candidates_2[j] && self.dst_to_src[t2].is_none() {
                        l2.extend_from_slice(self.dst.children(t2));
                    }
                }
            }
        }

        // resolve ambiguous candidates by how similar their parents are
        let mut scored: Vec<(f64, NodeId, NodeId)> = candidates
            .into_iter()
            .map(|(t1, t2)| {
                let score = match (self.src.parent(t1), self.dst.parent(t2)) {
                    (Some(p1), Some(p2)) => self.dice(p1, p2),
                    _ => 0.0,
                };
                (score, t1, t2)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        for (_, t1, t2) in scored {
            if self.subtree_unmapped_src(t1) && self.subtree_unmapped_dst(t2) {
                self.link_isomorphic(t1, t2);
            }
        }
    }

    fn bottom_up(&mut self) {
        let (sroot, droot) = (self.src.root(), self.dst.root());
        for t1 in self.src.postorder() {
            if t1 == sroot {
                break;
            }
            if self.src_to_dst[t1].is_some() || self.src.children(t1).is_empty() {
                continue;
            }
            let mut cands: Vec<NodeId> = Vec::new();
            for d1 in self.src.descendants(t1).skip(1) {
                let Some(d2) = self.src_to_dst[d1] else { continue };
                for a in self.dst.ancestors(d2) {
                    if a != droot
                        && self.dst_to_src[a].is_none()
                        && compatible(self.src, t1, self.dst, a)
                    {
                        cands.push(a);
                    }
                }
            }
            cands.sort_unstable();
            cands.dedup();
            let mut best: Option<(f64, NodeId)> = None;
            for c in cands {
                let d = self.dice(t1, c);
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, c));
                }
            }
            if let Some((d, t2)) = best {
                if d >= self.params.min_dice {
                    self.link(t1, t2);
                    self.recover(t1, t2);
                }
            }
        }
        if self.src_to_dst[sroot].is_none()
            && self.dst_to_src[droot].is_none()
            && compatible(self.src, sroot, self.dst, droot)
        {
            self.link(sroot, droot);
            self.recover(sroot, droot);
        }
    }

    fn recover(&mut self, t1: NodeId, t2: NodeId) {
        if self.src.size(t1).max(self.dst.size(t2)) >= self.params.max_size {
            return;
        }
        for (a, b) in zhang_shasha_mapping(self.src, t1, self.dst, t2) {
            if self.src_to_dst[a].is_none()
                && self.dst_to_src[b].is_none()
                && compatible(self.src, a, self.dst, b)
            {
                self.link(a, b);
            }
        }
    }
}

/// GumTree mapping between two trees.
pub fn match_trees_with(src: &SyntaxTree, dst: &SyntaxTree, params: GumTreeParams) -> NodeMapping {
    if src.is_empty() || dst.is_empty() {
        return NodeMapping::default();
    }
    let mut m = Matcher {
        src,
        dst,
        params,
        src_to_dst: vec![None; src.len()],
        dst_to_src: vec![None; dst.len()],
    };
    m.top_down();
    m.bottom_up();
    NodeMapping::from_pairs(
        m.src_to_dst
            .iter()
            .enumerate()
            .filter_map(|(a, b)| b.map(|b| (a, b))),
    )
}

// Costs are doubled so a value-only rename (1) is cheaper than delete+insert (4).
const DEL: u32 = 2;
const INS: u32 = 2;
const FORBIDDEN: u32 = 1_000;

/// Postorder view of a subtree with 1-based indices as the Zhang-Shasha
/// recurrences expect.
struct Post {
    ids: Vec<NodeId>,      // ids[k] for k in 1..=n
    leftmost: Vec<usize>,  // leftmost leaf descendant, 1-based
    keyroots: Vec<usize>,
}

impl Post {
    fn new(t: &SyntaxTree, root: NodeId) -> Post {
        let mut ids = vec![usize::MAX];
        let mut leftmost = vec![0];
        fn go(t: &SyntaxTree, id: NodeId, ids: &mut Vec<NodeId>, lm: &mut Vec<usize>) -> usize {
            let mut first = None;
            for &c in t.children(id) {
                let l = go(t, c, ids, lm);
                first.get_or_insert(l);
            }
            ids.push(id);
            let k = ids.len() - 1;
            let l = first.unwrap_or(k);
            lm.push(l);
            l
        }
        go(t, root, &mut ids, &mut leftmost);
        let n = ids.len() - 1;
        // keyroots: highest node for each distinct leftmost leaf
        let mut keyroots = Vec::new();
        let mut seen = vec![false; n + 1];
        for k in (1..=n).rev() {
            if !seen[leftmost[k]] {
                seen[leftmost[k]] = true;
                keyroots.push(k);
            }
        }
        keyroots.sort_unstable();
        Post { ids, leftmost, keyroots }
    }

    fn len(&self) -> usize {
        self.ids.len() - 1
    }
}

/// Optimal tree edit distance mapping restricted to the two subtrees.
pub(crate) fn zhang_shasha_mapping(
    src: &SyntaxTree,
    a: NodeId,
    dst: &SyntaxTree,
    b: NodeId,
) -> Vec<(NodeId, NodeId)> {
    let p1 = Post::new(src, a);
    let p2 = Post::new(dst, b);
    let (n, m) = (p1.len(), p2.len());
    let rename = |i: usize, j: usize| -> u32 {
        let (x, y) = (p1.ids[i], p2.ids[j]);
        if !compatible(src, x, dst, y) {
            FORBIDDEN
        } else if src.value(x) == dst.value(y) {
            0
        } else {
            1
        }
    };

    let mut tree_dist = vec![vec![0u32; m + 1]; n + 1];
    let mut fd = vec![vec![0u32; m + 2]; n + 2];

    let forest_dist = |i: usize, j: usize, fd: &mut Vec<Vec<u32>>, td: &mut Vec<Vec<u32>>| {
        let (li, lj) = (p1.leftmost[i], p2.leftmost[j]);
        // fd indices shifted: row r stands for postorder r, row li-1 is empty forest
        fd[li - 1][lj - 1] = 0;
        for di in li..=i {
            fd[di][lj - 1] = fd[di - 1][lj - 1] + DEL;
        }
        for dj in lj..=j {
            fd[li - 1][dj] = fd[li - 1][dj - 1] + INS;
        }
        for di in li..=i {
            for dj in lj..=j {
                let del = fd[di - 1][dj] + DEL;
                let ins = fd[di][dj - 1] + INS;
                if p1.leftmost[di] == li && p2.leftmost[dj] == lj {
                    let ren = fd[di - 1][dj - 1] + rename(di, dj);
                    fd[di][dj] = del.min(ins).min(ren);
                    td[di][dj] = fd[di][dj];
                } else {
                    let sub = fd[p1.leftmost[di] - 1][p2.leftmost[dj] - 1] + td[di][dj];
                    fd[di][dj] = del.min(ins).min(sub);
                }
            }
        }
    };

    for &i in &p1.keyroots {
        for &j in &p2.keyroots {
            forest_dist(i, j, &mut fd, &mut tree_dist);
        }
    }

    let mut mapping = Vec::new();
    let mut stack = vec![(n, m)];
    while let Some((last_row, last_col)) = stack.pop() {
        forest_dist(last_row, last_col, &mut fd, &mut tree_dist);
        let first_row = p1.leftmost[last_row] - 1;
        let first_col = p2.leftmost[last_col] - 1;
        let (mut row, mut col) = (last_row, last_col);
        while row > first_row || col > first_col {
            if row > first_row && fd[row - 1][col] + DEL == fd[row][col] {
                row -= 1;
            } else if col > first_col && fd[row][col - 1] + INS == fd[row][col] {
                col -= 1;
            } else if p1.leftmost[row] - 1 == first_row && p2.leftmost[col] - 1 == first_col {
                let (x, y) = (p1.ids[row], p2.ids[col]);
                if compatible(src, x, dst, y) {
                    mapping.push((x, y));
                }
                row -= 1;
                col -= 1;
            } else {
                stack.push((row, col));
                row = p1.leftmost[row] - 1;
                col = p2.leftmost[col] - 1;
            }
        }
    }
    mapping.sort_unstable();
    mapping
}
