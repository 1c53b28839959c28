use proptest::prelude::*;
use stmtbugs::astcore::{locate_divergence, parse_fragment, trees_isomorphic, SyntaxTree, TreeBuilder};
use stmtbugs::editscript::fuzz::StatementFuzzer;
use stmtbugs::editscript::{apply_script, compute_edit_script, match_trees, OpKind};

fn check_pair(a: &SyntaxTree, b: &SyntaxTree) -> Result<(), String> {
    let m = match_trees(a, b);
    if !m.is_consistent(a, b) {
        return Err("inconsistent mapping".into());
    }
    let s = compute_edit_script(a, b, &m);
    let r = apply_script(a, &s).map_err(|e| e.to_string())?;
    if !trees_isomorphic(&r, b) {
        return Err(format!("round trip: {} vs {}", r.to_sexp(), b.to_sexp()));
    }
    if s.is_empty() != locate_divergence(a, b).is_none() {
        return Err("empty script disagrees with divergence".into());
    }
    for op in &s.ops {
        if op.kind == OpKind::Update && op.value.is_none() {
            return Err("update without value".into());
        }
    }
    Ok(())
}

#[test]
fn fuzzed_statement_pairs_round_trip() {
    let mut f = StatementFuzzer::new(0x5eed);
    for i in 0..3000 {
        let (a, b) = f.pair();
        let (ta, tb) = (parse_fragment(&a), parse_fragment(&b));
        if let Err(e) = check_pair(&ta, &tb) {
            panic!("pair {i}: {a:?} -> {b:?}: {e}");
        }
    }
}

#[test]
fn scripts_are_deterministic() {
    let mut f = StatementFuzzer::new(99);
    for _ in 0..200 {
        let (a, b) = f.pair();
        let (ta, tb) = (parse_fragment(&a), parse_fragment(&b));
        let s1 = compute_edit_script(&ta, &tb, &match_trees(&ta, &tb)).to_json();
        let s2 = compute_edit_script(&ta, &tb, &match_trees(&ta, &tb)).to_json();
        assert_eq!(s1, s2);
    }
}

// random labeled trees over a tiny alphabet so that isomorphic subtrees,
// moves and renames are frequent
#[derive(Clone, Debug)]
struct Node(String, Option<String>, Vec<Node>);

fn arb_tree() -> impl Strategy<Value = SyntaxTree> {
    let leaf = (0..3u8, 0..4u8).prop_map(|(l, v)| Node(format!("l{l}"), Some(format!("v{v}")), vec![]));
    let node = leaf.prop_recursive(4, 30, 4, |inner| {
        (0..3u8, prop::collection::vec(inner, 0..4)).prop_map(|(l, kids)| Node(format!("n{l}"), None, kids))
    });
    node.prop_map(|root| {
        fn add(b: &mut TreeBuilder, n: &Node, p: Option<usize>) {
            let id = b.add(&n.0, n.1.as_deref(), p);
            for c in &n.2 {
                add(b, c, Some(id));
            }
        }
        let mut b = TreeBuilder::new();
        add(&mut b, &Node("root".into(), None, vec![root]), None);
        b.finish()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn random_trees_round_trip(a in arb_tree(), b in arb_tree()) {
        prop_assert!(check_pair(&a, &b).is_ok(), "{}", check_pair(&a, &b).unwrap_err());
    }

    #[test]
    fn self_diff_is_empty(a in arb_tree()) {
        let m = match_trees(&a, &a);
        prop_assert_eq!(m.len(), a.len());
        prop_assert!(compute_edit_script(&a, &a, &m).is_empty());
    }
}
