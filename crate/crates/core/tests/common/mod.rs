#![allow(dead_code)]

pub mod fixture_repo;

/// (before, after, expected label). At least two per pattern.
pub const GOLDEN: &[(&str, &str, &str)] = &[
    ("x = foo(a)", "x = foo(b)", "change_identifier_used"),
    ("return value", "return data", "change_identifier_used"),
    ("for item in items:\n    pass", "for item in values:\n    pass", "change_identifier_used"),
    ("y = a + b", "y = a + c", "change_binary_operand"),
    ("if count > limit:\n    pass", "if count > 0:\n    pass", "change_binary_operand"),
    ("f(x)", "f(x, y)", "same_function_more_args"),
    ("f()", "f(x)", "same_function_more_args"),
    ("obj.save(path)", "obj.save(path, overwrite=True)", "same_function_more_args"),
    ("result = open(name)", "result = read(name)", "wrong_function_name"),
    ("self.log.warn(msg)", "self.log.warning(msg)", "wrong_function_name"),
    ("x = y", "x = int(y)", "add_function_around_expression"),
    ("return items", "return list(items)", "add_function_around_expression"),
    ("self._x", "self.a", "change_attribute_used"),
    ("total = self.count", "total = self.size", "change_attribute_used"),
    ("timeout = 10", "timeout = 30", "change_numeric_literal"),
    ("ratio = 0.5", "ratio = 0.25", "change_numeric_literal"),
    ("if x:\n    pass", "if x and y:\n    pass", "more_specific_if"),
    ("if a or b:\n    pass", "if a:\n    pass", "more_specific_if"),
    ("name = raw", "name = raw.strip()", "add_method_call"),
    ("return key", "return key.lower()", "add_method_call"),
    ("xs = [1, 2]", "xs = [1, 2, 3]", "add_elements_to_iterable"),
    ("opts = {'a': 1}", "opts = {'a': 1, 'b': 2}", "add_elements_to_iterable"),
    ("g(a, b)", "g(a)", "same_function_less_args"),
    ("run(cmd, shell=True)", "run(cmd)", "same_function_less_args"),
    ("debug = True", "debug = False", "change_boolean_literal"),
    ("return False", "return True", "change_boolean_literal"),
    ("path = base", "path = base.name", "add_attribute_access"),
    ("print(self.x)", "print(self.x.y)", "add_attribute_access"),
    ("z = a + b", "z = a - b", "change_binary_operator"),
    ("if i < n:\n    pass", "if i <= n:\n    pass", "change_binary_operator"),
    ("total += x", "total -= x", "change_binary_operator"),
    ("a.close()", "b.close()", "same_function_wrong_caller"),
    ("self.conn.send(data)", "self.sock.send(data)", "same_function_wrong_caller"),
    ("if x and y:\n    pass", "if x:\n    pass", "less_specific_if"),
    ("if ready:\n    pass", "if ready or forced:\n    pass", "less_specific_if"),
    ("f(key=1)", "f(default=1)", "change_keyword_argument_used"),
    ("d.get(k, defalt=None)", "d.get(k, default=None)", "change_keyword_argument_used"),
    ("if flag:\n    pass", "if not flag:\n    pass", "change_unary_operator"),
    ("x = -y", "x = y", "change_unary_operator"),
    ("v = ~mask", "v = -mask", "change_unary_operator"),
    ("return compute(a, b)", "return compute(b, a)", "same_function_swap_args"),
    ("os.path.join(b, a, c)", "os.path.join(c, a, b)", "same_function_swap_args"),
    ("limit = None", "limit = 0", "change_constant_type"),
    ("sep = 1", "sep = ''", "change_constant_type"),
    ("x = 'a'", "x = 'b'", "no_sstub_single_token"),
    ("log('start')", "log('stop')", "no_sstub_single_token"),
    ("x = y if a else b", "x = y if c else d", "no_sstub_single_statement"),
    ("x = [i for i in a]", "x = {i: 1 for i in a}", "no_sstub_single_statement"),
];

/// Pairs where several predicates hold; the expected label is the more
/// specific one, the second label is a pattern that also matches.
pub const PRECEDENCE_CASES: &[(&str, &str, &str, &str)] = &[
    ("x = f(a)", "x = g(a)", "wrong_function_name", "change_identifier_used"),
    ("o.f(a)", "o.g(a)", "wrong_function_name", "change_attribute_used"),
    ("x = y", "x = y.z", "add_attribute_access", "change_identifier_used"),
    ("x.f()", "y.f()", "same_function_wrong_caller", "change_identifier_used"),
    ("y = a + 1", "y = a + 2", "change_binary_operand", "change_numeric_literal"),
    ("y = a + b", "y = a + c", "change_binary_operand", "change_identifier_used"),
    ("if x == True:\n    pass", "if x == False:\n    pass", "change_binary_operand", "change_boolean_literal"),
    ("f(key=a)", "f(kee=a)", "change_keyword_argument_used", "change_identifier_used"),
];

use rand::{Rng, SeedableRng};
use stmtbugs::editscript::{EditOp, EditScript, OpKind};
use stmtbugs::record::BugRecord;
use stmtbugs::sstub::SstubLabel;

const NODE_LABELS: &[&str] = &[
    "identifier",
    "call",
    "argument_list",
    "string",
    "integer",
    "attribute",
    "binary_operator",
];

/// Records with random edit scripts over a small label vocabulary, so
/// exact matches between scripts are common.
pub fn random_corpus(seed: u64, n: usize) -> Vec<BugRecord> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let ops = (0..rng.gen_range(0..4))
                .map(|_| {
                    let kind = OpKind::ALL[rng.gen_range(0..4)];
                    EditOp {
                        kind,
                        node_label: NODE_LABELS[rng.gen_range(0..NODE_LABELS.len())].to_string(),
                        parent_label: NODE_LABELS[rng.gen_range(0..3)].to_string(),
                        position: rng.gen_range(0..3),
                        value: (kind == OpKind::Update).then(|| "v".to_string()),
                        node_id: 0,
                        parent_id: 0,
                    }
                })
                .collect::<Vec<_>>();
            let label = if rng.gen_bool(0.4) {
                SstubLabel::ALL[rng.gen_range(0..20)]
            } else {
                SstubLabel::ALL[20 + rng.gen_range(0..2)]
            };
            let mut ops = ops;
            if !label.is_sstub() && rng.gen_bool(0.1) {
                // op types no SStuB record uses
                for o in &mut ops {
                    o.node_label = "lambda".into();
                    o.parent_label = "lambda".into();
                }
            }
            BugRecord {
                project: format!("p{}", i % 7),
                commit_sha: format!("{i:040x}"),
                commit_message: "fix".into(),
                file_path: "m.py".into(),
                diff: String::new(),
                before_line: "x = a".into(),
                after_line: "x = b".into(),
                sstub_pattern: label,
                edit_ops_count: ops.len(),
                edit_script: EditScript { ops },
                likely_bug: true,
                in_tssb: true,
                is_typo: false,
            }
        })
        .collect()
}

/// Abstract op type strings, computed without the library's formatter.
pub fn op_type_strings(r: &BugRecord) -> std::collections::BTreeSet<String> {
    r.edit_script
        .ops
        .iter()
        .map(|o| match o.kind {
            OpKind::Insert => format!("Insert({}, {})", o.node_label, o.parent_label),
            OpKind::Move => format!("Move({}, {})", o.node_label, o.parent_label),
            OpKind::Update => format!("Update({})", o.node_label),
            OpKind::Delete => format!("Delete({})", o.node_label),
        })
        .collect()
}

/// All-pairs oracle: (histogram, alike, related, unrelated) over NonSStuB
/// records, comparing against every SStuB record individually.
pub fn brute_force_distances(records: &[BugRecord]) -> (Vec<u64>, u64, u64, u64) {
    let refs: Vec<_> = records
        .iter()
        .filter(|r| r.sstub_pattern.is_sstub())
        .map(op_type_strings)
        .collect();
    let mut hist = vec![0u64; 20];
    let (mut alike, mut related, mut unrelated) = (0, 0, 0);
    for r in records.iter().filter(|r| !r.sstub_pattern.is_sstub()) {
        let s = op_type_strings(r);
        let mut best = (1u64, 1u64); // distance as a fraction num/den
        for t in &refs {
            let inter = s.intersection(t).count() as u64;
            let union = s.union(t).count() as u64;
            let d = if union == 0 { (0, 1) } else { (union - inter, union) };
            if d.0 * best.1 < best.0 * d.1 {
                best = d;
            }
        }
        let bin = ((20 * best.0) / best.1).min(19) as usize;
        hist[bin] += 1;
        match best {
            (0, _) => alike += 1,
            (a, b) if a == b => unrelated += 1,
            _ => related += 1,
        }
    }
    (hist, alike, related, unrelated)
}

/// Per-pattern counts of a tssb and an ssb dataset, in `PATTERNS` order.
pub const TSSB_COUNTS: [f64; 20] = [
    237., 174., 150., 134., 117., 104., 97., 68., 60., 57., 50., 37., 32., 29., 25., 22., 20., 15., 8., 6.,
];
pub const SSB_COUNTS: [f64; 20] = [
    659., 349., 457., 397., 244., 285., 275., 121., 118., 175., 169., 82., 74., 71., 46., 45., 59., 23., 77., 12.,
];
/// Rank correlation of the two count columns, from sum d^2 = 76 over
/// n = 20 untied ranks: 1 - 6 * 76 / (20 * 399).
pub const RHO_ORACLE: f64 = 0.9428571428571428;

/// Typo fixtures: (before, after, expected).
pub const TYPO_CASES: &[(&str, &str, bool)] = &[
    ("self.vaule = 1", "self.value = 1", true),
    ("x = recieve(msg)", "x = receive(msg)", true),
    ("print('helo world')", "print('hello world')", true),
    ("y = ab", "y = xy", false),
    ("f('ab')", "f('xy')", false),
    ("total = compute_sum(values)", "total = compute_avg(values)", false),
    ("result = self.handler.process(request, timeout=30)", "response = other.dispatch(req)", false),
    ("if x > 0:", "if x >= 0:", true),
    ("abc = 1", "xyz = 1", false),
    ("abc = 1", "abd = 1", true),
];
