//! Classification of single-statement changes into the 20 Python SStuB
//! patterns.
//!
//! Every predicate looks at the divergence pair `(b, a)` of the two statement
//! trees: the first node pair where they disagree. When several predicates
//! hold, the one earliest in [`PRECEDENCE`] wins.

use crate::astcore::{isomorphic, locate_divergence, NodeId, SyntaxTree, OPERATOR_LABEL};
use crate::editscript::EditScript;
use crate::pytok::tokenize;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SstubLabel {
    ChangeIdentifierUsed,
    ChangeBinaryOperand,
    SameFunctionMoreArgs,
    WrongFunctionName,
    AddFunctionAroundExpression,
    ChangeAttributeUsed,
    ChangeNumericLiteral,
    MoreSpecificIf,
    AddMethodCall,
    AddElementsToIterable,
    SameFunctionLessArgs,
    ChangeBooleanLiteral,
    AddAttributeAccess,
    ChangeBinaryOperator,
    SameFunctionWrongCaller,
    LessSpecificIf,
    ChangeKeywordArgumentUsed,
    ChangeUnaryOperator,
    SameFunctionSwapArgs,
    ChangeConstantType,
    NoSstubSingleToken,
    NoSstubSingleStatement,
}

use SstubLabel::*;

/// Most specific first.
pub const PRECEDENCE: [SstubLabel; 20] = [
    SameFunctionSwapArgs,
    SameFunctionWrongCaller,
    WrongFunctionName,
    SameFunctionMoreArgs,
    SameFunctionLessArgs,
    ChangeKeywordArgumentUsed,
    AddFunctionAroundExpression,
    AddMethodCall,
    AddAttributeAccess,
    ChangeAttributeUsed,
    MoreSpecificIf,
    LessSpecificIf,
    ChangeUnaryOperator,
    ChangeBinaryOperator,
    ChangeBinaryOperand,
    ChangeBooleanLiteral,
    ChangeNumericLiteral,
    ChangeConstantType,
    AddElementsToIterable,
    ChangeIdentifierUsed,
];

/// Table order, as the patterns are usually listed (most frequent first).
pub const PATTERNS: [SstubLabel; 20] = [
    ChangeIdentifierUsed,
    ChangeBinaryOperand,
    SameFunctionMoreArgs,
    WrongFunctionName,
    AddFunctionAroundExpression,
    ChangeAttributeUsed,
    ChangeNumericLiteral,
    MoreSpecificIf,
    AddMethodCall,
    AddElementsToIterable,
    SameFunctionLessArgs,
    ChangeBooleanLiteral,
    AddAttributeAccess,
    ChangeBinaryOperator,
    SameFunctionWrongCaller,
    LessSpecificIf,
    ChangeKeywordArgumentUsed,
    ChangeUnaryOperator,
    SameFunctionSwapArgs,
    ChangeConstantType,
];

impl SstubLabel {
    pub const ALL: [SstubLabel; 22] = [
        ChangeIdentifierUsed,
        ChangeBinaryOperand,
        SameFunctionMoreArgs,
        WrongFunctionName,
        AddFunctionAroundExpression,
        ChangeAttributeUsed,
        ChangeNumericLiteral,
        MoreSpecificIf,
        AddMethodCall,
        AddElementsToIterable,
        SameFunctionLessArgs,
        ChangeBooleanLiteral,
        AddAttributeAccess,
        ChangeBinaryOperator,
        SameFunctionWrongCaller,
        LessSpecificIf,
        ChangeKeywordArgumentUsed,
        ChangeUnaryOperator,
        SameFunctionSwapArgs,
        ChangeConstantType,
        NoSstubSingleToken,
        NoSstubSingleStatement,
    ];

    /// Serialized form, e.g. `change_identifier_used`.
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeIdentifierUsed => "change_identifier_used",
            ChangeBinaryOperand => "change_binary_operand",
            SameFunctionMoreArgs => "same_function_more_args",
            WrongFunctionName => "wrong_function_name",
            AddFunctionAroundExpression => "add_function_around_expression",
            ChangeAttributeUsed => "change_attribute_used",
            ChangeNumericLiteral => "change_numeric_literal",
            MoreSpecificIf => "more_specific_if",
            AddMethodCall => "add_method_call",
            AddElementsToIterable => "add_elements_to_iterable",
            SameFunctionLessArgs => "same_function_less_args",
            ChangeBooleanLiteral => "change_boolean_literal",
            AddAttributeAccess => "add_attribute_access",
            ChangeBinaryOperator => "change_binary_operator",
            SameFunctionWrongCaller => "same_function_wrong_caller",
            LessSpecificIf => "less_specific_if",
            ChangeKeywordArgumentUsed => "change_keyword_argument_used",
            ChangeUnaryOperator => "change_unary_operator",
            SameFunctionSwapArgs => "same_function_swap_args",
            ChangeConstantType => "change_constant_type",
            NoSstubSingleToken => "no_sstub_single_token",
            NoSstubSingleStatement => "no_sstub_single_statement",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ChangeIdentifierUsed => "Change Identifier Used",
            ChangeBinaryOperand => "Change Binary Operand",
            SameFunctionMoreArgs => "Same Function More Args",
            WrongFunctionName => "Wrong Function Name",
            AddFunctionAroundExpression => "Add Function Around Expression",
            ChangeAttributeUsed => "Change Attribute Used",
            ChangeNumericLiteral => "Change Numeric Literal",
            MoreSpecificIf => "More Specific If",
            AddMethodCall => "Add Method Call",
            AddElementsToIterable => "Add Elements To Iterable",
            SameFunctionLessArgs => "Same Function Less Args",
            ChangeBooleanLiteral => "Change Boolean Literal",
            AddAttributeAccess => "Add Attribute Access",
            ChangeBinaryOperator => "Change Binary Operator",
            SameFunctionWrongCaller => "Same Function Wrong Caller",
            LessSpecificIf => "Less Specific If",
            ChangeKeywordArgumentUsed => "Change Keyword Argument Used",
            ChangeUnaryOperator => "Change Unary Operator",
            SameFunctionSwapArgs => "Same Function Swap Args",
            ChangeConstantType => "Change Constant Type",
            NoSstubSingleToken => "NoSStuB (single token)",
            NoSstubSingleStatement => "NoSStuB (single statement)",
        }
    }

    pub fn is_sstub(self) -> bool {
        !matches!(self, NoSstubSingleToken | NoSstubSingleStatement)
    }
}

impl fmt::Display for SstubLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SstubLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SstubLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown sstub label: {s}"))
    }
}

/// Position in [`PRECEDENCE`]; the two fallbacks rank after every pattern.
pub fn specificity_rank(label: SstubLabel) -> usize {
    match label {
        NoSstubSingleToken => PRECEDENCE.len(),
        NoSstubSingleStatement => PRECEDENCE.len() + 1,
        l => PRECEDENCE.iter().position(|&p| p == l).unwrap(),
    }
}

/// The divergence pair with both trees at hand.
struct Site<'t> {
    bt: &'t SyntaxTree,
    at: &'t SyntaxTree,
    b: NodeId,
    a: NodeId,
}

const OPERATOR_EXPRS: &[&str] = &["binary_operator", "comparison_operator", "boolean_operator"];
const ITERABLES: &[&str] = &["list", "tuple", "set", "dictionary"];

fn literal_class(label: &str) -> Option<&'static str> {
    match label {
        "integer" | "float" => Some("number"),
        "string" | "concatenated_string" => Some("string"),
        "true" | "false" => Some("boolean"),
        "none" => Some("none"),
        _ => None,
    }
}

fn parent_label(t: &SyntaxTree, n: NodeId) -> &str {
    t.parent(n).map_or("", |p| t.label(p))
}

/// `n` is child `idx` of a `label` node; negative `idx` counts from the end.
fn is_child_of(t: &SyntaxTree, n: NodeId, label: &str, idx: isize) -> Option<NodeId> {
    let p = t.parent(n)?;
    if t.label(p) != label {
        return None;
    }
    let k = t.children(p).len() as isize;
    let want = if idx < 0 { k + idx } else { idx };
    (t.child_index(n)? as isize == want).then_some(p)
}

/// Positional and keyword arguments of a call.
fn call_args(t: &SyntaxTree, call: NodeId) -> Vec<NodeId> {
    match t.children(call).get(1) {
        Some(&args) if t.label(args) == "argument_list" => t.children(args).to_vec(),
        Some(&arg) => vec![arg],
        None => Vec::new(),
    }
}

impl Site<'_> {
    fn lb(&self) -> &str {
        self.bt.label(self.b)
    }

    fn la(&self) -> &str {
        self.at.label(self.a)
    }

    fn iso(&self, b: NodeId, a: NodeId) -> bool {
        isomorphic(self.bt, b, self.at, a)
    }

    fn both_identifiers(&self) -> bool {
        self.lb() == "identifier" && self.la() == "identifier"
    }

    /// The call pair when the divergence is a call or its argument list.
    fn call_pair(&self) -> Option<(NodeId, NodeId)> {
        match (self.lb(), self.la()) {
            ("call", "call") => Some((self.b, self.a)),
            ("argument_list", "argument_list") => {
                let cb = is_child_of(self.bt, self.b, "call", 1)?;
                let ca = is_child_of(self.at, self.a, "call", 1)?;
                Some((cb, ca))
            }
            _ => None,
        }
    }

    /// Same callee, arguments before and after.
    fn same_function_args(&self) -> Option<(Vec<NodeId>, Vec<NodeId>)> {
        let (cb, ca) = self.call_pair()?;
        let (fb, fa) = (self.bt.children(cb)[0], self.at.children(ca)[0]);
        self.iso(fb, fa)
            .then(|| (call_args(self.bt, cb), call_args(self.at, ca)))
    }

    fn swap_args(&self) -> bool {
        let Some((xb, xa)) = self.same_function_args() else { return false };
        if xb.len() != xa.len() {
            return false;
        }
        let diff: Vec<usize> = (0..xb.len()).filter(|&i| !self.iso(xb[i], xa[i])).collect();
        matches!(diff[..], [i, j] if self.iso(xb[i], xa[j]) && self.iso(xb[j], xa[i]))
    }

    fn more_args(&self) -> bool {
        self.same_function_args().is_some_and(|(xb, xa)| xa.len() > xb.len())
    }

    fn less_args(&self) -> bool {
        self.same_function_args().is_some_and(|(xb, xa)| xa.len() < xb.len())
    }

    /// The receiver of a method call changed: `x.f()` to `y.f()`, or
    /// `self.a.f()` to `self.b.f()`.
    fn wrong_caller(&self) -> bool {
        let receiver = |t: &SyntaxTree, mut n: NodeId| loop {
            if is_child_of(t, n, "attribute", 0)
                .and_then(|attr| is_child_of(t, attr, "call", 0))
                .is_some()
            {
                return true;
            }
            match t.parent(n) {
                Some(p) if t.label(p) == "attribute" => n = p,
                _ => return false,
            }
        };
        receiver(self.bt, self.b) && receiver(self.at, self.a)
    }

    /// The called name changed: `f()` to `g()` or `x.f()` to `x.g()`.
    fn wrong_function_name(&self) -> bool {
        if !self.both_identifiers() {
            return false;
        }
        let callee = |t: &SyntaxTree, n| {
            is_child_of(t, n, "call", 0).is_some()
                || is_child_of(t, n, "attribute", -1)
                    .and_then(|attr| is_child_of(t, attr, "call", 0))
                    .is_some()
        };
        callee(self.bt, self.b) && callee(self.at, self.a)
    }

    fn change_keyword_argument(&self) -> bool {
        self.both_identifiers()
            && is_child_of(self.bt, self.b, "keyword_argument", 0).is_some()
            && is_child_of(self.at, self.a, "keyword_argument", 0).is_some()
    }

    /// `x` becomes `g(x)` (possibly with further arguments).
    fn add_function_around(&self) -> bool {
        self.la() == "call"
            && call_args(self.at, self.a)
                .into_iter()
                .any(|arg| self.iso(self.b, arg))
    }

    /// `x` becomes `x.m(...)`.
    fn add_method_call(&self) -> bool {
        if self.la() != "call" {
            return false;
        }
        let f = self.at.children(self.a)[0];
        self.at.label(f) == "attribute" && self.iso(self.b, self.at.children(f)[0])
    }

    /// `x` becomes `x.attr`.
    fn add_attribute_access(&self) -> bool {
        self.la() == "attribute" && self.iso(self.b, self.at.children(self.a)[0])
    }

    fn change_attribute_used(&self) -> bool {
        self.both_identifiers()
            && is_child_of(self.bt, self.b, "attribute", -1).is_some()
            && is_child_of(self.at, self.a, "attribute", -1).is_some()
    }

    /// Whether `n` sits in the condition of an `if`/`elif`, reached only
    /// through boolean operators and parentheses.
    fn in_if_condition(t: &SyntaxTree, mut n: NodeId) -> bool {
        loop {
            let Some(p) = t.parent(n) else { return false };
            match t.label(p) {
                "if_statement" | "elif_clause" => return t.child_index(n) == Some(0),
                "boolean_operator" | "parenthesized_expression" => n = p,
                _ => return false,
            }
        }
    }

    /// `outer` is a boolean operation with operator `op` and an operand
    /// isomorphic to `inner` (in the other tree).
    fn wraps(&self, outer_in_after: bool, op: &str) -> bool {
        let (ot, o, it, i) = if outer_in_after {
            (self.at, self.a, self.bt, self.b)
        } else {
            (self.bt, self.b, self.at, self.a)
        };
        if ot.label(o) != "boolean_operator" {
            return false;
        }
        let kids = ot.children(o);
        let op_ok = kids
            .iter()
            .any(|&k| ot.label(k) == OPERATOR_LABEL && ot.value(k) == Some(op));
        op_ok
            && kids
                .iter()
                .filter(|&&k| ot.label(k) != OPERATOR_LABEL)
                .any(|&k| isomorphic(ot, k, it, i))
    }

    fn if_context(&self) -> bool {
        Site::in_if_condition(self.bt, self.b) && Site::in_if_condition(self.at, self.a)
    }

    fn more_specific_if(&self) -> bool {
        self.if_context() && (self.wraps(true, "and") || self.wraps(false, "or"))
    }

    fn less_specific_if(&self) -> bool {
        self.if_context() && (self.wraps(true, "or") || self.wraps(false, "and"))
    }

    fn change_unary_operator(&self) -> bool {
        let unary = |l: &str| l == "unary_operator" || l == "not_operator";
        if self.lb() == OPERATOR_LABEL
            && self.la() == OPERATOR_LABEL
            && parent_label(self.bt, self.b) == "unary_operator"
            && parent_label(self.at, self.a) == "unary_operator"
        {
            return true;
        }
        let operand_of = |t: &SyntaxTree, n: NodeId| *t.children(n).last().unwrap();
        (unary(self.la()) && !unary(self.lb()) && self.iso(self.b, operand_of(self.at, self.a)))
            || (unary(self.lb()) && !unary(self.la()) && self.iso(operand_of(self.bt, self.b), self.a))
    }

    fn change_binary_operator(&self) -> bool {
        let ok = |t: &SyntaxTree, n| {
            t.label(n) == OPERATOR_LABEL
                && (OPERATOR_EXPRS.contains(&parent_label(t, n))
                    || parent_label(t, n) == "augmented_assignment")
        };
        ok(self.bt, self.b) && ok(self.at, self.a)
    }

    fn change_binary_operand(&self) -> bool {
        let ok = |t: &SyntaxTree, n| {
            t.label(n) != OPERATOR_LABEL && OPERATOR_EXPRS.contains(&parent_label(t, n))
        };
        ok(self.bt, self.b) && ok(self.at, self.a)
    }

    fn change_boolean_literal(&self) -> bool {
        let b = |l: &str| l == "true" || l == "false";
        b(self.lb()) && b(self.la()) && self.lb() != self.la()
    }

    fn change_numeric_literal(&self) -> bool {
        literal_class(self.lb()) == Some("number") && literal_class(self.la()) == Some("number")
    }

    fn change_constant_type(&self) -> bool {
        matches!(
            (literal_class(self.lb()), literal_class(self.la())),
            (Some(x), Some(y)) if x != y
        )
    }

    fn add_elements_to_iterable(&self) -> bool {
        if self.lb() != self.la() || !ITERABLES.contains(&self.lb()) {
            return false;
        }
        let (xb, xa) = (self.bt.children(self.b), self.at.children(self.a));
        if xa.len() <= xb.len() {
            return false;
        }
        // before's elements must survive in order
        let mut it = xa.iter();
        xb.iter().all(|&x| it.any(|&y| self.iso(x, y)))
    }

    fn change_identifier_used(&self) -> bool {
        let ok = |l: &str| l == "identifier" || l == "attribute";
        ok(self.lb()) && ok(self.la()) && (self.lb() == "identifier" || self.la() == "identifier")
    }

    fn holds(&self, label: SstubLabel) -> bool {
        match label {
            SameFunctionSwapArgs => self.swap_args(),
            SameFunctionWrongCaller => self.wrong_caller(),
            WrongFunctionName => self.wrong_function_name(),
            SameFunctionMoreArgs => self.more_args(),
            SameFunctionLessArgs => self.less_args(),
            ChangeKeywordArgumentUsed => self.change_keyword_argument(),
            AddFunctionAroundExpression => self.add_function_around(),
            AddMethodCall => self.add_method_call(),
            AddAttributeAccess => self.add_attribute_access(),
            ChangeAttributeUsed => self.change_attribute_used(),
            MoreSpecificIf => self.more_specific_if(),
            LessSpecificIf => self.less_specific_if(),
            ChangeUnaryOperator => self.change_unary_operator(),
            ChangeBinaryOperator => self.change_binary_operator(),
            ChangeBinaryOperand => self.change_binary_operand(),
            ChangeBooleanLiteral => self.change_boolean_literal(),
            ChangeNumericLiteral => self.change_numeric_literal(),
            ChangeConstantType => self.change_constant_type(),
            AddElementsToIterable => self.add_elements_to_iterable(),
            ChangeIdentifierUsed => self.change_identifier_used(),
            NoSstubSingleToken | NoSstubSingleStatement => false,
        }
    }
}

/// Every pattern whose predicate holds, in precedence order.
pub fn matching_patterns(before: &SyntaxTree, after: &SyntaxTree) -> Vec<SstubLabel> {
    let Some(d) = locate_divergence(before, after) else {
        return Vec::new();
    };
    let site = Site {
        bt: before,
        at: after,
        b: d.node_before,
        a: d.node_after,
    };
    PRECEDENCE.into_iter().filter(|&l| site.holds(l)).collect()
}

/// Whether two code snippets differ in exactly one token position.
pub fn single_token_change(before: &str, after: &str) -> bool {
    let (tb, ta) = (tokenize(before), tokenize(after));
    let (nb, na) = (tb.normalized(), ta.normalized());
    nb.len() == na.len() && nb.iter().zip(&na).filter(|(x, y)| x != y).count() == 1
}

/// Label for a statement pair. `script` is the edit script between the two
/// statements; an empty script means nothing structural changed and goes
/// straight to the fallbacks.
pub fn classify(before: &SyntaxTree, after: &SyntaxTree, script: &EditScript) -> SstubLabel {
    if !script.is_empty() {
        if let Some(&l) = matching_patterns(before, after).first() {
            return l;
        }
    }
    if single_token_change(before.text(), after.text()) {
        NoSstubSingleToken
    } else {
        NoSstubSingleStatement
    }
}

/// Parses two single statements and classifies them. `None` when the pair is
/// not a single-statement change.
pub fn classify_source(before: &str, after: &str) -> Option<SstubLabel> {
    use crate::astcore::{parse_fragment, select_statement};
    let pair = select_statement(&parse_fragment(before), &parse_fragment(after)).ok()?;
    let script = crate::editscript::diff_trees(&pair.before, &pair.after);
    Some(classify(&pair.before, &pair.after, &script))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(a: &str, b: &str) -> SstubLabel {
        classify_source(a, b).unwrap_or_else(|| panic!("{a:?} -> {b:?} not a statement change"))
    }

    #[test]
    fn serde_names() {
        for l in SstubLabel::ALL {
            let json = serde_json::to_string(&l).unwrap();
            assert_eq!(json, format!("\"{}\"", l.as_str()));
            assert_eq!(l.as_str().parse::<SstubLabel>().unwrap(), l);
        }
    }

    #[test]
    fn ranks() {
        assert!(specificity_rank(WrongFunctionName) < specificity_rank(ChangeIdentifierUsed));
        assert!(specificity_rank(SameFunctionSwapArgs) < specificity_rank(SameFunctionMoreArgs));
        assert_eq!(specificity_rank(ChangeBinaryOperand), specificity_rank(ChangeBinaryOperand));
        let mut sorted = PATTERNS;
        sorted.sort_by_key(|&l| specificity_rank(l));
        assert_eq!(sorted, PRECEDENCE);
    }

    #[test]
    fn argument_and_attribute_shapes() {
        assert_eq!(c("f()", "f(x)"), SameFunctionMoreArgs);
        assert_eq!(c("f(x)", "f(x, y)"), SameFunctionMoreArgs);
        assert_eq!(c("self._x", "self.a"), ChangeAttributeUsed);
        assert_eq!(c("return compute(a, b)", "return compute(b, a)"), SameFunctionSwapArgs);
    }

    #[test]
    fn fallbacks() {
        assert_eq!(c("x = 'a'", "x = 'b'"), NoSstubSingleToken);
        assert_eq!(c("x = y if a else b", "x = y if c else d"), NoSstubSingleStatement);
        assert!(single_token_change("f(a)", "f(b)"));
        assert!(!single_token_change("f(a)", "f(a, b)"));
    }
}
