"""Smoke test for the stmtbugs extension module.

Build and install first:  pip install maturin && maturin develop -m crates/py/Cargo.toml
"""

import json

import stmtbugs


def main():
    toks = stmtbugs.tokenize("x = foo(a)  # note")
    assert toks == [("NAME", "x"), ("OPERATOR", "="), ("NAME", "foo"),
                    ("DELIMITER", "("), ("NAME", "a"), ("DELIMITER", ")")], toks
    assert stmtbugs.token_eq("f(a,b)", "f( a , b )")

    d = stmtbugs.diff("a = 1\nb = 2\n", "a = 1\nb = 3\n")
    assert d["single_line_edit"] == ((2, "b = 2"), (2, "b = 3")), d

    before, after = stmtbugs.select_statement("x = foo(a)", "x = foo(b)")
    assert before.label(0) == "expression_statement"
    assert stmtbugs.locate_divergence(before, after) is not None

    script = stmtbugs.edit_script(before, after)
    ops = json.loads(script.to_json())
    assert [o["kind"] for o in ops] == ["UPDATE"], ops
    assert script.abstract_types() == ["Update(identifier)"]
    assert script.apply(before).isomorphic(after)

    assert stmtbugs.classify("f(x)", "f(x, y)") == "same_function_more_args"
    assert stmtbugs.classify("x = 1", "x = 1") is None
    try:
        stmtbugs.select_statement("x = 1", "x = 1")
    except ValueError as e:
        assert str(e) == "no_divergence"
    else:
        raise AssertionError("expected ValueError")

    tssb = [237, 174, 150, 134, 117, 104, 97, 68, 60, 57, 50, 37, 32, 29, 25, 22, 20, 15, 8, 6]
    ssb = [659, 349, 457, 397, 244, 285, 275, 121, 118, 175, 169, 82, 74, 71, 46, 45, 59, 23, 77, 12]
    assert abs(stmtbugs.spearman(tssb, ssb) - 0.9428571428571428) < 1e-12

    assert stmtbugs.jaccard_distance({"a", "b"}, {"b", "c"}) == 1 - 1 / 3
    assert stmtbugs.damerau_levenshtein("recieve", "receive") == 1
    assert stmtbugs.is_typo_fix("self.vaule = 1", "self.value = 1")
    assert not stmtbugs.is_typo_fix("y = ab", "y = xy")
    assert stmtbugs.is_bugfix_message("Fix crash on empty input")
    assert not stmtbugs.is_bugfix_message("Refactor", ["cleanup"])
    assert len(stmtbugs.pattern_names()) == 22
    print("stmtbugs", stmtbugs.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
