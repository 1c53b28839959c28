//! Python bindings. Built as the `stmtbugs` extension module.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeSet;
use std::path::PathBuf;

use stmtbugs::analysis;
use stmtbugs::astcore::{self, NodeId};
use stmtbugs::diffcore;
use stmtbugs::editscript::{self, AbstractOpType};
use stmtbugs::pipeline;
use stmtbugs::pytok;
use stmtbugs::record;
use stmtbugs::sstub::{self, SstubLabel};

/// Parsed Python fragment. Node 0 is the root; ids are preorder positions.
#[pyclass(name = "SyntaxTree", module = "stmtbugs", frozen)]
#[derive(Clone)]
struct PySyntaxTree {
    inner: astcore::SyntaxTree,
}

#[pymethods]
impl PySyntaxTree {
    #[staticmethod]
    fn parse(code: &str) -> Self {
        PySyntaxTree { inner: astcore::parse_fragment(code) }
    }

    #[staticmethod]
    fn from_sexp(s: &str) -> PyResult<Self> {
        astcore::from_sexp(s)
            .map(|inner| PySyntaxTree { inner })
            .ok_or_else(|| PyValueError::new_err("malformed s-expression"))
    }

    fn sexp(&self) -> String {
        self.inner.to_sexp()
    }

    fn label(&self, node: NodeId) -> PyResult<String> {
        self.check(node)?;
        Ok(self.inner.label(node).to_string())
    }

    fn value(&self, node: NodeId) -> PyResult<Option<String>> {
        self.check(node)?;
        Ok(self.inner.value(node).map(str::to_string))
    }

    fn children(&self, node: NodeId) -> PyResult<Vec<NodeId>> {
        self.check(node)?;
        Ok(self.inner.children(node).to_vec())
    }

    fn has_error(&self) -> bool {
        !self.inner.is_empty() && self.inner.contains_label(self.inner.root(), astcore::ERROR_LABEL)
    }

    fn isomorphic(&self, other: &PySyntaxTree) -> bool {
        astcore::trees_isomorphic(&self.inner, &other.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("SyntaxTree({})", self.inner.to_sexp())
    }
}

impl PySyntaxTree {
    fn check(&self, node: NodeId) -> PyResult<()> {
        if node < self.inner.len() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("node {node} out of range")))
        }
    }
}

#[pyclass(name = "EditScript", module = "stmtbugs", frozen)]
struct PyEditScript {
    inner: editscript::EditScript,
}

#[pymethods]
impl PyEditScript {
    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Operations as dicts with keys kind, node, parent, pos, value.
    fn ops<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .ops
            .iter()
            .map(|op| {
                let d = PyDict::new_bound(py);
                d.set_item("kind", op.kind.as_str())?;
                d.set_item("node", &op.node_label)?;
                d.set_item("parent", &op.parent_label)?;
                d.set_item("pos", op.position)?;
                d.set_item("value", &op.value)?;
                Ok(d)
            })
            .collect()
    }

    /// Sorted abstract operation types, e.g. "Update(identifier)".
    fn abstract_types(&self) -> Vec<String> {
        editscript::abstract_ops(&self.inner).iter().map(AbstractOpType::to_string).collect()
    }

    /// Applies the script to `before`; raises ValueError if it does not fit.
    fn apply(&self, before: &PySyntaxTree) -> PyResult<PySyntaxTree> {
        editscript::apply_script(&before.inner, &self.inner)
            .map(|inner| PySyntaxTree { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("EditScript({})", self.inner.to_json())
    }
}

#[pyfunction]
fn tokenize(source: &str) -> Vec<(&'static str, String)> {
    pytok::tokenize(source)
        .tokens
        .into_iter()
        .map(|t| (t.kind.as_str(), t.text))
        .collect()
}

#[pyfunction]
fn token_eq(a: &str, b: &str) -> bool {
    pytok::token_eq(&pytok::tokenize(a), &pytok::tokenize(b))
}

/// Token-aware line diff. Returns a dict with removed/added as
/// (line_no, text) lists, the unified text, and the single changed line
/// pair if there is one.
#[pyfunction]
#[pyo3(signature = (before, after, path = "file.py"))]
fn diff<'py>(py: Python<'py>, before: &str, after: &str, path: &str) -> PyResult<Bound<'py, PyDict>> {
    let d = diffcore::diff_text(path, before, after);
    let lines = |v: &[diffcore::NumberedLine]| -> Vec<(usize, String)> {
        v.iter().map(|l| (l.line_no, l.text.clone())).collect()
    };
    let out = PyDict::new_bound(py);
    out.set_item("removed", lines(&d.removed))?;
    out.set_item("added", lines(&d.added))?;
    out.set_item("unified", &d.unified)?;
    let single = diffcore::single_line_edit(&d).map(|p| {
        (
            (p.before_line.line_no, p.before_line.text),
            (p.after_line.line_no, p.after_line.text),
        )
    });
    out.set_item("single_line_edit", single)?;
    Ok(out)
}

/// Preorder paths (child indices from the root) of the first diverging
/// nodes, or None for isomorphic trees.
#[pyfunction]
fn locate_divergence(before: &PySyntaxTree, after: &PySyntaxTree) -> Option<(Vec<usize>, Vec<usize>)> {
    astcore::locate_divergence(&before.inner, &after.inner).map(|d| (d.path_before, d.path_after))
}

/// The changed statement pair; raises ValueError naming the rejection.
#[pyfunction]
fn select_statement(before: &str, after: &str) -> PyResult<(PySyntaxTree, PySyntaxTree)> {
    astcore::select_statement(&astcore::parse_fragment(before), &astcore::parse_fragment(after))
        .map(|p| (PySyntaxTree { inner: p.before }, PySyntaxTree { inner: p.after }))
        .map_err(|r| PyValueError::new_err(r.as_str()))
}

#[pyfunction]
fn edit_script(before: &PySyntaxTree, after: &PySyntaxTree) -> PyEditScript {
    PyEditScript { inner: editscript::diff_trees(&before.inner, &after.inner) }
}

/// Pattern name for a before/after statement, or None if no single
/// statement change is found.
#[pyfunction]
fn classify(before: &str, after: &str) -> Option<&'static str> {
    sstub::classify_source(before, after).map(SstubLabel::as_str)
}

#[pyfunction]
fn pattern_names() -> Vec<&'static str> {
    SstubLabel::ALL.iter().map(|l| l.as_str()).collect()
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    analysis::spearman(&x, &y).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn jaccard_distance(a: BTreeSet<String>, b: BTreeSet<String>) -> f64 {
    analysis::jaccard_distance(&a, &b)
}

#[pyfunction]
fn damerau_levenshtein(a: &str, b: &str) -> usize {
    analysis::damerau_levenshtein(a, b)
}

#[pyfunction]
fn is_typo_fix(before_line: &str, after_line: &str) -> bool {
    analysis::is_typo_fix(before_line, after_line)
}

#[pyfunction]
#[pyo3(signature = (message, keywords = None))]
fn is_bugfix_message(message: &str, keywords: Option<Vec<String>>) -> bool {
    match keywords {
        Some(k) => pipeline::is_bugfix_message(message, &k),
        None => pipeline::is_bugfix_message(message, &pipeline::DEFAULT_KEYWORDS),
    }
}

/// Rows of a jsonlines (optionally .gz) dataset as JSON strings.
#[pyfunction]
fn read_records(path: PathBuf) -> PyResult<Vec<String>> {
    let rows = record::read_records(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
    Ok(rows.iter().map(|r| serde_json::to_string(r).expect("rows serialize")).collect())
}

#[pymodule]
#[pyo3(name = "stmtbugs")]
fn stmtbugs_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("LABELS_VERSION", astcore::label_vocabulary_version())?;
    m.add_class::<PySyntaxTree>()?;
    m.add_class::<PyEditScript>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(token_eq, m)?)?;
    m.add_function(wrap_pyfunction!(diff, m)?)?;
    m.add_function(wrap_pyfunction!(locate_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(select_statement, m)?)?;
    m.add_function(wrap_pyfunction!(edit_script, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(pattern_names, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(jaccard_distance, m)?)?;
    m.add_function(wrap_pyfunction!(damerau_levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(is_typo_fix, m)?)?;
    m.add_function(wrap_pyfunction!(is_bugfix_message, m)?)?;
    m.add_function(wrap_pyfunction!(read_records, m)?)?;
    Ok(())
}
