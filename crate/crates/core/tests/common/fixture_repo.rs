// Deterministic git history covering each commit filter of the miner.

use git2::{Oid, Repository, Signature, Time};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

const A0: &str = "import os


def check(x):
    if x > 0:
        return True
    return False


def total(items):
    n = 0
    for i in range(len(items) - 1):
        n += items[i]
    return n


def load(path):
    with open(path) as fh:
        data = fh.read()
    a = 1; b = 2
    return data
";

const B0: &str = "class Client:
    def __init__(self, conn):
        self.conn = conn
        self.sock = conn

    def send(self, msg):
        self.conn.send(msg)
        return len(msg)

    def compute(self, xs):
        resutl = sum(xs)
        return resutl

    def report(self):
        log('recieved')
        return True
";

const C0: &str = "def helper(values):
    return sum(values)


def run(values):
    result = helper(values)
    value = compute(1, 2)
    return result
";

pub struct Fixture {
    pub origin: PathBuf,
    pub fork: PathBuf,
    pub repo_list: PathBuf,
    /// Commit name (c1, c2, ...) to sha.
    pub shas: BTreeMap<&'static str, String>,
}

impl Fixture {
    pub fn sha(&self, name: &str) -> &str {
        &self.shas[name]
    }
}

struct Builder {
    repo: Repository,
    tick: i64,
}

impl Builder {
    fn sig(&mut self) -> Signature<'static> {
        self.tick += 60;
        Signature::new("Fixture", "fixture@example.com", &Time::new(1_600_000_000 + self.tick, 0)).unwrap()
    }

    fn write(&self, path: &str, body: &str) {
        std::fs::write(self.repo.workdir().unwrap().join(path), body).unwrap();
    }

    fn edit(&self, path: &str, from: &str, to: &str) {
        let p = self.repo.workdir().unwrap().join(path);
        let s = std::fs::read_to_string(&p).unwrap();
        assert_eq!(s.matches(from).count(), 1, "{from:?} in {path}");
        std::fs::write(&p, s.replacen(from, to, 1)).unwrap();
    }

    fn commit_with(&mut self, msg: &str, parents: &[Oid], update_head: bool) -> Oid {
        let sig = self.sig();
        let mut idx = self.repo.index().unwrap();
        idx.add_all(["*"], git2::IndexAddOption::DEFAULT, None).unwrap();
        idx.write().unwrap();
        let tree = self.repo.find_tree(idx.write_tree().unwrap()).unwrap();
        let parents: Vec<_> = parents.iter().map(|o| self.repo.find_commit(*o).unwrap()).collect();
        let refs: Vec<_> = parents.iter().collect();
        let head = if update_head { Some("HEAD") } else { None };
        self.repo.commit(head, &sig, &sig, msg, &tree, &refs).unwrap()
    }

    fn commit(&mut self, msg: &str) -> Oid {
        let parents: Vec<Oid> = self.repo.head().ok().and_then(|h| h.target()).into_iter().collect();
        self.commit_with(msg, &parents, true)
    }
}

/// Builds origin and fork under `dir` and writes `repos.txt` listing both.
///
/// Expected mining result: ssc 8, ssb 7, tssb 5. c11 and c12 are the
/// spelling fixes; c9 and the b.py half of c2 are not typos.
pub fn build(dir: &Path) -> Fixture {
    let origin = dir.join("origin");
    let repo = Repository::init(&origin).unwrap();
    let mut b = Builder { repo, tick: 0 };
    let mut shas = BTreeMap::new();

    b.write("a.py", A0);
    b.write("b.py", B0);
    b.write("c.py", C0);
    shas.insert("c0", b.commit("Initial import"));

    b.edit("a.py", "if x > 0:", "if x >= 0:");
    shas.insert("c1", b.commit("Fix wrong comparison in check"));

    b.edit("a.py", "return False", "return None");
    b.edit("b.py", "return len(msg)", "return len(msg) + 1");
    shas.insert("c2", b.commit("fix two call sites"));

    b.edit("c.py", "result = helper(values)", "result = helper2(values)");
    shas.insert("c3", b.commit("Rename helper call"));

    b.write("d.py", "X = 1\n");
    b.edit("a.py", "import os", "import sys");
    shas.insert("c4", b.commit("fix import and add module"));

    // side branch merged back; only the merge commit is first-parent
    let main = shas["c4"];
    b.edit("b.py", "self.sock = conn", "self.sock = None");
    let side = b.commit_with("fix bug on branch", &[main], false);
    shas.insert("side", side);
    shas.insert("c5", b.commit_with("Merge branch fix", &[main, side], true));

    b.edit("a.py", "n += items[i]", "n  +=  items[ i ]");
    shas.insert("c6", b.commit("fix formatting"));

    b.edit("a.py", "a = 1; b = 2", "a = 0; b = 3");
    shas.insert("c7", b.commit("fix value on compound line"));

    b.edit("c.py", "value = compute(1, 2)", "value = compute(1, 2");
    shas.insert("c8", b.commit("fix call arguments"));

    b.edit("a.py", "range(len(items) - 1)", "range(len(items))");
    shas.insert("c9", b.commit("Fix off-by-one in total"));

    b.edit("b.py", "self.conn.send(msg)", "self.sock.send(msg)");
    shas.insert("c10", b.commit("fix wrong receiver"));

    let fork = dir.join("fork");
    Repository::clone(origin.to_str().unwrap(), &fork).unwrap();

    b.edit("b.py", "return resutl", "return result");
    shas.insert("c11", b.commit("Fix typo in variable name"));

    b.edit("b.py", "log('recieved')", "log('received')");
    shas.insert("c12", b.commit("fix typo in log message"));

    let repo_list = dir.join("repos.txt");
    std::fs::write(
        &repo_list,
        format!("# fixture\n{}\n{}\n", origin.display(), fork.display()),
    )
    .unwrap();
    Fixture {
        origin,
        fork,
        repo_list,
        shas: shas.into_iter().map(|(k, v)| (k, v.to_string())).collect(),
    }
}
