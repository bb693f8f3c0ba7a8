//! Plain-text forest format, one node per line in pre-order:
//!
//! ```text
//! lczfuse-ccf 1
//! seed 7
//! features 2
//! feature mean_B2
//! feature ndvi_mean
//! trees 1
//! tree 3
//! split features=0,1 weights=0.6,-0.8 threshold=0.25 left=1 right=2
//! leaf counts=0,4,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0
//! leaf counts=0,0,0,0,0,0,0,0,3,0,0,0,0,0,0,0,0
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a model reads
//! back bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lczfuse_core::ccf::{CcfModel, Node, Tree};
use lczfuse_core::NUM_LABELS;

use crate::error::{CliError, Result};

const MAGIC: &str = "lczfuse-ccf";
const VERSION: u32 = 1;

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn model_to_string(model: &CcfModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "seed {}", model.seed);
    let _ = writeln!(s, "features {}", model.feature_names.len());
    for name in &model.feature_names {
        let _ = writeln!(s, "feature {name}");
    }
    let _ = writeln!(s, "trees {}", model.trees.len());
    for tree in &model.trees {
        let _ = writeln!(s, "tree {}", tree.nodes().len());
        for node in tree.nodes() {
            match node {
                Node::Split { features, weights, threshold, left, right } => {
                    let _ = writeln!(
                        s,
                        "split features={} weights={} threshold={threshold} left={left} right={right}",
                        join(features),
                        join(weights)
                    );
                }
                Node::Leaf { counts } => {
                    let _ = writeln!(s, "leaf counts={}", join(counts));
                }
            }
        }
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::data(self.path, format!("line {}: {msg}", self.line))
    }

    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((n, l)) => {
                self.line = n + 1;
                Ok(l)
            }
            None => Err(CliError::data(self.path, "unexpected end of model file")),
        }
    }

    /// Next line, which must read `<key> <value>`.
    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| self.err(format!("expected '{key}'")))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        v.trim().parse().map_err(|_| self.err(format!("bad {key}")))
    }
}

fn fields<'a>(rest: &'a str, lines: &Lines<'_>) -> Result<Vec<(&'a str, &'a str)>> {
    rest.split_whitespace().map(|f| f.split_once('=').ok_or_else(|| lines.err(format!("bad field '{f}'")))).collect()
}

fn list<T: std::str::FromStr>(v: &str, lines: &Lines<'_>) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| x.parse().map_err(|_| lines.err(format!("bad number '{x}'")))).collect()
}

fn parse_node(line: &str, lines: &Lines<'_>) -> Result<Node> {
    if let Some(rest) = line.strip_prefix("leaf ") {
        let f = fields(rest, lines)?;
        let [("counts", c)] = f.as_slice() else { return Err(lines.err("leaf needs counts=")) };
        let counts: Vec<u32> = list(c, lines)?;
        let counts: [u32; NUM_LABELS] = counts.try_into().map_err(|_| lines.err(format!("leaf needs {NUM_LABELS} counts")))?;
        return Ok(Node::Leaf { counts });
    }
    if let Some(rest) = line.strip_prefix("split ") {
        let f = fields(rest, lines)?;
        let [("features", fs), ("weights", ws), ("threshold", t), ("left", l), ("right", r)] = f.as_slice() else {
            return Err(lines.err("split needs features, weights, threshold, left, right"));
        };
        let bad = |what: &str| lines.err(format!("bad {what}"));
        return Ok(Node::Split {
            features: list(fs, lines)?,
            weights: list(ws, lines)?,
            threshold: t.parse().map_err(|_| bad("threshold"))?,
            left: l.parse().map_err(|_| bad("left"))?,
            right: r.parse().map_err(|_| bad("right"))?,
        });
    }
    Err(lines.err("expected 'split' or 'leaf'"))
}

pub fn model_from_str(text: &str, path: &Path) -> Result<CcfModel> {
    let mut lines = Lines { inner: text.lines().enumerate(), path, line: 0 };
    let magic = lines.keyed(MAGIC)?;
    if magic.trim() != VERSION.to_string() {
        return Err(lines.err(format!("unsupported model version {magic}")));
    }
    let seed: u64 = lines.number("seed")?;
    let n_features: usize = lines.number("features")?;
    let mut names = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        names.push(lines.keyed("feature")?.to_string());
    }
    let n_trees: usize = lines.number("trees")?;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes: usize = lines.number("tree")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let l = lines.next()?;
            nodes.push(parse_node(l, &lines)?);
        }
        trees.push(Tree::from_nodes(nodes).map_err(|e| lines.err(e))?);
    }
    CcfModel::from_parts(names, trees, seed).map_err(|e| CliError::data(path, e.to_string()))
}

pub fn write_model(path: &Path, model: &CcfModel) -> Result<()> {
    fs::write(path, model_to_string(model)).map_err(|e| CliError::io(path, e))
}

pub fn read_model(path: &Path) -> Result<CcfModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    model_from_str(&text, path)
}
