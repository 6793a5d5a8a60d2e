//! Undirected, loop-free, optionally weighted graphs with stable labels.
//!
//! Vertices are dense indices `0..n` internally; every vertex carries a
//! unique string label ("name"). Labels are the stable currency across
//! relabeling, induced subgraphs, core correspondences and file formats.
//! Graphs are immutable after construction; all mutation happens by
//! constructing new graphs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Graph {
    adj: Array2<f64>,
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Graph {
    /// Graph with `n` vertices named `"1".."n"` and no edges.
    pub fn empty(n: usize) -> Graph {
        let names = (1..=n).map(|i| i.to_string()).collect();
        Graph::from_adjacency(Array2::zeros((n, n)), names).expect("empty graph is valid")
    }

    /// Unweighted graph on vertices named `"1".."n"`; edges given as 1-based
    /// endpoint pairs.
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Graph {
        let weighted: Vec<(usize, usize, f64)> =
            edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Graph::weighted(n, &weighted)
    }

    /// Weighted graph on vertices named `"1".."n"`; edges as 1-based
    /// `(u, v, w)` triples.
    pub fn weighted(n: usize, edges: &[(usize, usize, f64)]) -> Graph {
        let mut adj = Array2::zeros((n, n));
        for &(u, v, w) in edges {
            assert!(u >= 1 && u <= n && v >= 1 && v <= n && u != v, "bad edge ({u},{v})");
            adj[[u - 1, v - 1]] = w;
            adj[[v - 1, u - 1]] = w;
        }
        let names = (1..=n).map(|i| i.to_string()).collect();
        Graph::from_adjacency(adj, names).expect("edge list is valid")
    }

    /// Build from a symmetric adjacency matrix and per-vertex names.
    pub fn from_adjacency(adj: Array2<f64>, names: Vec<String>) -> Result<Graph> {
        let n = names.len();
        if adj.nrows() != n || adj.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "adjacency is {}x{} but {} names given",
                adj.nrows(),
                adj.ncols(),
                n
            )));
        }
        for i in 0..n {
            if adj[[i, i]] != 0.0 {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", names[i])));
            }
            for j in 0..n {
                let w = adj[[i, j]];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight {w} on ({}, {}) is not finite and nonnegative",
                        names[i], names[j]
                    )));
                }
                if adj[[i, j]] != adj[[j, i]] {
                    return Err(Error::InvalidGraph(format!(
                        "adjacency not symmetric at ({}, {})",
                        names[i], names[j]
                    )));
                }
            }
        }
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex name `{name}`")));
            }
        }
        Ok(Graph { adj, names, index })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adj
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[[i, j]]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[[i, j]] != 0.0
    }

    /// True when every weight is 0 or 1.
    pub fn is_unweighted(&self) -> bool {
        self.adj.iter().all(|&w| w == 0.0 || w == 1.0)
    }

    /// Sum of incident edge weights (edge count for unweighted graphs).
    pub fn degree(&self, i: usize) -> f64 {
        self.adj.row(i).sum()
    }

    /// Degree looked up by vertex name.
    pub fn degree_of(&self, name: &str) -> Result<f64> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))?;
        Ok(self.degree(i))
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    /// Number of edges (pairs with nonzero weight).
    pub fn edge_count(&self) -> usize {
        let mut m = 0;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                if self.adj[[i, j]] != 0.0 {
                    m += 1;
                }
            }
        }
        m
    }

    /// Sum of edge weights over unordered pairs.
    pub fn total_weight(&self) -> f64 {
        let mut w = 0.0;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                w += self.adj[[i, j]];
            }
        }
        w
    }

    /// Edges as `(i, j, w)` index triples with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                let w = self.adj[[i, j]];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Induced subgraph on the named vertex set `keep` (order preserved).
    pub fn induced_subgraph<S: AsRef<str>>(&self, keep: &[S]) -> Result<Graph> {
        let mut idx = Vec::with_capacity(keep.len());
        for name in keep {
            let i = self
                .index_of(name.as_ref())
                .ok_or_else(|| Error::UnknownVertex(name.as_ref().to_string()))?;
            idx.push(i);
        }
        let k = idx.len();
        let mut adj = Array2::zeros((k, k));
        for a in 0..k {
            for b in 0..k {
                adj[[a, b]] = self.adj[[idx[a], idx[b]]];
            }
        }
        let names = idx.iter().map(|&i| self.names[i].clone()).collect();
        Graph::from_adjacency(adj, names)
    }

    /// Push labels through an obfuscation. The result is presented in sorted
    /// label order, so nothing about the original vertex order survives.
    pub fn relabel(&self, o: &Obfuscation) -> Result<Graph> {
        let mut new_names = Vec::with_capacity(self.n());
        for name in &self.names {
            let w = o
                .apply(name)
                .ok_or_else(|| Error::BadObfuscation(format!("no image for vertex `{name}`")))?;
            new_names.push(w.to_string());
        }
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| new_names[a].cmp(&new_names[b]));
        let mut adj = Array2::zeros((self.n(), self.n()));
        for a in 0..self.n() {
            for b in 0..self.n() {
                adj[[a, b]] = self.adj[[order[a], order[b]]];
            }
        }
        let names = order.iter().map(|&i| new_names[i].clone()).collect();
        Graph::from_adjacency(adj, names)
    }

    /// Read the plain edge-list format: one `u v [w]` per line, `#` comments,
    /// arbitrary whitespace-separated tokens as vertex names, absent weight
    /// meaning 1. Self-loops and duplicate edges with conflicting weights are
    /// rejected.
    pub fn read_edge_list(path: &Path) -> Result<Graph> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let display = path.display().to_string();
        let mut names: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let intern = |tok: &str, names: &mut Vec<String>, index: &mut BTreeMap<String, usize>| {
            *index.entry(tok.to_string()).or_insert_with(|| {
                names.push(tok.to_string());
                names.len() - 1
            })
        };
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            if toks.len() != 2 && toks.len() != 3 {
                return Err(Error::Parse {
                    path: display.clone(),
                    line: lineno,
                    msg: format!("expected `u v [w]`, got {} tokens", toks.len()),
                });
            }
            let w = if toks.len() == 3 {
                toks[2].parse::<f64>().map_err(|e| Error::Parse {
                    path: display.clone(),
                    line: lineno,
                    msg: format!("bad weight `{}`: {e}", toks[2]),
                })?
            } else {
                1.0
            };
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Parse {
                    path: display.clone(),
                    line: lineno,
                    msg: format!("weight {w} must be finite and nonnegative"),
                });
            }
            if toks[0] == toks[1] {
                return Err(Error::Parse {
                    path: display.clone(),
                    line: lineno,
                    msg: format!("self-loop on `{}`", toks[0]),
                });
            }
            let u = intern(toks[0], &mut names, &mut index);
            let v = intern(toks[1], &mut names, &mut index);
            let key = (u.min(v), u.max(v));
            if let Some(&prev) = edges.get(&key) {
                if prev != w {
                    return Err(Error::Parse {
                        path: display.clone(),
                        line: lineno,
                        msg: format!(
                            "duplicate edge `{} {}` with conflicting weights {prev} and {w}",
                            toks[0], toks[1]
                        ),
                    });
                }
            }
            edges.insert(key, w);
        }
        let n = names.len();
        let mut adj = Array2::zeros((n, n));
        for (&(u, v), &w) in &edges {
            adj[[u, v]] = w;
            adj[[v, u]] = w;
        }
        Graph::from_adjacency(adj, names)
    }

    /// Write the edge-list format read by [`Graph::read_edge_list`].
    pub fn write_edge_list<W: Write>(&self, out: &mut W) -> Result<()> {
        for (i, j, w) in self.edges() {
            if w == 1.0 {
                writeln!(out, "{} {}", self.names[i], self.names[j])?;
            } else {
                writeln!(out, "{} {} {}", self.names[i], self.names[j], w)?;
            }
        }
        Ok(())
    }

    /// Compact description used in audit output.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "n={} m={}", self.n(), self.edge_count());
        s
    }
}

/// Labeled-graph equality: same name set and the same adjacency when
/// vertices are matched by name. Presentation order does not matter.
impl PartialEq for Graph {
    fn eq(&self, other: &Graph) -> bool {
        if self.n() != other.n() {
            return false;
        }
        let mut perm = Vec::with_capacity(self.n());
        for name in &self.names {
            match other.index_of(name) {
                Some(j) => perm.push(j),
                None => return false,
            }
        }
        for i in 0..self.n() {
            for j in 0..self.n() {
                if self.adj[[i, j]] != other.adj[[perm[i], perm[j]]] {
                    return false;
                }
            }
        }
        true
    }
}

impl Eq for Graph {}

/// A bijection from a graph's labels onto an obfuscating label set disjoint
/// from the original labels.
#[derive(Debug, Clone)]
pub struct Obfuscation {
    forward: BTreeMap<String, String>,
    inverse: BTreeMap<String, String>,
}

impl Obfuscation {
    /// Build from explicit `(vertex, obfuscated)` pairs; must be injective and
    /// the obfuscating set must be disjoint from the domain.
    pub fn new<I, S1, S2>(pairs: I) -> Result<Obfuscation>
    where
        I: IntoIterator<Item = (S1, S2)>,
        S1: Into<String>,
        S2: Into<String>,
    {
        let mut forward = BTreeMap::new();
        let mut inverse = BTreeMap::new();
        for (v, w) in pairs {
            let v = v.into();
            let w = w.into();
            if forward.insert(v.clone(), w.clone()).is_some() {
                return Err(Error::BadObfuscation(format!("vertex `{v}` mapped twice")));
            }
            if inverse.insert(w.clone(), v).is_some() {
                return Err(Error::BadObfuscation(format!("label `{w}` used twice")));
            }
        }
        for w in inverse.keys() {
            if forward.contains_key(w) {
                return Err(Error::BadObfuscation(format!(
                    "obfuscating label `{w}` collides with a vertex name"
                )));
            }
        }
        Ok(Obfuscation { forward, inverse })
    }

    /// Random bijection from `names` onto fixed-width tokens
    /// `{prefix}000..`, assigned by a seeded shuffle.
    pub fn fresh<R: rand::Rng>(names: &[String], prefix: &str, rng: &mut R) -> Result<Obfuscation> {
        let n = names.len();
        let width = n.to_string().len().max(2);
        let mut tokens: Vec<String> = (0..n)
            .map(|i| format!("{prefix}{i:0width$}"))
            .collect();
        use rand::seq::SliceRandom;
        tokens.shuffle(rng);
        Obfuscation::new(names.iter().cloned().zip(tokens))
    }

    /// Identity-shaped obfuscation mapping each name onto `prefix + name`.
    pub fn prefixed(names: &[String], prefix: &str) -> Result<Obfuscation> {
        Obfuscation::new(names.iter().map(|v| (v.clone(), format!("{prefix}{v}"))))
    }

    pub fn apply(&self, name: &str) -> Option<&str> {
        self.forward.get(name).map(|s| s.as_str())
    }

    pub fn invert(&self, label: &str) -> Option<&str> {
        self.inverse.get(label).map(|s| s.as_str())
    }

    pub fn domain(&self) -> impl Iterator<Item = &str> {
        self.forward.keys().map(|s| s.as_str())
    }

    pub fn image(&self) -> impl Iterator<Item = &str> {
        self.inverse.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// The inverse bijection. Only valid as a relabeling back onto the
    /// original names.
    pub fn inverted(&self) -> Obfuscation {
        Obfuscation {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }
}
