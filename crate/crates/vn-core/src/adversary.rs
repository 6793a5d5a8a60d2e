//! Random edge adversary acting on the second graph of a pair.
//!
//! Vertices are selected into an addition set `W+` (each with probability
//! `pi_plus`) and, from the remainder, a deletion set `W-` (probability
//! `pi_minus`), so the two sets are disjoint. Each unordered pair with an
//! endpoint in `W+` whose other endpoint is outside `W-` gets one chance to
//! gain a missing edge (probability `s_plus`); each pair with an endpoint in
//! `W-` whose other endpoint is outside `W+` gets one chance to lose a
//! present edge (probability `s_minus`). Every altered edge is incident to a
//! selected vertex, and the subgraph on unselected vertices is untouched.
//!
//! On a two-block SBM the contaminated graph is again a blockmodel on six
//! strata (block x selection status). [`contaminated_block_matrix`] returns
//! the rate matrix in its published form, whose doubly-selected off-diagonal
//! entries assume two independent modification chances per pair; see
//! [`X5Variant`] for the ambiguous addition entry. [`induced_block_matrix`]
//! returns the exact law of [`contaminate`] as implemented (one chance per
//! unordered pair), which the simulation check validates stratum by stratum.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Adversary parameters: selection probabilities for the addition and
/// deletion sets and per-pair modification probabilities.
#[derive(Debug, Clone, Copy)]
pub struct AdversaryConfig {
    pub pi_plus: f64,
    pub pi_minus: f64,
    pub s_plus: f64,
    pub s_minus: f64,
}

impl AdversaryConfig {
    pub fn new(pi_plus: f64, pi_minus: f64, s_plus: f64, s_minus: f64) -> Result<AdversaryConfig> {
        for (name, v) in [("pi_plus", pi_plus), ("pi_minus", pi_minus)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParam(format!("{name} = {v} outside (0,1)")));
            }
        }
        for (name, v) in [("s_plus", s_plus), ("s_minus", s_minus)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParam(format!("{name} = {v} outside [0,1]")));
            }
        }
        Ok(AdversaryConfig {
            pi_plus,
            pi_minus,
            s_plus,
            s_minus,
        })
    }
}

/// Outcome of one contamination: the modified graph plus the full audit
/// trail of selected vertices and altered edges.
#[derive(Debug, Clone)]
pub struct ContaminationRecord {
    pub graph: Graph,
    pub w_plus: Vec<String>,
    pub w_minus: Vec<String>,
    pub edges_added: Vec<(String, String)>,
    pub edges_deleted: Vec<(String, String)>,
}

impl ContaminationRecord {
    /// One JSON object per replicate for the audit file.
    pub fn audit_json(&self) -> serde_json::Value {
        json!({
            "n": self.graph.n(),
            "edges": self.graph.edge_count(),
            "w_plus": self.w_plus,
            "w_minus": self.w_minus,
            "edges_added": self.edges_added,
            "edges_deleted": self.edges_deleted,
        })
    }
}

/// Apply the adversary to an unweighted graph.
pub fn contaminate<R: Rng>(
    g: &Graph,
    cfg: &AdversaryConfig,
    rng: &mut R,
) -> Result<ContaminationRecord> {
    if !g.is_unweighted() {
        return Err(Error::InvalidGraph(
            "the edge adversary requires an unweighted graph".into(),
        ));
    }
    let n = g.n();
    let mut in_plus = vec![false; n];
    let mut in_minus = vec![false; n];
    for v in 0..n {
        if rng.random::<f64>() < cfg.pi_plus {
            in_plus[v] = true;
        }
    }
    for v in 0..n {
        if !in_plus[v] && rng.random::<f64>() < cfg.pi_minus {
            in_minus[v] = true;
        }
    }
    contaminate_given_sets(g, &in_plus, &in_minus, cfg, rng)
}

/// Apply the edge-modification steps for fixed selection sets.
pub fn contaminate_given_sets<R: Rng>(
    g: &Graph,
    in_plus: &[bool],
    in_minus: &[bool],
    cfg: &AdversaryConfig,
    rng: &mut R,
) -> Result<ContaminationRecord> {
    let n = g.n();
    if in_plus.len() != n || in_minus.len() != n {
        return Err(Error::InvalidParam("selection masks must cover the vertex set".into()));
    }
    if (0..n).any(|v| in_plus[v] && in_minus[v]) {
        return Err(Error::InvalidParam("selection sets must be disjoint".into()));
    }
    let mut adj = g.adjacency().clone();
    let mut added = Vec::new();
    let mut deleted = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let add_eligible =
                (in_plus[i] && !in_minus[j]) || (in_plus[j] && !in_minus[i]);
            let del_eligible =
                (in_minus[i] && !in_plus[j]) || (in_minus[j] && !in_plus[i]);
            // Disjoint selection sets make double eligibility impossible.
            debug_assert!(!(add_eligible && del_eligible));
            if add_eligible && adj[[i, j]] == 0.0 {
                if rng.random::<f64>() < cfg.s_plus {
                    adj[[i, j]] = 1.0;
                    adj[[j, i]] = 1.0;
                    added.push((g.name(i).to_string(), g.name(j).to_string()));
                }
            } else if del_eligible && adj[[i, j]] != 0.0 {
                if rng.random::<f64>() < cfg.s_minus {
                    adj[[i, j]] = 0.0;
                    adj[[j, i]] = 0.0;
                    deleted.push((g.name(i).to_string(), g.name(j).to_string()));
                }
            }
        }
    }
    let graph = Graph::from_adjacency(adj, g.names().to_vec())?;
    let w_plus = (0..n)
        .filter(|&v| in_plus[v])
        .map(|v| g.name(v).to_string())
        .collect();
    let w_minus = (0..n)
        .filter(|&v| in_minus[v])
        .map(|v| g.name(v).to_string())
        .collect();
    Ok(ContaminationRecord {
        graph,
        w_plus,
        w_minus,
        edges_added: added,
        edges_deleted: deleted,
    })
}

/// Which formula fills the doubly-added cross-block entry of the published
/// rate matrix. The printed expression `r + (2s - s)^2 (1 - r)` collapses to
/// `r + s^2 (1 - r)`; the two-chance reading `r + (2s - s^2)(1 - r)` is the
/// complement-product form the matching deletion entry uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum X5Variant {
    #[default]
    Verbatim,
    TwoChance,
}

/// Stratum order used by the 6x6 rate matrices: block-1 untouched, block-1
/// added-set, block-1 deleted-set, then the block-2 triple.
pub fn stratum_index(block: usize, in_plus: bool, in_minus: bool) -> usize {
    debug_assert!(block < 2);
    debug_assert!(!(in_plus && in_minus));
    let offset = if in_plus { 1 } else if in_minus { 2 } else { 0 };
    3 * block + offset
}

pub const STRATUM_LABELS: [&str; 6] = ["b1", "b1+", "b1-", "b2", "b2+", "b2-"];

fn two_block_entries(b: &Array2<f64>) -> Result<(f64, f64, f64)> {
    if b.nrows() != 2 || b.ncols() != 2 || b[[0, 1]] != b[[1, 0]] {
        return Err(Error::InvalidParam("need a symmetric 2x2 block rate matrix".into()));
    }
    Ok((b[[0, 0]], b[[1, 1]], b[[0, 1]]))
}

/// The published 6x6 contaminated block rate matrix for a two-block model.
pub fn contaminated_block_matrix(
    b: &Array2<f64>,
    s_plus: f64,
    s_minus: f64,
    variant: X5Variant,
) -> Result<Array2<f64>> {
    let (p, q, r) = two_block_entries(b)?;
    let x1 = p + s_plus * (1.0 - p);
    let x2 = p * (1.0 - s_minus);
    let x3 = r + s_plus * (1.0 - r);
    let x4 = (1.0 - s_minus) * r;
    let x5 = match variant {
        X5Variant::Verbatim => r + (2.0 * s_plus - s_plus).powi(2) * (1.0 - r),
        X5Variant::TwoChance => r + (2.0 * s_plus - s_plus * s_plus) * (1.0 - r),
    };
    let x6 = r * (1.0 - s_minus) * (1.0 - s_minus);
    let x7 = q + s_plus * (1.0 - q);
    let x8 = q * (1.0 - s_minus);
    let m = ndarray::arr2(&[
        [p, x1, x2, r, x3, x4],
        [x1, x1, p, x3, x5, r],
        [x2, p, x2, x4, r, x6],
        [r, x3, x4, q, x7, x8],
        [x3, x5, r, x7, x7, q],
        [x4, r, x6, x8, q, x8],
    ]);
    Ok(m)
}

/// The exact 6x6 edge-rate law of [`contaminate`]: one modification chance
/// per eligible unordered pair. Differs from the published matrix only in
/// the two doubly-selected cross-block cells.
pub fn induced_block_matrix(b: &Array2<f64>, s_plus: f64, s_minus: f64) -> Result<Array2<f64>> {
    let (_, _, _) = two_block_entries(b)?;
    let mut m = Array2::zeros((6, 6));
    for s in 0..6 {
        for t in 0..6 {
            let (blk_s, mem_s) = (s / 3, s % 3);
            let (blk_t, mem_t) = (t / 3, t % 3);
            let base = b[[blk_s, blk_t]];
            let plus_s = mem_s == 1;
            let minus_s = mem_s == 2;
            let plus_t = mem_t == 1;
            let minus_t = mem_t == 2;
            let add = (plus_s && !minus_t) || (plus_t && !minus_s);
            let del = (minus_s && !plus_t) || (minus_t && !plus_s);
            m[[s, t]] = if add {
                base + s_plus * (1.0 - base)
            } else if del {
                base * (1.0 - s_minus)
            } else {
                base
            };
        }
    }
    Ok(m)
}

/// The two spectral-separation conditions under which the contaminated model
/// defeats a within-block ranking rule: `p - q < s_minus` and
/// `(p - q) / (1 - q) < s_plus`.
pub fn inconsistency_conditions(
    p: f64,
    q: f64,
    s_plus: f64,
    s_minus: f64,
) -> Result<(bool, bool)> {
    for (name, v) in [("p", p), ("q", q), ("s_plus", s_plus), ("s_minus", s_minus)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParam(format!("{name} = {v} outside [0,1]")));
        }
    }
    if q == 1.0 {
        return Err(Error::InvalidParam(
            "second condition undefined for q = 1".into(),
        ));
    }
    Ok((p - q < s_minus, (p - q) / (1.0 - q) < s_plus))
}

/// Empirical per-stratum densities of a contaminated graph given block
/// assignment and the selection sets; returns (edge count, pair count) per
/// unordered stratum pair, indexed `[s][t]` with `s <= t`.
pub fn stratified_densities(
    g: &Graph,
    blocks: &[usize],
    w_plus: &[String],
    w_minus: &[String],
) -> Result<(Array2<f64>, Array2<f64>)> {
    let plus: BTreeSet<&str> = w_plus.iter().map(|s| s.as_str()).collect();
    let minus: BTreeSet<&str> = w_minus.iter().map(|s| s.as_str()).collect();
    let strata: Vec<usize> = (0..g.n())
        .map(|v| {
            let name = g.name(v);
            stratum_index(blocks[v], plus.contains(name), minus.contains(name))
        })
        .collect();
    let mut edges = Array2::zeros((6, 6));
    let mut pairs = Array2::zeros((6, 6));
    for i in 0..g.n() {
        for j in (i + 1)..g.n() {
            let (s, t) = (strata[i].min(strata[j]), strata[i].max(strata[j]));
            pairs[[s, t]] += 1.0;
            if g.has_edge(i, j) {
                edges[[s, t]] += 1.0;
            }
        }
    }
    Ok((edges, pairs))
}
