//! Degree-rank trimming regularization and modularity-driven selection of
//! the trimming fractions.
//!
//! Trimming removes fixed low- and high-degree fractions of the non-seed
//! vertices. The written form of the trimming rule ranks by descending
//! degree, which makes the `low` fraction cut the top of the ranking; the
//! surrounding usage treats `low` as cutting low-degree vertices and `high`
//! as cutting high-degree ones. Both readings are implemented; the prose
//! reading is the default because every experiment depends on it.

use rand::Rng;

use crate::embedding::{ase, scree, select_dim};
use crate::error::{Error, Result};
use crate::gmm::{fit_gmm, GmmConfig};
use crate::graph::Graph;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrimSemantics {
    /// `low` trims the lowest-degree fraction, `high` the highest.
    #[default]
    Prose,
    /// Ranks descend by degree, so `low` trims the highest-degree fraction.
    Literal,
}

#[derive(Debug, Clone)]
pub struct TrimConfig {
    pub low: f64,
    pub high: f64,
    /// Never-trimmed vertices (the seed set).
    pub protect: Vec<String>,
    pub semantics: TrimSemantics,
}

impl TrimConfig {
    pub fn new(low: f64, high: f64) -> Result<TrimConfig> {
        if !(0.0..1.0).contains(&low) || !(0.0..1.0).contains(&high) || low + high >= 1.0 {
            return Err(Error::InvalidParam(format!(
                "trim fractions ({low}, {high}) must lie in [0,1) with sum below 1"
            )));
        }
        Ok(TrimConfig {
            low,
            high,
            protect: Vec::new(),
            semantics: TrimSemantics::Prose,
        })
    }

    pub fn protecting(mut self, protect: Vec<String>) -> TrimConfig {
        self.protect = protect;
        self
    }

    pub fn with_semantics(mut self, semantics: TrimSemantics) -> TrimConfig {
        self.semantics = semantics;
        self
    }
}

/// Remove the configured degree-rank fractions of the non-protected
/// vertices and return the induced subgraph on the survivors.
///
/// Non-seed vertices are ranked by degree with ties averaged over ranks; a
/// vertex is kept when its rank ratio lies in `(low, 1 - high]`.
pub fn trim(g: &Graph, cfg: &TrimConfig) -> Result<Graph> {
    if cfg.low + cfg.high >= 1.0 {
        return Err(Error::InvalidParam("trim fractions sum to 1 or more".into()));
    }
    let protected: std::collections::BTreeSet<&str> =
        cfg.protect.iter().map(|s| s.as_str()).collect();
    for p in &protected {
        if g.index_of(p).is_none() {
            return Err(Error::UnknownVertex((*p).to_string()));
        }
    }
    let others: Vec<usize> = (0..g.n())
        .filter(|&v| !protected.contains(g.name(v)))
        .collect();
    let ranks = average_ranks(g, &others, cfg.semantics);
    let count = others.len() as f64;
    let mut keep: Vec<String> = Vec::new();
    for v in 0..g.n() {
        let name = g.name(v).to_string();
        if protected.contains(name.as_str()) {
            keep.push(name);
            continue;
        }
        let pos = others.iter().position(|&o| o == v).unwrap();
        let ratio = ranks[pos] / count;
        if cfg.low < ratio && ratio <= 1.0 - cfg.high {
            keep.push(name);
        }
    }
    g.induced_subgraph(&keep)
}

/// Average ranks (1-based) of the given vertices by degree; `Prose` ranks
/// ascending so rank 1 is the smallest degree, `Literal` ranks descending.
fn average_ranks(g: &Graph, vertices: &[usize], semantics: TrimSemantics) -> Vec<f64> {
    let n = vertices.len();
    let mut order: Vec<usize> = (0..n).collect();
    let deg = |i: usize| g.degree(vertices[i]);
    order.sort_by(|&a, &b| match semantics {
        TrimSemantics::Prose => deg(a).total_cmp(&deg(b)),
        TrimSemantics::Literal => deg(b).total_cmp(&deg(a)),
    });
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && deg(order[j + 1]) == deg(order[i]) {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &slot in &order[i..=j] {
            ranks[slot] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Weighted modularity of a vertex clustering: over ordered vertex pairs
/// (diagonal included),
/// `Q = (1 / 2W) * sum_ij [A_ij - d_i d_j / 2W] * [same cluster]`
/// with `2W` the total degree. Requires a nonempty edge set.
pub fn modularity(g: &Graph, clustering: &[usize]) -> Result<f64> {
    if clustering.len() != g.n() {
        return Err(Error::InvalidParam(format!(
            "clustering labels {} vertices of {}",
            clustering.len(),
            g.n()
        )));
    }
    let two_w: f64 = g.degrees().iter().sum();
    if two_w <= 0.0 {
        return Err(Error::InvalidGraph("modularity needs at least one edge".into()));
    }
    let k = clustering.iter().max().map_or(0, |m| m + 1);
    let mut within = vec![0.0; k];
    let mut cluster_degree = vec![0.0; k];
    for v in 0..g.n() {
        cluster_degree[clustering[v]] += g.degree(v);
    }
    for i in 0..g.n() {
        for j in 0..g.n() {
            if i != j && clustering[i] == clustering[j] {
                within[clustering[i]] += g.weight(i, j);
            }
        }
    }
    let mut q = 0.0;
    for c in 0..k {
        q += within[c] - cluster_degree[c] * cluster_degree[c] / two_w;
    }
    Ok(q / two_w)
}

/// One grid point of a trimming sweep.
#[derive(Debug, Clone)]
pub struct GridEntry {
    pub low: f64,
    pub high: f64,
    pub mean_q: f64,
    pub se_q: f64,
    /// False when the trimmed graph was empty or edgeless or no mixture fit
    /// converged for any replicate.
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct ModularityGrid {
    pub entries: Vec<GridEntry>,
    /// Grid point with maximal mean modularity among valid entries; ties go
    /// to the smaller `low + high`, then the smaller `low`.
    pub argmax: (f64, f64),
}

impl ModularityGrid {
    /// CSV rows `l,h,mean_q,se_q,valid`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,h,mean_q,se_q,valid\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.low, e.high, e.mean_q, e.se_q, e.valid
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub grid: Vec<(f64, f64)>,
    pub semantics: TrimSemantics,
    pub gmm: GmmConfig,
    pub dim_override: Option<usize>,
}

/// For every grid point: trim with each seed set protected, embed the
/// trimmed graph, cluster with the mixture, and average the clustering
/// modularity over the seed sets. Grid points leaving no usable graph are
/// marked invalid and excluded from the argmax.
pub fn sweep_trim_params<R: Rng>(
    g: &Graph,
    cfg: &SweepConfig,
    seed_sets: &[Vec<String>],
    rng: &mut R,
) -> Result<ModularityGrid> {
    if cfg.grid.is_empty() {
        return Err(Error::InvalidParam("empty trim grid".into()));
    }
    if seed_sets.is_empty() {
        return Err(Error::InvalidParam("need at least one seed set".into()));
    }
    let fit_seeds: Vec<u64> = (0..cfg.grid.len() * seed_sets.len())
        .map(|_| rng.random())
        .collect();
    let reps = seed_sets.len();
    let cells = par::map_indexed(cfg.grid.len() * reps, |idx| {
        let (gi, rep) = (idx / reps, idx % reps);
        let (low, high) = cfg.grid[gi];
        let trim_cfg = match TrimConfig::new(low, high) {
            Ok(c) => c
                .protecting(seed_sets[rep].clone())
                .with_semantics(cfg.semantics),
            Err(_) => return None,
        };
        let trimmed = trim(g, &trim_cfg).ok()?;
        if trimmed.n() == 0 || trimmed.edge_count() == 0 {
            return None;
        }
        let dim = match cfg.dim_override {
            Some(d) => d.min(trimmed.n()),
            None => select_dim(&scree(&trimmed).ok()?).ok()?,
        };
        let emb = ase(&trimmed, dim).ok()?;
        let mut local = crate::rng::derive(fit_seeds[idx], "sweep-gmm");
        let model = fit_gmm(&emb.points, &cfg.gmm, &mut local).ok()?;
        modularity(&trimmed, &model.assignment).ok()
    });
    let mut entries = Vec::with_capacity(cfg.grid.len());
    for (gi, &(low, high)) in cfg.grid.iter().enumerate() {
        let vals: Vec<f64> = (0..reps).filter_map(|rep| cells[gi * reps + rep]).collect();
        if vals.is_empty() {
            entries.push(GridEntry {
                low,
                high,
                mean_q: f64::NAN,
                se_q: f64::NAN,
                valid: false,
            });
            continue;
        }
        let m = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / m;
        let se = if vals.len() > 1 {
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        } else {
            0.0
        };
        entries.push(GridEntry {
            low,
            high,
            mean_q: mean,
            se_q: se,
            valid: true,
        });
    }
    let argmax = entries
        .iter()
        .filter(|e| e.valid)
        .max_by(|a, b| {
            a.mean_q.total_cmp(&b.mean_q).then_with(|| {
                (b.low + b.high)
                    .total_cmp(&(a.low + a.high))
                    .then_with(|| b.low.total_cmp(&a.low))
            })
        })
        .map(|e| (e.low, e.high))
        .ok_or_else(|| Error::InvalidParam("every grid point was invalid".into()))?;
    Ok(ModularityGrid { entries, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;

    /// Star with leaf weights 1..=10: leaf degrees are 1..=10, hub 55.
    fn weighted_star() -> Graph {
        let edges: Vec<(usize, usize, f64)> =
            (1..=10).map(|i| (11, i, i as f64)).collect();
        Graph::weighted(11, &edges)
    }

    #[test]
    fn trim_zero_fractions_is_identity() {
        let g = weighted_star();
        let cfg = TrimConfig::new(0.0, 0.0).unwrap();
        assert_eq!(trim(&g, &cfg).unwrap(), g);
    }

    #[test]
    fn prose_trims_both_tails() {
        let g = weighted_star();
        let cfg = TrimConfig::new(0.2, 0.2)
            .unwrap()
            .protecting(vec!["11".into()]);
        let t = trim(&g, &cfg).unwrap();
        let mut kept: Vec<&str> = t.names().iter().map(|s| s.as_str()).collect();
        kept.sort();
        // Leaves 1,2 (lowest degree) and 9,10 (highest) trimmed; hub kept.
        assert_eq!(kept, vec!["11", "3", "4", "5", "6", "7", "8"]);
    }

    #[test]
    fn literal_low_trims_high_degrees() {
        let g = weighted_star();
        let cfg = TrimConfig::new(0.2, 0.0)
            .unwrap()
            .protecting(vec!["11".into()])
            .with_semantics(TrimSemantics::Literal);
        let t = trim(&g, &cfg).unwrap();
        assert!(t.index_of("10").is_none() && t.index_of("9").is_none());
        assert!(t.index_of("1").is_some());

        let prose = TrimConfig::new(0.2, 0.0)
            .unwrap()
            .protecting(vec!["11".into()]);
        let t2 = trim(&g, &prose).unwrap();
        assert!(t2.index_of("1").is_none() && t2.index_of("2").is_none());
        assert!(t2.index_of("10").is_some());
    }

    #[test]
    fn equal_degrees_share_average_rank() {
        // 10 vertices in 5 disjoint edges: all degrees equal, average rank
        // ratio 0.55 for everyone, so low = 0.5 keeps them all.
        let g = Graph::unweighted(10, &[(1, 2), (3, 4), (5, 6), (7, 8), (9, 10)]);
        let cfg = TrimConfig::new(0.5, 0.0).unwrap();
        assert_eq!(trim(&g, &cfg).unwrap().n(), 10);
        // At low = 0.55 the shared ratio fails the keep test and all go.
        let cfg = TrimConfig::new(0.55, 0.0).unwrap();
        assert_eq!(trim(&g, &cfg).unwrap().n(), 0);
    }

    #[test]
    fn trim_rejects_bad_fractions() {
        assert!(TrimConfig::new(0.6, 0.4).is_err());
        assert!(TrimConfig::new(1.0, 0.0).is_err());
        assert!(TrimConfig::new(-0.1, 0.0).is_err());
    }

    proptest::proptest! {
        /// Protected vertices always survive and heavier trimming keeps a
        /// subset of lighter trimming's survivors.
        #[test]
        fn trim_containment_and_protection(seed in 0u64..500, l1 in 0.0f64..0.4, h1 in 0.0f64..0.4, dl in 0.0f64..0.3, dh in 0.0f64..0.2) {
            use rand::Rng as _;
            let mut rng = derive(seed, "trim-prop");
            let n = 12;
            let mut edges = Vec::new();
            for i in 1..=n {
                for j in (i + 1)..=n {
                    if rng.random::<f64>() < 0.3 {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::unweighted(n, &edges);
            let protect = vec!["1".to_string(), "5".to_string()];
            let l2 = (l1 + dl).min(0.95 - h1 - dh);
            let h2 = h1 + dh;
            proptest::prop_assume!(l1 + h1 < 1.0 && l2 + h2 < 1.0 && l2 >= l1);
            let t1 = trim(&g, &TrimConfig::new(l1, h1).unwrap().protecting(protect.clone())).unwrap();
            let t2 = trim(&g, &TrimConfig::new(l2, h2).unwrap().protecting(protect.clone())).unwrap();
            for p in &protect {
                proptest::prop_assert!(t1.index_of(p).is_some());
                proptest::prop_assert!(t2.index_of(p).is_some());
            }
            for name in t2.names() {
                proptest::prop_assert!(t1.index_of(name).is_some(), "{} kept under heavier trim only", name);
            }
        }
    }

    #[test]
    fn modularity_single_cluster_is_zero() {
        let g = Graph::unweighted(5, &[(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)]);
        let q = modularity(&g, &[0, 0, 0, 0, 0]).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn modularity_singletons_formula() {
        let g = Graph::unweighted(4, &[(1, 2), (2, 3), (3, 4)]);
        let q = modularity(&g, &[0, 1, 2, 3]).unwrap();
        let two_w = 6.0;
        let expect = -(1.0 + 4.0 + 4.0 + 1.0) / (two_w * two_w);
        assert!((q - expect).abs() < 1e-15);
        assert!(q < 0.0);
    }

    #[test]
    fn modularity_two_triangles_is_half() {
        let g = Graph::unweighted(6, &[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)]);
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn modularity_rejects_edgeless() {
        let g = Graph::empty(3);
        assert!(modularity(&g, &[0, 0, 0]).is_err());
    }

    /// Independent full pair-loop evaluation of the same formula.
    pub(crate) fn modularity_pair_loop(g: &Graph, clustering: &[usize]) -> f64 {
        let two_w: f64 = g.degrees().iter().sum();
        let mut q = 0.0;
        for i in 0..g.n() {
            for j in 0..g.n() {
                if clustering[i] == clustering[j] {
                    q += g.weight(i, j) - g.degree(i) * g.degree(j) / two_w;
                }
            }
        }
        q / two_w
    }

    #[test]
    fn modularity_matches_pair_loop_on_random_graphs() {
        use rand::Rng as _;
        let mut rng = derive(51, "mod-oracle");
        for trial in 0..30 {
            let n = 3 + rng.random_range(0..30);
            let mut edges = Vec::new();
            for i in 1..=n {
                for j in (i + 1)..=n {
                    if rng.random::<f64>() < 0.2 {
                        let w = if trial % 2 == 0 {
                            1.0
                        } else {
                            rng.random::<f64>() * 3.0
                        };
                        edges.push((i, j, w));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let g = Graph::weighted(n, &edges);
            let k = 1 + rng.random_range(0..4);
            let clustering: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let fast = modularity(&g, &clustering).unwrap();
            let slow = modularity_pair_loop(&g, &clustering);
            assert!((fast - slow).abs() < 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn modularity_invariant_under_label_permutation() {
        let g = Graph::unweighted(6, &[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)]);
        let a = modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        let b = modularity(&g, &[3, 3, 3, 0, 0, 0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_single_point_grid() {
        let g = Graph::unweighted(8, &[(1, 2), (2, 3), (3, 4), (5, 6), (6, 7), (7, 8), (1, 5)]);
        let cfg = SweepConfig {
            grid: vec![(0.0, 0.0)],
            semantics: TrimSemantics::Prose,
            gmm: GmmConfig {
                k_max: 2,
                restarts: 2,
                ..GmmConfig::default()
            },
            dim_override: Some(2),
        };
        let mut rng = derive(52, "sweep");
        let grid =
            sweep_trim_params(&g, &cfg, &[vec!["1".to_string()]], &mut rng).unwrap();
        assert_eq!(grid.argmax, (0.0, 0.0));
        assert!(grid.entries[0].valid);
    }

    /// Two planted cliques plus pendant noise: trimming the low-degree tail
    /// lifts the clustering modularity, so the argmax trims a nonzero
    /// fraction.
    #[test]
    fn sweep_prefers_trimming_low_degree_noise() {
        use rand::Rng as _;
        let mut rng = derive(53, "sweep-noise");
        let mut edges = Vec::new();
        for offset in [0, 15] {
            for i in 1..=15 {
                for j in (i + 1)..=15 {
                    edges.push((offset + i, offset + j));
                }
            }
        }
        edges.push((1, 16));
        // Noise vertices 31..=36 straddle the two cliques, one edge into
        // each, so they blur the communities until trimmed away.
        for v in 31..=36 {
            edges.push((v, rng.random_range(1..=15)));
            edges.push((v, rng.random_range(16..=30)));
        }
        let g = Graph::unweighted(36, &edges);
        let cfg = SweepConfig {
            grid: vec![(0.0, 0.0), (0.15, 0.0)],
            semantics: TrimSemantics::Prose,
            gmm: GmmConfig {
                k_min: 2,
                k_max: 2,
                restarts: 3,
                ..GmmConfig::default()
            },
            dim_override: Some(2),
        };
        let seed_sets = vec![vec!["1".to_string(), "20".to_string()]];
        let grid = sweep_trim_params(&g, &cfg, &seed_sets, &mut rng).unwrap();
        assert_eq!(grid.argmax, (0.15, 0.0), "{:?}", grid.entries);
    }

    #[test]
    fn sweep_marks_degenerate_points_invalid() {
        let g = Graph::unweighted(4, &[(1, 2), (3, 4)]);
        let cfg = SweepConfig {
            grid: vec![(0.0, 0.0), (0.0, 0.9)],
            semantics: TrimSemantics::Prose,
            gmm: GmmConfig {
                k_max: 1,
                restarts: 1,
                ..GmmConfig::default()
            },
            dim_override: Some(1),
        };
        let mut rng = derive(54, "sweep-invalid");
        let grid = sweep_trim_params(&g, &cfg, &[vec![]], &mut rng).unwrap();
        // Trimming 90% of four vertices leaves an edgeless remnant.
        assert!(grid.entries[0].valid);
        assert!(!grid.entries[1].valid);
        assert_eq!(grid.argmax, (0.0, 0.0));
    }
}
