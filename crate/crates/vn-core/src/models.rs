//! Random-graph generators: stochastic blockmodels, correlated SBM pairs,
//! nominatable pairs with core/junk structure, and the block-attachment
//! construction used by the exact consistency experiments.
//!
//! Generators are pure functions of (parameters, RNG stream); independent
//! replicates run concurrently with distinct derived streams.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

const PRIOR_TOL: f64 = 1e-12;

/// Parameters of a stochastic blockmodel.
#[derive(Debug, Clone)]
pub struct SbmParams {
    pub n: usize,
    /// K x K symmetric block edge-rate matrix with entries in [0, 1].
    pub block_rates: Array2<f64>,
    /// Length-K block prior, nonnegative, summing to 1.
    pub block_priors: Vec<f64>,
}

impl SbmParams {
    pub fn new(n: usize, block_rates: Array2<f64>, block_priors: Vec<f64>) -> Result<SbmParams> {
        let k = block_priors.len();
        if k == 0 || block_rates.nrows() != k || block_rates.ncols() != k {
            return Err(Error::InvalidParam(format!(
                "block rate matrix is {}x{} for {k} priors",
                block_rates.nrows(),
                block_rates.ncols()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let b = block_rates[[i, j]];
                if !(0.0..=1.0).contains(&b) {
                    return Err(Error::InvalidParam(format!("block rate {b} outside [0,1]")));
                }
                if block_rates[[i, j]] != block_rates[[j, i]] {
                    return Err(Error::InvalidParam("block rate matrix not symmetric".into()));
                }
            }
        }
        if block_priors.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidParam("negative block prior".into()));
        }
        let total: f64 = block_priors.iter().sum();
        if (total - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidParam(format!("block priors sum to {total}")));
        }
        Ok(SbmParams {
            n,
            block_rates,
            block_priors,
        })
    }

    /// The two-block model used throughout the contamination experiments.
    pub fn two_block(n: usize, p: f64, q: f64, r: f64) -> Result<SbmParams> {
        let rates = ndarray::arr2(&[[p, r], [r, q]]);
        SbmParams::new(n, rates, vec![0.5, 0.5])
    }

    pub fn k(&self) -> usize {
        self.block_priors.len()
    }
}

fn sample_block_assignment<R: Rng>(params: &SbmParams, rng: &mut R) -> Vec<usize> {
    let cum: Vec<f64> = params
        .block_priors
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    (0..params.n)
        .map(|_| {
            let u: f64 = rng.random();
            cum.iter().position(|&c| u <= c).unwrap_or(params.k() - 1)
        })
        .collect()
}

/// Sample an SBM graph together with its block assignment.
pub fn sample_sbm<R: Rng>(params: &SbmParams, rng: &mut R) -> (Graph, Vec<usize>) {
    let blocks = sample_block_assignment(params, rng);
    let graph = sample_sbm_conditional(params, &blocks, rng);
    (graph, blocks)
}

/// Sample the edges of an SBM given a fixed block assignment.
pub fn sample_sbm_conditional<R: Rng>(params: &SbmParams, blocks: &[usize], rng: &mut R) -> Graph {
    let n = params.n;
    let mut adj = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let rate = params.block_rates[[blocks[i], blocks[j]]];
            if rng.random::<f64>() < rate {
                adj[[i, j]] = 1.0;
                adj[[j, i]] = 1.0;
            }
        }
    }
    let names = (1..=n).map(|v| v.to_string()).collect();
    Graph::from_adjacency(adj, names).expect("sampled adjacency is valid")
}

/// Sample a correlated SBM pair sharing one block assignment.
///
/// The first graph is sampled marginally; the second is sampled edgewise
/// conditionally so that each indicator pair has correlation `rho` while both
/// marginals stay at the block rate: present edges persist with probability
/// `b + rho (1 - b)`, absent edges appear with probability `b (1 - rho)`.
pub fn sample_corr_sbm<R: Rng>(
    rho: f64,
    params: &SbmParams,
    rng: &mut R,
) -> Result<(Graph, Graph, Vec<usize>)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParam(format!("correlation {rho} outside [0,1]")));
    }
    let blocks = sample_block_assignment(params, rng);
    let n = params.n;
    let mut a1 = Array2::zeros((n, n));
    let mut a2 = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let b = params.block_rates[[blocks[i], blocks[j]]];
            let e1 = rng.random::<f64>() < b;
            let p2 = if e1 { b + rho * (1.0 - b) } else { b * (1.0 - rho) };
            let e2 = rng.random::<f64>() < p2;
            if e1 {
                a1[[i, j]] = 1.0;
                a1[[j, i]] = 1.0;
            }
            if e2 {
                a2[[i, j]] = 1.0;
                a2[[j, i]] = 1.0;
            }
        }
    }
    let names: Vec<String> = (1..=n).map(|v| v.to_string()).collect();
    let g1 = Graph::from_adjacency(a1, names.clone()).expect("valid");
    let g2 = Graph::from_adjacency(a2, names).expect("valid");
    Ok((g1, g2, blocks))
}

/// A pair of graphs with shared core vertices, disjoint junk vertices, and a
/// vertex-of-interest set inside the core.
#[derive(Debug, Clone)]
pub struct NominatablePair {
    pub g1: Graph,
    pub g2: Graph,
    /// Core labels in g1 order.
    pub core: Vec<String>,
    pub junk1: Vec<String>,
    pub junk2: Vec<String>,
    /// Vertices of interest, a subset of the core (g1 labels).
    pub voi: Vec<String>,
    /// Core correspondence: g1 label -> g2 label.
    pub correspondence: BTreeMap<String, String>,
}

impl NominatablePair {
    /// The g2 counterpart of a core vertex.
    pub fn counterpart(&self, g1_label: &str) -> Option<&str> {
        self.correspondence.get(g1_label).map(|s| s.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let v1: BTreeSet<&String> = self.g1.names().iter().collect();
        let v2: BTreeSet<&String> = self.g2.names().iter().collect();
        for c in &self.core {
            if !v1.contains(c) {
                return Err(Error::InvalidParam(format!("core vertex `{c}` not in g1")));
            }
            let img = self
                .correspondence
                .get(c)
                .ok_or_else(|| Error::InvalidParam(format!("core vertex `{c}` unmapped")))?;
            if !v2.contains(img) {
                return Err(Error::InvalidParam(format!("core image `{img}` not in g2")));
            }
        }
        let images: BTreeSet<&String> = self.correspondence.values().collect();
        if images.len() != self.correspondence.len() {
            return Err(Error::InvalidParam("correspondence not injective".into()));
        }
        if self.core.len() + self.junk1.len() != self.g1.n()
            || self.core.len() + self.junk2.len() != self.g2.n()
        {
            return Err(Error::InvalidParam("core/junk does not tile the vertex sets".into()));
        }
        let junk1: BTreeSet<&String> = self.junk1.iter().collect();
        let junk2: BTreeSet<&String> = self.junk2.iter().collect();
        if !junk1.is_disjoint(&junk2) {
            return Err(Error::InvalidParam("junk sets overlap".into()));
        }
        let core: BTreeSet<&String> = self.core.iter().collect();
        for v in &self.voi {
            if !core.contains(v) {
                return Err(Error::InvalidParam(format!(
                    "vertex of interest `{v}` is not a core vertex"
                )));
            }
        }
        Ok(())
    }
}

/// How the vertex-of-interest set is chosen when building a pair.
#[derive(Debug, Clone)]
pub enum VoiSpec {
    /// Explicit list of core labels.
    Explicit(Vec<String>),
    /// Uniform sample of the given size from the core.
    Uniform(usize),
    /// Every core vertex in turn (the sweep used by performance curves).
    AllCore,
}

/// Assemble a nominatable pair from two graphs whose shared labels form the
/// core. Junk vertices are the labels private to each graph.
pub fn make_nominatable_pair<R: Rng>(
    g1: &Graph,
    g2: &Graph,
    voi_spec: &VoiSpec,
    rng: &mut R,
) -> Result<NominatablePair> {
    let v2: BTreeSet<&String> = g2.names().iter().collect();
    let mut core = Vec::new();
    let mut junk1 = Vec::new();
    for name in g1.names() {
        if v2.contains(name) {
            core.push(name.clone());
        } else {
            junk1.push(name.clone());
        }
    }
    let core_set: BTreeSet<&String> = core.iter().collect();
    let junk2: Vec<String> = g2
        .names()
        .iter()
        .filter(|n| !core_set.contains(n))
        .cloned()
        .collect();
    let voi = match voi_spec {
        VoiSpec::Explicit(list) => {
            for v in list {
                if !core_set.contains(v) {
                    return Err(Error::InvalidParam(format!(
                        "vertex of interest `{v}` is not a core vertex"
                    )));
                }
            }
            list.clone()
        }
        VoiSpec::Uniform(size) => {
            if *size > core.len() {
                return Err(Error::InvalidParam(format!(
                    "cannot sample {size} vertices of interest from a core of {}",
                    core.len()
                )));
            }
            let picks = rand::seq::index::sample(rng, core.len(), *size);
            picks.iter().map(|i| core[i].clone()).collect()
        }
        VoiSpec::AllCore => core.clone(),
    };
    let correspondence = core.iter().map(|c| (c.clone(), c.clone())).collect();
    let pair = NominatablePair {
        g1: g1.clone(),
        g2: g2.clone(),
        core,
        junk1,
        junk2,
        voi,
        correspondence,
    };
    pair.validate()?;
    Ok(pair)
}

/// Parameters of the block-attachment construction: ER blocks of size `xi`
/// hanging off a large clique, the block of index `class_index` holding the
/// vertices of interest and identified by its per-vertex attachment count.
#[derive(Debug, Clone)]
pub struct ConsistencyClassSpec {
    pub n: usize,
    /// Which block carries the vertices of interest (1-based).
    pub class_index: usize,
    /// Within-block ER edge probability.
    pub p: f64,
    /// Block size; equals max(list_len, voi_count).
    pub xi: usize,
    /// Nomination list length the losses are evaluated at.
    pub list_len: usize,
    /// Number of vertices of interest.
    pub voi_count: usize,
}

impl ConsistencyClassSpec {
    pub fn new(
        n: usize,
        class_index: usize,
        p: f64,
        list_len: usize,
        voi_count: usize,
    ) -> Result<ConsistencyClassSpec> {
        let xi = list_len.max(voi_count);
        if xi == 0 {
            return Err(Error::InvalidParam("need a positive block size".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParam(format!("edge probability {p} outside [0,1]")));
        }
        let blocks = (n / 3) / xi;
        if class_index == 0 || class_index > blocks {
            return Err(Error::InvalidParam(format!(
                "class index {class_index} outside 1..={blocks} for n={n}, xi={xi}"
            )));
        }
        Ok(ConsistencyClassSpec {
            n,
            class_index,
            p,
            xi,
            list_len,
            voi_count,
        })
    }

    pub fn block_count(&self) -> usize {
        (self.n / 3) / self.xi
    }

    pub fn hub_size(&self) -> usize {
        self.n - self.xi * self.block_count()
    }

    /// Labels of the vertices of interest: the first `voi_count` labels,
    /// which sit inside the identified block.
    pub fn voi_labels(&self) -> Vec<String> {
        (1..=self.voi_count).map(|v| v.to_string()).collect()
    }
}

/// A drawn instance together with its ground-truth structure.
#[derive(Debug, Clone)]
pub struct BlockAttachmentInstance {
    pub graph: Graph,
    /// Clique vertex labels.
    pub hub: Vec<String>,
    /// Attachment count -> block labels. The block with count equal to
    /// `class_index` occupies labels 1..=xi and contains the v.o.i.
    pub blocks: BTreeMap<usize, Vec<String>>,
}

/// Draw one instance: ER(xi, p) blocks on consecutive labels, a complete
/// graph on the remainder, and for each block vertex a set of uniformly
/// chosen clique neighbors whose size identifies the block.
pub fn sample_consistency_class_instance<R: Rng>(
    spec: &ConsistencyClassSpec,
    rng: &mut R,
) -> Result<BlockAttachmentInstance> {
    let blocks = spec.block_count();
    let xi = spec.xi;
    let n = spec.n;
    let hub_start = xi * blocks; // 0-based index of the first clique vertex
    let hub_size = n - hub_start;
    if hub_size < blocks {
        return Err(Error::InvalidParam(
            "clique too small for the attachment counts".into(),
        ));
    }
    let mut adj = Array2::zeros((n, n));
    // Attachment count per label slot: slot 1 holds the identified block
    // (count = class_index) and slot class_index holds count 1.
    let count_for_slot = |slot: usize| -> usize {
        if slot == 1 {
            spec.class_index
        } else if slot == spec.class_index {
            1
        } else {
            slot
        }
    };
    let mut block_map: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for slot in 1..=blocks {
        let lo = (slot - 1) * xi;
        let hi = slot * xi;
        for u in lo..hi {
            for v in (u + 1)..hi {
                if rng.random::<f64>() < spec.p {
                    adj[[u, v]] = 1.0;
                    adj[[v, u]] = 1.0;
                }
            }
        }
        let count = count_for_slot(slot);
        for u in lo..hi {
            let picks = rand::seq::index::sample(rng, hub_size, count);
            for t in picks.iter() {
                let h = hub_start + t;
                adj[[u, h]] = 1.0;
                adj[[h, u]] = 1.0;
            }
        }
        block_map.insert(count, ((lo + 1)..=hi).map(|v| v.to_string()).collect());
    }
    for u in hub_start..n {
        for v in (u + 1)..n {
            adj[[u, v]] = 1.0;
            adj[[v, u]] = 1.0;
        }
    }
    let names = (1..=n).map(|v| v.to_string()).collect();
    let graph = Graph::from_adjacency(adj, names).expect("valid instance");
    let hub = ((hub_start + 1)..=n).map(|v| v.to_string()).collect();
    Ok(BlockAttachmentInstance {
        graph,
        hub,
        blocks: block_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;

    #[test]
    fn sbm_all_ones_is_complete() {
        let params = SbmParams::two_block(20, 1.0, 1.0, 1.0).unwrap();
        let mut rng = derive(1, "sbm");
        let (g, _) = sample_sbm(&params, &mut rng);
        assert_eq!(g.edge_count(), 20 * 19 / 2);
    }

    #[test]
    fn sbm_all_zeros_is_empty() {
        let params = SbmParams::two_block(20, 0.0, 0.0, 0.0).unwrap();
        let mut rng = derive(2, "sbm");
        let (g, _) = sample_sbm(&params, &mut rng);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn sbm_rejects_bad_params() {
        assert!(SbmParams::two_block(10, 1.5, 0.5, 0.5).is_err());
        assert!(SbmParams::new(10, ndarray::arr2(&[[0.5]]), vec![0.9]).is_err());
        let asym = ndarray::arr2(&[[0.5, 0.2], [0.3, 0.5]]);
        assert!(SbmParams::new(10, asym, vec![0.5, 0.5]).is_err());
    }

    /// Empirical within/between densities at n=1000 stay within 3 binomial
    /// standard errors of the block rates.
    #[test]
    fn sbm_densities_match_block_rates() {
        let params = SbmParams::two_block(1000, 0.4, 0.5, 0.3).unwrap();
        let mut rng = derive(3, "sbm-density");
        let (g, blocks) = sample_sbm(&params, &mut rng);
        let mut counts = [[0u64; 2]; 2];
        let mut pairs = [[0u64; 2]; 2];
        for i in 0..g.n() {
            for j in (i + 1)..g.n() {
                let (a, b) = (blocks[i].min(blocks[j]), blocks[i].max(blocks[j]));
                pairs[a][b] += 1;
                if g.has_edge(i, j) {
                    counts[a][b] += 1;
                }
            }
        }
        for a in 0..2 {
            for b in a..2 {
                let rate = params.block_rates[[a, b]];
                let n = pairs[a][b] as f64;
                let phat = counts[a][b] as f64 / n;
                let se = (rate * (1.0 - rate) / n).sqrt();
                assert!(
                    (phat - rate).abs() <= 3.0 * se,
                    "stratum ({a},{b}): {phat} vs {rate} (3se={})",
                    3.0 * se
                );
            }
        }
    }

    #[test]
    fn corr_one_gives_identical_graphs() {
        let params = SbmParams::two_block(200, 0.4, 0.5, 0.3).unwrap();
        let mut rng = derive(4, "corr");
        let (g1, g2, _) = sample_corr_sbm(1.0, &params, &mut rng).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn corr_zero_gives_independent_edges() {
        let params = SbmParams::two_block(800, 0.4, 0.5, 0.3).unwrap();
        let mut rng = derive(5, "corr");
        let (g1, g2, blocks) = sample_corr_sbm(0.0, &params, &mut rng).unwrap();
        let (rho_hat, se) = standardized_correlation(&g1, &g2, &blocks, &params);
        assert!(rho_hat.abs() <= 3.0 * se, "{rho_hat} vs 3se={}", 3.0 * se);
    }

    #[test]
    fn corr_out_of_range_rejected() {
        let params = SbmParams::two_block(10, 0.4, 0.5, 0.3).unwrap();
        let mut rng = derive(6, "corr");
        assert!(sample_corr_sbm(1.5, &params, &mut rng).is_err());
    }

    /// Pooled estimate of the edgewise correlation from standardized
    /// indicators; each pair has mean `rho` exactly, so the sample mean with
    /// its own standard error is a clean estimator across mixed block rates.
    pub(super) fn standardized_correlation(
        g1: &Graph,
        g2: &Graph,
        blocks: &[usize],
        params: &SbmParams,
    ) -> (f64, f64) {
        let mut prods = Vec::new();
        for i in 0..g1.n() {
            for j in (i + 1)..g1.n() {
                let b = params.block_rates[[blocks[i], blocks[j]]];
                if b <= 0.0 || b >= 1.0 {
                    continue;
                }
                let sd = (b * (1.0 - b)).sqrt();
                let x = (g1.weight(i, j) - b) / sd;
                let y = (g2.weight(i, j) - b) / sd;
                prods.push(x * y);
            }
        }
        let n = prods.len() as f64;
        let mean = prods.iter().sum::<f64>() / n;
        let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn corr_mid_value_recovered() {
        let params = SbmParams::two_block(800, 0.4, 0.5, 0.3).unwrap();
        let mut rng = derive(7, "corr");
        let (g1, g2, blocks) = sample_corr_sbm(0.7, &params, &mut rng).unwrap();
        let (rho_hat, se) = standardized_correlation(&g1, &g2, &blocks, &params);
        assert!(
            (rho_hat - 0.7).abs() <= 3.0 * se,
            "{rho_hat} vs 0.7 (3se={})",
            3.0 * se
        );
    }

    /// Swapping which graph is sampled first must not change the marginal
    /// law of either coordinate: compare per-stratum densities of "second
    /// graph" in one run against "first graph" in another.
    #[test]
    fn corr_generation_order_is_exchangeable() {
        let params = SbmParams::two_block(800, 0.4, 0.5, 0.3).unwrap();
        let mut r1 = derive(8, "corr-order-a");
        let mut r2 = derive(9, "corr-order-b");
        let (_, second, blocks_a) = sample_corr_sbm(0.5, &params, &mut r1).unwrap();
        let (first, _, blocks_b) = sample_corr_sbm(0.5, &params, &mut r2).unwrap();
        let density = |g: &Graph, blocks: &[usize]| {
            let mut count = [[0u64; 2]; 2];
            let mut pairs = [[0u64; 2]; 2];
            for i in 0..g.n() {
                for j in (i + 1)..g.n() {
                    let (a, b) = (blocks[i].min(blocks[j]), blocks[i].max(blocks[j]));
                    pairs[a][b] += 1;
                    if g.has_edge(i, j) {
                        count[a][b] += 1;
                    }
                }
            }
            (count, pairs)
        };
        let (ca, pa) = density(&second, &blocks_a);
        let (cb, pb) = density(&first, &blocks_b);
        for a in 0..2 {
            for b in a..2 {
                let p1 = ca[a][b] as f64 / pa[a][b] as f64;
                let p2 = cb[a][b] as f64 / pb[a][b] as f64;
                let pool = (ca[a][b] + cb[a][b]) as f64 / (pa[a][b] + pb[a][b]) as f64;
                let se = (pool * (1.0 - pool) * (1.0 / pa[a][b] as f64 + 1.0 / pb[a][b] as f64))
                    .sqrt();
                assert!((p1 - p2).abs() <= 3.0 * se, "stratum ({a},{b}): {p1} vs {p2}");
            }
        }
    }

    #[test]
    fn pair_with_identical_graphs_is_all_core() {
        let g = Graph::unweighted(4, &[(1, 2), (3, 4)]);
        let mut rng = derive(10, "pair");
        let pair =
            make_nominatable_pair(&g, &g, &VoiSpec::Explicit(vec!["1".into()]), &mut rng).unwrap();
        assert_eq!(pair.core.len(), 4);
        assert!(pair.junk1.is_empty() && pair.junk2.is_empty());
        assert_eq!(pair.counterpart("1"), Some("1"));
    }

    #[test]
    fn empty_core_rejects_nonempty_voi() {
        let g1 = Graph::unweighted(2, &[(1, 2)]);
        let names: Vec<String> = vec!["a".into(), "b".into()];
        let g2 = Graph::from_adjacency(Array2::zeros((2, 2)), names).unwrap();
        let mut rng = derive(11, "pair");
        let ok = make_nominatable_pair(&g1, &g2, &VoiSpec::Explicit(vec![]), &mut rng).unwrap();
        assert!(ok.core.is_empty());
        assert!(ok.voi.is_empty());
        assert!(
            make_nominatable_pair(&g1, &g2, &VoiSpec::Explicit(vec!["1".into()]), &mut rng)
                .is_err()
        );
    }

    /// Shapes from the motivating friendship-network sizes: 156 and 134
    /// vertices with 82 shared leaves 74 and 52 junk vertices.
    #[test]
    fn junk_sizes_from_core_overlap() {
        let names1: Vec<String> = (1..=156).map(|v| format!("s{v}")).collect();
        let names2: Vec<String> = (1..=82)
            .map(|v| format!("s{v}"))
            .chain((1..=52).map(|v| format!("t{v}")))
            .collect();
        let g1 = Graph::from_adjacency(Array2::zeros((156, 156)), names1).unwrap();
        let g2 = Graph::from_adjacency(Array2::zeros((134, 134)), names2).unwrap();
        let mut rng = derive(12, "pair");
        let pair = make_nominatable_pair(&g1, &g2, &VoiSpec::AllCore, &mut rng).unwrap();
        assert_eq!(pair.core.len(), 82);
        assert_eq!(pair.junk1.len(), 74);
        assert_eq!(pair.junk2.len(), 52);
    }

    proptest::proptest! {
        /// Random overlap structures always satisfy the pair invariants.
        #[test]
        fn nominatable_pair_invariants(shared in 0usize..8, only1 in 0usize..6, only2 in 0usize..6, seed in 0u64..1000) {
            proptest::prop_assume!(shared + only1 > 0 && shared + only2 > 0);
            let names1: Vec<String> = (0..shared).map(|v| format!("c{v}"))
                .chain((0..only1).map(|v| format!("a{v}"))).collect();
            let names2: Vec<String> = (0..shared).map(|v| format!("c{v}"))
                .chain((0..only2).map(|v| format!("b{v}"))).collect();
            let g1 = Graph::from_adjacency(Array2::zeros((names1.len(), names1.len())), names1).unwrap();
            let g2 = Graph::from_adjacency(Array2::zeros((names2.len(), names2.len())), names2).unwrap();
            let mut rng = derive(seed, "pair-prop");
            let size = if shared > 0 { seed as usize % (shared + 1) } else { 0 };
            let pair = make_nominatable_pair(&g1, &g2, &VoiSpec::Uniform(size), &mut rng).unwrap();
            pair.validate().unwrap();
            proptest::prop_assert_eq!(pair.core.len(), shared);
            proptest::prop_assert_eq!(pair.voi.len(), size);
        }
    }

    #[test]
    fn attachment_instance_structure() {
        let spec = ConsistencyClassSpec::new(60, 2, 0.5, 2, 4).unwrap();
        assert_eq!(spec.xi, 4);
        assert_eq!(spec.block_count(), 5);
        assert_eq!(spec.hub_size(), 40);
        let mut rng = derive(13, "attach");
        let inst = sample_consistency_class_instance(&spec, &mut rng).unwrap();
        let g = &inst.graph;
        // Clique part is complete.
        for u in 20..60 {
            for v in (u + 1)..60 {
                assert!(g.has_edge(u, v));
            }
        }
        // Every vertex of the identified block (labels 1..=4) has exactly 2
        // clique neighbors, and the slot holding count 1 is labels 5..=8.
        for u in 0..4 {
            let links = (20..60).filter(|&h| g.has_edge(u, h)).count();
            assert_eq!(links, 2);
        }
        for u in 4..8 {
            let links = (20..60).filter(|&h| g.has_edge(u, h)).count();
            assert_eq!(links, 1);
        }
        assert_eq!(inst.blocks[&2], vec!["1", "2", "3", "4"]);
        assert_eq!(inst.blocks[&1], vec!["5", "6", "7", "8"]);
    }

    #[test]
    fn attachment_instance_p1_blocks_are_cliques() {
        let spec = ConsistencyClassSpec::new(36, 1, 1.0, 3, 3).unwrap();
        let mut rng = derive(14, "attach");
        let inst = sample_consistency_class_instance(&spec, &mut rng).unwrap();
        let g = &inst.graph;
        for block in inst.blocks.values() {
            for a in block {
                for b in block {
                    if a != b {
                        let (i, j) = (g.index_of(a).unwrap(), g.index_of(b).unwrap());
                        assert!(g.has_edge(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn attachment_spec_rejects_small_n() {
        assert!(ConsistencyClassSpec::new(10, 2, 0.5, 2, 4).is_err());
    }
}
