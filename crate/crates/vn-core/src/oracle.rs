//! Exact Bayes-optimal nomination on enumerable graph-pair spaces.
//!
//! For tiny vertex counts the full joint distribution over labeled graph
//! pairs is materialized, restricted to pairs where every vertex of interest
//! has a trivial automorphism orbit in the second graph, and partitioned
//! into classes sharing the first graph and the isomorphism type of the
//! second. Within a class the conditional probability that an obfuscated
//! label covers a vertex of interest is computable exactly; ranking labels
//! by that probability greedily is simultaneously optimal for recall and
//! precision at every level, which the tests verify against random
//! label-consistent competitor schemes.

use std::collections::BTreeMap;

use rand::Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{Graph, Obfuscation};
use crate::models::ConsistencyClassSpec;
use crate::nomination::NominationList;
use crate::orbits::{automorphism_orbits, canonical_form, find_isomorphism};
use crate::par;
use crate::scheme::VnScheme;

/// Largest graph size on either side of an enumerated pair space.
pub const ENUM_CAP: usize = 5;

/// Parameters of an enumerable pair distribution: independent edge draws on
/// each side with an optional edgewise correlation on core-core pairs
/// (requires equal rates).
#[derive(Debug, Clone)]
pub struct EnumerableSpec {
    pub n: usize,
    pub m: usize,
    /// Shared core size; core labels are `"1"..="c"` in both graphs.
    pub core: usize,
    pub p1: f64,
    pub p2: f64,
    /// Edgewise correlation between core-core pairs of the two graphs.
    pub rho: f64,
    /// Vertices of interest (core labels).
    pub voi: Vec<String>,
}

/// One labeled pair of the support, edges encoded as upper-triangle bits.
#[derive(Debug, Clone, Copy)]
pub struct SupportPoint {
    pub mask1: u32,
    pub mask2: u32,
    pub prob: f64,
}

/// The materialized distribution after the orbit restriction.
#[derive(Debug, Clone)]
pub struct EnumeratedDistribution {
    pub names1: Vec<String>,
    pub names2: Vec<String>,
    pub support: Vec<SupportPoint>,
    pub voi: Vec<String>,
    /// Probability mass removed by the orbit restriction (the remaining
    /// mass is renormalized to 1).
    pub removed_mass: f64,
    /// The fixed evaluation obfuscation of the second graph's labels.
    pub obf: Obfuscation,
}

fn pair_order(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

fn graph_from_mask(mask: u32, names: &[String]) -> Graph {
    let n = names.len();
    let mut adj = ndarray::Array2::zeros((n, n));
    for (bit, (i, j)) in pair_order(n).into_iter().enumerate() {
        if mask >> bit & 1 == 1 {
            adj[[i, j]] = 1.0;
            adj[[j, i]] = 1.0;
        }
    }
    Graph::from_adjacency(adj, names.to_vec()).expect("mask graph is valid")
}

impl EnumeratedDistribution {
    pub fn graph1(&self, point: &SupportPoint) -> Graph {
        graph_from_mask(point.mask1, &self.names1)
    }

    pub fn graph2(&self, point: &SupportPoint) -> Graph {
        graph_from_mask(point.mask2, &self.names2)
    }

    /// Obfuscated labels of the vertices of interest.
    pub fn voi_labels(&self) -> Vec<String> {
        self.voi
            .iter()
            .map(|v| self.obf.apply(v).expect("voi obfuscated").to_string())
            .collect()
    }
}

/// Materialize the distribution of an [`EnumerableSpec`] by exhausting every
/// edge configuration of both graphs, dropping pairs where some vertex of
/// interest has a nontrivial orbit in the second graph, and renormalizing.
pub fn enumerate_support(spec: &EnumerableSpec) -> Result<EnumeratedDistribution> {
    if spec.n > ENUM_CAP || spec.m > ENUM_CAP {
        return Err(Error::TooLargeForEnumeration {
            n: spec.n.max(spec.m),
            cap: ENUM_CAP,
        });
    }
    if spec.core > spec.n.min(spec.m) {
        return Err(Error::InvalidParam("core larger than a vertex set".into()));
    }
    for (name, v) in [("p1", spec.p1), ("p2", spec.p2), ("rho", spec.rho)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParam(format!("{name} = {v} outside [0,1]")));
        }
    }
    if spec.rho > 0.0 && spec.p1 != spec.p2 {
        return Err(Error::InvalidParam(
            "correlated core pairs need equal edge rates".into(),
        ));
    }
    let names1: Vec<String> = (1..=spec.n).map(|v| v.to_string()).collect();
    let names2: Vec<String> = (1..=spec.core)
        .map(|v| v.to_string())
        .chain((1..=(spec.m - spec.core)).map(|v| format!("y{v}")))
        .collect();
    for v in &spec.voi {
        if v.parse::<usize>().map_or(true, |x| x == 0 || x > spec.core) {
            return Err(Error::InvalidParam(format!("vertex of interest `{v}` not in core")));
        }
    }
    let pairs1 = pair_order(spec.n);
    let pairs2 = pair_order(spec.m);
    let bits1 = pairs1.len();
    let bits2 = pairs2.len();

    // Joint probability of the two indicator values for each pair slot.
    let core_pair = |i: usize, j: usize| i < spec.core && j < spec.core;
    let shared_bit: BTreeMap<(usize, usize), usize> = pairs1
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| core_pair(i, j))
        .map(|(b, &(i, j))| ((i, j), b))
        .collect();

    // Orbit restriction checked once per distinct second graph.
    let voi_ok: Vec<bool> = (0..(1u32 << bits2))
        .map(|mask2| {
            let g2 = graph_from_mask(mask2, &names2);
            let orbits = automorphism_orbits(&g2).expect("within enumeration cap");
            spec.voi.iter().all(|v| {
                let idx = g2.index_of(v).expect("voi in g2");
                orbits.is_singleton(idx)
            })
        })
        .collect();

    let mut support = Vec::new();
    let mut removed = 0.0;
    for mask1 in 0..(1u32 << bits1) {
        let mut p1_prob = 1.0;
        for (bit, _) in pairs1.iter().enumerate() {
            let present = mask1 >> bit & 1 == 1;
            p1_prob *= if present { spec.p1 } else { 1.0 - spec.p1 };
        }
        for mask2 in 0..(1u32 << bits2) {
            let mut prob = 1.0;
            for (bit2, &(i, j)) in pairs2.iter().enumerate() {
                let e2 = mask2 >> bit2 & 1 == 1;
                match shared_bit.get(&(i, j)) {
                    Some(&bit1) if spec.rho > 0.0 => {
                        let e1 = mask1 >> bit1 & 1 == 1;
                        let p = spec.p2;
                        let cond = if e1 {
                            p + spec.rho * (1.0 - p)
                        } else {
                            p * (1.0 - spec.rho)
                        };
                        prob *= if e2 { cond } else { 1.0 - cond };
                    }
                    _ => {
                        prob *= if e2 { spec.p2 } else { 1.0 - spec.p2 };
                    }
                }
            }
            let joint = p1_prob * prob;
            if joint == 0.0 {
                continue;
            }
            if voi_ok[mask2 as usize] {
                support.push(SupportPoint {
                    mask1,
                    mask2,
                    prob: joint,
                });
            } else {
                removed += joint;
            }
        }
    }
    if support.is_empty() {
        return Ok(EnumeratedDistribution {
            names1,
            obf: Obfuscation::new(
                names2
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.clone(), format!("w{i:02}"))),
            )?,
            names2,
            support,
            voi: spec.voi.clone(),
            removed_mass: removed,
        });
    }
    let kept: f64 = support.iter().map(|s| s.prob).sum();
    for s in &mut support {
        s.prob /= kept;
    }
    let obf = Obfuscation::new(
        names2
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), format!("w{i:02}"))),
    )?;
    Ok(EnumeratedDistribution {
        names1,
        names2,
        support,
        voi: spec.voi.clone(),
        removed_mass: removed,
        obf,
    })
}

/// A class of support pairs sharing the first graph exactly and the second
/// graph up to isomorphism.
#[derive(Debug, Clone)]
pub struct IsoClass {
    /// Support indices; the first is the representative.
    pub members: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone)]
pub struct IsoClassPartition {
    pub classes: Vec<IsoClass>,
}

/// Partition the support into (first graph, isomorphism type of the second)
/// classes via canonical forms.
pub fn partition_by_isomorphism(dist: &EnumeratedDistribution) -> Result<IsoClassPartition> {
    let mut canon_cache: BTreeMap<u32, Vec<u8>> = BTreeMap::new();
    let mut buckets: BTreeMap<(u32, Vec<u8>), Vec<usize>> = BTreeMap::new();
    for (idx, point) in dist.support.iter().enumerate() {
        let canon = canon_cache
            .entry(point.mask2)
            .or_insert_with(|| {
                canonical_form(&dist.graph2(point)).expect("within enumeration cap")
            })
            .clone();
        buckets.entry((point.mask1, canon)).or_default().push(idx);
    }
    let classes = buckets
        .into_values()
        .map(|members| {
            let prob = members.iter().map(|&i| dist.support[i].prob).sum();
            IsoClass { members, prob }
        })
        .collect();
    Ok(IsoClassPartition { classes })
}

/// A scheme defined by one label order per class, extended to every class
/// member through an isomorphism. Such schemes satisfy the label
/// consistency property by construction.
#[derive(Debug, Clone)]
pub struct ClassTableScheme {
    dist: EnumeratedDistribution,
    /// Per class: the representative pair's graphs.
    reps: Vec<(Graph, Graph)>,
    /// Per class: obfuscated-label order on the representative.
    pub tables: Vec<Vec<String>>,
    /// Per class: the conditional cover probability of each label, when the
    /// table was built optimally.
    pub label_probs: Option<Vec<BTreeMap<String, f64>>>,
}

impl ClassTableScheme {
    fn rep_obf_graph(&self, class: usize) -> Result<Graph> {
        self.reps[class].1.relabel(&self.dist.obf)
    }

    fn locate_class(&self, g1: &Graph, g2_obf: &Graph) -> Result<usize> {
        for (c, (rep1, rep2)) in self.reps.iter().enumerate() {
            if rep1 == g1 {
                let rep_obf = rep2.relabel(&self.dist.obf)?;
                if find_isomorphism(&rep_obf, g2_obf, None).is_some() {
                    return Ok(c);
                }
            }
        }
        Err(Error::InvalidParam(
            "pair does not belong to the enumerated support".into(),
        ))
    }
}

impl VnScheme for ClassTableScheme {
    /// Push the class table through the first isomorphism found from the
    /// representative's obfuscated graph onto the queried one.
    fn nominate(&self, g1: &Graph, g2_obf: &Graph, _voi: &[String]) -> Result<Vec<String>> {
        let class = self.locate_class(g1, g2_obf)?;
        let rep_obf = self.rep_obf_graph(class)?;
        let sigma = find_isomorphism(&rep_obf, g2_obf, None)
            .ok_or_else(|| Error::InvalidParam("representative mismatch".into()))?;
        let mut out = Vec::with_capacity(self.tables[class].len());
        for label in &self.tables[class] {
            let idx = rep_obf
                .index_of(label)
                .ok_or_else(|| Error::UnknownVertex(label.clone()))?;
            out.push(g2_obf.name(sigma[idx]).to_string());
        }
        Ok(out)
    }
}

/// Build the exact optimal scheme: within each class, labels are ordered by
/// the conditional probability that they cover a vertex of interest, ties
/// by label.
pub fn bayes_optimal_scheme(
    dist: &EnumeratedDistribution,
    partition: &IsoClassPartition,
) -> Result<ClassTableScheme> {
    let voi_set: std::collections::BTreeSet<&String> = dist.voi.iter().collect();
    let results = par::map_indexed(partition.classes.len(), |c| {
        let class = &partition.classes[c];
        let rep_point = &dist.support[class.members[0]];
        let rep1 = dist.graph1(rep_point);
        let rep2 = dist.graph2(rep_point);
        let mut probs: BTreeMap<String, f64> = dist
            .names2
            .iter()
            .map(|v| (dist.obf.apply(v).unwrap().to_string(), 0.0))
            .collect();
        for &mi in &class.members {
            let member = &dist.support[mi];
            let g2m = dist.graph2(member);
            let sigma = find_isomorphism(&rep2, &g2m, None)
                .expect("class members are isomorphic");
            let weight = member.prob / class.prob;
            for (v_idx, v_name) in dist.names2.iter().enumerate() {
                let image = g2m.name(sigma[v_idx]);
                if voi_set.contains(&image.to_string()) {
                    let w = dist.obf.apply(v_name).unwrap();
                    *probs.get_mut(w).unwrap() += weight;
                }
            }
        }
        let mut order: Vec<String> = probs.keys().cloned().collect();
        order.sort_by(|a, b| {
            probs[b]
                .total_cmp(&probs[a])
                .then_with(|| a.cmp(b))
        });
        ((rep1, rep2), order, probs)
    });
    let mut reps = Vec::new();
    let mut tables = Vec::new();
    let mut label_probs = Vec::new();
    for (rep, order, probs) in results {
        reps.push(rep);
        tables.push(order);
        label_probs.push(probs);
    }
    Ok(ClassTableScheme {
        dist: dist.clone(),
        reps,
        tables,
        label_probs: Some(label_probs),
    })
}

/// A random label-consistent competitor: one uniformly shuffled table per
/// class.
pub fn random_class_scheme<R: Rng>(
    dist: &EnumeratedDistribution,
    partition: &IsoClassPartition,
    rng: &mut R,
) -> Result<ClassTableScheme> {
    use rand::seq::SliceRandom;
    let labels: Vec<String> = dist
        .names2
        .iter()
        .map(|v| dist.obf.apply(v).unwrap().to_string())
        .collect();
    let mut reps = Vec::new();
    let mut tables = Vec::new();
    for class in &partition.classes {
        let rep_point = &dist.support[class.members[0]];
        reps.push((dist.graph1(rep_point), dist.graph2(rep_point)));
        let mut table = labels.clone();
        table.shuffle(rng);
        tables.push(table);
    }
    Ok(ClassTableScheme {
        dist: dist.clone(),
        reps,
        tables,
        label_probs: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Recall,
    Precision,
}

/// Exact level-k loss of a scheme over the enumerated distribution.
pub fn exact_loss<S: VnScheme>(
    dist: &EnumeratedDistribution,
    scheme: &S,
    k: usize,
    kind: LossKind,
) -> Result<f64> {
    if dist.voi.is_empty() {
        return Err(Error::InvalidParam("no vertices of interest".into()));
    }
    if k == 0 || k >= dist.names2.len() {
        return Err(Error::InvalidParam(format!(
            "level {k} outside 1..={}",
            dist.names2.len() - 1
        )));
    }
    let voi_labels = dist.voi_labels();
    let mut loss = 0.0;
    for point in &dist.support {
        let g1 = dist.graph1(point);
        let g2o = dist.graph2(point).relabel(&dist.obf)?;
        let order = scheme.nominate(&g1, &g2o, &voi_labels)?;
        let hits = voi_labels
            .iter()
            .filter(|w| {
                order
                    .iter()
                    .position(|l| l == *w)
                    .map(|p| p + 1 <= k)
                    .unwrap_or(false)
            })
            .count() as f64;
        let l = match kind {
            LossKind::Recall => 1.0 - hits / voi_labels.len() as f64,
            LossKind::Precision => 1.0 - hits / k as f64,
        };
        loss += point.prob * l;
    }
    Ok(loss)
}

/// Per-class probability that each rank position is occupied by a vertex of
/// interest under the given scheme; the prefix sums of the optimal scheme's
/// vector dominate every competitor's.
pub fn rank_probability_vector<S: VnScheme>(
    dist: &EnumeratedDistribution,
    partition: &IsoClassPartition,
    scheme: &S,
    class_idx: usize,
) -> Result<Vec<f64>> {
    let class = &partition.classes[class_idx];
    let voi_labels = dist.voi_labels();
    let m = dist.names2.len();
    let mut p = vec![0.0; m];
    for &mi in &class.members {
        let point = &dist.support[mi];
        let g1 = dist.graph1(point);
        let g2o = dist.graph2(point).relabel(&dist.obf)?;
        let order = scheme.nominate(&g1, &g2o, &voi_labels)?;
        let weight = point.prob / class.prob;
        for (pos, label) in order.iter().enumerate() {
            if voi_labels.contains(label) {
                p[pos] += weight;
            }
        }
    }
    Ok(p)
}

/// JSON audit dump: classes with their probabilities, per-label cover
/// probabilities and the optimal tables.
pub fn oracle_audit_json(
    dist: &EnumeratedDistribution,
    partition: &IsoClassPartition,
    scheme: &ClassTableScheme,
    losses: &[(usize, f64, f64)],
) -> serde_json::Value {
    let classes: Vec<serde_json::Value> = partition
        .classes
        .iter()
        .enumerate()
        .map(|(c, class)| {
            json!({
                "members": class.members.len(),
                "probability": class.prob,
                "table": scheme.tables[c],
                "label_probs": scheme.label_probs.as_ref().map(|lp| &lp[c]),
            })
        })
        .collect();
    json!({
        "support_size": dist.support.len(),
        "removed_mass": dist.removed_mass,
        "voi": dist.voi,
        "classes": classes,
        "losses": losses
            .iter()
            .map(|(k, recall, precision)| json!({"k": k, "recall": recall, "precision": precision}))
            .collect::<Vec<_>>(),
    })
}

/// Ground structure recovered from a block-attachment instance: the clique
/// and the blocks keyed by their per-vertex clique-neighbor count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredBlocks {
    pub hub: Vec<String>,
    pub blocks: BTreeMap<usize, Vec<String>>,
}

/// Identify the clique by its dominating degrees, then every block by its
/// clique-attachment count. Structure only; works on obfuscated labels.
pub fn identify_block_structure(
    g: &Graph,
    spec: &ConsistencyClassSpec,
) -> Result<RecoveredBlocks> {
    let hub_size = spec.hub_size();
    let threshold = (hub_size - 1) as f64;
    let hub_idx: Vec<usize> = (0..g.n()).filter(|&v| g.degree(v) >= threshold).collect();
    if hub_idx.len() != hub_size {
        return Err(Error::InvalidGraph(format!(
            "clique identification found {} vertices, expected {hub_size}",
            hub_idx.len()
        )));
    }
    for (a, &u) in hub_idx.iter().enumerate() {
        for &v in &hub_idx[a + 1..] {
            if !g.has_edge(u, v) {
                return Err(Error::InvalidGraph("recovered clique is not complete".into()));
            }
        }
    }
    let hub_set: std::collections::BTreeSet<usize> = hub_idx.iter().copied().collect();
    let mut blocks: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for v in 0..g.n() {
        if hub_set.contains(&v) {
            continue;
        }
        let count = hub_idx.iter().filter(|&&h| g.has_edge(v, h)).count();
        if count == 0 || count > spec.block_count() {
            return Err(Error::InvalidGraph(format!(
                "attachment count {count} outside 1..={}",
                spec.block_count()
            )));
        }
        blocks.entry(count).or_default().push(g.name(v).to_string());
    }
    for (count, members) in &blocks {
        if members.len() != spec.xi {
            return Err(Error::InvalidGraph(format!(
                "block with count {count} has {} vertices, expected {}",
                members.len(),
                spec.xi
            )));
        }
    }
    let mut hub: Vec<String> = hub_idx.iter().map(|&v| g.name(v).to_string()).collect();
    hub.sort();
    for members in blocks.values_mut() {
        members.sort();
    }
    Ok(RecoveredBlocks { hub, blocks })
}

/// The block-identifying scheme: recover the structure, rank the block
/// whose attachment count equals the class index first (label order), the
/// remaining vertices after (label order).
pub fn psi_block_identifier(g: &Graph, spec: &ConsistencyClassSpec) -> Result<NominationList> {
    let recovered = identify_block_structure(g, spec)?;
    let target = recovered
        .blocks
        .get(&spec.class_index)
        .ok_or_else(|| Error::InvalidGraph("identified block missing".into()))?
        .clone();
    let in_target: std::collections::BTreeSet<&String> = target.iter().collect();
    let mut rest: Vec<String> = g
        .names()
        .iter()
        .filter(|v| !in_target.contains(v))
        .cloned()
        .collect();
    rest.sort();
    let mut order = target;
    let mut scores = vec![0.0; order.len()];
    scores.extend(std::iter::repeat(1.0).take(rest.len()));
    order.extend(rest);
    Ok(NominationList {
        order,
        scores,
        tiebreak: "block-membership,label".into(),
    })
}
