//! Vertex nomination schemes and the label-consistency property.
//!
//! A scheme maps (first graph, obfuscated second graph, vertices of interest)
//! to a total order of the obfuscated labels. A sensible scheme must treat
//! topologically equivalent vertices as interchangeable: the set of ranks
//! assigned to each automorphism orbit of the second graph must not depend on
//! which obfuscation was applied. The check below verifies the biconditional
//! form of that property for a concrete pair of obfuscations: either every
//! orbit keeps its rank set and the rank-k vertex comes from the same orbit
//! at every k, or neither holds.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{Graph, Obfuscation};
use crate::orbits::automorphism_orbits;

pub trait VnScheme {
    /// Produce a total order of the labels of `g2_obf` (best match first).
    fn nominate(&self, g1: &Graph, g2_obf: &Graph, voi: &[String]) -> Result<Vec<String>>;
}

/// 1-based position of `label` in a nomination order.
pub fn rank_in(order: &[String], label: &str) -> Option<usize> {
    order.iter().position(|l| l == label).map(|p| p + 1)
}

/// Check the consistency property of `scheme` on `(g1, g2, voi)` for the
/// obfuscation pair `(o1, o2)`.
///
/// For each vertex `u` of `g2`, the rank set of `u`'s orbit must agree under
/// `o1` and `o2` exactly when, for every position `k`, the rank-`k` label
/// under `o1` and the rank-`k` label under `o2` obfuscate vertices of the
/// same orbit. Returns true when the biconditional holds for every vertex.
pub fn check_scheme_consistency<S: VnScheme>(
    scheme: &S,
    g1: &Graph,
    g2: &Graph,
    voi: &[String],
    o1: &Obfuscation,
    o2: &Obfuscation,
) -> Result<bool> {
    let orbits = automorphism_orbits(g2)?;
    let g2_o1 = g2.relabel(o1)?;
    let g2_o2 = g2.relabel(o2)?;
    let list1 = scheme.nominate(g1, &g2_o1, voi)?;
    let list2 = scheme.nominate(g1, &g2_o2, voi)?;
    validate_total_order(&list1, &g2_o1)?;
    validate_total_order(&list2, &g2_o2)?;

    // Per-orbit rank sets under each obfuscation.
    let rank_sets = |o: &Obfuscation, list: &[String]| -> Result<Vec<BTreeSet<usize>>> {
        let mut sets = Vec::with_capacity(orbits.orbits.len());
        for orbit in &orbits.orbits {
            let mut set = BTreeSet::new();
            for &v in orbit {
                let label = o.apply(g2.name(v)).ok_or_else(|| {
                    Error::BadObfuscation(format!("no image for vertex `{}`", g2.name(v)))
                })?;
                let rank = rank_in(list, label).ok_or_else(|| {
                    Error::InvalidParam(format!("label `{label}` missing from nomination order"))
                })?;
                set.insert(rank);
            }
            sets.push(set);
        }
        Ok(sets)
    };
    let sets1 = rank_sets(o1, &list1)?;
    let sets2 = rank_sets(o2, &list2)?;

    // Right-hand side: at every position k the nominated label obfuscates a
    // vertex of the same orbit under both obfuscations.
    let orbit_at = |o: &Obfuscation, list: &[String], k: usize| -> Result<usize> {
        let v = o
            .invert(&list[k])
            .ok_or_else(|| Error::BadObfuscation(format!("label `{}` outside image", list[k])))?;
        let idx = g2
            .index_of(v)
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))?;
        Ok(orbits.orbit_of(idx))
    };
    let mut rhs = true;
    for k in 0..g2.n() {
        if orbit_at(o1, &list1, k)? != orbit_at(o2, &list2, k)? {
            rhs = false;
            break;
        }
    }

    for (s1, s2) in sets1.iter().zip(sets2.iter()) {
        let lhs = s1 == s2;
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

fn validate_total_order(list: &[String], g: &Graph) -> Result<()> {
    if list.len() != g.n() {
        return Err(Error::InvalidParam(format!(
            "nomination order has {} entries for {} vertices",
            list.len(),
            g.n()
        )));
    }
    let set: BTreeSet<&String> = list.iter().collect();
    if set.len() != list.len() || !g.names().iter().all(|n| set.contains(n)) {
        return Err(Error::InvalidParam(
            "nomination order is not a permutation of the vertex labels".into(),
        ));
    }
    Ok(())
}

/// Ranks labels in ascending lexicographic order, ignoring structure.
pub struct LexScheme;

impl VnScheme for LexScheme {
    fn nominate(&self, _g1: &Graph, g2_obf: &Graph, _voi: &[String]) -> Result<Vec<String>> {
        let mut labels = g2_obf.names().to_vec();
        labels.sort();
        Ok(labels)
    }
}

/// Ranks by descending degree, ties by label; structural up to degree.
pub struct DegreeScheme;

impl VnScheme for DegreeScheme {
    fn nominate(&self, _g1: &Graph, g2_obf: &Graph, _voi: &[String]) -> Result<Vec<String>> {
        let mut idx: Vec<usize> = (0..g2_obf.n()).collect();
        idx.sort_by(|&a, &b| {
            g2_obf
                .degree(b)
                .total_cmp(&g2_obf.degree(a))
                .then_with(|| g2_obf.name(a).cmp(g2_obf.name(b)))
        });
        Ok(idx.into_iter().map(|i| g2_obf.name(i).to_string()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tree whose legs from the hub have pairwise distinct lengths, so the
    /// automorphism group is trivial (every orbit a singleton).
    fn asymmetric_tree() -> Graph {
        Graph::unweighted(7, &[(1, 2), (1, 3), (3, 4), (1, 5), (5, 6), (6, 7)])
    }

    fn tokens(g: &Graph, perm: &[usize]) -> Obfuscation {
        let pairs: Vec<(String, String)> = g
            .names()
            .iter()
            .zip(perm)
            .map(|(v, &p)| (v.clone(), format!("w{p:02}")))
            .collect();
        Obfuscation::new(pairs).unwrap()
    }

    #[test]
    fn asymmetric_graph_all_singleton_orbits() {
        let g = asymmetric_tree();
        let orbits = automorphism_orbits(&g).unwrap();
        assert!(orbits.orbits.iter().all(|o| o.len() == 1));
    }

    #[test]
    fn lex_scheme_consistent_when_obfuscations_agree() {
        let g2 = asymmetric_tree();
        let g1 = Graph::empty(2);
        let o = tokens(&g2, &[0, 1, 2, 3, 4, 5, 6]);
        assert!(check_scheme_consistency(&LexScheme, &g1, &g2, &[], &o, &o).unwrap());
    }

    #[test]
    fn lex_scheme_violates_on_singleton_orbits_under_transposition() {
        let g2 = asymmetric_tree();
        let g1 = Graph::empty(2);
        let o1 = tokens(&g2, &[0, 1, 2, 3, 4, 5, 6]);
        // Swapping two tokens changes exactly two vertices' ranks under the
        // lexicographic scheme while every other orbit keeps its rank: a
        // mixed outcome, which the biconditional forbids.
        let o2 = tokens(&g2, &[1, 0, 2, 3, 4, 5, 6]);
        assert!(!check_scheme_consistency(&LexScheme, &g1, &g2, &[], &o1, &o2).unwrap());
    }

    #[test]
    fn degree_scheme_consistent_across_random_obfuscations() {
        use rand::seq::SliceRandom;
        let g2 = Graph::unweighted(5, &[(1, 2), (2, 3), (3, 4), (4, 5), (2, 4)]);
        let g1 = Graph::empty(2);
        let mut rng = crate::rng::derive(3, "scheme-test");
        for _ in 0..20 {
            let mut p1: Vec<usize> = (0..5).collect();
            let mut p2: Vec<usize> = (0..5).collect();
            p1.shuffle(&mut rng);
            p2.shuffle(&mut rng);
            let o1 = tokens(&g2, &p1);
            let o2 = tokens(&g2, &p2);
            assert!(check_scheme_consistency(&DegreeScheme, &g1, &g2, &[], &o1, &o2).unwrap());
        }
    }

    /// Scheme that orders orbits differently depending on which token the
    /// hub vertex received; with three orbits this preserves one orbit's
    /// ranks while swapping the other two, which is inconsistent.
    struct HubLabelScheme;

    impl VnScheme for HubLabelScheme {
        fn nominate(&self, _g1: &Graph, g: &Graph, _voi: &[String]) -> Result<Vec<String>> {
            let hub = (0..g.n())
                .max_by(|&a, &b| {
                    g.degree(a)
                        .total_cmp(&g.degree(b))
                        .then_with(|| g.name(b).cmp(g.name(a)))
                })
                .unwrap();
            let mut isolated: Vec<String> = (0..g.n())
                .filter(|&v| g.degree(v) == 0.0)
                .map(|v| g.name(v).to_string())
                .collect();
            let mut endpoints: Vec<String> = (0..g.n())
                .filter(|&v| g.degree(v) == 1.0)
                .map(|v| g.name(v).to_string())
                .collect();
            isolated.sort();
            endpoints.sort();
            let hub_name = g.name(hub).to_string();
            let mut out = Vec::new();
            if hub_name < *endpoints.first().unwrap() {
                out.push(hub_name);
                out.extend(endpoints);
                out.extend(isolated);
            } else {
                out.extend(isolated);
                out.extend(endpoints);
                out.push(hub_name);
            }
            Ok(out)
        }
    }

    #[test]
    fn mixed_rank_preservation_is_inconsistent() {
        // Path 1-2-3 plus isolated 4: orbits {1,3}, {2}, {4}.
        let g2 = Graph::unweighted(4, &[(1, 2), (2, 3)]);
        let g1 = Graph::empty(2);
        // Under o1 the hub's token sorts after the endpoint tokens; under o2
        // it sorts before them. The endpoint orbit keeps rank set {2,3} both
        // times while the hub and isolated orbits trade places.
        let o1 = tokens(&g2, &[1, 3, 2, 0]);
        let o2 = tokens(&g2, &[1, 0, 2, 3]);
        let scheme = HubLabelScheme;
        let l1 = scheme.nominate(&g1, &g2.relabel(&o1).unwrap(), &[]).unwrap();
        let l2 = scheme.nominate(&g1, &g2.relabel(&o2).unwrap(), &[]).unwrap();
        // The hub vertex "2" moves from last to first while the endpoint
        // orbit keeps ranks {2,3}.
        assert_eq!(rank_in(&l1, o1.apply("2").unwrap()), Some(4));
        assert_eq!(rank_in(&l2, o2.apply("2").unwrap()), Some(1));
        assert!(!check_scheme_consistency(&scheme, &g1, &g2, &[], &o1, &o2).unwrap());
    }

    #[test]
    fn fully_symmetric_graph_admits_any_scheme() {
        // On an empty graph every vertex is equivalent, so every orbit rank
        // set is the full range under any obfuscation and any scheme passes.
        let g2 = Graph::empty(4);
        let g1 = Graph::empty(2);
        let o1 = tokens(&g2, &[0, 1, 2, 3]);
        let o2 = tokens(&g2, &[3, 1, 0, 2]);
        assert!(check_scheme_consistency(&LexScheme, &g1, &g2, &[], &o1, &o2).unwrap());
    }
}
