//! Exact automorphism and isomorphism machinery for small graphs.
//!
//! Everything here is brute force with degree pruning, capped at small vertex
//! counts; larger requests fail loudly rather than approximate. Orbits are
//! only needed by the exact oracle and the scheme-consistency checks, which
//! operate on desk-scale graphs by design.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Hard cap for exact orbit enumeration.
pub const ORBIT_CAP: usize = 10;
/// Hard cap for canonical-form search (n! permutations).
pub const CANON_CAP: usize = 8;

/// Partition of a graph's vertices into automorphism-equivalence classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPartition {
    /// Orbits as sorted index sets, ordered by smallest member.
    pub orbits: Vec<Vec<usize>>,
}

impl OrbitPartition {
    /// Index of the orbit containing vertex `v`.
    pub fn orbit_of(&self, v: usize) -> usize {
        self.orbits
            .iter()
            .position(|o| o.contains(&v))
            .expect("vertex in some orbit")
    }

    /// The members of the orbit containing `v`.
    pub fn members(&self, v: usize) -> &[usize] {
        &self.orbits[self.orbit_of(v)]
    }

    pub fn is_singleton(&self, v: usize) -> bool {
        self.members(v).len() == 1
    }
}

/// Exact automorphism orbits of an unweighted graph with at most
/// [`ORBIT_CAP`] vertices.
///
/// Rather than enumerating the full automorphism group, this searches for a
/// single automorphism mapping `u -> v` for each candidate pair not yet known
/// equivalent, and merges orbits along every automorphism found.
pub fn automorphism_orbits(g: &Graph) -> Result<OrbitPartition> {
    if !g.is_unweighted() {
        return Err(Error::InvalidGraph(
            "orbit enumeration requires an unweighted graph".into(),
        ));
    }
    let n = g.n();
    if n > ORBIT_CAP {
        return Err(Error::TooLargeForEnumeration { n, cap: ORBIT_CAP });
    }
    let mut uf = UnionFind::new(n);
    let degs = g.degrees();
    for u in 0..n {
        for v in (u + 1)..n {
            if degs[u] != degs[v] || uf.find(u) == uf.find(v) {
                continue;
            }
            if let Some(sigma) = find_isomorphism(g, g, Some((u, v))) {
                for (i, &si) in sigma.iter().enumerate() {
                    uf.union(i, si);
                }
            }
        }
    }
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    let mut root_to_orbit = vec![usize::MAX; n];
    for v in 0..n {
        let r = uf.find(v);
        if root_to_orbit[r] == usize::MAX {
            root_to_orbit[r] = orbits.len();
            orbits.push(Vec::new());
        }
        orbits[root_to_orbit[r]].push(v);
    }
    orbits.sort_by_key(|o| o[0]);
    Ok(OrbitPartition { orbits })
}

/// Backtracking search for an isomorphism from `a` to `b` (as index maps),
/// optionally constrained to send `pin.0` in `a` to `pin.1` in `b`. Returns
/// the first mapping found in a fixed deterministic order, or `None`.
pub fn find_isomorphism(a: &Graph, b: &Graph, pin: Option<(usize, usize)>) -> Option<Vec<usize>> {
    let n = a.n();
    if n != b.n() {
        return None;
    }
    let da = a.degrees();
    let db = b.degrees();
    {
        let mut sa = da.clone();
        let mut sb = db.clone();
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        if sa != sb {
            return None;
        }
    }
    let mut sigma = vec![usize::MAX; n];
    let mut used = vec![false; n];
    // The pinned vertex is assigned first so the subtree is pruned early.
    let mut order: Vec<usize> = (0..n).collect();
    if let Some((u, _)) = pin {
        order.retain(|&x| x != u);
        order.insert(0, u);
    }
    fn extend(
        a: &Graph,
        b: &Graph,
        da: &[f64],
        db: &[f64],
        order: &[usize],
        depth: usize,
        pin: Option<(usize, usize)>,
        sigma: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let u = order[depth];
        for v in 0..b.n() {
            if used[v] || da[u] != db[v] {
                continue;
            }
            if let Some((pu, pv)) = pin {
                if u == pu && v != pv {
                    continue;
                }
            }
            let mut ok = true;
            for &w in &order[..depth] {
                if a.weight(u, w) != b.weight(v, sigma[w]) {
                    ok = false;
                    break;
                }
            }
            if ok {
                sigma[u] = v;
                used[v] = true;
                if extend(a, b, da, db, order, depth + 1, pin, sigma, used) {
                    return true;
                }
                used[v] = false;
                sigma[u] = usize::MAX;
            }
        }
        false
    }
    if extend(a, b, &da, &db, &order, 0, pin, &mut sigma, &mut used) {
        Some(sigma)
    } else {
        None
    }
}

pub fn are_isomorphic(a: &Graph, b: &Graph) -> bool {
    find_isomorphism(a, b, None).is_some()
}

/// Canonical form of a small unweighted graph: the lexicographically minimal
/// upper-triangle bit string over all vertex relabelings. Equal forms mean
/// isomorphic graphs.
pub fn canonical_form(g: &Graph) -> Result<Vec<u8>> {
    let n = g.n();
    if n > CANON_CAP {
        return Err(Error::TooLargeForEnumeration { n, cap: CANON_CAP });
    }
    if !g.is_unweighted() {
        return Err(Error::InvalidGraph(
            "canonical form requires an unweighted graph".into(),
        ));
    }
    let mut best: Option<Vec<u8>> = None;
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let mut bits = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                bits.push(if g.has_edge(p[i], p[j]) { 1u8 } else { 0u8 });
            }
        }
        match &best {
            Some(b) if *b <= bits => {}
            _ => best = Some(bits),
        }
    });
    Ok(best.unwrap_or_default())
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, k: usize, visit: &mut F) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
