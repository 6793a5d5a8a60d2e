//! Adjacency spectral embedding, scree-elbow dimension selection, and seeded
//! orthogonal Procrustes alignment.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg;

/// Largest number of leading spectral magnitudes scanned for elbows; scree
/// tails carry no dimension information.
pub const SCREE_CAP: usize = 100;

/// Per-vertex latent position estimates: row i of `points` belongs to
/// `vertex_order[i]`.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub points: Array2<f64>,
    pub dim: usize,
    pub vertex_order: Vec<String>,
}

impl Embedding {
    /// Rows for the given vertex names, in the given order.
    pub fn rows_for<S: AsRef<str>>(&self, names: &[S]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((names.len(), self.dim));
        for (r, name) in names.iter().enumerate() {
            let idx = self
                .vertex_order
                .iter()
                .position(|v| v == name.as_ref())
                .ok_or_else(|| Error::UnknownVertex(name.as_ref().to_string()))?;
            out.row_mut(r).assign(&self.points.row(idx));
        }
        Ok(out)
    }

    /// CSV rows `vertex,x1..xd`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex");
        for j in 1..=self.dim {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for (i, v) in self.vertex_order.iter().enumerate() {
            out.push_str(v);
            for j in 0..self.dim {
                out.push_str(&format!(",{}", self.points[[i, j]]));
            }
            out.push('\n');
        }
        out
    }
}

/// Orthogonal alignment fitted on seed rows.
#[derive(Debug, Clone)]
pub struct ProcrustesAlignment {
    pub rotation: Array2<f64>,
    /// Frobenius residual on the seed rows after alignment.
    pub residual: f64,
}

/// Spectral embedding of the adjacency matrix into `d` dimensions: the top
/// `d` eigenpairs by absolute eigenvalue, rows scaled by the square roots of
/// the magnitudes.
pub fn ase(g: &Graph, d: usize) -> Result<Embedding> {
    let n = g.n();
    if d == 0 || d > n {
        return Err(Error::InvalidParam(format!("embedding dimension {d} outside 1..={n}")));
    }
    let (vals, vecs) = linalg::sym_eigen_abs_desc(g.adjacency())?;
    let mut points = Array2::zeros((n, d));
    for j in 0..d {
        let scale = vals[j].abs().sqrt();
        let col = vecs.column(j);
        for i in 0..n {
            points[[i, j]] = col[i] * scale;
        }
    }
    Ok(Embedding {
        points,
        dim: d,
        vertex_order: g.names().to_vec(),
    })
}

/// Leading spectral magnitudes (descending), capped at [`SCREE_CAP`].
pub fn scree(g: &Graph) -> Result<Vec<f64>> {
    let vals = linalg::sym_eigenvalues_abs_desc(g.adjacency())?;
    let keep = vals.len().min(SCREE_CAP);
    Ok(vals.into_iter().take(keep).map(f64::abs).collect())
}

/// Profile-likelihood elbow (two-group Gaussian with pooled variance):
/// 1-based index maximizing the likelihood of the split, ties to the lowest
/// index. A split with zero pooled variance fits perfectly and dominates.
fn profile_likelihood_elbow(values: &[f64]) -> usize {
    let n = values.len();
    let mut best_q = 1;
    let mut best = f64::NEG_INFINITY;
    for q in 1..=n {
        let (g1, g2) = values.split_at(q);
        let m1 = g1.iter().sum::<f64>() / g1.len() as f64;
        let m2 = if g2.is_empty() {
            0.0
        } else {
            g2.iter().sum::<f64>() / g2.len() as f64
        };
        let ss = g1.iter().map(|x| (x - m1).powi(2)).sum::<f64>()
            + g2.iter().map(|x| (x - m2).powi(2)).sum::<f64>();
        let lik = if ss == 0.0 {
            f64::INFINITY
        } else {
            let s2 = ss / n as f64;
            -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0)
        };
        if lik > best {
            best = lik;
            best_q = q;
        }
    }
    best_q
}

/// Both scree elbows: the profile-likelihood elbow of the whole sequence
/// and, when the remaining tail is informative, a second elbow found on the
/// values strictly after the first (returned as an absolute index). A
/// constant tail carries no split information and contributes no second
/// elbow.
pub fn scree_elbows(values: &[f64]) -> Result<(usize, Option<usize>)> {
    if values.len() < 3 {
        return Err(Error::InvalidParam(format!(
            "need at least 3 scree values, got {}",
            values.len()
        )));
    }
    for w in values.windows(2) {
        if w[1] > w[0] {
            return Err(Error::InvalidParam("scree values must be descending".into()));
        }
    }
    if values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParam("scree values must be nonnegative".into()));
    }
    let first = profile_likelihood_elbow(values);
    let tail = &values[first..];
    if tail.len() < 2 || tail.iter().all(|&v| v == tail[0]) {
        return Ok((first, None));
    }
    Ok((first, Some(first + profile_likelihood_elbow(tail))))
}

/// Embedding dimension from a descending scree: the larger of the two
/// elbows.
pub fn select_dim(values: &[f64]) -> Result<usize> {
    let (first, second) = scree_elbows(values)?;
    Ok(second.unwrap_or(first))
}

/// Solve `min over orthogonal R of ||xs - ys R||_F` via the SVD of
/// `ys^T xs`.
pub fn procrustes(xs: &Array2<f64>, ys: &Array2<f64>) -> Result<ProcrustesAlignment> {
    if xs.nrows() == 0 || xs.nrows() != ys.nrows() || xs.ncols() != ys.ncols() {
        return Err(Error::InvalidParam(format!(
            "seed matrices must agree in shape and be nonempty: {}x{} vs {}x{}",
            xs.nrows(),
            xs.ncols(),
            ys.nrows(),
            ys.ncols()
        )));
    }
    let m = ys.t().dot(xs);
    let (u, _, vt) = linalg::svd(&m)?;
    let rotation = u.dot(&vt);
    let diff = xs - &ys.dot(&rotation);
    let residual = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(ProcrustesAlignment { rotation, residual })
}

const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Right-multiply the embedding rows by an orthogonal matrix.
pub fn align(emb: &Embedding, rotation: &Array2<f64>) -> Result<Embedding> {
    if rotation.nrows() != emb.dim || rotation.ncols() != emb.dim {
        return Err(Error::InvalidParam(format!(
            "rotation is {}x{} for a {}-dimensional embedding",
            rotation.nrows(),
            rotation.ncols(),
            emb.dim
        )));
    }
    let defect = linalg::orthogonality_defect(rotation);
    if defect > ORTHOGONALITY_TOL {
        return Err(Error::InvalidParam(format!(
            "rotation is not orthogonal (defect {defect:.3e})"
        )));
    }
    Ok(Embedding {
        points: emb.points.dot(rotation),
        dim: emb.dim,
        vertex_order: emb.vertex_order.clone(),
    })
}

/// Scale-free comparison helper: squared Frobenius norm of the difference.
pub fn frobenius_distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Random orthogonal matrix from the QR factorization of a Gaussian draw.
pub fn random_orthogonal<R: rand::Rng>(d: usize, rng: &mut R) -> Array2<f64> {
    use ndarray_linalg::QR;
    use rand_distr::StandardNormal;
    loop {
        let mut m = Array2::<f64>::zeros((d, d));
        for x in m.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        if let Ok((q, r)) = m.qr() {
            // Fix signs so the distribution is Haar rather than biased by
            // the QR sign convention.
            let mut q = q;
            for j in 0..d {
                if r[[j, j]] < 0.0 {
                    for i in 0..d {
                        q[[i, j]] = -q[[i, j]];
                    }
                }
            }
            return q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Obfuscation;
    use crate::rng::derive;
    use ndarray::arr2;
    use rand::Rng as _;

    #[test]
    fn ase_empty_graph_is_zero() {
        let g = Graph::empty(5);
        let emb = ase(&g, 3).unwrap();
        assert!(emb.points.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ase_triangle_one_dimensional() {
        let g = Graph::unweighted(3, &[(1, 2), (1, 3), (2, 3)]);
        let emb = ase(&g, 1).unwrap();
        let expect = (2.0f64 / 3.0).sqrt();
        for i in 0..3 {
            assert!((emb.points[[i, 0]] - expect).abs() < 1e-12, "{}", emb.points[[i, 0]]);
        }
    }

    #[test]
    fn ase_rejects_bad_dimension() {
        let g = Graph::empty(3);
        assert!(ase(&g, 0).is_err());
        assert!(ase(&g, 4).is_err());
    }

    #[test]
    fn ase_permutation_equivariant_for_simple_spectrum() {
        // Non-bipartite with generic weights, so the magnitude spectrum is
        // simple (bipartite graphs pair eigenvalues across zero).
        let g = Graph::weighted(
            6,
            &[
                (1, 2, 0.7),
                (2, 3, 1.3),
                (1, 3, 0.9),
                (3, 4, 1.1),
                (4, 5, 0.6),
                (5, 6, 1.7),
                (2, 6, 1.4),
                (1, 5, 0.8),
            ],
        );
        let values = scree(&g).unwrap();
        for w in values.windows(2) {
            assert!(w[0] - w[1] > 1e-9, "need simple spectrum for this test");
        }
        let emb = ase(&g, 3).unwrap();
        let o = Obfuscation::new(
            g.names()
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), format!("w{:02}", (i * 5) % 6))),
        )
        .unwrap();
        let h = g.relabel(&o).unwrap();
        let emb_h = ase(&h, 3).unwrap();
        for (i, name) in g.names().iter().enumerate() {
            let w = o.apply(name).unwrap();
            let j = emb_h.vertex_order.iter().position(|x| x == w).unwrap();
            for k in 0..3 {
                assert!(
                    (emb.points[[i, k]] - emb_h.points[[j, k]]).abs() < 1e-8,
                    "vertex {name} dim {k}"
                );
            }
        }
    }

    #[test]
    fn ase_energy_identity() {
        let g = Graph::unweighted(6, &[(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 6), (1, 4)]);
        let d = 4;
        let emb = ase(&g, d).unwrap();
        let gram = emb.points.dot(&emb.points.t());
        let energy: f64 = gram.iter().map(|x| x * x).sum();
        let vals = scree(&g).unwrap();
        let expect: f64 = vals.iter().take(d).map(|v| v.powi(2)).sum();
        assert!((energy - expect).abs() < 1e-8 * expect.max(1.0));
    }

    #[test]
    fn elbow_on_two_flat_groups() {
        let vals = [10.0, 10.0, 10.0, 0.1, 0.1, 0.1, 0.1];
        assert_eq!(profile_likelihood_elbow(&vals), 3);
        // Constant tail contributes no second elbow.
        assert_eq!(select_dim(&vals).unwrap(), 3);
    }

    #[test]
    fn elbow_on_equal_values_is_one() {
        let vals = [2.0, 2.0, 2.0, 2.0];
        assert_eq!(select_dim(&vals).unwrap(), 1);
    }

    #[test]
    fn elbow_on_geometric_decay_with_gap() {
        let vals = [16.0, 8.0, 0.04, 0.02, 0.01, 0.005, 0.0025];
        let d = select_dim(&vals).unwrap();
        assert!(d >= 2, "selected {d}");
    }

    #[test]
    fn select_dim_input_validation() {
        assert!(select_dim(&[1.0, 0.5]).is_err());
        assert!(select_dim(&[1.0, 2.0, 3.0]).is_err());
        assert!(select_dim(&[1.0, 0.5, -0.1]).is_err());
    }

    #[test]
    fn procrustes_identity() {
        let xs = arr2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let a = procrustes(&xs, &xs).unwrap();
        assert!(a.residual < 1e-12);
        assert!(linalg::orthogonality_defect(&a.rotation) < 1e-10);
        assert!(frobenius_distance(&a.rotation, &Array2::eye(2)) < 1e-10);
    }

    #[test]
    fn procrustes_recovers_planted_rotation() {
        let mut rng = derive(11, "procrustes");
        use rand_distr::StandardNormal;
        for trial in 0..20 {
            let d = 2 + trial % 3;
            let s = d + 4;
            let mut xs = Array2::zeros((s, d));
            for x in xs.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let q = random_orthogonal(d, &mut rng);
            let ys = xs.dot(&q);
            let a = procrustes(&xs, &ys).unwrap();
            assert!(a.residual < 1e-8, "trial {trial}: residual {}", a.residual);
            assert!(
                frobenius_distance(&a.rotation, &q.t().to_owned()) < 1e-8,
                "trial {trial}"
            );
        }
    }

    #[test]
    fn procrustes_recovers_plane_rotation() {
        // 90 degree rotation planted on three generic points.
        let xs = arr2(&[[1.0, 0.2], [-0.3, 1.1], [0.7, -0.6]]);
        let q = arr2(&[[0.0, -1.0], [1.0, 0.0]]);
        let ys = xs.dot(&q);
        let a = procrustes(&xs, &ys).unwrap();
        assert!(frobenius_distance(&a.rotation, &q.t().to_owned()) < 1e-10);
        assert!(a.residual < 1e-10);
    }

    #[test]
    fn procrustes_is_optimal_among_random_rotations() {
        let mut rng = derive(12, "procrustes-opt");
        use rand_distr::StandardNormal;
        let d = 3;
        let s = 6;
        let mut xs = Array2::zeros((s, d));
        let mut ys = Array2::zeros((s, d));
        for x in xs.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        for y in ys.iter_mut() {
            *y = rng.sample(StandardNormal);
        }
        let a = procrustes(&xs, &ys).unwrap();
        for _ in 0..200 {
            let o = random_orthogonal(d, &mut rng);
            let other = frobenius_distance(&xs, &ys.dot(&o));
            assert!(a.residual <= other + 1e-10);
        }
    }

    #[test]
    fn align_roundtrip_and_validation() {
        let g = Graph::unweighted(4, &[(1, 2), (2, 3), (3, 4)]);
        let emb = ase(&g, 2).unwrap();
        let r = arr2(&[[0.0, -1.0], [1.0, 0.0]]);
        let rotated = align(&emb, &r).unwrap();
        let back = align(&rotated, &r.t().to_owned()).unwrap();
        assert!(frobenius_distance(&back.points, &emb.points) < 1e-12);
        assert_eq!(back.vertex_order, emb.vertex_order);

        let bad = arr2(&[[1.0, 0.1], [0.0, 1.0]]);
        assert!(align(&emb, &bad).is_err());
    }
}
