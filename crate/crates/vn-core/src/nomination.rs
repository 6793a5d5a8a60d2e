//! The spectral nomination pipeline: embed both graphs, align them on seed
//! vertices, cluster the pooled embedding with a Gaussian mixture, and rank
//! candidate vertices of the second graph by Mahalanobis proximity to the
//! vertices of interest.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::embedding::{align, ase, procrustes, scree, scree_elbows};
use crate::error::{Error, Result};
use crate::gmm::{fit_gmm, GmmConfig, GmmModel};
use crate::graph::Obfuscation;
use crate::linalg;
use crate::models::NominatablePair;

/// Total ordering of the obfuscated second-graph candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct NominationList {
    /// Candidate labels, best match first.
    pub order: Vec<String>,
    /// Score per entry, nondecreasing along the order.
    pub scores: Vec<f64>,
    /// Description of the deterministic tie-break key.
    pub tiebreak: String,
}

impl NominationList {
    pub fn rank_of(&self, label: &str) -> Option<usize> {
        self.order.iter().position(|l| l == label).map(|p| p + 1)
    }

    /// CSV rows `rank,g2_label,score`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,g2_label,score\n");
        for (i, (label, score)) in self.order.iter().zip(&self.scores).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, label, score));
        }
        out
    }
}

/// Whether the mixture is fitted on both embeddings at once or on the
/// second graph only (first-graph points then assigned by posterior).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusteringMode {
    #[default]
    Pooled,
    SecondGraphOnly,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    /// Fixed embedding dimension; otherwise the scree elbows decide.
    pub dim_override: Option<usize>,
    pub gmm: GmmConfig,
    pub clustering: ClusteringMode,
    /// Keep seed counterparts in the candidate set (excluded by default).
    pub include_seeds_as_candidates: bool,
}

/// Everything the ranking step needs, fitted once per pair; ranking a
/// vertex-of-interest set against a fit is cheap, so sweeps refit nothing.
#[derive(Debug, Clone)]
pub struct PipelineFit {
    pub dim: usize,
    /// Elbow choice per graph before taking the maximum.
    pub dim_candidates: (usize, usize),
    /// Both elbows per graph: ((first, second), (first, second)).
    pub dim_elbows: ((usize, Option<usize>), (usize, Option<usize>)),
    pub procrustes_residual: f64,
    pub gmm: GmmModel,
    g1_points: Array2<f64>,
    g1_index: BTreeMap<String, usize>,
    g1_component: Vec<usize>,
    g2_points: Array2<f64>,
    g2_index: BTreeMap<String, usize>,
    g2_component: Vec<usize>,
    /// Cholesky factor per mixture component.
    component_chol: Vec<Array2<f64>>,
    /// Candidate labels in the obfuscated space, sorted.
    candidates: Vec<String>,
    /// Obfuscated labels of the seed counterparts.
    pub seed_labels: Vec<String>,
}

/// Mahalanobis mismatch between two embedded points: the larger of the two
/// distances measured in each point's own component metric.
pub fn mahalanobis_delta(
    xu: &Array1<f64>,
    xv: &Array1<f64>,
    cov_u: &Array2<f64>,
    cov_v: &Array2<f64>,
) -> Result<f64> {
    let lu = linalg::cholesky(cov_u)?;
    let lv = linalg::cholesky(cov_v)?;
    Ok(delta_from_chols(xu, xv, &lu, &lv))
}

fn delta_from_chols(
    xu: &Array1<f64>,
    xv: &Array1<f64>,
    lu: &Array2<f64>,
    lv: &Array2<f64>,
) -> f64 {
    let diff = xu - xv;
    let du = linalg::mahalanobis_sq(lu, &diff).sqrt();
    let dv = linalg::mahalanobis_sq(lv, &diff).sqrt();
    du.max(dv)
}

/// Embed, align and cluster a pair. `seeds` are core vertices (first-graph
/// labels) whose cross-graph identity is known; `obf` hides the second
/// graph's labels and must be disjoint from the first graph's.
pub fn fit_pipeline<R: Rng>(
    pair: &NominatablePair,
    seeds: &[String],
    obf: &Obfuscation,
    cfg: &PipelineConfig,
    rng: &mut R,
) -> Result<PipelineFit> {
    if seeds.is_empty() {
        return Err(Error::InvalidParam("need at least one seed vertex".into()));
    }
    for v in pair.g1.names() {
        if obf.invert(v).is_some() {
            return Err(Error::BadObfuscation(format!(
                "obfuscating label `{v}` collides with a first-graph vertex"
            )));
        }
    }
    let core: std::collections::BTreeSet<&String> = pair.core.iter().collect();
    let mut seed_labels = Vec::with_capacity(seeds.len());
    for s in seeds {
        if !core.contains(s) {
            return Err(Error::InvalidParam(format!("seed `{s}` is not a core vertex")));
        }
        let g2_name = pair
            .counterpart(s)
            .ok_or_else(|| Error::InvalidParam(format!("seed `{s}` has no counterpart")))?;
        let w = obf
            .apply(g2_name)
            .ok_or_else(|| Error::BadObfuscation(format!("no obfuscated label for `{g2_name}`")))?;
        seed_labels.push(w.to_string());
    }

    let g2_obf = pair.g2.relabel(obf)?;
    let (d1, d2);
    let elbows;
    let dim = match cfg.dim_override {
        Some(d) => {
            d1 = d;
            d2 = d;
            elbows = ((d, None), (d, None));
            d
        }
        None => {
            let e1 = scree_elbows(&scree(&pair.g1)?)?;
            let e2 = scree_elbows(&scree(&g2_obf)?)?;
            d1 = e1.1.unwrap_or(e1.0);
            d2 = e2.1.unwrap_or(e2.0);
            elbows = (e1, e2);
            d1.max(d2)
        }
    };
    let dim = dim.min(pair.g1.n()).min(g2_obf.n());
    let emb1 = ase(&pair.g1, dim)?;
    let emb2 = ase(&g2_obf, dim)?;
    let xs = emb1.rows_for(seeds)?;
    let ys = emb2.rows_for(&seed_labels)?;
    let alignment = procrustes(&xs, &ys)?;
    let emb2 = align(&emb2, &alignment.rotation)?;

    let n1 = emb1.points.nrows();
    let n2 = emb2.points.nrows();
    let (gmm, g1_component, g2_component) = match cfg.clustering {
        ClusteringMode::Pooled => {
            let mut pooled = Array2::zeros((n1 + n2, dim));
            for i in 0..n1 {
                pooled.row_mut(i).assign(&emb1.points.row(i));
            }
            for j in 0..n2 {
                pooled.row_mut(n1 + j).assign(&emb2.points.row(j));
            }
            let gmm = fit_gmm(&pooled, &cfg.gmm, rng)?;
            let g1c = gmm.assignment[..n1].to_vec();
            let g2c = gmm.assignment[n1..].to_vec();
            (gmm, g1c, g2c)
        }
        ClusteringMode::SecondGraphOnly => {
            let gmm = fit_gmm(&emb2.points, &cfg.gmm, rng)?;
            let chols: Vec<Array2<f64>> = gmm
                .covariances
                .iter()
                .map(linalg::cholesky)
                .collect::<Result<_>>()?;
            let assign_row = |x: &Array1<f64>| -> usize {
                (0..gmm.k)
                    .max_by(|&a, &b| {
                        let da = component_log_density(&gmm, &chols, a, x);
                        let db = component_log_density(&gmm, &chols, b, x);
                        da.total_cmp(&db)
                    })
                    .unwrap()
            };
            let g1c = (0..n1).map(|i| assign_row(&emb1.points.row(i).to_owned())).collect();
            let g2c = gmm.assignment.clone();
            (gmm, g1c, g2c)
        }
    };
    let component_chol: Vec<Array2<f64>> = gmm
        .covariances
        .iter()
        .map(linalg::cholesky)
        .collect::<Result<_>>()?;

    let g1_index = emb1
        .vertex_order
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();
    let g2_index: BTreeMap<String, usize> = emb2
        .vertex_order
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();
    let mut candidates: Vec<String> = if cfg.include_seeds_as_candidates {
        g2_index.keys().cloned().collect()
    } else {
        g2_index
            .keys()
            .filter(|l| !seed_labels.contains(l))
            .cloned()
            .collect()
    };
    candidates.sort();

    Ok(PipelineFit {
        dim,
        dim_candidates: (d1, d2),
        dim_elbows: elbows,
        procrustes_residual: alignment.residual,
        gmm,
        g1_points: emb1.points,
        g1_index,
        g1_component,
        g2_points: emb2.points,
        g2_index,
        g2_component,
        component_chol,
        candidates,
        seed_labels,
    })
}

fn component_log_density(
    gmm: &GmmModel,
    chols: &[Array2<f64>],
    j: usize,
    x: &Array1<f64>,
) -> f64 {
    let diff = x - &gmm.means.row(j).to_owned();
    let maha = linalg::mahalanobis_sq(&chols[j], &diff);
    let logdet = linalg::chol_log_det(&chols[j]);
    gmm.weights[j].ln() - 0.5 * (maha + logdet)
}

impl PipelineFit {
    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    /// The first graph's embedding (alignment target).
    pub fn g1_embedding(&self) -> crate::embedding::Embedding {
        let mut order: Vec<(usize, String)> =
            self.g1_index.iter().map(|(v, &i)| (i, v.clone())).collect();
        order.sort_by_key(|(i, _)| *i);
        crate::embedding::Embedding {
            points: self.g1_points.clone(),
            dim: self.dim,
            vertex_order: order.into_iter().map(|(_, v)| v).collect(),
        }
    }

    /// The second graph's embedding after alignment, rows keyed by the
    /// obfuscated labels.
    pub fn g2_embedding(&self) -> crate::embedding::Embedding {
        let mut order: Vec<(usize, String)> =
            self.g2_index.iter().map(|(v, &i)| (i, v.clone())).collect();
        order.sort_by_key(|(i, _)| *i);
        crate::embedding::Embedding {
            points: self.g2_points.clone(),
            dim: self.dim,
            vertex_order: order.into_iter().map(|(_, v)| v).collect(),
        }
    }

    /// Score one candidate against one vertex of interest.
    fn delta(&self, voi: &str, candidate: &str) -> Result<f64> {
        let &i = self
            .g1_index
            .get(voi)
            .ok_or_else(|| Error::UnknownVertex(voi.to_string()))?;
        let &j = self
            .g2_index
            .get(candidate)
            .ok_or_else(|| Error::UnknownVertex(candidate.to_string()))?;
        let xv = self.g1_points.row(i).to_owned();
        let yu = self.g2_points.row(j).to_owned();
        let lu = &self.component_chol[self.g1_component[i]];
        let lv = &self.component_chol[self.g2_component[j]];
        Ok(delta_from_chols(&xv, &yu, lu, lv))
    }

    /// Rank every candidate by its smallest mismatch to the vertex-of-
    /// interest set, ties broken by label.
    pub fn rank(&self, voi: &[String]) -> Result<NominationList> {
        if voi.is_empty() {
            return Err(Error::InvalidParam("empty vertex-of-interest set".into()));
        }
        let mut scored = Vec::with_capacity(self.candidates.len());
        for cand in &self.candidates {
            let mut best = f64::INFINITY;
            for v in voi {
                best = best.min(self.delta(v, cand)?);
            }
            scored.push((best, cand.clone()));
        }
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        Ok(NominationList {
            order: scored.iter().map(|(_, l)| l.clone()).collect(),
            scores: scored.iter().map(|(s, _)| *s).collect(),
            tiebreak: "score,label".into(),
        })
    }
}

/// Full pipeline: fit on the pair and rank against its vertex-of-interest
/// set.
pub fn nominate<R: Rng>(
    pair: &NominatablePair,
    seeds: &[String],
    obf: &Obfuscation,
    cfg: &PipelineConfig,
    rng: &mut R,
) -> Result<NominationList> {
    let fit = fit_pipeline(pair, seeds, obf, cfg, rng)?;
    let voi: Vec<String> = pair
        .voi
        .iter()
        .filter(|v| !seeds.contains(v))
        .cloned()
        .collect();
    if voi.is_empty() {
        return Err(Error::InvalidParam(
            "every vertex of interest is a seed; nothing to nominate".into(),
        ));
    }
    fit.rank(&voi)
}

/// Probability that a uniformly random total order of `m` candidates puts a
/// given counterpart within the top `x`.
pub fn chance_rank_distribution(m: usize, x: usize) -> Result<f64> {
    if x == 0 || x > m {
        return Err(Error::InvalidParam(format!("rank cutoff {x} outside 1..={m}")));
    }
    Ok(x as f64 / m as f64)
}
