//! Gaussian mixture fitting: full-covariance EM from k-means++ starts with
//! BIC model selection, plus the k-means and clustering-agreement helpers
//! the pipeline and its checks share.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::par;

/// A fitted mixture with hard assignments and its model-selection score.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub k: usize,
    pub weights: Vec<f64>,
    /// k x d component means.
    pub means: Array2<f64>,
    /// Per-component d x d covariance matrices (floored on the diagonal).
    pub covariances: Vec<Array2<f64>>,
    /// Hard component label per point (argmax responsibility).
    pub assignment: Vec<usize>,
    pub log_likelihood: f64,
    /// `2 log L - params ln n`; larger is better.
    pub bic: f64,
}

#[derive(Debug, Clone)]
pub struct GmmConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative log-likelihood change declaring convergence.
    pub rel_tol: f64,
    /// Diagonal floor as a fraction of the pooled per-dimension variance.
    pub cov_floor_scale: f64,
}

impl Default for GmmConfig {
    fn default() -> GmmConfig {
        GmmConfig {
            k_min: 1,
            k_max: 9,
            restarts: 5,
            max_iters: 500,
            rel_tol: 1e-8,
            cov_floor_scale: 1e-6,
        }
    }
}

/// Fit mixtures for every component count in the range and return the
/// BIC-best model (ties to the smaller k). Component counts whose EM
/// degenerates are skipped; if all degenerate the failure is reported.
pub fn fit_gmm<R: Rng>(points: &Array2<f64>, cfg: &GmmConfig, rng: &mut R) -> Result<GmmModel> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::InvalidParam("no points to cluster".into()));
    }
    if cfg.k_min == 0 || cfg.k_min > cfg.k_max {
        return Err(Error::InvalidParam(format!(
            "bad component range {}..={}",
            cfg.k_min, cfg.k_max
        )));
    }
    let floor = covariance_floor(points, cfg.cov_floor_scale)?;
    let k_max = cfg.k_max.min(n);
    // Restart seeds are drawn up front so the fits are independent of
    // scheduling; candidate fits run in parallel.
    let jobs: Vec<(usize, u64)> = (cfg.k_min..=k_max)
        .flat_map(|k| (0..cfg.restarts).map(move |_| k))
        .map(|k| (k, rng.random::<u64>()))
        .collect();
    let fits = par::map_indexed(jobs.len(), |i| {
        let (k, seed) = jobs[i];
        let mut local = crate::rng::derive(seed, "gmm-restart");
        em_once(points, k, floor, cfg, &mut local)
    });
    let mut best: Option<GmmModel> = None;
    for fit in fits.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => {
                fit.bic > b.bic + 1e-12 || ((fit.bic - b.bic).abs() <= 1e-12 && fit.k < b.k)
            }
        };
        if better {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| {
        Error::GmmDegenerate(format!(
            "every component count in {}..={k_max} collapsed",
            cfg.k_min
        ))
    })
}

/// Pooled per-dimension variance scale times `scale`; the diagonal floor
/// keeping component covariances positive definite.
fn covariance_floor(points: &Array2<f64>, scale: f64) -> Result<f64> {
    let n = points.nrows() as f64;
    let d = points.ncols();
    let mut total = 0.0;
    for j in 0..d {
        let col = points.column(j);
        let mean = col.sum() / n;
        total += col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    }
    let per_dim = total / d as f64;
    if per_dim <= 0.0 {
        return Err(Error::GmmDegenerate("all points identical".into()));
    }
    Ok((per_dim * scale).max(f64::MIN_POSITIVE))
}

struct Component {
    weight: f64,
    mean: Array1<f64>,
    cov: Array2<f64>,
    chol: Array2<f64>,
    log_det: f64,
}

impl Component {
    fn refresh(&mut self) -> Result<()> {
        self.chol = linalg::cholesky(&self.cov)?;
        self.log_det = linalg::chol_log_det(&self.chol);
        Ok(())
    }

    /// Log density of every row of `points` under this component, written
    /// into `out`. Batched: one triangular solve over the whole point set.
    fn log_pdf_batch(&self, points: &Array2<f64>, out: &mut [f64]) {
        let n = points.nrows();
        let d = points.ncols();
        // diffs^T is d x n; solve L y = diffs^T column-block-wise.
        let mut y = Array2::<f64>::zeros((d, n));
        for i in 0..n {
            for a in 0..d {
                y[[a, i]] = points[[i, a]] - self.mean[a];
            }
        }
        for a in 0..d {
            for b in 0..a {
                let l = self.chol[[a, b]];
                if l != 0.0 {
                    let (top, mut bottom) = y.view_mut().split_at(ndarray::Axis(0), a);
                    let row_b = top.row(b);
                    let mut row_a = bottom.row_mut(0);
                    row_a.scaled_add(-l, &row_b);
                }
            }
            let inv = 1.0 / self.chol[[a, a]];
            y.row_mut(a).mapv_inplace(|v| v * inv);
        }
        let base = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + self.log_det);
        for i in 0..n {
            let maha: f64 = (0..d).map(|a| y[[a, i]] * y[[a, i]]).sum();
            out[i] = base - 0.5 * maha;
        }
    }
}

fn em_once<R: Rng>(
    points: &Array2<f64>,
    k: usize,
    floor: f64,
    cfg: &GmmConfig,
    rng: &mut R,
) -> Option<GmmModel> {
    let n = points.nrows();
    let d = points.ncols();
    let (labels, _) = kmeans(points, k, 1, 100, rng);
    let mut comps = init_from_labels(points, k, &labels, floor).ok()?;
    let mut log_resp = Array2::zeros((n, k));
    let mut comp_buf = vec![0.0; n];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut ll = f64::NEG_INFINITY;
    for _iter in 0..cfg.max_iters {
        // E step, one batched density evaluation per component.
        for (j, c) in comps.iter().enumerate() {
            c.log_pdf_batch(points, &mut comp_buf);
            let lw = c.weight.ln();
            for i in 0..n {
                log_resp[[i, j]] = lw + comp_buf[i];
            }
        }
        ll = 0.0;
        for i in 0..n {
            let mut m = f64::NEG_INFINITY;
            for j in 0..k {
                m = m.max(log_resp[[i, j]]);
            }
            let mut sum = 0.0;
            for j in 0..k {
                sum += (log_resp[[i, j]] - m).exp();
            }
            let lse = m + sum.ln();
            for j in 0..k {
                log_resp[[i, j]] -= lse;
            }
            ll += lse;
        }
        if !ll.is_finite() {
            return None;
        }
        // The observed-data likelihood must not decrease.
        if ll < prev_ll - 1e-9 * (1.0 + prev_ll.abs()) {
            return None;
        }
        let converged = prev_ll.is_finite() && (ll - prev_ll).abs() <= cfg.rel_tol * (1.0 + ll.abs());
        prev_ll = ll;
        if converged {
            break;
        }
        // M step: responsibilities as a matrix, moments via matrix products.
        let resp = log_resp.mapv(f64::exp);
        let masses: Vec<f64> = (0..k).map(|j| resp.column(j).sum()).collect();
        if masses.iter().any(|&m| m < 1e-10) {
            return None; // component collapsed
        }
        let means = resp.t().dot(points); // k x d, unnormalized
        for (j, comp) in comps.iter_mut().enumerate() {
            let mass = masses[j];
            comp.weight = mass / n as f64;
            let mean = means.row(j).to_owned() / mass;
            let centered = points - &mean.view().insert_axis(ndarray::Axis(0));
            let weighted = {
                let mut w = centered.clone();
                for (i, mut row) in w.rows_mut().into_iter().enumerate() {
                    row *= resp[[i, j]];
                }
                w
            };
            let mut cov = weighted.t().dot(&centered);
            cov /= mass;
            for a in 0..d {
                cov[[a, a]] += floor;
            }
            comp.mean = mean;
            comp.cov = cov;
            if comp.refresh().is_err() {
                return None;
            }
        }
    }
    let assignment: Vec<usize> = (0..n)
        .map(|i| {
            (0..k)
                .max_by(|&a, &b| log_resp[[i, a]].total_cmp(&log_resp[[i, b]]))
                .unwrap()
        })
        .collect();
    let params = (k - 1) + k * d + k * d * (d + 1) / 2;
    let bic = 2.0 * ll - params as f64 * (n as f64).ln();
    let mut means = Array2::zeros((k, d));
    for (j, c) in comps.iter().enumerate() {
        means.row_mut(j).assign(&c.mean);
    }
    Some(GmmModel {
        k,
        weights: comps.iter().map(|c| c.weight).collect(),
        means,
        covariances: comps.iter().map(|c| c.cov.clone()).collect(),
        assignment,
        log_likelihood: ll,
        bic,
    })
}

fn init_from_labels(
    points: &Array2<f64>,
    k: usize,
    labels: &[usize],
    floor: f64,
) -> Result<Vec<Component>> {
    let n = points.nrows();
    let d = points.ncols();
    let mut comps = Vec::with_capacity(k);
    for j in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == j).collect();
        if members.is_empty() {
            return Err(Error::GmmDegenerate("empty initial cluster".into()));
        }
        let m = members.len() as f64;
        let mut mean = Array1::zeros(d);
        for &i in &members {
            mean = mean + &points.row(i);
        }
        mean /= m;
        let mut cov = Array2::zeros((d, d));
        for &i in &members {
            let diff = points.row(i).to_owned() - &mean;
            for a in 0..d {
                for b in 0..d {
                    cov[[a, b]] += diff[a] * diff[b];
                }
            }
        }
        cov /= m;
        for a in 0..d {
            cov[[a, a]] += floor;
        }
        let mut comp = Component {
            weight: m / n as f64,
            mean,
            cov,
            chol: Array2::zeros((d, d)),
            log_det: 0.0,
        };
        comp.refresh()?;
        comps.push(comp);
    }
    Ok(comps)
}

/// Lloyd's algorithm from k-means++ seeding; returns labels and centers of
/// the best restart by within-cluster sum of squares.
pub fn kmeans<R: Rng>(
    points: &Array2<f64>,
    k: usize,
    restarts: usize,
    max_iters: usize,
    rng: &mut R,
) -> (Vec<usize>, Array2<f64>) {
    let n = points.nrows();
    let d = points.ncols();
    assert!(k >= 1 && k <= n, "k = {k} outside 1..={n}");
    let mut best: Option<(f64, Vec<usize>, Array2<f64>)> = None;
    for _ in 0..restarts.max(1) {
        let mut centers = kmeanspp_init(points, k, rng);
        let mut labels = vec![0usize; n];
        for _ in 0..max_iters {
            let mut changed = false;
            for i in 0..n {
                let mut arg = 0;
                let mut best_d = f64::INFINITY;
                for j in 0..k {
                    let dist: f64 = (0..d)
                        .map(|c| (points[[i, c]] - centers[[j, c]]).powi(2))
                        .sum();
                    if dist < best_d {
                        best_d = dist;
                        arg = j;
                    }
                }
                if labels[i] != arg {
                    labels[i] = arg;
                    changed = true;
                }
            }
            let mut counts = vec![0usize; k];
            let mut sums = Array2::<f64>::zeros((k, d));
            for i in 0..n {
                counts[labels[i]] += 1;
                for c in 0..d {
                    sums[[labels[i], c]] += points[[i, c]];
                }
            }
            for j in 0..k {
                if counts[j] > 0 {
                    for c in 0..d {
                        centers[[j, c]] = sums[[j, c]] / counts[j] as f64;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let wss: f64 = (0..n)
            .map(|i| {
                (0..d)
                    .map(|c| (points[[i, c]] - centers[[labels[i], c]]).powi(2))
                    .sum::<f64>()
            })
            .sum();
        if best.as_ref().map_or(true, |(b, _, _)| wss < *b) {
            best = Some((wss, labels, centers));
        }
    }
    let (_, labels, centers) = best.unwrap();
    (labels, centers)
}

fn kmeanspp_init<R: Rng>(points: &Array2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = points.nrows();
    let d = points.ncols();
    let mut centers = Array2::zeros((k, d));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut dist2 = vec![f64::INFINITY; n];
    for j in 1..k {
        for i in 0..n {
            let dd: f64 = (0..d)
                .map(|c| (points[[i, c]] - centers[[j - 1, c]]).powi(2))
                .sum();
            if dd < dist2[i] {
                dist2[i] = dd;
            }
        }
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                if u <= w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(j).assign(&points.row(pick));
    }
    centers
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for i in 0..n {
        table[a[i]][b[i]] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().flatten().map(|&x| choose2(x)).sum();
    let sum_a: f64 = table.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(n as u64);
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < 1e-12 {
        return 1.0;
    }
    (sum_ij - expected) / (max_index - expected)
}
