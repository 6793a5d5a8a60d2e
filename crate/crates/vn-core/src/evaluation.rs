//! Level-k recall/precision losses, performance curves with Monte Carlo
//! standard errors, chance normalization, and the simulation harness tying
//! generation, contamination, trimming and nomination together.

use crate::adversary::{contaminate, AdversaryConfig, ContaminationRecord};
use crate::error::{Error, Result};
use crate::graph::{Graph, Obfuscation};
use crate::models::{make_nominatable_pair, sample_corr_sbm, SbmParams, VoiSpec};
use crate::nomination::{chance_rank_distribution, fit_pipeline, NominationList, PipelineConfig};
use crate::par;
use crate::regularization::{trim, TrimConfig, TrimSemantics};
use crate::rng::derive_indexed;

/// Ranks of the counterpart labels in a nomination order; `None` when a
/// counterpart is absent (for example trimmed away), which counts as an
/// infinite rank everywhere below.
pub fn counterpart_ranks(list: &NominationList, counterparts: &[String]) -> Vec<Option<usize>> {
    counterparts.iter().map(|c| list.rank_of(c)).collect()
}

fn top_k_count(ranks: &[Option<usize>], k: usize) -> usize {
    ranks.iter().filter(|r| matches!(r, Some(r) if *r <= k)).count()
}

fn validate_loss_args(list: &NominationList, counterparts: &[String], k: usize) -> Result<()> {
    if counterparts.is_empty() {
        return Err(Error::InvalidParam("empty vertex-of-interest set".into()));
    }
    if k == 0 || k >= list.order.len().max(2) {
        return Err(Error::InvalidParam(format!(
            "level {k} outside 1..={}",
            list.order.len().saturating_sub(1)
        )));
    }
    Ok(())
}

/// Fraction of counterparts missing from the top k, normalized by the
/// vertex-of-interest count.
pub fn level_k_recall_loss(
    list: &NominationList,
    counterparts: &[String],
    k: usize,
) -> Result<f64> {
    validate_loss_args(list, counterparts, k)?;
    let hits = top_k_count(&counterpart_ranks(list, counterparts), k);
    Ok(1.0 - hits as f64 / counterparts.len() as f64)
}

/// Fraction of the top k not occupied by counterparts.
pub fn level_k_precision_loss(
    list: &NominationList,
    counterparts: &[String],
    k: usize,
) -> Result<f64> {
    validate_loss_args(list, counterparts, k)?;
    let hits = top_k_count(&counterpart_ranks(list, counterparts), k);
    Ok(1.0 - hits as f64 / k as f64)
}

/// The raw count of counterparts ranked within the top k: the shared
/// numerator of both losses.
pub fn verification_count(
    list: &NominationList,
    counterparts: &[String],
    k: usize,
) -> Result<usize> {
    validate_loss_args(list, counterparts, k)?;
    Ok(top_k_count(&counterpart_ranks(list, counterparts), k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub x: usize,
    pub mean: f64,
    pub se: f64,
}

/// Mean (with standard error over replicates) of the number of vertices of
/// interest whose counterpart is ranked within the top x, for x in
/// `1..=x_max`. Missing counterparts never score.
pub fn performance_curve(rank_maps: &[Vec<Option<usize>>], x_max: usize) -> Result<Vec<CurvePoint>> {
    if rank_maps.is_empty() {
        return Err(Error::InvalidParam("no replicates".into()));
    }
    let n = rank_maps.len() as f64;
    let mut curve = Vec::with_capacity(x_max);
    for x in 1..=x_max {
        let counts: Vec<f64> = rank_maps
            .iter()
            .map(|ranks| top_k_count(ranks, x) as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n;
        let se = if rank_maps.len() > 1 {
            let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        curve.push(CurvePoint { x, mean, se });
    }
    Ok(curve)
}

/// Sample standard error of a mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// An evaluation condition: which second graph the pipeline sees.
#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    /// Both graphs restricted to the uncontaminated vertices.
    Idealized,
    /// The adversary's output, all vertices.
    Contaminated,
    /// The adversary's output trimmed with the given fractions.
    Regularized { low: f64, high: f64 },
}

impl Regime {
    pub fn label(&self) -> String {
        match self {
            Regime::Idealized => "idealized".into(),
            Regime::Contaminated => "contaminated".into(),
            Regime::Regularized { low, high } => format!("regularized({low},{high})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub params: SbmParams,
    pub rho: f64,
    pub adversary: AdversaryConfig,
    pub regimes: Vec<Regime>,
    /// Monte Carlo replicates (fresh seed set each).
    pub replicates: usize,
    pub seed_size: usize,
    pub x_max: usize,
    /// Levels at which the multi-v.o.i. losses are reported.
    pub loss_ks: Vec<usize>,
    pub pipeline: PipelineConfig,
    pub trim_semantics: TrimSemantics,
    pub master_seed: u64,
}

#[derive(Debug, Clone)]
pub struct LossRow {
    pub k: usize,
    pub recall_mean: f64,
    pub recall_se: f64,
    pub precision_mean: f64,
    pub precision_se: f64,
}

#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub regime: String,
    pub curve: Vec<CurvePoint>,
    /// Analytic chance curve: expected top-x count for a uniformly random
    /// order, averaged over replicates (candidate counts vary per
    /// replicate under trimming).
    pub chance: Vec<f64>,
    pub losses: Vec<LossRow>,
    /// Mean number of swept vertices whose counterpart was absent from the
    /// candidate set.
    pub missing_mean: f64,
    /// Mean candidate count.
    pub candidates_mean: f64,
    /// Per-replicate top-`x_max` counts, replicate order preserved, so
    /// regimes sharing replicates support paired comparisons.
    pub per_replicate_top: Vec<f64>,
    /// Mean selected embedding dimension across replicates.
    pub dim_mean: f64,
    /// Elbow candidates of the first replicate.
    pub dim_example: String,
}

impl RegimeReport {
    /// CSV rows `x,mean,se,chance`.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("x,mean,se,chance\n");
        for (pt, chance) in self.curve.iter().zip(&self.chance) {
            out.push_str(&format!("{},{},{},{}\n", pt.x, pt.mean, pt.se, chance));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub regimes: Vec<RegimeReport>,
    pub replicates: usize,
    pub seed_size: usize,
}

impl EvalReport {
    pub fn regime(&self, label: &str) -> Option<&RegimeReport> {
        self.regimes.iter().find(|r| r.regime == label)
    }

    /// Tab-separated summary: one row per regime, mean top-x counts at the
    /// requested cutoffs.
    pub fn summary_tsv(&self, xs: &[usize]) -> String {
        let mut out = String::from("regime");
        for x in xs {
            out.push_str(&format!("\tx={x}"));
        }
        out.push('\n');
        for r in &self.regimes {
            out.push_str(&r.regime);
            for &x in xs {
                let v = r
                    .curve
                    .iter()
                    .find(|p| p.x == x)
                    .map_or(f64::NAN, |p| p.mean);
                out.push_str(&format!("\t{v:.3}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Everything one replicate draws before any regime is evaluated.
pub struct ReplicateData {
    pub g1_ideal: Graph,
    pub g2_ideal: Graph,
    pub record: ContaminationRecord,
    pub untouched: Vec<String>,
    pub seeds: Vec<String>,
    pub sweep: Vec<String>,
    pub obf: Obfuscation,
    pub blocks: Vec<usize>,
}

/// Draw the correlated pair, contaminate the second graph, and fix the seed
/// set, sweep set and obfuscation for replicate `index`.
pub fn simulate_replicate(cfg: &HarnessConfig, index: usize) -> Result<ReplicateData> {
    let i = index as u64;
    let mut pair_rng = derive_indexed(cfg.master_seed, "pair", i);
    let (g1, g2, blocks) = sample_corr_sbm(cfg.rho, &cfg.params, &mut pair_rng)?;
    let mut adv_rng = derive_indexed(cfg.master_seed, "adversary", i);
    let record = contaminate(&g2, &cfg.adversary, &mut adv_rng)?;
    let touched: std::collections::BTreeSet<&String> =
        record.w_plus.iter().chain(record.w_minus.iter()).collect();
    let untouched: Vec<String> = g1
        .names()
        .iter()
        .filter(|n| !touched.contains(n))
        .cloned()
        .collect();
    if untouched.len() <= cfg.seed_size {
        return Err(Error::InvalidParam(format!(
            "only {} uncontaminated vertices for {} seeds",
            untouched.len(),
            cfg.seed_size
        )));
    }
    let mut seed_rng = derive_indexed(cfg.master_seed, "seeds", i);
    let picks = rand::seq::index::sample(&mut seed_rng, untouched.len(), cfg.seed_size);
    let mut seed_idx: Vec<usize> = picks.iter().collect();
    seed_idx.sort_unstable();
    let seeds: Vec<String> = seed_idx.iter().map(|&j| untouched[j].clone()).collect();
    let sweep: Vec<String> = untouched
        .iter()
        .filter(|v| !seeds.contains(v))
        .cloned()
        .collect();
    let mut obf_rng = derive_indexed(cfg.master_seed, "obfuscation", i);
    let obf = Obfuscation::fresh(g2.names(), "w", &mut obf_rng)?;
    let g1_ideal = g1.induced_subgraph(&untouched)?;
    let g2_ideal = g2.induced_subgraph(&untouched)?;
    Ok(ReplicateData {
        g1_ideal,
        g2_ideal,
        record,
        untouched,
        seeds,
        sweep,
        obf,
        blocks,
    })
}

pub(crate) struct RegimeOutcome {
    pub(crate) per_voi_ranks: Vec<Option<usize>>,
    pub(crate) multi_ranks: Vec<Option<usize>>,
    pub(crate) candidates: usize,
    pub(crate) missing: usize,
    pub(crate) dim: usize,
    /// Human-readable elbow candidates, e.g. "g1 elbows (2, Some(4)) ...".
    pub(crate) dim_detail: String,
}

fn run_replicate(cfg: &HarnessConfig, index: usize) -> Result<Vec<RegimeOutcome>> {
    let data = simulate_replicate(cfg, index)?;
    let mut out = Vec::with_capacity(cfg.regimes.len());
    for regime in &cfg.regimes {
        let g2r = match regime {
            Regime::Idealized => data.g2_ideal.clone(),
            Regime::Contaminated => data.record.graph.clone(),
            Regime::Regularized { low, high } => {
                let tc = TrimConfig::new(*low, *high)?
                    .protecting(data.seeds.clone())
                    .with_semantics(cfg.trim_semantics);
                trim(&data.record.graph, &tc)?
            }
        };
        // Core bookkeeping comes from shared labels; trimmed-away
        // counterparts simply fall out of the core.
        let mut scratch = derive_indexed(cfg.master_seed, "pair-assembly", index as u64);
        let pair = make_nominatable_pair(
            &data.g1_ideal,
            &g2r,
            &VoiSpec::Explicit(Vec::new()),
            &mut scratch,
        )?;
        let mut fit_rng = derive_indexed(
            cfg.master_seed,
            &format!("fit:{}", regime.label()),
            index as u64,
        );
        let fit = fit_pipeline(&pair, &data.seeds, &data.obf, &cfg.pipeline, &mut fit_rng)?;
        let mut per_voi_ranks = Vec::with_capacity(data.sweep.len());
        let mut missing = 0usize;
        for v in &data.sweep {
            let counterpart = data.obf.apply(v).expect("full obfuscation");
            if g2r.index_of(v).is_none() {
                per_voi_ranks.push(None);
                missing += 1;
                continue;
            }
            let list = fit.rank(std::slice::from_ref(v))?;
            per_voi_ranks.push(list.rank_of(counterpart));
        }
        let multi_list = fit.rank(&data.sweep)?;
        let counterparts: Vec<String> = data
            .sweep
            .iter()
            .map(|v| data.obf.apply(v).expect("full obfuscation").to_string())
            .collect();
        let multi_ranks = counterpart_ranks(&multi_list, &counterparts);
        let (e1, e2) = fit.dim_elbows;
        out.push(RegimeOutcome {
            per_voi_ranks,
            multi_ranks,
            candidates: fit.candidates().len(),
            missing,
            dim: fit.dim,
            dim_detail: format!(
                "g1 elbows {:?}/{:?}, g2 elbows {:?}/{:?}, d={}",
                e1.0, e1.1, e2.0, e2.1, fit.dim
            ),
        });
    }
    Ok(out)
}

/// Run every regime over fresh replicates (seed sets and pair draws shared
/// across regimes within a replicate) and aggregate curves and losses.
pub fn monte_carlo_harness(cfg: &HarnessConfig) -> Result<EvalReport> {
    if cfg.regimes.is_empty() {
        return Err(Error::InvalidParam("no regimes".into()));
    }
    if cfg.replicates == 0 {
        return Err(Error::InvalidParam("need at least one replicate".into()));
    }
    let results = par::map_indexed(cfg.replicates, |i| run_replicate(cfg, i));
    let mut replicate_outcomes = Vec::with_capacity(cfg.replicates);
    for r in results {
        replicate_outcomes.push(r?);
    }
    let labels: Vec<String> = cfg.regimes.iter().map(|r| r.label()).collect();
    aggregate_outcomes(
        &labels,
        &replicate_outcomes,
        cfg.x_max,
        &cfg.loss_ks,
        cfg.seed_size,
    )
}

/// Fold per-replicate regime outcomes into curves, chance baselines and
/// loss tables.
pub(crate) fn aggregate_outcomes(
    regime_labels: &[String],
    replicate_outcomes: &[Vec<RegimeOutcome>],
    x_max: usize,
    loss_ks: &[usize],
    seed_size: usize,
) -> Result<EvalReport> {
    let mut regimes = Vec::with_capacity(regime_labels.len());
    for (ri, regime) in regime_labels.iter().enumerate() {
        let outcomes: Vec<&RegimeOutcome> =
            replicate_outcomes.iter().map(|o| &o[ri]).collect();
        let rank_maps: Vec<Vec<Option<usize>>> =
            outcomes.iter().map(|o| o.per_voi_ranks.clone()).collect();
        let curve = performance_curve(&rank_maps, x_max)?;
        let mut chance = Vec::with_capacity(x_max);
        for x in 1..=x_max {
            let mut acc = 0.0;
            for o in &outcomes {
                let m = o.candidates;
                let per = if x <= m {
                    chance_rank_distribution(m, x)?
                } else {
                    1.0
                };
                acc += per * (o.per_voi_ranks.len() - o.missing) as f64;
            }
            chance.push(acc / outcomes.len() as f64);
        }
        let mut losses = Vec::new();
        for &k in loss_ks {
            let mut recalls = Vec::new();
            let mut precisions = Vec::new();
            for o in &outcomes {
                let voi_n = o.multi_ranks.len() as f64;
                if k >= o.candidates {
                    continue;
                }
                let hits = top_k_count(&o.multi_ranks, k) as f64;
                recalls.push(1.0 - hits / voi_n);
                precisions.push(1.0 - hits / k as f64);
            }
            if recalls.is_empty() {
                continue;
            }
            let (rm, rs) = mean_and_se(&recalls);
            let (pm, ps) = mean_and_se(&precisions);
            losses.push(LossRow {
                k,
                recall_mean: rm,
                recall_se: rs,
                precision_mean: pm,
                precision_se: ps,
            });
        }
        let missing_mean =
            outcomes.iter().map(|o| o.missing as f64).sum::<f64>() / outcomes.len() as f64;
        let candidates_mean =
            outcomes.iter().map(|o| o.candidates as f64).sum::<f64>() / outcomes.len() as f64;
        let per_replicate_top: Vec<f64> = outcomes
            .iter()
            .map(|o| top_k_count(&o.per_voi_ranks, x_max) as f64)
            .collect();
        let dim_mean =
            outcomes.iter().map(|o| o.dim as f64).sum::<f64>() / outcomes.len() as f64;
        regimes.push(RegimeReport {
            regime: regime.clone(),
            curve,
            chance,
            losses,
            missing_mean,
            candidates_mean,
            per_replicate_top,
            dim_mean,
            dim_example: outcomes[0].dim_detail.clone(),
        });
    }
    Ok(EvalReport {
        regimes,
        replicates: replicate_outcomes.len(),
        seed_size,
    })
}
