//! Experiment runner: ties configuration, generators, the pipeline and the
//! evaluators into reproducible runs whose outputs land in one directory
//! together with a replayable manifest.
//!
//! All artifacts are produced in memory first and written by a single
//! writer; a failing run removes the partially created directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_outcomes, counterpart_ranks, monte_carlo_harness, simulate_replicate, EvalReport,
    HarnessConfig, Regime, RegimeOutcome,
};
use crate::graph::{Graph, Obfuscation};
use crate::models::NominatablePair;
use crate::nomination::fit_pipeline;
use crate::oracle::{
    bayes_optimal_scheme, enumerate_support, exact_loss, oracle_audit_json,
    partition_by_isomorphism, random_class_scheme, rank_probability_vector, LossKind,
};
use crate::regularization::{sweep_trim_params, trim, SweepConfig, TrimConfig};
use crate::rng::derive_indexed;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a run produced: file names (relative to the output directory) with
/// one-line descriptions.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub artifacts: Vec<(String, String)>,
}

/// Execute the configured experiment. On failure, a directory created by
/// this call is removed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let created = !cfg.output_dir.exists();
    if created {
        std::fs::create_dir_all(&cfg.output_dir)?;
    }
    let result = run_inner(cfg);
    if result.is_err() && created {
        let _ = std::fs::remove_dir_all(&cfg.output_dir);
    }
    result
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let mut files: Vec<(String, String, Vec<u8>)> = Vec::new();
    files.push((
        "manifest.cfg".into(),
        "replayable run manifest".into(),
        cfg.to_manifest_string(VERSION).into_bytes(),
    ));
    let mut log = String::new();
    match cfg.mode {
        Mode::Simulate => run_simulate(cfg, &mut files, &mut log)?,
        Mode::Sweep => run_sweep(cfg, &mut files, &mut log)?,
        Mode::Oracle => run_oracle(cfg, &mut files, &mut log)?,
        Mode::RealData => run_real_data(cfg, &mut files, &mut log)?,
    }
    files.push(("run.log".into(), "run log".into(), log.into_bytes()));
    let mut artifacts = Vec::new();
    for (name, desc, bytes) in files {
        std::fs::write(cfg.output_dir.join(&name), bytes)?;
        artifacts.push((name, desc));
    }
    Ok(RunSummary {
        output_dir: cfg.output_dir.clone(),
        artifacts,
    })
}

fn regime_file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '.' { c } else { '_' })
        .collect()
}

fn push_report(
    report: &EvalReport,
    loss_ks: &[usize],
    files: &mut Vec<(String, String, Vec<u8>)>,
    log: &mut String,
) {
    for regime in &report.regimes {
        files.push((
            format!("curve_{}.csv", regime_file_stem(&regime.regime)),
            format!("performance curve for {}", regime.regime),
            regime.curve_csv().into_bytes(),
        ));
        let _ = writeln!(
            log,
            "regime {}: mean candidates {:.2}, mean unrecoverable v.o.i. {:.2}, \
             mean embedding dim {:.2} (replicate 0: {})",
            regime.regime,
            regime.candidates_mean,
            regime.missing_mean,
            regime.dim_mean,
            regime.dim_example
        );
    }
    files.push((
        "summary.tsv".into(),
        "mean top-x counts per regime".into(),
        report.summary_tsv(loss_ks).into_bytes(),
    ));
    let mut losses = String::from(
        "regime,k,recall_mean,recall_se,precision_mean,precision_se\n",
    );
    for regime in &report.regimes {
        for row in &regime.losses {
            losses.push_str(&format!(
                "{},{},{},{},{},{}\n",
                regime.regime,
                row.k,
                row.recall_mean,
                row.recall_se,
                row.precision_mean,
                row.precision_se
            ));
        }
    }
    files.push((
        "losses.csv".into(),
        "level-k recall/precision losses".into(),
        losses.into_bytes(),
    ));
}

fn harness_config(cfg: &ExperimentConfig) -> Result<HarnessConfig> {
    Ok(HarnessConfig {
        params: cfg.sbm_params()?,
        rho: cfg.rho,
        adversary: cfg.adversary,
        regimes: cfg.regimes.clone(),
        replicates: cfg.replicates,
        seed_size: cfg.seed_size,
        x_max: cfg.x_max,
        loss_ks: cfg.loss_ks.clone(),
        pipeline: cfg.pipeline_config(),
        trim_semantics: cfg.trim_semantics,
        master_seed: cfg.master_seed,
    })
}

fn run_simulate(
    cfg: &ExperimentConfig,
    files: &mut Vec<(String, String, Vec<u8>)>,
    log: &mut String,
) -> Result<()> {
    let hc = harness_config(cfg)?;
    let report = monte_carlo_harness(&hc)?;
    push_report(&report, &cfg.loss_ks, files, log);

    // Contamination audit, one JSON line per replicate (the same draws the
    // harness used, by construction of the derived streams).
    let mut audit = String::new();
    for i in 0..cfg.replicates {
        let data = simulate_replicate(&hc, i)?;
        audit.push_str(&data.record.audit_json().to_string());
        audit.push('\n');
    }
    files.push((
        "contamination.jsonl".into(),
        "per-replicate contamination audit".into(),
        audit.into_bytes(),
    ));

    if cfg.export_pair {
        let data = simulate_replicate(&hc, 0)?;
        let mut g1 = Vec::new();
        data.g1_ideal.write_edge_list(&mut g1)?;
        files.push((
            "pair_g1.edges".into(),
            "replicate 0 first graph (uncontaminated vertices)".into(),
            g1,
        ));
        let mut g2 = Vec::new();
        data.record.graph.write_edge_list(&mut g2)?;
        files.push((
            "pair_g2.edges".into(),
            "replicate 0 contaminated second graph".into(),
            g2,
        ));
        let mut tsv = String::new();
        for name in &data.untouched {
            tsv.push_str(&format!("{name}\t{name}\n"));
        }
        files.push((
            "pair_correspondence.tsv".into(),
            "replicate 0 core correspondence".into(),
            tsv.into_bytes(),
        ));
    }
    Ok(())
}

fn run_sweep(
    cfg: &ExperimentConfig,
    files: &mut Vec<(String, String, Vec<u8>)>,
    log: &mut String,
) -> Result<()> {
    let hc = harness_config(cfg)?;
    let data = simulate_replicate(&hc, 0)?;
    let mut audit = data.record.audit_json().to_string();
    audit.push('\n');
    files.push((
        "contamination.jsonl".into(),
        "contamination audit for the swept graph".into(),
        audit.into_bytes(),
    ));
    // Fresh seed sets per sweep replicate, drawn from the uncontaminated
    // vertices exactly as nomination seeds are.
    let mut seed_sets = Vec::with_capacity(cfg.sweep_replicates);
    for rep in 0..cfg.sweep_replicates {
        let mut rng = derive_indexed(cfg.master_seed, "sweep-seeds", rep as u64);
        let picks =
            rand::seq::index::sample(&mut rng, data.untouched.len(), cfg.seed_size);
        let mut idx: Vec<usize> = picks.iter().collect();
        idx.sort_unstable();
        seed_sets.push(idx.iter().map(|&j| data.untouched[j].clone()).collect());
    }
    let sweep_cfg = SweepConfig {
        grid: cfg.sweep_grid(),
        semantics: cfg.trim_semantics,
        gmm: cfg.pipeline_config().gmm,
        dim_override: cfg.dim_override,
    };
    let mut rng = derive_indexed(cfg.master_seed, "sweep", 0);
    let grid = sweep_trim_params(&data.record.graph, &sweep_cfg, &seed_sets, &mut rng)?;
    files.push((
        "modularity_grid.csv".into(),
        "mean clustering modularity per trim point".into(),
        grid.to_csv().into_bytes(),
    ));
    let _ = writeln!(
        log,
        "modularity argmax at (l, h) = ({}, {})",
        grid.argmax.0, grid.argmax.1
    );
    Ok(())
}

fn run_oracle(
    cfg: &ExperimentConfig,
    files: &mut Vec<(String, String, Vec<u8>)>,
    log: &mut String,
) -> Result<()> {
    let spec = cfg.oracle_spec();
    let dist = enumerate_support(&spec)?;
    if dist.support.is_empty() {
        return Err(Error::InvalidParam(
            "orbit restriction removed the whole support".into(),
        ));
    }
    let partition = partition_by_isomorphism(&dist)?;
    let optimal = bayes_optimal_scheme(&dist, &partition)?;
    let mut losses = Vec::new();
    for &k in &cfg.oracle_loss_ks {
        let recall = exact_loss(&dist, &optimal, k, LossKind::Recall)?;
        let precision = exact_loss(&dist, &optimal, k, LossKind::Precision)?;
        losses.push((k, recall, precision));
    }
    files.push((
        "oracle.json".into(),
        "classes, label probabilities and exact losses".into(),
        serde_json::to_string_pretty(&oracle_audit_json(&dist, &partition, &optimal, &losses))
            .expect("serializable")
            .into_bytes(),
    ));

    // Optimality report against random label-consistent competitors.
    let mut rng = derive_indexed(cfg.master_seed, "oracle-competitors", 0);
    let mut report = String::new();
    let _ = writeln!(
        report,
        "support {} pairs in {} classes; removed mass {}",
        dist.support.len(),
        partition.classes.len(),
        dist.removed_mass
    );
    let mut all_ok = true;
    for &k in &cfg.oracle_loss_ks {
        let opt_r = exact_loss(&dist, &optimal, k, LossKind::Recall)?;
        let opt_p = exact_loss(&dist, &optimal, k, LossKind::Precision)?;
        let mut worst_r = opt_r;
        let mut worst_p = opt_p;
        let mut violations = 0usize;
        for _ in 0..cfg.oracle_competitors {
            let rival = random_class_scheme(&dist, &partition, &mut rng)?;
            let r = exact_loss(&dist, &rival, k, LossKind::Recall)?;
            let p = exact_loss(&dist, &rival, k, LossKind::Precision)?;
            if opt_r > r + 1e-12 || opt_p > p + 1e-12 {
                violations += 1;
            }
            worst_r = worst_r.max(r);
            worst_p = worst_p.max(p);
        }
        all_ok &= violations == 0;
        let _ = writeln!(
            report,
            "k={k}: optimal recall {opt_r:.6} precision {opt_p:.6}; \
             worst competitor recall {worst_r:.6} precision {worst_p:.6}; \
             violations {violations}/{}",
            cfg.oracle_competitors
        );
    }
    // Prefix domination of the rank-cover probabilities, class by class.
    let mut majorization_ok = true;
    let mut check_rng = derive_indexed(cfg.master_seed, "oracle-majorization", 0);
    for c in 0..partition.classes.len() {
        let p_opt = rank_probability_vector(&dist, &partition, &optimal, c)?;
        for _ in 0..20 {
            let rival = random_class_scheme(&dist, &partition, &mut check_rng)?;
            let p_riv = rank_probability_vector(&dist, &partition, &rival, c)?;
            let mut acc_o = 0.0;
            let mut acc_r = 0.0;
            for t in 0..p_opt.len() {
                acc_o += p_opt[t];
                acc_r += p_riv[t];
                if acc_o + 1e-12 < acc_r {
                    majorization_ok = false;
                }
            }
        }
    }
    let _ = writeln!(report, "prefix majorization: {}", if majorization_ok { "ok" } else { "VIOLATED" });
    let _ = writeln!(report, "optimality: {}", if all_ok { "ok" } else { "VIOLATED" });
    files.push((
        "optimality.txt".into(),
        "optimality verification against random schemes".into(),
        report.into_bytes(),
    ));
    let _ = writeln!(log, "oracle optimality: {}", if all_ok && majorization_ok { "ok" } else { "VIOLATED" });
    Ok(())
}

/// Load a graph pair from two edge lists, a tab-separated core
/// correspondence, and a seed pool file (one first-graph label per line).
pub fn load_pair(
    g1_path: &Path,
    g2_path: &Path,
    correspondence_path: &Path,
    seeds_path: &Path,
) -> Result<(NominatablePair, Vec<String>)> {
    let g1 = Graph::read_edge_list(g1_path)?;
    let g2 = Graph::read_edge_list(g2_path)?;
    let display = correspondence_path.display().to_string();
    let text = std::fs::read_to_string(correspondence_path)?;
    let mut correspondence: BTreeMap<String, String> = BTreeMap::new();
    let mut images: BTreeMap<String, usize> = BTreeMap::new();
    let mut core = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split('\t').map(str::trim).collect();
        if toks.len() != 2 || toks[0].is_empty() || toks[1].is_empty() {
            return Err(Error::Parse {
                path: display.clone(),
                line: lineno,
                msg: "expected `g1_label<TAB>g2_label`".into(),
            });
        }
        if g1.index_of(toks[0]).is_none() {
            return Err(Error::Parse {
                path: display.clone(),
                line: lineno,
                msg: format!("`{}` is not a vertex of the first graph", toks[0]),
            });
        }
        if g2.index_of(toks[1]).is_none() {
            return Err(Error::Parse {
                path: display.clone(),
                line: lineno,
                msg: format!("`{}` is not a vertex of the second graph", toks[1]),
            });
        }
        if correspondence.insert(toks[0].into(), toks[1].into()).is_some() {
            return Err(Error::Parse {
                path: display.clone(),
                line: lineno,
                msg: format!("`{}` mapped twice", toks[0]),
            });
        }
        if images.insert(toks[1].into(), lineno).is_some() {
            return Err(Error::Parse {
                path: display.clone(),
                line: lineno,
                msg: format!("`{}` is the image of two vertices", toks[1]),
            });
        }
        core.push(toks[0].to_string());
    }
    let junk1: Vec<String> = g1
        .names()
        .iter()
        .filter(|v| !correspondence.contains_key(*v))
        .cloned()
        .collect();
    let junk2: Vec<String> = g2
        .names()
        .iter()
        .filter(|v| !images.contains_key(*v))
        .cloned()
        .collect();

    let seeds_display = seeds_path.display().to_string();
    let seed_text = std::fs::read_to_string(seeds_path)?;
    let mut seed_pool = Vec::new();
    for (lineno, raw) in seed_text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !correspondence.contains_key(line) {
            return Err(Error::Parse {
                path: seeds_display.clone(),
                line: lineno + 1,
                msg: format!("seed `{line}` has no core correspondence"),
            });
        }
        seed_pool.push(line.to_string());
    }
    let pair = NominatablePair {
        g1,
        g2,
        core,
        junk1,
        junk2,
        voi: Vec::new(),
        correspondence,
    };
    pair.validate()?;
    Ok((pair, seed_pool))
}

fn run_real_data(
    cfg: &ExperimentConfig,
    files: &mut Vec<(String, String, Vec<u8>)>,
    log: &mut String,
) -> Result<()> {
    let (pair, seed_pool) = load_pair(
        &cfg.data_g1,
        &cfg.data_g2,
        &cfg.data_correspondence,
        &cfg.data_seeds,
    )?;
    if seed_pool.len() < cfg.seed_size {
        return Err(Error::Config(format!(
            "seed pool has {} vertices, need {}",
            seed_pool.len(),
            cfg.seed_size
        )));
    }
    let _ = writeln!(
        log,
        "pair: |V1|={} |V2|={} core={} junk1={} junk2={}",
        pair.g1.n(),
        pair.g2.n(),
        pair.core.len(),
        pair.junk1.len(),
        pair.junk2.len()
    );
    // The idealized pair restricts both graphs to the core.
    let core_images: Vec<String> = pair
        .core
        .iter()
        .map(|c| pair.correspondence[c].clone())
        .collect();
    let g1_core = pair.g1.induced_subgraph(&pair.core)?;
    let g2_core = pair.g2.induced_subgraph(&core_images)?;
    let pipeline = cfg.pipeline_config();

    let outcomes_per_rep: Vec<Result<Vec<RegimeOutcome>>> =
        (0..cfg.replicates)
            .map(|i| -> Result<Vec<RegimeOutcome>> {
                let mut seed_rng = derive_indexed(cfg.master_seed, "seeds", i as u64);
                let picks =
                    rand::seq::index::sample(&mut seed_rng, seed_pool.len(), cfg.seed_size);
                let mut idx: Vec<usize> = picks.iter().collect();
                idx.sort_unstable();
                let seeds: Vec<String> = idx.iter().map(|&j| seed_pool[j].clone()).collect();
                let sweep: Vec<String> = pair
                    .core
                    .iter()
                    .filter(|v| !seeds.contains(v))
                    .cloned()
                    .collect();
                let mut obf_rng = derive_indexed(cfg.master_seed, "obfuscation", i as u64);
                let obf = Obfuscation::fresh(pair.g2.names(), "obf:", &mut obf_rng)?;
                let mut outcomes = Vec::with_capacity(cfg.regimes.len());
                for regime in &cfg.regimes {
                    let (g1r, g2r) = match regime {
                        Regime::Idealized => (g1_core.clone(), g2_core.clone()),
                        Regime::Contaminated => (g1_core.clone(), pair.g2.clone()),
                        Regime::Regularized { low, high } => {
                            let seed_images: Vec<String> = seeds
                                .iter()
                                .map(|s| pair.correspondence[s].clone())
                                .collect();
                            let tc = TrimConfig::new(*low, *high)?
                                .protecting(seed_images)
                                .with_semantics(cfg.trim_semantics);
                            (g1_core.clone(), trim(&pair.g2, &tc)?)
                        }
                    };
                    let sub_core: Vec<String> = pair
                        .core
                        .iter()
                        .filter(|c| g2r.index_of(&pair.correspondence[*c]).is_some())
                        .cloned()
                        .collect();
                    let sub_pair = NominatablePair {
                        junk1: g1r
                            .names()
                            .iter()
                            .filter(|v| !sub_core.contains(v))
                            .cloned()
                            .collect(),
                        junk2: g2r
                            .names()
                            .iter()
                            .filter(|v| {
                                !sub_core
                                    .iter()
                                    .any(|c| &pair.correspondence[c] == *v)
                            })
                            .cloned()
                            .collect(),
                        correspondence: sub_core
                            .iter()
                            .map(|c| (c.clone(), pair.correspondence[c].clone()))
                            .collect(),
                        core: sub_core,
                        voi: Vec::new(),
                        g1: g1r,
                        g2: g2r,
                    };
                    sub_pair.validate()?;
                    let mut fit_rng = derive_indexed(
                        cfg.master_seed,
                        &format!("fit:{}", regime.label()),
                        i as u64,
                    );
                    let fit = fit_pipeline(&sub_pair, &seeds, &obf, &pipeline, &mut fit_rng)?;
                    let mut per_voi_ranks = Vec::with_capacity(sweep.len());
                    let mut missing = 0usize;
                    for v in &sweep {
                        let counterpart = obf
                            .apply(&pair.correspondence[v])
                            .expect("full obfuscation");
                        if sub_pair.counterpart(v).is_none() {
                            per_voi_ranks.push(None);
                            missing += 1;
                            continue;
                        }
                        let list = fit.rank(std::slice::from_ref(v))?;
                        per_voi_ranks.push(list.rank_of(counterpart));
                    }
                    let multi_list = fit.rank(&sweep)?;
                    let counterparts: Vec<String> = sweep
                        .iter()
                        .map(|v| {
                            obf.apply(&pair.correspondence[v])
                                .expect("full obfuscation")
                                .to_string()
                        })
                        .collect();
                    let multi_ranks = counterpart_ranks(&multi_list, &counterparts);
                    let (e1, e2) = fit.dim_elbows;
                    outcomes.push(RegimeOutcome {
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
                Ok(outcomes)
            })
            .collect();
    let mut collected = Vec::with_capacity(cfg.replicates);
    for o in outcomes_per_rep {
        collected.push(o?);
    }
    let labels: Vec<String> = cfg.regimes.iter().map(|r| r.label()).collect();
    let report = aggregate_outcomes(&labels, &collected, cfg.x_max, &cfg.loss_ks, cfg.seed_size)?;
    push_report(&report, &cfg.loss_ks, files, log);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn tiny_sim_config(dir: &Path, seed: u64) -> ExperimentConfig {
        let text = format!(
            "
[experiment]
mode = simulate
output_dir = {}
master_seed = {seed}

[model]
n = 60
p = 0.5
q = 0.5
r = 0.2
rho = 0.9

[adversary]
pi_plus = 0.15
pi_minus = 0.15
s_plus = 0.7
s_minus = 0.7

[evaluation]
replicates = 2
seed_size = 5
x_max = 10
loss_ks = 1,5
regimes = idealized,contaminated,regularized(0.1,0.1)
export_pair = true

[pipeline]
dim_override = 2
k_max = 3
restarts = 2
",
            dir.display()
        );
        ExperimentConfig::parse(&text, "test.cfg").unwrap()
    }

    #[test]
    fn simulate_run_produces_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let cfg = tiny_sim_config(&out, 5);
        let summary = run_experiment(&cfg).unwrap();
        let names: Vec<&str> = summary.artifacts.iter().map(|(n, _)| n.as_str()).collect();
        for expect in [
            "manifest.cfg",
            "curve_idealized.csv",
            "curve_contaminated.csv",
            "summary.tsv",
            "losses.csv",
            "contamination.jsonl",
            "pair_g1.edges",
            "pair_correspondence.tsv",
            "run.log",
        ] {
            assert!(names.contains(&expect), "missing {expect}: {names:?}");
        }
        let curve = std::fs::read_to_string(out.join("curve_idealized.csv")).unwrap();
        assert!(curve.starts_with("x,mean,se,chance\n"));
        assert_eq!(curve.lines().count(), 11);
    }

    #[test]
    fn identical_manifests_give_identical_bytes() {
        let tmp = tempfile::tempdir().unwrap();
        let out_a = tmp.path().join("a");
        let out_b = tmp.path().join("b");
        let cfg_a = tiny_sim_config(&out_a, 11);
        run_experiment(&cfg_a).unwrap();
        // Replay from the manifest into a second directory.
        let manifest = std::fs::read_to_string(out_a.join("manifest.cfg")).unwrap();
        let replay = manifest.replace(
            &format!("output_dir = {}", out_a.display()),
            &format!("output_dir = {}", out_b.display()),
        );
        let cfg_b = ExperimentConfig::parse(&replay, "manifest.cfg").unwrap();
        run_experiment(&cfg_b).unwrap();
        for file in [
            "curve_idealized.csv",
            "curve_contaminated.csv",
            "curve_regularized_0.1_0.1_.csv",
            "summary.tsv",
            "losses.csv",
            "contamination.jsonl",
        ] {
            let a = std::fs::read(out_a.join(file)).unwrap();
            let b = std::fs::read(out_b.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs");
        }
    }

    #[test]
    fn failed_run_removes_created_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("gone");
        let mut cfg = tiny_sim_config(&out, 5);
        cfg.seed_size = 1000; // more seeds than vertices
        assert!(run_experiment(&cfg).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn oracle_run_produces_audit() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("oracle");
        let text = format!(
            "
[experiment]
mode = oracle
output_dir = {}
master_seed = 3

[oracle]
n = 3
m = 3
p1 = 0.3
p2 = 0.3
voi = 1
competitors = 25
loss_ks = 1,2
",
            out.display()
        );
        let cfg = ExperimentConfig::parse(&text, "t.cfg").unwrap();
        run_experiment(&cfg).unwrap();
        let audit: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("oracle.json")).unwrap())
                .unwrap();
        assert!(audit["support_size"].as_u64().unwrap() > 0);
        let report = std::fs::read_to_string(out.join("optimality.txt")).unwrap();
        assert!(report.contains("violations 0/25"), "{report}");
        assert!(report.contains("prefix majorization: ok"), "{report}");
    }

    #[test]
    fn sweep_run_produces_grid() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("sweep");
        let text = format!(
            "
[experiment]
mode = sweep
output_dir = {}
master_seed = 9

[model]
n = 60
p = 0.5
q = 0.5
r = 0.2
rho = 0.9

[adversary]
pi_plus = 0.15
pi_minus = 0.15
s_plus = 0.7
s_minus = 0.7

[evaluation]
seed_size = 5

[pipeline]
dim_override = 2
k_max = 3
restarts = 2

[sweep]
grid_l = 0,0.1
grid_h = 0
replicates = 2
",
            out.display()
        );
        let cfg = ExperimentConfig::parse(&text, "t.cfg").unwrap();
        run_experiment(&cfg).unwrap();
        let grid = std::fs::read_to_string(out.join("modularity_grid.csv")).unwrap();
        assert!(grid.starts_with("l,h,mean_q,se_q,valid\n"));
        assert_eq!(grid.lines().count(), 3);
    }

    #[test]
    fn load_pair_and_real_data_run() {
        let tmp = tempfile::tempdir().unwrap();
        // Two correlated-ish small graphs sharing labels s1..s20 under an
        // explicit correspondence with renamed g2 labels.
        let params = crate::models::SbmParams::two_block(24, 0.6, 0.6, 0.15).unwrap();
        let mut rng = crate::rng::derive(91, "real-data");
        let (g1, g2, _) = crate::models::sample_corr_sbm(0.9, &params, &mut rng).unwrap();
        let g1_path = tmp.path().join("g1.edges");
        let g2_path = tmp.path().join("g2.edges");
        let mut buf = Vec::new();
        g1.write_edge_list(&mut buf).unwrap();
        std::fs::write(&g1_path, &buf).unwrap();
        // Rename g2 vertices to a different token space.
        let obf = Obfuscation::prefixed(g2.names(), "z").unwrap();
        let g2_renamed = g2.relabel(&obf).unwrap();
        let mut buf = Vec::new();
        g2_renamed.write_edge_list(&mut buf).unwrap();
        std::fs::write(&g2_path, &buf).unwrap();
        let corr_path = tmp.path().join("core.tsv");
        let mut tsv = String::from("# core correspondence\n");
        for v in 1..=20 {
            tsv.push_str(&format!("{v}\tz{v}\n"));
        }
        std::fs::write(&corr_path, tsv).unwrap();
        let seeds_path = tmp.path().join("seeds.txt");
        let seeds: Vec<String> = (1..=12).map(|v| v.to_string()).collect();
        std::fs::write(&seeds_path, seeds.join("\n")).unwrap();

        let (pair, pool) = load_pair(&g1_path, &g2_path, &corr_path, &seeds_path).unwrap();
        assert_eq!(pair.core.len(), 20);
        assert_eq!(pair.junk1.len(), 4);
        assert_eq!(pair.junk2.len(), 4);
        assert_eq!(pool.len(), 12);

        let out = tmp.path().join("run");
        let text = format!(
            "
[experiment]
mode = real-data
output_dir = {}
master_seed = 4

[evaluation]
replicates = 2
seed_size = 6
x_max = 8
loss_ks = 1,5
regimes = idealized,contaminated,regularized(0.1,0)

[pipeline]
dim_override = 2
k_max = 3
restarts = 2

[data]
g1 = {}
g2 = {}
correspondence = {}
seeds = {}
",
            out.display(),
            g1_path.display(),
            g2_path.display(),
            corr_path.display(),
            seeds_path.display()
        );
        let cfg = ExperimentConfig::parse(&text, "t.cfg").unwrap();
        let summary = run_experiment(&cfg).unwrap();
        let names: Vec<&str> = summary.artifacts.iter().map(|(n, _)| n.as_str()).collect();
        assert!(names.contains(&"curve_idealized.csv"));
        assert!(names.contains(&"curve_regularized_0.1_0_.csv"));
    }

    #[test]
    fn load_pair_rejects_bad_files() {
        let tmp = tempfile::tempdir().unwrap();
        let g_path = tmp.path().join("g.edges");
        std::fs::write(&g_path, "a b\nb c\n").unwrap();
        let corr = tmp.path().join("c.tsv");
        std::fs::write(&corr, "a\ta\nb\ta\n").unwrap(); // image used twice
        let seeds = tmp.path().join("s.txt");
        std::fs::write(&seeds, "a\n").unwrap();
        let err = load_pair(&g_path, &g_path, &corr, &seeds).unwrap_err();
        assert!(err.to_string().contains("image of two"), "{err}");

        std::fs::write(&corr, "a\tq\n").unwrap(); // unknown g2 vertex
        let err = load_pair(&g_path, &g_path, &corr, &seeds).unwrap_err();
        assert!(err.to_string().contains("not a vertex"), "{err}");

        std::fs::write(&corr, "a\ta\n").unwrap();
        std::fs::write(&seeds, "zz\n").unwrap();
        let err = load_pair(&g_path, &g_path, &corr, &seeds).unwrap_err();
        assert!(err.to_string().contains("no core correspondence"), "{err}");
    }
}
