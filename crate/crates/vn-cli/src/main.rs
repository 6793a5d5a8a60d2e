//! Command-line front end: each verb resolves to an experiment
//! configuration and hands off to the library runner. `--manifest` replays
//! a previous run byte for byte.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vn_core::config::{ExperimentConfig, Mode};
use vn_core::graph::Obfuscation;
use vn_core::nomination::fit_pipeline;
use vn_core::rng::derive;
use vn_core::runner::{load_pair, run_experiment, RunSummary};

#[derive(Parser)]
#[command(
    name = "vn",
    about = "Vertex nomination experiments: simulation, contamination, trimming and exact oracles",
    version
)]
struct Cli {
    /// Replay a prior run from its manifest (ignores the subcommand).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct CommonOverrides {
    /// Configuration file (flat key = value sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Correlated-pair simulation with contamination and regularized
    /// regimes; writes performance curves, losses and audits.
    Simulate(CommonOverrides),
    /// One-shot nomination on a graph pair loaded from files.
    Nominate(NominateArgs),
    /// Sweep the trimming grid on a contaminated simulation and report the
    /// modularity surface.
    TrimSweep(CommonOverrides),
    /// Exact optimal scheme on an enumerable pair space, with an
    /// optimality report.
    Oracle(CommonOverrides),
    /// Evaluate the pipeline on a real graph pair (edge lists plus core
    /// correspondence) across regimes.
    Eval(CommonOverrides),
}

#[derive(Args)]
struct NominateArgs {
    /// First graph edge list.
    #[arg(long)]
    g1: PathBuf,
    /// Second graph edge list.
    #[arg(long)]
    g2: PathBuf,
    /// Core correspondence TSV (`g1_label<TAB>g2_label`).
    #[arg(long)]
    correspondence: PathBuf,
    /// Seed file, one first-graph label per line.
    #[arg(long)]
    seeds: PathBuf,
    /// Vertices of interest (first-graph labels, comma separated).
    #[arg(long, value_delimiter = ',')]
    voi: Vec<String>,
    /// Output CSV (rank, g2_label, score).
    #[arg(long, default_value = "nomination.csv")]
    output: PathBuf,
    /// Optional CSV dump of the aligned second-graph embedding.
    #[arg(long)]
    embeddings_out: Option<PathBuf>,
    /// Fixed embedding dimension (scree elbows otherwise).
    #[arg(long)]
    dim: Option<usize>,
    /// Largest mixture size scanned.
    #[arg(long, default_value_t = 9)]
    k_max: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
}

fn resolved_config(mode: Mode, over: &CommonOverrides) -> Result<ExperimentConfig> {
    let mut cfg = match &over.config {
        Some(path) => ExperimentConfig::from_file(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => bail!("--config is required (or use --manifest to replay a run)"),
    };
    if cfg.mode != mode {
        bail!(
            "config declares mode `{}` but the subcommand expects `{}`",
            cfg.mode.as_str(),
            mode.as_str()
        );
    }
    if let Some(dir) = &over.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = over.master_seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn print_summary(summary: &RunSummary) {
    println!("wrote {}:", summary.output_dir.display());
    for (name, desc) in &summary.artifacts {
        println!("  {name:<32} {desc}");
    }
}

fn nominate_once(args: &NominateArgs) -> Result<()> {
    if args.voi.is_empty() {
        bail!("--voi needs at least one first-graph label");
    }
    let (mut pair, seed_pool) =
        load_pair(&args.g1, &args.g2, &args.correspondence, &args.seeds)?;
    pair.voi = args.voi.clone();
    pair.validate()?;
    let mut obf_rng = derive(args.master_seed, "obfuscation");
    let obf = Obfuscation::fresh(pair.g2.names(), "obf:", &mut obf_rng)?;
    let cfg = vn_core::nomination::PipelineConfig {
        dim_override: args.dim,
        gmm: vn_core::gmm::GmmConfig {
            k_max: args.k_max,
            ..vn_core::gmm::GmmConfig::default()
        },
        ..vn_core::nomination::PipelineConfig::default()
    };
    let mut fit_rng = derive(args.master_seed, "fit");
    let fit = fit_pipeline(&pair, &seed_pool, &obf, &cfg, &mut fit_rng)?;
    let voi: Vec<String> = pair
        .voi
        .iter()
        .filter(|v| !seed_pool.contains(v))
        .cloned()
        .collect();
    if voi.is_empty() {
        bail!("every vertex of interest is a seed");
    }
    let list = fit.rank(&voi)?;
    // Report plain second-graph labels; the obfuscation is internal.
    let mut csv = String::from("rank,g2_label,score\n");
    for (i, (label, score)) in list.order.iter().zip(&list.scores).enumerate() {
        let original = obf.invert(label).unwrap_or(label);
        csv.push_str(&format!("{},{},{}\n", i + 1, original, score));
    }
    std::fs::write(&args.output, csv)?;
    println!(
        "wrote {} ({} candidates, embedding dimension {})",
        args.output.display(),
        list.order.len(),
        fit.dim
    );
    if let Some(path) = &args.embeddings_out {
        // Two files: the first graph's embedding and the aligned second
        // graph's, vertex labels deobfuscated.
        let stem = path.with_extension("");
        let g1_path = PathBuf::from(format!("{}_g1.csv", stem.display()));
        let g2_path = PathBuf::from(format!("{}_g2.csv", stem.display()));
        std::fs::write(&g1_path, fit.g1_embedding().to_csv())?;
        let mut g2_emb = fit.g2_embedding();
        g2_emb.vertex_order = g2_emb
            .vertex_order
            .iter()
            .map(|w| obf.invert(w).unwrap_or(w).to_string())
            .collect();
        std::fs::write(&g2_path, g2_emb.to_csv())?;
        println!(
            "wrote {} and {}",
            g1_path.display(),
            g2_path.display()
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(manifest) = &cli.manifest {
        let cfg = ExperimentConfig::from_file(manifest)
            .with_context(|| format!("loading {}", manifest.display()))?;
        print_summary(&run_experiment(&cfg)?);
        return Ok(());
    }
    match cli.command {
        None => bail!("a subcommand or --manifest is required; see --help"),
        Some(Command::Simulate(over)) => {
            print_summary(&run_experiment(&resolved_config(Mode::Simulate, &over)?)?)
        }
        Some(Command::TrimSweep(over)) => {
            print_summary(&run_experiment(&resolved_config(Mode::Sweep, &over)?)?)
        }
        Some(Command::Oracle(over)) => {
            print_summary(&run_experiment(&resolved_config(Mode::Oracle, &over)?)?)
        }
        Some(Command::Eval(over)) => {
            print_summary(&run_experiment(&resolved_config(Mode::RealData, &over)?)?)
        }
        Some(Command::Nominate(args)) => nominate_once(&args)?,
    }
    Ok(())
}
