//! Flat experiment configuration: `[section]` headers over `key = value`
//! lines, `#` comments. No nesting, so any tooling parses it trivially. The
//! resolved configuration serializes back to the same format as the run
//! manifest, and replaying a manifest reproduces the run byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::adversary::AdversaryConfig;
use crate::error::{Error, Result};
use crate::evaluation::Regime;
use crate::gmm::GmmConfig;
use crate::models::SbmParams;
use crate::nomination::{ClusteringMode, PipelineConfig};
use crate::oracle::EnumerableSpec;
use crate::regularization::TrimSemantics;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    RealData,
    Oracle,
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::RealData => "real-data",
            Mode::Oracle => "oracle",
            Mode::Sweep => "sweep",
        }
    }
}

/// Raw parsed file: (section, key) -> (value, line number).
struct RawConfig {
    path: String,
    values: BTreeMap<(String, String), (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str, path: &str) -> Result<RawConfig> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return Err(Error::Parse {
                        path: path.into(),
                        line: lineno,
                        msg: format!("malformed section header `{line}`"),
                    });
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno,
                    msg: "empty key".into(),
                });
            }
            if values
                .insert((section.clone(), key.clone()), (value, lineno))
                .is_some()
            {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno,
                    msg: format!("duplicate key `{key}` in section `[{section}]`"),
                });
            }
        }
        Ok(RawConfig {
            path: path.into(),
            values,
        })
    }

    fn err(&self, section: &str, key: &str, line: usize, msg: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: format!("[{section}] {key}: {msg}"),
        }
    }

    fn get(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.values.get(&(section.to_string(), key.to_string()))
    }

    fn required(&self, section: &str, key: &str) -> Result<&str> {
        match self.get(section, key) {
            Some((v, _)) if !v.is_empty() => Ok(v),
            Some((_, line)) => Err(self.err(section, key, *line, "empty value".into())),
            None => Err(Error::Config(format!(
                "{}: missing required key `{key}` in section `[{section}]`",
                self.path
            ))),
        }
    }

    fn parse_or<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(default),
            Some((v, _)) if v.is_empty() => Ok(default),
            Some((v, line)) => v
                .parse::<T>()
                .map_err(|e| self.err(section, key, *line, format!("`{v}`: {e}"))),
        }
    }

}

/// Split on commas outside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ',' if depth == 0 => {
                parts.push(cur.trim().to_string());
                cur.clear();
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        parts.push(cur.trim().to_string());
    }
    parts.retain(|p| !p.is_empty());
    parts
}

fn parse_regime(token: &str) -> Result<Regime> {
    match token {
        "idealized" => Ok(Regime::Idealized),
        "contaminated" => Ok(Regime::Contaminated),
        _ => {
            let inner = token
                .strip_prefix("regularized(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::Config(format!("unknown regime `{token}`")))?;
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(Error::Config(format!("regime `{token}` needs two fractions")));
            }
            let low = parts[0]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("regime `{token}`: {e}")))?;
            let high = parts[1]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("regime `{token}`: {e}")))?;
            Ok(Regime::Regularized { low, high })
        }
    }
}

/// Everything a run needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub output_dir: PathBuf,
    pub master_seed: u64,

    // simulate / sweep
    pub model_n: usize,
    pub model_p: f64,
    pub model_q: f64,
    pub model_r: f64,
    pub rho: f64,
    pub adversary: AdversaryConfig,

    // evaluation
    pub regimes: Vec<Regime>,
    pub replicates: usize,
    pub seed_size: usize,
    pub x_max: usize,
    pub loss_ks: Vec<usize>,
    pub export_pair: bool,

    // pipeline
    pub dim_override: Option<usize>,
    pub gmm_k_min: usize,
    pub gmm_k_max: usize,
    pub gmm_restarts: usize,
    pub clustering: ClusteringMode,
    pub trim_semantics: TrimSemantics,

    // sweep
    pub sweep_grid_l: Vec<f64>,
    pub sweep_grid_h: Vec<f64>,
    pub sweep_replicates: usize,

    // oracle
    pub oracle_n: usize,
    pub oracle_m: usize,
    pub oracle_core: usize,
    pub oracle_p1: f64,
    pub oracle_p2: f64,
    pub oracle_rho: f64,
    pub oracle_voi: Vec<String>,
    pub oracle_competitors: usize,
    pub oracle_loss_ks: Vec<usize>,

    // real data
    pub data_g1: PathBuf,
    pub data_g2: PathBuf,
    pub data_correspondence: PathBuf,
    pub data_seeds: PathBuf,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, path: &str) -> Result<ExperimentConfig> {
        let raw = RawConfig::parse(text, path)?;
        let mode = match raw.required("experiment", "mode")? {
            "simulate" => Mode::Simulate,
            "real-data" => Mode::RealData,
            "oracle" => Mode::Oracle,
            "sweep" => Mode::Sweep,
            other => {
                return Err(Error::Config(format!(
                    "{path}: unknown mode `{other}` (simulate|real-data|oracle|sweep)"
                )))
            }
        };
        let output_dir = PathBuf::from(raw.required("experiment", "output_dir")?);
        let master_seed: u64 = raw.parse_or("experiment", "master_seed", 0)?;

        let model_n: usize = raw.parse_or("model", "n", 200)?;
        let model_p: f64 = raw.parse_or("model", "p", 0.4)?;
        let model_q: f64 = raw.parse_or("model", "q", 0.5)?;
        let model_r: f64 = raw.parse_or("model", "r", 0.3)?;
        let rho: f64 = raw.parse_or("model", "rho", 0.7)?;
        let adversary = AdversaryConfig::new(
            raw.parse_or("adversary", "pi_plus", 0.1)?,
            raw.parse_or("adversary", "pi_minus", 0.1)?,
            raw.parse_or("adversary", "s_plus", 0.8)?,
            raw.parse_or("adversary", "s_minus", 0.8)?,
        )?;

        let regimes = match raw.get("evaluation", "regimes") {
            Some((v, _)) if !v.is_empty() => {
                let mut regimes = Vec::new();
                for token in split_top_level(v) {
                    regimes.push(parse_regime(&token)?);
                }
                regimes
            }
            _ => vec![
                Regime::Idealized,
                Regime::Contaminated,
                Regime::Regularized { low: 0.1, high: 0.1 },
            ],
        };
        let replicates: usize = raw.parse_or("evaluation", "replicates", 50)?;
        let seed_size: usize = raw.parse_or("evaluation", "seed_size", 10)?;
        let x_max: usize = raw.parse_or("evaluation", "x_max", 30)?;
        let loss_ks = match raw.get("evaluation", "loss_ks") {
            Some((v, line)) if !v.is_empty() => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<usize>().map_err(|e| {
                        raw.err("evaluation", "loss_ks", *line, format!("`{s}`: {e}"))
                    })
                })
                .collect::<Result<Vec<usize>>>()?,
            _ => vec![1, 5, 10, 15, 20, 30],
        };
        let export_pair: bool = raw.parse_or("evaluation", "export_pair", false)?;

        let dim_override = match raw.get("pipeline", "dim_override") {
            Some((v, line)) if !v.is_empty() => Some(v.parse::<usize>().map_err(|e| {
                raw.err("pipeline", "dim_override", *line, format!("`{v}`: {e}"))
            })?),
            _ => None,
        };
        let gmm_k_min: usize = raw.parse_or("pipeline", "k_min", 1)?;
        let gmm_k_max: usize = raw.parse_or("pipeline", "k_max", 9)?;
        let gmm_restarts: usize = raw.parse_or("pipeline", "restarts", 5)?;
        let clustering = match raw.parse_or("pipeline", "clustering", "pooled".to_string())? {
            s if s == "pooled" => ClusteringMode::Pooled,
            s if s == "second-graph" => ClusteringMode::SecondGraphOnly,
            s => {
                return Err(Error::Config(format!(
                    "{path}: unknown clustering `{s}` (pooled|second-graph)"
                )))
            }
        };
        let trim_semantics =
            match raw.parse_or("pipeline", "trim_semantics", "prose".to_string())? {
                s if s == "prose" => TrimSemantics::Prose,
                s if s == "literal" => TrimSemantics::Literal,
                s => {
                    return Err(Error::Config(format!(
                        "{path}: unknown trim_semantics `{s}` (prose|literal)"
                    )))
                }
            };

        let parse_floats = |section: &str, key: &str, default: &str| -> Result<Vec<f64>> {
            let raw_val = match raw.get(section, key) {
                Some((v, _)) if !v.is_empty() => v.clone(),
                _ => default.to_string(),
            };
            raw_val
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("{path}: [{section}] {key}: `{s}`: {e}")))
                })
                .collect()
        };
        let sweep_grid_l = parse_floats("sweep", "grid_l", "0,0.05,0.1,0.15,0.2,0.25")?;
        let sweep_grid_h = parse_floats("sweep", "grid_h", "0,0.05,0.1,0.15,0.2,0.25")?;
        let sweep_replicates: usize = raw.parse_or("sweep", "replicates", 8)?;

        let oracle_n: usize = raw.parse_or("oracle", "n", 3)?;
        let oracle_m: usize = raw.parse_or("oracle", "m", 3)?;
        let oracle_core: usize = raw.parse_or("oracle", "core", oracle_n.min(oracle_m))?;
        let oracle_p1: f64 = raw.parse_or("oracle", "p1", 0.3)?;
        let oracle_p2: f64 = raw.parse_or("oracle", "p2", 0.3)?;
        let oracle_rho: f64 = raw.parse_or("oracle", "rho", 0.0)?;
        let oracle_voi = match raw.get("oracle", "voi") {
            Some((v, _)) if !v.is_empty() => v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            _ => vec!["1".to_string()],
        };
        let oracle_competitors: usize = raw.parse_or("oracle", "competitors", 1000)?;
        let oracle_loss_ks = match raw.get("oracle", "loss_ks") {
            Some((v, line)) if !v.is_empty() => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|e| raw.err("oracle", "loss_ks", *line, format!("`{s}`: {e}")))
                })
                .collect::<Result<Vec<usize>>>()?,
            _ => (1..oracle_m).collect(),
        };

        let data_path = |key: &str| -> PathBuf {
            raw.get("data", key)
                .map(|(v, _)| PathBuf::from(v))
                .unwrap_or_default()
        };
        let cfg = ExperimentConfig {
            mode,
            output_dir,
            master_seed,
            model_n,
            model_p,
            model_q,
            model_r,
            rho,
            adversary,
            regimes,
            replicates,
            seed_size,
            x_max,
            loss_ks,
            export_pair,
            dim_override,
            gmm_k_min,
            gmm_k_max,
            gmm_restarts,
            clustering,
            trim_semantics,
            sweep_grid_l,
            sweep_grid_h,
            sweep_replicates,
            oracle_n,
            oracle_m,
            oracle_core,
            oracle_p1,
            oracle_p2,
            oracle_rho,
            oracle_voi,
            oracle_competitors,
            oracle_loss_ks,
            data_g1: data_path("g1"),
            data_g2: data_path("g2"),
            data_correspondence: data_path("correspondence"),
            data_seeds: data_path("seeds"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho = {} outside [0,1]", self.rho)));
        }
        for (name, v) in [
            ("p", self.model_p),
            ("q", self.model_q),
            ("r", self.model_r),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("model {name} = {v} outside [0,1]")));
            }
        }
        if self.replicates == 0 || self.seed_size == 0 || self.x_max == 0 {
            return Err(Error::Config(
                "replicates, seed_size and x_max must be positive".into(),
            ));
        }
        if self.gmm_k_min == 0 || self.gmm_k_min > self.gmm_k_max {
            return Err(Error::Config(format!(
                "bad mixture range {}..={}",
                self.gmm_k_min, self.gmm_k_max
            )));
        }
        if self.mode == Mode::RealData {
            for (name, p) in [
                ("g1", &self.data_g1),
                ("g2", &self.data_g2),
                ("correspondence", &self.data_correspondence),
                ("seeds", &self.data_seeds),
            ] {
                if p.as_os_str().is_empty() {
                    return Err(Error::Config(format!(
                        "real-data mode requires [data] {name}"
                    )));
                }
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "[data] {name}: file `{}` does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sbm_params(&self) -> Result<SbmParams> {
        SbmParams::two_block(self.model_n, self.model_p, self.model_q, self.model_r)
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            dim_override: self.dim_override,
            gmm: GmmConfig {
                k_min: self.gmm_k_min,
                k_max: self.gmm_k_max,
                restarts: self.gmm_restarts,
                ..GmmConfig::default()
            },
            clustering: self.clustering,
            include_seeds_as_candidates: false,
        }
    }

    pub fn oracle_spec(&self) -> EnumerableSpec {
        EnumerableSpec {
            n: self.oracle_n,
            m: self.oracle_m,
            core: self.oracle_core,
            p1: self.oracle_p1,
            p2: self.oracle_p2,
            rho: self.oracle_rho,
            voi: self.oracle_voi.clone(),
        }
    }

    pub fn sweep_grid(&self) -> Vec<(f64, f64)> {
        let mut grid = Vec::new();
        for &l in &self.sweep_grid_l {
            for &h in &self.sweep_grid_h {
                if l + h < 1.0 {
                    grid.push((l, h));
                }
            }
        }
        grid
    }

    /// Canonical serialization: the run manifest. Parsing it back yields an
    /// identical configuration.
    pub fn to_manifest_string(&self, version: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# run manifest (library version {version})");
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "mode = {}", self.mode.as_str());
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "n = {}", self.model_n);
        let _ = writeln!(s, "p = {}", self.model_p);
        let _ = writeln!(s, "q = {}", self.model_q);
        let _ = writeln!(s, "r = {}", self.model_r);
        let _ = writeln!(s, "rho = {}", self.rho);
        let _ = writeln!(s, "\n[adversary]");
        let _ = writeln!(s, "pi_plus = {}", self.adversary.pi_plus);
        let _ = writeln!(s, "pi_minus = {}", self.adversary.pi_minus);
        let _ = writeln!(s, "s_plus = {}", self.adversary.s_plus);
        let _ = writeln!(s, "s_minus = {}", self.adversary.s_minus);
        let _ = writeln!(s, "\n[evaluation]");
        let regimes: Vec<String> = self.regimes.iter().map(|r| r.label()).collect();
        let _ = writeln!(s, "regimes = {}", regimes.join(","));
        let _ = writeln!(s, "replicates = {}", self.replicates);
        let _ = writeln!(s, "seed_size = {}", self.seed_size);
        let _ = writeln!(s, "x_max = {}", self.x_max);
        let ks: Vec<String> = self.loss_ks.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "loss_ks = {}", ks.join(","));
        let _ = writeln!(s, "export_pair = {}", self.export_pair);
        let _ = writeln!(s, "\n[pipeline]");
        let _ = writeln!(
            s,
            "dim_override = {}",
            self.dim_override.map_or(String::new(), |d| d.to_string())
        );
        let _ = writeln!(s, "k_min = {}", self.gmm_k_min);
        let _ = writeln!(s, "k_max = {}", self.gmm_k_max);
        let _ = writeln!(s, "restarts = {}", self.gmm_restarts);
        let _ = writeln!(
            s,
            "clustering = {}",
            match self.clustering {
                ClusteringMode::Pooled => "pooled",
                ClusteringMode::SecondGraphOnly => "second-graph",
            }
        );
        let _ = writeln!(
            s,
            "trim_semantics = {}",
            match self.trim_semantics {
                TrimSemantics::Prose => "prose",
                TrimSemantics::Literal => "literal",
            }
        );
        let join_f = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(s, "\n[sweep]");
        let _ = writeln!(s, "grid_l = {}", join_f(&self.sweep_grid_l));
        let _ = writeln!(s, "grid_h = {}", join_f(&self.sweep_grid_h));
        let _ = writeln!(s, "replicates = {}", self.sweep_replicates);
        let _ = writeln!(s, "\n[oracle]");
        let _ = writeln!(s, "n = {}", self.oracle_n);
        let _ = writeln!(s, "m = {}", self.oracle_m);
        let _ = writeln!(s, "core = {}", self.oracle_core);
        let _ = writeln!(s, "p1 = {}", self.oracle_p1);
        let _ = writeln!(s, "p2 = {}", self.oracle_p2);
        let _ = writeln!(s, "rho = {}", self.oracle_rho);
        let _ = writeln!(s, "voi = {}", self.oracle_voi.join(","));
        let _ = writeln!(s, "competitors = {}", self.oracle_competitors);
        let oks: Vec<String> = self.oracle_loss_ks.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "loss_ks = {}", oks.join(","));
        if self.mode == Mode::RealData {
            let _ = writeln!(s, "\n[data]");
            let _ = writeln!(s, "g1 = {}", self.data_g1.display());
            let _ = writeln!(s, "g2 = {}", self.data_g2.display());
            let _ = writeln!(s, "correspondence = {}", self.data_correspondence.display());
            let _ = writeln!(s, "seeds = {}", self.data_seeds.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[experiment]
mode = simulate
output_dir = /tmp/out
master_seed = 7

[model]
n = 60
";

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL, "test.cfg").unwrap();
        assert_eq!(cfg.mode, Mode::Simulate);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.model_n, 60);
        assert_eq!(cfg.model_p, 0.4);
        assert_eq!(cfg.regimes.len(), 3);
        assert_eq!(cfg.gmm_k_max, 9);
    }

    #[test]
    fn line_precise_parse_errors() {
        let bad = "[experiment]\nmode = simulate\noutput_dir = x\n\n[model]\nn = twelve\n";
        let err = ExperimentConfig::parse(bad, "bad.cfg").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.cfg:6"), "{msg}");
        assert!(msg.contains("twelve"), "{msg}");
    }

    #[test]
    fn rejects_unknown_mode_and_duplicates() {
        let bad = "[experiment]\nmode = nope\noutput_dir = x\n";
        assert!(ExperimentConfig::parse(bad, "t.cfg").is_err());
        let dup = "[experiment]\nmode = simulate\nmode = simulate\noutput_dir = x\n";
        let err = ExperimentConfig::parse(dup, "t.cfg").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn regime_list_parses() {
        let text = "
[experiment]
mode = simulate
output_dir = o

[evaluation]
regimes = idealized,contaminated,regularized(0.1,0),regularized(0.2,0.2)
";
        let cfg = ExperimentConfig::parse(text, "t.cfg").unwrap();
        assert_eq!(cfg.regimes.len(), 4);
        assert_eq!(
            cfg.regimes[2],
            Regime::Regularized { low: 0.1, high: 0.0 }
        );
    }

    #[test]
    fn manifest_roundtrip_is_identity() {
        let text = "
[experiment]
mode = simulate
output_dir = out/x
master_seed = 99

[model]
n = 80
rho = 0.5

[evaluation]
replicates = 4
regimes = idealized,regularized(0.15,0)

[pipeline]
dim_override = 3
k_max = 4
";
        let cfg = ExperimentConfig::parse(text, "t.cfg").unwrap();
        let manifest = cfg.to_manifest_string("test");
        let back = ExperimentConfig::parse(&manifest, "manifest.cfg").unwrap();
        assert_eq!(back.to_manifest_string("test"), manifest);
        assert_eq!(back.master_seed, 99);
        assert_eq!(back.dim_override, Some(3));
        assert_eq!(back.regimes, cfg.regimes);
    }

    #[test]
    fn real_data_mode_requires_files() {
        let text = "
[experiment]
mode = real-data
output_dir = o
";
        let err = ExperimentConfig::parse(text, "t.cfg").unwrap_err();
        assert!(err.to_string().contains("requires"), "{err}");
    }
}
