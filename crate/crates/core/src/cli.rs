//! Command-line front end.
//!
//! Every command reads one JSON config (see [`ExperimentConfig`]); a manifest
//! written by an earlier run is accepted in its place. Exit codes: 0 success,
//! 1 config or I/O error, 2 domain error (for instance no outlier), 3 a check
//! that did not pass.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentConfig, ExperimentKind, SampleSet};
use crate::hsquad;
use crate::rmt::{DeformationSpec, Rotation};
use crate::spike;
use crate::stats;

/// Environment variable that overrides the config seed.
pub const SEED_ENV: &str = "SPIKED_WIGNER_SEED";

#[derive(Parser, Debug)]
#[command(name = "spiked-wigner", version, about = "Outlier fluctuations of spiked deformed Wigner matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON config, or a manifest from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed override; takes precedence over the environment and the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Limit predictions for the configured spike.
    Theory,
    /// Run the configured experiment and store its samples.
    Simulate,
    /// Compare stored samples with their limit law.
    Validate {
        /// Sample set (`.json` or `.csv` of the pair).
        #[arg(long)]
        samples: PathBuf,
    },
    /// Planar integral against the closed-form residue.
    HsCheck,
    /// Monte Carlo estimate of the block-case variance.
    BlockVariance {
        /// CSV of the eigenvalues of the lower block (one per line).
        #[arg(long)]
        sub_a: Option<PathBuf>,
        /// Conjugate the block by a Haar unitary drawn from this seed.
        #[arg(long)]
        haar_seed: Option<u64>,
    },
    /// Plot-ready ECDF against the reference CDF.
    Report {
        #[arg(long)]
        samples: PathBuf,
    },
}

/// Record of one invocation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub wall_seconds: f64,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Io(_) | Error::Json(_) => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

/// Parses `std::env::args` and runs; returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli) -> std::result::Result<i32, Failure> {
    let jobs = cli.common.jobs;
    if jobs == Some(0) {
        return Err(Error::config("--jobs must be at least 1").into());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Failure { code: 1, message: e.to_string() })?;
    pool.install(|| execute(cli))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("{SEED_ENV} is not an unsigned integer: {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Reads a config or manifest document.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let doc = match value.get("command").zip(value.get("config")) {
        Some((_, cfg)) => cfg.clone(),
        None => value,
    };
    serde_json::from_value(doc).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

fn resolve_config(common: &Common, fallback: Option<&ExperimentConfig>) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, fallback) {
        (Some(p), _) => load_config(p)?,
        (None, Some(c)) => c.clone(),
        (None, None) => return Err(Error::config("--config is required")),
    };
    if let Some(s) = env_seed()? {
        cfg.seed = s;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_manifest(
    command: &str,
    common: &Common,
    cfg: &ExperimentConfig,
    dir: &Path,
    outputs: Vec<PathBuf>,
    start: Instant,
) -> Result<PathBuf> {
    let manifest = RunManifest {
        command: command.to_string(),
        config_path: common.config.clone(),
        config: cfg.clone(),
        seed: cfg.seed,
        outputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let path = dir.join(format!("{}.{command}.manifest.json", cfg.run_id()));
    write_json(&path, &manifest)?;
    Ok(path)
}

fn execute(cli: &Cli) -> std::result::Result<i32, Failure> {
    let start = Instant::now();
    let common = &cli.common;
    match &cli.command {
        Command::Theory => {
            let cfg = resolve_config(common, None)?;
            let report = theory_report(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            if let Some(dir) = &common.out {
                let path = dir.join(format!("{}.theory.json", cfg.run_id()));
                write_json(&path, &report)?;
                write_manifest("theory", common, &cfg, dir, vec![path], start)?;
            }
            Ok(0)
        }
        Command::Simulate => {
            let cfg = resolve_config(common, None)?;
            let dir = out_dir(common, &cfg);
            let outputs = simulate(&cfg, &dir)?;
            for p in &outputs {
                println!("{}", p.display());
            }
            write_manifest("simulate", common, &cfg, &dir, outputs, start)?;
            Ok(0)
        }
        Command::Validate { samples } => {
            let set = SampleSet::load(samples)?;
            let cfg = resolve_config(common, Some(&set.config))?;
            let verdict = validate(&set, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&verdict).map_err(Error::from)?);
            let dir = out_dir(common, &cfg);
            let path = dir.join(format!("{}.verdict.json", set.run_id));
            write_json(&path, &verdict)?;
            write_manifest("validate", common, &cfg, &dir, vec![path], start)?;
            Ok(if verdict["pass"] == Value::Bool(true) { 0 } else { 3 })
        }
        Command::HsCheck => {
            let cfg = resolve_config(common, None)?;
            let hs = cfg.hs.unwrap_or_default();
            let r = hsquad::residue_check(&cfg.limit_measure()?, cfg.law.sigma2(), cfg.theta, hs.delta, hs.k, &hs.grid)?;
            let pass = r.abs_diff < 1e-3;
            let report = json!({ "check": r, "grid": hs.grid, "k": hs.k, "tolerance": 1e-3, "pass": pass });
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            if let Some(dir) = &common.out {
                let path = dir.join(format!("{}.hs-check.json", cfg.run_id()));
                write_json(&path, &report)?;
                write_manifest("hs-check", common, &cfg, dir, vec![path], start)?;
            }
            Ok(if pass { 0 } else { 3 })
        }
        Command::BlockVariance { sub_a, haar_seed } => {
            let cfg = resolve_config(common, None)?;
            let report = block_variance_report(&cfg, sub_a.as_deref(), *haar_seed)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            if let Some(dir) = &common.out {
                let path = dir.join(format!("{}.block-variance.json", cfg.run_id()));
                write_json(&path, &report)?;
                write_manifest("block-variance", common, &cfg, dir, vec![path], start)?;
            }
            Ok(0)
        }
        Command::Report { samples } => {
            let set = SampleSet::load(samples)?;
            let cfg = resolve_config(common, Some(&set.config))?;
            let dir = out_dir(common, &cfg);
            let path = dir.join(format!("{}.ecdf.csv", set.run_id));
            write_ecdf(&set, &cfg, &path)?;
            println!("{}", path.display());
            write_manifest("report", common, &cfg, &dir, vec![path], start)?;
            Ok(0)
        }
    }
}

/// Prediction plus the subordination residual and the residue cross-check.
pub fn theory_report(cfg: &ExperimentConfig) -> Result<Value> {
    let nu = cfg.limit_measure()?;
    let p = spike::predict(&nu, cfg.theta, &cfg.law)?;
    let residual = spike::subordination_identity_residual(&nu, cfg.law.sigma2(), cfg.theta)?;
    let cross = spike::residue_variance(&nu, cfg.theta, &cfg.law)?;
    Ok(json!({
        "prediction": p,
        "subordination_residual": residual,
        "residue_variance": cross,
        "warnings": p.warnings,
    }))
}

/// Runs the experiment and saves its files; returns their paths.
pub fn simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let mut out = Vec::new();
    let mut save = |set: &SampleSet| -> Result<()> {
        let (j, c) = set.save(dir)?;
        out.push(j);
        out.push(c);
        Ok(())
    };
    match cfg.kind {
        ExperimentKind::Eigenvector => save(&experiments::run_eigenvector_fluctuations(cfg)?)?,
        ExperimentKind::Eigenvalue => save(&experiments::run_eigenvalue_fluctuations(cfg)?)?,
        ExperimentKind::Resolvent => save(&experiments::run_resolvent_clt(cfg)?)?,
        ExperimentKind::QuadraticForm => {
            let set = experiments::run_quadratic_form_samples(cfg)?;
            save(&set)?;
            let report = experiments::quadratic_form_report(cfg, &set)?;
            let path = dir.join(format!("{}.report.json", set.run_id));
            write_json(&path, &report)?;
            out.push(path);
        }
        ExperimentKind::Concentration => {
            let set = experiments::run_concentration_samples(cfg)?;
            save(&set)?;
            let report = experiments::concentration_report(cfg, &set)?;
            let path = dir.join(format!("{}.report.json", set.run_id));
            write_json(&path, &report)?;
            out.push(path);
        }
    }
    Ok(out)
}

/// Verdict for a stored sample set; `cfg` supplies the reference law and
/// tolerances (normally the set's own config).
pub fn validate(set: &SampleSet, cfg: &ExperimentConfig) -> Result<Value> {
    let tol = cfg.tolerances;
    let rejected_ok = set.rejected_fraction() <= tol.max_rejected_fraction;
    let verdict = match set.config.kind {
        ExperimentKind::Eigenvector | ExperimentKind::Eigenvalue => {
            let mut reference = cfg.clone();
            reference.kind = set.config.kind;
            let handle = experiments::reference_handle(&reference)?;
            let x = set.values();
            let ks = stats::ks_statistic(&x, &handle)?;
            let s = stats::summarize(&x)?;
            let target = handle.variance();
            let rel = (s.variance - target).abs() / target;
            let pass = ks < tol.ks && rel <= tol.variance_rel && rejected_ok;
            json!({
                "run_id": set.run_id,
                "reference": handle.description(),
                "ks": ks,
                "ks_tolerance": tol.ks,
                "sample_variance": s.variance,
                "sample_variance_stderr": s.stderr_variance,
                "reference_variance": target,
                "variance_relative_error": rel,
                "variance_tolerance": tol.variance_rel,
                "mean": s.mean,
                "mean_stderr": s.stderr_mean,
                "rejected_fraction": set.rejected_fraction(),
                "pass": pass,
            })
        }
        ExperimentKind::Resolvent => {
            let nu = cfg.limit_measure()?;
            let mut points = Vec::new();
            let mut pass = rejected_ok;
            for (k, p) in set.config.z_points.iter().enumerate() {
                let z = Complex64::new(p[0], p[1]);
                let zu = if z.im > 0.0 { z } else { z.conj() };
                let (e_abs, e_sq) = experiments::resolvent_limit_moments(&nu, &cfg.law, cfg.theta, zu)?;
                let e_sq = if z.im > 0.0 { e_sq } else { e_sq.conj() };
                let abs2: Vec<f64> = set.rows.iter().map(|r| r[2 * k] * r[2 * k] + r[2 * k + 1] * r[2 * k + 1]).collect();
                let sa = stats::summarize(&abs2)?;
                let z_abs = (sa.mean - e_abs).abs() / sa.stderr_mean;
                let sq: Vec<Complex64> = set.rows.iter().map(|r| Complex64::new(r[2 * k], r[2 * k + 1]).powu(2)).collect();
                let (m_sq, se_sq) = complex_mean(&sq);
                let z_sq = (m_sq - e_sq).norm() / se_sq;
                pass &= z_abs < 3.0 && z_sq < 3.0;
                points.push(json!({
                    "z": p,
                    "e_abs2": sa.mean, "e_abs2_predicted": e_abs, "e_abs2_z": z_abs,
                    "e_sq": [m_sq.re, m_sq.im], "e_sq_predicted": [e_sq.re, e_sq.im], "e_sq_z": z_sq,
                }));
            }
            json!({ "run_id": set.run_id, "points": points, "pass": pass })
        }
        ExperimentKind::QuadraticForm => {
            let r = experiments::quadratic_form_report(cfg, set)?;
            let pass = r.entries.iter().all(|e| e.z_score < 3.0);
            json!({ "run_id": set.run_id, "report": r, "pass": pass })
        }
        ExperimentKind::Concentration => {
            let r = experiments::concentration_report(cfg, set)?;
            let pass = (-2.5..=-1.5).contains(&r.slope);
            json!({ "run_id": set.run_id, "report": r, "pass": pass })
        }
    };
    Ok(verdict)
}

fn complex_mean(v: &[Complex64]) -> (Complex64, f64) {
    let t = v.len() as f64;
    let m: Complex64 = v.iter().sum::<Complex64>() / t;
    let var = v.iter().map(|x| (x - m).norm_sqr()).sum::<f64>() / (t - 1.0);
    (m, (var / t).sqrt())
}

/// `(x, ecdf, reference_cdf)` at the sorted sample points.
pub fn write_ecdf(set: &SampleSet, cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let mut reference = cfg.clone();
    reference.kind = set.config.kind;
    let handle = experiments::reference_handle(&reference)?;
    let mut x = set.values();
    x.sort_by(f64::total_cmp);
    let mut csv = String::from("x,ecdf,reference_cdf\n");
    for (i, v) in x.iter().enumerate() {
        csv.push_str(&format!("{v:?},{:?},{:?}\n", (i + 1) as f64 / x.len() as f64, handle.cdf(*v)));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, csv)?;
    Ok(())
}

/// Reads eigenvalues, one per line (blank lines and `#` comments skipped).
pub fn read_eigenvalue_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .flat_map(|l| l.split(','))
        .map(|f| f.trim().parse::<f64>().map_err(|e| Error::config(format!("bad eigenvalue {f:?}: {e}"))))
        .collect()
}

/// Block-variance estimate together with the closed-form values it is
/// compared against.
pub fn block_variance_report(cfg: &ExperimentConfig, sub_a: Option<&Path>, haar_seed: Option<u64>) -> Result<Value> {
    let spectrum = match sub_a {
        Some(p) => read_eigenvalue_csv(p)?,
        None => cfg.sub_spectrum_for(cfg.n)?,
    };
    let rotation = match haar_seed {
        Some(s) => Rotation::Haar(s),
        None => cfg.rotation,
    };
    let spec = DeformationSpec::new(cfg.theta, spectrum.clone(), rotation)?;
    let settings = cfg.block.unwrap_or_default();
    let est = hsquad::block_variance_estimate(&spec.sub_block(), &cfg.law, cfg.theta, settings.mc_trials, &settings.grid, cfg.seed)?;
    let nu = crate::measures::SpectralMeasure::empirical(&spectrum)?;
    let p = spike::predict(&nu, cfg.theta, &cfg.law)?;
    let cross = spike::residue_variance(&nu, cfg.theta, &cfg.law)?;
    Ok(json!({
        "estimate": est,
        "size": spectrum.len() + 1,
        "rotation": rotation,
        "grid": settings.grid,
        "var_z_closed_form": p.var_z,
        "var_z_residue": cross.var_z,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn theory_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let ok = write(dir.path(), "ok.json", r#"{"law":{"kind":"gaussian","sigma2":1.0},"theta":2.0}"#);
        assert_eq!(run_from(["sw", "theory", "--config", ok.to_str().unwrap()]), 0);
        let crit = write(dir.path(), "crit.json", r#"{"law":{"kind":"gaussian","sigma2":1.0},"theta":1.0}"#);
        assert_eq!(run_from(["sw", "theory", "--config", crit.to_str().unwrap()]), 2);
        let bad = write(dir.path(), "bad.json", r#"{"law":{"kind":"cauchy","sigma2":1.0}}"#);
        assert_eq!(run_from(["sw", "theory", "--config", bad.to_str().unwrap()]), 1);
        assert_eq!(run_from(["sw", "theory"]), 1);
        assert_eq!(run_from(["sw", "frobnicate"]), 1);
    }

    #[test]
    fn theory_report_values() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"law":{"kind":"gaussian","sigma2":1.0}}"#).unwrap();
        let r = theory_report(&cfg).unwrap();
        assert_eq!(r["prediction"]["rho"], 2.5);
        assert_eq!(r["prediction"]["tau"], 0.75);
        assert!((r["prediction"]["varZ"].as_f64().unwrap() - 39.0 / 128.0).abs() < 1e-12);
    }

    #[test]
    fn manifest_is_accepted_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfgp = write(dir.path(), "c.json", r#"{"law":{"kind":"uniform","sigma2":1.0},"theta":3.0,"seed":4}"#);
        let out = dir.path().join("o");
        let code = run_from(["sw", "theory", "--config", cfgp.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9"]);
        assert_eq!(code, 0);
        let manifest = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.to_string_lossy().ends_with(".manifest.json"))
            .unwrap();
        let cfg = load_config(&manifest).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.theta, 3.0);
    }

    #[test]
    fn simulate_validate_report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{"kind":"eigenvalue","n":100,"trials":30,"law":{"kind":"gaussian","sigma2":1.0},"seed":2,
                       "tolerances":{"ks":0.5,"variance_rel":1.0}}"#;
        let cfgp = write(dir.path(), "c.json", body);
        let out = dir.path().join("o");
        let (c, o) = (cfgp.to_str().unwrap(), out.to_str().unwrap());
        assert_eq!(run_from(["sw", "simulate", "--config", c, "--out", o, "--jobs", "2"]), 0);
        let json = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.extension().is_some_and(|e| e == "csv"))
            .unwrap();
        let s = json.to_str().unwrap();
        assert_eq!(run_from(["sw", "validate", "--samples", s, "--out", o]), 0);
        assert_eq!(run_from(["sw", "report", "--samples", s, "--out", o]), 0);
        let set = SampleSet::load(&json).unwrap();
        let ecdf = fs::read_to_string(out.join(format!("{}.ecdf.csv", set.run_id))).unwrap();
        assert_eq!(ecdf.lines().count(), set.rows.len() + 1);
        assert_eq!(run_from(["sw", "simulate", "--config", c, "--jobs", "0"]), 1);
    }

    #[test]
    fn eigenvalue_csv_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.csv", "# block\n0.5\n-1,2\n\n");
        assert_eq!(read_eigenvalue_csv(&p).unwrap(), vec![0.5, -1.0, 2.0]);
        let q = write(dir.path(), "f.csv", "x\n");
        assert!(matches!(read_eigenvalue_csv(&q), Err(Error::Config(_))));
    }
}
