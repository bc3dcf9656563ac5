//! Monte Carlo experiments for the limit theorems, with reproducible
//! persistence of their samples.
//!
//! Trial `t` of a run uses seed `seed + t`; trials run in parallel and are
//! merged by index, so outputs do not depend on the thread count.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::freeconv::FreeConvolution;
use crate::hsquad::Grid;
use crate::measures::{EntryLaw, SpectralMeasure};
use crate::rmt::{self, DeformationSpec, OutlierOptions, Rotation};
use crate::spike::{self, SpikePrediction};
use crate::stats::{self, DistributionHandle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Eigenvector,
    Eigenvalue,
    Resolvent,
    QuadraticForm,
    Concentration,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Eigenvector => "eigenvector",
            Self::Eigenvalue => "eigenvalue",
            Self::Resolvent => "resolvent",
            Self::QuadraticForm => "quadratic_form",
            Self::Concentration => "concentration",
        }
    }
}

fn default_kind() -> ExperimentKind {
    ExperimentKind::Eigenvector
}

fn default_n() -> usize {
    600
}

fn default_trials() -> usize {
    1000
}

fn default_theta() -> f64 {
    2.0
}

fn default_measure() -> SpectralMeasure {
    SpectralMeasure::point_mass(0.0)
}

/// One experiment, as read from a JSON config document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_kind")]
    pub kind: ExperimentKind,
    /// Matrix size; ignored by the concentration scan, which uses `n_list`.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub law: EntryLaw,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// `ν`; `A_{N−1}` is built from its midpoint quantiles unless
    /// `sub_spectrum` is given.
    #[serde(default = "default_measure")]
    pub measure: SpectralMeasure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_spectrum: Option<Vec<f64>>,
    #[serde(default)]
    pub rotation: Rotation,
    #[serde(default)]
    pub seed: u64,
    /// Evaluation points for the resolvent and concentration kinds.
    #[serde(default)]
    pub z_points: Vec<[f64; 2]>,
    /// Pairs `(z₁, z₂)` for the quadratic-form covariances.
    #[serde(default)]
    pub z_pairs: Vec<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs: Option<HsSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockSettings>,
}

/// Settings for the planar residue check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HsSettings {
    /// Bump half-width; `None` picks `min(0.1, dist/4)`.
    pub delta: Option<f64>,
    pub k: usize,
    pub grid: Grid,
}

impl Default for HsSettings {
    fn default() -> Self {
        Self { delta: None, k: 3, grid: Grid::default() }
    }
}

/// Settings for the block-variance estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockSettings {
    pub mc_trials: usize,
    pub grid: Grid,
}

impl Default for BlockSettings {
    fn default() -> Self {
        Self { mc_trials: 50, grid: Grid::coarse() }
    }
}

/// Pass/fail thresholds used by validation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ks: f64,
    pub variance_rel: f64,
    pub max_rejected_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ks: 0.08, variance_rel: 0.2, max_rejected_fraction: 0.01 }
    }
}

fn cz(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl ExperimentConfig {
    /// Desk-scale defaults: `ν = δ₀`, `θ = 2`, `N = 600`, 1000 trials.
    pub fn desk(kind: ExperimentKind, law: EntryLaw, seed: u64) -> Self {
        Self {
            kind,
            n: 600,
            n_list: vec![],
            trials: 1000,
            law,
            theta: 2.0,
            measure: default_measure(),
            sub_spectrum: None,
            rotation: Rotation::None,
            seed,
            z_points: vec![],
            z_pairs: vec![],
            output: None,
            tolerances: Tolerances::default(),
            hs: None,
            block: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        match self.kind {
            ExperimentKind::Concentration => {
                if self.n_list.len() < 3 || self.n_list.iter().any(|n| *n < 2) {
                    return Err(Error::config("concentration scan needs n_list with at least 3 sizes ≥ 2"));
                }
            }
            ExperimentKind::QuadraticForm => {
                if self.n == 0 && self.n_list.is_empty() {
                    return Err(Error::config("n must be positive"));
                }
                if self.z_pairs.iter().flatten().any(|z| z[1] == 0.0) {
                    return Err(Error::config("quadratic-form points need Im z ≠ 0"));
                }
            }
            _ => {
                if self.n < 2 {
                    return Err(Error::config("n must be at least 2"));
                }
            }
        }
        if self.kind == ExperimentKind::Resolvent {
            if self.z_points.is_empty() {
                return Err(Error::config("resolvent experiment needs z_points"));
            }
            if self.z_points.iter().any(|z| z[1].abs() < 0.5) {
                return Err(Error::config("resolvent z_points need |Im z| ≥ 0.5"));
            }
        }
        if let Some(s) = &self.sub_spectrum {
            if s.len() + 1 != self.n {
                return Err(Error::config(format!("sub_spectrum has {} values, expected n − 1 = {}", s.len(), self.n - 1)));
            }
        }
        Ok(())
    }

    /// Stable identifier derived from the configuration.
    pub fn run_id(&self) -> String {
        let mut snapshot = self.clone();
        snapshot.output = None;
        let bytes = serde_json::to_vec(&snapshot).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        format!("{}-{}", self.kind.name(), &hex::encode(digest)[..16])
    }

    /// Spectrum of `A_{N−1}` for size `n`.
    pub fn sub_spectrum_for(&self, n: usize) -> Result<Vec<f64>> {
        match &self.sub_spectrum {
            Some(s) if s.len() + 1 == n => Ok(s.clone()),
            Some(_) => Err(Error::config("sub_spectrum length does not match n − 1")),
            None => self.measure.discretize_quantiles(n - 1),
        }
    }

    pub fn deformation(&self, n: usize) -> Result<DeformationSpec> {
        DeformationSpec::new(self.theta, self.sub_spectrum_for(n)?, self.rotation)
    }

    /// Limiting measure for the predictions: `ν`, or the realized spectrum
    /// when an explicit one is given.
    pub fn limit_measure(&self) -> Result<SpectralMeasure> {
        match &self.sub_spectrum {
            Some(s) => SpectralMeasure::empirical(s),
            None => Ok(self.measure.clone()),
        }
    }

    pub fn prediction(&self) -> Result<SpikePrediction> {
        spike::predict(&self.limit_measure()?, self.theta, &self.law)
    }
}

/// Samples of one run, with enough metadata to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub run_id: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub statistic: String,
    pub columns: Vec<String>,
    pub seed_base: u64,
    pub trials: usize,
    pub rejected_trials: usize,
    pub rejected_indices: Vec<usize>,
    #[serde(skip)]
    pub trial_index: Vec<usize>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
    /// Not persisted, so files stay byte-identical across runs.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl SampleSet {
    /// First column as a flat sample.
    pub fn values(&self) -> Vec<f64> {
        self.column(0)
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.columns.iter().position(|c| c == name).map(|k| self.column(k))
    }

    pub fn accepted(&self) -> usize {
        self.rows.len()
    }

    pub fn rejected_fraction(&self) -> f64 {
        self.rejected_trials as f64 / self.trials as f64
    }

    /// Writes `<dir>/<run-id>.json` and `<dir>/<run-id>.csv`.
    pub fn save(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let json_path = dir.join(format!("{}.json", self.run_id));
        let csv_path = dir.join(format!("{}.csv", self.run_id));
        let mut header = serde_json::to_string_pretty(self)?;
        header.push('\n');
        fs::write(&json_path, header)?;
        let mut csv = String::from("trial");
        for c in &self.columns {
            csv.push(',');
            csv.push_str(c);
        }
        csv.push('\n');
        for (idx, row) in self.trial_index.iter().zip(&self.rows) {
            csv.push_str(&idx.to_string());
            for v in row {
                csv.push(',');
                csv.push_str(&format!("{v:?}"));
            }
            csv.push('\n');
        }
        fs::write(&csv_path, csv)?;
        Ok((json_path, csv_path))
    }

    /// Reads a set written by [`SampleSet::save`]; `path` may name either file.
    pub fn load(path: &Path) -> Result<Self> {
        let json_path = path.with_extension("json");
        let csv_path = path.with_extension("csv");
        let mut set: SampleSet = serde_json::from_str(&fs::read_to_string(&json_path)?)?;
        let text = fs::read_to_string(&csv_path)?;
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| Error::config("empty sample CSV"))?;
        let cols: Vec<&str> = head.split(',').skip(1).collect();
        if cols != set.columns.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::config("CSV columns do not match the JSON header"));
        }
        for line in lines {
            let mut fields = line.split(',');
            let idx = fields
                .next()
                .and_then(|f| f.parse::<usize>().ok())
                .ok_or_else(|| Error::config(format!("bad trial index in line {line:?}")))?;
            let row = fields
                .map(|f| f.parse::<f64>().map_err(|e| Error::config(format!("bad value {f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != set.columns.len() {
                return Err(Error::config(format!("line {line:?} has the wrong number of fields")));
            }
            set.trial_index.push(idx);
            set.rows.push(row);
        }
        if set.rows.len() + set.rejected_trials != set.trials {
            return Err(Error::config("sample count and rejected count do not add up to trials"));
        }
        Ok(set)
    }
}

fn new_set(cfg: &ExperimentConfig, statistic: &str, columns: Vec<String>) -> SampleSet {
    SampleSet {
        run_id: cfg.run_id(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        statistic: statistic.to_string(),
        columns,
        seed_base: cfg.seed,
        trials: cfg.trials,
        rejected_trials: 0,
        rejected_indices: vec![],
        trial_index: vec![],
        rows: vec![],
        wall_seconds: 0.0,
    }
}

/// Collects per-trial outcomes in index order; separation failures are
/// counted, other errors abort.
fn collect_trials(set: &mut SampleSet, outcomes: Vec<Result<Vec<f64>>>) -> Result<()> {
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(row) => {
                set.trial_index.push(t);
                set.rows.push(row);
            }
            Err(Error::NoSeparation(_)) => {
                set.rejected_trials += 1;
                set.rejected_indices.push(t);
            }
            Err(e) => return Err(e),
        }
    }
    if set.rows.is_empty() {
        return Err(Error::NoSeparation(format!("all {} trials were rejected", set.trials)));
    }
    Ok(())
}

/// Both outlier statistics from the same draws: `Φ_N = √N(|v₁|² − τ_N)` and
/// `Ξ_N = c√N(λ − ρ^{(N)})`.
pub fn run_outlier_fluctuations(cfg: &ExperimentConfig) -> Result<(SampleSet, SampleSet)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = cfg.n;
    let spec = cfg.deformation(n)?;
    let nu = cfg.limit_measure()?;
    let pred = spike::predict(&nu, cfg.theta, &cfg.law)?;
    let (tau_n, rho_n) = spike::finite_n_centerings(&spec.sub_spectrum, cfg.law.sigma2(), cfg.theta)?;
    let gap = 0.5 * spike::distance_to_bulk(&nu, cfg.law.sigma2(), cfg.theta)?;
    let opts = OutlierOptions::with_gap(gap);
    let sqrt_n = (n as f64).sqrt();

    let outcomes: Vec<Result<Vec<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = cfg.seed.wrapping_add(t as u64);
            let sample = rmt::sample_deformed(n, &spec, &cfg.law, seed)?;
            let pair = rmt::outlier_eigenpair(&sample, rho_n, &opts)?;
            let overlap = rmt::spike_overlap(&pair.vector)?;
            Ok(vec![
                sqrt_n * (overlap - tau_n),
                pred.c_eigenvalue * sqrt_n * (pair.lambda - rho_n),
                sample.w11,
                overlap,
                pair.lambda,
            ])
        })
        .collect();

    let mut vcfg = cfg.clone();
    vcfg.kind = ExperimentKind::Eigenvector;
    let mut ecfg = cfg.clone();
    ecfg.kind = ExperimentKind::Eigenvalue;
    let cols = |first: &str| vec![first.to_string(), "w11".into(), "overlap".into(), "lambda".into()];
    let mut vec_set = new_set(&vcfg, "Phi_N", cols("phi"));
    let mut val_set = new_set(&ecfg, "Xi_N", cols("xi"));
    let mut vec_rows = Vec::with_capacity(outcomes.len());
    let mut val_rows = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(r) => {
                vec_rows.push(Ok(vec![r[0], r[2], r[3], r[4]]));
                val_rows.push(Ok(vec![r[1], r[2], r[3], r[4]]));
            }
            Err(Error::NoSeparation(m)) => {
                vec_rows.push(Err(Error::NoSeparation(m.clone())));
                val_rows.push(Err(Error::NoSeparation(m)));
            }
            Err(e) => return Err(e),
        }
    }
    collect_trials(&mut vec_set, vec_rows)?;
    collect_trials(&mut val_set, val_rows)?;
    let wall = start.elapsed().as_secs_f64();
    vec_set.wall_seconds = wall;
    val_set.wall_seconds = wall;
    Ok((vec_set, val_set))
}

/// `Φ_N` samples.
pub fn run_eigenvector_fluctuations(cfg: &ExperimentConfig) -> Result<SampleSet> {
    if cfg.kind != ExperimentKind::Eigenvector {
        return Err(Error::config("config kind must be eigenvector"));
    }
    Ok(run_outlier_fluctuations(cfg)?.0)
}

/// `Ξ_N` samples.
pub fn run_eigenvalue_fluctuations(cfg: &ExperimentConfig) -> Result<SampleSet> {
    if cfg.kind != ExperimentKind::Eigenvalue {
        return Err(Error::config("config kind must be eigenvalue"));
    }
    Ok(run_outlier_fluctuations(cfg)?.1)
}

/// Per trial and `z`, `ξ_N(z) = √N(G₁₁(z) − 1/(z − σ² g̃_{N−1}(z) − θ))` with
/// `g̃_{N−1}` the free convolution with the realized spectrum of `A_{N−1}`.
/// Columns hold real and imaginary parts per point.
pub fn run_resolvent_clt(cfg: &ExperimentConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let start = Instant::now();
    let n = cfg.n;
    let spec = cfg.deformation(n)?;
    let fc = FreeConvolution::new(SpectralMeasure::empirical(&spec.sub_spectrum)?, cfg.law.sigma2())?;
    let zs: Vec<Complex64> = cfg.z_points.iter().map(|p| cz(*p)).collect();
    // centering terms, computed in the upper half plane and conjugated below
    let centers: Vec<Complex64> = zs
        .iter()
        .map(|z| {
            let up = if z.im > 0.0 { *z } else { z.conj() };
            let c = 1.0 / (fc.omega(up)? - cfg.theta);
            Ok(if z.im > 0.0 { c } else { c.conj() })
        })
        .collect::<Result<_>>()?;
    let sqrt_n = (n as f64).sqrt();
    let outcomes: Vec<Result<Vec<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let sample = rmt::sample_deformed(n, &spec, &cfg.law, cfg.seed.wrapping_add(t as u64))?;
            let mut row = Vec::with_capacity(2 * zs.len());
            let mut cache: Vec<(Complex64, Complex64)> = Vec::new();
            for (z, c) in zs.iter().zip(&centers) {
                let up = if z.im > 0.0 { *z } else { z.conj() };
                let g = match cache.iter().find(|(w, _)| *w == up) {
                    Some((_, g)) => *g,
                    None => {
                        let g = rmt::g11(&sample.matrix, up)?;
                        cache.push((up, g));
                        g
                    }
                };
                let g = if z.im > 0.0 { g } else { g.conj() };
                let xi = sqrt_n * (g - c);
                row.push(xi.re);
                row.push(xi.im);
            }
            Ok(row)
        })
        .collect();
    let mut columns = Vec::new();
    for p in &cfg.z_points {
        columns.push(format!("re_xi({}{:+}i)", p[0], p[1]));
        columns.push(format!("im_xi({}{:+}i)", p[0], p[1]));
    }
    let mut set = new_set(cfg, "xi_N", columns);
    collect_trials(&mut set, outcomes)?;
    set.wall_seconds = start.elapsed().as_secs_f64();
    Ok(set)
}

/// Limit second moments `(E|H(z)|², E H(z)²)` of the resolvent-entry CLT,
/// `H = (W₁₁ + G)/(z − σ²g(z) − θ)²`.
pub fn resolvent_limit_moments(nu: &SpectralMeasure, law: &EntryLaw, theta: f64, z: Complex64) -> Result<(f64, Complex64)> {
    let fc = FreeConvolution::new(nu.clone(), law.sigma2())?;
    let s2 = law.sigma2();
    let den = fc.omega(z)? - theta;
    let den2 = den * den;
    let e_abs = (s2 + cov20(&fc, law, z, z.conj())?.re) / den2.norm_sqr();
    let e_sq = (s2 + cov20(&fc, law, z, z)?) / (den2 * den2);
    Ok((e_abs, e_sq))
}

/// `½(m₄−3σ⁴) ∫ dν/((ω₁−x)(ω₂−x)) + σ⁴ ∫ dλ/((z₁−x)(z₂−x))`.
pub fn cov20(fc: &FreeConvolution, law: &EntryLaw, z1: Complex64, z2: Complex64) -> Result<Complex64> {
    let nu = fc.base();
    let pair = |g1: Complex64, g2: Complex64, d: Complex64, a: Complex64, b: Complex64| {
        if (a - b).norm() < 1e-12 * (1.0 + a.norm()) {
            -d
        } else {
            (g1 - g2) / (b - a)
        }
    };
    let (w1, w2) = (fc.omega(z1)?, fc.omega(z2)?);
    let nu_term = pair(nu.stieltjes(w1, 0)?, nu.stieltjes(w2, 0)?, nu.stieltjes(w1, 1)?, w1, w2);
    let lam_term = pair(fc.subordinated_g(z1, 0)?, fc.subordinated_g(z2, 0)?, fc.subordinated_g(z1, 1)?, z1, z2);
    let s2 = law.sigma2();
    Ok(0.5 * law.kurtosis_excess() * nu_term + s2 * s2 * lam_term)
}

/// Empirical against predicted covariance for one `(z₁, z₂)` pair.
#[derive(Clone, Debug, Serialize)]
pub struct CovarianceEntry {
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    /// `false` for `E[V(z₁)V(z₂)]`, `true` for `E[V(z₁) conj V(z₂)]`.
    pub conjugate: bool,
    pub empirical: [f64; 2],
    pub predicted: [f64; 2],
    pub stderr: f64,
    pub z_score: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadraticFormReport {
    pub n: usize,
    pub trials: usize,
    pub complex_fourth_moment: f64,
    pub entries: Vec<CovarianceEntry>,
    /// `E|Y*BY − Tr B|² / Tr(B*B)` per size at the first point.
    pub bound_ratios: Vec<(usize, f64)>,
}

fn quadratic_samples(law: &EntryLaw, d: &[f64], zs: &[Complex64], seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.len();
    let scale = 1.0 / (2.0 * law.sigma2()).sqrt();
    let mut acc = vec![Complex64::new(0.0, 0.0); zs.len()];
    for &di in d {
        let u = law.sample(&mut rng);
        let v = law.sample(&mut rng);
        let y2 = scale * scale * (u * u + v * v) - 1.0;
        for (a, z) in acc.iter_mut().zip(zs) {
            *a += y2 / (z - di);
        }
    }
    let s = 1.0 / (n as f64).sqrt();
    acc.into_iter().map(|a| a * s).collect()
}

/// `V_N(z) = (1/√N)(Y*B(z)Y − Tr B(z))` with `B(z) = (z − D)⁻¹`, `D` the
/// midpoint quantiles of `ν`. Columns hold real and imaginary parts per
/// distinct point.
pub fn run_quadratic_form_samples(cfg: &ExperimentConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let start = Instant::now();
    let d = cfg.measure.discretize_quantiles(cfg.n)?;
    let zs = distinct_points(cfg);
    let outcomes: Vec<Result<Vec<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let v = quadratic_samples(&cfg.law, &d, &zs, cfg.seed.wrapping_add(t as u64));
            Ok(v.iter().flat_map(|c| [c.re, c.im]).collect())
        })
        .collect();
    let mut columns = Vec::new();
    for z in &zs {
        columns.push(format!("re_V({}{:+}i)", z.re, z.im));
        columns.push(format!("im_V({}{:+}i)", z.re, z.im));
    }
    let mut set = new_set(cfg, "V_N", columns);
    collect_trials(&mut set, outcomes)?;
    set.wall_seconds = start.elapsed().as_secs_f64();
    Ok(set)
}

fn distinct_points(cfg: &ExperimentConfig) -> Vec<Complex64> {
    let mut zs: Vec<Complex64> = Vec::new();
    for pair in &cfg.z_pairs {
        for p in pair {
            let z = cz(*p);
            if !zs.contains(&z) {
                zs.push(z);
            }
        }
    }
    zs
}

/// Covariance report for the quadratic-form CLT, plus the variance-bound
/// ratios over `n_list`.
pub fn run_quadratic_form_clt(cfg: &ExperimentConfig) -> Result<QuadraticFormReport> {
    let set = run_quadratic_form_samples(cfg)?;
    quadratic_form_report(cfg, &set)
}

/// Builds the report from stored samples.
pub fn quadratic_form_report(cfg: &ExperimentConfig, set: &SampleSet) -> Result<QuadraticFormReport> {
    let zs = distinct_points(cfg);
    let d = cfg.measure.discretize_quantiles(cfg.n)?;
    let nf = cfg.n as f64;
    let ey4 = cfg.law.complex_fourth_moment();
    let col = |z: Complex64| -> Vec<Complex64> {
        let k = zs.iter().position(|w| *w == z).unwrap();
        set.rows.iter().map(|r| Complex64::new(r[2 * k], r[2 * k + 1])).collect()
    };
    let a = |z1: Complex64, z2: Complex64| d.iter().map(|x| 1.0 / ((z1 - x) * (z2 - x))).sum::<Complex64>() / nf;
    // (1/N) Tr B(z₁)B(z₂); equal to `a` here because D is diagonal
    let b = |z1: Complex64, z2: Complex64| -> Complex64 {
        let prod = d.iter().map(|x| (1.0 / (z1 - x)) * (1.0 / (z2 - x)));
        prod.sum::<Complex64>() / nf
    };
    let mut entries = Vec::new();
    for pair in &cfg.z_pairs {
        let (z1, z2) = (cz(pair[0]), cz(pair[1]));
        let (v1, v2) = (col(z1), col(z2));
        for conjugate in [false, true] {
            let prods: Vec<Complex64> =
                v1.iter().zip(&v2).map(|(a, b)| if conjugate { a * b.conj() } else { a * b }).collect();
            let t = prods.len() as f64;
            let mean: Complex64 = prods.iter().sum::<Complex64>() / t;
            let var: f64 = prods.iter().map(|p| (p - mean).norm_sqr()).sum::<f64>() / (t - 1.0);
            let stderr = (var / t).sqrt();
            let w2 = if conjugate { z2.conj() } else { z2 };
            let predicted = (ey4 - 2.0) * a(z1, w2) + b(z1, w2);
            entries.push(CovarianceEntry {
                z1: pair[0],
                z2: pair[1],
                conjugate,
                empirical: [mean.re, mean.im],
                predicted: [predicted.re, predicted.im],
                stderr,
                z_score: (mean - predicted).norm() / stderr,
            });
        }
    }
    let mut bound_ratios = Vec::new();
    if let Some(z) = zs.first() {
        for &n in &cfg.n_list {
            let dn = cfg.measure.discretize_quantiles(n)?;
            let trb: f64 = dn.iter().map(|x| 1.0 / (z - x).norm_sqr()).sum();
            let m2: f64 = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let v = quadratic_samples(&cfg.law, &dn, &[*z], cfg.seed.wrapping_add(t as u64))[0];
                    v.norm_sqr() * n as f64
                })
                .collect::<Vec<_>>()
                .iter()
                .sum::<f64>()
                / cfg.trials as f64;
            bound_ratios.push((n, m2 / trb));
        }
    }
    Ok(QuadraticFormReport { n: cfg.n, trials: cfg.trials, complex_fourth_moment: ey4, entries, bound_ratios })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub variance: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationReport {
    pub z: [f64; 2],
    pub rows: Vec<ConcentrationRow>,
    /// Least-squares slope of `log Var` against `log N`.
    pub slope: f64,
}

/// Samples of `(1/N) tr G(z)` for every size of `n_list` (rows tagged by `N`).
pub fn run_concentration_samples(cfg: &ExperimentConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let start = Instant::now();
    let z = cfg.z_points.first().map(|p| cz(*p)).unwrap_or(Complex64::new(0.0, 2.0));
    let mut set = new_set(cfg, "trG", vec!["n".into(), "re_trG".into(), "im_trG".into()]);
    let mut all = Vec::new();
    for &n in &cfg.n_list {
        let spec = cfg.deformation(n)?;
        let rows: Vec<Result<Vec<f64>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let sample = rmt::sample_deformed(n, &spec, &cfg.law, cfg.seed.wrapping_add(t as u64))?;
                let tr = rmt::normalized_trace(&sample.matrix, &[z])?[0];
                Ok(vec![n as f64, tr.re, tr.im])
            })
            .collect();
        all.extend(rows);
    }
    set.trials = all.len();
    collect_trials(&mut set, all)?;
    set.wall_seconds = start.elapsed().as_secs_f64();
    Ok(set)
}

/// Variance of `tr G(z)` per size and the log-log slope.
pub fn run_concentration_scan(cfg: &ExperimentConfig) -> Result<ConcentrationReport> {
    concentration_report(cfg, &run_concentration_samples(cfg)?)
}

pub fn concentration_report(cfg: &ExperimentConfig, set: &SampleSet) -> Result<ConcentrationReport> {
    let z = cfg.z_points.first().copied().unwrap_or([0.0, 2.0]);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let vals: Vec<Complex64> = set
            .rows
            .iter()
            .filter(|r| r[0] == n as f64)
            .map(|r| Complex64::new(r[1], r[2]))
            .collect();
        let t = vals.len() as f64;
        if vals.len() < 2 {
            return Err(Error::domain(format!("not enough samples at N = {n}")));
        }
        let mean: Complex64 = vals.iter().sum::<Complex64>() / t;
        let dev: Vec<f64> = vals.iter().map(|v| (v - mean).norm_sqr()).collect();
        let variance = dev.iter().sum::<f64>() / (t - 1.0);
        let s = stats::summarize(&dev)?;
        rows.push(ConcentrationRow { n, variance, stderr: s.stderr_mean });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.variance.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ConcentrationReport { z, rows, slope: sxy / sxx })
}

/// Which limit law to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// `c W₁₁ + Z`, `Z ~ N(0, Var Z)`.
    EigenvectorLimit,
    /// `W + N(0, v²)`, `W ~ μ`.
    EigenvalueLimit,
}

/// Draws from a limit law together with its exact CDF.
pub fn reference_law(
    kind: ReferenceKind,
    prediction: &SpikePrediction,
    law: &EntryLaw,
    count: usize,
    seed: u64,
) -> Result<(Vec<f64>, DistributionHandle)> {
    let (scale, var) = match kind {
        ReferenceKind::EigenvectorLimit => (prediction.c_eigenvector, prediction.var_z),
        ReferenceKind::EigenvalueLimit => (1.0, prediction.v2_eigenvalue),
    };
    if !(var >= 0.0) {
        return Err(Error::domain(format!("negative limit variance {var}")));
    }
    let handle = stats::convolved_cdf(law, scale, var)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, var.sqrt()).map_err(|e| Error::domain(e.to_string()))?;
    let samples = (0..count).map(|_| scale * law.sample(&mut rng) + normal.sample(&mut rng)).collect();
    Ok((samples, handle))
}

/// Limit CDF for a stored sample set of the eigenvector or eigenvalue kind.
pub fn reference_handle(cfg: &ExperimentConfig) -> Result<DistributionHandle> {
    let p = cfg.prediction()?;
    match cfg.kind {
        ExperimentKind::Eigenvector => stats::convolved_cdf(&cfg.law, p.c_eigenvector, p.var_z),
        ExperimentKind::Eigenvalue => stats::convolved_cdf(&cfg.law, 1.0, p.v2_eigenvalue),
        k => Err(Error::config(format!("no reference law for kind {}", k.name()))),
    }
}
