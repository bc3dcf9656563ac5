//! Empirical distribution utilities: CDF handles for the limit laws,
//! Kolmogorov–Smirnov distances and moment summaries.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::measures::EntryLaw;
use crate::quadrature::Composite;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Clone, Debug)]
enum Shape {
    PointMass,
    Gaussian { var: f64 },
    Scaled { law: EntryLaw, scale: f64 },
    Convolved { law: EntryLaw, scale: f64, sd: f64 },
}

/// CDF of `c·X + G` with `X` drawn from an entry law and `G ~ N(0, v)`.
#[derive(Clone, Debug)]
pub struct DistributionHandle {
    shape: Shape,
    description: String,
}

impl DistributionHandle {
    /// Centered normal law of variance `var`.
    pub fn normal(var: f64) -> Result<Self> {
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::domain(format!("normal variance must be positive, got {var}")));
        }
        Ok(Self { shape: Shape::Gaussian { var }, description: format!("N(0, {var})") })
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Variance of the law.
    pub fn variance(&self) -> f64 {
        match &self.shape {
            Shape::PointMass => 0.0,
            Shape::Gaussian { var } => *var,
            Shape::Scaled { law, scale } => scale * scale * law.sigma2(),
            Shape::Convolved { law, scale, sd } => scale * scale * law.sigma2() + sd * sd,
        }
    }

    /// True when the handle is the degenerate point mass at 0.
    pub fn is_point_mass(&self) -> bool {
        matches!(self.shape, Shape::PointMass)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::PointMass => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Gaussian { var } => normal_cdf(t / var.sqrt()),
            Shape::Scaled { law, scale } => law.cdf(t / scale),
            Shape::Convolved { law, scale, sd } => {
                convolve(law, *scale, *sd, t, |u| normal_cdf(u)).clamp(0.0, 1.0)
            }
        }
    }

    /// Density, when the law has one.
    pub fn density(&self, t: f64) -> Option<f64> {
        match &self.shape {
            Shape::PointMass => None,
            Shape::Gaussian { var } => Some(normal_pdf(t / var.sqrt()) / var.sqrt()),
            Shape::Scaled { law, scale } => Some(law.density(t / scale) / scale),
            Shape::Convolved { law, scale, sd } => Some(convolve(law, *scale, *sd, t, normal_pdf) / sd),
        }
    }

    /// Breakpoints where the density may fail to be smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Scaled { law, scale } => law.kinks().iter().map(|k| k * scale).collect(),
            _ => vec![0.0],
        }
    }
}

/// `∫ f_X(x) k((t − c x)/s) dx` with the panels of the composite rule split at
/// the kinks of `f_X` and refined where the kernel varies.
fn convolve(law: &EntryLaw, c: f64, s: f64, t: f64, kernel: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi) = law.effective_support();
    let mut breaks = vec![lo, hi];
    breaks.extend(law.kinks());
    let center = t / c;
    let width = s / c;
    for k in -10..=10 {
        let b = center + k as f64 * width;
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let panel = 0.5 * law.std_dev();
    Composite::new().integrate(&breaks, panel, |x| law.density(x) * kernel((t - c * x) / s))
}

/// Law of `c·X + G`, `X ~ law`, `G ~ N(0, gaussian_var)` independent.
///
/// Gaussian entries collapse to a closed-form normal law; `c = 0` and
/// `gaussian_var = 0` are handled explicitly, and both vanishing gives the
/// point mass at 0.
pub fn convolved_cdf(law: &EntryLaw, scale: f64, gaussian_var: f64) -> Result<DistributionHandle> {
    if !(gaussian_var >= 0.0) || !gaussian_var.is_finite() || !scale.is_finite() {
        return Err(Error::domain(format!("invalid convolution parameters c={scale}, var={gaussian_var}")));
    }
    let c = scale.abs();
    let shape = if c == 0.0 && gaussian_var == 0.0 {
        Shape::PointMass
    } else if c == 0.0 {
        Shape::Gaussian { var: gaussian_var }
    } else if law.kind() == crate::measures::EntryKind::Gaussian {
        Shape::Gaussian { var: c * c * law.sigma2() + gaussian_var }
    } else if gaussian_var == 0.0 {
        Shape::Scaled { law: *law, scale: c }
    } else {
        Shape::Convolved { law: *law, scale: c, sd: gaussian_var.sqrt() }
    };
    let description = format!("{c}*{:?}(var {}) + N(0, {gaussian_var})", law.kind(), law.sigma2()).to_lowercase();
    Ok(DistributionHandle { shape, description })
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::domain("empty sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("sample contains NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov–Smirnov distance `sup |F_n − F|`.
pub fn ks_statistic(samples: &[f64], handle: &DistributionHandle) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = handle.cdf(*x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Empirical CDF evaluated at `x` (right-continuous).
pub fn ecdf(sorted_samples: &[f64], x: f64) -> f64 {
    sorted_samples.partition_point(|s| *s <= x) as f64 / sorted_samples.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub stderr_mean: f64,
    pub stderr_variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Mean and unbiased variance with their standard errors, plus moment-ratio
/// skewness and excess kurtosis.
pub fn summarize(samples: &[f64]) -> Result<Summary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::domain(format!("summary needs at least two samples, got {n}")));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let variance = m2 * nf / (nf - 1.0);
    let stderr_variance = ((m4 - (nf - 3.0) / (nf - 1.0) * variance * variance) / nf).max(0.0).sqrt();
    let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    Ok(Summary {
        n,
        mean,
        variance,
        stderr_mean: (variance / nf).sqrt(),
        stderr_variance,
        skewness,
        excess_kurtosis,
    })
}
