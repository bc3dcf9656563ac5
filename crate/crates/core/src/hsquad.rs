//! Helffer–Sjöstrand quadrature.
//!
//! For a bump `h` equal to 1 near `ρ` and an almost-analytic extension
//! `F_k(h)(x+iy) = Σ_{l≤k} (iy)^l/l! h^{(l)}(x) χ(y)`, the planar integral
//! `(1/π) ∫ ∂̄F_k(h)(z) φ(z) d²z` equals `−Res(φ, ρ)` when `φ` is analytic on
//! the support of `h` away from `ρ`. Bumps are polynomial smoothsteps so all
//! derivatives are exact.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freeconv::FreeConvolution;
use crate::measures::{EntryLaw, SpectralMeasure};
use crate::rmt;
use crate::spike;

/// Cutoff length `L` in units of the bump half-width `δ`.
pub const DEFAULT_CUTOFF_RATIO: f64 = 4.0;

/// Smoothstep `S_p(t) = t^{p+1} Σ_{j≤p} C(p+j, j)(1−t)^j` in the monomial basis.
fn smoothstep_coefficients(p: usize) -> Vec<f64> {
    let binom = |n: usize, k: usize| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    let mut c = vec![0.0; 2 * p + 2];
    for j in 0..=p {
        let a = binom(p + j, j);
        for i in 0..=j {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            c[p + 1 + i] += a * binom(j, i) * sign;
        }
    }
    c
}

/// `C^p` bump: 1 on `[center−δ, center+δ]`, 0 outside `(center−2δ, center+2δ)`.
#[derive(Clone, Debug)]
pub struct SmoothBump {
    center: f64,
    delta: f64,
    order: usize,
    /// Coefficient tables of `S_p`, `S_p′`, ..., `S_p^{(2p+1)}`.
    derivs: Vec<Vec<f64>>,
}

impl SmoothBump {
    pub fn new(center: f64, delta: f64, order: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite() && center.is_finite()) {
            return Err(Error::domain(format!("bump needs a finite center and δ > 0, got {center}, {delta}")));
        }
        if order == 0 {
            return Err(Error::domain("bump smoothness order must be at least 1"));
        }
        let mut derivs = vec![smoothstep_coefficients(order)];
        for _ in 0..2 * order + 1 {
            let last = derivs.last().unwrap();
            derivs.push(last.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect());
        }
        Ok(Self { center, delta, order, derivs })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn step(&self, l: usize, t: f64) -> f64 {
        match self.derivs.get(l) {
            Some(c) => c.iter().rev().fold(0.0, |acc, a| acc * t + a),
            None => 0.0,
        }
    }

    /// `h^{(l)}(x)`.
    pub fn derivative(&self, l: usize, x: f64) -> f64 {
        let u = x - self.center;
        let d = self.delta;
        let a = u.abs();
        // breakpoints absorb rounding so the flat regions are exactly flat
        let tol = 8.0 * f64::EPSILON * (self.center.abs() + 2.0 * d);
        if a >= 2.0 * d - tol {
            return 0.0;
        }
        if a <= d + tol {
            return if l == 0 { 1.0 } else { 0.0 };
        }
        // left transition rises with t = (u + 2δ)/δ, right one falls with t = (2δ − u)/δ
        let t = (2.0 * d - a) / d;
        let sign = if u > 0.0 && l % 2 == 1 { -1.0 } else { 1.0 };
        sign * self.step(l, t) / d.powi(l as i32)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }
}

/// `F_k(h)` with vertical cutoff `χ` (same bump family, 1 on `[−L/2, L/2]`).
#[derive(Clone, Debug)]
pub struct AlmostAnalyticExtension {
    bump: SmoothBump,
    chi: SmoothBump,
    k: usize,
}

impl AlmostAnalyticExtension {
    pub fn new(bump: SmoothBump, cutoff_length: f64, k: usize) -> Result<Self> {
        if k == 0 || k + 1 > bump.order() {
            return Err(Error::domain(format!("need 1 ≤ k ≤ p − 1, got k = {k}, p = {}", bump.order())));
        }
        let chi = SmoothBump::new(0.0, 0.5 * cutoff_length, bump.order())?;
        Ok(Self { bump, chi, k })
    }

    /// Defaults: `k = 3`, `p = 4`, `L = 4δ`.
    ///
    /// Tying `L` to `δ` keeps `F_k` of order one; with a fixed `L` the terms
    /// `y^l h^{(l)}` grow like `δ^{−l}` and cancel in the integral, which costs
    /// accuracy for narrow bumps.
    pub fn standard(center: f64, delta: f64) -> Result<Self> {
        Self::new(SmoothBump::new(center, delta, 4)?, DEFAULT_CUTOFF_RATIO * delta, 3)
    }

    pub fn bump(&self) -> &SmoothBump {
        &self.bump
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cutoff_length(&self) -> f64 {
        2.0 * self.chi.delta()
    }

    /// `Σ_{l≤k} (iy)^l/l! h^{(l)}(x)`.
    fn taylor(&self, x: f64, y: f64) -> Complex64 {
        let iy = Complex64::new(0.0, y);
        let mut term = Complex64::new(1.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        for l in 0..=self.k {
            if l > 0 {
                term *= iy / l as f64;
            }
            s += term * self.bump.derivative(l, x);
        }
        s
    }

    /// `F_k(h)(z)`.
    pub fn extension(&self, z: Complex64) -> Complex64 {
        self.taylor(z.re, z.im) * self.chi.value(z.im)
    }

    /// `∂̄F_k(h)(z)`, with `∂̄ = ½(∂_x + i∂_y)`.
    pub fn dbar(&self, z: Complex64) -> Complex64 {
        let (x, y) = (z.re, z.im);
        let chi = self.chi.value(y);
        let dchi = self.chi.derivative(1, y);
        let mut out = Complex64::new(0.0, 0.0);
        if chi != 0.0 {
            let k = self.k;
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            let iy_k = Complex64::new(0.0, y).powu(k as u32);
            out += 0.5 * chi * iy_k / fact * self.bump.derivative(k + 1, x);
        }
        if dchi != 0.0 {
            out += Complex64::new(0.0, 0.5) * dchi * self.taylor(x, y);
        }
        out
    }
}

/// Tensor grid for the planar quadrature: composite Simpson in each
/// direction, nodes aligned with the breakpoints of `h` and `χ`; the `y`
/// panels are graded geometrically from `δ` up to `L/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub y_min: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { nx: 200, ny: 200, y_min: 0.0 }
    }
}

impl Grid {
    pub fn coarse() -> Self {
        Self { nx: 48, ny: 48, y_min: 0.0 }
    }

    pub fn doubled(&self) -> Self {
        Self { nx: 2 * self.nx, ny: 2 * self.ny, y_min: self.y_min }
    }
}

/// Composite Simpson nodes and weights on consecutive intervals, `panels`
/// subintervals on each (rounded up to even).
fn simpson(breaks: &[f64], panels: &[usize]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (w, &n) in breaks.windows(2).zip(panels) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let n = (n.max(2) + 1) & !1;
        let h = (b - a) / n as f64;
        for i in 0..=n {
            let wt = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            } * h
                / 3.0;
            let x = if i == n { b } else { a + i as f64 * h };
            match out.last_mut() {
                Some(last) if i == 0 && last.0 == x => last.1 += wt,
                _ => out.push((x, wt)),
            }
        }
    }
    out
}

/// Upper-half-plane nodes `z_j` with weights `(1/π) ∂̄F(z_j) dA_j`; nodes where
/// `∂̄F` vanishes are dropped.
pub fn weighted_nodes(ext: &AlmostAnalyticExtension, grid: &Grid) -> Result<Vec<(Complex64, Complex64)>> {
    if grid.nx < 4 || grid.ny < 4 || !(grid.y_min >= 0.0) {
        return Err(Error::domain(format!("invalid quadrature grid {grid:?}")));
    }
    let c = ext.bump.center();
    let d = ext.bump.delta();
    let l = ext.cutoff_length();
    if grid.y_min >= l {
        return Err(Error::domain("y_min must be below the cutoff length"));
    }
    let q = 3 * grid.nx / 8;
    let xs = simpson(&[c - 2.0 * d, c - d, c + d, c + 2.0 * d], &[q, grid.nx - 2 * q, q]);
    let ys = if grid.y_min < 0.5 * l {
        // the integrand varies on the scale δ near the axis: breaks at δ·2^j
        let mut breaks = vec![grid.y_min];
        let mut b = d;
        while b < 0.5 * l {
            if b > grid.y_min {
                breaks.push(b);
            }
            b *= 2.0;
        }
        breaks.push(0.5 * l);
        let m = breaks.len() - 1;
        let lower = 3 * grid.ny / 4;
        let mut panels = vec![(lower / m).max(2); m];
        breaks.push(l);
        panels.push((grid.ny - lower).max(2));
        simpson(&breaks, &panels)
    } else {
        simpson(&[grid.y_min, l], &[grid.ny])
    };
    let mut nodes = Vec::new();
    for &(x, wx) in &xs {
        for &(y, wy) in &ys {
            let z = Complex64::new(x, y);
            let db = ext.dbar(z);
            if db != Complex64::new(0.0, 0.0) {
                nodes.push((z, db * (wx * wy / std::f64::consts::PI)));
            }
        }
    }
    Ok(nodes)
}

/// `(1/π) ∫ ∂̄F_k(h) φ d²z` over both half planes, assuming
/// `φ(z̄) = conj φ(z)` so the lower half is the conjugate of the upper one.
pub fn hs_integral(
    ext: &AlmostAnalyticExtension,
    phi: impl Fn(Complex64) -> Result<Complex64> + Sync,
    grid: &Grid,
) -> Result<Complex64> {
    let upper = half_integral(ext, &phi, grid, false)?;
    Ok(Complex64::new(2.0 * upper.re, 0.0))
}

/// Same integral with both half planes sampled separately; valid for any `φ`.
pub fn hs_integral_full(
    ext: &AlmostAnalyticExtension,
    phi: impl Fn(Complex64) -> Result<Complex64> + Sync,
    grid: &Grid,
) -> Result<Complex64> {
    Ok(half_integral(ext, &phi, grid, false)? + half_integral(ext, &phi, grid, true)?)
}

fn half_integral(
    ext: &AlmostAnalyticExtension,
    phi: &(impl Fn(Complex64) -> Result<Complex64> + Sync),
    grid: &Grid,
    lower: bool,
) -> Result<Complex64> {
    let nodes = weighted_nodes(ext, grid)?;
    let terms: Vec<Complex64> = nodes
        .par_iter()
        .map(|&(z, w)| {
            let (z, w) = if lower { (z.conj(), w.conj()) } else { (z, w) };
            let v = phi(z)?;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Integration(format!("integrand is not finite at {z}")));
            }
            Ok(w * v)
        })
        .collect::<Result<_>>()?;
    // fixed-order reduction
    Ok(terms.iter().sum())
}

/// Result of comparing the planar integral with the closed-form residue.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidueCheck {
    pub integral: f64,
    pub minus_residue: f64,
    pub abs_diff: f64,
    pub delta: f64,
}

/// `δ = min(0.1, dist(ρ, supp λ)/4)`.
pub fn default_delta(nu: &SpectralMeasure, sigma2: f64, theta: f64) -> Result<f64> {
    Ok((spike::distance_to_bulk(nu, sigma2, theta)? / 4.0).min(0.1))
}

/// `φ(z) = 1/(z − σ² g(z) − θ)²` on the nodes.
fn spike_integrand_values(fc: &FreeConvolution, theta: f64, nodes: &[(Complex64, Complex64)]) -> Result<Vec<Complex64>> {
    nodes
        .par_iter()
        .map(|&(z, _)| {
            let w = fc.omega(z)?;
            let d = w - theta;
            Ok(1.0 / (d * d))
        })
        .collect()
}

/// Planar integral of `1/(z − σ²g(z) − θ)²` against `−Res` at `ρ`.
pub fn residue_check(
    nu: &SpectralMeasure,
    sigma2: f64,
    theta: f64,
    delta: Option<f64>,
    k: usize,
    grid: &Grid,
) -> Result<ResidueCheck> {
    let res = spike::residue_at_rho(nu, sigma2, theta)?;
    let rho = theta + sigma2 * nu.stieltjes(Complex64::new(theta, 0.0), 0)?.re;
    let dist = spike::distance_to_bulk(nu, sigma2, theta)?;
    let delta = match delta {
        Some(d) => d,
        None => (dist / 4.0).min(0.1),
    };
    if 2.0 * delta >= dist {
        return Err(Error::domain(format!("bump support (ρ ± {}) meets the bulk at distance {dist}", 2.0 * delta)));
    }
    let ext = AlmostAnalyticExtension::new(SmoothBump::new(rho, delta, (k + 1).max(4))?, DEFAULT_CUTOFF_RATIO * delta, k)?;
    let fc = FreeConvolution::new(nu.clone(), sigma2)?;
    let nodes = weighted_nodes(&ext, grid)?;
    let values = spike_integrand_values(&fc, theta, &nodes)?;
    let upper: Complex64 = nodes.iter().zip(&values).map(|((_, w), v)| w * v).sum();
    let integral = 2.0 * upper.re;
    Ok(ResidueCheck { integral, minus_residue: -res, abs_diff: (integral + res).abs(), delta })
}

/// Monte Carlo estimate of the block-case variance with its standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BlockVariance {
    pub var_zn: f64,
    pub stderr: f64,
    pub trials: usize,
    pub delta: f64,
}

/// Estimates `Var(Z_N)` for a non-diagonal block `A_{N−1}`.
///
/// For each draw of the `(N−1)`-block noise, `M̂ = Ŵ/√N + A_{N−1} = U Λ U*`.
/// With `J_k = (1/π) ∫ ∂̄F(z) f(z)/(z − λ_k) d²z` and `f = 1/(z−σ²g(z)−θ)²`,
/// the double planar integral against `κ_N` reduces to
/// `½(m₄−3σ⁴)(1/N) Σ_i (Σ_k |U_ik|² J_k)² + σ⁴ (1/N) Σ_k J_k²`; the estimate is
/// the mean of that quantity over draws. `g` is the transform of the free
/// convolution with the spectral measure of `A_{N−1}`.
pub fn block_variance_estimate(
    sub_a: &Mat<Complex64>,
    law: &EntryLaw,
    theta: f64,
    mc_trials: usize,
    grid: &Grid,
    seed: u64,
) -> Result<BlockVariance> {
    let n1 = sub_a.nrows();
    if n1 == 0 || sub_a.ncols() != n1 {
        return Err(Error::domain("sub-block must be a nonempty square matrix"));
    }
    if mc_trials < 2 {
        return Err(Error::domain("block variance needs at least two Monte Carlo trials"));
    }
    let sigma2 = law.sigma2();
    let spectrum = sub_a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("{e:?}")))?;
    if spectrum.iter().any(|l| (l - theta).abs() < 1e-12) {
        return Err(Error::domain("theta is an eigenvalue of the sub-block"));
    }
    let nu = SpectralMeasure::empirical(&spectrum)?;
    let (ok, margin) = spike::check_outlier_condition(&nu, sigma2, theta)?;
    if !ok {
        return Err(Error::NoOutlier { margin });
    }
    let rho = theta + sigma2 * nu.stieltjes(Complex64::new(theta, 0.0), 0)?.re;
    let delta = default_delta(&nu, sigma2, theta)?;
    let ext = AlmostAnalyticExtension::standard(rho, delta)?;
    let fc = FreeConvolution::new(nu, sigma2)?;
    let nodes = weighted_nodes(&ext, grid)?;
    let f = spike_integrand_values(&fc, theta, &nodes)?;
    let weights: Vec<(Complex64, Complex64)> = nodes.iter().zip(&f).map(|((z, w), fz)| (*z, w * fz)).collect();

    let n = (n1 + 1) as f64;
    let kurt = 0.5 * law.kurtosis_excess();
    let s4 = sigma2 * sigma2;
    let draws: Vec<f64> = (0..mc_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
            let mut m = rmt::wigner_noise(n1, law, n1 + 1, &mut rng);
            m += sub_a;
            let eig = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Numeric(format!("{e:?}")))?;
            let lambdas: Vec<f64> = (0..n1).map(|k| eig.S()[k].re).collect();
            let j: Vec<f64> = lambdas
                .iter()
                .map(|&l| 2.0 * weights.iter().map(|(z, w)| (w / (z - l)).re).sum::<f64>())
                .collect();
            let u = eig.U();
            let mut diag = 0.0;
            if kurt != 0.0 {
                for i in 0..n1 {
                    let ii: f64 = (0..n1).map(|k| u[(i, k)].norm_sqr() * j[k]).sum();
                    diag += ii * ii;
                }
            }
            let tr: f64 = j.iter().map(|v| v * v).sum();
            Ok(kurt * diag / n + s4 * tr / n)
        })
        .collect::<Result<_>>()?;
    let s = crate::stats::summarize(&draws)?;
    Ok(BlockVariance { var_zn: s.mean, stderr: s.stderr_mean, trials: mc_trials, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn smoothstep_is_cp() {
        for p in 1..6 {
            let b = SmoothBump::new(0.0, 1.0, p).unwrap();
            assert_abs_diff_eq!(b.step(0, 0.0), 0.0);
            assert_abs_diff_eq!(b.step(0, 1.0), 1.0, epsilon = 1e-12);
            for l in 1..=p {
                assert_abs_diff_eq!(b.step(l, 0.0), 0.0, epsilon = 1e-10);
                assert_abs_diff_eq!(b.step(l, 1.0), 0.0, epsilon = 1e-9);
            }
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let v = b.step(0, t);
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn bump_shape_and_derivatives() {
        let b = SmoothBump::new(2.5, 0.2, 4).unwrap();
        assert_eq!(b.value(2.5), 1.0);
        assert_eq!(b.value(2.31), 1.0);
        assert_eq!(b.value(2.9), 0.0);
        assert_eq!(b.value(2.0), 0.0);
        assert!(b.value(2.75) > 0.0 && b.value(2.75) < 1.0);
        assert_abs_diff_eq!(b.value(2.2), b.value(2.8), epsilon = 1e-14);
        // derivatives against central differences
        let h = 1e-5;
        for x in [2.13, 2.27, 2.74, 2.86] {
            for l in 0..5 {
                let fd = (b.derivative(l, x + h) - b.derivative(l, x - h)) / (2.0 * h);
                let ex = b.derivative(l + 1, x);
                assert!((fd - ex).abs() <= 1e-5 * ex.abs().max(1.0), "l={l} x={x}: {fd} vs {ex}");
            }
        }
    }

    #[test]
    fn dbar_vanishing_regions() {
        let ext = AlmostAnalyticExtension::standard(2.5, 0.2).unwrap();
        for i in 0..=40 {
            for j in 0..=40 {
                let x = 2.3 + 0.4 * i as f64 / 40.0;
                let y = -0.4 + 0.8 * j as f64 / 40.0;
                assert_eq!(ext.dbar(c(x, y)), c(0.0, 0.0));
            }
        }
        for x in [1.0, 2.0, 2.5, 2.95, 4.0] {
            assert_eq!(ext.dbar(c(x, 1.0)), c(0.0, 0.0));
            assert_eq!(ext.dbar(c(x, -1.3)), c(0.0, 0.0));
        }
        assert_eq!(ext.dbar(c(1.9, 0.2)), c(0.0, 0.0));
    }

    #[test]
    fn dbar_matches_differentiation_of_the_extension() {
        // ∂̄ = ½(∂x + i∂y) by central differences on F_k, an independent path
        let ext = AlmostAnalyticExtension::new(SmoothBump::new(0.0, 0.5, 5).unwrap(), 1.0, 2).unwrap();
        let h = 1e-5;
        for z in [c(0.7, 0.1), c(-0.8, 0.3), c(0.6, 0.7), c(-0.2, 0.6), c(0.9, -0.65)] {
            let dx = (ext.extension(z + h) - ext.extension(z - h)) / (2.0 * h);
            let dy = (ext.extension(z + c(0.0, h)) - ext.extension(z - c(0.0, h))) / (2.0 * h);
            let fd = 0.5 * (dx + c(0.0, 1.0) * dy);
            let exact = ext.dbar(z);
            assert!((fd - exact).norm() < 1e-6 * exact.norm().max(1.0), "{z}: {fd} vs {exact}");
        }
        // with χ ≡ 1 and k = 2 the closed form is ½ (iy)²/2 h‴(x)
        let z = c(0.7, 0.1);
        let closed = 0.5 * c(0.0, 0.1).powu(2) / 2.0 * ext.bump().derivative(3, 0.7);
        assert!((ext.dbar(z) - closed).norm() < 1e-14);
    }

    #[test]
    fn dbar_is_conjugate_symmetric() {
        let ext = AlmostAnalyticExtension::standard(0.0, 0.3).unwrap();
        for z in [c(0.4, 0.2), c(-0.5, 0.7), c(0.1, 0.6)] {
            assert!((ext.dbar(z.conj()) - ext.dbar(z).conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn k_must_fit_smoothness() {
        assert!(AlmostAnalyticExtension::new(SmoothBump::new(0.0, 1.0, 3).unwrap(), 1.0, 3).is_err());
        assert!(AlmostAnalyticExtension::new(SmoothBump::new(0.0, 1.0, 4).unwrap(), 1.0, 0).is_err());
    }

    #[test]
    fn cauchy_checks() {
        let ext = AlmostAnalyticExtension::standard(2.5, 0.2).unwrap();
        let g = Grid::default();
        assert_eq!(hs_integral(&ext, |_| Ok(c(0.0, 0.0)), &g).unwrap(), c(0.0, 0.0));
        let simple = hs_integral(&ext, |z| Ok(1.0 / (z - 2.5)), &g).unwrap();
        assert_abs_diff_eq!(simple.re, -1.0, epsilon = 1e-3);
        // analytic on the whole support: only quadrature error remains, and it
        // falls at fourth order
        let entire = hs_integral(&ext, |z| Ok(z * z + 3.0), &g).unwrap();
        let finer = hs_integral(&ext, |z| Ok(z * z + 3.0), &g.doubled()).unwrap();
        assert!(entire.norm() < 1e-3, "{entire}");
        assert!(finer.norm() * 12.0 < entire.norm(), "{entire} {finer}");
        let outside = hs_integral(&ext, |z| Ok(1.0 / (z - 10.0)), &g).unwrap();
        assert!(outside.norm() < 1e-5, "{outside}");
    }

    #[test]
    fn reflection_matches_full_integration() {
        let ext = AlmostAnalyticExtension::standard(2.5, 0.2).unwrap();
        let g = Grid::default();
        let phi = |z: Complex64| Ok(1.0 / ((z - 2.5) * (z - 2.5)) + 1.0 / (z - 2.45));
        let a = hs_integral(&ext, phi, &g).unwrap();
        let b = hs_integral_full(&ext, phi, &g).unwrap();
        assert!((a - b).norm() < 1e-10);
        assert_abs_diff_eq!(a.re, -1.0, epsilon = 1e-3);
    }

    #[test]
    fn residue_checks() {
        let nu = SpectralMeasure::point_mass(0.0);
        let r = residue_check(&nu, 1.0, 2.0, Some(0.2), 3, &Grid::default()).unwrap();
        assert_abs_diff_eq!(r.minus_residue, -0.25, epsilon = 1e-15);
        assert!(r.abs_diff < 1e-3, "{r:?}");
        let r = residue_check(&nu, 1.0, 2.0, None, 3, &Grid::default()).unwrap();
        assert!(r.abs_diff < 1e-3, "{r:?}");
        let two = SpectralMeasure::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let r = residue_check(&two, 1.0, 2.0, None, 3, &Grid::default()).unwrap();
        assert_abs_diff_eq!(r.minus_residue, -28.0 / 27.0, epsilon = 1e-12);
        assert!(r.abs_diff < 1e-3, "{r:?}");
        assert!(residue_check(&nu, 1.0, 2.0, Some(0.3), 3, &Grid::default()).is_err());
    }

    #[test]
    fn grid_doubling_reduces_error() {
        let nu = SpectralMeasure::point_mass(0.0);
        let coarse = residue_check(&nu, 1.0, 2.0, None, 3, &Grid::coarse()).unwrap();
        let fine = residue_check(&nu, 1.0, 2.0, None, 3, &Grid::coarse().doubled()).unwrap();
        assert!(fine.abs_diff * 4.0 <= coarse.abs_diff, "{coarse:?} {fine:?}");
    }

    #[test]
    fn node_transform_matches_residue_oracle() {
        // J(λ) = (1/π)∫∂̄F f/(z−λ) against −Res(f/(z−λ), ρ) with f = 1/φ₁², φ₁ = z − 1/z... for ν = δ₀:
        // ω(z) solves ω + 1/ω = z, φ₁ = ω − θ, so Res = (q′φ₁′ − q φ₁″)/φ₁′³ at ρ with q = 1/(z−λ).
        let theta = 2.0;
        let rho = 2.5;
        let fc = FreeConvolution::new(SpectralMeasure::point_mass(0.0), 1.0).unwrap();
        let ext = AlmostAnalyticExtension::standard(rho, 0.1).unwrap();
        let nodes = weighted_nodes(&ext, &Grid::default().doubled()).unwrap();
        let f = spike_integrand_values(&fc, theta, &nodes).unwrap();
        // φ₁′ = ω′ = 1/(1 − 1/θ²), φ₁″ = ω″ = −g″_ν(θ) ω′³ with g″_ν(θ) = 2/θ³
        let w1 = 1.0 / (1.0 - 1.0 / (theta * theta));
        let w2 = -2.0 / theta.powi(3) * w1.powi(3);
        for lambda in [-2.0, 0.0, 1.9] {
            let j: f64 = 2.0 * nodes.iter().zip(&f).map(|((z, w), fz)| (w * fz / (z - lambda)).re).sum::<f64>();
            let q = 1.0 / (rho - lambda);
            let dq = -q * q;
            let res = (dq * w1 - q * w2) / w1.powi(3);
            assert!((j + res).abs() < 5e-5 * res.abs().max(1.0), "λ={lambda}: {j} vs {}", -res);
        }
    }
}
