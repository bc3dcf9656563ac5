//! Closed-form predictions for a single spike `θ` of `A_N`.
//!
//! Everything is expressed through `g_ν` and its first three derivatives at
//! `θ`. With `I = ∫ dν/(θ−x)² = −g′_ν(θ)`:
//!
//! * outlier location `ρ = θ + σ² g_ν(θ)`, overlap `τ = 1 − σ² I`;
//! * eigenvalue CLT: `c = 1/τ`, `v² = ½(m₄−3σ⁴) I + σ⁴ I/τ`;
//! * eigenvector CLT: `√N(|v₁|² − τ_N) → c W₁₁ + Z` with `c = σ² g″_ν(θ)` and
//!   `Var Z = ½(m₄−3σ⁴) A + σ⁴ B`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freeconv::FreeConvolution;
use crate::measures::{EntryLaw, SpectralMeasure};

/// Margins below this are reported as near-critical.
pub const NEAR_CRITICAL_MARGIN: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikePrediction {
    pub theta: f64,
    pub sigma2: f64,
    pub condition_ok: bool,
    pub margin: f64,
    pub rho: f64,
    pub tau: f64,
    pub c_eigenvalue: f64,
    pub v2_eigenvalue: f64,
    pub c_eigenvector: f64,
    #[serde(rename = "A_coef")]
    pub a_coef: f64,
    #[serde(rename = "B_coef")]
    pub b_coef: f64,
    #[serde(rename = "varZ")]
    pub var_z: f64,
    pub m4: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SpikePrediction {
    /// Variance of `c W₁₁ + Z`, the eigenvector fluctuation limit.
    pub fn eigenvector_limit_variance(&self) -> f64 {
        self.c_eigenvector * self.c_eigenvector * self.sigma2 + self.var_z
    }

    /// Variance of `μ ⋆ N(0, v²)`, the eigenvalue fluctuation limit.
    pub fn eigenvalue_limit_variance(&self) -> f64 {
        self.sigma2 + self.v2_eigenvalue
    }
}

/// `g_ν^{(r)}(θ)` for `r = 0..=3`, all real.
fn derivatives_at(nu: &SpectralMeasure, theta: f64) -> Result<[f64; 4]> {
    let z = Complex64::new(theta, 0.0);
    let mut d = [0.0; 4];
    for (r, slot) in d.iter_mut().enumerate() {
        *slot = nu.stieltjes(z, r as u32)?.re;
    }
    Ok(d)
}

/// `(margin > 0, margin)` with `margin = 1 − σ² ∫ dν/(θ−x)²`.
pub fn check_outlier_condition(nu: &SpectralMeasure, sigma2: f64, theta: f64) -> Result<(bool, f64)> {
    let margin = 1.0 - sigma2 * nu.inverse_square_moment(theta)?;
    Ok((margin > 0.0, margin))
}

/// All limiting constants for the spike `θ`, with `σ²` and `m₄` taken from
/// the entry law.
pub fn predict(nu: &SpectralMeasure, theta: f64, law: &EntryLaw) -> Result<SpikePrediction> {
    let sigma2 = law.sigma2();
    let (ok, margin) = check_outlier_condition(nu, sigma2, theta)?;
    if !ok {
        return Err(Error::NoOutlier { margin });
    }
    let [g0, g1, g2, g3] = derivatives_at(nu, theta)?;
    let s4 = sigma2 * sigma2;
    let kurt = law.kurtosis_excess();
    let inv_sq = -g1;
    let tau = margin;
    let one_plus = 1.0 + sigma2 * g1;
    let a_coef = -g3 * one_plus * one_plus;
    let b_coef = 2.0 * sigma2 * g2 * g2 * one_plus + a_coef;

    let mut warnings = Vec::new();
    if margin < NEAR_CRITICAL_MARGIN {
        warnings.push(format!("near-critical spike: margin {margin:.4} < {NEAR_CRITICAL_MARGIN}"));
    }
    if g2 == 0.0 {
        warnings.push("g''(theta) vanishes: the W11 term drops out of the eigenvector limit".to_string());
    }

    Ok(SpikePrediction {
        theta,
        sigma2,
        condition_ok: ok,
        margin,
        rho: theta + sigma2 * g0,
        tau,
        c_eigenvalue: 1.0 / tau,
        v2_eigenvalue: 0.5 * kurt * inv_sq + s4 * inv_sq / tau,
        c_eigenvector: h_second_derivative(sigma2, g2),
        a_coef,
        b_coef,
        var_z: 0.5 * kurt * a_coef + s4 * b_coef,
        m4: law.m4(),
        warnings,
    })
}

/// Coefficients of the eigenvector-limit variance obtained directly from the
/// residue at `ρ` of the resolvent-entry covariance, as a cross-check of
/// [`SpikePrediction::var_z`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidueVariance {
    /// Weight of `½(m₄ − 3σ⁴)`: `∫ (σ²g″_ν(θ)/(θ−x) − τ/(θ−x)²)² dν(x)`.
    pub kurtosis_coef: f64,
    /// Weight of `σ⁴`: `∫ Res_ρ[1/((z−x)(ω(z)−θ)²)]² dλ(x)`.
    pub trace_coef: f64,
    pub var_z: f64,
}

/// Variance of `Z` from residues of the planar representation, expanded in
/// `g_ν` and its derivatives at `θ`.
pub fn residue_variance(nu: &SpectralMeasure, theta: f64, law: &EntryLaw) -> Result<ResidueVariance> {
    let sigma2 = law.sigma2();
    let (ok, margin) = check_outlier_condition(nu, sigma2, theta)?;
    if !ok {
        return Err(Error::NoOutlier { margin });
    }
    let [_, g1, g2, g3] = derivatives_at(nu, theta)?;
    let tau = margin;
    let s4 = sigma2 * sigma2;
    let kurtosis_coef = -s4 * g2 * g2 * g1 - sigma2 * g2 * g2 * tau - tau * tau * g3 / 6.0;
    let trace_coef = -g3 / 6.0 - sigma2 * g2 * g2 / (2.0 * tau) - s4 * g2 * g2 * g1 / tau;
    Ok(ResidueVariance {
        kurtosis_coef,
        trace_coef,
        var_z: 0.5 * law.kurtosis_excess() * kurtosis_coef + s4 * trace_coef,
    })
}

/// `H″(θ) = σ² g″_ν(θ)` for `H(u) = u + σ² g_ν(u)`.
fn h_second_derivative(sigma2: f64, g2: f64) -> f64 {
    sigma2 * g2
}

/// `(τ_N, ρ^{(N)})` from the realized spectrum of `A_{N−1}`, with the
/// `1/(N−1)` normalization.
pub fn finite_n_centerings(sub_spectrum: &[f64], sigma2: f64, theta: f64) -> Result<(f64, f64)> {
    if sub_spectrum.is_empty() {
        return Err(Error::domain("sub-spectrum is empty"));
    }
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &l in sub_spectrum {
        let d = theta - l;
        if d.abs() <= 1e-12 * theta.abs().max(1.0) {
            return Err(Error::domain(format!("theta = {theta} coincides with an eigenvalue of the sub-block")));
        }
        s1 += 1.0 / d;
        s2 += 1.0 / (d * d);
    }
    let n1 = sub_spectrum.len() as f64;
    Ok((1.0 - sigma2 * s2 / n1, theta + sigma2 * s1 / n1))
}

/// `|I/(1 − σ² I) − (−g′_λ(ρ))|`, both sides of the subordination identity
/// for `∫ dλ/(ρ−x)²`.
pub fn subordination_identity_residual(nu: &SpectralMeasure, sigma2: f64, theta: f64) -> Result<f64> {
    let (ok, margin) = check_outlier_condition(nu, sigma2, theta)?;
    if !ok {
        return Err(Error::NoOutlier { margin });
    }
    let inv_sq = nu.inverse_square_moment(theta)?;
    let lhs = inv_sq / margin;
    let rho = theta + sigma2 * nu.stieltjes(Complex64::new(theta, 0.0), 0)?.re;
    let fc = FreeConvolution::new(nu.clone(), sigma2)?;
    let rhs = -fc.subordinated_g(Complex64::new(rho, 0.0), 1)?.re;
    Ok((lhs - rhs).abs())
}

/// Residue of `1/(z − σ² g(z) − θ)²` at `ρ`, equal to `H″(θ)`.
pub fn residue_at_rho(nu: &SpectralMeasure, sigma2: f64, theta: f64) -> Result<f64> {
    let (ok, margin) = check_outlier_condition(nu, sigma2, theta)?;
    if !ok {
        return Err(Error::NoOutlier { margin });
    }
    let g2 = nu.stieltjes(Complex64::new(theta, 0.0), 2)?.re;
    Ok(h_second_derivative(sigma2, g2))
}

/// Same residue computed on the `λ` side: with `φ₁(z) = z − σ² g(z) − θ`,
/// `Res(1/φ₁², ρ) = −φ₁″(ρ)/φ₁′(ρ)³`.
pub fn residue_via_subordination(nu: &SpectralMeasure, sigma2: f64, theta: f64) -> Result<f64> {
    let (ok, margin) = check_outlier_condition(nu, sigma2, theta)?;
    if !ok {
        return Err(Error::NoOutlier { margin });
    }
    let rho = theta + sigma2 * nu.stieltjes(Complex64::new(theta, 0.0), 0)?.re;
    let fc = FreeConvolution::new(nu.clone(), sigma2)?;
    let [_, g1, g2] = fc.derivatives(Complex64::new(rho, 0.0))?;
    let phi1 = 1.0 - sigma2 * g1.re;
    let phi2 = -sigma2 * g2.re;
    Ok(-phi2 / (phi1 * phi1 * phi1))
}

/// Distance from `ρ` to `supp λ`.
pub fn distance_to_bulk(nu: &SpectralMeasure, sigma2: f64, theta: f64) -> Result<f64> {
    let rho = theta + sigma2 * nu.stieltjes(Complex64::new(theta, 0.0), 0)?.re;
    let fc = FreeConvolution::new(nu.clone(), sigma2)?;
    Ok(fc.solve_real(rho)?.distance_to_support())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn delta0() -> SpectralMeasure {
        SpectralMeasure::point_mass(0.0)
    }

    fn two_atoms() -> SpectralMeasure {
        SpectralMeasure::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn outlier_condition_examples() {
        let (ok, m) = check_outlier_condition(&delta0(), 1.0, 2.0).unwrap();
        assert!(ok);
        assert_abs_diff_eq!(m, 0.75, epsilon = 1e-15);
        assert_eq!(check_outlier_condition(&delta0(), 1.0, 1.0).unwrap(), (false, 0.0));
        let (ok, m) = check_outlier_condition(&two_atoms(), 1.0, 2.0).unwrap();
        assert!(ok);
        assert_abs_diff_eq!(m, 4.0 / 9.0, epsilon = 1e-15);
        assert!(matches!(check_outlier_condition(&delta0(), 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn gaussian_point_mass_prediction() {
        let p = predict(&delta0(), 2.0, &EntryLaw::gaussian(1.0)).unwrap();
        assert_abs_diff_eq!(p.rho, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.tau, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p.c_eigenvector, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.a_coef, 27.0 / 128.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.b_coef, 39.0 / 128.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.var_z, 39.0 / 128.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v2_eigenvalue, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.c_eigenvalue, 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.eigenvector_limit_variance(), 47.0 / 128.0, epsilon = 1e-12);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn laplace_point_mass_prediction() {
        let p = predict(&delta0(), 2.0, &EntryLaw::laplace(1.0)).unwrap();
        assert_abs_diff_eq!(p.var_z, 79.5 / 128.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v2_eigenvalue, 17.0 / 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.eigenvector_limit_variance(), 87.5 / 128.0, epsilon = 1e-12);
    }

    #[test]
    fn two_atom_prediction() {
        let p = predict(&two_atoms(), 2.0, &EntryLaw::gaussian(1.0)).unwrap();
        assert_abs_diff_eq!(p.rho, 8.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.tau, 4.0 / 9.0, epsilon = 1e-12);
        assert_eq!(p.c_eigenvector, residue_at_rho(&two_atoms(), 1.0, 2.0).unwrap());
        assert_abs_diff_eq!(p.c_eigenvector, 28.0 / 27.0, epsilon = 1e-12);
    }

    #[test]
    fn no_outlier_error() {
        assert!(matches!(predict(&delta0(), 1.0, &EntryLaw::gaussian(1.0)), Err(Error::NoOutlier { .. })));
        assert!(matches!(predict(&delta0(), 0.5, &EntryLaw::gaussian(1.0)), Err(Error::NoOutlier { .. })));
    }

    #[test]
    fn near_critical_warning() {
        let p = predict(&delta0(), 1.02, &EntryLaw::gaussian(1.0)).unwrap();
        assert!(p.margin < NEAR_CRITICAL_MARGIN);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn centerings() {
        let (t, r) = finite_n_centerings(&[0.0, 0.0, 0.0], 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(t, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 2.5, epsilon = 1e-15);
        let (t, r) = finite_n_centerings(&[-1.0, 1.0], 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(t, 4.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 8.0 / 3.0, epsilon = 1e-15);
        let q = SpectralMeasure::uniform(-1.0, 1.0).unwrap().discretize_quantiles(400).unwrap();
        let (t, _) = finite_n_centerings(&q, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(t, 2.0 / 3.0, epsilon = 5e-3);
        assert!(finite_n_centerings(&[2.0, 0.0], 1.0, 2.0).is_err());
    }

    #[test]
    fn subordination_identity() {
        assert!(subordination_identity_residual(&delta0(), 1.0, 2.0).unwrap() < 1e-9);
        assert!(subordination_identity_residual(&two_atoms(), 1.0, 2.0).unwrap() < 1e-7);
        assert!(subordination_identity_residual(&delta0(), 1e-10, 2.0).unwrap() < 1e-8);
        let u = SpectralMeasure::uniform(-1.0, 1.0).unwrap();
        assert!(subordination_identity_residual(&u, 1.0, 2.5).unwrap() < 1e-7);
    }

    #[test]
    fn residues() {
        assert_abs_diff_eq!(residue_at_rho(&delta0(), 1.0, 2.0).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(residue_at_rho(&two_atoms(), 1.0, 2.0).unwrap(), 28.0 / 27.0, epsilon = 1e-14);
        assert_abs_diff_eq!(residue_at_rho(&two_atoms(), 0.5, 2.0).unwrap(), 14.0 / 27.0, epsilon = 1e-14);
        for nu in [delta0(), two_atoms()] {
            let a = residue_at_rho(&nu, 1.0, 2.0).unwrap();
            let b = residue_via_subordination(&nu, 1.0, 2.0).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn gaussian_links_to_pure_gaussian_limit() {
        for nu in [delta0(), two_atoms()] {
            let p = predict(&nu, 2.0, &EntryLaw::gaussian(1.0)).unwrap();
            assert_abs_diff_eq!(p.v2_eigenvalue + p.sigma2, p.sigma2 * p.c_eigenvalue, epsilon = 1e-12);
        }
    }

    #[test]
    fn bulk_distance() {
        assert_abs_diff_eq!(distance_to_bulk(&delta0(), 1.0, 2.0).unwrap(), 0.5, epsilon = 1e-9);
        let d = distance_to_bulk(&two_atoms(), 1.0, 2.0).unwrap();
        assert!(d > 0.06 && d < 0.08, "{d}");
    }

    proptest! {
        #[test]
        fn invariants_hold(theta in 1.8f64..5.0, a in -0.8f64..0.8, w in 0.1f64..0.9, s2 in 0.2f64..1.0) {
            let nu = SpectralMeasure::discrete(&[(a, w), (-0.9, 1.0 - w)]).unwrap();
            let law = EntryLaw::laplace(s2);
            if let Ok(p) = predict(&nu, theta, &law) {
                prop_assert!(p.tau > 0.0 && p.tau <= 1.0);
                prop_assert!(p.var_z >= 0.0);
                prop_assert!(p.b_coef - p.a_coef >= -1e-15);
                prop_assert_eq!(p.c_eigenvalue, 1.0 / p.tau);
                prop_assert_eq!(p.c_eigenvector, residue_at_rho(&nu, s2, theta).unwrap());
            }
        }

        #[test]
        fn shift_equivariance_and_zero_atoms(theta in 2.5f64..4.0, s in -3.0f64..3.0) {
            let nu = two_atoms();
            let law = EntryLaw::uniform(1.0);
            let p = predict(&nu, theta, &law).unwrap();
            let q = predict(&nu.shifted(s), theta + s, &law).unwrap();
            prop_assert!((q.rho - p.rho - s).abs() < 1e-12);
            prop_assert!((q.tau - p.tau).abs() < 1e-12);
            prop_assert!((q.var_z - p.var_z).abs() < 1e-10);
            prop_assert!((q.c_eigenvector - p.c_eigenvector).abs() < 1e-12);
            let z = predict(&nu.with_atom(0.3, 0.0).unwrap(), theta, &law).unwrap();
            prop_assert_eq!(z, p);
        }
    }

    #[test]
    fn residue_variance_oracles() {
        // trace part: ∫ Res² against the semicircle density, Res = (q′ω′ − qω″)/ω′³
        let nu = SpectralMeasure::point_mass(0.0);
        let r = residue_variance(&nu, 2.0, &EntryLaw::gaussian(1.0)).unwrap();
        let (w1, w2) = (4.0 / 3.0, -16.0 / 27.0);
        let n = 200_000;
        let mut acc = 0.0;
        for i in 0..n {
            let x = -2.0 + 4.0 * (i as f64 + 0.5) / n as f64;
            let q = 1.0 / (2.5 - x);
            let res = (-q * q * w1 - q * w2) / (w1 * w1 * w1);
            acc += res * res * (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI) * 4.0 / n as f64;
        }
        assert_abs_diff_eq!(r.trace_coef, acc, epsilon = 1e-8);
        assert_abs_diff_eq!(r.trace_coef, 1.0 / 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.var_z, 1.0 / 24.0, epsilon = 1e-12);
        // kurtosis part: atom-wise squares
        let two = SpectralMeasure::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let lap = EntryLaw::laplace(1.0);
        let r = residue_variance(&two, 2.0, &lap).unwrap();
        let g2: f64 = 0.5 * (2.0 / 27.0 + 2.0);
        let tau = 4.0 / 9.0;
        let k: f64 = [3.0f64, 1.0].iter().map(|p| 0.5 * (g2 / p - tau / (p * p)).powi(2)).sum();
        assert_abs_diff_eq!(r.kurtosis_coef, k, epsilon = 1e-12);
        assert_abs_diff_eq!(r.var_z, 1.5 * k + r.trace_coef, epsilon = 1e-12);
        assert_abs_diff_eq!(residue_variance(&nu, 2.0, &lap).unwrap().kurtosis_coef, 1.0 / 256.0, epsilon = 1e-12);
    }

}
