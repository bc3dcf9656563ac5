//! Stieltjes transform of `λ = μ_sc(σ²) ⊞ ν` through the subordination
//! fixed point `g = g_ν(z − σ² g)`.
//!
//! Off the real axis the fixed point is found by damped iteration started at
//! `1/z`, switching to a safeguarded Newton method when the damped map is
//! slow. On the real axis (outside `supp λ`) the subordination point
//! `ω = x − σ² g` is real and solves `H(ω) = x` for `H(u) = u + σ² g_ν(u)`
//! on a real interval where `H′ > 0`; a short homotopy in `Im z` selects that
//! interval.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::SpectralMeasure;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub damping: f64,
    /// Damped iterations tried before switching to Newton.
    pub newton_after: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 1000, tolerance: 1e-12, damping: 0.5, newton_after: 200 }
    }
}

/// Default `ε` ladder for Stieltjes inversion.
pub const DEFAULT_EPSILONS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
/// Densities below this count as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;
/// Real points closer than this to `supp λ` are rejected.
pub const REAL_AXIS_TOLERANCE: f64 = 1e-9;

const HOMOTOPY_STEPS: usize = 10;

/// Real-axis solution of the subordination equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealPoint {
    pub x: f64,
    pub g: f64,
    /// `ω(x)`, a real point off `supp ν` with `H(ω) = x`.
    pub omega: f64,
    /// The gap of `supp λ` containing `x` (infinite ends for the outer gaps).
    pub gap: (f64, f64),
}

impl RealPoint {
    /// Distance from `x` to `supp λ`.
    pub fn distance_to_support(&self) -> f64 {
        (self.x - self.gap.0).min(self.gap.1 - self.x)
    }
}

#[derive(Clone, Debug)]
pub struct FreeConvolution {
    base: SpectralMeasure,
    sigma2: f64,
    options: SolverOptions,
}

impl FreeConvolution {
    pub fn new(base: SpectralMeasure, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("semicircle variance must be positive, got {sigma2}")));
        }
        Ok(Self { base, sigma2, options: SolverOptions::default() })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn base(&self) -> &SpectralMeasure {
        &self.base
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `H(u) = u + σ² g_ν(u)`, the functional inverse of `ω`.
    pub fn h_map(&self, u: Complex64) -> Result<Complex64> {
        Ok(u + self.sigma2 * self.base.stieltjes(u, 0)?)
    }

    /// `g(z)` (order 0) or `g′(z)` (order 1).
    pub fn subordinated_g(&self, z: Complex64, order: u32) -> Result<Complex64> {
        if order > 1 {
            return Err(Error::domain(format!("order {order} is not supported, use derivatives()")));
        }
        let (g, omega) = self.solve(z)?;
        if order == 0 {
            return Ok(g);
        }
        let d1 = self.base.stieltjes_unchecked(omega, 1);
        Ok(d1 / (1.0 + self.sigma2 * d1))
    }

    /// `ω(z) = z − σ² g(z)`.
    pub fn omega(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.solve(z)?.1)
    }

    /// `(g, g′, g″)` at `z`, from `g″ = g″_ν(ω)·ω′³` and `ω′ = 1/(1 + σ² g′_ν(ω))`.
    pub fn derivatives(&self, z: Complex64) -> Result<[Complex64; 3]> {
        let (g, omega) = self.solve(z)?;
        let d1 = self.base.stieltjes_unchecked(omega, 1);
        let d2 = self.base.stieltjes_unchecked(omega, 2);
        let w1 = 1.0 / (1.0 + self.sigma2 * d1);
        Ok([g, d1 * w1, d2 * w1 * w1 * w1])
    }

    /// Returns `(g, ω)`.
    fn solve(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::domain(format!("non-finite argument {z}")));
        }
        if z.im == 0.0 {
            let p = self.solve_real(z.re)?;
            return Ok((Complex64::new(p.g, 0.0), Complex64::new(p.omega, 0.0)));
        }
        if z.im < 0.0 {
            let (g, w) = self.solve_upper(z.conj(), None)?;
            return Ok((g.conj(), w.conj()));
        }
        self.solve_upper(z, None)
    }

    /// Fixed point for `Im z > 0`, optionally warm-started.
    fn solve_upper(&self, z: Complex64, start: Option<Complex64>) -> Result<(Complex64, Complex64)> {
        let s2 = self.sigma2;
        let opts = &self.options;
        let mut g = start.unwrap_or(1.0 / z);
        let residual = |g: Complex64| -> (Complex64, Complex64) {
            let w = z - s2 * g;
            (g - self.base.stieltjes_unchecked(w, 0), w)
        };
        let (mut r, mut w) = residual(g);
        let damped = if start.is_some() { 0 } else { opts.newton_after.min(opts.max_iterations) };
        let mut it = 0;
        while it < damped && r.norm() >= opts.tolerance {
            g -= opts.damping * r;
            (r, w) = residual(g);
            it += 1;
        }
        while it < opts.max_iterations && r.norm() >= opts.tolerance {
            let d1 = self.base.stieltjes_unchecked(w, 1);
            let step = r / (1.0 + s2 * d1);
            // keep the iterate in the lower half plane and reduce the residual
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = g - t * step;
                if cand.im < 0.0 && cand.re.is_finite() && cand.im.is_finite() {
                    let (rc, wc) = residual(cand);
                    if rc.norm() < r.norm() || t < 1e-6 {
                        g = cand;
                        r = rc;
                        w = wc;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                // fall back to one damped step
                g -= opts.damping * r;
                (r, w) = residual(g);
            }
            it += 1;
        }
        if !(r.norm() < opts.tolerance) {
            return Err(Error::Solver { iterations: it, residual: r.norm() });
        }
        Ok((g, w))
    }

    /// Solution on the real axis outside `supp λ`.
    pub fn solve_real(&self, x: f64) -> Result<RealPoint> {
        // Homotopy from x + i down to x + 0.1i selects the branch.
        let mut g = None;
        for k in 0..HOMOTOPY_STEPS {
            let y = 1.0 - k as f64 / HOMOTOPY_STEPS as f64;
            let z = Complex64::new(x, y);
            let sol = match g {
                None => self.solve_upper(z, None),
                Some(g0) => self.solve_upper(z, Some(g0)).or_else(|_| self.solve_upper(z, None)),
            };
            match sol {
                Ok((gz, _)) => g = Some(gz),
                Err(_) => break,
            }
        }
        let hint = g.map(|g| x - self.sigma2 * g.re);

        if let Some(u) = hint {
            if let Some(p) = self.solve_in_gap_containing(x, u) {
                return p;
            }
        }
        // Exhaustive search over the gaps of supp ν.
        for u in self.gap_representatives() {
            if let Some(p) = self.solve_in_gap_containing(x, u) {
                return p;
            }
        }
        Err(Error::domain(format!("x = {x} lies in the support of the free convolution")))
    }

    fn gap_representatives(&self) -> Vec<f64> {
        let (lo, hi) = self.base.support_bounds();
        let mut reps = vec![lo - 1.0, hi + 1.0];
        let mut u = lo;
        while let Some(next) = self.base.support_above(u) {
            if next > u {
                reps.push(0.5 * (u + next));
            }
            // move to the end of the support component starting at `next`
            let mut end = next;
            for p in self.base.pieces() {
                let (a, b) = p.interval();
                if a <= end && b > end {
                    end = b;
                }
            }
            if end <= u {
                break;
            }
            u = end;
            if u >= hi {
                break;
            }
        }
        reps
    }

    fn margin_at(&self, u: f64) -> f64 {
        1.0 + self.sigma2 * self.base.stieltjes_unchecked(Complex64::new(u, 0.0), 1).re
    }

    fn h_real(&self, u: f64) -> f64 {
        u + self.sigma2 * self.base.stieltjes_unchecked(Complex64::new(u, 0.0), 0).re
    }

    /// Looks for `ω` with `H(ω) = x` and `H′(ω) > 0` in the gap of `supp ν`
    /// containing `u`. `None` when `u` is not in a gap or the gap has no such
    /// point; `Some(Err)` when `x` is too close to `supp λ`.
    fn solve_in_gap_containing(&self, x: f64, u: f64) -> Option<Result<RealPoint>> {
        let prox = self.base.proximity();
        if self.base.distance_to_support(Complex64::new(u, 0.0)) < prox {
            return None;
        }
        let lo = self.base.support_below(u);
        let hi = self.base.support_above(u);
        let lo_in = lo.map(|a| a + prox);
        let hi_in = hi.map(|b| b - prox);

        // -g′_ν is convex on the gap; find where its derivative -g″_ν vanishes.
        let g2 = |v: f64| self.base.stieltjes_unchecked(Complex64::new(v, 0.0), 2).re;
        let peak = match (lo_in, hi_in) {
            (Some(a), Some(b)) => {
                if a >= b {
                    return None;
                }
                let (mut a, mut b) = (a, b);
                // g″_ν > 0 left of the minimum of -g′_ν... sign: d/du(-g′) = -g″.
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if g2(m) > 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            }
            (None, Some(b)) => b - 1.0 - (b - u).abs(),
            (Some(a), None) => a + 1.0 + (u - a).abs(),
            (None, None) => return None,
        };
        let peak = match (lo_in, hi_in) {
            (None, Some(b)) => {
                // push far enough left that the margin is positive
                let mut p = peak.min(u);
                let mut step = (b - p).max(1.0);
                while self.margin_at(p) <= 0.0 {
                    p -= step;
                    step *= 2.0;
                    if !p.is_finite() {
                        return None;
                    }
                }
                p
            }
            (Some(a), None) => {
                let mut p = peak.max(u);
                let mut step = (p - a).max(1.0);
                while self.margin_at(p) <= 0.0 {
                    p += step;
                    step *= 2.0;
                    if !p.is_finite() {
                        return None;
                    }
                }
                p
            }
            _ => peak,
        };
        if self.margin_at(peak) <= 0.0 {
            return None;
        }
        // Ends (c1, c2) of {margin > 0} inside the gap.
        let c1 = lo_in.map(|a| self.bisect_margin(a, peak));
        let c2 = hi_in.map(|b| self.bisect_margin(b, peak));
        let h1 = c1.map_or(f64::NEG_INFINITY, |c| self.h_real(c));
        let h2 = c2.map_or(f64::INFINITY, |c| self.h_real(c));
        if !(x > h1 && x < h2) {
            return None;
        }
        if x - h1 < REAL_AXIS_TOLERANCE || h2 - x < REAL_AXIS_TOLERANCE {
            return Some(Err(Error::domain(format!("x = {x} is within {REAL_AXIS_TOLERANCE:e} of the support"))));
        }
        // H is increasing on (c1, c2): bracket and bisect, then polish with Newton.
        let mut a = c1.unwrap_or(peak);
        let mut b = c2.unwrap_or(peak);
        let mut step = 1.0;
        while self.h_real(a) > x {
            a -= step;
            step *= 2.0;
        }
        step = 1.0;
        while self.h_real(b) < x {
            b += step;
            step *= 2.0;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.h_real(m) < x {
                a = m;
            } else {
                b = m;
            }
        }
        let mut w = 0.5 * (a + b);
        for _ in 0..3 {
            let f = self.h_real(w) - x;
            let d = self.margin_at(w);
            let next = w - f / d;
            if next > a && next < b || (next - w).abs() < 1e-15 * w.abs().max(1.0) {
                w = next;
            } else {
                break;
            }
        }
        let g = (x - w) / self.sigma2;
        Some(Ok(RealPoint { x, g, omega: w, gap: (h1, h2) }))
    }

    /// Zero of the margin between `edge` (margin < 0 side) and `inside` (> 0).
    fn bisect_margin(&self, edge: f64, inside: f64) -> f64 {
        let (mut neg, mut pos) = (edge, inside);
        if self.margin_at(neg) > 0.0 {
            return neg;
        }
        for _ in 0..200 {
            let m = 0.5 * (neg + pos);
            if m == neg || m == pos {
                break;
            }
            if self.margin_at(m) > 0.0 {
                pos = m;
            } else {
                neg = m;
            }
        }
        pos
    }

    /// Limit of `−Im g(x + iε)/π` as `ε → 0`, by Neville extrapolation
    /// through the given `ε` values.
    pub fn density_at(&self, x: f64, epsilons: &[f64]) -> Result<f64> {
        if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::domain("epsilons must be a nonempty list of positive values"));
        }
        let mut values = Vec::with_capacity(epsilons.len());
        let mut warm = None;
        for &eps in epsilons {
            let z = Complex64::new(x, eps);
            let (g, _) = match warm {
                Some(g0) => self.solve_upper(z, Some(g0)).or_else(|_| self.solve_upper(z, None))?,
                None => self.solve_upper(z, None)?,
            };
            warm = Some(g);
            values.push(-g.im / std::f64::consts::PI);
        }
        // extrapolation can undershoot slightly outside the support
        Ok(neville_at_zero(epsilons, &values).max(0.0))
    }

    pub fn density_default(&self, x: f64) -> Result<f64> {
        self.density_at(x, &DEFAULT_EPSILONS)
    }

    /// True when `x` is outside `supp λ`: negligible density and a real
    /// solution of the fixed point.
    pub fn is_outside_support(&self, x: f64) -> bool {
        match self.density_default(x) {
            Ok(d) if d < SUPPORT_THRESHOLD => self.solve_real(x).is_ok(),
            _ => false,
        }
    }

    /// Edges of `supp λ` around a real point outside it.
    pub fn gap_around(&self, x: f64) -> Result<(f64, f64)> {
        Ok(self.solve_real(x)?.gap)
    }
}

/// Value at 0 of the interpolating polynomial through `(x_i, y_i)`.
fn neville_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn semicircle_closed(z: Complex64, s2: f64) -> Complex64 {
        // branch with g ~ 1/z at infinity: sqrt taken as sqrt(z-2s)·sqrt(z+2s)
        let r = 2.0 * s2.sqrt();
        (z - (z - r).sqrt() * (z + r).sqrt()) / (2.0 * s2)
    }

    fn test_measures() -> Vec<SpectralMeasure> {
        vec![
            SpectralMeasure::point_mass(0.0),
            SpectralMeasure::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
            SpectralMeasure::uniform(-1.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn semicircle_examples() {
        let fc = FreeConvolution::new(SpectralMeasure::point_mass(0.0), 1.0).unwrap();
        assert_abs_diff_eq!(fc.subordinated_g(c(2.5, 0.0), 0).unwrap().re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fc.subordinated_g(c(2.5, 0.0), 1).unwrap().re, -1.0 / 3.0, epsilon = 1e-10);
        let g = fc.subordinated_g(c(0.0, 2.0), 0).unwrap();
        assert!(g.im < 0.0 && g.re.abs() < 1e-12);
        assert!((g - semicircle_closed(c(0.0, 2.0), 1.0)).norm() < 1e-10);
    }

    #[test]
    fn semicircle_oracle_on_grid() {
        for s2 in [1.0, 0.3] {
            let fc = FreeConvolution::new(SpectralMeasure::point_mass(0.0), s2).unwrap();
            for i in 0..100 {
                let x = -5.0 + 10.0 * i as f64 / 99.0;
                for y in [0.1, 1.0, 10.0, -0.7] {
                    let z = c(x, y);
                    let g = fc.subordinated_g(z, 0).unwrap();
                    assert!((g - semicircle_closed(z, s2)).norm() < 1e-9, "z={z}");
                    assert!(g.im * y < 0.0);
                }
            }
        }
    }

    #[test]
    fn residual_and_subordination_on_grid() {
        for m in test_measures() {
            let fc = FreeConvolution::new(m.clone(), 1.0).unwrap();
            for i in 0..100 {
                let x = -5.0 + 10.0 * i as f64 / 99.0;
                for y in [0.1, 1.0, 10.0] {
                    let z = c(x, y);
                    let g = fc.subordinated_g(z, 0).unwrap();
                    let w = z - g;
                    assert!((g - m.stieltjes(w, 0).unwrap()).norm() < 1e-10);
                    assert!(g.im < 0.0);
                    assert!(w.im >= y - 1e-12);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let h = 1e-5;
        for m in test_measures() {
            let fc = FreeConvolution::new(m, 1.0).unwrap();
            for z in [c(0.0, 1.0), c(3.0, 0.5), c(-4.0, 0.0), c(5.0, 0.0)] {
                let fd = (fc.subordinated_g(z + h, 0).unwrap() - fc.subordinated_g(z - h, 0).unwrap()) / (2.0 * h);
                let d = fc.subordinated_g(z, 1).unwrap();
                assert!((fd - d).norm() <= 1e-6 * d.norm(), "z={z}: {fd} vs {d}");
                let [_, d1, d2] = fc.derivatives(z).unwrap();
                let fd2 = (fc.subordinated_g(z + h, 1).unwrap() - fc.subordinated_g(z - h, 1).unwrap()) / (2.0 * h);
                assert!((d1 - d).norm() < 1e-14);
                assert!((fd2 - d2).norm() <= 1e-5 * d2.norm());
            }
        }
    }

    #[test]
    fn vanishing_variance_recovers_base() {
        for m in test_measures() {
            let fc = FreeConvolution::new(m.clone(), 1e-12).unwrap();
            let z = c(0.0, 3.0);
            assert!((fc.subordinated_g(z, 0).unwrap() - m.stieltjes(z, 0).unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn density_examples() {
        let fc = FreeConvolution::new(SpectralMeasure::point_mass(0.0), 1.0).unwrap();
        assert_abs_diff_eq!(fc.density_default(0.0).unwrap(), 1.0 / std::f64::consts::PI, epsilon = 1e-3);
        assert_abs_diff_eq!(fc.density_default(1.0).unwrap(), 3f64.sqrt() / (2.0 * std::f64::consts::PI), epsilon = 1e-3);
        assert_abs_diff_eq!(fc.density_default(3.0).unwrap(), 0.0, epsilon = 1e-6);
        assert!(fc.density_at(0.0, &[]).is_err());
    }

    #[test]
    fn support_detection() {
        let fc = FreeConvolution::new(SpectralMeasure::point_mass(0.0), 1.0).unwrap();
        assert!(fc.is_outside_support(2.5));
        assert!(!fc.is_outside_support(0.0));
        assert!(!fc.is_outside_support(1.9));
        assert!(fc.subordinated_g(c(1.0, 0.0), 0).is_err());
        let gap = fc.gap_around(2.5).unwrap();
        assert_abs_diff_eq!(gap.0, 2.0, epsilon = 1e-9);
        assert_eq!(gap.1, f64::INFINITY);
    }

    #[test]
    fn two_atom_bulk_edge() {
        // H(u) = u + ½(1/(u+1) + 1/(u−1)), edge where H′ vanishes: u*² = 1 + √... solved numerically
        let m = SpectralMeasure::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let fc = FreeConvolution::new(m, 1.0).unwrap();
        let p = fc.solve_real(8.0 / 3.0).unwrap();
        assert_abs_diff_eq!(p.omega, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.g, 2.0 / 3.0, epsilon = 1e-12);
        // independent edge: H′(u) = 1 − ½(1/(u+1)² + 1/(u−1)²) = 0, bisection on [1.01, 3]
        let hp = |u: f64| 1.0 - 0.5 * (1.0 / (u + 1.0).powi(2) + 1.0 / (u - 1.0).powi(2));
        let (mut a, mut b) = (1.01, 3.0);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if hp(mid) < 0.0 { a = mid } else { b = mid }
        }
        let edge = a + 0.5 * (1.0 / (a + 1.0) + 1.0 / (a - 1.0));
        assert_abs_diff_eq!(p.gap.0, edge, epsilon = 1e-9);
        // the inner gap around 0 exists for this measure only if H′ > 0 somewhere in (−1, 1)
        assert!(!fc.is_outside_support(0.0));
    }

    #[test]
    fn densities_integrate_to_one() {
        for m in test_measures() {
            let fc = FreeConvolution::new(m, 1.0).unwrap();
            let n = 1400;
            let (a, b) = (-3.5, 3.5);
            let hstep = (b - a) / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                let x = a + i as f64 * hstep;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                total += w * fc.density_default(x).unwrap().max(0.0);
            }
            assert_abs_diff_eq!(total * hstep, 1.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn neville_reproduces_polynomials() {
        let x = [1.0, 0.5, 0.25];
        let y: Vec<f64> = x.iter().map(|t| 3.0 - 2.0 * t + t * t).collect();
        assert_abs_diff_eq!(neville_at_zero(&x, &y), 3.0, epsilon = 1e-14);
    }
}
