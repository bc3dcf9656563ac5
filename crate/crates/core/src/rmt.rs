//! Sampling of `M_N = W_N/√N + A_N`, extraction of the outlier eigenpair and
//! resolvent statistics.

use faer::linalg::solvers::Solve;
use faer::{Col, Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::EntryLaw;

/// Conjugation of the `(N−1)`-block of `A_N`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rotation {
    #[default]
    None,
    /// Haar unitary drawn from the given seed.
    Haar(u64),
}

/// `A_N = diag(θ, A_{N−1})`, with `A_{N−1}` diagonal or Haar-rotated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationSpec {
    pub theta: f64,
    pub sub_spectrum: Vec<f64>,
    #[serde(default)]
    pub rotation: Rotation,
}

impl DeformationSpec {
    pub fn new(theta: f64, sub_spectrum: Vec<f64>, rotation: Rotation) -> Result<Self> {
        if sub_spectrum.iter().any(|l| *l == theta) {
            return Err(Error::domain(format!("theta = {theta} is an eigenvalue of the sub-block")));
        }
        if sub_spectrum.iter().any(|l| !l.is_finite()) || !theta.is_finite() {
            return Err(Error::domain("deformation entries must be finite"));
        }
        Ok(Self { theta, sub_spectrum, rotation })
    }

    pub fn size(&self) -> usize {
        self.sub_spectrum.len() + 1
    }

    /// The `(N−1) × (N−1)` block.
    pub fn sub_block(&self) -> Mat<Complex64> {
        let n1 = self.sub_spectrum.len();
        let d = Mat::<Complex64>::from_fn(n1, n1, |i, j| {
            if i == j {
                Complex64::new(self.sub_spectrum[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        match self.rotation {
            Rotation::None => d,
            Rotation::Haar(seed) => {
                let q = haar_unitary(n1, seed);
                let qd = &q * &d;
                hermitian_part(&(&qd * q.adjoint()))
            }
        }
    }

    /// `A_N`.
    pub fn matrix(&self) -> Mat<Complex64> {
        let n = self.size();
        let sub = self.sub_block();
        Mat::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => Complex64::new(self.theta, 0.0),
            (0, _) | (_, 0) => Complex64::new(0.0, 0.0),
            _ => sub[(i - 1, j - 1)],
        })
    }
}

fn hermitian_part(m: &Mat<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()))
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `diag R` moved into `Q`.
pub fn haar_unitary(n: usize, seed: u64) -> Mat<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Mat::<Complex64>::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let phases: Vec<Complex64> = (0..n)
        .map(|k| {
            let d = r[(k, k)];
            if d.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                d / d.norm()
            }
        })
        .collect();
    Mat::from_fn(n, n, |i, j| q[(i, j)] * phases[j])
}

/// `W/√scale` for an `n × n` Wigner matrix with entries from `law`: diagonal
/// entries iid `μ`, off-diagonal `(u + iv)/√2` with `u, v` iid `μ`. Entries
/// are drawn row by row along the upper triangle.
pub fn wigner_noise<R: Rng + ?Sized>(n: usize, law: &EntryLaw, scale: usize, rng: &mut R) -> Mat<Complex64> {
    let s = 1.0 / (scale as f64).sqrt();
    let t = s * std::f64::consts::FRAC_1_SQRT_2;
    let mut m = Mat::<Complex64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(s * law.sample(rng), 0.0);
        for j in i + 1..n {
            let u = law.sample(rng);
            let v = law.sample(rng);
            let w = Complex64::new(t * u, t * v);
            m[(i, j)] = w;
            m[(j, i)] = w.conj();
        }
    }
    m
}

/// One draw of the deformed model.
#[derive(Clone, Debug)]
pub struct DeformedSample {
    pub n: usize,
    pub matrix: Mat<Complex64>,
    /// Realized `W₁₁` (unscaled).
    pub w11: f64,
    pub seed: u64,
}

/// Draws `M_N = W/√N + A_N`, deterministic in `seed`.
pub fn sample_deformed(n: usize, spec: &DeformationSpec, law: &EntryLaw, seed: u64) -> Result<DeformedSample> {
    if n < 2 || spec.size() != n {
        return Err(Error::domain(format!("size mismatch: N = {n}, spec has {} rows", spec.size())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = wigner_noise(n, law, n, &mut rng);
    let w11 = m[(0, 0)].re * (n as f64).sqrt();
    m[(0, 0)] += spec.theta;
    match spec.rotation {
        Rotation::None => {
            for (k, l) in spec.sub_spectrum.iter().enumerate() {
                m[(k + 1, k + 1)] += *l;
            }
        }
        Rotation::Haar(_) => {
            let sub = spec.sub_block();
            for i in 0..n - 1 {
                for j in 0..n - 1 {
                    m[(i + 1, j + 1)] += sub[(i, j)];
                }
            }
        }
    }
    Ok(DeformedSample { n, matrix: m, w11, seed })
}

/// Controls for [`outlier_eigenpair`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutlierOptions {
    /// Eigenvalues within this distance of the shift are candidates; exactly
    /// one is required.
    pub gap: f64,
    pub lanczos_steps: usize,
    /// Required `‖Mv − λv‖ / ‖M‖_F`.
    pub residual_tolerance: f64,
    pub start_seed: u64,
}

impl OutlierOptions {
    pub fn with_gap(gap: f64) -> Self {
        Self { gap, lanczos_steps: 40, residual_tolerance: 1e-10, start_seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub lambda: f64,
    pub vector: Col<Complex64>,
    pub relative_residual: f64,
}

fn frobenius(m: &Mat<Complex64>) -> f64 {
    m.norm_l2()
}

fn dot(a: &Col<Complex64>, b: &Col<Complex64>) -> Complex64 {
    (0..a.nrows()).map(|i| a[i].conj() * b[i]).sum()
}

fn norm(a: &Col<Complex64>) -> f64 {
    a.norm_l2()
}

fn fix_phase(v: &mut Col<Complex64>) {
    let n = norm(v);
    let p = v[0];
    let phase = if p.norm() > 0.0 { p.conj() / p.norm() } else { Complex64::new(1.0, 0.0) };
    for i in 0..v.nrows() {
        v[i] = v[i] * phase / n;
    }
    v[0] = Complex64::new(v[0].norm(), 0.0);
}

fn residual(m: &Mat<Complex64>, v: &Col<Complex64>, lambda: f64) -> f64 {
    let mv = m * v;
    let r = Col::<Complex64>::from_fn(v.nrows(), |i| mv[i] - lambda * v[i]);
    norm(&r)
}

/// The eigenpair of `M` closest to `rho_guess` by shift-and-invert Lanczos
/// with full reorthogonalization, refined by inverse iteration.
///
/// Fails with [`Error::NoSeparation`] when no eigenvalue or more than one
/// lies within `gap` of the shift.
pub fn outlier_eigenpair(sample: &DeformedSample, rho_guess: f64, opts: &OutlierOptions) -> Result<Eigenpair> {
    let m = &sample.matrix;
    let n = m.nrows();
    let mnorm = frobenius(m);

    // Factor M − σI; nudge σ if it hits an eigenvalue exactly.
    let mut shift = rho_guess;
    let mut factor = None;
    for attempt in 0..4 {
        let shifted = Mat::<Complex64>::from_fn(n, n, |i, j| if i == j { m[(i, j)] - shift } else { m[(i, j)] });
        let f = shifted.lblt(Side::Lower);
        let probe = f.solve(Col::<Complex64>::from_fn(n, |i| Complex64::new(1.0 / (1.0 + i as f64), 0.0)));
        if probe.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            factor = Some(f);
            break;
        }
        shift = rho_guess + 1e-7 * mnorm.max(1.0) * (attempt + 1) as f64;
    }
    let factor = factor.ok_or_else(|| Error::Numeric("shifted matrix could not be factored".into()))?;
    let apply = |v: &Col<Complex64>| -> Col<Complex64> { factor.solve(v) };

    // Start: e₁ plus a small random component.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.start_seed ^ sample.seed.rotate_left(17));
    let mut q = Col::<Complex64>::from_fn(n, |i| {
        let r = 1e-3 * Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        if i == 0 {
            Complex64::new(1.0, 0.0) + r
        } else {
            r
        }
    });
    let q_norm = norm(&q);
    scale_col(&mut q, 1.0 / q_norm);

    let steps = opts.lanczos_steps.min(n).max(1);
    let mut basis: Vec<Col<Complex64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    basis.push(q);
    for j in 0..steps {
        let mut w = apply(&basis[j]);
        alpha.push(dot(&basis[j], &w).re);
        // full reorthogonalization, applied twice
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(&mut w, -c, b);
            }
        }
        let bnorm = norm(&w);
        if j + 1 == steps || bnorm < 1e-14 * alpha[j].abs().max(1.0) {
            break;
        }
        beta.push(bnorm);
        scale_col(&mut w, 1.0 / bnorm);
        basis.push(w);
    }
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = t.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numeric(format!("{e:?}")))?;

    let mut candidates = Vec::new();
    for r in 0..k {
        let mu = eig.S()[r];
        if mu == 0.0 {
            continue;
        }
        let lambda = shift + 1.0 / mu;
        if (lambda - shift).abs() < opts.gap {
            candidates.push((r, lambda));
        }
    }
    match candidates.len() {
        0 => return Err(Error::NoSeparation(format!("no eigenvalue within {} of {rho_guess}", opts.gap))),
        1 => {}
        c => return Err(Error::NoSeparation(format!("{c} eigenvalues within {} of {rho_guess}", opts.gap))),
    }
    let (r, mut lambda) = candidates[0];
    let u = eig.U();
    let mut v = Col::<Complex64>::zeros(n);
    for (i, b) in basis[..k].iter().enumerate() {
        axpy(&mut v, Complex64::new(u[(i, r)], 0.0), b);
    }
    let vn = norm(&v);
    scale_col(&mut v, 1.0 / vn);

    let mut res = residual(m, &v, lambda) / mnorm;
    let mut it = 0;
    while res > 1e-2 * opts.residual_tolerance && it < 30 {
        let mut w = apply(&v);
        let wn = norm(&w);
        scale_col(&mut w, 1.0 / wn);
        v = w;
        let mv = m * &v;
        lambda = dot(&v, &mv).re;
        res = residual(m, &v, lambda) / mnorm;
        it += 1;
    }
    if !(res <= opts.residual_tolerance) {
        return Err(Error::Solver { iterations: it, residual: res });
    }
    fix_phase(&mut v);
    Ok(Eigenpair { lambda, vector: v, relative_residual: res })
}

/// Dense reference for small `N`: full diagonalization, same separation rule.
pub fn outlier_eigenpair_dense(sample: &DeformedSample, rho_guess: f64, gap: f64) -> Result<Eigenpair> {
    let m = &sample.matrix;
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numeric(format!("{e:?}")))?;
    let n = m.nrows();
    let near: Vec<usize> = (0..n).filter(|&i| (eig.S()[i].re - rho_guess).abs() < gap).collect();
    if near.len() != 1 {
        return Err(Error::NoSeparation(format!("{} eigenvalues within {gap} of {rho_guess}", near.len())));
    }
    let idx = near[0];
    let lambda = eig.S()[idx].re;
    let mut v = Col::<Complex64>::from_fn(n, |i| eig.U()[(i, idx)]);
    fix_phase(&mut v);
    let relative_residual = residual(m, &v, lambda) / frobenius(m);
    Ok(Eigenpair { lambda, vector: v, relative_residual })
}

fn scale_col(v: &mut Col<Complex64>, s: f64) {
    for i in 0..v.nrows() {
        v[i] *= s;
    }
}

/// `y += a x`.
fn axpy(y: &mut Col<Complex64>, a: Complex64, x: &Col<Complex64>) {
    for i in 0..y.nrows() {
        y[i] += a * x[i];
    }
}

/// `|v₁|²` for a unit vector.
pub fn spike_overlap(v: &Col<Complex64>) -> Result<f64> {
    let n = norm(v);
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("vector norm {n} is not 1")));
    }
    Ok(v[0].norm_sqr().min(1.0))
}

/// Requested resolvent quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResolventRequest {
    G11,
    /// `(1/N) tr G(z)`.
    Trace,
    /// `(1/(N−1)) Σ Ĝ_ii(z) Ĝ_ii(z₂)` on the lower-right block.
    DiagProducts(Complex64),
    /// `(1/N) Tr Ĝ(z) Ĝ(z₂)` on the lower-right block.
    TraceProduct(Complex64),
}

fn shifted_resolvent_system(m: faer::MatRef<'_, Complex64>, z: Complex64) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| if i == j { z - m[(i, j)] } else { -m[(i, j)] })
}

/// `G₁₁(z) = ((z − M)⁻¹)₁₁` by one linear solve.
pub fn g11(m: &Mat<Complex64>, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::domain("resolvent requires Im z ≠ 0"));
    }
    let n = m.nrows();
    let lu = shifted_resolvent_system(m.as_ref(), z).partial_piv_lu();
    let mut e1 = Col::<Complex64>::zeros(n);
    e1[0] = Complex64::new(1.0, 0.0);
    let x = lu.solve(e1);
    let v = x[0];
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Numeric("singular resolvent solve".into()));
    }
    Ok(v)
}

/// Right side of the Schur complement formula,
/// `1/(z − M₁₁ − b*(z − M̂)⁻¹ b)` with `b` the first column below the diagonal.
pub fn schur_g11(m: &Mat<Complex64>, z: Complex64) -> Result<Complex64> {
    let n = m.nrows();
    let hat = m.as_ref().submatrix(1, 1, n - 1, n - 1);
    let b = Col::<Complex64>::from_fn(n - 1, |i| m[(i + 1, 0)]);
    let x = shifted_resolvent_system(hat, z).partial_piv_lu().solve(&b);
    let q: Complex64 = (0..n - 1).map(|i| b[i].conj() * x[i]).sum();
    Ok(1.0 / (z - m[(0, 0)] - q))
}

/// Spectral data of the lower-right block: eigenvalues and squared moduli of
/// eigenvector entries.
struct BlockSpectrum {
    lambdas: Vec<f64>,
    weights: Mat<f64>,
}

impl BlockSpectrum {
    fn new(m: &Mat<Complex64>) -> Result<Self> {
        let n = m.nrows();
        let hat = m.as_ref().submatrix(1, 1, n - 1, n - 1).to_owned();
        let eig = hat.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numeric(format!("{e:?}")))?;
        let lambdas = (0..n - 1).map(|k| eig.S()[k].re).collect();
        let u = eig.U();
        let weights = Mat::from_fn(n - 1, n - 1, |i, k| u[(i, k)].norm_sqr());
        Ok(Self { lambdas, weights })
    }

    fn diag(&self, z: Complex64) -> Vec<Complex64> {
        let inv: Vec<Complex64> = self.lambdas.iter().map(|l| 1.0 / (z - l)).collect();
        (0..self.lambdas.len())
            .map(|i| inv.iter().enumerate().map(|(k, g)| self.weights[(i, k)] * g).sum())
            .collect()
    }
}

/// Evaluates the requested quantities at `z`.
pub fn resolvent_stats(sample: &DeformedSample, z: Complex64, requests: &[ResolventRequest]) -> Result<Vec<Complex64>> {
    if z.im == 0.0 {
        return Err(Error::domain("resolvent requires Im z ≠ 0"));
    }
    let m = &sample.matrix;
    let n = m.nrows();
    let mut block: Option<BlockSpectrum> = None;
    let mut out = Vec::with_capacity(requests.len());
    for req in requests {
        let v = match *req {
            ResolventRequest::G11 => g11(m, z)?,
            ResolventRequest::Trace => normalized_trace(m, &[z])?[0],
            ResolventRequest::DiagProducts(z2) => {
                if block.is_none() {
                    block = Some(BlockSpectrum::new(m)?);
                }
                let b = block.as_ref().unwrap();
                let (d1, d2) = (b.diag(z), b.diag(z2));
                d1.iter().zip(&d2).map(|(a, b)| a * b).sum::<Complex64>() / (n - 1) as f64
            }
            ResolventRequest::TraceProduct(z2) => {
                if block.is_none() {
                    block = Some(BlockSpectrum::new(m)?);
                }
                let b = block.as_ref().unwrap();
                b.lambdas.iter().map(|l| 1.0 / ((z - l) * (z2 - l))).sum::<Complex64>() / n as f64
            }
        };
        out.push(v);
    }
    Ok(out)
}

/// `(1/N) tr (z − M)⁻¹` at several points from one diagonalization.
pub fn normalized_trace(m: &Mat<Complex64>, zs: &[Complex64]) -> Result<Vec<Complex64>> {
    let ev = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Numeric(format!("{e:?}")))?;
    let n = ev.len() as f64;
    Ok(zs.iter().map(|z| ev.iter().map(|l| 1.0 / (z - l)).sum::<Complex64>() / n).collect())
}
