//! Compactly supported probability measures on the real line and the entry
//! laws used to fill Wigner matrices.
//!
//! A [`SpectralMeasure`] is a finite set of atoms plus finitely many
//! absolutely continuous pieces. Each piece stores its density at the
//! Gauss–Legendre nodes of its interval; integrals against the piece use
//! that rule, and pointwise density / CDF values use the Legendre
//! interpolant through the same nodes. Discrete spectra (the eigenvalues of
//! a deterministic matrix) and continuous limits share one code path.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::reference_rule;

/// Gauss–Legendre nodes per continuous piece unless stated otherwise.
pub const DEFAULT_NODES: usize = 64;

/// Evaluations of a Stieltjes transform closer than this to the support are
/// rejected.
pub const DEFAULT_PROXIMITY: f64 = 1e-8;

const MASS_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Absolutely continuous piece of a measure on `[a, b]`.
#[derive(Clone, Debug)]
pub struct DensityPiece {
    a: f64,
    b: f64,
    density_nodes: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    legendre: Vec<f64>,
}

impl PartialEq for DensityPiece {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.density_nodes == other.density_nodes
    }
}

impl DensityPiece {
    /// Builds a piece from density values at the Gauss–Legendre nodes of `[a, b]`
    /// (ascending node order).
    pub fn new(a: f64, b: f64, density_nodes: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::domain(format!("piece interval [{a}, {b}] is not a bounded interval")));
        }
        if density_nodes.is_empty() {
            return Err(Error::domain("piece needs at least one density node"));
        }
        if density_nodes.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::domain("densities must be finite and nonnegative at every node"));
        }
        let n = density_nodes.len();
        let (t, w) = reference_rule(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = t.iter().map(|t| mid + half * t).collect();
        let weights = w.iter().map(|w| half * w).collect();

        // Coefficients of the degree n-1 interpolant in the Legendre basis;
        // the n-point rule is exact for the products involved.
        let mut legendre = vec![0.0; n];
        let mut p = vec![0.0; n];
        for ((tj, wj), fj) in t.iter().zip(&w).zip(&density_nodes) {
            legendre_values(*tj, &mut p);
            for (k, c) in legendre.iter_mut().enumerate() {
                *c += wj * fj * p[k];
            }
        }
        for (k, c) in legendre.iter_mut().enumerate() {
            *c *= (2 * k + 1) as f64 / 2.0;
        }

        Ok(Self { a, b, density_nodes, nodes, weights, legendre })
    }

    /// Samples `f` at `n` Gauss–Legendre nodes of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("piece needs at least one density node"));
        }
        let (t, _) = reference_rule(n);
        let values = t.iter().map(|t| f(0.5 * (a + b) + 0.5 * (b - a) * t)).collect();
        Self::new(a, b, values)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn density_nodes(&self) -> &[f64] {
        &self.density_nodes
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().zip(&self.density_nodes).map(|(w, d)| w * d).sum()
    }

    /// Quadrature nodes and weights already multiplied by the density.
    pub(crate) fn weighted_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.density_nodes)
            .map(|((x, w), d)| (*x, w * d))
    }

    fn to_reference(&self, x: f64) -> f64 {
        ((2.0 * x - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0)
    }

    /// Interpolated density; zero outside `[a, b]`.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.a || x > self.b {
            return 0.0;
        }
        let mut p = vec![0.0; self.legendre.len()];
        legendre_values(self.to_reference(x), &mut p);
        self.legendre.iter().zip(&p).map(|(c, p)| c * p).sum()
    }

    /// Mass of the interpolated density on `[a, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return self.mass();
        }
        let t = self.to_reference(x);
        let n = self.legendre.len();
        let mut p = vec![0.0; n + 1];
        legendre_values(t, &mut p);
        let mut s = self.legendre[0] * (t + 1.0);
        for k in 1..n {
            s += self.legendre[k] * (p[k + 1] - p[k - 1]) / (2 * k + 1) as f64;
        }
        0.5 * (self.b - self.a) * s
    }

    fn shifted(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.a += s;
        out.b += s;
        out.nodes.iter_mut().for_each(|x| *x += s);
        out
    }
}

/// Fills `p` with `P_0(t), ..., P_{len-1}(t)`.
fn legendre_values(t: f64, p: &mut [f64]) {
    if p.is_empty() {
        return;
    }
    p[0] = 1.0;
    if p.len() > 1 {
        p[1] = t;
    }
    for k in 1..p.len().saturating_sub(1) {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * t * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
}

/// Probability measure made of atoms and absolutely continuous pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
    pieces: Vec<DensityPiece>,
    proximity: f64,
}

impl SpectralMeasure {
    /// Validates and builds a measure. Atoms may carry zero weight; such
    /// atoms are kept for bookkeeping but are not part of the support.
    pub fn new(mut atoms: Vec<Atom>, mut pieces: Vec<DensityPiece>) -> Result<Self> {
        for a in &atoms {
            if !a.location.is_finite() || !a.weight.is_finite() || a.weight < 0.0 || a.weight > 1.0 {
                return Err(Error::domain(format!("invalid atom ({}, {})", a.location, a.weight)));
            }
        }
        atoms.sort_by(|x, y| x.location.total_cmp(&y.location));
        if atoms.windows(2).any(|w| w[0].location == w[1].location) {
            return Err(Error::domain("atom locations must be pairwise distinct"));
        }
        pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
        let mass: f64 = atoms.iter().map(|a| a.weight).sum::<f64>() + pieces.iter().map(|p| p.mass()).sum::<f64>();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::domain(format!("total mass {mass} differs from 1")));
        }
        Ok(Self { atoms, pieces, proximity: DEFAULT_PROXIMITY })
    }

    pub fn point_mass(x: f64) -> Self {
        Self::new(vec![Atom { location: x, weight: 1.0 }], vec![]).expect("valid point mass")
    }

    /// Finite combination of weighted atoms; weights must sum to one.
    pub fn discrete(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(location, weight)| Atom { location, weight }).collect(), vec![])
    }

    /// Empirical measure `(1/n) Σ δ_{x_i}`; repeated values are merged.
    pub fn empirical(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("empirical measure of an empty list"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let w = 1.0 / values.len() as f64;
        let mut atoms: Vec<Atom> = Vec::new();
        for x in sorted {
            match atoms.last_mut() {
                Some(last) if last.location == x => last.weight += w,
                _ => atoms.push(Atom { location: x, weight: w }),
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        atoms.iter_mut().for_each(|a| a.weight /= total);
        Self::new(atoms, vec![])
    }

    /// Uniform law on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let h = 1.0 / (b - a);
        Self::new(vec![], vec![DensityPiece::from_fn(a, b, DEFAULT_NODES, |_| h)?])
    }

    /// Measure with density proportional to `f` on the given breakpoints, one
    /// piece per interval, renormalized so that the quadrature mass is one.
    pub fn from_density(breaks: &[f64], nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut pieces = breaks
            .windows(2)
            .map(|w| DensityPiece::from_fn(w[0], w[1], nodes, &f))
            .collect::<Result<Vec<_>>>()?;
        let mass: f64 = pieces.iter().map(|p| p.mass()).sum();
        if !(mass > 0.0) {
            return Err(Error::domain("density has zero mass"));
        }
        for p in &mut pieces {
            let values = p.density_nodes.iter().map(|d| d / mass).collect();
            *p = DensityPiece::new(p.a, p.b, values)?;
        }
        Self::new(vec![], pieces)
    }

    /// Semicircle law of variance `sigma2`, with pieces refined towards the
    /// square-root edges.
    pub fn semicircle(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::domain("semicircle variance must be positive"));
        }
        let r = 2.0 * sigma2.sqrt();
        let fractions = [-1.0, -0.999, -0.99, -0.9, 0.9, 0.99, 0.999, 1.0];
        let breaks: Vec<f64> = fractions.iter().map(|f| f * r).collect();
        Self::from_density(&breaks, DEFAULT_NODES, |x| {
            (r * r - x * x).max(0.0).sqrt() / (2.0 * std::f64::consts::PI * sigma2)
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn proximity(&self) -> f64 {
        self.proximity
    }

    /// Same measure with another rejection distance for transform evaluations.
    pub fn with_proximity(mut self, proximity: f64) -> Self {
        self.proximity = proximity;
        self
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum::<f64>() + self.pieces.iter().map(|p| p.mass()).sum::<f64>()
    }

    /// Adds an atom (possibly of zero weight), rescaling nothing.
    pub fn with_atom(&self, location: f64, weight: f64) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        atoms.push(Atom { location, weight });
        Self::new(atoms, self.pieces.clone()).map(|m| m.with_proximity(self.proximity))
    }

    /// Image of the measure under `x -> x + s`.
    pub fn shifted(&self, s: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| Atom { location: a.location + s, weight: a.weight }).collect(),
            pieces: self.pieces.iter().map(|p| p.shifted(s)).collect(),
            proximity: self.proximity,
        }
    }

    fn support_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| a.weight > 0.0)
    }

    /// Smallest and largest points of the support.
    pub fn support_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in self.support_atoms() {
            lo = lo.min(a.location);
            hi = hi.max(a.location);
        }
        for p in &self.pieces {
            lo = lo.min(p.a);
            hi = hi.max(p.b);
        }
        (lo, hi)
    }

    /// Distance from a complex point to the support.
    pub fn distance_to_support(&self, z: Complex64) -> f64 {
        let mut d = f64::INFINITY;
        for a in self.support_atoms() {
            d = d.min((z - a.location).norm());
        }
        for p in &self.pieces {
            let dx = if z.re < p.a {
                p.a - z.re
            } else if z.re > p.b {
                z.re - p.b
            } else {
                0.0
            };
            d = d.min(dx.hypot(z.im));
        }
        d
    }

    /// Largest support point strictly below `u`, if any.
    pub fn support_below(&self, u: f64) -> Option<f64> {
        let atoms = self.support_atoms().map(|a| a.location).filter(|x| *x < u);
        let pieces = self.pieces.iter().filter(|p| p.a < u).map(|p| p.b.min(u));
        atoms.chain(pieces).fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |m| m.max(x))))
    }

    /// Smallest support point strictly above `u`, if any.
    pub fn support_above(&self, u: f64) -> Option<f64> {
        let atoms = self.support_atoms().map(|a| a.location).filter(|x| *x > u);
        let pieces = self.pieces.iter().filter(|p| p.b > u).map(|p| p.a.max(u));
        atoms.chain(pieces).fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |m| m.min(x))))
    }

    /// `order`-th derivative of the Stieltjes transform `∫ dν(x)/(z − x)`.
    pub fn stieltjes(&self, z: Complex64, order: u32) -> Result<Complex64> {
        if order > 3 {
            return Err(Error::domain(format!("Stieltjes derivative of order {order} is not supported")));
        }
        let d = self.distance_to_support(z);
        if !(d >= self.proximity) {
            return Err(Error::domain(format!("z = {z} lies within {d:.3e} of the support")));
        }
        Ok(self.stieltjes_unchecked(z, order))
    }

    pub(crate) fn stieltjes_unchecked(&self, z: Complex64, order: u32) -> Complex64 {
        let power = order as i32 + 1;
        let mut s = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            if a.weight > 0.0 {
                s += a.weight * (z - a.location).powi(-power);
            }
        }
        for p in &self.pieces {
            for (x, w) in p.weighted_nodes() {
                s += w * (z - x).powi(-power);
            }
        }
        let factorial = (1..=order).product::<u32>() as f64;
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        s * (sign * factorial)
    }

    /// `∫ dν(x) / (u − x)^2` at a real point off the support.
    pub fn inverse_square_moment(&self, u: f64) -> Result<f64> {
        Ok(-self.stieltjes(Complex64::new(u, 0.0), 1)?.re)
    }

    /// Cumulative distribution function (right-continuous).
    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.location <= x).map(|a| a.weight).sum();
        let pieces: f64 = self.pieces.iter().map(|p| p.cdf(x)).sum();
        atoms + pieces
    }

    /// The midpoint quantiles `(k − ½)/n`, `k = 1..n`, in increasing order.
    pub fn discretize_quantiles(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::domain("quantile count must be positive"));
        }
        let mut breaks: Vec<f64> = self.atoms.iter().map(|a| a.location).collect();
        for p in &self.pieces {
            breaks.push(p.a);
            breaks.push(p.b);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        // mass strictly below breaks[seg]
        let mut below = 0.0;
        for k in 1..=n {
            let p = (k as f64 - 0.5) / n as f64;
            loop {
                let x = breaks[seg];
                let jump: f64 = self.atoms.iter().filter(|a| a.location == x).map(|a| a.weight).sum();
                if below + jump >= p || seg + 1 == breaks.len() {
                    if below + jump >= p || self.pieces.is_empty() {
                        out.push(x);
                        break;
                    }
                }
                let next = breaks.get(seg + 1).copied();
                let at_next = next.map(|y| self.cdf(y) - self.atom_weight_at(y));
                match (next, at_next) {
                    (Some(y), Some(mass_before_next)) if mass_before_next >= p => {
                        out.push(self.invert_continuous(x, y, p));
                        break;
                    }
                    (Some(_), Some(mass_before_next)) => {
                        below = mass_before_next;
                        seg += 1;
                    }
                    _ => {
                        out.push(x);
                        break;
                    }
                }
            }
        }
        Ok(out)
    }

    fn atom_weight_at(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| a.location == x).map(|a| a.weight).sum()
    }

    /// Solves `cdf(x) = p` on `(lo, hi)` where only continuous mass lives.
    fn invert_continuous(&self, lo: f64, hi: f64, p: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.cdf(m) >= p {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }
}

#[derive(Serialize, Deserialize)]
struct RawPiece {
    a: f64,
    b: f64,
    density_nodes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    #[serde(default)]
    atoms: Vec<[f64; 2]>,
    #[serde(default)]
    pieces: Vec<RawPiece>,
}

impl TryFrom<RawMeasure> for SpectralMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let atoms = raw.atoms.iter().map(|[x, w]| Atom { location: *x, weight: *w }).collect();
        let pieces = raw
            .pieces
            .into_iter()
            .map(|p| DensityPiece::new(p.a, p.b, p.density_nodes))
            .collect::<Result<Vec<_>>>()?;
        SpectralMeasure::new(atoms, pieces)
    }
}

impl From<SpectralMeasure> for RawMeasure {
    fn from(m: SpectralMeasure) -> Self {
        RawMeasure {
            atoms: m.atoms.iter().map(|a| [a.location, a.weight]).collect(),
            pieces: m
                .pieces
                .into_iter()
                .map(|p| RawPiece { a: p.a, b: p.b, density_nodes: p.density_nodes })
                .collect(),
        }
    }
}

/// Symmetric entry distributions satisfying a Poincaré inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Gaussian,
    Uniform,
    Laplace,
}

/// Law `μ` of the rescaled matrix entries, with variance `sigma2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLaw", into = "RawLaw")]
pub struct EntryLaw {
    kind: EntryKind,
    sigma2: f64,
}

#[derive(Serialize, Deserialize)]
struct RawLaw {
    kind: EntryKind,
    sigma2: f64,
}

impl TryFrom<RawLaw> for EntryLaw {
    type Error = Error;
    fn try_from(raw: RawLaw) -> Result<Self> {
        EntryLaw::new(raw.kind, raw.sigma2)
    }
}

impl From<EntryLaw> for RawLaw {
    fn from(l: EntryLaw) -> Self {
        RawLaw { kind: l.kind, sigma2: l.sigma2 }
    }
}

impl EntryLaw {
    pub fn new(kind: EntryKind, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("entry variance must be positive, got {sigma2}")));
        }
        Ok(Self { kind, sigma2 })
    }

    pub fn gaussian(sigma2: f64) -> Self {
        Self::new(EntryKind::Gaussian, sigma2).expect("positive variance")
    }

    pub fn uniform(sigma2: f64) -> Self {
        Self::new(EntryKind::Uniform, sigma2).expect("positive variance")
    }

    pub fn laplace(sigma2: f64) -> Self {
        Self::new(EntryKind::Laplace, sigma2).expect("positive variance")
    }

    pub fn kind(&self) -> EntryKind {
        self.kind
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn std_dev(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Fourth moment `m4 = E X^4`.
    pub fn m4(&self) -> f64 {
        let s4 = self.sigma2 * self.sigma2;
        match self.kind {
            EntryKind::Gaussian => 3.0 * s4,
            EntryKind::Uniform => 9.0 * s4 / 5.0,
            EntryKind::Laplace => 6.0 * s4,
        }
    }

    /// `(σ², m4)`.
    pub fn moments(&self) -> (f64, f64) {
        (self.sigma2, self.m4())
    }

    /// `m4 − 3σ⁴`, the kurtosis combination entering the fluctuation laws.
    pub fn kurtosis_excess(&self) -> f64 {
        self.m4() - 3.0 * self.sigma2 * self.sigma2
    }

    /// `E|y|⁴` for `y = (u + i v)/√(2σ²)` with `u, v` iid from this law.
    pub fn complex_fourth_moment(&self) -> f64 {
        let s4 = self.sigma2 * self.sigma2;
        (self.m4() + s4) / (2.0 * s4)
    }

    /// Half-width of the uniform law, Laplace scale `b`, or σ.
    fn scale(&self) -> f64 {
        match self.kind {
            EntryKind::Gaussian => self.std_dev(),
            EntryKind::Uniform => (3.0 * self.sigma2).sqrt(),
            EntryKind::Laplace => (0.5 * self.sigma2).sqrt(),
        }
    }

    /// Points where the density is not smooth.
    pub(crate) fn kinks(&self) -> Vec<f64> {
        match self.kind {
            EntryKind::Gaussian => vec![],
            EntryKind::Uniform => vec![-self.scale(), self.scale()],
            EntryKind::Laplace => vec![0.0],
        }
    }

    /// Interval outside of which the law has mass below `1e-16`.
    pub(crate) fn effective_support(&self) -> (f64, f64) {
        let r = match self.kind {
            EntryKind::Gaussian => 8.6 * self.scale(),
            EntryKind::Uniform => self.scale(),
            EntryKind::Laplace => 37.0 * self.scale(),
        };
        (-r, r)
    }

    pub fn density(&self, x: f64) -> f64 {
        let s = self.scale();
        match self.kind {
            EntryKind::Gaussian => (-0.5 * x * x / self.sigma2).exp() / (2.0 * std::f64::consts::PI * self.sigma2).sqrt(),
            EntryKind::Uniform => {
                if x.abs() <= s {
                    0.5 / s
                } else {
                    0.0
                }
            }
            EntryKind::Laplace => (-x.abs() / s).exp() / (2.0 * s),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = self.scale();
        match self.kind {
            EntryKind::Gaussian => crate::stats::normal_cdf(x / s),
            EntryKind::Uniform => ((x + s) / (2.0 * s)).clamp(0.0, 1.0),
            EntryKind::Laplace => {
                if x < 0.0 {
                    0.5 * (x / s).exp()
                } else {
                    1.0 - 0.5 * (-x / s).exp()
                }
            }
        }
    }

    /// One draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.scale();
        match self.kind {
            EntryKind::Gaussian => s * rng.sample::<f64, _>(StandardNormal),
            EntryKind::Uniform => s * (2.0 * rng.random::<f64>() - 1.0),
            EntryKind::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -s * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }

    /// `count` iid draws, deterministic in `seed`.
    pub fn sample_entries(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}
