//! One-dimensional Gauss–Legendre helpers shared by the measure and
//! distribution code.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub(crate) fn reference_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let degree = NonZeroUsize::new(n).expect("quadrature order must be positive");
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(degree)
        .iter()
        .map(|(x, w)| (*x, *w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Composite Gauss–Legendre rule for smooth-by-pieces integrands.
///
/// `breaks` must be sorted; each interval between consecutive breaks is cut
/// into panels no wider than `max_panel`, and a 16-point rule is applied on
/// every panel.
pub(crate) struct Composite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Composite {
    pub(crate) fn new() -> Self {
        let (nodes, weights) = reference_rule(16);
        Self { nodes, weights }
    }

    pub(crate) fn integrate(&self, breaks: &[f64], max_panel: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let panels = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
            let width = (hi - lo) / panels as f64;
            for p in 0..panels {
                let a = lo + p as f64 * width;
                let half = 0.5 * width;
                let mid = a + half;
                let mut s = 0.0;
                for (x, wt) in self.nodes.iter().zip(&self.weights) {
                    s += wt * f(mid + half * x);
                }
                total += half * s;
            }
        }
        total
    }
}
