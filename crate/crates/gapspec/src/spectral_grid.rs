//! Chebyshev collocation on a truncated line [−L, L].
//!
//! Nodes are Chebyshev points ξⱼ = cos(jπ/N) pushed through the odd map
//! x = L·sinh(αξ)/sinh(α). With α = 0 this is the plain affine scaling
//! x = Lξ; a positive α concentrates nodes in the soliton core while keeping
//! the far field reachable. Differentiation and Clenshaw–Curtis weights
//! include the Jacobian of the map.

use crate::{Error, Result, C64};
use faer::Mat;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct ChebGrid {
    n: usize,
    halfwidth: f64,
    stretch: f64,
    nodes: Vec<f64>,
    diff: Mat<f64>,
    weights: Vec<f64>,
}

/// Default truncation: L = lfac/β clamped to [10, 10·lfac].
///
/// Soliton tails decay like e^{−β|x|}; lfac = 20 leaves ~2e−9 at the boundary.
pub fn halfwidth_auto(omega: f64, lfac: f64) -> f64 {
    let beta = (1.0 - omega * omega).sqrt();
    (lfac / beta).clamp(10.0, 10.0 * lfac)
}

/// Stretch parameter placing the map's linear-to-exponential crossover at the
/// core width s_c = 1/(β + 1 − ω) of the soliton.
pub fn stretch_auto(omega: f64, halfwidth: f64) -> f64 {
    let beta = (1.0 - omega * omega).sqrt();
    let core = 1.0 / (beta + 1.0 - omega);
    (halfwidth / core).asinh()
}

impl ChebGrid {
    /// Plain grid: nodes L·cos(jπ/N).
    pub fn build(n: usize, halfwidth: f64) -> Result<Self> {
        Self::build_stretched(n, halfwidth, 0.0)
    }

    pub fn build_stretched(n: usize, halfwidth: f64, stretch: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::Invalid(format!("Chebyshev degree N = {n} < 8")));
        }
        if !(halfwidth > 0.0 && halfwidth.is_finite()) {
            return Err(Error::Invalid(format!(
                "halfwidth L = {halfwidth} must be positive"
            )));
        }
        if !(stretch >= 0.0 && stretch.is_finite()) {
            return Err(Error::Invalid(format!(
                "stretch α = {stretch} must be nonnegative"
            )));
        }
        let xi = cheb_points(n);
        let d_ref = cheb_diff(n);
        let w_ref = clenshaw_curtis(n);

        let plain = stretch < 1e-10;
        let (nodes, jac): (Vec<f64>, Vec<f64>) = if plain {
            (
                xi.iter().map(|&s| halfwidth * s).collect(),
                vec![halfwidth; n + 1],
            )
        } else {
            let sh = stretch.sinh();
            xi.iter()
                .map(|&s| {
                    (
                        halfwidth * (stretch * s).sinh() / sh,
                        halfwidth * stretch * (stretch * s).cosh() / sh,
                    )
                })
                .unzip()
        };

        let mut diff = Mat::<f64>::from_fn(n + 1, n + 1, |i, j| d_ref[(i, j)] / jac[i]);
        negative_sum_diagonal(&mut diff);
        let weights = w_ref.iter().zip(&jac).map(|(w, j)| w * j).collect();
        Ok(Self {
            n,
            halfwidth,
            stretch: if plain { 0.0 } else { stretch },
            nodes,
            diff,
            weights,
        })
    }

    /// Grid with automatic halfwidth and stretch for a soliton of frequency ω.
    pub fn auto(n: usize, omega: f64, lfac: f64) -> Result<Self> {
        let l = halfwidth_auto(omega, lfac);
        Self::build_stretched(n, l, stretch_auto(omega, l))
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// Number of nodes, N + 1.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn diff(&self) -> &Mat<f64> {
        &self.diff
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Collocation derivative skew-symmetrized in the quadrature inner product:
    /// D_s = (D − W⁻¹DᵀW)/2, so that W·D_s is exactly antisymmetric.
    ///
    /// D and D_s agree to spectral accuracy on smooth decaying data, but only
    /// D_s gives Dirac matrices whose spectra keep the symmetries of the
    /// continuous operators. The plain collocation matrix is far from normal
    /// and scatters the continuous spectrum into the complex plane.
    pub fn skew_diff(&self) -> Mat<f64> {
        let w = &self.weights;
        Mat::<f64>::from_fn(self.len(), self.len(), |i, j| {
            0.5 * (self.diff[(i, j)] - self.diff[(j, i)] * w[j] / w[i])
        })
    }

    pub fn spectral_derivative(&self, samples: &[C64]) -> Result<Vec<C64>> {
        if samples.len() != self.len() {
            return Err(Error::Length {
                expected: self.len(),
                got: samples.len(),
            });
        }
        Ok(apply_real(&self.diff, samples))
    }

    /// Clenshaw–Curtis quadrature of sampled values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn integrate_complex(&self, f: &[C64]) -> C64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }
}

pub(crate) fn apply_real(m: &Mat<f64>, x: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| x[j] * m[(i, j)]).sum())
        .collect()
}

fn cheb_points(n: usize) -> Vec<f64> {
    // sin form keeps the nodes exactly antisymmetric
    (0..=n)
        .map(|j| (PI * (n as f64 - 2.0 * j as f64) / (2.0 * n as f64)).sin())
        .collect()
}

/// Collocation derivative on [−1, 1] at ξⱼ = cos(jπ/N), diagonal filled later.
fn cheb_diff(n: usize) -> Mat<f64> {
    let nf = n as f64;
    let c = |k: usize| if k == 0 || k == n { 2.0 } else { 1.0 };
    Mat::<f64>::from_fn(n + 1, n + 1, |i, j| {
        if i == j {
            return 0.0;
        }
        // ξᵢ − ξⱼ = 2 sin((i+j)π/2N) sin((j−i)π/2N), free of cancellation
        let diff = 2.0
            * ((i + j) as f64 * PI / (2.0 * nf)).sin()
            * ((j as f64 - i as f64) * PI / (2.0 * nf)).sin();
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        c(i) / c(j) * sign / diff
    })
}

fn negative_sum_diagonal(d: &mut Mat<f64>) {
    for i in 0..d.nrows() {
        let s: f64 = (0..d.ncols()).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
}

/// Clenshaw–Curtis weights on [−1, 1] for the nodes cos(jπ/N).
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let mut v = vec![1.0; n.saturating_sub(1)];
    let theta = |k: usize| k as f64 * PI / nf;
    if n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * k as f64 * theta(i + 1)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta(i + 1)).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * k as f64 * theta(i + 1)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ChebGrid::build(7, 1.0).is_err());
        assert!(ChebGrid::build(8, 0.0).is_err());
        assert!(ChebGrid::build(8, -1.0).is_err());
    }

    #[test]
    fn plain_grid_invariants() {
        for (n, l) in [(8, 1.0), (9, 3.0), (64, 10.0), (128, 12.0)] {
            let g = ChebGrid::build(n, l).unwrap();
            for j in 0..=n {
                assert_eq!(g.nodes()[j], -g.nodes()[n - j]);
                assert!((g.nodes()[j] - l * (j as f64 * PI / n as f64).cos()).abs() < 1e-13 * l);
                if j > 0 {
                    assert!(g.nodes()[j] < g.nodes()[j - 1]);
                }
            }
            let ones = vec![C64::new(1.0, 0.0); n + 1];
            let d1 = g.spectral_derivative(&ones).unwrap();
            assert!(d1.iter().all(|z| z.norm() < 1e-12));
            let xs: Vec<C64> = g.nodes().iter().map(|&x| C64::new(x, 0.0)).collect();
            let dx = g.spectral_derivative(&xs).unwrap();
            assert!(dx.iter().all(|z| (z - 1.0).norm() < 1e-10), "N={n}");
            assert!((g.weights().iter().sum::<f64>() - 2.0 * l).abs() < 1e-12 * l.max(1.0));
        }
    }

    #[test]
    fn sine_derivative() {
        let g = ChebGrid::build(64, 10.0).unwrap();
        let f: Vec<C64> = g.nodes().iter().map(|&x| C64::new(x.sin(), 0.0)).collect();
        let d = g.spectral_derivative(&f).unwrap();
        let err = (1..64)
            .map(|j| (d[j].re - g.nodes()[j].cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    fn sech_error(g: &ChebGrid) -> f64 {
        let f: Vec<C64> = g.nodes().iter().map(|&x| C64::new(sech(x), 0.0)).collect();
        let d = g.spectral_derivative(&f).unwrap();
        g.nodes()
            .iter()
            .zip(&d)
            .map(|(&x, z)| (z.re + sech(x) * x.tanh()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sech_derivative_and_geometric_convergence() {
        let e64 = sech_error(&ChebGrid::build(64, 12.0).unwrap());
        let e128 = sech_error(&ChebGrid::build(128, 12.0).unwrap());
        assert!(e64 / e128 > 1e3, "{e64} {e128}");
        // the stretched grid resolves the core at the same N
        let s = ChebGrid::build_stretched(128, 12.0, stretch_auto(0.0, 12.0)).unwrap();
        assert!(sech_error(&s) < 1e-9, "{}", sech_error(&s));
    }

    #[test]
    fn parity() {
        let g = ChebGrid::build_stretched(40, 8.0, 2.0).unwrap();
        let even: Vec<C64> = g
            .nodes()
            .iter()
            .map(|&x| C64::new((-x * x).exp(), 0.0))
            .collect();
        let d = g.spectral_derivative(&even).unwrap();
        for j in 0..=40 {
            assert!((d[j] + d[40 - j]).norm() < 1e-10);
        }
        let odd: Vec<C64> = g
            .nodes()
            .iter()
            .map(|&x| C64::new(x * (-x * x).exp(), 0.0))
            .collect();
        let d = g.spectral_derivative(&odd).unwrap();
        for j in 0..=40 {
            assert!((d[j] - d[40 - j]).norm() < 1e-10);
        }
    }

    #[test]
    fn quadrature() {
        let exact = PI / 2.0;
        let g = ChebGrid::build_stretched(128, 12.0, stretch_auto(0.0, 12.0)).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&x| sech(2.0 * x)).collect();
        assert!((g.integrate(&f) - exact).abs() < 1e-8);
        // polynomial exactness on the plain grid
        let p = ChebGrid::build(16, 2.0).unwrap();
        let f: Vec<f64> = p.nodes().iter().map(|&x| x.powi(4)).collect();
        assert!((p.integrate(&f) - 2.0 * 32.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn skew_diff_is_antisymmetric_in_weighted_product() {
        let g = ChebGrid::auto(48, -0.3, 20.0).unwrap();
        let ds = g.skew_diff();
        let w = g.weights();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let a = w[i] * ds[(i, j)];
                let b = w[j] * ds[(j, i)];
                assert!((a + b).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }
    }
}
