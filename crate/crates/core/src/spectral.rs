//! Spectra of `X^* X` computed from the singular values of `X`.
//!
//! Squaring `X` before diagonalizing loses half the significant digits of
//! eigenvalues of size `N^-2`, which is exactly the hard-edge regime, so all
//! spectra here come from an SVD: `s_alpha = sigma_alpha^2`, with the right
//! singular vectors as eigenvectors.

use faer::linalg::svd::ComputeSvdVectors;
use faer::{Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::Window;
use crate::ensemble::{MatrixSample, TrialId};
use crate::error::{Error, Result};
use crate::linalg;
use crate::stats::CompensatedSum;

/// Default relative gap below which the eigenvector-component identity is
/// not evaluated.
pub const DEFAULT_GAP_TOL: f64 = 1e-6;

/// Eigenvalues of `X^* X` in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts `values` ascending (stable on ties).
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { values }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn smallest(&self) -> f64 {
        self.values[0]
    }

    pub fn largest(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Number of eigenvalues in `[E, E + eta]`, endpoints included.
    pub fn count_in_window(&self, window: &Window) -> CountResult {
        let lo = self.values.partition_point(|&s| s < window.start());
        let hi = self.values.partition_point(|&s| s <= window.end());
        CountResult {
            window: *window,
            count: hi.saturating_sub(lo),
        }
    }

    /// Number of eigenvalues in `[0, K / N^2]`.
    pub fn near_zero_count(&self, k: f64) -> Result<CountResult> {
        if !(k > 0.0) {
            return Err(Error::invalid("K", "must be positive"));
        }
        let n = self.values.len() as f64;
        let window = Window::new(0.0, k / (n * n))?;
        Ok(self.count_in_window(&window))
    }

    /// `2 eta Im Tr (X^*X - E - i eta)^{-1}`, a deterministic upper bound on
    /// the count in `[E, E + eta]` since `eta^2 / ((s-E)^2 + eta^2) >= 1/2`
    /// there.
    pub fn counting_bound(&self, window: &Window) -> f64 {
        let e = window.start();
        let eta = window.width();
        let sum: CompensatedSum = self
            .values
            .iter()
            .map(|&s| eta * eta / ((s - e) * (s - e) + eta * eta))
            .collect();
        2.0 * sum.total()
    }

    /// Empirical distribution function `#{s_alpha <= x} / N`.
    pub fn empirical_cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&s| s <= x) as f64 / self.values.len() as f64
    }

    /// `sup_x |F_N(x) - F(x)|` for a continuous distribution function `F`.
    pub fn kolmogorov_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let f = cdf(s);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub window: Window,
    pub count: usize,
}

/// Eigenvalues `s_alpha` (ascending) and orthonormal eigenvectors `u_alpha`
/// (matching columns) of `X^* X`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    spectrum: Spectrum,
    eigenvectors: Mat<Complex64>,
    origin: Option<TrialId>,
}

impl SpectralDecomposition {
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.values()
    }

    pub fn eigenvectors(&self) -> MatRef<'_, Complex64> {
        self.eigenvectors.as_ref()
    }

    pub fn origin(&self) -> Option<&TrialId> {
        self.origin.as_ref()
    }

    pub fn n(&self) -> usize {
        self.spectrum.len()
    }

    /// `|u_alpha(k)|^2`.
    #[inline]
    pub fn component_sq(&self, alpha: usize, k: usize) -> f64 {
        self.eigenvectors[(k, alpha)].norm_sqr()
    }

    /// `max_k |u_alpha(k)|^2`.
    pub fn sup_norm_sq(&self, alpha: usize) -> f64 {
        self.eigenvectors
            .col(alpha)
            .iter()
            .map(|z| z.norm_sqr())
            .fold(0.0, f64::max)
    }

    /// `max |<u_a, u_b> - delta_ab|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let n = self.n();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// `max_alpha |X^*X u_alpha - s_alpha u_alpha|`.
    pub fn reconstruction_defect(&self, sample: &MatrixSample) -> f64 {
        let x = sample.entries();
        let xu = x * &self.eigenvectors;
        let xxu = x.adjoint() * &xu;
        let n = self.n();
        (0..n)
            .map(|a| {
                let s = self.eigenvalues()[a];
                (0..n)
                    .map(|i| (xxu[(i, a)] - self.eigenvectors[(i, a)] * s).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn svd_context(sample: &MatrixSample, what: &str) -> impl FnOnce() -> String {
    let trial = sample.describe();
    let what = what.to_owned();
    move || format!("{what} of {trial}")
}

/// Eigenvalues of `X^* X` only.
pub fn spectrum(sample: &MatrixSample) -> Result<Spectrum> {
    let svd = linalg::svd(
        sample.entries(),
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        svd_context(sample, "spectrum"),
    )?;
    Ok(Spectrum::from_values(svd.sigma.iter().map(|s| s * s).collect()))
}

/// Full eigendecomposition of `X^* X`.
pub fn decompose(sample: &MatrixSample) -> Result<SpectralDecomposition> {
    let svd = linalg::svd(
        sample.entries(),
        ComputeSvdVectors::No,
        ComputeSvdVectors::Full,
        svd_context(sample, "decomposition"),
    )?;
    let v = svd.v.expect("right vectors requested");
    let order = linalg::ascending_order(&svd.sigma);
    let n = sample.n();
    let values = order.iter().map(|&i| svd.sigma[i] * svd.sigma[i]).collect();
    let eigenvectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SpectralDecomposition {
        spectrum: Spectrum { values },
        eigenvectors,
        origin: sample.origin().copied(),
    })
}

/// Eigenvalues of the minor `W_k^* W_k` (`N - 1` values).
pub fn minor_spectrum(sample: &MatrixSample, k: usize) -> Result<Spectrum> {
    let w = sample.remove_column(k)?;
    if w.ncols() == 0 {
        return Ok(Spectrum { values: Vec::new() });
    }
    let svd = linalg::svd(
        w.as_ref(),
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        svd_context(sample, "minor spectrum"),
    )?;
    Ok(Spectrum::from_values(svd.sigma.iter().map(|s| s * s).collect()))
}

/// Leave-one-out data for column `k`: the spectrum of `W_k^* W_k` and the
/// weights of `w_k` in the left singular basis of `W_k`.
///
/// `W_k W_k^*` is `N x N` with the same nonzero spectrum plus one extra zero
/// eigenvalue; its eigenvector is the left null vector of `W_k`, and the
/// weight of `w_k` on it is kept separately as `null_weight`.
#[derive(Debug, Clone)]
pub struct LeaveOneOut {
    pub k: usize,
    pub n: usize,
    /// `|w_k|^2`
    pub column_norm_sq: f64,
    /// Eigenvalues `s_beta^{(k)}` of `W_k^* W_k`, ascending.
    pub minor: Vec<f64>,
    /// `|<u_beta^{(k)}, w_k>|^2` aligned with `minor`, where `u_beta^{(k)}` is
    /// the unit eigenvector of `W_k W_k^*` for `s_beta^{(k)}`.
    pub weights: Vec<f64>,
    /// `|<u_0^{(k)}, w_k>|^2` for the null direction of `W_k W_k^*`.
    pub null_weight: f64,
}

impl LeaveOneOut {
    pub fn new(sample: &MatrixSample, k: usize) -> Result<Self> {
        let n = sample.n();
        let w = sample.remove_column(k)?;
        let col = sample.column_vector(k)?;
        let column_norm_sq = col.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if n == 1 {
            return Ok(Self {
                k,
                n,
                column_norm_sq,
                minor: Vec::new(),
                weights: Vec::new(),
                null_weight: column_norm_sq,
            });
        }
        let svd = linalg::svd(
            w.as_ref(),
            ComputeSvdVectors::Full,
            ComputeSvdVectors::No,
            svd_context(sample, "leave-one-out"),
        )?;
        let u = svd.u.expect("left vectors requested");
        // coefficients of w_k in the full left basis; column n-1 spans the null space
        let coeffs = u.adjoint() * &col;
        let order = linalg::ascending_order(&svd.sigma);
        let minor = order.iter().map(|&i| svd.sigma[i] * svd.sigma[i]).collect();
        let weights = order.iter().map(|&i| coeffs[i].norm_sqr()).collect();
        let null_weight = coeffs[n - 1].norm_sqr();
        Ok(Self {
            k,
            n,
            column_norm_sq,
            minor,
            weights,
            null_weight,
        })
    }

    /// `w_k^* (W_k W_k^* - theta)^{-1} w_k`, including the null direction.
    pub fn quadratic_form(&self, theta: Complex64) -> Complex64 {
        let mut acc = crate::stats::ComplexSum::default();
        acc.add(-self.null_weight / theta);
        for (&s, &p) in self.minor.iter().zip(&self.weights) {
            acc.add(p / (s - theta));
        }
        acc.total()
    }

    /// `Tr (W_k W_k^* - theta)^{-1} = -1/theta + Tr (W_k^* W_k - theta)^{-1}`.
    pub fn outer_trace(&self, theta: Complex64) -> Complex64 {
        let mut acc = crate::stats::ComplexSum::default();
        acc.add(-1.0 / theta);
        for &s in &self.minor {
            acc.add(1.0 / (s - theta));
        }
        acc.total()
    }
}

/// Largest interlacing violation between the spectrum of `X^* X` and that of
/// the minor `W_k^* W_k`: `max_alpha max(s_alpha - s_alpha^{(k)},
/// s_alpha^{(k)} - s_{alpha+1}, 0)`.
pub fn interlacing_check(sample: &MatrixSample, spectrum: &Spectrum, k: usize) -> Result<f64> {
    let n = sample.n();
    if n < 2 {
        return Err(Error::SizeTooSmall { n, min: 2 });
    }
    let minor = minor_spectrum(sample, k)?;
    Ok(interlacing_violation(spectrum.values(), minor.values()))
}

/// Interlacing violation of `minor` (length `n - 1`) against `full`.
pub fn interlacing_violation(full: &[f64], minor: &[f64]) -> f64 {
    assert_eq!(full.len(), minor.len() + 1);
    minor
        .iter()
        .enumerate()
        .map(|(a, &m)| (full[a] - m).max(m - full[a + 1]).max(0.0))
        .fold(0.0, f64::max)
}

/// Outcome of the eigenvector-component identity for one `(alpha, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub alpha: usize,
    pub k: usize,
    /// `|u_alpha(k)|^2` from the decomposition.
    pub component_sq: f64,
    /// `1 / (1 + sum_beta s_beta |<u_beta, w_k>|^2 / (s_alpha - s_beta)^2)`;
    /// `NaN` when not covered.
    pub predicted: f64,
    pub residual: f64,
    /// `false` when some minor eigenvalue lies within
    /// `gap_tol * (1 + s_N)` of `s_alpha`; no residual is computed then.
    pub covered: bool,
}

fn identity_check(
    decomposition: &SpectralDecomposition,
    loo: &LeaveOneOut,
    alpha: usize,
    gap_tol: f64,
) -> IdentityCheck {
    let s_alpha = decomposition.eigenvalues()[alpha];
    let component_sq = decomposition.component_sq(alpha, loo.k);
    let threshold = gap_tol * (1.0 + decomposition.spectrum().largest());
    let min_gap = loo
        .minor
        .iter()
        .map(|&s| (s_alpha - s).abs())
        .fold(f64::INFINITY, f64::min);
    if min_gap < threshold {
        return IdentityCheck {
            alpha,
            k: loo.k,
            component_sq,
            predicted: f64::NAN,
            residual: f64::NAN,
            covered: false,
        };
    }
    // (1/N) sum s_beta |u_beta . x_k|^2 / gap^2 with x_k = sqrt(N) w_k
    let sum: CompensatedSum = loo
        .minor
        .iter()
        .zip(&loo.weights)
        .map(|(&s, &p)| s * p / ((s_alpha - s) * (s_alpha - s)))
        .collect();
    let predicted = 1.0 / (1.0 + sum.total());
    IdentityCheck {
        alpha,
        k: loo.k,
        component_sq,
        predicted,
        residual: (component_sq - predicted).abs(),
        covered: true,
    }
}

pub fn eigenvector_identity_residual(
    sample: &MatrixSample,
    decomposition: &SpectralDecomposition,
    alpha: usize,
    k: usize,
    gap_tol: f64,
) -> Result<IdentityCheck> {
    let n = sample.n();
    if alpha >= n {
        return Err(Error::IndexOutOfRange { index: alpha, len: n });
    }
    if !(gap_tol > 0.0) {
        return Err(Error::invalid("gap_tol", "must be positive"));
    }
    let loo = LeaveOneOut::new(sample, k)?;
    Ok(identity_check(decomposition, &loo, alpha, gap_tol))
}

/// The identity for every `alpha` at fixed `k`, sharing one minor SVD.
pub fn eigenvector_identity_column(
    sample: &MatrixSample,
    decomposition: &SpectralDecomposition,
    k: usize,
    gap_tol: f64,
) -> Result<Vec<IdentityCheck>> {
    if !(gap_tol > 0.0) {
        return Err(Error::invalid("gap_tol", "must be positive"));
    }
    let loo = LeaveOneOut::new(sample, k)?;
    Ok((0..sample.n())
        .map(|a| identity_check(decomposition, &loo, a, gap_tol))
        .collect())
}
