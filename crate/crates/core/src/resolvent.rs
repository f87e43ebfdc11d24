//! Resolvent quantities of `X^* X`: the empirical Stieltjes transform,
//! diagonal entries `G_kk` by leave-one-out, the per-column error terms
//! `Omega_k` of the self-consistent equation, and the kernel norm
//! `Tr A^* A`.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::SpectralPoint;
use crate::ensemble::MatrixSample;
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{LeaveOneOut, SpectralDecomposition, Spectrum};
use crate::stats::{CompensatedSum, ComplexSum};

/// Constant `C` in `|Tr-shift| <= C sqrt(E) / (N eta)`. The shift is at most
/// `2 sqrt(E) / (N eta)` deterministically, so 4 leaves a factor two.
pub const TRACE_SHIFT_CONSTANT: f64 = 4.0;

/// `Delta_N` within this distance of `-1` is rejected by
/// [`self_consistency_residual`].
pub const DEGENERATE_DENOMINATOR_TOL: f64 = 1e-12;

/// `(1/N) sum_alpha 1 / (s_alpha - theta)`.
pub fn empirical_stieltjes(spectrum: &Spectrum, point: &SpectralPoint) -> Complex64 {
    let theta = point.theta();
    let sum: ComplexSum = spectrum.values().iter().map(|&s| 1.0 / (s - theta)).collect();
    sum.total() / spectrum.len() as f64
}

/// `|Delta_N + 1 / (theta (Delta_N + 1))|`.
pub fn self_consistency_residual(delta_n: Complex64, point: &SpectralPoint) -> Result<f64> {
    let shifted = delta_n + 1.0;
    if shifted.norm() < DEGENERATE_DENOMINATOR_TOL {
        return Err(Error::DegenerateDenominator {
            tol: DEGENERATE_DENOMINATOR_TOL,
        });
    }
    Ok((delta_n + 1.0 / (point.theta() * shifted)).norm())
}

/// `G_kk = -1 / (theta (1 + w_k^* (W_k W_k^* - theta)^{-1} w_k))`.
pub fn resolvent_diag_leave_one_out(sample: &MatrixSample, k: usize, point: &SpectralPoint) -> Result<Complex64> {
    let loo = LeaveOneOut::new(sample, k)?;
    Ok(diag_from_leave_one_out(&loo, point))
}

fn diag_from_leave_one_out(loo: &LeaveOneOut, point: &SpectralPoint) -> Complex64 {
    let theta = point.theta();
    -1.0 / (theta * (1.0 + loo.quadratic_form(theta)))
}

/// `G_kk = 1 / (|w_k|^2 - theta - b^* (W_k^* W_k - theta)^{-1} b)` with
/// `b = W_k^* w_k`, evaluated through a Hermitian eigensolve of
/// `W_k^* W_k`. Independent of the singular-basis route above.
pub fn resolvent_diag_schur(sample: &MatrixSample, k: usize, point: &SpectralPoint) -> Result<Complex64> {
    let theta = point.theta();
    let col = sample.column_vector(k)?;
    let norm_sq: f64 = col.iter().map(|z| z.norm_sqr()).sum();
    if sample.n() == 1 {
        return Ok(1.0 / (norm_sq - theta));
    }
    let w = sample.remove_column(k)?;
    let b = w.adjoint() * &col;
    let gram: Mat<Complex64> = w.adjoint() * &w;
    let (lambda, v) = linalg::hermitian_eigen(gram.as_ref())?;
    let c = v.adjoint() * &b;
    let mut acc = ComplexSum::default();
    for (i, &l) in lambda.iter().enumerate() {
        acc.add(c[i].norm_sqr() / (l - theta));
    }
    Ok(1.0 / (norm_sq - theta - acc.total()))
}

/// The diagonal of `(X^* X - theta)^{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventDiagonal {
    pub theta: SpectralPoint,
    pub values: Vec<Complex64>,
}

impl ResolventDiagonal {
    /// `G_kk = sum_alpha |u_alpha(k)|^2 / (s_alpha - theta)`.
    pub fn from_decomposition(d: &SpectralDecomposition, point: &SpectralPoint) -> Self {
        let theta = point.theta();
        let n = d.n();
        let values = (0..n)
            .map(|k| {
                (0..n)
                    .map(|a| d.component_sq(a, k) / (d.eigenvalues()[a] - theta))
                    .collect::<ComplexSum>()
                    .total()
            })
            .collect();
        Self { theta: *point, values }
    }

    /// One minor SVD per column.
    pub fn by_leave_one_out(sample: &MatrixSample, point: &SpectralPoint) -> Result<Self> {
        let values = (0..sample.n())
            .map(|k| resolvent_diag_leave_one_out(sample, k, point))
            .collect::<Result<_>>()?;
        Ok(Self { theta: *point, values })
    }

    /// `(1/N) sum_k G_kk`.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().copied().collect::<ComplexSum>().total() / self.values.len() as f64
    }
}

/// Per-column error terms `Omega_k = fluctuation_k + trace_shift_k` with
/// `fluctuation_k = sqrt(E) (w_k^* (W_k W_k^* - theta)^{-1} w_k - (1/N) Tr (W_k W_k^* - theta)^{-1})`
/// and
/// `trace_shift_k = sqrt(E) / N (Tr (W_k W_k^* - theta)^{-1} - Tr (X^* X - theta)^{-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTerms {
    pub theta: SpectralPoint,
    pub omegas: Vec<Complex64>,
    pub fluctuation: Vec<Complex64>,
    pub trace_shift: Vec<Complex64>,
}

impl ErrorTerms {
    pub fn max_abs(&self) -> f64 {
        self.omegas.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_trace_shift(&self) -> f64 {
        self.trace_shift.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `C sqrt(E) / (N eta)` for the given constant.
    pub fn trace_shift_bound(&self, constant: f64) -> f64 {
        let n = self.omegas.len() as f64;
        constant * self.theta.energy().sqrt() / (n * self.theta.eta())
    }

    pub fn trace_shift_within_bound(&self, constant: f64) -> bool {
        self.max_trace_shift() <= self.trace_shift_bound(constant)
    }
}

fn require_positive_energy(point: &SpectralPoint) -> Result<()> {
    if !(point.energy() > 0.0) {
        return Err(Error::NonPositiveEnergy { energy: point.energy() });
    }
    Ok(())
}

/// All `Omega_k` from a single decomposition of `X^* X`.
///
/// With `G = (X^*X - theta)^{-1}`, the leave-one-out quadratic form is
/// `-1/(theta G_kk) - 1` and `Tr G - Tr G^{(k)} = (G^2)_kk / G_kk`, so no
/// minor needs factoring.
pub fn omega_terms(d: &SpectralDecomposition, point: &SpectralPoint) -> Result<ErrorTerms> {
    require_positive_energy(point)?;
    let theta = point.theta();
    let n = d.n();
    let nf = n as f64;
    let root_e = point.energy().sqrt();
    let trace = empirical_stieltjes(d.spectrum(), point) * nf;
    let mut omegas = Vec::with_capacity(n);
    let mut fluctuation = Vec::with_capacity(n);
    let mut trace_shift = Vec::with_capacity(n);
    for k in 0..n {
        let mut g = ComplexSum::default();
        let mut g2 = ComplexSum::default();
        for (a, &s) in d.eigenvalues().iter().enumerate() {
            let r = 1.0 / (s - theta);
            let c = d.component_sq(a, k);
            g.add(c * r);
            g2.add(c * r * r);
        }
        let (g, g2) = (g.total(), g2.total());
        let q = -1.0 / (theta * g) - 1.0;
        let outer = -1.0 / theta + trace - g2 / g;
        let fl = root_e * (q - outer / nf);
        let ts = root_e * (-1.0 / theta - g2 / g) / nf;
        fluctuation.push(fl);
        trace_shift.push(ts);
        omegas.push(fl + ts);
    }
    Ok(ErrorTerms {
        theta: *point,
        omegas,
        fluctuation,
        trace_shift,
    })
}

/// `(Omega_k, trace_shift_k)` for one column by factoring the minor `W_k`
/// directly. Slower than [`omega_terms`]; used as a cross-check.
pub fn omega_term_direct(
    sample: &MatrixSample,
    spectrum: &Spectrum,
    k: usize,
    point: &SpectralPoint,
) -> Result<(Complex64, Complex64)> {
    require_positive_energy(point)?;
    let theta = point.theta();
    let nf = sample.n() as f64;
    let root_e = point.energy().sqrt();
    let loo = LeaveOneOut::new(sample, k)?;
    let q = loo.quadratic_form(theta);
    let outer = loo.outer_trace(theta);
    let trace = empirical_stieltjes(spectrum, point) * nf;
    let fl = root_e * (q - outer / nf);
    let ts = root_e * (outer - trace) / nf;
    Ok((fl + ts, ts))
}

/// `Tr A^* A = (E / N^2) sum_alpha |s_alpha^{(k)} - theta|^{-2}` and its
/// split over `s <= (log N)^b / N^2`, the middle range, and `s > E/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelStats {
    pub theta: SpectralPoint,
    pub trace_aa: f64,
    pub regions: [f64; 3],
}

impl KernelStats {
    /// `trace_aa / (sqrt(E) / (N eta))`.
    pub fn normalized(&self, n: usize) -> f64 {
        self.trace_aa * n as f64 * self.theta.eta() / self.theta.energy().sqrt()
    }
}

pub fn trace_kernel_norm(minor: &[f64], n: usize, point: &SpectralPoint, b: f64) -> Result<KernelStats> {
    require_positive_energy(point)?;
    if n == 0 {
        return Err(Error::SizeTooSmall { n, min: 1 });
    }
    let theta = point.theta();
    let e = point.energy();
    let nf = n as f64;
    let low = nf.ln().max(0.0).powf(b) / (nf * nf);
    let mut total = CompensatedSum::new();
    let mut regions = [CompensatedSum::new(); 3];
    for &s in minor {
        let term = e / (nf * nf) / (s - theta).norm_sqr();
        total.add(term);
        let r = if s <= low {
            0
        } else if s > e / 2.0 {
            2
        } else {
            1
        };
        regions[r].add(term);
    }
    Ok(KernelStats {
        theta: *point,
        trace_aa: total.total(),
        regions: regions.map(|r| r.total()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::mp_stieltjes;
    use crate::ensemble::{sample_matrix, EnsembleSpec, EntryDistribution};
    use crate::spectral::{decompose, minor_spectrum};

    fn gaussian(n: usize, trial: u64) -> MatrixSample {
        let spec = EnsembleSpec::new(n, EntryDistribution::ComplexGaussian, 77).unwrap();
        sample_matrix(&spec, trial)
    }

    /// Diagonal of `(X^* X - theta)^{-1}` by Gauss-Jordan elimination with
    /// partial pivoting.
    fn dense_inverse_diagonal(sample: &MatrixSample, theta: Complex64) -> Vec<Complex64> {
        let n = sample.n();
        let x = sample.entries();
        let mut a = vec![vec![Complex64::new(0.0, 0.0); 2 * n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    s += x[(r, i)].conj() * x[(r, j)];
                }
                a[i][j] = s;
            }
            a[i][i] -= theta;
            a[i][n + i] = Complex64::new(1.0, 0.0);
        }
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm()))
                .unwrap();
            a.swap(c, p);
            let pivot = a[c][c];
            for v in a[c].iter_mut() {
                *v /= pivot;
            }
            for r in 0..n {
                if r != c {
                    let f = a[r][c];
                    let row_c = a[c].clone();
                    for (v, w) in a[r].iter_mut().zip(row_c) {
                        *v -= f * w;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n + i]).collect()
    }

    fn theta_grid() -> Vec<SpectralPoint> {
        let mut out = Vec::new();
        for &e in &[0.01, 0.5, 1.0, 2.0, 3.9, 5.0] {
            for &eta in &[0.01, 0.5] {
                out.push(SpectralPoint::new(e, eta).unwrap());
            }
        }
        out
    }

    #[test]
    fn leave_one_out_matches_dense_inversion() {
        for &n in &[1usize, 2, 5, 16, 32] {
            let m = gaussian(n, n as u64);
            for p in theta_grid() {
                let oracle = dense_inverse_diagonal(&m, p.theta());
                for (k, want) in oracle.iter().enumerate() {
                    let got = resolvent_diag_leave_one_out(&m, k, &p).unwrap();
                    assert!((got - want).norm() <= 1e-9 * (1.0 + want.norm()), "N={n} k={k} {p:?}");
                    assert!(got.im > 0.0);
                }
            }
        }
    }

    #[test]
    fn schur_form_agrees() {
        let m = gaussian(16, 4);
        let p = SpectralPoint::new(1.0, 0.5).unwrap();
        for k in 0..16 {
            let a = resolvent_diag_leave_one_out(&m, k, &p).unwrap();
            let b = resolvent_diag_schur(&m, k, &p).unwrap();
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn scalar_resolvent() {
        let m = gaussian(1, 3);
        let p = SpectralPoint::new(0.7, 0.2).unwrap();
        let x = m.entries()[(0, 0)].norm_sqr();
        let want = 1.0 / (x - p.theta());
        assert!((resolvent_diag_leave_one_out(&m, 0, &p).unwrap() - want).norm() < 1e-15);
        assert!((resolvent_diag_schur(&m, 0, &p).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn diagonal_average_is_stieltjes() {
        let m = gaussian(24, 1);
        let d = decompose(&m).unwrap();
        for p in theta_grid() {
            let delta = empirical_stieltjes(d.spectrum(), &p);
            let from_vectors = ResolventDiagonal::from_decomposition(&d, &p);
            assert!((from_vectors.mean() - delta).norm() < 1e-12 * (1.0 + delta.norm()) / p.eta().min(1.0));
            let loo = ResolventDiagonal::by_leave_one_out(&m, &p).unwrap();
            assert!((loo.mean() - delta).norm() < 1e-9);
            assert!(loo.values.iter().all(|g| g.im > 0.0));
        }
    }

    #[test]
    fn stieltjes_far_field_and_herglotz() {
        let m = gaussian(20, 2);
        let s = decompose(&m).unwrap();
        let far = SpectralPoint::new(0.0, 1e6).unwrap();
        let delta = empirical_stieltjes(s.spectrum(), &far);
        assert!((delta + 1.0 / far.theta()).norm() <= s.spectrum().largest() / far.theta().norm_sqr());
        for p in theta_grid() {
            assert!(empirical_stieltjes(s.spectrum(), &p).im > 0.0);
        }
    }

    #[test]
    fn residual_examples() {
        let p = SpectralPoint::new(2.0, 0.3).unwrap();
        assert!(self_consistency_residual(mp_stieltjes(&p), &p).unwrap() < 1e-12);
        assert!(self_consistency_residual(Complex64::new(-1.0, 0.0), &p).is_err());
    }

    #[test]
    fn omega_fast_route_matches_direct() {
        let m = gaussian(16, 6);
        let d = decompose(&m).unwrap();
        for &(e, eta) in &[(2.0, 0.1), (0.05, 0.01), (3.5, 1.0)] {
            let p = SpectralPoint::new(e, eta).unwrap();
            let terms = omega_terms(&d, &p).unwrap();
            for k in 0..16 {
                let (omega, shift) = omega_term_direct(&m, d.spectrum(), k, &p).unwrap();
                assert!((terms.omegas[k] - omega).norm() < 1e-9, "k={k} {p:?}");
                assert!((terms.trace_shift[k] - shift).norm() < 1e-9);
            }
            assert!(terms.omegas.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            assert!(terms.trace_shift_within_bound(2.0));
        }
        assert!(omega_terms(&d, &SpectralPoint::new(0.0, 0.1).unwrap()).is_err());
    }

    #[test]
    fn kernel_norm_examples() {
        let p = SpectralPoint::new(2.0, 0.1).unwrap();
        let one = trace_kernel_norm(&[2.0], 10, &p, 2.0).unwrap();
        assert!((one.trace_aa - 2.0 / 100.0 / 0.01).abs() < 1e-12);

        let m = gaussian(32, 0);
        let minor = minor_spectrum(&m, 3).unwrap();
        let stats = trace_kernel_norm(minor.values(), 32, &p, 2.0).unwrap();
        let parts: f64 = stats.regions.iter().sum();
        assert!((parts - stats.trace_aa).abs() <= 1e-12 * stats.trace_aa);
        let direct: f64 = minor
            .values()
            .iter()
            .map(|&s| 2.0 / 1024.0 / (s - p.theta()).norm_sqr())
            .sum();
        assert!((direct - stats.trace_aa).abs() <= 1e-12 * direct);
        assert!(trace_kernel_norm(&[1.0], 4, &SpectralPoint::new(-1.0, 0.1).unwrap(), 2.0).is_err());
    }
}
