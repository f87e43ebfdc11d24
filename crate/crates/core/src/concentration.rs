//! Monte Carlo probes of two concentration inputs: the tail of a centered
//! quadratic form `x^T A conj(x) - Tr A`, and the lower tail of the mass of
//! `x` on an `m`-dimensional orthonormal family.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{derive_trial_seed, stream, EntryDistribution};
use crate::error::{Error, Result};
use crate::stats::{slope_through_origin, wilson_interval, CompensatedSum, Proportion, Z_95};

pub const MIN_TAIL_TRIALS: usize = 100;

/// Matrices above this size must be given spectrally.
pub const MAX_DENSE_FORM: usize = 128;

/// The matrix `A` of a quadratic form.
#[derive(Debug, Clone)]
pub enum QuadraticForm {
    Dense(Mat<Complex64>),
    /// `A = V diag(eigenvalues) V^*`; `basis: None` means `V = I`.
    Spectral {
        eigenvalues: Vec<f64>,
        basis: Option<Mat<Complex64>>,
    },
}

impl QuadraticForm {
    pub fn identity(n: usize) -> Self {
        QuadraticForm::Spectral {
            eigenvalues: vec![1.0; n],
            basis: None,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            QuadraticForm::Dense(a) => a.nrows(),
            QuadraticForm::Spectral { eigenvalues, .. } => eigenvalues.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            QuadraticForm::Dense(a) => {
                if a.nrows() != a.ncols() {
                    return Err(Error::invalid("A", "must be square"));
                }
                if a.nrows() > MAX_DENSE_FORM {
                    return Err(Error::invalid("A", "dense forms are limited to N <= 128"));
                }
            }
            QuadraticForm::Spectral { eigenvalues, basis } => {
                if let Some(v) = basis {
                    if v.nrows() != eigenvalues.len() || v.ncols() != eigenvalues.len() {
                        return Err(Error::invalid("A", "basis shape does not match the spectrum"));
                    }
                }
            }
        }
        if self.n() == 0 {
            return Err(Error::invalid("A", "must be nonempty"));
        }
        Ok(())
    }

    /// `Tr A`.
    pub fn trace(&self) -> Complex64 {
        match self {
            QuadraticForm::Dense(a) => (0..a.nrows()).map(|i| a[(i, i)]).sum(),
            QuadraticForm::Spectral { eigenvalues, .. } => Complex64::new(eigenvalues.iter().sum(), 0.0),
        }
    }

    /// `Tr A^* A`.
    pub fn frobenius_sq(&self) -> f64 {
        match self {
            QuadraticForm::Dense(a) => a.col_iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum(),
            QuadraticForm::Spectral { eigenvalues, .. } => eigenvalues.iter().map(|l| l * l).sum(),
        }
    }

    /// `x^T A conj(x) = sum_ij a_ij x_i conj(x_j)`.
    pub fn evaluate(&self, x: &[Complex64]) -> Complex64 {
        match self {
            QuadraticForm::Dense(a) => {
                let n = a.nrows();
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let xj = x[j].conj();
                    let mut col = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        col += a[(i, j)] * x[i];
                    }
                    acc += col * xj;
                }
                acc
            }
            QuadraticForm::Spectral {
                eigenvalues,
                basis: None,
            } => Complex64::new(eigenvalues.iter().zip(x).map(|(l, z)| l * z.norm_sqr()).sum(), 0.0),
            QuadraticForm::Spectral {
                eigenvalues,
                basis: Some(v),
            } => {
                let n = eigenvalues.len();
                let mut acc = 0.0;
                for k in 0..n {
                    let mut p = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        p += v[(i, k)] * x[i];
                    }
                    acc += eigenvalues[k] * p.norm_sqr();
                }
                Complex64::new(acc, 0.0)
            }
        }
    }
}

/// Empirical `P(|x^T A conj(x) - Tr A| >= delta)` over a grid of `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub deltas: Vec<f64>,
    pub exceedance: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub trials: usize,
    /// `Tr A^* A`
    pub normalizer: f64,
    /// Least-squares slope through the origin of `-ln P` against
    /// `min(delta / sqrt(T), delta^2 / T)`, `T = Tr A^* A`, over points with
    /// `0 < P < 1`. `None` with fewer than two such points.
    pub fitted_slope: Option<f64>,
    /// Sample variance of the real part of the centered statistic.
    pub variance: f64,
}

impl TailCurve {
    /// `delta,exceedance,ci_lo,ci_hi` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,exceedance,ci_lo,ci_hi\n");
        for i in 0..self.deltas.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.deltas[i], self.exceedance[i], self.ci_lo[i], self.ci_hi[i]
            ));
        }
        out
    }

    pub fn is_monotone(&self) -> bool {
        let mut idx: Vec<usize> = (0..self.deltas.len()).collect();
        idx.sort_by(|&a, &b| self.deltas[a].total_cmp(&self.deltas[b]));
        idx.windows(2).all(|w| self.exceedance[w[1]] <= self.exceedance[w[0]])
    }
}

fn sample_vector(dist: EntryDistribution, n: usize, seed: u64, trial: u64) -> Vec<Complex64> {
    let mut rng = stream(derive_trial_seed(seed, trial));
    (0..n).map(|_| dist.sample_complex(&mut rng)).collect()
}

pub fn hw_tail_curve(
    form: &QuadraticForm,
    dist: EntryDistribution,
    trials: usize,
    deltas: &[f64],
    seed: u64,
) -> Result<TailCurve> {
    form.validate()?;
    if trials < MIN_TAIL_TRIALS {
        return Err(Error::invalid("trials", "at least 100 are required"));
    }
    if deltas.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::invalid("deltas", "must be finite and nonnegative"));
    }
    let normalizer = form.frobenius_sq();
    if !(normalizer > 0.0) {
        return Err(Error::DegenerateForm);
    }
    let n = form.n();
    let trace = form.trace();
    let stats: Vec<Complex64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| form.evaluate(&sample_vector(dist, n, seed, t)) - trace)
        .collect();
    let moduli: Vec<f64> = stats.iter().map(|z| z.norm()).collect();

    let mut exceedance = Vec::with_capacity(deltas.len());
    let mut ci_lo = Vec::with_capacity(deltas.len());
    let mut ci_hi = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let hits = moduli.iter().filter(|&&m| m >= d).count() as u64;
        let (lo, hi) = wilson_interval(hits, trials as u64, Z_95);
        exceedance.push(hits as f64 / trials as f64);
        ci_lo.push(lo);
        ci_hi.push(hi);
    }

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&d, &p) in deltas.iter().zip(&exceedance) {
        if p > 0.0 && p < 1.0 {
            xs.push((d / normalizer.sqrt()).min(d * d / normalizer));
            ys.push(-p.ln());
        }
    }
    let fitted_slope = (xs.len() >= 2).then(|| slope_through_origin(&xs, &ys));

    let mean = stats.iter().map(|z| z.re).collect::<CompensatedSum>().total() / trials as f64;
    let variance = stats
        .iter()
        .map(|z| (z.re - mean) * (z.re - mean))
        .collect::<CompensatedSum>()
        .total()
        / (trials - 1) as f64;

    Ok(TailCurve {
        deltas: deltas.to_vec(),
        exceedance,
        ci_lo,
        ci_hi,
        trials,
        normalizer,
        fitted_slope,
        variance,
    })
}

/// Orthonormal family `v_1..v_m` used by [`projection_mass_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrthonormalFamily {
    /// The first `m` coordinate vectors.
    Coordinate,
    /// A fresh Haar-distributed family per trial.
    Haar,
}

impl OrthonormalFamily {
    /// Coordinates for Gaussian entries (the law is unitarily invariant, so
    /// every fixed family gives the same statistic); Haar otherwise.
    pub fn default_for(dist: EntryDistribution) -> Self {
        match dist {
            EntryDistribution::ComplexGaussian => OrthonormalFamily::Coordinate,
            _ => OrthonormalFamily::Haar,
        }
    }
}

/// `m` orthonormal columns from a complex Gaussian `n x m` matrix by modified
/// Gram-Schmidt, which yields a Haar-distributed frame.
pub fn haar_frame<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Mat<Complex64> {
    let mut q = Mat::<Complex64>::from_fn(n, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    for j in 0..m {
        for i in 0..j {
            let mut dot = Complex64::new(0.0, 0.0);
            for r in 0..n {
                dot += q[(r, i)].conj() * q[(r, j)];
            }
            for r in 0..n {
                let qi = q[(r, i)];
                q[(r, j)] -= qi * dot;
            }
        }
        let norm = (0..n).map(|r| q[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            q[(r, j)] /= norm;
        }
    }
    q
}

/// `sum_{alpha <= m} |<v_alpha, x>|^2` for one trial.
pub fn projection_mass(
    m: usize,
    n: usize,
    dist: EntryDistribution,
    family: OrthonormalFamily,
    seed: u64,
    trial: u64,
) -> f64 {
    let mut rng = stream(derive_trial_seed(seed, trial));
    match family {
        OrthonormalFamily::Coordinate => (0..m).map(|_| dist.sample_complex(&mut rng).norm_sqr()).sum(),
        OrthonormalFamily::Haar => {
            let x: Vec<Complex64> = (0..n).map(|_| dist.sample_complex(&mut rng)).collect();
            let v = haar_frame(&mut rng, n, m);
            (0..m)
                .map(|a| {
                    let mut p = Complex64::new(0.0, 0.0);
                    for r in 0..n {
                        p += v[(r, a)].conj() * x[r];
                    }
                    p.norm_sqr()
                })
                .sum()
        }
    }
}

/// Empirical `P(sum_{alpha <= m} |<v_alpha, x>|^2 <= m / 2)`.
pub fn projection_mass_probe(
    m: usize,
    n: usize,
    dist: EntryDistribution,
    family: OrthonormalFamily,
    trials: usize,
    seed: u64,
) -> Result<Proportion> {
    if m == 0 || m > n {
        return Err(Error::invalid("m", "must satisfy 1 <= m <= N"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    let half = m as f64 / 2.0;
    let flags: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|t| projection_mass(m, n, dist, family, seed, t) <= half)
        .collect();
    Ok(Proportion::from_flags(flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delta_always_exceeded() {
        let c = hw_tail_curve(
            &QuadraticForm::identity(8),
            EntryDistribution::ComplexGaussian,
            200,
            &[0.0, 1.0],
            1,
        )
        .unwrap();
        assert_eq!(c.exceedance[0], 1.0);
        assert!(c.is_monotone());
    }

    #[test]
    fn identity_at_one_standard_deviation() {
        let n = 64;
        let c = hw_tail_curve(
            &QuadraticForm::identity(n),
            EntryDistribution::ComplexGaussian,
            4000,
            &[(n as f64).sqrt()],
            5,
        )
        .unwrap();
        assert!(c.exceedance[0] > 0.1 && c.exceedance[0] < 0.5, "{}", c.exceedance[0]);
    }

    #[test]
    fn dense_and_spectral_forms_agree() {
        let n = 6;
        let lambda = [1.0, -0.5, 2.0, 0.0, 0.3, 1.5];
        let mut rng = stream(3);
        let v = haar_frame(&mut rng, n, n);
        let diag = Mat::from_fn(n, n, |i, j| Complex64::new(if i == j { lambda[i] } else { 0.0 }, 0.0));
        let dense = &v * &diag * v.adjoint();
        let spectral = QuadraticForm::Spectral {
            eigenvalues: lambda.to_vec(),
            basis: Some(v),
        };
        let dense = QuadraticForm::Dense(dense);
        let x = sample_vector(EntryDistribution::UniformSymmetric, n, 9, 0);
        assert!((dense.evaluate(&x) - spectral.evaluate(&x)).norm() < 1e-12);
        assert!((dense.frobenius_sq() - spectral.frobenius_sq()).abs() < 1e-12);
        assert!((dense.trace() - spectral.trace()).norm() < 1e-12);
    }

    #[test]
    fn degenerate_form_rejected() {
        let zero = QuadraticForm::Spectral {
            eigenvalues: vec![0.0; 4],
            basis: None,
        };
        assert!(matches!(
            hw_tail_curve(&zero, EntryDistribution::ComplexGaussian, 100, &[1.0], 0),
            Err(Error::DegenerateForm)
        ));
        assert!(hw_tail_curve(
            &QuadraticForm::identity(4),
            EntryDistribution::ComplexGaussian,
            99,
            &[1.0],
            0
        )
        .is_err());
    }

    #[test]
    fn haar_frame_is_orthonormal() {
        let mut rng = stream(11);
        let q = haar_frame(&mut rng, 10, 4);
        let g = q.adjoint() * &q;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn full_mass_is_rare() {
        let p = projection_mass_probe(
            64,
            64,
            EntryDistribution::ComplexGaussian,
            OrthonormalFamily::Coordinate,
            5000,
            2,
        )
        .unwrap();
        assert!(p.estimate < 1e-3);
    }

    #[test]
    fn single_direction_matches_modulus_cdf() {
        for dist in EntryDistribution::ALL {
            let family = OrthonormalFamily::Coordinate;
            let p = projection_mass_probe(1, 4, dist, family, 20_000, 4).unwrap();
            let want = dist.modulus_sq_cdf(0.5);
            assert!(p.ci_lo <= want && want <= p.ci_hi, "{dist:?}: {p:?} vs {want}");
        }
        assert!(
            projection_mass_probe(0, 4, EntryDistribution::ComplexGaussian, OrthonormalFamily::Haar, 10, 0).is_err()
        );
        assert!(
            projection_mass_probe(5, 4, EntryDistribution::ComplexGaussian, OrthonormalFamily::Haar, 10, 0).is_err()
        );
    }
}
