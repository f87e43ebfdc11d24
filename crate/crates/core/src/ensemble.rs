//! Reproducible sampling of `N x N` matrices `X_N = X / sqrt(N)` with iid
//! entries of mean zero and `E|x|^2 = 1`.
//!
//! # Seeding
//!
//! Every trial owns an independent stream derived from `(master_seed,
//! trial_index)`:
//!
//! ```text
//! z    = master_seed + 0x9E3779B97F4A7C15 * (trial_index + 1)     (mod 2^64)
//! seed = mix(z)
//! mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!         z ^= z >> 27; z *= 0x94D049BB133111EB;
//!         z ^= z >> 31
//! ```
//!
//! (the SplitMix64 output function). The map is a bijection of
//! `trial_index` for a fixed master seed, so distinct trials never share a
//! seed. The stream itself is ChaCha8 keyed by the little-endian bytes of
//! `mix(seed + k * 0x9E3779B97F4A7C15)` for `k = 1..=4`.
//!
//! Entries are drawn in row-major order, real part before imaginary part.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{Read, Write};

use faer::{Col, Mat, MatRef};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial_index` under `master_seed`.
#[inline]
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix64_mix(master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(trial_index.wrapping_add(1))))
}

/// ChaCha8 stream for one derived seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (k, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = splitmix64_mix(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(k as u64 + 1)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Law of the real and imaginary parts of each entry (each part has mean 0
/// and variance 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryDistribution {
    /// `N(0, 1/2)` parts.
    #[default]
    ComplexGaussian,
    /// `+-1/sqrt(2)` parts with equal probability; `|x| = 1` always.
    RademacherPair,
    /// Uniform parts on `[-sqrt(3/2), sqrt(3/2)]`.
    UniformSymmetric,
}

const UNIFORM_HALF_WIDTH: f64 = 1.224_744_871_391_589; // sqrt(3/2)

impl EntryDistribution {
    pub const ALL: [EntryDistribution; 3] = [
        EntryDistribution::ComplexGaussian,
        EntryDistribution::RademacherPair,
        EntryDistribution::UniformSymmetric,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EntryDistribution::ComplexGaussian => "complex-gaussian",
            EntryDistribution::RademacherPair => "rademacher-pair",
            EntryDistribution::UniformSymmetric => "uniform-symmetric",
        }
    }

    /// Whether the part law has a bounded density, the extra hypothesis of the
    /// local-law, density and delocalization statements.
    pub fn has_bounded_density(&self) -> bool {
        !matches!(self, EntryDistribution::RademacherPair)
    }

    /// A `delta_0` with `E exp(delta_0 x^2) < inf` for the part law.
    /// Documentation only.
    pub fn subgaussian_delta0(&self) -> f64 {
        match self {
            // density proportional to exp(-x^2): any delta_0 < 1
            EntryDistribution::ComplexGaussian => 0.5,
            // bounded support: any delta_0 works
            EntryDistribution::RademacherPair | EntryDistribution::UniformSymmetric => 1.0,
        }
    }

    /// `Var(|x|^2)` for a complex entry.
    pub fn modulus_sq_variance(&self) -> f64 {
        match self {
            EntryDistribution::ComplexGaussian => 1.0,
            EntryDistribution::RademacherPair => 0.0,
            // 2 (E u^4 - 1/4) with E u^4 = a^4 / 5, a^2 = 3/2
            EntryDistribution::UniformSymmetric => 0.4,
        }
    }

    /// `P(|x|^2 <= t)` for a complex entry.
    pub fn modulus_sq_cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            EntryDistribution::ComplexGaussian => 1.0 - (-t).exp(),
            EntryDistribution::RademacherPair => {
                if t >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            EntryDistribution::UniformSymmetric => uniform_square_disc_fraction(t.sqrt(), UNIFORM_HALF_WIDTH),
        }
    }

    /// One real or imaginary part.
    #[inline]
    pub fn sample_part<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EntryDistribution::ComplexGaussian => {
                let z: f64 = rng.sample(StandardNormal);
                z * FRAC_1_SQRT_2
            }
            EntryDistribution::RademacherPair => {
                if rng.random::<bool>() {
                    FRAC_1_SQRT_2
                } else {
                    -FRAC_1_SQRT_2
                }
            }
            EntryDistribution::UniformSymmetric => rng.random_range(-UNIFORM_HALF_WIDTH..UNIFORM_HALF_WIDTH),
        }
    }

    #[inline]
    pub fn sample_complex<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let re = self.sample_part(rng);
        let im = self.sample_part(rng);
        Complex64::new(re, im)
    }
}

// Fraction of the square [-a, a]^2 inside the disc of radius r.
fn uniform_square_disc_fraction(r: f64, a: f64) -> f64 {
    if r <= a {
        return std::f64::consts::PI * r * r / (4.0 * a * a);
    }
    if r >= a * std::f64::consts::SQRT_2 {
        return 1.0;
    }
    // quarter square [0,a]^2: area under the circle clipped at x = a, y = a
    let x0 = (r * r - a * a).sqrt();
    let segment = |x: f64| 0.5 * (x * (r * r - x * x).sqrt() + r * r * (x / r).asin());
    let area = a * x0 + segment(a) - segment(x0);
    area / (a * a)
}

/// Whether entries are complex (the default) or real with unit variance.
///
/// Real ensembles are accepted for exploration; the theorem experiments
/// report them as exploratory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryField {
    #[default]
    Complex,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub distribution: EntryDistribution,
    #[serde(default)]
    pub field: EntryField,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn new(n: usize, distribution: EntryDistribution, master_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::SizeTooSmall { n, min: 1 });
        }
        Ok(Self {
            n,
            distribution,
            field: EntryField::Complex,
            master_seed,
        })
    }

    pub fn with_field(mut self, field: EntryField) -> Self {
        self.field = field;
        self
    }

    fn entry<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self.field {
            EntryField::Complex => self.distribution.sample_complex(rng),
            EntryField::Real => Complex64::new(std::f64::consts::SQRT_2 * self.distribution.sample_part(rng), 0.0),
        }
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialId {
    pub spec: EnsembleSpec,
    pub trial_index: u64,
}

impl std::fmt::Display for TrialId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "N={} {} seed={} trial={}",
            self.spec.n,
            self.spec.distribution.name(),
            self.spec.master_seed,
            self.trial_index
        )
    }
}

/// One realization of `X_N`, entries already scaled by `1/sqrt(N)`.
#[derive(Debug, Clone)]
pub struct MatrixSample {
    entries: Mat<Complex64>,
    origin: Option<TrialId>,
}

pub fn sample_matrix(spec: &EnsembleSpec, trial_index: u64) -> MatrixSample {
    let n = spec.n;
    let mut rng = stream(derive_trial_seed(spec.master_seed, trial_index));
    let scale = 1.0 / (n as f64).sqrt();
    let mut entries = Mat::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            entries[(i, j)] = spec.entry(&mut rng) * scale;
        }
    }
    let sample = MatrixSample {
        entries,
        origin: Some(TrialId {
            spec: *spec,
            trial_index,
        }),
    };
    let moments = sample.entry_moments();
    if !moments.within_tolerance {
        if n >= 64 {
            log::warn!(
                "entry moments out of tolerance for {}: {moments:?}",
                sample.origin.unwrap()
            );
        } else {
            log::debug!("entry moments out of tolerance at small N={n}: {moments:?}");
        }
    }
    sample
}

/// Empirical moments of the unscaled entries `x_ij = sqrt(N) (X_N)_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryMoments {
    pub mean: Complex64,
    pub second_moment: f64,
    /// `|mean| <= 5/sqrt(2 N^2)` and `|second_moment - 1| <= 10/sqrt(N^2)`.
    pub within_tolerance: bool,
}

impl MatrixSample {
    /// Wraps an explicit matrix (already scaled). Used to inject structured
    /// matrices in tests and to reload dumps.
    pub fn from_entries(entries: Mat<Complex64>) -> Result<Self> {
        Self::with_origin(entries, None)
    }

    fn with_origin(entries: Mat<Complex64>, origin: Option<TrialId>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::invalid(
                "entries",
                format!("matrix must be square, got {}x{}", entries.nrows(), entries.ncols()),
            ));
        }
        if entries.nrows() == 0 {
            return Err(Error::SizeTooSmall { n: 0, min: 1 });
        }
        for j in 0..entries.ncols() {
            for i in 0..entries.nrows() {
                let z = entries[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite {
                        name: "entry",
                        value: if z.re.is_finite() { z.im } else { z.re },
                    });
                }
            }
        }
        Ok(Self { entries, origin })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn entries(&self) -> MatRef<'_, Complex64> {
        self.entries.as_ref()
    }

    pub fn origin(&self) -> Option<&TrialId> {
        self.origin.as_ref()
    }

    pub(crate) fn describe(&self) -> String {
        match &self.origin {
            Some(id) => id.to_string(),
            None => format!("injected N={}", self.n()),
        }
    }

    fn check_column(&self, k: usize) -> Result<()> {
        if k >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.n(),
            });
        }
        Ok(())
    }

    /// Column `k` (zero-based) of `X_N`, i.e. `w_k = x_k / sqrt(N)`.
    pub fn column_vector(&self, k: usize) -> Result<Col<Complex64>> {
        self.check_column(k)?;
        Ok(self.entries.col(k).to_owned())
    }

    /// Unscaled column `x_k = sqrt(N) w_k`.
    pub fn scaled_column(&self, k: usize) -> Result<Col<Complex64>> {
        self.check_column(k)?;
        let root = (self.n() as f64).sqrt();
        Ok(Col::from_fn(self.n(), |i| self.entries[(i, k)] * root))
    }

    /// `W_k`: the `N x (N-1)` matrix with column `k` removed. `W_k^* W_k` is
    /// the minor of `X^* X` without row and column `k`.
    pub fn remove_column(&self, k: usize) -> Result<Mat<Complex64>> {
        self.check_column(k)?;
        let n = self.n();
        Ok(Mat::from_fn(n, n - 1, |i, j| {
            let src = if j < k { j } else { j + 1 };
            self.entries[(i, src)]
        }))
    }

    pub fn entry_moments(&self) -> EntryMoments {
        let n = self.n();
        let count = (n * n) as f64;
        let root = (n as f64).sqrt();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sq = 0.0;
        for j in 0..n {
            for i in 0..n {
                let x = self.entries[(i, j)] * root;
                sum += x;
                sq += x.norm_sqr();
            }
        }
        let mean = sum / count;
        let second_moment = sq / count;
        let within_tolerance =
            mean.norm() <= 5.0 / (2.0 * count).sqrt() && (second_moment - 1.0).abs() <= 10.0 / count.sqrt();
        EntryMoments {
            mean,
            second_moment,
            within_tolerance,
        }
    }
}

// --- binary dump ---------------------------------------------------------
//
// Little-endian layout:
//   u64 N
//   u64 kind      (0 complex-gaussian, 1 rademacher-pair, 2 uniform-symmetric;
//                  +0x100 for real entries; 0xFFFF for injected matrices)
//   u64 master_seed
//   u64 trial_index
//   N*N pairs of f64 (re, im), row-major

pub const INJECTED_KIND: u64 = 0xFFFF;
const REAL_FLAG: u64 = 0x100;

fn kind_code(origin: Option<&TrialId>) -> u64 {
    match origin {
        None => INJECTED_KIND,
        Some(id) => {
            let base = match id.spec.distribution {
                EntryDistribution::ComplexGaussian => 0,
                EntryDistribution::RademacherPair => 1,
                EntryDistribution::UniformSymmetric => 2,
            };
            match id.spec.field {
                EntryField::Complex => base,
                EntryField::Real => base | REAL_FLAG,
            }
        }
    }
}

fn decode_kind(code: u64) -> Result<Option<(EntryDistribution, EntryField)>> {
    if code == INJECTED_KIND {
        return Ok(None);
    }
    let field = if code & REAL_FLAG != 0 {
        EntryField::Real
    } else {
        EntryField::Complex
    };
    let dist = match code & !REAL_FLAG {
        0 => EntryDistribution::ComplexGaussian,
        1 => EntryDistribution::RademacherPair,
        2 => EntryDistribution::UniformSymmetric,
        other => return Err(Error::MalformedDump(format!("unknown kind code {other:#x}"))),
    };
    Ok(Some((dist, field)))
}

pub fn write_dump<W: Write>(sample: &MatrixSample, mut out: W) -> std::io::Result<()> {
    let n = sample.n();
    let (seed, trial) = sample
        .origin
        .map(|id| (id.spec.master_seed, id.trial_index))
        .unwrap_or((0, 0));
    for word in [n as u64, kind_code(sample.origin.as_ref()), seed, trial] {
        out.write_all(&word.to_le_bytes())?;
    }
    let mut row = Vec::with_capacity(16 * n);
    for i in 0..n {
        row.clear();
        for j in 0..n {
            let z = sample.entries[(i, j)];
            row.extend_from_slice(&z.re.to_le_bytes());
            row.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&row)?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut input: R) -> Result<MatrixSample> {
    let mut word = [0u8; 8];
    let mut header = [0u64; 4];
    for slot in header.iter_mut() {
        input
            .read_exact(&mut word)
            .map_err(|e| Error::MalformedDump(format!("truncated header: {e}")))?;
        *slot = u64::from_le_bytes(word);
    }
    let [n, kind, seed, trial] = header;
    let n = usize::try_from(n).map_err(|_| Error::MalformedDump(format!("N = {n} too large")))?;
    if n == 0 || n > 1 << 16 {
        return Err(Error::MalformedDump(format!("implausible N = {n}")));
    }
    let origin = decode_kind(kind)?.map(|(distribution, field)| TrialId {
        spec: EnsembleSpec {
            n,
            distribution,
            field,
            master_seed: seed,
        },
        trial_index: trial,
    });
    let mut buf = vec![0u8; 16 * n * n];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::MalformedDump(format!("truncated payload: {e}")))?;
    let f = |off: usize| f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
    let entries = Mat::from_fn(n, n, |i, j| {
        let off = 16 * (i * n + j);
        Complex64::new(f(off), f(off + 8))
    });
    MatrixSample::with_origin(entries, origin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, d: EntryDistribution) -> EnsembleSpec {
        EnsembleSpec::new(n, d, 0xDEC0DE).unwrap()
    }

    #[test]
    fn seeds_are_pure() {
        assert_eq!(derive_trial_seed(42, 7), derive_trial_seed(42, 7));
        assert_ne!(derive_trial_seed(42, 7), derive_trial_seed(43, 7));
    }

    #[test]
    fn seed_scan_has_no_collisions() {
        // exhaustive oracle over 10^6 consecutive trials
        let master = 0x5EED;
        let mut seeds: Vec<u64> = (0..1_000_000u64).map(|i| derive_trial_seed(master, i)).collect();
        assert!(seeds.windows(2).all(|w| w[0] != w[1]));
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 1_000_000);
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs of SplitMix64 seeded with 0 (reference implementation)
        assert_eq!(derive_trial_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_trial_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = spec(12, EntryDistribution::UniformSymmetric);
        let a = sample_matrix(&s, 3);
        let b = sample_matrix(&s, 3);
        let c = sample_matrix(&s, 4);
        assert!(a.entries() == b.entries());
        assert!(a.entries() != c.entries());
    }

    #[test]
    fn parallel_order_does_not_matter() {
        use rayon::prelude::*;
        let s = spec(8, EntryDistribution::ComplexGaussian);
        let serial: Vec<_> = (0..16).map(|t| sample_matrix(&s, t)).collect();
        let parallel: Vec<_> = (0..16u64)
            .rev()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|t| sample_matrix(&s, t))
            .collect();
        for (a, b) in serial.iter().zip(parallel.iter().rev()) {
            assert!(a.entries() == b.entries());
        }
    }

    #[test]
    fn rademacher_scalar_has_unit_modulus() {
        let m = sample_matrix(&spec(1, EntryDistribution::RademacherPair), 0);
        assert!((m.entries()[(0, 0)].norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_statistic_near_one() {
        for d in EntryDistribution::ALL {
            let m = sample_matrix(&spec(256, d), 1);
            let tr: f64 = (0..256)
                .flat_map(|j| (0..256).map(move |i| (i, j)))
                .map(|(i, j)| m.entries()[(i, j)].norm_sqr())
                .sum::<f64>()
                / 256.0;
            assert!((tr - 1.0).abs() < 0.2, "{d:?}: {tr}");
            assert!(m.entry_moments().within_tolerance, "{d:?}");
        }
    }

    #[test]
    fn column_norms() {
        let m = sample_matrix(&spec(256, EntryDistribution::ComplexGaussian), 2);
        for k in [0, 17, 255] {
            let x = m.scaled_column(k).unwrap();
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / 256.0;
            assert!((norm - 1.0).abs() < 0.3);
        }
    }

    #[test]
    fn remove_column_small() {
        let e = Mat::from_fn(2, 2, |i, j| Complex64::new((i * 2 + j) as f64, 1.0));
        let m = MatrixSample::from_entries(e).unwrap();
        let w = m.remove_column(0).unwrap();
        assert_eq!(w.ncols(), 1);
        assert_eq!(w[(0, 0)], m.entries()[(0, 1)]);
        assert_eq!(w[(1, 0)], m.entries()[(1, 1)]);
        assert!(matches!(m.remove_column(2), Err(Error::IndexOutOfRange { .. })));
        assert!(m.column_vector(5).is_err());
        assert!(m.scaled_column(2).is_err());
    }

    #[test]
    fn remove_column_gives_gram_minor() {
        let m = sample_matrix(&spec(8, EntryDistribution::ComplexGaussian), 9);
        let x = m.entries();
        let gram = x.adjoint() * x;
        for k in 0..8 {
            let w = m.remove_column(k).unwrap();
            let minor = w.adjoint() * &w;
            for i in 0..7 {
                for j in 0..7 {
                    let gi = if i < k { i } else { i + 1 };
                    let gj = if j < k { j } else { j + 1 };
                    assert!((minor[(i, j)] - gram[(gi, gj)]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn columns_partition_matrix() {
        let m = sample_matrix(&spec(5, EntryDistribution::RademacherPair), 0);
        for k in 0..5 {
            let w = m.remove_column(k).unwrap();
            let col = m.column_vector(k).unwrap();
            for i in 0..5 {
                assert_eq!(col[i], m.entries()[(i, k)]);
                for j in 0..4 {
                    let src = if j < k { j } else { j + 1 };
                    assert_eq!(w[(i, j)], m.entries()[(i, src)]);
                }
            }
        }
        let one = sample_matrix(&spec(1, EntryDistribution::ComplexGaussian), 0);
        assert_eq!(one.column_vector(0).unwrap()[0], one.entries()[(0, 0)]);
    }

    #[test]
    fn part_laws_have_declared_moments() {
        let mut rng = stream(11);
        for d in EntryDistribution::ALL {
            let xs: Vec<f64> = (0..10_000).map(|_| d.sample_part(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / 1e4;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 1e4;
            let skew = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / 1e4 / var.powf(1.5);
            assert!(mean.abs() < 0.03, "{d:?} mean {mean}");
            assert!((var - 0.5).abs() < 0.03, "{d:?} var {var}");
            assert!(skew.abs() <= 0.1, "{d:?} skew {skew}");
        }
    }

    #[test]
    fn modulus_cdf_of_uniform_parts() {
        let d = EntryDistribution::UniformSymmetric;
        assert!((d.modulus_sq_cdf(0.5) - std::f64::consts::PI / 12.0).abs() < 1e-15);
        assert_eq!(d.modulus_sq_cdf(3.0 + 1e-9), 1.0);
        let mut rng = stream(5);
        let t = 2.0;
        let hits = (0..200_000)
            .filter(|_| d.sample_complex(&mut rng).norm_sqr() <= t)
            .count();
        assert!((hits as f64 / 2e5 - d.modulus_sq_cdf(t)).abs() < 0.005);
    }

    #[test]
    fn real_field_has_unit_variance() {
        let s = spec(128, EntryDistribution::UniformSymmetric).with_field(EntryField::Real);
        let m = sample_matrix(&s, 0);
        assert!(m.entries()[(3, 4)].im == 0.0);
        let mom = m.entry_moments();
        assert!((mom.second_moment - 1.0).abs() < 0.05);
    }

    #[test]
    fn dump_round_trip() {
        let s = spec(6, EntryDistribution::UniformSymmetric).with_field(EntryField::Real);
        let m = sample_matrix(&s, 77);
        let mut buf = Vec::new();
        write_dump(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 16 * 36);
        assert_eq!(&buf[0..8], &6u64.to_le_bytes());
        assert_eq!(&buf[8..16], &0x102u64.to_le_bytes());
        let back = read_dump(&buf[..]).unwrap();
        assert!(back.entries() == m.entries());
        assert_eq!(back.origin(), m.origin());
        assert!(read_dump(&buf[..40]).is_err());
    }

    #[test]
    fn spec_rejects_empty() {
        assert!(EnsembleSpec::new(0, EntryDistribution::ComplexGaussian, 0).is_err());
        assert!(MatrixSample::from_entries(Mat::zeros(2, 3)).is_err());
    }
}
