//! Calibrated Monte Carlo checks at N=512, sharing one batch of samples.

use std::sync::OnceLock;

use hardedge::analytic::{mp_stieltjes, SpectralPoint, Window};
use hardedge::ensemble::{sample_matrix, EnsembleSpec, EntryDistribution};
use hardedge::resolvent::{empirical_stieltjes, self_consistency_residual, trace_kernel_norm};
use hardedge::spectral::{minor_spectrum, spectrum, Spectrum};
use hardedge::stats::{median, Proportion};
use rayon::prelude::*;

const N: usize = 512;
const TRIALS: u64 = 500;

struct Trial {
    spectrum: Spectrum,
    minor: Spectrum,
}

fn batch() -> &'static [Trial] {
    static BATCH: OnceLock<Vec<Trial>> = OnceLock::new();
    BATCH.get_or_init(|| {
        let spec = EnsembleSpec::new(N, EntryDistribution::ComplexGaussian, 4242).unwrap();
        (0..TRIALS)
            .into_par_iter()
            .map(|t| {
                let m = sample_matrix(&spec, t);
                Trial {
                    spectrum: spectrum(&m).unwrap(),
                    minor: minor_spectrum(&m, t as usize % N).unwrap(),
                }
            })
            .collect()
    })
}

#[test]
fn stieltjes_close_to_limit_at_small_eta() {
    let p = SpectralPoint::new(2.0, 0.05).unwrap();
    let limit = mp_stieltjes(&p);
    let within = Proportion::from_flags(
        batch()[..100]
            .iter()
            .map(|t| (empirical_stieltjes(&t.spectrum, &p) - limit).norm() * 2f64.sqrt() < 0.1),
    );
    assert!(within.estimate >= 0.9, "{within:?}");
}

#[test]
fn self_consistency_residual_is_small() {
    let p = SpectralPoint::new(2.0, 0.1).unwrap();
    let residuals: Vec<f64> = batch()[..100]
        .iter()
        .map(|t| self_consistency_residual(empirical_stieltjes(&t.spectrum, &p), &p).unwrap())
        .collect();
    assert!(median(&residuals) < 0.05, "median {}", median(&residuals));
}

#[test]
fn kernel_norm_within_calibrated_constant() {
    let p = SpectralPoint::new(2.0, 0.1).unwrap();
    let within = Proportion::from_flags(
        batch()
            .iter()
            .map(|t| trace_kernel_norm(t.minor.values(), N, &p, 1.0).unwrap().normalized(N) <= 8.0),
    );
    assert!(within.estimate >= 0.99, "{within:?}");
}

#[test]
fn window_count_rarely_exceeds_k_scale() {
    let (e, scale, k) = (2.0f64, 50.0, 4.0);
    let eta = scale * e.sqrt() / N as f64;
    let w = Window::new(e, eta).unwrap();
    let exceed = Proportion::from_flags(
        batch()
            .iter()
            .map(|t| t.spectrum.count_in_window(&w).count as f64 >= k * scale),
    );
    assert!(exceed.estimate < 0.01, "{exceed:?}");
}
