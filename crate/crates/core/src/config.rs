//! Experiment configuration: a JSON document with defaults for everything
//! except `sizes`, `trials` and `seed`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{EntryDistribution, EntryField};
use crate::error::{Error, Result};

pub const MIN_TRIALS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    /// Trials per size.
    pub trials: usize,
    /// Master seed; every trial seed is derived from it.
    pub seed: u64,
    #[serde(default)]
    pub distribution: EntryDistribution,
    #[serde(default)]
    pub field: EntryField,
    /// Log-power in the window scale `(log N)^b`. Recorded, and used for the
    /// lower spectral edge of the delocalization window.
    #[serde(default = "default_b")]
    pub b: f64,
    /// Distance kept from the soft edge `4`.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Smallest admissible window scale `N eta / sqrt(E)`.
    #[serde(default = "default_scale_min")]
    pub scale_min: f64,
    #[serde(default = "default_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(rename = "K_grid", default = "default_k_grid")]
    pub k_grid: Vec<f64>,
    #[serde(rename = "L_grid", default = "default_l_grid")]
    pub l_grid: Vec<usize>,
    /// Window energies. Absent: a geometric sweep from the hard-edge scale
    /// `(ln N)^{2b} / (kappa^2 N^2)` to `4 - kappa`.
    #[serde(default)]
    pub energies: Option<Vec<f64>>,
    /// Fixed `eta`. Absent: `eta = scale_min sqrt(E) / N` per size.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Number of energies in the derived sweep.
    #[serde(default = "default_sweep_points")]
    pub sweep_points: usize,
    /// Worker threads; results do not depend on it. Absent: all cores.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Quadratic-form deltas in units of `sqrt(Tr A^* A)`.
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    /// Orthonormal family sizes for the projection-mass probe.
    #[serde(default = "default_m_grid")]
    pub m_grid: Vec<usize>,
    /// Ambient dimension for the projection-mass probe.
    #[serde(default = "default_projection_dim")]
    pub projection_dim: usize,
    /// Also evaluate the per-column error terms in the local-law run (needs
    /// eigenvectors, so it is slower).
    #[serde(default)]
    pub error_terms: bool,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_b() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    0.1
}
fn default_scale_min() -> f64 {
    50.0
}
fn default_epsilon_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.15, 0.3]
}
fn default_k_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_l_grid() -> Vec<usize> {
    vec![1, 2, 3, 4, 5]
}
fn default_sweep_points() -> usize {
    5
}
fn default_delta_grid() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0]
}
fn default_m_grid() -> Vec<usize> {
    vec![2, 4, 8, 16]
}
fn default_projection_dim() -> usize {
    16
}

/// Pass/fail thresholds. The theorems leave their constants unspecified;
/// each default below was calibrated by Monte Carlo at the sizes noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Largest allowed `P(N_I >= K N eta / sqrt E)` at the largest `K`
    /// (N = 512, scale 50: observed 0).
    pub apriori_tail: f64,
    /// `epsilon` for the local-law pass check (N = 512, theta = 2 + 0.1i:
    /// typical error 0.03).
    pub local_law_epsilon: f64,
    /// Largest allowed exceedance at `local_law_epsilon`.
    pub local_law_exceedance: f64,
    /// Bound on `max_alpha N |u_alpha|_inf^2 / ln N` (N = 1024: typical 3).
    pub deloc_c2: f64,
    /// Required fraction of trials within `deloc_c2`.
    pub deloc_fraction: f64,
    /// Largest allowed slope of `ln median(max N |u|_inf^2)` against
    /// `ln ln N`; growth like `ln N` gives about 1.
    pub deloc_growth_slope: f64,
    /// Allowed ratio between largest and smallest median of `N^2 s_1`.
    pub hard_edge_factor: f64,
    /// Bounds on the mean bulk gap at `E = 2` in units of `1 / (N rho(2))`.
    pub spacing_range: [f64; 2],
    /// Smallest allowed growth exponent of `-ln P` in `sqrt(m)`.
    pub projection_exponent: f64,
    pub leave_one_out_tol: f64,
    pub eigenvector_identity_tol: f64,
    pub identity_coverage: f64,
    /// Interlacing slack relative to the largest eigenvalue.
    pub interlacing_tol: f64,
    pub gap_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            apriori_tail: 0.01,
            local_law_epsilon: 0.15,
            local_law_exceedance: 0.05,
            deloc_c2: 15.0,
            deloc_fraction: 0.99,
            deloc_growth_slope: 1.5,
            hard_edge_factor: 2.0,
            spacing_range: [0.5, 2.0],
            projection_exponent: 1.0,
            leave_one_out_tol: 1e-9,
            eigenvector_identity_tol: 1e-8,
            identity_coverage: 0.95,
            interlacing_tol: 1e-10,
            gap_tol: crate::spectral::DEFAULT_GAP_TOL,
        }
    }
}

fn config_error(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_owned(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// A configuration with every optional field at its default.
    pub fn new(sizes: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            sizes,
            trials,
            seed,
            distribution: EntryDistribution::default(),
            field: EntryField::default(),
            b: default_b(),
            kappa: default_kappa(),
            scale_min: default_scale_min(),
            epsilon_grid: default_epsilon_grid(),
            k_grid: default_k_grid(),
            l_grid: default_l_grid(),
            energies: None,
            eta: None,
            sweep_points: default_sweep_points(),
            threads: None,
            delta_grid: default_delta_grid(),
            m_grid: default_m_grid(),
            projection_dim: default_projection_dim(),
            error_terms: false,
            thresholds: Thresholds::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(config_error("sizes", "at least one size is required"));
        }
        if let Some(i) = self.sizes.iter().position(|&n| n < 2) {
            return Err(config_error(&format!("sizes[{i}]"), "sizes must be at least 2"));
        }
        if self.trials < MIN_TRIALS {
            return Err(config_error(
                "trials",
                format!("at least {MIN_TRIALS} trials are required"),
            ));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(config_error("kappa", "must lie in (0, 1)"));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(config_error("b", "must be positive"));
        }
        if !(self.scale_min > 0.0) || !self.scale_min.is_finite() {
            return Err(config_error("scale_min", "must be positive"));
        }
        positive_grid("epsilon_grid", &self.epsilon_grid)?;
        positive_grid("K_grid", &self.k_grid)?;
        if self.l_grid.is_empty() || self.l_grid.contains(&0) {
            return Err(config_error("L_grid", "must be nonempty with entries >= 1"));
        }
        if let Some(energies) = &self.energies {
            positive_grid("energies", energies)?;
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(config_error("eta", "must be positive"));
            }
        }
        if self.sweep_points == 0 {
            return Err(config_error("sweep_points", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads", "must be positive"));
        }
        if self.delta_grid.is_empty() || self.delta_grid.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(config_error("delta_grid", "must be nonempty, finite and nonnegative"));
        }
        if self.projection_dim == 0 {
            return Err(config_error("projection_dim", "must be positive"));
        }
        if self.m_grid.is_empty() || self.m_grid.iter().any(|&m| m == 0 || m > self.projection_dim) {
            return Err(config_error("m_grid", "entries must lie in 1..=projection_dim"));
        }
        Ok(())
    }

    /// Window energies at size `n`.
    pub fn energies_for(&self, n: usize) -> Vec<f64> {
        if let Some(e) = &self.energies {
            return e.clone();
        }
        let lo = self.hard_edge_lower(n);
        let hi = 4.0 - self.kappa;
        let k = self.sweep_points;
        if k == 1 {
            return vec![hi];
        }
        (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
    }

    /// `eta` at size `n` and energy `E`.
    pub fn eta_for(&self, n: usize, energy: f64) -> f64 {
        self.eta.unwrap_or_else(|| self.scale_min * energy.sqrt() / n as f64)
    }

    /// `(ln N)^{2b} / (kappa^2 N^2)`.
    pub fn hard_edge_lower(&self, n: usize) -> f64 {
        let nf = n as f64;
        nf.ln().powf(2.0 * self.b) / (self.kappa * self.kappa * nf * nf)
    }

    /// `(ln N)^b / (kappa^2 N^2)`, the alternative lower edge.
    pub fn hard_edge_lower_linear(&self, n: usize) -> f64 {
        let nf = n as f64;
        nf.ln().powf(self.b) / (self.kappa * self.kappa * nf * nf)
    }
}

fn positive_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(config_error(name, "must be nonempty"));
    }
    if let Some(i) = grid.iter().position(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(config_error(
            &format!("{name}[{i}]"),
            "entries must be positive and finite",
        ));
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"sizes": [128], "trials": 50, "seed": 1}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::new(vec![128], 50, 1));
        assert_eq!(cfg.kappa, 0.1);
        assert_eq!(cfg.distribution, EntryDistribution::ComplexGaussian);
    }

    #[test]
    fn kappa_out_of_range_is_named() {
        let err =
            ExperimentConfig::from_json(r#"{"sizes": [128], "trials": 50, "seed": 1, "kappa": 1.5}"#).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "kappa"), "{err}");
    }

    #[test]
    fn unknown_and_mistyped_fields_carry_paths() {
        let err = ExperimentConfig::from_json(r#"{"sizes": [128], "trials": 50, "seed": 1, "sigma": 2}"#).unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"sizes": [128, "x"], "trials": 50, "seed": 1}"#).unwrap_err();
        assert!(
            matches!(&err, Error::Config { path, .. } if path == "sizes[1]"),
            "{err}"
        );
        let err =
            ExperimentConfig::from_json(r#"{"sizes": [8], "trials": 50, "seed": 1, "thresholds": {"deloc_c2": "a"}}"#)
                .unwrap_err();
        assert!(
            matches!(&err, Error::Config { path, .. } if path == "thresholds.deloc_c2"),
            "{err}"
        );
    }

    #[test]
    fn validation() {
        let bad = [
            r#"{"sizes": [], "trials": 50, "seed": 1}"#,
            r#"{"sizes": [8], "trials": 29, "seed": 1}"#,
            r#"{"sizes": [8], "trials": 50, "seed": 1, "b": 0}"#,
            r#"{"sizes": [8], "trials": 50, "seed": 1, "K_grid": [1, -1]}"#,
            r#"{"sizes": [8], "trials": 50, "seed": 1, "m_grid": [32]}"#,
            r#"{"sizes": [8], "trials": 50, "seed": 1, "threads": 0}"#,
        ];
        for text in bad {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::new(vec![16, 32], 40, 9);
        cfg.energies = Some(vec![0.5, 2.0]);
        cfg.distribution = EntryDistribution::UniformSymmetric;
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.to_json(), cfg.to_json());
    }

    #[test]
    fn derived_sweep_spans_hard_edge_to_bulk() {
        let cfg = ExperimentConfig::new(vec![512], 50, 1);
        let e = cfg.energies_for(512);
        assert_eq!(e.len(), 5);
        assert!((e[0] - cfg.hard_edge_lower(512)).abs() < 1e-15);
        assert!((e[4] - 3.9).abs() < 1e-12);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert!((cfg.eta_for(512, 2.0) * 512.0 / 2f64.sqrt() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_config(Path::new("/nonexistent/cfg.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/cfg.json"));
    }
}
