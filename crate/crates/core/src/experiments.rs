//! Monte Carlo harnesses. Each runner samples `trials` matrices per size,
//! evaluates one family of events, and returns a [`TheoremReport`] with
//! the empirical probabilities, summaries and pass/fail checks.
//!
//! Trials run on a rayon pool of `threads` workers. Every trial draws from
//! its own seeded stream and results are gathered in trial order, so reports
//! are identical for every thread count.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{mp_density, mp_stieltjes, mp_window_mass, SpectralPoint, Window};
use crate::concentration::{haar_frame, hw_tail_curve, projection_mass_probe, OrthonormalFamily, QuadraticForm};
use crate::config::ExperimentConfig;
use crate::ensemble::{sample_matrix, splitmix64_mix, stream, EnsembleSpec, EntryField, MatrixSample};
use crate::error::{Error, Result};
use crate::resolvent::{
    empirical_stieltjes, omega_terms, self_consistency_residual, trace_kernel_norm, ResolventDiagonal,
    TRACE_SHIFT_CONSTANT,
};
use crate::spectral::{
    decompose, eigenvector_identity_column, interlacing_violation, minor_spectrum, spectrum, Spectrum,
};
use crate::stats::{linear_fit, median_interval, Proportion, Summary};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The experiments, by CLI name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Apriori,
    LocalLaw,
    Deloc,
    Wegner,
    HardEdge,
    Hw,
    ProjMass,
    Identities,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Apriori,
        ExperimentKind::LocalLaw,
        ExperimentKind::Deloc,
        ExperimentKind::Wegner,
        ExperimentKind::HardEdge,
        ExperimentKind::Hw,
        ExperimentKind::ProjMass,
        ExperimentKind::Identities,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Apriori => "apriori",
            ExperimentKind::LocalLaw => "locallaw",
            ExperimentKind::Deloc => "deloc",
            ExperimentKind::Wegner => "wegner",
            ExperimentKind::HardEdge => "hardedge",
            ExperimentKind::Hw => "hw",
            ExperimentKind::ProjMass => "projmass",
            ExperimentKind::Identities => "identities",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One grid point of a sweep: the configuration values in `keys` (aligned
/// with [`Sweep::columns`]), the statistic and its 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub keys: Vec<f64>,
    pub statistic: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub name: String,
    /// What `statistic` measures.
    pub statistic: String,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    fn new(name: &str, statistic: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            statistic: statistic.to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    fn push_proportion(&mut self, keys: Vec<f64>, p: &Proportion) {
        debug_assert_eq!(keys.len(), self.columns.len());
        self.rows.push(SweepRow {
            keys,
            statistic: p.estimate,
            ci_lo: p.ci_lo,
            ci_hi: p.ci_hi,
            trials: p.trials,
        });
    }

    fn push_median(&mut self, keys: Vec<f64>, values: &[f64]) {
        debug_assert_eq!(keys.len(), self.columns.len());
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (ci_lo, ci_hi) = median_interval(&sorted);
        self.rows.push(SweepRow {
            keys,
            statistic: Summary::of(values).median,
            ci_lo,
            ci_hi,
            trials: values.len() as u64,
        });
    }

    /// Row whose keys match `keys` exactly.
    pub fn find(&self, keys: &[f64]) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.keys == keys)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSummary {
    pub name: String,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub id: ExperimentKind,
    pub title: String,
    /// Real-field runs are outside the complex setting the checks target.
    pub exploratory: bool,
    pub provenance: Provenance,
    pub sweeps: Vec<Sweep>,
    pub summaries: Vec<NamedSummary>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl TheoremReport {
    fn new(id: ExperimentKind, title: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            id,
            title: title.to_owned(),
            exploratory: cfg.field == EntryField::Real,
            provenance: Provenance {
                tool_version: TOOL_VERSION.to_owned(),
                seed: cfg.seed,
                config: cfg.clone(),
            },
            sweeps: Vec::new(),
            summaries: Vec::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    fn summarize(&mut self, name: String, values: &[f64]) {
        if !values.is_empty() {
            self.summaries.push(NamedSummary {
                name,
                summary: Summary::of(values),
            });
        }
    }

    fn check(&mut self, name: String, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(Check {
            name,
            passed,
            value,
            threshold,
            detail: detail.into(),
        });
    }

    pub fn sweep(&self, name: &str) -> Option<&Sweep> {
        self.sweeps.iter().find(|s| s.name == name)
    }

    pub fn summary(&self, name: &str) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.name == name).map(|s| &s.summary)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs `f` on a pool with `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::invalid("threads", e.to_string()))?;
    Ok(pool.install(f))
}

pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<TheoremReport> {
    match kind {
        ExperimentKind::Apriori => run_apriori(cfg),
        ExperimentKind::LocalLaw => run_local_law(cfg),
        ExperimentKind::Deloc => run_delocalization(cfg),
        ExperimentKind::Wegner => run_wegner(cfg),
        ExperimentKind::HardEdge => run_hard_edge_scaling(cfg),
        ExperimentKind::Hw => run_hw(cfg),
        ExperimentKind::ProjMass => run_projection_mass(cfg),
        ExperimentKind::Identities => run_identities(cfg),
    }
}

/// Default configuration per experiment, sized to finish in minutes on one
/// core.
pub fn desk_config(kind: ExperimentKind, seed: u64) -> ExperimentConfig {
    use ExperimentKind::*;
    let mut cfg = match kind {
        Apriori => ExperimentConfig::new(vec![128, 256], 200, seed),
        LocalLaw => {
            let mut c = ExperimentConfig::new(vec![128, 512], 200, seed);
            c.energies = Some(vec![2.0]);
            c.eta = Some(0.1);
            c.scale_min = 5.0;
            c
        }
        Deloc => ExperimentConfig::new(vec![128, 512, 1024], 50, seed),
        Wegner => {
            let mut c = ExperimentConfig::new(vec![256], 2000, seed);
            c.k_grid = vec![1.0];
            c
        }
        HardEdge => ExperimentConfig::new(vec![128, 256, 512], 200, seed),
        Hw => ExperimentConfig::new(vec![64], 10_000, seed),
        ProjMass => ExperimentConfig::new(vec![16], 200_000, seed),
        Identities => ExperimentConfig::new(vec![16, 32], 30, seed),
    };
    cfg.threads = None;
    cfg
}

/// Per-size master seed, so sizes do not share sample streams.
pub fn size_seed(seed: u64, n: usize) -> u64 {
    splitmix64_mix(seed ^ splitmix64_mix(n as u64))
}

pub fn ensemble_for(cfg: &ExperimentConfig, n: usize) -> Result<EnsembleSpec> {
    Ok(EnsembleSpec::new(n, cfg.distribution, size_seed(cfg.seed, n))?.with_field(cfg.field))
}

fn per_trial<T, F>(cfg: &ExperimentConfig, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&MatrixSample) -> Result<T> + Sync,
{
    let spec = ensemble_for(cfg, n)?;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| f(&sample_matrix(&spec, t)))
        .collect()
}

fn spectra(cfg: &ExperimentConfig, n: usize) -> Result<Vec<Spectrum>> {
    per_trial(cfg, n, spectrum)
}

fn require_bounded_density(cfg: &ExperimentConfig) -> Result<()> {
    if !cfg.distribution.has_bounded_density() {
        return Err(Error::Config {
            path: "distribution".into(),
            reason: format!(
                "{} has no bounded density; this experiment needs one",
                cfg.distribution.name()
            ),
        });
    }
    Ok(())
}

/// `(E, eta)` pairs at size `n`, each checked against `scale_min`.
fn windows_for(cfg: &ExperimentConfig, n: usize) -> Result<Vec<(f64, f64)>> {
    cfg.energies_for(n)
        .into_iter()
        .map(|e| {
            let eta = cfg.eta_for(n, e);
            let scale = n as f64 * eta / e.sqrt();
            if scale < cfg.scale_min * (1.0 - 1e-12) {
                return Err(Error::Config {
                    path: "eta".into(),
                    reason: format!(
                        "window at N={n}, E={e} has N eta / sqrt(E) = {scale:.4} below scale_min = {}",
                        cfg.scale_min
                    ),
                });
            }
            Ok((e, eta))
        })
        .collect()
}

fn is_nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

/// `P(N_I >= K N eta / sqrt E)` for windows `I = [E, E + eta]`.
pub fn run_apriori(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || apriori(cfg))?
}

fn apriori(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    let mut report = TheoremReport::new(ExperimentKind::Apriori, "eigenvalue count in a window", cfg);
    let mut sweep = Sweep::new(
        "count_exceedance",
        "P(N_I >= K N eta / sqrt(E))",
        &["N", "E", "eta", "scale", "K"],
    );
    let mut k_sorted = cfg.k_grid.clone();
    k_sorted.sort_by(f64::total_cmp);
    let k_max = k_sorted[k_sorted.len() - 1];
    for &n in &cfg.sizes {
        let windows = windows_for(cfg, n)?;
        let spectra = spectra(cfg, n)?;
        for &(e, eta) in &windows {
            let window = Window::new(e, eta)?;
            let scale = window.scale(n);
            let counts: Vec<f64> = spectra
                .iter()
                .map(|s| s.count_in_window(&window).count as f64)
                .collect();
            let mut probs = Vec::new();
            for &k in &k_sorted {
                let p = Proportion::from_flags(counts.iter().map(|&c| c >= k * scale));
                sweep.push_proportion(vec![n as f64, e, eta, scale, k], &p);
                probs.push(p.estimate);
            }
            report.check(
                format!("nested in K at N={n}, E={e:.6}"),
                is_nonincreasing(&probs),
                probs[probs.len() - 1],
                probs[0],
                "exceedance is nonincreasing along the K grid",
            );
            let tail = probs[probs.len() - 1];
            report.check(
                format!("tail at K={k_max} N={n}, E={e:.6}"),
                tail <= cfg.thresholds.apriori_tail,
                tail,
                cfg.thresholds.apriori_tail,
                "exceedance at the largest K",
            );
            let expected = n as f64 * mp_window_mass(&window);
            let ratio: Vec<f64> = counts.iter().map(|c| c / expected.max(f64::MIN_POSITIVE)).collect();
            report.summarize(format!("count/expected N={n} E={e:.6}"), &ratio);
        }
    }
    report.sweeps.push(sweep);
    Ok(report)
}

/// `P(sqrt(E) |Delta_N - Delta| >= eps)` and the counting form
/// `P(sqrt(E) |N_I / (N eta) - mass(I) / eta| >= eps)`.
pub fn run_local_law(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    require_bounded_density(cfg)?;
    with_threads(cfg.threads, || local_law(cfg))?
}

struct LocalLawTrial {
    stieltjes_error: Vec<f64>,
    density_error: Vec<f64>,
    residual: Vec<f64>,
    omega_max: Vec<f64>,
    trace_shift_ratio: Vec<f64>,
    kernel_normalized: Vec<f64>,
}

fn local_law(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    let mut report = TheoremReport::new(ExperimentKind::LocalLaw, "local Marchenko-Pastur law", cfg);
    let columns = ["N", "E", "eta", "scale", "epsilon"];
    let mut stj = Sweep::new(
        "stieltjes_exceedance",
        "P(sqrt(E) |Delta_N - Delta| >= epsilon)",
        &columns,
    );
    let mut dens = Sweep::new(
        "density_exceedance",
        "P(sqrt(E) |N_I/(N eta) - mass/eta| >= epsilon)",
        &columns,
    );
    let eps_star = cfg.thresholds.local_law_epsilon;
    let mut eps = cfg.epsilon_grid.clone();
    if !eps.contains(&eps_star) {
        eps.push(eps_star);
    }
    eps.sort_by(f64::total_cmp);

    // (E, eta) -> exceedance at eps_star per size, for the trend check
    let mut at_star: Vec<(usize, f64, f64, Proportion)> = Vec::new();
    for &n in &cfg.sizes {
        let windows = windows_for(cfg, n)?;
        let points: Vec<SpectralPoint> = windows
            .iter()
            .map(|&(e, eta)| SpectralPoint::new(e, eta))
            .collect::<Result<_>>()?;
        let trials = per_trial(cfg, n, |m| local_law_trial(cfg, m, &points))?;
        for (w, point) in points.iter().enumerate() {
            let (e, eta) = (point.energy(), point.eta());
            let window = Window::new(e, eta)?;
            let scale = window.scale(n);
            let se: Vec<f64> = trials.iter().map(|t| t.stieltjes_error[w]).collect();
            let de: Vec<f64> = trials.iter().map(|t| t.density_error[w]).collect();
            for &ep in &eps {
                let p = Proportion::from_flags(se.iter().map(|&x| x >= ep));
                stj.push_proportion(vec![n as f64, e, eta, scale, ep], &p);
                if ep == eps_star {
                    at_star.push((n, e, eta, p));
                }
                let p = Proportion::from_flags(de.iter().map(|&x| x >= ep));
                dens.push_proportion(vec![n as f64, e, eta, scale, ep], &p);
            }
            let star = at_star[at_star.len() - 1].3;
            report.check(
                format!("local law at N={n}, E={e:.6}, eta={eta:.6}"),
                star.estimate <= cfg.thresholds.local_law_exceedance,
                star.estimate,
                cfg.thresholds.local_law_exceedance,
                format!("exceedance at epsilon={eps_star}"),
            );
            report.summarize(format!("stieltjes error N={n} E={e:.6}"), &se);
            let residual: Vec<f64> = trials.iter().map(|t| t.residual[w]).collect();
            report.summarize(format!("self-consistency residual N={n} E={e:.6}"), &residual);
            if cfg.error_terms {
                let om: Vec<f64> = trials.iter().map(|t| t.omega_max[w]).collect();
                report.summarize(format!("max |Omega_k| N={n} E={e:.6}"), &om);
                let ts: Vec<f64> = trials.iter().map(|t| t.trace_shift_ratio[w]).collect();
                let worst = ts.iter().copied().fold(0.0, f64::max);
                report.check(
                    format!("trace shift bound N={n} E={e:.6}"),
                    worst <= TRACE_SHIFT_CONSTANT,
                    worst,
                    TRACE_SHIFT_CONSTANT,
                    "max_k |trace shift| N eta / sqrt(E)",
                );
                let kn: Vec<f64> = trials.iter().map(|t| t.kernel_normalized[w]).collect();
                report.summarize(format!("Tr A*A N eta / sqrt(E), k=0, N={n} E={e:.6}"), &kn);
            }
        }
    }

    // trend: the largest size should not do worse than the smallest at a shared theta
    if cfg.sizes.len() >= 2 {
        let small = *cfg.sizes.iter().min().expect("nonempty");
        let large = *cfg.sizes.iter().max().expect("nonempty");
        for &(n, e, eta, p_small) in at_star.iter().filter(|r| r.0 == small) {
            let _ = n;
            if let Some(&(_, _, _, p_large)) = at_star.iter().find(|r| r.0 == large && r.1 == e && r.2 == eta) {
                report.check(
                    format!("trend N={small}->{large} at E={e:.6}, eta={eta:.6}"),
                    p_large.ci_lo <= p_small.ci_hi,
                    p_large.estimate,
                    p_small.estimate,
                    "exceedance at the largest size is not significantly above the smallest",
                );
            }
        }
    }
    report.sweeps.push(stj);
    report.sweeps.push(dens);
    Ok(report)
}

fn local_law_trial(cfg: &ExperimentConfig, m: &MatrixSample, points: &[SpectralPoint]) -> Result<LocalLawTrial> {
    let n = m.n();
    let (spec, decomposition) = if cfg.error_terms {
        let d = decompose(m)?;
        (d.spectrum().clone(), Some(d))
    } else {
        (spectrum(m)?, None)
    };
    let minor = if cfg.error_terms {
        Some(minor_spectrum(m, 0)?)
    } else {
        None
    };
    let mut out = LocalLawTrial {
        stieltjes_error: Vec::with_capacity(points.len()),
        density_error: Vec::with_capacity(points.len()),
        residual: Vec::with_capacity(points.len()),
        omega_max: Vec::new(),
        trace_shift_ratio: Vec::new(),
        kernel_normalized: Vec::new(),
    };
    for p in points {
        let root_e = p.energy().sqrt();
        let delta_n = empirical_stieltjes(&spec, p);
        out.stieltjes_error.push(root_e * (delta_n - mp_stieltjes(p)).norm());
        let window = Window::new(p.energy(), p.eta())?;
        let count = spec.count_in_window(&window).count as f64;
        let nf = n as f64;
        out.density_error
            .push(root_e * (count / (nf * p.eta()) - mp_window_mass(&window) / p.eta()).abs());
        out.residual
            .push(self_consistency_residual(delta_n, p).unwrap_or(f64::INFINITY));
        if let (Some(d), Some(minor)) = (&decomposition, &minor) {
            let terms = omega_terms(d, p)?;
            out.omega_max.push(terms.max_abs());
            out.trace_shift_ratio
                .push(terms.max_trace_shift() * nf * p.eta() / root_e);
            out.kernel_normalized
                .push(trace_kernel_norm(minor.values(), n, p, cfg.b)?.normalized(n));
        }
    }
    Ok(out)
}

/// `max_alpha N |u_alpha|_inf^2 / ln N` over eigenvalues in
/// `[(ln N)^{2b} / (kappa^2 N^2), 4 - kappa]`.
pub fn run_delocalization(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    require_bounded_density(cfg)?;
    with_threads(cfg.threads, || delocalization(cfg))?
}

struct DelocTrial {
    /// max N |u|_inf^2 over the window, if it holds any eigenvalue
    sup: Option<f64>,
    sup_linear_edge: Option<f64>,
    /// max over all eigenvectors
    sup_all: f64,
}

fn delocalization(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    let mut report = TheoremReport::new(ExperimentKind::Deloc, "eigenvector delocalization", cfg);
    let c2 = cfg.thresholds.deloc_c2;
    let mut within = Sweep::new(
        "within_bound",
        "P(max N |u|_inf^2 / ln N <= C^2)",
        &["N", "lower_edge", "upper_edge", "C2"],
    );
    let mut medians = Sweep::new(
        "median_sup",
        "median max N |u|_inf^2",
        &["N", "lower_edge", "upper_edge"],
    );
    let mut growth = (Vec::new(), Vec::new());
    for &n in &cfg.sizes {
        let nf = n as f64;
        let lo = cfg.hard_edge_lower(n);
        let lo_linear = cfg.hard_edge_lower_linear(n);
        let hi = 4.0 - cfg.kappa;
        let trials = per_trial(cfg, n, |m| {
            let d = decompose(m)?;
            let mut sup: Option<f64> = None;
            let mut sup_linear: Option<f64> = None;
            let mut sup_all = 0.0f64;
            for (a, &s) in d.eigenvalues().iter().enumerate() {
                let v = nf * d.sup_norm_sq(a);
                sup_all = sup_all.max(v);
                if s >= lo && s <= hi {
                    sup = Some(sup.map_or(v, |x| x.max(v)));
                }
                if s >= lo_linear && s <= hi {
                    sup_linear = Some(sup_linear.map_or(v, |x| x.max(v)));
                }
            }
            Ok(DelocTrial {
                sup,
                sup_linear_edge: sup_linear,
                sup_all,
            })
        })?;
        let sups: Vec<f64> = trials.iter().filter_map(|t| t.sup).collect();
        let linear: Vec<f64> = trials.iter().filter_map(|t| t.sup_linear_edge).collect();
        let all: Vec<f64> = trials.iter().map(|t| t.sup_all).collect();
        if sups.is_empty() {
            report.check(
                format!("window populated N={n}"),
                false,
                0.0,
                1.0,
                "no eigenvalue in the window",
            );
            continue;
        }
        let p = Proportion::from_flags(sups.iter().map(|&v| v / nf.ln() <= c2));
        within.push_proportion(vec![nf, lo, hi, c2], &p);
        medians.push_median(vec![nf, lo, hi], &sups);
        medians.push_median(vec![nf, lo_linear, hi], &linear);
        report.check(
            format!("delocalized fraction N={n}"),
            p.estimate >= cfg.thresholds.deloc_fraction,
            p.estimate,
            cfg.thresholds.deloc_fraction,
            format!("trials with max N |u|_inf^2 / ln N <= {c2}"),
        );
        let pigeonhole = all.iter().copied().fold(f64::INFINITY, f64::min);
        report.check(
            format!("pigeonhole N={n}"),
            pigeonhole >= 1.0 - 1e-12,
            pigeonhole,
            1.0,
            "every unit vector has N |u|_inf^2 >= 1",
        );
        let scaled: Vec<f64> = sups.iter().map(|v| v / nf.ln()).collect();
        report.summarize(format!("max N |u|_inf^2 / ln N, N={n}"), &scaled);
        report.summarize(
            format!("max N |u|_inf^2, lower edge (ln N)^b/(kappa N)^2, N={n}"),
            &linear,
        );
        growth.0.push(nf.ln().ln());
        growth.1.push(Summary::of(&sups).median.ln());
    }
    if growth.0.len() >= 2 {
        let (_, slope) = linear_fit(&growth.0, &growth.1);
        report.check(
            "growth against ln N".into(),
            slope <= cfg.thresholds.deloc_growth_slope,
            slope,
            cfg.thresholds.deloc_growth_slope,
            "slope of ln median(max N |u|_inf^2) against ln ln N",
        );
    }
    report.sweeps.push(within);
    report.sweeps.push(medians);
    Ok(report)
}

/// `P(N[0, K / N^2] >= L)`.
pub fn run_wegner(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    require_bounded_density(cfg)?;
    with_threads(cfg.threads, || wegner(cfg))?
}

fn wegner(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    let mut report = TheoremReport::new(ExperimentKind::Wegner, "eigenvalues near zero", cfg);
    let mut sweep = Sweep::new("near_zero_exceedance", "P(N[0, K/N^2] >= L)", &["N", "K", "L"]);
    let mut l_sorted = cfg.l_grid.clone();
    l_sorted.sort_unstable();
    l_sorted.dedup();
    for &n in &cfg.sizes {
        let spectra = spectra(cfg, n)?;
        for &k in &cfg.k_grid {
            let counts: Vec<usize> = spectra
                .iter()
                .map(|s| s.near_zero_count(k).map(|c| c.count))
                .collect::<Result<_>>()?;
            let mut neg_logs = Vec::new();
            let mut probs = Vec::new();
            for &l in &l_sorted {
                let p = Proportion::from_flags(counts.iter().map(|&c| c >= l));
                sweep.push_proportion(vec![n as f64, k, l as f64], &p);
                probs.push(p.estimate);
                if l >= 2 {
                    neg_logs.push((l as f64, p));
                }
            }
            report.check(
                format!("nested in L at N={n}, K={k}"),
                is_nonincreasing(&probs),
                probs[probs.len() - 1],
                probs[0],
                "exceedance is nonincreasing along the L grid",
            );
            if neg_logs.len() >= 2 {
                let values: Vec<f64> = neg_logs.iter().map(|x| x.1.neg_log()).collect();
                let nondecreasing = values.windows(2).all(|w| w[1] >= w[0]);
                let strict = values.windows(2).any(|w| w[1] > w[0]);
                // zero-hit points enter the fit at -ln(upper Wilson limit), a
                // lower bound on -ln P
                let (xs, ys): (Vec<f64>, Vec<f64>) = neg_logs
                    .iter()
                    .map(|(l, p)| (*l, if p.hits == 0 { -p.ci_hi.ln() } else { p.neg_log() }))
                    .unzip();
                let slope = linear_fit(&xs, &ys).1;
                report.check(
                    format!("decay in L at N={n}, K={k}"),
                    nondecreasing && strict,
                    slope,
                    0.0,
                    "-ln P over L >= 2 is nondecreasing with a strict increase (zero hits count as +inf); \
                     value is the fitted slope with zero-hit points at their confidence bound",
                );
            }
        }
    }
    report.sweeps.push(sweep);
    Ok(report)
}

/// `N^2 s_1` across sizes, and bulk spacing at `E = 2`.
pub fn run_hard_edge_scaling(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || hard_edge(cfg))?
}

/// Mean gap of the 10 eigenvalues closest to `energy`, in units of
/// `1 / (N rho(energy))`.
pub fn bulk_spacing(spectrum: &Spectrum, energy: f64) -> f64 {
    let v = spectrum.values();
    let n = v.len();
    let take = 10.min(n);
    let centre = v.partition_point(|&s| s < energy);
    let mut lo = centre.saturating_sub(take / 2);
    if lo + take > n {
        lo = n - take;
    }
    let slice = &v[lo..lo + take];
    let mean_gap = (slice[take - 1] - slice[0]) / (take - 1) as f64;
    mean_gap * n as f64 * mp_density(energy)
}

fn hard_edge(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    let mut report = TheoremReport::new(ExperimentKind::HardEdge, "hard-edge scaling", cfg);
    let mut sweep = Sweep::new("median_n2_s1", "median N^2 s_1", &["N"]);
    let mut spacing = Sweep::new("median_spacing", "median bulk gap at E=2 times N rho(2)", &["N"]);
    let mut medians = Vec::new();
    for &n in &cfg.sizes {
        let nf = n as f64;
        let spectra = spectra(cfg, n)?;
        let scaled: Vec<f64> = spectra.iter().map(|s| nf * nf * s.smallest()).collect();
        let gaps: Vec<f64> = spectra.iter().map(|s| bulk_spacing(s, 2.0)).collect();
        sweep.push_median(vec![nf], &scaled);
        spacing.push_median(vec![nf], &gaps);
        let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        report.check(
            format!("positive N^2 s_1 at N={n}"),
            min > 0.0,
            min,
            0.0,
            "smallest eigenvalue is positive",
        );
        let gm = Summary::of(&gaps).median;
        let [lo, hi] = cfg.thresholds.spacing_range;
        report.check(
            format!("bulk spacing at N={n}"),
            gm > lo && gm < hi,
            gm,
            hi,
            format!("median gap near E=2 times N rho(2) in ({lo}, {hi})"),
        );
        report.summarize(format!("N^2 s_1, N={n}"), &scaled);
        report.summarize(format!("spacing at E=2, N={n}"), &gaps);
        medians.push(Summary::of(&scaled).median);
    }
    let max = medians.iter().copied().fold(0.0, f64::max);
    let min = medians.iter().copied().fold(f64::INFINITY, f64::min);
    report.check(
        "medians within factor".into(),
        max <= cfg.thresholds.hard_edge_factor * min,
        max / min,
        cfg.thresholds.hard_edge_factor,
        "largest over smallest median of N^2 s_1 across sizes",
    );
    report.sweeps.push(sweep);
    report.sweeps.push(spacing);
    Ok(report)
}

/// Quadratic-form tails for the identity and a rank-`N/4` projector on a
/// Haar-random subspace.
pub fn run_hw(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || hw(cfg))?
}

fn hw(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    let mut report = TheoremReport::new(ExperimentKind::Hw, "quadratic form concentration", cfg);
    let mut sweep = Sweep::new(
        "tail",
        "P(|x^T A conj(x) - Tr A| >= delta)",
        &["N", "form", "delta_units", "delta"],
    );
    for &n in &cfg.sizes {
        let rank = (n / 4).max(1);
        let mut rng = stream(size_seed(cfg.seed, n) ^ 0x0050_574f_524d);
        let projector = QuadraticForm::Spectral {
            eigenvalues: (0..n).map(|i| if i < rank { 1.0 } else { 0.0 }).collect(),
            basis: Some(haar_frame(&mut rng, n, n)),
        };
        for (form_id, form) in [(0.0, QuadraticForm::identity(n)), (1.0, projector)] {
            let norm = form.frobenius_sq().sqrt();
            let deltas: Vec<f64> = cfg.delta_grid.iter().map(|u| u * norm).collect();
            let curve = hw_tail_curve(&form, cfg.distribution, cfg.trials, &deltas, size_seed(cfg.seed, n))?;
            for (i, (&units, &delta)) in cfg.delta_grid.iter().zip(&deltas).enumerate() {
                sweep.rows.push(SweepRow {
                    keys: vec![n as f64, form_id, units, delta],
                    statistic: curve.exceedance[i],
                    ci_lo: curve.ci_lo[i],
                    ci_hi: curve.ci_hi[i],
                    trials: curve.trials as u64,
                });
            }
            let name = if form_id == 0.0 { "identity" } else { "projector" };
            report.check(
                format!("monotone tail N={n} {name}"),
                curve.is_monotone(),
                curve.exceedance[curve.exceedance.len() - 1],
                curve.exceedance[0],
                "exceedance nonincreasing in delta",
            );
            let slope = curve.fitted_slope.unwrap_or(f64::NAN);
            report.check(
                format!("decay rate N={n} {name}"),
                slope > 0.0,
                slope,
                0.0,
                "fitted slope of -ln P against min(delta/sqrt(T), delta^2/T)",
            );
        }
    }
    report.sweeps.push(sweep);
    Ok(report)
}

/// `P(sum_{alpha <= m} |<v_alpha, x>|^2 <= m/2)` over `m_grid`.
pub fn run_projection_mass(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || projection_mass(cfg))?
}

fn projection_mass(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    let mut report = TheoremReport::new(ExperimentKind::ProjMass, "mass on an orthonormal family", cfg);
    let n = cfg.projection_dim;
    let family = OrthonormalFamily::default_for(cfg.distribution);
    let mut sweep = Sweep::new("small_mass", "P(sum_{alpha<=m} |<v_alpha, x>|^2 <= m/2)", &["N", "m"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut ms = cfg.m_grid.clone();
    ms.sort_unstable();
    ms.dedup();
    for &m in &ms {
        let p = projection_mass_probe(m, n, cfg.distribution, family, cfg.trials, size_seed(cfg.seed, m))?;
        sweep.push_proportion(vec![n as f64, m as f64], &p);
        if p.estimate > 0.0 && p.estimate < 1.0 {
            xs.push((m as f64).sqrt().ln());
            ys.push(p.neg_log().ln());
        }
    }
    let exponent = if xs.len() >= 2 {
        linear_fit(&xs, &ys).1
    } else {
        f64::NAN
    };
    report.check(
        "superlinear in sqrt(m)".into(),
        exponent > cfg.thresholds.projection_exponent,
        exponent,
        cfg.thresholds.projection_exponent,
        "slope of ln(-ln P) against ln sqrt(m) over points with 0 < P < 1",
    );
    report.sweeps.push(sweep);
    Ok(report)
}

/// Exact identities on random samples: leave-one-out diagonal against the
/// eigenvector route, the eigenvector-component identity, interlacing, and
/// the counting inequality.
pub fn run_identities(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || identities(cfg))?
}

struct IdentityTrial {
    leave_one_out: f64,
    eigenvector: f64,
    covered: usize,
    total: usize,
    interlacing: f64,
    counting_violations: usize,
}

pub fn identity_grid() -> Vec<SpectralPoint> {
    let mut out = Vec::new();
    for &e in &[0.01, 0.5, 1.0, 2.0, 3.5] {
        for &eta in &[0.05, 0.5] {
            out.push(SpectralPoint::new(e, eta).expect("valid grid point"));
        }
    }
    out
}

fn identity_trial(m: &MatrixSample, cfg: &ExperimentConfig) -> Result<IdentityTrial> {
    let n = m.n();
    let d = decompose(m)?;
    let mut loo_worst = 0.0f64;
    for p in identity_grid() {
        let via_vectors = ResolventDiagonal::from_decomposition(&d, &p);
        let via_minor = ResolventDiagonal::by_leave_one_out(m, &p)?;
        for (a, b) in via_vectors.values.iter().zip(&via_minor.values) {
            loo_worst = loo_worst.max((a - b).norm() / (1.0 + b.norm()));
        }
    }
    let mut eig_worst = 0.0f64;
    let mut covered = 0;
    let mut interlacing = 0.0f64;
    let largest = d.spectrum().largest();
    // the minor SVD serves both the identity and interlacing
    for k in 0..n {
        let checks = eigenvector_identity_column(m, &d, k, cfg.thresholds.gap_tol)?;
        for c in &checks {
            if c.covered {
                covered += 1;
                eig_worst = eig_worst.max(c.residual);
            }
        }
        let minor = minor_spectrum(m, k)?;
        interlacing = interlacing.max(interlacing_violation(d.eigenvalues(), minor.values()) / largest);
    }
    let mut violations = 0;
    for i in 0..=40 {
        let e = 4.4 * i as f64 / 40.0;
        for eta in [1e-3, 1e-2, 0.1, 1.0] {
            let w = Window::new(e, eta)?;
            if d.spectrum().count_in_window(&w).count as f64 > d.spectrum().counting_bound(&w) {
                violations += 1;
            }
        }
    }
    Ok(IdentityTrial {
        leave_one_out: loo_worst,
        eigenvector: eig_worst,
        covered,
        total: n * n,
        interlacing,
        counting_violations: violations,
    })
}

fn identities(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    let mut report = TheoremReport::new(ExperimentKind::Identities, "exact identities", cfg);
    let t = &cfg.thresholds;
    let mut sweep = Sweep::new(
        "identity_pass",
        "fraction of samples within tolerance",
        &["N", "identity"],
    );
    for &n in &cfg.sizes {
        let trials = per_trial(cfg, n, |m| identity_trial(m, cfg))?;
        let loo: Vec<f64> = trials.iter().map(|t| t.leave_one_out).collect();
        let eig: Vec<f64> = trials.iter().map(|t| t.eigenvector).collect();
        let inter: Vec<f64> = trials.iter().map(|t| t.interlacing).collect();
        let covered: usize = trials.iter().map(|t| t.covered).sum();
        let total: usize = trials.iter().map(|t| t.total).sum();
        let violations: usize = trials.iter().map(|t| t.counting_violations).sum();
        let nf = n as f64;
        let rows = [
            (0.0, "leave-one-out", &loo, t.leave_one_out_tol),
            (1.0, "eigenvector identity", &eig, t.eigenvector_identity_tol),
            (2.0, "interlacing", &inter, t.interlacing_tol),
        ];
        for (id, name, values, tol) in rows {
            let p = Proportion::from_flags(values.iter().map(|&v| v <= tol));
            sweep.push_proportion(vec![nf, id], &p);
            let worst = values.iter().copied().fold(0.0, f64::max);
            report.check(
                format!("{name} N={n}"),
                worst <= tol,
                worst,
                tol,
                "largest residual over samples",
            );
        }
        let coverage = covered as f64 / total as f64;
        report.check(
            format!("identity coverage N={n}"),
            coverage >= t.identity_coverage,
            coverage,
            t.identity_coverage,
            "share of (alpha, k) pairs outside the near-degenerate gate",
        );
        let p = Proportion::from_flags(trials.iter().map(|t| t.counting_violations == 0));
        sweep.push_proportion(vec![nf, 3.0], &p);
        report.check(
            format!("counting inequality N={n}"),
            violations == 0,
            violations as f64,
            0.0,
            "windows where N_I > 2 eta Im Tr G",
        );
    }
    report.sweeps.push(sweep);
    Ok(report)
}

/// `Delta_N` at `theta` for trial `t` of a configuration; handy for
/// spot checks against reports.
pub fn stieltjes_at(cfg: &ExperimentConfig, n: usize, trial: u64, point: &SpectralPoint) -> Result<Complex64> {
    let m = sample_matrix(&ensemble_for(cfg, n)?, trial);
    Ok(empirical_stieltjes(&spectrum(&m)?, point))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(sizes: Vec<usize>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(sizes, 30, 3);
        cfg.threads = Some(2);
        cfg
    }

    #[test]
    fn apriori_tail_vanishes_beyond_n() {
        let mut cfg = small(vec![32]);
        cfg.scale_min = 2.0;
        cfg.energies = Some(vec![2.0]);
        cfg.k_grid = vec![1.0, 1e6];
        let r = run_apriori(&cfg).unwrap();
        let sweep = r.sweep("count_exceedance").unwrap();
        let last = sweep.rows.iter().find(|row| row.keys[4] == 1e6).unwrap();
        assert_eq!(last.statistic, 0.0);
        assert!(r
            .checks
            .iter()
            .filter(|c| c.name.starts_with("nested"))
            .all(|c| c.passed));
    }

    #[test]
    fn scale_below_minimum_is_a_config_error() {
        let mut cfg = small(vec![32]);
        cfg.energies = Some(vec![2.0]);
        cfg.eta = Some(0.01);
        assert!(matches!(run_apriori(&cfg), Err(Error::Config { .. })));
    }

    #[test]
    fn local_law_huge_epsilon_never_exceeded() {
        let mut cfg = small(vec![32]);
        cfg.scale_min = 1.0;
        cfg.energies = Some(vec![2.0]);
        cfg.eta = Some(0.3);
        cfg.epsilon_grid = vec![1e3];
        cfg.error_terms = true;
        let r = run_local_law(&cfg).unwrap();
        for s in ["stieltjes_exceedance", "density_exceedance"] {
            let row = r.sweep(s).unwrap().rows.iter().find(|row| row.keys[4] == 1e3).unwrap();
            assert_eq!(row.statistic, 0.0);
        }
        assert!(r.checks.iter().any(|c| c.name.starts_with("trace shift") && c.passed));
    }

    #[test]
    fn rademacher_rejected_where_density_needed() {
        let mut cfg = small(vec![16]);
        cfg.distribution = crate::ensemble::EntryDistribution::RademacherPair;
        assert!(run_wegner(&cfg).is_err());
        assert!(run_local_law(&cfg).is_err());
        assert!(run_delocalization(&cfg).is_err());
        assert!(run_hard_edge_scaling(&cfg).is_ok());
    }

    #[test]
    fn wegner_l_beyond_n_is_zero() {
        let mut cfg = small(vec![8]);
        cfg.l_grid = vec![1, 9];
        cfg.k_grid = vec![1.0];
        let r = run_wegner(&cfg).unwrap();
        let row = r.sweep("near_zero_exceedance").unwrap().find(&[8.0, 1.0, 9.0]).unwrap();
        assert_eq!(row.statistic, 0.0);
    }

    #[test]
    fn identities_pass_at_small_size() {
        let r = run_identities(&small(vec![6])).unwrap();
        assert!(r.passed, "{:?}", r.failed_checks().collect::<Vec<_>>());
    }

    #[test]
    fn reports_do_not_depend_on_threads() {
        let mut a = small(vec![12, 16]);
        a.threads = Some(1);
        let mut b = a.clone();
        b.threads = Some(3);
        let ra = run_hard_edge_scaling(&a).unwrap();
        let rb = run_hard_edge_scaling(&b).unwrap();
        assert_eq!(ra.sweeps, rb.sweeps);
        assert_eq!(ra.summaries, rb.summaries);
    }

    #[test]
    fn bulk_spacing_of_uniform_grid() {
        // equally spaced eigenvalues with gap 1/(N rho(2)) have spacing 1
        let n = 100;
        let gap = 1.0 / (n as f64 * mp_density(2.0));
        let s = Spectrum::from_values((0..n).map(|i| 2.0 + (i as f64 - 50.0) * gap).collect());
        assert!((bulk_spacing(&s, 2.0) - 1.0).abs() < 1e-9);
    }
}
