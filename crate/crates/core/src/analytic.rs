//! The Marchenko–Pastur law for square (aspect ratio one) sample covariance
//! matrices: density, distribution function, window masses and the
//! Stieltjes transform, together with the fixed-point equation it satisfies.
//!
//! The law is supported on `[0, 4]` with density
//!
//! ```text
//! rho(E) = (1 / 2pi) * sqrt((4 - E) / E)
//! ```
//!
//! and an `E^{-1/2}` singularity at the hard edge `E = 0`. Under the
//! substitution `E = 2 - 2 cos t` the measure becomes `(1 + cos t) / pi dt` on
//! `[0, pi]`, which gives the closed-form distribution function
//! `F(E) = (t + sin t) / pi` and a singularity-free quadrature rule.

use std::f64::consts::{FRAC_1_PI, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Right end of the support.
pub const SOFT_EDGE: f64 = 4.0;

/// Default constant in the lower bound on `Im Delta` inside the disc
/// `E^2 + eta^2 <= 4E`.
///
/// The smallest admissible value found by a dense scan of that disc is about
/// `0.25`; see `delta_imaginary_bound_scan` in the tests.
pub const DEFAULT_IM_BOUND_CONSTANT: f64 = 0.2;

/// A point `theta = E + i eta` in the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    energy: f64,
    eta: f64,
}

impl SpectralPoint {
    pub fn new(energy: f64, eta: f64) -> Result<Self> {
        if !energy.is_finite() {
            return Err(Error::NonFinite {
                name: "E",
                value: energy,
            });
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::NonPositiveEta { eta });
        }
        Ok(Self { energy, eta })
    }

    #[inline]
    pub fn energy(&self) -> f64 {
        self.energy
    }

    #[inline]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[inline]
    pub fn theta(&self) -> Complex64 {
        Complex64::new(self.energy, self.eta)
    }

    /// The local scale `N eta / sqrt(E)`: the expected number of eigenvalues
    /// within distance `eta` of `E`, up to a constant.
    pub fn scale(&self, n: usize) -> f64 {
        n as f64 * self.eta / self.energy.sqrt()
    }
}

/// The closed interval `[E, E + eta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    start: f64,
    width: f64,
}

impl Window {
    pub fn new(start: f64, width: f64) -> Result<Self> {
        if !start.is_finite() {
            return Err(Error::NonFinite {
                name: "E",
                value: start,
            });
        }
        if start < 0.0 {
            return Err(Error::invalid("E", "window must start at E >= 0"));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::EmptyWindow { eta: width });
        }
        Ok(Self { start, width })
    }

    /// The window `[a, b]`.
    pub fn from_bounds(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b - a)
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.width
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.start + self.width
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.start <= x && x <= self.end()
    }

    pub fn scale(&self, n: usize) -> f64 {
        n as f64 * self.width / self.start.sqrt()
    }
}

/// Density and distribution function evaluated at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawEval {
    pub density: f64,
    pub cdf: f64,
}

pub fn mp_law(energy: f64) -> LawEval {
    LawEval {
        density: mp_density(energy),
        cdf: mp_cdf(energy),
    }
}

/// Marchenko–Pastur density. Zero outside `(0, 4]`; the integrable
/// singularity at `E = 0` is reported as `0`.
pub fn mp_density(energy: f64) -> f64 {
    if energy > 0.0 && energy <= SOFT_EDGE {
        0.5 * FRAC_1_PI * ((SOFT_EDGE - energy) / energy).sqrt()
    } else {
        0.0
    }
}

// Angle t in [0, pi] with E = 2 - 2 cos t, computed as 2 asin(sqrt(E)/2) to
// keep relative accuracy near the hard edge.
#[inline]
fn angle(energy: f64) -> f64 {
    2.0 * (0.5 * energy.sqrt()).min(1.0).asin()
}

// sin t = sqrt(E (4 - E)) / 2
#[inline]
fn sine(energy: f64) -> f64 {
    0.5 * (energy * (SOFT_EDGE - energy)).max(0.0).sqrt()
}

/// Marchenko–Pastur distribution function `F(E) = (t + sin t) / pi`.
pub fn mp_cdf(energy: f64) -> f64 {
    if energy <= 0.0 {
        0.0
    } else if energy >= SOFT_EDGE {
        1.0
    } else {
        (angle(energy) + sine(energy)) * FRAC_1_PI
    }
}

/// Law mass of the window `[E, E + eta]`, i.e. `F(E + eta) - F(E)`.
///
/// Evaluated without subtracting distribution values, so narrow windows keep
/// full relative precision:
/// `tan(dt / 2) = eta / (sqrt(a(4-a)) + sqrt(b(4-b)))` and
/// `sin t_b - sin t_a = (eta/2)(2 - (a+b)/2) / (sin t_a + sin t_b)`.
pub fn mp_window_mass(window: &Window) -> f64 {
    let a = window.start().clamp(0.0, SOFT_EDGE);
    let b = window.end().clamp(0.0, SOFT_EDGE);
    // E + eta is rounded; keep the exact width when nothing was clipped
    let width = if a == window.start() && b == window.end() {
        window.width()
    } else {
        b - a
    };
    if width <= 0.0 {
        return 0.0;
    }
    let sines = sine(a) + sine(b);
    if sines == 0.0 {
        // only [0, 4] itself
        return 1.0;
    }
    let dt = 2.0 * (0.5 * width / sines).atan();
    let dsin = 0.5 * width * (2.0 - 0.5 * (a + b)) / sines;
    ((dt + dsin) * FRAC_1_PI).clamp(0.0, 1.0)
}

/// Stieltjes transform `Delta(theta) = int rho(x) / (x - theta) dx`, in
/// closed form `-1/2 + sqrt(1 - 4/theta) / 2` on the branch with
/// `Re sqrt(1 - 4/theta) >= 0`.
///
/// Evaluated as `-2 / (theta (1 + r))`, algebraically equal and free of the
/// cancellation in `r - 1` for large `|theta|`.
pub fn mp_stieltjes(point: &SpectralPoint) -> Complex64 {
    let theta = point.theta();
    let root = branch_root(theta);
    let delta = -2.0 / (theta * (1.0 + root));
    debug_assert!(delta.im > 0.0, "Herglotz violated at {theta}");
    delta
}

/// `sqrt(1 - 4/theta)` on the branch with nonnegative real part.
pub fn branch_root(theta: Complex64) -> Complex64 {
    let root = (1.0 - 4.0 / theta).sqrt();
    if root.re < 0.0 {
        -root
    } else {
        root
    }
}

/// `|theta (delta + 1) + 1 / delta|`, which vanishes at `delta = Delta(theta)`.
pub fn fixed_point_residual(delta: Complex64, point: &SpectralPoint) -> Result<f64> {
    if delta == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroDelta);
    }
    Ok((point.theta() * (delta + 1.0) + delta.inv()).norm())
}

/// `int f(x) rho(x) dx`, by adaptive quadrature in the angle variable where
/// the measure is `(1 + cos t) / pi dt` and has no endpoint singularity.
pub fn mp_expectation<F: Fn(f64) -> f64>(f: F, abs_tol: f64) -> Result<f64> {
    let q = quadrature::integrate(
        |t: f64| f(2.0 - 2.0 * t.cos()) * (1.0 + t.cos()) * FRAC_1_PI,
        0.0,
        PI,
        abs_tol,
        0.0,
    )?;
    Ok(q.value)
}

/// One inequality of the bound report. `margin` is `rhs - lhs` oriented so
/// that a nonnegative margin means the bound holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub margin: f64,
}

impl BoundCheck {
    fn new(margin: f64, scale: f64) -> Self {
        Self {
            // roundoff allowance relative to the size of the compared terms
            holds: margin >= -1e-12 * scale.abs().max(1.0),
            margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBounds {
    pub point: SpectralPoint,
    pub delta: Complex64,
    /// `|Delta|^2 <= 1/E`
    pub modulus: BoundCheck,
    /// `|1 + Delta|^2 >= max(E / (E^2 + eta^2), 1/4)`
    pub shifted_modulus: BoundCheck,
    /// `Im Delta >= C (|E - 4|^{1/2} + eta^{1/2}) / (E^2 + eta^2)^{1/4}`;
    /// `None` outside the disc `E^2 + eta^2 <= 4E`.
    pub imaginary: Option<BoundCheck>,
}

impl DeltaBounds {
    pub fn all_hold(&self) -> bool {
        self.modulus.holds && self.shifted_modulus.holds && self.imaginary.is_none_or(|b| b.holds)
    }
}

pub fn check_delta_bounds(point: &SpectralPoint, im_constant: f64) -> Result<DeltaBounds> {
    let e = point.energy();
    let eta = point.eta();
    if !(e > 0.0) {
        return Err(Error::NonPositiveEnergy { energy: e });
    }
    let delta = mp_stieltjes(point);
    let r2 = e * e + eta * eta;

    let modulus_sq = delta.norm_sqr();
    let modulus = BoundCheck::new(1.0 / e - modulus_sq, 1.0 / e);

    let shifted = (1.0 + delta).norm_sqr();
    let floor = (e / r2).max(0.25);
    let shifted_modulus = BoundCheck::new(shifted - floor, floor);

    let imaginary = (r2 <= 4.0 * e).then(|| {
        let rhs = im_constant * ((e - 4.0).abs().sqrt() + eta.sqrt()) / r2.powf(0.25);
        BoundCheck::new(delta.im - rhs, rhs)
    });

    Ok(DeltaBounds {
        point: *point,
        delta,
        modulus,
        shifted_modulus,
        imaginary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn point(e: f64, eta: f64) -> SpectralPoint {
        SpectralPoint::new(e, eta).unwrap()
    }

    // Independent oracle: F(E) = int_0^sqrt(E) sqrt(4 - u^2) / pi du (x = u^2),
    // which never touches the cosine substitution used by the closed form.
    fn cdf_oracle(e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        let upper = e.min(4.0).sqrt();
        integrate(|u| (4.0 - u * u).max(0.0).sqrt() * FRAC_1_PI, 0.0, upper, 1e-13, 0.0)
            .unwrap()
            .value
    }

    #[test]
    fn density_examples() {
        assert_eq!(mp_density(4.0), 0.0);
        assert_eq!(mp_density(5.0), 0.0);
        assert_eq!(mp_density(0.0), 0.0);
        assert_eq!(mp_density(-1.0), 0.0);
        assert!((mp_density(2.0) - 0.5 / PI).abs() < 1e-16);
        assert!((mp_density(2.0) - 0.159155).abs() < 1e-6);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(mp_cdf(0.0), 0.0);
        assert_eq!(mp_cdf(4.0), 1.0);
        let expected = (PI / 2.0 + 1.0) / PI;
        assert!((mp_cdf(2.0) - expected).abs() < 1e-15);
        assert!((mp_cdf(2.0) - 0.81831).abs() < 1e-5);
        assert!((cdf_oracle(2.0) - expected).abs() < 1e-10);
    }

    #[test]
    fn cdf_matches_quadrature_oracle_on_50_points() {
        for i in 0..50 {
            let e = 4.2 * (i as f64 + 0.5) / 50.0 - 0.1;
            let diff = (mp_cdf(e) - cdf_oracle(e)).abs();
            assert!(diff < 1e-8, "E = {e}: |diff| = {diff:e}");
        }
    }

    #[test]
    fn window_mass_examples() {
        let full = Window::from_bounds(0.0, 4.0).unwrap();
        assert!((mp_window_mass(&full) - 1.0).abs() < 1e-15);

        let upper = Window::from_bounds(2.0, 4.0).unwrap();
        let oracle = 1.0 - cdf_oracle(2.0);
        assert!((mp_window_mass(&upper) - oracle).abs() < 1e-10);
        assert!((mp_window_mass(&upper) - 0.18169).abs() < 1e-5);
    }

    #[test]
    fn narrow_window_is_relatively_accurate() {
        let eta = 1e-8;
        let w = Window::new(2.0, eta).unwrap();
        let mass = mp_window_mass(&w);
        // the first-order term eta * rho(2) is off by rho'/rho * eta / 2 = 2.5e-9
        // relative; the midpoint rule removes that term.
        let first_order = eta * mp_density(2.0);
        assert!(((mass - first_order) / first_order).abs() < 1e-8);
        let midpoint = eta * mp_density(2.0 + 0.5 * eta);
        assert!(
            ((mass - midpoint) / midpoint).abs() < 1e-12,
            "{:e}",
            (mass - midpoint) / midpoint
        );
    }

    #[test]
    fn window_mass_outside_support() {
        assert_eq!(mp_window_mass(&Window::new(5.0, 1.0).unwrap()), 0.0);
        let straddle = Window::from_bounds(3.0, 10.0).unwrap();
        assert!((mp_window_mass(&straddle) - (1.0 - mp_cdf(3.0))).abs() < 1e-14);
    }

    #[test]
    fn stieltjes_large_theta() {
        let p = point(0.0, 1e6);
        let delta = mp_stieltjes(&p);
        let leading = -p.theta().inv();
        assert!((delta - leading).norm() <= 2e-12);
    }

    #[test]
    fn stieltjes_matches_quadrature() {
        let p = point(2.0, 1.0);
        let theta = p.theta();
        let re = mp_expectation(|x| (1.0 / (x - theta)).re, 1e-13).unwrap();
        let im = mp_expectation(|x| (1.0 / (x - theta)).im, 1e-13).unwrap();
        let delta = mp_stieltjes(&p);
        assert!((delta - Complex64::new(re, im)).norm() < 1e-8);
    }

    fn log_grid(n: usize) -> Vec<SpectralPoint> {
        let side = (n as f64).sqrt().round() as usize;
        let mut out = Vec::new();
        for i in 0..side {
            for j in 0..side {
                let e = 10f64.powf(-6.0 + 9.0 * i as f64 / (side - 1) as f64);
                let eta = 10f64.powf(-6.0 + 9.0 * j as f64 / (side - 1) as f64);
                out.push(point(e, eta));
            }
        }
        out
    }

    #[test]
    fn fixed_point_and_herglotz_on_log_grid() {
        for p in log_grid(100) {
            let delta = mp_stieltjes(&p);
            assert!(delta.im > 0.0, "{p:?}");
            assert!(branch_root(p.theta()).re >= 0.0);
            let r = fixed_point_residual(delta, &p).unwrap();
            assert!(r < 1e-12, "{p:?}: {r:e}");
        }
    }

    #[test]
    fn fixed_point_residual_examples() {
        let p = point(2.0, 1.0);
        let delta = mp_stieltjes(&p);
        assert!(fixed_point_residual(delta + 0.1, &p).unwrap() > 0.05);
        let minus_one = Complex64::new(-1.0, 0.0);
        assert_eq!(fixed_point_residual(minus_one, &point(3.7, 0.2)).unwrap(), 1.0);
        assert!(matches!(
            fixed_point_residual(Complex64::new(0.0, 0.0), &p),
            Err(Error::ZeroDelta)
        ));
    }

    #[test]
    fn moments_are_catalan() {
        let mass = mp_expectation(|_| 1.0, 1e-14).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
        for (k, catalan) in [(1, 1.0), (2, 2.0), (3, 5.0), (4, 14.0)] {
            let m = mp_expectation(|x| x.powi(k), 1e-12).unwrap();
            assert!((m - catalan).abs() < 1e-6, "moment {k}: {m}");
        }
    }

    #[test]
    fn window_mass_additive() {
        for &(a, b, c) in &[
            (0.0, 0.3, 1.0),
            (0.1, 2.0, 3.9),
            (1e-6, 1e-5, 4.5),
            (2.0, 2.0 + 1e-7, 2.5),
        ] {
            let ab = mp_window_mass(&Window::from_bounds(a, b).unwrap());
            let bc = mp_window_mass(&Window::from_bounds(b, c).unwrap());
            let ac = mp_window_mass(&Window::from_bounds(a, c).unwrap());
            assert!((ab + bc - ac).abs() < 1e-12, "({a}, {b}, {c})");
        }
    }

    #[test]
    fn bound_examples() {
        let b = check_delta_bounds(&point(2.0, 0.5), DEFAULT_IM_BOUND_CONSTANT).unwrap();
        assert!(b.modulus.holds && b.delta.norm_sqr() <= 0.5);
        let b = check_delta_bounds(&point(0.01, 0.001), DEFAULT_IM_BOUND_CONSTANT).unwrap();
        assert!(b.shifted_modulus.holds);
        let b = check_delta_bounds(&point(4.5, 0.1), DEFAULT_IM_BOUND_CONSTANT).unwrap();
        assert!(b.imaginary.is_none());
        assert!(check_delta_bounds(&point(-1.0, 0.1), 0.2).is_err());
        assert!(check_delta_bounds(&point(0.0, 0.1), 0.2).is_err());
    }

    #[test]
    fn delta_imaginary_bound_scan() {
        // smallest ratio Im Delta / ((|E-4|^1/2 + eta^1/2) / (E^2+eta^2)^1/4)
        // over a dense polar grid of the disc (E-2)^2 + eta^2 <= 4
        let mut worst = f64::INFINITY;
        for i in 1..400 {
            let radius = 2.0 * i as f64 / 400.0;
            for j in 1..400 {
                let phi = PI * j as f64 / 400.0;
                let e = 2.0 + radius * phi.cos();
                let eta = radius * phi.sin();
                let p = point(e, eta);
                let delta = mp_stieltjes(&p);
                let shape = ((e - 4.0).abs().sqrt() + eta.sqrt()) / (e * e + eta * eta).powf(0.25);
                worst = worst.min(delta.im / shape);
                let b = check_delta_bounds(&p, DEFAULT_IM_BOUND_CONSTANT).unwrap();
                assert!(b.all_hold(), "{p:?} {b:?}");
            }
        }
        assert!(worst > DEFAULT_IM_BOUND_CONSTANT, "worst ratio {worst}");
    }

    #[test]
    fn constructors_validate() {
        assert!(SpectralPoint::new(1.0, 0.0).is_err());
        assert!(SpectralPoint::new(1.0, -1.0).is_err());
        assert!(SpectralPoint::new(f64::NAN, 1.0).is_err());
        assert!(SpectralPoint::new(-3.0, 1.0).is_ok());
        assert!(Window::new(1.0, 0.0).is_err());
        assert!(Window::new(-0.5, 1.0).is_err());
    }
}
