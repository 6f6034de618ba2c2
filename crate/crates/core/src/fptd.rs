//! First-passage-time distributions for the reduced scalar process, built by
//! the method of imaging: survival CDF, the general density, and the
//! closed-loop / open-loop closed forms with their validity checks.
//!
//! All formulas are evaluated in an oriented frame where the boundary lies at
//! a positive gap from the start and the drift is measured toward it; the
//! mirror for the opposite geometry is applied internally. The closed forms
//! include the normalization factor 1/2 (the raw imaging density integrates
//! to 2 in the drift-through case); callers must never normalize again.

use std::f64::consts::PI;

use thiserror::Error;

use crate::erf::{erf, norm_cdf};
use crate::reduction::{Reduced1DProcess, VarianceLaw};

/// Factor applied to the raw imaging density so the CDF tends to unity.
pub const NORMALIZATION: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum FptdError {
    #[error("variance is not strictly positive at t = {0}")]
    DegenerateVariance(f64),
    #[error("density collapses: no drift and no variance growth")]
    MethodCollapse,
    #[error("negative density factor at t = {0}: process receding from the boundary")]
    NegativeDensity(f64),
    #[error("t = {t} is outside the validity domain (ends at {end})")]
    OutOfValidityDomain { t: f64, end: f64 },
}

/// Evaluator for one reduced process, with the mirror orientation and the
/// validity bound resolved once.
#[derive(Debug, Clone, Copy)]
pub struct FptdEvaluator {
    process: Reduced1DProcess,
    /// Oriented boundary gap extrapolated to global t = 0.
    a_eff: f64,
    /// Oriented drift (positive = toward the boundary).
    mu: f64,
    /// End of the validity domain; `None` means unbounded.
    valid_until: Option<f64>,
}

impl FptdEvaluator {
    pub fn new(process: Reduced1DProcess) -> Result<Self, FptdError> {
        if let VarianceLaw::Constant { .. } = process.variance_law {
            if process.mu == 0.0 {
                return Err(FptdError::MethodCollapse);
            }
        }
        let raw_gap = process.alpha - process.r0;
        let sign = if raw_gap >= 0.0 { 1.0 } else { -1.0 };
        let mu = sign * process.mu;
        let a_eff = sign * raw_gap + mu * process.t0;
        let valid_until = match process.variance_law {
            VarianceLaw::Cubic { .. } if mu > 0.0 && a_eff > 0.0 => Some(3.0 * a_eff / mu),
            VarianceLaw::Cubic { .. } => None,
            // constant variance keeps the CDF monotone for all t > 0
            VarianceLaw::Constant { .. } => None,
        };
        Ok(Self { process, a_eff, mu, valid_until })
    }

    #[inline]
    pub fn process(&self) -> &Reduced1DProcess {
        &self.process
    }

    /// End of the validity domain, when bounded.
    #[inline]
    pub fn validity_end(&self) -> Option<f64> {
        self.valid_until
    }

    /// Oriented gap `alpha - m(t)` (positive while the mean is on the survival
    /// side).
    #[inline]
    fn gap(&self, t: f64) -> f64 {
        self.a_eff - self.mu * t
    }

    /// Normalized first-passage density at global time `t`. Density at exactly
    /// `t = 0` is 0 for both laws. Errors beyond the open-loop validity bound.
    pub fn density(&self, t: f64) -> Result<f64, FptdError> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        match self.process.variance_law {
            VarianceLaw::Constant { c_ss } => {
                let g = self.gap(t);
                Ok(self.mu.abs() / (2.0 * PI * c_ss).sqrt() * (-g * g / (2.0 * c_ss)).exp())
            }
            VarianceLaw::Cubic { sigma_n } => {
                if let Some(end) = self.valid_until {
                    if t >= end {
                        return Err(FptdError::OutOfValidityDomain { t, end });
                    }
                }
                let c = self.process.variance_at(t);
                let g = self.gap(t);
                let num = (3.0 * t).sqrt() * (3.0 * self.a_eff - self.mu * t).abs();
                let den = 2.0 * (2.0 * PI).sqrt() * sigma_n * t * t * t;
                Ok((-g * g / (2.0 * c)).exp() * num / den)
            }
        }
    }

    /// Density with the validity truncation applied: zero beyond the bound.
    pub fn density_truncated(&self, t: f64) -> f64 {
        match self.density(t) {
            Ok(f) => f,
            Err(FptdError::OutOfValidityDomain { .. }) => 0.0,
            Err(_) => 0.0,
        }
    }

    /// Open-loop density continued past the validity bound by evaluating the
    /// closed form with its absolute-value factor over the whole horizon. The
    /// derivation only supports `t < 3a/mu`, but the continued form stays
    /// nonnegative and integrable, and published conflict totals correspond
    /// to it; within the validity domain it equals [`Self::density`].
    pub fn density_extended(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.process.variance_law {
            VarianceLaw::Constant { .. } => self.density_truncated(t),
            VarianceLaw::Cubic { sigma_n } => {
                let c = self.process.variance_at(t);
                let g = self.gap(t);
                let num = (3.0 * t).sqrt() * (3.0 * self.a_eff - self.mu * t).abs();
                let den = 2.0 * (2.0 * PI).sqrt() * sigma_n * t * t * t;
                (-g * g / (2.0 * c)).exp() * num / den
            }
        }
    }

    /// Survival CDF `erf((alpha - m(t)) / sqrt(2 c(t)))` in the oriented frame.
    pub fn survival(&self, t: f64) -> Result<f64, FptdError> {
        let c = self.process.variance_at(t);
        if c <= 0.0 {
            return Err(FptdError::DegenerateVariance(t));
        }
        Ok(erf(self.gap(t) / (2.0 * c).sqrt()))
    }

    /// Normalized first-passage CDF over `[0, t]`, with the open-loop law
    /// truncated (held constant) beyond the validity bound.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.process.variance_law {
            VarianceLaw::Constant { c_ss } => {
                let s = c_ss.sqrt();
                let z = |tau: f64| (self.mu * tau - self.a_eff) / s;
                if self.mu > 0.0 {
                    norm_cdf(z(t)) - norm_cdf(z(0.0))
                } else {
                    norm_cdf(z(0.0)) - norm_cdf(z(t))
                }
            }
            VarianceLaw::Cubic { .. } => {
                let t_end = match self.valid_until {
                    Some(end) => t.min(end),
                    None => t,
                };
                let c = self.process.variance_at(t_end);
                if c <= 0.0 {
                    return 0.0;
                }
                let f_s = erf(self.gap(t_end) / (2.0 * c).sqrt());
                // F_S(0+) = 1 since the gap is positive and c(0+) vanishes
                NORMALIZATION * (1.0 - f_s)
            }
        }
    }
}

/// Whether the process moves or diffuses toward the boundary: drift drives the
/// mean toward `alpha`, or the variance grows (the open-loop law always
/// diffuses).
pub fn approach_test(process: &Reduced1DProcess) -> bool {
    match process.variance_law {
        VarianceLaw::Cubic { .. } => true,
        VarianceLaw::Constant { .. } => process.mu * (process.alpha - process.r0) > 0.0,
    }
}

/// Survival CDF of the reduced process at `t`: `erf(gap / sqrt(2 c(t)))` in
/// the oriented frame. Defined even for drift-free constant-variance
/// processes, for which the density itself collapses.
pub fn survival_cdf(process: &Reduced1DProcess, t: f64) -> Result<f64, FptdError> {
    let c = process.variance_at(t);
    if c <= 0.0 {
        return Err(FptdError::DegenerateVariance(t));
    }
    let raw_gap = process.alpha - process.r0;
    let sign = if raw_gap >= 0.0 { 1.0 } else { -1.0 };
    Ok(erf(sign * (process.alpha - process.mean_at(t)) / (2.0 * c).sqrt()))
}

/// Unnormalized general first-passage density (integrates to 2 in the
/// drift-through case): the survival-CDF derivative with the chain rule
/// expanded.
pub fn fptd_general(process: &Reduced1DProcess, t: f64) -> Result<f64, FptdError> {
    let c = process.variance_at(t);
    if c <= 0.0 {
        return Err(FptdError::DegenerateVariance(t));
    }
    let c_dot = process.variance_rate_at(t);
    if process.mu == 0.0 && c_dot == 0.0 {
        return Err(FptdError::MethodCollapse);
    }
    let raw_gap = process.alpha - process.r0;
    let sign = if raw_gap >= 0.0 { 1.0 } else { -1.0 };
    let g = sign * (process.alpha - process.mean_at(t));
    let mu = sign * process.mu;
    let bracket = g * c_dot / (2.0 * c) + mu;
    if bracket < 0.0 {
        return Err(FptdError::NegativeDensity(t));
    }
    Ok((2.0 / (c * PI)).sqrt() * (-g * g / (2.0 * c)).exp() * bracket)
}

/// Normalized closed-loop density (constant variance law).
pub fn fptd_closed_loop(process: &Reduced1DProcess, t: f64) -> Result<f64, FptdError> {
    debug_assert!(matches!(process.variance_law, VarianceLaw::Constant { .. }));
    FptdEvaluator::new(*process)?.density(t)
}

/// Normalized open-loop density (cubic variance law), erroring beyond the
/// validity bound.
pub fn fptd_open_loop(process: &Reduced1DProcess, t: f64) -> Result<f64, FptdError> {
    debug_assert!(matches!(process.variance_law, VarianceLaw::Cubic { .. }));
    FptdEvaluator::new(*process)?.density(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(alpha: f64, r0: f64, mu: f64, c_ss: f64) -> Reduced1DProcess {
        Reduced1DProcess::new(alpha, r0, mu, 0.0, VarianceLaw::Constant { c_ss }).unwrap()
    }

    fn cubic(alpha: f64, r0: f64, mu: f64, sigma: f64) -> Reduced1DProcess {
        Reduced1DProcess::new(alpha, r0, mu, 0.0, VarianceLaw::Cubic { sigma_n: sigma }).unwrap()
    }

    #[test]
    fn survival_reference_points() {
        let p = cubic(10.0, 0.0, 1.0, 1.0);
        // m(t) = alpha at t = 10: erf(0) = 0
        let ev = FptdEvaluator::new(p).unwrap();
        assert!(ev.survival(10.0).unwrap().abs() < 1e-15);
        // gap of 3 sqrt(2c): erf(3)
        let c = p.variance_at(2.0);
        let p2 = cubic(2.0 + 3.0 * (2.0 * c).sqrt(), 2.0, 0.0, 1.0);
        let ev2 = FptdEvaluator::new(p2).unwrap();
        assert!((ev2.survival(2.0).unwrap() - erf(3.0)).abs() < 1e-12);
    }

    #[test]
    fn survival_degenerate_variance() {
        let p = cubic(10.0, 0.0, 1.0, 1.0);
        assert_eq!(survival_cdf(&p, 0.0).unwrap_err(), FptdError::DegenerateVariance(0.0));
    }

    #[test]
    fn general_collapses_without_drift_or_growth() {
        let p = constant(10.0, 0.0, 1.0, 1.0);
        let frozen = Reduced1DProcess { mu: 0.0, ..p };
        assert_eq!(fptd_general(&frozen, 1.0).unwrap_err(), FptdError::MethodCollapse);
        assert_eq!(FptdEvaluator::new(frozen).unwrap_err(), FptdError::MethodCollapse);
    }

    #[test]
    fn general_is_twice_normalized_closed_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let p = constant(12.0, 2.0, 2.5, 0.8);
        for _ in 0..100 {
            let t: f64 = rng.random_range(0.001..8.0);
            let g = fptd_general(&p, t).unwrap();
            let f = fptd_closed_loop(&p, t).unwrap();
            assert!((g - 2.0 * f).abs() < 1e-12 * g.max(1.0));
        }
    }

    #[test]
    fn general_matches_survival_derivative() {
        // central differences of F_S at h = 1e-5 s, relative error < 1e-4
        let cases: [Reduced1DProcess; 2] = [constant(12.0, 2.0, 2.5, 0.8), cubic(95.0, 0.0, 9.0, 2.2)];
        for p in cases {
            let ev = FptdEvaluator::new(p).unwrap();
            let t_max = ev.validity_end().unwrap_or(4.0).min(4.0) * 0.98;
            let h = 1e-5;
            for k in 1..200 {
                let t = t_max * k as f64 / 200.0;
                if t < 10.0 * h {
                    continue;
                }
                let num = -(ev.survival(t + h).unwrap() - ev.survival(t - h).unwrap()) / (2.0 * h);
                let ana = fptd_general(&p, t).unwrap();
                // central differences of erf bottom out near 1e-11 absolute, so
                // relative comparisons need the density well above that floor
                if ana.abs() < 1e-6 {
                    continue;
                }
                assert!(
                    ((num - ana) / ana).abs() < 1e-4,
                    "t {t}: numeric {num} analytic {ana}"
                );
            }
        }
    }

    #[test]
    fn closed_loop_peak_location_and_height() {
        let (alpha, r0, mu, c_ss) = (10.0, 1.0, 1.5, 0.6);
        let p = constant(alpha, r0, mu, c_ss);
        let t_star = (alpha - r0) / mu;
        let f_peak = fptd_closed_loop(&p, t_star).unwrap();
        assert!((f_peak - mu.abs() / (2.0 * PI * c_ss).sqrt()).abs() < 1e-14);
        // nearby values are lower
        assert!(fptd_closed_loop(&p, t_star - 0.3).unwrap() < f_peak);
        assert!(fptd_closed_loop(&p, t_star + 0.3).unwrap() < f_peak);
    }

    #[test]
    fn closed_loop_normalizes_when_start_is_far() {
        // start 8 standard deviations from the boundary; quadrature to 10 t*
        let c_ss = 0.5_f64;
        let a = 8.0 * c_ss.sqrt();
        let p = constant(a, 0.0, 0.8, c_ss);
        let ev = FptdEvaluator::new(p).unwrap();
        let t_star = a / 0.8;
        let n = 200_000;
        let h = 10.0 * t_star / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * ev.density(i as f64 * h).unwrap();
        }
        acc *= h;
        assert!((acc - 1.0).abs() < 1e-6, "integral {acc}");
    }

    #[test]
    fn open_loop_validity_and_mirror() {
        let p = cubic(20.0, 0.0, 4.0, 1.3);
        let ev = FptdEvaluator::new(p).unwrap();
        let end = ev.validity_end().unwrap();
        assert!((end - 15.0).abs() < 1e-12);
        assert!(matches!(
            ev.density(end),
            Err(FptdError::OutOfValidityDomain { .. })
        ));
        assert_eq!(ev.density_truncated(end + 1.0), 0.0);

        // mirrored geometry gives identical density
        let m = cubic(-20.0, 0.0, -4.0, 1.3);
        let evm = FptdEvaluator::new(m).unwrap();
        for k in 1..100 {
            let t = end * k as f64 / 101.0;
            assert!((ev.density(t).unwrap() - evm.density(t).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn extended_density_agrees_inside_and_continues_outside() {
        let p = cubic(20.0, 0.0, 4.0, 1.3);
        let ev = FptdEvaluator::new(p).unwrap();
        let end = ev.validity_end().unwrap();
        for k in 1..50 {
            let t = end * k as f64 / 51.0;
            assert_eq!(ev.density_extended(t), ev.density(t).unwrap());
        }
        // beyond the bound: positive where the truncated form is zero
        assert!(ev.density_extended(end + 2.0) > 0.0);
        assert_eq!(ev.density_truncated(end + 2.0), 0.0);
    }

    #[test]
    fn open_loop_density_vanishes_at_zero() {
        let p = cubic(5.0, 0.0, 1.0, 1.0);
        let ev = FptdEvaluator::new(p).unwrap();
        assert_eq!(ev.density(0.0).unwrap(), 0.0);
        // the exponential term dominates the t^{-5/2} growth
        assert!(ev.density(1e-4).unwrap() < 1e-100);
    }

    #[test]
    fn open_loop_diffusion_only_is_positive() {
        let p = cubic(5.0, 0.0, 0.0, 1.0);
        assert!(approach_test(&p));
        let ev = FptdEvaluator::new(p).unwrap();
        assert!(ev.validity_end().is_none());
        for t in [0.5, 2.0, 10.0, 100.0] {
            assert!(ev.density(t).unwrap() > 0.0);
        }
    }

    #[test]
    fn approach_test_cases() {
        assert!(approach_test(&constant(10.0, 0.0, 1.0, 1.0)));
        assert!(!approach_test(&constant(10.0, 0.0, -1.0, 1.0)));
        assert!(approach_test(&cubic(10.0, 0.0, 0.0, 1.0)));
    }

    #[test]
    fn survival_non_increasing_on_validity_domain() {
        for p in [constant(12.0, 2.0, 2.5, 0.8), cubic(95.0, 0.0, 9.0, 2.2)] {
            let ev = FptdEvaluator::new(p).unwrap();
            let t_end = ev.validity_end().unwrap_or(12.0).min(12.0);
            let mut prev = f64::INFINITY;
            for k in 1..=1000 {
                let t = t_end * k as f64 / 1000.0;
                let s = ev.survival(t).unwrap();
                assert!(s <= prev + 1e-12, "survival increased at t = {t}");
                prev = s;
            }
        }
    }

    #[test]
    fn open_loop_cdf_matches_survival_complement() {
        let p = cubic(95.0, 0.0, 9.0, 2.2);
        let ev = FptdEvaluator::new(p).unwrap();
        let t_end = ev.validity_end().unwrap();
        for k in 1..100 {
            let t = t_end * k as f64 / 100.0 * 0.999;
            let cdf = ev.cdf(t);
            let f_s = ev.survival(t).unwrap();
            assert!((cdf - 0.5 * (1.0 - f_s)).abs() < 1e-6);
        }
    }

    #[test]
    fn survival_matches_driftless_diffusion_paths() {
        // with no drift the imaging construction is exact for a diffusion
        // with the cubic variance clock; sample such paths with a per-step
        // bridge-crossing draw so discrete monitoring misses nothing
        use rand::{Rng, SeedableRng};
        use rand_distr::{Distribution, StandardNormal};
        let p = cubic(6.0, 0.0, 0.0, 1.1);
        let t_check = 4.0;
        let steps = 800usize;
        let n_paths = 100_000u32;
        let dt = t_check / steps as f64;
        let mut crossed = 0u32;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        for _ in 0..n_paths {
            let mut x = 0.0_f64;
            let mut c_prev = 0.0_f64;
            for k in 0..steps {
                let c_next = p.variance_at((k + 1) as f64 * dt);
                let dc = c_next - c_prev;
                c_prev = c_next;
                let z: f64 = StandardNormal.sample(&mut rng);
                let x_next = x + z * dc.sqrt();
                if x_next >= p.alpha {
                    crossed += 1;
                    break;
                }
                // crossing probability of the in-step bridge given endpoints
                let bridge = (-2.0 * (p.alpha - x) * (p.alpha - x_next) / dc).exp();
                if rng.random_range(0.0..1.0) < bridge {
                    crossed += 1;
                    break;
                }
                x = x_next;
            }
        }
        let mc_survival = 1.0 - crossed as f64 / n_paths as f64;
        let f_s = survival_cdf(&p, t_check).unwrap();
        let se = (mc_survival * (1.0 - mc_survival) / n_paths as f64).sqrt();
        assert!(
            (f_s - mc_survival).abs() < 3.0 * se,
            "survival {f_s:.4} vs paths {mc_survival:.4} (se {se:.5})"
        );
    }

    #[test]
    fn imaged_density_vanishes_at_boundary() {
        use rand::{Rng, SeedableRng};
        // raw imaging construction: mirrored Gaussian subtracted so the
        // density is zero at the absorbing level, for all t
        let imaged = |p: &Reduced1DProcess, r: f64, t: f64| -> f64 {
            let c = p.variance_at(t);
            let m = p.mean_at(t);
            let mirror = 2.0 * p.alpha - m;
            ((-(r - m).powi(2) / (2.0 * c)).exp() - (-(r - mirror).powi(2) / (2.0 * c)).exp())
                / (2.0 * PI * c).sqrt()
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let p = cubic(95.0, 0.0, 9.0, 2.2);
        for _ in 0..100 {
            let t: f64 = rng.random_range(0.01..15.0);
            // residual is pure floating-point cancellation noise, scaled by
            // the Gaussian normalization
            let scale = 1.0 / (2.0 * PI * p.variance_at(t)).sqrt();
            assert!(imaged(&p, p.alpha, t).abs() <= 1e-12 * scale);
        }
    }
}
