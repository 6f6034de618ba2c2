//! Projection of the planar Gaussian process onto a boundary normal, yielding
//! the scalar process the first-passage-time density consumes.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::geometry::Segment;
use crate::motion::{GaussianBelief, PlanStage};

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("projected process neither drifts nor diffuses toward the boundary")]
    NotApproaching,
    #[error("variance law parameter must be strictly positive, got {0}")]
    InvalidLaw(f64),
}

/// Variance law of the projected scalar process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceLaw {
    /// Settled closed-loop variance, constant in time.
    Constant { c_ss: f64 },
    /// Open-loop growth `sigma_n^2 t^3 / 3` from zero initial covariance.
    Cubic { sigma_n: f64 },
}

/// Scalar process obtained by projecting the planar process on a unit normal:
/// boundary offset `alpha`, initial projected position `r0` at time `t0`,
/// drift `mu`, and a variance law evaluated in global time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced1DProcess {
    pub alpha: f64,
    pub r0: f64,
    pub mu: f64,
    pub t0: f64,
    pub variance_law: VarianceLaw,
}

impl Reduced1DProcess {
    pub fn new(alpha: f64, r0: f64, mu: f64, t0: f64, variance_law: VarianceLaw) -> Result<Self, ReductionError> {
        match variance_law {
            VarianceLaw::Constant { c_ss } if !(c_ss > 0.0) => Err(ReductionError::InvalidLaw(c_ss)),
            VarianceLaw::Cubic { sigma_n } if !(sigma_n > 0.0) => Err(ReductionError::InvalidLaw(sigma_n)),
            _ => Ok(Self { alpha, r0, mu, t0, variance_law }),
        }
    }

    /// Projected mean at global time `t`.
    #[inline]
    pub fn mean_at(&self, t: f64) -> f64 {
        self.r0 + self.mu * (t - self.t0)
    }

    /// Projected variance at global time `t`.
    #[inline]
    pub fn variance_at(&self, t: f64) -> f64 {
        match self.variance_law {
            VarianceLaw::Constant { c_ss } => c_ss,
            VarianceLaw::Cubic { sigma_n } => sigma_n * sigma_n * t * t * t / 3.0,
        }
    }

    /// Time derivative of the variance at global time `t`.
    #[inline]
    pub fn variance_rate_at(&self, t: f64) -> f64 {
        match self.variance_law {
            VarianceLaw::Constant { .. } => 0.0,
            VarianceLaw::Cubic { sigma_n } => sigma_n * sigma_n * t * t,
        }
    }
}

/// Projected position distribution: mean `m_R . n`, variance `n^T C_R n`.
pub fn reduce_position(belief: &GaussianBelief, n: Vector2<f64>) -> (f64, f64) {
    let mean = belief.position_mean().dot(&n);
    let var = (n.transpose() * belief.position_cov() * n)[0].max(0.0);
    (mean, var)
}

/// Projected velocity distribution: mean `m_V . n`, variance `n^T C_V n`.
pub fn reduce_velocity(belief: &GaussianBelief, n: Vector2<f64>) -> (f64, f64) {
    let mean = belief.velocity_mean().dot(&n);
    let var = (n.transpose() * belief.velocity_cov() * n)[0].max(0.0);
    (mean, var)
}

/// Scalar noise strength of the projected process, `sqrt(n^T Q n)`. This is
/// the unique choice for which the projected cubic variance law reproduces the
/// full planar propagation of the noise-driven double integrator.
pub fn reduce_noise(q: &Matrix2<f64>, n: Vector2<f64>) -> f64 {
    (n.transpose() * q * n)[0].max(0.0).sqrt()
}

/// Reduce one plan stage against a boundary segment: `alpha` is the segment's
/// signed offset along `n`, `mu` the stage velocity projected on `n`, `r0` the
/// stage start position projected on `n`.
pub fn build_reduced(
    stage: &PlanStage,
    stage_start_time: f64,
    segment: &Segment,
    normal: Vector2<f64>,
    variance_law: VarianceLaw,
) -> Result<Reduced1DProcess, ReductionError> {
    let alpha = segment.midpoint().vector().dot(&normal);
    let r0 = stage.start.vector().dot(&normal);
    let mu = stage.velocity.dot(&normal);
    let process = Reduced1DProcess::new(alpha, r0, mu, stage_start_time, variance_law)?;
    if !crate::fptd::approach_test(&process) {
        return Err(ReductionError::NotApproaching);
    }
    Ok(process)
}
