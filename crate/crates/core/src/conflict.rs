//! The proposed predictor: for each boundary segment, weigh the
//! first-passage-time density of the projected process by the conditional
//! probability mass lying on the segment at the crossing instant, integrate
//! over the horizon, and sum segments into a boundary-level conflict
//! probability.

use nalgebra::{Matrix2, Matrix4, Vector2};
use thiserror::Error;

use crate::erf::normal_interval_mass;
use crate::exec;
use crate::fptd::FptdEvaluator;
use crate::geometry::{horizontalize, ConflictBoundary, GeometryError};
use crate::motion::{GaussianBelief, LtiModel, MotionError, PiecewiseLinearPlan};
use crate::reduction::{build_reduced, reduce_noise, ReductionError, VarianceLaw};

#[derive(Debug, Error, PartialEq)]
pub enum ConflictError {
    #[error("horizon and step must satisfy 0 < dt <= t_H")]
    InvalidTimeGrid,
    #[error("plan covers {plan:.6} s but the horizon is {horizon:.6} s")]
    PlanShorterThanHorizon { plan: f64, horizon: f64 },
    #[error("boundary has no segments")]
    EmptyBoundary,
    #[error("conditioning variance is degenerate")]
    DegenerateVariance,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Covariance model of the query: open-loop cubic growth driven by the
/// diffusion matrix, or a settled closed-loop covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    OpenLoop { q: Matrix2<f64> },
    ClosedLoop { steady_state: Matrix4<f64> },
}

impl ModelKind {
    /// Closed-loop kind with the steady state computed from a feedback model.
    pub fn closed_loop_from(model: &LtiModel) -> Result<Self, MotionError> {
        Ok(Self::ClosedLoop { steady_state: crate::motion::steady_state_covariance(model)? })
    }

    pub fn position_cov(&self, t: f64) -> Matrix2<f64> {
        match self {
            Self::OpenLoop { q } => q * (t * t * t / 3.0),
            Self::ClosedLoop { steady_state } => steady_state.fixed_view::<2, 2>(0, 0).into_owned(),
        }
    }

    pub fn velocity_cov(&self, t: f64) -> Matrix2<f64> {
        match self {
            Self::OpenLoop { q } => q * t,
            Self::ClosedLoop { steady_state } => steady_state.fixed_view::<2, 2>(2, 2).into_owned(),
        }
    }

    pub fn position_velocity_cov(&self, t: f64) -> Matrix2<f64> {
        match self {
            Self::OpenLoop { q } => q * (t * t / 2.0),
            Self::ClosedLoop { steady_state } => steady_state.fixed_view::<2, 2>(0, 2).into_owned(),
        }
    }

    /// Variance law of the process projected on the unit normal `n`.
    pub fn variance_law(&self, n: Vector2<f64>) -> VarianceLaw {
        match self {
            Self::OpenLoop { q } => VarianceLaw::Cubic { sigma_n: reduce_noise(q, n) },
            Self::ClosedLoop { steady_state } => {
                let cr = steady_state.fixed_view::<2, 2>(0, 0).into_owned();
                VarianceLaw::Constant { c_ss: (n.transpose() * cr * n)[0].max(0.0) }
            }
        }
    }

    /// Full joint belief at `t` for a plan-following mean.
    pub fn belief_at(&self, plan: &PiecewiseLinearPlan, t: f64) -> Result<GaussianBelief, MotionError> {
        let (pos, vel) = plan.mean(t)?;
        let mut cov = Matrix4::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.position_cov(t));
        cov.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.velocity_cov(t));
        let cross = self.position_velocity_cov(t);
        cov.fixed_view_mut::<2, 2>(0, 2).copy_from(&cross);
        cov.fixed_view_mut::<2, 2>(2, 0).copy_from(&cross.transpose());
        GaussianBelief::new(t, nalgebra::Vector4::new(pos.x, pos.y, vel.x, vel.y), cov)
    }
}

/// Handling of the open-loop density beyond its validity bound `3a/mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailPolicy {
    /// Evaluate the absolute-value closed form over the whole horizon;
    /// published totals correspond to this.
    #[default]
    Extend,
    /// Zero the density beyond the bound.
    Truncate,
}

/// A full conflict-prediction problem: plan, covariance model, boundary,
/// horizon and quadrature step.
#[derive(Debug, Clone)]
pub struct ConflictQuery {
    pub plan: PiecewiseLinearPlan,
    pub model: ModelKind,
    pub boundary: ConflictBoundary,
    pub horizon: f64,
    pub dt: f64,
    pub tail_policy: TailPolicy,
}

impl ConflictQuery {
    pub fn new(
        plan: PiecewiseLinearPlan,
        model: ModelKind,
        boundary: ConflictBoundary,
        horizon: f64,
        dt: f64,
    ) -> Result<Self, ConflictError> {
        if !(horizon > 0.0) || !(dt > 0.0) || dt > horizon {
            return Err(ConflictError::InvalidTimeGrid);
        }
        if plan.total_duration() + 1e-9 < horizon {
            return Err(ConflictError::PlanShorterThanHorizon {
                plan: plan.total_duration(),
                horizon,
            });
        }
        if boundary.is_empty() {
            return Err(ConflictError::EmptyBoundary);
        }
        Ok(Self { plan, model, boundary, horizon, dt, tail_policy: TailPolicy::default() })
    }

    /// Quadrature grid: multiples of `dt` with the horizon appended as the
    /// final node.
    pub fn time_grid(&self) -> Vec<f64> {
        time_grid(self.horizon, self.dt)
    }
}

pub(crate) fn time_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let mut times = Vec::with_capacity((horizon / dt) as usize + 2);
    let eps = 1e-9 * horizon.max(1.0);
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        if t >= horizon - eps {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(horizon);
    times
}

/// Per-segment evaluation notes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentDiagnostics {
    /// Plan stages that neither drift nor diffuse toward this segment (their
    /// contribution is zero).
    pub skipped_stages: Vec<usize>,
    /// The open-loop validity bound fell inside the horizon; the density tail
    /// beyond it was handled per the query's [`TailPolicy`].
    pub validity_truncated: bool,
}

/// Result of one prediction method on one scenario.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub probability: f64,
    pub per_segment: Vec<(usize, f64, SegmentDiagnostics)>,
    /// Wall-clock runtime in seconds.
    pub runtime: f64,
    pub method_name: String,
}

/// Gaussian conditional of the horizontal-frame position on the boundary line
/// `y = y_boundary`: mean `m_X + (y - m_Y) C_YX / C_Y`, variance
/// `C_X - C_YX^2 / C_Y`.
pub fn conditional_moments(belief: &GaussianBelief, y_boundary: f64) -> Result<(f64, f64), ConflictError> {
    let m = belief.position_mean();
    let c = belief.position_cov();
    conditional_moments_raw(m, &c, y_boundary)
}

pub(crate) fn conditional_moments_raw(
    mean: Vector2<f64>,
    cov: &Matrix2<f64>,
    y_boundary: f64,
) -> Result<(f64, f64), ConflictError> {
    let c_y = cov[(1, 1)];
    if c_y <= 1e-15 {
        return Err(ConflictError::DegenerateVariance);
    }
    let c_yx = cov[(0, 1)];
    let mean_c = mean.x + (y_boundary - mean.y) * c_yx / c_y;
    let var_c = (cov[(0, 0)] - c_yx * c_yx / c_y).max(0.0);
    Ok((mean_c, var_c))
}

/// Probability mass of the conditional distribution on `[x1, x2]`, via error
/// functions; a degenerate variance degrades to the indicator of the mean
/// lying inside.
pub fn segment_mass(cond: (f64, f64), x1: f64, x2: f64) -> f64 {
    debug_assert!(x1 <= x2);
    normal_interval_mass(cond.0, cond.1, x1, x2)
}

struct SegmentFrame {
    /// Rotation-only transform making the segment horizontal.
    rotation: Matrix2<f64>,
    y_boundary: f64,
    x_lo: f64,
    x_hi: f64,
    /// Rotated open-loop diffusion or closed-loop position covariance.
    rotated_cov_seed: Matrix2<f64>,
    cubic: bool,
}

impl SegmentFrame {
    fn position_cov(&self, t: f64) -> Matrix2<f64> {
        if self.cubic {
            self.rotated_cov_seed * (t * t * t / 3.0)
        } else {
            self.rotated_cov_seed
        }
    }
}

/// Conflict probability contributed by boundary segment `index`.
pub fn segment_conflict_probability(
    query: &ConflictQuery,
    index: usize,
) -> Result<(f64, SegmentDiagnostics), ConflictError> {
    let times = query.time_grid();
    segment_conflict_on_grid(query, index, &times)
}

fn segment_conflict_on_grid(
    query: &ConflictQuery,
    index: usize,
    times: &[f64],
) -> Result<(f64, SegmentDiagnostics), ConflictError> {
    let segment = &query.boundary.segments()[index];
    let normal = query.boundary.normals()[index];
    let mut diagnostics = SegmentDiagnostics::default();

    // one FPTD evaluator per plan stage; stages that do not approach this
    // segment contribute nothing
    let law = query.model.variance_law(normal);
    let mut evaluators: Vec<Option<FptdEvaluator>> = Vec::with_capacity(query.plan.stages().len());
    for (si, stage) in query.plan.stages().iter().enumerate() {
        let t0 = query.plan.stage_start_time(si);
        let ev = match build_reduced(stage, t0, segment, normal, law) {
            Ok(process) => FptdEvaluator::new(process).ok(),
            Err(ReductionError::NotApproaching | ReductionError::InvalidLaw(_)) => None,
        };
        if ev.is_none() {
            diagnostics.skipped_stages.push(si);
        }
        if let Some(ev) = &ev {
            if let Some(end) = ev.validity_end() {
                if end < query.horizon {
                    diagnostics.validity_truncated = true;
                }
            }
        }
        evaluators.push(ev);
    }

    let frame = {
        let t = horizontalize(segment, normal)?;
        let p1 = t.apply_point(segment.p1());
        let p2 = t.apply_point(segment.p2());
        let seed = match &query.model {
            ModelKind::OpenLoop { q } => t.rotation() * q * t.rotation().transpose(),
            ModelKind::ClosedLoop { steady_state } => {
                let cr = steady_state.fixed_view::<2, 2>(0, 0).into_owned();
                t.rotation() * cr * t.rotation().transpose()
            }
        };
        SegmentFrame {
            rotation: *t.rotation(),
            y_boundary: 0.5 * (p1.y + p2.y),
            x_lo: p1.x.min(p2.x),
            x_hi: p1.x.max(p2.x),
            rotated_cov_seed: seed,
            cubic: matches!(query.model, ModelKind::OpenLoop { .. }),
        }
    };

    let mut integrand = Vec::with_capacity(times.len());
    for &t in times {
        let stage = query.plan.stage_index(t)?;
        let density = match &evaluators[stage] {
            Some(ev) => match query.tail_policy {
                TailPolicy::Extend => ev.density_extended(t),
                TailPolicy::Truncate => ev.density_truncated(t),
            },
            None => 0.0,
        };
        if density == 0.0 {
            integrand.push(0.0);
            continue;
        }
        let (pos, _) = query.plan.mean(t)?;
        let mean_h = frame.rotation * pos.vector();
        let cov_h = frame.position_cov(t);
        let mass = match conditional_moments_raw(mean_h, &cov_h, frame.y_boundary) {
            Ok(cond) => segment_mass(cond, frame.x_lo, frame.x_hi),
            Err(ConflictError::DegenerateVariance) => {
                let inside = mean_h.x >= frame.x_lo && mean_h.x <= frame.x_hi;
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Err(e) => return Err(e),
        };
        integrand.push(density * mass);
    }

    let mut total = 0.0;
    for k in 0..times.len() - 1 {
        total += 0.5 * (integrand[k] + integrand[k + 1]) * (times[k + 1] - times[k]);
    }
    Ok((total.clamp(0.0, 1.0), diagnostics))
}

/// Conflict probability of the whole boundary: per-segment contributions
/// (evaluated in parallel when enabled) summed in segment order and clamped
/// at 1.
pub fn boundary_conflict_probability(query: &ConflictQuery) -> Result<MethodResult, ConflictError> {
    let start = std::time::Instant::now();
    let times = query.time_grid();
    let outcomes = exec::map_indices(query.boundary.len(), |i| segment_conflict_on_grid(query, i, &times));
    let mut per_segment = Vec::with_capacity(outcomes.len());
    let mut total = 0.0;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let (p, diag) = outcome?;
        total += p;
        per_segment.push((i, p, diag));
    }
    Ok(MethodResult {
        probability: total.min(1.0),
        per_segment,
        runtime: start.elapsed().as_secs_f64(),
        method_name: "proposed".to_owned(),
    })
}
