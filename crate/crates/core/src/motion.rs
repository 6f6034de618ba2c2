//! Linear, Gaussian, time-invariant motion models over the planar state
//! `[position; velocity]`, with exact discretization, covariance propagation,
//! steady-state covariance for feedback-controlled models, and piecewise-linear
//! mean plans.

use nalgebra::{Matrix2, Matrix4, Matrix4x2, SMatrix, Vector2, Vector4};
use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("covariance update produced eigenvalue {0}, below the -1e-9 floor")]
    NonPsdCovariance(f64),
    #[error("covariance iteration diverges; closed-loop model is unstable")]
    UnstableModel,
    #[error("time {t} outside the plan horizon [0, {total}]")]
    OutOfHorizon { t: f64, total: f64 },
    #[error("plan stage {0} has non-positive duration")]
    NonPositiveDuration(usize),
    #[error("plan stages {0} and {1} are not positionally continuous")]
    DiscontinuousPlan(usize, usize),
    #[error("plan must contain at least one stage")]
    EmptyPlan,
    #[error("diffusion matrix is not symmetric positive semi-definite")]
    InvalidDiffusion,
}

/// Continuous-time model `x' = A x + B u + B_eta eta`, `eta` white with
/// strength `Q`, optionally closed by state feedback `u = -K x` on top of the
/// constant input.
///
/// The state layout convention is `[r_x, r_y, v_x, v_y]`; the matrices are kept
/// generic so reduced or rearranged systems can be embedded for testing.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiModel {
    pub state_matrix: Matrix4<f64>,
    pub input_matrix: Matrix4x2<f64>,
    pub noise_input_matrix: Matrix4x2<f64>,
    pub diffusion: Matrix2<f64>,
    pub control_input: Vector2<f64>,
    pub feedback_gain: Option<SMatrix<f64, 2, 4>>,
}

impl LtiModel {
    pub fn new(
        state_matrix: Matrix4<f64>,
        input_matrix: Matrix4x2<f64>,
        noise_input_matrix: Matrix4x2<f64>,
        diffusion: Matrix2<f64>,
    ) -> Result<Self, MotionError> {
        if (diffusion - diffusion.transpose()).norm() > 1e-12
            || diffusion[(0, 0)] < 0.0
            || diffusion[(1, 1)] < 0.0
            || diffusion.determinant() < -1e-12
        {
            return Err(MotionError::InvalidDiffusion);
        }
        Ok(Self {
            state_matrix,
            input_matrix,
            noise_input_matrix,
            diffusion,
            control_input: Vector2::zeros(),
            feedback_gain: None,
        })
    }

    /// Planar double integrator: velocity integrates acceleration noise with
    /// strength `q` (one diagonal entry per axis).
    pub fn double_integrator(q_diag: Vector2<f64>) -> Self {
        let mut a = Matrix4::zeros();
        a[(0, 2)] = 1.0;
        a[(1, 3)] = 1.0;
        let mut b = Matrix4x2::zeros();
        b[(2, 0)] = 1.0;
        b[(3, 1)] = 1.0;
        Self::new(a, b, b, Matrix2::from_diagonal(&q_diag)).expect("diagonal diffusion is valid")
    }

    /// Double integrator with acceleration feedback on position and velocity
    /// error: `u = -Kp e_r - Kd e_v`, gains per axis.
    pub fn closed_loop(q_diag: Vector2<f64>, gain_p: Vector2<f64>, gain_d: Vector2<f64>) -> Self {
        let mut model = Self::double_integrator(q_diag);
        let mut k = SMatrix::<f64, 2, 4>::zeros();
        k[(0, 0)] = gain_p.x;
        k[(1, 1)] = gain_p.y;
        k[(0, 2)] = gain_d.x;
        k[(1, 3)] = gain_d.y;
        model.feedback_gain = Some(k);
        model
    }

    /// State matrix with any feedback folded in.
    pub fn effective_state_matrix(&self) -> Matrix4<f64> {
        match &self.feedback_gain {
            Some(k) => self.state_matrix - self.input_matrix * k,
            None => self.state_matrix,
        }
    }
}

/// Exact zero-order-hold discretization of an [`LtiModel`] at a fixed step:
/// transition `psi`, input map `gamma`, and process-noise covariance `qd`.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    pub dt: f64,
    pub psi: Matrix4<f64>,
    pub gamma: Matrix4x2<f64>,
    pub qd: Matrix4<f64>,
}

impl DiscreteModel {
    /// Van Loan construction: one 8x8 matrix exponential yields both the
    /// transition matrix and the integrated noise covariance; a 6x6 companion
    /// yields the input map.
    pub fn new(model: &LtiModel, dt: f64) -> Self {
        assert!(dt > 0.0, "dt must be positive");
        let a = model.effective_state_matrix();
        let n = model.noise_input_matrix * model.diffusion * model.noise_input_matrix.transpose();

        let mut m = SMatrix::<f64, 8, 8>::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&(-a * dt));
        m.fixed_view_mut::<4, 4>(0, 4).copy_from(&(n * dt));
        m.fixed_view_mut::<4, 4>(4, 4).copy_from(&(a.transpose() * dt));
        let e = m.exp();
        let f12 = e.fixed_view::<4, 4>(0, 4).into_owned();
        let f22 = e.fixed_view::<4, 4>(4, 4).into_owned();
        let psi = f22.transpose();
        let mut qd = psi * f12;
        qd = 0.5 * (qd + qd.transpose());

        let mut mb = SMatrix::<f64, 6, 6>::zeros();
        mb.fixed_view_mut::<4, 4>(0, 0).copy_from(&(a * dt));
        mb.fixed_view_mut::<4, 2>(0, 4)
            .copy_from(&(model.input_matrix * dt));
        let eb = mb.exp();
        let gamma = eb.fixed_view::<4, 2>(0, 4).into_owned();

        Self { dt, psi, gamma, qd }
    }

    /// Lower Cholesky factor of `qd`, for sampling process noise. `None` when
    /// the step noise is identically zero.
    pub fn noise_factor(&self) -> Option<Matrix4<f64>> {
        if self.qd.norm() == 0.0 {
            return None;
        }
        // qd can be numerically semi-definite; a tiny diagonal shift keeps the
        // factorization stable without visibly perturbing samples.
        let shift = 1e-300_f64.max(self.qd.norm() * 1e-15);
        nalgebra::Cholesky::new(self.qd + Matrix4::identity() * shift).map(|c| c.l())
    }
}

/// Joint Gaussian over position and velocity at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    time: f64,
    mean: Vector4<f64>,
    covariance: Matrix4<f64>,
}

impl GaussianBelief {
    /// The covariance is symmetrized and must have eigenvalues above `-1e-12`.
    pub fn new(time: f64, mean: Vector4<f64>, covariance: Matrix4<f64>) -> Result<Self, MotionError> {
        let sym = 0.5 * (covariance + covariance.transpose());
        let min_eig = nalgebra::SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let floor = 1e-12 * (1.0 + sym.norm());
        if min_eig < -floor {
            return Err(MotionError::NonPsdCovariance(min_eig));
        }
        Ok(Self { time, mean, covariance: sym })
    }

    pub fn deterministic(time: f64, position: Point2, velocity: Vector2<f64>) -> Self {
        Self {
            time,
            mean: Vector4::new(position.x, position.y, velocity.x, velocity.y),
            covariance: Matrix4::zeros(),
        }
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    #[inline]
    pub fn mean(&self) -> Vector4<f64> {
        self.mean
    }

    #[inline]
    pub fn covariance(&self) -> Matrix4<f64> {
        self.covariance
    }

    #[inline]
    pub fn position_mean(&self) -> Vector2<f64> {
        Vector2::new(self.mean[0], self.mean[1])
    }

    #[inline]
    pub fn velocity_mean(&self) -> Vector2<f64> {
        Vector2::new(self.mean[2], self.mean[3])
    }

    #[inline]
    pub fn position_cov(&self) -> Matrix2<f64> {
        self.covariance.fixed_view::<2, 2>(0, 0).into_owned()
    }

    #[inline]
    pub fn velocity_cov(&self) -> Matrix2<f64> {
        self.covariance.fixed_view::<2, 2>(2, 2).into_owned()
    }

    /// Cross-covariance block `cov(R, V)`.
    #[inline]
    pub fn position_velocity_cov(&self) -> Matrix2<f64> {
        self.covariance.fixed_view::<2, 2>(0, 2).into_owned()
    }
}

/// One exact-discretization step: mean through the transition and input map,
/// covariance through the discrete Lyapunov update.
pub fn propagate(model: &LtiModel, belief: &GaussianBelief, dt: f64) -> Result<GaussianBelief, MotionError> {
    assert!(dt > 0.0, "dt must be positive");
    let d = DiscreteModel::new(model, dt);
    propagate_discrete(&d, model.control_input, belief)
}

/// Step with a precomputed discretization (hot-loop form of [`propagate`]).
pub fn propagate_discrete(
    d: &DiscreteModel,
    control: Vector2<f64>,
    belief: &GaussianBelief,
) -> Result<GaussianBelief, MotionError> {
    let mean = d.psi * belief.mean() + d.gamma * control;
    let cov = d.psi * belief.covariance() * d.psi.transpose() + d.qd;
    let sym = 0.5 * (cov + cov.transpose());
    let min_eig = nalgebra::SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -1e-9 {
        return Err(MotionError::NonPsdCovariance(min_eig));
    }
    Ok(GaussianBelief { time: belief.time() + d.dt, mean, covariance: sym })
}

/// Position variance of the noise-driven double integrator after `t` seconds
/// from zero initial covariance: `sigma^2 t^3 / 3`.
pub fn open_loop_variance(sigma: f64, t: f64) -> f64 {
    debug_assert!(sigma > 0.0 && t >= 0.0);
    sigma * sigma * t * t * t / 3.0
}

/// Fixed point of the covariance propagation for a stable closed-loop model,
/// found by time-doubling of the Van Loan discretization. Errors with
/// [`MotionError::UnstableModel`] when the covariance trace keeps growing.
pub fn steady_state_covariance(model: &LtiModel) -> Result<Matrix4<f64>, MotionError> {
    let base = DiscreteModel::new(model, 1e-2);
    let mut psi = base.psi;
    let mut q = base.qd;
    let mut growth_streak = 0u32;
    for _ in 0..90 {
        let q_next = psi * q * psi.transpose() + q;
        let q_next = 0.5 * (q_next + q_next.transpose());
        let psi_next = psi * psi;
        let delta = (q_next - q).norm();
        if delta <= 1e-14 * q_next.norm().max(1e-30) {
            // confirm the fixed point against the one-step recursion
            let residual = (base.psi * q_next * base.psi.transpose() + base.qd - q_next).norm();
            if residual > 1e-10 * q_next.norm().max(1.0) {
                return Err(MotionError::UnstableModel);
            }
            return Ok(q_next);
        }
        if q_next.trace() > q.trace() * (1.0 + 1e-12) {
            growth_streak += 1;
            if growth_streak >= 10 && psi_next.norm() > 1.0 {
                return Err(MotionError::UnstableModel);
            }
        } else {
            growth_streak = 0;
        }
        psi = psi_next;
        q = q_next;
    }
    Err(MotionError::UnstableModel)
}

/// Steady-state position variance along the unit direction `n`.
pub fn steady_state_position_variance(model: &LtiModel, n: Vector2<f64>) -> Result<f64, MotionError> {
    let c = steady_state_covariance(model)?;
    let cr = c.fixed_view::<2, 2>(0, 0).into_owned();
    Ok((n.transpose() * cr * n)[0].max(0.0))
}

/// One straight-line stage of a mean plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanStage {
    pub start: Point2,
    pub velocity: Vector2<f64>,
    pub duration: f64,
}

impl PlanStage {
    pub fn end(&self) -> Point2 {
        Point2::from_vector(self.start.vector() + self.velocity * self.duration)
    }
}

/// Piecewise-linear mean plan: consecutive stages must join continuously.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPlan {
    stages: Vec<PlanStage>,
    starts: Vec<f64>,
    total: f64,
}

impl PiecewiseLinearPlan {
    pub fn new(stages: Vec<PlanStage>) -> Result<Self, MotionError> {
        if stages.is_empty() {
            return Err(MotionError::EmptyPlan);
        }
        let mut starts = Vec::with_capacity(stages.len());
        let mut t = 0.0;
        for (i, s) in stages.iter().enumerate() {
            if !(s.duration > 0.0) {
                return Err(MotionError::NonPositiveDuration(i));
            }
            if i > 0 {
                let prev_end = stages[i - 1].end();
                if (prev_end.vector() - s.start.vector()).norm() > 1e-9 {
                    return Err(MotionError::DiscontinuousPlan(i - 1, i));
                }
            }
            starts.push(t);
            t += s.duration;
        }
        Ok(Self { stages, starts, total: t })
    }

    /// Single stage from a start point with constant velocity.
    pub fn constant_velocity(start: Point2, velocity: Vector2<f64>, duration: f64) -> Result<Self, MotionError> {
        Self::new(vec![PlanStage { start, velocity, duration }])
    }

    #[inline]
    pub fn stages(&self) -> &[PlanStage] {
        &self.stages
    }

    #[inline]
    pub fn total_duration(&self) -> f64 {
        self.total
    }

    /// Start time of stage `i`.
    #[inline]
    pub fn stage_start_time(&self, i: usize) -> f64 {
        self.starts[i]
    }

    /// Index of the stage active at `t` (final instant maps to the last stage).
    pub fn stage_index(&self, t: f64) -> Result<usize, MotionError> {
        if t < -1e-9 || t > self.total + 1e-9 {
            return Err(MotionError::OutOfHorizon { t, total: self.total });
        }
        let idx = match self.starts.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        Ok(idx.min(self.stages.len() - 1))
    }

    /// Mean position and velocity at `t`.
    pub fn mean(&self, t: f64) -> Result<(Point2, Vector2<f64>), MotionError> {
        let i = self.stage_index(t)?;
        let s = &self.stages[i];
        let tau = t - self.starts[i];
        let pos = Point2::from_vector(s.start.vector() + s.velocity * tau);
        Ok((pos, s.velocity))
    }

    pub fn transformed(&self, t: &crate::geometry::RigidTransform) -> Self {
        let stages = self
            .stages
            .iter()
            .map(|s| PlanStage {
                start: t.apply_point(s.start),
                velocity: t.apply_vector(s.velocity),
                duration: s.duration,
            })
            .collect();
        Self { stages, starts: self.starts.clone(), total: self.total }
    }
}

/// Mean position and velocity of `plan` at time `t` (free-function form).
pub fn plan_mean(plan: &PiecewiseLinearPlan, t: f64) -> Result<(Point2, Vector2<f64>), MotionError> {
    plan.mean(t)
}
