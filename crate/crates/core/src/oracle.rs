//! Monte Carlo ground truth: simulate trajectories of the full planar model
//! and count first crossings of the boundary within the horizon.
//!
//! Determinism contract: every trajectory draws from its own counter-derived
//! ChaCha stream and the crossing counts are summed as integers, so a fixed
//! seed yields identical estimates regardless of the degree of parallelism.

use nalgebra::{Matrix4, Vector2, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::exec;
use crate::geometry::{ConflictBoundary, Point2};
use crate::motion::{DiscreteModel, LtiModel, PiecewiseLinearPlan};

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_samples: u64,
    pub dt: f64,
    pub seed: u64,
    /// Closed loop only: start from zero deviation so the covariance transient
    /// is simulated (`true`), or draw the initial deviation from the settled
    /// distribution (`false`).
    pub transient: bool,
}

impl McConfig {
    pub fn new(n_samples: u64, dt: f64, seed: u64) -> Self {
        Self { n_samples, dt, seed, transient: true }
    }
}

/// Estimated crossing probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

/// Crossing parameter of the motion step `p -> q` against the segment
/// `a -> b`: the fraction of the step at which they intersect, when they do.
pub(crate) fn step_crossing_parameter(
    p: Vector2<f64>,
    q: Vector2<f64>,
    a: Vector2<f64>,
    b: Vector2<f64>,
) -> Option<f64> {
    let r = q - p;
    let s = b - a;
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-300 {
        return None;
    }
    let ap = a - p;
    let t = (ap.x * s.y - ap.y * s.x) / denom;
    let u = (ap.x * r.y - ap.y * r.x) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// One propagation part of a step: transition, optional noise factor, and an
/// optional reference-velocity jump applied after it.
type StepPart = (Matrix4<f64>, Option<Matrix4<f64>>, Option<Vector2<f64>>);

/// Time grid, plan reference and per-step transition data shared by all
/// trajectories of one scenario.
struct TrajectoryEngine {
    times: Vec<f64>,
    plan_pos: Vec<Vector2<f64>>,
    /// Per-step propagation parts, applied in order; plain steps have exactly
    /// one part, steps containing stage switches are split at the switch.
    steps: Vec<Vec<StepPart>>,
    initial_noise: Option<Matrix4<f64>>,
    boundary: ConflictBoundary,
    bbox: (Point2, Point2),
}

impl TrajectoryEngine {
    fn new(
        model: &LtiModel,
        plan: &PiecewiseLinearPlan,
        boundary: &ConflictBoundary,
        horizon: f64,
        cfg: &McConfig,
    ) -> Self {
        let times = crate::conflict::time_grid(horizon, cfg.dt);
        let plan_pos: Vec<Vector2<f64>> = times
            .iter()
            .map(|&t| plan.mean(t).expect("plan covers horizon").0.vector())
            .collect();

        let closed_loop = model.feedback_gain.is_some();
        let base = DiscreteModel::new(model, cfg.dt);
        let base_noise = base.noise_factor();

        // stage-switch times strictly inside the horizon
        let mut switch_times: Vec<(f64, Vector2<f64>)> = Vec::new();
        if closed_loop {
            for i in 1..plan.stages().len() {
                let ts = plan.stage_start_time(i);
                if ts > 0.0 && ts < horizon {
                    let dv = plan.stages()[i].velocity - plan.stages()[i - 1].velocity;
                    switch_times.push((ts, dv));
                }
            }
        }

        let mut steps = Vec::with_capacity(times.len() - 1);
        for k in 0..times.len() - 1 {
            let (t0, t1) = (times[k], times[k + 1]);
            let inside: Vec<&(f64, Vector2<f64>)> = switch_times
                .iter()
                .filter(|(ts, _)| *ts > t0 + 1e-12 && *ts <= t1 - 1e-12)
                .collect();
            if inside.is_empty() && (t1 - t0 - cfg.dt).abs() < 1e-12 {
                steps.push(vec![(base.psi, base_noise, None)]);
            } else if inside.is_empty() {
                let d = DiscreteModel::new(model, t1 - t0);
                steps.push(vec![(d.psi, d.noise_factor(), None)]);
            } else {
                let mut parts = Vec::new();
                let mut cursor = t0;
                for (ts, dv) in inside {
                    let d = DiscreteModel::new(model, ts - cursor);
                    parts.push((d.psi, d.noise_factor(), Some(-dv)));
                    cursor = *ts;
                }
                let d = DiscreteModel::new(model, t1 - cursor);
                parts.push((d.psi, d.noise_factor(), None));
                steps.push(parts);
            }
        }

        // settled initial deviation for the no-transient closed-loop run
        let initial_noise = if closed_loop && !cfg.transient {
            crate::motion::steady_state_covariance(model)
                .ok()
                .and_then(|c| nalgebra::Cholesky::new(c + Matrix4::identity() * 1e-15).map(|f| f.l()))
        } else {
            None
        };

        Self {
            times,
            plan_pos,
            steps,
            initial_noise,
            boundary: boundary.clone(),
            bbox: boundary.bounding_box(),
        }
    }

    fn rng_for(&self, seed: u64, trajectory: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        rng
    }

    fn initial_deviation(&self, rng: &mut ChaCha8Rng) -> Vector4<f64> {
        match &self.initial_noise {
            Some(l) => l * draw_normal4(rng),
            None => Vector4::zeros(),
        }
    }

    /// Earliest boundary crossing of the movement step `p -> q`, as a step
    /// fraction.
    fn step_crossing(&self, p: Vector2<f64>, q: Vector2<f64>) -> Option<f64> {
        // reject steps whose bounding box misses the boundary's
        let (min, max) = &self.bbox;
        if p.x.max(q.x) < min.x || p.x.min(q.x) > max.x || p.y.max(q.y) < min.y || p.y.min(q.y) > max.y
        {
            return None;
        }
        let mut first: Option<f64> = None;
        for seg in self.boundary.segments() {
            if let Some(t) =
                step_crossing_parameter(p, q, seg.p1().vector(), seg.p2().vector())
            {
                first = Some(match first {
                    Some(best) => best.min(t),
                    None => t,
                });
            }
        }
        first
    }

    /// First crossing time of one simulated trajectory, if any.
    fn simulate_first_crossing(&self, seed: u64, trajectory: u64) -> Option<f64> {
        let mut rng = self.rng_for(seed, trajectory);
        let mut dev = self.initial_deviation(&mut rng);
        let mut pos = self.plan_pos[0] + dev.fixed_rows::<2>(0).into_owned();
        for k in 0..self.steps.len() {
            for (psi, noise, jump) in &self.steps[k] {
                dev = psi * dev;
                if let Some(l) = noise {
                    dev += l * draw_normal4(&mut rng);
                }
                if let Some(dv) = jump {
                    dev[2] += dv.x;
                    dev[3] += dv.y;
                }
            }
            let next = self.plan_pos[k + 1] + dev.fixed_rows::<2>(0).into_owned();
            if let Some(frac) = self.step_crossing(pos, next) {
                let t0 = self.times[k];
                return Some(t0 + frac * (self.times[k + 1] - t0));
            }
            pos = next;
        }
        None
    }

    /// Full position path of one trajectory on the time grid.
    fn simulate_path(&self, seed: u64, trajectory: u64) -> Vec<Point2> {
        let mut rng = self.rng_for(seed, trajectory);
        let mut dev = self.initial_deviation(&mut rng);
        let mut path = Vec::with_capacity(self.times.len());
        path.push(Point2::from_vector(self.plan_pos[0] + dev.fixed_rows::<2>(0).into_owned()));
        for k in 0..self.steps.len() {
            for (psi, noise, jump) in &self.steps[k] {
                dev = psi * dev;
                if let Some(l) = noise {
                    dev += l * draw_normal4(&mut rng);
                }
                if let Some(dv) = jump {
                    dev[2] += dv.x;
                    dev[3] += dv.y;
                }
            }
            path.push(Point2::from_vector(self.plan_pos[k + 1] + dev.fixed_rows::<2>(0).into_owned()));
        }
        path
    }
}

#[inline]
fn draw_normal4(rng: &mut ChaCha8Rng) -> Vector4<f64> {
    Vector4::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    )
}

/// Sample one trajectory of `model` about `plan` on the `cfg` grid,
/// deterministically for `(cfg.seed, stream)`.
pub fn sample_trajectory(
    model: &LtiModel,
    plan: &PiecewiseLinearPlan,
    horizon: f64,
    cfg: &McConfig,
    stream: u64,
) -> Vec<Point2> {
    let empty = ConflictBoundary::from_parts(Vec::new(), Vec::new()).expect("empty boundary");
    let engine = TrajectoryEngine::new(model, plan, &empty, horizon, cfg);
    engine.simulate_path(cfg.seed, stream)
}

/// Earliest time at which a path's movement segment intersects any boundary
/// segment, by linear interpolation inside the step.
pub fn first_crossing(path: &[Point2], times: &[f64], boundary: &ConflictBoundary) -> Option<f64> {
    assert_eq!(path.len(), times.len());
    let (min, max) = boundary.bounding_box();
    for k in 0..path.len().saturating_sub(1) {
        let p = path[k].vector();
        let q = path[k + 1].vector();
        if p.x.max(q.x) < min.x || p.x.min(q.x) > max.x || p.y.max(q.y) < min.y || p.y.min(q.y) > max.y
        {
            continue;
        }
        let mut first: Option<f64> = None;
        for seg in boundary.segments() {
            if let Some(t) = step_crossing_parameter(p, q, seg.p1().vector(), seg.p2().vector()) {
                first = Some(match first {
                    Some(best) => best.min(t),
                    None => t,
                });
            }
        }
        if let Some(frac) = first {
            return Some(times[k] + frac * (times[k + 1] - times[k]));
        }
    }
    None
}

/// Fraction of sampled trajectories with a first crossing within the horizon.
pub fn estimate(
    model: &LtiModel,
    plan: &PiecewiseLinearPlan,
    boundary: &ConflictBoundary,
    horizon: f64,
    cfg: &McConfig,
) -> McEstimate {
    let engine = TrajectoryEngine::new(model, plan, boundary, horizon, cfg);
    let hits = exec::sum_indexed_u64(cfg.n_samples, |i| {
        engine.simulate_first_crossing(cfg.seed, i).is_some() as u64
    });
    let n = cfg.n_samples as f64;
    let p = hits as f64 / n;
    McEstimate {
        probability: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        n_samples: cfg.n_samples,
    }
}
