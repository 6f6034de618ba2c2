//! Probabilistic conflict prediction for planar vehicles with linear-Gaussian
//! dynamics.
//!
//! The crate predicts the probability that a vehicle whose motion is described
//! by a linear, Gaussian, time-invariant model enters a keep-out region bounded
//! by straight-line segments within a finite horizon. The core predictor
//! projects the planar process onto each boundary segment's normal, evaluates a
//! closed-form first-passage-time density for the resulting scalar process, and
//! weighs it by the conditional probability mass lying on the segment at the
//! crossing instant. One numerical integral over time per segment remains.
//!
//! Alongside the predictor the crate ships, for validation and speed
//! comparison:
//!
//! - two probability-flow baselines ([`baselines::pf_vdj`], [`baselines::pf_park`]),
//! - an instantaneous-conflict-probability baseline ([`baselines::icp_pour`])
//!   with three conflict-probability post-processings,
//! - a trajectory-sampling Monte Carlo oracle ([`oracle`]),
//! - a scenario-file runner and timing harness ([`scenario`], [`runner`]).
//!
//! Heavy inner loops (Monte Carlo trajectories, per-segment evaluation) run on
//! rayon when the default `parallel` feature is enabled and fall back to plain
//! iterators otherwise. Results are bit-identical across thread counts.

// validation sites use `!(x > 0.0)` so NaN fails the check too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod conflict;
pub mod erf;
pub mod exec;
pub mod fptd;
pub mod geometry;
pub mod motion;
pub mod oracle;
pub mod reduction;
pub mod runner;
pub mod scenario;

pub use conflict::{ConflictQuery, MethodResult, ModelKind, SegmentDiagnostics, TailPolicy};
pub use fptd::FptdEvaluator;
pub use geometry::{ConflictBoundary, Point2, RigidTransform, Segment};
pub use motion::{GaussianBelief, LtiModel, PiecewiseLinearPlan, PlanStage};
pub use oracle::{McConfig, McEstimate};
pub use reduction::{Reduced1DProcess, VarianceLaw};
pub use scenario::ScenarioConfig;
