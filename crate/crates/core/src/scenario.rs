//! Scenario configuration files: structured plain-text key/value sections
//! describing the plan, motion model, boundary, horizon, Monte Carlo settings
//! and the method list. Field names carry units (`_m`, `_mps`, `_s`).

use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use serde::Deserialize;
use thiserror::Error;

use crate::baselines::{FluxShape, IcpConfig, IcpMode, PfConfig, PfPartition};
use crate::conflict::ModelKind;
use crate::geometry::{
    approximate_circle, circumscribe_circle_arc, ConflictBoundary, Point2, Segment,
};
use crate::motion::{LtiModel, PiecewiseLinearPlan, PlanStage};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] Box<toml::de::Error>),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    plan: PlanSection,
    model: ModelSection,
    horizon: HorizonSection,
    boundary: BoundarySection,
    #[serde(default)]
    monte_carlo: Option<McSection>,
    #[serde(default)]
    methods: Vec<MethodSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanSection {
    start_m: [f64; 2],
    stages: Vec<StageSection>,
}

/// One plan stage: either an explicit velocity and duration, or a target
/// point with a speed.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageSection {
    #[serde(default)]
    velocity_mps: Option<[f64; 2]>,
    #[serde(default)]
    duration_s: Option<f64>,
    #[serde(default)]
    target_m: Option<[f64; 2]>,
    #[serde(default)]
    speed_mps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    kind: String,
    q_diag_m2ps3: [f64; 2],
    #[serde(default)]
    gain_p_ps2: Option<[f64; 2]>,
    #[serde(default)]
    gain_d_ps1: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct HorizonSection {
    t_h_s: f64,
    dt_s: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundarySection {
    kind: String,
    #[serde(default)]
    center_m: Option<[f64; 2]>,
    #[serde(default)]
    radius_m: Option<f64>,
    #[serde(default)]
    covering: Option<String>,
    #[serde(default)]
    segment_count: Option<usize>,
    #[serde(default)]
    arc_start_deg: Option<f64>,
    #[serde(default)]
    arc_end_deg: Option<f64>,
    #[serde(default)]
    mc_polygon_segments: Option<usize>,
    #[serde(default)]
    interior_m: Option<[f64; 2]>,
    #[serde(default)]
    segments: Vec<SegmentSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentSection {
    p1_m: [f64; 2],
    p2_m: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct McSection {
    #[serde(default = "default_samples")]
    samples: u64,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    dt_s: Option<f64>,
    #[serde(default = "default_true")]
    transient: bool,
}

fn default_samples() -> u64 {
    1_000_000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MethodSection {
    name: String,
    #[serde(default)]
    partition_count: Option<usize>,
    #[serde(default)]
    partition_length_m: Option<f64>,
    #[serde(default)]
    rectangles: Option<usize>,
    #[serde(default)]
    accumulation_period_s: Option<f64>,
}

/// A method to execute, with its resolved parameters and partition label.
#[derive(Debug, Clone)]
pub enum MethodSpec {
    Proposed,
    MonteCarlo,
    Vdj(PfConfig),
    ParkPublished(PfConfig),
    ParkAltered(PfConfig),
    Icp { mode: IcpMode, cfg: IcpConfig },
}

impl MethodSpec {
    pub fn label(&self) -> &'static str {
        match self {
            MethodSpec::Proposed => "proposed",
            MethodSpec::MonteCarlo => "mc",
            MethodSpec::Vdj(_) => "vdj",
            MethodSpec::ParkPublished(_) => "park_published",
            MethodSpec::ParkAltered(_) => "park_altered",
            MethodSpec::Icp { mode, .. } => mode.label(),
        }
    }

    pub fn partition_label(&self) -> String {
        match self {
            MethodSpec::Proposed | MethodSpec::MonteCarlo => "-".to_owned(),
            MethodSpec::Vdj(cfg) | MethodSpec::ParkPublished(cfg) | MethodSpec::ParkAltered(cfg) => {
                match cfg.partition {
                    PfPartition::Count(n) => n.to_string(),
                    PfPartition::IntervalLength(h) => format!("{h}"),
                }
            }
            MethodSpec::Icp { cfg, .. } => cfg.n_rectangles.to_string(),
        }
    }
}

/// Monte Carlo settings resolved from the file.
#[derive(Debug, Clone, Copy)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
    pub dt: f64,
    pub transient: bool,
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub plan: PiecewiseLinearPlan,
    pub model: LtiModel,
    pub model_kind: ModelKind,
    /// The actual conflict-region shape (flux and ICP baselines, plotting).
    pub shape: FluxShape,
    /// Segment approximation evaluated by the proposed method.
    pub method_boundary: ConflictBoundary,
    /// Boundary the Monte Carlo oracle counts crossings of: the actual shape,
    /// finely polygonized for circles.
    pub mc_boundary: ConflictBoundary,
    pub horizon: f64,
    pub dt: f64,
    pub mc: McSettings,
    pub methods: Vec<MethodSpec>,
}

impl ScenarioConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(Box::new)?;
        resolve(file)
    }
}

fn resolve(file: ScenarioFile) -> Result<ScenarioConfig, ScenarioError> {
    let horizon = file.horizon.t_h_s;
    let dt = file.horizon.dt_s;
    if !(horizon > 0.0) {
        return Err(invalid("horizon.t_h_s", "must be positive"));
    }
    if !(dt > 0.0) || dt > horizon {
        return Err(invalid("horizon.dt_s", "must satisfy 0 < dt_s <= t_h_s"));
    }

    let plan = resolve_plan(&file.plan)?;
    if plan.total_duration() + 1e-9 < horizon {
        return Err(invalid(
            "plan.stages",
            format!(
                "stages cover {:.6} s but horizon.t_h_s is {:.6} s",
                plan.total_duration(),
                horizon
            ),
        ));
    }

    let (model, model_kind) = resolve_model(&file.model)?;
    let (shape, method_boundary, mc_boundary) = resolve_boundary(&file.boundary)?;

    let mc = {
        let section = file.monte_carlo.clone();
        let samples = section.as_ref().map_or_else(default_samples, |s| s.samples);
        let seed = section.as_ref().and_then(|s| s.seed).unwrap_or(0);
        let mc_dt = section.as_ref().and_then(|s| s.dt_s).unwrap_or(dt);
        if !(mc_dt > 0.0) {
            return Err(invalid("monte_carlo.dt_s", "must be positive"));
        }
        McSettings {
            samples,
            seed,
            dt: mc_dt,
            transient: section.as_ref().is_none_or(|s| s.transient),
        }
    };

    let mut methods = Vec::with_capacity(file.methods.len());
    for m in &file.methods {
        methods.push(resolve_method(m, &shape)?);
    }

    Ok(ScenarioConfig {
        name: file.name,
        plan,
        model,
        model_kind,
        shape,
        method_boundary,
        mc_boundary,
        horizon,
        dt,
        mc,
        methods,
    })
}

fn resolve_plan(section: &PlanSection) -> Result<PiecewiseLinearPlan, ScenarioError> {
    if section.stages.is_empty() {
        return Err(invalid("plan.stages", "at least one stage is required"));
    }
    let mut start = Point2::new(section.start_m[0], section.start_m[1]);
    let mut stages = Vec::with_capacity(section.stages.len());
    for (i, s) in section.stages.iter().enumerate() {
        let stage = match (s.velocity_mps, s.duration_s, s.target_m, s.speed_mps) {
            (Some(v), Some(d), None, None) => {
                PlanStage { start, velocity: Vector2::new(v[0], v[1]), duration: d }
            }
            (None, None, Some(target), Some(speed)) => {
                if !(speed > 0.0) {
                    return Err(invalid("plan.stages.speed_mps", format!("stage {i}: must be positive")));
                }
                let leg = Vector2::new(target[0], target[1]) - start.vector();
                let dist = leg.norm();
                if dist < 1e-12 {
                    return Err(invalid(
                        "plan.stages.target_m",
                        format!("stage {i}: target coincides with the stage start"),
                    ));
                }
                PlanStage { start, velocity: leg / dist * speed, duration: dist / speed }
            }
            _ => {
                return Err(invalid(
                    "plan.stages",
                    format!("stage {i}: give either velocity_mps + duration_s or target_m + speed_mps"),
                ))
            }
        };
        start = stage.end();
        stages.push(stage);
    }
    PiecewiseLinearPlan::new(stages)
        .map_err(|e| invalid("plan.stages", e.to_string()))
}

fn resolve_model(section: &ModelSection) -> Result<(LtiModel, ModelKind), ScenarioError> {
    let q = Vector2::new(section.q_diag_m2ps3[0], section.q_diag_m2ps3[1]);
    if q.x < 0.0 || q.y < 0.0 {
        return Err(invalid("model.q_diag_m2ps3", "entries must be nonnegative"));
    }
    match section.kind.as_str() {
        "open_loop" => {
            if section.gain_p_ps2.is_some() || section.gain_d_ps1.is_some() {
                return Err(invalid("model.gain_p_ps2", "gains are only valid for closed_loop models"));
            }
            let model = LtiModel::double_integrator(q);
            let kind = ModelKind::OpenLoop { q: Matrix2::from_diagonal(&q) };
            Ok((model, kind))
        }
        "closed_loop" => {
            let gp = section
                .gain_p_ps2
                .ok_or_else(|| invalid("model.gain_p_ps2", "required for closed_loop models"))?;
            let gd = section
                .gain_d_ps1
                .ok_or_else(|| invalid("model.gain_d_ps1", "required for closed_loop models"))?;
            let model = LtiModel::closed_loop(q, Vector2::new(gp[0], gp[1]), Vector2::new(gd[0], gd[1]));
            let kind = ModelKind::closed_loop_from(&model)
                .map_err(|e| invalid("model", format!("steady state: {e}")))?;
            Ok((model, kind))
        }
        other => Err(invalid("model.kind", format!("unknown kind `{other}`"))),
    }
}

fn resolve_boundary(
    section: &BoundarySection,
) -> Result<(FluxShape, ConflictBoundary, ConflictBoundary), ScenarioError> {
    match section.kind.as_str() {
        "circle" => {
            let center = section
                .center_m
                .ok_or_else(|| invalid("boundary.center_m", "required for circle boundaries"))?;
            let center = Point2::new(center[0], center[1]);
            let radius = section
                .radius_m
                .ok_or_else(|| invalid("boundary.radius_m", "required for circle boundaries"))?;
            if !(radius > 0.0) {
                return Err(invalid("boundary.radius_m", "must be positive"));
            }
            let count = section.segment_count.unwrap_or(6);
            let a0 = section.arc_start_deg.unwrap_or(-90.0).to_radians();
            let a1 = section.arc_end_deg.unwrap_or(90.0).to_radians();
            let covering = section.covering.as_deref().unwrap_or("tangent");
            let method_boundary = match covering {
                "tangent" => circumscribe_circle_arc(center, radius, count, a0, a1),
                "inscribed" => approximate_circle(center, radius, count, a0, a1),
                other => {
                    return Err(invalid(
                        "boundary.covering",
                        format!("unknown covering `{other}` (expected tangent or inscribed)"),
                    ))
                }
            }
            .map_err(|e| invalid("boundary", e.to_string()))?;
            let fine = section.mc_polygon_segments.unwrap_or(720);
            let mc_boundary = approximate_circle(
                center,
                radius,
                fine.max(16),
                -std::f64::consts::PI,
                std::f64::consts::PI,
            )
            .map_err(|e| invalid("boundary.mc_polygon_segments", e.to_string()))?;
            Ok((FluxShape::Circle { center, radius }, method_boundary, mc_boundary))
        }
        "segments" => {
            if section.segments.is_empty() {
                return Err(invalid("boundary.segments", "at least one segment is required"));
            }
            let interior = section
                .interior_m
                .ok_or_else(|| invalid("boundary.interior_m", "required for segment boundaries"))?;
            let segments = section
                .segments
                .iter()
                .map(|s| {
                    Segment::new(
                        Point2::new(s.p1_m[0], s.p1_m[1]),
                        Point2::new(s.p2_m[0], s.p2_m[1]),
                    )
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| invalid("boundary.segments", e.to_string()))?;
            let boundary =
                ConflictBoundary::from_segments(segments, Point2::new(interior[0], interior[1]))
                    .map_err(|e| invalid("boundary", e.to_string()))?;
            Ok((FluxShape::Segments(boundary.clone()), boundary.clone(), boundary))
        }
        other => Err(invalid("boundary.kind", format!("unknown kind `{other}`"))),
    }
}

fn resolve_method(section: &MethodSection, shape: &FluxShape) -> Result<MethodSpec, ScenarioError> {
    let pf = |section: &MethodSection| -> Result<PfConfig, ScenarioError> {
        let partition = match (section.partition_count, section.partition_length_m) {
            (Some(n), None) => PfPartition::Count(n),
            (None, Some(h)) => PfPartition::IntervalLength(h),
            _ => {
                return Err(invalid(
                    "methods",
                    format!(
                        "{}: give exactly one of partition_count (circles) or partition_length_m (segments)",
                        section.name
                    ),
                ))
            }
        };
        match (shape, partition) {
            (FluxShape::Circle { .. }, PfPartition::Count(_)) => Ok(PfConfig { partition }),
            (FluxShape::Segments(_), PfPartition::IntervalLength(_)) => Ok(PfConfig { partition }),
            _ => Err(invalid(
                "methods",
                format!("{}: partition kind does not match the boundary kind", section.name),
            )),
        }
    };
    let icp = |section: &MethodSection, mode: IcpMode| -> Result<MethodSpec, ScenarioError> {
        if !matches!(shape, FluxShape::Circle { .. }) {
            return Err(invalid(
                "methods",
                format!("{}: instantaneous conflict probability requires a circle boundary", section.name),
            ));
        }
        Ok(MethodSpec::Icp {
            mode,
            cfg: IcpConfig {
                n_rectangles: section.rectangles.unwrap_or(20),
                accumulation_period: section.accumulation_period_s.unwrap_or(0.15),
            },
        })
    };
    match section.name.as_str() {
        "proposed" => Ok(MethodSpec::Proposed),
        "mc" => Ok(MethodSpec::MonteCarlo),
        "vdj" => Ok(MethodSpec::Vdj(pf(section)?)),
        "park_published" => Ok(MethodSpec::ParkPublished(pf(section)?)),
        "park_altered" => Ok(MethodSpec::ParkAltered(pf(section)?)),
        "icp_max" => icp(section, IcpMode::Max),
        "icp_acc_last" => icp(section, IcpMode::AccumulateLast),
        "icp_acc_all" => icp(section, IcpMode::AccumulateAll),
        other => Err(invalid("methods", format!("unknown method `{other}`"))),
    }
}
