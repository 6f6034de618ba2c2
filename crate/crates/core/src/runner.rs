//! Experiment runner: execute a scenario's method list, emit the results
//! table and per-segment diagnostics, time methods in isolation, and write
//! plot data.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::baselines::{self, BaselineError, ParkVariant};
use crate::conflict::{self, ConflictError, ConflictQuery, MethodResult};
use crate::oracle::{self, McConfig};
use crate::scenario::{MethodSpec, ScenarioConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("method {method}: {reason}")]
    Method { method: String, reason: String },
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn method_err(method: &str, e: impl std::fmt::Display) -> RunError {
    RunError::Method { method: method.to_owned(), reason: e.to_string() }
}

/// One row of the results table.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub method: String,
    pub partition: String,
    pub runtime_ms: f64,
    pub probability_pct: f64,
}

/// Results of all configured methods, in configuration order.
#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Comma-separated rendering with the fixed header; probabilities carry
    /// three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,partition,runtime_ms,probability_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.3},{:.3}\n",
                r.method, r.partition, r.runtime_ms, r.probability_pct
            ));
        }
        out
    }
}

/// Execute one method of the scenario.
pub fn run_method(config: &ScenarioConfig, spec: &MethodSpec) -> Result<MethodResult, RunError> {
    let label = spec.label();
    match spec {
        MethodSpec::Proposed => {
            let query = ConflictQuery::new(
                config.plan.clone(),
                config.model_kind.clone(),
                config.method_boundary.clone(),
                config.horizon,
                config.dt,
            )
            .map_err(|e: ConflictError| method_err(label, e))?;
            conflict::boundary_conflict_probability(&query).map_err(|e| method_err(label, e))
        }
        MethodSpec::MonteCarlo => {
            let start = Instant::now();
            let cfg = McConfig {
                n_samples: config.mc.samples,
                dt: config.mc.dt,
                seed: config.mc.seed,
                transient: config.mc.transient,
            };
            let est = oracle::estimate(
                &config.model,
                &config.plan,
                &config.mc_boundary,
                config.horizon,
                &cfg,
            );
            Ok(MethodResult {
                probability: est.probability,
                per_segment: Vec::new(),
                runtime: start.elapsed().as_secs_f64(),
                method_name: label.to_owned(),
            })
        }
        MethodSpec::Vdj(cfg) => baselines::pf_vdj(
            &config.model_kind,
            &config.plan,
            &config.shape,
            config.horizon,
            config.dt,
            cfg,
        )
        .map_err(|e: BaselineError| method_err(label, e)),
        MethodSpec::ParkPublished(cfg) => baselines::pf_park(
            &config.model_kind,
            &config.plan,
            &config.shape,
            config.horizon,
            config.dt,
            cfg,
            ParkVariant::Published,
        )
        .map_err(|e| method_err(label, e)),
        MethodSpec::ParkAltered(cfg) => baselines::pf_park(
            &config.model_kind,
            &config.plan,
            &config.shape,
            config.horizon,
            config.dt,
            cfg,
            ParkVariant::Altered,
        )
        .map_err(|e| method_err(label, e)),
        MethodSpec::Icp { mode, cfg } => baselines::icp_to_conflict(
            &config.model_kind,
            &config.plan,
            &config.shape,
            cfg,
            config.horizon,
            *mode,
        )
        .map_err(|e| method_err(label, e)),
    }
}

/// Output of [`run`]: the table plus the per-segment diagnostics of the
/// proposed method, when it ran.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub table: ResultTable,
    pub diagnostics_csv: Option<String>,
}

/// Execute every configured method in order.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput, RunError> {
    let mut out = RunOutput::default();
    for spec in &config.methods {
        let result = run_method(config, spec)?;
        if !result.per_segment.is_empty() {
            let mut csv = String::from("segment,probability_pct,skipped_stages,validity_bounded\n");
            for (i, p, d) in &result.per_segment {
                let skipped = d
                    .skipped_stages
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                csv.push_str(&format!(
                    "{},{:.6},{},{}\n",
                    i,
                    p * 100.0,
                    skipped,
                    d.validity_truncated
                ));
            }
            out.diagnostics_csv = Some(csv);
        }
        out.table.rows.push(ResultRow {
            method: result.method_name.clone(),
            partition: spec.partition_label(),
            runtime_ms: result.runtime * 1e3,
            probability_pct: result.probability * 100.0,
        });
    }
    Ok(out)
}

/// Execute the scenario and write `results.csv` (and proposed-method
/// diagnostics) under `out_dir`.
pub fn run_to_dir(config: &ScenarioConfig, out_dir: impl AsRef<Path>) -> Result<RunOutput, RunError> {
    let out_dir = out_dir.as_ref();
    let output = run(config)?;
    write_file(out_dir, "results.csv", &output.table.to_csv())?;
    if let Some(diag) = &output.diagnostics_csv {
        write_file(out_dir, "diagnostics_proposed.csv", diag)?;
    }
    Ok(output)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(content.as_bytes()).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Mean and standard deviation of wall-clock runtimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSummary {
    pub mean_s: f64,
    pub std_s: f64,
    pub repeats: usize,
}

/// Time `f` over `repeats` isolated invocations after `warmup` discarded
/// runs. Only the call itself is inside the clock.
pub fn time_runs(repeats: usize, warmup: usize, mut f: impl FnMut()) -> TimingSummary {
    assert!(repeats >= 1);
    for _ in 0..warmup {
        f();
    }
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t0 = Instant::now();
        f();
        samples.push(t0.elapsed().as_secs_f64());
    }
    let mean = samples.iter().sum::<f64>() / repeats as f64;
    let var = if repeats > 1 {
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (repeats - 1) as f64
    } else {
        0.0
    };
    TimingSummary { mean_s: mean, std_s: var.sqrt(), repeats }
}

/// One row of the timing summary.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: String,
    pub partition: String,
    pub mean_ms: f64,
    pub std_ms: f64,
}

/// Per-method timing over isolated repeats, excluding parsing and I/O. The
/// Monte Carlo oracle is skipped, as in published comparisons.
pub fn bench(config: &ScenarioConfig, repeats: usize, warmup: usize) -> Result<Vec<BenchRow>, RunError> {
    let mut rows = Vec::new();
    for spec in &config.methods {
        if matches!(spec, MethodSpec::MonteCarlo) {
            continue;
        }
        let timing = time_runs(repeats, warmup, || {
            let _ = run_method(config, spec).expect("method must run to be benched");
        });
        rows.push(BenchRow {
            method: spec.label().to_owned(),
            partition: spec.partition_label(),
            mean_ms: timing.mean_s * 1e3,
            std_ms: timing.std_s * 1e3,
        });
    }
    Ok(rows)
}

/// Write plot data: the nominal path, the boundary segments (method
/// approximation), the actual circle when there is one, and `n_paths` sampled
/// trajectories. All files are plain numeric text.
pub fn emit_plot_data(
    config: &ScenarioConfig,
    n_paths: usize,
    out_dir: impl AsRef<Path>,
) -> Result<(), RunError> {
    let out_dir = out_dir.as_ref();
    let times = crate::conflict::time_grid(config.horizon, config.dt);

    let mut nominal = String::new();
    for &t in &times {
        let (p, _) = config.plan.mean(t).map_err(|e| method_err("plot-data", e))?;
        nominal.push_str(&format!("{t:.6} {:.6} {:.6}\n", p.x, p.y));
    }
    write_file(out_dir, "nominal.txt", &nominal)?;

    let mut segs = String::new();
    for s in config.method_boundary.segments() {
        segs.push_str(&format!(
            "{:.6} {:.6} {:.6} {:.6}\n",
            s.p1().x,
            s.p1().y,
            s.p2().x,
            s.p2().y
        ));
    }
    write_file(out_dir, "boundary_segments.txt", &segs)?;

    if let baselines::FluxShape::Circle { center, radius } = &config.shape {
        write_file(
            out_dir,
            "boundary_circle.txt",
            &format!("{:.6} {:.6} {:.6}\n", center.x, center.y, radius),
        )?;
    }

    let cfg = McConfig {
        n_samples: n_paths as u64,
        dt: config.mc.dt,
        seed: config.mc.seed,
        transient: config.mc.transient,
    };
    for i in 0..n_paths {
        let path = oracle::sample_trajectory(
            &config.model,
            &config.plan,
            config.horizon,
            &cfg,
            i as u64,
        );
        let mc_times = crate::conflict::time_grid(config.horizon, config.mc.dt);
        let mut text = String::new();
        for (t, p) in mc_times.iter().zip(&path) {
            text.push_str(&format!("{t:.6} {:.6} {:.6}\n", p.x, p.y));
        }
        write_file(out_dir, &format!("path_{i:03}.txt"), &text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_op_timing_is_fast_and_excludes_io() {
        let t = time_runs(1000, 100, || {});
        assert!(t.mean_s < 10e-6, "no-op mean {} s", t.mean_s);
        assert_eq!(t.repeats, 1000);
    }

    #[test]
    fn single_repeat_has_zero_std() {
        let t = time_runs(1, 0, || {
            std::hint::black_box(3.0_f64.sqrt());
        });
        assert_eq!(t.std_s, 0.0);
    }

    #[test]
    fn csv_header_is_pinned() {
        let table = ResultTable {
            rows: vec![ResultRow {
                method: "proposed".into(),
                partition: "-".into(),
                runtime_ms: 1.234567,
                probability_pct: 11.359123,
            }],
        };
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "method,partition,runtime_ms,probability_pct");
        assert_eq!(lines.next().unwrap(), "proposed,-,1.235,11.359");
    }
}
