//! Acceptance suite: every published-comparison and structural requirement,
//! one test per criterion, each printing a pass line with the measured
//! values. Tests share a lock so the timing criteria run without competing
//! load from sibling tests.

use std::sync::{Mutex, MutexGuard, OnceLock};

use fptc_core::baselines::{accumulate_icp, icp_series, IcpConfig, IcpMode};
use fptc_core::conflict::{
    boundary_conflict_probability, ConflictQuery, ModelKind, TailPolicy,
};
use fptc_core::exec::{self, with_parallelism};
use fptc_core::fptd::{fptd_general, FptdError, FptdEvaluator};
use fptc_core::geometry::circumscribe_circle_arc;
use fptc_core::oracle::{estimate, McConfig, McEstimate};
use fptc_core::reduction::{Reduced1DProcess, VarianceLaw};
use fptc_core::runner::{run_method, time_runs};
use fptc_core::scenario::{MethodSpec, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn lock() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = format!("{}/../../scenarios/{name}.scenario", env!("CARGO_MANIFEST_DIR"));
    ScenarioConfig::from_path(path).expect("bundled scenario parses")
}

/// Open-loop Monte Carlo at the full configured sample count, shared between
/// criteria 2 and 8.
fn open_loop_mc() -> &'static McEstimate {
    static MC: OnceLock<McEstimate> = OnceLock::new();
    MC.get_or_init(|| {
        let config = scenario("openloop");
        assert!(config.mc.samples >= 1_000_000);
        let cfg = McConfig {
            n_samples: config.mc.samples,
            dt: config.mc.dt,
            seed: config.mc.seed,
            transient: config.mc.transient,
        };
        estimate(&config.model, &config.plan, &config.mc_boundary, config.horizon, &cfg)
    })
}

fn method_pct(config: &ScenarioConfig, pick: impl Fn(&MethodSpec) -> bool) -> (f64, f64) {
    let spec = config
        .methods
        .iter()
        .find(|m| pick(m))
        .expect("method configured in the bundled scenario");
    let r = run_method(config, spec).expect("method runs");
    (r.probability * 100.0, r.runtime)
}

fn pf_count(spec: &MethodSpec) -> Option<usize> {
    use fptc_core::baselines::PfPartition;
    let cfg = match spec {
        MethodSpec::Vdj(c) | MethodSpec::ParkPublished(c) | MethodSpec::ParkAltered(c) => c,
        _ => return None,
    };
    match cfg.partition {
        PfPartition::Count(n) => Some(n),
        PfPartition::IntervalLength(_) => None,
    }
}

#[test]
fn criterion_1_open_loop_proposed_method() {
    let _guard = lock();
    let config = scenario("openloop");
    let (pct, runtime) = method_pct(&config, |m| matches!(m, MethodSpec::Proposed));
    assert!(
        (pct - 11.359).abs() <= 0.15,
        "proposed {pct:.3}% vs published 11.359% (tolerance 0.15)"
    );
    assert!(runtime < 1.0, "proposed runtime {runtime:.3} s exceeds 1 s");
    println!(
        "[PASS] criterion 1: open-loop proposed = {pct:.3}% (published 11.359 +- 0.15), runtime {:.3} ms",
        runtime * 1e3
    );
}

#[test]
fn criterion_2_open_loop_monte_carlo() {
    let _guard = lock();
    let mc = open_loop_mc();
    let pct = mc.probability * 100.0;
    assert!(
        (pct - 11.344).abs() <= 0.10,
        "MC {pct:.3}% vs published 11.344% (tolerance 0.10)"
    );
    // the predictor itself stays within 0.2 points of the oracle
    let config = scenario("openloop");
    let (proposed_pct, _) = method_pct(&config, |m| matches!(m, MethodSpec::Proposed));
    assert!(
        (proposed_pct - pct).abs() < 0.2,
        "|proposed - MC| = {:.3} points",
        (proposed_pct - pct).abs()
    );
    println!(
        "[PASS] criterion 2: open-loop Monte Carlo = {pct:.3}% +- {:.3}% at {} samples (published 11.344 +- 0.10); |proposed - MC| = {:.3}",
        mc.std_error * 100.0,
        mc.n_samples,
        (proposed_pct - pct).abs()
    );
}

#[test]
fn criterion_3_open_loop_baselines() {
    let _guard = lock();
    let config = scenario("openloop");
    type Pick = Box<dyn Fn(&MethodSpec) -> bool>;
    let checks: [(&str, f64, Pick); 6] = [
        (
            "vdj(20)",
            11.402,
            Box::new(|m: &MethodSpec| matches!(m, MethodSpec::Vdj(_)) && pf_count(m) == Some(20)),
        ),
        (
            "park_published(20)",
            9.939,
            Box::new(|m: &MethodSpec| matches!(m, MethodSpec::ParkPublished(_)) && pf_count(m) == Some(20)),
        ),
        (
            "park_altered(20)",
            11.480,
            Box::new(|m: &MethodSpec| matches!(m, MethodSpec::ParkAltered(_)) && pf_count(m) == Some(20)),
        ),
        (
            "icp_max(20)",
            1.375,
            Box::new(|m: &MethodSpec| {
                matches!(m, MethodSpec::Icp { mode: IcpMode::Max, cfg } if cfg.n_rectangles == 20)
            }),
        ),
        (
            "icp_acc_last(20)",
            37.927,
            Box::new(|m: &MethodSpec| {
                matches!(m, MethodSpec::Icp { mode: IcpMode::AccumulateLast, cfg } if cfg.n_rectangles == 20)
            }),
        ),
        (
            "icp_acc_all(20)",
            14.743,
            Box::new(|m: &MethodSpec| {
                matches!(m, MethodSpec::Icp { mode: IcpMode::AccumulateAll, cfg } if cfg.n_rectangles == 20)
            }),
        ),
    ];
    for (label, published, pick) in checks {
        let (pct, _) = method_pct(&config, pick);
        assert!(
            (pct - published).abs() <= 0.5,
            "{label}: {pct:.3}% vs published {published}% (tolerance 0.5)"
        );
        println!("[PASS] criterion 3: {label} = {pct:.3}% (published {published} +- 0.5)");
    }
}

#[test]
fn criterion_4_timing_orderings() {
    let _guard = lock();
    let open = scenario("openloop");
    let time_of = |config: &ScenarioConfig, pick: &dyn Fn(&MethodSpec) -> bool, repeats, warmup| {
        let spec = config.methods.iter().find(|m| pick(m)).expect("configured");
        time_runs(repeats, warmup, || {
            let _ = std::hint::black_box(run_method(config, spec).expect("method runs"));
        })
        .mean_s
    };

    let proposed = time_of(&open, &|m| matches!(m, MethodSpec::Proposed), 200, 50);
    let vdj20 = time_of(
        &open,
        &|m| matches!(m, MethodSpec::Vdj(_)) && pf_count(m) == Some(20),
        200,
        50,
    );
    let alt20 = time_of(
        &open,
        &|m| matches!(m, MethodSpec::ParkAltered(_)) && pf_count(m) == Some(20),
        200,
        50,
    );
    assert!(
        proposed < vdj20 && proposed < alt20,
        "proposed {proposed:.2e} s must undercut vdj(20) {vdj20:.2e} s and park_altered(20) {alt20:.2e} s"
    );
    println!(
        "[PASS] criterion 4a: open-loop means: proposed {:.3} ms < vdj(20) {:.3} ms, park_altered(20) {:.3} ms",
        proposed * 1e3,
        vdj20 * 1e3,
        alt20 * 1e3
    );

    let closed = scenario("closedloop");
    let is_pf_005 = |m: &MethodSpec| {
        use fptc_core::baselines::PfPartition;
        let cfg = match m {
            MethodSpec::Vdj(c) | MethodSpec::ParkPublished(c) | MethodSpec::ParkAltered(c) => c,
            _ => return false,
        };
        matches!(cfg.partition, PfPartition::IntervalLength(h) if (h - 0.05).abs() < 1e-12)
    };
    let proposed_cl = time_of(&closed, &|m| matches!(m, MethodSpec::Proposed), 200, 50);
    for (label, pick) in [
        ("vdj", &(|m: &MethodSpec| matches!(m, MethodSpec::Vdj(_)) && is_pf_005(m)) as &dyn Fn(&MethodSpec) -> bool),
        ("park_published", &|m: &MethodSpec| {
            matches!(m, MethodSpec::ParkPublished(_)) && is_pf_005(m)
        }),
        ("park_altered", &|m: &MethodSpec| {
            matches!(m, MethodSpec::ParkAltered(_)) && is_pf_005(m)
        }),
    ] {
        let pf = time_of(&closed, pick, 40, 10);
        assert!(
            pf >= 10.0 * proposed_cl,
            "{label}(0.05) {pf:.2e} s must be >= 10x proposed {proposed_cl:.2e} s"
        );
        println!(
            "[PASS] criterion 4b: closed-loop {label}(0.05 m) {:.2} ms >= 10x proposed {:.3} ms ({:.1}x)",
            pf * 1e3,
            proposed_cl * 1e3,
            pf / proposed_cl
        );
    }
}

#[test]
fn criterion_5_closed_loop_predictor_vs_oracle() {
    let _guard = lock();
    let config = scenario("closedloop");
    assert!(config.mc.samples >= 1_000_000);
    let (proposed_pct, _) = method_pct(&config, |m| matches!(m, MethodSpec::Proposed));
    let cfg = McConfig {
        n_samples: config.mc.samples,
        dt: config.mc.dt,
        seed: config.mc.seed,
        transient: config.mc.transient,
    };
    let mc = estimate(&config.model, &config.plan, &config.mc_boundary, config.horizon, &cfg);
    let mc_pct = mc.probability * 100.0;
    let gap = (proposed_pct - mc_pct).abs();
    assert!(
        gap <= 2.0,
        "closed-loop |proposed - MC| = {gap:.3} points (proposed {proposed_pct:.3}%, MC {mc_pct:.3}%)"
    );
    println!(
        "[PASS] criterion 5: closed-loop proposed {proposed_pct:.3}% vs MC {mc_pct:.3}% (+- {:.3}%), gap {gap:.3} <= 2.0",
        mc.std_error * 100.0
    );
}

#[test]
fn criterion_6_fptd_property_suite() {
    let _guard = lock();

    // closed-loop normalization, start 8 standard deviations out
    let c_ss = 0.36_f64;
    let a = 8.0 * c_ss.sqrt();
    let process = Reduced1DProcess::new(a, 0.0, 1.2, 0.0, VarianceLaw::Constant { c_ss }).unwrap();
    let ev = FptdEvaluator::new(process).unwrap();
    let t_star = a / 1.2;
    let n = 400_000usize;
    let h = 10.0 * t_star / n as f64;
    let mut integral = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        integral += w * ev.density(i as f64 * h).unwrap();
    }
    integral *= h;
    assert!(
        (integral - 1.0).abs() <= 1e-6,
        "closed-loop normalization integral = {integral}"
    );
    println!("[PASS] criterion 6a: closed-loop FPTD integrates to {integral:.9} (1 +- 1e-6)");

    // density equals the negative survival derivative on 1000-point grids
    // spanning the support where central differences of the survival CDF can
    // resolve the density (above ~1e-6; the finite-difference noise floor is
    // around 5e-12 absolute)
    let cases: [(&str, Reduced1DProcess, f64); 2] = [
        ("constant", process, 4.0 * t_star),
        (
            "cubic",
            Reduced1DProcess::new(95.0, 0.0, 9.0, 0.0, VarianceLaw::Cubic { sigma_n: 2.2 }).unwrap(),
            0.97 * (3.0 * 95.0 / 9.0),
        ),
    ];
    for (label, p, probe_end) in cases {
        let ev = FptdEvaluator::new(p).unwrap();
        let resolvable = |t: f64| fptd_general(&p, t).is_ok_and(|f| f >= 1e-6);
        let probes = 20_000;
        let t_lo = (1..probes)
            .map(|k| probe_end * k as f64 / probes as f64)
            .find(|&t| resolvable(t))
            .expect("density has support");
        let t_hi = (1..probes)
            .map(|k| probe_end * k as f64 / probes as f64)
            .rfind(|&t| resolvable(t))
            .unwrap();
        let fd = 1e-5;
        for k in 0..1000 {
            let t = t_lo + (t_hi - t_lo) * k as f64 / 999.0;
            let analytic = fptd_general(&p, t).unwrap();
            let numeric = -(ev.survival(t + fd).unwrap() - ev.survival(t - fd).unwrap()) / (2.0 * fd);
            let rel = ((numeric - analytic) / analytic).abs();
            assert!(rel < 1e-4, "{label} at t = {t}: relative error {rel}");
        }
        println!(
            "[PASS] criterion 6b: {label} density matches -dF_S/dt at 1000 grid points on [{t_lo:.3}, {t_hi:.3}] (rel < 1e-4)"
        );
    }

    // open-loop validity truncation at t = 3a/mu is enforced
    let p = Reduced1DProcess::new(20.0, 0.0, 4.0, 0.0, VarianceLaw::Cubic { sigma_n: 1.3 }).unwrap();
    let ev = FptdEvaluator::new(p).unwrap();
    let end = ev.validity_end().unwrap();
    assert!((end - 15.0).abs() < 1e-12);
    assert!(matches!(ev.density(end), Err(FptdError::OutOfValidityDomain { .. })));
    assert!(matches!(ev.density(end + 3.0), Err(FptdError::OutOfValidityDomain { .. })));
    assert_eq!(ev.density_truncated(end + 3.0), 0.0);

    // the truncating tail policy caps the open-loop scenario's result
    let open = scenario("openloop");
    let mut query = ConflictQuery::new(
        open.plan.clone(),
        open.model_kind.clone(),
        open.method_boundary.clone(),
        open.horizon,
        open.dt,
    )
    .unwrap();
    let extended = boundary_conflict_probability(&query).unwrap();
    query.tail_policy = TailPolicy::Truncate;
    let truncated = boundary_conflict_probability(&query).unwrap();
    assert!(truncated.probability <= extended.probability);
    assert!(
        extended.per_segment.iter().any(|(_, _, d)| d.validity_truncated),
        "at least one segment's validity bound falls inside the horizon"
    );
    println!(
        "[PASS] criterion 6c: validity bound enforced at 3a/mu; truncating policy gives {:.3}% <= {:.3}%",
        truncated.probability * 100.0,
        extended.probability * 100.0
    );
}

#[test]
fn criterion_7_one_dimensional_oracle_equivalence() {
    let _guard = lock();
    let n_paths = 100_000u64;

    // cubic law: the noise-driven kinematic process (velocity random walk),
    // exactly discretized, in the drift-dominated regime the method targets
    let mut rng = ChaCha8Rng::seed_from_u64(20240613);
    for case in 0..20 {
        let mu: f64 = rng.random_range(3.0..10.0);
        let t_star: f64 = rng.random_range(4.0..15.0);
        let a = mu * t_star;
        let sigma = loop {
            let s: f64 = rng.random_range(0.5..2.5);
            let spread = (s * s * t_star.powi(3) / 3.0).sqrt();
            if spread <= 0.45 * a {
                break s;
            }
        };
        let t_h = (t_star * rng.random_range(0.8..1.15)).min(0.92 * 3.0 * a / mu);
        let mirror = rng.random_bool(0.5);
        let (alpha, mu_s) = if mirror { (-a, -mu) } else { (a, mu) };

        let process =
            Reduced1DProcess::new(alpha, 0.0, mu_s, 0.0, VarianceLaw::Cubic { sigma_n: sigma }).unwrap();
        let cdf = FptdEvaluator::new(process).unwrap().cdf(t_h);

        let steps = 2000usize;
        let dt = t_h / steps as f64;
        let (s_rr, s_rv, s_vv) = (
            sigma * sigma * dt * dt * dt / 3.0,
            sigma * sigma * dt * dt / 2.0,
            sigma * sigma * dt,
        );
        let l11 = s_rr.sqrt();
        let l21 = s_rv / l11;
        let l22 = (s_vv - l21 * l21).max(0.0).sqrt();
        let hits: u64 = exec::sum_indexed_u64(n_paths, |i| {
            let mut path_rng = ChaCha8Rng::seed_from_u64(9000 + case);
            path_rng.set_stream(i);
            let (mut x, mut v) = (0.0_f64, 0.0_f64);
            for k in 0..steps {
                let z1: f64 = StandardNormal.sample(&mut path_rng);
                let z2: f64 = StandardNormal.sample(&mut path_rng);
                x += v * dt + l11 * z1;
                v += l21 * z1 + l22 * z2;
                if mu * ((k + 1) as f64 * dt) + x >= a {
                    return 1;
                }
            }
            0
        });
        let p_mc = hits as f64 / n_paths as f64;
        let se = (p_mc * (1.0 - p_mc) / n_paths as f64).sqrt();
        assert!(
            (cdf - p_mc).abs() <= 3.0 * se,
            "cubic case {case}: cdf {cdf:.4} vs mc {p_mc:.4} (se {se:.5})"
        );
    }
    println!("[PASS] criterion 7: 20 cubic-law cases within 3 standard errors at 1e5 paths");

    // constant law: the settled (variance-preserving) process member; the
    // transient-dynamics error is measured separately by criterion 5
    for case in 0..20 {
        let c_ss: f64 = rng.random_range(0.05..0.5);
        let mu: f64 = rng.random_range(0.5..1.5);
        let sp = c_ss.sqrt();
        let a: f64 = rng.random_range(5.0..8.0) * sp;
        let t0: f64 = rng.random_range(0.0..2.0);
        let t_star = t0 + a / mu;
        let t_h = t_star + rng.random_range(-0.5..1.0) * sp / mu;
        let mirror = rng.random_bool(0.5);
        let (alpha, mu_s) = if mirror { (-a, -mu) } else { (a, mu) };
        // r0 = 0 at stage start t0; the evaluator extrapolates the gap to t = 0
        let process =
            Reduced1DProcess::new(alpha, 0.0, mu_s, t0, VarianceLaw::Constant { c_ss }).unwrap();
        let cdf = FptdEvaluator::new(process).unwrap().cdf(t_h);

        let steps = 2000usize;
        let dt = (t_h - t0) / steps as f64;
        let hits: u64 = exec::sum_indexed_u64(n_paths, |i| {
            let mut path_rng = ChaCha8Rng::seed_from_u64(41_000 + case);
            path_rng.set_stream(i);
            let offset: f64 = {
                let z: f64 = StandardNormal.sample(&mut path_rng);
                sp * z
            };
            for k in 0..=steps {
                let t = t0 + k as f64 * dt;
                if mu * (t - t0) + offset >= a {
                    return 1;
                }
            }
            0
        });
        let p_mc = hits as f64 / n_paths as f64;
        let se = (p_mc * (1.0 - p_mc) / n_paths as f64).sqrt();
        assert!(
            (cdf - p_mc).abs() <= 3.0 * se,
            "constant case {case}: cdf {cdf:.4} vs mc {p_mc:.4} (se {se:.5})"
        );
    }
    println!("[PASS] criterion 7: 20 constant-law cases within 3 standard errors at 1e5 paths");
}

#[test]
fn criterion_8_structural_invariants() {
    let _guard = lock();
    let open = scenario("openloop");
    let base = ConflictQuery::new(
        open.plan.clone(),
        open.model_kind.clone(),
        open.method_boundary.clone(),
        open.horizon,
        open.dt,
    )
    .unwrap();
    let p0 = boundary_conflict_probability(&base).unwrap().probability;

    // collinear split of every segment leaves the total unchanged
    {
        use fptc_core::geometry::{ConflictBoundary, Segment};
        let mut segments = Vec::new();
        let mut normals = Vec::new();
        for (s, n) in base.boundary.segments().iter().zip(base.boundary.normals()) {
            let mid = s.midpoint();
            segments.push(Segment::new(s.p1(), mid).unwrap());
            segments.push(Segment::new(mid, s.p2()).unwrap());
            normals.push(*n);
            normals.push(*n);
        }
        let split = ConflictQuery::new(
            base.plan.clone(),
            base.model.clone(),
            ConflictBoundary::from_parts(segments, normals).unwrap(),
            base.horizon,
            base.dt,
        )
        .unwrap();
        let p1 = boundary_conflict_probability(&split).unwrap().probability;
        assert!(
            (p0 - p1).abs() < 1e-10,
            "segment split moved the total by {:.3e}",
            (p0 - p1).abs()
        );
        println!("[PASS] criterion 8a: segment-split invariance, |delta| = {:.2e} < 1e-10", (p0 - p1).abs());
    }

    // rigid-frame invariance
    {
        use fptc_core::geometry::RigidTransform;
        use nalgebra::Vector2;
        let t = RigidTransform::rotation_then_translation(1.234, Vector2::new(-73.0, 41.5));
        let q_rot = match &base.model {
            ModelKind::OpenLoop { q } => t.rotation() * q * t.rotation().transpose(),
            _ => unreachable!("open-loop scenario"),
        };
        let moved = ConflictQuery::new(
            base.plan.transformed(&t),
            ModelKind::OpenLoop { q: q_rot },
            base.boundary.transformed(&t),
            base.horizon,
            base.dt,
        )
        .unwrap();
        let p1 = boundary_conflict_probability(&moved).unwrap().probability;
        assert!(
            (p0 - p1).abs() < 1e-10,
            "rigid transform moved the total by {:.3e}",
            (p0 - p1).abs()
        );
        println!("[PASS] criterion 8b: rigid-transform invariance, |delta| = {:.2e} < 1e-10", (p0 - p1).abs());
    }

    // ICP ordering on the bundled scenario and on randomized series
    {
        let cfg = IcpConfig { n_rectangles: 20, accumulation_period: 0.15 };
        let series = icp_series(&open.model_kind, &open.plan, &open.shape, &cfg, open.horizon).unwrap();
        let max = accumulate_icp(&series, IcpMode::Max);
        let all = accumulate_icp(&series, IcpMode::AccumulateAll);
        let last = accumulate_icp(&series, IcpMode::AccumulateLast);
        assert!(max <= all + 1e-12 && all <= last + 1e-12, "{max} {all} {last}");

        // randomized series with the accumulation-grid structure: the t = 0
        // sample is zero (the belief starts at zero covariance outside the
        // region) and the recursions consume the samples after it
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let len = rng.random_range(2..80);
            let mut series: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..0.3)).collect();
            series[0] = 0.0;
            let max = accumulate_icp(&series, IcpMode::Max);
            let all = accumulate_icp(&series, IcpMode::AccumulateAll);
            let last = accumulate_icp(&series, IcpMode::AccumulateLast);
            assert!(max <= all + 1e-12 && all <= last + 1e-12, "{max} {all} {last}");
        }
        println!("[PASS] criterion 8c: ICP ordering max <= acc_all <= acc_last on scenario and 500 random series");
    }

    // probability-flow upper bound against the oracle
    {
        let mc = open_loop_mc();
        let (vdj_pct, _) = method_pct(&open, |m| matches!(m, MethodSpec::Vdj(_)) && pf_count(m) == Some(20));
        let bound = (mc.probability - 3.0 * mc.std_error) * 100.0;
        assert!(
            vdj_pct >= bound,
            "vdj(20) {vdj_pct:.3}% below MC - 3se = {bound:.3}%"
        );
        println!("[PASS] criterion 8d: vdj(20) {vdj_pct:.3}% >= MC - 3se = {bound:.3}%");
    }
}

#[test]
fn criterion_9_scaling_and_parallel_determinism() {
    let _guard = lock();
    let open = scenario("openloop");
    use fptc_core::geometry::Point2;
    use std::f64::consts::FRAC_PI_2;

    let query_with = |n_segments: usize| {
        let boundary =
            circumscribe_circle_arc(Point2::new(0.0, 0.0), 5.0, n_segments, -FRAC_PI_2, FRAC_PI_2)
                .unwrap();
        ConflictQuery::new(
            open.plan.clone(),
            open.model_kind.clone(),
            boundary,
            open.horizon,
            open.dt,
        )
        .unwrap()
    };

    // doubling the segment count doubles the runtime (single worker, so the
    // per-segment work is serialized); interleaved batches and a median keep
    // scheduler spikes from skewing either arm
    let q_base = query_with(12);
    let q_double = query_with(24);
    let (mut base_means, mut double_means) = (Vec::new(), Vec::new());
    with_parallelism(Some(1), || {
        let _ = boundary_conflict_probability(&q_double).unwrap();
        for _ in 0..7 {
            base_means.push(
                time_runs(50, 5, || {
                    let _ = std::hint::black_box(boundary_conflict_probability(&q_base).unwrap());
                })
                .mean_s,
            );
            double_means.push(
                time_runs(50, 5, || {
                    let _ = std::hint::black_box(boundary_conflict_probability(&q_double).unwrap());
                })
                .mean_s,
            );
        }
    });
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let t_base = median(&mut base_means);
    let t_double = median(&mut double_means);
    let ratio = t_double / t_base;
    assert!(
        (1.5..=2.5).contains(&ratio),
        "24 vs 12 segments runtime ratio {ratio:.3} outside 2 +- 25% ({:.3} ms vs {:.3} ms)",
        t_double * 1e3,
        t_base * 1e3
    );
    println!(
        "[PASS] criterion 9a: doubling segments scales runtime by {ratio:.2} ({:.3} ms -> {:.3} ms)",
        t_base * 1e3,
        t_double * 1e3
    );

    // determinism: identical bits for any parallelism degree
    let q12 = query_with(12);
    let reference = with_parallelism(Some(1), || boundary_conflict_probability(&q12).unwrap());
    let mc_cfg = McConfig::new(20_000, open.dt, 99);
    let mc_reference = with_parallelism(Some(1), || {
        estimate(&open.model, &open.plan, &open.mc_boundary, open.horizon, &mc_cfg)
    });
    for threads in [2usize, 4] {
        let (result, mc) = with_parallelism(Some(threads), || {
            (
                boundary_conflict_probability(&q12).unwrap(),
                estimate(&open.model, &open.plan, &open.mc_boundary, open.horizon, &mc_cfg),
            )
        });
        assert_eq!(
            result.probability.to_bits(),
            reference.probability.to_bits(),
            "threads = {threads}: total changed"
        );
        for ((_, a, _), (_, b, _)) in result.per_segment.iter().zip(&reference.per_segment) {
            assert_eq!(a.to_bits(), b.to_bits(), "threads = {threads}: segment value changed");
        }
        assert_eq!(mc.probability.to_bits(), mc_reference.probability.to_bits());
    }
    println!("[PASS] criterion 9b: results bit-identical across 1, 2 and 4 worker threads");
}
