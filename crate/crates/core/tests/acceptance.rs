//! Acceptance criteria 1 to 11, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the criteria execute sequentially on
//! one thread, which the timing criteria need. Datasets are read from
//! `MARSNET_ABALONE` / `MARSNET_WINE`, falling back to `data/abalone.data`
//! and `data/winequality-red.csv` at the workspace root. A missing dataset
//! fails the criteria that need it.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    max_gradient_error, oracle_forward, probe_points, pruned_not_worse, random_lattice, random_model, synthetic,
    tiny_instance,
};
use marsnet::experiment::{run_comparison_on, run_timing_on, ArmReport, Prepared, ScalingConfig};
use marsnet::{
    compile_lattice, fit_mars, forward_pass, mars_to_network, prepare, reshape_to, run_scaling, ExperimentConfig,
    ExperimentReport, FitConfig,
};

// Tolerances and thresholds, one per criterion.
const CONVERSION_TOL: f64 = 1e-9;
const RESHAPE_TOL: f64 = 1e-12;
const GRADIENT_REL_TOL: f64 = 1e-5;
const LATTICE_TOL: f64 = 1e-9;
const ABALONE_CONVERTED_MAX: f64 = 0.02;
const ABALONE_RANDOM_MIN: f64 = 0.05;
const ORDERING_MIN_SEEDS: usize = 4;
const WINE_GAP: f64 = 5.0;
const TIMING_MAX_EPOCHS: f64 = 2.0;
const SLOPE_RANGE: (f64, f64) = (0.7, 1.4);
const SHIFT_MAX: f64 = 0.5;
const SUPPORT_DRIFT_MAX: f64 = 0.2;
const PROBES: usize = 1000;
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

type Outcome = Result<Verdict, String>;

fn workspace_file(var: &str, default: &str) -> PathBuf {
    std::env::var_os(var)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(default))
}

fn abalone_path() -> PathBuf {
    workspace_file("MARSNET_ABALONE", "data/abalone.data")
}

fn wine_path() -> PathBuf {
    workspace_file("MARSNET_WINE", "data/winequality-red.csv")
}

fn require(path: &PathBuf) -> Result<(), String> {
    if path.is_file() {
        Ok(())
    } else {
        Err(format!("dataset not found at {}", path.display()))
    }
}

fn conversion_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut largest = 0;
    for i in 0..20u64 {
        let d = 1 + (i as usize % 11);
        let m = 1 + (i as usize * 7) % 30;
        let model = random_model(d, m, 1000 + i);
        largest = largest.max(model.n_terms());
        let (net, _) = mars_to_network(&model).map_err(|e| e.to_string())?;
        for x in probe_points(d, PROBES, -0.5, 1.5, i) {
            worst = worst.max((net.forward(&x).unwrap()[0] - model.eval(&x).unwrap()).abs());
        }
    }
    Ok(verdict(
        worst <= CONVERSION_TOL,
        format!("20 models up to {largest} terms, max deviation {worst:.3e} (tol {CONVERSION_TOL:e})"),
    ))
}

fn reshape_invariance() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (i, extra) in [1usize, 8, 32, 64].into_iter().enumerate() {
        let data = synthetic(300, 6, 0.05, 2000 + i as u64);
        let model = fit_mars(&data, &FitConfig::default()).map_err(|e| e.to_string())?.model;
        let (net, _) = mars_to_network(&model).map_err(|e| e.to_string())?;
        let h = net.widths()[1];
        for layers in 0..=3 {
            let mut target = vec![6];
            target.extend(std::iter::repeat(h + extra).take(1 + layers));
            target.push(1);
            let grown = reshape_to(&net, &target).map_err(|e| e.to_string())?;
            for x in probe_points(6, PROBES, -0.5, 1.5, cases) {
                worst = worst.max((grown.forward(&x).unwrap()[0] - net.forward(&x).unwrap()[0]).abs());
            }
            cases += 1;
        }
    }
    Ok(verdict(
        worst <= RESHAPE_TOL,
        format!("{cases} reshapes up to +64 units and +3 layers, max deviation {worst:.3e} (tol {RESHAPE_TOL:e})"),
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut mismatches = Vec::new();
    let mut prune_failures = Vec::new();
    let mut selections = 0;
    for seed in 0..50u64 {
        let (data, m) = tiny_instance(seed);
        let expected = oracle_forward(&data, m, 3.0);
        selections += expected.len();
        for incremental in [false, true] {
            let cfg = FitConfig {
                max_terms: m,
                incremental,
                ..FitConfig::default()
            };
            let steps = forward_pass(&data, &cfg).map_err(|e| e.to_string())?;
            let got: Vec<_> = steps.iter().filter_map(|s| s.added).collect();
            if got != expected {
                mismatches.push((seed, incremental));
            }
            let model = fit_mars(&data, &cfg).map_err(|e| e.to_string())?.model;
            if !pruned_not_worse(&data, &model, &steps.last().unwrap().model, cfg.knot_penalty) {
                prune_failures.push((seed, incremental));
            }
        }
    }
    Ok(verdict(
        mismatches.is_empty() && prune_failures.is_empty(),
        format!(
            "50 instances, {selections} oracle selections, {} selection mismatches, {} pruning violations",
            mismatches.len(),
            prune_failures.len()
        ),
    ))
}

fn gradient_correctness() -> Outcome {
    let worst = (0..20).map(max_gradient_error).fold(0.0, f64::max);
    Ok(verdict(
        worst <= GRADIENT_REL_TOL,
        format!("20 networks, max relative error {worst:.3e} (tol {GRADIENT_REL_TOL:e})"),
    ))
}

fn lattice_soundness() -> Outcome {
    let mut worst = 0.0f64;
    let mut depth_violations = 0;
    for seed in 0..50u64 {
        let d = 1 + (seed as usize % 4);
        let m = 1 + (seed as usize * 3 % 8);
        let s = 1 + (seed as usize * 5 % 8);
        let l = random_lattice(d, m, s, 3000 + seed);
        let (net, report) = compile_lattice(&l).map_err(|e| e.to_string())?;
        if report.relu_layers > l.depth_bound() {
            depth_violations += 1;
        }
        for x in probe_points(d, PROBES, -3.0, 3.0, seed) {
            worst = worst.max((net.forward(&x).unwrap()[0] - l.eval(&x).unwrap()).abs());
        }
    }
    Ok(verdict(
        worst <= LATTICE_TOL && depth_violations == 0,
        format!("50 lattices, max deviation {worst:.3e} (tol {LATTICE_TOL:e}), {depth_violations} depth-bound violations"),
    ))
}

/// One Abalone comparison serves criteria 6, 7 and 11.
fn abalone_comparison() -> Result<(ExperimentReport, Prepared), String> {
    let path = abalone_path();
    require(&path)?;
    let mut cfg = ExperimentConfig::abalone(path);
    cfg.seeds = SEEDS.to_vec();
    cfg.train.epochs = 100;
    cfg.eval_epochs = vec![50, 100];
    let data = prepare(&cfg.dataset).map_err(|e| e.to_string())?;
    let report = run_comparison_on(&cfg, &data).map_err(|e| e.to_string())?;
    Ok((report, data))
}

fn initial_gap(report: &ExperimentReport) -> Verdict {
    let ok = report
        .seeds
        .iter()
        .all(|s| s.converted.before < ABALONE_CONVERTED_MAX && s.random.before > ABALONE_RANDOM_MIN);
    let conv: Vec<String> = report.seeds.iter().map(|s| format!("{:.4}", s.converted.before)).collect();
    let rand: Vec<String> = report.seeds.iter().map(|s| format!("{:.4}", s.random.before)).collect();
    verdict(
        ok,
        format!(
            "converted [{}] < {ABALONE_CONVERTED_MAX}, random [{}] > {ABALONE_RANDOM_MIN}",
            conv.join(", "),
            rand.join(", ")
        ),
    )
}

fn convergence_ordering(report: &ExperimentReport) -> Verdict {
    let at50 = |a: &ArmReport| a.checkpoints.iter().find(|c| c.epoch == 50).and_then(|c| c.test_mse);
    let mut wins = 0;
    let mut pairs = Vec::new();
    for s in &report.seeds {
        match (at50(&s.converted), at50(&s.random)) {
            (Some(c), Some(r)) => {
                if c <= r {
                    wins += 1;
                }
                pairs.push(format!("{c:.4}/{r:.4}"));
            }
            _ => pairs.push("diverged".into()),
        }
    }
    verdict(
        wins >= ORDERING_MIN_SEEDS,
        format!("converted <= random at epoch 50 in {wins}/5 seeds (need {ORDERING_MIN_SEEDS}): {}", pairs.join(", ")),
    )
}

fn parameter_shift(report: &ExperimentReport) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in &report.seeds {
        match &s.shift {
            Some(shift) => {
                let hidden = &shift.layers[0];
                ok &= hidden.relative_shift < SHIFT_MAX && hidden.max_abs_change_on_support <= SUPPORT_DRIFT_MAX;
                parts.push(format!("{:.3}/{:.3}", hidden.relative_shift, hidden.max_abs_change_on_support));
            }
            None => {
                ok = false;
                parts.push("diverged".into());
            }
        }
    }
    verdict(
        ok,
        format!(
            "hidden relative shift / max drift of the +-1 entries after 100 epochs: {} (limits {SHIFT_MAX}, {SUPPORT_DRIFT_MAX})",
            parts.join(", ")
        ),
    )
}

fn wine_replication() -> Outcome {
    let path = wine_path();
    require(&path)?;
    let mut cfg = ExperimentConfig::wine_quality(path);
    cfg.seeds = SEEDS.to_vec();
    cfg.train.epochs = 0;
    let data = prepare(&cfg.dataset).map_err(|e| e.to_string())?;
    let report = run_comparison_on(&cfg, &data).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = report.seeds.iter().map(|s| s.random.before / s.converted.before).collect();
    let ok = ratios.iter().all(|&r| r >= WINE_GAP);
    let text: Vec<String> = ratios.iter().map(|r| format!("{r:.1}")).collect();
    Ok(verdict(
        ok,
        format!(
            "converted {:.4}, random/converted ratios [{}] (need >= {WINE_GAP})",
            report.seeds[0].converted.before,
            text.join(", ")
        ),
    ))
}

fn timing_ratio() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut missing = Vec::new();
    for (name, path, abalone) in [("abalone", abalone_path(), true), ("wine", wine_path(), false)] {
        if let Err(e) = require(&path) {
            ok = false;
            missing.push(e);
            continue;
        }
        let cfg = if abalone {
            ExperimentConfig::abalone(path)
        } else {
            ExperimentConfig::wine_quality(path)
        };
        let data = prepare(&cfg.dataset).map_err(|e| e.to_string())?;
        let t = run_timing_on(&cfg, &data).map_err(|e| e.to_string())?;
        ok &= t.fit_seconds <= TIMING_MAX_EPOCHS * t.converted_epoch_seconds;
        parts.push(format!(
            "{name}: fit {:.2} ms, epoch {:.3} ms, ratio {:.2}, arm gap {:.1}%",
            t.fit_seconds * 1e3,
            t.converted_epoch_seconds * 1e3,
            t.fit_to_epoch_ratio,
            100.0 * t.arm_gap
        ));
    }
    parts.extend(missing);
    Ok(verdict(ok, format!("{} (need ratio <= {TIMING_MAX_EPOCHS})", parts.join("; "))))
}

fn scaling_law() -> Outcome {
    let path = abalone_path();
    require(&path)?;
    let mut cfg = ExperimentConfig::abalone(path);
    cfg.scaling = ScalingConfig {
        sizes: vec![500, 1000, 2000, 4000],
        repeats: 5,
    };
    let r = run_scaling(&cfg).map_err(|e| e.to_string())?;
    let secs: Vec<String> = r.seconds.iter().map(|s| format!("{:.2}", s * 1e3)).collect();
    Ok(verdict(
        (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&r.slope),
        format!(
            "slope {:.3} in [{}, {}], ms at N={:?}: [{}]",
            r.slope,
            SLOPE_RANGE.0,
            SLOPE_RANGE.1,
            r.sizes,
            secs.join(", ")
        ),
    ))
}

fn main() -> ExitCode {
    let limits = |s: u64| Some(Duration::from_secs(s));
    let mut failed = 0;
    let mut report = |id: usize, name: &str, limit: Option<Duration>, start: Instant, outcome: Outcome| {
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && limit.map_or(true, |l| elapsed <= l), v.detail),
            Err(e) => (false, e),
        };
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(", limit {}s", l.as_secs()));
        println!(
            "{} criterion {id:>2} {name}: {detail} [{:.2}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
        );
    };

    let t = Instant::now();
    report(1, "conversion exactness", limits(10), t, conversion_exactness());
    let t = Instant::now();
    report(2, "reshape invariance", limits(10), t, reshape_invariance());
    let t = Instant::now();
    report(3, "MARS oracle equivalence", limits(60), t, oracle_equivalence());
    let t = Instant::now();
    report(4, "gradient correctness", limits(30), t, gradient_correctness());
    let t = Instant::now();
    report(5, "lattice soundness and depth", limits(30), t, lattice_soundness());

    let t = Instant::now();
    let abalone = abalone_comparison();
    let shared = t.elapsed();
    match &abalone {
        Ok((r, _)) => {
            report(6, "Abalone initial-error gap", limits(300), Instant::now() - shared, Ok(initial_gap(r)));
            report(7, "Abalone convergence ordering", limits(600), Instant::now() - shared, Ok(convergence_ordering(r)));
        }
        Err(e) => {
            report(6, "Abalone initial-error gap", limits(300), t, Err(e.clone()));
            report(7, "Abalone convergence ordering", limits(600), t, Err(e.clone()));
        }
    }
    let t = Instant::now();
    report(8, "Wine Quality replication", limits(600), t, wine_replication());
    let t = Instant::now();
    report(9, "timing ratio", None, t, timing_ratio());
    let t = Instant::now();
    report(10, "scaling law", limits(300), t, scaling_law());
    match &abalone {
        Ok((r, _)) => report(11, "parameter-shift smallness", None, Instant::now(), Ok(parameter_shift(r))),
        Err(e) => report(11, "parameter-shift smallness", None, Instant::now(), Err(e.clone())),
    }

    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
