//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use prsgd::cli::{fit_rate_slope, run_sweep, slope_points, Axis, ExperimentConfig, SweepSummary};
use prsgd::engine::{
    compute_theorem2_schedule, plan_interval, run_pr_sgd, EpochSchedule, Execution, HeteroConfig,
    RunConfig, RunSetup, RunSpec,
};
use prsgd::metrics::{lemma1_bound, Statistic};
use prsgd::oracles::{replay_equivalence, verification_suite};
use prsgd::problems::{
    make_sine_family, sine_family_with_phases, NoiseModel, Objective, ParamVector,
};

type Check = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn sweep(toml: &str) -> Result<SweepSummary, Box<dyn std::error::Error>> {
    let config = ExperimentConfig::from_toml(toml)?;
    Ok(run_sweep(&config, None)?)
}

fn equivalences() -> Check {
    let sine = make_sine_family(8, 4, 1.0, 0.5, 1)?;
    let shared = sine_family_with_phases(
        1.0,
        NoiseModel::Uniform { halfwidth: 0.5 },
        vec![vec![0.7; 8]; 4],
    )?;
    let x0 = ParamVector::filled(8, 0.3)?;
    let base = |i: u64, t: u64| RunConfig::new(4, t, 0.05, i, x0.clone()).with_seed(9);
    let setup = RunSetup::new(x0.clone()).with_seed(9);
    let cases = [
        (
            "I=1 vs mini-batch",
            &sine,
            RunSpec::Interval(base(1, 2000)),
            RunSpec::Interval(RunConfig::minibatch(4, 2000, 0.05, x0.clone()).with_seed(9)),
        ),
        (
            "uniform lengths vs fixed interval",
            &shared,
            RunSpec::Heterogeneous {
                hetero: HeteroConfig::new(vec![6; 4], 50, 0.05)?,
                setup: setup.clone(),
            },
            RunSpec::Interval(base(6, 300)),
        ),
        (
            "single epoch vs fixed interval",
            &sine,
            RunSpec::TimeVarying {
                schedule: EpochSchedule::explicit(&[300], &[0.05])?,
                setup: setup.clone(),
            },
            RunSpec::Interval(base(300, 300)),
        ),
        (
            "sequential vs threaded",
            &sine,
            RunSpec::Interval(base(8, 4000)),
            RunSpec::Interval(base(8, 4000).with_execution(Execution::Threaded { threads: 4 })),
        ),
        (
            "sequential vs threaded, heterogeneous",
            &shared,
            RunSpec::Heterogeneous {
                hetero: HeteroConfig::new(vec![2, 8, 5, 8], 100, 0.05)?,
                setup: setup.clone(),
            },
            RunSpec::Heterogeneous {
                hetero: HeteroConfig::new(vec![2, 8, 5, 8], 100, 0.05)?,
                setup: setup
                    .clone()
                    .with_execution(Execution::Threaded { threads: 3 }),
            },
        ),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, suite, a, b) in cases {
        let started = Instant::now();
        let v = replay_equivalence(name, suite, &a, &b)?;
        let fast = started.elapsed() < Duration::from_secs(1);
        ok &= v.passed && fast;
        notes.push(format!(
            "{name}: {} diffs in {:?}",
            v.error,
            started.elapsed()
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn lemma1_pathwise() -> Check {
    let suite = make_sine_family(8, 4, 1.0, 0.5, 2)?;
    let g = suite.certificate().grad_bound;
    let gamma = 0.05;
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    for interval in [2u64, 8, 32] {
        let bound = lemma1_bound(gamma, interval, g);
        for seed in 0..8 {
            let cfg = RunConfig::new(4, 2048, gamma, interval, ParamVector::zeros(8))
                .with_seed(seed)
                .with_record_every(1);
            let rec = run_pr_sgd(&suite, &cfg)?;
            violations += rec
                .rows
                .iter()
                .filter(|r| r.max_deviation() > bound)
                .count();
            if rec.peak_deviation > bound {
                violations += 1;
            }
            worst_ratio = worst_ratio.max(rec.peak_deviation / bound);
        }
    }
    Ok((
        violations == 0,
        format!("{violations} violations, largest deviation/bound = {worst_ratio:.4}"),
    ))
}

fn theorem1_grid() -> Check {
    let s = sweep(&common::sine_config(
        "[run]\nalgorithm = \"pr_sgd\"\nworkers = [2, 4, 8]\niterations = [1024, 4096]\ninterval = [1, 4, 16]\n\
         gamma = \"corollary_capped\"\n\n[seeds]\ncount = 16\n",
    ))?;
    let certified = s.points.iter().filter(|p| p.certified()).count();
    let satisfied = s
        .points
        .iter()
        .filter(|p| p.bound.is_some_and(|b| b.satisfied))
        .count();
    let tightest = s
        .points
        .iter()
        .filter_map(|p| p.bound.map(|b| b.measured / b.bound))
        .fold(0.0, f64::max);
    Ok((
        s.points.len() == 18 && satisfied == 18,
        format!(
            "{satisfied}/{} satisfied, {certified} certified, max (mean+2SE)/bound = {tightest:.4}",
            s.points.len()
        ),
    ))
}

fn rate_slope() -> Check {
    let s = sweep(
        "[objective]\nfamily = \"sine\"\ndim = 8\nnoise_halfwidth = 2.0\n\n\
         [run]\nalgorithm = \"pr_sgd\"\nworkers = 4\niterations = [4096, 16384, 65536, 262144]\n\
         interval = \"plan\"\ngamma = \"corollary\"\nrecord_every = 1024\n\n[seeds]\ncount = 16\n",
    )?;
    let fit = fit_rate_slope(&slope_points(&s), Axis::T)?.remove(0);
    // Independent refit of the point estimate.
    let x: Vec<f64> = s
        .points
        .iter()
        .map(|p| (p.iterations as f64).ln())
        .collect();
    let y: Vec<f64> = s.points.iter().map(|p| p.mean.ln()).collect();
    let check = common::ols_slope(&x, &y);
    let ok = (-0.65..=-0.35).contains(&fit.slope) && (check - fit.slope).abs() < 1e-9;
    Ok((
        ok,
        format!(
            "slope {:.4}, 95% CI [{:.4}, {:.4}]",
            fit.slope, fit.ci.0, fit.ci.1
        ),
    ))
}

fn speedup() -> Check {
    let s = sweep(
        "[objective]\nfamily = \"sine\"\ndim = 8\nnoise_halfwidth = 2.0\nphases = \"zero\"\n\n\
         [run]\nalgorithm = \"pr_sgd\"\nworkers = [1, 2, 4, 8]\niterations = 65536\n\
         interval = \"plan\"\ngamma = \"corollary\"\nrecord_every = 1024\n\n[seeds]\ncount = 16\n",
    )?;
    let mut strict = true;
    let mut separated = true;
    for w in s.points.windows(2) {
        strict &= w[1].mean < w[0].mean;
        separated &= w[1].mean + 2.0 * w[1].se < w[0].mean - 2.0 * w[0].se;
    }
    let means: Vec<String> = s
        .points
        .iter()
        .map(|p| format!("N={}: {:.4e}±{:.1e}", p.workers, p.mean, 2.0 * p.se))
        .collect();
    Ok((
        strict && separated,
        format!("{}; 2SE bands disjoint: {separated}", means.join(", ")),
    ))
}

fn communication_rounds() -> Check {
    let suite = make_sine_family(8, 4, 1.0, 0.5, 3)?;
    let t = 65536;
    let i = plan_interval(t, 4);
    let rounds = |interval| -> Result<u64, Box<dyn std::error::Error>> {
        let cfg =
            RunConfig::new(4, t, 0.0078125, interval, ParamVector::zeros(8)).with_record_every(t);
        Ok(run_pr_sgd(&suite, &cfg)?.ledger.expect("ledger").rounds)
    };
    let (planned, every) = (rounds(i)?, rounds(1)?);
    Ok((
        i == 5 && planned == t / i && planned == 13107 && every == 65536,
        format!("I = {i}, {planned} rounds vs {every} at I = 1"),
    ))
}

fn schedule_exactness() -> Check {
    let mut mismatches = 0;
    for n in [1u64, 2, 4] {
        let schedule = compute_theorem2_schedule(n, 10_000)?;
        for (k, e) in schedule.epochs.iter().enumerate() {
            let s = k as u64 + 1;
            if e.length != common::epoch_length(n, s)
                || e.gamma.to_bits() != common::epoch_rate(n, s).to_bits()
            {
                mismatches += 1;
            }
        }
    }
    Ok((
        mismatches == 0,
        format!("{mismatches} mismatches over 30000 epochs"),
    ))
}

fn theorem3_weighted() -> Check {
    let s = sweep(
        "[objective]\nfamily = \"logistic\"\ndim = 10\nshared_data = true\n\n\
         [run]\nalgorithm = \"heterogeneous\"\ngamma = \"inverse_l\"\n\n\
         [hetero]\nlengths = [8, 8, 4, 2]\nepochs = 64\n\n[seeds]\ncount = 16\n",
    )?;
    let p = &s.points[0];
    let b = p.bound.ok_or("not certified")?;
    Ok((
        b.satisfied && p.statistic == Statistic::WeightedHetero,
        format!("mean+2SE = {:.4e} vs bound {:.4e}", b.measured, b.bound),
    ))
}

fn oracle_suite() -> Check {
    let verdicts = verification_suite()?;
    let failed: Vec<&str> = verdicts
        .iter()
        .filter(|v| !v.passed)
        .map(|v| v.name.as_str())
        .collect();
    let negatives = verdicts
        .iter()
        .filter(|v| v.name.starts_with("negative control"))
        .count();
    Ok((
        failed.is_empty(),
        format!(
            "{} checks ({negatives} negative controls), failed: {failed:?}",
            verdicts.len()
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "equivalence identities",
            equivalences,
            Duration::from_secs(5),
        ),
        (
            "pathwise deviation bound",
            lemma1_pathwise,
            Duration::from_secs(10),
        ),
        (
            "fixed-interval bound over grid",
            theorem1_grid,
            Duration::from_secs(120),
        ),
        ("rate slope vs T", rate_slope, Duration::from_secs(600)),
        ("speedup in N", speedup, Duration::from_secs(600)),
        (
            "communication rounds",
            communication_rounds,
            Duration::from_secs(60),
        ),
        (
            "epoch schedule exactness",
            schedule_exactness,
            Duration::from_secs(60),
        ),
        (
            "heterogeneous weighted bound",
            theorem3_weighted,
            Duration::from_secs(60),
        ),
        ("oracle suite", oracle_suite, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (k, (name, check, budget)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = check();
        let elapsed = started.elapsed();
        let (ok, detail) = match result {
            Ok((ok, detail)) => (ok && elapsed <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {}: {} {name} ({detail}; {:.2}s of {}s)",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
