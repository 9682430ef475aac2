mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use prsgd::cli::{
    run_sweep, sweep_exit_code, verdicts_exit_code, CliError, ExperimentConfig, EXIT_BOUND,
    EXIT_OK, EXIT_ORACLE, OUT_DIR_ENV,
};
use prsgd::metrics::{BoundReport, BoundTerms};
use prsgd::oracles::OracleVerdict;

fn prsgd(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_prsgd"));
    cmd.args(args).env_remove(OUT_DIR_ENV);
    if let Some(dir) = out_env {
        cmd.env(OUT_DIR_ENV, dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, common::sine_config(body)).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("point"))
        .collect();
    names.sort();
    names
}

#[test]
fn minimal_config_writes_one_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[run]\nalgorithm = \"pr_sgd\"\nworkers = 2\niterations = 10\ninterval = 2\ngamma = 0.1\n\n[output]\ndir = \"out\"\n",
    );
    let out = prsgd(&["run", &cfg], None);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("out");
    assert_eq!(csv_files(&dir), vec!["point000_seed0.csv"]);
    let text = fs::read_to_string(dir.join("point000_seed0.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(
        lines[0],
        "t,epoch,step,f_xbar_prev,grad_sq_xbar_prev,max_deviation,gamma,weight,rounds"
    );
    assert!(lines[10].starts_with("10,5,2,"));
    assert!(lines[10].ends_with(",5"));
    assert!(dir.join("summary.csv").exists() && dir.join("report.txt").exists());
}

#[test]
fn sweep_cardinality_and_byte_identical_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[run]\nalgorithm = \"pr_sgd\"\nworkers = 4\niterations = 64\ninterval = [1, 4, 16]\ngamma = 0.05\n\n\
         [seeds]\nvalues = [3, 5, 7, 11]\n",
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(prsgd(&["run", &cfg], Some(&a)).status.code(), Some(0));
    assert_eq!(prsgd(&["run", &cfg], Some(&b)).status.code(), Some(0));
    let files = csv_files(&a);
    assert_eq!(files.len(), 12);
    assert_eq!(files, csv_files(&b));
    for name in files
        .iter()
        .map(String::as_str)
        .chain(["summary.csv", "report.txt"])
    {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
}

#[test]
fn env_var_overrides_configured_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[run]\nalgorithm = \"minibatch_baseline\"\nworkers = 2\niterations = 5\ngamma = 0.1\n\n[output]\ndir = \"configured\"\n",
    );
    let target = tmp.path().join("from_env");
    assert_eq!(prsgd(&["run", &cfg], Some(&target)).status.code(), Some(0));
    assert!(target.join("summary.csv").exists());
    assert!(!tmp.path().join("configured").exists());
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("[run]\nalgorithm = \"pr_sgd\"\nworkers = 2\niterations = 10\ninterval = 2\ngamma = 0.1\nbogus = 3\n", "bogus"),
        ("[run]\nalgorithm = \"pr_sgd\"\nworkers = 8\niterations = 4\ninterval = 1\ngamma = \"corollary\"\n", "run.gamma"),
        ("[run]\nalgorithm = \"pr_sgd\"\nworkers = 2\niterations = 10\ninterval = 20\ngamma = 0.1\n", "run.interval"),
        ("[run]\nalgorithm = \"pr_sgd\"\nworkers = 2\niterations = 10\ninterval = 2\ngamma = 0.1\n\n[seeds]\nvalues = [1, 1]\n", "seeds"),
    ];
    for (body, key) in cases {
        let cfg = write_config(tmp.path(), body);
        let out = prsgd(&["run", &cfg], Some(&tmp.path().join("never")));
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{body}: {err}");
        assert!(
            err.contains(&format!("`{key}`")),
            "{key} not named in {err}"
        );
    }
    assert!(!tmp.path().join("never").exists());
    assert_eq!(
        prsgd(&["run", "/nonexistent/x.toml"], None).status.code(),
        Some(2)
    );
}

#[test]
fn all_points_validated_before_running() {
    let text = common::sine_config(
        "[run]\nalgorithm = \"pr_sgd\"\nworkers = 2\niterations = [100, 5]\ninterval = 10\ngamma = 0.1\n",
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let err = run_sweep(&config, Some(tmp.path())).unwrap_err();
    assert!(matches!(err, CliError::Config { .. }));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn plan_verb() {
    let out = prsgd(&["plan", "-T", "65536", "-N", "4"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gamma = 0.0078125\n"), "{text}");
    assert!(text.contains("interval = 5\n"));
    assert!(text.contains("bound = 0.013671875\n"));
    assert!(text.contains("rounds = 13107\n"));
    assert_eq!(
        prsgd(&["plan", "-T", "3", "-N", "4"], None).status.code(),
        Some(2)
    );
    assert_eq!(prsgd(&["plan"], None).status.code(), Some(2));
}

#[test]
fn slope_verb_on_written_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[run]\nalgorithm = \"pr_sgd\"\nworkers = 2\niterations = [256, 1024, 4096]\ninterval = \"plan\"\n\
         gamma = \"corollary\"\nrecord_every = 64\n\n[seeds]\ncount = 4\n\n[output]\ndir = \"out\"\n",
    );
    assert_eq!(prsgd(&["run", &cfg], None).status.code(), Some(0));
    let summary = tmp.path().join("out/summary.csv");
    let out = prsgd(&["slope", summary.to_str().unwrap(), "--axis", "T"], None);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let slope: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("slope = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(slope < 0.0, "{text}");
    let out = prsgd(&["slope", summary.to_str().unwrap(), "--axis", "N"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_verb_writes_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = prsgd(&["verify"], Some(tmp.path()));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let csv = fs::read_to_string(tmp.path().join("verdicts.csv")).unwrap();
    assert!(csv.starts_with("name,passed,error,tolerance\n"));
    assert!(!csv.contains(",false,"));
}

#[test]
fn exit_codes_for_violations_and_failed_oracles() {
    let text = common::sine_config(
        "[run]\nalgorithm = \"pr_sgd\"\nworkers = 2\niterations = 10\ninterval = 2\ngamma = 0.1\n",
    );
    let mut summary = run_sweep(&ExperimentConfig::from_toml(&text).unwrap(), None).unwrap();
    assert_eq!(sweep_exit_code(&summary, true), EXIT_OK);
    let terms = BoundTerms {
        initial_gap: 1e-6,
        deviation: 0.0,
        noise: 0.0,
    };
    summary.points[0].bound = Some(BoundReport::new(1.0, 0.0, terms));
    assert_eq!(sweep_exit_code(&summary, false), EXIT_OK);
    assert_eq!(sweep_exit_code(&summary, true), EXIT_BOUND);

    let verdict = |passed| OracleVerdict {
        name: "x".into(),
        passed,
        error: 0.0,
        tolerance: 0.0,
        details: String::new(),
    };
    assert_eq!(verdicts_exit_code(&[verdict(true)]), EXIT_OK);
    assert_eq!(
        verdicts_exit_code(&[verdict(true), verdict(false)]),
        EXIT_ORACLE
    );
}
