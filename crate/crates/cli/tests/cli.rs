use std::path::{Path, PathBuf};
use std::process::Command;

use quantune_cli::io::load_samples;
use quantune_cli::report::{read_json, Payload, ReportEnvelope};
use quantune_cli::CliError;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("quantune").chain(args.iter().copied());
    let code = quantune_cli::main_from(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn envelope(o: &Outcome) -> ReportEnvelope {
    assert_eq!(o.code, 0, "stderr: {}", o.stderr);
    serde_json::from_str(&o.stdout).unwrap()
}

fn write_file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sample_size_all() {
    let o = run(&["sample-size", "--method", "all", "--gamma", "0.95", "--epsilon", "0.01", "--rho", "0.05"]);
    assert!(o.stderr.contains("N_DKW=18460 N_VP=4239 N_BETA=2180"), "{}", o.stderr);
    let env = envelope(&o);
    assert_eq!(env.schema_version, 1);
    assert_eq!(env.command, "sample-size");
    assert_eq!(env.inputs["gamma"], "19/20");
    let Payload::SampleSize(results) = env.payload else { panic!() };
    let n: Vec<u64> = results.iter().map(|r| r.n_samples).collect();
    assert_eq!(n, [18460, 4239, 2180]);
}

#[test]
fn gamma_is_parsed_exactly() {
    let o = run(&["sample-size", "--method", "beta", "--gamma", "0.333333333", "--epsilon", "0.01", "--rho", "0.05"]);
    assert_eq!(envelope(&o).inputs["gamma"], "333333333/1000000000");
    let o = run(&["sample-size", "--method", "dkw", "--gamma", "6/8", "--epsilon", "0.01", "--rho", "0.05"]);
    assert_eq!(envelope(&o).inputs["gamma"], "3/4");
    let o = run(&["sample-size", "--gamma", "1.5", "--epsilon", "0.01", "--rho", "0.05"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("--gamma"), "{}", o.stderr);
}

#[test]
fn vp_condition_failure_is_a_precondition_error() {
    let o = run(&["sample-size", "--method", "vp", "--gamma", "0.95", "--epsilon", "0.3", "--rho", "0.3"]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("6*rho <= 1"), "{}", o.stderr);
}

#[test]
fn usage_errors() {
    let o = run(&["simulate", "--source", "uniform", "--method", "beta", "--gamma", "0.95", "--epsilon", "0.01", "--rho", "0.05"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("--seed"));
    assert_eq!(run(&["sample-size", "--bogus"]).code, 2);
    assert_eq!(run(&[]).code, 2);
    let o = run(&["sample-size", "--gamma", "0.95", "--epsilon", "1.5", "--rho", "0.05"]);
    assert_eq!(o.code, 2);
    let o = run(&["simulate", "--source", "chi2:dof=0", "--method", "beta", "--gamma", "0.95", "--epsilon", "0.01", "--rho", "0.05", "--seed", "1"]);
    assert_eq!(o.code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn coverage_value() {
    let o = run(&["coverage", "--m", "2071", "--N", "2180", "--gamma", "0.95", "--epsilon", "0.01"]);
    let Payload::Coverage(c) = envelope(&o).payload else { panic!() };
    assert!(c.coverage >= 0.948 && c.coverage <= 1.0);
    assert_eq!(c.n, 2180);
    assert_eq!(run(&["coverage", "--m", "0", "--N", "10", "--gamma", "0.5", "--epsilon", "0.1"]).code, 3);
}

#[test]
fn load_samples_cases() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_file(dir.path(), "ok.txt", "1\n2\n3\n");
    assert_eq!(load_samples(&ok, None).unwrap().len(), 3);

    let bad = write_file(dir.path(), "bad.txt", "1\nabc\n3\n");
    let err = load_samples(&bad, None).unwrap_err();
    assert!(matches!(err, CliError::Data(ref m) if m.contains("line 2")), "{err}");

    let nan = write_file(dir.path(), "nan.txt", "1\n2\nNaN\n");
    let err = load_samples(&nan, None).unwrap_err();
    assert!(matches!(err, CliError::Data(ref m) if m.contains("line 3")), "{err}");
    let inf = write_file(dir.path(), "inf.txt", "-inf\n");
    assert!(matches!(load_samples(&inf, None), Err(CliError::Data(_))));

    let empty = write_file(dir.path(), "empty.txt", "\n# nothing here\n");
    assert!(matches!(load_samples(&empty, None), Err(CliError::Data(_))));

    let missing = dir.path().join("missing.txt");
    assert_eq!(load_samples(&missing, None).unwrap_err().exit_code(), 5);

    let csv = write_file(dir.path(), "d.csv", "t,y\n0,1.5\n1,2.5\n2,x\n");
    let err = load_samples(&csv, Some("y")).unwrap_err();
    assert!(matches!(err, CliError::Data(ref m) if m.contains("line 4")), "{err}");
    let csv = write_file(dir.path(), "e.csv", "t,y\n0,1.5\n1,2.5\n");
    assert_eq!(load_samples(&csv, Some("y")).unwrap().sorted(), &[1.5, 2.5]);
    assert_eq!(load_samples(&csv, Some("0")).unwrap().sorted(), &[0.0, 1.0]);
    assert_eq!(load_samples(&csv, Some("z")).unwrap_err().exit_code(), 2);
}

#[test]
fn estimate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = (1..=20).map(|i| format!("{i}\n")).collect();
    let path = write_file(dir.path(), "s.txt", &text);
    let o = run(&["estimate", "--input", s(&path), "--gamma", "19/20"]);
    let env = envelope(&o);
    assert_eq!(env.inputs["n_points"], 20);
    let Payload::Estimate(e) = env.payload else { panic!() };
    assert_eq!(e.value, 20.0);
    let o = run(&["estimate", "--input", s(&path), "--gamma", "19/20", "--beta", "0.5"]);
    let Payload::Estimate(e) = envelope(&o).payload else { panic!() };
    assert_eq!(e.value, 19.5);

    let bad = write_file(dir.path(), "bad.txt", "1\nabc\n");
    assert_eq!(run(&["estimate", "--input", s(&bad), "--gamma", "0.5"]).code, 4);
    let short = write_file(dir.path(), "short.txt", "1\n2\n3\n");
    assert_eq!(run(&["estimate", "--input", s(&short), "--gamma", "0.05"]).code, 3);
}

const SIM: [&str; 16] = [
    "simulate", "--source", "chi2:dof=4", "--method", "beta", "--gamma", "0.95", "--epsilon", "0.01", "--rho", "0.05",
    "--trials", "1000", "--validation-size", "50000", "--seed",
];

#[test]
fn json_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let mut args = SIM.to_vec();
        args.extend(["7", "--output", s(path)]);
        let o = run(&args);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert!(o.stdout.is_empty());
        assert!(o.stderr.contains("wrote"));
    }
    let (ea, eb) = (read_json(&a).unwrap(), read_json(&b).unwrap());
    assert_eq!(ea.payload, eb.payload);
    assert_eq!(ea.inputs, eb.inputs);
    let strip = |p: &Path| {
        let text = std::fs::read_to_string(p).unwrap();
        text.lines().filter(|l| !l.contains("\"timestamp\"")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));

    // write, read back, write again: identical payload bytes
    let Payload::Validation(r) = &ea.payload else { panic!() };
    assert_eq!(r.empirical_fars.len(), 1000);
    let again = serde_json::to_string(&ea).unwrap();
    let back: ReportEnvelope = serde_json::from_str(&again).unwrap();
    assert_eq!(back, ea);
    assert_eq!(serde_json::to_string(&back).unwrap(), again);
    assert_eq!(ea.inputs["seed"], 7);
    assert_eq!(ea.inputs["source"], "chi2:dof=4");
}

#[test]
fn csv_report_has_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let mut args = SIM.to_vec();
    args.extend(["3", "--format", "csv", "--output", s(&path)]);
    assert_eq!(run(&args).code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1001);
    assert_eq!(lines[0], "trial,threshold,empirical_far,inside_band");
    let hist = std::fs::read_to_string(dir.path().join("r.histogram.csv")).unwrap();
    let total: u64 = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 1000);

    // stdout variant carries both tables
    let mut args: Vec<&str> = SIM.iter().map(|&a| if a == "1000" { "10" } else { a }).collect();
    args.extend(["3", "--format", "csv"]);
    let o = run(&args);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("\n\nbin_lower,bin_upper,count\n"));
}

#[test]
fn split_eval_on_generated_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("traj.txt");
    let spec = "wcusum:delta=3,dim=2,mean=1;2,cov=2;0.5;0.5;1";
    let o = run(&["generate", "--source", spec, "--length", "13601", "--seed", "5", "--output", s(&data)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(load_samples(&data, None).unwrap().len(), 13601);

    let common = ["--method", "beta", "--gamma", "0.95", "--epsilon", "0.01", "--rho", "0.05", "--trials", "200", "--seed", "5"];
    let mut split = vec!["split-eval", "--input", s(&data)];
    split.extend(common);
    let e1 = envelope(&run(&split));
    assert_eq!(e1.inputs["n_points"], 13601);

    // same data set and seed through the random-subsample simulation path
    let mut sim = vec!["simulate", "--source", spec, "--mode", "random-subsample", "--validation-size", "13601"];
    sim.extend(common);
    let e2 = envelope(&run(&sim));
    let (Payload::Validation(a), Payload::Validation(b)) = (e1.payload, e2.payload) else { panic!() };
    assert_eq!(a.empirical_fars, b.empirical_fars);
    assert_eq!(a.metadata.n_samples, 2180);

    let short = write_file(dir.path(), "short.txt", &"1\n".repeat(2180));
    let mut args = vec!["split-eval", "--input", s(&short)];
    args.extend(common);
    let o = run(&args);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("2181"), "{}", o.stderr);
}

#[test]
fn sweep_collects_per_level_errors() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = (0..3000).map(|i| format!("{}\n", (i as f64 * 0.7).sin())).collect();
    let data = write_file(dir.path(), "d.txt", &text);
    let o = run(&[
        "sweep", "--input", s(&data), "--gammas", "0.95,0.99,1/2", "--epsilon", "0.01", "--rho", "0.05",
        "--method", "beta", "--trials", "20", "--seed", "1",
    ]);
    let Payload::Sweep(entries) = envelope(&o).payload else { panic!() };
    assert_eq!(entries.len(), 3);
    assert!(entries[0].report.is_some() && entries[1].report.is_some());
    // gamma = 1/2 needs far more than 3000 points
    assert!(entries[2].report.is_none() && entries[2].error.as_deref().unwrap().contains("too small"));

    let o = run(&["sweep", "--gammas", "0.95", "--epsilon", "0.01", "--rho", "0.05", "--method", "beta", "--seed", "1"]);
    assert_eq!(o.code, 2);
    let o = run(&[
        "sweep", "--source", "uniform", "--gammas", "0.9,0.95", "--epsilon", "0.01", "--rho", "0.05", "--method", "beta",
        "--trials", "5", "--validation-size", "1000", "--seed", "1", "--format", "csv",
    ]);
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout.lines().count(), 3);
}

#[test]
fn binary_exit_codes_and_output_dir() {
    let bin = env!("CARGO_BIN_EXE_quantune");
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(bin)
        .args(["sample-size", "--gamma", "0.95", "--epsilon", "0.01", "--rho", "0.05"])
        .env("QUANTUNE_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let written = dir.path().join("sample-size.json");
    assert!(read_json(&written).is_ok());

    let out = Command::new(bin)
        .args(["estimate", "--input", "/nonexistent/file", "--gamma", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
    let out = Command::new(bin).args(["coverage", "--m", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
