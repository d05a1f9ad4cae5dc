use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quantor::cli::{QuantizeSummary, VerifyReport};
use quantor::optimize::IterRecord;
use quantor::verify::{CounterexampleReport, Strictness, Verdict};
use quantor::Quantizer;

fn quantor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quantor"))
        .args(args)
        .current_dir(dir)
        .env_remove("QUANTOR_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_quantizer(dir: &Path, name: &str, points: &[f64]) -> String {
    let q = Quantizer::scalar(2.0, points).unwrap();
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(&q).unwrap()).unwrap();
    name.to_string()
}

#[test]
fn quantize_two_levels_on_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let o = quantor(&["quantize", "--dist", "uniform:-1,1", "--r", "2", "--n", "2", "--seed", "7", "--out", "q"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("q");
    let summary: QuantizeSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!((summary.distortion - 1.0 / 12.0).abs() < 1e-3);
    assert!(summary.stationary);
    let q: Quantizer = serde_json::from_str(&fs::read_to_string(out.join("quantizer.json")).unwrap()).unwrap();
    assert_eq!(q.n(), 2);
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    for line in trace.lines() {
        let rec: IterRecord = serde_json::from_str(line).unwrap();
        assert!(rec.distortion > 0.0);
    }
}

#[test]
fn quantize_single_normal_codepoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = quantor(&["quantize", "--dist", "normal:0,1", "--n", "1", "--out", "."], dir.path());
    assert_eq!(code(&o), 0);
    let q: Quantizer = serde_json::from_str(&fs::read_to_string(dir.path().join("quantizer.json")).unwrap()).unwrap();
    assert!(q.points[0][0].abs() < 1e-2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = quantor(&["quantize", "--r", "2"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("usage"));
    assert_eq!(code(&quantor(&["quantize", "--dist", "cauchy:0,1"], dir.path())), 2);
    assert_eq!(code(&quantor(&["quantize", "--dist", "uniform:1"], dir.path())), 2);
    assert_eq!(code(&quantor(&["sweep", "--dist", "uniform:-1,1", "--n-range", "3..1"], dir.path())), 2);
    assert_eq!(code(&quantor(&["frobnicate"], dir.path())), 2);
    fs::write(dir.path().join("bad.json"), "{\"points\": 3}").unwrap();
    assert_eq!(code(&quantor(&["verify", "bad.json", "--dist", "uniform:-1,1"], dir.path())), 2);
    fs::write(dir.path().join("cfg.json"), "{\"unknown_field\": 1}").unwrap();
    assert_eq!(code(&quantor(&["quantize", "--config", "cfg.json"], dir.path())), 2);
    // a 2-D quantizer against a 1-D law
    let q = Quantizer::new(quantor::NormedSpace::euclidean(2).unwrap(), 2.0, vec![quantor::Point(vec![0.0, 0.0])]).unwrap();
    fs::write(dir.path().join("q2.json"), serde_json::to_string(&q).unwrap()).unwrap();
    assert_eq!(code(&quantor(&["verify", "q2.json", "--dist", "uniform:-1,1"], dir.path())), 2);
}

fn verify_report(dir: &Path, file: &str, extra: &[&str]) -> (i32, VerifyReport) {
    let mut args = vec!["verify", file, "--dist", "uniform:-1,1", "--trials", "400", "--out", "v"];
    args.extend_from_slice(extra);
    let o = quantor(&args, dir);
    let rep = serde_json::from_str(&fs::read_to_string(dir.join("v/verify.json")).unwrap()).unwrap();
    (code(&o), rep)
}

#[test]
fn verify_uniform_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sym = write_quantizer(d, "sym.json", &[-0.5, 0.5]);
    let (c, rep) = verify_report(d, &sym, &["--assert-stationary", "--assert-strict"]);
    assert_eq!(c, 0);
    assert_eq!(rep.stationarity.unwrap().verdict, Verdict::Stationary);
    assert_eq!(rep.probe.strictness, Strictness::Strict);

    let pair = write_quantizer(d, "pair.json", &[0.0, 3.0]);
    let (c, rep) = verify_report(d, &pair, &[]);
    assert_eq!(c, 0);
    assert_eq!(rep.probe.strictness, Strictness::NonStrict);
    assert_eq!(rep.stationarity.unwrap().verdict, Verdict::NotStationary);
    let (c, rep) = verify_report(d, &pair, &["--assert-stationary"]);
    assert_eq!(c, 1);
    assert!(!rep.assertions[0].passed);
    let (c, _) = verify_report(d, &pair, &["--assert-local-min"]);
    assert_eq!(c, 0);

    let triple = write_quantizer(d, "triple.json", &[0.0, 3.0, 3.0]);
    let (c, rep) = verify_report(d, &triple, &[]);
    assert_eq!(c, 0);
    assert_eq!(rep.stationarity.unwrap().verdict, Verdict::Inapplicable);
}

#[test]
fn sweep_single_level_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = quantor(&["sweep", "--dist", "uniform:-1,1", "--n-range", "3", "--out", "s"], dir.path());
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["n", "distortion", "std_error", "residual"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "3");
    let g: f64 = rows[0][1].parse().unwrap();
    assert!((g - 1.0 / 27.0).abs() < 0.02 / 27.0);

    let o = quantor(&["sweep", "--dist", "uniform:-1,1", "--n-range", "1..2", "--format", "json", "--timing", "--out", "j"], dir.path());
    assert_eq!(code(&o), 0);
    let rows: Vec<quantor::optimize::SweepRow> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("j/sweep.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    let o = quantor(&["sweep", "--dist", "uniform:-1,1", "--n-range", "1..2", "--timing", "--out", "t"], dir.path());
    assert_eq!(code(&o), 0);
    let header = fs::read_to_string(dir.path().join("t/sweep.csv")).unwrap();
    assert!(header.lines().next().unwrap().ends_with("wall_time_s"));
}

#[test]
fn counterexample_variants() {
    let dir = tempfile::tempdir().unwrap();
    let fast = ["--trials", "400", "--probe-samples", "50000", "--n-samples", "200000"];
    let mut args = vec!["counterexample", "--r", "1", "--out", "c1"];
    args.extend_from_slice(&fast);
    let o = quantor(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep: CounterexampleReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c1/counterexample.json")).unwrap()).unwrap();
    assert_eq!(rep.cases.len(), 1);
    assert!((rep.cases[0].pair.exact - 0.5).abs() < 1e-12);

    let mut args = vec!["counterexample", "--r", "2", "--radius", "5", "--out", "c5"];
    args.extend_from_slice(&fast);
    let o = quantor(&args, dir.path());
    assert_eq!(code(&o), 0);
    let rep: CounterexampleReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c5/counterexample.json")).unwrap()).unwrap();
    assert!(rep.large_radius);
    assert_eq!(rep.cases[0].pair.probe.strictness, Strictness::Refuted);
    assert!(String::from_utf8_lossy(&o.stdout).contains("expected"));
}

#[test]
fn gradcheck_default_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = quantor(&["gradcheck", "--out", "g"], dir.path());
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("g/gradcheck.csv")).unwrap();
    assert_eq!(text.lines().count(), 21);
    let o = quantor(&["gradcheck", "--dist", "disk:0,0,1", "--r", "3", "--tuples", "4", "--format", "json", "--out", "h"], dir.path());
    assert_eq!(code(&o), 0);
    let rows: Vec<quantor::verify::GradCheckRow> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("h/gradcheck.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn seeds_config_files_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |out: &str, env_seed: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_quantor"));
        cmd.args(["quantize", "--dist", "disk:0,0,1", "--n", "3", "--n-samples", "20000", "--out", out])
            .args(extra)
            .current_dir(d)
            .env_remove("QUANTOR_SEED");
        if let Some(s) = env_seed {
            cmd.env("QUANTOR_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
        (
            fs::read(d.join(out).join("quantizer.json")).unwrap(),
            fs::read(d.join(out).join("trace.jsonl")).unwrap(),
        )
    };
    let a = run("a", None, &["--seed", "5"]);
    let b = run("b", None, &["--seed", "5"]);
    assert_eq!(a, b);
    let c = run("c", Some("5"), &[]);
    assert_eq!(a, c);
    let e = run("e", Some("6"), &[]);
    assert_ne!(a, e);
    // flags win over the environment
    let f = run("f", Some("6"), &["--seed", "5"]);
    assert_eq!(a, f);

    fs::write(d.join("run.toml"), "dist = \"disk:0,0,1\"\nn = 3\nseed = 5\nn_samples = 20000\n").unwrap();
    let o = quantor(&["quantize", "--config", "run.toml", "--out", "t"], d);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(d.join("t/quantizer.json")).unwrap(), a.0);
    fs::write(
        d.join("run.json"),
        r#"{"dist": {"kind": "uniform_disk", "params": {"center": [0.0, 0.0], "radius": 1.0}}, "n": 3, "seed": 9, "n_samples": 20000}"#,
    )
    .unwrap();
    let o = quantor(&["quantize", "--config", "run.json", "--seed", "5", "--out", "j"], d);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(d.join("j/quantizer.json")).unwrap(), a.0);
}
