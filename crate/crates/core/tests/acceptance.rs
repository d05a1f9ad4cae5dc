//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line to
//! stderr (unbuffered, so it shows up even when the harness captures output).

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use quantor::optimize::{multistart, sweep};
use quantor::verify::{
    counterexample_suite, local_min_probe, stationarity_check, theorem_a_check, theorem_b_check,
    CheckVerdict, CounterexampleConfig, ProbeConfig, Strictness, TheoremBConfig, Tolerance,
};
use quantor::{
    distortion_on, gradient_on, lloyd, DistKind, Distribution, OptimizerConfig, Point, Quantizer,
};
use statrs::function::erf::erfc;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, elapsed: Duration, o: &Outcome) {
    let mut err = std::io::stderr();
    let _ = writeln!(
        err,
        "criterion {id} [{name}]: {} ({:.1}s) {}",
        if o.pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        o.detail
    );
}

// ---- oracles ------------------------------------------------------------

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn big_phi(x: f64) -> f64 {
    0.5 * erfc(-x / 2f64.sqrt())
}

/// Gradient of the two-point quadratic distortion of N(0,1), `a1 < a2`.
fn normal_pair_gradient(a1: f64, a2: f64) -> [f64; 2] {
    let m = 0.5 * (a1 + a2);
    [
        2.0 * (a1 * big_phi(m) + phi(m)),
        2.0 * (a2 * (1.0 - big_phi(m)) - phi(m)),
    ]
}

/// Newton iteration on the closed-form gradient with a difference Jacobian.
fn normal_pair_optimum() -> [f64; 2] {
    let mut a = [-1.3, 0.4];
    for _ in 0..50 {
        let g = normal_pair_gradient(a[0], a[1]);
        let h = 1e-6;
        let g1 = normal_pair_gradient(a[0] + h, a[1]);
        let g2 = normal_pair_gradient(a[0], a[1] + h);
        let j = [
            [(g1[0] - g[0]) / h, (g2[0] - g[0]) / h],
            [(g1[1] - g[1]) / h, (g2[1] - g[1]) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let d0 = (j[1][1] * g[0] - j[0][1] * g[1]) / det;
        let d1 = (j[0][0] * g[1] - j[1][0] * g[0]) / det;
        a = [a[0] - d0, a[1] - d1];
        if d0.abs().max(d1.abs()) < 1e-14 {
            break;
        }
    }
    a
}

/// Quadratic distortion of U[-1,1] for a sorted scalar codebook, by midpoint
/// quadrature.
fn uniform_distortion_quadrature(points: &[f64]) -> f64 {
    let m = 200_000;
    let h = 2.0 / m as f64;
    (0..m)
        .map(|k| {
            let x = -1.0 + (k as f64 + 0.5) * h;
            points.iter().map(|a| (x - a) * (x - a)).fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        * h
        / 2.0
}

// ---- criteria -----------------------------------------------------------

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let cfg = CounterexampleConfig { rs: vec![2.0], ..Default::default() };
    let rep = counterexample_suite(&cfg).unwrap();
    let c = &rep.cases[0];
    let g_pair = c.pair.distortion.mean;
    let g_sym = c.symmetric.distortion.mean;
    let oracle_pair = uniform_distortion_quadrature(&[0.0, 3.0]);
    let oracle_sym = uniform_distortion_quadrature(&[-0.5, 0.5]);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = (g_pair - 1.0 / 3.0).abs() <= 0.002
        && (g_sym - 1.0 / 12.0).abs() <= 0.001
        && (oracle_pair - 1.0 / 3.0).abs() < 1e-8
        && (oracle_sym - 1.0 / 12.0).abs() < 1e-8
        && c.pair.probe.strictness == Strictness::NonStrict
        && c.triple.probe.strictness == Strictness::NonStrict
        && c.symmetric.probe.strictness == Strictness::Strict
        && elapsed < 30.0;
    Outcome {
        pass,
        detail: format!(
            "G(0,3)={g_pair:.5} G(-.5,.5)={g_sym:.5} probes {:?}/{:?}/{:?}",
            c.pair.probe.strictness, c.triple.probe.strictness, c.symmetric.probe.strictness
        ),
    }
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let laws = [
        Distribution::gaussian_iso(2, 0.0, 1.0, 11).unwrap(),
        Distribution::brownian_kl(16, 6, 11).unwrap(),
        Distribution::new(DistKind::BrownianKl { m: 16, k: 6, p: 1.0 }, 11).unwrap(),
    ];
    let eps = 1e-4;
    let mut worst = 0.0f64;
    let mut count = 0;
    for t in 0..20usize {
        let dist = &laws[t % 3];
        let r = [1.0, 2.0, 3.0][(t / 3) % 3];
        let n = 1 + t % 3;
        let q = quantor::verify::random_tuple(dist, r, n, 500 + t as u64).unwrap();
        let xs = dist.sample(t as u64, 20_000);
        let g = gradient_on(&q, &xs).unwrap();
        let h: Vec<Point> = g.components.iter().map(|u| Point(q.space.riesz(u))).collect();
        let scale = h.iter().map(|v| q.space.norm(v).unwrap()).fold(0.0, f64::max);
        let shift = |s: f64| {
            q.with_points(
                q.points
                    .iter()
                    .zip(&h)
                    .map(|(a, v)| Point(a.iter().zip(v.iter()).map(|(x, y)| x + s * eps * y / scale).collect()))
                    .collect(),
            )
        };
        let fd = (distortion_on(&shift(1.0), &xs).unwrap().mean
            - distortion_on(&shift(-1.0), &xs).unwrap().mean)
            / (2.0 * eps);
        let analytic: f64 = g
            .components
            .iter()
            .zip(&h)
            .map(|(u, v)| u.iter().zip(v.iter()).map(|(a, b)| a * b / scale).sum::<f64>())
            .sum();
        worst = worst.max((analytic - fd).abs() / fd.abs());
        count += 1;
    }
    let elapsed = t0.elapsed().as_secs_f64();
    Outcome {
        pass: worst < 1e-3 && count == 20 && elapsed < 120.0,
        detail: format!("{count} tuples, worst relative error {worst:.2e}"),
    }
}

fn criterion_3() -> Outcome {
    let oracle = normal_pair_optimum();
    let cfg = OptimizerConfig::default();
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut pair = Vec::new();
    for dist in [
        Distribution::uniform_interval(-1.0, 1.0, 3).unwrap(),
        Distribution::gaussian_iso(1, 0.0, 1.0, 3).unwrap(),
    ] {
        for n in [2, 3, 4] {
            let init: Vec<f64> = (0..n).map(|i| -0.9 + 1.3 * i as f64 / n as f64).collect();
            let tr = lloyd(&dist, &Quantizer::scalar(2.0, &init).unwrap(), &cfg).unwrap();
            let rep = stationarity_check(&dist, &tr.quantizer, 200_000, 77, Tolerance::default()).unwrap();
            ok &= tr.converged() && rep.is_stationary();
            worst = worst.max(rep.max_normalized_residual());
            if n == 2 && matches!(dist.kind(), DistKind::GaussianIso { .. }) {
                pair = tr.quantizer.points.iter().map(|p| p[0]).collect();
            }
        }
    }
    pair.sort_by(f64::total_cmp);
    let close = (pair[0] - oracle[0]).abs() < 2e-2 && (pair[1] - oracle[1]).abs() < 2e-2;
    let oracle_ok = (oracle[1] - (2.0 / PI).sqrt()).abs() < 1e-9;
    Outcome {
        pass: ok && close && oracle_ok,
        detail: format!(
            "max normalized residual {worst:.2e}; N(0,1) n=2 {:.4},{:.4} vs oracle {:.5},{:.5}",
            pair[0], pair[1], oracle[0], oracle[1]
        ),
    }
}

fn criterion_4() -> Outcome {
    let cfg = OptimizerConfig { n_samples: 50_000, ..Default::default() };
    let probe = ProbeConfig { radius: 0.25, trials: 400, n_samples: 50_000, stream: 3 };
    let mut checked = 0;
    let mut failures = Vec::new();
    for dist in [
        Distribution::uniform_interval(-1.0, 1.0, 4).unwrap(),
        Distribution::uniform_disk(vec![0.0, 0.0], 1.0, 4).unwrap(),
    ] {
        for n in [2, 3] {
            for tr in multistart(&dist, dist.space(), 2.0, n, 4, &cfg).unwrap() {
                let v = local_min_probe(&dist, &tr.quantizer, &probe).unwrap();
                if v.strictness == Strictness::Refuted {
                    continue;
                }
                let rep = theorem_a_check(&dist, &tr.quantizer, 100_000, 5, Some(&v)).unwrap();
                checked += 1;
                if !(rep.distinct && rep.cells_optimal) {
                    failures.push(format!("{:?} n={n}", dist.kind()));
                }
            }
        }
    }
    Outcome {
        pass: checked > 0 && failures.is_empty(),
        detail: format!("{checked} probe-surviving quantizers checked, {} failures", failures.len()),
    }
}

fn criterion_5() -> Outcome {
    let dist = Distribution::uniform_disk(vec![0.0, 0.0], 1.0, 5).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let rep = theorem_b_check(&dist, 2.0, n, &TheoremBConfig::default()).unwrap();
        let min_clear = rep
            .starts
            .iter()
            .filter(|s| s.strictness == Strictness::Strict)
            .filter_map(|s| s.min_clearance)
            .fold(f64::INFINITY, f64::min);
        pass &= rep.verdict == CheckVerdict::Passed && rep.strict_count > 0 && min_clear > 1e-6;
        parts.push(format!("n={n}: {}/{} strict, min clearance {min_clear:.3}", rep.strict_count, rep.starts.len()));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn criterion_6() -> Outcome {
    let dist = Distribution::uniform_interval(-1.0, 1.0, 6).unwrap();
    let rows = sweep(&dist, dist.space(), 2.0, 1..=4, 4, &OptimizerConfig::default()).unwrap();
    let mut worst = 0.0f64;
    for row in &rows {
        let n = row.n as f64;
        let equispaced: Vec<f64> = (0..row.n).map(|i| -1.0 + (2 * i + 1) as f64 / n).collect();
        let oracle = uniform_distortion_quadrature(&equispaced);
        worst = worst.max((row.distortion - oracle).abs() / oracle);
    }
    let decreasing = rows.windows(2).all(|w| w[1].distortion < w[0].distortion);
    Outcome {
        pass: worst < 0.02 && decreasing && rows.len() == 4,
        detail: format!(
            "distortions {:?}, worst relative deviation {worst:.2e}",
            rows.iter().map(|r| format!("{:.5}", r.distortion)).collect::<Vec<_>>()
        ),
    }
}

fn criterion_7() -> Outcome {
    let t0 = Instant::now();
    let dist = Distribution::brownian_kl(64, 16, 7).unwrap();
    let cfg = OptimizerConfig { n_samples: 50_000, ..Default::default() };
    let rows = sweep(&dist, dist.space(), 2.0, 1..=8, 1, &cfg).unwrap();
    let mut decreasing = true;
    for w in rows.windows(2) {
        decreasing &= w[1].distortion + 3.0 * (w[0].std_error + w[1].std_error) < w[0].distortion;
    }
    let mut stationary = true;
    let mut worst = 0.0f64;
    for row in &rows {
        let rep = stationarity_check(&dist, &row.quantizer, 50_000, 99, Tolerance::default()).unwrap();
        stationary &= rep.is_stationary();
        worst = worst.max(rep.max_normalized_residual());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    Outcome {
        pass: decreasing && stationary && elapsed < 300.0,
        detail: format!(
            "distortions {:?}, max normalized residual {worst:.2e}",
            rows.iter().map(|r| format!("{:.4}", r.distortion)).collect::<Vec<_>>()
        ),
    }
}

fn run_cli(dir: &Path, out: &str, args: &[&str]) -> Vec<(String, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_quantor"))
        .args(args)
        .args(["--seed", "11", "--out", out])
        .current_dir(dir)
        .env_remove("QUANTOR_SEED")
        .output()
        .unwrap()
        .status;
    assert!(status.code().is_some());
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join(out))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let q = serde_json::to_string(&Quantizer::scalar(2.0, &[0.0, 3.0]).unwrap()).unwrap();
    std::fs::write(dir.path().join("pair.json"), q).unwrap();
    let commands: [&[&str]; 5] = [
        &["quantize", "--dist", "disk:0,0,1", "--n", "3", "--n-samples", "20000"],
        &["sweep", "--dist", "uniform:-1,1", "--n-range", "1..4"],
        &["verify", "pair.json", "--dist", "uniform:-1,1", "--trials", "400"],
        &["counterexample", "--trials", "400", "--probe-samples", "20000", "--n-samples", "100000"],
        &["gradcheck"],
    ];
    let mut identical = 0;
    for (k, args) in commands.iter().enumerate() {
        let a = run_cli(dir.path(), &format!("a{k}"), args);
        let b = run_cli(dir.path(), &format!("b{k}"), args);
        if !a.is_empty() && a == b {
            identical += 1;
        }
    }
    Outcome {
        pass: identical == commands.len(),
        detail: format!("{identical}/{} commands byte-identical across reruns", commands.len()),
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("counterexample", criterion_1),
        ("gradient", criterion_2),
        ("stationarity at convergence", criterion_3),
        ("distinct, cell-optimal minima", criterion_4),
        ("strict minima inside the disk", criterion_5),
        ("1/(3n^2) levels", criterion_6),
        ("brownian levels", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        report(i + 1, name, t0.elapsed(), &o);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
