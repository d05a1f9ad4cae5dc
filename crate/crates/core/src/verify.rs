//! Executable checks: stationarity, local-minimum probing, the two
//! local-minimum theorems and the uniform counterexample.
//!
//! Every probe and check is sampling based, so "strict" and "passed" mean
//! "no contrary evidence at the given radius, trial count and sample size".

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distortion::{
    admissibility, atom_collision, distortion, distortion_exact_1d, distortion_gradient, Estimate,
    Moments, Quantizer,
};
use crate::distribution::{Distribution, Samples};
use crate::error::{QuantError, Result};
use crate::optimize::{minimize_cell, multistart, residual_scale, Method, OptimizerConfig};
use crate::space::Point;

const PROBE_STREAM_OFFSET: u64 = 1 << 43;
const CONFIRM_STREAM_OFFSET: u64 = 1 << 44;
const CELL_START_OFFSET: u64 = 1 << 45;

/// Codepoints closer than this count as duplicates for stationarity.
pub const DUPLICATE_TOL: f64 = 1e-12;
/// Minimal pairwise distance required by the distinctness conclusion.
pub const DISTINCT_TOL: f64 = 1e-9;
/// Tolerance of support membership in the theorem checks.
pub const SUPPORT_TOL: f64 = 1e-6;
/// Required boundary clearance for interior membership.
pub const INTERIOR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Tolerance {
    /// Bound on the normalized residual `||grad_i||_* / (r E||X||^{r-1})`.
    Normalized(f64),
    /// Bound of `k` standard errors of each residual.
    StdErrors(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::StdErrors(10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stationary,
    NotStationary,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    /// Gradient component per codepoint (folded dual vector).
    pub residuals: Vec<Point>,
    pub residual_norms: Vec<f64>,
    /// Residual norms divided by `r E||X||^{r-1}`.
    pub normalized_residuals: Vec<f64>,
    /// Normalized bound applied to each codepoint.
    pub tolerance: Vec<f64>,
    pub tolerance_rule: Tolerance,
    pub cell_mass: Vec<f64>,
    pub positive_mass_ok: bool,
    pub admissible_mass: f64,
    pub atom_collision: Option<usize>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub n_samples: usize,
}

impl StationarityReport {
    pub fn is_stationary(&self) -> bool {
        self.verdict == Verdict::Stationary
    }

    pub fn max_normalized_residual(&self) -> f64 {
        self.normalized_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Checks the first-order condition: every cell has positive mass and every
/// gradient component vanishes up to the tolerance.
pub fn stationarity_check(
    dist: &Distribution,
    q: &Quantizer,
    n_samples: usize,
    stream: u64,
    tol: Tolerance,
) -> Result<StationarityReport> {
    if q.r < 1.0 {
        return Err(QuantError::Precondition("stationarity needs r >= 1".into()));
    }
    let collision = if q.r == 1.0 { atom_collision(dist, q) } else { None };
    let adm = admissibility(dist, q, n_samples, stream)?;
    let mut reason = None;
    if q.min_pairwise_distance() <= DUPLICATE_TOL {
        reason = Some("duplicated codepoints".to_string());
    } else if let Some(i) = collision {
        reason = Some(format!("r = 1 and codepoint {i} lies on an atom"));
    }
    let scale = residual_scale(dist, q.r);
    let n = q.n();
    let (residuals, residual_norms, se_norms) = if collision.is_none() {
        let g = distortion_gradient(dist, q, n_samples, stream)?;
        let norms = g.dual_norms(&q.space);
        let se = g.std_error_norms(&q.space);
        (g.components, norms, se)
    } else {
        (vec![Point::zeros(q.dim()); n], vec![f64::NAN; n], vec![f64::NAN; n])
    };
    let normalized: Vec<f64> = residual_norms.iter().map(|v| v / scale).collect();
    let tolerance: Vec<f64> = match tol {
        Tolerance::Normalized(t) => vec![t; n],
        // a small floor keeps exactly zero residuals (empty cells) comparable
        Tolerance::StdErrors(k) => se_norms.iter().map(|s| (k * s / scale).max(1e-12)).collect(),
    };
    let positive_mass_ok = adm.cell_mass.iter().all(|m| *m > 0.0);
    let verdict = if reason.is_some() {
        Verdict::Inapplicable
    } else if positive_mass_ok && normalized.iter().zip(&tolerance).all(|(v, t)| v <= t) {
        Verdict::Stationary
    } else {
        Verdict::NotStationary
    };
    Ok(StationarityReport {
        residuals,
        residual_norms,
        normalized_residuals: normalized,
        tolerance,
        tolerance_rule: tol,
        cell_mass: adm.cell_mass,
        positive_mass_ok,
        admissible_mass: adm.open_mass,
        atom_collision: collision,
        verdict,
        reason,
        n_samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    Strict,
    NonStrict,
    Refuted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub radius: f64,
    pub trials: usize,
    pub n_samples: usize,
    pub stream: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { radius: 0.5, trials: 2000, n_samples: 100_000, stream: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeVerdict {
    pub improved: bool,
    pub best_improving_tuple: Option<Vec<Point>>,
    /// Improvement of the best tuple and its standard error (common samples).
    pub best_delta: Option<Estimate>,
    /// Improvement of the best tuple on an independent stream.
    pub confirmation_delta: Option<Estimate>,
    /// Share of probes that moved by at least half the radius and
    /// changed the distortion by at most three standard errors.
    pub flat_fraction: f64,
    pub strictness: Strictness,
    pub radius: f64,
    pub trials: usize,
    pub base_distortion: Estimate,
}

#[inline]
fn pow_r(d: f64, r: f64) -> f64 {
    if r == 2.0 {
        d * d
    } else if r == 1.0 {
        d
    } else {
        d.powf(r)
    }
}

/// Per-sample `min_i ||x - a_i||^r`.
fn pointwise_distortion(q: &Quantizer, xs: &Samples, out: &mut Vec<f64>) {
    out.clear();
    out.extend(xs.iter().map(|x| pow_r(q.nearest(x).1, q.r)));
}

/// Mean and standard error of `cand - base` over common samples.
fn paired_delta(q: &Quantizer, xs: &Samples, base: &[f64]) -> Estimate {
    let mut m = Moments::default();
    for (x, b) in xs.iter().zip(base) {
        m.push(pow_r(q.nearest(x).1, q.r) - b);
    }
    m.estimate()
}

/// As [`paired_delta`], reusing the sample-to-codepoint distances `table`
/// (row-major, one row per sample) for the codepoints that did not move.
fn paired_delta_moved(
    q: &Quantizer,
    moved: &[bool],
    xs: &Samples,
    table: &[f64],
    base: &[f64],
) -> Estimate {
    let n = q.n();
    let mut m = Moments::default();
    for (k, (x, b)) in xs.iter().zip(base).enumerate() {
        let row = &table[k * n..(k + 1) * n];
        let mut best = f64::INFINITY;
        for i in 0..n {
            let d = if moved[i] { q.space.distance(x, &q.points[i]) } else { row[i] };
            best = best.min(d);
        }
        m.push(pow_r(best, q.r) - b);
    }
    m.estimate()
}

fn random_direction(q: &Quantizer, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..q.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = q.space.distance(&v, &vec![0.0; v.len()]);
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Searches the product ball of the given radius around `q` for a tuple with
/// lower distortion. Trials cycle through coordinate moves of one codepoint,
/// moves of one codepoint along a segment toward a support draw, and random
/// moves of a random nonempty subset of codepoints.
pub fn local_min_probe(dist: &Distribution, q: &Quantizer, cfg: &ProbeConfig) -> Result<ProbeVerdict> {
    if !(cfg.radius > 0.0) {
        return Err(QuantError::InvalidParameter("probe radius must be positive".into()));
    }
    if cfg.trials < 100 {
        return Err(QuantError::InvalidParameter("probe needs at least 100 trials".into()));
    }
    q.check_against(dist)?;
    let xs = dist.sample(cfg.stream, cfg.n_samples);
    let mut table = Vec::with_capacity(xs.len() * q.n());
    let mut base = Vec::with_capacity(xs.len());
    for x in xs.iter() {
        let start = table.len();
        table.extend(q.points.iter().map(|a| q.space.distance(x, a)));
        base.push(pow_r(table[start..].iter().copied().fold(f64::INFINITY, f64::min), q.r));
    }
    let base_est = {
        let mut m = Moments::default();
        base.iter().for_each(|v| m.push(*v));
        m.estimate()
    };
    let mut rng = dist.rng(cfg.stream.wrapping_add(PROBE_STREAM_OFFSET));
    let n = q.n();
    let dim = q.dim();
    let rho = cfg.radius;
    let mut best: Option<(Vec<Point>, Estimate)> = None;
    let mut flat = 0usize;
    let mut z = Vec::with_capacity(dim);

    for t in 0..cfg.trials {
        let mut points = q.points.clone();
        let mut moved = vec![false; n];
        let mut displacement = 0.0f64;
        match t % 4 {
            0 => {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..dim);
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                let len = q.space.distance(&e, &vec![0.0; dim]);
                let s: f64 = rng.random_range(-1.0..=1.0) * rho / len;
                points[i].0[j] += s;
                moved[i] = true;
                displacement = s.abs() * len;
            }
            1 => {
                let i = rng.random_range(0..n);
                z.clear();
                dist.draw_into(&mut rng, &mut z);
                let gap = q.space.distance(&z, &q.points[i]);
                if gap > 0.0 {
                    let s = rng.random::<f64>() * (rho / gap).min(1.0);
                    for (a, zj) in points[i].0.iter_mut().zip(&z) {
                        *a += s * (zj - *a);
                    }
                    moved[i] = true;
                    displacement = s * gap;
                }
            }
            _ => {
                let mut subset: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
                if !subset.iter().any(|b| *b) {
                    subset[rng.random_range(0..n)] = true;
                }
                for (i, on) in subset.iter().enumerate() {
                    if !on {
                        continue;
                    }
                    let u = random_direction(q, &mut rng);
                    let len = rho * rng.random::<f64>().powf(1.0 / dim as f64);
                    for (a, v) in points[i].0.iter_mut().zip(&u) {
                        *a += len * v;
                    }
                    moved[i] = true;
                    displacement = displacement.max(len);
                }
            }
        }
        let cand = q.with_points(points);
        let delta = paired_delta_moved(&cand, &moved, &xs, &table, &base);
        if delta.mean < -3.0 * delta.std_error {
            if best.as_ref().is_none_or(|(_, b)| delta.mean < b.mean) {
                best = Some((cand.points, delta));
            }
        } else if displacement >= rho / 2.0 && delta.mean.abs() <= 3.0 * delta.std_error {
            flat += 1;
        }
    }

    // a refutation must survive re-evaluation on an independent stream
    let mut confirmation = None;
    let mut improved = false;
    if let Some((pts, _)) = &best {
        let fresh = dist.sample(cfg.stream.wrapping_add(CONFIRM_STREAM_OFFSET), cfg.n_samples);
        let mut fresh_base = Vec::with_capacity(fresh.len());
        pointwise_distortion(q, &fresh, &mut fresh_base);
        let c = paired_delta(&q.with_points(pts.clone()), &fresh, &fresh_base);
        improved = c.mean < -3.0 * c.std_error;
        confirmation = Some(c);
    }
    let flat_fraction = flat as f64 / cfg.trials as f64;
    let strictness = if improved {
        Strictness::Refuted
    } else if flat > 0 {
        Strictness::NonStrict
    } else {
        Strictness::Strict
    };
    Ok(ProbeVerdict {
        improved,
        best_improving_tuple: best.as_ref().map(|(p, _)| p.clone()),
        best_delta: best.map(|(_, e)| e),
        confirmation_delta: confirmation,
        flat_fraction,
        strictness,
        radius: rho,
        trials: cfg.trials,
        base_distortion: base_est,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckVerdict {
    Passed,
    Failed,
    Inapplicable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOptimality {
    pub index: usize,
    pub cell_samples: usize,
    /// Largest improvement of a restarted one-point solve over `a_i`.
    pub best_improvement: f64,
    pub std_error: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremAReport {
    pub verdict: CheckVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub min_pairwise_distance: f64,
    pub distinct: bool,
    pub cells: Vec<CellOptimality>,
    pub cells_optimal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity: Option<StationarityReport>,
}

impl TheoremAReport {
    fn inapplicable(q: &Quantizer, reason: String) -> Self {
        TheoremAReport {
            verdict: CheckVerdict::Inapplicable,
            reason: Some(reason),
            min_pairwise_distance: q.min_pairwise_distance(),
            distinct: false,
            cells: Vec::new(),
            cells_optimal: false,
            stationarity: None,
        }
    }
}

/// Number of restarts of the one-point problem per cell.
pub const CELL_RESTARTS: usize = 8;

/// Checks the conclusions for a local minimizer whose codepoints lie in a
/// support without isolated points: distinct codepoints, each codepoint
/// optimal for its own cell, and stationarity when the norm is smooth.
pub fn theorem_a_check(
    dist: &Distribution,
    q: &Quantizer,
    n_samples: usize,
    stream: u64,
    probe: Option<&ProbeVerdict>,
) -> Result<TheoremAReport> {
    q.check_against(dist)?;
    if probe.is_some_and(|p| p.strictness == Strictness::Refuted) {
        return Ok(TheoremAReport::inapplicable(q, "probe found a better tuple".into()));
    }
    if !dist.is_continuous() || dist.support_has_isolated_points() {
        return Ok(TheoremAReport::inapplicable(q, "support has isolated points".into()));
    }
    for (i, a) in q.points.iter().enumerate() {
        if !dist.support_contains(a, SUPPORT_TOL)? {
            return Ok(TheoremAReport::inapplicable(q, format!("codepoint {i} is outside the support")));
        }
    }
    let min_pair = q.min_pairwise_distance();
    let distinct = min_pair > DISTINCT_TOL;

    let xs = dist.sample(stream, n_samples);
    let owners: Vec<usize> = xs.iter().map(|x| q.nearest(x).0).collect();
    let mut rng = dist.rng(stream.wrapping_add(CELL_START_OFFSET));
    let mut cells = Vec::with_capacity(q.n());
    for (i, a) in q.points.iter().enumerate() {
        let cell = xs.select(|k| owners[k] == i);
        if cell.is_empty() {
            cells.push(CellOptimality {
                index: i,
                cell_samples: 0,
                best_improvement: f64::NAN,
                std_error: f64::NAN,
                ok: false,
            });
            continue;
        }
        let one = q.with_points(vec![a.clone()]);
        let mut base = Vec::with_capacity(cell.len());
        pointwise_distortion(&one, &cell, &mut base);
        let mut best = Estimate { mean: 0.0, std_error: 0.0, n_samples: cell.len() };
        for _ in 0..CELL_RESTARTS {
            let start = cell.get(rng.random_range(0..cell.len())).to_vec();
            let y = minimize_cell(&q.space, q.r, &cell, &start, 500);
            let delta = paired_delta(&one.with_points(vec![y]), &cell, &base);
            if -delta.mean > -best.mean {
                best = delta;
            }
        }
        cells.push(CellOptimality {
            index: i,
            cell_samples: cell.len(),
            best_improvement: -best.mean,
            std_error: best.std_error,
            ok: -best.mean <= 3.0 * best.std_error,
        });
    }
    let cells_optimal = cells.iter().all(|c| c.ok);

    let smooth = q.space.exponent() > 1.0 && q.r >= 1.0;
    let stationarity = if smooth {
        Some(stationarity_check(dist, q, n_samples, stream, Tolerance::default())?)
    } else {
        None
    };
    let stationary_ok = stationarity.as_ref().is_none_or(|s| s.is_stationary());
    let verdict = if distinct && cells_optimal && stationary_ok {
        CheckVerdict::Passed
    } else {
        CheckVerdict::Failed
    };
    Ok(TheoremAReport {
        verdict,
        reason: None,
        min_pairwise_distance: min_pair,
        distinct,
        cells,
        cells_optimal,
        stationarity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: usize,
    pub quantizer: Quantizer,
    pub distortion: f64,
    pub strictness: Strictness,
    pub in_support: bool,
    /// Smallest boundary clearance; `None` when not asserted.
    pub min_clearance: Option<f64>,
    pub interior_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBReport {
    pub verdict: CheckVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub r: f64,
    pub n: usize,
    pub strict_count: usize,
    pub starts: Vec<StartOutcome>,
}

/// Options of [`theorem_b_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBConfig {
    pub starts: usize,
    pub optimizer: OptimizerConfig,
    pub probe: ProbeConfig,
    /// Additional initial codebooks run before the random starts.
    pub seeded: Vec<Quantizer>,
}

impl Default for TheoremBConfig {
    fn default() -> Self {
        TheoremBConfig {
            starts: 32,
            optimizer: OptimizerConfig { n_samples: 20_000, ..Default::default() },
            probe: ProbeConfig { radius: 0.25, trials: 400, n_samples: 20_000, stream: 7 },
            seeded: Vec::new(),
        }
    }
}

/// For Hilbert spaces and convex supports: every strict local minimum found
/// by multistart optimization lies in the support, and in its interior when
/// `r >= 2` and the support has nonempty interior.
pub fn theorem_b_check(
    dist: &Distribution,
    r: f64,
    n: usize,
    cfg: &TheoremBConfig,
) -> Result<TheoremBReport> {
    let space = dist.space().clone();
    let not_applicable = |reason: &str| TheoremBReport {
        verdict: CheckVerdict::Inapplicable,
        reason: Some(reason.to_string()),
        r,
        n,
        strict_count: 0,
        starts: Vec::new(),
    };
    if !space.is_hilbert() {
        return Ok(not_applicable("norm is not Hilbert"));
    }
    if !dist.support_is_convex() {
        return Ok(not_applicable("support is not convex"));
    }
    if r < 1.0 {
        return Ok(not_applicable("r < 1"));
    }
    let method = if r == 2.0 { Method::Lloyd } else { Method::Cellwise };
    let opt = OptimizerConfig { method, ..cfg.optimizer.clone() };
    let check_interior = r >= 2.0 && dist.support_has_interior() && dist.is_continuous();

    let mut traces = Vec::new();
    for q0 in &cfg.seeded {
        traces.push(crate::optimize::optimize(dist, q0, &opt)?);
    }
    traces.extend(multistart(dist, &space, r, n, cfg.starts, &opt)?);

    let mut starts = Vec::with_capacity(traces.len());
    for (k, tr) in traces.into_iter().enumerate() {
        let q = tr.quantizer;
        let probe = local_min_probe(dist, &q, &cfg.probe)?;
        let mut in_support = true;
        let mut min_clearance = f64::INFINITY;
        for a in &q.points {
            in_support &= dist.support_contains(a, SUPPORT_TOL)?;
            if let Some(c) = dist.boundary_clearance(a)? {
                min_clearance = min_clearance.min(c);
            }
        }
        starts.push(StartOutcome {
            start: k,
            distortion: tr.final_distortion.mean,
            strictness: probe.strictness,
            in_support,
            min_clearance: check_interior.then_some(min_clearance),
            interior_ok: check_interior.then_some(min_clearance > INTERIOR_TOL),
            quantizer: q,
        });
    }
    let strict: Vec<&StartOutcome> = starts
        .iter()
        .filter(|s| s.strictness == Strictness::Strict)
        .collect();
    let all_ok = strict
        .iter()
        .all(|s| s.in_support && s.interior_ok.unwrap_or(true));
    let verdict = if strict.is_empty() {
        CheckVerdict::Inconclusive
    } else if all_ok {
        CheckVerdict::Passed
    } else {
        CheckVerdict::Failed
    };
    Ok(TheoremBReport {
        verdict,
        reason: None,
        r,
        n,
        strict_count: strict.len(),
        starts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub probe: ProbeConfig,
    pub rs: Vec<f64>,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            seed: 0,
            n_samples: 1_000_000,
            probe: ProbeConfig::default(),
            rs: vec![1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationResult {
    pub points: Vec<f64>,
    pub distortion: Estimate,
    pub exact: f64,
    pub distortion_ok: bool,
    pub probe: ProbeVerdict,
    pub outside_support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleCase {
    pub r: f64,
    /// Local minimum with one codepoint outside the support.
    pub pair: ConfigurationResult,
    /// Same with the outer codepoint doubled.
    pub triple: ConfigurationResult,
    /// Symmetric optimum.
    pub symmetric: ConfigurationResult,
    pub symmetric_beats_pair: bool,
    pub reproduced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub cases: Vec<CounterexampleCase>,
    /// Probe radius above 1/2, where the outer codepoint can reach the
    /// support and refutations are expected.
    pub large_radius: bool,
    pub reproduced: bool,
}

fn evaluate_configuration(
    dist: &Distribution,
    r: f64,
    points: &[f64],
    cfg: &CounterexampleConfig,
) -> Result<ConfigurationResult> {
    let q = Quantizer::scalar(r, points)?;
    let est = distortion(dist, &q, cfg.n_samples, 0)?;
    let exact = distortion_exact_1d(dist, &q)?;
    let probe = local_min_probe(dist, &q, &cfg.probe)?;
    let mut outside = Vec::new();
    for (i, a) in q.points.iter().enumerate() {
        if !dist.support_contains(a, 0.0)? {
            outside.push(i);
        }
    }
    Ok(ConfigurationResult {
        points: points.to_vec(),
        distortion_ok: (est.mean - exact).abs() <= 3.0 * est.std_error,
        distortion: est,
        exact,
        probe,
        outside_support: outside,
    })
}

/// Uniform law on `[-1, 1]` with `(0, 3)`, `(0, 3, 3)` and `(-1/2, 1/2)`.
///
/// Up to probe radius 1/2 the outer configurations must be non-strict local
/// minima and the symmetric pair strict. Beyond it the outer codepoint can
/// capture mass, so a refutation is also accepted for them and the symmetric
/// pair only needs to survive.
pub fn counterexample_suite(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    let dist = Distribution::uniform_interval(-1.0, 1.0, cfg.seed)?;
    let large_radius = cfg.probe.radius > 0.5;
    let mut cases = Vec::new();
    for &r in &cfg.rs {
        let pair = evaluate_configuration(&dist, r, &[0.0, 3.0], cfg)?;
        let triple = evaluate_configuration(&dist, r, &[0.0, 3.0, 3.0], cfg)?;
        let symmetric = evaluate_configuration(&dist, r, &[-0.5, 0.5], cfg)?;
        let symmetric_beats_pair = symmetric.distortion.mean + 3.0 * symmetric.distortion.std_error
            < pair.distortion.mean - 3.0 * pair.distortion.std_error;
        let outer_ok = |c: &ConfigurationResult| {
            c.distortion_ok
                && match c.probe.strictness {
                    Strictness::NonStrict => true,
                    Strictness::Refuted => large_radius,
                    Strictness::Strict => false,
                }
        };
        let symmetric_ok = match symmetric.probe.strictness {
            Strictness::Strict => true,
            Strictness::NonStrict => large_radius,
            Strictness::Refuted => false,
        };
        let reproduced = outer_ok(&pair)
            && pair.outside_support == [1]
            && outer_ok(&triple)
            && triple.outside_support == [1, 2]
            && symmetric.distortion_ok
            && symmetric_ok
            && symmetric_beats_pair;
        cases.push(CounterexampleCase { r, pair, triple, symmetric, symmetric_beats_pair, reproduced });
    }
    let reproduced = !cases.is_empty() && cases.iter().all(|c| c.reproduced);
    Ok(CounterexampleReport { cases, large_radius, reproduced })
}

/// Analytic directional derivative against a central difference of the
/// sample distortion on common samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckRow {
    pub space: String,
    pub r: f64,
    pub n: usize,
    pub analytic: f64,
    pub finite_difference: f64,
    pub rel_error: f64,
    pub degenerate_fraction: f64,
}

/// Compares `<grad G(a), h>` with `(G(a + eps h) - G(a - eps h)) / (2 eps)`
/// on one sample pool, for `h` the Riesz image of the gradient scaled to unit
/// largest component.
pub fn gradient_check(
    dist: &Distribution,
    q: &Quantizer,
    eps: f64,
    n_samples: usize,
    stream: u64,
) -> Result<GradCheckRow> {
    let xs = dist.sample(stream, n_samples);
    let g = crate::distortion::gradient_on(q, &xs)?;
    let mut h: Vec<Point> = g.components.iter().map(|u| Point(q.space.riesz(u))).collect();
    let scale = h
        .iter()
        .map(|v| q.space.norm(v).unwrap_or(0.0))
        .fold(0.0, f64::max);
    if scale > 0.0 {
        h.iter_mut().for_each(|v| v.0.iter_mut().for_each(|x| *x /= scale));
    }
    let shifted = |sign: f64| {
        q.with_points(
            q.points
                .iter()
                .zip(&h)
                .map(|(a, v)| Point(a.iter().zip(v.iter()).map(|(x, y)| x + sign * eps * y).collect()))
                .collect(),
        )
    };
    let plus = crate::distortion::distortion_on(&shifted(1.0), &xs)?.mean;
    let minus = crate::distortion::distortion_on(&shifted(-1.0), &xs)?.mean;
    let fd = (plus - minus) / (2.0 * eps);
    let analytic = g.pairing(&q.space, &h)?;
    let rel_error = (analytic - fd).abs() / fd.abs().max(analytic.abs()).max(1e-300);
    Ok(GradCheckRow {
        space: space_label(&q.space),
        r: q.r,
        n: q.n(),
        analytic,
        finite_difference: fd,
        rel_error,
        degenerate_fraction: g.degenerate_fraction,
    })
}

fn space_label(space: &crate::space::NormedSpace) -> String {
    use crate::space::NormedSpace::*;
    match space {
        Euclidean { d } => format!("euclidean({d})"),
        LpSequence { d, p } => format!("lp({d},{p})"),
        LpGrid { p, weights, .. } => format!("lp_grid({},{p})", weights.len()),
        L1Grid { weights, .. } => format!("l1_grid({})", weights.len()),
    }
}

/// Support draws perturbed by `N(0, 0.05^2)` noise on every coordinate, so
/// grid codepoints avoid the pinned node of the paths.
pub fn random_tuple(dist: &Distribution, r: f64, n: usize, stream: u64) -> Result<Quantizer> {
    let mut rng = dist.rng(stream);
    let mut points = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for _ in 0..n {
        buf.clear();
        dist.draw_into(&mut rng, &mut buf);
        let noisy: Vec<f64> = buf
            .iter()
            .map(|x| x + 0.05 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        points.push(Point(noisy));
    }
    Quantizer::new(dist.space().clone(), r, points)
}

/// Default family rotation of the gradient check: a 2-D Gaussian in the
/// Euclidean plane and Brownian paths on an 8-node grid with the `L^2` and
/// `L^1` norms.
pub fn gradcheck_laws(seed: u64) -> Result<Vec<Distribution>> {
    Ok(vec![
        Distribution::gaussian_iso(2, 0.0, 1.0, seed)?,
        Distribution::brownian_kl(8, 4, seed)?,
        Distribution::new(crate::distribution::DistKind::BrownianKl { m: 8, k: 4, p: 1.0 }, seed)?,
    ])
}

/// `tuples` random admissible tuples cycling through `laws` and `r` in
/// `{1, 2, 3}`, with `n` from 1 to 4.
pub fn gradcheck_suite(
    laws: &[Distribution],
    tuples: usize,
    eps: f64,
    n_samples: usize,
) -> Result<Vec<GradCheckRow>> {
    let rs = [1.0, 2.0, 3.0];
    let mut rows = Vec::with_capacity(tuples);
    for t in 0..tuples {
        let dist = &laws[t % laws.len()];
        let r = rs[(t / laws.len()) % rs.len()];
        let n = 1 + t % 4;
        let q = random_tuple(dist, r, n, 1000 + t as u64)?;
        if atom_collision(dist, &q).is_some() {
            continue;
        }
        rows.push(gradient_check(dist, &q, eps, n_samples, t as u64)?);
    }
    Ok(rows)
}
