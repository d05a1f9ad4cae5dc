//! Constructors of locally optimal quantizers.
//!
//! * [`lloyd`]: fixed-point iteration moving each codepoint to the conditional
//!   mean of its cell (`r = 2`, Hilbert norms).
//! * [`cellwise_update`]: the same alternation for general `r >= 1`, solving
//!   the convex one-point problem on every cell.
//! * [`gradient_descent`]: steps along the Riesz image of the distortion
//!   gradient with step halving.
//! * [`stochastic_gradient`]: one-sample online updates of the owning
//!   codepoint (competitive learning).
//! * [`split_init`]: grows a codebook by one fresh support point.
//!
//! Lloyd, cellwise and gradient descent work on a fixed sample pool drawn once
//! from `cfg.stream`, which makes every iteration a deterministic map of the
//! codebook.

use std::io::Write;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distortion::{
    atom_collision, distortion_on, gradient_on, Estimate, Quantizer, COINCIDENCE_TOL,
};
use crate::distribution::{Distribution, Samples};
use crate::error::{QuantError, Result};
use crate::space::{NormedSpace, Point};

/// Offset separating the resampling stream from the pool stream.
const RESAMPLE_STREAM_OFFSET: u64 = 1 << 40;
/// Offset for the evaluation pool of the stochastic method.
const EVAL_STREAM_OFFSET: u64 = 1 << 41;
/// Offset for multistart initial codebooks.
const INIT_STREAM_OFFSET: u64 = 1 << 42;

/// Draws tried by [`split_init`] before giving up.
pub const SPLIT_MAX_DRAWS: usize = 10_000;
/// Minimal distance between a split point and the existing codepoints.
pub const SPLIT_MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lloyd,
    Cellwise,
    GradientDescent,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyCellPolicy {
    /// Replace the codepoint of an empty cell by a fresh support draw.
    ResampleFromSupport,
    /// Leave it where it is.
    Freeze,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_iters: usize,
    /// Pool size for the expectations.
    pub n_samples: usize,
    /// Initial step of gradient descent.
    pub initial_step: f64,
    pub empty_cell_policy: EmptyCellPolicy,
    /// Stop when the relative distortion change falls below this.
    pub rel_tol: f64,
    /// Stop when no codepoint moves more than this.
    pub move_tol: f64,
    /// Gradient descent stops once the normalized residual is below this.
    pub grad_tol: f64,
    pub stream: u64,
    /// Stochastic method: `gamma_t = gamma0 / (1 + t / tau)`.
    pub gamma0: f64,
    pub tau: f64,
    pub sgd_steps: usize,
    /// Stochastic method: draws between trace records.
    pub record_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            method: Method::Lloyd,
            max_iters: 500,
            n_samples: 100_000,
            initial_step: 1.0,
            empty_cell_policy: EmptyCellPolicy::ResampleFromSupport,
            rel_tol: 1e-8,
            move_tol: 1e-7,
            grad_tol: 1e-6,
            stream: 1,
            gamma0: 0.1,
            tau: 1e4,
            sgd_steps: 1_000_000,
            record_every: 10_000,
        }
    }
}

impl OptimizerConfig {
    pub fn with_method(method: Method) -> Self {
        OptimizerConfig { method, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("move_tol", self.move_tol),
            ("grad_tol", self.grad_tol),
            ("initial_step", self.initial_step),
            ("gamma0", self.gamma0),
            ("tau", self.tau),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(QuantError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.max_iters == 0 {
            return Err(QuantError::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.n_samples == 0 {
            return Err(QuantError::InvalidParameter("n_samples must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
    /// Step size underflowed before the residual reached its tolerance.
    Stagnation,
    /// Stochastic method exhausted its draws.
    StepsExhausted,
}

/// One line of an optimization trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Distortion of the codebook entering this iteration.
    pub distortion: f64,
    pub std_error: f64,
    pub max_move: f64,
    pub empty_cells: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Normalized gradient residual (gradient methods).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeTrace {
    pub method: Method,
    pub records: Vec<IterRecord>,
    pub quantizer: Quantizer,
    /// Distortion of the final codebook on the method's pool.
    pub final_distortion: Estimate,
    pub stop: StopReason,
}

impl OptimizeTrace {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    /// One JSON object per record.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for rec in &self.records {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Normalization `r E||X||^{r-1}` for gradient residuals.
pub fn residual_scale(dist: &Distribution, r: f64) -> f64 {
    let s = r * dist.moment(r - 1.0);
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// Largest dual norm among the gradient components.
fn max_dual_norm(space: &NormedSpace, comps: &[Point]) -> f64 {
    comps
        .iter()
        .map(|c| space.dual_norm(c).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

fn max_move(space: &NormedSpace, a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| space.distance(x, y))
        .fold(0.0, f64::max)
}

/// Dispatches on `cfg.method`.
pub fn optimize(dist: &Distribution, q0: &Quantizer, cfg: &OptimizerConfig) -> Result<OptimizeTrace> {
    match cfg.method {
        Method::Lloyd => lloyd(dist, q0, cfg),
        Method::Cellwise => cellwise_update(dist, q0, cfg),
        Method::GradientDescent => gradient_descent(dist, q0, cfg),
        Method::Stochastic => stochastic_gradient(dist, q0, cfg),
    }
}

/// Lloyd's fixed-point iteration. Requires `r = 2` and a Hilbert norm.
pub fn lloyd(dist: &Distribution, q0: &Quantizer, cfg: &OptimizerConfig) -> Result<OptimizeTrace> {
    if q0.r != 2.0 || !q0.space.is_hilbert() {
        return Err(QuantError::Precondition(
            "lloyd needs r = 2 and a Hilbert norm".into(),
        ));
    }
    alternate(dist, q0, cfg, Method::Lloyd)
}

/// Alternating minimization for general `r >= 1`: assign, then solve the
/// convex one-point problem on each cell.
pub fn cellwise_update(
    dist: &Distribution,
    q0: &Quantizer,
    cfg: &OptimizerConfig,
) -> Result<OptimizeTrace> {
    if q0.r < 1.0 {
        return Err(QuantError::Precondition("cellwise update needs r >= 1".into()));
    }
    alternate(dist, q0, cfg, Method::Cellwise)
}

fn alternate(
    dist: &Distribution,
    q0: &Quantizer,
    cfg: &OptimizerConfig,
    method: Method,
) -> Result<OptimizeTrace> {
    cfg.validate()?;
    q0.check_against(dist)?;
    let pool = dist.sample(cfg.stream, cfg.n_samples);
    let mut resample_rng = dist.rng(cfg.stream.wrapping_add(RESAMPLE_STREAM_OFFSET));
    let mut q = q0.clone();
    let mut records = Vec::new();
    let mut prev: Option<f64> = None;
    let mut stop = StopReason::MaxIters;
    let dim = q.dim();
    let mut owners = vec![0usize; pool.len()];

    for iter in 1..=cfg.max_iters {
        let mut sums = vec![0.0; q.n() * dim];
        let mut counts = vec![0usize; q.n()];
        let mut g = crate::distortion::Moments::default();
        for (k, x) in pool.iter().enumerate() {
            let (i, d, _) = q.nearest(x);
            owners[k] = i;
            counts[i] += 1;
            g.push(if q.r == 2.0 { d * d } else { d.powf(q.r) });
            if method == Method::Lloyd {
                for (s, v) in sums[i * dim..(i + 1) * dim].iter_mut().zip(x) {
                    *s += v;
                }
            }
        }
        let est = g.estimate();

        let mut next = q.points.clone();
        let mut empty = Vec::new();
        for i in 0..q.n() {
            if counts[i] == 0 {
                empty.push(i);
                if cfg.empty_cell_policy == EmptyCellPolicy::ResampleFromSupport {
                    let mut buf = Vec::with_capacity(dim);
                    dist.draw_into(&mut resample_rng, &mut buf);
                    next[i] = Point(buf);
                }
                continue;
            }
            next[i] = match method {
                Method::Lloyd => Point(
                    sums[i * dim..(i + 1) * dim]
                        .iter()
                        .map(|s| s / counts[i] as f64)
                        .collect(),
                ),
                _ => {
                    let cell = pool.select(|k| owners[k] == i);
                    minimize_cell(&q.space, q.r, &cell, &q.points[i], 500)
                }
            };
        }
        let mv = max_move(&q.space, &q.points, &next);
        records.push(IterRecord {
            iter,
            distortion: est.mean,
            std_error: est.std_error,
            max_move: mv,
            empty_cells: empty,
            step: None,
            residual: None,
            accepted: true,
        });
        q.points = next;
        let rel_done = prev.is_some_and(|p| (p - est.mean).abs() <= cfg.rel_tol * est.mean.abs());
        prev = Some(est.mean);
        if mv < cfg.move_tol || rel_done {
            stop = StopReason::Converged;
            break;
        }
    }
    let final_distortion = distortion_on(&q, &pool)?;
    Ok(OptimizeTrace { method, records, quantizer: q, final_distortion, stop })
}

fn cell_objective(space: &NormedSpace, r: f64, cell: &Samples, y: &[f64]) -> f64 {
    let n = cell.len() as f64;
    cell.iter()
        .map(|x| {
            let d = space.distance(x, y);
            if r == 2.0 {
                d * d
            } else {
                d.powf(r)
            }
        })
        .sum::<f64>()
        / n
}

/// Folded-dual gradient of `y -> mean ||x - y||^r` over the cell.
fn cell_gradient(space: &NormedSpace, r: f64, cell: &Samples, y: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; y.len()];
    let mut diff = vec![0.0; y.len()];
    let n = cell.len() as f64;
    for x in cell.iter() {
        for ((o, a), b) in diff.iter_mut().zip(y).zip(x) {
            *o = a - b;
        }
        let d = space.distance(y, x);
        if d <= COINCIDENCE_TOL {
            continue;
        }
        let _ = space.add_norm_gradient(&diff, r * d.powf(r - 1.0) / n, &mut g);
    }
    g
}

/// Minimizes `y -> mean_{x in cell} ||x - y||^r` (convex for `r >= 1`) from
/// `start`. Never returns a point with a larger objective than `start`.
pub fn minimize_cell(
    space: &NormedSpace,
    r: f64,
    cell: &Samples,
    start: &[f64],
    max_inner: usize,
) -> Point {
    let dim = start.len();
    if cell.is_empty() {
        return Point(start.to_vec());
    }
    if space.is_hilbert() && r == 2.0 {
        let mut mean = vec![0.0; dim];
        for x in cell.iter() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        let n = cell.len() as f64;
        return Point(mean.into_iter().map(|m| m / n).collect());
    }
    let f0 = cell_objective(space, r, cell, start);
    let mut y = start.to_vec();
    let mut fy = f0;
    let scale = cell
        .iter()
        .map(|x| space.distance(x, start))
        .fold(0.0, f64::max)
        .max(1e-300);
    if space.is_hilbert() && r < 2.0 {
        // Weiszfeld-type reweighting; a majorize-minimize step for 1 <= r < 2.
        for _ in 0..max_inner {
            let mut num = vec![0.0; dim];
            let mut den = 0.0;
            for x in cell.iter() {
                let d = space.distance(x, &y).max(1e-12 * scale);
                let w = d.powf(r - 2.0);
                den += w;
                for (o, v) in num.iter_mut().zip(x) {
                    *o += w * v;
                }
            }
            let next: Vec<f64> = num.iter().map(|v| v / den).collect();
            let step = space.distance(&next, &y);
            let fn_ = cell_objective(space, r, cell, &next);
            if fn_ > fy {
                break;
            }
            y = next;
            fy = fn_;
            if step <= 1e-12 * scale {
                break;
            }
        }
    } else {
        // backtracking descent along the Riesz image of the gradient
        let mut t = 1.0;
        for _ in 0..max_inner {
            let g = cell_gradient(space, r, cell, &y);
            let h = space.riesz(&g);
            let slope: f64 = g.iter().zip(&h).map(|(a, b)| a * b).sum();
            if !(slope > 0.0) {
                break;
            }
            t *= 2.0;
            let mut accepted = false;
            while t * slope.sqrt() > 1e-14 * scale {
                let cand: Vec<f64> = y.iter().zip(&h).map(|(a, b)| a - t * b).collect();
                let fc = cell_objective(space, r, cell, &cand);
                if fc <= fy - 1e-4 * t * slope {
                    y = cand;
                    fy = fc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted || t * slope.sqrt() <= 1e-12 * scale {
                break;
            }
        }
    }
    if fy <= f0 {
        Point(y)
    } else {
        Point(start.to_vec())
    }
}

/// Full-gradient descent on the pool distortion. A step is accepted when it
/// lowers both the distortion and the normalized residual; otherwise it is
/// halved. Accepted steps double the step again, up to `initial_step`.
pub fn gradient_descent(
    dist: &Distribution,
    q0: &Quantizer,
    cfg: &OptimizerConfig,
) -> Result<OptimizeTrace> {
    cfg.validate()?;
    crate::distortion::check_gradient_preconditions(dist, q0)?;
    let pool = dist.sample(cfg.stream, cfg.n_samples);
    let norm = residual_scale(dist, q0.r);
    let mut q = q0.clone();
    let mut est = distortion_on(&q, &pool)?;
    let mut grad = gradient_on(&q, &pool)?;
    let mut step = cfg.initial_step;
    let mut records = Vec::new();
    let mut stop = StopReason::MaxIters;

    for iter in 1..=cfg.max_iters {
        let residual = max_dual_norm(&q.space, &grad.components) / norm;
        if residual <= cfg.grad_tol {
            stop = StopReason::Converged;
            break;
        }
        let cand = q.with_points(
            q.points
                .iter()
                .zip(&grad.components)
                .map(|(a, u)| {
                    let h = q.space.riesz(u);
                    Point(a.iter().zip(&h).map(|(x, v)| x - step * v).collect())
                })
                .collect(),
        );
        // a step counts only if it lowers both the distortion and the residual
        let admissible = q.r > 1.0 || atom_collision(dist, &cand).is_none();
        let mut next = None;
        if admissible {
            let c = distortion_on(&cand, &pool)?;
            if c.mean < est.mean {
                let g = gradient_on(&cand, &pool)?;
                if max_dual_norm(&q.space, &g.components) / norm <= residual {
                    next = Some((c, g));
                }
            }
        }
        let accepted = next.is_some();
        let mv = if accepted { max_move(&q.space, &q.points, &cand.points) } else { 0.0 };
        records.push(IterRecord {
            iter,
            distortion: est.mean,
            std_error: est.std_error,
            max_move: mv,
            empty_cells: empty_cells(&grad.cell_mass),
            step: Some(step),
            residual: Some(residual),
            accepted,
        });
        if let Some((new_est, new_grad)) = next {
            q = cand;
            est = new_est;
            grad = new_grad;
            step = (2.0 * step).min(cfg.initial_step);
        } else {
            step *= 0.5;
            if step < 1e-16 {
                stop = StopReason::Stagnation;
                break;
            }
        }
    }
    Ok(OptimizeTrace {
        method: Method::GradientDescent,
        records,
        quantizer: q,
        final_distortion: est,
        stop,
    })
}

fn empty_cells(mass: &[f64]) -> Vec<usize> {
    mass.iter()
        .enumerate()
        .filter(|(_, m)| **m == 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Online competitive-learning updates: each draw moves only its owner along
/// `-gamma_t r ||x - a||^{r-1} grad||.||(a - x)`.
pub fn stochastic_gradient(
    dist: &Distribution,
    q0: &Quantizer,
    cfg: &OptimizerConfig,
) -> Result<OptimizeTrace> {
    cfg.validate()?;
    crate::distortion::check_gradient_preconditions(dist, q0)?;
    let eval = dist.sample(cfg.stream.wrapping_add(EVAL_STREAM_OFFSET), cfg.n_samples.min(20_000));
    let mut q = q0.clone();
    let mut rng: ChaCha8Rng = dist.rng(cfg.stream);
    let dim = q.dim();
    let mut x = Vec::with_capacity(dim);
    let mut diff = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut records = Vec::new();
    let mut checkpoint = q.points.clone();
    let every = cfg.record_every.max(1);

    for t in 0..cfg.sgd_steps {
        x.clear();
        dist.draw_into(&mut rng, &mut x);
        let (i, d, _) = q.nearest(&x);
        if d > COINCIDENCE_TOL {
            for ((o, a), v) in diff.iter_mut().zip(q.points[i].iter()).zip(&x) {
                *o = a - v;
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = q.r * d.powf(q.r - 1.0);
            q.space.add_norm_gradient(&diff, scale, &mut grad)?;
            let gamma = cfg.gamma0 / (1.0 + t as f64 / cfg.tau);
            let h = q.space.riesz(&grad);
            for (a, v) in q.points[i].iter_mut().zip(&h) {
                *a -= gamma * v;
            }
        }
        if (t + 1) % every == 0 || t + 1 == cfg.sgd_steps {
            let est = distortion_on(&q, &eval)?;
            records.push(IterRecord {
                iter: t + 1,
                distortion: est.mean,
                std_error: est.std_error,
                max_move: max_move(&q.space, &checkpoint, &q.points),
                empty_cells: Vec::new(),
                step: Some(cfg.gamma0 / (1.0 + t as f64 / cfg.tau)),
                residual: None,
                accepted: true,
            });
            checkpoint = q.points.clone();
        }
    }
    if q.points.iter().flat_map(|p| p.iter()).any(|v| !v.is_finite()) {
        return Err(QuantError::NumericRange("stochastic iterates diverged".into()));
    }
    let final_distortion = distortion_on(&q, &eval)?;
    Ok(OptimizeTrace {
        method: Method::Stochastic,
        records,
        quantizer: q,
        final_distortion,
        stop: StopReason::StepsExhausted,
    })
}

/// Appends a support draw at distance > [`SPLIT_MIN_DISTANCE`] from every
/// existing codepoint.
pub fn split_init(dist: &Distribution, q_prev: &Quantizer, stream: u64) -> Result<Quantizer> {
    q_prev.check_against(dist)?;
    let mut rng = dist.rng(stream);
    let mut buf = Vec::with_capacity(q_prev.dim());
    for _ in 0..SPLIT_MAX_DRAWS {
        buf.clear();
        dist.draw_into(&mut rng, &mut buf);
        let far = q_prev
            .points
            .iter()
            .all(|a| q_prev.space.distance(a, &buf) > SPLIT_MIN_DISTANCE);
        if far {
            let mut points = q_prev.points.clone();
            points.push(Point(buf));
            return Ok(q_prev.with_points(points));
        }
    }
    Err(QuantError::NoSplit(SPLIT_MAX_DRAWS))
}

/// `n` pairwise distinct support draws from `stream`.
pub fn random_codebook(
    dist: &Distribution,
    space: &NormedSpace,
    r: f64,
    n: usize,
    stream: u64,
) -> Result<Quantizer> {
    let mut rng = dist.rng(stream);
    let mut buf = Vec::new();
    dist.draw_into(&mut rng, &mut buf);
    let mut q = Quantizer::new(space.clone(), r, vec![Point(buf)])?;
    for k in 1..n {
        // each growth step draws from its own substream
        q = split_init(dist, &q, stream.wrapping_add((k as u64) << 20))?;
    }
    Ok(q)
}

/// Runs `starts` optimizations from random codebooks; results are in start
/// order. All starts share the pool stream so their distortions compare
/// directly.
pub fn multistart(
    dist: &Distribution,
    space: &NormedSpace,
    r: f64,
    n: usize,
    starts: usize,
    cfg: &OptimizerConfig,
) -> Result<Vec<OptimizeTrace>> {
    (0..starts)
        .map(|s| {
            let stream = cfg.stream.wrapping_add(INIT_STREAM_OFFSET + ((s as u64) << 24));
            let q0 = random_codebook(dist, space, r, n, stream)?;
            optimize(dist, &q0, cfg)
        })
        .collect()
}

/// Best trace (lowest pool distortion) among `traces`.
pub fn best_of(traces: Vec<OptimizeTrace>) -> Option<OptimizeTrace> {
    traces
        .into_iter()
        .min_by(|a, b| a.final_distortion.mean.total_cmp(&b.final_distortion.mean))
}

/// One row of a level sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub distortion: f64,
    pub std_error: f64,
    /// Normalized max residual dual norm of the best codebook on the pool.
    pub residual: f64,
    pub wall_time_s: f64,
    pub quantizer: Quantizer,
}

/// Upper estimates of the level-`n` errors for `n` in `levels`: each level
/// keeps the best of a split start (previous best plus one support point) and
/// `starts - 1` random starts.
pub fn sweep(
    dist: &Distribution,
    space: &NormedSpace,
    r: f64,
    levels: std::ops::RangeInclusive<usize>,
    starts: usize,
    cfg: &OptimizerConfig,
) -> Result<Vec<SweepRow>> {
    if levels.is_empty() || *levels.start() == 0 {
        return Err(QuantError::InvalidParameter("level range must be nonempty and start at 1".into()));
    }
    let pool = dist.sample(cfg.stream, cfg.n_samples);
    let norm = residual_scale(dist, r);
    let mut rows: Vec<SweepRow> = Vec::new();
    for n in levels {
        let t0 = Instant::now();
        let mut traces = Vec::new();
        let mut random_starts = starts.max(1);
        if let Some(prev) = rows.last() {
            let q0 = split_init(dist, &prev.quantizer, cfg.stream.wrapping_add(INIT_STREAM_OFFSET - 1 - n as u64))?;
            traces.push(optimize(dist, &q0, cfg)?);
            random_starts -= 1;
        }
        for s in 0..random_starts {
            let stream = cfg
                .stream
                .wrapping_add(INIT_STREAM_OFFSET + ((s as u64) << 24) + n as u64);
            let q0 = random_codebook(dist, space, r, n, stream)?;
            traces.push(optimize(dist, &q0, cfg)?);
        }
        let best = best_of(traces).expect("at least one start");
        let est = distortion_on(&best.quantizer, &pool)?;
        let residual = if r >= 1.0 {
            max_dual_norm(space, &gradient_on(&best.quantizer, &pool)?.components) / norm
        } else {
            f64::NAN
        };
        rows.push(SweepRow {
            n,
            distortion: est.mean,
            std_error: est.std_error,
            residual,
            wall_time_s: t0.elapsed().as_secs_f64(),
            quantizer: best.quantizer,
        });
    }
    Ok(rows)
}
