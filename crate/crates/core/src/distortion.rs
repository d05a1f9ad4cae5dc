//! Quantizers, Voronoi assignment and the `L^r` distortion with its Gâteaux
//! gradient.
//!
//! The Voronoi partition used everywhere is the lowest-index one: a sample is
//! owned by the first codepoint attaining the minimal distance. Samples with a
//! second codepoint within [`TIE_TOL`] of the minimum are flagged as ties; they
//! lie outside every open cell `W_a`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::distribution::{DistKind, Distribution, Samples};
use crate::error::{QuantError, Result};
use crate::space::{NormedSpace, Point};

/// Relative slack under which two codepoint distances count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Distances at or below this are treated as `x == a` in the gradient.
pub const COINCIDENCE_TOL: f64 = 1e-14;

/// Tolerance for a codepoint sitting on an atom (the `r = 1` gate).
pub const ATOM_TOL: f64 = 1e-12;

/// Degenerate-sample share above which a gradient is flagged.
pub const DEGENERACY_WARN_FRACTION: f64 = 1e-3;

pub(crate) const CHUNK: usize = 1 << 15;

/// An ordered n-tuple of codepoints in a common space, with exponent `r`.
/// Duplicated codepoints are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantizerRepr")]
pub struct Quantizer {
    pub space: NormedSpace,
    pub r: f64,
    pub points: Vec<Point>,
}

#[derive(Deserialize)]
struct QuantizerRepr {
    space: NormedSpace,
    r: f64,
    points: Vec<Point>,
}

impl TryFrom<QuantizerRepr> for Quantizer {
    type Error = QuantError;

    fn try_from(q: QuantizerRepr) -> Result<Self> {
        Quantizer::new(q.space, q.r, q.points)
    }
}

impl Quantizer {
    pub fn new(space: NormedSpace, r: f64, points: Vec<Point>) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(QuantError::InvalidParameter(format!("r must be in (0, inf), got {r}")));
        }
        if points.is_empty() {
            return Err(QuantError::Empty("quantizer needs at least one codepoint".into()));
        }
        for p in &points {
            space.check_dim(p)?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(QuantError::InvalidParameter("non-finite codepoint".into()));
            }
        }
        Ok(Quantizer { space, r, points })
    }

    /// Quantizer on the real line.
    pub fn scalar(r: f64, points: &[f64]) -> Result<Self> {
        Self::new(
            NormedSpace::euclidean(1)?,
            r,
            points.iter().map(|a| Point::scalar(*a)).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Smallest distance between two codepoints (`inf` when `n = 1`).
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                best = best.min(self.space.distance(&self.points[i], &self.points[j]));
            }
        }
        best
    }

    pub fn with_points(&self, points: Vec<Point>) -> Self {
        Quantizer {
            space: self.space.clone(),
            r: self.r,
            points,
        }
    }

    /// Codepoints scaled by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        self.with_points(
            self.points
                .iter()
                .map(|p| Point(p.iter().map(|v| v * lambda).collect()))
                .collect(),
        )
    }

    pub(crate) fn check_against(&self, dist: &Distribution) -> Result<()> {
        if dist.dim() != self.dim() {
            return Err(QuantError::DimensionMismatch {
                expected: self.dim(),
                got: dist.dim(),
            });
        }
        Ok(())
    }

    /// `(owner, distance, tie)` of `x` under the lowest-index rule.
    #[inline]
    pub fn nearest(&self, x: &[f64]) -> (usize, f64, bool) {
        let mut owner = 0;
        let mut best = f64::INFINITY;
        let mut second = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            let d = self.space.distance(x, a);
            if d < best {
                second = best;
                best = d;
                owner = i;
            } else if d < second {
                second = d;
            }
        }
        let tie = second - best <= TIE_TOL * best.max(1.0);
        (owner, best, tie)
    }
}

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl Estimate {
    /// `e_r = G^{1/r}`.
    pub fn error(&self, r: f64) -> f64 {
        self.mean.powf(1.0 / r)
    }
}

/// Streaming mean and variance (Welford) with a fixed accumulation order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn estimate(&self) -> Estimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        Estimate {
            mean: self.mean,
            std_error: (var / self.n.max(1) as f64).sqrt(),
            n_samples: self.n,
        }
    }
}

/// Owner and tie flag per sample plus per-cell masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiAssignment {
    pub owner: Vec<usize>,
    pub tie: Vec<bool>,
    /// Estimated `P(C_a)` per codepoint.
    pub cell_mass: Vec<f64>,
    /// Estimated `P(W_a)` per codepoint.
    pub open_mass: Vec<f64>,
}

impl VoronoiAssignment {
    pub fn tie_fraction(&self) -> f64 {
        self.tie.iter().filter(|t| **t).count() as f64 / self.tie.len() as f64
    }

    /// CSV dump with header `sample_index,owner,tie_flag`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["sample_index", "owner", "tie_flag"])?;
        for (i, (o, t)) in self.owner.iter().zip(&self.tie).enumerate() {
            wtr.write_record([i.to_string(), o.to_string(), (*t as u8).to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn voronoi_assign(q: &Quantizer, xs: &Samples) -> Result<VoronoiAssignment> {
    if xs.is_empty() {
        return Err(QuantError::Empty("no samples to assign".into()));
    }
    if xs.dim() != q.dim() {
        return Err(QuantError::DimensionMismatch { expected: q.dim(), got: xs.dim() });
    }
    let n = xs.len();
    let mut owner = Vec::with_capacity(n);
    let mut tie = Vec::with_capacity(n);
    let mut count = vec![0usize; q.n()];
    let mut open = vec![0usize; q.n()];
    for x in xs.iter() {
        let (o, _, t) = q.nearest(x);
        owner.push(o);
        tie.push(t);
        count[o] += 1;
        if !t {
            open[o] += 1;
        }
    }
    let frac = |c: &Vec<usize>| c.iter().map(|v| *v as f64 / n as f64).collect();
    Ok(VoronoiAssignment {
        cell_mass: frac(&count),
        open_mass: frac(&open),
        owner,
        tie,
    })
}

/// `Proj_Gamma(x)`: the codepoint owning `x`.
pub fn project(q: &Quantizer, x: &[f64]) -> Result<Point> {
    q.space.check_dim(x)?;
    Ok(q.points[q.nearest(x).0].clone())
}

/// Sample mean of `min_i ||x - a_i||^r` over `xs`.
pub fn distortion_on(q: &Quantizer, xs: &Samples) -> Result<Estimate> {
    let mut m = Moments::default();
    accumulate_distortion(q, xs, &mut m)?;
    finish_distortion(m)
}

fn accumulate_distortion(q: &Quantizer, xs: &Samples, m: &mut Moments) -> Result<()> {
    if xs.dim() != q.dim() {
        return Err(QuantError::DimensionMismatch { expected: q.dim(), got: xs.dim() });
    }
    for x in xs.iter() {
        let d = q.nearest(x).1;
        m.push(if q.r == 2.0 { d * d } else { d.powf(q.r) });
    }
    Ok(())
}

fn finish_distortion(m: Moments) -> Result<Estimate> {
    let est = m.estimate();
    if !(est.mean.is_finite() && est.std_error.is_finite()) {
        return Err(QuantError::NumericRange("distortion overflowed".into()));
    }
    Ok(est)
}

/// Monte-Carlo estimate of `G_{r,n}(a) = E min_i ||X - a_i||^r`.
pub fn distortion(
    dist: &Distribution,
    q: &Quantizer,
    n_samples: usize,
    stream: u64,
) -> Result<Estimate> {
    q.check_against(dist)?;
    if n_samples == 0 {
        return Err(QuantError::InvalidParameter("n_samples must be >= 1".into()));
    }
    let mut m = Moments::default();
    dist.for_each_chunk(stream, n_samples, CHUNK, |xs| accumulate_distortion(q, xs, &mut m))?;
    finish_distortion(m)
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }
}

/// Closed-form distortion for 1-D uniform laws (any `r > 0`) and 1-D
/// Gaussians (`r` in {1, 2}), integrating over the Voronoi midpoint intervals.
pub fn distortion_exact_1d(dist: &Distribution, q: &Quantizer) -> Result<f64> {
    q.check_against(dist)?;
    if q.dim() != 1 {
        return Err(QuantError::Unsupported("exact distortion needs a 1-D law".into()));
    }
    let mut pts: Vec<f64> = q.points.iter().map(|p| p[0]).collect();
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    let cells: Vec<(f64, f64, f64)> = pts
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let l = if k == 0 { f64::NEG_INFINITY } else { 0.5 * (pts[k - 1] + a) };
            let u = if k + 1 == pts.len() { f64::INFINITY } else { 0.5 * (a + pts[k + 1]) };
            (l, u, *a)
        })
        .collect();
    let r = q.r;
    match dist.kind() {
        DistKind::UniformInterval { lo, hi } => {
            // int |t - a|^r dt has antiderivative sign(t - a)|t - a|^{r+1}/(r+1)
            let prim = |t: f64, a: f64| (t - a).signum() * (t - a).abs().powf(r + 1.0) / (r + 1.0);
            let total: f64 = cells
                .iter()
                .filter_map(|&(l, u, a)| {
                    let (l, u) = (l.max(*lo), u.min(*hi));
                    (u > l).then(|| prim(u, a) - prim(l, a))
                })
                .sum();
            Ok(total / (hi - lo))
        }
        DistKind::GaussianIso { d: 1, mean, sigma } if r == 1.0 || r == 2.0 => {
            let (mu, s) = (mean[0], *sigma);
            let cdf = std_normal_cdf;
            let pdf = std_normal_pdf;
            let zpdf = |z: f64| if z.is_infinite() { 0.0 } else { z * pdf(z) };
            let mut total = 0.0;
            for &(l, u, a) in &cells {
                let (l, u, b) = ((l - mu) / s, (u - mu) / s, (a - mu) / s);
                if r == 2.0 {
                    let mass = cdf(u) - cdf(l);
                    let first = pdf(l) - pdf(u);
                    let second = mass + zpdf(l) - zpdf(u);
                    total += s * s * (second - 2.0 * b * first + b * b * mass);
                } else {
                    let m = b.clamp(l, u);
                    // below b: int (b - z) phi; above b: int (z - b) phi
                    let below = b * (cdf(m) - cdf(l)) - (pdf(l) - pdf(m));
                    let above = (pdf(m) - pdf(u)) - b * (cdf(u) - cdf(m));
                    total += s * (below + above);
                }
            }
            Ok(total)
        }
        _ => Err(QuantError::Unsupported(format!(
            "no closed form for {:?} with r = {r}",
            dist.kind()
        ))),
    }
}

/// Estimated mass of the open Voronoi cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    /// `P(union_a W_a)`.
    pub open_mass: f64,
    pub per_cell_open_mass: Vec<f64>,
    pub cell_mass: Vec<f64>,
    pub n_samples: usize,
}

impl Admissibility {
    /// Admissible when no sampled point fell on a cell boundary.
    pub fn is_admissible(&self) -> bool {
        self.open_mass >= 1.0 - 0.5 / self.n_samples as f64
    }
}

pub fn admissibility(
    dist: &Distribution,
    q: &Quantizer,
    n_samples: usize,
    stream: u64,
) -> Result<Admissibility> {
    q.check_against(dist)?;
    let mut count = vec![0usize; q.n()];
    let mut open = vec![0usize; q.n()];
    dist.for_each_chunk(stream, n_samples, CHUNK, |xs| {
        for x in xs.iter() {
            let (o, _, t) = q.nearest(x);
            count[o] += 1;
            if !t {
                open[o] += 1;
            }
        }
        Ok(())
    })?;
    let n = n_samples.max(1) as f64;
    let per_cell_open_mass: Vec<f64> = open.iter().map(|c| *c as f64 / n).collect();
    Ok(Admissibility {
        open_mass: open.iter().sum::<usize>() as f64 / n,
        per_cell_open_mass,
        cell_mass: count.iter().map(|c| *c as f64 / n).collect(),
        n_samples,
    })
}

/// Monte-Carlo estimate of the Gâteaux gradient of the distortion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientValue {
    /// Folded dual element per codepoint.
    pub components: Vec<Point>,
    /// Standard error per component coordinate.
    pub std_error: Vec<Vec<f64>>,
    pub n_samples: usize,
    pub cell_mass: Vec<f64>,
    /// Share of samples where the norm was not differentiable at `a_i - x`.
    pub degenerate_fraction: f64,
}

impl GradientValue {
    pub fn degeneracy_warning(&self) -> bool {
        self.degenerate_fraction > DEGENERACY_WARN_FRACTION
    }

    /// Dual norm of each component.
    pub fn dual_norms(&self, space: &NormedSpace) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| space.dual_norm(c).unwrap_or(f64::NAN))
            .collect()
    }

    /// Dual norm of each component's standard-error vector, a noise scale
    /// for the residual norms.
    pub fn std_error_norms(&self, space: &NormedSpace) -> Vec<f64> {
        self.std_error
            .iter()
            .map(|c| space.dual_norm(c).unwrap_or(f64::NAN))
            .collect()
    }

    /// `<grad G, h>` for a tuple of directions.
    pub fn pairing(&self, space: &NormedSpace, h: &[Point]) -> Result<f64> {
        self.components
            .iter()
            .zip(h)
            .map(|(u, y)| space.dual_pairing(u, y))
            .sum()
    }
}

pub(crate) fn check_gradient_preconditions(dist: &Distribution, q: &Quantizer) -> Result<()> {
    q.check_against(dist)?;
    if q.r < 1.0 {
        return Err(QuantError::Precondition(format!(
            "gradient needs r >= 1, got {}",
            q.r
        )));
    }
    if q.r == 1.0 {
        if let Some(i) = atom_collision(dist, q) {
            return Err(QuantError::Precondition(format!(
                "r = 1 and codepoint {i} carries positive mass"
            )));
        }
    }
    Ok(())
}

/// Index of a codepoint lying on an atom of `dist`, if any.
pub fn atom_collision(dist: &Distribution, q: &Quantizer) -> Option<usize> {
    let atoms = dist.atoms();
    q.points.iter().position(|a| {
        atoms
            .iter()
            .any(|(x, _)| q.space.distance(a, x) <= ATOM_TOL)
    })
}

struct GradAccum {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    count: Vec<usize>,
    n: usize,
    degenerate: usize,
    diff: Vec<f64>,
    term: Vec<f64>,
}

impl GradAccum {
    fn new(n: usize, dim: usize) -> Self {
        GradAccum {
            sum: vec![0.0; n * dim],
            sumsq: vec![0.0; n * dim],
            count: vec![0; n],
            n: 0,
            degenerate: 0,
            diff: vec![0.0; dim],
            term: vec![0.0; dim],
        }
    }

    fn push_all(&mut self, q: &Quantizer, xs: &Samples) -> Result<()> {
        let dim = q.dim();
        for x in xs.iter() {
            self.n += 1;
            let (i, d, _) = q.nearest(x);
            self.count[i] += 1;
            if d <= COINCIDENCE_TOL {
                continue;
            }
            for ((o, a), v) in self.diff.iter_mut().zip(q.points[i].iter()).zip(x) {
                *o = a - v;
            }
            self.term.iter_mut().for_each(|t| *t = 0.0);
            let scale = if q.r == 2.0 { 2.0 * d } else { q.r * d.powf(q.r - 1.0) };
            if q.space.add_norm_gradient(&self.diff, scale, &mut self.term)?.is_some() {
                self.degenerate += 1;
            }
            let base = i * dim;
            for (j, t) in self.term.iter().enumerate() {
                self.sum[base + j] += t;
                self.sumsq[base + j] += t * t;
            }
        }
        Ok(())
    }

    fn finish(self, q: &Quantizer) -> GradientValue {
        let dim = q.dim();
        let n = self.n as f64;
        let mut components = Vec::with_capacity(q.n());
        let mut std_error = Vec::with_capacity(q.n());
        for i in 0..q.n() {
            let s = &self.sum[i * dim..(i + 1) * dim];
            let s2 = &self.sumsq[i * dim..(i + 1) * dim];
            components.push(Point(s.iter().map(|v| v / n).collect()));
            std_error.push(
                s.iter()
                    .zip(s2)
                    .map(|(a, b)| {
                        let mean = a / n;
                        let var = ((b / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
                        (var / n).sqrt()
                    })
                    .collect(),
            );
        }
        GradientValue {
            components,
            std_error,
            n_samples: self.n,
            cell_mass: self.count.iter().map(|c| *c as f64 / n).collect(),
            degenerate_fraction: self.degenerate as f64 / n,
        }
    }
}

/// Gradient of the sample-mean distortion over a fixed sample set.
pub fn gradient_on(q: &Quantizer, xs: &Samples) -> Result<GradientValue> {
    if q.r < 1.0 {
        return Err(QuantError::Precondition(format!("gradient needs r >= 1, got {}", q.r)));
    }
    if xs.is_empty() {
        return Err(QuantError::Empty("no samples".into()));
    }
    if xs.dim() != q.dim() {
        return Err(QuantError::DimensionMismatch { expected: q.dim(), got: xs.dim() });
    }
    let mut acc = GradAccum::new(q.n(), q.dim());
    acc.push_all(q, xs)?;
    Ok(acc.finish(q))
}

/// Monte-Carlo estimate of
/// `r E[1_{C_i \ {a_i}}(X) ||X - a_i||^{r-1} grad||.||(a_i - X)]` per codepoint.
pub fn distortion_gradient(
    dist: &Distribution,
    q: &Quantizer,
    n_samples: usize,
    stream: u64,
) -> Result<GradientValue> {
    check_gradient_preconditions(dist, q)?;
    if n_samples == 0 {
        return Err(QuantError::InvalidParameter("n_samples must be >= 1".into()));
    }
    let mut acc = GradAccum::new(q.n(), q.dim());
    dist.for_each_chunk(stream, n_samples, CHUNK, |xs| acc.push_all(q, xs))?;
    Ok(acc.finish(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> Distribution {
        Distribution::uniform_interval(-1.0, 1.0, 2024).unwrap()
    }

    #[test]
    fn equidistant_sample_goes_to_lowest_index() {
        let q = Quantizer::scalar(2.0, &[-0.5, 0.5]).unwrap();
        let xs = Samples::new(1, vec![0.0]);
        let a = voronoi_assign(&q, &xs).unwrap();
        assert_eq!(a.owner, vec![0]);
        assert_eq!(a.tie, vec![true]);
    }

    #[test]
    fn far_codepoint_gets_empty_cell() {
        let q = Quantizer::scalar(2.0, &[0.0, 3.0]).unwrap();
        let xs = uniform().sample(0, 10_000);
        let a = voronoi_assign(&q, &xs).unwrap();
        assert!(a.owner.iter().all(|o| *o == 0));
        assert_eq!(a.cell_mass, vec![1.0, 0.0]);
        let single = Quantizer::scalar(2.0, &[0.7]).unwrap();
        assert!(voronoi_assign(&single, &xs).unwrap().owner.iter().all(|o| *o == 0));
        assert!(matches!(
            voronoi_assign(&q, &Samples::new(1, vec![])),
            Err(QuantError::Empty(_))
        ));
    }

    #[test]
    fn projection_is_nearest_and_idempotent() {
        let q = Quantizer::scalar(2.0, &[-0.5, 0.5]).unwrap();
        assert_eq!(project(&q, &[0.9]).unwrap().0, vec![0.5]);
        assert_eq!(project(&q, &[-0.5]).unwrap().0, vec![-0.5]);
        let disk = Distribution::uniform_disk(vec![0.0, 0.0], 1.0, 1).unwrap();
        let q2 = Quantizer::new(
            NormedSpace::euclidean(2).unwrap(),
            2.0,
            disk.sample(5, 7).to_points(),
        )
        .unwrap();
        for x in disk.sample(6, 10_000).iter() {
            let p = project(&q2, x).unwrap();
            let brute = q2
                .points
                .iter()
                .map(|a| q2.space.distance(x, a))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(q2.space.distance(x, &p), brute);
            assert_eq!(project(&q2, &p).unwrap(), p);
        }
    }

    #[test]
    fn uniform_distortion_matches_integrals() {
        let d = uniform();
        for (pts, oracle) in [
            (vec![0.0], 1.0 / 3.0),
            (vec![0.0, 3.0], 1.0 / 3.0),
            (vec![-0.5, 0.5], 1.0 / 12.0),
        ] {
            let q = Quantizer::scalar(2.0, &pts).unwrap();
            let e = distortion(&d, &q, 200_000, 1).unwrap();
            assert!((e.mean - oracle).abs() <= 3.0 * e.std_error, "{pts:?}: {e:?}");
            assert!((distortion_exact_1d(&d, &q).unwrap() - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_1d_reference_values() {
        let d = uniform();
        let q1 = Quantizer::scalar(1.0, &[0.0]).unwrap();
        assert!((distortion_exact_1d(&d, &q1).unwrap() - 0.5).abs() < 1e-15);
        let g = Distribution::gaussian_iso(1, 0.0, 1.0, 0).unwrap();
        let q2 = Quantizer::scalar(2.0, &[0.0]).unwrap();
        assert!((distortion_exact_1d(&g, &q2).unwrap() - 1.0).abs() < 1e-14);
        // E|Z| = sqrt(2 / pi)
        let e1 = distortion_exact_1d(&g, &q1).unwrap();
        assert!((e1 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        let q3 = Quantizer::scalar(3.0, &[0.0]).unwrap();
        assert!(matches!(distortion_exact_1d(&g, &q3), Err(QuantError::Unsupported(_))));
    }

    #[test]
    fn exact_gaussian_agrees_with_monte_carlo() {
        let g = Distribution::gaussian_iso(1, 0.3, 1.7, 4).unwrap();
        for r in [1.0, 2.0] {
            let q = Quantizer::scalar(r, &[-1.1, 0.2, 2.5]).unwrap();
            let exact = distortion_exact_1d(&g, &q).unwrap();
            let mc = distortion(&g, &q, 400_000, 0).unwrap();
            assert!((mc.mean - exact).abs() <= 4.0 * mc.std_error, "r={r}: {exact} vs {mc:?}");
        }
    }

    #[test]
    fn admissibility_cases() {
        let d = uniform();
        let q = Quantizer::scalar(2.0, &[-0.5, 0.5]).unwrap();
        let a = admissibility(&d, &q, 100_000, 0).unwrap();
        assert_eq!(a.open_mass, 1.0);
        assert!(a.is_admissible());
        let dup = Quantizer::scalar(2.0, &[0.0, 3.0, 3.0]).unwrap();
        let a = admissibility(&d, &dup, 100_000, 0).unwrap();
        assert_eq!(a.per_cell_open_mass[1], 0.0);
        assert_eq!(a.per_cell_open_mass[2], 0.0);
        // atom at the midpoint of the two codepoints
        let emp = Distribution::empirical(vec![vec![-1.0], vec![0.0]], vec![0.5, 0.5], 3).unwrap();
        let a = admissibility(&emp, &Quantizer::scalar(2.0, &[-1.0, 1.0]).unwrap(), 10_000, 0)
            .unwrap();
        assert!(a.open_mass < 1.0 && !a.is_admissible());
        assert!((a.open_mass - 0.5).abs() < 0.03);
    }

    #[test]
    fn gradient_vanishes_at_conditional_means() {
        let d = uniform();
        for pts in [vec![0.0], vec![-0.5, 0.5]] {
            let q = Quantizer::scalar(2.0, &pts).unwrap();
            let g = distortion_gradient(&d, &q, 200_000, 8).unwrap();
            for (c, se) in g.components.iter().zip(&g.std_error) {
                assert!(c[0].abs() <= 3.0 * se[0], "{pts:?}: {c:?} se {se:?}");
            }
        }
    }

    #[test]
    fn gradient_refuses_small_r_and_atom_collisions() {
        let d = uniform();
        let q = Quantizer::scalar(0.5, &[0.0]).unwrap();
        assert!(matches!(
            distortion_gradient(&d, &q, 10, 0),
            Err(QuantError::Precondition(_))
        ));
        let emp = Distribution::empirical(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5], 0).unwrap();
        let q1 = Quantizer::scalar(1.0, &[1.0, 5.0]).unwrap();
        assert!(matches!(
            distortion_gradient(&emp, &q1, 10, 0),
            Err(QuantError::Precondition(_))
        ));
        // r = 2 is allowed on atoms
        let q2 = Quantizer::scalar(2.0, &[1.0, 5.0]).unwrap();
        assert!(distortion_gradient(&emp, &q2, 10, 0).is_ok());
    }

    #[test]
    fn gradient_matches_finite_differences_in_the_plane() {
        let d = Distribution::gaussian_iso(2, 0.0, 1.0, 77).unwrap();
        let space = d.space().clone();
        let xs = d.sample(0, 50_000);
        let start = d.sample(99, 3).to_points();
        let q = Quantizer::new(space.clone(), 2.0, start).unwrap();
        let g = gradient_on(&q, &xs).unwrap();
        let h: Vec<Point> = g.components.iter().map(|u| Point(space.riesz(u))).collect();
        let eps = 1e-4;
        let shift = |s: f64| {
            q.with_points(
                q.points
                    .iter()
                    .zip(&h)
                    .map(|(a, v)| Point(a.iter().zip(v.iter()).map(|(x, y)| x + s * y).collect()))
                    .collect(),
            )
        };
        let fd = (distortion_on(&shift(eps), &xs).unwrap().mean
            - distortion_on(&shift(-eps), &xs).unwrap().mean)
            / (2.0 * eps);
        let an = g.pairing(&space, &h).unwrap();
        assert!(((an - fd) / fd).abs() < 1e-3, "{an} vs {fd}");
    }

    #[test]
    fn large_exponent_overflow_is_reported() {
        let d = Distribution::gaussian_iso(1, 0.0, 1.0, 0).unwrap();
        let q = Quantizer::scalar(900.0, &[1e3]).unwrap();
        assert!(matches!(distortion(&d, &q, 10, 0), Err(QuantError::NumericRange(_))));
    }

    #[test]
    fn assignment_csv_dump() {
        let q = Quantizer::scalar(2.0, &[-0.5, 0.5]).unwrap();
        let a = voronoi_assign(&q, &Samples::new(1, vec![0.0, 0.9])).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sample_index,owner,tie_flag\n0,0,1\n1,1,0\n"
        );
    }

    #[test]
    fn quantizer_json_schema() {
        let q = Quantizer::scalar(2.0, &[-0.5, 0.5]).unwrap();
        let js = serde_json::to_string(&q).unwrap();
        assert_eq!(js, r#"{"space":{"kind":"euclidean","d":1},"r":2.0,"points":[[-0.5],[0.5]]}"#);
        assert_eq!(serde_json::from_str::<Quantizer>(&js).unwrap(), q);
    }
}
