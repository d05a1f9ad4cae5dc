//! Seeded probability distributions on the working spaces.
//!
//! Expectations throughout the crate are realized as sample means over draws
//! from a [`Distribution`]. Draws are deterministic per `(seed, stream)`: each
//! stream is an independent ChaCha keystream, so estimators that use distinct
//! stream indices never share random numbers and reruns reproduce bit-for-bit.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};
use crate::space::{NormedSpace, Point};

/// Number of draws used for the cached `E||X||^s` estimates.
pub const MOMENT_SAMPLES: usize = 1_000_000;

const MOMENT_CHUNK: usize = 10_000;

/// Flat storage for a batch of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0);
        Samples { dim, data }
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let dim = points
            .first()
            .ok_or_else(|| QuantError::Empty("no points".into()))?
            .dim();
        let mut data = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.dim() != dim {
                return Err(QuantError::DimensionMismatch { expected: dim, got: p.dim() });
            }
            data.extend_from_slice(p);
        }
        Ok(Samples { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter().map(|x| Point(x.to_vec())).collect()
    }

    /// Copy of the samples whose index satisfies `keep`.
    pub fn select(&self, mut keep: impl FnMut(usize) -> bool) -> Samples {
        let mut data = Vec::new();
        for (i, x) in self.iter().enumerate() {
            if keep(i) {
                data.extend_from_slice(x);
            }
        }
        Samples { dim: self.dim, data }
    }

    /// Every coordinate multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Samples {
        Samples {
            dim: self.dim,
            data: self.data.iter().map(|v| v * lambda).collect(),
        }
    }
}

/// Parameters of the shipped distribution families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DistKind {
    UniformInterval { lo: f64, hi: f64 },
    GaussianIso { d: usize, mean: Vec<f64>, sigma: f64 },
    /// Uniform law on the Euclidean ball; a disk when `center` has length 2.
    UniformDisk { center: Vec<f64>, radius: f64 },
    Empirical { points: Vec<Vec<f64>>, weights: Vec<f64> },
    /// Truncated Karhunen–Loève expansion of Brownian motion on `[0, 1]`
    /// sampled on an `m`-node grid, in `L^p` (`p = 2` by default).
    BrownianKl {
        m: usize,
        k: usize,
        #[serde(default = "default_p")]
        p: f64,
    },
}

fn default_p() -> f64 {
    2.0
}

/// Declared support of a distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Interval { lo: f64, hi: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    WholeSpace,
    Finite(Vec<Vec<f64>>),
    /// Linear span of `basis`, which is orthonormal for the weighted `L^2`
    /// inner product of the grid.
    Subspace { basis: Vec<Vec<f64>> },
}

/// JSON shape of a distribution: `{kind, params, seed}` plus an optional
/// space override.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub kind: DistKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<NormedSpace>,
}

/// A seeded sampler together with its support oracle, atoms and space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub struct Distribution {
    kind: DistKind,
    seed: u64,
    space: NormedSpace,
    space_overridden: bool,
    support: Support,
    /// cumulative weights (empirical) or KL basis rows (brownian)
    table: Vec<f64>,
    moments: Arc<Mutex<BTreeMap<u64, f64>>>,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.seed == other.seed && self.space == other.space
    }
}

impl Distribution {
    pub fn new(kind: DistKind, seed: u64) -> Result<Self> {
        let (space, support, table, kind) = match kind {
            DistKind::UniformInterval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(QuantError::InvalidParameter(format!(
                        "uniform interval needs lo < hi, got [{lo}, {hi}]"
                    )));
                }
                (
                    NormedSpace::euclidean(1)?,
                    Support::Interval { lo, hi },
                    Vec::new(),
                    DistKind::UniformInterval { lo, hi },
                )
            }
            DistKind::GaussianIso { d, mean, sigma } => {
                let mean = match mean.len() {
                    1 if d > 1 => vec![mean[0]; d],
                    l if l == d => mean,
                    l => return Err(QuantError::DimensionMismatch { expected: d, got: l }),
                };
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(QuantError::InvalidParameter("sigma must be positive".into()));
                }
                (
                    NormedSpace::euclidean(d)?,
                    Support::WholeSpace,
                    Vec::new(),
                    DistKind::GaussianIso { d, mean, sigma },
                )
            }
            DistKind::UniformDisk { center, radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(QuantError::InvalidParameter("radius must be positive".into()));
                }
                (
                    NormedSpace::euclidean(center.len())?,
                    Support::Ball { center: center.clone(), radius },
                    Vec::new(),
                    DistKind::UniformDisk { center, radius },
                )
            }
            DistKind::Empirical { points, weights } => {
                let (points, weights) = merge_atoms(points, weights)?;
                let mut cum = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in &weights {
                    acc += w;
                    cum.push(acc);
                }
                (
                    NormedSpace::euclidean(points[0].len())?,
                    Support::Finite(points.clone()),
                    cum,
                    DistKind::Empirical { points, weights },
                )
            }
            DistKind::BrownianKl { m, k, p } => {
                if k == 0 {
                    return Err(QuantError::InvalidParameter("truncation order must be >= 1".into()));
                }
                if k > m {
                    return Err(QuantError::InvalidParameter(format!(
                        "truncation order {k} exceeds grid size {m}"
                    )));
                }
                let space = if p == 1.0 {
                    NormedSpace::l1_grid(m)?
                } else {
                    NormedSpace::lp_grid(m, p)?
                };
                let table = kl_basis(&space, k);
                let basis = orthonormalize(&space, &table, k);
                (
                    space,
                    Support::Subspace { basis },
                    table,
                    DistKind::BrownianKl { m, k, p },
                )
            }
        };
        Ok(Distribution {
            kind,
            seed,
            space,
            space_overridden: false,
            support,
            table,
            moments: Arc::new(Mutex::new(BTreeMap::new())),
        })
    }

    pub fn uniform_interval(lo: f64, hi: f64, seed: u64) -> Result<Self> {
        Self::new(DistKind::UniformInterval { lo, hi }, seed)
    }

    pub fn gaussian_iso(d: usize, mean: f64, sigma: f64, seed: u64) -> Result<Self> {
        Self::new(DistKind::GaussianIso { d, mean: vec![mean; d], sigma }, seed)
    }

    pub fn uniform_disk(center: Vec<f64>, radius: f64, seed: u64) -> Result<Self> {
        Self::new(DistKind::UniformDisk { center, radius }, seed)
    }

    pub fn empirical(points: Vec<Vec<f64>>, weights: Vec<f64>, seed: u64) -> Result<Self> {
        Self::new(DistKind::Empirical { points, weights }, seed)
    }

    /// Brownian motion on an `m`-node grid of `[0, 1]`, truncated to `k`
    /// Karhunen–Loève modes, in `L^2`.
    pub fn brownian_kl(m: usize, k: usize, seed: u64) -> Result<Self> {
        Self::new(DistKind::BrownianKl { m, k, p: 2.0 }, seed)
    }

    /// Loads an equally weighted empirical law from CSV, one point per row.
    pub fn empirical_from_csv(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| QuantError::Parse(format!("'{s}': {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            points.push(row);
        }
        let n = points.len();
        Self::empirical(points, vec![1.0 / n as f64; n], seed)
    }

    /// Same law measured in a different norm of the same dimension.
    pub fn with_space(mut self, space: NormedSpace) -> Result<Self> {
        if space.dim() != self.space.dim() {
            return Err(QuantError::DimensionMismatch {
                expected: self.space.dim(),
                got: space.dim(),
            });
        }
        if space != self.space {
            self.space = space;
            self.space_overridden = true;
            self.moments = Arc::new(Mutex::new(BTreeMap::new()));
        }
        Ok(self)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut d = self.clone();
        d.seed = seed;
        d.moments = Arc::new(Mutex::new(BTreeMap::new()));
        d
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn space(&self) -> &NormedSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// Point masses `(point, mass)`; empty for continuous laws.
    pub fn atoms(&self) -> Vec<(Point, f64)> {
        match &self.kind {
            DistKind::Empirical { points, weights } => points
                .iter()
                .zip(weights)
                .map(|(p, w)| (Point(p.clone()), *w))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self.kind, DistKind::Empirical { .. })
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// `count` i.i.d. draws from stream `stream`.
    pub fn sample(&self, stream: u64, count: usize) -> Samples {
        let mut rng = self.rng(stream);
        let mut data = Vec::with_capacity(count * self.dim());
        for _ in 0..count {
            self.draw_into(&mut rng, &mut data);
        }
        Samples::new(self.dim(), data)
    }

    /// Streams `count` draws of stream `stream` in batches of at most `chunk`
    /// points. The concatenated batches equal `self.sample(stream, count)`.
    pub fn for_each_chunk<F>(&self, stream: u64, count: usize, chunk: usize, mut f: F) -> Result<()>
    where
        F: FnMut(&Samples) -> Result<()>,
    {
        let mut rng = self.rng(stream);
        let chunk = chunk.max(1);
        let mut left = count;
        let mut buf = Samples::new(self.dim(), Vec::with_capacity(chunk.min(count) * self.dim()));
        while left > 0 {
            let n = left.min(chunk);
            buf.data.clear();
            for _ in 0..n {
                self.draw_into(&mut rng, &mut buf.data);
            }
            f(&buf)?;
            left -= n;
        }
        Ok(())
    }

    /// Appends one draw to `out`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match &self.kind {
            DistKind::UniformInterval { lo, hi } => {
                let u: f64 = rng.random();
                out.push(lo + (hi - lo) * u);
            }
            DistKind::GaussianIso { mean, sigma, .. } => {
                for mu in mean {
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(mu + sigma * z);
                }
            }
            DistKind::UniformDisk { center, radius } => {
                let d = center.len();
                if d == 1 {
                    let u: f64 = rng.random();
                    out.push(center[0] + radius * (2.0 * u - 1.0));
                    return;
                }
                let start = out.len();
                let mut norm2;
                loop {
                    out.truncate(start);
                    norm2 = 0.0;
                    for _ in 0..d {
                        let z: f64 = rng.sample(StandardNormal);
                        norm2 += z * z;
                        out.push(z);
                    }
                    if norm2 > 0.0 {
                        break;
                    }
                }
                let u: f64 = rng.random();
                let rho = radius * u.powf(1.0 / d as f64) / norm2.sqrt();
                for (v, c) in out[start..].iter_mut().zip(center) {
                    *v = c + rho * *v;
                }
            }
            DistKind::Empirical { points, .. } => {
                let u: f64 = rng.random();
                let total = *self.table.last().unwrap();
                let i = self
                    .table
                    .partition_point(|c| *c <= u * total)
                    .min(points.len() - 1);
                out.extend_from_slice(&points[i]);
            }
            DistKind::BrownianKl { m, k, .. } => {
                let start = out.len();
                out.resize(start + m, 0.0);
                let path = &mut out[start..];
                for row in self.table.chunks_exact(*m).take(*k) {
                    let xi: f64 = rng.sample(StandardNormal);
                    for (v, b) in path.iter_mut().zip(row) {
                        *v += xi * b;
                    }
                }
            }
        }
    }

    /// Distance from `x` to the declared support, in the space norm.
    pub fn distance_to_support(&self, x: &[f64]) -> Result<f64> {
        self.space.check_dim(x)?;
        Ok(match &self.support {
            Support::Interval { lo, hi } => (lo - x[0]).max(x[0] - hi).max(0.0),
            Support::Ball { center, radius } => {
                (self.space.distance(x, center) - radius).max(0.0)
            }
            Support::WholeSpace => 0.0,
            Support::Finite(atoms) => atoms
                .iter()
                .map(|a| self.space.distance(x, a))
                .fold(f64::INFINITY, f64::min),
            Support::Subspace { .. } => {
                let proj = self.subspace_projection(x);
                self.space.distance(x, &proj)
            }
        })
    }

    pub fn support_contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance_to_support(x)? <= tol)
    }

    pub fn support_is_convex(&self) -> bool {
        match &self.support {
            Support::Finite(atoms) => atoms.len() == 1,
            _ => true,
        }
    }

    /// True when the support has isolated points (finite supports).
    pub fn support_has_isolated_points(&self) -> bool {
        matches!(self.support, Support::Finite(_))
    }

    pub fn support_has_interior(&self) -> bool {
        match &self.support {
            Support::Interval { .. } | Support::Ball { .. } | Support::WholeSpace => true,
            Support::Finite(_) => false,
            Support::Subspace { basis } => basis.len() == self.dim(),
        }
    }

    /// Signed distance to the support boundary: positive inside, negative
    /// outside. `None` when the support has empty interior.
    pub fn boundary_clearance(&self, x: &[f64]) -> Result<Option<f64>> {
        self.space.check_dim(x)?;
        Ok(match &self.support {
            Support::Interval { lo, hi } => Some((x[0] - lo).min(hi - x[0])),
            Support::Ball { center, radius } => Some(radius - self.space.distance(x, center)),
            Support::WholeSpace => Some(f64::INFINITY),
            Support::Subspace { basis } if basis.len() == self.dim() => Some(f64::INFINITY),
            _ => None,
        })
    }

    /// Best approximation of `x` in the (convex) support for a Hilbert norm.
    pub fn project_to_support(&self, x: &[f64]) -> Result<Point> {
        self.space.check_dim(x)?;
        if !self.space.is_hilbert() {
            return Err(QuantError::Unsupported(
                "support projection needs a Hilbert norm".into(),
            ));
        }
        Ok(Point(match &self.support {
            Support::Interval { lo, hi } => vec![x[0].clamp(*lo, *hi)],
            Support::Ball { center, radius } => {
                let dist = self.space.distance(x, center);
                if dist <= *radius {
                    x.to_vec()
                } else {
                    let s = radius / dist;
                    x.iter().zip(center).map(|(v, c)| c + s * (v - c)).collect()
                }
            }
            Support::WholeSpace => x.to_vec(),
            Support::Subspace { .. } => self.subspace_projection(x),
            Support::Finite(atoms) if atoms.len() == 1 => atoms[0].clone(),
            Support::Finite(_) => {
                return Err(QuantError::Unsupported(
                    "support of an empirical law with several atoms is not convex".into(),
                ))
            }
        }))
    }

    fn subspace_projection(&self, x: &[f64]) -> Vec<f64> {
        let Support::Subspace { basis } = &self.support else {
            unreachable!()
        };
        let w = self.space.weights().expect("grid space");
        let mut proj = vec![0.0; x.len()];
        for b in basis {
            let c: f64 = b.iter().zip(x).zip(w).map(|((b, x), w)| w * b * x).sum();
            for (p, bj) in proj.iter_mut().zip(b) {
                *p += c * bj;
            }
        }
        proj
    }

    /// Estimate of `E ||X||^s` from [`MOMENT_SAMPLES`] draws on stream 0,
    /// cached per exponent.
    pub fn moment(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        let key = s.to_bits();
        if let Some(v) = self.moments.lock().unwrap().get(&key) {
            return *v;
        }
        let v = match (&self.kind, self.space_overridden) {
            (DistKind::UniformInterval { lo, hi }, false) => {
                // E|X|^s = (int_lo^hi |x|^s dx) / (hi - lo)
                let prim = |t: f64| t.signum() * t.abs().powf(s + 1.0) / (s + 1.0);
                (prim(*hi) - prim(*lo)) / (hi - lo)
            }
            _ => {
                let mut rng = self.rng(0);
                let mut buf = Vec::with_capacity(MOMENT_CHUNK * self.dim());
                let mut acc = 0.0;
                let mut left = MOMENT_SAMPLES;
                while left > 0 {
                    let n = left.min(MOMENT_CHUNK);
                    buf.clear();
                    for _ in 0..n {
                        self.draw_into(&mut rng, &mut buf);
                    }
                    acc += buf
                        .chunks_exact(self.dim())
                        .map(|x| self.space.norm_of(x.iter().copied()).powf(s))
                        .sum::<f64>();
                    left -= n;
                }
                acc / MOMENT_SAMPLES as f64
            }
        };
        self.moments.lock().unwrap().insert(key, v);
        v
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        DistributionSpec {
            kind: d.kind,
            seed: d.seed,
            space: d.space_overridden.then_some(d.space),
        }
    }
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = QuantError;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        let d = Distribution::new(spec.kind, spec.seed)?;
        match spec.space {
            Some(s) => d.with_space(s),
            None => Ok(d),
        }
    }
}

fn merge_atoms(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if points.is_empty() {
        return Err(QuantError::Empty("empirical law needs at least one atom".into()));
    }
    if points.len() != weights.len() {
        return Err(QuantError::InvalidParameter(format!(
            "{} atoms but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(QuantError::InvalidParameter("atoms must have positive dimension".into()));
    }
    let mut merged: Vec<(Vec<f64>, f64)> = Vec::new();
    for (p, w) in points.into_iter().zip(weights) {
        if p.len() != dim {
            return Err(QuantError::DimensionMismatch { expected: dim, got: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(QuantError::InvalidParameter("atom has non-finite coordinate".into()));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(QuantError::InvalidParameter("atom masses must be positive".into()));
        }
        match merged.iter_mut().find(|(q, _)| *q == p) {
            Some((_, acc)) => *acc += w,
            None => merged.push((p, w)),
        }
    }
    let total: f64 = merged.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(QuantError::InvalidParameter(format!(
            "atom masses sum to {total}, expected 1"
        )));
    }
    Ok(merged.into_iter().unzip())
}

/// Rows `sqrt(2) sin((k - 1/2) pi t) / ((k - 1/2) pi)` on the grid nodes.
fn kl_basis(space: &NormedSpace, k: usize) -> Vec<f64> {
    let nodes = space.nodes().expect("grid space");
    let mut table = Vec::with_capacity(k * nodes.len());
    for mode in 1..=k {
        let freq = (mode as f64 - 0.5) * PI;
        table.extend(
            nodes
                .iter()
                .map(|t| std::f64::consts::SQRT_2 * (freq * t).sin() / freq),
        );
    }
    table
}

/// Modified Gram–Schmidt in the weighted `L^2` inner product.
fn orthonormalize(space: &NormedSpace, table: &[f64], k: usize) -> Vec<Vec<f64>> {
    let w = space.weights().expect("grid space");
    let m = w.len();
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(w).map(|((x, y), w)| w * x * y).sum()
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for row in table.chunks_exact(m).take(k) {
        let mut v = row.to_vec();
        for b in &basis {
            let c = dot(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mean_within_clt_bound() {
        let d = Distribution::uniform_interval(-1.0, 1.0, 11).unwrap();
        let s = d.sample(3, 1_000_000);
        let mean: f64 = s.as_slice().iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() <= 0.005, "{mean}");
    }

    #[test]
    fn gaussian_variance_within_clt_bound() {
        let d = Distribution::gaussian_iso(1, 0.0, 1.0, 5).unwrap();
        let s = d.sample(0, 1_000_000);
        let n = s.len() as f64;
        let mean: f64 = s.as_slice().iter().sum::<f64>() / n;
        let var: f64 = s.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.99..=1.01).contains(&var), "{var}");
    }

    #[test]
    fn single_atom_always_drawn() {
        let d = Distribution::empirical(vec![vec![1.5, -2.0]], vec![1.0], 0).unwrap();
        let s = d.sample(9, 100);
        assert!(s.iter().all(|x| x == [1.5, -2.0]));
    }

    #[test]
    fn empirical_weights_must_sum_to_one() {
        let err = Distribution::empirical(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4], 0);
        assert!(matches!(err, Err(QuantError::InvalidParameter(_))));
    }

    #[test]
    fn draws_are_deterministic_per_stream() {
        for d in [
            Distribution::uniform_interval(-1.0, 1.0, 42).unwrap(),
            Distribution::uniform_disk(vec![0.0, 0.0], 1.0, 42).unwrap(),
            Distribution::brownian_kl(16, 4, 42).unwrap(),
        ] {
            let a = d.sample(7, 500);
            let b = d.sample(7, 500);
            let c = d.sample(8, 500);
            let bits = |s: &Samples| s.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
            assert_ne!(bits(&a), bits(&c));
        }
    }

    #[test]
    fn support_membership() {
        let u = Distribution::uniform_interval(-1.0, 1.0, 0).unwrap();
        assert!(u.support_contains(&[0.3], 0.0).unwrap());
        assert!(!u.support_contains(&[3.0], 0.5).unwrap());
        let disk = Distribution::uniform_disk(vec![0.0, 0.0], 1.0, 0).unwrap();
        assert!(disk.support_contains(&[0.6, 0.8], 1e-9).unwrap());
        assert!(!disk.support_contains(&[0.6, 0.81], 1e-9).unwrap());
    }

    #[test]
    fn projections_onto_convex_supports() {
        let u = Distribution::uniform_interval(-1.0, 1.0, 0).unwrap();
        assert_eq!(u.project_to_support(&[3.0]).unwrap().0, vec![1.0]);
        assert_eq!(u.project_to_support(&[0.25]).unwrap().0, vec![0.25]);
        let disk = Distribution::uniform_disk(vec![0.0, 0.0], 1.0, 0).unwrap();
        let b = disk.project_to_support(&[3.0, 4.0]).unwrap();
        assert!((b[0] - 0.6).abs() < 1e-15 && (b[1] - 0.8).abs() < 1e-15);
        // variational inequality <x - b, y - b> <= 0 on sampled support points
        let x = [3.0, 4.0];
        for y in disk.sample(1, 1000).iter() {
            let ip = (x[0] - b[0]) * (y[0] - b[0]) + (x[1] - b[1]) * (y[1] - b[1]);
            assert!(ip <= 1e-12);
        }
        let emp = Distribution::empirical(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5], 0).unwrap();
        assert!(matches!(emp.project_to_support(&[0.5]), Err(QuantError::Unsupported(_))));
    }

    #[test]
    fn every_draw_lies_in_the_support() {
        for d in [
            Distribution::uniform_interval(-1.0, 1.0, 1).unwrap(),
            Distribution::gaussian_iso(3, 0.0, 2.0, 1).unwrap(),
            Distribution::uniform_disk(vec![1.0, -1.0], 0.5, 1).unwrap(),
            Distribution::empirical(vec![vec![0.0, 1.0], vec![2.0, 2.0]], vec![0.25, 0.75], 1)
                .unwrap(),
            Distribution::brownian_kl(32, 8, 1).unwrap(),
        ] {
            for x in d.sample(0, 2000).iter() {
                assert!(d.support_contains(x, 1e-9).unwrap(), "{:?}", d.kind());
            }
        }
    }

    #[test]
    fn brownian_single_mode_and_origin() {
        let d = Distribution::brownian_kl(33, 1, 3).unwrap();
        let nodes = d.space().nodes().unwrap();
        let shape: Vec<f64> = nodes
            .iter()
            .map(|t| (PI * t / 2.0).sin() * std::f64::consts::SQRT_2 / (PI / 2.0))
            .collect();
        for x in d.sample(0, 50).iter() {
            let c = x[32] / shape[32];
            for (v, s) in x.iter().zip(&shape) {
                assert!((v - c * s).abs() < 1e-12);
            }
        }
        let d16 = Distribution::brownian_kl(64, 16, 3).unwrap();
        assert!(d16.sample(0, 100).iter().all(|x| x[0] == 0.0));
    }

    #[test]
    fn brownian_energy_matches_parseval_sum() {
        let d = Distribution::brownian_kl(64, 16, 21).unwrap();
        let s = d.sample(0, 100_000);
        let e: f64 = s.iter().map(|x| d.space().norm(x).unwrap().powi(2)).sum::<f64>()
            / s.len() as f64;
        let oracle: f64 = (1..=16)
            .map(|k| 1.0 / ((k as f64 - 0.5) * PI).powi(2))
            .sum();
        assert!((e / oracle - 1.0).abs() < 0.02, "{e} vs {oracle}");
    }

    #[test]
    fn brownian_order_exceeding_grid_is_rejected() {
        assert!(matches!(
            Distribution::brownian_kl(4, 5, 0),
            Err(QuantError::InvalidParameter(_))
        ));
    }

    #[test]
    fn uniform_moment_closed_form() {
        let d = Distribution::uniform_interval(-1.0, 1.0, 0).unwrap();
        assert!((d.moment(1.0) - 0.5).abs() < 1e-15);
        assert!((d.moment(2.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn spec_json_round_trip() {
        let d = Distribution::uniform_disk(vec![0.0, 0.0], 1.0, 9).unwrap();
        let js = serde_json::to_string(&d).unwrap();
        assert_eq!(
            js,
            r#"{"kind":"uniform_disk","params":{"center":[0.0,0.0],"radius":1.0},"seed":9}"#
        );
        let back: Distribution = serde_json::from_str(&js).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn csv_loading() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        std::fs::write(&path, "0.0, 1.0\n2.0,3.0\n2.0,3.0\n").unwrap();
        let d = Distribution::empirical_from_csv(&path, 0).unwrap();
        let atoms = d.atoms();
        assert_eq!(atoms.len(), 2);
        assert!((atoms[1].1 - 2.0 / 3.0).abs() < 1e-15);
    }
}
