//! Normed spaces: norm evaluation, Gâteaux derivatives of the norm and the
//! dual pairing.
//!
//! Four families are offered: the Euclidean space `R^d`, weighted-free `l^p`
//! sequence spaces `l^p_d`, and grid-sampled function spaces `L^p([lo, hi])`
//! (with `L^1` as its own variant). Grid spaces carry quadrature weights; dual
//! elements use the *folded* convention where the weights are already
//! multiplied into the vector, so the pairing is always the plain sum
//! `sum_j u_j y_j`.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};

/// An element of a working space (coordinate vector or grid values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn scalar(x: f64) -> Self {
        Point(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// Trapezoid weights on a uniform grid of `m` nodes over `[lo, hi]`.
pub fn trapezoid_weights(m: usize, lo: f64, hi: f64) -> Vec<f64> {
    assert!(m >= 2, "trapezoid rule needs at least two nodes");
    let h = (hi - lo) / (m - 1) as f64;
    let mut w = vec![h; m];
    w[0] = h / 2.0;
    w[m - 1] = h / 2.0;
    w
}

/// Uniform grid nodes matching [`trapezoid_weights`].
pub fn grid_nodes(m: usize, lo: f64, hi: f64) -> Vec<f64> {
    let h = (hi - lo) / (m - 1) as f64;
    (0..m).map(|j| lo + h * j as f64).collect()
}

/// A finite-dimensional normed space from one of the supported families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDescriptor", into = "SpaceDescriptor")]
pub enum NormedSpace {
    Euclidean {
        d: usize,
    },
    LpSequence {
        d: usize,
        p: f64,
    },
    LpGrid {
        p: f64,
        domain: (f64, f64),
        weights: Vec<f64>,
    },
    L1Grid {
        domain: (f64, f64),
        weights: Vec<f64>,
    },
}

impl NormedSpace {
    pub fn euclidean(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(QuantError::InvalidParameter("dimension must be positive".into()));
        }
        Ok(NormedSpace::Euclidean { d })
    }

    pub fn lp_sequence(d: usize, p: f64) -> Result<Self> {
        if d == 0 {
            return Err(QuantError::InvalidParameter("dimension must be positive".into()));
        }
        check_exponent(p)?;
        Ok(NormedSpace::LpSequence { d, p })
    }

    /// `L^p` on a uniform grid of `m` nodes over `[0, 1]` with trapezoid weights.
    pub fn lp_grid(m: usize, p: f64) -> Result<Self> {
        check_exponent(p)?;
        check_grid(m)?;
        Ok(NormedSpace::LpGrid {
            p,
            domain: (0.0, 1.0),
            weights: trapezoid_weights(m, 0.0, 1.0),
        })
    }

    pub fn l1_grid(m: usize) -> Result<Self> {
        check_grid(m)?;
        Ok(NormedSpace::L1Grid {
            domain: (0.0, 1.0),
            weights: trapezoid_weights(m, 0.0, 1.0),
        })
    }

    /// Grid space with caller-supplied quadrature weights (`p == 1` gives the
    /// `L^1` variant).
    pub fn grid_with_weights(p: f64, domain: (f64, f64), weights: Vec<f64>) -> Result<Self> {
        check_exponent(p)?;
        check_grid(weights.len())?;
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(QuantError::InvalidParameter(
                "quadrature weights must be positive".into(),
            ));
        }
        if p == 1.0 {
            Ok(NormedSpace::L1Grid { domain, weights })
        } else {
            Ok(NormedSpace::LpGrid { p, domain, weights })
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            NormedSpace::Euclidean { d } | NormedSpace::LpSequence { d, .. } => *d,
            NormedSpace::LpGrid { weights, .. } | NormedSpace::L1Grid { weights, .. } => {
                weights.len()
            }
        }
    }

    pub fn exponent(&self) -> f64 {
        match self {
            NormedSpace::Euclidean { .. } => 2.0,
            NormedSpace::LpSequence { p, .. } | NormedSpace::LpGrid { p, .. } => *p,
            NormedSpace::L1Grid { .. } => 1.0,
        }
    }

    /// Quadrature weights, `None` for sequence spaces (unit weights).
    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            NormedSpace::LpGrid { weights, .. } | NormedSpace::L1Grid { weights, .. } => {
                Some(weights)
            }
            _ => None,
        }
    }

    /// Grid nodes for function spaces.
    pub fn nodes(&self) -> Option<Vec<f64>> {
        match self {
            NormedSpace::LpGrid { domain, weights, .. }
            | NormedSpace::L1Grid { domain, weights } => {
                Some(grid_nodes(weights.len(), domain.0, domain.1))
            }
            _ => None,
        }
    }

    pub fn is_hilbert(&self) -> bool {
        self.exponent() == 2.0
    }

    pub fn smooth_ae(&self) -> bool {
        true
    }

    pub fn strictly_convex(&self) -> bool {
        self.exponent() > 1.0
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(QuantError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn weight(&self, j: usize) -> f64 {
        match self {
            NormedSpace::LpGrid { weights, .. } | NormedSpace::L1Grid { weights, .. } => {
                weights[j]
            }
            _ => 1.0,
        }
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.norm_of(x.iter().copied()))
    }

    /// `||x - y||` without allocating. Dimensions are not checked.
    #[inline]
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        self.norm_of(x.iter().zip(y).map(|(a, b)| a - b))
    }

    #[inline]
    pub(crate) fn norm_of(&self, it: impl Iterator<Item = f64>) -> f64 {
        match self {
            NormedSpace::Euclidean { .. } => it.map(|v| v * v).sum::<f64>().sqrt(),
            NormedSpace::LpSequence { p, .. } => {
                if *p == 1.0 {
                    it.map(f64::abs).sum()
                } else if *p == 2.0 {
                    it.map(|v| v * v).sum::<f64>().sqrt()
                } else {
                    it.map(|v| v.abs().powf(*p)).sum::<f64>().powf(1.0 / p)
                }
            }
            NormedSpace::LpGrid { p, weights, .. } => {
                if *p == 2.0 {
                    it.zip(weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
                } else {
                    it.zip(weights)
                        .map(|(v, w)| w * v.abs().powf(*p))
                        .sum::<f64>()
                        .powf(1.0 / p)
                }
            }
            NormedSpace::L1Grid { weights, .. } => {
                it.zip(weights).map(|(v, w)| w * v.abs()).sum()
            }
        }
    }

    /// Gâteaux derivative of the norm at `x`, in the folded-dual convention.
    ///
    /// For `p = 1` a zero coordinate makes the norm non-differentiable and
    /// yields [`QuantError::DegeneratePoint`]; see [`Self::norm_gradient_ae`].
    pub fn norm_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; x.len()];
        match self.add_norm_gradient(x, 1.0, &mut out)? {
            Some(index) => Err(QuantError::DegeneratePoint { index }),
            None => Ok(out),
        }
    }

    /// Like [`Self::norm_gradient`] but with `sign(0) = 0` at degenerate `L^1`
    /// coordinates.
    pub fn norm_gradient_ae(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; x.len()];
        self.add_norm_gradient(x, 1.0, &mut out)?;
        Ok(out)
    }

    /// Adds `scale * grad ||.||(x)` into `out`. Returns the first degenerate
    /// coordinate for `p = 1` (treated as `sign(0) = 0`), if any.
    pub fn add_norm_gradient(
        &self,
        x: &[f64],
        scale: f64,
        out: &mut [f64],
    ) -> Result<Option<usize>> {
        let nx = self.norm_of(x.iter().copied());
        if nx == 0.0 {
            return Err(QuantError::NotDifferentiable);
        }
        let p = self.exponent();
        let mut degenerate = None;
        if p == 1.0 {
            for (j, (o, v)) in out.iter_mut().zip(x).enumerate() {
                if *v == 0.0 {
                    degenerate.get_or_insert(j);
                } else {
                    *o += scale * self.weight(j) * v.signum();
                }
            }
        } else if p == 2.0 {
            let s = scale / nx;
            for (j, (o, v)) in out.iter_mut().zip(x).enumerate() {
                *o += s * self.weight(j) * v;
            }
        } else {
            let s = scale / nx.powf(p - 1.0);
            for (j, (o, v)) in out.iter_mut().zip(x).enumerate() {
                *o += s * self.weight(j) * v.signum() * v.abs().powf(p - 1.0);
            }
        }
        Ok(degenerate)
    }

    pub fn dual_pairing(&self, u: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(y)?;
        Ok(u.iter().zip(y).map(|(a, b)| a * b).sum())
    }

    /// Norm of a folded dual element (the conjugate-exponent norm of `u / w`).
    pub fn dual_norm(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        let p = self.exponent();
        let unfold = |j: usize, v: f64| v / self.weight(j);
        if p == 1.0 {
            return Ok(u
                .iter()
                .enumerate()
                .map(|(j, v)| unfold(j, *v).abs())
                .fold(0.0, f64::max));
        }
        let q = p / (p - 1.0);
        let s: f64 = u
            .iter()
            .enumerate()
            .map(|(j, v)| self.weight(j) * unfold(j, *v).abs().powf(q))
            .sum();
        Ok(s.powf(1.0 / q))
    }

    /// Maps a folded dual element to a primal descent direction `h` with
    /// `<u, h> = sum_j u_j^2 / w_j > 0`. This is the Riesz map when `p = 2`.
    pub fn riesz(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(j, v)| v / self.weight(j))
            .collect()
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(QuantError::InvalidParameter(format!(
            "exponent p must be a finite real >= 1, got {p}"
        )));
    }
    Ok(())
}

fn check_grid(m: usize) -> Result<()> {
    if m < 2 {
        return Err(QuantError::InvalidParameter(
            "grid needs at least two nodes".into(),
        ));
    }
    Ok(())
}

/// JSON shape of a space: `{kind, d|m, p, domain}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
}

impl From<NormedSpace> for SpaceDescriptor {
    fn from(s: NormedSpace) -> Self {
        match s {
            NormedSpace::Euclidean { d } => SpaceDescriptor {
                kind: "euclidean".into(),
                d: Some(d),
                m: None,
                p: None,
                domain: None,
            },
            NormedSpace::LpSequence { d, p } => SpaceDescriptor {
                kind: "lp_sequence".into(),
                d: Some(d),
                m: None,
                p: Some(p),
                domain: None,
            },
            NormedSpace::LpGrid { p, domain, weights } => SpaceDescriptor {
                kind: "lp_grid".into(),
                d: None,
                m: Some(weights.len()),
                p: Some(p),
                domain: Some([domain.0, domain.1]),
            },
            NormedSpace::L1Grid { domain, weights } => SpaceDescriptor {
                kind: "l1_grid".into(),
                d: None,
                m: Some(weights.len()),
                p: Some(1.0),
                domain: Some([domain.0, domain.1]),
            },
        }
    }
}

impl TryFrom<SpaceDescriptor> for NormedSpace {
    type Error = QuantError;

    fn try_from(s: SpaceDescriptor) -> Result<Self> {
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| QuantError::Parse(format!("space '{}' needs '{name}'", s.kind)))
        };
        let grid = |p: f64| -> Result<NormedSpace> {
            let m = need(s.m, "m")?;
            check_grid(m)?;
            let [lo, hi] = s.domain.unwrap_or([0.0, 1.0]);
            if !(hi > lo) {
                return Err(QuantError::InvalidParameter("empty grid domain".into()));
            }
            NormedSpace::grid_with_weights(p, (lo, hi), trapezoid_weights(m, lo, hi))
        };
        match s.kind.as_str() {
            "euclidean" => NormedSpace::euclidean(need(s.d, "d")?),
            "lp_sequence" => NormedSpace::lp_sequence(
                need(s.d, "d")?,
                s.p.ok_or_else(|| QuantError::Parse("lp_sequence needs 'p'".into()))?,
            ),
            "lp_grid" => grid(s.p.ok_or_else(|| QuantError::Parse("lp_grid needs 'p'".into()))?),
            "l1_grid" => grid(1.0),
            other => Err(QuantError::Parse(format!("unknown space kind '{other}'"))),
        }
    }
}
