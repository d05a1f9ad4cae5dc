//! Browser bindings: Lloyd runs on small laws, the exact two-point distortion
//! landscape on U[-1,1], and the local-minimum probe.

use quantor::optimize::{best_of, multistart};
use quantor::verify::{local_min_probe, ProbeConfig};
use quantor::{distortion_exact_1d, Distribution, OptimizerConfig, QuantError, Quantizer};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const PREVIEW_POINTS: usize = 1500;

#[derive(Debug, Serialize)]
pub struct LloydView {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub distortion: f64,
    pub std_error: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
    /// A few draws from the law, for plotting.
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct ProbeView {
    pub strictness: String,
    pub flat_fraction: f64,
    pub base_distortion: f64,
    pub best_delta: Option<f64>,
    pub best_tuple: Option<Vec<f64>>,
}

fn law(name: &str, seed: u64) -> quantor::Result<Distribution> {
    match name {
        "uniform" => Distribution::uniform_interval(-1.0, 1.0, seed),
        "normal" => Distribution::gaussian_iso(1, 0.0, 1.0, seed),
        "disk" => Distribution::uniform_disk(vec![0.0, 0.0], 1.0, seed),
        other => Err(QuantError::Unsupported(format!("law {other:?}"))),
    }
}

pub fn lloyd_view(name: &str, n: usize, seed: u64, n_samples: usize) -> quantor::Result<LloydView> {
    let dist = law(name, seed)?;
    let cfg = OptimizerConfig { n_samples, max_iters: 200, ..Default::default() };
    let traces = multistart(&dist, dist.space(), 2.0, n, 1, &cfg)?;
    let best = best_of(traces).ok_or_else(|| QuantError::Empty("no start".into()))?;
    let preview = dist.sample(1 << 32, PREVIEW_POINTS);
    Ok(LloydView {
        dim: dist.dim(),
        points: best.quantizer.points.iter().map(|p| p.to_vec()).collect(),
        distortion: best.final_distortion.mean,
        std_error: best.final_distortion.std_error,
        trace: best.records.iter().map(|r| r.distortion).collect(),
        converged: best.converged(),
        samples: preview.iter().map(<[f64]>::to_vec).collect(),
    })
}

/// Exact quadratic distortion of U[-1,1] at (a1, a2) on a `steps x steps`
/// grid over `[lo, hi]^2`, row-major in a2.
pub fn landscape_values(lo: f64, hi: f64, steps: usize) -> quantor::Result<Vec<f64>> {
    if steps < 2 || !(hi > lo) {
        return Err(QuantError::InvalidParameter("need steps >= 2 and hi > lo".into()));
    }
    let dist = Distribution::uniform_interval(-1.0, 1.0, 0)?;
    let h = (hi - lo) / (steps - 1) as f64;
    let mut out = Vec::with_capacity(steps * steps);
    for j in 0..steps {
        for i in 0..steps {
            let q = Quantizer::scalar(2.0, &[lo + i as f64 * h, lo + j as f64 * h])?;
            out.push(distortion_exact_1d(&dist, &q)?);
        }
    }
    Ok(out)
}

pub fn probe_view(points: &[f64], radius: f64, trials: usize, seed: u64) -> quantor::Result<ProbeView> {
    let dist = Distribution::uniform_interval(-1.0, 1.0, seed)?;
    let q = Quantizer::scalar(2.0, points)?;
    let cfg = ProbeConfig { radius, trials, n_samples: 20_000, stream: 7 };
    let v = local_min_probe(&dist, &q, &cfg)?;
    Ok(ProbeView {
        strictness: format!("{:?}", v.strictness),
        flat_fraction: v.flat_fraction,
        base_distortion: v.base_distortion.mean,
        best_delta: v.best_delta.map(|d| d.mean),
        best_tuple: v.best_improving_tuple.map(|t| t.iter().map(|p| p[0]).collect()),
    })
}

fn js<T: Serialize>(r: quantor::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Runs Lloyd on `"uniform"`, `"normal"` or `"disk"` and returns JSON.
#[wasm_bindgen]
pub fn lloyd(law: &str, n: usize, seed: u64, n_samples: usize) -> Result<String, JsError> {
    js(lloyd_view(law, n, seed, n_samples))
}

#[wasm_bindgen]
pub fn landscape(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    landscape_values(lo, hi, steps).map_err(|e| JsError::new(&e.to_string()))
}

/// Probes a scalar codebook on U[-1,1] with r = 2 and returns JSON.
#[wasm_bindgen]
pub fn probe(points: &[f64], radius: f64, trials: usize, seed: u64) -> Result<String, JsError> {
    js(probe_view(points, radius, trials, seed))
}
