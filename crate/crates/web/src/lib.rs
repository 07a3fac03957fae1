//! Browser bindings for three interactive views: an entropic transport plan
//! between two blobs, a blurred RGB frame beside its event frame, and the
//! transport cost and KL divergence as a blob is displaced.

use asymalign::eventsim::{accumulate_event_frame, asymmetry_from_stream, integrate_frame, trigger_events, MovingBox};
use asymalign::numerics::Mat;
use asymalign::ot_align::{
    build_cost, exact_ot, kl_divergence, saot_loss, sinkhorn, CostMetric, ProbabilityGrid, SinkhornConfig,
    EXACT_OT_MAX_N,
};
use asymalign::Result;
use wasm_bindgen::prelude::*;

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct Transport {
    pub grid: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `n × n`, row-major.
    pub plan: Vec<f64>,
    pub cost: f64,
    /// NaN when the grid is too large for the exact solver.
    pub exact_cost: f64,
    pub iterations: usize,
    pub marginal_err: f64,
    pub converged: bool,
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct Simulation {
    pub width: usize,
    pub height: usize,
    /// Integrated intensity scaled to `[0, 1]`.
    pub rgb: Vec<f64>,
    /// Signed event counts over the exposure window.
    pub events: Vec<f64>,
    pub event_count: usize,
    pub r_event: f64,
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct DisplacementCurve {
    pub shift: Vec<f64>,
    pub saot: Vec<f64>,
    pub kl: Vec<f64>,
}

fn blob(grid: usize, row: f64, col: f64, sigma: f64) -> Result<ProbabilityGrid> {
    ProbabilityGrid::from_weights(Mat::from_fn(grid, grid, |r, c| {
        let d2 = (r as f64 - row).powi(2) + (c as f64 - col).powi(2);
        (-d2 / (2.0 * sigma * sigma)).exp()
    }))
}

pub fn transport_plan(grid: usize, shift: f64, sigma: f64, epsilon: f64, log_domain: bool) -> Result<Transport> {
    let mid = (grid as f64 - 1.0) / 2.0;
    let p = blob(grid, mid, mid - shift / 2.0, sigma)?;
    let q = blob(grid, mid, mid + shift / 2.0, sigma)?;
    let cost = build_cost(grid, grid, CostMetric::L2sq);
    let cfg = SinkhornConfig { epsilon, max_iters: 500, log_domain, ..SinkhornConfig::default() };
    let plan = sinkhorn(&p, &q, &cost, &cfg)?;
    let exact_cost = if cost.n() <= EXACT_OT_MAX_N { exact_ot(&p, &q, &cost)? } else { f64::NAN };
    Ok(Transport {
        grid,
        p: p.as_slice().to_vec(),
        q: q.as_slice().to_vec(),
        cost: saot_loss(&plan, &cost)?,
        exact_cost,
        iterations: plan.iterations_run,
        marginal_err: plan.marginal_err,
        converged: plan.converged,
        plan: plan.plan.into_vec(),
    })
}

pub fn simulate_box(velocity_px_s: f64, exposure_us: u64, threshold: f64) -> Result<Simulation> {
    let base = MovingBox::default();
    let t = base.duration_us / 2;
    // centred at the sample time
    let start_x = (base.width as f64 - base.box_size) / 2.0 - velocity_px_s * t as f64 * 1e-6;
    let scene = MovingBox { velocity_x: velocity_px_s, start_x, ..base };
    let frame = integrate_frame(&scene, t, exposure_us, 32)?;
    let stream = trigger_events(&scene, threshold, 500)?;
    let window = accumulate_event_frame(&stream, (t - exposure_us, t), 1)?;
    let report = asymmetry_from_stream(&stream, 30.0, exposure_us, 500)?;
    let peak = frame.intensity.max();
    Ok(Simulation {
        width: frame.width,
        height: frame.height,
        rgb: frame.intensity.as_slice().iter().map(|v| v / peak).collect(),
        events: window.counts.into_vec(),
        event_count: window.event_count,
        r_event: report.r_event,
    })
}

/// Softmax of a Gaussian score bump: a peak over a flat floor.
fn peaked(grid: usize, row: f64, col: f64, height: f64) -> Result<ProbabilityGrid> {
    let bump = blob(grid, row, col, 1.0)?;
    let top = bump.mass().max();
    ProbabilityGrid::from_weights(bump.mass().map(|m| (height * m / top).exp()))
}

/// Peaked maps `d` columns apart for `d = 0..=max_shift`, solved in the log domain.
pub fn displacement(grid: usize, max_shift: usize, height: f64, epsilon: f64) -> Result<DisplacementCurve> {
    let cost = build_cost(grid, grid, CostMetric::L2sq);
    let cfg = SinkhornConfig { epsilon, max_iters: 400, marginal_tol: 1e-6, log_domain: true };
    let row = (grid / 2) as f64;
    let p = peaked(grid, row, 1.0, height)?;
    let mut out = DisplacementCurve { shift: Vec::new(), saot: Vec::new(), kl: Vec::new() };
    for d in 0..=max_shift.min(grid.saturating_sub(3)) {
        let q = peaked(grid, row, 1.0 + d as f64, height)?;
        out.shift.push(d as f64);
        out.saot.push(saot_loss(&sinkhorn(&p, &q, &cost, &cfg)?, &cost)?);
        out.kl.push(kl_divergence(&p, &q)?);
    }
    Ok(out)
}

fn js(e: asymalign::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn transport(grid: usize, shift: f64, sigma: f64, epsilon: f64, log_domain: bool) -> Result<Transport, JsError> {
    transport_plan(grid, shift, sigma, epsilon, log_domain).map_err(js)
}

#[wasm_bindgen]
pub fn simulate(velocity_px_s: f64, exposure_us: u32, threshold: f64) -> Result<Simulation, JsError> {
    simulate_box(velocity_px_s, exposure_us as u64, threshold).map_err(js)
}

#[wasm_bindgen(js_name = displacementCurve)]
pub fn displacement_curve(grid: usize, max_shift: usize, height: f64, epsilon: f64) -> Result<DisplacementCurve, JsError> {
    displacement(grid, max_shift, height, epsilon).map_err(js)
}
