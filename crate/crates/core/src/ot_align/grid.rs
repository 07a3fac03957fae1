use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Mat;

/// Raw `h × w` response scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseMap {
    pub values: Mat,
}

impl ResponseMap {
    pub fn new(values: Mat) -> Result<Self> {
        if !values.is_finite() {
            return Err(Error::Numeric("response map has non-finite scores".into()));
        }
        Ok(Self { values })
    }

    pub fn h(&self) -> usize {
        self.values.rows()
    }

    pub fn w(&self) -> usize {
        self.values.cols()
    }
}

/// Nonnegative `h × w` mass summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityGrid {
    mass: Mat,
}

impl ProbabilityGrid {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(mass: Mat) -> Result<Self> {
        if mass.as_slice().iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::Argument("probability mass must be finite and nonnegative".into()));
        }
        let total = mass.sum();
        if (total - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::Argument(format!("probability mass sums to {total}, not 1")));
        }
        Ok(Self { mass })
    }

    /// Normalizes nonnegative weights to unit mass.
    pub fn from_weights(weights: Mat) -> Result<Self> {
        let total = weights.sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Argument("weights must have positive finite total".into()));
        }
        Self::new(weights.scale(1.0 / total))
    }

    /// All mass on the row-major cell `cell`.
    pub fn dirac(h: usize, w: usize, cell: usize) -> Result<Self> {
        if cell >= h * w {
            return Err(Error::Range(format!("cell {cell} outside {h}x{w} grid")));
        }
        let mut m = Mat::zeros(h, w);
        m.as_mut_slice()[cell] = 1.0;
        Ok(Self { mass: m })
    }

    pub fn uniform(h: usize, w: usize) -> Self {
        Self {
            mass: Mat::filled(h, w, 1.0 / (h * w) as f64),
        }
    }

    pub fn h(&self) -> usize {
        self.mass.rows()
    }

    pub fn w(&self) -> usize {
        self.mass.cols()
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &Mat {
        &self.mass
    }

    /// Flattened (row-major) masses.
    pub fn as_slice(&self) -> &[f64] {
        self.mass.as_slice()
    }
}

/// `exp(R - max R) / Σ exp(R - max R)`.
pub fn spatial_softmax(r: &ResponseMap) -> ProbabilityGrid {
    let max = r.values.max();
    let e = r.values.map(|v| (v - max).exp());
    let total = e.sum();
    ProbabilityGrid { mass: e.scale(1.0 / total) }
}

/// Pulls `∂L/∂log q` back to the raw scores: `g - q Σ g`.
pub fn softmax_backward_from_log(q: &ProbabilityGrid, d_log_q: &[f64]) -> Mat {
    let total: f64 = d_log_q.iter().sum();
    let data = d_log_q
        .iter()
        .zip(q.as_slice())
        .map(|(g, m)| g - m * total)
        .collect();
    Mat::new(q.h(), q.w(), data).expect("same shape as q")
}

/// Pulls `∂L/∂q` back to the raw scores: `q ⊙ (g - ⟨q, g⟩)`.
pub fn softmax_backward(q: &ProbabilityGrid, d_q: &[f64]) -> Mat {
    let d_log: Vec<f64> = d_q.iter().zip(q.as_slice()).map(|(g, m)| g * m).collect();
    softmax_backward_from_log(q, &d_log)
}

/// `KL(p ‖ q)`; infinite when `q` misses mass that `p` carries.
pub fn kl_divergence(p: &ProbabilityGrid, q: &ProbabilityGrid) -> Result<f64> {
    p.mass.check_same_shape(&q.mass)?;
    let mut kl = 0.0;
    for (&a, &b) in p.as_slice().iter().zip(q.as_slice()) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl)
}
