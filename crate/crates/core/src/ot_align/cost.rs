use serde::{Deserialize, Serialize};

use crate::numerics::Mat;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CostMetric {
    /// Squared Euclidean distance.
    #[default]
    L2sq,
    /// Manhattan distance.
    L1,
    /// `1 - cos(x_i, x_j)` of the coordinate vectors. The origin has
    /// similarity 1 with itself and 0 with every other point.
    OneMinusCos,
}

/// Ground cost between the cells of an `h × w` grid, flattened row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub h: usize,
    pub w: usize,
    pub metric: CostMetric,
    pub normalized: bool,
    pub cost: Mat,
}

impl CostMatrix {
    pub fn n(&self) -> usize {
        self.h * self.w
    }

    pub fn max(&self) -> f64 {
        self.cost.max()
    }

    /// Same grid with every cost multiplied by `s`.
    pub fn scaled(&self, s: f64) -> CostMatrix {
        CostMatrix {
            cost: self.cost.scale(s),
            ..self.clone()
        }
    }
}

/// Costs between 0-based integer pixel coordinates `(row, col)`.
pub fn build_cost(h: usize, w: usize, metric: CostMetric) -> CostMatrix {
    build_cost_with(h, w, metric, false)
}

/// With `normalized`, coordinates are divided by `(h - 1, w - 1)` so the grid
/// spans the unit square.
pub fn build_cost_with(h: usize, w: usize, metric: CostMetric, normalized: bool) -> CostMatrix {
    let sy = if normalized && h > 1 { 1.0 / (h - 1) as f64 } else { 1.0 };
    let sx = if normalized && w > 1 { 1.0 / (w - 1) as f64 } else { 1.0 };
    let coords: Vec<(f64, f64)> = (0..h * w)
        .map(|i| ((i / w) as f64 * sy, (i % w) as f64 * sx))
        .collect();
    let n = coords.len();
    let cost = Mat::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let (a, b) = (coords[i], coords[j]);
        match metric {
            CostMetric::L2sq => (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2),
            CostMetric::L1 => (a.0 - b.0).abs() + (a.1 - b.1).abs(),
            CostMetric::OneMinusCos => {
                let na = (a.0 * a.0 + a.1 * a.1).sqrt();
                let nb = (b.0 * b.0 + b.1 * b.1).sqrt();
                let sim = if na == 0.0 && nb == 0.0 {
                    1.0
                } else if na == 0.0 || nb == 0.0 {
                    0.0
                } else {
                    (a.0 * b.0 + a.1 * b.1) / (na * nb)
                };
                (1.0 - sim).max(0.0)
            }
        }
    });
    CostMatrix {
        h,
        w,
        metric,
        normalized,
        cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grids() {
        let c = build_cost(1, 2, CostMetric::L2sq);
        assert_eq!(c.cost.as_slice(), &[0.0, 1.0, 1.0, 0.0]);

        // cells (0,0) (0,1) (1,0) (1,1)
        let c = build_cost(2, 2, CostMetric::L2sq);
        let want = [
            0.0, 1.0, 1.0, 2.0, //
            1.0, 0.0, 2.0, 1.0, //
            1.0, 2.0, 0.0, 1.0, //
            2.0, 1.0, 1.0, 0.0,
        ];
        assert_eq!(c.cost.as_slice(), &want);

        let l1 = build_cost(2, 2, CostMetric::L1);
        assert_eq!(l1.cost[(0, 3)], 2.0);
        assert_eq!(l1.cost[(1, 2)], 2.0);
    }

    #[test]
    fn structural_invariants() {
        for metric in [CostMetric::L2sq, CostMetric::L1, CostMetric::OneMinusCos] {
            for normalized in [false, true] {
                let c = build_cost_with(4, 5, metric, normalized);
                let n = c.n();
                for i in 0..n {
                    assert_eq!(c.cost[(i, i)], 0.0);
                    for j in 0..n {
                        assert!(c.cost[(i, j)] >= 0.0);
                        if metric != CostMetric::OneMinusCos {
                            assert_eq!(c.cost[(i, j)], c.cost[(j, i)]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cosine_ignores_radial_shift() {
        let c = build_cost(4, 4, CostMetric::OneMinusCos);
        // (1,1) and (2,2) lie on the same ray from the origin
        assert!(c.cost[(5, 10)] < 1e-15);
        assert_eq!(c.cost[(0, 5)], 1.0);
        // (0,1) and (1,0) are orthogonal
        assert!((c.cost[(1, 4)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalized_spans_unit_square() {
        let c = build_cost_with(16, 16, CostMetric::L2sq, true);
        assert!((c.max() - 2.0).abs() < 1e-12);
        assert_eq!(build_cost(16, 16, CostMetric::L2sq).max(), 450.0);
    }
}
