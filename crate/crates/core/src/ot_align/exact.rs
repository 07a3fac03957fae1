//! Exact (unregularized) optimal transport by the transportation simplex:
//! north-west-corner start, MODI potentials on the basis spanning tree,
//! Dantzig pricing and cycle pivots.

use std::collections::VecDeque;

use super::cost::CostMatrix;
use super::grid::ProbabilityGrid;
use crate::error::{Error, Result};
use crate::numerics::Mat;

/// Largest grid the oracle accepts through [`exact_ot`].
pub const EXACT_OT_MAX_N: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactPlan {
    pub cost: f64,
    /// Basic cells `(source, target, mass)`; zero-mass basic cells are dropped.
    pub flows: Vec<(usize, usize, f64)>,
    pub pivots: usize,
}

/// Optimal `⟨P, C⟩` over couplings of `p` and `q`, for `n ≤ 64`.
pub fn exact_ot(p: &ProbabilityGrid, q: &ProbabilityGrid, cost: &CostMatrix) -> Result<f64> {
    if p.n() > EXACT_OT_MAX_N {
        return Err(Error::Scale { n: p.n(), max: EXACT_OT_MAX_N });
    }
    if p.n() != q.n() || cost.n() != p.n() {
        return Err(Error::Shape(format!("marginals {} and {} with {} cells of cost", p.n(), q.n(), cost.n())));
    }
    Ok(transport_simplex(p.as_slice(), q.as_slice(), &cost.cost)?.cost)
}

/// Exact W-cost between two grids of any size (used to score distillation runs).
pub fn exact_transport(p: &ProbabilityGrid, q: &ProbabilityGrid, cost: &CostMatrix) -> Result<ExactPlan> {
    if p.n() != q.n() || cost.n() != p.n() {
        return Err(Error::Shape(format!("marginals {} and {} with {} cells of cost", p.n(), q.n(), cost.n())));
    }
    transport_simplex(p.as_slice(), q.as_slice(), &cost.cost)
}

struct Basis {
    rows: usize,
    cols: usize,
    /// Basic cells; edges of a spanning tree over `rows + cols` nodes.
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    /// Node -> incident basic-cell indices. Column `j` is node `rows + j`.
    adj: Vec<Vec<usize>>,
}

impl Basis {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: Vec::with_capacity(rows + cols - 1),
            flow: Vec::with_capacity(rows + cols - 1),
            adj: vec![Vec::new(); rows + cols],
        }
    }

    fn push(&mut self, i: usize, j: usize, x: f64) {
        let id = self.cells.len();
        self.cells.push((i, j));
        self.flow.push(x);
        self.adj[i].push(id);
        self.adj[self.rows + j].push(id);
    }

    fn replace(&mut self, leaving: usize, i: usize, j: usize, x: f64) {
        let (li, lj) = self.cells[leaving];
        self.adj[li].retain(|&e| e != leaving);
        self.adj[self.rows + lj].retain(|&e| e != leaving);
        self.cells[leaving] = (i, j);
        self.flow[leaving] = x;
        self.adj[i].push(leaving);
        self.adj[self.rows + j].push(leaving);
    }

    fn other(&self, edge: usize, node: usize) -> usize {
        let (i, j) = self.cells[edge];
        if node == i {
            self.rows + j
        } else {
            i
        }
    }

    /// Potentials with `u_0 = 0` and `u_i + v_j = c_ij` on basic cells.
    fn potentials(&self, cost: &Mat) -> (Vec<f64>, Vec<f64>) {
        let n = self.rows + self.cols;
        let mut pot = vec![f64::NAN; n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &e in &self.adj[node] {
                let next = self.other(e, node);
                if pot[next].is_nan() {
                    let (i, j) = self.cells[e];
                    pot[next] = cost[(i, j)] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(self.rows);
        (pot, v)
    }

    /// Tree path from column node of `j` to row `i`, as basic-cell indices.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let n = self.rows + self.cols;
        let start = self.rows + j;
        let mut via = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &e in &self.adj[node] {
                let next = self.other(e, node);
                if !seen[next] {
                    seen[next] = true;
                    via[next] = e;
                    queue.push_back(next);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = i;
        while node != start {
            let e = via[node];
            edges.push(e);
            node = self.other(e, node);
        }
        edges.reverse();
        edges
    }
}

pub(crate) fn transport_simplex(p: &[f64], q: &[f64], cost: &Mat) -> Result<ExactPlan> {
    let (n, m) = (p.len(), q.len());
    if n == 0 || m == 0 || cost.shape() != (n, m) {
        return Err(Error::Shape(format!("{n} sources, {m} targets, cost {}x{}", cost.rows(), cost.cols())));
    }
    if p.iter().chain(q).any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Argument("masses must be finite and nonnegative".into()));
    }
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    if !(sp > 0.0) || (sp - sq).abs() > 1e-9 * sp {
        return Err(Error::Argument(format!("unbalanced masses {sp} and {sq}")));
    }
    let mut supply = p.to_vec();
    let mut demand: Vec<f64> = q.iter().map(|x| x * sp / sq).collect();

    // north-west corner: exactly n + m - 1 basic cells
    let mut basis = Basis::new(n, m);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = supply[i].min(demand[j]);
        basis.push(i, j, x);
        supply[i] -= x;
        demand[j] -= x;
        if i == n - 1 && j == m - 1 {
            break;
        }
        let row_done = supply[i] <= demand[j];
        if (row_done && i < n - 1) || j == m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }

    let scale = cost.as_slice().iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1.0);
    let tol = 1e-12 * scale;
    let max_pivots = 50 * (n + m) * (n + m) + 1000;
    let mut pivots = 0;
    loop {
        let (u, v) = basis.potentials(cost);
        let mut best = (-tol, usize::MAX, usize::MAX);
        for r in 0..n {
            let row = cost.row(r);
            for c in 0..m {
                let reduced = row[c] - u[r] - v[c];
                if reduced < best.0 {
                    best = (reduced, r, c);
                }
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        if pivots >= max_pivots {
            return Err(Error::Numeric(format!("transport simplex did not terminate in {max_pivots} pivots")));
        }
        let (enter_i, enter_j) = (best.1, best.2);
        let path = basis.path(enter_i, enter_j);
        // cells along the path alternate -, +, -, ... starting next to the entering cell
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 && basis.flow[e] < theta {
                theta = basis.flow[e];
                leaving = e;
            }
        }
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis.flow[e] -= theta;
            } else {
                basis.flow[e] += theta;
            }
        }
        basis.replace(leaving, enter_i, enter_j, theta);
        pivots += 1;
    }

    let mut total = 0.0;
    let mut flows = Vec::new();
    for (&(r, c), &x) in basis.cells.iter().zip(&basis.flow) {
        let x = x.max(0.0);
        if x > 0.0 {
            total += x * cost[(r, c)];
            flows.push((r, c, x));
        }
    }
    flows.sort_by_key(|f| (f.0, f.1));
    Ok(ExactPlan { cost: total, flows, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use crate::ot_align::cost::{build_cost, CostMetric};

    fn grid(h: usize, w: usize, values: &[f64]) -> ProbabilityGrid {
        ProbabilityGrid::from_weights(Mat::new(h, w, values.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn identical_marginals_cost_nothing() {
        let mut rng = Rng::new(3);
        let c = build_cost(3, 3, CostMetric::L2sq);
        let p = grid(3, 3, &rng.uniform_vec(9, 0.1, 1.0));
        let plan = exact_transport(&p, &p, &c).unwrap();
        assert!(plan.cost.abs() < 1e-15);
        assert!(plan.flows.iter().all(|&(i, j, _)| i == j));
    }

    #[test]
    fn two_point_assignment() {
        // p = (a, 1-a), q = (b, 1-b) on a 1x2 grid: the cheaper coupling moves |a-b|
        let c = build_cost(1, 2, CostMetric::L2sq);
        for (a, b) in [(0.3, 0.6), (0.9, 0.2), (0.5, 0.5), (1.0, 0.0)] {
            let p = grid(1, 2, &[a, 1.0 - a]);
            let q = grid(1, 2, &[b, 1.0 - b]);
            // couplings [[x, a-x], [b-x, 1-a-b+x]]: enumerate both vertices of x
            let vertices = [a.min(b), (a + b - 1.0).max(0.0)];
            let want = vertices
                .iter()
                .map(|x| (a - x) + (b - x))
                .fold(f64::INFINITY, f64::min);
            assert!((exact_ot(&p, &q, &c).unwrap() - want).abs() < 1e-15, "{a} {b}");
        }
    }

    /// Optimal values from an independent LP solver (HiGHS via scipy.optimize.linprog).
    type Case<'a> = (&'a [f64], &'a [f64], usize, usize, f64);

    #[test]
    fn matches_reference_lp() {
        let cases: [Case; 3] = [
            (&[0.1, 0.2, 0.3, 0.4], &[0.4, 0.3, 0.2, 0.1], 2, 2, 0.6),
            (
                &[0.05, 0.15, 0.1, 0.2, 0.05, 0.1, 0.1, 0.15, 0.1],
                &[0.2, 0.05, 0.05, 0.1, 0.1, 0.1, 0.05, 0.15, 0.2],
                3,
                3,
                0.4,
            ),
            (&[0.5, 0.0, 0.0, 0.5], &[0.0, 0.5, 0.5, 0.0], 2, 2, 1.0),
        ];
        for (p, q, h, w, want) in cases {
            let c = build_cost(h, w, CostMetric::L2sq);
            let got = exact_ot(&grid(h, w, p), &grid(h, w, q), &c).unwrap();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn scale_limit() {
        let p = ProbabilityGrid::uniform(9, 9);
        let c = build_cost(9, 9, CostMetric::L2sq);
        assert!(matches!(exact_ot(&p, &p, &c), Err(Error::Scale { n: 81, max: 64 })));
        assert!(exact_transport(&p, &p, &c).is_ok());
    }

    #[test]
    fn plan_is_feasible() {
        let mut rng = Rng::new(99);
        let c = build_cost(5, 5, CostMetric::L1);
        let p = grid(5, 5, &rng.uniform_vec(25, 0.0, 1.0));
        let q = grid(5, 5, &rng.uniform_vec(25, 0.0, 1.0));
        let plan = exact_transport(&p, &q, &c).unwrap();
        let mut rows = [0.0; 25];
        let mut cols = [0.0; 25];
        for &(i, j, x) in &plan.flows {
            rows[i] += x;
            cols[j] += x;
        }
        for k in 0..25 {
            assert!((rows[k] - p.as_slice()[k]).abs() < 1e-12);
            assert!((cols[k] - q.as_slice()[k]).abs() < 1e-12);
        }
    }
}
