//! Entropic optimal transport by alternating diagonal scaling of the Gibbs
//! kernel `K = exp(-C / ε)`, starting from `v = 1`:
//! `u ← p / (K v)`, `v ← q / (Kᵀ u)`, plan `diag(u) K diag(v)`.

use serde::{Deserialize, Serialize};

use super::cost::CostMatrix;
use super::grid::ProbabilityGrid;
use crate::error::{Error, Result};
use crate::numerics::{logsumexp_unchecked, Mat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SinkhornConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once the marginal violation drops to this level; `0` runs every iteration.
    pub marginal_tol: f64,
    pub log_domain: bool,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            max_iters: 100,
            marginal_tol: 1e-9,
            log_domain: false,
        }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Argument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::Argument("max_iters must be at least 1".into()));
        }
        if !(self.marginal_tol >= 0.0) {
            return Err(Error::Argument("marginal_tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// Fixed iteration count, no early stop.
    pub fn fixed(epsilon: f64, iters: usize, log_domain: bool) -> Self {
        Self {
            epsilon,
            max_iters: iters,
            marginal_tol: 0.0,
            log_domain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub plan: Mat,
    /// Row scaling `u`; its natural log when `log_domain` is set.
    pub u: Vec<f64>,
    /// Column scaling `v`; its natural log when `log_domain` is set.
    pub v: Vec<f64>,
    pub log_domain: bool,
    pub iterations_run: usize,
    /// `max(‖P1 - p‖∞, ‖Pᵀ1 - q‖∞)` of the returned plan.
    pub marginal_err: f64,
    pub converged: bool,
}

/// Per-iteration quantities needed to differentiate the unrolled solver.
#[derive(Clone, Debug, Default)]
pub(crate) struct Tape {
    /// Standard domain: `K v⁽ˡ⁻¹⁾`; log domain: row log-sum-exp.
    pub row: Vec<Vec<f64>>,
    /// Standard domain: `Kᵀ u⁽ˡ⁾`; log domain: column log-sum-exp.
    pub col: Vec<Vec<f64>>,
    /// `u⁽ˡ⁾` (or `log u⁽ˡ⁾`).
    pub u: Vec<Vec<f64>>,
    /// `v⁽ˡ⁾` (or `log v⁽ˡ⁾`), including the initial `v⁽⁰⁾`.
    pub v: Vec<Vec<f64>>,
}

pub(crate) struct Solved {
    pub plan: TransportPlan,
    pub kernel: Mat,
    pub tape: Option<Tape>,
}

fn check_inputs(p: &ProbabilityGrid, q: &ProbabilityGrid, cost: &CostMatrix) -> Result<()> {
    if p.n() != q.n() || p.n() != cost.n() || cost.cost.shape() != (cost.n(), cost.n()) {
        return Err(Error::Shape(format!(
            "marginals of size {} and {} with a {}x{} cost",
            p.n(),
            q.n(),
            cost.cost.rows(),
            cost.cost.cols()
        )));
    }
    Ok(())
}

pub fn sinkhorn(p: &ProbabilityGrid, q: &ProbabilityGrid, cost: &CostMatrix, cfg: &SinkhornConfig) -> Result<TransportPlan> {
    Ok(solve(p, q, cost, cfg, false)?.plan)
}

pub(crate) fn solve(
    p: &ProbabilityGrid,
    q: &ProbabilityGrid,
    cost: &CostMatrix,
    cfg: &SinkhornConfig,
    record: bool,
) -> Result<Solved> {
    cfg.validate()?;
    check_inputs(p, q, cost)?;
    if cfg.log_domain {
        solve_log(p.as_slice(), q.as_slice(), &cost.cost, cfg, record)
    } else {
        solve_standard(p.as_slice(), q.as_slice(), &cost.cost, cfg, record)
    }
}

/// `num / den`, with `0 / anything = 0`; a positive numerator over a zero or
/// non-finite denominator is an underflow.
fn scale_div(num: &[f64], den: &[f64], iteration: usize, what: &str) -> Result<Vec<f64>> {
    num.iter()
        .zip(den)
        .enumerate()
        .map(|(k, (&a, &b))| {
            if a == 0.0 {
                return Ok(0.0);
            }
            let s = a / b;
            if b > 0.0 && s.is_finite() {
                Ok(s)
            } else {
                Err(Error::Underflow {
                    iteration,
                    detail: format!("{what}[{k}] = {b:e}"),
                })
            }
        })
        .collect()
}

fn row_error(scale: &[f64], row_sums: &[f64], target: &[f64]) -> f64 {
    scale
        .iter()
        .zip(row_sums)
        .zip(target)
        .map(|((s, r), t)| (s * r - t).abs())
        .fold(0.0, f64::max)
}

fn plan_error(plan: &Mat, p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    let mut col = vec![0.0; n];
    let mut err: f64 = 0.0;
    for i in 0..n {
        let row = plan.row(i);
        err = err.max((row.iter().sum::<f64>() - p[i]).abs());
        for (c, &x) in col.iter_mut().zip(row) {
            *c += x;
        }
    }
    col.iter().zip(q).map(|(c, t)| (c - t).abs()).fold(err, f64::max)
}

fn solve_standard(p: &[f64], q: &[f64], cost: &Mat, cfg: &SinkhornConfig, record: bool) -> Result<Solved> {
    let n = p.len();
    let kernel = cost.map(|c| (-c / cfg.epsilon).exp());
    let mut tape = record.then(Tape::default);
    let mut u = vec![0.0; n];
    let mut v = vec![1.0; n];
    if let Some(t) = tape.as_mut() {
        t.v.push(v.clone());
    }
    let mut iterations = 0;
    let mut converged = false;
    for l in 0..cfg.max_iters {
        let kv = kernel.matvec(&v)?;
        if l > 0 && row_error(&u, &kv, p) <= cfg.marginal_tol {
            converged = true;
            break;
        }
        u = scale_div(p, &kv, l + 1, "K v")?;
        let ktu = kernel.matvec_t(&u)?;
        v = scale_div(q, &ktu, l + 1, "K^T u")?;
        iterations = l + 1;
        if let Some(t) = tape.as_mut() {
            t.row.push(kv);
            t.u.push(u.clone());
            t.col.push(ktu);
            t.v.push(v.clone());
        }
    }
    let plan = Mat::from_fn(n, n, |i, j| u[i] * kernel[(i, j)] * v[j]);
    if !plan.is_finite() {
        return Err(Error::Underflow {
            iteration: iterations,
            detail: "transport plan overflowed".into(),
        });
    }
    let marginal_err = plan_error(&plan, p, q);
    converged = converged || marginal_err <= cfg.marginal_tol;
    Ok(Solved {
        plan: TransportPlan {
            plan,
            u,
            v,
            log_domain: false,
            iterations_run: iterations,
            marginal_err,
            converged,
        },
        kernel,
        tape,
    })
}

fn solve_log(p: &[f64], q: &[f64], cost: &Mat, cfg: &SinkhornConfig, record: bool) -> Result<Solved> {
    let n = p.len();
    let log_kernel = cost.map(|c| -c / cfg.epsilon);
    let log_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let log_q: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let mut tape = record.then(Tape::default);
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    if let Some(t) = tape.as_mut() {
        t.v.push(g.clone());
    }
    let mut scratch = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let degenerate = |iterations: usize, what: String| Error::Convergence {
        iterations,
        marginal_err: f64::NAN,
        detail: what,
    };
    for l in 0..cfg.max_iters {
        let row_lse: Vec<f64> = (0..n)
            .map(|i| {
                for (s, (k, gj)) in scratch.iter_mut().zip(log_kernel.row(i).iter().zip(&g)) {
                    *s = k + gj;
                }
                logsumexp_unchecked(&scratch)
            })
            .collect();
        if l > 0 {
            let err = (0..n)
                .map(|i| ((f[i] + row_lse[i]).exp() - p[i]).abs())
                .fold(0.0, f64::max);
            if err <= cfg.marginal_tol {
                converged = true;
                break;
            }
        }
        for i in 0..n {
            f[i] = if p[i] == 0.0 { f64::NEG_INFINITY } else { log_p[i] - row_lse[i] };
            if f[i].is_nan() || f[i] == f64::INFINITY {
                return Err(degenerate(l + 1, format!("row potential {i} is {} (ε too small for this cost?)", f[i])));
            }
        }
        let col_lse: Vec<f64> = (0..n)
            .map(|j| {
                for (i, s) in scratch.iter_mut().enumerate() {
                    *s = log_kernel[(i, j)] + f[i];
                }
                logsumexp_unchecked(&scratch)
            })
            .collect();
        for j in 0..n {
            g[j] = if q[j] == 0.0 { f64::NEG_INFINITY } else { log_q[j] - col_lse[j] };
            if g[j].is_nan() || g[j] == f64::INFINITY {
                return Err(degenerate(l + 1, format!("column potential {j} is {}", g[j])));
            }
        }
        iterations = l + 1;
        if let Some(t) = tape.as_mut() {
            t.row.push(row_lse);
            t.u.push(f.clone());
            t.col.push(col_lse);
            t.v.push(g.clone());
        }
    }
    let plan = Mat::from_fn(n, n, |i, j| {
        if f[i] == f64::NEG_INFINITY || g[j] == f64::NEG_INFINITY {
            0.0
        } else {
            (f[i] + log_kernel[(i, j)] + g[j]).exp()
        }
    });
    if !plan.is_finite() {
        return Err(degenerate(iterations, "transport plan is not finite".into()));
    }
    let marginal_err = plan_error(&plan, p, q);
    converged = converged || marginal_err <= cfg.marginal_tol;
    Ok(Solved {
        plan: TransportPlan {
            plan,
            u: f,
            v: g,
            log_domain: true,
            iterations_run: iterations,
            marginal_err,
            converged,
        },
        kernel: log_kernel,
        tape,
    })
}

/// `⟨P, C⟩`.
pub fn saot_loss(plan: &TransportPlan, cost: &CostMatrix) -> Result<f64> {
    plan.plan.dot(&cost.cost)
}

/// Projects an approximate plan onto the coupling polytope of `(p, q)`:
/// shrink rows that carry too much mass, then columns, then spread the
/// remaining deficit as a rank-one correction. The result moves at most
/// `2 (‖r - p‖₁ + ‖c - q‖₁)` in L1 from the input.
pub fn round_to_marginals(plan: &Mat, p: &ProbabilityGrid, q: &ProbabilityGrid) -> Result<Mat> {
    let (n, m) = (p.n(), q.n());
    if plan.shape() != (n, m) {
        return Err(Error::Shape(format!("plan {:?} for marginals of size {n} and {m}", plan.shape())));
    }
    let mut x = plan.clone();
    for i in 0..n {
        let r: f64 = x.row(i).iter().sum();
        if r > p.as_slice()[i] {
            let s = p.as_slice()[i] / r;
            x.as_mut_slice()[i * m..(i + 1) * m].iter_mut().for_each(|v| *v *= s);
        }
    }
    for j in 0..m {
        let c: f64 = (0..n).map(|i| x[(i, j)]).sum();
        if c > q.as_slice()[j] {
            let s = q.as_slice()[j] / c;
            (0..n).for_each(|i| x[(i, j)] *= s);
        }
    }
    let err_r: Vec<f64> = (0..n)
        .map(|i| (p.as_slice()[i] - x.row(i).iter().sum::<f64>()).max(0.0))
        .collect();
    let err_c: Vec<f64> = (0..m)
        .map(|j| (q.as_slice()[j] - (0..n).map(|i| x[(i, j)]).sum::<f64>()).max(0.0))
        .collect();
    let total: f64 = err_r.iter().sum();
    if total > 0.0 {
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] += err_r[i] * err_c[j] / total;
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use crate::ot_align::cost::{build_cost, CostMetric};
    use crate::ot_align::grid::{spatial_softmax, ResponseMap};

    fn random_grid(rng: &mut Rng, h: usize, w: usize) -> ProbabilityGrid {
        spatial_softmax(&ResponseMap::new(Mat::from_fn(h, w, |_, _| rng.normal())).unwrap())
    }

    #[test]
    fn rounding_restores_marginals_and_stays_close() {
        let mut rng = Rng::new(4);
        let c = build_cost(5, 5, CostMetric::L2sq);
        let p = random_grid(&mut rng, 5, 5);
        let q = random_grid(&mut rng, 5, 5);
        let plan = sinkhorn(&p, &q, &c, &SinkhornConfig::fixed(0.3, 5, false)).unwrap();
        assert!(plan.marginal_err > 1e-4);
        let x = round_to_marginals(&plan.plan, &p, &q).unwrap();
        for i in 0..25 {
            assert!((x.row(i).iter().sum::<f64>() - p.as_slice()[i]).abs() < 1e-15);
            assert!(((0..25).map(|r| x[(r, i)]).sum::<f64>() - q.as_slice()[i]).abs() < 1e-15);
        }
        assert!(x.as_slice().iter().all(|&v| v >= 0.0));
        let moved: f64 = x.as_slice().iter().zip(plan.plan.as_slice()).map(|(a, b)| (a - b).abs()).sum();
        assert!(moved <= 2.0 * 2.0 * 25.0 * plan.marginal_err + 1e-15);
    }

    #[test]
    fn same_cell_diracs() {
        let c = build_cost(4, 4, CostMetric::L2sq);
        let p = ProbabilityGrid::dirac(4, 4, 5).unwrap();
        for log_domain in [false, true] {
            let cfg = SinkhornConfig { log_domain, ..Default::default() };
            let plan = sinkhorn(&p, &p, &c, &cfg).unwrap();
            assert_eq!(plan.plan[(5, 5)], 1.0);
            assert_eq!(plan.plan.sum(), 1.0);
            assert_eq!(saot_loss(&plan, &c).unwrap(), 0.0);
        }
    }

    #[test]
    fn distinct_diracs_force_the_plan() {
        let c = build_cost(4, 4, CostMetric::L2sq);
        let p = ProbabilityGrid::dirac(4, 4, 0).unwrap();
        let q = ProbabilityGrid::dirac(4, 4, 14).unwrap();
        for eps in [10.0, 1.0, 0.1, 1e-2, 1e-3] {
            let cfg = SinkhornConfig { epsilon: eps, log_domain: true, ..Default::default() };
            let plan = sinkhorn(&p, &q, &c, &cfg).unwrap();
            assert!((plan.plan[(0, 14)] - 1.0).abs() < 1e-12, "eps {eps}");
            assert!((saot_loss(&plan, &c).unwrap() - c.cost[(0, 14)]).abs() < 1e-9);
        }
    }

    #[test]
    fn standard_mode_reports_underflow() {
        let c = build_cost(8, 8, CostMetric::L2sq);
        let p = ProbabilityGrid::dirac(8, 8, 0).unwrap();
        let q = ProbabilityGrid::dirac(8, 8, 63).unwrap();
        let cfg = SinkhornConfig::default();
        assert!(matches!(sinkhorn(&p, &q, &c, &cfg), Err(Error::Underflow { .. })));
    }

    #[test]
    fn log_and_standard_agree() {
        let mut rng = Rng::new(21);
        let c = build_cost(6, 6, CostMetric::L2sq);
        for eps in [5.0, 1.0, 0.5] {
            let p = random_grid(&mut rng, 6, 6);
            let q = random_grid(&mut rng, 6, 6);
            let a = sinkhorn(&p, &q, &c, &SinkhornConfig::fixed(eps, 60, false)).unwrap();
            let b = sinkhorn(&p, &q, &c, &SinkhornConfig::fixed(eps, 60, true)).unwrap();
            for (x, y) in a.plan.as_slice().iter().zip(b.plan.as_slice()) {
                assert!((x - y).abs() < 1e-8);
            }
            assert!((saot_loss(&a, &c).unwrap() - saot_loss(&b, &c).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn reported_marginal_error_bounds_violation() {
        let mut rng = Rng::new(5);
        let c = build_cost(5, 5, CostMetric::L2sq);
        let p = random_grid(&mut rng, 5, 5);
        let q = random_grid(&mut rng, 5, 5);
        let plan = sinkhorn(&p, &q, &c, &SinkhornConfig::fixed(0.3, 7, false)).unwrap();
        assert_eq!(plan.iterations_run, 7);
        assert!(!plan.converged);
        for i in 0..25 {
            let row: f64 = plan.plan.row(i).iter().sum();
            assert!((row - p.as_slice()[i]).abs() <= plan.marginal_err);
        }
        assert!(plan.plan.as_slice().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn early_stop_on_tolerance() {
        let mut rng = Rng::new(8);
        let c = build_cost(4, 4, CostMetric::L2sq);
        let p = random_grid(&mut rng, 4, 4);
        let q = random_grid(&mut rng, 4, 4);
        let cfg = SinkhornConfig { epsilon: 2.0, max_iters: 10_000, marginal_tol: 1e-12, log_domain: false };
        let plan = sinkhorn(&p, &q, &c, &cfg).unwrap();
        assert!(plan.converged);
        assert!(plan.iterations_run < 10_000);
        assert!(plan.marginal_err <= 1e-12);
    }

    #[test]
    fn swap_symmetry() {
        let mut rng = Rng::new(13);
        let c = build_cost(4, 4, CostMetric::L2sq);
        let cfg = SinkhornConfig { epsilon: 0.5, max_iters: 20_000, marginal_tol: 1e-13, log_domain: true };
        let p = random_grid(&mut rng, 4, 4);
        let q = random_grid(&mut rng, 4, 4);
        let a = saot_loss(&sinkhorn(&p, &q, &c, &cfg).unwrap(), &c).unwrap();
        let b = saot_loss(&sinkhorn(&q, &p, &c, &cfg).unwrap(), &c).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn bad_config_and_shapes() {
        let p = ProbabilityGrid::uniform(2, 2);
        let c = build_cost(2, 2, CostMetric::L2sq);
        let bad = SinkhornConfig { epsilon: 0.0, ..Default::default() };
        assert!(matches!(sinkhorn(&p, &p, &c, &bad), Err(Error::Argument(_))));
        let zero_iters = SinkhornConfig { max_iters: 0, ..Default::default() };
        assert!(sinkhorn(&p, &p, &c, &zero_iters).is_err());
        let other = ProbabilityGrid::uniform(3, 3);
        assert!(matches!(sinkhorn(&p, &other, &c, &SinkhornConfig::default()), Err(Error::Shape(_))));
    }

    #[test]
    fn log_domain_degenerates_for_vanishing_epsilon() {
        let c = build_cost(3, 3, CostMetric::L2sq);
        let p = ProbabilityGrid::dirac(3, 3, 0).unwrap();
        let q = ProbabilityGrid::dirac(3, 3, 8).unwrap();
        let cfg = SinkhornConfig { epsilon: 1e-310, log_domain: true, ..Default::default() };
        assert!(matches!(sinkhorn(&p, &q, &c, &cfg), Err(Error::Convergence { .. })));
    }
}
