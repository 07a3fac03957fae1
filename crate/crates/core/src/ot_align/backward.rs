//! Gradient of `⟨P, C⟩` with respect to the student's raw scores, taken
//! through the unrolled Sinkhorn iterations that were actually run (so it is
//! exact for the computed quantity, converged or not). The teacher map is a
//! constant.

use super::cost::CostMatrix;
use super::grid::{softmax_backward_from_log, spatial_softmax, ProbabilityGrid, ResponseMap};
use super::sinkhorn::{solve, SinkhornConfig, Tape, TransportPlan};
use crate::error::{Error, Result};
use crate::numerics::Mat;

#[derive(Clone, Debug)]
pub struct SaotGrad {
    pub loss: f64,
    /// `∂L/∂R_stu`, same shape as the student map.
    pub grad: Mat,
    pub plan: TransportPlan,
}

pub fn saot_backward(
    r_stu: &ResponseMap,
    r_tea: &ResponseMap,
    cost: &CostMatrix,
    cfg: &SinkhornConfig,
) -> Result<SaotGrad> {
    let p = spatial_softmax(r_tea);
    let q = spatial_softmax(r_stu);
    let (loss, d_log_q, plan) = saot_grad_log_q(&p, &q, cost, cfg)?;
    Ok(SaotGrad {
        loss,
        grad: softmax_backward_from_log(&q, &d_log_q),
        plan,
    })
}

/// Loss, `∂L/∂log q` and the plan, for fixed `p`.
pub fn saot_grad_log_q(
    p: &ProbabilityGrid,
    q: &ProbabilityGrid,
    cost: &CostMatrix,
    cfg: &SinkhornConfig,
) -> Result<(f64, Vec<f64>, TransportPlan)> {
    let solved = solve(p, q, cost, cfg, true)?;
    let tape = solved.tape.expect("recording requested");
    let loss = solved.plan.plan.dot(&cost.cost)?;
    let d_log_q = if cfg.log_domain {
        backward_log(&solved.kernel, &cost.cost, &solved.plan.plan, &tape)?
    } else {
        let d_q = backward_standard(&solved.kernel, &cost.cost, q.as_slice(), &tape)?;
        d_q.iter().zip(q.as_slice()).map(|(g, m)| g * m).collect()
    };
    Ok((loss, d_log_q, solved.plan))
}

fn finite_or(v: &[f64], iteration: usize, what: &str) -> Result<()> {
    if let Some(k) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite {what}[{k}] while differentiating iteration {iteration}"
        )));
    }
    Ok(())
}

/// Returns `∂L/∂q`.
fn backward_standard(kernel: &Mat, cost: &Mat, q: &[f64], tape: &Tape) -> Result<Vec<f64>> {
    let n = q.len();
    let steps = tape.u.len();
    let u_last = &tape.u[steps - 1];
    let v_last = &tape.v[steps];
    // ∂/∂u_i = Σ_j K_ij C_ij v_j,  ∂/∂v_j = Σ_i u_i K_ij C_ij
    let mut g_u = vec![0.0; n];
    let mut g_v = vec![0.0; n];
    for i in 0..n {
        let (krow, crow) = (kernel.row(i), cost.row(i));
        for j in 0..n {
            let kc = krow[j] * crow[j];
            g_u[i] += kc * v_last[j];
            g_v[j] += u_last[i] * kc;
        }
    }
    let mut g_q = vec![0.0; n];
    for l in (0..steps).rev() {
        let (ktu, v) = (&tape.col[l], &tape.v[l + 1]);
        // v = q / Kᵀu
        let mut g_ktu = vec![0.0; n];
        for j in 0..n {
            if ktu[j] > 0.0 {
                g_q[j] += g_v[j] / ktu[j];
                g_ktu[j] = -g_v[j] * v[j] / ktu[j];
            }
        }
        let via = kernel.matvec(&g_ktu)?;
        for (a, b) in g_u.iter_mut().zip(via) {
            *a += b;
        }
        // u = p / K v_prev
        let (kv, u) = (&tape.row[l], &tape.u[l]);
        let g_kv: Vec<f64> = (0..n)
            .map(|i| if kv[i] > 0.0 { -g_u[i] * u[i] / kv[i] } else { 0.0 })
            .collect();
        g_v = kernel.matvec_t(&g_kv)?;
        g_u.fill(0.0);
        finite_or(&g_v, l + 1, "adjoint of v")?;
        finite_or(&g_q, l + 1, "adjoint of q")?;
    }
    Ok(g_q)
}

/// Returns `∂L/∂log q`.
fn backward_log(log_kernel: &Mat, cost: &Mat, plan: &Mat, tape: &Tape) -> Result<Vec<f64>> {
    let n = cost.rows();
    let steps = tape.u.len();
    let mut g_f = vec![0.0; n];
    let mut g_g = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let pc = plan[(i, j)] * cost[(i, j)];
            g_f[i] += pc;
            g_g[j] += pc;
        }
    }
    let mut g_log_q = vec![0.0; n];
    for l in (0..steps).rev() {
        // g = log q - LSE_i(log K_ij + f_i)
        let (f, col_lse) = (&tape.u[l], &tape.col[l]);
        for j in 0..n {
            g_log_q[j] += g_g[j];
        }
        for i in 0..n {
            if f[i] == f64::NEG_INFINITY {
                continue;
            }
            let krow = log_kernel.row(i);
            let mut acc = 0.0;
            for j in 0..n {
                if g_g[j] != 0.0 && col_lse[j].is_finite() {
                    acc += (krow[j] + f[i] - col_lse[j]).exp() * g_g[j];
                }
            }
            g_f[i] -= acc;
        }
        // f = log p - LSE_j(log K_ij + g_prev_j)
        let (g_prev, row_lse) = (&tape.v[l], &tape.row[l]);
        let mut next = vec![0.0; n];
        for i in 0..n {
            if g_f[i] == 0.0 || !row_lse[i].is_finite() {
                continue;
            }
            let krow = log_kernel.row(i);
            for j in 0..n {
                if g_prev[j] != f64::NEG_INFINITY {
                    next[j] -= (krow[j] + g_prev[j] - row_lse[i]).exp() * g_f[i];
                }
            }
        }
        g_g = next;
        g_f.fill(0.0);
        finite_or(&g_g, l + 1, "adjoint of log v")?;
        finite_or(&g_log_q, l + 1, "adjoint of log q")?;
    }
    Ok(g_log_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{check_gradient, Rng};
    use crate::ot_align::cost::{build_cost, CostMetric};
    use crate::ot_align::sinkhorn::sinkhorn;

    fn loss_at(flat: &[f64], r_tea: &ResponseMap, cost: &CostMatrix, cfg: &SinkhornConfig) -> f64 {
        let h = r_tea.h();
        let r = ResponseMap::new(Mat::new(h, flat.len() / h, flat.to_vec()).unwrap()).unwrap();
        let p = spatial_softmax(r_tea);
        let q = spatial_softmax(&r);
        let plan = sinkhorn(&p, &q, cost, cfg).unwrap();
        plan.plan.dot(&cost.cost).unwrap()
    }

    #[test]
    fn unrolled_gradient_matches_central_differences() {
        let cost = build_cost(4, 4, CostMetric::L2sq);
        for log_domain in [false, true] {
            let cfg = SinkhornConfig::fixed(0.05, 50, log_domain);
            for seed in 0..6 {
                let mut rng = Rng::new(seed);
                let r_stu = ResponseMap::new(rng.uniform_mat(4, 4, -1.0, 1.0)).unwrap();
                let r_tea = ResponseMap::new(rng.uniform_mat(4, 4, -1.0, 1.0)).unwrap();
                let g = saot_backward(&r_stu, &r_tea, &cost, &cfg).unwrap();
                let err = check_gradient(
                    |x| loss_at(x, &r_tea, &cost, &cfg),
                    g.grad.as_slice(),
                    r_stu.values.as_slice(),
                    1e-5,
                )
                .unwrap();
                assert!(err < 1e-4, "log {log_domain} seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn domains_give_same_gradient() {
        let cost = build_cost(5, 5, CostMetric::L2sq);
        let mut rng = Rng::new(4);
        let r_stu = ResponseMap::new(rng.uniform_mat(5, 5, -2.0, 2.0)).unwrap();
        let r_tea = ResponseMap::new(rng.uniform_mat(5, 5, -2.0, 2.0)).unwrap();
        let a = saot_backward(&r_stu, &r_tea, &cost, &SinkhornConfig::fixed(0.5, 40, false)).unwrap();
        let b = saot_backward(&r_stu, &r_tea, &cost, &SinkhornConfig::fixed(0.5, 40, true)).unwrap();
        assert!((a.loss - b.loss).abs() < 1e-10);
        for (x, y) in a.grad.as_slice().iter().zip(b.grad.as_slice()) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn uniform_pair_is_stationary() {
        let cost = build_cost(16, 16, CostMetric::L2sq);
        let r = ResponseMap::new(Mat::zeros(16, 16)).unwrap();
        let g = saot_backward(&r, &r, &cost, &SinkhornConfig::default()).unwrap();
        let mean = g.grad.sum() / 256.0;
        assert!(mean.abs() < 1e-15);
        let max = g.grad.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max < 1e-6, "{max}");
        // finite differences agree on a few cells
        let cfg = SinkhornConfig::default();
        for cell in [0usize, 17, 136, 255] {
            let mut plus = r.values.clone();
            plus.as_mut_slice()[cell] += 1e-5;
            let mut minus = r.values.clone();
            minus.as_mut_slice()[cell] -= 1e-5;
            let fd = (loss_at(plus.as_slice(), &r, &cost, &cfg) - loss_at(minus.as_slice(), &r, &cost, &cfg)) / 2e-5;
            assert!(fd.abs() < 1e-6, "{fd}");
        }
    }

    #[test]
    fn gradient_scales_with_cost_at_fixed_kernel() {
        let cost = build_cost(4, 4, CostMetric::L2sq);
        let mut rng = Rng::new(30);
        let r_stu = ResponseMap::new(rng.uniform_mat(4, 4, -1.0, 1.0)).unwrap();
        let r_tea = ResponseMap::new(rng.uniform_mat(4, 4, -1.0, 1.0)).unwrap();
        let c = 3.0;
        let base = saot_backward(&r_stu, &r_tea, &cost, &SinkhornConfig::fixed(0.2, 30, false)).unwrap();
        let scaled = saot_backward(&r_stu, &r_tea, &cost.scaled(c), &SinkhornConfig::fixed(0.2 * c, 30, false)).unwrap();
        assert!((scaled.loss - c * base.loss).abs() < 1e-10);
        for (a, b) in base.grad.as_slice().iter().zip(scaled.grad.as_slice()) {
            assert!((c * a - b).abs() < 1e-10);
        }
    }
}
