//! Training loop, the λ sweep and their file formats.

use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{total_backward, total_loss, AlignmentWeights, LossBreakdown, StudentModel};
use super::scenario::{build_scenario, DistillSetup, Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::numerics::norm2;
use crate::ot_align::{build_cost, exact_transport, spatial_softmax, CostMatrix, CostMetric, ProbabilityGrid, SinkhornConfig};
use crate::temporal_align::TaConfig;
use crate::trackmetrics::{evaluate, BBox, MetricCurves, TrackFrame, TrackSequence};

pub const SWEEP_LAMBDA1: [f64; 6] = [1.0, 3.0, 5.0, 7.0, 10.0, 12.0];
pub const SWEEP_LAMBDA2: [f64; 5] = [1.0, 3.0, 5.0, 7.0, 10.0];

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    /// β1 = 0.9, β2 = 0.999, eps = 1e-8, no weight decay.
    #[default]
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Supplied by the caller, not the config file.
    #[serde(skip)]
    pub seed: u64,
    pub optimizer: Optimizer,
    pub weights: AlignmentWeights,
    pub sinkhorn: SinkhornConfig,
    pub scenario: ScenarioConfig,
    /// Taken from the `ta` config section.
    #[serde(skip)]
    pub ta: TaConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            learning_rate: 0.05,
            seed: 0,
            optimizer: Optimizer::Adam,
            weights: AlignmentWeights::default(),
            sinkhorn: SinkhornConfig::default(),
            scenario: ScenarioConfig::default(),
            ta: TaConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Argument("steps must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Argument(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        self.weights.validate()?;
        self.sinkhorn.validate()?;
        self.ta.validate()?;
        self.scenario.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: LossBreakdown,
    pub grad_norm: f64,
}

/// One record per optimizer step, taken before the update.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<StepRecord>,
}

pub const TRACE_HEADER: [&str; 8] = ["step", "l_total", "l_task", "l_kd", "l_ta", "l_saot", "marginal_err", "grad_norm"];

impl TrainTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for r in &self.records {
            let l = &r.loss;
            w.write_record([
                r.step.to_string(),
                l.total.to_string(),
                l.task.to_string(),
                l.kd.to_string(),
                l.ta.to_string(),
                l.saot.to_string(),
                l.marginal_err.to_string(),
                r.grad_norm.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

enum OptState {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl OptState {
    fn new(kind: Optimizer, n: usize) -> Self {
        match kind {
            Optimizer::Sgd => OptState::Sgd,
            Optimizer::Adam => OptState::Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 },
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        match self {
            OptState::Sgd => params.iter_mut().zip(grad).for_each(|(p, g)| *p -= lr * g),
            OptState::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                for k in 0..params.len() {
                    m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * grad[k];
                    v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
                    params[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillReport {
    pub scenario: Scenario,
    pub steps: usize,
    pub weights: AlignmentWeights,
    /// Exact transport cost between the teacher and student softmax maps,
    /// squared Euclidean distance in grid cells.
    pub initial_wasserstein: f64,
    pub final_wasserstein: f64,
    pub final_wasserstein_ratio: f64,
    pub teacher_argmax: (usize, usize),
    pub student_argmax: (usize, usize),
    pub argmax_match: bool,
    pub final_loss: LossBreakdown,
    pub sr_auc: f64,
    pub pr_at_20: f64,
    pub npr_auc: f64,
}

#[derive(Clone, Debug)]
pub struct DistillRun {
    pub trace: TrainTrace,
    pub report: DistillReport,
    pub setup: DistillSetup,
    pub student: StudentModel,
    pub sequence: TrackSequence,
    pub curves: MetricCurves,
}

fn wasserstein(p: &ProbabilityGrid, student: &StudentModel, metric: &CostMatrix) -> Result<f64> {
    Ok(exact_transport(p, &spatial_softmax(&student.response_logits), metric)?.cost)
}

fn cell(idx: usize, w: usize) -> (usize, usize) {
    (idx / w, idx % w)
}

/// Predicted box: center at the soft-argmax of the student map, size from the task head.
fn track_frame(student: &StudentModel, setup: &DistillSetup, cfg: &ScenarioConfig, pred: &[f64]) -> Result<TrackFrame> {
    let q = spatial_softmax(&student.response_logits);
    let g = q.w();
    let stride = cfg.image_px / cfg.grid as f64;
    let (mut ey, mut ex) = (0.0, 0.0);
    for (i, m) in q.as_slice().iter().enumerate() {
        ey += m * (i / g) as f64;
        ex += m * (i % g) as f64;
    }
    let (cx, cy) = ((ex + 0.5) * stride, (ey + 0.5) * stride);
    let (w, h) = ((pred[2] * cfg.image_px).max(1.0), (pred[3] * cfg.image_px).max(1.0));
    let t = &setup.problem.target_box;
    let (tw, th) = (t[2] * cfg.image_px, t[3] * cfg.image_px);
    Ok(TrackFrame {
        predicted: BBox::new(cx - w / 2.0, cy - h / 2.0, w, h)?,
        truth: BBox::new(t[0] * cfg.image_px - tw / 2.0, t[1] * cfg.image_px - th / 2.0, tw, th)?,
        present: true,
    })
}

fn diverged(step: usize, detail: String) -> Error {
    Error::Divergence { step, last_finite: step.checked_sub(1), detail }
}

pub fn run_distillation(cfg: &TrainConfig, scenario: Scenario) -> Result<DistillRun> {
    cfg.validate()?;
    let setup = build_scenario(&cfg.scenario, &cfg.ta, scenario, cfg.seed)?;
    let problem = &setup.problem;
    let g = cfg.scenario.grid;
    let metric = build_cost(g, g, CostMetric::L2sq);
    let p = spatial_softmax(&problem.teacher.response_map);

    let mut student = setup.initial_student.clone();
    let initial_wasserstein = wasserstein(&p, &student, &metric)?;
    let mut params = student.flatten();
    let mut opt = OptState::new(cfg.optimizer, params.len());
    let mut trace = TrainTrace::default();
    let mut frames = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let out = total_backward(&student, problem, &cfg.weights, &cfg.sinkhorn).map_err(|e| match e {
            Error::Numeric(d) => diverged(step, d),
            other => other,
        })?;
        let grad = out.grad.flatten();
        let grad_norm = norm2(&grad);
        if !out.loss.is_finite() || !grad_norm.is_finite() {
            return Err(diverged(step, format!("non-finite loss or gradient {:?}", out.loss)));
        }
        trace.records.push(StepRecord { step, loss: out.loss, grad_norm });
        let h = student.encoder.forward(&problem.student_seq)?;
        let pred = student.task_head.forward(h.final_state())?;
        frames.push(track_frame(&student, &setup, &cfg.scenario, &pred)?);

        opt.step(&mut params, &grad, cfg.learning_rate);
        if !params.iter().all(|v| v.is_finite()) {
            return Err(diverged(step, "optimizer produced non-finite parameters".into()));
        }
        student.load_flat(&params)?;
    }

    let final_loss = total_loss(&student, problem, &cfg.weights, &cfg.sinkhorn)?;
    if !final_loss.is_finite() {
        return Err(diverged(cfg.steps, format!("non-finite final loss {final_loss:?}")));
    }
    let final_wasserstein = wasserstein(&p, &student, &metric)?;
    let sequence = TrackSequence { frames };
    let curves = evaluate(&sequence)?;
    let teacher_argmax = cell(problem.teacher.response_map.values.argmax(), g);
    let student_argmax = cell(student.response_logits.values.argmax(), g);
    let report = DistillReport {
        scenario,
        steps: cfg.steps,
        weights: cfg.weights,
        initial_wasserstein,
        final_wasserstein,
        final_wasserstein_ratio: final_wasserstein / initial_wasserstein,
        teacher_argmax,
        student_argmax,
        argmax_match: teacher_argmax == student_argmax,
        final_loss,
        sr_auc: curves.sr_auc,
        pr_at_20: curves.pr_at_20,
        npr_auc: curves.npr_auc,
    };
    Ok(DistillRun { trace, report, setup, student, sequence, curves })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub final_loss: LossBreakdown,
    pub wasserstein_ratio: f64,
    pub argmax_match: bool,
}

/// One run per `(λ1, λ2)` cell, λ1 outer. Every cell uses the base seed so
/// cells differ only in their weights.
pub fn ablation_sweep(base: &TrainConfig, scenario: Scenario, lambda1: &[f64], lambda2: &[f64]) -> Result<Vec<SweepRow>> {
    let cells: Vec<(f64, f64)> = lambda1.iter().flat_map(|&a| lambda2.iter().map(move |&b| (a, b))).collect();
    #[cfg(feature = "parallel")]
    let cells = cells.par_iter();
    #[cfg(not(feature = "parallel"))]
    let cells = cells.iter();
    cells
        .map(|&(l1, l2)| {
            let cfg = TrainConfig { weights: AlignmentWeights::new(l1, l2)?, ..base.clone() };
            let run = run_distillation(&cfg, scenario)?;
            Ok(SweepRow {
                lambda1: l1,
                lambda2: l2,
                final_loss: run.report.final_loss,
                wasserstein_ratio: run.report.final_wasserstein_ratio,
                argmax_match: run.report.argmax_match,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 10] = [
    "lambda1", "lambda2", "l_total", "l_task", "l_kd", "l_ta", "l_saot", "marginal_err", "wasserstein_ratio", "argmax_match",
];

pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let l = &r.final_loss;
        w.write_record([
            r.lambda1.to_string(),
            r.lambda2.to_string(),
            l.total.to_string(),
            l.task.to_string(),
            l.kd.to_string(),
            l.ta.to_string(),
            l.saot.to_string(),
            l.marginal_err.to_string(),
            r.wasserstein_ratio.to_string(),
            r.argmax_match.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
