//! The combined objective `(L_task + L_KD) + λ1·L_TA + λ2·L_SAOT` and its
//! gradient with respect to every student parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Mat, Rng};
use crate::ot_align::{
    saot_backward, saot_loss, sinkhorn, spatial_softmax, CostMatrix, ResponseMap, SinkhornConfig,
};
use crate::temporal_align::{ta_loss, FeatureSequence, ProjectionParams, TaForward, TemporalEncoder};

pub const BOX_PARAMS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignmentWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for AlignmentWeights {
    fn default() -> Self {
        Self { lambda1: 10.0, lambda2: 3.0 }
    }
}

impl AlignmentWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        let w = Self { lambda1, lambda2 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) || !self.lambda1.is_finite() || !self.lambda2.is_finite() {
            return Err(Error::Argument(format!(
                "alignment weights must be finite and nonnegative, got ({}, {})",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }
}

/// Frozen teacher: its dense feature sequence, response map and encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherSignals {
    pub feature_seq: FeatureSequence,
    pub response_map: ResponseMap,
    pub encoder: TemporalEncoder,
}

/// Box in normalized image units: `[cx, cy, w, h]`.
pub type TargetBox = [f64; BOX_PARAMS];

pub fn validate_target(b: &TargetBox) -> Result<()> {
    if !b.iter().all(|v| v.is_finite()) || !(b[2] > 0.0 && b[3] > 0.0) {
        return Err(Error::Argument(format!("invalid target box {b:?}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentModel {
    pub encoder: TemporalEncoder,
    pub response_logits: ResponseMap,
    /// Maps the final hidden state to `[cx, cy, w, h]`.
    pub task_head: ProjectionParams,
}

impl StudentModel {
    pub fn init(input_dim: usize, hidden_dim: usize, latent_dim: usize, logits: ResponseMap, rng: &mut Rng) -> Self {
        let encoder = TemporalEncoder::init(input_dim, hidden_dim, latent_dim, rng);
        let task_head = ProjectionParams::init(BOX_PARAMS, hidden_dim, rng);
        Self { encoder, response_logits: logits, task_head }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self.encoder.zeros_like(),
            response_logits: ResponseMap {
                values: Mat::zeros(self.response_logits.h(), self.response_logits.w()),
            },
            task_head: ProjectionParams::zeros(self.task_head.out_dim(), self.task_head.in_dim()),
        }
    }

    pub fn num_params(&self) -> usize {
        self.encoder.num_params() + self.response_logits.values.len() + self.task_head.num_params()
    }

    /// Order: encoder, response logits, task head.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.encoder.flatten();
        v.extend_from_slice(self.response_logits.values.as_slice());
        v.extend(self.task_head.flatten());
        v
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!("{} values for {} parameters", flat.len(), self.num_params())));
        }
        let (enc, rest) = flat.split_at(self.encoder.num_params());
        let (logits, head) = rest.split_at(self.response_logits.values.len());
        self.encoder.load_flat(enc)?;
        self.response_logits.values.as_mut_slice().copy_from_slice(logits);
        self.task_head.load_flat(head)
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}

/// Everything the objective needs besides the student itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillProblem {
    pub teacher: TeacherSignals,
    pub student_seq: FeatureSequence,
    pub target_box: TargetBox,
    /// Ground cost for the spatial term.
    pub cost: CostMatrix,
}

impl DistillProblem {
    pub fn check(&self, student: &StudentModel) -> Result<()> {
        validate_target(&self.target_box)?;
        let t = &self.teacher;
        let s = &student.encoder;
        if s.gru.hidden_dim != t.encoder.gru.hidden_dim || s.proj.out_dim() != t.encoder.proj.out_dim() {
            return Err(Error::Shape(format!(
                "student hidden/latent {}/{} vs teacher {}/{}",
                s.gru.hidden_dim,
                s.proj.out_dim(),
                t.encoder.gru.hidden_dim,
                t.encoder.proj.out_dim()
            )));
        }
        let (rs, rt) = (&student.response_logits, &t.response_map);
        if (rs.h(), rs.w()) != (rt.h(), rt.w()) || rs.h() * rs.w() != self.cost.n() {
            return Err(Error::Shape(format!(
                "response maps {}x{} and {}x{} with a cost over {} cells",
                rs.h(),
                rs.w(),
                rt.h(),
                rt.w(),
                self.cost.n()
            )));
        }
        if student.task_head.out_dim() != BOX_PARAMS || student.task_head.in_dim() != s.gru.hidden_dim {
            return Err(Error::Shape("task head must map the hidden state to 4 box parameters".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub task: f64,
    pub kd: f64,
    pub ta: f64,
    pub saot: f64,
    /// Marginal violation of the plan behind `saot`.
    pub marginal_err: f64,
}

impl LossBreakdown {
    fn combine(task: f64, kd: f64, ta: f64, saot: f64, marginal_err: f64, w: &AlignmentWeights) -> Self {
        Self {
            total: (task + kd) + w.lambda1 * ta + w.lambda2 * saot,
            task,
            kd,
            ta,
            saot,
            marginal_err,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.total, self.task, self.kd, self.ta, self.saot].iter().all(|v| v.is_finite())
    }
}

fn task_terms(pred: &[f64], target: &TargetBox) -> (f64, Vec<f64>) {
    let n = BOX_PARAMS as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            if d > 0.0 {
                1.0 / n
            } else if d < 0.0 {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    (loss, grad)
}

fn kd_terms(h_stu: &[f64], h_tea: &[f64]) -> (f64, Vec<f64>) {
    let n = h_stu.len() as f64;
    let loss = h_stu.iter().zip(h_tea).map(|(s, t)| (s - t) * (s - t)).sum::<f64>() / n;
    let grad = h_stu.iter().zip(h_tea).map(|(s, t)| 2.0 * (s - t) / n).collect();
    (loss, grad)
}

pub fn total_loss(
    student: &StudentModel,
    problem: &DistillProblem,
    weights: &AlignmentWeights,
    sinkhorn_cfg: &SinkhornConfig,
) -> Result<LossBreakdown> {
    problem.check(student)?;
    let teacher = &problem.teacher;
    let s = student.encoder.forward(&problem.student_seq)?;
    let t = teacher.encoder.forward(&teacher.feature_seq)?;
    let (task, _) = task_terms(&student.task_head.forward(s.final_state())?, &problem.target_box);
    let (kd, _) = kd_terms(s.final_state(), t.final_state());
    let ta = ta_loss(&t.latent, &s.latent)?;
    let p = spatial_softmax(&teacher.response_map);
    let q = spatial_softmax(&student.response_logits);
    let plan = sinkhorn(&p, &q, &problem.cost, sinkhorn_cfg)?;
    let saot = saot_loss(&plan, &problem.cost)?;
    Ok(LossBreakdown::combine(task, kd, ta, saot, plan.marginal_err, weights))
}

/// Gradient of the weighted objective, shaped like the student.
#[derive(Clone, Debug)]
pub struct StudentGrad {
    pub loss: LossBreakdown,
    pub grad: StudentModel,
}

/// The teacher is only read; it receives no gradient.
pub fn total_backward(
    student: &StudentModel,
    problem: &DistillProblem,
    weights: &AlignmentWeights,
    sinkhorn_cfg: &SinkhornConfig,
) -> Result<StudentGrad> {
    problem.check(student)?;
    let teacher = &problem.teacher;
    let fwd = TaForward::new(&student.encoder, &teacher.encoder, &problem.student_seq, &teacher.feature_seq)?;
    let h_stu = fwd.student.final_state();

    let pred = student.task_head.forward(h_stu)?;
    let (task, d_pred) = task_terms(&pred, &problem.target_box);
    let (task_head, mut d_state) = student.task_head.backward(h_stu, &d_pred)?;
    let (kd, d_kd) = kd_terms(h_stu, fwd.teacher.final_state());
    for (d, k) in d_state.iter_mut().zip(&d_kd) {
        *d += k;
    }
    let encoder = student
        .encoder
        .backward(&fwd.student, &fwd.d_student_latent(weights.lambda1), Some(&d_state))?;

    let saot = saot_backward(&student.response_logits, &teacher.response_map, &problem.cost, sinkhorn_cfg)?;
    let response_logits = ResponseMap {
        values: saot.grad.scale(weights.lambda2),
    };

    Ok(StudentGrad {
        loss: LossBreakdown::combine(task, kd, fwd.loss, saot.loss, saot.plan.marginal_err, weights),
        grad: StudentModel { encoder, response_logits, task_head },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::check_gradient;
    use crate::ot_align::{build_cost, CostMetric};
    use crate::temporal_align::Origin;

    fn seq(rng: &mut Rng, steps: usize, dim: usize, origin: Origin) -> FeatureSequence {
        FeatureSequence::new((0..steps).map(|_| rng.uniform_vec(dim, -1.0, 1.0)).collect(), origin).unwrap()
    }

    fn map(rng: &mut Rng, h: usize, w: usize) -> ResponseMap {
        ResponseMap::new(rng.uniform_mat(h, w, -2.0, 2.0)).unwrap()
    }

    fn tiny(seed: u64) -> (StudentModel, DistillProblem) {
        let mut rng = Rng::new(seed);
        let (input, hidden, latent, g) = (3, 8, 5, 4);
        let teacher = TeacherSignals {
            feature_seq: seq(&mut rng, 4, input, Origin::Teacher),
            response_map: map(&mut rng, g, g),
            encoder: TemporalEncoder::init(input, hidden, latent, &mut rng),
        };
        let logits = map(&mut rng, g, g);
        let student = StudentModel::init(input, hidden, latent, logits, &mut rng);
        let problem = DistillProblem {
            teacher,
            student_seq: seq(&mut rng, 6, input, Origin::Student),
            target_box: [0.4, 0.6, 0.3, 0.2],
            cost: build_cost(g, g, CostMetric::L2sq),
        };
        (student, problem)
    }

    fn cfg() -> SinkhornConfig {
        SinkhornConfig::fixed(0.5, 30, false)
    }

    #[test]
    fn coincident_inputs_leave_only_the_entropic_residual() {
        let (mut student, mut problem) = tiny(1);
        problem.student_seq = problem.teacher.feature_seq.clone();
        student.encoder = problem.teacher.encoder.clone();
        student.response_logits = problem.teacher.response_map.clone();
        student.task_head = ProjectionParams::zeros(4, 8);
        student.task_head.bias = problem.target_box.to_vec();
        let w = AlignmentWeights::new(1.0, 1.0).unwrap();
        let l = total_loss(&student, &problem, &w, &cfg()).unwrap();
        assert_eq!((l.task, l.kd, l.ta), (0.0, 0.0, 0.0));
        assert!(l.saot > 0.0);
        assert_eq!(l.total, l.saot);
    }

    #[test]
    fn zero_weights_reduce_to_task_plus_kd() {
        let (student, problem) = tiny(2);
        let l = total_loss(&student, &problem, &AlignmentWeights::new(0.0, 0.0).unwrap(), &cfg()).unwrap();
        assert_eq!(l.total, l.task + l.kd);
    }

    #[test]
    fn breakdown_resums() {
        for seed in 0..10 {
            let (student, problem) = tiny(seed);
            let mut rng = Rng::derive(seed, 7);
            let w = AlignmentWeights::new(rng.uniform(0.0, 12.0), rng.uniform(0.0, 12.0)).unwrap();
            let l = total_loss(&student, &problem, &w, &cfg()).unwrap();
            let resum = l.task + l.kd + w.lambda1 * l.ta + w.lambda2 * l.saot;
            assert!((resum - l.total).abs() <= 1e-12 * l.total.abs().max(1.0));
            let b = total_backward(&student, &problem, &w, &cfg()).unwrap();
            assert_eq!(b.loss, l);
        }
    }

    #[test]
    fn full_gradient_matches_central_differences() {
        for seed in 0..10 {
            let (student, problem) = tiny(100 + seed);
            let w = AlignmentWeights::new(1.5, 2.0).unwrap();
            let g = total_backward(&student, &problem, &w, &cfg()).unwrap();
            let x = student.flatten();
            let err = check_gradient(
                |v| {
                    let mut s = student.clone();
                    s.load_flat(v).unwrap();
                    total_loss(&s, &problem, &w, &cfg()).unwrap().total
                },
                &g.grad.flatten(),
                &x,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn weights_scale_their_components() {
        let (student, problem) = tiny(5);
        let a = total_backward(&student, &problem, &AlignmentWeights::new(2.0, 3.0).unwrap(), &cfg()).unwrap();
        let b = total_backward(&student, &problem, &AlignmentWeights::new(2.0, 6.0).unwrap(), &cfg()).unwrap();
        assert_eq!(b.grad.response_logits.values, a.grad.response_logits.values.scale(2.0));
        assert_eq!(b.grad.encoder, a.grad.encoder);

        let zero = total_backward(&student, &problem, &AlignmentWeights::new(0.0, 0.0).unwrap(), &cfg()).unwrap();
        assert!(zero.grad.response_logits.values.as_slice().iter().all(|&v| v == 0.0));
        assert!(zero.grad.encoder.proj.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn teacher_is_untouched() {
        let (student, problem) = tiny(9);
        let before = problem.clone();
        total_backward(&student, &problem, &AlignmentWeights::default(), &cfg()).unwrap();
        assert_eq!(problem, before);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let (student, mut problem) = tiny(3);
        problem.cost = build_cost(3, 3, CostMetric::L2sq);
        assert!(matches!(total_loss(&student, &problem, &AlignmentWeights::default(), &cfg()), Err(Error::Shape(_))));
        let (student, mut problem) = tiny(3);
        problem.target_box = [0.5, 0.5, -1.0, 0.2];
        assert!(matches!(total_loss(&student, &problem, &AlignmentWeights::default(), &cfg()), Err(Error::Argument(_))));
    }
}
