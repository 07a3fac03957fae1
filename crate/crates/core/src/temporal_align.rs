//! Temporal alignment: a GRU encodes each feature sequence into its final
//! hidden state, an affine head projects it into a shared latent space, and
//! the loss is the squared distance between the two latents.
//!
//! Gate convention: `h = (1 - z) ⊙ h_prev + z ⊙ h̃`, so `z → 1` replaces the
//! state with the candidate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, sigmoid, Mat, Rng};

pub const DEFAULT_LATENT_DIM: usize = 768;
pub const DEFAULT_HIDDEN_DIM: usize = 64;

/// Encoder sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaConfig {
    pub hidden_dim: usize,
    pub latent_dim: usize,
}

impl Default for TaConfig {
    fn default() -> Self {
        Self {
            hidden_dim: DEFAULT_HIDDEN_DIM,
            latent_dim: DEFAULT_LATENT_DIM,
        }
    }
}

impl TaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.latent_dim == 0 {
            return Err(Error::Argument("hidden_dim and latent_dim must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub wz: Mat,
    pub wr: Mat,
    pub wh: Mat,
    pub uz: Mat,
    pub ur: Mat,
    pub uh: Mat,
    pub bz: Vec<f64>,
    pub br: Vec<f64>,
    pub bh: Vec<f64>,
}

impl GruParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = Mat::zeros(hidden_dim, input_dim);
        let u = Mat::zeros(hidden_dim, hidden_dim);
        Self {
            input_dim,
            hidden_dim,
            wz: w.clone(),
            wr: w.clone(),
            wh: w,
            uz: u.clone(),
            ur: u.clone(),
            uh: u,
            bz: vec![0.0; hidden_dim],
            br: vec![0.0; hidden_dim],
            bh: vec![0.0; hidden_dim],
        }
    }

    /// Every weight and bias uniform in `±1/√hidden_dim`.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let a = 1.0 / (hidden_dim as f64).sqrt();
        let mut flat = p.flatten();
        for v in flat.iter_mut() {
            *v = rng.uniform(-a, a);
        }
        p.load_flat(&flat).expect("length matches by construction");
        p
    }

    pub fn num_params(&self) -> usize {
        3 * self.hidden_dim * (self.input_dim + self.hidden_dim + 1)
    }

    /// Order: wz, wr, wh, uz, ur, uh, bz, br, bh.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for m in [&self.wz, &self.wr, &self.wh, &self.uz, &self.ur, &self.uh] {
            out.extend_from_slice(m.as_slice());
        }
        for b in [&self.bz, &self.br, &self.bh] {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} values for {} GRU parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut rest = flat;
        for m in [
            &mut self.wz,
            &mut self.wr,
            &mut self.wh,
            &mut self.uz,
            &mut self.ur,
            &mut self.uh,
        ] {
            let (head, tail) = rest.split_at(m.len());
            m.as_mut_slice().copy_from_slice(head);
            rest = tail;
        }
        for b in [&mut self.bz, &mut self.br, &mut self.bh] {
            let (head, tail) = rest.split_at(b.len());
            b.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let (h, i) = (self.hidden_dim, self.input_dim);
        let ok = [&self.wz, &self.wr, &self.wh].iter().all(|m| m.shape() == (h, i))
            && [&self.uz, &self.ur, &self.uh].iter().all(|m| m.shape() == (h, h))
            && [&self.bz, &self.br, &self.bh].iter().all(|b| b.len() == h);
        if !ok {
            return Err(Error::Shape(format!("inconsistent GRU blocks for input {i}, hidden {h}")));
        }
        if !self.flatten().iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite GRU parameter".into()));
        }
        Ok(())
    }
}

/// Intermediates of one recurrence step, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub candidate: Vec<f64>,
    pub h: Vec<f64>,
}

fn affine3(w: &Mat, x: &[f64], u: &Mat, h: &[f64], b: &[f64]) -> Vec<f64> {
    (0..b.len())
        .map(|k| dot(w.row(k), x) + dot(u.row(k), h) + b[k])
        .collect()
}

fn step_cached(p: &GruParams, x: &[f64], h_prev: &[f64]) -> Result<StepCache> {
    if x.len() != p.input_dim || h_prev.len() != p.hidden_dim {
        return Err(Error::Shape(format!(
            "GRU({}, {}) fed input {} and state {}",
            p.input_dim,
            p.hidden_dim,
            x.len(),
            h_prev.len()
        )));
    }
    let z: Vec<f64> = affine3(&p.wz, x, &p.uz, h_prev, &p.bz).into_iter().map(sigmoid).collect();
    let r: Vec<f64> = affine3(&p.wr, x, &p.ur, h_prev, &p.br).into_iter().map(sigmoid).collect();
    let gated: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let candidate: Vec<f64> = affine3(&p.wh, x, &p.uh, &gated, &p.bh)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let h = (0..p.hidden_dim)
        .map(|k| (1.0 - z[k]) * h_prev[k] + z[k] * candidate[k])
        .collect();
    Ok(StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        z,
        r,
        candidate,
        h,
    })
}

pub fn gru_step(params: &GruParams, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    Ok(step_cached(params, x, h_prev)?.h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Teacher,
    Student,
}

/// `T` frames of dimension `L`. Teacher and student lengths may differ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    pub dim: usize,
    pub frames: Vec<Vec<f64>>,
    pub origin: Origin,
}

impl FeatureSequence {
    pub fn new(frames: Vec<Vec<f64>>, origin: Origin) -> Result<Self> {
        let dim = frames.first().map_or(0, Vec::len);
        if frames.iter().any(|f| f.len() != dim) {
            return Err(Error::Shape("frames of unequal dimension".into()));
        }
        Ok(Self { dim, frames, origin })
    }

    pub fn steps(&self) -> usize {
        self.frames.len()
    }
}

/// Result of folding the GRU over a sequence.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub steps: Vec<StepCache>,
}

impl Encoding {
    pub fn final_state(&self) -> &[f64] {
        &self.steps.last().expect("encodings are non-empty").h
    }
}

/// Folds [`gru_step`] over all frames from `h0` (zero when `None`).
pub fn encode_sequence(params: &GruParams, seq: &FeatureSequence, h0: Option<&[f64]>) -> Result<Encoding> {
    if seq.frames.is_empty() {
        return Err(Error::Argument("cannot encode an empty sequence".into()));
    }
    if seq.dim != params.input_dim {
        return Err(Error::Shape(format!(
            "sequence dimension {} but GRU expects {}",
            seq.dim, params.input_dim
        )));
    }
    let zero = vec![0.0; params.hidden_dim];
    let mut h = h0.unwrap_or(&zero).to_vec();
    let mut steps = Vec::with_capacity(seq.steps());
    for x in &seq.frames {
        let c = step_cached(params, x, &h)?;
        h.clone_from(&c.h);
        steps.push(c);
    }
    Ok(Encoding { steps })
}

/// Backpropagation through time from `d_final = ∂L/∂h^T`.
/// Returns parameter gradients and `∂L/∂h0`.
pub fn gru_backward(params: &GruParams, enc: &Encoding, d_final: &[f64]) -> Result<(GruParams, Vec<f64>)> {
    let n = params.hidden_dim;
    if d_final.len() != n {
        return Err(Error::Shape(format!("state gradient of length {} for hidden {n}", d_final.len())));
    }
    let mut g = GruParams::zeros(params.input_dim, n);
    let mut dh = d_final.to_vec();
    for c in enc.steps.iter().rev() {
        let mut dh_prev: Vec<f64> = (0..n).map(|k| dh[k] * (1.0 - c.z[k])).collect();
        let da_z: Vec<f64> = (0..n)
            .map(|k| dh[k] * (c.candidate[k] - c.h_prev[k]) * c.z[k] * (1.0 - c.z[k]))
            .collect();
        let da_h: Vec<f64> = (0..n)
            .map(|k| dh[k] * c.z[k] * (1.0 - c.candidate[k] * c.candidate[k]))
            .collect();
        let gated: Vec<f64> = c.r.iter().zip(&c.h_prev).map(|(a, b)| a * b).collect();
        let d_gated = params.uh.matvec_t(&da_h)?;
        let da_r: Vec<f64> = (0..n)
            .map(|k| d_gated[k] * c.h_prev[k] * c.r[k] * (1.0 - c.r[k]))
            .collect();
        for k in 0..n {
            dh_prev[k] += d_gated[k] * c.r[k];
        }
        let via_z = params.uz.matvec_t(&da_z)?;
        let via_r = params.ur.matvec_t(&da_r)?;
        for k in 0..n {
            dh_prev[k] += via_z[k] + via_r[k];
        }

        outer_acc(&mut g.wz, &da_z, &c.x);
        outer_acc(&mut g.wr, &da_r, &c.x);
        outer_acc(&mut g.wh, &da_h, &c.x);
        outer_acc(&mut g.uz, &da_z, &c.h_prev);
        outer_acc(&mut g.ur, &da_r, &c.h_prev);
        outer_acc(&mut g.uh, &da_h, &gated);
        for k in 0..n {
            g.bz[k] += da_z[k];
            g.br[k] += da_r[k];
            g.bh[k] += da_h[k];
        }
        dh = dh_prev;
    }
    Ok((g, dh))
}

fn outer_acc(m: &mut Mat, a: &[f64], b: &[f64]) {
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            m[(i, j)] += ai * bj;
        }
    }
}

/// Single affine head `F = W h + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

impl ProjectionParams {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            weight: Mat::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn init(out_dim: usize, in_dim: usize, rng: &mut Rng) -> Self {
        let a = 1.0 / (in_dim as f64).sqrt();
        Self {
            weight: rng.uniform_mat(out_dim, in_dim, -a, a),
            bias: rng.uniform_vec(out_dim, -a, a),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.weight.as_slice().to_vec();
        v.extend_from_slice(&self.bias);
        v
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} values for {} projection parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let (w, b) = flat.split_at(self.weight.len());
        self.weight.as_mut_slice().copy_from_slice(w);
        self.bias.copy_from_slice(b);
        Ok(())
    }

    pub fn forward(&self, h: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.weight.matvec(h)?;
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b;
        }
        Ok(out)
    }

    /// Gradients of the head and `∂L/∂h` given `∂L/∂F`.
    pub fn backward(&self, h: &[f64], d_out: &[f64]) -> Result<(ProjectionParams, Vec<f64>)> {
        let mut g = ProjectionParams::zeros(self.out_dim(), self.in_dim());
        outer_acc(&mut g.weight, d_out, h);
        g.bias.copy_from_slice(d_out);
        Ok((g, self.weight.matvec_t(d_out)?))
    }
}

/// `‖a - b‖²`, summed (no averaging).
pub fn ta_loss(tea_latent: &[f64], stu_latent: &[f64]) -> Result<f64> {
    if tea_latent.len() != stu_latent.len() {
        return Err(Error::Shape(format!(
            "latents of dimension {} and {}",
            tea_latent.len(),
            stu_latent.len()
        )));
    }
    Ok(tea_latent
        .iter()
        .zip(stu_latent)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// GRU encoder plus projection head for one side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalEncoder {
    pub gru: GruParams,
    pub proj: ProjectionParams,
}

impl TemporalEncoder {
    pub fn init(input_dim: usize, hidden_dim: usize, latent_dim: usize, rng: &mut Rng) -> Self {
        let gru = GruParams::init(input_dim, hidden_dim, rng);
        let proj = ProjectionParams::init(latent_dim, hidden_dim, rng);
        Self { gru, proj }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            gru: GruParams::zeros(self.gru.input_dim, self.gru.hidden_dim),
            proj: ProjectionParams::zeros(self.proj.out_dim(), self.proj.in_dim()),
        }
    }

    pub fn num_params(&self) -> usize {
        self.gru.num_params() + self.proj.num_params()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.gru.flatten();
        v.extend(self.proj.flatten());
        v
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!("{} values for {} parameters", flat.len(), self.num_params())));
        }
        let (g, p) = flat.split_at(self.gru.num_params());
        self.gru.load_flat(g)?;
        self.proj.load_flat(p)
    }

    pub fn forward(&self, seq: &FeatureSequence) -> Result<EncoderPass> {
        let encoding = encode_sequence(&self.gru, seq, None)?;
        let latent = self.proj.forward(encoding.final_state())?;
        Ok(EncoderPass { encoding, latent })
    }

    /// Gradients given `∂L/∂F` and an extra `∂L/∂h^T` from other heads.
    pub fn backward(&self, pass: &EncoderPass, d_latent: &[f64], d_state_extra: Option<&[f64]>) -> Result<TemporalEncoder> {
        let (proj, mut d_state) = self.proj.backward(pass.encoding.final_state(), d_latent)?;
        if let Some(extra) = d_state_extra {
            for (d, e) in d_state.iter_mut().zip(extra) {
                *d += e;
            }
        }
        let (gru, _) = gru_backward(&self.gru, &pass.encoding, &d_state)?;
        Ok(TemporalEncoder { gru, proj })
    }
}

#[derive(Clone, Debug)]
pub struct EncoderPass {
    pub encoding: Encoding,
    pub latent: Vec<f64>,
}

impl EncoderPass {
    pub fn final_state(&self) -> &[f64] {
        self.encoding.final_state()
    }
}

/// Loss and gradients of the temporal alignment term.
#[derive(Clone, Debug)]
pub struct TaGrad {
    pub loss: f64,
    pub student: TemporalEncoder,
    /// Present only when the teacher is unfrozen.
    pub teacher: Option<TemporalEncoder>,
}

/// Forward pass over both branches, holding what the backward pass needs.
#[derive(Clone, Debug)]
pub struct TaForward {
    pub student: EncoderPass,
    pub teacher: EncoderPass,
    pub loss: f64,
}

impl TaForward {
    pub fn new(
        student: &TemporalEncoder,
        teacher: &TemporalEncoder,
        stu_seq: &FeatureSequence,
        tea_seq: &FeatureSequence,
    ) -> Result<Self> {
        let s = student.forward(stu_seq)?;
        let t = teacher.forward(tea_seq)?;
        let loss = ta_loss(&t.latent, &s.latent)?;
        Ok(Self { student: s, teacher: t, loss })
    }

    /// `∂L/∂F_stu = 2 (F_stu - F_tea)`, scaled by `weight`.
    pub fn d_student_latent(&self, weight: f64) -> Vec<f64> {
        self.student
            .latent
            .iter()
            .zip(&self.teacher.latent)
            .map(|(s, t)| 2.0 * weight * (s - t))
            .collect()
    }

    pub fn backward(
        &self,
        student: &TemporalEncoder,
        teacher: &TemporalEncoder,
        unfreeze_teacher: bool,
    ) -> Result<TaGrad> {
        let d_stu = self.d_student_latent(1.0);
        let student_grad = student.backward(&self.student, &d_stu, None)?;
        let teacher_grad = if unfreeze_teacher {
            let d_tea: Vec<f64> = d_stu.iter().map(|v| -v).collect();
            Some(teacher.backward(&self.teacher, &d_tea, None)?)
        } else {
            None
        };
        Ok(TaGrad {
            loss: self.loss,
            student: student_grad,
            teacher: teacher_grad,
        })
    }
}

/// Forward and backward of the alignment loss in one call.
pub fn ta_backward(
    student: &TemporalEncoder,
    teacher: &TemporalEncoder,
    stu_seq: &FeatureSequence,
    tea_seq: &FeatureSequence,
    unfreeze_teacher: bool,
) -> Result<TaGrad> {
    TaForward::new(student, teacher, stu_seq, tea_seq)?.backward(student, teacher, unfreeze_teacher)
}
