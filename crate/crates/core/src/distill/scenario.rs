//! Synthetic teacher/student setups. The teacher sees a dense, smooth feature
//! sequence and has a sharp response peak; the student sees event-like
//! temporal differences of the same signal and starts from a response map
//! that disagrees with the teacher's.

use serde::{Deserialize, Serialize};

use super::objective::{DistillProblem, StudentModel, TargetBox, TeacherSignals};
use crate::error::{Error, Result};
use crate::numerics::{Mat, Rng};
use crate::ot_align::{build_cost_with, CostMetric, ResponseMap};
use crate::temporal_align::{FeatureSequence, Origin, TaConfig, TemporalEncoder};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Student peak displaced `shift` cells to the right of the teacher's.
    #[default]
    Shifted,
    /// Shifted, and the student map is twice as wide and half as tall.
    Blurred,
    /// Shifted, and only bursts covering `keep_ratio` of the student frames carry data.
    Sparse,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Shifted => "shifted",
            Scenario::Blurred => "blurred",
            Scenario::Sparse => "sparse",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Response maps are `grid × grid`.
    pub grid: usize,
    /// Side of the square image the grid covers, for box metrics.
    pub image_px: f64,
    pub feature_dim: usize,
    pub teacher_steps: usize,
    pub student_steps: usize,
    /// Displacement of the student peak, in grid cells.
    pub shift: usize,
    pub keep_ratio: f64,
    pub peak_logit: f64,
    pub peak_sigma: f64,
    pub cost_metric: CostMetric,
    /// Divide grid coordinates by `grid - 1` in the spatial cost.
    pub normalized_coords: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid: 16,
            image_px: 256.0,
            feature_dim: 16,
            teacher_steps: 12,
            student_steps: 48,
            shift: 4,
            keep_ratio: 0.25,
            peak_logit: 12.0,
            peak_sigma: 1.5,
            cost_metric: CostMetric::L2sq,
            normalized_coords: true,
        }
    }
}

const BURST_LEN: usize = 3;
const EVENT_GAIN: f64 = 4.0;

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.grid, self.feature_dim, self.teacher_steps, self.student_steps];
        if positive.contains(&0) {
            return Err(Error::Argument("grid, dimensions and sequence lengths must be positive".into()));
        }
        if self.shift + 2 > self.grid {
            return Err(Error::Argument(format!("shift {} does not fit a {} grid", self.shift, self.grid)));
        }
        if !(self.keep_ratio > 0.0 && self.keep_ratio <= 1.0) {
            return Err(Error::Argument(format!("keep_ratio must lie in (0, 1], got {}", self.keep_ratio)));
        }
        if !(self.peak_sigma > 0.0 && self.image_px > 0.0) || !self.peak_logit.is_finite() {
            return Err(Error::Argument("peak_sigma and image_px must be positive, peak_logit finite".into()));
        }
        Ok(())
    }

    /// Teacher peak cell `(row, col)`; the student starts `shift` columns right of it.
    pub fn teacher_peak(&self) -> (usize, usize) {
        (self.grid / 2 - 1, (self.grid - self.shift - 1) / 2)
    }
}

fn bump(g: usize, center: (usize, usize), amplitude: f64, sigma: f64) -> Result<ResponseMap> {
    let (cr, cc) = (center.0 as f64, center.1 as f64);
    ResponseMap::new(Mat::from_fn(g, g, |r, c| {
        let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
        amplitude * (-d2 / (2.0 * sigma * sigma)).exp()
    }))
}

struct Signal {
    freq: Vec<f64>,
    phase: Vec<f64>,
}

impl Signal {
    fn new(dim: usize, rng: &mut Rng) -> Self {
        Self {
            freq: rng.uniform_vec(dim, 0.5, 2.0),
            phase: rng.uniform_vec(dim, 0.0, std::f64::consts::TAU),
        }
    }

    fn at(&self, t: f64) -> Vec<f64> {
        self.freq
            .iter()
            .zip(&self.phase)
            .map(|(f, p)| (std::f64::consts::TAU * f * t + p).sin())
            .collect()
    }
}

/// Frame indices kept in the sparse scenario: bursts of consecutive frames.
fn burst_mask(steps: usize, keep_ratio: f64, rng: &mut Rng) -> Vec<bool> {
    let target = ((steps as f64 * keep_ratio).round() as usize).clamp(1, steps);
    let mut keep = vec![false; steps];
    let mut kept = 0;
    while kept < target {
        let start = rng.below(steps);
        for k in start..(start + BURST_LEN).min(steps) {
            if kept < target && !keep[k] {
                keep[k] = true;
                kept += 1;
            }
        }
    }
    keep
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillSetup {
    pub scenario: Scenario,
    pub problem: DistillProblem,
    pub initial_student: StudentModel,
}

pub fn build_scenario(cfg: &ScenarioConfig, ta: &TaConfig, scenario: Scenario, seed: u64) -> Result<DistillSetup> {
    cfg.validate()?;
    ta.validate()?;
    let g = cfg.grid;
    let signal = Signal::new(cfg.feature_dim, &mut Rng::derive(seed, 1));

    let tea_frames = (0..cfg.teacher_steps)
        .map(|k| signal.at((k as f64 + 0.5) / cfg.teacher_steps as f64))
        .collect();
    let dt = 1.0 / cfg.student_steps as f64;
    let mut stu_frames: Vec<Vec<f64>> = (0..cfg.student_steps)
        .map(|k| {
            let t = (k as f64 + 0.5) * dt;
            let (now, before) = (signal.at(t), signal.at(t - dt));
            now.iter().zip(&before).map(|(a, b)| EVENT_GAIN * (a - b)).collect()
        })
        .collect();
    if scenario == Scenario::Sparse {
        let keep = burst_mask(cfg.student_steps, cfg.keep_ratio, &mut Rng::derive(seed, 4));
        for (frame, k) in stu_frames.iter_mut().zip(keep) {
            if !k {
                frame.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }

    let peak = cfg.teacher_peak();
    let teacher = TeacherSignals {
        feature_seq: FeatureSequence::new(tea_frames, Origin::Teacher)?,
        response_map: bump(g, peak, cfg.peak_logit, cfg.peak_sigma)?,
        encoder: TemporalEncoder::init(cfg.feature_dim, ta.hidden_dim, ta.latent_dim, &mut Rng::derive(seed, 2)),
    };
    let stu_peak = (peak.0, peak.1 + cfg.shift);
    let logits = match scenario {
        Scenario::Blurred => bump(g, stu_peak, cfg.peak_logit / 2.0, cfg.peak_sigma * 2.0)?,
        _ => bump(g, stu_peak, cfg.peak_logit, cfg.peak_sigma)?,
    };
    let initial_student = StudentModel::init(
        cfg.feature_dim,
        ta.hidden_dim,
        ta.latent_dim,
        logits,
        &mut Rng::derive(seed, 3),
    );
    let gf = g as f64;
    let target_box: TargetBox = [(peak.1 as f64 + 0.5) / gf, (peak.0 as f64 + 0.5) / gf, 3.0 / gf, 4.0 / gf];
    let problem = DistillProblem {
        teacher,
        student_seq: FeatureSequence::new(stu_frames, Origin::Student)?,
        target_box,
        cost: build_cost_with(g, g, cfg.cost_metric, cfg.normalized_coords),
    };
    problem.check(&initial_student)?;
    Ok(DistillSetup { scenario, problem, initial_student })
}
