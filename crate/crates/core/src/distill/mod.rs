//! Synthetic teacher-to-student distillation with task, feature, temporal
//! and spatial alignment terms.

pub mod objective;
pub mod scenario;
pub mod train;

pub use objective::{
    total_backward, total_loss, AlignmentWeights, DistillProblem, LossBreakdown, StudentGrad, StudentModel, TargetBox,
    TeacherSignals,
};
pub use scenario::{build_scenario, DistillSetup, Scenario, ScenarioConfig};
pub use train::{
    ablation_sweep, run_distillation, write_sweep, DistillReport, DistillRun, Optimizer, StepRecord, SweepRow,
    TrainConfig, TrainTrace, SWEEP_LAMBDA1, SWEEP_LAMBDA2,
};
