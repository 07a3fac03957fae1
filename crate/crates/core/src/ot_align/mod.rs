//! Spatial alignment by entropic optimal transport between spatial-softmax
//! response distributions on a pixel grid.

pub mod backward;
pub mod cost;
pub mod exact;
pub mod grid;
pub mod sinkhorn;

pub use backward::{saot_backward, saot_grad_log_q, SaotGrad};
pub use cost::{build_cost, build_cost_with, CostMatrix, CostMetric};
pub use exact::{exact_ot, exact_transport, ExactPlan, EXACT_OT_MAX_N};
pub use grid::{kl_divergence, softmax_backward, spatial_softmax, ProbabilityGrid, ResponseMap};
pub use sinkhorn::{round_to_marginals, saot_loss, sinkhorn, SinkhornConfig, TransportPlan};
