//! Shape propagation and analytical multiply-add / parameter counting.

mod count;
mod inference;
mod shapes;

pub use count::{count_flops, count_params, layer_costs, report, ComplexityReport, Counts, LayerCost, ScopeCounts};
pub use inference::{inference_cost, InferenceCost, InferenceStrategy, TEST_SCALE_BASE};
pub use shapes::{propagate_shapes, ShapeEntry, ShapeTrace};
