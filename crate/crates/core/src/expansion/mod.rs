//! Single-axis expansion operators, the cost-matched knob solver, greedy
//! forward expansion and backward contraction.

mod axis;
mod contract;
mod search;
mod settings;
mod solver;
mod trajectory;

pub use axis::{apply_axis, knob_limit, TEMPORAL_STRIDE_STEP};
pub use contract::{backward_contract, select_instance, Contraction, Regime, Selection, SelectionSource};
pub use search::{candidate_axes, forward_expand, forward_expand_with_hook, ExpansionHook, NoopHook};
pub use settings::{ExpansionSettings, DEFAULT_TIE_BREAK, MATCH_TOLERANCE};
pub use solver::{solve_knob, ArchCost, CostModel, KnobSolution, GRID_POINTS};
pub use trajectory::{curve_points, write_curve_csv, Candidate, CurvePoint, ExpansionStep, Trajectory};
