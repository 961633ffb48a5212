//! Expansion factors and deterministic instantiation of architecture specs.

mod config;
mod factors;
mod instantiate;
mod presets;
mod rounding;
mod spec;

pub use config::{ArchConfig, Category, CountConvention};
pub use factors::{Axis, ExpansionFactors};
pub use instantiate::{
    conv_out_size, instantiate, resolve_input_geometry, BASE_RESOLUTION, BASE_STAGE_DEPTHS,
    BASE_STAGE_WIDTHS, MIN_RES5_SIZE, STAGE_NAMES,
};
pub use presets::{find_preset, preset, presets, Preset, PRESET_NAMES};
pub use rounding::{nearest_int, nearest_multiple, round_depth, round_width};
pub use spec::{
    block_id, validate, ArchFlags, ArchSpec, BlockRef, BlockSpec, Conv1Spec, HeadSpec,
    InputGeometry, StageSpec,
};
