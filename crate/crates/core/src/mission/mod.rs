//! Mission model: scenario description, region geometry, formula
//! compilation, and the payload automaton.

mod compile;
mod payload;
mod scenario;

pub use compile::{
    compile_formula, compile_mission, in_box, MissionFormula, CHANNEL_PAYLOAD, CHANNEL_POSITION,
    CHANNEL_VELOCITY,
};
pub use payload::{
    achieved_holds, derive_payload, derive_payload_from_positions, payload_channel,
    signal_from_parts, signal_from_trajectory,
};
pub use scenario::{
    behind_region, quantize_heading, ApproachDirection, Box3, Operator, PrefCombinator, Scenario,
    ScenarioError, DEFAULT_BEHIND_DEPTH, DEFAULT_BOX_SIZE, DEFAULT_HANDOVER_OFFSET,
    DEFAULT_PREF_OFFSET,
};
