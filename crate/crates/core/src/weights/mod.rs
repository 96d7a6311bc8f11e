//! Weight systems, sampling grids and the sup-growth classifier.

pub mod grid;
pub mod growth;
pub mod system;

pub use grid::{Grid, LnTable, Schedule};
pub use growth::{divergence_persists, Classifier, GrowthTag, GrowthVerdict, Thresholds, WitnessPoint};
pub use system::{
    check_cond_mult, power_system, validate_weight_system, Argument, CondMultReport, WeightError, WeightKind,
    WeightSystem, WeightTable,
};
