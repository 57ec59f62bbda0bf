//! Response surfaces on the active variable, constrained optimization and
//! sensitivity classification.

mod optimize;
mod sensitivity;
mod surface;

pub use optimize::{
    back_map, constrained_optimize, deformed_curves_csv, grid_minimize, BackMapped, Constraint, GridOptimum,
    OptimizationReport, Relation, BACKMAP_WARNING, DEFAULT_GRID,
};
pub use sensitivity::{sensitivity_table, Sensitivity, SensitivityTable, Thresholds};
pub use surface::{horner, split_indices, FitMetrics, Prediction, ResponseSurface, TRAIN_FRACTION};
