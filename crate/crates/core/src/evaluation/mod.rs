//! Performance coefficients, the blade-element momentum surrogate and the
//! result dataset format.

mod bem;
mod coefficients;
mod dataset;

pub use bem::{
    bem_evaluate, bem_stations, evaluate_designs, solve_stations, BemSettings, BemSolution, BladeStation,
    StationSolution,
};
pub use coefficients::{efficiency, hydrodynamic_coefficients, Coefficients, OperatingPoint, PerformanceOutputs};
pub use dataset::{DataSource, Dataset, OUTPUT_NAMES};
