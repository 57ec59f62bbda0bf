//! Bottom-up blade construction: sections, radial distributions, placement,
//! lofting and export.

pub mod airfoil;
pub mod blade;
pub mod distributions;
pub mod export;

pub use airfoil::AirfoilSection;
pub use blade::{
    loft_blade, pitch_angle, place_section, replicate_propeller, BladeGeometry, SectionPlacement, SectionSource,
};
pub use distributions::{BaselineTable, RadialDistributions};
pub use export::{export_surface, SurfaceFormat};
