//! Discrete energy, film regions, manifold distance, convergence studies
//! and scheme comparisons.

mod distance;
mod energy;
mod region;
mod study;

pub use distance::{intersection_area, manifold_distance, regions_distance, winding_inside};
pub use energy::{curve_energy, discrete_energy, single_curve_energy};
pub use region::{island_regions, network_regions, region_polygon, single_region, NetworkRegions, RegionPolygon};
pub use study::{
    compare_schemes, convergence_study, states_at, study_levels, ConvergenceStudy, ErrorRow, ErrorTable,
    SchemeComparison, SchemeSummary,
};
