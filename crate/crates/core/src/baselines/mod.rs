//! Comparison protocols: GPSR and TPGF.

pub mod gpsr;
pub mod planar;
pub mod tpgf;

pub use gpsr::{gpsr_forward, gpsr_route, greedy_next, GpsrMode, GpsrStep, PerimeterHeader, StaticRoute};
pub use planar::{planar_neighbors, planarize, PlanarAdjacency, Planarization};
pub use tpgf::{tpgf_explore, tpgf_multipath, tpgf_optimize, Labels, TpgfPathSet};
