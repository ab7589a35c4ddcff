//! Charts, metrics, geodesic integration and curve comparison.

mod chart;
mod curve;
mod geodesic;
mod metric;
pub mod ode;

pub use chart::{Chart, ChartConfig};
pub use curve::{arclength_reparam, curve_distance, symmetric_curve_distance, Curve, ReparamOptions};
pub use geodesic::{
    geodesic_rhs, integrate_geodesic, integrate_geodesic_length, GeodesicOptions, PhasePoint, Trajectory,
};
pub use metric::{Christoffel, MetricAt, MetricField};
