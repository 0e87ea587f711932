//! Christoffel matrices, slowness polynomials, eigenstructure and qP-gap
//! diagnostics.

mod gap;
mod matrix;
mod sphere;

pub use gap::{degeneracy_scan, gap_csv, gap_sweep, qp_gap_margin, qp_gap_margin_field, Degeneracy, GapReport, GapSample};
pub use matrix::{christoffel_matrix, eigen_sorted, momentum_vars, slowness_polynomial, slowness_value, symbolic_christoffel, ChristoffelMatrix};
pub use sphere::{circle_direction, direction_from_angles, sphere_direction, Direction, SphereSampling, DEFAULT_CIRCLE_SAMPLES, DEFAULT_SPHERE_SAMPLES};
