//! Scheme and variety smoothness of slowness surfaces, degeneracy-point
//! consistency, and the near-isotropic separateness certificate.

mod report;
mod search;

pub use report::*;
pub use search::{scheme_singular_points, SingularPoint, SingularSearch, RESIDUAL_TOL};
