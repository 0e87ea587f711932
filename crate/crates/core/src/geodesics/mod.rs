//! qP geodesics: fixed-step RK4 integration of `ẍ + 2G(x, ẋ) = 0`, boundary
//! exits, shooting, travel times and radial diagnostics.

mod integrate;
mod radial;
mod shoot;

pub use integrate::{flow, integrate_geodesic, BoundaryExit, GeodesicOptions, GeodesicPath, PathSample};
pub use radial::{herglotz_check, lowest_point_expansion_check, ExpansionFit, ExpansionOptions, HerglotzReport, HERGLOTZ_THRESHOLD};
pub use shoot::{boundary_normal_exp, shoot_between, travel_time_data, ShootingOptions, ShotGeodesic, TravelTimeRow, TravelTimeTable};
