//! Exact multivariate polynomial algebra over the rationals.

mod compiled;
mod gcd;
mod poly;
mod resultant;
mod roots;

pub use compiled::CompiledPoly;
pub use gcd::{content_in, gcd, is_squarefree, pseudo_remainder, squarefree_part};
pub use poly::MultiPoly;
pub use resultant::{discriminant, resultant, sylvester_resultant};
pub use roots::{real_roots, RealRoot};
