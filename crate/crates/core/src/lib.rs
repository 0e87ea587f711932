pub mod christoffel;
pub mod classifier2d;
pub mod cli;
pub mod error;
pub mod finsler;
pub mod geodesics;
pub mod linalg;
pub mod polyalg;
pub mod scalar;
pub mod singularity;
pub mod stiffness;
pub mod xray;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/slowness.md")]
    mod slowness {}
    #[doc = include_str!("../../../book/src/classifier.md")]
    mod classifier {}
    #[doc = include_str!("../../../book/src/singularities.md")]
    mod singularities {}
    #[doc = include_str!("../../../book/src/finsler.md")]
    mod finsler {}
    #[doc = include_str!("../../../book/src/geodesics.md")]
    mod geodesics {}
    #[doc = include_str!("../../../book/src/xray.md")]
    mod xray {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
