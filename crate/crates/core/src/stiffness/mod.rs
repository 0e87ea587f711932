//! Stiffness tensors, their Voigt representation, validation, and stiffness
//! tensor fields over a domain.

mod field;
mod io;
mod tensor;
mod voigt;

pub use field::{Domain, FieldKind, RadialProfile, StiffnessField};
pub use io::{parse_field, parse_tensor, tensor_to_toml, AnyTensor};
pub use tensor::{
    canonical_index, canonical_indices, isotropic_parameters, make_isotropic, orbit, validate, RationalTensor,
    StiffnessTensor, ValidationReport,
};
pub use voigt::{voigt_matrix, voigt_pairs, VoigtMatrix};
