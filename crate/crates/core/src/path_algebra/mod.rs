//! Discrete paths, two-parameter tensors and their Hölder-type norms.

mod chen;
mod grid;
mod norms;
mod tensor;

pub use chen::{
    chen_defect, chen_defect_relative, chen_defect_table, chen_defect_tensor, triple_indices, PairTable,
    FULL_TRIPLE_LIMIT,
};
pub use grid::{shift_path, shift_path_onto, steps_in, Grid, GridPath};
pub use norms::{
    endpoint_holder_norm, holder_norm, holder_norm_full, phi2, phi3, sup_norm, tensor_sup_norm, two_param_norm,
    HolderExponents, MultFunctional, NormReport,
};
pub use tensor::TwoParamTensor;

pub(crate) use grid::euclid;
