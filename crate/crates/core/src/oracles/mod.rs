//! Slow reference solvers. None of these share code with the tile engine
//! beyond the input types, so agreement between them is meaningful.

mod closed_form;
mod fd;
mod picard;
mod signature;

pub use closed_form::{bessel_series_kernel, two_tile_closed_form};
pub use fd::{goursat_fd_grid, goursat_fd_solve, FdGrid};
pub use picard::{picard_global, PicardOutcome};
pub use signature::{
    signature_kernel_by_words, signature_level_products, truncated_signature_kernel,
    truncated_signature_kernel_with_budget, SignatureTensor, DEFAULT_TENSOR_BUDGET,
};
