//! Strongly pattern equivariant functions and the algebra of finite-type
//! kernels acting on point sets.

mod function;
mod kernel;

pub use function::{eval_pe, pe_from_patch_list, PeFunction};
pub use kernel::{
    build_schrodinger, kernel_adjoint, kernel_convolve, kernel_generator_s, Coefficient, Hopping,
    Kernel, KernelTerm, SchrodingerSpec, Theta,
};
