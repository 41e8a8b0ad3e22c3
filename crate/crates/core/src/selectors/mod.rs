//! The selection methods: elastic net / Lasso paths, forward stepwise
//! selection, and best subset selection.

pub mod bss;
pub mod enet;
pub mod fss;
pub mod gram;
mod least_squares;

pub use bss::{bss_branch_and_bound, bss_exhaustive, bss_warm_start, BssSolution};
pub use enet::{
    enet_coordinate_descent, enet_objective, enet_path, lambda_grid, lambda_max, lasso_path, RegularizationPath,
};
pub use fss::{forward_stepwise, FssStep, FssTrace};
pub use least_squares::least_squares_on_support;
