//! Lasso and ridge regression compared on sparse linear models of growing
//! density, with and without cross-validated tuning.

pub mod cv;
pub mod lasso;
pub mod metrics;
pub mod model;
pub mod path;
pub mod ridge;
pub mod study;

pub use study::BetOnSparsity;
