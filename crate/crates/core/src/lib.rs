pub mod criterion;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod refine;
pub mod svm;
pub mod tuning;

pub use error::{Error, Result};
