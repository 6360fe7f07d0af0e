//! File formats: Matrix Market (coordinate, pattern and array), dense CSV
//! and the flat `key=value` run configuration.
//!
//! Trace CSV output lives on [`crate::solvers::IterationTrace::write_csv`].

mod config;
mod dense_csv;
mod mm;

pub use config::{read_config, RunConfig};
pub use dense_csv::{read_dense_csv, write_dense_csv};
pub use mm::{
    parse_matrix_market, read_matrix_market, write_matrix_market_array, write_matrix_market_coordinate,
    MatrixMarket,
};
