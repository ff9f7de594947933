//! Generalized deletion propagation: compile view-update problems over
//! conjunctive queries into integer programs, solve them, and check the
//! answers against the data.

pub mod relcore;
pub mod query;
pub mod witness;
pub mod gdp;
pub mod ilp;
pub mod par;
pub mod solve;
pub mod structure;
pub mod oracle;
pub mod pipeline;
pub mod bench;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Db(#[from] relcore::DbError),
    #[error(transparent)]
    Query(#[from] query::QueryError),
    #[error(transparent)]
    Eval(#[from] witness::EvalError),
    #[error(transparent)]
    Gdp(#[from] gdp::GdpError),
    #[error(transparent)]
    Solve(#[from] solve::SolveError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
