pub mod error;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod prox;
pub mod problems;
pub mod solvers;
pub mod stepsize;
