//! Mutational robustness of programs: how many random copy/delete/swap
//! mutants still pass the test suite, how far neutral walks can drift, and
//! whether populations of neutral variants repair seeded defects.

pub mod corpus;
pub mod experiments;
pub mod genome;
pub mod harness;
pub mod minilang;
pub mod report;
pub mod rng;
