//! Parallel-in-time integration of ODE systems.
//!
//! The crate implements the Parareal predictor-corrector iteration with four
//! interchangeable correction models:
//!
//! * the classic Parareal lookup of the previous iteration's fine/coarse
//!   discrepancy,
//! * an `m`-nearest-neighbour average with uniform weights,
//! * a Gaussian-process emulator trained on every observation collected so far,
//! * a Gaussian-process emulator trained only on the `m` nearest neighbours of
//!   each query (local kriging).
//!
//! Everything here is allocation-only (`alloc`) and free of IO, threads and
//! clocks. Parallel execution and wallclock measurement are injected through
//! the [`exec::Executor`] and [`exec::Clock`] traits; the `pint-lab` crate
//! provides thread-pool and `std::time` backed implementations.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod dataset;
pub mod engine;
pub mod error;
pub mod exec;
pub mod gp;
pub mod integrator;
pub mod perf;
pub mod rng;
pub mod systems;

pub use error::{Error, Result};
