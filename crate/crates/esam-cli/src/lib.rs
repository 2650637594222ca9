//! Experiment harness for the extrapolated string-averaging solver.
//!
//! This crate packages everything around the core iteration that a desk-scale
//! numerical study needs: the six classical feasibility test problems with
//! their index maps and starting points, a seeded random
//! quadratic-inequality generator, a parallel-beam tomography problem built
//! from a rasterized head phantom, and a config-file driven runner that
//! emits per-iteration CSV traces and summary records.
//!
//! The binary (`esam`) exposes four verbs:
//!
//! * `solve` — run one experiment config and write its artifacts,
//! * `batch` — run a directory of configs and compare extrapolated (`ue`)
//!   against plain (`we`) runs pairwise,
//! * `gen` — emit ready-to-run config files (and tomography data files) for
//!   the classical, random, and tomography suites,
//! * `verify` — run the property checks (gradient consistency,
//!   quasi-nonexpansiveness, step-size lower bounds) on one problem.
//!
//! Everything is deterministic: random instances are rebuilt from 64-bit
//! seeds with a fixed generator (ChaCha8) and a documented draw order, and
//! reruns of the same config produce byte-identical trace files.

pub mod classical;
pub mod config;
pub mod error;
pub mod phantom;
pub mod problems;
pub mod qc;
pub mod runner;

pub use error::{Error, Result};
