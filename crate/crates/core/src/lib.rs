//! Covering array generation for combinatorial interaction testing.
//!
//! A suite is built greedily one row at a time. Each row is found by a
//! population search whose moves are sine, cosine, Lévy flight and crossover
//! operators; a small Q-table learns which operator to apply next. A plain
//! sine-cosine driver is provided as the baseline, along with a brute-force
//! coverage verifier and a benchmark harness.
//!
//! ```
//! use cagen::{generate, verify_suite, CAConfig, EngineConfigF64, Strategy};
//!
//! let config = CAConfig::new(2, vec![3, 2, 2, 2]).unwrap();
//! let report = generate(&config, &EngineConfigF64::default(), Strategy::Qlsca).unwrap();
//! assert!(verify_suite(&report.suite).complete);
//! ```
//!
//! The real-valued parts of the search are generic over [`Real`]; the
//! aliases below fix the scalar to `f64` or `f32`.

pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod model;
pub mod num;
pub mod operators;
pub mod qlearn;
pub mod tuplegen;
pub mod verify;

pub use engine::{generate, EngineConfig, OperatorCounts, Population, RunReport, Strategy};
pub use error::{Error, Result};
pub use model::{covers, CAConfig, InteractionTuple, Mask, TestCase, TestSuite, TupleStore};
pub use num::Real;
pub use operators::{OperatorKind, ScheduleParams};
pub use qlearn::QTable;
pub use tuplegen::build_store;
pub use verify::{size_lower_bound, verify_suite, VerifyReport};

pub type ScheduleParamsF64 = ScheduleParams<f64>;
pub type ScheduleParamsF32 = ScheduleParams<f32>;
pub type QTableF64 = QTable<f64>;
pub type QTableF32 = QTable<f32>;
pub type EngineConfigF64 = EngineConfig<f64>;
pub type EngineConfigF32 = EngineConfig<f32>;
