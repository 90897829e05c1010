//! Core library for the DEI toolkit: rerank candidate patches from multiple
//! software-engineering agents with an explain-then-score review committee,
//! and quantify agent-ensemble diversity with Union@k / Intersect@k /
//! Average@k / n@k metrics over resolution matrices.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`corpus`] — ingest prediction sets, resolution reports, file bundles
//!   and instance descriptions; build resolution matrices.
//! - [`diff`] — parse unified diffs, apply them to bundled files, render
//!   line-numbered before/after views.
//! - [`context`] — assemble the four-part scoring input (issue, spans,
//!   before, after) per (instance, candidate) pair under a token budget.
//! - [`committee`] — build the explain-then-score prompt, collect votes from
//!   a scoring backend, parse scores, persist the vote ledger, aggregate.
//! - [`rerank`] — rank candidates per instance by aggregate score and emit a
//!   merged prediction set.
//! - [`metrics`] — diversity metrics over resolution matrices under explicit
//!   candidate orders and selector policies.
//! - [`pipeline`] — glue: scoring task construction, vote sweeps, config
//!   hashing, report rendering.

pub mod committee;
pub mod context;
pub mod corpus;
pub mod diff;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod rerank;
pub mod seed;
pub mod synth;
pub mod types;

pub use error::PipelineError;
pub use types::{CandidateKey, CandidateOrder};
