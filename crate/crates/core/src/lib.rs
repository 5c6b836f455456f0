// SPDX-License-Identifier: Apache-2.0

//! Context-aware DFM scoring for metal-via enclosure violations.
//!
//! The flow: check enclosures on a flat layout ([`rulecheck`]), describe the
//! neighborhood of every violation with eight region counts ([`context`]),
//! learn hotspot probability from labeled contexts with an 8:4:1 sigmoid
//! network ([`ann`]), and fold that probability into the conventional score
//! ([`scoring`]). [`synth`] generates labeled designs and [`pipeline`] wires
//! the stages together behind one experiment config.

pub mod ann;
pub mod context;
pub mod geometry;
pub mod pipeline;
pub mod rulecheck;
pub mod scoring;
pub mod synth;

pub use ann::{NetworkWeights, TrainConfig};
pub use context::{ContextConfig, ContextVector};
pub use geometry::{Layout, Point, Polygon, Rect};
pub use rulecheck::{EnclosureRule, Violation, ViolationDb};
pub use scoring::{BinReport, CombineMode, ScoredViolation};
