//! The user guide, compiled into the crate documentation.
//!
//! Each chapter below is included verbatim from `book/src`, so every code
//! example in the rendered book is also a documentation test: `cargo test
//! --doc` fails if the guide drifts out of sync with the API.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/statistic.md")]
pub mod statistic {}

#[doc = include_str!("../../../book/src/calibration.md")]
pub mod calibration {}

#[doc = include_str!("../../../book/src/moments.md")]
pub mod moments {}

#[doc = include_str!("../../../book/src/comparator.md")]
pub mod comparator {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
