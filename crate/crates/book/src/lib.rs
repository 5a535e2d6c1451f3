//! The code listings of the guide in `book/`, compiled and run as doc-tests.
//! mdbook cannot resolve crate dependencies when testing, so each chapter is
//! included as the docs of an empty module instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/transform.md")]
pub mod transform {}
#[doc = include_str!("../../../book/src/stability.md")]
pub mod stability {}
#[doc = include_str!("../../../book/src/controllers.md")]
pub mod controllers {}
#[doc = include_str!("../../../book/src/pole-mapping.md")]
pub mod pole_mapping {}
#[doc = include_str!("../../../book/src/frequency.md")]
pub mod frequency {}
#[doc = include_str!("../../../book/src/tuning.md")]
pub mod tuning {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
