//! The guide in `book/` compiled as doc-tests.
//!
//! mdbook cannot run Rust listings against an external crate, so each chapter
//! is included here as module documentation and `cargo test --doc` runs its
//! code blocks. A module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/audio.md")]
pub mod audio {}
#[doc = include_str!("../../../book/src/bins.md")]
pub mod bins {}
#[doc = include_str!("../../../book/src/triggers.md")]
pub mod triggers {}
#[doc = include_str!("../../../book/src/palette.md")]
pub mod palette {}
#[doc = include_str!("../../../book/src/particles.md")]
pub mod particles {}
#[doc = include_str!("../../../book/src/wire-format.md")]
pub mod wire_format {}
#[doc = include_str!("../../../book/src/control.md")]
pub mod control {}
#[doc = include_str!("../../../book/src/running.md")]
pub mod running {}
