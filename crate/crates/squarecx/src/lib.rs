//! Directed colored square complexes, finite balls of their universal
//! covers, the pointed median graphs and event structures they carry, and
//! labeling analysis on top of them.
//!
//! Everything is finite and deterministic: covers are built to a given
//! radius, and every derived statement is restricted to the region where
//! the finite construction agrees with the infinite object.

pub mod complex;
pub mod cover;
pub mod error;
pub mod events;
pub mod format;
pub mod iso;
pub mod labeling;
pub mod median;
pub mod special;
pub mod tiles;
pub mod unionfind;
pub mod wise;

pub use complex::{ComplexBuilder, Sign, SquareComplex, Verdict, Vh};
pub use error::{Error, Result};
pub use format::parse_complex;
