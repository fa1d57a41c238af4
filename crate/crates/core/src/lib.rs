//! Smallset Timelines.
//!
//! Turns a sequence of tabular snapshots taken during a preprocessing
//! script into a static, captioned timeline figure:
//!
//! 1. [`table`] loads the capture manifest and snapshot CSVs.
//! 2. [`diff`] diffs consecutive snapshots and builds the coverage,
//!    appearance and distance matrices.
//! 3. [`select`] picks a small set of original rows (the Smallset).
//! 4. [`narrative`] writes the caption template, reads filled captions back
//!    and produces alt text.
//! 5. [`render`] lays out the Smallset per snapshot and writes SVG.
//!
//! [`pipeline::Project`] wires these together.

pub mod diff;
pub mod narrative;
pub mod pipeline;
pub mod render;
pub mod select;
pub mod table;
pub mod warning;

pub use diff::{ChangeCode, StepDiff};
pub use pipeline::{Error, Project, RunConfig};
pub use select::{Method, SelectorConfig, SmallsetSelection};
pub use table::{Cell, RowId, SnapshotTable};
pub use warning::Warning;
