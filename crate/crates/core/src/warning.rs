use std::fmt;

use serde::Serialize;

use crate::table::RowId;

/// Non-fatal findings. Warnings are reported but never change an exit code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    TooManySnapshots {
        count: usize,
        max: usize,
    },
    SmallOriginal {
        rows: usize,
        min: usize,
    },
    ReappearingRow {
        row_id: RowId,
        deleted_at: usize,
        returned_at: usize,
    },
    NoChange {
        step: usize,
    },
    SmallsetSize {
        k: usize,
        min: usize,
        max: usize,
    },
    UncoveredStep {
        step: usize,
    },
    DroppedStep {
        step: usize,
    },
    HeuristicSearch {
        subsets: u128,
        limit: u64,
    },
    EmptyCaption {
        snapshot: usize,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::TooManySnapshots { count, max } => write!(
                f,
                "{count} snapshots; a timeline is recommended to have 2-{max} snapshots"
            ),
            Warning::SmallOriginal { rows, min } => write!(
                f,
                "the first snapshot has {rows} rows, fewer than the recommended minimum Smallset size of {min}"
            ),
            Warning::ReappearingRow { row_id, deleted_at, returned_at } => write!(
                f,
                "row {row_id} disappears at step {deleted_at} and reappears at step {returned_at}; the first snapshot should be a superset of later ones"
            ),
            Warning::NoChange { step } => write!(f, "step {step} produced no change"),
            Warning::SmallsetSize { k, min, max } => write!(
                f,
                "Smallset size {k} is outside the recommended {min}-{max} rows"
            ),
            Warning::UncoveredStep { step } => write!(
                f,
                "no selected row is altered by step {step}; its snapshot will show no change"
            ),
            Warning::DroppedStep { step } => write!(
                f,
                "step {step} does not alter any original row; its coverage constraint was dropped"
            ),
            Warning::HeuristicSearch { subsets, limit } => write!(
                f,
                "{subsets} candidate subsets exceed the exhaustive limit {limit}; used local search (result may not be optimal)"
            ),
            Warning::EmptyCaption { snapshot } => {
                write!(f, "caption for snapshot {snapshot} is empty")
            }
        }
    }
}
