//! End-to-end orchestration shared by the CLI and the C API.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{
    build_appearance, build_coverage, build_distance, diff_sequence, AppearanceMatrix,
    CoverageMatrix, DiffOptions, DistanceMatrix, MatrixDump, StepDiff,
};
use crate::narrative::{
    emit_caption_template, generate_alt_text, AltText, CaptionError, CaptionSet,
};
use crate::render::{
    build_timeline, render_svg, Palette, RenderError, RenderOptions, TimelineSpec,
};
use crate::select::{select, SelectError, SelectionReport, SelectorConfig, SmallsetSelection};
use crate::table::{load_manifest, validate_sequence, CaptureManifest, SnapshotTable, TableError};
use crate::warning::Warning;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Caption(#[from] CaptionError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Everything a run needs besides the captions. Loadable from JSON; every
/// field is optional there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest_path: Option<PathBuf>,
    pub output_stem: Option<PathBuf>,
    pub selector: SelectorConfig,
    pub render: RenderOptions,
    pub palette: Palette,
    pub title: String,
    /// Numeric tolerance for diffing.
    pub epsilon: f64,
    /// Reject unknown manifest fields.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest_path: None,
            output_stem: None,
            selector: SelectorConfig::default(),
            render: RenderOptions::default(),
            palette: Palette::default(),
            title: "Smallset Timeline".to_string(),
            epsilon: 0.0,
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::Config(format!(
                "epsilon {} must be finite and >= 0",
                self.epsilon
            )));
        }
        self.palette.validate()?;
        self.render.validate()?;
        Ok(())
    }
}

/// A loaded snapshot sequence with its diffs and selection matrices.
#[derive(Debug, Clone)]
pub struct Project {
    pub manifest: Option<CaptureManifest>,
    pub tables: Vec<SnapshotTable>,
    pub diffs: Vec<StepDiff>,
    pub coverage: CoverageMatrix,
    pub appearance: AppearanceMatrix,
    pub distance: DistanceMatrix,
    /// Findings from validating the sequence.
    pub warnings: Vec<Warning>,
}

/// Outputs of a full render.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub selection: SelectionReport,
    pub timeline: TimelineSpec,
    pub svg: String,
    pub alt_text: AltText,
}

impl Project {
    pub fn open(manifest_path: &Path, strict: bool, epsilon: f64) -> Result<Self, Error> {
        let manifest = load_manifest(manifest_path, strict)?;
        let tables = manifest.load_tables()?;
        let mut p = Project::from_tables(tables, epsilon)?;
        p.manifest = Some(manifest);
        Ok(p)
    }

    pub fn from_tables(tables: Vec<SnapshotTable>, epsilon: f64) -> Result<Self, Error> {
        if tables.len() < 2 {
            return Err(Error::Config(format!(
                "a timeline needs at least 2 snapshots, got {}",
                tables.len()
            )));
        }
        let diffs = diff_sequence(&tables, &DiffOptions { epsilon });
        let original = &tables[0];
        let last = tables.last().expect("non-empty");
        let coverage = build_coverage(&diffs, original);
        let appearance = build_appearance(&diffs, original, last);
        let distance = build_distance(&appearance);
        let warnings = validate_sequence(&tables);
        Ok(Project {
            manifest: None,
            tables,
            diffs,
            coverage,
            appearance,
            distance,
            warnings,
        })
    }

    pub fn n_snapshots(&self) -> usize {
        self.tables.len()
    }

    pub fn n_original_rows(&self) -> usize {
        self.tables[0].n_rows()
    }

    pub fn select(&self, cfg: &SelectorConfig) -> Result<SelectionReport, SelectError> {
        select(&self.coverage, &self.distance, cfg)
    }

    pub fn matrix_dump(&self) -> MatrixDump {
        let labels = self.tables[1..].iter().map(|t| t.label.clone()).collect();
        MatrixDump::new(&self.coverage, &self.appearance, labels)
    }

    pub fn caption_template(&self, selection: Option<&SmallsetSelection>) -> String {
        emit_caption_template(&self.tables, &self.diffs, selection)
    }

    pub fn timeline(
        &self,
        selection: &SmallsetSelection,
        captions: &CaptionSet,
        palette: &Palette,
        options: &RenderOptions,
        title: &str,
    ) -> Result<TimelineSpec, RenderError> {
        let mut spec = build_timeline(
            &self.tables,
            &self.diffs,
            &selection.selected_row_ids,
            &captions.texts(),
            palette,
            options,
        )?;
        spec.title = title.to_string();
        Ok(spec)
    }

    /// Selection, timeline, SVG and alt text in one pass.
    pub fn render(&self, cfg: &RunConfig, captions: &CaptionSet) -> Result<RenderOutput, Error> {
        cfg.validate()?;
        if captions.len() != self.n_snapshots() {
            return Err(RenderError::CaptionCountMismatch {
                captions: captions.len(),
                snapshots: self.n_snapshots(),
            }
            .into());
        }
        let selection = self.select(&cfg.selector)?;
        let timeline = self.timeline(
            &selection.selection,
            captions,
            &cfg.palette,
            &cfg.render,
            &cfg.title,
        )?;
        let svg = render_svg(&timeline)?;
        let alt_text = generate_alt_text(&timeline, captions, &self.diffs, &cfg.title);
        Ok(RenderOutput {
            selection,
            timeline,
            svg,
            alt_text,
        })
    }
}

/// `<stem>.svg` and `<stem>.alt.txt`.
pub fn output_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let name = stem
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "timeline".to_string());
    let dir = stem.parent().unwrap_or_else(|| Path::new(""));
    (
        dir.join(format!("{name}.svg")),
        dir.join(format!("{name}.alt.txt")),
    )
}

/// Writes both render outputs; returns their paths.
pub fn write_outputs(out: &RenderOutput, stem: &Path) -> Result<(PathBuf, PathBuf), Error> {
    let (svg_path, alt_path) = output_paths(stem);
    std::fs::write(&svg_path, &out.svg).map_err(|e| Error::Write {
        path: svg_path.clone(),
        source: e,
    })?;
    std::fs::write(&alt_path, out.alt_text.render()).map_err(|e| Error::Write {
        path: alt_path.clone(),
        source: e,
    })?;
    Ok((svg_path, alt_path))
}
