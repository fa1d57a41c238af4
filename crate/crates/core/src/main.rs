use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use smalltime::narrative::parse_captions_file;
use smalltime::pipeline::{write_outputs, Project, RunConfig};
use smalltime::render::Rgb;
use smalltime::select::Method;
use smalltime::Warning;

#[derive(Parser, Debug)]
#[command(
    name = "smalltime",
    version,
    about = "Build Smallset Timelines from preprocessing snapshots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate a capture manifest and its snapshots
    Check(CommonArgs),
    /// Write a caption template with one section per snapshot
    Template {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        select: SelectArgs,
        /// Output file (stdout when omitted)
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Select the Smallset and print it as JSON
    Select {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        select: SelectArgs,
    },
    /// Print the coverage and appearance matrices as JSON
    DumpMatrices {
        #[command(flatten)]
        common: CommonArgs,
        /// Output file (stdout when omitted)
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render `<stem>.svg` and `<stem>.alt.txt`
    Render {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        select: SelectArgs,
        #[command(flatten)]
        render: Box<RenderArgs>,
        /// Completed caption file
        #[arg(long)]
        captions: PathBuf,
        /// Output path without extension
        #[arg(long = "output-stem", visible_alias = "out")]
        output_stem: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Capture manifest (JSON); may also come from --config
    manifest: Option<PathBuf>,
    /// JSON run configuration; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reject unknown manifest fields
    #[arg(long)]
    strict: Option<bool>,
    /// Numeric tolerance when diffing
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Smallset size
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest number of K-subsets searched exactly
    #[arg(long)]
    exhaustive_limit: Option<u64>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    ghost: Option<bool>,
    #[arg(long)]
    print_data: Option<bool>,
    #[arg(long)]
    tints: Option<bool>,
    /// Columns to show, comma separated, in display order
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long)]
    frames_per_band: Option<usize>,
    #[arg(long)]
    sig_digits: Option<usize>,
    #[arg(long)]
    max_text_chars: Option<usize>,
    #[arg(long)]
    font_size_pt: Option<f64>,
    #[arg(long)]
    cell_w: Option<f64>,
    #[arg(long)]
    cell_h: Option<f64>,
    #[arg(long)]
    max_width_pt: Option<f64>,
    #[arg(long)]
    added_rows_cap: Option<usize>,
    #[arg(long)]
    unchanged_color: Option<Rgb>,
    #[arg(long)]
    edited_color: Option<Rgb>,
    #[arg(long)]
    added_color: Option<Rgb>,
    #[arg(long)]
    deleted_color: Option<Rgb>,
    #[arg(long)]
    tint_lighten: Option<f64>,
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value {
            $target = v;
        }
    };
}

impl CommonArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.manifest {
            cfg.manifest_path = Some(m.clone());
        }
        set!(cfg.strict, self.strict);
        set!(cfg.epsilon, self.epsilon);
        Ok(cfg)
    }
}

impl SelectArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.selector;
        set!(s.k, self.k);
        set!(s.method, self.method);
        set!(s.seed, self.seed);
        set!(s.exhaustive_limit, self.exhaustive_limit);
    }
}

impl RenderArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg.title, self.title.clone());
        let r = &mut cfg.render;
        set!(r.ghost, self.ghost);
        set!(r.print_data, self.print_data);
        set!(r.tints, self.tints);
        if let Some(c) = &self.columns {
            r.columns = Some(c.clone());
        }
        set!(r.frames_per_band, self.frames_per_band);
        set!(r.sig_digits, self.sig_digits);
        set!(r.max_text_chars, self.max_text_chars);
        set!(r.font_size_pt, self.font_size_pt);
        set!(r.cell_w, self.cell_w);
        set!(r.cell_h, self.cell_h);
        set!(r.max_width_pt, self.max_width_pt);
        set!(r.added_rows_cap, self.added_rows_cap);
        let p = &mut cfg.palette;
        set!(p.unchanged, self.unchanged_color);
        set!(p.edited, self.edited_color);
        set!(p.added, self.added_color);
        set!(p.deleted, self.deleted_color);
        set!(p.tint_lighten, self.tint_lighten);
    }
}

struct Reporter {
    color: bool,
}

impl Reporter {
    fn new() -> Self {
        let color =
            std::env::var_os("SMALLTIME_NO_COLOR").is_none() && std::io::stderr().is_terminal();
        Reporter { color }
    }

    fn label(&self, text: &str, ansi: &str) -> String {
        if self.color {
            format!("\x1b[{ansi}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn warn(&self, w: &Warning) {
        eprintln!("{}: {w}", self.label("warning", "1;33"));
    }

    fn warn_all(&self, ws: &[Warning]) {
        ws.iter().for_each(|w| self.warn(w));
    }

    fn error(&self, e: &anyhow::Error) {
        eprintln!("{}: {e:#}", self.label("error", "1;31"));
    }
}

fn open(cfg: &RunConfig, rep: &Reporter) -> Result<Project> {
    cfg.validate()?;
    let Some(path) = &cfg.manifest_path else {
        bail!("no manifest given (pass it as an argument or set manifest_path in --config)");
    };
    let project = Project::open(path, cfg.strict, cfg.epsilon)
        .with_context(|| format!("loading {}", path.display()))?;
    rep.warn_all(&project.warnings);
    Ok(project)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli, rep: &Reporter) -> Result<()> {
    match cli.command {
        Command::Check(common) => {
            let cfg = common.config()?;
            let project = open(&cfg, rep)?;
            println!(
                "ok: {} snapshots, {} original rows, {} steps",
                project.n_snapshots(),
                project.n_original_rows(),
                project.diffs.len()
            );
        }
        Command::Template {
            common,
            select,
            out,
        } => {
            let mut cfg = common.config()?;
            select.apply(&mut cfg);
            let project = open(&cfg, rep)?;
            let report = project.select(&cfg.selector)?;
            rep.warn_all(&report.warnings);
            emit(
                &project.caption_template(Some(&report.selection)),
                out.as_deref(),
            )?;
        }
        Command::Select { common, select } => {
            let mut cfg = common.config()?;
            select.apply(&mut cfg);
            let project = open(&cfg, rep)?;
            let report = project.select(&cfg.selector)?;
            rep.warn_all(&report.warnings);
            emit(
                &(serde_json::to_string_pretty(&report.selection)? + "\n"),
                None,
            )?;
        }
        Command::DumpMatrices { common, out } => {
            let cfg = common.config()?;
            let project = open(&cfg, rep)?;
            emit(
                &(serde_json::to_string(&project.matrix_dump())? + "\n"),
                out.as_deref(),
            )?;
        }
        Command::Render {
            common,
            select,
            render,
            captions,
            output_stem,
        } => {
            let mut cfg = common.config()?;
            select.apply(&mut cfg);
            render.apply(&mut cfg);
            if let Some(stem) = output_stem {
                cfg.output_stem = Some(stem);
            }
            let Some(stem) = cfg.output_stem.clone() else {
                bail!("no output stem given (--output-stem or output_stem in --config)");
            };
            let project = open(&cfg, rep)?;
            let (captions, warnings) = parse_captions_file(&captions, Some(project.n_snapshots()))?;
            rep.warn_all(&warnings);
            let out = project.render(&cfg, &captions)?;
            rep.warn_all(&out.selection.warnings);
            let (svg, alt) = write_outputs(&out, &stem)?;
            let sel = &out.selection.selection;
            let dropped: Vec<String> = sel.dropped_steps.iter().map(ToString::to_string).collect();
            println!(
                "method={} k={} objective={} heuristic={} dropped_steps=[{}] rows=[{}]",
                sel.method.as_str(),
                sel.k,
                sel.objective_value,
                sel.heuristic,
                dropped.join(","),
                sel.selected_row_ids
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            );
            println!("wrote {}", svg.display());
            println!("wrote {}", alt.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rep = Reporter::new();
    match run(cli, &rep) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            rep.error(&e);
            ExitCode::FAILURE
        }
    }
}
