//! `vfp` command line.
//!
//! Exit codes: 0 success, 1 data or runtime error (including oracle
//! mismatches in `analyze`), 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::conv::budget_report;
use crate::correlation::Direction;
use crate::emit::{read_tensor, DatasetManifest, MANIFEST_CSV, MANIFEST_JSON};
use crate::error::{Error, Result};
use crate::layout::{derive_dims, GridDims, Strategy};
use crate::pipeline::{self, ConvertOptions, CorrScope, Prepared, RunConfig};
use crate::tabular::DEFAULT_MISSING_TOKENS;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Convert tabular data into CNN-ready images by vortex feature positioning.
///
/// Set VFP_LOG (e.g. `VFP_LOG=info`) for progress logging on stderr.
#[derive(Debug, Parser)]
#[command(name = "vfp", version)]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a CSV file into per-sample tensors plus a manifest.
    Convert(ConvertArgs),
    /// Compare closed-form and brute-force convolution window counts.
    Analyze(AnalyzeArgs),
    /// Show the layout and occupancy of one emitted sample.
    Inspect(InspectArgs),
    /// Print per-attribute correlation scores and ranks as CSV.
    Scores(ScoresArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,

    /// Name of the class label column.
    #[arg(long)]
    pub label: String,

    /// Train fraction of the seeded split.
    #[arg(long, default_value_t = pipeline::DEFAULT_RATIO)]
    pub ratio: f64,

    /// Split seed.
    #[arg(long, default_value_t = pipeline::DEFAULT_SEED)]
    pub seed: u64,

    /// Order of correlation scores along the spiral.
    #[arg(long, default_value = "ascending", value_parser = clap::value_parser!(Direction))]
    pub direction: Direction,

    /// Rows used for correlation scores: train or full.
    #[arg(long, default_value = "train", value_parser = clap::value_parser!(CorrScope))]
    pub corr_scope: CorrScope,

    /// Cell text treated as missing; repeatable [default: "", NA, NaN].
    #[arg(long = "missing", value_name = "TOKEN")]
    pub missing: Vec<String>,
}

impl DataArgs {
    fn missing_tokens(&self) -> Vec<String> {
        if self.missing.is_empty() {
            DEFAULT_MISSING_TOKENS
                .iter()
                .map(|s| s.to_string())
                .collect()
        } else {
            self.missing.clone()
        }
    }
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Embedding geometry: none, zpos1, zpos2 or distancing.
    #[arg(long, default_value = "distancing", value_parser = clap::value_parser!(Strategy))]
    pub strategy: Strategy,

    /// Output directory; nothing is written outside it.
    #[arg(long)]
    pub out: PathBuf,

    /// Also write 8-bit grayscale PNG previews.
    #[arg(long, default_value_t = false)]
    pub png: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Feature grid as MxN.
    #[arg(
        long,
        conflicts_with = "attrs",
        required_unless_present = "attrs",
        value_parser = clap::value_parser!(GridDims)
    )]
    pub dims: Option<GridDims>,

    /// Attribute count; the grid is derived from it.
    #[arg(long)]
    pub attrs: Option<usize>,

    /// Strategy to analyze; repeatable [default: all supported at the grid size].
    #[arg(long = "strategy", value_parser = clap::value_parser!(Strategy))]
    pub strategies: Vec<Strategy>,

    /// Also write the table as CSV to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Output directory of `convert` (or its manifest file).
    #[arg(long)]
    pub manifest: PathBuf,

    /// Sample id to show.
    #[arg(long)]
    pub sample: usize,
}

#[derive(Debug, Args)]
pub struct ScoresArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::InconsistentInputs(format!("thread pool: {e}")))?;
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| match cli.command {
        Command::Convert(args) => cmd_convert(args, &mut buf),
        Command::Analyze(args) => cmd_analyze(args, &mut buf),
        Command::Inspect(args) => cmd_inspect(args, &mut buf),
        Command::Scores(args) => cmd_scores(args, &mut buf),
    });
    out.write_all(&buf).map_err(stdout_io)?;
    result
}

fn options(data: &DataArgs, strategy: Strategy) -> ConvertOptions {
    ConvertOptions {
        strategy,
        direction: data.direction,
        ratio: data.ratio,
        seed: data.seed,
        corr_scope: data.corr_scope,
    }
}

fn stdout_io(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_convert(args: ConvertArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig {
        input_path: args.data.input.clone(),
        label_column: args.data.label.clone(),
        out_dir: args.out.clone(),
        emit_png: args.png,
        missing_tokens: args.data.missing_tokens(),
        options: options(&args.data, args.strategy),
    };
    let summary = pipeline::convert(&cfg)?;
    info!("wrote {}", cfg.out_dir.display());
    writeln!(out, "{summary}").map_err(stdout_io)?;
    Ok(EXIT_OK)
}

pub fn cmd_analyze(args: AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let dims = match (args.dims, args.attrs) {
        (Some(d), _) => d,
        (None, Some(k)) => derive_dims(k)?,
        (None, None) => unreachable!("clap enforces one of --dims/--attrs"),
    };
    let strategies: Vec<Strategy> = if args.strategies.is_empty() {
        Strategy::ALL
            .into_iter()
            .filter(|&s| crate::conv::closed_form(s, dims).is_ok())
            .collect()
    } else {
        args.strategies.clone()
    };
    if strategies.is_empty() {
        return Err(Error::UnsupportedDims {
            strategy: Strategy::Zpos1,
            m: dims.m,
            n: dims.n,
        });
    }
    let report = budget_report(&[dims], &strategies)?;
    let w = |out: &mut dyn Write, s: &str| out.write_all(s.as_bytes()).map_err(stdout_io);
    match args.attrs {
        Some(k) => w(out, &format!("grid {dims} derived from k={k} attributes\n"))?,
        None => w(out, &format!("grid {dims}\n"))?,
    }
    w(out, &report.to_text())?;
    if let Some(path) = &args.csv {
        fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    if report.all_agree() {
        w(out, "closed form matches brute force for every row\n")?;
        Ok(EXIT_OK)
    } else {
        w(out, "closed form DISAGREES with brute force\n")?;
        Ok(EXIT_FAILURE)
    }
}

fn manifest_dir(path: &Path) -> &Path {
    match path.file_name().and_then(|n| n.to_str()) {
        Some(MANIFEST_JSON) | Some(MANIFEST_CSV) => path.parent().unwrap_or(Path::new(".")),
        _ => path,
    }
}

pub fn cmd_inspect(args: InspectArgs, out: &mut dyn Write) -> Result<i32> {
    let dir = manifest_dir(&args.manifest);
    let manifest = DatasetManifest::read(dir)?;
    let entry = manifest
        .entry(args.sample)
        .ok_or_else(|| Error::NotFound(format!("sample {} in {}", args.sample, dir.display())))?;
    let tensor = read_tensor(dir.join(&entry.tensor_path))?;
    let hd = &manifest.header;
    if (tensor.height, tensor.width) != (hd.height, hd.width) {
        return Err(Error::InconsistentInputs(format!(
            "{} is {}x{}, manifest says {}x{}",
            entry.tensor_path, tensor.height, tensor.width, hd.height, hd.width
        )));
    }
    let plane = tensor.plane(0);

    let mut text = format!(
        "sample {} label={} split={}\nstrategy={} direction={} grid={} image={}x{}x{} k={}\n\n",
        entry.sample_id,
        entry.label,
        entry.split,
        hd.strategy,
        hd.direction,
        hd.grid,
        hd.channels,
        hd.height,
        hd.width,
        hd.k
    );
    text.push_str(&format!(
        "{:>5}  {:<24} {:>10}  {:>9}  {:>9}  {:>8}\n",
        "rank", "column", "score", "grid", "pixel", "value"
    ));
    for e in &hd.layout {
        let v = plane[e.pixel_row * hd.width + e.pixel_col];
        text.push_str(&format!(
            "{:>5}  {:<24} {:>10.6}  {:>9}  {:>9}  {:>8.5}\n",
            e.rank,
            e.column_name,
            e.score,
            format!("({},{})", e.grid_row, e.grid_col),
            format!("({},{})", e.pixel_row, e.pixel_col),
            v
        ));
    }

    // '#' attribute pixel, 'o' zero-padding grid cell, '.' empty pixel.
    let mut mask = vec![b'.'; hd.height * hd.width];
    for i in 0..hd.grid.m {
        for j in 0..hd.grid.n {
            let (r, c) = hd.strategy.pixel_of(i, j);
            mask[r * hd.width + c] = b'o';
        }
    }
    for e in &hd.layout {
        mask[e.pixel_row * hd.width + e.pixel_col] = b'#';
    }
    text.push_str("\noccupancy:\n");
    for row in mask.chunks(hd.width) {
        text.push_str(std::str::from_utf8(row).unwrap_or(""));
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(stdout_io)?;
    Ok(EXIT_OK)
}

pub fn cmd_scores(args: ScoresArgs, out: &mut dyn Write) -> Result<i32> {
    let raw = crate::tabular::load_csv(
        &args.data.input,
        &args.data.label,
        &args.data.missing_tokens(),
    )?;
    let prepared = Prepared::from_dataset(
        &raw,
        args.data.label.clone(),
        options(&args.data, Strategy::Distancing),
    )?;
    let csv = prepared.profile.to_csv(prepared.dataset.column_names());
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(|e| Error::io(path, e))?,
        None => out.write_all(csv.as_bytes()).map_err(stdout_io)?,
    }
    Ok(EXIT_OK)
}
