use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use flowroi::io::ImageFormat;
use flowroi::metrics::{coverage, CoverageReport};
use flowroi::pipeline::{compress_sequence, throughput, ThroughputReport};
use serde::Serialize;

use crate::cmd::extract::MaskStats;
use crate::common::{
    config_map, emit_json, ensure_dir, frame_name, hash_files, load_frames, Summary, REPORT_SCHEMA_VERSION,
};
use crate::dataset::load_truth;
use crate::error::{CliResult, Context};
use crate::Globals;

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// Directory of input frames.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory for the `.froi` files.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value = "pgm")]
    pub format: ImageFormat,
    /// Synthetic dataset directory; adds mask coverage to the report.
    #[arg(long, value_name = "DIR")]
    pub truth: Option<PathBuf>,
    /// Also time single- and multi-worker runs. Timings make the report
    /// differ between runs.
    #[arg(long)]
    pub throughput: bool,
}

#[derive(Debug, Serialize)]
pub struct FrameRow {
    #[serde(flatten)]
    pub mask: MaskStats,
    pub stream: String,
    pub bytes: usize,
    /// `null` for lossless streams.
    pub budget_bytes: Option<usize>,
    pub within_budget: bool,
    pub achieved_ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct CompressReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: BTreeMap<&'static str, String>,
    pub input_hash: String,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub depth: u32,
    pub raw_bytes_per_frame: usize,
    pub total_compressed_bytes: usize,
    pub all_within_budget: bool,
    pub mask_fraction: Option<Summary>,
    pub achieved_ratio: Option<Summary>,
    pub coverage: Option<CoverageReport>,
    pub throughput: Option<ThroughputReport>,
    pub rows: Vec<FrameRow>,
}

pub fn run(args: &CompressArgs, globals: &Globals) -> CliResult<()> {
    let config = globals.config()?;
    let (seq, files) = load_frames(&args.input, args.format)?;
    let input_hash = hash_files(&files)?;
    let compressed = compress_sequence(&seq, &config)?;
    ensure_dir(&args.out)?;

    let raw = seq.frames()[0].raw_bytes();
    let budget = if config.codec.lossless {
        None
    } else {
        config.codec.budget(raw)
    };
    let mut rows = Vec::with_capacity(seq.len());
    for (t, bytes) in compressed.streams.iter().enumerate() {
        let name = frame_name(t, "froi");
        let path = args.out.join(&name);
        fs::write(&path, bytes).ctx(format!("writing {}", path.display()))?;
        let s = compressed.extraction.shifts[t];
        let mask = &compressed.extraction.masks[t];
        rows.push(FrameRow {
            mask: MaskStats::of(t, files[t].file_name().unwrap().to_string_lossy().into_owned(), mask, [s.dx, s.dy]),
            stream: name,
            bytes: bytes.len(),
            budget_bytes: budget,
            within_budget: budget.is_none_or(|b| bytes.len() <= b + flowroi::codec::HEADER_ALLOWANCE),
            achieved_ratio: raw as f64 / bytes.len() as f64,
        });
    }

    let cov = match &args.truth {
        Some(dir) => Some(coverage(&compressed.extraction.masks, &load_truth(dir)?)?),
        None => None,
    };
    let tp = if args.throughput {
        Some(throughput(&seq, &config)?)
    } else {
        None
    };
    let (width, height) = seq.dims();
    let report = CompressReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "compress",
        config: config_map(&config),
        input_hash,
        frames: seq.len(),
        width,
        height,
        depth: seq.depth().bits(),
        raw_bytes_per_frame: raw,
        total_compressed_bytes: rows.iter().map(|r| r.bytes).sum(),
        all_within_budget: rows.iter().all(|r| r.within_budget),
        mask_fraction: Summary::of(rows.iter().map(|r| r.mask.mask_fraction)),
        achieved_ratio: Summary::of(rows.iter().map(|r| r.achieved_ratio)),
        coverage: cov,
        throughput: tp,
        rows,
    };
    let path = globals.report_out.clone().unwrap_or_else(|| args.out.join("report.json"));
    emit_json(&report, Some(&path))?;
    eprintln!(
        "compressed {} frames, mean ratio {:.2}",
        report.frames,
        report.achieved_ratio.map_or(0.0, |s| s.mean)
    );
    Ok(())
}
