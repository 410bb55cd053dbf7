use std::path::PathBuf;

use clap::Args;
use flowroi::io::{self, ImageFormat};
use flowroi::metrics::{coverage, quality_report, CoverageReport, QualityReport};
use flowroi::RoiMask;
use serde::Serialize;

use crate::common::{files_with_ext, hash_files, load_masks, on_workers, emit_json, REPORT_SCHEMA_VERSION};
use crate::dataset::load_truth;
use crate::error::{CliError, CliResult};
use crate::Globals;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of original frames.
    #[arg(long)]
    pub raw: PathBuf,
    /// Directory written by `decompress` (frames and masks).
    #[arg(long)]
    pub decoded: PathBuf,
    /// Synthetic dataset directory. When given, region PSNR uses the
    /// ground-truth cell masks and coverage is reported.
    #[arg(long, value_name = "DIR")]
    pub truth: Option<PathBuf>,
    /// Directory of `.froi` files, for achieved compression ratios.
    #[arg(long, value_name = "DIR")]
    pub streams: Option<PathBuf>,
    #[arg(long, default_value = "pgm")]
    pub format: ImageFormat,
}

#[derive(Debug, Serialize)]
pub struct EvaluateReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub input_hash: String,
    pub quality: QualityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageReport>,
}

pub fn run(args: &EvaluateArgs, globals: &Globals) -> CliResult<()> {
    let config = globals.config()?;
    let raw_files = io::list_frames(&args.raw, args.format)?;
    let decoded_files = io::list_frames(&args.decoded, ImageFormat::Pgm)?;
    if raw_files.len() != decoded_files.len() {
        return Err(CliError::data(format!(
            "{} raw frames but {} decoded frames",
            raw_files.len(),
            decoded_files.len()
        )));
    }
    let raw = io::load_sequence(&args.raw, args.format)?;
    let decoded = io::load_sequence(&args.decoded, ImageFormat::Pgm)?;
    let pipeline_masks = load_masks(&args.decoded)?;
    if !pipeline_masks.is_empty() && pipeline_masks.len() != raw.len() {
        return Err(CliError::data(format!(
            "{} decoded masks for {} frames",
            pipeline_masks.len(),
            raw.len()
        )));
    }
    let truth = args.truth.as_deref().map(load_truth).transpose()?;
    let (regions, source): (Vec<RoiMask>, &str) = match (&truth, pipeline_masks.is_empty()) {
        (Some(t), _) => (t.masks.clone(), "truth"),
        (None, false) => (pipeline_masks.clone(), "pipeline"),
        (None, true) => {
            let (w, h) = raw.dims();
            (vec![RoiMask::empty(w, h); raw.len()], "none")
        }
    };
    let sizes = match &args.streams {
        Some(dir) => {
            let files = files_with_ext(dir, "froi")?;
            let sizes: Vec<usize> = files
                .iter()
                .map(|f| std::fs::metadata(f).map(|m| m.len() as usize))
                .collect::<Result<_, _>>()?;
            if sizes.len() != raw.len() {
                return Err(CliError::data(format!("{} streams for {} frames", sizes.len(), raw.len())));
            }
            Some(sizes)
        }
        None => None,
    };

    let mut hashed = raw_files;
    hashed.extend(decoded_files);
    let input_hash = hash_files(&hashed)?;
    let quality = on_workers(config.workers, || {
        Ok(quality_report(
            raw.frames(),
            decoded.frames(),
            &regions,
            source,
            sizes.as_deref(),
        )?)
    })?;
    let coverage = match truth {
        Some(t) if !pipeline_masks.is_empty() => Some(coverage(&pipeline_masks, &t)?),
        _ => None,
    };
    let report = EvaluateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "evaluate",
        input_hash,
        quality,
        coverage,
    };
    emit_json(&report, globals.report_out.as_deref())
}
