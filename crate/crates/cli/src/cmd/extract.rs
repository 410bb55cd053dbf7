use std::path::PathBuf;

use clap::Args;
use flowroi::io::{self, ImageFormat};
use flowroi::roi::{extract_roi_detailed, label_components};
use flowroi::RoiMask;
use serde::Serialize;

use crate::common::{
    config_map, emit_json, ensure_dir, hash_files, load_frames, mask_name, on_workers, Summary,
    REPORT_SCHEMA_VERSION,
};
use crate::error::CliResult;
use crate::Globals;

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory of input frames.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory for the PBM masks.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Input frame format: pgm, png or tiff.
    #[arg(long, default_value = "pgm")]
    pub format: ImageFormat,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaskStats {
    pub frame: usize,
    pub file: String,
    pub mask_fraction: f64,
    pub components: usize,
    /// Registration of the previous frame onto this one.
    pub shift: [i32; 2],
}

impl MaskStats {
    pub fn of(frame: usize, file: String, mask: &RoiMask, shift: [i32; 2]) -> Self {
        Self {
            frame,
            file,
            mask_fraction: mask.fraction(),
            components: label_components(mask).1.len(),
            shift,
        }
    }
}

#[derive(Serialize)]
struct ExtractReport {
    schema_version: u32,
    command: &'static str,
    config: std::collections::BTreeMap<&'static str, String>,
    input_hash: String,
    frames: usize,
    mask_fraction: Option<Summary>,
    components: Option<Summary>,
    rows: Vec<MaskStats>,
}

pub fn run(args: &ExtractArgs, globals: &Globals) -> CliResult<()> {
    let config = globals.config()?;
    let (seq, files) = load_frames(&args.input, args.format)?;
    let input_hash = hash_files(&files)?;
    let extraction = on_workers(config.workers, || Ok(extract_roi_detailed(&seq, &config)?))?;
    ensure_dir(&args.out)?;
    let mut rows = Vec::with_capacity(seq.len());
    for (t, m) in extraction.masks.iter().enumerate() {
        let name = mask_name(t);
        io::save_mask(m, &args.out.join(&name))?;
        let s = extraction.shifts[t];
        rows.push(MaskStats::of(t, name, m, [s.dx, s.dy]));
    }
    let report = ExtractReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "extract-roi",
        config: config_map(&config),
        input_hash,
        frames: rows.len(),
        mask_fraction: Summary::of(rows.iter().map(|r| r.mask_fraction)),
        components: Summary::of(rows.iter().map(|r| r.components as f64)),
        rows,
    };
    let path = globals.report_out.clone().unwrap_or_else(|| args.out.join("report.json"));
    emit_json(&report, Some(&path))
}
