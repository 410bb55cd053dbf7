use std::fs;
use std::path::PathBuf;

use clap::Args;
use flowroi::codec;
use flowroi::io::{self, ImageFormat};
use rayon::prelude::*;
use serde::Serialize;

use crate::common::{emit_json, ensure_dir, files_with_ext, frame_name, hash_files, mask_name, on_workers};
use crate::common::REPORT_SCHEMA_VERSION;
use crate::error::{CliError, CliResult};
use crate::Globals;

#[derive(Debug, Args)]
pub struct DecompressArgs {
    /// Directory of `.froi` files.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory for decoded PGM frames and PBM masks.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Row {
    frame: usize,
    stream: String,
    ok: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct DecompressReport {
    schema_version: u32,
    command: &'static str,
    input_hash: String,
    decoded: usize,
    failed: usize,
    rows: Vec<Row>,
}

/// Decodes every stream; a bad file is reported and skipped, and the
/// command then exits with the data-error code.
pub fn run(args: &DecompressArgs, globals: &Globals) -> CliResult<()> {
    let config = globals.config()?;
    let files = files_with_ext(&args.input, "froi")?;
    if files.is_empty() {
        return Err(CliError::data(format!("no .froi files in {}", args.input.display())));
    }
    let input_hash = hash_files(&files)?;
    ensure_dir(&args.out)?;
    let out = &args.out;
    let rows: Vec<Row> = on_workers(config.workers, || {
        Ok(files
            .par_iter()
            .enumerate()
            .map(|(t, path)| {
                let stream = path.file_name().unwrap().to_string_lossy().into_owned();
                let result = fs::read(path)
                    .map_err(|e| flowroi::Error::io(path, e))
                    .and_then(|b| codec::decode_bytes(&b))
                    .and_then(|(frame, mask)| {
                        io::save_frame(&frame, &out.join(frame_name(t, "pgm")), ImageFormat::Pgm)?;
                        io::save_mask(&mask, &out.join(mask_name(t)))
                    });
                Row {
                    frame: t,
                    stream,
                    ok: result.is_ok(),
                    error: result.err().map(|e| e.to_string()),
                }
            })
            .collect())
    })?;
    let failed: Vec<&Row> = rows.iter().filter(|r| !r.ok).collect();
    for r in &failed {
        eprintln!("error: {}: {}", r.stream, r.error.as_deref().unwrap_or(""));
    }
    let report = DecompressReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "decompress",
        input_hash,
        decoded: rows.len() - failed.len(),
        failed: failed.len(),
        rows,
    };
    if let Some(path) = &globals.report_out {
        emit_json(&report, Some(path))?;
    }
    if report.failed > 0 {
        let names: Vec<&str> = report.rows.iter().filter(|r| !r.ok).map(|r| r.stream.as_str()).collect();
        return Err(CliError::data(format!(
            "{} of {} streams failed to decode: {}",
            report.failed,
            report.rows.len(),
            names.join(", ")
        )));
    }
    Ok(())
}
