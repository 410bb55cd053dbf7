use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use flowroi::io::{self, ImageFormat};
use flowroi::{PipelineConfig, RoiMask, Sequence};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, Context};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// SHA-256 over the names and contents of `files`, in the given order.
pub fn hash_files(files: &[PathBuf]) -> CliResult<String> {
    let mut h = Sha256::new();
    for f in files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        let bytes = fs::read(f).ctx(format!("reading {}", f.display()))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

/// Short stable identifier of a resolved config.
pub fn config_hash(config: &PipelineConfig) -> String {
    let digest = Sha256::digest(config_for_hash(config).as_bytes());
    hex::encode(&digest[..8])
}

// workers never changes output bytes, so it is left out of the identity
fn config_for_hash(config: &PipelineConfig) -> String {
    let mut c = config.clone();
    c.workers = 0;
    c.to_kv()
}

pub fn config_map(config: &PipelineConfig) -> BTreeMap<&'static str, String> {
    let mut m = config.kv_pairs();
    m.remove("workers");
    m
}

/// Sorted `.ext` files in `dir`.
pub fn files_with_ext(dir: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).ctx(format!("reading directory {}", dir.display()))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e?.path();
        if p.is_file() && p.extension().and_then(|x| x.to_str()).is_some_and(|x| x.eq_ignore_ascii_case(ext)) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

pub fn load_frames(dir: &Path, format: ImageFormat) -> CliResult<(Sequence, Vec<PathBuf>)> {
    let files = io::list_frames(dir, format)?;
    let seq = io::load_sequence(dir, format)?;
    Ok((seq, files))
}

pub fn load_masks(dir: &Path) -> CliResult<Vec<RoiMask>> {
    files_with_ext(dir, "pbm")?
        .iter()
        .map(|p| io::load_mask(p).map_err(CliError::from))
        .collect()
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).ctx(format!("creating {}", dir.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `value` as JSON to `path`, or to stdout when `path` is `None`.
pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let text = to_json(value)?;
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                ensure_dir(parent)?;
            }
            fs::write(p, text).ctx(format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn mask_name(index: usize) -> String {
    io::frame_file_name("mask_", index, "pbm")
}

pub fn frame_name(index: usize, ext: &str) -> String {
    io::frame_file_name("frame_", index, ext)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        Some(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Runs `f` on a pool of `workers` threads (0 = all cores).
pub fn on_workers<R: Send>(workers: usize, f: impl FnOnce() -> CliResult<R> + Send) -> CliResult<R> {
    flowroi::pipeline::with_workers(workers, f).map_err(CliError::internal)?
}
