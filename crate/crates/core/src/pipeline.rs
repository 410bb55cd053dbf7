//! End-to-end extract + encode over a sequence on a bounded worker pool.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::codec;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::frame::Sequence;
use crate::metrics::host_cpu;
use crate::roi::{extract_roi_detailed, RoiExtraction, StageTimings};

/// Runs `f` on a pool of `workers` threads (0 = one per core).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    Ok(pool.install(f))
}

pub fn effective_workers(workers: usize) -> usize {
    if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        workers
    }
}

#[derive(Debug, Clone)]
pub struct CompressedSequence {
    pub extraction: RoiExtraction,
    /// One `.froi` byte stream per frame.
    pub streams: Vec<Vec<u8>>,
    /// Stage times summed over frames.
    pub timings: StageTimings,
    pub wall_secs: f64,
}

fn compress_inner(sequence: &Sequence, config: &PipelineConfig) -> Result<CompressedSequence> {
    let start = Instant::now();
    let extraction = extract_roi_detailed(sequence, config)?;
    let encoded: Vec<(Vec<u8>, f64)> = sequence
        .frames()
        .par_iter()
        .zip(&extraction.masks)
        .enumerate()
        .map(|(t, (f, m))| {
            let t0 = Instant::now();
            let bytes = codec::encode_bytes(f, m, &config.codec).map_err(|e| e.at_frame(t))?;
            Ok((bytes, t0.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let mut timings = extraction.timings;
    timings.encode = encoded.iter().map(|(_, s)| s).sum();
    Ok(CompressedSequence {
        streams: encoded.into_iter().map(|(b, _)| b).collect(),
        extraction,
        timings,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// Extracts masks and encodes every frame using `config.workers` threads.
/// Output bytes do not depend on the worker count.
pub fn compress_sequence(sequence: &Sequence, config: &PipelineConfig) -> Result<CompressedSequence> {
    config.validate()?;
    with_workers(config.workers, || compress_inner(sequence, config))?
}

#[derive(Debug, Clone, Serialize)]
pub struct ThroughputReport {
    pub host_cpu: String,
    pub available_cores: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub single_worker_fps: f64,
    pub multi_worker_fps: f64,
    pub multi_workers: usize,
    /// Single-worker wall time of the timed run.
    pub total_secs: f64,
    /// Single-worker per-stage times; their sum never exceeds `total_secs`.
    pub stages: StageTimings,
}

pub const MIN_THROUGHPUT_FRAMES: usize = 10;

/// Frames per second of the extract + encode path with one worker and with
/// `config.workers` (0 = all cores). A two-frame warm-up run precedes timing.
pub fn throughput(sequence: &Sequence, config: &PipelineConfig) -> Result<ThroughputReport> {
    config.validate()?;
    let n = sequence.len();
    if n < MIN_THROUGHPUT_FRAMES {
        return Err(Error::SequenceTooShort {
            needed: MIN_THROUGHPUT_FRAMES,
            got: n,
        });
    }
    let warm = Sequence::new(sequence.frames()[..2].to_vec(), sequence.frame_interval())?;
    with_workers(1, || compress_inner(&warm, config))??;
    let single = with_workers(1, || compress_inner(sequence, config))??;
    let multi_workers = effective_workers(config.workers);
    let multi = with_workers(multi_workers, || compress_inner(sequence, config))??;
    let (width, height) = sequence.dims();
    Ok(ThroughputReport {
        host_cpu: host_cpu(),
        available_cores: effective_workers(0),
        frames: n,
        width,
        height,
        single_worker_fps: n as f64 / single.wall_secs,
        multi_worker_fps: n as f64 / multi.wall_secs,
        multi_workers,
        total_secs: single.wall_secs,
        stages: single.timings,
    })
}
