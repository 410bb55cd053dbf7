//! On-disk layout of a synthetic dataset:
//!
//! ```text
//! <dir>/manifest.txt        generator spec, key=value
//! <dir>/frames/frame_NNNN.pgm
//! <dir>/truth/mask_NNNN.pbm
//! <dir>/trajectories.csv    cell,frame,x,y,radius,contrast,low_contrast
//! ```

use std::fs;
use std::path::Path;

use flowroi::io::{self, ImageFormat};
use flowroi::synth::{CellTrack, GroundTruth, SyntheticSpec, TrackPoint};
use flowroi::{Sequence, RoiMask};
use serde::{Deserialize, Serialize};

use crate::common::{ensure_dir, frame_name, load_masks, mask_name};
use crate::error::{CliError, CliResult, Context};

pub const MANIFEST: &str = "manifest.txt";
pub const FRAMES_DIR: &str = "frames";
pub const TRUTH_DIR: &str = "truth";
pub const TRAJECTORIES: &str = "trajectories.csv";

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    cell: usize,
    frame: usize,
    x: f64,
    y: f64,
    radius: f64,
    contrast: f64,
    low_contrast: bool,
}

pub fn write_dataset(dir: &Path, spec: &SyntheticSpec, seq: &Sequence, truth: &GroundTruth) -> CliResult<()> {
    let frames_dir = dir.join(FRAMES_DIR);
    let truth_dir = dir.join(TRUTH_DIR);
    ensure_dir(&frames_dir)?;
    ensure_dir(&truth_dir)?;
    fs::write(dir.join(MANIFEST), spec.to_kv()).ctx("writing manifest")?;
    for (t, f) in seq.frames().iter().enumerate() {
        io::save_frame(f, &frames_dir.join(frame_name(t, "pgm")), ImageFormat::Pgm)?;
    }
    for (t, m) in truth.masks.iter().enumerate() {
        io::save_mask(m, &truth_dir.join(mask_name(t)))?;
    }
    let mut w = csv::Writer::from_path(dir.join(TRAJECTORIES))?;
    for cell in &truth.cells {
        for p in &cell.points {
            w.serialize(TrajectoryRow {
                cell: cell.id,
                frame: p.frame,
                x: p.x,
                y: p.y,
                radius: p.radius,
                contrast: cell.contrast,
                low_contrast: cell.low_contrast,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> CliResult<SyntheticSpec> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).ctx(format!("reading {}", path.display()))?;
    SyntheticSpec::from_kv(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Ground truth of a dataset directory written by `synth`.
pub fn load_truth(dir: &Path) -> CliResult<GroundTruth> {
    let spec = read_manifest(dir)?;
    let masks: Vec<RoiMask> = load_masks(&dir.join(TRUTH_DIR))?;
    let mut cells: Vec<CellTrack> = Vec::new();
    let mut r = csv::Reader::from_path(dir.join(TRAJECTORIES)).ctx("reading trajectories")?;
    for row in r.deserialize() {
        let row: TrajectoryRow = row?;
        if cells.last().is_none_or(|c| c.id != row.cell) {
            cells.push(CellTrack {
                id: row.cell,
                radius: row.radius,
                contrast: row.contrast,
                low_contrast: row.low_contrast,
                points: Vec::new(),
            });
        }
        let cell = cells.last_mut().expect("pushed above");
        if row.frame != cell.points.len() {
            return Err(CliError::data(format!(
                "trajectories: cell {} frame {} out of order",
                row.cell, row.frame
            )));
        }
        cell.points.push(TrackPoint {
            frame: row.frame,
            x: row.x,
            y: row.y,
            radius: row.radius,
        });
    }
    if let Some(c) = cells.iter().find(|c| c.points.len() != masks.len()) {
        return Err(CliError::data(format!(
            "trajectories: cell {} has {} points for {} truth masks",
            c.id,
            c.points.len(),
            masks.len()
        )));
    }
    Ok(GroundTruth {
        width: spec.width,
        height: spec.height,
        masks,
        cells,
        noise_sigma: spec.noise_sigma,
    })
}
