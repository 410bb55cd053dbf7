use std::fs;
use std::path::PathBuf;

use clap::Args;
use flowroi::synth::{generate_synthetic, SyntheticSpec};
use serde::Serialize;

use crate::common::{emit_json, REPORT_SCHEMA_VERSION};
use crate::dataset::{write_dataset, FRAMES_DIR, TRUTH_DIR};
use crate::error::{CliError, CliResult, Context};
use crate::Globals;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output dataset directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Start from a previously written manifest; other flags override it.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long)]
    pub frames: Option<String>,
    #[arg(long)]
    pub width: Option<String>,
    #[arg(long)]
    pub height: Option<String>,
    /// Cell radius range `min,max` in pixels.
    #[arg(long, value_name = "MIN,MAX")]
    pub radius: Option<String>,
    /// Cell contrast range `min,max` in 8-bit gray levels.
    #[arg(long, value_name = "MIN,MAX")]
    pub contrast: Option<String>,
    /// Cell speed range `min,max` in pixels per frame.
    #[arg(long, value_name = "MIN,MAX")]
    pub speed: Option<String>,
    #[arg(long)]
    pub noise_sigma: Option<String>,
    /// 8 or 16.
    #[arg(long)]
    pub depth: Option<String>,
    #[arg(long)]
    pub low_contrast_fraction: Option<String>,
    #[arg(long)]
    pub background: Option<String>,
    #[arg(long)]
    pub gradient: Option<String>,
    #[arg(long)]
    pub texture: Option<String>,
    #[arg(long)]
    pub frame_interval: Option<String>,
}

impl SynthArgs {
    fn overrides(&self) -> [(&'static str, &Option<String>); 14] {
        [
            ("cells", &self.cells),
            ("frames", &self.frames),
            ("width", &self.width),
            ("height", &self.height),
            ("radius", &self.radius),
            ("contrast", &self.contrast),
            ("speed", &self.speed),
            ("noise_sigma", &self.noise_sigma),
            ("depth", &self.depth),
            ("low_contrast_fraction", &self.low_contrast_fraction),
            ("background", &self.background),
            ("gradient", &self.gradient),
            ("texture", &self.texture),
            ("frame_interval", &self.frame_interval),
        ]
    }

    pub fn spec(&self, seed: Option<&str>) -> CliResult<SyntheticSpec> {
        let mut spec = match &self.manifest {
            Some(p) => {
                let text = fs::read_to_string(p).ctx(format!("reading {}", p.display()))?;
                SyntheticSpec::from_kv(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?
            }
            None => SyntheticSpec::default(),
        };
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                spec.set(key, v).map_err(CliError::usage)?;
            }
        }
        if let Some(s) = seed {
            spec.set("seed", s).map_err(CliError::usage)?;
        }
        spec.validate().map_err(CliError::usage)?;
        Ok(spec)
    }
}

#[derive(Serialize)]
struct SynthReport<'a> {
    schema_version: u32,
    command: &'static str,
    spec: &'a SyntheticSpec,
    frames_dir: String,
    truth_dir: String,
    cells: usize,
    mean_truth_fraction: f64,
}

pub fn run(args: &SynthArgs, globals: &Globals) -> CliResult<()> {
    let spec = args.spec(globals.flags.get("seed"))?;
    let (seq, truth) = generate_synthetic(&spec)?;
    write_dataset(&args.out, &spec, &seq, &truth)?;
    if let Some(path) = &globals.report_out {
        let n = truth.masks.len().max(1) as f64;
        let report = SynthReport {
            schema_version: REPORT_SCHEMA_VERSION,
            command: "synth",
            spec: &spec,
            frames_dir: FRAMES_DIR.into(),
            truth_dir: TRUTH_DIR.into(),
            cells: truth.cells.len(),
            mean_truth_fraction: truth.masks.iter().map(|m| m.fraction()).sum::<f64>() / n,
        };
        emit_json(&report, Some(path))?;
    }
    eprintln!(
        "wrote {} frames of {}x{} with {} cells to {}",
        seq.len(),
        spec.width,
        spec.height,
        spec.n_cells,
        args.out.display()
    );
    Ok(())
}
