use std::collections::{BTreeMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use flowroi::io::ImageFormat;
use flowroi::metrics::{coverage, rate_point, CoverageReport, RateRow};
use flowroi::roi::extract_roi;
use flowroi::synth::GroundTruth;
use flowroi::{Error, PipelineConfig, RoiMask};
use serde::{Deserialize, Serialize};

use crate::common::{config_hash, load_frames, on_workers};
use crate::dataset::load_truth;
use crate::error::{CliError, CliResult, Context};
use crate::Globals;

pub const MAX_COMBINATIONS: usize = 10_000;

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory of input frames.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output CSV; rows are appended.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Completed-combination log. Defaults to `<out>.log`.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Synthetic dataset directory; region PSNR then uses ground-truth cells
    /// and coverage columns are filled.
    #[arg(long, value_name = "DIR")]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "pgm")]
    pub format: ImageFormat,
    /// Denoise settings to sweep, e.g. `on,off`.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub denoise_modes: Vec<String>,
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub thresholds: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub adjacent_factors: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub scaling_factors: Vec<u8>,
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub rates: Vec<f64>,
}

/// One CSV line: a method at one hyperparameter combination, averaged over frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_hash: String,
    pub denoise: bool,
    pub roi_threshold: f64,
    pub adjacent_factor: usize,
    pub scaling_factor: u8,
    pub compression_rate: f64,
    pub method: String,
    pub psnr_global: f64,
    pub psnr_roi: Option<f64>,
    pub psnr_background: Option<f64>,
    pub achieved_ratio: f64,
    pub mask_fraction: f64,
    pub coverage_rate: Option<f64>,
    pub high_contrast_rate: Option<f64>,
}

struct Grid {
    denoise: Vec<bool>,
    thresholds: Vec<f64>,
    adjacent: Vec<usize>,
    scaling: Vec<u8>,
    rates: Vec<f64>,
}

impl Grid {
    fn new(args: &SweepArgs, base: &PipelineConfig) -> CliResult<Self> {
        let denoise = if args.denoise_modes.is_empty() {
            vec![base.denoise.enabled]
        } else {
            args.denoise_modes
                .iter()
                .map(|v| {
                    let mut c = base.clone();
                    c.set("denoise", v).map(|_| c.denoise.enabled)
                })
                .collect::<Result<_, _>>()
                .map_err(CliError::usage)?
        };
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let grid = Self {
            denoise,
            thresholds: or(&args.thresholds, base.roi.roi_threshold),
            adjacent: if args.adjacent_factors.is_empty() {
                vec![base.roi.adjacent_factor]
            } else {
                args.adjacent_factors.clone()
            },
            scaling: if args.scaling_factors.is_empty() {
                vec![base.codec.scaling_factor]
            } else {
                args.scaling_factors.clone()
            },
            rates: or(&args.rates, base.codec.compression_rate),
        };
        let n = grid.len();
        if n > MAX_COMBINATIONS {
            return Err(CliError::usage(format!(
                "grid has {n} combinations; at most {MAX_COMBINATIONS} are allowed"
            )));
        }
        Ok(grid)
    }

    fn len(&self) -> usize {
        [
            self.denoise.len(),
            self.thresholds.len(),
            self.adjacent.len(),
            self.scaling.len(),
            self.rates.len(),
        ]
        .iter()
        .fold(1usize, |a, &b| a.saturating_mul(b))
    }
}

fn read_done(log: &Path) -> CliResult<HashSet<String>> {
    match fs::read_to_string(log) {
        Ok(text) => Ok(text
            .lines()
            .filter_map(|l| l.split_whitespace().next())
            .map(str::to_string)
            .collect()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(HashSet::new()),
        Err(e) => Err(CliError::from(e).context(format!("reading {}", log.display()))),
    }
}

fn append_line(path: &Path, line: &str) -> CliResult<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .ctx(format!("opening {}", path.display()))?;
    writeln!(f, "{line}").ctx(format!("writing {}", path.display()))
}

fn append_rows(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let fresh = fs::metadata(path).map_or(true, |m| m.len() == 0);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .ctx(format!("opening {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn row(hash: &str, config: &PipelineConfig, r: RateRow, mask_fraction: f64, cov: Option<&CoverageReport>) -> SweepRow {
    SweepRow {
        config_hash: hash.to_string(),
        denoise: config.denoise.enabled,
        roi_threshold: config.roi.roi_threshold,
        adjacent_factor: config.roi.adjacent_factor,
        scaling_factor: config.codec.scaling_factor,
        compression_rate: config.codec.compression_rate,
        method: r.method,
        psnr_global: r.psnr_global,
        psnr_roi: r.psnr_roi,
        psnr_background: r.psnr_background,
        achieved_ratio: r.achieved_ratio,
        mask_fraction,
        coverage_rate: cov.map(|c| c.coverage_rate),
        high_contrast_rate: cov.map(|c| c.high_contrast_rate),
    }
}

fn mean_fraction(masks: &[RoiMask]) -> f64 {
    masks.iter().map(|m| m.fraction()).sum::<f64>() / masks.len().max(1) as f64
}

pub fn run(args: &SweepArgs, globals: &Globals) -> CliResult<()> {
    let base = globals.config()?;
    if base.codec.lossless {
        return Err(CliError::usage("sweep needs lossy coding; drop --lossless"));
    }
    let grid = Grid::new(args, &base)?;
    let log = args.log.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".log");
        PathBuf::from(p)
    });
    let done = read_done(&log)?;
    let (seq, _) = load_frames(&args.input, args.format)?;
    let truth: Option<GroundTruth> = args.truth.as_deref().map(load_truth).transpose()?;
    let empty: Vec<RoiMask> = seq.frames().iter().map(|f| RoiMask::empty(f.width(), f.height())).collect();

    let (mut ran, mut skipped, mut infeasible) = (0usize, 0usize, 0usize);
    // uniform rows only depend on the rate (and the regions)
    let mut uniform_cache: BTreeMap<(u64, usize), RateRow> = BTreeMap::new();
    let mut group = 0usize;
    for &denoise in &grid.denoise {
        for &threshold in &grid.thresholds {
            for &adjacent in &grid.adjacent {
                group += 1;
                let mut cfg = base.clone();
                cfg.denoise.enabled = denoise;
                cfg.roi.roi_threshold = threshold;
                cfg.roi.adjacent_factor = adjacent;
                cfg.validate().map_err(CliError::usage)?;
                let combos: Vec<PipelineConfig> = grid
                    .scaling
                    .iter()
                    .flat_map(|&s| {
                        grid.rates.iter().map({
                            let cfg = cfg.clone();
                            move |&r| {
                                let mut c = cfg.clone();
                                c.codec.scaling_factor = s;
                                c.codec.compression_rate = r;
                                c
                            }
                        })
                    })
                    .collect();
                let pending: Vec<&PipelineConfig> =
                    combos.iter().filter(|c| !done.contains(&config_hash(c))).collect();
                skipped += combos.len() - pending.len();
                if pending.is_empty() {
                    continue;
                }
                let masks = on_workers(base.workers, || Ok(extract_roi(&seq, &cfg)?))?;
                let cov = truth.as_ref().map(|t| coverage(&masks, t)).transpose()?;
                let regions: &[RoiMask] = truth.as_ref().map_or(&masks, |t| &t.masks);
                let region_key = if truth.is_some() { 0 } else { group };
                let fraction = mean_fraction(&masks);
                for c in pending {
                    c.validate().map_err(CliError::usage)?;
                    let hash = config_hash(c);
                    let result = on_workers(base.workers, || {
                        let flow = rate_point("flowroi", seq.frames(), &masks, regions, &c.codec)?;
                        let key = (c.codec.compression_rate.to_bits(), region_key);
                        let uniform = match uniform_cache.get(&key) {
                            Some(u) => u.clone(),
                            None => rate_point("uniform", seq.frames(), &empty, regions, &c.codec)?,
                        };
                        Ok::<_, CliError>((flow, uniform))
                    });
                    match result {
                        Ok((flow, uniform)) => {
                            uniform_cache.insert((c.codec.compression_rate.to_bits(), region_key), uniform.clone());
                            let rows = [
                                row(&hash, c, flow, fraction, cov.as_ref()),
                                row(&hash, c, uniform, 0.0, None),
                            ];
                            append_rows(&args.out, &rows)?;
                            append_line(&log, &format!("{hash} ok"))?;
                            ran += 1;
                        }
                        Err(e) if is_infeasible(&e) => {
                            eprintln!("infeasible combination {hash}: {e}");
                            append_line(&log, &format!("{hash} infeasible"))?;
                            infeasible += 1;
                        }
                        Err(e) => return Err(e.context(format!("combination {hash}"))),
                    }
                }
            }
        }
    }
    eprintln!(
        "sweep: {} combinations, {ran} run, {skipped} already done, {infeasible} infeasible",
        grid.len()
    );
    Ok(())
}

fn is_infeasible(e: &CliError) -> bool {
    e.error.chain().any(|c| {
        let inner = c
            .downcast_ref::<Error>()
            .or_else(|| c.downcast_ref::<Box<Error>>().map(|b| &**b));
        matches!(inner, Some(Error::InfeasibleRate { .. } | Error::FrameTooSmall { .. }))
    })
}
