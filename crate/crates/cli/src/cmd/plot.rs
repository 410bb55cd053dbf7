use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use crate::cmd::sweep::SweepRow;
use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Metric {
    PsnrRoi,
    PsnrGlobal,
    PsnrBackground,
}

impl Metric {
    fn pick(self, r: &SweepRow) -> Option<f64> {
        match self {
            Metric::PsnrRoi => r.psnr_roi,
            Metric::PsnrGlobal => Some(r.psnr_global),
            Metric::PsnrBackground => r.psnr_background,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::PsnrRoi => "RoI PSNR (dB)",
            Metric::PsnrGlobal => "Global PSNR (dB)",
            Metric::PsnrBackground => "Background PSNR (dB)",
        }
    }
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Sweep CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output SVG.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "psnr-roi")]
    pub metric: Metric,
}

pub type Series = BTreeMap<String, Vec<(f64, f64)>>;

/// Mean metric per (method, rate); rows sharing a rate are averaged and
/// infinite values dropped.
pub fn collect_series(rows: &[SweepRow], metric: Metric) -> Series {
    let mut acc: BTreeMap<String, BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
    for r in rows {
        let Some(v) = metric.pick(r).filter(|v| v.is_finite()) else {
            continue;
        };
        let e = acc
            .entry(r.method.clone())
            .or_default()
            .entry(r.compression_rate.to_bits())
            .or_insert((r.compression_rate, 0.0, 0));
        e.1 += v;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(m, pts)| {
            let mut v: Vec<(f64, f64)> = pts.into_values().map(|(x, s, n)| (x, s / n as f64)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            (m, v)
        })
        .collect()
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 64.0;
const MR: f64 = 24.0;
const MT: f64 = 24.0;
const MB: f64 = 52.0;
const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

pub fn render_svg(series: &Series, y_label: &str) -> String {
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    y0 = y0.floor() - 1.0;
    y1 = y1.ceil() + 1.0;
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (bx, by) = (H - MB, W - MR);
    let _ = writeln!(s, r#"<line x1="{ML}" y1="{bx}" x2="{by}" y2="{bx}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{bx}" stroke="black"/>"#);
    for t in ticks(x0, x1, 5) {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{bx}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{t:.0}</text>"#,
            bx + 5.0,
            bx + 18.0
        );
    }
    for t in ticks(y0, y1, 5) {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{ML}" y2="{y:.1}" stroke="black"/><line x1="{ML}" y1="{y:.1}" x2="{by}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{t:.1}</text>"##,
            ML - 5.0,
            ML - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Compression rate</text>"#,
        (ML + W - MR) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{y_label}</text>"#,
        (MT + H - MB) / 2.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = MT + 10.0 + 18.0 * i as f64;
        let lx = W - MR - 120.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            display_name(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn display_name(method: &str) -> &str {
    match method {
        "flowroi" => "FlowRoI",
        "uniform" => "Uniform",
        other => other,
    }
}

pub fn run(args: &PlotArgs) -> CliResult<()> {
    let mut r = csv::Reader::from_path(&args.input).ctx(format!("reading {}", args.input.display()))?;
    let rows: Vec<SweepRow> = r.deserialize().collect::<Result<_, _>>()?;
    let series = collect_series(&rows, args.metric);
    if series.is_empty() {
        return Err(CliError::data(format!("{} has no finite points to plot", args.input.display())));
    }
    fs::write(&args.out, render_svg(&series, args.metric.label())).ctx(format!("writing {}", args.out.display()))
}
