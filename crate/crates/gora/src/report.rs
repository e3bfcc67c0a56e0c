//! CSV records and SVG charts of a sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::harness::{CellSummary, Summary, TrialRecord};

pub const CSV_HEADER: [&str; 8] = [
    "T",
    "trial",
    "algorithm",
    "seed",
    "E0",
    "Ef",
    "runtime_s",
    "inefficiency",
];
const MISSING: &str = "NA";

pub fn write_csv<W: std::io::Write>(records: &[TrialRecord], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.trial.to_string(),
            r.algorithm.to_string(),
            r.seed.to_string(),
            r.e0.to_string(),
            r.ef.to_string(),
            r.runtime_s.to_string(),
            r.inefficiency
                .map_or_else(|| MISSING.to_string(), |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[TrialRecord], path: &Path) -> anyhow::Result<()> {
    if records.is_empty() {
        bail!("no records to write");
    }
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(records, std::io::BufWriter::new(file))
}

pub fn parse_csv<R: std::io::Read>(input: R) -> anyhow::Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(CSV_HEADER) {
        bail!("unexpected CSV header {:?}", rd.headers()?);
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let field = |i: usize| &row[i];
        let parse = || -> anyhow::Result<TrialRecord> {
            Ok(TrialRecord {
                t: field(0).parse()?,
                trial: field(1).parse()?,
                algorithm: field(2).parse()?,
                seed: field(3).parse()?,
                e0: field(4).parse()?,
                ef: field(5).parse()?,
                runtime_s: field(6).parse()?,
                inefficiency: match field(7) {
                    MISSING => None,
                    v => Some(v.parse()?),
                },
            })
        };
        out.push(parse().with_context(|| format!("CSV row {}", line + 2))?);
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> anyhow::Result<Vec<TrialRecord>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_csv(std::io::BufReader::new(file))
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6a4c93", "#00798c", "#8d6a9f", "#3d3b30",
];

struct Chart<'a> {
    title: &'a str,
    y_label: &'a str,
    log_y: bool,
    series: Vec<(String, Vec<(f64, f64)>)>,
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + 1e-9 * step {
        out.push(v);
        v += step;
    }
    out
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        format!("{}", (v * 1e4).round() / 1e4)
    }
}

fn render(chart: &Chart) -> String {
    let transform = |y: f64| if chart.log_y { y.log10() } else { y };
    let pts: Vec<(f64, f64)> = chart
        .series
        .iter()
        .flat_map(|(_, p)| p.iter().copied())
        .filter(|p| p.1.is_finite() && (!chart.log_y || p.1 > 0.0))
        .map(|(x, y)| (x, transform(y)))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !chart.log_y {
        y0 = y0.min(0.0);
    }
    if y1 - y0 <= 0.0 {
        y1 = y0 + 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        chart.title
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/>"##,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            label(t)
        );
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let shown = if chart.log_y { 10f64.powf(t) } else { t };
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            label(shown)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">T (frames)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        chart.y_label
    );
    for (k, (name, points)) in chart.series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .filter(|p| p.1.is_finite() && (!chart.log_y || p.1 > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(transform(y))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"><title>{name}</title></polyline>"#,
            coords.join(" ")
        );
        let ly = TOP + 14.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{name}</text>"#,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn chart<'a>(
    summary: &Summary,
    title: &'a str,
    y_label: &'a str,
    log_y: bool,
    value: impl Fn(&CellSummary) -> Option<f64> + Copy,
) -> Chart<'a> {
    let series = summary
        .algorithms()
        .into_iter()
        .map(|id| (id.to_string(), summary.series(id, value)))
        .collect();
    Chart {
        title,
        y_label,
        log_y,
        series,
    }
}

/// Writes `runtime.svg`, `error.svg` and `inefficiency.svg` into `dir`, one
/// line per algorithm, and returns their paths.
pub fn emit_plots(summary: &Summary, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if summary.cells.is_empty() {
        bail!("nothing to plot");
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let charts = [
        (
            "runtime.svg",
            chart(summary, "Mean run time", "seconds (log scale)", true, |c| {
                Some(c.mean_runtime_s)
            }),
        ),
        (
            "error.svg",
            chart(summary, "Mean error after alignment", "E_f", false, |c| {
                Some(c.mean_ef)
            }),
        ),
        (
            "inefficiency.svg",
            chart(
                summary,
                "Mean alignment inefficiency",
                "E_f T_R / E_0",
                false,
                |c| c.mean_inefficiency,
            ),
        ),
    ];
    let mut paths = Vec::with_capacity(charts.len());
    for (file, c) in &charts {
        let path = dir.join(file);
        fs::write(&path, render(c)).with_context(|| format!("writing {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Plain-text table of the per-cell means and fits.
pub fn format_summary(summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5}  {:<12} {:>6} {:>12} {:>12} {:>12} {:>12}",
        "T", "algorithm", "trials", "runtime_s", "E_f", "E_f/E0", "ineff"
    );
    let na = |v: Option<f64>| v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.4e}"));
    for c in &summary.cells {
        let _ = writeln!(
            s,
            "{:>5}  {:<12} {:>6} {:>12.4e} {:>12.4e} {:>12} {:>12}",
            c.t,
            c.algorithm.to_string(),
            c.trials,
            c.mean_runtime_s,
            c.mean_ef,
            na(c.mean_error_ratio),
            na(c.mean_inefficiency)
        );
    }
    for f in &summary.fits {
        let _ = writeln!(
            s,
            "{:<12} log-log runtime slope {}, inefficiency slope {}",
            f.algorithm.to_string(),
            f.runtime_loglog_slope
                .map_or_else(|| MISSING.to_string(), |v| format!("{v:.3}")),
            na(f.inefficiency_slope)
        );
    }
    s
}
