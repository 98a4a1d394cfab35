//! CSV and SVG renderers. Both are pure functions of their inputs, so equal
//! inputs give byte-identical files.
//!
//! Aggregate CSV: `round,mean_regret,q025,q975`.
//! Trace CSV: `round,a1,…,am,regret,s,flags`, where `aj` is agent `j`'s
//! action as a 1-based code (arm `a`, or `a·k + b` for the ordered pair
//! `(a, b)` with 0-based `a`, `b`, plus one), `s` is the pseudo-round count
//! and `flags` the invariant bitmask of that round.
//!
//! Reals use 17 significant digits so parsing returns the exact values.

use std::fmt::Write as _;
use std::path::Path;

use super::{AggregateStats, ExperimentError};
use crate::sim::RunTrace;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn aggregate_csv(stats: &AggregateStats) -> String {
    let mut out = String::from("round,mean_regret,q025,q975\n");
    for t in 0..stats.rounds() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            t + 1,
            real(stats.mean[t]),
            real(stats.q025[t]),
            real(stats.q975[t])
        );
    }
    out
}

pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from("round");
    for j in 1..=trace.m {
        let _ = write!(out, ",a{j}");
    }
    out.push_str(",regret,s,flags\n");
    for t in 0..trace.rounds() {
        let _ = write!(out, "{}", t + 1);
        for &code in trace.round_actions(t) {
            let _ = write!(out, ",{}", code + 1);
        }
        let _ = writeln!(out, ",{},{},{}", real(trace.regret[t]), trace.pseudo_rounds[t], trace.flags[t]);
    }
    out
}

fn parse_err(line: usize, what: &str) -> ExperimentError {
    ExperimentError::Parse(format!("line {line}: {what}"))
}

fn field<T: std::str::FromStr>(raw: Option<&str>, line: usize, name: &str) -> Result<T, ExperimentError> {
    raw.ok_or_else(|| parse_err(line, &format!("missing {name}")))?
        .trim()
        .parse()
        .map_err(|_| parse_err(line, &format!("bad {name}")))
}

/// Parses an aggregate CSV; `runs` is unknown from the file and set to 0.
pub fn parse_aggregate_csv(text: &str) -> Result<AggregateStats, ExperimentError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("round,mean_regret,q025,q975") {
        return Err(parse_err(1, "expected header round,mean_regret,q025,q975"));
    }
    let mut stats = AggregateStats {
        runs: 0,
        mean: Vec::new(),
        q025: Vec::new(),
        q975: Vec::new(),
        envelope_violations: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let mut cols = line.split(',');
        let round: usize = field(cols.next(), n, "round")?;
        if round != i + 1 {
            return Err(parse_err(n, "rounds must be consecutive from 1"));
        }
        stats.mean.push(field(cols.next(), n, "mean_regret")?);
        stats.q025.push(field(cols.next(), n, "q025")?);
        stats.q975.push(field(cols.next(), n, "q975")?);
    }
    Ok(stats)
}

/// Columns of a trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub m: usize,
    /// 0-based codes, row-major like [`RunTrace::actions`].
    pub actions: Vec<u32>,
    pub regret: Vec<f64>,
    pub pseudo_rounds: Vec<u64>,
    pub flags: Vec<u8>,
}

pub fn parse_trace_csv(text: &str) -> Result<TraceTable, ExperimentError> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| parse_err(1, "empty file"))?.split(',').collect();
    if header.len() < 4 || header[0] != "round" || header[header.len() - 3..] != ["regret", "s", "flags"] {
        return Err(parse_err(1, "expected header round,a1,…,am,regret,s,flags"));
    }
    let m = header.len() - 4;
    let mut table = TraceTable {
        m,
        actions: Vec::new(),
        regret: Vec::new(),
        pseudo_rounds: Vec::new(),
        flags: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != m + 4 {
            return Err(parse_err(n, "wrong number of columns"));
        }
        for raw in &cols[1..=m] {
            let code: u32 = field(Some(raw), n, "action")?;
            if code == 0 {
                return Err(parse_err(n, "action codes start at 1"));
            }
            table.actions.push(code - 1);
        }
        table.regret.push(field(Some(cols[m + 1]), n, "regret")?);
        table.pseudo_rounds.push(field(Some(cols[m + 2]), n, "s")?);
        table.flags.push(field(Some(cols[m + 3]), n, "flags")?);
    }
    Ok(table)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const MAX_POINTS: usize = 1000;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Rounds to draw: every round when short, otherwise an even stride that
/// always keeps the last round.
fn sample_rounds(n: usize) -> Vec<usize> {
    if n <= MAX_POINTS {
        return (0..n).collect();
    }
    let stride = n.div_ceil(MAX_POINTS);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

/// Readable tick step (1, 2 or 5 times a power of ten) for about five ticks.
fn tick_step(max: f64) -> f64 {
    if max <= 0.0 {
        return 1.0;
    }
    let raw = max / 5.0;
    let pow = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|f| f * pow)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * pow)
}

fn tick_label(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e9 {
        format!("{}", x as i64)
    } else {
        format!("{x:.3}")
    }
}

/// Line plot of mean cumulative group regret with shaded 2.5–97.5% bands.
pub fn render_svg(series: &[(&str, &AggregateStats)]) -> Result<String, ExperimentError> {
    if series.is_empty() {
        return Err(ExperimentError::Plot("nothing to plot".into()));
    }
    let n = series[0].1.rounds();
    if series.iter().any(|(_, s)| s.rounds() != n) {
        return Err(ExperimentError::Plot("series have different lengths".into()));
    }
    if n == 0 {
        return Err(ExperimentError::Plot("series are empty".into()));
    }
    let y_max = series
        .iter()
        .flat_map(|(_, s)| s.q975.iter().chain(&s.mean))
        .fold(0.0f64, |a, &b| a.max(b));
    let x_step = tick_step(n as f64);
    let y_step = tick_step(y_max);
    let x_top = (n as f64 / x_step).ceil().max(1.0) * x_step;
    let y_top = (y_max / y_step).ceil().max(1.0) * y_step;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |round: usize| LEFT + plot_w * round as f64 / x_top;
    let py = |y: f64| TOP + plot_h * (1.0 - y / y_top);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let mut x = 0.0;
    while x <= x_top + 1e-9 {
        let gx = px(x as usize);
        let _ = writeln!(
            svg,
            r##"<line x1="{gx:.2}" y1="{:.2}" x2="{gx:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{gx:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + plot_h,
            TOP + plot_h + 18.0,
            tick_label(x)
        );
        x += x_step;
    }
    let mut y = 0.0;
    while y <= y_top + 1e-9 {
        let gy = py(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{gy:.2}" x2="{:.2}" y2="{gy:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            gy + 4.0,
            tick_label(y)
        );
        y += y_step;
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">round</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(20 {:.2}) rotate(-90)" text-anchor="middle">cumulative group regret</text>"#,
        TOP + plot_h / 2.0
    );

    let rounds = sample_rounds(n);
    for (i, (label, stats)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for &t in &rounds {
            let _ = write!(band, "{}{:.2},{:.2} ", if band.is_empty() { "M" } else { "L" }, px(t + 1), py(stats.q975[t]));
        }
        for &t in rounds.iter().rev() {
            let _ = write!(band, "L{:.2},{:.2} ", px(t + 1), py(stats.q025[t]));
        }
        band.push('Z');
        let _ = writeln!(svg, r#"<path class="band" d="{band}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#);
        let mut line = String::new();
        for &t in &rounds {
            let _ = write!(line, "{}{:.2},{:.2} ", if line.is_empty() { "M" } else { "L" }, px(t + 1), py(stats.mean[t]));
        }
        let _ = writeln!(
            svg,
            r#"<path class="mean" d="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            line.trim_end()
        );
        let ly = TOP + 16.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
