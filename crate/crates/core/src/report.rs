//! Tables and figures: regression and portfolio tables as CSV/markdown,
//! and static SVG charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::econ::{effect_bps, RegressionResult};
use crate::error::{Error, Result};
use crate::network::PowerLawFit;
use crate::portfolio::PortfolioReport;
use crate::stats::{fit_line, nearest_rank_quantile, LineFit};

/// A rectangular table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Csv { path: "<table>".into(), message: e.to_string() };
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv { path: "<table>".into(), message: e.to_string() })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "| {} |", self.header.join(" | "));
        let _ = writeln!(s, "|{}", "---|".repeat(self.header.len()));
        for r in &self.rows {
            let _ = writeln!(s, "| {} |", r.join(" | "));
        }
        s
    }

    /// Writes `<stem>.csv` and `<stem>.md` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        write_text(&dir.join(format!("{stem}.csv")), &self.to_csv()?)?;
        write_text(&dir.join(format!("{stem}.md")), &self.to_markdown())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.digits$}"),
        _ => String::new(),
    }
}

/// Coefficients with t-statistics in parentheses beneath them, one column
/// per model. Variables absent from a model leave blank cells.
pub fn regression_table(models: &[(String, RegressionResult)]) -> Table {
    let mut vars: Vec<String> = Vec::new();
    for (_, m) in models {
        for n in &m.names {
            if !vars.contains(n) {
                vars.push(n.clone());
            }
        }
    }
    let mut header = vec!["variable".to_string()];
    header.extend(models.iter().map(|(label, _)| label.clone()));
    let mut rows = Vec::new();
    for v in &vars {
        let mut coef = vec![v.clone()];
        let mut t = vec![String::new()];
        for (_, m) in models {
            coef.push(opt(m.coef(v), 4));
            t.push(m.t_of(v).filter(|x| x.is_finite()).map_or(String::new(), |x| format!("({x:.2})")));
        }
        rows.push(coef);
        rows.push(t);
    }
    let mut n = vec!["N".to_string()];
    let mut r2 = vec!["R2".to_string()];
    let mut cov = vec!["cov".to_string()];
    for (_, m) in models {
        n.push(m.nobs.to_string());
        r2.push(format!("{:.4}", m.r2));
        cov.push(m.cov_tag.to_string());
    }
    rows.extend([n, r2, cov]);
    Table { header, rows }
}

pub const PORTFOLIO_COLUMNS: [&str; 12] = [
    "portfolio", "Mean", "SR", "%MV", "B/M", "Liquidity", "FF3 alpha", "FF3 t", "FF3 R2", "FF5 alpha", "FF5 t", "FF5 R2",
];

/// One row per rank, the long-short spread and the market. Means and
/// alphas are in percent per period.
pub fn portfolio_table(report: &PortfolioReport) -> Table {
    let rows = report
        .rows
        .iter()
        .map(|r| {
            let p = &r.performance;
            let s = &r.snapshot;
            vec![
                r.label.clone(),
                format!("{:.4}", p.mean * 100.0),
                format!("{:.2}", p.sharpe),
                opt(s.pct_mv, 2),
                opt(s.bm, 3),
                opt(s.liquidity.map(|x| x * 100.0), 3),
                format!("{:.4}", p.ff3.alpha * 100.0),
                format!("{:.2}", p.ff3.t),
                format!("{:.3}", p.ff3.r2),
                format!("{:.4}", p.ff5.alpha * 100.0),
                format!("{:.2}", p.ff5.t),
                format!("{:.3}", p.ff5.r2),
            ]
        })
        .collect();
    Table { header: PORTFOLIO_COLUMNS.iter().map(|s| s.to_string()).collect(), rows }
}

/// `"112.6 bps"` for `β = 0.752`, `σ = 0.01497`.
pub fn effect_line(beta: f64, sigma_x: f64) -> String {
    format!("{:.1} bps", effect_bps(beta, sigma_x))
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn svg_open(s: &mut String, title: &str, frame: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect class="axes" x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="25" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (v, anchor, x, y) in [
        (frame.x0, "start", MARGIN, H - MARGIN + 14.0),
        (frame.x1, "end", W - MARGIN, H - MARGIN + 14.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.4}</text>"#);
    }
    for (v, y) in [(frame.y0, H - MARGIN), (frame.y1, MARGIN + 10.0)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.4}</text>"#, MARGIN - 4.0);
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// OLS line with a pair-bootstrap percentile band evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapBand {
    pub fit: LineFit,
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Resamples `(x, y)` pairs with replacement `resamples` times and takes
/// the 2.5% and 97.5% percentiles of the fitted value at each grid point.
pub fn bootstrap_band(x: &[f64], y: &[f64], resamples: usize, seed: u64) -> Result<BootstrapBand> {
    let fit = fit_line(x, y).ok_or_else(|| Error::InsufficientSupport("scatter needs two distinct x values".into()))?;
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let grid: Vec<f64> = (0..=40).map(|i| lo + (hi - lo) * i as f64 / 40.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.len();
    let mut preds: Vec<Vec<f64>> = vec![Vec::with_capacity(resamples); grid.len()];
    let (mut bx, mut by) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..resamples {
        for i in 0..n {
            let j = rng.random_range(0..n);
            bx[i] = x[j];
            by[i] = y[j];
        }
        // a resample with constant x has no slope; skip it
        let Some(f) = fit_line(&bx, &by) else { continue };
        for (g, p) in grid.iter().zip(preds.iter_mut()) {
            p.push(f.intercept + f.slope * g);
        }
    }
    let pct = |p: &Vec<f64>, q: f64| nearest_rank_quantile(p, q).unwrap_or(f64::NAN);
    let lower = preds.iter().map(|p| pct(p, 0.025)).collect();
    let upper = preds.iter().map(|p| pct(p, 0.975)).collect();
    Ok(BootstrapBand { fit, grid, lower, upper })
}

/// Scatter of `y` against `x` with one OLS line and its bootstrap band.
/// Every point is a `<circle>`; the fitted line is the only `<line>`.
pub fn scatter_svg(x: &[f64], y: &[f64], x_label: &str, y_label: &str, band: &BootstrapBand) -> String {
    let frame = Frame::fit(x.iter().copied(), y.iter().copied());
    let mut s = String::new();
    svg_open(&mut s, &format!("{y_label} against {x_label}"), &frame, x_label, y_label);
    let mut poly = String::new();
    for (g, u) in band.grid.iter().zip(&band.upper) {
        let _ = write!(poly, "{:.2},{:.2} ", frame.px(*g), frame.py(*u));
    }
    for (g, l) in band.grid.iter().zip(&band.lower).rev() {
        let _ = write!(poly, "{:.2},{:.2} ", frame.px(*g), frame.py(*l));
    }
    let _ = writeln!(s, r#"<polygon class="band" points="{}" fill="steelblue" fill-opacity="0.25" stroke="none"/>"#, poly.trim_end());
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="black" fill-opacity="0.4"/>"#, frame.px(*a), frame.py(*b));
    }
    let (g0, g1) = (band.grid[0], band.grid[band.grid.len() - 1]);
    let f = band.fit;
    let _ = writeln!(
        s,
        r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="2"/>"#,
        frame.px(g0),
        frame.py(f.intercept + f.slope * g0),
        frame.px(g1),
        frame.py(f.intercept + f.slope * g1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11">slope {:.4}, intercept {:.6}, R2 {:.4}</text>"#,
        MARGIN + 6.0,
        MARGIN + 14.0,
        f.slope,
        f.intercept,
        f.r2
    );
    s.push_str("</svg>\n");
    s
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// Cumulative return paths, one `<polyline>` per series.
pub fn cumulative_svg(paths: &BTreeMap<String, Vec<(NaiveDate, f64)>>, title: &str) -> String {
    let dates: Vec<NaiveDate> = {
        let mut d: Vec<NaiveDate> = paths.values().flatten().map(|(d, _)| *d).collect();
        d.sort_unstable();
        d.dedup();
        d
    };
    let pos: BTreeMap<NaiveDate, f64> = dates.iter().enumerate().map(|(i, d)| (*d, i as f64)).collect();
    let frame = Frame::fit(
        [0.0, dates.len().saturating_sub(1).max(1) as f64].into_iter(),
        paths.values().flatten().map(|(_, v)| *v).chain([0.0]),
    );
    let mut s = String::new();
    svg_open(&mut s, title, &frame, "period", "cumulative return");
    if let (Some(a), Some(b)) = (dates.first(), dates.last()) {
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}" font-size="10">{a}</text>"#, H - MARGIN + 26.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{b}</text>"#, W - MARGIN, H - MARGIN + 26.0);
    }
    for (n, (label, path)) in paths.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let pts: Vec<String> = path.iter().map(|(d, v)| format!("{:.2},{:.2}", frame.px(pos[d]), frame.py(*v))).collect();
        let _ = writeln!(s, r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, escape(label), pts.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#, W - MARGIN + 4.0, MARGIN + 14.0 * (n as f64 + 1.0), escape(label));
    }
    s.push_str("</svg>\n");
    s
}

/// Log-log plot of degree frequencies with the fitted power law.
pub fn degree_svg(points: &[(u32, f64)], fit: &PowerLawFit) -> String {
    let lx: Vec<f64> = points.iter().map(|(d, _)| f64::from(*d).ln()).collect();
    let ly: Vec<f64> = points.iter().map(|(_, f)| f.ln()).collect();
    let line_y = |x: f64| fit.c_log - fit.gamma * x;
    let frame = Frame::fit(lx.iter().copied(), ly.iter().copied().chain(lx.iter().map(|x| line_y(*x))));
    let mut s = String::new();
    svg_open(&mut s, "Degree distribution", &frame, "log degree", "log frequency");
    for (x, y) in lx.iter().zip(&ly) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#, frame.px(*x), frame.py(*y));
    }
    let (x0, x1) = bounds(lx.iter().copied());
    let _ = writeln!(
        s,
        r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="2"/>"#,
        frame.px(x0),
        frame.py(line_y(x0)),
        frame.px(x1),
        frame.py(line_y(x1))
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11">gamma {:.3}, R2 {:.3}</text>"#, W - MARGIN - 150.0, MARGIN + 14.0, fit.gamma, fit.r2);
    s.push_str("</svg>\n");
    s
}
