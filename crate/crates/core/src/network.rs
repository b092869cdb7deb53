//! Directed lead-follower news networks over rolling calendar windows.
//!
//! Row `i` of a network holds the leads of follower `i`. Counts `a_ij` are
//! the number of identified `(i, j)` pairs whose information day falls in
//! the window; weights are row-normalized counts `a_ij / Σ_j a_ij`.
//! Decomposed networks keep the full network's weights on the subset of
//! entries passing an indicator, without renormalizing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::Serialize;

use crate::corpus::{window_start, Characteristic, FirmMaster, PriceTable};
use crate::error::{Error, Result};
use crate::identify::Linkage;
use crate::stats::{fit_line, nearest_rank_quantile};

/// Inclusive calendar-date window `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Window {
    /// `[end - days, end]` in calendar days.
    pub fn ending(end: NaiveDate, days: u32) -> Self {
        Self { start: window_start(end, days), end }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkTag {
    Full,
    Within,
    Cross,
    BigLead,
    SmallLead,
    HighLead,
    LowLead,
}

impl NetworkTag {
    pub const ALL: [NetworkTag; 7] = [
        NetworkTag::Full,
        NetworkTag::Within,
        NetworkTag::Cross,
        NetworkTag::BigLead,
        NetworkTag::SmallLead,
        NetworkTag::HighLead,
        NetworkTag::LowLead,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NetworkTag::Full => "full",
            NetworkTag::Within => "within",
            NetworkTag::Cross => "cross",
            NetworkTag::BigLead => "big_lead",
            NetworkTag::SmallLead => "small_lead",
            NetworkTag::HighLead => "high_lead",
            NetworkTag::LowLead => "low_lead",
        }
    }
}

impl fmt::Display for NetworkTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetworkTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NetworkTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown network tag `{s}`")))
    }
}

/// Node filters applied to a full network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Decomposition {
    Within,
    Cross,
    BigLead,
    SmallLead,
    HighLead,
    LowLead,
}

impl Decomposition {
    pub const ALL: [Decomposition; 6] = [
        Decomposition::Within,
        Decomposition::Cross,
        Decomposition::BigLead,
        Decomposition::SmallLead,
        Decomposition::HighLead,
        Decomposition::LowLead,
    ];

    pub fn tag(self) -> NetworkTag {
        match self {
            Decomposition::Within => NetworkTag::Within,
            Decomposition::Cross => NetworkTag::Cross,
            Decomposition::BigLead => NetworkTag::BigLead,
            Decomposition::SmallLead => NetworkTag::SmallLead,
            Decomposition::HighLead => NetworkTag::HighLead,
            Decomposition::LowLead => NetworkTag::LowLead,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub follower: usize,
    pub lead: usize,
    pub count: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsNetwork {
    window: Window,
    universe: Vec<String>,
    index: HashMap<String, usize>,
    /// Sorted by (follower, lead).
    edges: Vec<Edge>,
    /// `row_start[i]..row_start[i + 1]` indexes the edges of follower `i`.
    row_start: Vec<usize>,
    tag: NetworkTag,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Pairs in the window dropped because a firm is outside the universe.
    pub out_of_universe: usize,
    /// Pairs with follower equal to lead.
    pub self_pairs: usize,
}

impl NewsNetwork {
    /// Builds the full network from `(follower, lead) -> count` cells.
    pub fn from_counts<'a>(
        window: Window,
        universe: &[String],
        counts: impl IntoIterator<Item = (&'a str, &'a str, u32)>,
    ) -> (Self, BuildStats) {
        let index: HashMap<String, usize> =
            universe.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut stats = BuildStats::default();
        let mut cells: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (follower, lead, count) in counts {
            if count == 0 {
                continue;
            }
            match (index.get(follower), index.get(lead)) {
                (Some(&i), Some(&j)) if i == j => stats.self_pairs += count as usize,
                (Some(&i), Some(&j)) => *cells.entry((i, j)).or_default() += count,
                _ => stats.out_of_universe += count as usize,
            }
        }
        let mut row_totals = vec![0u64; universe.len()];
        for (&(i, _), &c) in &cells {
            row_totals[i] += u64::from(c);
        }
        let edges: Vec<Edge> = cells
            .into_iter()
            .map(|((i, j), count)| Edge {
                follower: i,
                lead: j,
                count,
                weight: f64::from(count) / row_totals[i] as f64,
            })
            .collect();
        let net = Self::assemble(window, universe.to_vec(), index, edges, NetworkTag::Full);
        (net, stats)
    }

    fn assemble(
        window: Window,
        universe: Vec<String>,
        index: HashMap<String, usize>,
        edges: Vec<Edge>,
        tag: NetworkTag,
    ) -> Self {
        let n = universe.len();
        let mut row_start = vec![0usize; n + 1];
        for e in &edges {
            row_start[e.follower + 1] += 1;
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        Self { window, universe, index, edges, row_start, tag }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn tag(&self) -> NetworkTag {
        self.tag
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn index_of(&self, ticker: &str) -> Option<usize> {
        self.index.get(ticker).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Non-zero entries of follower `i`'s row.
    pub fn row(&self, i: usize) -> &[Edge] {
        &self.edges[self.row_start[i]..self.row_start[i + 1]]
    }

    pub fn weight(&self, follower: &str, lead: &str) -> f64 {
        let (Some(i), Some(j)) = (self.index_of(follower), self.index_of(lead)) else {
            return 0.0;
        };
        self.row(i).iter().find(|e| e.lead == j).map_or(0.0, |e| e.weight)
    }

    pub fn count(&self, follower: &str, lead: &str) -> u32 {
        let (Some(i), Some(j)) = (self.index_of(follower), self.index_of(lead)) else {
            return 0;
        };
        self.row(i).iter().find(|e| e.lead == j).map_or(0, |e| e.count)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().map(|e| e.weight).sum()
    }

    /// Dense `n × n` weight matrix (row = follower).
    pub fn dense_weights(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut m = vec![vec![0.0; n]; n];
        for e in &self.edges {
            m[e.follower][e.lead] = e.weight;
        }
        m
    }

    /// Keeps the entries for which `keep(follower, lead)` holds.
    pub fn masked(&self, tag: NetworkTag, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let edges = self.edges.iter().copied().filter(|e| keep(e.follower, e.lead)).collect();
        Self::assemble(self.window, self.universe.clone(), self.index.clone(), edges, tag)
    }
}

/// Builds the full network from linkages whose info day lies in `window`.
pub fn build_network(linkages: &[Linkage], window: Window, universe: &[String]) -> (NewsNetwork, BuildStats) {
    let mut counts: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    for l in linkages.iter().filter(|l| window.contains(l.info_day)) {
        *counts.entry((l.follower.as_str(), l.lead.as_str())).or_default() += 1;
    }
    NewsNetwork::from_counts(window, universe, counts.into_iter().map(|((f, l), c)| (f, l, c)))
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

/// Per-node attributes needed by the decompositions, aligned with a
/// network's universe.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAttributes {
    pub sector: Vec<Option<String>>,
    /// Mean market value over the window's trading days with data.
    pub mean_mv: Vec<Option<f64>>,
    /// Mean turnover over the window's trading days with data.
    pub mean_turnover: Vec<Option<f64>>,
    pub lower_quantile: f64,
    pub upper_quantile: f64,
}

impl NodeAttributes {
    pub fn for_network(net: &NewsNetwork, master: &FirmMaster, prices: &PriceTable) -> Self {
        let w = net.window();
        let per_node = |c| {
            net.universe().iter().map(|t| prices.window_mean(t, c, w.start, w.end)).collect::<Vec<_>>()
        };
        Self {
            sector: net.universe().iter().map(|t| master.sector(t).map(str::to_owned)).collect(),
            mean_mv: per_node(Characteristic::MarketValue),
            mean_turnover: per_node(Characteristic::Turnover),
            lower_quantile: 0.3,
            upper_quantile: 0.7,
        }
    }

    pub fn with_breakpoints(mut self, lower: f64, upper: f64) -> Self {
        self.lower_quantile = lower;
        self.upper_quantile = upper;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecomposeStats {
    /// Entries excluded because a needed attribute was missing.
    pub missing_attribute: usize,
}

fn breakpoint(values: &[Option<f64>], p: f64) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    nearest_rank_quantile(&present, p)
}

/// Masks the full network by a node condition. Missing attributes make
/// the condition false.
pub fn decompose(net: &NewsNetwork, filter: Decomposition, attrs: &NodeAttributes) -> (NewsNetwork, DecomposeStats) {
    let mut stats = DecomposeStats::default();
    let (lo, hi) = (attrs.lower_quantile, attrs.upper_quantile);
    let threshold = match filter {
        Decomposition::BigLead => breakpoint(&attrs.mean_mv, hi),
        Decomposition::SmallLead => breakpoint(&attrs.mean_mv, lo),
        Decomposition::HighLead => breakpoint(&attrs.mean_turnover, hi),
        Decomposition::LowLead => breakpoint(&attrs.mean_turnover, lo),
        Decomposition::Within | Decomposition::Cross => None,
    };
    let out = net.masked(filter.tag(), |i, j| {
        let cond = match filter {
            Decomposition::Within | Decomposition::Cross => {
                match (&attrs.sector[i], &attrs.sector[j]) {
                    (Some(a), Some(b)) => (a == b) == (filter == Decomposition::Within),
                    _ => {
                        stats.missing_attribute += 1;
                        return false;
                    }
                }
            }
            _ => {
                let values = match filter {
                    Decomposition::BigLead | Decomposition::SmallLead => &attrs.mean_mv,
                    _ => &attrs.mean_turnover,
                };
                let (Some(v), Some(q)) = (values[j], threshold) else {
                    stats.missing_attribute += 1;
                    return false;
                };
                match filter {
                    Decomposition::BigLead | Decomposition::HighLead => v > q,
                    _ => v <= q,
                }
            }
        };
        cond
    });
    if stats.missing_attribute > 0 {
        log::debug!("{filter:?}: {} entries excluded for missing attributes", stats.missing_attribute);
    }
    (out, stats)
}

// ---------------------------------------------------------------------------
// Degrees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DegreeMode {
    Total,
    /// Distinct followers pointing at the node.
    Lead,
    /// Distinct leads the node points at.
    Follower,
}

/// Degrees aligned with the network's universe.
pub fn degree(net: &NewsNetwork, mode: DegreeMode) -> Vec<u32> {
    let n = net.size();
    let mut lead = vec![0u32; n];
    let mut follower = vec![0u32; n];
    for e in net.edges().iter().filter(|e| e.weight != 0.0) {
        follower[e.follower] += 1;
        lead[e.lead] += 1;
    }
    match mode {
        DegreeMode::Lead => lead,
        DegreeMode::Follower => follower,
        DegreeMode::Total => lead.iter().zip(&follower).map(|(a, b)| a + b).collect(),
    }
}

// ---------------------------------------------------------------------------
// Degree distribution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub c_log: f64,
    pub r2: f64,
    /// `(degree, relative frequency)` points used in the fit.
    pub support: Vec<(u32, f64)>,
}

/// Log-log OLS of relative frequency on degree, over degrees ≥ 1.
pub fn fit_power_law(degrees: &[u32]) -> Result<PowerLawFit> {
    let mut freq: BTreeMap<u32, usize> = BTreeMap::new();
    for &d in degrees.iter().filter(|d| **d >= 1) {
        *freq.entry(d).or_default() += 1;
    }
    fit_power_law_frequencies(&freq.into_iter().map(|(d, c)| (d, c as f64)).collect::<Vec<_>>())
}

/// Same fit from `(degree, frequency)` pairs; zero frequencies are skipped.
pub fn fit_power_law_frequencies(points: &[(u32, f64)]) -> Result<PowerLawFit> {
    let pts: Vec<(u32, f64)> = points.iter().copied().filter(|(d, f)| *d >= 1 && *f > 0.0).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientSupport(format!(
            "power-law fit needs at least 3 distinct degrees, got {}",
            pts.len()
        )));
    }
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let support: Vec<(u32, f64)> = pts.iter().map(|(d, f)| (*d, f / total)).collect();
    let x: Vec<f64> = support.iter().map(|(d, _)| f64::from(*d).ln()).collect();
    let y: Vec<f64> = support.iter().map(|(_, p)| p.ln()).collect();
    let line = fit_line(&x, &y).ok_or_else(|| Error::InsufficientSupport("degenerate support".into()))?;
    Ok(PowerLawFit { gamma: -line.slope, c_log: line.intercept, r2: line.r2, support })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }
}

pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Epanechnikov kernel density on an even grid spanning the support
/// widened by one bandwidth on each side, with at least 32 points per
/// bandwidth.
pub fn degree_density(values: &[f64], bandwidth: f64) -> Result<DensityCurve> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if values.is_empty() {
        return Err(Error::InvalidInput("density of an empty sample".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - bandwidth;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + bandwidth;
    let steps = (((hi - lo) / bandwidth) * 32.0).ceil().clamp(64.0, 2_000_000.0) as usize;
    let step = (hi - lo) / steps as f64;
    let n = values.len() as f64;
    let grid: Vec<f64> = (0..=steps).map(|k| lo + step * k as f64).collect();
    let density = grid
        .iter()
        .map(|x| values.iter().map(|v| epanechnikov((x - v) / bandwidth)).sum::<f64>() / (n * bandwidth))
        .collect();
    Ok(DensityCurve { grid, density, bandwidth })
}

// ---------------------------------------------------------------------------
// net.csv
// ---------------------------------------------------------------------------

pub fn save_networks<'a>(nets: impl IntoIterator<Item = &'a NewsNetwork>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let err = |e: csv::Error| Error::Csv { path: path.display().to_string(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["follower", "lead", "count", "weight", "tag"]).map_err(err)?;
    for net in nets {
        for e in net.edges() {
            w.write_record([
                net.universe()[e.follower].as_str(),
                &net.universe()[e.lead],
                &e.count.to_string(),
                &e.weight.to_string(),
                net.tag().as_str(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identify::Strategy;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 6, day).unwrap()
    }

    fn link(f: &str, l: &str, day: u32) -> Linkage {
        Linkage {
            article_id: format!("{f}{l}{day}"),
            info_day: d(day),
            lead: l.into(),
            follower: f.into(),
            strategy_lead: Strategy::S1,
            strategy_follower: Strategy::S2,
        }
    }

    fn universe(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counts_and_weights() {
        let links = [link("B", "A", 10), link("B", "A", 11), link("C", "A", 12), link("C", "B", 1)];
        let w = Window { start: d(2), end: d(20) };
        let (net, stats) = build_network(&links, w, &universe(&["A", "B", "C", "D"]));
        assert_eq!(stats, BuildStats::default());
        assert_eq!(net.count("B", "A"), 2);
        assert_eq!(net.count("C", "A"), 1);
        assert_eq!(net.count("C", "B"), 0, "pair before window start is excluded");
        assert_eq!(net.weight("B", "A"), 1.0);
        assert_eq!(net.weight("C", "A"), 1.0);
        assert_eq!(net.row(net.index_of("A").unwrap()).len(), 0);
        assert_eq!(net.row(net.index_of("D").unwrap()).len(), 0);

        assert_eq!(degree(&net, DegreeMode::Lead), [2, 0, 0, 0]);
        assert_eq!(degree(&net, DegreeMode::Follower), [0, 1, 1, 0]);
        assert_eq!(degree(&net, DegreeMode::Total), [2, 1, 1, 0]);
    }

    #[test]
    fn window_bounds_are_inclusive() {
        let links = [link("B", "A", 5), link("B", "A", 15), link("B", "C", 16)];
        let (net, _) = build_network(&links, Window { start: d(5), end: d(15) }, &universe(&["A", "B", "C"]));
        assert_eq!(net.count("B", "A"), 2);
        assert_eq!(net.count("B", "C"), 0);
        assert_eq!(Window::ending(d(30), 29), Window { start: d(1), end: d(30) });
    }

    #[test]
    fn out_of_universe_pairs_are_counted_not_fatal() {
        let links = [link("B", "A", 10), link("X", "A", 10), link("A", "A", 10)];
        let (net, stats) = build_network(&links, Window { start: d(1), end: d(30) }, &universe(&["A", "B"]));
        assert_eq!(stats.out_of_universe, 1);
        assert_eq!(stats.self_pairs, 1);
        assert_eq!(net.edges().len(), 1);
    }

    #[test]
    fn empty_network_has_zero_degrees() {
        let (net, _) = build_network(&[], Window { start: d(1), end: d(30) }, &universe(&["A", "B"]));
        assert_eq!(degree(&net, DegreeMode::Total), [0, 0]);
    }

    fn attrs(n: usize) -> NodeAttributes {
        NodeAttributes {
            sector: (0..n).map(|i| Some(if i % 2 == 0 { "even" } else { "odd" }.to_string())).collect(),
            mean_mv: (0..n).map(|i| Some((i + 1) as f64)).collect(),
            mean_turnover: (0..n).map(|i| Some((n - i) as f64)).collect(),
            lower_quantile: 0.3,
            upper_quantile: 0.7,
        }
    }

    #[test]
    fn size_decomposition_on_ten_firms() {
        // F0..F9 have MVs 1..10; everybody follows everybody else once.
        let names: Vec<String> = (0..10).map(|i| format!("F{i}")).collect();
        let mut links = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    links.push(link(&names[i], &names[j], 10));
                }
            }
        }
        let (net, _) = build_network(&links, Window { start: d(1), end: d(30) }, &names);
        let a = attrs(10);
        // brute force: type-1 quantiles of 1..10 are 3 (p=0.3) and 7 (p=0.7)
        let (big, _) = decompose(&net, Decomposition::BigLead, &a);
        let (small, _) = decompose(&net, Decomposition::SmallLead, &a);
        let big_leads: std::collections::BTreeSet<usize> = big.edges().iter().map(|e| e.lead).collect();
        let small_leads: std::collections::BTreeSet<usize> = small.edges().iter().map(|e| e.lead).collect();
        assert_eq!(big_leads.into_iter().collect::<Vec<_>>(), [7, 8, 9]);
        assert_eq!(small_leads.into_iter().collect::<Vec<_>>(), [0, 1, 2]);
        // the middle 40% (MV 4..7) appear in neither
        for e in net.edges().iter().filter(|e| (3..=6).contains(&e.lead)) {
            assert_eq!(big.weight(&names[e.follower], &names[e.lead]), 0.0);
            assert_eq!(small.weight(&names[e.follower], &names[e.lead]), 0.0);
        }
        // weights are inherited, not renormalized
        let e = big.edges()[0];
        assert_eq!(e.weight, 1.0 / 9.0);
        // degrees on a decomposed network count surviving entries only
        assert_eq!(degree(&big, DegreeMode::Lead)[9], 9);
        assert_eq!(degree(&big, DegreeMode::Lead)[5], 0);
        assert_eq!(degree(&big, DegreeMode::Follower)[0], 3);
        assert_eq!(degree(&big, DegreeMode::Follower)[9], 2);
    }

    #[test]
    fn liquidity_decomposition_uses_turnover() {
        let names: Vec<String> = (0..10).map(|i| format!("F{i}")).collect();
        let links: Vec<Linkage> = (1..10).map(|j| link(&names[0], &names[j], 3)).collect();
        let (net, _) = build_network(&links, Window { start: d(1), end: d(30) }, &names);
        let a = attrs(10); // turnover of F_i is 10 - i
        let (high, _) = decompose(&net, Decomposition::HighLead, &a);
        let (low, _) = decompose(&net, Decomposition::LowLead, &a);
        let leads = |n: &NewsNetwork| n.edges().iter().map(|e| e.lead).collect::<Vec<_>>();
        assert_eq!(leads(&high), [1, 2]); // turnover 9, 8 > 7
        assert_eq!(leads(&low), [7, 8, 9]); // turnover 3, 2, 1 <= 3
    }

    #[test]
    fn missing_attributes_exclude() {
        let names = universe(&["A", "B", "C"]);
        let links = [link("A", "B", 3), link("A", "C", 3)];
        let (net, _) = build_network(&links, Window { start: d(1), end: d(30) }, &names);
        let mut a = attrs(3);
        a.sector[2] = None;
        a.mean_mv[1] = None;
        let (w, s) = decompose(&net, Decomposition::Within, &a);
        assert_eq!(s.missing_attribute, 1);
        let (c, _) = decompose(&net, Decomposition::Cross, &a);
        assert_eq!(w.edges().len() + c.edges().len(), 1);
        let (big, s) = decompose(&net, Decomposition::BigLead, &a);
        assert_eq!(s.missing_attribute, 1);
        assert_eq!(big.weight("A", "B"), 0.0);
    }

    #[test]
    fn power_law_exact_and_flat() {
        let pts: Vec<(u32, f64)> = [1u32, 2, 4, 8].iter().map(|&d| (d, 64.0 / f64::from(d * d))).collect();
        let fit = fit_power_law_frequencies(&pts).unwrap();
        assert!((fit.gamma - 2.0).abs() < 1e-12, "gamma {}", fit.gamma);
        assert!((fit.r2 - 1.0).abs() < 1e-12);

        let flat = fit_power_law(&[1, 2, 3, 1, 2, 3]).unwrap();
        assert!(flat.gamma.abs() < 1e-12);

        assert!(matches!(fit_power_law(&[1, 1, 2, 0, 0]), Err(Error::InsufficientSupport(_))));
    }

    #[test]
    fn kde_shape_and_mass() {
        let c = degree_density(&[5.0], 1.0).unwrap();
        assert!((c.integral() - 1.0).abs() < 1e-3);
        for (x, y) in c.grid.iter().zip(&c.density) {
            if (x - 5.0).abs() > 1.0 {
                assert_eq!(*y, 0.0);
            } else {
                assert!((y - 0.75 * (1.0 - (x - 5.0).powi(2))).abs() < 1e-12);
            }
        }
        // two equal masses: value at each mode is 0.75 / 2, symmetric about 5
        let c = degree_density(&[0.0, 10.0], 1.0).unwrap();
        assert!((c.integral() - 1.0).abs() < 1e-3);
        let at = |x: f64| {
            let k = c.grid.iter().position(|g| (g - x).abs() < 1e-9).unwrap();
            c.density[k]
        };
        assert!((at(0.0) - 0.375).abs() < 1e-12);
        assert!((at(10.0) - 0.375).abs() < 1e-12);
        assert_eq!(at(5.0), 0.0);
        let n = c.density.len();
        for k in 0..n {
            assert!((c.density[k] - c.density[n - 1 - k]).abs() < 1e-12);
        }
        assert!(degree_density(&[1.0], 0.0).is_err());
        assert!(degree_density(&[], 1.0).is_err());
    }
}
