//! Lead-return and network-degree panels.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Deserialize;

use crate::corpus::{csv_error, csv_reader, Characteristic, FirmMaster, Month, PriceTable, ReturnPanel, TradingCalendar};
use crate::error::{Error, Result};
use crate::identify::Linkage;
use crate::network::{build_network, decompose, degree, Decomposition, DegreeMode, NewsNetwork, NodeAttributes, Window};
use crate::panel::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignFilter {
    All,
    Pos,
    Neg,
}

/// Lead returns for every node of a network, plus the number of
/// non-zero weights whose lead had no return (excluded from the sum).
#[derive(Debug, Clone, PartialEq)]
pub struct LeadReturns {
    pub values: Vec<f64>,
    pub missing: usize,
}

/// `Σ_j ω_ij g(r_j)` with `g` the identity, positive part or absolute
/// negative part. Leads without a return are skipped without
/// renormalizing the remaining weights.
pub fn lead_return(net: &NewsNetwork, returns: impl Fn(&str) -> Option<f64>, sign: SignFilter) -> LeadReturns {
    let lead_r: Vec<Option<f64>> = net.universe().iter().map(|t| returns(t)).collect();
    let mut missing = 0;
    let values = (0..net.size())
        .map(|i| {
            let mut acc = 0.0;
            for e in net.row(i) {
                let Some(r) = lead_r[e.lead] else {
                    missing += 1;
                    continue;
                };
                let g = match sign {
                    SignFilter::All => r,
                    SignFilter::Pos => r.max(0.0),
                    SignFilter::Neg => (-r).max(0.0),
                };
                acc += e.weight * g;
            }
            acc
        })
        .collect();
    LeadReturns { values, missing }
}

/// `LR⁺(ω^w) + LR⁻(ω^w) + LR⁻(ω^c) − LR⁺(ω^c)`.
pub fn lead_return_agg(pos_within: f64, neg_within: f64, pos_cross: f64, neg_cross: f64) -> f64 {
    pos_within + neg_within + neg_cross - pos_cross
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LrVariant {
    Full,
    Within,
    Cross,
    Big,
    Small,
    High,
    Low,
    Pos,
    Neg,
    Agg,
}

impl LrVariant {
    pub const ALL: [LrVariant; 10] = [
        LrVariant::Full,
        LrVariant::Within,
        LrVariant::Cross,
        LrVariant::Big,
        LrVariant::Small,
        LrVariant::High,
        LrVariant::Low,
        LrVariant::Pos,
        LrVariant::Neg,
        LrVariant::Agg,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            LrVariant::Full => "full",
            LrVariant::Within => "within",
            LrVariant::Cross => "cross",
            LrVariant::Big => "big",
            LrVariant::Small => "small",
            LrVariant::High => "high",
            LrVariant::Low => "low",
            LrVariant::Pos => "pos",
            LrVariant::Neg => "neg",
            LrVariant::Agg => "agg",
        }
    }

    /// Column name used in `panel.csv`, e.g. `LR_full`.
    pub fn name(self) -> String {
        format!("LR_{}", self.suffix())
    }
}

impl fmt::Display for LrVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LR_{}", self.suffix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DegreeVariant {
    Total,
    Lead,
    Follower,
    Within,
    Cross,
    Big,
    Small,
    High,
    Low,
}

impl DegreeVariant {
    pub const ALL: [DegreeVariant; 9] = [
        DegreeVariant::Total,
        DegreeVariant::Lead,
        DegreeVariant::Follower,
        DegreeVariant::Within,
        DegreeVariant::Cross,
        DegreeVariant::Big,
        DegreeVariant::Small,
        DegreeVariant::High,
        DegreeVariant::Low,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            DegreeVariant::Total => "total",
            DegreeVariant::Lead => "lead",
            DegreeVariant::Follower => "follower",
            DegreeVariant::Within => "within",
            DegreeVariant::Cross => "cross",
            DegreeVariant::Big => "big",
            DegreeVariant::Small => "small",
            DegreeVariant::High => "high",
            DegreeVariant::Low => "low",
        }
    }

    pub fn name(self) -> String {
        format!("degree_{}", self.suffix())
    }
}

impl fmt::Display for DegreeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "degree_{}", self.suffix())
    }
}

impl FromStr for LrVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LrVariant::ALL
            .into_iter()
            .find(|v| v.name() == s || v.suffix() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown lead-return variant `{s}`")))
    }
}

impl FromStr for DegreeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DegreeVariant::ALL
            .into_iter()
            .find(|v| v.name() == s || v.suffix() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown degree variant `{s}`")))
    }
}

// ---------------------------------------------------------------------------
// Rolling inputs
// ---------------------------------------------------------------------------

/// Linkages sorted by information day for fast window slicing.
#[derive(Debug, Clone, Default)]
pub struct LinkageIndex {
    sorted: Vec<Linkage>,
}

impl LinkageIndex {
    pub fn new(linkages: &[Linkage]) -> Self {
        let mut sorted = linkages.to_vec();
        sorted.sort();
        sorted.sort_by_key(|l| l.info_day);
        Self { sorted }
    }

    pub fn in_window(&self, w: Window) -> &[Linkage] {
        let lo = self.sorted.partition_point(|l| l.info_day < w.start);
        let hi = self.sorted.partition_point(|l| l.info_day <= w.end);
        &self.sorted[lo..hi.max(lo)]
    }

    pub fn network(&self, w: Window, universe: &[String]) -> (NewsNetwork, crate::network::BuildStats) {
        build_network(self.in_window(w), w, universe)
    }
}

/// Prefix sums of a characteristic per ticker, answering window means in
/// logarithmic time.
#[derive(Debug, Clone, Default)]
struct WindowMeans {
    series: HashMap<String, (Vec<NaiveDate>, Vec<f64>)>,
}

impl WindowMeans {
    fn new(prices: &PriceTable, c: Characteristic) -> Self {
        let mut series = HashMap::new();
        for t in prices.tickers() {
            let mut dates = Vec::new();
            let mut cum = vec![0.0];
            for (d, rec) in prices.series(t).into_iter().flatten() {
                if let Some(v) = c.of(rec) {
                    dates.push(*d);
                    cum.push(cum.last().unwrap() + v);
                }
            }
            series.insert(t.to_owned(), (dates, cum));
        }
        Self { series }
    }

    fn mean(&self, ticker: &str, w: Window) -> Option<f64> {
        let (dates, cum) = self.series.get(ticker)?;
        let lo = dates.partition_point(|d| *d < w.start);
        let hi = dates.partition_point(|d| *d <= w.end);
        (hi > lo).then(|| (cum[hi] - cum[lo]) / (hi - lo) as f64)
    }
}

/// Inputs shared by the lead-return and degree builders.
pub struct MarketData<'a> {
    pub master: &'a FirmMaster,
    pub prices: &'a PriceTable,
    pub returns: &'a ReturnPanel,
    pub calendar: &'a TradingCalendar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoints {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Breakpoints {
    fn default() -> Self {
        Self { lower: 0.3, upper: 0.7 }
    }
}

struct AttributeSource {
    mv: WindowMeans,
    turnover: WindowMeans,
    breakpoints: Breakpoints,
}

impl AttributeSource {
    fn new(prices: &PriceTable, breakpoints: Breakpoints) -> Self {
        Self {
            mv: WindowMeans::new(prices, Characteristic::MarketValue),
            turnover: WindowMeans::new(prices, Characteristic::Turnover),
            breakpoints,
        }
    }

    fn attributes(&self, net: &NewsNetwork, master: &FirmMaster) -> NodeAttributes {
        let w = net.window();
        NodeAttributes {
            sector: net.universe().iter().map(|t| master.sector(t).map(str::to_owned)).collect(),
            mean_mv: net.universe().iter().map(|t| self.mv.mean(t, w)).collect(),
            mean_turnover: net.universe().iter().map(|t| self.turnover.mean(t, w)).collect(),
            lower_quantile: self.breakpoints.lower,
            upper_quantile: self.breakpoints.upper,
        }
    }

    fn decompositions(&self, net: &NewsNetwork, master: &FirmMaster) -> BTreeMap<Decomposition, NewsNetwork> {
        let attrs = self.attributes(net, master);
        Decomposition::ALL.into_iter().map(|d| (d, decompose(net, d, &attrs).0)).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VariableDiagnostics {
    /// Non-zero weights whose lead return was missing, summed over variants.
    pub missing_lead_returns: usize,
    /// Linkages dropped because a firm was outside the universe.
    pub out_of_universe: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LeadReturnPanel {
    pub variants: BTreeMap<LrVariant, Panel>,
    pub diagnostics: VariableDiagnostics,
}

/// Lead returns of every variant for each trading date with returns,
/// using the network over `[t - window_days, t]` on the membership at `t`.
pub fn lead_return_panel(
    linkages: &LinkageIndex,
    data: &MarketData<'_>,
    window_days: u32,
    breakpoints: Breakpoints,
) -> LeadReturnPanel {
    let attrs = AttributeSource::new(data.prices, breakpoints);
    let per_date: Vec<_> = data
        .calendar
        .dates()
        .par_iter()
        .filter_map(|&t| {
            let cs = data.returns.cross_section(t);
            if cs.is_empty() {
                return None;
            }
            let universe = data.master.universe_at(t);
            if universe.is_empty() {
                return None;
            }
            let (full, stats) = linkages.network(Window::ending(t, window_days), &universe);
            let parts = attrs.decompositions(&full, data.master);
            let r = |tk: &str| cs.get(tk).copied();
            let mut missing = 0;
            let mut lr = |net: &NewsNetwork, sign| {
                let out = lead_return(net, r, sign);
                missing += out.missing;
                out.values
            };
            let mut cols: BTreeMap<LrVariant, Vec<f64>> = BTreeMap::new();
            cols.insert(LrVariant::Full, lr(&full, SignFilter::All));
            cols.insert(LrVariant::Pos, lr(&full, SignFilter::Pos));
            cols.insert(LrVariant::Neg, lr(&full, SignFilter::Neg));
            for (d, v) in [
                (Decomposition::Within, LrVariant::Within),
                (Decomposition::Cross, LrVariant::Cross),
                (Decomposition::BigLead, LrVariant::Big),
                (Decomposition::SmallLead, LrVariant::Small),
                (Decomposition::HighLead, LrVariant::High),
                (Decomposition::LowLead, LrVariant::Low),
            ] {
                cols.insert(v, lr(&parts[&d], SignFilter::All));
            }
            let pw = lr(&parts[&Decomposition::Within], SignFilter::Pos);
            let nw = lr(&parts[&Decomposition::Within], SignFilter::Neg);
            let pc = lr(&parts[&Decomposition::Cross], SignFilter::Pos);
            let nc = lr(&parts[&Decomposition::Cross], SignFilter::Neg);
            let agg = (0..full.size()).map(|i| lead_return_agg(pw[i], nw[i], pc[i], nc[i])).collect();
            cols.insert(LrVariant::Agg, agg);
            Some((t, universe, cols, missing, stats.out_of_universe))
        })
        .collect();

    let mut out = LeadReturnPanel::default();
    for (t, universe, cols, missing, oou) in per_date {
        out.diagnostics.missing_lead_returns += missing;
        out.diagnostics.out_of_universe += oou;
        for (v, values) in cols {
            let panel = out.variants.entry(v).or_default();
            for (tk, x) in universe.iter().zip(values) {
                panel.insert(tk, t, x);
            }
        }
    }
    if out.diagnostics.missing_lead_returns > 0 {
        log::info!("{} lead-return terms excluded for missing returns", out.diagnostics.missing_lead_returns);
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct DegreePanel {
    /// Keyed by the month's last calendar day.
    pub variants: BTreeMap<DegreeVariant, Panel>,
    pub diagnostics: VariableDiagnostics,
}

/// Degrees on the network over `[month_end - window_days, month_end]` for
/// every listed month, on that month's membership.
pub fn monthly_degree_panel(
    linkages: &LinkageIndex,
    master: &FirmMaster,
    prices: &PriceTable,
    months: &[Month],
    window_days: u32,
    breakpoints: Breakpoints,
) -> DegreePanel {
    let attrs = AttributeSource::new(prices, breakpoints);
    let per_month: Vec<_> = months
        .par_iter()
        .map(|&m| {
            let end = m.last_day();
            let universe = master.universe(m);
            let (full, stats) = linkages.network(Window::ending(end, window_days), &universe);
            let parts = attrs.decompositions(&full, master);
            let mut cols: BTreeMap<DegreeVariant, Vec<u32>> = BTreeMap::new();
            cols.insert(DegreeVariant::Total, degree(&full, DegreeMode::Total));
            cols.insert(DegreeVariant::Lead, degree(&full, DegreeMode::Lead));
            cols.insert(DegreeVariant::Follower, degree(&full, DegreeMode::Follower));
            for (d, v) in [
                (Decomposition::Within, DegreeVariant::Within),
                (Decomposition::Cross, DegreeVariant::Cross),
                (Decomposition::BigLead, DegreeVariant::Big),
                (Decomposition::SmallLead, DegreeVariant::Small),
                (Decomposition::HighLead, DegreeVariant::High),
                (Decomposition::LowLead, DegreeVariant::Low),
            ] {
                cols.insert(v, degree(&parts[&d], DegreeMode::Total));
            }
            (end, universe, cols, stats.out_of_universe)
        })
        .collect();

    let mut out = DegreePanel::default();
    for (end, universe, cols, oou) in per_month {
        out.diagnostics.out_of_universe += oou;
        for (v, values) in cols {
            let panel = out.variants.entry(v).or_default();
            for (tk, x) in universe.iter().zip(values) {
                panel.insert(tk, end, f64::from(x));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// panel.csv
// ---------------------------------------------------------------------------

/// Writes named panels in long format `date,ticker,variant,value`, sorted
/// by date, ticker and variant.
pub fn save_panel_long<'a>(panels: impl IntoIterator<Item = (String, &'a Panel)>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut rows: Vec<(NaiveDate, &str, String, f64)> = Vec::new();
    for (name, panel) in panels {
        rows.extend(panel.iter().map(|(t, d, v)| (d, t, name.clone(), v)));
    }
    rows.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["date", "ticker", "variant", "value"]).map_err(|e| csv_error(path, e))?;
    for (d, t, name, v) in rows {
        w.write_record([d.to_string().as_str(), t, &name, &v.to_string()]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct LongRow {
    date: NaiveDate,
    ticker: String,
    variant: String,
    value: f64,
}

pub fn load_panel_long(path: impl AsRef<Path>) -> Result<BTreeMap<String, Panel>> {
    let path = path.as_ref();
    let mut out: BTreeMap<String, Panel> = BTreeMap::new();
    for row in csv_reader(path)?.deserialize::<LongRow>() {
        let r = row.map_err(|e| csv_error(path, e))?;
        out.entry(r.variant).or_default().insert(&r.ticker, r.date, r.value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identify::Strategy;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 3, day).unwrap()
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn link(f: &str, l: &str, day: u32) -> Linkage {
        Linkage {
            article_id: format!("{f}-{l}-{day}"),
            info_day: d(day),
            lead: l.into(),
            follower: f.into(),
            strategy_lead: Strategy::S1,
            strategy_follower: Strategy::S1,
        }
    }

    fn fixture() -> NewsNetwork {
        // A follows B twice and C once.
        let links = [link("A", "B", 1), link("A", "B", 2), link("A", "C", 3)];
        build_network(&links, Window { start: d(1), end: d(10) }, &names(&["A", "B", "C"])).0
    }

    #[test]
    fn hand_evaluated_lead_returns() {
        let net = fixture();
        let r = |t: &str| match t {
            "B" => Some(0.01),
            "C" => Some(-0.03),
            _ => Some(0.5),
        };
        let all = lead_return(&net, r, SignFilter::All).values;
        let pos = lead_return(&net, r, SignFilter::Pos).values;
        let neg = lead_return(&net, r, SignFilter::Neg).values;
        assert!((all[0] - (2.0 / 3.0 * 0.01 - 1.0 / 3.0 * 0.03)).abs() < 1e-15);
        assert!((all[0] + 0.003_333_333_333_333).abs() < 1e-12);
        assert!((pos[0] - 0.006_666_666_666_667).abs() < 1e-12);
        assert!((neg[0] - 0.01).abs() < 1e-12);
        assert!((all[0] - (pos[0] - neg[0])).abs() < 1e-15);
        // isolated nodes
        assert_eq!(&all[1..], &[0.0, 0.0]);
        assert_eq!(&neg[1..], &[0.0, 0.0]);
    }

    #[test]
    fn missing_returns_are_excluded_and_counted() {
        let net = fixture();
        let out = lead_return(&net, |t| (t == "B").then_some(0.01), SignFilter::All);
        assert_eq!(out.missing, 1);
        assert!((out.values[0] - 2.0 / 3.0 * 0.01).abs() < 1e-15);
    }

    #[test]
    fn agg_substitution() {
        // components listed in formula order: LR⁺(w), LR⁻(w), LR⁻(c), LR⁺(c)
        let (pw, nw, nc, pc) = (1e-3, 2e-3, 3e-3, 4e-3);
        assert!((lead_return_agg(pw, nw, pc, nc) - 0.002).abs() < 1e-15);
        assert_eq!(lead_return_agg(0.0, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in LrVariant::ALL {
            assert_eq!(v.name().parse::<LrVariant>().unwrap(), v);
        }
        for v in DegreeVariant::ALL {
            assert_eq!(v.name().parse::<DegreeVariant>().unwrap(), v);
        }
        assert!("LR_bogus".parse::<LrVariant>().is_err());
    }

    #[test]
    fn linkage_index_slices_inclusive() {
        let idx = LinkageIndex::new(&[link("A", "B", 5), link("A", "B", 1), link("A", "C", 9)]);
        assert_eq!(idx.in_window(Window { start: d(1), end: d(5) }).len(), 2);
        assert_eq!(idx.in_window(Window { start: d(6), end: d(8) }).len(), 0);
        assert_eq!(idx.in_window(Window { start: d(9), end: d(9) }).len(), 1);
    }
}
