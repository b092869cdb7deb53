//! Characteristic-sorted portfolios, long-short spreads and their
//! performance against factor models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Characteristic, FactorModel, FactorSeries, Month, PriceTable, ReturnPanel, TradingCalendar};
use crate::econ::{default_nw_lags, ols_fit};
use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::stats::{mean, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Equal,
    Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rebalance {
    Daily,
    Monthly,
}

/// Whether the signal at `t` sorts returns at `t` (infeasible) or at the
/// next period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    Contemporaneous,
    Predictive,
}

macro_rules! str_enum {
    ($t:ty { $($v:ident => $s:literal),+ $(,)? }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$v),)+
                    _ => Err(Error::InvalidInput(format!("unknown {} `{s}`", stringify!($t).to_lowercase()))),
                }
            }
        }
    };
}

str_enum!(Weighting { Equal => "equal", Value => "value" });
str_enum!(Rebalance { Daily => "daily", Monthly => "monthly" });
str_enum!(Timing { Contemporaneous => "contemporaneous", Predictive => "predictive" });

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortSpec {
    pub k: usize,
    pub weighting: Weighting,
    pub rebalance: Rebalance,
    pub timing: Timing,
    /// Exclude firms whose signal is exactly zero.
    pub drop_zero_signal: bool,
}

impl Default for SortSpec {
    fn default() -> Self {
        Self {
            k: 5,
            weighting: Weighting::Equal,
            rebalance: Rebalance::Daily,
            timing: Timing::Predictive,
            drop_zero_signal: false,
        }
    }
}

impl SortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        Ok(())
    }
}

/// Where bucket returns come from.
#[derive(Debug, Clone, Copy)]
pub enum ReturnSource<'a> {
    /// Simple returns `exp(r) - 1` of the log return panel.
    Raw,
    /// Additive values from another panel (e.g. factor residuals) on the
    /// same cells. Membership still follows the raw return panel.
    Panel(&'a Panel),
}

pub struct SortInputs<'a> {
    /// Daily log returns; a firm is eligible only where its return exists.
    pub returns: &'a ReturnPanel,
    pub source: ReturnSource<'a>,
    pub prices: &'a PriceTable,
    pub calendar: &'a TradingCalendar,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BucketSnapshot {
    /// Bucket share of total eligible market value, in percent.
    pub pct_mv: Option<f64>,
    pub bm: Option<f64>,
    /// Mean turnover.
    pub liquidity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodResult {
    pub formation: NaiveDate,
    /// Holding date (daily) or the holding month's last day (monthly).
    pub period: NaiveDate,
    /// Members per rank, ascending signal.
    pub buckets: Vec<Vec<String>>,
    pub returns: Vec<f64>,
    /// Equal-weighted return of all eligible firms.
    pub market: f64,
    pub snapshots: Vec<BucketSnapshot>,
}

#[derive(Debug, Clone, Default)]
pub struct SortResult {
    pub k: usize,
    pub periods: Vec<PeriodResult>,
    /// Formation dates skipped, with their eligible counts.
    pub skipped: Vec<(NaiveDate, usize)>,
}

impl SortResult {
    /// Return series of rank `rank` (1-based).
    pub fn rank_series(&self, rank: usize) -> Vec<(NaiveDate, f64)> {
        self.periods.iter().map(|p| (p.period, p.returns[rank - 1])).collect()
    }

    /// `R_K - R_1` per period.
    pub fn long_short(&self) -> Vec<(NaiveDate, f64)> {
        self.periods.iter().map(|p| (p.period, p.returns[self.k - 1] - p.returns[0])).collect()
    }

    pub fn market(&self) -> Vec<(NaiveDate, f64)> {
        self.periods.iter().map(|p| (p.period, p.market)).collect()
    }
}

/// Bucket sizes for `n` firms in `k` buckets, the remainder going to the
/// lowest ranks.
pub fn bucket_sizes(n: usize, k: usize) -> Vec<usize> {
    let (base, rem) = (n / k, n % k);
    (0..k).map(|b| base + usize::from(b < rem)).collect()
}

/// Splits `(ticker, value)` pairs into `k` rank buckets by ascending value,
/// ties broken by ticker.
pub fn assign_buckets<T: AsRef<str>>(items: &[(T, f64)], k: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].1.total_cmp(&items[b].1).then_with(|| items[a].0.as_ref().cmp(items[b].0.as_ref())));
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for size in bucket_sizes(items.len(), k) {
        out.push(order[start..start + size].to_vec());
        start += size;
    }
    out
}

#[derive(Debug, Clone)]
struct Candidate {
    ticker: String,
    signal: f64,
    control: f64,
    /// Value used in bucket averages; `None` excludes the firm from
    /// averages but not from membership.
    ret: Option<f64>,
    mv: Option<f64>,
    bm: Option<f64>,
    turnover: Option<f64>,
}

struct Period {
    formation: NaiveDate,
    key: NaiveDate,
    /// Trading date whose characteristics describe the formation snapshot.
    snapshot: NaiveDate,
    holding: Vec<NaiveDate>,
}

fn periods(signal: &Panel, spec: &SortSpec, calendar: &TradingCalendar) -> Vec<Period> {
    let mut out = Vec::new();
    for f in signal.dates() {
        let Some(snapshot) = calendar.last_on_or_before(f) else { continue };
        match spec.rebalance {
            Rebalance::Daily => {
                if !calendar.contains(f) {
                    continue;
                }
                let hold = match spec.timing {
                    Timing::Contemporaneous => Some(f),
                    Timing::Predictive => calendar.next_after(f),
                };
                if let Some(h) = hold {
                    out.push(Period { formation: f, key: h, snapshot, holding: vec![h] });
                }
            }
            Rebalance::Monthly => {
                let m = match spec.timing {
                    Timing::Contemporaneous => Month::of(f),
                    Timing::Predictive => Month::of(f).succ(),
                };
                let holding = calendar.range(m.first_day(), m.last_day()).to_vec();
                if !holding.is_empty() {
                    out.push(Period { formation: f, key: m.last_day(), snapshot, holding });
                }
            }
        }
    }
    out
}

fn candidates(
    period: &Period,
    signal: &Panel,
    control: Option<&Panel>,
    spec: &SortSpec,
    inputs: &SortInputs<'_>,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (tk, s) in signal.cross_section(period.formation) {
        if !s.is_finite() || (spec.drop_zero_signal && s == 0.0) {
            continue;
        }
        let c = match control {
            Some(p) => match p.get(tk, period.formation) {
                Some(v) if v.is_finite() => v,
                _ => continue,
            },
            None => 0.0,
        };
        let log_rets: Vec<f64> = period.holding.iter().filter_map(|d| inputs.returns.get(tk, *d)).collect();
        if log_rets.is_empty() {
            continue;
        }
        let mv = inputs.prices.characteristic(tk, period.snapshot, Characteristic::MarketValue);
        if spec.weighting == Weighting::Value && !mv.is_some_and(|v| v > 0.0) {
            continue;
        }
        let ret = match inputs.source {
            ReturnSource::Raw => Some(log_rets.iter().sum::<f64>().exp_m1()),
            ReturnSource::Panel(p) => {
                let vals: Vec<f64> = period.holding.iter().filter_map(|d| p.get(tk, *d)).collect();
                (!vals.is_empty()).then(|| vals.iter().sum())
            }
        };
        out.push(Candidate {
            ticker: tk.to_owned(),
            signal: s,
            control: c,
            ret,
            mv,
            bm: inputs.prices.characteristic(tk, period.snapshot, Characteristic::BookToMarket),
            turnover: inputs.prices.characteristic(tk, period.snapshot, Characteristic::Turnover),
        });
    }
    out
}

fn bucket_return(members: &[&Candidate], weighting: Weighting) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for c in members {
        let Some(r) = c.ret else { continue };
        let w = match weighting {
            Weighting::Equal => 1.0,
            Weighting::Value => c.mv.unwrap_or(0.0),
        };
        num += w * r;
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

fn snapshot(members: &[&Candidate], total_mv: f64) -> BucketSnapshot {
    let avg = |f: fn(&Candidate) -> Option<f64>| mean(&members.iter().filter_map(|c| f(c)).collect::<Vec<_>>());
    let mv: f64 = members.iter().filter_map(|c| c.mv).sum();
    BucketSnapshot {
        pct_mv: (total_mv > 0.0).then(|| 100.0 * mv / total_mv),
        bm: avg(|c| c.bm),
        liquidity: avg(|c| c.turnover),
    }
}

fn finish_period(period: &Period, all: &[Candidate], buckets: Vec<Vec<&Candidate>>, weighting: Weighting) -> Option<PeriodResult> {
    let returns: Option<Vec<f64>> = buckets.iter().map(|b| bucket_return(b, weighting)).collect();
    let Some(returns) = returns else {
        log::debug!("{}: a bucket has no usable returns", period.formation);
        return None;
    };
    let market = mean(&all.iter().filter_map(|c| c.ret).collect::<Vec<_>>())?;
    let total_mv: f64 = all.iter().filter_map(|c| c.mv).sum();
    Some(PeriodResult {
        formation: period.formation,
        period: period.key,
        snapshots: buckets.iter().map(|b| snapshot(b, total_mv)).collect(),
        buckets: buckets.iter().map(|b| b.iter().map(|c| c.ticker.clone()).collect()).collect(),
        returns,
        market,
    })
}

fn collect(k: usize, results: Vec<(NaiveDate, usize, Option<PeriodResult>)>) -> SortResult {
    let mut out = SortResult { k, ..Default::default() };
    for (f, n, r) in results {
        match r {
            Some(p) => out.periods.push(p),
            None => out.skipped.push((f, n)),
        }
    }
    if !out.skipped.is_empty() {
        log::info!("{} formation periods skipped", out.skipped.len());
    }
    out
}

/// Single sort of firms into `k` buckets by the signal each period.
pub fn sort_portfolios(signal: &Panel, spec: &SortSpec, inputs: &SortInputs<'_>) -> Result<SortResult> {
    spec.validate()?;
    let k = spec.k;
    let results = periods(signal, spec, inputs.calendar)
        .par_iter()
        .map(|p| {
            let cands = candidates(p, signal, None, spec, inputs);
            if cands.len() < k {
                return (p.formation, cands.len(), None);
            }
            let keyed: Vec<(&str, f64)> = cands.iter().map(|c| (c.ticker.as_str(), c.signal)).collect();
            let buckets = assign_buckets(&keyed, k).into_iter().map(|b| b.into_iter().map(|i| &cands[i]).collect()).collect();
            (p.formation, cands.len(), finish_period(p, &cands, buckets, spec.weighting))
        })
        .collect();
    Ok(collect(k, results))
}

/// Sorts by `control` into `k` buckets, then by `signal` within each into
/// `k` sub-buckets; rank `r` pools the `r`-th sub-buckets.
pub fn double_sort(control: &Panel, signal: &Panel, spec: &SortSpec, inputs: &SortInputs<'_>) -> Result<SortResult> {
    spec.validate()?;
    let k = spec.k;
    let results = periods(signal, spec, inputs.calendar)
        .par_iter()
        .map(|p| {
            let cands = candidates(p, signal, Some(control), spec, inputs);
            if cands.len() < k {
                return (p.formation, cands.len(), None);
            }
            let by_control: Vec<(&str, f64)> = cands.iter().map(|c| (c.ticker.as_str(), c.control)).collect();
            let mut pooled: Vec<Vec<&Candidate>> = vec![Vec::new(); k];
            let mut used = 0;
            for group in assign_buckets(&by_control, k) {
                if group.len() < k {
                    log::debug!("{}: control bucket of {} firms skipped", p.formation, group.len());
                    continue;
                }
                used += 1;
                let by_signal: Vec<(&str, f64)> = group.iter().map(|&i| (cands[i].ticker.as_str(), cands[i].signal)).collect();
                for (rank, sub) in assign_buckets(&by_signal, k).into_iter().enumerate() {
                    pooled[rank].extend(sub.into_iter().map(|j| &cands[group[j]]));
                }
            }
            if used == 0 {
                return (p.formation, cands.len(), None);
            }
            (p.formation, cands.len(), finish_period(p, &cands, pooled, spec.weighting))
        })
        .collect();
    Ok(collect(k, results))
}

// ---------------------------------------------------------------------------
// Performance
// ---------------------------------------------------------------------------

/// `Π(1 + r_s) - 1` after each period; once the path reaches -1 it stays.
pub fn cumulative(returns: &[f64]) -> Vec<f64> {
    let mut growth = 1.0;
    returns
        .iter()
        .map(|r| {
            growth = if growth <= 0.0 { 0.0 } else { (growth * (1.0 + r)).max(0.0) };
            growth - 1.0
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaFit {
    pub alpha: f64,
    pub t: f64,
    pub r2: f64,
    pub lags: usize,
}

/// Intercept of the series on the model's factors with a Newey-West t.
/// With `excess`, the risk-free rate is subtracted from the series first.
pub fn factor_alpha(
    series: &[(NaiveDate, f64)],
    factors: &FactorSeries,
    model: FactorModel,
    excess: bool,
    lags: Option<usize>,
) -> Result<AlphaFit> {
    let n = series.len();
    let lags = lags.unwrap_or_else(|| default_nw_lags(n));
    if n < 2 * (lags + 1) {
        return Err(Error::InsufficientSupport(format!("series of {n} periods is too short for {lags} Newey-West lags")));
    }
    let k = model.names().len();
    let mut x = DMatrix::zeros(n, k + 1);
    let mut y = DVector::zeros(n);
    for (row, (d, r)) in series.iter().enumerate() {
        let f = factors.get(*d).ok_or(Error::MissingFactorDate(*d))?;
        x[(row, 0)] = 1.0;
        for (j, v) in model.values(f).into_iter().enumerate() {
            x[(row, j + 1)] = v;
        }
        y[row] = if excess { r - f.rf } else { *r };
    }
    let mut names = vec!["alpha".to_string()];
    names.extend(model.names().iter().map(|s| s.to_string()));
    let fit = ols_fit(&x, &y, &names)?;
    let res = fit.newey_west(lags)?;
    Ok(AlphaFit { alpha: res.coefficients[0], t: res.t[0], r2: res.r2, lags })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceConfig {
    /// Periods per year used for the Sharpe ratio (252 daily, 12 monthly).
    pub periods_per_year: f64,
    /// Newey-West lags; `None` uses the automatic rule.
    pub nw_lags: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Performance {
    pub n: usize,
    pub mean: f64,
    pub sharpe: f64,
    pub ff3: AlphaFit,
    pub ff5: AlphaFit,
}

/// Mean, annualized Sharpe ratio and FF3/FF5 alphas. For a long-only
/// series pass `excess = true`; a long-short spread is already excess.
pub fn performance(series: &[(NaiveDate, f64)], factors: &FactorSeries, excess: bool, cfg: &PerformanceConfig) -> Result<Performance> {
    let mut ex = Vec::with_capacity(series.len());
    for (d, r) in series {
        let rf = if excess { factors.get(*d).ok_or(Error::MissingFactorDate(*d))?.rf } else { 0.0 };
        ex.push(r - rf);
    }
    let raw: Vec<f64> = series.iter().map(|(_, r)| *r).collect();
    let sd = std_dev(&ex).unwrap_or(f64::NAN);
    let sharpe = mean(&ex).unwrap_or(f64::NAN) / sd * cfg.periods_per_year.sqrt();
    Ok(Performance {
        n: series.len(),
        mean: mean(&raw).unwrap_or(f64::NAN),
        sharpe,
        ff3: factor_alpha(series, factors, FactorModel::Ff3, excess, cfg.nw_lags)?,
        ff5: factor_alpha(series, factors, FactorModel::Ff5, excess, cfg.nw_lags)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub performance: Performance,
    pub snapshot: BucketSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioReport {
    pub rebalance: Rebalance,
    pub rows: Vec<ReportRow>,
    /// Cumulative return paths of every rank, keyed by label.
    pub cumulative: BTreeMap<String, Vec<(NaiveDate, f64)>>,
}

/// Ranks `1..=K`, the `K-1` long-short spread and the market benchmark.
/// `factors` are daily; monthly sorts use their monthly compounding.
pub fn portfolio_report(
    result: &SortResult,
    factors: &FactorSeries,
    rebalance: Rebalance,
    cfg: &PerformanceConfig,
) -> Result<PortfolioReport> {
    let monthly;
    let factors = match rebalance {
        Rebalance::Daily => factors,
        Rebalance::Monthly => {
            monthly = factors.monthly();
            &monthly
        }
    };
    let k = result.k;
    let avg_snapshot = |rank: usize| {
        let col = |f: fn(&BucketSnapshot) -> Option<f64>| {
            mean(&result.periods.iter().filter_map(|p| f(&p.snapshots[rank])).collect::<Vec<_>>())
        };
        BucketSnapshot { pct_mv: col(|s| s.pct_mv), bm: col(|s| s.bm), liquidity: col(|s| s.liquidity) }
    };
    let mut rows = Vec::new();
    let mut cumulative_paths = BTreeMap::new();
    for rank in 1..=k {
        let s = result.rank_series(rank);
        rows.push(ReportRow { label: rank.to_string(), performance: performance(&s, factors, true, cfg)?, snapshot: avg_snapshot(rank - 1) });
        cumulative_paths.insert(rank.to_string(), path(&s));
    }
    let ls = result.long_short();
    let ls_label = format!("{k}-1");
    rows.push(ReportRow { label: ls_label.clone(), performance: performance(&ls, factors, false, cfg)?, snapshot: BucketSnapshot::default() });
    cumulative_paths.insert(ls_label, path(&ls));
    let mkt = result.market();
    let market_snapshot = BucketSnapshot { pct_mv: Some(100.0), ..BucketSnapshot::default() };
    rows.push(ReportRow { label: "market".into(), performance: performance(&mkt, factors, true, cfg)?, snapshot: market_snapshot });
    cumulative_paths.insert("market".into(), path(&mkt));
    Ok(PortfolioReport { rebalance, rows, cumulative: cumulative_paths })
}

fn path(series: &[(NaiveDate, f64)]) -> Vec<(NaiveDate, f64)> {
    let r: Vec<f64> = series.iter().map(|(_, v)| *v).collect();
    series.iter().map(|(d, _)| *d).zip(cumulative(&r)).collect()
}
