//! End-to-end runs shared by the CLI subcommands: load the dataset,
//! identify linkages, build variables, estimate and render.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus::{
    compute_returns, load_articles, load_book_equity, load_factors, load_firm_master, load_prices, ArticleSet,
    Characteristic, FactorModel, FactorSeries, FirmMaster, PriceTable, ReturnPanel, TradingCalendar,
};
use crate::econ::{ff_residuals, panel_regress, PanelSpec, RegressionResult};
use crate::error::{Error, Result};
use crate::identify::{identify_articles, save_linkages, IdentConfig, IdentSummary, Linkage};
use crate::network::{degree, fit_power_law, DegreeMode, PowerLawFit, Window};
use crate::panel::Panel;
use crate::portfolio::{portfolio_report, sort_portfolios, PerformanceConfig, Rebalance, ReturnSource, SortInputs, SortResult, Timing};
use crate::report::{
    bootstrap_band, cumulative_svg, degree_svg, effect_line, portfolio_table, regression_table, scatter_svg, write_text,
};
use crate::stats::std_dev;
use crate::variables::{
    lead_return_panel, monthly_degree_panel, save_panel_long, Breakpoints, DegreeVariant, LinkageIndex, LrVariant,
    MarketData,
};

/// Everything read from the data directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub articles: ArticleSet,
    pub master: FirmMaster,
    pub prices: PriceTable,
    pub calendar: TradingCalendar,
    pub returns: ReturnPanel,
    pub factors: FactorSeries,
}

impl Dataset {
    /// Reads `articles.jsonl`, `firms.csv`, `membership.csv`, `prices.csv`
    /// and `factors.csv` from `dir`.
    pub fn load(dir: &Path, book_equity: Option<&Path>) -> Result<Self> {
        let master = load_firm_master(dir.join("firms.csv"), dir.join("membership.csv"))?;
        let mut prices = load_prices(dir.join("prices.csv"), &master)?;
        if let Some(path) = book_equity {
            let statements = load_book_equity(path, &master)?;
            prices.apply_book_equity(&statements);
        }
        let calendar = prices.calendar();
        let returns = compute_returns(&prices, &calendar)?;
        let factors = load_factors(dir.join("factors.csv"), &calendar)?;
        let articles = load_articles(dir.join("articles.jsonl"))?;
        Ok(Self { articles, master, prices, calendar, returns, factors })
    }

    pub fn market_data(&self) -> MarketData<'_> {
        MarketData { master: &self.master, prices: &self.prices, returns: &self.returns, calendar: &self.calendar }
    }
}

pub fn ident_config(cfg: &RunConfig) -> Result<IdentConfig> {
    match &cfg.ident_config.0 {
        Some(p) => IdentConfig::load(p),
        None => Ok(IdentConfig::default()),
    }
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    Dataset::load(&cfg.data_dir, cfg.book_equity.0.as_deref())
}

pub const RESPONSES: [&str; 4] = ["ret", "exret", "resid_ff3", "resid_ff5"];
pub const CONTROLS: [&str; 4] = ["logmv", "bm", "turnover", "mv"];

/// Return-side panels by name: `ret` (log return), `exret` (minus rf),
/// `resid_ff3`, `resid_ff5`.
pub fn response_panel(name: &str, data: &Dataset) -> Result<Panel> {
    match name {
        "ret" => Ok(data.returns.clone()),
        "exret" => {
            let mut out = Panel::new();
            for (tk, d, r) in data.returns.iter() {
                let f = data.factors.get(d).ok_or(Error::MissingFactorDate(d))?;
                out.insert(tk, d, r - f.rf);
            }
            Ok(out)
        }
        "resid_ff3" => Ok(ff_residuals(&data.returns, &data.factors, FactorModel::Ff3)?.residuals),
        "resid_ff5" => Ok(ff_residuals(&data.returns, &data.factors, FactorModel::Ff5)?.residuals),
        _ => Err(Error::InvalidInput(format!("unknown response `{name}`; expected one of {}", RESPONSES.join(", ")))),
    }
}

/// Firm characteristics by name: `logmv`, `bm`, `turnover`, `mv`.
pub fn control_panel(name: &str, prices: &PriceTable) -> Result<Panel> {
    let c = match name {
        "logmv" => Characteristic::LogMarketValue,
        "bm" => Characteristic::BookToMarket,
        "turnover" => Characteristic::Turnover,
        "mv" => Characteristic::MarketValue,
        _ => return Err(Error::InvalidInput(format!("unknown control `{name}`; expected one of {}", CONTROLS.join(", ")))),
    };
    Ok(prices.characteristic_panel(c))
}

/// Lead-return and degree panels keyed by variant name. Degree panels for
/// extra windows carry a `_w<days>` suffix.
#[derive(Debug, Clone, Default)]
pub struct Variables {
    pub panels: BTreeMap<String, Panel>,
    pub missing_lead_returns: usize,
    pub out_of_universe: usize,
}

pub fn build_variables(
    linkages: &[Linkage],
    data: &Dataset,
    net_window: u32,
    degree_windows: &[u32],
    breakpoints: Breakpoints,
) -> Variables {
    let index = LinkageIndex::new(linkages);
    let lr = lead_return_panel(&index, &data.market_data(), net_window, breakpoints);
    let mut out = Variables {
        missing_lead_returns: lr.diagnostics.missing_lead_returns,
        out_of_universe: lr.diagnostics.out_of_universe,
        ..Default::default()
    };
    for (v, p) in lr.variants {
        out.panels.insert(v.name(), p);
    }
    let months = data.calendar.months();
    for (n, &w) in degree_windows.iter().enumerate() {
        let deg = monthly_degree_panel(&index, &data.master, &data.prices, &months, w, breakpoints);
        for (v, p) in deg.variants {
            let name = if n == 0 { v.name() } else { format!("{}_w{w}", v.name()) };
            out.panels.insert(name, p);
        }
    }
    out
}

/// Resolves a regressor or signal name against the variable panels and
/// the firm characteristics.
pub fn named_panel<'a>(name: &str, variables: &'a BTreeMap<String, Panel>, prices: &PriceTable) -> Result<std::borrow::Cow<'a, Panel>> {
    if let Some(p) = variables.get(name) {
        return Ok(std::borrow::Cow::Borrowed(p));
    }
    if let Ok(v) = name.parse::<LrVariant>() {
        if let Some(p) = variables.get(&v.name()) {
            return Ok(std::borrow::Cow::Borrowed(p));
        }
    }
    if let Ok(v) = name.parse::<DegreeVariant>() {
        if let Some(p) = variables.get(&v.name()) {
            return Ok(std::borrow::Cow::Borrowed(p));
        }
    }
    control_panel(name, prices).map(std::borrow::Cow::Owned).map_err(|_| Error::InvalidInput(format!("unknown variable `{name}`")))
}

/// `y` on `x` plus controls with entity effects and two-way clustering.
pub fn regress(
    y: &Panel,
    x: &[(&str, &Panel)],
    calendar: &TradingCalendar,
    h: usize,
    winsorize: Option<f64>,
) -> Result<RegressionResult> {
    Ok(panel_regress(y, x, calendar, &PanelSpec { h, winsorize })?.result)
}

pub fn performance_config(cfg: &RunConfig, rebalance: Rebalance) -> PerformanceConfig {
    PerformanceConfig { periods_per_year: cfg.periods_per_year(rebalance), nw_lags: cfg.nw_lags.lags() }
}

/// Power-law fit of the degree distribution of the full network ending on
/// `as_of`, with the `(degree, relative frequency)` points used.
pub fn degree_distribution(
    linkages: &[Linkage],
    master: &FirmMaster,
    as_of: NaiveDate,
    window_days: u32,
) -> Result<(Vec<(u32, f64)>, PowerLawFit)> {
    let index = LinkageIndex::new(linkages);
    let (net, _) = index.network(Window::ending(as_of, window_days), &master.universe_at(as_of));
    let degrees = degree(&net, DegreeMode::Total);
    let fit = fit_power_law(&degrees)?;
    let mut freq: BTreeMap<u32, usize> = BTreeMap::new();
    let positive: Vec<u32> = degrees.into_iter().filter(|d| *d > 0).collect();
    for d in &positive {
        *freq.entry(*d).or_default() += 1;
    }
    let n = positive.len() as f64;
    Ok((freq.into_iter().map(|(d, c)| (d, c as f64 / n)).collect(), fit))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub articles: usize,
    pub ident: BTreeMap<String, usize>,
    pub linkages: usize,
    pub missing_lead_returns: usize,
    pub out_of_universe: usize,
    pub effect: String,
    pub lr_sigma: f64,
    pub power_law_gamma: Option<f64>,
    pub power_law_r2: Option<f64>,
    pub outputs: Vec<String>,
}

fn verdict_counts(s: &IdentSummary) -> BTreeMap<String, usize> {
    s.verdicts.iter().map(|(v, n)| (v.to_string(), *n)).collect()
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        write_text(&p, text)
    }
}

fn sort_named(
    signal: &Panel,
    cfg: &RunConfig,
    timing: Timing,
    rebalance: Rebalance,
    data: &Dataset,
    source: ReturnSource<'_>,
) -> Result<SortResult> {
    let mut spec = cfg.sort_spec(timing);
    spec.rebalance = rebalance;
    let inputs = SortInputs { returns: &data.returns, source, prices: &data.prices, calendar: &data.calendar };
    sort_portfolios(signal, &spec, &inputs)
}

/// Runs every stage on the dataset in `cfg.data_dir` and writes tables,
/// panels and figures into `cfg.out_dir`. Output bytes depend only on the
/// configuration and the data.
pub fn run_report(cfg: &RunConfig) -> Result<RunSummary> {
    let data = load_dataset(cfg)?;
    let ident = identify_articles(&data.articles, &data.master, &ident_config(cfg)?);
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut out = Outputs { dir: cfg.out_dir.clone(), written: Vec::new() };
    save_linkages(&ident.linkages, out.path("linkages.csv"))?;

    let breakpoints = Breakpoints { lower: cfg.lower_quantile, upper: cfg.upper_quantile };
    let mut windows = vec![cfg.degree_window];
    windows.extend(cfg.robustness_windows.0.iter().copied().filter(|w| *w != cfg.degree_window));
    let vars = build_variables(&ident.linkages, &data, cfg.net_window, &windows, breakpoints);
    save_panel_long(vars.panels.iter().map(|(n, p)| (n.clone(), p)), out.path("variables.csv"))?;

    let winsor = cfg.winsorize.0;
    let responses: BTreeMap<&str, Panel> =
        RESPONSES.iter().map(|n| Ok((*n, response_panel(n, &data)?))).collect::<Result<_>>()?;
    let controls: Vec<(&str, Panel)> =
        ["logmv", "bm", "turnover"].iter().map(|n| Ok((*n, control_panel(n, &data.prices)?))).collect::<Result<_>>()?;
    let lr_full = &vars.panels[&LrVariant::Full.name()];

    // contemporaneous comovement
    let mut comovement = Vec::new();
    for y in ["ret", "resid_ff3", "resid_ff5"] {
        let mut x: Vec<(&str, &Panel)> = vec![("LR_full", lr_full)];
        x.extend(controls.iter().map(|(n, p)| (*n, p)));
        comovement.push((y.to_string(), regress(&responses[y], &x, &data.calendar, 0, winsor)?));
    }
    for group in [&[LrVariant::Pos, LrVariant::Neg][..], &[LrVariant::Within, LrVariant::Cross], &[LrVariant::Agg]] {
        let names: Vec<String> = group.iter().map(|v| v.name()).collect();
        let x: Vec<(&str, &Panel)> = names.iter().map(|n| (n.as_str(), &vars.panels[n])).collect();
        let label = format!("resid_ff3 ~ {}", names.join(" + "));
        comovement.push((label, regress(&responses["resid_ff3"], &x, &data.calendar, 0, winsor)?));
    }
    regression_table(&comovement).save(&cfg.out_dir, "regression_comovement")?;
    out.written.extend(["regression_comovement.csv".into(), "regression_comovement.md".into()]);

    // next-day predictability
    let mut predictive = Vec::new();
    for y in ["resid_ff3", "resid_ff5"] {
        predictive.push((format!("{y} (h=1)"), regress(&responses[y], &[("LR_full", lr_full)], &data.calendar, 1, winsor)?));
    }
    regression_table(&predictive).save(&cfg.out_dir, "regression_predictive")?;
    out.written.extend(["regression_predictive.csv".into(), "regression_predictive.md".into()]);

    let lr_values: Vec<f64> = lr_full.iter().map(|(_, _, v)| v).collect();
    let sigma = std_dev(&lr_values).unwrap_or(f64::NAN);
    let beta = comovement[1].1.coef("LR_full").unwrap_or(f64::NAN);
    let effect = effect_line(beta, sigma);
    out.text("effect.txt", &format!("one-sd lead return effect on resid_ff3: {effect} (beta {beta:.4}, sd {:.4}%)\n", sigma * 100.0))?;

    // portfolios
    let daily = performance_config(cfg, Rebalance::Daily);
    let resid3 = &responses["resid_ff3"];
    let sorts: Vec<(&str, &Panel, Timing, Rebalance, ReturnSource<'_>)> = vec![
        ("portfolio_lr_infeasible", lr_full, Timing::Contemporaneous, Rebalance::Daily, ReturnSource::Raw),
        ("portfolio_lr_residual", lr_full, Timing::Contemporaneous, Rebalance::Daily, ReturnSource::Panel(resid3)),
        ("portfolio_lr_predictive", lr_full, Timing::Predictive, Rebalance::Daily, ReturnSource::Raw),
    ];
    let mut degree_sorts: Vec<(String, &Panel)> = vec![("portfolio_degree".into(), &vars.panels[&DegreeVariant::Total.name()])];
    for w in windows.iter().skip(1) {
        degree_sorts.push((format!("portfolio_degree_w{w}"), &vars.panels[&format!("{}_w{w}", DegreeVariant::Total.name())]));
    }
    for (stem, signal, timing, rebalance, source) in sorts {
        let result = sort_named(signal, cfg, timing, rebalance, &data, source)?;
        let report = portfolio_report(&result, &data.factors, rebalance, &daily)?;
        portfolio_table(&report).save(&cfg.out_dir, stem)?;
        out.written.extend([format!("{stem}.csv"), format!("{stem}.md")]);
    }
    let degree_cfg = performance_config(cfg, cfg.rebalance);
    for (n, (stem, signal)) in degree_sorts.iter().enumerate() {
        let result = sort_named(signal, cfg, Timing::Predictive, cfg.rebalance, &data, ReturnSource::Raw)?;
        let report = portfolio_report(&result, &data.factors, cfg.rebalance, &degree_cfg)?;
        portfolio_table(&report).save(&cfg.out_dir, stem)?;
        out.written.extend([format!("{stem}.csv"), format!("{stem}.md")]);
        if n == 0 {
            out.text("cumret_degree.svg", &cumulative_svg(&report.cumulative, "Cumulative returns by degree rank"))?;
        }
    }

    // figures
    let (xs, ys): (Vec<f64>, Vec<f64>) = lr_full
        .iter()
        .filter(|(_, _, x)| *x != 0.0)
        .filter_map(|(tk, d, x)| data.returns.get(tk, d).map(|r| (x, r)))
        .unzip();
    if xs.len() >= 2 {
        let band = bootstrap_band(&xs, &ys, cfg.bootstrap_resamples, cfg.bootstrap_seed)?;
        out.text("scatter_lr.svg", &scatter_svg(&xs, &ys, "LR_full", "ret", &band))?;
    }
    let mut summary_fit = None;
    if let Some(last) = data.calendar.last() {
        match degree_distribution(&ident.linkages, &data.master, last, cfg.net_window) {
            Ok((points, fit)) => {
                out.text("degree_loglog.svg", &degree_svg(&points, &fit))?;
                summary_fit = Some(fit);
            }
            Err(e) => log::warn!("degree plot skipped: {e}"),
        }
    }

    let summary = RunSummary {
        articles: data.articles.len(),
        ident: verdict_counts(&ident.summary),
        linkages: ident.linkages.len(),
        missing_lead_returns: vars.missing_lead_returns,
        out_of_universe: vars.out_of_universe,
        effect,
        lr_sigma: sigma,
        power_law_gamma: summary_fit.as_ref().map(|f| f.gamma),
        power_law_r2: summary_fit.map(|f| f.r2),
        outputs: out.written.clone(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::InvalidInput(e.to_string()))?;
    out.text("summary.json", &(json + "\n"))?;
    Ok(summary)
}
