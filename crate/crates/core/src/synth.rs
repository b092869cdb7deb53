//! Seeded synthetic markets and news corpora with planted ground truth.
//!
//! The market follows a factor model whose idiosyncratic parts propagate
//! along a planted lead-follower network:
//!
//! ```text
//! r_it = rf + B_i f_t + e_it
//! e_it = β Σ_j W_ij e_jt + ρ Σ_j W_ij e_j,t-1 + u_it
//! ```
//!
//! `W` is row-normalized and acyclic (leads precede their followers in a
//! hidden order), so `e` is solved in one pass. The corpus renders every
//! planned `(follower, lead, info day)` triple as one article and mixes in
//! distractors that the screening rules must reject.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, DateTime, Duration, FixedOffset, NaiveDate, TimeZone, Weekday};
use chrono_tz::America::New_York;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::config::KvFile;
use crate::corpus::{
    save_articles, save_factors, save_firm_master, save_prices, Article, ArticleSet, FactorRow, FactorSeries, Firm,
    FirmMaster, Month, PriceRecord, PriceTable, TradingCalendar, INFO_DAY_CUTOFF,
};
use crate::error::{Error, Result};
use crate::identify::{save_linkages, IdentConfig, Linkage, Strategy, Verdict};
use crate::panel::Panel;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_firms: usize,
    /// Trading days with prices.
    pub n_days: usize,
    pub start_date: NaiveDate,
    pub n_sectors: usize,

    /// Daily volatilities of mkt_rf, smb, hml, rmw, cma.
    pub factor_vol: [f64; 5],
    pub mkt_mean: f64,
    /// Daily risk-free rate.
    pub rf: f64,
    pub idio_vol: f64,
    /// Contemporaneous loading on the network composite of idiosyncratic returns.
    pub beta: f64,
    /// Loading on the previous day's composite.
    pub reversal: f64,

    /// Probability that a firm (other than the first in the hidden order) has leads.
    pub follower_rate: f64,
    /// Exponent and support bound of the power law drawing each follower's lead count.
    pub degree_gamma: f64,
    pub max_leads: u32,
    /// Expected articles per year per unit of pair multiplicity.
    pub articles_per_pair_year: f64,
    /// Calendar days of news before the first trading date.
    pub burn_in_days: u32,

    /// Relative frequencies of bracket (S1), name (S2) and plain-ticker (S3) lead mentions.
    pub bracket_rate: f64,
    pub segment_rate: f64,
    pub plain_rate: f64,
    /// Distractor articles per planned article.
    pub distractor_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_firms: 100,
            n_days: 500,
            start_date: NaiveDate::from_ymd_opt(2019, 1, 2).expect("valid date"),
            n_sectors: 6,
            factor_vol: [0.01, 0.005, 0.005, 0.004, 0.004],
            mkt_mean: 0.0003,
            rf: 0.0001,
            idio_vol: 0.02,
            beta: 0.75,
            reversal: 0.0,
            follower_rate: 0.85,
            degree_gamma: 2.12,
            max_leads: 20,
            articles_per_pair_year: 6.0,
            burn_in_days: 365,
            bracket_rate: 0.3,
            segment_rate: 0.4,
            plain_rate: 0.3,
            distractor_rate: 0.05,
        }
    }
}

const SYNTH_KEYS: &[(&str, &str)] = &[
    ("general", "seed"),
    ("general", "n_firms"),
    ("general", "n_days"),
    ("general", "start_date"),
    ("general", "n_sectors"),
    ("market", "vol_mkt"),
    ("market", "vol_smb"),
    ("market", "vol_hml"),
    ("market", "vol_rmw"),
    ("market", "vol_cma"),
    ("market", "mkt_mean"),
    ("market", "rf"),
    ("market", "idio_vol"),
    ("market", "beta"),
    ("market", "reversal"),
    ("network", "follower_rate"),
    ("network", "degree_gamma"),
    ("network", "max_leads"),
    ("corpus", "articles_per_pair_year"),
    ("corpus", "burn_in_days"),
    ("corpus", "bracket_rate"),
    ("corpus", "segment_rate"),
    ("corpus", "plain_rate"),
    ("corpus", "distractor_rate"),
];

impl SynthConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        kv.reject_unknown(SYNTH_KEYS)?;
        let mut c = Self::default();
        kv.set("general", "seed", &mut c.seed)?;
        kv.set("general", "n_firms", &mut c.n_firms)?;
        kv.set("general", "n_days", &mut c.n_days)?;
        kv.set("general", "start_date", &mut c.start_date)?;
        kv.set("general", "n_sectors", &mut c.n_sectors)?;
        for (i, key) in ["vol_mkt", "vol_smb", "vol_hml", "vol_rmw", "vol_cma"].iter().enumerate() {
            kv.set("market", key, &mut c.factor_vol[i])?;
        }
        kv.set("market", "mkt_mean", &mut c.mkt_mean)?;
        kv.set("market", "rf", &mut c.rf)?;
        kv.set("market", "idio_vol", &mut c.idio_vol)?;
        kv.set("market", "beta", &mut c.beta)?;
        kv.set("market", "reversal", &mut c.reversal)?;
        kv.set("network", "follower_rate", &mut c.follower_rate)?;
        kv.set("network", "degree_gamma", &mut c.degree_gamma)?;
        kv.set("network", "max_leads", &mut c.max_leads)?;
        kv.set("corpus", "articles_per_pair_year", &mut c.articles_per_pair_year)?;
        kv.set("corpus", "burn_in_days", &mut c.burn_in_days)?;
        kv.set("corpus", "bracket_rate", &mut c.bracket_rate)?;
        kv.set("corpus", "segment_rate", &mut c.segment_rate)?;
        kv.set("corpus", "plain_rate", &mut c.plain_rate)?;
        kv.set("corpus", "distractor_rate", &mut c.distractor_rate)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_firms < 10 {
            return Err(Error::Config(format!("n_firms must be at least 10, got {}", self.n_firms)));
        }
        if self.n_days < 3 {
            return Err(Error::Config("n_days must be at least 3".into()));
        }
        if self.n_sectors == 0 {
            return Err(Error::Config("n_sectors must be positive".into()));
        }
        let rates = [
            ("follower_rate", self.follower_rate),
            ("bracket_rate", self.bracket_rate),
            ("segment_rate", self.segment_rate),
            ("plain_rate", self.plain_rate),
            ("distractor_rate", self.distractor_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {r}")));
            }
        }
        if self.bracket_rate + self.segment_rate + self.plain_rate <= 0.0 {
            return Err(Error::Config("at least one mention rate must be positive".into()));
        }
        if self.max_leads == 0 || self.degree_gamma <= 0.0 {
            return Err(Error::Config("max_leads and degree_gamma must be positive".into()));
        }
        let vols = self.factor_vol.iter().chain([&self.idio_vol]);
        if vols.into_iter().any(|v| !(*v >= 0.0 && v.is_finite())) || self.articles_per_pair_year < 0.0 {
            return Err(Error::Config("volatilities and intensities must be non-negative".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[general]\nseed = {}\nn_firms = {}\nn_days = {}\nstart_date = {}\nn_sectors = {}", self.seed, self.n_firms, self.n_days, self.start_date, self.n_sectors);
        let v = self.factor_vol;
        let _ = writeln!(s, "\n[market]\nvol_mkt = {}\nvol_smb = {}\nvol_hml = {}\nvol_rmw = {}\nvol_cma = {}", v[0], v[1], v[2], v[3], v[4]);
        let _ = writeln!(s, "mkt_mean = {}\nrf = {}\nidio_vol = {}\nbeta = {}\nreversal = {}", self.mkt_mean, self.rf, self.idio_vol, self.beta, self.reversal);
        let _ = writeln!(s, "\n[network]\nfollower_rate = {}\ndegree_gamma = {}\nmax_leads = {}", self.follower_rate, self.degree_gamma, self.max_leads);
        let _ = writeln!(
            s,
            "\n[corpus]\narticles_per_pair_year = {}\nburn_in_days = {}\nbracket_rate = {}\nsegment_rate = {}\nplain_rate = {}\ndistractor_rate = {}",
            self.articles_per_pair_year, self.burn_in_days, self.bracket_rate, self.segment_rate, self.plain_rate, self.distractor_rate
        );
        s
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

// Independent RNG streams, one per generation step.
const STREAM_FIRMS: u64 = 1;
const STREAM_NETWORK: u64 = 2;
const STREAM_RETURNS: u64 = 3;
const STREAM_PLAN: u64 = 4;
const STREAM_CORPUS: u64 = 5;

// ---------------------------------------------------------------------------
// Discrete power law
// ---------------------------------------------------------------------------

/// Draws from `P(d) ∝ d^-γ` on `1..=d_max` by inverse CDF.
#[derive(Debug, Clone)]
pub struct PowerLaw {
    cdf: Vec<f64>,
}

impl PowerLaw {
    pub fn new(gamma: f64, d_max: u32) -> Self {
        let weights: Vec<f64> = (1..=d_max).map(|d| f64::from(d).powf(-gamma)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|c| *c < u);
        k.min(self.cdf.len() - 1) as u32 + 1
    }
}

impl Distribution<u32> for PowerLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        PowerLaw::sample(self, rng)
    }
}

// ---------------------------------------------------------------------------
// Firms
// ---------------------------------------------------------------------------

const ONSETS: &[&str] = &["b", "br", "d", "dr", "f", "g", "gr", "k", "kl", "l", "m", "n", "p", "pr", "r", "s", "st", "t", "tr", "v", "z"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "eo"];
const CODAS: &[&str] = &["", "", "n", "r", "x", "l", "s", "m"];
const FORMS: &[&str] = &["Inc", "Corp", "Holdings", "Group", "Ltd", "Co"];
const SECTORS: &[&str] = &[
    "Information Technology", "Health Care", "Financials", "Consumer Discretionary", "Industrials",
    "Communication Services", "Consumer Staples", "Energy", "Utilities", "Real Estate", "Materials",
];

fn capitalized<R: Rng>(rng: &mut R, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
        w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
    }
    w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
    let mut c = w.chars();
    let first = c.next().expect("non-empty").to_ascii_uppercase();
    std::iter::once(first).chain(c).collect()
}

/// Words that appear in corpus templates; generated names must avoid them.
fn template_words() -> BTreeSet<String> {
    HEADLINES
        .iter()
        .chain(CONTENT_LEAD)
        .chain(CONTENT_FOLLOWER)
        .chain(DISTRACTOR_TEXT)
        .chain(PUBLISHERS)
        .flat_map(|t| t.split(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone)]
struct SynthFirm {
    ticker: String,
    /// Distinctive first name word.
    short: String,
    /// Name without legal form.
    base: String,
    full: String,
    sector: String,
}

fn generate_firms(cfg: &SynthConfig) -> Vec<SynthFirm> {
    let mut rng = cfg.rng(STREAM_FIRMS);
    let reserved = template_words();
    let ident = IdentConfig::default();
    let mut words: BTreeSet<String> = BTreeSet::new();
    let mut tickers: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::with_capacity(cfg.n_firms);
    let fresh_word = |rng: &mut ChaCha8Rng, words: &mut BTreeSet<String>| loop {
        let w = capitalized(rng, 2);
        let clash = reserved.contains(&w)
            || ident.segment_redundant.contains(&w)
            || ident.suffix_stopwords.iter().any(|s| s.eq_ignore_ascii_case(&w));
        if !clash && words.insert(w.clone()) {
            return w;
        }
    };
    let sector_count = cfg.n_sectors.min(SECTORS.len());
    for i in 0..cfg.n_firms {
        let short = fresh_word(&mut rng, &mut words);
        let second = fresh_word(&mut rng, &mut words);
        let ticker = loop {
            let len = if rng.random_bool(0.5) { 4 } else { 3 };
            let t: String = (0..len).map(|_| char::from(b'A' + rng.random_range(0..26u8))).collect();
            let bad = ident.ticker_exceptions.contains(&t) || reserved.contains(&t) || matches!(t.as_str(), "NYSE" | "AMEX");
            if !bad && tickers.insert(t.clone()) {
                break t;
            }
        };
        let base = format!("{short} {second}");
        let full = format!("{base} {}", FORMS[rng.random_range(0..FORMS.len())]);
        out.push(SynthFirm { ticker, short, base, full, sector: SECTORS[i % sector_count].to_string() });
    }
    out
}

// ---------------------------------------------------------------------------
// Market
// ---------------------------------------------------------------------------

/// The planted network and loadings.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketOracle {
    /// Hidden order: leads always precede their followers.
    pub order: Vec<String>,
    /// Follower -> `(lead, multiplicity)`; weights are multiplicities over their row sum.
    pub leads: BTreeMap<String, Vec<(String, u32)>>,
    /// `[mkt_rf, smb, hml, rmw, cma]` loadings per ticker.
    pub loadings: BTreeMap<String, [f64; 5]>,
    pub beta: f64,
    pub reversal: f64,
}

impl MarketOracle {
    /// Row-normalized planted weights of a follower.
    pub fn weights(&self, follower: &str) -> Vec<(&str, f64)> {
        let Some(row) = self.leads.get(follower) else { return Vec::new() };
        let total: u32 = row.iter().map(|(_, m)| m).sum();
        row.iter().map(|(l, m)| (l.as_str(), f64::from(*m) / f64::from(total))).collect()
    }

    /// `Σ_j W_ij x_jt` for every `(i, t)` at which `x` has at least one
    /// cell on the row's leads or the row is empty; missing leads are
    /// skipped.
    pub fn lead_composite(&self, x: &Panel) -> Panel {
        let mut out = Panel::new();
        for date in x.dates() {
            let cs = x.cross_section(date);
            for tk in &self.order {
                if !cs.contains_key(tk.as_str()) {
                    continue;
                }
                let v: f64 = self.weights(tk).iter().filter_map(|(l, w)| cs.get(l).map(|r| w * r)).sum();
                out.insert(tk, date, v);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Market {
    pub master: FirmMaster,
    pub prices: PriceTable,
    pub factors: FactorSeries,
    pub calendar: TradingCalendar,
    pub oracle: MarketOracle,
}

fn is_holiday(d: NaiveDate) -> bool {
    matches!((d.month(), d.day()), (1, 1) | (7, 4) | (12, 25))
}

fn synthetic_calendar(start: NaiveDate, n: usize) -> TradingCalendar {
    let mut dates = Vec::with_capacity(n);
    let mut d = start;
    while dates.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && !is_holiday(d) {
            dates.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    TradingCalendar::from_dates(dates)
}

fn plant_network(cfg: &SynthConfig, firms: &[SynthFirm]) -> (Vec<String>, BTreeMap<String, Vec<(String, u32)>>) {
    let mut rng = cfg.rng(STREAM_NETWORK);
    let mut order: Vec<String> = firms.iter().map(|f| f.ticker.clone()).collect();
    order.shuffle(&mut rng);
    let law = PowerLaw::new(cfg.degree_gamma, cfg.max_leads);
    let mut leads = BTreeMap::new();
    for p in 1..order.len() {
        if !rng.random_bool(cfg.follower_rate) {
            continue;
        }
        let d = (law.sample(&mut rng) as usize).min(p);
        let mut picked: Vec<usize> = index::sample(&mut rng, p, d).into_vec();
        picked.sort_unstable();
        let row = picked.into_iter().map(|j| (order[j].clone(), rng.random_range(1..=3u32))).collect();
        leads.insert(order[p].clone(), row);
    }
    (order, leads)
}

/// Simulates factors, prices and characteristics with the planted network.
pub fn generate_market(cfg: &SynthConfig) -> Result<Market> {
    cfg.validate()?;
    let firms = generate_firms(cfg);
    let (order, leads) = plant_network(cfg, &firms);
    let calendar = synthetic_calendar(cfg.start_date, cfg.n_days);
    let dates = calendar.dates().to_vec();
    let mut rng = cfg.rng(STREAM_RETURNS);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");

    let mut factor_rows = Vec::with_capacity(dates.len());
    for d in &dates {
        let mut f = [0.0; 5];
        for (k, slot) in f.iter_mut().enumerate() {
            *slot = cfg.factor_vol[k] * std_normal.sample(&mut rng);
        }
        f[0] += cfg.mkt_mean;
        factor_rows.push((*d, FactorRow { mkt_rf: f[0], smb: f[1], hml: f[2], rmw: f[3], cma: f[4], rf: cfg.rf }));
    }

    let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut loadings = BTreeMap::new();
    for t in &order {
        let b = [
            rng.random_range(0.5..1.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
        ];
        loadings.insert(t.clone(), b);
    }
    // weights in hidden-order indices
    let w_rows: Vec<Vec<(usize, f64)>> = order
        .iter()
        .map(|t| match leads.get(t) {
            None => Vec::new(),
            Some(row) => {
                let total: u32 = row.iter().map(|(_, m)| m).sum();
                row.iter().map(|(l, m)| (pos[l.as_str()], f64::from(*m) / f64::from(total))).collect()
            }
        })
        .collect();

    let n = order.len();
    let n_ret = dates.len() - 1;
    let mut e_prev = vec![0.0; n];
    let mut log_r = vec![vec![0.0; n_ret]; n];
    for t in 0..n_ret {
        let f = &factor_rows[t].1;
        let fv = [f.mkt_rf, f.smb, f.hml, f.rmw, f.cma];
        let mut e = vec![0.0; n];
        for i in 0..n {
            let (mut now, mut lag) = (0.0, 0.0);
            for &(j, w) in &w_rows[i] {
                now += w * e[j];
                lag += w * e_prev[j];
            }
            e[i] = cfg.beta * now + cfg.reversal * lag + cfg.idio_vol * std_normal.sample(&mut rng);
            let b = &loadings[&order[i]];
            let systematic: f64 = b.iter().zip(fv).map(|(b, f)| b * f).sum();
            log_r[i][t] = cfg.rf + systematic + e[i];
        }
        e_prev = e;
    }

    let mut prices = PriceTable::default();
    for (i, tk) in order.iter().enumerate() {
        let shares = (rng.random_range(18.0..22.0f64)).exp();
        let turnover_level = rng.random_range(0.002..0.02);
        let bm = rng.random_range(0.1..1.5);
        let mut open = rng.random_range(20.0..200.0);
        let book = bm * open * shares;
        for (t, d) in dates.iter().enumerate() {
            let volume = (shares * turnover_level * (0.3 * std_normal.sample(&mut rng)).exp()).round();
            prices.insert(tk, *d, PriceRecord { open, volume, shares_out: shares, book_equity: Some(book) })?;
            if t < n_ret {
                open *= log_r[i][t].exp();
            }
        }
    }

    let firm_map: BTreeMap<String, Firm> = firms
        .iter()
        .map(|f| (f.ticker.clone(), Firm { full_name: f.full.clone(), sector: f.sector.clone() }))
        .collect();
    let members: BTreeSet<String> = firm_map.keys().cloned().collect();
    let mut membership = BTreeMap::new();
    let mut m = Month::of(window_floor(cfg));
    while m <= Month::of(*dates.last().expect("non-empty calendar")) {
        membership.insert(m, members.clone());
        m = m.succ();
    }
    Ok(Market {
        master: FirmMaster::new(firm_map, membership)?,
        prices,
        factors: FactorSeries::from_rows(factor_rows),
        calendar,
        oracle: MarketOracle { order, leads, loadings, beta: cfg.beta, reversal: cfg.reversal },
    })
}

/// First calendar day on which news is generated.
fn window_floor(cfg: &SynthConfig) -> NaiveDate {
    cfg.start_date - Duration::days(i64::from(cfg.burn_in_days))
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlannedLinkage {
    pub info_day: NaiveDate,
    pub follower: String,
    pub lead: String,
}

/// Article dates for every planted pair over `[start - burn_in, last trading date]`.
pub fn plan_linkages(oracle: &MarketOracle, calendar: &TradingCalendar, cfg: &SynthConfig) -> Vec<PlannedLinkage> {
    let mut rng = cfg.rng(STREAM_PLAN);
    let first = window_floor(cfg);
    let last = calendar.last().unwrap_or(cfg.start_date);
    let span = (last - first).num_days() + 1;
    let mut plan = Vec::new();
    for (follower, row) in &oracle.leads {
        for (lead, m) in row {
            let lambda = f64::from(*m) * cfg.articles_per_pair_year * span as f64 / 365.0;
            let count = if lambda > 0.0 { Poisson::new(lambda).expect("positive rate").sample(&mut rng) as u64 } else { 0 };
            for _ in 0..count {
                let day = first + Duration::days(rng.random_range(0..span));
                plan.push(PlannedLinkage { info_day: day, follower: follower.clone(), lead: lead.clone() });
            }
        }
    }
    plan.sort();
    plan
}

const HEADLINES: &[&str] = &[
    "{L} shares climb after quarterly update",
    "{L} announces new product line",
    "Analysts weigh outlook for {L}",
    "{L} reports results ahead of expectations",
    "What investors should know about {L} this week",
    "{L} expands into new markets",
];
const CONTENT_LEAD: &[&str] = &[
    "The company said demand stayed firm through the quarter.",
    "{L} said the update reflects steady demand across regions.",
    "Management at {L} pointed to lower costs and a stronger pipeline.",
];
const CONTENT_FOLLOWER: &[&str] = &[
    "The agreement also involves {F}, which supplies key components.",
    "Shares of {F} moved as traders reacted to the news.",
    "Rival {F} is expected to respond with its own plans.",
    "The filing names {F} as a long-standing partner.",
];
const DISTRACTOR_TEXT: &[&str] = &[
    "{L} and {M} unveil joint venture",
    "Markets drift as investors await fresh data",
    "Peers that also traded on the news include {FS}.",
    "Broader indexes were little changed in afternoon trading.",
];
const PUBLISHERS: &[&str] = &["Daily Wire Service", "Market Ledger", "Street Journal Online", "Capital Observer"];

/// Ground truth for a generated corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusOracle {
    /// Pairs planted in kept articles, with the surface strategies used.
    pub linkages: Vec<Linkage>,
    /// Screening verdict every article must receive.
    pub verdicts: BTreeMap<String, Verdict>,
}

impl CorpusOracle {
    pub fn pair_set(&self) -> BTreeSet<(String, String, String)> {
        self.linkages.iter().map(|l| (l.article_id.clone(), l.follower.clone(), l.lead.clone())).collect()
    }
}

struct Draft {
    timestamp: DateTime<FixedOffset>,
    headline: String,
    content: String,
    publisher: String,
    verdict: Verdict,
    /// `(follower, lead, strategy_lead, strategy_follower)`
    pair: Option<(String, String, Strategy, Strategy)>,
}

/// A random New York instant in `[info_day 09:00, info_day + 1 08:59]`.
fn timestamp_for<R: Rng>(rng: &mut R, info_day: NaiveDate) -> DateTime<FixedOffset> {
    let minutes = rng.random_range(0..24 * 60i64);
    let local = info_day.and_time(INFO_DAY_CUTOFF) + Duration::minutes(minutes);
    let zoned = New_York
        .from_local_datetime(&local)
        .earliest()
        // inside a spring-forward gap: an hour later is still before 09:00
        .or_else(|| New_York.from_local_datetime(&(local + Duration::hours(1))).earliest())
        .expect("resolvable local time");
    zoned.fixed_offset()
}

fn pick<'a, R: Rng>(rng: &mut R, items: &'a [&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn lead_mention<R: Rng>(rng: &mut R, firm: &SynthFirm, cfg: &SynthConfig) -> (String, Strategy) {
    let plain_ok = firm.ticker.len() >= 4;
    let plain = if plain_ok { cfg.plain_rate } else { 0.0 };
    let total = cfg.bracket_rate + cfg.segment_rate + plain;
    let u = rng.random::<f64>() * total;
    if u < cfg.bracket_rate {
        let exch = if rng.random_bool(0.5) { "NASDAQ" } else { "NYSE" };
        (format!("{} ({exch}: {})", firm.short, firm.ticker), Strategy::S1)
    } else if u < cfg.bracket_rate + cfg.segment_rate || !plain_ok {
        (name_mention(rng, firm), Strategy::S2)
    } else {
        (firm.ticker.clone(), Strategy::S3)
    }
}

fn name_mention<R: Rng>(rng: &mut R, firm: &SynthFirm) -> String {
    if rng.random_bool(0.5) {
        firm.short.clone()
    } else {
        firm.base.clone()
    }
}

fn follower_mention<R: Rng>(rng: &mut R, firm: &SynthFirm, cfg: &SynthConfig) -> (String, Strategy) {
    let total = cfg.bracket_rate + cfg.segment_rate;
    if total > 0.0 && rng.random::<f64>() * total < cfg.bracket_rate {
        (format!("{} ({})", firm.base, firm.ticker), Strategy::S1)
    } else {
        (name_mention(rng, firm), Strategy::S2)
    }
}

fn distractor_days(plan: &[PlannedLinkage], first: NaiveDate, last: NaiveDate) -> (NaiveDate, NaiveDate) {
    match (plan.first(), plan.last()) {
        (Some(a), Some(b)) => (a.info_day.min(first), b.info_day.max(last)),
        _ => (first, last),
    }
}

/// Renders planned triples as articles and adds screening distractors.
pub fn generate_corpus(plan: &[PlannedLinkage], market: &Market, cfg: &SynthConfig) -> Result<(ArticleSet, CorpusOracle)> {
    let firms = generate_firms(cfg);
    let by_ticker: BTreeMap<&str, &SynthFirm> = firms.iter().map(|f| (f.ticker.as_str(), f)).collect();
    let ident = IdentConfig::default();
    let mut rng = cfg.rng(STREAM_CORPUS);
    let mut drafts = Vec::with_capacity(plan.len());
    for p in plan {
        let (Some(lead), Some(follower)) = (by_ticker.get(p.lead.as_str()), by_ticker.get(p.follower.as_str())) else {
            return Err(Error::UnknownTicker { ticker: p.lead.clone(), context: "linkage plan".into() });
        };
        let (l_text, sl) = lead_mention(&mut rng, lead, cfg);
        let (f_text, sf) = follower_mention(&mut rng, follower, cfg);
        let headline = pick(&mut rng, HEADLINES).replace("{L}", &l_text);
        let content = format!(
            "{} {}",
            pick(&mut rng, CONTENT_LEAD).replace("{L}", &lead.short),
            pick(&mut rng, CONTENT_FOLLOWER).replace("{F}", &f_text)
        );
        drafts.push(Draft {
            timestamp: timestamp_for(&mut rng, p.info_day),
            headline,
            content,
            publisher: pick(&mut rng, PUBLISHERS).to_string(),
            verdict: Verdict::Kept,
            pair: Some((p.follower.clone(), p.lead.clone(), sl, sf)),
        });
    }

    let n_distractors = (plan.len() as f64 * cfg.distractor_rate).round() as usize;
    let (lo, hi) = distractor_days(plan, window_floor(cfg), market.calendar.last().unwrap_or(cfg.start_date));
    let span = (hi - lo).num_days() + 1;
    let many = ident.max_followers + 1;
    for _ in 0..n_distractors {
        let day = lo + Duration::days(rng.random_range(0..span));
        let kind = rng.random_range(0..3u8);
        let draft = match kind {
            0 => {
                let ix = index::sample(&mut rng, firms.len(), 3).into_vec();
                let (a, b, f) = (&firms[ix[0]], &firms[ix[1]], &firms[ix[2]]);
                Draft {
                    timestamp: timestamp_for(&mut rng, day),
                    headline: DISTRACTOR_TEXT[0].replace("{L}", &a.short).replace("{M}", &b.base),
                    content: pick(&mut rng, CONTENT_FOLLOWER).replace("{F}", &f.base),
                    publisher: pick(&mut rng, PUBLISHERS).to_string(),
                    verdict: Verdict::MultiLead,
                    pair: None,
                }
            }
            1 if firms.len() > many + 1 => {
                let count = rng.random_range(many..=(many + 3).min(firms.len() - 1));
                let ix = index::sample(&mut rng, firms.len(), count + 1).into_vec();
                let lead = &firms[ix[0]];
                let names: Vec<&str> = ix[1..].iter().map(|&i| firms[i].base.as_str()).collect();
                Draft {
                    timestamp: timestamp_for(&mut rng, day),
                    headline: pick(&mut rng, HEADLINES).replace("{L}", &lead.base),
                    content: DISTRACTOR_TEXT[2].replace("{FS}", &names.join(", ")),
                    publisher: pick(&mut rng, PUBLISHERS).to_string(),
                    verdict: Verdict::TooManyFollowers,
                    pair: None,
                }
            }
            _ => Draft {
                timestamp: timestamp_for(&mut rng, day),
                headline: DISTRACTOR_TEXT[1].to_string(),
                content: DISTRACTOR_TEXT[3].to_string(),
                publisher: pick(&mut rng, PUBLISHERS).to_string(),
                verdict: Verdict::NoLead,
                pair: None,
            },
        };
        drafts.push(draft);
    }

    drafts.sort_by(|a, b| (a.timestamp, &a.headline, &a.content).cmp(&(b.timestamp, &b.headline, &b.content)));
    let mut articles = Vec::with_capacity(drafts.len());
    let mut oracle = CorpusOracle::default();
    for (n, d) in drafts.into_iter().enumerate() {
        let id = format!("syn{:07}", n + 1);
        let article = Article::new(id.clone(), d.timestamp, d.headline, d.content, d.publisher);
        if let Some((follower, lead, sl, sf)) = d.pair {
            oracle.linkages.push(Linkage {
                article_id: id.clone(),
                info_day: article.info_day,
                lead,
                follower,
                strategy_lead: sl,
                strategy_follower: sf,
            });
        }
        oracle.verdicts.insert(id, d.verdict);
        articles.push(article);
    }
    Ok((ArticleSet { articles }, oracle))
}

/// A complete synthetic dataset.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub market: Market,
    pub plan: Vec<PlannedLinkage>,
    pub articles: ArticleSet,
    pub corpus_oracle: CorpusOracle,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    let market = generate_market(cfg)?;
    let plan = plan_linkages(&market.oracle, &market.calendar, cfg);
    let (articles, corpus_oracle) = generate_corpus(&plan, &market, cfg)?;
    Ok(SynthDataset { market, plan, articles, corpus_oracle })
}

impl SynthDataset {
    /// Writes the corpus-format input files plus oracle files to `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let m = &self.market;
        save_articles(&self.articles, dir.join("articles.jsonl"))?;
        save_firm_master(&m.master, &dir.join("firms.csv"), &dir.join("membership.csv"))?;
        save_prices(&m.prices, &dir.join("prices.csv"))?;
        save_factors(&m.factors, &dir.join("factors.csv"))?;
        save_linkages(&self.corpus_oracle.linkages, dir.join("oracle_linkages.csv"))?;

        let path = dir.join("oracle_network.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| crate::corpus::csv_error(&path, e))?;
        w.write_record(["follower", "lead", "multiplicity", "weight"]).map_err(|e| crate::corpus::csv_error(&path, e))?;
        for (f, row) in &m.oracle.leads {
            let weights = m.oracle.weights(f);
            for ((l, mult), (_, wt)) in row.iter().zip(weights) {
                w.write_record([f.as_str(), l, &mult.to_string(), &wt.to_string()]).map_err(|e| crate::corpus::csv_error(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("oracle_verdicts.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| crate::corpus::csv_error(&path, e))?;
        w.write_record(["article_id", "verdict"]).map_err(|e| crate::corpus::csv_error(&path, e))?;
        for (id, v) in &self.corpus_oracle.verdicts {
            w.write_record([id.as_str(), &v.to_string()]).map_err(|e| crate::corpus::csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("oracle_loadings.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| crate::corpus::csv_error(&path, e))?;
        w.write_record(["ticker", "mkt_rf", "smb", "hml", "rmw", "cma"]).map_err(|e| crate::corpus::csv_error(&path, e))?;
        for (t, b) in &m.oracle.loadings {
            let mut rec = vec![t.clone()];
            rec.extend(b.iter().map(f64::to_string));
            w.write_record(&rec).map_err(|e| crate::corpus::csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}
