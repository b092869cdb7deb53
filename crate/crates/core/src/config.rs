//! Sectioned `key = value` configuration files.
//!
//! ```text
//! # comment
//! [windows]
//! net_window = 365
//! ```
//!
//! Keys are unique within a section; unknown sections or keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::portfolio::{Rebalance, SortSpec, Timing, Weighting};

/// Parsed `(section, key) -> (value, line)` entries.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {line_no}: unterminated section header")))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected `key = value`")))?;
            let key = (section.clone(), k.trim().to_string());
            if entries.insert(key, (v.trim().to_string(), line_no)).is_some() {
                return Err(Error::Config(format!("line {line_no}: duplicate key `{}`", k.trim())));
            }
        }
        Ok(Self { entries })
    }

    /// Errors on the first entry whose `(section, key)` is not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[(&str, &str)]) -> Result<()> {
        for ((s, k), (_, line)) in &self.entries {
            if !allowed.iter().any(|(a, b)| a == s && b == k) {
                let full = if s.is_empty() { k.clone() } else { format!("{s}.{k}") };
                return Err(Error::Config(format!("line {line}: unknown key `{full}`")));
            }
        }
        Ok(())
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(&(section.to_string(), key.to_string())).map(|(v, _)| v.as_str())
    }

    /// Parses `section.key` into `slot` when present.
    pub fn set<T: FromStr>(&self, section: &str, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some((v, line)) = self.entries.get(&(section.to_string(), key.to_string())) {
            *slot = v
                .parse()
                .map_err(|e| Error::Config(format!("line {line}: bad value `{v}` for `{key}`: {e}")))?;
        }
        Ok(())
    }
}

/// `auto` or an explicit non-negative lag count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LagRule {
    #[default]
    Auto,
    Fixed(usize),
}

impl LagRule {
    pub fn lags(self) -> Option<usize> {
        match self {
            LagRule::Auto => None,
            LagRule::Fixed(l) => Some(l),
        }
    }
}

impl FromStr for LagRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(LagRule::Auto);
        }
        s.parse().map(LagRule::Fixed).map_err(|_| Error::Config(format!("expected `auto` or an integer, got `{s}`")))
    }
}

impl std::fmt::Display for LagRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LagRule::Auto => f.write_str("auto"),
            LagRule::Fixed(l) => write!(f, "{l}"),
        }
    }
}

/// `off` or a winsorization fraction in `(0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Winsorize(pub Option<f64>);

impl FromStr for Winsorize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "off" {
            return Ok(Winsorize(None));
        }
        match s.parse::<f64>() {
            Ok(p) if p > 0.0 && p < 0.5 => Ok(Winsorize(Some(p))),
            _ => Err(Error::Config(format!("expected `off` or a fraction in (0, 0.5), got `{s}`"))),
        }
    }
}

impl std::fmt::Display for Winsorize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            None => f.write_str("off"),
            Some(p) => write!(f, "{p}"),
        }
    }
}

/// Comma-separated list of day counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DayList(pub Vec<u32>);

impl FromStr for DayList {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(DayList(Vec::new()));
        }
        s.split(',')
            .map(|p| p.trim().parse::<u32>().map_err(|_| Error::Config(format!("bad day count `{p}`"))))
            .collect::<Result<_>>()
            .map(DayList)
    }
}

impl std::fmt::Display for DayList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Optional path; empty means unset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OptPath(pub Option<PathBuf>);

impl FromStr for OptPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(OptPath((!s.is_empty()).then(|| PathBuf::from(s))))
    }
}

impl std::fmt::Display for OptPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.0 {
            Some(p) => write!(f, "{}", p.display()),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Optional exceptions file for identification.
    pub ident_config: OptPath,
    /// Optional raw book-equity statements to lag and apply.
    pub book_equity: OptPath,

    pub net_window: u32,
    pub degree_window: u32,
    /// Extra degree windows for the robustness sorts.
    pub robustness_windows: DayList,

    pub k: usize,
    pub weighting: Weighting,
    pub rebalance: Rebalance,
    pub drop_zero: bool,

    pub lower_quantile: f64,
    pub upper_quantile: f64,

    pub nw_lags: LagRule,
    pub winsorize: Winsorize,

    pub periods_per_year_daily: f64,
    pub periods_per_year_monthly: f64,

    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            ident_config: OptPath::default(),
            book_equity: OptPath::default(),
            net_window: 365,
            degree_window: 30,
            robustness_windows: DayList(vec![23, 37, 16, 44]),
            k: 5,
            weighting: Weighting::Equal,
            rebalance: Rebalance::Monthly,
            drop_zero: true,
            lower_quantile: 0.3,
            upper_quantile: 0.7,
            nw_lags: LagRule::Auto,
            winsorize: Winsorize(None),
            periods_per_year_daily: 252.0,
            periods_per_year_monthly: 12.0,
            bootstrap_resamples: 1000,
            bootstrap_seed: 7,
        }
    }
}

const RUN_KEYS: &[(&str, &str)] = &[
    ("paths", "data_dir"),
    ("paths", "out_dir"),
    ("paths", "ident_config"),
    ("paths", "book_equity"),
    ("windows", "net_window"),
    ("windows", "degree_window"),
    ("windows", "robustness_windows"),
    ("portfolio", "k"),
    ("portfolio", "weighting"),
    ("portfolio", "rebalance"),
    ("portfolio", "drop_zero"),
    ("quantiles", "lower"),
    ("quantiles", "upper"),
    ("econ", "nw_lags"),
    ("econ", "winsorize"),
    ("annualization", "daily"),
    ("annualization", "monthly"),
    ("report", "bootstrap_resamples"),
    ("report", "bootstrap_seed"),
];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        kv.reject_unknown(RUN_KEYS)?;
        let mut c = Self::default();
        kv.set("paths", "data_dir", &mut c.data_dir)?;
        kv.set("paths", "out_dir", &mut c.out_dir)?;
        kv.set("paths", "ident_config", &mut c.ident_config)?;
        kv.set("paths", "book_equity", &mut c.book_equity)?;
        kv.set("windows", "net_window", &mut c.net_window)?;
        kv.set("windows", "degree_window", &mut c.degree_window)?;
        kv.set("windows", "robustness_windows", &mut c.robustness_windows)?;
        kv.set("portfolio", "k", &mut c.k)?;
        kv.set("portfolio", "weighting", &mut c.weighting)?;
        kv.set("portfolio", "rebalance", &mut c.rebalance)?;
        kv.set("portfolio", "drop_zero", &mut c.drop_zero)?;
        kv.set("quantiles", "lower", &mut c.lower_quantile)?;
        kv.set("quantiles", "upper", &mut c.upper_quantile)?;
        kv.set("econ", "nw_lags", &mut c.nw_lags)?;
        kv.set("econ", "winsorize", &mut c.winsorize)?;
        kv.set("annualization", "daily", &mut c.periods_per_year_daily)?;
        kv.set("annualization", "monthly", &mut c.periods_per_year_monthly)?;
        kv.set("report", "bootstrap_resamples", &mut c.bootstrap_resamples)?;
        kv.set("report", "bootstrap_seed", &mut c.bootstrap_seed)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config("portfolio.k must be at least 2".into()));
        }
        if !(0.0 < self.lower_quantile && self.lower_quantile < self.upper_quantile && self.upper_quantile < 1.0) {
            return Err(Error::Config("quantiles must satisfy 0 < lower < upper < 1".into()));
        }
        if self.net_window == 0 || self.degree_window == 0 {
            return Err(Error::Config("window lengths must be positive".into()));
        }
        if !(self.periods_per_year_daily > 0.0 && self.periods_per_year_monthly > 0.0) {
            return Err(Error::Config("annualization constants must be positive".into()));
        }
        Ok(())
    }

    /// The full configuration with every key written out.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[paths]");
        let _ = writeln!(s, "data_dir = {}", self.data_dir.display());
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "ident_config = {}", self.ident_config);
        let _ = writeln!(s, "book_equity = {}", self.book_equity);
        let _ = writeln!(s, "\n[windows]");
        let _ = writeln!(s, "net_window = {}", self.net_window);
        let _ = writeln!(s, "degree_window = {}", self.degree_window);
        let _ = writeln!(s, "robustness_windows = {}", self.robustness_windows);
        let _ = writeln!(s, "\n[portfolio]");
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "weighting = {}", self.weighting);
        let _ = writeln!(s, "rebalance = {}", self.rebalance);
        let _ = writeln!(s, "drop_zero = {}", self.drop_zero);
        let _ = writeln!(s, "\n[quantiles]");
        let _ = writeln!(s, "lower = {}", self.lower_quantile);
        let _ = writeln!(s, "upper = {}", self.upper_quantile);
        let _ = writeln!(s, "\n[econ]");
        let _ = writeln!(s, "nw_lags = {}", self.nw_lags);
        let _ = writeln!(s, "winsorize = {}", self.winsorize);
        let _ = writeln!(s, "\n[annualization]");
        let _ = writeln!(s, "daily = {}", self.periods_per_year_daily);
        let _ = writeln!(s, "monthly = {}", self.periods_per_year_monthly);
        let _ = writeln!(s, "\n[report]");
        let _ = writeln!(s, "bootstrap_resamples = {}", self.bootstrap_resamples);
        let _ = writeln!(s, "bootstrap_seed = {}", self.bootstrap_seed);
        s
    }

    pub fn sort_spec(&self, timing: Timing) -> SortSpec {
        SortSpec { k: self.k, weighting: self.weighting, rebalance: self.rebalance, timing, drop_zero_signal: self.drop_zero }
    }

    pub fn periods_per_year(&self, rebalance: Rebalance) -> f64 {
        match rebalance {
            Rebalance::Daily => self.periods_per_year_daily,
            Rebalance::Monthly => self.periods_per_year_monthly,
        }
    }
}
