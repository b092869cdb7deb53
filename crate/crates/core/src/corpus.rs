//! Ingestion of articles, firm master data, prices and factors, plus the
//! information-timeline and return conventions every other module relies on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, NaiveTime, SecondsFormat, Weekday};
use chrono_tz::America::New_York;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Panel;

/// Daily log returns keyed by `(ticker, date)`.
pub type ReturnPanel = Panel;

/// Local New York time at which one information day rolls over to the next.
pub const INFO_DAY_CUTOFF: NaiveTime = match NaiveTime::from_hms_opt(9, 0, 0) {
    Some(t) => t,
    None => unreachable!(),
};

// ---------------------------------------------------------------------------
// Calendar months
// ---------------------------------------------------------------------------

/// A calendar month, used for index membership and monthly rebalancing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    year: i32,
    month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        Self { year: date.year(), month: date.month() }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    pub fn last_day(self) -> NaiveDate {
        self.succ().first_day().pred_opt().expect("date in range")
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            Self { year: self.year + 1, month: 1 }
        } else {
            Self { year: self.year, month: self.month + 1 }
        }
    }

    pub fn contains(self, date: NaiveDate) -> bool {
        Month::of(date) == self
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("invalid month `{s}`, expected YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        Month::new(year, month).ok_or_else(bad)
    }
}

// ---------------------------------------------------------------------------
// Articles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Article {
    pub id: String,
    pub timestamp: DateTime<FixedOffset>,
    pub headline: String,
    pub content: String,
    pub publisher: String,
    /// Information day the article belongs to, see [`assign_info_day`].
    pub info_day: NaiveDate,
}

impl Article {
    pub fn new(
        id: impl Into<String>,
        timestamp: DateTime<FixedOffset>,
        headline: impl Into<String>,
        content: impl Into<String>,
        publisher: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            info_day: assign_info_day(&timestamp),
            timestamp,
            headline: headline.into(),
            content: content.into(),
            publisher: publisher.into(),
        }
    }
}

/// Articles in input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArticleSet {
    pub articles: Vec<Article>,
}

impl ArticleSet {
    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Article> {
        self.articles.iter()
    }
}

#[derive(Serialize)]
struct ArticleRecord<'a> {
    id: &'a str,
    timestamp: String,
    headline: &'a str,
    content: &'a str,
    publisher: &'a str,
}

/// Information day of a timestamp: the New York local date when the local
/// time is at or after 09:00, otherwise the previous local date.
pub fn assign_info_day(timestamp: &DateTime<FixedOffset>) -> NaiveDate {
    let local = timestamp.with_timezone(&New_York);
    let date = local.date_naive();
    if local.time() >= INFO_DAY_CUTOFF {
        date
    } else {
        date.pred_opt().expect("date in range")
    }
}

pub fn parse_timestamp(value: &str) -> Option<DateTime<FixedOffset>> {
    let value = value.trim();
    DateTime::parse_from_rfc3339(value)
        .or_else(|_| DateTime::parse_from_str(value, "%Y-%m-%dT%H:%M%:z"))
        .or_else(|_| DateTime::parse_from_str(value, "%Y-%m-%d %H:%M:%S%:z"))
        .ok()
}

const ARTICLE_FIELDS: [&str; 5] = ["id", "timestamp", "headline", "content", "publisher"];

/// Parses one JSON object per line. Blank lines are skipped.
pub fn read_articles(reader: impl BufRead) -> Result<ArticleSet> {
    let mut articles = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::MalformedLine { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedLine { line: line_no, message: e.to_string() })?;
        let object = value.as_object().ok_or_else(|| Error::MalformedLine {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        let mut fields = [""; 5];
        for (slot, name) in fields.iter_mut().zip(ARTICLE_FIELDS) {
            let v = object
                .get(name)
                .ok_or_else(|| Error::MissingField { line: line_no, field: name.into() })?;
            *slot = v.as_str().ok_or_else(|| Error::MalformedLine {
                line: line_no,
                message: format!("field `{name}` must be a string"),
            })?;
        }
        let [id, ts, headline, content, publisher] = fields;
        let timestamp = parse_timestamp(ts)
            .ok_or_else(|| Error::BadTimestamp { line: line_no, value: ts.into() })?;
        if headline.trim().is_empty() {
            return Err(Error::MalformedLine { line: line_no, message: "empty headline".into() });
        }
        articles.push(Article::new(id, timestamp, headline, content, publisher));
    }
    Ok(ArticleSet { articles })
}

pub fn load_articles(path: impl AsRef<Path>) -> Result<ArticleSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_articles(BufReader::new(file))
}

pub fn write_articles(set: &ArticleSet, mut writer: impl Write) -> std::io::Result<()> {
    for a in &set.articles {
        let record = ArticleRecord {
            id: &a.id,
            timestamp: a.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, false),
            headline: &a.headline,
            content: &a.content,
            publisher: &a.publisher,
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_articles(set: &ArticleSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_articles(set, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Trading calendar
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    /// Builds a calendar from an arbitrary collection of dates (deduplicated).
    pub fn from_dates(dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        let set: BTreeSet<NaiveDate> = dates.into_iter().collect();
        Self { dates: set.into_iter().collect() }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.binary_search(&date).is_ok()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Trading date `h` sessions after `date`, which must itself be a trading date.
    pub fn offset(&self, date: NaiveDate, h: usize) -> Option<NaiveDate> {
        self.index_of(date).and_then(|i| self.dates.get(i + h)).copied()
    }

    pub fn next_after(&self, date: NaiveDate) -> Option<NaiveDate> {
        let i = self.dates.partition_point(|d| *d <= date);
        self.dates.get(i).copied()
    }

    /// Last trading date on or before `date`.
    pub fn last_on_or_before(&self, date: NaiveDate) -> Option<NaiveDate> {
        let i = self.dates.partition_point(|d| *d <= date);
        i.checked_sub(1).map(|i| self.dates[i])
    }

    /// Trading dates in `[start, end]`.
    pub fn range(&self, start: NaiveDate, end: NaiveDate) -> &[NaiveDate] {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        &self.dates[lo..hi.max(lo)]
    }

    /// Weekdays inside the calendar span that are not trading days.
    pub fn holidays(&self) -> Vec<NaiveDate> {
        let (Some(first), Some(last)) = (self.first(), self.last()) else {
            return Vec::new();
        };
        first
            .iter_days()
            .take_while(|d| *d <= last)
            .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && !self.contains(*d))
            .collect()
    }

    pub fn months(&self) -> Vec<Month> {
        let mut months: Vec<Month> = self.dates.iter().map(|d| Month::of(*d)).collect();
        months.dedup();
        months
    }
}

// ---------------------------------------------------------------------------
// Firm master
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firm {
    pub full_name: String,
    pub sector: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FirmMaster {
    firms: BTreeMap<String, Firm>,
    membership: BTreeMap<Month, BTreeSet<String>>,
}

impl FirmMaster {
    pub fn new(
        firms: BTreeMap<String, Firm>,
        membership: BTreeMap<Month, BTreeSet<String>>,
    ) -> Result<Self> {
        for (month, members) in &membership {
            if let Some(t) = members.iter().find(|t| !firms.contains_key(*t)) {
                return Err(Error::UnknownTicker {
                    ticker: t.clone(),
                    context: format!("membership for {month}"),
                });
            }
        }
        Ok(Self { firms, membership })
    }

    pub fn firm(&self, ticker: &str) -> Option<&Firm> {
        self.firms.get(ticker)
    }

    pub fn firms(&self) -> &BTreeMap<String, Firm> {
        &self.firms
    }

    pub fn contains(&self, ticker: &str) -> bool {
        self.firms.contains_key(ticker)
    }

    pub fn sector(&self, ticker: &str) -> Option<&str> {
        self.firms.get(ticker).map(|f| f.sector.as_str())
    }

    pub fn membership(&self) -> &BTreeMap<Month, BTreeSet<String>> {
        &self.membership
    }

    /// Index constituents for `month`; empty when the month is not covered.
    pub fn universe(&self, month: Month) -> Vec<String> {
        self.membership.get(&month).map(|s| s.iter().cloned().collect()).unwrap_or_default()
    }

    pub fn universe_at(&self, date: NaiveDate) -> Vec<String> {
        self.universe(Month::of(date))
    }
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Csv { path: path.display().to_string(), message: e.to_string() }
}

#[derive(Deserialize)]
struct FirmRow {
    ticker: String,
    full_name: String,
    sector: String,
}

#[derive(Deserialize)]
struct MembershipRow {
    month: String,
    ticker: String,
}

pub fn load_firm_master(firms: impl AsRef<Path>, membership: impl AsRef<Path>) -> Result<FirmMaster> {
    let firms_path = firms.as_ref();
    let mut table = BTreeMap::new();
    for row in csv_reader(firms_path)?.deserialize::<FirmRow>() {
        let row = row.map_err(|e| csv_error(firms_path, e))?;
        if row.full_name.is_empty() {
            return Err(Error::InvalidInput(format!("firm {} has an empty full name", row.ticker)));
        }
        let firm = Firm { full_name: row.full_name, sector: row.sector };
        if table.insert(row.ticker.clone(), firm).is_some() {
            return Err(Error::InvalidInput(format!("duplicate ticker {} in firms file", row.ticker)));
        }
    }
    let membership_path = membership.as_ref();
    let mut months: BTreeMap<Month, BTreeSet<String>> = BTreeMap::new();
    for row in csv_reader(membership_path)?.deserialize::<MembershipRow>() {
        let row = row.map_err(|e| csv_error(membership_path, e))?;
        let month: Month = row.month.parse()?;
        months.entry(month).or_default().insert(row.ticker);
    }
    FirmMaster::new(table, months)
}

pub fn save_firm_master(master: &FirmMaster, firms: &Path, membership: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(firms).map_err(|e| csv_error(firms, e))?;
    w.write_record(["ticker", "full_name", "sector"]).map_err(|e| csv_error(firms, e))?;
    for (t, f) in &master.firms {
        w.write_record([t.as_str(), &f.full_name, &f.sector]).map_err(|e| csv_error(firms, e))?;
    }
    w.flush().map_err(|e| Error::io(firms, e))?;

    let mut w = csv::Writer::from_path(membership).map_err(|e| csv_error(membership, e))?;
    w.write_record(["month", "ticker"]).map_err(|e| csv_error(membership, e))?;
    for (m, members) in &master.membership {
        for t in members {
            w.write_record([m.to_string().as_str(), t]).map_err(|e| csv_error(membership, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(membership, e))
}

// ---------------------------------------------------------------------------
// Prices and characteristics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceRecord {
    pub open: f64,
    pub volume: f64,
    pub shares_out: f64,
    /// Book equity already shifted by the two-quarter reporting lag.
    pub book_equity: Option<f64>,
}

impl PriceRecord {
    /// Market value at the open.
    pub fn market_value(&self) -> f64 {
        self.open * self.shares_out
    }

    pub fn turnover(&self) -> Option<f64> {
        (self.shares_out > 0.0).then(|| self.volume / self.shares_out)
    }

    pub fn book_to_market(&self) -> Option<f64> {
        let mv = self.market_value();
        self.book_equity.filter(|_| mv > 0.0).map(|b| b / mv)
    }
}

/// Firm characteristics derivable from the price file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Characteristic {
    MarketValue,
    LogMarketValue,
    Turnover,
    BookToMarket,
}

impl Characteristic {
    pub fn of(self, rec: &PriceRecord) -> Option<f64> {
        let v = match self {
            Characteristic::MarketValue => Some(rec.market_value()),
            Characteristic::LogMarketValue => {
                let mv = rec.market_value();
                (mv > 0.0).then(|| mv.ln())
            }
            Characteristic::Turnover => rec.turnover(),
            Characteristic::BookToMarket => rec.book_to_market(),
        };
        v.filter(|x| x.is_finite())
    }
}

/// Daily prices and characteristics per `(ticker, trading date)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceTable {
    rows: BTreeMap<String, BTreeMap<NaiveDate, PriceRecord>>,
}

impl PriceTable {
    pub fn insert(&mut self, ticker: &str, date: NaiveDate, rec: PriceRecord) -> Result<()> {
        let series = self.rows.entry(ticker.to_owned()).or_default();
        if series.insert(date, rec).is_some() {
            return Err(Error::DuplicateRecord { ticker: ticker.to_owned(), date });
        }
        Ok(())
    }

    pub fn get(&self, ticker: &str, date: NaiveDate) -> Option<&PriceRecord> {
        self.rows.get(ticker)?.get(&date)
    }

    pub fn series(&self, ticker: &str) -> Option<&BTreeMap<NaiveDate, PriceRecord>> {
        self.rows.get(ticker)
    }

    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn calendar(&self) -> TradingCalendar {
        TradingCalendar::from_dates(self.rows.values().flat_map(|s| s.keys().copied()))
    }

    pub fn characteristic(&self, ticker: &str, date: NaiveDate, c: Characteristic) -> Option<f64> {
        self.get(ticker, date).and_then(|r| c.of(r))
    }

    pub fn characteristic_panel(&self, c: Characteristic) -> Panel {
        self.rows
            .iter()
            .flat_map(|(t, s)| s.iter().filter_map(move |(d, r)| c.of(r).map(|v| (t.clone(), *d, v))))
            .collect()
    }

    /// Mean of a characteristic over the ticker's observations in `[start, end]`.
    pub fn window_mean(&self, ticker: &str, c: Characteristic, start: NaiveDate, end: NaiveDate) -> Option<f64> {
        let series = self.rows.get(ticker)?;
        let (sum, n) = series
            .range(start..=end)
            .filter_map(|(_, r)| c.of(r))
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Replaces every row's book equity with the lagged statement value
    /// (or `None` when no statement is usable yet).
    pub fn apply_book_equity(&mut self, statements: &BookEquityStatements) {
        for (ticker, series) in &mut self.rows {
            for (date, rec) in series.iter_mut() {
                rec.book_equity = statements.usable_at(ticker, *date);
            }
        }
    }
}

#[derive(Deserialize)]
struct PriceRow {
    date: NaiveDate,
    ticker: String,
    open: f64,
    volume: f64,
    shares_out: f64,
    book_equity_lagged: Option<f64>,
}

/// Loads `prices.csv`. Every ticker must be known to the firm master.
pub fn load_prices(path: impl AsRef<Path>, master: &FirmMaster) -> Result<PriceTable> {
    let path = path.as_ref();
    let mut table = PriceTable::default();
    for row in csv_reader(path)?.deserialize::<PriceRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if !master.contains(&row.ticker) {
            return Err(Error::UnknownTicker { ticker: row.ticker, context: path.display().to_string() });
        }
        let rec = PriceRecord {
            open: row.open,
            volume: row.volume,
            shares_out: row.shares_out,
            book_equity: row.book_equity_lagged,
        };
        table.insert(&row.ticker, row.date, rec)?;
    }
    Ok(table)
}

pub fn save_prices(table: &PriceTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["date", "ticker", "open", "volume", "shares_out", "book_equity_lagged"])
        .map_err(|e| csv_error(path, e))?;
    // date-major order, which is how vendor extracts usually arrive
    let mut rows: Vec<(NaiveDate, &str, &PriceRecord)> = table
        .rows
        .iter()
        .flat_map(|(t, s)| s.iter().map(move |(d, r)| (*d, t.as_str(), r)))
        .collect();
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for (d, t, r) in rows {
        let be = r.book_equity.map(|b| b.to_string()).unwrap_or_default();
        w.write_record([
            d.to_string(),
            t.to_owned(),
            r.open.to_string(),
            r.volume.to_string(),
            r.shares_out.to_string(),
            be,
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Quarterly book-equity statements, keyed by ticker and fiscal period end.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BookEquityStatements {
    by_ticker: BTreeMap<String, BTreeMap<NaiveDate, f64>>,
}

impl BookEquityStatements {
    pub fn insert(&mut self, ticker: &str, period_end: NaiveDate, value: f64) {
        self.by_ticker
            .entry(ticker.to_owned())
            .or_default()
            .insert(first_usable_date(period_end), value);
    }

    /// Most recent statement whose two-quarter lag has elapsed by `date`.
    pub fn usable_at(&self, ticker: &str, date: NaiveDate) -> Option<f64> {
        self.by_ticker.get(ticker)?.range(..=date).next_back().map(|(_, v)| *v)
    }
}

/// First date a statement for the quarter containing `period_end` may be used:
/// the first day of the quarter two quarters later.
pub fn first_usable_date(period_end: NaiveDate) -> NaiveDate {
    let q = (period_end.month0() / 3) as i32; // 0..=3
    let target = q + 2;
    let year = period_end.year() + target / 4;
    let month = (target % 4) as u32 * 3 + 1;
    NaiveDate::from_ymd_opt(year, month, 1).expect("valid quarter start")
}

#[derive(Deserialize)]
struct BookEquityRow {
    ticker: String,
    period_end: NaiveDate,
    book_equity: f64,
}

/// Loads `ticker,period_end,book_equity` statements.
pub fn load_book_equity(path: impl AsRef<Path>, master: &FirmMaster) -> Result<BookEquityStatements> {
    let path = path.as_ref();
    let mut out = BookEquityStatements::default();
    for row in csv_reader(path)?.deserialize::<BookEquityRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if !master.contains(&row.ticker) {
            return Err(Error::UnknownTicker { ticker: row.ticker, context: path.display().to_string() });
        }
        out.insert(&row.ticker, row.period_end, row.book_equity);
    }
    Ok(out)
}

/// Open-to-open log returns: `r_t = ln(open_{t+1}) - ln(open_t)` stored at `t`,
/// where `t+1` is the next calendar trading date. Gaps produce no entry.
pub fn compute_returns(prices: &PriceTable, calendar: &TradingCalendar) -> Result<ReturnPanel> {
    let mut out = Panel::new();
    for (ticker, series) in &prices.rows {
        for (date, rec) in series {
            let Some(next) = calendar.next_after(*date) else { continue };
            let Some(next_rec) = series.get(&next) else { continue };
            for (d, r) in [(*date, rec), (next, next_rec)] {
                if !(r.open > 0.0) {
                    return Err(Error::NonPositiveOpen { ticker: ticker.clone(), date: d });
                }
            }
            out.insert(ticker, *date, next_rec.open.ln() - rec.open.ln());
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Factors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub mkt_rf: f64,
    pub smb: f64,
    pub hml: f64,
    pub rmw: f64,
    pub cma: f64,
    pub rf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorModel {
    Ff3,
    Ff5,
}

impl FactorModel {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FactorModel::Ff3 => &["mkt_rf", "smb", "hml"],
            FactorModel::Ff5 => &["mkt_rf", "smb", "hml", "rmw", "cma"],
        }
    }

    pub fn values(self, row: &FactorRow) -> Vec<f64> {
        match self {
            FactorModel::Ff3 => vec![row.mkt_rf, row.smb, row.hml],
            FactorModel::Ff5 => vec![row.mkt_rf, row.smb, row.hml, row.rmw, row.cma],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactorSeries {
    rows: BTreeMap<NaiveDate, FactorRow>,
}

impl FactorSeries {
    pub fn from_rows(rows: impl IntoIterator<Item = (NaiveDate, FactorRow)>) -> Self {
        Self { rows: rows.into_iter().collect() }
    }

    pub fn get(&self, date: NaiveDate) -> Option<&FactorRow> {
        self.rows.get(&date)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, &FactorRow)> {
        self.rows.iter().map(|(d, r)| (*d, r))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Errors with the first trading date lacking a factor row.
    pub fn check_coverage(&self, calendar: &TradingCalendar) -> Result<()> {
        match calendar.dates().iter().find(|d| !self.rows.contains_key(d)) {
            Some(d) => Err(Error::MissingFactorDate(*d)),
            None => Ok(()),
        }
    }

    /// Factor returns compounded within each calendar month.
    pub fn monthly(&self) -> FactorSeries {
        let mut acc: BTreeMap<Month, [f64; 6]> = BTreeMap::new();
        for (d, r) in &self.rows {
            let g = acc.entry(Month::of(*d)).or_insert([1.0; 6]);
            for (slot, v) in g.iter_mut().zip([r.mkt_rf, r.smb, r.hml, r.rmw, r.cma, r.rf]) {
                *slot *= 1.0 + v;
            }
        }
        FactorSeries {
            rows: acc
                .into_iter()
                .map(|(m, g)| {
                    let row = FactorRow {
                        mkt_rf: g[0] - 1.0,
                        smb: g[1] - 1.0,
                        hml: g[2] - 1.0,
                        rmw: g[3] - 1.0,
                        cma: g[4] - 1.0,
                        rf: g[5] - 1.0,
                    };
                    (m.last_day(), row)
                })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
struct FactorCsvRow {
    date: NaiveDate,
    mkt_rf: f64,
    smb: f64,
    hml: f64,
    rmw: f64,
    cma: f64,
    rf: f64,
}

/// Loads `factors.csv` and checks it covers every date of `calendar`.
pub fn load_factors(path: impl AsRef<Path>, calendar: &TradingCalendar) -> Result<FactorSeries> {
    let path = path.as_ref();
    let mut rows = BTreeMap::new();
    for row in csv_reader(path)?.deserialize::<FactorCsvRow>() {
        let r = row.map_err(|e| csv_error(path, e))?;
        let values = [r.mkt_rf, r.smb, r.hml, r.rmw, r.cma, r.rf];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite factor value on {}", r.date)));
        }
        let fr = FactorRow { mkt_rf: r.mkt_rf, smb: r.smb, hml: r.hml, rmw: r.rmw, cma: r.cma, rf: r.rf };
        if rows.insert(r.date, fr).is_some() {
            return Err(Error::InvalidInput(format!("duplicate factor date {}", r.date)));
        }
    }
    let series = FactorSeries { rows };
    series.check_coverage(calendar)?;
    Ok(series)
}

pub fn save_factors(series: &FactorSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["date", "mkt_rf", "smb", "hml", "rmw", "cma", "rf"]).map_err(|e| csv_error(path, e))?;
    for (d, r) in &series.rows {
        w.write_record([
            d.to_string(),
            r.mkt_rf.to_string(),
            r.smb.to_string(),
            r.hml.to_string(),
            r.rmw.to_string(),
            r.cma.to_string(),
            r.rf.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Calendar-day window `[end - days, end]`.
pub fn window_start(end: NaiveDate, days: u32) -> NaiveDate {
    end - Duration::days(i64::from(days))
}
