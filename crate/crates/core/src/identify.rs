//! Conservative ticker identification and article screening.
//!
//! Three matching strategies are tried, in decreasing order of reliability:
//!
//! * **S1** tickers inside brackets, e.g. `(NASDAQ: AAPL)` or `(INTC)`;
//! * **S2** firm name segments, i.e. leading n-grams of the full name with
//!   legal-form suffixes stripped (`JPMorgan`, `JPMorgan Chase`);
//! * **S3** long tickers written as plain words, headlines only.
//!
//! Headlines take the first strategy that finds anything; content uses the
//! union of S1 and S2. Articles are then screened so that only single-lead,
//! modestly-sized follower sets produce lead-follower pairs. Every rule errs
//! on the side of missing a firm rather than inventing one.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::NaiveDate;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Article, ArticleSet, FirmMaster, Month};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    S1,
    S2,
    S3,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::S1 => "S1",
            Strategy::S2 => "S2",
            Strategy::S3 => "S3",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S1" => Ok(Strategy::S1),
            "S2" => Ok(Strategy::S2),
            "S3" => Ok(Strategy::S3),
            _ => Err(Error::InvalidInput(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Headline,
    Content,
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentConfig {
    /// Tickers never accepted by bracket or plain-text matching.
    pub ticker_exceptions: BTreeSet<String>,
    /// Name segments too ambiguous to identify a firm.
    pub segment_redundant: BTreeSet<String>,
    /// Minimum ticker length for plain-text (S3) matching.
    pub long_ticker_min_len: usize,
    pub max_followers: usize,
    /// Legal-form tokens stripped from the end of full names (case-insensitive).
    pub suffix_stopwords: BTreeSet<String>,
}

const STARTER_TICKER_EXCEPTIONS: &[&str] = &[
    "PEG", "COO", "C", "GPS", "IT", "ALL", "ARE", "ON", "SO", "KEY", "NOW", "A", "AI",
];

const STARTER_SEGMENT_REDUNDANT: &[&str] = &[
    "The", "American", "General", "United", "First", "National", "International", "Global",
    "Energy", "Health", "Public", "Federal", "Southern", "Western", "Eastern", "Northern",
    "Capital", "Digital", "Financial", "Realty", "Resources", "Systems", "Technologies",
    "Communications", "Services", "Industries", "Entertainment", "Enterprises", "Booking",
];

const STARTER_SUFFIX_STOPWORDS: &[&str] = &[
    "Inc", "Inc.", "Incorporated", "Corp", "Corp.", "Corporation", "Co", "Co.", "Company",
    "Companies", "Ltd", "Ltd.", "Limited", "plc", "LLC", "L.P.", "LP", "Holdings", "Holding",
    "Group", "N.V.", "NV", "S.A.", "SA", "AG", "Trust", "&", "Class", "A", "B",
];

fn string_set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for IdentConfig {
    /// Starter exception lists; real deployments extend them per universe.
    fn default() -> Self {
        Self {
            ticker_exceptions: string_set(STARTER_TICKER_EXCEPTIONS),
            segment_redundant: string_set(STARTER_SEGMENT_REDUNDANT),
            long_ticker_min_len: 4,
            max_followers: 10,
            suffix_stopwords: string_set(STARTER_SUFFIX_STOPWORDS),
        }
    }
}

impl IdentConfig {
    /// Parses the sectioned exceptions file.
    ///
    /// Sections `[ticker_exceptions]`, `[segment_redundant]` and
    /// `[suffix_stopwords]` hold one entry per line; `[settings]` holds
    /// `long_ticker_min_len = N` and `max_followers = N`. Any list section
    /// present in the file replaces the corresponding starter list. Lines
    /// starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = IdentConfig::default();
        let mut replaced: BTreeSet<&'static str> = BTreeSet::new();
        let mut section: Option<&'static str> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = match name.trim() {
                    "ticker_exceptions" => "ticker_exceptions",
                    "segment_redundant" => "segment_redundant",
                    "suffix_stopwords" => "suffix_stopwords",
                    "settings" => "settings",
                    other => return Err(Error::Config(format!("line {}: unknown section [{other}]", n + 1))),
                };
                if name != "settings" && replaced.insert(name) {
                    cfg.list_mut(name).clear();
                }
                section = Some(name);
                continue;
            }
            match section {
                None => return Err(Error::Config(format!("line {}: entry outside of a section", n + 1))),
                Some("settings") => {
                    let (key, value) = line
                        .split_once('=')
                        .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
                    let value: usize = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("line {}: expected an integer", n + 1)))?;
                    match key.trim() {
                        "long_ticker_min_len" => cfg.long_ticker_min_len = value,
                        "max_followers" => cfg.max_followers = value,
                        other => return Err(Error::Config(format!("line {}: unknown key `{other}`", n + 1))),
                    }
                }
                Some(list) => {
                    cfg.list_mut(list).insert(line.to_owned());
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_followers < 1 {
            return Err(Error::Config("max_followers must be at least 1".into()));
        }
        if self.long_ticker_min_len < 4 {
            return Err(Error::Config("long_ticker_min_len must be at least 4".into()));
        }
        Ok(())
    }

    fn list_mut(&mut self, name: &str) -> &mut BTreeSet<String> {
        match name {
            "ticker_exceptions" => &mut self.ticker_exceptions,
            "segment_redundant" => &mut self.segment_redundant,
            _ => &mut self.suffix_stopwords,
        }
    }

    fn is_suffix(&self, token: &str) -> bool {
        let bare = token.trim_end_matches(',');
        !bare.chars().any(char::is_alphanumeric)
            || self.suffix_stopwords.iter().any(|s| s.eq_ignore_ascii_case(bare))
    }
}

// ---------------------------------------------------------------------------
// Name segments (S2)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct NameSegmentMap {
    by_segment: BTreeMap<String, String>,
    by_ticker: BTreeMap<String, Vec<String>>,
    /// Segments removed because more than one firm produced them.
    pub collisions: BTreeSet<String>,
    /// Firms left without any segment; they remain identifiable by ticker only.
    pub unsegmented: Vec<String>,
    /// Segments bucketed by first character, longest first.
    buckets: HashMap<char, Vec<(String, String)>>,
}

impl NameSegmentMap {
    pub fn ticker_for(&self, segment: &str) -> Option<&str> {
        self.by_segment.get(segment).map(String::as_str)
    }

    pub fn segments_of(&self, ticker: &str) -> &[String] {
        self.by_ticker.get(ticker).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.by_segment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_segment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_segment.iter().map(|(s, t)| (s.as_str(), t.as_str()))
    }
}

/// Leading n-grams of a full name after stripping trailing suffix tokens.
pub fn name_segments(full_name: &str, config: &IdentConfig) -> Vec<String> {
    let mut tokens: Vec<&str> = full_name.split_whitespace().collect();
    while tokens.last().is_some_and(|t| config.is_suffix(t)) {
        tokens.pop();
    }
    let mut out = Vec::new();
    for k in 1..=tokens.len() {
        let last = tokens[k - 1];
        if config.is_suffix(last) {
            continue;
        }
        let mut seg = tokens[..k].join(" ");
        // "Apple," -> "Apple"
        while seg.ends_with(',') {
            seg.pop();
        }
        if k == 1 && seg.chars().count() < 3 {
            continue;
        }
        if config.segment_redundant.contains(&seg) {
            continue;
        }
        out.push(seg);
    }
    out.dedup();
    out
}

/// Builds the segment map for a set of `(ticker, full_name)` pairs.
pub fn build_segment_map<'a>(
    firms: impl IntoIterator<Item = (&'a str, &'a str)>,
    config: &IdentConfig,
) -> NameSegmentMap {
    let mut owners: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut per_ticker: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (ticker, name) in firms {
        let segs = name_segments(name, config);
        for s in &segs {
            owners.entry(s.clone()).or_default().insert(ticker.to_owned());
        }
        per_ticker.insert(ticker.to_owned(), segs);
    }

    let mut map = NameSegmentMap::default();
    for (seg, tickers) in owners {
        if tickers.len() > 1 {
            map.collisions.insert(seg);
        } else {
            let ticker = tickers.into_iter().next().expect("non-empty owner set");
            map.by_segment.insert(seg, ticker);
        }
    }
    for (ticker, segs) in per_ticker {
        let kept: Vec<String> = segs.into_iter().filter(|s| map.by_segment.contains_key(s)).collect();
        if kept.is_empty() {
            log::warn!("firm {ticker} has no usable name segment; identifiable by ticker only");
            map.unsegmented.push(ticker);
        } else {
            map.by_ticker.insert(ticker, kept);
        }
    }
    for (seg, ticker) in &map.by_segment {
        let first = seg.chars().next().expect("segments are non-empty");
        map.buckets.entry(first).or_default().push((seg.clone(), ticker.clone()));
    }
    for bucket in map.buckets.values_mut() {
        bucket.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    }
    map
}

/// Segment map over every firm in the master file.
pub fn build_name_segments(master: &FirmMaster, config: &IdentConfig) -> NameSegmentMap {
    build_segment_map(master.firms().iter().map(|(t, f)| (t.as_str(), f.full_name.as_str())), config)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn at_left_boundary(text: &str, pos: usize) -> bool {
    text[..pos].chars().next_back().is_none_or(|c| !is_word_char(c))
}

fn at_right_boundary(text: &str, end: usize) -> bool {
    text[end..].chars().next().is_none_or(|c| !is_word_char(c))
}

/// S2: case-sensitive, longest-match search of name segments on word
/// boundaries. A possessive `'s` after a segment counts as a boundary.
pub fn s2_name_segments(text: &str, map: &NameSegmentMap) -> BTreeSet<String> {
    let mut found = BTreeSet::new();
    let mut pos = 0;
    while pos < text.len() {
        let c = text[pos..].chars().next().expect("pos is on a char boundary");
        let mut advance = c.len_utf8();
        if at_left_boundary(text, pos) {
            if let Some(bucket) = map.buckets.get(&c) {
                let rest = &text[pos..];
                if let Some((seg, ticker)) = bucket
                    .iter()
                    .find(|(seg, _)| rest.starts_with(seg.as_str()) && at_right_boundary(text, pos + seg.len()))
                {
                    found.insert(ticker.clone());
                    advance = seg.len();
                }
            }
        }
        pos += advance;
    }
    found
}

// ---------------------------------------------------------------------------
// Tickers (S1, S3)
// ---------------------------------------------------------------------------

static BRACKET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\(([^()]*)\)").expect("valid regex"));

// Exchange names are matched case-insensitively ("Nasdaq: AAPL" is common);
// the ticker itself must be upper case.
static BRACKET_TICKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:(?i:NASDAQ|NYSE)\s*:\s?)?([A-Z][A-Z0-9]{0,5}(?:[.\-][A-Z])?)$").expect("valid regex")
});

/// S1: tickers written inside brackets, with or without an exchange prefix.
pub fn s1_bracket_tickers(text: &str, universe: &BTreeSet<String>, config: &IdentConfig) -> BTreeSet<String> {
    let mut found = BTreeSet::new();
    for caps in BRACKET.captures_iter(text) {
        for part in caps[1].split([',', ';']) {
            if let Some(m) = BRACKET_TICKER.captures(part.trim()) {
                let t = &m[1];
                if !config.ticker_exceptions.contains(t) && universe.contains(t) {
                    found.insert(t.to_owned());
                }
            }
        }
    }
    found
}

/// Headline text. Plain-ticker matching only accepts this type, so it can
/// never run on article content.
#[derive(Debug, Clone, Copy)]
pub struct Headline<'a>(&'a str);

impl<'a> Headline<'a> {
    pub fn new(text: &'a str) -> Self {
        Headline(text)
    }

    pub fn of(article: &'a Article) -> Self {
        Headline(&article.headline)
    }

    pub fn as_str(&self) -> &'a str {
        self.0
    }
}

/// S3: whole-word occurrences of long tickers in a headline.
pub fn s3_plain_tickers(headline: Headline<'_>, universe: &BTreeSet<String>, config: &IdentConfig) -> BTreeSet<String> {
    let text = headline.as_str();
    universe
        .iter()
        .filter(|t| t.chars().count() >= config.long_ticker_min_len && !config.ticker_exceptions.contains(*t))
        .filter(|t| {
            text.match_indices(t.as_str())
                .any(|(pos, m)| at_left_boundary(text, pos) && at_right_boundary(text, pos + m.len()))
        })
        .cloned()
        .collect()
}

// ---------------------------------------------------------------------------
// Article-level identification
// ---------------------------------------------------------------------------

/// Everything needed to identify firms for one index universe.
#[derive(Debug, Clone)]
pub struct UniverseMaps {
    pub universe: BTreeSet<String>,
    pub segments: NameSegmentMap,
}

impl UniverseMaps {
    pub fn build(master: &FirmMaster, universe: &[String], config: &IdentConfig) -> Self {
        let firms = universe
            .iter()
            .filter_map(|t| master.firm(t).map(|f| (t.as_str(), f.full_name.as_str())));
        Self {
            universe: universe.iter().cloned().collect(),
            segments: build_segment_map(firms, config),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadlineMatch {
    pub tickers: BTreeSet<String>,
    /// Strategy that produced the match; `None` when nothing matched.
    pub strategy: Option<Strategy>,
}

/// Headline identification with priority S1 > S2 > S3.
pub fn identify_headline(headline: Headline<'_>, maps: &UniverseMaps, config: &IdentConfig) -> HeadlineMatch {
    let s1 = s1_bracket_tickers(headline.as_str(), &maps.universe, config);
    if !s1.is_empty() {
        return HeadlineMatch { tickers: s1, strategy: Some(Strategy::S1) };
    }
    let s2 = s2_name_segments(headline.as_str(), &maps.segments);
    if !s2.is_empty() {
        return HeadlineMatch { tickers: s2, strategy: Some(Strategy::S2) };
    }
    let s3 = s3_plain_tickers(headline, &maps.universe, config);
    let strategy = (!s3.is_empty()).then_some(Strategy::S3);
    HeadlineMatch { tickers: s3, strategy }
}

/// Content identification: union of S1 and S2. The map value is the
/// strategy that found the ticker (S1 when both did).
pub fn identify_content(content: &str, maps: &UniverseMaps, config: &IdentConfig) -> BTreeMap<String, Strategy> {
    let mut out: BTreeMap<String, Strategy> = s2_name_segments(content, &maps.segments)
        .into_iter()
        .map(|t| (t, Strategy::S2))
        .collect();
    for t in s1_bracket_tickers(content, &maps.universe, config) {
        out.insert(t, Strategy::S1);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Kept,
    NoLead,
    MultiLead,
    TooManyFollowers,
    /// A single lead but nobody in the content; yields no pair.
    NoFollowers,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Kept => "kept",
            Verdict::NoLead => "dropped(no-lead)",
            Verdict::MultiLead => "dropped(multi-lead)",
            Verdict::TooManyFollowers => "dropped(too-many-followers)",
            Verdict::NoFollowers => "dropped(no-followers)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub strategy: Strategy,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentResult {
    pub article_id: String,
    pub info_day: NaiveDate,
    pub leads: BTreeSet<String>,
    pub followers: BTreeSet<String>,
    /// Provenance of every lead and follower.
    pub provenance: BTreeMap<String, Provenance>,
    pub verdict: Verdict,
}

/// One directed lead-follower pair from a kept article.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Linkage {
    pub article_id: String,
    pub info_day: NaiveDate,
    pub lead: String,
    pub follower: String,
    pub strategy_lead: Strategy,
    pub strategy_follower: Strategy,
}

impl IdentResult {
    pub fn is_kept(&self) -> bool {
        self.verdict == Verdict::Kept
    }

    /// Pairs (follower → lead) of a kept article; empty otherwise.
    pub fn linkages(&self) -> Vec<Linkage> {
        if !self.is_kept() {
            return Vec::new();
        }
        let lead = self.leads.iter().next().expect("kept articles have one lead");
        let strategy_lead = self.provenance[lead].strategy;
        self.followers
            .iter()
            .map(|f| Linkage {
                article_id: self.article_id.clone(),
                info_day: self.info_day,
                lead: lead.clone(),
                follower: f.clone(),
                strategy_lead,
                strategy_follower: self.provenance[f].strategy,
            })
            .collect()
    }
}

/// Identifies the lead and followers of one article and applies screening.
pub fn extract_linkages(article: &Article, maps: &UniverseMaps, config: &IdentConfig) -> IdentResult {
    let headline = identify_headline(Headline::of(article), maps, config);
    let content = identify_content(&article.content, maps, config);

    let mut provenance = BTreeMap::new();
    if let Some(strategy) = headline.strategy {
        for t in &headline.tickers {
            provenance.insert(t.clone(), Provenance { strategy, location: Location::Headline });
        }
    }
    let mut followers = BTreeSet::new();
    for (t, strategy) in content {
        if !headline.tickers.contains(&t) {
            provenance.insert(t.clone(), Provenance { strategy, location: Location::Content });
            followers.insert(t);
        }
    }
    let verdict = match (headline.tickers.len(), followers.len()) {
        (0, _) => Verdict::NoLead,
        (1, 0) => Verdict::NoFollowers,
        (1, n) if n > config.max_followers => Verdict::TooManyFollowers,
        (1, _) => Verdict::Kept,
        _ => Verdict::MultiLead,
    };
    IdentResult {
        article_id: article.id.clone(),
        info_day: article.info_day,
        leads: headline.tickers,
        followers,
        provenance,
        verdict,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdentSummary {
    pub verdicts: BTreeMap<Verdict, usize>,
    pub pairs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct IdentOutput {
    /// One result per article, in input order.
    pub results: Vec<IdentResult>,
    pub linkages: Vec<Linkage>,
    pub summary: IdentSummary,
}

/// Runs identification over a corpus, resolving each article's universe
/// from the membership month of its information day.
pub fn identify_articles(articles: &ArticleSet, master: &FirmMaster, config: &IdentConfig) -> IdentOutput {
    let months: BTreeSet<Month> = articles.iter().map(|a| Month::of(a.info_day)).collect();
    let maps: BTreeMap<Month, UniverseMaps> = months
        .into_par_iter()
        .map(|m| (m, UniverseMaps::build(master, &master.universe(m), config)))
        .collect();

    let results: Vec<IdentResult> = articles
        .articles
        .par_iter()
        .map(|a| extract_linkages(a, &maps[&Month::of(a.info_day)], config))
        .collect();

    let mut summary = IdentSummary::default();
    let mut linkages = Vec::new();
    for r in &results {
        *summary.verdicts.entry(r.verdict).or_default() += 1;
        linkages.extend(r.linkages());
    }
    summary.pairs = linkages.len();
    IdentOutput { results, linkages, summary }
}

// ---------------------------------------------------------------------------
// linkages.csv
// ---------------------------------------------------------------------------

pub fn save_linkages(linkages: &[Linkage], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let err = |e: csv::Error| Error::Csv { path: path.display().to_string(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["article_id", "info_day", "lead", "follower", "strategy_lead", "strategy_follower"])
        .map_err(err)?;
    for l in linkages {
        w.write_record([
            l.article_id.as_str(),
            &l.info_day.to_string(),
            &l.lead,
            &l.follower,
            &l.strategy_lead.to_string(),
            &l.strategy_follower.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_linkages(path: impl AsRef<Path>) -> Result<Vec<Linkage>> {
    let path = path.as_ref();
    let err = |e: csv::Error| Error::Csv { path: path.display().to_string(), message: e.to_string() };
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(err)?;
    r.deserialize().map(|row| row.map_err(err)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_timestamp;

    fn cfg() -> IdentConfig {
        IdentConfig::default()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn segments_strip_suffixes() {
        assert_eq!(name_segments("JPMorgan Chase & Co", &cfg()), ["JPMorgan", "JPMorgan Chase"]);
        assert_eq!(name_segments("Apple Inc", &cfg()), ["Apple"]);
        assert_eq!(name_segments("Apple, Inc.", &cfg()), ["Apple"]);
        assert_eq!(name_segments("Alphabet Inc Class A", &cfg()), ["Alphabet"]);
        assert_eq!(
            name_segments("Johnson & Johnson", &cfg()),
            ["Johnson", "Johnson & Johnson"]
        );
        // short single tokens and redundant strings are excluded
        assert_eq!(name_segments("HP Inc", &cfg()), Vec::<String>::new());
        assert_eq!(name_segments("The Walt Disney Company", &cfg()), ["The Walt", "The Walt Disney"]);
    }

    #[test]
    fn colliding_segments_are_removed_from_both_firms() {
        let map = build_segment_map(
            [("NAT1", "National Widgets Corp"), ("NAT2", "National Gadgets Inc")],
            &IdentConfig { segment_redundant: BTreeSet::new(), ..cfg() },
        );
        assert!(map.ticker_for("National").is_none());
        assert!(map.collisions.contains("National"));
        assert_eq!(map.ticker_for("National Widgets"), Some("NAT1"));
        assert_eq!(map.ticker_for("National Gadgets"), Some("NAT2"));
    }

    #[test]
    fn firm_without_segments_is_reported() {
        let map = build_segment_map([("HPQ", "HP Inc")], &cfg());
        assert_eq!(map.unsegmented, ["HPQ"]);
        assert!(map.is_empty());
    }

    #[test]
    fn s1_patterns() {
        let u = set(&["INTC", "AAPL", "T", "COO", "BRK.B"]);
        assert_eq!(s1_bracket_tickers("Intel (NASDAQ:INTC) is accelerating", &u, &cfg()), set(&["INTC"]));
        assert_eq!(s1_bracket_tickers("(NASDAQ: AAPL)", &u, &cfg()), set(&["AAPL"]));
        assert_eq!(s1_bracket_tickers("AT&T (NYSE:T) fell", &u, &cfg()), set(&["T"]));
        assert_eq!(s1_bracket_tickers("Apple (AAPL) rose", &u, &cfg()), set(&["AAPL"]));
        assert_eq!(s1_bracket_tickers("Berkshire (NYSE: BRK.B)", &u, &cfg()), set(&["BRK.B"]));
        assert!(s1_bracket_tickers("(COO)", &u, &cfg()).is_empty());
        // not a ticker pattern, lower case, out of universe, unbalanced
        assert!(s1_bracket_tickers("(see chart) (aapl) (MSFT) (INTC", &u, &cfg()).is_empty());
    }

    #[test]
    fn s2_longest_match_and_boundaries() {
        let map = build_segment_map(
            [("AAPL", "Apple Inc"), ("JPM", "JPMorgan Chase & Co"), ("NKE", "Nike Inc")],
            &cfg(),
        );
        assert_eq!(s2_name_segments("Apple unveiled a phone", &map), set(&["AAPL"]));
        assert_eq!(s2_name_segments("JPMorgan Chase said", &map), set(&["JPM"]));
        assert!(s2_name_segments("pineapple futures", &map).is_empty());
        assert!(s2_name_segments("Pineapple futures", &map).is_empty());
        assert!(s2_name_segments("Applesauce maker", &map).is_empty());
        assert!(s2_name_segments("apple orchards", &map).is_empty());
        assert_eq!(s2_name_segments("Apple's supplier and Nike.", &map), set(&["AAPL", "NKE"]));
    }

    #[test]
    fn s3_long_tickers_only() {
        let u = set(&["GOOGL", "HD", "PEG"]);
        assert_eq!(s3_plain_tickers(Headline::new("GOOGL jumps after earnings"), &u, &cfg()), set(&["GOOGL"]));
        assert!(s3_plain_tickers(Headline::new("HD camera sales surge"), &u, &cfg()).is_empty());
        assert!(s3_plain_tickers(Headline::new("GOOGLE is not a ticker"), &u, &cfg()).is_empty());
    }

    fn maps() -> UniverseMaps {
        let universe = ["AAPL", "INTC", "NKE", "GOOGL", "HD"];
        let names = ["Apple Inc", "Intel Corp", "Nike Inc", "Alphabet Inc Class A", "Home Depot Inc"];
        UniverseMaps {
            universe: universe.iter().map(|s| s.to_string()).collect(),
            segments: build_segment_map(universe.into_iter().zip(names), &cfg()),
        }
    }

    #[test]
    fn headline_priority() {
        let m = maps();
        let h = identify_headline(Headline::new("Apple partner (NASDAQ:INTC) rallies"), &m, &cfg());
        assert_eq!(h, HeadlineMatch { tickers: set(&["INTC"]), strategy: Some(Strategy::S1) });
        let h = identify_headline(Headline::new("Apple beats estimates"), &m, &cfg());
        assert_eq!(h, HeadlineMatch { tickers: set(&["AAPL"]), strategy: Some(Strategy::S2) });
        let h = identify_headline(Headline::new("GOOGL up 3%"), &m, &cfg());
        assert_eq!(h, HeadlineMatch { tickers: set(&["GOOGL"]), strategy: Some(Strategy::S3) });
        let h = identify_headline(Headline::new("Markets drift"), &m, &cfg());
        assert_eq!(h.strategy, None);
    }

    #[test]
    fn content_uses_s1_and_s2_only() {
        let m = maps();
        let c = identify_content("Intel (NASDAQ:INTC) and Nike both", &m, &cfg());
        assert_eq!(c.keys().cloned().collect::<BTreeSet<_>>(), set(&["INTC", "NKE"]));
        assert_eq!(c["INTC"], Strategy::S1);
        assert_eq!(c["NKE"], Strategy::S2);
        assert!(identify_content("HD footage of GOOGL", &m, &cfg()).is_empty());
        assert!(identify_content("", &m, &cfg()).is_empty());
    }

    fn article(headline: &str, content: &str) -> Article {
        Article::new("x", parse_timestamp("2020-03-02T10:00:00-05:00").unwrap(), headline, content, "p")
    }

    #[test]
    fn screening_verdicts() {
        let m = maps();
        let r = extract_linkages(&article("Apple and Nike team up", "Intel too"), &m, &cfg());
        assert_eq!(r.verdict, Verdict::MultiLead);
        assert!(r.linkages().is_empty());
        let r = extract_linkages(&article("Apple rises", "Nothing else here"), &m, &cfg());
        assert_eq!(r.verdict, Verdict::NoFollowers);
        let r = extract_linkages(&article("Markets rise", "Apple and Intel"), &m, &cfg());
        assert_eq!(r.verdict, Verdict::NoLead);
        // the lead mentioned again in content is not its own follower
        let r = extract_linkages(&article("Apple rises", "Apple said Intel (INTC) helped"), &m, &cfg());
        assert_eq!(r.verdict, Verdict::Kept);
        assert_eq!(r.followers, set(&["INTC"]));
        assert_eq!(r.provenance["INTC"].strategy, Strategy::S1);
    }

    #[test]
    fn config_file_sections() {
        let text = "# comment\n[ticker_exceptions]\nCOO\nXYZ\n[settings]\nmax_followers = 8\nlong_ticker_min_len = 5\n";
        let c = IdentConfig::parse(text).unwrap();
        assert_eq!(c.ticker_exceptions, set(&["COO", "XYZ"]));
        assert_eq!(c.max_followers, 8);
        assert_eq!(c.long_ticker_min_len, 5);
        // untouched lists keep the starter entries
        assert!(c.suffix_stopwords.contains("Inc"));
        assert!(IdentConfig::parse("[bogus]\n").is_err());
        assert!(IdentConfig::parse("[settings]\nlong_ticker_min_len = 3\n").is_err());
        assert!(IdentConfig::parse("[settings]\nmax_followers = 0\n").is_err());
        assert!(IdentConfig::parse("COO\n").is_err());
    }
}
