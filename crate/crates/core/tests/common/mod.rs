#![allow(dead_code)]

use chrono::{Duration, NaiveDate};
use newsnet::corpus::{PriceRecord, PriceTable, TradingCalendar};
use newsnet::identify::{Linkage, Strategy};
use newsnet::network::NodeAttributes;
use newsnet::Panel;
use rand::Rng;

pub fn day0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 1, 4).unwrap()
}

pub fn tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i:03}")).collect()
}

pub fn link(follower: &str, lead: &str, day: NaiveDate) -> Linkage {
    Linkage {
        article_id: format!("{follower}-{lead}-{day}"),
        info_day: day,
        lead: lead.to_string(),
        follower: follower.to_string(),
        strategy_lead: Strategy::S2,
        strategy_follower: Strategy::S2,
    }
}

/// Random linkages among `universe` plus a few outsiders, spread over `days`.
pub fn random_linkages<R: Rng>(rng: &mut R, universe: &[String], m: usize, days: i64) -> Vec<Linkage> {
    (0..m)
        .map(|_| {
            let pick = |rng: &mut R| {
                if rng.random_bool(0.05) {
                    "OUTSIDE".to_string()
                } else {
                    universe[rng.random_range(0..universe.len())].clone()
                }
            };
            let f = pick(rng);
            let l = pick(rng);
            link(&f, &l, day0() + Duration::days(rng.random_range(0..days)))
        })
        .collect()
}

/// Random sectors and characteristics, some missing.
pub fn random_attributes<R: Rng>(rng: &mut R, n: usize) -> NodeAttributes {
    let opt = |rng: &mut R, hi: f64| (!rng.random_bool(0.05)).then(|| rng.random_range(0.0..hi));
    NodeAttributes {
        sector: (0..n).map(|_| (!rng.random_bool(0.05)).then(|| format!("S{}", rng.random_range(0..4)))).collect(),
        mean_mv: (0..n).map(|_| opt(rng, 1e9)).collect(),
        mean_turnover: (0..n).map(|_| opt(rng, 0.05)).collect(),
        lower_quantile: 0.3,
        upper_quantile: 0.7,
    }
}

/// A weekday calendar of `n` dates from `day0`.
pub fn calendar(n: usize) -> TradingCalendar {
    let mut out = Vec::new();
    let mut d = day0();
    while out.len() < n {
        if !matches!(chrono::Datelike::weekday(&d), chrono::Weekday::Sat | chrono::Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    TradingCalendar::from_dates(out)
}

/// Random log returns and a price table consistent with them.
pub fn random_market<R: Rng>(rng: &mut R, names: &[String], cal: &TradingCalendar) -> (Panel, PriceTable) {
    let mut prices = PriceTable::default();
    let mut returns = Panel::new();
    for t in names {
        let mut open: f64 = rng.random_range(10.0..100.0);
        let shares = rng.random_range(1e6..1e8);
        let dates = cal.dates();
        for (i, d) in dates.iter().enumerate() {
            let rec = PriceRecord { open, volume: rng.random_range(1e4..1e6), shares_out: shares, book_equity: Some(open * shares * 0.5) };
            prices.insert(t, *d, rec).unwrap();
            if i + 1 < dates.len() {
                let r = rng.random_range(-0.05..0.05);
                returns.insert(t, *d, r);
                open *= f64::exp(r);
            }
        }
    }
    (returns, prices)
}
