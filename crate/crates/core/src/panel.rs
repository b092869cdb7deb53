//! Sparse firm × date panels.

use std::collections::BTreeMap;

use chrono::NaiveDate;

/// A sparse `(ticker, date) -> value` panel.
///
/// Missing cells are absent rather than zero or NaN. Iteration order is
/// ticker-major then date, which keeps every downstream output deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Panel {
    cells: BTreeMap<String, BTreeMap<NaiveDate, f64>>,
}

impl Panel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ticker: &str, date: NaiveDate, value: f64) -> Option<f64> {
        match self.cells.get_mut(ticker) {
            Some(series) => series.insert(date, value),
            None => {
                self.cells.entry(ticker.to_owned()).or_default().insert(date, value)
            }
        }
    }

    pub fn get(&self, ticker: &str, date: NaiveDate) -> Option<f64> {
        self.cells.get(ticker)?.get(&date).copied()
    }

    pub fn series(&self, ticker: &str) -> Option<&BTreeMap<NaiveDate, f64>> {
        self.cells.get(ticker)
    }

    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.cells.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, NaiveDate, f64)> {
        self.cells
            .iter()
            .flat_map(|(t, s)| s.iter().map(move |(d, v)| (t.as_str(), *d, *v)))
    }

    /// Number of populated cells.
    pub fn len(&self) -> usize {
        self.cells.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All values observed on `date`, keyed by ticker.
    pub fn cross_section(&self, date: NaiveDate) -> BTreeMap<&str, f64> {
        self.cells
            .iter()
            .filter_map(|(t, s)| s.get(&date).map(|v| (t.as_str(), *v)))
            .collect()
    }

    /// Sorted set of dates on which any ticker has a value.
    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut dates: Vec<NaiveDate> =
            self.cells.values().flat_map(|s| s.keys().copied()).collect();
        dates.sort_unstable();
        dates.dedup();
        dates
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Panel {
        Panel {
            cells: self
                .cells
                .iter()
                .map(|(t, s)| (t.clone(), s.iter().map(|(d, v)| (*d, f(*v))).collect()))
                .collect(),
        }
    }
}

impl FromIterator<(String, NaiveDate, f64)> for Panel {
    fn from_iter<I: IntoIterator<Item = (String, NaiveDate, f64)>>(iter: I) -> Self {
        let mut panel = Panel::new();
        for (t, d, v) in iter {
            panel.insert(&t, d, v);
        }
        panel
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, day).unwrap()
    }

    #[test]
    fn cross_section_and_dates() {
        let mut p = Panel::new();
        p.insert("B", d(3), 2.0);
        p.insert("A", d(2), 1.0);
        p.insert("A", d(3), 3.0);
        assert_eq!(p.len(), 3);
        assert_eq!(p.dates(), vec![d(2), d(3)]);
        let cs = p.cross_section(d(3));
        assert_eq!(cs.into_iter().collect::<Vec<_>>(), vec![("A", 3.0), ("B", 2.0)]);
        assert_eq!(p.get("B", d(2)), None);
    }
}
