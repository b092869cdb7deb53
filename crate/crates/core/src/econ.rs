//! Least squares, factor residualization, fixed-effects panel regression
//! and robust covariance estimators.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::corpus::{FactorModel, FactorSeries, ReturnPanel, TradingCalendar};
use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::stats::nearest_rank_quantile;

/// Relative size below which a QR diagonal marks a dependent column.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovTag {
    Iid,
    White,
    TwoWayCluster,
    NeweyWest(usize),
}

impl fmt::Display for CovTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovTag::Iid => f.write_str("iid"),
            CovTag::White => f.write_str("white"),
            CovTag::TwoWayCluster => f.write_str("two-way-cluster"),
            CovTag::NeweyWest(l) => write!(f, "newey-west({l})"),
        }
    }
}

impl Serialize for CovTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub r2: f64,
    pub nobs: usize,
    pub cov_tag: CovTag,
    /// Negative eigenvalues of the covariance were clipped to zero.
    pub cov_clipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_entities: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_periods: Option<usize>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub cov: DMatrix<f64>,
}

impl RegressionResult {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index(name).map(|k| self.coefficients[k])
    }

    pub fn t_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|k| self.t[k])
    }

    pub fn se_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|k| self.se[k])
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// A least-squares fit, before choosing a covariance estimator.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `(X'X)⁻¹`.
    pub bread: DMatrix<f64>,
    pub r2: f64,
}

/// Least squares through a Householder QR. Errors name the first column
/// that is (numerically) a combination of the preceding ones.
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if names.len() != k {
        return Err(Error::InvalidInput(format!("{} names for {k} columns", names.len())));
    }
    if y.len() != n {
        return Err(Error::InvalidInput(format!("design has {n} rows but response has {}", y.len())));
    }
    if n < k + 1 {
        return Err(Error::InvalidInput(format!("{n} observations for {k} regressors")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let norm = x.column(j).norm();
        if r[(j, j)].abs() <= RANK_TOL * norm || norm == 0.0 {
            return Err(Error::RankDeficient { column: names[j].clone() });
        }
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let beta = r
        .solve_upper_triangular(&qty.rows(0, k).into_owned())
        .ok_or_else(|| Error::RankDeficient { column: names[k - 1].clone() })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient { column: names[k - 1].clone() })?;
    let bread = &r_inv * r_inv.transpose();
    let residuals = y - x * &beta;
    Ok(OlsFit { names: names.to_vec(), x: x.clone(), beta, r2: centered_r2(y, &residuals), residuals, bread })
}

/// `1 - SSR/SST`; zero when the response has no variation relative to its level.
pub fn centered_r2(y: &DVector<f64>, residuals: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let mean = y.sum() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let scale: f64 = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if sst <= 1e-24 * scale {
        return 0.0;
    }
    1.0 - residuals.norm_squared() / sst
}

impl OlsFit {
    fn result(&self, cov: DMatrix<f64>, tag: CovTag, clipped: bool) -> RegressionResult {
        let se: Vec<f64> = cov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect();
        let coefficients: Vec<f64> = self.beta.iter().copied().collect();
        RegressionResult {
            names: self.names.clone(),
            t: coefficients.iter().zip(&se).map(|(b, s)| b / s).collect(),
            coefficients,
            se,
            r2: self.r2,
            nobs: self.x.nrows(),
            cov_tag: tag,
            cov_clipped: clipped,
            n_entities: None,
            n_periods: None,
            residuals: self.residuals.iter().copied().collect(),
            cov,
        }
    }

    /// Classical covariance `s² (X'X)⁻¹` with `s² = SSR / (n - k)`.
    pub fn iid(&self) -> RegressionResult {
        let (n, k) = self.x.shape();
        let s2 = self.residuals.norm_squared() / (n - k) as f64;
        self.result(&self.bread * s2, CovTag::Iid, false)
    }

    pub fn white(&self) -> RegressionResult {
        self.result(sandwich(&self.bread, &hac_meat(&self.x, &self.residuals, 0)), CovTag::White, false)
    }

    pub fn newey_west(&self, lags: usize) -> Result<RegressionResult> {
        check_lags(self.x.nrows(), lags)?;
        let cov = sandwich(&self.bread, &hac_meat(&self.x, &self.residuals, lags));
        Ok(self.result(cov, CovTag::NeweyWest(lags), false))
    }

    pub fn clustered(&self, entity: &[usize], time: &[usize]) -> Result<RegressionResult> {
        let c = clustered_from_bread(&self.x, &self.residuals, &self.bread, entity, time)?;
        let mut res = self.result(c.cov, CovTag::TwoWayCluster, c.clipped);
        res.n_entities = Some(c.n_entity);
        res.n_periods = Some(c.n_time);
        Ok(res)
    }
}

/// OLS with the classical covariance.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<RegressionResult> {
    Ok(ols_fit(x, y, names)?.iid())
}

fn sandwich(bread: &DMatrix<f64>, meat: &DMatrix<f64>) -> DMatrix<f64> {
    bread * meat * bread
}

fn check_lags(t: usize, lags: usize) -> Result<()> {
    if lags >= t {
        return Err(Error::InvalidInput(format!("Newey-West lag {lags} must be below the sample length {t}")));
    }
    Ok(())
}

/// `Σ_t s_t s_t' + Σ_{ℓ=1..L} (1 - ℓ/(L+1)) Σ_t (s_t s_{t-ℓ}' + s_{t-ℓ} s_t')`
/// with scores `s_t = x_t u_t`.
fn hac_meat(x: &DMatrix<f64>, u: &DVector<f64>, lags: usize) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let mut scores = x.clone();
    for (t, mut row) in scores.row_iter_mut().enumerate() {
        row *= u[t];
    }
    let mut meat = scores.transpose() * &scores;
    for l in 1..=lags.min(n.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let lead = scores.rows(l, n - l);
        let lag = scores.rows(0, n - l);
        let gamma: DMatrix<f64> = lead.transpose() * lag;
        meat += (&gamma + gamma.transpose()) * w;
    }
    debug_assert_eq!(meat.shape(), (k, k));
    meat
}

/// Heteroskedasticity-robust (HC0) covariance.
pub fn white_cov(x: &DMatrix<f64>, residuals: &DVector<f64>) -> Result<DMatrix<f64>> {
    newey_west_cov(x, residuals, 0)
}

/// Bartlett-kernel HAC covariance of the OLS coefficients. No
/// finite-sample scaling is applied, so `lags = 0` is the HC0 estimator.
pub fn newey_west_cov(x: &DMatrix<f64>, residuals: &DVector<f64>, lags: usize) -> Result<DMatrix<f64>> {
    check_lags(x.nrows(), lags)?;
    let bread = bread_of(x)?;
    Ok(sandwich(&bread, &hac_meat(x, residuals, lags)))
}

/// `floor(4 (T/100)^(2/9))`.
pub fn default_nw_lags(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

fn bread_of(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = x.ncols();
    let xtx = x.transpose() * x;
    xtx.try_inverse().ok_or_else(|| Error::RankDeficient { column: format!("x{}", k.saturating_sub(1)) })
}

#[derive(Debug, Clone)]
pub struct ClusteredCov {
    /// `V_entity + V_time - V_cell` before any correction.
    pub raw: DMatrix<f64>,
    /// `raw` with negative eigenvalues clipped to zero (identical to `raw`
    /// when it is already positive semidefinite).
    pub cov: DMatrix<f64>,
    pub clipped: bool,
    pub n_entity: usize,
    pub n_time: usize,
}

/// Two-way cluster-robust covariance by inclusion-exclusion. Each of the
/// three meats is scaled by `G/(G-1)` for its own cluster count `G`.
pub fn clustered_cov(x: &DMatrix<f64>, residuals: &DVector<f64>, entity: &[usize], time: &[usize]) -> Result<ClusteredCov> {
    let bread = bread_of(x)?;
    clustered_from_bread(x, residuals, &bread, entity, time)
}

fn cluster_meat(scores: &DMatrix<f64>, ids: &[u64]) -> (DMatrix<f64>, usize) {
    let k = scores.ncols();
    let mut sums: HashMap<u64, DVector<f64>> = HashMap::new();
    let mut order: Vec<u64> = Vec::new();
    for (row, id) in scores.row_iter().zip(ids) {
        let e = sums.entry(*id).or_insert_with(|| {
            order.push(*id);
            DVector::zeros(k)
        });
        *e += row.transpose();
    }
    // accumulate in first-appearance order so results do not depend on hashing
    let mut meat = DMatrix::zeros(k, k);
    for id in &order {
        let s = &sums[id];
        meat += s * s.transpose();
    }
    let g = order.len();
    if g > 1 {
        meat *= g as f64 / (g as f64 - 1.0);
    }
    (meat, g)
}

fn clustered_from_bread(
    x: &DMatrix<f64>,
    u: &DVector<f64>,
    bread: &DMatrix<f64>,
    entity: &[usize],
    time: &[usize],
) -> Result<ClusteredCov> {
    let n = x.nrows();
    if entity.len() != n || time.len() != n {
        return Err(Error::InvalidInput("cluster ids not aligned with rows".into()));
    }
    let mut scores = x.clone();
    for (t, mut row) in scores.row_iter_mut().enumerate() {
        row *= u[t];
    }
    let e_ids: Vec<u64> = entity.iter().map(|&e| e as u64).collect();
    let t_ids: Vec<u64> = time.iter().map(|&t| t as u64).collect();
    let (me, ge) = cluster_meat(&scores, &e_ids);
    if ge < 2 {
        return Err(Error::DegenerateClustering { dimension: "entity" });
    }
    let (mt, gt) = cluster_meat(&scores, &t_ids);
    if gt < 2 {
        return Err(Error::DegenerateClustering { dimension: "time" });
    }
    let cell_ids: Vec<u64> = entity.iter().zip(time).map(|(&e, &t)| ((e as u64) << 32) | t as u64).collect();
    let (mc, _) = cluster_meat(&scores, &cell_ids);
    let raw = sandwich(bread, &me) + sandwich(bread, &mt) - sandwich(bread, &mc);
    let raw = (&raw + raw.transpose()) * 0.5;
    let (cov, clipped) = clip_psd(&raw);
    Ok(ClusteredCov { raw, cov, clipped, n_entity: ge, n_time: gt })
}

fn clip_psd(m: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if eig.eigenvalues.iter().all(|v| *v >= -1e-12 * scale) {
        return (m.clone(), false);
    }
    let clipped = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0)));
    (&eig.eigenvectors * clipped * eig.eigenvectors.transpose(), true)
}

// ---------------------------------------------------------------------------
// Factor residuals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorLoadings {
    pub intercept: f64,
    /// In the order of `FactorModel::names`.
    pub betas: Vec<f64>,
    pub nobs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct FactorResiduals {
    pub residuals: Panel,
    pub loadings: BTreeMap<String, FactorLoadings>,
    /// Firms without enough observations, with their observation counts.
    pub skipped: Vec<(String, usize)>,
}

/// Full-sample per-firm regression of `r - rf` on the model's factors.
pub fn ff_residuals(returns: &ReturnPanel, factors: &FactorSeries, model: FactorModel) -> Result<FactorResiduals> {
    let k = model.names().len();
    let mut names = vec!["const".to_string()];
    names.extend(model.names().iter().map(|s| s.to_string()));
    let tickers: Vec<&str> = returns.tickers().collect();
    let fits: Vec<Result<(String, Option<(Vec<(NaiveDate, f64)>, FactorLoadings)>, usize)>> = tickers
        .par_iter()
        .map(|&tk| {
            let series = returns.series(tk).expect("ticker listed by panel");
            let n = series.len();
            if n < k + 2 {
                return Ok((tk.to_owned(), None, n));
            }
            let mut x = DMatrix::zeros(n, k + 1);
            let mut y = DVector::zeros(n);
            for (row, (d, r)) in series.iter().enumerate() {
                let f = factors.get(*d).ok_or(Error::MissingFactorDate(*d))?;
                x[(row, 0)] = 1.0;
                for (j, v) in model.values(f).into_iter().enumerate() {
                    x[(row, j + 1)] = v;
                }
                y[row] = r - f.rf;
            }
            let fit = ols_fit(&x, &y, &names)?;
            let resid = series.keys().copied().zip(fit.residuals.iter().copied()).collect();
            let loadings = FactorLoadings { intercept: fit.beta[0], betas: fit.beta.iter().skip(1).copied().collect(), nobs: n };
            Ok((tk.to_owned(), Some((resid, loadings)), n))
        })
        .collect();
    let mut out = FactorResiduals::default();
    for fit in fits {
        let (tk, res, n) = fit?;
        match res {
            Some((resid, loadings)) => {
                for (d, e) in resid {
                    out.residuals.insert(&tk, d, e);
                }
                out.loadings.insert(tk, loadings);
            }
            None => {
                log::warn!("{tk}: {n} observations, too few for the factor regression");
                out.skipped.push((tk, n));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Panel regression
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PanelSpec {
    /// Response horizon in trading days: regress `y_{t+h}` on `x_t`.
    pub h: usize,
    /// Pooled two-sided winsorization fraction; `None` disables it.
    pub winsorize: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PanelResult {
    pub result: RegressionResult,
    /// Firms dropped for having fewer than two aligned observations.
    pub dropped_firms: Vec<String>,
}

/// Clamps values to the pooled `[p, 1-p]` nearest-rank quantiles.
pub fn winsorize(values: &mut [f64], p: f64) {
    let (Some(lo), Some(hi)) = (nearest_rank_quantile(values, p), nearest_rank_quantile(values, 1.0 - p)) else {
        return;
    };
    for v in values {
        *v = v.clamp(lo, hi);
    }
}

/// Entity fixed-effects regression of `y_{i,t+h}` on the regressors at
/// `(i, t)`, with two-way (firm, date) clustered covariance. `t+h` is
/// counted in trading days.
pub fn panel_regress(
    y: &Panel,
    regressors: &[(&str, &Panel)],
    calendar: &TradingCalendar,
    spec: &PanelSpec,
) -> Result<PanelResult> {
    let Some((_, first)) = regressors.first() else {
        return Err(Error::InvalidInput("panel regression needs at least one regressor".into()));
    };
    let k = regressors.len();
    // rows grouped by firm: (formation date, y, x)
    let mut groups: BTreeMap<&str, Vec<(NaiveDate, f64, Vec<f64>)>> = BTreeMap::new();
    for (tk, t, x0) in first.iter() {
        let target = if spec.h == 0 { Some(t) } else { calendar.offset(t, spec.h) };
        let Some(target) = target else { continue };
        let Some(yv) = y.get(tk, target) else { continue };
        let mut row = Vec::with_capacity(k);
        row.push(x0);
        for (_, p) in &regressors[1..] {
            match p.get(tk, t) {
                Some(v) => row.push(v),
                None => break,
            }
        }
        if row.len() == k && yv.is_finite() && row.iter().all(|v| v.is_finite()) {
            groups.entry(tk).or_default().push((t, yv, row));
        }
    }
    let mut dropped = Vec::new();
    groups.retain(|tk, rows| {
        let keep = rows.len() >= 2;
        if !keep {
            dropped.push(tk.to_string());
        }
        keep
    });
    if !dropped.is_empty() {
        log::info!("{} firms dropped with fewer than 2 aligned observations", dropped.len());
    }
    let n: usize = groups.values().map(Vec::len).sum();
    let mut xs = DMatrix::zeros(n, k);
    let mut ys = DVector::zeros(n);
    let mut entity = Vec::with_capacity(n);
    let mut dates = Vec::with_capacity(n);
    let mut row = 0;
    for (e, rows) in groups.values().enumerate() {
        for (t, yv, xv) in rows {
            ys[row] = *yv;
            for (j, v) in xv.iter().enumerate() {
                xs[(row, j)] = *v;
            }
            entity.push(e);
            dates.push(*t);
            row += 1;
        }
    }
    if let Some(p) = spec.winsorize {
        winsorize(ys.as_mut_slice(), p);
        for j in 0..k {
            let mut col: Vec<f64> = xs.column(j).iter().copied().collect();
            winsorize(&mut col, p);
            xs.set_column(j, &DVector::from_vec(col));
        }
    }
    within_demean(&mut xs, &mut ys, &entity);
    let time_index: BTreeMap<NaiveDate, usize> = {
        let mut u = dates.clone();
        u.sort_unstable();
        u.dedup();
        u.into_iter().enumerate().map(|(i, d)| (d, i)).collect()
    };
    let time: Vec<usize> = dates.iter().map(|d| time_index[d]).collect();
    let names: Vec<String> = regressors.iter().map(|(n, _)| n.to_string()).collect();
    let fit = ols_fit(&xs, &ys, &names)?;
    let result = fit.clustered(&entity, &time)?;
    Ok(PanelResult { result, dropped_firms: dropped })
}

/// Subtracts per-entity means from every column of `x` and from `y`.
pub fn within_demean(x: &mut DMatrix<f64>, y: &mut DVector<f64>, entity: &[usize]) {
    let groups = entity.iter().copied().max().map_or(0, |m| m + 1);
    let k = x.ncols();
    let mut sums = vec![vec![0.0; k + 1]; groups];
    let mut counts = vec![0usize; groups];
    for (r, &e) in entity.iter().enumerate() {
        counts[e] += 1;
        sums[e][0] += y[r];
        for j in 0..k {
            sums[e][j + 1] += x[(r, j)];
        }
    }
    for (r, &e) in entity.iter().enumerate() {
        let c = counts[e] as f64;
        y[r] -= sums[e][0] / c;
        for j in 0..k {
            x[(r, j)] -= sums[e][j + 1] / c;
        }
    }
}

/// Standardized effect `β · σ_x` in basis points.
pub fn effect_bps(beta: f64, sigma_x: f64) -> f64 {
    beta * sigma_x * 1e4
}
