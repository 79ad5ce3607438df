//! Leading-order extraction, per-state statistics and pseudo-thresholds.
//!
//! A leading-order fit for degree d divides the series by x^d and fits the
//! quotient with a short polynomial c_d + c_{d+1} x + ..., so the constant
//! term is the leading coefficient and the next orders do not bias it. The
//! degree with the smallest relative variance wins; relative variance is the
//! residual variance of the quotient divided by c_d².

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximator::{approximate, Variant};
use crate::channels::{ChannelModel, ChiMatrix};
use crate::error::{Error, Result};
use crate::metrics::{chi_deviation, error_rates, metric_value, trace_distances, MeanStd, Metric, DEFAULT_STATES};
use crate::qec::{logical_chi, CodeSpec};
use crate::state::fibonacci_sphere;

/// Acceptance bar for the relative variance of a leading-order fit.
pub const RELATIVE_VARIANCE_BAR: f64 = 1e-7;
pub const DEFAULT_DEGREES: [u32; 6] = [1, 2, 3, 4, 5, 6];
/// Highest number of correction orders fitted beside the leading one.
const MAX_EXTRA_TERMS: usize = 3;
/// Domain and grid size for threshold searches.
pub const THRESHOLD_DOMAIN: (f64, f64) = (1e-4, 0.3);
pub const THRESHOLD_GRID: usize = 8;
const THRESHOLD_REL_TOL: f64 = 1e-6;

/// `n` points spaced logarithmically from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Default fit grid: three points per decade over [1e-4, 1e-2].
pub fn fit_grid() -> Vec<f64> {
    log_grid(1e-4, 1e-2, 7)
}

/// Strengths for the per-state procedure.
pub fn per_state_grid() -> Vec<f64> {
    log_grid(1e-4, 1e-3, 3)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrderFit {
    pub degree: u32,
    pub coefficient: f64,
    pub total_variance: f64,
    pub relative_variance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Physical,
    Logical,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Physical => "physical",
            Level::Logical => "logical",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub strengths: Vec<f64>,
    pub values: Vec<f64>,
    pub metric: Metric,
    pub level: Level,
}

impl MetricSeries {
    pub fn new(strengths: Vec<f64>, values: Vec<f64>, metric: Metric, level: Level) -> Result<Self> {
        if strengths.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} strengths but {} values",
                strengths.len(),
                values.len()
            )));
        }
        if strengths.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidSeries("strengths must be positive and finite".into()));
        }
        if strengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries("strengths must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("values must be finite".into()));
        }
        Ok(Self {
            strengths,
            values,
            metric,
            level,
        })
    }

    pub fn len(&self) -> usize {
        self.strengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strengths.is_empty()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

/// Least-squares fit of y / x^d with `extra` correction orders; returns
/// (c_d, residual variance of the quotient).
fn fit_quotient(x: &[f64], y: &[f64], d: u32, extra: usize) -> Option<(f64, f64, f64)> {
    let n = x.len();
    let xmax = x.iter().cloned().fold(0.0, f64::max);
    let u: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi / xi.powi(d as i32)).collect();
    let a = DMatrix::from_fn(n, extra + 1, |i, k| (x[i] / xmax).powi(k as i32));
    let b = DVector::from_vec(u.clone());
    let sol = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let res = &a * &sol - &b;
    let dof = (n - extra - 1).max(1) as f64;
    let var = res.norm_squared() / dof;
    let umax = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Some((sol[0], var, umax))
}

fn check_xy(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidSeries("length mismatch".into()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidSeries("a fit needs at least 2 points".into()));
    }
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSeries("strengths must be positive and values finite".into()));
    }
    Ok(())
}

/// Leading-order fit on raw vectors; see [`fit_leading_order`].
pub fn fit_leading_order_xy(x: &[f64], y: &[f64], degrees: &[u32]) -> Result<LeadingOrderFit> {
    check_xy(x, y)?;
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroSeries);
    }
    let extra = MAX_EXTRA_TERMS.min(x.len().saturating_sub(2));
    let mut best: Option<LeadingOrderFit> = None;
    for &d in degrees {
        let Some((c, var, umax)) = fit_quotient(x, y, d, extra) else {
            continue;
        };
        // A vanishing constant term means the true order is higher.
        let rel = if c.abs() <= 1e-8 * umax { f64::INFINITY } else { var / (c * c) };
        let fit = LeadingOrderFit {
            degree: d,
            coefficient: c,
            total_variance: var,
            relative_variance: rel,
        };
        if best.is_none_or(|b| rel < b.relative_variance) {
            best = Some(fit);
        }
    }
    let best = best.ok_or_else(|| Error::InvalidSeries("no candidate degrees".into()))?;
    if !(best.relative_variance < RELATIVE_VARIANCE_BAR) {
        return Err(Error::FitRejected {
            degree: best.degree,
            relative_variance: best.relative_variance,
        });
    }
    Ok(best)
}

/// Leading order c·x^d of a series over the candidate degrees. Fits whose
/// relative variance is not below [`RELATIVE_VARIANCE_BAR`] are rejected.
pub fn fit_leading_order(series: &MetricSeries, degrees: &[u32]) -> Result<LeadingOrderFit> {
    if series.len() < 3 {
        return Err(Error::InvalidSeries("a leading-order fit needs at least 3 points".into()));
    }
    fit_leading_order_xy(&series.strengths, &series.values, degrees)
}

/// Coefficient of x^d with the degree held fixed; no acceptance bar.
pub fn fit_fixed_degree(x: &[f64], y: &[f64], d: u32) -> Result<LeadingOrderFit> {
    check_xy(x, y)?;
    let extra = MAX_EXTRA_TERMS.min(x.len().saturating_sub(2));
    let (c, var, _) = fit_quotient(x, y, d, extra).ok_or_else(|| Error::InvalidSeries("singular fit".into()))?;
    Ok(LeadingOrderFit {
        degree: d,
        coefficient: c,
        total_variance: var,
        relative_variance: if c == 0.0 { f64::INFINITY } else { var / (c * c) },
    })
}

/// χ matrices of a family at each strength; strength-free models are constant.
pub fn family_chis(model: &ChannelModel, strengths: &[f64]) -> Result<Vec<ChiMatrix>> {
    strengths
        .par_iter()
        .map(|&s| if model.tag.has_strength() { model.at(s)?.chi() } else { model.chi() })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerStateStats {
    /// Modal leading degree over the states; `None` when every series vanishes.
    pub degree: Option<u32>,
    pub mean: f64,
    pub std: f64,
    pub n_states: usize,
}

/// Per-state leading-order statistics: for each of `n_states` Fibonacci
/// states, fit the metric over `strengths`, keep the leading coefficient,
/// then report the mean and population standard deviation. States are
/// refitted at the modal degree so that states whose leading term vanishes
/// contribute a zero coefficient.
pub fn per_state_leading_stats(
    model: &ChannelModel,
    metric: Metric,
    n_states: usize,
    strengths: &[f64],
) -> Result<PerStateStats> {
    per_state_stats_of(&family_chis(model, strengths)?, strengths, metric, n_states)
}

/// [`per_state_leading_stats`] for an explicit χ family, e.g. a sequence of
/// refitted approximations.
pub fn per_state_stats_of(chis: &[ChiMatrix], strengths: &[f64], metric: Metric, n_states: usize) -> Result<PerStateStats> {
    if chis.len() != strengths.len() {
        return Err(Error::InvalidParameter(format!(
            "{} χ matrices for {} strengths",
            chis.len(),
            strengths.len()
        )));
    }
    if metric == Metric::Diamond {
        let values = chis
            .iter()
            .map(|c| metric_value(c, metric, n_states))
            .collect::<Result<Vec<_>>>()?;
        return Ok(match fit_leading_order_xy(strengths, &values, &DEFAULT_DEGREES) {
            Ok(f) => PerStateStats {
                degree: Some(f.degree),
                mean: f.coefficient,
                std: 0.0,
                n_states: 1,
            },
            Err(Error::ZeroSeries) => PerStateStats {
                degree: None,
                mean: 0.0,
                std: 0.0,
                n_states: 1,
            },
            Err(e) => return Err(e),
        });
    }
    let states = fibonacci_sphere(n_states);
    let per_strength: Vec<Vec<f64>> = chis
        .iter()
        .map(|c| match metric {
            Metric::ErrorRate => error_rates(c, &states),
            _ => trace_distances(c, &states),
        })
        .collect();
    let series: Vec<Vec<f64>> = (0..states.len())
        .map(|k| per_strength.iter().map(|v| v[k]).collect())
        .collect();
    let global = series.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let mut counts = [0usize; 7];
    for y in &series {
        match fit_leading_order_xy(strengths, y, &DEFAULT_DEGREES) {
            Ok(f) => counts[f.degree as usize] += 1,
            Err(Error::ZeroSeries) => {}
            Err(e) => {
                let peak = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
                if peak > 1e-6 * global {
                    return Err(e);
                }
            }
        }
    }
    let Some(degree) = (1..=6).filter(|&d| counts[d] > 0).max_by_key(|&d| (counts[d], std::cmp::Reverse(d))) else {
        return Ok(PerStateStats {
            degree: None,
            mean: 0.0,
            std: 0.0,
            n_states: states.len(),
        });
    };
    let coeffs = series
        .iter()
        .map(|y| {
            if y.iter().all(|v| *v == 0.0) {
                Ok(0.0)
            } else {
                Ok(fit_fixed_degree(strengths, y, degree as u32)?.coefficient)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let ms = MeanStd::of(&coeffs);
    Ok(PerStateStats {
        degree: Some(degree as u32),
        mean: ms.mean,
        std: ms.std,
        n_states: states.len(),
    })
}

/// Which part of a χ entry a fit describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryFit {
    pub row: usize,
    pub col: usize,
    pub part: Part,
    pub fit: LeadingOrderFit,
}

/// Leading orders of the upper-triangle χ entries (the II entry excluded).
/// Entries below 1e-12 of the largest deviation entry at every strength are
/// treated as zero and omitted.
pub fn fit_chi_entries(chis: &[ChiMatrix], strengths: &[f64], degrees: &[u32]) -> Result<Vec<EntryFit>> {
    if chis.len() != strengths.len() {
        return Err(Error::InvalidSeries("one χ per strength required".into()));
    }
    let scales: Vec<f64> = chis.iter().map(|c| chi_deviation(c).max_abs()).collect();
    let mut out = Vec::new();
    for row in 0..4 {
        for col in row..4 {
            if row == 0 && col == 0 {
                continue;
            }
            for part in [Part::Re, Part::Im] {
                let y: Vec<f64> = chis
                    .iter()
                    .map(|c| {
                        let z = c.get(row, col);
                        if part == Part::Re { z.re } else { z.im }
                    })
                    .collect();
                if y.iter().zip(&scales).all(|(v, s)| v.abs() <= 1e-12 * s) {
                    continue;
                }
                let fit = fit_leading_order_xy(strengths, &y, degrees)?;
                out.push(EntryFit { row, col, part, fit });
            }
        }
    }
    Ok(out)
}

/// Physical metric series of a family.
pub fn physical_series(model: &ChannelModel, metric: Metric, strengths: &[f64]) -> Result<MetricSeries> {
    let values = family_chis(model, strengths)?
        .par_iter()
        .map(|c| metric_value(c, metric, DEFAULT_STATES))
        .collect::<Result<Vec<_>>>()?;
    MetricSeries::new(strengths.to_vec(), values, metric, Level::Physical)
}

/// Logical metric series of a family under perfect EC.
pub fn logical_series(model: &ChannelModel, code: &CodeSpec, metric: Metric, strengths: &[f64]) -> Result<MetricSeries> {
    let values = family_chis(model, strengths)?
        .par_iter()
        .map(|c| metric_value(&logical_chi(code, c)?, metric, DEFAULT_STATES))
        .collect::<Result<Vec<_>>>()?;
    MetricSeries::new(strengths.to_vec(), values, metric, Level::Logical)
}

/// Physical curve of the target together with the logical curve of the
/// approximation, refitted at every strength (the approximation enters only
/// at the logical level).
pub fn exact_over_approx_series(
    target: &ChannelModel,
    variant: Variant,
    code: &CodeSpec,
    metric: Metric,
    strengths: &[f64],
) -> Result<(MetricSeries, MetricSeries)> {
    let physical = physical_series(target, metric, strengths)?;
    let values = strengths
        .par_iter()
        .map(|&s| {
            let fit = approximate(&target.at(s)?.chi()?, variant)?;
            metric_value(&logical_chi(code, &fit.chi)?, metric, DEFAULT_STATES)
        })
        .collect::<Result<Vec<_>>>()?;
    let logical = MetricSeries::new(strengths.to_vec(), values, metric, Level::Logical)?;
    Ok((physical, logical))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    Exact,
    ExactOverApprox,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::Exact => "exact",
            ThresholdMode::ExactOverApprox => "exact_over_approx",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "exact" => Ok(ThresholdMode::Exact),
            "exact_over_approx" => Ok(ThresholdMode::ExactOverApprox),
            _ => Err(Error::Parse(format!("unknown threshold mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// 0 when the curves do not cross inside the domain.
    pub threshold_strength: f64,
    pub metric: Metric,
    pub mode: ThresholdMode,
    pub bracket: Option<(f64, f64)>,
    /// Physical and logical curves coincide; the threshold is the domain edge.
    pub degenerate: bool,
    /// More than one crossing was seen; the smallest is reported.
    pub multiple_crossings: bool,
}

fn no_crossing(metric: Metric, mode: ThresholdMode) -> ThresholdResult {
    ThresholdResult {
        threshold_strength: 0.0,
        metric,
        mode,
        bracket: None,
        degenerate: false,
        multiple_crossings: false,
    }
}

/// Root of logical − physical on sampled values `g` at `grid`, refined by
/// bisection in log-strength on `diff`.
fn locate<F>(grid: &[f64], g: &[f64], diff: F, metric: Metric, mode: ThresholdMode) -> Result<ThresholdResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 || g.iter().all(|v| v.abs() <= 1e-12 * scale) {
        return Ok(ThresholdResult {
            threshold_strength: *grid.last().unwrap_or(&0.0),
            degenerate: true,
            ..no_crossing(metric, mode)
        });
    }
    let sign = |v: f64| if v.abs() <= 1e-12 * scale { 0 } else if v > 0.0 { 1 } else { -1 };
    let signs: Vec<i32> = g.iter().map(|v| sign(*v)).collect();
    let mut crossings = Vec::new();
    let mut last: Option<(usize, i32)> = None;
    for (i, &s) in signs.iter().enumerate() {
        if s == 0 {
            continue;
        }
        if let Some((j, t)) = last {
            if t != s {
                crossings.push((j, i));
            }
        }
        last = Some((i, s));
    }
    let Some(&(i0, i1)) = crossings.first() else {
        return Ok(no_crossing(metric, mode));
    };
    let (mut lo, mut hi) = (grid[i0], grid[i1]);
    let s_lo = signs[i0];
    while (hi - lo) > THRESHOLD_REL_TOL * lo {
        let mid = (lo * hi).sqrt();
        match sign(diff(mid)?) {
            0 => {
                lo = mid;
                hi = mid;
            }
            s if s == s_lo => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(ThresholdResult {
        threshold_strength: (lo * hi).sqrt(),
        metric,
        mode,
        bracket: Some((grid[i0], grid[i1])),
        degenerate: false,
        multiple_crossings: crossings.len() > 1,
    })
}

/// Log-log interpolation of a series (linear where a value is not positive).
fn interpolate(s: &MetricSeries, x: f64) -> f64 {
    let xs = &s.strengths;
    let k = xs.partition_point(|v| *v <= x).clamp(1, xs.len() - 1);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], s.values[k - 1], s.values[k]);
    if y0 > 0.0 && y1 > 0.0 {
        let t = (x / x0).ln() / (x1 / x0).ln();
        (y0.ln() + t * (y1.ln() - y0.ln())).exp()
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Crossing of two sampled curves on a shared grid; between samples the
/// curves are interpolated as local power laws.
pub fn pseudo_threshold(physical: &MetricSeries, logical: &MetricSeries, mode: ThresholdMode) -> Result<ThresholdResult> {
    if physical.strengths != logical.strengths {
        return Err(Error::InvalidSeries("threshold curves need the same strength grid".into()));
    }
    if physical.metric != logical.metric {
        return Err(Error::InvalidSeries("threshold curves need the same metric".into()));
    }
    if physical.len() < 2 {
        return Err(Error::InvalidSeries("threshold curves need at least 2 points".into()));
    }
    let g: Vec<f64> = logical.values.iter().zip(&physical.values).map(|(l, p)| l - p).collect();
    locate(
        &physical.strengths,
        &g,
        |x| Ok(interpolate(logical, x) - interpolate(physical, x)),
        physical.metric,
        mode,
    )
}

/// Threshold search on exact curves: `curves(s)` returns (physical, logical)
/// at strength s. The domain is scanned on a log grid of `n_grid` points and
/// the first crossing refined to 1e-6 relative.
pub fn threshold_search<F>(
    curves: F,
    metric: Metric,
    mode: ThresholdMode,
    domain: (f64, f64),
    n_grid: usize,
) -> Result<ThresholdResult>
where
    F: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    let grid = log_grid(domain.0, domain.1, n_grid.max(2));
    let g = grid
        .par_iter()
        .map(|&s| curves(s).map(|(p, l)| l - p))
        .collect::<Result<Vec<_>>>()?;
    locate(&grid, &g, |s| curves(s).map(|(p, l)| l - p), metric, mode)
}

/// Pseudo-threshold of `target` on `code` with perfect EC, searched over
/// `domain` (normally [`THRESHOLD_DOMAIN`]). With a variant, the logical
/// curve uses that approximation refitted at each strength.
pub fn model_threshold(
    target: &ChannelModel,
    variant: Option<Variant>,
    code: &CodeSpec,
    metric: Metric,
    domain: (f64, f64),
) -> Result<ThresholdResult> {
    if !(domain.0 > 0.0 && domain.1 > domain.0) {
        return Err(Error::InvalidParameter(format!("threshold domain {domain:?} must satisfy 0 < lo < hi")));
    }
    let mode = if variant.is_some() { ThresholdMode::ExactOverApprox } else { ThresholdMode::Exact };
    threshold_search(
        |s| {
            let exact = target.at(s)?.chi()?;
            let logical_in = match variant {
                Some(v) => approximate(&target.at(s)?.chi()?, v)?.chi,
                None => exact.clone(),
            };
            let p = metric_value(&exact, metric, DEFAULT_STATES)?;
            let l = metric_value(&logical_chi(code, &logical_in)?, metric, DEFAULT_STATES)?;
            Ok((p, l))
        },
        metric,
        mode,
        domain,
        THRESHOLD_GRID,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub strengths: Vec<f64>,
    pub physical_error_rate: Vec<f64>,
    pub physical_diamond: Vec<f64>,
    pub logical_error_rate: Vec<f64>,
    pub logical_diamond: Vec<f64>,
    /// Slope of log D_⋄ against log r.
    pub physical_exponent: f64,
    pub logical_exponent: f64,
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Diamond distance against average error rate, physically and after perfect
/// EC. Coherent noise gives exponents near 1/2 and 3/4, incoherent noise 1.
pub fn scaling_exponent_report(model: &ChannelModel, code: &CodeSpec, strengths: &[f64]) -> Result<ScalingReport> {
    let rows = family_chis(model, strengths)?
        .par_iter()
        .map(|c| {
            let l = logical_chi(code, c)?;
            Ok([
                metric_value(c, Metric::ErrorRate, 0)?,
                metric_value(c, Metric::Diamond, 0)?,
                metric_value(&l, Metric::ErrorRate, 0)?,
                metric_value(&l, Metric::Diamond, 0)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    let (pr, pd, lr, ld) = (col(0), col(1), col(2), col(3));
    if pr.iter().chain(&pd).chain(&lr).chain(&ld).any(|v| *v <= 0.0) {
        return Err(Error::InvalidSeries("scaling exponents need positive metric values".into()));
    }
    Ok(ScalingReport {
        strengths: strengths.to_vec(),
        physical_exponent: loglog_slope(&pr, &pd),
        logical_exponent: loglog_slope(&lr, &ld),
        physical_error_rate: pr,
        physical_diamond: pd,
        logical_error_rate: lr,
        logical_diamond: ld,
    })
}
