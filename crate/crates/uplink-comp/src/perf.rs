//! Performance regions, sum-rate-versus-backhaul curves, best-scheme maps
//! and the coding-gain tables built on top of the scheme unions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{mac_sum_rate, no_coop_best, RateTuple};
use crate::allocation::PowerAllocation;
use crate::channel::{build_scenario_channel, effective_channel, estimation_error_variance, CsiConfig, EffectiveChannel, Scenario2x2};
use crate::error::{Error, Result};
use crate::schemes::{scheme_best_weighted, Quantizer, Scheme, SchemeConfig, SearchOptions};

const ENVELOPE_TOLERANCE: f64 = 1e-12;

/// Effective two-cell channel of a parametric scenario.
pub fn scenario_channel(s: &Scenario2x2, csi: &CsiConfig, n_bs_antennas: usize) -> Result<EffectiveChannel> {
    let ch = build_scenario_channel(s, n_bs_antennas)?;
    effective_channel(&ch, estimation_error_variance(csi)?)
}

/// Validates a backhaul grid: nonempty, finite, nonnegative, strictly ascending.
pub fn check_beta_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("beta grid is empty".into()));
    }
    if grid.iter().any(|b| !b.is_finite() || *b < 0.0) {
        return Err(Error::InvalidConfig("beta grid needs finite nonnegative values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("beta grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Inclusive grid `start, start + step, …, end`, robust to rounding.
pub fn linear_grid(start: f64, step: f64, end: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !end.is_finite() || end < start {
        return Err(Error::InvalidConfig(format!("grid {start}:{step}:{end} needs step > 0 and end ≥ start")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Indices of the vertices of the upper concave envelope of points sorted by `x`.
pub fn upper_envelope(points: &[(f64, f64)]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        while hull.len() >= 2 {
            let (a, b) = (points[hull[hull.len() - 2]], points[hull[hull.len() - 1]]);
            let c = points[i];
            // drop b when it lies on or below the chord a–c
            let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if cross >= -ENVELOPE_TOLERANCE * (1.0 + c.1.abs()) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// One backhaul sample of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub beta: f64,
    pub rates: RateTuple,
}

impl CurvePoint {
    pub fn sum_rate(&self) -> f64 {
        self.rates.sum()
    }
}

/// Sum rate against backhaul for one scheme configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub scheme: Scheme,
    pub quantizer: Quantizer,
    pub spc: bool,
    /// Best point found at each grid value.
    pub raw: Vec<CurvePoint>,
    /// Time-sharing closure along β, sampled on the same grid.
    pub points: Vec<CurvePoint>,
}

impl Curve {
    pub fn sum_rate_at(&self, beta: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.beta - beta).abs() < 1e-12).map(CurvePoint::sum_rate)
    }
}

/// Time-sharing closure of samples: the upper concave envelope of the
/// weighted rate along β, with rate tuples interpolated between vertices.
pub fn envelope_points(raw: &[CurvePoint], weights: &[f64]) -> Vec<CurvePoint> {
    if raw.is_empty() {
        return Vec::new();
    }
    let xy: Vec<(f64, f64)> = raw.iter().map(|p| (p.beta, p.rates.weighted(weights))).collect();
    let hull = upper_envelope(&xy);
    raw.iter()
        .map(|p| {
            let seg = hull.windows(2).find(|w| raw[w[0]].beta <= p.beta && p.beta <= raw[w[1]].beta);
            let rates = match seg {
                None => raw[hull[0]].rates.clone(),
                Some(w) => {
                    let (a, b) = (&raw[w[0]], &raw[w[1]]);
                    let t = (p.beta - a.beta) / (b.beta - a.beta);
                    RateTuple::new(a.rates.rates.iter().zip(&b.rates.rates).map(|(x, y)| x + t * (y - x)).collect())
                }
            };
            // never report less than the point itself
            let rates = if rates.weighted(weights) + ENVELOPE_TOLERANCE < p.rates.weighted(weights) { p.rates.clone() } else { rates };
            CurvePoint { beta: p.beta, rates }
        })
        .collect()
}

/// Best sum rate of `template` (β ignored) at every grid value, plus its
/// time-sharing closure.
pub fn sum_rate_curve(
    ec: &EffectiveChannel,
    sigma2: f64,
    p_max: &[f64],
    template: &SchemeConfig,
    beta_grid: &[f64],
    opts: &SearchOptions,
) -> Result<Curve> {
    check_beta_grid(beta_grid)?;
    let ones = vec![1.0; ec.n_ue()];
    let raw = beta_grid
        .par_iter()
        .map(|&beta| {
            let p = scheme_best_weighted(ec, sigma2, &template.with_beta(beta), p_max, opts, &ones)?;
            Ok(CurvePoint { beta, rates: p.rates })
        })
        .collect::<Result<Vec<_>>>()?;
    let points = envelope_points(&raw, &ones);
    Ok(Curve { scheme: template.scheme, quantizer: template.quantizer, spc: template.spc, raw, points })
}

/// Achievable rates at some backhaul, tagged with the configuration reaching them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBackhaulPoint {
    pub rates: RateTuple,
    pub beta: f64,
    pub config: SchemeConfig,
}

/// Extreme points found by weighted-sum scalarization together with their
/// time-sharing closure along β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRegion {
    pub weights: Vec<Vec<f64>>,
    pub beta_grid: Vec<f64>,
    /// Every evaluated point, per scheme, weight and β.
    pub points: Vec<RateBackhaulPoint>,
    /// Envelope vertices of the best point across schemes, per weight.
    pub hull: Vec<RateBackhaulPoint>,
}

impl PerformanceRegion {
    /// Largest `w·r` reachable with backhaul `beta`, time sharing allowed.
    pub fn support(&self, weights: &[f64], beta: f64) -> f64 {
        let mut value = self
            .points
            .iter()
            .filter(|p| p.beta <= beta)
            .map(|p| p.rates.weighted(weights))
            .fold(f64::NEG_INFINITY, f64::max);
        // points above β are reachable only by time sharing
        for lo in self.points.iter().filter(|p| p.beta <= beta) {
            for hi in self.points.iter().filter(|p| p.beta > beta) {
                let t = (beta - lo.beta) / (hi.beta - lo.beta);
                value = value.max((1.0 - t) * lo.rates.weighted(weights) + t * hi.rates.weighted(weights));
            }
        }
        value
    }
}

/// Weight vectors for boundary tracing: `steps` points on each pairwise edge
/// of the simplex (a single edge for two UEs).
pub fn weight_grid(k: usize, steps: usize) -> Result<Vec<Vec<f64>>> {
    if k < 2 || steps < 2 {
        return Err(Error::InvalidConfig("weight grid needs at least two UEs and two steps".into()));
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            for s in 0..steps {
                let t = s as f64 / (steps - 1) as f64;
                let mut w = vec![0.0; k];
                w[i] = 1.0 - t;
                w[j] = t;
                if !out.contains(&w) {
                    out.push(w);
                }
            }
        }
    }
    Ok(out)
}

/// Performance region of a set of schemes; time sharing is allowed across
/// schemes and along β.
pub fn performance_region(
    ec: &EffectiveChannel,
    sigma2: f64,
    p_max: &[f64],
    configs: &[SchemeConfig],
    beta_grid: &[f64],
    weight_steps: usize,
    opts: &SearchOptions,
) -> Result<PerformanceRegion> {
    if configs.is_empty() {
        return Err(Error::InvalidConfig("scheme set is empty".into()));
    }
    check_beta_grid(beta_grid)?;
    let weights = weight_grid(ec.n_ue(), weight_steps)?;
    let jobs: Vec<(usize, usize, usize)> = (0..weights.len())
        .flat_map(|w| (0..beta_grid.len()).flat_map(move |b| (0..configs.len()).map(move |c| (w, b, c))))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(w, b, c)| {
            let cfg = configs[c].with_beta(beta_grid[b]);
            let p = scheme_best_weighted(ec, sigma2, &cfg, p_max, opts, &weights[w])?;
            Ok(RateBackhaulPoint { rates: p.rates, beta: beta_grid[b], config: cfg })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut hull: Vec<RateBackhaulPoint> = Vec::new();
    let n_cfg = configs.len();
    for (wi, w) in weights.iter().enumerate() {
        let per_beta: Vec<&RateBackhaulPoint> = (0..beta_grid.len())
            .map(|b| {
                let base = (wi * beta_grid.len() + b) * n_cfg;
                let mut best = &points[base];
                for p in &points[base + 1..base + n_cfg] {
                    if p.rates.weighted(w) > best.rates.weighted(w) + 1e-12 {
                        best = p;
                    }
                }
                best
            })
            .collect();
        let xy: Vec<(f64, f64)> = per_beta.iter().map(|p| (p.beta, p.rates.weighted(w))).collect();
        for i in upper_envelope(&xy) {
            if !hull.contains(per_beta[i]) {
                hull.push(per_beta[i].clone());
            }
        }
    }
    Ok(PerformanceRegion { weights, beta_grid: beta_grid.to_vec(), points, hull })
}

/// Schemes competing in the location map, in tie-breaking order.
pub const MAP_SCHEMES: [Scheme; 4] = [Scheme::DasC, Scheme::Dis, Scheme::Cif, Scheme::DasD];

/// Relative sum-rate benefit over no cooperation that marks a map cell.
pub const ADAPTATION_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub d1: f64,
    pub d2: f64,
    /// Sum rate per scheme in [`MAP_SCHEMES`] order.
    pub sum_rates: Vec<(Scheme, f64)>,
    pub no_coop: f64,
    pub winner: Scheme,
    /// Adapting between DAS-C and DIS beats no cooperation by more than the threshold.
    pub adaptation_gain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeMap {
    pub beta: f64,
    pub quantizer: Quantizer,
    pub spc: bool,
    /// Row-major in `d1`, then `d2`.
    pub cells: Vec<MapCell>,
}

impl SchemeMap {
    pub fn cell(&self, d1: f64, d2: f64) -> Option<&MapCell> {
        self.cells.iter().find(|c| (c.d1 - d1).abs() < 1e-9 && (c.d2 - d2).abs() < 1e-9)
    }
}

/// Index of the first maximum; later entries must win by more than `tol`.
pub fn argmax_first(values: &[f64], tol: f64) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] + tol {
            best = i;
        }
    }
    best
}

/// Best scheme over a grid of UE locations at fixed backhaul.
#[allow(clippy::too_many_arguments)]
pub fn best_scheme_map(
    template: &Scenario2x2,
    csi: &CsiConfig,
    n_bs_antennas: usize,
    d1_grid: &[f64],
    d2_grid: &[f64],
    beta: f64,
    quantizer: Quantizer,
    spc: bool,
    opts: &SearchOptions,
) -> Result<SchemeMap> {
    if d1_grid.is_empty() || d2_grid.is_empty() {
        return Err(Error::InvalidConfig("location grid is empty".into()));
    }
    let p_max = [1.0, 1.0];
    let sites: Vec<(f64, f64)> = d1_grid.iter().flat_map(|&a| d2_grid.iter().map(move |&b| (a, b))).collect();
    let cells = sites
        .par_iter()
        .map(|&(d1, d2)| {
            let s = Scenario2x2 { d1, d2, ..*template };
            s.validate()?;
            let ec = scenario_channel(&s, csi, n_bs_antennas)?;
            let sum_rates = MAP_SCHEMES
                .iter()
                .map(|&scheme| {
                    let cfg = SchemeConfig::new(scheme, quantizer, spc, beta);
                    Ok((scheme, scheme_best_weighted(&ec, s.sigma2, &cfg, &p_max, opts, &[1.0, 1.0])?.rates.sum()))
                })
                .collect::<Result<Vec<_>>>()?;
            let values: Vec<f64> = sum_rates.iter().map(|x| x.1).collect();
            let winner = MAP_SCHEMES[argmax_first(&values, 1e-9)];
            let no_coop = no_coop_best(&ec, &p_max, s.sigma2)?.sum_rate();
            let adaptive = values[0].max(values[1]);
            Ok(MapCell { d1, d2, sum_rates, no_coop, winner, adaptation_gain: adaptive > (1.0 + ADAPTATION_THRESHOLD) * no_coop })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SchemeMap { beta, quantizer, spc, cells })
}

/// Non-cooperative and fully cooperative sum rates at one location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompGainPoint {
    pub d: f64,
    /// `None` for perfect CSI.
    pub n_pilots: Option<u32>,
    pub no_coop: f64,
    pub mac: f64,
}

impl CompGainPoint {
    /// Relative gain of full cooperation, `mac/no_coop − 1`.
    pub fn gain(&self) -> f64 {
        self.mac / self.no_coop - 1.0
    }
}

/// Cooperation gain with both UEs at distance `d` from their BS, for every CSI level.
pub fn comp_gain_sweep(template: &Scenario2x2, csis: &[CsiConfig], n_bs_antennas: usize, d_grid: &[f64]) -> Result<Vec<CompGainPoint>> {
    let p_max = [1.0, 1.0];
    let jobs: Vec<(CsiConfig, f64)> = csis.iter().flat_map(|c| d_grid.iter().map(move |&d| (*c, d))).collect();
    jobs.par_iter()
        .map(|(csi, d)| {
            let s = Scenario2x2 { d1: *d, d2: *d, ..*template };
            s.validate()?;
            let ec = scenario_channel(&s, csi, n_bs_antennas)?;
            Ok(CompGainPoint {
                d: *d,
                n_pilots: if csi.perfect { None } else { Some(csi.n_pilots) },
                no_coop: no_coop_best(&ec, &p_max, s.sigma2)?.sum_rate(),
                mac: mac_sum_rate(&ec, &PowerAllocation::full_power(&p_max), s.sigma2)?,
            })
        })
        .collect()
}

/// Largest relative gain (in %) of each coding variant over its plain
/// counterpart (rate-distortion quantizer, no superposition coding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingGainRow {
    pub d: f64,
    pub scheme: Scheme,
    pub source_coding: f64,
    pub superposition: f64,
    pub both: f64,
}

/// Max over β of `100·(variant/base − 1)`; curves must share a grid.
pub fn max_relative_gain(variant: &Curve, base: &Curve) -> f64 {
    variant
        .points
        .iter()
        .zip(&base.points)
        .map(|(v, b)| 100.0 * (v.sum_rate() / b.sum_rate() - 1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Coding-gain table for bit forwarding and centralized decoding along the
/// symmetric sweep `d1 = d2 = d`.
pub fn coding_gain_analysis(
    template: &Scenario2x2,
    csi: &CsiConfig,
    n_bs_antennas: usize,
    d_grid: &[f64],
    beta_grid: &[f64],
    opts: &SearchOptions,
) -> Result<Vec<CodingGainRow>> {
    check_beta_grid(beta_grid)?;
    let p_max = [1.0, 1.0];
    let mut rows = Vec::new();
    for &d in d_grid {
        let s = Scenario2x2 { d1: d, d2: d, ..*template };
        s.validate()?;
        let ec = scenario_channel(&s, csi, n_bs_antennas)?;
        for scheme in [Scheme::Dis, Scheme::DasC] {
            let curve = |q: Quantizer, spc: bool| sum_rate_curve(&ec, s.sigma2, &p_max, &SchemeConfig::new(scheme, q, spc, 0.0), beta_grid, opts);
            let base = curve(Quantizer::RateDistortion, false)?;
            rows.push(CodingGainRow {
                d,
                scheme,
                source_coding: max_relative_gain(&curve(Quantizer::SourceCoded, false)?, &base),
                superposition: max_relative_gain(&curve(Quantizer::RateDistortion, true)?, &base),
                both: max_relative_gain(&curve(Quantizer::SourceCoded, true)?, &base),
            });
        }
    }
    Ok(rows)
}
