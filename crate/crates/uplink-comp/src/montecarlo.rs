//! Rayleigh-fading comparison of cooperation strategies for three cells with
//! one UE each, averaged over independent channel draws.
//!
//! Every strategy is evaluated per realization as a sum rate on the backhaul
//! grid; averages and 95% confidence half-widths are taken over trials.
//! Cooperation is modeled pairwise with the two-cell building blocks:
//!
//! * bit forwarding: UEs are decoded in some order, each at its assigned BS,
//!   and decoded messages may be forwarded to BSs that decode later;
//! * centralized decoding: one BS decodes the UEs of a cluster jointly from
//!   its own antennas and compressed descriptions of its helpers' antennas,
//!   the backhaul split equally among helpers.
//!
//! Hybrid operation takes, per realization, the time-sharing envelope of all
//! configurations of both families.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::PowerAllocation;
use crate::baselines::{irc_sum_rate, mac_sum_rate, mrc_sum_rate, no_coop_best};
use crate::channel::{effective_channel, estimation_error_variance, path_gains, sample_rayleigh_channel, CsiConfig, EffectiveChannel};
use crate::error::{Error, Result};
use crate::linalg::{block, log2_det_rate_named, CMatrix};
use crate::model::{only, restrict, Observation, QuantizedView, Rx};
use crate::perf::{check_beta_grid, upper_envelope};
use crate::schemes::{dasn_rates, fdm_enhanced_rates, quantize_view, Quantizer};
use nalgebra::DMatrix;

/// Strategies compared on every realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Mrc,
    Irc,
    IrcAssignment,
    Mac,
    DisOnly,
    DascOnly,
    Hybrid,
    DasN,
    Fdm,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::Mrc,
        Strategy::Irc,
        Strategy::IrcAssignment,
        Strategy::Mac,
        Strategy::DisOnly,
        Strategy::DascOnly,
        Strategy::Hybrid,
        Strategy::DasN,
        Strategy::Fdm,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Mrc => "mrc",
            Strategy::Irc => "irc",
            Strategy::IrcAssignment => "irc_assignment",
            Strategy::Mac => "mac",
            Strategy::DisOnly => "dis_only",
            Strategy::DascOnly => "dasc_only",
            Strategy::Hybrid => "hybrid",
            Strategy::DasN => "dasn",
            Strategy::Fdm => "fdm",
        }
    }

    /// Whether the strategy uses backhaul and hence a quantizer.
    pub fn uses_backhaul(&self) -> bool {
        !matches!(self, Strategy::Mrc | Strategy::Irc | Strategy::IrcAssignment | Strategy::Mac)
    }
}

/// Experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    /// Common normalized UE distance of all cells.
    pub d: f64,
    pub theta: f64,
    pub sigma2: f64,
    pub csi: CsiConfig,
    pub n_bs_antennas: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub beta_grid: Vec<f64>,
    pub quantizers: Vec<Quantizer>,
}

impl MonteCarloConfig {
    /// Three cells, two antennas per BS, 500 trials on `β = 0, 1, …, 30`.
    pub fn new(d: f64, sigma2: f64, csi: CsiConfig) -> Self {
        Self {
            d,
            theta: 3.5,
            sigma2,
            csi,
            n_bs_antennas: 2,
            n_trials: 500,
            base_seed: 0,
            beta_grid: (0..=30).map(f64::from).collect(),
            quantizers: Quantizer::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.d) {
            return Err(Error::InvalidConfig(format!("d must lie in [0, 1], got {}", self.d)));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if self.quantizers.is_empty() {
            return Err(Error::InvalidConfig("at least one quantizer is required".into()));
        }
        check_beta_grid(&self.beta_grid)
    }
}

/// Per-strategy sum rates of one realization; backhaul-free strategies repeat
/// their value across the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_seed: u64,
    pub curves: Vec<TrialCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCurve {
    pub strategy: Strategy,
    pub quantizer: Option<Quantizer>,
    pub sum_rates: Vec<f64>,
}

/// Trial average of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedCurve {
    pub strategy: Strategy,
    pub quantizer: Option<Quantizer>,
    pub mean: Vec<f64>,
    /// Half-width of the normal 95% confidence interval of the mean.
    pub half_width: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub config: MonteCarloConfig,
    pub curves: Vec<AveragedCurve>,
}

impl MonteCarloResult {
    pub fn curve(&self, strategy: Strategy, quantizer: Option<Quantizer>) -> Option<&AveragedCurve> {
        let q = if strategy.uses_backhaul() { quantizer } else { None };
        self.curves.iter().find(|c| c.strategy == strategy && c.quantizer == q)
    }
}

/// Average gains with every UE at distance `d` from its own BS.
pub fn symmetric_avg_gains(n_cells: usize, d: f64, theta: f64, n_bs_antennas: usize) -> Result<DMatrix<f64>> {
    if n_cells == 0 || n_bs_antennas == 0 {
        return Err(Error::InvalidConfig("need at least one cell and one antenna".into()));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidConfig(format!("d must lie in [0, 1], got {d}")));
    }
    let (own, cross) = path_gains(d, theta);
    Ok(DMatrix::from_fn(n_cells * n_bs_antennas, n_cells, |row, k| if row / n_bs_antennas == k { own } else { cross }))
}

fn draw(gains: &DMatrix<f64>, seed: u64, nb: usize, sigma_e2: f64) -> Result<EffectiveChannel> {
    effective_channel(&sample_rayleigh_channel(gains, seed, nb)?, sigma_e2)
}

fn ld(noise: &CMatrix, signal: &CMatrix) -> Result<f64> {
    log2_det_rate_named(noise, signal, "interference-plus-noise covariance")
}

fn permutations3() -> Vec<[usize; 3]> {
    vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
}

/// `(backhaul, sum rate)` of every bit-forwarding configuration. With
/// `source_coded` a forwarded message costs only what the receiving BS
/// cannot infer from its own antennas.
fn dis_points(rx: &Rx, p: &[f64], source_coded: bool) -> Result<Vec<(f64, f64)>> {
    let k_ue = p.len();
    let mut out = Vec::new();
    for order in permutations3() {
        for assign in permutations3() {
            // edges (i, j): UE order[i] is forwarded to the BS of UE order[j]
            let edges: Vec<(usize, usize)> = (0..k_ue).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
            for mask in 0..(1u32 << edges.len()) {
                let mut rates = vec![0.0; k_ue];
                for j in 0..k_ue {
                    let k = order[j];
                    let m = assign[k];
                    let cancelled: Vec<usize> =
                        edges.iter().enumerate().filter(|(e, &(_, jj))| jj == j && mask & (1 << e) != 0).map(|(_, &(i, _))| order[i]).collect();
                    let interferers: Vec<usize> = (0..k_ue).filter(|&u| u != k && !cancelled.contains(&u)).collect();
                    let noise = rx.nn_bs(m, p) + rx.gram_bs(m, &restrict(p, &interferers));
                    rates[k] = ld(&noise, &rx.gram_bs(m, &only(p, k)))?;
                }
                let mut cost = 0.0;
                for (e, &(i, j)) in edges.iter().enumerate() {
                    if mask & (1 << e) == 0 {
                        continue;
                    }
                    let k = order[i];
                    let m = assign[order[j]];
                    let side = if source_coded {
                        let others: Vec<usize> = (0..k_ue).filter(|&u| u != k).collect();
                        ld(&(rx.nn_bs(m, p) + rx.gram_bs(m, &restrict(p, &others))), &rx.gram_bs(m, &only(p, k)))?
                    } else {
                        0.0
                    };
                    cost += (rates[k] - side).max(0.0);
                }
                out.push((cost, rates.iter().sum()));
            }
        }
    }
    Ok(out)
}

/// One centralized-decoding cluster: `central` decodes the UEs of
/// `central ∪ helpers` jointly; remaining UEs are decoded by their own BS.
struct Cluster {
    central: usize,
    helpers: Vec<usize>,
}

fn clusters(n_bs: usize) -> Vec<Cluster> {
    let mut out = Vec::new();
    for central in 0..n_bs {
        let others: Vec<usize> = (0..n_bs).filter(|&m| m != central).collect();
        for mask in 1..(1u32 << others.len()) {
            let helpers = others.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &m)| m).collect();
            out.push(Cluster { central, helpers });
        }
    }
    out
}

fn cluster_sum_rate(rx: &Rx, p: &[f64], cl: &Cluster, views: &[&QuantizedView]) -> Result<f64> {
    let members: Vec<usize> = std::iter::once(cl.central).chain(cl.helpers.iter().copied()).collect();
    let outside: Vec<usize> = (0..p.len()).filter(|u| !members.contains(u)).collect();
    let obs = Observation::new(rx, &[cl.central], views);
    let noise = obs.noise(&(rx.nn_all(p) + rx.gram_all(&restrict(p, &outside))));
    let mut total = ld(&noise, &obs.project(&rx.gram_all(&restrict(p, &members))))?;
    for &o in &outside {
        let others: Vec<usize> = (0..p.len()).filter(|&u| u != o).collect();
        total += ld(&(rx.nn_bs(o, p) + rx.gram_bs(o, &restrict(p, &others))), &rx.gram_bs(o, &only(p, o)))?;
    }
    Ok(total)
}

/// Sum rate of a cluster when each helper has `budget` bits; helpers are
/// quantized one after another, each tuned given the earlier ones.
fn cluster_rate(rx: &Rx, p: &[f64], cl: &Cluster, budget: f64, quantizer: Quantizer) -> Result<f64> {
    let nb = rx.nb;
    let phi = rx.gram_all(p) + rx.nn_all(p);
    let own = block(&phi, cl.central * nb, nb);
    let mut views: Vec<QuantizedView> = Vec::new();
    for &h in &cl.helpers {
        let local = block(&phi, h * nb, nb);
        let cross = phi.view((h * nb, cl.central * nb), (nb, nb)).into_owned();
        let fixed: Vec<QuantizedView> = views.clone();
        let view = quantize_view(quantizer, h, nb, &local, Some((&cross, &own)), budget, &mut |v| {
            let refs: Vec<&QuantizedView> = fixed.iter().chain(std::iter::once(v)).collect();
            cluster_sum_rate(rx, p, cl, &refs)
        })?;
        views.extend(view);
    }
    let refs: Vec<&QuantizedView> = views.iter().collect();
    cluster_sum_rate(rx, p, cl, &refs)
}

/// Best rate reachable with at most `beta` backhaul by time-sharing among
/// `(cost, rate)` points. Needs a point of zero cost.
fn envelope_values(points: &[(f64, f64)], grid: &[f64]) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // keep, per cost, only the best rate, and only points improving on cheaper ones
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for pt in pts {
        if let Some(last) = kept.last() {
            if pt.1 <= last.1 {
                continue;
            }
            if pt.0 == last.0 {
                kept.pop();
            }
        }
        kept.push(pt);
    }
    let hull: Vec<(f64, f64)> = upper_envelope(&kept).into_iter().map(|i| kept[i]).collect();
    grid.iter()
        .map(|&b| {
            let i = hull.partition_point(|pt| pt.0 <= b);
            if i == 0 {
                f64::NEG_INFINITY
            } else if i == hull.len() {
                hull[i - 1].1
            } else {
                let (a, c) = (hull[i - 1], hull[i]);
                a.1 + (c.1 - a.1) * (b - a.0) / (c.0 - a.0)
            }
        })
        .collect()
}

/// Evaluates every strategy on one realization.
pub fn run_trial(cfg: &MonteCarloConfig, gains: &DMatrix<f64>, trial: usize) -> Result<TrialResult> {
    let seed = cfg.base_seed.wrapping_add(trial as u64);
    let sigma_e2 = estimation_error_variance(&cfg.csi)?;
    let ec = draw(gains, seed, cfg.n_bs_antennas, sigma_e2)?;
    let k_ue = ec.n_ue();
    let p_max = vec![1.0; k_ue];
    let alloc = PowerAllocation::full_power(&p_max);
    let rx = Rx::new(&ec, cfg.sigma2);
    let p = alloc.totals();
    let n = cfg.beta_grid.len();
    let flat = |v: f64| vec![v; n];

    let base = no_coop_best(&ec, &p_max, cfg.sigma2)?.sum_rate();
    let mut curves = vec![
        TrialCurve { strategy: Strategy::Mrc, quantizer: None, sum_rates: flat(mrc_sum_rate(&ec, &alloc, cfg.sigma2)?) },
        TrialCurve { strategy: Strategy::Irc, quantizer: None, sum_rates: flat(irc_sum_rate(&ec, &alloc, cfg.sigma2)?) },
        TrialCurve { strategy: Strategy::IrcAssignment, quantizer: None, sum_rates: flat(base) },
        TrialCurve { strategy: Strategy::Mac, quantizer: None, sum_rates: flat(mac_sum_rate(&ec, &alloc, cfg.sigma2)?) },
    ];

    let plain_dis = dis_points(&rx, &p, false)?;
    let coded_dis = if cfg.quantizers.contains(&Quantizer::SourceCoded) { dis_points(&rx, &p, true)? } else { Vec::new() };
    let cls = clusters(rx.n_bs);
    for &q in &cfg.quantizers {
        let mut dis = if q == Quantizer::SourceCoded { coded_dis.clone() } else { plain_dis.clone() };
        dis.push((0.0, base));
        let mut dasc = vec![(0.0, base)];
        let mut dasn = Vec::with_capacity(n + 1);
        let mut fdm = Vec::with_capacity(n + 1);
        dasn.push((0.0, 0.0));
        fdm.push((0.0, 0.0));
        for &beta in &cfg.beta_grid {
            let mut best = f64::NEG_INFINITY;
            for cl in &cls {
                best = best.max(cluster_rate(&rx, &p, cl, beta / cl.helpers.len() as f64, q)?);
            }
            dasc.push((beta, best));
            dasn.push((beta, dasn_rates(&ec, cfg.sigma2, beta, q, &alloc)?.sum()));
            fdm.push((beta, fdm_enhanced_rates(&ec, cfg.sigma2, &alloc, beta, q)?.sum()));
        }
        let hybrid: Vec<(f64, f64)> = dis.iter().chain(&dasc).copied().collect();
        for (strategy, pts) in [
            (Strategy::DisOnly, &dis),
            (Strategy::DascOnly, &dasc),
            (Strategy::Hybrid, &hybrid),
            (Strategy::DasN, &dasn),
            (Strategy::Fdm, &fdm),
        ] {
            curves.push(TrialCurve { strategy, quantizer: Some(q), sum_rates: envelope_values(pts, &cfg.beta_grid) });
        }
    }
    Ok(TrialResult { trial_seed: seed, curves })
}

fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Averages over trials; the result depends only on the configuration, not
/// on the number of worker threads.
pub fn run_montecarlo(cfg: &MonteCarloConfig) -> Result<MonteCarloResult> {
    cfg.validate()?;
    let gains = symmetric_avg_gains(3, cfg.d, cfg.theta, cfg.n_bs_antennas)?;
    let trials: Vec<TrialResult> = (0..cfg.n_trials).into_par_iter().map(|t| run_trial(cfg, &gains, t)).collect::<Result<_>>()?;
    let template = &trials[0].curves;
    let curves = template
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let (mean, half_width) = (0..cfg.beta_grid.len())
                .map(|b| {
                    let v: Vec<f64> = trials.iter().map(|t| t.curves[ci].sum_rates[b]).collect();
                    mean_and_half_width(&v)
                })
                .unzip();
            AveragedCurve { strategy: c.strategy, quantizer: c.quantizer, mean, half_width }
        })
        .collect();
    Ok(MonteCarloResult { config: cfg.clone(), curves })
}

/// Trial-averaged MAC and no-cooperation sum rates for `n_cells` symmetric cells.
pub fn average_comp_gain(
    n_cells: usize,
    d: f64,
    theta: f64,
    sigma2: f64,
    csi: &CsiConfig,
    n_bs_antennas: usize,
    n_trials: usize,
    base_seed: u64,
) -> Result<(f64, f64)> {
    if n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
    }
    let gains = symmetric_avg_gains(n_cells, d, theta, n_bs_antennas)?;
    let sigma_e2 = estimation_error_variance(csi)?;
    let p_max = vec![1.0; n_cells];
    let pairs: Vec<(f64, f64)> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let ec = draw(&gains, base_seed.wrapping_add(t as u64), n_bs_antennas, sigma_e2)?;
            Ok((mac_sum_rate(&ec, &PowerAllocation::full_power(&p_max), sigma2)?, no_coop_best(&ec, &p_max, sigma2)?.sum_rate()))
        })
        .collect::<Result<_>>()?;
    let n = n_trials as f64;
    Ok((pairs.iter().map(|p| p.0).sum::<f64>() / n, pairs.iter().map(|p| p.1).sum::<f64>() / n))
}

/// The 50% level is not reached on the grid.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("half of the cooperation gain is never reached; best fraction {max_fraction:.3}")]
pub struct EfficiencyOutOfRange {
    pub max_fraction: f64,
}

/// Backhaul per bit of sum-rate gain where `curve` first reaches
/// `baseline + ½(mac − baseline)`, interpolating linearly between grid points.
pub fn backhaul_efficiency(
    beta_grid: &[f64],
    curve: &[f64],
    baseline: f64,
    mac: f64,
) -> std::result::Result<f64, EfficiencyOutOfRange> {
    let gain = mac - baseline;
    let max_fraction = curve.iter().map(|v| (v - baseline) / gain).fold(f64::NEG_INFINITY, f64::max);
    if beta_grid.len() != curve.len() || curve.is_empty() || !(gain > 0.0) {
        return Err(EfficiencyOutOfRange { max_fraction: if gain > 0.0 { max_fraction } else { 0.0 } });
    }
    let target = baseline + 0.5 * gain;
    let Some(i) = curve.iter().position(|&v| v >= target) else {
        return Err(EfficiencyOutOfRange { max_fraction });
    };
    let beta = if i == 0 {
        beta_grid[0]
    } else {
        let (b0, b1, v0, v1) = (beta_grid[i - 1], beta_grid[i], curve[i - 1], curve[i]);
        b0 + (target - v0) * (b1 - b0) / (v1 - v0)
    };
    Ok(beta / (target - baseline))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(d: f64, trials: usize) -> MonteCarloConfig {
        let mut cfg = MonteCarloConfig::new(d, 1.0 / 12.1, CsiConfig::pilots(2, 1.0, 1.0 / 12.1));
        cfg.n_trials = trials;
        cfg.beta_grid = vec![0.0, 5.0, 10.0];
        cfg
    }

    #[test]
    fn rerun_is_bit_identical() {
        let cfg = small(0.3, 1);
        assert_eq!(run_montecarlo(&cfg).unwrap(), run_montecarlo(&cfg).unwrap());
    }

    #[test]
    fn hybrid_dominates_both_families_and_curves_are_monotone() {
        let r = run_montecarlo(&small(0.5, 2)).unwrap();
        for q in Quantizer::ALL {
            let h = &r.curve(Strategy::Hybrid, Some(q)).unwrap().mean;
            for s in [Strategy::DisOnly, Strategy::DascOnly] {
                let c = &r.curve(s, Some(q)).unwrap().mean;
                for (a, b) in h.iter().zip(c) {
                    assert!(a + 1e-12 >= *b);
                }
            }
        }
        for c in &r.curves {
            for w in c.mean.windows(2) {
                assert!(w[1] + 1e-12 >= w[0], "{:?} decreases", c.strategy);
            }
        }
    }

    #[test]
    fn cooperation_starts_at_the_baseline_and_stays_below_mac() {
        let r = run_montecarlo(&small(0.5, 2)).unwrap();
        let base = r.curve(Strategy::IrcAssignment, None).unwrap().mean[0];
        let mac = r.curve(Strategy::Mac, None).unwrap().mean[0];
        // source-coded forwarding may be free when the receiver can decode the message itself
        for q in [Quantizer::Practical, Quantizer::RateDistortion] {
            let h = &r.curve(Strategy::Hybrid, Some(q)).unwrap().mean;
            assert!((h[0] - base).abs() < 1e-9);
        }
        for q in Quantizer::ALL {
            let h = &r.curve(Strategy::Hybrid, Some(q)).unwrap().mean;
            assert!(h[0] >= base - 1e-9);
            assert!(h.iter().all(|v| *v <= mac + 1e-9));
        }
    }

    #[test]
    fn envelope_interpolates_between_points() {
        let v = envelope_values(&[(0.0, 1.0), (2.0, 3.0), (1.0, 1.5), (4.0, 3.5)], &[0.0, 1.0, 3.0, 9.0]);
        assert_eq!(v, vec![1.0, 2.0, 3.25, 3.5]);
    }

    #[test]
    fn efficiency_of_linear_curve() {
        // rate 4 + β/2 towards MAC 8: half gain (2 bits) needs β = 4
        let grid = [0.0, 10.0];
        let e = backhaul_efficiency(&grid, &[4.0, 9.0], 4.0, 8.0).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_of_instant_curve_is_zero() {
        assert_eq!(backhaul_efficiency(&[0.0, 1.0], &[8.0, 8.0], 4.0, 8.0).unwrap(), 0.0);
    }

    #[test]
    fn efficiency_reports_out_of_range() {
        let e = backhaul_efficiency(&[0.0, 1.0], &[4.0, 5.0], 4.0, 8.0).unwrap_err();
        assert!((e.max_fraction - 0.25).abs() < 1e-12);
    }
}
