//! Reference regions: full cooperation (joint decoding of all antennas) and
//! no cooperation (each BS decodes its assigned UEs alone), plus MRC.

use serde::{Deserialize, Serialize};

use crate::allocation::{lex_less, power_grid, Assignment, MessageId, PowerAllocation, SchemeKind};
use crate::channel::EffectiveChannel;
use crate::error::{Error, Result};
use crate::linalg::log2_det_rate_named;
use crate::model::{restrict, Rx};

/// Sum rates closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Per-UE rates in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTuple {
    pub rates: Vec<f64>,
}

impl RateTuple {
    pub fn new(rates: Vec<f64>) -> Self {
        Self { rates }
    }

    pub fn zeros(k: usize) -> Self {
        Self { rates: vec![0.0; k] }
    }

    pub fn sum(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn weighted(&self, w: &[f64]) -> f64 {
        self.rates.iter().zip(w).map(|(r, w)| r * w).sum()
    }

    /// Undoes a UE relabeling: entry `order[k]` of the result is entry `k` of `self`.
    pub fn unpermute(&self, order: &[usize]) -> Self {
        let mut r = vec![0.0; self.rates.len()];
        for (k, &o) in order.iter().enumerate() {
            r[o] = self.rates[k];
        }
        Self { rates: r }
    }
}

/// A rate tuple together with the configuration that achieves it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub rates: RateTuple,
    pub assignment: Option<Assignment>,
    pub allocation: PowerAllocation,
    /// Fraction of the backhaul spent in the first direction, where applicable.
    pub backhaul_split: Option<f64>,
}

impl OperatingPoint {
    pub fn sum_rate(&self) -> f64 {
        self.rates.sum()
    }
}

/// Keeps the best candidate by objective; ties go to the lexicographically
/// smallest power vector, then to the earliest candidate.
#[derive(Debug, Default)]
pub(crate) struct Best {
    pub value: f64,
    pub point: Option<OperatingPoint>,
    key: Vec<f64>,
}

impl Best {
    pub fn new() -> Self {
        Self { value: f64::NEG_INFINITY, point: None, key: Vec::new() }
    }

    pub fn offer(&mut self, value: f64, point: impl FnOnce() -> OperatingPoint, key: Vec<f64>) {
        let take = match self.point {
            None => true,
            Some(_) => {
                value > self.value + TIE_TOLERANCE
                    || ((value - self.value).abs() <= TIE_TOLERANCE && lex_less(&key, &self.key))
            }
        };
        if take {
            self.value = value;
            self.point = Some(point());
            self.key = key;
        }
    }

    pub fn into_point(self) -> Result<OperatingPoint> {
        self.point.ok_or_else(|| Error::InvalidConfig("empty search space".into()))
    }
}

/// Vertex of a polymatroid maximizing `Σ w_k r_k`: users are peeled off in
/// decreasing weight, the heaviest one getting its singleton bound.
pub fn polymatroid_vertex(
    n: usize,
    mut f: impl FnMut(&[usize]) -> Result<f64>,
    weights: &[f64],
) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut r = vec![0.0; n];
    let mut prefix = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &k in &order {
        prefix.push(k);
        let v = f(&prefix)?;
        r[k] = (v - prev).max(0.0);
        prev = v.max(prev);
    }
    Ok(r)
}

fn check_dims(ec: &EffectiveChannel, alloc: &PowerAllocation) -> Result<()> {
    if alloc.n_ue() != ec.n_ue() {
        return Err(Error::DimensionMismatch(format!(
            "allocation covers {} UEs, channel has {}",
            alloc.n_ue(),
            ec.n_ue()
        )));
    }
    Ok(())
}

/// Joint-decoding bound for the UE subset `set` under full cooperation.
fn mac_subset(rx: &Rx, p: &[f64], set: &[usize]) -> Result<f64> {
    log2_det_rate_named(&rx.nn_all(p), &rx.gram_all(&restrict(p, set)), "noise at the joint decoder")
}

/// Sum rate with unlimited cooperation, `log₂|I + (σ²I + Φvv)⁻¹ H P Hᴴ|`.
/// Superimposed messages of a UE are merged.
pub fn mac_sum_rate(ec: &EffectiveChannel, alloc: &PowerAllocation, sigma2: f64) -> Result<f64> {
    check_dims(ec, alloc)?;
    let rx = Rx::new(ec, sigma2);
    let p = alloc.totals();
    mac_subset(&rx, &p, &(0..p.len()).collect::<Vec<_>>())
}

/// All `2^K − 1` subset bounds of the full-cooperation region.
pub fn mac_constraints(ec: &EffectiveChannel, alloc: &PowerAllocation, sigma2: f64) -> Result<Vec<(Vec<MessageId>, f64)>> {
    check_dims(ec, alloc)?;
    let rx = Rx::new(ec, sigma2);
    let p = alloc.totals();
    let k = p.len();
    let msgs = alloc.messages();
    (1..(1usize << k))
        .map(|mask| {
            let set: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).collect();
            let ids = msgs.iter().filter(|id| set.contains(&id.ue)).copied().collect();
            Ok((ids, mac_subset(&rx, &p, &set)?))
        })
        .collect()
}

/// Weighted-sum-optimal vertex of the full-cooperation region.
pub fn mac_rates(ec: &EffectiveChannel, alloc: &PowerAllocation, sigma2: f64, weights: &[f64]) -> Result<RateTuple> {
    check_dims(ec, alloc)?;
    let rx = Rx::new(ec, sigma2);
    let p = alloc.totals();
    Ok(RateTuple::new(polymatroid_vertex(p.len(), |s| mac_subset(&rx, &p, s), weights)?))
}

pub(crate) fn no_coop_rates_rx(rx: &Rx, p: &[f64], assign: &Assignment, weights: &[f64]) -> Result<Vec<f64>> {
    let k = p.len();
    let mut r = vec![0.0; k];
    for m in 0..rx.n_bs {
        let decoded: Vec<usize> = (0..k).filter(|&j| assign.a[j] == m).collect();
        if decoded.is_empty() {
            continue;
        }
        let others: Vec<usize> = (0..k).filter(|&j| assign.a[j] != m).collect();
        let phi_ii = rx.nn_bs(m, p) + rx.gram_bs(m, &restrict(p, &others));
        let w: Vec<f64> = decoded.iter().map(|&j| weights[j]).collect();
        let local = polymatroid_vertex(
            decoded.len(),
            |s| {
                let set: Vec<usize> = s.iter().map(|&i| decoded[i]).collect();
                log2_det_rate_named(&phi_ii, &rx.gram_bs(m, &restrict(p, &set)), "interference-plus-noise covariance")
            },
            &w,
        )?;
        for (i, &j) in decoded.iter().enumerate() {
            r[j] = local[i];
        }
    }
    Ok(r)
}

/// Per-UE rates without cooperation for a fixed assignment: each BS jointly
/// decodes its own UEs and treats the rest as colored noise.
pub fn no_coop_rates(
    ec: &EffectiveChannel,
    alloc: &PowerAllocation,
    assign: &Assignment,
    sigma2: f64,
    weights: &[f64],
) -> Result<RateTuple> {
    check_dims(ec, alloc)?;
    assign.validate(ec.n_bs(), ec.n_ue())?;
    let rx = Rx::new(ec, sigma2);
    Ok(RateTuple::new(no_coop_rates_rx(&rx, &alloc.totals(), assign, weights)?))
}

pub fn no_coop_sum_rate(ec: &EffectiveChannel, alloc: &PowerAllocation, assign: &Assignment, sigma2: f64) -> Result<f64> {
    Ok(no_coop_rates(ec, alloc, assign, sigma2, &vec![1.0; ec.n_ue()])?.sum())
}

/// Best weighted rate without cooperation over all assignments and on/off powers.
pub fn no_coop_best_weighted(ec: &EffectiveChannel, p_max: &[f64], sigma2: f64, weights: &[f64]) -> Result<OperatingPoint> {
    if p_max.len() != ec.n_ue() || weights.len() != ec.n_ue() {
        return Err(Error::DimensionMismatch("p_max and weights need one entry per UE".into()));
    }
    let rx = Rx::new(ec, sigma2);
    let grid = power_grid(2, SchemeKind::SingleMessage, p_max)?;
    let mut best = Best::new();
    for assign in Assignment::all(ec.n_bs(), ec.n_ue()) {
        for alloc in &grid {
            let r = no_coop_rates_rx(&rx, &alloc.totals(), &assign, weights)?;
            let t = RateTuple::new(r);
            let v = t.weighted(weights);
            best.offer(
                v,
                || OperatingPoint {
                    rates: t.clone(),
                    assignment: Some(assign.clone()),
                    allocation: alloc.clone(),
                    backhaul_split: None,
                },
                alloc.vector(),
            );
        }
    }
    best.into_point()
}

/// Best sum rate without cooperation.
pub fn no_coop_best(ec: &EffectiveChannel, p_max: &[f64], sigma2: f64) -> Result<OperatingPoint> {
    no_coop_best_weighted(ec, p_max, sigma2, &vec![1.0; ec.n_ue()])
}

fn identity_assignment(ec: &EffectiveChannel) -> Result<Assignment> {
    if ec.n_ue() != ec.n_bs() {
        return Err(Error::Unsupported(format!(
            "one UE per base station required, got {} UEs and {} base stations",
            ec.n_ue(),
            ec.n_bs()
        )));
    }
    Ok(Assignment::new((0..ec.n_ue()).collect()))
}

/// Interference-rejection combining with UE `k` served by BS `k`.
pub fn irc_sum_rate(ec: &EffectiveChannel, alloc: &PowerAllocation, sigma2: f64) -> Result<f64> {
    let a = identity_assignment(ec)?;
    no_coop_sum_rate(ec, alloc, &a, sigma2)
}

/// Maximum-ratio combining with UE `k` served by BS `k`: the filter is the
/// serving-BS channel, all other UEs enter the SINR denominator as colored noise.
pub fn mrc_sum_rate(ec: &EffectiveChannel, alloc: &PowerAllocation, sigma2: f64) -> Result<f64> {
    check_dims(ec, alloc)?;
    identity_assignment(ec)?;
    let rx = Rx::new(ec, sigma2);
    let p = alloc.totals();
    let mut total = 0.0;
    for k in 0..p.len() {
        let h = rx.h_bs[k].column(k).into_owned();
        let g2 = h.norm_squared();
        if p[k] == 0.0 || g2 == 0.0 {
            continue;
        }
        let mut interferers = p.clone();
        interferers[k] = 0.0;
        let phi = rx.nn_bs(k, &p) + rx.gram_bs(k, &interferers);
        let denom = (h.adjoint() * &phi * &h)[(0, 0)].re;
        total += (1.0 + p[k] * g2 * g2 / denom).log2();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_scenario_channel, effective_channel, ChannelMatrix, Scenario2x2};
    use crate::linalg::{c, CMatrix};
    use approx::assert_relative_eq;

    fn scalar_ec(h: f64) -> EffectiveChannel {
        let ch = ChannelMatrix::from_raw(CMatrix::from_element(1, 1, c(h, 0.0)), 1).unwrap();
        effective_channel(&ch, 0.0).unwrap()
    }

    fn edge(sigma_e2: f64) -> EffectiveChannel {
        let ch = build_scenario_channel(&Scenario2x2::default(), 2).unwrap();
        effective_channel(&ch, sigma_e2).unwrap()
    }

    #[test]
    fn scalar_mac_is_one_bit() {
        let ec = scalar_ec(1.0);
        assert_relative_eq!(mac_sum_rate(&ec, &PowerAllocation::full_power(&[1.0]), 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(mac_sum_rate(&ec, &PowerAllocation::single(&[0.0], &[1.0]), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn two_user_mac_has_three_constraints() {
        let ec = edge(0.0);
        let cons = mac_constraints(&ec, &PowerAllocation::full_power(&[1.0, 1.0]), 0.1).unwrap();
        assert_eq!(cons.len(), 3);
        // symmetric channel: both singleton bounds agree
        assert_relative_eq!(cons[0].1, cons[1].1, epsilon = 1e-12);
        assert!(cons[0].1 <= cons[2].1 + 1e-12);
        assert!(cons[2].1 <= cons[0].1 + cons[1].1 + 1e-12);
    }

    #[test]
    fn zero_cross_gain_gives_isolated_rates() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.8, 0.0)]);
        let ec = effective_channel(&ChannelMatrix::from_raw(h, 1).unwrap(), 0.0).unwrap();
        let best = no_coop_best(&ec, &[1.0, 1.0], 0.1).unwrap();
        let iso = (1.0f64 + 10.0).log2() + (1.0f64 + 6.4).log2();
        assert_relative_eq!(best.sum_rate(), iso, epsilon = 1e-12);
    }

    #[test]
    fn one_bs_decoding_both_equals_its_own_mac() {
        let ec = edge(0.05);
        let alloc = PowerAllocation::full_power(&[1.0, 1.0]);
        let nc = no_coop_sum_rate(&ec, &alloc, &Assignment::new(vec![0, 0]), 0.1).unwrap();
        let bs1 = EffectiveChannel {
            h_eff: ec.h_eff.rows(0, 2).into_owned(),
            e_bar: ec.e_bar.rows(0, 2).into_owned(),
            avg_gains: ec.avg_gains.rows(0, 2).into_owned(),
            n_bs_antennas: 2,
        };
        assert_relative_eq!(nc, mac_sum_rate(&bs1, &alloc, 0.1).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn mrc_equals_irc_without_interference() {
        let ec = scalar_ec(0.7);
        let alloc = PowerAllocation::full_power(&[1.0]);
        assert_relative_eq!(
            mrc_sum_rate(&ec, &alloc, 0.2).unwrap(),
            irc_sum_rate(&ec, &alloc, 0.2).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn mrc_below_irc_with_interference() {
        let ec = edge(0.05);
        let alloc = PowerAllocation::full_power(&[1.0, 1.0]);
        assert!(mrc_sum_rate(&ec, &alloc, 0.1).unwrap() < irc_sum_rate(&ec, &alloc, 0.1).unwrap());
    }

    #[test]
    fn polymatroid_vertex_orders_by_weight() {
        let f = |s: &[usize]| Ok(match s.len() { 1 => 1.0, _ => 1.5 });
        assert_eq!(polymatroid_vertex(2, f, &[1.0, 2.0]).unwrap(), vec![0.5, 1.0]);
        assert_eq!(polymatroid_vertex(2, f, &[2.0, 1.0]).unwrap(), vec![1.0, 0.5]);
    }

    #[test]
    fn rate_tuple_unpermute() {
        let r = RateTuple::new(vec![1.0, 2.0]).unpermute(&[1, 0]);
        assert_eq!(r.rates, vec![2.0, 1.0]);
    }
}
