//! Scenario channels, Rayleigh sampling and the imperfect-CSI effective channel.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, diag, CMatrix};

/// Two-cell, two-UE geometry on a line between the base stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario2x2 {
    /// Normalized distance of UE 1 from its own base station.
    pub d1: f64,
    /// Normalized distance of UE 2 from its own base station.
    pub d2: f64,
    /// Pathloss exponent.
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi12: f64,
    /// Receiver noise power.
    pub sigma2: f64,
}

impl Default for Scenario2x2 {
    fn default() -> Self {
        Self { d1: 0.5, d2: 0.5, theta: 3.5, phi1: FRAC_PI_2, phi2: FRAC_PI_2, phi12: FRAC_PI_2, sigma2: 0.1 }
    }
}

impl Scenario2x2 {
    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("d1", self.d1), ("d2", self.d2)] {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {d}")));
            }
        }
        if !(self.theta > 0.0) {
            return Err(Error::InvalidConfig(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        for (name, p) in [("phi1", self.phi1), ("phi2", self.phi2), ("phi12", self.phi12)] {
            if !p.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// Pilot-based channel estimation quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiConfig {
    /// Pilots per channel coefficient. Ignored when `perfect` is set.
    pub n_pilots: u32,
    pub perfect: bool,
    pub pilot_power: f64,
    pub pilot_noise: f64,
}

impl CsiConfig {
    pub fn perfect() -> Self {
        Self { n_pilots: 0, perfect: true, pilot_power: 1.0, pilot_noise: 0.1 }
    }

    pub fn pilots(n_pilots: u32, pilot_power: f64, pilot_noise: f64) -> Self {
        Self { n_pilots, perfect: false, pilot_power, pilot_noise }
    }
}

/// Estimation error variance `σ²_pilots / (N_p · p_pilots)`, zero for perfect CSI.
pub fn estimation_error_variance(c: &CsiConfig) -> Result<f64> {
    if c.perfect {
        return Ok(0.0);
    }
    if c.n_pilots == 0 {
        return Err(Error::InvalidConfig("n_pilots must be at least 1 unless CSI is perfect".into()));
    }
    if !(c.pilot_power > 0.0) || !(c.pilot_noise >= 0.0) {
        return Err(Error::InvalidConfig("pilot_power must be positive and pilot_noise nonnegative".into()));
    }
    Ok(c.pilot_noise / (f64::from(c.n_pilots) * c.pilot_power))
}

/// Compound channel of all base-station antennas (rows, grouped per BS) to all UEs (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub h: CMatrix,
    /// Average power `E{|h_ij|²}` of every entry.
    pub avg_gains: DMatrix<f64>,
    pub n_bs_antennas: usize,
}

impl ChannelMatrix {
    /// Uses `|h_ij|²` as the average gain of each entry.
    pub fn from_raw(h: CMatrix, n_bs_antennas: usize) -> Result<Self> {
        if n_bs_antennas == 0 || h.nrows() % n_bs_antennas != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} rows cannot be split into blocks of {n_bs_antennas} antennas",
                h.nrows()
            )));
        }
        let avg_gains = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)].norm_sqr());
        Ok(Self { h, avg_gains, n_bs_antennas })
    }

    pub fn n_bs(&self) -> usize {
        self.h.nrows() / self.n_bs_antennas
    }

    pub fn n_ue(&self) -> usize {
        self.h.ncols()
    }
}

/// Own-cell and cross-cell path gains for a UE at normalized distance `d`; they sum to one.
pub fn path_gains(d: f64, theta: f64) -> (f64, f64) {
    if d <= 0.0 {
        return (1.0, 0.0);
    }
    if d >= 1.0 {
        return (0.0, 1.0);
    }
    let own = d.powf(-theta);
    let cross = (1.0 - d).powf(-theta);
    (own / (own + cross), cross / (own + cross))
}

/// The 4×2 two-cell channel with two antennas per base station.
pub fn build_scenario_channel(s: &Scenario2x2, n_bs_antennas: usize) -> Result<ChannelMatrix> {
    if n_bs_antennas != 2 {
        return Err(Error::Unsupported(format!(
            "scenario channels are defined for 2 antennas per base station, got {n_bs_antennas}"
        )));
    }
    s.validate()?;
    let (l11, l21) = path_gains(s.d1, s.theta);
    let (l22, l12) = path_gains(s.d2, s.theta);
    let e = |x: f64| c(x.cos(), x.sin());
    let (a1, a2, a12) = (s.phi1 / 2.0, s.phi2 / 2.0, s.phi12 / 2.0);
    let h = CMatrix::from_row_slice(
        4,
        2,
        &[
            c(l11.sqrt(), 0.0),
            e(-a1 - a12) * l12.sqrt(),
            c(l11.sqrt(), 0.0),
            e(a1 - a12) * l12.sqrt(),
            e(-a2 - a12) * l21.sqrt(),
            c(l22.sqrt(), 0.0),
            e(a2 - a12) * l21.sqrt(),
            c(l22.sqrt(), 0.0),
        ],
    );
    let avg_gains = DMatrix::from_row_slice(4, 2, &[l11, l12, l11, l12, l21, l22, l21, l22]);
    Ok(ChannelMatrix { h, avg_gains, n_bs_antennas })
}

/// Average per-entry gains for the three-cell setup: UE k is served by BS k,
/// and each (BS, UE) link reuses the two-cell split from `d_k`.
pub fn three_cell_avg_gains(d: [f64; 3], theta: f64, n_bs_antennas: usize) -> Result<DMatrix<f64>> {
    if n_bs_antennas == 0 {
        return Err(Error::InvalidConfig("n_bs_antennas must be positive".into()));
    }
    for (k, dk) in d.iter().enumerate() {
        if !(0.0..=1.0).contains(dk) {
            return Err(Error::InvalidConfig(format!("d{} must lie in [0, 1], got {dk}", k + 1)));
        }
    }
    Ok(DMatrix::from_fn(3 * n_bs_antennas, 3, |row, k| {
        let (own, cross) = path_gains(d[k], theta);
        if row / n_bs_antennas == k {
            own
        } else {
            cross
        }
    }))
}

/// Rayleigh draw with per-entry variance `avg_gains`, seeded ChaCha8.
pub fn sample_rayleigh_channel(avg_gains: &DMatrix<f64>, seed: u64, n_bs_antennas: usize) -> Result<ChannelMatrix> {
    if avg_gains.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::InvalidConfig("average gains must be nonnegative".into()));
    }
    if n_bs_antennas == 0 || avg_gains.nrows() % n_bs_antennas != 0 {
        return Err(Error::DimensionMismatch("rows must split evenly across base stations".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = CMatrix::zeros(avg_gains.nrows(), avg_gains.ncols());
    // column-major fill keeps the draw order fixed
    for j in 0..avg_gains.ncols() {
        for i in 0..avg_gains.nrows() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let g = avg_gains[(i, j)];
            h[(i, j)] = if g == 0.0 { c(0.0, 0.0) } else { c(re, im) * (g / 2.0).sqrt() };
        }
    }
    Ok(ChannelMatrix { h, avg_gains: avg_gains.clone(), n_bs_antennas })
}

/// Power-reduced channel estimate and the per-entry error standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub h_eff: CMatrix,
    /// Per-entry `ē`; squared it is the error power seen by the receiver.
    pub e_bar: DMatrix<f64>,
    pub avg_gains: DMatrix<f64>,
    pub n_bs_antennas: usize,
}

impl EffectiveChannel {
    pub fn n_bs(&self) -> usize {
        self.h_eff.nrows() / self.n_bs_antennas
    }

    pub fn n_ue(&self) -> usize {
        self.h_eff.ncols()
    }

    pub fn n_rx(&self) -> usize {
        self.h_eff.nrows()
    }

    /// Diagonal of the effective noise covariance for total per-UE powers `p`.
    pub fn noise_diag(&self, p: &[f64]) -> Vec<f64> {
        (0..self.n_rx())
            .map(|i| (0..self.n_ue()).map(|k| self.e_bar[(i, k)].powi(2) * p[k]).sum())
            .collect()
    }

    /// Reorders base-station blocks and UE columns: new block `m` is old block
    /// `bs_order[m]`, new column `k` is old column `ue_order[k]`.
    pub fn permuted(&self, bs_order: &[usize], ue_order: &[usize]) -> Self {
        let nb = self.n_bs_antennas;
        let row = |i: usize| bs_order[i / nb] * nb + i % nb;
        let n = self.n_rx();
        let k = ue_order.len();
        Self {
            h_eff: CMatrix::from_fn(n, k, |i, j| self.h_eff[(row(i), ue_order[j])]),
            e_bar: DMatrix::from_fn(n, k, |i, j| self.e_bar[(row(i), ue_order[j])]),
            avg_gains: DMatrix::from_fn(n, k, |i, j| self.avg_gains[(row(i), ue_order[j])]),
            n_bs_antennas: nb,
        }
    }
}

/// `h^e = h / √(1 + σ_E²/E|h|²)`, `ē² = E|h|²·σ_E² / (E|h|² + σ_E²)`.
pub fn effective_channel(h: &ChannelMatrix, sigma_e2: f64) -> Result<EffectiveChannel> {
    if h.avg_gains.shape() != h.h.shape() {
        return Err(Error::DimensionMismatch("avg_gains must match the channel shape".into()));
    }
    if !(sigma_e2 >= 0.0) {
        return Err(Error::InvalidConfig(format!("estimation error variance must be nonnegative, got {sigma_e2}")));
    }
    let (n, k) = h.h.shape();
    let mut h_eff = CMatrix::zeros(n, k);
    let mut e_bar = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            let g = h.avg_gains[(i, j)];
            let hij = h.h[(i, j)];
            if g <= 0.0 {
                if hij.norm() > 0.0 {
                    return Err(Error::InvalidConfig(format!("entry ({i},{j}) is nonzero but has zero average gain")));
                }
                continue;
            }
            if sigma_e2.is_infinite() {
                e_bar[(i, j)] = g.sqrt();
                continue;
            }
            h_eff[(i, j)] = hij / (1.0 + sigma_e2 / g).sqrt();
            e_bar[(i, j)] = (g * sigma_e2 / (g + sigma_e2)).sqrt();
        }
    }
    Ok(EffectiveChannel { h_eff, e_bar, avg_gains: h.avg_gains.clone(), n_bs_antennas: h.n_bs_antennas })
}

/// Diagonal effective noise covariance `diag(Σ_k ē²_ik p_k)`.
pub fn effective_noise_covariance(ec: &EffectiveChannel, total_power_diag: &[f64]) -> CMatrix {
    diag(&ec.noise_diag(total_power_diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_cell_edge_gains_are_half() {
        let (own, cross) = path_gains(0.5, 3.5);
        assert_relative_eq!(own, 0.5);
        assert_relative_eq!(cross, 0.5);
        let ch = build_scenario_channel(&Scenario2x2::default(), 2).unwrap();
        assert!(ch.avg_gains.iter().all(|g| (g - 0.5).abs() < 1e-15));
    }

    #[test]
    fn near_own_station_limit() {
        let (own, cross) = path_gains(1e-6, 3.5);
        assert!(own > 1.0 - 1e-12 && cross < 1e-12);
        assert_eq!(path_gains(0.0, 3.5), (1.0, 0.0));
    }

    #[test]
    fn own_and_cross_gain_sum_to_one() {
        for d in [0.05, 0.2, 0.37, 0.5, 0.81] {
            let (a, b) = path_gains(d, 3.5);
            assert_relative_eq!(a + b, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn scenario_rejects_other_antenna_counts() {
        let e = build_scenario_channel(&Scenario2x2::default(), 1).unwrap_err();
        assert!(matches!(e, Error::Unsupported(_)));
    }

    #[test]
    fn estimation_error_examples() {
        assert_relative_eq!(estimation_error_variance(&CsiConfig::pilots(2, 1.0, 0.1)).unwrap(), 0.05);
        assert_relative_eq!(estimation_error_variance(&CsiConfig::pilots(1, 1.0, 0.1)).unwrap(), 0.1);
        assert_eq!(estimation_error_variance(&CsiConfig::perfect()).unwrap(), 0.0);
        assert!(estimation_error_variance(&CsiConfig::pilots(0, 1.0, 0.1)).is_err());
    }

    #[test]
    fn effective_channel_examples() {
        let h = ChannelMatrix::from_raw(CMatrix::from_element(1, 1, c(1.0, 0.0)), 1).unwrap();
        let e0 = effective_channel(&h, 0.0).unwrap();
        assert_eq!(e0.h_eff, h.h);
        assert_eq!(e0.e_bar[(0, 0)], 0.0);
        let e1 = effective_channel(&h, 1.0).unwrap();
        assert_relative_eq!(e1.h_eff[(0, 0)].re, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(e1.e_bar[(0, 0)], 0.5f64.sqrt(), epsilon = 1e-15);
        let big = effective_channel(&h, 1e30).unwrap();
        assert!(big.h_eff[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn noise_covariance_examples() {
        let h = ChannelMatrix::from_raw(CMatrix::from_element(2, 2, c(1.0, 0.0)), 1).unwrap();
        let ec = effective_channel(&h, 1.0).unwrap();
        let phi = effective_noise_covariance(&ec, &[1.0, 1.0]);
        // each entry contributes ē² = 0.5
        assert_relative_eq!(phi[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(phi[(1, 1)].re, 1.0, epsilon = 1e-15);
        assert_eq!(phi[(0, 1)], c(0.0, 0.0));
        let perfect = effective_channel(&h, 0.0).unwrap();
        assert!(effective_noise_covariance(&perfect, &[1.0, 1.0]).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rayleigh_is_deterministic_and_respects_zero_links() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.7]);
        let a = sample_rayleigh_channel(&g, 7, 1).unwrap();
        let b = sample_rayleigh_channel(&g, 7, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.h[(0, 1)], c(0.0, 0.0));
        assert_ne!(a.h, sample_rayleigh_channel(&g, 8, 1).unwrap().h);
    }

    #[test]
    fn rayleigh_sample_power_converges() {
        let g = DMatrix::from_element(1, 1, 0.37);
        let n = 100_000u64;
        let mean: f64 = (0..n)
            .map(|s| sample_rayleigh_channel(&g, s, 1).unwrap().h[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean / 0.37 - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn three_cell_gains_layout() {
        let g = three_cell_avg_gains([0.5, 0.3, 0.3], 3.5, 2).unwrap();
        assert_eq!(g.shape(), (6, 3));
        let (own, cross) = path_gains(0.3, 3.5);
        assert_relative_eq!(g[(2, 1)], own);
        assert_relative_eq!(g[(3, 1)], own);
        assert_relative_eq!(g[(0, 1)], cross);
        assert_relative_eq!(g[(5, 1)], cross);
    }

    #[test]
    fn permutation_swaps_blocks_and_columns() {
        let ch = build_scenario_channel(&Scenario2x2 { d1: 0.3, d2: 0.4, ..Default::default() }, 2).unwrap();
        let ec = effective_channel(&ch, 0.05).unwrap();
        let p = ec.permuted(&[1, 0], &[1, 0]);
        assert_eq!(p.h_eff[(0, 0)], ec.h_eff[(2, 1)]);
        assert_eq!(p.h_eff[(3, 1)], ec.h_eff[(1, 0)]);
        assert_eq!(p.permuted(&[1, 0], &[1, 0]), ec);
    }
}
