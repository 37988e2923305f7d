//! Finite-backhaul cooperation schemes for two cells and two UEs (bit
//! forwarding, compressed interference forwarding, decentralized and
//! centralized receive-signal exchange) plus the orthogonal-slot and
//! central-entity comparators.
//!
//! Every two-cell formula is written once for a canonical orientation:
//! UE 0 is served by BS 0, UE 1 by BS 1, and cooperation flows from BS 0 to
//! BS 1. Other orientations permute BS blocks and UE columns first.

use serde::{Deserialize, Serialize};

use crate::allocation::{power_grid, Assignment, MessageId, MessageTag, PowerAllocation, SchemeKind};
use crate::baselines::{
    mac_rates, no_coop_best_weighted, no_coop_rates_rx, polymatroid_vertex, Best, OperatingPoint, RateTuple, TIE_TOLERANCE,
};
use crate::channel::EffectiveChannel;
use crate::error::{Error, Result};
use crate::linalg::{block, c, conditional_covariance, diag_part, hermitian_eigen, hermitian_eigenvalues, log2_det_rate_named, CMatrix};
use crate::lp;
use crate::model::{only, select_bs, Observation, QuantizedView, Rx};

/// How a base station compresses what it forwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantizer {
    /// Per-dimension scalar quantizer, one bit per real dimension above the bound.
    Practical,
    /// Operation on the rate-distortion bound.
    RateDistortion,
    /// Rate-distortion bound plus source coding against the receiver's side information.
    SourceCoded,
}

impl Quantizer {
    pub const ALL: [Quantizer; 3] = [Quantizer::Practical, Quantizer::RateDistortion, Quantizer::SourceCoded];

    pub fn label(&self) -> &'static str {
        match self {
            Quantizer::Practical => "practical",
            Quantizer::RateDistortion => "rd",
            Quantizer::SourceCoded => "sc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "practical" => Some(Quantizer::Practical),
            "rd" | "rate_distortion" => Some(Quantizer::RateDistortion),
            "sc" | "source_coded" => Some(Quantizer::SourceCoded),
            _ => None,
        }
    }
}

/// Receiver strategy being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    NoCoop,
    Mac,
    Dis,
    Cif,
    DasD,
    DasC,
    Fdm,
    DasN,
}

impl Scheme {
    pub const ALL: [Scheme; 8] =
        [Scheme::NoCoop, Scheme::Mac, Scheme::Dis, Scheme::Cif, Scheme::DasD, Scheme::DasC, Scheme::Fdm, Scheme::DasN];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::NoCoop => "nocoop",
            Scheme::Mac => "mac",
            Scheme::Dis => "dis",
            Scheme::Cif => "cif",
            Scheme::DasD => "dasd",
            Scheme::DasC => "dasc",
            Scheme::Fdm => "fdm",
            Scheme::DasN => "dasn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Scheme::ALL.into_iter().find(|x| x.label() == s)
    }

    /// True for the schemes defined only for two cells and two UEs.
    pub fn two_cell_only(&self) -> bool {
        matches!(self, Scheme::Dis | Scheme::Cif | Scheme::DasD | Scheme::DasC)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub quantizer: Quantizer,
    /// Superposition coding: split messages for bit forwarding, local and
    /// common messages for centralized decoding.
    pub spc: bool,
    /// Backhaul in bits per channel use.
    pub beta: f64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, quantizer: Quantizer, spc: bool, beta: f64) -> Self {
        Self { scheme, quantizer, spc, beta }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidConfig(format!("beta must be nonnegative, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Search granularity for the unions over powers and backhaul splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub power_steps: usize,
    pub split_steps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { power_steps: 9, split_steps: 11 }
    }
}

/// Fixed cost of the practical quantizer per forwarded antenna block.
pub fn practical_overhead(n_bs_antennas: usize) -> f64 {
    2.0 * n_bs_antennas as f64
}

/// Noise level `q` of a scaled-identity quantizer meeting `log₂|I + Ψ/q| = budget`.
/// `None` means nothing can be forwarded.
pub fn quantization_noise(psi: &CMatrix, budget: f64) -> Option<f64> {
    if !(budget > 0.0) {
        return None;
    }
    let mu: Vec<f64> = hermitian_eigenvalues(psi).into_iter().filter(|v| *v > 0.0).collect();
    let Some(&mu_max) = mu.last() else {
        return None;
    };
    if budget.is_infinite() {
        return Some(0.0);
    }
    let rate = |q: f64| mu.iter().map(|m| (m / q).ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
    // rate(lo) ≥ budget ≥ rate(hi)
    let lo = mu_max / (2f64.powf(budget) - 1.0);
    let hi = mu_max * mu.len() as f64 / (2f64.powf(budget / mu.len() as f64) - 1.0).max(f64::MIN_POSITIVE);
    if !(lo > 0.0) || !lo.is_finite() {
        return Some(0.0);
    }
    let (mut a, mut b) = (lo.ln(), hi.ln().max(lo.ln()));
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if rate(mid.exp()) > budget {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    Some((0.5 * (a + b)).exp())
}

/// Scaled-identity quantization noise for forwarding a signal with
/// covariance `phi_local`, conditioned on (`cross`, `phi_side`) when source
/// coding is used.
fn quantize_identity(
    quantizer: Quantizer,
    phi_local: &CMatrix,
    side: Option<(&CMatrix, &CMatrix)>,
    budget: f64,
    nb: usize,
) -> Result<Option<f64>> {
    Ok(match quantizer {
        Quantizer::Practical => quantization_noise(&diag_part(phi_local), budget - practical_overhead(nb)),
        Quantizer::RateDistortion => quantization_noise(phi_local, budget),
        Quantizer::SourceCoded => match side {
            Some((cross, phi_side)) => quantization_noise(&conditional_covariance(phi_local, cross, phi_side)?, budget),
            None => quantization_noise(phi_local, budget),
        },
    })
}

const SPLIT_GRID: usize = 16;
const GOLDEN_ITERS: usize = 24;

/// Transform coding of a signal with covariance `psi` at BS `bs`: each
/// eigenmode is quantized separately and the bits are split across modes to
/// maximize `objective`. The equal-noise split is always a candidate.
pub(crate) fn transform_view(
    bs: usize,
    psi: &CMatrix,
    budget: f64,
    objective: &mut dyn FnMut(&QuantizedView) -> Result<f64>,
) -> Result<Option<QuantizedView>> {
    if !(budget > 0.0) {
        return Ok(None);
    }
    let (mu, u) = hermitian_eigen(psi);
    let mu_max = mu.iter().copied().fold(0.0, f64::max);
    let modes: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > 1e-14 * mu_max && mu[i] > 0.0).collect();
    if modes.is_empty() {
        return Ok(None);
    }
    let make = |bits: &[f64]| -> QuantizedView {
        let active: Vec<usize> = (0..modes.len()).filter(|&j| bits[j] > 1e-12).collect();
        let w = CMatrix::from_fn(active.len(), psi.nrows(), |r, col| u[(col, modes[active[r]])].conj());
        let q = active
            .iter()
            .map(|&j| if bits[j].is_infinite() { 0.0 } else { mu[modes[j]] / (bits[j].exp2() - 1.0) })
            .collect();
        QuantizedView { bs, w, q }
    };
    if budget.is_infinite() {
        return Ok(Some(make(&vec![f64::INFINITY; modes.len()])));
    }
    let q0 = quantization_noise(psi, budget).unwrap_or(f64::INFINITY);
    let mut bits: Vec<f64> = modes.iter().map(|&i| (mu[i] / q0).ln_1p() / std::f64::consts::LN_2).collect();
    let mut best = objective(&make(&bits))?;
    let sweeps = if modes.len() > 2 { 2 } else { 1 };
    for _ in 0..sweeps {
        for i in 0..modes.len() {
            for j in i + 1..modes.len() {
                let total = bits[i] + bits[j];
                let mut eval = |t: f64, bits: &mut Vec<f64>| -> Result<f64> {
                    bits[i] = t * total;
                    bits[j] = (1.0 - t) * total;
                    objective(&make(bits))
                };
                let mut trial = bits.clone();
                let grid: Vec<f64> = (0..=SPLIT_GRID).map(|k| k as f64 / SPLIT_GRID as f64).collect();
                let mut k_best = 0;
                let mut v_best = f64::NEG_INFINITY;
                for (k, &t) in grid.iter().enumerate() {
                    let v = eval(t, &mut trial)?;
                    if v > v_best + TIE_TOLERANCE {
                        v_best = v;
                        k_best = k;
                    }
                }
                let mut t_best = grid[k_best];
                let (mut lo, mut hi) = (grid[k_best.saturating_sub(1)], grid[(k_best + 1).min(SPLIT_GRID)]);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                let (mut f1, mut f2) = (eval(x1, &mut trial)?, eval(x2, &mut trial)?);
                for _ in 0..GOLDEN_ITERS {
                    if f1 >= f2 {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - g * (hi - lo);
                        f1 = eval(x1, &mut trial)?;
                    } else {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + g * (hi - lo);
                        f2 = eval(x2, &mut trial)?;
                    }
                }
                for (t, v) in [(x1, f1), (x2, f2)] {
                    if v > v_best + TIE_TOLERANCE {
                        v_best = v;
                        t_best = t;
                    }
                }
                if v_best > best + TIE_TOLERANCE {
                    best = v_best;
                    bits[i] = t_best * total;
                    bits[j] = (1.0 - t_best) * total;
                }
            }
        }
    }
    Ok(Some(make(&bits)))
}

/// Quantized view of BS `bs` forwarding a signal with covariance
/// `phi_local`. The practical quantizer resolves every antenna equally; the
/// information-theoretic ones use transform coding tuned to `objective`.
pub(crate) fn quantize_view(
    quantizer: Quantizer,
    bs: usize,
    nb: usize,
    phi_local: &CMatrix,
    side: Option<(&CMatrix, &CMatrix)>,
    budget: f64,
    objective: &mut dyn FnMut(&QuantizedView) -> Result<f64>,
) -> Result<Option<QuantizedView>> {
    match quantizer {
        Quantizer::Practical => {
            Ok(quantization_noise(&diag_part(phi_local), budget - practical_overhead(nb)).map(|q| QuantizedView::identity(bs, nb, q)))
        }
        Quantizer::RateDistortion => transform_view(bs, phi_local, budget, objective),
        Quantizer::SourceCoded => match side {
            Some((cross, phi_side)) => {
                // ignoring the side information is always allowed
                let conditional = transform_view(bs, &conditional_covariance(phi_local, cross, phi_side)?, budget, objective)?;
                let plain = transform_view(bs, phi_local, budget, objective)?;
                match (conditional, plain) {
                    (Some(a), Some(b)) => Ok(Some(if objective(&b)? > objective(&a)? + TIE_TOLERANCE { b } else { a })),
                    (a, b) => Ok(a.or(b)),
                }
            }
            None => transform_view(bs, phi_local, budget, objective),
        },
    }
}

fn ld(noise: &CMatrix, signal: &CMatrix) -> Result<f64> {
    log2_det_rate_named(noise, signal, "interference-plus-noise covariance")
}

fn require_two_cell(ec: &EffectiveChannel) -> Result<()> {
    if ec.n_bs() != 2 || ec.n_ue() != 2 {
        return Err(Error::Unsupported(format!(
            "scheme defined for 2 base stations and 2 UEs, got {} and {}",
            ec.n_bs(),
            ec.n_ue()
        )));
    }
    Ok(())
}

/// One of the four two-cell orientations: `b` cooperates towards the other BS, `u` is served by `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Orientation {
    b: usize,
    u: usize,
}

impl Orientation {
    const ALL: [Orientation; 4] =
        [Orientation { b: 0, u: 0 }, Orientation { b: 1, u: 1 }, Orientation { b: 0, u: 1 }, Orientation { b: 1, u: 0 }];

    fn from_assignment(assign: &Assignment) -> Result<Self> {
        if assign.a.len() != 2 || assign.a[0] == assign.a[1] || assign.a.iter().any(|&m| m > 1) {
            return Err(Error::InvalidConfig(format!("expected a one-to-one two-cell assignment, got {:?}", assign.a)));
        }
        let b = assign.direction.unwrap_or(0);
        if b > 1 {
            return Err(Error::InvalidConfig(format!("direction names BS {b} of 2")));
        }
        let u = if assign.a[0] == b { 0 } else { 1 };
        Ok(Self { b, u })
    }

    fn bs_order(&self) -> [usize; 2] {
        [self.b, 1 - self.b]
    }

    fn ue_order(&self) -> [usize; 2] {
        [self.u, 1 - self.u]
    }

    fn assignment(&self) -> Assignment {
        let mut a = vec![0; 2];
        a[self.u] = self.b;
        a[1 - self.u] = 1 - self.b;
        Assignment::with_direction(a, self.b)
    }

    fn rx(&self, ec: &EffectiveChannel, sigma2: f64) -> Rx {
        Rx::new(&ec.permuted(&self.bs_order(), &self.ue_order()), sigma2)
    }
}

// ---------------------------------------------------------------------------
// Distributed interference subtraction

/// Canonical bit forwarding: BS 0 decodes UE 0's forwarded part first, then
/// its kept part, and hands the forwarded bits to BS 1 for cancellation.
fn dis_canonical(rx: &Rx, kept: f64, fwd: f64, p2: f64, beta: f64, source_coded: bool) -> Result<[f64; 2]> {
    let pt = [kept + fwd, p2];
    let nn0 = rx.nn_bs(0, &pt);
    let nn1 = rx.nn_bs(1, &pt);
    let nu_fwd_decode = ld(&(&nn0 + rx.gram_bs(0, &[kept, p2])), &rx.gram_bs(0, &[fwd, 0.0]))?;
    let nu_kept = ld(&(&nn0 + rx.gram_bs(0, &[0.0, p2])), &rx.gram_bs(0, &[kept, 0.0]))?;
    let side = if source_coded {
        ld(&(&nn1 + rx.gram_bs(1, &[kept, p2])), &rx.gram_bs(1, &[fwd, 0.0]))?
    } else {
        0.0
    };
    let nu_fwd = nu_fwd_decode.min(beta + side);
    let r2 = ld(&(&nn1 + rx.gram_bs(1, &[kept, 0.0])), &rx.gram_bs(1, &[0.0, p2]))?;
    Ok([nu_kept + nu_fwd, r2])
}

/// Rates of bit forwarding for one assignment, direction and allocation.
///
/// The forwarding UE uses `DisKept`/`DisForwarded` messages (a `Single`
/// message counts as kept). An assignment serving both UEs at one BS needs
/// no backhaul and yields the non-cooperative rates.
pub fn dis_rates(
    ec: &EffectiveChannel,
    sigma2: f64,
    cfg: &SchemeConfig,
    assign: &Assignment,
    alloc: &PowerAllocation,
) -> Result<RateTuple> {
    require_two_cell(ec)?;
    cfg.validate()?;
    assign.validate(2, 2)?;
    if assign.a[0] == assign.a[1] {
        let rx = Rx::new(ec, sigma2);
        return Ok(RateTuple::new(no_coop_rates_rx(&rx, &alloc.totals(), assign, &[1.0, 1.0])?));
    }
    let o = Orientation::from_assignment(assign)?;
    let kept = alloc.get(o.u, MessageTag::DisKept) + alloc.get(o.u, MessageTag::Single);
    let fwd = alloc.get(o.u, MessageTag::DisForwarded);
    let p2 = alloc.totals()[1 - o.u];
    let r = dis_canonical(&o.rx(ec, sigma2), kept, fwd, p2, cfg.beta, cfg.quantizer == Quantizer::SourceCoded)?;
    Ok(RateTuple::new(r.to_vec()).unpermute(&o.ue_order()))
}

// ---------------------------------------------------------------------------
// Compressed interference forwarding

/// Conditional variance of UE 0's unit-power symbol given BS 1's receive signal.
fn cif_kappa(rx: &Rx, p1: f64, p2: f64) -> Result<f64> {
    let pt = [p1, p2];
    let h21: CMatrix = rx.h_bs[1].columns(0, 1).into_owned();
    let phi_y2 = rx.nn_bs(1, &pt) + rx.gram_bs(1, &pt);
    let cross = h21.adjoint() * c(p1.sqrt(), 0.0);
    let one = CMatrix::from_element(1, 1, c(1.0, 0.0));
    Ok(conditional_covariance(&one, &cross, &phi_y2)?[(0, 0)].re)
}

/// Residual interference power left after forwarding a quantized transmit sequence.
pub fn cif_residual(quantizer: Quantizer, rho: f64, beta: f64, kappa: f64) -> f64 {
    match quantizer {
        Quantizer::Practical => rho / 2f64.powf(beta - 2.0).max(1.0),
        Quantizer::RateDistortion => rho / 2f64.powf(beta),
        Quantizer::SourceCoded => {
            let den = 2f64.powf(beta) - 1.0 + kappa;
            if den > 0.0 {
                rho * kappa / den
            } else {
                0.0
            }
        }
    }
}

fn cif_canonical(rx: &Rx, p1: f64, p2: f64, beta: f64, quantizer: Quantizer) -> Result<[f64; 2]> {
    let pt = [p1, p2];
    let nn0 = rx.nn_bs(0, &pt);
    let nn1 = rx.nn_bs(1, &pt);
    let r1 = ld(&(&nn0 + rx.gram_bs(0, &[0.0, p2])), &rx.gram_bs(0, &[p1, 0.0]))?;
    let kappa = if quantizer == Quantizer::SourceCoded && p1 > 0.0 { cif_kappa(rx, p1, p2)? } else { 1.0 };
    let xi = cif_residual(quantizer, p1, beta, kappa);
    let r2 = ld(&(&nn1 + rx.gram_bs(1, &[xi, 0.0])), &rx.gram_bs(1, &[0.0, p2]))?;
    Ok([r1, r2])
}

/// Rates of compressed interference forwarding for one assignment and direction.
pub fn cif_rates(
    ec: &EffectiveChannel,
    sigma2: f64,
    cfg: &SchemeConfig,
    assign: &Assignment,
    alloc: &PowerAllocation,
) -> Result<RateTuple> {
    require_two_cell(ec)?;
    cfg.validate()?;
    assign.validate(2, 2)?;
    let p = alloc.totals();
    if assign.a[0] == assign.a[1] {
        let rx = Rx::new(ec, sigma2);
        return Ok(RateTuple::new(no_coop_rates_rx(&rx, &p, assign, &[1.0, 1.0])?));
    }
    let o = Orientation::from_assignment(assign)?;
    let r = cif_canonical(&o.rx(ec, sigma2), p[o.u], p[1 - o.u], cfg.beta, cfg.quantizer)?;
    Ok(RateTuple::new(r.to_vec()).unpermute(&o.ue_order()))
}

/// `κ` computed in closed form, `1/(1 + ρ h21ᴴ (N2 + ρ2 h22h22ᴴ)⁻¹ h21)`; kept for cross-checking.
pub fn cif_kappa_closed_form(ec: &EffectiveChannel, sigma2: f64, p: [f64; 2]) -> Result<f64> {
    require_two_cell(ec)?;
    let rx = Rx::new(ec, sigma2);
    let h21: CMatrix = rx.h_bs[1].columns(0, 1).into_owned();
    let n2 = rx.nn_bs(1, &p) + rx.gram_bs(1, &[0.0, p[1]]);
    let inv = crate::linalg::hpd_inverse(&n2, "interference at BS 2")?;
    let q = (h21.adjoint() * inv * &h21)[(0, 0)].re;
    Ok(1.0 / (1.0 + p[0] * q))
}

/// `κ` through the conditional-covariance route used by the scheme.
pub fn cif_kappa_conditional(ec: &EffectiveChannel, sigma2: f64, p: [f64; 2]) -> Result<f64> {
    require_two_cell(ec)?;
    cif_kappa(&Rx::new(ec, sigma2), p[0], p[1])
}

// ---------------------------------------------------------------------------
// Decentralized receive-signal exchange

/// UE `k` decoded at BS `k` from its own antennas plus the other BS's quantized signal.
fn dasd_canonical(rx: &Rx, p: [f64; 2], budgets: [f64; 2], quantizer: Quantizer) -> Result<[f64; 2]> {
    let nb = rx.nb;
    let phi_yy = rx.gram_all(&p) + rx.nn_all(&p);
    let mut r = [0.0; 2];
    for k in 0..2 {
        let other = 1 - k;
        let signal = rx.gram_all(&only(&p, k));
        let noise = rx.nn_all(&p) + rx.gram_all(&only(&p, other));
        let rate = |view: Option<&QuantizedView>| -> Result<f64> {
            let views: Vec<&QuantizedView> = view.into_iter().collect();
            let obs = Observation::new(rx, &[k], &views);
            ld(&obs.noise(&noise), &obs.project(&signal))
        };
        let helper = block(&phi_yy, other * nb, nb);
        let own = block(&phi_yy, k * nb, nb);
        let cross = phi_yy.view((other * nb, k * nb), (nb, nb)).into_owned();
        let view = quantize_view(quantizer, other, nb, &helper, Some((&cross, &own)), budgets[other], &mut |v| rate(Some(v)))?;
        r[k] = rate(view.as_ref())?;
    }
    Ok(r)
}

/// Rates of decentralized decoding with exchanged quantized receive signals.
/// `backhaul_split` is the share of `β` spent by BS 0 (the first block).
pub fn dasd_rates(
    ec: &EffectiveChannel,
    sigma2: f64,
    cfg: &SchemeConfig,
    assign: &Assignment,
    alloc: &PowerAllocation,
    backhaul_split: f64,
) -> Result<RateTuple> {
    require_two_cell(ec)?;
    cfg.validate()?;
    assign.validate(2, 2)?;
    if !(0.0..=1.0).contains(&backhaul_split) {
        return Err(Error::InvalidConfig(format!("backhaul split must lie in [0, 1], got {backhaul_split}")));
    }
    let p = alloc.totals();
    if assign.a[0] == assign.a[1] {
        let rx = Rx::new(ec, sigma2);
        return Ok(RateTuple::new(no_coop_rates_rx(&rx, &p, assign, &[1.0, 1.0])?));
    }
    let u = if assign.a[0] == 0 { 0 } else { 1 };
    let order = [u, 1 - u];
    let rx = Rx::new(&ec.permuted(&[0, 1], &order), sigma2);
    let budgets = [cfg.beta * backhaul_split, cfg.beta * (1.0 - backhaul_split)];
    let r = dasd_canonical(&rx, [p[u], p[1 - u]], budgets, cfg.quantizer)?;
    Ok(RateTuple::new(r.to_vec()).unpermute(&order))
}

// ---------------------------------------------------------------------------
// Centralized decoding at one BS

/// Canonical powers: UE 0 local, common, joint; UE 1 common, joint.
#[derive(Debug, Clone, Copy)]
struct DascPowers {
    local: f64,
    common0: f64,
    joint0: f64,
    common1: f64,
    joint1: f64,
}

impl DascPowers {
    fn from_alloc(alloc: &PowerAllocation, u: usize) -> Self {
        let v = 1 - u;
        Self {
            local: alloc.get(u, MessageTag::DascLocal),
            common0: alloc.get(u, MessageTag::DascCommon),
            joint0: alloc.get(u, MessageTag::DascJoint) + alloc.get(u, MessageTag::Single),
            common1: alloc.get(v, MessageTag::DascCommon),
            joint1: alloc.get(v, MessageTag::DascJoint) + alloc.get(v, MessageTag::Single),
        }
    }

    fn totals(&self) -> [f64; 2] {
        [self.local + self.common0 + self.joint0, self.common1 + self.joint1]
    }
}

/// Per-message rate bounds as an LP over `[local, common0, common1, joint0, joint1]`.
struct DascProgram {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl DascProgram {
    fn solve(&self, joint_bounds: [f64; 3], weights: [f64; 2]) -> Result<(Vec<f64>, f64)> {
        let mut b = self.b.clone();
        b.extend_from_slice(&joint_bounds);
        let cvec = [weights[0], weights[0], weights[1], weights[0], weights[1]];
        lp::maximize(&cvec, &self.a, &b)
    }
}

fn subset_powers(mask: u8, first: f64, second: f64) -> [f64; 2] {
    [if mask & 1 != 0 { first } else { 0.0 }, if mask & 2 != 0 { second } else { 0.0 }]
}

/// Bounds that do not depend on the backhaul: local decoding at both BSs.
fn dasc_local_program(rx: &Rx, pw: &DascPowers) -> Result<DascProgram> {
    let pt = pw.totals();
    let mut a = Vec::with_capacity(13);
    let mut b = Vec::with_capacity(13);

    // BS 0 decodes local and both common messages; joint messages interfere
    let i0 = rx.nn_bs(0, &pt) + rx.gram_bs(0, &[pw.joint0, pw.joint1]);
    for mask in 1..8u8 {
        let (l, c0, c1) = (mask & 1 != 0, mask & 2 != 0, mask & 4 != 0);
        let s = [
            if l { pw.local } else { 0.0 } + if c0 { pw.common0 } else { 0.0 },
            if c1 { pw.common1 } else { 0.0 },
        ];
        a.push(vec![f64::from(u8::from(l)), f64::from(u8::from(c0)), f64::from(u8::from(c1)), 0.0, 0.0]);
        b.push(ld(&i0, &rx.gram_bs(0, &s))?);
    }

    // BS 1 decodes the common messages; the local message is unknown there
    let i1 = rx.nn_bs(1, &pt) + rx.gram_bs(1, &[pw.local + pw.joint0, pw.joint1]);
    for mask in 1..4u8 {
        let s = subset_powers(mask, pw.common0, pw.common1);
        a.push(vec![0.0, f64::from(mask & 1), f64::from((mask >> 1) & 1), 0.0, 0.0]);
        b.push(ld(&i1, &rx.gram_bs(1, &s))?);
    }
    for mask in 1..4u8 {
        a.push(vec![0.0, 0.0, 0.0, f64::from(mask & 1), f64::from((mask >> 1) & 1)]);
    }
    Ok(DascProgram { a, b })
}

/// Joint-decoding bounds at BS 1 for the subsets {J0}, {J1}, {J0, J1}.
fn dasc_joint_bounds(rx: &Rx, pw: &DascPowers, view: Option<&QuantizedView>) -> Result<[f64; 3]> {
    let nb = rx.nb;
    let mut noise = rx.nn_all(&pw.totals());
    let local = rx.gram_bs(1, &[pw.local, 0.0]);
    let mut blk = noise.view_mut((nb, nb), (nb, nb));
    blk += &local;
    let views: Vec<&QuantizedView> = view.into_iter().collect();
    let obs = Observation::new(rx, &[1], &views);
    let n = obs.noise(&noise);
    let mut out = [0.0; 3];
    for mask in 1..4u8 {
        let s = subset_powers(mask, pw.joint0, pw.joint1);
        out[mask as usize - 1] = ld(&n, &obs.project(&rx.gram_all(&s)))?;
    }
    Ok(out)
}

/// Weighted-optimal canonical rates, or `None` when a cut-set bound shows
/// the weighted value cannot reach `floor`.
fn dasc_canonical(
    rx: &Rx,
    pw: &DascPowers,
    beta: f64,
    quantizer: Quantizer,
    weights: [f64; 2],
    floor: f64,
) -> Result<Option<[f64; 2]>> {
    let program = dasc_local_program(rx, pw)?;
    let alone = dasc_joint_bounds(rx, pw, None)?;
    if floor > f64::NEG_INFINITY {
        // a β-bit description adds at most β bits to any bound
        let clean = dasc_joint_bounds(rx, pw, Some(&QuantizedView::identity(0, rx.nb, 0.0)))?;
        let relaxed = [0, 1, 2].map(|i| clean[i].min(alone[i] + beta));
        if program.solve(relaxed, weights)?.1 < floor {
            return Ok(None);
        }
    }
    let pt = pw.totals();
    let joint = [pw.joint0, pw.joint1];
    // BS 0 forwards its signal after removing what it decoded
    let phi0 = rx.gram_bs(0, &joint) + rx.nn_bs(0, &pt);
    let phi1 = rx.gram_bs(1, &[pw.local + pw.joint0, pw.joint1]) + rx.nn_bs(1, &pt);
    let cross = &rx.h_bs[0] * crate::linalg::diag(&joint) * rx.h_bs[1].adjoint();
    let view = if pw.joint0 + pw.joint1 > 0.0 {
        quantize_view(quantizer, 0, rx.nb, &phi0, Some((&cross, &phi1)), beta, &mut |v| {
            Ok(program.solve(dasc_joint_bounds(rx, pw, Some(v))?, weights)?.1)
        })?
    } else {
        None
    };
    let bounds = match &view {
        Some(v) => dasc_joint_bounds(rx, pw, Some(v))?,
        None => alone,
    };
    let (x, _) = program.solve(bounds, weights)?;
    Ok(Some([x[0] + x[1] + x[3], x[2] + x[4]]))
}

/// Rates of centralized decoding: the direction BS quantizes and forwards,
/// the other BS decodes jointly. Returns the weighted-sum-optimal point.
pub fn dasc_rates_weighted(
    ec: &EffectiveChannel,
    sigma2: f64,
    cfg: &SchemeConfig,
    assign: &Assignment,
    alloc: &PowerAllocation,
    weights: &[f64],
) -> Result<RateTuple> {
    require_two_cell(ec)?;
    cfg.validate()?;
    assign.validate(2, 2)?;
    let o = Orientation::from_assignment(assign)?;
    let mut pw = DascPowers::from_alloc(alloc, o.u);
    if !cfg.spc {
        pw.joint0 += pw.local + pw.common0;
        pw.joint1 += pw.common1;
        pw.local = 0.0;
        pw.common0 = 0.0;
        pw.common1 = 0.0;
    }
    let w = [weights[o.u], weights[1 - o.u]];
    let r = dasc_canonical(&o.rx(ec, sigma2), &pw, cfg.beta, cfg.quantizer, w, f64::NEG_INFINITY)?
        .ok_or_else(|| Error::Numerical("unpruned evaluation returned no point".into()))?;
    Ok(RateTuple::new(r.to_vec()).unpermute(&o.ue_order()))
}

/// Sum-rate-optimal point of [`dasc_rates_weighted`].
pub fn dasc_rates(
    ec: &EffectiveChannel,
    sigma2: f64,
    cfg: &SchemeConfig,
    assign: &Assignment,
    alloc: &PowerAllocation,
) -> Result<RateTuple> {
    dasc_rates_weighted(ec, sigma2, cfg, assign, alloc, &[1.0, 1.0])
}

// ---------------------------------------------------------------------------
// Orthogonal slots and central-entity decoding

/// Rate of UE `k` during its slot when BS `m` decodes, optionally helped by
/// the quantized slot observations of all other BSs (budget each).
fn slot_rate(rx: &Rx, p: &[f64], k: usize, m: usize, helper_budget: f64, quantizer: Quantizer) -> Result<f64> {
    let pk = only(p, k);
    let nb = rx.nb;
    let phi_yy = rx.gram_all(&pk) + rx.nn_all(&pk);
    let own = block(&phi_yy, m * nb, nb);
    let mut kept = vec![m];
    let mut q: Vec<Option<f64>> = vec![None; rx.n_bs];
    for h in (0..rx.n_bs).filter(|&h| h != m) {
        let local = block(&phi_yy, h * nb, nb);
        let cross = phi_yy.view((h * nb, m * nb), (nb, nb)).into_owned();
        if let Some(qh) = quantize_identity(quantizer, &local, Some((&cross, &own)), helper_budget, nb)? {
            q[h] = Some(qh);
            kept.push(h);
        }
    }
    kept.sort_unstable();
    let noise = rx.nn_all(&pk) + rx.quant_noise(&q);
    ld(&select_bs(&noise, &kept, nb), &select_bs(&rx.gram_all(&pk), &kept, nb))
}

/// Orthogonal slots: each UE owns `1/K` of the channel uses at its regular
/// power, decoded by its best base station.
pub fn fdm_rates(ec: &EffectiveChannel, sigma2: f64, alloc: &PowerAllocation) -> Result<RateTuple> {
    fdm_enhanced_rates(ec, sigma2, alloc, 0.0, Quantizer::RateDistortion)
}

/// Orthogonal slots where idle base stations forward quantized slot
/// observations; every channel use of a slot carries `β` backhaul, split
/// equally among the helpers.
pub fn fdm_enhanced_rates(
    ec: &EffectiveChannel,
    sigma2: f64,
    alloc: &PowerAllocation,
    beta: f64,
    quantizer: Quantizer,
) -> Result<RateTuple> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidConfig(format!("beta must be nonnegative, got {beta}")));
    }
    let rx = Rx::new(ec, sigma2);
    let p = alloc.totals();
    let k_ue = p.len();
    let helpers = (rx.n_bs - 1).max(1) as f64;
    let mut r = vec![0.0; k_ue];
    for (k, rk) in r.iter_mut().enumerate() {
        let mut best: f64 = 0.0;
        for m in 0..rx.n_bs {
            best = best.max(slot_rate(&rx, &p, k, m, beta / helpers, quantizer)?);
        }
        *rk = best / k_ue as f64;
    }
    Ok(RateTuple::new(r))
}

/// Every BS quantizes its antennas with `β/M` towards a central entity that
/// decodes all UEs jointly; the entity has no side information.
pub fn dasn_rates(ec: &EffectiveChannel, sigma2: f64, beta: f64, quantizer: Quantizer, alloc: &PowerAllocation) -> Result<RateTuple> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidConfig(format!("beta must be nonnegative, got {beta}")));
    }
    let rx = Rx::new(ec, sigma2);
    let p = alloc.totals();
    let nb = rx.nb;
    let phi_yy = rx.gram_all(&p) + rx.nn_all(&p);
    let q_kind = if quantizer == Quantizer::SourceCoded { Quantizer::RateDistortion } else { quantizer };
    let budget = beta / rx.n_bs as f64;
    let mut q = vec![None; rx.n_bs];
    let mut kept = Vec::new();
    for m in 0..rx.n_bs {
        if let Some(qm) = quantize_identity(q_kind, &block(&phi_yy, m * nb, nb), None, budget, nb)? {
            q[m] = Some(qm);
            kept.push(m);
        }
    }
    let k_ue = p.len();
    if kept.is_empty() {
        return Ok(RateTuple::zeros(k_ue));
    }
    let noise = select_bs(&(rx.nn_all(&p) + rx.quant_noise(&q)), &kept, nb);
    let r = polymatroid_vertex(
        k_ue,
        |s| ld(&noise, &select_bs(&rx.gram_all(&crate::model::restrict(&p, s)), &kept, nb)),
        &vec![1.0; k_ue],
    )?;
    Ok(RateTuple::new(r))
}

// ---------------------------------------------------------------------------
// Unions over assignments, directions, powers and backhaul splits

fn point(rates: RateTuple, assignment: Assignment, allocation: PowerAllocation, split: Option<f64>) -> OperatingPoint {
    OperatingPoint { rates, assignment: Some(assignment), allocation, backhaul_split: split }
}

/// Non-cooperative candidates where one BS decodes both UEs.
fn offer_single_bs(best: &mut Best, ec: &EffectiveChannel, sigma2: f64, p_max: &[f64], weights: &[f64]) -> Result<()> {
    let rx = Rx::new(ec, sigma2);
    for m in 0..2 {
        let assign = Assignment::new(vec![m, m]);
        for alloc in power_grid(2, SchemeKind::SingleMessage, p_max)? {
            let t = RateTuple::new(no_coop_rates_rx(&rx, &alloc.totals(), &assign, weights)?);
            let v = t.weighted(weights);
            best.offer(v, || point(t.clone(), assign.clone(), alloc.clone(), None), alloc.vector());
        }
    }
    Ok(())
}

/// Best weighted rate of a scheme at `cfg.beta` over every configuration it
/// may choose.
pub fn scheme_best_weighted(
    ec: &EffectiveChannel,
    sigma2: f64,
    cfg: &SchemeConfig,
    p_max: &[f64],
    opts: &SearchOptions,
    weights: &[f64],
) -> Result<OperatingPoint> {
    cfg.validate()?;
    if p_max.len() != ec.n_ue() || weights.len() != ec.n_ue() {
        return Err(Error::DimensionMismatch("p_max and weights need one entry per UE".into()));
    }
    if opts.power_steps < 2 || opts.split_steps < 2 {
        return Err(Error::InvalidConfig("power_steps and split_steps must be at least 2".into()));
    }
    let full = PowerAllocation::full_power(p_max);
    let plain = |rates: RateTuple| OperatingPoint { rates, assignment: None, allocation: full.clone(), backhaul_split: None };
    match cfg.scheme {
        Scheme::NoCoop => no_coop_best_weighted(ec, p_max, sigma2, weights),
        Scheme::Mac => Ok(plain(mac_rates(ec, &full, sigma2, weights)?)),
        Scheme::Fdm => Ok(plain(fdm_enhanced_rates(ec, sigma2, &full, cfg.beta, cfg.quantizer)?)),
        Scheme::DasN => Ok(plain(dasn_rates(ec, sigma2, cfg.beta, cfg.quantizer, &full)?)),
        Scheme::Dis => dis_best(ec, sigma2, cfg, p_max, opts, weights),
        Scheme::Cif => cif_best(ec, sigma2, cfg, p_max, weights),
        Scheme::DasD => dasd_best(ec, sigma2, cfg, p_max, opts, weights),
        Scheme::DasC => dasc_best(ec, sigma2, cfg, p_max, opts, weights),
    }
}

/// Best sum rate of a scheme at `cfg.beta`.
pub fn scheme_best(ec: &EffectiveChannel, sigma2: f64, cfg: &SchemeConfig, p_max: &[f64], opts: &SearchOptions) -> Result<OperatingPoint> {
    scheme_best_weighted(ec, sigma2, cfg, p_max, opts, &vec![1.0; ec.n_ue()])
}

fn canonical_pmax(p_max: &[f64], o: &Orientation) -> Vec<f64> {
    vec![p_max[o.u], p_max[1 - o.u]]
}

fn dis_best(ec: &EffectiveChannel, sigma2: f64, cfg: &SchemeConfig, p_max: &[f64], opts: &SearchOptions, weights: &[f64]) -> Result<OperatingPoint> {
    require_two_cell(ec)?;
    let mut best = Best::new();
    offer_single_bs(&mut best, ec, sigma2, p_max, weights)?;
    let sc = cfg.quantizer == Quantizer::SourceCoded;
    for o in Orientation::ALL {
        let rx = o.rx(ec, sigma2);
        let order = o.ue_order();
        for alloc in power_grid(opts.power_steps, SchemeKind::Dis { spc: cfg.spc }, &canonical_pmax(p_max, &o))? {
            let kept = alloc.get(0, MessageTag::DisKept);
            let fwd = alloc.get(0, MessageTag::DisForwarded);
            let p2 = alloc.get(1, MessageTag::Single);
            let r = dis_canonical(&rx, kept, fwd, p2, cfg.beta, sc)?;
            let t = RateTuple::new(r.to_vec()).unpermute(&order);
            let original = alloc.relabel(&order);
            best.offer(t.weighted(weights), || point(t.clone(), o.assignment(), original.clone(), None), original.vector());
        }
        if !cfg.spc {
            continue;
        }
        let pm = canonical_pmax(p_max, &o);
        for p2 in [0.0, pm[1]] {
            let Some(fwd) = dis_matched_split(&rx, pm[0], p2, cfg.beta, sc)? else { continue };
            let r = dis_canonical(&rx, pm[0] - fwd, fwd, p2, cfg.beta, sc)?;
            let t = RateTuple::new(r.to_vec()).unpermute(&order);
            let powers = [(0, MessageTag::DisKept, pm[0] - fwd), (0, MessageTag::DisForwarded, fwd), (1, MessageTag::Single, p2)];
            let alloc = PowerAllocation { powers: powers.iter().map(|&(k, tag, v)| (MessageId::new(k, tag), v)).collect(), p_max: pm.clone() };
            let original = alloc.relabel(&order);
            best.offer(t.weighted(weights), || point(t.clone(), o.assignment(), original.clone(), None), original.vector());
        }
    }
    best.into_point()
}

/// Forwarded power at which the forwarded message exactly fills the backhaul;
/// `None` when forwarding everything fits.
fn dis_matched_split(rx: &Rx, total: f64, p2: f64, beta: f64, sc: bool) -> Result<Option<f64>> {
    let excess = |fwd: f64| -> Result<f64> {
        let kept = total - fwd;
        let pt = [total, p2];
        let decode = ld(&(rx.nn_bs(0, &pt) + rx.gram_bs(0, &[kept, p2])), &rx.gram_bs(0, &[fwd, 0.0]))?;
        let side = if sc { ld(&(rx.nn_bs(1, &pt) + rx.gram_bs(1, &[kept, p2])), &rx.gram_bs(1, &[fwd, 0.0]))? } else { 0.0 };
        Ok(decode - beta - side)
    };
    if total <= 0.0 || excess(total)? <= 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, total);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

fn cif_best(ec: &EffectiveChannel, sigma2: f64, cfg: &SchemeConfig, p_max: &[f64], weights: &[f64]) -> Result<OperatingPoint> {
    require_two_cell(ec)?;
    let mut best = Best::new();
    offer_single_bs(&mut best, ec, sigma2, p_max, weights)?;
    for o in Orientation::ALL {
        let rx = o.rx(ec, sigma2);
        let order = o.ue_order();
        for alloc in power_grid(2, SchemeKind::SingleMessage, &canonical_pmax(p_max, &o))? {
            let p = alloc.totals();
            let r = cif_canonical(&rx, p[0], p[1], cfg.beta, cfg.quantizer)?;
            let t = RateTuple::new(r.to_vec()).unpermute(&order);
            let original = alloc.relabel(&order);
            best.offer(t.weighted(weights), || point(t.clone(), o.assignment(), original.clone(), None), original.vector());
        }
    }
    best.into_point()
}

fn dasd_best(ec: &EffectiveChannel, sigma2: f64, cfg: &SchemeConfig, p_max: &[f64], opts: &SearchOptions, weights: &[f64]) -> Result<OperatingPoint> {
    require_two_cell(ec)?;
    let mut best = Best::new();
    offer_single_bs(&mut best, ec, sigma2, p_max, weights)?;
    for u in 0..2 {
        let order = [u, 1 - u];
        let rx = Rx::new(&ec.permuted(&[0, 1], &order), sigma2);
        let assign = Assignment::new(vec![if u == 0 { 0 } else { 1 }, if u == 0 { 1 } else { 0 }]);
        for alloc in power_grid(2, SchemeKind::SingleMessage, &[p_max[u], p_max[1 - u]])? {
            let p = alloc.totals();
            let original = alloc.relabel(&order);
            for s in 0..opts.split_steps {
                let split = s as f64 / (opts.split_steps - 1) as f64;
                let budgets = [cfg.beta * split, cfg.beta * (1.0 - split)];
                let r = dasd_canonical(&rx, [p[0], p[1]], budgets, cfg.quantizer)?;
                let t = RateTuple::new(r.to_vec()).unpermute(&order);
                best.offer(t.weighted(weights), || point(t.clone(), assign.clone(), original.clone(), Some(split)), original.vector());
            }
        }
    }
    best.into_point()
}

fn dasc_best(ec: &EffectiveChannel, sigma2: f64, cfg: &SchemeConfig, p_max: &[f64], opts: &SearchOptions, weights: &[f64]) -> Result<OperatingPoint> {
    require_two_cell(ec)?;
    let mut best = Best::new();
    for o in Orientation::ALL {
        // without split messages the served-UE label is irrelevant
        if !cfg.spc && o.u != o.b {
            continue;
        }
        let rx = o.rx(ec, sigma2);
        let order = o.ue_order();
        let w = [weights[o.u], weights[1 - o.u]];
        for alloc in power_grid(opts.power_steps, SchemeKind::Dasc { spc: cfg.spc }, &canonical_pmax(p_max, &o))? {
            let pw = DascPowers::from_alloc(&alloc, 0);
            let floor = best.value - 2.0 * TIE_TOLERANCE;
            let Some(r) = dasc_canonical(&rx, &pw, cfg.beta, cfg.quantizer, w, floor)? else {
                continue;
            };
            let t = RateTuple::new(r.to_vec()).unpermute(&order);
            let original = alloc.relabel(&order);
            best.offer(t.weighted(weights), || point(t.clone(), o.assignment(), original.clone(), None), original.vector());
        }
    }
    best.into_point()
}
