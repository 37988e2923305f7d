//! Scenario files: one `key = value` per line, `#` starts a comment.
//!
//! ```text
//! # cell-edge, two pilots
//! d1 = 0.5
//! d2 = 0.5
//! phi1 = pi/2
//! n_pilots = 2
//! ```
//!
//! `n_pilots = inf` selects perfect channel knowledge. `raw_channel` replaces
//! the geometric model by an explicit matrix, rows separated by `;`, entries
//! by `,`, each entry a real or complex number such as `0.5` or `1+2i`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{build_scenario_channel, effective_channel, estimation_error_variance, ChannelMatrix, CsiConfig, EffectiveChannel, Scenario2x2};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Malformed scenario file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Everything a scenario file can set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub d1: f64,
    pub d2: f64,
    /// Present for three-cell experiments.
    pub d3: Option<f64>,
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi12: f64,
    pub sigma2: f64,
    /// `None` means perfect channel knowledge.
    pub n_pilots: Option<u32>,
    pub pilot_power: f64,
    pub pilot_noise: f64,
    pub n_bs_antennas: usize,
    /// Explicit channel as rows of `[re, im]` pairs.
    pub raw_channel: Option<Vec<Vec<[f64; 2]>>>,
}

impl Default for Scenario {
    fn default() -> Self {
        let s = Scenario2x2::default();
        Self {
            d1: s.d1,
            d2: s.d2,
            d3: None,
            theta: s.theta,
            phi1: s.phi1,
            phi2: s.phi2,
            phi12: s.phi12,
            sigma2: s.sigma2,
            n_pilots: None,
            pilot_power: 1.0,
            pilot_noise: s.sigma2,
            n_bs_antennas: 2,
            raw_channel: None,
        }
    }
}

const KEYS: [&str; 13] = [
    "d1",
    "d2",
    "d3",
    "theta",
    "phi1",
    "phi2",
    "phi12",
    "sigma2",
    "n_pilots",
    "pilot_power",
    "pilot_noise",
    "n_bs_antennas",
    "raw_channel",
];

/// Reads a real number, allowing multiples of π written `pi`, `pi/2`, `3*pi/4`.
fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = f64::from_str(t) {
        return Ok(v);
    }
    if t.contains("pi") {
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim().parse::<f64>().map_err(|_| format!("bad denominator in `{t}`"))?),
            None => (t, 1.0),
        };
        let factor = match num.strip_suffix("pi").map(str::trim) {
            Some("") => 1.0,
            Some(f) => f.trim_end_matches('*').trim().parse::<f64>().map_err(|_| format!("bad factor in `{t}`"))?,
            None => return Err(format!("cannot read `{t}` as a number")),
        };
        return Ok(factor * PI / den);
    }
    Err(format!("cannot read `{t}` as a number"))
}

fn parse_matrix(s: &str) -> std::result::Result<Vec<Vec<[f64; 2]>>, String> {
    let rows: Vec<Vec<[f64; 2]>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|e| {
                    let e = e.trim();
                    parse_real(e).map(|v| [v, 0.0]).or_else(|_| {
                        Complex64::from_str(e).map(|z| [z.re, z.im]).map_err(|_| format!("cannot read matrix entry `{e}`"))
                    })
                })
                .collect()
        })
        .collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() || rows[0].is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err("matrix rows must be nonempty and of equal length".into());
    }
    Ok(rows)
}

/// Parses a scenario file; later lines override earlier ones, unknown keys fail.
pub fn parse_scenario(text: &str) -> std::result::Result<Scenario, ParseError> {
    let mut s = Scenario::default();
    let mut pilot_noise_set = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ParseError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(err(format!("missing value for `{key}`")));
        }
        let real = || parse_real(value).map_err(err);
        let count = || value.parse::<u64>().map_err(|_| err(format!("`{key}` needs a nonnegative integer, got `{value}`")));
        match key {
            "d1" => s.d1 = real()?,
            "d2" => s.d2 = real()?,
            "d3" => s.d3 = Some(real()?),
            "theta" => s.theta = real()?,
            "phi1" => s.phi1 = real()?,
            "phi2" => s.phi2 = real()?,
            "phi12" => s.phi12 = real()?,
            "sigma2" => s.sigma2 = real()?,
            "n_pilots" => {
                s.n_pilots = if matches!(value, "inf" | "perfect") {
                    None
                } else {
                    Some(u32::try_from(count()?).map_err(|_| err("n_pilots is too large".into()))?)
                }
            }
            "pilot_power" => s.pilot_power = real()?,
            "pilot_noise" => {
                s.pilot_noise = real()?;
                pilot_noise_set = true;
            }
            "n_bs_antennas" => s.n_bs_antennas = usize::try_from(count()?).map_err(|_| err("n_bs_antennas is too large".into()))?,
            "raw_channel" => s.raw_channel = Some(parse_matrix(value).map_err(err)?),
            _ => unreachable!("key list and match arms disagree"),
        }
    }
    if !pilot_noise_set {
        s.pilot_noise = s.sigma2;
    }
    Ok(s)
}

impl Scenario {
    pub fn csi(&self) -> CsiConfig {
        match self.n_pilots {
            None => CsiConfig::perfect(),
            Some(n) => CsiConfig::pilots(n, self.pilot_power, self.pilot_noise),
        }
    }

    /// Two-cell geometry; the phases are ignored for explicit channels.
    pub fn two_cell(&self) -> Scenario2x2 {
        Scenario2x2 { d1: self.d1, d2: self.d2, theta: self.theta, phi1: self.phi1, phi2: self.phi2, phi12: self.phi12, sigma2: self.sigma2 }
    }

    pub fn is_three_cell(&self) -> bool {
        self.d3.is_some()
    }

    /// Effective channel of a two-cell scenario or of the explicit matrix.
    pub fn effective_channel(&self) -> Result<EffectiveChannel> {
        if self.is_three_cell() {
            return Err(Error::Unsupported("three-cell scenarios have random channels; use the montecarlo command".into()));
        }
        let ch = match &self.raw_channel {
            Some(rows) => {
                let h = CMatrix::from_fn(rows.len(), rows[0].len(), |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
                ChannelMatrix::from_raw(h, self.n_bs_antennas)?
            }
            None => build_scenario_channel(&self.two_cell(), self.n_bs_antennas)?,
        };
        if !(self.sigma2 > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        effective_channel(&ch, estimation_error_variance(&self.csi())?)
    }

    /// Common distance of a three-cell scenario.
    pub fn common_distance(&self) -> Result<f64> {
        let d3 = self.d3.ok_or_else(|| Error::InvalidConfig("three-cell runs need d3".into()))?;
        if self.d1 != self.d2 || self.d1 != d3 {
            return Err(Error::InvalidConfig(format!("three-cell runs need d1 = d2 = d3, got {}, {}, {d3}", self.d1, self.d2)));
        }
        Ok(d3)
    }
}
