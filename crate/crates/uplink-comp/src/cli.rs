//! Batch driver behind the `uplink-comp` binary.
//!
//! Each run reads a scenario file (or a manifest of an earlier run), resolves
//! every parameter into a [`RunConfig`], writes CSV results into the output
//! directory and records the resolved configuration in `manifest.json`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 malformed input, 3 infeasible
//! configuration.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baselines::{mac_sum_rate, no_coop_best};
use crate::allocation::PowerAllocation;
use crate::channel::CsiConfig;
use crate::config::{parse_scenario, Scenario};
use crate::error::Error;
use crate::montecarlo::{backhaul_efficiency, run_montecarlo, MonteCarloConfig, Strategy};
use crate::perf::{best_scheme_map, coding_gain_analysis, comp_gain_sweep, linear_grid, performance_region, sum_rate_curve, MAP_SCHEMES};
use crate::schemes::{Quantizer, Scheme, SchemeConfig, SearchOptions};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Rate tuples on a weight × backhaul grid and their hull.
    Region,
    /// Sum rate against backhaul per scheme.
    Curve,
    /// Best scheme over a grid of UE locations.
    Map,
    /// Three-cell Rayleigh-fading comparison.
    Montecarlo,
    /// Cooperation gain and coding gain sweeps over distance.
    Gains,
}

impl Command {
    fn label(&self) -> &'static str {
        match self {
            Command::Region => "region",
            Command::Curve => "curve",
            Command::Map => "map",
            Command::Montecarlo => "montecarlo",
            Command::Gains => "gains",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Debug, Parser)]
#[command(name = "uplink-comp", version, about = "Rate/backhaul trade-offs of uplink base-station cooperation")]
struct Cli {
    command: Command,
    /// Scenario file, or a manifest.json of an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Base seed of the Monte Carlo trials.
    #[arg(long)]
    seed: Option<u64>,
    /// practical, rd or sc; all three when omitted.
    #[arg(long)]
    quantizer: Option<String>,
    /// Backhaul grid `start:step:end`.
    #[arg(long, allow_hyphen_values = true)]
    beta_grid: Option<String>,
    /// Backhaul of the map command.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    power_steps: Option<usize>,
    #[arg(long)]
    split_steps: Option<usize>,
    #[arg(long)]
    weight_steps: Option<usize>,
    /// Comma-separated scheme labels.
    #[arg(long)]
    schemes: Option<String>,
    /// Superposition coding for the schemes that support it.
    #[arg(long, value_enum)]
    spc: Option<OnOff>,
    #[arg(long)]
    trials: Option<usize>,
    /// Distance grid `start:step:end` for map and gains.
    #[arg(long)]
    d_grid: Option<String>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub scenario_file: String,
    pub scenario: Scenario,
    pub out: PathBuf,
    pub seed: u64,
    pub quantizers: Vec<Quantizer>,
    pub beta_grid: Vec<f64>,
    pub map_beta: f64,
    pub power_steps: usize,
    pub split_steps: usize,
    pub weight_steps: usize,
    pub schemes: Vec<Scheme>,
    pub spc: bool,
    pub trials: usize,
    pub d_grid: Vec<f64>,
}

/// Written next to the results; feeding it back as `--config` repeats the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

#[derive(Debug)]
enum Failure {
    Parse(String),
    Infeasible(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Parse(_) => EXIT_PARSE,
            Failure::Infeasible(_) => EXIT_INFEASIBLE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Unsupported(_) | Error::DimensionMismatch(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn parse_grid(flag: &str, s: &str) -> Outcome<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::Parse(format!("--{flag} expects start:step:end, got `{s}`")))?;
    if nums.len() != 3 {
        return Err(Failure::Parse(format!("--{flag} expects start:step:end, got `{s}`")));
    }
    linear_grid(nums[0], nums[1], nums[2]).map_err(|e| Failure::Infeasible(format!("--{flag}: {e}")))
}

fn parse_quantizer(s: &str) -> Outcome<Quantizer> {
    Quantizer::parse(s).ok_or_else(|| Failure::Parse(format!("unknown quantizer `{s}` (expected practical, rd or sc)")))
}

fn parse_schemes(s: &str) -> Outcome<Vec<Scheme>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| Scheme::parse(t).ok_or_else(|| Failure::Parse(format!("unknown scheme `{t}`"))))
        .collect()
}

fn default_config(command: Command, scenario_file: String, scenario: Scenario) -> RunConfig {
    let (beta_grid, d_grid, schemes) = match command {
        Command::Montecarlo => ((0..=30).map(f64::from).collect(), Vec::new(), Vec::new()),
        Command::Map => (Vec::new(), (0..=20).map(|i| f64::from(i) * 0.05).collect(), MAP_SCHEMES.to_vec()),
        Command::Gains => ((0..=6).map(|i| f64::from(i) * 2.0).collect(), vec![0.2, 0.3, 0.4, 0.5, 0.6], Vec::new()),
        Command::Region => (
            (0..=6).map(|i| f64::from(i) * 2.0).collect(),
            Vec::new(),
            vec![Scheme::NoCoop, Scheme::Dis, Scheme::Cif, Scheme::DasD, Scheme::DasC, Scheme::Fdm],
        ),
        Command::Curve => ((0..=6).map(|i| f64::from(i) * 2.0).collect(), Vec::new(), Scheme::ALL.to_vec()),
    };
    let quantizers = if command == Command::Map { vec![Quantizer::RateDistortion] } else { Quantizer::ALL.to_vec() };
    let opts = SearchOptions::default();
    RunConfig {
        command,
        scenario_file,
        scenario,
        out: PathBuf::from("out"),
        seed: 0,
        quantizers,
        beta_grid,
        map_beta: 4.0,
        power_steps: opts.power_steps,
        split_steps: opts.split_steps,
        weight_steps: 11,
        schemes,
        spc: true,
        trials: 500,
        d_grid,
    }
}

fn resolve(cli: &Cli) -> Outcome<RunConfig> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Infeasible(format!("cannot read config {}: {e}", cli.config.display())))?;
    let mut cfg = if text.trim_start().starts_with('{') {
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: line {}: {e}", cli.config.display(), e.line())))?;
        if m.config.command != cli.command {
            return Err(Failure::Infeasible(format!(
                "manifest was written by `{}`, not `{}`",
                m.config.command.label(),
                cli.command.label()
            )));
        }
        m.config
    } else {
        let scenario = parse_scenario(&text).map_err(|e| Failure::Parse(format!("{}: {e}", cli.config.display())))?;
        default_config(cli.command, cli.config.display().to_string(), scenario)
    };
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(q) = &cli.quantizer {
        cfg.quantizers = vec![parse_quantizer(q)?];
    }
    if let Some(g) = &cli.beta_grid {
        cfg.beta_grid = parse_grid("beta-grid", g)?;
    }
    if let Some(b) = cli.beta {
        cfg.map_beta = b;
    }
    if let Some(n) = cli.power_steps {
        cfg.power_steps = n;
    }
    if let Some(n) = cli.split_steps {
        cfg.split_steps = n;
    }
    if let Some(n) = cli.weight_steps {
        cfg.weight_steps = n;
    }
    if let Some(s) = &cli.schemes {
        cfg.schemes = parse_schemes(s)?;
    }
    if let Some(s) = cli.spc {
        cfg.spc = s == OnOff::On;
    }
    if let Some(n) = cli.trials {
        cfg.trials = n;
    }
    if let Some(g) = &cli.d_grid {
        cfg.d_grid = parse_grid("d-grid", g)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

/// Checks every precondition before any computation starts.
fn validate(cfg: &RunConfig) -> Outcome<()> {
    let bad = |m: String| Err(Failure::Infeasible(m));
    if cfg.power_steps < 2 || cfg.split_steps < 2 {
        return bad("power_steps and split_steps must be at least 2".into());
    }
    if cfg.quantizers.is_empty() {
        return bad("quantizer set is empty".into());
    }
    let s = &cfg.scenario;
    match cfg.command {
        Command::Curve | Command::Region => {
            if cfg.schemes.is_empty() {
                return bad("scheme set is empty".into());
            }
            crate::perf::check_beta_grid(&cfg.beta_grid)?;
            let ec = s.effective_channel()?;
            if ec.n_bs() != 2 || ec.n_ue() != 2 {
                if let Some(sch) = cfg.schemes.iter().find(|sch| sch.two_cell_only()) {
                    return bad(format!("scheme `{}` needs 2 base stations and 2 UEs", sch.label()));
                }
            }
            if cfg.command == Command::Region && cfg.weight_steps < 2 {
                return bad("weight_steps must be at least 2".into());
            }
        }
        Command::Map => {
            if cfg.quantizers.len() != 1 {
                return bad("map needs exactly one quantizer".into());
            }
            if cfg.schemes != MAP_SCHEMES.to_vec() {
                let labels: Vec<&str> = MAP_SCHEMES.iter().map(|s| s.label()).collect();
                return bad(format!("map compares the fixed scheme set {}", labels.join(",")));
            }
            if !(cfg.map_beta >= 0.0) {
                return bad(format!("beta must be nonnegative, got {}", cfg.map_beta));
            }
            geometric_two_cell(s)?;
            check_distances(&cfg.d_grid)?;
        }
        Command::Gains => {
            crate::perf::check_beta_grid(&cfg.beta_grid)?;
            geometric_two_cell(s)?;
            check_distances(&cfg.d_grid)?;
        }
        Command::Montecarlo => {
            mc_config(cfg)?.validate()?;
        }
    }
    Ok(())
}

fn geometric_two_cell(s: &Scenario) -> Outcome<()> {
    if s.raw_channel.is_some() || s.is_three_cell() {
        return Err(Failure::Infeasible("this command needs a geometric two-cell scenario (no raw_channel, no d3)".into()));
    }
    s.two_cell().validate()?;
    s.effective_channel()?;
    Ok(())
}

fn check_distances(grid: &[f64]) -> Outcome<()> {
    if grid.is_empty() {
        return Err(Failure::Infeasible("distance grid is empty".into()));
    }
    if let Some(d) = grid.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Failure::Infeasible(format!("distances must lie in [0, 1], got {d}")));
    }
    Ok(())
}

fn mc_config(cfg: &RunConfig) -> Outcome<MonteCarloConfig> {
    let s = &cfg.scenario;
    let d = s.common_distance()?;
    let mut mc = MonteCarloConfig::new(d, s.sigma2, s.csi());
    mc.theta = s.theta;
    mc.n_bs_antennas = s.n_bs_antennas;
    mc.n_trials = cfg.trials;
    mc.base_seed = cfg.seed;
    mc.beta_grid = cfg.beta_grid.clone();
    mc.quantizers = cfg.quantizers.clone();
    Ok(mc)
}

/// Decimal with nine significant digits.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s == "-0" || s.chars().all(|c| c == '0' || c == '.' || c == '-') {
        "0".into()
    } else {
        s
    }
}

fn csv_rates(out: &mut String, rates: &[f64]) {
    for r in rates {
        let _ = write!(out, ",{}", fmt9(*r));
    }
}

fn rate_header(k: usize) -> String {
    let mut h = String::from("beta,scheme,quantizer,sum_rate");
    for i in 1..=k {
        let _ = write!(h, ",r{i}");
    }
    h
}

fn quantizer_label(scheme: Scheme, q: Quantizer) -> &'static str {
    if uses_quantizer(scheme) {
        q.label()
    } else {
        "-"
    }
}

fn uses_quantizer(scheme: Scheme) -> bool {
    !matches!(scheme, Scheme::NoCoop | Scheme::Mac)
}

fn supports_spc(scheme: Scheme) -> bool {
    matches!(scheme, Scheme::Dis | Scheme::DasC)
}

/// `(scheme, quantizer)` pairs in output order; backhaul-free schemes once.
fn scheme_configs(cfg: &RunConfig) -> Vec<SchemeConfig> {
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        let qs: &[Quantizer] = if uses_quantizer(scheme) { &cfg.quantizers } else { &cfg.quantizers[..1] };
        for &q in qs {
            out.push(SchemeConfig::new(scheme, q, cfg.spc && supports_spc(scheme), 0.0));
        }
    }
    out
}

fn write_file(dir: &Path, name: &str, body: &str, outputs: &mut Vec<String>) -> Outcome<()> {
    std::fs::write(dir.join(name), body).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", dir.join(name).display())))?;
    outputs.push(name.to_string());
    Ok(())
}

fn opts(cfg: &RunConfig) -> SearchOptions {
    SearchOptions { power_steps: cfg.power_steps, split_steps: cfg.split_steps }
}

fn run_curve(cfg: &RunConfig, outputs: &mut Vec<String>) -> Outcome<serde_json::Value> {
    let s = &cfg.scenario;
    let ec = s.effective_channel()?;
    let p_max = vec![1.0; ec.n_ue()];
    let mut body = rate_header(ec.n_ue());
    body.push('\n');
    for sc in scheme_configs(cfg) {
        let curve = sum_rate_curve(&ec, s.sigma2, &p_max, &sc, &cfg.beta_grid, &opts(cfg))?;
        for p in &curve.points {
            let _ = write!(body, "{},{},{},{}", fmt9(p.beta), sc.scheme.label(), quantizer_label(sc.scheme, sc.quantizer), fmt9(p.sum_rate()));
            csv_rates(&mut body, &p.rates.rates);
            body.push('\n');
        }
    }
    write_file(&cfg.out, "curve.csv", &body, outputs)?;
    Ok(serde_json::json!({
        "mac_sum_rate": mac_sum_rate(&ec, &PowerAllocation::full_power(&p_max), s.sigma2)?,
        "no_coop_sum_rate": no_coop_best(&ec, &p_max, s.sigma2)?.sum_rate(),
    }))
}

fn run_region(cfg: &RunConfig, outputs: &mut Vec<String>) -> Outcome<serde_json::Value> {
    let s = &cfg.scenario;
    let ec = s.effective_channel()?;
    let k = ec.n_ue();
    let p_max = vec![1.0; k];
    let configs = scheme_configs(cfg);
    let region = performance_region(&ec, s.sigma2, &p_max, &configs, &cfg.beta_grid, cfg.weight_steps, &opts(cfg))?;
    let mut header = rate_header(k);
    for i in 1..=k {
        let _ = write!(header, ",w{i}");
    }
    let rows = |points: &[crate::perf::RateBackhaulPoint], weights_of: &dyn Fn(usize) -> Vec<f64>| -> String {
        let mut body = header.clone();
        body.push('\n');
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let rank = |c: &SchemeConfig| configs.iter().position(|x| x.scheme == c.scheme && x.quantizer == c.quantizer).unwrap_or(usize::MAX);
        idx.sort_by(|&a, &b| rank(&points[a].config).cmp(&rank(&points[b].config)).then(points[a].beta.total_cmp(&points[b].beta)));
        for i in idx {
            let p = &points[i];
            let _ = write!(
                body,
                "{},{},{},{}",
                fmt9(p.beta),
                p.config.scheme.label(),
                quantizer_label(p.config.scheme, p.config.quantizer),
                fmt9(p.rates.sum())
            );
            csv_rates(&mut body, &p.rates.rates);
            csv_rates(&mut body, &weights_of(i));
            body.push('\n');
        }
        body
    };
    // points are generated weight-major, then β, then configuration
    let per_weight = cfg.beta_grid.len() * configs.len();
    let all = rows(&region.points, &|i| region.weights[i / per_weight].clone());
    write_file(&cfg.out, "region.csv", &all, outputs)?;
    let hull_weights: Vec<Vec<f64>> = region
        .hull
        .iter()
        .map(|h| {
            region.weights.iter().cloned().max_by(|a, b| h.rates.weighted(a).total_cmp(&h.rates.weighted(b))).unwrap_or_default()
        })
        .collect();
    let hull = rows(&region.hull, &|i| hull_weights[i].clone());
    write_file(&cfg.out, "region_hull.csv", &hull, outputs)?;
    Ok(serde_json::json!({ "n_points": region.points.len(), "n_hull_points": region.hull.len() }))
}

fn run_map(cfg: &RunConfig, outputs: &mut Vec<String>) -> Outcome<serde_json::Value> {
    let s = &cfg.scenario;
    let map = best_scheme_map(
        &s.two_cell(),
        &s.csi(),
        s.n_bs_antennas,
        &cfg.d_grid,
        &cfg.d_grid,
        cfg.map_beta,
        cfg.quantizers[0],
        cfg.spc,
        &opts(cfg),
    )?;
    let mut body = String::from("d1,d2,winner,no_coop,adaptation_gain");
    for sch in MAP_SCHEMES {
        let _ = write!(body, ",{}", sch.label());
    }
    body.push('\n');
    let mut adaptive = 0;
    for c in &map.cells {
        let _ = write!(body, "{},{},{},{},{}", fmt9(c.d1), fmt9(c.d2), c.winner.label(), fmt9(c.no_coop), u8::from(c.adaptation_gain));
        adaptive += usize::from(c.adaptation_gain);
        for (_, v) in &c.sum_rates {
            let _ = write!(body, ",{}", fmt9(*v));
        }
        body.push('\n');
    }
    write_file(&cfg.out, "map.csv", &body, outputs)?;
    Ok(serde_json::json!({ "cells": map.cells.len(), "adaptation_cells": adaptive }))
}

fn run_mc(cfg: &RunConfig, outputs: &mut Vec<String>) -> Outcome<serde_json::Value> {
    let mc = mc_config(cfg)?;
    let r = run_montecarlo(&mc)?;
    let mut body = String::from("beta,strategy,quantizer,mean,half_width\n");
    for c in &r.curves {
        for (i, b) in mc.beta_grid.iter().enumerate() {
            let q = c.quantizer.map_or("-", |q| q.label());
            let _ = writeln!(body, "{},{},{},{},{}", fmt9(*b), c.strategy.label(), q, fmt9(c.mean[i]), fmt9(c.half_width[i]));
        }
    }
    write_file(&cfg.out, "montecarlo.csv", &body, outputs)?;
    let base = r.curve(Strategy::IrcAssignment, None).map_or(f64::NAN, |c| c.mean[0]);
    let mac = r.curve(Strategy::Mac, None).map_or(f64::NAN, |c| c.mean[0]);
    let mut eff = serde_json::Map::new();
    for &q in &mc.quantizers {
        let hybrid = &r.curve(Strategy::Hybrid, Some(q)).expect("hybrid curve for every quantizer").mean;
        let v = match backhaul_efficiency(&mc.beta_grid, hybrid, base, mac) {
            Ok(e) => serde_json::json!({ "bits_per_bit": e }),
            Err(e) => serde_json::json!({ "out_of_range": true, "max_fraction": e.max_fraction }),
        };
        eff.insert(q.label().to_string(), v);
    }
    Ok(serde_json::json!({ "baseline": base, "mac": mac, "backhaul_efficiency": eff }))
}

fn run_gains(cfg: &RunConfig, outputs: &mut Vec<String>) -> Outcome<serde_json::Value> {
    let s = &cfg.scenario;
    let template = s.two_cell();
    let csis: Vec<CsiConfig> = [1u32, 2, 4]
        .iter()
        .map(|&n| CsiConfig::pilots(n, s.pilot_power, s.pilot_noise))
        .chain(std::iter::once(CsiConfig::perfect()))
        .collect();
    let comp = comp_gain_sweep(&template, &csis, s.n_bs_antennas, &cfg.d_grid)?;
    let mut body = String::from("d,n_pilots,no_coop,mac,gain\n");
    for p in &comp {
        let np = p.n_pilots.map_or("inf".to_string(), |n| n.to_string());
        let _ = writeln!(body, "{},{},{},{},{}", fmt9(p.d), np, fmt9(p.no_coop), fmt9(p.mac), fmt9(p.gain()));
    }
    write_file(&cfg.out, "comp_gain.csv", &body, outputs)?;
    let rows = coding_gain_analysis(&template, &s.csi(), s.n_bs_antennas, &cfg.d_grid, &cfg.beta_grid, &opts(cfg))?;
    let mut body = String::from("d,scheme,source_coding,superposition,both\n");
    for r in &rows {
        let _ = writeln!(body, "{},{},{},{},{}", fmt9(r.d), r.scheme.label(), fmt9(r.source_coding), fmt9(r.superposition), fmt9(r.both));
    }
    write_file(&cfg.out, "coding_gain.csv", &body, outputs)?;
    Ok(serde_json::json!({ "comp_points": comp.len(), "coding_rows": rows.len() }))
}

/// Runs a resolved configuration and writes results plus the manifest.
pub fn execute(cfg: &RunConfig) -> std::result::Result<Manifest, (i32, String)> {
    let fail = |f: Failure| {
        let code = f.code();
        let msg = match f {
            Failure::Parse(m) | Failure::Infeasible(m) | Failure::Runtime(m) => m,
        };
        (code, msg)
    };
    validate(cfg).map_err(fail)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| (EXIT_RUNTIME, format!("cannot create {}: {e}", cfg.out.display())))?;
    let mut outputs = Vec::new();
    let summary = match cfg.command {
        Command::Curve => run_curve(cfg, &mut outputs),
        Command::Region => run_region(cfg, &mut outputs),
        Command::Map => run_map(cfg, &mut outputs),
        Command::Montecarlo => run_mc(cfg, &mut outputs),
        Command::Gains => run_gains(cfg, &mut outputs),
    }
    .map_err(fail)?;
    let manifest = Manifest {
        tool: "uplink-comp".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        outputs,
        summary,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    std::fs::write(cfg.out.join("manifest.json"), json + "\n").map_err(|e| (EXIT_RUNTIME, format!("cannot write manifest: {e}")))?;
    Ok(manifest)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_INFEASIBLE;
        }
        // a pool built earlier in the same process stays in place
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Parse(m) => eprintln!("parse error: {m}"),
                Failure::Infeasible(m) => eprintln!("infeasible configuration: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            return code;
        }
    };
    match execute(&cfg) {
        Ok(m) => {
            for o in &m.outputs {
                println!("{}", cfg.out.join(o).display());
            }
            0
        }
        Err((code, msg)) => {
            match code {
                EXIT_INFEASIBLE => eprintln!("infeasible configuration: {msg}"),
                _ => eprintln!("error: {msg}"),
            }
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(6.971603123456), "6.97160312");
        assert_eq!(fmt9(0.000123456789123), "0.000123456789");
        assert_eq!(fmt9(12.0), "12.0000000");
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(-1.5), "-1.50000000");
        assert_eq!(fmt9(123456789012.0), "123456789012");
    }

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("beta-grid", "0:2:6").unwrap(), vec![0.0, 2.0, 4.0, 6.0]);
        assert!(matches!(parse_grid("beta-grid", "0:2").unwrap_err(), Failure::Parse(_)));
        assert!(matches!(parse_grid("beta-grid", "0:-1:6").unwrap_err(), Failure::Infeasible(_)));
    }

    #[test]
    fn scheme_lists_parse() {
        assert_eq!(parse_schemes("dis, dasc").unwrap(), vec![Scheme::Dis, Scheme::DasC]);
        assert!(parse_schemes("").unwrap().is_empty());
        assert!(parse_schemes("dis,foo").is_err());
    }

    #[test]
    fn backhaul_free_schemes_appear_once() {
        let mut cfg = default_config(Command::Curve, String::new(), Scenario::default());
        cfg.schemes = vec![Scheme::Mac, Scheme::DasC];
        let c = scheme_configs(&cfg);
        assert_eq!(c.len(), 1 + Quantizer::ALL.len());
        assert!(!c[0].spc);
        assert!(c[1].spc);
    }
}
