//! Parameter-sweep runners behind the `sparsekey` binary.
//!
//! A [`SweepConfig`] is read from flat `key=value` text (one pair per line,
//! `#` starts a comment). Missing keys take defaults, and the grid defaults
//! depend on the command. The resolved configuration is echoed at the top
//! of every CSV output as `# key=value` lines, which parse back to the same
//! configuration through [`SweepConfig::from_echo`].
//!
//! All randomness derives from the single `seed`; grid point `i` of command
//! `c` draws from `mix(seed, c, i)`, so outputs are byte-identical across
//! runs and across sequential and parallel execution.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::ergodic::{onoff_optimize, sweep, wideband_approx, Method, OnOffOptions, RateEvaluator, RateOptions, SweepAxis, SweepOptions};
use crate::exec::{chunk_rng, mix_seed, Execution};
use crate::leakage::{check_leakage_bound, random_scheme_reports, ToySource, MAX_BLOCK};
use crate::model::{ChannelConfig, DEFAULT_PMF_CAP};
use crate::mutual_info::{is_eve_degraded, vector_mi_closed_form, PowerProfile};
use crate::optimize::{linear_grid, log_grid};
use crate::oracle::{vector_mi_logdet_oracle, SoundingDesign};
use crate::outage::{exponent_curve, ratio_finite, ratio_wideband, outage_mc, Conditioning, OutageMcOptions, OutageReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ErgodicSnr,
    ErgodicBandwidth,
    OutageExponent,
    OutageMc,
    Leakage,
    MiOracle,
    DegradedCheck,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::ErgodicSnr,
        Command::ErgodicBandwidth,
        Command::OutageExponent,
        Command::OutageMc,
        Command::Leakage,
        Command::MiOracle,
        Command::DegradedCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::ErgodicSnr => "ergodic-snr",
            Command::ErgodicBandwidth => "ergodic-bandwidth",
            Command::OutageExponent => "outage-exponent",
            Command::OutageMc => "outage-mc",
            Command::Leakage => "leakage",
            Command::MiOracle => "mi-oracle",
            Command::DegradedCheck => "degraded-check",
        }
    }

    fn tag(self) -> u64 {
        Command::ALL.iter().position(|&c| c == self).unwrap() as u64 + 101
    }

    fn uses_grid(self) -> bool {
        !matches!(self, Command::Leakage | Command::MiOracle)
    }

    /// `(min, max, points, log)` used when the config leaves the grid out.
    fn default_grid(self) -> (f64, f64, usize, bool) {
        match self {
            Command::ErgodicSnr => (0.01, 1000.0, 26, true),
            Command::ErgodicBandwidth => (1e6, 1e10, 30, true),
            Command::OutageExponent => (20e6, 2e9, 20, false),
            Command::OutageMc => (1.0, 1000.0, 7, true),
            Command::DegradedCheck => (0.0, 1.0, 11, false),
            Command::Leakage | Command::MiOracle => (0.0, 1.0, 2, false),
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Which mutual-information ratio `A` sets the outage backoff threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioMode {
    /// `A = 1/η²`.
    #[default]
    Wideband,
    /// `A = i_ab(x, x) / i_ae(x, x, η)` at the per-bin SNR `x = γ/(λL)`.
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sounding {
    #[default]
    Impulse,
    /// Maximal-length binary sequence, a different phase per configuration.
    Pn,
    /// Random-phase unit-modulus sequence.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub command: Command,
    pub channel: ChannelConfig,
    pub deltas: Option<Vec<f64>>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub grid_log: Option<bool>,
    /// SNR for commands whose grid is not SNR.
    pub snr: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub onoff: bool,
    pub a_mode: RatioMode,
    /// `None` means exact when `M` is small enough, Monte Carlo otherwise.
    pub method: Option<Method>,
    pub samples: u64,
    pub seed: Option<u64>,
    pub block_lengths: Vec<usize>,
    pub schemes: usize,
    pub key_margin: f64,
    pub public_margin: f64,
    pub bsc_main: f64,
    pub bsc_eve: f64,
    pub source_csv: Option<String>,
    pub configs: usize,
    pub bins: usize,
    pub sounding: Sounding,
    pub sounding_len: usize,
    pub sounding_csv: Option<String>,
    pub var_h: f64,
    pub var_he: f64,
    pub out: Option<String>,
    pub format: Format,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            command: Command::ErgodicSnr,
            channel: ChannelConfig::default(),
            deltas: None,
            grid_min: None,
            grid_max: None,
            grid_points: None,
            grid_log: None,
            snr: 10.0,
            alpha: 0.9,
            lambda: 1.0,
            onoff: false,
            a_mode: RatioMode::Wideband,
            method: None,
            samples: 100_000,
            seed: None,
            block_lengths: vec![2, 4, 6, 8],
            schemes: 20,
            key_margin: 0.25,
            public_margin: 0.25,
            bsc_main: 0.1,
            bsc_eve: 0.2,
            source_csv: None,
            configs: 100,
            bins: 8,
            sounding: Sounding::Impulse,
            sounding_len: 256,
            sounding_csv: None,
            var_h: 1.0,
            var_he: 1.0,
            out: None,
            format: Format::Csv,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse().map_err(|_| Error::Parse(format!("{key}: expected a number, got {v:?}")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| Error::Parse(format!("{key}: expected a non-negative integer, got {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Parse(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn parse_list<T>(key: &str, v: &str, f: fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| f(key, s)).collect()
}

fn opt_str(v: &str) -> Option<String> {
    (!v.is_empty()).then(|| v.to_string())
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl SweepConfig {
    /// Sets one key. Empty values clear optional keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let c = &mut self.channel;
        match key {
            "command" => self.command = v.parse()?,
            "bandwidth_hz" => c.bandwidth_hz = parse_f64(key, v)?,
            "max_delay_s" => c.max_delay_s = parse_f64(key, v)?,
            "delta" => c.delta = parse_f64(key, v)?,
            "theta" => c.theta = parse_f64(key, v)?,
            "eta" => c.eta = parse_f64(key, v)?,
            "snr_a" => c.snr_a = parse_f64(key, v)?,
            "snr_b" => c.snr_b = parse_f64(key, v)?,
            "snr_e" => c.snr_e = parse_f64(key, v)?,
            "power" => c.power = parse_f64(key, v)?,
            "deltas" => self.deltas = opt_str(v).map(|s| parse_list(key, &s, parse_f64)).transpose()?,
            "grid_min" => self.grid_min = Some(parse_f64(key, v)?),
            "grid_max" => self.grid_max = Some(parse_f64(key, v)?),
            "grid_points" => self.grid_points = Some(parse_u64(key, v)? as usize),
            "grid_log" => self.grid_log = Some(parse_bool(key, v)?),
            "snr" => self.snr = parse_f64(key, v)?,
            "alpha" => self.alpha = parse_f64(key, v)?,
            "lambda" => self.lambda = parse_f64(key, v)?,
            "onoff" => self.onoff = parse_bool(key, v)?,
            "a_mode" => {
                self.a_mode = match v {
                    "wideband" => RatioMode::Wideband,
                    "finite" => RatioMode::Finite,
                    _ => return Err(Error::Parse(format!("a_mode: expected wideband or finite, got {v:?}"))),
                }
            }
            "method" => {
                self.method = match v {
                    "auto" => None,
                    "exact" => Some(Method::Exact),
                    "mc" => Some(Method::MonteCarlo),
                    "approx" => Some(Method::Approx),
                    _ => return Err(Error::Parse(format!("method: expected auto, exact, mc or approx, got {v:?}"))),
                }
            }
            "samples" => self.samples = parse_u64(key, v)?,
            "seed" => self.seed = opt_str(v).map(|s| parse_u64(key, &s)).transpose()?,
            "block_lengths" => self.block_lengths = parse_list(key, v, |k, s| parse_u64(k, s).map(|n| n as usize))?,
            "schemes" => self.schemes = parse_u64(key, v)? as usize,
            "key_margin" => self.key_margin = parse_f64(key, v)?,
            "public_margin" => self.public_margin = parse_f64(key, v)?,
            "bsc_main" => self.bsc_main = parse_f64(key, v)?,
            "bsc_eve" => self.bsc_eve = parse_f64(key, v)?,
            "source_csv" => self.source_csv = opt_str(v),
            "configs" => self.configs = parse_u64(key, v)? as usize,
            "bins" => self.bins = parse_u64(key, v)? as usize,
            "sounding" => {
                self.sounding = match v {
                    "impulse" => Sounding::Impulse,
                    "pn" => Sounding::Pn,
                    "random" => Sounding::Random,
                    _ => return Err(Error::Parse(format!("sounding: expected impulse, pn or random, got {v:?}"))),
                }
            }
            "sounding_len" => self.sounding_len = parse_u64(key, v)? as usize,
            "sounding_csv" => self.sounding_csv = opt_str(v),
            "var_h" => self.var_h = parse_f64(key, v)?,
            "var_he" => self.var_he = parse_f64(key, v)?,
            "out" => self.out = opt_str(v),
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(Error::Parse(format!("format: expected csv or json, got {v:?}"))),
                }
            }
            _ => return Err(Error::Parse(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines from a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {t:?}", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Parses a config file, fills defaults and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        cfg.apply_text(text)?;
        cfg.finish()
    }

    /// Recovers the configuration echoed in the leading `# key=value` lines
    /// of a CSV output.
    pub fn from_echo(output: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        for line in output.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            if let Some((k, v)) = rest.trim().split_once('=') {
                cfg.set(k.trim(), v)?;
            }
        }
        cfg.finish()
    }

    /// Fills command-dependent defaults, then validates.
    pub fn finish(mut self) -> Result<Self> {
        let (lo, hi, n, log) = self.command.default_grid();
        self.grid_min.get_or_insert(lo);
        self.grid_max.get_or_insert(hi);
        self.grid_points.get_or_insert(n);
        self.grid_log.get_or_insert(log);
        if self.deltas.as_ref().is_none_or(|d| d.is_empty()) {
            self.deltas = Some(vec![self.channel.delta]);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.deltas.clone().unwrap_or_else(|| vec![self.channel.delta])
    }

    /// The grid values in order. Only meaningful after [`finish`](Self::finish).
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.grid_min.unwrap_or(0.0), self.grid_max.unwrap_or(1.0));
        let n = self.grid_points.unwrap_or(2);
        if self.grid_log.unwrap_or(false) {
            log_grid(lo, hi, n)
        } else {
            linear_grid(lo, hi, n)
        }
    }

    pub fn is_stochastic(&self) -> bool {
        match self.command {
            Command::ErgodicSnr | Command::ErgodicBandwidth => !matches!(self.method, Some(Method::Exact | Method::Approx)),
            Command::OutageMc | Command::Leakage | Command::MiOracle => true,
            Command::OutageExponent | Command::DegradedCheck => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.command.uses_grid() {
            let (lo, hi) = (self.grid_min.unwrap_or(f64::NAN), self.grid_max.unwrap_or(f64::NAN));
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("grid needs finite grid_min < grid_max, got {lo} and {hi}"));
            }
            if self.grid_points.unwrap_or(0) < 2 {
                return bad("grid_points must be at least 2".into());
            }
            if self.grid_log == Some(true) && lo <= 0.0 {
                return bad("a log grid needs grid_min > 0".into());
            }
        }
        if self.is_stochastic() && self.seed.is_none() {
            return bad(format!("command {} is stochastic and needs a seed", self.command.as_str()));
        }
        for (name, v) in [("snr", self.snr), ("key_margin", self.key_margin), ("public_margin", self.public_margin)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        let grid = self.grid();
        match self.command {
            Command::ErgodicSnr | Command::OutageMc => {
                if grid.iter().any(|&g| g <= 0.0) {
                    return bad("SNR grid values must be positive".into());
                }
                for d in self.deltas() {
                    self.channel.with_delta(d).validate()?;
                }
            }
            Command::ErgodicBandwidth => {
                if !(self.snr > 0.0) {
                    return bad("snr must be positive".into());
                }
                for d in self.deltas() {
                    for &w in &grid {
                        self.channel.with_delta(d).with_bandwidth(w).validate()?;
                    }
                }
            }
            Command::OutageExponent => {
                if grid.iter().any(|&w| w <= 0.0) {
                    return bad("bandwidth grid values must be positive".into());
                }
                if !(0.0..=1.0).contains(&self.channel.theta) || !(self.channel.eta > 0.0 && self.channel.eta <= 1.0) {
                    return bad("outage exponents need theta in [0, 1] and eta in (0, 1]".into());
                }
                if self.deltas().iter().any(|d| !(0.0..=1.0).contains(d)) {
                    return bad("deltas must lie in [0, 1]".into());
                }
                if self.a_mode == RatioMode::Finite && !(self.snr > 0.0) {
                    return bad("snr must be positive".into());
                }
            }
            Command::Leakage => {
                if self.schemes == 0 || self.block_lengths.is_empty() {
                    return bad("leakage needs schemes >= 1 and at least one block length".into());
                }
                if let Some(&n) = self.block_lengths.iter().find(|&&n| n == 0 || n > MAX_BLOCK) {
                    return bad(format!("block lengths must lie in 1..={MAX_BLOCK}, got {n}"));
                }
                let crossovers_ok = (0.0..=1.0).contains(&self.bsc_main) && (0.0..=1.0).contains(&self.bsc_eve);
                if self.source_csv.is_none() && !crossovers_ok {
                    return bad("bsc crossover probabilities must lie in [0, 1]".into());
                }
            }
            Command::MiOracle => {
                if self.configs == 0 || self.bins == 0 || self.bins > 64 || self.sounding_len == 0 {
                    return bad("mi-oracle needs configs >= 1, bins in 1..=64 and sounding_len >= 1".into());
                }
                let c = &self.channel;
                for (name, v) in [("snr_a", c.snr_a), ("snr_b", c.snr_b), ("snr_e", c.snr_e), ("power", c.power)] {
                    if !(v > 0.0 && v.is_finite()) {
                        return bad(format!("{name} must be positive"));
                    }
                }
                if !(0.0..=1.0).contains(&c.eta) {
                    return bad("eta must lie in [0, 1]".into());
                }
            }
            Command::DegradedCheck => {
                if grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
                    return bad("the degraded-check grid runs over eta and must stay in [0, 1]".into());
                }
                if !(self.var_h > 0.0 && self.var_he > 0.0) {
                    return bad("var_h and var_he must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.channel;
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        vec![
            ("command", self.command.as_str().to_string()),
            ("bandwidth_hz", c.bandwidth_hz.to_string()),
            ("max_delay_s", c.max_delay_s.to_string()),
            ("delta", c.delta.to_string()),
            ("theta", c.theta.to_string()),
            ("eta", c.eta.to_string()),
            ("snr_a", c.snr_a.to_string()),
            ("snr_b", c.snr_b.to_string()),
            ("snr_e", c.snr_e.to_string()),
            ("power", c.power.to_string()),
            ("deltas", join(&self.deltas())),
            ("grid_min", self.grid_min.map(|v| v.to_string()).unwrap_or_default()),
            ("grid_max", self.grid_max.map(|v| v.to_string()).unwrap_or_default()),
            ("grid_points", self.grid_points.map(|v| v.to_string()).unwrap_or_default()),
            ("grid_log", self.grid_log.map(|v| v.to_string()).unwrap_or_default()),
            ("snr", self.snr.to_string()),
            ("alpha", self.alpha.to_string()),
            ("lambda", self.lambda.to_string()),
            ("onoff", self.onoff.to_string()),
            (
                "a_mode",
                match self.a_mode {
                    RatioMode::Wideband => "wideband",
                    RatioMode::Finite => "finite",
                }
                .to_string(),
            ),
            ("method", self.method.map_or("auto", Method::as_str).to_string()),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.map(|s| s.to_string()).unwrap_or_default()),
            ("block_lengths", join(&self.block_lengths)),
            ("schemes", self.schemes.to_string()),
            ("key_margin", self.key_margin.to_string()),
            ("public_margin", self.public_margin.to_string()),
            ("bsc_main", self.bsc_main.to_string()),
            ("bsc_eve", self.bsc_eve.to_string()),
            ("source_csv", opt(&self.source_csv)),
            ("configs", self.configs.to_string()),
            ("bins", self.bins.to_string()),
            (
                "sounding",
                match self.sounding {
                    Sounding::Impulse => "impulse",
                    Sounding::Pn => "pn",
                    Sounding::Random => "random",
                }
                .to_string(),
            ),
            ("sounding_len", self.sounding_len.to_string()),
            ("sounding_csv", opt(&self.sounding_csv)),
            ("var_h", self.var_h.to_string()),
            ("var_he", self.var_he.to_string()),
            ("out", opt(&self.out)),
            (
                "format",
                match self.format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                }
                .to_string(),
            ),
        ]
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
    Empty,
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        v.to_string()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => f.write_str(&fmt_f64(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Flag(b) => write!(f, "{b}"),
            Cell::Empty => Ok(()),
        }
    }
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(fmt_f64(*v)),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Flag(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// Rows produced by one command, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub warnings: Vec<String>,
}

/// Why a run stopped, with the process exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Config(Error),
    Runtime(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "invalid configuration: {e}"),
            Failure::Runtime(e) => write!(f, "run failed: {e}"),
        }
    }
}

impl std::error::Error for Failure {}

fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(Path::new(path)).map_err(Error::from)
}

/// Runs the configured command and returns its rows.
pub fn run(cfg: &SweepConfig, exec: Execution) -> std::result::Result<Table, Failure> {
    cfg.validate().map_err(Failure::Config)?;
    let out = match cfg.command {
        Command::ErgodicSnr => run_ergodic(cfg, SweepAxis::Snr, exec),
        Command::ErgodicBandwidth => run_ergodic(cfg, SweepAxis::Bandwidth, exec),
        Command::OutageExponent => run_outage_exponent(cfg),
        Command::OutageMc => run_outage_mc(cfg, exec),
        Command::Leakage => run_leakage(cfg, exec),
        Command::MiOracle => run_mi_oracle(cfg, exec),
        Command::DegradedCheck => Ok(run_degraded_check(cfg)),
    };
    out.map_err(|e| match e {
        Error::InvalidConfig(_) | Error::Parse(_) => Failure::Config(e),
        _ => Failure::Runtime(e),
    })
}

fn run_ergodic(cfg: &SweepConfig, axis: SweepAxis, exec: Execution) -> Result<Table> {
    let seed = cfg.seed.unwrap_or(0);
    let grid = cfg.grid();
    let mut rows = Vec::new();
    for (di, delta) in cfg.deltas().into_iter().enumerate() {
        let template = cfg.channel.with_delta(delta);
        let opts = SweepOptions {
            rate: RateOptions {
                method: cfg.method,
                samples: cfg.samples,
                seed: mix_seed(seed, cfg.command.tag(), di as u64),
                pmf_cap: DEFAULT_PMF_CAP,
                exec,
            },
            snr: cfg.snr,
            use_onoff: cfg.onoff,
            onoff: OnOffOptions::default(),
        };
        for p in sweep(&template, axis, &grid, &opts)? {
            let point_cfg = template.with_bandwidth(p.bandwidth_hz);
            rows.push(vec![
                Cell::Num(p.delta),
                Cell::Num(p.bandwidth_hz),
                Cell::Num(p.snr),
                Cell::Num(p.rate_bits),
                Cell::Num(p.mc_stderr),
                Cell::Text(p.method.as_str().into()),
                p.lambda_star.map_or(Cell::Empty, Cell::Num),
                Cell::Num(wideband_approx(&point_cfg, p.snr)),
            ]);
        }
    }
    Ok(Table {
        columns: vec!["delta", "bandwidth_hz", "snr", "rate_bits", "mc_stderr", "method", "lambda_star", "wideband_bits"],
        rows,
        warnings: Vec::new(),
    })
}

fn run_outage_exponent(cfg: &SweepConfig) -> Result<Table> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for delta in cfg.deltas() {
        let template = cfg.channel.with_delta(delta);
        let mut impossible = 0;
        for w in cfg.grid() {
            let ratio = match cfg.a_mode {
                RatioMode::Wideband => ratio_wideband(template.eta),
                RatioMode::Finite => {
                    let l = (template.max_delay_s * w).powf(delta);
                    ratio_finite(cfg.snr / (cfg.lambda * l), template.eta)
                }
            };
            let p = exponent_curve(&template, cfg.alpha, ratio, &[w])?[0];
            impossible += p.impossible as usize;
            let l_int = (p.l.round() as u64).max(1);
            let report = OutageReport::new(l_int, template.theta, p.a);
            rows.push(vec![
                Cell::Num(delta),
                Cell::Num(w),
                Cell::Num(p.l),
                Cell::Num(p.a),
                Cell::Num(p.exponent),
                Cell::Flag(p.impossible),
                Cell::Int(l_int),
                Cell::Num(report.p_exact),
                Cell::Num(report.p_bound),
                Cell::Num(report.p_gauss),
            ]);
        }
        if impossible > 0 {
            warnings.push(format!(
                "delta={delta}: backoff threshold a >= 1 at {impossible} grid point(s); outage is impossible there and the exponent is reported as inf"
            ));
        }
    }
    Ok(Table {
        columns: vec!["delta", "bandwidth_hz", "L", "a", "exponent", "impossible", "L_int", "p_exact", "p_bound", "p_gauss"],
        rows,
        warnings,
    })
}

fn run_outage_mc(cfg: &SweepConfig, exec: Execution) -> Result<Table> {
    let seed = cfg.seed.unwrap_or(0);
    let tag = cfg.command.tag();
    let grid = cfg.grid();
    let deltas = cfg.deltas();
    let n = grid.len();
    let rows = exec.map(deltas.len() * n, |k| {
        let (delta, snr) = (deltas[k / n], grid[k % n]);
        let chan = cfg.channel.with_delta(delta);
        let rate_opts = RateOptions {
            method: cfg.method,
            samples: cfg.samples,
            seed: mix_seed(seed, tag, 2 * k as u64),
            pmf_cap: DEFAULT_PMF_CAP,
            exec: Execution::Sequential,
        };
        let eval = RateEvaluator::new(&chan, &rate_opts)?;
        let lambda = if cfg.onoff {
            onoff_optimize(snr, |g| eval.rate(g).0, &OnOffOptions::default()).lambda_star
        } else {
            cfg.lambda
        };
        let rate_bits = cfg.alpha * lambda * eval.rate(snr / lambda).0;
        let mc = OutageMcOptions {
            samples: cfg.samples,
            seed: mix_seed(seed, tag, 2 * k as u64 + 1),
            conditioning: Conditioning::Full,
            exec: Execution::Sequential,
        };
        let est = outage_mc(&chan, snr, rate_bits, lambda, &mc)?;
        Ok(vec![
            Cell::Num(delta),
            Cell::Num(chan.bandwidth_hz),
            Cell::Num(snr),
            Cell::Num(lambda),
            Cell::Num(rate_bits),
            Cell::Num(est.p),
            Cell::Num(est.stderr),
            Cell::Int(est.samples),
        ])
    });
    Ok(Table {
        columns: vec!["delta", "bandwidth_hz", "snr", "lambda", "rate_bits", "p_mc", "p_mc_stderr", "samples"],
        rows: rows.into_iter().collect::<Result<_>>()?,
        warnings: Vec::new(),
    })
}

fn run_leakage(cfg: &SweepConfig, exec: Execution) -> Result<Table> {
    let src = match &cfg.source_csv {
        Some(path) => ToySource::from_csv(read_file(path)?.as_bytes())?,
        None => ToySource::bsc_cascade(cfg.bsc_main, cfg.bsc_eve)?,
    };
    let mut warnings = Vec::new();
    if !src.degraded {
        warnings.push("source is not degraded; the leakage lower bound is not checked".to_string());
    }
    let seed = mix_seed(cfg.seed.unwrap_or(0), cfg.command.tag(), 0);
    let mut rows = Vec::new();
    for &n in &cfg.block_lengths {
        let reports = random_scheme_reports(&src, n, cfg.key_margin, cfg.public_margin, cfg.schemes, seed, exec)?;
        for (j, (scheme_seed, r)) in reports.into_iter().enumerate() {
            let (holds, slack) = match check_leakage_bound(&r) {
                Ok((h, s)) => (Cell::Flag(h), Cell::Num(s)),
                Err(_) => (Cell::Empty, Cell::Empty),
            };
            rows.push(vec![
                Cell::Int(n as u64),
                Cell::Int(j as u64),
                Cell::Int(scheme_seed),
                Cell::Num(r.pe),
                Cell::Num(r.pe_seq),
                Cell::Num(r.key_entropy),
                Cell::Num(r.leak),
                Cell::Num(r.source_leak),
                Cell::Num(r.residual),
                Cell::Num(r.cs),
                Cell::Num(r.fano_bound()),
                Cell::Flag(r.fano_holds()),
                slack,
                holds,
            ]);
        }
    }
    Ok(Table {
        columns: vec![
            "n",
            "scheme",
            "scheme_seed",
            "pe",
            "pe_seq",
            "key_entropy",
            "leak",
            "source_leak",
            "residual",
            "cs",
            "fano_bound",
            "fano_holds",
            "slack",
            "bound_holds",
        ],
        rows,
        warnings,
    })
}

fn run_mi_oracle(cfg: &SweepConfig, exec: Execution) -> Result<Table> {
    let seed = cfg.seed.unwrap_or(0);
    let tag = cfg.command.tag();
    let c = &cfg.channel;
    let loaded = match &cfg.sounding_csv {
        Some(path) => Some(SoundingDesign::from_reader(read_file(path)?.as_bytes())?),
        None => None,
    };
    let rows = exec.map(cfg.configs, |i| {
        let mut rng = chunk_rng(mix_seed(seed, tag, i as u64), 0);
        let s_ab: Vec<bool> = (0..cfg.bins).map(|_| rng.random()).collect();
        let s_e: Vec<bool> = (0..cfg.bins).map(|_| rng.random()).collect();
        let profile = PowerProfile::uniform(s_ab.clone(), s_e.clone())?;
        let design = match (&loaded, cfg.sounding) {
            (Some(d), _) => d.clone(),
            (None, Sounding::Impulse) => SoundingDesign::impulse(c.power, 1),
            (None, Sounding::Pn) => SoundingDesign::pn(c.power, cfg.sounding_len, i),
            (None, Sounding::Random) => SoundingDesign::pseudo_random(c.power, cfg.sounding_len, rng.random()),
        };
        let p = design.power();
        let (cxy, cxz) = vector_mi_closed_form(&profile, c.snr_a, c.snr_b, c.snr_e, c.eta)?;
        let (oxy, oxz) = vector_mi_logdet_oracle(&design, &profile, p / c.snr_a, p / c.snr_b, p / c.snr_e, c.eta)?;
        let count = |s: &[bool]| s.iter().filter(|&&b| b).count() as u64;
        let overlap = s_ab.iter().zip(&s_e).filter(|(a, e)| **a && **e).count() as u64;
        Ok(vec![
            Cell::Int(i as u64),
            Cell::Int(count(&s_ab)),
            Cell::Int(count(&s_e)),
            Cell::Int(overlap),
            Cell::Num(cxy),
            Cell::Num(oxy),
            Cell::Num(cxz),
            Cell::Num(oxz),
            Cell::Num((cxy - oxy).abs()),
            Cell::Num((cxz - oxz).abs()),
        ])
    });
    Ok(Table {
        columns: vec!["index", "b_ab", "b_e", "b_q", "xy_closed", "xy_oracle", "xz_closed", "xz_oracle", "err_xy", "err_xz"],
        rows: rows.into_iter().collect::<Result<_>>()?,
        warnings: Vec::new(),
    })
}

fn run_degraded_check(cfg: &SweepConfig) -> Table {
    let c = &cfg.channel;
    let (nb, ne) = (c.power / c.snr_b, c.power / c.snr_e);
    let rows = cfg
        .grid()
        .into_iter()
        .map(|eta| {
            let bob = cfg.var_h * c.power / nb;
            let e2 = eta * eta;
            let eve = e2 * cfg.var_he * c.power / ((1.0 - e2) * cfg.var_he * c.power + ne);
            vec![
                Cell::Num(eta),
                Cell::Num(bob),
                Cell::Num(eve),
                Cell::Flag(is_eve_degraded(cfg.var_h, cfg.var_he, c.power, nb, ne, eta)),
            ]
        })
        .collect();
    Table {
        columns: vec!["eta", "bob_snr", "eve_snr", "degraded"],
        rows,
        warnings: Vec::new(),
    }
}

/// Renders a table in the configured format. CSV output starts with the
/// resolved configuration as `# key=value` lines.
pub fn render(cfg: &SweepConfig, table: &Table) -> String {
    match cfg.format {
        Format::Csv => {
            let mut s = String::new();
            for (k, v) in cfg.entries() {
                s.push_str(&format!("# {k}={v}\n"));
            }
            s.push_str(&table.columns.join(","));
            s.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let config: Map<String, Value> = cfg.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
                .collect();
            let doc = json!({
                "command": cfg.command.as_str(),
                "config": config,
                "columns": table.columns,
                "rows": rows,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("json values always serialize");
            s.push('\n');
            s
        }
    }
}
