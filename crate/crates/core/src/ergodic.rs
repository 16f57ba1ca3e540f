//! Instantaneous and ergodic secret-key rates, the on-off (time-sharing)
//! sounding optimization, and the wideband approximation.
//!
//! Under uniform power-delay profiles the instantaneous rate depends on the
//! sparsity patterns only through `(b_ab, b_e, b_q)`, so expectations run
//! over the pmf of those counts rather than over `2^M` patterns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, mix_seed, Execution, MC_CHUNK};
use crate::model::{dof_pmf, ChannelConfig, DofCounts, DofSampler, DEFAULT_PMF_CAP};
use crate::mutual_info::{iab, iae};
use crate::optimize::{golden_section_max, log_grid};

/// Key rate of one state: `b_ab i_ab(γ/b_ab, γ/b_ab) - b_q i_ae(γ/b_ab, γ/b_e, η)`.
pub fn inst_rate(counts: DofCounts, snr: f64, eta: f64) -> f64 {
    if counts.b_ab == 0 {
        return 0.0;
    }
    let x = snr / counts.b_ab as f64;
    let main = counts.b_ab as f64 * iab(x, x);
    if counts.b_q == 0 {
        return main;
    }
    main - counts.b_q as f64 * iae(x, snr / counts.b_e as f64, eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    #[serde(rename = "mc")]
    MonteCarlo,
    Approx,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "mc",
            Method::Approx => "approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub snr: f64,
    pub bandwidth_hz: f64,
    pub delta: f64,
    pub rate_bits: f64,
    pub method: Method,
    pub mc_stderr: f64,
    /// Optimal time-sharing fraction, when the point came from on-off sounding.
    pub lambda_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffResult {
    pub lambda_star: f64,
    pub rate_bits: f64,
    pub grid_points: usize,
}

/// How an ergodic rate should be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    /// `None` picks exact enumeration when `M` fits under the cap and
    /// Monte Carlo otherwise.
    pub method: Option<Method>,
    pub samples: u64,
    pub seed: u64,
    pub pmf_cap: u64,
    pub exec: Execution,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            method: None,
            samples: 100_000,
            seed: 0,
            pmf_cap: DEFAULT_PMF_CAP,
            exec: Execution::default(),
        }
    }
}

impl RateOptions {
    pub fn exact() -> Self {
        RateOptions {
            method: Some(Method::Exact),
            ..RateOptions::default()
        }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        RateOptions {
            method: Some(Method::MonteCarlo),
            samples,
            seed,
            ..RateOptions::default()
        }
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn resolve(&self, cfg: &ChannelConfig) -> Method {
        self.method.unwrap_or(if cfg.bins() <= self.pmf_cap {
            Method::Exact
        } else {
            Method::MonteCarlo
        })
    }
}

/// A reusable evaluator of `γ ↦ E[I_inst(γ)]` for one channel
/// configuration.
///
/// The exact form collapses the pmf onto `(b_ab)` for the main term and
/// `(b_ab, b_e)` weighted by `E[b_q; b_ab, b_e]` for the leakage term; the
/// empirical form keeps a histogram of sampled states, so repeated
/// evaluations at different SNRs share the same draws.
#[derive(Debug, Clone)]
pub struct RateEvaluator {
    eta: f64,
    method: Method,
    kind: EvalKind,
}

#[derive(Debug, Clone)]
enum EvalKind {
    Exact {
        main: Vec<(u64, f64)>,
        leak: Vec<(u64, u64, f64)>,
    },
    Empirical {
        states: Vec<(DofCounts, u64)>,
        samples: u64,
    },
    Approx {
        cfg: ChannelConfig,
    },
}

impl RateEvaluator {
    pub fn new(cfg: &ChannelConfig, opts: &RateOptions) -> Result<Self> {
        cfg.validate()?;
        let method = opts.resolve(cfg);
        let kind = match method {
            Method::Exact => {
                let pmf = dof_pmf(cfg, opts.pmf_cap)?;
                let mut main = vec![0.0; pmf.bins as usize + 1];
                let mut leak = BTreeMap::<(u64, u64), f64>::new();
                for c in &pmf.cells {
                    main[c.b_ab as usize] += c.p;
                    if c.b_q > 0 {
                        *leak.entry((c.b_ab, c.b_q + c.e0)).or_default() += c.p * c.b_q as f64;
                    }
                }
                EvalKind::Exact {
                    main: main
                        .into_iter()
                        .enumerate()
                        .filter(|&(b, p)| b > 0 && p > 0.0)
                        .map(|(b, p)| (b as u64, p))
                        .collect(),
                    leak: leak.into_iter().map(|((a, e), w)| (a, e, w)).collect(),
                }
            }
            Method::MonteCarlo => {
                if opts.samples == 0 {
                    return Err(Error::InvalidArgument("Monte Carlo needs samples >= 1".into()));
                }
                let sampler = DofSampler::new(cfg)?;
                let states = sample_histogram(&sampler, opts.samples, opts.seed, opts.exec);
                EvalKind::Empirical {
                    states,
                    samples: opts.samples,
                }
            }
            Method::Approx => EvalKind::Approx { cfg: *cfg },
        };
        Ok(RateEvaluator {
            eta: cfg.eta,
            method,
            kind,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// `(rate, stderr)` at SNR `snr`; the standard error is 0 unless the
    /// evaluator is empirical.
    pub fn rate(&self, snr: f64) -> (f64, f64) {
        match &self.kind {
            EvalKind::Exact { main, leak } => {
                let gain: f64 = main
                    .iter()
                    .map(|&(b, p)| {
                        let x = snr / b as f64;
                        p * b as f64 * iab(x, x)
                    })
                    .sum();
                let loss: f64 = leak
                    .iter()
                    .map(|&(a, e, w)| w * iae(snr / a as f64, snr / e as f64, self.eta))
                    .sum();
                (gain - loss, 0.0)
            }
            EvalKind::Empirical { states, samples } => {
                let n = *samples as f64;
                let (mut s, mut s2) = (0.0, 0.0);
                for &(d, c) in states {
                    let r = inst_rate(d, snr, self.eta);
                    s += c as f64 * r;
                    s2 += c as f64 * r * r;
                }
                let mean = s / n;
                let var = if *samples > 1 {
                    ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                (mean, (var / n).sqrt())
            }
            EvalKind::Approx { cfg } => (wideband_approx(cfg, snr), 0.0),
        }
    }
}

/// Draws `samples` states in fixed-size substreams and returns their
/// histogram sorted by state.
pub(crate) fn sample_histogram(sampler: &DofSampler, samples: u64, seed: u64, exec: Execution) -> Vec<(DofCounts, u64)> {
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts = exec.map(chunks as usize, |c| {
        let c = c as u64;
        let mut rng = chunk_rng(seed, c);
        let mut h = BTreeMap::<(u64, u64, u64), u64>::new();
        for _ in 0..MC_CHUNK.min(samples - c * MC_CHUNK) {
            let d = sampler.sample(&mut rng);
            *h.entry((d.b_ab, d.b_e, d.b_q)).or_default() += 1;
        }
        h
    });
    let mut all = BTreeMap::new();
    for part in parts {
        for (k, v) in part {
            *all.entry(k).or_default() += v;
        }
    }
    all.into_iter()
        .map(|((b_ab, b_e, b_q), c)| (DofCounts { b_ab, b_e, b_q }, c))
        .collect()
}

/// Ergodic key rate `E[I_inst(γ)]` at SNR `snr`.
pub fn ergodic_rate(cfg: &ChannelConfig, snr: f64, opts: &RateOptions) -> Result<RatePoint> {
    let eval = RateEvaluator::new(cfg, opts)?;
    let (rate_bits, mc_stderr) = eval.rate(snr);
    Ok(RatePoint {
        snr,
        bandwidth_hz: cfg.bandwidth_hz,
        delta: cfg.delta,
        rate_bits,
        method: eval.method(),
        mc_stderr,
        lambda_star: None,
    })
}

/// Search settings for [`onoff_optimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnOffOptions {
    pub grid_points: usize,
    pub lambda_min: f64,
    pub xtol: f64,
}

impl Default for OnOffOptions {
    fn default() -> Self {
        OnOffOptions {
            grid_points: 200,
            lambda_min: 1e-4,
            xtol: 1e-10,
        }
    }
}

/// Maximizes `λ · rate_fn(γ/λ)` over `λ ∈ [λ_min, 1]`.
///
/// A logarithmic grid locates the best bracket, which golden-section search
/// then refines in `ln λ`. Values within a relative 1e-12 of the `λ = 1`
/// value resolve to `λ* = 1`.
pub fn onoff_optimize<F>(snr: f64, rate_fn: F, opts: &OnOffOptions) -> OnOffResult
where
    F: Fn(f64) -> f64,
{
    let objective = |lambda: f64| lambda * rate_fn(snr / lambda);
    let grid = log_grid(opts.lambda_min, 1.0, opts.grid_points.max(2));
    let values: Vec<f64> = grid.iter().map(|&l| objective(l)).collect();
    let (best_i, mut best_v) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut best_l = grid[best_i];

    let lo = grid[best_i.saturating_sub(1)].ln();
    let hi = grid[(best_i + 1).min(grid.len() - 1)].ln();
    if hi > lo {
        let (x, v) = golden_section_max(|t| objective(t.exp()), lo, hi, opts.xtol, 200);
        if v > best_v {
            best_v = v;
            best_l = x.exp().min(1.0);
        }
    }

    let at_one = values[values.len() - 1];
    if at_one >= best_v - 1e-12 * best_v.abs() {
        return OnOffResult {
            lambda_star: 1.0,
            rate_bits: at_one,
            grid_points: grid.len(),
        };
    }
    OnOffResult {
        lambda_star: best_l,
        rate_bits: best_v,
        grid_points: grid.len(),
    }
}

/// Wideband (low-SNR, many-DoF) approximation
/// `γ² (1 - θη²) / (ln 2 · (τm W)^δ)`.
pub fn wideband_approx(cfg: &ChannelConfig, snr: f64) -> f64 {
    snr * snr * (1.0 - cfg.theta * cfg.eta * cfg.eta) / (std::f64::consts::LN_2 * cfg.dof_mean())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Snr,
    Bandwidth,
    Delta,
}

impl SweepAxis {
    fn tag(self) -> u64 {
        match self {
            SweepAxis::Snr => 1,
            SweepAxis::Bandwidth => 2,
            SweepAxis::Delta => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub rate: RateOptions,
    /// SNR used when the axis is not `Snr`.
    pub snr: f64,
    pub use_onoff: bool,
    pub onoff: OnOffOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            rate: RateOptions::default(),
            snr: 10.0,
            use_onoff: false,
            onoff: OnOffOptions::default(),
        }
    }
}

/// Evaluates the ergodic (or on-off optimized) key rate at every grid value
/// along `axis`. Point `i` draws from seed `mix(seed, axis, i)`, so the
/// output does not depend on the execution strategy.
pub fn sweep(template: &ChannelConfig, axis: SweepAxis, grid: &[f64], opts: &SweepOptions) -> Result<Vec<RatePoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let results = opts.rate.exec.map(grid.len(), |i| {
        let v = grid[i];
        let (cfg, snr) = match axis {
            SweepAxis::Snr => (*template, v),
            SweepAxis::Bandwidth => (template.with_bandwidth(v), opts.snr),
            SweepAxis::Delta => (template.with_delta(v), opts.snr),
        };
        let rate_opts = RateOptions {
            seed: mix_seed(opts.rate.seed, axis.tag(), i as u64),
            ..opts.rate
        };
        let eval = RateEvaluator::new(&cfg, &rate_opts)?;
        let (rate_bits, mc_stderr, lambda_star) = if opts.use_onoff {
            let best = onoff_optimize(snr, |g| eval.rate(g).0, &opts.onoff);
            let stderr = best.lambda_star * eval.rate(snr / best.lambda_star).1;
            (best.rate_bits, stderr, Some(best.lambda_star))
        } else {
            let (r, s) = eval.rate(snr);
            (r, s, None)
        };
        Ok(RatePoint {
            snr,
            bandwidth_hz: cfg.bandwidth_hz,
            delta: cfg.delta,
            rate_bits,
            method: eval.method(),
            mc_stderr,
            lambda_star,
        })
    });
    results.into_iter().collect()
}
