//! Secrecy-outage probabilities and exponents.
//!
//! With uniform profiles and the main and Eve pattern weights pinned at
//! their mean `L`, backing the key rate off to a fraction `α` of the ergodic
//! rate turns the outage event into a binomial tail `Pr(B_q ≥ aL)` with
//! `B_q ~ Binomial(L, θ)` and `a = (1-α)A + αθ`, where `A` is the ratio of
//! the main-channel to the eavesdropper per-bin mutual information. The
//! tail is bounded by `2^{-L D(a‖θ)}`.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;

use crate::ergodic::inst_rate;
use crate::error::{Error, Result};
use crate::exec::{monte_carlo, Execution};
use crate::model::{draw_binomial, ChannelConfig, DofCounts, DofSampler};
use crate::mutual_info::{iab, iae};

/// Conditional secret-key capacity `Cs(s_ab, s_e)` of one state; the same
/// quantity as the instantaneous key rate.
pub fn conditional_capacity(counts: DofCounts, snr: f64, eta: f64) -> f64 {
    inst_rate(counts, snr, eta)
}

/// Backoff threshold `a = (1-α)A + αθ`. With `α = 1` the result is `θ`
/// even when `A` is infinite.
pub fn backoff_threshold(alpha: f64, ratio: f64, theta: f64) -> f64 {
    if alpha >= 1.0 {
        return theta;
    }
    (1.0 - alpha) * ratio + alpha * theta
}

/// Wideband mutual-information ratio `A = 1/η²`.
pub fn ratio_wideband(eta: f64) -> f64 {
    1.0 / (eta * eta)
}

/// Finite-SNR ratio `A = i_ab(x, x) / i_ae(x, x, η)` at per-bin SNR `x`.
pub fn ratio_finite(per_bin_snr: f64, eta: f64) -> f64 {
    iab(per_bin_snr, per_bin_snr) / iae(per_bin_snr, per_bin_snr, eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackoffSpec {
    pub alpha: f64,
    #[serde(rename = "A")]
    pub ratio: f64,
    pub theta: f64,
    pub a: f64,
}

impl BackoffSpec {
    pub fn new(alpha: f64, ratio: f64, theta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if ratio.is_nan() || ratio < 1.0 {
            return Err(Error::InvalidArgument(format!("mutual-information ratio A must be >= 1, got {ratio}")));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidArgument(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(BackoffSpec {
            alpha,
            ratio,
            theta,
            a: backoff_threshold(alpha, ratio, theta),
        })
    }

    /// The outage event needs more than `L` overlapping bins.
    pub fn impossible(&self) -> bool {
        outage_impossible(self.a)
    }
}

/// `a > 1`: the threshold `aL` exceeds every possible overlap count.
pub fn outage_impossible(a: f64) -> bool {
    a > 1.0
}

/// Bernoulli KL divergence `D(a‖p)` in bits, `+∞` when `p ∈ {0, 1}` and
/// `a ≠ p`.
pub fn kl_bernoulli(a: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("D(a||p) needs a, p in [0, 1], got a={a}, p={p}")));
    }
    Ok(kl(a, p))
}

fn kl(a: f64, p: f64) -> f64 {
    let term = |x: f64, q: f64| {
        if x == 0.0 {
            0.0
        } else if q == 0.0 {
            f64::INFINITY
        } else {
            x * (x / q).log2()
        }
    };
    (term(a, p) + term(1.0 - a, 1.0 - p)).max(0.0)
}

/// Smallest integer count `k` with `k ≥ aL`. `aL` is shaved by 1e-9 so
/// that products such as `0.7 * 10` do not round up to the next integer.
fn tail_start(l: u64, a: f64) -> f64 {
    (a * l as f64 - 1e-9).ceil()
}

/// Natural log of `Pr(Binomial(L, θ) ≥ k)`.
fn ln_binomial_tail(l: u64, theta: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > l || theta <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if theta >= 1.0 {
        return 0.0;
    }
    let (lt, lq) = (theta.ln(), (-theta).ln_1p());
    let terms: Vec<f64> = (k..=l)
        .map(|j| ln_binomial(l, j) + j as f64 * lt + (l - j) as f64 * lq)
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln()
}

/// Exact `Pr(B_q ≥ aL)` for `B_q ~ Binomial(L, θ)`.
pub fn outage_exact(l: u64, theta: f64, a: f64) -> f64 {
    outage_exact_log2(l, theta, a).exp2().min(1.0)
}

/// `log2 Pr(B_q ≥ aL)`, finite down to far below the `f64` underflow point.
pub fn outage_exact_log2(l: u64, theta: f64, a: f64) -> f64 {
    let k = tail_start(l, a);
    if k > l as f64 {
        return f64::NEG_INFINITY;
    }
    let k = k.max(0.0) as u64;
    ln_binomial_tail(l, theta, k) / std::f64::consts::LN_2
}

/// Outage exponent `L · D(a‖θ)` in bits; 0 when `a ≤ θ` and `+∞` when
/// outage is impossible (`a > 1`). `l` may be real valued.
pub fn outage_exponent(l: f64, theta: f64, a: f64) -> f64 {
    if outage_impossible(a) {
        return f64::INFINITY;
    }
    if a <= theta {
        return 0.0;
    }
    l * kl(a, theta)
}

/// Chernoff–KL bound `2^{-L D(a‖θ)}`, clamped to `[0, 1]`.
pub fn outage_bound(l: u64, theta: f64, a: f64) -> f64 {
    (-outage_exponent(l as f64, theta, a)).exp2().clamp(0.0, 1.0)
}

/// Continuity-corrected normal approximation of the tail,
/// `Pr(N(Lθ, Lθ(1-θ)) > ⌈aL⌉ - 1/2)`.
pub fn gaussian_tail(l: u64, theta: f64, a: f64) -> f64 {
    if theta <= 0.0 || theta >= 1.0 {
        return outage_exact(l, theta, a);
    }
    let lf = l as f64;
    let sd = (lf * theta * (1.0 - theta)).sqrt();
    // sd > 0 because 0 < theta < 1 and l >= 1
    let normal = Normal::new(lf * theta, sd).unwrap();
    normal.sf(tail_start(l, a) - 0.5)
}

/// Integer DoF used for exact tails, `round((τm W)^δ)`, at least 1.
pub fn integer_dof(cfg: &ChannelConfig) -> u64 {
    cfg.dof_mean().round().max(1.0) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageReport {
    #[serde(rename = "L")]
    pub l: u64,
    pub theta: f64,
    pub a: f64,
    pub p_exact: f64,
    pub p_bound: f64,
    pub p_gauss: f64,
    pub exponent: f64,
    pub impossible: bool,
    pub p_mc: Option<f64>,
    pub p_mc_stderr: Option<f64>,
}

impl OutageReport {
    pub fn new(l: u64, theta: f64, a: f64) -> Self {
        OutageReport {
            l,
            theta,
            a,
            p_exact: outage_exact(l, theta, a),
            p_bound: outage_bound(l, theta, a),
            p_gauss: gaussian_tail(l, theta, a),
            exponent: outage_exponent(l as f64, theta, a),
            impossible: outage_impossible(a),
            p_mc: None,
            p_mc_stderr: None,
        }
    }

    pub fn with_mc(mut self, est: McEstimate) -> Self {
        self.p_mc = Some(est.p);
        self.p_mc_stderr = Some(est.stderr);
        self
    }
}

/// Which states the outage Monte Carlo draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Conditioning {
    /// Full pattern model: `(b_ab, b_e, b_q)` from the channel configuration.
    #[default]
    Full,
    /// `b_ab = b_e = dof`, `b_q ~ Binomial(dof, θ)`.
    Forced { dof: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageMcOptions {
    pub samples: u64,
    pub seed: u64,
    pub conditioning: Conditioning,
    pub exec: Execution,
}

impl Default for OutageMcOptions {
    fn default() -> Self {
        OutageMcOptions {
            samples: 100_000,
            seed: 0,
            conditioning: Conditioning::Full,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Fraction of sampled states with `rate_bits > λ · Cs(state, γ/λ)`.
pub fn outage_mc(cfg: &ChannelConfig, snr: f64, rate_bits: f64, lambda: f64, opts: &OutageMcOptions) -> Result<McEstimate> {
    cfg.validate()?;
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs samples >= 1".into()));
    }
    let eta = cfg.eta;
    let boosted = snr / lambda;
    let outage = |d: DofCounts| {
        if rate_bits > lambda * conditional_capacity(d, boosted, eta) {
            1.0
        } else {
            0.0
        }
    };
    let m = match opts.conditioning {
        Conditioning::Full => {
            let sampler = DofSampler::new(cfg)?;
            monte_carlo(opts.exec, opts.samples, opts.seed, |rng| outage(sampler.sample(rng)))
        }
        Conditioning::Forced { dof } => {
            let theta = cfg.theta;
            let overlap = (theta > 0.0 && theta < 1.0 && dof > 0)
                .then(|| Binomial::new(dof, theta).ok())
                .flatten();
            monte_carlo(opts.exec, opts.samples, opts.seed, |rng| {
                let b_q = match &overlap {
                    Some(b) => b.sample(rng),
                    None => draw_binomial(rng, dof, theta),
                };
                outage(DofCounts { b_ab: dof, b_e: dof, b_q })
            })
        }
    };
    let p = m.mean();
    Ok(McEstimate {
        p,
        stderr: (p * (1.0 - p) / m.count as f64).sqrt(),
        samples: m.count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPoint {
    pub bandwidth_hz: f64,
    pub delta: f64,
    /// Real-valued mean DoF `(τm W)^δ`.
    #[serde(rename = "L")]
    pub l: f64,
    pub a: f64,
    pub exponent: f64,
    pub impossible: bool,
}

/// Outage exponent `L D(a‖θ)` across bandwidths, with `L = (τm W)^δ` real
/// valued and `a` fixed by `(α, A, θ)`.
pub fn exponent_curve(template: &ChannelConfig, alpha: f64, ratio: f64, bandwidths: &[f64]) -> Result<Vec<ExponentPoint>> {
    let spec = BackoffSpec::new(alpha, ratio, template.theta)?;
    if !(template.max_delay_s > 0.0) || !(0.0..=1.0).contains(&template.delta) {
        return Err(Error::InvalidConfig("exponent curve needs max_delay_s > 0 and delta in [0, 1]".into()));
    }
    bandwidths
        .iter()
        .map(|&w| {
            if !(w > 0.0) {
                return Err(Error::InvalidConfig(format!("bandwidth must be positive, got {w}")));
            }
            let l = (template.max_delay_s * w).powf(template.delta);
            Ok(ExponentPoint {
                bandwidth_hz: w,
                delta: template.delta,
                l,
                a: spec.a,
                exponent: outage_exponent(l, spec.theta, spec.a),
                impossible: spec.impossible(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn capacity_examples() {
        assert_eq!(conditional_capacity(DofCounts::new(0, 0, 0), 1.0, 0.5), 0.0);
        assert!((conditional_capacity(DofCounts::new(2, 5, 0), 1.0, 0.5) - 0.339_850).abs() < 1e-6);
        assert!((conditional_capacity(DofCounts::new(2, 2, 2), 1.0, 0.5) - 0.258_566).abs() < 1e-6);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(backoff_threshold(1.0, 7.0, 0.3), 0.3);
        assert_eq!(backoff_threshold(1.0, f64::INFINITY, 0.3), 0.3);
        let a = backoff_threshold(0.9, ratio_wideband(0.9), 0.5);
        assert!((ratio_wideband(0.9) - 1.234_568).abs() < 1e-6);
        assert!((a - 0.573_457).abs() < 1e-6);
        let spec = BackoffSpec::new(0.5, ratio_wideband(0.1), 0.5).unwrap();
        assert!((spec.a - 50.25).abs() < 1e-12);
        assert!(spec.impossible());
        assert!(BackoffSpec::new(0.0, 2.0, 0.5).is_err());
        assert!(BackoffSpec::new(0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(0.3, 0.3).unwrap(), 0.0);
        assert!((kl_bernoulli(0.75, 0.5).unwrap() - 0.188_722).abs() < 1e-6);
        assert!((kl_bernoulli(1.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(kl_bernoulli(0.5, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(kl_bernoulli(0.5, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(kl_bernoulli(0.0, 0.0).unwrap(), 0.0);
        assert!(kl_bernoulli(1.2, 0.5).is_err());
        assert!(kl_bernoulli(0.5, -0.1).is_err());
    }

    #[test]
    fn exact_tail_examples() {
        assert!((outage_exact(4, 0.5, 0.75) - 5.0 / 16.0).abs() < 1e-15);
        assert!((outage_exact(4, 0.5, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(outage_exact(4, 0.5, 1.2), 0.0);
        // 0.7 * 10 is 7.000000000000001 in floating point
        let p7: f64 = (7..=10).map(|k| crate::info::binomial_pmf(10, 0.3, k)).sum();
        assert!((outage_exact(10, 0.3, 0.7) - p7).abs() < 1e-15);
    }

    #[test]
    fn bound_examples() {
        let b = outage_bound(4, 0.5, 0.75);
        let d = 0.75 * 1.5f64.log2() + 0.25 * 0.5f64.log2();
        assert!((d - 0.188_722).abs() < 1e-6);
        // 2^(-4 d) = 16/27
        assert!((b - 16.0 / 27.0).abs() < 1e-14, "{b}");
        assert!(b >= outage_exact(4, 0.5, 0.75));
        assert_eq!(outage_bound(10, 0.4, 0.4), 1.0);
        assert_eq!(outage_exponent(10.0, 0.4, backoff_threshold(1.0, 3.0, 0.4)), 0.0);
        assert_eq!(outage_bound(10, 0.4, 1.5), 0.0);
        assert_eq!(outage_exponent(10.0, 0.4, 1.5), f64::INFINITY);
    }

    #[test]
    fn gaussian_examples() {
        assert!((gaussian_tail(4, 0.5, 0.75) - 0.308_538).abs() < 1e-6);
        let mid = gaussian_tail(100_000, 0.5, 0.5);
        assert!((mid - 0.5).abs() < 0.01, "{mid}");
        assert!(gaussian_tail(20, 0.5, 1.5) < 1e-9);
    }

    #[test]
    fn report_fields() {
        let r = OutageReport::new(4, 0.5, 0.75);
        assert_eq!(r.l, 4);
        assert!(r.p_exact <= r.p_bound);
        assert!((r.exponent - 4.0 * 0.188_721_875_540_867).abs() < 1e-9);
        let json = serde_json::to_value(r).unwrap();
        for k in ["L", "theta", "a", "p_exact", "p_bound", "p_gauss", "exponent", "p_mc"] {
            assert!(json.get(k).is_some(), "missing {k}");
        }
        let r = OutageReport::new(8, 0.5, 1.3);
        assert!(r.impossible);
        assert_eq!(r.p_exact, 0.0);
    }

    #[test]
    fn exponent_curve_constant_at_zero_delta() {
        let t = ChannelConfig { delta: 0.0, ..ChannelConfig::new(1e8, 1e-7, 0.5, 0.5, 0.9) };
        let pts = exponent_curve(&t, 0.9, ratio_wideband(0.9), &[1e7, 1e8, 1e9]).unwrap();
        let d = kl(pts[0].a, 0.5);
        for p in pts {
            assert!((p.exponent - d).abs() < 1e-15);
            assert_eq!(p.l, 1.0);
        }
    }

    #[test]
    fn mc_trivial_rates() {
        let c = ChannelConfig::new(64e6, 1e-6, 0.5, 0.5, 0.3);
        let opts = OutageMcOptions { samples: 20_000, seed: 5, ..Default::default() };
        let zero = outage_mc(&c, 10.0, 0.0, 1.0, &opts).unwrap();
        assert_eq!(zero.p, 0.0);
        let all = outage_mc(&c, 10.0, 1e6, 1.0, &opts).unwrap();
        assert_eq!(all.p, 1.0);
        assert!(outage_mc(&c, 10.0, 1.0, 0.0, &opts).is_err());
    }

    proptest! {
        #[test]
        fn bound_dominates_exact(l in 1u64..200, theta in 0.01f64..0.99, frac in 0.0f64..1.0) {
            let a = theta + (1.0 - theta) * frac;
            prop_assert!(outage_exact(l, theta, a) <= outage_bound(l, theta, a) * (1.0 + 1e-12));
        }

        #[test]
        fn kl_nonnegative(a in 0.0f64..=1.0, p in 0.001f64..0.999) {
            prop_assert!(kl_bernoulli(a, p).unwrap() >= 0.0);
        }
    }
}
