//! Statistical model of the δ-sparse main channel and the correlated
//! eavesdropper.
//!
//! The delay spread `τm·W` is cut into `M = ⌈τm·W⌉` resolvable bins. Each
//! bin of the main (Alice–Bob) channel is active with probability
//! `ρ = (τm·W)^-(1-δ)`, so the mean number of degrees of freedom is
//! `L = (τm·W)^δ`. Eve's pattern follows an asymmetric binary channel: an
//! active main bin stays active for Eve with probability `θ`, an inactive
//! one turns on with probability `q0`, chosen so that Eve's marginal is
//! again Bernoulli(ρ).

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{binomial_pmf_vec, entropy};

/// Default ceiling on `M` for exact enumeration of [`DofPmf`].
pub const DEFAULT_PMF_CAP: u64 = 128;

/// Physical and statistical channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub bandwidth_hz: f64,
    pub max_delay_s: f64,
    pub delta: f64,
    pub theta: f64,
    pub eta: f64,
    pub snr_a: f64,
    pub snr_b: f64,
    pub snr_e: f64,
    pub power: f64,
}

impl Default for ChannelConfig {
    /// W = 100 MHz, τm = 10 µs, δ = 0.5, θ = 0.5, η = 0.1, unit SNRs.
    fn default() -> Self {
        ChannelConfig {
            bandwidth_hz: 100e6,
            max_delay_s: 10e-6,
            delta: 0.5,
            theta: 0.5,
            eta: 0.1,
            snr_a: 1.0,
            snr_b: 1.0,
            snr_e: 1.0,
            power: 1.0,
        }
    }
}

impl ChannelConfig {
    pub fn new(bandwidth_hz: f64, max_delay_s: f64, delta: f64, theta: f64, eta: f64) -> Self {
        ChannelConfig {
            bandwidth_hz,
            max_delay_s,
            delta,
            theta,
            eta,
            ..ChannelConfig::default()
        }
    }

    pub fn with_bandwidth(mut self, bandwidth_hz: f64) -> Self {
        self.bandwidth_hz = bandwidth_hz;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// The dimensionless delay-bandwidth product τm·W.
    pub fn delay_bandwidth(&self) -> f64 {
        self.max_delay_s * self.bandwidth_hz
    }

    /// Number of resolvable delay bins, `M = ⌈τm·W⌉`.
    ///
    /// Products such as `10e-6 * 100e6` land a few ulps above the integer,
    /// so the ceiling is taken after a relative shave of 1e-12.
    pub fn bins(&self) -> u64 {
        let tw = self.delay_bandwidth();
        (tw * (1.0 - 1e-12)).ceil().max(1.0) as u64
    }

    /// Per-bin activity probability ρ.
    pub fn rho(&self) -> f64 {
        self.delay_bandwidth().powf(-(1.0 - self.delta)).min(1.0)
    }

    /// Mean number of degrees of freedom `L = (τm·W)^δ` (real valued).
    pub fn dof_mean(&self) -> f64 {
        self.delay_bandwidth().powf(self.delta)
    }

    /// Eve's off-support activation probability `q0 = ρ(1-θ)/(1-ρ)`.
    ///
    /// When `ρ = 1` there are no off-support bins and `q0` is taken as 0.
    pub fn q0(&self) -> f64 {
        let rho = self.rho();
        if rho >= 1.0 {
            0.0
        } else {
            rho * (1.0 - self.theta) / (1.0 - rho)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("max_delay_s", self.max_delay_s),
            ("snr_a", self.snr_a),
            ("snr_b", self.snr_b),
            ("snr_e", self.snr_e),
            ("power", self.power),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.delay_bandwidth() <= 1.0 {
            return bad(format!(
                "max_delay_s * bandwidth_hz must exceed 1, got {}",
                self.delay_bandwidth()
            ));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        let q0 = self.q0();
        if q0 > 1.0 {
            return bad(format!(
                "eve off-support probability q0 = {q0} exceeds 1 (rho = {}, theta = {})",
                self.rho(),
                self.theta
            ));
        }
        Ok(())
    }
}

/// Returns ρ for a valid configuration.
pub fn sparsity_probability(cfg: &ChannelConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.rho())
}

/// Eve's pattern transition probabilities `(θ, q0)`.
pub fn eve_transitions(cfg: &ChannelConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    Ok((cfg.theta, cfg.q0()))
}

/// One realization of the pattern weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DofCounts {
    /// Weight of the main-channel pattern.
    pub b_ab: u64,
    /// Weight of Eve's pattern.
    pub b_e: u64,
    /// Weight of the common support.
    pub b_q: u64,
}

impl DofCounts {
    pub fn new(b_ab: u64, b_e: u64, b_q: u64) -> Self {
        DofCounts { b_ab, b_e, b_q }
    }

    pub fn is_valid(&self, bins: u64) -> bool {
        self.b_q <= self.b_ab.min(self.b_e) && self.b_ab <= bins && self.b_e <= bins
    }
}

/// Pre-built samplers for repeated draws of [`DofCounts`].
#[derive(Debug, Clone)]
pub struct DofSampler {
    bins: u64,
    theta: f64,
    q0: f64,
    main: Binomial,
}

impl DofSampler {
    pub fn new(cfg: &ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let bins = cfg.bins();
        let main = Binomial::new(bins, cfg.rho())
            .map_err(|e| Error::InvalidConfig(format!("main-channel binomial: {e}")))?;
        Ok(DofSampler {
            bins,
            theta: cfg.theta,
            q0: cfg.q0(),
            main,
        })
    }

    pub fn bins(&self) -> u64 {
        self.bins
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DofCounts {
        let b_ab = self.main.sample(rng);
        let b_q = draw_binomial(rng, b_ab, self.theta);
        let e0 = draw_binomial(rng, self.bins - b_ab, self.q0);
        DofCounts {
            b_ab,
            b_e: b_q + e0,
            b_q,
        }
    }
}

pub(crate) fn draw_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    // p is already checked to lie strictly inside (0, 1)
    Binomial::new(n, p).unwrap().sample(rng)
}

/// Draws one [`DofCounts`] from the pattern model.
pub fn sample_dof<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Result<DofCounts> {
    Ok(DofSampler::new(cfg)?.sample(rng))
}

/// One cell of the exact joint distribution, keyed by `(b_ab, b_q, e0)`
/// with `e0 = b_e - b_q` the number of Eve-only bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofCell {
    pub b_ab: u64,
    pub b_q: u64,
    pub e0: u64,
    pub p: f64,
}

impl DofCell {
    pub fn counts(&self) -> DofCounts {
        DofCounts {
            b_ab: self.b_ab,
            b_e: self.b_q + self.e0,
            b_q: self.b_q,
        }
    }
}

/// Exact joint pmf of `(b_ab, b_q, e0)`. Cells with zero mass are omitted.
#[derive(Debug, Clone)]
pub struct DofPmf {
    pub bins: u64,
    pub cells: Vec<DofCell>,
}

impl DofPmf {
    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.p).sum()
    }

    pub fn expect<F: Fn(DofCounts) -> f64>(&self, f: F) -> f64 {
        self.cells.iter().map(|c| c.p * f(c.counts())).sum()
    }

    pub fn marginal_b_ab(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.bins as usize + 1];
        for c in &self.cells {
            out[c.b_ab as usize] += c.p;
        }
        out
    }

    pub fn marginal_b_e(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.bins as usize + 1];
        for c in &self.cells {
            out[(c.b_q + c.e0) as usize] += c.p;
        }
        out
    }
}

/// Exact factorized pmf `p(b_ab) p(b_q | b_ab) p(e0 | b_ab)`.
pub fn dof_pmf(cfg: &ChannelConfig, m_cap: u64) -> Result<DofPmf> {
    cfg.validate()?;
    let bins = cfg.bins();
    if bins > m_cap {
        return Err(Error::TooManyBins { bins, cap: m_cap });
    }
    let (rho, theta, q0) = (cfg.rho(), cfg.theta, cfg.q0());
    let main = binomial_pmf_vec(bins, rho);
    let mut cells = Vec::new();
    for (b_ab, &pa) in main.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let b_ab = b_ab as u64;
        let overlap = binomial_pmf_vec(b_ab, theta);
        let off = binomial_pmf_vec(bins - b_ab, q0);
        for (b_q, &pq) in overlap.iter().enumerate() {
            if pq == 0.0 {
                continue;
            }
            for (e0, &pe) in off.iter().enumerate() {
                let p = pa * pq * pe;
                if p > 0.0 {
                    cells.push(DofCell {
                        b_ab,
                        b_q: b_q as u64,
                        e0: e0 as u64,
                        p,
                    });
                }
            }
        }
    }
    Ok(DofPmf { bins, cells })
}

/// Per-bin `H(S_ab | S_e)` in bits for the four-outcome joint law
/// `{ρθ, ρ(1-θ), (1-ρ)q0, (1-ρ)(1-q0)}`.
pub fn conditional_state_entropy(rho: f64, theta: f64, q0: f64) -> f64 {
    let joint = [
        rho * theta,
        rho * (1.0 - theta),
        (1.0 - rho) * q0,
        (1.0 - rho) * (1.0 - q0),
    ];
    let eve_on = joint[0] + joint[2];
    (entropy(&joint) - entropy(&[eve_on, 1.0 - eve_on])).max(0.0)
}

/// The `(1/n) H(S_ab | S_e)` term of the ergodic lower bound, with the
/// pattern entropy summed over all `M` independent bins.
pub fn state_entropy_bonus(cfg: &ChannelConfig, n: u64) -> Result<f64> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("block length n must be >= 1".into()));
    }
    let per_bin = conditional_state_entropy(cfg.rho(), cfg.theta, cfg.q0());
    Ok(cfg.bins() as f64 * per_bin / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::chunk_rng;

    fn cfg_tw(tw: f64, delta: f64, theta: f64) -> ChannelConfig {
        ChannelConfig::new(tw * 1e6, 1e-6, delta, theta, 0.5)
    }

    #[test]
    fn rho_power_law() {
        let c = cfg_tw(1000.0, 0.5, 0.5);
        let rho = sparsity_probability(&c).unwrap();
        assert!((rho - 0.031_622_776_6).abs() < 1e-9);
        assert!((c.dof_mean() - 31.622_776_6).abs() < 1e-6);
        assert!((rho * 1000.0 - c.dof_mean()).abs() < 1e-9);
        assert_eq!(c.bins(), 1000);
    }

    #[test]
    fn rich_channel_has_rho_one() {
        for tw in [2.0, 17.5, 1000.0] {
            let c = cfg_tw(tw, 1.0, 1.0);
            assert_eq!(sparsity_probability(&c).unwrap(), 1.0);
        }
    }

    #[test]
    fn bins_tolerate_float_products() {
        let c = ChannelConfig::new(100e6, 10e-6, 0.5, 0.5, 0.1);
        assert_eq!(c.bins(), 1000);
        assert_eq!(cfg_tw(7.2, 0.5, 0.5).bins(), 8);
    }

    #[test]
    fn eve_transition_examples() {
        let (theta, q0) = eve_transitions(&cfg_tw(1000.0, 0.5, 0.5)).unwrap();
        assert_eq!(theta, 0.5);
        let rho = 1000f64.powf(-0.5);
        assert!((rho * 0.5 + (1.0 - rho) * q0 - rho).abs() < 1e-15);
        assert!((q0 - 0.016_327_7).abs() < 1e-7, "{q0}");
        let (_, q0) = eve_transitions(&cfg_tw(1000.0, 0.5, 1.0)).unwrap();
        assert_eq!(q0, 0.0);
        // rho = 1000^-0.05 ≈ 0.708 makes q0 ≈ 1.21
        assert!(matches!(
            eve_transitions(&cfg_tw(1000.0, 0.95, 0.5)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn eve_marginal_matches_rho() {
        let c = cfg_tw(1000.0, 0.5, 0.3);
        let rho = c.rho();
        let marginal = rho * c.theta + (1.0 - rho) * c.q0();
        assert!((marginal - rho).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(cfg_tw(1.0, 0.5, 0.5).validate().is_err());
        assert!(cfg_tw(10.0, 0.0, 0.5).validate().is_err());
        assert!(cfg_tw(10.0, 1.1, 0.5).validate().is_err());
        assert!(cfg_tw(10.0, 0.5, -0.1).validate().is_err());
        let mut c = cfg_tw(10.0, 0.5, 0.5);
        c.eta = 1.5;
        assert!(c.validate().is_err());
        c.eta = 0.5;
        c.snr_b = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn full_overlap_is_deterministic_composition() {
        let c = cfg_tw(50.0, 0.5, 1.0);
        let mut rng = chunk_rng(1, 0);
        for _ in 0..1000 {
            let d = sample_dof(&c, &mut rng).unwrap();
            assert_eq!(d.b_q, d.b_ab);
            assert_eq!(d.b_e, d.b_ab);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = cfg_tw(300.0, 0.7, 0.4);
        let s = DofSampler::new(&c).unwrap();
        let a: Vec<_> = (0..50).scan(chunk_rng(9, 0), |r, _| Some(s.sample(r))).collect();
        let b: Vec<_> = (0..50).scan(chunk_rng(9, 0), |r, _| Some(s.sample(r))).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|d| d.is_valid(s.bins())));
    }

    #[test]
    fn mean_overlap_rich_channel() {
        let c = cfg_tw(1000.0, 1.0, 0.5);
        let s = DofSampler::new(&c).unwrap();
        let mut rng = chunk_rng(2024, 0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| s.sample(&mut rng).b_q as f64).sum::<f64>() / n as f64;
        let sigma = (1000.0 * 0.25 / n as f64).sqrt();
        assert!((mean - 500.0).abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn pmf_examples() {
        // M = 4, rho = 0.5
        let p = dof_pmf(&cfg_tw(4.0, 0.5, 0.5), DEFAULT_PMF_CAP).unwrap();
        assert!((p.total_mass() - 1.0).abs() < 1e-12);

        let p = dof_pmf(&cfg_tw(2.0, 1.0, 1.0), DEFAULT_PMF_CAP).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert_eq!((p.cells[0].b_ab, p.cells[0].b_q, p.cells[0].e0), (2, 2, 0));
        assert!((p.cells[0].p - 1.0).abs() < 1e-15);

        // M = 8, rho = 8^(-1/3) = 0.5
        let c = cfg_tw(8.0, 2.0 / 3.0, 0.5);
        assert!((c.rho() - 0.5).abs() < 1e-12);
        let p = dof_pmf(&c, DEFAULT_PMF_CAP).unwrap();
        assert!((p.expect(|d| d.b_q as f64) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_cap_enforced() {
        let c = cfg_tw(1000.0, 0.5, 0.5);
        assert!(matches!(
            dof_pmf(&c, DEFAULT_PMF_CAP),
            Err(Error::TooManyBins { bins: 1000, cap: 128 })
        ));
    }

    #[test]
    fn entropy_bonus_examples() {
        let c = cfg_tw(64.0, 0.5, 1.0);
        for n in [1, 5, 1000] {
            assert_eq!(state_entropy_bonus(&c, n).unwrap(), 0.0);
        }
        // single bin, rho = theta = q0 = 0.5: all four outcomes equally likely,
        // H(S_ab, S_e) = 2 bits and H(S_e) = 1 bit.
        let four = [0.25f64; 4];
        let h_joint: f64 = four.iter().map(|p| -p * p.log2()).sum();
        assert!((conditional_state_entropy(0.5, 0.5, 0.5) - (h_joint - 1.0)).abs() < 1e-15);

        let c = cfg_tw(64.0, 0.5, 0.3);
        let big = state_entropy_bonus(&c, 1_000_000_000).unwrap();
        assert!(big < 1e-6);
        assert!(state_entropy_bonus(&c, 0).is_err());
    }
}
