//! Statistical checks of the sparsity model against independent oracles.

use std::collections::HashMap;

use sparsekey::exec::chunk_rng;
use sparsekey::model::{dof_pmf, state_entropy_bonus, DofSampler, DEFAULT_PMF_CAP};
use sparsekey::ChannelConfig;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

fn cfg_tw(tw: f64, delta: f64, theta: f64) -> ChannelConfig {
    ChannelConfig::new(tw * 1e6, 1e-6, delta, theta, 0.5)
}

#[test]
fn pmf_marginals_are_binomial() {
    for (tw, delta, theta) in [(8.0, 2.0 / 3.0, 0.5), (16.0, 0.5, 0.3), (40.0, 0.7, 0.8), (5.0, 1.0, 0.5)] {
        let c = cfg_tw(tw, delta, theta);
        let pmf = dof_pmf(&c, DEFAULT_PMF_CAP).unwrap();
        let m = c.bins();
        // Eve's per-bin activity is rho theta + (1 - rho) q0, which is rho
        // unless rho = 1 (no off-support bins, so it drops to theta)
        let rho = c.rho().min(1.0);
        let eve_p = if rho < 1.0 { rho } else { theta };
        let (main, eve) = (Binomial::new(rho, m).unwrap(), Binomial::new(eve_p, m).unwrap());
        for (k, (pa, pe)) in pmf.marginal_b_ab().iter().zip(pmf.marginal_b_e()).enumerate() {
            let (wa, we) = (main.pmf(k as u64), eve.pmf(k as u64));
            assert!((pa - wa).abs() < 1e-12, "b_ab={k}: {pa} vs {wa}");
            assert!((pe - we).abs() < 1e-12, "b_e={k}: {pe} vs {we}");
        }
        assert!((pmf.total_mass() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn overlap_count_given_main_count_is_binomial() {
    let c = cfg_tw(12.0, 0.6, 0.4);
    let pmf = dof_pmf(&c, DEFAULT_PMF_CAP).unwrap();
    let mut joint: HashMap<(u64, u64), f64> = HashMap::new();
    for cell in &pmf.cells {
        *joint.entry((cell.b_ab, cell.b_q)).or_default() += cell.p;
    }
    let main = Binomial::new(c.rho(), c.bins()).unwrap();
    for b_ab in 0..=c.bins() {
        let overlap = Binomial::new(c.theta, b_ab).unwrap();
        for b_q in 0..=b_ab {
            let got = joint.get(&(b_ab, b_q)).copied().unwrap_or(0.0);
            let want = main.pmf(b_ab) * overlap.pmf(b_q);
            assert!((got - want).abs() < 1e-12, "({b_ab}, {b_q}): {got} vs {want}");
        }
    }
}

#[test]
fn sampler_matches_pmf_chi_square() {
    for (seed, (tw, delta, theta)) in [(8.0, 2.0 / 3.0, 0.5), (16.0, 0.5, 0.3), (12.0, 0.8, 0.6)].into_iter().enumerate() {
        let c = cfg_tw(tw, delta, theta);
        let pmf = dof_pmf(&c, DEFAULT_PMF_CAP).unwrap();
        let sampler = DofSampler::new(&c).unwrap();
        let n = 50_000usize;
        let mut rng = chunk_rng(40 + seed as u64, 0);
        let mut counts: HashMap<(u64, u64, u64), usize> = HashMap::new();
        for _ in 0..n {
            let d = sampler.sample(&mut rng);
            assert!(d.is_valid(c.bins()));
            *counts.entry((d.b_ab, d.b_e, d.b_q)).or_default() += 1;
        }
        let mut expected: HashMap<(u64, u64, u64), f64> = HashMap::new();
        for cell in &pmf.cells {
            let d = cell.counts();
            *expected.entry((d.b_ab, d.b_e, d.b_q)).or_default() += cell.p;
        }
        // cells with fewer than 5 expected hits are pooled
        let (mut stat, mut dof, mut pooled_obs, mut pooled_exp) = (0.0, 0usize, 0.0, 0.0);
        for (key, p) in &expected {
            let e = p * n as f64;
            let o = counts.get(key).copied().unwrap_or(0) as f64;
            if e >= 5.0 {
                stat += (o - e) * (o - e) / e;
                dof += 1;
            } else {
                pooled_obs += o;
                pooled_exp += e;
            }
        }
        assert!(counts.keys().all(|k| expected.contains_key(k)), "sampled a zero-probability state");
        if pooled_exp > 0.0 {
            stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
            dof += 1;
        }
        let p_value = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(stat);
        assert!(p_value > 1e-4, "tw={tw}: chi2={stat} dof={dof} p={p_value}");
    }
}

#[test]
fn large_model_marginals_within_four_sigma() {
    let c = ChannelConfig::new(100e6, 10e-6, 0.5, 0.5, 0.1);
    let sampler = DofSampler::new(&c).unwrap();
    let mut rng = chunk_rng(3, 0);
    let n = 20_000;
    let (mut sa, mut se, mut sq) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let d = sampler.sample(&mut rng);
        sa += d.b_ab as f64;
        se += d.b_e as f64;
        sq += d.b_q as f64;
    }
    let (m, rho, theta) = (c.bins() as f64, c.rho(), c.theta);
    let sd_mean = (m * rho * (1.0 - rho) / n as f64).sqrt();
    assert!((sa / n as f64 - m * rho).abs() < 4.0 * sd_mean);
    assert!((se / n as f64 - m * rho).abs() < 4.0 * sd_mean);
    let sd_q = (m * rho * theta * (1.0 - rho * theta) / n as f64).sqrt();
    assert!((sq / n as f64 - m * rho * theta).abs() < 4.0 * sd_q);
}

#[test]
fn state_entropy_bonus_decays_with_block_count() {
    let c = ChannelConfig::new(100e6, 10e-6, 0.5, 0.5, 0.1);
    let mut last = f64::INFINITY;
    for n in [1, 2, 10, 100, 1000] {
        let b = state_entropy_bonus(&c, n).unwrap();
        assert!(b > 0.0 && b < last);
        last = b;
    }
    assert!(state_entropy_bonus(&c, 0).is_err());
}
