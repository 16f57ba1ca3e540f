//! Per-bin Gaussian mutual-information kernels and their vector sums.
//!
//! All quantities are in bits. `ga`, `gb`, `ge` are the per-bin SNRs seen
//! by Alice, Bob and Eve after scaling by the bin variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log2((1+ga)(1+gb) / (1+ga+gb))` without argument checks.
#[inline]
pub(crate) fn iab(ga: f64, gb: f64) -> f64 {
    // ln_1p keeps precision when the ratio is within ~1e-8 of one
    let num = ga * gb;
    (num / (1.0 + ga + gb)).ln_1p() / std::f64::consts::LN_2
}

/// `log2((1+ga)(1+ge) / (1 + ga ge (1-η²) + ga + ge))` without checks.
#[inline]
pub(crate) fn iae(ga: f64, ge: f64, eta: f64) -> f64 {
    let e2 = eta * eta;
    let num = ga * ge * e2;
    let den = 1.0 + ga * ge * (1.0 - e2) + ga + ge;
    (num / den).ln_1p() / std::f64::consts::LN_2
}

fn check_snr(name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Alice–Bob mutual information of one bin.
pub fn i_ab(ga: f64, gb: f64) -> Result<f64> {
    check_snr("ga", ga)?;
    check_snr("gb", gb)?;
    Ok(iab(ga, gb))
}

/// Alice–Eve mutual information of one common-support bin with
/// coefficient correlation `eta`.
pub fn i_ae(ga: f64, ge: f64, eta: f64) -> Result<f64> {
    check_snr("ga", ga)?;
    check_snr("ge", ge)?;
    check_eta(eta)?;
    Ok(iae(ga, ge, eta))
}

/// Low-SNR approximation `x² / ln 2` of `i_ab(x, x)`.
pub fn i_ab_lowsnr(x: f64) -> f64 {
    x * x / std::f64::consts::LN_2
}

/// Low-SNR approximation `η² x y / ln 2` of `i_ae(x, y, η)`.
pub fn i_ae_lowsnr(x: f64, y: f64, eta: f64) -> f64 {
    eta * eta * x * y / std::f64::consts::LN_2
}

/// Whether Eve's effective per-bin SNR is strictly below Bob's, making her
/// observation a degraded version of Bob's.
pub fn is_eve_degraded(var_h: f64, var_he: f64, power: f64, nb: f64, ne: f64, eta: f64) -> bool {
    let bob = var_h * power / nb;
    let e2 = eta * eta;
    let eve = e2 * var_he * power / ((1.0 - e2) * var_he * power + ne);
    bob > eve
}

/// Per-bin power profiles of the main and Eve channels for one pattern pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub var_h: Vec<f64>,
    pub var_he: Vec<f64>,
    pub s_ab: Vec<bool>,
    pub s_e: Vec<bool>,
}

impl PowerProfile {
    /// Uniform unit-power profiles over the active bins of each pattern.
    pub fn uniform(s_ab: Vec<bool>, s_e: Vec<bool>) -> Result<Self> {
        if s_ab.len() != s_e.len() {
            return Err(Error::InvalidArgument("pattern lengths differ".into()));
        }
        let spread = |s: &[bool]| {
            let w = s.iter().filter(|&&b| b).count();
            s.iter()
                .map(|&b| if b { 1.0 / w as f64 } else { 0.0 })
                .collect::<Vec<_>>()
        };
        let p = PowerProfile {
            var_h: spread(&s_ab),
            var_he: spread(&s_e),
            s_ab,
            s_e,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn bins(&self) -> usize {
        self.s_ab.len()
    }

    /// Common-support indicator `Q_ℓ = s_ab,ℓ · s_e,ℓ`.
    pub fn overlap(&self, l: usize) -> bool {
        self.s_ab[l] && self.s_e[l]
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.s_ab.len();
        if self.s_e.len() != m || self.var_h.len() != m || self.var_he.len() != m {
            return Err(Error::InvalidArgument("profile vectors differ in length".into()));
        }
        for (name, var, s) in [("var_h", &self.var_h, &self.s_ab), ("var_he", &self.var_he, &self.s_e)] {
            for (l, (&v, &on)) in var.iter().zip(s.iter()).enumerate() {
                if v.is_nan() || v < 0.0 || ((v > 0.0) != on) {
                    return Err(Error::InvalidArgument(format!(
                        "{name}[{l}] = {v} inconsistent with pattern bit {on}"
                    )));
                }
            }
            // an all-zero pattern carries no power at all
            let total: f64 = var.iter().sum();
            if s.iter().any(|&b| b) && (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("{name} sums to {total}, expected 1")));
            }
        }
        Ok(())
    }
}

/// Closed-form `(I(X;Y|S), I(X;Z,S_e|S))` as sums over bins.
pub fn vector_mi_closed_form(
    profile: &PowerProfile,
    ga: f64,
    gb: f64,
    ge: f64,
    eta: f64,
) -> Result<(f64, f64)> {
    profile.validate()?;
    check_snr("ga", ga)?;
    check_snr("gb", gb)?;
    check_snr("ge", ge)?;
    check_eta(eta)?;
    let mut i_xy = 0.0;
    let mut i_xz = 0.0;
    for l in 0..profile.bins() {
        if !profile.s_ab[l] {
            continue;
        }
        let v = profile.var_h[l];
        i_xy += iab(v * ga, v * gb);
        if profile.overlap(l) {
            i_xz += iae(v * ga, profile.var_he[l] * ge, eta);
        }
    }
    Ok((i_xy, i_xz))
}
