//! Small information-theory and binomial helpers shared across modules.

use statrs::function::factorial::ln_binomial;

/// `-p log2 p` with the `0 log 0 = 0` convention.
#[inline]
pub fn plog(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a (not necessarily normalized) mass vector.
pub fn entropy(mass: &[f64]) -> f64 {
    mass.iter().copied().map(plog).sum()
}

/// Binary entropy function h(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    plog(p) + plog(1.0 - p)
}

/// Binomial(n, p) probability mass at k, evaluated in log space.
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln = ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p();
    ln.exp()
}

/// The full Binomial(n, p) mass vector, indices `0..=n`.
pub fn binomial_pmf_vec(n: u64, p: f64) -> Vec<f64> {
    (0..=n).map(|k| binomial_pmf(n, p, k)).collect()
}
