use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::chunk_rng;

/// Cap on `|X|^n · |Y|^n` (and `|X|^n · |Z|^n`) for exhaustive evaluation.
pub const MAX_PAIRS: u64 = 1 << 20;
pub const MAX_BLOCK: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderRule {
    /// Maximum a-posteriori `x^n` inside the announced public bin given
    /// `y^n`; ties go to the lowest sequence index.
    MapWithinBin,
}

/// A one-way key-agreement scheme on blocks of `n` source letters.
///
/// Sequences are indexed as base-`alphabet` numbers with the first letter
/// least significant. `key_map[i]` is the key `f1(x^n)` and `public_map[i]`
/// the public message `g(x^n)` of sequence `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub n: usize,
    pub alphabet: usize,
    pub key_rate: f64,
    pub public_rate: f64,
    pub key_bins: u64,
    pub public_bins: u64,
    pub key_map: Vec<u64>,
    pub public_map: Vec<u64>,
    pub decoder: DecoderRule,
}

pub(crate) fn sequence_count(alphabet: usize, n: usize) -> Result<u64> {
    if n == 0 || n > MAX_BLOCK {
        return Err(Error::InvalidArgument(format!("block length must lie in 1..={MAX_BLOCK}, got {n}")));
    }
    let count = (alphabet as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if count > MAX_PAIRS {
        return Err(Error::ScaleCap { cells: count, cap: MAX_PAIRS });
    }
    Ok(count)
}

/// `⌈2^{n·rate}⌉`, with a 1e-9 shave so exact powers of two stay exact.
fn bin_count(n: usize, rate: f64) -> Result<u64> {
    if rate.is_nan() || rate < 0.0 {
        return Err(Error::InvalidArgument(format!("rates must be >= 0, got {rate}")));
    }
    let v = (n as f64 * rate).exp2();
    if v >= 2f64.powi(62) {
        return Err(Error::InvalidArgument(format!("2^(n*rate) = {v} bins is too many")));
    }
    Ok(((v - 1e-9).ceil() as u64).max(1))
}

impl BinningScheme {
    /// A scheme with explicit key and public maps.
    pub fn from_maps(n: usize, alphabet: usize, key_map: Vec<u64>, public_map: Vec<u64>) -> Result<Self> {
        let count = sequence_count(alphabet, n)? as usize;
        if key_map.len() != count || public_map.len() != count {
            return Err(Error::InvalidArgument(format!("maps must cover all {count} sequences")));
        }
        let key_bins = key_map.iter().copied().max().unwrap_or(0) + 1;
        let public_bins = public_map.iter().copied().max().unwrap_or(0) + 1;
        Ok(BinningScheme {
            n,
            alphabet,
            key_rate: (key_bins as f64).log2() / n as f64,
            public_rate: (public_bins as f64).log2() / n as f64,
            key_bins,
            public_bins,
            key_map,
            public_map,
            decoder: DecoderRule::MapWithinBin,
        })
    }

    pub fn sequences(&self) -> usize {
        self.key_map.len()
    }

    /// Whether every public bin holds at most one sequence.
    pub fn public_map_is_injective(&self) -> bool {
        let mut seen = self.public_map.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// Random binning: every `x^n` gets an independent uniform key index in
/// `[0, ⌈2^{nR}⌉)` and public index in `[0, ⌈2^{nRφ}⌉)`.
pub fn random_binning(n: usize, alphabet: usize, key_rate: f64, public_rate: f64, seed: u64) -> Result<BinningScheme> {
    let count = sequence_count(alphabet, n)?;
    let key_bins = bin_count(n, key_rate)?;
    let public_bins = bin_count(n, public_rate)?;
    let mut rng = chunk_rng(seed, 0);
    let mut key_map = Vec::with_capacity(count as usize);
    let mut public_map = Vec::with_capacity(count as usize);
    for _ in 0..count {
        key_map.push(rng.random_range(0..key_bins));
        public_map.push(rng.random_range(0..public_bins));
    }
    Ok(BinningScheme {
        n,
        alphabet,
        key_rate,
        public_rate,
        key_bins,
        public_bins,
        key_map,
        public_map,
        decoder: DecoderRule::MapWithinBin,
    })
}
