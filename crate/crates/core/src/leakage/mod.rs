//! Exhaustive evaluation of one-way key agreement on small memoryless
//! sources.
//!
//! A [`BinningScheme`] maps each source block `x^n` to a key `K = f1(x^n)`
//! and a public message `Φ = g(x^n)`. [`evaluate`] sums over every
//! `(x^n, y^n)` and `(x^n, z^n)` pair to get the key error probability, the
//! per-letter key entropy, Eve's information `I(K; Z^n, Φ)/n` and Bob's
//! residual uncertainty `H(X^n | Φ, Y^n)/n` exactly. For degraded sources
//! these satisfy
//!
//! ```text
//! I(K; Z^n, Φ)/n  ≥  H(K)/n - H(X^n | Φ, Y^n)/n - Cs
//! ```
//!
//! with no asymptotic slack, which [`check_leakage_bound`] verifies.

mod binning;
mod source;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use binning::{random_binning, BinningScheme, DecoderRule, MAX_BLOCK, MAX_PAIRS};
pub use source::{conditional_capacity_discrete, ToySource, MAX_ALPHABET};

use crate::error::{Error, Result};
use crate::exec::{mix_seed, Execution};
use crate::info::{binary_entropy, entropy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub n: usize,
    /// `Pr(K ≠ K̂)`.
    pub pe: f64,
    /// `Pr(X^n ≠ X̂^n)`, the block error the Fano check is stated in.
    pub pe_seq: f64,
    /// `H(K)/n`.
    pub key_entropy: f64,
    /// `I(K; Z^n, Φ)/n`.
    pub leak: f64,
    /// `I(X^n; Z^n, Φ)/n`.
    pub source_leak: f64,
    /// `H(X^n | Φ, Y^n)/n`.
    pub residual: f64,
    /// `I(X;Y) - I(X;Z)`.
    pub cs: f64,
    pub degraded: bool,
    pub alphabet: usize,
}

impl LeakageReport {
    /// Fano's bound on the residual, `h(pe_seq)/n + pe_seq log2|X|`.
    pub fn fano_bound(&self) -> f64 {
        binary_entropy(self.pe_seq) / self.n as f64 + self.pe_seq * (self.alphabet as f64).log2()
    }

    pub fn fano_holds(&self) -> bool {
        self.residual <= self.fano_bound() + 1e-12
    }
}

/// Letter-wise product table of a two-variable law over `n`-blocks.
/// Entry `[a_idx * nb^n + b_idx]` with first letters least significant.
fn product_table(pair: &[f64], na: usize, nb: usize, n: usize) -> Vec<f64> {
    let mut table = vec![1.0];
    let (mut sa, mut sb) = (1usize, 1usize);
    for _ in 0..n {
        let mut next = vec![0.0; sa * na * sb * nb];
        let nsb = sb * nb;
        for a_hi in 0..na {
            for b_hi in 0..nb {
                let w = pair[a_hi * nb + b_hi];
                if w == 0.0 {
                    continue;
                }
                for a in 0..sa {
                    for b in 0..sb {
                        let v = table[a * sb + b];
                        next[(a + a_hi * sa) * nsb + b + b_hi * sb] = v * w;
                    }
                }
            }
        }
        table = next;
        sa *= na;
        sb *= nb;
    }
    table
}

fn dense_labels(map: &[u64]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &v in map {
        let next = ids.len();
        ids.entry(v).or_insert(next);
    }
    (map.iter().map(|v| ids[v]).collect(), ids.len())
}

pub fn evaluate(scheme: &BinningScheme, src: &ToySource) -> Result<LeakageReport> {
    evaluate_with(scheme, src, Execution::default())
}

/// Exact Pe, key entropy, leakage and residual of `scheme` on `src`.
pub fn evaluate_with(scheme: &BinningScheme, src: &ToySource, exec: Execution) -> Result<LeakageReport> {
    if scheme.alphabet != src.nx {
        return Err(Error::InvalidArgument(format!(
            "scheme alphabet {} does not match |X| = {}",
            scheme.alphabet, src.nx
        )));
    }
    let n = scheme.n;
    let nsx = scheme.sequences();
    let nsy = (src.ny as u64).pow(n as u32);
    let nsz = (src.nz as u64).pow(n as u32);
    for other in [nsy, nsz] {
        let cells = nsx as u64 * other;
        if cells > MAX_PAIRS {
            return Err(Error::ScaleCap { cells, cap: MAX_PAIRS });
        }
    }
    let (nsy, nsz) = (nsy as usize, nsz as usize);

    let pxy = product_table(&src.pxy(), src.nx, src.ny, n);
    let pxz = product_table(&src.pxz(), src.nx, src.nz, n);
    let px: Vec<f64> = (0..nsx).map(|x| pxy[x * nsy..(x + 1) * nsy].iter().sum()).collect();

    let (key, _) = dense_labels(&scheme.key_map);
    let (public, n_public) = dense_labels(&scheme.public_map);
    let mut members = vec![Vec::new(); n_public];
    for (x, &phi) in public.iter().enumerate() {
        members[phi].push(x);
    }

    let mut p_key = vec![0.0; nsx];
    for (x, &k) in key.iter().enumerate() {
        p_key[k] += px[x];
    }

    // Bob: MAP decoding inside the public bin, per y^n.
    let per_y = exec.map(nsy, |y| {
        let (mut correct, mut key_err, mut residual) = (0.0, 0.0, 0.0);
        for bin in &members {
            let mut best = bin[0];
            let mut q = 0.0;
            for &x in bin {
                let p = pxy[x * nsy + y];
                q += p;
                if p > pxy[best * nsy + y] {
                    best = x;
                }
            }
            correct += pxy[best * nsy + y];
            for &x in bin {
                let p = pxy[x * nsy + y];
                if p > 0.0 {
                    residual += p * (q / p).log2();
                    if key[x] != key[best] {
                        key_err += p;
                    }
                }
            }
        }
        (correct, key_err, residual)
    });
    let (correct, key_err, residual) = per_y
        .into_iter()
        .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));

    // Eve: I(K; Z^n, Φ) and I(X^n; Z^n, Φ), per public bin.
    let per_bin = exec.map(n_public, |phi| {
        let bin = &members[phi];
        let mut s = vec![0.0; nsz];
        let mut rows = BTreeMap::<usize, Vec<f64>>::new();
        for &x in bin {
            let row = rows.entry(key[x]).or_insert_with(|| vec![0.0; nsz]);
            for z in 0..nsz {
                let p = pxz[x * nsz + z];
                row[z] += p;
                s[z] += p;
            }
        }
        let mut leak = 0.0;
        for (k, row) in &rows {
            for z in 0..nsz {
                let t = row[z];
                if t > 0.0 {
                    leak += t * (t / (p_key[*k] * s[z])).log2();
                }
            }
        }
        let mut source_leak = 0.0;
        for &x in bin {
            for z in 0..nsz {
                let p = pxz[x * nsz + z];
                if p > 0.0 {
                    source_leak += p * (p / (px[x] * s[z])).log2();
                }
            }
        }
        (leak, source_leak)
    });
    let (leak, source_leak) = per_bin.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));

    let nf = n as f64;
    Ok(LeakageReport {
        n,
        pe: key_err.clamp(0.0, 1.0),
        pe_seq: (1.0 - correct).clamp(0.0, 1.0),
        key_entropy: entropy(&p_key).max(0.0) / nf,
        leak: leak.max(0.0) / nf,
        source_leak: source_leak.max(0.0) / nf,
        residual: residual.max(0.0) / nf,
        cs: conditional_capacity_discrete(src),
        degraded: src.degraded,
        alphabet: src.nx,
    })
}

/// Checks `leak ≥ key_entropy - residual - cs` and returns
/// `(holds, leak - rhs)`; `holds` allows 1e-12 of rounding.
pub fn check_leakage_bound(report: &LeakageReport) -> Result<(bool, f64)> {
    if !report.degraded {
        return Err(Error::NotDegraded);
    }
    let rhs = report.key_entropy - report.residual - report.cs;
    let slack = report.leak - rhs;
    Ok((slack >= -1e-12, slack))
}

/// Median statistics of random schemes at one block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: usize,
    pub key_rate: f64,
    pub public_rate: f64,
    pub median_pe: f64,
    pub median_leak: f64,
    pub median_key_entropy: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Evaluates `schemes` random binnings with `R = Cs + key_margin` and
/// `Rφ = H(X|Y) + public_margin` at every block length in `block_lengths`.
/// Scheme `j` at length `n` uses seed `mix(seed, n, j)`.
pub fn random_scheme_reports(
    src: &ToySource,
    n: usize,
    key_margin: f64,
    public_margin: f64,
    schemes: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<(u64, LeakageReport)>> {
    let key_rate = (conditional_capacity_discrete(src) + key_margin).max(0.0);
    let public_rate = (src.h_x_given_y() + public_margin).max(0.0);
    let out = exec.map(schemes, |j| {
        let s = mix_seed(seed, n as u64, j as u64);
        let scheme = random_binning(n, src.nx, key_rate, public_rate, s)?;
        Ok((s, evaluate_with(&scheme, src, Execution::Sequential)?))
    });
    out.into_iter().collect()
}

pub fn achievability_trend(
    src: &ToySource,
    block_lengths: &[usize],
    key_margin: f64,
    public_margin: f64,
    schemes: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<TrendPoint>> {
    if schemes == 0 {
        return Err(Error::InvalidArgument("need at least one scheme".into()));
    }
    block_lengths
        .iter()
        .map(|&n| {
            let reports = random_scheme_reports(src, n, key_margin, public_margin, schemes, seed, exec)?;
            Ok(TrendPoint {
                n,
                key_rate: (conditional_capacity_discrete(src) + key_margin).max(0.0),
                public_rate: (src.h_x_given_y() + public_margin).max(0.0),
                median_pe: median(reports.iter().map(|r| r.1.pe).collect()),
                median_leak: median(reports.iter().map(|r| r.1.leak).collect()),
                median_key_entropy: median(reports.iter().map(|r| r.1.key_entropy).collect()),
            })
        })
        .collect()
}
