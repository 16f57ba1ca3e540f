//! Direct Gaussian mutual information from covariance determinants.
//!
//! Builds the received-signal covariances for a concrete sounding sequence
//! and evaluates `log2(det R_X det R_Y / det R_XY)` with Cholesky
//! log-determinants. With an impulse sounding, `DᴴD = P·I` holds exactly
//! and the result must equal [`vector_mi_closed_form`]; with a
//! white pseudo-noise sequence it converges to it as the sequence grows.
//!
//! [`vector_mi_closed_form`]: crate::mutual_info::vector_mi_closed_form

use std::io::BufRead;

use nalgebra::{Complex, DMatrix};
use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::chunk_rng;
use crate::mutual_info::PowerProfile;

type C64 = Complex<f64>;

/// A complex sounding sequence `d` of length `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingDesign {
    pub d: Vec<C64>,
}

impl SoundingDesign {
    /// `d = √P (1, 0, …, 0)` of length `len`.
    pub fn impulse(power: f64, len: usize) -> Self {
        let mut d = vec![C64::new(0.0, 0.0); len.max(1)];
        d[0] = C64::new(power.sqrt(), 0.0);
        SoundingDesign { d }
    }

    /// Unit-modulus random-phase sequence scaled so that `dᴴd = P`.
    pub fn pseudo_random(power: f64, len: usize, seed: u64) -> Self {
        let mut rng = chunk_rng(seed, 0);
        let amp = (power / len as f64).sqrt();
        let d = (0..len)
            .map(|_| C64::from_polar(amp, rng.random::<f64>() * std::f64::consts::TAU))
            .collect();
        SoundingDesign { d }
    }

    /// Binary maximal-length (PN) sequence of `±√(P/len)` chips.
    ///
    /// Uses the longest LFSR whose period `2^d - 1` fits in `len`, extended
    /// cyclically and started `phase` chips in. Over at least one full
    /// period the autocorrelation at small lags is about `lag/len`, so
    /// `DᴴD` is close to `P·I` when the channel is short.
    pub fn pn(power: f64, len: usize, phase: usize) -> Self {
        let len = len.max(1);
        let degree = (2..=16).rev().find(|&d| (1usize << d) - 1 <= len).unwrap_or(2);
        let chips = m_sequence(degree);
        let amp = (power / len as f64).sqrt();
        let d = (0..len)
            .map(|i| C64::new(if chips[(i + phase) % chips.len()] { amp } else { -amp }, 0.0))
            .collect();
        SoundingDesign { d }
    }

    /// Reads a sequence from a text column: one sample per line, either
    /// `re` or `re,im`. Blank lines and lines starting with `#` are
    /// skipped, as is a non-numeric header line.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut d = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut parts = t.split([',', ' ', '\t']).filter(|s| !s.is_empty());
            let re = parts.next().unwrap_or_default();
            let Ok(re) = re.parse::<f64>() else {
                if d.is_empty() && lineno == 0 {
                    continue;
                }
                return Err(Error::Parse(format!("line {}: bad sample {t:?}", lineno + 1)));
            };
            let im = match parts.next() {
                Some(s) => s
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad sample {t:?}", lineno + 1)))?,
                None => 0.0,
            };
            d.push(C64::new(re, im));
        }
        if d.is_empty() {
            return Err(Error::Parse("sounding sequence is empty".into()));
        }
        Ok(SoundingDesign { d })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Sounding energy `dᴴd`.
    pub fn power(&self) -> f64 {
        self.d.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Number of received samples for `bins` delay taps.
    pub fn n_rows(&self, bins: usize) -> usize {
        self.d.len() + bins - 1
    }

    /// The `(K+M-1) × M` convolution (Toeplitz) matrix.
    pub fn toeplitz(&self, bins: usize) -> DMatrix<C64> {
        let rows = self.n_rows(bins);
        DMatrix::from_fn(rows, bins, |i, j| {
            if i >= j && i - j < self.d.len() {
                self.d[i - j]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

fn log2_det(m: DMatrix<C64>, what: &'static str) -> Result<f64> {
    let chol = m.cholesky().ok_or(Error::SingularCovariance(what))?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)].re;
        // pivots below 1e-9 in variance units count as singular
        if !d.is_finite() || d * d <= 1e-9 {
            return Err(Error::SingularCovariance(what));
        }
        acc += d.ln();
    }
    Ok(2.0 * acc / std::f64::consts::LN_2)
}

/// One period of the maximal-length sequence of a degree-`d` Fibonacci
/// LFSR, for `2 <= d <= 16`.
fn m_sequence(degree: u32) -> Vec<bool> {
    // feedback taps of primitive polynomials, counted from the output end
    let taps: &[u32] = match degree {
        2 => &[2, 1],
        3 => &[3, 2],
        4 => &[4, 3],
        5 => &[5, 3],
        6 => &[6, 5],
        7 => &[7, 6],
        8 => &[8, 6, 5, 4],
        9 => &[9, 5],
        10 => &[10, 7],
        11 => &[11, 9],
        12 => &[12, 6, 4, 1],
        13 => &[13, 4, 3, 1],
        14 => &[14, 5, 3, 1],
        15 => &[15, 14],
        _ => &[16, 15, 13, 4],
    };
    let period = (1usize << degree) - 1;
    let mut state: u32 = (1 << degree) - 1;
    (0..period)
        .map(|_| {
            let fb = taps.iter().fold(0, |acc, &t| acc ^ (state >> (degree - t)) & 1);
            let out = state & 1 == 1;
            state = (state >> 1) | (fb << (degree - 1));
            out
        })
        .collect()
}

fn block(a: &DMatrix<C64>, b: &DMatrix<C64>, c: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(&b.adjoint());
    m.view_mut((n, n), (n, n)).copy_from(c);
    m
}

/// `(I(X;Y), I(X;Z))` in bits from exact covariance determinants.
///
/// The main/Eve cross-covariance on a common-support bin is
/// `η √(σ²_ℓ σ̃²_ℓ)`, the only scaling that keeps the pair's correlation
/// coefficient equal to `η` for unequal profiles.
pub fn vector_mi_logdet_oracle(
    design: &SoundingDesign,
    profile: &PowerProfile,
    na: f64,
    nb: f64,
    ne: f64,
    eta: f64,
) -> Result<(f64, f64)> {
    profile.validate()?;
    for (name, v) in [("na", na), ("nb", nb), ("ne", ne)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance {name} must be positive, got {v}")));
        }
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta must lie in [0, 1], got {eta}")));
    }
    if design.is_empty() {
        return Err(Error::InvalidArgument("empty sounding sequence".into()));
    }
    let bins = profile.bins();
    let d = design.toeplitz(bins);
    let n = d.nrows();

    let diag = |f: &dyn Fn(usize) -> f64| {
        DMatrix::<C64>::from_fn(bins, bins, |i, j| {
            if i == j {
                C64::new(f(i), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };
    let r_h = diag(&|l| profile.var_h[l]);
    let r_he = diag(&|l| profile.var_he[l]);
    let r_cross = diag(&|l| {
        if profile.overlap(l) {
            eta * (profile.var_h[l] * profile.var_he[l]).sqrt()
        } else {
            0.0
        }
    });

    let dh = d.adjoint();
    let signal = &d * &r_h * &dh;
    let eve_signal = &d * &r_he * &dh;
    let cross = &d * &r_cross * &dh;
    let eye = DMatrix::<C64>::identity(n, n);

    let r_x = &signal + &eye * C64::new(na, 0.0);
    let r_y = &signal + &eye * C64::new(nb, 0.0);
    let r_z = &eve_signal + &eye * C64::new(ne, 0.0);
    let r_xy = block(&r_x, &signal, &r_y);
    let r_xz = block(&r_x, &cross, &r_z);

    let lx = log2_det(r_x, "R_X")?;
    let ly = log2_det(r_y, "R_Y")?;
    let lz = log2_det(r_z, "R_Z")?;
    let lxy = log2_det(r_xy, "R_XY")?;
    let lxz = log2_det(r_xz, "R_XZ")?;
    Ok((lx + ly - lxy, lx + lz - lxz))
}
