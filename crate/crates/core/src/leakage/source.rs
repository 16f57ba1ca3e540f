use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::entropy;

/// Largest alphabet accepted for X, Y or Z.
pub const MAX_ALPHABET: usize = 4;

/// Joint law `p(x, y, z)` of one source letter for a fixed state pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySource {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Row-major `p[(x * ny + y) * nz + z]`.
    pub p: Vec<f64>,
    pub degraded: bool,
}

impl ToySource {
    pub fn new(nx: usize, ny: usize, nz: usize, p: Vec<f64>) -> Result<Self> {
        for (name, n) in [("|X|", nx), ("|Y|", ny), ("|Z|", nz)] {
            if n == 0 || n > MAX_ALPHABET {
                return Err(Error::InvalidArgument(format!("{name} must lie in 1..={MAX_ALPHABET}, got {n}")));
            }
        }
        if p.len() != nx * ny * nz {
            return Err(Error::InvalidArgument(format!(
                "table has {} entries, expected {}",
                p.len(),
                nx * ny * nz
            )));
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("table sums to {total}, expected 1")));
        }
        let mut src = ToySource { nx, ny, nz, p, degraded: false };
        src.degraded = src.check_degraded();
        Ok(src)
    }

    /// `X ~ Bern(1/2)`, `Y = X ⊕ Bern(p_main)`, `Z = Y ⊕ Bern(p_eve)`.
    pub fn bsc_cascade(p_main: f64, p_eve: f64) -> Result<Self> {
        let mut p = vec![0.0; 8];
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let fy = if x == y { 1.0 - p_main } else { p_main };
                    let fz = if y == z { 1.0 - p_eve } else { p_eve };
                    p[(x * 2 + y) * 2 + z] = 0.5 * fy * fz;
                }
            }
        }
        ToySource::new(2, 2, 2, p)
    }

    /// Reads a CSV with columns `x,y,z,p`. Alphabet sizes are one more than
    /// the largest symbol seen in each column; missing cells are zero.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = t.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected x,y,z,p", i + 1)));
            }
            if f[0] == "x" {
                continue;
            }
            let sym = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {}: bad symbol {s:?}", i + 1)))
            };
            let p = f[3]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {}: bad probability {:?}", i + 1, f[3])))?;
            rows.push((sym(f[0])?, sym(f[1])?, sym(f[2])?, p));
        }
        if rows.is_empty() {
            return Err(Error::Parse("empty source table".into()));
        }
        let nx = rows.iter().map(|r| r.0).max().unwrap() + 1;
        let ny = rows.iter().map(|r| r.1).max().unwrap() + 1;
        let nz = rows.iter().map(|r| r.2).max().unwrap() + 1;
        if nx > MAX_ALPHABET || ny > MAX_ALPHABET || nz > MAX_ALPHABET {
            return Err(Error::InvalidArgument(format!("alphabets larger than {MAX_ALPHABET}")));
        }
        let mut p = vec![0.0; nx * ny * nz];
        for (x, y, z, v) in rows {
            p[(x * ny + y) * nz + z] += v;
        }
        ToySource::new(nx, ny, nz, p)
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p[(x * self.ny + y) * self.nz + z]
    }

    /// `p(x, y)` as an `nx × ny` row-major table.
    pub fn pxy(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                out[x * self.ny + y] = (0..self.nz).map(|z| self.prob(x, y, z)).sum();
            }
        }
        out
    }

    /// `p(x, z)` as an `nx × nz` row-major table.
    pub fn pxz(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.nz];
        for x in 0..self.nx {
            for z in 0..self.nz {
                out[x * self.nz + z] = (0..self.ny).map(|y| self.prob(x, y, z)).sum();
            }
        }
        out
    }

    pub fn px(&self) -> Vec<f64> {
        let pxy = self.pxy();
        (0..self.nx).map(|x| pxy[x * self.ny..(x + 1) * self.ny].iter().sum()).collect()
    }

    fn marginal_cols(table: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        (0..cols).map(|c| (0..rows).map(|r| table[r * cols + c]).sum()).collect()
    }

    /// `I(X;Y)` in bits.
    pub fn mi_xy(&self) -> f64 {
        let pxy = self.pxy();
        entropy(&self.px()) + entropy(&Self::marginal_cols(&pxy, self.nx, self.ny)) - entropy(&pxy)
    }

    /// `I(X;Z)` in bits.
    pub fn mi_xz(&self) -> f64 {
        let pxz = self.pxz();
        entropy(&self.px()) + entropy(&Self::marginal_cols(&pxz, self.nx, self.nz)) - entropy(&pxz)
    }

    /// `H(X|Y)` in bits.
    pub fn h_x_given_y(&self) -> f64 {
        let pxy = self.pxy();
        entropy(&pxy) - entropy(&Self::marginal_cols(&pxy, self.nx, self.ny))
    }

    /// Whether `p(x,y,z) = p(x,y) p(z|y)` within 1e-10.
    fn check_degraded(&self) -> bool {
        let pxy = self.pxy();
        let mut pyz = vec![0.0; self.ny * self.nz];
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    pyz[y * self.nz + z] += self.prob(x, y, z);
                }
            }
        }
        let py = Self::marginal_cols(&pxy, self.nx, self.ny);
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    let want = if py[y] > 0.0 {
                        pxy[x * self.ny + y] * pyz[y * self.nz + z] / py[y]
                    } else {
                        0.0
                    };
                    if (self.prob(x, y, z) - want).abs() > 1e-10 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Conditional secret-key capacity `I(X;Y) - I(X;Z)` of a source, in bits.
pub fn conditional_capacity_discrete(src: &ToySource) -> f64 {
    src.mi_xy() - src.mi_xz()
}
