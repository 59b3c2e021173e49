//! Banded matrices and a partial-pivoting banded LU.
//!
//! Storage is row-major over the band: entry `(i, j)` lives at
//! `data[i * (kl + ku + 1) + (j + kl - i)]` whenever `-kl <= j - i <= ku`.
//! Rectangular shapes are allowed for operators such as the clamped
//! second difference that maps interior values onto the full node set.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    rows: usize,
    cols: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(rows: usize, cols: usize, kl: usize, ku: usize) -> Self {
        Self {
            rows,
            cols,
            kl,
            ku,
            data: vec![0.0; rows * (kl + ku + 1)],
        }
    }

    pub fn square(n: usize, kl: usize, ku: usize) -> Self {
        Self::zeros(n, n, kl, ku)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of sub-diagonals.
    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    /// Number of super-diagonals.
    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Sets an entry. Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    /// Column range holding the band of row `i`.
    #[inline]
    pub fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku + 1).min(self.cols);
        lo..hi.max(lo)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in self.row_span(i) {
                acc += self.data[self.slot(i, j)] * x[j];
            }
            *yi = acc;
        }
    }

    /// Product `self * other` as a banded matrix with summed bandwidths.
    pub fn compose(&self, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = BandMatrix::zeros(
            self.rows,
            other.cols,
            self.kl + other.kl,
            self.ku + other.ku,
        );
        for i in 0..self.rows {
            for m in self.row_span(i) {
                let a = self.get(i, m);
                if a == 0.0 {
                    continue;
                }
                for j in other.row_span(m) {
                    out.add(i, j, a * other.get(m, j));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn lu(&self) -> Result<BandLu> {
        BandLu::factor(self)
    }
}

/// LU factors of a square band matrix with row interchanges.
///
/// The upper factor has bandwidth `kl + ku` after pivoting; multipliers for
/// column `k` are stored in rows `k+1..=k+kl` at column `k`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    lu: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn factor(a: &BandMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::InvalidArgument("LU needs a square matrix".into()));
        }
        let n = a.rows;
        let kl = a.kl;
        let kv = a.kl + a.ku;
        let width = kl + kv + 1;
        let mut lu = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        for i in 0..n {
            for j in a.row_span(i) {
                lu[at(i, j)] = a.get(i, j);
            }
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kv).min(n - 1);
            let mut p = k;
            let mut best = lu[at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = lu[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if best <= 1e-14 * scale {
                return Err(Error::Singular {
                    row: k,
                    pivot: best,
                });
            }
            if p != k {
                for j in k..=last_col {
                    lu.swap(at(k, j), at(p, j));
                }
            }
            let piv = lu[at(k, k)];
            for i in k + 1..=last_row {
                let l = lu[at(i, k)] / piv;
                lu[at(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let u = lu[at(k, j)];
                        lu[at(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            width,
            lu,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kl = self.kl;
        let kv = self.width - kl - 1;
        let at = |i: usize, j: usize| i * self.width + (j + kl - i);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.lu[at(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + kv).min(n - 1) {
                acc -= self.lu[at(k, j)] * b[j];
            }
            b[k] = acc / self.lu[at(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
