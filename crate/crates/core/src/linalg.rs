//! Banded LU factorization with partial pivoting.
//!
//! The radial reduction turns every linear solve of this crate into a banded
//! system: interleaving the k field components node by node gives half
//! bandwidth k, so a dense factorization would waste three orders of
//! magnitude in both memory and time. Storage follows the LAPACK `dgbtrf`
//! convention: a matrix with `kl` sub- and `ku` super-diagonals is kept in a
//! `(2*kl + ku + 1) x n` array so that row interchanges during pivoting can
//! spill into the extra `kl` super-diagonals.

use crate::error::{Error, Result};

/// Square banded matrix of order `n` with `kl` sub- and `ku` super-diagonals.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major band storage with `2*kl + ku + 1` rows. Entry `(i, j)` of
    /// the full matrix lives at band row `kl + ku + i - j`, column `j`.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        assert!(n > 0);
        let rows = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; rows * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "outside band");
        (self.kl + self.ku + i - j) * self.n + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku < j || j + self.kl < i {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let id = self.idx(i, j);
        self.data[id] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let id = self.idx(i, j);
        self.data[id] += v;
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// In-place LU factorization with row partial pivoting.
    ///
    /// Fill from pivoting widens the upper band to `kl + ku`; the extra rows
    /// were reserved at construction. Fails with `Conditioning` on an exactly
    /// zero pivot column.
    pub fn lu(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        // Work with the effective upper bandwidth kl + ku.
        let kv = kl + ku;
        let mut ipiv = vec![0usize; n];
        let mut smallest_pivot = f64::INFINITY;

        // Band row of full entry (i, j) in the widened layout: kv + i - j.
        let at = |j: usize, i: usize| -> usize { (kv + i - j) * n + j };

        for j in 0..n {
            // Pivot search in column j, rows j..=j+kl.
            let last = (j + kl).min(n - 1);
            let mut piv_row = j;
            let mut piv_val = self.data[at(j, j)].abs();
            for i in (j + 1)..=last {
                let v = self.data[at(j, i)].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = i;
                }
            }
            if piv_val == 0.0 {
                return Err(Error::Conditioning { smallest_pivot: 0.0 });
            }
            smallest_pivot = smallest_pivot.min(piv_val);
            ipiv[j] = piv_row;
            // Swap rows j and piv_row across columns j..=min(n-1, j+kv).
            if piv_row != j {
                let cmax = (j + kv).min(n - 1);
                for c in j..=cmax {
                    self.data.swap(at(c, j), at(c, piv_row));
                }
            }
            // Eliminate below the pivot.
            let pivot = self.data[at(j, j)];
            for i in (j + 1)..=last {
                let l = self.data[at(j, i)] / pivot;
                self.data[at(j, i)] = l;
                if l != 0.0 {
                    let cmax = (j + kv).min(n - 1);
                    for c in (j + 1)..=cmax {
                        let u = self.data[at(c, j)];
                        if u != 0.0 {
                            self.data[at(c, i)] -= l * u;
                        }
                    }
                }
            }
        }

        Ok(BandLu {
            n,
            kl,
            kv,
            data: self.data,
            ipiv,
            smallest_pivot,
        })
    }
}

/// Factored form produced by [`BandMatrix::lu`].
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    data: Vec<f64>,
    ipiv: Vec<usize>,
    smallest_pivot: f64,
}

impl BandLu {
    pub fn smallest_pivot(&self) -> f64 {
        self.smallest_pivot
    }

    /// Solves A x = b. Read-only; concurrent solves may share one factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let at = |j: usize, i: usize| -> usize { (self.kv + i - j) * n + j };
        let mut x = b.to_vec();
        // Forward: apply P and L.
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let last = (j + self.kl).min(n - 1);
            let xj = x[j];
            if xj != 0.0 {
                for i in (j + 1)..=last {
                    x[i] -= self.data[at(j, i)] * xj;
                }
            }
        }
        // Backward: solve U x = y.
        for j in (0..n).rev() {
            let cmax = (j + self.kv).min(n - 1);
            let mut acc = x[j];
            for c in (j + 1)..=cmax {
                acc -= self.data[at(c, j)] * x[c];
            }
            x[j] = acc / self.data[at(j, j)];
        }
        x
    }
}
