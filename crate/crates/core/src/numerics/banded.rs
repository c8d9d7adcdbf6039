//! Banded linear systems with partial pivoting.

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored with `kl` extra super-diagonals of fill-in room, so that
/// row interchanges during elimination stay inside the band.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl >= i && j <= i + self.kl + self.ku {
            self.data[self.offset(i, j)]
        } else {
            0.0
        }
    }

    /// Adds to entry `(i, j)`, which must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.offset(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.offset(i, j);
        self.data[k] = v;
    }

    /// Solves `A x = b` in place, destroying the matrix. Returns `None` for a
    /// numerically singular matrix.
    pub fn solve_in_place(mut self, b: &mut [f64]) -> Option<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        assert_eq!(b.len(), n);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return None;
        }
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut piv = k;
            let mut best = self.data[self.offset(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.offset(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best <= f64::EPSILON * scale * 1e-3 {
                return None;
            }
            if piv != k {
                for j in k..=last_col {
                    let (ok, op) = (self.offset(k, j), self.offset(piv, j));
                    self.data.swap(ok, op);
                }
                b.swap(k, piv);
            }
            let diag = self.data[self.offset(k, k)];
            for i in k + 1..=last_row {
                let oi = self.offset(i, k);
                let factor = self.data[oi] / diag;
                if factor == 0.0 {
                    continue;
                }
                self.data[oi] = 0.0;
                for j in k + 1..=last_col {
                    let v = self.data[self.offset(k, j)];
                    let oij = self.offset(i, j);
                    self.data[oij] -= factor * v;
                }
                b[i] -= factor * b[k];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + kl + ku).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=last_col {
                s -= self.data[self.offset(i, j)] * b[j];
            }
            b[i] = s / self.data[self.offset(i, i)];
        }
        Some(())
    }
}
