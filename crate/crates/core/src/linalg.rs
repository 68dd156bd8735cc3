//! Tridiagonal and general banded solvers.

use nalgebra::ComplexField;

/// Tridiagonal system with sub-diagonal `a`, diagonal `b` and super-diagonal `c`,
/// factored once (Thomas algorithm, no pivoting) and solved many times.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    a: Vec<f64>,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Tridiagonal {
    /// `a[0]` and `c[n-1]` are ignored.
    pub fn new(a: &[f64], b: &[f64], c: &[f64]) -> Self {
        let n = b.len();
        assert!(a.len() == n && c.len() == n && n > 0);
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        inv[0] = 1.0 / b[0];
        cp[0] = c[0] * inv[0];
        for i in 1..n {
            inv[i] = 1.0 / (b[i] - a[i] * cp[i - 1]);
            cp[i] = c[i] * inv[i];
        }
        Self {
            a: a.to_vec(),
            cp,
            inv,
        }
    }

    /// Constant-coefficient matrix with entries (lo, diag, up).
    pub fn constant(n: usize, lo: f64, diag: f64, up: f64) -> Self {
        Self::new(&vec![lo; n], &vec![diag; n], &vec![up; n])
    }

    pub fn len(&self) -> usize {
        self.inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.a[i] * rhs[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.cp[i] * rhs[i + 1];
        }
    }
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, LU-factored with
/// partial pivoting (the factor carries `kl` extra super-diagonals of fill).
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major: row i stores columns i-kl ..= i+kl+ku at offsets 0..width.
    data: Vec<T>,
    piv: Vec<usize>,
}

impl<T: ComplexField<RealField = f64> + Copy> BandLu<T> {
    /// `entry(i, j)` is queried for |i - j| within the band only.
    pub fn factor(n: usize, kl: usize, ku: usize, entry: impl Fn(usize, usize) -> T) -> Option<Self> {
        let width = 2 * kl + ku + 1;
        let mut data = vec![T::zero(); n * width];
        for i in 0..n {
            let j0 = i.saturating_sub(kl);
            let j1 = (i + ku).min(n - 1);
            for j in j0..=j1 {
                data[i * width + (j + kl - i)] = entry(i, j);
            }
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            data,
            piv: vec![0; n],
        };
        lu.decompose()?;
        Some(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.kl + self.ku + 1) + (j + self.kl - i)
    }

    fn decompose(&mut self) -> Option<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].modulus();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            self.piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Some(())
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.data[self.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn thomas_matches_direct() {
        let n = 6;
        let a = vec![0.0, 1.0, -0.5, 2.0, 0.3, 1.0];
        let b = vec![4.0, 5.0, 6.0, 7.0, 5.0, 4.0];
        let c = vec![1.0, 0.2, 1.0, -1.0, 0.5, 0.0];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = b[i] * x[i];
                if i > 0 {
                    s += a[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += c[i] * x[i + 1];
                }
                s
            })
            .collect();
        Tridiagonal::new(&a, &b, &c).solve_in_place(&mut rhs);
        for i in 0..n {
            assert!((rhs[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn band_lu_needs_pivoting() {
        // zero leading diagonal forces a row swap
        let n = 7;
        let (kl, ku) = (2, 1);
        let entry = |i: usize, j: usize| -> Complex64 {
            if i == j {
                if i == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(1.0 + i as f64, 0.5)
                }
            } else {
                Complex64::new((i + 2 * j) as f64 * 0.1 + 0.3, -0.2 * (i as f64 - j as f64))
            }
        };
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                b[i] += entry(i, j) * x[j];
            }
        }
        let lu = BandLu::factor(n, kl, ku, entry).unwrap();
        lu.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).norm() < 1e-12, "{i}: {} vs {}", b[i], x[i]);
        }
    }

    #[test]
    fn band_lu_real() {
        let n = 5;
        let lu = BandLu::<f64>::factor(n, 1, 1, |i, j| if i == j { 2.0 } else { -1.0 }).unwrap();
        let mut b = vec![1.0; n];
        lu.solve_in_place(&mut b);
        // (2,-1) Laplacian with unit load: x_i = (i+1)(n-i)/2
        for (i, v) in b.iter().enumerate() {
            let want = ((i + 1) * (n - i)) as f64 / 2.0;
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_band_is_reported() {
        assert!(BandLu::<f64>::factor(3, 1, 1, |_, _| 0.0).is_none());
    }
}
