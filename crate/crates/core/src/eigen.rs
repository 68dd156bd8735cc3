//! Rightmost eigenvalues of real banded matrices: dense Schur for small
//! dimensions, shift-invert Arnoldi otherwise, each eigenpair refined and
//! checked by inverse iteration.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::BandLu;

/// Square real matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    pub dim: usize,
    pub kl: usize,
    pub ku: usize,
    /// Row-major, row i holds columns i-kl ..= i+ku.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(dim: usize, kl: usize, ku: usize) -> Self {
        Self {
            dim,
            kl,
            ku,
            data: vec![0.0; dim * (kl + ku + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.dim || j >= self.dim || j + self.kl < i || j > i + self.ku {
            return None;
        }
        Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn matvec<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        (0..self.dim)
            .map(|i| {
                let j0 = i.saturating_sub(self.kl);
                let j1 = (i + self.ku).min(self.dim - 1);
                (j0..=j1).fold(T::default(), |s, j| s + x[j] * self.get(i, j))
            })
            .collect()
    }

    fn shifted_lu(&self, s: Complex64) -> Option<BandLu<Complex64>> {
        BandLu::factor(self.dim, self.kl, self.ku, |i, j| {
            let v = Complex64::new(self.get(i, j), 0.0);
            if i == j {
                v - s
            } else {
                v
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenEntry {
    pub re: f64,
    pub im: f64,
    /// Number of computed eigenvalues in this cluster.
    pub multiplicity: usize,
    /// Share of the eigenvector's squared mass at indices flagged as outer.
    pub boundary_mass_fraction: f64,
    /// ‖Ax - λx‖ / ‖x‖ of the refined pair.
    pub residual: f64,
}

impl EigenEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenMethod {
    /// Dense up to `DENSE_LIMIT`, Arnoldi above.
    Auto,
    Dense,
    Arnoldi { krylov: usize, shift: f64 },
}

pub const DENSE_LIMIT: usize = 1000;

/// The `count` eigenvalues of largest real part, sorted by decreasing real part.
/// `outer[i]` marks the indices counted in the boundary mass fraction.
pub fn rightmost_eigenvalues(
    m: &BandMatrix,
    count: usize,
    method: EigenMethod,
    outer: &[bool],
) -> Result<Vec<EigenEntry>> {
    if count == 0 {
        return Err(Error::Config("eigenvalue count must be at least 1".into()));
    }
    if outer.len() != m.dim {
        return Err(Error::DimensionMismatch(format!(
            "outer mask length {} vs dimension {}",
            outer.len(),
            m.dim
        )));
    }
    let method = match method {
        EigenMethod::Auto if m.dim <= DENSE_LIMIT => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::Arnoldi {
            krylov: 120,
            shift: default_shift(m),
        },
        other => other,
    };
    let (values, clustered) = match method {
        EigenMethod::Dense => (dense_eigenvalues(m)?, true),
        EigenMethod::Arnoldi { krylov, shift } => (arnoldi_ritz_values(m, krylov, shift, count)?, false),
        EigenMethod::Auto => unreachable!(),
    };
    let mut clusters = cluster(values);
    clusters.sort_by(|a, b| b.0.re.total_cmp(&a.0.re).then(b.0.im.total_cmp(&a.0.im)));
    let mut out = Vec::new();
    for (lam, mult) in clusters {
        if out.len() == count {
            break;
        }
        let (refined, frac, res) = refine(m, lam, outer);
        let scale = 1.0 + refined.norm();
        if !clustered && res > 1e-7 * scale {
            continue;
        }
        out.push(EigenEntry {
            re: refined.re,
            im: refined.im,
            multiplicity: mult,
            boundary_mass_fraction: frac,
            residual: res,
        });
    }
    if out.len() < count.min(m.dim) && !clustered {
        return Err(Error::EigenConvergence(format!(
            "only {} of {} Ritz pairs converged",
            out.len(),
            count
        )));
    }
    Ok(out)
}

/// Gershgorin bound on the real parts, plus a margin.
fn default_shift(m: &BandMatrix) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..m.dim {
        let j0 = i.saturating_sub(m.kl);
        let j1 = (i + m.ku).min(m.dim - 1);
        let off: f64 = (j0..=j1).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
        best = best.max(m.get(i, i) + off);
    }
    best + 0.5
}

fn dense_eigenvalues(m: &BandMatrix) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(m.to_dense(), 1e-14, 100_000)
        .ok_or_else(|| Error::EigenConvergence(format!("dense Schur of dimension {} did not converge", m.dim)))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect())
}

fn cluster(mut values: Vec<Complex64>) -> Vec<(Complex64, usize)> {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for v in values {
        let tol = 1e-6 * (1.0 + v.norm());
        if let Some(c) = out.iter_mut().find(|c| (c.0 - v).norm() < tol) {
            let n = c.1 as f64;
            c.0 = (c.0 * n + v) / (n + 1.0);
            c.1 += 1;
        } else {
            out.push((v, 1));
        }
    }
    out
}

/// Ritz values of (A - s)⁻¹ mapped back to eigenvalue estimates of A.
fn arnoldi_ritz_values(m: &BandMatrix, krylov: usize, shift: f64, count: usize) -> Result<Vec<Complex64>> {
    let n = m.dim;
    let kdim = krylov.max(2 * count + 10).min(n);
    let lu = BandLu::<f64>::factor(n, m.kl, m.ku, |i, j| m.get(i, j) - if i == j { shift } else { 0.0 })
        .ok_or_else(|| Error::EigenConvergence(format!("shift {shift} is an eigenvalue")))?;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(kdim + 1);
    let mut start: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
    let nrm = norm(&start);
    start.iter_mut().for_each(|x| *x /= nrm);
    basis.push(start);
    let mut h = DMatrix::<f64>::zeros(kdim, kdim);
    let mut steps = kdim;
    for j in 0..kdim {
        let mut w = basis[j].clone();
        lu.solve_in_place(&mut w);
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let d = dot(q, &w);
                h[(i, j)] += d;
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
        }
        let beta = norm(&w);
        if j + 1 == kdim {
            break;
        }
        if beta < 1e-13 * h[(j, j)].abs().max(1e-300) || beta == 0.0 {
            steps = j + 1;
            break;
        }
        h[(j + 1, j)] = beta;
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
    let hm = h.view((0, 0), (steps, steps)).into_owned();
    let schur = Schur::try_new(hm, 1e-14, 100_000)
        .ok_or_else(|| Error::EigenConvergence("Hessenberg Schur did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .filter(|t| t.norm() > 0.0)
        .map(|t| Complex64::new(shift, 0.0) + Complex64::new(1.0, 0.0) / Complex64::new(t.re, t.im))
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inverse iteration at λ; returns the Rayleigh-quotient eigenvalue, the outer
/// mass fraction of the eigenvector and the relative residual.
fn refine(m: &BandMatrix, lam: Complex64, outer: &[bool]) -> (Complex64, f64, f64) {
    let n = m.dim;
    let mut mu = lam;
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.3 * (i as f64 * 1.3).cos(), 0.1 * (i as f64 * 0.4).sin()))
        .collect();
    let mut best = (lam, 0.0, f64::INFINITY);
    for k in 0..6 {
        let lu = m
            .shifted_lu(mu)
            .or_else(|| m.shifted_lu(mu + Complex64::new(1e-10 * (1.0 + mu.norm()), 0.0)));
        let Some(lu) = lu else { break };
        lu.solve_in_place(&mut x);
        let nx = cnorm(&x);
        if !(nx.is_finite() && nx > 0.0) {
            break;
        }
        x.iter_mut().for_each(|z| *z /= nx);
        let ax = m.matvec(&x);
        let rq: Complex64 = x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum();
        let res = ax
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - rq * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res < best.2 {
            let total: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            let edge: f64 = x
                .iter()
                .zip(outer)
                .filter(|(_, o)| **o)
                .map(|(z, _)| z.norm_sqr())
                .sum();
            best = (rq, edge / total, res);
        }
        if res < 1e-12 * (1.0 + rq.norm()) {
            break;
        }
        // keep the original shift for the first steps so clustered eigenvalues
        // are not pulled to a neighbour
        if k >= 2 {
            mu = rq;
        }
    }
    best
}
