//! Essential-spectrum geometry of the linearization about the wave, the
//! admissible exponential weights, and the discretized weighted operator
//! V ↦ V'' - (2g₁ + c)V' + M(ξ)V with M = (2g₁² - g₂ + c·g₁)I + ∂F/∂U(U*).

use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::{rightmost_eigenvalues, BandMatrix, EigenEntry, EigenMethod};
use crate::error::{Error, Result};
use crate::grid::{Grid, Profile};
use crate::model::{jacobian, Matrix2, ModelParams};
use crate::wave::{derivative_profile, derivative_residual};

/// Exponents of the weight e^{σ₁ξ} + e^{-σ₂ξ}.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct WeightPair {
    pub sigma1: f64,
    pub sigma2: f64,
}

impl WeightPair {
    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self> {
        for (name, v) in [("sigma1", sigma1), ("sigma2", sigma2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::ParameterOutOfRange {
                    name,
                    value: v,
                    reason: "weight exponents must be finite and nonnegative".into(),
                });
            }
        }
        Ok(Self { sigma1, sigma2 })
    }

    /// log(e^{σ₁ξ} + e^{-σ₂ξ}) without overflow.
    pub fn log_weight(&self, xi: f64) -> f64 {
        let (a, b) = (self.sigma1 * xi, -self.sigma2 * xi);
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln()
    }

    pub fn weight(&self, xi: f64) -> f64 {
        self.log_weight(xi).exp()
    }

    /// Shares p₁ = e^{σ₁ξ}/weight and p₂ = e^{-σ₂ξ}/weight, computed with the
    /// dominant exponential factored out.
    fn shares(&self, xi: f64) -> (f64, f64) {
        if xi >= 0.0 {
            let r = (-(self.sigma1 + self.sigma2) * xi).exp();
            (1.0 / (1.0 + r), r / (1.0 + r))
        } else {
            let r = ((self.sigma1 + self.sigma2) * xi).exp();
            (r / (1.0 + r), 1.0 / (1.0 + r))
        }
    }

    /// g₁ = weight'/weight.
    pub fn g1(&self, xi: f64) -> f64 {
        let (p1, p2) = self.shares(xi);
        self.sigma1 * p1 - self.sigma2 * p2
    }

    /// g₂ = weight''/weight.
    pub fn g2(&self, xi: f64) -> f64 {
        let (p1, p2) = self.shares(xi);
        self.sigma1 * self.sigma1 * p1 + self.sigma2 * self.sigma2 * p2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightWindow {
    /// σ₁ ∈ [0, sigma1_max).
    pub sigma1_max: f64,
    /// σ₂ ∈ (sigma2_min, sigma2_max).
    pub sigma2_min: f64,
    pub sigma2_max: f64,
}

impl WeightWindow {
    pub fn contains(&self, w: &WeightPair) -> bool {
        w.sigma1 >= 0.0 && w.sigma1 < self.sigma1_max && w.sigma2 > self.sigma2_min && w.sigma2 < self.sigma2_max
    }
}

/// Weights for which the weighted essential spectrum lies in the open left half plane.
pub fn weight_window(p: &ModelParams, c: f64) -> Result<WeightWindow> {
    let disc = c * c - 4.0 * p.alpha;
    if !(disc > 0.0) {
        return Err(Error::EmptyWindow { c, cmin: p.cmin });
    }
    let s = disc.sqrt();
    Ok(WeightWindow {
        sigma1_max: (-c + (c * c + 4.0 * p.alpha).sqrt()) / 2.0,
        sigma2_min: (c - s) / 2.0,
        sigma2_max: (c + s) / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssentialBound {
    /// σ₁²+cσ₁-α, σ₁²+cσ₁-1, σ₂²-cσ₂-(1-α)(1-k+kα), σ₂²-cσ₂+α.
    pub branch_vertices: [f64; 4],
    pub max_re_essential: f64,
}

pub fn essential_spectrum_max(p: &ModelParams, c: f64, w: &WeightPair) -> EssentialBound {
    let (s1, s2) = (w.sigma1, w.sigma2);
    let plus = s1 * s1 + c * s1;
    let minus = s2 * s2 - c * s2;
    let v = [
        plus - p.alpha,
        plus - 1.0,
        minus - p.left_u_damping(),
        minus + p.alpha,
    ];
    EssentialBound {
        branch_vertices: v,
        max_re_essential: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Weighted limiting matrix M at +∞ (`plus`) or -∞, with the drift 2g₁ + c of
/// the weighted operator there.
pub fn limiting_matrix(p: &ModelParams, c: f64, w: &WeightPair, plus: bool) -> (Matrix2, f64) {
    let (g1, g2, state) = if plus {
        (w.sigma1, w.sigma1 * w.sigma1, p.right_state())
    } else {
        (-w.sigma2, w.sigma2 * w.sigma2, p.left_state())
    };
    let shift = 2.0 * g1 * g1 - g2 + c * g1;
    let mut m = jacobian(p, state);
    m[0][0] += shift;
    m[1][1] += shift;
    (m, 2.0 * g1 + c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub branch: usize,
    pub y: f64,
    pub x: f64,
}

/// The four parabolas x = -y²/d² + vertex bounding the weighted essential
/// spectrum, d = 2σ₁ + c for branches 0-1 and d = c - 2σ₂ for branches 2-3.
pub fn spectrum_curves(
    p: &ModelParams,
    c: f64,
    w: &WeightPair,
    y_max: f64,
    samples: usize,
) -> Result<Vec<CurvePoint>> {
    if samples < 2 {
        return Err(Error::Config(format!("need at least 2 curve samples, got {samples}")));
    }
    let d_minus = c - 2.0 * w.sigma2;
    if d_minus.abs() < 1e-14 {
        return Err(Error::DegenerateDenominator { c });
    }
    let d_plus = 2.0 * w.sigma1 + c;
    let ess = essential_spectrum_max(p, c, w);
    let mut out = Vec::with_capacity(4 * samples);
    for (branch, vertex) in ess.branch_vertices.iter().enumerate() {
        let d = if branch < 2 { d_plus } else { d_minus };
        for s in 0..samples {
            let y = -y_max + 2.0 * y_max * s as f64 / (samples - 1) as f64;
            out.push(CurvePoint {
                branch,
                y,
                x: -y * y / (d * d) + vertex,
            });
        }
    }
    Ok(out)
}

/// Discretized weighted operator on interleaved unknowns (u₀, v₀, u₁, v₁, …)
/// with zero Dirichlet data.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: BandMatrix,
    pub grid: Grid,
    pub weights: WeightPair,
    pub c: f64,
}

impl OperatorMatrix {
    /// Flags the unknowns whose node lies in the outer 10% of [-L, L].
    pub fn outer_mask(&self) -> Vec<bool> {
        let cut = 0.8 * self.grid.half_length;
        self.grid
            .nodes
            .iter()
            .flat_map(|x| {
                let o = x.abs() > cut;
                [o, o]
            })
            .collect()
    }

    /// The 2×2 reaction block M(ξ) at node i.
    pub fn block(&self, i: usize) -> Matrix2 {
        let m = &self.matrix;
        [
            [m.get(2 * i, 2 * i) - self.diag_stencil(), m.get(2 * i, 2 * i + 1)],
            [m.get(2 * i + 1, 2 * i), m.get(2 * i + 1, 2 * i + 1) - self.diag_stencil()],
        ]
    }

    fn diag_stencil(&self) -> f64 {
        -2.0 / (self.grid.h * self.grid.h)
    }
}

pub fn assemble_weighted_operator(p: &ModelParams, prof: &Profile, w: &WeightPair) -> OperatorMatrix {
    let g = &prof.grid;
    let n = g.n;
    let c = prof.c;
    let h = g.h;
    let h2 = 1.0 / (h * h);
    let mut m = BandMatrix::zeros(2 * n, 2, 2);
    for i in 0..n {
        let xi = g.nodes[i];
        let g1 = w.g1(xi);
        let drift = 2.0 * g1 + c;
        let lo = h2 + drift / (2.0 * h);
        let up = h2 - drift / (2.0 * h);
        let shift = 2.0 * g1 * g1 - w.g2(xi) + c * g1;
        let a = jacobian(p, prof.state(i));
        for comp in 0..2 {
            let r = 2 * i + comp;
            m.set(r, r, -2.0 * h2 + shift + a[comp][comp]);
            if i > 0 {
                m.set(r, r - 2, lo);
            }
            if i + 1 < n {
                m.set(r, r + 2, up);
            }
        }
        m.set(2 * i, 2 * i + 1, a[0][1]);
        m.set(2 * i + 1, 2 * i, a[1][0]);
    }
    OperatorMatrix {
        matrix: m,
        grid: g.clone(),
        weights: *w,
        c,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub branch_vertices: [f64; 4],
    pub max_re_essential: f64,
    pub curves: Vec<CurvePoint>,
    pub eigenvalues: Vec<EigenEntry>,
    pub rightmost: Option<EigenEntry>,
}

/// Rightmost eigenvalues of the assembled operator. The Arnoldi shift sits
/// to the right of both the essential bound and the origin.
pub fn operator_eigenvalues(
    p: &ModelParams,
    op: &OperatorMatrix,
    count: usize,
    method: EigenMethod,
) -> Result<Vec<EigenEntry>> {
    let method = match method {
        EigenMethod::Auto if op.matrix.dim > crate::eigen::DENSE_LIMIT => {
            let ess = essential_spectrum_max(p, op.c, &op.weights).max_re_essential;
            EigenMethod::Arnoldi {
                krylov: 120,
                shift: ess.max(0.0) + 1.0,
            }
        }
        other => other,
    };
    rightmost_eigenvalues(&op.matrix, count, method, &op.outer_mask())
}

pub fn spectrum_report(
    p: &ModelParams,
    c: f64,
    w: &WeightPair,
    curves: Vec<CurvePoint>,
    eigenvalues: Vec<EigenEntry>,
) -> SpectrumReport {
    let ess = essential_spectrum_max(p, c, w);
    SpectrumReport {
        branch_vertices: ess.branch_vertices,
        max_re_essential: ess.max_re_essential,
        curves,
        rightmost: eigenvalues.first().copied(),
        eigenvalues,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranslationModeReport {
    /// Sup of the linearized residual at U*' over interior nodes.
    pub residual: f64,
    /// Weighted magnitude at ξ = -L + h divided by its value at the node nearest 0.
    pub tail_factor: f64,
    /// Max over nodes of the weighted magnitude divided by its max over |ξ| ≤ L/2.
    pub sup_over_interior: f64,
}

/// Numerical witness that U*' solves the linearized problem yet lies outside
/// the weighted space.
pub fn translation_mode_check(p: &ModelParams, prof: &Profile, w: &WeightPair) -> TranslationModeReport {
    let d = derivative_profile(prof);
    let g = &prof.grid;
    let weighted: Vec<f64> = (0..g.n)
        .map(|i| {
            let m = d.state(i).max_abs();
            if m == 0.0 {
                0.0
            } else {
                (m.ln() + w.log_weight(g.nodes[i])).exp()
            }
        })
        .collect();
    let mid = weighted[g.nearest(0.0)];
    let interior = g
        .nodes
        .iter()
        .zip(&weighted)
        .filter(|(x, _)| x.abs() <= g.half_length / 2.0)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let sup = weighted.iter().copied().fold(0.0, f64::max);
    let ratio = |a: f64, b: f64| if b == 0.0 { if a == 0.0 { 1.0 } else { f64::INFINITY } } else { a / b };
    TranslationModeReport {
        residual: derivative_residual(p, prof),
        tail_factor: ratio(weighted[0], mid),
        sup_over_interior: ratio(sup, interior),
    }
}

/// Eigenvalues of the 2×2 complex symbol -ζ² - i·drift·ζ + M.
pub fn symbol_eigenvalues(m: &Matrix2, drift: f64, zeta: f64) -> [Complex64; 2] {
    let s = Complex64::new(-zeta * zeta, -drift * zeta);
    let a = s + m[0][0];
    let d = s + m[1][1];
    let tr = a + d;
    let det = a * d - m[0][1] * m[1][0];
    let root = (tr * tr / 4.0 - det).sqrt();
    [tr / 2.0 + root, tr / 2.0 - root]
}
