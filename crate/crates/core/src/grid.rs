//! Uniform grid on [-L, L], two-component profiles and the centered
//! finite-difference operator f'' - c f'.
//!
//! Nodes are the n interior points -L + (i+1)h with h = 2L/(n+1); the two
//! boundary points ±L act as ghosts that carry the Dirichlet data.

use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::model::{reaction, ModelParams, StateVec};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub half_length: f64,
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
}

pub fn make_grid(half_length: f64, n: usize) -> Result<Grid> {
    Grid::new(half_length, n)
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidGrid(format!("L = {half_length} must be positive")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("n = {n} interior nodes, need at least 3")));
        }
        let h = 2.0 * half_length / (n + 1) as f64;
        let nodes = (0..n).map(|i| -half_length + (i + 1) as f64 * h).collect();
        Ok(Self {
            half_length,
            n,
            h,
            nodes,
        })
    }

    /// Coefficients of f[i-1], f[i], f[i+1] in f'' - c f'.
    pub fn stencil(&self, c: f64) -> Stencil {
        let h2 = 1.0 / (self.h * self.h);
        let adv = c / (2.0 * self.h);
        Stencil {
            lo: h2 + adv,
            diag: -2.0 * h2,
            up: h2 - adv,
        }
    }

    /// Node coordinates with the two boundary points prepended/appended.
    pub fn knots(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n + 2);
        x.push(-self.half_length);
        x.extend_from_slice(&self.nodes);
        x.push(self.half_length);
        x
    }

    /// Index of the node closest to `xi`.
    pub fn nearest(&self, xi: f64) -> usize {
        let t = ((xi + self.half_length) / self.h - 1.0).round();
        t.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub lo: f64,
    pub diag: f64,
    pub up: f64,
}

/// Centered second difference minus c times centered first difference, with
/// the Dirichlet values `bl`, `br` used as ghost values.
pub fn apply_advection_diffusion(g: &Grid, c: f64, f: &[f64], bl: f64, br: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    apply_advection_diffusion_into(g, c, f, bl, br, &mut out);
    out
}

pub fn apply_advection_diffusion_into(g: &Grid, c: f64, f: &[f64], bl: f64, br: f64, out: &mut [f64]) {
    let n = g.n;
    assert!(f.len() == n && out.len() == n);
    let s = g.stencil(c);
    for i in 0..n {
        let left = if i == 0 { bl } else { f[i - 1] };
        let right = if i + 1 == n { br } else { f[i + 1] };
        out[i] = s.lo * left + s.diag * f[i] + s.up * right;
    }
}

/// Two-component nodal field without boundary data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Field {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    U,
    V,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
    pub boundary_left: StateVec,
    pub boundary_right: StateVec,
}

impl Profile {
    pub fn new(
        grid: Grid,
        u: Vec<f64>,
        v: Vec<f64>,
        c: f64,
        boundary_left: StateVec,
        boundary_right: StateVec,
    ) -> Result<Self> {
        if u.len() != grid.n || v.len() != grid.n {
            return Err(Error::DimensionMismatch(format!(
                "profile samples ({}, {}) vs grid n = {}",
                u.len(),
                v.len(),
                grid.n
            )));
        }
        Ok(Self {
            grid,
            u,
            v,
            c,
            boundary_left,
            boundary_right,
        })
    }

    pub fn constant(grid: Grid, s: StateVec, c: f64) -> Self {
        let n = grid.n;
        Self {
            grid,
            u: vec![s.u; n],
            v: vec![s.v; n],
            c,
            boundary_left: s,
            boundary_right: s,
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn state(&self, i: usize) -> StateVec {
        StateVec::new(self.u[i], self.v[i])
    }

    pub fn component(&self, comp: Component) -> &[f64] {
        match comp {
            Component::U => &self.u,
            Component::V => &self.v,
        }
    }

    fn boundary(&self, comp: Component) -> (f64, f64) {
        match comp {
            Component::U => (self.boundary_left.u, self.boundary_right.u),
            Component::V => (self.boundary_left.v, self.boundary_right.v),
        }
    }

    /// Samples of one component including the two boundary values.
    pub fn knot_values(&self, comp: Component) -> Vec<f64> {
        let (bl, br) = self.boundary(comp);
        let mut y = Vec::with_capacity(self.n() + 2);
        y.push(bl);
        y.extend_from_slice(self.component(comp));
        y.push(br);
        y
    }

    pub fn interpolant(&self, comp: Component) -> ProfileInterpolant {
        ProfileInterpolant {
            pchip: Pchip::new(self.grid.knots(), self.knot_values(comp)),
        }
    }

    /// The translate ξ ↦ P(ξ + r), resampled on the same grid (boundary data included).
    pub fn shifted(&self, r: f64) -> Profile {
        let iu = self.interpolant(Component::U);
        let iv = self.interpolant(Component::V);
        let l = self.grid.half_length;
        let u = self.grid.nodes.iter().map(|x| iu.eval(x + r)).collect();
        let v = self.grid.nodes.iter().map(|x| iv.eval(x + r)).collect();
        Profile {
            grid: self.grid.clone(),
            u,
            v,
            c: self.c,
            boundary_left: StateVec::new(iu.eval(-l + r), iv.eval(-l + r)),
            boundary_right: StateVec::new(iu.eval(l + r), iv.eval(l + r)),
        }
    }

    /// Nodal sup-norm of the difference (both components).
    pub fn sup_diff(&self, other: &Profile) -> f64 {
        let du = self.u.iter().zip(&other.u).map(|(a, b)| (a - b).abs());
        let dv = self.v.iter().zip(&other.v).map(|(a, b)| (a - b).abs());
        du.chain(dv).fold(0.0, f64::max)
    }

    pub fn as_field(&self) -> Field {
        Field {
            u: self.u.clone(),
            v: self.v.clone(),
        }
    }
}

/// PCHIP through a profile component with tail extensions outside [-L, L]:
/// exponential on the left when the first two knots are positive and
/// increasing, constant otherwise.
#[derive(Debug, Clone)]
pub struct ProfileInterpolant {
    pchip: Pchip,
}

impl ProfileInterpolant {
    pub fn eval(&self, t: f64) -> f64 {
        let x = self.pchip.x();
        let y = self.pchip.y();
        if t < x[0] {
            if y[0] > 0.0 && y[1] > y[0] {
                let rate = (y[1] / y[0]).ln() / (x[1] - x[0]);
                return y[0] * (rate * (t - x[0])).exp();
            }
            return y[0];
        }
        self.pchip.eval(t)
    }

    pub fn solve_level(&self, level: f64) -> Option<f64> {
        self.pchip.solve_level(level)
    }
}

/// Nodewise left-hand sides (u'' - c u' + F₁, v'' - c v' + F₂) of the wave system.
pub fn residual(p: &ModelParams, prof: &Profile) -> Field {
    let g = &prof.grid;
    let mut r = Field {
        u: apply_advection_diffusion(g, prof.c, &prof.u, prof.boundary_left.u, prof.boundary_right.u),
        v: apply_advection_diffusion(g, prof.c, &prof.v, prof.boundary_left.v, prof.boundary_right.v),
    };
    for i in 0..g.n {
        let f = reaction(p, prof.state(i));
        r.u[i] += f.u;
        r.v[i] += f.v;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_params;

    #[test]
    fn grid_layout() {
        let g = make_grid(10.0, 3).unwrap();
        assert_eq!(g.h, 5.0);
        assert_eq!(g.nodes, vec![-5.0, 0.0, 5.0]);
        let g = make_grid(40.0, 3999).unwrap();
        assert!((g.h - 0.02).abs() < 1e-15);
        assert!((g.nodes[0] + 40.0 - g.h).abs() < 1e-12);
        assert!((g.nodes[3998] - 40.0 + g.h).abs() < 1e-12);
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(make_grid(1.0, 2), Err(Error::InvalidGrid(_))));
        assert!(make_grid(0.0, 5).is_err());
    }

    #[test]
    fn exact_on_polynomials() {
        let g = make_grid(3.0, 29).unwrap();
        let lin: Vec<f64> = g.nodes.iter().map(|x| 2.0 * x - 1.0).collect();
        let out = apply_advection_diffusion(&g, 0.0, &lin, -7.0, 5.0);
        assert!(out.iter().all(|v| v.abs() < 1e-12), "{out:?}");
        let quad: Vec<f64> = g.nodes.iter().map(|x| x * x).collect();
        let out = apply_advection_diffusion(&g, 0.0, &quad, 9.0, 9.0);
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-11));
        // with advection: (x^2)'' - c (x^2)' = 2 - 2cx
        let out = apply_advection_diffusion(&g, 1.5, &quad, 9.0, 9.0);
        for (o, x) in out.iter().zip(&g.nodes) {
            assert!((o - (2.0 - 3.0 * x)).abs() < 1e-11);
        }
    }

    #[test]
    fn second_order_on_sine() {
        let err = |n: usize| {
            let g = make_grid(3.0, n).unwrap();
            let f: Vec<f64> = g.nodes.iter().map(|x| x.sin()).collect();
            let out = apply_advection_diffusion(&g, 1.0, &f, (-3.0f64).sin(), 3.0f64.sin());
            out.iter()
                .zip(&g.nodes)
                .map(|(o, x)| (o - (-x.sin() - x.cos())).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(59) / err(119);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn equilibria_have_zero_residual() {
        let p = derive_params(0.25, 0.5).unwrap();
        let g = make_grid(10.0, 99).unwrap();
        for s in [p.left_state(), p.right_state()] {
            let r = residual(&p, &Profile::constant(g.clone(), s, 1.25));
            assert!(r.sup_norm() < 1e-14);
        }
    }

    #[test]
    fn shift_round_trip() {
        let g = make_grid(20.0, 399).unwrap();
        let f = |x: f64| 0.5 * (1.0 + (x / 3.0).tanh());
        let prof = Profile::new(
            g.clone(),
            g.nodes.iter().map(|&x| 2.0 * f(x)).collect(),
            g.nodes.iter().map(|&x| f(x)).collect(),
            1.0,
            StateVec::new(2.0 * f(-20.0), f(-20.0)),
            StateVec::new(2.0 * f(20.0), f(20.0)),
        )
        .unwrap();
        let back = prof.shifted(1.3).shifted(-1.3);
        assert!(back.sup_diff(&prof) < 1e-6);
        assert_eq!(prof.shifted(0.0).sup_diff(&prof), 0.0);
        let i = g.nearest(0.0);
        assert!((g.nodes[i]).abs() <= g.h / 2.0);
    }
}
