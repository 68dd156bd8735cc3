//! Rescaled public goods game system (r1 = r2 = k0 = 1) in the monotone
//! variables u = K* - û, v = v̂.
//!
//! In these variables the wave runs from (0, 0) at -∞ to (K*, 1) at +∞ and the
//! reaction is cooperative on the box [0, K*] x [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub k: f64,
    pub kstar: f64,
    pub cmin: f64,
}

/// A point of the two-component state space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVec {
    pub u: f64,
    pub v: f64,
}

impl StateVec {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn max_abs(&self) -> f64 {
        self.u.abs().max(self.v.abs())
    }
}

pub type Matrix2 = [[f64; 2]; 2];

pub fn derive_params(alpha: f64, k: f64) -> Result<ModelParams> {
    ModelParams::new(alpha, k)
}

impl ModelParams {
    pub fn new(alpha: f64, k: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "alpha",
                value: alpha,
                reason: "need 0 < alpha < 1".into(),
            });
        }
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "k",
                value: k,
                reason: "need 0 < k < 1".into(),
            });
        }
        let kstar = (1.0 - alpha) / (1.0 - k + alpha * k);
        Ok(Self {
            alpha,
            k,
            kstar,
            cmin: 2.0 * alpha.sqrt(),
        })
    }

    /// 1 - k + αk, the denominator of K*.
    pub fn m(&self) -> f64 {
        1.0 - self.k + self.alpha * self.k
    }

    /// Both sides of 1 + kK* - K* = α / (1 - k + αk).
    pub fn identity_sides(&self) -> (f64, f64) {
        (
            1.0 + self.k * self.kstar - self.kstar,
            self.alpha / self.m(),
        )
    }

    /// Decay rate (1 - α)(1 - k + αk) of the u-equation at the (0, 0) state.
    pub fn left_u_damping(&self) -> f64 {
        (1.0 - self.alpha) * self.m()
    }

    /// Ratio u/v of the slow tail mode at -∞; holds for every admissible speed.
    pub fn left_tail_ratio(&self) -> f64 {
        (1.0 - self.alpha) / (self.alpha + self.left_u_damping())
    }

    /// Slow and fast characteristic roots (c ∓ √(c² - 4α))/2 at -∞ (real part if complex).
    pub fn left_rates(&self, c: f64) -> (f64, f64) {
        let disc = (c * c - 4.0 * self.alpha).max(0.0).sqrt();
        ((c - disc) / 2.0, (c + disc) / 2.0)
    }

    /// Decaying root (c - √(c² + 4α))/2 at +∞.
    pub fn right_rate(&self, c: f64) -> f64 {
        (c - (c * c + 4.0 * self.alpha).sqrt()) / 2.0
    }

    pub fn left_state(&self) -> StateVec {
        StateVec::new(0.0, 0.0)
    }

    pub fn right_state(&self) -> StateVec {
        StateVec::new(self.kstar, 1.0)
    }

    /// Upper corner of the invariant box [0, K*] x [0, 1].
    pub fn box_max(&self) -> StateVec {
        self.right_state()
    }
}

/// F(u, v) of the monotone system.
#[inline]
pub fn reaction(p: &ModelParams, s: StateVec) -> StateVec {
    let def = p.kstar - s.u;
    let q = (def + s.v) / (1.0 + p.k * def);
    StateVec {
        u: -def * (1.0 - p.alpha - q),
        v: s.v * (1.0 - q),
    }
}

/// ∂F/∂(u, v); off-diagonal entries are nonnegative on the box.
#[inline]
pub fn jacobian(p: &ModelParams, s: StateVec) -> Matrix2 {
    let def = p.kstar - s.u;
    let den = 1.0 + p.k * def;
    let q = (def + s.v) / den;
    let dq_du = (p.k * s.v - 1.0) / (den * den);
    [
        [1.0 - q - p.alpha + def * dq_du, def / den],
        [-dq_du * s.v, 1.0 - q - s.v / den],
    ]
}

/// (u, v) -> (K* - u, v); the map is an involution.
pub fn to_original(p: &ModelParams, s: StateVec) -> StateVec {
    StateVec::new(p.kstar - s.u, s.v)
}

pub fn to_transformed(p: &ModelParams, s: StateVec) -> StateVec {
    StateVec::new(p.kstar - s.u, s.v)
}
