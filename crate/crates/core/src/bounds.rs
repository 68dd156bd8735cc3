//! Vector upper and lower solutions built from the scalar KPP fronts,
//! their defining inequalities, and the ordering shift.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{residual, Grid, Profile};
use crate::kpp::{solve_kpp, KppNonlinearity, ScalarProfile};
use crate::model::{ModelParams, StateVec};
use crate::wave::{fit_decay, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

/// (K*·w, w) with right boundary (K*, 1).
pub fn build_upper(p: &ModelParams, s: &ScalarProfile) -> Profile {
    let mut prof = s.lift(p.kstar);
    prof.boundary_right = StateVec::new(p.kstar * s.plateau, s.plateau);
    prof
}

/// (K*·l·w, w); the right boundary (K*·l·b, b) lies strictly below (K*, 1).
pub fn build_lower(p: &ModelParams, l: f64, s: &ScalarProfile) -> Result<Profile> {
    KppNonlinearity::lower(*p, l)?;
    Ok(s.lift(p.kstar * l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstMargin {
    pub node: usize,
    pub xi: f64,
    pub value: f64,
}

/// Nodewise left-hand sides of the wave system evaluated at a candidate bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub kind: BoundKind,
    pub xi: Vec<f64>,
    pub margin_u: Vec<f64>,
    pub margin_v: Vec<f64>,
    /// Largest value for an upper bound, smallest for a lower bound.
    pub worst_u: WorstMargin,
    pub worst_v: WorstMargin,
}

impl MarginReport {
    pub fn evaluate(p: &ModelParams, prof: &Profile, c: f64, kind: BoundKind) -> Self {
        let mut prof_c = prof.clone();
        prof_c.c = c;
        let r = residual(p, &prof_c);
        let xi = prof.grid.nodes.clone();
        let worst = |m: &[f64]| {
            let pick = |a: f64, b: f64| match kind {
                BoundKind::Upper => b > a,
                BoundKind::Lower => b < a,
            };
            let mut best = 0;
            for i in 1..m.len() {
                if pick(m[best], m[i]) {
                    best = i;
                }
            }
            WorstMargin {
                node: best,
                xi: xi[best],
                value: m[best],
            }
        };
        let worst_u = worst(&r.u);
        let worst_v = worst(&r.v);
        Self {
            kind,
            xi,
            margin_u: r.u,
            margin_v: r.v,
            worst_u,
            worst_v,
        }
    }

    /// Signed amount by which the report violates its inequality (≤ 0 means it holds).
    pub fn excess(&self) -> f64 {
        match self.kind {
            BoundKind::Upper => self.worst_u.value.max(self.worst_v.value),
            BoundKind::Lower => (-self.worst_u.value).max(-self.worst_v.value),
        }
    }
}

/// Checks the upper (both sides ≤ tol) or lower (both sides ≥ -tol) inequality.
pub fn verify_bound(
    p: &ModelParams,
    prof: &Profile,
    c: f64,
    kind: BoundKind,
    tol: f64,
) -> Result<MarginReport> {
    let rep = MarginReport::evaluate(p, prof, c, kind);
    if rep.excess() > tol {
        let (w, comp) = match kind {
            BoundKind::Upper if rep.worst_u.value >= rep.worst_v.value => (rep.worst_u, 'u'),
            BoundKind::Lower if rep.worst_u.value <= rep.worst_v.value => (rep.worst_u, 'u'),
            _ => (rep.worst_v, 'v'),
        };
        return Err(Error::VerificationFailure {
            node: w.node,
            xi: w.xi,
            component: comp,
            margin: w.value,
        });
    }
    Ok(rep)
}

/// Smallest shift r = m·h ≥ 0 with upper(· + r) ≥ lower(·) at every node and at
/// both boundary points. Beyond +L the upper is continued by its right boundary value.
pub fn order_shift(upper: &Profile, lower: &Profile) -> Result<f64> {
    if upper.grid != lower.grid {
        return Err(Error::DimensionMismatch("bounds live on different grids".into()));
    }
    let g = &upper.grid;
    let uu = upper.knot_values(crate::grid::Component::U);
    let uv = upper.knot_values(crate::grid::Component::V);
    let lu = lower.knot_values(crate::grid::Component::U);
    let lv = lower.knot_values(crate::grid::Component::V);
    let last = uu.len() - 1;
    for m in 0..=last {
        let ordered = (0..=last).all(|j| {
            let k = (j + m).min(last);
            uu[k] >= lu[j] && uv[k] >= lv[j]
        });
        if ordered {
            return Ok(m as f64 * g.h);
        }
    }
    Err(Error::NoShiftFound {
        max_shift: 2.0 * g.half_length,
    })
}

/// Smallest componentwise gap upper - lower over nodes and boundary points.
pub fn min_gap(upper: &Profile, lower: &Profile) -> f64 {
    let gap = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| x - y).fold(f64::INFINITY, f64::min);
    use crate::grid::Component::{U, V};
    gap(upper.knot_values(U), lower.knot_values(U)).min(gap(upper.knot_values(V), lower.knot_values(V)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPair {
    /// Upper solution already translated by `shift`.
    pub upper: Profile,
    pub lower: Profile,
    pub shift: f64,
    pub l: f64,
    /// Unshifted upper, kept so the shift can be enlarged later.
    pub upper_base: Profile,
}

impl BoundPair {
    /// Pairs the bounds and applies the ordering shift.
    pub fn ordered(upper: Profile, lower: Profile, l: f64) -> Result<Self> {
        let shift = order_shift(&upper, &lower)?;
        Ok(Self {
            upper: upper.shifted(shift),
            lower,
            shift,
            l,
            upper_base: upper,
        })
    }

    /// Re-translates the upper solution by a new total shift.
    pub fn with_shift(&self, shift: f64) -> Self {
        Self {
            upper: self.upper_base.shifted(shift),
            lower: self.lower.clone(),
            shift,
            l: self.l,
            upper_base: self.upper_base.clone(),
        }
    }
}

/// Solves both KPP problems, builds the bounds and orders them.
pub fn build_bounds(p: &ModelParams, c: f64, g: &Grid, l: f64, tol: f64) -> Result<BoundPair> {
    let lower_nl = KppNonlinearity::lower(*p, l)?;
    let su = solve_kpp(&KppNonlinearity::upper(*p), c, g, tol)?;
    let sl = solve_kpp(&lower_nl, c, g, tol)?;
    let mut upper = build_upper(p, &su);
    let mut lower = build_lower(p, l, &sl)?;
    upper.c = c;
    lower.c = c;
    BoundPair::ordered(upper, lower, l)
}

/// Lower-solution parameter used when none is given: 0.48·(1 - k + kα), i.e.
/// l = 0.3 at k = 0.5, α = 0.25.
pub fn default_l(p: &ModelParams) -> f64 {
    0.48 * p.m()
}

/// Candidate +∞ exponents of the upper bound: the root with 4α/(1 - k + αk)
/// under the square root, and the one with plain 4α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailExponent {
    AlphaOverM,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperTailComparison {
    pub rate_u: f64,
    pub rate_v: f64,
    pub rate_alpha_over_m: f64,
    pub rate_alpha: f64,
    pub rel_error_alpha_over_m: f64,
    pub rel_error_alpha: f64,
    pub better: TailExponent,
}

/// Fits the +∞ deficit of the unshifted upper bound and compares it with both
/// candidate exponents.
pub fn upper_tail_exponents(p: &ModelParams, b: &BoundPair) -> Result<UpperTailComparison> {
    let c = b.upper_base.c;
    let f = fit_decay(&b.upper_base, p, Side::PlusInfinity, false)?;
    let root = |a: f64| (c - (c * c + 4.0 * a).sqrt()) / 2.0;
    let (ra, rb) = (root(p.alpha / p.m()), root(p.alpha));
    let err = |r: f64| ((f.rate_u - r) / r).abs().max(((f.rate_v - r) / r).abs());
    let (ea, eb) = (err(ra), err(rb));
    Ok(UpperTailComparison {
        rate_u: f.rate_u,
        rate_v: f.rate_v,
        rate_alpha_over_m: ra,
        rate_alpha: rb,
        rel_error_alpha_over_m: ea,
        rel_error_alpha: eb,
        better: if ea <= eb { TailExponent::AlphaOverM } else { TailExponent::Alpha },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::model::derive_params;

    fn base_pair() -> (ModelParams, BoundPair) {
        let p = derive_params(0.25, 0.5).unwrap();
        let g = make_grid(40.0, 3999).unwrap();
        let b = build_bounds(&p, 1.25, &g, 0.3, 1e-10).unwrap();
        (p, b)
    }

    #[test]
    fn construction_ratios() {
        let (p, b) = base_pair();
        for i in 0..b.upper_base.n() {
            let (u, v) = (b.upper_base.u[i], b.upper_base.v[i]);
            if v > 0.0 {
                assert!((u / v - p.kstar).abs() < 1e-12);
            }
            let (u, v) = (b.lower.u[i], b.lower.v[i]);
            if v > 0.0 {
                assert!((u / v - p.kstar * 0.3).abs() < 1e-12);
            }
        }
        assert_eq!(b.upper_base.boundary_right, StateVec::new(p.kstar, 1.0));
        let br = b.lower.boundary_right;
        assert!((br.u - 0.116129).abs() < 1e-6 && (br.v - 0.3225806).abs() < 1e-7);
    }

    #[test]
    fn base_bounds_verify() {
        let (p, b) = base_pair();
        let up = verify_bound(&p, &b.upper_base, 1.25, BoundKind::Upper, 1e-8).unwrap();
        assert!(up.worst_v.value.abs() < 1e-8);
        let interior_neg = up.margin_u[100..3900].iter().all(|m| *m < 0.0);
        assert!(interior_neg);
        let lo = verify_bound(&p, &b.lower, 1.25, BoundKind::Lower, 1e-8).unwrap();
        let kk = p.k * p.kstar;
        for (m, v) in lo.margin_v.iter().zip(&b.lower.v) {
            let want = v * v * kk * 0.7 / (1.0 + kk * (1.0 - 0.3 * v));
            assert!((m - want).abs() < 1e-9);
        }
    }

    #[test]
    fn upper_tail_follows_scaled_exponent() {
        let (p, b) = base_pair();
        let t = upper_tail_exponents(&p, &b).unwrap();
        assert!((t.rate_alpha_over_m + 0.264).abs() < 1e-3, "{t:?}");
        assert!((t.rate_alpha + 0.1754).abs() < 1e-3);
        assert_eq!(t.better, TailExponent::AlphaOverM);
        assert!(t.rel_error_alpha_over_m < 0.03, "{t:?}");
    }

    #[test]
    fn shift_orders_bounds() {
        let (_, b) = base_pair();
        assert!(b.shift >= 0.0 && b.shift <= 20.0);
        assert!(min_gap(&b.upper, &b.lower) >= -1e-12);
        assert_eq!(order_shift(&b.lower, &b.lower).unwrap(), 0.0);
        let zero = Profile::constant(b.lower.grid.clone(), StateVec::default(), 1.25);
        assert_eq!(order_shift(&b.upper_base, &zero).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_lower() {
        let p = derive_params(0.25, 0.5).unwrap();
        let g = make_grid(10.0, 99).unwrap();
        let zero = Profile::constant(g, StateVec::default(), 1.25);
        let rep = verify_bound(&p, &zero, 1.25, BoundKind::Lower, 1e-12).unwrap();
        assert!(rep.margin_u.iter().chain(&rep.margin_v).all(|m| m.abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_l() {
        let p = derive_params(0.25, 0.5).unwrap();
        let g = make_grid(10.0, 99).unwrap();
        assert!(matches!(
            build_bounds(&p, 1.25, &g, 0.7, 1e-10),
            Err(Error::ParameterOutOfRange { name: "l", .. })
        ));
        assert!((default_l(&p) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn failing_upper_is_reported() {
        let p = derive_params(0.25, 0.5).unwrap();
        let g = make_grid(10.0, 99).unwrap();
        // F(0.6, 0.5) has both entries positive, v the larger
        let prof = Profile::constant(g, StateVec::new(0.6, 0.5), 1.25);
        assert!(matches!(
            verify_bound(&p, &prof, 1.25, BoundKind::Upper, 1e-8),
            Err(Error::VerificationFailure { component: 'v', .. })
        ));
    }
}
