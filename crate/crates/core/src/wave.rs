//! Traveling wave of the two-component system by monotone iteration between
//! ordered bounds, phase normalization, tail fits and the minimal-speed verdict.

use num_complex::Complex64;
use serde::Serialize;

use crate::bounds::{build_bounds, BoundPair};
use crate::error::{Error, Result};
use crate::fit::fit_log_window;
use crate::grid::{apply_advection_diffusion, residual, Component, Field, Grid, Profile};
use crate::linalg::{BandLu, Tridiagonal};
use crate::model::{jacobian, reaction, ModelParams, StateVec};

/// Slack allowed in the envelope and monotonicity checks of the iteration.
pub const ITERATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationReport {
    pub iterations: usize,
    pub sup_diffs: Vec<f64>,
    pub final_residual: f64,
    pub beta: f64,
    pub converged: bool,
    /// Largest increase of any iterate over its predecessor in the iteration direction's
    /// forbidden sense; at most `ITERATION_SLACK` when the iteration is monotone.
    pub max_wrong_way_step: f64,
}

impl IterationReport {
    /// True when the successive differences decrease after the first five steps.
    pub fn sup_diffs_decreasing(&self) -> bool {
        self.sup_diffs.iter().skip(5).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Start from the (shifted) upper solution; iterates decrease.
    Downward,
    /// Start from the lower solution; iterates increase.
    Upward,
}

/// Dirichlet data imposed at -L. Exact zero data is not offered: the truncated
/// problem then selects the fast tail mode and pushes the front against +L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeftData {
    /// (ρ·v, v) with ρ the slow-mode ratio u/v at -∞.
    Tail(f64),
    /// `Tail` with v taken from the upper solution's left value.
    Auto,
}

#[derive(Debug, Clone)]
pub struct WaveSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub direction: Direction,
    pub left: LeftData,
    /// Overrides the starting iterate (the bound in the chosen direction by default).
    pub initial: Option<Profile>,
}

impl Default for WaveSolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200_000,
            direction: Direction::Downward,
            left: LeftData::Auto,
            initial: None,
        }
    }
}

/// max over a 50×50 sample of [0, K*]×[0, 1] of (-A₁₁, -A₂₂, 0), plus 1.
pub fn iteration_shift(p: &ModelParams) -> f64 {
    let mut m = 0.0f64;
    for i in 0..50 {
        for j in 0..50 {
            let s = StateVec::new(p.kstar * i as f64 / 49.0, j as f64 / 49.0);
            let a = jacobian(p, s);
            m = m.max(-a[0][0]).max(-a[1][1]);
        }
    }
    m + 1.0
}

/// The monotone iteration U ↦ (D - β)⁻¹(-F(U) - βU) with fixed boundary data.
pub struct MonotoneIteration {
    p: ModelParams,
    grid: Grid,
    beta: f64,
    left: StateVec,
    right: StateVec,
    lo: f64,
    up: f64,
    op: Tridiagonal,
}

impl MonotoneIteration {
    pub fn new(p: &ModelParams, grid: &Grid, c: f64, left: StateVec, right: StateVec) -> Self {
        let beta = iteration_shift(p);
        let st = grid.stencil(c);
        Self {
            p: *p,
            grid: grid.clone(),
            beta,
            left,
            right,
            lo: st.lo,
            up: st.up,
            op: Tridiagonal::constant(grid.n, st.lo, st.diag - beta, st.up),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn step(&self, cur: &Field) -> Field {
        let n = self.grid.n;
        let mut next = Field::zeros(n);
        for i in 0..n {
            let f = reaction(&self.p, StateVec::new(cur.u[i], cur.v[i]));
            next.u[i] = -f.u - self.beta * cur.u[i];
            next.v[i] = -f.v - self.beta * cur.v[i];
        }
        next.u[0] -= self.lo * self.left.u;
        next.v[0] -= self.lo * self.left.v;
        next.u[n - 1] -= self.up * self.right.u;
        next.v[n - 1] -= self.up * self.right.v;
        self.op.solve_in_place(&mut next.u);
        self.op.solve_in_place(&mut next.v);
        next
    }
}

fn check_envelope(it: &Field, bounds: &BoundPair) -> Result<()> {
    let g = &bounds.lower.grid;
    for i in 0..g.n {
        for (comp, x, lo, hi) in [
            ('u', it.u[i], bounds.lower.u[i], bounds.upper.u[i]),
            ('v', it.v[i], bounds.lower.v[i], bounds.upper.v[i]),
        ] {
            let excess = (lo - x).max(x - hi);
            if excess > ITERATION_SLACK {
                return Err(Error::EnvelopeViolation {
                    node: i,
                    xi: g.nodes[i],
                    component: comp,
                    excess,
                });
            }
        }
    }
    Ok(())
}

/// Left Dirichlet data for a given choice; `Auto` resolves to the upper's left v.
pub fn left_data(p: &ModelParams, bounds: &BoundPair, left: LeftData) -> StateVec {
    match left {
        LeftData::Tail(v) => StateVec::new(p.left_tail_ratio() * v, v),
        LeftData::Auto => {
            let v = bounds.upper.boundary_left.v;
            StateVec::new(p.left_tail_ratio() * v, v)
        }
    }
}

/// Monotone iteration from the shifted upper (or the lower) solution until the
/// sup-norm change drops below `tol`.
pub fn solve_wave(
    p: &ModelParams,
    c: f64,
    bounds: &BoundPair,
    opts: &WaveSolveOptions,
) -> Result<(Profile, IterationReport)> {
    if c < p.cmin - 1e-14 {
        return Err(Error::SubcriticalSpeed { c, cmin: p.cmin });
    }
    let g = bounds.lower.grid.clone();
    let left = left_data(p, bounds, opts.left);
    let right = p.right_state();
    for (comp, x, lo, hi) in [
        ('u', left.u, bounds.lower.boundary_left.u, bounds.upper.boundary_left.u),
        ('v', left.v, bounds.lower.boundary_left.v, bounds.upper.boundary_left.v),
    ] {
        if x < lo - ITERATION_SLACK || x > hi + ITERATION_SLACK {
            return Err(Error::EnvelopeViolation {
                node: 0,
                xi: -g.half_length,
                component: comp,
                excess: (lo - x).max(x - hi),
            });
        }
    }
    let iter = MonotoneIteration::new(p, &g, c, left, right);
    let mut cur = match (&opts.initial, opts.direction) {
        (Some(init), _) => init.as_field(),
        (None, Direction::Downward) => bounds.upper.as_field(),
        (None, Direction::Upward) => bounds.lower.as_field(),
    };
    let sign = match opts.direction {
        Direction::Downward => 1.0,
        Direction::Upward => -1.0,
    };
    let mut sup_diffs = Vec::new();
    let mut wrong_way = f64::NEG_INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = iter.step(&cur);
        check_envelope(&next, bounds)?;
        let mut diff = 0.0f64;
        for i in 0..g.n {
            for d in [next.u[i] - cur.u[i], next.v[i] - cur.v[i]] {
                diff = diff.max(d.abs());
                wrong_way = wrong_way.max(sign * d);
            }
        }
        sup_diffs.push(diff);
        cur = next;
        if diff < opts.tol {
            converged = true;
            break;
        }
    }
    let prof = Profile {
        grid: g,
        u: cur.u,
        v: cur.v,
        c,
        boundary_left: left,
        boundary_right: right,
    };
    if !converged {
        return Err(Error::NoConvergence {
            what: "monotone iteration",
            iterations: opts.max_iter,
            last_change: sup_diffs.last().copied().unwrap_or(f64::NAN),
        });
    }
    let report = IterationReport {
        iterations: sup_diffs.len(),
        final_residual: residual(p, &prof).sup_norm(),
        sup_diffs,
        beta: iter.beta(),
        converged,
        max_wrong_way_step: wrong_way,
    };
    Ok((prof, report))
}

/// Translates the profile so that v(0) = 1/2.
pub fn normalize_phase(prof: &Profile) -> Result<Profile> {
    let vk = prof.knot_values(Component::V);
    if vk.iter().all(|v| *v == vk[0]) {
        return Err(Error::LevelNotCrossed { level: 0.5 });
    }
    let xc = prof
        .interpolant(Component::V)
        .solve_level(0.5)
        .ok_or(Error::LevelNotCrossed { level: 0.5 })?;
    if xc == 0.0 {
        return Ok(prof.clone());
    }
    Ok(prof.shifted(xc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub min_du: f64,
    pub min_dv: f64,
}

impl MonotoneCheck {
    pub fn strictly_increasing(&self) -> bool {
        self.min_du > 0.0 && self.min_dv > 0.0
    }
}

pub fn check_monotone(prof: &Profile) -> MonotoneCheck {
    let min_diff = |x: &[f64]| x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    MonotoneCheck {
        min_du: min_diff(&prof.u),
        min_dv: min_diff(&prof.v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    #[serde(rename = "-inf")]
    MinusInfinity,
    #[serde(rename = "+inf")]
    PlusInfinity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub side: Side,
    pub rate_u: f64,
    pub rate_v: f64,
    pub amplitude_u: f64,
    pub amplitude_v: f64,
    /// amplitude_u / amplitude_v; reported only.
    pub amplitude_ratio: f64,
    pub predicted_rate: f64,
    pub window: (f64, f64),
    pub rsquared: f64,
}

impl DecayFit {
    pub fn rel_error_u(&self) -> f64 {
        ((self.rate_u - self.predicted_rate) / self.predicted_rate).abs()
    }

    pub fn rel_error_v(&self) -> f64 {
        ((self.rate_v - self.predicted_rate) / self.predicted_rate).abs()
    }

    pub fn rel_error(&self) -> f64 {
        self.rel_error_u().max(self.rel_error_v())
    }

    /// |rate_u - rate_v| relative to their mean magnitude.
    pub fn component_mismatch(&self) -> f64 {
        (self.rate_u - self.rate_v).abs() / (0.5 * (self.rate_u.abs() + self.rate_v.abs()))
    }
}

/// Log-linear tail fits. At -∞ the fitted quantities are u and v (divided by
/// |ξ| when `critical`), at +∞ the deficits K* - u and 1 - v.
pub fn fit_decay(prof: &Profile, p: &ModelParams, side: Side, critical: bool) -> Result<DecayFit> {
    let l = prof.grid.half_length;
    let x = &prof.grid.nodes;
    let c = prof.c;
    let (window, yu, yv, predicted): (_, Vec<f64>, Vec<f64>, f64) = match side {
        Side::MinusInfinity => {
            let corr = |xi: f64, y: f64| if critical { y / xi.abs() } else { y };
            (
                (-l + 5.0, -l / 2.0),
                x.iter().zip(&prof.u).map(|(xi, y)| corr(*xi, *y)).collect(),
                x.iter().zip(&prof.v).map(|(xi, y)| corr(*xi, *y)).collect(),
                if critical { p.alpha.sqrt() } else { p.left_rates(c).0 },
            )
        }
        Side::PlusInfinity => (
            (l / 2.0, l - 5.0),
            prof.u.iter().map(|u| p.kstar - u).collect(),
            prof.v.iter().map(|v| 1.0 - v).collect(),
            p.right_rate(c),
        ),
    };
    let fu = fit_log_window(x, &yu, window.0, window.1)?;
    let fv = fit_log_window(x, &yv, window.0, window.1)?;
    let (au, av) = (fu.intercept.exp(), fv.intercept.exp());
    Ok(DecayFit {
        side,
        rate_u: fu.slope,
        rate_v: fv.slope,
        amplitude_u: au,
        amplitude_v: av,
        amplitude_ratio: au / av,
        predicted_rate: predicted,
        window,
        rsquared: fu.rsquared.min(fv.rsquared),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    /// Complex roots re ± i·im: tails oscillate, so no monotone wave.
    NoMonotoneWave { re: f64, im: f64 },
    CriticalAdmissible { root: f64 },
    SupercriticalAdmissible { slow: f64, fast: f64 },
}

impl Verdict {
    pub fn roots(&self) -> [Complex64; 2] {
        match *self {
            Verdict::NoMonotoneWave { re, im } => [Complex64::new(re, im), Complex64::new(re, -im)],
            Verdict::CriticalAdmissible { root } => [Complex64::new(root, 0.0); 2],
            Verdict::SupercriticalAdmissible { slow, fast } => {
                [Complex64::new(slow, 0.0), Complex64::new(fast, 0.0)]
            }
        }
    }

    pub fn admits_monotone_wave(&self) -> bool {
        !matches!(self, Verdict::NoMonotoneWave { .. })
    }
}

/// Roots (c ± √(c² - 4α))/2 of the linearization at the -∞ state.
pub fn subcritical_verdict(p: &ModelParams, c: f64) -> Verdict {
    let disc = c * c - 4.0 * p.alpha;
    let scale = (c * c).max(4.0 * p.alpha);
    if disc.abs() <= 1e-14 * scale {
        Verdict::CriticalAdmissible { root: c / 2.0 }
    } else if disc < 0.0 {
        Verdict::NoMonotoneWave {
            re: c / 2.0,
            im: (-disc).sqrt() / 2.0,
        }
    } else {
        let s = disc.sqrt();
        Verdict::SupercriticalAdmissible {
            slow: (c - s) / 2.0,
            fast: (c + s) / 2.0,
        }
    }
}

/// Centered-difference derivative; boundary values by one-sided second-order formulas.
pub fn derivative_profile(prof: &Profile) -> Profile {
    let g = &prof.grid;
    let h = g.h;
    let d = |y: Vec<f64>| {
        let m = y.len();
        let inner: Vec<f64> = (1..m - 1).map(|i| (y[i + 1] - y[i - 1]) / (2.0 * h)).collect();
        let left = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
        let right = (3.0 * y[m - 1] - 4.0 * y[m - 2] + y[m - 3]) / (2.0 * h);
        (inner, left, right)
    };
    let (u, ul, ur) = d(prof.knot_values(Component::U));
    let (v, vl, vr) = d(prof.knot_values(Component::V));
    Profile {
        grid: g.clone(),
        u,
        v,
        c: prof.c,
        boundary_left: StateVec::new(ul, vl),
        boundary_right: StateVec::new(ur, vr),
    }
}

/// W'' - cW' + J(U)W with J the reaction Jacobian along `wave`.
pub fn linearized_residual(p: &ModelParams, wave: &Profile, w: &Profile) -> Field {
    let g = &wave.grid;
    let c = wave.c;
    let mut r = Field {
        u: apply_advection_diffusion(g, c, &w.u, w.boundary_left.u, w.boundary_right.u),
        v: apply_advection_diffusion(g, c, &w.v, w.boundary_left.v, w.boundary_right.v),
    };
    for i in 0..g.n {
        let a = jacobian(p, wave.state(i));
        r.u[i] += a[0][0] * w.u[i] + a[0][1] * w.v[i];
        r.v[i] += a[1][0] * w.u[i] + a[1][1] * w.v[i];
    }
    r
}

/// Sup of the linearized residual of the derivative over nodes 1..n-2. The
/// two end nodes see the one-sided boundary estimates and are left out.
pub fn derivative_residual(p: &ModelParams, wave: &Profile) -> f64 {
    let r = linearized_residual(p, wave, &derivative_profile(wave));
    let n = wave.n();
    r.u[1..n - 1]
        .iter()
        .chain(&r.v[1..n - 1])
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Newton refinement of a converged wave on the coupled discrete system, same
/// boundary data. Drives the residual to roundoff so that time stepping keeps
/// the wave as a fixed point even under the large weights near -L.
pub fn polish_wave(p: &ModelParams, prof: &Profile, max_newton: usize) -> Result<Profile> {
    let g = &prof.grid;
    let n = g.n;
    let st = g.stencil(prof.c);
    let mut cur = prof.clone();
    let mut res = residual(p, &cur);
    let mut rn = res.sup_norm();
    for _ in 0..max_newton {
        let jac: Vec<_> = (0..n).map(|i| jacobian(p, cur.state(i))).collect();
        let lu = BandLu::<f64>::factor(2 * n, 2, 2, |r, c| {
            let (i, ci) = (r / 2, r % 2);
            let (j, cj) = (c / 2, c % 2);
            if i == j {
                jac[i][ci][cj] + if ci == cj { st.diag } else { 0.0 }
            } else if ci != cj {
                0.0
            } else if j + 1 == i {
                st.lo
            } else if i + 1 == j {
                st.up
            } else {
                0.0
            }
        })
        .ok_or_else(|| Error::NoConvergence {
            what: "wave polishing (singular Jacobian)",
            iterations: 0,
            last_change: rn,
        })?;
        let mut step: Vec<f64> = (0..2 * n)
            .map(|r| if r % 2 == 0 { -res.u[r / 2] } else { -res.v[r / 2] })
            .collect();
        lu.solve_in_place(&mut step);
        let mut trial = cur.clone();
        for i in 0..n {
            trial.u[i] += step[2 * i];
            trial.v[i] += step[2 * i + 1];
        }
        let tres = residual(p, &trial);
        let tn = tres.sup_norm();
        if !(tn < rn) {
            break;
        }
        cur = trial;
        res = tres;
        rn = tn;
    }
    Ok(cur)
}

/// Removes the small phase drift left by Newton with first-order translations
/// U + δU'. Resampling through the interpolant would disturb the discrete
/// residual by far more than the drift itself.
fn pin_phase(prof: &Profile) -> Result<Profile> {
    let mut cur = prof.clone();
    for _ in 0..3 {
        let xc = cur
            .interpolant(Component::V)
            .solve_level(0.5)
            .ok_or(Error::LevelNotCrossed { level: 0.5 })?;
        if xc == 0.0 {
            break;
        }
        let d = derivative_profile(&cur);
        for i in 0..cur.n() {
            cur.u[i] += xc * d.u[i];
            cur.v[i] += xc * d.v[i];
        }
        cur.boundary_left.u += xc * d.boundary_left.u;
        cur.boundary_left.v += xc * d.boundary_left.v;
        cur.boundary_right.u += xc * d.boundary_right.u;
        cur.boundary_right.v += xc * d.boundary_right.v;
    }
    Ok(cur)
}

#[derive(Debug, Clone)]
pub struct WaveComputation {
    pub bounds: BoundPair,
    /// Output of the last monotone iteration, inside the envelope of `bounds`.
    pub raw: Profile,
    /// `raw` translated so that v(0) = 1/2, refined by `polish_wave`, with the
    /// resulting phase drift removed.
    pub profile: Profile,
    /// Sup residual of `profile`.
    pub polished_residual: f64,
    pub report: IterationReport,
    pub left_v: f64,
    pub phase_offset: f64,
    pub phase_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct WaveConfig {
    pub c: f64,
    pub l: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub direction: Direction,
}

/// Bounds → ordering → monotone iteration, repeated on the left Dirichlet value
/// until the front sits at the origin, then phase normalization.
pub fn compute_wave(p: &ModelParams, g: &Grid, cfg: &WaveConfig) -> Result<WaveComputation> {
    if cfg.c < p.cmin - 1e-14 {
        return Err(Error::SubcriticalSpeed { c: cfg.c, cmin: p.cmin });
    }
    let mut bounds = build_bounds(p, cfg.c, g, cfg.l, cfg.tol)?;
    let (mu, _) = p.left_rates(cfg.c);
    let l = g.half_length;
    let mut bv = bounds.upper.boundary_left.v;
    let mut best: Option<(f64, Profile, IterationReport, f64)> = None;
    let mut iterations = 0;
    for _ in 0..40 {
        iterations += 1;
        if bv > bounds.upper.boundary_left.v {
            let need = (bv / bounds.upper.boundary_left.v).ln() / mu;
            let extra = (need / g.h).ceil() + 1.0;
            bounds = bounds.with_shift(bounds.shift + extra * g.h);
        }
        bv = bv.max(bounds.lower.boundary_left.v);
        let opts = WaveSolveOptions {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            direction: cfg.direction,
            left: LeftData::Tail(bv),
            initial: None,
        };
        let (raw, rep) = solve_wave(p, cfg.c, &bounds, &opts)?;
        let xc = raw
            .interpolant(Component::V)
            .solve_level(0.5)
            .ok_or(Error::LevelNotCrossed { level: 0.5 })?;
        let better = best.as_ref().is_none_or(|b| xc.abs() < b.0.abs());
        if !better {
            break;
        }
        let next_bv = raw.interpolant(Component::V).eval(-l + xc);
        best = Some((xc, raw, rep, bv));
        if xc.abs() < 1e-10 {
            break;
        }
        bv = next_bv;
    }
    let (xc, raw, report, bv) = best.expect("at least one solve");
    if xc.abs() > 1e-6 {
        return Err(Error::NoConvergence {
            what: "wave phase pinning",
            iterations,
            last_change: xc,
        });
    }
    let profile = pin_phase(&polish_wave(p, &normalize_phase(&raw)?, 5)?)?;
    Ok(WaveComputation {
        bounds,
        raw,
        polished_residual: residual(p, &profile).sup_norm(),
        profile,
        report,
        left_v: bv,
        phase_offset: xc,
        phase_iterations: iterations,
    })
}
