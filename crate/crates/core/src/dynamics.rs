//! Time integration of the moving-frame system and the stability, instability
//! and spreading experiments built on it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::grid::{apply_advection_diffusion_into, Component, Field, Grid, Profile};
use crate::linalg::Tridiagonal;
use crate::model::{reaction, to_transformed, ModelParams, StateVec};
use crate::spectrum::WeightPair;

/// Largest accepted time step; the reaction is explicit.
pub const MAX_DT: f64 = 0.1;
/// Level of v̂ (= v) tracked as the front position.
pub const FRONT_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Crank–Nicolson advection–diffusion, second-order Adams–Bashforth reaction.
    CnAb2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record every this many steps (the initial state is always recorded).
    pub record_every: usize,
    pub scheme: Scheme,
    /// Re-align the reference to the current v = 1/2 crossing before taking
    /// deviation norms.
    pub phase_refit: bool,
    /// Evolve the reference with the same scheme instead of holding it fixed.
    /// The stepper's roundoff then cancels in the deviation; near -L it would
    /// otherwise dominate the weighted norm.
    pub evolve_reference: bool,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, record_every: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            record_every,
            scheme: Scheme::CnAb2,
            phase_refit: false,
            evolve_reference: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::ParameterOutOfRange {
                name: "dt",
                value: self.dt,
                reason: format!("need 0 < dt <= {MAX_DT}"),
            });
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "t_end",
                value: self.t_end,
                reason: "need a positive final time".into(),
            });
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trace {
    pub times: Vec<f64>,
    pub weighted_norms: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// Rightmost v = 1/2 crossing, NaN when there is none.
    pub front_positions: Vec<f64>,
    /// h·Σ(Δu + Δv), the signed mass of the deviation.
    pub mass_checks: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowUpEvent {
    pub t: f64,
    pub sup: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trace: Trace,
    /// Last computed state (the state at blow-up if that happened).
    pub state: Profile,
    pub blow_up: Option<BlowUpEvent>,
}

/// Space-time source term added to the right-hand side, S(t, ξ).
pub type Forcing<'a> = &'a (dyn Fn(f64, f64) -> StateVec + Sync);

/// max_i max(|u_i|, |v_i|)·(e^{σ₁ξᵢ} + e^{-σ₂ξᵢ}), evaluated in logs.
pub fn weighted_norm(f: &Field, g: &Grid, w: &WeightPair) -> f64 {
    let mut best = 0.0f64;
    for (i, xi) in g.nodes.iter().enumerate() {
        let a = f.u[i].abs().max(f.v[i].abs());
        if a > 0.0 {
            best = best.max((a.ln() + w.log_weight(*xi)).exp());
        }
    }
    best
}

/// Rightmost crossing of `level` by the knot values of v, linearly interpolated.
pub fn front_position(prof: &Profile, level: f64) -> Option<f64> {
    let x = prof.grid.knots();
    let y = prof.knot_values(Component::V);
    for i in (0..y.len() - 1).rev() {
        let (a, b) = (y[i] - level, y[i + 1] - level);
        if a == 0.0 {
            return Some(x[i]);
        }
        if a * b < 0.0 || b == 0.0 {
            return Some(x[i] + (x[i + 1] - x[i]) * a / (a - b));
        }
    }
    None
}

fn deviation(state: &Profile, reference: Option<&Profile>, refit: bool) -> Field {
    let Some(r) = reference else {
        return state.as_field();
    };
    let shifted;
    let r = match (refit, front_position(state, FRONT_LEVEL), front_position(r, FRONT_LEVEL)) {
        (true, Some(a), Some(b)) => {
            shifted = r.shifted(b - a);
            &shifted
        }
        _ => r,
    };
    Field {
        u: state.u.iter().zip(&r.u).map(|(a, b)| a - b).collect(),
        v: state.v.iter().zip(&r.v).map(|(a, b)| a - b).collect(),
    }
}

fn record(
    tr: &mut Trace,
    t: f64,
    state: &Profile,
    reference: Option<&Profile>,
    w: &WeightPair,
    refit: bool,
) {
    let d = deviation(state, reference, refit);
    let g = &state.grid;
    tr.times.push(t);
    tr.weighted_norms.push(weighted_norm(&d, g, w));
    tr.sup_norms.push(d.sup_norm());
    tr.front_positions.push(front_position(state, FRONT_LEVEL).unwrap_or(f64::NAN));
    tr.mass_checks.push(g.h * d.u.iter().chain(&d.v).sum::<f64>());
}

/// Advances U_t = U_ξξ - c·U_ξ + F(U) (+ S) from `initial`, Dirichlet ends fixed
/// at the initial boundary data. Blow-up ends the run and is reported in the outcome.
pub fn simulate(
    p: &ModelParams,
    frame_speed: f64,
    initial: &Profile,
    cfg: &SimConfig,
    w: &WeightPair,
    reference: Option<&Profile>,
    forcing: Option<Forcing>,
) -> Result<SimOutcome> {
    cfg.validate()?;
    if !(frame_speed >= 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "frame_speed",
            value: frame_speed,
            reason: "need frame_speed >= 0".into(),
        });
    }
    if let Some(r) = reference {
        if r.grid != initial.grid {
            return Err(Error::DimensionMismatch("reference lives on a different grid".into()));
        }
    }
    let stepper = Stepper::new(p, frame_speed, initial, cfg.dt, forcing);
    let limit = 10.0 * p.kstar.max(1.0);
    let mut state = initial.clone();
    state.c = frame_speed;
    let mut run = (stepper.reaction(&state), state);
    let mut reference_run = match (reference, cfg.evolve_reference) {
        (Some(r), true) => {
            let mut r = r.clone();
            r.c = frame_speed;
            Some((stepper.reaction(&r), r))
        }
        _ => None,
    };
    let mut trace = Trace::default();
    record(&mut trace, 0.0, &run.1, reference, w, cfg.phase_refit);

    let steps = cfg.steps();
    let mut blow_up = None;
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        stepper.advance(&mut run.1, &mut run.0, t);
        if let Some((f, r)) = reference_run.as_mut() {
            stepper.advance(r, f, t);
        }
        let t_new = (step + 1) as f64 * cfg.dt;
        let state = &run.1;
        let sup = state.u.iter().chain(&state.v).fold(0.0f64, |m, x| m.max(x.abs()));
        let done = !(sup <= limit);
        if done || (step + 1) % cfg.record_every == 0 || step + 1 == steps {
            let r = reference_run.as_ref().map(|x| &x.1).or(reference);
            record(&mut trace, t_new, state, r, w, cfg.phase_refit);
        }
        if done {
            blow_up = Some(BlowUpEvent { t: t_new, sup });
            break;
        }
    }
    let state = run.1;
    Ok(SimOutcome {
        trace,
        state,
        blow_up,
    })
}

struct Stepper<'a> {
    p: &'a ModelParams,
    g: Grid,
    c: f64,
    dt: f64,
    lhs: Tridiagonal,
    forcing: Option<Forcing<'a>>,
}

impl<'a> Stepper<'a> {
    fn new(p: &'a ModelParams, c: f64, initial: &Profile, dt: f64, forcing: Option<Forcing<'a>>) -> Self {
        let g = initial.grid.clone();
        let st = g.stencil(c);
        let lhs = Tridiagonal::constant(g.n, -0.5 * dt * st.lo, 1.0 - 0.5 * dt * st.diag, -0.5 * dt * st.up);
        Self { p, g, c, dt, lhs, forcing }
    }

    fn reaction(&self, s: &Profile) -> Field {
        let n = self.g.n;
        let mut f = Field::zeros(n);
        for i in 0..n {
            let r = reaction(self.p, s.state(i));
            f.u[i] = r.u;
            f.v[i] = r.v;
        }
        f
    }

    /// One step from time t; `f_prev` holds the reaction at the previous level
    /// on entry and at the old current level on exit.
    fn advance(&self, state: &mut Profile, f_prev: &mut Field, t: f64) {
        let (g, dt, n) = (&self.g, self.dt, self.g.n);
        let st = g.stencil(self.c);
        let (bl, br) = (state.boundary_left, state.boundary_right);
        let f_now = self.reaction(state);
        let mut ru = vec![0.0; n];
        let mut rv = vec![0.0; n];
        apply_advection_diffusion_into(g, self.c, &state.u, bl.u, br.u, &mut ru);
        apply_advection_diffusion_into(g, self.c, &state.v, bl.v, br.v, &mut rv);
        for i in 0..n {
            ru[i] = state.u[i] + 0.5 * dt * ru[i] + dt * (1.5 * f_now.u[i] - 0.5 * f_prev.u[i]);
            rv[i] = state.v[i] + 0.5 * dt * rv[i] + dt * (1.5 * f_now.v[i] - 0.5 * f_prev.v[i]);
        }
        // the ghost contribution enters both time levels
        ru[0] += 0.5 * dt * st.lo * bl.u;
        rv[0] += 0.5 * dt * st.lo * bl.v;
        ru[n - 1] += 0.5 * dt * st.up * br.u;
        rv[n - 1] += 0.5 * dt * st.up * br.v;
        if let Some(src) = self.forcing {
            let tm = t + 0.5 * dt;
            for (i, xi) in g.nodes.iter().enumerate() {
                let s = src(tm, *xi);
                ru[i] += dt * s.u;
                rv[i] += dt * s.v;
            }
        }
        self.lhs.solve_in_place(&mut ru);
        self.lhs.solve_in_place(&mut rv);
        state.u = ru;
        state.v = rv;
        *f_prev = f_now;
    }
}

/// `simulate` without forcing, with blow-up turned into an error.
pub fn run_simulation(
    p: &ModelParams,
    frame_speed: f64,
    initial: &Profile,
    cfg: &SimConfig,
    w: &WeightPair,
    reference: Option<&Profile>,
) -> Result<Trace> {
    let out = simulate(p, frame_speed, initial, cfg, w, reference, None)?;
    match out.blow_up {
        Some(b) => Err(Error::BlowUp { t: b.t, sup: b.sup }),
        None => Ok(out.trace),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    /// amplitude·e^{-ξ²/4}
    Gaussian,
    /// amplitude·(1 - tanh(ξ + L/2))/2, a smoothed indicator of ξ < -L/2
    LeftTail,
}

impl Perturbation {
    pub fn shape(&self, xi: f64, half_length: f64) -> f64 {
        match self {
            Perturbation::Gaussian => (-xi * xi / 4.0).exp(),
            Perturbation::LeftTail => 0.5 * (1.0 - (xi + 0.5 * half_length).tanh()),
        }
    }
}

/// Adds the perturbation to v, boundary data included.
pub fn perturb(base: &Profile, kind: Perturbation, amplitude: f64) -> Result<Profile> {
    if amplitude == 0.0 || !amplitude.is_finite() {
        return Err(Error::ParameterOutOfRange {
            name: "amplitude",
            value: amplitude,
            reason: "perturbation amplitude must be nonzero and finite".into(),
        });
    }
    let l = base.grid.half_length;
    let mut out = base.clone();
    for (v, xi) in out.v.iter_mut().zip(&base.grid.nodes) {
        *v += amplitude * kind.shape(*xi, l);
    }
    out.boundary_left.v += amplitude * kind.shape(-l, l);
    out.boundary_right.v += amplitude * kind.shape(l, l);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayConstant {
    pub m: f64,
    pub b: f64,
    pub rsquared: f64,
}

/// Least-squares fit of log‖·‖ = log M - b·t over recorded times t ≥ `t_start`.
pub fn fit_decay_constant(tr: &Trace, t_start: f64) -> Result<DecayConstant> {
    let (mut ts, mut ls) = (Vec::new(), Vec::new());
    for (t, v) in tr.times.iter().zip(&tr.weighted_norms) {
        if *t >= t_start {
            if !(*v > 0.0) {
                return Err(Error::NonpositiveNorm { t: *t, value: *v });
            }
            ts.push(*t);
            ls.push(v.ln());
        }
    }
    let f = fit_line(&ts, &ls).ok_or_else(|| {
        Error::Config(format!("fewer than two recorded times at or after t = {t_start}"))
    })?;
    Ok(DecayConstant {
        m: f.intercept.exp(),
        b: if f.slope == 0.0 { 0.0 } else { -f.slope },
        rsquared: f.rsquared,
    })
}

/// Slope of front position against time over the recorded times in [t0, t1].
pub fn spreading_speed(tr: &Trace, t0: f64, t1: f64) -> Result<f64> {
    let (mut ts, mut xs) = (Vec::new(), Vec::new());
    for (t, x) in tr.times.iter().zip(&tr.front_positions) {
        if *t >= t0 && *t <= t1 {
            if !x.is_finite() {
                return Err(Error::FrontNotFound { t: *t });
            }
            ts.push(*t);
            xs.push(*x);
        }
    }
    let f = fit_line(&ts, &xs)
        .ok_or_else(|| Error::Config(format!("fewer than two recorded times in [{t0}, {t1}]")))?;
    Ok(if f.slope == 0.0 { 0.0 } else { f.slope })
}

pub const STABILITY_T_END: f64 = 50.0;
pub const INSTABILITY_T_END: f64 = 20.0;
pub const PERTURBATION_AMPLITUDE: f64 = 1e-3;
/// Start of the decay-fit window; earlier times are transient.
pub const DECAY_FIT_START: f64 = 10.0;
/// The weighted norm is required to be nonincreasing after this time.
pub const TRANSIENT_END: f64 = 5.0;

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub amplitude: f64,
    pub dt: f64,
    pub t_end: f64,
    pub initial_weighted: f64,
    pub final_weighted: f64,
    pub ratio: f64,
    /// Fitted on t ≥ `DECAY_FIT_START`; absent for an unperturbed run or one
    /// that ends before the fit window holds two samples.
    pub decay: Option<DecayConstant>,
    pub monotone_after_transient: bool,
    #[serde(skip)]
    pub trace: Trace,
}

/// Gaussian perturbation of the wave, evolved in the wave frame and measured in
/// the weighted norm. `amplitude` 0 runs the unperturbed wave.
pub fn stability_experiment(
    p: &ModelParams,
    c: f64,
    wave: &Profile,
    w: &WeightPair,
    cfg: &SimConfig,
    amplitude: f64,
) -> Result<StabilityReport> {
    let initial = if amplitude == 0.0 {
        wave.clone()
    } else {
        perturb(wave, Perturbation::Gaussian, amplitude)?
    };
    let cfg = SimConfig {
        evolve_reference: true,
        ..*cfg
    };
    let trace = run_simulation(p, c, &initial, &cfg, w, Some(wave))?;
    let first = trace.weighted_norms[0];
    let last = *trace.weighted_norms.last().unwrap();
    let fit_samples = trace.times.iter().filter(|t| **t >= DECAY_FIT_START).count();
    let decay = if amplitude == 0.0 || fit_samples < 2 {
        None
    } else {
        Some(fit_decay_constant(&trace, DECAY_FIT_START)?)
    };
    let tail: Vec<f64> = trace
        .times
        .iter()
        .zip(&trace.weighted_norms)
        .filter(|(t, _)| **t >= TRANSIENT_END)
        .map(|(_, v)| *v)
        .collect();
    let monotone = tail.windows(2).all(|x| x[1] <= x[0] * (1.0 + 1e-9));
    Ok(StabilityReport {
        amplitude,
        dt: cfg.dt,
        t_end: cfg.t_end,
        initial_weighted: first,
        final_weighted: last,
        ratio: if first > 0.0 { last / first } else { f64::NAN },
        decay,
        monotone_after_transient: monotone,
        trace,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InstabilityReport {
    pub amplitude: f64,
    pub dt: f64,
    pub t_end: f64,
    pub initial_sup: f64,
    pub final_sup: f64,
    pub growth_factor: f64,
    pub initial_weighted: f64,
    pub blow_up: Option<BlowUpEvent>,
    #[serde(skip)]
    pub trace: Trace,
}

/// Left-tail perturbation of the wave, evolved in the wave frame and measured
/// in the sup norm. Blow-up stops the run and is reported.
pub fn instability_experiment(
    p: &ModelParams,
    c: f64,
    wave: &Profile,
    w: &WeightPair,
    cfg: &SimConfig,
    amplitude: f64,
) -> Result<InstabilityReport> {
    let initial = perturb(wave, Perturbation::LeftTail, amplitude)?;
    let cfg = SimConfig {
        evolve_reference: true,
        ..*cfg
    };
    let out = simulate(p, c, &initial, &cfg, w, Some(wave), None)?;
    let tr = out.trace;
    let first = tr.sup_norms[0];
    let last = *tr.sup_norms.last().unwrap();
    Ok(InstabilityReport {
        amplitude,
        dt: cfg.dt,
        t_end: cfg.t_end,
        initial_sup: first,
        final_sup: last,
        growth_factor: last / first,
        initial_weighted: tr.weighted_norms[0],
        blow_up: out.blow_up,
        trace: tr,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpreadReport {
    pub half_length: f64,
    pub n: usize,
    pub window: (f64, f64),
    pub speed: f64,
    pub predicted: f64,
    pub rel_error: f64,
    #[serde(skip)]
    pub trace: Trace,
}

pub const SPREAD_HALF_LENGTH: f64 = 150.0;
pub const SPREAD_WINDOW: (f64, f64) = (40.0, 80.0);

/// Invasion from a v̂ bump of height 0.1 on [-5, 5] into the û ≡ K*, v̂ ≡ 0
/// state, run in the lab frame. The front is the rightmost v̂ = 1/2 crossing.
pub fn spread_experiment(
    p: &ModelParams,
    g: &Grid,
    cfg: &SimConfig,
    window: (f64, f64),
) -> Result<SpreadReport> {
    let seed = |xi: f64| 0.05 * ((xi + 5.0).tanh() - (xi - 5.0).tanh());
    let (mut u, mut v) = (Vec::with_capacity(g.n), Vec::with_capacity(g.n));
    for xi in &g.nodes {
        let s = to_transformed(p, StateVec::new(p.kstar, seed(*xi)));
        u.push(s.u);
        v.push(s.v);
    }
    let l = g.half_length;
    let bl = to_transformed(p, StateVec::new(p.kstar, seed(-l)));
    let br = to_transformed(p, StateVec::new(p.kstar, seed(l)));
    let initial = Profile::new(g.clone(), u, v, 0.0, bl, br)?;
    let w = WeightPair::new(0.0, 0.0)?;
    let trace = run_simulation(p, 0.0, &initial, cfg, &w, None)?;
    let speed = spreading_speed(&trace, window.0, window.1)?;
    Ok(SpreadReport {
        half_length: l,
        n: g.n,
        window,
        speed,
        predicted: p.cmin,
        rel_error: (speed - p.cmin).abs() / p.cmin,
        trace,
    })
}

/// Sup-norm error at `t_end` of the stepper against the exact solution
/// U = (K*·s, s) + 0.1·cos(πξ/2L)·(sin t, 1 - cos t), s = (1 + tanh(ξ/2))/2,
/// driven by the matching source term. The perturbation vanishes at ±L, so
/// the Dirichlet data stay fixed.
pub fn manufactured_error(
    p: &ModelParams,
    c: f64,
    half_length: f64,
    n: usize,
    dt: f64,
    t_end: f64,
) -> Result<f64> {
    let g = Grid::new(half_length, n)?;
    let kq = std::f64::consts::PI / (2.0 * half_length);
    let ks = p.kstar;
    let exact = move |t: f64, xi: f64| {
        let s = 0.5 * (1.0 + (0.5 * xi).tanh());
        let phi = 0.1 * (kq * xi).cos();
        StateVec::new(ks * s + phi * t.sin(), s + phi * (1.0 - t.cos()))
    };
    let source = move |t: f64, xi: f64| {
        let th = (0.5 * xi).tanh();
        let s1 = 0.25 * (1.0 - th * th);
        let s2 = -0.25 * th * (1.0 - th * th);
        let phi = 0.1 * (kq * xi).cos();
        let phi1 = -0.1 * kq * (kq * xi).sin();
        let phi2 = -kq * kq * phi;
        let (st, ct) = (t.sin(), t.cos());
        let f = reaction(p, exact(t, xi));
        StateVec::new(
            phi * ct - (ks * s2 + phi2 * st) + c * (ks * s1 + phi1 * st) - f.u,
            phi * st - (s2 + phi2 * (1.0 - ct)) + c * (s1 + phi1 * (1.0 - ct)) - f.v,
        )
    };
    let initial = Profile::new(
        g.clone(),
        g.nodes.iter().map(|x| exact(0.0, *x).u).collect(),
        g.nodes.iter().map(|x| exact(0.0, *x).v).collect(),
        c,
        exact(0.0, -half_length),
        exact(0.0, half_length),
    )?;
    let cfg = SimConfig::new(dt, t_end, usize::MAX)?;
    let w = WeightPair::new(0.0, 0.0)?;
    let out = simulate(p, c, &initial, &cfg, &w, None, Some(&source))?;
    let t = cfg.steps() as f64 * dt;
    Ok(g.nodes
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let e = exact(t, *xi);
            (out.state.u[i] - e.u).abs().max((out.state.v[i] - e.v).abs())
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::model::derive_params;

    fn base() -> (ModelParams, WeightPair) {
        (derive_params(0.25, 0.5).unwrap(), WeightPair::new(0.05, 0.5).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.01, 1.0, 1).is_ok());
        assert!(SimConfig::new(0.2, 1.0, 1).is_err());
        assert!(SimConfig::new(0.0, 1.0, 1).is_err());
        assert!(SimConfig::new(0.01, 1.0, 0).is_err());
        assert_eq!(SimConfig::new(0.01, 50.0, 1).unwrap().steps(), 5000);
    }

    #[test]
    fn weighted_norm_values() {
        let (_, w) = base();
        let g = make_grid(10.0, 199).unwrap();
        let mut f = Field::zeros(g.n);
        assert_eq!(weighted_norm(&f, &g, &w), 0.0);
        let i0 = g.nearest(0.0);
        assert!(g.nodes[i0].abs() < 1e-12);
        f.u[i0] = 1e-3;
        assert!((weighted_norm(&f, &g, &w) - 2e-3).abs() < 1e-15);
        let mut f = Field::zeros(g.n);
        f.v[g.nearest(-10.0 + g.h)] = 1e-3;
        let want = 1e-3 * (w.weight(-10.0 + g.h));
        assert!((weighted_norm(&f, &g, &w) - want).abs() < 1e-12);
        let far = 1e-3 * ((-0.5f64).exp() + 5f64.exp());
        assert!((far - 0.149).abs() < 1e-3);
    }

    #[test]
    fn perturbation_norms() {
        let (_, w) = base();
        let g = make_grid(40.0, 3999).unwrap();
        let zero = Profile::constant(g.clone(), StateVec::default(), 1.25);
        let gp = perturb(&zero, Perturbation::Gaussian, 1e-3).unwrap();
        let wn = weighted_norm(&gp.as_field(), &g, &w);
        assert!((wn - 2.1e-3).abs() < 0.05e-3, "{wn}");
        let lt = perturb(&zero, Perturbation::LeftTail, 1e-3).unwrap();
        assert!((lt.as_field().sup_norm() - 1e-3).abs() < 1e-15);
        assert!(weighted_norm(&lt.as_field(), &g, &w) >= 22.0);
        assert!(perturb(&zero, Perturbation::Gaussian, 0.0).is_err());
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let (p, w) = base();
        let g = make_grid(20.0, 399).unwrap();
        let eq = Profile::constant(g, p.right_state(), 1.25);
        let cfg = SimConfig::new(0.01, 10.0, 100).unwrap();
        let tr = run_simulation(&p, 1.25, &eq, &cfg, &w, Some(&eq)).unwrap();
        assert!(tr.sup_norms.iter().all(|s| *s < 1e-10));
        assert_eq!(tr.len(), 11);
        assert!(tr.times.windows(2).all(|t| t[1] > t[0]));
    }

    #[test]
    fn blow_up_detected() {
        let (p, w) = base();
        let g = make_grid(10.0, 99).unwrap();
        let big = Profile::constant(g, StateVec::new(0.0, 30.0), 0.0);
        let cfg = SimConfig::new(0.01, 1.0, 10).unwrap();
        assert!(matches!(
            run_simulation(&p, 0.0, &big, &cfg, &w, None),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn decay_constant_fits() {
        let times: Vec<f64> = (0..=50).map(|i| i as f64).collect();
        let tr = Trace {
            weighted_norms: times.iter().map(|t| 3.0 * (-0.2 * t).exp()).collect(),
            sup_norms: vec![0.0; 51],
            front_positions: times.iter().map(|t| 0.3 + t).collect(),
            mass_checks: vec![0.0; 51],
            times: times.clone(),
        };
        let d = fit_decay_constant(&tr, 0.0).unwrap();
        assert!((d.m - 3.0).abs() < 1e-10 && (d.b - 0.2).abs() < 1e-10);
        assert!((spreading_speed(&tr, 0.0, 50.0).unwrap() - 1.0).abs() < 1e-12);

        let flat = Trace {
            weighted_norms: vec![0.7; 51],
            front_positions: vec![2.0; 51],
            ..tr.clone()
        };
        assert_eq!(fit_decay_constant(&flat, 0.0).unwrap().b, 0.0);
        assert_eq!(spreading_speed(&flat, 0.0, 50.0).unwrap(), 0.0);

        let mut bad = tr.clone();
        bad.weighted_norms[40] = 0.0;
        assert!(matches!(fit_decay_constant(&bad, 10.0), Err(Error::NonpositiveNorm { .. })));
        bad.front_positions[45] = f64::NAN;
        assert!(matches!(spreading_speed(&bad, 40.0, 50.0), Err(Error::FrontNotFound { .. })));
    }

    #[test]
    fn scheme_is_second_order() {
        let (p, _) = base();
        let e1 = manufactured_error(&p, 1.25, 10.0, 79, 0.02, 1.0).unwrap();
        let e2 = manufactured_error(&p, 1.25, 10.0, 159, 0.01, 1.0).unwrap();
        let e3 = manufactured_error(&p, 1.25, 10.0, 319, 0.005, 1.0).unwrap();
        let (o1, o2) = ((e1 / e2).log2(), (e2 / e3).log2());
        assert!((o2 - 2.0).abs() < 0.1, "errors {e1:e} {e2:e} {e3:e} orders {o1} {o2}");
    }

    #[test]
    fn front_crossing_interpolates() {
        let g = make_grid(2.0, 3).unwrap();
        let prof = Profile::new(
            g,
            vec![0.0; 3],
            vec![0.2, 0.4, 0.8],
            0.0,
            StateVec::new(0.0, 0.0),
            StateVec::new(0.0, 1.0),
        )
        .unwrap();
        // knots -2, -1, 0, 1, 2 with v = 0, 0.2, 0.4, 0.8, 1
        assert!((front_position(&prof, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(front_position(&prof, 1.5).is_none());
    }
}
