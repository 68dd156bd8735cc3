//! Command-line front end. Each subcommand writes its artifacts under
//! `<output_dir>/<subcommand>/` (one `key=value` level per swept key) and
//! prints a short summary on standard output.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::bounds::{build_bounds, min_gap, upper_tail_exponents, verify_bound, BoundKind, MarginReport};
use crate::config::{parse_axis, sweep_points, EigMethodChoice, RunConfig};
use crate::dynamics::{
    instability_experiment, spread_experiment, stability_experiment, SimConfig, INSTABILITY_T_END,
    SPREAD_WINDOW, STABILITY_T_END,
};
use crate::eigen::{EigenMethod, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::{write_curves, write_eigenvalues, write_json, write_margins, write_profile, write_trace, ProfileMeta};
use crate::model::ModelParams;
use crate::spectrum::{
    assemble_weighted_operator, essential_spectrum_max, operator_eigenvalues, spectrum_curves, spectrum_report,
    translation_mode_check, weight_window,
};
use crate::wave::{
    check_monotone, compute_wave, fit_decay, subcritical_verdict, Direction, Side, WaveComputation, WaveConfig,
};

#[derive(Debug, Parser)]
#[command(name = "pgwave", version, about = "Traveling waves of the public goods game reaction-diffusion system")]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    k: Option<f64>,
    /// Wave speed.
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Lower-solution parameter.
    #[arg(long, global = true)]
    l: Option<f64>,
    /// Half-length of the domain [-L, L].
    #[arg(long = "L", global = true)]
    half_length: Option<f64>,
    /// Number of interior grid nodes.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    sigma1: Option<f64>,
    #[arg(long, global = true)]
    sigma2: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Output root directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Any config key, e.g. `--set eig_method=dense`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, ValueEnum)]
pub enum Task {
    /// Model constants and the K* identity.
    Params,
    /// Traveling wave by monotone iteration, with decay fits.
    Wave,
    /// Margins of the upper and lower solutions.
    BoundsCheck,
    /// Essential spectrum, weight window and spectral curves.
    Spectrum,
    /// Rightmost eigenvalues of the weighted linearization.
    Eigs,
    /// Weighted-norm decay of a small gaussian perturbation.
    Stability,
    /// Sup-norm growth of a left-tail perturbation.
    Instability,
    /// Front speed of an invasion in the lab frame.
    Spread,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Params => "params",
            Task::Wave => "wave",
            Task::BoundsCheck => "bounds-check",
            Task::Spectrum => "spectrum",
            Task::Eigs => "eigs",
            Task::Stability => "stability",
            Task::Instability => "instability",
            Task::Spread => "spread",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(flatten)]
    Single(Task),
    /// Run a subcommand over the cartesian product of parameter values.
    Sweep {
        /// `key=v1,v2,...`; repeat for more axes.
        #[arg(long = "over", required = true)]
        over: Vec<String>,
        #[arg(value_enum)]
        task: Task,
    },
}

/// Parses `argv` (program name first), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cfg = match resolve_config(&cli.common) {
        Ok(c) => c,
        Err(e) => return report_error(&e),
    };
    match cli.command {
        Command::Single(task) => {
            let dir = Path::new(&cfg.output_dir).join(task.name());
            let mut lines = Vec::new();
            let res = execute(task, &cfg, &dir, &mut lines);
            for l in &lines {
                println!("{l}");
            }
            match res {
                Ok(()) => 0,
                Err(e) => report_error(&e),
            }
        }
        Command::Sweep { over, task } => match sweep(task, &cfg, &over) {
            Ok(code) => code,
            Err(e) => report_error(&e),
        },
    }
}

fn report_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

fn resolve_config(a: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let reals = [
        ("alpha", a.alpha),
        ("k", a.k),
        ("c", a.c),
        ("l", a.l),
        ("L", a.half_length),
        ("sigma1", a.sigma1),
        ("sigma2", a.sigma2),
        ("tol", a.tol),
        ("dt", a.dt),
        ("t_end", a.t_end),
    ];
    for (key, v) in reals {
        if let Some(v) = v {
            cfg.set(key, &v.to_string())?;
        }
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    for s in &a.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{s}'")))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct SweepEntry {
    point: String,
    exit_code: i32,
    error: Option<String>,
}

fn sweep(task: Task, base: &RunConfig, over: &[String]) -> Result<i32> {
    let axes = over.iter().map(|s| parse_axis(s)).collect::<Result<Vec<_>>>()?;
    let points = sweep_points(base, &axes)?;
    let root = Path::new(&base.output_dir).join(task.name());
    let results: Vec<(String, Vec<String>, Result<()>)> = points
        .par_iter()
        .map(|pt| {
            let segs: Result<Vec<String>> = axes.iter().map(|(k, _)| pt.segment(k)).collect();
            let segs = match segs {
                Ok(s) => s,
                Err(e) => return (String::new(), Vec::new(), Err(e)),
            };
            let dir = segs.iter().fold(root.clone(), |d, s| d.join(s));
            let mut lines = Vec::new();
            let res = execute(task, pt, &dir, &mut lines);
            (segs.join("/"), lines, res)
        })
        .collect();
    let mut code = 0;
    let mut entries = Vec::new();
    for (point, lines, res) in results {
        println!("[{point}]");
        for l in &lines {
            println!("  {l}");
        }
        let (c, err) = match &res {
            Ok(()) => (0, None),
            Err(e) => {
                eprintln!("error at {point}: {e}");
                (e.exit_code(), Some(e.to_string()))
            }
        };
        if code == 0 {
            code = c;
        }
        entries.push(SweepEntry {
            point,
            exit_code: c,
            error: err,
        });
    }
    write_json(
        &root.join("sweep.json"),
        &json!({ "config": base, "axes": axes, "points": entries }),
    )?;
    Ok(code)
}

/// Runs one subcommand for one resolved config, pushing summary lines.
pub fn execute(task: Task, cfg: &RunConfig, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let p = cfg.validate()?;
    match task {
        Task::Params => params(cfg, &p, dir, out),
        Task::Wave => wave(cfg, &p, dir, out),
        Task::BoundsCheck => bounds_check(cfg, &p, dir, out),
        Task::Spectrum => spectrum(cfg, &p, dir, out),
        Task::Eigs => eigs(cfg, &p, dir, out),
        Task::Stability => stability(cfg, &p, dir, out),
        Task::Instability => instability(cfg, &p, dir, out),
        Task::Spread => spread(cfg, &p, dir, out),
    }
}

fn params(cfg: &RunConfig, p: &ModelParams, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let (lhs, rhs) = p.identity_sides();
    let holds = (lhs - rhs).abs() < 1e-12;
    out.push(format!("K* = {}", p.kstar));
    out.push(format!("cmin = {}", p.cmin));
    out.push(format!("m = 1 - k + alpha*k = {}", p.m()));
    out.push(format!("1 + kK* - K* = {lhs}, alpha/m = {rhs} ({})", if holds { "identity holds" } else { "identity FAILS" }));
    write_json(
        &dir.join("report.json"),
        &json!({
            "config": cfg,
            "params": p,
            "m": p.m(),
            "identity": { "lhs": lhs, "rhs": rhs, "holds": holds },
            "left_state": p.left_state(),
            "right_state": p.right_state(),
            "left_u_damping": p.left_u_damping(),
            "left_tail_ratio": p.left_tail_ratio(),
        }),
    )
}

fn solve(cfg: &RunConfig, p: &ModelParams, g: &Grid) -> Result<WaveComputation> {
    compute_wave(
        p,
        g,
        &WaveConfig {
            c: cfg.c,
            l: cfg.l,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            direction: Direction::Downward,
        },
    )
}

/// Decay fit as JSON, or the reason it failed.
fn fit_json(wc: &WaveComputation, p: &ModelParams, side: Side, critical: bool) -> serde_json::Value {
    match fit_decay(&wc.profile, p, side, critical) {
        Ok(f) => json!({
            "fit": f,
            "rel_error_u": f.rel_error_u(),
            "rel_error_v": f.rel_error_v(),
            "component_mismatch": f.component_mismatch(),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn is_critical(cfg: &RunConfig, p: &ModelParams) -> bool {
    (cfg.c - p.cmin).abs() <= 1e-12 * p.cmin.max(1.0)
}

fn wave(cfg: &RunConfig, p: &ModelParams, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let verdict = subcritical_verdict(p, cfg.c);
    if !verdict.admits_monotone_wave() {
        let r = verdict.roots();
        out.push(format!(
            "no monotone traveling wave: c = {} < cmin = {}; characteristic roots {} ± {}i are complex, so the tail at -inf oscillates",
            cfg.c, p.cmin, r[0].re, r[0].im.abs()
        ));
        out.push(serde_json::to_string(&verdict)?);
        write_json(&dir.join("report.json"), &json!({ "config": cfg, "verdict": verdict }))?;
        return Err(Error::SubcriticalSpeed { c: cfg.c, cmin: p.cmin });
    }
    let g = cfg.grid()?;
    let wc = solve(cfg, p, &g)?;
    let critical = is_critical(cfg, p);
    let mono = check_monotone(&wc.profile);
    let envelope = min_gap(&wc.bounds.upper, &wc.raw).min(min_gap(&wc.raw, &wc.bounds.lower));
    let minus = fit_json(&wc, p, Side::MinusInfinity, critical);
    let plus = fit_json(&wc, p, Side::PlusInfinity, critical);
    let w = cfg.weights()?;
    write_profile(&dir.join("profile.csv"), &wc.profile, &ProfileMeta::new(p, &wc.profile, &w))?;
    out.push(format!(
        "converged in {} iterations, residual {:e} (polished {:e})",
        wc.report.iterations, wc.report.final_residual, wc.polished_residual
    ));
    out.push(format!(
        "bound shift {}, min forward differences du {:e} dv {:e}, envelope slack {:e}",
        wc.bounds.shift, mono.min_du, mono.min_dv, envelope
    ));
    for (name, f) in [("-inf", &minus), ("+inf", &plus)] {
        if let Some(fit) = f.get("fit") {
            out.push(format!(
                "{name}: rate_u {} rate_v {} predicted {}",
                fit["rate_u"], fit["rate_v"], fit["predicted_rate"]
            ));
        } else {
            out.push(format!("{name}: {}", f["error"]));
        }
    }
    write_json(
        &dir.join("report.json"),
        &json!({
            "config": cfg,
            "params": p,
            "verdict": verdict,
            "critical": critical,
            "iteration": wc.report,
            "polished_residual": wc.polished_residual,
            "shift": wc.bounds.shift,
            "left_v": wc.left_v,
            "phase_offset": wc.phase_offset,
            "phase_iterations": wc.phase_iterations,
            "monotone": { "min_du": mono.min_du, "min_dv": mono.min_dv, "strict": mono.strictly_increasing() },
            "envelope_slack": envelope,
            "decay_minus_infinity": minus,
            "decay_plus_infinity": plus,
        }),
    )
}

fn margin_summary(r: &MarginReport) -> serde_json::Value {
    json!({ "excess": r.excess(), "worst_u": r.worst_u, "worst_v": r.worst_v })
}

fn bounds_check(cfg: &RunConfig, p: &ModelParams, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    if cfg.c < p.cmin - 1e-14 {
        return Err(Error::SubcriticalSpeed { c: cfg.c, cmin: p.cmin });
    }
    let g = cfg.grid()?;
    let b = build_bounds(p, cfg.c, &g, cfg.l, cfg.tol)?;
    let up = MarginReport::evaluate(p, &b.upper_base, cfg.c, BoundKind::Upper);
    let lo = MarginReport::evaluate(p, &b.lower, cfg.c, BoundKind::Lower);
    write_margins(&dir.join("upper_margins.csv"), &up)?;
    write_margins(&dir.join("lower_margins.csv"), &lo)?;
    let passed = up.excess() <= cfg.verify_tol && lo.excess() <= cfg.verify_tol;
    out.push(format!("upper: worst margins u {:e} v {:e}", up.worst_u.value, up.worst_v.value));
    out.push(format!("lower: worst margins u {:e} v {:e}", lo.worst_u.value, lo.worst_v.value));
    out.push(format!("ordering shift {}; {}", b.shift, if passed { "both bounds verified" } else { "verification FAILED" }));
    let tail = match upper_tail_exponents(p, &b) {
        Ok(t) => {
            out.push(format!(
                "upper +inf rate {} vs {} (4 alpha/m) and {} (4 alpha): {:?} fits better",
                t.rate_v, t.rate_alpha_over_m, t.rate_alpha, t.better
            ));
            json!(t)
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    write_json(
        &dir.join("report.json"),
        &json!({
            "config": cfg,
            "shift": b.shift,
            "min_gap": min_gap(&b.upper, &b.lower),
            "upper": margin_summary(&up),
            "lower": margin_summary(&lo),
            "upper_tail": tail,
            "passed": passed,
        }),
    )?;
    if !passed {
        let (prof, kind) = if up.excess() > cfg.verify_tol {
            (&b.upper_base, BoundKind::Upper)
        } else {
            (&b.lower, BoundKind::Lower)
        };
        verify_bound(p, prof, cfg.c, kind, cfg.verify_tol)?;
    }
    Ok(())
}

fn spectrum(cfg: &RunConfig, p: &ModelParams, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let w = cfg.weights()?;
    let ess = essential_spectrum_max(p, cfg.c, &w);
    let window = weight_window(p, cfg.c);
    let curves = spectrum_curves(p, cfg.c, &w, 3.0, 301)?;
    write_curves(&dir.join("curves.csv"), &curves)?;
    out.push(format!("max Re essential spectrum = {}", ess.max_re_essential));
    out.push(format!("branch vertices = {:?}", ess.branch_vertices));
    let (window_json, inside) = match &window {
        Ok(win) => {
            out.push(format!(
                "weight window: sigma1 < {}, {} < sigma2 < {}; (sigma1, sigma2) = ({}, {}) is {}",
                win.sigma1_max,
                win.sigma2_min,
                win.sigma2_max,
                w.sigma1,
                w.sigma2,
                if win.contains(&w) { "inside" } else { "outside" }
            ));
            (json!(win), Some(win.contains(&w)))
        }
        Err(e) => {
            out.push(format!("weight window: {e}"));
            (json!({ "error": e.to_string() }), None)
        }
    };
    write_json(
        &dir.join("report.json"),
        &json!({
            "config": cfg,
            "branch_vertices": ess.branch_vertices,
            "max_re_essential": ess.max_re_essential,
            "window": window_json,
            "weights_in_window": inside,
        }),
    )
}

fn eig_method(cfg: &RunConfig, p: &ModelParams, dim: usize) -> EigenMethod {
    let w = cfg.weights().unwrap_or_default();
    let shift = essential_spectrum_max(p, cfg.c, &w).max_re_essential.max(0.0) + 1.0;
    match cfg.eig_method {
        EigMethodChoice::Dense => EigenMethod::Dense,
        EigMethodChoice::Arnoldi => EigenMethod::Arnoldi { krylov: cfg.krylov, shift },
        EigMethodChoice::Auto if dim > DENSE_LIMIT => EigenMethod::Arnoldi { krylov: cfg.krylov, shift },
        EigMethodChoice::Auto => EigenMethod::Dense,
    }
}

fn eigs(cfg: &RunConfig, p: &ModelParams, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let g = cfg.grid()?;
    let w = cfg.weights()?;
    let wc = solve(cfg, p, &g)?;
    let op = assemble_weighted_operator(p, &wc.profile, &w);
    let method = eig_method(cfg, p, op.matrix.dim);
    let eigs = operator_eigenvalues(p, &op, cfg.eig_count, method)?;
    write_eigenvalues(&dir.join("eigenvalues.csv"), &eigs)?;
    let tm = translation_mode_check(p, &wc.profile, &w);
    let rep = spectrum_report(p, cfg.c, &w, Vec::new(), eigs);
    if let Some(r) = &rep.rightmost {
        out.push(format!("rightmost eigenvalue = {} {:+}i", r.re, r.im));
    }
    out.push(format!("max Re essential spectrum = {}", rep.max_re_essential));
    out.push(format!(
        "translation mode: residual {:e}, weighted tail factor {:e}",
        tm.residual, tm.tail_factor
    ));
    let method_name = match method {
        EigenMethod::Dense => "dense",
        EigenMethod::Arnoldi { .. } => "arnoldi",
        EigenMethod::Auto => "auto",
    };
    write_json(
        &dir.join("report.json"),
        &json!({
            "config": cfg,
            "method": method_name,
            "dimension": op.matrix.dim,
            "spectrum": rep,
            "translation_mode": tm,
        }),
    )
}

fn sim_config(cfg: &RunConfig, default_end: f64) -> Result<SimConfig> {
    SimConfig::new(cfg.dt, cfg.t_end.unwrap_or(default_end), cfg.record_every)
}

fn stability(cfg: &RunConfig, p: &ModelParams, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let w = cfg.weights()?;
    let win = weight_window(p, cfg.c)?;
    if !win.contains(&w) {
        return Err(Error::Config(format!(
            "weights ({}, {}) lie outside the admissible window sigma1 < {}, {} < sigma2 < {}",
            w.sigma1, w.sigma2, win.sigma1_max, win.sigma2_min, win.sigma2_max
        )));
    }
    let g = cfg.grid()?;
    let sc = sim_config(cfg, STABILITY_T_END)?;
    let wc = solve(cfg, p, &g)?;
    let rep = stability_experiment(p, cfg.c, &wc.profile, &w, &sc, cfg.amplitude)?;
    write_trace(&dir.join("trace.csv"), &rep.trace)?;
    out.push(format!(
        "weighted norm {:e} -> {:e} (ratio {:e}) over t in [0, {}]",
        rep.initial_weighted, rep.final_weighted, rep.ratio, rep.t_end
    ));
    if let Some(d) = rep.decay {
        out.push(format!("fitted decay: M = {:e}, b = {}", d.m, d.b));
    }
    write_json(&dir.join("report.json"), &json!({ "config": cfg, "report": rep }))
}

fn instability(cfg: &RunConfig, p: &ModelParams, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let w = cfg.weights()?;
    let g = cfg.grid()?;
    let sc = sim_config(cfg, INSTABILITY_T_END)?;
    let wc = solve(cfg, p, &g)?;
    let rep = instability_experiment(p, cfg.c, &wc.profile, &w, &sc, cfg.amplitude)?;
    write_trace(&dir.join("trace.csv"), &rep.trace)?;
    out.push(format!(
        "sup-norm deviation {:e} -> {:e}: growth factor {}",
        rep.initial_sup, rep.final_sup, rep.growth_factor
    ));
    out.push(format!("initial weighted norm {:e}", rep.initial_weighted));
    if let Some(b) = rep.blow_up {
        out.push(format!("blow-up at t = {} (sup {})", b.t, b.sup));
    }
    write_json(&dir.join("report.json"), &json!({ "config": cfg, "report": rep }))
}

fn spread(cfg: &RunConfig, p: &ModelParams, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let g = Grid::new(cfg.spread_half_length, cfg.spread_n)?;
    let sc = sim_config(cfg, SPREAD_WINDOW.1)?;
    let window = if sc.t_end >= SPREAD_WINDOW.1 {
        SPREAD_WINDOW
    } else {
        (0.5 * sc.t_end, sc.t_end)
    };
    let rep = spread_experiment(p, &g, &sc, window)?;
    write_trace(&dir.join("trace.csv"), &rep.trace)?;
    out.push(format!(
        "front speed {} over t in [{}, {}] (2*sqrt(alpha) = {}, relative error {:.3})",
        rep.speed, window.0, window.1, rep.predicted, rep.rel_error
    ));
    write_json(&dir.join("report.json"), &json!({ "config": cfg, "report": rep }))
}
