//! Simulation driver and the vanishing-vertical-viscosity study.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{discrete_energy, record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field::{linf_of, lp_of, velocity_from_state, FlowState, Regime};
use crate::initial::InitialCondition;
use crate::solver::{cfl_dt, init_state, Integrator, SolverConfig};

/// Times closer than this are treated as the same output time.
const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// States at `t = 0`, at each requested snapshot time and at `t_end`.
    pub snapshots: Vec<FlowState>,
    /// One record per output time, starting at `t = 0`.
    pub series: Vec<DiagnosticsRecord>,
    pub steps: usize,
}

/// Output lattice: multiples of `output_every`, the snapshot times and `t_end`.
pub fn output_times(cfg: &SolverConfig) -> Vec<f64> {
    let mut times: Vec<f64> = Vec::new();
    let mut n = 1u64;
    loop {
        let t = n as f64 * cfg.output_every;
        if t >= cfg.t_end - TIME_EPS {
            break;
        }
        times.push(t);
        n += 1;
    }
    times.extend(cfg.snapshot_times.iter().copied().filter(|t| *t > TIME_EPS));
    if cfg.t_end > TIME_EPS {
        times.push(cfg.t_end);
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);
    times
}

/// Integrates to `t_end`, recording diagnostics on the output lattice.
///
/// Each record's `budget_residual` uses the dissipation integrated with the
/// trapezoid rule over every step taken, not just over the output times.
pub fn run_simulation(cfg: &SolverConfig) -> Result<RunOutput> {
    let mut s = init_state(cfg)?;
    let grid = s.grid().clone();
    let mut integrator = Integrator::from_config(&grid, cfg);
    let rate = |s: &FlowState| {
        let p = discrete_energy(s);
        (p.energy, 2.0 * s.nu1 * p.diss_h + 2.0 * s.nu2 * p.diss_v)
    };
    let (e0, mut r_prev) = rate(&s);
    let mut dissipated = 0.0;
    let residual = |e: f64, dissipated: f64| {
        let gap = (e + dissipated - e0).abs();
        if e0 > 0.0 {
            gap / e0
        } else {
            gap
        }
    };
    let is_snapshot =
        |t: f64| (t - cfg.t_end).abs() <= TIME_EPS || cfg.snapshot_times.iter().any(|x| (x - t).abs() <= TIME_EPS);

    let mut series = vec![record(&s)?];
    let mut snapshots = vec![s.clone()];
    let mut steps = 0;
    for target in output_times(cfg) {
        while s.t < target {
            let remaining = target - s.t;
            let mut dt = match cfg.dt {
                Some(dt) => dt,
                None => cfl_dt(&s, cfg.cfl, target),
            };
            let land = dt >= remaining * (1.0 - 1e-9);
            if land {
                dt = remaining;
            }
            if !(dt > 0.0) {
                return Err(Error::NonFinite { last_valid_t: s.t });
            }
            let mut next = integrator.step(&s, dt)?;
            if land {
                next.t = target;
            }
            let (_, r) = rate(&next);
            dissipated += 0.5 * dt * (r_prev + r);
            r_prev = r;
            s = next;
            steps += 1;
        }
        let mut rec = record(&s)?;
        rec.budget_residual = residual(rec.energy, dissipated);
        series.push(rec);
        if is_snapshot(target) {
            snapshots.push(s.clone());
        }
    }
    Ok(RunOutput { snapshots, series, steps })
}

/// For each `r`, `max_t (||u - U||_r + ||v - V||_r)` over snapshot pairs.
/// `r = infinity` selects the maximum norm.
pub fn difference_norms(visc: &[FlowState], limit: &[FlowState], r_list: &[f64]) -> Result<Vec<(f64, f64)>> {
    if visc.len() != limit.len() {
        return Err(Error::TimeMismatch(format!("{} vs {} snapshots", visc.len(), limit.len())));
    }
    let mut sup = vec![0.0f64; r_list.len()];
    for (a, b) in visc.iter().zip(limit) {
        if (a.t - b.t).abs() > TIME_EPS {
            return Err(Error::TimeMismatch(format!("t = {} vs t = {}", a.t, b.t)));
        }
        let (ua, va) = velocity_from_state(a);
        let (ub, vb) = velocity_from_state(b);
        let grid = a.grid();
        if grid.ny != b.grid().ny || grid.nx != b.grid().nx {
            return Err(Error::InvalidArgument("snapshots live on different grids".into()));
        }
        let du: Vec<f64> = ua.physical()?.iter().zip(ub.physical()?).map(|(x, y)| x - y).collect();
        let dv: Vec<f64> = va.physical()?.iter().zip(vb.physical()?).map(|(x, y)| x - y).collect();
        for (m, &r) in sup.iter_mut().zip(r_list) {
            let d =
                if r.is_infinite() { linf_of(&du) + linf_of(&dv) } else { lp_of(grid, &du, r) + lp_of(grid, &dv, r) };
            *m = m.max(d);
        }
    }
    Ok(r_list.iter().copied().zip(sup).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub alpha: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares slope of `log(err)` against `log(nu2)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("fit_rate needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::InvalidArgument("fit_rate needs positive inputs".into()));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit_rate needs distinct nu2 values".into()));
    }
    let alpha = sxy / sxx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - alpha * (x - mx)).powi(2)).sum();
    Ok(Fit { alpha, residual: (ss / n).sqrt() })
}

/// `(e + |log nu2|) log(e + |log nu2|)`.
pub fn log_growth(nu2: f64) -> f64 {
    let a = std::f64::consts::E + nu2.ln().abs();
    a * a.ln()
}

fn default_nu2_list() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5]
}

fn default_r_list() -> Vec<f64> {
    vec![2.0, 4.0, 6.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub nx: usize,
    pub ny: usize,
    pub stretch: f64,
    pub nu1: f64,
    pub nu2_list: Vec<f64>,
    pub r_list: Vec<f64>,
    pub t_end: f64,
    pub cfl: f64,
    /// Spacing of the shared output lattice on which the two systems are compared.
    pub output_every: f64,
    pub initial: InitialCondition,
    /// Extra smaller `nu2` used only to test the stability of the `L^inf` constant.
    pub extension_nu2: Option<f64>,
    /// Repeats the family at doubled `nx` and `ny`.
    pub resolution_check: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 384,
            stretch: 0.9,
            nu1: 0.1,
            nu2_list: default_nu2_list(),
            r_list: default_r_list(),
            t_end: 1.0,
            cfl: 0.4,
            output_every: 0.05,
            initial: InitialCondition::default(),
            extension_nu2: Some(1e-6),
            resolution_check: false,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu2_list.is_empty() {
            return Err(Error::Config("nu2_list is empty".into()));
        }
        if self.nu2_list.windows(2).any(|w| !(w[1] < w[0])) || self.nu2_list.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("nu2_list must be positive and strictly decreasing".into()));
        }
        if !(self.nu2_list[0] < self.nu1) {
            return Err(Error::Config("max(nu2_list) must be below nu1".into()));
        }
        if self.r_list.iter().any(|r| !(*r >= 2.0)) {
            return Err(Error::Config("r_list entries must be >= 2".into()));
        }
        let ic = self.initial.resolve()?;
        ic.check(Regime::Viscous, crate::solver::IC_TOLERANCE)?;
        ic.check(Regime::Limit, crate::solver::IC_TOLERANCE)?;
        self.solver(Regime::Limit, 0.0).validate()
    }

    /// Solver configuration of one member run; every output time is a snapshot time.
    pub fn solver(&self, regime: Regime, nu2: f64) -> SolverConfig {
        let mut cfg = SolverConfig {
            nx: self.nx,
            ny: self.ny,
            stretch: self.stretch,
            nu1: self.nu1,
            nu2,
            cfl: self.cfl,
            t_end: self.t_end,
            output_every: self.output_every,
            dt: None,
            regime,
            linear_only: false,
            initial: self.initial.clone(),
            snapshot_times: Vec::new(),
        };
        cfg.snapshot_times = output_times(&cfg);
        cfg
    }

    fn doubled(&self) -> StudyConfig {
        StudyConfig { nx: 2 * self.nx, ny: 2 * self.ny, resolution_check: false, extension_nu2: None, ..self.clone() }
    }
}

/// Time integrals and suprema over one run's series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub grad_p_sq_integral: f64,
    pub grad_q_sq_integral: f64,
    pub sup_vx_l2: f64,
    pub sup_linf_u: f64,
    /// Largest `||grad q||^2 / (nu2^2 ||u_yy|| ||u_yx||)` over the records.
    pub max_grad_q_ratio: f64,
    pub max_budget_residual: f64,
    pub steps: usize,
}

fn trapezoid(series: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    series.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1]))).sum()
}

pub fn summarize(series: &[DiagnosticsRecord], nu2: f64, steps: usize) -> RunSummary {
    let max = |f: &dyn Fn(&DiagnosticsRecord) -> f64| series.iter().map(f).fold(0.0, f64::max);
    let ratio = |r: &DiagnosticsRecord| {
        let den = nu2 * nu2 * r.uyy_l2 * r.uyx_l2;
        if den > 0.0 {
            r.grad_q_l2.powi(2) / den
        } else {
            0.0
        }
    };
    RunSummary {
        grad_p_sq_integral: trapezoid(series, |r| r.grad_p_l2.powi(2)),
        grad_q_sq_integral: trapezoid(series, |r| r.grad_q_l2.powi(2)),
        sup_vx_l2: max(&|r| r.vx_l2),
        sup_linf_u: max(&|r| r.linf_u),
        max_grad_q_ratio: max(&ratio),
        max_budget_residual: max(&|r| r.budget_residual),
        steps,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberResult {
    pub nu2: f64,
    /// `(r, sup_t ||u - U||_r + ||v - V||_r)`.
    pub errors: Vec<(f64, f64)>,
    pub summary: RunSummary,
    #[serde(skip)]
    pub series: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    pub r: f64,
    pub fit: Fit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyResult {
    pub nx: usize,
    pub ny: usize,
    pub members: Vec<MemberResult>,
    pub limit: RunSummary,
    #[serde(skip)]
    pub limit_series: Vec<DiagnosticsRecord>,
    /// Convergence exponents per `r`; empty with fewer than three members.
    pub alpha: Vec<RateFit>,
    /// Slope of `log int ||grad q||^2 dt` against `log nu2`.
    pub grad_q_slope: Option<Fit>,
    /// `max / min` of `int ||grad p||^2 dt` over the family.
    pub grad_p_spread: f64,
    /// `max / min` of `sup_t ||v_x||` over the family.
    pub vx_spread: f64,
    /// `max / min` of the per-member grad-q ratio maxima.
    pub grad_q_ratio_spread: f64,
    /// Smallest `C` with `sup_t ||u||_inf^2 <= C log_growth(nu2)` for every member.
    pub linf_constant: f64,
    pub failed: Vec<f64>,
}

impl FamilyResult {
    pub fn alpha_for(&self, r: f64) -> Option<Fit> {
        self.alpha.iter().find(|a| a.r == r).map(|a| a.fit)
    }

    pub fn is_partial(&self) -> bool {
        !self.failed.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub family: FamilyResult,
    /// The family's `L^inf` constant recomputed with `extension_nu2` included.
    pub linf_constant_extended: Option<f64>,
    pub extension: Option<MemberResult>,
    /// The family rerun at doubled resolution.
    pub refined: Option<FamilyResult>,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > 0.0 && lo.is_finite() {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn linf_constant<'a>(members: impl Iterator<Item = &'a MemberResult>) -> f64 {
    members.map(|m| m.summary.sup_linf_u.powi(2) / log_growth(m.nu2)).fold(0.0, f64::max)
}

fn run_member(cfg: &StudyConfig, nu2: f64, limit: &RunOutput) -> Result<MemberResult> {
    let out = run_simulation(&cfg.solver(Regime::Viscous, nu2))?;
    let errors = difference_norms(&out.snapshots, &limit.snapshots, &cfg.r_list)?;
    Ok(MemberResult { nu2, errors, summary: summarize(&out.series, nu2, out.steps), series: out.series })
}

fn run_family(cfg: &StudyConfig) -> Result<FamilyResult> {
    let limit = run_simulation(&cfg.solver(Regime::Limit, 0.0))?;
    let results: Vec<(f64, Result<MemberResult>)> =
        cfg.nu2_list.par_iter().map(|&nu2| (nu2, run_member(cfg, nu2, &limit))).collect();
    let mut members = Vec::new();
    let mut failed = Vec::new();
    for (nu2, r) in results {
        match r {
            Ok(m) => members.push(m),
            Err(_) => failed.push(nu2),
        }
    }
    let mut alpha = Vec::new();
    let mut grad_q_slope = None;
    if members.len() >= 3 {
        for (i, &r) in cfg.r_list.iter().enumerate() {
            let pts: Vec<(f64, f64)> = members.iter().map(|m| (m.nu2, m.errors[i].1)).collect();
            if let Ok(fit) = fit_rate(&pts) {
                alpha.push(RateFit { r, fit });
            }
        }
        let pts: Vec<(f64, f64)> = members.iter().map(|m| (m.nu2, m.summary.grad_q_sq_integral)).collect();
        grad_q_slope = fit_rate(&pts).ok();
    }
    Ok(FamilyResult {
        nx: cfg.nx,
        ny: cfg.ny,
        grad_p_spread: spread(members.iter().map(|m| m.summary.grad_p_sq_integral)),
        vx_spread: spread(members.iter().map(|m| m.summary.sup_vx_l2)),
        grad_q_ratio_spread: spread(members.iter().map(|m| m.summary.max_grad_q_ratio)),
        linf_constant: linf_constant(members.iter()),
        limit: summarize(&limit.series, 0.0, limit.steps),
        limit_series: limit.series,
        members,
        alpha,
        grad_q_slope,
        failed,
    })
}

/// Runs the limit system once and the viscous system for each `nu2`.
///
/// Member runs execute on the rayon pool. A failing member is listed in
/// `family.failed` and excluded from the fits.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let start = Instant::now();
    let family = run_family(cfg)?;
    let (extension, linf_constant_extended) = match cfg.extension_nu2 {
        Some(nu2) => {
            let limit_snaps = run_simulation(&cfg.solver(Regime::Limit, 0.0))?;
            let m = run_member(cfg, nu2, &limit_snaps)?;
            let c = linf_constant(family.members.iter().chain(std::iter::once(&m)));
            (Some(m), Some(c))
        }
        None => (None, None),
    };
    let refined = if cfg.resolution_check { Some(run_family(&cfg.doubled())?) } else { None };
    Ok(StudyResult {
        config: cfg.clone(),
        family,
        linf_constant_extended,
        extension,
        refined,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}
