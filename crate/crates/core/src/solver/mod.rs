//! Time integration of both systems in vorticity-streamfunction form.
//!
//! The nonlinear term is assembled in flux form, `-(d_x(u w) + d_y(v w))`,
//! from dealiased factors. Together with the summation-by-parts pair used for
//! `ddy` and the trapezoid weights, this makes the semi-discrete kinetic
//! energy exchange between the fluctuations and the mean flow cancel exactly,
//! so the discrete energy budget is limited only by the time integrator.

mod limit;
mod viscous;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{d2_coeffs, dirichlet_factor, Tridiagonal};
use crate::error::{Error, Result};
use crate::field::{
    dealias_in_place, dx_spectral, dy_spectral, forward, forward_row, inverse, inverse_row, linf_of, BcTag, FieldData,
    FlowState, Regime, ScalarField,
};
use crate::grid::{build_grid, Grid};
use crate::initial::InitialCondition;

/// Tolerance for the analytic wall-condition check of initial data.
pub const IC_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub nx: usize,
    pub ny: usize,
    pub stretch: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub cfl: f64,
    pub t_end: f64,
    /// Interval between diagnostics records.
    pub output_every: f64,
    /// Fixed time step; must not exceed the CFL limit. `None` selects dt adaptively.
    pub dt: Option<f64>,
    pub regime: Regime,
    /// Drops the advection term (linear-decay checks).
    pub linear_only: bool,
    pub initial: InitialCondition,
    /// Times at which full snapshots are kept, in addition to `t = 0` and `t_end`.
    pub snapshot_times: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 384,
            stretch: 0.9,
            nu1: 0.1,
            nu2: 1e-3,
            cfl: 0.4,
            t_end: 1.0,
            output_every: 0.05,
            dt: None,
            regime: Regime::Viscous,
            linear_only: false,
            initial: InitialCondition::default(),
            snapshot_times: Vec::new(),
        }
    }
}

impl SolverConfig {
    /// The same configuration for the horizontally viscous limit system.
    pub fn to_limit(&self) -> SolverConfig {
        SolverConfig { regime: Regime::Limit, nu2: 0.0, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.nu1 > 0.0) {
            return bad(format!("nu1 must be positive, got {}", self.nu1));
        }
        match self.regime {
            Regime::Viscous if !(self.nu2 > 0.0 && self.nu2 < self.nu1) => {
                return bad(format!("viscous regime needs 0 < nu2 < nu1, got nu2 = {}", self.nu2));
            }
            Regime::Limit if self.nu2 != 0.0 => return bad("limit regime needs nu2 = 0".into()),
            _ => {}
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if !(self.output_every > 0.0) {
            return bad(format!("output_every must be positive, got {}", self.output_every));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0 && *t <= self.t_end)) {
            return bad("snapshot_times must lie in [0, t_end]".into());
        }
        Ok(())
    }
}

/// Builds the initial state, rejecting initial data that violate the wall conditions.
///
/// `omega` is set to the discrete `-Laplacian(psi)` the stepper uses, with the
/// wall rows given by the closure of the chosen regime.
pub fn init_state(cfg: &SolverConfig) -> Result<FlowState> {
    cfg.validate()?;
    let grid = build_grid(cfg.nx, cfg.ny, cfg.stretch)?;
    let ic = cfg.initial.resolve()?;
    ic.check(cfg.regime, IC_TOLERANCE)?;
    if ic.max_wavenumber() as usize > grid.nx / 3 {
        return Err(Error::Config(format!(
            "initial wavenumber {} is not resolved by nx = {}",
            ic.max_wavenumber(),
            grid.nx
        )));
    }
    let (ny, nk) = (grid.ny, grid.nk());
    let phys = ScalarField::from_fn(&grid, |x, y| ic.psi(x, y));
    let mut psi = forward(&grid, phys.physical()?);
    psi[..ny].fill(Complex64::default());
    for k in 1..nk {
        psi[k * ny] = Complex64::default();
        psi[k * ny + ny - 1] = Complex64::default();
    }
    psi[(nk - 1) * ny..].fill(Complex64::default());
    let mut mean_u: Vec<f64> = grid.y_nodes.iter().map(|&y| ic.mean_u(y)).collect();
    if cfg.regime == Regime::Viscous {
        mean_u[0] = 0.0;
    }
    let omega = vorticity_from_streamfunction(&grid, &psi, &mean_u, cfg.regime);
    let s = FlowState {
        psi: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(psi), bc: BcTag::BothWallsZero },
        omega: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(omega), bc: BcTag::None },
        mean_u,
        t: 0.0,
        nu1: cfg.nu1,
        nu2: cfg.nu2,
        regime: cfg.regime,
    };
    s.validate()?;
    Ok(s)
}

/// Discrete `omega = -Laplacian(psi)` with the wall rows of the given regime:
/// Thom's closure at `y = 0` and zero at `y = 1` for the viscous system,
/// one-sided second differences for the limit system.
pub fn vorticity_from_streamfunction(grid: &Grid, psi: &[Complex64], mean_u: &[f64], regime: Regime) -> Vec<Complex64> {
    let (ny, nk) = (grid.ny, grid.nk());
    let mut w = vec![Complex64::default(); nk * ny];
    let mean_w = grid.ddy(mean_u).expect("mean profile has ny entries");
    for (c, m) in w[..ny].iter_mut().zip(&mean_w) {
        *c = Complex64::new(-m, 0.0);
    }
    let h0 = grid.spacing[0];
    for k in 1..nk - 1 {
        let k2 = (k * k) as f64;
        let col = &psi[k * ny..(k + 1) * ny];
        let out = &mut w[k * ny..(k + 1) * ny];
        for j in 1..ny - 1 {
            let (a, b, c) = d2_coeffs(grid, j);
            out[j] = -(col[j - 1] * a + col[j] * b + col[j + 1] * c) + col[j] * k2;
        }
        match regime {
            Regime::Viscous => {
                out[0] = col[1] * (-2.0 / (h0 * h0));
                out[ny - 1] = Complex64::default();
            }
            Regime::Limit => {
                out[0] = -grid.d2y_at(col, 0);
                out[ny - 1] = -grid.d2y_at(col, ny - 1);
            }
        }
    }
    w
}

/// Largest stable advective step, `cfl * min(dx / max|u|, min dy / max|v|)`,
/// capped at `t_end - t`.
pub fn cfl_dt(s: &FlowState, cfl: f64, t_end: f64) -> f64 {
    let (u, v) = crate::field::velocity_from_state(s);
    let umax = linf_of(u.physical().expect("physical"));
    let vmax = linf_of(v.physical().expect("physical"));
    cfl_limit(s.grid(), cfl, umax, vmax).min((t_end - s.t).max(0.0))
}

fn cfl_limit(grid: &Grid, cfl: f64, umax: f64, vmax: f64) -> f64 {
    let mut dt = f64::INFINITY;
    if umax > 0.0 {
        dt = dt.min(grid.dx() / umax);
    }
    if vmax > 0.0 {
        dt = dt.min(grid.min_dy() / vmax);
    }
    cfl * dt
}

/// Advection tendencies of one state.
#[derive(Debug, Clone)]
pub struct Advection {
    /// `-(u w_x + v w_y)` for the `k != 0` modes, dealiased, spectral.
    pub omega: ScalarField,
    /// Mean-flow forcing `-d/dy avg(u v)`, evaluated as `avg(v w)`.
    pub mean: Vec<f64>,
    pub max_u: f64,
    pub max_v: f64,
}

/// Nonlinear tendencies from dealiased factors; products are formed in physical space.
///
/// Interior rows use the flux form. In the limit regime the wall rows, where
/// `v = 0`, use the advective form `-u w_x` of the closed wall equation.
pub fn advect(s: &FlowState) -> Advection {
    let grid = s.grid();
    let (nx, ny, nk) = (grid.nx, grid.ny, grid.nk());
    let mut psi = s.psi.spectral_view().into_owned();
    let mut om = s.omega.spectral_view().into_owned();
    dealias_in_place(grid, &mut psi);
    dealias_in_place(grid, &mut om);

    let mut uh = dy_spectral(grid, &psi);
    for (c, m) in uh[..ny].iter_mut().zip(&s.mean_u) {
        *c = Complex64::new(*m, 0.0);
    }
    let vh: Vec<Complex64> = dx_spectral(grid, &psi).into_iter().map(|c| -c).collect();
    let u = inverse(grid, &uh);
    let v = inverse(grid, &vh);
    let w = inverse(grid, &om);

    let f: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a * b).collect();
    let g: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a * b).collect();
    let fh = forward(grid, &f);
    let gh = forward(grid, &g);
    let gy = dy_spectral(grid, &gh);

    let mut n = vec![Complex64::default(); nk * ny];
    for k in 1..=(nx / 3).min(nk - 2) {
        let ik = Complex64::new(0.0, k as f64);
        for j in 0..ny {
            let idx = k * ny + j;
            n[idx] = -(fh[idx] * ik + gy[idx]);
        }
    }
    if s.regime == Regime::Limit {
        for j in [0, ny - 1] {
            let col: Vec<Complex64> = (0..nk).map(|k| om[k * ny + j] * Complex64::new(0.0, k as f64)).collect();
            let wx = inverse_row(grid, &col);
            let prod: Vec<f64> = u[j * nx..(j + 1) * nx].iter().zip(&wx).map(|(a, b)| a * b).collect();
            let ph = forward_row(grid, &prod);
            for (k, c) in ph.iter().enumerate().take((nx / 3).min(nk - 2) + 1).skip(1) {
                n[k * ny + j] = -*c;
            }
        }
    }
    let mean = (0..ny).map(|j| gh[j].re).collect();
    Advection {
        omega: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(n), bc: BcTag::None },
        mean,
        max_u: linf_of(&u),
        max_v: linf_of(&v),
    }
}

/// Adams-Bashforth history from the previous step.
#[derive(Debug, Clone)]
struct History {
    nl: Vec<Complex64>,
    mean: Vec<f64>,
    dt: f64,
}

/// Per-mode implicit operators for one `(dt, nu1, nu2)` triple.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    key: (u64, u64, u64),
    /// `I - dt/2 L_k` with identity wall rows, one per mode `k = 1..nk-1`.
    modes: Vec<Tridiagonal>,
    /// Homogeneous responses to unit wall vorticity (viscous regime).
    omega_h: Vec<Vec<f64>>,
    psi_h: Vec<Vec<f64>>,
    mean: Option<Tridiagonal>,
}

/// Regime-specific implicit update: `(state, dt, advection, mean forcing) -> (psi, omega, mean_u)`.
type UpdateFn =
    fn(&mut Integrator, &FlowState, f64, &[Complex64], &[f64]) -> (Vec<Complex64>, Vec<Complex64>, Vec<f64>);

/// IMEX Crank-Nicolson / Adams-Bashforth integrator.
///
/// The integrator owns the advection history needed by the two-step scheme;
/// the first step after construction or [`Integrator::reset`] is
/// Crank-Nicolson / forward Euler. Feed it the states it returned.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: Arc<Grid>,
    cfl: f64,
    linear_only: bool,
    history: Option<History>,
    cache: Option<StepCache>,
    dirichlet: Vec<Tridiagonal>,
}

impl Integrator {
    pub fn new(grid: &Arc<Grid>, cfl: f64, linear_only: bool) -> Self {
        let dirichlet = (0..grid.nk()).map(|k| dirichlet_factor(grid, k)).collect();
        Self { grid: grid.clone(), cfl, linear_only, history: None, cache: None, dirichlet }
    }

    pub fn from_config(grid: &Arc<Grid>, cfg: &SolverConfig) -> Self {
        Self::new(grid, cfg.cfl, cfg.linear_only)
    }

    /// Forgets the Adams-Bashforth history.
    pub fn reset(&mut self) {
        self.history = None;
    }

    /// Advances one step with the scheme of the state's regime.
    pub fn step(&mut self, s: &FlowState, dt: f64) -> Result<FlowState> {
        match s.regime {
            Regime::Viscous => self.step_viscous(s, dt),
            Regime::Limit => self.step_limit(s, dt),
        }
    }

    pub fn step_viscous(&mut self, s: &FlowState, dt: f64) -> Result<FlowState> {
        if s.regime != Regime::Viscous {
            return Err(Error::InvalidArgument("step_viscous needs a viscous-regime state".into()));
        }
        self.advance(s, dt, viscous::update)
    }

    pub fn step_limit(&mut self, s: &FlowState, dt: f64) -> Result<FlowState> {
        if s.regime != Regime::Limit {
            return Err(Error::InvalidArgument("step_limit needs a limit-regime state".into()));
        }
        self.advance(s, dt, limit::update)
    }

    fn advance(&mut self, s: &FlowState, dt: f64, update: UpdateFn) -> Result<FlowState> {
        s.validate()?;
        if !Arc::ptr_eq(&self.grid, s.grid()) && *self.grid.y_nodes != *s.grid().y_nodes {
            return Err(Error::InvalidArgument("state grid differs from the integrator grid".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let ny = self.grid.ny;
        let (nl, mean_nl, limit) = if self.linear_only {
            let nk = self.grid.nk();
            let (u, v) = crate::field::velocity_from_state(s);
            let lim = cfl_limit(&self.grid, self.cfl, linf_of(u.physical()?), linf_of(v.physical()?));
            (vec![Complex64::default(); nk * ny], vec![0.0; ny], lim)
        } else {
            let adv = advect(s);
            let lim = cfl_limit(&self.grid, self.cfl, adv.max_u, adv.max_v);
            let FieldData::XSpectral(n) = adv.omega.data else { unreachable!() };
            (n, adv.mean, lim)
        };
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        let (nl_star, mean_star) = match &self.history {
            Some(h) => {
                let r = dt / h.dt;
                let (a, b) = (1.0 + 0.5 * r, -0.5 * r);
                (
                    nl.iter().zip(&h.nl).map(|(n1, n0)| n1 * a + n0 * b).collect::<Vec<_>>(),
                    mean_nl.iter().zip(&h.mean).map(|(n1, n0)| n1 * a + n0 * b).collect::<Vec<_>>(),
                )
            }
            None => (nl.clone(), mean_nl.clone()),
        };
        let (omega, psi, mean_u) = update(self, s, dt, &nl_star, &mean_star);
        let finite = omega.iter().chain(&psi).all(|c| c.re.is_finite() && c.im.is_finite())
            && mean_u.iter().all(|m| m.is_finite());
        if !finite {
            return Err(Error::NonFinite { last_valid_t: s.t });
        }
        self.history = Some(History { nl, mean: mean_nl, dt });
        let grid = &self.grid;
        Ok(FlowState {
            psi: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(psi), bc: BcTag::BothWallsZero },
            omega: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(omega), bc: BcTag::None },
            mean_u,
            t: s.t + dt,
            nu1: s.nu1,
            nu2: s.nu2,
            regime: s.regime,
        })
    }

    /// `psi = A^{-1}(-omega)` on the interior rows of mode `k`, zero on both walls.
    fn invert_mode(&self, k: usize, omega: &[Complex64], psi: &mut [Complex64]) {
        let ny = omega.len();
        for (p, w) in psi.iter_mut().zip(omega) {
            *p = -*w;
        }
        psi[0] = Complex64::default();
        psi[ny - 1] = Complex64::default();
        self.dirichlet[k].solve_in_place(psi);
    }
}

/// One step from a fresh integrator (first-order start of the two-step scheme).
pub fn step(s: &FlowState, dt: f64) -> Result<FlowState> {
    Integrator::new(s.grid(), 1.0, false).step(s, dt)
}
