//! Implicit part of the viscous step.
//!
//! Per mode, Crank-Nicolson on `-nu1 k^2 + nu2 D2` at the interior rows with
//! `omega = 0` on the free-slip wall. Thom's closure `omega_0 = -2 psi_1 / h^2`
//! is imposed at the new time level: the solution is split into a particular
//! part with zero wall vorticity plus a multiple of the response to unit wall
//! vorticity, and the multiple is fixed by the closure.

use num_complex::Complex64;

use super::{Integrator, StepCache};
use crate::elliptic::{d2_coeffs, Tridiagonal};
use crate::field::FlowState;
use crate::grid::Grid;

fn key(dt: f64, nu1: f64, nu2: f64) -> (u64, u64, u64) {
    (dt.to_bits(), nu1.to_bits(), nu2.to_bits())
}

/// `I - a (-nu1 k^2 + nu2 D2)` on the interior, identity wall rows.
fn mode_matrix(grid: &Grid, k2: f64, a: f64, nu1: f64, nu2: f64) -> Tridiagonal {
    let ny = grid.ny;
    let (mut sub, mut diag, mut sup) = (vec![0.0; ny], vec![1.0; ny], vec![0.0; ny]);
    for j in 1..ny - 1 {
        let (l, c, r) = d2_coeffs(grid, j);
        sub[j] = -a * nu2 * l;
        diag[j] = 1.0 + a * nu1 * k2 - a * nu2 * c;
        sup[j] = -a * nu2 * r;
    }
    Tridiagonal::factor(&sub, &diag, &sup)
}

/// Mean-flow operator `I - a nu2 D2` with `u(0) = 0` and a zero-flux half cell at `y = 1`.
fn mean_matrix(grid: &Grid, a: f64, nu2: f64) -> Tridiagonal {
    let ny = grid.ny;
    let (mut sub, mut diag, mut sup) = (vec![0.0; ny], vec![1.0; ny], vec![0.0; ny]);
    for j in 1..ny - 1 {
        let (l, c, r) = d2_coeffs(grid, j);
        sub[j] = -a * nu2 * l;
        diag[j] = 1.0 - a * nu2 * c;
        sup[j] = -a * nu2 * r;
    }
    let top = 1.0 / (grid.spacing[ny - 2] * grid.y_weights[ny - 1]);
    sub[ny - 1] = -a * nu2 * top;
    diag[ny - 1] = 1.0 + a * nu2 * top;
    Tridiagonal::factor(&sub, &diag, &sup)
}

/// `D2 u` for the mean flow with the same closures as [`mean_matrix`].
pub(crate) fn mean_d2(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let ny = grid.ny;
    let mut out = vec![0.0; ny];
    for j in 1..ny - 1 {
        let (l, c, r) = d2_coeffs(grid, j);
        out[j] = l * u[j - 1] + c * u[j] + r * u[j + 1];
    }
    out[ny - 1] = -(u[ny - 1] - u[ny - 2]) / (grid.spacing[ny - 2] * grid.y_weights[ny - 1]);
    out
}

fn build_cache(it: &Integrator, dt: f64, nu1: f64, nu2: f64) -> StepCache {
    let grid = &it.grid;
    let (ny, nk) = (grid.ny, grid.nk());
    let a = 0.5 * dt;
    let mut modes = Vec::with_capacity(nk);
    let mut omega_h = Vec::with_capacity(nk);
    let mut psi_h = Vec::with_capacity(nk);
    for k in 0..nk - 1 {
        let m = mode_matrix(grid, (k * k) as f64, a, nu1, nu2);
        let mut wh = vec![0.0; ny];
        wh[0] = 1.0;
        m.solve_in_place(&mut wh);
        let mut ph: Vec<f64> = wh.iter().map(|w| -w).collect();
        ph[0] = 0.0;
        ph[ny - 1] = 0.0;
        it.dirichlet[k].solve_in_place(&mut ph);
        modes.push(m);
        omega_h.push(wh);
        psi_h.push(ph);
    }
    StepCache { key: key(dt, nu1, nu2), modes, omega_h, psi_h, mean: Some(mean_matrix(grid, a, nu2)) }
}

pub(super) fn update(
    it: &mut Integrator,
    s: &FlowState,
    dt: f64,
    nl: &[Complex64],
    mean_nl: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>, Vec<f64>) {
    let (nu1, nu2) = (s.nu1, s.nu2);
    if it.cache.as_ref().map(|c| c.key) != Some(key(dt, nu1, nu2)) {
        it.cache = Some(build_cache(it, dt, nu1, nu2));
    }
    let grid = it.grid.clone();
    let (ny, nk) = (grid.ny, grid.nk());
    let a = 0.5 * dt;
    let h0 = grid.spacing[0];
    let w_old = s.omega.spectral_view();

    let mut omega = vec![Complex64::default(); nk * ny];
    let mut psi = vec![Complex64::default(); nk * ny];
    let mut psi_p = vec![Complex64::default(); ny];
    for k in 1..nk - 1 {
        let k2 = (k * k) as f64;
        let wo = &w_old[k * ny..(k + 1) * ny];
        let n = &nl[k * ny..(k + 1) * ny];
        let col = &mut omega[k * ny..(k + 1) * ny];
        for j in 1..ny - 1 {
            let (l, c, r) = d2_coeffs(&grid, j);
            let lw = wo[j] * (-nu1 * k2) + (wo[j - 1] * l + wo[j] * c + wo[j + 1] * r) * nu2;
            col[j] = wo[j] + lw * a + n[j] * dt;
        }
        let cache = it.cache.as_ref().expect("cache built above");
        cache.modes[k].solve_in_place(col);
        it.invert_mode(k, col, &mut psi_p);
        let (wh, ph) = (&cache.omega_h[k], &cache.psi_h[k]);
        let wall = psi_p[1] * (-2.0 / (h0 * h0 + 2.0 * ph[1]));
        for j in 0..ny {
            col[j] += wall * wh[j];
            psi[k * ny + j] = psi_p[j] + wall * ph[j];
        }
        col[0] = wall;
        col[ny - 1] = Complex64::default();
    }

    let d2 = mean_d2(&grid, &s.mean_u);
    let mut mean_u: Vec<f64> = (0..ny).map(|j| s.mean_u[j] + a * nu2 * d2[j] + dt * mean_nl[j]).collect();
    mean_u[0] = 0.0;
    let cache = it.cache.as_ref().expect("cache built above");
    cache.mean.as_ref().expect("viscous cache has a mean operator").solve_in_place(&mut mean_u);
    let mean_w = grid.ddy(&mean_u).expect("mean profile has ny entries");
    for (c, m) in omega[..ny].iter_mut().zip(&mean_w) {
        *c = Complex64::new(-m, 0.0);
    }
    (omega, psi, mean_u)
}
