//! Implicit part of the limit step: every row, walls included, evolves by
//! `w_t = N - nu1 k^2 w`, so Crank-Nicolson reduces to a diagonal update.

use num_complex::Complex64;

use super::Integrator;
use crate::field::FlowState;

pub(super) fn update(
    it: &mut Integrator,
    s: &FlowState,
    dt: f64,
    nl: &[Complex64],
    mean_nl: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>, Vec<f64>) {
    let grid = it.grid.clone();
    let (ny, nk) = (grid.ny, grid.nk());
    let w_old = s.omega.spectral_view();
    let mut omega = vec![Complex64::default(); nk * ny];
    let mut psi = vec![Complex64::default(); nk * ny];
    omega[..ny].copy_from_slice(&w_old[..ny]);
    for k in 1..nk - 1 {
        let d = 0.5 * dt * s.nu1 * (k * k) as f64;
        let (keep, inv) = (1.0 - d, 1.0 / (1.0 + d));
        for j in 0..ny {
            let idx = k * ny + j;
            omega[idx] = (w_old[idx] * keep + nl[idx] * dt) * inv;
        }
        let (w, p) = (&omega[k * ny..(k + 1) * ny], &mut psi[k * ny..(k + 1) * ny]);
        it.invert_mode(k, w, p);
    }
    let mean_u: Vec<f64> = s.mean_u.iter().zip(mean_nl).map(|(u, m)| u + dt * m).collect();
    let mean_w = grid.ddy(&mean_u).expect("mean profile has ny entries");
    for (c, m) in omega[..ny].iter_mut().zip(&mean_w) {
        *c = Complex64::new(-m, 0.0);
    }
    (omega, psi, mean_u)
}
