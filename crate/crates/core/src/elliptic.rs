//! Per-Fourier-mode elliptic problems in y.
//!
//! Every solve here is a tridiagonal system for `f'' - k^2 f = rhs` on the
//! stretched node set: three-point interior rows, Dirichlet rows or half-cell
//! flux rows for Neumann data. The half-cell Neumann rows make
//! `sum_j w_j (D2 f)_j` telescope to the flux difference, which is what the
//! `k = 0` Neumann-Neumann compatibility check uses.

use std::ops::{Div, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{
    dealias_in_place, dx_spectral, dy_spectral, forward, inverse, BcTag, FieldData, FlowState, Rep, ScalarField,
};
use crate::grid::{Grid, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndBc {
    Dirichlet(Complex64),
    Neumann(Complex64),
}

/// Boundary data for one mode: `end0` at `y = 0`, `end1` at `y = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBc {
    pub end0: EndBc,
    pub end1: EndBc,
}

impl ModeBc {
    pub const DIRICHLET_ZERO: ModeBc =
        ModeBc { end0: EndBc::Dirichlet(Complex64::new(0.0, 0.0)), end1: EndBc::Dirichlet(Complex64::new(0.0, 0.0)) };
    pub const NEUMANN_ZERO: ModeBc =
        ModeBc { end0: EndBc::Neumann(Complex64::new(0.0, 0.0)), end1: EndBc::Neumann(Complex64::new(0.0, 0.0)) };

    fn is_neumann_neumann(&self) -> bool {
        matches!((self.end0, self.end1), (EndBc::Neumann(_), EndBc::Neumann(_)))
    }
}

#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub values: Vec<Complex64>,
    /// `|int rhs dy - (g1 - g0)|` for the singular `k = 0` Neumann-Neumann case.
    pub compatibility_residual: Option<f64>,
}

/// Thomas factorization of a tridiagonal matrix with real coefficients.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    sub: Vec<f64>,
    sup_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    /// `sub[0]` and `sup[n-1]` are ignored.
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        let mut sup_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = diag[i] - if i > 0 { sub[i] * prev } else { 0.0 };
            inv_pivot[i] = 1.0 / pivot;
            prev = if i + 1 < n { sup[i] * inv_pivot[i] } else { 0.0 };
            sup_mod[i] = prev;
        }
        Self { sub: sub.to_vec(), sup_mod, inv_pivot }
    }

    pub fn solve_in_place<T>(&self, rhs: &mut [T])
    where
        T: Value + Sub<Output = T> + Mul<f64, Output = T> + Div<f64, Output = T>,
    {
        let n = rhs.len();
        rhs[0] = rhs[0] * self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - rhs[i - 1] * self.sub[i]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - rhs[i + 1] * self.sup_mod[i];
        }
    }
}

/// Interior three-point coefficients of `d2/dy2` at row `j`.
#[inline]
pub(crate) fn d2_coeffs(grid: &Grid, j: usize) -> (f64, f64, f64) {
    let (hm, hp) = (grid.spacing[j - 1], grid.spacing[j]);
    (2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp)))
}

/// Assembles the matrix of `f'' - k^2 f` with the given boundary kinds.
/// Neumann ends use half-cell flux rows; the caller adds the boundary data to the rhs.
fn helmholtz_matrix(grid: &Grid, k2: f64, bc: &ModeBc, pin_first: bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let ny = grid.ny;
    let mut sub = vec![0.0; ny];
    let mut diag = vec![0.0; ny];
    let mut sup = vec![0.0; ny];
    for j in 1..ny - 1 {
        let (a, b, c) = d2_coeffs(grid, j);
        sub[j] = a;
        diag[j] = b - k2;
        sup[j] = c;
    }
    let (h0, w0) = (grid.spacing[0], grid.y_weights[0]);
    match bc.end0 {
        _ if pin_first => diag[0] = 1.0,
        EndBc::Dirichlet(_) => diag[0] = 1.0,
        EndBc::Neumann(_) => {
            diag[0] = -1.0 / (h0 * w0) - k2;
            sup[0] = 1.0 / (h0 * w0);
        }
    }
    let (hn, wn) = (grid.spacing[ny - 2], grid.y_weights[ny - 1]);
    match bc.end1 {
        EndBc::Dirichlet(_) => diag[ny - 1] = 1.0,
        EndBc::Neumann(_) => {
            diag[ny - 1] = -1.0 / (hn * wn) - k2;
            sub[ny - 1] = 1.0 / (hn * wn);
        }
    }
    (sub, diag, sup)
}

/// Solves `f'' - k^2 f = rhs` for one mode.
pub fn solve_mode(k: i64, rhs: &[Complex64], bc: ModeBc, grid: &Grid) -> Result<ModeSolution> {
    let ny = grid.ny;
    if rhs.len() != ny {
        return Err(Error::LengthMismatch { expected: ny, got: rhs.len() });
    }
    let k2 = (k * k) as f64;
    let singular = k == 0 && bc.is_neumann_neumann();
    let mut b = rhs.to_vec();

    let mut residual = None;
    if singular {
        let (EndBc::Neumann(g0), EndBc::Neumann(g1)) = (bc.end0, bc.end1) else { unreachable!() };
        let integral: Complex64 = b.iter().zip(&grid.y_weights).map(|(r, w)| r * w).sum();
        let mismatch = integral - (g1 - g0);
        residual = Some(mismatch.norm());
        // project out the incompatible part (sum of weights is 1)
        for r in b.iter_mut() {
            *r -= mismatch;
        }
    }

    match bc.end0 {
        EndBc::Dirichlet(v) => b[0] = v,
        EndBc::Neumann(g) => b[0] += g / grid.y_weights[0],
    }
    match bc.end1 {
        EndBc::Dirichlet(v) => b[ny - 1] = v,
        EndBc::Neumann(g) => b[ny - 1] -= g / grid.y_weights[ny - 1],
    }
    if singular {
        b[0] = Complex64::default();
    }

    let (sub, diag, sup) = helmholtz_matrix(grid, k2, &bc, singular);
    Tridiagonal::factor(&sub, &diag, &sup).solve_in_place(&mut b);

    if singular {
        let mean: Complex64 = b.iter().zip(&grid.y_weights).map(|(f, w)| f * w).sum();
        for f in b.iter_mut() {
            *f -= mean;
        }
    }
    Ok(ModeSolution { values: b, compatibility_residual: residual })
}

/// Factored Dirichlet-zero Helmholtz operator for mode `k`, reused by the steppers.
pub(crate) fn dirichlet_factor(grid: &Grid, k: usize) -> Tridiagonal {
    let (sub, diag, sup) = helmholtz_matrix(grid, (k * k) as f64, &ModeBc::DIRICHLET_ZERO, false);
    Tridiagonal::factor(&sub, &diag, &sup)
}

/// Inverts `omega = -Laplacian(psi)` mode by mode with `psi = 0` on both walls.
///
/// Both regimes use the same streamline values; the no-slip condition of the
/// viscous system is imposed through the wall vorticity in the stepper.
pub fn streamfunction_from_vorticity(omega: &ScalarField, grid: &Arc<Grid>) -> Result<ScalarField> {
    let w = omega.spectral()?;
    let ny = grid.ny;
    let mut psi = vec![Complex64::default(); grid.nk() * ny];
    for k in 1..grid.nk() - 1 {
        let col = &mut psi[k * ny..(k + 1) * ny];
        for (c, o) in col.iter_mut().zip(&w[k * ny..(k + 1) * ny]) {
            *c = -*o;
        }
        col[0] = Complex64::default();
        col[ny - 1] = Complex64::default();
        dirichlet_factor(grid, k).solve_in_place(col);
    }
    Ok(ScalarField { grid: grid.clone(), data: FieldData::XSpectral(psi), bc: BcTag::BothWallsZero })
}

/// Solution of the flow-pressure Poisson problem.
#[derive(Debug, Clone)]
pub struct FlowPressure {
    pub p: ScalarField,
    pub compatibility_residual: f64,
}

/// Solves `Laplacian(p) = rhs` with `p_y = 0` on both walls and zero mean,
/// for a mode-major spectral right-hand side.
pub fn solve_pressure_poisson(rhs: &[Complex64], grid: &Arc<Grid>) -> Result<FlowPressure> {
    let ny = grid.ny;
    if rhs.len() != grid.nk() * ny {
        return Err(Error::LengthMismatch { expected: grid.nk() * ny, got: rhs.len() });
    }
    let mut p = vec![Complex64::default(); grid.nk() * ny];
    let mut residual = 0.0;
    for k in 0..grid.nk() - 1 {
        let sol = solve_mode(k as i64, &rhs[k * ny..(k + 1) * ny], ModeBc::NEUMANN_ZERO, grid)?;
        if let Some(r) = sol.compatibility_residual {
            residual = r;
        }
        p[k * ny..(k + 1) * ny].copy_from_slice(&sol.values);
    }
    Ok(FlowPressure {
        p: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(p), bc: BcTag::None },
        compatibility_residual: residual,
    })
}

/// Right-hand side `-2 (u u_x)_x - 2 (u v_x)_y` with dealiased products.
pub fn flow_pressure_rhs(u: &ScalarField, v: &ScalarField, grid: &Arc<Grid>) -> Result<Vec<Complex64>> {
    let mut uh = u.spectral_view().into_owned();
    let mut vh = v.spectral_view().into_owned();
    dealias_in_place(grid, &mut uh);
    dealias_in_place(grid, &mut vh);
    let ux = inverse(grid, &dx_spectral(grid, &uh));
    let vx = inverse(grid, &dx_spectral(grid, &vh));
    let up = inverse(grid, &uh);
    let uux: Vec<f64> = up.iter().zip(&ux).map(|(a, b)| a * b).collect();
    let uvx: Vec<f64> = up.iter().zip(&vx).map(|(a, b)| a * b).collect();
    let mut a = forward(grid, &uux);
    let mut b = forward(grid, &uvx);
    dealias_in_place(grid, &mut a);
    dealias_in_place(grid, &mut b);
    let ax = dx_spectral(grid, &a);
    let by = dy_spectral(grid, &b);
    Ok(ax.iter().zip(&by).map(|(x, y)| (x + y) * -2.0).collect())
}

pub fn solve_flow_pressure(u: &ScalarField, v: &ScalarField, grid: &Arc<Grid>) -> Result<FlowPressure> {
    u.physical()?;
    v.physical()?;
    let rhs = flow_pressure_rhs(u, v, grid)?;
    solve_pressure_poisson(&rhs, grid)
}

/// `cosh(k (1 - y)) / sinh(k)` for `k > 0`, using only non-positive exponents.
#[inline]
pub fn layer_profile(k: f64, y: f64) -> f64 {
    ((-k * y).exp() + (-k * (2.0 - y)).exp()) / (1.0 - (-2.0 * k).exp())
}

/// `-sinh(k (1 - y)) k / sinh(k)`, the y-derivative of [`layer_profile`].
#[inline]
pub fn layer_profile_dy(k: f64, y: f64) -> f64 {
    -k * ((-k * y).exp() - (-k * (2.0 - y)).exp()) / (1.0 - (-2.0 * k).exp())
}

fn check_wall_data(uy_wall_hat: &[Complex64], grid: &Grid, nu2: f64) -> Result<()> {
    if uy_wall_hat.len() != grid.nk() {
        return Err(Error::LengthMismatch { expected: grid.nk(), got: uy_wall_hat.len() });
    }
    if !(nu2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("nu2 must be >= 0, got {nu2}")));
    }
    Ok(())
}

/// Boundary-layer pressure from the closed form
/// `qhat_k(y) = i nu2 sign(k) uhat_k_y(0) cosh(|k|(1-y)) / sinh(|k|)`.
///
/// `uy_wall_hat[k]` is the wall shear of mode `k >= 0`; the `k = 0` entry is ignored.
pub fn boundary_layer_pressure_exact(uy_wall_hat: &[Complex64], nu2: f64, grid: &Arc<Grid>) -> Result<ScalarField> {
    check_wall_data(uy_wall_hat, grid, nu2)?;
    let ny = grid.ny;
    let mut q = vec![Complex64::default(); grid.nk() * ny];
    for k in 1..grid.nk() - 1 {
        let amp = Complex64::new(0.0, nu2) * uy_wall_hat[k];
        for (j, &y) in grid.y_nodes.iter().enumerate() {
            q[k * ny + j] = amp * layer_profile(k as f64, y);
        }
    }
    Ok(ScalarField { grid: grid.clone(), data: FieldData::XSpectral(q), bc: BcTag::None })
}

/// Boundary-layer pressure by direct solve of `qhat'' - k^2 qhat = 0` with
/// `qhat'(0) = -i nu2 k uhat_k_y(0)` and `qhat'(1) = 0`.
pub fn boundary_layer_pressure_bvp(uy_wall_hat: &[Complex64], nu2: f64, grid: &Arc<Grid>) -> Result<ScalarField> {
    check_wall_data(uy_wall_hat, grid, nu2)?;
    let ny = grid.ny;
    let zero = vec![Complex64::default(); ny];
    let mut q = vec![Complex64::default(); grid.nk() * ny];
    for k in 1..grid.nk() - 1 {
        let flux = Complex64::new(0.0, -nu2 * k as f64) * uy_wall_hat[k];
        let bc = ModeBc { end0: EndBc::Neumann(flux), end1: EndBc::Neumann(Complex64::default()) };
        let sol = solve_mode(k as i64, &zero, bc, grid)?;
        q[k * ny..(k + 1) * ny].copy_from_slice(&sol.values);
    }
    Ok(ScalarField { grid: grid.clone(), data: FieldData::XSpectral(q), bc: BcTag::None })
}

/// `||grad q||_2^2` of the closed-form boundary-layer pressure, integrated exactly in y:
/// `2 pi nu2^2 sum_{k != 0} |uhat_k_y(0)|^2 |k| coth|k|`.
pub fn grad_q_l2_squared(uy_wall_hat: &[Complex64], nu2: f64, grid: &Grid) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let s: f64 = (1..grid.nk() - 1)
        .map(|k| {
            let kf = k as f64;
            let e = (-2.0 * kf).exp();
            2.0 * uy_wall_hat[k].norm_sqr() * kf * (1.0 + e) / (1.0 - e)
        })
        .sum();
    two_pi * nu2 * nu2 * s
}

/// Wall shear `uhat_k_y(0)` per mode from the one-sided `ddy` stencil applied to `u`.
pub fn wall_shear_hat(s: &FlowState) -> Vec<Complex64> {
    let grid = s.grid();
    let ny = grid.ny;
    let psi = s.psi.spectral_view();
    let mut out = vec![Complex64::default(); grid.nk()];
    let mut u = vec![Complex64::default(); ny];
    for (k, o) in out.iter_mut().enumerate() {
        grid.ddy_into(&psi[k * ny..(k + 1) * ny], &mut u);
        if k == 0 {
            for (c, m) in u.iter_mut().zip(&s.mean_u) {
                *c = Complex64::new(*m, 0.0);
            }
        }
        *o = grid.ddy_at(&u, 0);
    }
    out
}

/// Wall shear from the wall vorticity, `u_y(x, 0) = -omega(x, 0)` (since `v_x = 0` on the wall).
pub fn wall_shear_hat_from_vorticity(s: &FlowState) -> Vec<Complex64> {
    let grid = s.grid();
    let ny = grid.ny;
    let w = s.omega.spectral_view();
    (0..grid.nk()).map(|k| -w[k * ny]).collect()
}

#[derive(Debug, Clone)]
pub struct PressurePair {
    pub p: ScalarField,
    pub q: ScalarField,
}

/// Recovers `p` (flow pressure) and `q` (boundary-layer pressure) from a state.
/// In the limit regime `q` is identically zero.
pub fn recover_pressures(s: &FlowState) -> Result<PressurePair> {
    let grid = s.grid();
    let (u, v) = crate::field::velocity_from_state(s);
    let p = solve_flow_pressure(&u, &v, grid)?.p;
    let q = match s.regime {
        crate::field::Regime::Viscous => boundary_layer_pressure_exact(&wall_shear_hat(s), s.nu2, grid)?,
        crate::field::Regime::Limit => ScalarField::zeros(grid, Rep::XSpectral),
    };
    Ok(PressurePair { p, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn max_abs_diff(a: &[Complex64], b: impl Fn(usize) -> Complex64) -> f64 {
        a.iter().enumerate().map(|(j, v)| (v - b(j)).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dirichlet_sine_mode_second_order() {
        let err = |ny: usize| {
            let g = Grid::new(8, ny, 0.85).unwrap();
            let rhs: Vec<Complex64> =
                g.y_nodes.iter().map(|y| Complex64::new(-(PI * PI + 1.0) * (PI * y).sin(), 0.0)).collect();
            let sol = solve_mode(1, &rhs, ModeBc::DIRICHLET_ZERO, &g).unwrap();
            assert!(sol.compatibility_residual.is_none());
            max_abs_diff(&sol.values, |j| Complex64::new((PI * g.y_nodes[j]).sin(), 0.0))
        };
        let order = (err(49) / err(97)).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn neumann_neumann_zero_mode_pins_nullspace() {
        let g = Grid::new(8, 20, 0.5).unwrap();
        let sol = solve_mode(0, &vec![Complex64::default(); 20], ModeBc::NEUMANN_ZERO, &g).unwrap();
        assert!(sol.values.iter().all(|v| v.norm() < 1e-14));
        assert_abs_diff_eq!(sol.compatibility_residual.unwrap(), 0.0);
    }

    #[test]
    fn neumann_neumann_reports_incompatibility() {
        let g = Grid::new(8, 40, 0.5).unwrap();
        let rhs = vec![Complex64::new(1.0, 0.0); 40];
        let sol = solve_mode(0, &rhs, ModeBc::NEUMANN_ZERO, &g).unwrap();
        assert_abs_diff_eq!(sol.compatibility_residual.unwrap(), 1.0, epsilon = 1e-13);
        let mean: Complex64 = sol.values.iter().zip(&g.y_weights).map(|(f, w)| f * w).sum();
        assert!(mean.norm() < 1e-14);
    }

    #[test]
    fn helmholtz_neumann_closed_form() {
        let err = |ny: usize| {
            let g = Grid::new(8, ny, 0.85).unwrap();
            let bc =
                ModeBc { end0: EndBc::Neumann(Complex64::new(1.0, 0.0)), end1: EndBc::Neumann(Complex64::default()) };
            let sol = solve_mode(2, &vec![Complex64::default(); ny], bc, &g).unwrap();
            max_abs_diff(&sol.values, |j| {
                Complex64::new(-(2.0 * (1.0 - g.y_nodes[j])).cosh() / (2.0 * 2f64.sinh()), 0.0)
            })
        };
        let order = (err(65) / err(129)).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn interior_residual_at_round_off() {
        let g = Grid::new(8, 64, 0.9).unwrap();
        let rhs: Vec<Complex64> = g.y_nodes.iter().map(|y| Complex64::new(y.exp(), (3.0 * y).cos())).collect();
        let bcs = [
            ModeBc::DIRICHLET_ZERO,
            ModeBc::NEUMANN_ZERO,
            ModeBc {
                end0: EndBc::Dirichlet(Complex64::new(1.0, -1.0)),
                end1: EndBc::Neumann(Complex64::new(0.5, 0.0)),
            },
        ];
        for bc in bcs {
            for k in [1i64, 3, 17] {
                let f = solve_mode(k, &rhs, bc, &g).unwrap().values;
                let d2 = g.d2y(&f).unwrap();
                for j in 1..g.ny - 1 {
                    let (a, b, c) = d2_coeffs(&g, j);
                    let scale = (a.abs() + b.abs() + c.abs() + (k * k) as f64)
                        * f[j - 1].norm().max(f[j].norm()).max(f[j + 1].norm())
                        + rhs[j].norm();
                    let r = d2[j] - f[j] * (k * k) as f64 - rhs[j];
                    assert!(r.norm() <= 10.0 * f64::EPSILON * scale * 4.0, "k {k} j {j} r {}", r.norm());
                }
            }
        }
    }

    #[test]
    fn streamfunction_inverse_examples() {
        let g = build_grid(8, 97, 0.85).unwrap();
        let zero = ScalarField::zeros(&g, Rep::XSpectral);
        let psi = streamfunction_from_vorticity(&zero, &g).unwrap();
        assert!(psi.spectral().unwrap().iter().all(|c| c.norm() == 0.0));

        let mut w = vec![Complex64::default(); g.nk() * g.ny];
        for (j, &y) in g.y_nodes.iter().enumerate() {
            w[g.ny + j] = Complex64::new((PI * PI + 1.0) * (PI * y).sin(), 0.0);
        }
        let omega = ScalarField::from_spectral(&g, w).unwrap();
        let psi = streamfunction_from_vorticity(&omega, &g).unwrap();
        let e = max_abs_diff(psi.mode(1).unwrap(), |j| Complex64::new((PI * g.y_nodes[j]).sin(), 0.0));
        assert!(e < 2e-3, "err {e}");
        assert!(psi.mode(0).unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn closed_form_q_values() {
        let g = build_grid(16, 65, 0.85).unwrap();
        let mut wall = vec![Complex64::default(); g.nk()];
        wall[1] = Complex64::new(1.0, 0.0);
        let q = boundary_layer_pressure_exact(&wall, 1e-3, &g).unwrap();
        let q0 = q.mode(1).unwrap()[0];
        assert_abs_diff_eq!(q0.re, 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(q0.im, 1e-3 / 1f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(q0.im, 1.31304e-3, epsilon = 1e-8);

        let zero = boundary_layer_pressure_exact(&wall, 0.0, &g).unwrap();
        assert!(zero.spectral().unwrap().iter().all(|c| c.norm() == 0.0));
        let none = boundary_layer_pressure_bvp(&vec![Complex64::default(); g.nk()], 1e-2, &g).unwrap();
        assert!(none.spectral().unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn stable_form_matches_original_expression() {
        // original expression (e^{ky-2k} + e^{-ky}) / (1 - e^{-2k}) for both signs of k,
        // against i*sign(k)*cosh(|k|(1-y))/sinh(|k|) scaled by i
        for k in [-7i64, -2, -1, 1, 3, 9] {
            for y in [0.0, 0.1, 0.5, 1.0] {
                let kf = k as f64;
                let original = ((kf * y - 2.0 * kf).exp() + (-kf * y).exp()) / (1.0 - (-2.0 * kf).exp());
                let stable = kf.signum() * layer_profile(kf.abs(), y);
                assert_abs_diff_eq!(original, stable, epsilon = 1e-12 * original.abs().max(1.0));
            }
        }
    }

    #[test]
    fn closed_form_top_wall_flux_vanishes_at_least_at_order_two() {
        let flux = |ny: usize| {
            let g = build_grid(16, ny, 0.85).unwrap();
            let mut wall = vec![Complex64::default(); g.nk()];
            wall[3] = Complex64::new(0.3, 0.7);
            let q = boundary_layer_pressure_exact(&wall, 1.0, &g).unwrap();
            let d = g.ddy(q.mode(3).unwrap()).unwrap();
            d[g.ny - 1].norm()
        };
        // the one-sided stencil is exact on the even part of cosh about y = 1, so this converges faster
        let order = (flux(65) / flux(129)).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn exact_and_bvp_agree_at_order_two() {
        let disc = |ny: usize| {
            let g = build_grid(16, ny, 0.85).unwrap();
            let wall: Vec<Complex64> = (0..g.nk()).map(|k| Complex64::new(1.0, 0.5 * k as f64)).collect();
            let a = boundary_layer_pressure_exact(&wall, 1e-3, &g).unwrap();
            let b = boundary_layer_pressure_bvp(&wall, 1e-3, &g).unwrap();
            (1..=g.nx / 3)
                .map(|k| {
                    let (ma, mb) = (a.mode(k).unwrap(), b.mode(k).unwrap());
                    let scale = ma.iter().map(|c| c.norm()).fold(0.0, f64::max);
                    ma.iter().zip(mb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
                })
                .fold(0.0, f64::max)
        };
        let order = (disc(97) / disc(193)).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn bvp_mode_three_bound() {
        let g = build_grid(16, 385, 0.85).unwrap();
        let mut wall = vec![Complex64::default(); g.nk()];
        wall[3] = Complex64::new(1.0, 0.0);
        let q = boundary_layer_pressure_bvp(&wall, 1.0, &g).unwrap();
        let max = q.mode(3).unwrap().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let c = 3f64.cosh() / 3f64.sinh();
        assert_abs_diff_eq!(c, 1.00496, epsilon = 1e-5);
        assert!(max <= c * (1.0 + 1e-4), "max {max}");
        assert!(max >= c * (1.0 - 1e-3));
    }

    #[test]
    fn analytic_grad_q_matches_quadrature() {
        let g = build_grid(16, 769, 0.85).unwrap();
        let wall: Vec<Complex64> = (0..g.nk()).map(|k| Complex64::new(1.0 / (1.0 + k as f64), 0.2)).collect();
        let nu2 = 1e-3;
        let q = boundary_layer_pressure_exact(&wall, nu2, &g).unwrap();
        let qx = dx_spectral(&g, q.spectral().unwrap());
        let qy = dy_spectral(&g, q.spectral().unwrap());
        let quad = crate::field::parseval_l2_squared(&g, &qx) + crate::field::parseval_l2_squared(&g, &qy);
        let exact = grad_q_l2_squared(&wall, nu2, &g);
        assert!((quad - exact).abs() < 1e-3 * exact, "{quad} vs {exact}");
    }

    #[test]
    fn pressure_poisson_zero_input() {
        let g = build_grid(16, 32, 0.5).unwrap();
        let zero = ScalarField::zeros(&g, Rep::Physical);
        let p = solve_flow_pressure(&zero, &zero, &g).unwrap();
        assert!(p.p.spectral().unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn tridiagonal_solves_real_system() {
        let t = Tridiagonal::factor(&[0.0, 1.0, 1.0], &[4.0, 4.0, 4.0], &[1.0, 1.0, 0.0]);
        let mut b = vec![5.0, 6.0, 5.0];
        t.solve_in_place(&mut b);
        for v in b {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
    }
}
