//! Norm time series, the discrete energy budget, and audits of the
//! inequalities the analysis relies on.
//!
//! The energy and dissipation reported here are the exact quadratic forms the
//! stepper dissipates, so `E(t) + 2 nu1 int D_h + 2 nu2 int D_v - E(0)` is a
//! pure time-discretization residual.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{d2_coeffs, grad_q_l2_squared, solve_flow_pressure, wall_shear_hat};
use crate::error::{Error, Result};
use crate::field::{
    dx_spectral, dy_spectral, forward, inverse, linf_of, lp_of, mode_weight, parseval_l2_squared, velocity_from_state,
    velocity_spectral, FieldData, FlowState, Regime, ScalarField,
};
use crate::grid::Grid;

const TWO_PI: f64 = 2.0 * PI;

/// Discrete kinetic energy and the two dissipation rates of a state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    pub energy: f64,
    pub diss_h: f64,
    pub diss_v: f64,
}

/// `sum_e |f_{e+1} - f_e|^2 / h_e`.
fn edge_norm_sqr<T: Copy>(grid: &Grid, col: &[T], norm: impl Fn(T, T) -> f64) -> f64 {
    col.windows(2).zip(&grid.spacing).map(|(p, h)| norm(p[1], p[0]) / h).sum()
}

pub fn discrete_energy(s: &FlowState) -> EnergyParts {
    let grid = s.grid();
    let ny = grid.ny;
    let psi = s.psi.spectral_view();
    let w = &grid.y_weights;
    let diff = |a: Complex64, b: Complex64| (a - b).norm_sqr();
    let h0 = grid.spacing[0];
    let mut parts = EnergyParts::default();
    for k in 1..grid.nk() - 1 {
        let col = &psi[k * ny..(k + 1) * ny];
        let k2 = (k * k) as f64;
        let l2: f64 = col.iter().zip(w).map(|(c, w)| c.norm_sqr() * w).sum();
        let grad = edge_norm_sqr(grid, col, diff);
        let e_k = k2 * l2 + grad;
        let mut d2: f64 = (1..ny - 1)
            .map(|j| {
                let (a, b, c) = d2_coeffs(grid, j);
                w[j] * (col[j - 1] * a + col[j] * b + col[j + 1] * c).norm_sqr()
            })
            .sum();
        d2 += match s.regime {
            // Thom's closure value of psi_yy at the no-slip wall; omega = 0 at the free-slip wall
            Regime::Viscous => w[0] * (col[1] * (2.0 / (h0 * h0))).norm_sqr(),
            Regime::Limit => w[0] * grid.d2y_at(col, 0).norm_sqr() + w[ny - 1] * grid.d2y_at(col, ny - 1).norm_sqr(),
        };
        let c = mode_weight(grid, k);
        parts.energy += c * e_k;
        parts.diss_h += c * k2 * e_k;
        parts.diss_v += c * (k2 * grad + d2);
    }
    parts.energy += s.mean_u.iter().zip(w).map(|(u, w)| u * u * w).sum::<f64>();
    parts.diss_v += edge_norm_sqr(grid, &s.mean_u, |a: f64, b: f64| (a - b).powi(2));
    parts.energy *= TWO_PI;
    parts.diss_h *= TWO_PI;
    parts.diss_v *= TWO_PI;
    parts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub diss_h: f64,
    pub diss_v: f64,
    /// `(p, ||u||_p, ||v||_p)` for `p = 2, 4, 6, 8`.
    pub lp_norms: Vec<(f64, f64, f64)>,
    pub linf_u: f64,
    pub vx_l2: f64,
    pub grad_p_l2: f64,
    pub grad_q_l2: f64,
    pub uyy_l2: f64,
    pub uyx_l2: f64,
    pub budget_residual: f64,
}

pub const LP_EXPONENTS: [f64; 4] = [2.0, 4.0, 6.0, 8.0];

impl DiagnosticsRecord {
    pub fn lp(&self, p: f64) -> Option<(f64, f64)> {
        self.lp_norms.iter().find(|(q, _, _)| *q == p).map(|(_, u, v)| (*u, *v))
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.energy, self.diss_h, self.diss_v, self.linf_u, self.vx_l2, self.grad_p_l2]
            .iter()
            .chain(&[self.grad_q_l2, self.uyy_l2, self.uyx_l2, self.budget_residual])
            .all(|v| v.is_finite())
            && self.lp_norms.iter().all(|(_, u, v)| u.is_finite() && v.is_finite())
    }
}

/// `2 pi sum_k c_k sum_j w_j |f_kj|^2` with the mode factor applied.
fn modal_l2_sqr(grid: &Grid, spec: &[Complex64], factor: impl Fn(usize) -> f64) -> f64 {
    let ny = grid.ny;
    (0..grid.nk())
        .map(|k| {
            let col = &spec[k * ny..(k + 1) * ny];
            let s: f64 = col.iter().zip(&grid.y_weights).map(|(c, w)| c.norm_sqr() * w).sum();
            mode_weight(grid, k) * factor(k) * s
        })
        .sum::<f64>()
        * TWO_PI
}

fn gradient_l2_sqr(grid: &Grid, spec: &[Complex64]) -> f64 {
    let dy = dy_spectral(grid, spec);
    modal_l2_sqr(grid, spec, |k| (k * k) as f64) + modal_l2_sqr(grid, &dy, |_| 1.0)
}

/// All diagnostics of one state. `budget_residual` is left at zero; the driver fills it in.
pub fn record(s: &FlowState) -> Result<DiagnosticsRecord> {
    let grid = s.grid();
    let parts = discrete_energy(s);
    let (u, v) = velocity_from_state(s);
    let (up, vp) = (u.physical()?, v.physical()?);
    let lp_norms = LP_EXPONENTS.iter().map(|&p| (p, lp_of(grid, up, p), lp_of(grid, vp, p))).collect();

    let (uh, _) = velocity_spectral(s);
    let uy = dy_spectral(grid, &uh);
    let uyy = crate::field::d2y_spectral(grid, &uh);
    let psi = s.psi.spectral_view();
    let vx_l2 = modal_l2_sqr(grid, &psi, |k| (k as f64).powi(4)).sqrt();
    let uyx_l2 = modal_l2_sqr(grid, &uy, |k| (k * k) as f64).sqrt();
    let uyy_l2 = modal_l2_sqr(grid, &uyy, |_| 1.0).sqrt();

    let p = solve_flow_pressure(&u, &v, grid)?.p;
    let grad_p_l2 = gradient_l2_sqr(grid, p.spectral()?).sqrt();
    let grad_q_l2 = match s.regime {
        Regime::Viscous => grad_q_l2_squared(&wall_shear_hat(s), s.nu2, grid).sqrt(),
        Regime::Limit => 0.0,
    };
    Ok(DiagnosticsRecord {
        t: s.t,
        energy: parts.energy,
        diss_h: parts.diss_h,
        diss_v: parts.diss_v,
        lp_norms,
        linf_u: linf_of(up),
        vx_l2,
        grad_p_l2,
        grad_q_l2,
        uyy_l2,
        uyx_l2,
        budget_residual: 0.0,
    })
}

/// Relative residual of the energy identity over a record series, with the
/// dissipation integrated by the trapezoid rule over the record times.
pub fn energy_budget(series: &[DiagnosticsRecord], nu1: f64, nu2: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument("energy_budget needs at least two records".into()));
    }
    let mut integral = 0.0;
    for w in series.windows(2) {
        let dt = w[1].t - w[0].t;
        let rate = |r: &DiagnosticsRecord| 2.0 * nu1 * r.diss_h + 2.0 * nu2 * r.diss_v;
        integral += 0.5 * dt * (rate(&w[0]) + rate(&w[1]));
    }
    let e0 = series[0].energy;
    let last = series.last().expect("len >= 2").energy;
    let gap = (last + integral - e0).abs();
    Ok(if e0 > 0.0 { gap / e0 } else { gap })
}

fn same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.grid.nx != b.grid.nx || a.grid.ny != b.grid.ny || a.grid.y_nodes != b.grid.y_nodes {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    Ok(())
}

/// `int |f g h|` divided by the right-hand side of the triple-product
/// estimate with the constant omitted. Zero fields give 0.
pub fn audit_triple_product(f: &ScalarField, g: &ScalarField, h: &ScalarField, m: f64) -> Result<f64> {
    if !(m >= 1.0) {
        return Err(Error::InvalidArgument(format!("triple-product exponent needs m >= 1, got {m}")));
    }
    same_grid(f, g)?;
    same_grid(f, h)?;
    let grid = &f.grid;
    let (fp, gp, hp) = (f.physical()?, g.physical()?, h.physical()?);
    let nx = grid.nx;
    let mut lhs = 0.0;
    for (j, w) in grid.y_weights.iter().enumerate() {
        let row: f64 = (j * nx..(j + 1) * nx).map(|i| (fp[i] * gp[i] * hp[i]).abs()).sum();
        lhs += w * row;
    }
    lhs *= grid.dx();

    let gs = forward(grid, gp);
    let hs = forward(grid, hp);
    let g_y = parseval_l2_squared(grid, &dy_spectral(grid, &gs)).sqrt();
    let h_x = parseval_l2_squared(grid, &dx_spectral(grid, &hs)).sqrt();
    let (f2, g2, h2) = (lp_of(grid, fp, 2.0), lp_of(grid, gp, 2.0), lp_of(grid, hp, 2.0));
    let h2m = lp_of(grid, hp, 2.0 * m);
    let (a, b) = (m / (m + 1.0), 1.0 / (m + 1.0));
    let rhs = f2 * g2.powf(a) * (g2 + g_y).powf(b) * h2m.powf(a) * (h2 + h_x).powf(b);
    if rhs > 0.0 {
        Ok(lhs / rhs)
    } else if lhs == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::InvalidArgument("triple-product bound vanishes for a nonzero integrand".into()))
    }
}

/// `||grad q||^2 / (nu2^2 ||u_yy|| ||u_yx||)` for a viscous state; 0/0 gives 0.
pub fn audit_grad_q(s: &FlowState) -> Result<f64> {
    audit_grad_q_with(s, s.nu2)
}

/// [`audit_grad_q`] with the viscosity inside the boundary-layer pressure replaced by `nu2`.
pub fn audit_grad_q_with(s: &FlowState, nu2: f64) -> Result<f64> {
    if s.regime != Regime::Viscous {
        return Err(Error::InvalidArgument("grad-q audit needs a viscous-regime state".into()));
    }
    let grid = s.grid();
    let num = grad_q_l2_squared(&wall_shear_hat(s), nu2, grid);
    let (uh, _) = velocity_spectral(s);
    let uy = dy_spectral(grid, &uh);
    let uyy = crate::field::d2y_spectral(grid, &uh);
    let den = nu2 * nu2 * modal_l2_sqr(grid, &uyy, |_| 1.0).sqrt() * modal_l2_sqr(grid, &uy, |k| (k * k) as f64).sqrt();
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

#[derive(Debug, Clone)]
pub struct FrequencySplit {
    pub p_low: ScalarField,
    pub p_high: ScalarField,
    /// `||p_low||_inf^2 / (log R ||grad p||^2)`.
    pub low_ratio: f64,
    /// `R ||p_high||_2 / ||grad p||_2`.
    pub high_ratio: f64,
}

/// Splits `p` into the part spanned by `exp(i k x) cos(n pi y)` with
/// `sqrt(k^2 + (n pi)^2) <= R` and the remainder.
///
/// The cosine coefficients are weighted least-squares projections with the
/// trapezoid weights, so `p_low` is the best low-band approximation in the
/// discrete `L^2` norm.
pub fn pressure_frequency_split(p: &ScalarField, r: f64) -> Result<FrequencySplit> {
    if !(r > 1.0) {
        return Err(Error::InvalidArgument(format!("frequency split needs R > 1, got {r}")));
    }
    let grid = &p.grid;
    let (ny, nk) = (grid.ny, grid.nk());
    let ps = p.spectral_view();
    let sqrt_w: Vec<f64> = grid.y_weights.iter().map(|w| w.sqrt()).collect();
    let mut low = vec![Complex64::default(); nk * ny];
    for k in 0..nk - 1 {
        let kf = k as f64;
        if kf > r {
            break;
        }
        let n_max = (((r * r - kf * kf).sqrt() / PI).floor() as usize).min(ny / 2);
        let basis = DMatrix::from_fn(ny, n_max + 1, |j, n| (n as f64 * PI * grid.y_nodes[j]).cos());
        let weighted = DMatrix::from_fn(ny, n_max + 1, |j, n| basis[(j, n)] * sqrt_w[j]);
        let svd = weighted.svd(true, true);
        let col = &ps[k * ny..(k + 1) * ny];
        let project = |part: &dyn Fn(Complex64) -> f64| -> Result<DVector<f64>> {
            let b = DVector::from_fn(ny, |j, _| part(col[j]) * sqrt_w[j]);
            let c = svd.solve(&b, 1e-12).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(&basis * c)
        };
        let re = project(&|c: Complex64| c.re)?;
        let im = project(&|c: Complex64| c.im)?;
        for j in 0..ny {
            low[k * ny + j] = Complex64::new(re[j], im[j]);
        }
    }
    let high: Vec<Complex64> = ps.iter().zip(&low).map(|(a, b)| a - b).collect();
    let grad = gradient_l2_sqr(grid, &ps);
    let low_inf = linf_of(&inverse(grid, &low));
    let high_l2 = parseval_l2_squared(grid, &high).sqrt();
    let (low_ratio, high_ratio) =
        if grad > 0.0 { (low_inf * low_inf / (r.ln() * grad), r * high_l2 / grad.sqrt()) } else { (0.0, 0.0) };
    Ok(FrequencySplit {
        p_low: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(low), bc: p.bc },
        p_high: ScalarField { grid: grid.clone(), data: FieldData::XSpectral(high), bc: p.bc },
        low_ratio,
        high_ratio,
    })
}

/// Wall traces of `u` and `u_y` in `L^2(-pi, pi)` and the two trace-inequality ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallTraces {
    pub u_bottom: f64,
    pub uy_bottom: f64,
    pub u_top: f64,
    pub uy_top: f64,
    /// `max_x |u(x, 0)|`.
    pub u_bottom_max: f64,
    /// `int u(x,1)^2 dx / (2 ||u|| ||u_y||)`.
    pub top_ratio: f64,
    /// `int u_y(x,0)^2 dx / (2 ||u_y|| ||u_yy||)`.
    pub bottom_ratio: f64,
}

pub fn wall_traces(s: &FlowState) -> WallTraces {
    let grid = s.grid();
    let (ny, nk) = (grid.ny, grid.nk());
    let (uh, _) = velocity_spectral(s);
    let uy = dy_spectral(grid, &uh);
    let uyy = crate::field::d2y_spectral(grid, &uh);
    let trace = |f: &[Complex64], j: usize| -> f64 {
        (0..nk).map(|k| mode_weight(grid, k) * f[k * ny + j].norm_sqr()).sum::<f64>() * TWO_PI
    };
    let (u0, uy0, u1, uy1) = (trace(&uh, 0), trace(&uy, 0), trace(&uh, ny - 1), trace(&uy, ny - 1));
    let nu = modal_l2_sqr(grid, &uh, |_| 1.0).sqrt();
    let nuy = modal_l2_sqr(grid, &uy, |_| 1.0).sqrt();
    let nuyy = modal_l2_sqr(grid, &uyy, |_| 1.0).sqrt();
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let row0: Vec<Complex64> = (0..nk).map(|k| uh[k * ny]).collect();
    let u_bottom_max = linf_of(&crate::field::inverse_row(grid, &row0));
    WallTraces {
        u_bottom: u0.sqrt(),
        uy_bottom: uy0.sqrt(),
        u_top: u1.sqrt(),
        uy_top: uy1.sqrt(),
        u_bottom_max,
        top_ratio: ratio(u1, 2.0 * nu * nuy),
        bottom_ratio: ratio(uy0, 2.0 * nuy * nuyy),
    }
}

#[cfg(test)]
mod tests;
