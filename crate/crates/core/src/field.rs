//! Scalar fields with a physical / x-spectral dual representation, the
//! solver state, velocity reconstruction and Lebesgue norms.
//!
//! Layouts: physical data is y-major (`data[j * nx + i]`), x-spectral data is
//! mode-major over the non-negative half spectrum (`data[k * ny + j]`,
//! `k = 0..=nx/2`). Spectral amplitudes are continuum Fourier coefficients:
//! `f(x) = sum_k fhat_k exp(i k x)`.

use std::borrow::Cow;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rep {
    Physical,
    XSpectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcTag {
    None,
    DirichletBottom,
    NeumannTop,
    BothWallsZero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Physical(Vec<f64>),
    XSpectral(Vec<Complex64>),
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub data: FieldData,
    pub bc: BcTag,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>, rep: Rep) -> Self {
        let data = match rep {
            Rep::Physical => FieldData::Physical(vec![0.0; grid.nx * grid.ny]),
            Rep::XSpectral => FieldData::XSpectral(vec![Complex64::default(); grid.nk() * grid.ny]),
        };
        Self { grid: grid.clone(), data, bc: BcTag::None }
    }

    pub fn from_physical(grid: &Arc<Grid>, data: Vec<f64>) -> Result<Self> {
        let expected = grid.nx * grid.ny;
        if data.len() != expected {
            return Err(Error::LengthMismatch { expected, got: data.len() });
        }
        Ok(Self { grid: grid.clone(), data: FieldData::Physical(data), bc: BcTag::None })
    }

    pub fn from_spectral(grid: &Arc<Grid>, data: Vec<Complex64>) -> Result<Self> {
        let expected = grid.nk() * grid.ny;
        if data.len() != expected {
            return Err(Error::LengthMismatch { expected, got: data.len() });
        }
        Ok(Self { grid: grid.clone(), data: FieldData::XSpectral(data), bc: BcTag::None })
    }

    /// Samples `f(x, y)` at the grid nodes.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.nx * grid.ny);
        for &y in &grid.y_nodes {
            for &x in &grid.x_nodes {
                data.push(f(x, y));
            }
        }
        Self { grid: grid.clone(), data: FieldData::Physical(data), bc: BcTag::None }
    }

    pub fn with_bc(mut self, bc: BcTag) -> Self {
        self.bc = bc;
        self
    }

    pub fn rep(&self) -> Rep {
        match self.data {
            FieldData::Physical(_) => Rep::Physical,
            FieldData::XSpectral(_) => Rep::XSpectral,
        }
    }

    pub fn physical(&self) -> Result<&[f64]> {
        match &self.data {
            FieldData::Physical(d) => Ok(d),
            FieldData::XSpectral(_) => Err(Error::RepMismatch { expected: "physical" }),
        }
    }

    pub fn spectral(&self) -> Result<&[Complex64]> {
        match &self.data {
            FieldData::XSpectral(d) => Ok(d),
            FieldData::Physical(_) => Err(Error::RepMismatch { expected: "x_spectral" }),
        }
    }

    /// Spectral coefficients, transforming if the field is stored physically.
    pub fn spectral_view(&self) -> Cow<'_, [Complex64]> {
        match &self.data {
            FieldData::XSpectral(d) => Cow::Borrowed(d),
            FieldData::Physical(d) => Cow::Owned(forward(&self.grid, d)),
        }
    }

    pub fn physical_view(&self) -> Cow<'_, [f64]> {
        match &self.data {
            FieldData::Physical(d) => Cow::Borrowed(d),
            FieldData::XSpectral(d) => Cow::Owned(inverse(&self.grid, d)),
        }
    }

    pub fn to_spectral(&self) -> Result<ScalarField> {
        let d = self.physical()?;
        Ok(Self { grid: self.grid.clone(), data: FieldData::XSpectral(forward(&self.grid, d)), bc: self.bc })
    }

    pub fn to_physical(&self) -> Result<ScalarField> {
        let d = self.spectral()?;
        Ok(Self { grid: self.grid.clone(), data: FieldData::Physical(inverse(&self.grid, d)), bc: self.bc })
    }

    /// Mode `k >= 0` of a spectral field as a y-column.
    pub fn mode(&self, k: usize) -> Result<&[Complex64]> {
        let ny = self.grid.ny;
        Ok(&self.spectral()?[k * ny..(k + 1) * ny])
    }
}

/// Row-wise forward transform, y-major physical to mode-major spectral.
pub fn forward(grid: &Grid, phys: &[f64]) -> Vec<Complex64> {
    let (nx, ny, nk) = (grid.nx, grid.ny, grid.nk());
    let mut out = vec![Complex64::default(); nk * ny];
    let mut input = grid.r2c.make_input_vec();
    let mut spec = grid.r2c.make_output_vec();
    let mut scratch = grid.r2c.make_scratch_vec();
    let scale = 1.0 / nx as f64;
    for j in 0..ny {
        input.copy_from_slice(&phys[j * nx..(j + 1) * nx]);
        grid.r2c
            .process_with_scratch(&mut input, &mut spec, &mut scratch)
            .expect("fft buffer sizes are fixed by the plan");
        for (k, c) in spec.iter().enumerate() {
            // x_i = -pi + i dx contributes the phase (-1)^k
            let sign = if k % 2 == 0 { scale } else { -scale };
            out[k * ny + j] = *c * sign;
        }
        out[j].im = 0.0;
        out[(nk - 1) * ny + j].im = 0.0;
    }
    out
}

/// Row-wise inverse transform, mode-major spectral to y-major physical.
pub fn inverse(grid: &Grid, spec_data: &[Complex64]) -> Vec<f64> {
    let (nx, ny, nk) = (grid.nx, grid.ny, grid.nk());
    let mut out = vec![0.0; nx * ny];
    let mut spec = grid.c2r.make_input_vec();
    let mut output = grid.c2r.make_output_vec();
    let mut scratch = grid.c2r.make_scratch_vec();
    for j in 0..ny {
        for (k, c) in spec.iter_mut().enumerate() {
            let v = spec_data[k * ny + j];
            *c = if k % 2 == 0 { v } else { -v };
        }
        spec[0].im = 0.0;
        spec[nk - 1].im = 0.0;
        grid.c2r
            .process_with_scratch(&mut spec, &mut output, &mut scratch)
            .expect("fft buffer sizes are fixed by the plan");
        out[j * nx..(j + 1) * nx].copy_from_slice(&output);
    }
    out
}

/// Forward transform of a single physical row; returns `nk` coefficients.
pub(crate) fn forward_row(grid: &Grid, row: &[f64]) -> Vec<Complex64> {
    let mut input = row.to_vec();
    let mut spec = grid.r2c.make_output_vec();
    grid.r2c.process(&mut input, &mut spec).expect("fft buffer sizes are fixed by the plan");
    let scale = 1.0 / grid.nx as f64;
    for (k, c) in spec.iter_mut().enumerate() {
        *c *= if k % 2 == 0 { scale } else { -scale };
    }
    let nk = spec.len();
    spec[0].im = 0.0;
    spec[nk - 1].im = 0.0;
    spec
}

/// Inverse transform of a single row of `nk` coefficients.
pub(crate) fn inverse_row(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut spec: Vec<Complex64> = coeffs.iter().enumerate().map(|(k, c)| if k % 2 == 0 { *c } else { -*c }).collect();
    let nk = spec.len();
    spec[0].im = 0.0;
    spec[nk - 1].im = 0.0;
    let mut out = grid.c2r.make_output_vec();
    grid.c2r.process(&mut spec, &mut out).expect("fft buffer sizes are fixed by the plan");
    out
}

/// Spectral x-derivative; the Nyquist mode is dropped.
pub fn dx_spectral(grid: &Grid, spec_data: &[Complex64]) -> Vec<Complex64> {
    let (ny, nk) = (grid.ny, grid.nk());
    let mut out = vec![Complex64::default(); nk * ny];
    for k in 1..nk - 1 {
        let ik = Complex64::new(0.0, k as f64);
        for j in 0..ny {
            out[k * ny + j] = spec_data[k * ny + j] * ik;
        }
    }
    out
}

/// y-derivative of every mode column.
pub fn dy_spectral(grid: &Grid, spec_data: &[Complex64]) -> Vec<Complex64> {
    let ny = grid.ny;
    let mut out = vec![Complex64::default(); spec_data.len()];
    for (col, o) in spec_data.chunks_exact(ny).zip(out.chunks_exact_mut(ny)) {
        grid.ddy_into(col, o);
    }
    out
}

/// Second y-derivative of every mode column.
pub fn d2y_spectral(grid: &Grid, spec_data: &[Complex64]) -> Vec<Complex64> {
    let ny = grid.ny;
    let mut out = vec![Complex64::default(); spec_data.len()];
    for (col, o) in spec_data.chunks_exact(ny).zip(out.chunks_exact_mut(ny)) {
        grid.d2y_into(col, o);
    }
    out
}

/// Zeroes the modes removed by the 2/3 rule (in place).
pub fn dealias_in_place(grid: &Grid, spec_data: &mut [Complex64]) {
    let ny = grid.ny;
    for k in (grid.nx / 3 + 1)..grid.nk() {
        spec_data[k * ny..(k + 1) * ny].fill(Complex64::default());
    }
}

pub fn dealias(f: &ScalarField) -> Result<ScalarField> {
    let mut d = f.spectral()?.to_vec();
    dealias_in_place(&f.grid, &mut d);
    Ok(ScalarField { grid: f.grid.clone(), data: FieldData::XSpectral(d), bc: f.bc })
}

/// Multiplicity of a stored mode on the full spectrum.
#[inline]
pub(crate) fn mode_weight(grid: &Grid, k: usize) -> f64 {
    if k == 0 || k == grid.nx / 2 {
        1.0
    } else {
        2.0
    }
}

/// `||f||_2^2` evaluated from spectral coefficients (Parseval).
pub fn parseval_l2_squared(grid: &Grid, spec_data: &[Complex64]) -> f64 {
    let ny = grid.ny;
    let two_pi = 2.0 * std::f64::consts::PI;
    (0..grid.nk())
        .map(|k| {
            let s: f64 =
                spec_data[k * ny..(k + 1) * ny].iter().zip(&grid.y_weights).map(|(c, w)| c.norm_sqr() * w).sum();
            mode_weight(grid, k) * s
        })
        .sum::<f64>()
        * two_pi
}

/// `(sum_x sum_y w_y dx |f|^p)^(1/p)`.
pub fn norm_lp(f: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm_lp needs p >= 1, got {p}")));
    }
    let d = f.physical()?;
    Ok(lp_of(&f.grid, d, p))
}

pub(crate) fn lp_of(grid: &Grid, d: &[f64], p: f64) -> f64 {
    let nx = grid.nx;
    let mut total = 0.0;
    for (j, w) in grid.y_weights.iter().enumerate() {
        let row = &d[j * nx..(j + 1) * nx];
        let s: f64 = if p == 2.0 { row.iter().map(|v| v * v).sum() } else { row.iter().map(|v| v.abs().powf(p)).sum() };
        total += w * s;
    }
    (total * grid.dx()).powf(1.0 / p)
}

pub fn norm_linf(f: &ScalarField) -> Result<f64> {
    Ok(linf_of(f.physical()?))
}

pub(crate) fn linf_of(d: &[f64]) -> f64 {
    d.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Viscous,
    Limit,
}

/// Full solver state for either system.
///
/// `psi` carries only the `k != 0` content; the x-mean of the horizontal
/// velocity lives in `mean_u`. `omega` holds the full vorticity including its
/// x-mean `-d(mean_u)/dy`.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub psi: ScalarField,
    pub omega: ScalarField,
    pub mean_u: Vec<f64>,
    pub t: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub regime: Regime,
}

impl FlowState {
    pub fn zero(grid: &Arc<Grid>, nu1: f64, nu2: f64, regime: Regime) -> Result<Self> {
        let s = Self {
            psi: ScalarField::zeros(grid, Rep::XSpectral).with_bc(BcTag::BothWallsZero),
            omega: ScalarField::zeros(grid, Rep::XSpectral),
            mean_u: vec![0.0; grid.ny],
            t: 0.0,
            nu1,
            nu2,
            regime,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.psi.grid
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu1 > 0.0) {
            return Err(Error::InvalidArgument(format!("nu1 must be positive, got {}", self.nu1)));
        }
        match self.regime {
            Regime::Viscous if !(self.nu2 > 0.0) => {
                Err(Error::InvalidArgument("viscous regime requires nu2 > 0".into()))
            }
            Regime::Limit if self.nu2 != 0.0 => Err(Error::InvalidArgument("limit regime requires nu2 = 0".into())),
            _ => {
                if self.mean_u.len() != self.grid().ny {
                    return Err(Error::LengthMismatch { expected: self.grid().ny, got: self.mean_u.len() });
                }
                Ok(())
            }
        }
    }
}

/// Spectral velocity `(u, v)`: `u = d(psi)/dy + mean_u`, `v = -d(psi)/dx`.
pub fn velocity_spectral(s: &FlowState) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = s.grid();
    let psi = s.psi.spectral_view();
    let mut u = dy_spectral(grid, &psi);
    for (c, m) in u[..grid.ny].iter_mut().zip(&s.mean_u) {
        *c = Complex64::new(*m, 0.0);
    }
    let mut v = dx_spectral(grid, &psi);
    for c in v.iter_mut() {
        *c = -*c;
    }
    (u, v)
}

/// Physical velocity reconstructed from the streamfunction and mean flow.
pub fn velocity_from_state(s: &FlowState) -> (ScalarField, ScalarField) {
    let grid = s.grid();
    let (u, v) = velocity_spectral(s);
    let bc_u = match s.regime {
        Regime::Viscous => BcTag::DirichletBottom,
        Regime::Limit => BcTag::None,
    };
    (
        ScalarField { grid: grid.clone(), data: FieldData::Physical(inverse(grid, &u)), bc: bc_u },
        ScalarField { grid: grid.clone(), data: FieldData::Physical(inverse(grid, &v)), bc: BcTag::BothWallsZero },
    )
}

/// Discrete divergence `dx(u) + dy(v)` of `velocity_from_state`, physical.
pub fn divergence(s: &FlowState) -> Vec<f64> {
    let grid = s.grid();
    let (u, v) = velocity_spectral(s);
    let ux = dx_spectral(grid, &u);
    let vy = dy_spectral(grid, &v);
    let div: Vec<Complex64> = ux.iter().zip(&vy).map(|(a, b)| a + b).collect();
    inverse(grid, &div)
}
