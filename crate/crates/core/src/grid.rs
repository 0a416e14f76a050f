//! Discretization of the channel `[-pi, pi) x [0, 1]`.
//!
//! The x direction is uniform and periodic and is handled spectrally. The y
//! direction uses a node set clustered toward the no-slip wall at `y = 0`,
//! with three-point difference operators in the interior and one-sided
//! second-order stencils at both walls.
//!
//! The interior first-derivative stencil `(f[j+1] - f[j-1]) / (y[j+1] - y[j-1])`
//! together with the trapezoidal weights forms a summation-by-parts pair;
//! the solver relies on this to keep the discrete energy budget closed.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

/// Scalar types the y-operators act on (real columns and spectral mode columns).
pub trait Value: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl Value for f64 {}
impl Value for Complex64 {}

/// A finite-difference stencil anchored at `start`.
#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    coef: Vec<f64>,
}

impl Stencil {
    #[inline]
    fn apply<T: Value>(&self, column: &[T]) -> T {
        self.coef.iter().zip(&column[self.start..]).fold(T::default(), |acc, (&c, &f)| acc + f * c)
    }
}

pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub stretch: f64,
    pub x_nodes: Vec<f64>,
    pub y_nodes: Vec<f64>,
    /// Integer wavenumbers `-nx/2+1 ..= nx/2`.
    pub wavenumbers: Vec<i64>,
    pub y_weights: Vec<f64>,
    /// Aligned with `wavenumbers`; true iff `|k| <= nx/3`.
    pub dealias_mask: Vec<bool>,
    /// Node spacings `h[j] = y[j+1] - y[j]`.
    pub spacing: Vec<f64>,
    ddy: Vec<Stencil>,
    d2y: Vec<Stencil>,
    pub(crate) r2c: Arc<dyn RealToComplex<f64>>,
    pub(crate) c2r: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("stretch", &self.stretch)
            .finish_non_exhaustive()
    }
}

/// Finite-difference weights for derivatives `0..=order` at `z` using `nodes`
/// (Fornberg's recursion). `out[d][i]` is the weight of node `i` for derivative `d`.
pub fn fd_weights(z: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

impl Grid {
    /// Builds the grid. `stretch` clusters y-nodes toward the bottom wall via
    /// `y = (s + stretch * (s - sin(pi s) / pi)) / (1 + stretch)`, `s = j / (ny - 1)`.
    pub fn new(nx: usize, ny: usize, stretch: f64) -> Result<Self> {
        if nx < 8 || !nx.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("nx must be even and >= 8, got {nx}")));
        }
        if ny < 16 {
            return Err(Error::InvalidGrid(format!("ny must be >= 16, got {ny}")));
        }
        if !(0.0..1.0).contains(&stretch) {
            return Err(Error::InvalidGrid(format!("stretch must lie in [0, 1), got {stretch}")));
        }

        let dx = 2.0 * std::f64::consts::PI / nx as f64;
        let x_nodes = (0..nx).map(|i| -std::f64::consts::PI + i as f64 * dx).collect();

        let mut y_nodes: Vec<f64> = (0..ny)
            .map(|j| {
                let s = j as f64 / (ny - 1) as f64;
                let pi = std::f64::consts::PI;
                (s + stretch * (s - (pi * s).sin() / pi)) / (1.0 + stretch)
            })
            .collect();
        y_nodes[0] = 0.0;
        y_nodes[ny - 1] = 1.0;

        let spacing: Vec<f64> = y_nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let mut y_weights = vec![0.0; ny];
        for (j, h) in spacing.iter().enumerate() {
            y_weights[j] += 0.5 * h;
            y_weights[j + 1] += 0.5 * h;
        }

        let half = (nx / 2) as i64;
        let wavenumbers: Vec<i64> = (-half + 1..=half).collect();
        let cutoff = (nx / 3) as i64;
        let dealias_mask = wavenumbers.iter().map(|k| k.abs() <= cutoff).collect();

        let mut ddy = Vec::with_capacity(ny);
        let mut d2y = Vec::with_capacity(ny);
        let wall = |start: usize, len: usize, at: usize, order: usize| Stencil {
            start,
            coef: fd_weights(y_nodes[at], &y_nodes[start..start + len], order)[order].clone(),
        };
        ddy.push(wall(0, 3, 0, 1));
        d2y.push(wall(0, 4, 0, 2));
        for j in 1..ny - 1 {
            let (hm, hp) = (spacing[j - 1], spacing[j]);
            ddy.push(Stencil { start: j - 1, coef: vec![-1.0 / (hm + hp), 0.0, 1.0 / (hm + hp)] });
            d2y.push(Stencil {
                start: j - 1,
                coef: vec![2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))],
            });
        }
        ddy.push(wall(ny - 3, 3, ny - 1, 1));
        d2y.push(wall(ny - 4, 4, ny - 1, 2));

        let mut planner = RealFftPlanner::<f64>::new();
        let r2c = planner.plan_fft_forward(nx);
        let c2r = planner.plan_fft_inverse(nx);

        Ok(Self {
            nx,
            ny,
            stretch,
            x_nodes,
            y_nodes,
            wavenumbers,
            y_weights,
            dealias_mask,
            spacing,
            ddy,
            d2y,
            r2c,
            c2r,
        })
    }

    /// Number of stored (non-negative) x modes, `nx/2 + 1`.
    #[inline]
    pub fn nk(&self) -> usize {
        self.nx / 2 + 1
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nx as f64
    }

    /// 2/3-rule test for a non-negative mode index.
    #[inline]
    pub fn retained(&self, k: usize) -> bool {
        k <= self.nx / 3
    }

    pub fn min_dy(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.ny {
            return Err(Error::LengthMismatch { expected: self.ny, got: len });
        }
        Ok(())
    }

    /// First y-derivative of a column.
    pub fn ddy<T: Value>(&self, column: &[T]) -> Result<Vec<T>> {
        self.check_len(column.len())?;
        Ok(self.ddy.iter().map(|s| s.apply(column)).collect())
    }

    /// Second y-derivative of a column.
    pub fn d2y<T: Value>(&self, column: &[T]) -> Result<Vec<T>> {
        self.check_len(column.len())?;
        Ok(self.d2y.iter().map(|s| s.apply(column)).collect())
    }

    /// `ddy` into a caller buffer; lengths are the caller's responsibility.
    pub(crate) fn ddy_into<T: Value>(&self, column: &[T], out: &mut [T]) {
        for (o, s) in out.iter_mut().zip(&self.ddy) {
            *o = s.apply(column);
        }
    }

    pub(crate) fn d2y_into<T: Value>(&self, column: &[T], out: &mut [T]) {
        for (o, s) in out.iter_mut().zip(&self.d2y) {
            *o = s.apply(column);
        }
    }

    /// Derivative at the bottom wall only.
    pub(crate) fn ddy_at<T: Value>(&self, column: &[T], j: usize) -> T {
        self.ddy[j].apply(column)
    }

    pub(crate) fn d2y_at<T: Value>(&self, column: &[T], j: usize) -> T {
        self.d2y[j].apply(column)
    }

    /// Trapezoidal integral over `[0, 1]` of a real column.
    pub fn integrate_y(&self, column: &[f64]) -> f64 {
        column.iter().zip(&self.y_weights).map(|(f, w)| f * w).sum()
    }
}

/// Builds a grid; see [`Grid::new`].
pub fn build_grid(nx: usize, ny: usize, stretch: f64) -> Result<Arc<Grid>> {
    Grid::new(nx, ny, stretch).map(Arc::new)
}
