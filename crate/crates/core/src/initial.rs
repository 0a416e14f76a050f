//! Named initial conditions.
//!
//! Every family is separable in the form `psi = A sin(m x) g(y)` plus an
//! x-independent mean flow `mean_u(y)`, or a finite sum of such terms, so the
//! wall traces can be checked from the y-profiles directly.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Regime;

/// Polynomial `c[0] + c[1] y + c[2] y^2 + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, y: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(n, c)| n as f64 * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly(Vec::new());
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// `y^2 (1 - y)^3`, compatible with both wall systems.
    pub fn taylor() -> Poly {
        Poly(vec![0.0, 0.0, 1.0, -3.0, 3.0, -1.0])
    }
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_wavenumber() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    /// `psi = A sin(m x) y^2 (1-y)^3`, `mean_u = B (y^2/2 - y^3/3)`.
    TaylorProfile {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_wavenumber")]
        wavenumber: u32,
        #[serde(default)]
        mean_amplitude: f64,
    },
    /// `psi = A sin(m x) g(y)` and `mean_u = h(y)` for polynomials `g`, `h`.
    Separable {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_wavenumber")]
        wavenumber: u32,
        profile: Poly,
        #[serde(default = "empty_poly")]
        mean_profile: Poly,
    },
    /// `psi = 0`, `mean_u = A sin(pi y / 2)`.
    MeanSine {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Seeded sum of low modes, each with a wall-compatible y-profile.
    RandomModes {
        seed: u64,
        #[serde(default = "default_modes")]
        modes: u32,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

fn empty_poly() -> Poly {
    Poly(Vec::new())
}

fn default_modes() -> u32 {
    4
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::TaylorProfile { amplitude: 1.0, wavenumber: 1, mean_amplitude: 0.0 }
    }
}

/// One separable term `profile(y) * (a cos(m x) + b sin(m x))`.
#[derive(Debug, Clone)]
struct Term {
    m: u32,
    a: f64,
    b: f64,
    profile: Poly,
}

#[derive(Debug, Clone)]
enum MeanFlow {
    Poly(Poly),
    Sine(f64),
}

impl MeanFlow {
    fn eval(&self, y: f64) -> f64 {
        match self {
            MeanFlow::Poly(p) => p.eval(y),
            MeanFlow::Sine(a) => a * (0.5 * PI * y).sin(),
        }
    }

    fn dy(&self, y: f64) -> f64 {
        match self {
            MeanFlow::Poly(p) => p.derivative().eval(y),
            MeanFlow::Sine(a) => a * 0.5 * PI * (0.5 * PI * y).cos(),
        }
    }
}

/// An initial condition resolved to analytic terms.
#[derive(Debug, Clone)]
pub struct ResolvedInitial {
    terms: Vec<Term>,
    mean: MeanFlow,
}

impl InitialCondition {
    pub fn resolve(&self) -> Result<ResolvedInitial> {
        let (terms, mean) = match self {
            InitialCondition::Zero => (Vec::new(), MeanFlow::Poly(empty_poly())),
            InitialCondition::TaylorProfile { amplitude, wavenumber, mean_amplitude } => (
                vec![Term { m: *wavenumber, a: 0.0, b: *amplitude, profile: Poly::taylor() }],
                MeanFlow::Poly(Poly(vec![0.0, 0.0, 0.5 * mean_amplitude, -mean_amplitude / 3.0])),
            ),
            InitialCondition::Separable { amplitude, wavenumber, profile, mean_profile } => (
                vec![Term { m: *wavenumber, a: 0.0, b: *amplitude, profile: profile.clone() }],
                MeanFlow::Poly(mean_profile.clone()),
            ),
            InitialCondition::MeanSine { amplitude } => (Vec::new(), MeanFlow::Sine(*amplitude)),
            InitialCondition::RandomModes { seed, modes, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let terms = (1..=*modes)
                    .map(|m| {
                        let decay = amplitude / (m * m) as f64;
                        let tilt = rng.random_range(-1.0..1.0);
                        Term {
                            m,
                            a: decay * rng.random_range(-1.0..1.0),
                            b: decay * rng.random_range(-1.0..1.0),
                            profile: Poly::taylor().mul(&Poly(vec![1.0, tilt])),
                        }
                    })
                    .collect();
                (terms, MeanFlow::Poly(empty_poly()))
            }
        };
        if terms.iter().any(|t| t.m == 0) {
            return Err(Error::Config("initial-condition wavenumber must be >= 1".into()));
        }
        Ok(ResolvedInitial { terms, mean })
    }
}

impl ResolvedInitial {
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mx = t.m as f64 * x;
                t.profile.eval(y) * (t.a * mx.cos() + t.b * mx.sin())
            })
            .sum()
    }

    pub fn mean_u(&self, y: f64) -> f64 {
        self.mean.eval(y)
    }

    /// Highest x wavenumber present.
    pub fn max_wavenumber(&self) -> u32 {
        self.terms.iter().map(|t| t.m).max().unwrap_or(0)
    }

    /// Checks the wall conditions of the chosen system; returns the first violation.
    ///
    /// Trace norms are `L^2(-pi, pi)` norms of the analytic wall traces.
    pub fn check(&self, regime: Regime, tol: f64) -> Result<()> {
        let trace = |f: &dyn Fn(&Term) -> f64, scale_m: bool| -> f64 {
            // terms with different m are orthogonal in x
            let mut by_m: std::collections::BTreeMap<u32, (f64, f64)> = Default::default();
            for t in &self.terms {
                let g = f(t) * if scale_m { t.m as f64 } else { 1.0 };
                let e = by_m.entry(t.m).or_default();
                e.0 += g * t.a;
                e.1 += g * t.b;
            }
            by_m.values().map(|(a, b)| PI * (a * a + b * b)).sum::<f64>().sqrt()
        };
        let v0 = trace(&|t| t.profile.eval(0.0), true);
        let v1 = trace(&|t| t.profile.eval(1.0), true);
        if v0 > tol {
            return Err(Error::IncompatibleInitial { condition: "v(x,0) = 0", trace_norm: v0 });
        }
        if v1 > tol {
            return Err(Error::IncompatibleInitial { condition: "v(x,1) = 0", trace_norm: v1 });
        }
        if regime == Regime::Viscous {
            let two_pi_sqrt = (2.0 * PI).sqrt();
            let u0 = trace(&|t| t.profile.derivative().eval(0.0), false);
            let u0 = (u0 * u0 + (self.mean.eval(0.0) * two_pi_sqrt).powi(2)).sqrt();
            if u0 > tol {
                return Err(Error::IncompatibleInitial { condition: "u(x,0) = 0", trace_norm: u0 });
            }
            let uy1 = trace(&|t| t.profile.derivative().derivative().eval(1.0), false);
            let uy1 = (uy1 * uy1 + (self.mean.dy(1.0) * two_pi_sqrt).powi(2)).sqrt();
            if uy1 > tol {
                return Err(Error::IncompatibleInitial { condition: "u_y(x,1) = 0", trace_norm: uy1 });
            }
        }
        Ok(())
    }
}
