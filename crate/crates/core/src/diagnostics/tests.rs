use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::elliptic::grad_q_l2_squared;
use crate::grid::build_grid;
use crate::initial::InitialCondition;
use crate::solver::{init_state, SolverConfig};

fn state(nx: usize, ny: usize, regime: Regime, initial: InitialCondition) -> FlowState {
    let cfg = SolverConfig { nx, ny, stretch: 0.6, initial, ..SolverConfig::default() };
    let cfg = match regime {
        Regime::Viscous => cfg,
        Regime::Limit => cfg.to_limit(),
    };
    init_state(&cfg).unwrap()
}

fn taylor(m: u32) -> InitialCondition {
    InitialCondition::TaylorProfile { amplitude: 1.0, wavenumber: m, mean_amplitude: 0.0 }
}

/// Composite Simpson rule on [0, 1].
fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h)).sum();
    (f(0.0) + f(1.0) + inner) * h / 3.0
}

#[test]
fn zero_state_gives_zero_record() {
    for regime in [Regime::Viscous, Regime::Limit] {
        let r = record(&state(16, 20, regime, InitialCondition::Zero)).unwrap();
        assert!(r.is_finite());
        assert_eq!([r.energy, r.diss_h, r.diss_v, r.linf_u, r.vx_l2, r.grad_p_l2, r.grad_q_l2], [0.0; 7]);
        assert!(r.lp_norms.iter().all(|(_, u, v)| *u == 0.0 && *v == 0.0));
        assert_eq!(r.lp_norms.len(), 4);
    }
}

#[test]
fn taylor_energy_matches_quadrature() {
    // psi = sin(x) f(y), f = y^2 (1-y)^3: the x-integral of sin^2 and cos^2 is pi
    let f = |y: f64| y * y * (1.0 - y).powi(3);
    let fp = |y: f64| y * (1.0 - y).powi(2) * (2.0 - 5.0 * y);
    let oracle = PI * (simpson(|y| fp(y).powi(2), 2000) + simpson(|y| f(y).powi(2), 2000));
    // Beta integrals: int f^2 = 1/2310, int f'^2 = 2/315
    assert_relative_eq!(oracle, 47.0 * PI / 6930.0, max_relative = 1e-10);
    let mut errs = Vec::new();
    for ny in [96, 192] {
        let e = record(&state(16, ny, Regime::Viscous, taylor(1))).unwrap().energy;
        errs.push((e - oracle).abs() / oracle);
    }
    assert!(errs[1] < 1e-4, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn energy_counts_the_mean_flow() {
    // u = sin(pi y / 2): int_0^1 u^2 = 1/2, times 2 pi
    let r = record(&state(16, 192, Regime::Viscous, InitialCondition::MeanSine { amplitude: 1.0 })).unwrap();
    assert_relative_eq!(r.energy, PI, max_relative = 1e-4);
    assert_eq!(r.diss_h, 0.0);
}

#[test]
fn limit_record_has_no_boundary_layer_pressure() {
    let r = record(&state(16, 33, Regime::Limit, taylor(2))).unwrap();
    assert_eq!(r.grad_q_l2, 0.0);
    assert!(r.grad_p_l2 > 0.0 && r.is_finite());
    let v = record(&state(16, 33, Regime::Viscous, taylor(2))).unwrap();
    assert!(v.grad_q_l2 > 0.0);
}

#[test]
fn record_norms_are_ordered() {
    let r = record(&state(32, 48, Regime::Viscous, taylor(1))).unwrap();
    let (u2, _) = r.lp(2.0).unwrap();
    assert_relative_eq!(u2 * u2 + r.lp(2.0).unwrap().1.powi(2), r.energy, max_relative = 5e-2);
    assert!(r.lp(3.0).is_none());
    assert!(r.linf_u >= r.lp(8.0).unwrap().0 / (2.0 * PI).powf(1.0 / 8.0));
}

#[test]
fn energy_budget_of_zero_series_is_zero() {
    let mut a = record(&state(16, 20, Regime::Viscous, InitialCondition::Zero)).unwrap();
    let mut b = a.clone();
    a.t = 0.0;
    b.t = 1.0;
    assert_eq!(energy_budget(&[a.clone(), b], 0.1, 1e-3).unwrap(), 0.0);
    assert!(energy_budget(&[a], 0.1, 1e-3).is_err());
    assert!(energy_budget(&[], 0.1, 1e-3).is_err());
}

#[test]
fn energy_budget_of_closed_form_decay() {
    // single-mode dissipation D = k^2 E gives E(t) = E0 exp(-2 nu k^2 t)
    let base = record(&state(16, 20, Regime::Limit, taylor(1))).unwrap();
    let (nu, dt) = (0.1, 1e-3);
    let series: Vec<_> = (0..=1000)
        .map(|n| {
            let t = n as f64 * dt;
            let e = base.energy * (-2.0 * nu * t).exp();
            DiagnosticsRecord { t, energy: e, diss_h: e, diss_v: 0.0, ..base.clone() }
        })
        .collect();
    let res = energy_budget(&series, nu, 0.0).unwrap();
    assert!(res < 1e-6, "{res:e}");
}

#[test]
fn constant_triple_product_ratio() {
    let g = build_grid(16, 33, 0.0).unwrap();
    let one = ScalarField::from_fn(&g, |_, _| 1.0);
    let r = audit_triple_product(&one, &one, &one, 1.0).unwrap();
    assert_relative_eq!(r, (2.0 * PI).powf(-0.5), epsilon = 1e-12);
    let zero = ScalarField::from_fn(&g, |_, _| 0.0);
    assert_eq!(audit_triple_product(&zero, &zero, &zero, 2.0).unwrap(), 0.0);
    assert!(audit_triple_product(&one, &one, &one, 0.5).is_err());
    let other = build_grid(16, 21, 0.0).unwrap();
    assert!(audit_triple_product(&one, &ScalarField::from_fn(&other, |_, _| 1.0), &one, 1.0).is_err());
}

#[test]
fn grad_q_ratio_is_invariant_under_viscosity_rescaling() {
    let s = state(32, 48, Regime::Viscous, taylor(2));
    let shear = crate::elliptic::wall_shear_hat(&s);
    let (a, b) = (grad_q_l2_squared(&shear, s.nu2, s.grid()), grad_q_l2_squared(&shear, 2.0 * s.nu2, s.grid()));
    assert_relative_eq!(b, 4.0 * a, max_relative = 1e-12);
    let r = audit_grad_q(&s).unwrap();
    assert!(r.is_finite() && r > 0.0);
    assert_relative_eq!(audit_grad_q_with(&s, 2.0 * s.nu2).unwrap(), r, max_relative = 1e-12);
    assert_eq!(audit_grad_q(&state(16, 20, Regime::Viscous, InitialCondition::Zero)).unwrap(), 0.0);
    assert!(audit_grad_q(&state(16, 20, Regime::Limit, taylor(1))).is_err());
}

#[test]
fn frequency_split_of_a_single_low_mode() {
    let g = build_grid(32, 65, 0.6).unwrap();
    let p = ScalarField::from_fn(&g, |x, y| x.cos() * (PI * y).cos()).to_spectral().unwrap();
    let split = pressure_frequency_split(&p, 4.0).unwrap();
    let high = parseval_l2_squared(&g, split.p_high.spectral().unwrap()).sqrt();
    assert!(high < 1e-12, "{high:e}");
    assert!(split.low_ratio.is_finite() && split.high_ratio < 1e-10);
    // below the mode's wavenumber only the discrete mean of cos(pi y) is low-frequency
    let below = pressure_frequency_split(&p, 2.0).unwrap();
    let total = parseval_l2_squared(&g, p.spectral().unwrap()).sqrt();
    let high = parseval_l2_squared(&g, below.p_high.spectral().unwrap()).sqrt();
    assert_relative_eq!(high, total, max_relative = 1e-3);
    assert!(pressure_frequency_split(&p, 1.0).is_err());
}

#[test]
fn frequency_split_exhausts_smooth_fields() {
    let g = build_grid(32, 65, 0.6).unwrap();
    let p = ScalarField::from_fn(&g, |x, y| {
        (x.sin() + 0.5 * (2.0 * x).cos()) * (y * y * (1.0 - y) * (1.0 - y) - 1.0 / 30.0)
    })
    .to_spectral()
    .unwrap();
    let highs: Vec<f64> = [2.0, 8.0, 30.0, 100.0]
        .iter()
        .map(|&r| parseval_l2_squared(&g, pressure_frequency_split(&p, r).unwrap().p_high.spectral().unwrap()).sqrt())
        .collect();
    assert!(highs.windows(2).all(|w| w[1] <= w[0] + 1e-14), "{highs:?}");
    assert!(highs[3] < 1e-4 * highs[0], "{highs:?}");
}

#[test]
fn wall_traces_of_zero_and_taylor_states() {
    let z = wall_traces(&state(16, 20, Regime::Viscous, InitialCondition::Zero));
    assert_eq!([z.u_bottom, z.uy_bottom, z.u_top, z.uy_top, z.top_ratio, z.bottom_ratio], [0.0; 6]);
    let (mut bottoms, mut tops) = (Vec::new(), Vec::new());
    for ny in [48, 96, 192] {
        let s = state(32, ny, Regime::Viscous, taylor(1));
        let w = wall_traces(&s);
        assert!(w.top_ratio <= 1.0 + 1e-3 && w.bottom_ratio <= 1.0 + 1e-3, "{w:?}");
        bottoms.push(w.u_bottom_max);
        tops.push(w.uy_top);
    }
    // u_y(x,1) = 0 holds for the profile; the nested one-sided derivative converges to it
    assert!(tops.windows(2).all(|w| w[1] < 0.6 * w[0]), "{tops:?}");
    // the one-sided wall stencil leaves an O(h^2) slip velocity
    assert!(bottoms[2] < 1e-4 && bottoms[0] / bottoms[1] > 3.0 && bottoms[1] / bottoms[2] > 3.0, "{bottoms:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn triple_product_ratio_is_scale_invariant(
        a in prop::collection::vec(-1.0f64..1.0, 9),
        lambda in 0.05f64..20.0,
        m in prop::sample::select(vec![1.0, 2.0, 4.0]),
    ) {
        let g = build_grid(16, 17, 0.3).unwrap();
        let field = |c: &[f64], s: f64| ScalarField::from_fn(&g, |x, y| {
            s * (c[0] + c[1] * x.cos() * y + c[2] * (2.0 * x).sin() * (1.0 - y * y))
        });
        let (f, gg, h) = (field(&a[0..3], 1.0), field(&a[3..6], 1.0), field(&a[6..9], 1.0));
        let (fs, gs, hs) = (field(&a[0..3], lambda), field(&a[3..6], lambda), field(&a[6..9], lambda));
        let r = audit_triple_product(&f, &gg, &h, m).unwrap();
        let rs = audit_triple_product(&fs, &gs, &hs, m).unwrap();
        prop_assert!(r.is_finite());
        prop_assert!((r - rs).abs() <= 1e-10 * r.max(1e-300), "{} {}", r, rs);
    }

    #[test]
    fn energy_scales_quadratically(seed in 0u64..1000, lambda in 0.1f64..10.0) {
        let s = state(16, 24, Regime::Viscous, InitialCondition::RandomModes { seed, modes: 3, amplitude: 1.0 });
        let t = state(16, 24, Regime::Viscous, InitialCondition::RandomModes { seed, modes: 3, amplitude: lambda });
        let (a, b) = (discrete_energy(&s), discrete_energy(&t));
        prop_assert!(a.diss_h >= 0.0 && a.diss_v >= 0.0);
        prop_assert!((b.energy - lambda * lambda * a.energy).abs() <= 1e-10 * b.energy);
    }
}
