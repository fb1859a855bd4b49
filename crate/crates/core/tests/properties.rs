use proptest::prelude::*;
use std::sync::Arc;

use wignerlab::diagnostics::{
    breakdown_time, divergence, entropy_rate_fit, linear_entropy, purity, Breakdown, TrajectoryRecord,
};
use wignerlab::estimators::{gaussian_oracle, t_hbar_chaotic, t_r, GaussianState};
use wignerlab::propagators::{step_decoherence, step_kinetic, step_potential};
use wignerlab::*;

fn grid(n: usize, half: f64, hbar: f64) -> Arc<PhaseSpaceGrid> {
    Arc::new(PhaseSpaceGrid::symmetric(n, half, half, hbar, 1.0).unwrap())
}

fn packet(g: &Arc<PhaseSpaceGrid>, x0: f64, p0: f64, sx: f64, sp: f64) -> WignerField {
    make_state(g.clone(), &InitialStateSpec::gaussian(x0, p0, sx, sp)).unwrap()
}

fn max_abs_diff(a: &WignerField, b: &WignerField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn model() -> impl Strategy<Value = PotentialModel> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|omega| PotentialModel::Harmonic { omega }),
        (0.2..3.0f64).prop_map(|lambda| PotentialModel::Inverted { lambda }),
        (0.1..2.0f64, 0.1..2.0f64).prop_map(|(a, b)| PotentialModel::QuarticDoubleWell { a, b }),
        (0.1..2.0f64, 0.1..2.0f64, 0.0..3.0f64, 0.5..3.0f64)
            .prop_map(|(a, b, amplitude, frequency)| PotentialModel::DrivenDoubleWell { a, b, amplitude, frequency }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_spacing_follows_extents(log_nx in 4u32..9, log_np in 4u32..9, x_min in -20.0..-1.0f64, wx in 2.0..40.0f64,
                                    p_min in -20.0..-1.0f64, wp in 2.0..40.0f64) {
        let (nx, np) = (1usize << log_nx, 1usize << log_np);
        let g = PhaseSpaceGrid::new(GridConfig { nx, np, x_min, x_max: x_min + wx, p_min, p_max: p_min + wp, hbar: 1.0, mass: 1.0 }).unwrap();
        prop_assert!((g.dx() - wx / nx as f64).abs() <= 1e-12 * wx);
        prop_assert!((g.dp() - wp / np as f64).abs() <= 1e-12 * wp);
        prop_assert!(g.cell_area() > 0.0);
        let bad = GridConfig { nx: nx + 1, np, x_min, x_max: x_min + wx, p_min, p_max: p_min + wp, hbar: 1.0, mass: 1.0 };
        prop_assert!(PhaseSpaceGrid::new(bad).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences(m in model(), x in 0.3..2.5f64, t in 0.0..10.0f64, mass in 0.5..2.0f64) {
        let h = 1e-4;
        let v = |x: f64| m.evaluate(x, t, mass).v;
        let d1 = m.evaluate(x, t, mass).d1;
        let fd1 = (v(x + h) - v(x - h)) / (2.0 * h);
        prop_assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1.0), "{fd1} vs {d1}");
        // Third derivative from second differences of V′, which is exact for a cubic V′.
        let d = |x: f64| m.evaluate(x, t, mass).d1;
        let h3 = 1e-2;
        let fd3 = (d(x + h3) - 2.0 * d(x) + d(x - h3)) / (h3 * h3);
        let d3 = m.evaluate(x, t, mass).d3;
        prop_assert!((fd3 - d3).abs() <= 1e-6 * d3.abs().max(1.0), "{fd3} vs {d3}");
    }

    #[test]
    fn undriven_limit(a in 0.1..2.0f64, b in 0.1..2.0f64, frequency in 0.5..3.0f64, x in -3.0..3.0f64, t in 0.0..50.0f64) {
        let driven = PotentialModel::DrivenDoubleWell { a, b, amplitude: 0.0, frequency };
        let plain = PotentialModel::QuarticDoubleWell { a, b };
        prop_assert_eq!(driven.evaluate(x, t, 1.0), plain.evaluate(x, t, 1.0));
    }

    #[test]
    fn t_hbar_and_recurrence_fall_with_hbar(lambda in 0.01..5.0f64, chi in 0.1..10.0f64, sp in 0.1..10.0f64,
                                             hbar in 1e-4..1e-2f64, f in 1.01..4.0f64, c in 1.5..100.0f64) {
        prop_assert!(t_hbar_chaotic(lambda, chi, sp, hbar * f).unwrap() < t_hbar_chaotic(lambda, chi, sp, hbar).unwrap());
        prop_assert!(t_r(lambda, 1.0, hbar * f).unwrap() < t_r(lambda, 1.0, hbar).unwrap());
        // Scaling every action by c leaves the estimates unchanged.
        let a = t_hbar_chaotic(lambda, chi, sp * c, hbar * c).unwrap();
        prop_assert!((a - t_hbar_chaotic(lambda, chi, sp, hbar).unwrap()).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn entropy_rate_recovers_line(a in -5.0..5.0f64, b in -3.0..3.0f64, n in 10usize..200) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let h: Vec<f64> = t.iter().map(|t| a + b * t).collect();
        let fit = entropy_rate_fit(&t, &h, (0.0, t[n - 1])).unwrap();
        prop_assert!((fit.rate - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn breakdown_monotone_in_threshold(values in prop::collection::vec(0.0..2.0f64, 2..60), lo in 0.0..1.0f64, step in 0.0..1.0f64) {
        let t: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        let key = |b: Breakdown| b.time().unwrap_or(f64::INFINITY);
        prop_assert!(key(breakdown_time(&t, &values, lo)) <= key(breakdown_time(&t, &values, lo + step)));
    }

    #[test]
    fn oracle_determinant_never_shrinks(m in prop_oneof![
            (0.2..3.0f64).prop_map(|omega| PotentialModel::Harmonic { omega }),
            (0.2..2.0f64).prop_map(|lambda| PotentialModel::Inverted { lambda }),
        ], d in 0.001..0.5f64, s in 0.5..2.0f64, r in -0.9..0.9f64, k in 1.0..3.0f64) {
        let hbar = 1.0;
        // det = v²(1 - r²) = k² ħ²/4.
        let v = 0.5 * k * hbar / (1.0 - r * r).sqrt();
        let cov = [[v * s * s, r * v], [r * v, v / (s * s)]];
        let g0 = GaussianState::new([0.3, -0.2], cov);
        let env = Environment::diffusive(d);
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let o = gaussian_oracle(&m, Some(&env), g0, 1.0, hbar, &times).unwrap();
        for w in o.entropy.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pure_gaussians_are_normalized_and_pure(x0 in -2.0..2.0f64, p0 in -2.0..2.0f64, sx in 0.5..1.5f64) {
        let g = grid(128, 14.0, 1.0);
        let w = packet(&g, x0, p0, sx, 0.5 / sx);
        prop_assert!(w.values().iter().all(|v| v.is_finite()));
        prop_assert!((w.norm() - 1.0).abs() < 1e-9);
        prop_assert!((purity(&w).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mixed_gaussian_purity(sx in 0.6..1.4f64, k in 1.0..3.0f64) {
        let g = grid(256, 20.0, 1.0);
        let sp = 0.5 * k / sx;
        let w = packet(&g, 0.0, 0.0, sx, sp);
        prop_assert!((purity(&w).unwrap() - 1.0 / k).abs() < 1e-6);
    }

    #[test]
    fn kinetic_halves_compose(x0 in -1.0..1.0f64, p0 in -1.0..1.0f64, dt in 0.01..0.5f64) {
        let g = grid(64, 8.0, 1.0);
        let w = packet(&g, x0, p0, 0.8, 0.8);
        let (mut a, mut b) = (w.clone(), w.clone());
        step_kinetic(&mut a, dt);
        step_kinetic(&mut b, 0.5 * dt);
        step_kinetic(&mut b, 0.5 * dt);
        prop_assert!(max_abs_diff(&a, &b) < 1e-12);
        prop_assert!((a.norm() - w.norm()).abs() < 1e-12);
    }

    #[test]
    fn quadratic_brackets_coincide(quadratic in prop_oneof![
            (0.2..2.0f64).prop_map(|omega| PotentialModel::Harmonic { omega }),
            (0.2..2.0f64).prop_map(|lambda| PotentialModel::Inverted { lambda }),
        ], dt in 0.01..0.1f64, hbar in 0.3..2.0f64) {
        let g = grid(64, 12.0, hbar);
        let w = packet(&g, 0.5, -0.3, hbar.sqrt(), hbar.sqrt());
        let (mut q, mut c) = (w.clone(), w);
        step_potential(&mut q, &quadratic, Bracket::Moyal, 0.0, dt);
        step_potential(&mut c, &quadratic, Bracket::Poisson, 0.0, dt);
        prop_assert!(max_abs_diff(&q, &c) < 1e-13);
    }

    #[test]
    fn diffusion_lowers_purity_and_raises_entropy(d in 0.01..0.5f64, dt in 0.01..0.1f64, a in 0.5..1.5f64) {
        let g = grid(64, 8.0, 1.0);
        let m = PotentialModel::QuarticDoubleWell { a, b: 0.5 };
        let mut w = make_state(g, &InitialStateSpec::cat(3.0, 0.6, 0.5 / 0.6)).unwrap();
        let (mut last_p, mut last_h) = (purity(&w).unwrap(), linear_entropy(&w).unwrap());
        for _ in 0..10 {
            step_kinetic(&mut w, 0.5 * dt);
            step_potential(&mut w, &m, Bracket::Poisson, 0.0, dt);
            step_decoherence(&mut w, d, dt);
            step_kinetic(&mut w, 0.5 * dt);
            let (p, h) = (purity(&w).unwrap(), linear_entropy(&w).unwrap());
            prop_assert!(p <= last_p + 1e-10, "{p} > {last_p}");
            prop_assert!(h >= last_h - 1e-8, "{h} < {last_h}");
            prop_assert!(p <= 1.0 + 1e-6);
            last_p = p;
            last_h = h;
        }
    }

    #[test]
    fn self_divergence_is_zero(x0 in -1.0..1.0f64, steps in 2usize..20) {
        let g = grid(64, 8.0, 1.0);
        let w = packet(&g, x0, 0.2, 0.8, 0.8);
        let spec = EvolutionSpec { bracket: Bracket::Moyal, environment: None, dt: 0.05, n_steps: steps, record_every: 1 };
        let evo = evolve(&w, &PotentialModel::QuarticDoubleWell { a: 1.0, b: 1.0 }, &spec, &Observers::default()).unwrap();
        let rec: &TrajectoryRecord = &evo.record;
        for p in divergence(rec, rec).unwrap() {
            prop_assert_eq!((p.mean_x, p.x2, p.p2), (0.0, 0.0, 0.0));
        }
    }
}
