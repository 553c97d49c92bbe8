use proptest::prelude::*;
use talenti_core::domains::{indicator_harmonic_coefficient, StarDomain};
use talenti_core::greens::{self, solve_star_spectral};
use talenti_core::{harmonics, sampling, Dimension};

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_filter("inside 0.95 B_1", |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        r2 < 0.95 * 0.95
    })
}

fn pair() -> impl Strategy<Value = (Dimension, Vec<f64>, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|n| (Just(Dimension::new(n).unwrap()), point(n), point(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn green_is_symmetric_and_positive((n, x, y) in pair()) {
        let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assume!(d > 1e-6);
        let a = greens::greens_eval(&x, &y, n).unwrap();
        let b = greens::greens_eval(&y, &x, n).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn spectral_field_matches_direct_potential(seed in any::<u64>(), kmax in 1usize..=6) {
        let n = Dimension::new(2).unwrap();
        let mut rng = sampling::rng(seed);
        let e = sampling::random_star(&mut rng, n, 0.6, kmax, 0.05).unwrap();
        let field = solve_star_spectral(&e, 320).unwrap();
        let mut prng = sampling::rng(seed ^ 0x5eed);
        use rand::Rng;
        for _ in 0..50 {
            let r: f64 = prng.random_range(0.0..0.95);
            let t: f64 = prng.random_range(0.0..std::f64::consts::TAU);
            let x = [r * t.cos(), r * t.sin()];
            let direct = greens::potential(&e, &x).unwrap();
            let spec = field.eval_point(&x).unwrap();
            prop_assert!((direct - spec).abs() <= 1e-6, "x={x:?}: {direct} vs {spec}");
        }
    }

    #[test]
    fn mode_equations_hold(seed in any::<u64>(), n in 2usize..=3) {
        let n = Dimension::new(n).unwrap();
        let mut rng = sampling::rng(seed);
        let m = 0.4 * n.ball_volume();
        let e = sampling::random_star(&mut rng, n, m, 3, 0.05).unwrap();
        let field = solve_star_spectral(&e, 12).unwrap();
        let nf = n.nf();
        let h = 1e-4;
        // chi_k(r) has kinks at the critical values of R; keep the stencil away from them
        let span = if n.n() == 2 { std::f64::consts::TAU } else { std::f64::consts::PI };
        let rs: Vec<f64> = (0..=4000).map(|i| e.radius(span * i as f64 / 4000.0)).collect();
        let critical: Vec<f64> = rs.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) <= 0.0).map(|w| w[1]).collect();
        let layer: Vec<f64> = (1..20)
            .map(|i| e.min_radius() + (e.max_radius() - e.min_radius()) * i as f64 / 20.0)
            .filter(|r| critical.iter().all(|c| (c - r).abs() > 2e-3))
            .take(2)
            .collect();
        let mut radii = vec![0.2, 0.5, 0.85];
        radii.extend(layer);
        for &(k, idx) in field.modes().iter().take(8) {
            let lam = harmonics::eigenvalue(n, k);
            for &r in &radii {
                let f = |s: f64| field.mode_value(k, idx, s).unwrap();
                let op = |h: f64| {
                    let (fm, f0, fp) = (f(r - h), f(r), f(r + h));
                    -((fp - 2.0 * f0 + fm) / (h * h) + (nf - 1.0) / r * (fp - fm) / (2.0 * h)) + lam / (r * r) * f0
                };
                // one Richardson step removes the h^2 term, which is large near the ends of the layer
                let lhs = (4.0 * op(0.5 * h) - op(h)) / 3.0;
                let rhs = indicator_harmonic_coefficient(&e, k, idx, r).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-6, "k={k} idx={idx} r={r}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn radial_sets_peak_at_the_origin() {
    for n in 1..=3 {
        let n = Dimension::new(n).unwrap();
        let e = StarDomain::ball(n, 0.6).unwrap();
        let (x, v) = greens::sup_norm_via_max(&e).unwrap();
        assert!(x.iter().map(|c| c * c).sum::<f64>().sqrt() <= 1e-8);
        assert!(v > 0.0);
    }
}
