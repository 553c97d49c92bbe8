//! Acceptance criteria. Each test writes one `criterion N: PASS|FAIL` line straight to stdout
//! (bypassing the capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use talenti_core::deficits::{self, Competitor, DeficitMode, DeficitSample};
use talenti_core::domains::annulus;
use talenti_core::greens;
use talenti_core::sampling;
use talenti_core::shape_deriv::{self, Objective, Perturbation};
use talenti_core::spectral;
use talenti_core::{ConvexIntegrand, Dimension, RadialDensity};

fn d(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn report(id: usize, pass: bool, detail: &str) {
    let line = format!("criterion {id:>2}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn within(t0: Instant, limit: f64) -> bool {
    t0.elapsed() < Duration::from_secs_f64(limit)
}

/// `(n, m, j)` with `j = s^p`, `p` in {1.5, 2, 4}, `m / omega_n` in {0.1, 0.5, 0.9}, `n` in {2, 3, 4}.
fn grid() -> Vec<(Dimension, f64, ConvexIntegrand)> {
    let mut out = Vec::new();
    for n in [2, 3, 4] {
        for frac in [0.1, 0.5, 0.9] {
            for p in [1.5, 2.0, 4.0] {
                out.push((d(n), frac * d(n).ball_volume(), ConvexIntegrand::power(p).unwrap()));
            }
        }
    }
    out
}

fn fit(points: impl IntoIterator<Item = (f64, f64)>) -> deficits::ExponentFit {
    let samples: Vec<DeficitSample> = points
        .into_iter()
        .map(|(delta, deficit)| DeficitSample { delta, deficit, mode: DeficitMode::P(1.0), route: "sweep" })
        .collect();
    deficits::exponent_fit(&samples).unwrap()
}

#[test]
fn criterion_01_one_dimensional_annulus() {
    let t0 = Instant::now();
    let n = d(1);
    let a = annulus(1.0, 0.2, n).unwrap();
    let s = deficits::deficit(Competitor::Annulus(&a), &DeficitMode::P(1.0), 1.0, n).unwrap();
    let target = 1.0 * 0.2 * 0.2 / 16.0;
    let err = (s.deficit - target).abs();
    let pass = err <= 1e-12 && within(t0, 1.0);
    report(1, pass, &format!("deficit {:.15} target {target} err {err:.1e} in {:?}", s.deficit, t0.elapsed()));
    assert!(pass);
}

#[test]
fn criterion_02_sharpness_constant() {
    let t0 = Instant::now();
    let n = d(2);
    let m = PI / 4.0;
    let deltas = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3];
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&delta| {
            let a = annulus(m, delta, n).unwrap();
            (delta, deficits::deficit(Competitor::Annulus(&a), &DeficitMode::P(1.0), m, n).unwrap().deficit)
        })
        .collect();
    let c = 1.0 / (16.0 * PI);
    let last = pts[pts.len() - 1];
    let rel = (last.1 / (last.0 * last.0) - c).abs() / c;
    let f = fit(pts);
    let pass = rel < 0.01 && (1.99..=2.01).contains(&f.slope) && within(t0, 1.0);
    report(2, pass, &format!("ratio rel err {rel:.2e} at 1e-3, slope {:.5} in {:?}", f.slope, t0.elapsed()));
    assert!(pass);
}

#[test]
fn criterion_03_talenti_suite() {
    let t0 = Instant::now();
    let mut rng = sampling::rng(20260301);
    let ps = [1.0, 2.0, 5.0, f64::INFINITY];
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for i in 0..100 {
        let n = d(1 + i % 3);
        let v = if i % 2 == 0 {
            sampling::random_step_density(&mut rng, n, 2 + i % 6).unwrap()
        } else {
            sampling::random_linear_density(&mut rng, n, 1 + i % 5).unwrap()
        };
        let r = deficits::talenti_check(&v, &ps, 200).unwrap();
        worst = worst.min(r.pointwise_margin).min(r.norm_margins.iter().map(|x| x.1).fold(f64::INFINITY, f64::min));
        if !r.holds {
            violations += 1;
        }
    }
    let pass = violations == 0 && within(t0, 30.0);
    report(3, pass, &format!("{violations} violations in 100, worst margin {worst:.3e} in {:?}", t0.elapsed()));
    assert!(pass);
}

#[test]
fn criterion_04_spectral_identity_k1() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_printed: f64 = 0.0;
    for (n, m, j) in grid() {
        let rs = n.radius_of_volume(m);
        let gap = spectral::psi_tilde_gap(1, &j, m, n).unwrap();
        let lhs = spectral::lambda_k_closed(1, &j, m, n).unwrap() * rs.powi(n.n() as i32 + 1) * gap;
        worst = worst.max((lhs - n.nf()).abs());
        let printed = spectral::outer_shell_lambda(1, &j, m, n).unwrap() * rs.powi(n.n() as i32 + 1) * gap;
        worst_printed = worst_printed.max((printed - n.nf()).abs());
    }
    let pass = worst <= 1e-10 && within(t0, 10.0);
    report(
        4,
        pass,
        &format!(
            "max |lambda_1 r^(n+1) gap - n| = {worst:.3e} (shell-only eigenvalue: {worst_printed:.1e}) in {:?}",
            t0.elapsed()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_route_agreement() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for (n, m, j) in grid() {
        for k in 1..=8 {
            let sys = 1.0 / spectral::lambda_k_via_system(k, &j, m, n).unwrap();
            let t = spectral::operator_T_apply(k, &j, m, n).unwrap();
            worst = worst.max((sys - t).abs() / t.abs());
        }
    }
    let pass = worst <= 1e-6 && within(t0, 30.0);
    report(5, pass, &format!("max relative route difference {worst:.3e} in {:?}", t0.elapsed()));
    assert!(pass);
}

#[test]
fn criterion_06_coercivity_gap() {
    let mut min_gap = f64::INFINITY;
    for (n, m, j) in grid() {
        min_gap = min_gap.min(spectral::coercivity_report(&j, m, n, 1).unwrap().gap);
    }
    let r = spectral::coercivity_report(&ConvexIntegrand::power(2.0).unwrap(), PI / 4.0, d(2), 1).unwrap();
    let reference_ok = (r.gap - 0.04785).abs() <= 1e-4;
    let pass = min_gap > 0.0 && reference_ok;
    report(
        6,
        pass,
        &format!(
            "min gap on grid {min_gap:.4e}; reference gap {:.7} (rho {:.7}, 1/lambda_1 {:.7}) vs 0.04785",
            r.gap,
            r.rho,
            1.0 / r.lambdas[&1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_monotonicity() {
    let mut worst = f64::INFINITY;
    for (n, m, j) in grid() {
        let r = spectral::coercivity_report(&j, m, n, 8).unwrap();
        let l: Vec<f64> = r.lambdas.values().copied().collect();
        for w in l.windows(2) {
            worst = worst.min((w[1] - w[0]) / w[0]);
        }
    }
    let pass = worst >= -1e-10;
    report(7, pass, &format!("min relative increment lambda_(k+1) - lambda_k: {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_08_fuglede_fd() {
    let t0 = Instant::now();
    let n = d(2);
    let m = PI / 4.0;
    let j = ConvexIntegrand::power(2.0).unwrap();
    let obj = Objective::Lp(j);
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let p = Perturbation::mode(n, k, 0, 1.0).unwrap();
        let r = shape_deriv::fd_validate(&p, &obj, m, n, &[2e-2, 1e-2, 5e-3]).unwrap();
        worst = worst.max(r.rel_err);
    }
    let p = Perturbation::mode(n, 2, 0, 1.0).unwrap();
    let rows = shape_deriv::deficit_along(&p, &obj, m, &[0.08, 0.04, 0.02, 0.01]).unwrap();
    let f = fit(rows.iter().map(|&(_, deficit, sd)| (sd, deficit)));
    let pass = worst <= 1e-3 && (1.9..=2.1).contains(&f.slope) && within(t0, 120.0);
    report(8, pass, &format!("max FD rel err {worst:.3e}, deficit slope {:.4} in {:?}", f.slope, t0.elapsed()));
    assert!(pass);
}

#[test]
fn criterion_09_linf_hessian_modes() {
    let t0 = Instant::now();
    let n = d(2);
    let rs: f64 = 0.5;
    let m = PI * rs * rs;
    let modes = shape_deriv::linf_hessian_modes(m, n, 2).unwrap();
    let targets = [(1, -(1.0 / PI) * (1.0 - 0.140625)), (2, -1.0 / PI)];
    let mut detail = String::new();
    let mut pass = true;
    for (k, target) in targets {
        let p = Perturbation::mode(n, k, 0, 1.0).unwrap();
        let r = shape_deriv::fd_validate(&p, &Objective::Linf, m, n, &[2e-2, 1e-2, 5e-3]).unwrap();
        // r.analytic = ||g||^2 h_k
        let h_fd = r.extrapolated / (r.analytic / modes.per_mode[&k]);
        let rel = ((h_fd - target) / target).abs();
        pass &= rel <= 1e-3;
        detail += &format!("h{k}: FD {h_fd:.8} target {target:.8} rel {rel:.2e}; ");
    }
    // n = 1: translation of (-r_*, r_*), L(t) = ||u||_inf + tau |E_t|
    let one = d(1);
    let g = talenti_core::domains::HarmonicCoeffs::raw_mode(one, 1, 0, 1.0).unwrap();
    let p = Perturbation::new(g, true).unwrap();
    let tau = shape_deriv::multiplier_tau_linf(2.0 * rs, one).unwrap();
    let l = |t: f64| {
        let e = p.deformed(2.0 * rs, t).unwrap();
        greens::sup_norm_via_max(&e).unwrap().1 + tau * e.volume()
    };
    let h = 0.1;
    let fd = (l(h) - 2.0 * l(0.0) + l(-h)) / (h * h);
    let target1 = -(1.0 - (1.0 - rs) * (1.0 - rs));
    let err1 = (fd - target1).abs();
    pass &= err1 <= 1e-12 && within(t0, 120.0);
    detail += &format!("n=1: {fd:.15} vs {target1} err {err1:.1e}");
    report(9, pass, &detail);
    assert!(pass);
}

#[test]
fn criterion_10_linf_annulus_sharpness() {
    let deltas = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3];
    let mut pass = true;
    let mut detail = String::new();
    for n in [1, 2, 3] {
        let n = d(n);
        let m = n.ball_volume() / 8.0;
        let pts: Vec<(f64, f64)> = deltas
            .iter()
            .map(|&delta| {
                let a = annulus(m, delta, n).unwrap();
                (delta, deficits::deficit(Competitor::Annulus(&a), &DeficitMode::Sup, m, n).unwrap().deficit)
            })
            .collect();
        let ratios: Vec<f64> = pts.iter().map(|&(x, y)| y / (x * x)).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let f = fit(pts);
        pass &= (1.9..=2.1).contains(&f.slope) && lo > 0.0 && hi.is_finite();
        detail += &format!("n={}: slope {:.4}, deficit/delta^2 in [{lo:.5}, {hi:.5}]; ", n.n(), f.slope);
    }
    report(10, pass, &detail);
    assert!(pass);
}

#[test]
fn criterion_11_p1_worst_set() {
    let n = d(2);
    let mut rng = sampling::rng(11);
    let mut failures = 0;
    let mut margin = f64::INFINITY;
    for frac in [0.1, 0.5, 0.9] {
        let m = frac * PI;
        let rs = n.radius_of_volume(m);
        let amp = 0.3 * rs.min(1.0 - rs);
        for _ in 0..20 {
            let e = sampling::random_star(&mut rng, n, m, 6, amp).unwrap();
            let r = deficits::p1_worst_set_check(&e, m, n).unwrap();
            margin = margin.min(r.j_annulus - r.j_e);
            if !r.holds {
                failures += 1;
            }
        }
    }
    let pass = failures == 0;
    report(11, pass, &format!("{failures} failures in 60, min margin {margin:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_12_bathtub() {
    let n = d(2);
    let m = PI / 4.0;
    let w = talenti_core::radial::torsion_profile(n);
    let mut rng = sampling::rng(12);
    let mut failures = 0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..50 {
        let v: RadialDensity = sampling::random_density_in_class(&mut rng, n, m, 2 + i % 7).unwrap();
        let r = deficits::bathtub_check(&w, &v, m).unwrap();
        if !r.holds {
            failures += 1;
        }
        if let Some(q) = r.ratio {
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    let pass = failures == 0 && lo > 0.0;
    report(12, pass, &format!("{failures} failures in 50, empirical ratio in [{lo:.4e}, {hi:.4e}]"));
    assert!(pass);
}
