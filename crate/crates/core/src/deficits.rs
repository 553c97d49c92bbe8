//! Talenti deficits `J(B_*) - J(E)`, the annulus family, exponent fits and the
//! Talenti and bathtub checks.

use std::fmt;

use crate::dimension::Dimension;
use crate::domains::{symdiff_volume, AnnulusSet, StarDomain};
use crate::error::{domain, Error, Result};
use crate::greens::{self, solve_star_spectral};
use crate::integrand::ConvexIntegrand;
use crate::quad;
use crate::radial::{self, RadialDensity, RadialProfile};
use crate::tolerances;

/// What is compared between `B_*` and the competitor.
#[derive(Debug, Clone)]
pub enum DeficitMode {
    /// `||u_{B_*}||_p - ||u_E||_p`, `p` in `[1, inf)`.
    P(f64),
    /// `int j(u_{B_*}) - int j(u_E)`.
    Integrand(ConvexIntegrand),
    /// `||u_{B_*}||_inf - ||u_E||_inf`.
    Sup,
}

impl fmt::Display for DeficitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeficitMode::P(p) => write!(f, "p={p}"),
            DeficitMode::Integrand(j) => write!(f, "j={j}"),
            DeficitMode::Sup => write!(f, "p=inf"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Competitor<'a> {
    Star(&'a StarDomain),
    Annulus(&'a AnnulusSet),
    Density(&'a RadialDensity),
}

#[derive(Debug, Clone)]
pub struct DeficitSample {
    /// `|E Δ B_*|` for sets, `||V - 1_{B_*}||_1` for densities.
    pub delta: f64,
    pub deficit: f64,
    pub mode: DeficitMode,
    /// `duality`, `radial` or `spectral`/`potential` (star domains).
    pub route: &'static str,
}

/// `(1 - r^2) / (2n)`.
fn torsion(n: Dimension, r: f64) -> f64 {
    (1.0 - r * r) / (2.0 * n.nf())
}

/// `int V w` with `w` the torsion function, exact for piecewise linear `V`.
pub fn torsion_pairing(v: &RadialDensity) -> f64 {
    let n = v.n();
    let ni = n.n() as i32;
    n.sphere_area()
        * v.pieces()
            .iter()
            .map(|p| quad::gauss(p.lo, p.hi, 6, |r| p.at(r) * torsion(n, r) * r.powi(ni - 1)))
            .sum::<f64>()
}

/// `int_E w` with `w` the torsion function.
pub fn torsion_over_star(e: &StarDomain) -> f64 {
    let n = e.n();
    let nf = n.nf();
    let ni = n.n() as i32;
    let ray = |r: f64| (r.powi(ni) / nf - r.powi(ni + 2) / (nf + 2.0)) / (2.0 * nf);
    e.angular_rule(2 * e.g().cutoff() + 4).iter().map(|&(t, w)| w * ray(e.radius(t))).sum()
}

fn ball_density(m: f64, n: Dimension) -> Result<RadialDensity> {
    RadialDensity::ball(n, n.checked_radius(m)?)
}

fn radial_value(u: &RadialProfile, mode: &DeficitMode) -> Result<f64> {
    match mode {
        DeficitMode::P(p) => radial::lp_norm(u, *p),
        DeficitMode::Integrand(j) => Ok(u.integrate(|_, v| j.value(v))),
        DeficitMode::Sup => Ok(u.sup_abs()),
    }
}

fn check_p(mode: &DeficitMode) -> Result<()> {
    if let DeficitMode::P(p) = mode {
        if !(*p >= 1.0) || p.is_infinite() {
            return Err(domain("p", *p, "[1, inf); use DeficitMode::Sup for inf"));
        }
    }
    Ok(())
}

/// `J(B_*) - J(E)` and the asymmetry of `E`.
pub fn deficit(e: Competitor<'_>, mode: &DeficitMode, m: f64, n: Dimension) -> Result<DeficitSample> {
    check_p(mode)?;
    let u0 = radial::ball_source_profile(m, n)?;
    let ball = ball_density(m, n)?;
    let check_volume = |actual: f64| {
        if (actual - m).abs() > 1e-8 * m.max(1.0) {
            Err(Error::VolumeMismatch { expected: m, actual })
        } else {
            Ok(())
        }
    };
    let p1 = matches!(mode, DeficitMode::P(p) if *p == 1.0);
    match e {
        Competitor::Annulus(_) | Competitor::Density(_) => {
            let (v, delta) = match e {
                Competitor::Annulus(a) => (a.density(), a.delta()),
                Competitor::Density(v) => (v.clone(), v.l1_distance(&ball)),
                Competitor::Star(_) => unreachable!(),
            };
            check_volume(v.mass())?;
            if p1 {
                let d = torsion_pairing(&ball) - torsion_pairing(&v);
                return Ok(DeficitSample { delta, deficit: d, mode: mode.clone(), route: "duality" });
            }
            let u = radial::solve_radial_poisson(&v);
            let d = radial_value(&u0, mode)? - radial_value(&u, mode)?;
            Ok(DeficitSample { delta, deficit: d, mode: mode.clone(), route: "radial" })
        }
        Competitor::Star(s) => {
            if s.n() != n {
                return Err(Error::InvalidInput("dimension mismatch".into()));
            }
            check_volume(s.volume())?;
            let delta = symdiff_volume(s, m)?;
            let (value, route) = match mode {
                DeficitMode::P(p) if *p == 1.0 => (torsion_over_star(s), "duality"),
                DeficitMode::P(p) => (greens::lp_norm_field(s, *p)?, "spectral"),
                DeficitMode::Integrand(j) => {
                    let f = solve_star_spectral(s, (8 * s.g().cutoff()).max(48))?;
                    (f.integrate(|u| j.value(u)), "spectral")
                }
                DeficitMode::Sup => (greens::sup_norm_via_max(s)?.1, "potential"),
            };
            let reference = match mode {
                DeficitMode::P(p) if *p == 1.0 => torsion_pairing(&ball),
                _ => radial_value(&u0, mode)?,
            };
            Ok(DeficitSample { delta, deficit: reference - value, mode: mode.clone(), route })
        }
    }
}

/// `|S^{n-1}| / (2n(n+2)) (r_1^{n+2} + r_2^{n+2} - 2 r_*^{n+2})`.
pub fn annulus_deficit_p1_closed(m: f64, delta: f64, n: Dimension) -> Result<f64> {
    if delta == 0.0 {
        n.checked_radius(m)?;
        return Ok(0.0);
    }
    let a = crate::domains::annulus(m, delta, n)?;
    let e = n.n() as i32 + 2;
    let c = n.sphere_area() / (2.0 * n.nf() * (n.nf() + 2.0));
    Ok(c * (a.r1().powi(e) + a.r2().powi(e) - 2.0 * a.r_star().powi(e)))
}

/// `m^{2/n - 1} / (4 n^2 omega_n^{2/n})`, the limit of the `p = 1` annulus deficit over `delta^2`.
pub fn sharpness_constant(m: f64, n: Dimension) -> Result<f64> {
    n.checked_radius(m)?;
    let nf = n.nf();
    Ok(m.powf(2.0 / nf - 1.0) / (4.0 * nf * nf * n.ball_volume().powf(2.0 / nf)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Samples dropped for a non-positive deficit or asymmetry.
    pub excluded: usize,
}

/// Least squares fit of `log deficit` against `log delta`.
pub fn exponent_fit(samples: &[DeficitSample]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.delta > 0.0 && s.deficit > 0.0).map(|s| (s.delta.ln(), s.deficit.ln())).collect();
    let excluded = samples.len() - pts.len();
    if excluded > 0 {
        eprintln!("warning: {excluded} samples with non-positive deficit or delta left out of the fit");
    }
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::Fit(format!("{} usable samples, need 4 distinct deltas", distinct.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ExponentFit { slope, intercept, r2, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstSetReport {
    pub delta: f64,
    pub j_e: f64,
    pub j_annulus: f64,
    pub holds: bool,
}

/// `J_1(E) <= J_1(A_delta)` with `delta = |E Δ B_*|`.
pub fn p1_worst_set_check(e: &StarDomain, m: f64, n: Dimension) -> Result<WorstSetReport> {
    if (e.volume() - m).abs() > 1e-8 * m.max(1.0) {
        return Err(Error::VolumeMismatch { expected: m, actual: e.volume() });
    }
    let delta = symdiff_volume(e, m)?;
    let j_e = torsion_over_star(e);
    let j_ball = torsion_pairing(&ball_density(m, n)?);
    let j_annulus = j_ball - annulus_deficit_p1_closed(m, delta, n)?;
    Ok(WorstSetReport { delta, j_e, j_annulus, holds: j_e <= j_annulus + tolerances::TALENTI })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathtubReport {
    pub level: f64,
    /// `int w V`
    pub lhs: f64,
    /// `int w 1_{w > t_*}`
    pub rhs: f64,
    /// `||V - 1_{w > t_*}||_1`
    pub l1: f64,
    /// `(rhs - lhs) / l1^2`, `None` when `V` is the optimal set.
    pub ratio: Option<f64>,
    pub min_slope: f64,
    pub holds: bool,
}

/// `{w > t}` as a density, from the crossings of `w = t`.
fn superlevel_density(w: &RadialProfile, t: f64) -> Result<RadialDensity> {
    let n = w.n();
    let samples = 4096;
    let mut breaks = vec![0.0];
    let mut values = Vec::new();
    let f = |r: f64| w.value(r) - t;
    let mut inside = f(0.0) > 0.0;
    values.push(if inside { 1.0 } else { 0.0 });
    let mut r0 = 0.0;
    for i in 1..=samples {
        let r1 = i as f64 / samples as f64;
        let now = f(r1) > 0.0;
        if now != inside {
            let (mut a, mut b) = (r0, r1);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if (f(mid) > 0.0) == inside {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            breaks.push(0.5 * (a + b));
            inside = now;
            values.push(if inside { 1.0 } else { 0.0 });
        }
        r0 = r1;
    }
    breaks.push(1.0);
    RadialDensity::steps(n, &breaks, &values)
}

/// `int_{B_1} w V` on the common refinement of the pieces.
fn pairing(w: &RadialProfile, v: &RadialDensity) -> f64 {
    let n = w.n();
    let ni = n.n() as i32;
    let mut breaks = w.breaks();
    breaks.extend(v.pieces().iter().flat_map(|p| [p.lo, p.hi]));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    n.sphere_area() * quad::composite(&breaks, 2, 20, |r| w.value(r) * v.eval(r) * r.powi(ni - 1))
}

/// Bathtub principle: `int w V <= int w 1_{w > t_*}` for `V` in `M_m`, with the empirical
/// quantitative ratio.
pub fn bathtub_check(w: &RadialProfile, v: &RadialDensity, m: f64) -> Result<BathtubReport> {
    if (v.mass() - m).abs() > 1e-8 * m.max(1.0) {
        return Err(Error::VolumeMismatch { expected: m, actual: v.mass() });
    }
    let level = radial::find_level(w, m)?;
    let chi = superlevel_density(w, level)?;
    let crossings: Vec<f64> = chi.pieces().iter().skip(1).map(|p| p.lo).collect();
    let min_slope = crossings.iter().map(|&r| w.derivative(r).abs()).fold(f64::INFINITY, f64::min);
    if !(min_slope > 0.0) {
        return Err(Error::DegenerateLevel { level, target: m });
    }
    let lhs = pairing(w, v);
    let rhs = pairing(w, &chi);
    let l1 = v.l1_distance(&chi);
    let defect = rhs - lhs;
    let ratio = if l1 > 1e-12 { Some(defect / (l1 * l1)) } else { None };
    Ok(BathtubReport { level, lhs, rhs, l1, ratio, min_slope, holds: defect >= -tolerances::TALENTI })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TalentiReport {
    /// `min_r (u_{V#}(r) - u_V#(r))` over the sample radii.
    pub pointwise_margin: f64,
    /// `(p, ||u_{V#}||_p - ||u_V||_p)`.
    pub norm_margins: Vec<(f64, f64)>,
    pub holds: bool,
}

/// Pointwise comparison `u_V^# <= u_{V^#}` and the induced `L^p` inequalities.
pub fn talenti_check(v: &RadialDensity, ps: &[f64], samples: usize) -> Result<TalentiReport> {
    let u = radial::solve_radial_poisson(v);
    let us = radial::solve_radial_poisson(&radial::schwarz_rearrangement(v));
    let rearr = radial::decreasing_rearrangement(&u);
    let mut margin = f64::INFINITY;
    for i in 0..=samples {
        let r = i as f64 / samples.max(1) as f64;
        margin = margin.min(us.value(r) - rearr.sharp(r));
    }
    let norm_margins =
        ps.iter().map(|&p| Ok((p, radial::lp_norm(&us, p)? - radial::lp_norm(&u, p)?))).collect::<Result<Vec<_>>>()?;
    let tol = tolerances::TALENTI;
    let holds = margin >= -tol && norm_margins.iter().all(|&(_, d)| d >= -tol);
    Ok(TalentiReport { pointwise_margin: margin, norm_margins, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{annulus, project_volume, HarmonicCoeffs};
    use std::f64::consts::PI;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn one_dimensional_annulus() {
        let n = d(1);
        let a = annulus(1.0, 0.2, n).unwrap();
        let s = deficit(Competitor::Annulus(&a), &DeficitMode::P(1.0), 1.0, n).unwrap();
        assert!((s.deficit - 0.0025).abs() < 1e-12 && s.route == "duality");
        assert!((annulus_deficit_p1_closed(1.0, 0.2, n).unwrap() - 0.0025).abs() < 1e-15);
        assert!((sharpness_constant(1.0, n).unwrap() - 0.0625).abs() < 1e-15);
        // the radial route gives the same number
        let u = radial::solve_radial_poisson(&a.density());
        let u0 = radial::ball_source_profile(1.0, n).unwrap();
        let r = radial::lp_norm(&u0, 1.0).unwrap() - radial::lp_norm(&u, 1.0).unwrap();
        assert!((r - 0.0025).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_duality() {
        let n = d(2);
        let v = annulus_deficit_p1_closed(PI / 4.0, 0.1, n).unwrap();
        assert!((v - 0.00019894367886488226).abs() < 1e-15);
        let a = annulus(PI / 4.0, 0.1, n).unwrap();
        let s = deficit(Competitor::Annulus(&a), &DeficitMode::P(1.0), PI / 4.0, n).unwrap();
        assert!((s.deficit - v).abs() < 1e-12);
        assert!((sharpness_constant(2.3, n).unwrap() - 1.0 / (16.0 * PI)).abs() < 1e-15);
        assert_eq!(annulus_deficit_p1_closed(PI / 4.0, 0.0, n).unwrap(), 0.0);
    }

    #[test]
    fn ball_has_zero_deficit() {
        let n = d(2);
        let b = StarDomain::ball(n, 0.5).unwrap();
        for mode in [DeficitMode::P(1.0), DeficitMode::P(2.0), DeficitMode::Sup] {
            let s = deficit(Competitor::Star(&b), &mode, PI / 4.0, n).unwrap();
            assert!(s.delta.abs() < 1e-14 && s.deficit.abs() < 1e-10, "{mode}: {}", s.deficit);
        }
        let v = RadialDensity::ball(n, 0.5).unwrap();
        let s = deficit(Competitor::Density(&v), &DeficitMode::P(3.0), PI / 4.0, n).unwrap();
        assert!(s.deficit.abs() < 1e-12);
        let wrong = StarDomain::ball(n, 0.4).unwrap();
        assert!(matches!(
            deficit(Competitor::Star(&wrong), &DeficitMode::P(1.0), PI / 4.0, n),
            Err(Error::VolumeMismatch { .. })
        ));
    }

    #[test]
    fn mixed_density_has_positive_deficit() {
        let n = d(2);
        let m = PI / 4.0;
        let eps = 0.1;
        // (1 - eps) 1_{B_*} + c 1_{B_1 \ B_*} with the mass restored
        let c = eps * m / (PI - m);
        let v = RadialDensity::steps(n, &[0.0, 0.5, 1.0], &[1.0 - eps, c]).unwrap();
        for mode in [DeficitMode::P(1.0), DeficitMode::P(2.0), DeficitMode::Sup] {
            let s = deficit(Competitor::Density(&v), &mode, m, n).unwrap();
            assert!(s.deficit > 0.0, "{mode}");
            assert!((s.delta - 2.0 * eps * m).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_exponent() {
        let samples: Vec<DeficitSample> = [0.1, 0.05, 0.02, 0.01]
            .iter()
            .map(|&x| DeficitSample { delta: x, deficit: 3.0 * x * x, mode: DeficitMode::P(1.0), route: "synthetic" })
            .collect();
        let f = exponent_fit(&samples).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(exponent_fit(&samples[..3]).is_err());
    }

    #[test]
    fn worst_set() {
        let n = d(2);
        let m = PI / 4.0;
        let g = HarmonicCoeffs::raw_mode(n, 1, 0, 0.1).unwrap();
        let e = project_volume(&StarDomain::new(0.5, g).unwrap(), m).unwrap();
        let r = p1_worst_set_check(&e, m, n).unwrap();
        assert!(r.holds && r.j_e < r.j_annulus);
    }

    #[test]
    fn bathtub_with_annulus() {
        let n = d(2);
        let m = PI / 4.0;
        let w = radial::torsion_profile(n);
        let a = annulus(m, 0.1, n).unwrap();
        let r = bathtub_check(&w, &a.density(), m).unwrap();
        assert!(r.holds);
        assert!((r.rhs - r.lhs - annulus_deficit_p1_closed(m, 0.1, n).unwrap()).abs() < 1e-13);
        assert!((r.l1 - 0.1).abs() < 1e-12);
        let same = bathtub_check(&w, &RadialDensity::ball(n, 0.5).unwrap(), m).unwrap();
        assert!(same.ratio.is_none() && same.holds);
    }

    #[test]
    fn talenti_on_a_hollow_density() {
        let n = d(2);
        let v = RadialDensity::steps(n, &[0.0, 0.3, 0.6, 1.0], &[0.2, 1.0, 0.5]).unwrap();
        let r = talenti_check(&v, &[1.0, 2.0, 5.0, f64::INFINITY], 64).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.norm_margins.iter().all(|&(_, d)| d > 0.0));
    }
}
