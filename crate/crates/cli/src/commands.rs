//! The four experiments. Each returns a filled [`Report`]; checks decide the exit status.

use rayon::prelude::*;
use talenti_core::deficits::{self, Competitor, DeficitMode, DeficitSample};
use talenti_core::domains;
use talenti_core::shape_deriv::{self, Objective, Perturbation};
use talenti_core::{radial, sampling, spectral, ConvexIntegrand, Dimension};

use crate::config::{self, ConfigError, FugledeArgs, Result, SharpnessArgs, SpectrumArgs, TalentiArgs};
use crate::output::{Cell, Report};
use crate::row;

fn sharpness_mode(a: &SharpnessArgs) -> Result<DeficitMode> {
    match (&a.p, &a.j) {
        (_, Some(j)) => Ok(DeficitMode::Integrand(config::integrand(j)?)),
        (Some(p), None) if p == "inf" => Ok(DeficitMode::Sup),
        (Some(p), None) => {
            let p: f64 = p.parse().map_err(|_| ConfigError(format!("--p '{p}' is not a number or inf")))?;
            if !(p >= 1.0 && p.is_finite()) {
                return Err(ConfigError(format!("--p {p} must be >= 1")));
            }
            Ok(DeficitMode::P(p))
        }
        (None, None) => Ok(DeficitMode::P(1.0)),
    }
}

pub fn sharpness(a: &SharpnessArgs) -> Result<Report> {
    let (n, m) = a.validate()?;
    let mode = sharpness_mode(a)?;
    let label = mode.to_string();
    let samples: Vec<DeficitSample> = a
        .deltas
        .par_iter()
        .map(|&d| {
            let set = domains::annulus(m, d, n)?;
            deficits::deficit(Competitor::Annulus(&set), &mode, m, n)
        })
        .collect::<talenti_core::Result<_>>()?;

    let mut r = Report::new("sharpness", vec!["delta", "deficit", "mode", "m", "n", "p_or_j", "route"]);
    r.meta("n", n.n());
    r.meta("m", m);
    r.meta("objective", &label);
    for s in &samples {
        r.rows.push(row![s.delta, s.deficit, "annulus", m, n.n(), label.as_str(), s.route]);
    }

    let mut sorted = samples.clone();
    sorted.sort_by(|x, y| x.delta.total_cmp(&y.delta));
    let smallest = &sorted[0];
    r.summary("deficit_over_delta2", smallest.deficit / (smallest.delta * smallest.delta));
    match deficits::exponent_fit(&samples) {
        Ok(fit) => {
            r.summary("slope", fit.slope);
            r.summary("intercept", fit.intercept);
            r.summary("r2", fit.r2);
            r.summary("excluded", fit.excluded);
            r.check("quadratic exponent", (1.9..=2.1).contains(&fit.slope));
        }
        Err(e) => eprintln!("warning: no exponent fit: {e}"),
    }
    if matches!(mode, DeficitMode::P(p) if p == 1.0) {
        r.summary("sharpness_constant", deficits::sharpness_constant(m, n)?);
    }
    r.check("deficits nonnegative", samples.iter().all(|s| s.deficit >= -1e-8));
    r.check("monotone in delta", sorted.windows(2).all(|w| w[1].deficit >= w[0].deficit - 1e-10));
    Ok(r)
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Report> {
    let (n, m, j) = a.validate()?;
    let rep = spectral::coercivity_report(&j, m, n, a.kmax)?;
    let affine = j.is_affine();
    let mut r = Report::new(
        "spectrum",
        vec!["k", "lambda", "inv_lambda", "lambda_system", "t_apply", "shell_lambda", "rho", "gap"],
    );
    r.meta("n", n.n());
    r.meta("m", m);
    r.meta("j", j.label());
    r.meta("K", rep.lambdas.len());

    struct Routes {
        system: f64,
        t: f64,
        shell: f64,
    }
    let ks: Vec<usize> = rep.lambdas.keys().copied().collect();
    let routes: Vec<Option<Routes>> = ks
        .par_iter()
        .map(|&k| {
            if affine {
                return Ok(None);
            }
            Ok(Some(Routes {
                system: spectral::lambda_k_via_system(k, &j, m, n)?,
                t: spectral::operator_T_apply(k, &j, m, n)?,
                shell: spectral::outer_shell_lambda(k, &j, m, n)?,
            }))
        })
        .collect::<talenti_core::Result<_>>()?;

    let mut agree = true;
    for ((&k, &l), routes) in rep.lambdas.iter().zip(&routes) {
        let inv = if l.is_infinite() { 0.0 } else { 1.0 / l };
        let (sys, t, shell) = match routes {
            Some(x) => {
                agree &= ((x.system - l) / l).abs() <= 1e-6 && ((x.t - inv) / inv).abs() <= 1e-6;
                (Cell::from(x.system), Cell::from(x.t), Cell::from(x.shell))
            }
            None => (Cell::Na, Cell::Na, Cell::Na),
        };
        r.rows.push(vec![k.into(), l.into(), inv.into(), sys, t, shell, rep.rho.into(), rep.gap.into()]);
    }
    r.summary("rho", rep.rho);
    r.summary("rho_bound", rep.rho_bound);
    r.summary("gap", rep.gap);
    r.summary("shell_gap", rep.shell_gap);
    r.check("lambda monotone in k", rep.monotone);
    r.check("coercive gap", rep.coercive());
    r.check("rho bound", rep.bound_holds());
    if !affine {
        r.check("routes agree", agree);
    }
    Ok(r)
}

pub fn fuglede(a: &FugledeArgs) -> Result<Report> {
    let (n, m, j) = a.validate()?;
    let obj = match &j {
        Some(j) => Objective::Lp(j.clone()),
        None => Objective::Linf,
    };
    let label = j.as_ref().map_or("linf".to_string(), ConvexIntegrand::label);
    let modes: Vec<usize> = if n.n() == 1 { vec![1] } else { a.modes.clone() };
    if n.n() == 1 && a.modes != [1] {
        eprintln!("warning: only k = 1 exists for n = 1");
    }

    struct Row {
        k: usize,
        fd: shape_deriv::FdReport,
        slope: Option<f64>,
    }
    let rows: Vec<Row> = modes
        .iter()
        .map(|&k| {
            let p = Perturbation::mode(n, k, 0, 1.0)?;
            let fd = shape_deriv::fd_validate(&p, &obj, m, n, &a.steps)?;
            let slope = deficit_slope(&p, &obj, m, &a.deficit_steps)?;
            Ok(Row { k, fd, slope })
        })
        .collect::<talenti_core::Result<_>>()?;

    let mut r = Report::new(
        "fuglede",
        vec!["k", "analytic", "extrapolated", "rel_err", "order", "noise", "inconclusive", "deficit_slope"],
    );
    r.meta("n", n.n());
    r.meta("m", m);
    r.meta("objective", &label);
    r.meta("steps", join(&a.steps));
    let mut certified = true;
    let mut quadratic = true;
    for x in &rows {
        let order = x.fd.order.map_or(Cell::Na, Cell::from);
        let slope = x.slope.map_or(Cell::Na, Cell::from);
        r.rows.push(vec![
            x.k.into(),
            x.fd.analytic.into(),
            x.fd.extrapolated.into(),
            x.fd.rel_err.into(),
            order,
            x.fd.noise.into(),
            x.fd.inconclusive.into(),
            slope,
        ]);
        if x.fd.inconclusive {
            eprintln!("warning: k = {} inconclusive (noise {:.3e})", x.k, x.fd.noise);
        } else {
            certified &= x.fd.rel_err <= 1e-3;
        }
        if let Some(s) = x.slope {
            quadratic &= (1.8..=2.2).contains(&s);
        }
    }
    r.summary("inconclusive", rows.iter().filter(|x| x.fd.inconclusive).count());
    r.summary("max_rel_err", rows.iter().filter(|x| !x.fd.inconclusive).map(|x| x.fd.rel_err).fold(0.0, f64::max));
    r.check("second derivative matches", certified);
    r.check("deficit quadratic in asymmetry", quadratic);
    Ok(r)
}

/// Slope of `log deficit` against `log |E_t Δ B_*|`; `None` with fewer than two usable points.
fn deficit_slope(p: &Perturbation, obj: &Objective, m: f64, ts: &[f64]) -> talenti_core::Result<Option<f64>> {
    let pts: Vec<(f64, f64)> = shape_deriv::deficit_along(p, obj, m, ts)?
        .into_iter()
        .filter(|&(_, d, sd)| d > 0.0 && sd > 0.0)
        .map(|(_, d, sd)| (sd.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(None);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(Some(sxy / sxx))
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

struct Trial {
    n: usize,
    kind: &'static str,
    pieces: usize,
    talenti: deficits::TalentiReport,
    bathtub: deficits::BathtubReport,
}

fn trial(a: &TalentiArgs, i: usize) -> talenti_core::Result<Trial> {
    // one stream per trial so the table does not depend on scheduling
    let mut rng = sampling::rng(a.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
    let n = Dimension::new(a.n.unwrap_or(1 + i % 3))?;
    let pieces = 1 + i % a.pieces;
    let (kind, v) = if i.is_multiple_of(2) {
        ("steps", sampling::random_step_density(&mut rng, n, pieces)?)
    } else {
        ("linear", sampling::random_linear_density(&mut rng, n, pieces)?)
    };
    let talenti = deficits::talenti_check(&v, &[1.0, 2.0, 4.0], 256)?;
    let m = a.m_frac * n.ball_volume();
    let w = sampling::into_class(&v, m)?;
    let bathtub = deficits::bathtub_check(&radial::torsion_profile(n), &w, m)?;
    Ok(Trial { n: n.n(), kind, pieces: v.pieces().len(), talenti, bathtub })
}

pub fn talenti(a: &TalentiArgs) -> Result<Report> {
    a.validate()?;
    let trials: Vec<Trial> = (0..a.trials).into_par_iter().map(|i| trial(a, i)).collect::<talenti_core::Result<_>>()?;
    let mut r = Report::new(
        "talenti",
        vec![
            "trial",
            "n",
            "kind",
            "pieces",
            "pointwise_margin",
            "min_norm_margin",
            "bathtub_defect",
            "bathtub_ratio",
            "pass",
        ],
    );
    r.meta("seed", a.seed);
    r.meta("trials", a.trials);
    r.meta("m_frac", a.m_frac);
    let mut worst_point = f64::INFINITY;
    let mut worst_norm = f64::INFINITY;
    let mut worst_bath = f64::INFINITY;
    let mut ratios = (f64::INFINITY, f64::NEG_INFINITY);
    let mut failures = 0usize;
    for (i, t) in trials.iter().enumerate() {
        let norm = t.talenti.norm_margins.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let defect = t.bathtub.rhs - t.bathtub.lhs;
        let pass = t.talenti.holds && t.bathtub.holds;
        failures += usize::from(!pass);
        worst_point = worst_point.min(t.talenti.pointwise_margin);
        worst_norm = worst_norm.min(norm);
        worst_bath = worst_bath.min(defect);
        if let Some(q) = t.bathtub.ratio {
            ratios = (ratios.0.min(q), ratios.1.max(q));
        }
        let ratio = t.bathtub.ratio.map_or(Cell::Na, Cell::from);
        r.rows.push(vec![
            i.into(),
            t.n.into(),
            t.kind.into(),
            t.pieces.into(),
            t.talenti.pointwise_margin.into(),
            norm.into(),
            defect.into(),
            ratio,
            pass.into(),
        ]);
    }
    r.summary("failures", failures);
    r.summary("worst_pointwise_margin", worst_point);
    r.summary("worst_norm_margin", worst_norm);
    r.summary("worst_bathtub_defect", worst_bath);
    if ratios.0.is_finite() {
        r.summary("bathtub_ratio_min", ratios.0);
        r.summary("bathtub_ratio_max", ratios.1);
    }
    r.check("talenti comparison", trials.iter().all(|t| t.talenti.holds));
    r.check("bathtub inequality", trials.iter().all(|t| t.bathtub.holds));
    Ok(r)
}
