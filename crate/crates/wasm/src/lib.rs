//! Browser bindings: annulus deficit curves, the coercivity spectrum and the torsion-type
//! potential of a perturbed disk. Results cross the boundary as JSON strings.

use serde_json::{json, Value};
use talenti_core::deficits::{self, Competitor, DeficitMode};
use talenti_core::domains::{self, HarmonicCoeffs, StarDomain};
use talenti_core::greens::solve_star_spectral;
use talenti_core::{spectral, ConvexIntegrand, Dimension, Result};
use wasm_bindgen::prelude::*;

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn finish(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn mode(p: f64) -> DeficitMode {
    if p.is_infinite() {
        DeficitMode::Sup
    } else {
        DeficitMode::P(p)
    }
}

pub fn deficit_curve_value(n: usize, m_frac: f64, p: f64, max_delta: f64, count: usize) -> Result<Value> {
    let n = Dimension::new(n)?;
    let m = m_frac * n.ball_volume();
    let mode = mode(p);
    let count = count.clamp(4, 200);
    let mut samples = Vec::with_capacity(count);
    for i in 1..=count {
        let d = max_delta * i as f64 / count as f64;
        let set = domains::annulus(m, d, n)?;
        samples.push(deficits::deficit(Competitor::Annulus(&set), &mode, m, n)?);
    }
    let fit = deficits::exponent_fit(&samples)?;
    let points: Vec<Value> = samples.iter().map(|s| json!([num(s.delta), num(s.deficit)])).collect();
    let constant = if p == 1.0 { num(deficits::sharpness_constant(m, n)?) } else { Value::Null };
    Ok(json!({
        "m": num(m),
        "points": points,
        "slope": num(fit.slope),
        "r2": num(fit.r2),
        "constant": constant,
    }))
}

/// Annulus deficits `J(B_*) - J(A_delta)` for `count` asymmetries up to `max_delta`,
/// with the fitted exponent. `p = Infinity` compares sup norms.
#[wasm_bindgen]
pub fn deficit_curve(n: usize, m_frac: f64, p: f64, max_delta: f64, count: usize) -> String {
    finish(deficit_curve_value(n, m_frac, p, max_delta, count))
}

pub fn spectrum_value(n: usize, m_frac: f64, j: &str, kmax: usize) -> Result<Value> {
    let n = Dimension::new(n)?;
    let m = m_frac * n.ball_volume();
    let j = ConvexIntegrand::parse(j)?;
    j.validate()?;
    let rep = spectral::coercivity_report(&j, m, n, kmax.clamp(1, 32))?;
    let rows: Vec<Value> = rep
        .lambdas
        .iter()
        .map(|(&k, &l)| json!({ "k": k, "lambda": num(l), "inv": num(if l.is_infinite() { 0.0 } else { 1.0 / l }) }))
        .collect();
    Ok(json!({
        "rows": rows,
        "rho": num(rep.rho),
        "rho_bound": num(rep.rho_bound),
        "gap": num(rep.gap),
        "monotone": rep.monotone,
    }))
}

/// Eigenvalues `lambda_k`, `rho` and the coercivity gap for an integrand spec such as
/// `power:2`, `linear` or `poly:1@2,1@3`.
#[wasm_bindgen]
pub fn spectrum(n: usize, m_frac: f64, j: &str, kmax: usize) -> String {
    finish(spectrum_value(n, m_frac, j, kmax))
}

pub fn star_field_value(m_frac: f64, k: usize, eps: f64, grid: usize) -> Result<Value> {
    let n = Dimension::new(2)?;
    let m = m_frac * n.ball_volume();
    let g = HarmonicCoeffs::single(n, k, 0, eps)?;
    let e = domains::project_volume(&StarDomain::new(n.checked_radius(m)?, g)?, m)?;
    let f = solve_star_spectral(&e, (12 * k).max(48))?;
    let grid = grid.clamp(8, 256);
    let mut values = Vec::with_capacity(grid * grid);
    for iy in 0..grid {
        for ix in 0..grid {
            let x = -1.0 + 2.0 * (ix as f64 + 0.5) / grid as f64;
            let y = 1.0 - 2.0 * (iy as f64 + 0.5) / grid as f64;
            let r = x.hypot(y);
            values.push(if r < 1.0 { num(f.eval(r, y.atan2(x))) } else { Value::Null });
        }
    }
    let outline: Vec<Value> = (0..256)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / 256.0;
            let r = e.radius(t);
            json!([num(r * t.cos()), num(r * t.sin())])
        })
        .collect();
    let (x, max) = f.max_point()?;
    let ball = solve_star_spectral(&StarDomain::ball(n, e.r_star())?, 8)?.max_point()?.1;
    Ok(json!({
        "grid": grid,
        "values": values,
        "outline": outline,
        "max_point": [num(x[0]), num(x[1])],
        "max": num(max),
        "max_ball": num(ball),
        "symdiff": num(domains::symdiff_volume(&e, m)?),
    }))
}

/// Potential of `1_E` in the unit disk for `E = {r < r_* + eps Y_k}` (volume-projected),
/// sampled on a `grid x grid` raster, with its maximum point.
#[wasm_bindgen]
pub fn star_field(m_frac: f64, k: usize, eps: f64, grid: usize) -> String {
    finish(star_field_value(m_frac, k, eps, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_is_quadratic() {
        let v = deficit_curve_value(2, 0.5, 1.0, 0.1, 8).unwrap();
        assert!((v["slope"].as_f64().unwrap() - 2.0).abs() < 1e-3);
        let c = 1.0 / (16.0 * std::f64::consts::PI);
        assert!((v["constant"].as_f64().unwrap() - c).abs() < 1e-12);
        assert!(deficit_curve_value(2, 0.5, f64::INFINITY, 0.1, 8).is_ok());
    }

    #[test]
    fn spectrum_and_errors() {
        let v = spectrum_value(2, 0.3, "power:2", 4).unwrap();
        assert!(v["gap"].as_f64().unwrap() > 0.0);
        assert_eq!(v["rows"].as_array().unwrap().len(), 4);
        let bad: Value = serde_json::from_str(&spectrum(2, 0.3, "power:0.5", 4)).unwrap();
        assert!(bad["error"].is_string());
    }

    #[test]
    fn perturbed_disk() {
        let v = star_field_value(0.4, 3, 0.03, 16).unwrap();
        assert_eq!(v["values"].as_array().unwrap().len(), 256);
        assert!(v["max"].as_f64().unwrap() < v["max_ball"].as_f64().unwrap());
        assert!(v["symdiff"].as_f64().unwrap() > 0.0);
    }
}
