//! Green's function of the unit ball and potentials of star-shaped sets.
//!
//! `G(x, y) = zeta(|y - x|) - zeta(|x| |y - x~|)`, `x~ = x / |x|^2`, written through
//! `|x|^2 |y - x~|^2 = |x|^2 |y|^2 - 2 x.y + 1` so that `x = 0` needs no special case.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::dimension::Dimension;
use crate::domains::StarDomain;
use crate::error::{domain, Error, Result};
use crate::quad;
use crate::tolerances;

pub use crate::field::{solve_star_spectral, StarField};

/// Fundamental solution of `-Delta` in `R^n`, `n >= 2`.
pub fn zeta(r: f64, n: Dimension) -> Result<f64> {
    check_zeta(r, n)?;
    Ok(zeta_raw(r, n))
}

/// `zeta'(r) = -1 / P(B_r)`.
pub fn zeta_d1(r: f64, n: Dimension) -> Result<f64> {
    check_zeta(r, n)?;
    Ok(zeta_d1_raw(r, n))
}

pub fn zeta_d2(r: f64, n: Dimension) -> Result<f64> {
    check_zeta(r, n)?;
    Ok(zeta_d2_raw(r, n))
}

fn check_zeta(r: f64, n: Dimension) -> Result<()> {
    if n.n() < 2 {
        return Err(domain("n", n.nf(), "n >= 2 (use the explicit kernel for n = 1)"));
    }
    if !(r > 0.0) {
        return Err(domain("r", r, "r > 0"));
    }
    Ok(())
}

fn zeta_raw(r: f64, n: Dimension) -> f64 {
    match n.n() {
        2 => -r.ln() / (2.0 * PI),
        k => r.powi(2 - k as i32) / (n.nf() * (n.nf() - 2.0) * n.ball_volume()),
    }
}

fn zeta_d1_raw(r: f64, n: Dimension) -> f64 {
    -1.0 / n.perimeter(r)
}

fn zeta_d2_raw(r: f64, n: Dimension) -> f64 {
    (n.nf() - 1.0) / (n.sphere_area() * r.powi(n.n() as i32))
}

/// Which argument of `G` a gradient is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    X,
    Y,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_points(x: &[f64], y: &[f64], n: Dimension) -> Result<()> {
    if x.len() != n.n() || y.len() != n.n() {
        return Err(Error::InvalidInput(format!("points must have {} coordinates", n.n())));
    }
    if norm(x) > 1.0 || norm(y) > 1.0 {
        return Err(Error::InvalidInput("points must lie in the closed unit ball".into()));
    }
    if x == y {
        return Err(Error::Singularity);
    }
    Ok(())
}

/// `s2 = |x| |y - x~|`.
fn reflected_distance(x: &[f64], y: &[f64]) -> f64 {
    (dot(x, x) * dot(y, y) - 2.0 * dot(x, y) + 1.0).max(0.0).sqrt()
}

fn green_unchecked(x: &[f64], y: &[f64], n: Dimension) -> f64 {
    if n.n() == 1 {
        let (lo, hi) = if x[0] <= y[0] { (x[0], y[0]) } else { (y[0], x[0]) };
        return 0.5 * (1.0 - hi) * (1.0 + lo);
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    zeta_raw(norm(&d), n) - zeta_raw(reflected_distance(x, y), n)
}

pub fn greens_eval(x: &[f64], y: &[f64], n: Dimension) -> Result<f64> {
    check_points(x, y, n)?;
    Ok(green_unchecked(x, y, n))
}

fn green_grad_x(x: &[f64], y: &[f64], n: Dimension) -> Vec<f64> {
    if n.n() == 1 {
        return vec![if x[0] < y[0] { 0.5 * (1.0 - y[0]) } else { -0.5 * (1.0 + y[0]) }];
    }
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let d = norm(&diff);
    let s2 = reflected_distance(x, y);
    let yy = dot(y, y);
    let c1 = zeta_d1_raw(d, n) / d;
    let c2 = zeta_d1_raw(s2, n) / s2;
    (0..n.n()).map(|i| c1 * diff[i] - c2 * (yy * x[i] - y[i])).collect()
}

/// `grad_x G` or `grad_y G`.
pub fn greens_grad(x: &[f64], y: &[f64], n: Dimension, which: Variable) -> Result<Vec<f64>> {
    check_points(x, y, n)?;
    Ok(match which {
        Variable::X => green_grad_x(x, y, n),
        Variable::Y => green_grad_x(y, x, n),
    })
}

fn green_hessian_x(x: &[f64], y: &[f64], n: Dimension) -> DMatrix<f64> {
    let dim = n.n();
    if dim == 1 {
        return DMatrix::zeros(1, 1);
    }
    let diff = DVector::from_iterator(dim, x.iter().zip(y).map(|(a, b)| a - b));
    let d = diff.norm();
    let e = &diff / d;
    let id = DMatrix::<f64>::identity(dim, dim);
    let ee = &e * e.transpose();
    let mut h = &ee * zeta_d2_raw(d, n) + (&id - &ee) * (zeta_d1_raw(d, n) / d);
    let s2 = reflected_distance(x, y);
    let yy = dot(y, y);
    let v = DVector::from_iterator(dim, (0..dim).map(|i| yy * x[i] - y[i]));
    let vv = &v * v.transpose();
    h -= &vv * (zeta_d2_raw(s2, n) / (s2 * s2)) + (&id * (yy / s2) - &vv / (s2 * s2 * s2)) * zeta_d1_raw(s2, n);
    h
}

/// `D_x^2 G(x, y)`.
pub fn greens_hessian(x: &[f64], y: &[f64], n: Dimension) -> Result<DMatrix<f64>> {
    check_points(x, y, n)?;
    Ok(green_hessian_x(x, y, n))
}

/// `u_{B_rho}` at radius `r` (`rho^n / n` times the flux kernel outside, quadratic inside).
fn ball_potential(n: Dimension, rho: f64, r: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let edge = rho.powi(n.n() as i32) / n.nf() * n.flux_kernel(rho);
    if r >= rho {
        rho.powi(n.n() as i32) / n.nf() * n.flux_kernel(r)
    } else {
        edge + (rho * rho - r * r) / (2.0 * n.nf())
    }
}

/// Potential of the interval `(-b, a)` in `n = 1`.
fn interval_potential(a: f64, b: f64, x: f64) -> f64 {
    let d = Dimension::new(1).unwrap();
    let g = |y: f64| green_unchecked(&[x], &[y], d);
    let lo = -b;
    if x <= lo || x >= a {
        return quad::gauss(lo, a, 4, g);
    }
    quad::gauss(lo, x, 4, g) + quad::gauss(x, a, 4, g)
}

fn interval_ends(e: &StarDomain) -> (f64, f64) {
    (e.radius(0.0), e.radius(PI))
}

/// `x = 0` test: the direction of the point in the angular coordinate of `E`.
fn polar_angle(x: &[f64]) -> f64 {
    match x.len() {
        2 => x[1].atan2(x[0]),
        3 => {
            let r = norm(x);
            if r == 0.0 {
                0.0
            } else {
                (x[2] / r).clamp(-1.0, 1.0).acos()
            }
        }
        _ => 0.0,
    }
}

/// Panels on `[0, pi]` graded geometrically towards 0.
fn graded_half(levels: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (0..=levels).rev().map(|j| PI * 0.25f64.powi(j as i32)).collect();
    b.insert(0, 0.0);
    // split the coarse tail so band-limited boundaries stay resolved
    let mut out = Vec::new();
    for w in b.windows(2) {
        let pieces = ((w[1] - w[0]) / 0.3).ceil().max(1.0) as usize;
        for i in 0..pieces {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / pieces as f64);
        }
    }
    out.push(PI);
    out
}

/// `int_rho^R zeta(|x - s omega|) s^{n-1} ds` in closed form, with `c = x.omega`,
/// `e^2 = |x|^2 - c^2`.
fn singular_ray(n: Dimension, rho: f64, big_r: f64, c: f64, e2: f64) -> f64 {
    let e2 = e2.max(0.0);
    match n.n() {
        2 => {
            let e = e2.sqrt();
            let anti = |s: f64| {
                let t = s - c;
                let q = t * t + e2;
                let qlq = if q > 0.0 { q * q.ln() } else { 0.0 };
                let tlq = if t != 0.0 { t * q.ln() } else { 0.0 };
                let at = if e > 0.0 { 2.0 * e * (t / e).atan() } else { 0.0 };
                0.5 * (qlq - q) + c * (tlq - 2.0 * t + at)
            };
            -(anti(big_r) - anti(rho)) / (4.0 * PI)
        }
        _ => {
            let anti = |s: f64| {
                let t = s - c;
                let h = (t * t + e2).sqrt();
                if h == 0.0 {
                    return 0.0;
                }
                let l = if t >= 0.0 { (t + h).ln() } else { (e2 / (h - t)).ln() };
                0.5 * (t * h - e2 * l) + 2.0 * c * h + c * c * l
            };
            (anti(big_r) - anti(rho)) / (4.0 * PI)
        }
    }
}

/// `u_E(x) = int_E G(x, y) dy`.
///
/// Uses `E = B_{|x|} ± {|x| < |y| < R}`: the ball part is explicit, and along each ray the
/// kernel singularity is integrated in closed form while the reflected part is smooth.
/// The angular rule is graded towards the direction of `x`. In `n = 3` this needs `x` on the
/// symmetry axis unless `x` lies well inside the core `|x| < min R`.
pub fn potential(e: &StarDomain, x: &[f64]) -> Result<f64> {
    let n = e.n();
    if x.len() != n.n() {
        return Err(Error::InvalidInput(format!("points must have {} coordinates", n.n())));
    }
    let r = norm(x);
    if r >= 1.0 {
        return Ok(0.0);
    }
    if n.n() == 1 {
        let (a, b) = interval_ends(e);
        return Ok(interval_potential(a, b, x[0]));
    }
    if n.n() == 3 && (x[0] != 0.0 || x[1] != 0.0) {
        if r < 0.75 * e.min_radius() {
            return Ok(core_fields(e, x, false).0);
        }
        return Err(Error::InvalidInput(
            "off-axis points near the boundary in n = 3 are evaluated through solve_star_spectral".into(),
        ));
    }
    let theta_x = polar_angle(x);
    let sign_axis = if n.n() == 3 && x[2] < 0.0 { -1.0 } else { 1.0 };
    let ni = n.n() as i32;
    let ray = |theta: f64, delta: f64| {
        let big_r = e.radius(theta);
        let (sin_delta, cos_delta) = delta.sin_cos();
        let c = r * cos_delta;
        let e2 = (r * sin_delta).powi(2);
        let sing = singular_ray(n, r, big_r, c, e2);
        let (lo, hi) = (r.min(big_r), r.max(big_r));
        let orient = if big_r >= r { 1.0 } else { -1.0 };
        let pieces = ((hi - lo) / 0.2).ceil().max(1.0) as usize;
        let smooth = quad::composite(&[lo, hi], pieces, 16, |s| {
            let s2 = (r * r * s * s - 2.0 * r * s * cos_delta + 1.0).sqrt();
            zeta_raw(s2, n) * s.powi(ni - 1)
        });
        sing - orient * smooth
    };
    let mut acc = 0.0;
    let breaks = graded_half(14);
    if n.n() == 2 {
        for side in [1.0, -1.0] {
            for w in breaks.windows(2) {
                acc += quad::gauss(w[0], w[1], 16, |delta| ray(theta_x + side * delta, delta));
            }
        }
    } else {
        // colatitude measured from the pole nearest to x
        for w in breaks.windows(2) {
            acc += quad::gauss(w[0], w[1], 16, |delta| {
                let theta = if sign_axis > 0.0 { delta } else { PI - delta };
                2.0 * PI * delta.sin() * ray(theta, delta)
            });
        }
    }
    Ok(ball_potential(n, r, r) + acc)
}

/// Directions `(unit vector, angular coordinate of E, weight)` covering `S^{n-1}`.
fn full_directions(e: &StarDomain) -> Vec<(Vec<f64>, f64, f64)> {
    let n = e.n();
    let band = e.g().cutoff();
    match n.n() {
        2 => {
            let m = (16 * band + 256).max(256);
            (0..m)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / m as f64;
                    (vec![t.cos(), t.sin()], t, 2.0 * PI / m as f64)
                })
                .collect()
        }
        _ => {
            let mu_pts = 8 * band + 64;
            let az = 64;
            let mut out = Vec::with_capacity(mu_pts * az);
            for (mu, w) in quad::nodes(-1.0, 1.0, mu_pts) {
                let st = (1.0 - mu * mu).max(0.0).sqrt();
                let theta = mu.acos();
                for j in 0..az {
                    let p = 2.0 * PI * j as f64 / az as f64;
                    out.push((vec![st * p.cos(), st * p.sin(), mu], theta, w * 2.0 * PI / az as f64));
                }
            }
            out
        }
    }
}

/// Value, gradient and Hessian of `u_E` at a point of the core `|x| < min R`.
///
/// `E = B_rho ∪ {rho < |y| < R}` with `rho` just below `min R`; every kernel evaluation is
/// then away from the diagonal.
fn core_fields(e: &StarDomain, x: &[f64], derivatives: bool) -> (f64, Vec<f64>, DMatrix<f64>) {
    let n = e.n();
    let dim = n.n();
    let rho = e.min_radius() * (1.0 - 1e-6);
    let r = norm(x);
    let ni = dim as i32;
    let mut value = ball_potential(n, rho, r);
    let mut grad: Vec<f64> = x.iter().map(|v| -v / n.nf()).collect();
    let mut hess = -DMatrix::<f64>::identity(dim, dim) / n.nf();
    if !derivatives {
        grad.clear();
    }
    for (omega, theta, w) in full_directions(e) {
        let big_r = e.radius(theta);
        if big_r <= rho {
            continue;
        }
        for (s, ws) in quad::nodes(rho, big_r, 20) {
            let y: Vec<f64> = omega.iter().map(|o| o * s).collect();
            let weight = w * ws * s.powi(ni - 1);
            value += weight * green_unchecked(x, &y, n);
            if derivatives {
                let g = green_grad_x(x, &y, n);
                for i in 0..dim {
                    grad[i] += weight * g[i];
                }
                hess += green_hessian_x(x, &y, n) * weight;
            }
        }
    }
    (value, grad, hess)
}

/// `grad u_E(x)` and `D^2 u_E(x)` for `|x| < 0.8 min R`.
pub fn potential_derivatives(e: &StarDomain, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = e.n();
    if x.len() != n.n() {
        return Err(Error::InvalidInput(format!("points must have {} coordinates", n.n())));
    }
    if n.n() == 1 {
        let (a, b) = interval_ends(e);
        if !(x[0] > -b && x[0] < a) {
            return Err(Error::InvalidInput("derivatives are taken inside the interval".into()));
        }
        let g = 0.25 * ((1.0 - b).powi(2) - (1.0 - a).powi(2) - 4.0 * x[0]);
        return Ok((vec![g], DMatrix::from_element(1, 1, -1.0)));
    }
    if norm(x) >= 0.8 * e.min_radius() {
        return Err(Error::InvalidInput("potential derivatives are only needed in the core |x| < min R".into()));
    }
    let (_, g, h) = core_fields(e, x, true);
    Ok((g, h))
}

/// Maximum point `x_E` of `u_E` and `||u_E||_inf`, by Newton iteration from the origin.
pub fn sup_norm_via_max(e: &StarDomain) -> Result<(Vec<f64>, f64)> {
    let n = e.n();
    if n.n() == 1 {
        let (a, b) = interval_ends(e);
        let x = 0.25 * ((1.0 - b).powi(2) - (1.0 - a).powi(2));
        return Ok((vec![x], interval_potential(a, b, x)));
    }
    let safe = 0.5 * e.r_star().min(e.min_radius());
    let newton = |start: Vec<f64>| -> Option<Vec<f64>> {
        let mut x = start;
        for _ in 0..40 {
            let (g, h) = potential_derivatives(e, &x).ok()?;
            let step = if n.n() == 3 {
                // zonal sets: the maximum sits on the symmetry axis
                vec![0.0, 0.0, g[2] / h[(2, 2)]]
            } else {
                let lu = h.clone().lu();
                let s = lu.solve(&DVector::from_vec(g.clone()))?;
                s.iter().copied().collect()
            };
            for i in 0..x.len() {
                x[i] -= step[i];
            }
            if norm(&x) > safe {
                return None;
            }
            if norm(&step) < tolerances::NEWTON_STEP {
                return Some(x);
            }
        }
        None
    };
    let origin = vec![0.0; n.n()];
    if let Some(x) = newton(origin.clone()) {
        let v = potential(e, &x)?;
        return Ok((x, v));
    }
    // grid search over B_{r_*/2}, then polish
    let mut best = (f64::NEG_INFINITY, origin);
    let steps = 10;
    let h = safe / steps as f64;
    let pts: Vec<Vec<f64>> = if n.n() == 2 {
        let mut v = Vec::new();
        for i in -steps..=steps {
            for j in -steps..=steps {
                let p = vec![i as f64 * h, j as f64 * h];
                if norm(&p) < safe {
                    v.push(p);
                }
            }
        }
        v
    } else {
        (-steps..steps + 1).map(|i| vec![0.0, 0.0, i as f64 * h]).collect()
    };
    for p in pts {
        let v = potential(e, &p)?;
        if v > best.0 {
            best = (v, p);
        }
    }
    match newton(best.1.clone()) {
        Some(x) => {
            let v = potential(e, &x)?;
            Ok((x, v))
        }
        None => Err(Error::Maximization { best: best.0, at: best.1 }),
    }
}

/// `||u_E||_{L^p(B_1)}` by tensor quadrature of the spectral field.
pub fn lp_norm_field(e: &StarDomain, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(domain("p", p, "[1, inf)"));
    }
    let k = (8 * e.g().cutoff()).max(48);
    let field = solve_star_spectral(e, k)?;
    Ok(field.integrate(|u| u.abs().powf(p)).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{project_volume, HarmonicCoeffs};
    use crate::radial;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(0.5, d(2)).unwrap() - 2f64.ln() / (2.0 * PI)).abs() < 1e-15);
        assert!((zeta(1.0, d(3)).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        for n in 2..6 {
            let r = 0.37;
            assert!((zeta_d1(r, d(n)).unwrap() + 1.0 / d(n).perimeter(r)).abs() < 1e-14);
            let h = 1e-6;
            let fd = (zeta(r + h, d(n)).unwrap() - zeta(r - h, d(n)).unwrap()) / (2.0 * h);
            assert!((fd - zeta_d1(r, d(n)).unwrap()).abs() < 1e-8);
        }
        assert!(zeta(0.0, d(2)).is_err());
        assert!(zeta(0.5, d(1)).is_err());
    }

    #[test]
    fn green_basics() {
        let n = d(2);
        assert!((greens_eval(&[0.0, 0.0], &[0.3, 0.4], n).unwrap() - 2f64.ln() / (2.0 * PI)).abs() < 1e-15);
        assert!(greens_eval(&[0.1, 0.2], &[0.1, 0.2], n) == Err(Error::Singularity));
        let x = [0.2, -0.3];
        let y = [-0.5, 0.1];
        assert!((greens_eval(&x, &y, n).unwrap() - greens_eval(&y, &x, n).unwrap()).abs() < 1e-15);
        assert!(greens_eval(&x, &[0.6, 0.8], n).unwrap().abs() < 1e-15);
        // gradients against central differences
        for n in [2usize, 3] {
            let dn = d(n);
            let x: Vec<f64> = [0.21, -0.13, 0.3][..n].to_vec();
            let y: Vec<f64> = [-0.4, 0.25, 0.1][..n].to_vec();
            for which in [Variable::X, Variable::Y] {
                let g = greens_grad(&x, &y, dn, which).unwrap();
                for i in 0..n {
                    let h = 1e-5;
                    let (mut xp, mut xm, mut yp, mut ym) = (x.clone(), x.clone(), y.clone(), y.clone());
                    let fd = if which == Variable::X {
                        xp[i] += h;
                        xm[i] -= h;
                        (greens_eval(&xp, &y, dn).unwrap() - greens_eval(&xm, &y, dn).unwrap()) / (2.0 * h)
                    } else {
                        yp[i] += h;
                        ym[i] -= h;
                        (greens_eval(&x, &yp, dn).unwrap() - greens_eval(&x, &ym, dn).unwrap()) / (2.0 * h)
                    };
                    assert!(((fd - g[i]) / g[i]).abs() < 1e-6, "n={n} {which:?} {i}");
                }
            }
            let hess = greens_hessian(&x, &y, dn).unwrap();
            for i in 0..n {
                let h = 1e-5;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                let gp = greens_grad(&xp, &y, dn, Variable::X).unwrap();
                let gm = greens_grad(&xm, &y, dn, Variable::X).unwrap();
                for j in 0..n {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd - hess[(j, i)]).abs() < 1e-6 * (1.0 + fd.abs()));
                }
            }
        }
    }

    #[test]
    fn radial_gradient_identity() {
        // grad_y G(0, y) . y/|y| = zeta'(|y|), and the stated closed forms on |y| = r_*
        let n = d(2);
        for r in [0.2, 0.5, 0.8] {
            let y = [r * 0.6, r * 0.8];
            let g = greens_grad(&[0.0, 0.0], &y, n, Variable::Y).unwrap();
            let radial = (g[0] * y[0] + g[1] * y[1]) / r;
            assert!((radial - zeta_d1(r, n).unwrap()).abs() < 1e-14);
            let gx = greens_grad(&[0.0, 0.0], &y, n, Variable::X).unwrap();
            let c = -(zeta_d1(r, n).unwrap() - zeta_d1(1.0, n).unwrap() * r);
            assert!((gx[0] - c * 0.6).abs() < 1e-14 && (gx[1] - c * 0.8).abs() < 1e-14);
        }
    }

    #[test]
    fn one_dimensional_kernel() {
        let n = d(1);
        let v = quad::gauss(-1.0, 0.3, 4, |y| greens_eval(&[0.3], &[y], n).unwrap_or(0.0))
            + quad::gauss(0.3, 1.0, 4, |y| greens_eval(&[0.3], &[y], n).unwrap_or(0.0));
        assert!((v - 0.455).abs() < 1e-15);
    }

    #[test]
    fn potential_of_disc() {
        let n = d(2);
        let e = StarDomain::ball(n, 0.5).unwrap();
        let v = potential(&e, &[0.0, 0.0]).unwrap();
        assert!((v - 0.14914339756999317).abs() < 1e-12, "{v}");
        let u = radial::ball_source_profile(PI / 4.0, n).unwrap();
        for x in [[0.2, 0.1], [0.45, -0.2], [0.0, 0.7], [-0.5, 0.0]] {
            let v = potential(&e, &x).unwrap();
            let exact = u.value(norm(&x));
            assert!((v - exact).abs() < 1e-10, "{x:?}: {v} vs {exact}");
        }
        let empty = StarDomain::ball(n, 1e-9).unwrap();
        assert!(potential(&empty, &[0.3, 0.0]).unwrap().abs() < 1e-15);
        assert_eq!(potential(&e, &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn potential_of_ball_in_three_dimensions() {
        let n = d(3);
        let m = 0.5 * n.ball_volume();
        let r = n.radius_of_volume(m);
        let e = StarDomain::ball(n, r).unwrap();
        let u = radial::ball_source_profile(m, n).unwrap();
        for z in [0.0, 0.3, -0.79, 0.9] {
            let v = potential(&e, &[0.0, 0.0, z]).unwrap();
            assert!((v - u.value(z.abs())).abs() < 1e-10, "z={z}: {v}");
        }
        let v = potential(&e, &[0.1, 0.2, 0.1]).unwrap();
        assert!((v - u.value((0.06f64).sqrt())).abs() < 1e-10);
    }

    #[test]
    fn core_route_matches_boundary_route() {
        let n = d(2);
        let g = HarmonicCoeffs::raw_mode(n, 2, 0, 0.04).unwrap().with(3, 1, 0.02).unwrap();
        let e = StarDomain::new(0.5, g).unwrap();
        for x in [[0.1, 0.05], [-0.2, 0.1]] {
            let a = potential(&e, &x).unwrap();
            let (b, _, _) = core_fields(&e, &x, false);
            assert!((a - b).abs() < 1e-11, "{a} {b}");
        }
    }

    #[test]
    fn maximum_of_radial_sets() {
        let n = d(2);
        let e = StarDomain::ball(n, 0.5).unwrap();
        let (x, v) = sup_norm_via_max(&e).unwrap();
        assert!(norm(&x) < 1e-8);
        assert!((v - 0.14914339756999317).abs() < 1e-12);
        let n1 = d(1);
        let e1 = StarDomain::ball(n1, 0.5).unwrap();
        let (x, v) = sup_norm_via_max(&e1).unwrap();
        assert!(x[0].abs() < 1e-15);
        let u = radial::ball_source_profile(1.0, n1).unwrap();
        assert!((v - u.value(0.0)).abs() < 1e-15);
    }

    #[test]
    fn maximum_moves_along_axis() {
        let n = d(2);
        let g = HarmonicCoeffs::raw_mode(n, 1, 0, 0.05).unwrap();
        let e = project_volume(&StarDomain::new(0.5, g).unwrap(), PI / 4.0).unwrap();
        let (x, v) = sup_norm_via_max(&e).unwrap();
        assert!(x[0] > 0.0 && x[1].abs() < 1e-12);
        assert!(v < 0.14914339756999317);
        // dense grid search around the Newton point
        let mut best = f64::NEG_INFINITY;
        for i in -5..=5 {
            let p = [x[0] + 1e-3 * i as f64, 0.0];
            best = best.max(potential(&e, &p).unwrap());
        }
        assert!(v >= best - 1e-12);
    }
}
