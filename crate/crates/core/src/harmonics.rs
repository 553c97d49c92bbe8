//! Real harmonics on the unit sphere, normalized in `L^2(S^{n-1})`.
//!
//! The angular coordinate is a single `theta`: the polar angle on the circle for `n = 2`,
//! the colatitude for zonal harmonics in `n = 3`, and `0` or `pi` (the points `+1`, `-1`)
//! for `n = 1`.

use std::f64::consts::PI;

use crate::dimension::Dimension;
use crate::quad;

/// `P_k(x)` and `P_{k-1}(x)` by the three-term recurrence.
pub fn legendre_pair(k: usize, x: f64) -> (f64, f64) {
    if k == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for l in 1..k {
        let lf = l as f64;
        let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

pub fn legendre(k: usize, x: f64) -> f64 {
    legendre_pair(k, x).0
}

/// Number of basis functions of degree `k` carried for dimension `n`.
pub fn multiplicity(n: Dimension, k: usize) -> usize {
    match (n.n(), k) {
        (1, 0) | (1, 1) => 1,
        (1, _) => 0,
        (2, 0) => 1,
        (2, _) => 2,
        _ => 1,
    }
}

/// `Lambda_k = k (k + n - 2)`.
pub fn eigenvalue(n: Dimension, k: usize) -> f64 {
    let k = k as f64;
    k * (k + n.nf() - 2.0)
}

/// Factor `N` with `Y_{k,idx} = raw_{k,idx} / N`, where `raw` is `cos k theta`,
/// `sin k theta`, `P_k(cos theta)`, `1` or `sgn`.
pub fn normalization(n: Dimension, k: usize) -> f64 {
    match n.n() {
        1 => 2f64.sqrt(),
        2 => {
            if k == 0 {
                (2.0 * PI).sqrt()
            } else {
                PI.sqrt()
            }
        }
        _ => (4.0 * PI / (2.0 * k as f64 + 1.0)).sqrt(),
    }
}

/// Unnormalized harmonic.
pub fn raw(n: Dimension, k: usize, idx: usize, theta: f64) -> f64 {
    match n.n() {
        1 => {
            if k == 0 || theta.cos() >= 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        2 => {
            let kt = k as f64 * theta;
            if idx == 0 {
                kt.cos()
            } else {
                kt.sin()
            }
        }
        _ => legendre(k, theta.cos()),
    }
}

pub fn basis(n: Dimension, k: usize, idx: usize, theta: f64) -> f64 {
    raw(n, k, idx, theta) / normalization(n, k)
}

/// `(k, idx)` pairs of all basis functions of degree `<= kmax`, in storage order.
pub fn mode_list(n: Dimension, kmax: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 0..=kmax {
        for i in 0..multiplicity(n, k) {
            out.push((k, i));
        }
    }
    out
}

/// All of `basis(n, k, idx, theta)` for `k <= kmax`, ordered as `mode_list`.
pub fn basis_all(n: Dimension, kmax: usize, theta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * kmax + 1);
    match n.n() {
        1 => {
            out.push(basis(n, 0, 0, theta));
            if kmax >= 1 {
                out.push(basis(n, 1, 0, theta));
            }
        }
        2 => {
            let (c1, s1) = (theta.cos(), theta.sin());
            let (mut c, mut s) = (1.0, 0.0);
            out.push(1.0 / normalization(n, 0));
            let nk = normalization(n, 1);
            for _ in 1..=kmax {
                let cn = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = cn;
                out.push(c / nk);
                out.push(s / nk);
            }
        }
        _ => {
            let x = theta.cos();
            let (mut p0, mut p1) = (1.0, x);
            out.push(1.0 / normalization(n, 0));
            for k in 1..=kmax {
                out.push(p1 / normalization(n, k));
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
        }
    }
    out
}

/// Angular quadrature nodes `(theta, weight)` on `S^{n-1}`; exact for band-limited
/// integrands of degree `< degree` (trapezoid on the circle, Gauss-Legendre in `cos theta`).
pub fn angular_rule(n: Dimension, degree: usize) -> Vec<(f64, f64)> {
    match n.n() {
        1 => vec![(0.0, 1.0), (PI, 1.0)],
        2 => {
            let m = degree.max(1) + 1;
            (0..m).map(|i| (2.0 * PI * i as f64 / m as f64, 2.0 * PI / m as f64)).collect()
        }
        _ => {
            let pts = degree / 2 + 2;
            quad::nodes(-1.0, 1.0, pts).map(|(mu, w)| (mu.acos(), 2.0 * PI * w)).collect()
        }
    }
}

/// `int` of `basis(n, k, idx, .)` over the arc `(a, b)` of the angular coordinate.
///
/// For `n = 3` the measure is `2 pi sin theta dtheta`. Not used for `n = 1`.
pub fn basis_arc_integral(n: Dimension, k: usize, idx: usize, a: f64, b: f64) -> f64 {
    let nk = normalization(n, k);
    match n.n() {
        2 => {
            if k == 0 {
                (b - a) / nk
            } else {
                let kf = k as f64;
                let v = if idx == 0 {
                    ((kf * b).sin() - (kf * a).sin()) / kf
                } else {
                    ((kf * a).cos() - (kf * b).cos()) / kf
                };
                v / nk
            }
        }
        _ => {
            // int_{cos b}^{cos a} P_k(mu) dmu
            let anti = |mu: f64| {
                if k == 0 {
                    mu
                } else {
                    (legendre(k + 1, mu) - legendre(k - 1, mu)) / (2.0 * k as f64 + 1.0)
                }
            };
            2.0 * PI * (anti(a.cos()) - anti(b.cos())) / nk
        }
    }
}
