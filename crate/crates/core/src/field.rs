//! Spectral representation of `u_E` for a star-shaped `E`.
//!
//! Expanding `1_E` in harmonics, each coefficient solves a radial mode problem whose
//! Dirichlet Green's function is explicit, so
//! `phi_k(r) = (1/N) int Y [b(r) A(min(r, R)) + a(r) (B(max(r, R)) - B(r))] d omega`.
//! Below `min R` and above `max R` this collapses to two moment vectors of the boundary;
//! inside the layer the angular integral is split at the crossings of `R = r`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dimension::Dimension;
use crate::domains::StarDomain;
use crate::error::{Error, Result};
use crate::harmonics;
use crate::modes::ModeKernel;
use crate::quad;

#[derive(Debug, Clone)]
pub struct StarField {
    e: StarDomain,
    kmax: usize,
    modes: Vec<(usize, usize)>,
    kernels: Vec<ModeKernel>,
    /// `int Y_m B_k(R)`
    inner: Vec<f64>,
    /// `int Y_m A_k(R)`
    outer: Vec<f64>,
    /// `int Y_0`
    ybar: f64,
}

/// Solves `-Delta u = 1_E` in `B_1` mode by mode up to degree `kmax`.
pub fn solve_star_spectral(e: &StarDomain, kmax: usize) -> Result<StarField> {
    StarField::solve(e, kmax)
}

/// Angular nodes `(theta, weight)` for smooth, not band-limited, functions of `R`.
fn boundary_rule(e: &StarDomain, kmax: usize) -> Vec<(f64, f64)> {
    let band = e.g().cutoff();
    harmonics::angular_rule(e.n(), 4 * kmax + 16 * band + 128)
}

impl StarField {
    pub fn solve(e: &StarDomain, kmax: usize) -> Result<Self> {
        let n = e.n();
        let kmax = if n.n() == 1 { 1 } else { kmax };
        if n.n() > 1 && kmax < e.g().cutoff() {
            return Err(Error::InvalidInput(format!(
                "truncation {kmax} is below the boundary band {}",
                e.g().cutoff()
            )));
        }
        let modes = harmonics::mode_list(n, kmax);
        let kernels: Vec<ModeKernel> = (0..=kmax).map(|k| ModeKernel::new(n, k)).collect();
        let mut inner = vec![0.0; modes.len()];
        let mut outer = vec![0.0; modes.len()];
        for (theta, w) in boundary_rule(e, kmax) {
            let r = e.radius(theta);
            let y = harmonics::basis_all(n, kmax, theta);
            for (j, &(k, _)) in modes.iter().enumerate() {
                inner[j] += w * y[j] * kernels[k].b_moment(r);
                outer[j] += w * y[j] * kernels[k].a_moment(r);
            }
        }
        let ybar = n.sphere_area() / harmonics::normalization(n, 0);
        Ok(Self { e: e.clone(), kmax, modes, kernels, inner, outer, ybar })
    }

    pub fn domain(&self) -> &StarDomain {
        &self.e
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn modes(&self) -> &[(usize, usize)] {
        &self.modes
    }

    fn n(&self) -> Dimension {
        self.e.n()
    }

    /// All mode amplitudes `phi_m(r)`, ordered as `modes()`.
    pub fn modes_at(&self, r: f64) -> Vec<f64> {
        let len = self.modes.len();
        if r >= 1.0 {
            return vec![0.0; len];
        }
        let (lo, hi) = (self.e.min_radius(), self.e.max_radius());
        if r < lo || (r <= lo && hi <= lo) {
            return self.inner_modes(r);
        }
        if r > hi || (hi <= lo) {
            return (0..len)
                .map(|j| {
                    let m = &self.kernels[self.modes[j].0];
                    m.b(r) * self.outer[j] / m.norm()
                })
                .collect();
        }
        self.layer_modes(r)
    }

    fn inner_modes(&self, r: f64) -> Vec<f64> {
        (0..self.modes.len())
            .map(|j| {
                let m = &self.kernels[self.modes[j].0];
                if self.modes[j].0 > 0 {
                    return m.a(r) * self.inner[j] / m.norm();
                }
                let ab = if r == 0.0 { 0.0 } else { m.b(r) * m.a_moment(r) - m.b_moment(r) };
                (ab * self.ybar + self.inner[j]) / m.norm()
            })
            .collect()
    }

    /// Nodes `(theta, weight)` over the angular range, split where `R = r`.
    fn layer_nodes(&self, r: f64) -> Vec<(f64, f64)> {
        let n = self.n();
        if n.n() == 1 {
            return vec![(0.0, 1.0), (PI, 1.0)];
        }
        let span = if n.n() == 2 { 2.0 * PI } else { PI };
        let mut cuts = vec![0.0];
        cuts.extend(self.e.crossings(r));
        cuts.push(span);
        let hmax = (4.0 * PI / self.kmax.max(1) as f64).min(0.25);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            if n.n() == 2 {
                let pieces = ((w[1] - w[0]) / hmax).ceil().max(1.0) as usize;
                let h = (w[1] - w[0]) / pieces as f64;
                for i in 0..pieces {
                    let a = w[0] + i as f64 * h;
                    out.extend(quad::nodes(a, a + h, 20));
                }
            } else {
                // measure 2 pi d mu on mu = cos theta
                let (mu_hi, mu_lo) = (w[0].cos(), w[1].cos());
                let pieces = ((w[1] - w[0]) / hmax).ceil().max(1.0) as usize;
                let h = (mu_hi - mu_lo) / pieces as f64;
                for i in 0..pieces {
                    let a = mu_lo + i as f64 * h;
                    out.extend(quad::nodes(a, a + h, 20).map(|(mu, wt)| (mu.clamp(-1.0, 1.0).acos(), 2.0 * PI * wt)));
                }
            }
        }
        out
    }

    fn layer_modes(&self, r: f64) -> Vec<f64> {
        let n = self.n();
        let mut acc = vec![0.0; self.modes.len()];
        let near: Vec<(f64, f64, f64, f64)> =
            self.kernels.iter().map(|m| (m.a(r), m.b(r), m.a_moment(r), m.b_moment(r))).collect();
        for (theta, w) in self.layer_nodes(r) {
            let big_r = self.e.radius(theta);
            let y = harmonics::basis_all(n, self.kmax, theta);
            let f: Vec<f64> = self
                .kernels
                .iter()
                .zip(&near)
                .map(
                    |(m, &(a, b, am, bm))| {
                        if big_r > r {
                            b * am + a * (m.b_moment(big_r) - bm)
                        } else {
                            b * m.a_moment(big_r)
                        }
                    },
                )
                .collect();
            for (j, &(k, _)) in self.modes.iter().enumerate() {
                acc[j] += w * y[j] * f[k];
            }
        }
        for (j, &(k, _)) in self.modes.iter().enumerate() {
            acc[j] /= self.kernels[k].norm();
        }
        acc
    }

    pub fn mode_value(&self, k: usize, idx: usize, r: f64) -> Result<f64> {
        let j = self
            .modes
            .iter()
            .position(|&m| m == (k, idx))
            .ok_or_else(|| Error::InvalidInput(format!("mode ({k}, {idx}) is not carried")))?;
        Ok(self.modes_at(r)[j])
    }

    /// `u_E` at radius `r` and angular coordinate `theta`.
    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        let phi = self.modes_at(r);
        let y = harmonics::basis_all(self.n(), self.kmax, theta);
        phi.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// `u_E(x)` from Cartesian coordinates (zonal symmetry is used in `n = 3`).
    pub fn eval_point(&self, x: &[f64]) -> Result<f64> {
        let n = self.n().n();
        if x.len() != n {
            return Err(Error::InvalidInput(format!("points must have {n} coordinates")));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let theta = match n {
            1 => {
                if x[0] >= 0.0 {
                    0.0
                } else {
                    PI
                }
            }
            2 => x[1].atan2(x[0]),
            _ => {
                if r == 0.0 {
                    0.0
                } else {
                    (x[2] / r).clamp(-1.0, 1.0).acos()
                }
            }
        };
        Ok(self.eval(r, theta))
    }

    /// Value, gradient and Hessian of the harmonic expansion valid in `|x| < min R`.
    fn core_derivatives(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n();
        let dim = n.n();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radial = self.inner_modes(r)[0] * harmonics::basis(n, 0, 0, 0.0);
        let mut v = radial;
        let mut g: Vec<f64> = x.iter().map(|c| -c / n.nf()).collect();
        let mut h = vec![vec![0.0; dim]; dim];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = -1.0 / n.nf();
        }
        match dim {
            2 => {
                // r^k (cos, sin)(k theta) = (Re, Im) z^k
                let z = (x[0], x[1]);
                let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
                let mut pows = vec![(1.0, 0.0)];
                for k in 1..=self.kmax {
                    let p = mul(pows[k - 1], z);
                    pows.push(p);
                }
                for (j, &(k, idx)) in self.modes.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let c = self.inner[j] / (self.kernels[k].norm() * harmonics::normalization(n, k));
                    let kf = k as f64;
                    let pk = pows[k];
                    let p1 = pows[k - 1];
                    let p2 = if k >= 2 { pows[k - 2] } else { (0.0, 0.0) };
                    let kk = kf * (kf - 1.0);
                    if idx == 0 {
                        v += c * pk.0;
                        g[0] += c * kf * p1.0;
                        g[1] -= c * kf * p1.1;
                        h[0][0] += c * kk * p2.0;
                        h[1][1] -= c * kk * p2.0;
                        h[0][1] -= c * kk * p2.1;
                    } else {
                        v += c * pk.1;
                        g[0] += c * kf * p1.1;
                        g[1] += c * kf * p1.0;
                        h[0][0] += c * kk * p2.1;
                        h[1][1] -= c * kk * p2.1;
                        h[0][1] += c * kk * p2.0;
                    }
                }
                h[1][0] = h[0][1];
            }
            3 => {
                // on the axis r^k P_k(cos theta) = z^k
                let zc = x[2];
                for (j, &(k, _)) in self.modes.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let c = self.inner[j] / (self.kernels[k].norm() * harmonics::normalization(n, k));
                    let kf = k as f64;
                    v += c * zc.powi(k as i32);
                    g[2] += c * kf * zc.powi(k as i32 - 1);
                    if k >= 2 {
                        h[2][2] += c * kf * (kf - 1.0) * zc.powi(k as i32 - 2);
                    }
                }
            }
            _ => {}
        }
        (v, g, h)
    }

    /// Maximum point of the truncated field and its value.
    pub fn max_point(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.n();
        if n.n() == 1 {
            let a = self.e.radius(0.0);
            let b = self.e.radius(PI);
            let x = 0.25 * ((1.0 - b).powi(2) - (1.0 - a).powi(2));
            return Ok((vec![x], self.eval_point(&[x])?));
        }
        let limit = self.e.min_radius();
        let mut x = vec![0.0; n.n()];
        for _ in 0..50 {
            let (_, g, h) = self.core_derivatives(&x);
            let step = if n.n() == 2 {
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                vec![(h[1][1] * g[0] - h[0][1] * g[1]) / det, (h[0][0] * g[1] - h[1][0] * g[0]) / det]
            } else {
                vec![0.0, 0.0, g[2] / h[2][2]]
            };
            for i in 0..x.len() {
                x[i] -= step[i];
            }
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(r < limit) {
                let v = self.core_derivatives(&vec![0.0; n.n()]).0;
                return Err(Error::Maximization { best: v, at: vec![0.0; n.n()] });
            }
            if step.iter().map(|s| s * s).sum::<f64>().sqrt() < 1e-14 {
                let v = self.core_derivatives(&x).0;
                return Ok((x, v));
            }
        }
        let v = self.core_derivatives(&x).0;
        Err(Error::Maximization { best: v, at: x })
    }

    /// Radial nodes `(r, weight)` for integrals over `B_1`, graded at `min R`, `max R` and 1.
    fn radial_rule(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = (self.e.min_radius(), self.e.max_radius());
        let mut breaks = vec![0.0, 0.5 * lo, lo];
        if hi > lo {
            let fr =
                [1e-5, 1e-4, 1e-3, 0.01, 0.04, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.96, 0.99, 0.999, 0.9999, 0.99999];
            breaks.extend(fr.iter().map(|f| lo + (hi - lo) * f));
            breaks.push(hi);
        }
        let tail = [0.3, 0.6, 0.85, 0.95, 0.99, 0.999];
        breaks.extend(tail.iter().map(|f| hi + (1.0 - hi) * f));
        breaks.push(1.0);
        let mut out = Vec::new();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                out.extend(quad::nodes(w[0], w[1], 20));
            }
        }
        out
    }

    /// `int_{B_1} f(u_E)`.
    pub fn integrate<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> f64 {
        let n = self.n();
        let angular = harmonics::angular_rule(n, 4 * self.kmax + 64);
        let table: Vec<Vec<f64>> = angular.iter().map(|&(t, _)| harmonics::basis_all(n, self.kmax, t)).collect();
        let ni = n.n() as i32;
        self.radial_rule()
            .par_iter()
            .map(|&(r, wr)| {
                let phi = self.modes_at(r);
                let s: f64 = angular
                    .iter()
                    .zip(&table)
                    .map(|(&(_, wa), y)| wa * f(phi.iter().zip(y).map(|(a, b)| a * b).sum()))
                    .sum();
                wr * r.powi(ni - 1) * s
            })
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }

    /// `||u_E||_{L^p(B_1)}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.integrate(|u| u.abs().powf(p)).powf(1.0 / p)
    }

    /// Size of the highest carried degree across the layer, a proxy for truncation error.
    pub fn truncation_estimate(&self) -> f64 {
        let (lo, hi) = (self.e.min_radius(), self.e.max_radius());
        let sup_y = harmonics::basis(self.n(), self.kmax, 0, 0.0).abs();
        (0..=8)
            .map(|i| {
                let r = lo + (hi - lo) * i as f64 / 8.0;
                let phi = self.modes_at(r.min(0.999_999));
                self.modes.iter().zip(&phi).filter(|(m, _)| m.0 == self.kmax).map(|(_, v)| v.abs()).sum::<f64>() * sup_y
            })
            .fold(0.0, f64::max)
    }

    /// Rows `(r, theta, u)` on a polar grid.
    pub fn csv_rows(&self, nr: usize, nt: usize) -> Vec<(f64, f64, f64)> {
        let span = if self.n().n() == 2 { 2.0 * PI } else { PI };
        let mut out = Vec::with_capacity((nr + 1) * nt);
        for i in 0..=nr {
            let r = i as f64 / nr as f64;
            let phi = self.modes_at(r);
            for j in 0..nt {
                let t = span * j as f64 / nt.max(1) as f64;
                let y = harmonics::basis_all(self.n(), self.kmax, t);
                out.push((r, t, phi.iter().zip(&y).map(|(a, b)| a * b).sum()));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{project_volume, HarmonicCoeffs};
    use crate::greens;
    use crate::radial;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn radial_sets_are_exact() {
        for n in 1..4 {
            let dn = d(n);
            let r0 = 0.5;
            let e = StarDomain::ball(dn, r0).unwrap();
            let f = solve_star_spectral(&e, 4).unwrap();
            let u = radial::ball_source_profile(dn.volume_of_radius(r0), dn).unwrap();
            for r in [0.0, 0.2, 0.5, 0.7, 0.99] {
                assert!((f.eval(r, 0.3) - u.value(r)).abs() < 1e-13, "n={n} r={r}");
            }
            for &(k, i) in f.modes().iter().skip(1) {
                assert!(f.mode_value(k, i, 0.3).unwrap().abs() < 1e-13);
            }
        }
    }

    #[test]
    fn interval_is_exact() {
        let n = d(1);
        let g = HarmonicCoeffs::raw_mode(n, 1, 0, 0.1).unwrap();
        let e = StarDomain::new(0.5, g).unwrap();
        let f = solve_star_spectral(&e, 1).unwrap();
        for x in [-0.9, -0.3, 0.0, 0.25, 0.55, 0.8] {
            let a = f.eval_point(&[x]).unwrap();
            let b = greens::potential(&e, &[x]).unwrap();
            assert!((a - b).abs() < 1e-14, "{x}: {a} {b}");
        }
        let (x, v) = f.max_point().unwrap();
        assert!((x[0] - 0.25 * (0.6f64.powi(2) - 0.4f64.powi(2))).abs() < 1e-15);
        assert!(v > 0.0);
    }

    #[test]
    fn spectral_matches_direct_potential() {
        let n = d(2);
        let g = HarmonicCoeffs::raw_mode(n, 2, 0, 0.06).unwrap().with(1, 1, 0.03).unwrap();
        let e = project_volume(&StarDomain::new(0.5, g).unwrap(), PI / 4.0).unwrap();
        let f = solve_star_spectral(&e, 64).unwrap();
        // inside and outside the layer the expansion only truncates the boundary series
        for x in [[0.1, 0.2], [-0.3, 0.05], [0.0, 0.8], [0.7, -0.5]] {
            let a = f.eval_point(&x).unwrap();
            let b = greens::potential(&e, &x).unwrap();
            assert!((a - b).abs() < 1e-10, "{x:?}: {a} {b}");
        }
        for x in [[0.5, 0.05], [-0.02, -0.52]] {
            let a = f.eval_point(&x).unwrap();
            let b = greens::potential(&e, &x).unwrap();
            assert!((a - b).abs() < 1e-5, "{x:?}: {a} {b}");
        }
    }

    #[test]
    fn max_point_agrees_with_newton_on_potential() {
        let n = d(2);
        let g = HarmonicCoeffs::raw_mode(n, 1, 0, 0.05).unwrap().with(2, 1, 0.03).unwrap();
        let e = project_volume(&StarDomain::new(0.5, g).unwrap(), PI / 4.0).unwrap();
        let f = solve_star_spectral(&e, 32).unwrap();
        let (x1, v1) = f.max_point().unwrap();
        let (x2, v2) = greens::sup_norm_via_max(&e).unwrap();
        assert!((v1 - v2).abs() < 1e-10);
        assert!((x1[0] - x2[0]).abs() < 1e-8 && (x1[1] - x2[1]).abs() < 1e-8);
    }

    #[test]
    fn integral_of_field_is_l1_norm() {
        // int u_E = int_E w_1 with w_1 the torsion function
        let n = d(2);
        let e = StarDomain::ball(n, 0.5).unwrap();
        let f = solve_star_spectral(&e, 8).unwrap();
        let u = radial::ball_source_profile(PI / 4.0, n).unwrap();
        let exact = u.integrate(|_, v| v);
        assert!((f.integrate(|v| v) - exact).abs() < 1e-12);
        let g = HarmonicCoeffs::raw_mode(n, 3, 0, 0.05).unwrap();
        let e = StarDomain::new(0.5, g).unwrap();
        let f = solve_star_spectral(&e, 48).unwrap();
        let torsion = |t: f64| {
            let r = e.radius(t);
            // int_0^R (1 - s^2)/4 s ds
            r * r / 8.0 - r.powi(4) / 16.0
        };
        let rhs = quad::composite(&[0.0, 2.0 * PI], 32, 20, torsion);
        assert!((f.integrate(|v| v) - rhs).abs() < 1e-9, "{} {}", f.integrate(|v| v), rhs);
    }

    #[test]
    fn zonal_three_dimensional_field() {
        let n = d(3);
        let g = HarmonicCoeffs::raw_mode(n, 2, 0, 0.05).unwrap();
        let e = StarDomain::new(0.5, g).unwrap();
        let f = solve_star_spectral(&e, 48).unwrap();
        for z in [0.0, 0.2, -0.3, 0.8, -0.9] {
            let a = f.eval_point(&[0.0, 0.0, z]).unwrap();
            let b = greens::potential(&e, &[0.0, 0.0, z]).unwrap();
            assert!((a - b).abs() < 1e-10, "{z}: {a} {b}");
        }
        let (x, _) = f.max_point().unwrap();
        assert!(x[2].abs() < 1e-12);
    }
}
