//! Shape derivatives at `B_*` of `J(E) = int j(u_E)` and of `||u_E||_inf`, with a
//! finite-difference harness on the star-shaped family `R = r_* + t g`.
//!
//! The Lagrangian `L_tau = J + tau |E|` uses `tau = -w_0(r_*)` (or `-G(0, .)` on `dB_*` for
//! the sup norm), so `L'_tau(B_*) = 0` and `L''_tau(B_*)[g] = sum_k |g_k|^2 h_k` with
//! `h_k = 1/lambda_k - rho`. For the sup norm the maximum point moves at first order by
//! `x'_0 = -(D^2 u_0(0))^{-1} grad u'_0(0) = n grad u'_0(0)`, `u'_0 = int_{dB_*} G(., z) g(z)`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dimension::Dimension;
use crate::domains::{project_volume, HarmonicCoeffs, StarDomain};
use crate::error::{domain, Error, Result};
use crate::greens::{self, solve_star_spectral, Variable};
use crate::harmonics;
use crate::integrand::ConvexIntegrand;
use crate::modes::ModeKernel;
use crate::radial;
use crate::spectral::{self, Background};

/// Normal displacement `g` on `dB_*` in the normalized harmonic basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    g: HarmonicCoeffs,
    volume_preserving: bool,
}

impl Perturbation {
    pub fn new(g: HarmonicCoeffs, volume_preserving: bool) -> Result<Self> {
        if volume_preserving && g.get(0, 0) != 0.0 {
            return Err(Error::InvalidInput("a volume preserving perturbation has no degree-0 part".into()));
        }
        Ok(Self { g, volume_preserving })
    }

    /// `alpha Y_{k,idx}`, volume preserving when `k >= 1`.
    pub fn mode(n: Dimension, k: usize, idx: usize, alpha: f64) -> Result<Self> {
        Self::new(HarmonicCoeffs::single(n, k, idx, alpha)?, k > 0)
    }

    pub fn g(&self) -> &HarmonicCoeffs {
        &self.g
    }

    pub fn volume_preserving(&self) -> bool {
        self.volume_preserving
    }

    fn n(&self) -> Dimension {
        self.g.n()
    }

    /// `B_*^{t g}`: the star domain `r_* + t g`, volume-projected when required.
    pub fn deformed(&self, m: f64, t: f64) -> Result<StarDomain> {
        let n = self.n();
        let r_star = n.checked_radius(m)?;
        let e = StarDomain::new(r_star, self.g.scaled(t))?;
        if self.volume_preserving {
            project_volume(&e, m)
        } else {
            Ok(e)
        }
    }

    /// `int_{dB_*} g^2` split by degree.
    fn mode_mass(&self, r_star: f64) -> BTreeMap<usize, f64> {
        let w = r_star.powi(self.n().n() as i32 - 1);
        let mut out = BTreeMap::new();
        for ((k, _), a) in self.g.iter() {
            *out.entry(k).or_insert(0.0) += a * a * w;
        }
        out
    }
}

/// The functional being perturbed.
#[derive(Debug, Clone)]
pub enum Objective {
    Lp(ConvexIntegrand),
    Linf,
}

impl Objective {
    /// Value on a star domain through the spectral field with `kmax` modes.
    pub fn value(&self, e: &StarDomain, kmax: usize) -> Result<f64> {
        let f = solve_star_spectral(e, kmax)?;
        match self {
            Objective::Lp(j) => Ok(f.integrate(|u| j.value(u))),
            Objective::Linf => Ok(f.max_point()?.1),
        }
    }
}

/// `tau = -w_0(r_*)`.
pub fn multiplier_tau(j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    let u0 = radial::ball_source_profile(m, n)?;
    let r_star = n.radius_of_volume(m).min(1.0);
    let w0 = radial::adjoint_profile(j, &u0)?;
    Ok(-w0.value(r_star))
}

/// `tau = -G(0, .)` on `dB_*`.
pub fn multiplier_tau_linf(m: f64, n: Dimension) -> Result<f64> {
    let r_star = n.radius_of_volume(m).min(1.0);
    if n.n() == 1 {
        return Ok(-(1.0 - r_star) / 2.0);
    }
    Ok(-(greens::zeta(r_star, n)? - greens::zeta(1.0, n)?))
}

/// `J'(0) = w_0(r_*) int_{dB_*} g`.
pub fn first_derivative(p: &Perturbation, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    let r_star = n.checked_radius(m)?;
    let tau = multiplier_tau(j, m, n)?;
    let mean = p.g.get(0, 0) * n.sphere_area() / harmonics::normalization(n, 0);
    Ok(-tau * r_star.powi(n.n() as i32 - 1) * mean)
}

/// `L'_tau(0) = J'(0) + tau V'(0)`, zero for every `g`.
pub fn lagrangian_first_derivative(p: &Perturbation, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    let r_star = n.checked_radius(m)?;
    let tau = multiplier_tau(j, m, n)?;
    let volume_rate = r_star.powi(n.n() as i32 - 1) * p.g.get(0, 0) * n.sphere_area() / harmonics::normalization(n, 0);
    Ok(first_derivative(p, j, m, n)? + tau * volume_rate)
}

/// Per-degree values `h_k = l_2(Y_k, Y_k) / ||Y_k||^2_{L^2(dB_*)}`.
#[derive(Debug, Clone)]
pub struct HessianReport {
    pub n: Dimension,
    pub m: f64,
    pub per_mode: BTreeMap<usize, f64>,
    /// The same quantities from the formulas as printed (shell-only eigenvalue, or the
    /// non-inverted maximum-point motion); empty when they coincide.
    pub printed: BTreeMap<usize, f64>,
    pub tau: f64,
}

impl HessianReport {
    /// `L''(0) = sum_k ||g_k||^2 h_k` for mean-zero `g`.
    pub fn total(&self, p: &Perturbation) -> Result<f64> {
        if p.g.get(0, 0) != 0.0 {
            return Err(Error::InvalidInput("the mode sum needs mean-zero g".into()));
        }
        let r_star = self.n.radius_of_volume(self.m);
        let mut acc = 0.0;
        for (k, mass) in p.mode_mass(r_star) {
            let h =
                self.per_mode.get(&k).ok_or_else(|| Error::InvalidInput(format!("degree {k} is beyond the report")))?;
            acc += mass * h;
        }
        Ok(acc)
    }

    /// `max_k h_k`, attained at `k = 1`.
    pub fn bound(&self) -> f64 {
        self.per_mode.values().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_negative(&self) -> bool {
        self.per_mode.values().all(|&h| h < 0.0)
    }
}

/// `h_k = 1/lambda_k - rho` for `k = 1..K`.
pub fn hessian_modes(j: &ConvexIntegrand, m: f64, n: Dimension, kmax: usize) -> Result<HessianReport> {
    let rep = spectral::coercivity_report(j, m, n, kmax)?;
    let per_mode =
        rep.lambdas.iter().map(|(&k, &l)| (k, if l.is_infinite() { 0.0 } else { 1.0 / l } - rep.rho)).collect();
    let printed = if j.is_affine() {
        BTreeMap::new()
    } else {
        rep.lambdas
            .keys()
            .map(|&k| Ok((k, 1.0 / spectral::outer_shell_lambda(k, j, m, n)? - rep.rho)))
            .collect::<Result<_>>()?
    };
    Ok(HessianReport { n, m, per_mode, printed, tau: multiplier_tau(j, m, n)? })
}

/// `<T Y_k, Y_k> / ||Y_k||^2` including `k = 0`, from the mode Green's function.
fn t_mode(bg: &Background, k: usize) -> f64 {
    let n = bg.n();
    let g = ModeKernel::new(n, k);
    let rs = bg.r_star();
    let ni = n.n() as i32;
    let phi_u = |s: f64| rs.powi(ni - 1) * g.green(s, rs);
    let below = bg.core_integral(|s| g.a(s) * phi_u(s) * s.powi(ni - 1));
    let above = bg.shell_integral(|s| g.b(s) * phi_u(s) * s.powi(ni - 1));
    (g.b(rs) * below + g.a(rs) * above) / g.norm()
}

/// `J''(0) = int_{dB_*} (w'_0 g + w_0 H g^2 + d_nu w_0 g^2)` with `H = (n-1)/r_*`,
/// `w'_0 = T g` and `d_nu w_0 = -rho`.
#[allow(non_snake_case)]
pub fn second_derivative_J(p: &Perturbation, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    let bg = Background::new(j, m, n)?;
    let rs = bg.r_star();
    let w0 = -multiplier_tau(j, m, n)?;
    let rho = spectral::rho(j, m, n)?.exact;
    let curvature = (n.nf() - 1.0) / rs;
    let mut acc = 0.0;
    for (k, mass) in p.mode_mass(rs) {
        let t = if j.is_affine() { 0.0 } else { t_mode(&bg, k) };
        acc += mass * (t + w0 * curvature - rho);
    }
    Ok(acc)
}

/// `V''(0)` for `R = r_* + t g`.
pub fn second_volume_derivative(p: &Perturbation, m: f64, n: Dimension) -> Result<f64> {
    let rs = n.checked_radius(m)?;
    Ok((n.nf() - 1.0) / rs * p.mode_mass(rs).values().sum::<f64>())
}

/// `L''_tau(0) = J''(0) + tau V''(0)`.
pub fn lagrangian_second_derivative(p: &Perturbation, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    Ok(second_derivative_J(p, j, m, n)? + multiplier_tau(j, m, n)? * second_volume_derivative(p, m, n)?)
}

/// `x'_0` with the inverse Hessian, and the non-inverted value `(1/n) grad u'_0(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPointDerivative {
    pub ift: Vec<f64>,
    pub printed: Vec<f64>,
}

pub fn linf_max_point_derivative(p: &Perturbation, m: f64, n: Dimension) -> Result<MaxPointDerivative> {
    let rs = n.checked_radius(m)?;
    let dim = n.n();
    let origin = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let w = rs.powi(dim as i32 - 1);
    for (theta, wt) in harmonics::angular_rule(n, 4 * p.g.cutoff() + 8) {
        // azimuthal average of the direction in n = 3
        let omega: Vec<f64> = match dim {
            1 => vec![theta.cos().signum()],
            2 => vec![theta.cos(), theta.sin()],
            _ => vec![0.0, 0.0, theta.cos()],
        };
        let z: Vec<f64> = omega.iter().map(|o| o * rs).collect();
        let gz = if dim == 3 {
            // grad_x G(0, z) = (zeta'(1) - zeta'(r_*)/r_*) z is linear in z
            let c = greens::zeta_d1(1.0, n)? - greens::zeta_d1(rs, n)? / rs;
            z.iter().map(|v| c * v).collect()
        } else {
            greens::greens_grad(&origin, &z, n, Variable::X)?
        };
        let gv = p.g.eval(theta);
        for i in 0..dim {
            grad[i] += wt * w * gv * gz[i];
        }
    }
    let d2 = -1.0 / n.nf();
    if d2 == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(MaxPointDerivative {
        ift: grad.iter().map(|g| -g / d2).collect(),
        printed: grad.iter().map(|g| -d2 * g).collect(),
    })
}

/// Mode values of `L''` for the sup norm: `-(1/P_*)(1 - (1 - r_*^n)^2)` in degree 1 and
/// `-1/P_*` above, with the degree-1 value of the non-inverted formula alongside.
pub fn linf_hessian_modes(m: f64, n: Dimension, kmax: usize) -> Result<HessianReport> {
    if kmax == 0 {
        return Err(domain("K", 0.0, "K >= 1"));
    }
    let rs = n.checked_radius(m)?;
    let per = n.perimeter(rs);
    let c = 1.0 - rs.powi(n.n() as i32);
    let kmax = if n.n() == 1 { 1 } else { kmax };
    let mut per_mode = BTreeMap::new();
    for k in 1..=kmax {
        per_mode.insert(k, if k == 1 { -(1.0 - c * c) / per } else { -1.0 / per });
    }
    let mut printed = BTreeMap::new();
    printed.insert(1, -(1.0 - c * c / (n.nf() * n.nf())) / per);
    Ok(HessianReport { n, m, per_mode, printed, tau: multiplier_tau_linf(m, n)? })
}

/// Central second differences of `L(t)` with Richardson extrapolation.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub analytic: f64,
    /// `(h, (L(h) - 2 L(0) + L(-h)) / h^2)`
    pub differences: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub rel_err: f64,
    /// Observed order of the raw differences (needs three steps in ratio 2).
    pub order: Option<f64>,
    /// Estimated error of `L` from the field truncation, divided by `h_min^2`.
    pub noise: f64,
    pub inconclusive: bool,
}

impl FdReport {
    /// Rows `analytic, h, fd_value, rel_err, order`.
    pub fn csv_rows(&self) -> Vec<[f64; 5]> {
        self.differences
            .iter()
            .map(|&(h, v)| {
                [self.analytic, h, v, ((v - self.analytic) / self.analytic).abs(), self.order.unwrap_or(f64::NAN)]
            })
            .collect()
    }
}

fn field_modes(p: &Perturbation) -> usize {
    (12 * p.g.cutoff()).max(48)
}

/// `L(t) = J(E_t) + tau |E_t|` along `E_t = B_*^{t g}` (volume-projected when required).
pub fn lagrangian_along(p: &Perturbation, obj: &Objective, m: f64, t: f64, kmax: usize) -> Result<f64> {
    let n = p.n();
    let e = p.deformed(m, t)?;
    let tau = match obj {
        Objective::Lp(j) => multiplier_tau(j, m, n)?,
        Objective::Linf => multiplier_tau_linf(m, n)?,
    };
    Ok(obj.value(&e, kmax)? + tau * e.volume())
}

/// Compares the second differences of `L` with the analytic `L''(0)`.
pub fn fd_validate(p: &Perturbation, obj: &Objective, m: f64, n: Dimension, steps: &[f64]) -> Result<FdReport> {
    if steps.is_empty() || steps.windows(2).any(|w| w[1] >= w[0]) || steps[steps.len() - 1] <= 0.0 {
        return Err(Error::InvalidInput("steps must be positive and decreasing".into()));
    }
    if p.n() != n {
        return Err(Error::InvalidInput("perturbation dimension does not match".into()));
    }
    let analytic = match obj {
        Objective::Lp(j) => {
            if p.volume_preserving {
                hessian_modes(j, m, n, p.g.cutoff().max(1))?.total(p)?
            } else {
                lagrangian_second_derivative(p, j, m, n)?
            }
        }
        Objective::Linf => linf_hessian_modes(m, n, p.g.cutoff().max(1))?.total(p)?,
    };
    let kmax = field_modes(p);
    let mut ts: Vec<f64> = vec![0.0];
    for &h in steps {
        ts.push(h);
        ts.push(-h);
    }
    let values: Vec<f64> = ts.par_iter().map(|&t| lagrangian_along(p, obj, m, t, kmax)).collect::<Result<Vec<_>>>()?;
    let l0 = values[0];
    let differences: Vec<(f64, f64)> = steps
        .iter()
        .enumerate()
        .map(|(i, &h)| (h, (values[1 + 2 * i] - 2.0 * l0 + values[2 + 2 * i]) / (h * h)))
        .collect();
    let extrapolated = if differences.len() >= 2 {
        let (h1, d1) = differences[differences.len() - 2];
        let (h2, d2) = differences[differences.len() - 1];
        let r = (h1 / h2).powi(2);
        (r * d2 - d1) / (r - 1.0)
    } else {
        differences[0].1
    };
    let order = if differences.len() >= 3 {
        let k = differences.len();
        let (a, b, c) = (differences[k - 3].1, differences[k - 2].1, differences[k - 1].1);
        let ratio = differences[k - 3].0 / differences[k - 2].0;
        let num = (a - b).abs();
        let den = (b - c).abs();
        if num > 0.0 && den > 0.0 {
            Some((num / den).ln() / ratio.ln())
        } else {
            None
        }
    } else {
        None
    };
    // truncation error of L at the smallest step, from a run with twice the modes
    let hmin = steps[steps.len() - 1];
    let fine = lagrangian_along(p, obj, m, hmin, 2 * kmax)?;
    let coarse = values[values.len() - 2];
    let noise = 4.0 * (fine - coarse).abs() / (hmin * hmin);
    let rel_err = if analytic != 0.0 { ((extrapolated - analytic) / analytic).abs() } else { extrapolated.abs() };
    let scale = analytic.abs().max(1e-300);
    Ok(FdReport { analytic, differences, extrapolated, rel_err, order, noise, inconclusive: noise > 1e-3 * scale })
}

/// Central differences of the maximum point of `u_{E_t}` with one Richardson step.
pub fn fd_max_point(p: &Perturbation, m: f64, h: f64) -> Result<Vec<f64>> {
    let x = |t: f64| -> Result<Vec<f64>> { Ok(greens::sup_norm_via_max(&p.deformed(m, t)?)?.0) };
    let d = |h: f64| -> Result<Vec<f64>> {
        let (a, b) = (x(h)?, x(-h)?);
        Ok(a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * h)).collect())
    };
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

/// `(J(B_*) - J(E_t), |B_* delta E_t|)` along the volume-projected family.
pub fn deficit_along(p: &Perturbation, obj: &Objective, m: f64, ts: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let n = p.n();
    let kmax = field_modes(p);
    let ball = StarDomain::ball(n, n.checked_radius(m)?)?;
    let j0 = obj.value(&ball, kmax)?;
    ts.par_iter()
        .map(|&t| {
            let e = p.deformed(m, t)?;
            let sd = crate::domains::symdiff_volume(&e, m)?;
            Ok((t, j0 - obj.value(&e, kmax)?, sd))
        })
        .collect()
}

/// `P(B_*)^{-1}`, the degree `>= 2` sup-norm mode magnitude.
pub fn inverse_perimeter(m: f64, n: Dimension) -> Result<f64> {
    Ok(1.0 / n.perimeter(n.checked_radius(m)?))
}
