//! Spectrum of the operator `T g = tr W_g` on `dB_*`, where `-Delta U_g = g dH` and
//! `-Delta W_g = j''(u_0) U_g`, together with the flux `rho = |d_nu w_0|` on `dB_*`.
//!
//! `T` is diagonal on harmonics. The eigenvalue of degree `k` is computed three ways: the
//! `psi / psi~` construction solved as a homogeneous linear system, a closed form obtained
//! by eliminating that system, and chained two-point problems with the mode Green's function.
//!
//! The closed form carries two pieces, `1/lambda_k = outer + inner`. The outer shell piece
//! `r_*^{n+2k-1} (psi~_2(1) - psi~_1(1)) / N_k` is what one gets by requiring `c_2^- = 0`;
//! but `psi~_1` is itself singular at the origin whenever `j''(u_0) > 0` on `(0, r_*)`,
//! with `psi~_1 ~ (C_k / N_k) psi_2`, so regularity really asks `c_2^- + (C_k/N_k) c_3^- = 0`.
//! This adds `inner = r_*^{n-1} b_k(r_*)^2 C_k / N_k^2`, with `C_k = int_0^{r_*} j''(u_0) t^{n+2k-1}`.
//! The shell-only value is kept as [`outer_shell_lambda`] and [`RegularityRow::AsPrinted`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SVD};
use rayon::prelude::*;

use crate::dimension::Dimension;
use crate::error::{domain, Error, Result};
use crate::integrand::ConvexIntegrand;
use crate::modes::ModeKernel;
use crate::quad;
use crate::tolerances;

/// `u_0 = u_{B_*}` and `j''(u_0)` along the radius.
#[derive(Debug, Clone)]
pub struct Background {
    n: Dimension,
    m: f64,
    r_star: f64,
    j: ConvexIntegrand,
}

impl Background {
    pub fn new(j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<Self> {
        if !(m > 0.0 && m < n.ball_volume()) {
            return Err(domain("m", m, format!("(0, {})", n.ball_volume())));
        }
        j.validate()?;
        Ok(Self { n, m, r_star: n.radius_of_volume(m), j: j.clone() })
    }

    pub fn n(&self) -> Dimension {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn r_star(&self) -> f64 {
        self.r_star
    }

    pub fn integrand(&self) -> &ConvexIntegrand {
        &self.j
    }

    fn edge_coeff(&self) -> f64 {
        self.r_star.powi(self.n.n() as i32) / self.n.nf()
    }

    pub fn u0(&self, t: f64) -> f64 {
        let rs = self.r_star;
        if t >= rs {
            self.edge_coeff() * self.n.flux_kernel(t)
        } else {
            self.edge_coeff() * self.n.flux_kernel(rs) + (rs * rs - t * t) / (2.0 * self.n.nf())
        }
    }

    /// `u_0(1 - gap)` for `1 - gap > r_*`.
    pub fn u0_gap(&self, gap: f64) -> f64 {
        self.edge_coeff() * self.n.flux_kernel_gap(gap)
    }

    pub fn j2(&self, t: f64) -> f64 {
        self.j.d2(self.u0(t))
    }

    fn j2_gap(&self, gap: f64) -> f64 {
        self.j.d2(self.u0_gap(gap))
    }

    /// `int_{r_*}^1 j''(u_0(t)) f(t) dt`, graded at `t = 1` where `j''(u_0)` may blow up.
    pub fn shell_integral<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        quad::graded_right(self.r_star, 1.0, 2.0, |gap| {
            let v = self.j2_gap(gap);
            if v == 0.0 {
                0.0
            } else {
                v * f(1.0 - gap)
            }
        })
    }

    /// `int_0^{r_*} j''(u_0(t)) f(t) dt`.
    pub fn core_integral<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let breaks: Vec<f64> = (0..=8).map(|i| self.r_star * i as f64 / 8.0).collect();
        quad::composite(&breaks, 1, 20, |t| self.j2(t) * f(t))
    }
}

fn check_k(n: Dimension, k: usize) -> Result<()> {
    if k == 0 {
        return Err(domain("k", 0.0, "k >= 1"));
    }
    if n.n() == 1 && k > 1 {
        return Err(domain("k", k as f64, "k = 1 for n = 1"));
    }
    Ok(())
}

fn summable(j: &ConvexIntegrand) -> Result<()> {
    if j.alpha() >= 1.0 {
        return Err(Error::Integrand(format!("j'' ~ s^-{} is not summable against u_0 near the boundary", j.alpha())));
    }
    Ok(())
}

fn norm_k(n: Dimension, k: usize) -> f64 {
    n.nf() + 2.0 * k as f64 - 2.0
}

/// `psi~_beta(1) = int_{r_*}^1 j''(u_0) psi_beta(t) t^{n+k-1} (t^{2-n-2k} - 1) / N_k dt`.
pub fn psi_tilde_at_one(k: usize, beta: usize, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    check_k(n, k)?;
    summable(j)?;
    let bg = Background::new(j, m, n)?;
    let nk = norm_k(n, k);
    let (ki, ni) = (k as i32, n.n() as i32);
    let pb = move |t: f64| if beta == 1 { t.powi(ki) } else { t.powi(2 - ni - ki) };
    Ok(bg.shell_integral(|t| pb(t) * t.powi(ni + ki - 1) * (t.powi(2 - ni - 2 * ki) - 1.0) / nk))
}

fn gap_with(bg: &Background, k: usize) -> f64 {
    let nk = norm_k(bg.n, k);
    let (ki, ni) = (k as i32, bg.n.n() as i32);
    bg.shell_integral(|t| t.powi(3 - ni - 2 * ki) * (1.0 - t.powi(ni + 2 * ki - 2)).powi(2) / nk)
}

/// `psi~_2(1) - psi~_1(1)` as a single quadrature.
pub fn psi_tilde_gap(k: usize, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    check_k(n, k)?;
    summable(j)?;
    Ok(gap_with(&Background::new(j, m, n)?, k))
}

/// `C_k = int_0^{r_*} j''(u_0(t)) t^{n+2k-1} dt`.
pub fn inner_mass(k: usize, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    check_k(n, k)?;
    let bg = Background::new(j, m, n)?;
    let e = (n.n() + 2 * k - 1) as i32;
    Ok(bg.core_integral(|t| t.powi(e)))
}

fn outer_inverse(bg: &Background, k: usize) -> f64 {
    let e = (bg.n.n() + 2 * k - 1) as i32;
    bg.r_star.powi(e) / norm_k(bg.n, k) * gap_with(bg, k)
}

fn inner_inverse(bg: &Background, k: usize) -> f64 {
    let m = ModeKernel::new(bg.n, k);
    let rs = bg.r_star;
    let nk = norm_k(bg.n, k);
    let e = (bg.n.n() + 2 * k - 1) as i32;
    rs.powi(bg.n.n() as i32 - 1) * m.b(rs).powi(2) / (nk * nk) * bg.core_integral(|t| t.powi(e))
}

/// `1/lambda_k`, zero when `j` is affine.
pub fn inverse_lambda_k(k: usize, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    check_k(n, k)?;
    summable(j)?;
    let bg = Background::new(j, m, n)?;
    Ok(outer_inverse(&bg, k) + inner_inverse(&bg, k))
}

fn invert(inv: f64) -> Result<f64> {
    if !(inv > 0.0) {
        return Err(Error::Integrand(format!("degenerate eigenvalue: 1/lambda = {inv}")));
    }
    Ok(1.0 / inv)
}

/// `lambda_k` in closed form (shell and core contributions).
pub fn lambda_k_closed(k: usize, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    invert(inverse_lambda_k(k, j, m, n)?)
}

/// `N_k r_*^{1-n-2k} / (psi~_2(1) - psi~_1(1))`: the shell-only value, which equals
/// `lambda_k` only when `j''(u_0)` vanishes on `B_*`.
pub fn outer_shell_lambda(k: usize, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    check_k(n, k)?;
    summable(j)?;
    let bg = Background::new(j, m, n)?;
    invert(outer_inverse(&bg, k))
}

/// Regularity condition imposed on `phi` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityRow {
    /// The `r^{2-n-k}` part of `phi` vanishes: `c_2^- + (C_k / N_k) c_3^- = 0`.
    Corrected,
    /// `c_2^- = 0`.
    AsPrinted,
}

/// Null vector `(c_1^-, c_2^-, c_3^-, c_4^-, c_1^+, c_2^+, c_3^+, c_4^+)` normalized by
/// `c_1^- = 1`, singular values of the column-scaled system and the jump ratio.
#[derive(Debug, Clone)]
pub struct SystemSolution {
    pub coefficients: [f64; 8],
    pub singular_values: Vec<f64>,
    pub lambda: f64,
}

pub fn solve_mode_system(
    k: usize,
    j: &ConvexIntegrand,
    m: f64,
    n: Dimension,
    row: RegularityRow,
) -> Result<SystemSolution> {
    check_k(n, k)?;
    summable(j)?;
    let bg = Background::new(j, m, n)?;
    if j.is_affine() {
        return Err(Error::Integrand("j'' vanishes: T = 0 and lambda_k is infinite".into()));
    }
    let rs = bg.r_star;
    let (kf, nf) = (k as f64, n.nf());
    let nk = norm_k(n, k);
    let p1 = rs.powf(kf);
    let p2 = rs.powf(2.0 - nf - kf);
    let t1 = psi_tilde_at_one(k, 1, j, m, n)?;
    let t2 = psi_tilde_at_one(k, 2, j, m, n)?;
    let ck = inner_mass(k, j, m, n)?;
    let dpsi2 = (2.0 - nf - 2.0 * kf) * rs.powf(1.0 - nf - 2.0 * kf);

    // columns: c1- c2- c3- c4- c1+ c2+ c3+ c4+
    let mut a = DMatrix::<f64>::zeros(8, 8);
    a[(0, 3)] = 1.0;
    a[(1, 1)] = 1.0;
    if row == RegularityRow::Corrected {
        a[(1, 2)] = ck / nk;
    }
    // phi continuous at r_*
    a[(2, 0)] = p1;
    a[(2, 1)] = p2;
    a[(2, 4)] = -p1;
    a[(2, 5)] = -p2;
    // d_r(r^{-k} phi) continuous
    a[(3, 1)] = dpsi2;
    a[(3, 5)] = -dpsi2;
    // D phi / j'' continuous
    a[(4, 2)] = p1;
    a[(4, 3)] = p2;
    a[(4, 6)] = -p1;
    a[(4, 7)] = -p2;
    // phi(1) = 0 and D phi / j'' (1) = 0
    a[(5, 4)] = 1.0;
    a[(5, 5)] = 1.0;
    a[(5, 6)] = t1;
    a[(5, 7)] = t2;
    a[(6, 6)] = 1.0;
    a[(6, 7)] = 1.0;
    // row 7 stays zero so the SVD returns a full basis of R^8

    let scales: Vec<f64> = (0..8).map(|c| a.column(c).norm().max(1e-300)).collect();
    for (c, &s) in scales.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / s);
    }
    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Construction { singular_values: vec![] })?;
    let mut order: Vec<usize> = (0..8).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].partial_cmp(&svd.singular_values[x]).unwrap());
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    if sv[6] <= tolerances::NULL_SPACE * sv[0] {
        return Err(Error::Construction { singular_values: sv });
    }
    let null = v_t.row(order[7]);
    let mut c = [0.0; 8];
    for i in 0..8 {
        c[i] = null[i] / scales[i];
    }
    if c[0].abs() < 1e-300 {
        return Err(Error::Construction { singular_values: sv });
    }
    let c0 = c[0];
    for v in c.iter_mut() {
        *v /= c0;
    }
    // lambda = [d_r (D phi / j'')](r_*) / phi(r_*)
    let jump = (c[6] - c[2]) * kf * rs.powf(kf - 1.0) + (c[7] - c[3]) * (2.0 - nf - kf) * rs.powf(1.0 - nf - kf);
    let phi = c[0] * p1 + c[1] * p2;
    Ok(SystemSolution { coefficients: c, singular_values: sv, lambda: jump / phi })
}

/// `lambda_k` from the null space of the seven matching conditions.
pub fn lambda_k_via_system(k: usize, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    Ok(solve_mode_system(k, j, m, n, RegularityRow::Corrected)?.lambda)
}

/// `<T Y_k, Y_k> / ||Y_k||^2` from the chained problems
/// `L_k phi_U = delta_{r_*}` and `L_k phi_W = j''(u_0) phi_U`, returning `phi_W(r_*)`.
#[allow(non_snake_case)]
pub fn operator_T_apply(k: usize, j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<f64> {
    check_k(n, k)?;
    summable(j)?;
    let bg = Background::new(j, m, n)?;
    let g = ModeKernel::new(n, k);
    let rs = bg.r_star;
    let ni = n.n() as i32;
    // [phi_U'](r_*) = -1
    let phi_u = |s: f64| rs.powi(ni - 1) * g.green(s, rs);
    // variation of parameters at r = r_*
    let below = bg.core_integral(|s| g.a(s) * phi_u(s) * s.powi(ni - 1));
    let above = bg.shell_integral(|s| g.b(s) * phi_u(s) * s.powi(ni - 1));
    let v = (g.b(rs) * below + g.a(rs) * above) / g.norm();
    if !v.is_finite() {
        return Err(Error::Integrand("quadrature of the chained problem did not converge".into()));
    }
    Ok(v)
}

/// `rho = |d_nu w_0|` on `dB_*` and the lower bound
/// `(1 / (n^2 r_*^{n-1})) int_0^1 j''(u_0) min(t, r_*)^{2n} t^{1-n} dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rho {
    pub exact: f64,
    pub bound: f64,
}

pub fn rho(j: &ConvexIntegrand, m: f64, n: Dimension) -> Result<Rho> {
    let bg = Background::new(j, m, n)?;
    let rs = bg.r_star;
    let ni = n.n() as i32;
    let breaks: Vec<f64> = (0..=8).map(|i| rs * i as f64 / 8.0).collect();
    let flux = quad::composite(&breaks, 1, 20, |t| j.d1(bg.u0(t)) * t.powi(ni - 1));
    let exact = rs.powi(1 - ni) * flux;
    let bound = if j.alpha() >= 1.0 {
        0.0
    } else {
        let inner = bg.core_integral(|t| t.powi(2 * ni) * t.powi(1 - ni));
        let outer = bg.shell_integral(|t| rs.powi(2 * ni) * t.powi(1 - ni));
        (inner + outer) / (n.nf() * n.nf() * rs.powi(ni - 1))
    };
    Ok(Rho { exact, bound })
}

#[derive(Debug, Clone)]
pub struct EigenReport {
    pub j: ConvexIntegrand,
    pub n: Dimension,
    pub m: f64,
    /// `lambda_k` for `k = 1..K`; `inf` for affine `j`.
    pub lambdas: BTreeMap<usize, f64>,
    pub rho: f64,
    pub rho_bound: f64,
    /// `rho - 1/lambda_1`.
    pub gap: f64,
    /// `rho` minus the shell-only `1/lambda_1`.
    pub shell_gap: f64,
    pub monotone: bool,
}

impl EigenReport {
    pub fn coercive(&self) -> bool {
        self.gap > 0.0
    }

    pub fn bound_holds(&self) -> bool {
        self.rho_bound <= self.rho * (1.0 + 1e-10)
    }

    /// Rows `k, lambda_k, 1/lambda_k, rho, gap`.
    pub fn csv_rows(&self) -> Vec<[f64; 5]> {
        self.lambdas
            .iter()
            .map(|(&k, &l)| [k as f64, l, if l.is_infinite() { 0.0 } else { 1.0 / l }, self.rho, self.gap])
            .collect()
    }
}

/// `lambda_1..lambda_K`, `rho` and the coercivity gap.
pub fn coercivity_report(j: &ConvexIntegrand, m: f64, n: Dimension, kmax: usize) -> Result<EigenReport> {
    if kmax == 0 {
        return Err(domain("K", 0.0, "K >= 1"));
    }
    let kmax = if n.n() == 1 { 1 } else { kmax };
    let r = rho(j, m, n)?;
    let inverses: Vec<f64> =
        (1..=kmax).into_par_iter().map(|k| inverse_lambda_k(k, j, m, n)).collect::<Result<Vec<_>>>()?;
    let lambdas: BTreeMap<usize, f64> = inverses
        .iter()
        .enumerate()
        .map(|(i, &inv)| (i + 1, if inv > 0.0 { 1.0 / inv } else { f64::INFINITY }))
        .collect();
    let monotone = inverses.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10));
    let shell = if j.is_affine() { 0.0 } else { 1.0 / outer_shell_lambda(1, j, m, n)? };
    Ok(EigenReport {
        j: j.clone(),
        n,
        m,
        lambdas,
        rho: r.exact,
        rho_bound: r.bound,
        gap: r.exact - inverses[0],
        shell_gap: r.exact - shell,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn sq() -> ConvexIntegrand {
        ConvexIntegrand::power(2.0).unwrap()
    }

    #[test]
    fn gap_reference_value() {
        let g = psi_tilde_gap(1, &sq(), PI / 4.0, d(2)).unwrap();
        assert!((g - 0.1775221805599453).abs() < 1e-13, "{g}");
        assert_eq!(psi_tilde_gap(2, &ConvexIntegrand::Linear, PI / 4.0, d(2)).unwrap(), 0.0);
    }

    #[test]
    fn gap_matches_separate_values() {
        for (k, n, p, expect) in
            [(2, 2, 2.0, 0.45703125), (3, 3, 3.0, 0.14512920076884922), (2, 3, 4.0, 0.0037683543485083917)]
        {
            let dn = d(n);
            let m = dn.volume_of_radius(0.5);
            let j = ConvexIntegrand::power(p).unwrap();
            let g = psi_tilde_gap(k, &j, m, dn).unwrap();
            let t1 = psi_tilde_at_one(k, 1, &j, m, dn).unwrap();
            let t2 = psi_tilde_at_one(k, 2, &j, m, dn).unwrap();
            assert!((g - expect).abs() < 1e-9 * expect.max(1.0), "k={k} n={n}: {g}");
            assert!((t2 - t1 - g).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_eigenvalue() {
        let (j, m, n) = (sq(), PI / 4.0, d(2));
        let shell = 1.0 / outer_shell_lambda(1, &j, m, n).unwrap();
        assert!((shell - 0.01109513628499658).abs() < 1e-14);
        let inv = inverse_lambda_k(1, &j, m, n).unwrap();
        assert!((inv - (0.01109513628499658 + 0.0087890625)).abs() < 1e-14);
        for (k, t) in [(1, 0.019884198784996584), (2, 0.005859375), (3, 0.0021972656250000004)] {
            let v = operator_T_apply(k, &j, m, n).unwrap();
            assert!((v - t).abs() < 1e-14, "k={k}: {v}");
        }
    }

    #[test]
    fn system_routes() {
        let (j, m, n) = (sq(), PI / 4.0, d(2));
        let sol = solve_mode_system(1, &j, m, n, RegularityRow::Corrected).unwrap();
        let closed = lambda_k_closed(1, &j, m, n).unwrap();
        assert!(((sol.lambda - closed) / closed).abs() < 1e-9);
        let c = sol.coefficients;
        assert!(c[3].abs() < 1e-12);
        let ck = inner_mass(1, &j, m, n).unwrap();
        assert!((c[1] + ck / 2.0 * c[2]).abs() < 1e-12 && (c[1] - c[5]).abs() < 1e-12);
        let printed = solve_mode_system(1, &j, m, n, RegularityRow::AsPrinted).unwrap();
        assert!(printed.coefficients[1].abs() < 1e-12 && printed.coefficients[5].abs() < 1e-12);
        let shell = outer_shell_lambda(1, &j, m, n).unwrap();
        assert!(((printed.lambda - shell) / shell).abs() < 1e-9);
    }

    #[test]
    fn rho_values() {
        let n = d(2);
        let r = rho(&sq(), PI / 4.0, n).unwrap();
        assert!((r.exact - 0.05894669878499658).abs() < 1e-13);
        assert!((r.bound - r.exact).abs() < 1e-10);
        let lin = rho(&ConvexIntegrand::Linear, PI / 4.0, n).unwrap();
        assert!((lin.exact - 0.25).abs() < 1e-14);
        assert!(lin.bound == 0.0 && lin.bound < lin.exact);
    }

    #[test]
    fn report() {
        let rep = coercivity_report(&sq(), PI / 4.0, d(2), 6).unwrap();
        assert!(rep.monotone && rep.coercive() && rep.bound_holds());
        assert!((rep.gap - 0.0390625).abs() < 1e-12);
        assert!((rep.shell_gap - 0.0478515625).abs() < 1e-12);
        assert_eq!(rep.csv_rows().len(), 6);
        let lin = coercivity_report(&ConvexIntegrand::Linear, PI / 4.0, d(2), 3).unwrap();
        assert!(lin.lambdas[&1].is_infinite() && (lin.gap - lin.rho).abs() < 1e-15);
    }

    #[test]
    fn rejects() {
        assert!(psi_tilde_gap(0, &sq(), 1.0, d(2)).is_err());
        assert!(psi_tilde_gap(1, &sq(), 4.0, d(2)).is_err());
        assert!(solve_mode_system(1, &ConvexIntegrand::Linear, 1.0, d(2), RegularityRow::Corrected).is_err());
    }
}
