//! Competitor sets: the annulus family `A_delta` and star-shaped perturbations of `B_*`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::dimension::Dimension;
use crate::error::{domain, Error, Result};
use crate::harmonics;
use crate::quad;
use crate::radial::RadialDensity;
use crate::tolerances;

/// `A_delta = B_{r1} ∪ {r_* < |x| < r2}` with `|A_delta| = m`, `|A_delta Δ B_*| = delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSet {
    n: Dimension,
    m: f64,
    delta: f64,
    r_star: f64,
    r1: f64,
    r2: f64,
}

pub fn annulus(m: f64, delta: f64, n: Dimension) -> Result<AnnulusSet> {
    let w = n.ball_volume();
    let r_star = n.checked_radius(m)?;
    let cap = (2.0 * m).min(2.0 * (w - m));
    if !(delta > 0.0 && delta < cap) {
        return Err(domain("delta", delta, format!("(0, {cap})")));
    }
    let r1 = n.radius_of_volume(m - 0.5 * delta);
    let r2 = n.radius_of_volume(m + 0.5 * delta).min(1.0);
    Ok(AnnulusSet { n, m, delta, r_star, r1, r2 })
}

impl AnnulusSet {
    pub fn n(&self) -> Dimension {
        self.n
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn r_star(&self) -> f64 {
        self.r_star
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn volume(&self) -> f64 {
        let n = self.n;
        n.volume_of_radius(self.r1) + n.volume_of_radius(self.r2) - n.volume_of_radius(self.r_star)
    }

    pub fn symdiff(&self) -> f64 {
        let n = self.n;
        (n.volume_of_radius(self.r_star) - n.volume_of_radius(self.r1))
            + (n.volume_of_radius(self.r2) - n.volume_of_radius(self.r_star))
    }

    /// Indicator as a radial density.
    pub fn density(&self) -> RadialDensity {
        let (breaks, values): (Vec<f64>, Vec<f64>) = if self.r2 >= 1.0 {
            (vec![0.0, self.r1, self.r_star, 1.0], vec![1.0, 0.0, 1.0])
        } else {
            (vec![0.0, self.r1, self.r_star, self.r2, 1.0], vec![1.0, 0.0, 1.0, 0.0])
        };
        RadialDensity::steps(self.n, &breaks, &values).expect("annulus radii are ordered")
    }
}

/// Finitely supported harmonic expansion `g = sum alpha_{k,idx} Y_{k,idx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoeffs {
    n: Dimension,
    entries: BTreeMap<(usize, usize), f64>,
}

impl HarmonicCoeffs {
    pub fn new(n: Dimension) -> Result<Self> {
        if n.n() > 3 {
            return Err(domain("n", n.nf(), "{1, 2, 3} for angular expansions"));
        }
        Ok(Self { n, entries: BTreeMap::new() })
    }

    pub fn n(&self) -> Dimension {
        self.n
    }

    pub fn set(&mut self, k: usize, idx: usize, value: f64) -> Result<()> {
        if idx >= harmonics::multiplicity(self.n, k) {
            return Err(Error::InvalidInput(format!("no harmonic ({k}, {idx}) in dimension {}", self.n)));
        }
        if !value.is_finite() {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        if value == 0.0 {
            self.entries.remove(&(k, idx));
        } else {
            self.entries.insert((k, idx), value);
        }
        Ok(())
    }

    pub fn with(mut self, k: usize, idx: usize, value: f64) -> Result<Self> {
        self.set(k, idx, value)?;
        Ok(self)
    }

    /// Single normalized mode `alpha Y_{k,idx}`.
    pub fn single(n: Dimension, k: usize, idx: usize, alpha: f64) -> Result<Self> {
        Self::new(n)?.with(k, idx, alpha)
    }

    /// `eps * raw_{k,idx}` (e.g. `eps cos k theta`), stored in the normalized basis.
    pub fn raw_mode(n: Dimension, k: usize, idx: usize, eps: f64) -> Result<Self> {
        Self::single(n, k, idx, eps * harmonics::normalization(n, k))
    }

    pub fn get(&self, k: usize, idx: usize) -> f64 {
        self.entries.get(&(k, idx)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&key, &v)| (key, v))
    }

    /// Highest degree with a nonzero coefficient.
    pub fn cutoff(&self) -> usize {
        self.entries.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.iter().map(|((k, i), a)| a * harmonics::basis(self.n, k, i, theta)).sum()
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v *= t;
        }
        out.entries.retain(|_, v| *v != 0.0);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `sum alpha^2 = ||g||^2_{L^2(S^{n-1})}`.
    pub fn norm_sq(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    /// Rows `(k, idx, coefficient)`.
    pub fn csv_rows(&self) -> Vec<(usize, usize, f64)> {
        self.iter().map(|((k, i), v)| (k, i, v)).collect()
    }
}

/// Star-shaped set `{ |x| < r_* + g(x/|x|) }`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarDomain {
    n: Dimension,
    r_star: f64,
    g: HarmonicCoeffs,
    min_r: f64,
    max_r: f64,
}

impl StarDomain {
    pub fn new(r_star: f64, g: HarmonicCoeffs) -> Result<Self> {
        let n = g.n();
        if !(r_star > 0.0 && r_star < 1.0) {
            return Err(domain("r_star", r_star, "(0, 1)"));
        }
        let (min_r, max_r) = extremes(n, r_star, &g);
        if !(min_r > 0.0 && max_r < 1.0) {
            return Err(Error::InvalidInput(format!("boundary radius leaves (0, 1): min {min_r}, max {max_r}")));
        }
        Ok(Self { n, r_star, g, min_r, max_r })
    }

    pub fn ball(n: Dimension, r: f64) -> Result<Self> {
        Self::new(r, HarmonicCoeffs::new(n)?)
    }

    pub fn n(&self) -> Dimension {
        self.n
    }
    pub fn r_star(&self) -> f64 {
        self.r_star
    }
    pub fn g(&self) -> &HarmonicCoeffs {
        &self.g
    }
    pub fn min_radius(&self) -> f64 {
        self.min_r
    }
    pub fn max_radius(&self) -> f64 {
        self.max_r
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.r_star + self.g.eval(theta)
    }

    pub fn is_radial(&self) -> bool {
        self.g.cutoff() == 0
    }

    /// Angular rule exact for `R^n` times harmonics of degree `extra`.
    pub fn angular_rule(&self, extra: usize) -> Vec<(f64, f64)> {
        harmonics::angular_rule(self.n, self.n.n() * self.g.cutoff() + extra + 8)
    }

    pub fn volume(&self) -> f64 {
        let n = self.n.n() as i32;
        self.angular_rule(0).iter().map(|&(t, w)| w * self.radius(t).powi(n)).sum::<f64>() / n as f64
    }

    fn span(&self) -> f64 {
        angular_span(self.n)
    }

    /// Sorted angles in the angular range where `R(theta) = r`.
    pub fn crossings(&self, r: f64) -> Vec<f64> {
        if self.n.n() == 1 || r <= self.min_r || r >= self.max_r {
            return Vec::new();
        }
        let samples = 64 * (self.g.cutoff() + 1);
        let span = self.span();
        let f = |t: f64| self.radius(t) - r;
        let mut roots = Vec::new();
        let mut t0 = 0.0;
        let mut f0 = f(t0);
        for i in 1..=samples {
            let t1 = span * i as f64 / samples as f64;
            let f1 = f(t1);
            if f0 == 0.0 {
                roots.push(t0);
            } else if f0 * f1 < 0.0 {
                let (mut a, mut b) = (t0, t1);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if f(m) * f0 > 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            t0 = t1;
            f0 = f1;
        }
        roots
    }

    /// Arcs of the angular range on which `R(theta) > r`.
    pub fn arcs_above(&self, r: f64) -> Vec<(f64, f64)> {
        let span = self.span();
        if r < self.min_r {
            return vec![(0.0, span)];
        }
        if r >= self.max_r {
            return Vec::new();
        }
        let mut cuts = vec![0.0];
        cuts.extend(self.crossings(r));
        cuts.push(span);
        cuts.windows(2).filter(|w| w[1] > w[0] && self.radius(0.5 * (w[0] + w[1])) > r).map(|w| (w[0], w[1])).collect()
    }

    /// Rows `(k, idx, coefficient)` with the base radius as row `(0, 0)` offset.
    pub fn csv_rows(&self) -> Vec<(usize, usize, f64)> {
        self.g.csv_rows()
    }

    pub(crate) fn with_g(&self, g: HarmonicCoeffs) -> Result<Self> {
        Self::new(self.r_star, g)
    }
}

fn angular_span(n: Dimension) -> f64 {
    match n.n() {
        2 => 2.0 * PI,
        _ => PI,
    }
}

fn extremes(n: Dimension, r_star: f64, g: &HarmonicCoeffs) -> (f64, f64) {
    if n.n() == 1 {
        let a = r_star + g.eval(0.0);
        let b = r_star + g.eval(PI);
        return (a.min(b), a.max(b));
    }
    if g.cutoff() == 0 {
        let r = r_star + g.eval(0.0);
        return (r, r);
    }
    let span = angular_span(n);
    let samples = 128 * (g.cutoff() + 1);
    let h = span / samples as f64;
    let f = |t: f64| r_star + g.eval(t);
    let mut lo = (f64::INFINITY, 0.0);
    let mut hi = (f64::NEG_INFINITY, 0.0);
    for i in 0..=samples {
        let t = h * i as f64;
        let v = f(t);
        if v < lo.0 {
            lo = (v, t);
        }
        if v > hi.0 {
            hi = (v, t);
        }
    }
    let polish = |t0: f64, sign: f64| {
        let (mut a, mut b) = ((t0 - h).max(if n.n() == 3 { 0.0 } else { f64::NEG_INFINITY }), t0 + h);
        if n.n() == 3 {
            b = b.min(PI);
        }
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..120 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if sign * f(c) < sign * f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f(0.5 * (a + b))
    };
    (polish(lo.1, 1.0).min(lo.0), polish(hi.1, -1.0).max(hi.0))
}

/// `|E Δ B_*|` for the centered ball `B_*` of volume `m`.
pub fn symdiff_volume(e: &StarDomain, m: f64) -> Result<f64> {
    let n = e.n;
    let rho = n.checked_radius(m)?;
    let ni = n.n() as i32;
    let f = |t: f64| (e.radius(t).powi(ni) - rho.powi(ni)).abs() / n.nf();
    if n.n() == 1 {
        return Ok(harmonics::angular_rule(n, 0).iter().map(|&(t, w)| w * f(t)).sum());
    }
    let span = angular_span(n);
    let mut cuts = vec![0.0];
    cuts.extend(e.crossings(rho));
    cuts.push(span);
    let pts = 2 * ni as usize * e.g.cutoff() + 24;
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        if n.n() == 2 {
            let pieces = ((w[1] - w[0]) / 0.25).ceil().max(1.0) as usize;
            acc += quad::composite(&[w[0], w[1]], pieces, 30, f);
        } else {
            // integrate in mu = cos theta, where R^n is a polynomial
            acc += 2.0 * PI * quad::gauss(w[1].cos(), w[0].cos(), pts / 2 + 2, |mu| f(mu.clamp(-1.0, 1.0).acos()));
        }
    }
    Ok(acc)
}

/// Adjusts the degree-0 coefficient so that `|E| = m`.
pub fn project_volume(e: &StarDomain, m: f64) -> Result<StarDomain> {
    let n = e.n;
    let vol = e.volume();
    if (vol - m).abs() > 0.1 * m {
        return Err(Error::Projection(format!("volume {vol} is not within 10% of {m}")));
    }
    let y0 = 1.0 / harmonics::normalization(n, 0);
    let ni = n.n() as i32;
    let rule = e.angular_rule(0);
    let radii: Vec<(f64, f64)> = rule.iter().map(|&(t, w)| (e.radius(t) - e.g.get(0, 0) * y0, w)).collect();
    let base = e.g.get(0, 0);
    let volume_at = |c: f64| radii.iter().map(|&(r, w)| w * (r + c * y0).powi(ni)).sum::<f64>() / n.nf();
    let slope_at = |c: f64| radii.iter().map(|&(r, w)| w * (r + c * y0).powi(ni - 1) * y0).sum::<f64>();
    let mut c = base;
    let mut converged = false;
    for _ in 0..60 {
        let resid = volume_at(c) - m;
        if resid.abs() <= tolerances::PROJECTION * 1e-2 {
            converged = true;
            break;
        }
        let step = resid / slope_at(c);
        c -= step;
        if !c.is_finite() {
            break;
        }
        if step.abs() < 1e-17 {
            converged = (volume_at(c) - m).abs() <= tolerances::PROJECTION;
            break;
        }
    }
    if !converged {
        return Err(Error::Projection(format!("Newton iteration for the degree-0 shift stalled at {c}")));
    }
    let mut g = e.g.clone();
    g.set(0, 0, c)?;
    e.with_g(g)
}

/// `<chi_{E}(r, .), Y_{k,idx}>` on the unit sphere (the basis is orthonormal).
pub fn indicator_harmonic_coefficient(e: &StarDomain, k: usize, idx: usize, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(domain("r", r, "(0, 1)"));
    }
    let n = e.n;
    if idx >= harmonics::multiplicity(n, k) {
        return Ok(0.0);
    }
    if n.n() == 1 {
        return Ok(harmonics::angular_rule(n, 0)
            .iter()
            .filter(|&&(t, _)| e.radius(t) > r)
            .map(|&(t, w)| w * harmonics::basis(n, k, idx, t))
            .sum());
    }
    Ok(e.arcs_above(r).into_iter().map(|(a, b)| harmonics::basis_arc_integral(n, k, idx, a, b)).sum())
}
