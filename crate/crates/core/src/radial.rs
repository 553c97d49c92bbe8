//! Radial Poisson problems on the unit ball, rearrangements and level sets of radial data.

use crate::dimension::Dimension;
use crate::error::{domain, Error, Result};
use crate::integrand::ConvexIntegrand;
use crate::quad;
use crate::tolerances;

/// `V(r) = a + b r` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
}

impl DensityPiece {
    pub fn at(&self, r: f64) -> f64 {
        self.a + self.b * r
    }

    /// `int_lo^hi (a + b t) t^{n-1} dt`.
    fn moment(&self, n: f64) -> f64 {
        self.a * (self.hi.powf(n) - self.lo.powf(n)) / n
            + self.b * (self.hi.powf(n + 1.0) - self.lo.powf(n + 1.0)) / (n + 1.0)
    }

    /// Subinterval where `V > t` (or `V >= t` when `inclusive`).
    fn above(&self, t: f64, inclusive: bool) -> Option<(f64, f64)> {
        if self.b == 0.0 {
            let keep = if inclusive { self.a >= t } else { self.a > t };
            return keep.then_some((self.lo, self.hi));
        }
        let r0 = (t - self.a) / self.b;
        let (lo, hi) = if self.b > 0.0 { (r0.max(self.lo), self.hi) } else { (self.lo, r0.min(self.hi)) };
        (hi > lo).then_some((lo, hi))
    }
}

/// A radial density `0 <= V <= 1` on `[0, 1]`, piecewise linear in `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    n: Dimension,
    pieces: Vec<DensityPiece>,
}

impl RadialDensity {
    pub fn new(n: Dimension, pieces: Vec<DensityPiece>) -> Result<Self> {
        check_partition(&pieces)?;
        for p in &pieces {
            for v in [p.a, p.b, p.at(p.lo), p.at(p.hi)] {
                if !v.is_finite() {
                    return Err(Error::InvalidInput("non-finite density value".into()));
                }
            }
            let eps = 1e-12;
            if p.at(p.lo) < -eps || p.at(p.hi) < -eps || p.at(p.lo) > 1.0 + eps || p.at(p.hi) > 1.0 + eps {
                return Err(Error::InvalidInput(format!("density leaves [0, 1] on [{}, {}]", p.lo, p.hi)));
            }
        }
        Ok(Self { n, pieces })
    }

    /// Piecewise constant density: `values[i]` on `[breaks[i], breaks[i+1]]`.
    pub fn steps(n: Dimension, breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::InvalidInput("steps need one more break than values".into()));
        }
        let pieces =
            breaks.windows(2).zip(values).map(|(w, &v)| DensityPiece { lo: w[0], hi: w[1], a: v, b: 0.0 }).collect();
        Self::new(n, pieces)
    }

    /// Continuous piecewise linear density through `(breaks[i], values[i])`.
    pub fn linear(n: Dimension, breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() || breaks.len() < 2 {
            return Err(Error::InvalidInput("linear density needs matching breaks and values".into()));
        }
        let pieces = breaks
            .windows(2)
            .zip(values.windows(2))
            .map(|(r, v)| {
                let b = (v[1] - v[0]) / (r[1] - r[0]);
                DensityPiece { lo: r[0], hi: r[1], a: v[0] - b * r[0], b }
            })
            .collect();
        Self::new(n, pieces)
    }

    pub fn constant(n: Dimension, c: f64) -> Result<Self> {
        Self::steps(n, &[0.0, 1.0], &[c])
    }

    /// Indicator of the centered ball of radius `r`.
    pub fn ball(n: Dimension, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(domain("r", r, "[0, 1]"));
        }
        if r == 1.0 {
            return Self::constant(n, 1.0);
        }
        if r == 0.0 {
            return Self::constant(n, 0.0);
        }
        Self::steps(n, &[0.0, r, 1.0], &[1.0, 0.0])
    }

    pub fn n(&self) -> Dimension {
        self.n
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn is_steps(&self) -> bool {
        self.pieces.iter().all(|p| p.b == 0.0)
    }

    pub fn eval(&self, r: f64) -> f64 {
        let i = locate(&self.pieces.iter().map(|p| p.lo).collect::<Vec<_>>(), r);
        self.pieces[i].at(r)
    }

    /// `int V dx` over the unit ball.
    pub fn mass(&self) -> f64 {
        let n = self.n.nf();
        self.n.sphere_area() * self.pieces.iter().map(|p| p.moment(n)).sum::<f64>()
    }

    /// `|{V > t}|` (or `|{V >= t}|`).
    fn level_volume(&self, t: f64, inclusive: bool) -> f64 {
        let w = self.n.ball_volume();
        let n = self.n.n() as i32;
        self.pieces.iter().filter_map(|p| p.above(t, inclusive)).map(|(lo, hi)| w * (hi.powi(n) - lo.powi(n))).sum()
    }

    pub fn distribution(&self, t: f64) -> f64 {
        self.level_volume(t, false)
    }

    /// `int |V - W| dx`, exact for piecewise linear data.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let mut breaks: Vec<f64> = self.pieces.iter().chain(other.pieces.iter()).flat_map(|p| [p.lo, p.hi]).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let n = self.n.nf();
        let mut acc = 0.0;
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let p = self.piece_at(mid);
            let q = other.piece_at(mid);
            let d = DensityPiece { lo, hi, a: p.a - q.a, b: p.b - q.b };
            // split at the sign change of the linear difference
            let mut cuts = vec![lo];
            if d.b != 0.0 {
                let r0 = -d.a / d.b;
                if r0 > lo && r0 < hi {
                    cuts.push(r0);
                }
            }
            cuts.push(hi);
            for c in cuts.windows(2) {
                let seg = DensityPiece { lo: c[0], hi: c[1], ..d };
                acc += seg.moment(n).abs();
            }
        }
        self.n.sphere_area() * acc
    }

    fn piece_at(&self, r: f64) -> DensityPiece {
        *self.pieces.iter().find(|p| r >= p.lo && r <= p.hi).unwrap_or(self.pieces.last().unwrap())
    }

    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        let mut prev = f64::INFINITY;
        for p in &self.pieces {
            if p.b > tol || p.at(p.lo) > prev + tol {
                return false;
            }
            prev = p.at(p.hi);
        }
        true
    }
}

fn check_partition(pieces: &[DensityPiece]) -> Result<()> {
    if pieces.is_empty() {
        return Err(Error::InvalidInput("empty partition".into()));
    }
    if pieces[0].lo != 0.0 || pieces.last().unwrap().hi != 1.0 {
        return Err(Error::InvalidInput("partition must cover [0, 1]".into()));
    }
    for w in pieces.windows(2) {
        if w[0].hi != w[1].lo {
            return Err(Error::InvalidInput("partition pieces must be contiguous".into()));
        }
    }
    if pieces.iter().any(|p| !(p.hi > p.lo)) {
        return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
    }
    Ok(())
}

fn locate(los: &[f64], r: f64) -> usize {
    match los.binary_search_by(|v| v.total_cmp(&r)) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) => i - 1,
    }
}

/// `u = c + a psi(r) + q r^2 + s r^3` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub c: f64,
    pub a: f64,
    pub q: f64,
    pub s: f64,
}

impl Segment {
    fn value(&self, n: Dimension, r: f64) -> f64 {
        let log_part = if self.a == 0.0 { 0.0 } else { self.a * n.psi(r) };
        self.c + log_part + r * r * (self.q + self.s * r)
    }

    fn derivative(&self, n: Dimension, r: f64) -> f64 {
        let log_part = if self.a == 0.0 { 0.0 } else { self.a * n.dpsi(r) };
        log_part + r * (2.0 * self.q + 3.0 * self.s * r)
    }

    fn second_derivative(&self, n: Dimension, r: f64) -> f64 {
        let log_part = if self.a == 0.0 { 0.0 } else { self.a * n.d2psi(r) };
        log_part + 2.0 * self.q + 6.0 * self.s * r
    }
}

const PANEL_ORDER: usize = 16;

/// Values and derivatives on Chebyshev-Lobatto nodes of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
struct Panel {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

fn lobatto(lo: f64, hi: f64) -> Vec<f64> {
    (0..=PANEL_ORDER)
        .map(|j| {
            let c = (std::f64::consts::PI * j as f64 / PANEL_ORDER as f64).cos();
            lo + 0.5 * (hi - lo) * (1.0 - c)
        })
        .collect()
}

fn barycentric(lo: f64, hi: f64, data: &[f64], r: f64) -> f64 {
    let nodes = lobatto(lo, hi);
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (&x, &y)) in nodes.iter().zip(data).enumerate() {
        let d = r - x;
        if d == 0.0 {
            return y;
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == PANEL_ORDER {
            w *= 0.5;
        }
        num += w * y / d;
        den += w / d;
    }
    num / den
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Closed(Vec<Segment>),
    Sampled(Vec<Panel>),
}

/// A scalar function of the radius on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    n: Dimension,
    repr: Repr,
    dirichlet: bool,
}

impl RadialProfile {
    pub fn from_segments(n: Dimension, segments: Vec<Segment>, dirichlet: bool) -> Result<Self> {
        let pieces: Vec<DensityPiece> =
            segments.iter().map(|s| DensityPiece { lo: s.lo, hi: s.hi, a: 0.0, b: 0.0 }).collect();
        check_partition(&pieces)?;
        let p = Self { n, repr: Repr::Closed(segments), dirichlet };
        p.check_dirichlet()?;
        Ok(p)
    }

    /// Piecewise constant profile (not Dirichlet in general).
    pub fn steps(n: Dimension, breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::InvalidInput("steps need one more break than values".into()));
        }
        let segs = breaks
            .windows(2)
            .zip(values)
            .map(|(w, &c)| Segment { lo: w[0], hi: w[1], c, a: 0.0, q: 0.0, s: 0.0 })
            .collect();
        Self::from_segments(n, segs, false)
    }

    pub fn constant(n: Dimension, c: f64) -> Self {
        Self::steps(n, &[0.0, 1.0], &[c]).expect("valid partition")
    }

    /// Samples `f` and its derivative `df` on panels between `breaks`.
    pub fn sampled<F, D>(n: Dimension, breaks: &[f64], f: F, df: D, dirichlet: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let panels: Vec<Panel> = breaks
            .windows(2)
            .map(|w| {
                let nodes = lobatto(w[0], w[1]);
                Panel {
                    lo: w[0],
                    hi: w[1],
                    values: nodes.iter().map(|&x| f(x)).collect(),
                    derivs: nodes.iter().map(|&x| df(x)).collect(),
                }
            })
            .collect();
        Self::from_panels(n, panels, dirichlet)
    }

    fn from_panels(n: Dimension, panels: Vec<Panel>, dirichlet: bool) -> Result<Self> {
        let pieces: Vec<DensityPiece> =
            panels.iter().map(|s| DensityPiece { lo: s.lo, hi: s.hi, a: 0.0, b: 0.0 }).collect();
        check_partition(&pieces)?;
        if panels.iter().flat_map(|p| p.values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite profile sample".into()));
        }
        let p = Self { n, repr: Repr::Sampled(panels), dirichlet };
        p.check_dirichlet()?;
        Ok(p)
    }

    fn check_dirichlet(&self) -> Result<()> {
        if self.dirichlet {
            let v = self.value(1.0);
            if v.abs() > tolerances::DIRICHLET * (1.0 + self.value(0.0).abs()) {
                return Err(Error::InvalidInput(format!("Dirichlet profile has u(1) = {v}")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> Dimension {
        self.n
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Repr::Closed(_))
    }

    pub fn segments(&self) -> Option<&[Segment]> {
        match &self.repr {
            Repr::Closed(s) => Some(s),
            Repr::Sampled(_) => None,
        }
    }

    /// Sorted breakpoints, including 0 and 1.
    pub fn breaks(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.bounds().iter().map(|b| b.0).collect();
        out.push(1.0);
        out
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        match &self.repr {
            Repr::Closed(s) => s.iter().map(|s| (s.lo, s.hi)).collect(),
            Repr::Sampled(p) => p.iter().map(|p| (p.lo, p.hi)).collect(),
        }
    }

    fn piece_index(&self, r: f64) -> usize {
        let los: Vec<f64> = self.bounds().iter().map(|b| b.0).collect();
        locate(&los, r)
    }

    fn piece_value(&self, i: usize, r: f64) -> f64 {
        match &self.repr {
            Repr::Closed(s) => s[i].value(self.n, r),
            Repr::Sampled(p) => barycentric(p[i].lo, p[i].hi, &p[i].values, r),
        }
    }

    fn piece_derivative(&self, i: usize, r: f64) -> f64 {
        match &self.repr {
            Repr::Closed(s) => s[i].derivative(self.n, r),
            Repr::Sampled(p) => barycentric(p[i].lo, p[i].hi, &p[i].derivs, r),
        }
    }

    /// Evaluation with the domain check `0 <= r <= 1`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&r) {
            return Err(domain("r", r, "[0, 1]"));
        }
        Ok(self.value(r))
    }

    /// Unchecked evaluation; `r` is clamped to `[0, 1]`.
    pub fn value(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        self.piece_value(self.piece_index(r), r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        self.piece_derivative(self.piece_index(r), r)
    }

    /// Second derivative; closed-form profiles only (sampled profiles differentiate the
    /// derivative interpolant numerically).
    pub fn second_derivative(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        let i = self.piece_index(r);
        match &self.repr {
            Repr::Closed(s) => s[i].second_derivative(self.n, r),
            Repr::Sampled(p) => {
                let h = 1e-5 * (p[i].hi - p[i].lo);
                let a = (r - h).max(p[i].lo);
                let b = (r + h).min(p[i].hi);
                (barycentric(p[i].lo, p[i].hi, &p[i].derivs, b) - barycentric(p[i].lo, p[i].hi, &p[i].derivs, a))
                    / (b - a)
            }
        }
    }

    /// `int_{B_1} f(r, u(r)) dx` by composite Gauss-Legendre on each piece.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let n = self.n.n() as i32;
        let mut acc = 0.0;
        for (i, (lo, hi)) in self.bounds().into_iter().enumerate() {
            acc += quad::composite(&[lo, hi], 4, 20, |r| f(r, self.piece_value(i, r)) * r.powi(n - 1));
        }
        self.n.sphere_area() * acc
    }

    /// Rows `(r, u(r), u'(r))` on a uniform grid of `samples + 1` points.
    pub fn csv_rows(&self, samples: usize) -> Vec<[f64; 3]> {
        (0..=samples)
            .map(|i| {
                let r = i as f64 / samples.max(1) as f64;
                [r, self.value(r), self.derivative(r)]
            })
            .collect()
    }

    /// Monotone pieces `(lo, hi, piece index)`, split at interior critical points.
    fn monotone_intervals(&self) -> Vec<(f64, f64, usize)> {
        let mut out = Vec::new();
        for (i, (lo, hi)) in self.bounds().into_iter().enumerate() {
            const SAMPLES: usize = 32;
            let mut cuts = vec![lo];
            let xs: Vec<f64> = (0..=SAMPLES).map(|k| lo + (hi - lo) * k as f64 / SAMPLES as f64).collect();
            let ds: Vec<f64> = xs.iter().map(|&x| self.piece_derivative(i, x)).collect();
            for k in 0..SAMPLES {
                let (d0, d1) = (ds[k], ds[k + 1]);
                if d0 * d1 < 0.0 {
                    let (mut a, mut b) = (xs[k], xs[k + 1]);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if m <= a || m >= b {
                            break;
                        }
                        if self.piece_derivative(i, m) * d0 > 0.0 {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    cuts.push(0.5 * (a + b));
                } else if d1 == 0.0 && k + 1 < SAMPLES && ds[k + 2] * d0 < 0.0 {
                    cuts.push(xs[k + 1]);
                }
            }
            cuts.push(hi);
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    out.push((w[0], w[1], i));
                }
            }
        }
        out
    }

    fn ball_shell(&self, lo: f64, hi: f64) -> f64 {
        let n = self.n.n() as i32;
        self.n.ball_volume() * (hi.powi(n) - lo.powi(n))
    }

    /// Supremum of `|u|` with critical points located.
    pub fn sup_abs(&self) -> f64 {
        self.monotone_intervals()
            .into_iter()
            .map(|(lo, hi, i)| self.piece_value(i, lo).abs().max(self.piece_value(i, hi).abs()))
            .fold(0.0, f64::max)
    }
}

/// Root of a monotone function on `[a, b]` by bisection, `f(a) - t` and `f(b) - t` of
/// opposite signs.
fn monotone_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, t: f64) -> f64 {
    let sa = f(a) > t;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > t) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Precomputed monotone decomposition used for repeated distribution queries.
#[derive(Debug, Clone)]
pub struct Distribution {
    profile: RadialProfile,
    intervals: Vec<(f64, f64, usize)>,
}

impl Distribution {
    pub fn new(profile: &RadialProfile) -> Self {
        Self { intervals: profile.monotone_intervals(), profile: profile.clone() }
    }

    /// `|{x in B_1 : |u(x)| > t}|`.
    pub fn at(&self, t: f64) -> f64 {
        let u = &self.profile;
        let mut vol = 0.0;
        for &(lo, hi, i) in &self.intervals {
            let f = |r: f64| u.piece_value(i, r);
            let (ua, ub) = (f(lo), f(hi));
            // super-level part {u > t} and sub-level part {u < -t}
            for sign in [1.0, -1.0] {
                let (va, vb) = (sign * ua, sign * ub);
                let g = |r: f64| sign * f(r);
                match (va > t, vb > t) {
                    (true, true) => vol += u.ball_shell(lo, hi),
                    (false, false) => {}
                    (true, false) => vol += u.ball_shell(lo, monotone_root(g, lo, hi, t)),
                    (false, true) => vol += u.ball_shell(monotone_root(g, lo, hi, t), hi),
                }
            }
        }
        vol
    }
}

/// `mu_u(t) = |{|u| > t}|` for a radial profile.
pub fn distribution_function(u: &RadialProfile, t: f64) -> f64 {
    Distribution::new(u).at(t)
}

/// The decreasing rearrangement `u*(s) = inf{t > 0 : mu_u(t) <= s}` on `[0, |B_1|]`.
#[derive(Debug, Clone)]
pub struct Rearrangement {
    dist: Distribution,
    sup: f64,
}

impl Rearrangement {
    pub fn eval(&self, s: f64) -> f64 {
        if self.dist.at(0.0) <= s {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, self.sup);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if self.dist.at(m) <= s {
                hi = m;
            } else {
                lo = m;
            }
        }
        hi
    }

    /// Schwarz symmetrization `u#(r) = u*(|B_1| r^n)`.
    pub fn sharp(&self, r: f64) -> f64 {
        let n = self.dist.profile.n;
        self.eval(n.volume_of_radius(r))
    }

    pub fn distribution(&self, t: f64) -> f64 {
        self.dist.at(t)
    }
}

pub fn decreasing_rearrangement(u: &RadialProfile) -> Rearrangement {
    Rearrangement { sup: u.sup_abs(), dist: Distribution::new(u) }
}

/// Schwarz rearrangement of a density.
///
/// Exact for piecewise constant data in any dimension and for piecewise linear data in
/// `n = 1`. Linear pieces in `n >= 2` give a curved profile in `r`, resolved by bisection in
/// the level until each chord misplaces at most `~1e-13` of mass.
pub fn schwarz_rearrangement(v: &RadialDensity) -> RadialDensity {
    let n = v.n;
    let mut levels: Vec<f64> = v.pieces.iter().flat_map(|p| [p.at(p.lo), p.at(p.hi)]).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let radius = |vol: f64| n.radius_of_volume(vol).clamp(0.0, 1.0);
    let exact = n.n() == 1 || v.is_steps();

    let mut pieces = Vec::new();
    let mut push = |lo: f64, hi: f64, v0: f64, v1: f64| {
        if hi > lo {
            let b = (v1 - v0) / (hi - lo);
            pieces.push(DensityPiece { lo, hi, a: v0 - b * lo, b });
        }
    };
    for (i, &t) in levels.iter().enumerate() {
        let r_gt = radius(v.level_volume(t, false));
        let r_ge = radius(v.level_volume(t, true));
        push(r_gt, r_ge, t, t);
        if let Some(&t_next) = levels.get(i + 1) {
            let r_next = radius(v.level_volume(t_next, false));
            if exact {
                push(r_ge, r_next, t, t_next);
            } else {
                // bisect in t until the chord matches the level-set radius
                let mut stack = vec![(t, r_ge, t_next, r_next, 0)];
                while let Some((t0, r0, t1, r1, depth)) = stack.pop() {
                    let tm = 0.5 * (t0 + t1);
                    let rm = radius(v.level_volume(tm, false));
                    // mass misplaced by the chord, roughly |dr| |dt| r^{n-1}
                    let err = (rm - 0.5 * (r0 + r1)).abs() * (t1 - t0).abs() * r0.max(r1).powi(n.n() as i32 - 1);
                    if depth >= 30 || err <= 1e-13 {
                        push(r0, rm, t0, tm);
                        push(rm, r1, tm, t1);
                    } else {
                        // pushed in reverse so the pieces come out ordered
                        stack.push((tm, rm, t1, r1, depth + 1));
                        stack.push((t0, r0, tm, rm, depth + 1));
                    }
                }
            }
        }
    }
    // close the partition exactly at 0 and 1
    if let Some(first) = pieces.first_mut() {
        first.lo = 0.0;
    }
    if let Some(last) = pieces.last_mut() {
        last.hi = 1.0;
    }
    for w in 1..pieces.len() {
        pieces[w].lo = pieces[w - 1].hi;
    }
    pieces.retain(|p| p.hi > p.lo);
    for p in &mut pieces {
        let (v0, v1) = (p.at(p.lo).clamp(0.0, 1.0), p.at(p.hi).clamp(0.0, 1.0));
        // slivers carry no mass; a slope across them would only amplify rounding
        p.b = if p.b == 0.0 || p.hi - p.lo < 1e-12 { 0.0 } else { (v1 - v0) / (p.hi - p.lo) };
        p.a = v0 - p.b * p.lo;
    }
    RadialDensity { n, pieces }
}

/// Closed-form solution of `-(r^{n-1} u')' = r^{n-1} f` with `u(1) = 0`, `f` piecewise linear.
fn closed_solution(n: Dimension, source: &[DensityPiece]) -> Vec<Segment> {
    let nf = n.nf();
    let mut flux = 0.0;
    let mut segs = Vec::with_capacity(source.len());
    for p in source {
        let k = flux - p.a * p.lo.powf(nf) / nf - p.b * p.lo.powf(nf + 1.0) / (nf + 1.0);
        let a = if n.n() == 2 { -k } else { -k / (2.0 - nf) };
        // the first piece starts at the origin, where regularity forces a = 0
        let a = if p.lo == 0.0 { 0.0 } else { a };
        segs.push(Segment { lo: p.lo, hi: p.hi, c: 0.0, a, q: -p.a / (2.0 * nf), s: -p.b / (3.0 * (nf + 1.0)) });
        flux += p.moment(nf);
    }
    let mut right = 0.0;
    for seg in segs.iter_mut().rev() {
        let mut trial = *seg;
        trial.c = 0.0;
        seg.c = right - trial.value(n, seg.hi);
        right = seg.value(n, seg.lo);
    }
    segs
}

/// `u_V(r) = int_r^1 s^{1-n} int_0^s V t^{n-1} dt ds`.
pub fn solve_radial_poisson(v: &RadialDensity) -> RadialProfile {
    RadialProfile { n: v.n, repr: Repr::Closed(closed_solution(v.n, &v.pieces)), dirichlet: true }
}

/// `u_0 = u_{B_*}` for the centered ball of volume `m`.
pub fn ball_source_profile(m: f64, n: Dimension) -> Result<RadialProfile> {
    let r = n.checked_radius(m).or_else(|e| {
        // the full ball is allowed here
        if (m - n.ball_volume()).abs() <= 1e-14 * n.ball_volume() {
            Ok(1.0)
        } else {
            Err(e)
        }
    })?;
    Ok(solve_radial_poisson(&RadialDensity::ball(n, r)?))
}

/// `(1 - r^2) / (2n)`.
pub fn torsion_profile(n: Dimension) -> RadialProfile {
    solve_radial_poisson(&RadialDensity::constant(n, 1.0).expect("constant density"))
}

/// Adjoint state `w` with `-(r^{n-1} w')' = r^{n-1} j'(u)`, `w(1) = 0`.
pub fn adjoint_profile(j: &ConvexIntegrand, u: &RadialProfile) -> Result<RadialProfile> {
    let n = u.n;
    if !u.dirichlet {
        return Err(Error::InvalidInput("adjoint needs a Dirichlet profile".into()));
    }
    let top = u.sup_abs();
    for k in 0..=64 {
        let s = top * k as f64 / 64.0;
        if !j.d1(s).is_finite() {
            return Err(Error::Integrand(format!("j'({s}) is not finite")));
        }
    }
    if j.is_affine() {
        let c = j.d1(0.0);
        let src = [DensityPiece { lo: 0.0, hi: 1.0, a: c, b: 0.0 }];
        return Ok(RadialProfile { n, repr: Repr::Closed(closed_solution(n, &src)), dirichlet: true });
    }

    let mut breaks = u.breaks();
    let first = breaks[1];
    for k in 1..=10 {
        breaks.push(first * 0.5f64.powi(k));
    }
    for k in 1..=40 {
        breaks.push(1.0 - 0.5f64.powi(k));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let nodes: Vec<f64> = {
        let mut v: Vec<f64> = breaks.windows(2).flat_map(|w| lobatto(w[0], w[1])).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let ni = n.n() as i32;
    let src = |t: f64| j.d1(u.value(t)) * t.powi(ni - 1);
    let mut flux = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        flux[i] = flux[i - 1] + quad::gauss(nodes[i - 1], nodes[i], 10, src);
    }
    let mut tail = vec![0.0; nodes.len()];
    for i in (0..nodes.len() - 1).rev() {
        tail[i] = tail[i + 1] + quad::gauss(nodes[i], nodes[i + 1], 10, |t| src(t) * n.flux_kernel(t));
    }
    let value_at = |i: usize| {
        let r = nodes[i];
        if r == 0.0 {
            tail[i]
        } else {
            n.flux_kernel(r) * flux[i] + tail[i]
        }
    };
    let deriv_at = |i: usize| {
        let r = nodes[i];
        if r == 0.0 {
            0.0
        } else {
            -r.powi(1 - ni) * flux[i]
        }
    };
    let index = |x: f64| nodes.binary_search_by(|y| y.total_cmp(&x)).expect("panel node");
    let panels = breaks
        .windows(2)
        .map(|w| {
            let local: Vec<usize> = lobatto(w[0], w[1]).into_iter().map(index).collect();
            Panel {
                lo: w[0],
                hi: w[1],
                values: local.iter().map(|&i| value_at(i)).collect(),
                derivs: local.iter().map(|&i| deriv_at(i)).collect(),
            }
        })
        .collect();
    RadialProfile::from_panels(n, panels, true)
}

/// Level `t` with `|{w > t}| = m`.
pub fn find_level(w: &RadialProfile, m: f64) -> Result<f64> {
    let total = w.n.ball_volume();
    if !(m > 0.0 && m < total) {
        return Err(domain("m", m, format!("(0, {total})")));
    }
    let dist = Distribution::new(w);
    let tol = tolerances::LEVEL_REL * total;
    let (mut lo, mut hi) = (0.0, w.sup_abs());
    if dist.at(lo) < m - tol {
        return Err(Error::DegenerateLevel { level: 0.0, target: m });
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist.at(mid) > m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (m_lo, m_hi) = (dist.at(lo), dist.at(hi));
    if (m_hi - m).abs() <= tol {
        return Ok(hi);
    }
    if (m_lo - m).abs() <= tol {
        return Ok(lo);
    }
    Err(Error::DegenerateLevel { level: hi, target: m })
}

/// `||u||_{L^p(B_1)}` for `p` in `[1, inf]` (`f64::INFINITY` for the sup norm).
pub fn lp_norm(u: &RadialProfile, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(domain("p", p, "[1, inf]"));
    }
    if p.is_infinite() {
        return Ok(u.sup_abs());
    }
    let ni = u.n.n() as i32;
    let mut acc = 0.0;
    for (lo, hi, i) in u.monotone_intervals() {
        acc +=
            quad::adaptive(lo, hi, tolerances::QUAD_ABS * 1e-3, |r| u.piece_value(i, r).abs().powf(p) * r.powi(ni - 1));
    }
    Ok((u.n.sphere_area() * acc).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn torsion_closed_form() {
        for n in 1..5 {
            let w = torsion_profile(d(n));
            for r in [0.0, 0.2, 0.5, 0.9, 1.0] {
                let exact = (1.0 - r * r) / (2.0 * n as f64);
                assert!((w.value(r) - exact).abs() < 1e-15, "n={n} r={r}");
                assert!((w.derivative(r) + r / n as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn half_disc_source() {
        let v = RadialDensity::ball(d(2), 0.5).unwrap();
        let u = solve_radial_poisson(&v);
        assert!((u.value(0.5) - 0.08664339756999317).abs() < 1e-15);
        assert!((u.value(0.0) - 0.14914339756999317).abs() < 1e-15);
        assert!(u.value(1.0).abs() < 1e-16);
        assert!(u.eval(1.5).is_err());
        // flux identity on both sides of the break
        for r in [0.3, 0.75] {
            let f = if r < 0.5 { r * r / 2.0 } else { 0.125 };
            assert!((u.derivative(r) * r + f).abs() < 1e-15);
        }
    }

    #[test]
    fn ball_source_derivative() {
        let u = ball_source_profile(PI / 4.0, d(2)).unwrap();
        assert!((u.derivative(0.75) + 0.25 / 1.5).abs() < 1e-15);
        let full = ball_source_profile(PI, d(2)).unwrap();
        assert!((full.value(0.3) - (1.0 - 0.09) / 4.0).abs() < 1e-15);
        assert!(ball_source_profile(4.0, d(2)).is_err());
        for n in 1..5 {
            let dn = d(n);
            let m = 0.3 * dn.ball_volume();
            let u = ball_source_profile(m, dn).unwrap();
            let rs = dn.radius_of_volume(m);
            for r in [0.1f64, 0.4, 0.8] {
                let exact = -(r.min(rs)).powi(n as i32) / (n as f64 * r.powi(n as i32 - 1));
                assert!((u.derivative(r) - exact).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn adjoint_of_square() {
        let n = d(2);
        let u = ball_source_profile(PI / 4.0, n).unwrap();
        let j = ConvexIntegrand::power(2.0).unwrap();
        let w = adjoint_profile(&j, &u).unwrap();
        assert!((w.derivative(0.5) + 0.05894669878499658).abs() < 1e-13, "{}", w.derivative(0.5));
        assert!(w.value(1.0).abs() < 1e-14);
        let lin = adjoint_profile(&ConvexIntegrand::Linear, &u).unwrap();
        assert!((lin.value(0.2) - (1.0 - 0.04) / 4.0).abs() < 1e-15);
        let zero = adjoint_profile(&j, &solve_radial_poisson(&RadialDensity::constant(n, 0.0).unwrap())).unwrap();
        assert!(zero.sup_abs() < 1e-300);
    }

    #[test]
    fn adjoint_satisfies_equation() {
        // -(r w')' / r = j'(u): check by differentiating the flux numerically
        let n = d(3);
        let u = ball_source_profile(0.5 * n.ball_volume(), n).unwrap();
        let j = ConvexIntegrand::power(1.5).unwrap();
        let w = adjoint_profile(&j, &u).unwrap();
        for r in [0.2, 0.6, 0.95] {
            let h = 1e-5;
            let flux = |x: f64| x * x * w.derivative(x);
            let lhs = -(flux(r + h) - flux(r - h)) / (2.0 * h) / (r * r);
            assert!((lhs - j.d1(u.value(r))).abs() < 1e-6, "r={r}: {lhs}");
        }
    }

    #[test]
    fn distribution_of_torsion() {
        let w = torsion_profile(d(2));
        assert!((distribution_function(&w, 0.0) - PI).abs() < 1e-12);
        assert_eq!(distribution_function(&w, 0.25), 0.0);
        assert!((distribution_function(&w, 3.0 / 16.0) - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn rearrangement_examples() {
        let n = d(2);
        let w = torsion_profile(n);
        let ws = decreasing_rearrangement(&w);
        for r in [0.1, 0.4, 0.7] {
            assert!((ws.eval(PI * r * r) - w.value(r)).abs() < 1e-12);
        }
        let c = decreasing_rearrangement(&RadialProfile::constant(n, 0.3));
        assert!((c.eval(1.0) - 0.3).abs() < 1e-14);
        let ann = RadialProfile::steps(n, &[0.0, 0.5, 0.6, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        let a = decreasing_rearrangement(&ann);
        let cut = PI * (0.36 - 0.25);
        assert_eq!(a.eval(cut * 0.99), 1.0);
        assert_eq!(a.eval(cut * 1.01), 0.0);
    }

    #[test]
    fn schwarz_examples() {
        let n2 = d(2);
        let ann = RadialDensity::steps(n2, &[0.0, 0.4, 0.5, 0.6, 1.0], &[1.0, 0.0, 1.0, 0.0]).unwrap();
        let s = schwarz_rearrangement(&ann);
        assert!(s.is_nonincreasing(0.0));
        assert!((s.mass() - ann.mass()).abs() < 1e-14);
        let r = (0.16f64 + 0.36 - 0.25).sqrt();
        assert!((s.eval(r - 1e-9) - 1.0).abs() < 1e-12 && s.eval(r + 1e-9) == 0.0);

        let mono = RadialDensity::linear(n2, &[0.0, 0.5, 1.0], &[0.9, 0.5, 0.1]).unwrap();
        let sm = schwarz_rearrangement(&mono);
        for r in [0.1, 0.3, 0.77] {
            assert!((sm.eval(r) - mono.eval(r)).abs() < 1e-4);
        }

        let n1 = d(1);
        let ramp = RadialDensity::linear(n1, &[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let rr = schwarz_rearrangement(&ramp);
        for r in [0.0, 0.25, 0.6, 1.0] {
            assert!((rr.eval(r) - (1.0 - r)).abs() < 1e-14);
        }
        assert!((rr.mass() - ramp.mass()).abs() < 1e-14);
    }

    #[test]
    fn level_finder() {
        let n = d(2);
        let w = torsion_profile(n);
        assert!((find_level(&w, PI / 4.0).unwrap() - 3.0 / 16.0).abs() < 1e-12);
        assert!(find_level(&w, PI * (1.0 - 1e-9)).unwrap() < 1e-8);
        let plateau = RadialProfile::steps(n, &[0.0, 0.3, 1.0], &[1.0, 0.5]).unwrap();
        assert!(matches!(find_level(&plateau, PI / 2.0), Err(Error::DegenerateLevel { .. })));
    }

    #[test]
    fn lp_norms() {
        let n = d(2);
        let w = torsion_profile(n);
        assert!((lp_norm(&w, f64::INFINITY).unwrap() - 0.25).abs() < 1e-15);
        assert!((lp_norm(&w, 1.0).unwrap() - PI / 8.0).abs() < 1e-13);
        assert_eq!(lp_norm(&RadialProfile::constant(n, 0.0), 3.0).unwrap(), 0.0);
        assert!(lp_norm(&w, 0.5).is_err());
    }

    #[test]
    fn l1_distance_exact() {
        let n = d(2);
        let a = RadialDensity::ball(n, 0.5).unwrap();
        let b = RadialDensity::ball(n, 0.6).unwrap();
        assert!((a.l1_distance(&b) - PI * 0.11).abs() < 1e-14);
    }
}
