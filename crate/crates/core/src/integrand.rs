//! Convex increasing integrands `j` of the functional `J(E) = int j(u_E)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum ConvexIntegrand {
    /// `j(s) = s`: the `p = 1` functional, with `j'' = 0`.
    Linear,
    /// `j(s) = s^p`, `p > 1`.
    Power(f64),
    /// `j(s) = sum c_i s^{e_i}` with `c_i > 0`, `e_i >= 1`.
    Polynomial(Vec<(f64, f64)>),
    /// `j'` given by a natural cubic spline through tabulated samples.
    Tabulated(Arc<Spline>),
}

impl ConvexIntegrand {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidInput(format!("power:{p} is not convex increasing with j'' > 0 (need p > 1)")));
        }
        Ok(Self::Power(p))
    }

    pub fn polynomial(terms: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("empty polynomial integrand".into()));
        }
        for &(c, e) in &terms {
            if !(c > 0.0 && c.is_finite() && e >= 1.0 && e.is_finite()) {
                return Err(Error::InvalidInput(format!("polynomial term {c}*s^{e} needs c > 0 and exponent >= 1")));
            }
        }
        Ok(Self::Polynomial(terms))
    }

    /// Parses `linear`, `power:<p>` or `poly:<c>@<e>,<c>@<e>,...`.
    ///
    /// `table:` specs need file contents and go through [`ConvexIntegrand::tabulated`].
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "linear" {
            return Ok(Self::Linear);
        }
        if let Some(p) = spec.strip_prefix("power:") {
            let p: f64 = p.parse().map_err(|_| Error::InvalidInput(format!("bad exponent in '{spec}'")))?;
            return Self::power(p);
        }
        if let Some(body) = spec.strip_prefix("poly:") {
            let mut terms = Vec::new();
            for item in body.split(',') {
                let (c, e) = item.split_once('@').ok_or_else(|| Error::InvalidInput(format!("bad term '{item}'")))?;
                let c: f64 = c.trim().parse().map_err(|_| Error::InvalidInput(format!("bad coefficient '{c}'")))?;
                let e: f64 = e.trim().parse().map_err(|_| Error::InvalidInput(format!("bad exponent '{e}'")))?;
                terms.push((c, e));
            }
            return Self::polynomial(terms);
        }
        Err(Error::InvalidInput(format!(
            "unknown integrand '{spec}' (expected linear, power:p, poly:c@e,... or table:<file>)"
        )))
    }

    /// Builds a tabulated integrand from rows `s, j'(s)` (comma or whitespace separated,
    /// `#` comments). `j''` comes from differentiating the spline and is approximate.
    pub fn tabulated(contents: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for line in contents.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty());
            let (Some(a), Some(b)) = (it.next(), it.next()) else {
                return Err(Error::InvalidInput(format!("bad table row '{line}'")));
            };
            let parse = |t: &str| t.parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number '{t}'")));
            xs.push(parse(a)?);
            ys.push(parse(b)?);
        }
        let spline = Spline::natural(xs, ys)?;
        let j = Self::Tabulated(Arc::new(spline));
        j.validate()?;
        Ok(j)
    }

    pub fn value(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            Self::Linear => s,
            Self::Power(p) => s.powf(*p),
            Self::Polynomial(t) => t.iter().map(|&(c, e)| c * s.powf(e)).sum(),
            Self::Tabulated(sp) => sp.integral(s),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            Self::Linear => 1.0,
            Self::Power(p) => p * s.powf(p - 1.0),
            Self::Polynomial(t) => t.iter().map(|&(c, e)| c * e * s.powf(e - 1.0)).sum(),
            Self::Tabulated(sp) => sp.value(s),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            Self::Linear => 0.0,
            Self::Power(p) => p * (p - 1.0) * s.powf(p - 2.0),
            Self::Polynomial(t) => {
                t.iter().filter(|&&(_, e)| e != 1.0).map(|&(c, e)| c * e * (e - 1.0) * s.powf(e - 2.0)).sum()
            }
            Self::Tabulated(sp) => sp.derivative(s),
        }
    }

    /// Exponent `alpha` with `limsup s^alpha j''(s) < inf` as `s -> 0`.
    pub fn alpha(&self) -> f64 {
        match self {
            Self::Power(p) if *p < 2.0 => 2.0 - p,
            Self::Polynomial(t) => {
                t.iter().filter(|&&(_, e)| e > 1.0 && e < 2.0).map(|&(_, e)| 2.0 - e).fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }

    pub fn d1_at_zero(&self) -> f64 {
        self.d1(0.0)
    }

    /// `j'' == 0` identically (the operator T vanishes).
    pub fn is_affine(&self) -> bool {
        match self {
            Self::Linear => true,
            Self::Polynomial(t) => t.iter().all(|&(_, e)| e == 1.0),
            _ => false,
        }
    }

    /// Sampled check of `j'(0) >= 0`, `j'' > 0` and the singularity bound.
    pub fn validate(&self) -> Result<()> {
        if self.d1_at_zero() < 0.0 {
            return Err(Error::InvalidInput("j'(0) < 0".into()));
        }
        if self.is_affine() {
            return Ok(());
        }
        let alpha = self.alpha();
        if alpha >= 1.0 {
            return Err(Error::Integrand(format!("j'' singularity exponent {alpha} >= 1 is not integrable")));
        }
        let mut sup: f64 = 0.0;
        for i in 1..=200 {
            let s = 1e-8_f64 * (1e9_f64).powf(i as f64 / 200.0);
            let d2 = self.d2(s);
            if !(d2 > 0.0 && d2.is_finite()) {
                return Err(Error::InvalidInput(format!("j''({s}) = {d2} is not positive")));
            }
            if s < 1e-2 {
                sup = sup.max(s.powf(alpha) * d2);
            }
        }
        if !sup.is_finite() {
            return Err(Error::Integrand("s^alpha j''(s) unbounded near 0".into()));
        }
        Ok(())
    }

    /// Short label used in reports (`linear`, `power:2`, ...).
    pub fn label(&self) -> String {
        match self {
            Self::Linear => "linear".into(),
            Self::Power(p) => format!("power:{p}"),
            Self::Polynomial(t) => {
                let items: Vec<String> = t.iter().map(|(c, e)| format!("{c}@{e}")).collect();
                format!("poly:{}", items.join(","))
            }
            Self::Tabulated(_) => "table".into(),
        }
    }
}

impl fmt::Display for ConvexIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Natural cubic spline with linear extrapolation past the last knot.
#[derive(Debug, Clone)]
pub struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
    // integral of the spline from xs[0] to xs[i]
    cum: Vec<f64>,
}

impl Spline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::InvalidInput("table needs at least 3 rows".into()));
        }
        if xs[0] != 0.0 {
            return Err(Error::InvalidInput("table must start at s = 0".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("table abscissae must be strictly increasing".into()));
        }
        // tridiagonal system for second derivatives, natural end conditions
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let cc = h1;
            let r = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        let mut sp = Self { xs, ys, m, cum: vec![0.0; n] };
        for i in 1..n {
            sp.cum[i] = sp.cum[i - 1] + sp.segment_integral(i - 1, sp.xs[i]);
        }
        Ok(sp)
    }

    fn locate(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    fn segment_integral(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (y0, y1, m0, m1) = (self.ys[i], self.ys[i + 1], self.m[i], self.m[i + 1]);
        let a = x1 - x;
        let b = x - x0;
        // antiderivative of the cubic piece, evaluated between x0 and x
        let f = |a: f64, b: f64| {
            -m0 * a.powi(4) / (24.0 * h) + m1 * b.powi(4) / (24.0 * h) - (y0 / h - m0 * h / 6.0) * a * a / 2.0
                + (y1 / h - m1 * h / 6.0) * b * b / 2.0
        };
        f(a, b) - f(h, 0.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x > self.xs[last] {
            return self.ys[last] + self.derivative(self.xs[last]) * (x - self.xs[last]);
        }
        let i = self.locate(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a.powi(3) - a) * self.m[i] + (b.powi(3) - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        let x = x.min(self.xs[last]);
        let i = self.locate(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }

    /// `int_0^x` of the spline.
    pub fn integral(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x > self.xs[last] {
            let dx = x - self.xs[last];
            return self.cum[last] + self.ys[last] * dx + 0.5 * self.derivative(self.xs[last]) * dx * dx;
        }
        let i = self.locate(x);
        self.cum[i] + self.segment_integral(i, x)
    }
}
