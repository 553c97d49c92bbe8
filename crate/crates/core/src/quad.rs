//! Gauss–Legendre quadrature helpers: cached rules, composite panels, adaptive bisection
//! and a graded rule for integrable endpoint singularities.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

type Rule = &'static [(f64, f64)];

/// Nodes and weights on `[-1, 1]`, computed once per degree and shared.
pub fn rule(degree: usize) -> Rule {
    static RULES: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let map = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("quadrature cache poisoned");
    guard.entry(degree).or_insert_with(|| {
        let deg = NonZeroUsize::new(degree.max(1)).unwrap();
        let pairs: Vec<(f64, f64)> = GaussLegendre::new(deg).as_node_weight_pairs().to_vec();
        Box::leak(pairs.into_boxed_slice())
    })
}

pub fn gauss<F: FnMut(f64) -> f64>(a: f64, b: f64, degree: usize, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = 0.0;
    for &(x, w) in rule(degree) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Mapped nodes and weights of a rule on `[a, b]`.
pub fn nodes(a: f64, b: f64, degree: usize) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule(degree).iter().map(move |&(x, w)| (mid + half * x, w * half))
}

/// Composite rule: every interval of `breaks` is cut into `sub` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(breaks: &[f64], sub: usize, degree: usize, mut f: F) -> f64 {
    let mut acc = 0.0;
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / sub as f64;
        for i in 0..sub {
            let lo = a + h * i as f64;
            let hi = if i + 1 == sub { b } else { lo + h };
            acc += gauss(lo, hi, degree, &mut f);
        }
    }
    acc
}

/// Adaptive bisection comparing a 16-point rule against its two halves.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> f64 {
    fn rec<F: FnMut(f64) -> f64>(a: f64, b: f64, whole: f64, tol: f64, depth: u32, f: &mut F) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss(a, m, 16, &mut *f);
        let right = gauss(m, b, 16, &mut *f);
        let both = left + right;
        if depth == 0 || (both - whole).abs() <= tol.max(1e-300) {
            return both;
        }
        rec(a, m, left, 0.5 * tol, depth - 1, f) + rec(m, b, right, 0.5 * tol, depth - 1, f)
    }
    if b <= a {
        return 0.0;
    }
    let whole = gauss(a, b, 16, &mut f);
    rec(a, b, whole, tol, 30, &mut f)
}

/// Integrates `f` over `(a, b)` when `f` may blow up like `(b - x)^{-alpha}` at `b`.
///
/// The closure receives the gap `b - x` (not `x`) so callers can evaluate it without
/// cancellation. Uses `b - x = sigma^q` with geometric panels towards `sigma = 0`.
pub fn graded_right<F: FnMut(f64) -> f64>(a: f64, b: f64, q: f64, mut f_gap: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let smax = (b - a).powf(1.0 / q);
    let ratio: f64 = 0.25;
    let levels = 14;
    let mut acc = 0.0;
    let mut hi = smax;
    for level in 0..=levels {
        let lo = if level == levels { 0.0 } else { hi * ratio };
        acc += gauss(lo, hi, 20, |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let gap = s.powf(q);
            f_gap(gap) * q * s.powf(q - 1.0)
        });
        hi = lo;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let v = gauss(0.0, 2.0, 5, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_log() {
        let v = adaptive(0.0, 1.0, 1e-13, |x| if x > 0.0 { x.ln() } else { 0.0 });
        assert!((v + 1.0).abs() < 1e-10);
    }

    #[test]
    fn graded_singular() {
        // int_0^1 (1-x)^{-1/2} dx = 2
        let v = graded_right(0.0, 1.0, 2.0, |g| g.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-13, "{v}");
        // (1-x)^{-0.3} with q = 1/0.7
        let v = graded_right(0.0, 1.0, 1.0 / 0.7, |g| g.powf(-0.3) * (1.0 + g));
        let exact = 1.0 / 0.7 + 1.0 / 1.7;
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }
}
