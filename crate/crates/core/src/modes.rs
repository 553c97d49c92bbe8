//! Homogeneous solutions of the mode operator `-r^{1-n} (r^{n-1} phi')' + Lambda_k phi / r^2`.
//!
//! `a = r^k` is regular at the origin, `b = r^{2-n-k} - r^k` vanishes at `r = 1`, and
//! `G_k(r, s) = a(min) b(max) / N` with `N = n + 2k - 2` is the Dirichlet Green's function
//! for the measure `s^{n-1} ds`. For `n = 2, k = 0` the pair is `1, -ln r` with `N = 1`.

use crate::dimension::Dimension;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeKernel {
    n: Dimension,
    k: usize,
}

impl ModeKernel {
    pub fn new(n: Dimension, k: usize) -> Self {
        Self { n, k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn log_case(&self) -> bool {
        self.n.n() == 2 && self.k == 0
    }

    fn kf(&self) -> f64 {
        self.k as f64
    }

    fn nf(&self) -> f64 {
        self.n.nf()
    }

    /// `N_k = n + 2k - 2` (`1` in the logarithmic case).
    pub fn norm(&self) -> f64 {
        if self.log_case() {
            1.0
        } else {
            self.nf() + 2.0 * self.kf() - 2.0
        }
    }

    pub fn a(&self, r: f64) -> f64 {
        r.powi(self.k as i32)
    }

    pub fn da(&self, r: f64) -> f64 {
        if self.k == 0 {
            0.0
        } else {
            self.kf() * r.powi(self.k as i32 - 1)
        }
    }

    pub fn b(&self, r: f64) -> f64 {
        if self.log_case() {
            -r.ln()
        } else {
            r.powi(2 - self.n.n() as i32 - self.k as i32) - r.powi(self.k as i32)
        }
    }

    pub fn db(&self, r: f64) -> f64 {
        if self.log_case() {
            -1.0 / r
        } else {
            let e = 2 - self.n.n() as i32 - self.k as i32;
            e as f64 * r.powi(e - 1) - self.da(r)
        }
    }

    /// `int_0^x a(s) s^{n-1} ds`.
    pub fn a_moment(&self, x: f64) -> f64 {
        let e = self.nf() + self.kf();
        x.powf(e) / e
    }

    /// An antiderivative of `b(s) s^{n-1}`, vanishing at 0 whenever that is finite.
    pub fn b_moment(&self, x: f64) -> f64 {
        if self.log_case() {
            if x == 0.0 {
                return 0.0;
            }
            return -0.5 * x * x * x.ln() + 0.25 * x * x;
        }
        let e = self.nf() + self.kf();
        let first = if self.k == 2 { x.ln() } else { x.powf(2.0 - self.kf()) / (2.0 - self.kf()) };
        first - x.powf(e) / e
    }

    /// `G_k(r, s)`.
    pub fn green(&self, r: f64, s: f64) -> f64 {
        let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
        self.a(lo) * self.b(hi) / self.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    #[test]
    fn wronskian() {
        for n in 1..5 {
            let d = Dimension::new(n).unwrap();
            for k in 0..5 {
                if n == 1 && k > 1 {
                    continue;
                }
                let m = ModeKernel::new(d, k);
                for r in [0.2f64, 0.5, 0.9] {
                    let w = r.powi(n as i32 - 1) * (m.a(r) * m.db(r) - m.da(r) * m.b(r));
                    assert!((w + m.norm()).abs() < 1e-12, "n={n} k={k} {w}");
                }
                assert!(m.b(1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn moments() {
        for n in 1..4 {
            let d = Dimension::new(n).unwrap();
            for k in 0..4 {
                let m = ModeKernel::new(d, k);
                let (x0, x1) = (0.3, 0.8);
                let num = quad::gauss(x0, x1, 30, |s| m.b(s) * s.powi(n as i32 - 1));
                assert!((m.b_moment(x1) - m.b_moment(x0) - num).abs() < 1e-13, "n={n} k={k}");
                let num = quad::gauss(0.0, x1, 30, |s| m.a(s) * s.powi(n as i32 - 1));
                assert!((m.a_moment(x1) - num).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mode_green_solves_torsion() {
        // int G_0(r, s) s^{n-1} ds = (1 - r^2) / (2n)
        for n in 1..4 {
            let d = Dimension::new(n).unwrap();
            let m = ModeKernel::new(d, 0);
            let r = 0.3;
            let v = quad::gauss(0.0, r, 30, |s| m.green(r, s) * s.powi(n as i32 - 1))
                + quad::gauss(r, 1.0, 30, |s| m.green(r, s) * s.powi(n as i32 - 1));
            assert!((v - (1.0 - r * r) / (2.0 * n as f64)).abs() < 1e-13, "n={n}");
        }
    }
}
