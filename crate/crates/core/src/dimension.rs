use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Ambient dimension `n >= 1` together with the ball/sphere constants derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("n", 0.0, "n >= 1"));
        }
        Ok(Self(n))
    }

    pub fn n(self) -> usize {
        self.0
    }

    pub fn nf(self) -> f64 {
        self.0 as f64
    }

    /// `|B_1|`, via the recurrence `w_n = 2 pi w_{n-2} / n`.
    pub fn ball_volume(self) -> f64 {
        let (mut w, mut k) = if self.0.is_multiple_of(2) { (1.0, 0) } else { (2.0, 1) };
        while k < self.0 {
            k += 2;
            w *= 2.0 * PI / k as f64;
        }
        w
    }

    /// `|S^{n-1}| = n |B_1|`. Equals 2 for `n = 1` (two points).
    pub fn sphere_area(self) -> f64 {
        self.nf() * self.ball_volume()
    }

    /// `P(B_r) = |S^{n-1}| r^{n-1}`.
    pub fn perimeter(self, r: f64) -> f64 {
        self.sphere_area() * r.powi(self.0 as i32 - 1)
    }

    pub fn volume_of_radius(self, r: f64) -> f64 {
        self.ball_volume() * r.powi(self.0 as i32)
    }

    pub fn radius_of_volume(self, m: f64) -> f64 {
        (m / self.ball_volume()).powf(1.0 / self.nf())
    }

    /// Checks `0 < m < |B_1|` and returns the radius of the centered ball of volume `m`.
    pub fn checked_radius(self, m: f64) -> Result<f64> {
        let w = self.ball_volume();
        if !(m > 0.0 && m < w) {
            return Err(domain("m", m, format!("(0, {w})")));
        }
        Ok(self.radius_of_volume(m))
    }

    /// Radial fundamental profile used in closed-form segments: `ln r` for `n = 2`,
    /// `r^{2-n}` otherwise.
    pub fn psi(self, r: f64) -> f64 {
        match self.0 {
            2 => r.ln(),
            1 => r,
            n => r.powi(2 - n as i32),
        }
    }

    pub fn dpsi(self, r: f64) -> f64 {
        match self.0 {
            2 => 1.0 / r,
            1 => 1.0,
            n => (2.0 - n as f64) * r.powi(1 - n as i32),
        }
    }

    pub fn d2psi(self, r: f64) -> f64 {
        match self.0 {
            2 => -1.0 / (r * r),
            1 => 0.0,
            n => {
                let nf = n as f64;
                (2.0 - nf) * (1.0 - nf) * r.powi(-(n as i32))
            }
        }
    }

    /// `int_x^1 s^{1-n} ds`.
    pub fn flux_kernel(self, x: f64) -> f64 {
        match self.0 {
            2 => -x.ln(),
            1 => 1.0 - x,
            n => {
                let nf = n as f64;
                (x.powi(2 - n as i32) - 1.0) / (nf - 2.0)
            }
        }
    }

    /// `flux_kernel(1 - gap)` evaluated without cancellation for small `gap`.
    pub fn flux_kernel_gap(self, gap: f64) -> f64 {
        match self.0 {
            2 => -(-gap).ln_1p(),
            1 => gap,
            n => {
                let nf = n as f64;
                ((2.0 - nf) * (-gap).ln_1p()).exp_m1() / (nf - 2.0)
            }
        }
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_constants() {
        let d1 = Dimension::new(1).unwrap();
        let d2 = Dimension::new(2).unwrap();
        let d3 = Dimension::new(3).unwrap();
        assert_eq!(d1.ball_volume(), 2.0);
        assert!((d2.ball_volume() - PI).abs() < 1e-15);
        assert!((d3.ball_volume() - 4.0 * PI / 3.0).abs() < 1e-15);
        assert_eq!(d1.sphere_area(), 2.0);
        assert!((d3.sphere_area() - 4.0 * PI).abs() < 1e-14);
        let d4 = Dimension::new(4).unwrap();
        assert!((d4.ball_volume() - PI * PI / 2.0).abs() < 1e-14);
        assert!((d2.perimeter(0.5) - PI).abs() < 1e-15);
    }

    #[test]
    fn radius_roundtrip() {
        for n in 1..6 {
            let d = Dimension::new(n).unwrap();
            let m = 0.3 * d.ball_volume();
            let r = d.checked_radius(m).unwrap();
            assert!((d.volume_of_radius(r) - m).abs() < 1e-14);
        }
        assert!(Dimension::new(0).is_err());
        assert!(Dimension::new(2).unwrap().checked_radius(4.0).is_err());
    }
}
