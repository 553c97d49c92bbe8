//! Seeded random competitors for property sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dimension::Dimension;
use crate::domains::{project_volume, HarmonicCoeffs, StarDomain};
use crate::error::Result;
use crate::harmonics;
use crate::radial::{DensityPiece, RadialDensity};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_breaks<R: Rng>(rng: &mut R, pieces: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (0..pieces - 1).map(|_| rng.random_range(0.02..0.98)).collect();
    b.push(0.0);
    b.push(1.0);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Piecewise constant `0 <= V <= 1` with random values; any mass.
pub fn random_step_density<R: Rng>(rng: &mut R, n: Dimension, pieces: usize) -> Result<RadialDensity> {
    let breaks = random_breaks(rng, pieces.max(1));
    let values: Vec<f64> = (1..breaks.len()).map(|_| rng.random_range(0.0..1.0)).collect();
    RadialDensity::steps(n, &breaks, &values)
}

/// Piecewise linear (discontinuous) `0 <= V <= 1`.
pub fn random_linear_density<R: Rng>(rng: &mut R, n: Dimension, pieces: usize) -> Result<RadialDensity> {
    let breaks = random_breaks(rng, pieces.max(1));
    let out = breaks
        .windows(2)
        .map(|w| {
            let (v0, v1): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let b = (v1 - v0) / (w[1] - w[0]);
            DensityPiece { lo: w[0], hi: w[1], a: v0 - b * w[0], b }
        })
        .collect();
    RadialDensity::new(n, out)
}

/// Moves `V` into `M_m = {0 <= V <= 1, int V = m}` by scaling down or mixing with 1.
pub fn into_class(v: &RadialDensity, m: f64) -> Result<RadialDensity> {
    let mass = v.mass();
    let total = v.n().ball_volume();
    let pieces = if mass > m {
        let s = m / mass;
        v.pieces().iter().map(|p| DensityPiece { a: p.a * s, b: p.b * s, ..*p }).collect()
    } else {
        // V + l (1 - V) has mass mass + l (total - mass)
        let l = (m - mass) / (total - mass);
        v.pieces().iter().map(|p| DensityPiece { a: p.a + l * (1.0 - p.a), b: p.b * (1.0 - l), ..*p }).collect()
    };
    RadialDensity::new(v.n(), pieces)
}

/// Random element of `M_m` with `pieces` steps.
pub fn random_density_in_class<R: Rng>(rng: &mut R, n: Dimension, m: f64, pieces: usize) -> Result<RadialDensity> {
    into_class(&random_step_density(rng, n, pieces)?, m)
}

/// Random band-limited star domain of volume `m` with `|g| <= amplitude` pointwise.
pub fn random_star<R: Rng>(rng: &mut R, n: Dimension, m: f64, kmax: usize, amplitude: f64) -> Result<StarDomain> {
    let mut g = HarmonicCoeffs::new(n)?;
    let mut bound = 0.0;
    let top = if n.n() == 1 { 1 } else { kmax.max(1) };
    for k in 1..=top {
        for idx in 0..harmonics::multiplicity(n, k) {
            let c: f64 = rng.random_range(-1.0..1.0);
            g.set(k, idx, c)?;
            // sup |Y_k| = 1 / N for the raw harmonics used here
            bound += c.abs() / harmonics::normalization(n, k);
        }
    }
    let g = g.scaled(amplitude / bound);
    let e = StarDomain::new(n.checked_radius(m)?, g)?;
    project_volume(&e, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_projection() {
        let n = Dimension::new(2).unwrap();
        let mut r = rng(7);
        for _ in 0..20 {
            let v = random_density_in_class(&mut r, n, 1.0, 5).unwrap();
            assert!((v.mass() - 1.0).abs() < 1e-12);
            let w = into_class(&random_linear_density(&mut r, n, 4).unwrap(), 2.0).unwrap();
            assert!((w.mass() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stars_are_deterministic() {
        let n = Dimension::new(2).unwrap();
        let a = random_star(&mut rng(3), n, 0.8, 4, 0.05).unwrap();
        let b = random_star(&mut rng(3), n, 0.8, 4, 0.05).unwrap();
        assert_eq!(a, b);
        assert!((a.volume() - 0.8).abs() < 1e-12);
        assert!(a.max_radius() - a.min_radius() <= 0.1 + 1e-12);
    }
}
