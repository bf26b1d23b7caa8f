//! Quadrature on the unit sphere `S^{n-1}` for n = 2 and n = 3, normalized
//! so that the weights sum to one (mean values).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone)]
pub struct SphereRule {
    pub n: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// n = 2: trapezoid on 512 angles. n = 3: 64-point Gauss-Legendre in the
    /// polar cosine times a 128-point trapezoid in azimuth.
    pub fn standard(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Self::circle(512)),
            3 => Ok(Self::sphere(64, 128)),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn with_resolution(n: usize, polar: usize, azimuth: usize) -> Result<Self> {
        match n {
            2 => Ok(Self::circle(azimuth)),
            3 => Ok(Self::sphere(polar, azimuth)),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn circle(count: usize) -> Self {
        let w = 1.0 / count as f64;
        let points = (0..count)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / count as f64;
                [phi.cos(), phi.sin(), 0.0]
            })
            .collect();
        SphereRule {
            n: 2,
            points,
            weights: vec![w; count],
        }
    }

    pub fn sphere(polar: usize, azimuth: usize) -> Self {
        let (x, w) = gauss_legendre(polar);
        let mut points = Vec::with_capacity(polar * azimuth);
        let mut weights = Vec::with_capacity(polar * azimuth);
        for (c, wc) in x.iter().zip(&w) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..azimuth {
                let phi = 2.0 * PI * j as f64 / azimuth as f64;
                points.push([s * phi.cos(), s * phi.sin(), *c]);
                // GL weights sum to 2 over [-1, 1].
                weights.push(0.5 * wc / azimuth as f64);
            }
        }
        SphereRule { n: 3, points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Unit vector with the first `n` components.
    pub fn direction(&self, i: usize) -> &[f64] {
        &self.points[i][..self.n]
    }

    pub fn mean<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(&p[..self.n]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn second_moments_are_identity_over_n() {
        for n in [2, 3] {
            let rule = SphereRule::standard(n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let m = rule.mean(|th| th[i] * th[j]);
                    let exact = if i == j { 1.0 / n as f64 } else { 0.0 };
                    assert_relative_eq!(m, exact, epsilon = 1e-14);
                }
            }
            assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn fourth_moment_on_s2() {
        let rule = SphereRule::standard(3).unwrap();
        // mean of z^4 over S^2 is 1/5
        assert_relative_eq!(rule.mean(|th| th[2].powi(4)), 0.2, epsilon = 1e-14);
    }

    #[test]
    fn rejects_other_dimensions() {
        assert_eq!(
            SphereRule::standard(4).unwrap_err(),
            Error::UnsupportedDimension(4)
        );
    }
}
