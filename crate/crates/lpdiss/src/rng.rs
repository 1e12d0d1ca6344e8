//! Deterministic, platform-independent random numbers.
//!
//! The raw stream is SplitMix64. Floats take the top 53 bits of each word;
//! normal deviates come from the Box–Muller transform so that every sample
//! is reproducible bit for bit from the seed.

use std::f64::consts::TAU;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::linalg::C64;

/// Seeded generator used by every sampling routine in the crate.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: SplitMix64,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// A generator whose stream is independent of `Rng::new(seed)`.
    pub fn derived(seed: u64, stream: u64) -> Self {
        let mut base = Self::new(seed ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
        base.next_u64();
        base
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Uniformly distributed point on the real unit sphere in R^n.
    pub fn unit_real(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.normal()).collect();
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r > 1e-300 {
                return v.into_iter().map(|x| x / r).collect();
            }
        }
    }

    /// Uniformly distributed point on the complex unit sphere in C^m.
    pub fn unit_complex(&mut self, m: usize) -> Vec<C64> {
        let flat = self.unit_real(2 * m);
        (0..m).map(|j| C64::new(flat[2 * j], flat[2 * j + 1])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_vector() {
        let mut z: u64 = 0;
        let mut reference = || {
            z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut x = z;
            x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            x ^ (x >> 31)
        };
        let expected: Vec<u64> = (0..4).map(|_| reference()).collect();
        let mut rng = Rng::new(0);
        let got: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
        assert_eq!(got, expected);
        assert_eq!(got[0], 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = Rng::new(7);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut rng = Rng::new(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn unit_vectors_are_normalised() {
        let mut rng = Rng::new(3);
        let v = rng.unit_complex(4);
        let r: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn derived_streams_differ() {
        let a = Rng::new(5).next_u64();
        let b = Rng::derived(5, 1).next_u64();
        assert_ne!(a, b);
    }
}
