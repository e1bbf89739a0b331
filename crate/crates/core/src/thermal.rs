//! Brown thermal field with counter-based seeding.
//!
//! Every draw is keyed by `(seed, step, sublattice)`, so rejected and retried
//! adaptive steps reuse the same normals and only the `1/sqrt(dt)` scale
//! changes. Streams therefore never desynchronize when step sizes differ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::constants::{GAMMA, K_B, MU0};
use crate::dynamics::MaterialParams;
use crate::vec3::Vec3;

/// Variance of each thermal-field component, (A/m)^2.
pub fn thermal_variance(mat: &MaterialParams, volume: f64, temperature: f64, dt: f64) -> f64 {
    2.0 * mat.alpha * K_B * temperature / (GAMMA * MU0 * MU0 * mat.ms * volume * dt)
}

/// One thermal-field sample, A/m. Returns exactly zero without touching `rng`
/// when `temperature == 0`.
pub fn sample_thermal_field<R: Rng + ?Sized>(
    mat: &MaterialParams,
    volume: f64,
    temperature: f64,
    dt: f64,
    rng: &mut R,
) -> Vec3 {
    if temperature == 0.0 {
        return Vec3::ZERO;
    }
    let sigma = thermal_variance(mat, volume, temperature, dt).sqrt();
    standard_normal3(rng) * sigma
}

fn standard_normal3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one `(seed, step, sublattice)` tuple.
pub fn keyed_rng(seed: u64, step: u64, sublattice: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ step) ^ sublattice);
    ChaCha8Rng::seed_from_u64(key)
}

/// Thermal source owned by one trajectory.
#[derive(Debug, Clone, Copy)]
pub struct ThermalSource {
    pub material: MaterialParams,
    pub volume: f64,
    pub temperature: f64,
    pub seed: u64,
}

impl ThermalSource {
    /// Unit-variance normals for an accepted-step index; `None` at T = 0 so
    /// no generator is ever constructed.
    pub fn normals(&self, step: u64) -> Option<[Vec3; 2]> {
        if self.temperature == 0.0 {
            return None;
        }
        Some([0, 1].map(|i| standard_normal3(&mut keyed_rng(self.seed, step, i))))
    }

    pub fn sigma(&self, dt: f64) -> f64 {
        thermal_variance(&self.material, self.volume, self.temperature, dt).sqrt()
    }

    pub fn field(&self, step: u64, dt: f64) -> [Vec3; 2] {
        match self.normals(step) {
            None => [Vec3::ZERO; 2],
            Some(n) => {
                let s = self.sigma(dt);
                [n[0] * s, n[1] * s]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    fn mat() -> MaterialParams {
        MaterialParams {
            ms: 6e5,
            alpha: 0.01,
            p0: 0.8,
            hk: 4e4,
            nz: 1.0,
            stt_efficiency: 1.0,
        }
    }

    /// Counts draws so the zero-temperature path can be shown to consume none.
    struct Counting<R>(R, usize);

    impl<R: RngCore> RngCore for Counting<R> {
        fn next_u32(&mut self) -> u32 {
            self.1 += 1;
            self.0.next_u32()
        }
        fn next_u64(&mut self) -> u64 {
            self.1 += 1;
            self.0.next_u64()
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            self.1 += 1;
            self.0.fill_bytes(dst)
        }
    }

    #[test]
    fn zero_temperature_is_exact_zero_without_draws() {
        let mut rng = Counting(ChaCha8Rng::seed_from_u64(1), 0);
        let v = 2025e-27 * 0.45;
        assert_eq!(sample_thermal_field(&mat(), v, 0.0, 1e-13, &mut rng), Vec3::ZERO);
        assert_eq!(rng.1, 0);
        let src = ThermalSource { material: mat(), volume: v, temperature: 0.0, seed: 3 };
        assert_eq!(src.field(17, 1e-13), [Vec3::ZERO; 2]);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..8).map(|_| sample_thermal_field(&mat(), 1e-24, 300.0, 1e-13, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn keyed_streams_differ_by_step_and_sublattice() {
        let src = ThermalSource { material: mat(), volume: 1e-24, temperature: 300.0, seed: 9 };
        let a = src.field(0, 1e-13);
        let b = src.field(1, 1e-13);
        assert_ne!(a[0], a[1]);
        assert_ne!(a[0], b[0]);
        assert_eq!(a, src.field(0, 1e-13));
    }
}
