//! Seeded random streams and direction sets.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

/// One step of the splitmix64 generator; used to derive independent shard seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for shard `index` of a computation seeded with `seed`.
pub fn shard_rng(seed: u64, index: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Square matrix with independent standard normal entries.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

/// Uniform point of the unit sphere `S^{n-1}`.
pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Unit vectors as columns: equispaced angles for `n = 2`, otherwise seeded
/// random directions closed under negation.
pub fn direction_set(n: usize, count: usize, seed: u64) -> DMatrix<f64> {
    if n == 1 {
        return DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
    }
    if n == 2 {
        return DMatrix::from_fn(2, count, |i, j| {
            let theta = std::f64::consts::TAU * (j as f64 + 0.5) / count as f64;
            if i == 0 {
                theta.cos()
            } else {
                theta.sin()
            }
        });
    }
    let mut rng = rng(seed);
    let half = count.div_ceil(2);
    let mut out = DMatrix::zeros(n, 2 * half);
    for j in 0..half {
        let u = unit_vector(&mut rng, n);
        out.set_column(2 * j, &u);
        out.set_column(2 * j + 1, &(-u));
    }
    out
}

/// Surface area of the unit sphere `S^{k-1}` in `R^k`.
pub fn sphere_area(k: usize) -> f64 {
    k as f64 * ball_volume(k)
}

/// Volume of the unit ball in `R^k`, by `ω_k = ω_{k-2} 2π / k`.
pub fn ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => ball_volume(k - 2) * std::f64::consts::TAU / k as f64,
    }
}

/// Running mean and variance (Welford).
#[derive(Clone, Copy, Debug, Default)]
pub struct Moments {
    pub count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}
