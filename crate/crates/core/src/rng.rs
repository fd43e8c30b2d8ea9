//! Counter-based random streams.
//!
//! Every Monte Carlo loop in the crate draws from ChaCha8 streams keyed by
//! `(seed, block)`. Blocks have a fixed size, so results do not depend on the
//! number of rayon workers that happen to process them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Draws per seeded block.
pub const BLOCK: usize = 4096;

pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// SplitMix64 finaliser; used to derive independent child seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_8A2D_0F3C_5E1B));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits `total` draws into blocks of [`BLOCK`] and evaluates `f(rng, count)`
/// on each block in parallel. Results come back in block order.
pub fn par_blocks<T, F>(total: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let blocks = total.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK.min(total - b * BLOCK);
            let mut rng = block_rng(seed, b as u64);
            f(&mut rng, count)
        })
        .collect()
}

/// Running mean/variance accumulator (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanVar {
    pub count: f64,
    pub mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        if other.count == 0.0 {
            return;
        }
        if self.count == 0.0 {
            *self = *other;
            return;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count / count;
        self.m2 += other.m2 + delta * delta * self.count * other.count / count;
        self.count = count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            self.m2 / (self.count - 1.0)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            (self.variance() / self.count).sqrt()
        }
    }

    pub fn merged<'a>(parts: impl IntoIterator<Item = &'a MeanVar>) -> MeanVar {
        let mut acc = MeanVar::default();
        for p in parts {
            acc.merge(p);
        }
        acc
    }
}

/// Converts a Monte Carlo estimate of `E[Y]`, `Y >= 0`, into an estimate of
/// `E[Y]^{1/p}` with a delta-method standard error.
pub fn pnorm_from_moment(acc: &MeanVar, p: f64) -> crate::Estimate {
    let m = acc.mean.max(0.0);
    let value = m.powf(1.0 / p);
    let se = if m > 0.0 {
        acc.std_error() * value / (p * m)
    } else {
        0.0
    };
    crate::Estimate::stochastic(value, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn blocks_are_reproducible_and_ordered() {
        let a = par_blocks(10_000, 7, |rng, n| (0..n).map(|_| rng.random::<f64>()).sum::<f64>());
        let b = par_blocks(10_000, 7, |rng, n| (0..n).map(|_| rng.random::<f64>()).sum::<f64>());
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = MeanVar::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut left = MeanVar::default();
        let mut right = MeanVar::default();
        xs[..313].iter().for_each(|&x| left.push(x));
        xs[313..].iter().for_each(|&x| right.push(x));
        left.merge(&right);
        assert!((left.mean - whole.mean).abs() < 1e-12);
        assert!((left.variance() - whole.variance()).abs() < 1e-10);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
