use super::{to_matrix, BaseLaw, DistributionSpec, Family, Marginal};
use crate::error::{Error, Result};
use crate::rng::par_blocks;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, StandardNormal};

/// Row-major `m × d` point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::ShapeMismatch(format!("{} values do not form rows of {dim}", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

fn draw_marginal(marginal: &Marginal, rng: &mut ChaCha8Rng) -> f64 {
    let b = match marginal.base {
        BaseLaw::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        BaseLaw::Exponential => Exp1.sample(rng),
        BaseLaw::Uniform => rng.random_range(-1.0..1.0),
        BaseLaw::TwoPoint { a, b, w } => {
            if rng.random::<f64>() < w {
                a
            } else {
                b
            }
        }
    };
    marginal.scale * (b - marginal.shift)
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

enum Sampler {
    Atoms { cum: Vec<f64>, atoms: Vec<Vec<f64>> },
    Mixture { cum: Vec<f64>, means: Vec<Vec<f64>>, chol: Vec<DMatrix<f64>> },
    Product { marginal: Marginal, copies: usize },
}

impl Sampler {
    fn new(spec: &DistributionSpec) -> Self {
        match &spec.family {
            Family::Discrete { atoms, weights } => Sampler::Atoms {
                cum: cumulative(weights),
                atoms: atoms.clone(),
            },
            Family::PointMass { location } => Sampler::Atoms {
                cum: vec![f64::INFINITY],
                atoms: vec![location.clone()],
            },
            Family::GaussianMixture {
                means,
                covariances,
                weights,
            } => Sampler::Mixture {
                cum: cumulative(weights),
                means: means.clone(),
                chol: covariances
                    .iter()
                    .map(|c| to_matrix(c).cholesky().expect("validated positive-definite").l())
                    .collect(),
            },
            Family::Product1d { marginal, copies } => Sampler::Product {
                marginal: *marginal,
                copies: *copies,
            },
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            Sampler::Atoms { cum, atoms } => {
                let u: f64 = rng.random();
                let j = cum.partition_point(|&c| c <= u);
                out.copy_from_slice(&atoms[j]);
            }
            Sampler::Mixture { cum, means, chol } => {
                let u: f64 = rng.random();
                let j = cum.partition_point(|&c| c <= u);
                let d = out.len();
                let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                for i in 0..d {
                    out[i] = means[j][i] + (0..=i).map(|k| chol[j][(i, k)] * z[k]).sum::<f64>();
                }
            }
            Sampler::Product { marginal, copies } => {
                for slot in out.iter_mut().take(*copies) {
                    *slot = draw_marginal(marginal, rng);
                }
            }
        }
    }
}

/// `m` i.i.d. draws from `spec`, deterministic per seed and independent of the
/// number of worker threads.
pub fn sample(spec: &DistributionSpec, m: usize, seed: u64) -> Result<Points> {
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    let d = spec.dim;
    let sampler = Sampler::new(spec);
    let blocks = par_blocks(m, seed, |rng, count| {
        let mut out = vec![0.0; count * d];
        for row in out.chunks_exact_mut(d) {
            sampler.draw(rng, row);
        }
        out
    });
    Points::new(d, blocks.concat())
}

/// Per-row sampler of the unnormalised sum `X_1 + … + X_n`.
enum SumSampler {
    /// Independent coordinates with a two-atom marginal: binomial counts.
    ProductTwoAtom { lo: f64, hi: f64, p_hi: f64, copies: usize },
    /// Independent coordinates `scale (E - shift)`: Gamma(n) sums.
    ProductExponential { shift: f64, scale: f64, copies: usize },
    /// Few atoms: multinomial counts by conditional binomials.
    Multinomial { atoms: Vec<Vec<f64>>, weights: Vec<f64> },
    /// A single Gaussian is closed under convolution.
    Gaussian { mean: Vec<f64>, chol: DMatrix<f64> },
    Generic(Sampler),
}

impl SumSampler {
    fn new(spec: &DistributionSpec) -> Self {
        match &spec.family {
            Family::Product1d { marginal, copies } => match (marginal.base, marginal.atoms()) {
                (BaseLaw::Exponential, _) => SumSampler::ProductExponential {
                    shift: marginal.shift,
                    scale: marginal.scale,
                    copies: *copies,
                },
                (_, Some(atoms)) if atoms.len() == 2 => SumSampler::ProductTwoAtom {
                    lo: atoms[0].0,
                    hi: atoms[1].0,
                    p_hi: atoms[1].1,
                    copies: *copies,
                },
                _ => SumSampler::Generic(Sampler::new(spec)),
            },
            Family::Discrete { atoms, weights } if atoms.len() <= 64 => SumSampler::Multinomial {
                atoms: atoms.clone(),
                weights: weights.clone(),
            },
            Family::PointMass { location } => SumSampler::Multinomial {
                atoms: vec![location.clone()],
                weights: vec![1.0],
            },
            Family::GaussianMixture {
                means,
                covariances,
                weights,
            } if weights.len() == 1 => SumSampler::Gaussian {
                mean: means[0].clone(),
                chol: to_matrix(&covariances[0]).cholesky().expect("validated").l(),
            },
            _ => SumSampler::Generic(Sampler::new(spec)),
        }
    }

    fn draw_sum(&self, n: u64, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let nf = n as f64;
        match self {
            SumSampler::ProductTwoAtom { lo, hi, p_hi, copies } => {
                let bin = Binomial::new(n, *p_hi).expect("valid probability");
                for slot in out.iter_mut().take(*copies) {
                    let k = bin.sample(rng) as f64;
                    *slot = k * hi + (nf - k) * lo;
                }
            }
            SumSampler::ProductExponential { shift, scale, copies } => {
                let gamma = Gamma::new(nf, 1.0).expect("positive shape");
                for slot in out.iter_mut().take(*copies) {
                    let g: f64 = gamma.sample(rng);
                    *slot = scale * (g - nf * shift);
                }
            }
            SumSampler::Multinomial { atoms, weights } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let mut remaining = n;
                let mut mass = 1.0;
                for (j, (a, &w)) in atoms.iter().zip(weights).enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let c = if j + 1 == atoms.len() || mass <= w {
                        remaining
                    } else {
                        let p = (w / mass).clamp(0.0, 1.0);
                        Binomial::new(remaining, p).expect("valid probability").sample(rng)
                    };
                    remaining -= c;
                    mass -= w;
                    let cf = c as f64;
                    out.iter_mut().zip(a).for_each(|(o, v)| *o += cf * v);
                }
            }
            SumSampler::Gaussian { mean, chol } => {
                let d = out.len();
                let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let root_n = nf.sqrt();
                for i in 0..d {
                    out[i] = nf * mean[i] + root_n * (0..=i).map(|k| chol[(i, k)] * z[k]).sum::<f64>();
                }
            }
            SumSampler::Generic(sampler) => {
                let mut buf = vec![0.0; out.len()];
                out.iter_mut().for_each(|v| *v = 0.0);
                for _ in 0..n {
                    sampler.draw(rng, &mut buf);
                    out.iter_mut().zip(&buf).for_each(|(o, v)| *o += v);
                }
            }
        }
    }
}

/// `m` draws of `S_n = (X_1 + … + X_n)/√n`.
///
/// Product laws with two-atom or exponential marginals, small discrete laws
/// and single Gaussians are drawn exactly through their count/Gamma/Gaussian
/// representations; everything else is summed draw by draw.
pub fn sample_sum(spec: &DistributionSpec, n: usize, m: usize, seed: u64) -> Result<Points> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    let d = spec.dim;
    let sampler = SumSampler::new(spec);
    let inv_root = 1.0 / (n as f64).sqrt();
    let blocks = par_blocks(m, seed, |rng, count| {
        let mut out = vec![0.0; count * d];
        for row in out.chunks_exact_mut(d) {
            sampler.draw_sum(n as u64, rng, row);
            row.iter_mut().for_each(|v| *v *= inv_root);
        }
        out
    });
    Points::new(d, blocks.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::MeanVar;

    #[test]
    fn point_mass_rows_are_constant() {
        let p = sample(&DistributionSpec::point_mass(vec![0.0, 0.0]).unwrap(), 3, 1).unwrap();
        assert_eq!(p.data, vec![0.0; 6]);
    }

    #[test]
    fn rademacher_means() {
        let m = 100_000;
        let p = sample(&DistributionSpec::rademacher(3), m, 2).unwrap();
        for c in 0..3 {
            let mean: f64 = p.rows().map(|r| r[c]).sum::<f64>() / m as f64;
            assert!(mean.abs() < 4.0 / (m as f64).sqrt());
        }
    }

    #[test]
    fn exponential_skewness() {
        let m = 1_000_000;
        let p = sample(&DistributionSpec::standardized_exponential(1), m, 3).unwrap();
        let mean = p.data.iter().sum::<f64>() / m as f64;
        let var = p.data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
        let skew = p.data.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / m as f64 / var.powf(1.5);
        assert!((skew - 2.0).abs() < 0.1, "skewness {skew}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = DistributionSpec::gaussian_mixture(
            vec![vec![0.0, 1.0], vec![1.0, -1.0]],
            vec![vec![vec![1.0, 0.5], vec![0.5, 1.0]], vec![vec![0.3, 0.0], vec![0.0, 0.3]]],
            vec![0.3, 0.7],
        )
        .unwrap();
        assert_eq!(sample(&spec, 9000, 4).unwrap(), sample(&spec, 9000, 4).unwrap());
        assert_ne!(sample(&spec, 9000, 4).unwrap(), sample(&spec, 9000, 5).unwrap());
    }

    #[test]
    fn sums_are_standardised() {
        let specs = vec![
            DistributionSpec::rademacher(1),
            DistributionSpec::standardized_exponential(2),
            DistributionSpec::discrete(vec![vec![-1.0], vec![0.0], vec![2.0]], vec![0.4, 0.4, 0.2])
                .unwrap()
                .standardize()
                .unwrap(),
            DistributionSpec::product(Marginal::uniform_pm(), 1).unwrap().standardize().unwrap(),
            DistributionSpec::standard_gaussian(1).unwrap(),
        ];
        let m = 200_000;
        for s in specs {
            let p = sample_sum(&s, 7, m, 9).unwrap();
            let mut acc = MeanVar::default();
            p.rows().for_each(|r| acc.push(r[0]));
            assert!(acc.mean.abs() < 5.0 * acc.std_error(), "{}", s.label());
            assert!((acc.variance() - 1.0).abs() < 0.02, "{} var {}", s.label(), acc.variance());
        }
    }

    #[test]
    fn rademacher_sum_lives_on_lattice() {
        let p = sample_sum(&DistributionSpec::rademacher(1), 4, 100, 1).unwrap();
        for &v in &p.data {
            let k = v * 2.0; // sum / 2 * sqrt(4)
            assert!((k - k.round()).abs() < 1e-12 && (k.round() as i64 % 2 == 0));
        }
    }
}
