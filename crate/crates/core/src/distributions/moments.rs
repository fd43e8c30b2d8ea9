use super::{to_matrix, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::multilinear::{outer_power, Tensor};

/// `E[X^{⊗q}]`, exact for every built-in family: atom enumeration for
/// discrete laws, products of marginal moments for product laws and Isserlis
/// recursion for Gaussian mixtures.
pub fn moment_tensor(spec: &DistributionSpec, q: usize) -> Result<Tensor> {
    if q > crate::multilinear::MAX_ORDER {
        return Err(Error::TensorTooLarge { dim: spec.dim, order: q });
    }
    let d = spec.dim;
    match &spec.family {
        Family::Discrete { atoms, weights } => {
            let mut acc = Tensor::zeros(d, q)?;
            for (a, &w) in atoms.iter().zip(weights) {
                let t = outer_power(a, q)?;
                acc.as_mut_slice().iter_mut().zip(t.as_slice()).for_each(|(s, v)| *s += w * v);
            }
            Ok(acc)
        }
        Family::PointMass { location } => outer_power(location, q),
        Family::Product1d { marginal, .. } => {
            let table: Vec<f64> = (0..=q as u32).map(|r| marginal.moment(r)).collect();
            let mut out = Tensor::zeros(d, q)?;
            let mut counts = vec![0usize; d];
            for (flat, slot) in out.as_mut_slice().iter_mut().enumerate() {
                counts.iter_mut().for_each(|c| *c = 0);
                let mut f = flat;
                for _ in 0..q {
                    counts[f % d] += 1;
                    f /= d;
                }
                *slot = counts.iter().map(|&m| table[m]).product();
            }
            Ok(out)
        }
        Family::GaussianMixture {
            means,
            covariances,
            weights,
        } => {
            let mut out = Tensor::zeros(d, q)?;
            let mut idx = vec![0usize; q];
            for ((mu, cov), &w) in means.iter().zip(covariances).zip(weights) {
                let cov = to_matrix(cov);
                for flat in 0..out.as_slice().len() {
                    out.multi_index(flat, &mut idx);
                    let v = gaussian_monomial(mu, &cov, &idx);
                    out.as_mut_slice()[flat] += w * v;
                }
            }
            Ok(out)
        }
    }
}

/// `E[∏ X_{idx}]` for `X ~ N(mu, cov)` via
/// `E[X_a f(X)] = mu_a E[f] + Σ_b cov_{ab} E[∂_b f]`.
fn gaussian_monomial(mu: &[f64], cov: &nalgebra::DMatrix<f64>, idx: &[usize]) -> f64 {
    let Some((&first, rest)) = idx.split_first() else {
        return 1.0;
    };
    let mut total = mu[first] * gaussian_monomial(mu, cov, rest);
    for l in 0..rest.len() {
        let c = cov[(first, rest[l])];
        if c != 0.0 {
            let mut without: Vec<usize> = rest.to_vec();
            without.remove(l);
            total += c * gaussian_monomial(mu, cov, &without);
        }
    }
    total
}
