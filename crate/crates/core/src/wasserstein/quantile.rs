use crate::distributions::Discrete1D;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, gauss_legendre};
use crate::special::{normal_pdf, normal_quantile, normal_quantile_upper};

pub const DEFAULT_QUAD_ORDER: usize = 32;

/// Absolute target on `W_p^p`.
const TARGET: f64 = 1e-9;
/// Gaussian mass beyond this many standard deviations is below `1e-300`.
const Z_CLIP: f64 = 38.0;
const TAIL_SPLIT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileIntegral {
    pub value: f64,
    /// Accumulated quadrature error estimate on `W_p^p`.
    pub error: f64,
}

/// Normal quantiles of the cumulative weights, one per cell boundary.
///
/// The lower half is computed from cumulative sums taken from the left, the
/// upper half from tail sums taken from the right, so extreme cells keep
/// full relative precision.
fn boundaries(weights: &[f64]) -> Vec<f64> {
    let a = weights.len();
    let mut below = vec![0.0; a + 1];
    for j in 0..a {
        below[j + 1] = below[j] + weights[j];
    }
    let mut above = vec![0.0; a + 1];
    for j in (0..a).rev() {
        above[j] = above[j + 1] + weights[j];
    }
    (0..=a)
        .map(|j| {
            if j == 0 {
                -Z_CLIP
            } else if j == a {
                Z_CLIP
            } else if below[j] <= 0.5 {
                normal_quantile(below[j]).max(-Z_CLIP)
            } else {
                normal_quantile_upper(above[j]).min(Z_CLIP)
            }
        })
        .collect()
}

/// `W_p(law, N(0,1))^p` with its quadrature error estimate.
///
/// In `z = Φ^{-1}(u)` the cell of atom `a_j` becomes `∫ |a_j - z|^p φ(z) dz`
/// over `[z_j, z_{j+1}]`, which is smooth apart from the kink at `a_j`; cells
/// are split at `a_j` and at `a_j ± 8`.
pub fn wp_quantile_exact_with_error(law: &Discrete1D, p: f64, quad_order: usize) -> Result<QuantileIntegral> {
    if !(p >= 1.0) {
        return Err(Error::invalid("p", "must be >= 1"));
    }
    if quad_order < 2 {
        return Err(Error::invalid("quad_order", "must be >= 2"));
    }
    let rule = gauss_legendre(quad_order);
    let z = boundaries(law.weights());
    let cell_tol = (TARGET / (4.0 * law.len() as f64)).max(1e-16);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    for (j, &a) in law.atoms().iter().enumerate() {
        let (lo, hi) = (z[j], z[j + 1]);
        if !(hi > lo) {
            continue;
        }
        let mut cuts = vec![lo];
        for c in [a - TAIL_SPLIT, a, a + TAIL_SPLIT] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        cuts.push(hi);
        let mut f = |x: f64| (a - x).abs().powf(p) * normal_pdf(x);
        for w in cuts.windows(2) {
            let q = adaptive(&rule, w[0], w[1], cell_tol, &mut f);
            value += q.value;
            error += q.error;
            converged &= q.converged;
        }
    }
    if !value.is_finite() {
        return Err(Error::NonFinite("quantile integral".into()));
    }
    if !converged && error > TARGET {
        return Err(Error::QuadratureNonConvergence { achieved: error, target: TARGET });
    }
    Ok(QuantileIntegral { value, error })
}

/// `W_p(law, N(0, 1))` through the quantile coupling
/// `(∫_0^1 |F^{-1}(u) - Φ^{-1}(u)|^p du)^{1/p}`.
pub fn wp_quantile_exact(law: &Discrete1D, p: f64, quad_order: usize) -> Result<f64> {
    Ok(wp_quantile_exact_with_error(law, p, quad_order)?.value.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{convolve_power, DistributionSpec, DEFAULT_MERGE_EPS};
    use std::f64::consts::PI;

    #[test]
    fn point_mass_at_zero_gives_gaussian_norm() {
        let law = Discrete1D::new(vec![0.0], vec![1.0]).unwrap();
        let w = wp_quantile_exact(&law, 2.0, DEFAULT_QUAD_ORDER).unwrap();
        assert!((w - 1.0).abs() < 1e-9, "{w}");
        // E|Z|^3 = 2 sqrt(2/pi)
        let w3 = wp_quantile_exact(&law, 3.0, DEFAULT_QUAD_ORDER).unwrap();
        assert!((w3.powi(3) - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn two_atoms_match_folded_normal() {
        // E[(|Z| - 1)^2] = 2 - 2 sqrt(2/pi)
        let law = Discrete1D::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let w = wp_quantile_exact(&law, 2.0, DEFAULT_QUAD_ORDER).unwrap();
        let exact = (2.0 - 2.0 * (2.0 / PI).sqrt()).sqrt();
        assert!((w - exact).abs() < 1e-10, "{w} vs {exact}");
        assert!((w - 0.635_791_5).abs() < 1e-6);
    }

    #[test]
    fn shifted_point_mass() {
        // W_2(δ_a, γ)^2 = a^2 + 1
        let law = Discrete1D::new(vec![3.0], vec![1.0]).unwrap();
        let w = wp_quantile_exact(&law, 2.0, DEFAULT_QUAD_ORDER).unwrap();
        assert!((w * w - 10.0).abs() < 1e-9);
    }

    #[test]
    fn binomial_laws_scale_like_root_n() {
        let spec = DistributionSpec::rademacher(1);
        let mut last = f64::INFINITY;
        for n in [16usize, 64, 256, 1024] {
            let law = convolve_power(&spec, n, DEFAULT_MERGE_EPS).unwrap();
            let q = wp_quantile_exact_with_error(&law, 2.0, DEFAULT_QUAD_ORDER).unwrap();
            assert!(q.error < 1e-9);
            let scaled = (n as f64).sqrt() * q.value.sqrt();
            assert!(scaled > 0.5 && scaled < 0.7, "n={n}: {scaled}");
            assert!(q.value.sqrt() < last);
            last = q.value.sqrt();
        }
    }
}
