//! Source laws `ν` of the summands `X_i`.
//!
//! A [`DistributionSpec`] is immutable once built. Standardisation returns a
//! new spec describing `Σ^{-1/2}(X - μ)` with the symmetric square root; for
//! every built-in family this transformation is carried out exactly on the
//! parameters (atoms, mixture components, marginal location/scale), so moments
//! of standardised specs remain exact.

mod convolve;
mod file;
mod moments;
mod pairs;
mod sample;

pub use convolve::{convolve_power, convolve_powers, lattice_span, Discrete1D, DEFAULT_MERGE_EPS, MAX_ATOMS};
pub use file::{load_spec, parse_spec, SpecFile};
pub use moments::moment_tensor;
pub use pairs::{difference_abs_moment, difference_second_moment, MatrixEstimate, PairTable, Side, DEFAULT_MC_PAIRS};
pub use sample::{sample, sample_sum, Points};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

const WEIGHT_TOL: f64 = 1e-12;

/// Named one-dimensional base laws used by product specs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseLaw {
    /// ±1 with probability 1/2.
    Rademacher,
    /// Exp(1).
    Exponential,
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// `a` with probability `w`, `b` otherwise.
    TwoPoint { a: f64, b: f64, w: f64 },
}

impl BaseLaw {
    fn raw_moment(&self, r: u32) -> f64 {
        match *self {
            BaseLaw::Rademacher => {
                if r % 2 == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            BaseLaw::Exponential => (1..=r).map(f64::from).product(),
            BaseLaw::Uniform => {
                if r % 2 == 0 {
                    1.0 / f64::from(r + 1)
                } else {
                    0.0
                }
            }
            BaseLaw::TwoPoint { a, b, w } => w * a.powi(r as i32) + (1.0 - w) * b.powi(r as i32),
        }
    }

    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            BaseLaw::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            BaseLaw::TwoPoint { a, b, w } => {
                let mut v = vec![(a, w), (b, 1.0 - w)];
                v.retain(|&(_, p)| p > 0.0);
                v.sort_by(|x, y| x.0.total_cmp(&y.0));
                Some(v)
            }
            BaseLaw::Exponential | BaseLaw::Uniform => None,
        }
    }
}

/// One-dimensional marginal `scale · (B - shift)` for a base law `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub base: BaseLaw,
    pub shift: f64,
    pub scale: f64,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

impl Marginal {
    pub fn rademacher() -> Self {
        Self {
            base: BaseLaw::Rademacher,
            shift: 0.0,
            scale: 1.0,
        }
    }

    /// `E - 1` for `E ~ Exp(1)`: mean 0, variance 1, third moment 2.
    pub fn standardized_exponential() -> Self {
        Self {
            base: BaseLaw::Exponential,
            shift: 1.0,
            scale: 1.0,
        }
    }

    pub fn uniform_pm() -> Self {
        Self {
            base: BaseLaw::Uniform,
            shift: 0.0,
            scale: 1.0,
        }
    }

    pub fn two_point(a: f64, b: f64, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid("w", "two-point weight must lie in [0, 1]"));
        }
        Ok(Self {
            base: BaseLaw::TwoPoint { a, b, w },
            shift: 0.0,
            scale: 1.0,
        })
    }

    /// `E[Y^r]` for `Y = scale (B - shift)`.
    pub fn moment(&self, r: u32) -> f64 {
        let central: f64 = (0..=r)
            .map(|k| binomial(r, k) * self.base.raw_moment(k) * (-self.shift).powi((r - k) as i32))
            .sum();
        self.scale.powi(r as i32) * central
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2) - m * m
    }

    fn standardized(&self) -> Result<Self> {
        let mean = self.mean();
        let var = self.variance();
        if !(var > 1e-300) {
            return Err(Error::SingularCovariance { min_eigenvalue: var });
        }
        Ok(Self {
            base: self.base,
            shift: self.shift + mean / self.scale,
            scale: self.scale / var.sqrt(),
        })
    }

    /// Atoms `(value, weight)` sorted by value, for discrete bases.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        self.base.atoms().map(|v| {
            let mut out: Vec<_> = v.into_iter().map(|(a, w)| (self.scale * (a - self.shift), w)).collect();
            out.sort_by(|x, y| x.0.total_cmp(&y.0));
            out
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Discrete {
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    GaussianMixture {
        means: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
        weights: Vec<f64>,
    },
    /// `copies` independent coordinates with the same marginal.
    #[serde(rename = "product_1d")]
    Product1d { marginal: Marginal, copies: usize },
    PointMass { location: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub family: Family,
    pub standardized: bool,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::invalid("weights", "must be non-empty"));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("weights", format!("negative or non-finite weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::invalid("weights", format!("sum to {total}, expected 1")));
    }
    Ok(())
}

fn check_vectors(field: &str, rows: &[Vec<f64>], dim: usize) -> Result<()> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::invalid(
                field,
                format!("entry {i} has length {}, expected dim {dim}", r.len()),
            ));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(field, format!("entry {i} is not finite")));
        }
    }
    Ok(())
}

impl DistributionSpec {
    pub fn discrete(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = atoms.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::invalid("atoms", "need at least one non-empty atom"));
        }
        if atoms.len() != weights.len() {
            return Err(Error::invalid("weights", "length differs from atoms"));
        }
        check_vectors("atoms", &atoms, dim)?;
        check_weights(&weights)?;
        Ok(Self {
            dim,
            family: Family::Discrete { atoms, weights },
            standardized: false,
        })
    }

    pub fn gaussian_mixture(means: Vec<Vec<f64>>, covariances: Vec<Vec<Vec<f64>>>, weights: Vec<f64>) -> Result<Self> {
        let dim = means.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::invalid("means", "need at least one component"));
        }
        if means.len() != weights.len() || covariances.len() != weights.len() {
            return Err(Error::invalid("weights", "means, covariances and weights differ in length"));
        }
        check_vectors("means", &means, dim)?;
        for (i, c) in covariances.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::invalid("covariances", format!("component {i} is not {dim}x{dim}")));
            }
            check_vectors("covariances", c, dim)?;
            let m = to_matrix(c);
            if (&m - m.transpose()).amax() > 1e-12 {
                return Err(Error::invalid("covariances", format!("component {i} is not symmetric")));
            }
            if m.cholesky().is_none() {
                return Err(Error::invalid(
                    "covariances",
                    format!("component {i} is not positive-definite"),
                ));
            }
        }
        check_weights(&weights)?;
        Ok(Self {
            dim,
            family: Family::GaussianMixture {
                means,
                covariances,
                weights,
            },
            standardized: false,
        })
    }

    /// The standard Gaussian `γ` on `R^d`, as a one-component mixture.
    pub fn standard_gaussian(dim: usize) -> Result<Self> {
        let cov = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut s = Self::gaussian_mixture(vec![vec![0.0; dim]], vec![cov], vec![1.0])?;
        s.standardized = true;
        Ok(s)
    }

    pub fn product(marginal: Marginal, copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::invalid("copies", "must be positive"));
        }
        if let BaseLaw::TwoPoint { w, .. } = marginal.base {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid("w", "two-point weight must lie in [0, 1]"));
            }
        }
        let standardized = marginal.mean().abs() < 1e-12 && (marginal.variance() - 1.0).abs() < 1e-12;
        Ok(Self {
            dim: copies,
            family: Family::Product1d { marginal, copies },
            standardized,
        })
    }

    pub fn point_mass(location: Vec<f64>) -> Result<Self> {
        if location.is_empty() || location.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("location", "must be a finite non-empty vector"));
        }
        Ok(Self {
            dim: location.len(),
            family: Family::PointMass { location },
            standardized: false,
        })
    }

    /// Product of `d` Rademacher coordinates (already standardised).
    pub fn rademacher(d: usize) -> Self {
        Self::product(Marginal::rademacher(), d).expect("valid")
    }

    /// Product of `d` standardised Exp(1) coordinates.
    pub fn standardized_exponential(d: usize) -> Self {
        Self::product(Marginal::standardized_exponential(), d).expect("valid")
    }

    pub fn mean(&self) -> DVector<f64> {
        match &self.family {
            Family::Discrete { atoms, weights } => weighted_sum(atoms, weights, self.dim),
            Family::GaussianMixture { means, weights, .. } => weighted_sum(means, weights, self.dim),
            Family::Product1d { marginal, copies } => DVector::from_element(*copies, marginal.mean()),
            Family::PointMass { location } => DVector::from_column_slice(location),
        }
    }

    /// Exact covariance matrix.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mu = self.mean();
        let d = self.dim;
        match &self.family {
            Family::Discrete { atoms, weights } => {
                let mut c = DMatrix::zeros(d, d);
                for (a, &w) in atoms.iter().zip(weights) {
                    let v = DVector::from_column_slice(a) - &mu;
                    c += w * &v * v.transpose();
                }
                c
            }
            Family::GaussianMixture {
                means,
                covariances,
                weights,
            } => {
                let mut c = DMatrix::zeros(d, d);
                for ((m, s), &w) in means.iter().zip(covariances).zip(weights) {
                    let v = DVector::from_column_slice(m) - &mu;
                    c += w * (to_matrix(s) + &v * v.transpose());
                }
                c
            }
            Family::Product1d { marginal, copies } => DMatrix::from_diagonal_element(*copies, *copies, marginal.variance()),
            Family::PointMass { .. } => DMatrix::zeros(d, d),
        }
    }

    /// `E[X X^T]`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let mu = self.mean();
        self.covariance() + &mu * mu.transpose()
    }

    /// Finitely many atoms, when the law is discrete and small enough to
    /// enumerate (product laws up to `2^16` atoms).
    pub fn finite_atoms(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        match &self.family {
            Family::Discrete { atoms, weights } => Some((atoms.clone(), weights.clone())),
            Family::PointMass { location } => Some((vec![location.clone()], vec![1.0])),
            Family::Product1d { marginal, copies } => {
                let base = marginal.atoms()?;
                let total = (base.len() as f64).powi(*copies as i32);
                if total > 65_536.0 {
                    return None;
                }
                let mut atoms = vec![vec![]];
                let mut weights = vec![1.0];
                for _ in 0..*copies {
                    let mut na = Vec::with_capacity(atoms.len() * base.len());
                    let mut nw = Vec::with_capacity(atoms.len() * base.len());
                    for (a, w) in atoms.iter().zip(&weights) {
                        for &(v, p) in &base {
                            let mut row: Vec<f64> = a.clone();
                            row.push(v);
                            na.push(row);
                            nw.push(w * p);
                        }
                    }
                    atoms = na;
                    weights = nw;
                }
                Some((atoms, weights))
            }
            Family::GaussianMixture { .. } => None,
        }
    }

    pub fn is_finite_atom(&self) -> bool {
        match &self.family {
            Family::Discrete { .. } | Family::PointMass { .. } => true,
            Family::Product1d { marginal, .. } => marginal.atoms().is_some(),
            Family::GaussianMixture { .. } => false,
        }
    }

    /// The law of `Σ^{-1/2}(X - μ)` with the symmetric square root.
    ///
    /// Fails with the smallest covariance eigenvalue when the covariance is
    /// singular.
    pub fn standardize(&self) -> Result<Self> {
        let d = self.dim;
        if let Family::Product1d { marginal, copies } = &self.family {
            return Ok(Self {
                dim: d,
                family: Family::Product1d {
                    marginal: marginal.standardized()?,
                    copies: *copies,
                },
                standardized: true,
            });
        }
        let mu = self.mean();
        let cov = self.covariance();
        let eig = SymmetricEigen::new(cov);
        let (min, max) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(min > 1e-12 * max.max(1e-300)) || min <= 0.0 {
            return Err(Error::SingularCovariance { min_eigenvalue: min });
        }
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let whiten = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
        let map = |v: &[f64]| -> Vec<f64> {
            let x = DVector::from_column_slice(v) - &mu;
            (&whiten * x).iter().copied().collect()
        };
        let family = match &self.family {
            Family::Discrete { atoms, weights } => Family::Discrete {
                atoms: atoms.iter().map(|a| map(a)).collect(),
                weights: weights.clone(),
            },
            Family::GaussianMixture {
                means,
                covariances,
                weights,
            } => Family::GaussianMixture {
                means: means.iter().map(|m| map(m)).collect(),
                covariances: covariances
                    .iter()
                    .map(|c| {
                        let t = &whiten * to_matrix(c) * &whiten;
                        let sym = 0.5 * (&t + t.transpose());
                        from_matrix(&sym)
                    })
                    .collect(),
                weights: weights.clone(),
            },
            Family::Product1d { .. } | Family::PointMass { .. } => unreachable!("handled above"),
        };
        Ok(Self {
            dim: d,
            family,
            standardized: true,
        })
    }

    /// Short human-readable label used as a default spec id.
    pub fn label(&self) -> String {
        match &self.family {
            Family::Discrete { atoms, .. } => format!("discrete{}_d{}", atoms.len(), self.dim),
            Family::GaussianMixture { means, .. } => format!("gmix{}_d{}", means.len(), self.dim),
            Family::Product1d { marginal, copies } => {
                let base = match marginal.base {
                    BaseLaw::Rademacher => "rademacher",
                    BaseLaw::Exponential => "exponential",
                    BaseLaw::Uniform => "uniform",
                    BaseLaw::TwoPoint { .. } => "two_point",
                };
                format!("{base}_d{copies}")
            }
            Family::PointMass { .. } => format!("point_mass_d{}", self.dim),
        }
    }
}

fn weighted_sum(rows: &[Vec<f64>], weights: &[f64], dim: usize) -> DVector<f64> {
    let mut acc = DVector::zeros(dim);
    for (r, &w) in rows.iter().zip(weights) {
        acc += w * DVector::from_column_slice(r);
    }
    acc
}

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows.len();
    DMatrix::from_fn(d, d, |i, j| rows[i][j])
}

pub(crate) fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_standard(spec: &DistributionSpec, tol: f64) {
        let mu = spec.mean();
        let cov = spec.covariance();
        assert!(mu.amax() < tol, "mean {mu}");
        assert!((cov - DMatrix::identity(spec.dim, spec.dim)).amax() < tol);
    }

    #[test]
    fn standardize_two_atoms() {
        let s = DistributionSpec::discrete(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let t = s.standardize().unwrap();
        let Family::Discrete { atoms, weights } = &t.family else {
            panic!()
        };
        assert!((atoms[0][0] + 1.0).abs() < 1e-12 && (atoms[1][0] - 1.0).abs() < 1e-12);
        assert_eq!(weights, &vec![0.5, 0.5]);
        assert!(t.standardized);
    }

    #[test]
    fn standardize_correlated_discrete() {
        let s = DistributionSpec::discrete(
            vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 1.0], vec![-1.0, 0.5]],
            vec![0.1, 0.4, 0.3, 0.2],
        )
        .unwrap();
        let t = s.standardize().unwrap();
        // covariance recomputed by direct atom enumeration
        let Family::Discrete { atoms, weights } = &t.family else {
            panic!()
        };
        let mut cov = [[0.0; 2]; 2];
        let mut mean = [0.0; 2];
        for (a, w) in atoms.iter().zip(weights) {
            for i in 0..2 {
                mean[i] += w * a[i];
                for j in 0..2 {
                    cov[i][j] += w * a[i] * a[j];
                }
            }
        }
        for i in 0..2 {
            assert!(mean[i].abs() < 1e-9);
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[i][j] - mean[i] * mean[j] - target).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn standardize_is_idempotent() {
        let specs = vec![
            DistributionSpec::discrete(vec![vec![0.0, 1.0], vec![2.0, 2.0], vec![1.0, -1.0]], vec![0.2, 0.5, 0.3]).unwrap(),
            DistributionSpec::gaussian_mixture(
                vec![vec![0.0, 1.0], vec![2.0, -1.0]],
                vec![vec![vec![1.0, 0.3], vec![0.3, 0.5]], vec![vec![0.2, 0.0], vec![0.0, 2.0]]],
                vec![0.4, 0.6],
            )
            .unwrap(),
            DistributionSpec::product(Marginal::uniform_pm(), 3).unwrap(),
            DistributionSpec::product(Marginal::two_point(0.0, 3.0, 0.8).unwrap(), 2).unwrap(),
        ];
        for s in specs {
            let once = s.standardize().unwrap();
            assert_standard(&once, 1e-9);
            let twice = once.standardize().unwrap();
            assert_standard(&twice, 1e-9);
            match (&once.family, &twice.family) {
                (Family::Discrete { atoms: a, .. }, Family::Discrete { atoms: b, .. }) => {
                    for (x, y) in a.iter().zip(b) {
                        for (u, v) in x.iter().zip(y) {
                            assert!((u - v).abs() < 1e-9);
                        }
                    }
                }
                (Family::Product1d { marginal: a, .. }, Family::Product1d { marginal: b, .. }) => {
                    assert!((a.shift - b.shift).abs() < 1e-9 && (a.scale - b.scale).abs() < 1e-9);
                }
                (Family::GaussianMixture { means: a, .. }, Family::GaussianMixture { means: b, .. }) => {
                    for (x, y) in a.iter().zip(b) {
                        for (u, v) in x.iter().zip(y) {
                            assert!((u - v).abs() < 1e-9);
                        }
                    }
                }
                _ => panic!("family changed"),
            }
        }
    }

    #[test]
    fn point_mass_is_rejected() {
        let s = DistributionSpec::point_mass(vec![0.0, 0.0]).unwrap();
        match s.standardize() {
            Err(Error::SingularCovariance { min_eigenvalue }) => assert_eq!(min_eigenvalue, 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weights_are_validated() {
        assert!(DistributionSpec::discrete(vec![vec![0.0], vec![1.0]], vec![0.5, 0.6]).is_err());
        assert!(DistributionSpec::discrete(vec![vec![0.0], vec![1.0]], vec![-0.5, 1.5]).is_err());
        assert!(DistributionSpec::discrete(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn marginal_moments() {
        let e = Marginal::standardized_exponential();
        assert!((e.mean()).abs() < 1e-15);
        assert!((e.variance() - 1.0).abs() < 1e-15);
        assert!((e.moment(3) - 2.0).abs() < 1e-12);
        assert!((e.moment(4) - 9.0).abs() < 1e-12);
        let u = Marginal::uniform_pm().standardized().unwrap();
        assert!((u.variance() - 1.0).abs() < 1e-14);
        assert!((u.moment(4) - 1.8).abs() < 1e-12);
    }
}
