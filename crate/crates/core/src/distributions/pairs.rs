//! Joint law of `(X, D)` with `D = X' - X` for an independent copy `X'`.
//!
//! Finite-atom laws are enumerated exactly over atom pairs; other laws use a
//! seeded sample of independent pairs with weight `1/m`. Either way the table
//! is sorted by `‖D‖²`, so truncated functionals are prefix or suffix sums.

use super::{sample, DistributionSpec};
use crate::error::{Error, Result};
use crate::Estimate;
use nalgebra::DMatrix;

pub const DEFAULT_MC_PAIRS: usize = 1_000_000;
const MAX_EXACT_PAIRS: usize = 4_000_000;

/// Which side of a squared-norm threshold an indicator keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `‖D‖² ≥ t`
    Above,
    /// `‖D‖² < t` (the complement of `Above`)
    Below,
}

/// Matrix-valued estimate; `std_error` is the largest entrywise standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate {
    pub value: DMatrix<f64>,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PairTable {
    dim: usize,
    x: Vec<f64>,
    diff: Vec<f64>,
    sq: Vec<f64>,
    weight: Vec<f64>,
    exact: bool,
}

impl PairTable {
    /// Exact table when the law has at most 2000 atoms, otherwise `mc_pairs`
    /// sampled pairs.
    pub fn build(spec: &DistributionSpec, mc_pairs: usize, seed: u64) -> Result<Self> {
        if let Some((atoms, weights)) = spec.finite_atoms() {
            if atoms.len() * atoms.len() <= MAX_EXACT_PAIRS {
                return Ok(Self::exact(spec.dim, &atoms, &weights));
            }
        }
        if mc_pairs == 0 {
            return Err(Error::invalid("mc_pairs", "must be >= 1"));
        }
        let draws = sample(spec, 2 * mc_pairs, seed)?;
        let d = spec.dim;
        let mut x = Vec::with_capacity(mc_pairs * d);
        let mut diff = Vec::with_capacity(mc_pairs * d);
        for i in 0..mc_pairs {
            let a = draws.row(2 * i);
            let b = draws.row(2 * i + 1);
            x.extend_from_slice(a);
            diff.extend(b.iter().zip(a).map(|(u, v)| u - v));
        }
        let w = 1.0 / mc_pairs as f64;
        Ok(Self::sorted(d, x, diff, vec![w; mc_pairs], false))
    }

    fn exact(dim: usize, atoms: &[Vec<f64>], weights: &[f64]) -> Self {
        let mut x = vec![];
        let mut diff = vec![];
        let mut weight = vec![];
        for (a, &wa) in atoms.iter().zip(weights) {
            for (b, &wb) in atoms.iter().zip(weights) {
                let w = wa * wb;
                if w == 0.0 {
                    continue;
                }
                x.extend_from_slice(a);
                diff.extend(b.iter().zip(a).map(|(u, v)| u - v));
                weight.push(w);
            }
        }
        Self::sorted(dim, x, diff, weight, true)
    }

    fn sorted(dim: usize, x: Vec<f64>, diff: Vec<f64>, weight: Vec<f64>, exact: bool) -> Self {
        let m = weight.len();
        let sq_raw: Vec<f64> = (0..m)
            .map(|i| diff[i * dim..(i + 1) * dim].iter().map(|v| v * v).sum())
            .collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| sq_raw[a].total_cmp(&sq_raw[b]));
        let mut xs = Vec::with_capacity(x.len());
        let mut ds = Vec::with_capacity(diff.len());
        let mut sq = Vec::with_capacity(m);
        let mut ws = Vec::with_capacity(m);
        for &i in &order {
            xs.extend_from_slice(&x[i * dim..(i + 1) * dim]);
            ds.extend_from_slice(&diff[i * dim..(i + 1) * dim]);
            sq.push(sq_raw[i]);
            ws.push(weight[i]);
        }
        Self {
            dim,
            x: xs,
            diff: ds,
            sq,
            weight: ws,
            exact,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diff(&self, i: usize) -> &[f64] {
        &self.diff[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sq(&self, i: usize) -> f64 {
        self.sq[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weight[i]
    }

    pub fn max_sq(&self) -> f64 {
        self.sq.last().copied().unwrap_or(0.0)
    }

    /// First index with `‖D‖² ≥ t`.
    pub fn first_at_least(&self, t: f64) -> usize {
        self.sq.partition_point(|&s| s < t)
    }

    /// First index with `‖D‖² > t`; entries before it satisfy `‖D‖² ≤ t`.
    pub fn first_above(&self, t: f64) -> usize {
        self.sq.partition_point(|&s| s <= t)
    }

    /// `E[f(X, D, ‖D‖²) 1{index in range}]`.
    pub fn expect(&self, range: std::ops::Range<usize>, f: impl Fn(&[f64], &[f64], f64) -> f64) -> Estimate {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in range {
            let v = f(self.x(i), self.diff(i), self.sq[i]);
            sum += self.weight[i] * v;
            sum_sq += self.weight[i] * v * v;
        }
        if self.exact {
            Estimate::exact(sum)
        } else {
            let m = self.len() as f64;
            let var = (sum_sq - sum * sum).max(0.0) * m / (m - 1.0).max(1.0);
            Estimate::stochastic(sum, (var / m).sqrt())
        }
    }

    /// `E[D D^T 1{‖D‖² ≤ beta_sq}]`.
    pub fn truncated_second_moment(&self, beta_sq: f64) -> MatrixEstimate {
        let d = self.dim;
        let end = self.first_above(beta_sq);
        let mut value = DMatrix::zeros(d, d);
        let mut sq_acc = DMatrix::<f64>::zeros(d, d);
        for i in 0..end {
            let w = self.weight[i];
            let v = self.diff(i);
            for a in 0..d {
                for b in 0..d {
                    let p = v[a] * v[b];
                    value[(a, b)] += w * p;
                    sq_acc[(a, b)] += w * p * p;
                }
            }
        }
        let std_error = if self.exact {
            None
        } else {
            let m = self.len() as f64;
            let worst = value
                .iter()
                .zip(sq_acc.iter())
                .map(|(mean, s2): (&f64, &f64)| ((s2 - mean * mean).max(0.0) / m).sqrt())
                .fold(0.0, f64::max);
            Some(worst)
        };
        MatrixEstimate { value, std_error }
    }
}

/// `E[(X' - X)(X' - X)^T 1{‖X' - X‖² ≤ beta_sq}] · scale²`.
pub fn difference_second_moment(spec: &DistributionSpec, beta_sq: f64, scale: f64) -> Result<MatrixEstimate> {
    if !(beta_sq > 0.0) {
        return Err(Error::invalid("beta_sq", "must be positive"));
    }
    if !(scale > 0.0) {
        return Err(Error::invalid("scale", "must be positive"));
    }
    let table = PairTable::build(spec, DEFAULT_MC_PAIRS, 0)?;
    let mut est = table.truncated_second_moment(beta_sq);
    let s2 = scale * scale;
    est.value *= s2;
    est.std_error = est.std_error.map(|e| e * s2);
    Ok(est)
}

/// `E[‖X' - X‖^q 1]`, with the indicator comparing `‖X' - X‖²` to
/// `threshold_sq` on the requested side (no indicator when `None`).
pub fn difference_abs_moment(spec: &DistributionSpec, q: f64, threshold_sq: Option<f64>, side: Side) -> Result<Estimate> {
    if !(q >= 0.0) {
        return Err(Error::invalid("q", "must be non-negative"));
    }
    let table = PairTable::build(spec, DEFAULT_MC_PAIRS, 0)?;
    Ok(abs_moment_on(&table, q, threshold_sq, side))
}

pub(crate) fn abs_moment_on(table: &PairTable, q: f64, threshold_sq: Option<f64>, side: Side) -> Estimate {
    let range = match (threshold_sq, side) {
        (None, _) => 0..table.len(),
        (Some(t), Side::Above) => table.first_at_least(t)..table.len(),
        (Some(t), Side::Below) => 0..table.first_at_least(t),
    };
    table.expect(range, |_, _, sq| sq.powf(0.5 * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rademacher_second_moment_examples() {
        let r1 = DistributionSpec::rademacher(1);
        let m = difference_second_moment(&r1, 4.0, 1.0).unwrap();
        assert!((m.value[(0, 0)] - 2.0).abs() < 1e-15);
        assert!(m.std_error.is_none());
        let m = difference_second_moment(&r1, 1.0, 1.0).unwrap();
        assert_eq!(m.value[(0, 0)], 0.0);

        let r2 = DistributionSpec::rademacher(2);
        let m = difference_second_moment(&r2, 4.0, 1.0).unwrap();
        assert!((m.value[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((m.value[(1, 1)] - 1.0).abs() < 1e-15);
        assert!(m.value[(0, 1)].abs() < 1e-15);

        let m = difference_second_moment(&r1, 4.0, 0.5).unwrap();
        assert!((m.value[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn abs_moment_examples() {
        let r1 = DistributionSpec::rademacher(1);
        let v = difference_abs_moment(&r1, 2.0, None, Side::Above).unwrap();
        assert!((v.value - 2.0).abs() < 1e-15);
        let v = difference_abs_moment(&r1, 4.0, Some(5.0), Side::Above).unwrap();
        assert_eq!(v.value, 0.0);

        let e = DistributionSpec::standardized_exponential(1);
        let v = difference_abs_moment(&e, 2.0, None, Side::Above).unwrap();
        assert!(v.std_error.is_some());
        assert!((v.value - 2.0).abs() < 4.0 * v.se(), "{v:?}");
    }

    #[test]
    fn continuous_pairs_are_reproducible() {
        let e = DistributionSpec::standardized_exponential(2);
        let a = PairTable::build(&e, 10_000, 3).unwrap();
        let b = PairTable::build(&e, 10_000, 3).unwrap();
        assert_eq!(a.sq, b.sq);
        assert!(!a.is_exact());
    }

    proptest! {
        #[test]
        fn sides_partition_the_total(t in 0.0f64..12.0, q in 0.0f64..6.0) {
            let spec = DistributionSpec::discrete(
                vec![vec![-1.0, 0.5], vec![0.0, 2.0], vec![1.5, -1.0], vec![2.0, 2.0]],
                vec![0.1, 0.2, 0.3, 0.4],
            ).unwrap();
            let table = PairTable::build(&spec, 1, 0).unwrap();
            let all = abs_moment_on(&table, q, None, Side::Above).value;
            let above = abs_moment_on(&table, q, Some(t), Side::Above).value;
            let below = abs_moment_on(&table, q, Some(t), Side::Below).value;
            prop_assert!((all - above - below).abs() < 1e-12);
        }
    }
}
