//! Dense tensors on `(R^d)^{⊗k}` with Hilbert–Schmidt geometry, and the
//! multidimensional Hermite tensors `H_k(x) = e^{‖x‖²/2} ∇^k e^{-‖x‖²/2}`.
//!
//! Storage is row-major over multi-indices `j ∈ {0..d}^k`, so the first index
//! varies slowest. This makes `contract` a plain matrix-vector product of the
//! `d × d^k` unfolding.

use crate::error::{Error, Result};
use crate::rng::{par_blocks, pnorm_from_moment, MeanVar};
use crate::Estimate;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 16;
pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    dim: usize,
    order: usize,
    data: Vec<f64>,
}

fn check_caps(dim: usize, order: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be positive"));
    }
    if dim > MAX_DIM || order > MAX_ORDER {
        return Err(Error::TensorTooLarge { dim, order });
    }
    Ok(())
}

impl Tensor {
    pub fn zeros(dim: usize, order: usize) -> Result<Self> {
        check_caps(dim, order)?;
        Ok(Self {
            dim,
            order,
            data: vec![0.0; dim.pow(order as u32)],
        })
    }

    pub fn from_vec(dim: usize, order: usize, data: Vec<f64>) -> Result<Self> {
        check_caps(dim, order)?;
        let expected = dim.pow(order as u32);
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} entries for dim {dim}, order {order}, got {}",
                data.len()
            )));
        }
        Ok(Self { dim, order, data })
    }

    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        Self::from_vec(dim, 0, vec![value])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order);
        index.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.flat_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let f = self.flat_index(index);
        self.data[f] = value;
    }

    /// Writes the multi-index of flat position `flat` into `out`.
    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.dim;
            flat /= self.dim;
        }
    }

    pub fn scaled(&self, factor: f64) -> Tensor {
        Tensor {
            dim: self.dim,
            order: self.order,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest deviation between an entry and any of its index permutations
    /// by adjacent transposition (enough to generate the symmetric group).
    pub fn symmetry_defect(&self) -> f64 {
        let mut idx = vec![0; self.order];
        let mut worst = 0.0f64;
        for flat in 0..self.data.len() {
            self.multi_index(flat, &mut idx);
            for a in 1..self.order {
                idx.swap(a - 1, a);
                let other = self.get(&idx);
                idx.swap(a - 1, a);
                worst = worst.max((self.data[flat] - other).abs());
            }
        }
        worst
    }
}

/// `x^{⊗k}`: entry `j` is `∏_i x_{j_i}`; order 0 is the scalar 1.
pub fn outer_power(x: &[f64], k: usize) -> Result<Tensor> {
    let d = x.len();
    check_caps(d, k)?;
    let mut data = vec![1.0];
    for _ in 0..k {
        let mut next = Vec::with_capacity(data.len() * d);
        for &v in &data {
            next.extend(x.iter().map(|&xi| v * xi));
        }
        data = next;
    }
    Tensor::from_vec(d, k, data)
}

fn same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.dim != b.dim || a.order != b.order {
        return Err(Error::ShapeMismatch(format!(
            "(dim {}, order {}) vs (dim {}, order {})",
            a.dim, a.order, b.dim, b.order
        )));
    }
    Ok(())
}

/// Hilbert–Schmidt scalar product.
pub fn hs_dot(a: &Tensor, b: &Tensor) -> Result<f64> {
    same_shape(a, b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

pub fn hs_norm(a: &Tensor) -> f64 {
    a.hs_norm()
}

/// `(M y)_i = Σ_j M_{i,j} y_j` for `M` of order `k+1` and `y` of order `k`.
pub fn contract(m: &Tensor, y: &Tensor) -> Result<Vec<f64>> {
    if m.dim != y.dim || m.order != y.order + 1 {
        return Err(Error::ShapeMismatch(format!(
            "cannot contract order {} (dim {}) with order {} (dim {})",
            m.order, m.dim, y.order, y.dim
        )));
    }
    Ok(contract_slice(m.as_slice(), y.as_slice(), m.dim))
}

fn contract_slice(m: &[f64], y: &[f64], dim: usize) -> Vec<f64> {
    let inner = y.len();
    (0..dim)
        .map(|i| {
            m[i * inner..(i + 1) * inner]
                .iter()
                .zip(y)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Monic probabilists' Hermite polynomials `He_0..=He_k` at `x`.
fn he_table(x: f64, k: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if k >= 1 {
        out[1] = x;
    }
    for m in 2..=k {
        out[m] = x * out[m - 1] - (m - 1) as f64 * out[m - 2];
    }
}

/// Fills `out` (length `d^k`) with `H_k(x)` using the coordinate-multiplicity
/// product formula. `scratch` must hold `d * (k + 1)` values.
fn hermite_into(x: &[f64], k: usize, scratch: &mut [f64], counts: &mut [usize], out: &mut [f64]) {
    let d = x.len();
    for (c, &xc) in x.iter().enumerate() {
        he_table(xc, k, &mut scratch[c * (k + 1)..(c + 1) * (k + 1)]);
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    for (flat, slot) in out.iter_mut().enumerate() {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut f = flat;
        for _ in 0..k {
            counts[f % d] += 1;
            f /= d;
        }
        let mut prod = sign;
        for (c, &m) in counts.iter().enumerate() {
            if m > 0 {
                prod *= scratch[c * (k + 1) + m];
            }
        }
        *slot = prod;
    }
}

/// `H_k(x)`, the `k`-th Hermite tensor, via
/// `(H_k(x))_j = (-1)^k ∏_c He_{m_c}(x_c)` where `m_c` counts occurrences of
/// coordinate `c` in `j`.
pub fn hermite_tensor(x: &[f64], k: usize) -> Result<Tensor> {
    let d = x.len();
    check_caps(d, k)?;
    let mut out = vec![0.0; d.pow(k as u32)];
    let mut scratch = vec![0.0; d * (k + 1)];
    let mut counts = vec![0; d];
    hermite_into(x, k, &mut scratch, &mut counts, &mut out);
    Tensor::from_vec(d, k, out)
}

/// Result of [`contracted_hermite_pnorm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteNorm {
    /// Monte Carlo estimate of `‖M H_k(Z)‖_p`.
    pub monte_carlo: Estimate,
    /// Closed form, available when `p = 2`.
    pub exact: Option<f64>,
}

impl HermiteNorm {
    /// The closed form when available, otherwise the Monte Carlo value.
    pub fn best(&self) -> Estimate {
        match self.exact {
            Some(v) => Estimate::exact(v),
            None => self.monte_carlo,
        }
    }
}

/// `E‖M H_k(Z)‖²` in closed form, using
/// `E[H_k(Z)_j H_k(Z)_l] = #{σ ∈ S_k : l = σ(j)}` (Wick).
///
/// Returns `None` when the permutation sum would be too expensive.
pub fn contracted_hermite_second_moment(m: &Tensor) -> Option<f64> {
    let k = m.order.checked_sub(1)?;
    let d = m.dim;
    let perms = permutations(k);
    if (m.data.len() as f64) * (perms.len() as f64) > 5e7 {
        return None;
    }
    let inner = d.pow(k as u32);
    let mut j = vec![0usize; k];
    let mut permuted = vec![0usize; k];
    let mut total = 0.0;
    for flat in 0..inner {
        let mut f = flat;
        for slot in j.iter_mut().rev() {
            *slot = f % d;
            f /= d;
        }
        for perm in &perms {
            for (dst, &src) in permuted.iter_mut().zip(perm) {
                *dst = j[src];
            }
            let other = permuted.iter().fold(0, |acc, &i| acc * d + i);
            for i in 0..d {
                total += m.data[i * inner + flat] * m.data[i * inner + other];
            }
        }
    }
    Some(total)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur: Vec<usize> = (0..k).collect();
    fn heap(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..n - 1 {
            heap(n - 1, cur, out);
            if n % 2 == 0 {
                cur.swap(i, n - 1);
            } else {
                cur.swap(0, n - 1);
            }
        }
        heap(n - 1, cur, out);
    }
    heap(k, &mut cur, &mut out);
    out
}

/// `‖M H_k(Z)‖_p = E[‖M H_k(Z)‖^p]^{1/p}` for standard Gaussian `Z`.
///
/// Monte Carlo over `n_mc` draws in seeded blocks; for `p = 2` the closed
/// form is attached as well.
pub fn contracted_hermite_pnorm(m: &Tensor, k: usize, p: f64, n_mc: usize, seed: u64) -> Result<HermiteNorm> {
    if m.order != k + 1 {
        return Err(Error::ShapeMismatch(format!(
            "M has order {}, expected {}",
            m.order,
            k + 1
        )));
    }
    if !(p >= 2.0) {
        return Err(Error::invalid("p", "must be >= 2"));
    }
    if n_mc == 0 {
        return Err(Error::invalid("n_mc", "must be >= 1"));
    }
    let d = m.dim;
    let exact = if p == 2.0 {
        contracted_hermite_second_moment(m).map(|v| v.max(0.0).sqrt())
    } else {
        None
    };
    if m.data.iter().all(|&v| v == 0.0) {
        return Ok(HermiteNorm {
            monte_carlo: Estimate::stochastic(0.0, 0.0),
            exact,
        });
    }
    let parts = par_blocks(n_mc, seed, |rng, count| {
        let mut z = vec![0.0; d];
        let mut h = vec![0.0; d.pow(k as u32)];
        let mut scratch = vec![0.0; d * (k + 1)];
        let mut counts = vec![0; d];
        let mut acc = MeanVar::default();
        for _ in 0..count {
            z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
            hermite_into(&z, k, &mut scratch, &mut counts, &mut h);
            let v = contract_slice(&m.data, &h, d);
            let norm_sq: f64 = v.iter().map(|x| x * x).sum();
            acc.push(norm_sq.powf(0.5 * p));
        }
        acc
    });
    let acc = MeanVar::merged(&parts);
    if !acc.mean.is_finite() {
        return Err(Error::NonFinite("contracted Hermite p-norm accumulation".into()));
    }
    Ok(HermiteNorm {
        monte_carlo: pnorm_from_moment(&acc, p),
        exact,
    })
}
