use crate::distributions::{moment_tensor, DistributionSpec, PairTable, DEFAULT_MC_PAIRS};
use crate::error::{Error, Result};
use crate::multilinear::{contracted_hermite_pnorm, Tensor};
use crate::Estimate;
use nalgebra::{DMatrix, SymmetricEigen};
use std::sync::Arc;

/// Sampling controls for the quantities that are not available in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermsOptions {
    /// Pairs `(X, X')` drawn when the law is not finite-atom.
    pub mc_pairs: usize,
    pub pair_seed: u64,
    /// Gaussian draws for `‖M_3 H_2(Z)‖_p` when `p ≠ 2`.
    pub hermite_mc: usize,
    pub hermite_seed: u64,
}

impl Default for TermsOptions {
    fn default() -> Self {
        Self {
            mc_pairs: DEFAULT_MC_PAIRS,
            pair_seed: 0,
            hermite_mc: 1_000_000,
            hermite_seed: 0,
        }
    }
}

/// Everything about one source law `X` that the bound needs, on the `X`
/// scale. Summands `W = scale · X` reuse it for any `n`.
#[derive(Debug)]
pub struct SourceSummary {
    dim: usize,
    table: PairTable,
    second_moment: DMatrix<f64>,
    m3: Tensor,
    m4: Tensor,
    /// `Σ_{k ≥ i} w_k ‖D_k‖² x_k x_k^T`, row-major per index, when small enough.
    ldd_suffix: Option<Vec<f64>>,
}

const MAX_SUFFIX_FLOATS: usize = 8_000_000;

impl SourceSummary {
    pub fn new(spec: &DistributionSpec, options: &TermsOptions) -> Result<Self> {
        let table = PairTable::build(spec, options.mc_pairs, options.pair_seed)?;
        let d = spec.dim;
        let ldd_suffix = if table.len().saturating_mul(d * d) <= MAX_SUFFIX_FLOATS {
            let mut s = vec![0.0; (table.len() + 1) * d * d];
            for i in (0..table.len()).rev() {
                let x = table.x(i);
                let w = table.weight(i) * table.sq(i);
                let (head, tail) = s.split_at_mut((i + 1) * d * d);
                let dst = &mut head[i * d * d..];
                for a in 0..d {
                    for b in 0..d {
                        dst[a * d + b] = tail[a * d + b] + w * x[a] * x[b];
                    }
                }
            }
            Some(s)
        } else {
            None
        };
        Ok(Self {
            dim: d,
            second_moment: spec.second_moment(),
            m3: moment_tensor(spec, 3)?,
            m4: moment_tensor(spec, 4)?,
            table,
            ldd_suffix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn table(&self) -> &PairTable {
        &self.table
    }

    /// `E[‖D‖^q 1{‖D‖² ≥ t}]` on the `X` scale.
    fn tail(&self, q: f64, t: f64) -> f64 {
        let start = self.table.first_at_least(t);
        self.table.expect(start..self.table.len(), |_, _, sq| sq.powf(0.5 * q)).value
    }

    /// `‖E[X X^T ‖D‖² 1{‖D‖² ≥ t}]‖_HS` on the `X` scale.
    fn ldd_tail(&self, t: f64) -> f64 {
        let d = self.dim;
        let start = self.table.first_at_least(t);
        match &self.ldd_suffix {
            Some(s) => s[start * d * d..(start + 1) * d * d].iter().map(|v| v * v).sum::<f64>().sqrt(),
            None => {
                let mut acc = vec![0.0; d * d];
                for i in start..self.table.len() {
                    let x = self.table.x(i);
                    let w = self.table.weight(i) * self.table.sq(i);
                    for a in 0..d {
                        for b in 0..d {
                            acc[a * d + b] += w * x[a] * x[b];
                        }
                    }
                }
                acc.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        }
    }
}

/// A block of `multiplicity` independent summands distributed as `scale · X`.
#[derive(Debug, Clone)]
pub struct Summand {
    pub source: Arc<SourceSummary>,
    pub multiplicity: usize,
    pub scale: f64,
}

/// The functionals of the summands `W_i` entering the bound, for fixed `p`
/// and truncation radius `β` (on the `W` scale).
#[derive(Debug, Clone)]
pub struct CltTerms {
    pub d: usize,
    /// Total number of summands.
    pub n: usize,
    pub p: f64,
    /// `β` with `1{‖D_i‖ ≤ β}`.
    pub beta_w: f64,
    pub m3: Tensor,
    pub m4: Tensor,
    pub norm_m3: f64,
    pub norm_m4: f64,
    /// `‖M_3 H_2(Z)‖_p`.
    pub m3_hermite: Estimate,
    pub l_p: f64,
    pub lprime_4: f64,
    pub lprime_p2: f64,
    /// `Λ_β = (Σ E[D_{i,β}^{⊗2}])^{-1}`.
    pub lambda: DMatrix<f64>,
    pub beta_2: f64,
    pub beta_p: f64,
    summands: Vec<Summand>,
}

// p = 2 has a closed form for every supported dimension
fn hermite_draws(p: f64, options: &TermsOptions) -> usize {
    if p == 2.0 {
        1
    } else {
        options.hermite_mc.max(1)
    }
}

fn add_scaled(acc: &mut Tensor, t: &Tensor, factor: f64) {
    acc.as_mut_slice().iter_mut().zip(t.as_slice()).for_each(|(a, v)| *a += factor * v);
}

impl CltTerms {
    /// Terms for independent summands given in blocks. `beta_w` truncates
    /// `‖D_i‖ ≤ β` on the `W` scale.
    pub fn from_summands(summands: Vec<Summand>, p: f64, beta_w: f64, options: &TermsOptions) -> Result<Self> {
        if summands.is_empty() {
            return Err(Error::invalid("summands", "need at least one summand"));
        }
        if !(p >= 2.0) {
            return Err(Error::invalid("p", "must be >= 2"));
        }
        if !(beta_w > 0.0) {
            return Err(Error::invalid("beta_sq", "must be positive"));
        }
        let d = summands[0].source.dim;
        if summands.iter().any(|s| s.source.dim != d) {
            return Err(Error::ShapeMismatch("summands live in different dimensions".into()));
        }
        if summands.iter().any(|s| !(s.scale > 0.0) || s.multiplicity == 0) {
            return Err(Error::invalid("scale", "summand scales and multiplicities must be positive"));
        }
        let n: usize = summands.iter().map(|s| s.multiplicity).sum();
        let mut m3 = Tensor::zeros(d, 3)?;
        let mut m4 = Tensor::zeros(d, 4)?;
        let mut l_p = 0.0;
        let mut lprime_4 = 0.0;
        let mut lprime_p2 = 0.0;
        let mut lambda_inv = DMatrix::<f64>::zeros(d, d);
        for s in &summands {
            let k = s.multiplicity as f64;
            let src = &s.source;
            add_scaled(&mut m3, &src.m3, k * s.scale.powi(3));
            add_scaled(&mut m4, &src.m4, k * s.scale.powi(4));
            l_p += k * s.scale.powf(p) * src.tail(p, 0.0);
            // ‖E[W^{⊗2}]‖ with E[W^{⊗2}] = scale² E[X X^T]
            let cov_norm = s.scale * s.scale * src.second_moment.norm();
            lprime_4 += k * cov_norm.powi(2) * s.scale.powi(4) * src.tail(4.0, 0.0);
            lprime_p2 += k * cov_norm.powf(0.5 * (p + 2.0)) * s.scale.powf(p + 2.0) * src.tail(p + 2.0, 0.0);
            let trunc = src.table.truncated_second_moment((beta_w / s.scale).powi(2));
            lambda_inv += k * s.scale * s.scale * trunc.value;
        }
        let lambda_inv = 0.5 * (&lambda_inv + lambda_inv.transpose());
        let eig = SymmetricEigen::new(lambda_inv.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        if !(min > 1e-12 * max.max(f64::MIN_POSITIVE)) {
            return Err(Error::CorollaryHypothesisViolated { min_eigenvalue: min });
        }
        let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
        let lambda = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
        let mut beta_2 = 0.0;
        let mut beta_p = 0.0;
        let mut buf = vec![0.0; d];
        for s in &summands {
            let k = s.multiplicity as f64;
            let table = &s.source.table;
            let end = table.first_above((beta_w / s.scale).powi(2));
            let scaled = &lambda * s.scale;
            let norm_at = |i: usize, buf: &mut Vec<f64>| -> f64 {
                let v = table.diff(i);
                for a in 0..d {
                    buf[a] = (0..d).map(|b| scaled[(a, b)] * v[b]).sum();
                }
                buf.iter().map(|x| x * x).sum::<f64>().sqrt()
            };
            let (mut b2, mut bp) = (0.0, 0.0);
            for i in 0..end {
                let r = norm_at(i, &mut buf);
                b2 += table.weight(i) * r * r;
                bp += table.weight(i) * r.powf(p);
            }
            beta_2 += k * b2;
            beta_p += k * bp;
        }
        let m3_hermite = if summands.len() == 1 {
            // ‖M_3 H_2(Z)‖_p is linear in M_3: scale the X-scale value so that
            // the identity across n holds to rounding
            let s = &summands[0];
            let h = contracted_hermite_pnorm(&s.source.m3, 2, p, hermite_draws(p, options), options.hermite_seed)?.best();
            let f = s.multiplicity as f64 * s.scale.powi(3);
            Estimate {
                value: f * h.value,
                std_error: h.std_error.map(|e| f * e),
            }
        } else {
            contracted_hermite_pnorm(&m3, 2, p, hermite_draws(p, options), options.hermite_seed)?.best()
        };
        let terms = Self {
            d,
            n,
            p,
            beta_w,
            norm_m3: m3.hs_norm(),
            norm_m4: m4.hs_norm(),
            m3,
            m4,
            m3_hermite,
            l_p,
            lprime_4,
            lprime_p2,
            lambda,
            beta_2,
            beta_p,
            summands,
        };
        let scalars = [terms.l_p, terms.lprime_4, terms.lprime_p2, terms.beta_2, terms.beta_p, terms.m3_hermite.value];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("bound terms".into()));
        }
        Ok(terms)
    }

    /// `n` i.i.d. summands `W_i = X_i/√n`, truncated at `‖X' - X‖² ≤ beta_sq_x`.
    pub fn iid(source: Arc<SourceSummary>, n: usize, p: f64, beta_sq_x: f64, options: &TermsOptions) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        if !(beta_sq_x > 0.0) {
            return Err(Error::invalid("beta_sq", "must be positive"));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let beta_w = beta_sq_x.sqrt() * scale;
        Self::from_summands(vec![Summand { source, multiplicity: n, scale }], p, beta_w, options)
    }

    /// `L_q(t) = Σ E[‖D_i‖^q 1{‖D_i‖² ≥ t}]`.
    pub fn l_tail(&self, q: f64, t: f64) -> f64 {
        self.summands
            .iter()
            .map(|s| s.multiplicity as f64 * s.scale.powf(q) * s.source.tail(q, t / (s.scale * s.scale)))
            .sum()
    }

    /// `L''_4(t) = Σ ‖E[W_i^{⊗2} ‖D_i‖² 1{‖D_i‖² ≥ t}]‖`.
    pub fn ldd4_tail(&self, t: f64) -> f64 {
        self.summands
            .iter()
            .map(|s| s.multiplicity as f64 * s.scale.powi(4) * s.source.ldd_tail(t / (s.scale * s.scale)))
            .sum()
    }

    pub fn l_4(&self, t: f64) -> f64 {
        self.l_tail(4.0, t)
    }

    pub fn l_p2(&self, t: f64) -> f64 {
        self.l_tail(self.p + 2.0, t)
    }

    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }
}

fn is_standardized(spec: &DistributionSpec) -> bool {
    let d = spec.dim;
    spec.mean().amax() < 1e-9 && (spec.covariance() - DMatrix::identity(d, d)).amax() < 1e-9
}

/// Terms for `n` i.i.d. copies of a standardised law under `W_i = X_i/√n`.
pub fn compute_terms(spec: &DistributionSpec, n: usize, p: f64, beta_sq_x: f64) -> Result<CltTerms> {
    compute_terms_with(spec, n, p, beta_sq_x, &TermsOptions::default())
}

pub fn compute_terms_with(spec: &DistributionSpec, n: usize, p: f64, beta_sq_x: f64, options: &TermsOptions) -> Result<CltTerms> {
    if !is_standardized(spec) {
        return Err(Error::invalid("spec", "law must be centred with identity covariance; standardise it first"));
    }
    let source = Arc::new(SourceSummary::new(spec, options)?);
    CltTerms::iid(source, n, p, beta_sq_x, options)
}
