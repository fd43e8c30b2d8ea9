//! Ornstein–Uhlenbeck interpolation `F_t = e^{-t} W + √(1 - e^{-2t}) Z`.
//!
//! For a finite-atom law of `W` the density of `F_t` is a Gaussian mixture, so
//! the score `ρ_t = ∇ log h_t(F_t)` of `F_t` relative to `γ` has two closed
//! forms: the gradient of the mixture log-density plus `x`, and the
//! conditional-expectation form `e^{-t} E[W - Z/√Δ(t) | F_t]`. Both are
//! implemented independently so that their agreement is a real check.

use crate::distributions::{sample, sample_sum, BaseLaw, Discrete1D, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, gauss_hermite, gauss_legendre, Rule};
use crate::rng::{derive_seed, par_blocks, pnorm_from_moment, MeanVar};
use crate::special::{gaussian_norm_p, normal_cdf, normal_pdf};
use crate::distributions::Points;
use crate::Estimate;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Distance (in noise standard deviations) beyond which the posterior is
/// treated as numerically degenerate.
const FAR_SIGMAS: f64 = 40.0;
/// Default atom count when discretising a continuous law.
pub const DEFAULT_GRID_ATOMS: usize = 512;

/// Time-dependent constants of the interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUPoint {
    pub t: f64,
    /// `Δ(t) = e^{2t} - 1`
    pub delta: f64,
    /// `e^{-t}`
    pub shrink: f64,
    /// `1 - e^{-2t}`
    pub noise_var: f64,
}

impl OUPoint {
    pub fn new(t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::invalid("t", "must be finite and non-negative"));
        }
        Ok(Self {
            t,
            delta: (2.0 * t).exp_m1(),
            shrink: (-t).exp(),
            noise_var: -(-2.0 * t).exp_m1(),
        })
    }

    fn positive(t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::invalid("t", "must be positive"));
        }
        Self::new(t)
    }
}

/// Finite-atom law of `W` (atoms in `R^d` with probability weights).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicLaw {
    dim: usize,
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl AtomicLaw {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let spec = DistributionSpec::discrete(atoms, weights)?;
        Self::from_spec(&spec)
    }

    /// Exact atoms of a finite-atom spec.
    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        let (atoms, weights) = spec.finite_atoms().ok_or_else(|| {
            Error::IncompatibleRoute {
                route: "score".into(),
                reason: "law is not finite-atom; discretise it first".into(),
            }
        })?;
        let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        Ok(Self {
            dim: spec.dim,
            atoms: keep.iter().flat_map(|&i| atoms[i].iter().copied()).collect(),
            weights: keep.iter().map(|&i| weights[i]).collect(),
        })
    }

    pub fn from_discrete_1d(law: &Discrete1D) -> Self {
        let keep: Vec<usize> = (0..law.len()).filter(|&i| law.weights()[i] > 0.0).collect();
        Self {
            dim: 1,
            atoms: keep.iter().map(|&i| law.atoms()[i]).collect(),
            weights: keep.iter().map(|&i| law.weights()[i]).collect(),
        }
    }

    pub fn point_mass(location: Vec<f64>) -> Result<Self> {
        Self::from_spec(&DistributionSpec::point_mass(location)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        &self.atoms[j * self.dim..(j + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `‖W‖_p = E[‖W‖^p]^{1/p}`.
    pub fn norm_p(&self, p: f64) -> f64 {
        (0..self.len())
            .map(|j| self.weights[j] * norm(self.atom(j)).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Score value with a flag raised when `x` lies more than 40 noise standard
/// deviations from every atom image; the value is then the nearest-atom
/// asymptote.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub value: Vec<f64>,
    pub far_from_atoms: bool,
}

fn check_point(law: &AtomicLaw, x: &[f64]) -> Result<()> {
    if x.len() != law.dim {
        return Err(Error::ShapeMismatch(format!("point of length {} for a law in dim {}", x.len(), law.dim)));
    }
    Ok(())
}

/// Posterior weights `π_j(x) ∝ w_j φ_{σ²}(x - e^{-t} a_j)` by log-sum-exp, and
/// whether every atom image is far from `x`.
fn posterior(law: &AtomicLaw, ou: &OUPoint, x: &[f64], out: &mut Vec<f64>) -> bool {
    out.clear();
    let mut min_sq = f64::INFINITY;
    for j in 0..law.len() {
        let sq: f64 = law.atom(j).iter().zip(x).map(|(a, xi)| (xi - ou.shrink * a).powi(2)).sum();
        min_sq = min_sq.min(sq);
        out.push(law.weights[j].ln() - 0.5 * sq / ou.noise_var);
    }
    let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in out.iter_mut() {
        *v = (*v - top).exp();
        total += *v;
    }
    out.iter_mut().for_each(|v| *v /= total);
    min_sq > (FAR_SIGMAS * FAR_SIGMAS) * ou.noise_var
}

/// `ρ_t(x) = ∇ log f_t(x) + x`, where `f_t` is the mixture density of `F_t`.
pub fn score_mixture(law: &AtomicLaw, t: f64, x: &[f64]) -> Result<Score> {
    check_point(law, x)?;
    let ou = OUPoint::positive(t)?;
    let mut post = Vec::with_capacity(law.len());
    let far = posterior(law, &ou, x, &mut post);
    // ∇ log f_t(x) + x = Σ_j π_j (x σ² - (x - e^{-t} a_j)) / σ²
    //                  = Σ_j π_j (e^{-t} a_j - e^{-2t} x) / σ²,
    // written without the cancellation of the first form when σ² ≈ 1.
    let damp = ou.shrink * ou.shrink;
    let mut value = vec![0.0; law.dim];
    for (j, pj) in post.iter().enumerate() {
        for (v, (xi, a)) in value.iter_mut().zip(x.iter().zip(law.atom(j))) {
            *v += pj * (ou.shrink * a - damp * xi);
        }
    }
    value.iter_mut().for_each(|v| *v /= ou.noise_var);
    Ok(Score { value, far_from_atoms: far })
}

/// `ρ_t(x) = e^{-t}(E[W | F_t = x] - E[Z | F_t = x]/√Δ(t))` with
/// `E[Z | F_t = x] = (x - e^{-t} E[W | F_t = x]) / √(1 - e^{-2t})`.
pub fn score_via_conditional(law: &AtomicLaw, t: f64, x: &[f64]) -> Result<Score> {
    check_point(law, x)?;
    let ou = OUPoint::positive(t)?;
    let mut post = Vec::with_capacity(law.len());
    let far = posterior(law, &ou, x, &mut post);
    let mut mean_w = vec![0.0; law.dim];
    for (j, pj) in post.iter().enumerate() {
        for (m, a) in mean_w.iter_mut().zip(law.atom(j)) {
            *m += pj * a;
        }
    }
    let sigma = ou.noise_var.sqrt();
    let root_delta = ou.delta.sqrt();
    let value = mean_w
        .iter()
        .zip(x)
        .map(|(w, xi)| {
            let mean_z = (xi - ou.shrink * w) / sigma;
            ou.shrink * (w - mean_z / root_delta)
        })
        .collect();
    Ok(Score { value, far_from_atoms: far })
}

/// `m` draws of `F_t = e^{-t} S_n + √(1 - e^{-2t}) Z`.
///
/// `S_n` uses `derive_seed(seed, 0)` and `Z` uses `derive_seed(seed, 1)`, so
/// the `S_n` component matches `sample_sum` at that seed.
pub fn ft_sample(spec: &DistributionSpec, n: usize, t: f64, m: usize, seed: u64) -> Result<Points> {
    let ou = OUPoint::positive(t)?;
    let s = sample_sum(spec, n, m, derive_seed(seed, 0))?;
    let z = sample(&DistributionSpec::standard_gaussian(spec.dim)?, m, derive_seed(seed, 1))?;
    let sigma = ou.noise_var.sqrt();
    let data = s.data.iter().zip(&z.data).map(|(w, g)| ou.shrink * w + sigma * g).collect();
    Points::new(spec.dim, data)
}

fn pick_atom(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

/// Monte Carlo estimate of `‖ρ_t(F_t)‖_p` with `F_t` drawn from the mixture.
pub fn score_pnorm(law: &AtomicLaw, t: f64, p: f64, m: usize, seed: u64) -> Result<Estimate> {
    let ou = OUPoint::positive(t)?;
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    let cumulative: Vec<f64> = law
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let sigma = ou.noise_var.sqrt();
    let d = law.dim;
    let parts = par_blocks(m, seed, |rng, count| {
        let mut acc = MeanVar::default();
        let mut x = vec![0.0; d];
        for _ in 0..count {
            let j = pick_atom(&cumulative, rng.random::<f64>() * cumulative[cumulative.len() - 1]);
            for (xi, a) in x.iter_mut().zip(law.atom(j)) {
                let z: f64 = rng.sample(StandardNormal);
                *xi = ou.shrink * a + sigma * z;
            }
            let r = score_mixture(law, t, &x).map(|s| norm(&s.value).powf(p)).unwrap_or(f64::NAN);
            acc.push(r);
        }
        acc
    });
    let acc = MeanVar::merged(&parts);
    if !acc.mean.is_finite() {
        return Err(Error::NonFinite("score moment".into()));
    }
    Ok(pnorm_from_moment(&acc, p))
}

/// Deterministic `‖ρ_t(F_t)‖_p` with a quadrature error estimate.
///
/// In one dimension `E|ρ_t(F_t)|^p = ∫ |ρ_t(x)|^p f_t(x) dx` is integrated
/// adaptively over windows of ±14σ around the atom images. In higher
/// dimensions each mixture component is integrated by a tensor Gauss–Hermite
/// rule, and the error is estimated by comparing two rule orders.
pub fn score_pnorm_quadrature(law: &AtomicLaw, t: f64, p: f64) -> Result<Estimate> {
    let ou = OUPoint::positive(t)?;
    let (moment, moment_err) = if law.dim == 1 {
        moment_1d(law, &ou, p)?
    } else {
        let (hi, lo) = hermite_orders(law.dim);
        let a = moment_hermite(law, &ou, p, &gauss_hermite(hi))?;
        let b = moment_hermite(law, &ou, p, &gauss_hermite(lo))?;
        (a, (a - b).abs())
    };
    if !moment.is_finite() {
        return Err(Error::NonFinite("score moment".into()));
    }
    let value = moment.max(0.0).powf(1.0 / p);
    let err = if value > 0.0 {
        moment_err / (p * value.powf(p - 1.0))
    } else {
        moment_err.powf(1.0 / p)
    };
    Ok(Estimate::stochastic(value, err))
}

fn hermite_orders(d: usize) -> (usize, usize) {
    match d {
        2 => (40, 30),
        3 => (20, 15),
        4 => (14, 11),
        _ => (8, 6),
    }
}

fn moment_1d(law: &AtomicLaw, ou: &OUPoint, p: f64) -> Result<(f64, f64)> {
    let sigma = ou.noise_var.sqrt();
    let half = 14.0 * sigma;
    let mut images: Vec<f64> = law.atoms.iter().map(|a| ou.shrink * a).collect();
    images.sort_by(f64::total_cmp);
    // merged windows, split at atom images when there are not too many
    let mut cuts: Vec<(f64, f64)> = vec![];
    for &c in &images {
        match cuts.last_mut() {
            Some(last) if c - half <= last.1 => last.1 = c + half,
            _ => cuts.push((c - half, c + half)),
        }
    }
    let mut panels = vec![];
    for (lo, hi) in cuts {
        let mut pts = vec![lo];
        if images.len() <= 512 {
            pts.extend(images.iter().copied().filter(|&c| c > lo && c < hi));
        }
        pts.push(hi);
        pts.dedup();
        panels.extend(pts.windows(2).map(|w| (w[0], w[1])));
    }
    let mut post = Vec::with_capacity(law.len());
    let mut f = |x: f64| -> f64 {
        posterior(law, ou, &[x], &mut post);
        let mut mean_image = 0.0;
        for (j, pj) in post.iter().enumerate() {
            mean_image += pj * ou.shrink * law.atoms[j];
        }
        let rho = (mean_image - ou.shrink * ou.shrink * x) / ou.noise_var;
        let density: f64 = law
            .atoms
            .iter()
            .zip(&law.weights)
            .map(|(a, w)| w * normal_pdf((x - ou.shrink * a) / sigma) / sigma)
            .sum();
        rho.abs().powf(p) * density
    };
    let rule = gauss_legendre(24);
    let rough: f64 = panels.iter().map(|&(a, b)| rule.integrate(a, b, &mut f)).sum();
    // absolute floor at the round-off of ρ_t: posterior weights carry
    // absolute error ~1e-16 against atom images of size shrink·|a|, and the
    // linear term is of size shrink²·|x|; carried through |·|^p
    let amax = law.atoms.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let reach = ou.shrink * amax + half;
    let roundoff = 1e-14 * ou.shrink * (amax + ou.shrink * reach) / ou.noise_var;
    let floor = p * roundoff * rough.abs().powf((p - 1.0) / p) + roundoff.powf(p);
    let tol = (1e-12 * rough.abs()).max(floor) / panels.len() as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    for &(a, b) in &panels {
        let q = adaptive(&rule, a, b, tol, &mut f);
        total += q.value;
        err += q.error;
    }
    Ok((total, err))
}

fn moment_hermite(law: &AtomicLaw, ou: &OUPoint, p: f64, rule: &Rule) -> Result<f64> {
    let d = law.dim;
    let k = rule.nodes.len();
    let nodes = k.pow(d as u32);
    let sigma = ou.noise_var.sqrt();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    for j in 0..law.len() {
        let a = law.atom(j);
        let mut inner = 0.0;
        for flat in 0..nodes {
            let mut f = flat;
            for slot in idx.iter_mut().rev() {
                *slot = f % k;
                f /= k;
            }
            let mut w = 1.0;
            for c in 0..d {
                x[c] = ou.shrink * a[c] + sigma * rule.nodes[idx[c]];
                w *= rule.weights[idx[c]];
            }
            if w < 1e-300 {
                continue;
            }
            inner += w * norm(&score_mixture(law, ou.t, &x)?.value).powf(p);
        }
        total += law.weights[j] * inner;
    }
    Ok(total)
}

/// How `‖ρ_t‖_p` is evaluated inside [`score_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerMethod {
    Quadrature,
    MonteCarlo { m: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreIntegralConfig {
    pub t_min_split: f64,
    pub t_max: f64,
    /// Gauss–Legendre order of the outer panels.
    pub order: usize,
    /// Tolerance on the total error budget.
    pub tolerance: f64,
    pub inner: InnerMethod,
}

impl Default for ScoreIntegralConfig {
    fn default() -> Self {
        Self {
            t_min_split: 0.1,
            t_max: 20.0,
            order: 16,
            tolerance: 1e-6,
            inner: InnerMethod::Quadrature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreIntegral {
    /// `∫_0^{T_max} ‖ρ_t‖_p dt`.
    pub value: f64,
    /// Outer quadrature error estimate.
    pub quadrature_error: f64,
    /// Propagated error of the inner `‖ρ_t‖_p` evaluations (three standard
    /// errors for Monte Carlo).
    pub inner_error: f64,
    /// Bound on `∫_{T_max}^∞ ‖ρ_t‖_p dt` from the trivial bound.
    pub tail_bound: f64,
    /// `quadrature_error + inner_error + tail_bound`.
    pub error_budget: f64,
    /// Raised when the budget exceeds the requested tolerance.
    pub flagged: bool,
}

impl ScoreIntegral {
    /// Upper end of the enclosure of `∫_0^∞ ‖ρ_t‖_p dt`.
    pub fn upper(&self) -> f64 {
        self.value + self.error_budget
    }
}

/// `∫_T^∞ e^{-t}(‖W‖_p + ‖Z‖_p/√Δ(t)) dt = ‖W‖_p e^{-T} + ‖Z‖_p (1 - √(1 - e^{-2T}))`.
pub fn trivial_tail(norm_w: f64, norm_z: f64, t_max: f64) -> f64 {
    let e = (-t_max).exp();
    norm_w * e + norm_z * (1.0 - (1.0 - e * e).sqrt())
}

/// `∫_0^∞ ‖ρ_t‖_p dt`, which dominates `W_p(law, γ)`.
///
/// `(0, t_min_split]` is integrated in `τ = √t`, which removes the `t^{-1/2}`
/// growth of `‖ρ_t‖_p`; `[t_min_split, T_max]` is integrated adaptively in
/// `t`; the remainder is bounded analytically.
pub fn score_integral(law: &AtomicLaw, p: f64, config: &ScoreIntegralConfig) -> Result<ScoreIntegral> {
    let ScoreIntegralConfig {
        t_min_split,
        t_max,
        order,
        tolerance,
        inner,
    } = *config;
    if !(t_min_split > 0.0 && t_max > t_min_split) {
        return Err(Error::invalid("t_min_split", "need 0 < t_min_split < T_max"));
    }
    if !(p >= 1.0) {
        return Err(Error::invalid("p", "must be >= 1"));
    }
    let rule = gauss_legendre(order.max(2));
    let mut failure: Option<Error> = None;
    let mut eval = |t: f64| -> Estimate {
        let est = match inner {
            InnerMethod::Quadrature => score_pnorm_quadrature(law, t, p),
            InnerMethod::MonteCarlo { m, seed } => score_pnorm(law, t, p, m, seed).map(|e| Estimate::stochastic(e.value, 3.0 * e.se())),
        };
        est.unwrap_or_else(|err| {
            failure.get_or_insert(err);
            Estimate::exact(f64::NAN)
        })
    };
    let panel_tol = 0.25 * tolerance;
    let root = t_min_split.sqrt();
    let head = adaptive(&rule, 0.0, root, panel_tol, &mut |tau: f64| 2.0 * tau * eval(tau * tau).value);
    let body = adaptive(&rule, t_min_split, t_max, panel_tol, &mut |t: f64| eval(t).value);
    // the inner errors are smooth in t; a fixed composite rule suffices
    let coarse = gauss_legendre(8);
    let mut inner_error = 0.0;
    for k in 0..4 {
        let (a, b) = (root * k as f64 / 4.0, root * (k + 1) as f64 / 4.0);
        inner_error += coarse.integrate(a, b, |tau| 2.0 * tau * eval(tau * tau).se());
    }
    let span = t_max - t_min_split;
    for k in 0..8 {
        let (a, b) = (t_min_split + span * k as f64 / 8.0, t_min_split + span * (k + 1) as f64 / 8.0);
        inner_error += coarse.integrate(a, b, |t| eval(t).se());
    }
    if let Some(err) = failure {
        return Err(err);
    }
    let value = head.value + body.value;
    if !value.is_finite() || !inner_error.is_finite() {
        return Err(Error::NonFinite("score integral".into()));
    }
    let quadrature_error = head.error + body.error;
    let tail_bound = trivial_tail(law.norm_p(p), gaussian_norm_p(law.dim, p), t_max);
    let error_budget = quadrature_error + inner_error + tail_bound;
    Ok(ScoreIntegral {
        value,
        quadrature_error,
        inner_error,
        tail_bound,
        error_budget,
        flagged: error_budget > tolerance || !(head.converged && body.converged),
    })
}

/// A one-dimensional continuous law replaced by the equal-weight grid of its
/// quantiles at `(i + 1/2)/k`, with `W_p` between the two.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub law: Discrete1D,
    pub wp_error: f64,
}

fn quantile_fn(spec: &DistributionSpec) -> Result<Box<dyn Fn(f64) -> f64 + '_>> {
    if spec.dim != 1 {
        return Err(Error::invalid("dim", "discretisation is one-dimensional"));
    }
    match &spec.family {
        Family::Product1d { marginal, .. } => {
            let base: Box<dyn Fn(f64) -> f64> = match marginal.base {
                BaseLaw::Exponential => Box::new(|u: f64| -(-u).ln_1p()),
                BaseLaw::Uniform => Box::new(|u: f64| 2.0 * u - 1.0),
                _ => {
                    return Err(Error::IncompatibleRoute {
                        route: "discretize".into(),
                        reason: "law is already finite-atom".into(),
                    })
                }
            };
            let (shift, scale) = (marginal.shift, marginal.scale);
            Ok(Box::new(move |u| scale * (base(u) - shift)))
        }
        Family::GaussianMixture {
            means,
            covariances,
            weights,
        } => {
            let comps: Vec<(f64, f64, f64)> = means
                .iter()
                .zip(covariances)
                .zip(weights)
                .map(|((m, c), w)| (m[0], c[0][0].sqrt(), *w))
                .collect();
            Ok(Box::new(move |u| {
                let cdf = |x: f64| comps.iter().map(|(m, s, w)| w * normal_cdf((x - m) / s)).sum::<f64>();
                let (mut lo, mut hi) = (-60.0, 60.0);
                for (m, s, _) in &comps {
                    lo = f64::min(lo, m - 60.0 * s);
                    hi = f64::max(hi, m + 60.0 * s);
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }))
        }
        _ => Err(Error::IncompatibleRoute {
            route: "discretize".into(),
            reason: "law is already finite-atom".into(),
        }),
    }
}

/// Quantile-grid discretisation of a continuous one-dimensional law.
pub fn discretize_1d(spec: &DistributionSpec, atoms: usize, p: f64) -> Result<Discretization> {
    if atoms < 2 {
        return Err(Error::invalid("atoms", "need at least two grid atoms"));
    }
    let q = quantile_fn(spec)?;
    let k = atoms as f64;
    let grid: Vec<f64> = (0..atoms).map(|i| q((i as f64 + 0.5) / k)).collect();
    let rule = gauss_legendre(16);
    let mut cost = 0.0;
    for (i, &a) in grid.iter().enumerate() {
        let (lo, hi) = (i as f64 / k, (i as f64 + 1.0) / k);
        let mid = (i as f64 + 0.5) / k;
        let mut f = |u: f64| (q(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)) - a).abs().powf(p);
        cost += adaptive(&rule, lo, mid, 1e-14, &mut f).value + adaptive(&rule, mid, hi, 1e-14, &mut f).value;
    }
    let law = Discrete1D::new(grid, vec![1.0 / k; atoms])?;
    Ok(Discretization {
        law,
        wp_error: cost.powf(1.0 / p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Marginal;

    fn delta_score(t: f64, x: f64) -> f64 {
        let e = (-2.0 * t).exp();
        -x * e / (1.0 - e)
    }

    #[test]
    fn ou_point_constants() {
        for t in [1e-6, 0.3, 2.0, 15.0] {
            let o = OUPoint::new(t).unwrap();
            assert!((o.delta - (o.shrink.powi(-2) - 1.0)).abs() < 1e-12 * (1.0 + o.delta));
            assert!((0.0..1.0).contains(&o.noise_var));
        }
    }

    #[test]
    fn point_mass_scores_are_linear() {
        let law = AtomicLaw::point_mass(vec![0.0]).unwrap();
        for t in [0.05, 0.5, 3.0] {
            for x in [-2.0, 0.3, 1.7] {
                let a = score_mixture(&law, t, &[x]).unwrap().value[0];
                let b = score_via_conditional(&law, t, &[x]).unwrap().value[0];
                let c = delta_score(t, x);
                assert!((a - c).abs() < 1e-12 * (1.0 + c.abs()));
                assert!((b - c).abs() < 1e-12 * (1.0 + c.abs()));
            }
        }
    }

    #[test]
    fn symmetric_two_atoms_vanish_at_origin() {
        let law = AtomicLaw::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        assert!(score_mixture(&law, 0.5, &[0.0]).unwrap().value[0].abs() < 1e-15);
    }

    #[test]
    fn late_scores_vanish() {
        let law = AtomicLaw::new(vec![vec![-1.0, 0.5], vec![2.0, 0.0]], vec![0.3, 0.7]).unwrap();
        let s = score_mixture(&law, 40.0, &[2.5, -3.0]).unwrap();
        assert!(norm(&s.value) < 1e-10);
    }

    #[test]
    fn far_points_are_flagged() {
        let law = AtomicLaw::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let s = score_mixture(&law, 0.01, &[10.0]).unwrap();
        assert!(s.far_from_atoms && s.value[0].is_finite());
        assert!(!score_mixture(&law, 0.01, &[0.9]).unwrap().far_from_atoms);
    }

    #[test]
    fn posterior_concentrates_at_atom_images() {
        // well separated images: E[W | F_t = e^{-t} a] ≈ a and E[Z | F_t] ≈ 0
        let law = AtomicLaw::new(vec![vec![-1.0], vec![2.0]], vec![0.5, 0.5]).unwrap();
        let t: f64 = 0.01;
        let x = (-t).exp() * 2.0;
        let s = score_via_conditional(&law, t, &[x]).unwrap().value[0];
        assert!((s - (-t).exp() * 2.0).abs() < 1e-6, "{s}");
    }

    #[test]
    fn quadrature_and_monte_carlo_norms_agree() {
        let law = AtomicLaw::point_mass(vec![0.0]).unwrap();
        for t in [0.1, 1.0] {
            let e = (-2.0 * t as f64).exp();
            let exact = e / (1.0 - e).sqrt();
            let q = score_pnorm_quadrature(&law, t, 2.0).unwrap();
            assert!((q.value - exact).abs() < 1e-10, "{q:?} vs {exact}");
            let mc = score_pnorm(&law, t, 2.0, 200_000, 7).unwrap();
            assert!((mc.value - exact).abs() < 3.0 * mc.se(), "{mc:?} vs {exact}");
        }
        let law2 = AtomicLaw::new(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        let q = score_pnorm_quadrature(&law2, 0.5, 2.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((q.value - 2f64.sqrt() * e / (1.0 - e).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn score_integral_of_point_mass() {
        for d in 1..=2 {
            let law = AtomicLaw::point_mass(vec![0.0; d]).unwrap();
            let r = score_integral(&law, 2.0, &ScoreIntegralConfig::default()).unwrap();
            assert!((r.value - (d as f64).sqrt()).abs() < 1e-6, "d={d}: {r:?}");
            assert!(!r.flagged, "{r:?}");
        }
    }

    #[test]
    fn ft_sample_limits() {
        let spec = DistributionSpec::rademacher(1);
        let early = ft_sample(&spec, 4, 1e-8, 100, 3).unwrap();
        let raw = sample_sum(&spec, 4, 100, derive_seed(3, 0)).unwrap();
        for (a, b) in early.data.iter().zip(&raw.data) {
            assert!((a - b).abs() < 1e-3);
        }
        let pm = DistributionSpec::point_mass(vec![0.0]).unwrap();
        let z = sample(&DistributionSpec::standard_gaussian(1).unwrap(), 50, derive_seed(8, 1)).unwrap();
        let f = ft_sample(&pm, 1, 0.7, 50, 8).unwrap();
        let sigma = (1.0 - (-1.4f64).exp()).sqrt();
        for (a, b) in f.data.iter().zip(&z.data) {
            assert!((a - sigma * b).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_discretisation_error_is_small() {
        let spec = DistributionSpec::product(Marginal::standardized_exponential(), 1).unwrap();
        let d = discretize_1d(&spec, DEFAULT_GRID_ATOMS, 2.0).unwrap();
        assert_eq!(d.law.len(), DEFAULT_GRID_ATOMS);
        assert!(d.wp_error > 0.0 && d.wp_error < 0.05, "{}", d.wp_error);
        assert!(d.law.mean().abs() < 0.01);
    }
}
