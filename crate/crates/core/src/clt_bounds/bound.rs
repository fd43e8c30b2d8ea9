use super::terms::CltTerms;
use crate::distributions::{convolve_power, lattice_span, DistributionSpec, Discrete1D, DEFAULT_MERGE_EPS};
use crate::error::{Error, Result};
use crate::multilinear::contracted_hermite_pnorm;
use crate::wasserstein::{wp_pair_bound_for_theorem, wp_quantile_exact, DEFAULT_QUAD_ORDER};
use crate::Estimate;
use serde::{Deserialize, Serialize};

const MAX_BISECTIONS: usize = 200;
const RESIDUAL_FACTOR: f64 = 1e-10;

/// Which form of the `(β_p, L_p)` factor enters the denominator of the ε
/// equation and the mixed term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorForm {
    /// `√(β_2 + d) + √p (β_p + L_p)^{1/p}` as in the theorem statement.
    #[default]
    Theorem,
    /// `√(β_2 + d) + √p (β_p^{1/p} + L_p^{1/p})` as in the end of the proof.
    Split,
}

/// How `W_q(ν, γ)` on the right-hand side is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WqPolicy {
    /// `K · n^{1/(2q) - 1/2}`.
    Bonis { k: f64 },
    Value(f64),
    /// Exact quantile route for 1-d lattice laws, otherwise two-sample
    /// estimate plus two standard errors.
    Auto { m: usize, reps: usize, seed: u64 },
}

impl WqPolicy {
    pub fn resolve(&self, spec: &DistributionSpec, n: usize, q: f64) -> Result<f64> {
        let v = match *self {
            WqPolicy::Bonis { k } => {
                if !(k >= 0.0) {
                    return Err(Error::invalid("wq", "K must be non-negative"));
                }
                k * (n as f64).powf(0.5 / q - 0.5)
            }
            WqPolicy::Value(v) => v,
            WqPolicy::Auto { m, reps, seed } => match exact_lattice_law(spec, n)? {
                Some(law) => wp_quantile_exact(&law, q, DEFAULT_QUAD_ORDER)?,
                None => wp_pair_bound_for_theorem(spec, n, q, m, reps, seed)?,
            },
        };
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid("wq", format!("W_q plug-in must be finite and non-negative, got {v}")));
        }
        Ok(v)
    }
}

/// Exact law of `S_n` when the source is a 1-d lattice law.
pub fn exact_lattice_law(spec: &DistributionSpec, n: usize) -> Result<Option<Discrete1D>> {
    if spec.dim != 1 {
        return Ok(None);
    }
    let Some((atoms, _)) = spec.finite_atoms() else {
        return Ok(None);
    };
    let flat: Vec<f64> = atoms.iter().map(|a| a[0]).collect();
    if flat.len() > 1 && lattice_span(&flat).is_none() {
        return Ok(None);
    }
    match convolve_power(spec, n, DEFAULT_MERGE_EPS) {
        Ok(law) => Ok(Some(law)),
        Err(Error::AtomExplosion { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_exponents(p: f64, q: f64, r: f64) -> Result<()> {
    if !(q.is_finite() && r.is_finite() && q > 0.0 && r > 0.0) {
        return Err(Error::invalid("q", "q and r must be finite and positive"));
    }
    if (1.0 / q + 1.0 / r - 1.0 / p).abs() > 1e-12 {
        return Err(Error::invalid("r", format!("1/q + 1/r must equal 1/p = {}", 1.0 / p)));
    }
    Ok(())
}

fn denominator(terms: &CltTerms, form: DenominatorForm) -> f64 {
    let p = terms.p;
    let head = (terms.beta_2 + terms.d as f64).sqrt();
    let tail = match form {
        DenominatorForm::Theorem => (terms.beta_p + terms.l_p).powf(1.0 / p),
        DenominatorForm::Split => terms.beta_p.powf(1.0 / p) + terms.l_p.powf(1.0 / p),
    };
    head + p.sqrt() * tail
}

/// Root of `ε^{3/2} = p N(ε) / den`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSolution {
    pub epsilon: f64,
    /// `ε^{3/2} - RHS(ε)` at the returned point.
    pub residual: f64,
    pub rhs_at_zero: f64,
    pub iterations: usize,
    /// Numerator identically zero: `ε = 0`.
    pub zero_numerator: bool,
    /// `RHS` jumps across the root (step tail of a discrete law), so no
    /// point meets the residual target; `epsilon` is the jump location.
    pub at_jump: bool,
}

impl EpsilonSolution {
    pub fn converged(&self) -> bool {
        self.zero_numerator || self.residual.abs() < RESIDUAL_FACTOR * (1.0 + self.rhs_at_zero)
    }
}

fn numerator(terms: &CltTerms, r: f64, w_q: f64, eps: f64) -> f64 {
    terms.ldd4_tail(eps) + terms.norm_m4 + r * terms.norm_m3 * w_q
}

pub fn solve_epsilon(terms: &CltTerms, q: f64, r: f64, w_q: f64) -> Result<EpsilonSolution> {
    solve_epsilon_with(terms, q, r, w_q, DenominatorForm::Theorem)
}

pub fn solve_epsilon_with(terms: &CltTerms, q: f64, r: f64, w_q: f64, form: DenominatorForm) -> Result<EpsilonSolution> {
    let p = terms.p;
    check_exponents(p, q, r)?;
    if !(w_q >= 0.0) || !w_q.is_finite() {
        return Err(Error::invalid("wq", "must be finite and non-negative"));
    }
    let den = denominator(terms, form);
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::NonFinite("epsilon denominator".into()));
    }
    if !numerator(terms, r, w_q, 0.0).is_finite() {
        return Err(Error::NonFinite("epsilon right-hand side".into()));
    }
    Ok(bisect(p, |e| p * numerator(terms, r, w_q, e) / den))
}

fn bisect(p: f64, rhs: impl Fn(f64) -> f64) -> EpsilonSolution {
    let rhs0 = rhs(0.0);
    let target = RESIDUAL_FACTOR * (1.0 + rhs0);
    if rhs0 == 0.0 {
        return EpsilonSolution {
            epsilon: 0.0,
            residual: 0.0,
            rhs_at_zero: 0.0,
            iterations: 0,
            zero_numerator: true,
            at_jump: false,
        };
    }
    let g = |e: f64| e.powf(1.5) - rhs(e);
    let (mut lo, mut hi) = (0.0f64, (rhs0 * p).powf(2.0 / 3.0) + 1.0);
    let mut iterations = 0;
    let mut best = (hi, g(hi));
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() < best.1.abs() {
            best = (mid, gm);
        }
        if gm.abs() < target {
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let at_jump = best.1.abs() >= target;
    let (epsilon, residual) = if at_jump { (hi, g(hi)) } else { best };
    EpsilonSolution {
        epsilon,
        residual,
        rhs_at_zero: rhs0,
        iterations,
        zero_numerator: false,
        at_jump,
    }
}

/// A named intermediate value of the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub label: String,
    pub value: f64,
}

/// The inputs the bound was evaluated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub d: usize,
    pub n: usize,
    pub p: f64,
    pub beta_w: f64,
    pub denominator_form: DenominatorForm,
}

/// The four summands of the bound, in the order of the statement.
///
/// `term_lattice` and `term_tail` carry the factor `C`; `term_mixed` and
/// `term_leading` do not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub term_leading: f64,
    pub term_lattice: f64,
    pub term_mixed: f64,
    pub term_tail: f64,
    pub total: f64,
    pub c_used: f64,
    pub w_q_input: f64,
    pub q: f64,
    pub r: f64,
    pub inputs: BoundInputs,
    /// `|log ε|` is infinite because `ε = 0`; `term_tail` is then infinite.
    pub log_epsilon_infinite: bool,
    pub epsilon_solution: EpsilonSolution,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn theorem_bound(terms: &CltTerms, q: f64, r: f64, w_q: f64, c: f64) -> Result<BoundReport> {
    theorem_bound_with(terms, q, r, w_q, c, DenominatorForm::Theorem)
}

pub fn theorem_bound_with(terms: &CltTerms, q: f64, r: f64, w_q: f64, c: f64, form: DenominatorForm) -> Result<BoundReport> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid("C", "must be positive"));
    }
    let sol = solve_epsilon_with(terms, q, r, w_q, form)?;
    let p = terms.p;
    let d = terms.d as f64;
    let eps = sol.epsilon;
    let den = denominator(terms, form);
    let num = numerator(terms, r, w_q, eps);
    let term_leading = terms.m3_hermite.value / 6.0;
    let term_lattice = c * (d * p).sqrt() * terms.beta_w;
    let term_mixed = p.powf(7.0 / 6.0) * num.powf(2.0 / 3.0) * den.powf(1.0 / 3.0);
    let log_eps = eps.ln().abs();
    let moment_part = p * terms.l_4(eps).sqrt() + p.powf(1.0 + 1.0 / p) * terms.l_p2(eps).powf(1.0 / p);
    let prime_part = terms.lprime_4.sqrt() + (p * p * terms.lprime_p2).powf(1.0 / p);
    // 0 · ∞ only when the L' terms vanish, in which case the term is absent
    let log_part = if prime_part == 0.0 { 0.0 } else { log_eps * p.powf(1.5) * prime_part };
    let term_tail = c * (moment_part + log_part);
    let total = term_leading + term_lattice + term_mixed + term_tail;
    for (name, v) in [
        ("term_leading", term_leading),
        ("term_lattice", term_lattice),
        ("term_mixed", term_mixed),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NonFinite(name.into()));
        }
    }
    if term_tail.is_nan() || total.is_nan() {
        return Err(Error::NonFinite("term_tail".into()));
    }
    let n = terms.n as f64;
    let beta_sq_x = terms.beta_w * terms.beta_w * n;
    let diag = |label: &str, value: f64| Diagnostic {
        label: label.to_string(),
        value,
    };
    let diagnostics = vec![
        diag("norm_m3", terms.norm_m3),
        diag("norm_m4", terms.norm_m4),
        diag("m3_hermite_pnorm", terms.m3_hermite.value),
        diag("m3_hermite_se", terms.m3_hermite.se()),
        diag("l_p", terms.l_p),
        diag("l_4_eps", terms.l_4(eps)),
        diag("l_p2_eps", terms.l_p2(eps)),
        diag("lprime_4", terms.lprime_4),
        diag("lprime_p2", terms.lprime_p2),
        diag("ldd_4_eps", terms.ldd4_tail(eps)),
        diag("beta_2", terms.beta_2),
        diag("beta_p", terms.beta_p),
        diag("denominator", den),
        diag("numerator", num),
        diag("epsilon_residual", sol.residual),
        diag("abs_log_epsilon", log_eps),
        // the lattice term in the normalisation C sqrt(d beta^2 / n) of the corollary
        diag("term_lattice_corollary_form", c * (d * beta_sq_x / n).sqrt()),
    ];
    Ok(BoundReport {
        epsilon: eps,
        term_leading,
        term_lattice,
        term_mixed,
        term_tail,
        total,
        c_used: c,
        w_q_input: w_q,
        q,
        r,
        inputs: BoundInputs {
            d: terms.d,
            n: terms.n,
            p,
            beta_w: terms.beta_w,
            denominator_form: form,
        },
        log_epsilon_infinite: sol.zero_numerator && prime_part > 0.0,
        epsilon_solution: sol,
        diagnostics,
    })
}

/// `(1/6) ‖E[X^{⊗3}] H_2(Z)‖_p`, the limit of `√n` times the leading term.
pub fn corollary_constant(spec: &DistributionSpec, p: f64, n_mc: usize, seed: u64) -> Result<Estimate> {
    let m3 = crate::distributions::moment_tensor(spec, 3)?;
    let h = contracted_hermite_pnorm(&m3, 2, p, n_mc.max(1), seed)?.best();
    Ok(Estimate {
        value: h.value / 6.0,
        std_error: h.std_error.map(|e| e / 6.0),
    })
}
