//! Gauss–Legendre and Gauss–Hermite rules (Golub–Welsch) and an adaptive
//! bisecting Gauss–Legendre integrator.

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights from the Jacobi matrix of a three-term recurrence with
/// zero diagonal. Weights come from the Christoffel function of the
/// orthonormal polynomials, which is better conditioned than eigenvectors.
fn golub_welsch(n: usize, off_diag: impl Fn(usize) -> f64, orthonormal: impl Fn(f64) -> Vec<f64>) -> Rule {
    assert!(n >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = off_diag(k);
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    let weights = nodes
        .iter()
        .map(|&x| 1.0 / orthonormal(x).iter().map(|h| h * h).sum::<f64>())
        .collect();
    Rule { nodes, weights }
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    let beta = |k: usize| {
        if k == 0 {
            return 0.0;
        }
        let k = k as f64;
        k / (4.0 * k * k - 1.0).sqrt()
    };
    let polys = move |x: f64| {
        // orthonormal w.r.t. dx on [-1, 1]
        let mut out = Vec::with_capacity(n);
        let mut prev = 0.0;
        let mut cur = std::f64::consts::FRAC_1_SQRT_2;
        out.push(cur);
        for k in 1..n {
            let next = (x * cur - beta(k - 1) * prev) / beta(k);
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    };
    golub_welsch(n, beta, polys)
}

/// Gauss–Hermite rule for the standard normal measure: `Σ w_i f(x_i) ≈ E f(Z)`.
pub fn gauss_hermite(n: usize) -> Rule {
    let polys = move |x: f64| {
        let mut out = Vec::with_capacity(n);
        let mut prev = 0.0;
        let mut cur = 1.0;
        out.push(cur);
        for k in 1..n {
            let kf = k as f64;
            let next = (x * cur - (kf - 1.0).sqrt() * prev) / kf.sqrt();
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    };
    golub_welsch(n, |k| (k as f64).sqrt(), polys)
}

impl Rule {
    /// Applies a rule on `[-1, 1]` to the interval `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    /// Sum of the panel-level error estimates.
    pub error: f64,
    /// False when the recursion cap was hit before meeting the tolerance.
    pub converged: bool,
}

/// Relative accuracy below which a panel is accepted regardless of `tol`;
/// integrands evaluated by inner quadratures carry noise at about this level.
const RELATIVE_FLOOR: f64 = 1e-11;
/// Maximum number of panel splits per call.
const MAX_SPLITS: usize = 1 << 14;

/// Adaptive bisection: a panel is accepted when its rule value and the sum over
/// its two halves agree to within the panel's share of `tol`, or to within
/// round-off of the panel value.
pub fn adaptive(rule: &Rule, a: f64, b: f64, tol: f64, f: &mut impl FnMut(f64) -> f64) -> Quad {
    struct State<'r, F> {
        rule: &'r Rule,
        f: F,
        splits: usize,
    }
    fn recurse<F: FnMut(f64) -> f64>(st: &mut State<'_, F>, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Quad {
        let mid = 0.5 * (a + b);
        let left = st.rule.integrate(a, mid, &mut st.f);
        let right = st.rule.integrate(mid, b, &mut st.f);
        let err = (left + right - whole).abs();
        let floor = RELATIVE_FLOOR * (left.abs() + right.abs());
        let tiny = (b - a).abs() < 1e-14 * (1.0 + a.abs());
        if err <= tol.max(floor) || depth >= 40 || tiny || st.splits >= MAX_SPLITS {
            return Quad {
                value: left + right,
                error: err,
                converged: err <= tol.max(floor),
            };
        }
        st.splits += 1;
        let l = recurse(st, a, mid, left, 0.5 * tol, depth + 1);
        let r = recurse(st, mid, b, right, 0.5 * tol, depth + 1);
        Quad {
            value: l.value + r.value,
            error: l.error + r.error,
            converged: l.converged && r.converged,
        }
    }
    if a == b {
        return Quad {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let whole = rule.integrate(a, b, &mut *f);
    let mut st = State { rule, f: &mut *f, splits: 0 };
    recurse(&mut st, a, b, whole, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫_{-1}^{1} x^14 dx = 2/15
        let v = rule.integrate(-1.0, 1.0, |x| x.powi(14));
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let v = rule.integrate(0.0, 3.0, |x| x * x);
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_reproduces_gaussian_moments() {
        let rule = gauss_hermite(20);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let m = |k: i32| -> f64 {
            rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(k)).sum()
        };
        assert!(m(1).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-13);
        assert!((m(4) - 3.0).abs() < 1e-12);
        assert!((m(8) - 105.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let rule = gauss_legendre(16);
        let q = adaptive(&rule, -1.0, 2.0, 1e-12, &mut |x: f64| x.abs().powf(1.5));
        let exact = (1.0 + 2f64.powf(2.5)) / 2.5;
        assert!(q.converged);
        assert!((q.value - exact).abs() < 1e-10);
    }
}
