//! Exact law of `S_n = (X_1 + … + X_n)/√n` for one-dimensional discrete
//! sources.

use super::DistributionSpec;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MERGE_EPS: f64 = 1e-12;
pub const MAX_ATOMS: usize = 10_000_000;

/// Finite law on the real line with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrete1D {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl Discrete1D {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::invalid("atoms", "need matching non-empty atoms and weights"));
        }
        if atoms.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("atoms", "must be strictly increasing"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("weights", "must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weights", format!("sum to {total}, expected 1")));
        }
        Ok(Self { atoms, weights })
    }

    /// One-dimensional finite-atom spec as a sorted law.
    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        let (atoms, weights) = one_dim_atoms(spec)?;
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).filter(|p| p.1 > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (a, w) = coalesce(pairs.into_iter(), DEFAULT_MERGE_EPS);
        Self::new(a, w)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * (a - m).powi(2)).sum()
    }

    /// `E|X|^p`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * a.abs().powf(p)).sum()
    }

    /// Atoms as `d = 1` rows, for APIs that take general finite laws.
    pub fn as_rows(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        (self.atoms.iter().map(|&a| vec![a]).collect(), self.weights.clone())
    }
}

fn one_dim_atoms(spec: &DistributionSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.dim != 1 {
        return Err(Error::invalid("spec", format!("expected a 1-dimensional law, got dim {}", spec.dim)));
    }
    let (atoms, weights) = spec
        .finite_atoms()
        .ok_or_else(|| Error::invalid("spec", "law is not discrete"))?;
    Ok((atoms.into_iter().map(|a| a[0]).collect(), weights))
}

fn close(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps * a.abs().max(b.abs()).max(1.0)
}

/// Merges adjacent atoms of a sorted stream that lie within `eps`.
fn coalesce(sorted: impl Iterator<Item = (f64, f64)>, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let mut atoms: Vec<f64> = vec![];
    let mut weights: Vec<f64> = vec![];
    for (a, w) in sorted {
        match atoms.last() {
            Some(&last) if close(last, a, eps) => *weights.last_mut().unwrap() += w,
            _ => {
                atoms.push(a);
                weights.push(w);
            }
        }
    }
    (atoms, weights)
}

fn merge_sorted(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].0 <= b[j].0 {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Exact laws of `S_n` for every `n` in `ns`, sharing one incremental pass:
/// the unnormalised sum is convolved with the source one summand at a time
/// (a merge of `|source|` shifted sorted copies) and snapshots are rescaled.
pub fn convolve_powers(spec: &DistributionSpec, ns: &[usize], merge_eps: f64) -> Result<Vec<Discrete1D>> {
    if ns.iter().any(|&n| n == 0) {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let base = Discrete1D::from_spec(spec)?;
    let source: Vec<(f64, f64)> = base.atoms.iter().copied().zip(base.weights.iter().copied()).collect();
    let max_n = ns.iter().copied().max().unwrap_or(0);
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let mut out: Vec<Option<Discrete1D>> = vec![None; ns.len()];
    let mut cur = source.clone();
    let mut next_req = 0;
    for k in 1..=max_n {
        if k > 1 {
            let mut merged: Vec<(f64, f64)> = vec![];
            for &(a, w) in &source {
                let shifted: Vec<(f64, f64)> = cur.iter().map(|&(x, v)| (x + a, v * w)).collect();
                merged = merge_sorted(&merged, &shifted);
            }
            let (atoms, weights) = coalesce(merged.into_iter().filter(|p| p.1 > 0.0), merge_eps);
            if atoms.len() > MAX_ATOMS {
                return Err(Error::AtomExplosion {
                    atoms: atoms.len(),
                    cap: MAX_ATOMS,
                });
            }
            cur = atoms.into_iter().zip(weights).collect();
        }
        while next_req < order.len() && ns[order[next_req]] == k {
            let scale = 1.0 / (k as f64).sqrt();
            let total: f64 = cur.iter().map(|p| p.1).sum();
            let atoms = cur.iter().map(|p| p.0 * scale).collect();
            let weights = cur.iter().map(|p| p.1 / total).collect();
            out[order[next_req]] = Some(Discrete1D { atoms, weights });
            next_req += 1;
        }
    }
    Ok(out.into_iter().map(|d| d.expect("every n visited")).collect())
}

/// Exact law of `S_n`; atoms within `merge_eps` (relative to `max(1, |x|)`)
/// are merged.
pub fn convolve_power(spec: &DistributionSpec, n: usize, merge_eps: f64) -> Result<Discrete1D> {
    Ok(convolve_powers(spec, &[n], merge_eps)?.remove(0))
}

/// Largest `h` such that every atom lies in `a_0 + hZ`, when one exists
/// (relative tolerance 1e-9).
pub fn lattice_span(atoms: &[f64]) -> Option<f64> {
    let first = *atoms.first()?;
    let diffs: Vec<f64> = atoms.iter().map(|a| (a - first).abs()).filter(|d| *d > 0.0).collect();
    let range = diffs.iter().copied().fold(0.0, f64::max);
    if range == 0.0 {
        return None;
    }
    let tol = 1e-9 * range;
    let mut g = diffs[0];
    for &d in &diffs[1..] {
        let (mut a, mut b) = (g.max(d), g.min(d));
        while b > tol {
            let r = a % b;
            a = b;
            b = if r > b - tol { 0.0 } else { r };
        }
        g = a;
        if g < 1e-6 * range {
            return None;
        }
    }
    diffs
        .iter()
        .all(|d| {
            let k = d / g;
            (k - k.round()).abs() < 1e-6
        })
        .then_some(g)
}
