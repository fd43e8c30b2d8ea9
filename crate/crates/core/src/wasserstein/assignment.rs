use crate::distributions::Points;
use crate::error::{Error, Result};

pub const MAX_POINTS: usize = 4096;

fn pair_cost(x: &[f64], y: &[f64], p: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    sq.powf(0.5 * p)
}

fn check(x: &Points, y: &Points) -> Result<()> {
    if x.dim != y.dim {
        return Err(Error::ShapeMismatch(format!("clouds in dims {} and {}", x.dim, y.dim)));
    }
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("clouds of sizes {} and {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::invalid("m", "clouds must be non-empty"));
    }
    if x.len() > MAX_POINTS {
        return Err(Error::invalid("m", format!("at most {MAX_POINTS} points per cloud")));
    }
    Ok(())
}

/// Optimal matching `σ` minimising `Σ ‖x_i - y_σ(i)‖^p` (`plan[i] = σ(i)`).
///
/// Shortest augmenting path Hungarian method with dual potentials, `O(m³)`.
pub fn assignment_plan(x: &Points, y: &Points, p: f64) -> Result<Vec<usize>> {
    check(x, y)?;
    let m = x.len();
    let cost: Vec<f64> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| pair_cost(x.row(i), y.row(j), p))
        .collect();
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=m {
        owner[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let row = &cost[(i0 - 1) * m..i0 * m];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut plan = vec![0; m];
    for j in 1..=m {
        plan[owner[j] - 1] = j - 1;
    }
    Ok(plan)
}

/// `(1/m) Σ ‖x_i - y_plan[i]‖^p`, summed in increasing order so the value
/// does not depend on how the pairs are listed.
pub fn plan_cost(x: &Points, y: &Points, plan: &[usize], p: f64) -> f64 {
    let mut costs: Vec<f64> = plan
        .iter()
        .enumerate()
        .map(|(i, &j)| pair_cost(x.row(i), y.row(j), p))
        .collect();
    costs.sort_by(f64::total_cmp);
    costs.iter().sum::<f64>() / plan.len() as f64
}

/// Monotone coupling of two one-dimensional clouds: `(1/m) Σ |x_(i) - y_(i)|^p`.
pub fn sorted_coupling_cost(x: &Points, y: &Points, p: f64) -> Result<f64> {
    check(x, y)?;
    if x.dim != 1 {
        return Err(Error::invalid("dim", "sorted coupling needs one-dimensional clouds"));
    }
    let mut a = x.data.clone();
    let mut b = y.data.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut costs: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (u - v).abs().powf(p)).collect();
    costs.sort_by(f64::total_cmp);
    Ok(costs.iter().sum::<f64>() / a.len() as f64)
}

/// Exact `W_p` between the empirical measures of two equal-size clouds.
///
/// In one dimension the monotone coupling is optimal for every `p ≥ 1` and is
/// used directly; otherwise the Hungarian plan is computed.
pub fn wp_assignment(x: &Points, y: &Points, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid("p", "must be >= 1"));
    }
    check(x, y)?;
    let cost = if x.dim == 1 {
        sorted_coupling_cost(x, y, p)?
    } else {
        let plan = assignment_plan(x, y, p)?;
        plan_cost(x, y, &plan, p)
    };
    Ok(cost.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample, DistributionSpec};

    fn cloud(d: usize, m: usize, seed: u64) -> Points {
        let spec = DistributionSpec::standard_gaussian(d).unwrap();
        sample(&spec, m, seed).unwrap()
    }

    fn brute_force(x: &Points, y: &Points, p: f64) -> f64 {
        let m = x.len();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut best = f64::INFINITY;
        fn rec(k: usize, perm: &mut Vec<usize>, x: &Points, y: &Points, p: f64, best: &mut f64) {
            if k == perm.len() {
                *best = best.min(plan_cost(x, y, perm, p));
                return;
            }
            for i in k..perm.len() {
                perm.swap(k, i);
                rec(k + 1, perm, x, y, p, best);
                perm.swap(k, i);
            }
        }
        rec(0, &mut perm, x, y, p, &mut best);
        best
    }

    #[test]
    fn identical_clouds_in_any_order() {
        let x = cloud(2, 20, 1);
        let mut rows: Vec<&[f64]> = x.rows().collect();
        rows.reverse();
        let y = Points::new(2, rows.concat()).unwrap();
        assert_eq!(wp_assignment(&x, &y, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_example() {
        let x = Points::new(1, vec![0.0, 2.0]).unwrap();
        let y = Points::new(1, vec![3.0, 1.0]).unwrap();
        assert!((wp_assignment(&x, &y, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        for seed in 0..5 {
            let x = cloud(2, 6, 10 + seed);
            let y = cloud(2, 6, 20 + seed);
            for p in [1.0, 2.0, 3.0] {
                let plan = assignment_plan(&x, &y, p).unwrap();
                let h = plan_cost(&x, &y, &plan, p);
                let b = brute_force(&x, &y, p);
                assert!((h - b).abs() < 1e-9, "seed {seed} p {p}: {h} vs {b}");
            }
        }
    }

    #[test]
    fn hungarian_matches_sorted_coupling_in_one_dimension() {
        let x = cloud(1, 200, 3);
        let y = cloud(1, 200, 4);
        let plan = assignment_plan(&x, &y, 2.0).unwrap();
        let h = plan_cost(&x, &y, &plan, 2.0);
        let s = sorted_coupling_cost(&x, &y, 2.0).unwrap();
        assert!((h - s).abs() < 1e-9, "{h} vs {s}");
    }

    #[test]
    fn shape_errors() {
        let x = cloud(2, 5, 1);
        assert!(wp_assignment(&x, &cloud(2, 6, 1), 2.0).is_err());
        assert!(wp_assignment(&x, &cloud(3, 5, 1), 2.0).is_err());
    }
}
