//! Independent oracles shared by the integration tests and the acceptance
//! report. Nothing here calls into the algorithms under test beyond plain
//! data access.

#![allow(dead_code)]

use delaylin::{ActionVector, BanditInstance, PayoffKind};

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear means by direct enumeration.
pub fn brute_means(instance: &BanditInstance) -> Vec<f64> {
    instance.actions.iter().map(|a| inner(a.coords(), instance.theta.coords())).collect()
}

/// `(optimal index, gaps)` by a second enumeration with a strict-improvement
/// scan (lowest index wins ties within 1e-9).
pub fn brute_gaps(instance: &BanditInstance) -> (usize, Vec<f64>) {
    let means = brute_means(instance);
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        let better = match instance.payoff_kind {
            PayoffKind::Loss => m < means[best] - 1e-9,
            PayoffKind::Reward => m > means[best] + 1e-9,
        };
        if better {
            best = i;
        }
    }
    let gaps = means
        .iter()
        .map(|&m| match instance.payoff_kind {
            PayoffKind::Loss => (m - means[best]).max(0.0),
            PayoffKind::Reward => (means[best] - m).max(0.0),
        })
        .collect();
    (best, gaps)
}

/// Solves `M x = b` by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        let pivot = m[col].clone();
        for row in 0..n {
            if row != col {
                let f = m[row][col] / pivot[col];
                m[row][col..].iter_mut().zip(&pivot[col..]).for_each(|(x, p)| *x -= f * p);
                b[row] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / m[i][i]).collect())
}

/// Coefficients of `x` over linearly independent `members` from the normal
/// equations `(V^T V) lambda = V^T x`.
pub fn normal_equations_coefficients(members: &[&[f64]], x: &[f64]) -> Option<Vec<f64>> {
    let k = members.len();
    let gram: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| inner(members[i], members[j])).collect()).collect();
    let rhs: Vec<f64> = members.iter().map(|v| inner(v, x)).collect();
    gauss_solve(gram, rhs)
}

/// Minimum-norm coefficients of `x` over `members` spanning `R^n`:
/// `lambda = V^T y` with `(V V^T) y = x`.
pub fn min_norm_coefficients(members: &[&[f64]], x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    let outer: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| members.iter().map(|v| v[i] * v[j]).sum()).collect()).collect();
    let y = gauss_solve(outer, x.to_vec())?;
    Some(members.iter().map(|v| inner(v, &y)).collect())
}

/// `max_a |lambda(a)|_2` of the subset `members` of `actions`, or `None`
/// if the subset does not span `R^n`.
pub fn subset_rho(actions: &[ActionVector], members: &[usize]) -> Option<f64> {
    let vs: Vec<&[f64]> = members.iter().map(|&i| actions[i].coords()).collect();
    let mut rho: f64 = 0.0;
    for a in actions {
        let l = min_norm_coefficients(&vs, a.coords())?;
        if residual(&vs, &l, a.coords()) > 1e-7 {
            return None;
        }
        rho = rho.max(inner(&l, &l).sqrt());
    }
    Some(rho)
}

/// Smallest `subset_rho` over all subsets of the given size.
pub fn best_subset_rho(actions: &[ActionVector], size: usize) -> Option<f64> {
    subsets(actions.len(), size).iter().filter_map(|s| subset_rho(actions, s)).min_by(f64::total_cmp)
}

/// Every `size`-subset of `0..k`, in lexicographic order.
pub fn subsets(k: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            if k - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, k, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, size, &mut Vec::new(), &mut out);
    out
}

/// Reconstruction residual of `x` from `members` with coefficients `lambda`.
pub fn residual(members: &[&[f64]], lambda: &[f64], x: &[f64]) -> f64 {
    let mut r = x.to_vec();
    for (v, l) in members.iter().zip(lambda) {
        r.iter_mut().zip(v.iter()).for_each(|(ri, vi)| *ri -= l * vi);
    }
    inner(&r, &r).sqrt()
}

pub fn unit_basis(n: usize) -> Vec<ActionVector> {
    (0..n).map(|i| ActionVector::basis(n, i)).collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}
