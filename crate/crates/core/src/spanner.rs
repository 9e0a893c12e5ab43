//! Volumetric spanners of finite action sets.
//!
//! A subset `S` of `A` is a volumetric spanner when every `a` in `A` can be
//! written as `a = sum_i lambda_i s_i` with `|lambda|_2 <= 1`. Exact 3n-size
//! constructions exist but are intricate; here a spanner is built by greedy
//! volume maximization followed by swap local search, and the quality of the
//! result is *certified*: the largest minimum-norm coefficient vector
//! `rho = max_a |lambda(a)|_2` is measured and reported. `rho <= 1` means an
//! exact volumetric spanner.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::ActionVector;
use crate::linalg::{column_matrix, dot, norm, pseudo_inverse, RANK_RTOL};

/// Largest reconstruction residual accepted from a decomposition.
pub const RECONSTRUCTION_TOL: f64 = 1e-7;

const MAX_SWAP_PASSES: usize = 50;
const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spanner {
    /// Indices into the input action list, ascending.
    pub members: Vec<usize>,
    #[serde(skip)]
    pub vectors: Vec<ActionVector>,
    pub target_size: usize,
}

impl Spanner {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.dim())
    }

    /// Precomputes the pseudoinverse so many actions can be decomposed cheaply.
    pub fn decomposer(&self) -> Decomposer {
        let basis = column_matrix(self.dim(), &self.vectors);
        let pinv = pseudo_inverse(&basis);
        Decomposer { basis, pinv }
    }
}

/// Minimum-norm solver for `a = M lambda`, where the columns of `M` are the
/// spanner members.
#[derive(Debug, Clone)]
pub struct Decomposer {
    basis: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl Decomposer {
    pub fn decompose(&self, action: &[f64]) -> Result<Vec<f64>> {
        let a = nalgebra::DVector::from_column_slice(action);
        let lambda = &self.pinv * &a;
        let residual = (&a - &self.basis * &lambda).norm();
        if residual > RECONSTRUCTION_TOL {
            return Err(Error::Decomposition { residual });
        }
        Ok(lambda.iter().copied().collect())
    }
}

/// Minimum-norm coefficients expressing `action` over the spanner members.
pub fn decompose(action: &ActionVector, spanner: &Spanner) -> Result<Vec<f64>> {
    spanner.decomposer().decompose(action.coords())
}

#[derive(Debug, Clone, Serialize)]
pub struct SpannerDecomposition {
    #[serde(skip)]
    pub coefficients: Vec<Vec<f64>>,
    /// `rho = max_a |lambda(a)|_2`.
    pub norm_factor: f64,
    pub reconstruction_error: f64,
    /// Set when `rho > 1`, i.e. the subset is only an approximate spanner.
    pub approximate: bool,
}

pub fn certify(actions: &[ActionVector], spanner: &Spanner) -> Result<SpannerDecomposition> {
    let dec = spanner.decomposer();
    let mut coefficients = Vec::with_capacity(actions.len());
    let mut norm_factor: f64 = 0.0;
    let mut reconstruction_error: f64 = 0.0;
    for a in actions {
        let lambda = dec.decompose(a.coords())?;
        let recon: Vec<f64> = (0..a.dim())
            .map(|i| lambda.iter().zip(&spanner.vectors).map(|(l, v)| l * v.coords()[i]).sum())
            .collect();
        let err = norm(&a.coords().iter().zip(&recon).map(|(x, y)| x - y).collect::<Vec<_>>());
        reconstruction_error = reconstruction_error.max(err);
        norm_factor = norm_factor.max(norm(&lambda));
        coefficients.push(lambda);
    }
    Ok(SpannerDecomposition {
        coefficients,
        norm_factor,
        reconstruction_error,
        approximate: norm_factor > 1.0 + crate::TOL,
    })
}

pub fn default_budget(dim: usize) -> usize {
    3 * dim
}

/// Left singular directions of the member matrix scaled by inverse singular values.
struct Whitener {
    rank: usize,
    directions: Vec<Vec<f64>>,
}

impl Whitener {
    fn new(actions: &[ActionVector], members: &[usize]) -> Self {
        let dim = actions[0].dim();
        let cols: Vec<&ActionVector> = members.iter().map(|&i| &actions[i]).collect();
        if cols.is_empty() {
            return Self { rank: 0, directions: vec![] };
        }
        let svd = column_matrix(dim, &cols).svd(true, false);
        let u = svd.u.expect("left factor requested");
        let smax = svd.singular_values.max();
        let mut directions = Vec::new();
        if smax > 0.0 {
            for (k, &s) in svd.singular_values.iter().enumerate() {
                if s > RANK_RTOL * smax {
                    directions.push(u.column(k).iter().map(|x| x / s).collect());
                }
            }
        }
        Self { rank: directions.len(), directions }
    }

    /// `|lambda(x)|_2^2` for the minimum-norm decomposition of an in-span `x`;
    /// equivalently the leverage `x^T (M M^T)^+ x`.
    fn squared_norm(&self, x: &[f64]) -> f64 {
        self.directions.iter().map(|d| dot(d, x).powi(2)).sum()
    }
}

fn squared_rho(actions: &[ActionVector], members: &[usize], full_rank: usize) -> Option<f64> {
    let w = Whitener::new(actions, members);
    if w.rank < full_rank {
        return None;
    }
    Some(actions.iter().map(|a| w.squared_norm(a.coords())).fold(0.0, f64::max))
}

/// Certified norm factor of an arbitrary member subset, or `None` when the
/// subset does not span the action set.
pub fn norm_factor_of(actions: &[ActionVector], members: &[usize]) -> Option<f64> {
    if actions.is_empty() {
        return None;
    }
    let full = crate::linalg::rank(actions[0].dim(), actions);
    squared_rho(actions, members, full).map(f64::sqrt)
}

fn is_duplicate(actions: &[ActionVector], members: &[usize], j: usize) -> bool {
    members.iter().any(|&i| {
        let diff: Vec<f64> = actions[i].coords().iter().zip(actions[j].coords()).map(|(x, y)| x - y).collect();
        norm(&diff) <= DUPLICATE_TOL
    })
}

/// Selects at most `size_budget` members (never fewer than the rank of the
/// set) spanning `actions`.
///
/// Seeding is pivoted Gram-Schmidt (largest residual first), which picks a
/// volume-maximizing basis greedily. The set then grows by the action of
/// largest leverage `x^T G^+ x`, the factor by which `det(G)` grows when `x`
/// is added. Finally single-member swaps are applied while they lower the
/// certified norm factor. Exact duplicates of members are never added.
pub fn compute_spanner(actions: &[ActionVector], size_budget: usize) -> Spanner {
    assert!(!actions.is_empty(), "cannot span an empty action set");
    let dim = actions[0].dim();
    let k = actions.len();
    let full_rank = crate::linalg::rank(dim, actions);
    let budget = size_budget.min(k).max(full_rank).max(1);

    let finish = |mut members: Vec<usize>| {
        members.sort_unstable();
        Spanner {
            vectors: members.iter().map(|&i| actions[i].clone()).collect(),
            members,
            target_size: budget,
        }
    };

    if k <= budget {
        return finish((0..k).collect());
    }

    // Pivoted orthogonalization.
    let scale = actions.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut residuals: Vec<Vec<f64>> = actions.iter().map(|a| a.coords().to_vec()).collect();
    let mut members: Vec<usize> = Vec::with_capacity(budget);
    while members.len() < full_rank {
        let mut pick: Option<(usize, f64)> = None;
        for (j, r) in residuals.iter().enumerate() {
            if members.contains(&j) {
                continue;
            }
            let rn = norm(r);
            if pick.is_none_or(|(_, best)| rn > best) {
                pick = Some((j, rn));
            }
        }
        let Some((j, rn)) = pick else { break };
        if rn <= RANK_RTOL * scale {
            break;
        }
        members.push(j);
        let q: Vec<f64> = residuals[j].iter().map(|x| x / rn).collect();
        for r in residuals.iter_mut() {
            let c = dot(r, &q);
            r.iter_mut().zip(&q).for_each(|(x, qi)| *x -= c * qi);
        }
    }
    if members.is_empty() {
        members.push(0);
    }

    // Volume growth by leverage.
    while members.len() < budget {
        let w = Whitener::new(actions, &members);
        let mut pick: Option<(usize, f64)> = None;
        for j in 0..k {
            if members.contains(&j) || is_duplicate(actions, &members, j) {
                continue;
            }
            let lev = w.squared_norm(actions[j].coords());
            if pick.is_none_or(|(_, best)| lev > best) {
                pick = Some((j, lev));
            }
        }
        match pick {
            Some((j, _)) => members.push(j),
            None => break,
        }
    }

    // Swap local search on the certified factor.
    let Some(mut current) = squared_rho(actions, &members, full_rank) else {
        return finish(members);
    };
    for _ in 0..MAX_SWAP_PASSES {
        let mut improved = false;
        for slot in 0..members.len() {
            for j in 0..k {
                if members.contains(&j) {
                    continue;
                }
                let mut trial = members.clone();
                trial[slot] = j;
                let others: Vec<usize> = trial.iter().copied().filter(|&i| i != j).collect();
                if is_duplicate(actions, &others, j) {
                    continue;
                }
                if let Some(r) = squared_rho(actions, &trial, full_rank) {
                    if r < current * (1.0 - 1e-12) {
                        members = trial;
                        current = r;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    finish(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_instance;

    fn basis(n: usize) -> Vec<ActionVector> {
        (0..n).map(|i| ActionVector::basis(n, i)).collect()
    }

    #[test]
    fn basis_is_its_own_spanner() {
        let a = basis(4);
        let s = compute_spanner(&a, 12);
        assert_eq!(s.members, vec![0, 1, 2, 3]);
        let cert = certify(&a, &s).unwrap();
        assert!((cert.norm_factor - 1.0).abs() < 1e-12);
        assert!(cert.reconstruction_error < 1e-15);
        for (i, l) in cert.coefficients.iter().enumerate() {
            for (j, x) in l.iter().enumerate() {
                assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_sets_are_kept_whole() {
        let inst = generate_instance(1, 3, 7);
        let s = compute_spanner(&inst.actions, 9);
        assert_eq!(s.members, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn identical_actions_give_single_member() {
        let v = ActionVector::new(vec![0.6, 0.8]).unwrap();
        let a = vec![v.clone(); 10];
        let s = compute_spanner(&a, 6);
        assert_eq!(s.len(), 1);
        let cert = certify(&a, &s).unwrap();
        assert!(cert.reconstruction_error < 1e-12);
        assert!((cert.norm_factor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn respects_budget_and_certifies() {
        let inst = generate_instance(7, 6, 50);
        let s = compute_spanner(&inst.actions, 18);
        assert_eq!(s.len(), 18);
        let cert = certify(&inst.actions, &s).unwrap();
        assert!(cert.reconstruction_error <= RECONSTRUCTION_TOL);
        assert!(cert.norm_factor.is_finite());
        let again = compute_spanner(&inst.actions, 18);
        assert_eq!(s, again);
    }

    #[test]
    fn budget_floored_at_rank() {
        let inst = generate_instance(2, 5, 20);
        let s = compute_spanner(&inst.actions, 2);
        assert_eq!(s.len(), 5);
        assert!(certify(&inst.actions, &s).is_ok());
    }

    #[test]
    fn member_decomposes_to_indicator() {
        let a = basis(3);
        let s = compute_spanner(&a, 9);
        let l = decompose(&a[1], &s).unwrap();
        assert_eq!(l.len(), 3);
        assert!((l[1] - 1.0).abs() < 1e-12 && l[0].abs() < 1e-12 && l[2].abs() < 1e-12);
    }

    #[test]
    fn zero_vector_decomposes_to_zero() {
        let inst = generate_instance(4, 3, 12);
        let s = compute_spanner(&inst.actions, 9);
        let zero = ActionVector::new(vec![0.0; 3]).unwrap();
        assert!(decompose(&zero, &s).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn out_of_span_is_an_error() {
        let s = compute_spanner(&[ActionVector::basis(3, 0), ActionVector::basis(3, 1)], 9);
        let err = decompose(&ActionVector::basis(3, 2), &s).unwrap_err();
        match err {
            Error::Decomposition { residual } => assert!((residual - 1.0).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn whole_set_factor_at_most_one() {
        for seed in 0..10 {
            let inst = generate_instance(seed, 4, 15);
            let all = Spanner {
                members: (0..15).collect(),
                vectors: inst.actions.clone(),
                target_size: 15,
            };
            assert!(certify(&inst.actions, &all).unwrap().norm_factor <= 1.0 + 1e-9);
        }
    }
}
