mod common;

use common::{best_subset_rho, inner, min_norm_coefficients, normal_equations_coefficients, residual, subset_rho};
use delaylin::instance::generate_instance;
use delaylin::spanner::{certify, compute_spanner, decompose, Spanner};
use delaylin::ActionVector;
use proptest::prelude::*;
use rand::Rng;

fn whole(actions: &[ActionVector]) -> Spanner {
    compute_spanner(actions, actions.len())
}

#[test]
fn n3_k12_is_close_to_the_best_subset() {
    for seed in 0..6 {
        let actions = generate_instance(100 + seed, 3, 12).actions;
        let s = compute_spanner(&actions, 9);
        let cert = certify(&actions, &s).unwrap();
        let oracle = subset_rho(&actions, &s.members).expect("spanner spans R^3");
        assert!((cert.norm_factor - oracle).abs() < 1e-9, "seed {seed}: {} vs {oracle}", cert.norm_factor);
        let best = best_subset_rho(&actions, s.len()).unwrap();
        assert!(cert.norm_factor <= 1.5 * best + 1e-9, "seed {seed}: {} vs best {best}", cert.norm_factor);
        for l in &cert.coefficients {
            assert!(inner(l, l).sqrt() <= cert.norm_factor + 1e-12);
        }
    }
}

#[test]
fn independent_members_match_normal_equations() {
    let mut rng = delaylin::seed::stream(11, "test", 0);
    for seed in 0..20 {
        let actions = generate_instance(seed, 4, 30).actions;
        let s = compute_spanner(&actions, 4);
        assert_eq!(s.len(), 4);
        let members: Vec<&[f64]> = s.vectors.iter().map(|v| v.coords()).collect();
        let weights: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..4).map(|i| (0..4).map(|j| weights[j] * members[j][i]).sum()).collect();
        let got = s.decomposer().decompose(&x).unwrap();
        let want = normal_equations_coefficients(&members, &x).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-6, "seed {seed}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn redundant_members_give_min_norm_solution() {
    for seed in 0..20 {
        let actions = generate_instance(seed, 4, 30).actions;
        let s = compute_spanner(&actions, 12);
        let members: Vec<&[f64]> = s.vectors.iter().map(|v| v.coords()).collect();
        for a in &actions {
            let got = decompose(a, &s).unwrap();
            let want = min_norm_coefficients(&members, a.coords()).unwrap();
            assert!(residual(&members, &got, a.coords()) < 1e-7);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn default_study_spanner_is_finite() {
    let actions = generate_instance(0, 6, 50).actions;
    let s = compute_spanner(&actions, 18);
    let cert = certify(&actions, &s).unwrap();
    assert!(s.len() <= 18);
    assert!(cert.norm_factor.is_finite());
    assert!(cert.reconstruction_error <= 1e-7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_has_minimum_norm(seed in any::<u64>(), n in 2usize..6, extra in 1usize..6, perturb in prop::collection::vec(-1.0f64..1.0, 12)) {
        let actions = generate_instance(seed, n, 3 * n + 10).actions;
        let s = compute_spanner(&actions, n + extra);
        prop_assume!(s.len() > n);
        let members: Vec<&[f64]> = s.vectors.iter().map(|v| v.coords()).collect();
        let target = &actions[seed as usize % actions.len()];
        let lambda = decompose(target, &s).unwrap();
        // Project a random vector onto the null space of the member matrix to
        // build an alternative exact solution.
        let z: Vec<f64> = perturb[..s.len()].to_vec();
        let image: Vec<f64> = (0..n).map(|i| z.iter().zip(&members).map(|(c, v)| c * v[i]).sum()).collect();
        let back = min_norm_coefficients(&members, &image).unwrap();
        let null: Vec<f64> = z.iter().zip(&back).map(|(a, b)| a - b).collect();
        prop_assert!(residual(&members, &null, &vec![0.0; n]) < 1e-8);
        let alt: Vec<f64> = lambda.iter().zip(&null).map(|(l, v)| l + v).collect();
        prop_assert!(residual(&members, &alt, target.coords()) < 1e-7);
        prop_assert!(inner(&lambda, &lambda).sqrt() <= inner(&alt, &alt).sqrt() + 1e-12);
    }

    #[test]
    fn whole_set_certifies_within_one(seed in any::<u64>(), n in 1usize..7, k in 1usize..25) {
        let actions = generate_instance(seed, n, k).actions;
        let cert = certify(&actions, &whole(&actions)).unwrap();
        prop_assert!(cert.norm_factor <= 1.0 + 1e-9);
        prop_assert!(cert.reconstruction_error <= 1e-7);
    }

    #[test]
    fn spanner_is_deterministic(seed in any::<u64>(), n in 1usize..7, k in 1usize..40) {
        let actions = generate_instance(seed, n, k).actions;
        let budget = 3 * n;
        let a = compute_spanner(&actions, budget);
        let b = compute_spanner(&actions, budget);
        prop_assert_eq!(&a, &b);
        prop_assert!(a.len() <= budget.max(1));
        prop_assert!(a.members.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(certify(&actions, &a).unwrap().reconstruction_error <= 1e-7);
    }
}
