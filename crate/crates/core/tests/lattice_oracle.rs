mod common;

use common::{brute_force_d2, dual_lattice_wce2, primes_up_to};
use gausscub::lattice::{cbc_construct_with_errors, korobov_wce, GeneratingVector, KorobovParams};
use proptest::prelude::*;

fn closed_form2(n: u64, z: &[u64], alpha: u32) -> f64 {
    let v = GeneratingVector::new(n, z.to_vec()).unwrap();
    korobov_wce(&v, &KorobovParams::unweighted(alpha, z.len()).unwrap())
        .unwrap()
        .powi(2)
}

#[test]
fn residue_masses_sum_to_the_full_series() {
    // sum over all residues is 1 + 2 zeta(2 alpha)
    for (alpha, zeta) in [(1, std::f64::consts::PI.powi(2) / 6.0), (2, std::f64::consts::PI.powi(4) / 90.0)] {
        for n in [1, 2, 7, 30] {
            let total: f64 = (0..n).map(|r| common::residue_mass(n, r, alpha)).sum();
            assert!((total - (1.0 + 2.0 * zeta)).abs() <= 1e-13, "n={n}");
        }
    }
}

#[test]
fn closed_form_matches_dual_sum_small_cases() {
    for n in [2, 5, 8, 13, 21] {
        for alpha in [1, 2] {
            for z in [vec![1], vec![1, 3 % n.max(2)], vec![1, 2 % n, 5 % n]] {
                if z.contains(&0) {
                    continue;
                }
                let a = closed_form2(n, &z, alpha);
                let b = dual_lattice_wce2(n, &z, alpha);
                assert!((a - b).abs() <= 1e-9, "n={n} z={z:?} alpha={alpha}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn cbc_matches_brute_force_for_small_primes() {
    for n in primes_up_to(31) {
        for alpha in [1, 2] {
            let out = cbc_construct_with_errors(n, 2, &KorobovParams::unweighted(alpha, 2).unwrap()).unwrap();
            let (z, best) = brute_force_d2(n, alpha, 1e-9);
            assert_eq!(out.vector.z(), &[1, z], "N={n} alpha={alpha}");
            assert!((out.errors[1].powi(2) - best).abs() <= 1e-9 * best.max(1e-12));
        }
    }
}

#[test]
fn unit_multiples_give_the_same_error() {
    // (c, c z) generates the same point set as (1, z) for prime N
    let n = 31;
    for c in 1..n {
        for z in [3, 12] {
            let a = closed_form2(n, &[1, z], 2);
            let b = closed_form2(n, &[c, c * z % n], 2);
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "c={c}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn closed_form_matches_dual_sum(n in 2u64..40, z in prop::collection::vec(1u64..1000, 1..3), alpha in 1u32..3) {
        let z: Vec<u64> = z.into_iter().map(|c| 1 + c % (n - 1)).collect();
        let a = closed_form2(n, &z, alpha);
        let b = dual_lattice_wce2(n, &z, alpha);
        prop_assert!((a - b).abs() <= 1e-9);
        prop_assert!(a >= 0.0);
    }
}
