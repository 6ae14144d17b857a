use ddx_core::informativity::{informative_for_identification, Dataset, PriorKnowledge};
use ddx_core::inputdesign::{generate_pe_input, pe_order};
use ddx_core::matrixlab::{self, hankel, image, left_kernel_basis, numerical_rank};
use ddx_core::random::{self, derive_seed};
use ddx_core::system::{random_system, reachable_subspace, LtiSystem, SystemClass};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c)
            .prop_map(move |v| DMatrix::from_row_slice(r, c, &v))
    })
}

/// Random matrix of prescribed rank, so that rank-deficient cases are exercised.
fn low_rank(seed: u64, rows: usize, cols: usize, rank: usize) -> DMatrix<f64> {
    let mut rng = random::rng(seed);
    random::gaussian_matrix(&mut rng, rows, rank) * random::gaussian_matrix(&mut rng, rank, cols)
}

fn class_from(i: u8) -> SystemClass {
    match i % 3 {
        0 => SystemClass::Controllable,
        1 => SystemClass::StabilizableNotControllable,
        _ => SystemClass::NotStabilizable,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_is_transpose_invariant(m in matrix(8, 8)) {
        prop_assert_eq!(numerical_rank(&m, None).rank, numerical_rank(&m.transpose(), None).rank);
    }

    #[test]
    fn low_rank_transpose_invariant(seed in any::<u64>(), rows in 1usize..=8, cols in 1usize..=8, r in 0usize..=8) {
        let r = r.min(rows).min(cols);
        let m = low_rank(seed, rows, cols, r);
        let a = numerical_rank(&m, None).rank;
        prop_assert_eq!(a, r);
        prop_assert_eq!(a, numerical_rank(&m.transpose(), None).rank);
    }

    #[test]
    fn image_contains_columns(seed in any::<u64>(), rows in 1usize..=8, cols in 1usize..=8, r in 0usize..=8) {
        let m = low_rank(seed, rows, cols, r.min(rows).min(cols));
        let space = image(&m, None);
        let scale = m.norm().max(1.0);
        for c in m.column_iter() {
            prop_assert!(space.residual(&c.into_owned()) <= 1e-10 * scale);
        }
    }

    #[test]
    fn rank_nullity(seed in any::<u64>(), rows in 1usize..=8, cols in 1usize..=8, r in 0usize..=8) {
        let m = low_rank(seed, rows, cols, r.min(rows).min(cols));
        let dim = image(&m, None).dim();
        let kernel = left_kernel_basis(&m, None);
        prop_assert_eq!(dim + kernel.len(), rows);
        for w in &kernel {
            prop_assert!((w.transpose() * &m).norm() <= 1e-9 * m.norm().max(1.0));
        }
    }

    #[test]
    fn periodic_hankel_rank_bounded(seed in any::<u64>(), m in 1usize..=3, p in 1usize..=4, extra in 1usize..=3, reps in 3usize..=6) {
        let k = p + extra;
        let mut rng = random::rng(seed);
        let period = random::gaussian_matrix(&mut rng, m, p);
        let t = p * reps + k;
        let u = DMatrix::from_fn(m, t, |r, c| period[(r, c % p)]);
        let h = hankel(&u, k).unwrap();
        prop_assert!(numerical_rank(&h, None).rank <= p * m);
    }

    #[test]
    fn simulate_is_linear(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=3, t in 1usize..=10) {
        let sys = random_system(SystemClass::Controllable, n, m, seed).unwrap();
        let mut rng = random::rng(derive_seed(seed, 1));
        let x0 = random::gaussian_vector(&mut rng, n);
        let x1 = random::gaussian_vector(&mut rng, n);
        let u0 = random::gaussian_matrix(&mut rng, m, t);
        let u1 = random::gaussian_matrix(&mut rng, m, t);
        let lhs = sys.simulate(&x0, &u0).unwrap() + sys.simulate(&x1, &u1).unwrap();
        let rhs = sys.simulate(&(&x0 + &x1), &(&u0 + &u1)).unwrap();
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn reachable_grows_with_initial_state(seed in any::<u64>(), class in 0u8..3, n in 2usize..=6, m in 1usize..=3) {
        let sys = random_system(class_from(class), n, m, seed).unwrap();
        let mut rng = random::rng(derive_seed(seed, 2));
        let x0 = random::gaussian_vector(&mut rng, n);
        let small = sys.reachable();
        let big = sys.reachable_from(&x0).unwrap();
        prop_assert!(big.contains(&small).unwrap());
    }

    #[test]
    fn trajectory_stays_in_reachable_subspace(seed in any::<u64>(), class in 0u8..3, n in 2usize..=6, m in 1usize..=3, adversarial in any::<bool>()) {
        let sys = random_system(class_from(class), n, m, seed).unwrap();
        let mut rng = random::rng(derive_seed(seed, 3));
        let x0 = if adversarial {
            ddx_core::system::adversarial_initial_state(&sys, seed).unwrap_or_else(|| DVector::zeros(n))
        } else {
            random::gaussian_vector(&mut rng, n)
        };
        let u = random::gaussian_matrix(&mut rng, m, 3 * n);
        let xs = sys.simulate(&x0, &u).unwrap();
        let reach = sys.reachable_from(&x0).unwrap();
        for c in xs.column_iter() {
            let c = c.into_owned();
            prop_assert!(reach.residual(&c) <= 10.0 * reach.tol() * (1.0 + c.norm()));
        }
    }

    #[test]
    fn generated_inputs_are_exciting(seed in any::<u64>(), m in 1usize..=3, k in 1usize..=7) {
        let u = generate_pe_input(m, k, None, seed).unwrap();
        prop_assert!(pe_order(&u) >= k);
    }

    #[test]
    fn appending_samples_keeps_identifiability(seed in any::<u64>(), n in 1usize..=5, m in 1usize..=3, extra in 1usize..=4) {
        let sys = random_system(SystemClass::Controllable, n, m, seed).unwrap();
        let u = generate_pe_input(m, n + 1, Some((n + 1) * (m + 1) - 1 + extra), seed).unwrap();
        let x0 = random::gaussian_vector(&mut random::rng(seed), n);
        let full = Dataset::from_system(&sys, &x0, &u).unwrap();
        let mut seen = false;
        for len in 1..=full.len() {
            let v = informative_for_identification(&full.prefix(len).unwrap(), PriorKnowledge::All).informative;
            prop_assert!(!(seen && !v), "verdict flipped back at length {}", len);
            seen |= v;
        }
        prop_assert!(seen);
    }
}

#[test]
fn pbh_agrees_with_reachable_dimension() {
    for i in 0..200u64 {
        let n = 1 + (i % 6) as usize;
        let m = 1 + (i % 3) as usize;
        let class = if n == 1 {
            SystemClass::Controllable
        } else {
            class_from(i as u8)
        };
        let sys = random_system(class, n, m, derive_seed(99, i)).unwrap();
        let controllable = sys.classify() == SystemClass::Controllable;
        let full = reachable_subspace(sys.a(), sys.b()).unwrap().dim() == n;
        assert_eq!(controllable, full, "trial {i}: {sys:?}");
        assert_eq!(sys.classify(), class, "trial {i}");
    }
}

#[test]
fn unbalanced_system_still_classified() {
    // uncontrollable stable mode plus a controllable mode of very different scale
    let sys = LtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[1e3, 0.0, 0.0, 0.5]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
    )
    .unwrap();
    assert_eq!(sys.classify(), SystemClass::StabilizableNotControllable);
    assert_eq!(matrixlab::spectral_radius(sys.a()).unwrap(), 1e3);
}
