//! Monte-Carlo audits of module invariants at desk scale.

use ddx_core::informativity::{
    informative_for_identification, informative_for_stabilization, Dataset, PriorKnowledge,
};
use ddx_core::inputdesign::generate_pe_input;
use ddx_core::matrixlab::{data_rank, is_schur, spectral_radius, vstack};
use ddx_core::online::{
    predicted_length, run_online_design, Branch, DefaultPolicy, GaussianPolicy, SimulatedPlant,
};
use ddx_core::random::{self, derive_seed};
use ddx_core::synthesis::{
    identify, lmi_min_eigenvalue, stabilize_fullrank, stabilize_restricted, stabilize_with_prior,
    verify_gain_on_consistent_set, Witness,
};
use ddx_core::system::{adversarial_initial_state, random_system, SystemClass};
use ddx_core::tolerance::LMI_MARGIN;
use nalgebra::{DMatrix, DVector};

const SEED: u64 = 0x5eed;

fn dims(i: u64, max_n: usize, max_m: usize) -> (usize, usize) {
    (2 + (i as usize % (max_n - 1)), 1 + (i as usize / 7) % max_m)
}

#[test]
fn fullrank_certificates_are_sound() {
    let mut certified = 0;
    for i in 0..200 {
        let seed = derive_seed(SEED, i);
        let (n, m) = dims(i, 6, 3);
        let class = if i % 2 == 0 {
            SystemClass::Controllable
        } else {
            SystemClass::StabilizableNotControllable
        };
        let sys = random_system(class, n, m, seed).unwrap();
        let mut rng = random::rng(seed);
        let x0 = random::gaussian_vector(&mut rng, n);
        // random inputs of moderate length; full row rank X₋ is typical but not forced
        let u = random::gaussian_matrix(&mut rng, m, n + m + (i as usize % 3));
        let d = Dataset::from_system(&sys, &x0, &u).unwrap();
        if data_rank(&d.x_minus()).rank < n {
            continue;
        }
        let Some(cert) = stabilize_fullrank(&d).unwrap() else {
            continue;
        };
        certified += 1;
        let Witness::FullRank { theta } = &cert.witness else {
            panic!("trial {i}: wrong witness kind")
        };
        let xm_theta = d.x_minus() * theta;
        let inv = xm_theta.clone().try_inverse().unwrap();
        assert!(spectral_radius(&(d.x_plus() * theta * &inv)).unwrap() < 1.0);
        let lhs = &cert.k * d.x_minus();
        let rhs = d.u_minus() * theta * &inv * d.x_minus();
        assert!(
            (&lhs - &rhs).norm() <= 1e-8 * (1.0 + rhs.norm()),
            "trial {i}"
        );
        assert!(lmi_min_eigenvalue(&d.x_minus(), &d.x_plus(), theta) >= LMI_MARGIN);
    }
    assert!(certified > 100, "only {certified} certified datasets");
}

#[test]
fn restricted_gains_stabilize_truth() {
    for i in 0..200 {
        let seed = derive_seed(SEED ^ 1, i);
        let (n, m) = dims(i, 6, 3);
        let sys = random_system(SystemClass::StabilizableNotControllable, n, m, seed).unwrap();
        let x0 = adversarial_initial_state(&sys, seed).unwrap();
        let u = generate_pe_input(m, n + 1, None, seed).unwrap();
        let d = Dataset::from_system(&sys, &x0, &u).unwrap();
        let cert = stabilize_restricted(&d).unwrap_or_else(|e| panic!("trial {i}: {e}"));
        let Witness::SubspaceRestricted { v, k_r, .. } = &cert.witness else {
            panic!("trial {i}: wrong witness kind")
        };
        let x = random::gaussian_vector(&mut random::rng(seed), n);
        assert!((&cert.k * &x - k_r * (v.transpose() * &x)).norm() < 1e-10 * (1.0 + cert.k.norm()));
        assert!(
            is_schur(&sys.closed_loop(&cert.k).unwrap()).unwrap(),
            "trial {i}: radius {}",
            spectral_radius(&sys.closed_loop(&cert.k).unwrap()).unwrap()
        );
    }
}

#[test]
fn gain_from_identifiable_data_stabilizes_identified_system() {
    for i in 0..100 {
        let seed = derive_seed(SEED ^ 2, i);
        let (n, m) = dims(i, 5, 3);
        let sys = random_system(SystemClass::Controllable, n, m, seed).unwrap();
        let u = generate_pe_input(m, n + 1, None, seed).unwrap();
        let x0 = random::gaussian_vector(&mut random::rng(seed), n);
        let d = Dataset::from_system(&sys, &x0, &u).unwrap();
        let id = identify(&d).unwrap();
        for pk in [
            PriorKnowledge::All,
            PriorKnowledge::Controllable,
            PriorKnowledge::Stabilizable,
        ] {
            let cert = stabilize_with_prior(&d, pk).unwrap();
            assert!(
                is_schur(&id.closed_loop(&cert.k).unwrap()).unwrap(),
                "trial {i} {pk}"
            );
        }
    }
}

#[test]
fn full_rank_verdicts_agree_for_stab_and_all() {
    for i in 0..200 {
        let seed = derive_seed(SEED ^ 3, i);
        let (n, m) = dims(i, 6, 3);
        let class = [
            SystemClass::Controllable,
            SystemClass::StabilizableNotControllable,
            SystemClass::NotStabilizable,
        ][i as usize % 3];
        let sys = random_system(class, n, m, seed).unwrap();
        let mut rng = random::rng(seed);
        let x0 = random::gaussian_vector(&mut rng, n);
        let u = random::gaussian_matrix(&mut rng, m, n + (i as usize % (m + 2)));
        let d = Dataset::from_system(&sys, &x0, &u).unwrap();
        if data_rank(&d.x_minus()).rank < n {
            continue;
        }
        let stab = informative_for_stabilization(&d, PriorKnowledge::Stabilizable).informative;
        let all = informative_for_stabilization(&d, PriorKnowledge::All).informative;
        assert_eq!(stab, all, "trial {i}");
    }
}

#[test]
fn scaling_preserves_verdicts_and_gains() {
    for i in 0..100 {
        let seed = derive_seed(SEED ^ 4, i);
        let (n, m) = dims(i, 5, 2);
        let class = if i % 2 == 0 {
            SystemClass::Controllable
        } else {
            SystemClass::StabilizableNotControllable
        };
        let sys = random_system(class, n, m, seed).unwrap();
        let x0 = if i % 4 == 1 {
            adversarial_initial_state(&sys, seed).unwrap()
        } else {
            random::gaussian_vector(&mut random::rng(seed), n)
        };
        let len = if i % 3 == 0 {
            n + m - 1
        } else {
            (n + 1) * (m + 1) - 1
        };
        let u = generate_pe_input(m, 1, Some(len), seed).unwrap();
        let d = Dataset::from_system(&sys, &x0, &u).unwrap();
        for c in [-3.0, 1e-3, 250.0] {
            let s = d.scaled(c);
            for pk in [
                PriorKnowledge::All,
                PriorKnowledge::Controllable,
                PriorKnowledge::Stabilizable,
            ] {
                assert_eq!(
                    informative_for_identification(&d, pk).informative,
                    informative_for_identification(&s, pk).informative,
                    "trial {i} c={c}"
                );
                let v = informative_for_stabilization(&d, pk);
                let vs = informative_for_stabilization(&s, pk);
                assert_eq!(v.informative, vs.informative, "trial {i} c={c} {pk}");
                if let Ok(cert) = stabilize_with_prior(&s, pk) {
                    let audit = verify_gain_on_consistent_set(&d, pk, &cert.k, 20, seed).unwrap();
                    assert_eq!(
                        audit.stabilized, audit.evaluated,
                        "trial {i} c={c} {pk}: {audit:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn online_runs_grow_rank_and_exit_certified() {
    for i in 0..150 {
        let seed = derive_seed(SEED ^ 5, i);
        let n = 1 + i as usize % 6;
        let m = 1 + (i as usize / 6) % 3;
        let class = if n == 1 || i % 2 == 0 {
            SystemClass::Controllable
        } else {
            SystemClass::StabilizableNotControllable
        };
        let sys = random_system(class, n, m, seed).unwrap();
        let x0 = match i % 3 {
            0 => DVector::zeros(n),
            1 => adversarial_initial_state(&sys, seed).unwrap_or_else(|| DVector::zeros(n)),
            _ => random::gaussian_vector(&mut random::rng(seed), n),
        };
        let mut plant = SimulatedPlant::new(sys.clone(), x0.clone()).unwrap();
        let run = if i % 2 == 0 {
            run_online_design(&mut plant, &mut DefaultPolicy, n + m + 2)
        } else {
            run_online_design(&mut plant, &mut GaussianPolicy::new(seed), n + m + 2)
        }
        .unwrap_or_else(|e| panic!("trial {i}: {e}"));
        let d = &run.dataset;
        assert_eq!(d.len(), predicted_length(&sys, &x0).unwrap(), "trial {i}");
        assert_eq!(run.trace.len(), d.len() + 1);
        for t in 1..=d.len() {
            let z = d.prefix(t).unwrap().stacked();
            assert_eq!(data_rank(&z).rank, t, "trial {i}: rank stalls at t = {t}");
        }
        let last = run.trace.last().unwrap();
        assert_eq!(last.branch, Branch::Terminated);
        assert_eq!(last.rank_xu, Some(last.rank_x.unwrap() + m));
        assert!(
            last.membership_residual.unwrap()
                <= 1e-8 * (1.0 + DVector::from_vec(last.x.clone()).norm())
        );
        for e in run
            .trace
            .iter()
            .filter(|e| e.branch == Branch::KernelSteered)
        {
            let w = DMatrix::from_iterator(
                n + m,
                1,
                e.xi.clone()
                    .unwrap()
                    .into_iter()
                    .chain(e.eta.clone().unwrap()),
            );
            let z = vstack(
                &d.states().columns(0, e.t).into_owned(),
                &d.inputs().columns(0, e.t).into_owned(),
            )
            .unwrap();
            assert!(
                (w.transpose() * &z).norm() <= 1e-8 * (1.0 + z.norm()),
                "trial {i}"
            );
            let xu =
                DVector::from_iterator(n + m, e.x.iter().chain(e.u.as_ref().unwrap()).copied());
            assert!((w.column(0).dot(&xu)).abs() > 1e-8, "trial {i}");
        }
    }
}
