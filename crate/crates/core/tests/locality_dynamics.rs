use proptest::prelude::*;
use specflow_core::car::MajoranaPolynomial;
use specflow_core::dynamics::{
    fit_envelope, lr_commutator_profile, lr_envelope_inequality, restriction_convergence, Evolution,
};
use specflow_core::harness::{chain_interaction, find_scenario, lr_operators, Params};
use specflow_core::lattice::LatticeSpec;
use specflow_core::locality::{commutator_bound, quasi_local_norm, random_quasilocal, InteractionFamily};

fn chain(n: usize) -> LatticeSpec {
    LatticeSpec::chain(n).unwrap()
}

fn bonds(n: usize) -> Vec<(usize, usize)> {
    (0..n - 1).map(|x| (x, x + 1)).collect()
}

fn lr_chain(sites: usize) -> InteractionFamily {
    let mut p = Params::new();
    p.insert("sites".into(), sites as f64);
    find_scenario("lr-chain").unwrap().build(&p).unwrap()
}

#[test]
fn grouping_is_a_regrouping() {
    let l = chain(6);
    let phi = chain_interaction(l, &bonds(6), 0.8, 0.3, 1.7);
    let mut sum = MajoranaPolynomial::zero(l);
    for g in phi.group_by_center() {
        sum = &sum + &g;
    }
    assert!(sum.to_dense().max_diff(&phi.total_dense()) <= 1e-13);
}

#[test]
fn grouped_terms_obey_the_norm_remark() {
    let l = chain(6);
    let phi = chain_interaction(l, &bonds(6), 1.0, 0.5, 2.0);
    for nu in 0..=4 {
        let nu = nu as f64;
        let bound = 3.0 * phi.norm(nu);
        for (x, g) in phi.group_by_center().iter().enumerate() {
            assert!(quasi_local_norm(g, nu, x).unwrap() <= bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn restriction_error_decreases_to_zero() {
    let family = lr_chain(6);
    let l = family.lattice();
    let a = MajoranaPolynomial::number(l, 2);
    let errs = restriction_convergence(&family, &a, 2, 0.5).unwrap();
    assert!(errs[0] > 0.0);
    for k in 1..errs.len() {
        assert!(errs[k] <= errs[k - 1] + 1e-9, "{errs:?}");
    }
    assert!(*errs.last().unwrap() <= 1e-12);
}

#[test]
fn lr_profile_on_ten_sites() {
    let family = lr_chain(10);
    let (a, probes) = lr_operators(family.lattice(), 17);
    let evolution = Evolution::from_family(&family).unwrap();
    let times = [0.0, 0.5, 1.0, 1.5];
    let samples = lr_commutator_profile(&evolution, &a, &probes, &times).unwrap();
    for s in samples.iter().filter(|s| s.t == 0.0) {
        assert_eq!(s.commutator_norm, 0.0);
    }
    let env = fit_envelope(&samples);
    for s in &samples {
        assert!(env.bound(s.t, s.distance, s.scale) >= s.commutator_norm);
    }
    for &t in &times[1..] {
        let row: Vec<f64> = samples.iter().filter(|s| s.t == t).map(|s| s.commutator_norm).collect();
        assert!(row.last().unwrap() <= row.first().unwrap(), "t={t}: {row:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn commutator_bound_holds(seed in any::<u64>(), x in 0usize..6, y in 0usize..6) {
        let l = chain(6);
        let a = random_quasilocal(l, seed, y, 3.0, true).unwrap();
        let b = random_quasilocal(l, seed ^ 1, x, 2.0, false).unwrap();
        for nu in [0.0, 1.0, 2.0] {
            for m in [0.0, 1.0, 2.0] {
                let r = commutator_bound(&a, y, &b, x, nu, m).unwrap();
                prop_assert!(r.holds(), "nu={} m={}: {} > {}", nu, m, r.lhs, r.rhs);
            }
        }
    }

    #[test]
    fn quasilocal_norms(seed in any::<u64>(), x in 0usize..5) {
        let l = chain(5);
        let nu_star = 4.0;
        let a = random_quasilocal(l, seed, x, nu_star, true).unwrap();
        prop_assert!(a.parity_projections().1.is_zero());
        prop_assert!(a.norm() <= 2.0 + 1e-12);
        let mut prev = 0.0;
        for nu in [0.0, 0.5, 1.0, 2.0, 2.9] {
            let n = quasi_local_norm(&a, nu, x).unwrap();
            prop_assert!(n >= prev);
            prev = n;
            let k_max = l.exhaustion_radius(x);
            let bound: f64 = (0..=k_max).map(|k| 2.0 * (1.0 + k as f64).powf(nu - nu_star)).sum();
            prop_assert!(n <= 2.0 * bound);
        }
    }

    #[test]
    fn function_estimate(x in 0.0f64..1e6, n in 1.0f64..1e3, t in 1e-6f64..50.0, nu in 0.0f64..10.0) {
        prop_assert!(lr_envelope_inequality(x, n, t, nu));
    }
}
