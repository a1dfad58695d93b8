//! Property tests for the algebra, homological solver, truncation ledger,
//! and conjugation series.

mod common;

use std::collections::BTreeSet;

use num_complex::Complex64;
use proptest::prelude::*;

use common::{commutator_dense, dense_of};
use prethermal::conjugation::{conjugate, ConjugationSettings};
use prethermal::truncation::{truncate, ErrorLedger, TruncationPolicy};
use prethermal::{
    dense, solve_homological, ExtensiveOperator, LadderString, Lattice, Letter, NumberOperator,
    Pattern, Site,
};

const SITES: usize = 5;
const LETTERS: [Letter; 3] = [Letter::Plus, Letter::Minus, Letter::Z];

fn arb_pattern() -> impl Strategy<Value = Pattern> {
    prop::collection::btree_map(0..SITES as i32, 0..3usize, 1..=3).prop_map(|m| {
        Pattern::new(
            m.into_iter()
                .map(|(x, l)| (Site::chain(x), LETTERS[l]))
                .collect(),
        )
        .expect("distinct sites by construction")
    })
}

fn arb_operator() -> impl Strategy<Value = ExtensiveOperator> {
    prop::collection::vec((arb_pattern(), -1.0..1.0f64, -1.0..1.0f64), 1..8).prop_map(|v| {
        ExtensiveOperator::from_strings(
            v.into_iter()
                .map(|(p, re, im)| LadderString::new(p, Complex64::new(re, im))),
        )
    })
}

fn arb_self_adjoint() -> impl Strategy<Value = ExtensiveOperator> {
    arb_operator().prop_map(|a| a.add(&a.adjoint()).scale(Complex64::new(0.5, 0.0)))
}

fn op_sites(a: &ExtensiveOperator) -> BTreeSet<Site> {
    a.terms()
        .flat_map(|t| t.support().iter().cloned())
        .collect()
}

proptest! {
    // dense faithfulness of the sparse algebra
    #[test]
    fn dense_faithfulness(a in arb_operator(), b in arb_operator()) {
        let (ad, bd) = (dense_of(&a, SITES), dense_of(&b, SITES));
        let tol = 1e-12 * (1.0 + ad.norm() + bd.norm() + ad.norm() * bd.norm());

        let prod = dense_of(&a.multiply(&b), SITES);
        prop_assert!((prod - &ad * &bd).norm() <= tol);

        let comm = dense_of(&a.commutator(&b), SITES);
        prop_assert!((comm - commutator_dense(&ad, &bd)).norm() <= tol);

        let sum = dense_of(&a.add(&b), SITES);
        prop_assert!((sum - (&ad + &bd)).norm() <= tol);

        let c = Complex64::new(0.37, -1.25);
        let scaled = dense_of(&a.scale(c), SITES);
        prop_assert!((scaled - &ad * c).norm() <= tol);

        let adj = dense_of(&a.adjoint(), SITES);
        prop_assert!((adj - ad.adjoint()).norm() <= tol);
    }

    #[test]
    fn norm_triangle_and_monotonicity(a in arb_operator(), b in arb_operator()) {
        let sum = a.add(&b);
        for kappa in [0.0, 0.5, 1.0] {
            let na = a.kappa_norm(kappa).unwrap();
            let nb = b.kappa_norm(kappa).unwrap();
            let ns = sum.kappa_norm(kappa).unwrap();
            prop_assert!(ns <= (na + nb) * (1.0 + 1e-12) + 1e-15);
        }
        let n0 = a.kappa_norm(0.3).unwrap();
        let n1 = a.kappa_norm(0.9).unwrap();
        prop_assert!(n0 <= n1 * (1.0 + 1e-12));
    }

    #[test]
    fn adjoint_is_involutive(a in arb_operator()) {
        let twice = a.adjoint().adjoint();
        prop_assert_eq!(
            twice.strings().collect::<Vec<_>>(),
            a.strings().collect::<Vec<_>>()
        );
    }

    // commutator output stays inside the inputs' sites and carries no
    // identity component
    #[test]
    fn commutator_locality(a in arb_operator(), b in arb_operator()) {
        let comm = a.commutator(&b);
        let allowed: BTreeSet<Site> =
            op_sites(&a).union(&op_sites(&b)).cloned().collect();
        for term in comm.terms() {
            prop_assert!(!term.support().is_empty(), "commutators are traceless");
            for site in term.support() {
                prop_assert!(allowed.contains(site));
            }
        }
    }

    // everything dropped by truncation is accounted in the ledger, in
    // operator-norm units
    #[test]
    fn ledger_soundness(
        a in arb_operator(),
        cap in 1usize..4,
        floor in 0.0..0.5f64,
    ) {
        let policy = TruncationPolicy::new(cap, floor, 1e-12).unwrap();
        let mut ledger = ErrorLedger::new(SITES);
        let kept = truncate(&a, &policy, 0.7, &mut ledger);
        prop_assert!(kept.max_support() <= cap);
        let dropped = dense_of(&a, SITES) - dense_of(&kept, SITES);
        let measured = dense::operator_norm(&dropped);
        prop_assert!(measured <= ledger.total_op_bound() * (1.0 + 1e-12) + 1e-15);
    }

    // homological solver: resonance, idempotence, linearity
    #[test]
    fn homological_properties(a in arb_self_adjoint(), b in arb_self_adjoint()) {
        let lat = Lattice::chain(SITES).unwrap();
        let n_op = NumberOperator::uniform_z(&lat);
        let nd = dense::densify_number(&n_op, &lat).unwrap().mat;

        let (g, bres) = solve_homological(&a, &n_op);
        // resonance: [B, N] = 0
        let bd = dense_of(&bres, SITES);
        let norm_b = dense::operator_norm(&bd);
        prop_assert!(
            dense::operator_norm(&commutator_dense(&bd, &nd)) <= 1e-12 * (1.0 + norm_b)
        );
        // idempotence
        let (g2, b2) = solve_homological(&bres, &n_op);
        prop_assert!(g2.is_zero());
        prop_assert_eq!(
            b2.strings().collect::<Vec<_>>(),
            bres.strings().collect::<Vec<_>>()
        );
        // self-adjointness preserved
        prop_assert!(g.is_self_adjoint(1e-12));
        prop_assert!(bres.is_self_adjoint(1e-12));
        // linearity against add and scale
        let c = Complex64::new(-0.6, 0.0);
        let (ga, ba) = solve_homological(&a.scale(c).add(&b), &n_op);
        let (gb, bb) = solve_homological(&b, &n_op);
        let want_g = g.scale(c).add(&gb);
        let want_b = bres.scale(c).add(&bb);
        let dg = ga.add(&want_g.scale(Complex64::new(-1.0, 0.0)));
        let db = ba.add(&want_b.scale(Complex64::new(-1.0, 0.0)));
        prop_assert!(dg.kappa_norm(0.5).unwrap() <= 1e-12);
        prop_assert!(db.kappa_norm(0.5).unwrap() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // conjugation preserves the spectrum up to the certified losses
    #[test]
    fn conjugation_unitarity_proxy(
        g_raw in arb_self_adjoint(),
        a in arb_self_adjoint(),
    ) {
        prop_assume!(!g_raw.is_zero() && !a.is_zero());
        let (kappa, delta) = (0.5, 0.5);
        // scale the generator into the certified contraction regime
        let ng = g_raw.kappa_norm(kappa + delta).unwrap();
        let g = g_raw.scale(Complex64::new(0.4 * 0.5 * delta * kappa.exp() / (4.0 * ng), 0.0));
        let policy = TruncationPolicy::new(SITES, 1e-14, 1e-12).unwrap();
        let mut ledger = ErrorLedger::new(SITES);
        let (out, report) = conjugate(
            &g, &a, kappa, delta, &policy, &mut ledger,
            &ConjugationSettings::default(),
        ).unwrap();
        prop_assert!(report.ratio <= 0.5);

        let (mut ev_in, _) = dense::hermitian_eigen(&dense_of(&a, SITES)).unwrap();
        let (mut ev_out, _) = dense::hermitian_eigen(&dense_of(&out, SITES)).unwrap();
        let sort = |v: &mut nalgebra::DVector<f64>| {
            let mut s: Vec<f64> = v.iter().copied().collect();
            s.sort_by(|x, y| x.partial_cmp(y).unwrap());
            s
        };
        let budget = SITES as f64 * report.tail_bound
            + ledger.total_op_bound()
            + 1e-11 * (1.0 + ev_in.amax());
        for (x, y) in sort(&mut ev_in).iter().zip(sort(&mut ev_out).iter()) {
            prop_assert!((x - y).abs() <= budget, "{x} vs {y}, budget {budget:e}");
        }

        // tail-bound soundness against the dense exponential
        let gd = dense_of(&g, SITES);
        let u = dense::expm_hermitian_scaled(&gd, Complex64::new(0.0, -1.0)).unwrap();
        let want = &u * dense_of(&a, SITES) * u.adjoint();
        let dev = dense::diff_norm(&(dense_of(&out, SITES) - want));
        prop_assert!(dev <= budget);
    }
}
