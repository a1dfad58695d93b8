//! Shared helpers for the integration suites: seeded operator corpora and
//! dense cross-check utilities.
#![allow(dead_code)] // each test binary uses its own subset

use nalgebra::DMatrix;
use num_complex::Complex64;

use prethermal::util::SplitMix64;
use prethermal::{dense, ExtensiveOperator, LadderString, Lattice, Letter, Pattern, Site};

pub const LETTERS: [Letter; 3] = [Letter::Plus, Letter::Minus, Letter::Z];

/// Random extensive operator on a chain: `terms` strings with supports of
/// up to `max_support` sites drawn from `0..sites`.
pub fn random_operator(
    rng: &mut SplitMix64,
    sites: usize,
    max_support: usize,
    terms: usize,
) -> ExtensiveOperator {
    let mut strings = Vec::with_capacity(terms);
    for _ in 0..terms {
        let k = 1 + rng.next_below(max_support);
        let mut chosen = std::collections::BTreeSet::new();
        while chosen.len() < k {
            chosen.insert(rng.next_below(sites) as i32);
        }
        let letters: Vec<(Site, Letter)> = chosen
            .into_iter()
            .map(|x| (Site::chain(x), LETTERS[rng.next_below(3)]))
            .collect();
        strings.push(LadderString::new(
            Pattern::new(letters).expect("distinct sites"),
            Complex64::new(rng.next_signed(), rng.next_signed()),
        ));
    }
    ExtensiveOperator::from_strings(strings)
}

/// Random self-adjoint operator `(R + R*) / 2`.
pub fn random_self_adjoint(
    rng: &mut SplitMix64,
    sites: usize,
    max_support: usize,
    terms: usize,
) -> ExtensiveOperator {
    let r = random_operator(rng, sites, max_support, terms);
    r.add(&r.adjoint()).scale(Complex64::new(0.5, 0.0))
}

pub fn dense_of(op: &ExtensiveOperator, sites: usize) -> DMatrix<Complex64> {
    let lat = Lattice::chain(sites).expect("chain");
    dense::densify(op, &lat).expect("densify").mat
}

pub fn commutator_dense(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a * b - b * a
}
