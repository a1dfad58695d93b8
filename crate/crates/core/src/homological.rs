//! `ad_N` eigendecomposition and the homological equation
//! `-i [G, N] + A = B` with `[B, N] = 0`.
//!
//! In the ladder/Z basis each string is an `ad_N` eigenoperator with an
//! integer eigenvalue `m` (`[T, N] = m T`), so the splitting is exact and
//! closed-form: `B` collects the resonant (`m = 0`) strings and
//! `G = sum_{m != 0} (-i/m) A_m`. The periodic-flow average
//! `(1/2pi) int e^{-iN theta} A e^{iN theta} dtheta` is retained as an
//! independent quadrature cross-check.

use num_complex::Complex64;

use crate::algebra::{Accumulator, ExtensiveOperator, LocalTerm, NumberOperator};
use crate::{Error, Result};

/// One `ad_N` eigencomponent of a local term: `[component, N] = m component`.
#[derive(Clone, Debug)]
pub struct AdEigenComponent {
    pub m: i64,
    pub component: LocalTerm,
}

/// Split a local term into `ad_N` eigencomponents, merged by eigenvalue and
/// sorted by `m`. The components sum back to the input exactly.
pub fn ad_n_decompose(term: &LocalTerm, n_op: &NumberOperator) -> Vec<AdEigenComponent> {
    let mut by_m: std::collections::BTreeMap<i64, Accumulator> = std::collections::BTreeMap::new();
    for (pattern, coeff) in term.strings() {
        by_m.entry(pattern.ad_weight(n_op))
            .or_insert_with(Accumulator::new)
            .add(pattern.clone(), *coeff);
    }
    by_m.into_iter()
        .filter_map(|(m, acc)| {
            let op = acc.into_operator();
            // all patterns share the term's support, so there is one term
            let component = op.terms().next().cloned();
            component.map(|component| AdEigenComponent { m, component })
        })
        .collect()
}

/// Largest `|m|` over the strings of an operator.
pub fn max_ad_weight(op: &ExtensiveOperator, n_op: &NumberOperator) -> i64 {
    op.strings()
        .map(|s| s.pattern.ad_weight(n_op).abs())
        .max()
        .unwrap_or(0)
}

/// Solve `-i [G, N] + A = B` with `[B, N] = 0`.
///
/// Returns `(G, B)`. Exact before truncation: `B` keeps the `m = 0`
/// strings of `A`, `G` carries `(-i/m)` times each `m != 0` string, so
/// `||B||_kappa <= ||A||_kappa` and `||G||_kappa <= 2 pi ||A||_kappa`
/// hold for every kappa, with self-adjointness preserved.
pub fn solve_homological(
    a: &ExtensiveOperator,
    n_op: &NumberOperator,
) -> (ExtensiveOperator, ExtensiveOperator) {
    let mut g = Accumulator::new();
    let mut b = Accumulator::new();
    for s in a.strings() {
        let m = s.pattern.ad_weight(n_op);
        if m == 0 {
            b.add(s.pattern, s.coeff);
        } else {
            g.add(s.pattern, s.coeff * Complex64::new(0.0, -1.0 / m as f64));
        }
    }
    (g.into_operator(), b.into_operator())
}

/// Resonant projection by discrete average over the periodic flow of `N`:
/// `(1/M) sum_k e^{-iN theta_k} A e^{iN theta_k}`, `theta_k = 2 pi k / M`.
///
/// Requires `M > 2 m_max + 1` so the average is exact for the trigonometric
/// polynomial integrand. Cross-validates the closed-form `B` of
/// [`solve_homological`]; the phase sums are evaluated numerically rather
/// than reduced symbolically.
pub fn average_over_flow(
    a: &ExtensiveOperator,
    n_op: &NumberOperator,
    nodes: usize,
) -> Result<ExtensiveOperator> {
    let m_max = max_ad_weight(a, n_op);
    let required = 2 * m_max.unsigned_abs() as usize + 1;
    if nodes <= required {
        return Err(Error::QuadratureNodes {
            required,
            got: nodes,
        });
    }
    let mut acc = Accumulator::new();
    for s in a.strings() {
        let m = s.pattern.ad_weight(n_op);
        // e^{-iN theta} T e^{iN theta} = e^{i m theta} T for [T, N] = m T
        let mut avg = Complex64::default();
        for k in 0..nodes {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
            avg += Complex64::new(0.0, m as f64 * theta).exp();
        }
        avg /= nodes as f64;
        acc.add(s.pattern, s.coeff * avg);
    }
    Ok(acc.into_operator())
}
