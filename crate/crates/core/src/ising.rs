//! Shipped demo model: quantum Ising chain in a strong transverse field,
//! `H = sum_x Z_x - eps * sum_{<x,y>} X_x X_y`.
//!
//! The number operator is the total z-magnetization `N = sum_x Z_x`; the
//! perturbation is `P = -sum_bonds X_x X_{x+1}` with one term per unordered
//! nearest-neighbor bond.

use num_complex::Complex64;

use crate::algebra::{ExtensiveOperator, LadderString, Letter, NumberOperator, Pattern};
use crate::lattice::Lattice;

/// Builds `(N, P)` for a chain lattice.
pub fn ising_chain(lattice: &Lattice) -> (NumberOperator, ExtensiveOperator) {
    assert_eq!(lattice.dim(), 1, "the shipped Ising model is a chain");
    let n_op = NumberOperator::uniform_z(lattice);
    let sites = lattice.sites();
    let mut strings = Vec::new();
    for w in sites.windows(2) {
        // -X_x X_{x+1} expanded in ladder letters: four strings, coeff -1 each
        for la in [Letter::Plus, Letter::Minus] {
            for lb in [Letter::Plus, Letter::Minus] {
                strings.push(LadderString::new(
                    Pattern::new(vec![(w[0].clone(), la), (w[1].clone(), lb)]).unwrap(),
                    Complex64::new(-1.0, 0.0),
                ));
            }
        }
    }
    (n_op, ExtensiveOperator::from_strings(strings))
}

/// Kappa-norm of the Ising coupling as quoted with the single-bond-per-site
/// counting convention: `e^{2 kappa}`.
pub fn ising_norm_p_single_bond(kappa: f64) -> f64 {
    (2.0 * kappa).exp()
}

/// Kappa-norm of the shipped `P` under this crate's convention: an interior
/// site belongs to two unit-norm bonds, giving `2 e^{2 kappa}` for chains
/// with at least three sites.
pub fn ising_norm_p_measured(kappa: f64, sites: usize) -> f64 {
    let bonds_through_site = if sites >= 3 { 2.0 } else { 1.0 };
    bonds_through_site * (2.0 * kappa).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;

    #[test]
    fn norm_conventions() {
        let lat = Lattice::chain(6).unwrap();
        let (_, p) = ising_chain(&lat);
        let measured = p.kappa_norm(1.0).unwrap();
        assert!((measured - ising_norm_p_measured(1.0, 6)).abs() < 1e-10);
        // the single-bond counting reads e^{2 kappa}
        assert!((measured - 2.0 * ising_norm_p_single_bond(1.0)).abs() < 1e-10);
    }

    #[test]
    fn p_matches_pauli_xx() {
        // dense cross-check of the ladder expansion on 3 sites
        let lat = Lattice::chain(3).unwrap();
        let (_, p) = ising_chain(&lat);
        let pd = dense::densify(&p, &lat).unwrap();
        let x = |i: usize| {
            let mut m = nalgebra::DMatrix::<Complex64>::identity(1, 1);
            for k in 0..3 {
                let f = if k == i {
                    nalgebra::DMatrix::from_row_slice(
                        2,
                        2,
                        &[
                            Complex64::new(0.0, 0.0),
                            Complex64::new(1.0, 0.0),
                            Complex64::new(1.0, 0.0),
                            Complex64::new(0.0, 0.0),
                        ],
                    )
                } else {
                    nalgebra::DMatrix::identity(2, 2)
                };
                m = m.kronecker(&f);
            }
            m
        };
        let want = -(x(0) * x(1) + x(1) * x(2));
        assert!((pd.mat - want).norm() < 1e-13);
    }

    #[test]
    fn p_is_self_adjoint() {
        let lat = Lattice::chain(5).unwrap();
        let (_, p) = ising_chain(&lat);
        assert!(p.is_self_adjoint(1e-15));
    }
}
