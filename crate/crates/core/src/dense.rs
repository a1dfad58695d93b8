//! Exact-diagonalization harness.
//!
//! Densifies extensive operators on one-dimensional chains small enough to
//! hold the full `2^n` matrix, evolves exactly through Hermitian
//! eigendecomposition, and measures drift, effective-dynamics error,
//! spectrum integerness, and expectation curves.
//!
//! Basis convention (fixed so serialized dense artifacts are comparable):
//! site-major, first lattice site = most significant bit, spin-up = bit 0.
//! On two sites `Z_0` densifies to `diag(1, 1, -1, -1)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::{ExtensiveOperator, Letter, NumberOperator};
use crate::lattice::Lattice;
use crate::util::SplitMix64;
use crate::{Error, Result, MAX_DENSE_SITES};

/// Asymmetry tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Full matrix of an operator on the whole lattice.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub dim: usize,
    pub mat: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.mat.adjoint();
        (0..self.dim)
            .flat_map(|i| (0..self.dim).map(move |j| (i, j)))
            .map(|(i, j)| (self.mat[(i, j)] - adj[(i, j)]).norm())
            .fold(0.0, f64::max)
    }
}

fn check_lattice(lattice: &Lattice) -> Result<usize> {
    if lattice.dim() != 1 {
        return Err(Error::NotOneDimensional(lattice.dim()));
    }
    let n = lattice.len();
    if n > MAX_DENSE_SITES {
        return Err(Error::LatticeTooLarge {
            sites: n,
            max: MAX_DENSE_SITES,
        });
    }
    Ok(n)
}

/// Densify an extensive operator on a one-dimensional lattice.
pub fn densify(op: &ExtensiveOperator, lattice: &Lattice) -> Result<DenseOperator> {
    let n = check_lattice(lattice)?;
    let dim = 1usize << n;
    let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
    for s in op.strings() {
        // bit position of each letter's site (site-major)
        let mut positions = Vec::with_capacity(s.pattern.len());
        for (site, letter) in s.pattern.letters() {
            let idx = lattice.index_of(site).ok_or_else(|| {
                Error::InvalidParams(format!("site {site:?} outside the lattice"))
            })?;
            positions.push((n - 1 - idx, *letter));
        }
        for col in 0..dim {
            let mut row = col;
            let mut factor = 1.0f64;
            let mut dead = false;
            for &(shift, letter) in &positions {
                let bit = (col >> shift) & 1;
                match letter {
                    Letter::Z => {
                        if bit == 1 {
                            factor = -factor;
                        }
                    }
                    Letter::Plus => {
                        if bit == 1 {
                            row &= !(1 << shift);
                        } else {
                            dead = true;
                            break;
                        }
                    }
                    Letter::Minus => {
                        if bit == 0 {
                            row |= 1 << shift;
                        } else {
                            dead = true;
                            break;
                        }
                    }
                }
            }
            if !dead {
                mat[(row, col)] += s.coeff * factor;
            }
        }
    }
    Ok(DenseOperator { dim, mat })
}

/// Densify a diagonal number operator (fast path).
pub fn densify_number(n_op: &NumberOperator, lattice: &Lattice) -> Result<DenseOperator> {
    let n = check_lattice(lattice)?;
    let dim = 1usize << n;
    let mut diag = vec![0i64; dim];
    for (site, &(up, down)) in n_op.entries() {
        let idx = lattice
            .index_of(site)
            .ok_or_else(|| Error::InvalidParams(format!("site {site:?} outside the lattice")))?;
        let shift = n - 1 - idx;
        for (state, d) in diag.iter_mut().enumerate() {
            *d += if (state >> shift) & 1 == 0 { up } else { down };
        }
    }
    let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
    for (state, d) in diag.iter().enumerate() {
        mat[(state, state)] = Complex64::new(*d as f64, 0.0);
    }
    Ok(DenseOperator { dim, mat })
}

/// Largest singular value by power iteration on `M* M`.
///
/// Deterministic start vector; relative stagnation tolerance `tol`,
/// iteration cap `max_iter`.
pub fn operator_norm_power(m: &DMatrix<Complex64>, tol: f64, max_iter: usize) -> f64 {
    let dim = m.ncols();
    if dim == 0 {
        return 0.0;
    }
    let mut rng = SplitMix64::new(0x5eed ^ dim as u64);
    let mut v = DVector::<Complex64>::from_fn(dim, |_, _| {
        Complex64::new(rng.next_signed(), rng.next_signed())
    });
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= Complex64::new(norm, 0.0);
    let mut sigma = 0.0f64;
    for _ in 0..max_iter {
        let w = m * &v;
        let s = w.norm();
        if s == 0.0 {
            return 0.0;
        }
        let u = m.adjoint() * w;
        let un = u.norm();
        if un == 0.0 {
            return s;
        }
        let next = un.sqrt();
        if (next - sigma).abs() <= tol * next.max(1.0) {
            return next;
        }
        sigma = next;
        v = u / Complex64::new(un, 0.0);
    }
    sigma
}

/// Exact operator norm (largest singular value).
///
/// Small matrices go through a dense eigensolve of `M* M`; larger ones fall
/// back to tightly-toleranced power iteration.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    let dim = m.ncols();
    if dim == 0 {
        return 0.0;
    }
    if dim <= 256 {
        let gram = m.adjoint() * m;
        let eig = gram.symmetric_eigen();
        eig.eigenvalues
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.max(0.0)))
            .sqrt()
    } else {
        operator_norm_power(m, 1e-13, 50_000)
    }
}

/// Operator norm of a dense difference, per the harness convention
/// (power iteration, tolerance 1e-10, 10 000 iteration cap).
pub fn diff_norm(m: &DMatrix<Complex64>) -> f64 {
    operator_norm_power(m, 1e-10, 10_000)
}

/// Eigendecomposition of a Hermitian matrix. Errors if the asymmetry
/// exceeds [`HERMITICITY_TOL`]; the symmetrized matrix is decomposed.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(DVector<f64>, DMatrix<Complex64>)> {
    let adj = m.adjoint();
    let defect = (m - &adj).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            defect,
            tol: HERMITICITY_TOL,
        });
    }
    let sym = (m + adj) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// `V e^{scale * diag(eigs)} V*` for a Hermitian `H = V diag(eigs) V*`.
pub fn expm_hermitian_scaled(
    m: &DMatrix<Complex64>,
    scale: Complex64,
) -> Result<DMatrix<Complex64>> {
    let (eigs, v) = hermitian_eigen(m)?;
    let mut pv = v.adjoint();
    for (i, &l) in eigs.iter().enumerate() {
        let p = (scale * l).exp();
        for j in 0..pv.ncols() {
            pv[(i, j)] *= p;
        }
    }
    Ok(&v * pv)
}

/// A measured curve with optional theory-bound companions.
#[derive(Clone, Debug)]
pub struct DriftCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Theory bound per point; `None` where no unconditional bound applies.
    pub bound_values: Vec<Option<f64>>,
}

impl DriftCurve {
    fn validate(times: &[f64]) -> Result<()> {
        if times.is_empty() {
            return Err(Error::InvalidParams("empty time grid".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Geometric time grid `t0 * factor^k`, `k = 0..count`.
pub fn geometric_times(t0: f64, factor: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * factor.powi(k as i32)).collect()
}

/// Heisenberg drift `||e^{iHt} A e^{-iHt} - A||_op / sites` on a time grid.
///
/// `H` is eigendecomposed once; each point is exact up to linear-algebra
/// precision. `bound` supplies the optional theory companion per time.
pub fn heisenberg_drift(
    a: &DenseOperator,
    h: &DenseOperator,
    times: &[f64],
    sites: usize,
    bound: Option<&dyn Fn(f64) -> Option<f64>>,
) -> Result<DriftCurve> {
    DriftCurve::validate(times)?;
    let (eigs, v) = hermitian_eigen(&h.mat)?;
    let w = v.adjoint() * &a.mat * &v;
    let dim = w.nrows();
    let mut values = Vec::with_capacity(times.len());
    let mut bound_values = Vec::with_capacity(times.len());
    for &t in times {
        // in the H eigenbasis: (A(t) - A)_{jk} = W_{jk} (e^{i(l_j - l_k) t} - 1)
        let mut d = DMatrix::<Complex64>::zeros(dim, dim);
        for j in 0..dim {
            for k in 0..dim {
                let phase = Complex64::new(0.0, (eigs[j] - eigs[k]) * t).exp();
                d[(j, k)] = w[(j, k)] * (phase - Complex64::new(1.0, 0.0));
            }
        }
        values.push(diff_norm(&d) / sites as f64);
        bound_values.push(bound.and_then(|f| f(t)));
    }
    Ok(DriftCurve {
        times: times.to_vec(),
        values,
        bound_values,
    })
}

/// `||e^{iHt} O e^{-iHt} - e^{iH_eff t} O e^{-iH_eff t}||_op` on a time grid.
pub fn effective_dynamics_error(
    o: &DenseOperator,
    h: &DenseOperator,
    h_eff: &DenseOperator,
    times: &[f64],
    bound: Option<&dyn Fn(f64) -> Option<f64>>,
) -> Result<DriftCurve> {
    DriftCurve::validate(times)?;
    let (e1, v1) = hermitian_eigen(&h.mat)?;
    let (e2, v2) = hermitian_eigen(&h_eff.mat)?;
    let w1 = v1.adjoint() * &o.mat * &v1;
    let w2 = v2.adjoint() * &o.mat * &v2;
    let dim = o.dim;
    let mut values = Vec::with_capacity(times.len());
    let mut bound_values = Vec::with_capacity(times.len());
    for &t in times {
        let evolved = |w: &DMatrix<Complex64>, eigs: &DVector<f64>, v: &DMatrix<Complex64>| {
            let mut wt = w.clone();
            for j in 0..dim {
                for k in 0..dim {
                    wt[(j, k)] *= Complex64::new(0.0, (eigs[j] - eigs[k]) * t).exp();
                }
            }
            v * wt * v.adjoint()
        };
        let d = evolved(&w1, &e1, &v1) - evolved(&w2, &e2, &v2);
        values.push(diff_norm(&d));
        bound_values.push(bound.and_then(|f| f(t)));
    }
    Ok(DriftCurve {
        times: times.to_vec(),
        values,
        bound_values,
    })
}

/// Maximum distance of the spectrum of a Hermitian matrix to the integers.
pub fn spectrum_integerness(m: &DenseOperator) -> Result<f64> {
    let (eigs, _) = hermitian_eigen(&m.mat)?;
    Ok(eigs
        .iter()
        .map(|&l| (l - l.round()).abs())
        .fold(0.0, f64::max))
}

/// Expectation curve `<psi(t)| A |psi(t)>` under `H`.
pub fn expectation_trace(
    state: &DVector<Complex64>,
    a: &DenseOperator,
    h: &DenseOperator,
    times: &[f64],
) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::InvalidParams("empty time grid".into()));
    }
    let defect = (state.norm() - 1.0).abs();
    if defect > 1e-10 {
        return Err(Error::NotNormalized { defect });
    }
    let (eigs, v) = hermitian_eigen(&h.mat)?;
    let c = v.adjoint() * state;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let ct = DVector::<Complex64>::from_iterator(
            c.len(),
            c.iter()
                .enumerate()
                .map(|(j, cj)| cj * Complex64::new(0.0, -eigs[j] * t).exp()),
        );
        let psi = &v * ct;
        let val = psi.adjoint() * &a.mat * &psi;
        out.push(val[(0, 0)].re);
    }
    Ok(out)
}

/// Exact propagator `e^{-iHt}` (used by unitarity checks).
pub fn propagator(h: &DenseOperator, t: f64) -> Result<DMatrix<Complex64>> {
    expm_hermitian_scaled(&h.mat, Complex64::new(0.0, -t))
}

/// Basis state with all spins up.
pub fn all_up_state(dim: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[0] = Complex64::new(1.0, 0.0);
    v
}

/// Alternating up/down product state (up on even lattice positions).
pub fn neel_state(sites: usize) -> DVector<Complex64> {
    let dim = 1usize << sites;
    let mut idx = 0usize;
    for pos in (1..sites).step_by(2) {
        idx |= 1 << (sites - 1 - pos);
    }
    let mut v = DVector::zeros(dim);
    v[idx] = Complex64::new(1.0, 0.0);
    v
}

/// Deterministic pseudo-random unit vector (complex Gaussian components).
pub fn random_state(dim: usize, seed: u64) -> DVector<Complex64> {
    let mut rng = SplitMix64::new(seed);
    let mut gauss = || {
        let u1 = rng.next_f64().max(f64::MIN_POSITIVE);
        let u2 = rng.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut v = DVector::<Complex64>::from_fn(dim, |_, _| Complex64::new(0.0, 0.0));
    for i in 0..dim {
        v[i] = Complex64::new(gauss(), gauss());
    }
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}
