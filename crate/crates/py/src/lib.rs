//! Python bindings: the main operator types and operations, the normal-form
//! driver, and the dense verification measurements.
//!
//! Build with `cargo build --release -p prethermal-py`; the resulting
//! `libprethermal_py.so` imports as the module `prethermal_py` once renamed
//! (see `python/smoke_test.py`).

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use prethermal::normal_form::{ConstantsInput, NormalFormParams, NormalFormResult};
use prethermal::truncation::TruncationPolicy;
use prethermal::{dense, homological, ising, normal_form, serialize};

fn err_to_py(e: prethermal::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Lattice", from_py_object)]
#[derive(Clone)]
struct PyLattice {
    inner: prethermal::Lattice,
}

#[pymethods]
impl PyLattice {
    /// One-dimensional chain with `sites` sites at coordinates 0..sites.
    #[staticmethod]
    fn chain(sites: usize) -> PyResult<Self> {
        Ok(PyLattice {
            inner: prethermal::Lattice::chain(sites).map_err(err_to_py)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn sites(&self) -> Vec<Vec<i32>> {
        self.inner
            .sites()
            .into_iter()
            .map(|s| s.coords().to_vec())
            .collect()
    }
}

#[pyclass(name = "NumberOperator", from_py_object)]
#[derive(Clone)]
struct PyNumberOperator {
    inner: prethermal::NumberOperator,
}

#[pymethods]
impl PyNumberOperator {
    /// Total z-magnetization `sum_x Z_x`.
    #[staticmethod]
    fn uniform_z(lattice: &PyLattice) -> Self {
        PyNumberOperator {
            inner: prethermal::NumberOperator::uniform_z(&lattice.inner),
        }
    }

    fn as_operator(&self) -> PyOperator {
        PyOperator {
            inner: self.inner.as_extensive(),
        }
    }
}

#[pyclass(name = "Operator", from_py_object)]
#[derive(Clone)]
struct PyOperator {
    inner: prethermal::ExtensiveOperator,
}

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn zero() -> Self {
        PyOperator {
            inner: prethermal::ExtensiveOperator::zero(),
        }
    }

    /// Parse the JSON-lines operator format.
    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Ok(PyOperator {
            inner: serialize::from_str(text).map_err(err_to_py)?,
        })
    }

    fn to_jsonl(&self) -> PyResult<String> {
        serialize::to_string(&self.inner).map_err(err_to_py)
    }

    fn kappa_norm(&self, kappa: f64) -> PyResult<f64> {
        self.inner.kappa_norm(kappa).map_err(err_to_py)
    }

    fn add(&self, other: &PyOperator) -> Self {
        PyOperator {
            inner: self.inner.add(&other.inner),
        }
    }

    fn scale(&self, re: f64, im: f64) -> Self {
        PyOperator {
            inner: self.inner.scale(Complex64::new(re, im)),
        }
    }

    fn adjoint(&self) -> Self {
        PyOperator {
            inner: self.inner.adjoint(),
        }
    }

    fn multiply(&self, other: &PyOperator) -> Self {
        PyOperator {
            inner: self.inner.multiply(&other.inner),
        }
    }

    fn commutator(&self, other: &PyOperator) -> Self {
        PyOperator {
            inner: self.inner.commutator(&other.inner),
        }
    }

    fn num_strings(&self) -> usize {
        self.inner.num_strings()
    }

    fn max_support(&self) -> usize {
        self.inner.max_support()
    }

    fn is_self_adjoint(&self, tol: f64) -> bool {
        self.inner.is_self_adjoint(tol)
    }
}

#[pyclass(name = "NormalFormOutcome")]
struct PyNormalFormOutcome {
    result: NormalFormResult,
}

#[pymethods]
impl PyNormalFormOutcome {
    fn dressed_n(&self) -> PyOperator {
        PyOperator {
            inner: self.result.dressed_n.clone(),
        }
    }

    fn dressed_z(&self) -> PyOperator {
        PyOperator {
            inner: self.result.dressed_z.clone(),
        }
    }

    fn z_final(&self) -> PyOperator {
        PyOperator {
            inner: self.result.z_final.clone(),
        }
    }

    fn p_final(&self) -> PyOperator {
        PyOperator {
            inner: self.result.p_final.clone(),
        }
    }

    fn generators(&self) -> Vec<PyOperator> {
        self.result
            .generators
            .iter()
            .map(|g| PyOperator { inner: g.clone() })
            .collect()
    }

    fn eps(&self) -> f64 {
        self.result.params.eps
    }

    fn eps0(&self) -> f64 {
        self.result.params.eps0
    }

    fn n_star(&self) -> usize {
        self.result.params.n_star
    }

    /// `(total kappa-norm, total operator-norm bound, certified)`.
    fn ledger_totals(&self) -> (f64, f64, bool) {
        (
            self.result.ledger.total_kappa_norm(),
            self.result.ledger.total_op_bound(),
            self.result.ledger.is_certified(),
        )
    }

    fn bound_checks<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.result
            .bound_checks
            .iter()
            .map(|row| {
                let d = PyDict::new(py);
                d.set_item("n", row.n)?;
                d.set_item("norm_p_measured", row.norm_p_measured)?;
                d.set_item("norm_p_bound", row.norm_p_bound)?;
                d.set_item("norm_z_measured", row.norm_z_measured)?;
                d.set_item("norm_z_bound", row.norm_z_bound)?;
                d.set_item("norm_g_measured", row.norm_g_measured)?;
                d.set_item("norm_g_bound", row.norm_g_bound)?;
                d.set_item("ledger_increment", row.ledger_increment)?;
                d.set_item("contraction_ratio", row.contraction_ratio)?;
                Ok(d)
            })
            .collect()
    }

    fn constants<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.result.constants;
        let d = PyDict::new(py);
        d.set_item("eps0", c.eps0)?;
        d.set_item("c1", c.c1)?;
        d.set_item("c2", c.c2)?;
        d.set_item("c3", c.c3)?;
        d.set_item("c4", c.c4)?;
        d.set_item("c_eta", c.c_eta)?;
        d.set_item("k", c.k)?;
        d.set_item("q", c.q)?;
        d.set_item("c_lr", c.c_lr)?;
        Ok(d)
    }
}

/// `(N, P)` for the shipped Ising chain.
#[pyfunction]
fn ising_chain(lattice: &PyLattice) -> (PyNumberOperator, PyOperator) {
    let (n, p) = ising::ising_chain(&lattice.inner);
    (PyNumberOperator { inner: n }, PyOperator { inner: p })
}

#[pyfunction]
fn compute_eps0(norm_p_kappa: f64) -> f64 {
    normal_form::compute_eps0(norm_p_kappa)
}

/// Solve `-i [G, N] + A = B`; returns `(G, B)`.
#[pyfunction]
fn solve_homological(a: &PyOperator, n: &PyNumberOperator) -> (PyOperator, PyOperator) {
    let (g, b) = homological::solve_homological(&a.inner, &n.inner);
    (PyOperator { inner: g }, PyOperator { inner: b })
}

/// Resonant projection by discrete flow average over `nodes` angles.
#[pyfunction]
fn average_over_flow(a: &PyOperator, n: &PyNumberOperator, nodes: usize) -> PyResult<PyOperator> {
    Ok(PyOperator {
        inner: homological::average_over_flow(&a.inner, &n.inner, nodes).map_err(err_to_py)?,
    })
}

/// Run the normal form. `n_star=None` runs certified mode
/// (requires `eps < eps0`); an explicit `n_star` runs research mode.
#[pyfunction]
#[pyo3(signature = (n, p, sites, kappa, eps, n_star=None, support_cap=None, coeff_floor=1e-13, series_tol=1e-12))]
#[allow(clippy::too_many_arguments)]
fn run_normal_form(
    n: &PyNumberOperator,
    p: &PyOperator,
    sites: usize,
    kappa: f64,
    eps: f64,
    n_star: Option<usize>,
    support_cap: Option<usize>,
    coeff_floor: f64,
    series_tol: f64,
) -> PyResult<PyNormalFormOutcome> {
    let policy = TruncationPolicy::new(support_cap.unwrap_or(sites), coeff_floor, series_tol)
        .map_err(err_to_py)?;
    let norm_p = p.inner.kappa_norm(kappa).map_err(err_to_py)?;
    let params = match n_star {
        Some(ns) => NormalFormParams::research(kappa, eps, ns, norm_p, policy),
        None => NormalFormParams::certified(kappa, eps, norm_p, None, policy),
    }
    .map_err(err_to_py)?;
    let result = normal_form::run(&n.inner, &p.inner, &params, sites).map_err(err_to_py)?;
    Ok(PyNormalFormOutcome { result })
}

/// Dense matrix of an operator, row-major, as nested complex lists.
#[pyfunction]
fn densify(op: &PyOperator, lattice: &PyLattice) -> PyResult<Vec<Vec<Complex64>>> {
    let d = dense::densify(&op.inner, &lattice.inner).map_err(err_to_py)?;
    Ok((0..d.dim)
        .map(|i| (0..d.dim).map(|j| d.mat[(i, j)]).collect())
        .collect())
}

/// Maximum distance of a Hermitian operator's spectrum to the integers.
#[pyfunction]
fn spectrum_integerness(op: &PyOperator, lattice: &PyLattice) -> PyResult<f64> {
    let d = dense::densify(&op.inner, &lattice.inner).map_err(err_to_py)?;
    dense::spectrum_integerness(&d).map_err(err_to_py)
}

/// Per-site Heisenberg drift of `a` under `h` at the given times.
#[pyfunction]
fn heisenberg_drift(
    a: &PyOperator,
    h: &PyOperator,
    lattice: &PyLattice,
    times: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let ad = dense::densify(&a.inner, &lattice.inner).map_err(err_to_py)?;
    let hd = dense::densify(&h.inner, &lattice.inner).map_err(err_to_py)?;
    let curve =
        dense::heisenberg_drift(&ad, &hd, &times, lattice.inner.len(), None).map_err(err_to_py)?;
    Ok(curve.values)
}

/// Expectation curve of `a` under `h` for a named initial state
/// (`"all_up"`, `"neel"`, or `"random:<seed>"`).
#[pyfunction]
fn expectation_curve(
    a: &PyOperator,
    h: &PyOperator,
    lattice: &PyLattice,
    state: &str,
    times: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let sites = lattice.inner.len();
    let dim = 1usize << sites;
    let psi = match state {
        "all_up" => dense::all_up_state(dim),
        "neel" => dense::neel_state(sites),
        s if s.starts_with("random:") => {
            let seed: u64 = s["random:".len()..]
                .parse()
                .map_err(|_| PyValueError::new_err("random state needs an integer seed"))?;
            dense::random_state(dim, seed)
        }
        _ => return Err(PyValueError::new_err("unknown state spec")),
    };
    let ad = dense::densify(&a.inner, &lattice.inner).map_err(err_to_py)?;
    let hd = dense::densify(&h.inner, &lattice.inner).map_err(err_to_py)?;
    dense::expectation_trace(&psi, &ad, &hd, &times).map_err(err_to_py)
}

/// Closed-form constants as a dict.
#[pyfunction]
#[pyo3(signature = (kappa, norm_p, eps0=None, c_lr=1.0, dim=1, norm_n=std::f64::consts::E, obs_support=1, eps=0.0))]
#[allow(clippy::too_many_arguments)]
fn theory_constants<'py>(
    py: Python<'py>,
    kappa: f64,
    norm_p: f64,
    eps0: Option<f64>,
    c_lr: f64,
    dim: usize,
    norm_n: f64,
    obs_support: usize,
    eps: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let eps0 = eps0.unwrap_or_else(|| normal_form::compute_eps0(norm_p));
    let c = normal_form::theory_constants(
        kappa,
        norm_p,
        eps0,
        &ConstantsInput {
            c_lr,
            dim,
            norm_n_kappa: norm_n,
            obs_support,
            eps,
            rho: None,
        },
    );
    let d = PyDict::new(py);
    let json = serde_json::to_value(c).expect("constants serialize");
    for (k, v) in json.as_object().expect("object") {
        d.set_item(k, v.as_f64().expect("float"))?;
    }
    Ok(d)
}

#[pymodule]
fn prethermal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyNumberOperator>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyNormalFormOutcome>()?;
    m.add_function(wrap_pyfunction!(ising_chain, m)?)?;
    m.add_function(wrap_pyfunction!(compute_eps0, m)?)?;
    m.add_function(wrap_pyfunction!(solve_homological, m)?)?;
    m.add_function(wrap_pyfunction!(average_over_flow, m)?)?;
    m.add_function(wrap_pyfunction!(run_normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(densify, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_integerness, m)?)?;
    m.add_function(wrap_pyfunction!(heisenberg_drift, m)?)?;
    m.add_function(wrap_pyfunction!(expectation_curve, m)?)?;
    m.add_function(wrap_pyfunction!(theory_constants, m)?)?;
    Ok(())
}
