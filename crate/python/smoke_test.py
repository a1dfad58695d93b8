#!/usr/bin/env python3
"""End-to-end smoke test of the Python bindings.

Builds nothing itself: expects `cargo build --release -p prethermal-py`
to have produced `target/release/libprethermal_py.so`. The shared library
is staged under a temp directory with the importable module name.

Run from the repository root:  python3 python/smoke_test.py
"""
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def stage_module() -> None:
    candidates = [
        REPO / "target" / "release" / "libprethermal_py.so",
        REPO / "target" / "debug" / "libprethermal_py.so",
    ]
    for lib in candidates:
        if lib.exists():
            stage = Path(tempfile.mkdtemp(prefix="prethermal_py_"))
            shutil.copy2(lib, stage / "prethermal_py.so")
            sys.path.insert(0, str(stage))
            return
    sys.exit("build the bindings first: cargo build --release -p prethermal-py")


stage_module()
import prethermal_py as pt  # noqa: E402


def main() -> None:
    sites = 5
    lat = pt.Lattice.chain(sites)
    assert len(lat) == sites and lat.dim() == 1

    n_op, p = pt.ising_chain(lat)
    kappa = 1.0
    norm_p = p.kappa_norm(kappa)
    assert abs(norm_p - 2.0 * math.exp(2.0)) < 1e-10, norm_p
    eps0 = pt.compute_eps0(norm_p)
    assert abs(eps0 - 4.6101276751049538e-05) < 1e-15, eps0

    # homological solve: the residual -i[G,N] + A - B must vanish
    g, b = pt.solve_homological(p, n_op)
    n_ext = n_op.as_operator()
    residual = g.commutator(n_ext).scale(0.0, -1.0).add(p).add(b.scale(-1.0, 0.0))
    assert residual.kappa_norm(kappa) < 1e-12
    avg = pt.average_over_flow(p, n_op, 12)
    assert avg.add(b.scale(-1.0, 0.0)).kappa_norm(kappa) < 1e-12

    # serialization round-trip
    text = p.to_jsonl()
    assert pt.Operator.from_jsonl(text).to_jsonl() == text

    # research-mode normal form on the small chain
    eps = 0.05
    outcome = pt.run_normal_form(n_op, p, sites, kappa, eps, n_star=2)
    assert outcome.n_star() == 2
    rows = outcome.bound_checks()
    assert len(rows) == 2 and rows[0]["n"] == 0

    z_final = outcome.z_final()
    assert z_final.commutator(n_ext).kappa_norm(kappa) < 1e-12
    dressed_n = outcome.dressed_n()
    assert dressed_n.is_self_adjoint(1e-9)
    assert pt.spectrum_integerness(dressed_n, lat) < 1e-9

    # the dressed operator drifts less than the bare one
    h = n_ext.add(p.scale(eps, 0.0))
    times = [0.5, 2.0, 8.0, 32.0]
    bare = pt.heisenberg_drift(n_ext, h, lat, times)
    dressed = pt.heisenberg_drift(dressed_n, h, lat, times)
    assert all(d <= b for d, b in zip(dressed, bare)), (dressed, bare)

    # magnetization plateau for the all-up state
    curve = pt.expectation_curve(n_ext, h, lat, "all_up", [0.0] + times)
    assert abs(curve[0] - sites) < 1e-12
    assert max(abs(v - curve[0]) for v in curve) < 0.05

    constants = pt.theory_constants(kappa, norm_p)
    assert abs(constants["c_eta"] - 8.0) < 1e-12
    assert constants["q"] < 0.5

    print("smoke test passed")


if __name__ == "__main__":
    main()
