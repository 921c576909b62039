"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line with the measured numbers; pytest
prints them in the terminal summary.  Run directly with
``python3 tests/test_acceptance.py`` to get the same lines without pytest.
"""

import functools
import io
import json
import math
import sys
import tempfile
import time
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.stats import chi2

from conftest import ACCEPTANCE_LINES
from dirac_index.callias import callias_index
from dirac_index.cli import ONED_PRESETS, main
from dirac_index.clifford import build_clifford
from dirac_index.evolution import EvolutionConfig, propagate, unitarity_defect
from dirac_index.heat_trace import REAL_ABS_TOL, REAL_REL_TOL, heat_trace, heat_trace_radial, wedge_density, witten_limit
from dirac_index.oned_oracle import OneDModel, refinement_table
from dirac_index.potential import CutoffSpec, apply_cutoff, hedgehog, hedgehog_radial_limit, make_builtin
from dirac_index.quadrature import spatial_rule
from dirac_index.witten_ds import (
    SIGN_CONVENTIONS,
    build_example_loop,
    ds_witten_index,
    example_closed_form,
    hedgehog_profile,
    su2_degree,
    suspension_map,
)

HEAT_RESULTS = []  # every heat-trace evaluation, for the realness criterion


def record(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _heat(*args, **kwargs):
    res = heat_trace(*args, **kwargs)
    HEAT_RESULTS.append(res)
    return res


CUTOFFS = (CutoffSpec(1.0, 1.0), CutoffSpec(2.0, 3.0))


@functools.cache
def hedgehog_trace(cut_index, t):
    cut = CUTOFFS[cut_index]
    return _heat(apply_cutoff(hedgehog(), cut), None, t, cut)


# --------------------------------------------------------------------------


def test_01_clifford_suite():
    start = time.perf_counter()
    worst = 0.0
    for d in (1, 3, 5):
        rep = build_clifford(d)
        c = rep.generators
        eye = np.eye(rep.r)
        for i in range(d):
            worst = max(worst, np.abs(c[i].conj().T + c[i]).max())
            for j in range(d):
                worst = max(worst, np.abs(c[i] @ c[j] + c[j] @ c[i] + 2 * (i == j) * eye).max())
        # every word of odd length < d is traceless
        for n in range(1, d, 2):
            for word in np.ndindex(*(d,) * n):
                P = eye.astype(complex)
                for k in word:
                    P = P @ c[k]
                worst = max(worst, abs(np.trace(P)))
        full = functools.reduce(np.matmul, c)
        kappa = (2j) ** ((d - 1) // 2) * (-1j) ** d
        worst = max(worst, abs(np.trace(full) - kappa), abs(rep.kappa_c - kappa))
    elapsed = time.perf_counter() - start
    record(1, "Clifford suite", worst <= 1e-12 and elapsed < 1.0, f"max residual {worst:.2e}, {elapsed:.2f} s")


def test_02_null_cases():
    start = time.perf_counter()
    worst_ratio, worst_point = 0.0, 0.0
    rng = np.random.default_rng(2)
    x = rng.normal(scale=3.0, size=(50, 3))
    s = rng.dirichlet(np.ones(3), size=50)
    rep = build_clifford(3)
    ok = True
    for name in ("constant", "scalar"):
        cut = CutoffSpec(1.0, 1.0)
        fld = apply_cutoff(make_builtin(name), cut)
        rule = spatial_rule(3, list(cut.breakpoints), r_max=400, sphere_n=12, radial_n=12, tail_n=12)
        for t in (0.5, 1.0, 4.0):
            res = _heat(fld, rep, t, cut, spatial=rule)
            ok &= abs(res.value) <= res.quad_error
            worst_ratio = max(worst_ratio, abs(res.value))
            worst_point = max(worst_point, np.abs(wedge_density(fld, rep, x, t, s)).max())
    elapsed = time.perf_counter() - start
    ok &= worst_point <= 1e-12 and elapsed < 10.0
    record(
        2,
        "null cases",
        bool(ok),
        f"max |heat trace| {worst_ratio:.1e} (within quad error), max |wedge density| {worst_point:.1e}, {elapsed:.1f} s",
    )


def test_03_cutoff_independence():
    start = time.perf_counter()
    ok, details = True, []
    for t in (1.0, 4.0):
        a, b = hedgehog_trace(0, t), hedgehog_trace(1, t)
        diff = abs(a.value - b.value)
        rel = diff / abs(a.value)
        oracle = -chi2.cdf(2 * t, 3)
        ok &= diff <= a.quad_error + b.quad_error and rel <= 1e-2
        ok &= abs(a.value - oracle) <= a.quad_error and abs(b.value - oracle) <= b.quad_error
        details.append(f"t={t:g}: {a.value:.8f} vs {b.value:.8f} (rel {rel:.1e}, oracle {oracle:.8f})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    record(3, "cutoff independence", bool(ok), "; ".join(details) + f"; {elapsed:.1f} s")


def test_04_radial_limit_consistency():
    start = time.perf_counter()
    full = hedgehog_trace(0, 1.0)
    rho = CutoffSpec(1.0, 1.0)
    radial = heat_trace_radial(hedgehog_radial_limit(), None, 1.0, rho, hedgehog().A0)
    HEAT_RESULTS.append(radial)
    diff = abs(full.value - radial.value)
    budget = full.quad_error + radial.quad_error
    elapsed = time.perf_counter() - start
    ok = diff <= budget and elapsed < 300
    record(
        4,
        "radial-limit consistency",
        ok,
        f"cutoff {full.value:.8f}, radial {radial.value:.8f}, diff {diff:.1e} <= budget {budget:.1e}, {elapsed:.1f} s",
    )


@functools.cache
def index_pipeline():
    start = time.perf_counter()
    cut = CUTOFFS[0]
    field = apply_cutoff(hedgehog(), cut)
    w = witten_limit(field, None, cut)
    cal = callias_index(hedgehog())
    deg = su2_degree(suspension_map(hedgehog(), 8.0), box=1.5, n=24)
    return w, cal, deg, time.perf_counter() - start


def test_05_realness():
    if not HEAT_RESULTS:
        test_02_null_cases()
    w = index_pipeline()[0]
    pairs = [(r.value, r.imag_residual) for r in HEAT_RESULTS] + list(zip(w.values, w.imag_residuals))
    excess = max(imag - (REAL_REL_TOL * abs(v) + REAL_ABS_TOL) for v, imag in pairs)
    record(5, "realness", excess <= 0, f"{len(pairs)} evaluations, max (imag residual - bound) {excess:+.1e}")


def test_06_index_pipeline():
    w, cal, deg, elapsed = index_pipeline()
    sign = SIGN_CONVENTIONS["callias_vs_suspension_degree"]
    ok = (
        abs(w.plateau - cal.index) <= 1e-2
        and w.integer_distance <= 1e-2
        and cal.integer_distance <= 1e-2
        and w.nearest_integer == cal.nearest_integer == sign * deg
        and elapsed < 600
    )
    record(
        6,
        "index pipeline",
        ok,
        f"plateau {w.plateau:.6f} (spread {w.plateau_spread:.1e}), Callias {cal.index:.6f}, "
        f"degree {deg} x sign {sign:+d}, {elapsed:.1f} s",
    )


def test_07_evolution_suite():
    start = time.perf_counter()
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s3 = np.diag([1.0, -1.0]).astype(complex)
    A = lambda y: s1 + y * s3
    cfg = EvolutionConfig(order=4, step=1e-2)
    identity = np.array_equal(propagate(A, 0.7, 0.7, cfg), np.eye(2))
    rng = np.random.default_rng(7)
    cocycle, unitary = 0.0, 0.0
    for a, b, c in rng.uniform(-2, 2, size=(10, 3)):
        Uac = propagate(A, a, c, cfg)
        cocycle = max(cocycle, np.abs(Uac - propagate(A, a, b, cfg) @ propagate(A, b, c, cfg)).max())
        unitary = max(unitary, unitarity_defect(Uac))

    def rhs(y, u):
        return (1j * A(y) @ u.reshape(2, 2)).ravel()

    ref = solve_ivp(rhs, (0.0, 2.0), np.eye(2, dtype=complex).ravel(), method="DOP853", rtol=1e-13, atol=1e-14)
    ref = ref.y[:, -1].reshape(2, 2)
    orders = {}
    for p in (2, 4):
        e = [np.abs(propagate(A, 2.0, 0.0, EvolutionConfig(order=p, step=h)) - ref).max() for h in (0.1, 0.05)]
        orders[p] = math.log2(e[0] / e[1])
    M = np.array([[1.0, 0.4j], [-0.4j, -0.2]])
    comm = np.abs(propagate(lambda y: math.cos(y) * M, 2.0, 0.0, cfg) - expm(1j * math.sin(2.0) * M)).max()
    elapsed = time.perf_counter() - start
    ok = (
        identity
        and cocycle <= 1e-9
        and unitary <= 1e-12
        and all(abs(orders[p] - p) <= 0.3 for p in orders)
        and comm <= 1e-8
        and elapsed < 30
    )
    record(
        7,
        "evolution suite",
        ok,
        f"identity {identity}, cocycle {cocycle:.1e}, unitarity {unitary:.1e}, "
        f"orders {orders[2]:.2f}/{orders[4]:.2f}, commuting {comm:.1e}, {elapsed:.1f} s",
    )


def test_08_one_dimensional_oracle():
    start = time.perf_counter()
    ok, details = True, []
    for m in (1, 2):
        Am, Ap = ONED_PRESETS[m]
        model = OneDModel(np.array(Am, dtype=complex), np.array(Ap, dtype=complex), L=40.0, N=2000)
        rows = refinement_table(model, -1.0, levels=(2000, 4000))
        rel = rows[0].gap / abs(rows[0].rhs)
        ok &= abs(rows[0].rhs) > 0 and rel <= 0.02 and 3.0 <= rows[1].ratio <= 5.0
        details.append(f"m={m}: rel gap {rel:.1e}, ratio {rows[1].ratio:.3f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    record(8, "1-D resolvent oracle", bool(ok), "; ".join(details) + f"; {elapsed:.1f} s")


def test_09_ds_witten_cross_check():
    start = time.perf_counter()
    spec = hedgehog_profile()
    loop = build_example_loop(spec, n_check=100, tol=math.inf)
    ds = ds_witten_index(loop)
    deg = su2_degree(loop, box=spec.radius + 0.5, n=40)
    cf = example_closed_form(spec)
    sign = SIGN_CONVENTIONS["ds_witten_vs_degree"]
    elapsed = time.perf_counter() - start
    ok = (
        loop.evolution_check <= 1e-8
        and ds.integer_distance <= 1e-2
        and ds.nearest_integer == sign * deg
        and "excluded_volume" in cf
        and elapsed < 600
    )
    record(
        9,
        "ds-Witten cross-check",
        ok,
        f"evolution agreement {loop.evolution_check:.1e}, index {ds.value:.8f}, degree {deg} x sign {sign:+d}, "
        f"closed form {cf['value']:.4f} (excluded volume {cf['excluded_volume']:.3f}, not asserted), {elapsed:.1f} s",
    )


REPRO_RUNS = {
    "clifford-info": ["--d", "5"],
    "heat-trace": ["--field", "hedgehog", "--t", "1,4", "--sphere-n", "12", "--radial-n", "16"],
    "callias-index": ["--field", "hedgehog"],
    "evolve": ["--generator", "bump", "--from", "-2", "--to", "2"],
    "oracle-1d": ["--m", "2", "--N", "2000", "--levels", "2000"],
    "ds-witten": ["--sphere-n", "8", "--radial-n", "16", "--degree-n", "24", "--n-check", "20"],
    "audit": ["--field", "hedgehog"],
}


def test_10_reproducibility():
    root = Path(tempfile.mkdtemp(prefix="dirac-index-repro-"))
    start = time.perf_counter()
    mismatched = []
    for cmd, args in REPRO_RUNS.items():
        first, second = root / cmd / "first", root / cmd / "second"
        with redirect_stdout(io.StringIO()):
            code1 = main([cmd, *args, "--reproducible", "--out", str(first)])
            code2 = main(["--manifest", str(first / "manifest.json"), "--out", str(second)])
        files = sorted(p.name for p in first.iterdir())
        same = code1 == code2 == 0 and all((first / f).read_bytes() == (second / f).read_bytes() for f in files)
        same &= json.loads((first / "manifest.json").read_text())["config"]["threads"] == 1
        if not same:
            mismatched.append(cmd)
    elapsed = time.perf_counter() - start
    record(
        10,
        "reproducibility",
        not mismatched,
        f"{len(REPRO_RUNS)} subcommands re-run from manifests, byte-identical outputs"
        + (f", mismatches: {mismatched}" if mismatched else "")
        + f", {elapsed:.1f} s",
    )


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
