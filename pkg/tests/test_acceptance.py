"""End-to-end exit criteria, each at its stated tolerance and time budget.

``pytest -v`` prints one PASS/FAIL line per criterion in the summary.
"""

import json
import os
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from minvset.correspondence import detect_affine_ifs, family_operator, one_point_sets, phi, psi
from minvset.dynamics import IterationConfig, Mode, Status, convergence_study, minimal_invariant_set, theta_step
from minvset.geometry import hausdorff
from minvset.julia import cross_validate_m1
from minvset.operator import DiffOperator, apply, compose, symbol_eigenvalues
from minvset.poly import ComplexPoly, poly_roots

from . import exact
from .operators import CUBIC, DENDRITE, DENDRITE_HALF, EXPANDING, LEGENDRE, LEVY, PARABOLIC, hyp_operator

pytestmark = pytest.mark.acceptance


def _label(record_property, text):
    record_property("criterion", text)


def _match_sets(a, b):
    """Largest distance under the best pairing of two small root sets."""
    from itertools import permutations

    a, b = np.asarray(a), np.asarray(b)
    return min(np.abs(a - b[list(p)]).max() for p in permutations(range(b.size)))


def _random_es_operator(rng, k):
    """Random exactly solvable operator of order exactly ``k``."""
    coeffs = []
    for j in range(k + 1):
        c = rng.normal(size=j + 1) + 1j * rng.normal(size=j + 1)
        coeffs.append(c)
    return DiffOperator(coeffs)


def test_c01_closed_form_roots(record_property):
    _label(record_property, "C1 closed-form roots of T[(x-a)^2] for the Levy operator")
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    B = psi(LEVY, 2)
    worst = 0.0
    for a in rng.normal(size=100) + 1j * rng.normal(size=100):
        got = poly_roots(B.slice_x(a)).roots
        want = [(1 + 1j) * a / 2, (1 - 1j) * (a - 1j) / 2]
        worst = max(worst, _match_sets(got, want))
    elapsed = time.perf_counter() - t0
    record_property("measured", f"max error {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-10
    assert elapsed < 1.0


def test_c02_spectrum_and_escape(record_property):
    _label(record_property, "C2 spectrum, affine maps and escape of the expanding operator")
    t0 = time.perf_counter()
    lam = symbol_eigenvalues(EXPANDING, 2).lambdas
    spec_err = np.abs(lam - np.array([-27 / 32, -15 / 16, 1])).max()
    maps = detect_affine_ifs(psi(EXPANDING, 2), 2)
    assert maps is not None
    got = sorted(maps, key=lambda m: m.a.real)
    map_err = max(abs(got[0].a + 9 / 4), abs(got[0].b - 1), abs(got[1].a - 3 / 8), abs(got[1].b - 1))
    run = minimal_invariant_set(EXPANDING, 2, Mode.HUTCHINSON, IterationConfig(max_iter=50))
    elapsed = time.perf_counter() - t0
    record_property(
        "measured",
        f"spectrum {spec_err:.1e}, maps {map_err:.1e}, {run.status.value} at step {run.steps}, {elapsed:.2f}s",
    )
    assert spec_err <= 1e-12
    assert map_err <= 1e-8
    assert run.status is Status.UNBOUNDED and run.steps <= 50
    assert elapsed < 5.0


def test_c03_round_trip_and_identities(record_property):
    _label(record_property, "C3 phi/psi round trip and the six exact identities")
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        k = int(rng.integers(1, 6))
        T = _random_es_operator(rng, k)
        back = phi(psi(T, k), k)
        worst = max(worst, max(np.abs(a.padded(k + 1) - b.padded(k + 1)).max()
                               for a, b in zip(T.coeffs, back.coeffs)))
        assert back.order == T.order
    failures = _exact_identity_failures(random.Random(3), kmax=6)
    elapsed = time.perf_counter() - t0
    record_property("measured", f"round trip {worst:.1e}, identity failures {len(failures)}, {elapsed:.1f}s")
    assert worst <= 1e-10
    assert not failures, failures[:3]
    assert elapsed < 30.0


def _rand_gauss(rnd):
    return exact.G(Fraction(rnd.randint(-9, 9), rnd.randint(1, 5)), Fraction(rnd.randint(-9, 9), rnd.randint(1, 5)))


def _rand_upoly(rnd, deg):
    c = [_rand_gauss(rnd) for _ in range(deg + 1)]
    while not c[-1]:
        c[-1] = _rand_gauss(rnd)
    return exact.upoly(c)


def _exact_identity_failures(rnd, kmax):
    """Every identity, for every admissible parameter, ``k <= kmax``."""
    bad = []

    def check(name, op, lhs):
        if exact.apply_to_power(op, k) != exact.clean(lhs):
            bad.append((name, k))

    for k in range(1, kmax + 1):
        for m in range(k + 1):
            Q = _rand_upoly(rnd, rnd.randint(0, 3))
            check("i", exact.rhs_i(Q, k, m), exact.lhs_i(Q, k, m))
        Q = _rand_upoly(rnd, k)
        check("ii", exact.rhs_ii(Q, k), exact.lhs_ii(Q, k))
        for ell in range(k + 1):
            Q = _rand_upoly(rnd, k - ell)
            check("iii", exact.rhs_iii(Q, k, ell), exact.lhs_iii(Q, k, ell))
        Q = _rand_upoly(rnd, k)
        check("iv", exact.rhs_iv(Q, k), exact.lhs_iv(Q, k))
        for ell in range(3):
            Q = _rand_upoly(rnd, rnd.randint(0, k))
            check("v", exact.rhs_v(Q, k, ell), exact.lhs_v(Q, k, ell))
        for m in range(k):
            Q = _rand_upoly(rnd, rnd.randint(0, m))
            check("vi", exact.rhs_vi(Q, k, m), exact.lhs_vi(Q, k, m))
    return bad


def test_c04_one_point_sets(record_property):
    _label(record_property, "C4 one-point sets: {1..n} for n = 2..6, infinite families")
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(2, 7):
        rep = one_point_sets(hyp_operator(n), n)
        got = np.array([p.z0 for p in rep.points])
        assert not rep.infinite_family
        assert got.size == n, (n, got)
        worst = max(worst, np.abs(got - np.arange(1, n + 1)).max())
    rng = np.random.default_rng(4)
    families = 0
    for _ in range(50):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(0, n))
        Q = ComplexPoly(rng.normal(size=m + 1) + 1j * rng.normal(size=m + 1))
        families += one_point_sets(family_operator(m, n, Q), n).infinite_family
    elapsed = time.perf_counter() - t0
    record_property("measured", f"max point error {worst:.1e}, families {families}/50, {elapsed:.2f}s")
    assert worst <= 1e-4
    assert families == 50
    assert elapsed < 10.0


@pytest.mark.parametrize("name,T", [("x^2+1/4", PARABOLIC), ("x^2+i", DENDRITE)])
def test_c05_julia_coincidence(record_property, name, T):
    _label(record_property, f"C5 engine vs inverse iteration, R = {name}")
    eps = 2e-3
    t0 = time.perf_counter()
    check = cross_validate_m1(T, IterationConfig(eps=eps))
    elapsed = time.perf_counter() - t0
    record_property("measured", f"hausdorff {check.hausdorff:.2e} <= {3 * eps:.0e}, {elapsed:.1f}s")
    assert check.hausdorff <= 3 * eps
    assert elapsed < 60.0


def _affine_attractor(maps, start, eps):
    """Breadth-first closure of ``start`` under the maps, one point per eps-cell."""
    seen = {}
    frontier = [start]
    key = lambda z: (int(np.floor(z.real / eps)), int(np.floor(z.imag / eps)))
    seen[key(start)] = start
    while frontier:
        nxt = []
        for z in frontier:
            for a, b in maps:
                w = a * z + b
                k = key(w)
                if k not in seen:
                    seen[k] = w
                    nxt.append(w)
        frontier = nxt
    return np.array(list(seen.values()))


def test_c06_levy_fixed_point(record_property):
    _label(record_property, "C6 Levy curve: fixed point of the step and direct IFS oracle")
    eps = 1e-3
    t0 = time.perf_counter()
    run = minimal_invariant_set(LEVY, 2, Mode.HUTCHINSON, IterationConfig(eps=eps))
    stepped = theta_step(LEVY, 2, run.cloud)
    d_step = hausdorff(stepped, run.cloud)
    maps = [((1 + 1j) / 2, 0.0), ((1 - 1j) / 2, (-1 - 1j) / 2)]
    oracle = _affine_attractor(maps, 0j, eps)
    d_oracle = hausdorff(oracle, run.cloud)
    elapsed = time.perf_counter() - t0
    record_property(
        "measured", f"{run.status.value}, step {d_step:.2e}, oracle {d_oracle:.2e} <= {2 * eps:.0e}, {elapsed:.1f}s"
    )
    assert run.status is Status.CONVERGED
    assert d_step <= 2 * eps
    assert d_oracle <= 2 * eps
    assert elapsed < 60.0


def test_c07_convergence_trend(record_property):
    _label(record_property, "C7 coverage of the triangle decreases over n = 3, 4, 5")
    t0 = time.perf_counter()
    rows = convergence_study(CUBIC, [3, 4, 5], IterationConfig(eps=1e-2))
    elapsed = time.perf_counter() - t0
    cov = [r.coverage for r in rows]
    record_property(
        "measured",
        "coverage " + ", ".join(f"{c:.2e}" for c in cov) + f"; sup_out(5) {rows[-1].sup_out:.3f}, {elapsed:.1f}s",
    )
    assert all(b < a for a, b in zip(cov, cov[1:]))
    assert rows[-1].sup_out <= 0.3
    assert elapsed < 300.0


def test_c08_degree_one_vs_two(record_property):
    _label(record_property, "C8 M_H1(Q1 d + Q0) vs M_H2(Q1 d / 2 + Q0)")
    eps = 2e-3
    cfg = IterationConfig(eps=eps)
    t0 = time.perf_counter()
    one = minimal_invariant_set(DENDRITE, 1, Mode.HUTCHINSON, cfg)
    two = minimal_invariant_set(DENDRITE_HALF, 2, Mode.HUTCHINSON, cfg)
    d = hausdorff(one.cloud, two.cloud)
    elapsed = time.perf_counter() - t0
    record_property("measured", f"hausdorff {d:.2e} <= {2 * eps:.0e}, {elapsed:.1f}s")
    assert d <= 2 * eps
    assert elapsed < 120.0


def test_c09_legendre_pipeline(record_property):
    _label(record_property, "C9 id + (delta - 6)^2 maps 3x^2/2 to 3x^2/2 + 18")
    t0 = time.perf_counter()
    shifted = LEGENDRE - DiffOperator.identity() * 6
    T = DiffOperator.identity() + compose(shifted, shifted)
    out = apply(T, ComplexPoly([0, 0, 1.5]))
    err = np.abs(out.padded(3) - np.array([18, 0, 1.5])).max()
    roots = poly_roots(out).roots
    root_err = _match_sets(roots, [2j * np.sqrt(3), -2j * np.sqrt(3)])
    elapsed = time.perf_counter() - t0
    record_property("measured", f"coefficients {err:.1e}, roots {root_err:.1e}, {elapsed:.3f}s")
    assert out.degree() == 2 and err <= 1e-10
    assert root_err <= 1e-10 and np.all(np.abs(roots.imag) > 1)
    assert elapsed < 1.0


def _cli(args, env_extra=None):
    env = dict(os.environ)
    env.update(env_extra or {})
    return subprocess.run([sys.executable, "-m", "minvset.cli", *args], env=env,
                          capture_output=True, text=True)


def _payload(directory):
    out = {}
    for f in sorted(Path(directory).iterdir()):
        if f.suffix in (".csv", ".json"):
            out[f.name] = f.read_bytes()
        elif f.suffix == ".png":
            from PIL import Image

            out[f.name] = Image.open(f).tobytes()
    return out


def test_c10_manifest_determinism(record_property, tmp_path):
    _label(record_property, "C10 manifest replays are byte-identical under 1 and 4 threads")
    t0 = time.perf_counter()
    specs = {
        "levy": LEVY, "parabolic": PARABOLIC, "expanding": EXPANDING, "cubic": CUBIC, "dendrite": DENDRITE,
    }
    for name, T in specs.items():
        (tmp_path / f"{name}.json").write_text(json.dumps(
            {"coeffs": [[[c.real, c.imag] for c in q.coeffs] for q in T.coeffs]}))
    runs = [
        ["iterate", "levy.json", "--n", "2", "--eps", "4e-3", "--png", "200x160"],
        ["iterate", "parabolic.json", "--n", "1", "--eps", "4e-3"],
        ["iterate", "expanding.json", "--n", "2"],
        ["iterate", "cubic.json", "--n", "3", "--mode", "full", "--eps", "2e-2", "--samples", "500"],
        ["julia", "dendrite.json", "--eps", "5e-3", "--png", "128x128"],
    ]
    compared = 0
    for i, args in enumerate(runs):
        first = tmp_path / f"run{i}"
        res = _cli([args[0], str(tmp_path / args[1]), *args[2:], "--out", str(first)],
                   {"MINVSET_THREADS": "1"})
        assert res.returncode in (0, 2, 4), res.stderr
        ref = _payload(first)
        for threads in ("1", "4"):
            again = tmp_path / f"run{i}_t{threads}"
            rep = _cli(["replay", str(first / "manifest.json"), "--out", str(again)],
                       {"MINVSET_THREADS": threads})
            assert rep.returncode == res.returncode, rep.stderr
            assert _payload(again) == ref, (args, threads)
            compared += 1
    elapsed = time.perf_counter() - t0
    record_property("measured", f"{compared} replays identical, {elapsed:.1f}s")
    assert elapsed < 120.0
