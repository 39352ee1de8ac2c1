"""Acceptance criteria 1-10, one PASS/FAIL line each.

Every criterion is recomputed here through an oracle that does not share the
package's eigen-solver, enumeration, or reconstruction code.  Lines are
printed with capture disabled so they land in the test log.
"""

import functools
import itertools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import brute_force_sides, character_ratio
from esverify import (
    PairLaw,
    assemble_forms,
    build_builtin,
    build_function,
    compute_sides,
    decompose_cycles,
    fourier_transform,
    max_generalized_eigenvalue,
    refined_constant,
    rho,
    rotation_ratio,
    shift_eigenvalue,
)
from esverify.acceptance import (
    random_arbitrary_model,
    random_circulation,
    random_circulation_model,
    random_exchangeable_model,
    random_independent_model,
    random_symmetric_joint,
)
from esverify.sampler import SignFlipConfig, estimate_rotation_sides, estimate_sign_flip_sides, make_test_function

SEED = 777


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if passed else 'FAIL'}  {detail}")

    return emit


def oracle_lambda(model):
    """Largest real eigenvalue of pinv(B) A; the kernel of B lies in that of A."""
    forms = assemble_forms(model)
    a, b = forms.lhs_matrix, forms.rhs_matrix
    if not b.any():
        return 0.0
    eig = np.linalg.eigvals(np.linalg.pinv(b, rcond=1e-10, hermitian=True) @ a)
    return float(eig.real.max())


@functools.lru_cache(maxsize=None)
def oracle_rho(k):
    best = 0.0
    for m in itertools.product(*[range(1, ki + 1) for ki in k]):
        for u in itertools.product(*[range(mi) for mi in m]):
            best = max(best, character_ratio(u, m))
    return best


def populations(seed):
    r1, r2, r3 = (np.random.default_rng([seed, i]) for i in (1, 2, 3))
    return (
        [random_exchangeable_model(r1) for _ in range(200)],
        [random_independent_model(r2) for _ in range(200)],
        [random_circulation_model(r3) for _ in range(200)],
    )


EXCHANGEABLE, INDEPENDENT, CIRCULATION = populations(SEED)


def test_criterion_01_exchangeable(report):
    start = time.perf_counter()
    lams = [max_generalized_eigenvalue(assemble_forms(m)).lambda_max for m in EXCHANGEABLE]
    elapsed = time.perf_counter() - start
    oracle = [oracle_lambda(m) for m in EXCHANGEABLE]
    agree = max(abs(a - b) for a, b in zip(lams, oracle))
    passed = max(lams) <= 1 + 1e-8 and max(oracle) <= 1 + 1e-8 and agree <= 1e-7 and elapsed <= 60
    report(1, passed, f"200 exchangeable models: max lambda {max(lams):.12f}, oracle gap {agree:.1e}, {elapsed:.2f}s")
    assert passed


def test_criterion_02_independent_copies(report):
    lams = [max_generalized_eigenvalue(assemble_forms(m)).lambda_max for m in INDEPENDENT]
    oracle = [oracle_lambda(m) for m in INDEPENDENT]
    passed = max(lams) <= 1 + 1e-8 and max(oracle) <= 1 + 1e-8
    report(2, passed, f"200 independent-copy models: max lambda {max(lams):.12f}")
    assert passed


def test_criterion_03_finite_support(report):
    worst_rho = worst_cycle = -math.inf
    for model in CIRCULATION:
        lam = max_generalized_eigenvalue(assemble_forms(model)).lambda_max
        lam = max(lam, oracle_lambda(model))
        r = rho(model.sizes).rho
        assert abs(r - oracle_rho(model.sizes)) <= 1e-12
        worst_rho = max(worst_rho, lam - r)
        worst_cycle = max(worst_cycle, lam - refined_constant(model))
    passed = worst_rho <= 1e-8 and worst_cycle <= 1e-8
    report(3, passed, f"200 circulation models: max(lambda - rho) {worst_rho:.3e}, max(lambda - cycle) {worst_cycle:.3e}")
    assert passed


def test_criterion_04_rho_bound(report):
    worst = -math.inf
    mismatch = 0.0
    for n in range(1, 4):
        for k in itertools.product(range(1, 7), repeat=n):
            value = oracle_rho(k)
            mismatch = max(mismatch, abs(value - rho(k).rho))
            worst = max(worst, value - max(k) / 2)
    r55 = oracle_rho((5, 5))
    closed = 1 + math.cos(2 * math.pi / 5)
    passed = worst <= 1e-12 and abs(r55 - closed) <= 1e-9 and abs(rho((5, 5)).rho - r55) <= 1e-9
    report(4, passed, f"258 k-vectors: max(rho - max k/2) {worst:.4f}, rho(5,5) {r55:.12f} vs {closed:.12f}, engine gap {mismatch:.1e}")
    assert passed


def test_criterion_05_rotation(report):
    eps = 1e-3
    closed_ok = all(
        abs(rotation_ratio(n, eps) - n) <= n * (n * n - 1) * 1e-6
        and abs(math.sin(n * eps) ** 2 / (n * math.sin(eps) ** 2) - rotation_ratio(n, eps)) <= 1e-12
        for n in range(2, 9)
    )
    worst_z = 0.0
    for n in range(2, 9):
        res = estimate_rotation_sides(n, eps, 10**6, SEED + n)
        worst_z = max(worst_z, abs(res.lhs.mean - 2 * math.sin(n * eps) ** 2) / res.lhs.std_error)
    passed = closed_ok and worst_z <= 3
    report(5, passed, f"closed form within n(n^2-1)eps^2 for n=2..8: {closed_ok}; Monte Carlo 1e6 max |z| {worst_z:.2f}")
    assert passed


def test_criterion_06_cauchy_schwarz(report):
    rng = np.random.default_rng([SEED, 6])
    arbitrary = [random_arbitrary_model(rng) for _ in range(100)]
    worst = max(
        oracle_lambda(m) - m.n for m in EXCHANGEABLE + INDEPENDENT + CIRCULATION + arbitrary
    )
    three_ok = True
    for n in range(2, 6):
        model = build_builtin("three_point_different_law", n)
        f = build_function("product_sign", model)
        sides = compute_sides(model, f)
        lhs, terms = brute_force_sides(model, f) if n <= 4 else (sides.lhs, sides.rhs_terms)
        lam = max_generalized_eigenvalue(assemble_forms(model)).lambda_max
        three_ok &= sides.lhs == n * n and sides.rhs_sum == n and lhs == n * n and sum(terms) == n
        three_ok &= abs(lam - n) <= 1e-8 and abs(oracle_lambda(model) - n) <= 1e-8
    passed = worst <= 1e-8 and three_ok
    report(6, passed, f"700 models: max(lambda - n) {worst:.3f}; three-point model attains n for n=2..5: {three_ok}")
    assert passed


def rebuild(components, size):
    mat = np.zeros((size, size))
    for cycle, weight in components:
        if len(cycle) == 1:
            mat[cycle[0], cycle[0]] += weight
            continue
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            mat[a, b] += weight / len(cycle)
    return mat


def test_criterion_07_cycles(report):
    rng = np.random.default_rng([SEED, 7])
    err = dev = 0.0
    long_cycles = 0
    for make, count in ((random_circulation, 100), (random_symmetric_joint, 100)):
        for _ in range(count):
            s = int(rng.integers(1, 7))
            pair = PairLaw.from_joint(range(s), make(rng, s))
            dec = decompose_cycles(pair)
            err = max(err, float(np.abs(rebuild(list(dec.components), s) - pair.joint).max()))
            dev = max(dev, abs(sum(w for _, w in dec.components) - 1.0))
            if make is random_symmetric_joint:
                long_cycles += max(len(c) for c, _ in dec.components) > 2
    passed = err <= 1e-12 and dev <= 1e-12 and long_cycles == 0
    report(7, passed, f"max reconstruction error {err:.1e}, weight deviation {dev:.1e}, exchangeable long cycles {long_cycles}")
    assert passed


def test_criterion_08_fourier(report):
    gap = 0.0
    for n in range(1, 4):
        for m in range(2, 7):
            spectrum = np.sort(max_generalized_eigenvalue(assemble_forms(build_builtin("cyclic_shift", n, m))).spectrum)
            us = [u for u in itertools.product(range(m), repeat=n) if any(u)]
            expected = np.sort([character_ratio(u, (m,) * n) for u in us])
            formula = np.sort([shift_eigenvalue(u, (m,) * n) for u in us])
            gap = max(gap, float(np.abs(spectrum - expected).max()), float(np.abs(formula - expected).max()))
    rng = np.random.default_rng([SEED, 8])
    parseval = roundtrip = 0.0
    for _ in range(100):
        moduli = tuple(int(x) for x in rng.integers(1, 7, size=int(rng.integers(1, 4))))
        f = rng.standard_normal(math.prod(moduli)) + 1j * rng.standard_normal(math.prod(moduli))
        coef = fourier_transform(f, moduli).coefficients
        points = list(itertools.product(*[range(mi) for mi in moduli]))
        synth = np.array([
            sum(c * np.exp(2j * np.pi * sum(ui * xi / mi for ui, xi, mi in zip(u, x, moduli))) for c, u in zip(coef, points))
            for x in points
        ])
        roundtrip = max(roundtrip, float(np.abs(synth - f).max()))
        parseval = max(parseval, abs(np.sum(np.abs(coef) ** 2) - np.mean(np.abs(f) ** 2)))
    passed = gap <= 1e-9 and parseval <= 1e-10 and roundtrip <= 1e-10
    report(8, passed, f"shift spectra max gap {gap:.1e}; Parseval {parseval:.1e}; round trip {roundtrip:.1e}")
    assert passed


def test_criterion_09_poincare(report):
    res = estimate_sign_flip_sides(SignFlipConfig(3, 0.3, 10**6, SEED, "linear", (1.0, 2.0, 3.0)))
    se = math.hypot(res.lhs.std_error, res.poincare_rhs.std_error)
    agree = abs(res.lhs.mean - 39.2) <= 3 * se and abs(res.poincare_rhs.mean - 39.2) <= 1e-9
    rng = np.random.default_rng([SEED, 9])
    grad_err = 0.0
    h = 1e-5
    for name, params in (("linear", (1.0, 2.0, 3.0)), ("sin_sum", ()), ("product_quadratic", (0.5,))):
        fn = make_test_function(name, 3, params)
        for _ in range(100):
            z = rng.standard_normal(3)
            fd = np.array([(fn.value(z + h * e) - fn.value(z - h * e)) / (2 * h) for e in np.eye(3)])
            g = fn.gradient(z)
            grad_err = max(grad_err, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1.0)))
    passed = agree and grad_err <= 1e-6
    report(9, passed, f"lhs {res.lhs.mean:.4f} +- {res.lhs.std_error:.4f} vs 39.2; gradient rel. error {grad_err:.1e}")
    assert passed


def test_criterion_10_reproduce(report):
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "esverify", "reproduce"], capture_output=True, text=True, check=False
    )
    elapsed = time.perf_counter() - start
    payload = json.loads(proc.stdout)["payload"]
    keys = list(payload.get("results", {}))
    passed = proc.returncode == 0 and not payload["failed"] and len(keys) == 9 and elapsed <= 300
    report(10, passed, f"reproduce exit {proc.returncode}, {len(keys)} keys, failed {payload['failed']}, {elapsed:.1f}s")
    assert passed
