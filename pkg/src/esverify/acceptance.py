"""Randomized model generators and the consolidated check suite.

Every check returns a :class:`CheckResult`; ``run_checks`` runs them in a
fixed order and is what the ``reproduce`` command reports.  All randomness
flows from explicit seeds.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ESVerifyError
from .engine import compute_sides
from .flows import decompose_cycles, refined_constant
from .harmonic import fourier_transform, rho, rho_bound_check, rotation_ratio, shift_eigenvalue
from .model import FunctionTable, PairLaw, ProductModel, build_builtin, build_function
from .sampler import (
    SignFlipConfig,
    combined_se,
    estimate_rotation_sides,
    estimate_sign_flip_sides,
    make_test_function,
)
from .spectral import BOUND_TOL, assemble_forms, max_generalized_eigenvalue

DEFAULT_SEED = 20240611


# ---------------------------------------------------------------------------
# Random models


def _sparsify(rng: np.random.Generator, mat: np.ndarray, keep: float) -> np.ndarray:
    mask = rng.random(mat.shape) < keep
    return np.where(mask, mat, 0.0)


def random_symmetric_joint(rng: np.random.Generator, s: int) -> np.ndarray:
    a = _sparsify(rng, rng.random((s, s)), rng.uniform(0.3, 1.0))
    a = a + a.T
    if a.sum() == 0:
        a = np.eye(s)
    return a / a.sum()


def random_pmf(rng: np.random.Generator, s: int) -> np.ndarray:
    p = _sparsify(rng, rng.random(s), 0.8)
    if p.sum() == 0:
        p[rng.integers(s)] = 1.0
    return p / p.sum()


def random_cycle_pmf(rng: np.random.Generator, s: int, length: int) -> np.ndarray:
    nodes = rng.permutation(s)[:length]
    out = np.zeros((s, s))
    for a, b in zip(nodes, np.roll(nodes, -1)):
        out[a, b] += 1.0 / length
    return out


def random_circulation(rng: np.random.Generator, s: int) -> np.ndarray:
    """Random convex combination of simple-cycle pmfs plus a diagonal part."""
    count = int(rng.integers(1, 5))
    weights = rng.dirichlet(np.ones(count + 1))
    out = weights[0] * np.diag(rng.dirichlet(np.ones(s)))
    for w in weights[1:]:
        out = out + w * random_cycle_pmf(rng, s, int(rng.integers(1, s + 1)))
    return out / out.sum()


def _model(rng, n_max, s_max, make_joint) -> ProductModel:
    n = int(rng.integers(1, n_max + 1))
    pairs = []
    for _ in range(n):
        s = int(rng.integers(1, s_max + 1))
        values = np.sort(rng.choice(np.arange(-10, 11), size=s, replace=False))
        pairs.append(PairLaw.from_joint(values.astype(float), make_joint(rng, s)))
    return ProductModel(tuple(pairs))


def random_exchangeable_model(rng, n_max: int = 4, s_max: int = 4) -> ProductModel:
    return _model(rng, n_max, s_max, random_symmetric_joint)


def random_independent_model(rng, n_max: int = 4, s_max: int = 4) -> ProductModel:
    def joint(rng, s):
        p = random_pmf(rng, s)
        return np.outer(p, p)

    return _model(rng, n_max, s_max, joint)


def random_circulation_model(rng, n_max: int = 3, s_max: int = 5) -> ProductModel:
    return _model(rng, n_max, s_max, random_circulation)


def random_arbitrary_model(rng, n_max: int = 4, s_max: int = 4) -> ProductModel:
    def joint(rng, s):
        a = _sparsify(rng, rng.random((s, s)), rng.uniform(0.3, 1.0))
        if a.sum() == 0:
            a[0, -1] = 1.0
        return a / a.sum()

    return _model(rng, n_max, s_max, joint)


def random_function(rng, model: ProductModel, complex_values: bool = False) -> FunctionTable:
    vals = rng.standard_normal(model.dimension)
    if complex_values:
        vals = vals + 1j * rng.standard_normal(model.dimension)
    return FunctionTable(vals)


# ---------------------------------------------------------------------------
# Checks


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "title": self.title,
            "passed": self.passed,
            "details": self.details,
        }


def _lambda_sweep(models, bound_of) -> dict:
    worst_gap = -math.inf
    worst_lambda = 0.0
    failures = 0
    cs_failures = 0
    for model in models:
        lam = max_generalized_eigenvalue(assemble_forms(model)).lambda_max
        bound = bound_of(model)
        gap = lam - bound
        worst_gap = max(worst_gap, gap)
        worst_lambda = max(worst_lambda, lam)
        failures += gap > BOUND_TOL
        cs_failures += lam > model.n + BOUND_TOL
    return {
        "models": len(models),
        "max_lambda": worst_lambda,
        "max_lambda_minus_bound": worst_gap,
        "failures": int(failures),
        "cauchy_schwarz_failures": int(cs_failures),
    }


def check_thm2(seed: int = DEFAULT_SEED, count: int = 200, inject_fault: bool = False) -> CheckResult:
    """All-exchangeable models: worst-case ratio at most 1.

    With ``inject_fault`` a Z_5 shift pair falsely flagged exchangeable is
    added, which must make the check fail.
    """
    rng = np.random.default_rng([seed, 1])
    models = [random_exchangeable_model(rng) for _ in range(count)]
    if inject_fault:
        shift = build_builtin("cyclic_shift", 1, 5).pairs[0]
        liar = replace(shift, exchangeable=True)
        models.append(ProductModel((liar, liar)))
    start = time.perf_counter()
    details = _lambda_sweep(models, lambda m: 1.0 if m.all_exchangeable else float(m.n))
    elapsed = time.perf_counter() - start
    details["injected_fault"] = inject_fault
    passed = details["failures"] == 0 and elapsed <= 60.0
    return CheckResult("thm2", "exchangeable pairs: lambda_max <= 1", passed, details, elapsed)


def check_thm1(seed: int = DEFAULT_SEED, count: int = 200) -> CheckResult:
    rng = np.random.default_rng([seed, 2])
    models = [random_independent_model(rng) for _ in range(count)]
    details = _lambda_sweep(models, lambda m: 1.0)
    return CheckResult(
        "thm1", "independent copies: lambda_max <= 1", details["failures"] == 0, details
    )


def check_finite_support(seed: int = DEFAULT_SEED, count: int = 200) -> CheckResult:
    rng = np.random.default_rng([seed, 3])
    models = [random_circulation_model(rng) for _ in range(count)]
    rho_details = _lambda_sweep(models, lambda m: rho(m.sizes).rho)
    cycle_details = _lambda_sweep(models, refined_constant)
    passed = rho_details["failures"] == 0 and cycle_details["failures"] == 0
    return CheckResult(
        "finite_support",
        "identically distributed: lambda_max <= rho(k) and <= cycle constant",
        passed,
        {"rho": rho_details, "cycle": cycle_details},
    )


def check_rho() -> CheckResult:
    worst = -math.inf
    failures = []
    checked = 0
    for n in range(1, 4):
        for k in itertools.product(range(1, 7), repeat=n):
            ok, diag = rho_bound_check(k)
            checked += 1
            worst = max(worst, diag["rho"] - diag["kappa_half_bound"])
            if not ok:
                failures.append(list(k))
    r55 = rho((5, 5)).rho
    target = 1 + math.cos(2 * math.pi / 5)
    passed = not failures and abs(r55 - target) <= 1e-9
    return CheckResult(
        "rho",
        "rho(k) <= max k_i / 2; rho(5,5) = 1 + cos(2 pi/5)",
        passed,
        {
            "k_checked": checked,
            "failures": failures,
            "max_rho_minus_half_kappa": worst,
            "rho_5_5": r55,
            "closed_form": target,
        },
    )


def check_rotation(seed: int = DEFAULT_SEED, samples: int = 10**6) -> CheckResult:
    eps = 1e-3
    closed = {}
    ok = True
    for n in range(2, 9):
        r = rotation_ratio(n, eps)
        within = abs(r - n) <= n * (n * n - 1) * 1e-6
        closed[str(n)] = {"ratio": r, "within": within}
        ok &= within
    mc = {}
    for n, e in [(n, eps) for n in range(2, 9)] + [(3, 0.1)]:
        res = estimate_rotation_sides(n, e, samples, seed + n)
        target = 2 * math.sin(n * e) ** 2
        z = (res.lhs.mean - target) / res.lhs.std_error
        ratio_z = (res.ratio - rotation_ratio(n, e)) / res.ratio_se
        good = abs(z) <= 3.0 and abs(ratio_z) <= 3.0
        mc[f"n={n},eps={e}"] = {
            "lhs": res.lhs.mean,
            "closed_form": target,
            "z": z,
            "ratio": res.ratio,
            "ratio_z": ratio_z,
            "within_3se": good,
        }
        ok &= good
    return CheckResult(
        "rotation",
        "rotation counterexample: ratio -> n, Monte Carlo matches 2 sin^2(n eps)",
        bool(ok),
        {"closed_form": closed, "monte_carlo": mc, "samples": samples, "seed": seed},
    )


def check_cauchy_schwarz(seed: int = DEFAULT_SEED, count: int = 100) -> CheckResult:
    rng = np.random.default_rng([seed, 6])
    # Same populations as the thm2 / thm1 / finite_support checks.
    r1 = np.random.default_rng([seed, 1])
    r2 = np.random.default_rng([seed, 2])
    r3 = np.random.default_rng([seed, 3])
    pools = {
        "exchangeable": [random_exchangeable_model(r1) for _ in range(200)],
        "independent": [random_independent_model(r2) for _ in range(200)],
        "circulation": [random_circulation_model(r3) for _ in range(200)],
        "arbitrary": [random_arbitrary_model(rng) for _ in range(count)],
    }
    sweeps = {
        name: _lambda_sweep(models, lambda m: float(m.n)) for name, models in pools.items()
    }
    ok = all(s["failures"] == 0 for s in sweeps.values())
    three = {}
    for n in range(2, 6):
        model = build_builtin("three_point_different_law", n)
        lam = max_generalized_eigenvalue(assemble_forms(model)).lambda_max
        sides = compute_sides(model, build_function("product_sign", model))
        good = abs(lam - n) <= 1e-8 and sides.lhs == n * n and sides.rhs_sum == n
        three[str(n)] = {
            "lambda_max": lam,
            "lhs": sides.lhs,
            "rhs_sum": sides.rhs_sum,
            "ok": good,
        }
        ok &= good
    return CheckResult(
        "cauchy_schwarz",
        "lambda_max <= n everywhere; three-point model attains n",
        bool(ok),
        {"sweeps": sweeps, "three_point": three},
    )


def check_cycles(seed: int = DEFAULT_SEED, count: int = 100) -> CheckResult:
    rng = np.random.default_rng([seed, 7])
    max_err = 0.0
    max_weight_dev = 0.0
    long_exchangeable = 0
    for _ in range(count):
        s = int(rng.integers(1, 7))
        pair = PairLaw.from_joint(range(s), random_circulation(rng, s))
        dec = decompose_cycles(pair)
        max_err = max(max_err, float(np.abs(dec.reconstruct() - pair.joint).max()))
        max_weight_dev = max(max_weight_dev, abs(dec.total_weight - 1.0))
    for _ in range(count):
        s = int(rng.integers(1, 7))
        pair = PairLaw.from_joint(range(s), random_symmetric_joint(rng, s))
        dec = decompose_cycles(pair)
        max_err = max(max_err, float(np.abs(dec.reconstruct() - pair.joint).max()))
        max_weight_dev = max(max_weight_dev, abs(dec.total_weight - 1.0))
        long_exchangeable += dec.max_cycle_length > 2
    passed = max_err <= 1e-12 and max_weight_dev <= 1e-12 and long_exchangeable == 0
    return CheckResult(
        "cycles",
        "cycle decomposition reconstructs circulations; exchangeable => length <= 2",
        passed,
        {
            "max_reconstruction_error": max_err,
            "max_weight_deviation": max_weight_dev,
            "exchangeable_with_long_cycles": int(long_exchangeable),
        },
    )


def shift_spectrum_gap(n: int, m: int) -> float:
    """Largest mismatch between the sorted spectral and character eigenvalues."""
    model = build_builtin("cyclic_shift", n, m)
    spectrum = np.sort(max_generalized_eigenvalue(assemble_forms(model)).spectrum)
    expected = np.sort(
        [
            shift_eigenvalue(u, (m,) * n)
            for u in itertools.product(range(m), repeat=n)
            if any(u)
        ]
    )
    if spectrum.shape != expected.shape:
        return math.inf
    return float(np.abs(spectrum - expected).max(initial=0.0))


def check_fourier(seed: int = DEFAULT_SEED, count: int = 100) -> CheckResult:
    gaps = {}
    for n in range(1, 4):
        for m in range(2, 7):
            gaps[f"n={n},m={m}"] = shift_spectrum_gap(n, m)
    rng = np.random.default_rng([seed, 8])
    parseval = roundtrip = 0.0
    for _ in range(count):
        moduli = tuple(int(x) for x in rng.integers(1, 7, size=int(rng.integers(1, 5))))
        size = math.prod(moduli)
        f = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        coef = fourier_transform(f, moduli)
        parseval = max(parseval, abs(np.sum(np.abs(coef.coefficients) ** 2) - np.mean(np.abs(f) ** 2)))
        roundtrip = max(roundtrip, float(np.abs(coef.inverse() - f).max()))
    worst_gap = max(gaps.values())
    passed = worst_gap <= 1e-9 and parseval <= 1e-10 and roundtrip <= 1e-10
    return CheckResult(
        "fourier",
        "shift-model spectrum equals character eigenvalues; Parseval and round trip",
        passed,
        {
            "max_spectrum_gap": worst_gap,
            "max_parseval_error": parseval,
            "max_roundtrip_error": roundtrip,
        },
    )


def gradient_check(seed: int = DEFAULT_SEED, points: int = 100, step: float = 1e-5) -> dict:
    """Max relative gap between analytic and central-difference gradients."""
    rng = np.random.default_rng([seed, 9])
    out = {}
    for name, params in [("linear", (1.0, 2.0, 3.0)), ("sin_sum", ()), ("product_quadratic", (0.5,))]:
        fn = make_test_function(name, 3, params)
        worst = 0.0
        for _ in range(points):
            z = rng.standard_normal(3)
            fd = np.empty(3)
            for i in range(3):
                e = np.zeros(3)
                e[i] = step
                fd[i] = (fn.value(z + e) - fn.value(z - e)) / (2 * step)
            g = fn.gradient(z)
            worst = max(worst, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1.0)))
        out[name] = worst
    return out


def check_poincare(seed: int = DEFAULT_SEED, samples: int = 10**6) -> CheckResult:
    cfg = SignFlipConfig(n=3, p=0.3, samples=samples, seed=seed, function="linear", params=(1, 2, 3))
    res = estimate_sign_flip_sides(cfg)
    target = 4 * (1 - 0.3) * 14
    se = combined_se(res.lhs, res.poincare_rhs)
    agree = abs(res.lhs.mean - target) <= 3 * se and abs(res.poincare_rhs.mean - target) <= 1e-9
    grads = gradient_check(seed)
    grads_ok = all(v <= 1e-6 for v in grads.values())
    return CheckResult(
        "poincare",
        "Gaussian sign flip: linear f attains 4(1-p) sum a_i^2 = 39.2",
        bool(agree and grads_ok),
        {
            "lhs": res.lhs.to_dict(),
            "poincare_rhs": res.poincare_rhs.to_dict(),
            "target": target,
            "gradient_relative_error": grads,
        },
    )


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "thm2": check_thm2,
    "thm1": check_thm1,
    "finite_support": check_finite_support,
    "rho": check_rho,
    "rotation": check_rotation,
    "cauchy_schwarz": check_cauchy_schwarz,
    "cycles": check_cycles,
    "fourier": check_fourier,
    "poincare": check_poincare,
}


def run_checks(
    only: list[str] | None = None, seed: int = DEFAULT_SEED, inject_fault: str | None = None
) -> list[CheckResult]:
    keys = list(CHECKS) if not only else list(only)
    unknown = [k for k in keys if k not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check keys {unknown}; choose from {list(CHECKS)}")
    results = []
    for key in keys:
        start = time.perf_counter()
        try:
            if key == "thm2":
                res = check_thm2(seed, inject_fault=inject_fault == "thm2")
            elif key == "rho":
                res = check_rho()
            else:
                res = CHECKS[key](seed)
        except Exception as exc:
            raise ESVerifyError(f"check {key!r} raised {type(exc).__name__}: {exc}") from exc
        res.seconds = time.perf_counter() - start
        results.append(res)
    return results
