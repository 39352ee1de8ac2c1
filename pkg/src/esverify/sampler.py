"""Monte Carlo checks for the two continuous applications.

Random numbers come from the Philox-4x32-10 counter-based generator keyed
directly by the user seed (counter starting at 0), uniform doubles are
``(next_uint64 >> 11) * 2**-53`` as produced by :class:`numpy.random.Generator`,
and standard normals use the Box-Muller transform on pairs of uniforms.
Samples are produced in fixed-size blocks drawn sequentially from that single
stream, so a given ``(seed, samples)`` always yields the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ModelError

BLOCK = 1 << 16
_MASK64 = (1 << 64) - 1

SIGN_FLIP_FUNCTIONS = ("linear", "sin_sum", "product_quadratic")


def make_rng(seed: int) -> np.random.Generator:
    if isinstance(seed, bool) or int(seed) != seed:
        raise ModelError(f"seed must be an integer, got {seed!r}")
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))


def box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` standard normals from ``ceil(size/2)`` uniform pairs."""
    pairs = (size + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # in (0, 1]
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(2.0 * np.pi * u2)
    out[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return out[:size]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    samples_used: int

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.std_error
        return (self.mean - half, self.mean + half)

    @classmethod
    def from_samples(cls, values: np.ndarray) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        count = values.size
        if count == 0:
            raise ModelError("no samples")
        se = float(values.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        return cls(float(values.mean()), se, count)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.std_error,
            "ci95": list(self.ci95),
            "samples": self.samples_used,
        }


def combined_se(*estimates: McEstimate) -> float:
    return math.sqrt(sum(e.std_error**2 for e in estimates))


# ---------------------------------------------------------------------------
# Gaussian sign flips


@dataclass(frozen=True)
class SmoothFunction:
    """A smooth function of ``z`` (shape ``(..., n)``) with its gradient."""

    name: str
    params: tuple[float, ...]
    value: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    gradient: Callable[[np.ndarray], np.ndarray] = field(repr=False)


def make_test_function(name: str, n: int, params: Sequence[float] = ()) -> SmoothFunction:
    """``linear(a)``: a.z; ``sin_sum``: sin(sum z); ``product_quadratic(c)``:
    c * sum z^2 (``c`` defaults to 1)."""
    params = tuple(float(p) for p in params)
    if name == "linear":
        if len(params) != n:
            raise ModelError(f"linear needs {n} coefficients, got {len(params)}")
        a = np.asarray(params)
        return SmoothFunction(
            name, params, lambda z: z @ a, lambda z: np.broadcast_to(a, z.shape)
        )
    if name == "sin_sum":
        if params:
            raise ModelError("sin_sum takes no parameters")
        return SmoothFunction(
            name,
            params,
            lambda z: np.sin(z.sum(axis=-1)),
            lambda z: np.repeat(np.cos(z.sum(axis=-1))[..., None], z.shape[-1], axis=-1),
        )
    if name == "product_quadratic":
        if len(params) > 1:
            raise ModelError("product_quadratic takes at most one scale")
        c = params[0] if params else 1.0
        return SmoothFunction(
            name, (c,), lambda z: c * np.sum(z * z, axis=-1), lambda z: 2.0 * c * z
        )
    raise ModelError(f"unknown test function {name!r}")


@dataclass(frozen=True)
class SignFlipConfig:
    n: int
    p: float
    samples: int
    seed: int
    function: str = "linear"
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ModelError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ModelError(f"p must lie in [0, 1], got {self.p!r}")
        if isinstance(self.samples, bool) or int(self.samples) != self.samples or self.samples < 1:
            raise ModelError(f"samples must be a positive integer, got {self.samples!r}")
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))


@dataclass(frozen=True)
class SignFlipResult:
    lhs: McEstimate
    poincare_rhs: McEstimate
    rhs_terms: tuple[McEstimate, ...]
    flip_terms: tuple[McEstimate, ...]

    @property
    def bound_holds(self) -> bool:
        slack = 3.0 * combined_se(self.lhs, self.poincare_rhs)
        return self.lhs.mean <= self.poincare_rhs.mean + slack


def estimate_sign_flip_sides(cfg: SignFlipConfig) -> SignFlipResult:
    """Estimate ``E(Z_n - Z_0)^2`` and ``4(1-p) sum_i E (df/dz_i)^2``.

    With ``Y_i = B_i Z_i``, ``rhs_terms`` are the Efron-Stein increments
    ``E(Z_i - Z_{i-1})^2`` of the hybrid sequence, and ``flip_terms`` are
    ``(1-p) E(f(Z) - f(Z with z_i negated))^2``, which equal them in law.
    """
    fn = make_test_function(cfg.function, cfg.n, cfg.params)
    rng = make_rng(cfg.seed)
    n = cfg.n
    lhs, grad, terms, flips = [], [], [], []
    for start in range(0, cfg.samples, BLOCK):
        size = min(BLOCK, cfg.samples - start)
        z = box_muller(rng, size * n).reshape(size, n)
        b = np.where(rng.random((size, n)) < cfg.p, 1.0, -1.0)
        y = b * z
        f_z = fn.value(z)
        lhs.append((f_z - fn.value(y)) ** 2)
        g = fn.gradient(z)
        grad.append(4.0 * (1.0 - cfg.p) * np.sum(g * g, axis=-1))
        hybrid = y.copy()
        prev = fn.value(hybrid)
        step_terms, step_flips = [], []
        for i in range(n):
            hybrid[:, i] = z[:, i]
            cur = fn.value(hybrid)
            step_terms.append((cur - prev) ** 2)
            prev = cur
            flipped = z.copy()
            flipped[:, i] = -z[:, i]
            step_flips.append((1.0 - cfg.p) * (f_z - fn.value(flipped)) ** 2)
        terms.append(np.stack(step_terms, axis=1))
        flips.append(np.stack(step_flips, axis=1))
    terms_all = np.concatenate(terms)
    flips_all = np.concatenate(flips)
    return SignFlipResult(
        lhs=McEstimate.from_samples(np.concatenate(lhs)),
        poincare_rhs=McEstimate.from_samples(np.concatenate(grad)),
        rhs_terms=tuple(McEstimate.from_samples(terms_all[:, i]) for i in range(n)),
        flip_terms=tuple(McEstimate.from_samples(flips_all[:, i]) for i in range(n)),
    )


# ---------------------------------------------------------------------------
# Uniform rotations


@dataclass(frozen=True)
class RotationResult:
    lhs: McEstimate
    rhs_terms: tuple[McEstimate, ...]
    rhs_sum: McEstimate
    ratio: float | None
    ratio_se: float | None


def estimate_rotation_sides(n: int, eps: float, samples: int, seed: int) -> RotationResult:
    """Sample ``X`` uniform on ``[0, 2 pi)^n``, ``Y = X + 2 eps mod 2 pi``, and
    ``f = sin`` of the sum.  Closed forms: ``2 sin^2(n eps)`` and
    ``2 sin^2(eps)`` per increment.

    ``ratio`` is ``mean(lhs) / mean(sum of increments)`` with a delta-method
    standard error; both are ``None`` when the denominator vanishes.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ModelError(f"n must be a positive integer, got {n!r}")
    if isinstance(samples, bool) or int(samples) != samples or samples < 1:
        raise ModelError(f"samples must be a positive integer, got {samples!r}")
    rng = make_rng(seed)
    two_pi = 2.0 * math.pi
    lhs, terms = [], []
    for start in range(0, samples, BLOCK):
        size = min(BLOCK, samples - start)
        x = two_pi * rng.random((size, n))
        y = np.mod(x + 2.0 * eps, two_pi)
        s = y.sum(axis=1)
        z0 = np.sin(s)
        prev = z0
        block_terms = []
        for i in range(n):
            s = s + (x[:, i] - y[:, i])
            cur = np.sin(s)
            block_terms.append((cur - prev) ** 2)
            prev = cur
        lhs.append((prev - z0) ** 2)
        terms.append(np.stack(block_terms, axis=1))
    lhs_all = np.concatenate(lhs)
    terms_all = np.concatenate(terms)
    total = terms_all.sum(axis=1)
    lhs_est = McEstimate.from_samples(lhs_all)
    sum_est = McEstimate.from_samples(total)
    ratio = ratio_se = None
    if sum_est.mean > 0:
        ratio = lhs_est.mean / sum_est.mean
        resid = (lhs_all - ratio * total) / sum_est.mean
        ratio_se = McEstimate.from_samples(resid).std_error
    return RotationResult(
        lhs=lhs_est,
        rhs_terms=tuple(McEstimate.from_samples(terms_all[:, i]) for i in range(n)),
        rhs_sum=sum_est,
        ratio=ratio,
        ratio_se=ratio_se,
    )
