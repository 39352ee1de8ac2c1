"""Exact evaluation of both sides of the Efron-Stein inequality.

For a product model and a function ``f`` the hybrid values are

    Z_i = f(X_1, ..., X_i, Y_{i+1}, ..., Y_n),   i = 0, ..., n,

and the engine returns ``E|Z_n - Z_0|^2`` together with every
``E|Z_i - Z_{i-1}|^2`` by summing over the product of the joint supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ComplexityError, ModelError
from .model import FunctionTable, ProductModel

#: Refuse exact enumeration beyond this many support tuples.
MAX_TUPLES = 10**8
#: Slack used by every ``lhs <= bound * rhs`` comparison.
SIDE_TOL = 1e-10
_CHUNK = 1 << 18


@dataclass(frozen=True)
class SidesReport:
    lhs: float
    rhs_terms: tuple[float, ...]
    rhs_sum: float
    ratio: float | None
    bound: float
    bound_kind: str
    satisfied: bool
    cauchy_schwarz_holds: bool

    @property
    def n(self) -> int:
        return len(self.rhs_terms)

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs_terms": list(self.rhs_terms),
            "rhs_sum": self.rhs_sum,
            "ratio": self.ratio,
            "bound": self.bound,
            "satisfied": self.satisfied,
        }


def support_size(model: ProductModel) -> int:
    return math.prod(len(p.support()[2]) for p in model.pairs)


def check_support_size(model: ProductModel) -> int:
    total = support_size(model)
    if total > MAX_TUPLES:
        raise ComplexityError(
            f"{total} support tuples exceed the enumeration guard of {MAX_TUPLES}"
        )
    return total


def model_bound(model: ProductModel) -> tuple[float, str]:
    """The tightest constant the theory guarantees for ``model``.

    1 when every pair is exchangeable; for identically distributed pairs
    the smaller of rho(k) (with k_i the value-set sizes) and the cycle
    constant; n otherwise.
    """
    if model.all_exchangeable:
        return 1.0, "exchangeable"
    if model.all_identically_distributed:
        from .flows import refined_constant
        from .harmonic import rho

        rho_value = rho(model.sizes).rho
        cycle = refined_constant(model)
        if cycle <= rho_value:
            return cycle, "cycle"
        return rho_value, "rho"
    return float(model.n), "cauchy_schwarz"


def _check_function(model: ProductModel, f: FunctionTable) -> np.ndarray:
    if len(f) != model.dimension:
        raise ModelError(
            f"function has {len(f)} entries, model dimension is {model.dimension}"
        )
    values = np.asarray(f.values)
    if not np.all(np.isfinite(values)):
        raise ModelError("function values must be finite")
    return values


def _increments(model: ProductModel, f: np.ndarray):
    """Yield ``(lhs_chunk, [term_1_chunk, ...])`` weighted squared moduli.

    Chunks are fixed-size slices of the product support in mixed-radix
    order, so the summation tree is fixed for given inputs.
    """
    supports = [p.support() for p in model.pairs]
    counts = [len(s[2]) for s in supports]
    strides = np.array(
        [math.prod(model.sizes[i + 1 :]) for i in range(model.n)], dtype=np.int64
    )
    total = math.prod(counts)
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        picks = np.unravel_index(flat, counts)
        weight = np.ones(flat.size)
        x_off, y_off = [], []
        for (a, b, mass), pick, stride in zip(supports, picks, strides):
            weight = weight * mass[pick]
            x_off.append(a[pick].astype(np.int64) * stride)
            y_off.append(b[pick].astype(np.int64) * stride)
        index = np.sum(y_off, axis=0)
        z_prev = f[index]
        z_first = z_prev
        terms = []
        for i in range(model.n):
            index = index + x_off[i] - y_off[i]
            z = f[index]
            terms.append(weight * np.abs(z - z_prev) ** 2)
            z_prev = z
        yield weight * np.abs(z_prev - z_first) ** 2, terms


def compute_sides(model: ProductModel, f: FunctionTable) -> SidesReport:
    """Both sides of the inequality, summed exactly over the joint support."""
    values = _check_function(model, f)
    check_support_size(model)
    lhs_parts: list[float] = []
    term_parts: list[list[float]] = [[] for _ in range(model.n)]
    for lhs_chunk, terms in _increments(model, values):
        lhs_parts.append(float(np.sum(lhs_chunk)))
        for acc, t in zip(term_parts, terms):
            acc.append(float(np.sum(t)))
    lhs = float(np.sum(lhs_parts))
    rhs_terms = tuple(float(np.sum(t)) for t in term_parts)
    rhs_sum = float(np.sum(rhs_terms))
    bound, kind = model_bound(model)
    if rhs_sum == 0.0:
        ratio = None
        satisfied = lhs <= SIDE_TOL
    else:
        ratio = lhs / rhs_sum
        satisfied = lhs <= bound * rhs_sum + SIDE_TOL
    return SidesReport(
        lhs=lhs,
        rhs_terms=rhs_terms,
        rhs_sum=rhs_sum,
        ratio=ratio,
        bound=bound,
        bound_kind=kind,
        satisfied=satisfied,
        cauchy_schwarz_holds=lhs <= model.n * rhs_sum + SIDE_TOL,
    )


def verify(model: ProductModel, f: FunctionTable) -> SidesReport:
    """:func:`compute_sides` plus the flag-independent Cauchy-Schwarz check.

    The returned report is ``satisfied`` only if both the applicable bound
    and ``lhs <= n * rhs_sum`` hold.
    """
    report = compute_sides(model, f)
    if report.cauchy_schwarz_holds:
        return report
    return SidesReport(
        lhs=report.lhs,
        rhs_terms=report.rhs_terms,
        rhs_sum=report.rhs_sum,
        ratio=report.ratio,
        bound=report.bound,
        bound_kind=report.bound_kind,
        satisfied=False,
        cauchy_schwarz_holds=False,
    )
