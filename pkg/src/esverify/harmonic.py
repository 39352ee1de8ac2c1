"""Fourier analysis on products of cyclic groups and the constant rho(k).

Characters of Z_{m_1} x ... x Z_{m_n} are

    chi_u(a) = prod_j exp(2 pi i u_j a_j / m_j),

and on the shift model (Y_j = X_j + 1 mod m_j) they diagonalize both
quadratic forms with ratio

    sin^2(pi sum_j u_j/m_j) / sum_j sin^2(pi u_j/m_j).

rho(k) is the largest such ratio over moduli m_i <= k_i.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ComplexityError, ModelError
from .model import FunctionTable

#: Refuse rho enumerations with more (m, u) combinations than this.
MAX_RHO_COMBINATIONS = 10**8
_RHO_TIE = 1e-12
_GRID_BLOCK = 1 << 21


@dataclass(frozen=True)
class FourierCoefficients:
    coefficients: np.ndarray
    moduli: tuple[int, ...]

    def inverse(self) -> np.ndarray:
        """Reconstruct the function table from its coefficients."""
        return character_matrix(self.moduli).T @ self.coefficients


@dataclass(frozen=True)
class RhoResult:
    rho: float
    argmax_m: tuple[int, ...]
    argmax_u: tuple[int, ...]
    kappa_half_bound: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "argmax_m": list(self.argmax_m),
            "argmax_u": list(self.argmax_u),
            "kappa_half_bound": self.kappa_half_bound,
        }


def _moduli(moduli: Sequence[int]) -> tuple[int, ...]:
    out = tuple(int(m) for m in moduli)
    if not out or any(m < 1 for m in out):
        raise ModelError(f"moduli must be positive integers, got {list(moduli)}")
    return out


def character_matrix(moduli: Sequence[int]) -> np.ndarray:
    """``C[u, a] = chi_u(a)`` with both indices in mixed-radix order."""
    mats = []
    for m in _moduli(moduli):
        k = np.arange(m)
        mats.append(np.exp(2j * np.pi * np.outer(k, k) / m))
    out = np.ones((1, 1), dtype=complex)
    for mat in mats:
        out = np.kron(out, mat)
    return out


def fourier_transform(f: FunctionTable | np.ndarray, moduli: Sequence[int]) -> FourierCoefficients:
    """Coefficients ``c_u = mean_a f(a) conj(chi_u(a))`` by direct summation."""
    moduli = _moduli(moduli)
    values = np.asarray(f.values if isinstance(f, FunctionTable) else f)
    if values.shape != (math.prod(moduli),):
        raise ModelError(
            f"table length {values.size} does not match moduli {list(moduli)}"
        )
    chars = character_matrix(moduli)
    return FourierCoefficients(chars.conj() @ values / values.size, moduli)


def shift_eigenvalue(u: Sequence[int], moduli: Sequence[int]) -> float:
    """Ratio of the two sides for the character ``chi_u`` on the shift model."""
    moduli = _moduli(moduli)
    u = tuple(int(x) for x in u)
    if len(u) != len(moduli) or any(not 0 <= x < m for x, m in zip(u, moduli)):
        raise ModelError(f"need 0 <= u_j < m_j, got u={list(u)} m={list(moduli)}")
    if not any(u):
        return 0.0
    angles = [math.pi * x / m for x, m in zip(u, moduli)]
    den = sum(math.sin(a) ** 2 for a in angles)
    return math.sin(math.fsum(angles)) ** 2 / den


def _options(k: int) -> tuple[np.ndarray, np.ndarray]:
    m = np.concatenate([np.full(mm, mm) for mm in range(1, k + 1)])
    u = np.concatenate([np.arange(mm) for mm in range(1, k + 1)])
    return m, u


def rho(k: Sequence[int]) -> RhoResult:
    """Exhaustive maximization defining rho(k).

    Every ``1 <= m_i <= k_i`` and ``0 <= u_i < m_i`` is visited; ``u = 0``
    contributes 0.  Among maximizers (within 1e-12) the lexicographically
    smallest ``(m, u)`` is reported.
    """
    k = _moduli(k)
    options = [_options(ki) for ki in k]
    counts = [len(m) for m, _ in options]
    total = math.prod(counts)
    if total > MAX_RHO_COMBINATIONS:
        raise ComplexityError(
            f"rho enumeration over {total} combinations exceeds {MAX_RHO_COMBINATIONS}"
        )
    angle = [np.pi * u / m for m, u in options]
    sin2 = [np.sin(a) ** 2 for a in angle]

    # Split into a python loop over leading coordinates and a vectorized
    # grid over the trailing ones, keeping each grid below _GRID_BLOCK.
    split = len(k)
    while split > 0 and math.prod(counts[split - 1 :]) <= _GRID_BLOCK:
        split -= 1
    tail_angle = np.zeros(1)
    tail_den = np.zeros(1)
    for a, s in zip(angle[split:], sin2[split:]):
        tail_angle = (tail_angle[:, None] + a[None, :]).ravel()
        tail_den = (tail_den[:, None] + s[None, :]).ravel()
    tail_counts = counts[split:]

    best = -1.0
    candidates: list[tuple[int, ...]] = []
    for head in itertools.product(*(range(c) for c in counts[:split])):
        head_angle = sum(angle[i][j] for i, j in enumerate(head))
        head_den = sum(sin2[i][j] for i, j in enumerate(head))
        den = tail_den + head_den
        num = np.sin(tail_angle + head_angle) ** 2
        ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        top = float(ratio.max())
        if top > best + _RHO_TIE:
            best, candidates = top, []
        if top >= best - _RHO_TIE:
            best = max(best, top)
            hits = np.flatnonzero(ratio >= best - _RHO_TIE)
            for flat in hits:
                tail = np.unravel_index(flat, tail_counts) if tail_counts else ()
                candidates.append(head + tuple(int(t) for t in tail))
    picks = [
        (
            tuple(int(options[i][0][j]) for i, j in enumerate(c)),
            tuple(int(options[i][1][j]) for i, j in enumerate(c)),
        )
        for c in candidates
        if _ratio_of(c, options) >= best - _RHO_TIE
    ]
    m_best, u_best = min(picks)
    value = shift_eigenvalue(u_best, m_best)
    kappa = max(k)
    ell = sum(1 for x in u_best if x)
    return RhoResult(
        rho=value,
        argmax_m=m_best,
        argmax_u=u_best,
        kappa_half_bound=kappa / 2,
        diagnostics={"ell": ell, "kappa": kappa, "combinations": total},
    )


def _ratio_of(choice: tuple[int, ...], options) -> float:
    m = [int(options[i][0][j]) for i, j in enumerate(choice)]
    u = [int(options[i][1][j]) for i, j in enumerate(choice)]
    return shift_eigenvalue(u, m)


def rho_bound_check(k: Sequence[int]) -> tuple[bool, dict]:
    """Check rho(k) <= max_i k_i / 2 and the two intermediate proof bounds.

    At the maximizer, with ``ell`` nonzero frequencies and ``kappa = max k``,
    the ratio must not exceed ``ell`` nor ``kappa^2 / (4 ell)``, and
    ``sin(pi/kappa) >= 2/kappa``.  The last two only apply for ``kappa >= 2``
    and ``ell >= 1``.
    """
    res = rho(k)
    ell = res.diagnostics["ell"]
    kappa = res.diagnostics["kappa"]
    checks = {"half_max": res.rho <= res.kappa_half_bound + _RHO_TIE}
    checks["ell_bound"] = res.rho <= ell + _RHO_TIE
    if kappa >= 2 and ell >= 1:
        checks["sine_bound"] = math.sin(math.pi / kappa) >= 2 / kappa - _RHO_TIE
        checks["kappa_bound"] = res.rho <= kappa**2 / (4 * ell) + _RHO_TIE
    diagnostics = {
        **res.to_dict(),
        "ell": ell,
        "kappa": kappa,
        "checks": checks,
    }
    return all(checks.values()), diagnostics


def rotation_ratio(n: int, eps: float) -> float:
    """``sin^2(n eps) / (n sin^2 eps)``: the ratio for f = sin of the sum
    under uniform rotations by 2 eps.  Tends to n as eps -> 0."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ModelError(f"n must be a positive integer, got {n!r}")
    turns = eps / math.pi
    if math.isclose(turns, round(turns), rel_tol=0.0, abs_tol=1e-12):
        raise ModelError("eps must not be a multiple of pi")
    return math.sin(n * eps) ** 2 / (n * math.sin(eps) ** 2)
