"""Both sides of the inequality as quadratic forms, and the worst-case ratio.

For a product model there are real symmetric PSD matrices ``Q`` and
``Q_1, ..., Q_n`` with

    E|Z_n - Z_0|^2 = f^H Q f,    E|Z_i - Z_{i-1}|^2 = f^H Q_i f,

for every real or complex table ``f``.  Each is built from a transition
matrix ``T`` (``T[a, b]`` = probability that the two compared points are
``a`` and ``b``) as ``diag(T 1) + diag(T^T 1) - T - T^T``.  The sharp
constant over all functions is the largest generalized eigenvalue of
``(Q, B)`` with ``B = sum_i Q_i``.

Because the forms are real, a complex ``f = g + i h`` splits as
``f^H Q f = g^T Q g + h^T Q h``, so the real generalized eigenproblem
already gives the complex supremum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import check_support_size
from .errors import ComplexityError, ConvergenceError
from .model import FunctionTable, ProductModel

#: Dense assembly and eigensolves are refused above this dimension.
MAX_DIMENSION = 2048
KERNEL_RTOL = 1e-10
KERNEL_ATOL = 1e-8
BOUND_TOL = 1e-8
_TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuadraticForms:
    lhs_matrix: np.ndarray
    rhs_matrix: np.ndarray
    per_coordinate: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return len(self.per_coordinate)

    def lhs(self, f) -> float:
        return _form(self.lhs_matrix, f)

    def rhs_terms(self, f) -> list[float]:
        return [_form(q, f) for q in self.per_coordinate]


@dataclass(frozen=True, eq=False)
class WorstCase:
    lambda_max: float
    extremal_f: FunctionTable
    kernel_consistent: bool
    spectrum: np.ndarray

    def to_dict(self) -> dict:
        return {
            "lambda_max": self.lambda_max,
            "extremal_f": self.extremal_f.values.tolist(),
            "kernel_consistent": self.kernel_consistent,
        }


@dataclass(frozen=True, eq=False)
class Certificate:
    worst: WorstCase
    n: int
    bounds: dict
    passes: dict

    @property
    def tightest(self) -> float:
        return min(v for v in self.bounds.values() if v is not None)

    @property
    def passed(self) -> bool:
        return all(self.passes.values())

    def to_dict(self) -> dict:
        out = self.worst.to_dict()
        out["bounds"] = dict(self.bounds)
        out["passes"] = dict(self.passes)
        out["tightest_bound"] = self.tightest
        return out


def _form(matrix: np.ndarray, f) -> float:
    v = np.asarray(f.values if isinstance(f, FunctionTable) else f)
    return float(np.real(np.vdot(v, matrix @ v)))


def laplacian(transition: np.ndarray) -> np.ndarray:
    """``sum_ab T[a,b] (e_a - e_b)(e_a - e_b)^T`` for a transition matrix."""
    out = -(transition + transition.T)
    out[np.diag_indices_from(out)] += transition.sum(axis=1) + transition.sum(axis=0)
    return out


def _kron_all(factors) -> np.ndarray:
    out = np.ones((1, 1))
    for fac in factors:
        out = np.kron(out, fac)
    return out


def assemble_forms(model: ProductModel) -> QuadraticForms:
    """Dense ``Q``, ``B`` and ``Q_i`` for ``model``.

    ``Z_n - Z_0`` compares ``x`` with ``y``, so its transition matrix is
    the Kronecker product of the joints.  ``Z_i - Z_{i-1}`` compares two
    points that share the x-prefix and y-suffix and differ in coordinate
    ``i`` only, giving marginals on the other coordinates.
    """
    if model.dimension > MAX_DIMENSION:
        raise ComplexityError(
            f"dimension {model.dimension} exceeds the dense cap of {MAX_DIMENSION}"
        )
    check_support_size(model)
    joints = [np.asarray(p.joint) for p in model.pairs]
    q = laplacian(_kron_all(joints))
    per = []
    for i in range(model.n):
        factors = (
            [np.diag(p.x_marginal) for p in model.pairs[:i]]
            + [joints[i]]
            + [np.diag(p.y_marginal) for p in model.pairs[i + 1 :]]
        )
        per.append(laplacian(_kron_all(factors)))
    b = np.sum(per, axis=0) if per else np.zeros_like(q)
    return QuadraticForms(q, b, tuple(per))


def jacobi_eigh(
    matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a dense real symmetric matrix.

    Sweeps over all ``(p, q)`` pairs until the off-diagonal Frobenius norm
    drops below ``tol * ||matrix||_F``.  Returns ascending eigenvalues and
    orthonormal eigenvectors as columns, like :func:`numpy.linalg.eigh`.
    """
    a = np.array(matrix, dtype=float)
    dim = a.shape[0]
    v = np.eye(dim)
    scale = np.linalg.norm(a)
    if dim == 0 or scale == 0.0:
        return np.zeros(dim), v
    target = tol * scale

    def off_norm() -> float:
        return float(np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0)))

    for _ in range(max_sweeps):
        if off_norm() < target:
            break
        for p in range(dim - 1):
            for r in range(p + 1, dim):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                theta = (a[r, r] - a[p, p]) / (2.0 * apr)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, ar = a[:, p].copy(), a[:, r].copy()
                a[:, p] = c * ap - s * ar
                a[:, r] = s * ap + c * ar
                ap, ar = a[p, :].copy(), a[r, :].copy()
                a[p, :] = c * ap - s * ar
                a[r, :] = s * ap + c * ar
                vp, vr = v[:, p].copy(), v[:, r].copy()
                v[:, p] = c * vp - s * vr
                v[:, r] = s * vp + c * vr
    else:
        if off_norm() >= target:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _eigh(matrix: np.ndarray, solver: str):
    if solver == "lapack":
        try:
            return np.linalg.eigh(matrix)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(str(exc)) from None
    if solver == "jacobi":
        return jacobi_eigh(matrix)
    raise ValueError(f"unknown solver {solver!r}")


def _canonical_vector(basis: np.ndarray) -> np.ndarray:
    """Deterministic unit vector in the span of ``basis`` columns.

    Picks the direction maximizing the magnitude of the first coordinate
    that is not identically zero on the span, then makes it positive.
    """
    if basis.shape[1] == 1:
        vec = basis[:, 0]
    else:
        q, _ = np.linalg.qr(basis)
        proj = q @ q.T
        norms = np.linalg.norm(proj, axis=0)
        j = int(np.flatnonzero(norms > 1e-8 * norms.max())[0])
        vec = proj[:, j]
    vec = vec / np.linalg.norm(vec)
    lead = vec[np.flatnonzero(np.abs(vec) > 1e-12)[0]]
    return vec if lead > 0 else -vec


def max_generalized_eigenvalue(
    forms: QuadraticForms, solver: str = "lapack"
) -> WorstCase:
    """Largest ``f^T Q f / f^T B f`` over ``f`` outside the kernel of ``B``.

    ``B`` is diagonalized, ``Q`` is compressed onto the eigenvectors with
    eigenvalue above ``1e-10 * max eig(B)`` and whitened, and the top
    eigenvector is mapped back.  ``solver`` selects LAPACK (default) or the
    cyclic Jacobi routine.
    """
    q, b = forms.lhs_matrix, forms.rhs_matrix
    dim = q.shape[0]
    w, v = _eigh(b, solver)
    top = float(w.max(initial=0.0))
    if top <= 0.0 or np.linalg.norm(b) == 0.0:
        kernel_ok = bool(np.linalg.norm(q) <= KERNEL_ATOL)
        f = np.zeros(dim)
        f[0] = 1.0
        return WorstCase(0.0, FunctionTable(f), kernel_ok, np.zeros(0))
    keep = w > KERNEL_RTOL * top
    vr, wr = v[:, keep], w[keep]
    kernel = v[:, ~keep]
    kernel_ok = bool(
        kernel.shape[1] == 0
        or np.linalg.norm(q @ kernel, axis=0).max() <= KERNEL_ATOL
    )
    whiten = vr / np.sqrt(wr)
    m = whiten.T @ q @ whiten
    m = (m + m.T) / 2
    mu, z = _eigh(m, solver)
    lam = float(mu[-1])
    tied = mu >= lam - _TIE_RTOL * max(1.0, abs(lam))
    extremal = _canonical_vector(whiten @ z[:, tied])
    return WorstCase(max(lam, 0.0), FunctionTable(extremal), kernel_ok, mu)


def certify(model: ProductModel, solver: str = "lapack") -> Certificate:
    """Worst-case constant of ``model`` against every applicable bound.

    Cauchy-Schwarz (``n``) always applies; ``1`` applies when all pairs are
    exchangeable; rho(k) and the cycle constant apply when all pairs are
    identically distributed.
    """
    from .flows import refined_constant
    from .harmonic import rho

    worst = max_generalized_eigenvalue(assemble_forms(model), solver)
    bounds = {
        "exchangeable": 1.0 if model.all_exchangeable else None,
        "rho": None,
        "cycle": None,
        "cauchy_schwarz": float(model.n),
    }
    if model.all_identically_distributed:
        bounds["rho"] = rho(model.sizes).rho
        bounds["cycle"] = refined_constant(model)
    passes = {
        key: worst.lambda_max <= value + BOUND_TOL
        for key, value in bounds.items()
        if value is not None
    }
    return Certificate(worst, model.n, bounds, passes)
