"""Coordinate pair laws, product models and function tables.

A model is an ordered list of independent coordinate pairs ``(X_i, Y_i)``.
Each pair lives on a finite, strictly increasing value set and is described
by its joint probability matrix ``joint[a, b] = P(X_i = values[a], Y_i =
values[b])``.  Functions are tables over the product of the value sets,
linearized in mixed-radix order with coordinate 1 varying slowest (numpy
C order), and that order is used by every other module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ModelError

#: Entrywise tolerance for the symmetry / equal-marginal flags.
FLAG_TOL = 1e-12
#: Largest deviation of the total mass from 1 that is silently renormalized.
RENORMALIZE_TOL = 1e-9

BUILTIN_MODELS = (
    "rademacher_flip",
    "cyclic_shift",
    "independent_copy",
    "three_point_different_law",
)
BUILTIN_FUNCTIONS = ("sin_sum", "product_sign", "linear", "parity", "character")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def is_symmetric(joint: np.ndarray, tol: float = FLAG_TOL) -> bool:
    return bool(np.all(np.abs(joint - joint.T) <= tol))


def has_equal_marginals(joint: np.ndarray, tol: float = FLAG_TOL) -> bool:
    return bool(np.all(np.abs(joint.sum(axis=1) - joint.sum(axis=0)) <= tol))


@dataclass(frozen=True, eq=False)
class PairLaw:
    """Joint law of one coordinate pair on a common value set.

    Use :meth:`from_joint` to build one from raw input; it sorts the values,
    renormalizes tiny mass deviations and computes the two flags.  The
    constructor itself only checks invariants, so the flags can be set by
    hand (the ``reproduce`` negative control relies on this).
    """

    values: tuple[float, ...]
    joint: np.ndarray
    exchangeable: bool
    identically_distributed: bool

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        joint = np.asarray(self.joint, dtype=float)
        s = len(values)
        if s < 1:
            raise ModelError("a pair needs at least one value")
        if joint.shape != (s, s):
            raise ModelError(f"joint must be {s}x{s}, got shape {joint.shape}")
        if not all(math.isfinite(v) for v in values):
            raise ModelError("values must be finite")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ModelError("values must be strictly increasing")
        if not np.all(np.isfinite(joint)):
            raise ModelError("joint probabilities must be finite")
        if np.any(joint < 0):
            raise ModelError("joint probabilities must be nonnegative")
        if abs(joint.sum() - 1.0) > FLAG_TOL:
            raise ModelError(f"joint must sum to 1, got {joint.sum()!r}")
        if self.exchangeable and not self.identically_distributed:
            raise ModelError("an exchangeable pair is identically distributed")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "joint", _readonly(joint))
        object.__setattr__(self, "exchangeable", bool(self.exchangeable))
        object.__setattr__(
            self, "identically_distributed", bool(self.identically_distributed)
        )

    @classmethod
    def from_joint(cls, values: Sequence[float], joint: Any) -> "PairLaw":
        """Validate, canonicalize and flag a joint law on ``values``."""
        values = [float(v) for v in values]
        try:
            joint = np.array(joint, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ModelError(f"joint is not a numeric matrix: {exc}") from None
        s = len(values)
        if s < 1:
            raise ModelError("a pair needs at least one value")
        if joint.shape != (s, s):
            raise ModelError(f"joint must be {s}x{s}, got shape {joint.shape}")
        if len(set(values)) != s:
            raise ModelError(f"duplicate values in {values}")
        if not np.all(np.isfinite(joint)):
            raise ModelError("joint probabilities must be finite")
        if np.any(joint < 0):
            raise ModelError("joint probabilities must be nonnegative")
        total = joint.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise ModelError(f"joint sums to {total!r}, deviation exceeds 1e-9")
        if abs(total - 1.0) > FLAG_TOL:
            joint = joint / total
        order = np.argsort(values, kind="stable")
        joint = joint[np.ix_(order, order)]
        values = [values[i] for i in order]
        same = has_equal_marginals(joint)
        return cls(
            values=tuple(values),
            joint=joint,
            exchangeable=is_symmetric(joint) and same,
            identically_distributed=same,
        )

    @classmethod
    def from_supports(
        cls, x_values: Sequence[float], y_values: Sequence[float], joint: Any
    ) -> "PairLaw":
        """Build a pair whose X and Y live on different value sets.

        The common value set is the union of both supports and the joint
        matrix is extended with zeros.
        """
        joint = np.asarray(joint, dtype=float)
        if joint.shape != (len(x_values), len(y_values)):
            raise ModelError(
                f"joint must be {len(x_values)}x{len(y_values)}, got {joint.shape}"
            )
        for name, vals in (("x_values", x_values), ("y_values", y_values)):
            if len(set(vals)) != len(vals):
                raise ModelError(f"duplicate values in {name}")
        union = sorted(set(float(v) for v in x_values) | set(float(v) for v in y_values))
        pos = {v: i for i, v in enumerate(union)}
        full = np.zeros((len(union), len(union)))
        rows = [pos[float(v)] for v in x_values]
        cols = [pos[float(v)] for v in y_values]
        full[np.ix_(rows, cols)] = joint
        return cls.from_joint(union, full)

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def x_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def y_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def support(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Index arrays ``(a, b)`` and masses of the strictly positive entries."""
        a, b = np.nonzero(self.joint > 0)
        return a, b, self.joint[a, b]

    def to_dict(self) -> dict:
        return {"values": list(self.values), "joint": self.joint.tolist()}


@dataclass(frozen=True, eq=False)
class ProductModel:
    """Independent coordinate pairs; functions live on the product index space."""

    pairs: tuple[PairLaw, ...]

    def __post_init__(self) -> None:
        pairs = tuple(self.pairs)
        if not pairs:
            raise ModelError("a model needs at least one pair")
        if not all(isinstance(p, PairLaw) for p in pairs):
            raise ModelError("pairs must be PairLaw instances")
        object.__setattr__(self, "pairs", pairs)

    @property
    def n(self) -> int:
        return len(self.pairs)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(p.size for p in self.pairs)

    @property
    def dimension(self) -> int:
        return math.prod(self.sizes)

    @property
    def all_exchangeable(self) -> bool:
        return all(p.exchangeable for p in self.pairs)

    @property
    def all_identically_distributed(self) -> bool:
        return all(p.identically_distributed for p in self.pairs)

    def grid(self) -> list[np.ndarray]:
        """Per-coordinate index arrays of length ``dimension`` (mixed radix)."""
        return [g.ravel() for g in np.indices(self.sizes)]

    def value_grid(self) -> list[np.ndarray]:
        """Per-coordinate value arrays of length ``dimension``."""
        return [
            np.asarray(p.values)[idx] for p, idx in zip(self.pairs, self.grid())
        ]

    def to_dict(self) -> dict:
        return {"pairs": [p.to_dict() for p in self.pairs]}


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """Values of ``f`` on the product index space of a model."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.ndim != 1:
            raise ModelError("a function table must be one-dimensional")
        vals = vals.astype(complex if np.iscomplexobj(vals) else float)
        if not np.all(np.isfinite(vals)):
            raise ModelError("function values must be finite")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def scalar_kind(self) -> str:
        return "complex" if np.iscomplexobj(self.values) else "real"

    def __len__(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        if self.scalar_kind == "complex":
            return {"table": [[z.real, z.imag] for z in self.values.tolist()]}
        return {"table": self.values.tolist()}


# ---------------------------------------------------------------------------
# Parsing and serialization


def _load(document: Any) -> Any:
    if isinstance(document, (str, bytes, bytearray)):
        try:
            return json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError(f"malformed JSON: {exc}") from None
    return document


def parse_model(document: Any) -> ProductModel:
    """Parse a model document (JSON text or the decoded mapping).

    Schema: ``{"pairs": [{"values": [...], "joint": [[...], ...]}, ...]}``.
    A pair may instead give ``x_values`` and ``y_values`` with a rectangular
    joint; the two supports are merged into one value set.  A document of the
    form ``{"builtin": name, "params": [...]}`` names a builtin model.
    """
    doc = _load(document)
    if isinstance(doc, dict) and "builtin" in doc:
        params = doc.get("params", [])
        if not isinstance(params, list):
            raise ModelError("params must be a list")
        return build_builtin(doc["builtin"], *params)
    if not isinstance(doc, dict) or not isinstance(doc.get("pairs"), list):
        raise ModelError('model document must be an object with a "pairs" list')
    pairs = []
    for i, entry in enumerate(doc["pairs"]):
        if not isinstance(entry, dict) or "joint" not in entry:
            raise ModelError(f"pair {i}: expected an object with a joint matrix")
        try:
            if "values" in entry:
                pairs.append(PairLaw.from_joint(entry["values"], entry["joint"]))
            elif "x_values" in entry and "y_values" in entry:
                pairs.append(
                    PairLaw.from_supports(
                        entry["x_values"], entry["y_values"], entry["joint"]
                    )
                )
            else:
                raise ModelError("missing values")
        except ModelError as exc:
            raise ModelError(f"pair {i}: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ModelError(f"pair {i}: malformed entry ({exc})") from None
    return ProductModel(tuple(pairs))


def serialize_model(model: ProductModel) -> str:
    return json.dumps(model.to_dict())


def _check_int(name: str, value: Any, low: int) -> int:
    if isinstance(value, bool) or int(value) != value or value < low:
        raise ModelError(f"{name} must be an integer >= {low}, got {value!r}")
    return int(value)


def build_builtin(name: str, *params: Any) -> ProductModel:
    """Exact product models with closed-form behaviour.

    ``rademacher_flip(n)``
        Y = -X with X uniform on {-1, 1}.
    ``cyclic_shift(n, m)``
        X uniform on {0, ..., m-1}, Y = X + 1 mod m.
    ``independent_copy(n, pmf)``
        X and Y independent with law ``pmf`` on {0, ..., len(pmf)-1}.
    ``three_point_different_law(n)``
        X uniform on {-1, 1}, Y = 0, common values {-1, 0, 1}.
    """
    if name not in BUILTIN_MODELS:
        raise ModelError(f"unknown builtin model {name!r}")
    if not params:
        raise ModelError(f"{name} needs at least the parameter n")
    n = _check_int("n", params[0], 1)
    if name == "rademacher_flip":
        if len(params) != 1:
            raise ModelError("rademacher_flip takes (n,)")
        pair = PairLaw.from_joint([-1.0, 1.0], [[0.0, 0.5], [0.5, 0.0]])
    elif name == "cyclic_shift":
        if len(params) != 2:
            raise ModelError("cyclic_shift takes (n, m)")
        m = _check_int("m", params[1], 1)
        joint = np.zeros((m, m))
        joint[np.arange(m), (np.arange(m) + 1) % m] = 1.0 / m
        pair = PairLaw.from_joint(range(m), joint)
    elif name == "independent_copy":
        if len(params) != 2:
            raise ModelError("independent_copy takes (n, pmf)")
        try:
            pmf = np.asarray(params[1], dtype=float)
        except (TypeError, ValueError):
            raise ModelError("pmf must be a list of probabilities") from None
        if (
            pmf.ndim != 1
            or pmf.size == 0
            or np.any(pmf < 0)
            or abs(pmf.sum() - 1.0) > RENORMALIZE_TOL
        ):
            raise ModelError("pmf must be a probability vector")
        pair = PairLaw.from_joint(range(pmf.size), np.outer(pmf, pmf))
    else:
        if len(params) != 1:
            raise ModelError("three_point_different_law takes (n,)")
        pair = PairLaw.from_supports([-1.0, 1.0], [0.0], [[0.5], [0.5]])
    return ProductModel((pair,) * n)


# ---------------------------------------------------------------------------
# Functions


def build_function(name: str, model: ProductModel, params: Sequence = ()) -> FunctionTable:
    """Evaluate a named builtin function on the product grid of ``model``.

    ``parity`` takes 1-based coordinate indices; ``character`` takes one
    frequency per coordinate and uses the value *indices*, so it is the
    group character of Z_{s_1} x ... x Z_{s_n}.
    """
    params = list(params)
    n = model.n
    xs = model.value_grid()
    if name == "sin_sum":
        if params:
            raise ModelError("sin_sum takes no parameters")
        return FunctionTable(np.sin(np.sum(xs, axis=0)))
    if name == "product_sign":
        if params:
            raise ModelError("product_sign takes no parameters")
        return FunctionTable(xs[0] * np.sum(np.abs(xs), axis=0))
    if name == "linear":
        if len(params) != n:
            raise ModelError(f"linear needs {n} coefficients, got {len(params)}")
        coef = np.asarray(params, dtype=float)
        return FunctionTable(np.tensordot(coef, np.asarray(xs), axes=1))
    if name == "parity":
        subset = sorted({_check_int("parity index", i, 1) for i in params})
        if subset and subset[-1] > n:
            raise ModelError(f"parity index out of range 1..{n}")
        table = np.ones(model.dimension)
        for i in subset:
            table = table * xs[i - 1]
        return FunctionTable(table)
    if name == "character":
        if len(params) != n:
            raise ModelError(f"character needs {n} frequencies, got {len(params)}")
        phase = np.zeros(model.dimension)
        for u, s, idx in zip(params, model.sizes, model.grid()):
            u = _check_int("frequency", u, 0)
            if u >= s:
                raise ModelError(f"frequency {u} out of range for size {s}")
            phase = phase + u * idx / s
        return FunctionTable(np.exp(2j * np.pi * phase))
    raise ModelError(f"unknown builtin function {name!r}")


def _table_entries(table: Iterable) -> np.ndarray:
    entries = list(table)
    if any(isinstance(e, (list, tuple)) for e in entries):
        out = np.empty(len(entries), dtype=complex)
        for i, e in enumerate(entries):
            if isinstance(e, (list, tuple)):
                if len(e) != 2:
                    raise ModelError("complex entries must be [re, im] pairs")
                out[i] = complex(float(e[0]), float(e[1]))
            else:
                out[i] = float(e)
        return out
    return np.asarray(entries, dtype=float)


def parse_function(document: Any, model: ProductModel) -> FunctionTable:
    """Parse ``{"table": [...]}`` or ``{"builtin": name, "params": [...]}``."""
    doc = _load(document)
    if not isinstance(doc, dict):
        raise ModelError("function document must be an object")
    if "table" in doc:
        try:
            values = _table_entries(doc["table"])
        except (TypeError, ValueError) as exc:
            raise ModelError(f"malformed table: {exc}") from None
        if values.shape != (model.dimension,):
            raise ModelError(
                f"table has {values.size} entries, model dimension is {model.dimension}"
            )
        return FunctionTable(values)
    if "builtin" in doc:
        params = doc.get("params", [])
        if not isinstance(params, list):
            raise ModelError("params must be a list")
        return build_function(doc["builtin"], model, params)
    raise ModelError('function document needs "table" or "builtin"')
