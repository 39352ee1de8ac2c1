import itertools
import math

import numpy as np
import pytest


def brute_force_sides(model, table):
    """Both sides by looping over every (x, y) grid point in pure python.

    Walks the full s_i x s_i grid of every coordinate (zero-mass entries
    included) and indexes the table by explicit mixed-radix arithmetic.
    """
    sizes = [p.size for p in model.pairs]
    n = len(sizes)
    table = list(np.asarray(table.values if hasattr(table, "values") else table))

    def index(point):
        idx = 0
        for a, s in zip(point, sizes):
            idx = idx * s + a
        return idx

    lhs = 0.0
    terms = [0.0] * n
    grids = [itertools.product(range(s), repeat=2) for s in sizes]
    for combo in itertools.product(*[list(g) for g in grids]):
        w = 1.0
        for pair, (a, b) in zip(model.pairs, combo):
            w *= float(pair.joint[a][b])
        if w == 0.0:
            continue
        xs = [a for a, _ in combo]
        ys = [b for _, b in combo]
        z = [table[index(xs[:i] + ys[i:])] for i in range(n + 1)]
        lhs += w * abs(z[n] - z[0]) ** 2
        for i in range(1, n + 1):
            terms[i - 1] += w * abs(z[i] - z[i - 1]) ** 2
    return lhs, terms


def brute_force_matrix(model, which):
    """Recover a quadratic form entrywise from the brute-force oracle by
    polarization: Q_ab = (q(e_a + e_b) - q(e_a) - q(e_b)) / 2."""
    dim = model.dimension

    def q(vec):
        lhs, terms = brute_force_sides(model, vec)
        return lhs if which == "lhs" else terms[which]

    diag = [q(np.eye(dim)[a]) for a in range(dim)]
    out = np.diag(diag)
    for a in range(dim):
        for b in range(a + 1, dim):
            val = (q(np.eye(dim)[a] + np.eye(dim)[b]) - diag[a] - diag[b]) / 2
            out[a, b] = out[b, a] = val
    return out


def character_ratio(u, moduli):
    """|1 - prod eta_j^u_j|^2 / sum |1 - eta_j^u_j|^2 in complex arithmetic."""
    etas = [complex(math.cos(2 * math.pi * x / m), math.sin(2 * math.pi * x / m)) for x, m in zip(u, moduli)]
    prod = 1 + 0j
    for e in etas:
        prod *= e
    den = sum(abs(1 - e) ** 2 for e in etas)
    if den == 0:
        return 0.0
    return abs(1 - prod) ** 2 / den


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
