"""Independent reference computations used by the tests.

Nothing here calls the package solvers: energies are evaluated directly
from the edge list and minimised by grid search or by scipy.
"""
import itertools

import numpy as np
from scipy.optimize import minimize


def line_capacity(n: int, p: float = 2.0) -> float:
    """cap of the end of a unit path with n + 1 edges to the far end: (n + 1)^{-(p-1)}."""
    return (n + 1.0) ** -(p - 1.0)


def binary_tree_capacity(n: int) -> float:
    """p = 2, root degree 2, every other vertex has 2 children; zero on sphere n + 1.

    Series resistance of the spheres: sum_{k=0}^{n} 2^{-(k+1)} = 1 - 2^{-(n+1)}.
    """
    return 1.0 / sum(2.0 ** -(k + 1) for k in range(n + 1))


def binary_tree_green(r: int, p: float = 2.0) -> float:
    """Tail of the sphere resistances: sum_{k >= r} (2^{k+1})^{-1/(p-1)}."""
    q = 2.0 ** (-1.0 / (p - 1.0))
    return q ** (r + 1) / (1.0 - q)


class Energy:
    """Vectorised energy of a finite graph as a function of the free values."""

    def __init__(self, G, free, fixed, p):
        self.p = p
        self.free = list(free)
        pos = {v: k for k, v in enumerate(self.free)}
        self.terms = []
        for (i, j), b in zip(G.edges, G.weights):
            x, y = G.vertices[i], G.vertices[j]
            if x in pos or y in pos:
                self.terms.append((pos.get(x), pos.get(y), fixed.get(x, 0.0), fixed.get(y, 0.0), b))
        self.c = np.array([G.c[G.index[v]] for v in self.free])

    def __call__(self, X):
        X = np.atleast_2d(X)
        total = np.zeros(X.shape[0])
        for a, b, fa, fb, w in self.terms:
            xa = X[:, a] if a is not None else fa
            xb = X[:, b] if b is not None else fb
            total += w * np.abs(xa - xb) ** self.p
        total += (self.c * np.abs(X) ** self.p).sum(axis=1)
        return total


def grid_minimum(energy, lo, hi, step=1e-3, exhaustive_up_to=2, coarse=0.05):
    """Minimum of the energy over the grid ``lo + step * k`` inside the box.

    Up to ``exhaustive_up_to`` free variables the whole grid is scanned;
    beyond that a coarse scan is refined by nested grids down to ``step``.
    """
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    k = lo.size
    if k <= exhaustive_up_to:
        axes = [np.arange(l, h + step / 2, step) for l, h in zip(lo, hi)]
        if k == 1:
            X = axes[0][:, None]
            E = energy(X)
            return float(E.min()), X[int(np.argmin(E))]
        A, B = np.meshgrid(*axes, indexing="ij")
        X = np.column_stack([A.ravel(), B.ravel()])
        E = energy(X)
        return float(E.min()), X[int(np.argmin(E))]
    h = coarse
    axes = [np.arange(l, hh + h / 2, h) for l, hh in zip(lo, hi)]
    X = np.array(list(itertools.product(*axes)))
    E = energy(X)
    best = X[int(np.argmin(E))]
    while h > step * 1.0001:
        h = max(h / 4.0, step)
        offs = np.arange(-4, 5) * h
        X = np.array([best + np.array(o) for o in itertools.product(offs, repeat=k)])
        X = np.clip(X, lo, hi)
        E = energy(X)
        best = X[int(np.argmin(E))]
    # snap to the step lattice of the box and rescan the neighbourhood
    best = lo + np.round((best - lo) / step) * step
    offs = np.arange(-2, 3) * step
    X = np.clip(np.array([best + np.array(o) for o in itertools.product(offs, repeat=k)]), lo, hi)
    E = energy(X)
    return float(E.min()), X[int(np.argmin(E))]


def lbfgs_minimum(energy, lo, hi, x0):
    res = minimize(lambda x: float(energy(x)[0]), x0, method="L-BFGS-B",
                   bounds=list(zip(lo, hi)), options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10000})
    return float(res.fun), res.x
