"""Gauss-Hermite quadrature for the weight exp(-v^2) and its 3D tensor product."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError

__all__ = ["Quad1D", "Quad3D", "gauss_hermite_rule", "tensor_rule_3d", "lex_index"]


@dataclass(frozen=True)
class Quad1D:
    """Gauss-Hermite rule with ``order + 1`` points."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return self.order + 1


@dataclass(frozen=True)
class Quad3D:
    """Cartesian product rule; point ``ip = (N+1)^2 i + (N+1) j + k``."""

    base: Quad1D
    nodes3: np.ndarray
    weights3: np.ndarray

    @property
    def order(self) -> int:
        return self.base.order


def lex_index(i, j, k, order):
    n = order + 1
    return n * n * i + n * j + k


def _orthonormal_hermite(x, n):
    """Values of the first ``n + 1`` orthonormal Hermite polynomials at ``x``."""
    x = np.asarray(x, dtype=float)
    p = np.empty((n + 1,) + x.shape)
    p[0] = np.pi ** -0.25
    if n >= 1:
        p[1] = np.sqrt(2.0) * x * p[0]
    for k in range(1, n):
        p[k + 1] = np.sqrt(2.0 / (k + 1)) * x * p[k] - np.sqrt(k / (k + 1)) * p[k - 1]
    return p


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def gauss_hermite_rule(n_points: int) -> Quad1D:
    """Nodes and weights exact for polynomials of degree ``2 * n_points - 1``.

    Nodes come from the eigenvalues of the symmetric Jacobi matrix of the
    Hermite recurrence, followed by two Newton sweeps on the orthonormal
    polynomial; weights use the Christoffel sum so that the tiny outer
    weights keep full relative accuracy.
    """
    n_points = int(n_points)
    if n_points < 1:
        raise InvalidArgumentError(f"n_points must be >= 1, got {n_points}")
    n = n_points
    if n == 1:
        return Quad1D(0, _freeze([0.0]), _freeze([np.sqrt(np.pi)]))

    off = np.sqrt(np.arange(1, n) / 2.0)
    jacobi = np.diag(off, 1) + np.diag(off, -1)
    x = np.linalg.eigvalsh(jacobi)
    for _ in range(2):
        p = _orthonormal_hermite(x, n)
        x = x - p[n] / (np.sqrt(2.0 * n) * p[n - 1])
    x = 0.5 * (x - x[::-1])
    p = _orthonormal_hermite(x, n - 1)
    w = 1.0 / np.sum(p * p, axis=0)
    w = 0.5 * (w + w[::-1])
    return Quad1D(n - 1, _freeze(x), _freeze(w))


@lru_cache(maxsize=None)
def _tensor_rule_cached(order: int) -> Quad3D:
    base = gauss_hermite_rule(order + 1)
    vi, vj, vk = np.meshgrid(base.nodes, base.nodes, base.nodes, indexing="ij")
    wi, wj, wk = np.meshgrid(base.weights, base.weights, base.weights, indexing="ij")
    nodes3 = np.stack([vi.ravel(), vj.ravel(), vk.ravel()], axis=1)
    weights3 = (wi * wj * wk).ravel()
    return Quad3D(base, _freeze(nodes3), _freeze(weights3))


def tensor_rule_3d(rule: Quad1D) -> Quad3D:
    return _tensor_rule_cached(rule.order)
