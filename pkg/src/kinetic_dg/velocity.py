"""Maxwellian-weighted nodal velocity space.

A velocity vector stores the nodal values ``g(v_ip)`` of the polynomial
factor in ``f(v) = exp(-|v|^2) g(v)``, where ``g`` lives in the tensor
Lagrange space on the Gauss-Hermite nodes. With this choice the mass and
flux matrices are diagonal, and all moments reduce to weighted node sums.

Everything here accepts batches: a coefficient array of shape ``(..., ndof)``
is treated as a stack of independent velocity vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateStateError, InvalidArgumentError
from .hermite import Quad3D, gauss_hermite_rule, tensor_rule_3d

__all__ = [
    "VelocityBasis",
    "MacroscopicState",
    "velocity_basis",
    "barycentric_weights",
    "lagrange_matrix",
    "mass_matrix",
    "flux_matrix",
    "evaluate",
    "interpolate_g",
    "moments",
    "project_maxwellian",
    "maxwellian_g",
]


def barycentric_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_matrix(nodes, bary, x):
    """``out[p, j] = l_j(x[p])`` by the second barycentric formula."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x[:, None] - nodes[None, :]
    hit = diff == 0.0
    diff[hit] = 1.0
    terms = bary[None, :] / diff
    out = terms / terms.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if rows.any():
        out[rows] = hit[rows].astype(float)
    return out


def _differentiation_matrix(nodes, bary):
    # D[a, b] = l_b'(x_a)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


@dataclass(frozen=True, eq=False)
class VelocityBasis:
    order: int
    quad: Quad3D
    barycentric_weights: np.ndarray
    diff1d: np.ndarray

    @property
    def n1(self) -> int:
        return self.order + 1

    @property
    def ndof(self) -> int:
        return self.n1 ** 3

    @property
    def nodes1d(self) -> np.ndarray:
        return self.quad.base.nodes

    @property
    def weights1d(self) -> np.ndarray:
        return self.quad.base.weights

    @property
    def nodes(self) -> np.ndarray:
        return self.quad.nodes3

    @property
    def weights(self) -> np.ndarray:
        return self.quad.weights3

    def lagrange(self, x):
        return lagrange_matrix(self.nodes1d, self.barycentric_weights, x)

    def basis_values(self, points):
        """``out[p, m] = L_m(points[p])`` for points of shape ``(P, 3)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        l1, l2, l3 = (self.lagrange(points[:, d]) for d in range(3))
        out = l1[:, :, None, None] * l2[:, None, :, None] * l3[:, None, None, :]
        return out.reshape(len(points), self.ndof)

    def grad_transpose(self, s, axis):
        """Return ``sum_n s[..., n] * d/dv_axis L_m(v_n)`` for every ``m``."""
        n = self.n1
        t = np.asarray(s).reshape(s.shape[:-1] + (n, n, n))
        # contract the node index of the chosen direction with D[node, m]
        t = np.moveaxis(t, t.ndim - 3 + axis, -1)
        t = t @ self.diff1d
        t = np.moveaxis(t, -1, t.ndim - 3 + axis)
        return t.reshape(s.shape)

    def reflect_index(self, axis=0):
        """Permutation mapping node ``v`` to node ``v - 2 v_axis e_axis``."""
        n = self.n1
        idx = np.arange(self.ndof).reshape(n, n, n)
        return np.flip(idx, axis=axis).ravel()


@lru_cache(maxsize=None)
def velocity_basis(order: int) -> VelocityBasis:
    if order < 0:
        raise InvalidArgumentError(f"velocity order must be >= 0, got {order}")
    base = gauss_hermite_rule(order + 1)
    bary = barycentric_weights(base.nodes)
    diff = _differentiation_matrix(base.nodes, bary)
    bary.setflags(write=False)
    diff.setflags(write=False)
    return VelocityBasis(order, tensor_rule_3d(base), bary, diff)


def mass_matrix(basis: VelocityBasis) -> np.ndarray:
    """Diagonal of the velocity mass matrix (the off-diagonal is zero)."""
    return basis.weights.copy()


def flux_matrix(basis: VelocityBasis, component: int) -> np.ndarray:
    """Diagonal of the velocity flux matrix for direction ``component`` in {1, 2, 3}."""
    if component not in (1, 2, 3):
        raise InvalidArgumentError(f"component must be 1, 2 or 3, got {component}")
    return basis.weights * basis.nodes[:, component - 1]


def interpolate_g(coeffs, basis: VelocityBasis, points):
    """Polynomial factor ``g`` at arbitrary velocities; shape ``(..., P)``."""
    coeffs = np.asarray(coeffs, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = basis.n1
    c = coeffs.reshape(coeffs.shape[:-1] + (n, n, n))
    l1, l2, l3 = (basis.lagrange(points[:, d]) for d in range(3))
    return np.einsum("...ijk,pi,pj,pk->...p", c, l1, l2, l3, optimize=True)


def evaluate(coeffs, basis: VelocityBasis, v):
    """Evaluate ``f(v) = exp(-|v|^2) g(v)``; ``v`` is one point or an array of points."""
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    pts = np.atleast_2d(v)
    out = np.exp(-np.sum(pts * pts, axis=1)) * interpolate_g(coeffs, basis, pts)
    return out[..., 0] if single else out


@dataclass
class MacroscopicState:
    """Moments of a distribution; fields broadcast over leading batch axes."""

    rho: np.ndarray
    V: np.ndarray
    E: np.ndarray
    P: np.ndarray
    p: np.ndarray
    q: np.ndarray
    T: np.ndarray


def moments(coeffs, basis: VelocityBasis, check=True) -> MacroscopicState:
    """Density, velocity, energy, stress, pressure, heat flux and temperature.

    Raises :class:`DegenerateStateError` when any density is not positive,
    unless ``check`` is false (then T is NaN there).
    """
    g = np.asarray(coeffs, dtype=float)
    w = basis.weights
    v = basis.nodes
    wg = g * w
    rho = wg.sum(axis=-1)
    bad = ~(rho > 0)
    if check and np.any(bad):
        raise DegenerateStateError("non-positive density; temperature is undefined")
    safe = np.where(bad, 1.0, rho)
    mom = wg @ v
    V = mom / safe[..., None]
    v2 = np.sum(v * v, axis=1)
    E = 0.5 * (wg @ v2)
    q = 0.5 * (wg @ (v2[:, None] * v))
    # central second moment about V
    second = np.einsum("...n,nd,ne->...de", wg, v, v)
    P = second - rho[..., None, None] * V[..., :, None] * V[..., None, :]
    P = 0.5 * (P + np.swapaxes(P, -1, -2))
    p = np.trace(P, axis1=-2, axis2=-1) / 3.0
    T = np.where(bad, np.nan, p / safe)
    return MacroscopicState(rho, V, E, P, p, q, T)


def maxwellian_g(rho, V, T, points):
    """``exp(|v|^2) * rho / (2 pi T)^{3/2} exp(-|v - V|^2 / (2T))`` at ``points``.

    ``rho``, ``T`` have batch shape ``S`` and ``V`` shape ``S + (3,)``; the
    result has shape ``S + (P,)``. Evaluated in log form to avoid overflow.
    """
    rho = np.asarray(rho, dtype=float)
    T = np.asarray(T, dtype=float)
    V = np.asarray(V, dtype=float)
    points = np.atleast_2d(points)
    d = points - V[..., None, :]
    expo = np.sum(points * points, axis=-1) - np.sum(d * d, axis=-1) / (2.0 * T[..., None])
    return rho[..., None] * (2.0 * np.pi * T[..., None]) ** -1.5 * np.exp(expo)


def project_maxwellian(rho, V, T, basis: VelocityBasis) -> np.ndarray:
    """Nodal interpolant of the Maxwellian with density, velocity and temperature given."""
    rho = np.asarray(rho, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(~(rho > 0)) or np.any(~(T > 0)):
        raise InvalidArgumentError("Maxwellian needs rho > 0 and T > 0")
    return maxwellian_g(rho, V, T, basis.nodes)
