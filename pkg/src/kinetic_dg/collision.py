"""Weak-form Boltzmann collision operator and a BGK surrogate.

The tested operator is

    Q_m = int int int |v - w|^beta b_theta f(v) f(w) [L_m(v') - L_m(v)] de' dw dv

with post-collision velocity ``v' = (v + w)/2 + e' |v - w| / 2``. In mean and
relative variables ``v = vb + vh``, ``w = vb - vh`` the Gaussian factors
combine into ``exp(-2|vb|^2) exp(-2|vh|^2)``, so only polynomial factors are
evaluated off the nodes. ``vb`` is integrated with a Gauss-Hermite rule for
``exp(-2 x^2)``; ``vh = r e`` uses a generalized Gauss-Laguerre rule in
``s = 2 r^2`` (which absorbs ``r^(2 + beta)``) and a product rule on the sphere.
Default orders make every integral exact for the polynomial integrands, so
conservation and Maxwellian annihilation hold to roundoff.

The gain part is a precomputed bilinear tensor ``K[m, a, b]``; the loss part
interpolates ``g L_m`` on a ``(2N+1)^3`` grid, which is exact because the
product lives in the degree-``2N`` tensor space.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np
from numpy.polynomial import legendre
from scipy.special import roots_genlaguerre

from .errors import InvalidArgumentError
from .hermite import gauss_hermite_rule
from .velocity import (
    VelocityBasis,
    barycentric_weights,
    lagrange_matrix,
    moments,
    project_maxwellian,
)

__all__ = [
    "CollisionKernel",
    "SphereRule",
    "BoltzmannOperator",
    "sphere_quadrature",
    "precollision_velocities",
    "apply_boltzmann_weak",
    "boltzmann_operator",
    "conservation_fix",
    "apply_bgk",
    "collision_invariants",
]

_CHUNK_BYTES = 160 * 2**20


@dataclass(frozen=True)
class CollisionKernel:
    """VHS kernel ``b_r(|v - w|) = |v - w|^beta`` with a constant angular part."""

    beta: float = 0.0
    b_theta: float = 1.0 / (4.0 * np.pi)

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise InvalidArgumentError(f"beta must lie in [0, 1], got {self.beta}")
        if not self.b_theta > 0:
            raise InvalidArgumentError("b_theta must be positive")

    def b_r(self, distance):
        return np.asarray(distance, dtype=float) ** self.beta


@dataclass(frozen=True, eq=False)
class SphereRule:
    directions: np.ndarray  # (n, 3)
    weights: np.ndarray
    degree: int

    @property
    def n_points(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def sphere_quadrature(degree: int) -> SphereRule:
    """Gauss-Legendre in ``cos(theta)`` times the trapezoid rule in ``phi``."""
    degree = int(degree)
    if degree < 1:
        raise InvalidArgumentError(f"sphere degree must be >= 1, got {degree}")
    n_theta = ceil((degree + 1) / 2)
    n_phi = degree + 1
    mu, wmu = legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(1.0 - mu * mu)
    d = np.stack(
        [
            (s[:, None] * np.cos(phi)[None, :]).ravel(),
            (s[:, None] * np.sin(phi)[None, :]).ravel(),
            np.repeat(mu, n_phi),
        ],
        axis=1,
    )
    w = np.repeat(wmu, n_phi) * (2.0 * np.pi / n_phi)
    d.setflags(write=False)
    w.setflags(write=False)
    return SphereRule(d, w, degree)


def precollision_velocities(v, w, e):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    e = np.asarray(e, dtype=float)
    mean = 0.5 * (v + w)
    half = 0.5 * np.linalg.norm(v - w, axis=-1, keepdims=True)
    return mean + half * e, mean - half * e


def _mean_rule(n):
    # Gauss-Hermite for exp(-2 x^2)
    base = gauss_hermite_rule(n)
    return base.nodes / np.sqrt(2.0), base.weights / np.sqrt(2.0)


def _radial_rule(n, beta):
    """Nodes ``r`` and weights for ``int_0^inf r^(2+beta) exp(-2 r^2) p(r^2) dr``."""
    s, lam = roots_genlaguerre(n, 0.5 * (1.0 + beta))
    return np.sqrt(0.5 * s), lam * 2.0 ** (-(5.0 + beta) / 2.0)


def default_orders(order: int):
    """Exact orders ``(n_mean, n_radial, gain_sphere, loss_sphere, post_sphere)``."""
    n = order
    return (
        max(1, ceil((3 * n + 1) / 2)),
        max(1, ceil(((9 * n) // 2 + 1) / 2)),
        max(1, 6 * n),
        max(1, 9 * n),
        max(1, 3 * n),
    )


class _Tabulator:
    """Tensor Lagrange values at arbitrary 3D points for a fixed 1D node set."""

    def __init__(self, nodes):
        self.nodes = np.asarray(nodes, dtype=float)
        self.bary = barycentric_weights(self.nodes)
        self.n = len(self.nodes)

    def __call__(self, pts):
        pts = pts.reshape(-1, 3)
        l1, l2, l3 = (lagrange_matrix(self.nodes, self.bary, pts[:, d]) for d in range(3))
        out = np.einsum("pi,pj,pk->pijk", l1, l2, l3, optimize=True)
        return out.reshape(len(pts), self.n**3)


class BoltzmannOperator:
    """Precomputed weak collision operator for one velocity basis and kernel.

    ``apply(g)`` accepts nodal values of shape ``(..., ndof)`` and returns the
    tested vector ``Q_m`` of the same shape; ``gain`` and ``loss`` return the
    two parts separately.
    """

    def __init__(self, basis: VelocityBasis, kernel: CollisionKernel, n_mean=None, n_radial=None,
                 sphere: SphereRule | None = None):
        order = basis.order
        dm, dr, dg, dl, dp = default_orders(order)
        n_mean = dm if n_mean is None else int(n_mean)
        n_radial = dr if n_radial is None else int(n_radial)
        if n_mean < max(order, 1) or n_radial < max(order, 1):
            raise InvalidArgumentError("quadrature orders must be at least the velocity order")
        self.basis = basis
        self.kernel = kernel
        self.n_mean = n_mean
        self.n_radial = n_radial
        if sphere is None:
            s_gain, s_loss, s_post = sphere_quadrature(dg), sphere_quadrature(dl), sphere_quadrature(dp)
        else:
            s_gain = s_loss = s_post = sphere
        self.spheres = (s_gain, s_loss, s_post)

        x, wx = _mean_rule(n_mean)
        vb = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
        wb = np.einsum("i,j,k->ijk", wx, wx, wx).ravel()
        r, wr = _radial_rule(n_radial, kernel.beta)
        self._const = 8.0 * kernel.b_theta * 2.0**kernel.beta
        tab = _Tabulator(basis.nodes1d)
        self.K = self._gain_tensor(tab, vb, wb, r, wr, s_gain, s_post)
        self._K_amb = np.ascontiguousarray(self.K.transpose(1, 0, 2)).reshape(basis.ndof, -1)
        grid = gauss_hermite_rule(2 * order + 1).nodes if order else np.zeros(1)
        self._loss_grid = grid
        self._loss_tab = _Tabulator(grid)
        self.J = self._loss_matrix(x, wx, r, wr, s_loss)
        # L_m at the (2N+1)^3 loss grid
        self._Lz = basis.basis_values(np.stack(np.meshgrid(grid, grid, grid, indexing="ij"), -1).reshape(-1, 3))

    def _gain_tensor(self, tab, vb, wb, r, wr, s_gain, s_post):
        nd = self.basis.ndof
        nr = len(r)
        per_point = nr * nd * nd * 8 * 2
        chunk = max(1, _CHUNK_BYTES // per_point)
        K = np.zeros((nd, nd * nd))
        ed, ew = s_gain.directions, s_gain.weights
        pd, pw = s_post.directions, s_post.weights
        for start in range(0, len(vb), chunk):
            sel = slice(start, start + chunk)
            c = vb[sel]
            nc = len(c)
            # Phi[c, r, m] = sum_e' w L_m(vb + r e')
            pts = c[:, None, None, :] + r[None, :, None, None] * pd[None, None, :, :]
            phi = np.einsum("e,cred->crd", pw, tab(pts).reshape(nc, nr, len(pw), nd))
            phi *= (wb[sel][:, None] * wr[None, :])[..., None]
            plus = tab(c[:, None, None, :] + r[None, :, None, None] * ed[None, None, :, :]).reshape(nc, nr, len(ew), nd)
            minus = tab(c[:, None, None, :] - r[None, :, None, None] * ed[None, None, :, :]).reshape(nc, nr, len(ew), nd)
            S = np.matmul(np.swapaxes(plus * ew[:, None], -1, -2), minus)
            K += phi.reshape(nc * nr, nd).T @ S.reshape(nc * nr, nd * nd)
        K = K.reshape(nd, nd, nd) * self._const
        return 0.5 * (K + np.swapaxes(K, 1, 2))

    def _loss_matrix(self, x, wx, r, wr, s_loss):
        # The mean-velocity rule is a tensor product, so for a fixed offset
        # d = r e the sum over vb factorizes into one 1D matrix per coordinate.
        n1 = self.basis.n1
        nz1 = len(self._loss_grid)
        d = (r[:, None, None] * s_loss.directions[None]).reshape(-1, 3)
        w = (wr[:, None] * s_loss.weights[None]).ravel()
        nodes, bary = self.basis.nodes1d, self.basis.barycentric_weights
        zb = barycentric_weights(self._loss_grid)
        fac = []
        for k in range(3):
            xp = (x[None, :] + d[:, k, None]).ravel()
            xm = (x[None, :] - d[:, k, None]).ravel()
            lam = lagrange_matrix(self._loss_grid, zb, xp).reshape(len(d), len(x), nz1)
            lb = lagrange_matrix(nodes, bary, xm).reshape(len(d), len(x), n1)
            fac.append(np.einsum("x,pxi,pxa->pia", wx, lam, lb))
        a12 = np.einsum("pia,pjb->pijab", fac[0], fac[1]).reshape(len(d), -1)
        a3 = (w[:, None, None] * fac[2]).reshape(len(d), -1)
        J = (a12.T @ a3).reshape(nz1, nz1, n1, n1, nz1, n1)
        J = J.transpose(0, 1, 4, 2, 3, 5).reshape(nz1**3, n1**3)
        return J * (self._const * 4.0 * np.pi)

    def gain(self, g):
        g = np.asarray(g, dtype=float)
        nd = self.basis.ndof
        flat = g.reshape(-1, nd)
        out = np.empty_like(flat)
        step = max(1, _CHUNK_BYTES // (8 * nd * nd))
        for start in range(0, len(flat), step):
            blk = flat[start:start + step]
            # (P, a) @ (a, m b) -> (P, m, b), then contract b
            t = (blk @ self._K_amb).reshape(len(blk), nd, nd)
            out[start:start + step] = np.einsum("pmb,pb->pm", t, blk)
        return out.reshape(g.shape)

    def loss(self, g):
        g = np.asarray(g, dtype=float)
        nd = self.basis.ndof
        flat = g.reshape(-1, nd)
        jc = flat @ self.J.T  # (P, nz)
        gz = flat @ self._Lz.T  # g on the loss grid
        out = (gz * jc) @ self._Lz
        return out.reshape(g.shape)

    def apply(self, g):
        return self.gain(g) - self.loss(g)

    __call__ = apply


@lru_cache(maxsize=8)
def boltzmann_operator(order: int, beta: float = 0.0, b_theta: float = 1.0 / (4.0 * np.pi)) -> BoltzmannOperator:
    """Cached operator at default (exact) quadrature orders."""
    from .velocity import velocity_basis

    return BoltzmannOperator(velocity_basis(order), CollisionKernel(beta, b_theta))


def apply_boltzmann_weak(g, basis: VelocityBasis, kernel: CollisionKernel, sphere: SphereRule | None = None,
                         n_mean=None, n_radial=None):
    """Tested collision vector ``Q_m`` for nodal values ``g``; batched over leading axes."""
    if sphere is None and n_mean is None and n_radial is None:
        op = boltzmann_operator(basis.order, kernel.beta, kernel.b_theta)
    else:
        op = BoltzmannOperator(basis, kernel, n_mean, n_radial, sphere)
    return op.apply(g)


def collision_invariants(basis: VelocityBasis) -> np.ndarray:
    """``(ndof, 5)`` values of ``1, v1, v2, v3, |v|^2`` at the nodes."""
    v = basis.nodes
    return np.column_stack([np.ones(len(v)), v, np.sum(v * v, axis=1)])


def conservation_fix(Q, basis: VelocityBasis, return_correction=False):
    """Remove the component of ``Q`` that carries mass, momentum or energy.

    Tested moments of a vector are ``Phi^T Q`` with ``Phi`` the invariants at
    the nodes; the correction ``W Phi a`` is the smallest in the inverse
    mass norm that zeroes them.
    """
    if basis.order < 2:
        raise InvalidArgumentError("conservation fix needs velocity order >= 2")
    Q = np.asarray(Q, dtype=float)
    phi = collision_invariants(basis)
    wphi = basis.weights[:, None] * phi
    gram = phi.T @ wphi
    a = np.linalg.solve(gram, (Q.reshape(-1, basis.ndof) @ phi).T).T
    corr = (a @ wphi.T).reshape(Q.shape)
    out = Q - corr
    if return_correction:
        return out, np.linalg.norm(corr, axis=-1)
    return out


def apply_bgk(g, basis: VelocityBasis, knudsen):
    """``(1/kn) M^v (m - g)`` with ``m`` the Maxwellian sharing the moments of ``g``."""
    if not knudsen > 0:
        raise InvalidArgumentError("Knudsen number must be positive")
    g = np.asarray(g, dtype=float)
    m = moments(g, basis)
    target = project_maxwellian(m.rho, m.V, m.T, basis)
    return basis.weights * (target - g) / knudsen
