"""1D meshes, the modal DG space and the continuous (CG) space used for frame fields."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre

from .errors import InvalidArgumentError

BOUNDARY_KINDS = ("inflow", "outflow", "specular", "diffuse", "periodic")


@dataclass(frozen=True, eq=False)
class Mesh1D:
    vertices: np.ndarray
    left: str = "outflow"
    right: str = "outflow"

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 1 or len(v) < 2:
            raise InvalidArgumentError("a mesh needs at least two vertices")
        if np.any(np.diff(v) <= 0):
            raise InvalidArgumentError("mesh vertices must be strictly increasing")
        for side in (self.left, self.right):
            if side not in BOUNDARY_KINDS:
                raise InvalidArgumentError(f"unknown boundary kind {side!r}")
        if (self.left == "periodic") != (self.right == "periodic"):
            raise InvalidArgumentError("periodic boundaries must be set on both ends")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def uniform(cls, x_left, x_right, n_elements, left="outflow", right="outflow"):
        return cls(np.linspace(x_left, x_right, n_elements + 1), left, right)

    @property
    def n_elements(self) -> int:
        return len(self.vertices) - 1

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.vertices)

    @property
    def periodic(self) -> bool:
        return self.left == "periodic"


def gauss_legendre(n):
    x, w = legendre.leggauss(n)
    return x, w


def _legendre_table(p, xi):
    """``P_i(xi)`` and ``P_i'(xi)`` for ``i = 0..p``; shapes ``(len(xi), p+1)``."""
    xi = np.asarray(xi, dtype=float)
    vals = np.empty((len(xi), p + 1))
    ders = np.empty((len(xi), p + 1))
    for i in range(p + 1):
        c = np.zeros(i + 1)
        c[i] = 1.0
        vals[:, i] = legendre.legval(xi, c)
        ders[:, i] = legendre.legval(xi, legendre.legder(c)) if i else 0.0
    return vals, ders


class DGSpace:
    """Orthonormal Legendre modal basis per element; element mass matrices are identity.

    ``phi[q, i]`` and ``dphi[e, q, i]`` tabulate basis values and physical
    x-derivatives at the ``n_quad`` Gauss-Legendre points of each element.
    """

    def __init__(self, mesh: Mesh1D, order: int, n_quad: int | None = None):
        if order < 0:
            raise InvalidArgumentError("spatial order must be >= 0")
        self.mesh = mesh
        self.order = order
        self.n_quad = order + 2 if n_quad is None else int(n_quad)
        self.xi, self.wq = gauss_legendre(self.n_quad)
        h = mesh.h
        norm = np.sqrt((2 * np.arange(order + 1) + 1) / 2.0)
        pv, pd = _legendre_table(order, self.xi)
        # reference-normalised values; element scale applied via 1/sqrt(J)
        self._ref_vals = pv * norm
        self._ref_ders = pd * norm
        self.jac = h / 2.0
        self.phi_scale = 1.0 / np.sqrt(self.jac)
        ends, _ = _legendre_table(order, np.array([-1.0, 1.0]))
        self._ref_ends = ends * norm

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    @property
    def nx(self) -> int:
        return self.order + 1

    @property
    def ndof(self) -> int:
        return self.nx * self.n_elements

    @cached_property
    def phi(self) -> np.ndarray:
        """``(n_el, n_q, nx)`` basis values at quadrature points."""
        return self.phi_scale[:, None, None] * self._ref_vals[None]

    @cached_property
    def dphi(self) -> np.ndarray:
        return (self.phi_scale / self.jac)[:, None, None] * self._ref_ders[None]

    @cached_property
    def weights(self) -> np.ndarray:
        """``(n_el, n_q)`` physical quadrature weights."""
        return self.jac[:, None] * self.wq[None, :]

    @cached_property
    def points(self) -> np.ndarray:
        v = self.mesh.vertices
        mid = 0.5 * (v[1:] + v[:-1])
        return mid[:, None] + self.jac[:, None] * self.xi[None, :]

    @cached_property
    def phi_left(self) -> np.ndarray:
        """``(n_el, nx)`` basis values at each element's left end."""
        return self.phi_scale[:, None] * self._ref_ends[0][None]

    @cached_property
    def phi_right(self) -> np.ndarray:
        return self.phi_scale[:, None] * self._ref_ends[1][None]

    def to_quad(self, c):
        """Values at quadrature points: ``(n_el, nx, ...)`` -> ``(n_el, n_q, ...)``."""
        return np.einsum("eqi,ei...->eq...", self.phi, c)

    def test_quad(self, vals):
        """``sum_q w_q phi_i(x_q) vals_q``: ``(n_el, n_q, ...)`` -> ``(n_el, nx, ...)``."""
        return np.einsum("eqi,eq,eq...->ei...", self.phi, self.weights, vals)

    def trace_left(self, c):
        return np.einsum("ei,ei...->e...", self.phi_left, c)

    def trace_right(self, c):
        return np.einsum("ei,ei...->e...", self.phi_right, c)

    def project(self, func_vals):
        """L2 projection of values given at quadrature points (mass matrix is identity)."""
        return self.test_quad(func_vals)

    def evaluate(self, c, x):
        """Point evaluation of a DG field ``(n_el, nx, ...)`` at physical points ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = self.mesh.vertices
        e = np.clip(np.searchsorted(v, x, side="right") - 1, 0, self.n_elements - 1)
        xi = (x - 0.5 * (v[e] + v[e + 1])) / self.jac[e]
        pv, _ = _legendre_table(self.order, xi)
        norm = np.sqrt((2 * np.arange(self.order + 1) + 1) / 2.0)
        vals = pv * norm * self.phi_scale[e][:, None]
        return np.einsum("pi,pi...->p...", vals, c[e])


def gll_nodes(n):
    """Gauss-Lobatto-Legendre nodes on [-1, 1] (n >= 2)."""
    if n == 2:
        return np.array([-1.0, 1.0])
    c = np.zeros(n)
    c[-1] = 1.0
    inner = legendre.legroots(legendre.legder(c))
    return np.concatenate([[-1.0], np.sort(inner), [1.0]])


class CGSpace:
    """Continuous Lagrange space on GLL nodes; ``order >= 1``."""

    def __init__(self, mesh: Mesh1D, order: int):
        if order < 1:
            raise InvalidArgumentError("continuous space needs order >= 1")
        self.mesh = mesh
        self.order = order
        self.ref_nodes = gll_nodes(order + 1)
        diff = self.ref_nodes[:, None] - self.ref_nodes[None, :]
        np.fill_diagonal(diff, 1.0)
        self._bary = 1.0 / np.prod(diff, axis=1)
        n_el = mesh.n_elements
        self.n_global = n_el * order + (0 if mesh.periodic else 1)
        conn = np.arange(n_el)[:, None] * order + np.arange(order + 1)[None, :]
        if mesh.periodic:
            conn = conn % self.n_global
        self.connectivity = conn
        v = mesh.vertices
        h = mesh.h
        mid = 0.5 * (v[1:] + v[:-1])
        x = mid[:, None] + 0.5 * h[:, None] * self.ref_nodes[None, :]
        coords = np.empty(self.n_global)
        coords[conn.ravel()] = x.ravel()
        self.coordinates = coords

    @property
    def left_dof(self) -> int:
        return 0

    @property
    def right_dof(self) -> int:
        return self.n_global - 1

    def tabulate(self, xi):
        """Local basis values and reference derivatives at reference points ``xi``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        nodes, bary = self.ref_nodes, self._bary
        vals = np.empty((len(xi), len(nodes)))
        ders = np.empty_like(vals)
        for j in range(len(nodes)):
            others = np.delete(np.arange(len(nodes)), j)
            prod = np.ones_like(xi)
            for k in others:
                prod = prod * (xi - nodes[k])
            vals[:, j] = bary[j] * prod
            dsum = np.zeros_like(xi)
            for k in others:
                term = np.ones_like(xi)
                for m in others:
                    if m != k:
                        term = term * (xi - nodes[m])
                dsum = dsum + term
            ders[:, j] = bary[j] * dsum
        return vals, ders

    def local(self, values):
        """Global nodal values ``(n_global, ...)`` -> ``(n_el, order+1, ...)``."""
        return np.asarray(values)[self.connectivity]

    def evaluate_ref(self, values, xi):
        """Values and x-derivatives at reference points ``xi`` in every element."""
        vals, ders = self.tabulate(xi)
        loc = self.local(values)
        f = np.einsum("qj,ej...->eq...", vals, loc)
        jac = 0.5 * self.mesh.h
        df = np.einsum("qj,ej...->eq...", ders, loc)
        df = df / jac.reshape((-1, 1) + (1,) * (df.ndim - 2))
        return f, df

    def vertex_values(self, values):
        """Values at the mesh vertices, ``(n_el + 1, ...)``."""
        values = np.asarray(values)
        idx = np.arange(self.mesh.n_elements + 1) * self.order
        if self.mesh.periodic:
            idx = idx % self.n_global
        return values[idx]

    def evaluate(self, values, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = self.mesh.vertices
        e = np.clip(np.searchsorted(v, x, side="right") - 1, 0, self.mesh.n_elements - 1)
        xi = 2.0 * (x - v[e]) / self.mesh.h[e] - 1.0
        vals, _ = self.tabulate(xi)
        loc = self.local(values)[e]
        return np.einsum("pj,pj...->p...", vals, loc)

    def interpolate(self, func):
        """Nodal interpolant of a callable of x."""
        return np.asarray(func(self.coordinates), dtype=float)
