"""H1 reaction-diffusion smoothing of raw moment fields onto the continuous frame space.

Solves ``(u, w) + lambda (u', w') = (raw, w)`` with ``lambda = c h^2 / p^2``
per element, strong Dirichlet values at chosen end points and, for the
velocity, an optional normal penalty ``(1/eps) V_1 w_1`` at wall points.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import InvalidArgumentError
from .spatial import CGSpace, DGSpace

__all__ = ["smoothing_lambda", "Smoother", "smooth_scalar", "smooth_vector"]


def smoothing_lambda(c_smooth, h, p):
    """``c h^2 / p^2``; ``p`` is the polynomial degree in x (taken as 1 when 0)."""
    if c_smooth < 0:
        raise InvalidArgumentError("smoothing constant must be >= 0")
    return c_smooth * np.asarray(h, dtype=float) ** 2 / max(p, 1) ** 2


class Smoother:
    """Assembled mass and stiffness on ``cg``, integrated at the quadrature points of ``dg``."""

    def __init__(self, cg: CGSpace, dg: DGSpace, c_smooth: float):
        if cg.mesh is not dg.mesh and not np.array_equal(cg.mesh.vertices, dg.mesh.vertices):
            raise InvalidArgumentError("CG and DG spaces live on different meshes")
        self.cg = cg
        self.dg = dg
        self.c_smooth = float(c_smooth)
        self.lam = smoothing_lambda(self.c_smooth, dg.mesh.h, dg.order)
        vals, ders = cg.tabulate(dg.xi)
        jac = 0.5 * dg.mesh.h
        self._vals = vals  # (nq, nloc)
        w = dg.weights  # (n_el, nq)
        mass = np.einsum("eq,qi,qj->eij", w, vals, vals)
        stiff = np.einsum("eq,qi,qj->eij", w / jac[:, None] ** 2, ders, ders)
        local = mass + self.lam[:, None, None] * stiff
        conn = cg.connectivity
        rows = np.repeat(conn, conn.shape[1], axis=1).ravel()
        cols = np.tile(conn, (1, conn.shape[1])).ravel()
        n = cg.n_global
        self.matrix = sparse.csc_matrix((local.ravel(), (rows, cols)), shape=(n, n))
        self._factors = {}

    def load(self, raw_q):
        """``int raw w_i`` for values at the DG quadrature points, ``(n_el, nq, ...)``."""
        raw_q = np.asarray(raw_q, dtype=float)
        loc = np.einsum("eq,qi,eq...->ei...", self.dg.weights, self._vals, raw_q)
        out = np.zeros((self.cg.n_global,) + raw_q.shape[2:])
        np.add.at(out, self.cg.connectivity, loc)
        return out

    def _factor(self, fixed, penalty):
        key = (fixed, penalty)
        if key not in self._factors:
            n = self.cg.n_global
            A = self.matrix
            if penalty:
                d = np.zeros(n)
                for dof, pen in penalty:
                    d[dof] += pen
                A = A + sparse.diags(d)
            free = np.setdiff1d(np.arange(n), np.asarray(fixed, dtype=int))
            a_ff = sparse.csc_matrix(A[free][:, free])
            a_fd = sparse.csc_matrix(A[free][:, list(fixed)]) if fixed else None
            self._factors[key] = (free, splu(a_ff), a_fd)
        return self._factors[key]

    def solve(self, raw_q, dirichlet=None, penalty=None):
        """Smoothed nodal values for one scalar field.

        ``dirichlet`` maps global dofs to prescribed values; ``penalty`` maps
        dofs to a diagonal penalty ``1/eps`` (with zero target).
        """
        dirichlet = dict(dirichlet or {})
        fixed = tuple(sorted(dirichlet))
        pen = tuple(sorted((penalty or {}).items()))
        free, lu, a_fd = self._factor(fixed, pen)
        b = self.load(raw_q)
        u = np.empty(self.cg.n_global)
        ud = np.array([dirichlet[k] for k in fixed], dtype=float)
        rhs = b[free]
        if fixed:
            u[list(fixed)] = ud
            rhs = rhs - a_fd @ ud
        u[free] = lu.solve(rhs)
        return u

    @cached_property
    def end_dofs(self):
        return self.cg.left_dof, self.cg.right_dof


def smooth_scalar(raw_q, c_smooth, cg: CGSpace, dg: DGSpace, dirichlet=None):
    return Smoother(cg, dg, c_smooth).solve(raw_q, dirichlet)


def smooth_vector(raw_q, c_smooth, cg: CGSpace, dg: DGSpace, dirichlet=None, penalty=None):
    """Componentwise smoothing of ``(n_el, nq, 3)`` data.

    ``dirichlet`` is a list of three dof->value maps; ``penalty`` maps dofs to
    ``1/eps`` for the normal (first) component only.
    """
    sm = Smoother(cg, dg, c_smooth)
    dirichlet = dirichlet or [None, None, None]
    raw_q = np.asarray(raw_q, dtype=float)
    out = np.empty((cg.n_global, 3))
    for d in range(3):
        out[:, d] = sm.solve(raw_q[..., d], dirichlet[d], penalty if d == 0 else None)
    return out
