"""Shifted and scaled velocity frames.

The standardized distribution is ``f^{V,T}(v) = f(sqrt(T) v + V)``. The
frame fields ``V(x)`` and ``T(x)`` are continuous piecewise polynomials.

Temperature conventions: moments use ``T = p / rho`` and Maxwellians of the
form ``exp(-|v - V|^2 / (2 T))``. The standardized trial space is weighted by
``exp(-|v|^2)``, which is a Maxwellian of temperature 1/2, so a local
Maxwellian of temperature ``T_f`` is represented exactly (``g`` constant)
when the frame scale is ``T = FRAME_SCALE * T_f`` with ``FRAME_SCALE = 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateStateError, FrameError, InvalidArgumentError
from .spatial import CGSpace, DGSpace
from .velocity import MacroscopicState, VelocityBasis, interpolate_g

__all__ = [
    "FRAME_SCALE",
    "T_MIN",
    "AnsatzFrame",
    "FrameSample",
    "macroscopics_to_standard",
    "macroscopics_from_standard",
    "collision_scaling",
    "transformed_mass_flux_factors",
    "reframe_state",
    "reframe_nodal",
    "physical_moments",
]

FRAME_SCALE = 2.0
T_MIN = 1e-6


def _check_T(T):
    T = np.asarray(T, dtype=float)
    if np.any(~(T > 0)):
        raise InvalidArgumentError("frame temperature must be positive")
    return T


def macroscopics_to_standard(m: MacroscopicState, V, T) -> MacroscopicState:
    """Map physical moments to those of the standardized distribution.

    Only ``rho``, ``V`` and ``T`` are transformed exactly by the frame map; the
    derived fields are recomputed consistently (``P`` and ``p`` scale with
    ``T^{-5/2}``, ``E`` follows from ``p`` and the shifted velocity).
    """
    T = _check_T(T)
    V = np.asarray(V, dtype=float)
    rho = T ** -1.5 * m.rho
    Vs = (m.V - V) / np.sqrt(T)[..., None]
    Ts = m.T / T
    return _assemble(m, rho, Vs, Ts, T ** -2.5)


def macroscopics_from_standard(m: MacroscopicState, V, T) -> MacroscopicState:
    T = _check_T(T)
    V = np.asarray(V, dtype=float)
    rho = T ** 1.5 * m.rho
    Vf = np.sqrt(T)[..., None] * m.V + V
    Tf = T * m.T
    return _assemble(m, rho, Vf, Tf, T ** 2.5)


def _assemble(m, rho, V, T, stress_factor):
    P = np.asarray(m.P) * np.asarray(stress_factor)[..., None, None]
    p = rho * T
    E = 0.5 * (3.0 * p + rho * np.sum(V * V, axis=-1))
    # the heat flux needs third moments; use physical_moments for it
    q = np.full(np.shape(V), np.nan)
    return MacroscopicState(rho, V, E, P, p, q, T)


def collision_scaling(T, beta):
    """Factor relating tested collision integrals in the two frames: ``T^(3 + beta/2)``."""
    return np.asarray(T, dtype=float) ** (3.0 + 0.5 * beta)


def transformed_mass_flux_factors(T, V):
    """Mass factor ``T^{3/2}`` and the physical velocity map ``v -> sqrt(T) v + V``."""
    T = float(_check_T(T))
    V = np.asarray(V, dtype=float)

    def flux_velocity(v):
        return np.sqrt(T) * np.asarray(v, dtype=float) + V

    return T ** 1.5, flux_velocity


@dataclass(frozen=True, eq=False)
class FrameSample:
    """Frame fields evaluated at a set of spatial points."""

    V: np.ndarray  # (..., 3)
    T: np.ndarray  # (...)
    dV: np.ndarray  # d/dx V, (..., 3)
    dT: np.ndarray
    Vt: np.ndarray  # d/dt V
    Tt: np.ndarray


@dataclass(frozen=True, eq=False)
class AnsatzFrame:
    """Continuous frame fields on a CG space, with optional time derivatives.

    ``V`` has shape ``(n_global, 3)`` and ``T`` shape ``(n_global,)``; ``T`` is
    the scale in ``sqrt(T) v + V`` (see :data:`FRAME_SCALE`).
    """

    space: CGSpace
    V: np.ndarray
    T: np.ndarray
    Vt: np.ndarray | None = None
    Tt: np.ndarray | None = None
    t_min: float = T_MIN

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float).reshape(self.space.n_global, 3)
        T = np.asarray(self.T, dtype=float).reshape(self.space.n_global)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "T", T)
        if not np.all(np.isfinite(T)) or not np.all(np.isfinite(V)):
            raise FrameError("frame fields are not finite")
        if np.min(T) <= self.t_min:
            i = int(np.argmin(T))
            raise FrameError(
                f"frame temperature {T[i]:.3e} at x={self.space.coordinates[i]:.4f} "
                f"is below the floor {self.t_min:g}"
            )

    @classmethod
    def constant(cls, space, V=(0.0, 0.0, 0.0), T=1.0, t_min=T_MIN):
        n = space.n_global
        return cls(space, np.tile(np.asarray(V, dtype=float), (n, 1)), np.full(n, float(T)), t_min=t_min)

    def with_rates(self, previous: "AnsatzFrame", tau: float) -> "AnsatzFrame":
        """Copy carrying forward differences ``(self - previous) / tau``."""
        return replace(self, Vt=(self.V - previous.V) / tau, Tt=(self.T - previous.T) / tau)

    def without_rates(self) -> "AnsatzFrame":
        return replace(self, Vt=None, Tt=None)

    def is_same(self, other: "AnsatzFrame") -> bool:
        return np.array_equal(self.V, other.V) and np.array_equal(self.T, other.T)

    def sample_quadrature(self, dg: DGSpace) -> FrameSample:
        V, dV = self.space.evaluate_ref(self.V, dg.xi)
        T, dT = self.space.evaluate_ref(self.T, dg.xi)
        if self.Vt is None:
            Vt = np.zeros_like(V)
            Tt = np.zeros_like(T)
        else:
            Vt, _ = self.space.evaluate_ref(self.Vt, dg.xi)
            Tt, _ = self.space.evaluate_ref(self.Tt, dg.xi)
        return FrameSample(V, T, dV, dT, Vt, Tt)

    def vertex_values(self):
        return self.space.vertex_values(self.V), self.space.vertex_values(self.T)

    def evaluate(self, x):
        return self.space.evaluate(self.V, x), self.space.evaluate(self.T, x)


def reframe_nodal(g_old, basis: VelocityBasis, V_old, T_old, V_new, T_new):
    """Re-express standardized nodal values from one frame in another at one spatial point.

    The physical velocity of new node ``v_ip`` is ``sqrt(T_new) v_ip + V_new``;
    its coordinate in the old frame is evaluated by Lagrange interpolation of the
    old polynomial factor, including the Gaussian factor.
    """
    v = basis.nodes
    u = (np.sqrt(T_new) * v + np.asarray(V_new) - np.asarray(V_old)) / np.sqrt(T_old)
    g_u = interpolate_g(g_old, basis, u)
    return g_u * np.exp(np.sum(v * v, axis=1) - np.sum(u * u, axis=1))


def reframe_state(c, frame_old: AnsatzFrame, frame_new: AnsatzFrame, dg: DGSpace, basis: VelocityBasis):
    """Transfer a DG state between frames by nodal re-evaluation at quadrature points.

    The physical distribution is evaluated at the new frame's mapped nodes at
    every spatial quadrature point and projected with the new weighted mass
    matrix, so that physical mass matches up to interpolation error.
    """
    old = frame_old.sample_quadrature(dg)
    new = frame_new.sample_quadrature(dg)
    g_q = dg.to_quad(c)
    out = np.empty_like(g_q)
    for e in range(g_q.shape[0]):
        for q in range(g_q.shape[1]):
            out[e, q] = reframe_nodal(g_q[e, q], basis, old.V[e, q], old.T[e, q], new.V[e, q], new.T[e, q])
    scale = new.T ** 1.5
    mx = np.einsum("eq,eq,eqi,eqj->eij", dg.weights, scale, dg.phi, dg.phi)
    rhs = dg.test_quad(scale[..., None] * out)
    return np.linalg.solve(mx, rhs)


def physical_moments(g, basis: VelocityBasis, V, T, check=True) -> MacroscopicState:
    """Moments of the physical distribution from standardized nodal values.

    Uses the mapped rule with nodes ``sqrt(T) v_ip + V`` and weights
    ``T^{3/2} w_ip``, so every field, heat flux included, is computed directly.
    ``g`` has shape ``S + (ndof,)``, ``V`` shape ``S + (3,)`` and ``T`` shape ``S``.
    """
    g = np.asarray(g, dtype=float)
    T = _check_T(T)
    V = np.asarray(V, dtype=float)
    sT = np.sqrt(T)
    wg = g * basis.weights * (T ** 1.5)[..., None]
    rho = wg.sum(axis=-1)
    bad = ~(rho > 0)
    if check and np.any(bad):
        raise DegenerateStateError("non-positive density; temperature is undefined")
    safe = np.where(bad, 1.0, rho)
    v = basis.nodes
    # physical velocity w = sqrt(T) v + V; centred c = w - Vf
    mom_std = wg @ v
    Vf = sT[..., None] * mom_std / safe[..., None] + V
    w = sT[..., None, None] * v + V[..., None, :]
    w2 = np.sum(w * w, axis=-1)
    E = 0.5 * np.sum(wg * w2, axis=-1)
    q = 0.5 * np.einsum("...n,...n,...nd->...d", wg, w2, w)
    c = w - Vf[..., None, :]
    P = np.einsum("...n,...nd,...ne->...de", wg, c, c)
    P = 0.5 * (P + np.swapaxes(P, -1, -2))
    p = np.trace(P, axis1=-2, axis2=-1) / 3.0
    Tf = np.where(bad, np.nan, p / safe)
    return MacroscopicState(rho, Vf, E, P, p, q, Tf)
