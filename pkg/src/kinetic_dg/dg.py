"""DG transport in a moving velocity frame: weighted mass, flux and frame-rate operators.

A state ``c`` has shape ``(n_elements, p + 1, ndof_v)``: modal in x, nodal in
the standardized velocity. Test functions are ``phi_i(x) L_m(v)`` composed
with the frame map, which produces the chain-rule terms below.

With ``a = sqrt(T) v_1 + V_1`` the semi-discrete system reads

    d/dt (M c) = -F c - G c + Q

where ``M`` carries ``T^{3/2}``, ``F`` is the upwind transport operator whose
volume part tests against ``d/dx phi - (1/T)(T'/2 v + sqrt(T) V') . grad_v phi``,
and ``G`` tests against ``(V_t / sqrt(T) + v T_t / (2 T)) . grad_v phi``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStateError, InvalidArgumentError
from .frame import AnsatzFrame, FrameSample
from .spatial import DGSpace
from .velocity import VelocityBasis, lagrange_matrix, maxwellian_g

__all__ = [
    "BoundarySpec",
    "WeightedMass",
    "KineticTransport",
    "assemble_weighted_mass",
    "solve_weighted_mass",
    "assemble_flux_apply",
    "assemble_time_derivative_apply",
    "upwind_trace",
    "diffuse_boundary_value",
    "specular_boundary_value",
    "standardized_maxwellian",
]


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary treatment at one end of the interval.

    ``inflow`` and ``outflow`` prescribe the Maxwellian ``(rho, V, T)`` on
    incoming velocities; ``diffuse`` re-emits a wall Maxwellian with
    velocity ``V`` and temperature ``T``; ``specular`` mirrors the trace.
    """

    kind: str
    rho: float = 1.0
    V: tuple = (0.0, 0.0, 0.0)
    T: float = 1.0

    def __post_init__(self):
        if self.kind not in ("inflow", "outflow", "specular", "diffuse", "periodic"):
            raise InvalidArgumentError(f"unknown boundary kind {self.kind!r}")
        if self.kind in ("inflow", "outflow", "diffuse") and not self.T > 0:
            raise InvalidArgumentError(f"{self.kind} boundary needs T > 0")
        if self.kind in ("inflow", "outflow") and not self.rho > 0:
            raise InvalidArgumentError(f"{self.kind} boundary needs rho > 0")
        object.__setattr__(self, "V", tuple(float(x) for x in self.V))


def standardized_maxwellian(rho, V, T, V_frame, T_frame, basis: VelocityBasis):
    """Nodal ``g`` of a physical Maxwellian seen in the frame ``(V_frame, T_frame)``."""
    T_frame = np.asarray(T_frame, dtype=float)
    return maxwellian_g(
        np.asarray(rho) * T_frame**-1.5,
        (np.asarray(V, dtype=float) - V_frame) / np.sqrt(T_frame)[..., None],
        np.asarray(T) / T_frame,
        basis.nodes,
    )


@dataclass(frozen=True, eq=False)
class WeightedMass:
    """Block-diagonal ``M = M_T^x (x) diag(w)`` with ``M_T^x`` the ``T^{3/2}``-weighted spatial mass."""

    blocks: np.ndarray  # (n_el, nx, nx)
    weights: np.ndarray  # velocity weights
    _inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_inverse", np.linalg.inv(self.blocks))

    def apply(self, c):
        return np.einsum("eij,ejm->eim", self.blocks, c) * self.weights

    def solve(self, rhs):
        return np.einsum("eij,ejm->eim", self._inverse, rhs / self.weights)

    def condition(self):
        return np.linalg.cond(self.blocks)


def assemble_weighted_mass(frame: AnsatzFrame, space: DGSpace, basis: VelocityBasis) -> WeightedMass:
    T = frame.sample_quadrature(space).T
    return _mass_from_T(T, space, basis)


def _mass_from_T(T, space, basis):
    blocks = np.einsum("eq,eq,eqi,eqj->eij", space.weights, T**1.5, space.phi, space.phi)
    blocks = 0.5 * (blocks + np.swapaxes(blocks, 1, 2))
    if not np.all(np.isfinite(blocks)):
        raise DegenerateStateError("weighted mass matrix is not finite")
    return WeightedMass(blocks, basis.weights)


def solve_weighted_mass(mass: WeightedMass, rhs):
    return mass.solve(rhs)


def upwind_trace(inner, outer, speed_normal):
    """Inner value where the normal speed is outgoing, outer where incoming, mean on ties."""
    return np.where(speed_normal > 0, inner, np.where(speed_normal < 0, outer, 0.5 * (inner + outer)))


def specular_boundary_value(g_inner, basis: VelocityBasis, V1=0.0, T=1.0):
    """Mirror ``w_1 -> -w_1`` of the physical velocity, expressed on the standardized nodes.

    With ``V1 = 0`` this is an exact index flip of the first velocity axis.
    Otherwise the mirrored point ``-v_1 - 2 V1 / sqrt(T)`` is reached by
    Lagrange interpolation along that axis.
    """
    g_inner = np.asarray(g_inner, dtype=float)
    if V1 == 0.0:
        return g_inner[..., basis.reflect_index(0)]
    n = basis.n1
    x = basis.nodes1d
    xr = -x - 2.0 * V1 / np.sqrt(T)
    lag = basis.lagrange(xr)  # (n, n)
    g3 = g_inner.reshape(g_inner.shape[:-1] + (n, n, n))
    out = np.einsum("ai,...ijk->...ajk", lag, g3)
    out = out * np.exp(x**2 - xr**2)[:, None, None]
    return out.reshape(g_inner.shape)


def diffuse_boundary_value(g_inner, speed_normal, basis: VelocityBasis, g_wall):
    """Wall Maxwellian scaled so that the net normal flux through the wall vanishes."""
    w = basis.weights
    out = np.sum(w * np.where(speed_normal > 0, speed_normal, 0.0) * g_inner, axis=-1)
    inc = np.sum(w * np.where(speed_normal < 0, -speed_normal, 0.0) * g_wall, axis=-1)
    if not np.all(inc > 0):
        raise DegenerateStateError("wall Maxwellian has no incoming flux")
    return (out / inc)[..., None] * g_wall


class KineticTransport:
    """Spatial operators for one mesh, velocity basis and pair of boundary specs."""

    def __init__(self, space: DGSpace, basis: VelocityBasis, left: BoundarySpec, right: BoundarySpec):
        if (left.kind == "periodic") != (right.kind == "periodic"):
            raise InvalidArgumentError("periodic boundaries must be set on both ends")
        if (left.kind == "periodic") != space.mesh.periodic:
            raise InvalidArgumentError("boundary specs disagree with the mesh periodicity")
        self.space = space
        self.basis = basis
        self.left = left
        self.right = right

    @property
    def periodic(self) -> bool:
        return self.left.kind == "periodic"

    def mass(self, frame: AnsatzFrame) -> WeightedMass:
        return assemble_weighted_mass(frame, self.space, self.basis)

    def _ghost(self, spec, g_in, Vb, Tb, an):
        """Exterior values at a boundary vertex; ``an`` is the outward normal speed."""
        b = self.basis
        if spec.kind in ("inflow", "outflow"):
            return standardized_maxwellian(spec.rho, spec.V, spec.T, Vb, Tb, b)
        if spec.kind == "diffuse":
            g_wall = standardized_maxwellian(1.0, spec.V, spec.T, Vb, Tb, b)
            return diffuse_boundary_value(g_in, an, b, g_wall)
        if spec.kind == "specular":
            g_ref = specular_boundary_value(g_in, b, Vb[0], Tb)
            if Vb[0] == 0.0:
                return g_ref
            # keep the wall impermeable when interpolation breaks the mirror symmetry
            w = b.weights
            out = np.sum(w * np.where(an > 0, an, 0.0) * g_in)
            inc = np.sum(w * np.where(an < 0, -an, 0.0) * g_ref)
            return g_ref * (out / inc) if inc != 0 else g_ref
        raise InvalidArgumentError(f"no ghost state for {spec.kind!r}")

    def facet_fluxes(self, c, frame: AnsatzFrame):
        """Upwind fluxes ``T^{3/2} w a g_up`` at every vertex, shape ``(n_el + 1, ndof)``."""
        space, b = self.space, self.basis
        Vv, Tv = frame.vertex_values()
        tl = space.trace_left(c)  # value at left end of each element
        tr = space.trace_right(c)
        n_el = space.n_elements
        a = np.sqrt(Tv)[:, None] * b.nodes[:, 0][None, :] + Vv[:, 0, None]
        left_state = np.empty((n_el + 1, b.ndof))
        right_state = np.empty_like(left_state)
        left_state[1:] = tr
        right_state[:-1] = tl
        if self.periodic:
            left_state[0] = tr[-1]
            right_state[-1] = tl[0]
        else:
            left_state[0] = self._ghost(self.left, tl[0], Vv[0], Tv[0], -a[0])
            right_state[-1] = self._ghost(self.right, tr[-1], Vv[-1], Tv[-1], a[-1])
        g_up = upwind_trace(left_state, right_state, a)
        return (Tv**1.5)[:, None] * b.weights * a * g_up

    def flux(self, c, frame: AnsatzFrame, sample: FrameSample | None = None):
        """``F c``: facet fluxes minus the volume term, shape of ``c``."""
        space, b = self.space, self.basis
        fs = frame.sample_quadrature(space) if sample is None else sample
        flux = self.facet_fluxes(c, frame)
        out = (
            space.phi_right[:, :, None] * flux[1:, None, :]
            - space.phi_left[:, :, None] * flux[:-1, None, :]
        )
        g = space.to_quad(c)
        sT = np.sqrt(fs.T)
        v = b.nodes
        a = sT[..., None] * v[:, 0] + fs.V[..., 0, None]
        s = g * b.weights * a
        wt = space.weights * fs.T**1.5
        out -= np.einsum("eqi,eq,eqm->eim", space.dphi, wt, s)
        chain = np.zeros_like(s)
        for d in range(3):
            k = (0.5 * fs.dT[..., None] * v[:, d] + (sT * fs.dV[..., d])[..., None]) / fs.T[..., None]
            chain += b.grad_transpose(s * k, d)
        out += np.einsum("eqi,eq,eqm->eim", space.phi, wt, chain)
        return out

    def time_derivative(self, c, frame: AnsatzFrame, sample: FrameSample | None = None):
        """``G c`` using the rates stored in ``frame``; zero when it has none."""
        if frame.Vt is None:
            return np.zeros_like(c)
        space, b = self.space, self.basis
        fs = frame.sample_quadrature(space) if sample is None else sample
        g = space.to_quad(c)
        s = g * b.weights
        sT = np.sqrt(fs.T)
        v = b.nodes
        acc = np.zeros_like(s)
        for d in range(3):
            k = (fs.Vt[..., d] / sT)[..., None] + v[:, d] * (fs.Tt / (2.0 * fs.T))[..., None]
            acc += b.grad_transpose(s * k, d)
        wt = space.weights * fs.T**1.5
        return np.einsum("eqi,eq,eqm->eim", space.phi, wt, acc)

    def boundary_mass_flux(self, c, frame: AnsatzFrame):
        """Net outward mass flux ``(left, right)`` through the two ends."""
        if self.periodic:
            return 0.0, 0.0
        flux = self.facet_fluxes(c, frame)
        return -float(flux[0].sum()), float(flux[-1].sum())


def assemble_flux_apply(c, frame, space, basis, bcs):
    left, right = bcs
    return KineticTransport(space, basis, left, right).flux(c, frame)


def assemble_time_derivative_apply(c, frame_n, frame_np1, tau, space, basis):
    rated = frame_np1.with_rates(frame_n, tau)
    # G^n uses the old frame's fields with the forward-difference rates
    old = AnsatzFrame(frame_n.space, frame_n.V, frame_n.T, rated.Vt, rated.Tt, frame_n.t_min)
    spec = BoundarySpec("periodic") if space.mesh.periodic else BoundarySpec("outflow")
    return KineticTransport(space, basis, spec, spec).time_derivative(c, old)
