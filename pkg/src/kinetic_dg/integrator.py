"""Explicit time stepping: the frame-evolving one-stage scheme and fixed-frame RK4."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .collision import apply_bgk, boltzmann_operator, collision_invariants, conservation_fix
from .dg import BoundarySpec, KineticTransport, WeightedMass, standardized_maxwellian
from .errors import DegenerateStateError, FrameError, InvalidArgumentError, SolverAbort
from .frame import FRAME_SCALE, T_MIN, AnsatzFrame, FrameSample, physical_moments
from .smoother import Smoother
from .spatial import CGSpace, DGSpace
from .velocity import VelocityBasis

__all__ = [
    "CollisionModel",
    "StepReport",
    "Solver",
    "cfl_time_step",
    "entropy",
]

log = logging.getLogger(__name__)


class CollisionModel:
    """Collision term seen by the spatial discretization.

    ``apply(g, T)`` returns the tested physical collision vector at each
    spatial point, i.e. the standardized operator times its frame factor
    (``T^(3 + beta/2)`` for Boltzmann, ``T^(3/2)`` for BGK) divided by ``kn``.
    """

    def __init__(self, kind: str, basis: VelocityBasis, knudsen: float = 1.0, beta: float = 0.0,
                 b_theta: float = 1.0 / (4.0 * np.pi), fix: bool = True):
        if kind not in ("boltzmann", "bgk", "off"):
            raise InvalidArgumentError(f"unknown collision model {kind!r}")
        if kind != "off" and not knudsen > 0:
            raise InvalidArgumentError("Knudsen number must be positive")
        self.kind = kind
        self.basis = basis
        self.knudsen = float(knudsen)
        self.beta = float(beta)
        self.b_theta = float(b_theta)
        self.fix = bool(fix) and basis.order >= 2
        self._op = boltzmann_operator(basis.order, self.beta, self.b_theta) if kind == "boltzmann" else None
        self.last_residual = 0.0
        self.last_correction = 0.0

    def apply(self, g, T):
        if self.kind == "off":
            self.last_residual = self.last_correction = 0.0
            return np.zeros_like(g)
        if self.kind == "boltzmann":
            q = self._op.apply(g) * (T ** (3.0 + 0.5 * self.beta) / self.knudsen)[..., None]
        else:
            try:
                q = apply_bgk(g, self.basis, self.knudsen) * (T**1.5)[..., None]
            except (DegenerateStateError, InvalidArgumentError) as exc:
                raise SolverAbort(f"BGK relaxation failed: {exc}") from exc
        scale = max(float(np.max(np.abs(q))), 1e-300)
        if self.fix:
            q, corr = conservation_fix(q, self.basis, return_correction=True)
            self.last_correction = float(np.max(corr)) / scale
        phi = collision_invariants(self.basis)
        self.last_residual = float(np.max(np.abs(q @ phi))) / scale
        return q


@dataclass
class StepReport:
    step: int
    t: float
    tau: float
    mass: float
    momentum: np.ndarray
    energy: float
    frame_dV: float
    frame_dT: float
    collision_residual: float
    collision_correction: float

    def summary(self) -> str:
        return (
            f"step={self.step} t={self.t:.6g} mass={self.mass:.12g} "
            f"momentum={self.momentum[0]:.6g} energy={self.energy:.12g} "
            f"|dV|={self.frame_dV:.3e} |dT|={self.frame_dT:.3e} "
            f"Q-residual={self.collision_residual:.2e}"
        )


def entropy(c, frame: AnsatzFrame, space: DGSpace, basis: VelocityBasis) -> float:
    """Quadrature value of ``int int f log f``; NaN if the nodal ``g`` is not positive."""
    g = space.to_quad(c)
    if np.any(g <= 0):
        return float("nan")
    T = frame.sample_quadrature(space).T
    v2 = np.sum(basis.nodes**2, axis=1)
    per_point = np.sum(basis.weights * g * (np.log(g) - v2), axis=-1) * T**1.5
    return float(np.sum(space.weights * per_point))


def cfl_time_step(frame: AnsatzFrame, space: DGSpace, basis: VelocityBasis, cfl=0.5) -> float:
    """``cfl * h / ((p + 1) max |sqrt(T) v_max + V|)``."""
    vmax = float(np.max(np.abs(basis.nodes1d)))
    speed = np.max(np.sqrt(frame.T) * vmax + np.abs(frame.V[:, 0]))
    return cfl * float(np.min(space.mesh.h)) / ((space.order + 1) * speed)


class Solver:
    """Owns the operators of one run and advances ``(c, frame)`` pairs."""

    def __init__(self, space: DGSpace, basis: VelocityBasis, left: BoundarySpec, right: BoundarySpec,
                 collision: CollisionModel, c_smooth: float = 0.0, wall_penalty: float = 1e8,
                 t_min: float = T_MIN):
        self.space = space
        self.basis = basis
        self.transport = KineticTransport(space, basis, left, right)
        self.collision = collision
        self.cg = CGSpace(space.mesh, max(space.order, 1))
        self.smoother = Smoother(self.cg, space, c_smooth)
        self.wall_penalty = float(wall_penalty)
        self.t_min = float(t_min)
        self.init_iterations = 20

    # -- frame handling -------------------------------------------------
    def _frame_conditions(self):
        dirT, dirV, pen = {}, [{}, {}, {}], {}
        ends = ((self.transport.left, self.cg.left_dof), (self.transport.right, self.cg.right_dof))
        for spec, dof in ends:
            if spec.kind in ("inflow", "outflow"):
                dirT[dof] = FRAME_SCALE * spec.T
                for d in range(3):
                    dirV[d][dof] = spec.V[d]
            elif spec.kind == "diffuse":
                for d in range(3):
                    dirV[d][dof] = spec.V[d]
            elif spec.kind == "specular":
                pen[dof] = self.wall_penalty
        return dirT, dirV, pen

    def frame_from_fields(self, V_q, T_q) -> AnsatzFrame:
        """Smooth raw physical ``V`` and ``T`` given at quadrature points into a frame."""
        dirT, dirV, pen = self._frame_conditions()
        V = np.empty((self.cg.n_global, 3))
        for d in range(3):
            V[:, d] = self.smoother.solve(V_q[..., d], dirV[d], pen if d == 0 else None)
        T = self.smoother.solve(FRAME_SCALE * np.asarray(T_q), dirT)
        try:
            return AnsatzFrame(self.cg, V, T, t_min=self.t_min)
        except FrameError as exc:
            raise SolverAbort(str(exc)) from exc

    def refresh_frame(self, c, frame: AnsatzFrame) -> AnsatzFrame:
        fs = frame.sample_quadrature(self.space)
        try:
            m = physical_moments(self.space.to_quad(c), self.basis, fs.V, fs.T)
        except DegenerateStateError as exc:
            raise SolverAbort(f"cannot form moments: {exc}") from exc
        return self.frame_from_fields(m.V, m.T)

    def initial_state(self, rho, V, T, frame: AnsatzFrame | None = None):
        """Project Maxwellian data given as callables of ``x`` into the smoothed initial frame."""
        return self.initial_mixture([(rho, V, T)], frame)

    def initial_mixture(self, components, frame: AnsatzFrame | None = None):
        """Project a sum of Maxwellians ``[(rho, V, T), ...]`` (callables of ``x``).

        The frame is built from the mixture's moments unless one is given.
        Nodal values are rescaled pointwise so the density is matched exactly.
        """
        x = self.space.points
        parts = []
        for rho, V, T in components:
            parts.append((
                np.broadcast_to(np.asarray(rho(x), dtype=float), x.shape),
                np.broadcast_to(np.asarray(V(x), dtype=float), x.shape + (3,)),
                np.broadcast_to(np.asarray(T(x), dtype=float), x.shape),
            ))
        rho_q = sum(p[0] for p in parts)
        V_q = sum(p[0][..., None] * p[1] for p in parts) / rho_q[..., None]
        e_q = sum(p[0] * (3.0 * p[2] + np.sum(p[1] ** 2, axis=-1)) for p in parts)
        T_q = (e_q - rho_q * np.sum(V_q**2, axis=-1)) / (3.0 * rho_q)
        if frame is not None:
            return self._project(parts, rho_q, frame), frame
        frame = self.frame_from_fields(V_q, T_q)
        # make the frame consistent with the moments of the discrete state, so
        # the first refresh does not move it
        for _ in range(self.init_iterations):
            c = self._project(parts, rho_q, frame)
            new = self.refresh_frame(c, frame)
            done = np.allclose(new.T, frame.T, rtol=1e-14, atol=0) and np.allclose(new.V, frame.V, rtol=0, atol=1e-14)
            frame = new
            if done:
                break
        return self._project(parts, rho_q, frame), frame

    def _project(self, parts, rho_q, frame):
        fs = frame.sample_quadrature(self.space)
        g = sum(standardized_maxwellian(r, v, t, fs.V, fs.T, self.basis) for r, v, t in parts)
        dens = (g @ self.basis.weights) * fs.T**1.5
        g = g * (rho_q / dens)[..., None]
        mass = self.transport.mass(frame)
        rhs = self.space.test_quad((fs.T**1.5)[..., None] * g) * self.basis.weights
        return mass.solve(rhs)

    # -- right-hand sides ----------------------------------------------
    def _collision(self, c, fs: FrameSample):
        if self.collision.kind == "off":
            return np.zeros_like(c)
        g = self.space.to_quad(c)
        return self.space.test_quad(self.collision.apply(g, fs.T))

    def residual(self, c, frame: AnsatzFrame, fs: FrameSample | None = None):
        """``F c - Q(c)`` for a fixed frame."""
        fs = frame.sample_quadrature(self.space) if fs is None else fs
        return self.transport.flux(c, frame, fs) - self._collision(c, fs)

    def _check(self, c):
        if not np.all(np.isfinite(c)):
            raise SolverAbort("non-finite coefficients")
        return c

    def _transfer(self, rhs_mass_c, c_for_g, frame_old, frame_new, tau):
        """Solve ``M_{n+1} c = M_n y - tau G c`` with rates from the two frames."""
        if frame_new.is_same(frame_old):
            return frame_new, None
        rated = frame_new.with_rates(frame_old, tau)
        old_with_rates = AnsatzFrame(frame_old.space, frame_old.V, frame_old.T, rated.Vt, rated.Tt, frame_old.t_min)
        g = self.transport.time_derivative(c_for_g, old_with_rates)
        return rated, self.transport.mass(rated).solve(rhs_mass_c - tau * g)

    def step_frame_evolving(self, c, frame: AnsatzFrame, tau: float, update_frame=True):
        """One step of the helper-distribution scheme.

        ``h = c - tau M_n^{-1}(F c - Q c)``; the new frame comes from the
        smoothed moments of ``h``; then ``c_{n+1} = M_{n+1}^{-1}(M_n h - tau G_n c)``.
        """
        fs = frame.sample_quadrature(self.space)
        mass = self.transport.mass(frame)
        r = self.residual(c, frame, fs)
        mh = mass.apply(c) - tau * r
        h = mass.solve(mh)
        if not update_frame:
            return self._check(h), frame.without_rates()
        frame_new = self.refresh_frame(self._check(h), frame)
        rated, c_new = self._transfer(mh, c, frame, frame_new, tau)
        if c_new is None:
            return h, frame_new
        return self._check(c_new), rated

    def step_fixed_frame_rk4(self, c, frame: AnsatzFrame, tau: float, update_frame=True):
        """Classical RK4 in a frozen frame, then one frame refresh and transfer."""
        fs = frame.sample_quadrature(self.space)
        mass = self.transport.mass(frame)

        def rate(y):
            return -mass.solve(self.residual(y, frame, fs))

        k1 = rate(c)
        k2 = rate(c + 0.5 * tau * k1)
        k3 = rate(c + 0.5 * tau * k2)
        k4 = rate(c + tau * k3)
        y = self._check(c + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if not update_frame:
            return y, frame.without_rates()
        frame_new = self.refresh_frame(y, frame)
        rated, c_new = self._transfer(mass.apply(y), y, frame, frame_new, tau)
        if c_new is None:
            return y, frame_new
        return self._check(c_new), rated

    # -- diagnostics ----------------------------------------------------
    def totals(self, c, frame: AnsatzFrame):
        """Integrated mass, momentum and energy of the physical distribution."""
        fs = frame.sample_quadrature(self.space)
        m = physical_moments(self.space.to_quad(c), self.basis, fs.V, fs.T, check=False)
        w = self.space.weights
        mom = np.einsum("eq,eqd->d", w, m.rho[..., None] * m.V)
        return float(np.sum(w * m.rho)), mom, float(np.sum(w * m.E))

    def report(self, step, t, tau, c, frame, previous: AnsatzFrame | None):
        mass, mom, energy = self.totals(c, frame)
        if previous is None:
            dV = dT = 0.0
        else:
            dV = float(np.max(np.abs(frame.V - previous.V)))
            dT = float(np.max(np.abs(frame.T - previous.T)))
        return StepReport(step, t, tau, mass, mom, energy, dV, dT,
                          self.collision.last_residual, self.collision.last_correction)

    def sample(self, c, frame: AnsatzFrame, x):
        """Physical moments and frame values at points ``x``."""
        x = np.asarray(x, dtype=float)
        g = self.space.evaluate(c, x)
        V, T = frame.evaluate(x)
        return physical_moments(g, self.basis, V, T, check=False), V, T

    def advance(self, c, frame, tau, n_steps, scheme="rk4", frame_interval=1, t0=0.0, step0=0, callback=None):
        """Take ``n_steps`` steps; ``callback(step, t, c, frame)`` runs after each one."""
        stepper = {"rk4": self.step_fixed_frame_rk4, "euler_frame": self.step_frame_evolving}.get(scheme)
        if stepper is None:
            raise InvalidArgumentError(f"unknown scheme {scheme!r}")
        t = t0
        for k in range(n_steps):
            n = step0 + k
            update = frame_interval > 0 and (n + 1) % frame_interval == 0
            c, frame = stepper(c, frame, tau, update_frame=update)
            t = t0 + (k + 1) * tau
            if callback is not None:
                callback(n + 1, t, c, frame)
        return c, frame
