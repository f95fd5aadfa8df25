"""Scenario setup, the time loop with snapshots, and CSV output."""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .dg import BoundarySpec
from .errors import ConfigError
from .frame import FRAME_SCALE, AnsatzFrame
from .integrator import CollisionModel, Solver, StepReport
from .spatial import DGSpace, Mesh1D
from .velocity import velocity_basis

__all__ = [
    "RunResult",
    "build_solver",
    "init_shock_tube",
    "initial_condition",
    "write_snapshot",
    "snapshot_steps",
    "run",
    "CSV_HEADER",
]

log = logging.getLogger(__name__)

CSV_HEADER = ("x", "rho", "V1", "E", "p", "T", "q1", "ansatz_V1", "ansatz_T")


def _const(value):
    return lambda x: np.full(np.shape(x), float(value))


def _vel(value):
    return lambda x: np.stack([np.full(np.shape(x), float(value)), np.zeros(np.shape(x)), np.zeros(np.shape(x))], -1)


def _mesh(cfg: ScenarioConfig) -> Mesh1D:
    if cfg.scenario == "shock_tube":
        return Mesh1D.uniform(cfg.x_left, cfg.x_right, cfg.elements, "outflow", "outflow")
    if cfg.scenario == "homogeneous":
        return Mesh1D.uniform(cfg.x_left, cfg.x_right, cfg.elements, "periodic", "periodic")
    kind = cfg.boundary
    return Mesh1D.uniform(cfg.x_left, cfg.x_right, cfg.elements, kind, kind)


def _boundaries(cfg: ScenarioConfig):
    if cfg.scenario == "shock_tube":
        return (
            BoundarySpec("outflow", cfg.rho_left, (cfg.V_left, 0, 0), cfg.T_left),
            BoundarySpec("outflow", cfg.rho_right, (cfg.V_right, 0, 0), cfg.T_right),
        )
    if cfg.scenario == "homogeneous" or cfg.boundary == "periodic":
        p = BoundarySpec("periodic")
        return p, p
    if cfg.boundary == "diffuse":
        w = BoundarySpec("diffuse", T=cfg.wall_T)
        return w, w
    if cfg.boundary == "outflow":
        return (
            BoundarySpec("outflow", cfg.rho_right, (cfg.V_left, 0, 0), cfg.T_left),
            BoundarySpec("outflow", cfg.rho_right, (cfg.V_left, 0, 0), cfg.T_left),
        )
    s = BoundarySpec("specular")
    return s, s


def build_solver(cfg: ScenarioConfig) -> Solver:
    mesh = _mesh(cfg)
    space = DGSpace(mesh, cfg.order_x)
    basis = velocity_basis(cfg.order_v)
    kind = "off" if cfg.scenario == "free_transport" else cfg.collision
    collision = CollisionModel(kind, basis, cfg.kn, cfg.beta, cfg.b_theta, cfg.conservation_fix)
    left, right = _boundaries(cfg)
    return Solver(space, basis, left, right, collision, cfg.smoothing_c, cfg.wall_penalty, cfg.t_min)


def init_shock_tube(cfg: ScenarioConfig, solver: Solver | None = None):
    """Piecewise-constant Maxwellian data split at the diaphragm, which must be a mesh vertex."""
    if cfg.scenario != "shock_tube":
        raise ConfigError("init_shock_tube needs the shock_tube scenario")
    solver = build_solver(cfg) if solver is None else solver
    verts = solver.space.mesh.vertices
    tol = 1e-12 * (cfg.x_right - cfg.x_left)
    if np.min(np.abs(verts - cfg.diaphragm)) > tol:
        raise ConfigError(f"diaphragm x={cfg.diaphragm} is not a mesh vertex; choose elements so it aligns")

    def pick(lv, rv):
        return lambda x: np.where(x <= cfg.diaphragm, lv, rv)

    rho = pick(cfg.rho_left, cfg.rho_right)
    T = pick(cfg.T_left, cfg.T_right)

    def V(x):
        v1 = np.where(x <= cfg.diaphragm, cfg.V_left, cfg.V_right)
        return np.stack([v1, np.zeros_like(v1), np.zeros_like(v1)], -1)

    return solver.initial_state(rho, V, T)


def initial_condition(cfg: ScenarioConfig, solver: Solver):
    if cfg.scenario == "shock_tube":
        return init_shock_tube(cfg, solver)
    if cfg.scenario == "homogeneous":
        # two drifting Maxwellians of equal mass
        half = 0.5 * cfg.rho_left
        u = cfg.bimodal_shift
        return solver.initial_mixture([
            (_const(half), _vel(u), _const(cfg.T_left)),
            (_const(half), _vel(-u), _const(cfg.T_left)),
        ])
    length = cfg.x_right - cfg.x_left

    def rho(x):
        return cfg.rho_right * (1.0 + cfg.perturbation * np.cos(2.0 * np.pi * (x - cfg.x_left) / length))

    return solver.initial_state(rho, _vel(cfg.V_left), _const(cfg.T_left))


def plot_points(cfg: ScenarioConfig):
    n = cfg.plot_points or 5 * cfg.elements + 1
    return np.linspace(cfg.x_left, cfg.x_right, n)


def write_snapshot(solver: Solver, c, frame: AnsatzFrame, t, path, points):
    """Write one CSV profile; ``ansatz_T`` is reported in physical temperature units."""
    m, V, T = solver.sample(c, frame, points)
    rows = np.column_stack([points, m.rho, m.V[:, 0], m.E, m.p, m.T, m.q[:, 0], V[:, 0], T / FRAME_SCALE])
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow([f"{v:.12e}" for v in row])
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc.strerror}") from exc
    return path


def snapshot_steps(times, tau, n_steps):
    """Step indices for the schedule; ``dt`` means after the first step. Step 0 and the last step are always included."""
    steps = {0, n_steps}
    for t in times:
        k = 1 if t == "dt" else int(round(float(t) / tau))
        if 0 <= k <= n_steps:
            steps.add(k)
    return sorted(steps)


@dataclass
class RunResult:
    config: ScenarioConfig
    c: np.ndarray
    frame: AnsatzFrame
    snapshots: list = field(default_factory=list)
    reports: list = field(default_factory=list)

    @property
    def final_report(self) -> StepReport:
        return self.reports[-1]


def run(cfg: ScenarioConfig, write=True, report_every=None) -> RunResult:
    """Run a scenario to ``t_end``, writing snapshots and a manifest into ``output_dir``."""
    from . import __version__

    solver = build_solver(cfg)
    c, frame = initial_condition(cfg, solver)
    n_steps = int(round(cfg.t_end / cfg.tau))
    marks = snapshot_steps(cfg.snapshot_times, cfg.tau, n_steps)
    every = report_every or max(1, n_steps // 100)
    points = plot_points(cfg)
    result = RunResult(cfg, c, frame)
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)

    def emit(step, t, c, frame):
        if write:
            name = f"snap_{len(result.snapshots):03d}_{t:.6f}.csv"
            path = os.path.join(cfg.output_dir, name)
            write_snapshot(solver, c, frame, t, path, points)
        else:
            path = None
        result.snapshots.append((step, t, path))

    previous = [frame]

    def callback(step, t, c, fr):
        if step % every == 0 or step == n_steps:
            rep = solver.report(step, t, cfg.tau, c, fr, previous[0])
            result.reports.append(rep)
            log.info(rep.summary())
        previous[0] = fr
        if step in marks:
            emit(step, t, c, fr)

    result.reports.append(solver.report(0, 0.0, cfg.tau, c, frame, None))
    emit(0, 0.0, c, frame)
    c, frame = solver.advance(c, frame, cfg.tau, n_steps, cfg.scheme, cfg.frame_interval, callback=callback)
    result.c, result.frame = c, frame
    if write:
        manifest = cfg.manifest_lines() + [
            f"version={__version__}",
            f"n_steps={n_steps}",
            f"snapshots={len(result.snapshots)}",
            f"final={result.final_report.summary()}",
        ]
        with open(os.path.join(cfg.output_dir, "manifest.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(manifest) + "\n")
    return result
