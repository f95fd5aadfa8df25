"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (see ``acceptance_log``) that pytest prints
in its terminal summary. Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time

import numpy as np
import pytest

from kinetic_dg import (
    AnsatzFrame,
    BoltzmannOperator,
    BoundarySpec,
    CollisionKernel,
    CollisionModel,
    DGSpace,
    MacroscopicState,
    Mesh1D,
    Solver,
    conservation_fix,
    gauss_hermite_rule,
    macroscopics_from_standard,
    macroscopics_to_standard,
    moments,
    parse_config,
    sphere_quadrature,
    velocity_basis,
)
from kinetic_dg.collision import boltzmann_operator, collision_invariants
from kinetic_dg.dg import standardized_maxwellian
from kinetic_dg.driver import build_solver, initial_condition, run
from kinetic_dg.frame import FRAME_SCALE, physical_moments
from kinetic_dg.integrator import cfl_time_step, entropy
from kinetic_dg.velocity import flux_matrix, mass_matrix

import riemann
from acceptance_log import record
from oracles import (
    MonomialPoly,
    collision_weak_polar,
    dense_gram,
    monomial_tests,
    monomials,
    oracle_moments,
    scalar_dg_advection,
    smooth_density,
)


def random_poly(order, rng, eps=0.1):
    a = eps * rng.standard_normal((order + 1,) * 3)
    a[0, 0, 0] = 1.0
    return MonomialPoly(a)


def const(v):
    return lambda x: np.full(np.shape(x), float(v))


def drift(u):
    return lambda x: np.stack([np.full(np.shape(x), float(u)), np.zeros(np.shape(x)), np.zeros(np.shape(x))], -1)


def test_c01_quadrature_exactness():
    t0 = time.perf_counter()
    worst = 0.0
    for N in range(21):
        r = gauss_hermite_rule(N + 1)
        for k in range(2 * N + 2):
            ref = 0.0 if k % 2 else math.gamma((k + 1) / 2)
            scale = math.gamma((k + 1 + k % 2) / 2)
            got = float(np.sum(r.weights * r.nodes**k))
            worst = max(worst, abs(got - ref) / scale)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 1.0
    assert record(1, "quadrature exactness", ok, f"max rel err {worst:.2e} for N<=20 in {elapsed:.2f}s"), worst


def test_c02_mass_and_flux_diagonal():
    t0 = time.perf_counter()
    worst = 0.0
    diag_err = 0.0
    for N in range(6):
        b = velocity_basis(N)
        dense = dense_gram(b, extra=6)
        diags = [mass_matrix(b), flux_matrix(b, 1), flux_matrix(b, 2), flux_matrix(b, 3)]
        for D, d in zip(dense, diags):
            worst = max(worst, np.max(np.abs(D - np.diag(np.diag(D)))))
            diag_err = max(diag_err, np.max(np.abs(np.diag(D) - d)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and diag_err < 1e-12 and elapsed < 10
    assert record(2, "diagonal mass and flux", ok,
                  f"max off-diagonal {worst:.2e}, diagonal mismatch {diag_err:.2e}, {elapsed:.2f}s"), worst


def test_c03_frame_transform():
    rng = np.random.default_rng(2024)
    n = 1000
    rho = rng.uniform(0.1, 5, n)
    V = rng.normal(0, 1, (n, 3))
    T = rng.uniform(0.05, 4, n)
    m = MacroscopicState(rho, V, None, np.zeros((n, 3, 3)), rho * T, None, T)
    Vf = rng.normal(0, 1, (n, 3))
    Tf = rng.uniform(0.1, 3, n)
    back = macroscopics_from_standard(macroscopics_to_standard(m, Vf, Tf), Vf, Tf)
    ident = max(np.max(np.abs(back.rho / rho - 1)), np.max(np.abs(back.V - V)) / np.max(np.abs(V)),
                np.max(np.abs(back.T / T - 1)))

    b = velocity_basis(7)
    oracle_err = 0.0
    for rho0, Vd, Td, eps in [(1.7, (0.3, -0.2, 0.1), 0.8, 0.05), (0.6, (-0.5, 0.1, 0.0), 2.0, 0.08)]:
        Vd = np.array(Vd)
        r, u, t = oracle_moments(rho0, Vd, Td, eps)
        ref_phys = MacroscopicState(r, u, None, np.zeros((3, 3)), r * t, None, t)
        for dV, sT in [(0.0, 1.0), (0.07, 1.04), (-0.05, 0.97)]:
            Vfr = Vd + np.array([dV, -dV / 2, 0.0])
            Tfr = FRAME_SCALE * Td * sT
            g = smooth_density(np.sqrt(Tfr) * b.nodes + Vfr, rho0, Vd, Td, eps) * np.exp(np.sum(b.nodes**2, 1))
            std = moments(g, b)
            ref = macroscopics_to_standard(ref_phys, Vfr, Tfr)
            oracle_err = max(oracle_err, abs(std.rho / ref.rho - 1), np.max(np.abs(std.V - ref.V)),
                             abs(std.T / ref.T - 1))
    ok = ident < 1e-14 and oracle_err < 1e-8
    assert record(3, "frame transform", ok,
                  f"round trip {ident:.2e} on 1000 states, oracle {oracle_err:.2e} at N=7"), (ident, oracle_err)


def test_c04_collision_scaling_identity():
    t0 = time.perf_counter()
    N = 3
    b = velocity_basis(N)
    rng = np.random.default_rng(7)
    exps = monomial_tests(N)
    P = monomials(b.nodes, exps)
    worst_oracle = worst_pkg = 0.0
    for beta in (0.0, 1.0):
        g = random_poly(N, rng)
        std_oracle = collision_weak_polar(g, exps, beta)
        std_pkg = P.T @ boltzmann_operator(N, beta).apply(g(b.nodes))
        for T in (0.5, 1.0, 4.0):
            V = rng.normal(0, 0.5, 3)
            phys = collision_weak_polar(g, exps, beta, V=V, T=T,
                                        test=lambda w, V=V, T=T: monomials((w - V) / np.sqrt(T), exps))
            scale = np.max(np.abs(phys))
            f = T ** (3 + beta / 2)
            worst_oracle = max(worst_oracle, np.max(np.abs(phys - f * std_oracle)) / scale)
            worst_pkg = max(worst_pkg, np.max(np.abs(phys - f * std_pkg)) / scale)
    elapsed = time.perf_counter() - t0
    ok = worst_oracle < 1e-6 and worst_pkg < 1e-6 and elapsed < 120
    assert record(4, "collision frame scaling", ok,
                  f"oracle/oracle {worst_oracle:.2e}, oracle/operator {worst_pkg:.2e}, {elapsed:.1f}s"), ok


def test_c05_collision_invariants():
    rng = np.random.default_rng(5)
    phi_fixed = 0.0
    default = 0.0
    ladders = []
    for N in (2, 3, 4):
        b = velocity_basis(N)
        phi = collision_invariants(b)
        g = random_poly(N, rng, 0.2)(b.nodes)
        for beta in (0.0, 1.0):
            op = boltzmann_operator(N, beta)
            Q = op.apply(g)
            ref = np.max(np.abs(phi.T @ op.loss(g)))
            default = max(default, np.max(np.abs(phi.T @ Q)) / ref)
            phi_fixed = max(phi_fixed, np.max(np.abs(phi.T @ conservation_fix(Q, b))) / ref)
            if N == 3:
                # under-resolved quadrature ladder ending at the default orders
                ladder = []
                for n_mean, n_rad, deg in [(3, 3, 4), (4, 4, 8), (5, 5, 12)]:
                    coarse = BoltzmannOperator(b, CollisionKernel(beta), n_mean, n_rad, sphere_quadrature(deg))
                    Qc = coarse.apply(g)
                    ladder.append(np.max(np.abs(phi.T @ Qc)) / np.max(np.abs(phi.T @ coarse.loss(g))))
                    phi_fixed = max(phi_fixed, np.max(np.abs(phi.T @ conservation_fix(Qc, b))) / ref)
                ladder.append(default)
                ladders.append(ladder)
    monotone = all(all(a > b_ for a, b_ in zip(lad, lad[1:])) or lad[-2] < 1e-13 for lad in ladders)
    ok = phi_fixed <= 1e-13 and default <= 1e-5 and monotone
    text = ", ".join("/".join(f"{x:.1e}" for x in lad) for lad in ladders)
    assert record(5, "collision invariants", ok,
                  f"with fix {phi_fixed:.1e}, default {default:.1e}, refinement {text}"), ok


def homogeneous_run(scheme, n_steps=2000):
    cfg = parse_config(
        "scenario=homogeneous\nkn=1\norder_x=0\norder_v=3\nelements=1\ntau=0.01\n"
        "collision=boltzmann\nbimodal_shift=0.6\nT_left=0.5\nrho_left=1\n"
        f"scheme={scheme}\n"
    )
    solver = build_solver(cfg)
    c, frame = initial_condition(cfg, solver)
    m0, p0, e0 = solver.totals(c, frame)
    H = [entropy(c, frame, solver.space, solver.basis)]
    drift_max = [0.0]

    def watch(step, t, c, fr):
        m, p, e = solver.totals(c, fr)
        drift_max[0] = max(drift_max[0], abs(m / m0 - 1), np.max(np.abs(p - p0)) / m0, abs(e / e0 - 1))
        H.append(entropy(c, fr, solver.space, solver.basis))

    solver.advance(c, frame, cfg.tau, n_steps, scheme=scheme, callback=watch)
    return drift_max[0], float(np.max(np.diff(H))), H[0] - H[-1]


def test_c06_equilibrium_and_homogeneous_relaxation():
    t0 = time.perf_counter()
    # Maxwellians represented in the frame (constant g), at several frame temperatures and kernels
    worst = 0.0
    for N in (3, 4):
        b = velocity_basis(N)
        for beta in (0.0, 1.0):
            op = boltzmann_operator(N, beta)
            for rho, V, Tf, T in [(1.0, (0, 0, 0), 0.5, 1.0), (2.3, (0.4, -0.1, 0.2), 0.9, 1.8),
                                  (0.4, (-1.0, 0, 0), 3.0, 6.0)]:
                g = standardized_maxwellian(rho, np.array(V), Tf, np.array(V), T, b)
                worst = max(worst, np.linalg.norm(op.apply(g)) / np.linalg.norm(op.loss(g)))
    drifts, rises = [], []
    for scheme in ("rk4", "euler_frame"):
        d, rise, _ = homogeneous_run(scheme)
        drifts.append(d)
        rises.append(rise)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and max(drifts) <= 1e-9 and max(rises) <= 1e-12 and elapsed < 300
    assert record(6, "equilibrium and relaxation", ok,
                  f"|Q(M)|/|L| {worst:.1e}; 2000 steps: moment drift {max(drifts):.1e}, "
                  f"max entropy rise {max(rises):.1e}, {elapsed:.0f}s"), ok


def free_transport_solver(n_el, p, order_v=2):
    mesh = Mesh1D.uniform(0, 1, n_el, "periodic", "periodic")
    space = DGSpace(mesh, p)
    basis = velocity_basis(order_v)
    spec = BoundarySpec("periodic")
    return Solver(space, basis, spec, spec, CollisionModel("off", basis), 1.0)


def test_c07_transport_reduction_and_order():
    t0 = time.perf_counter()
    op_err = 0.0
    rng = np.random.default_rng(3)
    for p in (0, 1, 2, 3):
        s = free_transport_solver(7, p, order_v=3)
        frame = AnsatzFrame.constant(s.cg)
        c = rng.standard_normal((7, p + 1, s.basis.ndof))
        got = s.residual(c, frame)
        for m in range(s.basis.ndof):
            ref = scalar_dg_advection(c[:, :, m], s.basis.nodes[m, 0], 1 / 7, p, periodic=True) * s.basis.weights[m]
            op_err = max(op_err, np.max(np.abs(got[:, :, m] - ref)) / max(1.0, np.max(np.abs(ref))))

    orders = {}
    xs = np.linspace(0, 1, 2000, endpoint=False) + 2.5e-4
    for p in (1, 2, 3):
        dens = []
        for n in (8, 16, 32, 64):
            s = free_transport_solver(n, p)
            frame = AnsatzFrame.constant(s.cg)
            c, frame = s.initial_state(lambda x: 1 + 0.5 * np.sin(2 * np.pi * x), drift(0.2), const(0.5), frame=frame)
            tau = cfl_time_step(frame, s.space, s.basis, 0.2)
            k = int(np.ceil(0.25 / tau))
            c, frame = s.advance(c, frame, 0.25 / k, k, frame_interval=0)
            dens.append(s.sample(c, frame, xs)[0].rho)
        err = [np.sqrt(np.mean((dens[i] - dens[i + 1]) ** 2)) for i in range(3)]
        orders[p] = min(np.log2(err[i] / err[i + 1]) for i in range(2))
    elapsed = time.perf_counter() - t0
    ok = op_err < 1e-12 and all(orders[p] >= p for p in orders) and elapsed < 120
    text = ", ".join(f"p={p}: {o:.2f}" for p, o in orders.items())
    assert record(7, "transport reduction and order", ok,
                  f"operator vs oracle {op_err:.1e}; observed orders {text}; {elapsed:.1f}s"), ok


def stationary_run(scheme, collision):
    rho, V, T = 1.5, (0.3, 0.0, 0.0), 0.8
    spec = BoundarySpec("inflow", rho, V, T)
    mesh = Mesh1D.uniform(-1, 1, 8, "inflow", "inflow")
    space = DGSpace(mesh, 2)
    basis = velocity_basis(3)
    s = Solver(space, basis, spec, spec, CollisionModel(collision, basis, 0.01), 1.0)
    c, frame = s.initial_state(const(rho), drift(V[0]), const(T))
    xs = np.linspace(-1, 1, 101)
    m0, V0, T0 = s.sample(c, frame, xs)
    # explicit in the collision term too, so the step also resolves kn
    tau = min(cfl_time_step(frame, space, basis, 0.3), 0.5 * 0.01)
    c, frame = s.advance(c, frame, tau, 100, scheme=scheme)
    m1, V1, T1 = s.sample(c, frame, xs)
    fields = [(m0.rho, m1.rho), (m0.V, m1.V), (m0.T, m1.T), (m0.p, m1.p), (m0.E, m1.E)]
    return max(np.max(np.abs(a - b)) for a, b in fields)


def test_c08_stationarity():
    worst = {}
    for scheme in ("rk4", "euler_frame"):
        for collision in ("boltzmann", "bgk"):
            worst[(scheme, collision)] = stationary_run(scheme, collision)
    ok = max(worst.values()) < 1e-10
    text = ", ".join(f"{s}/{c} {v:.1e}" for (s, c), v in worst.items())
    assert record(8, "well-prepared stationarity", ok, f"max field change over 100 steps: {text}"), ok


LEFT, RIGHT = (8.0, 0.0, 8.0), (1.0, 0.0, 1.0)  # (rho, u, p)


def shock_tube_profiles(kn, elements, tau, c_smooth, order_x=4, order_v=4, points=2001):
    cfg = parse_config(
        f"scenario=shock_tube\nkn={kn}\norder_x={order_x}\norder_v={order_v}\nelements={elements}\n"
        f"tau={tau}\nt_end=0.14\ncollision=bgk\nsmoothing_c={c_smooth}\n"
    )
    result = run(cfg, write=False)
    solver = build_solver(cfg)
    xs = np.linspace(-1, 1, points)
    m, V, T = solver.sample(result.c, result.frame, xs)
    return xs, m, V[:, 0], T / FRAME_SCALE


@pytest.mark.slow
def test_c09_shock_tube_hydrodynamic_limit():
    t0 = time.perf_counter()
    xs, m, _, _ = shock_tube_profiles(0.001, 200, 1e-4, 1.0)
    exact = riemann.sample(xs, 0.14, LEFT, RIGHT)[:, 0]
    w = riemann.wave_positions(0.14, LEFT, RIGHT)
    regions = {
        "fan": (w["head"] + 0.03, w["tail"] - 0.03),
        "left star": (w["tail"] + 0.03, w["contact"] - 0.06),
        "post-shock": (w["contact"] + 0.06, w["shock"] - 0.03),
    }
    errs = {}
    for name, (a, b) in regions.items():
        sel = (xs > a) & (xs < b)
        errs[name] = float(np.max(np.abs(m.rho[sel] / exact[sel] - 1)))
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) < 0.05 and elapsed < 1800
    text = ", ".join(f"{k} {100 * v:.2f}%" for k, v in errs.items())
    assert record(9, "shock tube vs exact Riemann", ok, f"max rel density error: {text}; {elapsed:.0f}s"), ok


@pytest.mark.slow
def test_c10_smoothing_insensitivity():
    t0 = time.perf_counter()
    a = shock_tube_profiles(0.01, 100, 2e-4, 10.0)
    b = shock_tube_profiles(0.01, 100, 2e-4, 40.0)

    def rel(u, v):
        return float(np.linalg.norm(u - v) / np.linalg.norm(u))

    macro = {
        "rho": rel(a[1].rho, b[1].rho),
        "p": rel(a[1].p, b[1].p),
        "V": rel(a[1].V[:, 0], b[1].V[:, 0]),
        "T": rel(a[1].T, b[1].T),
    }
    ansatz = {"V": rel(a[2], b[2]), "T": rel(a[3], b[3])}
    elapsed = time.perf_counter() - t0
    ok = max(macro.values()) < 0.02 and ansatz["V"] > macro["V"] and ansatz["T"] > macro["T"]
    text = ", ".join(f"{k} {100 * v:.2f}%" for k, v in macro.items())
    assert record(10, "smoothing insensitivity", ok,
                  f"macroscopic {text}; ansatz V {100 * ansatz['V']:.2f}%, T {100 * ansatz['T']:.2f}%; "
                  f"{elapsed:.0f}s"), ok


def test_c11_wall_boundaries():
    base = "scenario=free_transport\nkn=1\norder_x=2\norder_v=3\nelements=10\nV_left=0.3\nperturbation=0.3\n"
    # diffuse walls: net normal mass flux through each wall, at every step
    cfg = parse_config(base + "tau=0.005\nboundary=diffuse\nwall_T=1.3\n")
    s = build_solver(cfg)
    c, frame = initial_condition(cfg, s)
    flux = [0.0]

    def watch_flux(step, t, c, fr):
        flux[0] = max(flux[0], *map(abs, s.transport.boundary_mass_flux(c, fr)))

    watch_flux(0, 0, c, frame)
    s.advance(c, frame, cfg.tau, 100, callback=watch_flux)

    cfg = parse_config(base + "tau=0.005\nboundary=specular\n")
    s = build_solver(cfg)
    c, frame = initial_condition(cfg, s)
    m0 = s.totals(c, frame)[0]
    c, frame = s.advance(c, frame, cfg.tau, 500)
    drift_mass = abs(s.totals(c, frame)[0] / m0 - 1)
    ok = flux[0] < 1e-11 and drift_mass < 1e-11
    assert record(11, "wall boundaries", ok,
                  f"diffuse net flux {flux[0]:.1e}, specular mass drift {drift_mass:.1e} over 500 steps"), ok
