"""Iterative leap-frog time stepping.

One step advances (E^m, Hz^{m+1/2}) to (E^{m+1}, Hz^{m+3/2}) by inner
iterations n = 0, 1, ...: each iteration recomputes the electric field with
the dissipative flux evaluated at the average (E^m + E^{m+1,n}) / 2, then the
magnetic field using the new electric iterate and the average
(Hz^{m+1/2} + Hz^{m+3/2,n}) / 2. One iteration is the explicit scheme, two
the predictor-corrector, and iterating until successive differences drop
below ``tol`` approaches the implicit scheme.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels
from .errors import BlowUpError, ConfigError, NonConvergenceError
from .semidiscrete import FieldState

logger = logging.getLogger(__name__)

MODES = ("explicit", "predictor_corrector", "iterate_to_tol")
_FIXED_ITERATIONS = {"explicit": 1, "predictor_corrector": 2}


@dataclass
class SchemeConfig:
    mode: str = "predictor_corrector"
    alpha: int = 1
    dt: Optional[float] = None
    cfl_safety: Optional[float] = None
    tol: float = 1e-10
    max_iterations: int = 50
    # iterate_to_tol only: raise when max_iterations is hit without convergence
    strict: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.alpha not in (0, 1):
            raise ConfigError(f"alpha must be 0 or 1, got {self.alpha!r}")
        if self.dt is not None and self.cfl_safety is not None:
            raise ConfigError("dt and cfl_safety are mutually exclusive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if self.cfl_safety is not None and not 0 < self.cfl_safety:
            raise ConfigError(f"cfl_safety must be positive, got {self.cfl_safety!r}")
        if self.mode == "iterate_to_tol" and not self.tol > 0:
            raise ConfigError("tol must be positive for iterate_to_tol")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")

    @property
    def iteration_limit(self):
        return _FIXED_ITERATIONS.get(self.mode, self.max_iterations)


@dataclass
class StepReport:
    iterations: int = 0
    e_norms: List[float] = field(default_factory=list)
    h_norms: List[float] = field(default_factory=list)
    converged: bool = False

    def ratios(self, floor=0.0):
        """Successive contraction ratios ||d_n|| / ||d_{n-1}|| for E and Hz.

        Ratios whose denominator or numerator is at or below ``floor`` are dropped.
        """
        def r(seq):
            return [b / a for a, b in zip(seq, seq[1:]) if a > floor and b > floor]
        return r(self.e_norms), r(self.h_norms)


def stability_constants(N, alpha, min_Z, min_Y, C_inv=1.0, C_tau=1.0):
    trace = C_tau**2 * (N + 1) * (N + 2)
    C_E = 0.5 * C_inv * N**2 + trace * (2.5 + (alpha + 0.25) / min_Z)
    C_H = 0.5 * C_inv * N**2 + trace * (2.5 + (alpha + 0.5) / min_Y)
    return C_E, C_H


def estimate_dt(mesh, material, impedance, N, alpha, cfl_safety=0.5, C_inv=1.0, C_tau=1.0):
    """Time step from the explicit scheme's stability condition, scaled by ``cfl_safety``."""
    if not (C_inv > 0 and C_tau > 0 and cfl_safety > 0):
        raise ConfigError("C_inv, C_tau and cfl_safety must be positive")
    C_E, C_H = stability_constants(N, alpha, float(impedance.Z.min()),
                                   float(impedance.Y.min()), C_inv, C_tau)
    lower = min(material.eps_lb, material.mu_lb)
    return cfl_safety * lower / max(C_E, C_H) * float(mesh.h.min())


def align_time_step(T_final, dt):
    """Number of steps and the adjusted dt landing exactly on ``T_final``."""
    if not T_final > 0:
        raise ConfigError(f"T_final must be positive, got {T_final!r}")
    if T_final < dt:
        return 0, dt
    M = int(round(T_final / dt))
    return M, T_final / M


def initialize(scenario, disc, dt, op=None, sources=None):
    """Initial state (E^0, Hz^{1/2}).

    Uses the exact half-step magnetic field when the scenario provides one,
    otherwise advances Hz^0 by half a step of the magnetic update.
    """
    Ex0, Ey0, Hz0 = (np.asarray(f, dtype=float) * np.ones_like(disc.x)
                     for f in scenario.initial_fields(disc.x, disc.y))
    if getattr(scenario, "has_exact", False):
        Hz_half = np.asarray(scenario.exact(disc.x, disc.y, 0.5 * dt)[2]) * np.ones_like(disc.x)
        return FieldState(Ex0, Ey0, Hz_half, 0)
    if not (np.any(Ex0) or np.any(Ey0) or np.any(Hz0)) and sources is None:
        return FieldState(Ex0, Ey0, Hz0, 0)
    if op is None:
        raise ConfigError("a scenario without exact data needs an operator to start Hz")
    gz = op.magnetic_strong(Ex0, Ey0, disc.jump(Hz0))
    if sources is not None:
        SH = sources.magnetic(0.25 * dt)
        if SH is not None:
            gz = gz + SH
    return FieldState(Ex0, Ey0, Hz0 + 0.5 * dt * op.magnetic_update(gz), 0)


def step(op, state, dt, config, sources=None, use_kernels=None):
    """Advance one time step. Returns (new_state, StepReport).

    ``use_kernels`` selects the fused compiled kernels (default: whenever
    numba is importable) or the numpy operator path; both compute the same
    update.
    """
    if use_kernels is None:
        use_kernels = kernels.AVAILABLE
    engine = _KernelEngine(op) if use_kernels else _NumpyEngine(op)
    disc = op.disc
    m = state.m
    Exm, Eym, Hh = state.Ex, state.Ey, state.Hz
    limit = config.iteration_limit
    adaptive = config.mode == "iterate_to_tol"

    SE = SH = None
    if sources is not None:
        SE = sources.electric((m + 0.5) * dt)
        SH = sources.magnetic((m + 1) * dt)
    engine.prepare(Exm, Eym, Hh, SE)

    Ex_it, Ey_it, H_it = Exm, Eym, Hh
    report = StepReport()
    for n in range(limit):
        Ex_new, Ey_new = engine.electric(Ex_it, Ey_it, dt)
        H_new = engine.magnetic(Ex_new, Ey_new, H_it, SH, dt)

        e_norm = disc.norm(Ex_new - Ex_it, Ey_new - Ey_it)
        h_norm = disc.norm(H_new - H_it)
        report.e_norms.append(e_norm)
        report.h_norms.append(h_norm)
        report.iterations = n + 1

        Ex_it, Ey_it, H_it = Ex_new, Ey_new, H_new
        if not (np.isfinite(e_norm) and np.isfinite(h_norm)):
            raise BlowUpError(f"non-finite field at time index {m + 1}", time_index=m + 1)
        if adaptive and e_norm < config.tol and h_norm < config.tol:
            report.converged = True
            break
    else:
        if adaptive:
            if config.strict:
                raise NonConvergenceError(
                    f"no convergence within {limit} iterations at time index {m + 1} "
                    f"(last norms E={report.e_norms[-1]:.3e}, H={report.h_norms[-1]:.3e})",
                    history=list(zip(report.e_norms, report.h_norms)))
        else:
            report.converged = True

    return FieldState(Ex_it, Ey_it, H_it, m + 1), report


class _NumpyEngine:
    def __init__(self, op):
        self.op = op
        self.disc = op.disc

    def prepare(self, Exm, Eym, Hh, SE):
        disc = self.disc
        self.Exm, self.Eym, self.Hh = Exm, Eym, Hh
        self.jH_half = disc.jump(Hh)
        gx0, gy0 = self.op.electric_volume_and_h_flux(Hh, self.jH_half)
        if SE is not None:
            gx0, gy0 = gx0 + SE[0], gy0 + SE[1]
        self.g0 = gx0, gy0
        self.jE_m = disc.jump(Exm), disc.jump(Eym)

    def electric(self, Ex_it, Ey_it, dt):
        disc, op = self.disc, self.op
        jx = 0.5 * (self.jE_m[0] + disc.jump(Ex_it))
        jy = 0.5 * (self.jE_m[1] + disc.jump(Ey_it))
        ax, ay = op.electric_alpha_flux(jx, jy)
        dEx, dEy = op.electric_update(self.g0[0] + ax, self.g0[1] + ay)
        return self.Exm + dt * dEx, self.Eym + dt * dEy

    def magnetic(self, Ex_new, Ey_new, H_it, SH, dt):
        jh = 0.5 * (self.jH_half + self.disc.jump(H_it))
        gz = self.op.magnetic_strong(Ex_new, Ey_new, jh)
        if SH is not None:
            gz = gz + SH
        return self.Hh + dt * self.op.magnetic_update(gz)


class _KernelEngine:
    def __init__(self, op):
        self.op = op
        self.d = op.kernel_data()

    def prepare(self, Exm, Eym, Hh, SE):
        d = self.d
        self.Exm = np.ascontiguousarray(Exm)
        self.Eym = np.ascontiguousarray(Eym)
        self.Hh = np.ascontiguousarray(Hh)
        gx = np.empty_like(self.Hh)
        gy = np.empty_like(self.Hh)
        kernels.electric_fixed(self.Hh, d["vmapM"], d["vmapP"], d["bnd"], d["nx"], d["ny"],
                               d["e_h"], d["fscale"], d["Dr"], d["Ds"], d["metric"],
                               d["lift"], gx, gy)
        if SE is not None:
            gx += SE[0]
            gy += SE[1]
        self.g0 = gx, gy

    def electric(self, Ex_it, Ey_it, dt):
        d = self.d
        Ex = np.empty_like(self.Exm)
        Ey = np.empty_like(self.Eym)
        kernels.electric_iterate(self.g0[0], self.g0[1], self.Exm, self.Eym,
                                 np.ascontiguousarray(Ex_it), np.ascontiguousarray(Ey_it),
                                 d["vmapM"], d["vmapP"], d["bnd"], d["nx"], d["ny"], d["e_e"],
                                 d["fscale"], d["lift"], d["e_update"], dt, Ex, Ey)
        return Ex, Ey

    def magnetic(self, Ex_new, Ey_new, H_it, SH, dt):
        d = self.d
        H = np.empty_like(self.Hh)
        src = _NO_SOURCE if SH is None else np.ascontiguousarray(SH)
        kernels.magnetic_iterate(Ex_new, Ey_new, self.Hh, np.ascontiguousarray(H_it), src,
                                 SH is not None, d["vmapM"], d["vmapP"], d["bnd"], d["nx"],
                                 d["ny"], d["h_e"], d["h_h"], d["fscale"], d["Dr"], d["Ds"],
                                 d["metric"], d["lift"], d["h_update"], d["h_scalar"], dt, H)
        return H


_NO_SOURCE = np.zeros((1, 1))


def run(op, state, T_final, dt, config, sources=None, observers=(), stride=1, dt_limit=None):
    """Advance ``state`` to ``T_final``. Returns (final_state, reports).

    ``dt`` is aligned so that M steps land exactly on ``T_final``. Observers
    are called as ``observer(state, report)`` every ``stride`` steps and after
    the last step.
    """
    M, dt = align_time_step(T_final, dt)
    if dt_limit is not None and dt > dt_limit:
        logger.warning("dt=%.3e exceeds the stability estimate %.3e", dt, dt_limit)
    reports = []
    for i in range(M):
        state, report = step(op, state, dt, config, sources)
        reports.append(report)
        if observers and ((i + 1) % stride == 0 or i + 1 == M):
            for obs in observers:
                obs(state, report)
    return state, reports
