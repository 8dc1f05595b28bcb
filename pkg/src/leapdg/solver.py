"""Glue: build every piece needed to simulate a scenario on a mesh."""

import logging
from dataclasses import dataclass

from .analysis import ErrorRecord, l2_error
from .discretization import build_discretization
from .materials import build_material_field
from .mesh import generate_structured_square
from .semidiscrete import build_operator
from .timestep import align_time_step, estimate_dt, initialize, run

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Problem:
    scenario: object
    disc: object
    material: object
    op: object
    sources: object

    @property
    def mesh(self):
        return self.disc.mesh

    def estimate_dt(self, cfl_safety=0.5, C_inv=1.0, C_tau=1.0):
        return estimate_dt(self.mesh, self.material, self.op.impedance, self.disc.order,
                           self.op.alpha, cfl_safety, C_inv, C_tau)

    def initial_state(self, dt):
        return initialize(self.scenario, self.disc, dt, self.op, self.sources)

    def simulate(self, T_final, dt, config, observers=(), stride=1, dt_limit=None):
        """Initialise with the aligned dt and run to ``T_final``."""
        M, dt = align_time_step(T_final, dt)
        state = self.initial_state(dt)
        final, reports = run(self.op, state, T_final, dt, config, self.sources,
                             observers, stride, dt_limit)
        return final, reports, dt

    def error_record(self, state, dt, scheme):
        errs = l2_error(self.disc, state, self.scenario.exact,
                        state.m * dt, (state.m + 0.5) * dt)
        return ErrorRecord(float(self.mesh.h.max()), dt, self.disc.order, self.op.alpha,
                           scheme, errs["Ex"], errs["Ey"], errs["Hz"])


def build_problem(scenario, mesh, order, alpha):
    disc = build_discretization(mesh, order)
    material = build_material_field(disc, scenario.materials())
    op = build_operator(disc, material, alpha)
    sources = scenario.bind_sources(disc, material, op)
    return Problem(scenario, disc, material, op, sources)


def structured_problem(scenario, n_per_side, order, alpha, bounds=(-1.0, 1.0)):
    mesh = generate_structured_square(n_per_side, bounds, region_fn=scenario.region_fn)
    return build_problem(scenario, mesh, order, alpha)
