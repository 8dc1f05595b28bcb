"""Command-line driver.

    leapdg <command> --config <path> [--set section.key=value ...]

Commands: mesh-info, convergence-space, convergence-time, scatter, run.
Exit codes: 0 success, 2 invalid configuration or input, 3 numerical
blow-up, 4 non-convergence of the inner iteration, 5 I/O failure.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .analysis import (ErrorRecord, fit_rate, intensity, l2_error, region_max, write_error_csv,
                       write_rates_csv)
from .config import COMMANDS, load_config
from .discretization import PointProbe
from .errors import BlowUpError, ConfigError, LeapDGError, NonConvergenceError
from .io import TimeSeriesWriter, write_nodal_csv, write_vtk
from .mesh import generate_structured_square, load_mesh, mesh_quality
from .scenarios import Circle, make_scenario
from .semidiscrete import FieldState
from .solver import build_problem
from .timestep import SchemeConfig, align_time_step, step

logger = logging.getLogger("leapdg")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_NONCONVERGENCE, EXIT_IO = 0, 2, 3, 4, 5
FIELDS = ("Ex", "Ey", "Hz")


# {{{ building blocks

def scenario_from_config(cfg):
    sc = cfg.scenario
    if sc.name == "manufactured":
        return make_scenario("manufactured")
    params = dict(eps_inside=sc.eps_inside, eps_background=sc.eps_background, mu=sc.mu,
                  mu_background=sc.mu_background, wavenumber=sc.wavenumber)
    if sc.circles is not None:
        params["circles"] = tuple(Circle(*c) for c in sc.circles)
    return make_scenario(sc.name, **params)


def mesh_from_config(cfg, scenario=None, n_per_side=None):
    me = cfg.mesh
    if me.source == "file":
        return load_mesh(me.path, me.format)
    region_fn = scenario.region_fn if scenario is not None else None
    return generate_structured_square(n_per_side or me.n_per_side, tuple(me.bounds),
                                      region_fn=region_fn)


def scheme_from_config(cfg, mode=None):
    sh = cfg.scheme
    return SchemeConfig(mode=mode or sh.mode, alpha=cfg.discretization.alpha,
                        tol=sh.tol, max_iterations=sh.max_iterations, strict=sh.strict)


def stable_dt(cfg, problem, safety=None):
    st = cfg.stability
    if safety is None:
        safety = cfg.scheme.cfl_safety if cfg.scheme.cfl_safety is not None else 0.5
    return problem.estimate_dt(safety, st.C_inv, st.C_tau)


def time_step(cfg, problem):
    """Configured dt, or the stability estimate scaled by cfl_safety."""
    return cfg.scheme.dt if cfg.scheme.dt is not None else stable_dt(cfg, problem)


def prepare_output(cfg):
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "effective_config.yaml")
    return out


def _write_summary(path, summary):
    with open(path, "w") as fh:
        yaml.safe_dump(summary, fh, sort_keys=False)

# }}}


# {{{ commands

def cmd_mesh_info(cfg):
    scenario = scenario_from_config(cfg)
    mesh = mesh_from_config(cfg, scenario)
    q = mesh_quality(mesh)
    report = {
        "elements": mesh.num_elements,
        "vertices": len(mesh.vertices),
        "min_h": q["min_h"],
        "max_h": q["max_h"],
        "max_shape_ratio": q["max_ratio"],
        "boundary_faces": mesh.num_boundary_faces,
        "internal_faces": mesh.num_internal_faces,
        "regions": sorted(int(r) for r in np.unique(mesh.regions)),
    }
    out = prepare_output(cfg)
    with open(out / "mesh_info.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("quantity", "value"))
        for k, v in report.items():
            w.writerow((k, " ".join(map(str, v)) if isinstance(v, list) else repr(v)))
    for k, v in report.items():
        print(f"{k}: {v}")
    return report


def _fit_all(records, axis):
    rates = {}
    for fld in FIELDS:
        try:
            rates[fld] = fit_rate(records, axis=axis, field=fld)
        except ValueError as exc:
            logger.warning("no %s rate for %s: %s", axis, fld, exc)
    return rates


def convergence_space(cfg):
    """Errors and h-rates per flux; returns (records, rates keyed by (label, field))."""
    scenario = scenario_from_config(cfg)
    N = cfg.discretization.N
    T = cfg.time.T_final
    records, rates = [], {}
    for alpha in cfg.study.alphas:
        dt = cfg.scheme.dt
        if dt is None:
            finest = build_problem(scenario, mesh_from_config(
                cfg, scenario, max(cfg.study.resolutions)), N, alpha)
            dt = stable_dt(cfg, finest)
        scheme = SchemeConfig(mode=cfg.scheme.mode, alpha=alpha, tol=cfg.scheme.tol,
                              max_iterations=cfg.scheme.max_iterations,
                              strict=cfg.scheme.strict)
        M, dt_used = align_time_step(T, dt)
        group, midpoint = [], []
        for n in cfg.study.resolutions:
            problem = build_problem(scenario, mesh_from_config(cfg, scenario, n), N, alpha)

            # cross-check at the halfway time, where the exact fields do not vanish
            def grab(st, _report, problem=problem):
                if st.m == M // 2:
                    midpoint.append(problem.error_record(st, dt_used, scheme.mode + "@mid"))

            try:
                state, _, _ = problem.simulate(T, dt, scheme, observers=[grab],
                                               stride=max(M // 2, 1))
            except BlowUpError as exc:
                raise BlowUpError(f"resolution {n} per side: {exc}", exc.time_index) from exc
            rec = problem.error_record(state, dt_used, scheme.mode)
            logger.info("n=%d alpha=%d: %s", n, alpha, rec)
            group.append(rec)
        records.extend(group + midpoint)
        for label, recs in ((f"alpha={alpha}", group), (f"alpha={alpha} mid", midpoint)):
            if len(recs) == len(group):
                for fld, est in _fit_all(recs, "h").items():
                    rates[label, fld] = est
    return records, rates


def cmd_convergence_space(cfg):
    records, rates = convergence_space(cfg)
    out = prepare_output(cfg)
    write_error_csv(records, out / "errors.csv")
    write_rates_csv(rates, out / "rates.csv")
    for (label, fld), est in rates.items():
        print(f"{label} {fld}: slope {est.slope:.3f}")
    return records, rates


def convergence_time(cfg):
    """Errors and dt-rates per scheme mode on a fixed mesh.

    Returns (records, rates, warnings); a warning is recorded for every dt
    above the explicit stability estimate.
    """
    scenario = scenario_from_config(cfg)
    mesh = mesh_from_config(cfg, scenario)
    problem = build_problem(scenario, mesh, cfg.discretization.N, cfg.discretization.alpha)
    limit = stable_dt(cfg, problem, safety=1.0)
    T = cfg.time.T_final
    records, rates, warnings = [], {}, []
    for dt in cfg.study.dts:
        if dt > limit:
            msg = f"dt={dt!r} exceeds the stability estimate {limit:.6g}"
            warnings.append(msg)
            logger.warning(msg)
    ratio = cfg.study.reference_ratio

    def simulate(dt, scheme, mode):
        try:
            return problem.simulate(T, dt, scheme)
        except BlowUpError as exc:
            raise BlowUpError(f"{mode} with dt={dt!r}: {exc}", exc.time_index) from exc

    for mode in cfg.study.modes:
        scheme = scheme_from_config(cfg, mode)
        group = []
        for dt in cfg.study.dts:
            state, _, dt_used = simulate(dt, scheme, mode)
            if ratio:
                fine, _, dt_fine = simulate(dt_used / ratio, scheme, mode)
                # the coarse Hz station (M + 1/2) dt is (ratio - 1) / 2 fine steps past T
                fine_h = fine
                for _ in range((ratio - 1) // 2):
                    fine_h, _ = step(problem.op, fine_h, dt_fine, scheme, problem.sources)
                group.append(_self_convergence_record(problem, state, dt_used, ratio,
                                                      fine, fine_h.Hz, mode))
            else:
                group.append(problem.error_record(state, dt_used, mode))
        records.extend(group)
        for fld, est in _fit_all(group, "dt").items():
            rates[mode, fld] = est
    return records, rates, warnings


def _self_convergence_record(problem, coarse, dt, ratio, fine, fine_Hz, mode):
    """Temporal error of ``coarse`` measured against the same scheme run at dt / ratio.

    ``fine`` is the fine state at the final time and ``fine_Hz`` the fine
    magnetic field at the coarse station (M + 1/2) dt, which is a fine half
    step because the ratio is odd. All fields are compared at equal times, so
    the spatial error cancels.
    """
    diff = FieldState(coarse.Ex - fine.Ex, coarse.Ey - fine.Ey, coarse.Hz - fine_Hz)
    zero = lambda x, y, t: (0.0 * x, 0.0 * x, 0.0 * x)
    errs = l2_error(problem.disc, diff, zero, 0.0, 0.0)
    return ErrorRecord(float(problem.mesh.h.max()), dt, problem.disc.order, problem.op.alpha,
                       f"{mode} vs dt/{ratio}", errs["Ex"], errs["Ey"], errs["Hz"])


def cmd_convergence_time(cfg):
    records, rates, warnings = convergence_time(cfg)
    out = prepare_output(cfg)
    write_error_csv(records, out / "errors.csv")
    write_rates_csv(rates, out / "rates.csv")
    with open(out / "warnings.txt", "w") as fh:
        fh.writelines(w + "\n" for w in warnings)
    for (mode, fld), est in rates.items():
        print(f"{mode} {fld}: slope {est.slope:.3f}")
    return records, rates, warnings


def scatter_problem(cfg):
    scenario = scenario_from_config(cfg)
    mesh = mesh_from_config(cfg, scenario)
    return build_problem(scenario, mesh, cfg.discretization.N, cfg.discretization.alpha)


def simulate_scatter(cfg, problem=None, on_snapshot=None, on_step=None):
    """Run a scattering scenario; returns (problem, final state, dt).

    ``on_snapshot(state, t)`` is called every ``output.snapshot_stride``
    steps and at the end; ``on_step(state, t)`` after every step.
    """
    if problem is None:
        problem = scatter_problem(cfg)
    dt = time_step(cfg, problem)
    limit = stable_dt(cfg, problem, safety=1.0)
    scheme = scheme_from_config(cfg)
    stride = cfg.output.snapshot_stride
    steps = max(int(round(cfg.time.T_final / dt)), 1)
    dt_aligned = cfg.time.T_final / steps

    def observer(state, report):
        t = state.m * dt_aligned
        if on_step is not None:
            on_step(state, t)
        if on_snapshot is not None and ((stride and state.m % stride == 0) or state.m == steps):
            on_snapshot(state, t)

    final, _, dt_used = problem.simulate(cfg.time.T_final, dt, scheme, observers=(observer,),
                                         dt_limit=limit)
    return problem, final, dt_used


def cmd_scatter(cfg):
    out = prepare_output(cfg)
    problem = scatter_problem(cfg)
    disc = problem.disc
    probes = [tuple(p) for p in cfg.output.probes]
    probe = PointProbe(disc, probes) if probes else None
    cols = ["max_intensity"] + [f"I({x:g},{y:g})" for x, y in probes]
    peak = {"value": 0.0, "time": 0.0}

    def on_snapshot(state, t):
        I = intensity(state)
        if cfg.output.vtk:
            write_vtk(out / f"snapshot_{state.m:06d}.vtk", disc,
                      {"Ex": state.Ex, "Ey": state.Ey, "Hz": state.Hz, "intensity": I},
                      title=f"scattered field t={t:.6g}")
        if cfg.output.csv:
            write_nodal_csv(out / f"snapshot_{state.m:06d}.csv", disc, {"intensity": I})

    with TimeSeriesWriter(out / "time_series.csv", cols) as series:
        def on_step(state, t):
            I = intensity(state)
            m = float(I.max())
            if m > peak["value"]:
                peak.update(value=m, time=t)
            series.write(t, [m] + (list(probe(I)) if probe is not None else []))

        _, final, dt = simulate_scatter(cfg, problem, on_snapshot, on_step)

    I = intensity(final)
    summary = {
        "scenario": cfg.scenario.name,
        "elements": problem.mesh.num_elements,
        "dt": dt,
        "steps": final.m,
        "max_intensity_over_run": peak["value"],
        "time_of_max": peak["time"],
        "final_max_intensity": float(I.max()),
        "final_max_inside_scatterers": region_max(disc, I, problem.scenario.inside),
    }
    _write_summary(out / "summary.yaml", summary)
    for k, v in summary.items():
        print(f"{k}: {v}")
    return summary


def cmd_run(cfg):
    out = prepare_output(cfg)
    scenario = scenario_from_config(cfg)
    mesh = mesh_from_config(cfg, scenario)
    problem = build_problem(scenario, mesh, cfg.discretization.N, cfg.discretization.alpha)
    dt = time_step(cfg, problem)
    limit = stable_dt(cfg, problem, safety=1.0)
    scheme = scheme_from_config(cfg)
    stride = cfg.output.snapshot_stride
    steps = int(round(cfg.time.T_final / dt))
    dt_aligned = cfg.time.T_final / max(steps, 1)
    disc = problem.disc

    with TimeSeriesWriter(out / "energy.csv", ["energy", "iterations"]) as energy:
        def observer(state, report):
            energy.write(state.m * dt_aligned, [problem.op.energy(state), report.iterations])
            if stride and cfg.output.vtk and (state.m % stride == 0 or state.m == steps):
                write_vtk(out / f"snapshot_{state.m:06d}.vtk", disc,
                          {"Ex": state.Ex, "Ey": state.Ey, "Hz": state.Hz,
                           "intensity": intensity(state)})

        final, reports, dt = problem.simulate(cfg.time.T_final, dt, scheme,
                                              observers=(observer,), dt_limit=limit)
    if cfg.output.vtk:
        write_vtk(out / "final.vtk", disc, {"Ex": final.Ex, "Ey": final.Ey, "Hz": final.Hz,
                                            "intensity": intensity(final)})
    summary = {"scenario": cfg.scenario.name, "elements": mesh.num_elements, "dt": dt,
               "steps": final.m, "final_energy": problem.op.energy(final),
               "max_iterations_used": max((r.iterations for r in reports), default=0)}
    if getattr(scenario, "has_exact", False):
        rec = problem.error_record(final, dt, scheme.mode)
        write_error_csv([rec], out / "errors.csv")
        summary.update({f"err_{f}": rec.error(f) for f in FIELDS})
    _write_summary(out / "summary.yaml", summary)
    for k, v in summary.items():
        print(f"{k}: {v}")
    return summary

# }}}


HANDLERS = {
    "mesh-info": cmd_mesh_info,
    "convergence-space": cmd_convergence_space,
    "convergence-time": cmd_convergence_time,
    "scatter": cmd_scatter,
    "run": cmd_run,
}


def build_parser():
    p = argparse.ArgumentParser(prog="leapdg",
                                description="Iterative leap-frog DG solver for 2D TE Maxwell.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--preset", help="packaged config to start from, e.g. scatter_one_circle")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config entry, e.g. scheme.dt=1e-3")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.command, args.config, args.overrides, args.preset)
        HANDLERS[args.command](cfg)
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except BlowUpError as exc:
        print(f"error: numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (ConfigError, LeapDGError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
