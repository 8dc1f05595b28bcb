"""Run configuration: YAML files, ``key=value`` overrides and validation.

A config file is a nested mapping with the sections ``scenario``, ``mesh``,
``discretization``, ``scheme``, ``stability``, ``time``, ``study`` and
``output``. Every key has a default; command-specific defaults are applied
before the file, and ``--set section.key=value`` overrides after it.
"""

import copy
import re
from importlib import resources
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import yaml

from .errors import ConfigError
from .timestep import MODES

COMMANDS = ("mesh-info", "convergence-space", "convergence-time", "scatter", "run")
SCENARIOS = ("manufactured", "one_circle", "three_circles", "none")
MESH_FORMATS = ("simple_ascii", "gmsh22_ascii")


@dataclass
class ScenarioSection:
    name: str = "manufactured"
    eps_inside: float = 1.2
    eps_background: float = 1.0
    mu: float = 1.0
    mu_background: float = 1.0
    wavenumber: float = 10.0
    circles: Optional[List[List[float]]] = None


@dataclass
class MeshSection:
    source: str = "structured"
    n_per_side: int = 16
    bounds: List[float] = field(default_factory=lambda: [-1.0, 1.0])
    path: Optional[str] = None
    format: str = "simple_ascii"


@dataclass
class DiscretizationSection:
    N: int = 2
    alpha: int = 1


@dataclass
class SchemeSection:
    mode: str = "predictor_corrector"
    dt: Optional[float] = None
    cfl_safety: Optional[float] = None
    tol: float = 1e-10
    max_iterations: int = 50
    strict: bool = True


@dataclass
class StabilitySection:
    C_inv: float = 1.0
    C_tau: float = 1.0


@dataclass
class TimeSection:
    T_final: float = 1.0


@dataclass
class StudySection:
    resolutions: List[int] = field(default_factory=lambda: [8, 16, 32])
    dts: List[float] = field(default_factory=list)
    modes: List[str] = field(default_factory=lambda: ["explicit", "predictor_corrector"])
    alphas: List[int] = field(default_factory=lambda: [0, 1])
    # convergence-time: 0 compares with the exact solution, an odd r >= 3 with a run at dt / r
    reference_ratio: int = 0


@dataclass
class OutputSection:
    directory: str = "output"
    snapshot_stride: int = 0
    probes: List[List[float]] = field(default_factory=list)
    vtk: bool = True
    csv: bool = True


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot, such as 1e-3."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _load_yaml(text):
    return yaml.load(text, Loader=_Loader)


SECTIONS = {
    "scenario": ScenarioSection,
    "mesh": MeshSection,
    "discretization": DiscretizationSection,
    "scheme": SchemeSection,
    "stability": StabilitySection,
    "time": TimeSection,
    "study": StudySection,
    "output": OutputSection,
}

# default settings for the scattering experiment
COMMAND_DEFAULTS = {
    "scatter": {
        "scenario": {"name": "one_circle"},
        "mesh": {"n_per_side": 40},
        "discretization": {"N": 4, "alpha": 0},
        "scheme": {"mode": "predictor_corrector", "dt": 0.002},
        "time": {"T_final": 0.8},
        "output": {"snapshot_stride": 50,
                   "probes": [[0.0, 0.0], [0.0, 0.5], [-0.85, -0.85]]},
    },
}


@dataclass
class RunConfig:
    command: str
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    mesh: MeshSection = field(default_factory=MeshSection)
    discretization: DiscretizationSection = field(default_factory=DiscretizationSection)
    scheme: SchemeSection = field(default_factory=SchemeSection)
    stability: StabilitySection = field(default_factory=StabilitySection)
    time: TimeSection = field(default_factory=TimeSection)
    study: StudySection = field(default_factory=StudySection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self):
        return asdict(self)

    def dump(self, path):
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False, default_flow_style=None)
        return Path(path)


def _merge(base, update, where=""):
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value, f"{where}{key}.")
        else:
            base[key] = value
    return base


def parse_override(text):
    """``section.key=value`` into a nested dict; the value is parsed as YAML."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = _load_yaml(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value in override {text!r}: {exc}") from None
    out = value
    for p in reversed(parts):
        out = {p: out}
    return out


def read_config_file(path):
    try:
        with open(path) as fh:
            data = _load_yaml(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def build_config(command, data=None, overrides=()):
    """Merge defaults, file contents and overrides, then validate for ``command``."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
    raw = {name: asdict(cls()) for name, cls in SECTIONS.items()}
    _merge(raw, copy.deepcopy(COMMAND_DEFAULTS.get(command, {})))
    data = dict(data or {})
    file_command = data.pop("command", None)
    if file_command is not None and file_command != command:
        raise ConfigError(f"config is for command {file_command!r}, not {command!r}")
    sources = [data] + [parse_override(o) for o in overrides]
    user_scheme = set()
    for src in sources:
        if isinstance(src.get("scheme"), dict):
            user_scheme |= set(src["scheme"])
    # a user-given dt or cfl_safety replaces a command default for the other
    for key, other in (("dt", "cfl_safety"), ("cfl_safety", "dt")):
        if key in user_scheme and other not in user_scheme:
            raw["scheme"][other] = None
    for src in sources:
        unknown = set(src) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
        for name, values in src.items():
            if not isinstance(values, dict):
                raise ConfigError(f"section {name!r} must be a mapping")
            allowed = {f.name for f in fields(SECTIONS[name])}
            bad = set(values) - allowed
            if bad:
                raise ConfigError(f"unknown key(s) in section {name!r}: {sorted(bad)}")
        _merge(raw, src)
    sections = {name: SECTIONS[name](**raw[name]) for name in SECTIONS}
    cfg = RunConfig(command, **sections)
    validate(cfg)
    return cfg


def preset_names():
    root = resources.files("leapdg") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def preset_path(name):
    """Path of a packaged preset config."""
    path = resources.files("leapdg") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; choose from {preset_names()}")
    return Path(str(path))


def load_config(command, path=None, overrides=(), preset=None):
    """Defaults, then the preset, then the config file, then the overrides."""
    data = {}
    if preset is not None:
        data = read_config_file(preset_path(preset))
    if path is not None:
        file_data = read_config_file(path)
        if data and file_data.get("command", data.get("command")) != data.get("command"):
            raise ConfigError("preset and config file are for different commands")
        _merge(data, file_data)
    return build_config(command, data, overrides)


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def validate(cfg):
    """Check field types and the fields each command needs before any compute."""
    sc, me, di, sh = cfg.scenario, cfg.mesh, cfg.discretization, cfg.scheme
    _require(sc.name in SCENARIOS, f"scenario.name must be one of {SCENARIOS}, got {sc.name!r}")
    for key in ("eps_inside", "eps_background", "mu", "mu_background", "wavenumber"):
        v = getattr(sc, key)
        _require(_is_number(v) and v > 0, f"scenario.{key} must be a positive number, got {v!r}")
    if sc.circles is not None:
        _require(all(isinstance(c, list) and len(c) == 3 and all(map(_is_number, c))
                     for c in sc.circles),
                 "scenario.circles must be a list of [cx, cy, radius]")

    _require(me.source in ("structured", "file"),
             f"mesh.source must be 'structured' or 'file', got {me.source!r}")
    if me.source == "structured":
        _require(isinstance(me.n_per_side, int) and me.n_per_side >= 1,
                 f"mesh.n_per_side must be a positive integer, got {me.n_per_side!r}")
        _require(isinstance(me.bounds, list) and len(me.bounds) == 2
                 and all(map(_is_number, me.bounds)) and me.bounds[0] < me.bounds[1],
                 f"mesh.bounds must be [lo, hi] with lo < hi, got {me.bounds!r}")
    else:
        _require(isinstance(me.path, str) and me.path, "mesh.path is required for a file mesh")
        _require(me.format in MESH_FORMATS,
                 f"mesh.format must be one of {MESH_FORMATS}, got {me.format!r}")

    _require(isinstance(di.N, int) and 1 <= di.N <= 12,
             f"discretization.N must be an integer in [1, 12], got {di.N!r}")
    _require(di.alpha in (0, 1), f"discretization.alpha must be 0 or 1, got {di.alpha!r}")

    _require(sh.mode in MODES, f"scheme.mode must be one of {MODES}, got {sh.mode!r}")
    _require(not (sh.dt is not None and sh.cfl_safety is not None),
             "scheme.dt and scheme.cfl_safety are mutually exclusive")
    _require(sh.dt is None or (_is_number(sh.dt) and sh.dt > 0),
             f"scheme.dt must be positive, got {sh.dt!r}")
    _require(sh.cfl_safety is None or (_is_number(sh.cfl_safety) and sh.cfl_safety > 0),
             f"scheme.cfl_safety must be positive, got {sh.cfl_safety!r}")
    _require(_is_number(sh.tol) and sh.tol > 0, f"scheme.tol must be positive, got {sh.tol!r}")
    _require(isinstance(sh.max_iterations, int) and sh.max_iterations >= 1,
             "scheme.max_iterations must be a positive integer")
    st = cfg.stability
    _require(_is_number(st.C_inv) and st.C_inv > 0 and _is_number(st.C_tau) and st.C_tau > 0,
             "stability.C_inv and stability.C_tau must be positive")
    _require(_is_number(cfg.time.T_final) and cfg.time.T_final > 0,
             f"time.T_final must be positive, got {cfg.time.T_final!r}")

    out = cfg.output
    _require(isinstance(out.snapshot_stride, int) and out.snapshot_stride >= 0,
             "output.snapshot_stride must be a non-negative integer")
    _require(all(isinstance(p, list) and len(p) == 2 and all(map(_is_number, p))
                 for p in out.probes), "output.probes must be a list of [x, y] points")

    study = cfg.study
    if cfg.command == "convergence-space":
        _require(sc.name == "manufactured", "convergence-space needs the manufactured scenario")
        _require(me.source == "structured", "convergence-space needs structured meshes")
        res = study.resolutions
        _require(isinstance(res, list) and all(isinstance(n, int) and n >= 1 for n in res),
                 "study.resolutions must be a list of positive integers")
        _require(len(set(res)) >= 3,
                 f"a rate needs at least 3 distinct resolutions, got {res!r}")
        _require(study.alphas and all(a in (0, 1) for a in study.alphas),
                 "study.alphas must be a non-empty list of 0/1")
    elif cfg.command == "convergence-time":
        _require(sc.name == "manufactured", "convergence-time needs the manufactured scenario")
        dts = study.dts
        _require(isinstance(dts, list) and all(_is_number(d) and d > 0 for d in dts),
                 "study.dts must be a list of positive numbers")
        _require(len(set(dts)) >= 3, f"a rate needs at least 3 distinct dt values, got {dts!r}")
        _require(study.modes and all(m in MODES for m in study.modes),
                 f"study.modes must be a non-empty subset of {MODES}")
        r = study.reference_ratio
        _require(isinstance(r, int) and not isinstance(r, bool) and (r == 0 or (r >= 3 and r % 2)),
                 f"study.reference_ratio must be 0 or an odd integer >= 3, got {r!r}")
    elif cfg.command == "scatter":
        _require(sc.name in ("one_circle", "three_circles", "none"),
                 f"scatter needs a scattering scenario, got {sc.name!r}")
