"""
Experiment configuration files (YAML mappings).

Example::

    equation: lse          # lse | nls
    seed: 0
    grid: {L: 20.0, N: 256, boundary: periodic}
    physics: {hbar: 1.0, mass: 1.0, potential: harmonic, omega: 1.0}
    initial: {kind: gaussian, center: 1.0, width: 1.0}
    integrator: {scheme: strang-split, dt: 1.0e-3, steps: 10000, stride: 10}
    monitors: [H0, H1, H2]
    thresholds: {H0: 1.0e-11}
    output: {dir: out}

Every key is optional; unknown keys are rejected. Relative file paths are
resolved against the directory of the config file.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .dynamics import SCHEMES, IntegratorSpec, NlsParams
from .functionals import FunctionalSpec, functional_by_name
from .grid import BOUNDARIES, Grid1D, PhasePair
from .structures import SchrodingerOperator


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    L: float = 20.0
    N: int = 256
    boundary: str = "periodic"
    fd_order: int = 8


@dataclass
class PhysicsConfig:
    hbar: float = 1.0
    mass: float = 1.0
    b: float = 0.0
    potential: str = "zero"  # zero | harmonic | tabulated
    omega: float = 1.0
    potential_file: str | None = None


@dataclass
class InitialConfig:
    kind: str = "gaussian"  # gaussian | plane-wave | sech | file
    center: float = 0.0
    width: float = 1.0
    momentum: float = 0.0
    k: float = 1.0
    amplitude: float = 1.0
    phase_slope: float = 0.0
    file: str | None = None
    normalize: bool | None = None


@dataclass
class IntegratorConfig:
    scheme: str = "strang-split"
    dt: float = 1e-3
    steps: int = 1000
    stride: int = 10


@dataclass
class CheckConfig:
    states: int = 20
    jacobi_N: int = 32
    jacobi_L: float = 12.0


@dataclass
class OutputConfig:
    dir: str = "out"
    csv: str = "trajectory.csv"
    json: str = "report.json"


@dataclass
class ExperimentConfig:
    equation: str = "lse"
    seed: int = 0
    grid: GridConfig = field(default_factory=GridConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    monitors: list = field(default_factory=lambda: ["H0"])
    thresholds: dict = field(default_factory=dict)
    check: CheckConfig = field(default_factory=CheckConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    base_dir: str = field(default=".", repr=False)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("base_dir")
        return out

    # builders -------------------------------------------------------------

    def build_grid(self) -> Grid1D:
        g = self.grid
        return Grid1D(g.L, g.N, g.boundary, g.fd_order)

    def _path(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def build_operator(self, grid: Grid1D | None = None) -> SchrodingerOperator:
        grid = grid or self.build_grid()
        ph = self.physics
        if ph.potential == "zero":
            pot = np.zeros(grid.N)
        elif ph.potential == "harmonic":
            pot = 0.5 * ph.mass * ph.omega**2 * grid.x**2
        else:
            data = np.loadtxt(self._path(ph.potential_file), ndmin=2)
            if data.shape[1] != 2 or len(data) < 2:
                raise ConfigError(f"physics.potential_file: expected two columns x, U "
                                  f"and at least two rows, got shape {data.shape}")
            pot = np.interp(grid.x, data[:, 0], data[:, 1])
        return SchrodingerOperator(grid, pot, ph.hbar, ph.mass)

    def build_nls(self) -> NlsParams:
        ph = self.physics
        return NlsParams(ph.hbar, ph.mass, ph.b)

    def build_state(self, grid: Grid1D | None = None) -> PhasePair:
        grid = grid or self.build_grid()
        ic = self.initial
        x = grid.x
        if ic.kind == "gaussian":
            psi = np.exp(-0.5 * ((x - ic.center) / ic.width) ** 2 + 1j * ic.momentum * x)
        elif ic.kind == "plane-wave":
            psi = np.exp(1j * ic.k * x)
        elif ic.kind == "sech":
            psi = ic.amplitude / np.cosh((x - ic.center) / ic.width) \
                * np.exp(1j * ic.phase_slope * x)
        else:
            data = np.loadtxt(self._path(ic.file), ndmin=2)
            if data.shape[1] != 3 or len(data) < 2:
                raise ConfigError(f"initial.file: expected three columns x, Re psi, Im psi "
                                  f"and at least two rows, got shape {data.shape}")
            psi = np.interp(x, data[:, 0], data[:, 1]) + 1j * np.interp(x, data[:, 0], data[:, 2])
        u = PhasePair.from_psi(grid, psi)
        normalize = ic.normalize if ic.normalize is not None else ic.kind in ("gaussian", "plane-wave")
        if normalize:
            u = u * (ic.amplitude / u.norm())
        return u

    def build_integrator(self) -> IntegratorSpec:
        it = self.integrator
        return IntegratorSpec(it.scheme, it.dt, it.steps, it.stride)

    def build_monitors(self, grid: Grid1D | None = None) -> list[FunctionalSpec]:
        ph = self.physics
        op = self.build_operator(grid) if self.equation == "lse" else None
        return [functional_by_name(name, op=op, hbar=ph.hbar, mass=ph.mass, b=ph.b)
                for name in self.monitors]


_SECTIONS = {
    "grid": GridConfig,
    "physics": PhysicsConfig,
    "initial": InitialConfig,
    "integrator": IntegratorConfig,
    "check": CheckConfig,
    "output": OutputConfig,
}
_CHOICES = {
    "equation": ("lse", "nls"),
    "grid.boundary": BOUNDARIES,
    "physics.potential": ("zero", "harmonic", "tabulated"),
    "initial.kind": ("gaussian", "plane-wave", "sech", "file"),
    "integrator.scheme": SCHEMES,
}


def _coerce(path: str, value, default):
    kind = type(default)
    if value is None:
        if default is None:
            return None
        raise ConfigError(f"{path}: value required")
    if default is None:
        if path.endswith("normalize"):
            if not isinstance(value, bool):
                raise ConfigError(f"{path}: expected true/false, got {value!r}")
            return value
        return str(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if kind is float:
        if isinstance(value, bool):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _build_section(name: str, cls, raw) -> object:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, value in raw.items():
        if key not in fields:
            raise ConfigError(f"{name}.{key}: unknown key")
        kwargs[key] = _coerce(f"{name}.{key}", value, getattr(defaults, key))
    return cls(**kwargs)


def config_from_dict(raw: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    kwargs: dict = {"base_dir": str(base_dir)}
    for key, value in raw.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(key, _SECTIONS[key], value)
        elif key == "equation":
            kwargs[key] = _coerce(key, value, "lse")
        elif key == "seed":
            kwargs[key] = _coerce(key, value, 0)
        elif key == "monitors":
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise ConfigError("monitors: expected a list of functional names")
            kwargs[key] = list(value)
        elif key == "thresholds":
            if not isinstance(value, dict):
                raise ConfigError("thresholds: expected a mapping name -> max drift")
            kwargs[key] = {str(k): _coerce(f"thresholds.{k}", v, 0.0) for k, v in value.items()}
        else:
            raise ConfigError(f"{key}: unknown key")
    cfg = ExperimentConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    for path, choices in _CHOICES.items():
        obj = cfg
        for part in path.split("."):
            obj = getattr(obj, part)
        if obj not in choices:
            raise ConfigError(f"{path}: must be one of {', '.join(choices)}, got {obj!r}")
    g = cfg.grid
    if g.N < 8 or g.N % 2:
        raise ConfigError(f"grid.N: must be even and >= 8, got {g.N}")
    if g.L <= 0:
        raise ConfigError(f"grid.L: must be positive, got {g.L}")
    if g.fd_order < 4 or g.fd_order % 2:
        raise ConfigError(f"grid.fd_order: must be an even integer >= 4, got {g.fd_order}")
    ph = cfg.physics
    if ph.hbar <= 0 or ph.mass <= 0:
        raise ConfigError("physics.hbar and physics.mass must be positive")
    if ph.potential == "tabulated":
        if not ph.potential_file:
            raise ConfigError("physics.potential_file: required for a tabulated potential")
        if not cfg._path(ph.potential_file).is_file():
            raise ConfigError(f"physics.potential_file: {ph.potential_file} does not exist")
    ic = cfg.initial
    if ic.kind == "file":
        if not ic.file:
            raise ConfigError("initial.file: required when initial.kind is file")
        if not cfg._path(ic.file).is_file():
            raise ConfigError(f"initial.file: {ic.file} does not exist")
    if ic.width <= 0:
        raise ConfigError(f"initial.width: must be positive, got {ic.width}")
    it = cfg.integrator
    if it.dt <= 0:
        raise ConfigError(f"integrator.dt: must be positive, got {it.dt}")
    if it.steps < 1:
        raise ConfigError(f"integrator.steps: must be >= 1, got {it.steps}")
    if it.stride < 1:
        raise ConfigError(f"integrator.stride: must be >= 1, got {it.stride}")
    if it.scheme == "strang-split" and g.boundary != "periodic":
        raise ConfigError("integrator.scheme: strang-split needs grid.boundary periodic")
    if cfg.check.states < 1:
        raise ConfigError("check.states: must be >= 1")
    allowed = {"K-1", "Km1", "K0", "K1"}
    for name in cfg.monitors:
        is_h = name.startswith("H") and name[1:].isdigit()
        if not (name in allowed or (is_h and cfg.equation == "lse")):
            raise ConfigError(f"monitors: {name!r} is not a valid functional for {cfg.equation}")
    if len(set(cfg.monitors)) != len(cfg.monitors):
        raise ConfigError("monitors: duplicate names")
    for name, value in cfg.thresholds.items():
        if name not in cfg.monitors:
            raise ConfigError(f"thresholds.{name}: not a monitored functional")
        if value <= 0:
            raise ConfigError(f"thresholds.{name}: must be positive")


def parse_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "unknown line"
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{path}: parse error at {where}: {problem}") from None
    return config_from_dict(raw, path.parent)
