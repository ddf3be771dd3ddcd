"""Run configuration: YAML file, environment overrides and ``--set`` flags.

Environment variables ``TWISTWAVE_<SECTION>__<KEY>=value`` override nested
keys (double underscore separates levels, names are lower-cased); values are
parsed as YAML scalars. ``--set grids.h=0.005`` does the same from the
command line and takes precedence over the environment.
"""

from __future__ import annotations

import copy
import math
import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from .errors import ConfigError
from .geometry import CrossSection, from_config
from .onedim import TwistProfile, profile_from_config

ENV_PREFIX = "TWISTWAVE_"
WORKFLOWS = ("bands", "groundstate", "count1d", "predict", "verify", "validate3d", "converge")


@dataclass
class LambdaGrid:
    max: float = 1e-4
    min: float = 1e-6
    per_decade: int = 16


@dataclass
class TubeGrid:
    X: float = 400.0
    h_t: float = 1.0 / 12.0
    h_3: float = 0.4
    lambdas: list = field(default_factory=lambda: [0.02, 0.01, 0.005, 0.003, 0.002, 0.0015,
                                                   0.001, 0.0007, 0.0005])
    cap: int = 300_000


@dataclass
class Grids:
    h: float = 0.01
    p_max: float = 2.0
    n_p: int = 41
    J: int = 2
    dp: float = 0.05
    mass_h: float | None = None  # spacing for the effective mass, defaults to h
    X: float = 10.0
    dx: float | None = None
    levels: int = 3  # refinement levels for `converge`
    lam: LambdaGrid = field(default_factory=LambdaGrid)
    tube: TubeGrid = field(default_factory=TubeGrid)


@dataclass
class Tolerances:
    eig: float = 1e-10
    disk: float = 1e-4
    disk_margin: float = 0.5
    band_safety: float = 3.0
    slope: float = 0.05
    level: float = 0.15
    log: float = 0.20
    agree: int = 1
    agree_points: int = 3


@dataclass
class Effective:
    """Optional overrides that bypass the cross-section computations."""

    mu: float | None = None
    twist_norm_sq: float | None = None


@dataclass
class RunConfig:
    workflow: str = "verify"
    domain: dict = field(default_factory=lambda: {"kind": "rectangle", "w1": 0.5, "w2": 0.5})
    beta: float = 1.0
    profile: dict = field(default_factory=lambda: {"form": "power_tail", "alpha": 1.0, "L": 1.0, "a": 1.0})
    grids: Grids = field(default_factory=Grids)
    tolerances: Tolerances = field(default_factory=Tolerances)
    effective: Effective = field(default_factory=Effective)
    dump_potential: bool = False
    out: str = "results"
    seed: int = 0
    workers: int = 1

    def cross_section(self) -> CrossSection:
        return from_config(self.domain)

    def twist_profile(self) -> TwistProfile:
        return profile_from_config(self.profile)

    def to_dict(self) -> dict:
        return asdict(self)


_NESTED = {"grids": Grids, "tolerances": Tolerances, "effective": Effective,
           "lam": LambdaGrid, "tube": TubeGrid}


def _build(cls, data, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"section {path or '<root>'} must be a mapping")
    names = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"unknown keys in {path or '<root>'}: {unknown}")
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED:
            kwargs[key] = _build(_NESTED[key], value, f"{path}{key}.")
        else:
            kwargs[key] = value
    return cls(**kwargs)


def _number(value, name, *, positive=False, nonneg=False, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, str):
        # YAML 1.1 reads exponent literals such as 1e-4 as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{name} must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ConfigError(f"{name} must be non-negative, got {value!r}")
    return int(value) if integer else float(value)


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.workflow not in WORKFLOWS:
        raise ConfigError(f"unknown workflow {cfg.workflow!r}; choose from {WORKFLOWS}")
    cfg.beta = _number(cfg.beta, "beta", nonneg=True)
    cfg.seed = _number(cfg.seed, "seed", nonneg=True, integer=True)
    cfg.workers = _number(cfg.workers, "workers", positive=True, integer=True)
    g = cfg.grids
    g.h = _number(g.h, "grids.h", positive=True)
    g.mass_h = _number(g.mass_h, "grids.mass_h", positive=True, allow_none=True)
    g.p_max = _number(g.p_max, "grids.p_max", positive=True)
    g.n_p = _number(g.n_p, "grids.n_p", positive=True, integer=True)
    if g.n_p % 2 == 0 or g.n_p < 3:
        raise ConfigError("grids.n_p must be odd and at least 3")
    g.J = _number(g.J, "grids.J", positive=True, integer=True)
    g.dp = _number(g.dp, "grids.dp", positive=True)
    g.X = _number(g.X, "grids.X", positive=True)
    g.dx = _number(g.dx, "grids.dx", positive=True, allow_none=True)
    g.levels = _number(g.levels, "grids.levels", positive=True, integer=True)
    g.lam.max = _number(g.lam.max, "grids.lam.max", positive=True)
    g.lam.min = _number(g.lam.min, "grids.lam.min", positive=True)
    g.lam.per_decade = _number(g.lam.per_decade, "grids.lam.per_decade", positive=True, integer=True)
    if not g.lam.min < g.lam.max:
        raise ConfigError("grids.lam.min must be below grids.lam.max")
    t = g.tube
    t.X = _number(t.X, "grids.tube.X", positive=True)
    t.h_t = _number(t.h_t, "grids.tube.h_t", positive=True)
    t.h_3 = _number(t.h_3, "grids.tube.h_3", positive=True)
    t.cap = _number(t.cap, "grids.tube.cap", positive=True, integer=True)
    if not isinstance(t.lambdas, (list, tuple)) or not t.lambdas:
        raise ConfigError("grids.tube.lambdas must be a non-empty list")
    t.lambdas = [_number(v, "grids.tube.lambdas[]", positive=True) for v in t.lambdas]
    tol = cfg.tolerances
    for f in fields(Tolerances):
        integer = f.name in ("agree", "agree_points")
        setattr(tol, f.name, _number(getattr(tol, f.name), f"tolerances.{f.name}",
                                     positive=f.name != "agree", nonneg=True, integer=integer))
    e = cfg.effective
    e.mu = _number(e.mu, "effective.mu", positive=True, allow_none=True)
    e.twist_norm_sq = _number(e.twist_norm_sq, "effective.twist_norm_sq", nonneg=True, allow_none=True)
    if not isinstance(cfg.dump_potential, bool):
        raise ConfigError("dump_potential must be a boolean")
    cfg.out = str(cfg.out)
    # building the objects validates their parameters (alpha > 0, lengths > 0, ...)
    cfg.cross_section()
    cfg.twist_profile()
    return cfg


def _set_path(tree: dict, dotted: str, value):
    keys = [k for k in dotted.split(".") if k]
    if not keys:
        raise ConfigError(f"empty override key {dotted!r}")
    node = tree
    for k in keys[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override {dotted!r} descends into a non-mapping")
        node = nxt
    node[keys[-1]] = value


def _parse_scalar(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {text!r}: {exc}") from None


def env_overrides(environ=None) -> list[tuple[str, object]]:
    environ = os.environ if environ is None else environ
    out = []
    for name in sorted(environ):
        if name.startswith(ENV_PREFIX):
            path = name[len(ENV_PREFIX):].lower().replace("__", ".")
            out.append((path, _parse_scalar(environ[name])))
    return out


def load_config(path=None, overrides=(), environ=None, use_env: bool = True) -> RunConfig:
    """Defaults <- YAML file <- environment <- ``key=value`` overrides, then validated."""
    tree: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from None
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError("config file must contain a mapping")
        tree = copy.deepcopy(loaded or {})
    if use_env:
        for key, value in env_overrides(environ):
            _set_path(tree, key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        _set_path(tree, key.strip(), _parse_scalar(text))
    # a domain/profile section naming its kind/form replaces the default
    # wholesale; otherwise its keys are merged into the default
    defaults = RunConfig()
    for key, tag in (("domain", "kind"), ("profile", "form")):
        section = tree.get(key)
        if isinstance(section, dict) and tag not in section:
            tree[key] = {**getattr(defaults, key), **section}
    try:
        cfg = _build(RunConfig, tree)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return validate(cfg)
