"""Experiment configuration: INI-style files, strict validation, defaults.

Unknown sections or keys are hard errors so typos never silently fall back
to defaults. Blank values mean "unset" for the optional keys.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .env import DEFAULT_CLEARANCE, DEFAULT_P_FAIL, validate_reward_shaping
from .eval import DEFAULT_ACTIONS_PER_GROUP, DEFAULT_PE_GRID, DEFAULT_REPS
from .gripper import GripperParams
from .learner import (
    DEFAULT_EPS_ANNEAL,
    DEFAULT_EPS_END,
    DEFAULT_EPS_START,
    DEFAULT_GAMMA,
    DEFAULT_LR,
    DEFAULT_SYNC_PERIOD,
    VARIANTS,
)
from .scene import AFFINITIES, DEFAULT_CATALOG, ObjectTemplate

POLICY_NAMES = tuple(sorted(VARIANTS)) + ("oracle",)


@dataclass
class ExperimentConfig:
    gripper: GripperParams = field(default_factory=GripperParams)
    # scene
    workspace_side: float = 0.25
    n_objects: int = 10
    clutter: str = "light"
    min_separation: float = 0.01
    catalog_path: str = ""
    # env
    p_fail: float = DEFAULT_P_FAIL
    clearance_threshold: float = DEFAULT_CLEARANCE
    max_steps: int | None = None
    resolution: int = 64
    # learner
    gamma: float = DEFAULT_GAMMA
    lr: float = DEFAULT_LR
    eps_start: float = DEFAULT_EPS_START
    eps_end: float = DEFAULT_EPS_END
    eps_anneal_steps: int = DEFAULT_EPS_ANNEAL
    sync_period: int = DEFAULT_SYNC_PERIOD
    replay: bool = False
    replay_capacity: int = 2048
    steps: int = 20000
    train_pe: float = 0.5
    continual_update: bool = True
    # sweep
    pe_grid: tuple = DEFAULT_PE_GRID
    actions_per_group: int | None = DEFAULT_ACTIONS_PER_GROUP
    episodes_per_group: int | None = None
    reps: int = DEFAULT_REPS
    # run
    seed: int = 0
    policy: str = "eses_drl"
    out_dir: str = "out"
    checkpoint: str = ""

    def load_catalog(self):
        if not self.catalog_path:
            return DEFAULT_CATALOG
        return load_catalog(self.catalog_path)

    def validate(self) -> "ExperimentConfig":
        _check(self.workspace_side > 0.0, "workspace_side must be positive")
        _check(self.n_objects >= 1, "n_objects must be at least 1")
        _check(self.clutter in ("light", "heavy"),
               f"clutter must be light or heavy, got {self.clutter!r}")
        _check(self.min_separation >= 0.0, "min_separation must be non-negative")
        _check(0.0 <= self.p_fail <= 1.0, "p_fail must lie in [0, 1]")
        _check(0.0 <= self.clearance_threshold <= 1.0,
               "clearance_threshold must lie in [0, 1]")
        _check(self.max_steps is None or self.max_steps >= 1,
               "max_steps must be at least 1 when set")
        _check(self.resolution > 0 and self.resolution % 16 == 0,
               "resolution must be a positive multiple of 16")
        _check(0.0 <= self.gamma <= 1.0, "gamma must lie in [0, 1]")
        _check(self.lr > 0.0, "lr must be positive")
        _check(0.0 <= self.eps_end <= self.eps_start <= 1.0,
               "epsilon schedule must satisfy 0 <= eps_end <= eps_start <= 1")
        _check(self.eps_anneal_steps >= 0, "eps_anneal_steps must be non-negative")
        _check(self.sync_period >= 1, "sync_period must be at least 1")
        _check(self.replay_capacity >= 1, "replay_capacity must be at least 1")
        _check(self.steps >= 1, "steps must be at least 1")
        _check(0.0 <= self.train_pe <= 1.0, "train_pe must lie in [0, 1]")
        _check(len(self.pe_grid) > 0, "pe_grid must not be empty")
        for pe in self.pe_grid:
            _check(0.0 <= pe <= 1.0, f"pe_grid value {pe} outside [0, 1]")
        _check(self.actions_per_group is None or self.actions_per_group >= 1,
               "actions_per_group must be at least 1 when set")
        _check(self.episodes_per_group is None or self.episodes_per_group >= 1,
               "episodes_per_group must be at least 1 when set")
        _check(self.actions_per_group is not None or self.episodes_per_group is not None,
               "sweep needs an actions_per_group or episodes_per_group budget")
        _check(self.reps >= 1, "reps must be at least 1")
        _check(self.policy in POLICY_NAMES,
               f"policy must be one of {', '.join(POLICY_NAMES)}; got {self.policy!r}")
        validate_reward_shaping(self.gamma)
        if self.catalog_path:
            self.load_catalog()
        return self


class ConfigError(ValueError):
    pass


def _check(ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(message)


_GRIPPER_KEYS = ("l_p", "h_p", "theta_t", "l_f", "h", "l_s1", "l_s2",
                 "d_max", "sucker_diameter")

# (section, key) -> (attribute, parser); gripper keys are handled separately
_SCHEMA = {
    ("scene", "workspace_side"): ("workspace_side", float),
    ("scene", "n_objects"): ("n_objects", int),
    ("scene", "clutter"): ("clutter", str),
    ("scene", "min_separation"): ("min_separation", float),
    ("scene", "catalog"): ("catalog_path", str),
    ("env", "p_fail"): ("p_fail", float),
    ("env", "clearance_threshold"): ("clearance_threshold", float),
    ("env", "max_steps"): ("max_steps", "opt_int"),
    ("env", "resolution"): ("resolution", int),
    ("learner", "gamma"): ("gamma", float),
    ("learner", "lr"): ("lr", float),
    ("learner", "eps_start"): ("eps_start", float),
    ("learner", "eps_end"): ("eps_end", float),
    ("learner", "eps_anneal_steps"): ("eps_anneal_steps", int),
    ("learner", "sync_period"): ("sync_period", int),
    ("learner", "replay"): ("replay", "bool"),
    ("learner", "replay_capacity"): ("replay_capacity", int),
    ("learner", "steps"): ("steps", int),
    ("learner", "train_pe"): ("train_pe", float),
    ("learner", "continual_update"): ("continual_update", "bool"),
    ("sweep", "pe_grid"): ("pe_grid", "float_list"),
    ("sweep", "actions_per_group"): ("actions_per_group", "opt_int"),
    ("sweep", "episodes_per_group"): ("episodes_per_group", "opt_int"),
    ("sweep", "reps"): ("reps", int),
    ("run", "seed"): ("seed", int),
    ("run", "policy"): ("policy", str),
    ("run", "out_dir"): ("out_dir", str),
    ("run", "checkpoint"): ("checkpoint", str),
}

_SECTIONS = ("gripper", "scene", "env", "learner", "sweep", "run")

_BOOL_WORDS = {"true": True, "yes": True, "1": True,
               "false": False, "no": False, "0": False}


def _parse_value(raw: str, kind, where: str):
    raw = raw.strip()
    try:
        if kind is str:
            return raw
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "bool":
            try:
                return _BOOL_WORDS[raw.lower()]
            except KeyError:
                raise ValueError(f"not a boolean: {raw!r}") from None
        if kind == "opt_int":
            return None if raw == "" else int(raw)
        if kind == "float_list":
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad value for {where}: {exc}") from None
    raise AssertionError(f"unhandled kind {kind!r}")


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file; an empty file yields all defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error in {path}: {exc}") from None

    cfg = ExperimentConfig()
    gripper_kwargs = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            where = f"[{section}] {key}"
            if section == "gripper":
                if key not in _GRIPPER_KEYS:
                    raise ConfigError(f"unknown config key {where}")
                if key == "d_max" and raw.strip() == "":
                    gripper_kwargs[key] = None
                else:
                    gripper_kwargs[key] = _parse_value(raw, float, where)
                continue
            spec = _SCHEMA.get((section, key))
            if spec is None:
                raise ConfigError(f"unknown config key {where}")
            attr, kind = spec
            setattr(cfg, attr, _parse_value(raw, kind, where))
    if gripper_kwargs:
        try:
            cfg.gripper = GripperParams(**gripper_kwargs)
        except ValueError as exc:
            raise ConfigError(f"bad gripper parameters: {exc}") from None
    return cfg.validate()


def _fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def save_config(cfg: ExperimentConfig, path) -> None:
    """Write every key explicitly (the resolved state, not just overrides)."""
    g = cfg.gripper
    lines = ["[gripper]"]
    for key in _GRIPPER_KEYS:
        lines.append(f"{key} = {_fmt_value(getattr(g, key))}")
    by_section: dict = {}
    for (section, key), (attr, _) in _SCHEMA.items():
        by_section.setdefault(section, []).append((key, attr))
    for section in _SECTIONS[1:]:
        lines.append("")
        lines.append(f"[{section}]")
        for key, attr in by_section[section]:
            lines.append(f"{key} = {_fmt_value(getattr(cfg, attr))}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_catalog(path) -> tuple:
    """Read an object catalog: one template per line,
    `name hl_min hl_max hs_min hs_max h_min h_max affinity flat_frac square`.
    Blank lines and # comments are skipped."""
    templates = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"catalog file not found: {path}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if len(tok) != 10:
            raise ConfigError(f"{path}:{lineno}: expected 10 fields, got {len(tok)}")
        name = tok[0]
        try:
            nums = [float(t) for t in tok[1:7]]
            flat_frac = float(tok[8])
            square = _BOOL_WORDS[tok[9].lower()]
        except (ValueError, KeyError):
            raise ConfigError(f"{path}:{lineno}: malformed numeric field") from None
        affinity = tok[7]
        if affinity not in AFFINITIES:
            raise ConfigError(f"{path}:{lineno}: unknown affinity {affinity!r}")
        hl = (nums[0], nums[1])
        hs = (nums[2], nums[3])
        h = (nums[4], nums[5])
        for lo, hi in (hl, hs, h):
            if not 0.0 < lo <= hi:
                raise ConfigError(f"{path}:{lineno}: ranges must satisfy 0 < lo <= hi")
        if not 0.0 < flat_frac <= 1.0:
            raise ConfigError(f"{path}:{lineno}: flat_frac must lie in (0, 1]")
        templates.append(ObjectTemplate(name, hl, hs, h, affinity, flat_frac, square=square))
    if not templates:
        raise ConfigError(f"catalog file {path} defines no templates")
    return tuple(templates)


def save_catalog(catalog, path) -> None:
    lines = ["# name hl_min hl_max hs_min hs_max h_min h_max affinity flat_frac square"]
    for t in catalog:
        lines.append(" ".join([
            t.name,
            repr(t.half_long[0]), repr(t.half_long[1]),
            repr(t.half_short[0]), repr(t.half_short[1]),
            repr(t.height[0]), repr(t.height[1]),
            t.affinity, repr(t.flat_frac), "1" if t.square else "0",
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
