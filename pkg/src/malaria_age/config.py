"""Run configuration: sectioned key-value text with typed values.

Values are Python literals (numbers, strings, lists, true/false) or
age-function family calls such as ``logistic(top=6.0, b=11.0, rate=0.05)``.
Example::

    [run]
    mode = simulate

    [params]
    preset = table1
    Lambda_v = 5e6

    [grid]
    da = 0.05
    dt = 0.05
    T = 200

    [init]
    I_v0 = [1e3, 1e4]
"""

from __future__ import annotations

import ast
import configparser
import dataclasses
import hashlib
import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError, InvalidGridError, InvalidParameterError
from .grid import Grid
from .params import (DEFAULT_A_MAX, FAMILIES, RATE_NAMES, AgeFunction, ModelParams,
                     age_function_from_descriptor, table1_params)

MODES = ("simulate", "r0", "equilibria", "stability", "sweep", "compare-ode")
HUMAN_INITS = ("pfe", "discrete_pfe", "tabulated")


@dataclass(frozen=True)
class InitConfig:
    humans: str = "pfe"
    I_v0: tuple = (1e3,)
    S_v0: float | None = None
    s0: AgeFunction | None = None
    i0: AgeFunction | None = None
    r0: AgeFunction | None = None


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    sample_every: int = 20
    snapshot_times: tuple = ()
    log_scale: bool = False
    figures: bool = True


@dataclass(frozen=True)
class SweepConfig:
    Lambda_v: tuple = (1.5e6, 3e6, 5e6)
    simulate: bool = True
    t_early: float = 10.0


@dataclass(frozen=True)
class CompareConfig:
    levels: int = 3
    ode_reference_dt: float = 1e-3


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: ModelParams
    grid: Grid = field(default_factory=Grid)
    init: InitConfig = field(default_factory=InitConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)

    def digest(self):
        return hashlib.sha256(serialize(self).encode()).hexdigest()[:16]


# --- value parsing ---------------------------------------------------------------------

_BARE = re.compile(r"[A-Za-z_./\\~][\w./\\~-]*")


def _literal(node):
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FAMILIES:
            raise ValueError(f"unknown age-function family; expected one of {sorted(FAMILIES)}")
        if node.args:
            raise ValueError(f"{node.func.id}(...) takes keyword arguments only")
        desc = {"family": node.func.id}
        for kw in node.keywords:
            desc[kw.arg] = _literal(kw.value)
        return age_function_from_descriptor(desc)
    if isinstance(node, ast.Name):
        return {"true": True, "false": False, "none": None}.get(node.id.lower(), node.id)
    if isinstance(node, (ast.List, ast.Tuple)):
        return [_literal(e) for e in node.elts]
    return ast.literal_eval(node)


def parse_value(text):
    """Typed value of a config entry; raises ValueError with a column on failure.

    Bare words and paths (``table1``, ``out/regime-a``) are read as strings.
    """
    text = text.strip()
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        if _BARE.fullmatch(text):
            return text
        raise ValueError(f"syntax error at column {exc.offset}: {exc.msg}") from None
    try:
        return _literal(tree.body)
    except (ValueError, TypeError, InvalidParameterError) as exc:
        if _BARE.fullmatch(text):
            return text
        raise ValueError(str(exc)) from None


# --- schema ---------------------------------------------------------------------------------

_SECTIONS = {
    "run": {"mode"},
    "params": {"preset", "Lambda_h", "Lambda_v", "mu_v", *RATE_NAMES},
    "grid": {"da", "dt", "a_max", "T"},
    "init": {f.name for f in dataclasses.fields(InitConfig)},
    "output": {f.name for f in dataclasses.fields(OutputConfig)},
    "sweep": {f.name for f in dataclasses.fields(SweepConfig)},
    "compare": {f.name for f in dataclasses.fields(CompareConfig)},
}


class _Located:
    """Line numbers of sections and keys, recovered from the raw text."""

    def __init__(self, text):
        self.keys = {}
        self.sections = {}
        section = None
        for n, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                section = stripped[1:-1].strip()
                self.sections.setdefault(section, n)
            elif section and stripped and stripped[0] not in "#;" and ("=" in stripped or ":" in stripped):
                key = stripped.split("=", 1)[0].split(":", 1)[0].strip()
                key_col = len(line) - len(line.lstrip()) + 1
                sep = line.index("=") if "=" in line else line.index(":")
                val_col = sep + 2 + (len(line[sep + 1:]) - len(line[sep + 1:].lstrip()))
                self.keys.setdefault((section, key), (n, key_col, val_col))

    def key(self, section, key):
        """(line, column) of the value of `key`."""
        n, _, col = self.keys.get((section, key), (self.sections.get(section), None, None))
        return n, col

    def key_start(self, section, key):
        n, col, _ = self.keys.get((section, key), (self.sections.get(section), None, None))
        return n, col


def _number(v, where, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", *where)
    if not math.isfinite(v):
        raise ConfigError(f"value must be finite, got {v!r}", *where)
    if positive and v <= 0:
        raise ConfigError(f"value must be positive, got {v!r}", *where)
    if integer:
        if int(v) != v:
            raise ConfigError(f"expected an integer, got {v!r}", *where)
        return int(v)
    return float(v)


def _numbers(v, where, positive=False):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list):
        raise ConfigError(f"expected a list of numbers, got {v!r}", *where)
    return tuple(_number(x, where, positive) for x in v)


def _bool(v, where):
    if not isinstance(v, bool):
        raise ConfigError(f"expected true or false, got {v!r}", *where)
    return v


def parse_config(text, mode=None):
    """Parse config text into a RunConfig.  `mode` fills in or must match [run] mode."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"syntax error: {exc.message.splitlines()[0]}", line) from None
    loc = _Located(text)

    raw = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", loc.sections.get(section), 1)
        raw[section] = {}
        for key, value in cp.items(section):
            where = loc.key(section, key)
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", *loc.key_start(section, key))
            try:
                raw[section][key] = (parse_value(value), where)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}", *where) from None

    def get(section, key, default=None):
        return raw.get(section, {}).get(key, (default, loc.key(section, key)))

    file_mode, where = get("run", "mode")
    if file_mode is not None and file_mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {file_mode!r}", *where)
    if mode is not None and file_mode is not None and mode != file_mode:
        raise ConfigError(f"config mode {file_mode!r} conflicts with requested mode {mode!r}", *where)
    mode = mode or file_mode
    if mode is None:
        raise ConfigError("no mode given: set [run] mode or use a subcommand")

    params = _parse_params(raw.get("params", {}), loc, get)
    grid = _parse_grid(raw.get("grid", {}), loc)
    init = _parse_init(raw.get("init", {}), loc, mode)
    output = _parse_output(raw.get("output", {}))
    sweep = _parse_simple(SweepConfig, raw.get("sweep", {}))
    compare = _parse_simple(CompareConfig, raw.get("compare", {}))
    return RunConfig(mode, params, grid, init, output, sweep, compare)


def _parse_params(section, loc, get):
    preset, where = get("params", "preset")
    values = {k: v for k, v in section.items() if k != "preset"}
    if preset is not None:
        if preset != "table1":
            raise ConfigError(f"unknown preset {preset!r}; only 'table1' is available", *where)
        Lambda_v, lv_where = values.pop("Lambda_v", (None, where))
        if Lambda_v is None:
            raise ConfigError("preset table1 needs Lambda_v", *where)
        base = table1_params(_number(Lambda_v, lv_where, positive=True))
        desc = base.to_descriptor()
    else:
        desc = {}
    for key, (v, w) in values.items():
        if key in RATE_NAMES:
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                v = _number(v, w)
            elif not isinstance(v, AgeFunction):
                raise ConfigError(f"{key} must be a number or an age-function family call", *w)
            desc[key] = v
        else:
            desc[key] = _number(v, w, positive=True)
    missing = [k for k in ("Lambda_h", "Lambda_v", "mu_v", *RATE_NAMES) if k not in desc]
    if missing:
        raise ConfigError(f"[params] missing {', '.join(missing)}", loc.sections.get("params"))
    try:
        return ModelParams.from_descriptor(desc)
    except (InvalidParameterError, TypeError) as exc:
        raise ConfigError(f"[params] {exc}", loc.sections.get("params")) from None


def _parse_grid(section, loc):
    kw = {k: _number(v, w, positive=True) for k, (v, w) in section.items()}
    kw.setdefault("a_max", DEFAULT_A_MAX)
    try:
        return Grid(**kw)
    except InvalidGridError as exc:
        msg = str(exc)
        key = next((k for k in ("dt", "da", "a_max", "T") if msg.startswith(k)), "dt")
        raise ConfigError(msg, *loc.key("grid", key)) from None


def _parse_init(section, loc, mode):
    kw = {}
    for key, (v, w) in section.items():
        if key == "humans":
            if v not in HUMAN_INITS:
                raise ConfigError(f"humans must be one of {HUMAN_INITS}, got {v!r}", *w)
            kw[key] = v
        elif key == "I_v0":
            kw[key] = _numbers(v, w)
            if any(x < 0 for x in kw[key]):
                raise ConfigError("I_v0 entries must be nonnegative", *w)
        elif key == "S_v0":
            kw[key] = None if v is None else _number(v, w)
        else:
            if v is not None and not isinstance(v, AgeFunction):
                v = age_function_from_descriptor(_number(v, w))
            kw[key] = v
    init = InitConfig(**kw)
    where = loc.key("init", "I_v0")
    if mode == "simulate" and not init.I_v0:
        raise ConfigError("simulate mode needs a nonempty I_v0 list", *where)
    if init.humans == "tabulated" and init.s0 is None:
        raise ConfigError("humans = 'tabulated' needs an s0 profile", *loc.key("init", "humans"))
    return init


def _parse_output(section):
    kw = {}
    for key, (v, w) in section.items():
        if key == "directory":
            if not isinstance(v, str):
                raise ConfigError("directory must be a quoted string", *w)
            kw[key] = v
        elif key == "sample_every":
            kw[key] = _number(v, w, positive=True, integer=True)
        elif key == "snapshot_times":
            kw[key] = _numbers(v, w)
        else:
            kw[key] = _bool(v, w)
    return OutputConfig(**kw)


def _parse_simple(cls, section):
    defaults = cls()
    kw = {}
    for key, (v, w) in section.items():
        d = getattr(defaults, key)
        if isinstance(d, bool):
            kw[key] = _bool(v, w)
        elif isinstance(d, tuple):
            kw[key] = _numbers(v, w, positive=True)
        elif isinstance(d, int):
            kw[key] = _number(v, w, positive=True, integer=True)
        else:
            kw[key] = _number(v, w, positive=True)
    return cls(**kw)


# --- serialization ----------------------------------------------------------------------------

def format_value(v):
    if isinstance(v, AgeFunction):
        parts = []
        for name, val in v.params().items():
            if isinstance(val, dict):
                val = age_function_from_descriptor(val)
            parts.append(f"{name}={format_value(val)}")
        return f"{v.family}({', '.join(parts)})"
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str) and _BARE.fullmatch(v) and v.lower() not in ("true", "false", "none"):
        return v
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    return repr(v)


def serialize(config):
    """Config text that parses back to an equal RunConfig."""
    lines = ["[run]", f"mode = {format_value(config.mode)}", "", "[params]"]
    p = config.params
    for key in ("Lambda_h", "Lambda_v", "mu_v"):
        lines.append(f"{key} = {format_value(float(getattr(p, key)))}")
    for key in RATE_NAMES:
        lines.append(f"{key} = {format_value(getattr(p, key))}")
    g = config.grid
    lines += ["", "[grid]"] + [f"{k} = {format_value(float(getattr(g, k)))}" for k in ("da", "dt", "a_max", "T")]
    for name in ("init", "output", "sweep", "compare"):
        block = getattr(config, name)
        lines += ["", f"[{name}]"]
        for f in dataclasses.fields(block):
            lines.append(f"{f.name} = {format_value(getattr(block, f.name))}")
    return "\n".join(lines) + "\n"


def default_config(mode):
    return RunConfig(mode, table1_params(5e6))
