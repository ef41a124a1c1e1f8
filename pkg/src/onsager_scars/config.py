"""Experiment configuration stored as an INI document.

Every field lives in a fixed section; values are written in a canonical text
form so that ``from_ini(to_ini(cfg)) == cfg`` holds exactly.

Example
-------
::

    [experiment]
    kind = dynamics
    seed = 7

    [model]
    n = 2
    L = 10
    h = 1.0

    [couplings]
    mode = random_uniform

    [dynamics]
    initial_states = coherent(0.5); product(1010101010); random
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

import numpy as np

from .models import ModelSpec, PerturbationCoefficients

__all__ = ["ExperimentConfig", "ConfigError", "InitialState", "parse_initial_state", "EXPERIMENT_KINDS"]

EXPERIMENT_KINDS = ("levelstats", "ee_scatter", "dynamics", "closed_form_ee", "verify")
COUPLING_MODES = ("random_uniform", "explicit", "zero")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class InitialState:
    kind: str
    params: tuple[Any, ...] = ()

    def __str__(self) -> str:
        if not self.params:
            return self.kind
        return f"{self.kind}({','.join(_fmt_param(p) for p in self.params)})"


def _fmt_param(p) -> str:
    if isinstance(p, complex):
        return repr(p).strip("()")
    return repr(p) if isinstance(p, float) else str(p)


def _parse_number(text: str) -> float | complex:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        try:
            return complex(text.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"not a number: {text!r}") from None


_STATE_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_initial_state(text: str) -> InitialState:
    """Parse ``coherent(b)``, ``two_param(a,b)``, ``tower(k)``, ``product(0101)`` or ``random``."""
    m = _STATE_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse initial state {text!r}")
    kind, args = m.group(1), m.group(2)
    parts = [a.strip() for a in args.split(",")] if args else []
    if kind == "coherent" and len(parts) == 1:
        return InitialState(kind, (_parse_number(parts[0]),))
    if kind == "two_param" and len(parts) == 2:
        return InitialState(kind, tuple(_parse_number(p) for p in parts))
    if kind == "tower" and len(parts) == 1 and parts[0].isdigit():
        return InitialState(kind, (int(parts[0]),))
    if kind == "product" and len(parts) == 1 and parts[0].isdigit():
        return InitialState(kind, (parts[0],))
    if kind == "random" and not parts:
        return InitialState(kind)
    raise ConfigError(f"cannot parse initial state {text!r}")


# field name -> INI section
_SECTIONS = {
    "kind": "experiment", "seed": "experiment", "output_dir": "experiment", "threads": "experiment",
    "n": "model", "L": "model", "h": "model",
    "coupling_mode": "couplings", "coupling_kind": "couplings", "channels": "couplings",
    "include_last_projector": "couplings", "n3_mixing": "couplings", "explicit_values": "couplings",
    "sector": "levelstats", "realizations": "levelstats", "window": "levelstats", "bins": "levelstats",
    "cut": "entanglement", "overlap_threshold": "entanglement",
    "initial_states": "dynamics", "t_max": "dynamics", "time_points": "dynamics",
    "closed_form_sizes": "closed_form",
}
_INI_NAMES = {"coupling_mode": "mode", "coupling_kind": "kind", "explicit_values": "values"}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "verify"
    seed: int = 0
    output_dir: str = "results"
    threads: int = 1
    n: int = 2
    L: int = 8
    h: float = 1.0
    coupling_mode: str = "random_uniform"
    coupling_kind: str = "standard"
    channels: tuple[int, ...] | None = None
    include_last_projector: bool = True
    n3_mixing: bool = False
    explicit_values: tuple[tuple[float, ...], ...] | None = None
    sector: float | None = None
    realizations: int = 1
    window: tuple[float, float] = (0.25, 0.75)
    bins: int = 50
    cut: int | None = None
    overlap_threshold: float = 0.99
    initial_states: tuple[InitialState, ...] = field(default_factory=tuple)
    t_max: float | None = None
    time_points: int = 400
    closed_form_sizes: tuple[int, ...] = tuple(range(4, 68, 4))

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment {self.kind!r}; expected one of {EXPERIMENT_KINDS}")
        if self.coupling_mode not in COUPLING_MODES:
            raise ConfigError(f"unknown coupling mode {self.coupling_mode!r}")
        if self.coupling_kind not in ("standard", "two_param"):
            raise ConfigError(f"unknown coupling kind {self.coupling_kind!r}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.n < 2 or self.L < 2 or self.L % 2:
            raise ConfigError("need n >= 2 and even L >= 2")
        if not math.isfinite(self.h):
            raise ConfigError("h must be finite")
        if self.realizations < 1 or self.threads < 1 or self.time_points < 2 or self.bins < 1:
            raise ConfigError("realizations, threads, bins and time_points must be positive")
        lo, hi = self.window
        if not 0 <= lo < hi <= 1:
            raise ConfigError("window must satisfy 0 <= lo < hi <= 1")
        if self.coupling_mode == "explicit" and self.explicit_values is None:
            raise ConfigError("explicit coupling mode requires values")
        if any(s % 4 for s in self.closed_form_sizes):
            raise ConfigError("closed-form sizes must be multiples of 4")

    # -- model construction -------------------------------------------------

    def couplings(self) -> PerturbationCoefficients | None:
        if self.n not in (2, 3) and self.coupling_mode != "zero":
            raise ConfigError(f"no perturbation is available for n = {self.n}")
        if self.coupling_mode == "zero":
            return None
        if self.coupling_mode == "explicit":
            return PerturbationCoefficients(self.n, np.array(self.explicit_values, dtype=float),
                                            self.include_last_projector, None, self.coupling_kind)
        return PerturbationCoefficients.random(
            self.n, self.L, self.seed, channels=self.channels,
            include_last_projector=self.include_last_projector, kind=self.coupling_kind,
            mixing=self.n3_mixing)

    def model_spec(self, realization: int = 0) -> ModelSpec:
        cfg = self if realization == 0 else replace(self, seed=self._realization_seed(realization))
        return ModelSpec(self.n, self.L, self.h, cfg.couplings())

    def _realization_seed(self, realization: int) -> int:
        return int(np.random.SeedSequence(self.seed, spawn_key=(realization,)).generate_state(2, np.uint32)
                   .astype(np.uint64) @ np.array([1, 2**32], dtype=np.uint64))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["initial_states"] = [str(s) for s in self.initial_states]
        for key in ("channels", "window", "closed_form_sizes"):
            if d[key] is not None:
                d[key] = list(d[key])
        if d["explicit_values"] is not None:
            d["explicit_values"] = [list(r) for r in d["explicit_values"]]
        return d

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for f in fields(self):
            section = _SECTIONS[f.name]
            if not parser.has_section(section):
                parser.add_section(section)
            parser.set(section, _INI_NAMES.get(f.name, f.name), _encode(getattr(self, f.name)))
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        known = {(s, _INI_NAMES.get(k, k)): k for k, s in _SECTIONS.items()}
        kwargs: dict[str, Any] = {}
        for section in parser.sections():
            for key, raw in parser.items(section):
                name = known.get((section, key))
                if name is None:
                    raise ConfigError(f"unknown key [{section}] {key}")
                kwargs[name] = _DECODERS[name](raw.strip())
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_ini(fh.read())


def _encode(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], InitialState):
            return "; ".join(str(v) for v in value)
        if value and isinstance(value[0], tuple):
            return "; ".join(", ".join(repr(float(x)) for x in row) for row in value)
        return ", ".join(_encode(v) for v in value)
    return str(value)


def _opt(conv):
    return lambda s: None if s == "" else conv(s)


def _int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise ConfigError(f"not an integer: {s!r}") from None


def _float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"not a number: {s!r}") from None


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _tuple(conv):
    return lambda s: tuple(conv(x.strip()) for x in s.split(",") if x.strip())


_DECODERS = {
    "kind": str, "seed": _int, "output_dir": str, "threads": _int,
    "n": _int, "L": _int, "h": _float,
    "coupling_mode": str, "coupling_kind": str,
    "channels": _opt(_tuple(_int)),
    "include_last_projector": _bool, "n3_mixing": _bool,
    "explicit_values": _opt(lambda s: tuple(_tuple(_float)(row) for row in s.split(";"))),
    "sector": _opt(_float), "realizations": _int, "window": _tuple(_float), "bins": _int,
    "cut": _opt(_int), "overlap_threshold": _float,
    "initial_states": lambda s: tuple(parse_initial_state(x) for x in s.split(";") if x.strip()),
    "t_max": _opt(_float), "time_points": _int,
    "closed_form_sizes": _tuple(_int),
}
