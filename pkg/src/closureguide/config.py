"""Run configuration: every module's parameter record plus batch settings.

Config files are flat ``section.key=value`` lines; ``#`` starts a comment.
Tuples are written comma-separated and ``none`` clears an optional value::

    closure.directions=8
    itti.center_levels=2,3,4
    analyze.n_values=3,5,7
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .analytics import DensityParams
from .closure import ClosureParams
from .contours import EdgeParams
from .evaluation import EvalParams
from .prior import PriorParams
from .saliency import IttiParams, SigParams


class ConfigError(ValueError):
    """Unknown key, unparsable value or a parameter failing validation."""


@dataclass(frozen=True)
class AnalyzeParams:
    sigmas: tuple = (8.0, 16.0, 32.0)
    n_values: tuple = (3, 5, 7, 9, 11, 13, 15, 17, 19, 21)
    closed_threshold: float = 0.9

    def __post_init__(self):
        if not self.sigmas or min(self.sigmas) <= 0:
            raise ValueError("sigmas must be a non-empty list of positive values")
        if not self.n_values or any(n < 1 or n % 2 == 0 for n in self.n_values):
            raise ValueError("n_values must be a non-empty list of odd positive sizes")
        if not 0 <= self.closed_threshold <= 1:
            raise ValueError(f"closed_threshold must be in [0, 1], got {self.closed_threshold}")


@dataclass(frozen=True)
class RunParams:
    output_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if not self.output_dir:
            raise ValueError("output_dir must not be empty")


# section name (also the RunConfig attribute) -> parameter class
SECTIONS = {
    "edges": EdgeParams,
    "closure": ClosureParams,
    "prior": PriorParams,
    "itti": IttiParams,
    "sig": SigParams,
    "density": DensityParams,
    "eval": EvalParams,
    "analyze": AnalyzeParams,
    "run": RunParams,
}

# fields whose default is None: the type used when a value is given
_OPTIONAL_TYPES = {("closure", "max_ray_length"): float}


@dataclass(frozen=True)
class RunConfig:
    edges: EdgeParams = field(default_factory=EdgeParams)
    closure: ClosureParams = field(default_factory=ClosureParams)
    prior: PriorParams = field(default_factory=PriorParams)
    itti: IttiParams = field(default_factory=IttiParams)
    sig: SigParams = field(default_factory=SigParams)
    density: DensityParams = field(default_factory=DensityParams)
    eval: EvalParams = field(default_factory=EvalParams)
    analyze: AnalyzeParams = field(default_factory=AnalyzeParams)
    run: RunParams = field(default_factory=RunParams)

    def items(self):
        """``(key, value)`` pairs in file order, e.g. ``("closure.directions", 8)``."""
        for section in SECTIONS:
            params = getattr(self, section)
            for f in dataclasses.fields(params):
                yield f"{section}.{f.name}", getattr(params, f.name)


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)


def dump_config(config=None):
    """Render a config as ``key=value`` text (defaults when ``config`` is None)."""
    config = config or RunConfig()
    return "".join(f"{key}={_format(value)}\n" for key, value in config.items())


def _coerce(text, like, key):
    text = text.strip()
    try:
        if isinstance(like, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
        if isinstance(like, tuple):
            item = like[0] if like else float
            item_type = type(item) if not isinstance(item, type) else item
            return tuple(_coerce(p, item_type(0) if item_type is not str else "", key)
                         for p in text.split(",") if p.strip())
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(like).__name__}") from None


def parse_assignments(lines, source="<config>"):
    """Turn ``key=value`` lines into a dict, rejecting unknown keys."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in SECTIONS or name not in {f.name for f in dataclasses.fields(SECTIONS[section])}:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(assignments):
    """Apply raw string assignments over the defaults and validate every section."""
    defaults = RunConfig()
    sections = {}
    for section, cls in SECTIONS.items():
        base = getattr(defaults, section)
        kwargs = {}
        for f in dataclasses.fields(cls):
            key = f"{section}.{f.name}"
            if key not in assignments:
                continue
            text = assignments[key]
            current = getattr(base, f.name)
            if current is None or text.strip().lower() == "none":
                if text.strip().lower() in ("none", ""):
                    kwargs[f.name] = None
                    continue
                current = _OPTIONAL_TYPES.get((section, f.name), str)(0)
            kwargs[f.name] = _coerce(text, current, key)
        try:
            sections[section] = dataclasses.replace(base, **kwargs)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{section}: {exc}") from None
    return RunConfig(**sections)


def load_config(path=None, overrides=()):
    """Defaults, then the file at ``path``, then ``overrides`` (``key=value`` strings)."""
    assignments = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        assignments.update(parse_assignments(text.splitlines(), str(path)))
    assignments.update(parse_assignments(overrides, "--set"))
    return build_config(assignments)
