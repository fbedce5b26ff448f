"""Flat ``dotted.key = value`` configuration files mapped onto experiment dataclasses."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError


def parse_value(text: str):
    t = text.strip()
    if "," in t:
        return [parse_value(p) for p in t.split(",") if p.strip()]
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def parse_flat(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Returns {key: (value, line_no)}."""
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or any(not part.isidentifier() for part in key.split(".")):
            raise ConfigError(f"{source}:{no}: malformed key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r} (first set on line {out[key][1]})")
        out[key] = (parse_value(value), no)
    return out


def load_flat(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_flat(text, str(path))


def _coerce(value, default, key: str, where: str):
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{where}: {key} must be true/false, got {value!r}")
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(f"{where}: {key} must be an integer, got {value!r}")
    if isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(f"{where}: {key} must be a number, got {value!r}")
    if isinstance(default, list):
        items = value if isinstance(value, list) else [value]
        if default and isinstance(default[0], (int, float)):
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in items):
                raise ConfigError(f"{where}: {key} must be a list of numbers, got {value!r}")
            kind = type(default[0])
            return [kind(x) for x in items]
        return list(items)
    if isinstance(default, str):
        return str(value)
    return value


def apply_flat(cfg, flat: dict, prefix: str, source: str = "<config>"):
    """Return a copy of dataclass ``cfg`` with ``prefix.field`` overrides applied.

    Keys under other prefixes are ignored; unknown fields under ``prefix`` raise.
    """
    names = {f.name: f for f in dataclasses.fields(cfg)}
    changes = {}
    for key, (value, line) in flat.items():
        head, _, name = key.partition(".")
        if head != prefix:
            continue
        where = f"{source}:{line}"
        if name not in names:
            raise ConfigError(f"{where}: unknown field {key!r}; known: {', '.join(sorted(names))}")
        changes[name] = _coerce(value, getattr(cfg, name), key, where)
    return dataclasses.replace(cfg, **changes)


def check_known_prefixes(flat: dict, allowed: set, source: str = "<config>") -> None:
    for key, (_, line) in flat.items():
        head = key.split(".", 1)[0]
        if head not in allowed:
            raise ConfigError(f"{source}:{line}: unknown section {head!r} in key {key!r}")


def to_flat(cfg, prefix: str) -> dict:
    return {f"{prefix}.{k}": v for k, v in dataclasses.asdict(cfg).items()}


# --- experiment configs -----------------------------------------------------


@dataclass
class ExactConfig:
    source: str = "commuting_demo"  # commuting_demo | random | equal | lecam | file path
    d: int = 2
    b: float = 4.0
    alphas: list = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0])
    bf_budget: int = 200
    lecam_eps: float = 0.25


@dataclass
class QneRunConfig:
    d: int = 2
    b: float = 4.0
    alpha: float = 1.0
    n: int = 1000
    grid_random: int = 8
    oracle_point: bool = True
    model_kind: str = "shallow"
    inner: str = "closed_form"
    steps: int = 500
    sample_reuse: str = "fresh_per_theta"


@dataclass
class SweepConfig:
    d: int = 2
    b: float = 4.0
    alpha: float = 1.0
    n_list: list = field(default_factory=lambda: [100, 316, 1000, 3162, 10000, 31623, 100000])
    trials: int = 50
    pairs: int = 1
    grid_random: int = 8
    oracle_point: bool = True
    slope_lo: float = -0.65
    slope_hi: float = -0.35


@dataclass
class TailConfig:
    d: int = 2
    b: float = 4.0
    alpha: float = 1.0
    n: int = 1000
    trials: int = 1000
    grid_random: int = 8
    z_points: int = 40
    min_tail_count: int = 10
    r2_min: float = 0.8


@dataclass
class PerminvConfig:
    n_qubits: list = field(default_factory=lambda: [2, 3, 4])
    pairs_per_n: int = 20
    b: float = 4.0
    preserve_tol: float = 1e-5
    copies_qubits: int = 4
    copies_trials: int = 20
    copies_grid: int = 4
    target_error: float = 0.05
    reps: int = 5
    n_start: int = 50
    n_ratio: float = 1.25
    n_max: int = 200000
    pass_fraction: float = 0.8


@dataclass
class PropsConfig:
    lemma1_samples: int = 500
    lemma1_dims: list = field(default_factory=lambda: [2, 4, 8])
    lemma1_b: float = 4.0
    lemma2_samples: int = 1000
    monotone_pairs: int = 100
    monotone_alphas: list = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0])
    dpi_pairs: int = 50
    contraction_pairs: int = 200
    bernstein_kmax: int = 64
    coeff_kmax: int = 12
    interpolant_tables: int = 20
    inject_violation: bool = False


SECTIONS = {
    "exact": ExactConfig,
    "qne-run": QneRunConfig,
    "sweep-n": SweepConfig,
    "tail": TailConfig,
    "perminv": PerminvConfig,
    "props": PropsConfig,
}

PREFIX = {"exact": "exact", "qne-run": "qne", "sweep-n": "sweep", "tail": "tail", "perminv": "perminv", "props": "props"}
