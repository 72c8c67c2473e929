"""Flat key-value experiment configuration files.

One `key = value` pair per line, `#` starts a comment, arrays are
comma-separated.  Unknown keys and malformed values fail with the offending
line in the message.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    lattice: str = "Z2"
    dim: int | None = None
    descriptions: int | None = None
    source_kind: str = "gaussian"
    variance: float = 1.0
    loss: tuple = ()
    rate_target: float | None = None
    rate_fractions: tuple | None = None
    psi: float | None = None
    count: int = 200_000
    seed: int = 1
    out: str | None = None
    indices: tuple | None = None
    nu: float | None = None
    cap: int = 10_000
    text: str = field(default="", repr=False)

    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:12]


_KEYS = {
    "lattice": str,
    "L": int,
    "K": int,
    "source": str,
    "variance": float,
    "p": "floats",
    "rate_target": float,
    "rate_fractions": "floats",
    "psi": float,
    "n": int,
    "seed": int,
    "out": str,
    "indices": "ints",
    "nu": float,
    "cap": int,
}


def _parse_value(kind, raw: str):
    if kind is str:
        return raw
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if kind == "floats":
        return tuple(float(p) for p in parts)
    return tuple(int(p) for p in parts)


def parse_config_text(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig(text=text)
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, _, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} "
                              f"(first on line {seen[key]})")
        seen[key] = lineno
        try:
            val = _parse_value(_KEYS[key], raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        if key == "lattice":
            cfg.lattice = val
        elif key == "L":
            cfg.dim = val
        elif key == "K":
            cfg.descriptions = val
        elif key == "source":
            cfg.source_kind = val
        elif key == "variance":
            cfg.variance = val
        elif key == "p":
            cfg.loss = val
        elif key == "rate_target":
            cfg.rate_target = val
        elif key == "rate_fractions":
            cfg.rate_fractions = val
        elif key == "psi":
            cfg.psi = val
        elif key == "n":
            cfg.count = val
        elif key == "seed":
            cfg.seed = val
        elif key == "out":
            cfg.out = val
        elif key == "indices":
            cfg.indices = val
        elif key == "nu":
            cfg.nu = val
        elif key == "cap":
            cfg.cap = val
    validate_config(cfg)
    return cfg


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


def validate_config(cfg: ExperimentConfig) -> None:
    dims = {"Z1": 1, "Z2": 2, "A2": 2}
    if cfg.lattice not in dims:
        raise ConfigError(f"field lattice: unsupported lattice {cfg.lattice!r}")
    if cfg.dim is None:
        cfg.dim = dims[cfg.lattice]
    elif cfg.dim != dims[cfg.lattice]:
        raise ConfigError(f"field L: lattice {cfg.lattice} has dimension "
                          f"{dims[cfg.lattice]}, not {cfg.dim}")
    if not cfg.loss:
        raise ConfigError("field p: channel loss probabilities are required")
    if cfg.descriptions is None:
        cfg.descriptions = len(cfg.loss)
    if cfg.descriptions != len(cfg.loss):
        raise ConfigError(f"field K: got {cfg.descriptions} but p has "
                          f"{len(cfg.loss)} entries")
    if any(v < 0.0 or v > 1.0 for v in cfg.loss):
        raise ConfigError("field p: loss probabilities must lie in [0, 1]")
    if cfg.source_kind != "gaussian":
        raise ConfigError(f"field source: unsupported source {cfg.source_kind!r}")
    if cfg.variance <= 0:
        raise ConfigError("field variance: must be positive")
    if cfg.rate_fractions is not None:
        if len(cfg.rate_fractions) != cfg.descriptions:
            raise ConfigError("field rate_fractions: need one entry per description")
    if cfg.indices is not None and len(cfg.indices) != cfg.descriptions:
        raise ConfigError("field indices: need one entry per description")
    if cfg.count < 1:
        raise ConfigError("field n: vector count must be >= 1")
    if cfg.indices is None and cfg.rate_target is None:
        raise ConfigError("either rate_target or explicit indices are required")
