"""Plain-text ``key = value`` configuration files.

Values are read as JSON when possible (numbers, lists), otherwise as bare strings::

    kind = ellipsoid
    q = [4, 1, 1, 0, 0, 0]     # q11, q22, q33, q12, q13, q23
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .anisotropy import AnisotropyFunction


class ConfigError(ValueError):
    pass


def parse_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value.strip("'\"")
    return out


def read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    cfg = parse_text(text)
    cfg["_path"] = str(path)
    return cfg


def anisotropy_from_dict(cfg: dict) -> AnisotropyFunction:
    kind = cfg.get("kind", "constant")
    name = str(cfg.get("name", ""))
    try:
        if kind == "constant":
            return AnisotropyFunction.constant()
        if kind == "ellipsoid":
            q = np.asarray(cfg.get("q", [1, 1, 1, 0, 0, 0]), dtype=float)
            if q.shape == (3,):
                q = np.concatenate([q, np.zeros(3)])
            if q.shape != (6,):
                raise ConfigError("q needs 6 entries: q11, q22, q33, q12, q13, q23")
            Q = np.array([[q[0], q[3], q[4]], [q[3], q[1], q[5]], [q[4], q[5], q[2]]])
            return AnisotropyFunction.ellipsoid(Q, name=name)
        if kind == "perturbed":
            return AnisotropyFunction.perturbed(float(cfg.get("epsilon", 0.0)),
                                                cfg.get("axis", [0.0, 0.0, 1.0]),
                                                int(cfg.get("power", 3)), name=name)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown anisotropy kind {kind!r}")


def load_anisotropy(path) -> AnisotropyFunction:
    return anisotropy_from_dict(read_config(path))


@dataclass
class ProblemConfig:
    anisotropy: AnisotropyFunction
    H0: float = -2.0
    n: int = 65
    mask: str = "disk"
    radius: float = 0.5
    center: tuple = (0.0, 0.0)
    rect: tuple = (-0.5, 0.5, -0.5, 0.5)
    boundary: str = "wulff_cap"
    boundary_value: float = 0.0
    extra: dict = field(default_factory=dict)


def problem_from_dict(cfg: dict, base_dir=None) -> ProblemConfig:
    if "anisotropy" in cfg:
        ref = Path(cfg["anisotropy"])
        if base_dir is not None and not ref.is_absolute():
            ref = Path(base_dir) / ref
        F = load_anisotropy(ref)
    else:
        F = anisotropy_from_dict(cfg)
    try:
        return ProblemConfig(
            anisotropy=F,
            H0=float(cfg.get("H0", cfg.get("h0", -2.0))),
            n=int(cfg.get("n", cfg.get("grid", 65))),
            mask=str(cfg.get("mask", "disk")),
            radius=float(cfg.get("radius", 0.5)),
            center=tuple(cfg.get("center", (0.0, 0.0))),
            rect=tuple(cfg.get("domain", (-0.5, 0.5, -0.5, 0.5))),
            boundary=str(cfg.get("boundary", "wulff_cap")),
            boundary_value=float(cfg.get("boundary_value", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
