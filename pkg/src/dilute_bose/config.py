"""Structured-text run configuration.

A run file is YAML (JSON also parses). Top-level keys are ``potential``,
``seed``, ``tolerances`` and one section per subcommand; each section accepts
exactly that subcommand's option names. Unknown keys are rejected with their
dotted path.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError, DomainError
from .potentials import (RadialPotential, ramp, read_table_csv, square_barrier, table_potential,
                         zero_potential)
from .tolerances import DEFAULT, Tolerances

POTENTIAL_KEYS = {"kind", "V0", "R0", "samples", "name"}

SECTIONS: dict[str, dict[str, Any]] = {
    "scattering": {"rmax": 3.0, "step": 1e-3, "pmax": 20.0, "npoints": 200},
    "thermo": {"rho": 0.01, "beta": 20.0, "method": "series"},
    "delta-f": {"schedule": "c=1.0", "rho_grid": "1e-2:1e-5:7"},
    "fock": {"L": 6.283185307179586, "cutoff": 4, "N": 3, "beta": 1.0, "shape": "line", "dump": False},
    "trial-state": {"L": 6.283185307179586, "cutoff": 4, "alpha": "0,0,0:2;1,0,0:2", "shells":
                    "low_min=0.5,low_max=1.5,high_min=1.500001,high_max=4.5,m_c=4", "shape": "line",
                    "rho": 0.01, "box_side": 1},
    "upper-bound": {"L": 6.283185307179586, "cutoff": 4, "N": 4, "beta": "0.7", "shape": "line",
                    "shells": "low_min=1.5,low_max=2.5,high_min=2.6,high_max=4.5,m_c=2", "rho": None,
                    "mu": None, "box_side": 1, "samples": 2000},
    "bridge": {"L": 10.0, "ell": 2.0, "corpus": "random:20:5"},
    "verify": {"quick": False},
}

TOP_LEVEL = {"potential", "seed", "tolerances", *SECTIONS}


def bundled(name: str) -> Path:
    return Path(str(resources.files("dilute_bose") / "data" / name))


def load_yaml(path: str | Path) -> dict:
    """Parse a YAML/JSON file; syntax errors become ConfigError with the line number."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = mark.line + 1 if mark is not None else "?"
        raise ConfigError(f"{p}: parse error at line {line}: {exc.problem}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return data


def validate(data: Mapping[str, Any]) -> None:
    for key, value in data.items():
        if key not in TOP_LEVEL:
            raise ConfigError(f"unknown key '{key}'")
        if key in SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"section '{key}' must be a mapping")
            for sub in value:
                if sub not in SECTIONS[key]:
                    raise ConfigError(f"unknown key '{key}.{sub}'")
        elif key == "potential" and isinstance(value, dict):
            for sub in value:
                if sub not in POTENTIAL_KEYS:
                    raise ConfigError(f"unknown key 'potential.{sub}'")
        elif key == "tolerances":
            if not isinstance(value, dict):
                raise ConfigError("section 'tolerances' must be a mapping")
            try:
                DEFAULT.updated(value)
            except KeyError as exc:
                raise ConfigError(f"unknown key 'tolerances.{exc.args[0]}'") from exc


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    data = load_yaml(path)
    validate(data)
    data["_base"] = str(Path(path).resolve().parent)
    return data


def tolerances_from(data: Mapping[str, Any], overrides: Mapping[str, Any] | None = None) -> Tolerances:
    merged = dict(data.get("tolerances", {}))
    merged.update(overrides or {})
    try:
        return DEFAULT.updated(merged)
    except KeyError as exc:
        raise ConfigError(f"unknown key 'tolerances.{exc.args[0]}'") from exc


def potential_from_spec(spec: Mapping[str, Any], base: str | Path = ".") -> RadialPotential:
    unknown = set(spec) - POTENTIAL_KEYS
    if unknown:
        raise ConfigError(f"unknown key 'potential.{sorted(unknown)[0]}'")
    kind = spec.get("kind")
    try:
        if kind == "square":
            return square_barrier(float(spec["V0"]), float(spec["R0"]))
        if kind == "ramp":
            return ramp(float(spec["V0"]), float(spec["R0"]))
        if kind == "zero":
            return zero_potential()
        if kind == "table":
            src = Path(spec["samples"])
            if not src.is_absolute():
                src = Path(base) / src
            r, v = read_table_csv(src)
            return table_potential(r, v, name=str(spec.get("name", src.stem)))
    except KeyError as exc:
        raise ConfigError(f"potential of kind '{kind}' needs key '{exc.args[0]}'") from exc
    except DomainError as exc:
        raise ConfigError(f"invalid potential: {exc}") from exc
    raise ConfigError(f"unknown potential kind '{kind}'")


def load_potential(source: str | Path | Mapping[str, Any] | None, base: str | Path = ".") -> RadialPotential:
    """Potential from an inline mapping or a file holding either a spec or a run config."""
    if source is None:
        source = bundled("square_barrier.yaml")
    if isinstance(source, Mapping):
        return potential_from_spec(source, base)
    path = Path(source)
    if not path.is_absolute() and not path.exists():
        path = Path(base) / path
    data = load_yaml(path)
    if "potential" in data:
        validate(data)
        inner = data["potential"]
        if isinstance(inner, Mapping):
            return potential_from_spec(inner, path.parent)
        return load_potential(inner, path.parent)
    return potential_from_spec(data, path.parent)


def section(data: Mapping[str, Any], name: str, cli: Mapping[str, Any]) -> dict[str, Any]:
    """Defaults, then the config section, then explicitly given command-line values."""
    out = dict(SECTIONS[name])
    out.update(data.get(name, {}))
    out.update({k: v for k, v in cli.items() if v is not None and k in out})
    return out


def parse_pairs(spec: str, name: str) -> dict[str, float]:
    """``key=value,key=value`` into a float mapping."""
    out: dict[str, float] = {}
    if not spec:
        return out
    for item in str(spec).split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"{name}: expected key=value, got '{item}'")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise ConfigError(f"{name}: value for '{k.strip()}' is not a number") from exc
    return out


def parse_occupation(spec: str) -> dict[tuple[int, int, int], int]:
    """``n1,n2,n3:count;...`` into a map from integer mode triples to counts."""
    out: dict[tuple[int, int, int], int] = {}
    for item in str(spec).split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            vec, count = item.split(":")
            n = tuple(int(x) for x in vec.split(","))
            c = int(count)
        except ValueError as exc:
            raise ConfigError(f"bad occupation entry '{item}' (expected n1,n2,n3:count)") from exc
        if len(n) != 3 or c < 0:
            raise ConfigError(f"bad occupation entry '{item}'")
        out[n] = out.get(n, 0) + c
    return out


def parse_grid(spec: str) -> list[float]:
    """``start:stop:count`` (log-spaced) or a comma list."""
    import numpy as np

    s = str(spec)
    if ":" in s:
        try:
            a, b, n = s.split(":")
            return [float(x) for x in np.geomspace(float(a), float(b), int(n))]
        except ValueError as exc:
            raise ConfigError(f"bad grid '{s}' (expected start:stop:count)") from exc
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid '{s}'") from exc
