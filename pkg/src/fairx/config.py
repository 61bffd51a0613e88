"""Experiment configuration: YAML files, schema checks and dotted overrides."""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .merit import _ALIASES, EXPONENTIAL, PIECEWISE_LINEAR, MeritFunction


class ConfigError(ValueError):
    """Malformed configuration; ``where`` names the field and, if known, the line."""

    def __init__(self, field_path: str, msg: str, line: int | None = None):
        where = f"field {field_path}" if field_path else "config"
        if line is not None:
            where = f"line {line}, {where}"
        super().__init__(f"{where}: {msg}")
        self.field_path, self.line = field_path, line


NUMBER = (int, float)
LIST = (list,)

ENV_FIELDS: dict[str, dict[str, tuple[type, ...]]] = {
    "mab": {"means": LIST, "noise": (str,), "sigma": NUMBER, "reward_range": LIST},
    "linear": {"dim": (int,), "n_arms": (int,), "noise_sigma": NUMBER, "theta_star": LIST},
    "multilabel": {"path": (str,), "mode": (str,), "rff_dim": (int,), "rff_sigma": NUMBER,
                   "n_features": (int,), "n_labels": (int,)},
    "replay": {"path": (str,)},
}
ENV_REQUIRED = {"mab": ("means",), "linear": ("dim", "n_arms"), "multilabel": ("path",),
                "replay": ("path",)}
TOP_FIELDS: dict[str, tuple[type, ...]] = {
    "name": (str,), "env": (dict,), "algorithms": LIST, "merit": (dict,), "horizon": (int,),
    "num_seeds": (int,), "seed": (int,), "validation_fraction": NUMBER, "test_fraction": NUMBER,
    "checkpoints": (int, list), "pgd": (dict,), "output": (str,), "threads": (int,),
}
PGD_FIELDS = {"step_size": NUMBER, "num_steps": (int,), "vertex_start": (bool,)}
ALGO_FIELDS = {"name": (str,), "params": (dict,), "grid": (dict,)}


def _is(value, types) -> bool:
    if isinstance(value, bool):
        return bool in types
    return isinstance(value, types)


def _type_name(types) -> str:
    return " or ".join(t.__name__ for t in types)


@dataclass
class AlgorithmSpec:
    name: str
    params: dict[str, Any] = field(default_factory=dict)
    grid: dict[str, list] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name}
        if self.params:
            out["params"] = dict(self.params)
        if self.grid:
            out["grid"] = {k: list(v) for k, v in self.grid.items()}
        return out


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``merit`` holds a kind and its parameter (``c`` or ``L``), which may be a
    list to sweep several merits. ``checkpoints`` is a count of log-spaced
    rounds or an explicit list.
    """

    env: dict[str, Any]
    algorithms: list[AlgorithmSpec]
    merit: dict[str, Any]
    horizon: int
    name: str = "experiment"
    num_seeds: int = 10
    seed: int = 0
    validation_fraction: float = 0.2
    test_fraction: float = 0.8
    checkpoints: int | list[int] = 50
    pgd: dict[str, Any] = field(default_factory=lambda: {"step_size": 0.01, "num_steps": 10})
    output: str = "out"
    threads: int = 1
    base_dir: str = field(default=".", compare=False, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self, lines: Mapping[str, int] | None = None) -> None:
        lines = lines or {}

        def fail(path, msg):
            raise ConfigError(path, msg, lines.get(path))

        if self.horizon < 0:
            fail("horizon", "must be >= 0")
        if self.num_seeds < 1:
            fail("num_seeds", "must be >= 1")
        if self.threads < 1:
            fail("threads", "must be >= 1")
        if abs(self.validation_fraction + self.test_fraction - 1.0) > 1e-9:
            fail("test_fraction", "validation and test fractions must sum to 1")
        if not 0 <= self.validation_fraction <= 1:
            fail("validation_fraction", "must lie in [0, 1]")
        kind = self.env.get("kind")
        if kind not in ENV_FIELDS:
            fail("env.kind", f"expected one of {sorted(ENV_FIELDS)}")
        for key, value in self.env.items():
            if key == "kind":
                continue
            if key not in ENV_FIELDS[kind]:
                fail(f"env.{key}", f"unknown field for env kind {kind!r}")
            if not _is(value, ENV_FIELDS[kind][key]):
                fail(f"env.{key}", f"expected {_type_name(ENV_FIELDS[kind][key])}")
        for key in ENV_REQUIRED[kind]:
            if key not in self.env:
                fail(f"env.{key}", "missing required field")
        if not self.algorithms:
            fail("algorithms", "need at least one algorithm")
        from .algos import ALGORITHMS
        for i, spec in enumerate(self.algorithms):
            if spec.name not in ALGORITHMS:
                fail(f"algorithms.{i}.name", f"unknown algorithm; expected one of {sorted(ALGORITHMS)}")
            for key, value in spec.params.items():
                if isinstance(value, str) and not (key == "alpha" and value == "theory"):
                    fail(f"algorithms.{i}.params.{key}", f"expected a number, got {value!r}")
            for key, values in spec.grid.items():
                if not isinstance(values, list) or not values:
                    fail(f"algorithms.{i}.grid.{key}", "grid values must be a non-empty list")
                for value in values:
                    if isinstance(value, str) and not (key == "alpha" and value == "theory"):
                        fail(f"algorithms.{i}.grid.{key}", f"expected numbers, got {value!r}")
        try:
            self.merits()
        except (ValueError, TypeError) as err:
            fail("merit", str(err))
        for key, value in self.pgd.items():
            if key not in PGD_FIELDS:
                fail(f"pgd.{key}", "unknown field")
            if not _is(value, PGD_FIELDS[key]):
                fail(f"pgd.{key}", f"expected {_type_name(PGD_FIELDS[key])}")
        if isinstance(self.checkpoints, list):
            if any(not _is(c, (int,)) or c < 1 for c in self.checkpoints):
                fail("checkpoints", "explicit checkpoints must be positive integers")
        elif self.checkpoints < 1:
            fail("checkpoints", "need at least one checkpoint")

    def merits(self) -> list[tuple[float | None, MeritFunction]]:
        """(swept value, merit) for every merit parameter listed."""
        spec = dict(self.merit)
        kind = spec.get("kind")
        kind = _ALIASES.get(kind, kind)
        key = {EXPONENTIAL: "c", PIECEWISE_LINEAR: "L"}.get(kind)
        if key is None:
            return [(None, MeritFunction.from_config(spec))]
        values = spec.get(key)
        values = values if isinstance(values, list) else [values]
        out = []
        for v in values:
            one = dict(spec)
            one[key] = v
            out.append((float(v), MeritFunction.from_config(one)))
        return out

    def resolve_path(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.normpath(os.path.join(self.base_dir, path))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "env": copy.deepcopy(self.env),
            "algorithms": [a.to_dict() for a in self.algorithms],
            "merit": copy.deepcopy(self.merit),
            "horizon": self.horizon,
            "num_seeds": self.num_seeds,
            "seed": self.seed,
            "validation_fraction": self.validation_fraction,
            "test_fraction": self.test_fraction,
            "checkpoints": copy.deepcopy(self.checkpoints),
            "pgd": dict(self.pgd),
            "output": self.output,
            "threads": self.threads,
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: str = ".",
                  lines: Mapping[str, int] | None = None) -> "ExperimentConfig":
        lines = lines or {}
        if not isinstance(data, Mapping):
            raise ConfigError("", "top level must be a mapping", 1)
        for key, value in data.items():
            if key not in TOP_FIELDS:
                raise ConfigError(key, "unknown field", lines.get(key))
            if not _is(value, TOP_FIELDS[key]):
                raise ConfigError(key, f"expected {_type_name(TOP_FIELDS[key])}", lines.get(key))
        for key in ("env", "algorithms", "merit", "horizon"):
            if key not in data:
                raise ConfigError(key, "missing required field")
        algos = []
        for i, spec in enumerate(data["algorithms"]):
            path = f"algorithms.{i}"
            if isinstance(spec, str):
                spec = {"name": spec}
            if not isinstance(spec, Mapping) or "name" not in spec:
                raise ConfigError(path, "algorithm entries need a name", lines.get(path))
            for key, value in spec.items():
                if key not in ALGO_FIELDS:
                    raise ConfigError(f"{path}.{key}", "unknown field", lines.get(f"{path}.{key}"))
                if not _is(value, ALGO_FIELDS[key]):
                    raise ConfigError(f"{path}.{key}", f"expected {_type_name(ALGO_FIELDS[key])}",
                                      lines.get(f"{path}.{key}"))
            algos.append(AlgorithmSpec(spec["name"], dict(spec.get("params", {})),
                                       dict(spec.get("grid", {}))))
        kw = {k: copy.deepcopy(v) for k, v in data.items() if k != "algorithms"}
        pgd = {"step_size": 0.01, "num_steps": 10}
        pgd.update(kw.pop("pgd", {}))
        cfg = cls.__new__(cls)
        try:
            cls.__init__(cfg, algorithms=algos, pgd=pgd, base_dir=base_dir, **kw)
        except ConfigError as err:
            line = _nearest_line(lines, err.field_path)
            if err.line is None and line is not None:
                raise ConfigError(err.field_path, str(err).split(": ", 1)[1], line) from None
            raise
        return cfg

    @classmethod
    def from_yaml(cls, text: str, base_dir: str = ".") -> "ExperimentConfig":
        try:
            node = yaml.compose(text)
            data = yaml.safe_load(text)
        except yaml.YAMLError as err:
            mark = getattr(err, "problem_mark", None)
            raise ConfigError("", f"invalid YAML: {getattr(err, 'problem', err)}",
                              None if mark is None else mark.line + 1) from None
        return cls.from_dict(data if data is not None else {}, base_dir, _line_map(node))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_yaml(path.read_text(), str(path.parent))

    def with_overrides(self, overrides: Mapping[str, str]) -> "ExperimentConfig":
        """Apply ``dotted.key=value`` overrides; values are parsed as YAML scalars."""
        data = self.to_dict()
        for key, raw in overrides.items():
            value = yaml.safe_load(raw) if isinstance(raw, str) else raw
            _set_dotted(data, key, value)
        return ExperimentConfig.from_dict(data, self.base_dir)


def _set_dotted(data: dict, key: str, value) -> None:
    parts = key.split(".")
    node: Any = data
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError):
                raise ConfigError(".".join(parts[:i + 1]), "no such list entry") from None
        else:
            node = node.setdefault(part, {})
        if not isinstance(node, (dict, list)):
            raise ConfigError(".".join(parts[:i + 1]), "is not a mapping")
    last = parts[-1]
    if isinstance(node, list):
        try:
            last_i = int(last)
            old = node[last_i]
        except (ValueError, IndexError):
            raise ConfigError(key, "no such list entry") from None
    else:
        old = node.get(last)
    if old is not None and not _compatible(old, value):
        raise ConfigError(key, f"override {value!r} does not match type {type(old).__name__}")
    if isinstance(node, list):
        node[last_i] = value
    else:
        node[last] = value


def _compatible(old, new) -> bool:
    if isinstance(old, bool) or isinstance(new, bool):
        return isinstance(old, bool) and isinstance(new, bool)
    if isinstance(old, (int, float)) and isinstance(new, (int, float)):
        return isinstance(old, float) or isinstance(new, int)
    if isinstance(old, (int, list)) and isinstance(new, (int, list)) and not isinstance(old, str):
        # numeric fields that also accept sweeps, e.g. merit c or checkpoints
        return True
    return type(old) is type(new)


def _nearest_line(lines: Mapping[str, int], path: str) -> int | None:
    # shorthand entries such as a bare algorithm name have no node for the inner field
    while path:
        if path in lines:
            return lines[path]
        path = path.rpartition(".")[0]
    return None


def _line_map(node, prefix: str = "") -> dict[str, int]:
    """Dotted field path -> 1-based line of its value."""
    out: dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            out.update(_line_map(value, path))
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            path = f"{prefix}.{i}"
            out[path] = value.start_mark.line + 1
            out.update(_line_map(value, path))
    return out
