"""Tabular schema: per-feature specs plus the JSON schema-file format."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .exceptions import SchemaError

SCHEMA_VERSION = 1
MODES = ("boolean", "non-boolean", "unique-row-index")


@dataclass(frozen=True)
class FeatureSpec:
    """A numeric feature (``min``/``max``/``qubits``) or a categorical one (``categories``)."""

    name: str
    kind: str
    min: float | None = None
    max: float | None = None
    qubits: int | None = None
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == "numeric":
            if self.min is None or self.max is None or self.qubits is None:
                raise SchemaError(f"numeric feature {self.name!r} needs min, max and qubits")
            if not self.max > self.min:
                raise SchemaError(f"feature {self.name!r}: max must exceed min")
            if not 1 <= self.qubits <= 16:
                raise SchemaError(f"feature {self.name!r}: qubits must be in [1, 16]")
        elif self.kind == "categorical":
            cats = tuple(str(c) for c in self.categories)
            object.__setattr__(self, "categories", cats)
            if len(cats) < 2:
                raise SchemaError(f"categorical feature {self.name!r} needs >= 2 categories")
            if len(set(cats)) != len(cats):
                raise SchemaError(f"categorical feature {self.name!r} has duplicate categories")
        else:
            raise SchemaError(f"unknown feature kind {self.kind!r}")

    @classmethod
    def numeric(cls, name: str, min: float, max: float, qubits: int) -> "FeatureSpec":
        return cls(name, "numeric", min=float(min), max=float(max), qubits=int(qubits))

    @classmethod
    def categorical(cls, name: str, categories: Sequence) -> "FeatureSpec":
        return cls(name, "categorical", categories=tuple(categories))

    @property
    def is_numeric(self) -> bool:
        return self.kind == "numeric"

    @property
    def bin_count(self) -> int:
        return 1 << self.qubits

    @property
    def bin_width(self) -> float:
        return (self.max - self.min) / self.bin_count

    @property
    def cardinality(self) -> int:
        return self.bin_count if self.is_numeric else len(self.categories)

    def to_dict(self) -> dict:
        if self.is_numeric:
            return {"name": self.name, "kind": "numeric", "min": self.min, "max": self.max, "qubits": self.qubits}
        return {"name": self.name, "kind": "categorical", "categories": list(self.categories)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        if d.get("kind") == "numeric":
            return cls.numeric(d["name"], d["min"], d["max"], d["qubits"])
        if d.get("kind") == "categorical":
            return cls.categorical(d["name"], d["categories"])
        raise SchemaError(f"unknown feature kind in {d!r}")


@dataclass(frozen=True)
class TabularSchema:
    features: tuple[FeatureSpec, ...]
    mode: str = "boolean"
    version: int = field(default=SCHEMA_VERSION)

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.features:
            raise SchemaError("schema has no features")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names")
        if self.mode not in MODES:
            raise SchemaError(f"unknown encoding mode {self.mode!r}; expected one of {MODES}")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def __getitem__(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def with_mode(self, mode: str) -> "TabularSchema":
        return TabularSchema(self.features, mode, self.version)

    def search_space_size(self) -> int:
        size = 1
        for f in self.features:
            size *= f.cardinality
        return size

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "mode": self.mode,
            "features": [f.to_dict() for f in self.features],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "TabularSchema":
        version = int(d.get("version", SCHEMA_VERSION))
        if version > SCHEMA_VERSION:
            raise SchemaError(f"schema version {version} is newer than supported {SCHEMA_VERSION}")
        features = [FeatureSpec.from_dict(f) for f in d.get("features", [])]
        return cls(tuple(features), d.get("mode", "boolean"), version)


def save_schema(schema: TabularSchema, path) -> None:
    Path(path).write_text(schema.to_json(), encoding="utf-8")


def load_schema(path) -> TabularSchema:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return TabularSchema.from_dict(data)
