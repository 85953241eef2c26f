"""Persistent database of trained compressors keyed by constraint signature."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from cs_qaoa_lab.ansatz import AnsatzParams, TrainingResult, compressor_from_params
from cs_qaoa_lab.compression import Compressor, fs_ratio_compressed
from cs_qaoa_lab.constraints import ConstraintSpec

logger = logging.getLogger(__name__)

DB_VERSION = 1


@dataclass
class CompressorRecord:
    constraint: dict[str, Any]
    n: int
    m: int
    layers: int
    ansatz: str
    params: list[float]
    label: list[int] | None
    p_sur: float
    fs_ratio_original: float
    fs_ratio_compressed: float
    budget: dict[str, Any] = field(default_factory=dict)
    failed: bool = False

    def ansatz_params(self) -> AnsatzParams:
        values = tuple(int(v) for v in self.params) if self.ansatz == "D" else tuple(float(v) for v in self.params)
        return AnsatzParams(self.ansatz, values, self.n, self.m, self.layers)

    def compressor(self, qubits: tuple[int, ...] | None = None, n_qubits: int | None = None) -> Compressor:
        return compressor_from_params(self.ansatz_params(), qubits, n_qubits)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CompressorRecord:
        return cls(**data)


def record_from_training(spec: ConstraintSpec, result: TrainingResult, budget: dict[str, Any]) -> CompressorRecord:
    """Database entry for a standalone training run on ``spec``."""
    compressor = result.compressor
    n = compressor.n_qubits
    feasible = spec.satisfied_mask(n)
    params = result.params
    if params is None:
        values: list[float] = []
        layers, ansatz = 0, str(budget.get("ansatz", "D"))
    else:
        values = [int(v) if params.kind == "D" else float(v) for v in params.values]
        layers, ansatz = params.layers, params.kind
    return CompressorRecord(
        constraint=spec.signature(),
        n=n,
        m=compressor.m,
        layers=layers,
        ansatz=ansatz,
        params=values,
        label=[int(v) for v in compressor.label()] if compressor.is_permutation() else None,
        p_sur=float(result.p_sur),
        fs_ratio_original=float(np.mean(feasible)),
        fs_ratio_compressed=fs_ratio_compressed(compressor, feasible),
        budget=budget,
        failed=not result.passed,
    )


class CompressorDatabase:
    def __init__(self, records: list[CompressorRecord] | None = None):
        self.records: list[CompressorRecord] = list(records or [])

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def load(cls, path: str | Path) -> CompressorDatabase:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Compressor database not found: {path}")
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        if data.get("version") != DB_VERSION:
            raise ValueError(f"Unsupported compressor database version {data.get('version')!r}")
        return cls([CompressorRecord.from_dict(r) for r in data.get("records", [])])

    @classmethod
    def bundled(cls) -> CompressorDatabase:
        text = resources.files("cs_qaoa_lab").joinpath("data/compressors.json").read_text(encoding="utf-8")
        data = json.loads(text)
        return cls([CompressorRecord.from_dict(r) for r in data["records"]])

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"version": DB_VERSION, "records": [r.to_dict() for r in self.records]}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")

    def add(self, record: CompressorRecord) -> None:
        self.records.append(record)
        logger.debug("Added %s-ansatz record for N=%d, m=%d", record.ansatz, record.n, record.m)

    def lookup(self, spec: ConstraintSpec, m: int | None = None, ansatz: str | None = None) -> CompressorRecord | None:
        """Best non-failed record for the constraint's signature and width, optionally of one ansatz."""
        signature = spec.signature()
        n = len(spec.variables)
        matches = [
            r
            for r in self.records
            if not r.failed
            and r.constraint == signature
            and r.n == n
            and (m is None or r.m == m)
            and (ansatz is None or r.ansatz == ansatz)
        ]
        if not matches:
            return None
        return max(matches, key=lambda r: r.p_sur)
