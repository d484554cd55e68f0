"""Experiment configuration, loaded from JSON.

Every section is optional and falls back to the library defaults. Unknown
keys are rejected so that typos fail loudly instead of being ignored.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .cas_core import DEFAULT_CAS_CONFIG, CasConfig, cas_config_to_dict, load_cas_config
from .engine import DEFAULT_RESPONSE, ResponseModel, ReturnBehavior
from .optimizer import OptimizerConfig
from .trajectory import DEFAULT_PIPELINE, PipelineConfig

CONTAINMENT_FILTERS = ("any", "partly", "fully")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HeatmapSpec:
    nx: int = 6
    ny: int = 6
    # (xmin, ymin, xmax, ymax) in local ft; None derives it from the data
    bbox: tuple[float, float, float, float] | None = None
    containment: str = "fully"

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("heatmap grid needs at least one point per axis")
        if self.bbox is not None:
            if len(self.bbox) != 4 or self.bbox[0] > self.bbox[2] or self.bbox[1] > self.bbox[3]:
                raise ConfigError(f"bad heatmap bbox {self.bbox}")
            object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        if self.containment not in CONTAINMENT_FILTERS:
            raise ConfigError(f"heatmap containment must be one of {CONTAINMENT_FILTERS}")

    def points(self, bbox=None) -> list[tuple[int, int, float, float]]:
        """Cell centres as (row, col, x, y), rows south to north."""
        xmin, ymin, xmax, ymax = bbox if bbox is not None else self.bbox
        dx = (xmax - xmin) / self.nx
        dy = (ymax - ymin) / self.ny
        return [
            (j, i, xmin + (i + 0.5) * dx, ymin + (j + 0.5) * dy)
            for j in range(self.ny)
            for i in range(self.nx)
        ]


@dataclass(frozen=True)
class ExperimentConfig:
    airport: str = "airport"
    center: tuple[float, float] = (0.0, 0.0)
    alt_unit: str = "m"
    inputs: tuple[str, ...] = ()
    pipeline: PipelineConfig = DEFAULT_PIPELINE
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    response: ResponseModel = DEFAULT_RESPONSE
    cas: CasConfig = DEFAULT_CAS_CONFIG
    heatmap: HeatmapSpec = field(default_factory=HeatmapSpec)
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.alt_unit not in ("m", "ft"):
            raise ConfigError("alt_unit must be 'm' or 'ft'")
        if len(self.center) != 2:
            raise ConfigError("center is [lat, lon]")

    def seed_for(self, key: str) -> int:
        """Per-item seed fanned out from the experiment seed.

        Depends only on the seed and the key, never on worker scheduling.
        """
        ss = np.random.SeedSequence([self.seed, zlib.crc32(key.encode())])
        return int(ss.generate_state(1)[0])

    def to_dict(self) -> dict:
        resp = asdict(self.response)
        if self.response.return_behavior is not None:
            resp["return_behavior"] = self.response.return_behavior.value
        return {
            "airport": self.airport,
            "center": list(self.center),
            "alt_unit": self.alt_unit,
            "inputs": list(self.inputs),
            "pipeline": asdict(self.pipeline),
            "optimizer": asdict(self.optimizer),
            "response": resp,
            "cas": cas_config_to_dict(self.cas),
            "heatmap": {**asdict(self.heatmap), "bbox": list(self.heatmap.bbox) if self.heatmap.bbox else None},
            "workers": self.workers,
            "seed": self.seed,
        }


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {name} keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = {k: v for k, v in data.items() if k not in ("pipeline", "optimizer", "response", "cas", "heatmap")}
    if "center" in kw:
        kw["center"] = tuple(float(v) for v in kw["center"])
    if "inputs" in kw:
        kw["inputs"] = tuple(str(p) for p in kw["inputs"])
    kw["pipeline"] = _section(PipelineConfig, data.get("pipeline"), "pipeline")
    kw["optimizer"] = _section(OptimizerConfig, data.get("optimizer"), "optimizer")
    resp = dict(data.get("response") or {})
    if resp.get("return_behavior") is not None:
        try:
            resp["return_behavior"] = ReturnBehavior(resp["return_behavior"])
        except ValueError as exc:
            raise ConfigError(f"response: {exc}") from exc
    kw["response"] = _section(ResponseModel, resp, "response")
    try:
        kw["cas"] = load_cas_config(data.get("cas") or {})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cas: {exc}") from exc
    kw["heatmap"] = _section(HeatmapSpec, data.get("heatmap"), "heatmap")
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    return config_from_dict(data)
