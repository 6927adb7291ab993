"""Run configuration: problem, mesh, scheme and outputs, loaded from JSON or TOML"""

import json
from pathlib import Path
from typing import Literal

import toml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.tentwave.core.mesh1d import Material, SpatialMesh
from src.tentwave.errors import ConfigurationError
from src.tentwave.utils.constants import DEFAULT_MARGIN, DEFAULT_SEED, DEFAULT_SLAB_HEIGHT

CONFIG_DIR = Path(__file__).resolve().parents[1] / "data" / "configs"

Impedance = float | Literal["matched"]


class PulseConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["left_moving", "interface"] = "left_moving"
    center: float | None = None
    sharpness: float | None = Field(default=None, gt=0.0)


class ProblemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    material: Material = Field(default_factory=Material)
    z0: Impedance = 1.0
    z1: Impedance = 1.0
    pulse: PulseConfig = Field(default_factory=PulseConfig)
    final_time: float = Field(gt=0.0)
    length: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def check_impedance(self):
        for name in ("z0", "z1"):
            value = getattr(self, name)
            if value != "matched" and value < 0.0:
                raise ValueError(f"{name} must be non-negative or 'matched'")
        return self


class SegmentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: float
    end: float
    h: float = Field(gt=0.0)
    region: int = Field(default=0, ge=0)


class MeshConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["explicit", "piecewise_uniform", "uniform_stencil"] = "piecewise_uniform"
    vertices: list[float] | None = None
    regions: list[int] | None = None
    segments: list[SegmentConfig] | None = None
    h: float | None = Field(default=None, gt=0.0)
    k_ratio: float = Field(default=0.9, gt=0.0)
    slab_height: float = Field(default=DEFAULT_SLAB_HEIGHT, gt=0.0)
    margin: float = Field(default=DEFAULT_MARGIN, gt=0.0, le=1.0)
    seed: int = DEFAULT_SEED

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == "explicit" and not self.vertices:
            raise ValueError("an explicit mesh needs vertices")
        if self.kind == "piecewise_uniform" and not self.segments and self.h is None:
            raise ValueError("a piecewise uniform mesh needs segments or a uniform h")
        if self.kind == "uniform_stencil" and self.h is None:
            raise ValueError("a uniform stencil mesh needs h")
        return self

    def spatial_mesh(self, length: float) -> SpatialMesh:
        if self.kind == "explicit":
            return SpatialMesh(vertices=self.vertices, regions=self.regions)
        if self.kind == "piecewise_uniform" and self.segments:
            return SpatialMesh.piecewise_uniform([(s.start, s.end, s.h, s.region) for s in self.segments])
        return SpatialMesh.uniform(length, round(length / self.h))


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    prefix: str = "run"
    directory: str = "."
    snapshots: list[float] = Field(default_factory=list)
    error_interval: float | None = Field(default=None, gt=0.0)
    error_every: int = Field(default=2, ge=1)
    write_nodal: bool = False


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    problem: ProblemConfig
    mesh: MeshConfig
    scheme: Literal["tp", "ctcs"] = "tp"
    use_closed_form: bool = True
    ctcs_bootstrap: Literal["exact", "taylor"] = "exact"
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def check_consistency(self):
        material = self.problem.material
        mesh = self.mesh
        if mesh.kind == "explicit":
            regions = mesh.regions or [0]
        elif mesh.segments:
            regions = [s.region for s in mesh.segments]
        else:
            regions = [0]
        if max(regions) >= material.n_regions:
            raise ValueError(f"mesh uses region {max(regions)} but the material defines {material.n_regions}")

        uniform = self.scheme == "ctcs" or mesh.kind == "uniform_stencil"
        if uniform:
            if mesh.h is None:
                raise ValueError("uniform grid runs need mesh.h")
            courant = max(material.wave_speed(r) for r in range(material.n_regions)) * mesh.k_ratio
            if courant >= 1.0:
                raise ValueError(f"k = {mesh.k_ratio} h violates the CFL condition a*c < 1 (a*c = {courant})")
        if self.scheme == "ctcs":
            if material.n_regions != 1 or not material.is_unit(0):
                raise ValueError("the CTCS reference needs a homogeneous material with kappa = 1")
            if self.ctcs_bootstrap == "exact" and self.problem.pulse.kind != "left_moving":
                raise ValueError("the exact CTCS bootstrap needs the left moving pulse")

        for t in self.output.snapshots:
            if not 0.0 <= t <= self.problem.final_time:
                raise ValueError(f"snapshot time {t} lies outside [0, {self.problem.final_time}]")
        return self


def read_document(path: str | Path) -> dict:
    """Raw configuration document from a .json or .toml file"""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"configuration file {path} does not exist", path=str(path))
    try:
        if path.suffix == ".json":
            return json.loads(path.read_text())
        if path.suffix == ".toml":
            return toml.load(path)
    except (json.JSONDecodeError, toml.TomlDecodeError) as e:
        raise ConfigurationError(f"cannot parse {path}: {e}", path=str(path)) from e
    raise ConfigurationError(f"unsupported configuration format '{path.suffix}'", path=str(path))


def bundled_config(name: str) -> Path:
    path = CONFIG_DIR / name
    if not path.is_file():
        available = ", ".join(sorted(p.name for p in CONFIG_DIR.iterdir()))
        raise ConfigurationError(f"no bundled configuration named {name}", available=available)
    return path


def load_run_config(path: str | Path) -> tuple[RunConfig, dict]:
    """Validated config together with the raw document it came from"""
    document = read_document(path)
    return RunConfig.model_validate(document), document
