"""Spatial mesh, material and tent geometry primitives"""

import json
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

from src.tentwave.errors import ConfigurationError, GeometryError
from src.tentwave.utils.constants import DEFAULT_MARGIN, KIND_INTERIOR, KIND_LEFT, KIND_RIGHT


class TentType(StrEnum):
    I = "I"  # noqa: E741
    L = "L"
    R = "R"

    @property
    def code(self) -> int:
        return {TentType.I: KIND_INTERIOR, TentType.L: KIND_LEFT, TentType.R: KIND_RIGHT}[self]

    @classmethod
    def from_code(cls, code: int) -> "TentType":
        return {KIND_INTERIOR: cls.I, KIND_LEFT: cls.L, KIND_RIGHT: cls.R}[int(code)]


class SpatialMesh(BaseModel):
    """Vertices x_0 < ... < x_N on [x_0, x_N]; every cell carries a material region index"""

    model_config = ConfigDict(frozen=True)

    vertices: list[float] = Field(min_length=2)
    regions: list[int] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def default_regions(cls, data):
        if isinstance(data, dict) and not data.get("regions") and data.get("vertices") is not None:
            data = {**data, "regions": [0] * max(len(data["vertices"]) - 1, 0)}
        return data

    @model_validator(mode="after")
    def check_layout(self):
        x = np.asarray(self.vertices, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("vertex coordinates must be finite")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("vertex coordinates must be strictly increasing")
        if len(self.regions) != len(self.vertices) - 1:
            raise ValueError(f"expected {len(self.vertices) - 1} region indices, got {len(self.regions)}")
        if any(region < 0 for region in self.regions):
            raise ValueError("region indices must be non-negative")
        return self

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def region_array(self) -> np.ndarray:
        return np.asarray(self.regions, dtype=int)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.vertices) - 1

    @property
    def length(self) -> float:
        return self.vertices[-1] - self.vertices[0]

    def region_of(self, x: np.ndarray) -> np.ndarray:
        """Region index of the cell containing each point (right end belongs to the last cell)"""
        cells = np.searchsorted(self.x, np.asarray(x, dtype=float), side="right") - 1
        return self.region_array[np.clip(cells, 0, self.n_cells - 1)]

    @classmethod
    def uniform(cls, length: float, n_cells: int, region: int = 0, start: float = 0.0) -> "SpatialMesh":
        if n_cells < 1:
            raise ConfigurationError("a uniform mesh needs at least one cell", n_cells=n_cells)
        vertices = start + length * np.arange(n_cells + 1) / n_cells
        return cls(vertices=vertices.tolist(), regions=[region] * n_cells)

    @classmethod
    def piecewise_uniform(cls, segments: list[tuple[float, float, float, int]]) -> "SpatialMesh":
        """Concatenate uniform segments (start, end, h, region); h must divide each segment"""
        vertices: list[float] = []
        regions: list[int] = []
        for start, end, h, region in segments:
            n = round((end - start) / h)
            if n < 1 or abs(n * h - (end - start)) > 1e-9 * max(1.0, abs(end - start)):
                raise ConfigurationError(f"step {h} does not divide segment [{start}, {end}]")
            if vertices and abs(vertices[-1] - start) > 1e-12:
                raise ConfigurationError(f"segment starting at {start} does not continue the mesh")
            points = start + (end - start) * np.arange(n + 1) / n
            vertices.extend(points[1:] if vertices else points)
            regions.extend([region] * n)
        return cls(vertices=vertices, regions=regions)

    @classmethod
    def from_document(cls, document: dict) -> "SpatialMesh":
        return cls.model_validate(document)

    @classmethod
    def from_json(cls, path: str | Path) -> "SpatialMesh":
        with open(path) as f:
            return cls.from_document(json.load(f))

    def to_document(self) -> dict:
        return {"vertices": list(self.vertices), "regions": list(self.regions)}


class Material(BaseModel):
    """Piecewise-constant kappa1, kappa2 per region with a global wave constant c"""

    model_config = ConfigDict(frozen=True)

    c: PositiveFloat = 1.0
    kappa1: list[PositiveFloat] = Field(default_factory=lambda: [1.0], min_length=1)
    kappa2: list[PositiveFloat] = Field(default_factory=lambda: [1.0], min_length=1)

    @model_validator(mode="after")
    def check_regions(self):
        if len(self.kappa1) != len(self.kappa2):
            raise ValueError("kappa1 and kappa2 must list the same number of regions")
        return self

    @classmethod
    def homogeneous(cls, c: float = 1.0) -> "Material":
        return cls(c=c, kappa1=[1.0], kappa2=[1.0])

    @property
    def n_regions(self) -> int:
        return len(self.kappa1)

    def kappa(self, region: int) -> tuple[float, float]:
        self._check_region(region)
        return self.kappa1[region], self.kappa2[region]

    def wave_speed(self, region: int) -> float:
        k1, k2 = self.kappa(region)
        return self.c / float(np.sqrt(k1 * k2))

    def impedance(self, region: int) -> float:
        """Matched (reflectionless) boundary parameter sqrt(kappa1/kappa2)"""
        k1, k2 = self.kappa(region)
        return float(np.sqrt(k1 / k2))

    def is_unit(self, region: int) -> bool:
        return self.kappa(region) == (1.0, 1.0)

    def cell_speeds(self, mesh: SpatialMesh) -> np.ndarray:
        self.check_mesh(mesh)
        k1 = np.asarray(self.kappa1)[mesh.region_array]
        k2 = np.asarray(self.kappa2)[mesh.region_array]
        return self.c / np.sqrt(k1 * k2)

    def check_mesh(self, mesh: SpatialMesh) -> None:
        if mesh.regions and max(mesh.regions) >= self.n_regions:
            raise ConfigurationError(
                f"mesh references region {max(mesh.regions)} but the material defines {self.n_regions}"
            )

    def _check_region(self, region: int) -> None:
        if not 0 <= region < self.n_regions:
            raise ConfigurationError(f"unknown material region {region}", n_regions=self.n_regions)


@dataclass(frozen=True, slots=True)
class Tent:
    """One space-time tent

    The pole stands at x from t_bottom to t_bottom + k. p_l * k is the height of the apex above the left
    neighbour vertex, so the left corner sits at (x - h_l, t_bottom + (1 - p_l) * k); likewise on the right.
    Node indices refer to the owning TentMesh and are -1 where a side is missing or the tent is free standing.
    """

    center_vertex: int
    tent_type: TentType
    k: float
    h_l: float
    h_r: float
    p_l: float = 1.0
    p_r: float = 1.0
    t_bottom: float = 0.0
    x: float = 0.0
    region_l: int = 0
    region_r: int = 0
    left_node: int = -1
    bottom_node: int = -1
    right_node: int = -1
    apex_node: int = -1

    @property
    def has_left(self) -> bool:
        return self.tent_type != TentType.L

    @property
    def has_right(self) -> bool:
        return self.tent_type != TentType.R

    @property
    def t_apex(self) -> float:
        return self.t_bottom + self.k

    @property
    def left_time(self) -> float:
        return self.t_apex - self.p_l * self.k

    @property
    def right_time(self) -> float:
        return self.t_apex - self.p_r * self.k

    @property
    def area(self) -> float:
        return 0.5 * self.k * ((self.h_l if self.has_left else 0.0) + (self.h_r if self.has_right else 0.0))

    @property
    def triangle_count(self) -> int:
        return 2 if self.tent_type == TentType.I else 1

    def validate(self) -> None:
        if not np.isfinite(self.k) or self.k <= 0.0:
            raise GeometryError(f"tent pole height must be positive, got {self.k}", center=self.center_vertex)
        if self.h_l < 0.0 or self.h_r < 0.0:
            raise GeometryError("tent half-widths must be non-negative", center=self.center_vertex)
        if not (np.isfinite(self.p_l) and np.isfinite(self.p_r)):
            raise GeometryError("tent slopes must be finite", center=self.center_vertex)
        expected = {
            TentType.I: self.h_l > 0.0 and self.h_r > 0.0,
            TentType.L: self.h_l == 0.0 and self.h_r > 0.0,
            TentType.R: self.h_r == 0.0 and self.h_l > 0.0,
        }[self.tent_type]
        if not expected:
            raise GeometryError(
                f"half-widths h_l={self.h_l}, h_r={self.h_r} do not match a type {self.tent_type} tent",
                center=self.center_vertex,
            )

    def corners(self) -> dict[str, np.ndarray]:
        """Space-time coordinates (x, t) of the tent vertices keyed by l, b, r, t"""
        corners = {
            "b": np.array([self.x, self.t_bottom]),
            "t": np.array([self.x, self.t_apex]),
        }
        if self.has_left:
            corners["l"] = np.array([self.x - self.h_l, self.left_time])
        if self.has_right:
            corners["r"] = np.array([self.x + self.h_r, self.right_time])
        return corners

    def triangles(self) -> list[tuple[np.ndarray, int]]:
        """Counter-clockwise triangles with their region index"""
        corners = self.corners()
        triangles = []
        if self.has_left:
            triangles.append((np.stack([corners["l"], corners["b"], corners["t"]]), self.region_l))
        if self.has_right:
            triangles.append((np.stack([corners["b"], corners["r"], corners["t"]]), self.region_r))
        return triangles


def cfl_ratios(tent: Tent, material: Material) -> tuple[float | None, float | None]:
    """|c_loc k p / h| per side, None on a missing side"""
    tent.validate()
    left = right = None
    if tent.has_left:
        left = abs(material.wave_speed(tent.region_l) * tent.k * tent.p_l / tent.h_l)
    if tent.has_right:
        right = abs(material.wave_speed(tent.region_r) * tent.k * tent.p_r / tent.h_r)
    return left, right


def cfl_admissible(tent: Tent, material: Material, margin: float = DEFAULT_MARGIN) -> bool:
    if not 0.0 < margin <= 1.0:
        raise ConfigurationError(f"margin must lie in (0, 1], got {margin}")
    return all(ratio <= margin for ratio in cfl_ratios(tent, material) if ratio is not None)


def _side_reach(mesh: SpatialMesh, material: Material, cell: int, margin: float) -> float:
    """Largest admissible time difference across a cell"""
    return margin * (mesh.vertices[cell + 1] - mesh.vertices[cell]) / material.wave_speed(mesh.regions[cell])


def max_pole_height(
    mesh: SpatialMesh,
    center_vertex: int,
    front_times: np.ndarray,
    material: Material,
    margin: float = DEFAULT_MARGIN,
) -> float:
    """Largest k for which the tent at center_vertex over the given front is admissible"""
    if not 0.0 < margin <= 1.0:
        raise ConfigurationError(f"margin must lie in (0, 1], got {margin}")
    if not 0 <= center_vertex < mesh.n_vertices:
        raise GeometryError(f"vertex {center_vertex} is not part of the mesh", n_vertices=mesh.n_vertices)
    if len(front_times) != mesh.n_vertices:
        raise GeometryError("front_times must give one time per mesh vertex", n_vertices=mesh.n_vertices)

    tau = front_times[center_vertex]
    bounds = []
    if center_vertex > 0:
        bounds.append(_side_reach(mesh, material, center_vertex - 1, margin) + front_times[center_vertex - 1] - tau)
    if center_vertex < mesh.n_cells:
        bounds.append(_side_reach(mesh, material, center_vertex, margin) + front_times[center_vertex + 1] - tau)
    k = float(min(bounds))
    if k <= 0.0:
        raise GeometryError(
            f"no admissible pole at vertex {center_vertex}: a neighbour lags too far behind", center=center_vertex
        )
    return k


def pitch_tent(mesh: SpatialMesh, center_vertex: int, front_times: np.ndarray, apex: float) -> Tent:
    """Tent over the current front at center_vertex whose apex sits at time apex"""
    n_cells = mesh.n_cells
    tau = float(front_times[center_vertex])
    k = apex - tau
    if center_vertex == 0:
        tent_type = TentType.L
    elif center_vertex == n_cells:
        tent_type = TentType.R
    else:
        tent_type = TentType.I

    h_l = p_l = 0.0
    h_r = p_r = 0.0
    region_l = region_r = 0
    if tent_type != TentType.L:
        h_l = mesh.vertices[center_vertex] - mesh.vertices[center_vertex - 1]
        p_l = (apex - front_times[center_vertex - 1]) / k
        region_l = mesh.regions[center_vertex - 1]
    if tent_type != TentType.R:
        h_r = mesh.vertices[center_vertex + 1] - mesh.vertices[center_vertex]
        p_r = (apex - front_times[center_vertex + 1]) / k
        region_r = mesh.regions[center_vertex]

    return Tent(
        center_vertex=center_vertex,
        tent_type=tent_type,
        k=k,
        h_l=h_l,
        h_r=h_r,
        p_l=float(p_l),
        p_r=float(p_r),
        t_bottom=tau,
        x=mesh.vertices[center_vertex],
        region_l=region_l,
        region_r=region_r,
    )
