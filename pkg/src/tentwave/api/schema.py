from typing import Literal

from pydantic import BaseModel, Field

from src.tentwave.config import SolverDefaults
from src.tentwave.core.mesh1d import Material, Tent, TentType
from src.tentwave.utils.constants import DEFAULT_MARGIN, DEFAULT_THETA_COUNT


class HealthCheckResponse(BaseModel):
    version: str
    env: str
    timestamp: float
    solver: SolverDefaults


class StabilityQuery(BaseModel):
    ac: float = Field(..., gt=0.0)
    thetas: int = Field(default=DEFAULT_THETA_COUNT, ge=8, le=65536)


class StabilityResponse(BaseModel):
    courant: float
    n_theta: int
    power_cap: int
    max_spectral_radius: float
    max_power_norm: float | None
    min_abs_det_r: float
    verdict: Literal["stable", "marginal", "unstable"]


class TentGeometry(BaseModel):
    """Single tent as posted by a client; the pole stands at x over [t_bottom, t_bottom + k]"""

    tent_type: TentType
    k: float = Field(..., gt=0.0)
    h_l: float = Field(default=0.0, ge=0.0)
    h_r: float = Field(default=0.0, ge=0.0)
    p_l: float = 1.0
    p_r: float = 1.0
    t_bottom: float = 0.0
    x: float = 0.0
    region_l: int = Field(default=0, ge=0)
    region_r: int = Field(default=0, ge=0)

    def to_tent(self) -> Tent:
        return Tent(center_vertex=0, **self.model_dump())


class CFLRequest(BaseModel):
    tent: TentGeometry
    material: Material = Field(default_factory=Material)
    margin: float = Field(default=DEFAULT_MARGIN, gt=0.0, le=1.0)


class CFLResponse(BaseModel):
    admissible: bool
    ratio_left: float | None
    ratio_right: float | None
    margin: float
    max_pole_height: float


class SolveRequest(BaseModel):
    tent: TentGeometry
    material: Material = Field(default_factory=Material)
    inflow: list[tuple[float, float]] = Field(
        ..., min_length=3, max_length=3, description="(u1, u2) at the left, bottom and right corners"
    )
    z_left: float = Field(default=1.0, ge=0.0)
    z_right: float = Field(default=1.0, ge=0.0)
    use_closed_form: bool = False


class SolveResponse(BaseModel):
    apex: list[float]
    u_const: list[float] | None
    condition: float | None
    method: Literal["assembled", "closed_form"]
