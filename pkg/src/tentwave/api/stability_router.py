import math
from typing import Annotated

from fastapi import APIRouter, Query
from fastapi.responses import JSONResponse

from src.tentwave.api.schema import StabilityQuery, StabilityResponse
from src.tentwave.core.stability import spectral_sweep
from src.tentwave.errors import TentwaveError
from src.tentwave.utils.constants import HTTP_UNPROCESSABLE_ENTITY
from src.tentwave.utils.error_handlers import error_payload

stability_router = APIRouter()


@stability_router.get(
    "/stability",
    response_model=StabilityResponse,
    summary="Von Neumann sweep",
    description="Spectral radius, power growth and verdict of the uniform grid tent scheme at a Courant number",
    tags=["stability"],
)
def get_stability(query: Annotated[StabilityQuery, Query()]):
    try:
        summary = spectral_sweep(query.ac, 1.0, query.thetas).summary()
    except TentwaveError as e:
        return JSONResponse(status_code=HTTP_UNPROCESSABLE_ENTITY, content=error_payload(e))
    # JSON has no infinity: overflowing powers are reported as null
    if not math.isfinite(summary["max_power_norm"]):
        summary["max_power_norm"] = None
    return summary
