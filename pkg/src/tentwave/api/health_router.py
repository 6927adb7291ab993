from time import time

from fastapi import APIRouter, Request
from loguru import logger

from src.tentwave.api.schema import HealthCheckResponse
from src.tentwave.config import config_service

health_router = APIRouter()


@health_router.api_route(
    "/health",
    methods=["GET", "POST"],
    response_model=HealthCheckResponse,
    summary="Health check",
    description="Service version, environment and the solver defaults in effect",
    tags=["health"],
)
def health(request: Request) -> HealthCheckResponse:
    logger.debug(f"Method: {request.method} on {request.url.path}")
    state = request.app.state
    return HealthCheckResponse(
        version=state.VERSION, env=state.env, timestamp=time(), solver=config_service.solver_defaults()
    )
