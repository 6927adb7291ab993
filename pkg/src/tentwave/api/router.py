from fastapi import APIRouter

from src.tentwave.api.health_router import health_router
from src.tentwave.api.stability_router import stability_router
from src.tentwave.api.tent_router import tent_router

core = APIRouter()

core.include_router(health_router)
core.include_router(stability_router)
core.include_router(tent_router)
