import numpy as np
from fastapi import APIRouter
from fastapi.responses import JSONResponse
from loguru import logger

from src.tentwave.api.schema import CFLRequest, CFLResponse, SolveRequest, SolveResponse
from src.tentwave.core.local_solver import (
    BoundaryConstraint,
    closed_form_applies,
    solve_tent_assembled,
    solve_tent_closed_form,
)
from src.tentwave.core.mesh1d import SpatialMesh, Tent, cfl_admissible, cfl_ratios, max_pole_height
from src.tentwave.errors import TentwaveError
from src.tentwave.utils.constants import HTTP_UNPROCESSABLE_ENTITY
from src.tentwave.utils.error_handlers import error_payload

tent_router = APIRouter(prefix="/tents")


def _local_patch(tent: Tent) -> tuple[SpatialMesh, int, np.ndarray]:
    """Spatial mesh, center vertex and front times of the vertices a single tent spans"""
    vertices, regions, times = [tent.x], [], [tent.t_bottom]
    center = 0
    if tent.has_left:
        vertices.insert(0, tent.x - tent.h_l)
        regions.append(tent.region_l)
        times.insert(0, tent.left_time)
        center = 1
    if tent.has_right:
        vertices.append(tent.x + tent.h_r)
        regions.append(tent.region_r)
        times.append(tent.right_time)
    return SpatialMesh(vertices=vertices, regions=regions), center, np.array(times)


@tent_router.post("/cfl", response_model=CFLResponse, summary="Causality check of one tent", tags=["tents"])
def check_cfl(request: CFLRequest):
    try:
        tent = request.tent.to_tent()
        ratio_left, ratio_right = cfl_ratios(tent, request.material)
        mesh, center, front = _local_patch(tent)
        return CFLResponse(
            admissible=cfl_admissible(tent, request.material, request.margin),
            ratio_left=ratio_left,
            ratio_right=ratio_right,
            margin=request.margin,
            max_pole_height=max_pole_height(mesh, center, front, request.material, request.margin),
        )
    except TentwaveError as e:
        logger.warning(f"CFL check rejected: {e.message}")
        return JSONResponse(status_code=HTTP_UNPROCESSABLE_ENTITY, content=error_payload(e))


@tent_router.post("/solve", response_model=SolveResponse, summary="Apex values of one tent", tags=["tents"])
def solve_tent(request: SolveRequest):
    try:
        tent = request.tent.to_tent()
        tent.validate()
        inflow = np.asarray(request.inflow, dtype=float)
        constraint = BoundaryConstraint.for_tent(tent, request.z_left, request.z_right)
        if request.use_closed_form and closed_form_applies(tent, request.material):
            apex = solve_tent_closed_form(tent, inflow, request.material.c)
            return SolveResponse(apex=apex.tolist(), u_const=None, condition=None, method="closed_form")
        solution = solve_tent_assembled(tent, inflow, request.material, constraint=constraint)
        return SolveResponse(
            apex=solution.apex.tolist(),
            u_const=solution.u_const.tolist(),
            condition=solution.condition,
            method="assembled",
        )
    except TentwaveError as e:
        logger.warning(f"Tent solve rejected: {e.message}")
        return JSONResponse(status_code=HTTP_UNPROCESSABLE_ENTITY, content=error_payload(e))
