"""Finite difference references on uniform grids

Two schemes share the lattice x_m = m h/2 on [0, S] with a = k/h:

* CTCS (Yee): U lives on the even lattice points x_j = j h at t_n = n k, V on the odd points x_{j+1/2} at
  t_{n+1/2}. Both are advanced with centered differences.
* Direct leapfrog: U and V live together on every lattice point, with the two parities staggered by k/2 in
  time. This is the recursion the tent scheme reduces to on the uniform stencil mesh.
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, model_validator

from src.tentwave.core.local_solver import solve_tent_closed_form
from src.tentwave.core.marcher import SpatialTrace
from src.tentwave.core.mesh1d import Tent, TentType
from src.tentwave.core.problems import ProblemSpec
from src.tentwave.core.quadrature import composite_gauss
from src.tentwave.errors import CFLViolationError, ConfigurationError
from src.tentwave.utils.constants import DEFAULT_GAUSS_POINTS, TIME_TOLERANCE
from src.tentwave.utils.logging_utils import LogContext

Bootstrap = Literal["exact", "taylor"]
LeapfrogBootstrap = Literal["tent", "exact"]


class UniformGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    length: float = 1.0
    h: float
    k: float
    c: float = 1.0
    staggered: bool = True

    @model_validator(mode="after")
    def check_grid(self):
        if self.h <= 0.0 or self.k <= 0.0 or self.length <= 0.0:
            raise ValueError("length, h and k must be positive")
        n = self.length / self.h
        if abs(n - round(n)) > 1e-9 * n:
            raise ValueError(f"h={self.h} does not divide the domain length {self.length}")
        if abs(self.courant) >= 1.0:
            raise CFLViolationError(f"|a*c| = {abs(self.courant)} is not below 1", h=self.h, k=self.k, c=self.c)
        return self

    @classmethod
    def fitted(cls, length: float, h: float, k_ratio: float, final_time: float, c: float = 1.0, **kwargs):
        """Grid whose time step divides final_time and does not exceed k_ratio * h"""
        n_steps = int(np.ceil(final_time / (k_ratio * h) - TIME_TOLERANCE))
        return cls(length=length, h=h, k=final_time / n_steps, c=c, **kwargs)

    @property
    def a(self) -> float:
        return self.k / self.h

    @property
    def courant(self) -> float:
        return self.a * self.c

    @property
    def n_cells(self) -> int:
        return round(self.length / self.h)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_cells + 1)

    @property
    def x_half(self) -> np.ndarray:
        x = self.x
        return 0.5 * (x[:-1] + x[1:])

    @property
    def lattice(self) -> np.ndarray:
        return np.linspace(0.0, self.length, 2 * self.n_cells + 1)

    def steps_to(self, t: float) -> int:
        n = round(t / self.k)
        if abs(n * self.k - t) > 1e-9 * max(t, self.k):
            raise ConfigurationError(f"time {t} is not a multiple of the time step {self.k}", k=self.k)
        return n


def _require_unit_material(problem: ProblemSpec, grid: UniformGrid) -> None:
    material = problem.material
    if material.n_regions != 1 or not material.is_unit(0):
        raise ConfigurationError("uniform grid schemes need a homogeneous material with kappa = 1")
    if material.c != grid.c:
        raise ConfigurationError(f"grid wave speed {grid.c} differs from the material's {material.c}")


def _l2_on_grid(
    grid: UniformGrid, u: np.ndarray, v: np.ndarray, x_v: np.ndarray, problem: ProblemSpec, t: float
) -> float:
    """L2 error of the piecewise linear interpolants of U (on grid.x) and V (on x_v)"""
    points, weights = composite_gauss(grid.x, DEFAULT_GAUSS_POINTS)
    exact = problem.exact_values(points, t)
    e1 = np.interp(points, grid.x, u) - exact[:, 0]
    e2 = np.interp(points, x_v, v) - exact[:, 1]
    return float(np.sqrt(np.sum(weights * (e1**2 + e2**2))))


@dataclass(frozen=True)
class CTCSResult:
    grid: UniformGrid
    times: np.ndarray
    errors: np.ndarray
    u: np.ndarray
    v: np.ndarray
    snapshots: dict[float, SpatialTrace] = field(default_factory=dict)

    def rows(self) -> list[list[float]]:
        return np.column_stack([self.times, self.errors]).tolist()


def ctcs_bootstrap(grid: UniformGrid, problem: ProblemSpec, bootstrap: Bootstrap) -> np.ndarray:
    """V at t = -k/2 on the half points"""
    x_half = grid.x_half
    if bootstrap == "exact":
        return problem.exact_values(x_half, -0.5 * grid.k)[:, 1]
    if bootstrap == "taylor":
        u0 = problem.initial_values(grid.x)
        v0 = problem.initial_values(x_half)[:, 1]
        # dV/dt = c dU/dx, one backward half step
        return v0 - 0.5 * grid.courant * np.diff(u0[:, 0])
    raise ConfigurationError(f"unknown CTCS bootstrap '{bootstrap}'")


def ctcs_run(
    grid: UniformGrid,
    problem: ProblemSpec,
    bootstrap: Bootstrap = "exact",
    every: int = 2,
    final_time: float | None = None,
    snapshot_times: list[float] | None = None,
) -> CTCSResult:
    """Yee scheme with impedance boundaries; errors at every `every`-th step and at the final step

    Interior:  V^{n+1/2}_{j+1/2} = V^{n-1/2}_{j+1/2} + a c (U^n_{j+1} - U^n_j)
               U^{n+1}_j = U^n_j + a c (V^{n+1/2}_{j+1/2} - V^{n+1/2}_{j-1/2})
    The ghost value V_{-1/2} is eliminated with z0 u1 - u2 = 0 taken at x = 0 and averaged over t_n, t_{n+1}:
               U^{n+1}_0 = ((1 - a c z0) U^n_0 + 2 a c V_{1/2}) / (1 + a c z0)
    and with z1 u1 + u2 = 0 at x = S:
               U^{n+1}_N = ((1 - a c z1) U^n_N - 2 a c V_{N-1/2}) / (1 + a c z1)
    Snapshots are taken at the step nearest to each requested time, with V averaged to t_n and
    interpolated onto the U points.
    """
    _require_unit_material(problem, grid)
    if every < 1:
        raise ConfigurationError(f"error sampling interval must be at least 1, got {every}")
    n_steps = grid.steps_to(problem.final_time if final_time is None else final_time)
    ac = grid.courant
    z0, z1 = problem.bc_left, problem.bc_right
    with_errors = problem.exact is not None

    u = problem.initial_values(grid.x)[:, 0].copy()
    v_prev = ctcs_bootstrap(grid, problem, bootstrap)
    times, errors = [], []
    wanted = {round(t / grid.k): t for t in snapshot_times or []}
    snapshots = {}
    with LogContext("ctcs_run", h=grid.h, steps=n_steps):
        for n in range(n_steps + 1):
            v_next = v_prev + ac * np.diff(u)
            if with_errors and (n % every == 0 or n == n_steps):
                t = n * grid.k
                times.append(t)
                errors.append(_l2_on_grid(grid, u, 0.5 * (v_prev + v_next), grid.x_half, problem, t))
            if n in wanted:
                v_here = np.interp(grid.x, grid.x_half, 0.5 * (v_prev + v_next))
                snapshots[wanted[n]] = SpatialTrace(t=n * grid.k, x=grid.x, u1=u.copy(), u2=v_here)
            if n == n_steps:
                break
            new = u.copy()
            new[1:-1] = u[1:-1] + ac * np.diff(v_next)
            new[0] = ((1.0 - ac * z0) * u[0] + 2.0 * ac * v_next[0]) / (1.0 + ac * z0)
            new[-1] = ((1.0 - ac * z1) * u[-1] - 2.0 * ac * v_next[-1]) / (1.0 + ac * z1)
            u, v_prev = new, v_next

    return CTCSResult(
        grid=grid,
        times=np.array(times),
        errors=np.array(errors),
        u=u,
        v=0.5 * (v_prev + v_next),
        snapshots=snapshots,
    )


@dataclass
class LeapfrogState:
    """Front of the direct leapfrog on the h/2 lattice; times are integer multiples of k/2"""

    grid: UniformGrid
    u: np.ndarray
    v: np.ndarray
    steps_at: np.ndarray
    step: int = 0
    history: list[np.ndarray] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.steps_at * (0.5 * self.grid.k)

    @property
    def values(self) -> np.ndarray:
        return np.stack([self.u, self.v], axis=1)


def _check_leapfrog_problem(grid: UniformGrid, problem: ProblemSpec) -> None:
    _require_unit_material(problem, grid)
    if problem.bc_left != 1.0 or problem.bc_right != 1.0:
        raise ConfigurationError("the direct leapfrog closes its ends with matched impedance only")
    if problem.source is not None:
        raise ConfigurationError("the direct leapfrog has no source term")


def leapfrog_start(grid: UniformGrid, problem: ProblemSpec, bootstrap: LeapfrogBootstrap = "tent") -> LeapfrogState:
    """Initial front; "exact" also lifts the even points to t = k/2 from the exact solution"""
    _check_leapfrog_problem(grid, problem)
    x = grid.lattice
    initial = problem.initial_values(x)
    state = LeapfrogState(
        grid=grid, u=initial[:, 0].copy(), v=initial[:, 1].copy(), steps_at=np.zeros(len(x), dtype=np.int64)
    )
    if bootstrap == "tent":
        return state
    if bootstrap != "exact":
        raise ConfigurationError(f"unknown leapfrog bootstrap '{bootstrap}'")
    even = np.arange(0, len(x), 2)
    lifted = problem.exact_values(x[even], 0.5 * grid.k)
    state.u[even], state.v[even] = lifted[:, 0], lifted[:, 1]
    state.steps_at[even] = 1
    state.step = 1
    return state


def _boundary_tent(state: LeapfrogState, center: int, rise: int) -> Tent:
    grid = state.grid
    half = 0.5 * grid.h
    pole = rise * 0.5 * grid.k
    if center == 0:
        neighbour = state.steps_at[1]
        p = (state.steps_at[0] + rise - neighbour) / rise
        return Tent(center_vertex=0, tent_type=TentType.L, k=pole, h_l=0.0, h_r=half, p_l=0.0, p_r=p)
    neighbour = state.steps_at[center - 1]
    p = (state.steps_at[center] + rise - neighbour) / rise
    return Tent(center_vertex=center, tent_type=TentType.R, k=pole, h_l=half, h_r=0.0, p_l=p, p_r=0.0)


def leapfrog_step(state: LeapfrogState) -> LeapfrogState:
    """Raise one parity of the lattice: by k/2 on the very first step, by k afterwards

    Interior points: U <- U + (c * pole / h)(V_right - V_left), V <- V + (c * pole / h)(U_right - U_left),
    which for pole = k is U^{n+1}_j = U^{n-1}_j + a c (V^n_{j+1} - V^n_{j-1}). The ends use the boundary
    tent closed form over the same stencil.
    """
    grid = state.grid
    n = len(state.u)
    parity = state.step % 2
    rise = 1 if state.step == 0 else 2
    coefficient = grid.c * rise * 0.5 * grid.k / grid.h

    centers = np.arange(parity, n, 2)
    interior = centers[(centers > 0) & (centers < n - 1)]
    u, v = state.u.copy(), state.v.copy()
    u[interior] = state.u[interior] + coefficient * (state.v[interior + 1] - state.v[interior - 1])
    v[interior] = state.v[interior] + coefficient * (state.u[interior + 1] - state.u[interior - 1])
    for end in (0, n - 1):
        if end % 2 != parity:
            continue
        tent = _boundary_tent(state, end, rise)
        nb = 1 if end == 0 else n - 2
        inflow = np.zeros((3, 2))
        inflow[1] = state.u[end], state.v[end]
        inflow[2 if end == 0 else 0] = state.u[nb], state.v[nb]
        u[end], v[end] = solve_tent_closed_form(tent, inflow, grid.c)

    steps_at = state.steps_at.copy()
    steps_at[centers] += rise
    return LeapfrogState(grid=grid, u=u, v=v, steps_at=steps_at, step=state.step + 1, history=state.history)


def leapfrog_run(
    grid: UniformGrid,
    problem: ProblemSpec,
    n_steps: int,
    bootstrap: LeapfrogBootstrap = "tent",
    keep_history: bool = False,
) -> LeapfrogState:
    state = leapfrog_start(grid, problem, bootstrap)
    while state.step < n_steps:
        state = leapfrog_step(state)
        if keep_history:
            state.history.append(state.values)
    logger.debug(f"Leapfrog reached step {state.step}", courant=grid.courant)
    return state
