"""Explicit tent-by-tent time marching and evaluation of the space-time solution"""

from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from loguru import logger

from src.tentwave.core.local_solver import (
    BoundaryConstraint,
    closed_form_applies,
    closed_form_operators,
    propagation_operator,
    solve_tent_assembled,
    solve_tent_closed_form,
)
from src.tentwave.core.problems import ProblemSpec
from src.tentwave.core.quadrature import gauss_legendre
from src.tentwave.core.tent_pitcher import TentMesh
from src.tentwave.errors import MeshingError, OrderingError, SnapshotRangeError, TentwaveError
from src.tentwave.utils.constants import (
    DEFAULT_GAUSS_POINTS,
    KIND_INTERIOR,
    KIND_LEFT,
    KIND_RIGHT,
    TIME_TOLERANCE,
)
from src.tentwave.utils.logging_utils import log_operation

Exact = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


class SpaceTimeField:
    """Piecewise-linear z_h over the tent mesh, evaluated along horizontal lines

    Over each spatial cell the tent edges crossing it form a stack of graphs ordered in time. Between two
    consecutive graphs lies a single triangle, so z_h is linear in t along any vertical line there.
    """

    def __init__(self, mesh: TentMesh, values: np.ndarray):
        self.mesh = mesh
        self.values = values
        self.x = mesh.mesh.x
        n_cells = mesh.mesh.n_cells
        nv = mesh.n_vertices

        order = np.arange(mesh.n_tents)
        with_left = mesh.kind != KIND_LEFT
        with_right = mesh.kind != KIND_RIGHT
        cells = np.concatenate([np.arange(n_cells), mesh.center[with_left] - 1, mesh.center[with_right]])
        left = np.concatenate([np.arange(n_cells), mesh.left_node[with_left], mesh.apex_node[with_right]])
        right = np.concatenate([np.arange(1, nv), mesh.apex_node[with_left], mesh.right_node[with_right]])
        rank = np.concatenate([np.full(n_cells, -1), order[with_left], order[with_right]])

        sort = np.lexsort((rank, cells))
        cells, left, right = cells[sort], left[sort], right[sort]
        self.counts = np.bincount(cells, minlength=n_cells)
        starts = np.concatenate([[0], np.cumsum(self.counts)[:-1]])
        position = np.arange(len(cells)) - starts[cells]
        width = int(self.counts.max())

        self.left = np.zeros((n_cells, width), dtype=np.int64)
        self.right = np.zeros((n_cells, width), dtype=np.int64)
        self.t_left = np.full((n_cells, width), np.inf)
        self.t_right = np.full((n_cells, width), np.inf)
        self.left[cells, position] = left
        self.right[cells, position] = right
        self.t_left[cells, position] = mesh.node_time[left]
        self.t_right[cells, position] = mesh.node_time[right]

    def check_time(self, t: float) -> None:
        t_end = self.mesh.t_final
        tol = TIME_TOLERANCE * max(1.0, t_end)
        if not -tol <= t <= t_end + tol:
            raise SnapshotRangeError(f"time {t} lies outside the meshed range [0, {t_end}]", t=t, t_end=t_end)

    def evaluate(self, t: float, xi: np.ndarray) -> np.ndarray:
        """Values (n_cells, len(xi), 2) at x = x_j + xi (x_{j+1} - x_j) on every cell j"""
        self.check_time(t)
        xi = np.asarray(xi, dtype=float)
        n_cells = len(self.counts)
        rows = np.arange(n_cells)[:, None]

        # edges below `low` lie under the line everywhere in the cell, edges from `high` on lie above it
        below_left = np.sum(self.t_left <= t, axis=1)
        below_right = np.sum(self.t_right <= t, axis=1)
        low = np.minimum(below_left, below_right)
        high = np.maximum(below_left, below_right)
        count = np.repeat(low[:, None], len(xi), axis=1)
        for w in range(int((high - low).max(initial=0))):
            idx = np.minimum(low + w, self.counts - 1)[:, None]
            heights = self.t_left[rows, idx] * (1.0 - xi) + self.t_right[rows, idx] * xi
            count += ((low + w < high)[:, None] & (heights <= t)).astype(np.int64)

        top = np.maximum(self.counts - 2, 0)[:, None]
        m0 = np.clip(count - 1, 0, top)
        m1 = np.minimum(m0 + 1, (self.counts - 1)[:, None])

        def along(m):
            heights = self.t_left[rows, m] * (1.0 - xi) + self.t_right[rows, m] * xi
            z = (
                self.values[self.left[rows, m]] * (1.0 - xi)[None, :, None]
                + self.values[self.right[rows, m]] * xi[None, :, None]
            )
            return heights, z

        e0, z0 = along(m0)
        e1, z1 = along(m1)
        gap = e1 - e0
        theta = np.clip(np.where(gap > 0.0, (t - e0) / np.where(gap > 0.0, gap, 1.0), 0.0), 0.0, 1.0)
        return z0 + theta[..., None] * (z1 - z0)

    def points(self, xi: np.ndarray) -> np.ndarray:
        h = np.diff(self.x)
        return self.x[:-1, None] + h[:, None] * np.asarray(xi)[None, :]


@dataclass(frozen=True)
class SpatialTrace:
    t: float
    x: np.ndarray
    u1: np.ndarray
    u2: np.ndarray

    def rows(self) -> list[list[float]]:
        return np.column_stack([self.x, self.u1, self.u2]).tolist()


@dataclass(frozen=True, eq=False)
class Solution:
    """Nodal values (U, V) at every space-time vertex of the tent mesh"""

    mesh: TentMesh
    problem: ProblemSpec
    values: np.ndarray
    u_const: np.ndarray | None = None

    @cached_property
    def field(self) -> SpaceTimeField:
        return SpaceTimeField(self.mesh, self.values)

    def initial_trace(self) -> np.ndarray:
        return self.values[: self.mesh.n_vertices]

    def to_nodal_document(self) -> dict:
        xy = self.mesh.node_coordinates()
        return {
            "nodes": [
                {"x": float(x), "t": float(t), "u1": float(u1), "u2": float(u2)}
                for (x, t), (u1, u2) in zip(xy, self.values, strict=True)
            ]
        }


def _tent_operators(
    mesh: TentMesh, problem: ProblemSpec, use_closed_form: bool, condition_limit: float | None
) -> np.ndarray:
    """Propagation maps of the first slab; stacked slabs are time translations of it"""
    m = mesh.slab_size
    material = problem.material
    kind = mesh.kind[:m]
    center = mesh.center[:m]
    regions = mesh.mesh.region_array
    n_cells = mesh.mesh.n_cells
    unit = np.array([material.is_unit(r) for r in range(material.n_regions)])

    left_unit = np.where(kind == KIND_LEFT, True, unit[regions[np.clip(center - 1, 0, n_cells - 1)]])
    right_unit = np.where(kind == KIND_RIGHT, True, unit[regions[np.clip(center, 0, n_cells - 1)]])
    # boundary tents are always assembled, see closed_form_applies
    fast = use_closed_form & (kind == KIND_INTERIOR) & left_unit & right_unit

    ops = np.empty((m, 2, 6))
    if np.any(fast):
        ops[fast] = closed_form_operators(
            kind[fast], mesh.k[:m][fast], mesh.h_l[:m][fast], mesh.h_r[:m][fast], mesh.p_l[:m][fast],
            mesh.p_r[:m][fast], material.c,
        )  # fmt: skip

    memo: dict[tuple, np.ndarray] = {}
    for i in np.flatnonzero(~fast):
        tent = mesh.tent(int(i))
        key = (tent.tent_type, tent.k, tent.h_l, tent.h_r, tent.p_l, tent.p_r, tent.region_l, tent.region_r)
        if key not in memo:
            constraint = BoundaryConstraint.for_tent(tent, problem.bc_left, problem.bc_right)
            try:
                memo[key] = propagation_operator(tent, material, constraint, condition_limit=condition_limit)
            except TentwaveError as e:
                e.details["tent_index"] = int(i)
                raise
        ops[i] = memo[key]
    logger.debug(f"Built {m} tent operators, {int(fast.sum())} closed form, {len(memo)} assembled")
    return ops


def _unresolved(resolved: np.ndarray, nodes: np.ndarray, tents: np.ndarray) -> None:
    ok = resolved[nodes].all(axis=1)
    if not ok.all():
        first = int(tents[np.flatnonzero(~ok)[0]])
        raise OrderingError(f"tent {first} reached before its inflow values were computed", tent_index=first)


@log_operation("march")
def march(
    mesh: TentMesh,
    problem: ProblemSpec,
    use_closed_form: bool = True,
    batched: bool = True,
    condition_limit: float | None = None,
) -> Solution:
    """Solve every tent in causal order

    Source free problems default to the level-batched sweep: tents of one causal level are independent and
    are advanced together through their propagation operators. A source, or batched=False, selects the
    sequential tent-by-tent solve.
    """
    if mesh.t_final < problem.final_time * (1.0 - TIME_TOLERANCE):
        raise MeshingError(
            f"tent mesh ends at t={mesh.t_final}, before the final time {problem.final_time}",
            t_final=mesh.t_final,
        )
    material = problem.material
    material.check_mesh(mesh.mesh)

    nv = mesh.n_vertices
    sentinel = mesh.n_nodes
    # the last row stays zero and stands in for missing corners (node index -1)
    values = np.zeros((mesh.n_nodes + 1, 2))
    values[:nv] = problem.initial_values(mesh.mesh.x)
    resolved = np.zeros(mesh.n_nodes + 1, dtype=bool)
    resolved[:nv] = True
    resolved[sentinel] = True

    inflow = np.stack([mesh.left_node, mesh.bottom_node, mesh.right_node], axis=1)
    inflow = np.where(inflow < 0, sentinel, inflow)
    u_const = None

    if batched and problem.source is None:
        ops = _tent_operators(mesh, problem, use_closed_form, condition_limit)
        op_index = np.arange(mesh.n_tents) % mesh.slab_size
        for group in mesh.level_groups():
            nodes = inflow[group]
            _unresolved(resolved, nodes, group)
            z = values[nodes].reshape(len(group), 6)
            apex = mesh.apex_node[group]
            values[apex] = np.einsum("mij,mj->mi", ops[op_index[group]], z)
            resolved[apex] = True
    else:
        u_const = np.full((mesh.n_tents, 2), np.nan)
        for i in range(mesh.n_tents):
            nodes = inflow[i]
            _unresolved(resolved, nodes[None, :], np.array([i]))
            tent = mesh.tent(i)
            constraint = BoundaryConstraint.for_tent(tent, problem.bc_left, problem.bc_right)
            try:
                if problem.source is None and use_closed_form and closed_form_applies(tent, material):
                    apex = solve_tent_closed_form(tent, values[nodes], material.c)
                else:
                    solved = solve_tent_assembled(
                        tent, values[nodes], material, problem.source, constraint, condition_limit
                    )
                    apex, u_const[i] = solved.apex, solved.u_const
            except TentwaveError as e:
                e.details["tent_index"] = i
                raise
            values[tent.apex_node] = apex
            resolved[tent.apex_node] = True

    return Solution(mesh=mesh, problem=problem, values=values[:-1].copy(), u_const=u_const)


def snapshot(solution: Solution, t: float) -> SpatialTrace:
    """Trace of z_h along the line at time t, sampled at the spatial vertices"""
    values = solution.field.evaluate(t, np.array([0.0, 1.0]))
    trace = np.concatenate([values[:, 0], values[-1:, 1]])
    return SpatialTrace(t=t, x=solution.field.x.copy(), u1=trace[:, 0], u2=trace[:, 1])


def _exact_values(solution: Solution, exact: Exact | None, x: np.ndarray, t: float) -> np.ndarray:
    if exact is None:
        return solution.problem.exact_values(x, t)
    u1, u2 = exact(x, np.broadcast_to(t, np.shape(x)))
    return np.stack([np.broadcast_to(u1, np.shape(x)), np.broadcast_to(u2, np.shape(x))], axis=-1)


def l2_error(solution: Solution, exact: Exact | None, t: float, n_gauss: int = DEFAULT_GAUSS_POINTS) -> float:
    """L2(0, S) norm of z_h(., t) - exact(., t) with an n_gauss point rule on every cell"""
    xi, weights = gauss_legendre(n_gauss)
    computed = solution.field.evaluate(t, xi)
    x = solution.field.points(xi)
    diff = computed - _exact_values(solution, exact, x, t)
    h = np.diff(solution.field.x)
    return float(np.sqrt(np.sum(h[:, None] * weights[None, :] * np.sum(diff**2, axis=-1))))


def error_history(solution: Solution, times: np.ndarray, exact: Exact | None = None) -> np.ndarray:
    return np.array([l2_error(solution, exact, float(t)) for t in times])


def error_times(solution: Solution, interval: float) -> np.ndarray:
    """Sample times 0, interval, 2 interval, ... up to the end of the mesh"""
    t_end = min(solution.mesh.t_final, solution.problem.final_time)
    n = int(np.floor(t_end / interval * (1.0 + TIME_TOLERANCE)))
    return np.minimum(np.arange(n + 1) * interval, t_end)


def peak_amplitude(
    solution: Solution, t: float, x_min: float, x_max: float, component: int = 0, samples_per_cell: int = 5
) -> float:
    """max |u_component| over x_min <= x <= x_max at time t"""
    xi = np.linspace(0.0, 1.0, samples_per_cell)
    values = solution.field.evaluate(t, xi)[..., component]
    x = solution.field.points(xi)
    window = (x >= x_min) & (x <= x_max)
    return float(np.max(np.abs(values[window]), initial=0.0))
