"""Per-tent Petrov-Galerkin solves

On a tent K the unknowns are a constant u in R^2 and the apex coefficient of z_o = alpha * zeta, where zeta is
the hat function of the apex. The equations

    -int_K u . A w + int_dK D(alpha zeta) . w = int_K f . w - int_dK D z_i . w

are tested with the constants and with e_1 zeta, e_2 zeta. A boundary tent restricts alpha to the direction q
allowed by its impedance condition and tests with q instead of both constants.
"""

from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, NonNegativeFloat
from scipy.linalg import lu_factor, lu_solve

from src.tentwave.config import config_service
from src.tentwave.core.mesh1d import Material, Tent, TentType
from src.tentwave.core.quadrature import triangle_midpoint_rule
from src.tentwave.errors import CFLViolationError, GeometryError, SingularSystemError
from src.tentwave.utils.constants import KIND_INTERIOR, KIND_LEFT, KIND_RIGHT

Source = Callable[[np.ndarray, np.ndarray], np.ndarray]

# local node order
L, B, R, T = 0, 1, 2, 3

_EDGE_MASS = np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])
_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


class ConstraintKind(StrEnum):
    NONE = "none"
    LEFT = "left_boundary"
    RIGHT = "right_boundary"


class BoundaryConstraint(BaseModel):
    """Impedance condition z u1 - u2 = 0 (left end) or z u1 + u2 = 0 (right end); z = 0 is Dirichlet"""

    model_config = ConfigDict(frozen=True)

    kind: ConstraintKind = ConstraintKind.NONE
    z: NonNegativeFloat = 1.0

    @classmethod
    def interior(cls) -> "BoundaryConstraint":
        return cls(kind=ConstraintKind.NONE)

    @classmethod
    def left(cls, z: float) -> "BoundaryConstraint":
        return cls(kind=ConstraintKind.LEFT, z=z)

    @classmethod
    def right(cls, z: float) -> "BoundaryConstraint":
        return cls(kind=ConstraintKind.RIGHT, z=z)

    @classmethod
    def for_tent(cls, tent: Tent, z_left: float = 1.0, z_right: float = 1.0) -> "BoundaryConstraint":
        if tent.tent_type == TentType.L:
            return cls.left(z_left)
        if tent.tent_type == TentType.R:
            return cls.right(z_right)
        return cls.interior()

    @property
    def direction(self) -> np.ndarray:
        """Apex values allowed by the condition, as columns"""
        if self.kind == ConstraintKind.LEFT:
            return np.array([[1.0], [self.z]])
        if self.kind == ConstraintKind.RIGHT:
            return np.array([[1.0], [-self.z]])
        return np.eye(2)

    def residual(self, apex: np.ndarray) -> float:
        if self.kind == ConstraintKind.LEFT:
            return float(self.z * apex[0] - apex[1])
        if self.kind == ConstraintKind.RIGHT:
            return float(self.z * apex[0] + apex[1])
        return 0.0


@dataclass(frozen=True)
class LocalSystem:
    """matrix @ (u1, u2, alpha...) = rhs, where rhs = inflow_operator @ inflow.ravel() + source_vector"""

    matrix: np.ndarray
    rhs: np.ndarray
    inflow_operator: np.ndarray
    source_vector: np.ndarray
    apex_basis: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class TentSolution:
    apex: np.ndarray
    u_const: np.ndarray
    condition: float


@dataclass(frozen=True)
class _Layout:
    coords: np.ndarray
    edges: tuple[tuple[int, int, int], ...]
    triangles: tuple[tuple[tuple[int, int, int], int], ...]


def _layout(tent: Tent) -> _Layout:
    corners = tent.corners()
    coords = np.stack([corners.get(name, corners["b"]) for name in ("l", "b", "r", "t")])
    rl, rr = tent.region_l, tent.region_r
    if tent.tent_type == TentType.I:
        edges = ((L, B, rl), (B, R, rr), (R, T, rr), (T, L, rl))
        triangles = (((L, B, T), rl), ((B, R, T), rr))
    elif tent.tent_type == TentType.L:
        edges = ((B, R, rr), (R, T, rr), (T, B, rr))
        triangles = (((B, R, T), rr),)
    else:
        edges = ((L, B, rl), (B, T, rl), (T, L, rl))
        triangles = (((L, B, T), rl),)
    return _Layout(coords=coords, edges=edges, triangles=triangles)


def boundary_matrix(direction: np.ndarray, kappa: tuple[float, float], c: float) -> np.ndarray:
    """D for the outward normal of an edge traversed counter-clockwise along direction (dx, dt)

    The normal is left unnormalised, so the edge integral becomes an integral over the unit parameter.
    """
    nu_x, nu_t = direction[1], -direction[0]
    return np.array([[nu_t * kappa[0], -c * nu_x], [-c * nu_x, nu_t * kappa[1]]])


def _edge_form_matrix(layout: _Layout, material: Material) -> np.ndarray:
    """Q with int_dK D z . w = z_flat @ Q @ w_flat, nodal values flattened as (node, component)"""
    q = np.zeros((8, 8))
    for a, b, region in layout.edges:
        d = boundary_matrix(layout.coords[b] - layout.coords[a], material.kappa(region), material.c)
        for i, ni in enumerate((a, b)):
            for j, nj in enumerate((a, b)):
                q[2 * ni : 2 * ni + 2, 2 * nj : 2 * nj + 2] += _EDGE_MASS[i, j] * d.T
    return q


def _apply_a(layout: _Layout, material: Material, w: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """(area, A w) for every triangle; A w = diag(kappa) dw/dt - c S dw/dx is constant on each"""
    out = []
    for nodes, region in layout.triangles:
        p = layout.coords[list(nodes)]
        jac = np.stack([p[1] - p[0], p[2] - p[0]])
        grad = np.linalg.solve(jac, np.stack([w[nodes[1]] - w[nodes[0]], w[nodes[2]] - w[nodes[0]]]))
        area = 0.5 * abs(np.linalg.det(jac))
        aw = np.asarray(material.kappa(region)) * grad[1] - material.c * (_SWAP @ grad[0])
        out.append((area, aw))
    return out


def _test_functions(apex_basis: np.ndarray) -> list[np.ndarray]:
    tests = []
    if apex_basis.shape[1] == 2:
        for j in range(2):
            tests.append(np.tile(np.eye(2)[j], (4, 1)))
    else:
        tests.append(np.tile(apex_basis[:, 0], (4, 1)))
    for j in range(2):
        bump = np.zeros((4, 2))
        bump[T, j] = 1.0
        tests.append(bump)
    return tests


def _check_constraint(tent: Tent, constraint: BoundaryConstraint) -> None:
    expected = {
        TentType.I: ConstraintKind.NONE,
        TentType.L: ConstraintKind.LEFT,
        TentType.R: ConstraintKind.RIGHT,
    }[tent.tent_type]
    if constraint.kind != expected:
        raise GeometryError(
            f"a type {tent.tent_type} tent needs a {expected} constraint, got {constraint.kind}",
            center=tent.center_vertex,
        )


def assemble_tent_system(
    tent: Tent,
    inflow: np.ndarray | None,
    material: Material,
    source: Source | None = None,
    constraint: BoundaryConstraint | None = None,
) -> LocalSystem:
    tent.validate()
    constraint = constraint or BoundaryConstraint.for_tent(tent)
    _check_constraint(tent, constraint)

    layout = _layout(tent)
    apex_basis = constraint.direction
    tests = _test_functions(apex_basis)
    n = len(tests)

    matrix = np.zeros((n, n))
    inflow_operator = np.zeros((n, 6))
    source_vector = np.zeros(n)

    q = _edge_form_matrix(layout, material)
    tests_flat = np.stack([w.ravel() for w in tests])
    flux = tests_flat @ q.T
    matrix[:, 2:] = flux[:, 6:8] @ apex_basis
    # rows of missing corners in q are zero
    inflow_operator[:] = -flux[:, :6]

    for m, w in enumerate(tests):
        for area, aw in _apply_a(layout, material, w):
            matrix[m, :2] -= area * aw
        if source is not None:
            for nodes, _region in layout.triangles:
                vertices = layout.coords[list(nodes)]
                points, weights = triangle_midpoint_rule(vertices)
                f = np.asarray(source(points[:, 0], points[:, 1]), dtype=float).reshape(2, 3)
                w_mid = 0.5 * (w[list(nodes)] + np.roll(w[list(nodes)], -1, axis=0))
                source_vector[m] += float(np.sum(weights * np.sum(f.T * w_mid, axis=1)))

    z_in = _inflow_vector(tent, inflow)
    return LocalSystem(
        matrix=matrix,
        rhs=inflow_operator @ z_in + source_vector,
        inflow_operator=inflow_operator,
        source_vector=source_vector,
        apex_basis=apex_basis,
    )


def _inflow_vector(tent: Tent, inflow: np.ndarray | None) -> np.ndarray:
    """Flattened (l, b, r) inflow values with missing sides zeroed"""
    if inflow is None:
        return np.zeros(6)
    z = np.array(inflow, dtype=float).reshape(3, 2)
    if not tent.has_left:
        z[L] = 0.0
    if not tent.has_right:
        z[R] = 0.0
    return z.ravel()


def _factor(matrix: np.ndarray, condition_limit: float | None) -> tuple[tuple[np.ndarray, np.ndarray], float]:
    limit = condition_limit if condition_limit is not None else config_service.singular_condition_limit
    condition = float(np.linalg.cond(matrix))
    if not np.isfinite(condition) or condition > limit:
        raise SingularSystemError("local tent system is singular", condition=condition)
    factors = lu_factor(matrix)
    pivots = np.abs(np.diag(factors[0]))
    if pivots.min() <= np.finfo(float).eps * pivots.max():
        raise SingularSystemError("local tent system has a vanishing pivot", condition=condition)
    return factors, condition


def is_unisolvent(tent: Tent, material: Material, constraint: BoundaryConstraint | None = None) -> bool:
    """Pivot based nonsingularity check of the assembled tent matrix"""
    matrix = assemble_tent_system(tent, None, material, constraint=constraint).matrix
    pivots = np.abs(np.diag(lu_factor(matrix)[0]))
    return bool(np.all(np.isfinite(pivots)) and pivots.min() > np.finfo(float).eps * matrix.shape[0] * pivots.max())


def solve_tent_assembled(
    tent: Tent,
    inflow: np.ndarray,
    material: Material,
    source: Source | None = None,
    constraint: BoundaryConstraint | None = None,
    condition_limit: float | None = None,
) -> TentSolution:
    system = assemble_tent_system(tent, inflow, material, source, constraint)
    factors, condition = _factor(system.matrix, condition_limit)
    solution = lu_solve(factors, system.rhs)
    return TentSolution(apex=system.apex_basis @ solution[2:], u_const=solution[:2], condition=condition)


def closed_form_weights(tent: Tent, c: float) -> tuple[float, float]:
    tent.validate()
    k = tent.k
    if tent.tent_type == TentType.I:
        width = tent.h_l + tent.h_r
        dp = tent.p_r - tent.p_l
        denominator = width**2 - (c * k * dp) ** 2
        if denominator <= 0.0:
            raise CFLViolationError("tent violates the CFL condition", center=tent.center_vertex)
        return width * k / denominator, c * k**2 * dp / denominator
    if tent.tent_type == TentType.L:
        denominator = 2.0 * (c * k * (1.0 - tent.p_r) + tent.h_r)
        if denominator <= 0.0:
            raise CFLViolationError("boundary tent violates the CFL condition", center=tent.center_vertex)
        return k / denominator, k / denominator
    denominator = 2.0 * (c * k * (1.0 - tent.p_l) + tent.h_l)
    if denominator <= 0.0:
        raise CFLViolationError("boundary tent violates the CFL condition", center=tent.center_vertex)
    return k / denominator, -k / denominator


def closed_form_operators(
    kind: np.ndarray,
    k: np.ndarray,
    h_l: np.ndarray,
    h_r: np.ndarray,
    p_l: np.ndarray,
    p_r: np.ndarray,
    c: float,
) -> np.ndarray:
    """Homogeneous propagation maps (m, 2, 6) for arrays of tents"""
    kind = np.asarray(kind)
    k = np.asarray(k, dtype=float)
    h_l, h_r = np.asarray(h_l, dtype=float), np.asarray(h_r, dtype=float)
    p_l, p_r = np.asarray(p_l, dtype=float), np.asarray(p_r, dtype=float)
    m = kind.shape[0]
    w1 = np.empty(m)
    w2 = np.empty(m)

    interior = kind == KIND_INTERIOR
    width = h_l[interior] + h_r[interior]
    dp = p_r[interior] - p_l[interior]
    denominator = width**2 - (c * k[interior] * dp) ** 2
    left = kind == KIND_LEFT
    left_den = 2.0 * (c * k[left] * (1.0 - p_r[left]) + h_r[left])
    right = kind == KIND_RIGHT
    right_den = 2.0 * (c * k[right] * (1.0 - p_l[right]) + h_l[right])
    if np.any(denominator <= 0.0) or np.any(left_den <= 0.0) or np.any(right_den <= 0.0):
        raise CFLViolationError("tent violates the CFL condition")

    w1[interior] = width * k[interior] / denominator
    w2[interior] = c * k[interior] ** 2 * dp / denominator
    w1[left] = k[left] / left_den
    w2[left] = w1[left]
    w1[right] = k[right] / right_den
    w2[right] = -w1[right]

    gain = c * (w1[:, None, None] * _SWAP + w2[:, None, None] * np.eye(2))
    eye = np.broadcast_to(np.eye(2), (m, 2, 2))
    ops = np.zeros((m, 2, 6))
    ops[:, :, 2:4] = eye
    ops[interior, :, 0:2] = -gain[interior]
    ops[interior, :, 4:6] = gain[interior]
    ops[left, :, 2:4] -= gain[left]
    ops[left, :, 4:6] = gain[left]
    ops[right, :, 0:2] = -gain[right]
    ops[right, :, 2:4] += gain[right]
    return ops


def _scalar_operator(tent: Tent, c: float) -> np.ndarray:
    tent.validate()
    return closed_form_operators(
        np.array([tent.tent_type.code]),
        np.array([tent.k]),
        np.array([tent.h_l]),
        np.array([tent.h_r]),
        np.array([tent.p_l]),
        np.array([tent.p_r]),
        c,
    )[0]


def solve_tent_closed_form(tent: Tent, inflow: np.ndarray, c: float) -> np.ndarray:
    """Apex values (U^t, V^t) of a homogeneous, source free tent

    Interior:   z_t = z_b + c (w1 S + w2 I)(z_r - z_l)
    Left end:   z_t = z_b + c (w1 S + w2 I)(z_r - z_b)
    Right end:  z_t = z_b + c (w1 S + w2 I)(z_b - z_l)
    """
    w1, w2 = closed_form_weights(tent, c)
    z = _inflow_vector(tent, inflow).reshape(3, 2)
    gain = c * (w1 * _SWAP + w2 * np.eye(2))
    if tent.tent_type == TentType.I:
        return z[B] + gain @ (z[R] - z[L])
    if tent.tent_type == TentType.L:
        return z[B] + gain @ (z[R] - z[B])
    return z[B] + gain @ (z[B] - z[L])


def closed_form_applies(tent: Tent, material: Material) -> bool:
    """Interior tents over unit material

    The boundary closed form holds only for inflow that already meets the end condition at the bottom
    vertex, which marched data does not in general; boundary tents are assembled.
    """
    return tent.tent_type == TentType.I and material.is_unit(tent.region_l) and material.is_unit(tent.region_r)


def propagation_operator(
    tent: Tent,
    material: Material,
    constraint: BoundaryConstraint | None = None,
    use_closed_form: bool = False,
    condition_limit: float | None = None,
) -> np.ndarray:
    """Linear map (2, 6) from the flattened (l, b, r) inflow values to the apex values of a source free tent"""
    constraint = constraint or BoundaryConstraint.for_tent(tent)
    if use_closed_form and closed_form_applies(tent, material):
        return _scalar_operator(tent, material.c)
    system = assemble_tent_system(tent, None, material, constraint=constraint)
    factors, _ = _factor(system.matrix, condition_limit)
    coefficients = lu_solve(factors, system.inflow_operator)
    return system.apex_basis @ coefficients[2:]
