"""Quadrature rules shared by the marcher, the CTCS reference and the trace checks"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=64)
def _unit_gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    points, weights = leggauss(n)
    return 0.5 * (points + 1.0), 0.5 * weights


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [a, b]"""
    if n < 1:
        raise ValueError("a Gauss rule needs at least one point")
    points, weights = _unit_gauss(n)
    return a + (b - a) * points, (b - a) * weights


def composite_gauss(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule with n points on every panel [edges[i], edges[i+1]]"""
    edges = np.asarray(edges, dtype=float)
    points, weights = _unit_gauss(n)
    widths = np.diff(edges)
    nodes = edges[:-1, None] + widths[:, None] * points[None, :]
    return nodes.ravel(), (widths[:, None] * weights[None, :]).ravel()


def graded_panels(levels: int, ratio: float = 0.5) -> np.ndarray:
    """Panel edges [0, r^levels, ..., r, 1] refined geometrically towards 0"""
    if levels < 0:
        raise ValueError("levels must be non-negative")
    inner = ratio ** np.arange(levels, 0, -1, dtype=float)
    return np.concatenate([[0.0], inner, [1.0]])


def triangle_midpoint_rule(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Edge-midpoint rule on a triangle, exact for quadratics"""
    vertices = np.asarray(vertices, dtype=float)
    points = 0.5 * (vertices + np.roll(vertices, -1, axis=0))
    area = triangle_area(vertices)
    return points, np.full(3, area / 3.0)


def collapsed_triangle_rule(vertices: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Duffy-collapsed tensor Gauss rule on a triangle, exact for degree 2n-2"""
    vertices = np.asarray(vertices, dtype=float)
    points, weights = _unit_gauss(n)
    xi, eta = np.meshgrid(points, points, indexing="ij")
    w = np.outer(weights, weights) * (1.0 - xi)
    ref = np.stack([xi.ravel(), (eta * (1.0 - xi)).ravel()], axis=1)
    jac = np.column_stack([vertices[1] - vertices[0], vertices[2] - vertices[0]])
    mapped = vertices[0] + ref @ jac.T
    return mapped, w.ravel() * abs(np.linalg.det(jac))


def triangle_area(vertices: np.ndarray) -> float:
    (x0, t0), (x1, t1), (x2, t2) = np.asarray(vertices, dtype=float)
    return 0.5 * abs((x1 - x0) * (t2 - t0) - (x2 - x0) * (t1 - t0))
