"""Quadrature checks of the trace inequalities and integration-by-parts identities, and the convergence harness

The reference triangle is K = {(x, t): 0 <= t <= x <= 1}. Its inflow side is t = 0 and its outflow side
is t = x; both traces are parametrized by x.
"""

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from loguru import logger
from numpy.polynomial import polynomial as P

from src.tentwave.core.ctcs_ref import UniformGrid, ctcs_run
from src.tentwave.core.marcher import l2_error, march
from src.tentwave.core.mesh1d import Tent, TentType
from src.tentwave.core.problems import left_moving_pulse
from src.tentwave.core.quadrature import collapsed_triangle_rule, composite_gauss, gauss_legendre, graded_panels
from src.tentwave.core.tent_pitcher import uniform_stencil_mesh
from src.tentwave.errors import ConfigurationError
from src.tentwave.utils.constants import DEFAULT_CONVERGENCE_FIT_POINTS, DEFAULT_MARGIN, DEFAULT_TRACE_LEVELS
from src.tentwave.utils.logging_utils import LogContext, SolverLogger

Scheme = Literal["tp", "ctcs"]
SpaceTimeFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

REFERENCE_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])


@dataclass(frozen=True)
class TestFunction:
    """w(x, t) with its time derivative"""

    __test__ = False

    name: str
    w: SpaceTimeFunction
    dt: SpaceTimeFunction


@dataclass(frozen=True)
class TraceReport:
    name: str
    inflow: float
    outflow: float
    difference: float
    graph_norm: float
    unweighted_inflow: float

    @property
    def ratio(self) -> float:
        return (self.inflow + self.outflow + self.difference) / self.graph_norm


def trace_check(w: TestFunction, n_quad: int = 8, levels: int = DEFAULT_TRACE_LEVELS) -> TraceReport:
    """Weighted trace norms and ||w||_W^2 = int_K w^2 + (dw/dt)^2

    The x integrals use Gauss panels graded geometrically towards x = 0; the inner t integral over [0, x]
    uses n_quad points.
    """
    x, wx = composite_gauss(graded_panels(levels), n_quad)
    bottom = w.w(x, np.zeros_like(x))
    top = w.w(x, x)

    tau, wt = gauss_legendre(n_quad)
    xx = x[:, None]
    tt = xx * tau[None, :]
    inner = np.sum(xx * wt[None, :] * (w.w(xx, tt) ** 2 + w.dt(xx, tt) ** 2), axis=1)

    return TraceReport(
        name=w.name,
        inflow=float(np.sum(wx * x * bottom**2)),
        outflow=float(np.sum(wx * x * top**2)),
        difference=float(np.sum(wx * (bottom - top) ** 2 / x)),
        graph_norm=float(np.sum(wx * inner)),
        unweighted_inflow=float(np.sum(wx * bottom**2)),
    )


@dataclass(frozen=True)
class RefinementReport:
    name: str
    levels: list[int]
    unweighted_inflow: np.ndarray
    graph_norm: np.ndarray
    growth_rate: float

    @property
    def inflow_growth(self) -> float:
        return float(self.unweighted_inflow[-1] / self.unweighted_inflow[0])

    @property
    def graph_norm_change(self) -> float:
        """Relative change of ||w||_W^2 over the last refinement"""
        return float(abs(self.graph_norm[-1] - self.graph_norm[-2]) / abs(self.graph_norm[-1]))


def trace_refinement(w: TestFunction, levels: list[int] | None = None, n_quad: int = 8) -> RefinementReport:
    """Trace integrals as the panels reach closer to x = 0

    growth_rate is the fitted slope of the unweighted inflow integral against log(1/x_min): about 1 for a
    logarithmic divergence such as w = x^-1/2, and 0 for a convergent integral.
    """
    levels = levels or [5, 20, 80, 320]
    reports = [trace_check(w, n_quad, level) for level in levels]
    inflow = np.array([r.unweighted_inflow for r in reports])
    graph = np.array([r.graph_norm for r in reports])
    depth = np.array(levels, dtype=float) * np.log(2.0)
    rate = float(np.polyfit(depth, inflow, 1)[0]) if len(levels) > 1 else 0.0
    return RefinementReport(
        name=w.name, levels=list(levels), unweighted_inflow=inflow, graph_norm=graph, growth_rate=rate
    )


class Polynomial2D:
    """p(x, t) = sum_ij c_ij x^i t^j"""

    def __init__(self, coefficients: np.ndarray):
        self.coefficients = np.atleast_2d(np.asarray(coefficients, dtype=float))

    @classmethod
    def random(cls, degree: int, rng: np.random.Generator) -> "Polynomial2D":
        c = rng.standard_normal((degree + 1, degree + 1))
        i, j = np.indices(c.shape)
        c[i + j > degree] = 0.0
        return cls(c)

    @property
    def degree(self) -> int:
        i, j = np.nonzero(self.coefficients)
        return int((i + j).max()) if len(i) else 0

    def __call__(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        return P.polyval2d(x, t, self.coefficients)

    def dt(self) -> "Polynomial2D":
        if self.coefficients.shape[1] == 1:
            return Polynomial2D(np.zeros((1, 1)))
        return Polynomial2D(P.polyder(self.coefficients, axis=1))

    def __mul__(self, other: "Polynomial2D") -> "Polynomial2D":
        a, b = self.coefficients, other.coefficients
        out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
        for (i, j), value in np.ndenumerate(a):
            out[i : i + b.shape[0], j : j + b.shape[1]] += value * b
        return Polynomial2D(out)

    def as_test_function(self, name: str) -> TestFunction:
        derivative = self.dt()
        return TestFunction(name=name, w=self, dt=derivative)


def _edge_flux(vertices: np.ndarray, f: Polynomial2D, n: int) -> float:
    """sum over the counter-clockwise edges of int nu_t f dlambda, with nu_t dlambda = -dx ds"""
    s, ws = gauss_legendre(n)
    total = 0.0
    for start, end in zip(vertices, np.roll(vertices, -1, axis=0), strict=True):
        points = start[None, :] + s[:, None] * (end - start)[None, :]
        total += -(end[0] - start[0]) * float(np.sum(ws * f(points[:, 0], points[:, 1])))
    return total


def ibp_identity_check(w: Polynomial2D, v: Polynomial2D, tent: Tent | None = None) -> float:
    """|int_K d/dt(w v) - int_dK nu_t w v| over the tent triangles (the reference triangle if no tent)"""
    product = w * v
    w_t, v_t = w.dt(), v.dt()
    n = max(2, product.degree // 2 + 2)
    triangles = [REFERENCE_TRIANGLE] if tent is None else [vertices for vertices, _ in tent.triangles()]
    residual = 0.0
    for vertices in triangles:
        points, weights = collapsed_triangle_rule(vertices, n)
        x, t = points[:, 0], points[:, 1]
        volume = float(np.sum(weights * (w_t(x, t) * v(x, t) + w(x, t) * v_t(x, t))))
        residual += volume - _edge_flux(vertices, product, n)
    return abs(residual)


def random_tent(
    rng: np.random.Generator, tent_type: TentType, c: float = 1.0, margin: float = DEFAULT_MARGIN
) -> Tent:
    """Admissible tent with random widths, pole and slopes: p <= 1 and |c k p / h| <= margin on each side"""
    k = float(rng.uniform(0.1, 1.0))

    def side(present: bool) -> tuple[float, float]:
        if not present:
            return 0.0, 0.0
        h = float(rng.uniform(0.2, 1.0))
        bound = margin * h / (c * k)
        return h, float(rng.uniform(-bound, min(1.0, bound)))

    h_l, p_l = side(tent_type != TentType.L)
    h_r, p_r = side(tent_type != TentType.R)
    return Tent(
        center_vertex=0,
        tent_type=tent_type,
        k=k,
        h_l=h_l,
        h_r=h_r,
        p_l=p_l,
        p_r=p_r,
        t_bottom=float(rng.uniform(0.0, 1.0)),
        x=float(rng.uniform(0.0, 1.0)),
    )


def _gaussian(name: str, x0: float, t0: float, alpha: float) -> TestFunction:
    def w(x, t):
        return np.exp(-alpha * ((x - x0) ** 2 + (t - t0) ** 2))

    def dt(x, t):
        return -2.0 * alpha * (t - t0) * w(x, t)

    return TestFunction(name=name, w=w, dt=dt)


def _wave(name: str, a: float, b: float, phase: float) -> TestFunction:
    def w(x, t):
        return np.sin(a * x + b * t + phase)

    def dt(x, t):
        return b * np.cos(a * x + b * t + phase)

    return TestFunction(name=name, w=w, dt=dt)


def constant_function(value: float = 1.0) -> TestFunction:
    return Polynomial2D([[value]]).as_test_function(f"const_{value}")


def time_function() -> TestFunction:
    return Polynomial2D([[0.0, 1.0]]).as_test_function("t")


def inverse_sqrt_function() -> TestFunction:
    """w = x^-1/2: finite graph norm, inflow trace not square integrable"""

    def w(x, t):
        return np.broadcast_arrays(x, t)[0] ** -0.5

    def dt(x, t):
        return np.zeros(np.broadcast(x, t).shape)

    return TestFunction(name="x^-1/2", w=w, dt=dt)


def smooth_corpus(n: int = 50, seed: int = 0) -> list[TestFunction]:
    """Constants, t, random polynomials up to degree 3, Gaussians and plane waves"""
    rng = np.random.default_rng(seed)
    corpus = [constant_function(), time_function()]
    while len(corpus) < n:
        kind = len(corpus) % 3
        if kind == 0:
            corpus.append(Polynomial2D.random(int(rng.integers(1, 4)), rng).as_test_function(f"poly_{len(corpus)}"))
        elif kind == 1:
            x0, t0 = rng.uniform(0.0, 1.0, 2)
            corpus.append(_gaussian(f"gauss_{len(corpus)}", x0, t0, float(rng.uniform(1.0, 50.0))))
        else:
            a, b = rng.uniform(-6.0, 6.0, 2)
            corpus.append(_wave(f"wave_{len(corpus)}", a, b, float(rng.uniform(0.0, np.pi))))
    return corpus[:n]


@dataclass(frozen=True)
class NonclosedRow:
    n: int
    chi_distance_sq: float
    v_norm_sq: float
    trace_integral: float

    @property
    def exact(self) -> tuple[float, float, float]:
        n = self.n
        return 1.0 / (2.0 * n**2), (1.0 - 1.0 / n**2) / 6.0 + np.log(n), np.log(n)


def nonclosed_sum_demo(ns: list[int], n_quad: int = 8, panels: int = 40) -> list[NonclosedRow]:
    """chi_n = indicator of x >= 1/n and v_n = chi_n t / x

    chi_n tends to 1 in the graph norm, while v_n has outflow trace 1 and inflow trace 0, so the 1/x
    weighted trace difference grows like log n.
    """
    rows = []
    for n in ns:
        if n < 2:
            raise ConfigurationError(f"n must be at least 2, got {n}")
        lower = 1.0 / n
        x0, w0 = gauss_legendre(n_quad, 0.0, lower)
        chi_distance = float(np.sum(w0 * x0))

        x, wx = composite_gauss(np.geomspace(lower, 1.0, panels + 1), n_quad)
        tau, wt = gauss_legendre(n_quad)
        tt = x[:, None] * tau[None, :]
        inner = np.sum(x[:, None] * wt[None, :] * ((tt / x[:, None]) ** 2 + (1.0 / x[:, None]) ** 2), axis=1)
        rows.append(
            NonclosedRow(
                n=n,
                chi_distance_sq=chi_distance,
                v_norm_sq=float(np.sum(wx * inner)),
                trace_integral=float(np.sum(wx / x)),
            )
        )
    return rows


@dataclass
class ConvergenceTable:
    scheme: str
    h: np.ndarray
    errors: np.ndarray
    slope: float
    running_slopes: np.ndarray = field(default_factory=lambda: np.array([]))
    monotone: bool = True

    def rows(self) -> list[list[float | None]]:
        return [
            [float(h), float(e), None if np.isnan(s) else float(s)]
            for h, e, s in zip(self.h, self.errors, self.running_slopes, strict=True)
        ]


def _error_at(scheme: Scheme, h: float, k_ratio: float, t_eval: float, c: float) -> float:
    problem = left_moving_pulse(c=c, final_time=t_eval)
    grid = UniformGrid.fitted(1.0, h, k_ratio, t_eval, c=c)
    if scheme == "tp":
        mesh = uniform_stencil_mesh(1.0, h, grid.k, t_eval, problem.material)
        return l2_error(march(mesh, problem), None, t_eval)
    result = ctcs_run(grid, problem, every=grid.steps_to(t_eval) + 1)
    return float(result.errors[-1])


def convergence_study(
    scheme: Scheme,
    h_list: list[float],
    k_ratio: float = 0.9,
    t_eval: float = 0.5,
    fit_points: int = DEFAULT_CONVERGENCE_FIT_POINTS,
    c: float = 1.0,
) -> ConvergenceTable:
    """L2 error at t_eval of the left-moving pulse for each h, with k = t_eval / ceil(t_eval / (k_ratio h))

    The slope is a least-squares fit of log error against log h over the finest fit_points rows.
    """
    if scheme not in ("tp", "ctcs"):
        raise ConfigurationError(f"unknown scheme '{scheme}'")
    if len(h_list) < 2:
        raise ConfigurationError("a convergence study needs at least two mesh sizes")
    h = np.sort(np.asarray(h_list, dtype=float))[::-1]

    with LogContext("convergence_study", scheme=scheme, runs=len(h)):
        errors = np.array([_error_at(scheme, float(hi), k_ratio, t_eval, c) for hi in h])

    running = np.full(len(h), np.nan)
    running[1:] = np.log(errors[1:] / errors[:-1]) / np.log(h[1:] / h[:-1])
    for hi, e, s in zip(h, errors, running, strict=True):
        SolverLogger.log_convergence_row(scheme, float(hi), float(e), None if np.isnan(s) else float(s))

    tail = slice(max(0, len(h) - fit_points), len(h))
    slope = float(np.polyfit(np.log(h[tail]), np.log(errors[tail]), 1)[0])
    monotone = bool(np.all(np.diff(errors) < 0.0))
    if not monotone:
        logger.warning(f"{scheme} errors do not decrease monotonically under refinement", errors=errors.tolist())
    return ConvergenceTable(
        scheme=scheme, h=h, errors=errors, slope=slope, running_slopes=running, monotone=monotone
    )
