"""Von Neumann analysis of the uniform-grid leapfrog

A Fourier mode e^{i j theta} turns the recursion into W^{n+1} = G(theta) W^n on W^n = (U^n, V^n, U^{n-1}, V^{n-1})
with s = a c sin(theta) and

    G = [[0, 2is, 1, 0], [2is, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]]

Its eigenvalues are g = +-is +- sqrt(1 - s^2); for |s| > 1 the root is taken as i sqrt(s^2 - 1).
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.tentwave.config import config_service
from src.tentwave.errors import ConfigurationError
from src.tentwave.utils.constants import (
    BLOWUP_RENORMALIZE_AT,
    DEFAULT_THETA_COUNT,
    DET_R_TOLERANCE,
    SPECTRAL_RADIUS_TOLERANCE,
)
from src.tentwave.utils.logging_utils import SolverLogger

Verdict = Literal["stable", "marginal", "unstable"]
Boundary = Literal["periodic", "reflecting"]


def _matrices(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    g = np.zeros(s.shape + (4, 4), dtype=complex)
    g[..., 0, 1] = g[..., 1, 0] = 2j * s
    g[..., 0, 2] = g[..., 1, 3] = 1.0
    g[..., 2, 0] = g[..., 3, 1] = 1.0
    return g


def _eigenvalues(s: np.ndarray) -> np.ndarray:
    """(..., 4) ordered g1 = is - r, g2 = is + r, g3 = -is - r, g4 = -is + r with r = sqrt(1 - s^2)"""
    s = np.asarray(s, dtype=float)
    root = np.sqrt((1.0 - s**2).astype(complex))
    return np.stack([1j * s - root, 1j * s + root, -1j * s - root, -1j * s + root], axis=-1)


def _det_r(g: np.ndarray) -> np.ndarray:
    inv = 1.0 / g
    return 4.0 * (inv[..., 0] - inv[..., 1]) * (inv[..., 3] - inv[..., 2])


@dataclass(frozen=True)
class AmplificationMatrix:
    theta: float
    s: float
    matrix: np.ndarray
    eigenvalues: np.ndarray
    det_r: complex

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def eigenvectors(self) -> np.ndarray:
        """Columns (1, 1, 1/g, 1/g) for g1, g2 and (1, -1, 1/g, -1/g) for g3, g4"""
        inv = 1.0 / self.eigenvalues
        sign = np.array([1.0, 1.0, -1.0, -1.0])
        return np.array([np.ones(4), sign, inv, sign * inv], dtype=complex)

    def reconstruct(self) -> np.ndarray:
        """R diag(g) R^-1"""
        r = self.eigenvectors
        return r @ np.diag(self.eigenvalues) @ np.linalg.inv(r)

    def power(self, n: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, n)


def amplification(a: float, c: float, theta: float) -> AmplificationMatrix:
    s = a * c * np.sin(theta)
    g = _eigenvalues(np.asarray(s))
    return AmplificationMatrix(
        theta=float(theta), s=float(s), matrix=_matrices(np.asarray(s)), eigenvalues=g, det_r=complex(_det_r(g))
    )


def frequency_grid(n_theta: int) -> np.ndarray:
    return np.linspace(-np.pi, np.pi, n_theta, endpoint=False)


def power_exponents(cap: int) -> np.ndarray:
    """Every n up to 64, then geometrically spaced exponents up to cap"""
    dense = np.arange(1, min(cap, 64) + 1)
    if cap <= 64:
        return dense
    sparse = np.unique(np.geomspace(64, cap, 48).astype(np.int64))
    return np.unique(np.concatenate([dense, sparse, [cap]]))


def _power_norms(matrices: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """max over the exponents of the spectral norm of G^n, per matrix; inf once a power overflows"""
    best = np.zeros(matrices.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        for n in exponents:
            powers = np.linalg.matrix_power(matrices, int(n))
            finite = np.all(np.isfinite(powers), axis=(1, 2))
            norms = np.full(matrices.shape[0], np.inf)
            if np.any(finite):
                norms[finite] = np.linalg.norm(powers[finite], ord=2, axis=(1, 2))
            best = np.maximum(best, norms)
    return best


@dataclass(frozen=True)
class SweepReport:
    courant: float
    thetas: np.ndarray
    spectral_radius: np.ndarray
    power_norm: np.ndarray
    det_r: np.ndarray
    power_cap: int
    verdict: Verdict

    @property
    def max_spectral_radius(self) -> float:
        return float(self.spectral_radius.max())

    @property
    def max_power_norm(self) -> float:
        return float(self.power_norm.max())

    @property
    def min_abs_det_r(self) -> float:
        return float(np.abs(self.det_r).min())

    def rows(self) -> list[list[float]]:
        return np.column_stack([self.thetas, self.spectral_radius, self.power_norm]).tolist()

    def summary(self) -> dict:
        return {
            "courant": self.courant,
            "n_theta": len(self.thetas),
            "power_cap": self.power_cap,
            "max_spectral_radius": self.max_spectral_radius,
            "max_power_norm": self.max_power_norm,
            "min_abs_det_r": self.min_abs_det_r,
            "verdict": self.verdict,
        }


def spectral_sweep(
    a: float,
    c: float = 1.0,
    n_theta: int = DEFAULT_THETA_COUNT,
    power_cap: int | None = None,
    power_bound: float | None = None,
) -> SweepReport:
    """Spectral radius and max_n ||G^n|| over an equispaced frequency grid

    unstable: some |g| > 1. marginal: no eigenvalue leaves the unit circle, but the powers exceed the bound or
    R degenerates (a repeated eigenvalue). stable otherwise.
    """
    if n_theta < 8:
        raise ConfigurationError(f"a frequency sweep needs at least 8 samples, got {n_theta}")
    cap = config_service.power_norm_cap if power_cap is None else power_cap
    bound = config_service.power_norm_bound if power_bound is None else power_bound
    courant = a * c

    thetas = frequency_grid(n_theta)
    s = courant * np.sin(thetas)
    g = _eigenvalues(s)
    radius = np.max(np.abs(g), axis=1)
    det_r = _det_r(g)
    norms = _power_norms(_matrices(s), power_exponents(cap))

    if radius.max() > 1.0 + SPECTRAL_RADIUS_TOLERANCE:
        verdict = "unstable"
    elif norms.max() > bound or np.abs(det_r).min() < DET_R_TOLERANCE:
        verdict = "marginal"
    else:
        verdict = "stable"

    report = SweepReport(
        courant=courant,
        thetas=thetas,
        spectral_radius=radius,
        power_norm=norms,
        det_r=det_r,
        power_cap=cap,
        verdict=verdict,
    )
    SolverLogger.log_stability_verdict(courant, verdict, report.max_spectral_radius, report.max_power_norm)
    return report


def _neighbours(w: np.ndarray, boundary: Boundary) -> tuple[np.ndarray, np.ndarray]:
    if boundary == "periodic":
        return np.roll(w, -1), np.roll(w, 1)
    padded = np.pad(w, 1, mode="reflect")
    return padded[2:], padded[:-2]


def _leapfrog_update(state: tuple, courant: float, boundary: Boundary) -> tuple:
    u, v, u_old, v_old = state
    u_right, u_left = _neighbours(u, boundary)
    v_right, v_left = _neighbours(v, boundary)
    return u_old + courant * (v_right - v_left), v_old + courant * (u_right - u_left), u, v


def periodic_leapfrog(
    u: np.ndarray, v: np.ndarray, u_old: np.ndarray, v_old: np.ndarray, courant: float, n_steps: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """n_steps of U^{n+1}_j = U^{n-1}_j + a c (V^n_{j+1} - V^n_{j-1}) (and likewise for V) on a periodic grid"""
    state = (u, v, u_old, v_old)
    for _ in range(n_steps):
        state = _leapfrog_update(state, courant, "periodic")
    return state


@dataclass(frozen=True)
class BlowupReport:
    courant: float
    n_steps: int
    boundary: str
    log_growth_max: float
    log_growth_l2: float
    final_max_norm: float

    @property
    def growth_max(self) -> float:
        return float(np.exp(min(self.log_growth_max, 700.0)))

    @property
    def growth_l2(self) -> float:
        return float(np.exp(min(self.log_growth_l2, 700.0)))

    @property
    def per_step(self) -> float:
        return float(np.exp(self.log_growth_max / self.n_steps)) if self.n_steps else 1.0


def empirical_blowup(
    courant: float,
    n_steps: int,
    n_points: int = 256,
    boundary: Boundary = "periodic",
    seed: int = 0,
    data: np.ndarray | None = None,
) -> BlowupReport:
    """Run the full-grid leapfrog on random data and measure the norm growth

    data, if given, is the (4, n_points) start (U^1, V^1, U^0, V^0). The state is rescaled whenever it exceeds
    a fixed size; the scale is carried in logarithms.
    """
    if boundary not in ("periodic", "reflecting"):
        raise ConfigurationError(f"unknown boundary '{boundary}'")
    if data is None:
        data = np.random.default_rng(seed).standard_normal((4, n_points))
    state = tuple(np.array(w, dtype=float) for w in data)
    start_max = max(float(np.max(np.abs(w))) for w in state)
    start_l2 = float(np.sqrt(sum(np.sum(w**2) for w in state)))
    if start_max == 0.0:
        return BlowupReport(courant, n_steps, boundary, -np.inf, -np.inf, 0.0)

    log_scale = 0.0
    for _ in range(n_steps):
        state = _leapfrog_update(state, courant, boundary)
        size = max(float(np.max(np.abs(w))) for w in state)
        if size > BLOWUP_RENORMALIZE_AT:
            state = tuple(w / size for w in state)
            log_scale += np.log(size)

    final_max = max(float(np.max(np.abs(w))) for w in state)
    final_l2 = float(np.sqrt(sum(np.sum(w**2) for w in state)))
    return BlowupReport(
        courant=courant,
        n_steps=n_steps,
        boundary=boundary,
        log_growth_max=log_scale + np.log(final_max) - np.log(start_max),
        log_growth_l2=log_scale + np.log(final_l2) - np.log(start_l2),
        final_max_norm=float(np.exp(min(log_scale + np.log(final_max), 700.0))),
    )
