"""Catalogue of model problems: travelling pulses, interface experiments and manufactured solutions"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from src.tentwave.core.mesh1d import Material, SpatialMesh
from src.tentwave.errors import ConfigurationError

Initial = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
Field2 = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class ProblemSpec:
    """kappa1 du1/dt - c du2/dx = f1, kappa2 du2/dt - c du1/dx = f2 on [0, S] x [0, T]

    Boundary conditions z0 u1 - u2 = 0 at x = 0 and z1 u1 + u2 = 0 at x = S.
    """

    material: Material
    initial: Initial
    final_time: float
    bc_left: float = 1.0
    bc_right: float = 1.0
    source: Field2 | None = None
    exact: Field2 | None = None
    name: str = "problem"

    def __post_init__(self):
        if not self.final_time > 0.0:
            raise ConfigurationError(f"final_time must be positive, got {self.final_time}")
        if self.bc_left < 0.0 or self.bc_right < 0.0:
            raise ConfigurationError("impedance parameters must be non-negative")

    def initial_values(self, x: np.ndarray) -> np.ndarray:
        u1, u2 = self.initial(np.asarray(x, dtype=float))
        return np.stack([np.broadcast_to(u1, np.shape(x)), np.broadcast_to(u2, np.shape(x))], axis=-1)

    def exact_values(self, x: np.ndarray, t: float | np.ndarray) -> np.ndarray:
        if self.exact is None:
            raise ConfigurationError(f"problem '{self.name}' has no exact solution")
        u1, u2 = self.exact(np.asarray(x, dtype=float), np.broadcast_to(t, np.shape(x)))
        return np.stack([np.broadcast_to(u1, np.shape(x)), np.broadcast_to(u2, np.shape(x))], axis=-1)

    @property
    def homogeneous(self) -> bool:
        return all(self.material.is_unit(region) for region in range(self.material.n_regions))


def gaussian(center: float, sharpness: float) -> Callable[[np.ndarray], np.ndarray]:
    def g(x):
        return np.exp(-sharpness * (x - center) ** 2)

    return g


def left_moving_pulse(
    c: float = 1.0, final_time: float = 2.0, center: float = 0.5, sharpness: float = 1000.0
) -> ProblemSpec:
    """u1 = u2 = g(x + c t) with matched impedance ends; leaves through x = 0"""
    g = gaussian(center, sharpness)

    def initial(x):
        return g(x), g(x)

    def exact(x, t):
        value = g(x + c * t)
        return value, value

    return ProblemSpec(
        material=Material.homogeneous(c),
        initial=initial,
        final_time=final_time,
        bc_left=1.0,
        bc_right=1.0,
        exact=exact,
        name="left_moving_pulse",
    )


def interface_pulse(
    mesh: SpatialMesh,
    material: Material,
    final_time: float,
    bc_left: float,
    bc_right: float,
    center: float = 0.2,
    sharpness: float = 5000.0,
) -> ProblemSpec:
    """Right-moving pulse u1 = (c/kappa1) g, u2 = -(c/sqrt(kappa1 kappa2)) g launched in its region"""
    material.check_mesh(mesh)
    g = gaussian(center, sharpness)
    k1 = np.asarray(material.kappa1)
    k2 = np.asarray(material.kappa2)

    def initial(x):
        regions = mesh.region_of(x)
        return material.c / k1[regions] * g(x), -material.c / np.sqrt(k1[regions] * k2[regions]) * g(x)

    return ProblemSpec(
        material=material,
        initial=initial,
        final_time=final_time,
        bc_left=bc_left,
        bc_right=bc_right,
        name="interface_pulse",
    )


def matched_interface_setup(
    h_left: float = 1e-3, h_right: float = 2e-3, final_time: float = 1.0
) -> tuple[SpatialMesh, ProblemSpec]:
    """kappa = (2, 2) for x < 1/2 and (1, 1) beyond; both ends matched, so the pulse passes unreflected"""
    mesh = SpatialMesh.piecewise_uniform([(0.0, 0.5, h_left, 0), (0.5, 1.0, h_right, 1)])
    material = Material(c=1.0, kappa1=[2.0, 1.0], kappa2=[2.0, 1.0])
    problem = interface_pulse(
        mesh, material, final_time, bc_left=material.impedance(0), bc_right=material.impedance(1)
    )
    return mesh, problem


def reflection_setup(h: float = 1e-3, final_time: float = 1.0) -> tuple[SpatialMesh, ProblemSpec]:
    """Speed and impedance both jump at x = 1/2; Dirichlet ends"""
    mesh = SpatialMesh.piecewise_uniform([(0.0, 0.5, h, 0), (0.5, 1.0, h, 1)])
    material = Material(c=1.0, kappa1=[4.0, 0.5], kappa2=[1.0, 0.5])
    problem = interface_pulse(mesh, material, final_time, bc_left=0.0, bc_right=0.0)
    return mesh, problem


def linear_solution(
    material: Material,
    base: tuple[float, float],
    slope_x: tuple[float, float],
    slope_t: tuple[float, float],
    region: int = 0,
) -> tuple[Field2, Field2]:
    """Globally linear u = base + slope_x x + slope_t t and the constant source it induces in one region"""
    u0, ax, at = (np.asarray(v, dtype=float) for v in (base, slope_x, slope_t))
    k1, k2 = material.kappa(region)
    f = np.array([k1 * at[0] - material.c * ax[1], k2 * at[1] - material.c * ax[0]])

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return u0[0] + ax[0] * x + at[0] * t, u0[1] + ax[1] * x + at[1] * t

    def source(x, t):
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape
        return np.stack([np.full(shape, f[0]), np.full(shape, f[1])])

    return exact, source
