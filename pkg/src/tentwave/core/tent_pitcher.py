"""Causally ordered tent meshes over a 1D spatial mesh"""

from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from src.tentwave.config import config_service
from src.tentwave.core.mesh1d import Material, SpatialMesh, Tent, TentType, pitch_tent
from src.tentwave.errors import CFLViolationError, ConfigurationError, MeshingError, OrderingError
from src.tentwave.utils.constants import KIND_INTERIOR, KIND_LEFT, KIND_RIGHT, REACH_SHRINK, TIME_TOLERANCE
from src.tentwave.utils.logging_utils import log_operation


@dataclass
class FrontState:
    """Current time and top node above every spatial vertex"""

    times: np.ndarray
    top_nodes: np.ndarray

    @classmethod
    def flat(cls, n_vertices: int, t: float = 0.0) -> "FrontState":
        return cls(times=np.full(n_vertices, t, dtype=float), top_nodes=np.arange(n_vertices))

    def is_flat(self, t: float, tol: float) -> bool:
        return bool(np.all(np.abs(self.times - t) <= tol))


@dataclass(frozen=True, eq=False)
class TentMesh:
    """Struct of arrays: one entry per tent, in causal order

    Node table: the first n_vertices nodes lie on the initial line; every tent adds its apex.
    Missing left/right nodes (boundary tents) are -1.
    """

    mesh: SpatialMesh
    center: np.ndarray
    kind: np.ndarray
    k: np.ndarray
    h_l: np.ndarray
    h_r: np.ndarray
    p_l: np.ndarray
    p_r: np.ndarray
    t_bottom: np.ndarray
    left_node: np.ndarray
    bottom_node: np.ndarray
    right_node: np.ndarray
    apex_node: np.ndarray
    level: np.ndarray
    node_vertex: np.ndarray
    node_time: np.ndarray
    slab_height: float
    n_slabs: int = 1
    slab_size: int = field(default=-1)

    def __post_init__(self):
        if self.slab_size < 0:
            object.__setattr__(self, "slab_size", len(self.center))

    @property
    def n_tents(self) -> int:
        return len(self.center)

    @property
    def n_nodes(self) -> int:
        return len(self.node_time)

    @property
    def n_vertices(self) -> int:
        return self.mesh.n_vertices

    @property
    def n_levels(self) -> int:
        return int(self.level.max()) if self.n_tents else 0

    def tent(self, i: int) -> Tent:
        c = int(self.center[i])
        kind = TentType.from_code(self.kind[i])
        regions = self.mesh.regions
        return Tent(
            center_vertex=c,
            tent_type=kind,
            k=float(self.k[i]),
            h_l=float(self.h_l[i]),
            h_r=float(self.h_r[i]),
            p_l=float(self.p_l[i]),
            p_r=float(self.p_r[i]),
            t_bottom=float(self.t_bottom[i]),
            x=self.mesh.vertices[c],
            region_l=regions[c - 1] if kind != TentType.L else 0,
            region_r=regions[c] if kind != TentType.R else 0,
            left_node=int(self.left_node[i]),
            bottom_node=int(self.bottom_node[i]),
            right_node=int(self.right_node[i]),
            apex_node=int(self.apex_node[i]),
        )

    def tents(self) -> list[Tent]:
        return [self.tent(i) for i in range(self.n_tents)]

    def final_front(self) -> FrontState:
        top = np.arange(self.n_vertices)
        np.maximum.at(top, self.node_vertex[self.apex_node], self.apex_node)
        return FrontState(times=self.node_time[top].copy(), top_nodes=top)

    @property
    def t_final(self) -> float:
        """Time up to which the mesh covers every point of the domain"""
        return float(self.final_front().times.min())

    def type_counts(self) -> dict[str, int]:
        return {
            "I": int(np.sum(self.kind == KIND_INTERIOR)),
            "L": int(np.sum(self.kind == KIND_LEFT)),
            "R": int(np.sum(self.kind == KIND_RIGHT)),
        }

    def areas(self) -> np.ndarray:
        widths = np.where(self.kind == KIND_LEFT, 0.0, self.h_l) + np.where(self.kind == KIND_RIGHT, 0.0, self.h_r)
        return 0.5 * self.k * widths

    def triangles(self) -> np.ndarray:
        """Node index triples (counter-clockwise) of every triangle, left triangle of a tent first"""
        has_left = self.kind != KIND_LEFT
        has_right = self.kind != KIND_RIGHT
        left = np.stack([self.left_node, self.bottom_node, self.apex_node], axis=1)
        right = np.stack([self.bottom_node, self.right_node, self.apex_node], axis=1)
        tri = np.stack([left, right], axis=1).reshape(-1, 3)
        keep = np.stack([has_left, has_right], axis=1).ravel()
        return tri[keep]

    def node_coordinates(self) -> np.ndarray:
        return np.stack([self.mesh.x[self.node_vertex], self.node_time], axis=1)

    def min_angle(self) -> float:
        """Smallest interior angle (radians) over all triangles, measured in (x, t)"""
        tri = self.triangles()
        if len(tri) == 0:
            return float("nan")
        p = self.node_coordinates()[tri]
        angles = []
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            cos = np.sum(u * v, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.arccos(np.clip(cos, -1.0, 1.0)))
        return float(np.min(angles))

    def level_groups(self) -> list[np.ndarray]:
        """Tent indices grouped by causal level; tents in one group are independent"""
        if self.n_tents == 0:
            return []
        order = np.argsort(self.level, kind="stable")
        _, starts = np.unique(self.level[order], return_index=True)
        return np.split(order, starts[1:])

    def check_causality(self) -> None:
        """Raise OrderingError at the first tent whose inflow nodes are produced later"""
        producer = np.full(self.n_nodes, -1)
        producer[self.apex_node] = np.arange(self.n_tents)
        index = np.arange(self.n_tents)
        for nodes in (self.left_node, self.bottom_node, self.right_node):
            late = (nodes >= 0) & (producer[np.maximum(nodes, 0)] >= index)
            if np.any(late):
                first = int(np.flatnonzero(late)[0])
                raise OrderingError(f"tent {first} depends on an unresolved node", tent_index=first)

    def cfl_ratios(self, material: Material) -> np.ndarray:
        """|c_loc k p / h| of every tent, one column per side; 0 on a missing side"""
        speeds = material.cell_speeds(self.mesh)
        last_cell = self.mesh.n_cells - 1
        has_left = self.kind != KIND_LEFT
        has_right = self.kind != KIND_RIGHT
        left = speeds[np.clip(self.center - 1, 0, last_cell)] * self.k * np.abs(self.p_l)
        right = speeds[np.clip(self.center, 0, last_cell)] * self.k * np.abs(self.p_r)
        ratios = np.zeros((self.n_tents, 2))
        np.divide(left, self.h_l, out=ratios[:, 0], where=has_left)
        np.divide(right, self.h_r, out=ratios[:, 1], where=has_right)
        return ratios

    def check_cfl(self, material: Material, margin: float) -> None:
        """Raise CFLViolationError at the first tent whose ratio exceeds the margin"""
        ratios = self.cfl_ratios(material).max(axis=1, initial=0.0)
        bad = np.flatnonzero(ratios > margin)
        if len(bad):
            first = int(bad[0])
            raise CFLViolationError(
                f"tent {first} violates the CFL condition", tent_index=first, ratio=float(ratios[first]), margin=margin
            )

    def summary(self) -> dict:
        counts = self.type_counts()
        return {
            "tents": self.n_tents,
            "levels": self.n_levels,
            "slabs": self.n_slabs,
            "type_i": counts["I"],
            "type_l": counts["L"],
            "type_r": counts["R"],
            "triangles": int(len(self.triangles())),
            "min_angle": self.min_angle(),
            "area": float(self.areas().sum()),
            "t_final": self.t_final,
        }

    def to_document(self) -> dict:
        """JSON export: space-time vertices, triangles and tents in causal order"""
        xy = self.node_coordinates()
        return {
            "vertices": [{"x": float(x), "t": float(t)} for x, t in xy],
            "triangles": self.triangles().tolist(),
            "tents": [
                {
                    "type": TentType.from_code(self.kind[i]).value,
                    "center": int(self.center[i]),
                    "k": float(self.k[i]),
                    "h_l": float(self.h_l[i]),
                    "h_r": float(self.h_r[i]),
                    "p_l": float(self.p_l[i]),
                    "p_r": float(self.p_r[i]),
                    "order": i,
                    "level": int(self.level[i]),
                }
                for i in range(self.n_tents)
            ],
            "slab_height": self.slab_height,
            "n_slabs": self.n_slabs,
        }


class _TentRecorder:
    """Accumulates tents and apex nodes while a front advances"""

    def __init__(self, mesh: SpatialMesh):
        self.mesh = mesh
        self.columns: dict[str, list] = {
            name: []
            for name in (
                "center",
                "kind",
                "k",
                "h_l",
                "h_r",
                "p_l",
                "p_r",
                "t_bottom",
                "left_node",
                "bottom_node",
                "right_node",
                "apex_node",
                "level",
            )
        }
        self.node_vertex = list(range(mesh.n_vertices))
        self.node_time = [0.0] * mesh.n_vertices
        self.node_level = [0] * mesh.n_vertices

    def add(self, tent: Tent, front: FrontState, apex_time: float) -> None:
        c = tent.center_vertex
        left = int(front.top_nodes[c - 1]) if tent.has_left else -1
        right = int(front.top_nodes[c + 1]) if tent.has_right else -1
        bottom = int(front.top_nodes[c])
        level = 1 + max(self.node_level[node] for node in (left, bottom, right) if node >= 0)

        apex = len(self.node_time)
        self.node_vertex.append(c)
        self.node_time.append(apex_time)
        self.node_level.append(level)

        row = {
            "center": c,
            "kind": tent.tent_type.code,
            "k": tent.k,
            "h_l": tent.h_l,
            "h_r": tent.h_r,
            "p_l": tent.p_l,
            "p_r": tent.p_r,
            "t_bottom": tent.t_bottom,
            "left_node": left,
            "bottom_node": bottom,
            "right_node": right,
            "apex_node": apex,
            "level": level,
        }
        for name, value in row.items():
            self.columns[name].append(value)

        front.times[c] = apex_time
        front.top_nodes[c] = apex

    def build(self, slab_height: float) -> TentMesh:
        int_columns = {"center", "kind", "left_node", "bottom_node", "right_node", "apex_node", "level"}
        arrays = {
            name: np.asarray(values, dtype=np.int64 if name in int_columns else float)
            for name, values in self.columns.items()
        }
        arrays["kind"] = arrays["kind"].astype(np.int8)
        return TentMesh(
            mesh=self.mesh,
            node_vertex=np.asarray(self.node_vertex, dtype=np.int64),
            node_time=np.asarray(self.node_time, dtype=float),
            slab_height=slab_height,
            **arrays,
        )


@log_operation("pitch_slab")
def pitch_slab(
    mesh: SpatialMesh,
    material: Material,
    slab_height: float,
    margin: float | None = None,
    seed: int | None = None,
    max_iterations: int | None = None,
) -> TentMesh:
    """Lowest-vertex-first mesher for the slab [0, slab_height]

    The slab is cut into equal half steps of height k/2, no taller than the smallest causality reach
    margin * h / c_loc over all cells. Front times are whole multiples of k/2. A lowest vertex whose
    neighbours are all ahead of it is pitched to the mirror image of their time, 2 * tau_nbr - tau, capped at
    the slab top. On a flat front every other lowest vertex is lifted by one half step. Tents are symmetric
    with slopes 1 on the initial line, 1/2 inside the slab and 0 at the top, so stacked slabs compose to a
    leapfrog update. Vertices that are ready together are independent and pitched in seeded random order.
    """
    defaults = config_service.solver_defaults()
    margin = defaults.margin if margin is None else margin
    seed = defaults.seed if seed is None else seed
    cap = max_iterations or defaults.pitch_iteration_cap
    if not slab_height > 0.0:
        raise ConfigurationError(f"slab_height must be positive, got {slab_height}")
    if not 0.0 < margin <= 1.0:
        raise ConfigurationError(f"margin must lie in (0, 1], got {margin}")
    material.check_mesh(mesh)

    rng = np.random.default_rng(seed)
    reach = margin * mesh.h / material.cell_speeds(mesh) * (1.0 - REACH_SHRINK)
    n_half = 2 * max(1, int(np.ceil(slab_height / (2.0 * reach.min()) - TIME_TOLERANCE)))
    last = mesh.n_vertices - 1

    front = FrontState.flat(mesh.n_vertices)
    steps = np.zeros(mesh.n_vertices, dtype=np.int64)
    recorder = _TentRecorder(mesh)

    def neighbour_steps(v: int) -> int:
        return min(steps[u] for u in (v - 1, v + 1) if 0 <= u <= last)

    iterations = 0
    while (lowest := int(steps.min())) < n_half:
        candidates = np.flatnonzero(steps == lowest)
        ready = [v for v in candidates if neighbour_steps(v) > lowest]
        if not ready:
            ready = candidates[::2]
        for v in rng.permutation(ready):
            if iterations >= cap:
                raise MeshingError(
                    f"slab top {slab_height} not reached after {cap} tents",
                    lowest_time=lowest / n_half * slab_height,
                    iterations=cap,
                )
            nbr = neighbour_steps(v)
            apex_steps = lowest + 1 if nbr == lowest else min(2 * nbr - lowest, n_half)
            apex = apex_steps / n_half * slab_height
            recorder.add(pitch_tent(mesh, int(v), front.times, apex), front, apex)
            steps[v] = apex_steps
            iterations += 1

    slab = recorder.build(slab_height)
    slab.check_cfl(material, margin)
    logger.debug(
        f"Pitched {slab.n_tents} tents in {slab.n_levels} levels", seed=seed, margin=margin, half_steps=n_half
    )
    return slab


def stack_slabs(slab: TentMesh, n_slabs: int) -> TentMesh:
    """Concatenate n_slabs time-translated copies of a flat-topped slab"""
    if n_slabs < 1:
        raise ConfigurationError(f"n_slabs must be at least 1, got {n_slabs}")
    if slab.n_slabs != 1:
        raise MeshingError("only a single slab can be stacked", n_slabs=slab.n_slabs)
    top = slab.final_front()
    if not top.is_flat(slab.slab_height, TIME_TOLERANCE * slab.slab_height):
        raise MeshingError("slab has a non-flat final front and cannot be stacked")
    if n_slabs == 1:
        return slab

    nv, m = slab.n_vertices, slab.n_tents
    levels = slab.n_levels
    last_apex = top.top_nodes

    def remap(nodes: np.ndarray, s: int) -> np.ndarray:
        base = np.arange(nv) if s == 0 else nv + (s - 1) * m + (last_apex - nv)
        out = np.where(nodes >= nv, nodes + s * m, base[np.clip(nodes, 0, nv - 1)])
        return np.where(nodes < 0, -1, out)

    def tile(values: np.ndarray) -> np.ndarray:
        return np.tile(values, n_slabs)

    slab_index = np.repeat(np.arange(n_slabs), m)
    apex_times = slab.node_time[nv:]
    return TentMesh(
        mesh=slab.mesh,
        center=tile(slab.center),
        kind=tile(slab.kind),
        k=tile(slab.k),
        h_l=tile(slab.h_l),
        h_r=tile(slab.h_r),
        p_l=tile(slab.p_l),
        p_r=tile(slab.p_r),
        t_bottom=tile(slab.t_bottom) + slab_index * slab.slab_height,
        left_node=np.concatenate([remap(slab.left_node, s) for s in range(n_slabs)]),
        bottom_node=np.concatenate([remap(slab.bottom_node, s) for s in range(n_slabs)]),
        right_node=np.concatenate([remap(slab.right_node, s) for s in range(n_slabs)]),
        apex_node=np.concatenate([remap(slab.apex_node, s) for s in range(n_slabs)]),
        level=tile(slab.level) + slab_index * levels,
        node_vertex=np.concatenate([slab.node_vertex[:nv], tile(slab.node_vertex[nv:])]),
        node_time=np.concatenate(
            [slab.node_time[:nv], tile(apex_times) + np.repeat(np.arange(n_slabs), m) * slab.slab_height]
        ),
        slab_height=slab.slab_height,
        n_slabs=n_slabs,
        slab_size=m,
    )


def pitch_mesh(
    mesh: SpatialMesh,
    material: Material,
    final_time: float,
    slab_height: float,
    margin: float | None = None,
    seed: int | None = None,
) -> TentMesh:
    """One pitched slab stacked until final_time is covered"""
    n_slabs = max(1, int(np.ceil(final_time / slab_height - TIME_TOLERANCE)))
    return stack_slabs(pitch_slab(mesh, material, slab_height, margin, seed), n_slabs)


@log_operation("uniform_stencil_mesh")
def uniform_stencil_mesh(
    length: float,
    h: float,
    k: float,
    final_time: float,
    material: Material | None = None,
    margin: float = 1.0,
) -> TentMesh:
    """Tents on the uniform lattice of spacing h/2, pitched in alternating parity

    The first step raises the even vertices by k/2 over the flat initial line; every later step raises one
    parity by k, so interior tents have h_l = h_r = h/2 and p_l = p_r = 1/2.
    """
    material = material or Material.homogeneous()
    n_cells = round(2.0 * length / h)
    if n_cells < 1 or abs(n_cells * h / 2.0 - length) > 1e-9 * length:
        raise ConfigurationError(f"h={h} does not divide the domain length {length} into half steps")
    if not final_time > 0.0:
        raise ConfigurationError(f"final_time must be positive, got {final_time}")

    mesh = SpatialMesh.uniform(length, n_cells)
    material.check_mesh(mesh)
    courant = float(material.cell_speeds(mesh).max()) * k / h
    if courant >= margin:
        raise CFLViolationError(f"a*c = {courant} violates the stencil CFL bound", k=k, h=h)

    half = h / 2.0
    n_vertices = mesh.n_vertices
    # front times are kept as integer multiples of k/2
    steps_at = np.zeros(n_vertices, dtype=np.int64)
    top = np.arange(n_vertices)
    records = []
    next_node = n_vertices
    step = 0
    while steps_at.min() * (k / 2.0) < final_time * (1.0 - 1e-12):
        parity = step % 2
        centers = np.arange(parity, n_vertices, 2)
        bottom_steps = steps_at[centers]
        apex_steps = bottom_steps + (1 if step == 0 else 2)
        pole = (apex_steps - bottom_steps) * (k / 2.0)
        kinds = np.full(len(centers), KIND_INTERIOR, dtype=np.int8)
        kinds[centers == 0] = KIND_LEFT
        kinds[centers == n_vertices - 1] = KIND_RIGHT

        left_idx = np.clip(centers - 1, 0, n_vertices - 1)
        right_idx = np.clip(centers + 1, 0, n_vertices - 1)
        apex_time = apex_steps * (k / 2.0)
        p_l = np.where(kinds == KIND_LEFT, 0.0, (apex_time - steps_at[left_idx] * (k / 2.0)) / pole)
        p_r = np.where(kinds == KIND_RIGHT, 0.0, (apex_time - steps_at[right_idx] * (k / 2.0)) / pole)
        apex_nodes = next_node + np.arange(len(centers))
        records.append(
            {
                "center": centers,
                "kind": kinds,
                "k": pole,
                "h_l": np.where(kinds == KIND_LEFT, 0.0, half),
                "h_r": np.where(kinds == KIND_RIGHT, 0.0, half),
                "p_l": p_l,
                "p_r": p_r,
                "t_bottom": bottom_steps * (k / 2.0),
                "left_node": np.where(kinds == KIND_LEFT, -1, top[left_idx]),
                "bottom_node": top[centers].copy(),
                "right_node": np.where(kinds == KIND_RIGHT, -1, top[right_idx]),
                "apex_node": apex_nodes,
                "level": np.full(len(centers), step + 1, dtype=np.int64),
                "apex_time": apex_time,
            }
        )
        steps_at[centers] = apex_steps
        top[centers] = apex_nodes
        next_node += len(centers)
        step += 1

    columns = {name: np.concatenate([r[name] for r in records]) for name in records[0] if name != "apex_time"}
    node_time = np.concatenate([np.zeros(n_vertices), *[r["apex_time"] for r in records]])
    node_vertex = np.concatenate([np.arange(n_vertices), *[r["center"] for r in records]])
    tent_mesh = TentMesh(
        mesh=mesh,
        node_vertex=node_vertex,
        node_time=node_time,
        slab_height=float(steps_at.min() * (k / 2.0)),
        **columns,
    )
    tent_mesh.check_cfl(material, margin)
    return tent_mesh
