"""Orchestration behind the CLI subcommands: every run returns an OutputBundle that is written only on success"""

import dataclasses

import numpy as np
from loguru import logger

from src.tentwave.core.ctcs_ref import UniformGrid, ctcs_run
from src.tentwave.core.marcher import error_history, error_times, march, snapshot
from src.tentwave.core.mesh1d import SpatialMesh, TentType
from src.tentwave.core.problems import ProblemSpec, interface_pulse, left_moving_pulse
from src.tentwave.core.stability import empirical_blowup, spectral_sweep
from src.tentwave.core.tent_pitcher import TentMesh, pitch_mesh, uniform_stencil_mesh
from src.tentwave.core.verify import (
    ConvergenceTable,
    Polynomial2D,
    convergence_study,
    ibp_identity_check,
    inverse_sqrt_function,
    nonclosed_sum_demo,
    random_tent,
    smooth_corpus,
    trace_check,
    trace_refinement,
)
from src.tentwave.errors import ConfigurationError
from src.tentwave.services.output_writer import OutputBundle, format_time, run_metadata
from src.tentwave.services.run_config import RunConfig
from src.tentwave.utils.constants import (
    CONVERGENCE_HEADER,
    CONVERGENCE_SUFFIX,
    DEFAULT_CONVERGENCE_H,
    ERROR_HEADER,
    ERROR_SUFFIX,
    MESH_SUFFIX,
    METADATA_SUFFIX,
    NODAL_SUFFIX,
    SNAPSHOT_HEADER,
    SNAPSHOT_SUFFIX,
    STABILITY_HEADER,
    STABILITY_SUFFIX,
)
from src.tentwave.utils.logging_utils import LogContext, SolverLogger


def _impedance(value, material, region: int) -> float:
    return material.impedance(region) if value == "matched" else float(value)


def build_problem(config: RunConfig) -> tuple[SpatialMesh, ProblemSpec]:
    problem_config = config.problem
    mesh = config.mesh.spatial_mesh(problem_config.length)
    material = problem_config.material
    material.check_mesh(mesh)
    z0 = _impedance(problem_config.z0, material, mesh.regions[0])
    z1 = _impedance(problem_config.z1, material, mesh.regions[-1])
    pulse = problem_config.pulse

    if pulse.kind == "left_moving":
        if material.n_regions != 1 or not material.is_unit(0):
            raise ConfigurationError("the left moving pulse needs a homogeneous material with kappa = 1")
        problem = left_moving_pulse(
            c=material.c,
            final_time=problem_config.final_time,
            center=0.5 if pulse.center is None else pulse.center,
            sharpness=1000.0 if pulse.sharpness is None else pulse.sharpness,
        )
        return mesh, dataclasses.replace(problem, bc_left=z0, bc_right=z1)

    problem = interface_pulse(
        mesh,
        material,
        problem_config.final_time,
        bc_left=z0,
        bc_right=z1,
        center=0.2 if pulse.center is None else pulse.center,
        sharpness=5000.0 if pulse.sharpness is None else pulse.sharpness,
    )
    return mesh, problem


def _uniform_grid(config: RunConfig) -> UniformGrid:
    problem = config.problem
    mesh = config.mesh
    return UniformGrid.fitted(problem.length, mesh.h, mesh.k_ratio, problem.final_time, c=problem.material.c)


def build_tent_mesh(config: RunConfig, mesh: SpatialMesh, problem: ProblemSpec) -> TentMesh:
    settings = config.mesh
    if settings.kind == "uniform_stencil":
        material = problem.material
        speed = max(material.wave_speed(r) for r in range(material.n_regions))
        n_steps = int(np.ceil(problem.final_time * speed / (settings.k_ratio * settings.h)))
        k = problem.final_time / n_steps
        tent_mesh = uniform_stencil_mesh(mesh.length, settings.h, k, problem.final_time, material)
    else:
        tent_mesh = pitch_mesh(
            mesh, problem.material, problem.final_time, settings.slab_height, settings.margin, settings.seed
        )
    SolverLogger.log_mesh_summary(tent_mesh.summary())
    return tent_mesh


def _bundle(config: RunConfig) -> OutputBundle:
    return OutputBundle(config.output.prefix, config.output.directory)


def run_mesh(config: RunConfig, raw: dict, command: str = "mesh") -> OutputBundle:
    mesh, problem = build_problem(config)
    tent_mesh = build_tent_mesh(config, mesh, problem)
    bundle = _bundle(config)
    bundle.add_json(MESH_SUFFIX, tent_mesh.to_document())
    bundle.add_json(METADATA_SUFFIX, run_metadata(command, raw, config.mesh.seed, summary=tent_mesh.summary()))
    return bundle


def _error_interval(config: RunConfig, tent_mesh: TentMesh) -> float:
    if config.output.error_interval is not None:
        return config.output.error_interval
    if config.mesh.kind == "uniform_stencil":
        # every other time step
        return 2.0 * float(tent_mesh.k[-1])
    return tent_mesh.slab_height


def run_solve(config: RunConfig, raw: dict, command: str = "solve") -> OutputBundle:
    if config.scheme == "ctcs":
        return run_ctcs(config, raw, command)
    mesh, problem = build_problem(config)
    tent_mesh = build_tent_mesh(config, mesh, problem)
    solution = march(tent_mesh, problem, use_closed_form=config.use_closed_form)

    bundle = _bundle(config)
    for t in config.output.snapshots:
        trace = snapshot(solution, t)
        bundle.add_csv(f"{SNAPSHOT_SUFFIX}_{format_time(t)}.csv", SNAPSHOT_HEADER, trace.rows())

    extra = {"summary": tent_mesh.summary()}
    if problem.exact is not None:
        times = error_times(solution, _error_interval(config, tent_mesh))
        errors = error_history(solution, times)
        bundle.add_csv(ERROR_SUFFIX, ERROR_HEADER, np.column_stack([times, errors]).tolist())
        extra["max_error"] = float(errors.max())
        extra["final_error"] = float(errors[-1])
    if config.output.write_nodal:
        bundle.add_json(NODAL_SUFFIX, solution.to_nodal_document())
    bundle.add_json(METADATA_SUFFIX, run_metadata(command, raw, config.mesh.seed, **extra))
    logger.info(f"Solved {tent_mesh.n_tents} tents up to t={problem.final_time}")
    return bundle


def run_ctcs(config: RunConfig, raw: dict, command: str = "ctcs") -> OutputBundle:
    if config.mesh.h is None:
        raise ConfigurationError("CTCS runs need mesh.h")
    _, problem = build_problem(config)
    grid = _uniform_grid(config)
    bootstrap = config.ctcs_bootstrap if problem.exact is not None else "taylor"
    result = ctcs_run(
        grid, problem, bootstrap, every=config.output.error_every, snapshot_times=config.output.snapshots
    )

    bundle = _bundle(config)
    for t, trace in result.snapshots.items():
        bundle.add_csv(f"{SNAPSHOT_SUFFIX}_{format_time(t)}.csv", SNAPSHOT_HEADER, trace.rows())
    extra = {"grid": grid.model_dump(), "bootstrap": bootstrap}
    if len(result.times):
        bundle.add_csv(ERROR_SUFFIX, ERROR_HEADER, result.rows())
        extra["max_error"] = float(result.errors.max())
        extra["final_error"] = float(result.errors[-1])
    bundle.add_json(METADATA_SUFFIX, run_metadata(command, raw, None, **extra))
    return bundle


def run_stability(
    courant: float, n_theta: int, prefix: str = "stability", directory: str = ".", blowup_steps: int = 200
) -> OutputBundle:
    report = spectral_sweep(courant, 1.0, n_theta)
    blowup = empirical_blowup(courant, blowup_steps)
    bundle = OutputBundle(prefix, directory)
    bundle.add_csv(STABILITY_SUFFIX, STABILITY_HEADER, report.rows())
    bundle.add_json(
        METADATA_SUFFIX,
        run_metadata(
            "stability",
            {"ac": courant, "thetas": n_theta},
            None,
            summary=report.summary(),
            blowup={"steps": blowup_steps, "growth_max": blowup.growth_max, "per_step": blowup.per_step},
        ),
    )
    return bundle


def _traces_suite() -> dict:
    reports = [trace_check(w) for w in smooth_corpus()]
    refinement = trace_refinement(inverse_sqrt_function())
    return {
        "corpus": [dataclasses.asdict(r) | {"ratio": r.ratio} for r in reports],
        "max_ratio": max(r.ratio for r in reports),
        "inverse_sqrt": {
            "levels": refinement.levels,
            "unweighted_inflow": refinement.unweighted_inflow.tolist(),
            "graph_norm": refinement.graph_norm.tolist(),
            "growth_rate": refinement.growth_rate,
        },
        "nonclosed": [dataclasses.asdict(row) for row in nonclosed_sum_demo([2, 4, 16, 64, 256, 1024])],
    }


def _ibp_suite(pairs_per_type: int = 25, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst = {}
    for tent_type in TentType:
        residuals = []
        for _ in range(pairs_per_type):
            tent = random_tent(rng, tent_type)
            w = Polynomial2D.random(int(rng.integers(0, 4)), rng)
            v = Polynomial2D.random(int(rng.integers(0, 4)), rng)
            residuals.append(ibp_identity_check(w, v, tent))
        worst[tent_type.value] = max(residuals)
    return {"max_residual": worst, "pairs_per_type": pairs_per_type}


def _table_document(table: ConvergenceTable) -> dict:
    return {"rows": table.rows(), "slope": table.slope, "monotone": table.monotone}


def run_verify(suite: str) -> dict:
    with LogContext("verify", suite=suite):
        if suite == "traces":
            return _traces_suite()
        if suite == "ibp":
            return _ibp_suite()
        if suite == "convergence":
            return {
                scheme: _table_document(convergence_study(scheme, DEFAULT_CONVERGENCE_H)) for scheme in ("tp", "ctcs")
            }
    raise ConfigurationError(f"unknown verification suite '{suite}'")


def run_converge(
    scheme: str,
    h_list: list[float] | None = None,
    k_ratio: float = 0.9,
    t_eval: float = 0.5,
    prefix: str = "run",
    directory: str = ".",
) -> OutputBundle:
    h_list = h_list or DEFAULT_CONVERGENCE_H
    table = convergence_study(scheme, h_list, k_ratio=k_ratio, t_eval=t_eval)
    bundle = OutputBundle(prefix, directory)
    bundle.add_csv(f"{CONVERGENCE_SUFFIX}_{scheme}.csv", CONVERGENCE_HEADER, table.rows())
    bundle.add_json(
        METADATA_SUFFIX,
        run_metadata(
            "converge",
            {"scheme": scheme, "h": list(h_list), "k_ratio": k_ratio, "t_eval": t_eval},
            None,
            slope=table.slope,
            monotone=table.monotone,
        ),
    )
    return bundle
