"""HTTP surface over the synthesis pipeline.

Every endpoint is a pure function of its request payload, so identical
requests produce identical responses (artifact strings included). Domain
errors map to 400, stale-table metadata to 409; steering that merely fails
to converge is a normal 200 response with converged=false.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, artifacts, rank, reach, simulate, synth
from ..errors import DeadbeatError, MetadataMismatch, NoConvergence
from ..grid import Grid, build_input_set
from ..systems import REGISTRY, SystemModel, get_system, system_from_definition
from . import schemas


def _resolve_system(ref: schemas.SystemRef) -> SystemModel:
    if ref.definition is not None:
        return system_from_definition(ref.definition.model_dump())
    return get_system(ref.source)


def _make_grid(model: SystemModel, cells: list[int]) -> Grid:
    if len(cells) == 1 and model.n > 1:
        cells = cells * model.n  # single count applies to every dimension
    if len(cells) != model.n:
        raise DeadbeatError(f"{model.name} has {model.n} state dimension(s); "
                            f"got {len(cells)} cell count(s)")
    return Grid(box=model.state_box, cells_per_dim=cells)


def _make_inputs(model: SystemModel, counts: list[int]):
    if len(counts) == 1 and model.m > 1:
        counts = counts * model.m
    if len(counts) != model.m:
        raise DeadbeatError(f"{model.name} has {model.m} input dimension(s); "
                            f"got {len(counts)} input count(s)")
    return build_input_set(model.input_box, counts)


def _load_table(req, model: SystemModel, grid: Grid, inputs):
    table = artifacts.parse_feedback_table_csv(req.table_csv)
    expected = synth.TableMeta.from_parts(model, grid, inputs, req.epsilon)
    artifacts.require_matching_meta(table, expected)
    return table


def create_app() -> FastAPI:
    app = FastAPI(title="deadbeat synthesis service", version=__version__)

    @app.exception_handler(DeadbeatError)
    async def _domain_error(request, exc: DeadbeatError):
        from fastapi.responses import JSONResponse
        status = 409 if isinstance(exc, MetadataMismatch) else 400
        return JSONResponse(status_code=status,
                            content={"detail": {"type": type(exc).__name__,
                                                "message": str(exc)}})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/systems", response_model=list[schemas.SystemInfo])
    def systems():
        return [
            schemas.SystemInfo(
                name=m.name, n=m.n, m=m.m,
                state_box=m.state_box.tolist(), input_box=m.input_box.tolist(),
                expressions=list(m.expressions) if m.expressions else None)
            for m in REGISTRY.values()
        ]

    @app.post("/systems/check", response_model=schemas.SystemInfo)
    def systems_check(defn: schemas.SystemDefinitionModel):
        model = system_from_definition(defn.model_dump())
        return schemas.SystemInfo(
            name=model.name, n=model.n, m=model.m,
            state_box=model.state_box.tolist(), input_box=model.input_box.tolist(),
            expressions=list(model.expressions))

    @app.post("/synth", response_model=schemas.SynthResponse)
    def do_synth(req: schemas.SynthRequest):
        model = _resolve_system(req.system)
        grid = _make_grid(model, req.cells)
        inputs = _make_inputs(model, req.inputs)
        layers = reach.compute_layers(model, grid, inputs, req.epsilon,
                                      max_layers=req.max_layers,
                                      threads=req.threads)
        table = synth.synthesize(layers, model, grid, inputs, threads=req.threads)
        cov = reach.coverage(layers)
        certified = reach.certify_n_step(layers)
        summary = artifacts.synth_summary(model.name, grid, inputs.points_per_dim,
                                          req.epsilon, layers, certified, cov)
        return schemas.SynthResponse(
            summary=schemas.SynthSummaryModel(**summary),
            layers_csv=artifacts.layers_csv(layers, grid),
            table_csv=artifacts.feedback_table_csv(table),
            summary_json=artifacts.render_json(summary) + "\n")

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def do_simulate(req: schemas.SimulateRequest):
        model = _resolve_system(req.system)
        grid = _make_grid(model, req.cells)
        inputs = _make_inputs(model, req.inputs)
        table = _load_table(req, model, grid, inputs)
        run = simulate.run_closed_loop(model, table, grid, req.x0, req.epsilon,
                                       max_steps=req.max_steps,
                                       quantize=req.quantize)
        return schemas.SimulateResponse(
            outcome=run.outcome.value, steps=run.steps, converged=run.converged,
            index_trace=[None if i is None else int(i) for i in run.index_trace],
            final_state=[float(v) for v in run.trajectory.states[-1]],
            trajectory_csv=artifacts.trajectory_csv(run, model.n, model.m))

    @app.post("/certify", response_model=schemas.CertifyResponse)
    def do_certify(req: schemas.CertifyRequest):
        model = _resolve_system(req.system)
        grid = _make_grid(model, req.cells)
        inputs = _make_inputs(model, req.inputs)
        table = _load_table(req, model, grid, inputs)
        report = simulate.certify_basin(model, table, grid, req.epsilon,
                                        max_steps=req.max_steps,
                                        threads=req.threads)
        return schemas.CertifyResponse(
            total=report.total, finite_total=report.finite_total,
            converged=report.converged_count,
            converged_fraction=report.converged_fraction,
            empirical_n=report.empirical_n, violations=report.violations,
            certified=report.certified,
            report_csv=artifacts.basin_report_csv(report))

    @app.post("/rank", response_model=schemas.RankResponse)
    def do_rank(req: schemas.RankRequest):
        model = _resolve_system(req.system)
        report = rank.check_rank_condition(
            model, req.horizon, neighborhood_radius=req.neighborhood_radius,
            samples=req.samples, tau=req.tau, seed=req.seed)
        return schemas.RankResponse(
            holds_on_neighborhood=report.holds_on_neighborhood,
            rank_at_origin=report.rank, state_dimension=model.n,
            report_json=artifacts.rank_report_json(report, req.seed))

    @app.post("/steer", response_model=schemas.SteerResponse)
    def do_steer(req: schemas.SteerRequest):
        model = _resolve_system(req.system)
        problem = rank.SteeringProblem(x0=req.x0, horizon=req.horizon,
                                       initial_guess=req.initial_guess)
        try:
            u = rank.steer_to_origin(model, problem, tol=req.tol,
                                     max_iters=req.max_iters)
        except NoConvergence as err:
            return schemas.SteerResponse(
                converged=False, inputs=None, replayed_residual=err.residual,
                iterations_exhausted=True, message=str(err))
        # independent verification: replay the open-loop sequence through f
        final = model.flow(problem.x0, u.reshape(req.horizon, model.m)).states[-1]
        residual = float(np.linalg.norm(final))
        if residual > req.tol:
            return schemas.SteerResponse(
                converged=False, inputs=[float(v) for v in u],
                replayed_residual=residual,
                message="solver accepted but replay exceeds tolerance")
        return schemas.SteerResponse(
            converged=True, inputs=[float(v) for v in u],
            replayed_residual=residual,
            inputs_csv=artifacts.steering_csv(u, model.m))

    return app


app = create_app()
