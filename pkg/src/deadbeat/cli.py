"""Command-line client for the synthesis service.

The CLI never computes anything itself: it assembles a request, sends it to
the service (in-process by default, remote when --server is given), writes
the returned artifacts, and maps the outcome to an exit status:

    0  success
    1  error (bad input, stale table metadata, evaluation failure, I/O)
    2  negative verdict (partial coverage, rank condition fails)
    3  non-convergence (simulation, certification or steering fell short)
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import httpx

from . import __version__
from .artifacts import fmt


class CliError(Exception):
    def __init__(self, message, code=1):
        super().__init__(message)
        self.code = code


class ServiceClient:
    """HTTP client; runs against the in-process app unless a server URL is given."""

    def __init__(self, server: str | None):
        self._client = None
        self._app = None
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from .service import create_app
            self._app = create_app()

    def _in_process(self, method: str, path: str, payload):
        import asyncio

        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(transport=transport,
                                         base_url="http://deadbeat.local",
                                         timeout=None) as client:
                return await client.request(method, path, json=payload)

        return asyncio.run(go())

    def request(self, method: str, path: str, payload=None) -> dict:
        try:
            if self._client is not None:
                response = self._client.request(method, path, json=payload)
            else:
                response = self._in_process(method, path, payload)
        except httpx.HTTPError as err:
            raise CliError(f"cannot reach service: {err}") from err
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail")
            except ValueError:
                detail = response.text
            if isinstance(detail, dict):
                detail = f"{detail.get('type', 'error')}: {detail.get('message', '')}"
            raise CliError(f"service error ({response.status_code}): {detail}")
        return response.json()

    def get(self, path: str) -> dict:
        return self.request("GET", path)

    def post(self, path: str, payload: dict) -> dict:
        return self.request("POST", path, payload)

    def close(self):
        if self._client is not None:
            self._client.close()


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _system_payload(source: str) -> dict:
    """Registry name, or a definition file loaded client-side and sent inline."""
    if os.path.exists(source):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                return {"definition": json.load(fh)}
        except (OSError, json.JSONDecodeError) as err:
            raise CliError(f"cannot load system definition {source!r}: {err}")
    return {"source": source}


def _write(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as err:
        raise CliError(f"cannot read {path!r}: {err}")


def cmd_systems(client: ServiceClient, args) -> int:
    for info in client.get("/systems"):
        exprs = "; ".join(info["expressions"]) if info["expressions"] else "(opaque)"
        print(f"{info['name']}: n={info['n']} m={info['m']} "
              f"state_box={info['state_box']} input_box={info['input_box']}  f: {exprs}")
    return 0


def cmd_synth(client: ServiceClient, args) -> int:
    payload = {
        "system": _system_payload(args.system),
        "cells": args.cells,
        "inputs": args.inputs,
        "epsilon": args.epsilon,
        "max_layers": args.max_layers,
        "threads": args.threads,
    }
    result = client.post("/synth", payload)
    summary = result["summary"]
    _write(args.out, "layers.csv", result["layers_csv"])
    _write(args.out, "feedback_table.csv", result["table_csv"])
    _write(args.out, "synth_summary.json", result["summary_json"])
    certified = summary["certified_n"]
    print(f"system: {summary['system']}  cells: {summary['total_cells']}  "
          f"inputs/dim: {summary['inputs_per_dim']}  epsilon: {fmt(summary['epsilon'])}")
    print(f"coverage: {fmt(summary['coverage'])}  certified N: "
          f"{'NotCertified' if certified is None else certified}  "
          f"layers: {summary['layer_count']}  fixed point: {summary['fixed_point']}")
    print(f"artifacts written to {args.out}")
    return 0 if summary["coverage"] == 1.0 else 2


def cmd_simulate(client: ServiceClient, args) -> int:
    payload = {
        "system": _system_payload(args.system),
        "cells": args.cells,
        "inputs": args.inputs,
        "epsilon": args.epsilon,
        "x0": args.x0,
        "table_csv": _read(args.table),
        "max_steps": args.max_steps,
        "quantize": args.quantize,
    }
    result = client.post("/simulate", payload)
    _write(args.out, "trajectory.csv", result["trajectory_csv"])
    print(f"outcome: {result['outcome']}  steps: {result['steps']}  "
          f"final state: {[fmt(v) for v in result['final_state']]}")
    print(f"trajectory written to {args.out}")
    return 0 if result["converged"] else 3


def cmd_certify(client: ServiceClient, args) -> int:
    payload = {
        "system": _system_payload(args.system),
        "cells": args.cells,
        "inputs": args.inputs,
        "epsilon": args.epsilon,
        "table_csv": _read(args.table),
        "max_steps": args.max_steps,
        "threads": args.threads,
    }
    result = client.post("/certify", payload)
    _write(args.out, "basin_report.csv", result["report_csv"])
    n = result["empirical_n"]
    print(f"swept {result['total']} cells ({result['finite_total']} certified): "
          f"{result['converged']} converged ({fmt(result['converged_fraction'])})  "
          f"empirical N: {'-' if n is None else n}  "
          f"violations: {len(result['violations'])}")
    print(f"report written to {args.out}")
    return 0 if result["certified"] else 3


def cmd_rank(client: ServiceClient, args) -> int:
    payload = {
        "system": _system_payload(args.system),
        "horizon": args.horizon,
        "tau": args.tau,
        "neighborhood_radius": args.radius,
        "samples": args.samples,
        "seed": args.seed,
    }
    result = client.post("/rank", payload)
    _write(args.out, "rank_report.json", result["report_json"])
    print(f"rank at origin: {result['rank_at_origin']} / {result['state_dimension']}  "
          f"holds on sampled neighborhood: {result['holds_on_neighborhood']}")
    print(f"report written to {args.out}")
    return 0 if result["holds_on_neighborhood"] else 2


def cmd_steer(client: ServiceClient, args) -> int:
    payload = {
        "system": _system_payload(args.system),
        "x0": args.x0,
        "horizon": args.horizon,
        "tol": args.tol,
        "max_iters": args.max_iters,
        "initial_guess": args.guess,
    }
    result = client.post("/steer", payload)
    if not result["converged"]:
        residual = result["replayed_residual"]
        print(f"steering failed: {result.get('message', 'no convergence')}"
              f" (residual {fmt(residual) if residual is not None else '?'})",
              file=sys.stderr)
        return 3
    _write(args.out, "steering_inputs.csv", result["inputs_csv"])
    print(f"steered to origin: replayed residual {fmt(result['replayed_residual'])}")
    print(f"input sequence written to {args.out}")
    return 0


def cmd_serve(client, args) -> int:
    import uvicorn
    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deadbeat",
        description="Backward-reachability synthesis of deadbeat state feedback.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--server", default=None,
                        help="URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, table=False, grid=True):
        p.add_argument("--system", required=True,
                       help="registry name or system definition JSON file")
        if grid:
            p.add_argument("--cells", type=_int_list, required=True,
                           help="cells per state dimension, e.g. 41 or 41,41")
            p.add_argument("--inputs", type=_int_list, required=True,
                           help="input points per input dimension (odd)")
            p.add_argument("--epsilon", type=float, required=True,
                           help="target ball radius")
        if table:
            p.add_argument("--table", required=True, help="feedback table CSV path")
        p.add_argument("--out", default="deadbeat-out",
                       help="output directory (default: deadbeat-out)")

    p = sub.add_parser("systems", help="list built-in systems")
    p.set_defaults(func=cmd_systems)

    p = sub.add_parser("synth", help="compute layers and synthesize a feedback table")
    add_common(p)
    p.add_argument("--max-layers", type=int, default=None)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run the closed loop from one initial state")
    add_common(p, table=True)
    p.add_argument("--x0", type=_float_list, required=True,
                   help="initial state, e.g. 0.75 or 1,0")
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--quantize", action="store_true",
                   help="snap states to cell centers (the certification semantics)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("certify", help="sweep every reachable cell center")
    add_common(p, table=True)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("rank", help="check the controllability rank condition")
    p.add_argument("--system", required=True)
    p.add_argument("--horizon", type=int, required=True, help="flow-map horizon N")
    p.add_argument("--tau", type=float, default=1e-8, help="relative SVD rank cutoff")
    p.add_argument("--radius", type=float, default=0.1,
                   help="sampling radius around the origin")
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--seed", type=int, default=0,
                   help="seed of the low-discrepancy sampler")
    p.add_argument("--out", default="deadbeat-out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("steer", help="solve open-loop steering to the origin")
    p.add_argument("--system", required=True)
    p.add_argument("--x0", type=_float_list, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--guess", type=_float_list, default=None,
                   help="initial stacked input guess (default zeros)")
    p.add_argument("--out", default="deadbeat-out")
    p.set_defaults(func=cmd_steer)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(None, args)
    client = ServiceClient(args.server)
    try:
        return args.func(client, args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    finally:
        client.close()


if __name__ == "__main__":
    sys.exit(main())
