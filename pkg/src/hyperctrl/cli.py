"""Command-line front end.

Exit codes: 0 Controllable, 1 NotControllable, 2 Inconclusive, 3 error.
``verify`` exits 0 iff every check passes.
"""

from __future__ import annotations

import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import click
import numpy as np

from .controllability import (
    CONTROLLABLE,
    INCONCLUSIVE,
    NOT_CONTROLLABLE,
    SearchOptions,
    analyze,
)
from .errors import HyperCtrlError
from .network import (
    GraphValidationError,
    NetworkOptions,
    load_graph,
    network_approx_test,
    network_exact_test,
    validate_graph,
)
from .solution import (
    ControlSignal,
    Trajectory,
    control_from_dict,
    export_state_csv,
    export_trajectory_csv,
    read_state_csv,
    reconstruct_pde,
    state_from_dict,
)
from .system import BoundaryState, HyperbolicSystem, _load_mapping, as_difference_system, load_system
from .verify import SuiteConfig, run_suite

OUTPUT_ENV = "HYPERCTRL_OUTPUT_DIR"
EXIT = {CONTROLLABLE: 0, NOT_CONTROLLABLE: 1, INCONCLUSIVE: 2}
EXIT_ERROR = 3


@dataclass
class RunConfig:
    subcommand: str
    input: Optional[Path] = None
    output: Optional[Path] = None
    q: float = 2.0
    sigma_min: Optional[float] = None
    sigma_max: Optional[float] = None
    im_max: Optional[float] = None
    grid: int = 64
    pass_tol: float = 1e-6
    fail_tol: float = 1e-10
    resolution: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if not self.pass_tol > 0 or not self.fail_tol > 0:
            raise click.UsageError("tolerances must be positive")
        if not 1.0 <= self.q < math.inf:
            raise click.UsageError("q must lie in [1, inf)")
        if not self.resolution > 0:
            raise click.UsageError("resolution must be positive")
        if self.grid <= 0:
            raise click.UsageError("grid must be positive")

    def search_options(self) -> SearchOptions:
        return SearchOptions(sigma_min=self.sigma_min, sigma_max=self.sigma_max, im_max=self.im_max,
                             grid=self.grid, pass_tol=self.pass_tol, fail_tol=self.fail_tol)

    def output_path(self, default_name: str) -> Path:
        if self.output is not None:
            return self.output
        return Path(os.environ.get(OUTPUT_ENV, ".")) / default_name


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _fail(msg: str) -> int:
    click.echo(f"error: {msg}", err=True)
    return EXIT_ERROR


def common_options(f):
    opts = [
        click.option("--input", "input_", type=click.Path(path_type=Path), help="System or graph spec (JSON/TOML)."),
        click.option("--output", type=click.Path(path_type=Path), default=None,
                     help=f"Output file or directory; defaults to ${OUTPUT_ENV} or the working directory."),
        click.option("--q", type=float, default=2.0, show_default=True, help="Norm exponent of the state space."),
        click.option("--sigma-min", type=float, default=None),
        click.option("--sigma-max", type=float, default=None),
        click.option("--im-max", type=float, default=None),
        click.option("--grid", type=int, default=64, show_default=True, help="Grid points per quasi-period."),
        click.option("--pass-tol", type=float, default=1e-6, show_default=True),
        click.option("--fail-tol", type=float, default=1e-10, show_default=True),
        click.option("--resolution", type=float, default=100.0, show_default=True,
                     help="CSV samples per unit time."),
        click.option("--seed", type=int, default=0, show_default=True),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _config(sub: str, input_, **kw) -> RunConfig:
    return RunConfig(sub, input_, **kw)


@click.group()
def cli():
    """Controllability analysis for hyperbolic systems and delay difference equations."""


@cli.command("analyze")
@common_options
@click.option("--mode", type=click.Choice(["approximate", "exact"]), default="approximate", show_default=True,
              help="Which verdict sets the exit code.")
def cmd_analyze(input_, mode, **kw):
    """Hautus-type controllability reports for a system spec."""
    cfg = _config("analyze", input_, **kw)
    if cfg.input is None:
        return _fail("--input is required")
    try:
        sysm = load_system(cfg.input)
        out = analyze(sysm, cfg.search_options())
    except (HyperCtrlError, ValueError) as exc:
        return _fail(str(exc))
    payload = {k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in out.items()}
    payload["q"] = cfg.q
    if payload.get("kalman"):
        payload["kalman"] = {k: (float(v) if isinstance(v, np.floating) else v) for k, v in payload["kalman"].items()}
    _write_json(cfg.output_path("report.json"), payload)
    for key in ("approximate", "exact"):
        click.echo(f"{key}: {out[key].verdict}")
    return EXIT[out[mode].verdict]


def _load_state(path: Optional[Path], delays) -> BoundaryState:
    if path is None:
        return BoundaryState.zeros(delays)
    if path.suffix.lower() == ".csv":
        return read_state_csv(path, delays)
    return state_from_dict(_load_mapping(path))


@cli.command("simulate")
@common_options
@click.option("--initial", type=click.Path(path_type=Path), default=None, help="Initial state (JSON or CSV).")
@click.option("--control", type=click.Path(path_type=Path), default=None, help="Control signal (JSON).")
@click.option("--horizon", type=float, default=None, help="Final time; defaults to the control horizon.")
@click.option("--snapshot", "snapshots", type=float, multiple=True, help="Times for PDE profile snapshots.")
def cmd_simulate(input_, initial, control, horizon, snapshots, **kw):
    """Solve the difference equation and write trajectory CSVs."""
    try:
        cfg = _config("simulate", input_, **kw)
    except click.UsageError as exc:
        return _fail(exc.message)
    if cfg.input is None:
        return _fail("--input is required")
    try:
        raw = load_system(cfg.input)
        sysm = as_difference_system(raw)
        phi = _load_state(initial, sysm.delays)
        if control is not None:
            u = control_from_dict(_load_mapping(control))
        else:
            # only needs to cover the horizon; T* keeps the domain nonempty
            u = ControlSignal.zeros(sysm.m, max(horizon or 0.0, sysm.T_star))
        T = horizon if horizon is not None else u.horizon
        if T < 0:
            return _fail("--horizon must be nonnegative")
        traj = Trajectory(sysm, phi, u, T)
        outdir = cfg.output_path("simulation")
        outdir.mkdir(parents=True, exist_ok=True)
        rows = export_trajectory_csv(traj, outdir / "trajectory.csv", cfg.resolution)
        export_state_csv(traj.history(T), outdir / "final_state.csv", cfg.resolution)
        for t in snapshots:
            if not isinstance(raw, HyperbolicSystem):
                return _fail("PDE snapshots need a transport system spec")
            _write_profiles(reconstruct_pde(raw, traj, t), outdir / f"pde_t{t:g}.csv", cfg.resolution)
    except (HyperCtrlError, ValueError, KeyError) as exc:
        return _fail(str(exc))
    click.echo(f"wrote {rows} trajectory rows to {outdir}")
    return 0


def _write_profiles(profiles, path: Path, resolution: float) -> None:
    count = max(1, int(math.ceil(resolution)))
    xs = (np.arange(count) + 0.5) / count
    with open(path, "w") as fh:
        fh.write("component,x,value\n")
        for i, f in enumerate(profiles):
            for x, v in zip(xs, f(xs)):
                fh.write(f"{i},{x!r},{float(v)!r}\n")


@cli.command("network")
@common_options
@click.option("--mode", type=click.Choice(["approximate", "exact"]), default="approximate", show_default=True)
def cmd_network(input_, mode, **kw):
    """Cycle structure and spectral controllability tests for a flow graph."""
    cfg = _config("network", input_, **kw)
    if cfg.input is None:
        return _fail("--input is required")
    try:
        g = load_graph(cfg.input)
        bad = validate_graph(g)
        if bad:
            click.echo(json.dumps([v.to_dict() for v in bad]), err=True)
            return EXIT_ERROR
        opts = NetworkOptions(pass_tol=cfg.pass_tol, fail_tol=cfg.fail_tol)
        approx = network_approx_test(g, opts)
        exact = network_exact_test(g, opts)
    except GraphValidationError as exc:
        click.echo(json.dumps([v.to_dict() for v in exc.violations]), err=True)
        return EXIT_ERROR
    except (HyperCtrlError, ValueError) as exc:
        return _fail(str(exc))
    _write_json(cfg.output_path("network_report.json"),
                {"approximate": approx.to_dict(), "exact": exact.to_dict(), "q": cfg.q})
    for key, rep in (("approximate", approx), ("exact", exact)):
        click.echo(f"{key}: {rep.verdict}")
    if approx.witness.get("type") == "obstruction":
        click.echo(json.dumps(approx.witness))
    return EXIT[(approx if mode == "approximate" else exact).verdict]


@cli.command("verify")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--inject-fault", is_flag=True, help="Debug: flip a sign in the Xi recursion.")
@click.option("--scale", type=float, default=1.0, show_default=True, help="Multiplier on instance counts.")
def cmd_verify(seed, inject_fault, scale):
    """Run the invariant suite and print a pass/fail table."""
    results = run_suite(SuiteConfig(seed=seed, inject_fault=inject_fault, scale=scale))
    for r in results:
        click.echo(r.line())
    failed = sum(not r.passed for r in results)
    click.echo(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    try:
        code = cli.main(args=argv, prog_name="hyperctrl", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except click.Abort:
        return EXIT_ERROR
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
