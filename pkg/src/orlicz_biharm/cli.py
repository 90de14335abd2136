"""Command-line front end.

Commands::

    nfunc inspect --family power --p 2
    eig solve --config run.toml --r 1
    eig sweep --config run.toml --r 0.5,1,2
    spectrum scan --config run.toml --lambdas 0.1,1,10
    oracle beam --n 200

Artifacts go to the config's ``output_dir`` (``--output-dir`` for
``nfunc inspect``).  JSON files and the comment header of every CSV carry
the schema version and the full config echo.  Exit codes: 0 success, 1
configuration or usage error, 2 non-convergence under ``--strict``.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from orlicz_biharm.config import SCHEMA_VERSION, ConfigError, load_config
from orlicz_biharm.eigensolver import check_lower_bounds, solve_constrained
from orlicz_biharm.nfunction import GrowthBoundError, nfunction_from_config
from orlicz_biharm.oracle import OracleError, beam_eigenvalue, run_oracle_beam
from orlicz_biharm.spectrum_map import regime_report, scan_spectrum, summarize_scan

__all__ = ["main", "dispatch", "cli"]


class NonConvergence(click.ClickException):
    exit_code = 2


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan literals
        return x if math.isfinite(x) else repr(x)
    return obj


def _write_json(path: Path, payload: dict, echo: dict) -> None:
    doc = {"schema": SCHEMA_VERSION, "config": echo, **payload}
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _comments(echo: dict) -> list[str]:
    return [f"schema: {SCHEMA_VERSION}", f"config: {json.dumps(_jsonable(echo), sort_keys=True)}"]


def _write_csv(path: Path, header, rows, echo: dict) -> None:
    with open(path, "w", newline="") as fh:
        for line in _comments(echo):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _float_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _load(path):
    cfg = load_config(path)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


@click.group()
def cli():
    """Biharmonic g-Laplacian eigenproblems in Orlicz-Sobolev spaces."""


@cli.group()
def nfunc():
    """Inspect N-functions."""


@nfunc.command("inspect")
@click.option("--family", type=click.Choice(["power", "piecewise", "powerlog"]), required=True)
@click.option("--p", "p", type=float, default=2.0, show_default=True)
@click.option("--q", "q", type=float, default=3.0, show_default=True)
@click.option("--t-min", type=float, default=0.01, show_default=True)
@click.option("--t-max", type=float, default=100.0, show_default=True)
@click.option("--points", type=int, default=9, show_default=True)
@click.option("--output-dir", type=click.Path(file_okay=False), default=".", show_default=True)
def nfunc_inspect(family, p, q, t_min, t_max, points, output_dir):
    """Table of t, G, g, conjugate of G at g(t), and t g / G on a log grid."""
    if not (0 < t_min < t_max) or points < 2:
        raise ConfigError("need 0 < t-min < t-max and at least 2 points")
    block = {"family": family, "p": p, "q": q}
    spec = nfunction_from_config(block)
    t = np.logspace(np.log10(t_min), np.log10(t_max), points)
    G, g = spec.G(t), spec.g(t)
    rows = list(zip(t, G, g, spec.conjugate(g), t * g / G))
    echo = {"command": "nfunc inspect", **spec.to_config(),
            "t_min": t_min, "t_max": t_max, "points": points}
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["t", "G", "g", "G_conj_of_g", "tg_over_G"]
    _write_csv(out / "nfunc_table.csv", header, rows, echo)
    click.echo("\t".join(header))
    for row in rows:
        click.echo("\t".join(f"{v:.10g}" for v in row))


@cli.group()
def eig():
    """Constrained eigenproblem on a modular sphere."""


def _result_payload(res, specG, cfg):
    payload = {"result": res.scalars()}
    if res.converged:
        report = check_lower_bounds(res, specG, cfg=cfg)
        payload["lower_bounds"] = {c.name: {"lhs": c.lhs, "rhs": c.rhs, "tol": c.tol,
                                            "holds": c.holds} for c in report.checks}
    return payload


@eig.command("solve")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)
@click.option("--r", "r", type=float, default=1.0, show_default=True)
@click.option("--strict", is_flag=True, help="Exit with status 2 if the solver does not converge.")
def eig_solve(config_path, r, strict):
    """Minimize rho_G(Laplacian u) on {rho_G(u) = r}."""
    cfg, out = _load(config_path)
    res = solve_constrained(cfg.G, cfg.grid, r, cfg.solver)
    echo = {"command": "eig solve", "r": r, **cfg.to_dict()}
    _write_json(out / "eigen_result.json", _result_payload(res, cfg.G, cfg.solver), echo)
    res.u_r.to_csv(out / "u_r.csv", comments=_comments(echo))
    click.echo(f"lambda_r = {res.lambda_r:.17g}  c_r = {res.c_r:.17g}  "
               f"residual = {res.residual:.3e}  converged = {res.converged}")
    if strict and not res.converged:
        raise NonConvergence(f"solver did not converge (residual {res.residual:.3e})")


@eig.command("sweep")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)
@click.option("--r", "r_list", type=str, required=True, help="Comma-separated radii.")
@click.option("--strict", is_flag=True, help="Exit with status 2 if any run does not converge.")
def eig_sweep(config_path, r_list, strict):
    """Solve over a list of radii and tabulate c_r and lambda_r."""
    cfg, out = _load(config_path)
    radii = _float_list(r_list)
    results = [solve_constrained(cfg.G, cfg.grid, r, cfg.solver) for r in radii]
    rows = [(res.r, res.c_r, res.lambda_r, res.residual, res.iterations, res.converged)
            for res in results]
    echo = {"command": "eig sweep", "r": radii, **cfg.to_dict()}
    _write_csv(out / "sweep.csv", ["r", "c_r", "lambda_r", "residual", "iterations", "converged"],
               rows, echo)
    for row in rows:
        click.echo(f"r = {row[0]:.6g}  lambda_r = {row[2]:.17g}  converged = {row[5]}")
    if strict and not all(res.converged for res in results):
        raise NonConvergence("at least one radius did not converge")


@cli.group()
def spectrum():
    """Two-function spectrum scan."""


@spectrum.command("scan")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)
@click.option("--lambdas", "lambdas", type=str, required=True, help="Comma-separated lambda values.")
@click.option("--samples", type=int, default=200, show_default=True,
              help="Samples for the embedding-constant estimate.")
@click.option("--strict", is_flag=True, help="Exit with status 2 if a predicted point is not found.")
def spectrum_scan(config_path, lambdas, samples, strict):
    """Search for nontrivial critical points of Phi_lambda at each lambda."""
    cfg, out = _load(config_path)
    lams = _float_list(lambdas)
    specB = cfg.specB
    report = regime_report(cfg.G, specB, cfg.grid, samples=samples, seed=cfg.solver.seed)
    results = scan_spectrum(cfg.G, specB, cfg.grid, lams, cfg.solver, report)
    summary = summarize_scan(results, report)
    echo = {"command": "spectrum scan", "lambdas": lams, "samples": samples, **cfg.to_dict()}
    _write_csv(out / "spectrum_scan.csv", ["lambda", "found", "phi", "residual", "method"],
               [tuple(res.row().values()) for res in results], echo)
    _write_json(out / "regime.json", {"report": report.to_dict(), "summary": summary}, echo)
    click.echo(f"regime {report.regime.value}: {summary['found']} found, "
               f"{summary['not_found']} not found")
    if strict and summary["predicted_not_found"]:
        raise NonConvergence("a predicted critical point was not found")


@cli.group()
def oracle():
    """Independent reference values."""


@oracle.command("beam")
@click.option("--p", "p_flag", type=float, default=2.0, show_default=True)
@click.option("--n", "n", type=int, default=200, show_default=True)
def oracle_beam(p_flag, n):
    """Smallest eigenvalue of the dense linear clamped-beam pencil."""
    lam = run_oracle_beam(p_flag, n)
    exact = beam_eigenvalue()
    click.echo(json.dumps({"n": n, "dense_eigenvalue": lam, "k1_fourth_power": exact,
                           "relative_gap": (lam - exact) / exact}, sort_keys=True))


def dispatch(argv=None) -> int:
    """Run the CLI on ``argv`` and return the exit code instead of exiting."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cli.main(args=argv, prog_name="orlicz-biharm", standalone_mode=False)
    except NonConvergence as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except GrowthBoundError as exc:
        click.echo(f"Error: {exc}", err=True)
        return 1
    except (ConfigError, OracleError, ValueError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch())
