"""Command-line entry point.

Exit codes: 0 success, 1 a claim or bound was violated (or a witness
failed to refute), 2 invalid input, 3 numerical or internal failure.
"""
from __future__ import annotations

import functools
import logging
import os
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from ptbounds.bipartite_core import BipartiteShape
from ptbounds.errors import PtBoundsError
from ptbounds.harness.campaign import cmd_verify
from ptbounds.harness.commands import BoundMode, cmd_bound, cmd_qp, cmd_witness
from ptbounds.harness.documents import CampaignConfig, SpectrumDocument, dump_json, load_spectrum_document
from ptbounds.harness.reference_example import cmd_reproduce

app = typer.Typer(add_completion=False, help="Spectral bounds for partial traces over unitary orbits.")
console = Console()
logger = logging.getLogger(__name__)

EXIT_VIOLATION = 1
EXIT_INTERNAL = 3


def _setup_logging() -> None:
    level = logging.DEBUG if os.getenv("PTBOUNDS_DEBUG") == "1" else logging.INFO
    logging.basicConfig(
        level=level, format="%(message)s", handlers=[RichHandler(console=Console(stderr=True), show_path=False)]
    )


def handle_errors(func):
    """Map the package's exceptions to exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except typer.Exit:
            raise
        except PtBoundsError as e:
            if e.exit_code == EXIT_INTERNAL:
                logger.exception("%s: %s", type(e).__name__, e)
            else:
                logger.error("%s: %s", type(e).__name__, e)
                logger.debug("input rejected", exc_info=True)
            raise typer.Exit(code=e.exit_code)
        except ValueError as e:
            logger.error("invalid input: %s", e)
            raise typer.Exit(code=2)
        except OSError as e:
            logger.error("I/O failure: %s", e)
            raise typer.Exit(code=2)
        except Exception as e:
            logger.exception("unexpected failure: %s", e)
            raise typer.Exit(code=EXIT_INTERNAL)

    return wrapper


def _load(path: Path, shape: Optional[str], qubits: Optional[int]) -> SpectrumDocument:
    doc = load_spectrum_document(path)
    if shape is not None or qubits is not None:
        update = {"shape": None, "n_qubits": qubits}
        if shape is not None:
            parsed = BipartiteShape.parse(shape)
            update = {"shape": (parsed.d1, parsed.d2), "n_qubits": None}
        doc = SpectrumDocument.model_validate({**doc.model_dump(), **update})
    return doc


def _emit(model, out: Optional[Path]) -> None:
    text = dump_json(model, out)
    if out is None:
        console.print_json(text)


@app.callback()
def main() -> None:
    _setup_logging()


@app.command()
@handle_errors
def bound(
    spectrum_file: Path = typer.Argument(..., help="JSON spectrum document"),
    functional: str = typer.Option("schatten:2", "--functional", "-f", help="e.g. schatten:2, kyfan:3, vn, renyi:5"),
    mode: BoundMode = typer.Option(BoundMode.JOINT, "--mode", "-m"),
    shape: Optional[str] = typer.Option(None, "--shape", help="Override the document's shape, e.g. 3x3"),
    qubits: Optional[int] = typer.Option(None, "--qubits", help="Override with an n-qubit system"),
    qp_type: str = typer.Option("auto", "--qp-type", help="1, 2, 3, 4, rect or auto"),
    seed: int = typer.Option(0, "--seed", help="Seed of the sanity sample"),
    out: Optional[Path] = typer.Option(None, "--out"),
) -> None:
    """Certified bound on a functional of the marginal spectra."""
    report = cmd_bound(_load(spectrum_file, shape, qubits), functional, mode, qp_type, seed)
    _emit(report, out)


@app.command()
@handle_errors
def verify(
    claims: List[str] = typer.Argument(..., help="Claim ids from claims.yaml"),
    trials: Optional[int] = typer.Option(None, "--trials", help="Defaults to each claim's own count"),
    seed: int = typer.Option(0, "--seed"),
    shape: List[str] = typer.Option([], "--shape", help="Repeatable; overrides the claims' default shapes"),
    qubits: List[int] = typer.Option([], "--qubits", help="Repeatable; overrides the default qubit counts"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Defaults to PTBOUNDS_TOL, else 1e-9"),
    workers: int = typer.Option(4, "--workers"),
    out: Optional[Path] = typer.Option(None, "--out"),
) -> None:
    """Run a seeded Monte Carlo campaign; exit 1 on any violation."""
    overrides = {} if tol is None else {"tolerance": tol}
    config = CampaignConfig(
        claims=claims, trials=trials, seed=seed, shapes=shape, qubits=qubits, workers=workers, **overrides
    )
    report = cmd_verify(config)
    table = Table(title=f"campaign seed={seed}")
    for column in ("claim", "target", "trials", "violations", "worst slack"):
        table.add_column(column)
    for r in report.results:
        table.add_row(r.claim, r.target, str(r.trials), str(r.violations), f"{r.worst_slack:.3g}")
    console.print(table)
    if out is not None:
        dump_json(report, out)
    if not report.passed:
        raise typer.Exit(code=EXIT_VIOLATION)


@app.command()
@handle_errors
def witness(
    spectrum_file: Path = typer.Argument(...),
    family: str = typer.Option(..., "--family", help="rank-band, low-rank, impossible-rank or 2xd"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Rotation amount; chosen automatically if omitted"),
    shape: Optional[str] = typer.Option(None, "--shape"),
    out: Optional[Path] = typer.Option(None, "--out"),
) -> None:
    """Build an orbit point that no diagonal arrangement majorizes."""
    report = cmd_witness(_load(spectrum_file, shape, None), family, alpha)
    _emit(report, out)
    if not report.refuted:
        raise typer.Exit(code=EXIT_VIOLATION)


@app.command()
@handle_errors
def qp(
    spectrum_file: Path = typer.Argument(...),
    qp_type: str = typer.Option("auto", "--qp-type", help="1, 2, 3, 4, rect or auto"),
    positivity: bool = typer.Option(False, "--positivity/--no-positivity"),
    shape: Optional[str] = typer.Option(None, "--shape"),
    out: Optional[Path] = typer.Option(None, "--out"),
) -> None:
    """Solve the quadratic programs and print models and solutions."""
    _emit(cmd_qp(_load(spectrum_file, shape, None), qp_type, positivity), out)


@app.command()
@handle_errors
def reproduce(out: Path = typer.Option(Path("."), "--out", help="Directory for pnorms.csv and renyi.csv")) -> None:
    """Write the bound tables for the reference 3x3 state."""
    pnorms, renyi = cmd_reproduce(out)
    console.print(f"wrote {pnorms} and {renyi}")


if __name__ == "__main__":
    app()
