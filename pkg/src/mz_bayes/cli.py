"""Command-line entry point: ``mz-bayes <command> [options]``.

Every command writes one table (CSV or JSON) and a ``*.manifest.json`` next
to it holding the resolved configuration, library version and wall time.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bayes import (
    PhaseGrid,
    averaged_posterior_exact_zero,
    averaged_posterior_mc,
    confidence_report,
    default_grid,
)
from .errors import DivisibilityError, DomainError, FitError, OracleSizeError, UnreachableLevelError
from .experiments import (
    GAUSSIAN_LEVELS,
    SweepSpec,
    confidence_vs_p,
    cramer_rao_saturation,
    default_workers,
    make_state,
    split_budget,
    tail_cancellation_check,
    uncertainty_vs_ntotal,
)
from .interferometer import likelihood
from .rotation import ORACLE_MAX_TWO_J, brute_force_rotation, wigner_d_column
from .tables import emit_table

COMMANDS = ("likelihood", "posterior", "confidence", "sweep-p", "sweep-nt",
            "cramer-rao", "tail-check", "oracle-check")
FAMILIES = ("twin-fock", "twin-one", "noon", "yurke", "general")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _half_integer(text: str) -> Fraction:
    value = Fraction(text)
    if (2 * value).denominator != 1:
        raise argparse.ArgumentTypeError(f"{text} is not a half-integer")
    return value


def _half_integer_list(text: str) -> list[Fraction]:
    return [_half_integer(x) for x in text.split(",") if x.strip()]


def _num(x: Fraction) -> float | int:
    return int(x) if x.denominator == 1 else float(x)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mz-bayes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--output", "-o", type=Path, help="output file (default: <command>.<format>)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--grid", type=int, default=None, help="phase grid resolution M")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel workers (default: $MZ_BAYES_WORKERS or core count)")

    def state(p: argparse.ArgumentParser, p_default: int = 1, need_total: bool = True) -> None:
        p.add_argument("--family", choices=FAMILIES, default="twin-one")
        p.add_argument("--m", type=_half_integer, default=None, help="m for --family general")
        # sweep-nt takes its totals from --n-values
        p.add_argument("--n-total", type=int, required=need_total, default=2000, help="total particles N_T")
        p.add_argument("--p", type=int, default=p_default, help="independent runs")

    p = sub.add_parser("likelihood", help="outcome distribution P(mu|j,theta)")
    state(p)
    p.add_argument("--theta", type=float, default=0.0)
    common(p)

    for name, helptext in (("posterior", "averaged phase posterior"),
                           ("confidence", "MAP estimate, half-width and sigma")):
        p = sub.add_parser(name, help=helptext)
        state(p)
        p.add_argument("--theta", type=float, default=0.0)
        p.add_argument("--gamma", type=float, default=0.6827)
        p.add_argument("--trials", type=int, default=10000, help="Monte Carlo records when theta != 0")
        p.add_argument("--seed", type=int, default=42)
        common(p)

    p = sub.add_parser("sweep-p", help="confidence half-width against p at fixed N_T")
    state(p)
    p.add_argument("--p-values", type=_int_list, default=list(range(1, 11)))
    p.add_argument("--gammas", type=_float_list, default=list(GAUSSIAN_LEVELS))
    p.add_argument("--rounding", choices=("reject", "nearest"), default="reject")
    common(p)

    p = sub.add_parser("sweep-nt", help="uncertainty against N_T with a power-law fit")
    state(p, need_total=False)
    p.add_argument("--n-values", type=_int_list, required=False, default=[128, 256, 512, 1024, 2048])
    p.add_argument("--metric", choices=("confidence", "sigma"), default="confidence")
    p.add_argument("--gamma", type=float, default=0.6827)
    p.add_argument("--rounding", choices=("reject", "nearest"), default="reject")
    common(p)

    p = sub.add_parser("cramer-rao", help="sigma * N_T against 2 sqrt(p) at fixed N")
    p.add_argument("--family", choices=FAMILIES[:4], default="twin-fock")
    p.add_argument("--n-per-run", type=int, default=500)
    p.add_argument("--p-values", type=_int_list, default=list(range(1, 17)))
    common(p)

    p = sub.add_parser("tail-check", help="odd-m tail cancellation diagnostic")
    p.add_argument("--j", type=_half_integer, default=Fraction(20))
    p.add_argument("--m-values", type=_half_integer_list, default=[Fraction(0), Fraction(1), Fraction(2), Fraction(3)])
    common(p)

    p = sub.add_parser("oracle-check", help="recurrence versus dense matrix exponential")
    p.add_argument("--max-two-j", type=int, default=20)
    p.add_argument("--mesh", type=int, default=50, help="angles on [0, pi]")
    p.add_argument("--tol", type=float, default=1e-10)
    common(p)
    return parser


def _state_from(args):
    family = args.family.replace("-", "_")
    two_m = int(2 * args.m) if args.m is not None else None
    n = split_budget(family, args.n_total, args.p, "reject", two_m)
    return make_state(family, n, two_m), n


def _grid(args, two_j: int) -> PhaseGrid:
    return PhaseGrid(args.grid) if args.grid else default_grid(two_j)


def _posterior(args):
    state, n = _state_from(args)
    grid = _grid(args, state.two_j)
    if args.theta == 0.0:
        return averaged_posterior_exact_zero(state, args.p, grid), n
    return averaged_posterior_mc(state, args.theta, args.p, args.trials, args.seed, grid), n


def run_likelihood(args) -> list[dict]:
    state, _ = _state_from(args)
    dist = likelihood(state, args.theta)
    return [{"mu": two_mu / 2, "prob": prob} for two_mu, prob in zip(dist.two_mu, dist.probs)]


def run_posterior(args) -> list[dict]:
    post, _ = _posterior(args)
    return [{"phi": phi, "density": d} for phi, d in zip(post.grid.nodes, post.density)]


def run_confidence(args) -> list[dict]:
    post, n = _posterior(args)
    report = confidence_report(post, args.gamma)
    return [{
        "family": args.family,
        "n_total": args.n_total,
        "p": args.p,
        "n_per_run": n,
        "gamma": args.gamma,
        "theta": args.theta,
        "phi_hat": report.phi_hat,
        "c_gamma": report.half_width,
        "c_gamma_times_nt": report.half_width * args.n_total,
        "sigma": report.sigma,
    }]


def _spec(args, **kw) -> SweepSpec:
    return SweepSpec(
        family=args.family.replace("-", "_"),
        n_total=args.n_total,
        two_m=int(2 * args.m) if args.m is not None else None,
        rounding=args.rounding,
        grid_resolution=args.grid,
        **kw,
    )


def run_sweep_p(args) -> list[dict]:
    spec = _spec(args, p_values=tuple(args.p_values), gamma_levels=tuple(args.gammas))
    return confidence_vs_p(spec, workers=args.workers).rows


def run_sweep_nt(args) -> list[dict]:
    spec = _spec(args, n_values=tuple(args.n_values), gamma_levels=(args.gamma,))
    fit = uncertainty_vs_ntotal(spec, args.p, metric=args.metric, workers=args.workers)
    return [{"n_total": nt, "metric_value": value, "fit_exponent": fit.exponent,
             "fit_prefactor": fit.prefactor} for nt, value in fit.points]


def run_cramer_rao(args) -> list[dict]:
    return cramer_rao_saturation(args.family.replace("-", "_"), args.n_per_run, args.p_values,
                                 grid_resolution=args.grid, workers=args.workers)


def run_tail_check(args) -> list[dict]:
    two_j = int(2 * args.j)
    grid = PhaseGrid(args.grid) if args.grid else None
    reports = tail_cancellation_check(two_j, [int(2 * m) for m in args.m_values], grid=grid)
    return [{"j": _num(args.j), "m": _num(Fraction(r.two_m, 2)), "tail_mass": r.tail_mass,
             "cancellation_residual": r.cancellation_residual, "lobe_edge": r.lobe_edge}
            for r in reports]


def run_oracle_check(args) -> list[dict]:
    if not 0 <= args.max_two_j <= ORACLE_MAX_TWO_J:
        raise DomainError(f"--max-two-j must lie in [0, {ORACLE_MAX_TWO_J}]")
    thetas = np.linspace(0.0, np.pi, args.mesh)
    rows = []
    for two_j in range(args.max_two_j + 1):
        oracle = [brute_force_rotation(two_j, t) for t in thetas]
        for two_nu in range(-two_j, two_j + 1, 2):
            col = (two_nu + two_j) // 2
            dev = max(float(np.max(np.abs(wigner_d_column(two_j, two_nu, t).values - r[:, col])))
                      for t, r in zip(thetas, oracle))
            rows.append({"two_j": two_j, "two_nu": two_nu, "max_deviation": dev})
    worst = max(r["max_deviation"] for r in rows)
    verdict = "PASS" if worst < args.tol else "FAIL"
    print(f"{verdict} max deviation {worst:.3e} (tol {args.tol:g})")
    args.exit_status = 0 if verdict == "PASS" else 1
    return rows


RUNNERS = {
    "likelihood": run_likelihood,
    "posterior": run_posterior,
    "confidence": run_confidence,
    "sweep-p": run_sweep_p,
    "sweep-nt": run_sweep_nt,
    "cramer-rao": run_cramer_rao,
    "tail-check": run_tail_check,
    "oracle-check": run_oracle_check,
}


def _manifest_path(output: Path) -> Path:
    return output.with_name(output.stem + ".manifest.json")


def _resolved_config(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key == "exit_status":
            continue
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, Fraction):
            value = str(value)
        elif isinstance(value, list):
            value = [str(v) if isinstance(v, Fraction) else v for v in value]
        out[key] = value
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is None:
        args.workers = default_workers()
    if args.output is None:
        args.output = Path(f"{args.command}.{args.format}")
    args.exit_status = 0
    start = time.perf_counter()
    try:
        rows = RUNNERS[args.command](args)
        emit_table(rows, args.format, args.output)
    except (DomainError, DivisibilityError, FitError, OracleSizeError, UnreachableLevelError) as exc:
        print(f"mz-bayes {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"mz-bayes {args.command}: cannot write output: {exc}", file=sys.stderr)
        return 1
    manifest = {
        "command": args.command,
        "config": _resolved_config(args),
        "library_version": __version__,
        "wall_time_s": time.perf_counter() - start,
        "output": str(args.output),
    }
    _manifest_path(args.output).write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return args.exit_status


if __name__ == "__main__":
    sys.exit(main())
