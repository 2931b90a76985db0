#!/usr/bin/env python3
"""
nehari-bif - Main Entry Point

Nehari manifold and fibering analysis of P(u) + lam T(u) - Q(u) = 0 with bifurcation diagrams.

Usage:
    nehari-bif fiber --A 1 --B 1 --C 1 --p 2 --q 3 --gamma 4 --lambda 0.2
    nehari-bif check --config run.ini
    nehari-bif extremal --set model.n=400
    nehari-bif sweep --config run.ini --threads 4 --gnuplot
    python -m nehari_bif solve --lambda 0.1 --branch minus

Numbers go to CSV files in the output directory, a short summary to stdout and logs to stderr.
Exit codes: 0 success, 2 invalid input, 3 non-convergence, 4 failed hypothesis or check.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from nehari_bif import __version__
from nehari_bif.analysis import (
    BranchId,
    maximize_lambda,
    minimize_branch,
    n0_degenerate_solve,
    nep_crossings,
    nep_diagonal,
    nep_scaling_constants,
    nonexistence_probe,
    sobolev_route_lambda_star,
    stationarity_residual,
    sweep,
    verify_solution,
)
from nehari_bif.core import (
    Exponents,
    FiberCase,
    FiberCoefficients,
    KirchhoffModel,
    NEPModel,
    NehariError,
    ParsedConfig,
    RestartScheduler,
    classify_fiber,
    parse_config,
    rayleigh_values,
    verify_hypotheses,
)
from nehari_bif.core.config import EnvSettings, load_env_settings
from nehari_bif.core.errors import InvalidModelError
from nehari_bif.core.fiber import fiber_energy_at_roots
from nehari_bif.report import RunManifest, write_csv, write_gnuplot, write_grid_function

log = logging.getLogger("nehari_bif")

LOG_FORMAT = "%(asctime)s : %(levelname)-8s : (%(name)s) %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"

# Arguments that change where or how fast a run happens but not its numbers
_NON_SEMANTIC = {"command", "config", "set", "output_dir", "threads", "verbose", "quiet", "gnuplot"}


class RunContext:
    """Everything a subcommand needs: parsed config, scheduler, output directory, manifest."""

    def __init__(self, args: argparse.Namespace, config: ParsedConfig, env: EnvSettings):
        self.args = args
        self.config = config
        self.scheduler = RestartScheduler(args.threads or env.threads)
        self.output_dir = Path(args.output_dir or env.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        arguments = ";".join(
            f"{key}={value}"
            for key, value in sorted(vars(args).items())
            if key not in _NON_SEMANTIC
        )
        self.manifest = RunManifest(
            command=args.command,
            config_snapshot=config.snapshot,
            seed=config.optimizer.seed,
            version=__version__,
            arguments=arguments,
        )
        self.outputs: List[str] = []

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def table(self, name: str, columns, rows, meta=None) -> Path:
        path = write_csv(self.path(name), columns, rows, self.manifest.digest, meta)
        self.outputs.append(str(path))
        return path

    def field(self, name: str, u) -> Path:
        path = write_grid_function(self.path(name), u, self.manifest.digest)
        self.outputs.append(str(path))
        return path

    def gnuplot(self, name: str, pairs, title: str) -> Path:
        path = write_gnuplot(self.path(name), pairs, title)
        self.outputs.append(str(path))
        return path

    def finish(self) -> Path:
        return self.manifest.finish(tuple(self.outputs)).write(self.output_dir)


def cmd_fiber(ctx: RunContext) -> None:
    a = ctx.args
    exps = Exponents(a.p, a.q, a.gamma)
    coeffs = FiberCoefficients(a.A, a.B, a.C, a.lam, exps)
    classification = classify_fiber(coeffs)
    phi_minus, phi_plus = fiber_energy_at_roots(coeffs, classification)
    values = rayleigh_values(a.A, a.B, a.C, exps)
    ctx.table(
        "fiber.csv",
        [
            "case",
            "margin",
            "t_minus",
            "t_plus",
            "t_deg",
            "phi_minus",
            "phi_plus",
            "lambda_u",
            "lambda0_u",
            "t_u",
            "t0_u",
        ],
        [
            (
                classification.tag,
                classification.margin,
                classification.t_minus,
                classification.t_plus,
                classification.t_deg,
                phi_minus,
                phi_plus,
                values.lambda_u,
                values.lambda0_u,
                values.t_u,
                values.t0_u,
            )
        ],
    )
    if classification.case is FiberCase.I:
        print(
            f"Case I: t_minus={classification.t_minus:.10g} t_plus={classification.t_plus:.10g}"
        )
    elif classification.case is FiberCase.II:
        print(f"Case II: t_deg={classification.t_deg:.10g}")
    else:
        print("Case III: no critical point")
    print(f"lambda(u)={values.lambda_u:.17g} lambda0(u)={values.lambda0_u:.17g}")


def cmd_check(ctx: RunContext) -> None:
    spec = ctx.config.model
    report = verify_hypotheses(spec, samples=ctx.args.samples, seed=ctx.config.optimizer.seed)
    c = report.constants
    ctx.table(
        "check.csv",
        [
            "model_id",
            "samples",
            "seed",
            "C1",
            "C2",
            "C_E3",
            "max_homogeneity_error",
            "max_euler_error",
            "max_gradient_error",
            "max_structure_error",
        ],
        [
            (
                report.model_id,
                report.samples,
                report.seed,
                c.C1,
                c.C2,
                c.C_E3,
                report.max_homogeneity_error,
                report.max_euler_error,
                report.max_gradient_error,
                report.max_structure_error,
            )
        ],
    )
    print(f"{report.model_id}: hypotheses hold on {report.samples} samples")
    print(f"C1={c.C1:.10g} C2={c.C2:.10g} C_E3={c.C_E3:.10g}")


def _extremal(ctx: RunContext):
    return maximize_lambda(ctx.config.model, ctx.config.optimizer, scheduler=ctx.scheduler)


def cmd_extremal(ctx: RunContext) -> None:
    spec = ctx.config.model
    report = _extremal(ctx)
    sobolev = (
        sobolev_route_lambda_star(spec, ctx.config.optimizer)
        if isinstance(spec, KirchhoffModel)
        else None
    )
    ctx.table(
        "extremal.csv",
        [
            "model_id",
            "lambda0_star",
            "lambda_star",
            "ratio_residual",
            "iterations",
            "seed",
            "restarts",
            "stationarity_residual",
            "lambda_star_sobolev",
            "stalled",
        ],
        [
            (
                report.model_id,
                report.lambda0_star,
                report.lambda_star,
                report.ratio_residual,
                report.iterations,
                report.seed,
                report.restarts_used,
                stationarity_residual(report),
                sobolev,
                report.stalled,
            )
        ],
    )
    ctx.field("extremal_maximizer.csv", report.maximizer)
    print(
        f"{report.model_id}: lambda0*={report.lambda0_star:.17g} "
        f"lambda*={report.lambda_star:.17g}"
    )
    if sobolev is not None:
        print(f"Sobolev route lambda*={sobolev:.17g}")


def cmd_solve(ctx: RunContext) -> None:
    spec = ctx.config.model
    branch = BranchId.parse(ctx.args.branch)
    extremal = _extremal(ctx)
    report = minimize_branch(
        spec,
        ctx.args.lam,
        branch,
        ctx.config.optimizer,
        extremal=extremal,
        scheduler=ctx.scheduler,
    )
    constants = verify_hypotheses(
        spec, samples=ctx.args.samples, seed=ctx.config.optimizer.seed
    ).constants
    diagnostics = verify_solution(
        spec, report, constants, residual_tol=ctx.config.optimizer.residual_tol
    )
    ctx.table(
        "solve.csv",
        [
            "model_id",
            "lambda",
            "branch",
            "target",
            "energy",
            "P",
            "residual",
            "nehari_residual",
            "second_order_sign",
            "h1_norm",
            "converged",
            "stalled",
            "checks",
            "seed",
        ],
        [
            (
                report.model_id,
                report.lam,
                report.branch.value,
                report.target,
                report.energy,
                report.P_val,
                report.residual,
                report.nehari_residual,
                report.second_order_sign,
                diagnostics.norm,
                report.converged,
                report.stalled,
                ";".join(diagnostics.checks),
                ctx.config.optimizer.seed,
            )
        ],
    )
    ctx.field("solve_solution.csv", report.solution)
    print(
        f"{report.target} at lambda={report.lam:.10g}: energy={report.energy:.17g} "
        f"residual={report.residual:.3e} (checks: {', '.join(diagnostics.checks)})"
    )


def cmd_sweep(ctx: RunContext) -> None:
    cfg = ctx.config.sweep
    extremal = _extremal(ctx)
    diagram = sweep(cfg, extremal, scheduler=ctx.scheduler)
    upper = diagram.lambda_b_bracket[1] if diagram.lambda_b_bracket else None
    rows = [
        (
            r.lam,
            r.plus.energy if r.plus else None,
            r.minus.energy if r.minus else None,
            r.plus.P_val if r.plus else None,
            r.minus.P_val if r.minus else None,
            r.plus.residual if r.plus else None,
            r.minus.residual if r.minus else None,
            r.exists,
            r.fiber_case_at_maximizer,
        )
        for r in diagram.records
    ]
    ctx.table(
        "sweep.csv",
        [
            "lambda",
            "energy_plus",
            "energy_minus",
            "P_plus",
            "P_minus",
            "residual_plus",
            "residual_minus",
            "exists",
            "fiber_case",
        ],
        rows,
        meta={
            "model_id": diagram.model_id,
            "lambda0_star": diagram.lambda0_star,
            "lambda_star": diagram.lambda_star,
            "seed": diagram.seed,
            "grid": diagram.grid_spec,
            "lambda_b": diagram.lambda_b_empirical,
            "lambda_b_upper": upper,
            "limit_energy_predicted": diagram.limit_energy_predicted,
            "limit_energy_observed": diagram.limit_energy_observed,
        },
    )
    if ctx.args.gnuplot:
        for name in ("plus", "minus"):
            pairs = [
                (r.lam, getattr(r, name).energy)
                for r in diagram.records
                if getattr(r, name) is not None
            ]
            ctx.gnuplot(f"sweep_{name}.dat", pairs, f"lambda energy_{name} {diagram.model_id}")
    print(
        f"{diagram.model_id}: {sum(r.exists for r in diagram.records)}/{len(diagram.records)} "
        f"lambda values with solutions; lambda_b in {diagram.lambda_b_bracket}"
    )


def cmd_probe(ctx: RunContext) -> None:
    extremal = _extremal(ctx)
    lam = ctx.args.lam if ctx.args.lam is not None else ctx.args.factor * extremal.lambda_star
    report = nonexistence_probe(
        ctx.config.model,
        lam,
        directions=ctx.args.directions,
        seed=ctx.config.optimizer.seed,
        extremal=extremal,
        scheduler=ctx.scheduler,
    )
    counts = report.case_counts
    ctx.table(
        "probe.csv",
        [
            "lambda",
            "lambda_star",
            "rays",
            "case_I",
            "case_II",
            "case_III",
            "case3_fraction",
            "maximizer_case",
        ],
        [
            (
                report.lam,
                extremal.lambda_star,
                report.directions,
                counts["I"],
                counts["II"],
                counts["III"],
                report.case3_fraction,
                report.maximizer_case,
            )
        ],
    )
    print(
        f"lambda={lam:.10g}: case III fraction {report.case3_fraction:.6g} "
        f"over {report.directions} rays"
    )


def cmd_fold(ctx: RunContext) -> None:
    extremal = _extremal(ctx)
    fold = n0_degenerate_solve(
        ctx.config.model,
        extremal,
        ctx.config.optimizer,
        max_steps=ctx.args.steps,
        scheduler=ctx.scheduler,
    )
    ctx.table(
        "fold.csv",
        ["lambda", "energy_plus", "energy_minus", "P_plus", "P_minus", "merge_gap"],
        [
            (s.lam, s.energy_plus, s.energy_minus, s.P_plus, s.P_minus, s.merge_gap)
            for s in fold.steps
        ],
        meta={
            "model_id": ctx.config.model.model_id,
            "lambda_star": fold.lambda_star,
            "P_predicted": fold.P_predicted,
            "P_extrapolated": fold.P_extrapolated,
            "energy_predicted": fold.energy_predicted,
            "energy_extrapolated": fold.energy_extrapolated,
        },
    )
    ctx.field("fold_solution.csv", fold.last.solution)
    print(
        f"Fold: energy {fold.energy_extrapolated:.10g} (predicted {fold.energy_predicted:.10g}), "
        f"P {fold.P_extrapolated:.10g} (predicted {fold.P_predicted:.10g})"
    )


def cmd_nep(ctx: RunContext) -> None:
    spec = ctx.config.model
    if not isinstance(spec, NEPModel):
        raise InvalidModelError(f"the nep command needs an nep model, got {spec.kind}")
    extremal = _extremal(ctx)
    scaling = nep_scaling_constants(
        spec, ctx.config.optimizer, scheduler=ctx.scheduler, extremal=extremal
    )
    crossings = nep_crossings(scaling)
    ctx.table(
        "nep.csv",
        [
            "model_id",
            "M",
            "exponent",
            "lambda0_coeff",
            "lambda_coeff",
            "mu0",
            "lambda_star_cross",
            "mu0_residual",
            "lambda_cross_residual",
        ],
        [
            (
                spec.model_id,
                scaling.M,
                scaling.exponent,
                scaling.lambda0_coeff,
                scaling.lambda_coeff,
                crossings.mu0,
                crossings.lambda_star_cross,
                crossings.mu0_residual,
                crossings.lambda_cross_residual,
            )
        ],
    )
    print(
        f"M={scaling.M:.17g} mu0={crossings.mu0:.17g} "
        f"lambda_*={crossings.lambda_star_cross:.17g}"
    )
    if ctx.args.diagonal:
        _nep_diagonal(ctx, extremal)


def _nep_diagonal(ctx: RunContext, extremal) -> None:
    diagonal = nep_diagonal(
        ctx.config.model,
        ctx.config.optimizer,
        directions=ctx.args.directions,
        seed=ctx.config.optimizer.seed,
        extremal=extremal,
        scheduler=ctx.scheduler,
    )
    ctx.table(
        "nep_diagonal.csv",
        ["lambda", "regime", "energy_plus", "energy_minus", "case3_fraction"],
        [
            (
                p.lam,
                p.regime,
                p.plus.energy if p.plus else None,
                p.minus.energy if p.minus else None,
                p.case3_fraction,
            )
            for p in diagonal.points
        ],
        meta={"model_id": diagonal.model_id, "mu0": diagonal.crossings.mu0},
    )
    for p in diagonal.points:
        print(f"mu=lambda={p.lam:.10g}: {p.regime}")


COMMANDS: Dict[str, Callable[[RunContext], None]] = {
    "fiber": cmd_fiber,
    "check": cmd_check,
    "extremal": cmd_extremal,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "probe": cmd_probe,
    "fold": cmd_fold,
    "nep": cmd_nep,
}


def run_subcommand(name: str, args: argparse.Namespace) -> int:
    """Run one subcommand and map library errors to exit codes."""
    try:
        env = load_env_settings()
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"optimizer.seed={args.seed}")
        config = parse_config(args.config, overrides)
        ctx = RunContext(args, config, env)
        COMMANDS[name](ctx)
        manifest = ctx.finish()
    except NehariError as exc:
        log.error("%s failed: %s", name, exc)
        return exc.exit_code
    log.info("Wrote %s", manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [model], [optimizer], [sweep] sections")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one configuration value (repeatable)",
    )
    common.add_argument("--seed", type=int, help="optimizer seed (default: optimizer.seed = 0)")
    common.add_argument(
        "--threads", type=int, help="worker threads (default: NEHARI_THREADS or 1)"
    )
    common.add_argument(
        "--output-dir", help="directory for CSV output (default: NEHARI_OUTPUT_DIR or .)"
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    parser = argparse.ArgumentParser(
        prog="nehari-bif",
        description="Nehari manifold and fibering bifurcation analysis",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "configuration defaults:\n"
            "  [model]     model=kirchhoff a=1.0 q=3.0 gamma=4.0 mu=1.0 dim=1 n=200 length=1.0\n"
            "  [optimizer] max_iter=5000 grad_tol=1e-9 stall_tol=1e-6 restarts=8 seed=0\n"
            "              initial_step=0.1 shrink=0.5 sufficient_increase=1e-4 residual_tol=1e-6\n"
            "              max_resamples=50\n"
            "  [sweep]     grid=geometric count=64 lo=0.05 hi= (1 + margin) values= margin=0.10\n"
            "              warm_start=true\n"
            "exit codes: 0 ok, 2 invalid input, 3 non-convergence, 4 hypothesis/check failure"
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fiber = sub.add_parser("fiber", parents=[common], help="classify one fiber map")
    for name in ("A", "B", "C"):
        fiber.add_argument(f"--{name}", type=float, required=True)
    fiber.add_argument("--p", type=float, required=True)
    fiber.add_argument("--q", type=float, required=True)
    fiber.add_argument("--gamma", type=float, required=True)
    fiber.add_argument("--lambda", dest="lam", type=float, required=True)

    check = sub.add_parser("check", parents=[common], help="verify model hypotheses")
    check.add_argument("--samples", type=int, default=100)

    sub.add_parser("extremal", parents=[common], help="estimate lambda* and lambda0*")

    solve = sub.add_parser("solve", parents=[common], help="solve one branch at fixed lambda")
    solve.add_argument("--lambda", dest="lam", type=float, required=True)
    solve.add_argument("--branch", choices=["plus", "minus"], default="plus")
    solve.add_argument(
        "--samples", type=int, default=100, help="samples for the model constants (default 100)"
    )

    sweep_parser = sub.add_parser("sweep", parents=[common], help="bifurcation diagram")
    sweep_parser.add_argument(
        "--gnuplot", action="store_true", help="also write two-column data per branch"
    )

    probe = sub.add_parser("probe", parents=[common], help="non-existence probe at one lambda")
    probe.add_argument("--lambda", dest="lam", type=float, help="absolute lambda")
    probe.add_argument(
        "--factor", type=float, default=1.05, help="lambda as a multiple of lambda* (default 1.05)"
    )
    probe.add_argument("--directions", type=int, default=200)

    fold = sub.add_parser("fold", parents=[common], help="continue both branches into lambda*")
    fold.add_argument("--steps", type=int, default=20)

    nep = sub.add_parser("nep", parents=[common], help="mu power laws and crossings (nep model)")
    nep.add_argument(
        "--diagonal", action="store_true", help="also solve at mu = lambda in each regime"
    )
    nep.add_argument("--directions", type=int, default=200, help="probe rays per diagonal point")
    return parser


def setup_logging(args: argparse.Namespace) -> None:
    if args.verbose:
        level = "DEBUG"
    elif args.quiet:
        level = "WARNING"
    else:
        try:
            level = load_env_settings().log_level.upper()
        except NehariError:
            level = "INFO"
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt=LOG_DATEFMT, stream=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    setup_logging(args)
    log.debug("nehari-bif %s: %s", __version__, args.command)
    return run_subcommand(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
