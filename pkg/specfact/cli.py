"""
Command-line entry point: factor, verify, sweep, constants and selftest.

Exit codes: 0 success, 1 violation or non-convergence, 2 parse or usage
error, 3 theorem precondition not met.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from specfact import __version__
from specfact.bounds import c_constant, kolmogorov_constants, sine_integral_pi
from specfact.circle import CircleGrid
from specfact.config import (
    SCALAR_THEOREMS,
    THEOREMS,
    FactorizationSettings,
    FamilyConfig,
    GridSettings,
    RunConfig,
    VerificationSettings,
    default_log_level,
)
from specfact.errors import (
    FactorizationError,
    InputParseError,
    PreconditionError,
    QuadratureError,
    SpecfactError,
)
from specfact.factorize import check_paley_wiener, log_det_gap, spectral_factor
from specfact.families import (
    BUILTIN_DENSITIES,
    Example1Params,
    ScalarFamily,
    ScalarFamilyParams,
    builtin_density,
    cross_check_factor,
    example1_pair,
)
from specfact.io import read_density, write_factor
from specfact.matrix_calc import pointwise_log_det
from specfact.orlicz import OrliczPair
from specfact.selftest import DEFAULT_CASES, SUITES, run_selftests
from specfact.sweep import sweep, write_sweep
from specfact.verify import DensityPair, verify_pair, verify_scalar_pair
from utils.expressions import ExpressionError
from utils.serialization import FLOAT_FORMAT, save_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_PRECONDITION = 3

KNOWN_K = 1.347
K_TOLERANCE = 1e-3
K0_BOUND = 1.25
CONSTANT_EXPONENTS = (1.5, 2.0, 3.0, 4.0)


def _mark(ok):
    return "✅" if ok else "❌"


def _common_flags():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--grid-n", type=int, help="grid size N (power of two)")
    parent.add_argument("--eps", type=float, help="family parameter eps")
    parent.add_argument("--p0", type=float, default=2.0)
    parent.add_argument("--p1", type=float, default=2.0)
    parent.add_argument("--alpha", type=float, default=0.5)
    parent.add_argument(
        "--tolerance", type=float, default=1e-6, help="relative violation tolerance"
    )
    parent.add_argument("--seed", type=int, default=0)
    parent.add_argument(
        "--no-confirm",
        action="store_true",
        help="report violations without re-running on the doubled grid",
    )
    parent.add_argument(
        "--out", help="output root (default $SPECFACT_OUT_DIR or ./specfact-out)"
    )
    parent.add_argument(
        "--log-level", default=None, help="logging level (default $SPECFACT_LOG_LEVEL)"
    )
    return parent


def build_parser():
    parser = argparse.ArgumentParser(
        prog="specfact",
        description=(
            "Spectral factorization on the circle and continuity bounds"
            " for spectral factors."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()

    factor = commands.add_parser("factor", parents=[common], help="factor a density")
    source = factor.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="density CSV")
    source.add_argument("--family", choices=BUILTIN_DENSITIES, help="builtin density")

    verify = commands.add_parser(
        "verify", parents=[common], help="check one estimate on one pair"
    )
    pair_source = verify.add_mutually_exclusive_group(required=True)
    pair_source.add_argument("--input", help="density CSV for F")
    pair_source.add_argument(
        "--family", choices=BUILTIN_DENSITIES + ("scalar6",), help="builtin pair"
    )
    verify.add_argument("--against", help="density CSV for G (defaults to F)")
    verify.add_argument("--theorem", choices=THEOREMS)
    verify.add_argument("--delta", type=float, help="override delta of ex1/ex2")
    verify.add_argument(
        "--gamma",
        type=float,
        help="ratio exponent of the scalar family (default max(0.6, (p0-1)/p0))",
    )
    verify.add_argument(
        "--psi0",
        help=(
            "Orlicz pair for the F-side norm as JSON,"
            ' e.g. \'{"kind": "exp", "p1": 2}\''
        ),
    )

    run = commands.add_parser("sweep", parents=[common], help="run a family sweep")
    run.add_argument("config", help="family config JSON")
    run.add_argument("--jobs", type=int, default=1)

    commands.add_parser("constants", parents=[common], help="print K, K0 and c(p0)")

    selftest = commands.add_parser(
        "selftest", parents=[common], help="run the property suites"
    )
    selftest.add_argument("--suite", action="append", choices=list(SUITES))
    selftest.add_argument("--cases", type=int, default=DEFAULT_CASES)
    return parser


def run_config_from(args, family_config=None):
    family = getattr(args, "family", None)
    if family is None and family_config is not None:
        family = family_config.family
    return RunConfig(
        command=args.command,
        input_path=getattr(args, "input", None) or getattr(args, "config", None),
        out_dir=args.out,
        family=family,
        grid_size=args.grid_n,
        theorem=getattr(args, "theorem", None),
        eps=args.eps,
        seed=args.seed,
        jobs=getattr(args, "jobs", 1),
        grid=GridSettings(confirm_by_doubling=not args.no_confirm),
        verification=VerificationSettings(
            p0=args.p0, p1=args.p1, alpha=args.alpha, tolerance=args.tolerance
        ),
        factorization=FactorizationSettings(),
        family_config=family_config,
    )


def _grid(args):
    return CircleGrid(args.grid_n) if args.grid_n else None


def cmd_factor(args, config):
    extra = {}
    if args.input:
        F, header = read_density(args.input)
        name = Path(args.input).stem
        factor = spectral_factor(F, config.factorization)
    elif args.family in ("ex1", "ex2"):
        params = Example1Params(p1=args.p1, eps=args.eps or 1e-3, variant=args.family)
        pair = example1_pair(params, _grid(args))
        F, header, name = pair.F, pair.params, args.family
        # explicit factor; the Wilson iteration only cross-checks it
        factor = pair.F_plus
        extra["wilson_cross_check"] = cross_check_factor(pair, config.factorization)
    else:
        F, header = builtin_density(args.family, _grid(args), seed=args.seed)
        name = args.family
        extra["paley_wiener_trace"] = check_paley_wiener(
            lambda grid: builtin_density(args.family, grid, seed=args.seed)[0],
            F.grid,
            doublings=1,
        )
        factor = spectral_factor(F, config.factorization)
    gap = log_det_gap(factor, pointwise_log_det(F))
    relative = factor.residual / max(float(np.mean(F.pointwise_norms())), 1e-300)
    extra.update({"log_det_gap": gap, "relative_residual": relative, "source": header})

    out_dir = config.output_root() / "factor"
    write_factor(
        out_dir, factor, name=name, extra={**extra, "run_config": config.model_dump()}
    )

    print(f"factor of {name}: N={F.grid.size}, n={F.dim}, algorithm={factor.algorithm}")
    print(
        f"{_mark(factor.converged)} residual {factor.residual:.3e}"
        f" (relative {relative:.3e})"
    )
    print(f"{_mark(gap <= 1e-6)} det identity gap {gap:.3e}")
    if "wilson_cross_check" in extra:
        check = extra["wilson_cross_check"]["F"]
        print(
            f"   Wilson cross-check: distance {check['distance']:.3e},"
            f" converged {check['converged']}"
        )
    print(f"F+(0) =\n{np.array2string(factor.at_zero, precision=6)}")
    print(f"written to {out_dir}")
    if not factor.converged:
        print(
            f"factorization did not converge after {factor.iterations} iterations",
            file=sys.stderr,
        )
        return EXIT_FAILURE
    return EXIT_OK


def _verify_scalar6(args, config, theorem):
    p = args.p0
    gamma = args.gamma if args.gamma is not None else max(0.6, (p - 1) / p)
    params = ScalarFamilyParams(p=p, gamma=gamma, eps=args.eps or 1e-2)
    family = ScalarFamily(params)
    verification = config.verification.model_copy(update={"p0": params.p})
    return verify_scalar_pair(
        None,
        None,
        theorem,
        verification,
        lhs=family.lhs(),
        statistics=family.statistics(),
        label="scalar6",
        params={"eps": params.eps, **params.model_dump()},
    )


def _matrix_pair(args):
    """The pair to verify and an optional rebuild callable for doubling."""
    if args.family in ("ex1", "ex2"):
        params = Example1Params(
            p1=args.p1, eps=args.eps or 1e-3, delta=args.delta, variant=args.family
        )
        pair = example1_pair(params, _grid(args))
        return pair, lambda grid: example1_pair(params, grid)
    if args.family:
        F, header = builtin_density(args.family, _grid(args), seed=args.seed)
        return DensityPair(F=F, G=F, label=args.family, params=header), None
    F, _ = read_density(args.input)
    G = read_density(args.against)[0] if args.against else F
    return DensityPair(F=F, G=G, label=Path(args.input).stem), None


def cmd_verify(args, config):
    theorem = args.theorem or ("thm1.2" if args.family == "scalar6" else "thm1.3")
    pair0 = OrliczPair.from_descriptor(json.loads(args.psi0)) if args.psi0 else None
    if args.family == "scalar6":
        if pair0 is not None:
            print("--psi0 is not supported for the scalar family", file=sys.stderr)
            return EXIT_USAGE
        if theorem not in SCALAR_THEOREMS:
            print(f"{theorem} does not apply to the scalar family", file=sys.stderr)
            return EXIT_USAGE
        report = _verify_scalar6(args, config, theorem)
    else:
        pair, rebuild = _matrix_pair(args)
        if pair.F.dim == 1 and theorem in SCALAR_THEOREMS:
            report = verify_scalar_pair(
                pair.F,
                pair.G,
                theorem,
                config.verification,
                pair0=pair0,
                label=pair.label,
            )
        else:
            report = verify_pair(
                pair,
                theorem,
                config.verification,
                config.factorization,
                pair0=pair0,
                rebuild=rebuild,
                grid_settings=config.grid,
            )

    out_dir = config.output_root() / "verify"
    stem = f"{report.label}_{theorem}"
    save_json(
        out_dir / f"{stem}.json",
        {**report.to_dict(), "run_config": config.model_dump()},
    )
    pd.DataFrame([report.to_row()]).to_csv(
        out_dir / f"{stem}.csv", index=False, float_format=FLOAT_FORMAT
    )
    print(f"{theorem} on {report.label} (N={report.grid_size})")
    print(f"   lhs {report.lhs:.6e}  rhs {report.rhs:.6e}  ratio {report.ratio:.4g}")
    verdict = "violation" if report.violation else "bound holds"
    print(f"{_mark(not report.violation)} {verdict}")
    return EXIT_FAILURE if report.violation else EXIT_OK


def cmd_sweep(args, _):
    family_config = FamilyConfig.model_validate_json(
        Path(args.config).read_text(encoding="utf-8")
    )
    if args.grid_n:
        family_config = family_config.model_copy(update={"grid_size": args.grid_n})
    if args.no_confirm:
        family_config = family_config.model_copy(
            update={"grid": GridSettings(confirm_by_doubling=False)}
        )
    config = run_config_from(args, family_config)
    result = sweep(family_config, jobs=config.jobs)
    out_dir = config.output_root() / "sweep" / family_config.family
    write_sweep(result, out_dir, run_config=config.model_dump())

    print(
        f"sweep {family_config.family}: {len(result.cells)} eps values,"
        f" {len(result.reports)} reports"
    )
    for name, onset in result.summary["onset_eps"].items():
        print(f"{_mark(onset is not None)} {name}: onset eps {onset}")
    for theorem, fits in result.summary["fits"].items():
        fit = fits.get("lhs_vs_d1")
        if fit:
            print(f"   {theorem}: lhs ~ d1^{fit['slope']:.4f}")
    band = result.summary.get("exponent_band")
    if band and band["within"] is not None:
        print(
            f"{_mark(band['within'])} lhs ~ d1^{band['slope']:.4f} within"
            f" [{band['low']:.4f}, {band['high']:.4f}] over eps {band['eps']}"
        )
    divergence = result.summary.get("gamma_divergence")
    if divergence and "rows" in divergence:
        for row in divergence["rows"]:
            print(f"   eps {row['eps']:.1e}  ratio {row['ratio']:.6e}")
        if divergence["expectation"] == "bounded":
            print(
                f"{_mark(divergence['holds'])} ratio stays within a factor"
                f" {divergence['max_band']:g} (band {divergence['band']:.4g})"
            )
        else:
            print(
                f"{_mark(divergence['holds'])} ratio grows as eps decreases"
                f" (slope {divergence['slope']:.4f})"
            )
    elif divergence:
        print(f"{_mark(False)} divergence check failed: {divergence['error']}")
    for eps, errors in result.summary["errors"].items():
        for name, message in errors.items():
            print(f"{_mark(False)} eps {eps} {name}: {message}")
    violations = result.summary["violations"]
    print(f"{_mark(not result.has_violation)} violations: {violations}")
    print(f"written to {out_dir}")
    return EXIT_FAILURE if result.failed else EXIT_OK


def cmd_constants(args, _):
    K, K0 = kolmogorov_constants()
    k_ok = abs(K - KNOWN_K) <= K_TOLERANCE
    k0_ok = K0 < K0_BOUND
    print(f"Si(pi) = {sine_integral_pi():.15f}")
    print(f"{_mark(k_ok)} K  = {K:.15f}  (expected {KNOWN_K} +/- {K_TOLERANCE})")
    print(f"{_mark(k0_ok)} K0 = {K0:.15f}  (expected < {K0_BOUND})")
    for p0 in sorted(set(CONSTANT_EXPONENTS + (args.p0,))):
        print(f"   c({p0:g}) = {c_constant(p0):.15f}")
    return EXIT_OK if k_ok and k0_ok else EXIT_FAILURE


def cmd_selftest(args, config):
    results = run_selftests(seed=args.seed, names=args.suite, cases=args.cases)
    for result in results:
        print(
            f"{_mark(result.passed)} {result.name}:"
            f" {result.cases} cases, {result.failures} failures"
        )
    save_json(
        config.output_root() / "selftest.json",
        {"results": [r.to_dict() for r in results], "run_config": config.model_dump()},
    )
    return EXIT_OK if all(result.passed for result in results) else EXIT_FAILURE


COMMANDS = {
    "factor": cmd_factor,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "constants": cmd_constants,
    "selftest": cmd_selftest,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    logging.basicConfig(
        level=(args.log_level or default_log_level()).upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = None if args.command == "sweep" else run_config_from(args)
        return COMMANDS[args.command](args, config)
    except PreconditionError as e:
        print(f"precondition violated: {e.condition}\n{e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (
        InputParseError,
        ExpressionError,
        ValidationError,
        json.JSONDecodeError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FactorizationError as e:
        print(f"factorization failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except QuadratureError as e:
        print(f"quadrature did not converge: {e}", file=sys.stderr)
        print(f"   order trace: {e.trace}", file=sys.stderr)
        return EXIT_FAILURE
    except (SpecfactError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
