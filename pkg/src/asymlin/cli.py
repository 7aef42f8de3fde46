"""Command line entry point: ``asymlin {check,solve,multi,spectrum,proptest}``.

Exit codes
    0   success (check: every requested condition holds)
    1   check: a condition fails; solve/multi: the eigenvalue condition fails;
        proptest: a property suite reported failures
    2   numerical failure (solver stalled or ran out of iterations)
    3   check: a verdict is inconclusive or not applicable
    64  bad command line or configuration
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import check_beta, check_f2
from .config import RunConfig, load_config
from .errors import BoundaryStall, ConfigError, MaxIter, NehariError
from .grid import write_field_csv
from .nehari import EnergyModel, minimize_psi, multiplicity_search
from .nonlinearity import validate_f1
from .proptest import run_all
from .report import SCHEMA_VERSION, write_report
from .spectrum import weighted_eigs

log = logging.getLogger("asymlin")

EXIT_OK, EXIT_FAIL, EXIT_NUMERIC, EXIT_UNDECIDED, EXIT_USAGE = 0, 1, 2, 3, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--seed", type=int, help="overrides [sampling] seed")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    common.add_argument("--quiet", action="store_true", help="only print errors")
    p = _Parser(prog="asymlin", description="Nehari-manifold solver and hypothesis checks")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("check", parents=[common], help="eigenvalue and beta conditions")
    sub.add_parser("solve", parents=[common], help="ground state by descent on the sphere")
    sub.add_parser("multi", parents=[common], help="multi-start search for solution pairs")
    sub.add_parser("spectrum", parents=[common], help="weighted eigenpairs for eta")
    sub.add_parser("proptest", parents=[common], help="randomized property suites")
    return p


def _threads() -> int:
    raw = os.environ.get("NEHARI_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"NEHARI_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"NEHARI_THREADS must be a positive integer, got {raw!r}")
    return n


def _x_samples(grid, k=64):
    step = max(1, grid.size // k)
    return grid.coords[::step]


def _header(cmd: str, cfg: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": cmd,
        "package_version": __version__,
        "config_digest": cfg.digest(),
        "seed": cfg.sampling.seed,
        "config": cfg.canonical(),
    }


def _f1_dict(v):
    return {"status": v.status, "reason": v.reason,
            "witness": [float(w) if np.isscalar(w) else list(w) for w in v.witness]}


def _prerequisites(model, results: dict) -> bool:
    f1 = validate_f1(model.nl, _x_samples(model.grid))
    results["f1"] = _f1_dict(f1)
    if not f1.passed:
        return False
    f2 = check_f2(model)
    results["f2"] = {"verdict": f2.verdict_f2, "m": f2.m, "s_m": f2.s_m,
                     "lambda_m_eta": f2.lambda_m_eta, "lambda1_alpha": f2.lambda1_alpha,
                     "notes": f2.notes}
    results["_f2"] = f2
    return f2.verdict_f2 == "holds"


def _condition_exit(rep, variant) -> int:
    verdicts = [rep.verdict_f2]
    if variant in ("ground-state", "both"):
        verdicts.append(rep.verdict_beta)
    if variant in ("multiplicity", "both"):
        verdicts.append(rep.verdict_beta_m)
    if "fails" in verdicts:
        return EXIT_FAIL
    if all(v == "holds" for v in verdicts):
        return EXIT_OK
    return EXIT_UNDECIDED


def cmd_check(cfg, out, results):
    model = EnergyModel(cfg.domain.grid(), cfg.nonlinearity.build())
    f1 = validate_f1(model.nl, _x_samples(model.grid))
    results["f1"] = _f1_dict(f1)
    if not f1.passed:
        return EXIT_FAIL
    rep = check_f2(model, cluster_rtol=cfg.spectrum.cluster_rtol)
    if rep.verdict_f2 == "holds":
        samples = cfg.sampling.tau_samples if cfg.variant != "multiplicity" \
            else cfg.sampling.tau_m_samples
        rep = check_beta(model, cfg.variant, samples=samples, seed=cfg.sampling.seed, f2=rep)
    results["conditions"] = rep.as_dict()
    return _condition_exit(rep, cfg.variant)


def _solve_dict(rep):
    return {
        "status": rep.status,
        "converged": rep.converged,
        "level": rep.level,
        "residual": rep.residual,
        "grad_I_norm": rep.grad_I_norm,
        "nehari_defect": rep.nehari_defect,
        "iterations": rep.iterations,
        "polish_steps": rep.polish_steps,
        "sign_verdict": rep.sign_verdict,
        "boundary_margin_min": rep.boundary_margin_min,
        "beta_support_estimate": rep.beta_support_estimate,
        "u_max_abs": float(np.max(np.abs(rep.u_star.values))),
    }


def cmd_solve(cfg, out, results):
    model = EnergyModel(cfg.domain.grid(), cfg.nonlinearity.build())
    if not _prerequisites(model, results):
        return EXIT_FAIL
    e1 = results.pop("_f2").spectrum_eta.pairs[0].e
    try:
        rep = minimize_psi(model, e1, cfg.solve_options(), seed=cfg.sampling.seed,
                           config_digest=cfg.digest())
        code = EXIT_OK
    except (BoundaryStall, MaxIter) as exc:
        rep, code = exc.report, EXIT_NUMERIC
        results["error"] = str(exc)
    results["solve"] = _solve_dict(rep)
    if cfg.csv:
        write_field_csv(rep.u_star, out / "solution.csv")
    return code


def cmd_multi(cfg, out, results):
    model = EnergyModel(cfg.domain.grid(), cfg.nonlinearity.build())
    if not _prerequisites(model, results):
        return EXIT_FAIL
    spec = results.pop("_f2").spectrum_eta
    rep = multiplicity_search(model, spec, cfg.search_options(_threads()),
                              seed=cfg.sampling.seed)
    results["multi"] = {
        "m": rep.m,
        "target_s_m": rep.target_s_m,
        "distinct_count": rep.distinct_count,
        "target_met": rep.distinct_count >= rep.target_s_m,
        "note": rep.note,
        "solutions": [
            {"index": k, "level": s.level, "residual": s.residual,
             "sign_verdict": s.sign_verdict, "origin": s.origin,
             "symmetric_level_gap": s.symmetric_level_gap,
             "interior_zeros": s.interior_zeros}
            for k, s in enumerate(rep.solutions)
        ],
    }
    if cfg.csv:
        for k, s in enumerate(rep.solutions):
            write_field_csv(s.u, out / f"solution_{k}.csv")
    return EXIT_OK if rep.distinct_count else EXIT_NUMERIC


def cmd_spectrum(cfg, out, results):
    model = EnergyModel(cfg.domain.grid(), cfg.nonlinearity.build())
    res = weighted_eigs(model.grid, model.eta_nodes, cfg.spectrum.count,
                        cluster_rtol=cfg.spectrum.cluster_rtol, weight_id="eta",
                        seed=cfg.sampling.seed)
    results["spectrum"] = {
        "weight": "eta",
        "infinite": res.infinite,
        "lambdas": [float(v) for v in res.lambdas],
        "multiplicities": list(res.multiplicities),
        "last_cluster_complete": res.last_cluster_complete,
        "iterations": res.iterations,
    }
    if cfg.csv:
        for k, p in enumerate(res.pairs):
            write_field_csv(p.e, out / f"eigen_{k + 1}.csv")
    return EXIT_OK


def cmd_proptest(cfg, out, results):
    suites = run_all(cfg.sampling.proptest_trials, cfg.sampling.seed)
    results["properties"] = [
        {"name": r.name, "trials": r.trials, "failures": r.failures,
         "passed": r.passed, "first_failure": {k: str(v) for k, v in r.first_failure.items()}}
        for r in suites
    ]
    failing = [r.name for r in suites if not r.passed]
    for name in failing:
        print(f"property failed: {name}", file=sys.stderr)
    return EXIT_FAIL if failing else EXIT_OK


COMMANDS = {"check": cmd_check, "solve": cmd_solve, "multi": cmd_multi,
            "spectrum": cmd_spectrum, "proptest": cmd_proptest}


def _summary(cmd, results, code):
    parts = [f"{cmd}: exit {code}"]
    if "solve" in results:
        s = results["solve"]
        parts.append(f"level {s['level']:.10g}, residual {s['residual']:.2e}, {s['sign_verdict']}")
    if "multi" in results:
        m = results["multi"]
        parts.append(f"{m['distinct_count']} pairs found, s_m = {m['target_s_m']}")
    if "conditions" in results:
        c = results["conditions"]
        parts.append(f"f2 {c['verdict_f2']}, beta {c['verdict_beta']}, "
                     f"beta_m {c['verdict_beta_m']}")
    if "spectrum" in results:
        parts.append("lambdas " + ", ".join(f"{v:.8g}" for v in results["spectrum"]["lambdas"]))
    if "properties" in results:
        ok = sum(p["passed"] for p in results["properties"])
        parts.append(f"{ok}/{len(results['properties'])} property suites passed")
    return "; ".join(parts)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        if args.config is None:
            if args.command != "proptest":
                raise ConfigError(f"{args.command} needs --config")
            cfg = RunConfig()
        else:
            cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.out is not None:
            cfg = cfg.with_out_dir(args.out)
        _threads()
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"asymlin: {exc}", file=sys.stderr)
        return EXIT_USAGE

    body = _header(args.command, cfg)
    results: dict = {}
    try:
        code = COMMANDS[args.command](cfg, out, results)
    except ConfigError as exc:
        print(f"asymlin: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NehariError as exc:
        results["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_NUMERIC
    results.pop("_f2", None)
    body["results"] = results
    body["exit_code"] = code
    body["wall_time_s"] = round(time.perf_counter() - t0, 6)
    write_report(out / "report.json", body)
    if not args.quiet:
        print(_summary(args.command, results, code))
    if "error" in results:
        print(f"asymlin: {results['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
