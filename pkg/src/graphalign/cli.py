"""Command-line interface: ``graphalign <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 size-guard refusal.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    GuardError,
    ParameterError,
    PermutationTuple,
    ProblemParams,
    check_permutation,
    dump_instance,
    instance_to_json,
    load_instance,
    sample_instance,
    transposition,
)

log = logging.getLogger("graphalign")

EXIT_OK, EXIT_INVALID, EXIT_GUARD = 0, 2, 3
SEED_ENV = "GRAPHALIGN_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line diagnostic, validation exit code
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INVALID)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
        log.info("wrote %s", out)


def _read_json(path_or_text: str):
    p = Path(path_or_text)
    try:
        if p.exists():
            return json.loads(p.read_text(encoding="utf-8"))
        return json.loads(path_or_text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"malformed JSON in {path_or_text!r}: {exc}") from exc
    except OSError as exc:
        raise ParameterError(f"cannot read {path_or_text!r}: {exc}") from exc


def _params(args) -> ProblemParams:
    return ProblemParams(args.n, args.p, args.rho)


def _solver_options(args):
    from .estimators import SolverOptions

    return SolverOptions(kind=args.solver, restarts=args.restarts, max_sweeps=args.max_sweeps,
                         seed=args.seed, two_stage_C=args.C, size_guard=args.size_guard,
                         inner=args.inner, profile_start=not args.no_profile_start)


# ------------------------------------------------------------ subcommands

def cmd_sample(args) -> int:
    params = _params(args)
    log.info("config: n=%d p=%d rho=%s seed=%d", params.n, params.p, params.rho, args.seed)
    inst = sample_instance(params, args.seed)
    if args.out:
        dump_instance(inst, args.out)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(instance_to_json(inst) + "\n")
    return EXIT_OK


def cmd_align(args) -> int:
    from .estimators import solve
    from .metrics import err

    inst = load_instance(args.infile)
    opts = _solver_options(args)
    log.info("config: %s; instance n=%d p=%d rho=%s", asdict(opts), inst.n, inst.p, inst.params.rho)
    est = solve(inst.observed, opts, inst.params)
    res = err(est.pi_hat, inst.pi_star)
    payload = {
        "solver": opts.kind,
        "seed": opts.seed,
        "pi_hat": est.pi_hat.tolist(),
        "objective": est.objective,
        "solver_trace": est.solver_trace,
        "err": res.err,
        "matched": res.matched,
    }
    _emit(json.dumps(payload), args.out)
    return EXIT_OK


def _tuple_from(doc: dict, path: str) -> PermutationTuple:
    for key in ("pi_hat", "pi_star", "pi"):
        if key in doc:
            return PermutationTuple(doc[key])
    raise ParameterError(f"{path}: no pi_hat / pi_star / pi field")


def cmd_err(args) -> int:
    from .metrics import err

    est = _tuple_from(_read_json(args.est), args.est)
    truth_doc = _read_json(args.truth)
    truth = PermutationTuple(truth_doc["pi_star"]) if "pi_star" in truth_doc else _tuple_from(truth_doc, args.truth)
    res = err(est, truth)
    print(json.dumps({"err": res.err, "err_exact": str(res.err_exact), "matched": res.matched,
                      "total": res.total, "psi": res.psi.tolist()}))
    return EXIT_OK


def cmd_kl_check(args) -> int:
    from .information import kl_last_coordinate, kl_monte_carlo, kl_transposition

    params = _params(args)
    if params.rho >= 1:
        raise ParameterError("kl-check needs rho < 1")
    if args.trials < 1000:
        raise ParameterError("kl-check needs --trials >= 1000")
    is_transposition = args.pi == "transposition"
    if is_transposition:
        perm = transposition(params.n, 0, 1)
    else:
        doc = _read_json(args.pi)
        perm = check_permutation(doc["pi"] if isinstance(doc, dict) else doc, params.n)
    log.info("config: n=%d p=%d rho=%s trials=%d seed=%d pi=%s",
             params.n, params.p, params.rho, args.trials, args.seed, perm.tolist())
    est = kl_monte_carlo(perm, params, args.trials, args.seed)
    exact = kl_last_coordinate(perm, params.n, params.p, params.rho)
    lines = [f"{'quantity':<28}{'value':>14}{'z (MC - value)/SE':>20}"]
    lines.append(f"{'MC mean':<28}{est.mean:>14.6f}{'':>20}")
    lines.append(f"{'MC standard error':<28}{est.std_error:>14.6f}{'':>20}")

    def z(v):
        return (est.mean - v) / est.std_error if est.std_error > 0 else (0.0 if est.mean == v else math.inf)

    lines.append(f"{'exact (moved edges)':<28}{exact:>14.6f}{z(exact):>20.2f}")
    if is_transposition:
        closed = kl_transposition(params.n, params.p, params.rho)
        lines.append(f"{'closed form (2n-3 edges)':<28}{closed:>14.6f}{z(closed):>20.2f}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_bounds(args) -> int:
    from .estimators import effective_correlation
    from .information import fano_exact_bound, fano_partial_bound, it_thresholds
    from .lowdegree import LowDegreeParams, mmse_lower_bound, trivial_mmse, zeta

    params = _params(args)
    log.info("config: n=%d p=%d rho=%s D=%d variant=%s", params.n, params.p, params.rho, args.D, args.variant)
    partial, exact = it_thresholds(params.n, params.p)
    out: dict[str, object] = {
        "order_threshold_partial": partial,
        "order_threshold_exact": exact,
        "effective_correlation": effective_correlation(params.rho, params.p),
        "trivial_mmse": trivial_mmse(params.n),
    }
    if params.rho < 1:
        out["fano_partial"] = fano_partial_bound(params.n, params.p, params.rho)
        out["fano_exact"] = fano_exact_bound(params.n, params.p, params.rho)
    else:
        out["fano_partial"] = out["fano_exact"] = "unavailable (rho = 1)"
    lp = LowDegreeParams(args.D, params.rho, params.n, args.variant)
    try:
        out["zeta"] = zeta(lp)
        out["mmse_lower_bound"] = mmse_lower_bound(lp)
    except ParameterError as exc:
        out.setdefault("zeta", "unavailable")
        out["mmse_lower_bound"] = f"unavailable ({exc})"
    if args.json:
        print(json.dumps(out))
    else:
        width = max(len(k) for k in out)
        for k, v in out.items():
            print(f"{k:<{width}}  {v:.6g}" if isinstance(v, float) else f"{k:<{width}}  {v}")
    return EXIT_OK


def _parse_alpha(text: str, n: int):
    from .lowdegree import MultiGraphPair

    doc = _read_json(text)
    if isinstance(doc, dict):
        sides = doc.get("alpha1", []), doc.get("alpha2", [])
    elif isinstance(doc, list) and len(doc) == 2:
        sides = doc[0], doc[1]
    else:
        raise ParameterError('alpha must be {"alpha1": [[u,v,m],...], "alpha2": [...]} or a two-element list')
    try:
        return MultiGraphPair.from_edge_lists(sides[0], sides[1], n)
    except (TypeError, IndexError, ValueError) as exc:
        raise ParameterError(f"malformed alpha: {exc}") from exc


def cmd_cumulant(args) -> int:
    from .lowdegree import aggregation_bound, cumulant_bound, kappa_fraction, kappa_monte_carlo

    alpha = _parse_alpha(args.alpha, args.n)
    log.info("config: n=%d alpha1=%s alpha2=%s seed=%d", args.n, alpha.alpha1, alpha.alpha2, args.seed)
    kap = kappa_fraction(alpha)
    out: dict[str, object] = {"kappa": float(kap), "kappa_exact": str(kap), "size": alpha.size,
                              "alpha_factorial": alpha.factorial}
    try:
        out["cumulant_bound"] = cumulant_bound(alpha)
    except ParameterError as exc:
        out["cumulant_bound"] = f"unavailable ({exc})"
    out["aggregation_bound"] = aggregation_bound(alpha)
    if args.mc_check:
        mean, se = kappa_monte_carlo(alpha, args.mc_samples, args.seed)
        out.update(mc_mean=mean, mc_se=se, mc_z=(mean - float(kap)) / se if se > 0 else 0.0)
    print(json.dumps(out))
    return EXIT_OK


def cmd_ws_sum(args) -> int:
    from .lowdegree import LowDegreeParams, closed_form_excess, ws_truncated_sum

    log.info("config: n=%d rho=%s D=%d", args.n, args.rho, args.D)
    w = ws_truncated_sum(args.n, args.rho, args.D)
    out: dict[str, object] = {
        "sum": float(w.total),
        "implied_bound": float(w.bound),
        "alphas": w.count,
        "by_size": {str(k): float(v) for k, v in w.by_size.items()},
    }
    if args.D >= 1:
        try:
            out["closed_form_excess_appendix_p2"] = closed_form_excess(LowDegreeParams(args.D, args.rho, args.n, "appendix-p2"))
            out["enumerated_excess"] = float(w.excess)
        except ParameterError as exc:
            out["closed_form_excess_appendix_p2"] = f"unavailable ({exc})"
    print(json.dumps(out))
    return EXIT_OK


def cmd_phase_diagram(args) -> int:
    from .experiments import SweepConfig, run_phase_diagram, write_csv, records_to_csv

    doc = _read_json(args.config)
    if not isinstance(doc, dict):
        raise ParameterError("config must be a JSON object")
    if "seed" not in doc:
        doc["seed"] = args.seed
    cfg = SweepConfig.from_dict(doc)
    if args.threads is not None:
        cfg.threads = args.threads
    if args.no_timing:
        cfg.record_timing = False
    log.info("config: %s", json.dumps(cfg.to_dict()))
    records = run_phase_diagram(cfg)
    for r in records:
        if r.skipped:
            log.warning("skipped cell n=%d p=%d rho=%s: %s", r.n, r.p, r.rho, r.skip)
    if args.out:
        write_csv(records, args.out)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(records_to_csv(records))
    return EXIT_OK


# ----------------------------------------------------------------- parser

def _add_problem(sp, rho=True, p=True):
    sp.add_argument("--n", type=int, required=True, help="number of nodes (>= 2)")
    if p:
        sp.add_argument("--p", type=int, required=True, help="number of graphs (>= 2)")
    if rho:
        sp.add_argument("--rho", type=float, required=True, help="edge correlation in [0, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphalign", description="Joint alignment of correlated Gaussian graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--quiet", action="store_true", help="only warnings and errors on stderr")
    parser.add_argument("--settings", metavar="JSON",
                        help="JSON object (file or text) of subcommand flags; its values override the command line")
    seed_help = f"master seed (64-bit integer); default ${SEED_ENV} or 0"
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("sample", help="draw an instance and write it as JSON")
    _add_problem(sp)
    sp.add_argument("--seed", type=int, help=seed_help)
    sp.add_argument("--out", help="output file (default: stdout)")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("align", help="estimate the alignment of an instance file",
                        description="Runs a solver on an instance JSON. Exhaustive search refuses when "
                                    "(n!)^(p-1) exceeds --size-guard (exit 3).")
    sp.add_argument("--in", dest="infile", required=True, help="instance JSON produced by 'sample'")
    sp.add_argument("--solver", default="local-search",
                    choices=["exhaustive", "local-search", "pairwise", "two-stage"])
    sp.add_argument("--inner", default="local-search", choices=["exhaustive", "local-search"],
                    help="p=2 sub-solver used by pairwise and two-stage")
    sp.add_argument("--restarts", type=int, default=20, help="local-search restarts (>= 1)")
    sp.add_argument("--max-sweeps", type=int, default=200, help="local-search sweep cap per restart")
    sp.add_argument("--C", type=float, default=1.0, help="two-stage constant; p' = min(p, ceil(C/rho))")
    sp.add_argument("--size-guard", type=int, default=10**6, help="max tuples for exhaustive search")
    sp.add_argument("--no-profile-start", action="store_true",
                    help="start every local-search restart at random")
    sp.add_argument("--seed", type=int, help=seed_help)
    sp.add_argument("--out", help="output JSON (default: stdout)")
    sp.set_defaults(func=cmd_align)

    sp = sub.add_parser("err", help="alignment error of an estimate against the truth")
    sp.add_argument("--est", required=True, help="JSON with pi_hat (output of 'align') or pi")
    sp.add_argument("--truth", required=True, help="instance JSON (pi_star) or JSON with pi")
    sp.set_defaults(func=cmd_err)

    sp = sub.add_parser("kl-check", help="Monte-Carlo KL versus closed forms",
                        description="KL(P_(id,..,id,pi) || P_id) in nats; needs rho < 1 and trials >= 1000.")
    _add_problem(sp)
    sp.add_argument("--trials", type=int, default=100_000, help="Monte-Carlo draws (>= 1000)")
    sp.add_argument("--pi", default="transposition",
                    help="'transposition' (swap nodes 0 and 1) or a JSON file/list with the last permutation")
    sp.add_argument("--seed", type=int, help=seed_help)
    sp.set_defaults(func=cmd_kl_check)

    sp = sub.add_parser("bounds", help="thresholds, Fano bounds, zeta and the low-degree MMSE bound")
    _add_problem(sp)
    sp.add_argument("--D", type=int, default=1, help="polynomial degree (D <= n-2)")
    sp.add_argument("--variant", default="theorem", choices=["theorem", "appendix-p2"], help="zeta form")
    sp.add_argument("--json", action="store_true", help="print one JSON object")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("cumulant", help="exact kappa for a multigraph pair",
                        description="Guards: n <= 7 and |alpha| <= 4 (exit 3 beyond).")
    _add_problem(sp, rho=False, p=False)
    sp.add_argument("--alpha", required=True,
                    help='JSON text or file: {"alpha1": [[u,v,mult],...], "alpha2": [[u,v,mult],...]}')
    sp.add_argument("--mc-check", action="store_true", help="also estimate kappa by sampling")
    sp.add_argument("--mc-samples", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, help=seed_help)
    sp.set_defaults(func=cmd_cumulant)

    sp = sub.add_parser("ws-sum", help="enumerated low-degree cumulant sum (p = 2)",
                        description="Guards: n <= 6 and D <= 2 (exit 3 beyond).")
    _add_problem(sp, p=False)
    sp.add_argument("--D", type=int, required=True, help="degree (0, 1 or 2)")
    sp.set_defaults(func=cmd_ws_sum)

    sp = sub.add_parser("phase-diagram", help="Monte-Carlo sweep over a grid, written as CSV",
                        description='Config JSON: {"n": [...], "p": [...], "rho": [...], "trials": 30, '
                                    '"solver": {"kind": "local-search", "restarts": 20}, "seed": 0}. '
                                    "Infeasible cells are written with a 'skip' marker.")
    sp.add_argument("--config", required=True, help="JSON file or text")
    sp.add_argument("--out", help="CSV path (default: stdout)")
    sp.add_argument("--threads", type=int, help="worker threads (default: all cores); output does not depend on it")
    sp.add_argument("--no-timing", action="store_true", help="write wall_ms = 0 so the CSV is byte-stable")
    sp.add_argument("--seed", type=int, help=seed_help + " (used when the config has no seed)")
    sp.set_defaults(func=cmd_phase_diagram)
    return parser


def _apply_settings(args) -> None:
    if not args.settings:
        return
    doc = _read_json(args.settings)
    if not isinstance(doc, dict):
        raise ParameterError("--settings must be a JSON object")
    for key, value in doc.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest == "in":
            dest = "infile"
        if dest in ("command", "func", "settings", "quiet") or not hasattr(args, dest):
            raise ParameterError(f"--settings: unknown flag {key!r} for {args.command}")
        setattr(args, dest, value)


def _validate(args) -> None:
    # cheap checks before any allocation
    if getattr(args, "n", None) is not None and args.n < 2:
        raise ParameterError("--n must be >= 2")
    if getattr(args, "p", None) is not None and args.p < 2:
        raise ParameterError("--p must be >= 2")
    rho = getattr(args, "rho", None)
    if rho is not None and not 0.0 <= rho <= 1.0:
        raise ParameterError("--rho must lie in [0, 1]")
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    for name in ("trials", "restarts", "threads", "mc_samples"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise ParameterError(f"--{name.replace('_', '-')} must be >= 1")
    if getattr(args, "D", None) is not None and args.D < 0:
        raise ParameterError("--D must be >= 0")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        _apply_settings(args)
        _validate(args)
        return args.func(args)
    except GuardError as exc:
        sys.stderr.write(f"graphalign: refused: {exc}\n")
        return EXIT_GUARD
    except (ParameterError, KeyError, TypeError, ValueError, OSError) as exc:
        sys.stderr.write(f"graphalign: error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
