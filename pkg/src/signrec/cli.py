"""``signrec`` command line.

Every command reads matrices and vectors as CSV or SRX1 binary, writes CSV or
JSON, and is byte-reproducible for fixed flags. Stochastic commands insist on
``--seed``. ``--config FILE`` supplies ``key = value`` defaults (keys are
flag names); explicit flags win. Exit codes: 0 success, 2 usage error,
1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import amp_tuning, conditions, curves, experiments, recovery_bound, solvers, thresholding
from .core_model import REFERENCE_RHO, RngStream, SignalSpec, SignVector, gen_design, gen_instance
from .errors import FormatError, ParameterError, SignrecError
from .io import read_matrix, read_vector, solution_text, write_matrix, write_solution, write_vector
from .parallel import resolve_threads

STOCHASTIC = {"gen", "curve", "bound", "calibrate", "knockoff-threshold", "fn-threshold", "experiment"}


class UsageError(Exception):
    pass


def parse_grid(text: str, cast: Callable = int) -> list:
    """Comma-separated items, each a value or an inclusive range ``a..b[..step]``."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split("..")
        try:
            if len(parts) == 1:
                out.append(cast(parts[0]))
                continue
            if len(parts) not in (2, 3):
                raise ValueError
            a, b = cast(parts[0]), cast(parts[1])
            step = cast(parts[2]) if len(parts) == 3 else cast(1)
        except ValueError:
            raise UsageError(f"bad grid item {item!r}; use a value or a..b[..step]") from None
        if not step > 0:
            raise UsageError(f"grid step must be positive in {item!r}")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        if n < 1:
            raise UsageError(f"empty range {item!r}")
        out.extend(cast(a + i * step) for i in range(n))
    if not out:
        raise UsageError("empty grid")
    return out


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` comments, blank lines and ``[section]`` headers ignored."""
    cfg = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise FormatError(f"cannot read config {path}: {e.strerror}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        cfg[key.replace("-", "_")] = value
    return cfg


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit_json(obj: dict, out) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# ---------------------------------------------------------------- parser

SPECS: dict[str, dict] = {}


def _cmd(name: str, required=(), defaults=None):
    def deco(fn):
        SPECS[name] = {"fn": fn, "required": tuple(required), "defaults": defaults or {}}
        return fn

    return deco


def _add(p: argparse.ArgumentParser, *flags, **kw):
    # defaults are applied after the config merge, so the parser default is always None
    kw.setdefault("default", None)
    return p.add_argument(*flags, **kw)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="signrec", description="Sign recovery experiments for sparse regression.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs = {}

    def common(p, seed=False, out=True):
        _add(p, "--config", help="key = value file of defaults; flags win")
        _add(p, "--threads", type=int, help="worker threads (0 = all cores); falls back to $SIGNREC_THREADS")
        if seed:
            _add(p, "--seed", type=int, help="master seed (required)")
        if out:
            _add(p, "--out", help="output file (default: standard output where allowed)")

    p = sub.add_parser("gen", help="generate a design matrix and optionally an instance")
    common(p, seed=True)
    _add(p, "--setting", choices=["setting1", "setting2"])
    _add(p, "--n", type=int)
    _add(p, "--p", type=int)
    _add(p, "--rho", type=float)
    _add(p, "--k", type=int, help="also draw an instance with this sparsity")
    _add(p, "--t", type=float, help="signal magnitude of the instance")
    _add(p, "--sigma", type=float)
    _add(p, "--sign-mode", choices=["symmetric", "positive"])
    _add(p, "--response-out", help="where to write Y of the instance")
    _add(p, "--beta-out", help="where to write beta of the instance")
    subs["gen"] = p

    p = sub.add_parser("solve", help="LASSO, adaptive LASSO, BP or BPDN on a matrix and response")
    common(p)
    _add(p, "--matrix")
    _add(p, "--response")
    _add(p, "--method", choices=["lasso", "adaptive", "bp", "bpdn"])
    _add(p, "--lambda", dest="lam", type=float)
    _add(p, "--R", dest="R", type=float)
    _add(p, "--pilot", help="pilot estimate file for the adaptive method")
    _add(p, "--tol", type=float)
    _add(p, "--max-iters", type=int)
    subs["solve"] = p

    p = sub.add_parser("certify", help="irrepresentability and identifiability of a sign vector")
    common(p)
    _add(p, "--matrix")
    _add(p, "--sign")
    _add(p, "--kernel", type=_bool, nargs="?", const=True, help="also run the kernel LP certificate")
    subs["certify"] = p

    p = sub.add_parser("curve", help="identifiability / irrepresentability curves")
    common(p, seed=True)
    _add(p, "--matrix")
    _add(p, "--kind", choices=["identifiability", "irrepresentability", "both"])
    _add(p, "--k", help="sparsity grid, e.g. 1..60")
    _add(p, "--samples", type=int)
    _add(p, "--sign-mode", choices=["symmetric", "positive"])
    subs["curve"] = p

    p = sub.add_parser("bound", help="Monte Carlo sign-recovery upper bound for one sign vector")
    common(p, seed=True)
    _add(p, "--matrix")
    _add(p, "--sign")
    _add(p, "--sigma", type=float)
    _add(p, "--lambda", dest="lam", type=float)
    _add(p, "--draws", type=int)
    subs["bound"] = p

    p = sub.add_parser("calibrate", help="lambda whose sign-averaged bound hits a target")
    common(p, seed=True)
    _add(p, "--matrix")
    _add(p, "--k", type=int)
    _add(p, "--sigma", type=float)
    _add(p, "--target", type=float)
    _add(p, "--signs", type=int)
    _add(p, "--draws", type=int)
    _add(p, "--sign-mode", choices=["symmetric", "positive"])
    subs["calibrate"] = p

    p = sub.add_parser("amp", help="lambda from AMP state evolution")
    common(p)
    _add(p, "--delta", type=float)
    _add(p, "--gamma", type=float)
    _add(p, "--t", type=float)
    _add(p, "--sigma", type=float)
    _add(p, "--n", type=int, help="with --p and --k: tune for an unnormalised N(0, 1) design")
    _add(p, "--p", type=int)
    _add(p, "--k", type=int)
    subs["amp"] = p

    p = sub.add_parser("knockoff-threshold", help="knockoff threshold for a thresholded estimator")
    common(p, seed=True)
    _add(p, "--matrix")
    _add(p, "--k", type=int)
    _add(p, "--t", type=float)
    _add(p, "--sigma", type=float)
    _add(p, "--sign-mode", choices=["symmetric", "positive"])
    _add(p, "--estimator", choices=["lasso", "basis_pursuit", "bp"])
    _add(p, "--lambda", dest="lam", type=float, help="lasso penalty (default: lambda_AMP for k, t)")
    _add(p, "--batch-size", type=int)
    _add(p, "--batches", type=int)
    _add(p, "--replicates", type=int)
    _add(p, "--quantile", type=float)
    _add(p, "--mode", choices=["simulation", "conditional"])
    _add(p, "--response", help="fixed response for conditional mode")
    _add(p, "--rho", type=float)
    _add(p, "--naive-iid", type=_bool, nargs="?", const=True)
    subs["knockoff-threshold"] = p

    p = sub.add_parser("fn-threshold", help="full-null basis pursuit threshold")
    common(p, seed=True)
    _add(p, "--matrix")
    _add(p, "--sigma", type=float)
    _add(p, "--alpha", type=float)
    _add(p, "--replicates", type=int)
    subs["fn-threshold"] = p

    p = sub.add_parser("experiment", help="estimator comparison over a (k, t) grid")
    common(p, seed=True)
    _add(p, "--setting", choices=["setting1", "setting2"])
    _add(p, "--matrix", help="design file (default: the setting's reference matrix)")
    _add(p, "--k", help="sparsity grid")
    _add(p, "--t", help="magnitude grid")
    _add(p, "--estimators", help="comma list from L,aL,BP,BPk,Lk,Lks")
    _add(p, "--replicates", type=int)
    _add(p, "--sigma", type=float)
    _add(p, "--sign-mode", choices=["symmetric", "positive"])
    _add(p, "--lambda-l", type=float, help="skip calibration and use this lambda_L")
    _add(p, "--calibration-signs", type=int)
    _add(p, "--calibration-draws", type=int)
    _add(p, "--knockoff-replicates", type=int)
    _add(p, "--batch-size", type=int)
    _add(p, "--batches", type=int)
    _add(p, "--fn-replicates", type=int)
    _add(p, "--bound-draws", type=int)
    _add(p, "--verbose", type=_bool, nargs="?", const=True)
    subs["experiment"] = p
    return parser, subs


# ---------------------------------------------------------------- commands


def _seed(args) -> RngStream:
    return RngStream(args.seed)


@_cmd(
    "gen",
    required=("n", "p", "out"),
    defaults={"setting": "setting1", "rho": 0.0, "t": 1.0, "sigma": 1.0, "sign_mode": "symmetric"},
)
def _gen(args) -> int:
    X = gen_design(args.setting, args.n, args.p, args.rho, _seed(args).child("design"))
    write_matrix(args.out, X)
    if args.k is not None:
        if not (args.response_out or args.beta_out):
            raise UsageError("gen: --k needs --response-out and/or --beta-out")
        inst = gen_instance(X, SignalSpec(args.k, args.t, args.sign_mode), args.sigma, _seed(args).child("instance"))
        if args.response_out:
            write_vector(args.response_out, inst.response)
        if args.beta_out:
            write_vector(args.beta_out, inst.beta)
    return 0


@_cmd("solve", required=("matrix", "response", "method"), defaults={"tol": 1e-9, "max_iters": 1_000_000})
def _solve(args) -> int:
    X = read_matrix(args.matrix)
    Y = read_vector(args.response)
    cfg = solvers.LassoConfig(max_iters=args.max_iters, tol=args.tol)
    if args.method in ("lasso", "adaptive") and args.lam is None:
        raise UsageError(f"solve: --method {args.method} needs --lambda")
    if args.method == "lasso":
        sol = solvers.lasso(Y, X, args.lam, cfg)
    elif args.method == "adaptive":
        if args.pilot is None:
            raise UsageError("solve: --method adaptive needs --pilot")
        sol = solvers.adaptive_lasso(Y, X, args.lam, read_vector(args.pilot), cfg)
    elif args.method == "bp":
        sol = solvers.basis_pursuit(Y, X)
    else:
        if args.R is None:
            raise UsageError("solve: --method bpdn needs --R")
        sol = solvers.bpdn(Y, X, args.R, cfg)
    diag = {
        "method": args.method,
        "objective": float(sol.objective),
        "residual_norm2_sq": float(sol.residual_norm2_sq),
        "iterations": int(sol.iterations),
        "kkt_gap": float(sol.kkt_gap),
        "lambda_or_R": float(sol.lambda_or_R),
    }
    if args.out:
        write_solution(args.out, sol.estimate, diag)
    else:
        sys.stdout.write(solution_text(sol.estimate, diag))
    return 0


@_cmd("certify", required=("matrix", "sign"), defaults={"kernel": False})
def _certify(args) -> int:
    X = read_matrix(args.matrix)
    s = SignVector(np.rint(read_vector(args.sign)).astype(np.int8))
    ic = conditions.irrepresentability_indicator(X, s)
    idtf = conditions.identifiability_indicator(X, s)
    out = {
        "phi_ic": ic.indicator,
        "phi_idtf": idtf.indicator,
        "margins": {"ic": ic.margin, "idtf": idtf.margin},
        "boundary": idtf.boundary,
        "k": s.k,
    }
    if args.kernel:
        kc = conditions.kernel_certificate(X, s)
        out["phi_kernel"] = kc.indicator
        out["margins"]["kernel"] = kc.margin
        out["boundary"] = out["boundary"] or kc.boundary
    _emit_json(out, args.out)
    return 0


@_cmd("curve", required=("matrix", "k", "out"), defaults={"kind": "both", "samples": 1000, "sign_mode": "symmetric"})
def _curve(args) -> int:
    X = read_matrix(args.matrix)
    kinds = list(curves.KINDS) if args.kind == "both" else [args.kind]
    pts = curves.curves(X, kinds, parse_grid(args.k, int), args.samples, args.sign_mode,
                        _seed(args).child("curve"), args.threads)
    curves.write_curves(args.out, pts, args.seed)
    return 0


@_cmd("bound", required=("matrix", "sign", "lam"), defaults={"sigma": 1.0, "draws": 10000})
def _bound(args) -> int:
    X = read_matrix(args.matrix)
    s = SignVector(np.rint(read_vector(args.sign)).astype(np.int8))
    ctx = recovery_bound.build_zeta_context(X, s, args.sigma, args.lam)
    est = recovery_bound.mc_bound(ctx, args.draws, _seed(args).child("bound"))
    _emit_json({**est.to_dict(), "seed": args.seed}, args.out)
    return 0


@_cmd(
    "calibrate",
    required=("matrix", "k"),
    defaults={"sigma": 1.0, "target": 0.95, "signs": 1000, "draws": 1000, "sign_mode": "symmetric"},
)
def _calibrate(args) -> int:
    X = read_matrix(args.matrix)
    cal = recovery_bound.calibrate_lambda(X, args.k, args.sigma, args.target, args.signs, args.draws,
                                          args.sign_mode, _seed(args).child("calibrate"))
    _emit_json({**cal.to_dict(), "seed": args.seed, "target": args.target}, args.out)
    return 0


@_cmd("amp", defaults={"sigma": 1.0})
def _amp(args) -> int:
    if args.n is not None or args.p is not None or args.k is not None:
        if None in (args.n, args.p, args.k, args.t):
            raise UsageError("amp: design mode needs --n, --p, --k and --t")
        lam, cal = amp_tuning.lambda_for_design(args.n, args.p, args.k, args.t, args.sigma)
        out = {**cal.to_dict(), "lambda_design": lam, "lambda_s_design": 0.5 * lam}
    else:
        if None in (args.delta, args.gamma, args.t):
            raise UsageError("amp: needs --delta, --gamma and --t (or --n, --p, --k, --t)")
        cal = amp_tuning.optimal_lambda_amp(amp_tuning.AmpProblem(args.delta, args.gamma, args.t, args.sigma))
        out = cal.to_dict()
    _emit_json(out, args.out)
    return 0


@_cmd(
    "knockoff-threshold",
    required=("matrix",),
    defaults={
        "sigma": 1.0, "sign_mode": "symmetric", "estimator": "lasso", "batch_size": 30, "batches": 10,
        "replicates": 1000, "quantile": 0.95, "mode": "simulation", "rho": 0.0, "naive_iid": False,
    },
)
def _knockoff(args) -> int:
    X = read_matrix(args.matrix)
    est = "basis_pursuit" if args.estimator in ("bp", "basis_pursuit") else "lasso"
    lam = args.lam
    if args.mode == "simulation" and (args.k is None or args.t is None):
        raise UsageError("knockoff-threshold: simulation mode needs --k and --t")
    if est == "lasso" and lam is None:
        if args.k is None or args.t is None:
            raise UsageError("knockoff-threshold: give --lambda, or --k and --t to use lambda_AMP")
        lam, _ = amp_tuning.lambda_for_design(X.n, X.p, args.k, args.t, args.sigma)
    cfg = thresholding.KnockoffConfig(
        batch_size=args.batch_size, batches_per_replicate=args.batches, n_replicates=args.replicates,
        quantile=args.quantile, estimator=est, lam=lam if est == "lasso" else None, mode=args.mode,
        rho=args.rho, naive_iid=args.naive_iid,
    )
    if args.mode == "simulation":
        response = thresholding.response_sampler(X, SignalSpec(args.k, args.t, args.sign_mode), args.sigma)
    else:
        if args.response is None:
            raise UsageError("knockoff-threshold: conditional mode needs --response")
        response = read_vector(args.response)
    tau = thresholding.knockoff_threshold(X, response, cfg, _seed(args).child("knockoff-threshold"), args.threads)
    _emit_json({"tau": tau, "quantile": cfg.quantile, "n_replicates": cfg.n_replicates, "seed": args.seed,
                "estimator": est, "lambda": lam}, args.out)
    return 0


@_cmd("fn-threshold", required=("matrix",), defaults={"sigma": 1.0, "alpha": 0.05, "replicates": 1000})
def _fn(args) -> int:
    X = read_matrix(args.matrix)
    tau = thresholding.full_null_threshold(X, args.sigma, args.alpha, args.replicates,
                                           _seed(args).child("full-null"), args.threads)
    _emit_json({"tau": tau, "quantile": 1.0 - args.alpha, "n_replicates": args.replicates, "seed": args.seed},
               args.out)
    return 0


@_cmd(
    "experiment",
    required=("out",),
    defaults={
        "setting": "setting1", "k": "5,20", "estimators": ",".join(experiments.ESTIMATORS), "replicates": 1000,
        "sigma": 1.0, "sign_mode": "symmetric", "calibration_signs": 1000, "calibration_draws": 1000,
        "knockoff_replicates": 1000, "batch_size": 30, "batches": 10, "fn_replicates": 1000,
        "bound_draws": 100, "verbose": False,
    },
)
def _experiment(args) -> int:
    t_grid = parse_grid(args.t, float) if args.t is not None else list(experiments.DEFAULT_T_GRID)
    ests = [e.strip() for e in args.estimators.split(",") if e.strip()]
    design = read_matrix(args.matrix, args.setting) if args.matrix else None
    plan = experiments.ExperimentPlan(
        setting=args.setting, k_list=parse_grid(args.k, int), t_grid=t_grid, estimators=ests,
        n_replicates=args.replicates, master_seed=args.seed, sigma=args.sigma, sign_mode=args.sign_mode,
        design=design, lambda_L=args.lambda_l, calibration_signs=args.calibration_signs,
        calibration_draws=args.calibration_draws,
        knockoff=thresholding.KnockoffConfig(
            batch_size=args.batch_size, batches_per_replicate=args.batches, n_replicates=args.knockoff_replicates,
            rho=REFERENCE_RHO if args.setting == "setting2" else 0.0,
        ),
        fn_replicates=args.fn_replicates, bound_draws=args.bound_draws, threads=args.threads,
    )
    log = (lambda m: print(m, file=sys.stderr)) if args.verbose else None
    results = experiments.run_plan(plan, log)
    experiments.write_results(args.out, results, args.seed)
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"signrec: cell {r.estimator} k={r.k} t={r.t} failed: {r.error}", file=sys.stderr)
    return 1 if failed else 0


# ---------------------------------------------------------------- dispatch


def _merge(args, sub: argparse.ArgumentParser) -> None:
    actions = {a.dest: a for a in sub._actions if a.dest != "help"}
    if args.config:
        for key, raw in read_config(args.config).items():
            act = actions.get(key)
            if act is None or key == "config":
                raise UsageError(f"{args.command}: unknown config key {key!r}")
            if getattr(args, key) is not None:
                continue
            try:
                setattr(args, key, act.type(raw) if act.type else raw)
            except (TypeError, ValueError):
                raise UsageError(f"{args.command}: bad value {raw!r} for config key {key!r}") from None
            if act.choices and getattr(args, key) not in act.choices:
                raise UsageError(f"{args.command}: {key} must be one of {sorted(act.choices)}")
    spec = SPECS[args.command]
    for key, value in spec["defaults"].items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    missing = [k for k in spec["required"] if getattr(args, k) is None]
    if args.command in STOCHASTIC and args.seed is None:
        missing.insert(0, "seed")
    if missing:
        flags = ", ".join("--" + actions[k].option_strings[0].lstrip("-") for k in missing)
        raise UsageError(f"{args.command}: missing required {flags}")
    args.threads = resolve_threads(args.threads)


def main(argv=None) -> int:
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        print("signrec: error: a command is required", file=sys.stderr)
        return 2
    sub = subs[args.command]
    try:
        _merge(args, sub)
        return SPECS[args.command]["fn"](args)
    except (UsageError, ParameterError) as e:
        sub.print_usage(sys.stderr)
        print(f"signrec {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (SignrecError, OSError) as e:
        msg = getattr(e, "strerror", None) and f"{e.filename}: {e.strerror}" or str(e)
        print(f"signrec {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
