"""Replicate engine comparing sign estimators over (k, t) grids.

Estimators, for ``Y = X beta + eps`` with ``|beta_i| in {0, t}``:

    L    sign of lasso(lambda_L)
    aL   sign of adaptive_lasso(lambda_L, pilot = lasso(lambda_AMP))
    BP   basis pursuit thresholded at the full-null tau
    BPk  basis pursuit thresholded at the knockoff tau
    Lk   lasso(lambda_AMP) thresholded at the knockoff tau
    Lks  lasso(lambda_AMP / 2) thresholded at the knockoff tau

``X`` is fixed for a plan; supports, signs and noise are redrawn per
replicate. Replicate ``r`` of cell ``(k, t)`` is the same data for every
estimator, so estimators are compared on paired samples.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .amp_tuning import lambda_for_design
from .core_model import (
    REFERENCE_SEED,
    DesignMatrix,
    RngStream,
    SignalSpec,
    SignMode,
    gen_instance,
    reference_design,
)
from .errors import ParameterError, PlanError, PreconditionError, SignrecError
from .io import fmt
from .parallel import pmap
from .recovery_bound import build_zeta_context, calibrate_lambda, mc_bound
from .solvers import LassoConfig, adaptive_lasso, basis_pursuit, lasso
from .thresholding import (
    KnockoffConfig,
    apply_threshold,
    full_null_threshold,
    knockoff_threshold,
    replicate_outcome,
    response_sampler,
    summarize,
    threshold_gap,
)

ESTIMATORS = ("L", "aL", "BP", "BPk", "Lk", "Lks")
KNOCKOFF_ESTIMATORS = ("BPk", "Lk", "Lks")
DEFAULT_T_GRID = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 100.0, 1000.0)
SCHEMA_LINE = "# signrec-results v1"
CSV_COLUMNS = (
    "setting", "estimator", "k", "t", "n_replicates", "fwer", "fwer_se", "recovery_prob",
    "recovery_se", "support_power", "mc_bound", "lambda_used", "tau_used", "seed",
)


def _t_tag(t: float) -> str:
    return repr(float(t))


@dataclass
class ExperimentPlan:
    setting: str = "setting1"
    k_list: Sequence[int] = (5, 20)
    t_grid: Sequence[float] = DEFAULT_T_GRID
    estimators: Sequence[str] = ESTIMATORS
    n_replicates: int = 1000
    master_seed: int = 0
    sigma: float = 1.0
    sign_mode: SignMode = "symmetric"
    design: DesignMatrix | None = None
    # tuning; anything left as None is computed by resolve_tuning
    lambda_L: float | None = None
    amp: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    # tuning effort
    calibration_k: int = 5
    calibration_target: float = 0.95
    calibration_signs: int = 1000
    calibration_draws: int = 1000
    knockoff: KnockoffConfig | None = None
    fn_alpha: float = 0.05
    fn_replicates: int = 1000
    bound_draws: int = 100
    threads: int | None = 1

    def __post_init__(self):
        if not self.k_list or not self.t_grid:
            raise ParameterError("k_list and t_grid must be nonempty")
        if self.n_replicates < 1:
            raise ParameterError("n_replicates must be positive")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ParameterError(f"unknown estimators {bad}; choose from {ESTIMATORS}")
        if any(not t > 0 for t in self.t_grid):
            raise ParameterError("signal magnitudes must be positive")

    def matrix(self) -> DesignMatrix:
        if self.design is None:
            self.design = reference_design(self.setting, REFERENCE_SEED)
        return self.design

    def stream(self) -> RngStream:
        return RngStream(self.master_seed)


@dataclass
class CellResult:
    setting: str
    k: int
    t: float
    estimator: str
    n_replicates: int
    fwer: float = float("nan")
    recovery_prob: float = float("nan")
    support_power: float = float("nan")
    mc_bound: float | None = None
    std_errs: dict = field(default_factory=dict)
    lambda_used: float | None = None
    tau_used: float | None = None
    # fraction of replicates where some threshold would recover the signs
    separable: float | None = None
    error: str | None = None


def _needs_amp(est: str) -> bool:
    return est in ("aL", "Lk", "Lks")


def _amp_lambda(plan: ExperimentPlan, est: str, k: int, t: float) -> float:
    cal = plan.amp.get((k, float(t)))
    if cal is None:
        raise PlanError(f"no AMP calibration for k={k}, t={t}")
    n = plan.matrix().n
    lam = float(np.sqrt(n) * cal.lambda_amp)
    return 0.5 * lam if est == "Lks" else lam


def _knockoff_cfg(plan: ExperimentPlan, est: str, lam: float | None) -> KnockoffConfig:
    base = plan.knockoff or KnockoffConfig()
    rho = 0.9 if plan.setting == "setting2" else 0.0
    if est == "BPk":
        return replace(base, estimator="basis_pursuit", lam=None, mode="simulation", rho=rho)
    return replace(base, estimator="lasso", lam=lam, mode="simulation", rho=rho)


def resolve_tuning(plan: ExperimentPlan, log=None) -> ExperimentPlan:
    """Fill in every tuning value the plan's estimators need, computing each once."""
    X = plan.matrix()
    n, p = X.shape
    stream = plan.stream()
    ests = set(plan.estimators)
    say = log or (lambda msg: None)
    if plan.lambda_L is None and ests & {"L", "aL"}:
        say(f"calibrating lambda_L at k={plan.calibration_k}")
        cal = calibrate_lambda(
            X, plan.calibration_k, plan.sigma, plan.calibration_target, plan.calibration_signs,
            plan.calibration_draws, plan.sign_mode, stream.child("calibrate"),
        )
        plan.lambda_L = cal.lam
    if any(_needs_amp(e) for e in ests):
        for k in plan.k_list:
            for t in plan.t_grid:
                key = (int(k), float(t))
                if key not in plan.amp:
                    _, plan.amp[key] = lambda_for_design(n, p, k, t, plan.sigma)
    if "BP" in ests:
        fn_key = ("BP", None, None)
        if fn_key not in plan.thresholds:
            say("full-null threshold")
            plan.thresholds[fn_key] = full_null_threshold(
                X, plan.sigma, plan.fn_alpha, plan.fn_replicates, stream.child("full-null"), plan.threads
            )
    for est in ests & set(KNOCKOFF_ESTIMATORS):
        for k in plan.k_list:
            for t in plan.t_grid:
                key = (est, int(k), float(t))
                if key in plan.thresholds:
                    continue
                say(f"knockoff threshold {est} k={k} t={t}")
                lam = None if est == "BPk" else _amp_lambda(plan, est, k, t)
                sampler = response_sampler(X, SignalSpec(int(k), float(t), plan.sign_mode), plan.sigma)
                plan.thresholds[key] = knockoff_threshold(
                    X, sampler, _knockoff_cfg(plan, est, lam),
                    stream.child("knockoff-threshold", est, int(k), _t_tag(t)), plan.threads,
                )
    return plan


def _tuning(plan: ExperimentPlan, k: int, t: float, est: str):
    lam = tau = None
    if est in ("L", "aL"):
        if plan.lambda_L is None:
            raise PlanError(f"{est} needs lambda_L")
        lam = plan.lambda_L
    if est in ("Lk", "Lks"):
        lam = _amp_lambda(plan, est, k, t)
    if est == "BP":
        tau = plan.thresholds.get(("BP", None, None))
    elif est in KNOCKOFF_ESTIMATORS:
        tau = plan.thresholds.get((est, k, float(t)))
    if est in ("BP",) + KNOCKOFF_ESTIMATORS and tau is None:
        raise PlanError(f"{est} at k={k}, t={t} needs a threshold")
    pilot_lam = _amp_lambda(plan, "aL", k, t) if est == "aL" else None
    return lam, tau, pilot_lam


def run_cell(plan: ExperimentPlan, k: int, t: float, estimator: str, rng=None) -> CellResult:
    """``n_replicates`` fresh instances of cell ``(k, t)`` through one estimator."""
    if estimator not in ESTIMATORS:
        raise ParameterError(f"unknown estimator {estimator!r}")
    X = plan.matrix()
    k, t = int(k), float(t)
    lam, tau, pilot_lam = _tuning(plan, k, t, estimator)
    stream = rng if rng is not None else plan.stream()
    spec = SignalSpec(k, t, plan.sign_mode)
    cfg = LassoConfig()

    def replicate(r: int):
        rs = stream.child("eval", k, _t_tag(t), r)
        inst = gen_instance(X, spec, plan.sigma, rs)
        Y = inst.response
        try:
            if estimator == "L":
                est = lasso(Y, X, lam, cfg).estimate
            elif estimator == "aL":
                pilot = lasso(Y, X, pilot_lam, cfg).estimate
                est = adaptive_lasso(Y, X, lam, pilot, cfg).estimate
            elif estimator in ("BP", "BPk"):
                est = basis_pursuit(Y, X).estimate
            else:
                est = lasso(Y, X, lam, cfg).estimate
        except SignrecError as e:
            raise type(e)(f"{estimator} replicate {r}: {e}") from e
        truth = inst.signs
        gap = threshold_gap(est, truth)
        if tau is not None:
            est = apply_threshold(est, tau)
        bound = None
        if estimator == "L":
            try:
                ctx = build_zeta_context(X, truth, plan.sigma, lam)
                bound = mc_bound(ctx, plan.bound_draws, rs.child("bound")).p_hat
            except PreconditionError:
                bound = 0.0
        return replicate_outcome(truth, est), gap, bound

    rows = pmap(replicate, range(plan.n_replicates), plan.threads)
    stats = summarize([r[0] for r in rows])
    res = CellResult(
        plan.setting, k, t, estimator, plan.n_replicates,
        fwer=stats.fwer, recovery_prob=stats.recovery_prob, support_power=stats.support_power,
        std_errs={"fwer": stats.fwer_se, "recovery": stats.recovery_se},
        lambda_used=lam, tau_used=tau,
        separable=float(np.mean([r[1] > 0 for r in rows])),
    )
    if estimator == "L":
        b = np.array([r[2] for r in rows])
        res.mc_bound = float(b.mean())
        res.std_errs["mc_bound"] = float(b.std(ddof=1) / np.sqrt(b.size)) if b.size > 1 else 0.0
    return res


def run_plan(plan: ExperimentPlan, log=None) -> list[CellResult]:
    """All cells in (k, t, estimator) order; a failing cell is reported, not fatal."""
    if not plan.estimators:
        return []
    resolve_tuning(plan, log)
    out = []
    for k in plan.k_list:
        for t in plan.t_grid:
            for est in plan.estimators:
                if log:
                    log(f"cell {est} k={k} t={t}")
                try:
                    out.append(run_cell(plan, k, t, est))
                except SignrecError as e:
                    out.append(CellResult(plan.setting, int(k), float(t), est, plan.n_replicates, error=str(e)))
    return out


def _cell(x) -> str:
    return "" if x is None else fmt(x)


def results_csv(results: Sequence[CellResult], seed: int) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in results:
        w.writerow([
            c.setting, c.estimator, c.k, fmt(c.t), c.n_replicates, fmt(c.fwer), _cell(c.std_errs.get("fwer")),
            fmt(c.recovery_prob), _cell(c.std_errs.get("recovery")), fmt(c.support_power), _cell(c.mc_bound),
            _cell(c.lambda_used), _cell(c.tau_used), seed,
        ])
    return buf.getvalue()


def write_results(path, results: Sequence[CellResult], seed: int) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(results_csv(results, seed))


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != SCHEMA_LINE:
            raise ParameterError(f"{path}: expected schema line {SCHEMA_LINE!r}")
        return list(csv.DictReader(fh))
