"""Commands run by the pipeline graph.

Each ``run_<command>`` takes the parsed JSON input (or ``None``) and the
run's :class:`Configuration` and returns a :class:`CommandResult`: a JSON
document or CSV rows plus the exit code. Errors propagate as
:mod:`chaos_regularity.errors` exceptions; the graph maps them to exit codes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, TypeVar

from pydantic import BaseModel, ValidationError

from chaos_regularity.chaos_core import ChaosProfile, bs_norm_sq
from chaos_regularity.configuration import Configuration
from chaos_regularity.errors import AccuracyError, DomainError, InputError
from chaos_regularity.fractional_calc import (
    gamma_ratio_asymptotic_error,
    rl_derivative_monomial,
    rl_derivative_quadrature,
    rl_integral_monomial,
    rl_integral_quadrature,
)
from chaos_regularity.gaussian_mc import (
    GENERATOR,
    PolynomialEvaluator,
    STransformEvaluator,
    mc_bs_norm,
    mc_monomial_moment,
    sample_nu,
)
from chaos_regularity.models import (
    DonskerSpec,
    FbmParams,
    GaussKernelEvaluator,
    GaussKernelSpec,
    criterion_holds,
    donsker_alpha_star,
    donsker_bs_norm,
    donsker_chaos_profile,
    donsker_evaluator,
    donsker_reduced_quadrature,
    fbm_covariance,
    fbm_gprime_closed_form,
    gauss_kernel_chaos_profile,
    gk_bs_norm,
    gk_l2_check,
    gk_regularity,
    log_beta_integral,
    log_beta_quadrature,
    silt_d12_criterion,
    silt_gprime_bound,
    silt_intcon_criterion,
    silt_l2_criterion,
)
from chaos_regularity.quadrature import QuadratureResult
from chaos_regularity.regularity import alpha_threshold, classify, criterion_sum_numeric, membership

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

ORACLE_COLUMNS = ("operator", "n", "alpha", "x", "closed_form", "quadrature", "rel_error", "passed")
ORACLE_DEGREES = tuple(range(11))
ORACLE_ORDERS = (0.1, 0.25, 0.5, 0.75, 0.9)
ORACLE_POINTS = (0.3, 0.7, 1.0)
ORACLE_RTOL = 1e-6
ASYMPTOTIC_ORDERS = (0.25, 0.5, 0.75)
ASYMPTOTIC_LIMITS = {1000: 0.01, 10000: 0.001}
LOG_INTEGRAL_ORDERS = (0.25, 0.5, 0.75)

MC_COLUMNS = (
    "evaluator", "n", "m", "lambda", "estimate", "estimate_imag", "target",
    "standard_error", "se_multiple", "passed", "seed", "generator", "count",
)
MODEL_COLUMNS = ("quantity", "lambda", "alpha", "value", "reference", "error_bound", "verdict")
EVALUATORS = ("monomial", "polynomial", "donsker", "gauss-kernel")


@dataclass(kw_only=True)
class CommandResult:
    """What a command hands back to the graph."""

    document: Optional[Any] = None
    rows: Optional[list[dict[str, Any]]] = None
    columns: tuple[str, ...] = ()
    exit_code: int = 0


def _load(model: type[ModelT], payload: Any, what: str) -> ModelT:
    if payload is None:
        raise InputError(f"{what} input is required (--input)")
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        raise InputError(f"invalid {what}: {exc}") from exc


def _profile(payload: Any) -> ChaosProfile:
    if payload is None:
        raise InputError("chaos profile input is required (--input)")
    return ChaosProfile.parse(payload)


def _open_unit_grid(configuration: Configuration) -> tuple[float, ...]:
    grid = configuration.lambda_grid()
    if any(not 0.0 < lam < 1.0 for lam in grid):
        raise DomainError(f"lambda grid must lie in (0, 1), got {configuration.grid!r}")
    return grid


def run_classify(payload: Any, configuration: Configuration) -> CommandResult:
    """Classify a chaos profile at the configured Sobolev orders."""
    profile = _profile(payload)
    verdict = classify(profile, configuration.alpha_values(), tol=configuration.tol)
    logger.info("classified %d orders, alpha*=%r", len(verdict.queries), verdict.alpha_star)
    return CommandResult(document=verdict.to_json())


def _beta_column(beta: float) -> str:
    return f"beta={beta:g}"


def run_curve(payload: Any, configuration: Configuration) -> CommandResult:
    """Tabulate ``B(lambda)`` and the lambda-criterion of every configured order."""
    profile = _profile(payload)
    grid = _open_unit_grid(configuration)
    betas = configuration.beta_values()
    rows = []
    for lam in grid:
        value = bs_norm_sq(profile, lam, tol=configuration.tol)
        row: dict[str, Any] = {"lambda": lam, "B(lambda)": value.value}
        for beta in betas:
            if value.divergent:
                row[_beta_column(beta)] = math.inf
                continue
            numeric = criterion_sum_numeric(
                profile, beta, (lam,), tol=configuration.quad_tol, series_tol=configuration.tol
            )
            row[_beta_column(beta)] = numeric.final
        rows.append(row)
    columns = ("lambda", "B(lambda)", *(_beta_column(b) for b in betas))
    return CommandResult(rows=rows, columns=columns)


def _mc_row(evaluator: str, estimate: Any, target: float, gate: float, **extra: Any) -> dict[str, Any]:
    multiple = estimate.se_multiple(target)
    value = complex(estimate.value)
    return {
        "evaluator": evaluator,
        "n": extra.get("n"),
        "m": extra.get("m"),
        "lambda": extra.get("lam"),
        "estimate": value.real,
        "estimate_imag": value.imag,
        "target": target,
        "standard_error": estimate.standard_error,
        "se_multiple": multiple,
        "passed": multiple <= gate,
        "seed": estimate.metadata.get("seed"),
        "generator": GENERATOR,
        "count": estimate.count,
    }


def _mc_evaluator(
    name: str, payload: Any, configuration: Configuration
) -> tuple[STransformEvaluator, Callable[[float], float]]:
    if name == "polynomial":
        profile = _profile(payload)
        return PolynomialEvaluator(profile), lambda lam: bs_norm_sq(profile, lam).value
    if name == "donsker":
        spec = _load(DonskerSpec, payload if payload is not None else {"d": 1}, "Donsker spec")
        return donsker_evaluator(spec), lambda lam: donsker_bs_norm(spec, lam)
    if name == "gauss-kernel":
        gk_spec = _load(GaussKernelSpec, payload, "Gauss-kernel spec")
        return (
            GaussKernelEvaluator(gk_spec, configuration.truncation),
            lambda lam: gk_bs_norm(gk_spec, lam).value,
        )
    raise InputError(f"unknown evaluator {name!r}; expected one of {', '.join(EVALUATORS)}")


def run_mc_verify(payload: Any, configuration: Configuration) -> CommandResult:
    """Check Monte Carlo estimates under ``nu`` against closed-form targets.

    ``monomial`` tabulates ``E[z**n conj(z)**m]`` for ``n, m <= max_moment``;
    the other evaluators compare ``E|S Phi(lam u)|**2`` with the
    Bargmann-Segal norm at ``lam``. Exit 1 when any row misses the SE gate.
    """
    name = configuration.evaluator
    gate = configuration.se_gate
    rows = []
    if name == "monomial":
        if configuration.max_moment < 0:
            raise InputError(f"max_moment must be non-negative, got {configuration.max_moment}")
        batch = sample_nu(1, configuration.samples, configuration.seed, blocks=configuration.mc_blocks)
        for n in range(configuration.max_moment + 1):
            for m in range(configuration.max_moment + 1):
                est = mc_monomial_moment(n, m, batch)
                target = float(math.factorial(n)) if n == m else 0.0
                rows.append(_mc_row(name, est, target, gate, n=n, m=m))
    else:
        evaluator, target_fn = _mc_evaluator(name, payload, configuration)
        lam = configuration.lam
        batch = sample_nu(
            evaluator.dim, configuration.samples, configuration.seed, blocks=configuration.mc_blocks
        )
        est = mc_bs_norm(evaluator, lam, batch)
        rows.append(_mc_row(evaluator.name, est, target_fn(lam), gate, lam=lam))
    failed = sum(not row["passed"] for row in rows)
    if failed:
        logger.warning("%d of %d Monte Carlo rows outside %g standard errors", failed, len(rows), gate)
    return CommandResult(rows=rows, columns=MC_COLUMNS, exit_code=1 if failed else 0)


def _model_row(quantity: str, **values: Any) -> dict[str, Any]:
    row = {column: None for column in MODEL_COLUMNS}
    row["quantity"] = quantity
    row.update(values)
    return row


def _membership_rows(profile: ChaosProfile, alphas: tuple[float, ...], tol: float) -> list[dict[str, Any]]:
    rows = []
    for alpha in alphas:
        res = membership(profile, alpha, tol=tol)
        rows.append(
            _model_row(
                "membership",
                alpha=alpha,
                value=res.sobolev.value,
                reference=res.criterion.value,
                verdict=res.decision.value,
            )
        )
    return rows


def _head_length(truncation: int, lam_max: float) -> int:
    """Head long enough that the tail starts below ``1e-16`` at ``lam_max``."""
    needed = math.ceil(math.log(1e-16) / (2.0 * math.log(lam_max)))
    return max(truncation, needed)


def run_donsker(payload: Any, configuration: Configuration) -> CommandResult:
    """Donsker's delta: threshold, closed form against quadrature, memberships.

    Exit 1 when the quadrature misses the closed form by more than ``1e-6``
    relative or the derived profile's threshold differs from ``-d/2``.
    """
    spec = _load(DonskerSpec, payload, "Donsker spec")
    grid = _open_unit_grid(configuration)
    profile = donsker_chaos_profile(spec, _head_length(configuration.truncation, max(grid)))
    rows = []
    threshold = alpha_threshold(profile)
    expected = donsker_alpha_star(spec.d)
    rows.append(
        _model_row(
            "alpha_star",
            value=threshold,
            reference=expected,
            error_bound=0.0,
            verdict="agree" if threshold == expected else "disagree",
        )
    )
    for lam in grid:
        closed = donsker_bs_norm(spec, lam)
        reduced = donsker_reduced_quadrature(lam, tol=configuration.quad_tol)
        # the d-dimensional integral factorizes into d copies of the reduced one
        value = spec.c_spec * reduced.value**spec.d
        error = spec.c_spec * spec.d * reduced.value ** (spec.d - 1) * reduced.error_bound
        rows.append(
            _model_row(
                "bs_norm_quadrature",
                **{"lambda": lam},
                value=value,
                reference=closed,
                error_bound=error,
                verdict="agree" if abs(value - closed) <= ORACLE_RTOL * closed else "disagree",
            )
        )
        series = bs_norm_sq(profile, lam, tol=configuration.tol)
        rows.append(
            _model_row(
                "bs_norm_series",
                **{"lambda": lam},
                value=series.value,
                reference=closed,
                error_bound=series.remainder_bound,
                verdict="agree" if abs(series.value - closed) <= 1e-8 * closed else "disagree",
            )
        )
    rows.extend(_membership_rows(profile, configuration.alpha_values(), configuration.tol))
    failed = any(row["verdict"] == "disagree" for row in rows)
    return CommandResult(rows=rows, columns=MODEL_COLUMNS, exit_code=1 if failed else 0)


def _criterion_verdict(res: QuadratureResult) -> str:
    if res.divergent:
        return "infinite"
    return "finite" if res.converged else "unstable"


def run_silt(payload: Any, configuration: Configuration) -> CommandResult:
    """SILT criteria for fractional Brownian motion ``{"H": ..., "T": ...}``."""
    params = _load(FbmParams, payload, "fBm spec")
    cov = fbm_covariance(params)
    mesh = configuration.mesh_spec()
    rtol = configuration.refinement_rtol
    l2 = silt_l2_criterion(cov, mesh, rtol=rtol)
    d12 = silt_d12_criterion(cov, mesh, rtol=rtol)
    intcon = silt_intcon_criterion(cov, mesh, rtol=rtol)
    gprime = silt_gprime_bound(cov, mesh, rtol=rtol)
    rows = [
        _model_row("l2_criterion", value=l2.value, error_bound=l2.error_bound, verdict=_criterion_verdict(l2)),
        _model_row("d12_criterion", value=d12.value, error_bound=d12.error_bound, verdict=_criterion_verdict(d12)),
        _model_row(
            "intcon_criterion",
            value=intcon.value,
            error_bound=intcon.error_bound,
            verdict=_criterion_verdict(intcon),
        ),
        _model_row(
            "gprime_bound",
            value=gprime.value,
            reference=fbm_gprime_closed_form(params),
            error_bound=gprime.error_bound,
            verdict=_criterion_verdict(gprime),
        ),
    ]
    satisfied = criterion_holds(l2) and criterion_holds(d12)
    rows.append(
        _model_row("D^{1,2}", verdict="satisfied" if satisfied else "not established")
    )
    logger.info("SILT H=%g T=%g mesh=%s: D^{1,2} %s", params.H, params.T, mesh.describe(), rows[-1]["verdict"])
    return CommandResult(rows=rows, columns=MODEL_COLUMNS)


def run_gauss_kernel(payload: Any, configuration: Configuration) -> CommandResult:
    """Gauss kernel: determinant identity, norm curve and regularity by both routes."""
    spec = _load(GaussKernelSpec, payload, "Gauss-kernel spec")
    l2 = gk_l2_check(spec)
    rows = [
        _model_row("determinant", value=l2.determinant),
        _model_row("bs_norm_at_one", value=l2.bs_norm_at_one),
        _model_row("l2", verdict="member" if l2.member else "nonmember"),
    ]
    grid = _open_unit_grid(configuration)
    for lam in grid:
        rows.append(_model_row("bs_norm", **{"lambda": lam}, value=gk_bs_norm(spec, lam).value))
    alphas = configuration.alpha_values()
    profile = gauss_kernel_chaos_profile(spec, configuration.truncation)
    rows.extend(_membership_rows(profile, tuple(a for a in alphas if a <= 0.0), configuration.tol))
    disagreements = 0
    if l2.member:
        for alpha in (a for a in alphas if a > 0.0):
            reg = gk_regularity(spec, alpha, grid, depth=configuration.truncation, tol=configuration.quad_tol)
            disagreements += not reg.agreement
            rows.append(
                _model_row(
                    "regularity",
                    alpha=alpha,
                    value=reg.sup_estimate,
                    reference=reg.chaos_value,
                    verdict=reg.chaos_decision.value if reg.agreement else "disagree",
                )
            )
    return CommandResult(rows=rows, columns=MODEL_COLUMNS, exit_code=1 if disagreements else 0)


def _oracle_row(operator: str, n: Optional[int], alpha: float, x: Optional[float], closed: float,
                approx: float, limit: float) -> dict[str, Any]:
    rel = abs(approx - closed) / abs(closed) if closed != 0.0 else abs(approx)
    return {
        "operator": operator,
        "n": n,
        "alpha": alpha,
        "x": x,
        "closed_form": closed,
        "quadrature": approx,
        "rel_error": rel,
        "passed": bool(rel <= limit),
    }


def _monomial(n: int) -> Callable[[float], float]:
    return lambda t: t**n


def _monomial_derivative(n: int) -> Callable[[float], float]:
    return lambda t: n * t ** (n - 1) if n > 0 else 0.0


def run_oracle(payload: Any, configuration: Configuration) -> CommandResult:
    """Quadrature against closed forms for the fractional-calculus building blocks.

    Covers the Riemann-Liouville integral and derivative of monomials, the
    Gamma-ratio asymptotics and the log-power integral. Exit 1 when any row
    fails.
    """
    tol = configuration.quad_tol
    rows = []
    for n in ORACLE_DEGREES:
        for alpha in ORACLE_ORDERS:
            for x in ORACLE_POINTS:
                for operator in ("rl_integral", "rl_derivative"):
                    if operator == "rl_integral":
                        closed = rl_integral_monomial(n, alpha) * x ** (n + alpha)
                    else:
                        closed = rl_derivative_monomial(n, alpha) * x ** (n - alpha)
                    try:
                        if operator == "rl_integral":
                            approx = rl_integral_quadrature(_monomial(n), alpha, x, tol=tol).value
                        else:
                            approx = rl_derivative_quadrature(
                                _monomial(n), alpha, x, derivative=_monomial_derivative(n), tol=tol
                            ).value
                    except AccuracyError as exc:
                        logger.warning("%s n=%d alpha=%g x=%g: %s", operator, n, alpha, x, exc)
                        approx = math.nan
                    rows.append(_oracle_row(operator, n, alpha, x, closed, approx, ORACLE_RTOL))
    for n, limit in ASYMPTOTIC_LIMITS.items():
        for alpha in ASYMPTOTIC_ORDERS:
            for sign, label in ((1, "gamma_ratio_asymptotic_derivative"), (-1, "gamma_ratio_asymptotic_integral")):
                err = gamma_ratio_asymptotic_error(n, alpha, sign)
                rows.append(_oracle_row(label, n, alpha, None, 1.0, 1.0 + err, limit))
    for alpha in LOG_INTEGRAL_ORDERS:
        closed = log_beta_integral(alpha)
        approx = log_beta_quadrature(alpha, tol=tol).value
        rows.append(_oracle_row("log_power_integral", None, alpha, None, closed, approx, ORACLE_RTOL))
    failed = sum(not row["passed"] for row in rows)
    if failed:
        logger.warning("oracle: %d of %d rows failed", failed, len(rows))
    return CommandResult(rows=rows, columns=ORACLE_COLUMNS, exit_code=1 if failed else 0)


COMMANDS: dict[str, Callable[[Any, Configuration], CommandResult]] = {
    "classify": run_classify,
    "curve": run_curve,
    "mc-verify": run_mc_verify,
    "donsker": run_donsker,
    "silt": run_silt,
    "gauss-kernel": run_gauss_kernel,
    "oracle": run_oracle,
}

INPUT_OPTIONAL = frozenset({"mc-verify", "oracle"})
