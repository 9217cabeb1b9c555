"""
Assemble both sides of a continuity estimate for a concrete pair of densities.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from specfact.bounds import (
    PairStatistics,
    default_orlicz_setup,
    evaluate_rhs,
)
from specfact.circle import (
    SampledMatrixFunction,
    SampledScalarFunction,
    lp_norm,
    power_mean,
)
from specfact.config import (
    MATRIX_ORLICZ_THEOREMS,
    SCALAR_THEOREMS,
    FactorizationSettings,
    GridSettings,
    VerificationSettings,
)
from specfact.factorize import (
    SpectralFactor,
    h2_diff_norm,
    require_converged,
    scalar_spectral_factor,
    spectral_factor,
)
from specfact.matrix_calc import ell_and_Q, log_plus, pointwise_log_det
from specfact.orlicz import OrliczPair, luxemburg_norm, orlicz_norm_upper, rho_and_pi

logger = logging.getLogger(__name__)


@dataclass
class DensityPair:
    """
    Two densities on one grid, with whatever closed-form data the generator knows.

    ``difference`` and the log det samples override the numerically computed
    G - F and log det when cancellation would destroy them.
    """

    F: SampledMatrixFunction
    G: SampledMatrixFunction
    F_plus: Optional[SpectralFactor] = None
    G_plus: Optional[SpectralFactor] = None
    explicit_F_plus: Optional[SampledMatrixFunction] = None
    explicit_G_plus: Optional[SampledMatrixFunction] = None
    difference: Optional[SampledMatrixFunction] = None
    logdet_F: Optional[np.ndarray] = None
    logdet_G: Optional[np.ndarray] = None
    label: str = "pair"
    params: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.F.grid

    def distance(self):
        if self.difference is not None:
            return lp_norm(self.difference, 1)
        return lp_norm(self.G - self.F, 1)

    def log_dets(self):
        logdet_F, logdet_G = self.logdet_F, self.logdet_G
        if logdet_F is None:
            logdet_F = pointwise_log_det(self.F)
        if logdet_G is None:
            logdet_G = pointwise_log_det(self.G)
        return np.asarray(logdet_F, dtype=float), np.asarray(logdet_G, dtype=float)


@dataclass
class BoundReport:
    """Outcome of checking lhs <= rhs for one theorem on one pair."""

    theorem: str
    lhs: float
    rhs: float
    ratio: float
    statistics: PairStatistics
    grid_size: int
    label: str = "pair"
    params: dict = field(default_factory=dict)
    violation: bool = False
    confirmed: Optional[bool] = None
    converged: bool = True
    iterations: int = 0
    residuals: tuple = ()
    lhs_explicit: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "label": self.label,
            "params": self.params,
            "grid_size": self.grid_size,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "lhs_explicit": self.lhs_explicit,
            "violation": self.violation,
            "confirmed": self.confirmed,
            "converged": self.converged,
            "iterations": self.iterations,
            "residuals": list(self.residuals),
            "statistics": self.statistics.to_dict(),
            "error": self.error,
        }

    def to_row(self):
        """Flat record for the CSV reports."""
        return {
            "theorem": self.theorem,
            "label": self.label,
            "eps": self.params.get("eps", np.nan),
            "N": self.grid_size,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "d1": self.statistics.d1,
            "dlogdet": self.statistics.dlogdet,
            "violation": self.violation,
            "confirmed": self.confirmed,
            "converged": self.converged,
            "error": self.error or "",
        }


def bound_ratio(lhs, rhs):
    """lhs / rhs with 0 / 0 = 0 and x / inf = 0."""
    if lhs == 0 or np.isinf(rhs):
        return 0.0
    if rhs == 0:
        return np.inf
    return lhs / rhs


def pair_statistics(pair, settings=None, pair0=None, pair1=None):
    """
    Every norm the estimates consume, measured on the pair's grid.

    ||F||_Psi0 uses the power pair with p0 unless ``pair0`` is given;
    ||ell_F||_(Psi1) and Pi_Psi1 use ``pair1`` (power p1 by default).
    """
    settings = settings or VerificationSettings()
    F = pair.F
    logdet_F, logdet_G = pair.log_dets()
    norms_F = F.pointwise_norms()
    norms_G = pair.G.pointwise_norms()
    ell, Q = ell_and_Q(F, logdet_F)
    pair0 = pair0 or OrliczPair.power(settings.p0)
    pair1 = pair1 or OrliczPair.power(settings.p1)
    _, pi_psi1 = rho_and_pi(ell.real, pair1.psi)

    stats = PairStatistics(
        n=F.dim,
        d1=pair.distance(),
        dlogdet=power_mean(logdet_G - logdet_F, 1),
        dlogplus=power_mean(log_plus(norms_G) - log_plus(norms_F), 1),
        fp0=power_mean(norms_F, settings.p0),
        f_inf=power_mean(norms_F, np.inf),
        ellp1=power_mean(ell.real, settings.p1),
        ell_inf=power_mean(ell.real, np.inf),
        qfp1=power_mean(Q.real, settings.p1),
        p0=settings.p0,
        p1=settings.p1,
        alpha=settings.alpha,
        f_psi0=orlicz_norm_upper(norms_F, pair0),
        ell_psi1=luxemburg_norm(ell.real, pair1.psi),
        pi_psi1=pi_psi1,
        min_eigenvalue=float(np.min(np.linalg.eigvalsh(F.values))),
    )
    logger.debug("pair statistics for %s: %s", pair.label, stats)
    return stats


def _factor_pair(pair, factorization):
    F_plus = pair.F_plus or require_converged(spectral_factor(pair.F, factorization))
    G_plus = pair.G_plus or require_converged(spectral_factor(pair.G, factorization))
    return F_plus, G_plus


def verify_pair(
    pair,
    kind,
    settings=None,
    factorization=None,
    pair0=None,
    pair1=None,
    nu=None,
    rebuild: Optional[Callable] = None,
    grid_settings: Optional[GridSettings] = None,
):
    """
    Compare ||G+ - F+||^2 with the right-hand side of ``kind``.

    Args:
        pair: DensityPair
        kind: theorem id
        settings: VerificationSettings (p0, p1, alpha, violation tolerance)
        factorization: FactorizationSettings for pairs without known factors
        pair0, pair1, nu: Orlicz data; the power-form reductions by default
        rebuild: optional callable taking a CircleGrid and returning the
            same pair on that grid; a violation counts only if it persists
            on the doubled grid
        grid_settings: GridSettings; confirm_by_doubling=False reports
            violations unconfirmed, doubling_rtol bounds the accepted lhs
            drift between the two grids

    Returns:
        BoundReport

    Raises:
        PreconditionError: when the theorem's distance gate fails
        NonConvergenceError: when a factorization does not converge
    """
    settings = settings or VerificationSettings()
    factorization = factorization or FactorizationSettings()
    grid_settings = grid_settings or GridSettings()
    F_plus, G_plus = _factor_pair(pair, factorization)
    lhs = h2_diff_norm(F_plus.plus, G_plus.plus) ** 2

    if kind in MATRIX_ORLICZ_THEOREMS:
        provisional = PairStatistics(
            p0=settings.p0, p1=settings.p1, alpha=settings.alpha
        )
        default0, default1, default_nu = default_orlicz_setup(kind, provisional)
        pair0, pair1, nu = pair0 or default0, pair1 or default1, nu or default_nu
    stats = pair_statistics(pair, settings, pair0=pair0, pair1=pair1)
    rhs = evaluate_rhs(kind, stats, pair0=pair0, pair1=pair1, nu=nu)

    lhs_explicit = None
    if pair.explicit_F_plus is not None and pair.explicit_G_plus is not None:
        lhs_explicit = h2_diff_norm(pair.explicit_F_plus, pair.explicit_G_plus) ** 2

    report = BoundReport(
        theorem=kind,
        lhs=float(lhs),
        rhs=float(rhs),
        ratio=bound_ratio(lhs, rhs),
        statistics=stats,
        grid_size=pair.grid.size,
        label=pair.label,
        params=dict(pair.params),
        violation=bool(lhs > rhs * (1 + settings.tolerance)),
        converged=F_plus.converged and G_plus.converged,
        iterations=max(F_plus.iterations, G_plus.iterations),
        residuals=(F_plus.residual, G_plus.residual),
        lhs_explicit=lhs_explicit,
    )

    if report.violation:
        if rebuild is None or not grid_settings.confirm_by_doubling:
            logger.warning(
                "%s on %s: lhs %.6g exceeds rhs %.6g (unconfirmed)",
                kind,
                pair.label,
                lhs,
                rhs,
            )
        else:
            doubled = verify_pair(
                rebuild(pair.grid.doubled()),
                kind,
                settings,
                factorization,
                pair0=pair0,
                pair1=pair1,
                nu=nu,
                grid_settings=grid_settings.model_copy(
                    update={"confirm_by_doubling": False}
                ),
            )
            report.confirmed = doubled.violation
            report.violation = doubled.violation
            drift = abs(doubled.lhs - report.lhs) / max(abs(report.lhs), 1e-300)
            if drift > grid_settings.doubling_rtol:
                logger.warning(
                    "%s on %s: lhs moved by %.3e (relative) under grid doubling",
                    kind,
                    pair.label,
                    drift,
                )
            logger.warning(
                "%s on %s: violation at N=%d %s at N=%d",
                kind,
                pair.label,
                pair.grid.size,
                "persists" if doubled.violation else "disappears",
                doubled.grid_size,
            )

    logger.info(
        "%s on %s (N=%d): lhs %.6g, rhs %.6g, ratio %.4g",
        kind,
        pair.label,
        pair.grid.size,
        report.lhs,
        report.rhs,
        report.ratio,
    )
    return report


def scalar_statistics(f, g, settings=None, pair0=None):
    """PairStatistics of a scalar pair (n = 1) on the grid."""
    settings = settings or VerificationSettings()
    f_values = np.abs(f.values)
    g_values = np.abs(g.values)
    pair0 = pair0 or OrliczPair.power(settings.p0)
    return PairStatistics(
        n=1,
        d1=power_mean(f_values - g_values, 1),
        dlogdet=power_mean(np.log(f_values) - np.log(g_values), 1),
        fp0=power_mean(f_values, settings.p0),
        f_inf=power_mean(f_values, np.inf),
        p0=settings.p0,
        p1=settings.p1,
        alpha=settings.alpha,
        f_psi0=orlicz_norm_upper(f_values, pair0),
    )


def verify_scalar_pair(
    f,
    g,
    kind,
    settings=None,
    pair0=None,
    lhs=None,
    statistics=None,
    label="scalar",
    params=None,
):
    """
    Scalar counterpart of verify_pair for thm1.2, thm2.2 and thm2.3.

    ``lhs`` and ``statistics`` replace the grid values when the caller has
    computed them more accurately (for example by graded quadrature); ``f``
    and ``g`` may then be None.
    """
    if kind not in SCALAR_THEOREMS:
        raise ValueError(f"{kind!r} is not a scalar estimate.")
    settings = settings or VerificationSettings()
    if lhs is None:
        f_plus = scalar_spectral_factor(_as_scalar(f))
        g_plus = scalar_spectral_factor(_as_scalar(g))
        lhs = h2_diff_norm(f_plus.plus, g_plus.plus) ** 2
    if statistics is None:
        statistics = scalar_statistics(_as_scalar(f), _as_scalar(g), settings, pair0)
    rhs = evaluate_rhs(kind, statistics, pair0=pair0)
    grid_size = f.grid.size if f is not None else 0
    report = BoundReport(
        theorem=kind,
        lhs=float(lhs),
        rhs=float(rhs),
        ratio=bound_ratio(lhs, rhs),
        statistics=statistics,
        grid_size=grid_size,
        label=label,
        params=dict(params or {}),
        violation=bool(lhs > rhs * (1 + settings.tolerance)),
    )
    if report.violation:
        logger.warning("%s on %s: lhs %.6g exceeds rhs %.6g", kind, label, lhs, rhs)
    return report


def _as_scalar(f):
    if isinstance(f, SampledScalarFunction):
        return f
    return f.entry(0, 0)
