"""
Parametric density pairs: the two 2 x 2 counterexample families with
explicit factors, the scalar family with a singular conformal perturbation,
and a few builtin test densities.
"""

import logging
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from sklearn.linear_model import LinearRegression

from specfact.bounds import PairStatistics
from specfact.circle import (
    CircleGrid,
    SampledMatrixFunction,
    SampledScalarFunction,
    conjugate_function,
    lp_norm,
    power_mean,
)
from specfact.config import FactorizationSettings, QuadratureSettings
from specfact.errors import ArcResolutionError
from specfact.factorize import (
    SpectralFactor,
    h2_diff_norm,
    matrix_spectral_factor,
    normalize_factor_at_zero,
    outer_from_log_modulus,
)
from specfact.matrix_calc import ell_and_Q
from specfact.quadrature import graded_mean, refine_until_stable
from specfact.verify import DensityPair

logger = logging.getLogger(__name__)

MIN_ARC_NODES = 64
ARC_OVERSAMPLING = 256
DEFAULT_EPS_SEQUENCE = tuple(10.0 ** -np.arange(1, 7))


def arc_grid(eps, grid=None):
    """
    Grid resolving the arc [eps, 2 eps].

    Without a grid, N = 2^ceil(log2(256 pi / eps)) is chosen.

    Raises:
        ArcResolutionError: if an explicit grid has fewer than 64 nodes there
    """
    if grid is None:
        grid = CircleGrid.at_least(ARC_OVERSAMPLING * np.pi / eps)
        logger.warning(
            "auto-selected N=%d to resolve the arc at eps=%g", grid.size, eps
        )
    count = grid.count_nodes_in(eps, 2 * eps)
    if count < MIN_ARC_NODES:
        raise ArcResolutionError(
            f"N={grid.size} puts {count} nodes in [{eps:g}, {2 * eps:g}];"
            f" at least {MIN_ARC_NODES} are needed."
        )
    return grid


class Example1Params(BaseModel):
    """Parameters of the 2 x 2 families; ``variant`` picks the moduli on the arc."""

    model_config = ConfigDict(frozen=True)

    p1: float = Field(2.0, gt=1)
    eps: float = Field(1e-3, gt=0, lt=1)
    delta: Optional[float] = Field(None, gt=0, lt=1)
    variant: Literal["ex1", "ex2"] = "ex1"

    @field_validator("eps")
    @classmethod
    def _arc_inside_circle(cls, value):
        if 2 * value >= np.pi:
            raise ValueError("the arc [eps, 2 eps] must lie inside (0, pi)")
        return value

    @property
    def resolved_delta(self):
        if self.delta is not None:
            return self.delta
        if self.variant == "ex1":
            return (
                self.eps
                * np.exp(-(2 ** (-1 / self.p1)) * self.eps ** (-1 / self.p1))
                / (4 * np.pi)
            )
        return self.eps ** ((2 * self.p1 + 1) / (2 * self.p1))

    def describe(self):
        return {
            "family": self.variant,
            "p1": self.p1,
            "eps": self.eps,
            "delta": float(self.resolved_delta),
        }


def _arc_log_modulus(params, theta):
    """log |lambda_0| on the arc."""
    if params.variant == "ex1":
        return -(theta ** (-1 / params.p1))
    return np.log(theta) / (2 * params.p1)


def example1_pair(params, grid=None):
    """
    The pair F = diag(|l0|^2, 1), G = G+ (G+)* with G+ = [[l1, 0], [l3, l2]].

    The l_j are outer functions with prescribed piecewise moduli on and off
    the arc [eps, 2 eps]; G - F and log det are carried in closed form.
    """
    grid = arc_grid(params.eps, grid)
    theta = grid.nodes
    on_arc = (theta >= params.eps) & (theta <= 2 * params.eps)
    delta = params.resolved_delta
    log_off = 0.5 * np.log1p(-(delta**2))

    log_l0 = np.zeros(grid.size)
    log_l0[on_arc] = _arc_log_modulus(params, theta[on_arc])
    log_l1 = np.where(on_arc, 0.5 * np.log(2) + log_l0, -log_off)
    log_l2 = np.where(on_arc, -0.5 * np.log(2), log_off)
    log_l3 = np.where(on_arc, -0.5 * np.log(2), np.log(delta))
    lam = [
        outer_from_log_modulus(grid, values).values
        for values in (log_l0, log_l1, log_l2, log_l3)
    ]

    zeros, ones = np.zeros(grid.size), np.ones(grid.size)
    F = SampledMatrixFunction.from_entries(
        grid, [[np.exp(2 * log_l0), zeros], [zeros, ones]]
    )
    cross = lam[1] * np.conj(lam[3])
    difference = SampledMatrixFunction.from_entries(
        grid,
        [
            [np.where(on_arc, np.exp(2 * log_l0), delta**2 / (1 - delta**2)), cross],
            [np.conj(cross), zeros],
        ],
    )
    G = SampledMatrixFunction(grid, F.values + difference.values)

    explicit_F = SampledMatrixFunction.from_entries(
        grid, [[lam[0], zeros], [zeros, ones]]
    )
    explicit_G = SampledMatrixFunction.from_entries(
        grid, [[lam[1], zeros], [lam[3], lam[2]]]
    )
    at_zero = [np.exp(np.mean(values)) for values in (log_l0, log_l1, log_l2, log_l3)]
    F_plus = SpectralFactor(
        plus=explicit_F,
        at_zero=np.diag([at_zero[0], 1.0]).astype(complex),
        residual=lp_norm(F - explicit_F.gram(), 1),
    )
    G_plus = normalize_factor_at_zero(
        explicit_G,
        at_zero=np.array([[at_zero[1], 0.0], [at_zero[3], at_zero[2]]], dtype=complex),
        density=G,
    )

    logdet = 2 * log_l0
    return DensityPair(
        F=F,
        G=G,
        F_plus=F_plus,
        G_plus=G_plus,
        explicit_F_plus=explicit_F,
        explicit_G_plus=explicit_G,
        difference=difference,
        logdet_F=logdet,
        logdet_G=logdet.copy(),
        label=params.variant,
        params={**params.describe(), "N": grid.size},
    )


def example2_pair(params, grid=None):
    """The second family: power moduli on the arc and delta = eps^{(2p1+1)/(2p1)}."""
    if params.variant != "ex2":
        params = params.model_copy(update={"variant": "ex2"})
    return example1_pair(params, grid)


def _det_2x2(values):
    """Entrywise 2 x 2 determinants; no pivoting across the tiny arc entries."""
    diagonal = values[:, 0, 0] * values[:, 1, 1]
    return np.real(diagonal - values[:, 0, 1] * values[:, 1, 0])


def example_invariants(pair, tolerance=1e-9):
    """Pointwise identities every generated pair satisfies."""
    l2 = np.abs(pair.explicit_G_plus.values[:, 1, 1]) ** 2
    l3 = np.abs(pair.explicit_G_plus.values[:, 1, 0]) ** 2
    det_F = _det_2x2(pair.F.values)
    det_G = _det_2x2(pair.G.values)
    diagonal_F = np.real(np.diagonal(pair.F.values, axis1=1, axis2=2))
    diagonal_G = np.real(np.diagonal(pair.G.values, axis1=1, axis2=2))
    reconstruction_F = lp_norm(pair.F - pair.explicit_F_plus.gram(), np.inf)
    reconstruction_G = lp_norm(pair.G - pair.explicit_G_plus.gram(), np.inf)
    return {
        "unit_column": bool(np.max(np.abs(l2 + l3 - 1)) <= tolerance),
        "det_equal": bool(np.max(np.abs(det_G - det_F) / det_F) <= tolerance),
        # F is diagonal, so its eigenvalues are the diagonal entries
        "F_between_0_and_I": bool(
            diagonal_F.min() >= 0 and diagonal_F.max() <= 1 + tolerance
        ),
        "explicit_factors_reproduce": bool(
            max(reconstruction_F, reconstruction_G) <= tolerance
        ),
        "hermitian_positive_definite": bool(
            pair.F.is_hermitian
            and pair.G.is_hermitian
            and np.all(diagonal_F > 0)
            and np.all(diagonal_G > 0)
            and np.all(det_F > 0)
            and np.all(det_G > 0)
        ),
    }


def _arc_tolerance(pair):
    return pair.grid.step / pair.params["eps"]


def example1_lower_bound_check(params, grid=None):
    """
    Both sides of ||G+ - F+||^2 >= |log ||G - F||_1|^{-p1} / 8 pi and the
    intermediate chain through ||l3||^2 >= eps / 4 pi.

    Failed inequalities are entries of the report, not exceptions.
    """
    pair = example1_pair(params, grid)
    eps, p1 = params.eps, params.p1
    d1 = pair.distance()
    lhs_explicit = h2_diff_norm(pair.explicit_F_plus, pair.explicit_G_plus) ** 2
    lhs = h2_diff_norm(pair.F_plus.plus, pair.G_plus.plus) ** 2
    lambda3 = power_mean(pair.explicit_G_plus.values[:, 1, 0], 2) ** 2
    bound = abs(np.log(d1)) ** (-p1) / (8 * np.pi)
    ell, _ = ell_and_Q(pair.F, pair.logdet_F)
    ell_norm = power_mean(ell.real, p1)
    ell_expected = 2 * (np.log(2) / (2 * np.pi)) ** (1 / p1)
    arc_tolerance = _arc_tolerance(pair)

    checks = {
        "lhs_ge_lambda3": lhs_explicit >= lambda3,
        "lambda3_ge_eps_over_4pi": lambda3 >= eps / (4 * np.pi) * (1 - arc_tolerance),
        "eps_ge_log_distance_bound": eps >= abs(np.log(d1)) ** (-p1) / 2,
        "lower_bound": lhs_explicit >= bound,
        "distance_decay": 2 * np.pi * d1 <= np.exp(-((2 * eps) ** (-1 / p1))),
        "ell_norm_matches": abs(ell_norm - ell_expected)
        <= 2 * arc_tolerance * ell_expected,
        **example_invariants(pair),
    }
    report = {
        "params": pair.params,
        "values": {
            "d1": d1,
            "lhs_explicit": lhs_explicit,
            "lhs_canonical": lhs,
            "lambda3_h2_squared": lambda3,
            "eps_over_4pi": eps / (4 * np.pi),
            "lower_bound": bound,
            "ell_p1_norm": ell_norm,
            "ell_p1_norm_expected": ell_expected,
        },
        "checks": {name: bool(value) for name, value in checks.items()},
    }
    logger.info("ex1 lower-bound check at eps=%g: %s", eps, report["checks"])
    return report


def example2_constant(p1):
    """C_{p1} with ||G - F||_1 <= C_{p1} eps^{(2p1+1)/(2p1)} for eps <= 1/4."""
    r1 = (p1 + 1) / p1
    r2 = (2 * p1 + 1) / (2 * p1)
    arc = (p1 / (p1 + 1)) * (2**r1 - 1) + (2 * p1 / (2 * p1 + 1)) * (2**r2 - 1)
    return arc / (2 * np.pi) + 2.0


def example2_check(params, grid=None):
    """The second family and its lower-bound chain."""
    pair = example2_pair(params, grid)
    eps, p1 = params.eps, params.p1
    d1 = pair.distance()
    exponent = (2 * p1 + 1) / (2 * p1)
    C = example2_constant(p1)
    lhs_explicit = h2_diff_norm(pair.explicit_F_plus, pair.explicit_G_plus) ** 2
    lhs = h2_diff_norm(pair.F_plus.plus, pair.G_plus.plus) ** 2
    _, Q = ell_and_Q(pair.F, pair.logdet_F)
    q_norm = power_mean(Q.real, p1)
    arc_tolerance = _arc_tolerance(pair)
    floor = eps / (4 * np.pi) * (1 - arc_tolerance)

    checks = {
        "distance_le_C_eps_power": d1 <= C * eps**exponent,
        "eps_ge_distance_power": eps >= (d1 / C) ** (1 / exponent),
        "lhs_ge_eps_over_4pi": lhs_explicit >= floor,
        "lower_bound": lhs_explicit
        >= (d1 / C) ** (2 * p1 / (2 * p1 + 1)) / (4 * np.pi) * (1 - arc_tolerance),
        "Q_norm_bound": q_norm <= (np.log(2) / (2 * np.pi)) ** (1 / p1) + 1,
        **example_invariants(pair),
    }
    return pair, {
        "params": pair.params,
        "values": {
            "d1": d1,
            "C_p1": C,
            "lhs_explicit": lhs_explicit,
            "lhs_canonical": lhs,
            "Q_p1_norm": q_norm,
            "lhs_over_distance_power": lhs_explicit / d1 ** (2 * p1 / (2 * p1 + 1)),
        },
        "checks": {name: bool(value) for name, value in checks.items()},
    }


def cross_check_factor(pair, settings=None):
    """
    Factor F and G with the general Wilson iteration and compare with the
    explicit canonical factors.

    Returns:
        dict with H_2 distances, residuals and convergence flags
    """
    settings = settings or FactorizationSettings()
    result = {}
    sides = (("F", pair.F, pair.F_plus), ("G", pair.G, pair.G_plus))
    for name, density, explicit in sides:
        wilson = matrix_spectral_factor(density, settings)
        result[name] = {
            "distance": h2_diff_norm(wilson.plus, explicit.plus),
            "at_zero_gap": float(np.linalg.norm(wilson.at_zero - explicit.at_zero, 2)),
            "wilson_residual": wilson.residual,
            "explicit_residual": explicit.residual,
            "converged": wilson.converged,
            "iterations": wilson.iterations,
        }
    logger.info(
        "cross-check on %s: F distance %.3e, G distance %.3e",
        pair.label,
        result["F"]["distance"],
        result["G"]["distance"],
    )
    return result


class ScalarFamilyParams(BaseModel):
    """
    Parameters of the scalar family.  gamma0 and tau default to the
    smallest admissible values for p, alpha and beta.
    """

    p: float = Field(2.0, gt=1)
    beta: float = Field(0.1, gt=0)
    alpha: float = Field(1e-3, gt=0, lt=1)
    gamma: float = 0.6
    gamma0: Optional[float] = None
    tau: Optional[float] = Field(None, ge=0)
    eps: float = Field(1e-2, gt=0)
    v0_convention: Literal["normalized", "unnormalized"] = "normalized"

    @property
    def gamma_effective(self):
        return (self.p - 1 + self.beta) / ((1 - self.alpha) * (self.p + self.beta))

    @model_validator(mode="after")
    def _resolve_defaults(self):
        minimal = self.gamma_effective
        if self.gamma0 is None:
            self.gamma0 = minimal
        elif self.gamma0 < minimal:
            raise ValueError(f"gamma0 must be >= {minimal:.6g}")
        if self.tau is None:
            tau = 0
            while (tau + 1) / (tau + 2 - self.alpha) <= self.gamma0:
                tau += 1
            self.tau = float(tau)
        elif (self.tau + 1) / (self.tau + 2 - self.alpha) <= self.gamma0:
            raise ValueError("tau too small: need (tau+1)/(tau+2-alpha) > gamma0")
        if self.gamma < (self.p - 1) / self.p:
            raise ValueError(f"gamma must be >= (p-1)/p = {(self.p - 1) / self.p:g}")
        return self


def v0_value(alpha, convention="normalized"):
    """Constant making conj(Re w) = Im w + v0; 2 pi times larger unnormalized."""
    value = np.sin(np.pi * alpha / 2)
    return value if convention == "normalized" else 2 * np.pi * value


def _tan_power(theta, alpha):
    with np.errstate(divide="ignore", over="ignore"):
        return np.abs(np.tan(np.asarray(theta, dtype=float) / 2)) ** (alpha - 1)


def re_w(theta, alpha):
    negative = -_tan_power(theta, alpha) * np.sin(np.pi * alpha)
    return np.where(np.asarray(theta) < 0, negative, 0.0)


def im_w(theta, alpha):
    t = _tan_power(theta, alpha)
    return np.where(np.asarray(theta) < 0, t * np.cos(np.pi * alpha), -t)


class ScalarFamily:
    """
    f = |theta|^tau on (-pi, 0), theta^{-1/(p+beta)} on (0, pi);
    g = f exp(h) with h = eps Re w, h~ = eps (Im w + v0).

    g+ = f+ exp((h + i h~) / 2), so ||f+ - g+||^2 is the mean of
    f |1 - exp((h + i h~) / 2)|^2 and needs no second factorization.
    """

    def __init__(self, params: ScalarFamilyParams):
        self.params = params
        self.v0 = v0_value(params.alpha, params.v0_convention)

    def f(self, theta):
        theta = np.asarray(theta, dtype=float)
        magnitude = np.abs(theta)
        with np.errstate(divide="ignore"):
            return np.where(
                theta < 0,
                magnitude**self.params.tau,
                magnitude ** (-1 / (self.params.p + self.params.beta)),
            )

    def h(self, theta):
        return self.params.eps * re_w(theta, self.params.alpha)

    def h_tilde(self, theta):
        return self.params.eps * (im_w(theta, self.params.alpha) + self.v0)

    def g(self, theta):
        return self.f(theta) * np.exp(self.h(theta))

    def interval(self):
        """I_eps, the arc in (0, pi) where cos(h~ / 2) <= 0."""
        a, eps, v0 = self.params.alpha, self.params.eps, self.v0

        def endpoint(level):
            scaled = (level + eps * v0) ** (1 / (a - 1)) * eps ** (1 / (1 - a))
            return 2 * np.arctan(scaled)

        return endpoint(3 * np.pi), endpoint(np.pi)

    def log_distance(self):
        """||log f - log g||_1 = eps ||Re w||_1 = eps cos(pi alpha / 2)."""
        return self.params.eps * np.cos(np.pi * self.params.alpha / 2)

    def mean_log_f(self):
        p, beta, tau = self.params.p, self.params.beta, self.params.tau
        return 0.5 * (np.log(np.pi) - 1) * (tau - 1 / (p + beta))

    def lp_norm_f(self, q=None):
        """Closed-form ||f||_{L_q} (q defaults to p)."""
        q = q or self.params.p
        s = 1 / (self.params.p + self.params.beta)
        if q * s >= 1:
            return np.inf
        tau = self.params.tau
        negative_side = np.pi ** (tau * q + 1) / (tau * q + 1)
        positive_side = np.pi ** (1 - q * s) / (1 - q * s)
        total = negative_side + positive_side
        return (total / (2 * np.pi)) ** (1 / q)

    def _quadrature(self, integrand, quadrature, phase=None, averaged=None):
        def evaluate(order):
            return float(
                np.real(
                    graded_mean(
                        integrand,
                        (0.0,),
                        order=order,
                        ratio=quadrature.ratio,
                        floor=quadrature.floor,
                        max_subpanels=quadrature.max_subpanels,
                        phase=phase,
                        averaged=averaged,
                    )
                )
            )

        value, trace = refine_until_stable(
            evaluate,
            quadrature.refinement_orders,
            rtol=quadrature.rtol,
            atol=quadrature.atol,
        )
        logger.debug("quadrature trace: %s", trace)
        return value

    def lhs(self, quadrature=None):
        """||f+ - g+||^2 by graded quadrature with oscillation averaging."""
        quadrature = quadrature or QuadratureSettings()

        def integrand(theta):
            exponent = 0.5 * (self.h(theta) + 1j * self.h_tilde(theta))
            return self.f(theta) * np.abs(np.expm1(exponent)) ** 2

        def averaged(theta):
            return self.f(theta) * (1 + np.exp(self.h(theta)))

        return self._quadrature(
            integrand,
            quadrature,
            phase=lambda theta: 0.5 * self.h_tilde(theta),
            averaged=averaged,
        )

    def distance(self, quadrature=None):
        """||f - g||_1, supported on (-pi, 0) where h < 0."""
        quadrature = quadrature or QuadratureSettings()

        def integrand(theta):
            return np.where(theta < 0, -self.f(theta) * np.expm1(self.h(theta)), 0.0)

        return self._quadrature(integrand, quadrature)

    def statistics(self, quadrature=None):
        """PairStatistics for the scalar estimates with p0 = p."""
        p = self.params.p
        q = p / (p - 1)
        fp = self.lp_norm_f()
        return PairStatistics(
            n=1,
            d1=self.distance(quadrature),
            dlogdet=self.log_distance(),
            fp0=fp,
            f_inf=np.inf,
            p0=p,
            f_psi0=q ** (1 / q) * fp,
        )

    def sample(self, grid):
        nodes = grid.nodes
        return tuple(
            SampledScalarFunction(grid, func(nodes))
            for func in (self.f, self.g, self.h, self.h_tilde)
        )


def scalar_family(params, grid=None):
    """(f, g, h, h~) sampled on ``grid`` (default grid when omitted)."""
    return ScalarFamily(params).sample(grid or CircleGrid.default())


def select_v0_convention(grid=None, alpha=0.5):
    """
    Decide between the normalized and unnormalized v0 by conjugating Re w on
    the grid at a resolvable alpha and comparing conj(Re w) - Im w away from
    the singular point.
    """
    grid = grid or CircleGrid(2**14)
    nodes = grid.nodes
    real_part = SampledScalarFunction(grid, re_w(nodes, alpha))
    offset_samples = conjugate_function(real_part).real - im_w(nodes, alpha)
    away = (np.abs(nodes) >= 0.5) & (np.abs(nodes) <= 2.5)
    offset = float(np.median(offset_samples[away]))
    candidates = {
        name: v0_value(alpha, name) for name in ("normalized", "unnormalized")
    }
    convention = min(candidates, key=lambda name: abs(candidates[name] - offset))
    result = {
        "convention": convention,
        "alpha": alpha,
        "offset": offset,
        "candidates": candidates,
        "deviation": float(
            np.max(np.abs(offset_samples[away] - candidates[convention]))
        ),
    }
    logger.info("v0 convention: %s (offset %.6g)", convention, offset)
    return result


def loglog_fit(x, y):
    """Slope and intercept of log y against log x over the positive pairs."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(keep) < 2:
        return None
    model = LinearRegression().fit(np.log(x[keep]).reshape(-1, 1), np.log(y[keep]))
    return {
        "slope": float(model.coef_[0]),
        "intercept": float(model.intercept_),
        "points": int(keep.sum()),
    }


def onset_eps(eps_values, flags):
    """Largest eps from which a check holds at every smaller eps, or None."""
    for k in range(len(flags)):
        if all(flags[k:]):
            return eps_values[k]
    return None


def gamma_divergence_check(
    params,
    eps_sequence=DEFAULT_EPS_SEQUENCE,
    quadrature=None,
    min_growth=1.0,
    max_band=3.0,
):
    """
    r_k = ||f+ - g_k+||^2 / ||log f - log g_k||_1^gamma along decreasing eps_k.

    Returns:
        dict with the table, per-step growth, the fitted log-log slope of r
        against eps, the predicted per-decade factor 10^{gamma - gamma_eff}
        and the onset eps from which every step grows by min_growth.
        Above the critical gamma = (p - 1) / p the ratio must diverge; at it
        the ratio must stay within a max_band factor band (``holds``).
    """
    quadrature = quadrature or QuadratureSettings()
    eps_sequence = sorted(eps_sequence, reverse=True)
    exponent = (params.tau + 1) / (params.tau + 2 - params.alpha)
    rows = []
    for eps in eps_sequence:
        family = ScalarFamily(params.model_copy(update={"eps": eps}))
        lhs = family.lhs(quadrature)
        dlog = family.log_distance()
        d1 = family.distance(quadrature)
        left, right = family.interval()
        rows.append(
            {
                "eps": eps,
                "lhs": lhs,
                "dlog": dlog,
                "d1": d1,
                "ratio": lhs / dlog**params.gamma,
                "interval_length": right - left,
                "interval_constant": (right - left)
                / eps ** (1 / (1 - params.alpha)),
                "distance_constant": d1 / eps**exponent,
            }
        )
        logger.info("gamma check eps=%g: ratio %.6g", eps, rows[-1]["ratio"])

    ratios = np.array([row["ratio"] for row in rows])
    growth = ratios[1:] / ratios[:-1] if len(ratios) > 1 else np.array([])
    # onset over the steps: step k compares eps_k with eps_{k+1}
    onset = onset_eps(eps_sequence, list(growth >= min_growth))
    fit = loglog_fit(eps_sequence, ratios)
    slope = fit["slope"] if fit else np.nan
    decades = np.log10(eps_sequence[0] / eps_sequence[-1]) if len(rows) > 1 else 0.0
    band = float(ratios.max() / ratios.min()) if len(rows) else np.nan
    diverges = bool(onset is not None and slope < 0)
    bounded = bool(band <= max_band)
    critical = bool(np.isclose(params.gamma, (params.p - 1) / params.p))
    return {
        "params": params.model_dump(),
        "rows": rows,
        "growth": growth.tolist(),
        "min_growth": min_growth,
        "onset_eps": onset,
        "slope": slope,
        "intercept": fit["intercept"] if fit else np.nan,
        "observed_decade_factor": float(10 ** (-slope)) if fit else np.nan,
        "predicted_decade_factor": float(
            10 ** (params.gamma - params.gamma_effective)
        ),
        "band": band,
        "max_band": max_band,
        "decades": float(decades),
        "diverges": diverges,
        "bounded": bounded,
        "expectation": "bounded" if critical else "diverges",
        "holds": bounded if critical else diverges,
    }


BUILTIN_DENSITIES = ("const-spd", "cos", "trig", "ex1", "ex2")


def random_trig_density(rng, grid, n=2, degree=4, floor=0.1):
    """P P* + floor * I for a random matrix trigonometric polynomial P of ``degree``."""
    coefficients = rng.standard_normal((degree + 1, n, n)) + 1j * rng.standard_normal(
        (degree + 1, n, n)
    )
    coefficients /= np.sqrt(degree + 1)
    harmonics = np.exp(1j * np.outer(grid.nodes, np.arange(degree + 1)))
    P = np.einsum("jk,kab->jab", harmonics, coefficients)
    values = P @ np.conj(P.swapaxes(1, 2)) + floor * np.eye(n)
    return SampledMatrixFunction(grid, values)


def builtin_density(name, grid=None, eps=1e-3, p1=2.0, seed=0, n=2, degree=4):
    """
    A named density and the parameters that regenerate it.

    Returns:
        (SampledMatrixFunction, params dict)
    """
    if name in ("ex1", "ex2"):
        pair = example1_pair(Example1Params(p1=p1, eps=eps, variant=name), grid)
        return pair.F, pair.params
    grid = grid or CircleGrid(2**12)
    if name == "const-spd":
        density = SampledMatrixFunction.constant(grid, [[2.0, 0.5], [0.5, 1.0]])
        return density, {"N": grid.size}
    if name == "cos":
        values = 1.25 - np.cos(grid.nodes)
        return SampledMatrixFunction(grid, values), {"N": grid.size}
    if name == "trig":
        rng = np.random.default_rng(seed)
        density = random_trig_density(rng, grid, n=n, degree=degree)
        return density, {"N": grid.size, "seed": seed, "n": n, "degree": degree}
    raise ValueError(
        f"Unknown builtin density {name!r}; choose from {BUILTIN_DENSITIES}."
    )
