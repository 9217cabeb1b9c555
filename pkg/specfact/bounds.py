"""
Constants and right-hand sides of the continuity estimates for spectral factors.

Every evaluator takes a PairStatistics record and returns the bound on
||G+ - F+||^2_{H_2}.  Terms of the form |log d|^{-a} or |log d| * d^b are
extended by their limits at d = 0, so identical pairs always give 0.
"""

import logging
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad

from specfact.circle import lp_norm, power_mean
from specfact.config import (
    MATRIX_ORLICZ_THEOREMS,
    MATRIX_POWER_THEOREMS,
    SCALAR_THEOREMS,
)
from specfact.errors import MissingStatisticError, NuFunctionError, PreconditionError
from specfact.orlicz import (
    OrliczPair,
    lambda_phi,
    luxemburg_norm,
    power_nfunction,
    r_psi,
)

logger = logging.getLogger(__name__)

SERIES_TERMS = 100_000
THM14_MAX_DISTANCE = np.exp(-4.0)


def sine_integral_pi():
    si_pi, _ = quad(lambda x: np.sinc(x / np.pi), 0, np.pi, epsabs=1e-14, epsrel=1e-13)
    return si_pi


@lru_cache(maxsize=1)
def kolmogorov_constants():
    """
    K = (1 + 3^-2 + 5^-2 + ...) / (1 - 3^-2 + 5^-2 - ...) and K0 = (K/2) Si(pi).

    Both series are summed directly over SERIES_TERMS terms and closed with
    Euler-Maclaurin (resp. Boole) tail corrections.
    """
    m = SERIES_TERMS
    odd = 2.0 * np.arange(m) + 1
    terms = odd**-2.0
    tail_point = 2.0 * m + 1
    positive = np.sum(terms) + (
        1 / (2 * tail_point) + 1 / (2 * tail_point**2) + 1 / (3 * tail_point**3)
    )
    signs = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    alternating = np.sum(signs * terms) + (-1) ** m * (
        1 / (2 * tail_point**2) + 1 / tail_point**3
    )
    K = positive / alternating
    K0 = 0.5 * K * sine_integral_pi()
    return float(K), float(K0)


def conjugate_exponent(p):
    if p <= 1:
        raise ValueError(f"exponent must exceed 1, got {p}.")
    return p / (p - 1)


def c_constant(p0):
    """c(p0) = 2^{(p0+1)/p0} K0^{1/q0}."""
    q0 = conjugate_exponent(p0)
    _, K0 = kolmogorov_constants()
    return 2 ** ((p0 + 1) / p0) * K0 ** (1 / q0)


def theorem12_constant(p):
    """C(p) = 2^{(p+1)/p} (5p / (4(p-1)))^{(p-1)/p}."""
    conjugate_exponent(p)
    return 2 ** ((p + 1) / p) * (5 * p / (4 * (p - 1))) ** ((p - 1) / p)


def _power(base, exponent):
    """base ** exponent extended to base in {0, inf}."""
    if base == 0:
        return 0.0 if exponent > 0 else (1.0 if exponent == 0 else np.inf)
    if np.isinf(base):
        return np.inf if exponent > 0 else (1.0 if exponent == 0 else 0.0)
    return float(base) ** exponent


def _abs_log(x):
    return np.inf if x == 0 else abs(float(np.log(x)))


def _mul(*factors):
    """Product with 0 * inf = 0 (limits of vanishing coefficients)."""
    if any(f == 0 for f in factors):
        return 0.0
    return float(np.prod(factors))


@dataclass
class PairStatistics:
    """Norms of F and of the perturbation G - F feeding the bounds."""

    n: int = 1
    d1: Optional[float] = None
    dlogdet: Optional[float] = None
    dlogplus: Optional[float] = None
    fp0: Optional[float] = None
    f_inf: Optional[float] = None
    ellp1: Optional[float] = None
    ell_inf: Optional[float] = None
    qfp1: Optional[float] = None
    p0: float = 2.0
    p1: float = 2.0
    alpha: float = 0.5
    f_psi0: Optional[float] = None
    ell_psi1: Optional[float] = None
    pi_psi1: Optional[float] = None
    min_eigenvalue: Optional[float] = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def require(self, kind, names):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise MissingStatisticError(f"{kind} needs statistics {missing}.")
        negative = [name for name in names if getattr(self, name) < 0]
        if negative:
            raise ValueError(f"statistics {negative} must be nonnegative.")


REQUIRED_STATISTICS = {
    "thm1.2": ("d1", "dlogdet", "fp0"),
    "thm2.2": ("d1", "dlogdet", "f_psi0"),
    "thm2.3": ("d1", "dlogdet", "f_inf"),
    "thm1.3": ("d1", "dlogdet", "dlogplus", "fp0", "ellp1"),
    "thm1.3-inf": ("d1", "dlogdet", "dlogplus", "f_inf", "ellp1"),
    "thm1.4": ("d1", "dlogdet", "dlogplus", "fp0", "qfp1"),
    "thm1.4-inf": ("d1", "dlogdet", "dlogplus", "f_inf", "qfp1"),
    "thm1.5": ("d1", "dlogdet", "f_inf", "ell_inf"),
    "thm3.1": ("d1", "dlogdet", "dlogplus", "f_psi0", "ell_psi1"),
    "thm3.2": ("d1", "dlogdet", "dlogplus", "f_psi0", "pi_psi1"),
    "thm3.3": ("d1", "dlogdet", "dlogplus", "f_psi0", "ell_inf"),
}


def check_preconditions(kind, stats):
    """Distance gates of the power-form matrix estimates."""
    if kind in ("thm1.3", "thm1.3-inf") and stats.d1 > 1:
        raise PreconditionError(
            f"{kind} requires ||G - F||_L1 <= 1, got {stats.d1:.6g}.",
            condition="||G - F||_L1 <= 1",
        )
    if kind in ("thm1.4", "thm1.4-inf") and stats.d1 > THM14_MAX_DISTANCE:
        raise PreconditionError(
            f"{kind} requires ||G - F||_L1 <= e^-4, got {stats.d1:.6g}.",
            condition="||G - F||_L1 <= e^-4",
        )


def _lambda_term(phi, s):
    return 0.0 if s == 0 else lambda_phi(phi, s)


def rhs_scalar(kind, stats, pair0=None):
    """
    Right-hand side of a scalar estimate.

    Args:
        kind: "thm1.2", "thm2.2" or "thm2.3"
        stats: PairStatistics with n = 1; p0 plays the role of p
        pair0: OrliczPair for thm2.2 (defaults to the power pair with p0)

    Returns:
        float, possibly +inf
    """
    if kind not in SCALAR_THEOREMS:
        raise ValueError(f"{kind!r} is not a scalar estimate.")
    stats.require(kind, REQUIRED_STATISTICS[kind])
    d1, dlog = stats.d1, stats.dlogdet
    _, K0 = kolmogorov_constants()

    if kind == "thm1.2":
        p = stats.p0
        return 2 * d1 + _mul(
            theorem12_constant(p), stats.fp0, _power(dlog, (p - 1) / p)
        )
    if kind == "thm2.2":
        pair0 = pair0 or OrliczPair.power(stats.p0)
        return 2 * d1 + _mul(4, stats.f_psi0, _lambda_term(pair0.phi, 0.5 * K0 * dlog))
    return 2 * d1 + _mul(2 * K0, stats.f_inf, dlog)


def rhs_matrix_power(kind, stats):
    """
    Right-hand side of the power-form matrix estimates.

    Raises:
        PreconditionError: thm1.3 with d1 > 1, thm1.4 with d1 > e^-4
        MissingStatisticError: when a statistic the kind uses is absent
    """
    if kind not in MATRIX_POWER_THEOREMS:
        raise ValueError(f"{kind!r} is not a power-form matrix estimate.")
    stats.require(kind, REQUIRED_STATISTICS[kind])
    check_preconditions(kind, stats)

    n, d1, p0, p1, alpha = stats.n, stats.d1, stats.p0, stats.p1, stats.alpha
    _, K0 = kolmogorov_constants()
    abs_log_d1 = _abs_log(d1)

    if kind == "thm1.5":
        return _mul(
            stats.f_inf, n * _mul(np.exp(stats.ell_inf), d1) + stats.dlogdet
        )

    if kind in ("thm1.3", "thm1.3-inf"):
        inner = (
            3 * n * _power(d1, 1 - alpha)
            + _mul(
                2 * (n + 1) * alpha ** (1 - p1) * p1,
                _power(stats.ellp1, p1),
                _power(abs_log_d1, 1 - p1),
            )
            + stats.dlogdet
        )
    else:
        coefficient = 4 * (n + 1) * _power(stats.qfp1, 2 * p1) / (p1 + 1)
        inner = (
            _mul(3 * n, _power(d1, p1 / (p1 + 1)))
            + _mul(coefficient, abs_log_d1, _power(d1, p1 / (p1 + 1)))
            + stats.dlogdet
        )

    if kind.endswith("-inf"):
        return 4 * d1 + _mul(4 * max(stats.f_inf, 1.0), K0 * stats.dlogplus + inner)

    q0 = conjugate_exponent(p0)
    bracket = _mul(c_constant(p0), _power(stats.dlogplus, 1 / q0)) + _mul(
        2 * (2 * p0) ** (1 / p0), _power(inner, 1 / q0)
    )
    return 4 * d1 + _mul(2 * q0 ** (1 / q0) * (stats.fp0 + 1), bracket)


@dataclass(frozen=True)
class NuFunction:
    """
    Nondecreasing nu : [0, inf) -> [0, 1] with nu(t) -> 0 and t / nu(t) -> 0.

    kinds: "power" min(t^alpha, 1); "root" min(1, t^{1/(p1+1)});
    "tabulated" log-log interpolation of (knots, values).
    """

    kind: str
    alpha: Optional[float] = None
    p1: Optional[float] = None
    knots: tuple = ()
    values: tuple = ()

    @classmethod
    def power(cls, alpha):
        return cls("power", alpha=alpha)

    @classmethod
    def root(cls, p1):
        return cls("root", p1=p1)

    @classmethod
    def tabulated(cls, knots, values):
        return cls(
            "tabulated",
            knots=tuple(map(float, knots)),
            values=tuple(map(float, values)),
        )

    @classmethod
    def from_descriptor(cls, descriptor):
        kind = descriptor.get("kind")
        if kind == "power":
            return cls.power(float(descriptor["alpha"]))
        if kind == "root":
            return cls.root(float(descriptor["p1"]))
        if kind == "tabulated":
            return cls.tabulated(descriptor["knots"], descriptor["values"])
        raise NuFunctionError(f"Unknown nu kind {kind!r}.")

    def descriptor(self):
        if self.kind == "power":
            return {"kind": "power", "alpha": self.alpha}
        if self.kind == "root":
            return {"kind": "root", "p1": self.p1}
        return {
            "kind": "tabulated",
            "knots": list(self.knots),
            "values": list(self.values),
        }

    def __call__(self, t):
        if t <= 0:
            return 0.0
        if self.kind == "power":
            return min(t**self.alpha, 1.0)
        if self.kind == "root":
            return min(1.0, t ** (1 / (self.p1 + 1)))
        log_t = np.log(np.asarray(self.knots))
        log_v = np.log(np.asarray(self.values))
        x = np.log(t)
        if x <= log_t[0]:
            slope = (log_v[1] - log_v[0]) / (log_t[1] - log_t[0])
            return float(min(1.0, np.exp(log_v[0] + slope * (x - log_t[0]))))
        return float(min(1.0, np.exp(np.interp(x, log_t, log_v))))

    def validate(self, decades=12):
        """
        Check monotonicity, range and the two limits on t = 10^-1 ... 10^-decades.

        Raises:
            NuFunctionError: if any check fails
        """
        if self.kind == "tabulated":
            knots, values = np.asarray(self.knots), np.asarray(self.values)
            if len(knots) < 2 or np.any(np.diff(knots) <= 0) or np.any(knots <= 0):
                raise NuFunctionError(
                    "tabulated nu needs >= 2 increasing positive knots"
                )
            if np.any(values <= 0):
                raise NuFunctionError("tabulated nu values must be positive")
        elif self.kind == "power" and not (self.alpha and 0 < self.alpha < 1):
            raise NuFunctionError(f"power nu needs alpha in (0, 1), got {self.alpha}")
        elif self.kind == "root" and not (self.p1 and self.p1 > 1):
            raise NuFunctionError(f"root nu needs p1 > 1, got {self.p1}")

        grid = 10.0 ** -np.arange(decades, -1, -1)
        nu = np.array([self(t) for t in grid])
        if np.any(nu < 0) or np.any(nu > 1):
            raise NuFunctionError("nu must take values in [0, 1]")
        if np.any(np.diff(nu) < 0):
            raise NuFunctionError("nu must be nondecreasing")
        small = grid[:-1]
        if not np.all(np.diff(nu[:-1]) > 0):
            raise NuFunctionError("nu(t) does not decrease toward 0 as t -> 0+")
        ratio = small / nu[:-1]
        if not np.all(np.diff(ratio) > 0):
            raise NuFunctionError("t / nu(t) does not decrease toward 0 as t -> 0+")
        return self


def _log_nu_term(abs_log_nu, scale, psi1):
    """|log nu| / Psi_1(|log nu| / scale) with its limits at 0 and inf."""
    if scale == 0 or np.isinf(abs_log_nu):
        return 0.0
    if abs_log_nu == 0:
        return np.inf
    denominator = float(psi1(abs_log_nu / scale))
    if np.isinf(denominator):
        return 0.0
    return abs_log_nu / denominator


def _distance_over_nu(d1, nu):
    if d1 == 0:
        return 0.0
    return d1 / nu(d1)


def rhs_matrix_orlicz(kind, stats, pair0, pair1=None, nu=None):
    """
    Right-hand side of the Orlicz-form matrix estimates.

    Args:
        kind: "thm3.1", "thm3.2" or "thm3.3"
        stats: PairStatistics with f_psi0 (||F||_{Psi_0}) and ell_psi1,
            pi_psi1 or ell_inf as the kind requires
        pair0: OrliczPair (Phi_0, Psi_0)
        pair1: OrliczPair (Phi_1, Psi_1), needed by thm3.1 and thm3.2
        nu: NuFunction, needed by thm3.1 and thm3.2

    Returns:
        float, possibly +inf
    """
    if kind not in MATRIX_ORLICZ_THEOREMS:
        raise ValueError(f"{kind!r} is not an Orlicz-form matrix estimate.")
    stats.require(kind, REQUIRED_STATISTICS[kind])
    if kind != "thm3.3":
        if pair1 is None or nu is None:
            raise MissingStatisticError(f"{kind} needs a second Orlicz pair and nu.")
        nu.validate()

    n, d1 = stats.n, stats.d1
    _, K0 = kolmogorov_constants()

    if kind == "thm3.3":
        argument = (2 * np.exp(stats.ell_inf) + 1) * n * d1 + stats.dlogdet
    else:
        abs_log_nu = _abs_log(nu(d1))
        scale = stats.ell_psi1 if kind == "thm3.1" else 1.0
        log_term = _log_nu_term(abs_log_nu, scale, pair1.psi)
        if kind == "thm3.2":
            log_term = _mul(stats.pi_psi1, log_term)
        argument = (
            6 * n * _distance_over_nu(d1, nu)
            + _mul(4 * (n + 1), log_term)
            + 2 * stats.dlogdet
        )

    if argument == 0:
        r_term = 0.0
    elif np.isinf(argument):
        r_term = np.inf
    else:
        r_term = r_psi(pair0.psi, argument)
    bracket = 4 * _lambda_term(pair0.phi, 0.5 * K0 * stats.dlogplus) + r_term
    return 4 * d1 + _mul(2 * (stats.f_psi0 + float(pair0.phi.inv(1.0))), bracket)


def evaluate_rhs(kind, stats, pair0=None, pair1=None, nu=None):
    """Dispatch on the theorem id."""
    if kind in SCALAR_THEOREMS:
        return rhs_scalar(kind, stats, pair0)
    if kind in MATRIX_POWER_THEOREMS:
        return rhs_matrix_power(kind, stats)
    if kind in MATRIX_ORLICZ_THEOREMS:
        return rhs_matrix_orlicz(kind, stats, pair0, pair1, nu)
    raise ValueError(f"Unknown theorem id {kind!r}.")


def default_orlicz_setup(kind, stats):
    """The pairs and nu under which the Orlicz forms reduce to the power forms."""
    pair0 = OrliczPair.power(stats.p0)
    if kind == "thm3.2":
        return pair0, OrliczPair.exponential(stats.p1), NuFunction.root(stats.p1)
    return pair0, OrliczPair.power(stats.p1), NuFunction.power(stats.alpha)


def projection_estimate(Fp, Gp, at_zero_F, at_zero_G, d1, eta, bound):
    """
    Both sides of the projection estimate with the projection equal to I.

    Args:
        Fp, Gp: normalized spectral factors (SampledMatrixFunction)
        at_zero_F, at_zero_G: their values at 0
        d1: ||G - F||_{L_1}
        eta: lower bound with F >= eta
        bound: ess-sup ||F|| (so that the spectral projection is the identity)

    Returns:
        (lhs, rhs) with lhs = ||G+ - F+||^2_{L_2}
    """
    if not 0 < eta <= bound:
        raise ValueError(f"need 0 < eta <= bound, got eta={eta}, bound={bound}")
    n = Fp.dim
    lhs = lp_norm(Gp - Fp, 2) ** 2
    _, logdet_F = np.linalg.slogdet(at_zero_F)
    _, logdet_G = np.linalg.slogdet(at_zero_G)
    ratio = np.exp((logdet_G - logdet_F) / n)
    rhs = bound * n * (d1 / eta + 2 * (1 - ratio))
    return float(lhs), float(rhs)


def orlicz_reduction_discrepancy(ell, p1):
    """
    Compare ||ell||_(Psi_1) for Psi_1 = t^p1 / p1 with ||ell||_{L_p1}.

    Returns:
        dict with both norms, their ratio and the exact value p1^{-1/p1}
    """
    values = np.abs(ell.values if hasattr(ell, "values") else np.asarray(ell))
    luxemburg = luxemburg_norm(values, power_nfunction(p1))
    lp = power_mean(values, p1)
    return {
        "luxemburg": luxemburg,
        "lp": lp,
        "ratio": luxemburg / lp if lp else np.nan,
        "expected_ratio": p1 ** (-1 / p1),
    }
