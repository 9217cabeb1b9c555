"""
N-function pairs on the circle with normalized measure, and the Orlicz-norm
quantities consumed by the bound evaluators.

An N-function is stored through its values on [0, inf); closed-form inverses
and derivatives are optional, and bisection / forward differences stand in
for whatever is missing.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from specfact.circle import power_mean
from utils.expressions import evaluate_on_samples

logger = logging.getLogger(__name__)

OVERFLOW = 1e300
LUXEMBURG_BRACKET = (1e-12, 1e12)
LUXEMBURG_ITERATIONS = 200
LUXEMBURG_RTOL = 1e-10
SERIES_CUTOFF = 1e-4


def _samples(f):
    values = f.values if hasattr(f, "values") else np.asarray(f)
    return np.abs(np.asarray(values))


def _overflow_to_inf(values):
    values = np.asarray(values, dtype=float)
    return np.where(values > OVERFLOW, np.inf, values)


def bisect_inverse(func, y, max_doublings=1100, iterations=64):
    """
    Smallest x >= 0 with func(x) >= y for a nondecreasing func, elementwise.

    Brackets geometrically first so that tiny and huge targets keep full
    relative precision.
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    result = np.zeros_like(y)
    active = (y > 0) & np.isfinite(y)
    result[np.isinf(y) & (y > 0)] = np.inf
    if not np.any(active):
        return float(result[0]) if scalar else result

    target = y[active]
    hi = np.ones_like(target)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_doublings):
            grow = func(hi) < target
            if not np.any(grow):
                break
            hi = np.where(grow, 2 * hi, hi)
        for _ in range(max_doublings):
            shrink = (func(hi / 2) >= target) & (hi > 1e-300)
            if not np.any(shrink):
                break
            hi = np.where(shrink, hi / 2, hi)
        lo = hi / 2
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            below = func(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)

    result[active] = hi
    return float(result[0]) if scalar else result


def forward_difference(func, x):
    """Right derivative by a forward difference with step 1e-7 * max(1, x)."""
    x = np.asarray(x, dtype=float)
    step = 1e-7 * np.maximum(1.0, x)
    return (func(x + step) - func(x)) / step


@dataclass(frozen=True)
class NFunction:
    """
    An N-function Phi(x) = integral of its density over [0, |x|].

    ``func`` receives nonnegative arrays; ``derivative`` and ``inverse`` are
    optional closed forms.
    """

    name: str
    func: Callable
    derivative: Optional[Callable] = None
    inverse: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        with np.errstate(over="ignore"):
            return _overflow_to_inf(self.func(np.abs(np.asarray(x, dtype=float))))

    def inv(self, y):
        if self.inverse is not None:
            y = np.asarray(y, dtype=float)
            out = self.inverse(np.maximum(y, 0.0))
            return float(out) if np.ndim(out) == 0 else out
        return bisect_inverse(self, y)

    def deriv(self, x):
        if self.derivative is not None:
            return self.derivative(np.abs(np.asarray(x, dtype=float)))
        return forward_difference(self, np.abs(np.asarray(x, dtype=float)))

    def generic(self):
        """The same N-function with closed-form inverse and derivative removed."""
        return replace(self, derivative=None, inverse=None)


def power_nfunction(p):
    """t^p / p."""
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}.")
    return NFunction(
        name=f"power({p:g})",
        func=lambda t: t**p / p,
        derivative=lambda t: t ** (p - 1),
        inverse=lambda y: (p * y) ** (1.0 / p),
        params={"kind": "power", "p": p},
    )


def _exp_minus_linear(x):
    """e^x - x - 1 without cancellation near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_CUTOFF
    with np.errstate(over="ignore"):
        direct = np.expm1(x) - x
    series = x**2 / 2 + x**3 / 6 + x**4 / 24
    return np.where(small, series, direct)


def exponential_nfunction(p1):
    """Psi_1(t) = e^{p1 t} - p1 t - 1."""
    if p1 <= 1:
        raise ValueError(f"p1 must exceed 1, got {p1}.")
    return NFunction(
        name=f"exp({p1:g})",
        func=lambda t: _exp_minus_linear(p1 * t),
        derivative=lambda t: p1 * np.expm1(p1 * t),
        params={"kind": "exp", "p1": p1},
    )


def _entropy_like(y):
    """(1 + y) log(1 + y) - y without cancellation near zero."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < SERIES_CUTOFF
    direct = (1 + y) * np.log1p(y) - y
    series = y**2 / 2 - y**3 / 6 + y**4 / 12
    return np.where(small, series, direct)


def exponential_complement(p1):
    """Complement of e^{p1 t} - p1 t - 1: (1 + y) log(1 + y) - y with y = x / p1."""
    return NFunction(
        name=f"exp-complement({p1:g})",
        func=lambda x: _entropy_like(x / p1),
        derivative=lambda x: np.log1p(x / p1) / p1,
        params={"kind": "exp-complement", "p1": p1},
    )


def piecewise_linear_nfunction(knots, densities, name="custom"):
    """
    N-function whose density is the piecewise-linear interpolant of
    (knots, densities), continued beyond the last knot with the last slope.

    Raises:
        ValueError: unless knots start at 0, densities start at 0 and both
            are strictly increasing
    """
    xs = np.asarray(knots, dtype=float)
    us = np.asarray(densities, dtype=float)
    if xs.ndim != 1 or xs.shape != us.shape or len(xs) < 2:
        raise ValueError("knots and densities must be 1-d arrays of equal length >= 2")
    if xs[0] != 0 or us[0] != 0:
        raise ValueError("the density must start at u(0) = 0")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(us) <= 0):
        raise ValueError("knots and densities must be strictly increasing")

    slopes = np.diff(us) / np.diff(xs)
    slopes = np.append(slopes, slopes[-1])
    areas = 0.5 * (us[:-1] + us[1:]) * np.diff(xs)
    cumulative = np.concatenate([[0.0], np.cumsum(areas)])

    def locate(x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 1)
        return x, idx, x - xs[idx]

    def density(x):
        x, idx, offset = locate(x)
        return us[idx] + slopes[idx] * offset

    def func(x):
        x, idx, offset = locate(x)
        return cumulative[idx] + us[idx] * offset + 0.5 * slopes[idx] * offset**2

    return NFunction(
        name=name,
        func=func,
        derivative=density,
        params={"kind": "custom", "knots": xs.tolist(), "densities": us.tolist()},
    )


@dataclass(frozen=True)
class OrliczPair:
    """Mutually complementary N-functions (phi, psi) with a kind tag."""

    phi: NFunction
    psi: NFunction
    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def power(cls, p):
        """Psi(t) = t^p / p, Phi(t) = t^q / q with q = p / (p - 1)."""
        q = p / (p - 1)
        return cls(power_nfunction(q), power_nfunction(p), "power", {"p": p})

    @classmethod
    def exponential(cls, p1):
        """Psi_1(t) = e^{p1 t} - p1 t - 1 with its closed-form complement."""
        return cls(
            exponential_complement(p1), exponential_nfunction(p1), "exp", {"p1": p1}
        )

    @classmethod
    def custom(cls, knots, densities):
        """Phi from a tabulated density u; Psi from the inverse density."""
        phi = piecewise_linear_nfunction(knots, densities, name="custom")
        psi = piecewise_linear_nfunction(densities, knots, name="custom-complement")
        return cls(
            phi,
            psi,
            "custom",
            {
                "knots": list(map(float, knots)),
                "densities": list(map(float, densities)),
            },
        )

    @classmethod
    def from_expression(cls, expression, x_max=50.0, count=2049):
        """Custom pair whose density u(x) is a sandboxed expression in x."""
        knots = np.concatenate([[0.0], np.geomspace(1e-6, x_max, count - 1)])
        densities = evaluate_on_samples(expression, knots)
        pair = cls.custom(knots, densities)
        return replace(
            pair, params={**pair.params, "expression": expression, "x_max": x_max}
        )

    @classmethod
    def from_descriptor(cls, descriptor):
        """Build from {kind: power, p} | {kind: exp, p1} | {kind: custom, ...}."""
        kind = descriptor.get("kind")
        if kind == "power":
            return cls.power(float(descriptor["p"]))
        if kind == "exp":
            return cls.exponential(float(descriptor["p1"]))
        if kind == "custom":
            if "expression" in descriptor:
                return cls.from_expression(
                    descriptor["expression"], float(descriptor.get("x_max", 50.0))
                )
            return cls.custom(descriptor["knots"], descriptor["densities"])
        raise ValueError(f"Unknown Orlicz pair kind {kind!r}.")

    def descriptor(self):
        return {"kind": self.kind, **self.params}


def luxemburg_norm(f, phi):
    """
    inf{kappa > 0 : mean(Phi(|f| / kappa)) <= 1} by geometric bisection.

    Returns 0 for f == 0 and +inf when no kappa <= 1e12 satisfies the
    constraint.
    """
    values = _samples(f).ravel()
    if not np.any(values):
        return 0.0

    def modular(kappa):
        with np.errstate(over="ignore"):
            return float(np.mean(phi(values / kappa)))

    lo, hi = LUXEMBURG_BRACKET
    if modular(hi) > 1:
        return np.inf
    if modular(lo) <= 1:
        return lo
    for _ in range(LUXEMBURG_ITERATIONS):
        mid = np.sqrt(lo * hi)
        if modular(mid) <= 1:
            hi = mid
        else:
            lo = mid
        if hi / lo - 1 <= LUXEMBURG_RTOL:
            break
    logger.debug("luxemburg_norm(%s): bracket [%g, %g]", phi.name, lo, hi)
    return hi


def orlicz_norm_power(f, p):
    """Orlicz norm for Psi(t) = t^p / p: q^{1/q} ||f||_{L_p}."""
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}.")
    q = p / (p - 1)
    return q ** (1 / q) * power_mean(_samples(f), p)


def orlicz_norm_upper(f, pair):
    """
    Upper bound for the Orlicz norm ||f||_Psi of the pair's psi.

    Exact for power pairs; otherwise twice the Luxemburg norm.
    """
    if pair.kind == "power":
        return orlicz_norm_power(f, pair.params["p"])
    return 2 * luxemburg_norm(f, pair.psi)


def lambda_phi(phi, s):
    """
    Lambda_Phi(s) = inf{xi > 0 : Phi'(1/xi) / xi <= 1/s}.

    Bisects t = 1/xi inside [Phi^{-1}(1/s) / 2, Phi^{-1}(1/s)].
    """
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}.")
    anchor = phi.inv(1.0 / s)
    if not np.isfinite(anchor) or anchor == 0:
        return 1.0 / anchor if anchor else np.inf
    target = 1.0 / s

    def load(t):
        return t * phi.deriv(t)

    lo, hi = 0.5 * anchor * (1 - 1e-9), anchor * (1 + 1e-6)
    # forward differences may leave the endpoints slightly off the bracket
    while load(lo) > target and lo > 1e-300:
        lo /= 2
    while load(hi) <= target and hi < 1e300:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if load(mid) <= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 1.0 / lo


def r_psi(psi, tau):
    """R_Psi(tau) = tau * Psi^{-1}(4 / tau)."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}.")
    return tau * psi.inv(4.0 / tau)


def interp_bound(u, pair):
    """||u||_{L_1} * Psi^{-1}(||u||_{L_inf} / ||u||_{L_1}); 0 for u == 0."""
    values = _samples(u)
    l1 = power_mean(values, 1)
    if l1 == 0:
        return 0.0
    return l1 * pair.psi.inv(power_mean(values, np.inf) / l1)


def modular_mean(values, psi):
    """mean(Psi(|values|)), guarded against overflow for the exponential kind."""
    values = np.abs(np.asarray(values, dtype=float)).ravel()
    if psi.params.get("kind") == "exp":
        p1 = psi.params["p1"]
        scaled = p1 * values
        if np.max(scaled, initial=0.0) > 600:
            log_mean_exp = logsumexp(scaled) - np.log(len(scaled))
            if log_mean_exp > np.log(OVERFLOW):
                return np.inf
            return float(np.exp(log_mean_exp) - 1 - np.mean(scaled))
    result = float(np.mean(psi(values)))
    return np.inf if result > OVERFLOW else result


def rho_and_pi(ell, psi1):
    """
    rho = mean(Psi_1(|ell|)) and Pi = ||ell||_(Psi_1) * max(1, rho).

    Overflowing modulars are reported as +inf.
    """
    values = _samples(ell)
    rho = modular_mean(values, psi1)
    lux = luxemburg_norm(values, psi1)
    if lux == 0:
        return rho, 0.0
    return rho, lux * max(1.0, rho)
