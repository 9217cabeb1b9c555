"""
Randomized property suites for the inequalities the estimates are built from.

Each suite draws its cases from ``numpy.random.default_rng(seed)`` and counts
failures instead of raising, so the ``selftest`` command and the unit tests
share one implementation.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from specfact.bounds import (
    NuFunction,
    PairStatistics,
    c_constant,
    orlicz_reduction_discrepancy,
    projection_estimate,
    rhs_matrix_orlicz,
    rhs_matrix_power,
)
from specfact.circle import (
    CircleGrid,
    SampledMatrixFunction,
    SampledScalarFunction,
    lp_norm,
)
from specfact.factorize import scalar_spectral_factor
from specfact.matrix_calc import (
    log_det,
    log_plus,
    matrix_vee,
    normalize_unit_ball,
    operator_norm,
    spd_log,
)
from specfact.orlicz import (
    OrliczPair,
    interp_bound,
    lambda_phi,
    luxemburg_norm,
    orlicz_norm_power,
    r_psi,
)

logger = logging.getLogger(__name__)

DEFAULT_CASES = 1000
RTOL = 1e-9


@dataclass
class SuiteResult:
    name: str
    seed: int
    cases: int = 0
    failures: int = 0
    worst_excess: float = 0.0
    first_failure: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.failures == 0

    def record(self, lhs, rhs, rtol=RTOL, atol=1e-14, **detail):
        """Count the case lhs <= rhs (with tolerance); keep the first failure."""
        self.cases += 1
        excess = lhs - rhs - rtol * abs(rhs) - atol
        if excess > 0 or not (np.isfinite(lhs) or lhs == -np.inf):
            self.failures += 1
            self.worst_excess = max(self.worst_excess, float(excess))
            if not self.first_failure:
                self.first_failure = {"lhs": lhs, "rhs": rhs, **detail}

    def to_dict(self):
        return {
            "name": self.name,
            "seed": self.seed,
            "cases": self.cases,
            "failures": self.failures,
            "passed": self.passed,
            "worst_excess": self.worst_excess,
            "first_failure": self.first_failure,
        }


def random_pair(rng):
    """A power pair or an exponential pair with random exponent."""
    if rng.random() < 0.5:
        return OrliczPair.power(float(rng.uniform(1.1, 6.0)))
    return OrliczPair.exponential(float(rng.uniform(1.1, 5.0)))


def log_uniform(rng, low, high, size=None):
    return np.exp(rng.uniform(np.log(low), np.log(high), size))


def random_unitary(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_hpd(rng, n, low=1e-3, high=10.0):
    """Hermitian positive definite, eigenvalues log-uniform in [low, high]."""
    U = random_unitary(rng, n)
    w = log_uniform(rng, low, high, n)
    return (U * w) @ np.conj(U.T)


def orlicz_relations(rng, cases=DEFAULT_CASES, seed=0):
    """Subadditivity of Phi^-1, monotone Phi(x)/x, the Young-pair sandwich
    x < Phi^-1(x) Psi^-1(x) <= 2x, indicator norms and norm equivalences."""
    suite = SuiteResult("orlicz-relations", seed)
    per_pair = 10
    while suite.cases < cases:
        pair = random_pair(rng)
        phi, psi = pair.phi, pair.psi
        x1, x2 = log_uniform(rng, 1e-3, 1e3, (2, per_pair))
        lhs = phi.inv(x1 + x2)
        rhs = phi.inv(x1) + phi.inv(x2)
        low, high = np.minimum(x1, x2), np.maximum(x1, x2)
        ratio_low = phi(low) / low
        ratio_high = phi(high) / high
        product = phi.inv(x1) * psi.inv(x1)
        label = pair.descriptor()
        for k in range(per_pair):
            suite.record(lhs[k], rhs[k], case="subadditive", pair=label)
            suite.record(
                ratio_low[k], ratio_high[k], rtol=1e-7, case="phi(x)/x", pair=label
            )
            suite.record(
                x1[k], product[k], rtol=-1e-12, atol=0.0, case="x < inv product"
            )
            suite.record(product[k], 2 * x1[k], case="inv product <= 2x")

        size = 64
        k = int(rng.integers(1, size))
        indicator = np.zeros(size)
        indicator[:k] = 1.0
        expected = 1.0 / float(phi.inv(size / k))
        measured = luxemburg_norm(indicator, phi)
        suite.record(
            abs(measured - expected), 1e-8 * expected, rtol=0.0, case="indicator norm"
        )

        f = rng.standard_normal(32) * log_uniform(rng, 1e-2, 1e2)
        suite.record(
            luxemburg_norm(f, phi),
            max(1.0, float(np.mean(phi(np.abs(f))))),
            rtol=1e-8,
            case="norm <= max(1, modular)",
        )
        if pair.kind == "power":
            p = pair.params["p"]
            lux = luxemburg_norm(f, psi)
            orlicz = orlicz_norm_power(f, p)
            suite.record(lux, orlicz, rtol=1e-8, case="luxemburg <= orlicz", p=p)
            suite.record(orlicz, 2 * lux, rtol=1e-8, case="orlicz <= 2 luxemburg", p=p)
    return suite


def holder(rng, cases=DEFAULT_CASES, seed=0):
    """|mean(f g)| <= 2 ||f||_(Psi) ||g||_(Phi)."""
    suite = SuiteResult("holder", seed)
    for _ in range(cases):
        pair = random_pair(rng)
        f = rng.standard_normal(32) * log_uniform(rng, 1e-2, 1e2)
        g = rng.standard_normal(32) * log_uniform(rng, 1e-2, 1e2)
        bound = 2 * luxemburg_norm(f, pair.psi) * luxemburg_norm(g, pair.phi)
        product = abs(float(np.mean(f * g)))
        suite.record(product, bound, rtol=1e-8, pair=pair.descriptor())
    return suite


def lambda_r_sandwich(rng, cases=DEFAULT_CASES, seed=0):
    """1/Phi^-1(1/s) <= Lambda_Phi(s) <= 2/Phi^-1(1/s) and
    Lambda_Phi(t) / 2 < R_Psi(t) <= 8 Lambda_Phi(t)."""
    suite = SuiteResult("lambda-r-sandwich", seed)
    while suite.cases < cases:
        pair = random_pair(rng)
        s = float(log_uniform(rng, 1e-6, 1e6))
        lam = lambda_phi(pair.phi, s)
        anchor = 1.0 / float(pair.phi.inv(1.0 / s))
        label = pair.descriptor()
        suite.record(anchor, lam, rtol=1e-6, case="lower", pair=label, s=s)
        suite.record(lam, 2 * anchor, rtol=1e-6, case="upper", pair=label, s=s)
        r = r_psi(pair.psi, s)
        suite.record(
            0.5 * lam, r, rtol=-1e-12, atol=0.0, case="R lower", pair=label, s=s
        )
        suite.record(r, 8 * lam, rtol=1e-6, case="R upper", pair=label, s=s)
    return suite


def interpolation_lemma(rng, cases=DEFAULT_CASES, seed=0):
    """||u||_(Phi) <= ||u||_1 Psi^-1(||u||_inf / ||u||_1)."""
    suite = SuiteResult("interpolation-lemma", seed)
    for _ in range(cases):
        pair = random_pair(rng)
        size = int(rng.integers(4, 64))
        u = rng.standard_normal(size) * log_uniform(rng, 1e-3, 1e3, size)
        suite.record(
            luxemburg_norm(u, pair.phi),
            interp_bound(u, pair),
            rtol=1e-8,
            pair=pair.descriptor(),
        )
    return suite


def matrix_chain(rng, cases=DEFAULT_CASES, seed=0):
    """
    With B = A v eta:
    ||B - A|| / eta <= ||log B - log A|| <= log det B - log det A.
    """
    suite = SuiteResult("matrix-chain", seed)
    while suite.cases < cases:
        n = int(rng.integers(2, 5))
        A = random_hpd(rng, n)
        eta = float(log_uniform(rng, 1e-3, 10.0))
        raised = matrix_vee(A, eta)
        first = operator_norm(raised - A) / eta
        second = operator_norm(spd_log(raised) - spd_log(A))
        third = float(log_det(raised) - log_det(A))
        suite.record(first, second, rtol=1e-8, atol=1e-12, case="first", n=n, eta=eta)
        suite.record(second, third, rtol=1e-8, atol=1e-12, case="second", n=n, eta=eta)
    return suite


def log_inequality(rng, cases=DEFAULT_CASES, seed=0):
    """-log x >= n (1 - x^{1/n}) on (0, 1]."""
    suite = SuiteResult("log-inequality", seed)
    x = log_uniform(rng, 1e-300, 1.0, cases)
    n = rng.integers(1, 9, cases)
    for xk, nk in zip(x, n):
        lower = nk * (1 - xk ** (1 / nk))
        suite.record(lower, -np.log(xk), rtol=1e-12, x=xk, n=int(nk))
    return suite


def elementary(rng, cases=DEFAULT_CASES, seed=0):
    """|max(1, a) - max(1, b)| <= |a - b| and |log+ a - log+ b| <= |a - b|."""
    suite = SuiteResult("elementary", seed)
    a, b = log_uniform(rng, 1e-3, 1e3, (2, (cases + 1) // 2))
    for ak, bk in zip(a, b):
        gap = abs(ak - bk)
        suite.record(abs(max(1.0, ak) - max(1.0, bk)), gap, case="max", a=ak, b=bk)
        log_gap = abs(float(log_plus(ak) - log_plus(bk)))
        suite.record(log_gap, gap, case="log+", a=ak, b=bk)
    return suite


def normalization_contraction(rng, cases=DEFAULT_CASES, seed=0):
    """||F_1 - G_1|| <= |M_G - M_F| + ||F - G|| <= 2 ||F - G|| node by node."""
    suite = SuiteResult("normalization-contraction", seed)
    grid = CircleGrid(16)
    while suite.cases < cases:
        n = int(rng.integers(1, 4))
        F, G = (
            SampledMatrixFunction(
                grid,
                np.array([random_hpd(rng, n, 1e-2, 1e2) for _ in range(grid.size)]),
            )
            for _ in range(2)
        )
        M_F, F1 = normalize_unit_ball(F)
        M_G, G1 = normalize_unit_ball(G)
        left = (F1 - G1).pointwise_norms()
        gap = (F - G).pointwise_norms()
        middle = np.abs(M_G.real - M_F.real) + gap
        for k in range(grid.size):
            suite.record(left[k], middle[k], rtol=1e-10, case="first", n=n)
            suite.record(middle[k], 2 * gap[k], rtol=1e-10, case="second", n=n)
    return suite


def _random_trig_modulus(rng, grid, degree=3):
    coefficients = rng.standard_normal(degree + 1)
    coefficients = coefficients + 1j * rng.standard_normal(degree + 1)
    harmonics = np.exp(1j * np.outer(grid.nodes, np.arange(degree + 1)))
    return np.abs(harmonics @ coefficients) ** 2 + float(log_uniform(rng, 1e-2, 1.0))


def _diagonal_side(rng, grid, n):
    """Diagonal density of positive trigonometric polynomials and its factor."""
    moduli = [_random_trig_modulus(rng, grid) for _ in range(n)]
    factors = [scalar_spectral_factor(SampledScalarFunction(grid, m)) for m in moduli]
    density = np.zeros((grid.size, n, n), dtype=complex)
    plus = np.zeros((grid.size, n, n), dtype=complex)
    for i, (modulus, factor) in enumerate(zip(moduli, factors)):
        density[:, i, i] = modulus
        plus[:, i, i] = factor.plus.values[:, 0, 0]
    at_zero = np.diag([factor.at_zero[0, 0] for factor in factors])
    return (
        SampledMatrixFunction(grid, density),
        SampledMatrixFunction(grid, plus),
        at_zero,
    )


def projection_suite(rng, cases=DEFAULT_CASES, seed=0):
    """The projection estimate on diagonal positive trigonometric densities."""
    suite = SuiteResult("projection-estimate", seed)
    grid = CircleGrid(256)
    for _ in range(cases):
        n = int(rng.integers(1, 3))
        F, Fp, at_zero_F = _diagonal_side(rng, grid, n)
        G, Gp, at_zero_G = _diagonal_side(rng, grid, n)
        eigenvalues = np.linalg.eigvalsh(F.values)
        lhs, rhs = projection_estimate(
            Fp,
            Gp,
            at_zero_F,
            at_zero_G,
            d1=lp_norm(G - F, 1),
            eta=float(eigenvalues.min()),
            bound=float(eigenvalues.max()),
        )
        suite.record(lhs, rhs, rtol=1e-8, atol=1e-12, n=n)
    return suite


def _random_statistics(rng, max_distance):
    return PairStatistics(
        n=int(rng.integers(1, 5)),
        d1=float(log_uniform(rng, 1e-12, max_distance)),
        dlogdet=float(log_uniform(rng, 1e-8, 10.0)),
        dlogplus=float(log_uniform(rng, 1e-8, 10.0)),
        fp0=float(log_uniform(rng, 1e-2, 1e2)),
        ellp1=float(log_uniform(rng, 1e-2, 1e2)),
        qfp1=float(log_uniform(rng, 1.0, 1e2)),
        p0=float(rng.uniform(1.1, 5.0)),
        p1=float(rng.uniform(1.1, 5.0)),
        alpha=float(rng.uniform(0.05, 0.95)),
    )


def reduction_identity(rng, cases=DEFAULT_CASES, seed=0):
    """Power pairs with nu = min(t^alpha, 1) turn thm3.1 into thm1.3; the
    exponential pair with nu = min(1, t^{1/(p1+1)}) keeps thm3.2 below thm1.4."""
    suite = SuiteResult("reduction-identity", seed)
    half = cases // 2
    for _ in range(half):
        stats = _random_statistics(rng, 0.9)
        q0 = stats.p0 / (stats.p0 - 1)
        stats.f_psi0 = q0 ** (1 / q0) * stats.fp0
        stats.ell_psi1 = stats.ellp1
        power = rhs_matrix_power("thm1.3", stats)
        orlicz = rhs_matrix_orlicz(
            "thm3.1",
            stats,
            OrliczPair.power(stats.p0),
            OrliczPair.power(stats.p1),
            NuFunction.power(stats.alpha),
        )
        suite.record(
            abs(orlicz - power),
            1e-10 * power,
            rtol=0.0,
            atol=0.0,
            case="thm3.1 = thm1.3",
        )
    while suite.cases < cases:
        stats = _random_statistics(rng, np.exp(-4.0))
        q0 = stats.p0 / (stats.p0 - 1)
        stats.f_psi0 = q0 ** (1 / q0) * stats.fp0
        stats.pi_psi1 = stats.qfp1 ** (2 * stats.p1)
        power = rhs_matrix_power("thm1.4", stats)
        orlicz = rhs_matrix_orlicz(
            "thm3.2",
            stats,
            OrliczPair.power(stats.p0),
            OrliczPair.exponential(stats.p1),
            NuFunction.root(stats.p1),
        )
        suite.record(orlicz, power, rtol=1e-10, case="thm3.2 <= thm1.4")
    return suite


def reduction_discrepancy(rng, cases=DEFAULT_CASES, seed=0):
    """||ell||_(t^p/p) / ||ell||_{L_p} = p^{-1/p}."""
    suite = SuiteResult("reduction-discrepancy", seed)
    for _ in range(cases):
        p1 = float(rng.uniform(1.1, 6.0))
        ell = -np.abs(rng.standard_normal(32)) * log_uniform(rng, 1e-2, 1e2)
        report = orlicz_reduction_discrepancy(ell, p1)
        gap = abs(report["ratio"] - report["expected_ratio"])
        suite.record(gap, 1e-8, rtol=0.0, atol=0.0, p1=p1)
    return suite


def constants_continuity(rng, cases=DEFAULT_CASES, seed=0):
    """c(p0) has no jumps on [1.1, 10]."""
    suite = SuiteResult("constants-continuity", seed)
    p0 = np.linspace(1.1, 10.0, cases + 1)
    values = np.array([c_constant(p) for p in p0])
    steps = np.abs(np.diff(values))
    for step, p in zip(steps, p0[1:]):
        suite.record(step, 1e-2 * c_constant(p), rtol=0.0, p0=float(p))
    return suite


SUITES = {
    "orlicz-relations": orlicz_relations,
    "holder": holder,
    "lambda-r-sandwich": lambda_r_sandwich,
    "interpolation-lemma": interpolation_lemma,
    "matrix-chain": matrix_chain,
    "log-inequality": log_inequality,
    "elementary": elementary,
    "normalization-contraction": normalization_contraction,
    "projection-estimate": projection_suite,
    "reduction-identity": reduction_identity,
    "reduction-discrepancy": reduction_discrepancy,
    "constants-continuity": constants_continuity,
}


def run_selftests(seed=0, names=None, cases=DEFAULT_CASES):
    """
    Run the named suites (all by default), each from its own generator
    seeded with ``seed``.

    Returns:
        list of SuiteResult
    """
    names = list(names or SUITES)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f"Unknown suites {unknown}; choose from {list(SUITES)}.")
    results = []
    for name in names:
        result = SUITES[name](np.random.default_rng(seed), cases=cases, seed=seed)
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(
            level,
            "suite %s: %d cases, %d failures",
            name,
            result.cases,
            result.failures,
        )
        results.append(result)
    return results
