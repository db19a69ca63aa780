"""Integral expressions for association, serving distance, SINR coverage and rate.

The general-network coverage splits the user population into LOS-served and
NLOS-served users.  For each tier the conditional coverage is an alternating
binomial sum over Laplace functionals of the two interfering tiers, each of
which is a one-dimensional integral over the interferer distance.  The nested
integrals are evaluated with composite Gauss-Legendre rules whose panels are
uniform in log-distance and split at every kink of the LOS law; the adaptive
scalar integrators in :mod:`mmcov.numerics` serve as the reference in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import numerics
from .errors import DivergenceError, DomainError
from .model import DirectivityPmf, NetworkConfig
from .numerics import QuadratureSettings, DEFAULT_QUAD

LOS, NLOS = "los", "nlos"
TIERS = (LOS, NLOS)

PROVENANCES = ("analytic-general", "analytic-dense", "analytic-dense-alpha2", "monte-carlo")


@dataclass
class CoverageCurve:
    """Coverage probability sampled on strictly increasing linear thresholds."""

    thresholds: np.ndarray
    probabilities: np.ndarray
    provenance: str = "analytic-general"
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if self.thresholds.shape != self.probabilities.shape or self.thresholds.ndim != 1:
            raise DomainError("thresholds and probabilities must be 1-D and the same length")
        if np.any(np.diff(self.thresholds) <= 0):
            raise DomainError("thresholds must be strictly increasing")
        if np.any(self.probabilities < -1e-12) or np.any(self.probabilities > 1 + 1e-12):
            raise DomainError("probabilities must lie in [0, 1]")
        self.probabilities = np.clip(self.probabilities, 0.0, 1.0)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)

    @property
    def thresholds_db(self):
        return 10 * np.log10(self.thresholds)

    def __call__(self, t):
        """Piecewise-linear interpolation in log-threshold, flat beyond the ends."""
        t = np.asarray(t, dtype=float)
        logt = np.log(np.maximum(t, np.finfo(float).tiny))
        out = np.interp(logt, np.log(self.thresholds), self.probabilities)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AssocReport:
    """Association and tier-occupancy probabilities.

    ``a_los`` and ``a_nlos`` are computed by separate integrals, so their sum
    checks the quadrature.
    """

    a_los: float
    a_nlos: float
    b_los: float
    b_nlos: float
    stderr: float | None = None


# --------------------------------------------------------------------------
# Tier geometry
# --------------------------------------------------------------------------


def _other(tier):
    return NLOS if tier == LOS else LOS


def _check_tier(tier):
    if tier not in TIERS:
        raise DomainError(f"tier must be one of {TIERS}")


def _tier_params(config: NetworkConfig, tier):
    pl, fd = config.pathloss, config.fading
    if tier == LOS:
        return pl.alpha_los, pl.intercept_los, fd.n_los
    return pl.alpha_nlos, pl.intercept_nlos, fd.n_nlos


def _fraction(config, tier, t):
    p = np.asarray(config.los.prob(t), dtype=float)
    return p if tier == LOS else 1.0 - p


def _void(config, tier, x):
    """``2 pi lambda int_0^x t q(t) dt``: minus log of the probability of no tier point within x."""
    m = config.los.moment(x) if tier == LOS else config.los.nlos_moment(x)
    return 2 * math.pi * config.bs_density * np.asarray(m, dtype=float)


def _total_void(config, tier):
    m = config.los.total_moment if tier == LOS else config.los.nlos_total_moment
    return 2 * math.pi * config.bs_density * m


def _psi(config, tier, x):
    """Distance in the other tier with the same path loss as distance ``x`` in ``tier``."""
    a_s, c_s, _ = _tier_params(config, tier)
    a_o, c_o, _ = _tier_params(config, _other(tier))
    return (c_o / c_s) ** (1.0 / a_o) * np.asarray(x, dtype=float) ** (a_s / a_o)


def tier_presence(config: NetworkConfig, tier) -> float:
    """Probability that the user sees at least one base station of ``tier``."""
    _check_tier(tier)
    return -math.expm1(-_total_void(config, tier))


def _joint_weight(config, tier, x):
    """``A_s`` times the serving-distance density of ``tier`` at ``x``."""
    x = np.asarray(x, dtype=float)
    q = _fraction(config, tier, x)
    expo = _void(config, tier, x) + _void(config, _other(tier), _psi(config, tier, x))
    return 2 * math.pi * config.bs_density * x * q * np.exp(-expo)


def _kinks(config, tier):
    """Distances where the tier-``tier`` serving density is not smooth."""
    bps = np.asarray(config.los.breakpoints, dtype=float)
    if bps.size == 0:
        return bps
    return np.unique(np.concatenate([bps, _psi(config, _other(tier), bps)]))


def nearest_pdf(config: NetworkConfig, tier, x):
    """Density of the distance to the nearest base station of ``tier``, given one exists."""
    _check_tier(tier)
    b = tier_presence(config, tier)
    if b == 0:
        raise DomainError(f"the {tier} tier is empty almost surely")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("distance must be positive")
    out = 2 * math.pi * config.bs_density * x * _fraction(config, tier, x) \
        * np.exp(-_void(config, tier, x)) / b
    return float(out) if out.ndim == 0 else out


def _assoc_integral(config, tier, settings):
    if tier_presence(config, tier) == 0:
        return 0.0
    scale = config.cell_radius

    def f(x):
        return float(_joint_weight(config, tier, x))

    return numerics.integrate_semi_infinite(f, 0.0, settings, points=list(_kinks(config, tier)),
                                            scale=scale)


def assoc_probabilities(config: NetworkConfig, settings: QuadratureSettings = DEFAULT_QUAD) -> AssocReport:
    """LOS/NLOS association probabilities and tier-presence probabilities."""
    a_los = _assoc_integral(config, LOS, settings)
    a_nlos = _assoc_integral(config, NLOS, settings)
    return AssocReport(a_los, a_nlos, tier_presence(config, LOS), tier_presence(config, NLOS))


def serving_pdf(config: NetworkConfig, tier, x, assoc: AssocReport | None = None):
    """Density of the serving distance given association with ``tier``."""
    _check_tier(tier)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("distance must be positive")
    assoc = assoc or assoc_probabilities(config)
    a = assoc.a_los if tier == LOS else assoc.a_nlos
    if a == 0:
        raise DomainError(f"users are never served by the {tier} tier")
    out = _joint_weight(config, tier, x) / a
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# General-network SINR coverage
# --------------------------------------------------------------------------


def _f_gamma(n, y):
    """``F(N, y) = 1 - (1 + y)^-N`` without cancellation for small ``y``."""
    return -np.expm1(-n * np.log1p(y))


@dataclass(frozen=True)
class RuleSettings:
    """Panel layout for the nested quadrature of the coverage integrals."""

    order: int = 8
    outer_panels_per_decade: int = 6
    inner_panels_per_decade: int = 5
    void_cutoff: float = 60.0
    tail_y: float = 1e-9


def _outer_range(config, tier, cutoff):
    """``[x_lo, x_hi]`` holding all but ~e^-cutoff of the tier's serving mass."""
    lam = config.bs_density
    x_lo = math.sqrt(1e-14 / (math.pi * lam))

    def total(x):
        return float(_void(config, tier, x) + _void(config, _other(tier), _psi(config, tier, x)))

    hi = max(config.cell_radius, 1.0)
    while total(hi) < cutoff and hi < 1e12:
        hi *= 2
    lo = hi / 2 if hi > 1.0 else x_lo
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if total(mid) < cutoff:
            lo = mid
        else:
            hi = mid
    x_hi = hi
    if tier == LOS:
        x_hi = min(x_hi, config.los.far_radius)
    return x_lo, max(x_hi, x_lo * 10)


def _log_edges(lo, hi, per_decade, extra=()):
    """Panel edges uniform in log between scalars or arrays ``lo`` < ``hi`` plus ``extra`` cut points."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    decades = np.log10(hi / lo)
    panels = max(2, int(math.ceil(np.max(decades) * per_decade)))
    frac = np.linspace(0.0, 1.0, panels + 1)
    edges = lo[:, None] * (hi / lo)[:, None] ** frac[None, :]
    if len(extra):
        cuts = np.clip(np.asarray(extra, dtype=float)[None, :], lo[:, None], hi[:, None])
        edges = np.sort(np.concatenate([edges, cuts], axis=1), axis=1)
    return edges


def _interference_exponent(config, tier_i, lo, coef, rule):
    """Laplace-functional exponent of interferers in ``tier_i`` beyond distance ``lo``.

    Returns ``2 pi lambda sum_k b_k int_lo^inf F(N_i, coef_k t^-alpha_i) q_i(t) t dt`` for
    ``coef`` of shape ``(J, K, X)`` (J terms, K directivity levels, X outer nodes) and
    ``lo`` of shape ``(X,)``.  The result has shape ``(J, X)``.
    """
    alpha_i, _, n_i = _tier_params(config, tier_i)
    pmf = config.pmf
    b = np.asarray(pmf.probs)
    keep = b > 0
    coef = coef[:, keep, :]
    b = b[keep]
    lam2 = 2 * math.pi * config.bs_density

    far = config.los.far_radius if tier_i == LOS else math.inf
    if tier_i == NLOS and config.los.nlos_total_moment == 0:
        return np.zeros((coef.shape[0], lo.size))

    cmax = coef.max(axis=(0, 1))
    # beyond u the first-order expansion of F is accurate to tail_y
    u = np.maximum((cmax / rule.tail_y) ** (1.0 / alpha_i), lo * 1.0001)
    if alpha_i <= 2 and math.isfinite(far):
        # no convergent power-law tail: integrate all the way to the LOS horizon
        u = np.maximum(far, lo * 1.0001)
    u = np.minimum(u, np.maximum(far, lo * 1.0001))
    live = lo < far
    edges = _log_edges(lo, u, rule.inner_panels_per_decade, config.los.breakpoints)
    t, w = numerics.log_panel_rule(edges, rule.order)  # (X, M)
    qt = _fraction(config, tier_i, t) * t * w  # weight per node
    y = coef[..., None] * t[None, None, :, :] ** (-alpha_i)  # (J, K, X, M)
    body = np.einsum("jkxm,xm->jkx", _f_gamma(n_i, y), qt)

    # tail past u with F ~ N y and q held at q(u)
    qu = _fraction(config, tier_i, u)
    tail_open = (u < far) & (qu > 0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if alpha_i > 2:
            tail_int = np.where(tail_open, qu * u ** (2 - alpha_i) / (alpha_i - 2), 0.0)
        else:
            tail_int = np.where(tail_open, np.inf, 0.0)
        tail = n_i * coef * tail_int[None, None, :]
        tail = np.where(coef == 0, 0.0, tail)
    total = np.einsum("k,jkx->jx", b, body + tail) * lam2
    return np.where(live[None, :], total, 0.0)


def _tier_coverage(config, tier, thresholds, rule):
    """``A_s P_{c,s}(T)`` for each threshold, shape ``(len(T),)``."""
    if tier_presence(config, tier) == 0:
        return np.zeros(len(thresholds))
    alpha_s, c_s, n_s = _tier_params(config, tier)
    other = _other(tier)
    _, c_o, n_o = _tier_params(config, other)
    eta_s = numerics.eta(n_s)
    abar = np.asarray(config.pmf.relative_gains)
    g0 = config.boresight_gain

    x_lo, x_hi = _outer_range(config, tier, rule.void_cutoff)
    edges = _log_edges(x_lo, x_hi, rule.outer_panels_per_decade, _kinks(config, tier))[0]
    x, wx = numerics.log_panel_rule(edges, rule.order)
    weight = _joint_weight(config, tier, x) * wx  # (X,)
    xa = x**alpha_s
    lo_other = _psi(config, tier, x)
    n_terms = np.arange(1, n_s + 1, dtype=float)

    out = np.empty(len(thresholds))
    for i, T in enumerate(thresholds):
        base = n_terms[:, None, None] * eta_s * T * abar[None, :, None] * xa[None, None, :]
        same = _interference_exponent(config, tier, x, base / n_s, rule)
        cross = _interference_exponent(config, other, lo_other, base * (c_o / c_s) / n_o, rule)
        noise = n_terms[:, None] * eta_s * T * config.noise_norm * xa[None, :] / (c_s * g0)
        with np.errstate(invalid="ignore"):
            terms = np.exp(-(noise + same + cross)) @ weight  # (N_s,)
        out[i] = numerics.binomial_alternating_sum(np.nan_to_num(terms))
    return out


def _as_thresholds(thresholds):
    t = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if np.any(t <= 0):
        raise DomainError("SINR thresholds must be positive (linear scale)")
    return t


def coverage_general(config: NetworkConfig, thresholds, rule: RuleSettings = RuleSettings()) -> CoverageCurve:
    """SINR coverage of the general LOS/NLOS network with Nakagami fading."""
    t = np.unique(_as_thresholds(thresholds))
    total = _tier_coverage(config, LOS, t, rule) + _tier_coverage(config, NLOS, t, rule)
    return CoverageCurve(t, np.clip(total, 0.0, 1.0), "analytic-general")


def coverage_fn(config: NetworkConfig, rule: RuleSettings = RuleSettings()) -> Callable:
    """Vectorized ``T -> P_c(T)`` for a general network (any threshold order)."""

    def fn(t):
        t = _as_thresholds(t)
        vals = _tier_coverage(config, LOS, t, rule) + _tier_coverage(config, NLOS, t, rule)
        return np.clip(vals, 0.0, 1.0)

    return fn


# --------------------------------------------------------------------------
# Dense networks
# --------------------------------------------------------------------------


def _dense_rule(order=8):
    edges = np.concatenate([[0.0], np.logspace(-12, 0, 73)])
    return numerics.panel_rule(edges, order)


def _dense_check(rho, n_terms):
    if not rho >= 0:
        raise DomainError("relative density must be non-negative")
    if n_terms < 1 or int(n_terms) != n_terms:
        raise DomainError("number of terms must be a positive integer")


def coverage_dense(rho, pmf: DirectivityPmf, alpha_los, n_terms=5, thresholds=None,
                   eta_value=None) -> CoverageCurve:
    """SIR coverage in the LOS-ball dense model with ``n_terms`` gamma terms.

    ``eta_value`` overrides the exponent scale (default ``N (N!)^(-1/N)``).
    """
    _dense_check(rho, n_terms)
    if not alpha_los > 0:
        raise DomainError("path-loss exponent must be positive")
    t_grid = _as_thresholds(default_thresholds() if thresholds is None else thresholds)
    eta_n = numerics.eta(n_terms) if eta_value is None else eta_value
    if rho == 0:
        return CoverageCurve(t_grid, np.zeros_like(t_grid), "analytic-dense")
    b = np.asarray(pmf.probs)
    keep = b > 0
    b = b[keep]
    abar = np.asarray(pmf.relative_gains)[keep]
    s = -2.0 / alpha_los
    u, wu = _dense_rule()
    ell = np.arange(1, n_terms + 1, dtype=float)

    probs = np.empty(t_grid.size)
    for i, T in enumerate(t_grid):
        c = ell[:, None, None] * eta_n * T * abar[None, :, None]  # (L, K, 1)
        a = c * u[None, None, :] ** (alpha_los / 2)
        gam = numerics.incomplete_gamma(s, a, np.broadcast_to(c, a.shape))
        # (2 / R_B^2) int_r^{R_B} (1 - e^{-c (r/s)^alpha}) s ds, per directivity level
        bracket = (1 - u)[None, None, :] - (2 / alpha_los) * u[None, None, :] * c ** (2 / alpha_los) * gam
        expo = -rho * u[None, :] - rho * np.einsum("k,lku->lu", b, bracket)
        terms = rho * np.exp(expo) @ wu
        probs[i] = numerics.binomial_alternating_sum(terms)
    return CoverageCurve(t_grid, np.clip(probs, 0.0, 1.0), "analytic-dense",
                         meta={"rho": rho, "n_terms": n_terms, "alpha_los": alpha_los})


def coverage_dense_alpha2(rho, pmf: DirectivityPmf, n_terms=5, thresholds=None,
                          mu=numerics.MU) -> CoverageCurve:
    """Dense-network coverage for ``alpha_L = 2`` using the logarithmic bound on ``E1``."""
    _dense_check(rho, n_terms)
    t_grid = _as_thresholds(default_thresholds() if thresholds is None else thresholds)
    if rho == 0:
        return CoverageCurve(t_grid, np.zeros_like(t_grid), "analytic-dense-alpha2")
    eta_n = numerics.eta(n_terms)
    b = np.asarray(pmf.probs)
    keep = b > 0
    b = b[keep]
    abar = np.asarray(pmf.relative_gains)[keep]
    u, wu = _dense_rule()
    ell = np.arange(1, n_terms + 1, dtype=float)

    probs = np.empty(t_grid.size)
    for i, T in enumerate(t_grid):
        c = ell[:, None, None] * eta_n * T * abar[None, :, None]
        uu = u[None, None, :]
        poly = np.exp(-c * uu) - uu * np.exp(-c)
        with np.errstate(divide="ignore"):
            log_ratio = np.log(-np.expm1(-mu * c * uu)) - np.log(-np.expm1(-mu * c))
        per_k = rho * b[None, :, None] * (poly + c * uu * log_ratio)
        expo = math.log(rho) - rho + per_k.sum(axis=1)
        terms = np.exp(expo) @ wu
        probs[i] = numerics.binomial_alternating_sum(terms)
    return CoverageCurve(t_grid, np.clip(probs, 0.0, 1.0), "analytic-dense-alpha2",
                         meta={"rho": rho, "n_terms": n_terms, "alpha_los": 2.0})


def asymptotic_lower_bound(alpha_los, threshold) -> float:
    """Limit of the SIR coverage as the relative density grows without bound.

    Zero for ``alpha_los <= 2``; otherwise the lower bound
    ``alpha T^(-2/alpha) / (2 pi sin(2 pi / alpha))`` clamped to ``[0, 1]``.
    """
    if not threshold > 1:
        raise DomainError("the asymptotic bound is stated for thresholds T > 1")
    if alpha_los <= 2:
        return 0.0
    val = alpha_los * threshold ** (-2 / alpha_los) / (2 * math.pi * math.sin(2 * math.pi / alpha_los))
    return min(max(val, 0.0), 1.0)


# --------------------------------------------------------------------------
# Rate
# --------------------------------------------------------------------------


def default_thresholds(lo_db=-10.0, hi_db=40.0, step_db=1.0):
    n = int(round((hi_db - lo_db) / step_db)) + 1
    return 10 ** (np.linspace(lo_db, hi_db, n) / 10)


def _resolve_source(source, bandwidth, sinr_cap):
    if isinstance(source, NetworkConfig):
        bw = source.bandwidth if bandwidth is None else bandwidth
        cap = source.sinr_cap if sinr_cap is None else sinr_cap
        return coverage_fn(source), bw, cap
    if bandwidth is None or sinr_cap is None:
        raise DomainError("bandwidth and SINR cap are required unless a NetworkConfig is given")
    if isinstance(source, CoverageCurve) or callable(source):
        return source, bandwidth, sinr_cap
    raise DomainError("coverage source must be a NetworkConfig, CoverageCurve or callable")


def avg_rate(source, bandwidth=None, sinr_cap=None, panels=16, order=6) -> float:
    """Mean achievable rate in bit/s, ``W / ln 2 int_0^Tmax P_c(T) / (1 + T) dT``."""
    fn, bw, cap = _resolve_source(source, bandwidth, sinr_cap)
    lo = min(1e-4, cap / 10)
    edges = np.concatenate([[0.0], np.logspace(math.log10(lo), math.log10(cap), panels + 1)])
    t, w = numerics.panel_rule(edges, order)
    # the first panel [0, lo] uses its own nodes; all nodes are positive
    p = np.asarray(fn(t), dtype=float)
    val = bw / math.log(2) * float(np.sum(w * p / (1 + t)))
    return min(max(val, 0.0), bw * math.log2(1 + cap))


def spectral_efficiency(source, bandwidth=None, sinr_cap=None, **kw) -> float:
    fn, bw, cap = _resolve_source(source, bandwidth, sinr_cap)
    return avg_rate(fn, bw, cap, **kw) / bw


def rate_threshold(gamma, bandwidth):
    """SINR threshold ``2^(gamma/W) - 1`` equivalent to rate ``gamma``."""
    return np.expm1(np.asarray(gamma, dtype=float) / bandwidth * math.log(2))


def rate_coverage(source, gamma, bandwidth=None, sinr_cap=None):
    """Probability that the achievable rate exceeds ``gamma`` bit/s."""
    fn, bw, cap = _resolve_source(source, bandwidth, sinr_cap)
    g = np.asarray(gamma, dtype=float)
    limit = bw * math.log2(1 + cap)
    if np.any(g <= 0) or np.any(g >= limit):
        raise DomainError(f"rate threshold must lie in (0, {limit:.6g}) bit/s (W log2(1 + T_max))")
    out = np.asarray(fn(rate_threshold(g, bw)), dtype=float)
    return float(out) if out.ndim == 0 else out
