"""Quadrature, special functions and seeded sampling shared by both evaluation paths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError, DomainError, QuadratureError

#: Euler-Mascheroni constant to the four decimals used by the exponential-integral bound.
EULER_GAMMA_4 = 0.5772
#: ``exp(0.5772)``, the scale in the lower bound on ``E1``.
MU = math.exp(EULER_GAMMA_4)


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 500
    tail_cutoff_eps: float = 1e-14

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_subdivisions > 0
                and self.tail_cutoff_eps > 0):
            raise DomainError("quadrature settings must all be positive")


DEFAULT_QUAD = QuadratureSettings()


def integrate_finite(f, a, b, settings: QuadratureSettings = DEFAULT_QUAD, points=None):
    """Adaptive Gauss-Kronrod integral of scalar ``f`` over ``[a, b]``.

    Raises :class:`QuadratureError` (carrying the partial estimate) when the
    tolerance is not met within ``settings.max_subdivisions`` intervals.
    """
    if a > b:
        raise DomainError("integration bounds must satisfy a <= b")
    if a == b:
        return 0.0
    if points is not None:
        points = [p for p in points if a < p < b] or None
    out = integrate.quad(
        f, a, b, epsabs=settings.abs_tol, epsrel=settings.rel_tol,
        limit=settings.max_subdivisions, points=points, full_output=1,
    )
    val, err = out[0], out[1]
    if not math.isfinite(val):
        raise DivergenceError(f"integral over [{a}, {b}] is not finite")
    if len(out) > 3:
        message = out[3]
        if "divergent" in message:
            raise DivergenceError(f"integral over [{a}, {b}] is probably divergent")
        tol = max(settings.abs_tol, settings.rel_tol * abs(val))
        # quad's estimate is pessimistic; only fail when it is clearly too large
        if err > 1e3 * tol and err > 1e-8 * max(1.0, abs(val)):
            raise QuadratureError(f"quadrature over [{a}, {b}] failed: {message.strip()}", val, err)
    return val


def integrate_semi_infinite(f, a, settings: QuadratureSettings = DEFAULT_QUAD, points=None,
                            scale=1.0):
    """Integral of ``f`` over ``[a, inf)`` through ``t = a + scale * u / (1 - u)``.

    ``scale`` should be of the order of the integrand's decay length.
    """

    def mapped(u):
        if u >= 1.0:
            return 0.0
        v = 1.0 - u
        return scale * f(a + scale * u / v) / (v * v)

    upts = None
    if points is not None:
        upts = [(p - a) / (scale + p - a) for p in points if p > a]
    try:
        return integrate_finite(mapped, 0.0, 1.0, settings, points=upts)
    except QuadratureError as exc:
        # a tail that refuses to converge usually means the integral diverges
        tail = abs(mapped(1 - 1e-9))
        if tail > 1e6 * max(1.0, abs(exc.partial)):
            raise DivergenceError(f"integral over [{a}, inf) diverges") from exc
        raise


@lru_cache(maxsize=None)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_rule(edges, order=8):
    """Composite Gauss-Legendre rule on consecutive panels.

    ``edges`` has shape ``(..., P + 1)``; the returned nodes and weights have
    shape ``(..., P * order)``.  Zero-width panels contribute nothing, so
    breakpoints may be clipped onto their neighbours.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(order)
    lo, hi = edges[..., :-1, None], edges[..., 1:, None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1.0)
    weights = half * w
    shape = edges.shape[:-1] + ((edges.shape[-1] - 1) * order,)
    return nodes.reshape(shape), np.broadcast_to(weights, nodes.shape).reshape(shape)


def log_panel_rule(edges, order=8):
    """Composite rule with panels uniform in ``log t``; ``edges`` must be positive."""
    y, wy = panel_rule(np.log(edges), order)
    t = np.exp(y)
    return t, wy * t


# --------------------------------------------------------------------------
# Special functions
# --------------------------------------------------------------------------


def _upper_gamma(s, x):
    """Upper incomplete gamma ``Gamma(s, x)`` for any real ``s`` and ``x > 0``."""
    s = float(s)
    x = np.asarray(x, dtype=float)
    if s > 0:
        return special.gammaincc(s, x) * special.gamma(s)
    steps = int(math.ceil(-s)) if s != math.floor(s) else int(-s)
    base = s + steps
    if base == 0:
        val = special.exp1(x)
    else:
        val = special.gammaincc(base, x) * special.gamma(base)
    order = base
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            order -= 1.0
            # Gamma(v, x) = (Gamma(v + 1, x) - x^v e^{-x}) / v
            val = (val - np.exp(order * np.log(x) - x)) / order
    return np.where(np.isinf(x), 0.0, val)


def _gamma_by_quadrature(s, a, b):
    def one(lo, hi):
        if hi == lo:
            return 0.0
        f = lambda x: math.exp((s - 1) * math.log(x) - x)
        if math.isinf(hi):
            return integrate_semi_infinite(f, lo, scale=max(lo, 1.0))
        return integrate_finite(f, lo, hi)

    out = np.vectorize(one, otypes=[float])(a, b)
    return float(out) if out.ndim == 0 else out


def incomplete_gamma(s, a, b):
    """``int_a^b x^(s-1) e^(-x) dx`` for real order ``s`` (negative orders allowed).

    Vectorized over ``a`` and ``b``.  ``b`` may be ``inf``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(a > b):
        raise DomainError("incomplete gamma needs 0 <= a <= b")
    if s <= 0 and np.any(a == 0):
        raise DivergenceError("incomplete gamma of non-positive order diverges at 0")
    near = round(s)
    off = s - near
    if near <= 0 and 0 < abs(off) < 1e-4 and np.all(a > 0):
        if abs(off) < 1e-12:
            # the value is analytic in s; the snap changes it by O(1e-12)
            s = float(near)
        else:
            # the recurrence would divide by the tiny offset; integrate directly
            return _gamma_by_quadrature(s, a, b)
    if s > 0:
        gs = special.gamma(s)
        out = gs * (special.gammainc(s, b) - special.gammainc(s, a))
        # large arguments: differences of regularized upper tails keep precision
        upper = a > s
        if np.any(upper):
            alt = gs * (special.gammaincc(s, a) - special.gammaincc(s, b))
            out = np.where(upper, alt, out)
    else:
        out = _upper_gamma(s, a) - _upper_gamma(s, np.where(b == a, a, b))
        out = np.where(b == a, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def eta(n: int) -> float:
    """``N (N!)^(-1/N)``, the exponent scale in the gamma CDF bound."""
    if n < 1 or int(n) != n:
        raise DomainError("N must be a positive integer")
    return n * math.exp(-math.lgamma(n + 1) / n)


def gamma_tail_bound(n: int, gamma):
    """``[1 - exp(-eta(N) gamma)]^N`` for a normalized Gamma(N) variable."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("gamma must be non-negative")
    out = (-np.expm1(-eta(n) * g)) ** n
    return float(out) if out.ndim == 0 else out


def expint_bounds(x, a=MU, b=1.0):
    """Bounds ``(-log(1 - e^{-a x}), -log(1 - e^{-b x}))`` on ``E1(x)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("exponential-integral bounds need x > 0")
    lower = -np.log(-np.expm1(-a * x))
    upper = -np.log(-np.expm1(-b * x))
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def binomial_alternating_sum(terms):
    """``sum_n (-1)^(n+1) C(N, n) terms[n-1]`` with compensated (fsum) accumulation.

    ``terms`` has shape ``(N, ...)``.
    """
    terms = np.asarray(terms, dtype=float)
    n_max = terms.shape[0]
    coef = np.array([(-1) ** (n + 1) * math.comb(n_max, n) for n in range(1, n_max + 1)],
                    dtype=float)
    scaled = coef.reshape((-1,) + (1,) * (terms.ndim - 1)) * terms
    if terms.ndim == 1:
        return math.fsum(scaled)
    flat = scaled.reshape(n_max, -1)
    out = np.array([math.fsum(col) for col in flat.T])
    return out.reshape(terms.shape[1:])


# --------------------------------------------------------------------------
# Random streams
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomStream:
    """Reproducible substream: identical ``(seed, stream_id)`` gives identical draws."""

    seed: int
    stream_id: int = 0

    def generator(self, sub: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, sub))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, stream_id)


def sample_gamma_normalized(n: int, stream: RandomStream | np.random.Generator, size=None):
    """Gamma draws with shape ``n`` and scale ``1/n`` (mean one)."""
    if n < 1:
        raise DomainError("Nakagami parameter must be at least 1")
    gen = stream.generator() if isinstance(stream, RandomStream) else stream
    return gen.standard_gamma(n, size) / n


MAX_EXPECTED_POINTS = 1e8


def poisson_arrivals(gen: np.random.Generator, mass: float):
    """Arrival epochs of a unit-rate Poisson process on ``[0, mass)``.

    Epochs are cumulative sums of ``-log(1 - U)``; draws are consumed in order,
    so a larger ``mass`` extends, never reshuffles, the same sequence.
    """
    if mass > MAX_EXPECTED_POINTS:
        raise DomainError(f"expected point count {mass:.3g} exceeds the {MAX_EXPECTED_POINTS:.0e} guard")
    chunk = int(mass + 6 * math.sqrt(mass) + 16)
    epochs = np.cumsum(-np.log1p(-gen.random(chunk)))
    while epochs[-1] < mass:
        more = np.cumsum(-np.log1p(-gen.random(chunk))) + epochs[-1]
        epochs = np.concatenate([epochs, more])
    return epochs[: np.searchsorted(epochs, mass)]


def sample_ppp_disk(density, radius, stream: RandomStream):
    """Homogeneous PPP on a disk, returned in polar form sorted by radius.

    Returns ``(radii, angles)``.  The realization in a smaller disk is a prefix
    of the realization in a larger one for the same stream.
    """
    if not (density > 0 and radius > 0):
        raise DomainError("density and radius must be positive")
    epochs = poisson_arrivals(stream.generator(0), density * math.pi * radius**2)
    radii = np.sqrt(epochs / (math.pi * density))
    angles = stream.generator(1).uniform(-math.pi, math.pi, radii.size)
    return radii, angles
