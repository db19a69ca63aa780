"""Physical model: LOS laws, sectored antennas, path loss and network configuration.

All gains are linear.  Decibel values are converted at the boundary with
:func:`db_to_linear`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InfiniteMeanCount

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0


def db_to_linear(db):
    out = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


# --------------------------------------------------------------------------
# LOS probability laws
# --------------------------------------------------------------------------


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise DomainError("link length must be non-negative")
    return r


class LosModel:
    """Base class for LOS probability functions ``p(r)``.

    Subclasses provide ``prob`` and ``moment``; ``moment(x)`` is the partial
    first moment ``int_0^x t p(t) dt`` in closed form, which every analytic
    routine uses for void probabilities.
    """

    kind = "abstract"

    def prob(self, r):
        raise NotImplementedError

    def moment(self, x):
        raise NotImplementedError

    @property
    def total_moment(self) -> float:
        raise NotImplementedError

    @property
    def breakpoints(self) -> tuple:
        """Radii where ``p`` is not smooth (quadrature panel boundaries)."""
        return ()

    @property
    def far_radius(self) -> float:
        """Radius beyond which ``p`` is below 1e-16, or ``inf``."""
        return math.inf

    @property
    def nlos_total_moment(self) -> float:
        """``int_0^inf t (1 - p(t)) dt``; zero only when ``p`` is identically one."""
        return math.inf

    def nlos_moment(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(0.5 * x * x - self.moment(x))


@dataclass(frozen=True)
class ExponentialLos(LosModel):
    """``p(r) = exp(-beta r)``; ``1/beta`` is the average LOS range."""

    beta: float
    kind = "exp"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive")

    @classmethod
    def from_range(cls, los_range):
        return cls(1.0 / los_range)

    def prob(self, r):
        return _scalar_or_array(np.exp(-self.beta * _check_radius(r)))

    def moment(self, x):
        bx = self.beta * np.asarray(x, dtype=float)
        # (1 - e^{-bx}(1+bx)) / b^2, written to stay accurate for small bx
        return _scalar_or_array(-(np.expm1(-bx) + bx * np.exp(-bx)) / self.beta**2)

    @property
    def total_moment(self):
        return 1.0 / self.beta**2

    @property
    def far_radius(self):
        return 37.0 / self.beta


@dataclass(frozen=True)
class BallLos(LosModel):
    """Step function: LOS inside ``radius``, NLOS at or beyond it."""

    radius: float
    kind = "ball"

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")

    def prob(self, r):
        return _scalar_or_array(np.where(_check_radius(r) < self.radius, 1.0, 0.0))

    def moment(self, x):
        x = np.minimum(np.asarray(x, dtype=float), self.radius)
        return _scalar_or_array(0.5 * x * x)

    @property
    def total_moment(self):
        return 0.5 * self.radius**2

    @property
    def breakpoints(self):
        return (self.radius,)

    @property
    def far_radius(self):
        return self.radius


@dataclass(frozen=True)
class TabulatedLos(LosModel):
    """Piecewise-linear ``p`` through ``(radius, prob)`` samples.

    The first value is held below the first radius and the last value is held
    beyond the table.
    """

    radii: tuple
    probs: tuple
    kind = "table"
    _cum: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if r.ndim != 1 or r.shape != p.shape or r.size < 1:
            raise DomainError("table needs matching, non-empty radius and probability lists")
        if r[0] < 0 or np.any(np.diff(r) <= 0):
            raise DomainError("table radii must be non-negative and strictly increasing")
        if np.any(p < 0) or np.any(p > 1):
            raise DomainError("table probabilities must lie in [0, 1]")
        if np.any(np.diff(p) > 0):
            raise DomainError("LOS probability must be non-increasing in distance")
        object.__setattr__(self, "radii", tuple(float(v) for v in r))
        object.__setattr__(self, "probs", tuple(float(v) for v in p))
        cum = [0.5 * p[0] * r[0] ** 2]
        for i in range(r.size - 1):
            cum.append(cum[-1] + self._segment(i, r[i + 1]))
        object.__setattr__(self, "_cum", tuple(cum))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple]):
        radii, probs = zip(*pairs)
        return cls(tuple(radii), tuple(probs))

    def _slope(self, i):
        r, p = self.radii, self.probs
        return (p[i + 1] - p[i]) / (r[i + 1] - r[i])

    def _segment(self, i, x):
        # int_{r_i}^{x} t (p_i + s (t - r_i)) dt
        ri, pi, s = self.radii[i], self.probs[i], self._slope(i)
        return pi * (x * x - ri * ri) / 2 + s * ((x**3 - ri**3) / 3 - ri * (x * x - ri * ri) / 2)

    def prob(self, r):
        r = _check_radius(r)
        return _scalar_or_array(np.interp(r, self.radii, self.probs))

    def moment(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r = np.asarray(self.radii)
        p = np.asarray(self.probs)
        cum = np.asarray(self._cum)
        out = np.empty_like(x)
        below = x <= r[0]
        out[below] = 0.5 * p[0] * x[below] ** 2
        beyond = x >= r[-1]
        out[beyond] = cum[-1] + 0.5 * p[-1] * (x[beyond] ** 2 - r[-1] ** 2)
        mid = ~(below | beyond)
        if np.any(mid):
            xm = x[mid]
            i = np.searchsorted(r, xm, side="right") - 1
            slope = np.diff(p) / np.diff(r)
            ri, pi, s = r[i], p[i], slope[i]
            seg = pi * (xm**2 - ri**2) / 2 + s * ((xm**3 - ri**3) / 3 - ri * (xm**2 - ri**2) / 2)
            out[mid] = cum[i] + seg
        return float(out[0]) if scalar else out

    @property
    def total_moment(self):
        return self._cum[-1] if self.probs[-1] == 0 else math.inf

    @property
    def breakpoints(self):
        return tuple(r for r in self.radii if r > 0)

    @property
    def far_radius(self):
        return self.radii[-1] if self.probs[-1] == 0 else math.inf

    @property
    def nlos_total_moment(self):
        return 0.0 if self.probs[-1] == 1.0 else math.inf


def los_probability(model: LosModel, r):
    """Probability that a link of length ``r`` is line of sight."""
    return model.prob(r)


# --------------------------------------------------------------------------
# Antennas
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SectoredAntenna:
    """Sectored pattern: ``main`` gain inside ``beamwidth`` (radians), ``side`` elsewhere."""

    main: float
    side: float
    beamwidth: float

    def __post_init__(self):
        if not (self.main >= self.side > 0):
            raise DomainError("sectored antenna needs main >= side > 0")
        if not (0 < self.beamwidth <= 2 * math.pi):
            raise DomainError("beamwidth must lie in (0, 2*pi]")

    @classmethod
    def from_db(cls, main_db, side_db, beamwidth_deg):
        return cls(db_to_linear(main_db), db_to_linear(side_db), math.radians(beamwidth_deg))

    @classmethod
    def omni(cls):
        return cls(1.0, 1.0, 2 * math.pi)

    @property
    def front_back_ratio(self):
        return self.main / self.side

    @property
    def main_lobe_fraction(self):
        return self.beamwidth / (2 * math.pi)

    def gain(self, phi):
        return antenna_gain(self, phi)


def antenna_gain(ant: SectoredAntenna, phi):
    """Gain at angle ``phi`` off boresight; the lobe edge belongs to the main lobe."""
    phi = np.asarray(phi, dtype=float)
    off = np.abs(phi)
    off = np.where(off <= math.pi, off, np.abs((phi + math.pi) % (2 * math.pi) - math.pi))
    g = np.where(off <= ant.beamwidth / 2, ant.main, ant.side)
    return float(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class DirectivityPmf:
    """Four-point law of the interferer directivity gain.

    ``gains[k]`` occurs with probability ``probs[k]``; ``normalized`` holds the
    gains divided by the transmit main gain, used by the ordering argument.
    """

    gains: tuple
    probs: tuple
    normalized: tuple = ()

    @property
    def relative_gains(self):
        """Gains divided by the boresight product ``gains[0]``."""
        return tuple(a / self.gains[0] for a in self.gains)


def directivity_pmf(tx: SectoredAntenna, rx: SectoredAntenna) -> DirectivityPmf:
    ct, cr = tx.main_lobe_fraction, rx.main_lobe_fraction
    gains = (rx.main * tx.main, rx.main * tx.side, rx.side * tx.main, rx.side * tx.side)
    probs = (cr * ct, cr * (1 - ct), (1 - cr) * ct, (1 - cr) * (1 - ct))
    xi = tx.front_back_ratio
    normalized = (rx.main, rx.main / xi, rx.side, rx.side / xi)
    return DirectivityPmf(gains, probs, normalized)


# --------------------------------------------------------------------------
# Propagation and network parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathLossParams:
    alpha_los: float = 2.0
    alpha_nlos: float = 4.0
    intercept_los: float = 1.0
    intercept_nlos: float = 1.0

    def __post_init__(self):
        for name in ("alpha_los", "alpha_nlos", "intercept_los", "intercept_nlos"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


def path_loss(pl: PathLossParams, r, is_los):
    """Deterministic path-loss gain ``C r^-alpha`` for the given LOS outcome."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("path loss needs a positive link length")
    out = np.where(
        is_los,
        pl.intercept_los * r ** (-pl.alpha_los),
        pl.intercept_nlos * r ** (-pl.alpha_nlos),
    )
    return float(out) if out.ndim == 0 else out


def free_space_intercept(carrier_hz):
    """Free-space gain at 1 m, ``(c / (4 pi f))^2``."""
    return (SPEED_OF_LIGHT / (4 * math.pi * carrier_hz)) ** 2


@dataclass(frozen=True)
class FadingParams:
    n_los: int = 3
    n_nlos: int = 2

    def __post_init__(self):
        for name in ("n_los", "n_nlos"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise DomainError(f"{name} must be a positive integer")


def noise_power_normalized(bandwidth, tx_power_dbm=30.0, noise_figure_db=10.0,
                           noise_density_dbm_hz=THERMAL_NOISE_DBM_HZ):
    """Thermal noise power over ``bandwidth`` divided by the transmit power."""
    noise_dbm = noise_density_dbm_hz + 10 * math.log10(bandwidth) + noise_figure_db
    return 10 ** ((noise_dbm - tx_power_dbm) / 10)


@dataclass(frozen=True)
class NetworkConfig:
    """Every quantity entering the SINR of the typical user.

    ``bs_density`` is the outdoor density, already thinned by the blockage
    fraction; ``blockage_fraction`` is carried for bookkeeping only.
    """

    bs_density: float
    los: LosModel
    pathloss: PathLossParams = PathLossParams()
    fading: FadingParams = FadingParams()
    tx_antenna: SectoredAntenna = SectoredAntenna.from_db(20, -10, 30)
    rx_antenna: SectoredAntenna = SectoredAntenna.from_db(10, -10, 90)
    tx_power: float = 1.0
    noise_norm: float = 0.0
    bandwidth: float = 100e6
    sinr_cap: float = 63.0
    blockage_fraction: float = 0.0

    def __post_init__(self):
        if not self.bs_density > 0:
            raise DomainError("base-station density must be positive")
        if not self.noise_norm >= 0:
            raise DomainError("normalized noise power must be non-negative")
        if not self.bandwidth > 0:
            raise DomainError("bandwidth must be positive")
        if not self.sinr_cap > 0:
            raise DomainError("SINR cap must be positive")
        if not (0 <= self.blockage_fraction < 1):
            raise DomainError("blockage fraction must lie in [0, 1)")
        if not self.tx_power > 0:
            raise DomainError("transmit power must be positive")

    @property
    def pmf(self) -> DirectivityPmf:
        return directivity_pmf(self.tx_antenna, self.rx_antenna)

    @property
    def boresight_gain(self):
        return self.tx_antenna.main * self.rx_antenna.main

    @property
    def cell_radius(self):
        return avg_cell_radius(self.bs_density)


def mmwave_config(cell_radius=100.0, los=None, carrier_hz=28e9, bandwidth=100e6,
                  tx_power_dbm=30.0, noise_figure_db=10.0, **overrides) -> NetworkConfig:
    """28 GHz outdoor configuration used throughout the examples and tests.

    Free-space intercepts at the carrier, noise from -174 dBm/Hz plus the noise
    figure over ``bandwidth``, normalized by the transmit power.
    """
    c0 = free_space_intercept(carrier_hz)
    kwargs = dict(
        bs_density=density_from_cell_radius(cell_radius),
        los=ExponentialLos.from_range(141.4) if los is None else los,
        pathloss=PathLossParams(2.0, 4.0, c0, c0),
        fading=FadingParams(3, 2),
        tx_power=dbm_to_watts(tx_power_dbm),
        noise_norm=noise_power_normalized(bandwidth, tx_power_dbm, noise_figure_db),
        bandwidth=bandwidth,
        sinr_cap=63.0,
    )
    kwargs.update(overrides)
    return NetworkConfig(**kwargs)


# --------------------------------------------------------------------------
# LOS counts and the equivalent ball
# --------------------------------------------------------------------------


def mean_los_count(model: LosModel, density) -> float:
    """Average number of LOS base stations seen by the typical user."""
    m = model.total_moment
    if not math.isfinite(m):
        raise InfiniteMeanCount("mean LOS count is infinite: int p(t) t dt diverges")
    return 2 * math.pi * density * m


def equivalent_ball_radius_mean(model: LosModel) -> float:
    """Ball radius with the same mean LOS count as ``model``."""
    m = model.total_moment
    if not math.isfinite(m):
        raise InfiniteMeanCount(
            "first moment of p is infinite; match the LOS association "
            "probability instead (equivalent_ball_radius_assoc)"
        )
    return math.sqrt(2 * m)


def ball_radius_from_assoc(a_los, density) -> float:
    """Invert ``A_L = 1 - exp(-lambda pi R^2)``."""
    if not (0 <= a_los < 1):
        raise DomainError("LOS association probability must lie in [0, 1) for a finite radius")
    return math.sqrt(-math.log1p(-a_los) / (density * math.pi))


def equivalent_ball_radius_assoc(model: LosModel, config: NetworkConfig) -> float:
    """Ball radius that leaves the LOS association probability unchanged."""
    from .analytic import assoc_probabilities

    import dataclasses

    cfg = dataclasses.replace(config, los=model)
    a_los = assoc_probabilities(cfg).a_los
    if a_los >= 1.0:
        raise DomainError("LOS association probability is 1: equivalent radius is infinite")
    return ball_radius_from_assoc(a_los, config.bs_density)


def avg_cell_radius(density) -> float:
    if not density > 0:
        raise DomainError("density must be positive")
    return math.sqrt(1.0 / (math.pi * density))


def density_from_cell_radius(cell_radius) -> float:
    if not cell_radius > 0:
        raise DomainError("cell radius must be positive")
    return 1.0 / (math.pi * cell_radius**2)


def density_from_relative(rho, ball_radius) -> float:
    """Density giving relative density ``rho`` for an LOS ball of ``ball_radius``."""
    return rho / (math.pi * ball_radius**2)


def ball_config(rho, ball_radius=200.0, **overrides) -> NetworkConfig:
    """mmWave configuration with an LOS ball of ``ball_radius`` and relative density ``rho``."""
    if not rho > 0:
        raise DomainError("relative density must be positive")
    kwargs = dict(los=BallLos(ball_radius), bs_density=density_from_relative(rho, ball_radius))
    kwargs.update(overrides)
    return mmwave_config(**kwargs)


def relative_density(config: NetworkConfig) -> float:
    """Mean LOS count of ``config`` (``pi lambda R_B^2`` for an LOS ball)."""
    return mean_los_count(config.los, config.bs_density)
