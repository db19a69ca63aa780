"""Monte-Carlo simulation of the typical user's SINR.

Each trial owns two substreams derived from ``(seed, trial)``: substream 0
drives the Poisson arrival epochs and substream 1 a row of uniforms per point
(angle, LOS mark, transmit and receive lobe, fading).  Points are generated in
order of increasing radius, so the realization inside a smaller window is a
prefix of the one inside a larger window, and two configurations that differ
only in their antennas see exactly the same geometry, LOS marks and fading.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .analytic import AssocReport, CoverageCurve
from .errors import DomainError
from .model import BallLos, ExponentialLos, NetworkConfig, equivalent_ball_radius_mean
from .numerics import RandomStream, poisson_arrivals

#: columns of the per-point uniform row before the fading columns
_ANGLE, _LOS, _TX, _RX = range(4)
_FIXED_COLS = 4
MIN_WINDOW = 2000.0


@dataclass(frozen=True)
class McSettings:
    """Trial count, simulation window and seed.

    ``dense_mode`` keeps only base stations inside the LOS ball, without
    fading or noise.  ``fading=False`` switches small-scale fading off in the
    full model while keeping NLOS base stations and noise.
    """

    n_trials: int = 10_000
    window_radius: float | None = None
    seed: int = 1
    dense_mode: bool = False
    fading: bool = True
    batch_size: int = 1000

    def __post_init__(self):
        if self.n_trials < 1:
            raise DomainError("n_trials must be at least 1")
        if self.window_radius is not None and not self.window_radius > 0:
            raise DomainError("window radius must be positive")
        if self.batch_size < 1:
            raise DomainError("batch size must be at least 1")


def dense_ball_radius(config: NetworkConfig) -> float:
    """LOS-ball radius used in dense mode (the equivalent ball for non-step laws)."""
    if isinstance(config.los, BallLos):
        return config.los.radius
    return equivalent_ball_radius_mean(config.los)


def default_window(config: NetworkConfig, dense_mode=False) -> float:
    if dense_mode:
        return dense_ball_radius(config)
    los = config.los
    if isinstance(los, ExponentialLos):
        reach = 10.0 / los.beta
    elif isinstance(los, BallLos):
        reach = 5.0 * los.radius
    else:
        reach = float(los.breakpoints[-1]) if len(los.breakpoints) else 0.0
    return max(reach, MIN_WINDOW)


def _window(config, settings):
    if settings.dense_mode:
        # base stations beyond the ball are dropped in dense mode
        return dense_ball_radius(config)
    return settings.window_radius or default_window(config)


@dataclass
class NetworkRealization:
    """One Poisson field around the typical user, sorted by radius."""

    radius: np.ndarray
    angle: np.ndarray
    is_los: np.ndarray
    fading: np.ndarray
    directivity: np.ndarray
    tx_main: np.ndarray
    rx_main: np.ndarray
    window_radius: float
    seed: int
    trial: int
    dense_mode: bool = False

    def __len__(self):
        return self.radius.size


def _uniform_rows(config, settings):
    n_fade = max(config.fading.n_los, config.fading.n_nlos) if settings.fading and not settings.dense_mode else 0
    return _FIXED_COLS + n_fade


def _draw_trial(config, settings, trial, window):
    """Raw radii and mark uniforms for one trial."""
    stream = RandomStream(settings.seed, trial)
    mass = config.bs_density * math.pi * window**2
    epochs = poisson_arrivals(stream.generator(0), mass)
    radius = np.sqrt(epochs / (math.pi * config.bs_density))
    marks = stream.generator(1).random((radius.size, _uniform_rows(config, settings)))
    return radius, marks


def _marks(config, settings, radius, u):
    """LOS flags and fading gains from the uniform rows."""
    if settings.dense_mode:
        is_los = np.ones(radius.size, dtype=bool)
    else:
        is_los = u[:, _LOS] < np.asarray(config.los.prob(radius))
    if settings.fading and not settings.dense_mode:
        # Erlang(N) / N from N exponential columns
        expo = -np.log1p(-u[:, _FIXED_COLS:])
        fl, fn = config.fading.n_los, config.fading.n_nlos
        fading = np.where(is_los, expo[:, :fl].sum(axis=1) / fl, expo[:, :fn].sum(axis=1) / fn)
    else:
        fading = np.ones(radius.size)
    return is_los, fading


def _gains(config, radius, is_los):
    pl = config.pathloss
    with np.errstate(divide="ignore"):
        return np.where(is_los, pl.intercept_los * radius ** -pl.alpha_los,
                        pl.intercept_nlos * radius ** -pl.alpha_nlos)


def _directivity(config, u):
    tx, rx = config.tx_antenna, config.rx_antenna
    tx_main = u[:, _TX] < tx.main_lobe_fraction
    rx_main = u[:, _RX] < rx.main_lobe_fraction
    d = np.where(tx_main, tx.main, tx.side) * np.where(rx_main, rx.main, rx.side)
    return d, tx_main, rx_main


def sample_realization(config: NetworkConfig, settings: McSettings, trial_index: int) -> NetworkRealization:
    """The Poisson field seen in trial ``trial_index`` (reproducible from the seed)."""
    window = _window(config, settings)
    radius, u = _draw_trial(config, settings, trial_index, window)
    is_los, fading = _marks(config, settings, radius, u)
    d, tx_main, rx_main = _directivity(config, u)
    angle = u[:, _ANGLE] * 2 * math.pi - math.pi
    return NetworkRealization(radius, angle, is_los, fading, d, tx_main, rx_main, window,
                              settings.seed, trial_index, settings.dense_mode)


def sinr_sample(real: NetworkRealization, config: NetworkConfig) -> float:
    """SINR of the typical user in one realization (0 when no base station is present)."""
    noise = 0.0 if real.dense_mode else config.noise_norm
    gain = _gains(config, real.radius, real.is_los)
    signal = real.fading * config.boresight_gain * gain
    interf = real.fading * real.directivity * gain
    sinr, _ = kernels.sinr_batch_full(gain, signal, interf, np.array([0, real.radius.size]), noise)
    return float(sinr[0])


@dataclass
class TrialBatch:
    """Per-trial outcomes of a simulation run."""

    sinr: np.ndarray  # one column per configuration
    serving_tier: np.ndarray  # 1 LOS, 0 NLOS, -1 none
    serving_radius: np.ndarray
    nearest_los: np.ndarray  # nan when the trial has no LOS point
    los_count: np.ndarray
    point_count: np.ndarray


def simulate(configs, settings: McSettings) -> TrialBatch:
    """Run ``settings.n_trials`` trials for configurations that share geometry.

    All configurations must differ only in their antennas; they are evaluated
    on the same realizations.
    """
    if isinstance(configs, NetworkConfig):
        configs = [configs]
    base = configs[0]
    for c in configs[1:]:
        _check_antenna_only(base, c)
    window = _window(base, settings)
    noise = 0.0 if settings.dense_mode else base.noise_norm
    n = settings.n_trials
    sinr = np.empty((n, len(configs)))
    tier = np.empty(n, dtype=np.int8)
    srv_r = np.full(n, np.nan)
    near = np.full(n, np.nan)
    count = np.zeros(n, dtype=np.int64)
    total = np.zeros(n, dtype=np.int64)

    for start in range(0, n, settings.batch_size):
        stop = min(n, start + settings.batch_size)
        radii, rows = [], []
        for trial in range(start, stop):
            r, u = _draw_trial(base, settings, trial, window)
            radii.append(r)
            rows.append(u)
        offsets = np.zeros(stop - start + 1, dtype=np.int64)
        np.cumsum([r.size for r in radii], out=offsets[1:])
        radius = np.concatenate(radii)
        u = np.concatenate(rows) if rows else np.empty((0, _uniform_rows(base, settings)))
        is_los, fading = _marks(base, settings, radius, u)
        gain = _gains(base, radius, is_los)

        for j, cfg in enumerate(configs):
            d, _, _ = _directivity(cfg, u)
            signal = fading * cfg.boresight_gain * gain
            interf = fading * d * gain
            s, srv = kernels.sinr_batch_full(gain, signal, interf, offsets, noise)
            sinr[start:stop, j] = s
            if j == 0:
                ok = srv >= 0
                tier[start:stop] = np.where(ok, is_los[np.maximum(srv, 0)].astype(np.int8), -1)
                srv_r[start:stop] = np.where(ok, radius[np.maximum(srv, 0)], np.nan)

        # the first LOS point of each radius-sorted trial is the nearest one
        counts = np.diff(offsets)
        total[start:stop] = counts
        trial_of = np.repeat(np.arange(stop - start), counts)
        count[start:stop] = np.bincount(trial_of[is_los], minlength=stop - start)
        first = np.full(stop - start, -1, dtype=np.int64)
        los_idx = np.flatnonzero(is_los)
        if los_idx.size:
            t_of = trial_of[los_idx]
            keep = np.r_[True, t_of[1:] != t_of[:-1]]
            first[t_of[keep]] = los_idx[keep]
        near[start:stop] = np.where(first >= 0, radius[np.maximum(first, 0)], np.nan)
    return TrialBatch(sinr, tier, srv_r, near, count, total)


def _binomial_stderr(p, n):
    return np.sqrt(np.maximum(p * (1 - p), 0.0) / n)


def coverage_from_sinr(sinr, thresholds) -> CoverageCurve:
    t = np.asarray(thresholds, dtype=float)
    s = np.sort(np.asarray(sinr, dtype=float))
    n = s.size
    # P(SINR > T) from the sorted samples
    p = (n - np.searchsorted(s, t, side="right")) / n
    return CoverageCurve(t, p, "monte-carlo", stderr=_binomial_stderr(p, n), meta={"n_trials": n})


def empirical_coverage(config: NetworkConfig, settings: McSettings, thresholds) -> CoverageCurve:
    """Monte-Carlo SINR coverage with binomial standard errors."""
    batch = simulate(config, settings)
    curve = coverage_from_sinr(batch.sinr[:, 0], thresholds)
    curve.meta.update(seed=settings.seed, window_radius=_window(config, settings),
                      dense_mode=settings.dense_mode, backend=kernels.BACKEND)
    return curve


def empirical_association(config: NetworkConfig, settings: McSettings) -> AssocReport:
    """Frequencies of LOS-serving, NLOS-serving and tier-presence events.

    Trials with no base station in the window count in neither association
    frequency.  ``stderr`` is the binomial standard error of ``a_los``.
    """
    batch = simulate(config, settings)
    n = settings.n_trials
    a_los = float(np.mean(batch.serving_tier == 1))
    a_nlos = float(np.mean(batch.serving_tier == 0))
    b_los = float(np.mean(batch.los_count > 0))
    b_nlos = float(np.mean(batch.point_count > batch.los_count))
    return AssocReport(a_los, a_nlos, b_los, b_nlos, stderr=float(_binomial_stderr(a_los, n)))


def nearest_los_samples(config: NetworkConfig, settings: McSettings) -> np.ndarray:
    """Distances to the nearest LOS base station over trials that have one."""
    near = simulate(config, settings).nearest_los
    return near[np.isfinite(near)]


def serving_distance_samples(config: NetworkConfig, settings: McSettings, tier="los") -> np.ndarray:
    """Serving distances over trials associated with ``tier``."""
    if tier not in ("los", "nlos"):
        raise DomainError("tier must be 'los' or 'nlos'")
    batch = simulate(config, settings)
    return batch.serving_radius[batch.serving_tier == (1 if tier == "los" else 0)]


# --------------------------------------------------------------------------
# Stochastic dominance
# --------------------------------------------------------------------------

VERDICTS = ("a_dominates", "b_dominates", "crossing", "indistinguishable")


def _check_antenna_only(a: NetworkConfig, b: NetworkConfig):
    ignore = {"tx_antenna", "rx_antenna"}
    diff = [f.name for f in dataclasses.fields(NetworkConfig)
            if f.name not in ignore and getattr(a, f.name) != getattr(b, f.name)]
    if diff:
        raise DomainError("configurations must differ only in antennas; also differ in: " + ", ".join(diff))


@dataclass
class DominanceResult:
    verdict: str
    curve_a: CoverageCurve
    curve_b: CoverageCurve
    diff: np.ndarray
    diff_stderr: np.ndarray
    sinr_a: np.ndarray
    sinr_b: np.ndarray

    @property
    def per_trial_a_geq_b(self) -> bool:
        """Whether the SINR under ``a`` is at least that under ``b`` in every trial."""
        return bool(np.all(self.sinr_a >= self.sinr_b * (1 - 1e-12)))


def dominance_check(config_a: NetworkConfig, config_b: NetworkConfig, settings: McSettings,
                    thresholds, n_se=3.0) -> DominanceResult:
    """Compare two antenna configurations on coupled realizations.

    The paired coverage difference at each threshold is tested against
    ``n_se`` standard errors of the paired indicator difference.
    """
    _check_antenna_only(config_a, config_b)
    batch = simulate([config_a, config_b], settings)
    sa, sb = batch.sinr[:, 0], batch.sinr[:, 1]
    t = np.asarray(thresholds, dtype=float)
    ia = sa[:, None] > t[None, :]
    ib = sb[:, None] > t[None, :]
    d = (ia.astype(float) - ib.astype(float))
    mean = d.mean(axis=0)
    se = d.std(axis=0, ddof=1) / math.sqrt(d.shape[0]) if d.shape[0] > 1 else np.zeros_like(mean)
    above = mean > n_se * se
    below = mean < -n_se * se
    if np.any(above) and np.any(below):
        verdict = "crossing"
    elif np.any(above):
        verdict = "a_dominates"
    elif np.any(below):
        verdict = "b_dominates"
    else:
        verdict = "indistinguishable"
    return DominanceResult(verdict, coverage_from_sinr(sa, t), coverage_from_sinr(sb, t),
                           mean, se, sa, sb)
