"""Flat ``section.key = value`` scenario files.

Grammar
-------
One assignment per line, ``key = value``; ``#`` starts a comment; blank lines
are ignored.  Values may carry a unit suffix which is converted at parse time
to linear SI quantities:

* ratios and gains: ``dB`` (``10 dB`` -> 10.0) or a bare linear number;
* powers: ``dBm``, ``W``;  noise density: ``dBm/Hz``, ``W/Hz``;
* lengths: ``m``, ``km``;  angles: ``deg``, ``rad`` (bare numbers are radians);
* frequencies: ``Hz``, ``kHz``, ``MHz``, ``GHz``;  rates: ``bps`` ... ``Gbps``.

Grids (thresholds, sweeps) are ``start:stop:step``, ``start:stop:logN`` (N
points evenly spaced in log) or a comma list, with one optional unit after the
whole grid, e.g. ``threshold = -10:40:1 dB``.  LOS tables are written
``los.table = 0:1, 50:0.8, 200:0.1``.

Every problem in a file is collected and reported together with its line.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import DomainError, MmcovError, ScenarioError

JOBS = ("coverage", "rate", "assoc", "dense", "sweep", "dominance", "validate")
SWEEP_VARS = ("rho", "cell_radius")
LOS_KINDS = ("exp", "ball", "table")

_UNITS = {
    "ratio": {"": None, "db": "db"},
    "power": {"": 1.0, "w": 1.0, "mw": 1e-3, "dbm": "dbm"},
    "density": {"": 1.0, "w/hz": 1.0, "dbm/hz": "dbm"},
    "length": {"": 1.0, "m": 1.0, "km": 1e3},
    "angle": {"": 1.0, "rad": 1.0, "deg": math.pi / 180},
    "freq": {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "rate": {"": 1.0, "bps": 1.0, "kbps": 1e3, "mbps": 1e6, "gbps": 1e9},
    "plain": {"": 1.0},
}


def _antenna_keys(prefix):
    return {f"{prefix}.main": ("ratio",), f"{prefix}.side": ("ratio",),
            f"{prefix}.beamwidth": ("angle",), f"{prefix}.omni": ("bool",)}


#: key -> (kind, ...) ; kinds: ratio/power/density/length/angle/freq/rate/plain
#: (scalars), int, bool, choice, grid:<unit kind>, table, path
KEYS = {
    "job": ("choice", JOBS),
    "output": ("path",),
    "seed": ("int",),
    "threshold": ("grid:ratio",),
    "network.cell_radius": ("length",),
    "network.density": ("plain",),
    "network.rho": ("plain",),
    "network.carrier": ("freq",),
    "network.bandwidth": ("freq",),
    "network.tx_power": ("power",),
    "network.noise_figure": ("ratio",),
    "network.noise_density": ("density",),
    "network.noise": ("ratio",),
    "network.sinr_cap": ("ratio",),
    "network.blockage_fraction": ("plain",),
    "los.model": ("choice", LOS_KINDS),
    "los.beta_inv": ("length",),
    "los.beta": ("plain",),
    "los.radius": ("length",),
    "los.table": ("table",),
    "pathloss.alpha_los": ("plain",),
    "pathloss.alpha_nlos": ("plain",),
    "pathloss.intercept_los": ("ratio",),
    "pathloss.intercept_nlos": ("ratio",),
    "fading.n_los": ("int",),
    "fading.n_nlos": ("int",),
    **_antenna_keys("antenna.tx"),
    **_antenna_keys("antenna.rx"),
    **_antenna_keys("dominance.tx"),
    **_antenna_keys("dominance.rx"),
    "mc.trials": ("int",),
    "mc.window": ("length",),
    "mc.dense": ("bool",),
    "mc.fading": ("bool",),
    "mc.batch": ("int",),
    "dense.rho": ("plain",),
    "dense.n_terms": ("int",),
    "dense.alpha": ("plain",),
    "dense.ball_radius": ("length",),
    "sweep.var": ("choice", SWEEP_VARS),
    "sweep.grid": ("grid:plain",),
    "rate.rho": ("grid:plain",),
    "rate.gamma": ("grid:rate",),
}

_POSITIVE_INTS = ("fading.n_los", "fading.n_nlos", "dense.n_terms", "mc.batch")

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_SCALAR_RE = re.compile(rf"^\s*({_NUM})\s*([A-Za-z/]*)\s*$")


def _split_unit(text):
    """Split a trailing unit word off ``text``; returns ``(body, unit_lower)``."""
    m = re.match(r"^(.*?)(?:\s*([A-Za-z][A-Za-z/]*))?\s*$", text.strip())
    body, unit = m.group(1), (m.group(2) or "")
    return body.strip(), unit.lower()


def _convert(value, unit, kind):
    table = _UNITS[kind]
    if unit not in table:
        allowed = ", ".join(u for u in table if u) or "none"
        raise ValueError(f"unit '{unit}' not valid here (allowed: {allowed})")
    factor = table[unit]
    if factor is None:
        return value
    if factor == "db":
        return 10 ** (value / 10)
    if factor == "dbm":
        return 10 ** ((value - 30) / 10)
    return value * factor


def _parse_scalar(text, kind):
    m = _SCALAR_RE.match(text)
    if not m:
        raise ValueError(f"expected a number, got '{text.strip()}'")
    return _convert(float(m.group(1)), m.group(2).lower(), kind)


def _parse_grid(text, kind):
    body, unit = _split_unit(text)
    if unit and unit not in _UNITS[kind]:
        raise ValueError(f"unit '{unit}' not valid here")
    if ":" in body:
        parts = [p.strip() for p in body.split(":")]
        if len(parts) != 3:
            raise ValueError("range must be start:stop:step or start:stop:logN")
        a, b = float(parts[0]), float(parts[1])
        if parts[2].lower().startswith("log"):
            n = int(parts[2][3:])
            if n < 2 or a <= 0 or b <= 0:
                raise ValueError("log grid needs positive ends and at least 2 points")
            raw = np.logspace(math.log10(a), math.log10(b), n)
        else:
            step = float(parts[2])
            if step <= 0 or b < a:
                raise ValueError("range needs stop >= start and a positive step")
            n = int(math.floor((b - a) / step + 1e-9)) + 1
            raw = a + step * np.arange(n)
    else:
        raw = [float(p) for p in body.split(",") if p.strip()]
        if not raw:
            raise ValueError("empty grid")
    return tuple(float(_convert(float(v), unit, kind)) for v in raw)


def _parse_value(key, text):
    entry = KEYS[key]
    kind = entry[0]
    text = text.strip()
    if kind == "choice":
        if text not in entry[1]:
            raise ValueError(f"must be one of {', '.join(entry[1])}")
        return text
    if kind == "path":
        if not text:
            raise ValueError("empty path")
        return text
    if kind == "int":
        try:
            v = float(text)
        except ValueError:
            raise ValueError(f"expected an integer, got '{text}'") from None
        if v != int(v) or (key in _POSITIVE_INTS and v < 1):
            raise ValueError("must be a positive integer" if key in _POSITIVE_INTS else "must be an integer")
        return int(v)
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError("expected true or false")
    if kind == "table":
        pairs = []
        for item in text.split(","):
            r, _, p = item.partition(":")
            pairs.append((float(r), float(p)))
        return tuple(pairs)
    if kind.startswith("grid:"):
        return _parse_grid(text, kind[5:])
    return float(_parse_scalar(text, kind))


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ", ".join(f"{r!r}:{p!r}" for r, p in v)
        return ", ".join(repr(x) for x in v)
    return str(v)


# --------------------------------------------------------------------------
# Scenario
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DenseParams:
    rho: float
    n_terms: int
    alpha: float
    ball_radius: float


@dataclass(frozen=True)
class Scenario:
    """A validated scenario; ``entries`` holds every key in canonical SI form."""

    entries: tuple

    def get(self, key, default=None):
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def __contains__(self, key):
        return any(k == key for k, _ in self.entries)

    @property
    def job(self) -> str:
        return self.get("job")

    @property
    def seed(self) -> int:
        return self.get("seed", 1)

    @property
    def output(self):
        return self.get("output")

    @property
    def thresholds(self) -> np.ndarray:
        t = self.get("threshold")
        return np.asarray(t) if t is not None else 10 ** (np.arange(-10, 41) / 10)

    @property
    def network(self) -> model.NetworkConfig:
        return _build_config(self)

    @property
    def dominance_b(self) -> model.NetworkConfig:
        base = self.network
        return dataclasses.replace(base, tx_antenna=_antenna(self, "dominance.tx", base.tx_antenna),
                                   rx_antenna=_antenna(self, "dominance.rx", base.rx_antenna))

    @property
    def mc_trials(self) -> int:
        return self.get("mc.trials", 0)

    def mc_settings(self, trials=None, dense_mode=None):
        from .montecarlo import McSettings

        return McSettings(
            n_trials=trials if trials is not None else max(self.mc_trials, 1),
            window_radius=self.get("mc.window"),
            seed=self.seed,
            dense_mode=self.get("mc.dense", False) if dense_mode is None else dense_mode,
            fading=self.get("mc.fading", True),
            batch_size=self.get("mc.batch", 1000),
        )

    @property
    def dense(self) -> DenseParams:
        cfg = self.network
        radius = self.get("dense.ball_radius")
        if radius is None:
            radius = cfg.los.radius if isinstance(cfg.los, model.BallLos) \
                else model.equivalent_ball_radius_mean(cfg.los)
        rho = self.get("dense.rho")
        if rho is None:
            rho = math.pi * cfg.bs_density * radius**2
        return DenseParams(rho, self.get("dense.n_terms", 5),
                           self.get("dense.alpha", cfg.pathloss.alpha_los), radius)

    def to_text(self) -> str:
        """Canonical scenario text; parsing it gives back an equal Scenario."""
        return "".join(f"{k} = {_format_value(v)}\n" for k, v in self.entries)

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.entries}


def _antenna(sc, prefix, default: model.SectoredAntenna):
    if sc.get(f"{prefix}.omni", False):
        return model.SectoredAntenna.omni()
    main = sc.get(f"{prefix}.main", default.main)
    side = sc.get(f"{prefix}.side", default.side)
    width = sc.get(f"{prefix}.beamwidth", default.beamwidth)
    return model.SectoredAntenna(main, side, width)


def _build_los(sc):
    kind = sc.get("los.model", "exp")
    if kind == "exp":
        if "los.beta" in sc:
            return model.ExponentialLos(sc.get("los.beta"))
        return model.ExponentialLos.from_range(sc.get("los.beta_inv", 141.4))
    if kind == "ball":
        return model.BallLos(sc.get("los.radius", 200.0))
    if "los.table" not in sc:
        raise DomainError("los.model = table needs los.table")
    return model.TabulatedLos.from_pairs(sc.get("los.table"))


def _build_config(sc) -> model.NetworkConfig:
    los = _build_los(sc)
    given = [k for k in ("network.cell_radius", "network.density", "network.rho") if k in sc]
    if len(given) > 1:
        raise DomainError("set only one of network.cell_radius, network.density, network.rho")
    if "network.density" in sc:
        density = sc.get("network.density")
    elif "network.rho" in sc:
        density = sc.get("network.rho") / model.mean_los_count(los, 1.0)
    else:
        density = model.density_from_cell_radius(sc.get("network.cell_radius", 100.0))
    carrier = sc.get("network.carrier", 28e9)
    bandwidth = sc.get("network.bandwidth", 100e6)
    tx_power = sc.get("network.tx_power", 1.0)
    nf = sc.get("network.noise_figure", 10.0)
    n0 = sc.get("network.noise_density", 10 ** (-204 / 10))
    if "network.noise" in sc:
        noise = sc.get("network.noise")
    else:
        noise = n0 * bandwidth * nf / tx_power
    c0 = model.free_space_intercept(carrier)
    base = model.NetworkConfig(bs_density=1.0, los=los)
    pl = model.PathLossParams(sc.get("pathloss.alpha_los", 2.0), sc.get("pathloss.alpha_nlos", 4.0),
                              sc.get("pathloss.intercept_los", c0), sc.get("pathloss.intercept_nlos", c0))
    fading = model.FadingParams(sc.get("fading.n_los", 3), sc.get("fading.n_nlos", 2))
    return model.NetworkConfig(
        bs_density=density, los=los, pathloss=pl, fading=fading,
        tx_antenna=_antenna(sc, "antenna.tx", base.tx_antenna),
        rx_antenna=_antenna(sc, "antenna.rx", base.rx_antenna),
        tx_power=tx_power, noise_norm=noise, bandwidth=bandwidth,
        sinr_cap=sc.get("network.sinr_cap", 63.0),
        blockage_fraction=sc.get("network.blockage_fraction", 0.0),
    )


def _strip_comment(line):
    return line.split("#", 1)[0].strip()


def _raw_assignments(text, source_issues, origin_line=None):
    raw = {}
    for ln, line in enumerate(text.splitlines(), 1):
        body = _strip_comment(line)
        if not body:
            continue
        where = origin_line if origin_line is not None else ln
        key, sep, value = body.partition("=")
        key = key.strip()
        if not sep or not key:
            source_issues.append((where, f"syntax error: expected 'key = value', got '{body}'"))
            continue
        if key in raw:
            source_issues.append((where, f"duplicate key '{key}' (first set on line {raw[key][0]})"))
            continue
        raw[key] = (where, value.strip())
    return raw


def parse_scenario(text: str, overrides=()) -> Scenario:
    """Parse and validate scenario text.

    ``overrides`` are ``key=value`` strings applied on top of the file.
    Raises :class:`ScenarioError` listing every violation.
    """
    issues = []
    raw = _raw_assignments(text, issues)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            issues.append((0, f"override '{item}' is not key=value"))
            continue
        raw[key.strip()] = (0, value.strip())

    entries = {}
    for key, (ln, value) in raw.items():
        if key not in KEYS:
            issues.append((ln, f"unknown key '{key}'"))
            continue
        try:
            entries[key] = _parse_value(key, value)
        except (ValueError, TypeError) as exc:
            issues.append((ln, f"{key}: {exc}"))

    def line_of(key):
        return raw.get(key, (0,))[0]

    # per-key invariants
    for key in ("mc.trials",):
        if key in entries and entries[key] < 0:
            issues.append((line_of(key), f"{key}: must be non-negative"))
    for key in ("network.cell_radius", "network.density", "network.rho", "network.bandwidth",
                "los.beta_inv", "los.beta", "los.radius", "dense.rho", "dense.alpha",
                "dense.ball_radius", "mc.window", "pathloss.alpha_los", "pathloss.alpha_nlos"):
        if key in entries and not entries[key] > 0:
            issues.append((line_of(key), f"{key}: must be positive"))
    if "job" not in entries and "job" not in raw:
        issues.append((0, "missing required key 'job'"))
    job = entries.get("job")
    if job == "sweep":
        for key in ("sweep.var", "sweep.grid"):
            if key not in entries and key not in raw:
                issues.append((0, f"job = sweep needs '{key}'"))
    if job == "dominance" and not any(k.startswith("dominance.") for k in raw):
        issues.append((0, "job = dominance needs at least one dominance.* antenna override"))
    if job == "validate" and entries.get("mc.trials", 1) < 1:
        issues.append((line_of("mc.trials"), "job = validate needs mc.trials >= 1"))
    if "threshold" in entries and any(t <= 0 for t in entries["threshold"]):
        issues.append((line_of("threshold"), "threshold: values must be positive (linear)"))

    if issues:
        raise ScenarioError(sorted(issues, key=lambda x: x[0]))
    sc = Scenario(tuple(sorted(entries.items())))
    # cross-key checks through the model constructors
    try:
        sc.network
        if job == "dominance":
            sc.dominance_b
        if job in ("dense", "sweep", "rate"):
            sc.dense
        if sc.mc_trials or job == "validate":
            sc.mc_settings()
    except MmcovError as exc:
        raise ScenarioError([(0, str(exc))]) from exc
    return sc
