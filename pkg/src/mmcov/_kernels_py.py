"""Pure-numpy SINR kernel, used when the compiled extension is unavailable."""

import numpy as np


def sinr_batch_full(gain, signal_power, interf_power, offsets, noise):
    """Return ``(sinr, serving_index)`` for each trial.

    ``serving_index`` is the global index of the serving point, ``-1`` for an
    empty trial (whose SINR is 0).  The first point with maximal ``gain`` wins,
    which within a radius-sorted trial breaks ties by radius then index.
    """
    gain = np.asarray(gain, dtype=float)
    signal_power = np.asarray(signal_power, dtype=float)
    interf_power = np.asarray(interf_power, dtype=float)
    offsets = np.asarray(offsets, dtype=np.int64)
    n = offsets.size - 1
    sinr = np.zeros(n)
    serving = np.full(n, -1, dtype=np.int64)
    counts = np.diff(offsets)
    nonempty = counts > 0
    if not np.any(nonempty):
        return sinr, serving
    starts = offsets[:-1][nonempty]
    trial_of = np.repeat(np.arange(n), counts)

    best_gain = np.maximum.reduceat(gain, starts)
    # first index attaining the maximum in each trial
    hit = gain == np.repeat(best_gain, counts[nonempty])
    idx = np.arange(gain.size)
    first = np.full(n, gain.size, dtype=np.int64)
    np.minimum.at(first, trial_of[hit], idx[hit])
    srv = first[nonempty]

    masked = interf_power.copy()
    masked[srv] = 0.0
    total_interf = np.add.reduceat(masked, starts)
    denom = noise + total_interf
    with np.errstate(divide="ignore"):
        vals = np.where(denom > 0, signal_power[srv] / np.where(denom > 0, denom, 1.0), np.inf)
    sinr[nonempty] = vals
    serving[nonempty] = srv
    return sinr, serving
