"""Repeat statistics for timing campaigns."""

from __future__ import annotations

import math
import statistics

SPREAD_FLOOR = 1e-15


class TooFewSamples(ValueError):
    pass


def chauvenet_filter(samples) -> tuple[list[float], list[float]]:
    """Single two-sided pass of Chauvenet's criterion.

    A point is rejected when N * erfc(|x - mean| / (std * sqrt(2))) < 0.5,
    with the sample (N-1) standard deviation. At most ceil(N/2) points are
    rejected; if more qualify, only the most deviant ones go.
    """
    xs = [float(x) for x in samples]
    n = len(xs)
    if n < 3:
        raise TooFewSamples(f"need at least 3 samples, got {n}")
    mu = statistics.fmean(xs)
    sd = statistics.stdev(xs)
    if sd < SPREAD_FLOOR:
        return xs, []

    flagged = [i for i, x in enumerate(xs)
               if n * math.erfc(abs(x - mu) / (sd * math.sqrt(2))) < 0.5]
    cap = math.ceil(n / 2)
    if len(flagged) > cap:
        flagged = sorted(flagged, key=lambda i: abs(xs[i] - mu), reverse=True)[:cap]
    drop = set(flagged)
    kept = [x for i, x in enumerate(xs) if i not in drop]
    rejected = [x for i, x in enumerate(xs) if i in drop]
    return kept, rejected


def summarize(samples, filter_outliers: bool = True):
    """(mean, std or None, kept samples) after optional Chauvenet filtering.

    Fewer than three samples are never filtered; std needs two kept samples.
    """
    xs = [float(x) for x in samples]
    if not xs:
        raise ValueError("no samples")
    kept = chauvenet_filter(xs)[0] if filter_outliers and len(xs) >= 3 else xs
    mean = statistics.fmean(kept)
    std = statistics.stdev(kept) if len(kept) >= 2 else None
    return mean, std, kept
