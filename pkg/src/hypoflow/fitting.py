"""Least-squares rate and exponent fits on trajectory tails."""

from __future__ import annotations

import numpy as np

__all__ = ["tail_window", "log_slope", "fit_exponential_rate", "fit_algebraic_exponent"]


def tail_window(times, values, drop: float = 1e4) -> tuple[float, float]:
    """Window [T/2, T] with T the first time the value has dropped by `drop`.

    Falls back to the full horizon when the drop is never reached.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    v0 = values[0]
    below = np.nonzero(values <= v0 / drop)[0]
    t_end = times[below[0]] if below.size else times[-1]
    if t_end <= 0:
        t_end = times[-1]
    return 0.5 * t_end, t_end


def log_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = y > 0
    if mask.sum() < 2:
        raise ValueError("not enough positive samples to fit a slope")
    coef = np.polyfit(x[mask], np.log(y[mask]), 1)
    return float(coef[0])


def fit_exponential_rate(times, values, window: tuple[float, float] | None = None,
                         drop: float = 1e4) -> float:
    """Decay rate r with values ~ exp(-r t), fitted on the tail window."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window if window is not None else tail_window(times, values, drop)
    mask = (times >= lo) & (times <= hi)
    return -log_slope(times[mask], values[mask])


def fit_algebraic_exponent(times, values, window: tuple[float, float] | None = None) -> float:
    """Exponent p with values ~ (1+t)^p, fitted on the tail window.

    The default window is [T/2, T] with T the final sample time.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        window = (0.5 * times[-1], times[-1])
    lo, hi = window
    mask = (times >= lo) & (times <= hi)
    return log_slope(np.log1p(times[mask]), values[mask])
