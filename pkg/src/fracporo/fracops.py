"""Grünwald-Letnikov fractional derivatives on uniformly sampled signals.

The GL sum approximates the Riemann-Liouville derivative. It agrees with the
Caputo derivative only for signals that start at zero; a constant signal
``c`` has RL derivative ``c t^-beta / Gamma(1 - beta)``, not zero. The
consolidation closed forms in :mod:`fracporo.analytic` are RL solutions, so the
solver applies the operator to the raw history without subtracting the
initial state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fracporo.specialfn import gamma, mittag_leffler, rgamma

__all__ = [
    "SampledSignal",
    "gl_coefficients",
    "gl_derivative",
    "caputo_oracle_power",
    "ml_fractional_derivative_identity",
]


@dataclass(frozen=True)
class SampledSignal:
    """Samples ``values[k]`` of a signal at ``t0 + k * dt``."""

    dt: float
    values: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if vals.size == 0:
            raise ValueError("signal is empty")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "values", vals)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @classmethod
    def from_function(cls, f, dt: float, t_end: float) -> "SampledSignal":
        n = int(round(t_end / dt))
        t = dt * np.arange(n + 1)
        return cls(dt=dt, values=np.asarray(f(t), dtype=float))


def gl_coefficients(beta: float, k: int) -> np.ndarray:
    """GL weights ``c[1..k]`` (returned 0-based): c1 = 1, c_{j+1} = (j-1-beta)/j c_j.

    These are the coefficients of ``(1 - x)**beta``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    c = np.empty(k)
    c[0] = 1.0
    j = np.arange(1, k)
    c[1:] = np.cumprod((j - 1.0 - beta) / j)
    return c


def gl_derivative(signal: SampledSignal, beta: float, window: int | None = None) -> SampledSignal:
    """GL derivative of order ``beta``: ``dt^-beta * sum_{j=1}^{k+1} c_j v[k-j+1]``.

    ``window`` truncates the memory to the most recent ``window`` samples
    (short-memory principle); ``None`` keeps the full history.
    """
    v = signal.values
    n = v.size
    if n == 0:
        raise ValueError("signal is empty")
    if window is not None and window < 1:
        raise ValueError("window must be at least 1")
    m = n if window is None else min(n, window)
    c = gl_coefficients(beta, m)
    out = np.convolve(v, c)[:n] * signal.dt ** (-beta)
    return SampledSignal(dt=signal.dt, values=out, t0=signal.t0)


def caputo_oracle_power(beta: float, p: float, t):
    """Exact Caputo derivative of ``t**p``: ``Gamma(p+1)/Gamma(p+1-beta) t^(p-beta)``."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    if p <= 0.0:
        raise ValueError(f"exponent p must be positive, got {p}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("t must be positive")
    out = gamma(p + 1.0) * rgamma(p + 1.0 - beta) * t ** (p - beta)
    return float(out) if out.ndim == 0 else out


def ml_fractional_derivative_identity(alpha: float, mu: float, b: float, lam: float, t, tol: float = 1e-12):
    """Closed form of ``D^alpha [t^(b-1) E_{mu,b}(lam t^mu)]``.

    Equals ``t^(b-1-alpha) E_{mu,b-alpha}(lam t^mu)`` (Riemann-Liouville
    derivative with lower terminal 0).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("t must be positive")
    if b - alpha <= 0.0:
        raise ValueError("b - alpha must be positive")
    z = lam * t**mu
    out = t ** (b - 1.0 - alpha) * mittag_leffler(mu, b - alpha, z, tol)
    return float(out) if np.ndim(out) == 0 else out
