"""Closed-form solutions of 1D confined compression with a fractional Darcy law.

Geometry: the load ``P_A`` acts on the impermeable top face ``z = 0``; the base
``z = h`` is drained and fixed. Every field is a sum over odd harmonics
``n = 1, 3, 5, ...`` of Mittag-Leffler functions of

    x_n(t) = n^2 pi^2 lambda_bar t^(1-beta) / (4 h^2).

Oscillating series (pressure, interior displacement) are summed in chunks and
stopped per point once the bound on the last term falls below ``series_tol``
(relative to the natural scale of the field), or at ``n_max``. The monotone
series (top displacement, drained volume, base flux) sum their far modes in
closed form and need no cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from fracporo.material import (
    BiphasicParams,
    IncompressibleParams,
    MaterialParams,
    derive,
)
from fracporo.specialfn import mittag_leffler, rgamma

__all__ = [
    "ConsolidationProblem",
    "pore_pressure",
    "displacement",
    "displacement_incompressible",
    "flux_at_base",
    "normalized_flux_constant_gradient",
    "weight_loss",
    "fluid_volume_lost",
    "terzaghi_classical",
    "biphasic_displacement",
    "dimensionless_time",
]

ML_TOL = 1e-12


@dataclass(frozen=True)
class ConsolidationProblem:
    h: float
    P_A: float
    params: MaterialParams | IncompressibleParams
    series_tol: float = 1e-10
    n_max: int = 9999

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.P_A > 0:
            raise ValueError("P_A must be positive")
        if not self.series_tol > 0:
            raise ValueError("series_tol must be positive")
        if self.n_max < 1 or self.n_max % 2 == 0:
            raise ValueError("n_max must be odd and at least 1")

    @property
    def derived(self):
        return derive(self.params)

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def settlement_modulus(self) -> float:
        """(3K + 4G)/3, the confined drained modulus."""
        return self.derived.M


def dimensionless_time(prob: ConsolidationProblem, t):
    """lambda_bar t^(1-beta) / h^2."""
    t = np.asarray(t, dtype=float)
    return prob.derived.lambda_bar * t ** (1.0 - prob.beta) / prob.h**2


def _check_t(t, strict: bool = False):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)):
        raise ValueError("t must be finite")
    if strict and np.any(t <= 0):
        raise ValueError("t must be positive here: the expression is singular at t = 0")
    if np.any(t < 0):
        raise ValueError("the series diverges for t < 0")
    return t


def _check_z(z, h):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > h * (1 + 1e-12)):
        raise ValueError(f"z must lie in [0, h] = [0, {h}]")
    return z


_CHUNK_CELLS = 1 << 22


def _mode_series(prob, b, t, weight, bound, tol_abs, relative=False):
    """Sum_n E_{1-beta,b}(-x_n(t)) * weight(n, idx) at flattened points.

    ``weight(n, idx)`` returns an (len(idx), len(n)) array for the active
    points; ``bound(n)`` bounds |weight| over z. With ``relative`` the stopping
    threshold is ``tol_abs * |partial sum|``.
    """
    a = 1.0 - prob.beta
    c = math.pi**2 * prob.derived.lambda_bar / (4.0 * prob.h**2)
    npts = t.size
    total = np.zeros(npts)
    active = np.ones(npts, dtype=bool)
    n_lo, chunk = 1, 16
    while n_lo <= prob.n_max and active.any():
        idx = np.flatnonzero(active)
        # keep the (points x modes) work arrays near 2^22 entries
        width = max(16, min(chunk, _CHUNK_CELLS // idx.size))
        n = np.arange(n_lo, min(n_lo + 2 * width, prob.n_max + 1), 2, dtype=float)
        tu, inv = np.unique(t[idx], return_inverse=True)
        x = c * np.outer(tu**a, n**2)
        E = mittag_leffler(a, b, -x, ML_TOL)
        total[idx] += np.sum(E[inv] * weight(n, idx), axis=1)
        last = bound(n[-1:])[0] * np.abs(E[inv, -1])
        thresh = tol_abs * np.abs(total[idx]) if relative else tol_abs
        active[idx[last < thresh]] = False
        n_lo = int(n[-1]) + 2
        chunk *= 2
    return total


_TAIL_TERMS = 20


def _tail_threshold(a: float, b: float, tol: float) -> tuple[float, np.ndarray]:
    """Smallest x beyond which the first _TAIL_TERMS algebraic terms of
    E_{a,b}(-x) carry relative error below ``tol``, and those coefficients."""
    k = np.arange(1, _TAIL_TERMS + 3)
    coef = rgamma(b - a * k)
    if a == 1.0:
        # algebraic terms vanish; only exp(-x) remains
        return -math.log(tol) + 5.0, coef[:_TAIL_TERMS]
    lead = int(np.flatnonzero(np.abs(coef) > 1e-300)[0])
    nxt = np.abs(coef[_TAIL_TERMS:])
    powers = k[_TAIL_TERMS:] - k[lead]
    X = max(float(np.max((nxt / (tol * abs(coef[lead]))) ** (1.0 / powers))), 1.0)
    return X, coef[:_TAIL_TERMS]


def _short_time_switch(a: float) -> float:
    """x1 below which the Poisson-summation (half-space) form is exact to rounding.

    The neglected image terms decay like exp(-c r^(1/(1-v))) with v = a/2,
    c = (1-v) v^(v/(1-v)) and r = pi/sqrt(x1); the switch keeps that exponent at 50.
    """
    v = a / 2.0
    c = (1.0 - v) * v ** (v / (1.0 - v))
    r = (50.0 / c) ** (1.0 - v)
    return (math.pi / r) ** 2


def _odd_mode_sum(a: float, b: float, p: int, x1: np.ndarray, tol: float):
    """sum over odd n of n^-p E_{a,b}(-n^2 x1) for x1 > 0; (b, p) is (1, 2) or (a, 0).

    Modes with n^2 x1 beyond the asymptotic threshold are summed in closed form:
    sum_k (-1)^(k+1) x1^-k / Gamma(b - a k) * sum_{odd n >= N0} n^-(2k+p), the
    inner sum being 2^-s zeta(s, N0/2). For small x1 the Poisson-summation
    leading term is used instead:
      (1, 2): pi^2/8 - pi sqrt(x1) / (4 Gamma(1 + a/2))
      (a, 0): pi / (4 sqrt(x1) Gamma(a/2))
    """
    if (b, p) not in ((1.0, 2), (a, 0)):
        raise ValueError("unsupported series")
    x1 = np.asarray(x1, dtype=float)
    out = np.empty_like(x1)
    small = x1 < _short_time_switch(a)
    if p == 2:
        out[small] = math.pi**2 / 8.0 - math.pi * np.sqrt(x1[small]) * rgamma(1.0 + a / 2.0) / 4.0
    else:
        out[small] = math.pi * rgamma(a / 2.0) / (4.0 * np.sqrt(x1[small]))
    big = ~small
    if not big.any():
        return out
    X, coef = _tail_threshold(a, b, tol)
    xi = x1[big]
    ni = np.ceil(np.sqrt(X / xi))
    ni = ni + (ni % 2 == 0)  # first odd n in the closed-form part
    n = np.arange(1, int(ni.max()), 2, dtype=float)
    acc = np.zeros_like(xi)
    if n.size:
        keep = n[None, :] < ni[:, None]
        xu, inv = np.unique(xi, return_inverse=True)
        E = mittag_leffler(a, b, -np.outer(xu, n**2), ML_TOL)[inv]
        acc += np.sum(np.where(keep, E * n ** (-float(p)), 0.0), axis=1)
    if a != 1.0:
        k = np.arange(1, coef.size + 1, dtype=float)
        s = 2.0 * k + p
        hz = zeta(s[None, :], (ni / 2.0)[:, None]) * 2.0 ** (-s)[None, :]
        sgn = np.where(k % 2 == 1, 1.0, -1.0)
        acc += np.sum(sgn * coef * xi[:, None] ** (-k) * hz, axis=1)
    out[big] = acc
    return out


def _closed_tail_series(prob, a, b, p, t, tol):
    """Odd-mode sum of n^-p E_{a,b}(-x_n(t)) for t > 0."""
    c = math.pi**2 * prob.derived.lambda_bar / (4.0 * prob.h**2)
    return _odd_mode_sum(a, b, p, c * t ** (1.0 - prob.beta), tol)


def _flatten(z, t):
    zb, tb = np.broadcast_arrays(np.asarray(z, float), np.asarray(t, float))
    return zb.shape, zb.ravel(), tb.ravel()


def _shape_out(vals, shape):
    return float(vals[0]) if shape == () else vals.reshape(shape)


def pore_pressure(prob: ConsolidationProblem, z, t):
    """Pore pressure p(z, t) in Pa; ``z`` and ``t`` broadcast."""
    z = _check_z(z, prob.h)
    t = _check_t(t)
    shape, zf, tf = _flatten(z, t)
    h = prob.h

    def weight(n, idx):
        cn = 4.0 / (n * math.pi) * np.where(((n - 1) // 2) % 2 == 0, 1.0, -1.0)
        return cn[None, :] * np.cos(np.outer(zf[idx], n) * math.pi / (2 * h))

    s = _mode_series(prob, 1.0, tf, weight, lambda n: 4.0 / (n * math.pi), prob.series_tol)
    s[zf >= h] = 0.0
    return _shape_out(prob.P_A * prob.derived.gamma * s, shape)


def _disp_weight(zf, h):
    def weight(n, idx):
        sgn = np.where(((n - 1) // 2) % 2 == 0, 1.0, -1.0)
        sn = np.sin(np.outer(zf[idx], n) * math.pi / (2 * h))
        return (8.0 * h / (n * math.pi) ** 2)[None, :] * (sgn[None, :] * sn - 1.0)

    return weight


def displacement(prob: ConsolidationProblem, z, t):
    """Displacement u(z, t) in m (positive toward the drained base)."""
    z = _check_z(z, prob.h)
    t = _check_t(t)
    shape, zf, tf = _flatten(z, t)
    h = prob.h
    d = prob.derived
    ga = d.gamma * prob.params.alpha
    s = np.empty_like(tf)
    # at t = 0 every Mittag-Leffler factor is 1 and the series sums to -(h - z)
    zero = tf == 0.0
    s[zero] = -(h - zf[zero])
    pos = ~zero
    if pos.any():
        zp = zf[pos]
        if np.all(zp == 0.0):
            s[pos] = -8.0 * h / math.pi**2 * _closed_tail_series(prob, 1.0 - prob.beta, 1.0, 2, tf[pos], prob.series_tol)
        else:
            s[pos] = _mode_series(
                prob, 1.0, tf[pos], _disp_weight(zp, h), lambda n: 16.0 * h / (n * math.pi) ** 2, prob.series_tol * h
            )
    u = (prob.P_A / d.M) * ((h - zf) + ga * s)
    u[zf >= h] = 0.0
    return _shape_out(u, shape)


def displacement_incompressible(M, beta, lambda_beta, h, P_A, t, series_tol: float = 1e-10, n_max: int = 9999):
    """Top-face creep curve u(0, t) for incompressible constituents."""
    prob = ConsolidationProblem(
        h=h,
        P_A=P_A,
        params=IncompressibleParams(M=M, beta=beta, lambda_beta=lambda_beta),
        series_tol=series_tol,
        n_max=n_max,
    )
    return displacement(prob, 0.0, t)


def flux_at_base(prob: ConsolidationProblem, t):
    """Fluid discharge per unit area leaving through the drained base (m/s)."""
    t = _check_t(t, strict=True)
    shape = t.shape
    tf = t.ravel()
    beta = prob.beta
    a = 1.0 - beta

    s = _closed_tail_series(prob, a, a, 0, tf, prob.series_tol)
    d = prob.derived
    q = prob.params.lambda_beta * prob.P_A * d.gamma * tf ** (-beta) * (2.0 / prob.h) * s
    return _shape_out(q, shape)


def fluid_volume_lost(prob: ConsolidationProblem, t, single_term: bool = False):
    """Drained fluid volume per unit area up to time t (m)."""
    t = _check_t(t)
    shape = t.shape
    tf = t.ravel()
    d = prob.derived
    lam = prob.params.lambda_beta
    a = 1.0 - prob.beta
    out = np.zeros_like(tf)
    pos = tf > 0
    if single_term:
        x1 = math.pi**2 * d.lambda_bar * tf[pos] ** a / (4.0 * prob.h**2)
        e = mittag_leffler(a, 1.0 + a, -x1, ML_TOL)
        out[pos] = prob.P_A * d.gamma * (2.0 / prob.h) * lam * tf[pos] ** a * e
        return _shape_out(out, shape)
    # sum_n E_{a,1+a}(-x_n) = h^2/(2 lambda_bar t^a) - sum_n E_{a,1}(-x_n)/x_n; the
    # remaining series decays like n^-4 instead of n^-2
    h = prob.h

    if pos.any():
        s = 8.0 / math.pi**2 * _closed_tail_series(prob, a, 1.0, 2, tf[pos], prob.series_tol)
        out[pos] = prob.P_A * d.gamma * (lam / d.lambda_bar) * h * (1.0 - s)
    return _shape_out(out, shape)


def weight_loss(prob: ConsolidationProblem, W0: float, w_s: float, area: float, t, single_term: bool = False):
    """Sample weight W(t) = W0 - w_s * area * (drained volume per unit area)."""
    return W0 - w_s * area * fluid_volume_lost(prob, t, single_term=single_term)


def normalized_flux_constant_gradient(lambda_beta, beta, grad_p, t, t_ref: float = 1.0):
    """Fractional-Darcy flux under a constant gradient, normalized at ``t_ref``.

    The flux is lambda_beta * grad_p * t^-beta / Gamma(1 - beta), so the ratio is
    (t / t_ref)^-beta and does not depend on lambda_beta or grad_p.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or t_ref <= 0:
        raise ValueError("t must be positive")
    if not 0 <= beta < 1:
        raise ValueError("beta must lie in [0, 1)")
    flux = lambda_beta * grad_p * t ** (-beta) * rgamma(1.0 - beta)
    ref = lambda_beta * grad_p * t_ref ** (-beta) * rgamma(1.0 - beta)
    out = flux / ref
    return float(out) if out.ndim == 0 else out


def terzaghi_classical(prob: ConsolidationProblem, z, t, field: str = "pressure"):
    """Classical (beta = 0) consolidation from plain exponentials.

    Written independently of the Mittag-Leffler path so it can serve as an
    oracle for it.
    """
    if prob.beta != 0.0:
        raise ValueError("terzaghi_classical requires beta = 0")
    if field not in ("pressure", "displacement"):
        raise ValueError("field must be 'pressure' or 'displacement'")
    z = _check_z(z, prob.h)
    t = _check_t(t)
    h = prob.h
    d = prob.derived
    zb, tb = np.broadcast_arrays(z, t)
    zf = zb.ravel()
    tf = tb.ravel()
    cv = d.lambda_bar
    acc = np.zeros(zf.size)
    # number of odd modes needed for exp(-n^2 pi^2 cv t / 4h^2) < 1e-18
    tpos = tf[tf > 0]
    if tpos.size and tpos.size == tf.size:
        n_need = math.sqrt(4.0 * h**2 * 18.0 * math.log(10.0) / (math.pi**2 * cv * tpos.min())) + 1
    else:
        n_need = prob.n_max
    n_top = int(min(prob.n_max, 2 * (int(n_need) // 2) + 1))
    for n0 in range(1, n_top + 1, 512):
        n = np.arange(n0, min(n0 + 512, n_top + 1), 2, dtype=float)
        decay = np.exp(-np.outer(tf, n**2) * (math.pi**2 * cv / (4.0 * h**2)))
        sgn = (-1.0) ** ((n - 1) // 2)
        arg = np.outer(zf, n) * (math.pi / (2.0 * h))
        if field == "pressure":
            acc += np.sum(decay * (4.0 / (math.pi * n) * sgn) * np.cos(arg), axis=1)
        else:
            acc += np.sum(decay * (8.0 * h / (math.pi * n) ** 2) * (sgn * np.sin(arg) - 1.0), axis=1)
    if field == "pressure":
        out = prob.P_A * d.gamma * acc
    else:
        acc[tf == 0] = -(h - zf[tf == 0])
        out = (prob.P_A / d.M) * ((h - zf) + d.gamma * prob.params.alpha * acc)
    out[zf >= h] = 0.0
    return float(out[0]) if zb.shape == () else out.reshape(zb.shape)


def biphasic_displacement(bi: BiphasicParams, h: float, P_A: float, z, t, n_max: int = 9999):
    """Biphasic confined-compression creep, solved for the strain field.

    The strain e = du/dz obeys e_t = H_A k e_zz with e = -P_A/H_A on the drained
    base, de/dz = 0 at the loaded face and e(z, 0) = 0.
    """
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    zb, tb = np.broadcast_arrays(z, t)
    zf = zb.ravel()
    tf = tb.ravel()
    ca = bi.H_A * bi.k_over_mu
    e_inf = P_A / bi.H_A
    # e(z,t) = -e_inf [1 - sum_m (4/(m pi)) s_m cos(m pi z / 2h) exp(-m^2 pi^2 ca t / 4h^2)]
    # integrated from z to h with u(h) = 0
    acc = np.zeros(zf.size)
    tpos = tf[tf > 0]
    n_top = n_max
    if tpos.size:
        n_need = math.sqrt(18.0 * math.log(10.0) / (ca * tpos.min())) * 2.0 * h / math.pi + 1
        n_top = int(min(n_max, 2 * (int(n_need) // 2) + 1))
    m = np.arange(1, n_top + 1, 2, dtype=float)
    sm = np.where(((m - 1) // 2) % 2 == 0, 1.0, -1.0)
    for i0 in range(0, m.size, 256):
        mm = m[i0 : i0 + 256]
        ss = sm[i0 : i0 + 256]
        k = mm * math.pi / (2.0 * h)
        decay = np.exp(-np.outer(tf, k**2) * ca)
        # int_z^h cos(k s) ds = (sin(k h) - sin(k z)) / k, sin(k h) = s_m
        integ = (ss[None, :] - np.sin(np.outer(zf, k))) / k[None, :]
        acc += np.sum(decay * (4.0 / (mm * math.pi) * ss)[None, :] * integ, axis=1)
    u = e_inf * ((h - zf) - acc)
    u[tf == 0] = 0.0
    u[zf >= h] = 0.0
    return float(u[0]) if zb.shape == () else u.reshape(zb.shape)
