"""Gamma and two-parameter Mittag-Leffler functions for real arguments.

The Mittag-Leffler function

.. math::

    E_{a,b}(z) = \\sum_{k=0}^\\infty \\frac{z^k}{\\Gamma(a k + b)}

is evaluated by whichever of four routes can *certify* the requested relative
tolerance at a given point:

1. the power series in double precision, accepted when the rounding bound
   ``eps * sum(|terms|)`` is below ``tol * |value|``;
2. the algebraic asymptotic expansion on the negative axis, optimally
   truncated, accepted when the first omitted term is below tolerance;
3. the Hankel-contour integral collapsed onto the branch cut, integrated with
   an exp-sinh rule and accepted when two successive step halvings agree;
4. the power series in extended precision (mpmath), which always works for
   moderate ``|z|``.

Routes are tried in that order, so cheap routes serve the vast majority of
points. Everything is vectorised over ``z``.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

__all__ = [
    "ConvergenceError",
    "PoleError",
    "gamma",
    "lgamma",
    "rgamma",
    "mittag_leffler",
]

EPS = np.finfo(float).eps
MAX_DIGITS = 3000
MAX_SERIES_TERMS = 10_000

# Lanczos approximation, g = 7, nine coefficients (~15 significant digits).
LANCZOS_G = 7.0
LANCZOS_COEF = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class PoleError(ValueError):
    """Gamma evaluated at a non-positive integer."""


class ConvergenceError(ArithmeticError):
    """No evaluation route reached the requested tolerance."""


def _is_pole(x: np.ndarray) -> np.ndarray:
    return (x <= 0) & (x == np.round(x))


def _lanczos_sum(x: np.ndarray) -> np.ndarray:
    # x has already been shifted by -1
    acc = np.full_like(x, LANCZOS_COEF[0])
    for i in range(1, len(LANCZOS_COEF)):
        acc = acc + LANCZOS_COEF[i] / (x + i)
    return acc


def _gamma_right(x: np.ndarray) -> np.ndarray:
    """Gamma for x >= 0.5."""
    xm = x - 1.0
    t = xm + LANCZOS_G + 0.5
    # split the power to delay overflow up to x ~ 171
    half = np.power(t, 0.5 * (xm + 0.5))
    return math.sqrt(2.0 * math.pi) * half * (half * np.exp(-t)) * _lanczos_sum(xm)


def _lgamma_right(x: np.ndarray) -> np.ndarray:
    xm = x - 1.0
    t = xm + LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (xm + 0.5) * np.log(t) - t + np.log(_lanczos_sum(xm))


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _sinpi(x: np.ndarray) -> np.ndarray:
    # reduce first: x - round(x) is exact, so no digits are lost to rounding pi*x near poles
    n = np.round(x)
    return np.where(np.mod(n, 2) == 0, 1.0, -1.0) * np.sin(math.pi * (x - n))


def gamma(x):
    """Euler's Gamma function.

    Raises :class:`PoleError` at ``0, -1, -2, ...``.
    """
    arr, scalar = _as_array(x)
    arr = np.atleast_1d(arr)
    if np.any(_is_pole(arr)):
        bad = arr[_is_pole(arr)][0]
        raise PoleError(f"Gamma has a pole at x = {bad:g}")
    out = np.empty_like(arr)
    right = arr >= 0.5
    out[right] = _gamma_right(arr[right])
    left = ~right
    if np.any(left):
        xl = arr[left]
        out[left] = math.pi / (_sinpi(xl) * _gamma_right(1.0 - xl))
    return float(out[0]) if scalar else out


def rgamma(x):
    """Reciprocal Gamma, entire; zero at the poles of Gamma."""
    arr, scalar = _as_array(x)
    arr = np.atleast_1d(arr)
    out = np.zeros_like(arr)
    right = arr >= 0.5
    # 1/Gamma underflows cleanly past x ~ 171 through the log form
    xr = arr[right]
    out[right] = np.exp(-_lgamma_right(xr))
    left = ~right & ~_is_pole(arr)
    if np.any(left):
        xl = arr[left]
        # 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
        lg = _lgamma_right(1.0 - xl)
        out[left] = _sinpi(xl) * np.exp(lg) / math.pi
    return float(out[0]) if scalar else out


def lgamma(x):
    """``log|Gamma(x)|``; raises :class:`PoleError` at the poles."""
    arr, scalar = _as_array(x)
    arr = np.atleast_1d(arr)
    if np.any(_is_pole(arr)):
        raise PoleError("log-Gamma has a pole at a non-positive integer")
    out = np.empty_like(arr)
    right = arr >= 0.5
    out[right] = _lgamma_right(arr[right])
    left = ~right
    if np.any(left):
        xl = arr[left]
        out[left] = (
            math.log(math.pi)
            - np.log(np.abs(_sinpi(xl)))
            - _lgamma_right(1.0 - xl)
        )
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Mittag-Leffler routes. Each returns (values, certified_mask).


def _ml_series(a: float, b: float, z: np.ndarray, tol: float, block: int = 64):
    n = z.size
    total = np.zeros(n)
    abs_total = np.zeros(n)
    done = np.zeros(n, dtype=bool)
    logz = np.log(np.abs(np.where(z == 0, 1.0, z)))
    neg = z < 0
    k0 = 0
    while k0 < MAX_SERIES_TERMS and not np.all(done):
        k = np.arange(k0, min(k0 + block, MAX_SERIES_TERMS))
        idx = np.flatnonzero(~done)
        lg = lgamma(a * k + b)
        logmag = np.outer(logz[idx], k) - lg
        mag = np.exp(logmag)
        mag[z[idx] == 0, :] = 0.0
        if k0 == 0:
            mag[z[idx] == 0, 0] = rgamma(b)
        sign = np.where(neg[idx, None] & (k % 2 == 1)[None, :], -1.0, 1.0)
        total[idx] += np.sum(sign * mag, axis=1)
        # exp(logmag) carries a relative error of about eps * |logmag|
        abs_total[idx] += np.sum(mag * (4.0 + np.abs(logmag)), axis=1)
        # past the peak the terms decrease monotonically; stop once negligible
        last = mag[:, -1]
        ratio_ok = (block < 2) | (mag[:, -1] <= mag[:, -2])
        small = last <= EPS * 1e-3 * np.maximum(np.abs(total[idx]), abs_total[idx] * EPS)
        done[idx[ratio_ok & small]] = True
        k0 += block
    certified = done & (EPS * abs_total <= tol * np.abs(total))
    return total, certified


def _ml_asymptotic(a: float, b: float, z: np.ndarray, tol: float, kmax: int = 80):
    """Algebraic expansion for z < 0 (0 < a < 2), optimally truncated."""
    x = -z
    k = np.arange(1, kmax + 1)
    coef = rgamma(b - a * k)  # zero where b - a k is a pole of Gamma
    logx = np.log(x)
    with np.errstate(over="ignore", under="ignore"):
        mag = np.exp(-np.outer(logx, k)) * np.abs(coef)[None, :]
    # t_k = -z^{-k}/Gamma(b - a k) with z^{-k} = (-1)^k x^{-k}
    terms = -np.where(k % 2 == 1, -1.0, 1.0)[None, :] * np.sign(coef)[None, :] * mag
    partial = np.cumsum(terms, axis=1)
    # truncation error estimate after j terms: the next two magnitudes, with
    # 1/Gamma(b - a k) replaced by its envelope Gamma(1 - b + a k)/pi so that
    # coefficients passing near a zero cannot hide the tail
    w = 1.0 - b + a * k
    env = np.array([math.exp(math.lgamma(v)) / math.pi if v > 0 else abs(c) for v, c in zip(w, coef)])
    with np.errstate(over="ignore", under="ignore"):
        bound = np.maximum(mag, np.exp(-np.outer(logx, k)) * env[None, :])
    nxt = np.zeros_like(mag)
    nxt[:, :-1] += bound[:, 1:]
    nxt[:, :-2] += bound[:, 2:]
    nxt[:, -2:] = np.inf
    j = np.argmin(nxt, axis=1)
    rows = np.arange(z.size)
    val = partial[rows, j]
    err = nxt[rows, j]
    with np.errstate(divide="ignore"):
        weight = 4.0 + np.abs(np.log(np.where(mag > 0, mag, 1.0)))
    upto = np.arange(kmax)[None, :] <= j[:, None]
    err = err + EPS * np.sum(np.where(upto, mag * weight, 0.0), axis=1)
    if a > 1.0:
        val = val + _residue_terms(a, b, x)
    certified = np.isfinite(err) & (err <= 0.1 * tol * np.abs(val))
    return val, certified


def _residue_terms(a: float, b: float, x: np.ndarray) -> np.ndarray:
    # poles of s^{a-b}/(s^a - z) on the principal sheet, present for 1 < a <= 2
    s = np.power(x, 1.0 / a) * np.exp(1j * math.pi / a)
    return (2.0 / a) * np.real(np.power(s, 1.0 - b) * np.exp(s))


def _exp_sinh_nodes(h: float, smin: float = -6.0, smax: float = 2.2):
    s = np.arange(smin, smax + h / 2, h)
    r = np.exp(0.5 * math.pi * np.sinh(s))
    w = h * 0.5 * math.pi * np.cosh(s) * r
    return r, w


def _tanh_sinh_unit(h: float, smax: float = 3.2):
    """Nodes u in (0, 1) and weights for tanh-sinh quadrature, with 1 - u kept accurate."""
    s = np.arange(-smax, smax + h / 2, h)
    q = 0.5 * math.pi * np.sinh(s)
    u = 1.0 / (1.0 + np.exp(-2.0 * q))
    w = h * 0.5 * math.pi * np.cosh(s) / (2.0 * np.cosh(q) ** 2)
    return u, w


def _hankel_kernel(a, b, z, ra):
    num = ra[None, :] * math.sin(math.pi * b) + z[:, None] * math.sin(math.pi * (a - b))
    den = ra[None, :] ** 2 - 2.0 * z[:, None] * ra[None, :] * math.cos(math.pi * a) + z[:, None] ** 2
    return num / den


def _hankel_integral(a: float, b: float, z: np.ndarray, h: float) -> np.ndarray:
    """(1/pi) int_0^inf e^{-r} r^{a-b} (r^a sin(pi b) + z sin(pi(a-b))) / D dr.

    For a < 1 the piece r < 1 is taken in u = r^a by tanh-sinh, where the
    r^(a-b) endpoint singularity becomes the regular factor u^((1-b)/a)/a and
    the steep edge of exp(-u^(1/a)) near u = 1 sits on a clustered endpoint.
    """
    if a < 1.0:
        u, wu = _tanh_sinh_unit(h)
        logu = np.log(u)
        with np.errstate(under="ignore"):
            fu = np.exp(-np.exp(logu / a) + ((1.0 - b) / a) * logu) * wu / a
        rho, wr = _exp_sinh_nodes(h)
        r = 1.0 + rho
        with np.errstate(under="ignore"):
            fr = np.exp(-r) * r ** (a - b) * wr
        return (_hankel_kernel(a, b, z, u) @ fu + _hankel_kernel(a, b, z, r**a) @ fr) / math.pi
    r, w = _exp_sinh_nodes(h)
    with np.errstate(under="ignore"):
        f = np.exp(-r) * r ** (a - b) * w
    return _hankel_kernel(a, b, z, r**a) @ f / math.pi


def _ml_integral(a: float, b: float, z: np.ndarray, tol: float, hmin: float = 1 / 512):
    """Branch-cut integral for z < 0, 0 < a < 2, a != 1."""
    # lower b into the range where the integrand is integrable at r = 0
    shifts = 0
    b0 = b
    if a < 1.0:
        while b0 > 1.0:
            b0 -= a
            shifts += 1
    else:
        while b0 >= a + 1.0:
            b0 -= a
            shifts += 1
    h = 1.0 / 8.0
    prev = _hankel_integral(a, b0, z, h)
    certified = np.zeros(z.size, dtype=bool)
    val = prev
    while h > hmin:
        h /= 2.0
        cur = _hankel_integral(a, b0, z, h)
        scale = np.abs(cur) + 1e-300
        if a > 1.0:
            scale = np.abs(cur + _residue_terms(a, b0, -z)) + 1e-300
        certified = np.abs(cur - prev) <= 0.1 * tol * scale
        val = cur
        prev = cur
        if np.all(certified):
            break
    if a > 1.0:
        val = val + _residue_terms(a, b0, -z)
    # E_{a, c+a}(z) = (E_{a,c}(z) - 1/Gamma(c)) / z
    c = b0
    for _ in range(shifts):
        val = (val - rgamma(c)) / z
        c += a
    return val, certified


def _ml_mpmath(a: float, b: float, zval: float, tol: float) -> float:
    x = abs(zval)
    growth = x ** (1.0 / a) if x > 0 else 0.0
    # the largest term is ~exp(growth) while the value can be ~exp(-growth)
    digits = int(2.0 * growth / math.log(10.0)) + 20 + int(max(0.0, -math.log10(tol)))
    if digits > MAX_DIGITS:
        raise ConvergenceError(f"Mittag-Leffler series needs {digits} digits (a={a}, b={b}, z={zval})")
    with mpmath.workdps(digits):
        zz = mpmath.mpf(zval)
        am = mpmath.mpf(a)
        bm = mpmath.mpf(b)
        total = mpmath.mpf(0)
        term_pow = mpmath.mpf(1)
        target = mpmath.mpf(10) ** (-(int(-math.log10(tol)) + 5))
        prev_small = False
        for k in range(MAX_SERIES_TERMS):
            # the Gamma argument must be formed in extended precision too
            term = term_pow * mpmath.rgamma(am * k + bm)
            total += term
            small = abs(term) <= target * abs(total)
            if small and prev_small and a * k + b > growth:
                return float(total)
            prev_small = small
            term_pow *= zz
    raise ConvergenceError(
        f"Mittag-Leffler series did not converge within {MAX_SERIES_TERMS} terms "
        f"(a={a}, b={b}, z={zval})"
    )


def _ml_a1_integer_b(m: int, z: np.ndarray, tol: float) -> np.ndarray:
    """E_{1,m} through exp/expm1 and the upward recurrence."""
    if m == 1:
        return np.exp(z)
    out = np.empty_like(z)
    far = np.abs(z) >= 1.0
    zf = z[far]
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.expm1(zf) / zf
        for c in range(2, m):
            v = (v - 1.0 / math.factorial(c - 1)) / zf
    out[far] = v
    near = ~far
    if np.any(near):
        vals, ok = _ml_series(1.0, float(m), z[near], tol)
        out[near] = vals
    return out


def mittag_leffler(a, b, z, tol: float = 1e-12):
    """Two-parameter Mittag-Leffler function ``E_{a,b}(z)`` for real ``z``.

    ``a`` must lie in ``(0, 2]`` and ``b`` must be positive. ``z`` may be a
    scalar or an array; the result has the same shape. Raises
    :class:`ConvergenceError` when no route reaches ``tol``.
    """
    a = float(a)
    b = float(b)
    if not 0.0 < a <= 2.0:
        raise ValueError(f"order a must lie in (0, 2], got {a}")
    if b <= 0.0:
        raise ValueError(f"b must be positive, got {b}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    zarr, scalar = _as_array(z)
    shape = zarr.shape
    zf = np.atleast_1d(zarr).astype(float).ravel()
    if not np.all(np.isfinite(zf)):
        raise ValueError("z must be finite")

    out = np.full(zf.size, np.nan)
    todo = np.ones(zf.size, dtype=bool)

    zero = zf == 0.0
    out[zero] = rgamma(b)
    todo &= ~zero

    if a == 1.0 and b == round(b) and np.any(todo):
        out[todo] = _ml_a1_integer_b(int(round(b)), zf[todo], tol)
        todo[:] = False

    # the power series only stays well conditioned while |z|^(1/a) is modest
    cand = todo & ((zf > 0) | (np.abs(zf) ** (1.0 / a) < 60.0))
    if np.any(cand):
        idx = np.flatnonzero(cand)
        vals, ok = _ml_series(a, b, zf[idx], tol)
        out[idx[ok]] = vals[ok]
        todo[idx[ok]] = False

    neg_left = todo & (zf < 0)
    if np.any(neg_left) and a != 1.0:
        # far out a few terms suffice; widen the expansion only where needed
        for kmax in (8, 24, 80):
            idx = np.flatnonzero(todo & (zf < 0))
            if idx.size == 0:
                break
            vals, ok = _ml_asymptotic(a, b, zf[idx], tol, kmax=kmax)
            out[idx[ok]] = vals[ok]
            todo[idx[ok]] = False

        idx = np.flatnonzero(todo & (zf < 0))
        if idx.size:
            vals, ok = _ml_integral(a, b, zf[idx], tol)
            out[idx[ok]] = vals[ok]
            todo[idx[ok]] = False

    for i in np.flatnonzero(todo):
        out[i] = _ml_mpmath(a, b, float(zf[i]), tol)

    if scalar:
        return float(out[0])
    return out.reshape(shape)
