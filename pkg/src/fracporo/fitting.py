"""Creep-curve fitting of (M, beta, lambda_beta) by Nelder-Mead.

The model is the top-face creep curve for incompressible constituents under a
step load. Parameters are searched in transformed coordinates
(log M, logit beta, log lambda_beta) so that any simplex point is admissible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from fracporo.analytic import displacement_incompressible
from fracporo.io import TimeSeries
from fracporo.specialfn import ConvergenceError, mittag_leffler

__all__ = [
    "CreepDataset",
    "FitResult",
    "NelderMeadOptions",
    "NelderMeadResult",
    "nelder_mead",
    "rms_objective",
    "fit_creep",
    "multistart_fit",
    "initial_guess",
    "synthetic_creep",
    "FIT_SERIES_TOL",
    "REPORT_SERIES_TOL",
]

FIT_SERIES_TOL = 1e-8
REPORT_SERIES_TOL = 1e-12
MODELS = ("fractional", "classical")


@dataclass(frozen=True)
class CreepDataset:
    sample_id: str
    h: float
    P_A: float
    samples: TimeSeries

    def __post_init__(self):
        if not (self.h > 0 and self.P_A > 0):
            raise ValueError("h and P_A must be positive")
        if self.samples.t[0] < 0:
            raise ValueError("times must be non-negative")

    @property
    def t(self) -> np.ndarray:
        return self.samples.t

    @property
    def u(self) -> np.ndarray:
        return self.samples.v


@dataclass(frozen=True)
class FitResult:
    M: float
    beta: float
    lambda_beta: float
    rms: float
    iterations: int
    converged: bool
    model: str = "fractional"
    evaluations: int = 0
    sample_id: str = ""

    def as_row(self, h: float) -> dict:
        """Row in the published-table schema (sample,h_mm,M_pa,beta,lambda_beta,rms)."""
        return {
            "sample": self.sample_id,
            "h_mm": h * 1e3,
            "M_pa": self.M,
            "beta": self.beta,
            "lambda_beta": self.lambda_beta,
            "rms": self.rms,
        }


# --- Nelder-Mead -------------------------------------------------------------


@dataclass(frozen=True)
class NelderMeadOptions:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    xatol: float = 1e-8
    fatol: float = 1e-12
    max_iter: int = 5000
    max_eval: int | None = None
    # fminsearch-style start: 5% steps, 0.00025 for zero components
    step: float = 0.05
    zero_step: float = 0.00025


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool
    message: str
    history: list = field(default_factory=list, repr=False)


def _initial_simplex(x0: np.ndarray, opts: NelderMeadOptions) -> np.ndarray:
    n = x0.size
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        sim[i + 1, i] = (1 + opts.step) * x0[i] if x0[i] != 0 else opts.zero_step
    return sim


def nelder_mead(objective, x0, options: NelderMeadOptions | None = None, simplex=None) -> NelderMeadResult:
    """Minimise ``objective`` from ``x0`` with the classic Nelder-Mead simplex.

    Converged when the objective spread over the simplex is at most ``fatol``
    and the simplex fits inside an ``xatol`` box around its best vertex, or
    when the simplex is exactly flat. Hitting ``max_iter`` returns the best
    point with ``converged = False``.
    """
    opts = options or NelderMeadOptions()
    x0 = np.asarray(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    rho, chi, psi, sigma = opts.reflection, opts.expansion, opts.contraction, opts.shrink
    max_eval = opts.max_eval or 200 * opts.max_iter
    sim = _initial_simplex(x0, opts) if simplex is None else np.array(simplex, dtype=float)
    n = x0.size
    nev = 0

    def f(x):
        nonlocal nev
        nev += 1
        val = float(objective(x))
        return val if math.isfinite(val) else math.inf

    fs = np.array([f(x) for x in sim])
    it = 0
    converged = False
    message = "maximum iterations reached"
    while it < opts.max_iter and nev < max_eval:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        spread = fs[-1] - fs[0]
        size = np.max(np.abs(sim[1:] - sim[0]))
        if spread == 0.0 or (spread <= opts.fatol and size <= opts.xatol):
            converged = True
            message = "flat simplex" if spread == 0.0 else "tolerances met"
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + rho * (centroid - sim[-1])
        fr = f(xr)
        if fr < fs[0]:
            xe = centroid + rho * chi * (centroid - sim[-1])
            fe = f(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + psi * rho * (centroid - sim[-1])
            fc = f(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid - psi * (centroid - sim[-1])
            fc = f(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        # shrink toward the best vertex
        for i in range(1, n + 1):
            sim[i] = sim[0] + sigma * (sim[i] - sim[0])
            fs[i] = f(sim[i])
    order = np.argsort(fs, kind="stable")
    if nev >= max_eval and not converged:
        message = "maximum evaluations reached"
    return NelderMeadResult(
        x=sim[order[0]].copy(),
        fun=float(fs[order[0]]),
        iterations=it,
        evaluations=nev,
        converged=converged,
        message=message,
    )


# --- creep objective ------------------------------------------------------


def _model_curve(ds: CreepDataset, M, beta, lam, series_tol):
    return displacement_incompressible(M, beta, lam, ds.h, ds.P_A, ds.t, series_tol=series_tol)


def synthetic_creep(
    M: float,
    beta: float,
    lambda_beta: float,
    h: float,
    P_A: float,
    t=None,
    noise: float = 0.005,
    seed: int = 0,
    sample_id: str = "synthetic",
) -> CreepDataset:
    """Model creep curve plus Gaussian noise of SD ``noise * max|u|``.

    Default sampling is 1 Hz over 1..450 s, the length of a creep hold.
    """
    t = np.arange(1.0, 451.0) if t is None else np.asarray(t, dtype=float)
    u = displacement_incompressible(M, beta, lambda_beta, h, P_A, t, series_tol=REPORT_SERIES_TOL)
    if noise > 0:
        rng = np.random.default_rng(seed)
        u = u + noise * np.max(np.abs(u)) * rng.standard_normal(t.size)
    return CreepDataset(sample_id, h, P_A, TimeSeries(t, u, unit="m", name="displacement_m"))


def rms_objective(dataset: CreepDataset, candidate, series_tol: float = REPORT_SERIES_TOL) -> float:
    """Root-mean-square misfit (m) of the creep curve at the sample times."""
    M, beta, lam = (float(x) for x in candidate)
    if not (M > 0 and lam > 0 and 0 <= beta < 1):
        raise ValueError(f"candidate out of bounds: M={M}, beta={beta}, lambda_beta={lam}")
    r = _model_curve(dataset, M, beta, lam, series_tol) - dataset.u
    return float(np.sqrt(np.mean(r**2)))


def _logit(p):
    return math.log(p / (1.0 - p))


def _expit(x):
    # written to stay inside (0, 1) in floating point for large |x|
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _decode(x, model):
    if model == "fractional":
        beta = min(_expit(x[1]), 1.0 - 1e-12)
        return math.exp(x[0]), beta, math.exp(x[2])
    return math.exp(x[0]), 0.0, math.exp(x[1])


def _encode(M, beta, lam, model):
    if model == "fractional":
        return np.array([math.log(M), _logit(beta), math.log(lam)])
    return np.array([math.log(M), math.log(lam)])


_TAU_HALF = {}


def _tau_half(beta: float) -> float:
    """Dimensionless time lambda_bar t^(1-beta)/h^2 at which half the settlement is reached."""
    if beta not in _TAU_HALF:
        a = 1.0 - beta
        n = np.arange(1, 2001, 2, dtype=float)

        def frac(tau):
            E = mittag_leffler(a, 1.0, -(n**2) * math.pi**2 * tau / 4.0, 1e-10)
            return 1.0 - np.sum(8.0 / (n * math.pi) ** 2 * E) - 0.5

        _TAU_HALF[beta] = brentq(frac, 1e-6, 10.0, xtol=1e-12)
    return _TAU_HALF[beta]


def initial_guess(ds: CreepDataset, model: str = "fractional"):
    """M from the final settlement, beta = 0.5, lambda from the half-settlement time."""
    u_end = float(ds.u[-1])
    M0 = ds.P_A * ds.h / u_end
    beta0 = 0.5 if model == "fractional" else 0.0
    half = 0.5 * u_end
    k = int(np.searchsorted(ds.u, half)) if np.all(np.diff(ds.u) >= 0) else int(np.argmax(ds.u >= half))
    k = min(max(k, 0), ds.t.size - 1)
    t_half = max(float(ds.t[k]), float(ds.t[ds.t > 0][0]) if np.any(ds.t > 0) else 1.0)
    lam0 = _tau_half(beta0) * ds.h**2 / (M0 * t_half ** (1.0 - beta0))
    return M0, beta0, lam0


def _check_dataset(ds: CreepDataset):
    if np.ptp(ds.u) == 0.0:
        raise ValueError(f"{ds.sample_id or 'dataset'}: displacement is constant; nothing to fit")
    tp = ds.t[ds.t > 0]
    if ds.t.size < 10 or tp.size < 2 or tp[-1] / tp[0] < 100.0:
        warnings.warn(
            "fit is better conditioned with at least 10 samples spanning two decades of time",
            stacklevel=3,
        )


def fit_creep(
    dataset: CreepDataset,
    model: str = "fractional",
    x0=None,
    options: NelderMeadOptions | None = None,
    monitor=None,
) -> FitResult:
    """Fit the creep curve by Nelder-Mead in transformed coordinates.

    ``x0`` is (M, beta, lambda_beta) for the fractional model or (M, lambda)
    for the classical one. ``monitor(M, beta, lam)``, if given, sees every
    evaluated candidate.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    _check_dataset(dataset)
    if x0 is None:
        M0, b0, l0 = initial_guess(dataset, model)
    elif model == "fractional":
        M0, b0, l0 = x0
    else:
        (M0, l0), b0 = x0, 0.0
    u_scale = float(np.max(np.abs(dataset.u)))

    def obj(x):
        M, beta, lam = _decode(x, model)
        if monitor is not None:
            monitor(M, beta, lam)
        try:
            r = _model_curve(dataset, M, beta, lam, FIT_SERIES_TOL) - dataset.u
        except ConvergenceError:
            return math.inf
        return math.sqrt(float(np.mean(r**2))) / u_scale

    res = nelder_mead(obj, _encode(M0, b0, l0, model), options)
    M, beta, lam = _decode(res.x, model)
    rms = rms_objective(dataset, (M, beta, lam), series_tol=REPORT_SERIES_TOL)
    return FitResult(
        M=M,
        beta=beta,
        lambda_beta=lam,
        rms=rms,
        iterations=res.iterations,
        converged=res.converged,
        model=model,
        evaluations=res.evaluations,
        sample_id=dataset.sample_id,
    )


def multistart_fit(
    dataset: CreepDataset,
    model: str = "fractional",
    n_starts: int = 8,
    seed: int = 0,
    x0=None,
    spread: float = 1.0,
    options: NelderMeadOptions | None = None,
) -> FitResult:
    """Best of ``n_starts`` fits; start 0 is ``x0`` (or the default guess), the rest
    are seeded normal perturbations of it in transformed coordinates."""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    if x0 is None:
        x0 = initial_guess(dataset, model)
        if model == "classical":
            x0 = (x0[0], x0[2])
    base = _encode(*(x0 if model == "fractional" else (x0[0], 0.0, x0[1])), model)
    rng = np.random.default_rng(seed)
    best = None
    for i in range(n_starts):
        xi = base if i == 0 else base + spread * rng.standard_normal(base.size)
        M, beta, lam = _decode(xi, model)
        start = (M, beta, lam) if model == "fractional" else (M, lam)
        res = fit_creep(dataset, model, x0=start, options=options)
        if best is None or res.rms < best.rms:
            best = res
    return best
