"""Implicit fixed-step solver for 1D fractional consolidation.

Nodes ``z_i = i*dz`` run from the loaded, impermeable top ``z = 0`` to the
drained, fixed base ``z = h``. With linear elements and a lumped mass the
semi-discrete mass balance reads

    m * d(zeta)/dt + lambda_beta * K * D^beta p = 0,

where ``zeta = alpha*eps + S*p`` is the fluid content and ``K`` the stiffness
of ``-d2/dz2``. Equilibrium is uniform stress, so the strain follows from the
pressure and the top boundary datum:

* stress control:       eps = (alpha*p - P_A(t)) / M
* displacement control: eps = (alpha*p - R(t)) / M, R = (M*U + alpha*int p)/h

Time stepping is backward Euler with the Grünwald-Letnikov sum for
``D^beta``, current step included. The whole pressure history, including a
t = 0 sample, enters the sum without subtracting the initial value, which
makes the scheme consistent with the Riemann-Liouville closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from fracporo.fracops import gl_coefficients
from fracporo.material import IncompressibleParams, MaterialParams, derive

__all__ = [
    "Grid1D",
    "LoadProgram",
    "SolveResult",
    "SolverError",
    "solve",
    "simulate_relaxation",
    "simulate_creep_with_ramp",
    "ramp_time_for_piston_rate",
]

MODES = ("stress_step", "stress_ramp_hold", "displacement_ramp_steps")


class SolverError(RuntimeError):
    """The time stepping produced non-finite values."""


@dataclass(frozen=True)
class Grid1D:
    h: float
    nz: int = 61
    dt: float = 0.1
    nt: int = 4000

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.nz < 3:
            raise ValueError("nz must be at least 3")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.nt < 1:
            raise ValueError("nt must be at least 1")

    @property
    def dz(self) -> float:
        return self.h / (self.nz - 1)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.h, self.nz)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)


@dataclass(frozen=True)
class LoadProgram:
    """Piecewise-linear boundary history on the top face.

    Stress modes prescribe the compressive stress (Pa); the displacement mode
    prescribes the top settlement (m). ``times``/``values`` are breakpoints,
    held constant after the last one.
    """

    mode: str
    times: tuple
    values: tuple

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be non-empty and of equal length")
        if t[0] != 0.0 or np.any(np.diff(t) < 0):
            raise ValueError("times must start at 0 and be non-decreasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("load values must be finite")

    def value(self, t):
        return np.interp(t, np.asarray(self.times, float), np.asarray(self.values, float))

    @property
    def is_stress(self) -> bool:
        return self.mode != "displacement_ramp_steps"

    @classmethod
    def stress_step(cls, P_A: float) -> "LoadProgram":
        return cls("stress_step", (0.0,), (float(P_A),))

    @classmethod
    def stress_ramp_hold(cls, P_A: float, ramp_time: float) -> "LoadProgram":
        if ramp_time <= 0:
            return cls.stress_step(P_A)
        return cls("stress_ramp_hold", (0.0, float(ramp_time)), (0.0, float(P_A)))

    @classmethod
    def relaxation(
        cls,
        h: float,
        precondition: float = 0.10,
        n_steps: int = 5,
        step: float = 0.02,
        rate: float = 0.003,
        hold: float = 600.0,
    ) -> "LoadProgram":
        """Preconditioning ramp then ``n_steps`` ramp-and-hold increments.

        Amplitudes and ``rate`` are fractions of ``h`` (rate per second).
        """
        if rate <= 0 or hold < 0:
            raise ValueError("rate must be positive and hold non-negative")
        times, values = [0.0], [0.0]
        for amp in [precondition] + [step] * n_steps:
            if amp <= 0:
                continue
            times.append(times[-1] + amp / rate)
            values.append(values[-1] + amp * h)
            times.append(times[-1] + hold)
            values.append(values[-1])
        return cls("displacement_ramp_steps", tuple(times), tuple(values))

    @classmethod
    def displacement_ramp(cls, h: float, strain: float, rate: float) -> "LoadProgram":
        """Single ramp to ``strain`` (fraction of h) at ``rate`` (fraction of h per s)."""
        return cls("displacement_ramp_steps", (0.0, strain / rate), (0.0, strain * h))


@dataclass(frozen=True)
class SolveResult:
    z: np.ndarray
    t: np.ndarray
    p: np.ndarray  # (nz, nt+1), Pa
    u: np.ndarray  # (nz, nt+1), m, positive toward the base
    flux_base: np.ndarray  # (nt+1,), mean discharge over (t_{k-1}, t_k]; 0 at k = 0
    reaction_stress_top: np.ndarray  # (nt+1,), compressive, Pa
    fluid_content: np.ndarray = field(repr=False)  # (nz, nt+1), dimensionless
    mass_weights: np.ndarray = field(repr=False)  # lumped nodal lengths, m

    def __post_init__(self):
        for name in ("z", "t", "p", "u", "flux_base", "reaction_stress_top", "fluid_content"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    def mass_balance_residual(self) -> np.ndarray:
        """Per-step |change in stored fluid + outflow*dt|, relative to the total drained."""
        stored = self.mass_weights @ self.fluid_content
        dt = np.diff(self.t)
        out = self.flux_base[1:] * dt
        scale = max(np.max(np.abs(stored - stored[0])), np.finfo(float).tiny)
        return np.abs(np.diff(stored) + out) / scale


def _operators(grid: Grid1D):
    n = grid.nz
    dz = grid.dz
    m = np.full(n, dz)
    m[0] = m[-1] = dz / 2
    K = np.zeros((n, n))
    i = np.arange(n - 1)
    K[i, i] += 1.0 / dz
    K[i + 1, i + 1] += 1.0 / dz
    K[i, i + 1] -= 1.0 / dz
    K[i + 1, i] -= 1.0 / dz
    return m, K


def _cumulative_from_base(f: np.ndarray, dz: float) -> np.ndarray:
    """int_z^h f dz by the trapezoid rule, columnwise."""
    seg = 0.5 * dz * (f[1:] + f[:-1])
    out = np.zeros_like(f)
    out[:-1] = np.cumsum(seg[::-1], axis=0)[::-1]
    return out


def solve(
    grid: Grid1D,
    load: LoadProgram,
    params: MaterialParams | IncompressibleParams,
    window: int | None = None,
) -> SolveResult:
    """March the coupled pressure/displacement problem over ``grid``.

    ``window`` limits the GL memory to that many past steps (None: full history).
    """
    d = derive(params)
    alpha = params.alpha
    M = d.M
    beta = params.beta
    lam = params.lambda_beta
    cs = lam / d.lambda_bar  # alpha^2/M + S
    nz, nt, dt, h = grid.nz, grid.nt, grid.dt, grid.h
    m, K = _operators(grid)
    t = grid.t
    c = gl_coefficients(beta, nt + 1 if window is None else min(nt + 1, window))
    coef = lam * dt ** (1.0 - beta)
    load_vals = load.value(t)

    ones = np.ones(nz)
    if load.is_stress:
        C = cs * np.diag(m)
    else:
        # fluid content couples to the mean pressure through the reaction force
        C = np.diag(m) @ (cs * np.eye(nz) - (alpha**2 / (M * h)) * np.outer(ones, m))
    A = C + c[0] * coef * K
    A[-1, :] = 0.0
    A[-1, -1] = 1.0
    lu = lu_factor(A)

    def content(p, load_val):
        if load.is_stress:
            return cs * p - (alpha / M) * load_val
        return cs * p - (alpha / h) * load_val - (alpha**2 / (M * h)) * (m @ p)

    def load_term(dload):
        return (alpha / M if load.is_stress else alpha / h) * m * dload

    # Y holds the samples that enter the GL sum. The t = 0 sample comes from the
    # discrete equation itself, applied to the jump from the unloaded state.
    # This is backward-Euler convolution quadrature of the integrated form and
    # stays accurate when the initial transient is much shorter than dt.
    # The reported t = 0 state is the undrained response to the same jump.
    Y = np.zeros((nt + 1, nz))
    rhs0 = load_term(load_vals[0])
    rhs0[-1] = 0.0
    Y[0] = lu_solve(lu, rhs0)
    Cd = C.copy()
    Cd[-1, :] = 0.0
    Cd[-1, -1] = 1.0
    P = np.zeros((nt + 1, nz))
    P[0] = np.linalg.solve(Cd, rhs0)

    flux = np.zeros(nt + 1)
    Z = np.zeros((nt + 1, nz))
    Z[0] = content(P[0], load_vals[0])
    zy = content(Y[0], load_vals[0])
    # fluid drained between the reported t = 0 state and the t = 0 sample
    drained0 = -(m[-1] * (zy[-1] - Z[0, -1]) + coef * (K[-1] @ (c[0] * Y[0])))
    for k in range(1, nt + 1):
        jmax = min(k + 1, c.size)
        # sum_{j=2}^{k+1} c_j y^{k+1-j}
        hist = c[1:jmax] @ Y[k - 1 :: -1][: jmax - 1] if jmax > 1 else np.zeros(nz)
        rhs = C @ Y[k - 1] + load_term(load_vals[k] - load_vals[k - 1])
        rhs -= coef * (K @ hist)
        rhs[-1] = 0.0
        Y[k] = lu_solve(lu, rhs)
        P[k] = Y[k]
        Z[k] = content(P[k], load_vals[k])
        # the residual at the Dirichlet node is the fluid leaving through the base
        prev = zy if k == 1 else Z[k - 1]
        r_base = m[-1] * (Z[k, -1] - prev[-1]) + coef * (K[-1] @ (c[0] * Y[k] + hist))
        flux[k] = -r_base / dt
        if k == 1:
            flux[k] += drained0 / dt
    if not np.all(np.isfinite(P)):
        raise SolverError("time stepping produced non-finite pore pressures")

    p = P.T.copy()
    if load.is_stress:
        reaction = load_vals.copy()
    else:
        reaction = (M * load_vals + alpha * (m @ p)) / h
    u = _cumulative_from_base((reaction[None, :] - alpha * p) / M, grid.dz)
    return SolveResult(
        z=grid.z,
        t=t,
        p=p,
        u=u,
        flux_base=flux,
        reaction_stress_top=reaction,
        fluid_content=Z.T.copy(),
        mass_weights=m,
    )


def simulate_relaxation(grid: Grid1D, program: LoadProgram, params, window: int | None = None) -> SolveResult:
    if program.is_stress:
        raise ValueError("relaxation needs a displacement-controlled program")
    u = np.asarray(program.values, float)
    if np.any(np.diff(u) < 0):
        raise ValueError("displacement program must be monotone")
    return solve(grid, program, params, window=window)


def simulate_creep_with_ramp(grid: Grid1D, program: LoadProgram, params, window: int | None = None) -> SolveResult:
    if program.mode not in ("stress_ramp_hold", "stress_step"):
        raise ValueError("creep with ramp needs a stress ramp-hold program")
    return solve(grid, program, params, window=window)


def ramp_time_for_piston_rate(creep_curve, h: float, rate: float, t_max: float = 1e4) -> float:
    """Time at which a piston moving at ``rate*h`` per second meets the creep curve.

    Models a displacement-controlled ramp that stops once the target load is
    reached: the ramp ends where ``rate*h*t`` equals the step-load settlement
    ``creep_curve(t)``.
    """
    from scipy.optimize import brentq

    g = lambda s: rate * h * s - creep_curve(s)  # noqa: E731
    lo = 1e-9
    if g(lo) >= 0:
        return 0.0
    hi = 1.0
    while g(hi) < 0:
        hi *= 2.0
        if hi > t_max:
            raise ValueError("piston never catches the creep curve within t_max")
    return brentq(g, lo, hi, xtol=1e-10, rtol=1e-12)
