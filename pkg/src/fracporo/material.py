"""Material parameter records for the fractional Biot and biphasic models."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "MaterialParams",
    "IncompressibleParams",
    "DerivedParams",
    "BiphasicParams",
    "derive",
    "incompressible",
    "biphasic_equivalence",
    "to_biphasic",
    "permeability_from_drag",
    "aggregate_modulus",
]


def aggregate_modulus(K: float, G: float) -> float:
    return (3.0 * K + 4.0 * G) / 3.0


@dataclass(frozen=True)
class MaterialParams:
    """Drained poroelastic constants plus the fractional Darcy pair.

    Units: K, G in Pa; lambda_beta in m^4 N^-1 s^(beta-1).
    """

    K: float
    G: float
    alpha: float
    B: float
    lambda_beta: float
    beta: float
    poisson: float | None = None  # annotation only, unused by 1D models

    def __post_init__(self):
        if not (self.K > 0 and self.G > 0):
            raise ValueError("K and G must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 < self.B <= 1:
            raise ValueError(f"B must lie in (0, 1], got {self.B}")
        if not self.lambda_beta > 0:
            raise ValueError("lambda_beta must be positive")
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.alpha * self.B >= 1.0:
            raise ValueError(
                "alpha*B = 1 is the incompressible limit; use incompressible(M, beta, lambda_beta)"
            )

    @property
    def M(self) -> float:
        return aggregate_modulus(self.K, self.G)

    @property
    def is_incompressible(self) -> bool:
        return False

    def replace(self, **changes) -> "MaterialParams":
        fields = {k: getattr(self, k) for k in ("K", "G", "alpha", "B", "lambda_beta", "beta", "poisson")}
        fields.update(changes)
        return MaterialParams(**fields)


@dataclass(frozen=True)
class IncompressibleParams:
    """Incompressible constituents (alpha = B = 1): only M, beta, lambda_beta matter."""

    M: float
    beta: float
    lambda_beta: float

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("M must be positive")
        if not self.lambda_beta > 0:
            raise ValueError("lambda_beta must be positive")
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")

    alpha = 1.0
    B = 1.0

    @property
    def is_incompressible(self) -> bool:
        return True

    def replace(self, **changes) -> "IncompressibleParams":
        fields = {"M": self.M, "beta": self.beta, "lambda_beta": self.lambda_beta}
        fields.update(changes)
        return IncompressibleParams(**fields)


@dataclass(frozen=True)
class DerivedParams:
    K_u: float
    gamma: float
    lambda_bar: float
    M: float
    nu_u: float
    storage: float  # alpha^2/(K_u - K), the constrained specific storage (1/Pa)


def derive(params: MaterialParams | IncompressibleParams) -> DerivedParams:
    """Undrained modulus, loading efficiency gamma, diffusivity lambda_bar, M, nu_u."""
    if params.is_incompressible:
        return DerivedParams(
            K_u=math.inf,
            gamma=1.0,
            lambda_bar=params.lambda_beta * params.M,
            M=params.M,
            nu_u=0.5,
            storage=0.0,
        )
    K, G, a = params.K, params.G, params.alpha
    denom = 1.0 - a * params.B
    if denom <= 0.0:
        raise ZeroDivisionError("alpha*B = 1: undrained modulus is infinite")
    K_u = K / denom
    gam = 3.0 * (K_u - K) / (a * (4.0 * G + 3.0 * K_u))
    lam_bar = params.lambda_beta * (4.0 * G + 3.0 * K) * (K_u - K) / (a**2 * (4.0 * G + 3.0 * K_u))
    nu_u = (3.0 * K_u - 2.0 * G) / (2.0 * (3.0 * K_u + G))
    return DerivedParams(
        K_u=K_u,
        gamma=gam,
        lambda_bar=lam_bar,
        M=aggregate_modulus(K, G),
        nu_u=nu_u,
        storage=a**2 / (K_u - K),
    )


def incompressible(M: float, beta: float, lambda_beta: float) -> IncompressibleParams:
    return IncompressibleParams(M=M, beta=beta, lambda_beta=lambda_beta)


@dataclass(frozen=True)
class BiphasicParams:
    """Linear biphasic mixture: aggregate modulus, permeability, solid/fluid volume ratio."""

    H_A: float
    k_over_mu: float
    gamma_ratio: float = 1.0

    def __post_init__(self):
        if not (self.H_A > 0 and self.k_over_mu > 0 and self.gamma_ratio > 0):
            raise ValueError("H_A, k_over_mu and gamma_ratio must be positive")

    @property
    def consolidation_coefficient(self) -> float:
        return self.H_A * self.k_over_mu


def biphasic_equivalence(bi: BiphasicParams) -> IncompressibleParams:
    """Fractional record with beta = 0 that reproduces the biphasic response."""
    return IncompressibleParams(M=bi.H_A, beta=0.0, lambda_beta=bi.k_over_mu)


def to_biphasic(params: IncompressibleParams, gamma_ratio: float = 1.0) -> BiphasicParams:
    if params.beta != 0.0:
        raise ValueError("only beta = 0 records have a biphasic counterpart")
    return BiphasicParams(H_A=params.M, k_over_mu=params.lambda_beta, gamma_ratio=gamma_ratio)


def permeability_from_drag(kappa: float, gamma_ratio: float) -> float:
    """Axial permeability from the diffusive drag coefficient: k = 1/((1+gamma)^2 kappa)."""
    if kappa <= 0 or gamma_ratio <= 0:
        raise ValueError("kappa and gamma_ratio must be positive")
    return 1.0 / ((1.0 + gamma_ratio) ** 2 * kappa)
