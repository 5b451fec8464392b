"""Fractional poroelastic consolidation in one dimension.

Closed-form Mittag-Leffler solutions of the confined-compression problem with a
time-fractional Darcy law, an implicit Grünwald-Letnikov solver, creep-curve
fitting and one-way ANOVA over fitted parameter tables.
"""

from fracporo.material import (
    BiphasicParams,
    DerivedParams,
    IncompressibleParams,
    MaterialParams,
    derive,
    incompressible,
)
from fracporo.specialfn import gamma, mittag_leffler

__version__ = "0.1.0"

__all__ = [
    "BiphasicParams",
    "DerivedParams",
    "IncompressibleParams",
    "MaterialParams",
    "derive",
    "gamma",
    "incompressible",
    "mittag_leffler",
]
