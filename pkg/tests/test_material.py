import math

import pytest

from fracporo.io import load_preset
from fracporo.material import (
    BiphasicParams,
    IncompressibleParams,
    MaterialParams,
    aggregate_modulus,
    biphasic_equivalence,
    derive,
    incompressible,
    permeability_from_drag,
    to_biphasic,
)

TABLE1 = dict(K=1.67e5, G=7.69e4, alpha=0.65, B=0.88, lambda_beta=8.33e-8, beta=0.2)


def test_table1_derived_constants():
    d = derive(MaterialParams(**TABLE1))
    assert d.gamma == pytest.approx(0.695, abs=0.005)
    assert d.K_u == pytest.approx(1.67e5 / (1 - 0.65 * 0.88), rel=1e-14)
    assert d.K_u == pytest.approx(3.902e5, rel=1e-3)
    assert d.lambda_bar == pytest.approx(2.407e-2, rel=1e-3)
    assert d.M == pytest.approx((3 * 1.67e5 + 4 * 7.69e4) / 3, rel=1e-15)
    assert 0 < d.gamma < 1 and d.lambda_bar > 0
    assert d.nu_u == pytest.approx((3 * d.K_u - 2 * 7.69e4) / (2 * (3 * d.K_u + 7.69e4)), rel=1e-15)


def test_draft_table1_gamma():
    d = derive(load_preset("draft-table-1"))
    assert d.gamma == pytest.approx(0.695, abs=0.005)


def test_aggregate_modulus_of_table1():
    # (3 * 1.67e5 + 4 * 7.69e4) / 3
    assert aggregate_modulus(1.67e5, 7.69e4) == pytest.approx(2.6953333e5, rel=1e-7)


def test_increasing_B_increases_Ku_and_gamma():
    prev = None
    for B in (0.5, 0.7, 0.88, 0.99):
        d = derive(MaterialParams(**{**TABLE1, "B": B}))
        if prev is not None:
            assert d.K_u > prev.K_u and d.gamma > prev.gamma
        prev = d


def test_dimensionless_time_units():
    # lambda_bar [m^2 s^(beta-1)] * t^(1-beta) [s^(1-beta)] / h^2 [m^2] has no units:
    # measuring time in units of c seconds multiplies lambda_beta by c^(1-beta) and leaves the group fixed
    p = MaterialParams(**TABLE1)
    c = 60.0
    q = p.replace(lambda_beta=p.lambda_beta * c ** (1.0 - p.beta))
    t, h = 12.0, 3e-3
    a = derive(p).lambda_bar * t ** (1 - p.beta) / h**2
    b = derive(q).lambda_bar * (t / c) ** (1 - q.beta) / h**2
    assert a == pytest.approx(b, rel=1e-13)


@pytest.mark.parametrize(
    "changes",
    [{"K": 0.0}, {"G": -1.0}, {"alpha": 0.0}, {"alpha": 1.2}, {"B": 1.5}, {"lambda_beta": 0.0}, {"beta": 1.0}, {"beta": -0.1}],
)
def test_invalid_params_rejected(changes):
    with pytest.raises(ValueError):
        MaterialParams(**{**TABLE1, **changes})


def test_alpha_B_one_points_to_incompressible_record():
    with pytest.raises(ValueError, match="incompressible"):
        MaterialParams(**{**TABLE1, "alpha": 1.0, "B": 1.0})


def test_incompressible_record():
    r = incompressible(1.27e5, 0.73, 2.95e-12)
    assert isinstance(r, IncompressibleParams)
    d = derive(r)
    assert d.gamma == 1.0
    assert d.lambda_bar == pytest.approx(2.95e-12 * 1.27e5, rel=1e-15)
    assert r.alpha == 1.0 and r.B == 1.0
    assert r.replace(beta=0.0).beta == 0.0
    with pytest.raises(ValueError):
        incompressible(-1.0, 0.5, 1e-12)


def test_tk11bc_preset_is_incompressible():
    p = load_preset("tk11bc")
    assert isinstance(p, IncompressibleParams)
    assert p.M == pytest.approx(1.27e5, rel=1e-12)
    assert (p.beta, p.lambda_beta) == (0.73, 2.95e-12)


def test_biphasic_round_trip():
    bi = BiphasicParams(H_A=4.2e5, k_over_mu=3.1e-15, gamma_ratio=0.8)
    fr = biphasic_equivalence(bi)
    assert fr.beta == 0.0
    assert derive(fr).lambda_bar == pytest.approx(bi.consolidation_coefficient, rel=1e-15)
    back = to_biphasic(fr, gamma_ratio=0.8)
    assert (back.H_A, back.k_over_mu) == (bi.H_A, bi.k_over_mu)
    with pytest.raises(ValueError):
        to_biphasic(incompressible(1e5, 0.3, 1e-12))


def test_permeability_from_drag():
    assert permeability_from_drag(2.0, 1.0) == pytest.approx(1.0 / (4.0 * 2.0))
    with pytest.raises(ValueError):
        permeability_from_drag(0.0, 1.0)


def test_poisson_is_annotation_only():
    a = derive(MaterialParams(**TABLE1))
    b = derive(MaterialParams(**TABLE1, poisson=0.3))
    assert a == b
    assert not math.isnan(a.storage)
