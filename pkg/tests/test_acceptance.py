"""Acceptance criteria, one test per criterion, each recording a single pass/fail line."""

import math
import time
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning, quad

from fracporo import analytic, fracops, solver
from fracporo.analytic import ConsolidationProblem
from fracporo.cli import _header_meta, main
from fracporo.fitting import CreepDataset, multistart_fit
from fracporo.io import load_preset, preset_path, read_timeseries_csv
from fracporo.specialfn import mittag_leffler
from fracporo.stats import ParameterTable, anova_one_way, compare_groups, pooled_t_statistic
from fracporo.validate import MUTATIONS, run_validate

H = 3e-3
PA = 0.07e6
SYNTH = Path(__file__).resolve().parents[1] / "data" / "synthetic"


def table1(beta):
    return load_preset("final-table-1").replace(beta=beta)


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_ac1_special_functions(acceptance):
    z = np.linspace(-50.0, 5.0, 1101)
    err_exp = float(np.max(np.abs(mittag_leffler(1.0, 1.0, z, 1e-12) / np.exp(z) - 1.0)))
    half = mittag_leffler(0.5, 1.0, -1.0, 1e-12)
    oracle = math.exp(1.0) * math.erfc(1.0)
    ok = err_exp <= 1e-10 and abs(half - 0.4275836) <= 1e-6 and abs(half - oracle) <= 1e-6
    assert acceptance(
        1, ok, f"E_1,1 = exp on [-50, 5]: max rel err {err_exp:.2e} (<= 1e-10); E_1/2,1(-1) = {half:.10f} vs 0.4275836 +- 1e-6"
    )


def test_ac2_gl_convergence(acceptance):
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        sig = fracops.SampledSignal.from_function(lambda t: t, dt, 1.0)
        errs.append(abs(fracops.gl_derivative(sig, 0.5).values[-1] - 2.0 / math.sqrt(math.pi)))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = min(ratios) >= 1.8
    assert acceptance(2, ok, f"GL of t, beta = 0.5, at t = 1: error ratios {ratios[0]:.3f}, {ratios[1]:.3f} (>= 1.8)")


def test_ac3_classical_limit(acceptance):
    prob = ConsolidationProblem(h=H, P_A=PA, params=table1(0.0), series_tol=1e-13)
    tc = H**2 / prob.derived.lambda_bar
    z, t = np.meshgrid(np.linspace(0.0, H, 61), np.geomspace(1e-4 * tc, 3.0 * tc, 100), indexing="ij")
    errs = {}
    for field, fn in (("pressure", analytic.pore_pressure), ("displacement", analytic.displacement)):
        ref = analytic.terzaghi_classical(prob, z, t, field=field)
        errs[field] = float(np.max(np.abs(fn(prob, z, t) - ref)) / np.max(np.abs(ref)))
    ok = max(errs.values()) <= 1e-10
    assert acceptance(
        3, ok, f"beta = 0 vs Terzaghi on 61x100: p {errs['pressure']:.2e}, u {errs['displacement']:.2e} (<= 1e-10 of max)"
    )


@pytest.mark.slow
def test_ac4_solver_vs_analytic(acceptance):
    grid = solver.Grid1D(h=H, nz=61, dt=0.1, nt=4000)
    parts, ok, slowest = [], True, 0.0
    for beta in (0.0, 0.1, 0.2, 0.4):
        t0 = time.perf_counter()
        params = table1(beta)
        res = solver.solve(grid, solver.LoadProgram.stress_step(PA), params)
        prob = ConsolidationProblem(h=H, P_A=PA, params=params, series_tol=1e-12)
        z, t = np.meshgrid(res.z, res.t, indexing="ij")
        p_ref, u_ref = analytic.pore_pressure(prob, z, t), analytic.displacement(prob, z, t)
        ep, eu = rel_l2(res.p, p_ref), rel_l2(res.u, u_ref)
        # Table 1 drains within ~1 ms, so the full-grid metric is dominated by t = 0; the t > 0 part is shown too
        late = rel_l2(res.u[:, 1:], u_ref[:, 1:])
        slowest = max(slowest, time.perf_counter() - t0)
        ok &= ep <= 1e-2 and eu <= 1e-2
        parts.append(f"b={beta:g}: p {ep:.1e} u {eu:.1e} (u, t>0: {late:.1e})")
    ok &= slowest < 60.0
    assert acceptance(4, ok, "rel L2 <= 1e-2, dt 0.1 s to 400 s; " + "; ".join(parts) + f"; slowest {slowest:.1f} s")


def test_ac5_beta_ordering(acceptance):
    # common dimensionless setting: lambda_bar T^(1-beta)/h^2 = 2 with T = 400 s, profiles at t = 15 s
    T, lam_hat, t = 400.0, 2.0, 15.0
    z = np.linspace(0.0, H, 61)
    profiles = []
    for beta in (0.0, 0.1, 0.5):
        p = table1(beta)
        scale = lam_hat * H**2 / (ConsolidationProblem(h=H, P_A=PA, params=p).derived.lambda_bar * T ** (1.0 - beta))
        prob = ConsolidationProblem(h=H, P_A=PA, params=p.replace(lambda_beta=p.lambda_beta * scale))
        profiles.append(analytic.pore_pressure(prob, z, t))
    inner = np.array(profiles)[:, 1:-1]
    ok = bool(np.all(inner[1] < inner[0]) and np.all(inner[2] < inner[1]))
    mid = np.array(profiles)[:, 30]
    assert acceptance(
        5, ok, f"p(z, t/T = 15/400) strictly lower for higher beta on 59 interior nodes; mid-depth {mid[0]:.0f} > {mid[1]:.0f} > {mid[2]:.0f} Pa"
    )


def test_ac6_flux_weight_identity(acceptance):
    area = math.pi * (1.5e-3) ** 2
    w_s, W0 = 1000.0, 1e-3
    worst = 0.0
    for name in ("draft-table-1", "final-table-1", "tk11bc"):
        params = load_preset(name)
        prob = ConsolidationProblem(h=H, P_A=PA, params=params, series_tol=1e-12)
        q = 2.0 / (1.0 - params.beta)  # t = s^q removes the singular start of the flux

        def f(s):
            return float(analytic.flux_at_base(prob, s**q)) * q * s ** (q - 1.0) if s > 0 else 0.0

        for T in (10.0, 100.0, 400.0):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IntegrationWarning)
                integral, _ = quad(f, 0.0, T ** (1.0 / q), epsabs=0.0, epsrel=1e-11, limit=200)
            bracket = W0 - analytic.weight_loss(prob, W0, w_s, area, T)
            worst = max(worst, abs(w_s * area * integral / bracket - 1.0))
    ok = worst <= 1e-6
    assert acceptance(6, ok, f"w_s A int flux dt vs weight loss, 3 presets x T in (10, 100, 400) s: worst rel {worst:.2e} (<= 1e-6)")


@pytest.mark.slow
def test_ac7_fitting_round_trip(acceptance):
    t0 = time.perf_counter()
    worst = {"M": 0.0, "beta": 0.0, "lambda_beta": 0.0}
    classical_higher = True
    rows = []
    for path in sorted(SYNTH.glob("*.csv")):
        meta = _header_meta(path)
        ds = CreepDataset(meta["sample"], float(meta["h_mm"]) * 1e-3, float(meta["pa"]), read_timeseries_csv(path))
        frac = multistart_fit(ds, n_starts=4, seed=0)
        cl = multistart_fit(ds, "classical", n_starts=4, seed=0)
        errs = {
            "M": frac.M / float(meta["M_pa"]) - 1.0,
            "beta": frac.beta / float(meta["beta"]) - 1.0,
            "lambda_beta": frac.lambda_beta / float(meta["lambda_beta"]) - 1.0,
        }
        for k, v in errs.items():
            worst[k] = max(worst[k], abs(v))
        classical_higher &= cl.rms > frac.rms
        rows.append(f"{ds.sample_id} M {errs['M']:+.1%} b {errs['beta']:+.2%} l {errs['lambda_beta']:+.1%} rms {frac.rms:.1e}/{cl.rms:.1e}")
    seconds = time.perf_counter() - t0
    recovered = all(v <= 0.05 for v in worst.values())
    ok = recovered and classical_higher and len(rows) == 5
    text = (
        f"5 rows, 0.5% noise, 4 starts: worst |err| M {worst['M']:.1%}, beta {worst['beta']:.2%}, "
        f"lambda {worst['lambda_beta']:.1%} (<= 5%); classical rms higher: {classical_higher}; {seconds:.0f} s"
    )
    acceptance(7, ok, text)
    for r in rows:
        print("  " + r)
    assert ok, text


def test_ac8_anova(acceptance):
    textbook = [[6, 8, 4, 5, 3, 4], [8, 12, 9, 11, 6, 8], [13, 9, 11, 8, 7, 12]]
    F, p = anova_one_way(textbook)
    affine = anova_one_way([[3.5 * x - 120.0 for x in g] for g in textbook])
    a, b = textbook[0], textbook[2]
    t2 = pooled_t_statistic(a, b) ** 2
    F2 = anova_one_way([a, b]).F
    ok = (
        abs(F - 9.264) <= 1e-3
        and abs(p - 0.0024) <= 1e-3
        and abs(affine.F / F - 1) <= 1e-10
        and abs(affine.p / p - 1) <= 1e-10
        and abs(F2 / t2 - 1) <= 1e-10
    )
    table = ParameterTable.from_csv(preset_path("fitted-parameters"))
    reported = ", ".join(
        f"{f} {compare_groups(table, f).result.p:.3g} (paper {pp})" for f, pp in (("M", 0.329), ("beta", 0.001), ("lambda_beta", 0.0038))
    )
    assert acceptance(8, ok, f"textbook F = {F:.4f}, p = {p:.5f}; affine and F = t^2 hold; published-table p (reported only): {reported}")


@pytest.mark.slow
def test_ac9_validate_and_mutations(acceptance, capsys):
    code = main(["validate"])
    capsys.readouterr()
    flipped = {}
    for name in MUTATIONS:
        flipped[name] = run_validate(mutation=name).failed()
    ok = code == 0 and all(flipped.values())
    detail = "; ".join(f"{k} -> {', '.join(v) or 'none'}" for k, v in flipped.items())
    assert acceptance(9, ok, f"validate exit {code}; mutations: {detail}")
