"""Command-line interface: ``fracporo <subcommand> [options]``.

Every subcommand writes plot-ready CSV (to ``--out`` or stdout); ``--plot``
additionally renders a PNG next to the ``--out`` file. Exit status: 0 success,
1 failed validation or computation, 2 bad input.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from fracporo import analytic, fitting, io, solver, stats, validate
from fracporo.io import InputError
from fracporo.specialfn import ConvergenceError, mittag_leffler

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DEFAULT_H_MM = 3.0
DEFAULT_PA = 0.07e6
DEFAULT_DIAMETER_MM = 3.0
WATER_DENSITY = 1000.0  # kg m^-3


# --- helpers ---------------------------------------------------------------------


def _positive(kind=float):
    def conv(s):
        try:
            v = kind(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {s!r}")
        return v

    return conv


def _grid2(s: str) -> tuple[int, int]:
    try:
        nz, nt = (int(x) for x in s.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 61x100, got {s!r}") from None
    if nz < 2 or nt < 1:
        raise argparse.ArgumentTypeError("grid needs NZ >= 2 and NT >= 1")
    return nz, nt


def _params(args):
    """Material parameters from --preset (name or file), with optional --beta override."""
    src = Path(args.preset)
    params = io.read_params_file(src) if src.is_file() else io.load_preset(args.preset)
    if getattr(args, "beta", None) is not None:
        params = params.replace(beta=args.beta)
    return params


def _problem(args) -> analytic.ConsolidationProblem:
    tol = args.tol if args.tol is not None else 1e-10
    return analytic.ConsolidationProblem(h=args.h * 1e-3, P_A=args.pa, params=_params(args), series_tol=tol)


def _emit(args, header, rows, comments=None) -> None:
    if args.out is None:
        io.write_rows_csv(sys.stdout, header, rows, comments)
    else:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        io.write_rows_csv(args.out, header, rows, comments)


def _plot_target(args, suffix: str = "") -> Path | None:
    if not args.plot:
        return None
    if args.out is None:
        raise InputError("--plot needs --out: the figure is written next to the CSV")
    from fracporo.plotting import figure_path

    return figure_path(Path(args.out), suffix)


def _header_meta(path) -> dict[str, str]:
    """``# key = value`` comment lines of a CSV, e.g. ``# h_mm = 3.7``."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if s and not s.startswith("#"):
                break
            if "=" in s:
                k, v = s.lstrip("#").split("=", 1)
                meta[k.strip()] = v.strip()
    return meta


def _meta_float(meta, key, given, default=None):
    if given is not None:
        return given
    if key in meta:
        try:
            return float(meta[key])
        except ValueError:
            raise InputError(f"header field {key} = {meta[key]!r} is not a number") from None
    if default is None:
        raise InputError(f"--{key.split('_')[0]} not given and no '# {key} = ...' header line")
    return default


# --- subcommands -----------------------------------------------------------------


def cmd_ml(args) -> int:
    tol = args.tol if args.tol is not None else 1e-12
    print(repr(float(mittag_leffler(args.a, args.b, args.z, tol=tol))))
    return EXIT_OK


def _times(t_max: float, nt: int, positive: bool) -> np.ndarray:
    if positive:
        return t_max * np.arange(1, nt + 1) / nt
    return np.linspace(0.0, t_max, nt)


def cmd_analytic(args) -> int:
    prob = _problem(args)
    nz, nt = args.grid
    h = prob.h
    if args.field in ("pressure", "displacement"):
        z = np.linspace(0.0, h, nz)
        t = _times(args.t_max, nt, positive=False)
        Z, T = np.meshgrid(z, t, indexing="ij")
        fn = analytic.pore_pressure if args.field == "pressure" else analytic.displacement
        vals = fn(prob, Z, T)
        rows = ((zi, ti, vi) for zi, ti, vi in zip(Z.ravel(), T.ravel(), vals.ravel()))
        unit = "Pa" if args.field == "pressure" else "m"
    else:
        # base quantities: z = h; flux is singular at t = 0 so the grid starts at t_max/NT
        z = np.array([h])
        t = _times(args.t_max, nt, positive=True)
        if args.field == "flux":
            vals = analytic.flux_at_base(prob, t)
            unit = "m/s"
        else:
            area = math.pi * (args.diameter * 1e-3) ** 2 / 4.0
            vals = analytic.weight_loss(prob, args.w0, args.ws, area, t)
            unit = "kg"
        vals = vals[None, :]
        rows = ((h, ti, vi) for ti, vi in zip(t, vals[0]))
    _emit(args, ["z_m", "t_s", "value"], rows, [f"field = {args.field}", f"unit = {unit}", f"preset = {args.preset}"])
    target = _plot_target(args)
    if target is not None:
        from fracporo.plotting import plot_field, plot_series

        if vals.shape[0] > 1:
            plot_field(z, t, vals, f"{args.field} ({unit})", target)
        else:
            plot_series(t, {args.field: vals[0]}, f"{args.field} ({unit})", target)
    return EXIT_OK


def cmd_solve(args) -> int:
    params = _params(args)
    h = args.h * 1e-3
    nt = max(1, int(round(args.t_max / args.dt)))
    grid = solver.Grid1D(h=h, nz=args.grid, dt=args.dt, nt=nt)
    if args.mode == "creep":
        res = solver.solve(grid, solver.LoadProgram.stress_step(args.pa), params)
    elif args.mode == "creep-ramp":
        prog = solver.LoadProgram.stress_ramp_hold(args.pa, args.ramp_time)
        res = solver.simulate_creep_with_ramp(grid, prog, params)
    else:
        prog = solver.LoadProgram.relaxation(h, rate=args.rate, hold=args.hold)
        res = solver.simulate_relaxation(grid, prog, params)
    k = np.arange(0, res.t.size, args.every)
    t = res.t[k]

    def rows():
        for name, arr in (("pressure", res.p), ("displacement", res.u)):
            for i, zi in enumerate(res.z):
                for kk, ti in zip(k, t):
                    yield name, zi, ti, arr[i, kk]
        for kk, ti in zip(k, t):
            yield "flux_base", h, ti, res.flux_base[kk]
        for kk, ti in zip(k, t):
            yield "reaction_top", 0.0, ti, res.reaction_stress_top[kk]

    _emit(
        args,
        ["field", "z_m", "t_s", "value"],
        rows(),
        [f"mode = {args.mode}", f"preset = {args.preset}", "units: pressure Pa, displacement m, flux_base m/s, reaction_top Pa"],
    )
    target = _plot_target(args)
    if target is not None:
        from fracporo.plotting import plot_field, plot_series

        plot_field(res.z, t, res.p[:, k], "pressure (Pa)", target)
        plot_series(t, {"top displacement": res.u[0, k]}, "displacement (m)", _plot_target(args, "displacement"))
        if args.mode == "relax":
            plot_series(t, {"reaction": res.reaction_stress_top[k]}, "top stress (Pa)", _plot_target(args, "reaction"))
    return EXIT_OK


FIT_HEADER = ["sample", "h_mm", "M_pa", "beta", "lambda_beta", "rms"]


def _fit_one(job: dict) -> dict:
    """Fit one creep file; writes its own outputs so batch workers never share a file."""
    path = Path(job["input"])
    meta = _header_meta(path)
    h_mm = _meta_float(meta, "h_mm", job["h"])
    pa = _meta_float(meta, "pa", job["pa"], DEFAULT_PA)
    ts = io.read_timeseries_csv(path, unit="m")
    ds = fitting.CreepDataset(meta.get("sample", path.stem), h_mm * 1e-3, pa, ts)
    res = fitting.multistart_fit(ds, job["model"], n_starts=job["starts"], seed=job["seed"])
    row = res.as_row(ds.h)
    out = job["out"]
    if out is not None:
        io.write_rows_csv(out, FIT_HEADER, [[row[k] for k in FIT_HEADER]], [f"model = {job['model']}", f"input = {path.name}"])
        if job["plot"]:
            from fracporo.plotting import figure_path, plot_creep_fit

            curve = analytic.displacement_incompressible(res.M, res.beta, res.lambda_beta, ds.h, pa, ds.t)
            plot_creep_fit(ds.t, ds.u, {job["model"]: curve}, figure_path(Path(out)), title=ds.sample_id)
    return {**row, "converged": res.converged}


def cmd_fit(args) -> int:
    base = {"h": args.h, "pa": args.pa, "model": args.model, "starts": args.starts, "seed": args.seed, "plot": args.plot}
    if args.batch is None:
        if args.input is None:
            raise InputError("fit needs --input FILE or --batch DIR")
        row = _fit_one({**base, "input": args.input, "out": args.out, "batch": False})
        if args.out is None:
            io.write_rows_csv(sys.stdout, FIT_HEADER, [[row[k] for k in FIT_HEADER]])
        return EXIT_OK
    src = Path(args.batch)
    files = sorted(p for p in src.glob("*.csv")) if src.is_dir() else []
    if not files:
        raise InputError(f"{src}: no CSV files to fit")
    out_dir = Path(args.out) if args.out is not None else src / "fits"
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [{**base, "input": str(f), "out": str(out_dir / f"{f.stem}.fit.csv"), "batch": True} for f in files]
    workers = args.jobs or min(len(jobs), os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(_fit_one, jobs))
    summary = out_dir / "summary.csv"
    io.write_rows_csv(summary, FIT_HEADER, ([r[k] for k in FIT_HEADER] for r in rows), [f"model = {args.model}"])
    io.write_rows_csv(sys.stdout, FIT_HEADER, ([r[k] for k in FIT_HEADER] for r in rows))
    return EXIT_OK


def _table(args) -> stats.ParameterTable:
    src = args.input if args.input is not None else io.preset_path("fitted-parameters")
    return stats.ParameterTable.from_csv(src)


_REGION_ARG = {"body": "body", "anterior": "anterior", "posterior": "posterior", "all": None}


def cmd_anova(args) -> int:
    table = _table(args)
    cmp = stats.compare_groups(
        table, args.field, region=_REGION_ARG[args.region], group_by=args.group_by, exclude_outliers=not args.keep_outliers
    )
    r = cmp.result
    print(f"field {args.field}, region {args.region}, grouped by {args.group_by}")
    for g, items in cmp.groups.items():
        v = np.array([x for _, x in items])
        sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
        print(f"  {g:<16} n={v.size:<3d} mean={v.mean():.6g} sd={sd:.6g}  {' '.join(s for s, _ in items)}")
    excluded = [f"{g}: {', '.join(ids)}" for g, ids in cmp.excluded.items() if ids]
    print("excluded: " + ("; ".join(excluded) if excluded else "none"))
    print(f"F = {r.F:.6g} on ({r.df_between}, {r.df_within}) df, p = {r.p:.6g}")
    if args.out is not None:
        rows = [[g, s, x, "kept"] for g, items in cmp.groups.items() for s, x in items]
        every = table.where(region=_REGION_ARG[args.region]).groups(args.field, args.group_by)
        for g, ids in cmp.excluded.items():
            vals = dict(every[g])
            rows += [[g, s, vals[s], "excluded"] for s in ids]
        _emit(args, ["group", "sample", "value", "status"], rows, [f"field = {args.field}", f"F = {r.F!r}", f"p = {r.p!r}"])
        target = _plot_target(args)
        if target is not None:
            from fracporo.plotting import plot_groups

            kept = {g: [x for _, x in items] for g, items in cmp.groups.items()}
            out = {g: [x for gg, s, x, st in rows if gg == g and st == "excluded"] for g in cmp.groups}
            plot_groups(kept, out, args.field, target, title=f"p = {r.p:.3g}")
    return EXIT_OK


_PART_LABEL = {"body": "Body", "anterior": "Anthorn", "posterior": "Posthorn"}
_DIR_LABEL = {"circumferential": "Cir", "radial": "Rad", "vertical": "Ver"}
_SUMMARY_SCALE = {"M": 1e5, "beta": 1.0, "lambda_beta": 1e-12}


def cmd_summary(args) -> int:
    table = _table(args)
    per_field = {f: stats.group_summary(table, f, "part", exclude_outliers=not args.keep_outliers) for f in _SUMMARY_SCALE}
    parts = [
        f"{r}-{d}"
        for r in _PART_LABEL
        for d in _DIR_LABEL
        if f"{r}-{d}" in per_field["M"]
    ]
    head = f"{'':<14}{'M x 1e5 (Pa)':>16}{'beta':>16}{'lambda x 1e-12':>18}"
    print(head)
    print(f"{'Part':<14}" + f"{'Mean':>8}{'SD':>8}" * 2 + f"{'Mean':>9}{'SD':>9}")
    rows = []
    for part in parts:
        r, d = part.split("-")
        label = f"{_PART_LABEL[r]} {_DIR_LABEL[d]}"
        cells = []
        for f, scale in _SUMMARY_SCALE.items():
            g = per_field[f][part]
            cells += [g.mean / scale, g.sd / scale]
        n = per_field["M"][part].n
        print(f"{label:<14}" + "".join(f"{c:>8.2f}" for c in cells[:4]) + "".join(f"{c:>9.2f}" for c in cells[4:]))
        excl = sorted({s for f in _SUMMARY_SCALE for s in per_field[f][part].excluded})
        rows.append([label, n, *cells, " ".join(excl)])
    if args.out is not None:
        header = ["part", "n", "M_mean_1e5_pa", "M_sd_1e5_pa", "beta_mean", "beta_sd", "lambda_mean_1e-12", "lambda_sd_1e-12", "excluded"]
        _emit(args, header, rows, ["SD uses n - 1; excluded lists samples dropped from any field by the IQR rule"])
    return EXIT_OK


def cmd_weight_loss(args) -> int:
    prob = _problem(args)
    area = math.pi * (args.diameter * 1e-3) ** 2 / 4.0
    t = np.linspace(0.0, args.t_max, args.n)
    w = analytic.weight_loss(prob, args.w0, args.ws, area, t)
    w1 = analytic.weight_loss(prob, args.w0, args.ws, area, t, single_term=True)
    rows = zip(t, w, w1)
    _emit(args, ["t_s", "weight_kg", "weight_single_term_kg"], rows, [f"preset = {args.preset}", f"area_m2 = {area!r}"])
    target = _plot_target(args)
    if target is not None:
        from fracporo.plotting import plot_series

        plot_series(t, {"full series": w, "first mode": w1}, "weight (kg)", target)
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.list:
        for name in validate.CHECKS:
            print(name)
        print("mutations: " + ", ".join(sorted(validate.MUTATIONS)))
        return EXIT_OK
    if args.mutate is not None and args.mutate not in validate.MUTATIONS:
        raise InputError(f"unknown mutation {args.mutate!r}; choose from {sorted(validate.MUTATIONS)}")
    unknown = [n for n in args.only or [] if n not in validate.CHECKS]
    if unknown:
        raise InputError(f"unknown checks {unknown}; see 'validate --list'")
    report = validate.run_validate(seed=args.seed, only=args.only, mutation=args.mutate)
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        line = f"{status:<5} {c.name:<28} {c.measured:<12.4g} {c.relation} {c.tolerance:<10.3g} {c.seconds:6.2f}s"
        print(line + (f"  {c.note}" if c.note else ""), flush=True)
    print(("all checks passed" if report.ok else "failed: " + ", ".join(report.failed())), flush=True)
    if args.out is not None:
        comments = [f"mutation = {args.mutate}"] if args.mutate else None
        _emit(args, validate.Report.HEADER, report.rows(), comments)
        target = _plot_target(args)
        if target is not None:
            from fracporo.plotting import plot_validation

            cs = report.checks
            plot_validation([c.name for c in cs], [c.measured for c in cs], [c.tolerance for c in cs], [c.relation for c in cs], target)
    return EXIT_OK if report.ok else EXIT_FAIL


# --- parser ------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    # SUPPRESS defaults let the global flags appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol", type=_positive(), default=argparse.SUPPRESS, help="numerical tolerance (series or ML)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized harnesses")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output CSV path (default stdout)")
    p.add_argument("--plot", action="store_true", default=argparse.SUPPRESS, help="also write a PNG next to --out")
    return p


def _material(p: argparse.ArgumentParser, preset_default: str = "final-table-1") -> None:
    p.add_argument("--preset", default=preset_default, help="preset name or key = value parameter file")
    p.add_argument("--beta", type=float, help="override the preset fractional order")
    p.add_argument("--h", type=_positive(), default=DEFAULT_H_MM, help="sample height, mm")
    p.add_argument("--pa", type=_positive(), default=DEFAULT_PA, help="applied stress, Pa")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="fracporo", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("ml", parents=[common], help="evaluate the Mittag-Leffler function E_{a,b}(z)")
    p.add_argument("--a", type=_positive(), required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--z", type=float, required=True)
    p.set_defaults(func=cmd_ml)

    p = sub.add_parser("analytic", parents=[common], help="closed-form fields on a (z, t) grid")
    _material(p)
    p.add_argument("--field", choices=("pressure", "displacement", "flux", "weight"), default="pressure")
    p.add_argument("--grid", type=_grid2, default=(61, 100), help="NZxNT, e.g. 61x100")
    p.add_argument("--t-max", type=_positive(), default=400.0, help="s")
    p.add_argument("--w0", type=float, default=0.0, help="initial weight for --field weight, kg")
    p.add_argument("--ws", type=_positive(), default=WATER_DENSITY, help="fluid density, kg m^-3")
    p.add_argument("--diameter", type=_positive(), default=DEFAULT_DIAMETER_MM, help="mm")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("solve", parents=[common], help="finite-difference solution with fractional memory")
    _material(p)
    p.add_argument("--mode", choices=("creep", "creep-ramp", "relax"), default="creep")
    p.add_argument("--grid", type=_positive(int), default=61, help="number of nodes NZ")
    p.add_argument("--dt", type=_positive(), default=0.1, help="s")
    p.add_argument("--t-max", type=_positive(), default=400.0, help="s")
    p.add_argument("--ramp-time", type=float, default=10.0, help="creep-ramp: load ramp duration, s")
    p.add_argument("--rate", type=_positive(), default=0.003, help="relax: ramp rate, fraction of h per s")
    p.add_argument("--hold", type=float, default=600.0, help="relax: hold after each ramp, s")
    p.add_argument("--every", type=_positive(int), default=1, help="write every k-th time step")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fit", parents=[common], help="fit creep data (time_s,displacement_m)")
    p.add_argument("--input", help="creep CSV")
    p.add_argument("--batch", help="directory of creep CSVs, fitted concurrently")
    p.add_argument("--h", type=_positive(), help="sample height, mm (or '# h_mm = ...' in the file)")
    p.add_argument("--pa", type=_positive(), help="applied stress, Pa (or '# pa = ...'; default 0.07 MPa)")
    p.add_argument("--model", choices=fitting.MODELS, default="fractional")
    p.add_argument("--starts", type=_positive(int), default=4, help="multistart count")
    p.add_argument("--jobs", type=_positive(int), help="batch worker processes")
    p.set_defaults(func=cmd_fit)

    for name, helptext, fn in (
        ("anova", "one-way ANOVA of a fitted parameter across directions", cmd_anova),
        ("summary", "mean/SD of fitted parameters per region and direction", cmd_summary),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--input", help="parameter table CSV (default: the packaged fitted parameters)")
        p.add_argument("--keep-outliers", action="store_true", help="skip the 1.5 IQR exclusion rule")
        if name == "anova":
            p.add_argument("--field", choices=("M", "beta", "lambda_beta"), default="beta")
            p.add_argument("--region", choices=tuple(_REGION_ARG), default="body")
            p.add_argument("--group-by", choices=("direction", "region", "part"), default="direction")
        p.set_defaults(func=fn)

    p = sub.add_parser("weight-loss", parents=[common], help="sample weight during creep")
    _material(p)
    p.add_argument("--w0", type=float, default=0.0, help="initial weight, kg")
    p.add_argument("--ws", type=_positive(), default=WATER_DENSITY, help="fluid density, kg m^-3")
    p.add_argument("--diameter", type=_positive(), default=DEFAULT_DIAMETER_MM, help="mm")
    p.add_argument("--t-max", type=_positive(), default=450.0, help="s")
    p.add_argument("--n", type=_positive(int), default=451, help="number of output times")
    p.set_defaults(func=cmd_weight_loss)

    p = sub.add_parser("validate", parents=[common], help="run the numerical self-checks")
    p.add_argument("--only", nargs="+", metavar="CHECK")
    p.add_argument("--mutate", metavar="NAME", help="inject a coefficient fault first")
    p.add_argument("--list", action="store_true", help="list checks and mutations")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code) if exc.code is not None else EXIT_OK
    for key, default in (("tol", None), ("seed", 0), ("out", None), ("plot", False)):
        if not hasattr(args, key):
            setattr(args, key, default)
    try:
        # checked up front so nothing is computed or printed before the usage error
        if args.plot and args.out is None and getattr(args, "batch", None) is None:
            raise InputError("--plot needs --out: the figure is written next to the CSV")
        code = args.func(args)
        sys.stdout.flush()
        return code
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the final flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_FAIL
    except (InputError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, solver.SolverError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
