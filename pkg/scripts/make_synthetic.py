"""Regenerate data/synthetic: noisy creep curves from rows of the fitted-parameters preset."""

import argparse
from pathlib import Path

from fracporo import io
from fracporo.fitting import synthetic_creep

ROWS = ("TK11BC", "TK11BR", "TK11BV", "TK16BC1", "TK16BR2")
P_A = 0.07e6
NOISE = 0.005


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "data" / "synthetic", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    table = {r["sample"]: r for r in io.read_parameter_table_csv(io.preset_path("fitted-parameters"))}
    for i, sid in enumerate(ROWS):
        r = table[sid]
        ds = synthetic_creep(
            r["M_pa"], r["beta"], r["lambda_beta"], r["h_mm"] * 1e-3, P_A, noise=NOISE, seed=args.seed + i, sample_id=sid
        )
        io.write_timeseries_csv(
            args.out / f"{sid}.csv",
            ds.samples,
            comments=[
                "synthetic creep curve, not a measurement",
                f"source = fitted-parameters preset row {sid}",
                f"sample = {sid}",
                f"h_mm = {r['h_mm']!r}",
                f"pa = {P_A!r}",
                f"M_pa = {r['M_pa']!r}",
                f"beta = {r['beta']!r}",
                f"lambda_beta = {r['lambda_beta']!r}",
                f"noise_sd = {NOISE} * max|u|, Gaussian, seed = {args.seed + i}",
            ],
        )
        print(args.out / f"{sid}.csv")


if __name__ == "__main__":
    main()
