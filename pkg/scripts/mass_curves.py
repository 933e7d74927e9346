"""Trace M(lambda) for the standard (q, p) configurations and write plot-ready files.

    python3 scripts/mass_curves.py out/ --points 81 --workers 4
"""

import argparse
from pathlib import Path

from kirchhoff_gs.cli import dumps, mass_curve_summary
from kirchhoff_gs.core import DEFAULT_CONTROLS, validate_params
from kirchhoff_gs.curve import trace

CONFIGS = [(3, 4), (3.5, 4.5), (3, 5), (4, 5), (10 / 3, 4), (3, 14 / 3)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--lambda-min", type=float, default=1e-6)
    ap.add_argument("--lambda-max", type=float, default=1e6)
    ap.add_argument("--points", type=int, default=61)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for q, p in CONFIGS:
        P = validate_params(3, args.a, args.b, q, p)
        curve = trace(P, args.lambda_min, args.lambda_max, args.points, workers=args.workers)
        name = f"mass_q{q:.4g}_p{p:.4g}"
        csv_path, json_path = args.out / f"{name}.csv", args.out / f"{name}.json"
        csv_path.write_text(curve.to_csv())
        json_path.write_text(dumps(mass_curve_summary(curve, DEFAULT_CONTROLS)))
        print(csv_path, curve.end_signs(), curve.turning_values())


if __name__ == "__main__":
    main()
