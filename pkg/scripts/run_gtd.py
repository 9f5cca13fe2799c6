"""GTD policy-evaluation experiment over the three feature families.

    python scripts/run_gtd.py [--config configs/acceptance_gtd.json] [--out out/gtd]
"""
import argparse
import json
from pathlib import Path

from projttsa import cli

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "acceptance_gtd.json"))
    ap.add_argument("--out", default="out/gtd")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    argv = ["gtd", "--config", args.config, "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    code = cli.main(argv)
    if code:
        raise SystemExit(code)

    s = json.loads((Path(args.out) / "summary.json").read_text())
    print(f"{'family':8s} {'eps_y^2':>12s} {'approx':>10s} {'slope':>8s} {'L_y':>8s}")
    for label, f in s["families"].items():
        a = f["approximation"]
        print(f"{label:8s} {a['eps_y_sq']:12.8f} {a['floor_y']:10.4f} "
              f"{f['fits'].get('stat_y_slope', float('nan')):8.3f} "
              f"{f['fits'].get('majorant_L_y', float('nan')):8.3f}")
    o = s["ordering"]
    print(f"approximation error ordered well < medium < poor: {o['approx_ordered']}")
    if "stat_y_slope_spread" in o:
        print(f"slope spread: {o['stat_y_slope_spread']:.3f}")


if __name__ == "__main__":
    main()
