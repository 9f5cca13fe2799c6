"""Synthetic coupled-system experiment: run it and print the headline numbers.

    python scripts/run_synthetic.py [--config configs/acceptance_synthetic.json] [--out out/synthetic]
"""
import argparse
import json
from pathlib import Path

from projttsa import cli

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "acceptance_synthetic.json"))
    ap.add_argument("--out", default="out/synthetic")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    argv = ["synthetic", "--config", args.config, "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    code = cli.main(argv)
    if code:
        raise SystemExit(code)

    s = json.loads((Path(args.out) / "summary.json").read_text())
    ap_ = s["approximation"]
    print(f"assumptions ok: {s['assumptions']['all_ok']}")
    print(f"eps_x^2 = {ap_['eps_x_sq']:.6f}   eps_y^2 = {ap_['eps_y_sq']:.6f}")
    print(f"floors  ||x_p - x*||^2 = {ap_['floor_x']:.6f}   ||y_p - y*||^2 = {ap_['floor_y']:.6f}")
    fin = s["final"]
    print(f"T = {fin['T']}: total_x = {fin['total_x']:.6f}  total_y = {fin['total_y']:.6f}  "
          f"stat_y = {fin['stat_y']:.3e}")
    print(f"stat_y slope = {s['fits'].get('stat_y_slope', float('nan')):.3f}   "
          f"majorant L_y = {s['fits'].get('majorant_L_y', float('nan')):.4f}")
    for m in s["bound_margins"]:
        print(f"bound at T={m['T']}: margin_x = {m['margin_x']:.2f}  margin_y = {m['margin_y']:.2f}")
    print(f"trace written to {Path(args.out) / 'trace.csv'}")


if __name__ == "__main__":
    main()
