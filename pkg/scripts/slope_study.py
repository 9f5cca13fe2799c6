"""How seed-dependent are the fitted statistical-error slopes?

For a given config, prints the slope of the exact expected curve (no
sampling error) and the Monte-Carlo slope for several master seeds.

    python scripts/slope_study.py configs/acceptance_synthetic.json --seeds 8
"""
import argparse
import json

import numpy as np

from projttsa import cli, projection, simulate
from projttsa.fitting import fit_loglog_slope


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--seeds", type=int, default=6)
    args = ap.parse_args()
    with open(args.config) as f:
        base = cli.RunConfig.from_dict(json.load(f)).resolved()
    problems, _ = cli.build_problems(base)
    steps = simulate.StepSizes(base.alpha, base.beta)
    noise = simulate.NoiseModel(base.noise, base.sigma)
    window = tuple(base.fit_window)

    for p in problems:
        cs = projection.constrained_solution(p.system, p.sub_x, p.sub_y)
        x0, y0 = cli._initial_point(base, cs)
        grid = cli._grid(base, base.T)
        ex = simulate.expected_trace(p.system, p.sub_x, p.sub_y, steps, noise, base.T, x0, y0, grid)
        print(f"{p.label}: expected-curve slope {fit_loglog_slope(ex.t, ex.stat_y, window):.3f}")
        mc = []
        for seed in range(args.seeds):
            tr = simulate.run_experiment(p.system, p.sub_x, p.sub_y, steps, noise, base.T,
                                         base.trials, seed, grid, x0, y0, draws=base.draws)
            mc.append(fit_loglog_slope(tr.t, tr.stat_y, window))
        mc = np.array(mc)
        print(f"  Monte-Carlo slopes (seeds 0..{args.seeds - 1}): {np.round(mc, 3)}")
        print(f"  within -1 +/- 0.2: {int(np.sum(np.abs(mc + 1) <= 0.2))}/{len(mc)}")


if __name__ == "__main__":
    main()
