"""Bound study for the polynomial protocol's consensus value (Figs. 4 to 6).

Desk scale runs in well under a minute; ``--scale full`` uses the
original sizes (complete graphs up to 50 nodes, 500 trials for the ratio
plot, (30, d)-regular graphs with 30 trials) and takes much longer.

    python3 scripts/bound_study.py --outdir results [--scale full] [--workers 4]
"""

import argparse
import json
from pathlib import Path

from gmconsensus import experiments

SCALES = {
    "desk": dict(sweep_n=range(2, 16), sweep_trials=20, ratio_trials=100,
                 reg_n=12, reg_d=range(2, 9), reg_trials=10),
    "full": dict(sweep_n=range(2, 51), sweep_trials=50, ratio_trials=500,
                  reg_n=30, reg_d=range(2, 23), reg_trials=30),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    ap.add_argument("--scale", choices=sorted(SCALES), default="desk")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    s = SCALES[args.scale]
    args.outdir.mkdir(parents=True, exist_ok=True)

    runs = {
        "fig4_sweep": lambda: experiments.run_complete_graph_sweep(
            s["sweep_n"], s["sweep_trials"], 4.0, 3.0, args.seed, workers=args.workers),
        "fig5_ratio": lambda: experiments.run_ratio_experiment(
            5, s["ratio_trials"], 0.0, 10.0, args.seed, workers=args.workers),
        "fig6_normalized": lambda: experiments.run_regular_graph_experiment(
            s["reg_n"], s["reg_d"], s["reg_trials"], True, args.seed, workers=args.workers),
        "fig6_unit_weights": lambda: experiments.run_regular_graph_experiment(
            s["reg_n"], s["reg_d"], s["reg_trials"], False, args.seed, workers=args.workers),
    }
    for name, run in runs.items():
        report = run()
        (args.outdir / f"{name}.csv").write_text(report.to_csv())
        print(name, json.dumps(report.summary()))


if __name__ == "__main__":
    main()
