"""Consensus values of every protocol on the two 5-node reference graphs.

The balanced graph drives all mean-preserving protocols to am(x0) and the
entropic one to gm(x0); on the unbalanced graph the limits become the
Perron-weighted means am_w and gm_w.

    python3 scripts/reproduce_fig1.py [--outdir DIR]
"""

import argparse
from pathlib import Path

from gmconsensus.dynamics import IntegratorConfig, integrate, write_trajectory_csv
from gmconsensus.graph import fig1a_balanced_graph, fig1b_graph, is_balanced, perron_left_vector
from gmconsensus.means import am, am_w, gm, gm_w

X0 = [6.5, 0.2, 3.2, 1.0, 4.4]
PROTOCOLS = ["linear", "entropic", "scaling", "metric:hyperbolic"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=Path, help="write one trajectory CSV per run")
    args = ap.parse_args()
    cfg = IntegratorConfig(t_end=500.0, consensus_tol=1e-9)

    for label, g in [("balanced (Fig. 1a/1c)", fig1a_balanced_graph()),
                     ("unbalanced (Fig. 1b/1d)", fig1b_graph())]:
        q = perron_left_vector(g)
        print(f"{label}: perron = {[round(float(v), 4) for v in q]}")
        print(f"  references: am {am(X0):.4f}  gm {gm(X0):.4f}  "
              f"am_w {am_w(X0, q):.4f}  gm_w {gm_w(X0, q):.4f}")
        kinds = PROTOCOLS + (["polynomial"] if is_balanced(g) else [])
        for kind in kinds:
            traj = integrate(kind, g, X0, cfg)
            print(f"  {kind:18s} consensus {traj.consensus_value:.4f}  t = {traj.times[-1]:.2f}")
            if args.outdir:
                args.outdir.mkdir(parents=True, exist_ok=True)
                tag = "balanced" if is_balanced(g) else "unbalanced"
                name = f"fig1_{tag}_{kind.replace(':', '_')}.csv"
                write_trajectory_csv(traj, args.outdir / name, g)


if __name__ == "__main__":
    main()
