"""Witness score, visibility and negativity along lam*|psi><psi| + (1-lam)*rho_cc."""
import argparse
import csv
from pathlib import Path

import numpy as np

from biphoton_qudit_sim import svgplot
from biphoton_qudit_sim.diagnostics import conditionality_witness, mix, negativity
from biphoton_qudit_sim.far_field import default_fringe_grid, fringe_slice
from biphoton_qudit_sim.geometry import ExperimentGeometry
from biphoton_qudit_sim.states import classically_correlated_state, ideal_entangled_state


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/witness"))
    ap.add_argument("--dimension", type=int, default=4)
    ap.add_argument("--steps", type=int, default=21)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    g = ExperimentGeometry(dimension=args.dimension)
    psi, cc = ideal_entangled_state(g), classically_correlated_state(g)
    grid = default_fringe_grid()
    rows = []
    for lam in np.linspace(0.0, 1.0, args.steps):
        rho = mix([lam, 1 - lam], [psi, cc])
        w = conditionality_witness([fringe_slice(rho, x2, grid, g) for x2 in (0.0, 300e-6)])
        rows.append((lam, w.score, min(w.visibilities), negativity(rho), w.verdict))
        print(f"lambda={lam:.2f} score={w.score:.4f} min_visibility={min(w.visibilities):.4f} "
              f"negativity={rows[-1][3]:.4f} {w.verdict}")
    with open(args.out / "sweep.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["lambda", "score", "min_visibility", "negativity", "verdict"])
        wr.writerows(rows)
    lam = [r[0] for r in rows]
    svgplot.line_plot(
        args.out / "sweep.svg",
        [svgplot.Series("witness score", lam, [r[1] for r in rows]),
         svgplot.Series("min visibility", lam, [r[2] for r in rows]),
         svgplot.Series("negativity / max", lam, [r[3] / max(rows[-1][3], 1e-300) for r in rows])],
        f"Mixing sweep, D={g.dimension}", "lambda", "value",
    )


if __name__ == "__main__":
    main()
