"""Command-line front end.

    biphoton-qudit-sim <prepare|scan|interfere|map|analyze> [--config FILE] [overrides...] [--out DIR] [--plot]

Exit codes: 0 ok, 2 config/validation error, 3 numerical failure, 4 input-file error.
Precedence: defaults < config file < BQS_SEED < command-line flags.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import svgplot
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .diagnostics import (
    conditionality_witness,
    entanglement_entropy,
    negativity,
    purity,
    schmidt_spectrum,
)
from .experiment import (
    fidelity,
    probability_table,
    read_scan_csv,
    read_table_csv,
    reconstruct_state,
    scan_all,
    scan_grid,
    near_field_scan,
    write_scan_csv,
    write_table_csv,
)
from .far_field import (
    DegenerateImagingError,
    FringeSlice,
    coincidence_map,
    default_fringe_grid,
    fringe_slice,
)
from .geometry import GeometryError, SlitIndex, slit_indices
from .states import (
    CorrelatedMixture,
    QuadratureError,
    QuditPureState,
    classically_correlated_state,
    ideal_entangled_state,
    project_biphoton,
    read_state_csv,
    state_from_anti_diagonal,
    write_state_csv,
)

EXIT_CONFIG, EXIT_NUMERIC, EXIT_INPUT = 2, 3, 4


class InputFileError(Exception):
    pass


# (flag, block, field, type, help)
OVERRIDES = [
    ("--wavelength", "geometry", "wavelength", float, "down-converted wavelength [m]"),
    ("--dimension", "geometry", "dimension", int, "number of slits D"),
    ("--slit-half-width", "geometry", "slit_half_width", float, "slit half width a [m]"),
    ("--slit-spacing", "geometry", "slit_spacing", float, "slit centre spacing d [m]"),
    ("--z-aperture", "geometry", "z_aperture", float, "crystal to aperture distance z_A [m]"),
    ("--detector-near-offset", "geometry", "detector_near_offset", float, "near-field detector distance behind slits [m]"),
    ("--detector-slit-width", "geometry", "detector_slit_width", float, "detector entrance slit width [m]"),
    ("--lens-focal", "geometry", "lens_focal", float, "far-field lens focal length f [m]"),
    ("--lens-position", "geometry", "lens_position", float, "crystal to lens distance z_L [m]"),
    ("--detector-far-plane", "geometry", "detector_far_plane", float, "crystal to far-field detector plane z [m]"),
    ("--pump-shape", "pump", "shape", str, "gaussian or tabulated"),
    ("--pump-waist", "pump", "waist", float, "gaussian pump waist [m]"),
    ("--pump-center", "pump", "center", float, "pump centre in the aperture plane [m]"),
    ("--seed", "noise", "seed", int, "RNG seed (also BQS_SEED)"),
    ("--flux", "noise", "mean_pair_flux", float, "pair flux [1/s]"),
    ("--acquisition", "noise", "acquisition", float, "acquisition time per scan point [s]"),
    ("--singles-per-pair", "noise", "singles_per_pair", float, "singles-to-pair flux ratio"),
    ("--scan-points-per-spacing", "grids", "scan_points_per_spacing", int, "near-field scan points per slit spacing"),
    ("--fringe-half-span", "grids", "fringe_half_span", float, "x1 half range of fringe slices [m]"),
    ("--fringe-points", "grids", "fringe_points", int, "x1 samples per fringe slice"),
    ("--x2", "grids", "x2_slices", None, "fixed D2 positions for fringe slices [m]"),
    ("--map-half-span", "grids", "map_half_span", float, "half range of coincidence map axes [m]"),
    ("--map-points", "grids", "map_points", int, "samples per coincidence map axis"),
    ("--score-threshold", "thresholds", "score", float, "witness sup-norm threshold"),
    ("--visibility-threshold", "thresholds", "visibility", float, "witness visibility threshold"),
    ("--quad-order", "quadrature", "order", int, "starting Gauss-Legendre order per axis"),
    ("--quad-rtol", "quadrature", "rtol", float, "quadrature relative tolerance"),
    ("--quad-max-order", "quadrature", "max_order", int, "largest Gauss-Legendre order tried"),
]


def _dest(flag: str) -> str:
    return "ov_" + flag.lstrip("-").replace("-", "_")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--plot", action="store_true", help="also write SVG figures")
    g = p.add_argument_group("configuration overrides")
    for flag, _, _, typ, help_ in OVERRIDES:
        if typ is None:
            g.add_argument(flag, dest=_dest(flag), type=float, nargs="+", help=help_)
        else:
            g.add_argument(flag, dest=_dest(flag), type=typ, help=help_)


def _source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["ideal", "numeric", "cc"], default="ideal", help="state to prepare inline")
    p.add_argument("--state", type=Path, help="state or mixture CSV (overrides --mode)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biphoton-qudit-sim", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="build a state and write it as CSV")
    _common(p)
    p.add_argument("--mode", choices=["ideal", "numeric", "cc"], default="ideal")

    p = sub.add_parser("scan", help="simulate near-field coincidence scans")
    _common(p)
    _source_args(p)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--all", action="store_true", help="one scan per fixed D1 slit")
    which.add_argument("--fixed-slit", help="D1 slit label, e.g. +1/2")
    p.add_argument("--noiseless", action="store_true", help="write expected counts instead of Poisson draws")

    p = sub.add_parser("interfere", help="far-field conditional fringe slices")
    _common(p)
    _source_args(p)
    p.add_argument("--source", choices=["state", "cc"], help="'cc' is shorthand for --mode cc")
    p.add_argument("--smoothed", action="store_true", help="average over the detector slit width")

    p = sub.add_parser("map", help="far-field coincidence map C(x1, x2)")
    _common(p)
    _source_args(p)
    p.add_argument("--smoothed", action="store_true")

    p = sub.add_parser("analyze", help="histogram, reconstruction, fidelity and diagnostics")
    _common(p)
    p.add_argument("--scans", type=Path, nargs="+", help="scan CSVs, one per fixed slit")
    p.add_argument("--table", type=Path, help="histogram CSV")
    p.add_argument("--amplitudes", help="comma-separated |c[l][-l]| ordered by ascending l")
    p.add_argument("--state", type=Path, help="state or mixture CSV to diagnose")
    p.add_argument("--slices", type=Path, nargs="+", help="fringe slice CSVs for the witness")
    p.add_argument("--renormalize", action="store_true", help="renormalize the reconstruction before fidelity")
    return parser


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    config = load_config(args.config)
    if environ.get("BQS_SEED") is not None:
        try:
            seed = int(environ["BQS_SEED"])
        except ValueError:
            raise ConfigError(f"BQS_SEED must be an integer, got {environ['BQS_SEED']!r}") from None
        config = apply_overrides(config, {"noise": {"seed": seed}})
    overrides: dict[str, dict] = {}
    for flag, block, field, _, _ in OVERRIDES:
        value = getattr(args, _dest(flag), None)
        if value is not None:
            overrides.setdefault(block, {})[field] = value
    return apply_overrides(config, overrides)


# ---- helpers ---------------------------------------------------------------

def _prepare(config: RunConfig, mode: str):
    g = config.geometry
    if mode == "ideal":
        return ideal_entangled_state(g)
    if mode == "cc":
        return classically_correlated_state(g)
    return project_biphoton(g, config.pump.profile(), config.quadrature.spec())


def _load_source(args, config: RunConfig):
    if getattr(args, "source", None) == "cc":
        return classically_correlated_state(config.geometry)
    if args.state is not None:
        src = _read(read_state_csv, args.state)
        if src.dimension != config.geometry.dimension:
            raise ConfigError(
                f"{args.state} has D={src.dimension} but the geometry has D={config.geometry.dimension}"
            )
        return src
    return _prepare(config, args.mode)


def _read(reader, path: Path):
    try:
        return reader(path)
    except FileNotFoundError:
        raise InputFileError(f"{path}: no such file") from None
    except (ValueError, KeyError, IndexError) as exc:
        raise InputFileError(f"{path}: {exc}") from None


def _slit_tag(s: SlitIndex) -> str:
    return f"{s.twice_l:+d}"


def _mm(x: float) -> str:
    return f"{x * 1e3:.4f} mm"


# ---- subcommands -----------------------------------------------------------

def cmd_prepare(args, config: RunConfig) -> int:
    state = _prepare(config, args.mode)
    args.out.mkdir(parents=True, exist_ok=True)
    name = "mixture.csv" if isinstance(state, CorrelatedMixture) else "state.csv"
    n = write_state_csv(args.out / name, state)
    if isinstance(state, QuditPureState):
        print(f"norm={state.norm:.12f} nonzero={n}")
    else:
        print(f"weight_sum={state.weights.sum():.12f} nonzero={n}")
    print(f"wrote {args.out / name}")
    return 0


def cmd_scan(args, config: RunConfig) -> int:
    g = config.geometry
    source = _load_source(args, config)
    grid = scan_grid(g, config.grids.scan_points_per_spacing)
    n = config.noise
    kwargs = dict(singles_per_pair=n.singles_per_pair, noiseless=args.noiseless)
    if args.all:
        records = scan_all(source, grid, n.mean_pair_flux, n.acquisition, n.seed, g, **kwargs)
    else:
        try:
            fixed = SlitIndex.parse(args.fixed_slit, g.dimension)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        records = [near_field_scan(source, fixed, grid, n.mean_pair_flux, n.acquisition, n.seed, g, **kwargs)]
    args.out.mkdir(parents=True, exist_ok=True)
    for r in records:
        path = args.out / f"scan_l{_slit_tag(r.fixed_slit)}.csv"
        write_scan_csv(path, r)
        peak = int(np.argmax(r.coincidences))
        print(f"D1 at l={r.fixed_slit}: {int(np.sum(r.coincidences))} coincidences, "
              f"peak at x2={_mm(r.scan_positions[peak])} -> {path.name}")
        if args.plot:
            svgplot.line_plot(
                path.with_suffix(".svg"),
                [svgplot.Series("D2 singles", r.scan_positions * 1e3, r.singles, "open"),
                 svgplot.Series("D1-D2 coincidences", r.scan_positions * 1e3, r.coincidences, "filled")],
                f"D={g.dimension}, D1 fixed behind slit l={r.fixed_slit}", "x2 [mm]", "counts",
            )
    return 0


def write_slice_csv(path: Path, s: FringeSlice) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# x2_m={s.x2!r}\n")
        fh.write(f"# visibility={s.visibility!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1_m", "rate"])
        for x, r in zip(s.x1, s.rates):
            w.writerow([repr(float(x)), repr(float(r))])


def read_slice_csv(path: Path) -> FringeSlice:
    meta = {}
    rows = []
    header = None
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                k, _, v = line.lstrip("#").strip().partition("=")
                meta[k.strip()] = v.strip()
            elif header is None:
                header = line.split(",")
            else:
                rows.append([float(v) for v in line.split(",")])
    if header != ["x1_m", "rate"]:
        raise ValueError(f"expected header x1_m,rate, got {header}")
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return FringeSlice(float(meta["x2_m"]), arr[:, 0], arr[:, 1], float(meta["visibility"]))


def cmd_interfere(args, config: RunConfig) -> int:
    g = config.geometry
    source = _load_source(args, config)
    grid = default_fringe_grid(config.grids.fringe_points, config.grids.fringe_half_span)
    slices = [fringe_slice(source, x2, grid, g, smoothed=args.smoothed) for x2 in config.grids.x2_slices]
    args.out.mkdir(parents=True, exist_ok=True)
    for k, s in enumerate(slices):
        path = args.out / f"slice_{k}.csv"
        write_slice_csv(path, s)
        print(f"x2={s.x2 * 1e6:.1f} um visibility={s.visibility:.6f} -> {path.name}")
    if len(slices) >= 2:
        t = config.thresholds
        w = conditionality_witness(slices, t.score, t.visibility)
        print(f"witness_score={w.score:.6f} verdict={w.verdict}")
    if args.plot:
        svgplot.line_plot(
            args.out / "slices.svg",
            [svgplot.Series(f"x2 = {s.x2 * 1e6:.0f} um", s.x1 * 1e3, s.normalized()) for s in slices],
            f"Coincidences vs D1 position (D={g.dimension})", "x1 [mm]", "normalized coincidence rate",
        )
    return 0


def cmd_map(args, config: RunConfig) -> int:
    g = config.geometry
    source = _load_source(args, config)
    axis = np.linspace(-config.grids.map_half_span, config.grids.map_half_span, config.grids.map_points)
    cmap = coincidence_map(source, axis, axis, g, smoothed=args.smoothed)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "map.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"# provenance={cmap.provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1_m", "x2_m", "rate"])
        for i, x1 in enumerate(cmap.x1):
            for j, x2 in enumerate(cmap.x2):
                w.writerow([repr(float(x1)), repr(float(x2)), repr(float(cmap.rates[i, j]))])
    print(f"{cmap.provenance} map {len(axis)}x{len(axis)}, max rate {cmap.rates.max():.6g} -> {path.name}")
    if args.plot:
        svgplot.heat_map(args.out / "map.svg", axis * 1e3, axis * 1e3, cmap.rates,
                         f"C(x1, x2), {cmap.provenance}", "x1 [mm]", "x2 [mm]")
    return 0


def cmd_analyze(args, config: RunConfig) -> int:
    g = config.geometry
    D = g.dimension
    report: list[tuple[str, object]] = []
    reference = ideal_entangled_state(g)
    table = recon = None
    if args.scans:
        records = [_read(read_scan_csv, p) for p in args.scans]
        if any(r.dimension != D for r in records):
            raise ConfigError("scan files disagree with the configured dimension")
        table = probability_table(records, g)
    elif args.table:
        table = _read(read_table_csv, args.table)
        if table.dimension != D:
            raise ConfigError(f"table has D={table.dimension}, geometry has D={D}")
    args.out.mkdir(parents=True, exist_ok=True)
    if table is not None:
        write_table_csv(args.out / "histogram.csv", table)
        recon = reconstruct_state(table, g)
        print("probability table (rows: D1 slit, columns: D2 slit)")
        labels = [str(s) for s in slit_indices(D)]
        print("      " + " ".join(f"{l:>8}" for l in labels))
        for l, row in zip(labels, table.probabilities):
            print(f"{l:>5} " + " ".join(f"{p:8.4f}" for p in row))
    if args.amplitudes:
        try:
            mags = [float(v.replace(" ", "")) for v in args.amplitudes.split(",")]
            recon = state_from_anti_diagonal(mags, g)
        except ValueError as exc:
            raise ConfigError(f"--amplitudes: {exc}") from None
    if recon is not None:
        write_state_csv(args.out / "reconstructed_state.csv", recon)
        report.append(("reconstruction_norm_sq", recon.norm**2))
        report.append(("fidelity", fidelity(recon, reference, renormalize=args.renormalize)))
    diag = None
    if args.state:
        diag = _read(read_state_csv, args.state)
        if diag.dimension != D:
            raise ConfigError(f"{args.state} has D={diag.dimension}, geometry has D={D}")
    elif recon is not None:
        diag = recon.normalized()
    if diag is not None:
        if isinstance(diag, QuditPureState):
            schmidt = schmidt_spectrum(diag)
            report.append(("schmidt_coefficients", " ".join(f"{c:.10g}" for c in schmidt)))
            report.append(("entropy_bits", entanglement_entropy(diag.normalized())))
        report.append(("negativity", negativity(diag)))
        report.append(("purity", purity(diag)))
    if args.slices:
        slices = [_read(read_slice_csv, p) for p in args.slices]
        t = config.thresholds
        w = conditionality_witness(slices, t.score, t.visibility)
        report.append(("witness_score", w.score))
        report.append(("verdict", w.verdict))
    with open(args.out / "report.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["metric", "value"])
        for k, v in report:
            wr.writerow([k, repr(v) if isinstance(v, float) else v])
    for k, v in report:
        print(f"{k}: {v:.6f}" if isinstance(v, float) else f"{k}: {v}")
    return 0


COMMANDS = {
    "prepare": cmd_prepare,
    "scan": cmd_scan,
    "interfere": cmd_interfere,
    "map": cmd_map,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except (ConfigError, GeometryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, DegenerateImagingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InputFileError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
