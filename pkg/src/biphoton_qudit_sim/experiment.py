"""Near-field coincidence scans, probability histograms and fidelities.

Detectors sit just behind the slits, so transmission is a geometric shadow:
the counting rate at a detector window is the slit population times the
fraction of the slit the window covers.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import ExperimentGeometry, SlitIndex, nearest_slit, slit_indices
from .states import CorrelatedMixture, QuditPureState, fresnel_phase


@dataclass(eq=False)
class ScanRecord:
    fixed_slit: SlitIndex
    scan_positions: np.ndarray
    singles: np.ndarray
    coincidences: np.ndarray
    acquisition: float
    seed: int | None
    mean_pair_flux: float
    dimension: int

    def __post_init__(self):
        self.scan_positions = np.asarray(self.scan_positions, dtype=float)
        self.singles = np.asarray(self.singles)
        self.coincidences = np.asarray(self.coincidences)
        n = len(self.scan_positions)
        if len(self.singles) != n or len(self.coincidences) != n:
            raise ValueError("scan positions, singles and coincidences differ in length")
        if np.any(self.singles < 0) or np.any(self.coincidences < 0):
            raise ValueError("negative counts in scan record")


@dataclass(eq=False)
class ProbabilityTable:
    dimension: int
    probabilities: np.ndarray
    std_errors: np.ndarray

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        self.std_errors = np.asarray(self.std_errors, dtype=float)
        shape = (self.dimension, self.dimension)
        if self.probabilities.shape != shape or self.std_errors.shape != shape:
            raise ValueError(f"probability table must be {shape}")
        if np.any(self.probabilities < 0) or np.any(self.std_errors < 0):
            raise ValueError("probabilities and errors must be nonnegative")
        if abs(self.probabilities.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {self.probabilities.sum()!r}")


def scan_grid(geometry: ExperimentGeometry, points_per_spacing: int = 40) -> np.ndarray:
    """Uniform D2 positions covering the aperture plus half a spacing each side.

    Every slit sees the same set of detector offsets, so noiseless histograms
    come out exactly balanced.
    """
    D = geometry.dimension
    n = D * points_per_spacing + 1
    return (np.arange(n) / points_per_spacing - D / 2.0) * geometry.slit_spacing


def overlap_fraction(x, s: SlitIndex, geometry: ExperimentGeometry):
    """Fraction of slit ``s`` seen through a detector window centred at ``x``."""
    x = np.asarray(x, dtype=float)
    a = geometry.slit_half_width
    half = 0.5 * geometry.detector_slit_width
    d = geometry.slit_spacing
    # offset from the slit centre, snapped to a d/2^40 lattice so equal
    # offsets from different slits give bit-identical fractions
    u = np.round((x - geometry.slit_center(s)) / d * _SNAP) / _SNAP * d
    lo = np.maximum(u - half, -a)
    hi = np.minimum(u + half, a)
    return np.clip(hi - lo, 0.0, None) / (2.0 * a)


_SNAP = float(2**40)


def pair_probabilities(source: QuditPureState | CorrelatedMixture) -> np.ndarray:
    return source.pair_probabilities()


def _stream(seed: int, fixed_slit: SlitIndex, dimension: int) -> np.random.Generator:
    # one independent stream per (seed, fixed slit)
    return np.random.default_rng([int(seed), fixed_slit.twice_l + dimension])


def expected_rates(source, fixed_slit: SlitIndex, grid, flux: float, geometry: ExperimentGeometry, singles_per_pair: float = 10.0):
    """Mean (singles, coincidences) per second at every D2 position."""
    D = geometry.dimension
    fixed_slit.check(D)
    P = pair_probabilities(source)
    i = fixed_slit.position(D)
    grid = np.asarray(grid, dtype=float)
    coinc = np.zeros(grid.shape)
    singles = np.zeros(grid.shape)
    marginal2 = P.sum(axis=0)
    for j, s in enumerate(slit_indices(D)):
        frac = overlap_fraction(grid, s, geometry)
        coinc += P[i, j] * frac
        singles += marginal2[j] * frac
    return flux * singles_per_pair * singles, flux * coinc


def near_field_scan(
    source: QuditPureState | CorrelatedMixture,
    fixed_slit: SlitIndex,
    grid,
    flux: float,
    acquisition: float,
    seed: int | None,
    geometry: ExperimentGeometry,
    singles_per_pair: float = 10.0,
    noiseless: bool = False,
) -> ScanRecord:
    """Scan D2 across its aperture with D1 parked behind ``fixed_slit``.

    With ``noiseless`` the record holds expected counts (floats); otherwise
    counts are Poisson draws from a stream seeded by (seed, fixed slit).
    """
    if source.dimension != geometry.dimension:
        raise ValueError(f"source dimension {source.dimension} != geometry dimension {geometry.dimension}")
    if flux < 0 or acquisition <= 0 or singles_per_pair < 1:
        raise ValueError("need flux >= 0, acquisition > 0 and singles_per_pair >= 1")
    grid = np.asarray(grid, dtype=float)
    edge = geometry.slit_center(slit_indices(geometry.dimension)[-1]) + geometry.slit_half_width
    if grid.size == 0 or grid.min() > -edge or grid.max() < edge:
        warnings.warn("scan grid does not span the whole aperture", RuntimeWarning)
    singles_rate, coinc_rate = expected_rates(source, fixed_slit, grid, flux, geometry, singles_per_pair)
    if noiseless:
        singles = singles_rate * acquisition
        coinc = coinc_rate * acquisition
    else:
        if seed is None:
            raise ValueError("a seed is required for noisy scans")
        rng = _stream(seed, fixed_slit, geometry.dimension)
        singles = rng.poisson(singles_rate * acquisition)
        coinc = rng.poisson(coinc_rate * acquisition)
    return ScanRecord(fixed_slit, grid, singles, coinc, acquisition, seed, flux, geometry.dimension)


def scan_all(source, grid, flux, acquisition, seed, geometry, **kwargs) -> list[ScanRecord]:
    return [
        near_field_scan(source, s, grid, flux, acquisition, seed, geometry, **kwargs)
        for s in reversed(slit_indices(geometry.dimension))
    ]


def coincidence_matrix(records: Sequence[ScanRecord], geometry: ExperimentGeometry) -> np.ndarray:
    D = geometry.dimension
    seen = [r.fixed_slit for r in records]
    if len(set(seen)) != len(seen):
        raise ValueError("duplicated fixed slits among scan records")
    if set(seen) != set(slit_indices(D)):
        missing = sorted(set(slit_indices(D)) - set(seen))
        raise ValueError(f"scan records missing fixed slits {[str(s) for s in missing]}")
    C = np.zeros((D, D))
    for r in records:
        if r.dimension != D:
            raise ValueError(f"record dimension {r.dimension} != geometry dimension {D}")
        i = r.fixed_slit.position(D)
        for x, n in zip(r.scan_positions, r.coincidences):
            s = nearest_slit(float(x), geometry)
            if s is not None:
                C[i, s.position(D)] += n
    return C


def probability_table(records: Sequence[ScanRecord], geometry: ExperimentGeometry) -> ProbabilityTable:
    """Bin coincidences by slit pair and normalise; errors from Poisson counts."""
    C = coincidence_matrix(records, geometry)
    total = C.sum()
    if total <= 0:
        raise ValueError("no coincidences recorded inside any slit")
    P = C / total
    err = np.sqrt(P * (1.0 - P) / total)
    return ProbabilityTable(geometry.dimension, P, err)


def reconstruct_state(table: ProbabilityTable, geometry: ExperimentGeometry) -> QuditPureState:
    """Magnitudes from the histogram, phases from the path-length model.

    The result is deliberately left unnormalized.
    """
    D = table.dimension
    if D != geometry.dimension:
        raise ValueError(f"table dimension {D} != geometry dimension {geometry.dimension}")
    c = np.sqrt(table.probabilities).astype(complex)
    for i, s in enumerate(slit_indices(D)):
        c[i, D - 1 - i] *= np.exp(1j * fresnel_phase(s, geometry))
    return QuditPureState(D, c)


def fidelity(candidate: QuditPureState, reference: QuditPureState, renormalize: bool = False) -> float:
    """|<reference|candidate>|^2 with the reference normalized.

    The candidate is used as given unless ``renormalize`` is set; reconstructed
    amplitudes that fall short of unit norm therefore lower the fidelity.
    """
    if candidate.dimension != reference.dimension:
        raise ValueError(f"dimension mismatch: {candidate.dimension} vs {reference.dimension}")
    ref = reference.normalized().amplitudes
    cand = candidate.normalized().amplitudes if renormalize else candidate.amplitudes
    return float(abs(np.vdot(ref, cand)) ** 2)


# ---- CSV interchange -------------------------------------------------------

SCAN_HEADER = ["x2_m", "singles", "coincidences"]
TABLE_HEADER = ["twice_l1", "twice_l2", "probability", "std_err"]


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_scan_csv(path: str | Path, record: ScanRecord) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# fixed_twice_l={record.fixed_slit.twice_l}\n")
        fh.write(f"# fixed_slit={record.fixed_slit}\n")
        fh.write(f"# dimension={record.dimension}\n")
        fh.write(f"# seed={record.seed}\n")
        fh.write(f"# acquisition_s={record.acquisition!r}\n")
        fh.write(f"# mean_pair_flux={record.mean_pair_flux!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_HEADER)
        for x, s, c in zip(record.scan_positions, record.singles, record.coincidences):
            w.writerow([repr(float(x)), _num(s), _num(c)])


def _read_commented(path) -> tuple[dict[str, str], list[str] | None, list[list[str]]]:
    meta: dict[str, str] = {}
    header = None
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("#").strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            parts = next(csv.reader([line]))
            if header is None:
                header = parts
            else:
                rows.append(parts)
    return meta, header, rows


def _parse_count(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_scan_csv(path: str | Path) -> ScanRecord:
    meta, header, rows = _read_commented(path)
    if header != SCAN_HEADER:
        raise ValueError(f"{path}: expected header {SCAN_HEADER}, got {header}")
    try:
        D = int(meta["dimension"])
        fixed = SlitIndex(int(meta["fixed_twice_l"])).check(D)
    except KeyError as exc:
        raise ValueError(f"{path}: missing comment field {exc}") from None
    seed = None if meta.get("seed", "None") == "None" else int(meta["seed"])
    x = np.array([float(r[0]) for r in rows])
    singles = np.array([_parse_count(r[1]) for r in rows])
    coinc = np.array([_parse_count(r[2]) for r in rows])
    return ScanRecord(fixed, x, singles, coinc, float(meta.get("acquisition_s", "1.0")), seed,
                      float(meta.get("mean_pair_flux", "nan")), D)


def write_table_csv(path: str | Path, table: ProbabilityTable) -> None:
    labels = slit_indices(table.dimension)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for i, s1 in enumerate(labels):
            for j, s2 in enumerate(labels):
                w.writerow([s1.twice_l, s2.twice_l, repr(float(table.probabilities[i, j])),
                            repr(float(table.std_errors[i, j]))])


def read_table_csv(path: str | Path) -> ProbabilityTable:
    _, header, rows = _read_commented(path)
    if header != TABLE_HEADER:
        raise ValueError(f"{path}: expected header {TABLE_HEADER}, got {header}")
    D = int(round(len(rows) ** 0.5))
    if D * D != len(rows) or D < 2:
        raise ValueError(f"{path}: {len(rows)} rows is not a full D x D table")
    P = np.zeros((D, D))
    E = np.zeros((D, D))
    for r in rows:
        i = SlitIndex(int(r[0])).position(D)
        j = SlitIndex(int(r[1])).position(D)
        P[i, j] = float(r[2])
        E[i, j] = float(r[3])
    return ProbabilityTable(D, P, E)
