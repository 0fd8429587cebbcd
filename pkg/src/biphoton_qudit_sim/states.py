"""Two-qudit state preparation in the slit-mode basis.

Amplitude matrices are indexed ``c[i, j]`` where ``i``/``j`` are array positions
in ``slit_indices(D)`` for photon 1 / photon 2 (ascending slit label).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .geometry import ExperimentGeometry, SlitIndex, slit_indices

NORM_TOL = 1e-10


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error_estimate: float = float("nan")):
        self.error_estimate = error_estimate
        super().__init__(message)


@dataclass(eq=False)
class QuditPureState:
    dimension: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.dimension, self.dimension):
            raise ValueError(
                f"amplitude matrix shape {self.amplitudes.shape} does not match D={self.dimension}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm - 1.0) <= NORM_TOL

    def normalized(self) -> "QuditPureState":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return QuditPureState(self.dimension, self.amplitudes / n)

    def amplitude(self, l1: SlitIndex, l2: SlitIndex) -> complex:
        return complex(self.amplitudes[l1.position(self.dimension), l2.position(self.dimension)])

    def pair_probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(eq=False)
class CorrelatedMixture:
    """Incoherent mixture of the anti-correlated products |l>|-l>.

    ``weights[i]`` belongs to slit ``slit_indices(D)[i]`` of photon 1.
    """

    dimension: int
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.dimension,):
            raise ValueError(f"need {self.dimension} weights, got shape {self.weights.shape}")
        if np.any(self.weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {self.weights.sum()!r}, not 1")

    def pair_probabilities(self) -> np.ndarray:
        # anti-diagonal: photon 2 at -l sits at mirrored array position
        return np.fliplr(np.diag(self.weights))


@dataclass(frozen=True)
class PumpProfile:
    """Transverse pump field W(xi; z_A) in the aperture plane."""

    shape: Literal["gaussian", "tabulated"] = "gaussian"
    waist: float = 4.5e-6
    center: float = 0.0
    samples: tuple[tuple[float, complex], ...] | None = None

    def __post_init__(self):
        if self.shape == "gaussian":
            if not self.waist > 0:
                raise ValueError(f"gaussian pump waist must be positive, got {self.waist!r}")
        elif self.shape == "tabulated":
            if not self.samples or len(self.samples) < 2:
                raise ValueError("tabulated pump needs at least two samples")
            xs = [s[0] for s in self.samples]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("tabulated pump samples must be strictly ordered by position")
        else:
            raise ValueError(f"unknown pump shape {self.shape!r}")

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.shape == "gaussian":
            return np.exp(-(((xi - self.center) / self.waist) ** 2)).astype(complex)
        pos = np.array([s[0] for s in self.samples], dtype=float) + self.center
        amp = np.array([s[1] for s in self.samples], dtype=complex)
        re = np.interp(xi, pos, amp.real, left=0.0, right=0.0)
        im = np.interp(xi, pos, amp.imag, left=0.0, right=0.0)
        return re + 1j * im


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 32
    rtol: float = 1e-8
    max_order: int = 1024


def aperture_transmission(x, geometry: ExperimentGeometry):
    """D-slit transmission: 1 inside any slit (edges included), else 0."""
    x = np.asarray(x, dtype=float)
    centers = np.array([geometry.slit_center(s) for s in slit_indices(geometry.dimension)])
    inside = np.abs(x[..., None] - centers) <= geometry.slit_half_width
    out = inside.any(axis=-1).astype(float)
    return float(out) if out.ndim == 0 else out


def slit_mode_overlap(separation: float, half_width: float) -> float:
    """Overlap of two uniform slit modes of half width ``a`` a distance apart.

    The Fourier pair of sinc^2 gives the unit triangle tri(separation / 2a),
    which vanishes as soon as the slits no longer overlap.
    """
    r = abs(separation) / (2.0 * half_width)
    return max(0.0, 1.0 - r)


def mode_overlap(l: SlitIndex, l2: SlitIndex, geometry: ExperimentGeometry) -> float:
    l.check(geometry.dimension)
    l2.check(geometry.dimension)
    delta = 0.5 * (l.twice_l - l2.twice_l) * geometry.slit_spacing
    return slit_mode_overlap(delta, geometry.slit_half_width)


def fresnel_phase(s: SlitIndex | int, geometry: ExperimentGeometry) -> float:
    """Path-length phase k d^2 l^2 / (2 z_A) picked up by the slit pair (l, -l)."""
    twice_l = s.twice_l if isinstance(s, SlitIndex) else int(s)
    l = 0.5 * twice_l
    return geometry.wavenumber * geometry.slit_spacing**2 * l * l / (2.0 * geometry.z_aperture)


def ideal_entangled_state(geometry: ExperimentGeometry) -> QuditPureState:
    D = geometry.dimension
    c = np.zeros((D, D), dtype=complex)
    for i, s in enumerate(slit_indices(D)):
        c[i, D - 1 - i] = np.exp(1j * fresnel_phase(s, geometry)) / math.sqrt(D)
    return QuditPureState(D, c)


def classically_correlated_state(geometry: ExperimentGeometry) -> CorrelatedMixture:
    D = geometry.dimension
    return CorrelatedMixture(D, np.full(D, 1.0 / D))


def _cell_integrals(geometry: ExperimentGeometry, pump: PumpProfile, n: int) -> np.ndarray:
    D = geometry.dimension
    a = geometry.slit_half_width
    k = geometry.wavenumber
    zA = geometry.z_aperture
    t, w = np.polynomial.legendre.leggauss(n)
    weights = np.outer(w, w) * a * a
    centers = [geometry.slit_center(s) for s in slit_indices(D)]
    out = np.empty((D, D), dtype=complex)
    for i, c1 in enumerate(centers):
        x1 = c1 + a * t
        for j, c2 in enumerate(centers):
            x2 = c2 + a * t
            X1, X2 = np.meshgrid(x1, x2, indexing="ij")
            f = np.exp(1j * k * (X2 - X1) ** 2 / (8.0 * zA)) * pump(0.5 * (X1 + X2))
            out[i, j] = np.sum(weights * f)
    return out


def project_biphoton(
    geometry: ExperimentGeometry,
    pump: PumpProfile,
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> QuditPureState:
    """Project the transmitted SPDC amplitude onto the slit-mode product basis.

    Each slit-pair cell is integrated with tensor Gauss-Legendre; the order is
    doubled until successive estimates agree to ``quadrature.rtol`` relative to
    the largest cell.
    """
    n = quadrature.order
    prev = _cell_integrals(geometry, pump, n)
    err = float("inf")
    while n < quadrature.max_order:
        n *= 2
        cur = _cell_integrals(geometry, pump, n)
        scale = np.max(np.abs(cur))
        if scale == 0:
            raise QuadratureError("pump amplitude vanishes over every slit pair", 0.0)
        err = float(np.max(np.abs(cur - prev)) / scale)
        prev = cur
        if err <= quadrature.rtol:
            break
    else:
        if np.max(np.abs(prev)) == 0:
            raise QuadratureError("pump amplitude vanishes over every slit pair", 0.0)
        raise QuadratureError(
            f"slit-pair quadrature did not reach rtol={quadrature.rtol:g} by order {n}"
            f" (last relative change {err:.3e})",
            err,
        )
    return QuditPureState(geometry.dimension, prev).normalized()


def state_from_anti_diagonal(magnitudes: Sequence[float], geometry: ExperimentGeometry) -> QuditPureState:
    """Unnormalized state with the given |c[l][-l]| and the theoretical path phases.

    ``magnitudes`` are ordered by photon-1 slit label, ascending.
    """
    D = geometry.dimension
    if len(magnitudes) != D:
        raise ValueError(f"need {D} magnitudes, got {len(magnitudes)}")
    c = np.zeros((D, D), dtype=complex)
    for i, (s, m) in enumerate(zip(slit_indices(D), magnitudes)):
        c[i, D - 1 - i] = m * np.exp(1j * fresnel_phase(s, geometry))
    return QuditPureState(D, c)


# ---- CSV interchange -------------------------------------------------------

STATE_HEADER = ["twice_l1", "twice_l2", "re", "im"]
MIXTURE_HEADER = ["twice_l1", "twice_l2", "weight"]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_state_csv(path: str | Path, state: QuditPureState | CorrelatedMixture) -> int:
    """Write a state or mixture; returns the number of rows written."""
    D = state.dimension
    labels = slit_indices(D)
    rows = []
    if isinstance(state, QuditPureState):
        header = STATE_HEADER
        for i, s1 in enumerate(labels):
            for j, s2 in enumerate(labels):
                c = state.amplitudes[i, j]
                if abs(c) > 1e-12:
                    rows.append([s1.twice_l, s2.twice_l, _fmt(c.real), _fmt(c.imag)])
    else:
        header = MIXTURE_HEADER
        for i, s1 in enumerate(labels):
            rows.append([s1.twice_l, -s1.twice_l, _fmt(state.weights[i])])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"# dimension={D}"])
        w.writerow(header)
        w.writerows(rows)
    return len(rows)


def read_state_csv(path: str | Path) -> QuditPureState | CorrelatedMixture:
    """Inverse of write_state_csv.

    D comes from a ``# dimension=`` comment when present, otherwise from the
    largest |twice_l| seen.
    """
    D = None
    header = None
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("#").strip().partition("=")
                if key.strip() == "dimension":
                    D = int(value)
                continue
            parts = next(csv.reader([line]))
            if header is None:
                header = parts
                continue
            rows.append(parts)
    if header not in (STATE_HEADER, MIXTURE_HEADER):
        raise ValueError(f"{path}: unrecognised state header {header!r}")
    if D is None:
        if not rows:
            raise ValueError(f"{path}: no rows and no dimension comment")
        D = max(max(abs(int(r[0])), abs(int(r[1]))) for r in rows) + 1
    if header == STATE_HEADER:
        c = np.zeros((D, D), dtype=complex)
        for r in rows:
            i = SlitIndex(int(r[0])).position(D)
            j = SlitIndex(int(r[1])).position(D)
            c[i, j] = complex(float(r[2]), float(r[3]))
        return QuditPureState(D, c)
    wts = np.zeros(D)
    for r in rows:
        if int(r[1]) != -int(r[0]):
            raise ValueError(f"{path}: mixture row {r} is not of the form (l, -l)")
        wts[SlitIndex(int(r[0])).position(D)] = float(r[2])
    return CorrelatedMixture(D, wts)
