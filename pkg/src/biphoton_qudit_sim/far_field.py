"""Fourth-order (coincidence) patterns behind the lenses.

Rates are in "envelope units": the ideal state reproduces the closed-form sum
exactly, so a coherent D-slit peak reaches D^2 and the incoherent mixture D.
"""
from __future__ import annotations

import math
import warnings
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .diagnostics import DensityOperator, to_density
from .geometry import ExperimentGeometry, slit_indices
from .states import CorrelatedMixture, QuditPureState, fresnel_phase

Source = QuditPureState | CorrelatedMixture | DensityOperator


class DegenerateImagingError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FarFieldParams:
    beta: float
    phi: float
    eta: float

    @property
    def fringe_period(self) -> float:
        """Adjacent-slit (|l-m| = 1) fringe period in x1 or x2."""
        return 2.0 * math.pi / abs(self.beta)


def _exact(x: float) -> Fraction:
    # decimal-exact so that e.g. z - z_L - f = 0.8 - 0.65 - 0.15 is exactly zero
    return Fraction(repr(float(x)))


def far_field_params(geometry: ExperimentGeometry) -> FarFieldParams:
    k = geometry.wavenumber
    f = _exact(geometry.lens_focal)
    d = _exact(geometry.slit_spacing)
    z = _exact(geometry.detector_far_plane)
    zL = _exact(geometry.lens_position)
    zA = _exact(geometry.z_aperture)
    denom = f * f - (z - zL - f) * (z - zA - f)
    if denom == 0:
        raise DegenerateImagingError(
            f"beta denominator f^2 - (z-z_L-f)(z-z_A-f) vanishes (f={float(f)}, z={float(z)},"
            f" z_L={float(zL)}, z_A={float(zA)})"
        )
    beta = k * float(f * d / denom)
    phi = float(d * (f * f - (z - zL - f) * (z + zA - f)) / (2 * f * zA))
    eta = float((z - zL - f) / f)
    return FarFieldParams(beta, phi, eta)


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def _envelope(x, s: float, geometry: ExperimentGeometry, p: FarFieldParams):
    # single-slit diffraction amplitude for slit label s; both photons share this form
    a, d = geometry.slit_half_width, geometry.slit_spacing
    return _sinc(a * p.beta * (x - s * p.eta * d) / d)


def envelope_product(l: float, m: float, x1, x2, geometry: ExperimentGeometry, p: FarFieldParams | None = None):
    """V_lm(x1, x2): product of the four single-slit factors for the pairs (l,-l), (m,-m)."""
    p = p or far_field_params(geometry)
    out = 1.0
    for s in (l, m):
        out = out * _envelope(x1, s, geometry, p) * _envelope(x2, -s, geometry, p)
    return out


def coincidence_rate_closed_form(x1, x2, geometry: ExperimentGeometry):
    """Closed-form coincidence rate of the ideal anti-correlated state."""
    p = far_field_params(geometry)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    ls = [0.5 * s.twice_l for s in slit_indices(geometry.dimension)]
    rate = np.zeros(np.broadcast(x1, x2).shape)
    for i, l in enumerate(ls):
        rate = rate + envelope_product(l, l, x1, x2, geometry, p)
        for m in ls[i + 1:]:
            arg = p.beta * (l - m) * (x2 - x1 - (l + m) * p.phi)
            rate = rate + 2.0 * envelope_product(l, m, x1, x2, geometry, p) * np.cos(arg)
    peak = np.max(np.abs(rate)) if rate.size else 0.0
    low = np.min(rate) if rate.size else 0.0
    if low < -1e-9 * max(peak, 1e-300):
        warnings.warn(f"closed-form rate dipped to {low:.3e} (peak {peak:.3e}); clamped at 0", RuntimeWarning)
    rate = np.maximum(rate, 0.0)
    return float(rate) if rate.ndim == 0 else rate


def quadratic_kernel_phase(geometry: ExperimentGeometry, p: FarFieldParams | None = None) -> float:
    """Per-slit quadratic phase alpha of the propagation kernel.

    Fixed by requiring the kernel sum over the ideal state to reproduce the
    closed-form cosine arguments: (path phase) - 2 alpha = -beta phi.
    """
    p = p or far_field_params(geometry)
    theta = fresnel_phase(2, geometry)  # k d^2 / (2 z_A), the l^2 coefficient
    return 0.5 * (theta + p.beta * p.phi)


def slit_kernels(x, geometry: ExperimentGeometry, p: FarFieldParams | None = None) -> np.ndarray:
    """K(x, s) for every slit s; shape (D,) + x.shape.

    The same kernel serves both photons; the sign structure of the closed form
    is carried by photon 2 sitting at -l.
    """
    p = p or far_field_params(geometry)
    alpha = quadratic_kernel_phase(geometry, p)
    x = np.asarray(x, dtype=float)
    ks = []
    for s in slit_indices(geometry.dimension):
        l = 0.5 * s.twice_l
        ks.append(_envelope(x, l, geometry, p) * np.exp(-1j * (p.beta * l * x + alpha * l * l)))
    return np.stack(ks)


def _pure_rate(c: np.ndarray, K1: np.ndarray, K2: np.ndarray) -> np.ndarray:
    amp = np.einsum("ab,a...,b...->...", c, K1, K2)
    return np.abs(amp) ** 2


def coincidence_rate_general(state: QuditPureState, x1, x2, geometry: ExperimentGeometry):
    """|sum c[l1][l2] K(x1,l1) K(x2,l2)|^2, scaled by D into envelope units."""
    if state.dimension != geometry.dimension:
        raise ValueError(f"state dimension {state.dimension} != geometry dimension {geometry.dimension}")
    p = far_field_params(geometry)
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    rate = geometry.dimension * _pure_rate(state.amplitudes, slit_kernels(x1, geometry, p), slit_kernels(x2, geometry, p))
    return float(rate) if rate.ndim == 0 else rate


def coincidence_rate_cc(mixture: CorrelatedMixture, x1, x2, geometry: ExperimentGeometry):
    """Diagonal envelope terms only: sum_l p_l D V_ll."""
    if mixture.dimension != geometry.dimension:
        raise ValueError(f"mixture dimension {mixture.dimension} != geometry dimension {geometry.dimension}")
    p = far_field_params(geometry)
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    rate = np.zeros(x1.shape)
    for w, s in zip(mixture.weights, slit_indices(geometry.dimension)):
        l = 0.5 * s.twice_l
        rate = rate + w * geometry.dimension * envelope_product(l, l, x1, x2, geometry, p)
    return float(rate) if rate.ndim == 0 else rate


def coincidence_rate_density(rho: DensityOperator, x1, x2, geometry: ExperimentGeometry):
    """Rate for an arbitrary density operator, as the eigen-weighted sum of pure rates."""
    D = geometry.dimension
    if rho.dimension != D:
        raise ValueError(f"density dimension {rho.dimension} != geometry dimension {D}")
    p = far_field_params(geometry)
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    K1 = slit_kernels(x1, geometry, p)
    K2 = slit_kernels(x2, geometry, p)
    w, v = np.linalg.eigh(rho.matrix)
    rate = np.zeros(x1.shape)
    for wk, vk in zip(w, v.T):
        if wk > 1e-15:
            rate = rate + wk * _pure_rate(vk.reshape(D, D), K1, K2)
    rate = D * rate
    return float(rate) if rate.ndim == 0 else rate


def coincidence_rate(source: Source, x1, x2, geometry: ExperimentGeometry):
    if isinstance(source, QuditPureState):
        return coincidence_rate_general(source, x1, x2, geometry)
    if isinstance(source, CorrelatedMixture):
        return coincidence_rate_cc(source, x1, x2, geometry)
    if isinstance(source, DensityOperator):
        return coincidence_rate_density(source, x1, x2, geometry)
    raise TypeError(f"unsupported source {type(source).__name__}")


def incoherent_envelope(source: Source, x1, x2, geometry: ExperimentGeometry):
    """Rate with every interference term removed (diagonal of the density operator).

    Fringe visibility is measured against this envelope.
    """
    D = geometry.dimension
    probs = to_density(source).matrix.diagonal().real.reshape(D, D)
    p = far_field_params(geometry)
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    K1 = np.abs(slit_kernels(x1, geometry, p)) ** 2
    K2 = np.abs(slit_kernels(x2, geometry, p)) ** 2
    rate = D * np.einsum("ab,a...,b...->...", probs, K1, K2)
    return float(rate) if rate.ndim == 0 else rate


def detector_smoothed_rate(
    rate_fn: Callable,
    x1,
    x2,
    geometry: ExperimentGeometry,
    width: float | None = None,
    points: int = 11,
    axes: Literal["both", "x1"] = "both",
):
    """Average ``rate_fn`` over square detector windows (midpoint rule).

    ``axes="x1"`` smooths only the scanning detector; the default smooths both.
    """
    if points < 9:
        raise ValueError("need at least 9 midpoint samples per axis")
    width = geometry.detector_slit_width if width is None else width
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    offsets = ((np.arange(points) + 0.5) / points - 0.5) * width
    offsets2 = offsets if axes == "both" else np.zeros(1)
    total = 0.0
    for o1 in offsets:
        for o2 in offsets2:
            total = total + np.asarray(rate_fn(x1 + o1, x2 + o2))
    out = total / (len(offsets) * len(offsets2))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(eq=False)
class CoincidenceMap:
    x1: np.ndarray
    x2: np.ndarray
    rates: np.ndarray
    provenance: str
    geometry: ExperimentGeometry

    def __post_init__(self):
        if np.any(np.diff(self.x1) <= 0) or np.any(np.diff(self.x2) <= 0):
            raise ValueError("map grids must be strictly increasing")
        if np.any(self.rates < 0):
            raise ValueError("negative coincidence rate in map")


def provenance(source: Source) -> str:
    if isinstance(source, CorrelatedMixture):
        return "classically_correlated"
    if isinstance(source, QuditPureState):
        return "entangled"
    return "mixed"


def coincidence_map(source: Source, x1_grid, x2_grid, geometry: ExperimentGeometry, smoothed: bool = False) -> CoincidenceMap:
    x1_grid = np.asarray(x1_grid, dtype=float)
    x2_grid = np.asarray(x2_grid, dtype=float)
    X1, X2 = np.meshgrid(x1_grid, x2_grid, indexing="ij")
    fn = lambda a, b: coincidence_rate(source, a, b, geometry)
    rates = detector_smoothed_rate(fn, X1, X2, geometry) if smoothed else fn(X1, X2)
    return CoincidenceMap(x1_grid, x2_grid, np.maximum(rates, 0.0), provenance(source), geometry)


@dataclass(eq=False)
class FringeSlice:
    x2: float
    x1: np.ndarray
    rates: np.ndarray
    visibility: float
    envelope: np.ndarray = field(repr=False, default=None)

    def normalized(self) -> np.ndarray:
        peak = np.max(self.rates)
        return self.rates / peak if peak > 0 else np.zeros_like(self.rates)


def envelope_first_zero(geometry: ExperimentGeometry) -> float:
    """|x| of the first zero of the single-slit envelope (at eta = 0)."""
    p = far_field_params(geometry)
    return math.pi * geometry.slit_spacing / (geometry.slit_half_width * abs(p.beta))


def fringe_visibility(x1, rates, envelope, geometry: ExperimentGeometry) -> float:
    """(max - min)/(max + min) of rate/envelope inside the central envelope lobe."""
    x1 = np.asarray(x1, dtype=float)
    rates = np.asarray(rates, dtype=float)
    envelope = np.asarray(envelope, dtype=float)
    mask = (np.abs(x1) < envelope_first_zero(geometry)) & (envelope > 1e-9 * np.max(envelope))
    if not np.any(mask):
        return 0.0
    ratio = rates[mask] / envelope[mask]
    hi, lo = float(np.max(ratio)), float(np.min(ratio))
    if hi + lo <= 0:
        return 0.0
    return (hi - lo) / (hi + lo)


def fringe_slice(source: Source, x2_fixed: float, x1_grid, geometry: ExperimentGeometry, smoothed: bool = False, **smoothing) -> FringeSlice:
    x1_grid = np.asarray(x1_grid, dtype=float)
    if x1_grid.size == 0:
        raise ValueError("empty x1 grid")
    x2 = np.full_like(x1_grid, float(x2_fixed))
    rate_fn = lambda a, b: coincidence_rate(source, a, b, geometry)
    env_fn = lambda a, b: incoherent_envelope(source, a, b, geometry)
    if smoothed:
        rates = detector_smoothed_rate(rate_fn, x1_grid, x2, geometry, **smoothing)
        env = detector_smoothed_rate(env_fn, x1_grid, x2, geometry, **smoothing)
    else:
        rates = rate_fn(x1_grid, x2)
        env = env_fn(x1_grid, x2)
    rates = np.maximum(np.asarray(rates, dtype=float), 0.0)
    vis = fringe_visibility(x1_grid, rates, env, geometry)
    return FringeSlice(float(x2_fixed), x1_grid, rates, vis, np.asarray(env, dtype=float))


def default_fringe_grid(points: int = 501, half_span: float = 2.5e-3) -> np.ndarray:
    return np.linspace(-half_span, half_span, points)
