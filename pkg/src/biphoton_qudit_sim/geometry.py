"""Physical parameters and slit-index conventions shared by every module.

All lengths are SI metres. Slit labels are half-integers for even D and
integers for odd D; they are stored as ``twice_l`` so identity comparisons
stay exact.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Any, Mapping


class GeometryError(ValueError):
    """Raised when a parameter set violates one or more geometry invariants.

    ``problems`` lists every violated invariant, one message each.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ExperimentGeometry:
    wavelength: float = 826e-9
    dimension: int = 4
    slit_half_width: float = 0.045e-3
    slit_spacing: float = 0.17e-3
    z_aperture: float = 0.200
    detector_near_offset: float = 2e-3
    detector_slit_width: float = 0.1e-3
    lens_focal: float = 0.150
    lens_position: float = 0.650
    detector_far_plane: float = 0.800
    wavenumber: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        problems = _check(self)
        if problems:
            raise GeometryError(problems)
        object.__setattr__(self, "wavenumber", 2.0 * math.pi / self.wavelength)

    @property
    def l_max(self) -> Fraction:
        return Fraction(self.dimension - 1, 2)

    def slit_center(self, s: "SlitIndex | int") -> float:
        """Transverse position of slit ``s`` (a SlitIndex or a raw twice_l)."""
        twice_l = s.twice_l if isinstance(s, SlitIndex) else int(s)
        return 0.5 * twice_l * self.slit_spacing

    def replace(self, **changes: Any) -> "ExperimentGeometry":
        params = self.to_dict()
        params.update(changes)
        return ExperimentGeometry(**params)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("wavenumber")
        return d


GEOMETRY_FIELDS = tuple(f.name for f in fields(ExperimentGeometry) if f.init)

_LENGTHS = (
    "wavelength",
    "slit_half_width",
    "slit_spacing",
    "z_aperture",
    "detector_near_offset",
    "detector_slit_width",
    "lens_focal",
    "lens_position",
    "detector_far_plane",
)


def _check(g: ExperimentGeometry) -> list[str]:
    problems = []
    if not isinstance(g.dimension, int) or isinstance(g.dimension, bool):
        problems.append(f"dimension must be an integer, got {g.dimension!r}")
    elif g.dimension < 2:
        problems.append(f"dimension below 2 (D={g.dimension})")
    for name in _LENGTHS:
        value = getattr(g, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            problems.append(f"{name} must be a finite number, got {value!r}")
        elif value <= 0:
            problems.append(f"{name} must be strictly positive, got {value!r}")
    if problems:
        return problems
    if g.slit_spacing <= 2 * g.slit_half_width:
        problems.append(
            f"slits not disjoint: spacing d={g.slit_spacing!r} <= slit width 2a={2 * g.slit_half_width!r}"
        )
    if not g.z_aperture < g.lens_position < g.detector_far_plane:
        problems.append(
            "far-field ordering z_A < z_L < z violated "
            f"(z_A={g.z_aperture!r}, z_L={g.lens_position!r}, z={g.detector_far_plane!r})"
        )
    return problems


def validate(params: Mapping[str, Any] | ExperimentGeometry) -> ExperimentGeometry:
    """Build a validated geometry from a raw parameter mapping.

    Unknown keys and every violated invariant are collected and raised together
    as a single GeometryError.
    """
    if isinstance(params, ExperimentGeometry):
        return params
    unknown = sorted(set(params) - set(GEOMETRY_FIELDS))
    problems = [f"unknown geometry parameter {k!r}" for k in unknown]
    if problems:
        raise GeometryError(problems)
    kwargs = dict(params)
    if "dimension" in kwargs and isinstance(kwargs["dimension"], float) and kwargs["dimension"].is_integer():
        kwargs["dimension"] = int(kwargs["dimension"])
    return ExperimentGeometry(**kwargs)


@dataclass(frozen=True, order=True)
class SlitIndex:
    twice_l: int

    @property
    def l(self) -> Fraction:
        return Fraction(self.twice_l, 2)

    def __neg__(self) -> "SlitIndex":
        return SlitIndex(-self.twice_l)

    def __str__(self) -> str:
        l = self.l
        sign = "+" if l > 0 else ("-" if l < 0 else "")
        return f"{sign}{abs(l)}"

    def check(self, dimension: int) -> "SlitIndex":
        if (self.twice_l - (dimension - 1)) % 2:
            raise ValueError(f"slit label {self} has the wrong parity for D={dimension}")
        if abs(self.twice_l) > dimension - 1:
            raise ValueError(f"slit label {self} outside +-{Fraction(dimension - 1, 2)} for D={dimension}")
        return self

    def position(self, dimension: int) -> int:
        """Array index of this slit in ``slit_indices(dimension)``."""
        self.check(dimension)
        return (self.twice_l + dimension - 1) // 2

    @classmethod
    def parse(cls, text: str, dimension: int) -> "SlitIndex":
        """Parse labels like ``+3/2``, ``-1/2``, ``1`` or ``0.5``."""
        try:
            l = Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse slit label {text!r}") from exc
        twice = 2 * l
        if twice.denominator != 1:
            raise ValueError(f"slit label {text!r} is not a multiple of 1/2")
        return cls(int(twice)).check(dimension)


def slit_indices(dimension: int) -> list[SlitIndex]:
    if dimension < 2:
        raise ValueError(f"dimension below 2 (D={dimension})")
    return [SlitIndex(t) for t in range(-(dimension - 1), dimension, 2)]


def nearest_slit(x: float, geometry: ExperimentGeometry) -> SlitIndex | None:
    """Slit whose aperture contains ``x`` (edges inclusive), or None in a gap."""
    d = geometry.slit_spacing
    D = geometry.dimension
    # nearest admissible twice_l: same parity as D-1, clipped to the aperture
    t = 2.0 * x / d
    twice = int(round((t - (D - 1)) / 2.0)) * 2 + (D - 1)
    twice = max(-(D - 1), min(D - 1, twice))
    # relative slack keeps edge points inside despite round-off in x = c + a
    if abs(x - 0.5 * twice * d) <= geometry.slit_half_width * (1 + 1e-12):
        return SlitIndex(twice)
    return None
