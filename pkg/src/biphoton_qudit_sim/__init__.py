"""Maximally entangled spatial qudits from twin photons through D-slit apertures."""
from .geometry import ExperimentGeometry, GeometryError, SlitIndex, slit_indices, validate
from .states import (
    CorrelatedMixture,
    PumpProfile,
    QuadratureSpec,
    QuditPureState,
    classically_correlated_state,
    ideal_entangled_state,
    project_biphoton,
)
from .diagnostics import DensityOperator, negativity, purity, entanglement_entropy, to_density
from .far_field import far_field_params, coincidence_rate, fringe_slice
from .experiment import fidelity, probability_table, reconstruct_state

__version__ = "0.1.0"
