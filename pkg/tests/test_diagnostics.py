import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biphoton_qudit_sim.diagnostics import (
    DensityOperator,
    conditionality_witness,
    entanglement_entropy,
    mix,
    negativity,
    partial_transpose,
    purity,
    schmidt_spectrum,
    to_density,
)
from biphoton_qudit_sim.far_field import default_fringe_grid, fringe_slice
from biphoton_qudit_sim.geometry import ExperimentGeometry
from biphoton_qudit_sim.states import (
    QuditPureState,
    classically_correlated_state,
    ideal_entangled_state,
    state_from_anti_diagonal,
)


def brute_partial_transpose(m, D):
    """Element by element: <i j| rho^T2 |k l> = <i l| rho |k j>."""
    out = np.zeros_like(m)
    for i in range(D):
        for j in range(D):
            for k in range(D):
                for l in range(D):
                    out[i * D + j, k * D + l] = m[i * D + l, k * D + j]
    return out


def brute_negativity(m, D):
    ev = np.linalg.eigvalsh(brute_partial_transpose(m, D))
    return float(sum(-e for e in ev if e < 0))


@pytest.mark.parametrize("D", range(2, 11))
def test_entropy_of_ideal_state(D):
    psi = ideal_entangled_state(ExperimentGeometry(dimension=D))
    assert entanglement_entropy(psi) == pytest.approx(math.log2(D), abs=1e-10)
    assert np.allclose(schmidt_spectrum(psi), 1 / math.sqrt(D), atol=1e-14)


@pytest.mark.parametrize("D", [2, 4, 8])
def test_negativity_matches_brute_force(D):
    psi = ideal_entangled_state(ExperimentGeometry(dimension=D))
    rho = to_density(psi)
    assert negativity(psi) == pytest.approx((D - 1) / 2, abs=1e-10)
    assert negativity(psi) == pytest.approx(brute_negativity(rho.matrix, D), abs=1e-12)
    assert np.array_equal(partial_transpose(rho), brute_partial_transpose(rho.matrix, D))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_partial_transpose_against_loops(D, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(D * D, D * D)) + 1j * rng.normal(size=(D * D, D * D))
    m = a @ a.conj().T
    rho = DensityOperator(D, m / np.trace(m).real)
    assert np.allclose(partial_transpose(rho), brute_partial_transpose(rho.matrix, D))
    assert negativity(rho) == pytest.approx(brute_negativity(rho.matrix, D), abs=1e-10)


@pytest.mark.parametrize("D", [2, 4, 8])
def test_classical_mixture_metrics(D):
    cc = classically_correlated_state(ExperimentGeometry(dimension=D))
    assert purity(cc) == 1 / D
    assert negativity(cc) == 0.0
    rho = to_density(cc)
    assert np.count_nonzero(rho.matrix - np.diag(np.diag(rho.matrix))) == 0


@pytest.mark.parametrize("D", [2, 4, 8])
def test_negativity_linear_in_mixing(D):
    g = ExperimentGeometry(dimension=D)
    for lam in np.linspace(0, 1, 6):
        rho = mix([lam, 1 - lam], [ideal_entangled_state(g), classically_correlated_state(g)])
        assert negativity(rho) == pytest.approx(lam * (D - 1) / 2, abs=1e-10)


def test_pure_state_purity_is_one(lab):
    assert purity(ideal_entangled_state(lab)) == pytest.approx(1.0, abs=1e-14)


def test_reconstructed_printed_state_schmidt(lab):
    psi = state_from_anti_diagonal([0.49, 0.50, 0.50, 0.49], lab)
    assert sorted(schmidt_spectrum(psi)) == pytest.approx([0.49, 0.49, 0.50, 0.50], abs=1e-14)
    with pytest.raises(ValueError):
        entanglement_entropy(psi)
    assert entanglement_entropy(psi.normalized()) == pytest.approx(2.0, abs=1e-3)


def test_product_state_has_no_entanglement():
    c = np.zeros((4, 4), complex)
    c[1, 2] = 1
    psi = QuditPureState(4, c)
    assert entanglement_entropy(psi) == 0.0
    assert negativity(psi) == 0.0


def test_density_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        DensityOperator(2, np.array([[0.5, 1, 0, 0], [0, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]))
    with pytest.raises(ValueError, match="trace"):
        DensityOperator(2, np.eye(4))
    with pytest.raises(ValueError, match="negative"):
        DensityOperator(2, np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(ValueError, match="shape"):
        DensityOperator(3, np.eye(4) / 4)


def test_mix_validation(lab):
    psi = ideal_entangled_state(lab)
    with pytest.raises(ValueError):
        mix([0.5, 0.6], [psi, psi])
    with pytest.raises(ValueError):
        mix([0.5, 0.5], [psi, ideal_entangled_state(lab.replace(dimension=2))])


def _slices(source, g, xs=(0.0, 300e-6)):
    grid = default_fringe_grid()
    return [fringe_slice(source, x, grid, g) for x in xs]


def test_witness_flags_entangled_state(lab):
    r = conditionality_witness(_slices(ideal_entangled_state(lab), lab))
    assert r.entangled and r.score > 0.2
    assert all(v > 0.9 for v in r.visibilities)


def test_witness_silent_for_classical_mixture(lab):
    r = conditionality_witness(_slices(classically_correlated_state(lab), lab))
    assert r.verdict == "no-signature"
    assert max(r.visibilities) < 1e-9


def test_witness_silent_for_product_state(lab):
    u = np.array([1, 1j, -1, 0.5])
    psi = QuditPureState(4, np.outer(u, u)).normalized()
    r = conditionality_witness(_slices(psi, lab))
    # factorized pattern: every normalized slice is the same curve
    assert r.score < 1e-12
    assert not r.entangled


def test_witness_input_checks(lab):
    s = _slices(ideal_entangled_state(lab), lab)
    with pytest.raises(ValueError):
        conditionality_witness(s[:1])
    with pytest.raises(ValueError):
        conditionality_witness([s[0], s[0]])
    other = fringe_slice(ideal_entangled_state(lab), 1e-4, np.linspace(-1e-3, 1e-3, 11), lab)
    with pytest.raises(ValueError):
        conditionality_witness([s[0], other])
