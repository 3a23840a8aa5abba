import numpy as np
import pytest

from conftest import random_mixed_cov, random_pure_cov, random_symplectic
from measint.decompose import (
    EffectiveCircuit,
    ImpureStateError,
    bloch_messiah,
    canonicalize_gauge,
    effective_circuit,
    reconstruct,
    williamson,
)
from measint.haarstats import sample_haar_unitary
from measint.symplectic import (
    GaussianState,
    apply,
    is_orthogonal,
    is_symplectic,
    loss_channel,
    passive_to_symplectic,
    squeeze_transform,
    squeezed_vacuum,
    vacuum,
)


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_williamson_reconstructs(rng, n):
    v = random_mixed_cov(n, rng)
    s, nu = williamson(v)
    assert is_symplectic(s)
    assert np.all(np.diff(nu) <= 1e-12)
    d = np.concatenate([nu, nu])
    assert np.allclose((s * d) @ s.T, v, atol=1e-9 * np.max(np.abs(v)))


def test_williamson_of_pure_state_has_unit_spectrum(rng):
    _, nu = williamson(random_pure_cov(4, rng))
    assert np.allclose(nu, 1.0, atol=1e-10)


@pytest.mark.parametrize("n", [1, 3, 8])
def test_bloch_messiah_reconstructs(rng, n):
    s = random_symplectic(n, rng, r_max=1.5)
    o1, r, o2 = bloch_messiah(s)
    assert is_orthogonal(o1, 1e-9) and is_symplectic(o1)
    assert is_orthogonal(o2, 1e-9) and is_symplectic(o2)
    assert np.all(r >= -1e-12) and np.all(np.diff(r) <= 1e-12)
    assert np.allclose(o1 @ squeeze_transform(r) @ o2, s, atol=1e-9)


def test_bloch_messiah_of_passive_and_degenerate(rng):
    o = passive_to_symplectic(sample_haar_unitary(3, rng))
    o1, r, o2 = bloch_messiah(o)
    assert np.allclose(r, 0, atol=1e-9)
    assert np.allclose(o1 @ o2, o, atol=1e-9)
    # equal squeezers on all modes
    s = o @ squeeze_transform([0.5, 0.5, 0.5])
    o1, r, o2 = bloch_messiah(s)
    assert np.allclose(r, 0.5)
    assert np.allclose(o1 @ squeeze_transform(r) @ o2, s, atol=1e-9)
    with pytest.raises(ValueError):
        bloch_messiah(np.diag([2.0, 2.0]))


@pytest.mark.parametrize("n", [1, 2, 6, 20])
def test_effective_circuit_roundtrip(rng, n):
    state = GaussianState(random_pure_cov(n, rng))
    circuit = effective_circuit(state)
    assert circuit.purity_residual < 1e-9
    assert np.allclose(circuit.u_eff @ circuit.u_eff.conj().T, np.eye(n), atol=1e-10)
    assert np.allclose(reconstruct(circuit).cov, state.cov, atol=1e-9)


def test_gauge_is_canonical(rng):
    state = GaussianState(random_pure_cov(4, rng))
    u = effective_circuit(state).u_eff
    peak = np.argmax(np.abs(u), axis=0)
    assert np.all(u[peak, np.arange(4)].real > 0)
    # the decomposition is a function of the covariance only
    u2 = effective_circuit(GaussianState(state.cov.copy())).u_eff
    assert np.array_equal(u, u2)


def test_unsqueezed_columns_get_real_positive_peak(rng):
    u = sample_haar_unitary(3, rng)
    r = np.array([0.4, 0.0, 0.0])
    cu, cr = canonicalize_gauge(u, r)
    for c in (1, 2):
        col = cu[:, c]
        peak = col[np.argmax(np.abs(col))]
        assert abs(peak.imag) < 1e-12 and peak.real > 0
    # gauge changes leave the state untouched
    s1 = passive_to_symplectic(u) @ squeeze_transform(r)
    s2 = passive_to_symplectic(cu) @ squeeze_transform(cr)
    assert np.allclose(s1 @ s1.T, s2 @ s2.T, atol=1e-12)


def test_vacuum_gives_identity_circuit():
    circuit = effective_circuit(vacuum(3))
    assert np.allclose(circuit.u_eff, np.eye(3))
    assert np.allclose(circuit.r_eff, 0)


def test_single_mode_squeezer():
    circuit = effective_circuit(squeezed_vacuum([0.7]))
    assert circuit.r_eff[0] == pytest.approx(0.7)
    assert abs(circuit.u_eff[0, 0]) == pytest.approx(1.0)


def test_impure_state_rejected():
    lossy = loss_channel(squeezed_vacuum([1.0, 0.5]), 0.9)
    with pytest.raises(ImpureStateError):
        effective_circuit(lossy)


def test_circuit_serialization(rng):
    circuit = effective_circuit(GaussianState(random_pure_cov(3, rng)))
    data = circuit.to_dict()
    assert data["gauge"]
    back = EffectiveCircuit.from_dict(data)
    assert np.array_equal(back.u_eff, circuit.u_eff)
    assert np.array_equal(back.r_eff, circuit.r_eff)


def test_effective_circuit_of_known_circuit(rng):
    u = sample_haar_unitary(3, rng)
    r = np.array([0.9, 0.5, 0.1])
    state = apply(passive_to_symplectic(u) @ squeeze_transform(r), vacuum(3))
    circuit = effective_circuit(state)
    assert np.allclose(circuit.r_eff, r, atol=1e-10)
    # columns agree with the input up to a sign
    for c in range(3):
        overlap = abs(np.vdot(circuit.u_eff[:, c], u[:, c]))
        assert overlap == pytest.approx(1.0, abs=1e-9)
