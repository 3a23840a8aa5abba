import numpy as np
import pytest

from measint.cluster import ClusterConfig, build_cluster
from measint.conditioning import apply_plan
from measint.decompose import effective_circuit
from measint.expressibility import (
    InducedEnsemble,
    TestDistribution,
    estimate_deviation,
    estimate_deviations,
    fidelity_moment,
    induced_unitaries,
    pair_fidelities,
)
from measint.haarstats import sample_haar_unitary
from measint.symplectic import GaussianState, apply, passive_to_symplectic, pure_overlap, squeeze_transform, vacuum

CP = (0.0, np.pi / 2)


def test_fidelity_moment_matches_overlap(rng):
    u, w = sample_haar_unitary(3, rng), sample_haar_unitary(3, rng)
    r = np.array([0.3, -0.2, 0.1])
    a = apply(passive_to_symplectic(u) @ squeeze_transform(r), vacuum(3))
    b = apply(passive_to_symplectic(w) @ squeeze_transform(r), vacuum(3))
    f = pure_overlap(a, b)
    assert fidelity_moment(u, w, r, 1) == pytest.approx(f, abs=1e-12)
    assert fidelity_moment(u, w, r, 3) == pytest.approx(f**3, abs=1e-12)
    assert fidelity_moment(u, u, r, 2) == pytest.approx(1.0)
    batch = pair_fidelities(np.array([u, u]), np.array([w, u]), r)
    assert batch == pytest.approx([f, 1.0])


def test_unsqueezed_test_states_cannot_tell_unitaries_apart(rng):
    u, w = sample_haar_unitary(2, rng), sample_haar_unitary(2, rng)
    assert fidelity_moment(u, w, [0.0, 0.0]) == pytest.approx(1.0)


def test_induced_unitaries_match_scalar_path(rng):
    cfg = ClusterConfig(6, (1,), r_in=(0.6, 0.6), phase_mask=(CP,))
    for strategy in ("linear", "knight"):
        ens = InducedEnsemble(cfg, strategy)
        angles = ens.draw_angles(rng, 5)
        batch = induced_unitaries(build_cluster(cfg), ens.plan(angles[0]), angles)
        for a, u in zip(angles, batch):
            circuit = effective_circuit(ens.state(a))
            s1 = passive_to_symplectic(u) @ squeeze_transform(circuit.r_eff)
            assert np.allclose(s1 @ s1.T, ens.state(a).cov, atol=1e-9)


def test_vacuum_input_gives_identity(rng):
    ens = InducedEnsemble(ClusterConfig(3, (1,), r_in=(0.0, 0.0)), "linear")
    us = ens.sample_batch(4, rng)
    assert np.allclose(us, np.eye(3))


def test_ensemble_defaults():
    cfg = ClusterConfig(4, (1,))
    assert InducedEnsemble(cfg, "linear").n_out == 4
    assert InducedEnsemble(cfg, "knight").n_out == 2
    assert InducedEnsemble(cfg, "knight").n_angles == 6
    with pytest.raises(ValueError):
        InducedEnsemble(cfg, "linear", 2)
    with pytest.raises(ValueError):
        InducedEnsemble(cfg, "zigzag")


def test_haar_self_test_is_zero():
    ens = InducedEnsemble(ClusterConfig(2, (1,)), "haar")
    est = estimate_deviations(ens, (1, 2), n_pairs=2000, n_rtest=10, seed=3)
    for e in est:
        assert abs(e.value) < 4 * e.stderr + 1e-12


def test_deviation_drops_with_input_squeezing():
    lo = estimate_deviation(2, ClusterConfig(2, (1,), r_in=(0.0, 0.0)), "linear", n_pairs=1000, n_rtest=10, seed=1)
    hi = estimate_deviation(2, ClusterConfig(2, (1,), r_in=(1.0, 1.0)), "linear", n_pairs=1000, n_rtest=10, seed=1)
    assert lo.value - hi.value > 3 * np.hypot(lo.stderr, hi.stderr)


def test_estimate_independent_of_workers():
    ens = InducedEnsemble(ClusterConfig(2, (1,), r_in=(0.5, 0.5)), "linear")
    one = estimate_deviations(ens, (1, 2), n_pairs=200, n_rtest=4, seed=9, workers=1)
    two = estimate_deviations(ens, (1, 2), n_pairs=200, n_rtest=4, seed=9, workers=2)
    assert [e.to_dict() for e in one] == [e.to_dict() for e in two]
    other = estimate_deviations(ens, (1,), n_pairs=200, n_rtest=4, seed=10)
    assert other[0].value != one[0].value


def test_batches_and_terms():
    ens = InducedEnsemble(ClusterConfig(2, (1,), r_in=(0.5, 0.5)), "linear")
    est = estimate_deviations(ens, (1,), n_pairs=100, n_rtest=5, n_batches=20, seed=0)[0]
    assert len(est.batch_values) >= 20
    assert est.value == pytest.approx(est.haar_term + est.param_term - 2 * est.cross_term)
    full = estimate_deviations(ens, (1,), n_pairs=30, n_rtest=2, seed=0, pairing="all")[0]
    assert np.isfinite(full.value)


def test_estimator_argument_checks():
    ens = InducedEnsemble(ClusterConfig(2, (1,)), "haar")
    with pytest.raises(ValueError):
        estimate_deviations(ens, n_pairs=1)
    with pytest.raises(ValueError):
        estimate_deviations(ens, n_rtest=1)
    with pytest.raises(ValueError):
        estimate_deviations(ens, (0,))
    with pytest.raises(ValueError):
        estimate_deviations(ens, pairing="some")
    with pytest.raises(ValueError):
        TestDistribution("gaussian")
    with pytest.raises(ValueError):
        TestDistribution(low=1.0, high=0.0)
