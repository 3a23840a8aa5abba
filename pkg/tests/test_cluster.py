import numpy as np
import pytest

from measint.cluster import (
    BALANCED,
    ClusterConfig,
    DualRailIndex,
    arrival_bins,
    bin_offsets,
    build_cluster,
    build_epr_rails,
    correlation_adjacency,
    extract_graph,
    nullifier_variances,
    rail_labels,
    reconstruct_from_graph,
)
from measint.symplectic import db_to_r

CP = (0.0, np.pi / 2)


def test_dual_rail_index():
    assert DualRailIndex("A", 3).flat(10) == 3
    assert DualRailIndex("B", 3).flat(10) == 13
    assert DualRailIndex.from_flat(13, 10) == ("B", 3)
    assert rail_labels(2) == (("A", 0), ("A", 1), ("B", 0), ("B", 1))
    with pytest.raises(ValueError):
        DualRailIndex("C", 0).flat(4)
    with pytest.raises(IndexError):
        DualRailIndex("A", 4).flat(4)


def test_config_validation():
    with pytest.raises(ValueError):
        ClusterConfig(4, (4,))
    with pytest.raises(ValueError):
        ClusterConfig(4, (0,))
    with pytest.raises(ValueError):
        ClusterConfig(0)
    with pytest.raises(ValueError):
        ClusterConfig(4, loss_eta=0.0)
    cfg = ClusterConfig(4, squeeze_a_db=3.0, squeeze_b_db=2.3)
    assert cfg.input_squeezing() == pytest.approx((db_to_r(3.0), db_to_r(2.3)))
    assert ClusterConfig(4, r_in=(0.5, 0.4)).input_squeezing() == (0.5, 0.4)
    assert cfg.n_modes == 8


def test_zero_squeezing_gives_vacuum():
    state = build_cluster(ClusterConfig(6, (1, 3)))
    assert np.allclose(state.cov, np.eye(24))


def test_epr_rails_nullifiers():
    r = 0.6
    state = build_epr_rails(ClusterConfig(5, r_in=(r, r)))
    for t in range(5):
        vx, vp = nullifier_variances(state, t, 5 + t)
        assert vx == pytest.approx(np.exp(-2 * r), rel=1e-12)
        assert vp == pytest.approx(np.exp(-2 * r), rel=1e-12)
    assert np.allclose(BALANCED @ BALANCED.conj().T, np.eye(2))


def test_cluster_is_pure_and_labelled():
    state = build_cluster(ClusterConfig(10, (1, 3), 2.3, 3.0, phase_mask=(CP, CP)))
    assert state.is_pure()
    assert state.labels[0] == ("A", 0) and state.labels[10] == ("B", 0)


def test_chain_topology_for_single_delay():
    m = 12
    state = build_cluster(ClusterConfig(m, (1,), r_in=(0.7, 0.7)))
    adj = correlation_adjacency(state)
    # nearest neighbours in detection time
    assert bin_offsets(adj, (1,)) == {1}
    # each time slot talks only to its two neighbouring slots
    arr = arrival_bins(m, (1,))
    for k in range(2 * m):
        partners = set(arr[np.nonzero(adj[k])[0]].tolist())
        assert partners <= {arr[k] - 1, arr[k] + 1}


def test_two_delays_add_long_links():
    m = 24
    state = build_cluster(ClusterConfig(m, (1, 8), 2.3, 3.0, phase_mask=(CP, CP)))
    adj = correlation_adjacency(state)
    a, b = DualRailIndex("A", 12).flat(m), DualRailIndex("B", 4).flat(m)
    assert adj[a, b]
    assert 8 in bin_offsets(adj)


def test_delay_order_matters():
    a = build_cluster(ClusterConfig(16, (1, 8), r_in=(0.5, 0.5)))
    b = build_cluster(ClusterConfig(16, (8, 1), r_in=(0.5, 0.5)))
    assert not np.allclose(a.cov, b.cov)


def test_arrival_bins():
    assert list(arrival_bins(3, (1, 8))) == [0, 1, 2, 9, 10, 11]


def test_graph_roundtrip():
    state = build_cluster(ClusterConfig(6, (1,), r_in=(0.5, 0.5), phase_mask=(CP,)))
    z = extract_graph(state)
    assert np.allclose(z, z.T)
    assert np.all(np.linalg.eigvalsh(z.imag) > 0)
    assert np.allclose(reconstruct_from_graph(z).cov, state.cov, atol=1e-10)


def test_loss_makes_mixed_cluster():
    state = build_cluster(ClusterConfig(4, (1,), 3.0, 3.0, loss_eta=0.8))
    assert not state.is_pure()
    with pytest.raises(ValueError):
        extract_graph(state)


def test_phase_mask_shapes():
    base = ClusterConfig(4, (1,), r_in=(0.5, 0.5))
    flat = build_cluster(base.replace(phase_mask=((0.0,) * 4 + (np.pi / 2,) * 4,)))
    per_rail = build_cluster(base.replace(phase_mask=(CP,)))
    assert np.allclose(flat.cov, per_rail.cov)
    scalar = build_cluster(base.replace(phase_mask=(0.0,)))
    assert np.allclose(scalar.cov, build_cluster(base).cov)
