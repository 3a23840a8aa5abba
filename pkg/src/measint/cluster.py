"""Time-multiplexed dual-rail cluster states.

Two squeezers feed rails A and B, one temporal bin per clock cycle. Each bin
pair is combined on a balanced beamsplitter, then every delay stage ``K``
holds rail B back by ``K`` clock cycles and recombines it with rail A on
another balanced beamsplitter.

Modes are labelled by the bin ``t`` in which they were emitted. Flat mode
index: ``t`` on rail A, ``m_bins + t`` on rail B. Rail-B light emitted in bin
``t`` arrives at the output in bin ``t + sum(delays)``; see :func:`arrival_bins`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .symplectic import (
    GaussianState,
    apply_pairwise,
    apply_phases,
    beamsplitter_matrix,
    db_to_r,
    loss_channel,
)

BALANCED = beamsplitter_matrix(0.5, 0.0)


class DualRailIndex(NamedTuple):
    rail: str
    t: int

    def flat(self, m_bins: int) -> int:
        if self.rail not in ("A", "B"):
            raise ValueError(f"unknown rail {self.rail!r}")
        if not 0 <= self.t < m_bins:
            raise IndexError(f"bin {self.t} outside [0, {m_bins})")
        return self.t if self.rail == "A" else m_bins + self.t

    @classmethod
    def from_flat(cls, k: int, m_bins: int) -> "DualRailIndex":
        if not 0 <= k < 2 * m_bins:
            raise IndexError(f"mode {k} outside [0, {2 * m_bins})")
        return cls("A", k) if k < m_bins else cls("B", k - m_bins)


def rail_labels(m_bins: int) -> tuple:
    return tuple(DualRailIndex("A", t) for t in range(m_bins)) + tuple(
        DualRailIndex("B", t) for t in range(m_bins)
    )


@dataclass(frozen=True)
class ClusterConfig:
    m_bins: int
    delays: tuple = (1,)
    squeeze_a_db: float = 0.0
    squeeze_b_db: float = 0.0
    phase_mask: Optional[tuple] = None
    loss_eta: Optional[tuple] = None
    clock_tau_ns: float = 246.9
    # optional override of the two input squeezing parameters (units of r)
    r_in: Optional[tuple] = field(default=None)

    def __post_init__(self):
        if int(self.m_bins) != self.m_bins or self.m_bins < 1:
            raise ValueError("m_bins must be a positive integer")
        delays = tuple(int(k) for k in self.delays)
        object.__setattr__(self, "delays", delays)
        for k in delays:
            if k < 1:
                raise ValueError(f"delay {k} must be a positive integer")
            if k >= self.m_bins:
                raise ValueError(f"delay {k} must be smaller than m_bins={self.m_bins}")
        if self.phase_mask is not None and len(self.phase_mask) != len(delays):
            raise ValueError("phase_mask needs one entry per delay stage")
        if self.loss_eta is not None:
            eta = np.broadcast_to(np.asarray(self.loss_eta, dtype=float), (2 * self.m_bins,))
            if np.any(eta <= 0) or np.any(eta > 1):
                raise ValueError("loss efficiencies must lie in (0, 1]")
        if self.r_in is not None and len(self.r_in) != 2:
            raise ValueError("r_in must give the rail A and rail B squeezing")

    @property
    def n_modes(self) -> int:
        return 2 * self.m_bins

    def input_squeezing(self) -> tuple[float, float]:
        """Squeezing parameters of rails A (x-squeezed) and B (p-squeezed)."""
        if self.r_in is not None:
            return float(self.r_in[0]), float(self.r_in[1])
        return db_to_r(self.squeeze_a_db), db_to_r(self.squeeze_b_db)

    def replace(self, **changes) -> "ClusterConfig":
        from dataclasses import replace

        return replace(self, **changes)


def _mask_phases(mask, m_bins: int) -> np.ndarray:
    """Broadcast a stage mask (scalar, per rail, or per rail and bin) to flat modes."""
    mask = np.asarray(mask, dtype=float)
    if mask.ndim == 1 and mask.shape[0] == 2 * m_bins:
        mask = mask.reshape(2, m_bins)
    elif mask.ndim == 1 and mask.shape[0] == 2:
        mask = mask[:, None]
    return np.broadcast_to(mask, (2, m_bins)).reshape(-1)


def build_epr_rails(config: ClusterConfig) -> GaussianState:
    m = config.m_bins
    r_a, r_b = config.input_squeezing()
    # rail A squeezed in x, rail B in p
    r = np.concatenate([np.full(m, r_a), np.full(m, -r_b)])
    cov = np.diag(np.concatenate([np.exp(-2 * r), np.exp(2 * r)]))
    state = GaussianState(cov, labels=rail_labels(m), check=False)
    t = np.arange(m)
    return apply_pairwise(state, t, m + t, BALANCED)


def apply_delay_stage(state: GaussianState, k: int, stage_phase_mask=None,
                      prior_delay: int = 0) -> GaussianState:
    """One unbalanced interferometer.

    ``prior_delay`` is the delay rail B has already accumulated; the B mode
    emitted in bin ``t - k - prior_delay`` meets ``(A, t)``. Modes whose
    partner falls outside the window are left uncoupled.
    """
    if state.n_modes % 2:
        raise ValueError("dual-rail state needs an even number of modes")
    m = state.n_modes // 2
    if k < 1:
        raise ValueError("delay must be a positive integer")
    if k >= m:
        raise ValueError(f"delay {k} must be smaller than m_bins={m}")
    if stage_phase_mask is not None:
        state = apply_phases(state, _mask_phases(stage_phase_mask, m))
    shift = k + prior_delay
    t = np.arange(min(shift, m), m)
    return apply_pairwise(state, t, m + t - shift, BALANCED)


def build_cluster(config: ClusterConfig) -> GaussianState:
    state = build_epr_rails(config)
    prior = 0
    for stage, k in enumerate(config.delays):
        mask = None if config.phase_mask is None else config.phase_mask[stage]
        state = apply_delay_stage(state, k, mask, prior)
        prior += k
    if config.loss_eta is not None:
        state = loss_channel(state, config.loss_eta)
    return state


def extract_graph(state: GaussianState, tol: float = 1e-6) -> np.ndarray:
    """Complex graph matrix ``Z = X + iY`` of a pure state."""
    if not state.is_pure(tol):
        raise ValueError(f"graph extraction needs a pure state (residual {state.purity_residual():.3g})")
    n = state.n_modes
    v = state.cov
    y = np.linalg.inv(v[:n, :n])
    x = y @ v[:n, n:]
    z = x + 1j * y
    return 0.5 * (z + z.T)


def reconstruct_from_graph(z: np.ndarray) -> GaussianState:
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    yinv = np.linalg.inv(y)
    cov = np.block([[yinv, yinv @ x], [x @ yinv, x @ yinv @ x + y]])
    return GaussianState(0.5 * (cov + cov.T), check=False)


def correlation_adjacency(state: GaussianState, threshold: float = 1e-6) -> np.ndarray:
    """Boolean mode adjacency: any quadrature cross-covariance above ``threshold``."""
    n = state.n_modes
    v = np.abs(state.cov)
    blocks = np.maximum.reduce([v[:n, :n], v[:n, n:], v[n:, :n], v[n:, n:]])
    adj = blocks > threshold
    np.fill_diagonal(adj, False)
    return adj


def arrival_bins(m_bins: int, delays: Sequence[int]) -> np.ndarray:
    """Output clock bin of every flat mode."""
    t = np.arange(m_bins)
    return np.concatenate([t, t + int(sum(delays))])


def bin_offsets(adj: np.ndarray, delays: Sequence[int] = ()) -> set:
    """Arrival-time offsets ``|t - t'|`` between correlated modes of a dual-rail state."""
    m = adj.shape[0] // 2
    times = arrival_bins(m, delays)
    i, j = np.nonzero(adj)
    return set(np.abs(times[i] - times[j]).tolist())


def nullifier_variances(state: GaussianState, a: int, b: int) -> tuple[float, float]:
    """Variances of ``(x_a - x_b)/sqrt2`` and ``(p_a + p_b)/sqrt2``."""
    n = state.n_modes
    v = state.cov
    vx = 0.5 * (v[a, a] + v[b, b] - 2 * v[a, b])
    vp = 0.5 * (v[a + n, a + n] + v[b + n, b + n] + 2 * v[a + n, b + n])
    return float(vx), float(vp)


def modes_of(labels: Sequence, wanted: Sequence) -> list:
    lookup = {lab: k for k, lab in enumerate(labels)}
    return [lookup[w] for w in wanted]
