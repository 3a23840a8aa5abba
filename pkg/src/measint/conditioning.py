"""Homodyne conditioning of Gaussian states and measurement plans.

Only covariances are tracked: for Gaussian states the conditional covariance
after a homodyne measurement does not depend on the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .cluster import DualRailIndex
from .symplectic import GaussianState
from .tolerances import DEFAULT


@dataclass(frozen=True)
class MeasurementPlan:
    """Ordered homodyne settings ``(mode, angle)`` plus the retained modes.

    Angle ``theta`` measures the quadrature ``x cos(theta) + p sin(theta)``.
    """

    entries: tuple
    outputs: tuple

    def __post_init__(self):
        entries = tuple((int(k), float(th)) for k, th in self.entries)
        outputs = tuple(int(k) for k in self.outputs)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "outputs", outputs)
        if not all(np.isfinite(th) for _, th in entries):
            raise ValueError("measurement angles must be finite")

    @property
    def measured(self) -> tuple:
        return tuple(k for k, _ in self.entries)

    @property
    def angles(self) -> np.ndarray:
        return np.array([th for _, th in self.entries])

    def validate(self, n_modes: int) -> None:
        measured = self.measured
        if len(set(measured)) != len(measured):
            raise ValueError("a mode is measured twice")
        if len(set(self.outputs)) != len(self.outputs):
            raise ValueError("an output mode is listed twice")
        overlap = set(measured) & set(self.outputs)
        if overlap:
            raise ValueError(f"modes {sorted(overlap)} are both measured and retained")
        covered = set(measured) | set(self.outputs)
        if covered != set(range(n_modes)):
            missing = sorted(set(range(n_modes)) - covered)
            extra = sorted(covered - set(range(n_modes)))
            raise ValueError(f"plan does not cover the state: missing {missing}, out of range {extra}")
        if not self.outputs:
            raise ValueError("plan retains no modes")

    def with_angles(self, angles: Sequence[float]) -> "MeasurementPlan":
        if len(angles) != len(self.entries):
            raise ValueError(f"expected {len(self.entries)} angles, got {len(angles)}")
        return MeasurementPlan(tuple(zip(self.measured, angles)), self.outputs)

    def to_records(self, m_bins: int) -> dict:
        def rec(k):
            idx = DualRailIndex.from_flat(k, m_bins)
            return {"rail": idx.rail, "t": idx.t}

        return {
            "m_bins": m_bins,
            "measure": [dict(rec(k), theta=th) for k, th in self.entries],
            "outputs": [rec(k) for k in self.outputs],
        }

    @classmethod
    def from_records(cls, data: dict) -> "MeasurementPlan":
        m = int(data["m_bins"])
        entries = [
            (DualRailIndex(r["rail"], int(r["t"])).flat(m), float(r["theta"])) for r in data["measure"]
        ]
        outputs = [DualRailIndex(r["rail"], int(r["t"])).flat(m) for r in data["outputs"]]
        return cls(tuple(entries), tuple(outputs))


def _measured_quadrature(v: np.ndarray, n: int, k: int, theta: float) -> np.ndarray:
    return np.cos(theta) * v[:, k] + np.sin(theta) * v[:, k + n]


def _drop_modes(state_cov: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    keep = np.asarray(keep, dtype=int)
    idx = np.concatenate([keep, keep + n])
    return state_cov[np.ix_(idx, idx)]


def _sub_labels(labels, keep):
    return None if labels is None else tuple(labels[k] for k in keep)


def _rank_one_condition(v: np.ndarray, n: int, k: int, theta: float, floor: float) -> np.ndarray:
    c = _measured_quadrature(v, n, k, theta)
    var = np.cos(theta) * c[k] + np.sin(theta) * c[k + n]
    if var < floor:
        # pseudo-inverse of a vanishing variance is zero: no update
        return v
    return v - np.outer(c, c) / var


def homodyne_condition(state: GaussianState, k: int, theta: float,
                       floor: float = DEFAULT.homodyne_pinv) -> GaussianState:
    """Measure ``x cos(theta) + p sin(theta)`` of mode ``k`` and discard it."""
    n = state.n_modes
    if not 0 <= k < n:
        raise IndexError(f"mode {k} out of range for {n} modes")
    if n == 1:
        raise ValueError("cannot measure the only mode of a state")
    v = _rank_one_condition(state.cov, n, k, theta, floor)
    keep = [j for j in range(n) if j != k]
    cov = _drop_modes(v, n, keep)
    return GaussianState(0.5 * (cov + cov.T), labels=_sub_labels(state.labels, keep), check=False)


def _condition_block(v: np.ndarray, n: int, measured: np.ndarray, angles: np.ndarray,
                     floor: float) -> Optional[np.ndarray]:
    """All measurements at once via a single Schur complement; ``None`` if the
    measured block is too close to singular for a plain solve."""
    c, s = np.cos(angles), np.sin(angles)
    cross = v[:, measured] * c + v[:, measured + n] * s
    block = cross[measured] * c[:, None] + cross[measured + n] * s[:, None]
    block = 0.5 * (block + block.T)
    w = np.linalg.eigvalsh(block)
    if w[0] < max(floor, 1e-9) * max(1.0, w[-1]):
        return None
    return v - cross @ np.linalg.solve(block, cross.T)


def apply_plan(state: GaussianState, plan: MeasurementPlan,
               floor: float = DEFAULT.homodyne_pinv) -> GaussianState:
    """Apply every homodyne in ``plan`` and return the retained modes in
    ``plan.outputs`` order."""
    n = state.n_modes
    plan.validate(n)
    v = state.cov
    if plan.entries:
        measured = np.array(plan.measured)
        angles = plan.angles
        out = _condition_block(v, n, measured, angles, floor)
        if out is None:
            out = v
            for k, th in plan.entries:
                out = _rank_one_condition(out, n, k, th, floor)
        v = out
    cov = _drop_modes(v, n, plan.outputs)
    return GaussianState(0.5 * (cov + cov.T), labels=_sub_labels(state.labels, plan.outputs), check=False)


def chop(state: GaussianState, modes: Iterable[int]) -> GaussianState:
    """Delete ``modes`` by x-quadrature measurements; other modes keep their order."""
    modes = list(modes)
    keep = [k for k in range(state.n_modes) if k not in set(modes)]
    if not keep:
        raise ValueError("chopping every mode leaves an empty state")
    return apply_plan(state, MeasurementPlan(tuple((k, 0.0) for k in modes), tuple(keep)))


# ---------------------------------------------------------------------------
# measurement strategies

def linear_plan(m_bins: int, thetas: Sequence[float]) -> MeasurementPlan:
    """Measure every bin of rail A, keep rail B."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape != (m_bins,):
        raise ValueError(f"linear plan needs {m_bins} angles, got {thetas.size}")
    entries = tuple((t, th) for t, th in zip(range(m_bins), thetas))
    return MeasurementPlan(entries, tuple(m_bins + t for t in range(m_bins)))


def knights_outputs(m_bins: int, n_out: int, start: Optional[int] = None, stride: int = 2,
                    first_rail: str = "A") -> list:
    """Output modes alternating rails with a fixed temporal stride, centred by default."""
    if n_out < 1:
        raise ValueError("need at least one output mode")
    span = stride * (n_out - 1) + 1
    if span > m_bins:
        raise ValueError(f"{n_out} outputs with stride {stride} do not fit in {m_bins} bins")
    if start is None:
        start = (m_bins - span + 1) // 2
    if start < 0 or start + span > m_bins:
        raise ValueError("pattern exceeds the available bins")
    rails = ("A", "B") if first_rail == "A" else ("B", "A")
    return [DualRailIndex(rails[i % 2], start + stride * i).flat(m_bins) for i in range(n_out)]


def knights_plan(m_bins: int, n_out: int, thetas: Sequence[float], start: Optional[int] = None,
                 stride: int = 2, first_rail: str = "A") -> MeasurementPlan:
    """Knight's-jump pattern: keep ``n_out`` modes hopping between rails, measure the rest."""
    outputs = knights_outputs(m_bins, n_out, start, stride, first_rail)
    measured = [k for k in range(2 * m_bins) if k not in set(outputs)]
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape != (len(measured),):
        raise ValueError(f"knight's plan needs {len(measured)} angles, got {thetas.size}")
    return MeasurementPlan(tuple(zip(measured, thetas)), tuple(outputs))


def strategy_plan(strategy: str, m_bins: int, n_out: int, thetas: Sequence[float], **layout) -> MeasurementPlan:
    if strategy == "linear":
        if n_out != m_bins:
            raise ValueError("the linear strategy keeps every rail-B bin: n_out must equal m_bins")
        return linear_plan(m_bins, thetas)
    if strategy in ("knight", "knights"):
        return knights_plan(m_bins, n_out, thetas, **layout)
    raise ValueError(f"unknown strategy {strategy!r}")


def n_measured(strategy: str, m_bins: int, n_out: int) -> int:
    if strategy == "linear":
        return m_bins
    return 2 * m_bins - n_out
