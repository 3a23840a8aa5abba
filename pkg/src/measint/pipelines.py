"""End-to-end runs shared by the command line and the acceptance suite."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .cluster import ClusterConfig, DualRailIndex, build_cluster
from .conditioning import MeasurementPlan, apply_plan, chop, linear_plan, strategy_plan
from .decompose import EffectiveCircuit, effective_circuit
from .expressibility import InducedEnsemble, TestDistribution, estimate_deviations
from .haarstats import (
    amplitude_histogram,
    binning_noise_floor,
    compare_to_haar,
    phase_histogram,
)
from .symplectic import GaussianState


def window_modes(m_bins: int, start: int, length: int) -> list:
    """Flat indices of bins ``[start, start + length)`` on both rails, A first."""
    if start < 0 or length < 1 or start + length > m_bins:
        raise ValueError(f"window [{start}, {start + length}) does not fit in {m_bins} bins")
    bins = range(start, start + length)
    return [DualRailIndex("A", t).flat(m_bins) for t in bins] + [DualRailIndex("B", t).flat(m_bins) for t in bins]


def chop_to_window(state: GaussianState, m_bins: int, start: int, length: int) -> GaussianState:
    """x-measure every mode outside the window; the result is a smaller dual-rail state."""
    keep = set(window_modes(m_bins, start, length))
    return chop(state, [k for k in range(state.n_modes) if k not in keep])


def sweep_values(sweep: dict) -> np.ndarray:
    if "values" in sweep:
        return np.asarray(sweep["values"], dtype=float)
    return np.linspace(sweep.get("low", -np.pi / 2), sweep.get("high", np.pi / 2), sweep.get("steps", 5))


def six_mode_sweep(config: ClusterConfig, start: int, length: int, base_angles: Sequence[float],
                   index: int, values: Sequence[float]):
    """Linear-strategy states on a chopped window, one per value of angle ``index``.

    Returns ``(values, states, circuits)``.
    """
    chopped = chop_to_window(build_cluster(config), config.m_bins, start, length)
    base = np.asarray(base_angles, dtype=float)
    if base.shape != (length,):
        raise ValueError(f"need {length} base angles")
    if not 0 <= index < length:
        raise ValueError("sweep index outside the window")
    states, circuits = [], []
    for v in values:
        angles = base.copy()
        angles[index] = v
        state = apply_plan(chopped, linear_plan(length, angles))
        states.append(state)
        circuits.append(effective_circuit(state))
    return np.asarray(values, dtype=float), states, circuits


def _calibration(args):
    m, n_bins, seed = args
    return binning_noise_floor(m, n_bins, 1, np.random.default_rng(seed))


def haar_run(config: ClusterConfig, seed: int, strategy: str = "linear", n_bins: int = 60,
             trim_edges: int = 0, calibration_samples: int = 8, workers: int = 1):
    """Random-angle induced interferometer compared with the Haar measure.

    Returns ``(report, circuit, amplitude_hist, phase_hist)``. All randomness
    derives from ``seed``; the worker count only spreads the calibration
    samples and does not change any number.
    """
    root = np.random.SeedSequence(seed)
    angle_seed, ref_seed, cal_seed = root.spawn(3)
    ensemble = InducedEnsemble(config, strategy)
    angles = ensemble.draw_angles(np.random.default_rng(angle_seed))
    state = apply_plan(build_cluster(config), ensemble.plan(angles))
    circuit = effective_circuit(state)
    comparison = compare_to_haar(circuit.u_eff, n_bins, np.random.default_rng(ref_seed), trim_edges)

    m = circuit.n_modes
    cal_jobs = [(m, n_bins, s) for s in cal_seed.spawn(calibration_samples)]
    if workers > 1 and calibration_samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            floors = list(pool.map(_calibration, cal_jobs))
    else:
        floors = [_calibration(j) for j in cal_jobs]
    calibration = {
        "n_samples": calibration_samples,
        "amplitude_min": min(f["amplitude_min"] for f in floors) if floors else None,
        "amplitude_mean": float(np.mean([f["amplitude_mean"] for f in floors])) if floors else None,
        "phase_min": min(f["phase_min"] for f in floors) if floors else None,
        "phase_mean": float(np.mean([f["phase_mean"] for f in floors])) if floors else None,
    }
    report = {
        "seed": seed,
        "strategy": strategy,
        "n_modes": m,
        "n_angles": int(len(angles)),
        "purity_residual": circuit.purity_residual,
        "r_eff_max": float(circuit.r_eff.max()),
        "r_eff_min": float(circuit.r_eff.min()),
        "comparison": comparison,
        "calibration": calibration,
    }
    return report, circuit, amplitude_histogram(circuit.u_eff, n_bins, trim_edges), \
        phase_histogram(circuit.u_eff, n_bins, trim_edges)


def expressibility_configs(section: dict):
    """Yield ``(label, ensemble)`` for every size, strategy and input squeezing."""
    delays = tuple(section.get("delays", [1]))
    mask = section.get("phase_mask")
    if mask is not None:
        mask = tuple(tuple(np.ravel(stage).tolist()) for stage in mask)
    per_output = section.get("knight_bins_per_output", 2)
    for n in section.get("sizes", [2]):
        for strategy in section.get("strategies", ["linear", "knight"]):
            for r in section.get("r_in", [0.0, 1.0]):
                m_bins = n if strategy in ("linear", "haar") else per_output * n
                cfg = ClusterConfig(m_bins, delays, r_in=(float(r), float(r)), phase_mask=mask)
                yield {"n": int(n), "strategy": strategy, "r_in": float(r), "m_bins": m_bins}, \
                    InducedEnsemble(cfg, strategy, n)


def expressibility_run(section: dict, seed: int, workers: int = 1) -> list:
    """Deviation estimates for every configuration in ``section``."""
    p = section.get("p_test", {})
    p_test = TestDistribution(p.get("kind", "uniform"), p.get("low", -0.5), p.get("high", 0.5))
    ts = tuple(section.get("t", [1]))
    rows = []
    for k, (label, ensemble) in enumerate(expressibility_configs(section)):
        # one seed per configuration, independent of how many there are
        cfg_seed = int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
        estimates = estimate_deviations(
            ensemble, ts, p_test,
            n_pairs=section.get("n_pairs", 1000), n_rtest=section.get("n_rtest", 20), seed=cfg_seed,
            n_batches=section.get("n_batches", 20), workers=workers,
            pairing=section.get("pairing", "independent"),
        )
        for est in estimates:
            rows.append(dict(label, **est.to_dict()))
    return rows


def plan_for_state(state: GaussianState, strategy: str, rng: np.random.Generator,
                   angles: Optional[Sequence[float]] = None, n_out: Optional[int] = None) -> MeasurementPlan:
    """Strategy plan sized for a dual-rail ``state``; random angles unless given."""
    m_bins = state.n_modes // 2
    n_out = m_bins if strategy == "linear" and n_out is None else n_out
    if n_out is None:
        n_out = m_bins // 2
    count = m_bins if strategy == "linear" else 2 * m_bins - n_out
    if angles is None:
        angles = rng.uniform(-np.pi / 2, np.pi / 2, count)
    return strategy_plan(strategy, m_bins, n_out, angles)


def effective_report(circuit: EffectiveCircuit) -> dict:
    return {
        "n_modes": circuit.n_modes,
        "r_eff": circuit.r_eff.tolist(),
        "purity_residual": circuit.purity_residual,
    }
