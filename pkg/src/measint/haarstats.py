"""Element statistics of interferometer unitaries compared with the Haar measure."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tolerances import DEFAULT

DEFAULT_BINS = 60


@dataclass(frozen=True)
class HistogramReport:
    bin_edges: np.ndarray
    frequencies: np.ndarray
    n_elements: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        freq = np.asarray(self.frequencies, dtype=float)
        if edges.ndim != 1 or len(edges) != len(freq) + 1:
            raise ValueError("need one more edge than frequency")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(freq < 0):
            raise ValueError("frequencies must be non-negative")
        if abs(freq.sum() - 1.0) > DEFAULT.histogram_norm * max(1, len(freq)):
            raise ValueError("frequencies must sum to 1")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "frequencies", freq)

    def to_csv(self) -> str:
        lines = ["bin_left,bin_right,frequency"]
        for lo, hi, f in zip(self.bin_edges[:-1], self.bin_edges[1:], self.frequencies):
            lines.append(f"{float(lo)!r},{float(hi)!r},{float(f)!r}")
        return "\n".join(lines) + "\n"


def _histogram(values: np.ndarray, edges: np.ndarray) -> HistogramReport:
    values = np.asarray(values, dtype=float).ravel()
    counts, _ = np.histogram(values, bins=edges)
    if counts.sum() != values.size:
        raise ValueError("values fall outside the histogram range")
    return HistogramReport(edges, counts / values.size, values.size)


def amplitude_edges(n_bins: int = DEFAULT_BINS) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_bins + 1)


def phase_edges(n_bins: int = DEFAULT_BINS) -> np.ndarray:
    return np.linspace(-np.pi, np.pi, n_bins + 1)


def _select(u: np.ndarray, trim: int) -> np.ndarray:
    u = np.asarray(u)
    if trim:
        if 2 * trim >= u.shape[0]:
            raise ValueError("edge trim removes every row")
        u = u[trim:-trim]
    return u


def amplitude_histogram(u: np.ndarray, n_bins: int = DEFAULT_BINS, trim_edges: int = 0) -> HistogramReport:
    """Histogram of ``|U_jk|`` over ``[0, 1]``.

    ``trim_edges`` drops that many output rows at each end before counting.
    """
    a = np.abs(_select(u, trim_edges))
    # |U_jk| can exceed 1 by rounding
    return _histogram(np.minimum(a, 1.0), amplitude_edges(n_bins))


def phase_histogram(u: np.ndarray, n_bins: int = DEFAULT_BINS, trim_edges: int = 0) -> HistogramReport:
    """Histogram of ``arg(U_jk)``; -pi is folded onto pi so the range is (-pi, pi]."""
    ph = np.angle(_select(u, trim_edges))
    ph = np.where(ph <= -np.pi, np.pi, ph)
    return _histogram(ph, phase_edges(n_bins))


def theoretical_amplitude_pdf(m: int, a):
    """Density of ``|U_jk|`` for an ``m x m`` Haar unitary."""
    if m < 2:
        raise ValueError("density defined for m >= 2")
    a = np.asarray(a, dtype=float)
    return 2.0 * (m - 1) * (1.0 - a**2) ** (m - 2) * a


def theoretical_amplitude_cdf(m: int, a):
    if m < 2:
        raise ValueError("density defined for m >= 2")
    a = np.asarray(a, dtype=float)
    return 1.0 - (1.0 - a**2) ** (m - 1)


def theoretical_amplitude_histogram(m: int, n_bins: int = DEFAULT_BINS) -> HistogramReport:
    """Haar amplitude density integrated exactly over each bin."""
    edges = amplitude_edges(n_bins)
    freq = np.diff(theoretical_amplitude_cdf(m, edges))
    return HistogramReport(edges, freq / freq.sum(), 0)


def uniform_phase_histogram(n_bins: int = DEFAULT_BINS) -> HistogramReport:
    return HistogramReport(phase_edges(n_bins), np.full(n_bins, 1.0 / n_bins), 0)


def bhattacharyya_fidelity(p: HistogramReport, q: HistogramReport) -> float:
    if p.bin_edges.shape != q.bin_edges.shape or not np.allclose(p.bin_edges, q.bin_edges, rtol=0, atol=1e-12):
        raise ValueError("histograms have different bins")
    return float(min(1.0, np.sum(np.sqrt(p.frequencies * q.frequencies))))


def sample_haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a complex Ginibre matrix with the phases of
    ``diag(R)`` moved into ``Q``."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


def compare_to_haar(u: np.ndarray, n_bins: int = DEFAULT_BINS, rng: Optional[np.random.Generator] = None,
                    trim_edges: int = 0) -> dict:
    """Amplitude and phase fidelities of ``u`` against binned Haar theory and
    against one Haar sample of the same size."""
    u = np.asarray(u)
    m = u.shape[0]
    rng = np.random.default_rng() if rng is None else rng
    amp = amplitude_histogram(u, n_bins, trim_edges)
    pha = phase_histogram(u, n_bins, trim_edges)
    ref = sample_haar_unitary(m, rng)
    ref_amp = amplitude_histogram(ref, n_bins, trim_edges)
    ref_pha = phase_histogram(ref, n_bins, trim_edges)
    theory_amp = theoretical_amplitude_histogram(m, n_bins)
    theory_pha = uniform_phase_histogram(n_bins)
    return {
        "n_modes": m,
        "n_bins": n_bins,
        "trim_edges": trim_edges,
        "amplitude_fidelity_theory": bhattacharyya_fidelity(amp, theory_amp),
        "phase_fidelity_theory": bhattacharyya_fidelity(pha, theory_pha),
        "amplitude_fidelity_sample": bhattacharyya_fidelity(amp, ref_amp),
        "phase_fidelity_sample": bhattacharyya_fidelity(pha, ref_pha),
        "reference_amplitude_fidelity_theory": bhattacharyya_fidelity(ref_amp, theory_amp),
        "reference_phase_fidelity_theory": bhattacharyya_fidelity(ref_pha, theory_pha),
    }


def binning_noise_floor(m: int, n_bins: int = DEFAULT_BINS, n_samples: int = 8,
                        rng: Optional[np.random.Generator] = None) -> dict:
    """Fidelity of genuine Haar samples against binned theory: the best a
    single ``m x m`` matrix can be expected to score."""
    rng = np.random.default_rng() if rng is None else rng
    theory_amp = theoretical_amplitude_histogram(m, n_bins)
    theory_pha = uniform_phase_histogram(n_bins)
    amp, pha = [], []
    for _ in range(n_samples):
        ref = sample_haar_unitary(m, rng)
        amp.append(bhattacharyya_fidelity(amplitude_histogram(ref, n_bins), theory_amp))
        pha.append(bhattacharyya_fidelity(phase_histogram(ref, n_bins), theory_pha))
    return {
        "amplitude_min": float(np.min(amp)),
        "amplitude_mean": float(np.mean(amp)),
        "phase_min": float(np.min(pha)),
        "phase_mean": float(np.mean(pha)),
        "n_samples": n_samples,
    }
