"""Monte-Carlo expressibility of measurement-induced interferometers.

The deviation between the ensemble ``P`` of induced unitaries and the Haar
ensemble ``H`` is estimated, for squeezed test inputs ``S(r_test)|0>``, as

    E_rtest[ E_HH F^t + E_PP F^t - 2 E_PH F^t ]

where ``F`` is the fidelity of the two pure states ``U S(r_test)|0>`` and
each expectation runs over independent pairs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .cluster import ClusterConfig, build_cluster
from .conditioning import MeasurementPlan, apply_plan, knights_outputs, n_measured, strategy_plan
from .decompose import effective_circuit
from .haarstats import sample_haar_unitary
from .symplectic import GaussianState, overlap_from_covs, passive_to_symplectic, squeeze_transform

ANGLE_RANGE = (-np.pi / 2, np.pi / 2)
STRATEGIES = ("linear", "knight", "haar")


@dataclass(frozen=True)
class TestDistribution:
    """Distribution of the test squeezing parameters."""

    __test__ = False  # not a pytest class

    kind: str = "uniform"
    low: float = -0.5
    high: float = 0.5

    def __post_init__(self):
        if self.kind != "uniform":
            raise ValueError(f"unsupported test distribution {self.kind!r}")
        if not self.low <= self.high:
            raise ValueError("low must not exceed high")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high, n)


@dataclass(frozen=True)
class DeviationEstimate:
    value: float
    stderr: float
    t: int
    n_pairs: int
    n_rtest: int
    seed: int
    haar_term: float
    param_term: float
    cross_term: float
    batch_values: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["batch_values"] = list(self.batch_values)
        return d


def sample_haar_passive(n: int, rng: np.random.Generator) -> np.ndarray:
    return sample_haar_unitary(n, rng)


def sample_haar_batch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


# ---------------------------------------------------------------------------
# induced ensemble

@lru_cache(maxsize=32)
def _cached_cluster(config: ClusterConfig) -> GaussianState:
    return build_cluster(config)


@dataclass(frozen=True)
class InducedEnsemble:
    """Unitaries induced on ``n_out`` modes of a fixed cluster by uniformly
    random homodyne angles.

    ``strategy`` is ``"linear"`` (measure rail A, keep rail B), ``"knight"``
    (keep a rail-alternating stride-2 pattern) or ``"haar"``, which swaps in
    the Haar ensemble as a self-test.
    """

    config: ClusterConfig
    strategy: str = "linear"
    n_out: Optional[int] = None
    layout: tuple = ()

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        n_out = self.n_out
        if n_out is None:
            n_out = self.config.m_bins if self.strategy in ("linear", "haar") else self.config.m_bins // 2
        object.__setattr__(self, "n_out", int(n_out))
        if self.strategy == "linear" and self.n_out != self.config.m_bins:
            raise ValueError("linear strategy keeps all m_bins rail-B modes")
        if self.strategy == "knight":
            knights_outputs(self.config.m_bins, self.n_out, **dict(self.layout))

    @property
    def n_angles(self) -> int:
        return n_measured(self.strategy, self.config.m_bins, self.n_out)

    def plan(self, angles: Sequence[float]) -> MeasurementPlan:
        return strategy_plan(self.strategy, self.config.m_bins, self.n_out, angles, **dict(self.layout))

    def draw_angles(self, rng: np.random.Generator, count: Optional[int] = None) -> np.ndarray:
        shape = (self.n_angles,) if count is None else (count, self.n_angles)
        return rng.uniform(*ANGLE_RANGE, size=shape)

    def state(self, angles: Sequence[float]) -> GaussianState:
        return apply_plan(_cached_cluster(self.config), self.plan(angles))

    def sample(self, rng: np.random.Generator):
        """One induced ``(u_eff, r_eff)`` pair."""
        if self.strategy == "haar":
            return sample_haar_passive(self.n_out, rng), np.zeros(self.n_out)
        circuit = effective_circuit(self.state(self.draw_angles(rng)))
        return circuit.u_eff, circuit.r_eff

    def sample_batch(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` induced unitaries, stacked."""
        if self.strategy == "haar":
            return sample_haar_batch(self.n_out, count, rng)
        angles = self.draw_angles(rng, count)
        return induced_unitaries(_cached_cluster(self.config), self.plan(angles[0]), angles)


def sample_induced_unitary(config: ClusterConfig, strategy: str, rng: np.random.Generator,
                           n_out: Optional[int] = None):
    return InducedEnsemble(config, strategy, n_out).sample(rng)


def _condition_batch(cov: np.ndarray, plan: MeasurementPlan, angles: np.ndarray) -> np.ndarray:
    """Stacked version of :func:`apply_plan` for one plan layout and many angle sets."""
    n = cov.shape[0] // 2
    v = np.broadcast_to(cov, (len(angles),) + cov.shape).copy()
    for col, k in enumerate(plan.measured):
        c_, s_ = np.cos(angles[:, col]), np.sin(angles[:, col])
        q = c_[:, None] * v[:, :, k] + s_[:, None] * v[:, :, k + n]
        var = c_ * q[:, k] + s_ * q[:, k + n]
        safe = np.where(var < 1e-12, np.inf, var)
        v -= q[:, :, None] * q[:, None, :] / safe[:, None, None]
    keep = np.asarray(plan.outputs)
    idx = np.concatenate([keep, keep + n])
    return v[:, idx][:, :, idx]


def induced_unitaries(cluster: GaussianState, plan: MeasurementPlan, angles: np.ndarray) -> np.ndarray:
    """Effective unitaries for a stack of angle vectors sharing ``plan``'s layout.

    Vectorized equivalent of ``effective_circuit(apply_plan(...)).u_eff``. For
    pure states the Williamson step is trivial, so the passive factor comes
    straight from the eigenvectors of the conditioned covariance; samples
    with unsqueezed effective modes go through the scalar path.
    """
    covs = _condition_batch(cluster.cov, plan, np.asarray(angles))
    n = covs.shape[1] // 2
    w, e = np.linalg.eigh(covs)
    vecs = e[:, :, :n]
    u = vecs[:, :n, :] + 1j * vecs[:, n:, :]
    left, _, right = np.linalg.svd(u)
    u = left @ right
    # columns degenerate with their Omega-partners need the careful path
    slow = np.flatnonzero(np.abs(np.log(w[:, n - 1])) < 1e-6)
    if len(slow):
        eye = np.eye(2 * n)
        vac = np.max(np.abs(covs[slow] - eye), axis=(1, 2)) < 1e-12
        # vacuum decomposes to the identity circuit
        u[slow[vac]] = np.eye(n)
        for b in slow[~vac]:
            u[b] = effective_circuit(GaussianState(covs[b], check=False)).u_eff
    peak = np.argmax(np.abs(u), axis=1)
    lead = np.take_along_axis(u, peak[:, None, :], axis=1)[:, 0, :]
    u *= np.where(lead.real < 0, -1.0, 1.0)[:, None, :]
    return u


# ---------------------------------------------------------------------------
# fidelities

def _test_covariances(us: np.ndarray, r_test: np.ndarray) -> np.ndarray:
    """Covariances of ``U S(r_test)|0>`` for a stack of unitaries."""
    x, y = us.real, us.imag
    o = np.concatenate([np.concatenate([x, -y], axis=2), np.concatenate([y, x], axis=2)], axis=1)
    d2 = np.concatenate([np.exp(-2 * r_test), np.exp(2 * r_test)])
    cov = (o * d2[None, None, :]) @ np.transpose(o, (0, 2, 1))
    return 0.5 * (cov + np.transpose(cov, (0, 2, 1)))


def fidelity_moment(u: np.ndarray, w: np.ndarray, r_test: Sequence[float], t: int = 1) -> float:
    """``|<psi_U|psi_W>|^(2t)`` for ``psi_U = U S(r_test)|0>``."""
    r_test = np.asarray(r_test, dtype=float)
    sq = squeeze_transform(r_test)
    va = passive_to_symplectic(u, 1e-8) @ sq
    vb = passive_to_symplectic(w, 1e-8) @ sq
    f = float(overlap_from_covs(va @ va.T, vb @ vb.T))
    return min(f, 1.0) ** t


def pair_fidelities(us: np.ndarray, ws: np.ndarray, r_test: np.ndarray) -> np.ndarray:
    """Fidelities of the test states for paired stacks of unitaries."""
    f = overlap_from_covs(_test_covariances(us, r_test), _test_covariances(ws, r_test))
    return np.minimum(f, 1.0)


# ---------------------------------------------------------------------------
# estimator

@dataclass(frozen=True)
class _Unit:
    r_test: np.ndarray
    n_pairs: int
    seed: np.random.SeedSequence
    pairing: str


def _unit_terms(ensemble: InducedEnsemble, haar_n: int, unit: _Unit, ts: tuple) -> np.ndarray:
    """Term sums for one work unit: rows (haar, param, cross), columns t."""
    rng = np.random.default_rng(unit.seed)
    n = unit.n_pairs
    if unit.pairing == "all":
        h = sample_haar_batch(haar_n, n, rng)
        p = ensemble.sample_batch(n, rng)
        i, j = np.triu_indices(n, 1)
        fh = pair_fidelities(h[i], h[j], unit.r_test)
        fp = pair_fidelities(p[i], p[j], unit.r_test)
        hi, pj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        fc = pair_fidelities(h[hi.ravel()], p[pj.ravel()], unit.r_test)
    else:
        h = sample_haar_batch(haar_n, 3 * n, rng)
        p = ensemble.sample_batch(3 * n, rng)
        fh = pair_fidelities(h[:n], h[n:2 * n], unit.r_test)
        fp = pair_fidelities(p[:n], p[n:2 * n], unit.r_test)
        fc = pair_fidelities(h[2 * n:], p[2 * n:], unit.r_test)
    return np.array([[np.mean(f**t) for t in ts] for f in (fh, fp, fc)])


def _run_unit(args):
    return _unit_terms(*args)


def estimate_deviations(ensemble: InducedEnsemble, ts: Sequence[int] = (1,),
                        p_test: TestDistribution = TestDistribution(), n_pairs: int = 1000,
                        n_rtest: int = 20, seed: int = 0, n_batches: int = 20, workers: int = 1,
                        pairing: str = "independent") -> list:
    """Deviation estimates for several moment orders from shared samples.

    Work is split into units ``(r_test draw, chunk of pairs)`` with at least
    ``n_batches`` units in total; each unit has its own seed spawned from
    ``seed``, so results do not depend on ``workers``. The standard error is
    the batch-means error over units.
    """
    if n_pairs < 2 or n_rtest < 2:
        raise ValueError("need n_pairs >= 2 and n_rtest >= 2")
    if pairing not in ("independent", "all"):
        raise ValueError("pairing must be 'independent' or 'all'")
    ts = tuple(int(t) for t in ts)
    if any(t < 1 for t in ts):
        raise ValueError("moment order must be a positive integer")
    n_modes = ensemble.n_out
    chunks = max(1, math.ceil(n_batches / n_rtest))
    if n_pairs < 2 * chunks:
        chunks = max(1, n_pairs // 2)
    sizes = [n_pairs // chunks + (1 if c < n_pairs % chunks else 0) for c in range(chunks)]

    root = np.random.SeedSequence(seed)
    units = []
    for draw_seed in root.spawn(n_rtest):
        draw_rng = np.random.default_rng(draw_seed)
        r_test = p_test.sample(n_modes, draw_rng)
        for size, unit_seed in zip(sizes, draw_seed.spawn(chunks)):
            units.append(_Unit(r_test, size, unit_seed, pairing))

    jobs = [(ensemble, n_modes, u, ts) for u in units]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            terms = list(pool.map(_run_unit, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        terms = [_run_unit(j) for j in jobs]
    terms = np.array(terms)  # (units, 3, len(ts))
    weights = np.array([u.n_pairs for u in units], dtype=float)
    weights /= weights.sum()

    out = []
    for col, t in enumerate(ts):
        haar, param, cross = (terms[:, row, col] for row in range(3))
        per_unit = haar + param - 2 * cross
        value = float(np.sum(weights * per_unit))
        b = len(per_unit)
        stderr = float(np.std(per_unit, ddof=1) / np.sqrt(b)) if b > 1 else float("nan")
        out.append(DeviationEstimate(
            value=value, stderr=stderr, t=t, n_pairs=n_pairs, n_rtest=n_rtest, seed=seed,
            haar_term=float(np.sum(weights * haar)), param_term=float(np.sum(weights * param)),
            cross_term=float(np.sum(weights * cross)), batch_values=tuple(per_unit.tolist()),
        ))
    return out


def estimate_deviation(n: int, cluster_config: ClusterConfig, strategy: str,
                       p_test: TestDistribution = TestDistribution(), t: int = 1, n_pairs: int = 1000,
                       n_rtest: int = 20, seed: int = 0, **kwargs) -> DeviationEstimate:
    """Deviation of the ``n``-mode induced ensemble from Haar at moment order ``t``."""
    ensemble = InducedEnsemble(cluster_config, strategy, n)
    return estimate_deviations(ensemble, (t,), p_test, n_pairs, n_rtest, seed, **kwargs)[0]
