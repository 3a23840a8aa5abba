"""Zero-mean Gaussian states and the symplectic maps acting on them.

Conventions used throughout the package:

* quadratures are ordered in blocks, ``(x_1..x_N, p_1..p_N)`` ("xxpp");
* hbar = 2, so the vacuum covariance is the identity;
* a positive squeezing parameter ``r`` squeezes the x quadrature;
* a passive unitary ``U`` acts on annihilation operators, ``a -> U a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .tolerances import DEFAULT, Tolerances


def omega(n: int) -> np.ndarray:
    """Symplectic form ``[[0, I], [-I, 0]]`` for ``n`` modes."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianState:
    """Covariance matrix of a zero-mean Gaussian state.

    ``labels`` optionally names each mode, e.g. ``("A", 3)``; it is carried
    along by :func:`permute`, :func:`tensor` and the conditioning routines.
    """

    cov: np.ndarray
    labels: Optional[tuple] = field(default=None, compare=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        cov = _freeze(self.cov)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be square with even size, got {cov.shape}")
        object.__setattr__(self, "cov", cov)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != self.n_modes:
                raise ValueError("one label per mode required")
            object.__setattr__(self, "labels", labels)
        if self.check:
            check_covariance(cov)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.cov)

    def purity_residual(self) -> float:
        """Largest deviation of a symplectic eigenvalue from 1."""
        if self.n_modes == 0:
            return 0.0
        return float(np.max(np.abs(self.symplectic_eigenvalues() - 1.0)))

    def is_pure(self, tol: float = DEFAULT.purity) -> bool:
        return self.purity_residual() < tol

    def __eq__(self, other):
        if not isinstance(other, GaussianState):
            return NotImplemented
        return self.cov.shape == other.cov.shape and np.array_equal(self.cov, other.cov)

    __hash__ = None


def check_covariance(cov: np.ndarray, tol: Tolerances = DEFAULT) -> None:
    """Raise ``ValueError`` unless ``cov`` is symmetric and satisfies ``V + i Omega >= 0``."""
    if cov.size == 0:
        return
    asym = np.max(np.abs(cov - cov.T))
    if asym > tol.symmetry * max(1.0, np.max(np.abs(cov))):
        raise ValueError(f"covariance is not symmetric (max asymmetry {asym:.3g})")
    n = cov.shape[0] // 2
    herm = 0.5 * (cov + cov.T) + 1j * omega(n)
    lowest = np.linalg.eigvalsh(herm)[0]
    if lowest < -tol.physicality * max(1.0, np.max(np.abs(cov))):
        raise ValueError(f"covariance violates the uncertainty principle (eigenvalue {lowest:.3g})")


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a positive-definite covariance, sorted descending."""
    n = cov.shape[0] // 2
    if n == 0:
        return np.zeros(0)
    w, q = np.linalg.eigh(0.5 * (cov + cov.T))
    if w[0] <= 0:
        raise ValueError("covariance is not positive definite")
    root = (q * np.sqrt(w)) @ q.T
    nu = np.linalg.eigvalsh(1j * (root @ omega(n) @ root))
    # eigenvalues come in +-nu pairs; eigvalsh sorts ascending
    return np.sort(nu[n:])[::-1]


# ---------------------------------------------------------------------------
# checks on transforms

def symplectic_residual(s: np.ndarray) -> float:
    n = s.shape[0] // 2
    om = omega(n)
    return float(np.max(np.abs(s @ om @ s.T - om)))


def is_symplectic(s: np.ndarray, tol: float = DEFAULT.symplectic) -> bool:
    s = np.asarray(s)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
        return False
    return symplectic_residual(s) < tol * max(1.0, np.max(np.abs(s)) ** 2)


def unitary_residual(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def is_unitary(u: np.ndarray, tol: float = DEFAULT.unitary) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return unitary_residual(u) < tol


def is_orthogonal(o: np.ndarray, tol: float = DEFAULT.symplectic) -> bool:
    o = np.asarray(o)
    return float(np.max(np.abs(o.T @ o - np.eye(o.shape[0])))) < tol


# ---------------------------------------------------------------------------
# states

def vacuum(n: int) -> GaussianState:
    if n < 1:
        raise ValueError("n must be >= 1")
    return GaussianState(np.eye(2 * n), check=False)


def db_to_r(squeezing_db: float) -> float:
    """Squeezing parameter for a quadrature variance ``10**(-dB/10)`` below vacuum."""
    return squeezing_db * np.log(10.0) / 20.0


def r_to_db(r: float) -> float:
    return r * 20.0 / np.log(10.0)


def squeeze_transform(r: Sequence[float]) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if not np.all(np.isfinite(r)):
        raise ValueError("squeezing parameters must be finite")
    return np.diag(np.concatenate([np.exp(-r), np.exp(r)]))


def squeezed_vacuum(r: Sequence[float]) -> GaussianState:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if not np.all(np.isfinite(r)):
        raise ValueError("squeezing parameters must be finite")
    return GaussianState(np.diag(np.concatenate([np.exp(-2 * r), np.exp(2 * r)])), check=False)


# ---------------------------------------------------------------------------
# transforms

def passive_to_symplectic(u: np.ndarray, tol: float = DEFAULT.unitary) -> np.ndarray:
    """Orthogonal symplectic matrix ``[[Re U, -Im U], [Im U, Re U]]``."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol):
        raise ValueError("matrix is not unitary")
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def symplectic_to_passive(o: np.ndarray, tol: float = DEFAULT.symplectic) -> np.ndarray:
    """Inverse of :func:`passive_to_symplectic`.

    Raises ``ValueError`` if ``o`` lacks the passive block structure or is not
    orthogonal and symplectic.
    """
    o = np.asarray(o, dtype=float)
    if o.ndim != 2 or o.shape[0] != o.shape[1] or o.shape[0] % 2:
        raise ValueError("expected a square matrix of even size")
    n = o.shape[0] // 2
    x, y = o[:n, :n], o[n:, :n]
    if np.max(np.abs(o[n:, n:] - x)) > tol or np.max(np.abs(o[:n, n:] + y)) > tol:
        raise ValueError("matrix does not have the passive [[X, -Y], [Y, X]] structure")
    if not (is_orthogonal(o, tol) and is_symplectic(o, tol)):
        raise ValueError("matrix is not orthogonal and symplectic")
    return x + 1j * y


def _embed_passive(n: int, modes: Sequence[int], u: np.ndarray) -> np.ndarray:
    s = np.eye(2 * n)
    idx = np.asarray(modes)
    pidx = idx + n
    s[np.ix_(idx, idx)] = u.real
    s[np.ix_(pidx, pidx)] = u.real
    s[np.ix_(idx, pidx)] = -u.imag
    s[np.ix_(pidx, idx)] = u.imag
    return s


def _check_mode(n: int, *modes: int) -> None:
    for k in modes:
        if not 0 <= k < n:
            raise IndexError(f"mode {k} out of range for {n} modes")


def beamsplitter_matrix(transmissivity: float, phase: float = 0.0) -> np.ndarray:
    """2x2 transfer matrix on annihilation operators."""
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError("transmissivity must lie in [0, 1]")
    t = np.sqrt(transmissivity)
    r = np.sqrt(1.0 - transmissivity)
    return np.array([[t, np.exp(1j * phase) * r], [-np.exp(-1j * phase) * r, t]])


def beamsplitter(n: int, i: int, j: int, transmissivity: float, phase: float = 0.0) -> np.ndarray:
    _check_mode(n, i, j)
    if i == j:
        raise ValueError("beamsplitter needs two distinct modes")
    return _embed_passive(n, [i, j], beamsplitter_matrix(transmissivity, phase))


def phase_shift(n: int, i: int, phi: float) -> np.ndarray:
    _check_mode(n, i)
    return _embed_passive(n, [i], np.array([[np.exp(1j * phi)]]))


def apply(s: np.ndarray, state: GaussianState) -> GaussianState:
    s = np.asarray(s, dtype=float)
    if s.shape != state.cov.shape:
        raise ValueError(f"transform shape {s.shape} does not match state {state.cov.shape}")
    cov = s @ state.cov @ s.T
    return GaussianState(0.5 * (cov + cov.T), labels=state.labels, check=False)


def _xxpp_index(n_modes: int, modes: Sequence[int]) -> np.ndarray:
    modes = np.asarray(modes, dtype=int)
    return np.concatenate([modes, modes + n_modes])


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    """Direct sum of two states, modes of ``a`` first."""
    na, nb = a.n_modes, b.n_modes
    n = na + nb
    cov = np.zeros((2 * n, 2 * n))
    ia = _xxpp_index(n, range(na))
    ib = _xxpp_index(n, range(na, n))
    cov[np.ix_(ia, ia)] = a.cov
    cov[np.ix_(ib, ib)] = b.cov
    labels = None
    if a.labels is not None and b.labels is not None:
        labels = a.labels + b.labels
    return GaussianState(cov, labels=labels, check=False)


def permute(state: GaussianState, order: Sequence[int]) -> GaussianState:
    """Reorder modes so that new mode ``k`` is old mode ``order[k]``."""
    order = list(order)
    if sorted(order) != list(range(state.n_modes)):
        raise ValueError("order must be a permutation of the mode indices")
    idx = _xxpp_index(state.n_modes, order)
    labels = None if state.labels is None else tuple(state.labels[k] for k in order)
    return GaussianState(state.cov[np.ix_(idx, idx)], labels=labels, check=False)


def reduce(state: GaussianState, modes: Sequence[int]) -> GaussianState:
    """Marginal state on ``modes`` (partial trace over the rest)."""
    idx = _xxpp_index(state.n_modes, modes)
    labels = None if state.labels is None else tuple(state.labels[k] for k in modes)
    return GaussianState(state.cov[np.ix_(idx, idx)], labels=labels, check=False)


def loss_channel(state: GaussianState, eta) -> GaussianState:
    """Pure-loss channel with per-mode efficiency ``eta`` (scalar or length N)."""
    n = state.n_modes
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (n,))
    if np.any(eta < 0) or np.any(eta > 1):
        raise ValueError("efficiencies must lie in [0, 1]")
    g = np.sqrt(np.concatenate([eta, eta]))
    cov = g[:, None] * state.cov * g[None, :] + np.diag(np.concatenate([1 - eta, 1 - eta]))
    return GaussianState(cov, labels=state.labels, check=False)


def pure_overlap(a: GaussianState, b: GaussianState, tol: float = DEFAULT.purity) -> float:
    """Fidelity ``|<a|b>|^2 = 2^N / sqrt(det(V_a + V_b))`` of two pure zero-mean states."""
    if a.n_modes != b.n_modes:
        raise ValueError("states have different mode numbers")
    for s in (a, b):
        if not s.is_pure(tol):
            raise ValueError(f"state is not pure (residual {s.purity_residual():.3g})")
    return overlap_from_covs(a.cov, b.cov)


def overlap_from_covs(va: np.ndarray, vb: np.ndarray) -> float:
    """Unchecked kernel of :func:`pure_overlap`; works on stacks of matrices."""
    n = va.shape[-1] // 2
    sign, logdet = np.linalg.slogdet(va + vb)
    return np.exp(n * np.log(2.0) - 0.5 * logdet)


# ---------------------------------------------------------------------------
# structured updates for large states

def _mix_rows(m: np.ndarray, n: int, i: np.ndarray, j: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = m.copy()
    xi, xj, pi, pj = m[i], m[j], m[i + n], m[j + n]
    (a, c), (d, e) = b
    out[i] = a.real * xi - a.imag * pi + c.real * xj - c.imag * pj
    out[i + n] = a.imag * xi + a.real * pi + c.imag * xj + c.real * pj
    out[j] = d.real * xi - d.imag * pi + e.real * xj - e.imag * pj
    out[j + n] = d.imag * xi + d.real * pi + e.imag * xj + e.real * pj
    return out


def apply_pairwise(state: GaussianState, first: Sequence[int], second: Sequence[int],
                   transfer: np.ndarray) -> GaussianState:
    """Apply the same 2x2 passive transfer matrix to disjoint mode pairs.

    Equivalent to composing one :func:`beamsplitter` per pair, in O(N^2).
    """
    i = np.asarray(first, dtype=int)
    j = np.asarray(second, dtype=int)
    n = state.n_modes
    if len(i) != len(j):
        raise ValueError("pair lists differ in length")
    if len(i) == 0:
        return state
    used = np.concatenate([i, j])
    if len(np.unique(used)) != len(used):
        raise ValueError("mode pairs must be disjoint")
    _check_mode(n, int(used.min()), int(used.max()))
    b = np.asarray(transfer, dtype=complex)
    half = _mix_rows(state.cov, n, i, j, b)
    cov = _mix_rows(half.T, n, i, j, b)
    return GaussianState(0.5 * (cov + cov.T), labels=state.labels, check=False)


def apply_phases(state: GaussianState, phases) -> GaussianState:
    """Rotate every mode ``k`` by ``phases[k]``."""
    n = state.n_modes
    phases = np.broadcast_to(np.asarray(phases, dtype=float), (n,))
    if not np.any(phases):
        return state
    c, s = np.cos(phases), np.sin(phases)
    cc = np.concatenate([c, c])
    ss = np.concatenate([s, s])
    v = state.cov
    # x' = c x - s p, p' = s x + c p, applied to rows then columns
    swap = np.concatenate([np.arange(n, 2 * n), np.arange(n)])
    sign = np.concatenate([-np.ones(n), np.ones(n)])
    left = cc[:, None] * v + (sign * ss)[:, None] * v[swap]
    cov = left * cc[None, :] + left[:, swap] * (sign * ss)[None, :]
    return GaussianState(0.5 * (cov + cov.T), labels=state.labels, check=False)
