"""Williamson and Bloch-Messiah decompositions, and the effective circuit
(passive unitary plus input squeezing) that prepares a pure Gaussian state
from vacuum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symplectic import (
    GaussianState,
    apply,
    is_symplectic,
    omega,
    passive_to_symplectic,
    squeeze_transform,
    symplectic_to_passive,
    vacuum,
)
from .tolerances import DEFAULT, Tolerances

GAUGE_VERSION = "colphase-maxabs-v1"


class DecompositionError(RuntimeError):
    """A decomposition precondition failed on numerical grounds."""


class ImpureStateError(DecompositionError):
    pass


def _sym_sqrt(v: np.ndarray):
    w, q = np.linalg.eigh(0.5 * (v + v.T))
    if w[0] <= 0:
        raise DecompositionError("matrix is not positive definite")
    root = (q * np.sqrt(w)) @ q.T
    return root, w, q


def _complex_structure_basis(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For a real antisymmetric ``m`` with eigenvalues ``+-i*lam``, return
    ``(lam, K)`` with ``K`` orthogonal and ``K.T @ m @ K = [[0, L], [-L, 0]]``,
    ``L = diag(lam)``, ``lam`` ascending.
    """
    n = m.shape[0] // 2
    lam, vec = np.linalg.eigh(1j * m)
    lam, vec = lam[n:], vec[:, n:]
    a = np.sqrt(2.0) * vec.real
    b = np.sqrt(2.0) * vec.imag
    # m a = lam b and m b = -lam a; ordering (b, a) yields +Omega blocks
    return lam, np.hstack([b, a])


def williamson(v: np.ndarray, tol: Tolerances = DEFAULT):
    """Return ``(S, nu)`` with ``V = S (diag(nu) + diag(nu)) S^T``.

    ``S`` is symplectic and ``nu`` is sorted in descending order.
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[0] // 2
    root, w, q = _sym_sqrt(v)
    inv_root = (q / np.sqrt(w)) @ q.T
    lam, k = _complex_structure_basis(inv_root @ omega(n) @ inv_root)
    # lam = 1/nu ascending, so nu comes out descending
    nu = 1.0 / lam
    scale = np.concatenate([1.0 / np.sqrt(nu), 1.0 / np.sqrt(nu)])
    s = (root @ k) * scale
    return s, nu


def _lagrangian_basis(kernel: np.ndarray) -> np.ndarray:
    """Orthonormal vectors ``u`` spanning half of an Omega-invariant subspace,
    chosen so that every ``Omega u`` is orthogonal to every ``u``."""
    if kernel.shape[1] == 0:
        return kernel
    n = kernel.shape[0] // 2
    restricted = kernel.T @ omega(n) @ kernel
    restricted = 0.5 * (restricted - restricted.T)
    _, basis = _complex_structure_basis(restricted)
    half = kernel.shape[1] // 2
    return kernel @ basis[:, half:]


def _nearest_unitary(u: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def orthosymplectic_diagonalize(p: np.ndarray, tol: Tolerances = DEFAULT):
    """Diagonalize a symmetric positive-definite symplectic matrix.

    Returns ``(g, Q)`` with ``Q`` orthogonal-symplectic, ``g >= 0`` descending and
    ``P = Q diag(exp(-g), exp(g)) Q^T``.
    """
    p = 0.5 * (p + p.T)
    n = p.shape[0] // 2
    w, e = np.linalg.eigh(p)
    logs = np.log(np.clip(w, np.finfo(float).tiny, None))
    cut = max(tol.degenerate_squeezing, 1e-12)
    neg = np.flatnonzero(logs < -cut)
    flat = np.flatnonzero(np.abs(logs) <= cut)
    if len(neg) > n or len(neg) + len(flat) // 2 != n or len(flat) % 2:
        raise DecompositionError("matrix spectrum is not symplectic")
    # eigh is ascending: most squeezed directions first
    u = np.hstack([e[:, neg], _lagrangian_basis(e[:, flat])])
    unit = _nearest_unitary(u[:n] + 1j * u[n:])
    q = np.block([[unit.real, -unit.imag], [unit.imag, unit.real]])
    diag = np.einsum("ij,ij->j", q[:, :n], p @ q[:, :n])
    g = -np.log(diag)
    g = np.where(np.arange(n) < len(neg), g, np.abs(g))
    order = np.argsort(-g, kind="stable")
    q = np.hstack([q[:, :n][:, order], q[:, n:][:, order]])
    return g[order], q


def bloch_messiah(s: np.ndarray, tol: Tolerances = DEFAULT):
    """Factor a symplectic matrix as ``S = O1 diag(e^-r, e^r) O2``.

    ``O1`` and ``O2`` are orthogonal-symplectic and ``r >= 0`` is sorted in
    descending order. When ``S`` is itself passive the split between ``O1``
    and ``O2`` is a gauge choice; here ``O1 = S`` and ``O2 = I``.
    """
    s = np.asarray(s, dtype=float)
    if not is_symplectic(s, 1e-8):
        raise ValueError("matrix is not symplectic")
    n = s.shape[0] // 2
    g, q = orthosymplectic_diagonalize(s @ s.T, tol)
    r = 0.5 * g
    # S S^T = O1 D^2 O1^T with O1 = Q, so O2 = D^-1 Q^T S
    o1 = q
    o2 = (np.concatenate([np.exp(r), np.exp(-r)])[:, None]) * (q.T @ s)
    return o1, r, o2


@dataclass(frozen=True)
class EffectiveCircuit:
    """Passive unitary ``u_eff`` applied after single-mode squeezers ``r_eff``."""

    u_eff: np.ndarray
    r_eff: np.ndarray
    purity_residual: float

    @property
    def n_modes(self) -> int:
        return len(self.r_eff)

    def to_dict(self) -> dict:
        return {
            "gauge": GAUGE_VERSION,
            "n_modes": self.n_modes,
            "u_eff_real": self.u_eff.real.tolist(),
            "u_eff_imag": self.u_eff.imag.tolist(),
            "r_eff": self.r_eff.tolist(),
            "purity_residual": self.purity_residual,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EffectiveCircuit":
        u = np.asarray(data["u_eff_real"]) + 1j * np.asarray(data["u_eff_imag"])
        return cls(u, np.asarray(data["r_eff"], dtype=float), float(data["purity_residual"]))


def canonicalize_gauge(u: np.ndarray, r: np.ndarray, tol: float = DEFAULT.degenerate_squeezing):
    """Fix column signs/phases and the column order inside degenerate squeezing groups.

    A column phase only commutes with the squeezer when it is +-1, or when the
    column carries no squeezing. Squeezed columns are therefore flipped so the
    largest-magnitude entry has positive real part; unsqueezed columns get the
    full phase that makes that entry real positive.
    """
    u = np.array(u, dtype=complex, copy=True)
    r = np.asarray(r, dtype=float)
    cols = np.arange(u.shape[1])
    peak = np.argmax(np.abs(u), axis=0)
    ph = u[peak, cols]
    full = np.abs(ph) / np.where(ph == 0, 1, ph)
    sign = np.where(ph.real < 0, -1.0, 1.0)
    u = u * np.where(np.abs(r) < tol, full, sign)[None, :]

    order = list(range(len(r)))
    start = 0
    while start < len(r):
        stop = start + 1
        while stop < len(r) and abs(r[stop - 1] - r[stop]) < tol:
            stop += 1
        if stop - start > 1:
            group = order[start:stop]
            keyed = sorted(group, key=lambda c: tuple(np.round(np.abs(u[:, c]), 9)), reverse=True)
            order[start:stop] = keyed
        start = stop
    return u[:, order], np.asarray(r)[order]


def effective_circuit(state: GaussianState, tol: Tolerances = DEFAULT) -> EffectiveCircuit:
    """Decompose a (near-)pure state as ``L(u_eff) S(r_eff) |0>``."""
    s, nu = williamson(state.cov, tol)
    residual = float(np.max(np.abs(nu - 1.0))) if len(nu) else 0.0
    if residual >= tol.effective_purity:
        raise ImpureStateError(f"state is not pure enough (residual {residual:.3g})")
    o1, r, _ = bloch_messiah(s, tol)
    u = symplectic_to_passive(o1, 1e-8)
    u, r = canonicalize_gauge(u, r, tol.degenerate_squeezing)
    return EffectiveCircuit(u, r, residual)


def reconstruct(circuit: EffectiveCircuit) -> GaussianState:
    n = circuit.n_modes
    s = passive_to_symplectic(circuit.u_eff, 1e-8) @ squeeze_transform(circuit.r_eff)
    return apply(s, vacuum(n))
