"""Numerical tolerances used across the package.

Every check in the library reads its threshold from :data:`DEFAULT`; pass a
modified :class:`Tolerances` where a function accepts ``tol`` to override.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    symmetry: float = 1e-12
    physicality: float = 1e-9
    symplectic: float = 1e-10
    unitary: float = 1e-10
    purity: float = 1e-6
    williamson_floor: float = 1e-7
    decomposition: float = 1e-8
    effective_purity: float = 1e-3
    homodyne_pinv: float = 1e-12
    degenerate_squeezing: float = 1e-9
    overlap_equal: float = 1e-9
    histogram_norm: float = 1e-12

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **changes)


DEFAULT = Tolerances()
