"""Density operators and the fixed states used throughout the package.

Two-qubit basis order is |00>, |01>, |10>, |11> with Alice's bit most
significant, so the Bell amplitudes sit at indices 0 and 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import DEFAULT_TOL, DimensionError, Ket, as_matrix, ket_bra, tensor

DEFAULT_TENSOR_CAP = 12
_N_PROBES = 100
_PROBE_SEED = 20240917


@lru_cache(maxsize=16)
def _probes(dim: int) -> tuple[np.ndarray, np.ndarray]:
    g = np.random.default_rng([_PROBE_SEED, dim])
    p = g.normal(size=(_N_PROBES, dim)) + 1j * g.normal(size=(_N_PROBES, dim))
    p /= np.sqrt(np.einsum("ki,ki->k", p.conj(), p).real)[:, None]
    p.setflags(write=False)
    return p, p.conj()


def density_violations(mat: np.ndarray, tol: float = DEFAULT_TOL) -> dict[str, float]:
    """Residuals for each density-operator condition that fails at ``tol``."""
    bad = {}
    herm = float(np.max(np.abs(mat - mat.conj().T)))
    if herm > tol:
        bad["hermitian"] = herm
    tr = abs(complex(np.trace(mat)) - 1.0)
    if tr > tol:
        bad["trace"] = tr
    p, pc = _probes(mat.shape[0])
    expect = ((pc @ mat) * p).sum(axis=1).real
    if expect.min() < -tol:
        bad["positivity"] = float(-expect.min())
    return bad


@dataclass(frozen=True, eq=False)
class DensityOperator:
    mat: np.ndarray
    subsystems: int = 0

    def __post_init__(self):
        m = as_matrix(self.mat).copy()
        bad = density_violations(m)
        if bad:
            raise ValueError(f"not a density operator: {bad}")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        if self.subsystems <= 0:
            d = m.shape[0]
            n = d.bit_length() - 1 if d & (d - 1) == 0 else 1
            object.__setattr__(self, "subsystems", max(n, 1))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


def pure_density(psi: Ket) -> DensityOperator:
    if not isinstance(psi, Ket):
        psi = Ket(psi)
    return DensityOperator(ket_bra(psi, psi))


def maximally_mixed() -> DensityOperator:
    return DensityOperator(np.eye(2, dtype=np.complex128) / 2)


def bernoulli_state(p: float) -> DensityOperator:
    """diag(p, 1 - p): outcome 0 of a computational measurement has probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return DensityOperator(np.diag([p, 1.0 - p]).astype(np.complex128))


def bell_state() -> Ket:
    """(|00> + |11>) / sqrt(2)."""
    s = np.sqrt(0.5)  # correctly rounded 1/sqrt(2)
    return Ket(np.array([s, 0, 0, s], dtype=np.complex128))


def tensor_power(rho: DensityOperator, n: int, cap: int = DEFAULT_TENSOR_CAP) -> DensityOperator:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n * rho.subsystems > cap:
        raise ValueError(f"tensor power exceeds the cap of {cap} qubits ({n} x {rho.subsystems})")
    out = rho.mat
    for _ in range(n - 1):
        out = tensor(out, rho.mat)
    return DensityOperator(out, subsystems=n * rho.subsystems)


def partial_trace(rho: DensityOperator, keep: str = "A") -> DensityOperator:
    """Reduce a two-qubit state to one side; ``keep`` is "A" (Alice) or "B" (Bob)."""
    if rho.dim != 4:
        raise DimensionError(f"partial_trace needs a 4-dim bipartite state, got dim {rho.dim}")
    t = rho.mat.reshape(2, 2, 2, 2)  # (a, b, a', b')
    if keep == "A":
        red = np.einsum("ibjb->ij", t)
    elif keep == "B":
        red = np.einsum("aiaj->ij", t)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return DensityOperator(red)
