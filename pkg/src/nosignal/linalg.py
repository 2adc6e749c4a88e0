"""Dense complex matrices and kets on top of numpy.

Matrices are plain square ``complex128`` arrays. Tensor factors are ordered
with Alice's subsystem first (leftmost), so ``tensor(|0><0|, I)`` acts on
Alice's qubit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-12


class DimensionError(ValueError):
    pass


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_vector(v) -> np.ndarray:
    x = np.asarray(v, dtype=np.complex128)
    if x.ndim != 1 or x.size == 0:
        raise DimensionError(f"expected a non-empty vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized amplitude vector; the norm is checked on construction."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = as_vector(self.amplitudes)
        n = norm2(amps)
        if abs(n - 1.0) > DEFAULT_TOL:
            raise ValueError(f"ket is not normalized (norm^2 = {n!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def normalized(cls, v) -> "Ket":
        v = as_vector(v)
        n = np.sqrt(norm2(v))
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(v / n)

    @classmethod
    def basis(cls, index: int, dim: int = 2) -> "Ket":
        v = np.zeros(dim, dtype=np.complex128)
        v[index] = 1.0
        return cls(v)

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)


def _vec(v) -> np.ndarray:
    return v.amplitudes if isinstance(v, Ket) else as_vector(v)


def tensor(a, b):
    """Kronecker product; entry (i*db + k, j*db + l) = a(i, j) b(k, l).

    Works for two matrices or two kets (a ket result is returned as a Ket).
    """
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amplitudes, b.amplitudes))
    return np.kron(as_matrix(a), as_matrix(b))


def tensor_all(factors) -> np.ndarray:
    factors = list(factors)
    if not factors:
        raise ValueError("need at least one factor")
    out = factors[0]
    for f in factors[1:]:
        out = tensor(out, f)
    return out


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def _check_same(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f"{what}: dimension mismatch {a.shape} vs {b.shape}")


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same(a, b, "matmul")
    return a @ b


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def apply(a, v) -> np.ndarray:
    """Matrix times an (unnormalized) vector."""
    a, x = as_matrix(a), _vec(v)
    _check_same(a, x, "apply")
    return a @ x


def inner(u, v) -> complex:
    """<u|v>, conjugate-linear in the first argument."""
    x, y = _vec(u), _vec(v)
    if x.shape != y.shape:
        raise DimensionError(f"inner: dimension mismatch {x.shape} vs {y.shape}")
    return complex(np.vdot(x, y))


def norm2(v) -> float:
    x = _vec(v)
    return float(np.real(np.vdot(x, x)))


def approx_eq(a, b, tol: float = DEFAULT_TOL) -> bool:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"approx_eq: dimension mismatch {a.shape} vs {b.shape}")
    return bool(np.max(np.abs(a - b)) <= tol)


def ket_bra(u, v) -> np.ndarray:
    """Outer product |u><v|."""
    return np.outer(_vec(u), _vec(v).conj())


PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)
for _m in (PAULI_X, PAULI_Y, PAULI_Z, IDENTITY_2):
    _m.setflags(write=False)
