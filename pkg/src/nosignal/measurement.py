"""Measurement families, Born-rule probabilities, collapse and sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as _cartesian

import numpy as np

from . import rng
from .linalg import DEFAULT_TOL, IDENTITY_2, DimensionError, Ket, PAULI_X, PAULI_Y, PAULI_Z, as_matrix, tensor
from .states import DEFAULT_TENSOR_CAP, DensityOperator

PROJECTIVE = "projective"
GENERAL = "general"


class InvalidFamilyError(ValueError):
    pass


@dataclass(frozen=True)
class ValidationReport:
    """Residuals of violated conditions; empty means the family is valid."""

    violations: dict[str, float] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """Ordered, labeled measurement operators.

    ``kind`` is ``"projective"`` (Hermitian, idempotent, mutually orthogonal
    projectors summing to I) or ``"general"`` (Kraus operators with
    sum M^dagger M = I). Construction raises ``InvalidFamilyError`` unless
    ``check=False``.
    """

    labels: tuple[str, ...]
    operators: tuple[np.ndarray, ...]
    kind: str = GENERAL
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        ops = tuple(as_matrix(op).copy() for op in self.operators)
        if len(labels) != len(ops) or not ops:
            raise InvalidFamilyError("need one label per operator and at least one operator")
        if len(set(labels)) != len(labels):
            raise InvalidFamilyError(f"duplicate labels: {labels}")
        if self.kind not in (PROJECTIVE, GENERAL):
            raise InvalidFamilyError(f"unknown kind {self.kind!r}")
        for op in ops:
            if op.shape != ops[0].shape:
                raise InvalidFamilyError("operators must share one dimension")
            op.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "operators", ops)
        if self.check:
            report = validate_family(self)
            if not report.valid:
                raise InvalidFamilyError(f"invalid measurement family: {report.violations}")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def index(self, outcome) -> int:
        if outcome in self.labels:
            return self.labels.index(outcome)
        if str(outcome) in self.labels:
            return self.labels.index(str(outcome))
        raise KeyError(f"unknown outcome {outcome!r}; labels are {self.labels}")

    def effects(self) -> np.ndarray:
        """Stacked POVM elements M_k^dagger M_k."""
        ops = np.stack(self.operators)
        return np.conj(np.swapaxes(ops, 1, 2)) @ ops


def validate_family(f: MeasurementFamily, tol: float = DEFAULT_TOL) -> ValidationReport:
    bad: dict[str, float] = {}
    ident = np.eye(f.dim)
    resid = float(np.max(np.abs(f.effects().sum(axis=0) - ident)))
    if resid > tol:
        bad["completeness"] = resid
    if f.kind == PROJECTIVE:
        herm = max(float(np.max(np.abs(p - p.conj().T))) for p in f.operators)
        idem = max(float(np.max(np.abs(p @ p - p))) for p in f.operators)
        orth = 0.0
        for i, p in enumerate(f.operators):
            for j, q in enumerate(f.operators):
                if i != j:
                    orth = max(orth, float(np.max(np.abs(p @ q))))
        for name, r in (("hermitian", herm), ("idempotent", idem), ("orthogonal", orth)):
            if r > tol:
                bad[name] = r
    return ValidationReport(bad)


def computational_family(dim: int = 2) -> MeasurementFamily:
    ops = []
    for k in range(dim):
        p = np.zeros((dim, dim), dtype=np.complex128)
        p[k, k] = 1.0
        ops.append(p)
    return MeasurementFamily(tuple(str(k) for k in range(dim)), tuple(ops), PROJECTIVE)


def spin_projectors(axis) -> tuple[np.ndarray, np.ndarray]:
    """(I + n.sigma)/2 and (I - n.sigma)/2 for a unit axis n."""
    n = np.asarray(axis, dtype=float)
    length = np.linalg.norm(n)
    if abs(length - 1.0) > 1e-9:
        raise ValueError(f"axis must be a unit vector, |n| = {length}")
    s = n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z
    return (IDENTITY_2 + s) / 2, (IDENTITY_2 - s) / 2


def spin_axis_family(axis) -> MeasurementFamily:
    """Projective spin measurement along ``axis``; label "0" is the +axis outcome."""
    plus, minus = spin_projectors(axis)
    return MeasurementFamily(("0", "1"), (plus, minus), PROJECTIVE)


def lift(f: MeasurementFamily, side: str) -> MeasurementFamily:
    """Embed a one-qubit family into the two-qubit space.

    ``side="B"`` gives I (x) M (Bob acts), ``side="A"`` gives M (x) I.
    """
    if side == "A":
        ops = tuple(tensor(op, np.eye(2)) for op in f.operators)
    elif side == "B":
        ops = tuple(tensor(np.eye(2), op) for op in f.operators)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return MeasurementFamily(f.labels, ops, f.kind)


def _rho_matrix(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityOperator) else as_matrix(rho)


def outcome_probabilities(rho, f: MeasurementFamily) -> np.ndarray:
    """Born rule: entry k is Tr(rho M_k^dagger M_k), tiny negatives clamped to 0."""
    m = _rho_matrix(rho)
    if m.shape[0] != f.dim:
        raise DimensionError(f"state dim {m.shape[0]} does not match family dim {f.dim}")
    if f.kind == PROJECTIVE:
        p = np.array([np.trace(m @ op).real for op in f.operators])
    else:
        p = np.einsum("ij,kji->k", m, f.effects()).real
    if p.min() < -1e-12 or p.max() > 1 + 1e-12:
        raise ValueError(f"probabilities out of range: {p}")
    return np.clip(p, 0.0, None)


def collapse(psi: Ket, f: MeasurementFamily, outcome) -> Ket:
    """Post-measurement ket M_k|psi> / ||M_k|psi>||."""
    k = f.index(outcome)
    v = f.operators[k] @ np.asarray(psi, dtype=np.complex128)
    p = float(np.vdot(v, v).real)
    if p <= 1e-12:
        raise ValueError(f"collapse onto null branch (outcome {f.labels[k]!r} has probability {p:.3g})")
    return Ket(v / np.sqrt(p))


def collapse_density(rho, f: MeasurementFamily, outcome) -> DensityOperator:
    """M_k rho M_k^dagger / Tr(rho M_k^dagger M_k)."""
    k = f.index(outcome)
    m = _rho_matrix(rho)
    op = f.operators[k]
    out = op @ m @ op.conj().T
    p = float(np.trace(out).real)
    if p <= 1e-12:
        raise ValueError(f"collapse onto null branch (outcome {f.labels[k]!r} has probability {p:.3g})")
    return DensityOperator(out / p)


def compose_sequential(first: MeasurementFamily, second: MeasurementFamily) -> MeasurementFamily:
    """Measuring ``first`` then ``second`` as one family: N_{lm} = M_m L_l, label l+m."""
    if first.dim != second.dim:
        raise DimensionError(f"cannot compose families of dim {first.dim} and {second.dim}")
    labels, ops = [], []
    for l_lab, l_op in zip(first.labels, first.operators):
        for m_lab, m_op in zip(second.labels, second.operators):
            labels.append(l_lab + m_lab)
            ops.append(m_op @ l_op)
    return MeasurementFamily(tuple(labels), tuple(ops), GENERAL)


def product_family(families, cap: int = DEFAULT_TENSOR_CAP) -> MeasurementFamily:
    """Tensor product family over label tuples; labels are concatenated."""
    families = list(families)
    if not families:
        raise ValueError("need at least one family")
    qubits = sum(int(np.log2(f.dim)) for f in families)
    if qubits > cap:
        raise ValueError(f"product family needs {qubits} qubits, over the cap of {cap}")
    kind = PROJECTIVE if all(f.kind == PROJECTIVE for f in families) else GENERAL
    labels, ops = [], []
    for combo in _cartesian(*[range(len(f)) for f in families]):
        labels.append("".join(f.labels[i] for f, i in zip(families, combo)))
        op = families[0].operators[combo[0]]
        for f, i in zip(families[1:], combo[1:]):
            op = np.kron(op, f.operators[i])
        ops.append(op)
    return MeasurementFamily(tuple(labels), tuple(ops), kind)


def string_probability(rho, f: MeasurementFamily, x) -> float:
    """Probability of the outcome string ``x`` from i.i.d. copies of ``rho``.

    The product runs over exactly the len(x) symbols of the string.
    """
    p = outcome_probabilities(rho, f)
    out = 1.0
    for sym in _symbols(x):
        out *= p[f.index(sym)]
    return float(out)


def _symbols(x):
    if isinstance(x, str):
        return list(x)
    return [str(int(b)) for b in np.asarray(x).ravel()]


def sample_outcomes(rho, f: MeasurementFamily, shots: int, seed: int) -> np.ndarray:
    """Inverse-CDF draws of outcome indices into ``f.labels``.

    For the computational family the indices are the measured bits.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = outcome_probabilities(rho, f)
    cdf = np.cumsum(p / p.sum())
    u = rng.uniform(seed, rng.SAMPLING, 0, np.arange(shots))
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, len(p) - 1)
    dtype = np.uint8 if len(p) <= 256 else np.int64
    return idx.astype(dtype)
