"""Alice's statistics on a shared Bell pair after arbitrary measurements by Bob."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from .linalg import IDENTITY_2, Ket, tensor
from .measurement import (
    GENERAL,
    MeasurementFamily,
    collapse,
    compose_sequential,
    computational_family,
    lift,
    outcome_probabilities,
    spin_axis_family,
)
from .states import DensityOperator, bell_state, partial_trace, pure_density

SPIN_AXIS = "spin-axis"
GENERAL_KRAUS = "general-kraus"
NULL_BRANCH = 1e-12
AGREEMENT_TOL = 1e-12

_BELL = bell_state()
_BELL_RHO = pure_density(_BELL)
_ALICE = lift(computational_family(), "A")


def alice_family() -> MeasurementFamily:
    """Alice's computational-basis measurement {|0><0| (x) I, |1><1| (x) I}."""
    return _ALICE


@dataclass(frozen=True, eq=False)
class BobFamily:
    base: MeasurementFamily
    lifted: MeasurementFamily = field(init=False)
    name: str = "custom"

    def __post_init__(self):
        if self.base.dim != 2:
            raise ValueError(f"Bob's family must act on one qubit, got dim {self.base.dim}")
        object.__setattr__(self, "lifted", lift(self.base, "B"))

    @property
    def labels(self) -> tuple[str, ...]:
        return self.base.labels


@dataclass(frozen=True)
class NoSignalReport:
    family: str
    bob_probabilities: dict[str, float]
    p0_given: dict[str, float | None]
    p1_given: dict[str, float | None]
    p0_marginal: float
    p1_marginal: float

    @property
    def deviation(self) -> float:
        return abs(self.p0_marginal - 0.5)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["deviation"] = self.deviation
        return d


def bob_probabilities(bob: BobFamily) -> np.ndarray:
    """<psi| I (x) M_k^dagger M_k |psi> for each of Bob's outcomes."""
    return outcome_probabilities(_BELL_RHO, bob.lifted)


def _closed_form(bob: BobFamily, alice_outcome: int, k: int, p_bob: float) -> float:
    # <a| M^dagger M |a> / (2 ||(I (x) M)|psi>||^2)
    m = bob.base.operators[k]
    e = m.conj().T @ m
    return float(e[alice_outcome, alice_outcome].real) / (2.0 * p_bob)


def _branch(bob: BobFamily, k: int, p_bob: float) -> np.ndarray:
    """Alice's (P(0|k), P(1|k)) by collapse, checked against the closed form."""
    post = collapse(_BELL, bob.lifted, bob.labels[k])
    via_collapse = outcome_probabilities(pure_density(post), _ALICE)
    for a in (0, 1):
        via_formula = _closed_form(bob, a, k, p_bob)
        if abs(via_collapse[a] - via_formula) > AGREEMENT_TOL:
            raise ArithmeticError(
                f"conditional routes disagree: collapse {via_collapse[a]!r} vs closed form {via_formula!r}"
            )
    return via_collapse


def alice_conditional(bob: BobFamily, alice_outcome: int, bob_outcome) -> float:
    """P(Alice sees ``alice_outcome`` | Bob saw ``bob_outcome``).

    Computed by collapsing the Bell state on Bob's branch and measuring Alice,
    and cross-checked against the closed form.
    """
    if alice_outcome not in (0, 1):
        raise ValueError(f"alice_outcome must be 0 or 1, got {alice_outcome!r}")
    k = bob.base.index(bob_outcome)
    p_bob = float(bob_probabilities(bob)[k])
    if p_bob <= NULL_BRANCH:
        raise ValueError(f"Bob's outcome {bob.labels[k]!r} is a null branch (p = {p_bob:.3g})")
    return float(_branch(bob, k, p_bob)[alice_outcome])


def no_signal_report(bob: BobFamily) -> NoSignalReport:
    pb = bob_probabilities(bob)
    p0_given, p1_given = {}, {}
    p0 = p1 = 0.0
    for k, label in enumerate(bob.labels):
        if pb[k] <= NULL_BRANCH:
            p0_given[label] = p1_given[label] = None
            continue
        c0, c1 = (float(c) for c in _branch(bob, k, float(pb[k])))
        p0_given[label], p1_given[label] = c0, c1
        p0 += c0 * pb[k]
        p1 += c1 * pb[k]
    return NoSignalReport(
        family=bob.name,
        bob_probabilities={lab: float(p) for lab, p in zip(bob.labels, pb)},
        p0_given=p0_given,
        p1_given=p1_given,
        p0_marginal=float(p0),
        p1_marginal=float(p1),
    )


def alice_marginal(bob: BobFamily) -> float:
    """Probability that Alice sees 0, summed over Bob's outcomes."""
    return no_signal_report(bob).p0_marginal


def alice_reduced_after_bob(bob: BobFamily) -> DensityOperator:
    """Alice's reduced state after Bob measures and forgets the outcome."""
    rho = _BELL_RHO.mat
    post = sum(op @ rho @ op.conj().T for op in bob.lifted.operators)
    return partial_trace(DensityOperator(post), keep="A")


def axis_from_uniforms(u_cos, u_phi) -> np.ndarray:
    """Map two uniforms in [0, 1) to a sphere-uniform unit axis (last dim = xyz)."""
    cos_t = 2.0 * np.asarray(u_cos) - 1.0
    phi = 2.0 * np.pi * np.asarray(u_phi)
    sin_t = np.sqrt(np.clip(1.0 - cos_t**2, 0.0, None))
    return np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=-1)


def _spectral_norm(a: np.ndarray, iters: int = 200) -> float:
    """Power-iteration estimate of the largest singular value."""
    g = a.conj().T @ a
    v = np.array([1.0, 0.6180339887], dtype=np.complex128)
    est = 0.0
    for _ in range(iters):
        w = g @ v
        n = np.sqrt(np.vdot(w, w).real)
        if n == 0:
            return 0.0
        v = w / n
        prev, est = est, float(np.vdot(v, g @ v).real)
        if abs(est - prev) <= 1e-15 * est:
            break
    return float(np.sqrt(est))


def psd_sqrt_2x2(p: np.ndarray) -> np.ndarray:
    """Principal square root of a 2x2 positive semidefinite matrix."""
    s = np.sqrt(max(float(np.linalg.det(p).real), 0.0))
    t = np.sqrt(max(float(np.trace(p).real) + 2 * s, 0.0))
    if t == 0:
        return np.zeros((2, 2), dtype=np.complex128)
    return (p + s * IDENTITY_2) / t


def kraus_pair(a: np.ndarray) -> MeasurementFamily:
    """{A, sqrt(I - A^dagger A)} for a contraction A."""
    a = np.asarray(a, dtype=np.complex128)
    b = psd_sqrt_2x2(IDENTITY_2 - a.conj().T @ a)
    return MeasurementFamily(("a", "b"), (a, b), GENERAL)


def random_bob_family(seed: int, kind: str = SPIN_AXIS) -> BobFamily:
    """Seeded random family for Bob: a spin axis or a general Kraus pair."""
    g = np.random.default_rng(seed & ((1 << 64) - 1))
    if kind == SPIN_AXIS:
        axis = axis_from_uniforms(g.random(), g.random())
        return BobFamily(spin_axis_family(axis), name=f"{SPIN_AXIS}:{seed}")
    if kind == GENERAL_KRAUS:
        a = g.normal(size=(2, 2)) + 1j * g.normal(size=(2, 2))
        strength = g.uniform(0.05, 0.95)
        a *= strength / _spectral_norm(a)
        return BobFamily(kraus_pair(a), name=f"{GENERAL_KRAUS}:{seed}")
    raise ValueError(f"unknown family kind {kind!r}")


def _trial_seed(seed: int, trial: int, slot: int) -> int:
    return int(rng.raw(seed, 100 + slot, trial, 0)[0])


@dataclass(frozen=True)
class ScenarioReport:
    seed: int
    trials: int
    marginals: list[tuple[float, float, float]]

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(np.asarray(self.marginals) - 0.5)))

    def to_dict(self) -> dict:
        m = np.asarray(self.marginals)
        return {
            "seed": self.seed,
            "trials": self.trials,
            "max_deviation": self.max_deviation,
            "max_deviation_per_scenario": [float(x) for x in np.max(np.abs(m - 0.5), axis=0)],
            "mean_marginal_per_scenario": [float(x) for x in m.mean(axis=0)],
        }


def scenario_equivalence(seed: int, trials: int) -> ScenarioReport:
    """Alice's marginal when Bob measures once, measures twice, or does nothing."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    alone = outcome_probabilities(partial_trace(_BELL_RHO, keep="A"), computational_family())[0]
    out = []
    for t in range(trials):
        kinds = (SPIN_AXIS, GENERAL_KRAUS) if t % 2 == 0 else (GENERAL_KRAUS, SPIN_AXIS)
        first = random_bob_family(_trial_seed(seed, t, 0), kinds[0])
        second = random_bob_family(_trial_seed(seed, t, 1), kinds[1])
        once = alice_marginal(first)
        twice = alice_marginal(BobFamily(compose_sequential(first.base, second.base), name="composed"))
        out.append((once, twice, float(alone)))
    return ScenarioReport(seed, trials, out)
