from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density
from nosignal.linalg import IDENTITY_2, PAULI_X, PAULI_Y, PAULI_Z, Ket, approx_eq, tensor
from nosignal.measurement import (
    GENERAL,
    PROJECTIVE,
    InvalidFamilyError,
    MeasurementFamily,
    collapse,
    collapse_density,
    compose_sequential,
    computational_family,
    lift,
    outcome_probabilities,
    product_family,
    sample_outcomes,
    spin_axis_family,
    string_probability,
    validate_family,
)
from nosignal.nosignaling import GENERAL_KRAUS, SPIN_AXIS, alice_family, random_bob_family
from nosignal.randomness import chi_square_uniformity
from nosignal.states import (
    DensityOperator,
    bell_state,
    bernoulli_state,
    maximally_mixed,
    pure_density,
    tensor_power,
)

COMP = computational_family()


def random_family(seed):
    return random_bob_family(seed, SPIN_AXIS if seed % 2 else GENERAL_KRAUS).base


def test_validate_computational():
    assert validate_family(COMP).valid


def test_validate_reports_completeness_residual():
    f = MeasurementFamily(("a", "b"), (IDENTITY_2, IDENTITY_2), GENERAL, check=False)
    report = validate_family(f)
    assert not report.valid
    assert report.violations["completeness"] == pytest.approx(1.0)


def test_validate_seeded_axis_by_hand():
    g = np.random.default_rng(99)
    n = g.normal(size=3)
    n /= np.linalg.norm(n)
    s = n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z
    plus, minus = (IDENTITY_2 + s) / 2, (IDENTITY_2 - s) / 2
    # (n.sigma)^2 = I makes these orthogonal idempotents summing to I
    assert approx_eq(plus @ plus, plus) and approx_eq(plus @ minus, np.zeros((2, 2)))
    assert validate_family(MeasurementFamily(("0", "1"), (plus, minus), PROJECTIVE)).valid


def test_projective_conditions_checked():
    with pytest.raises(InvalidFamilyError, match="idempotent"):
        a = np.diag([np.sqrt(0.5), np.sqrt(0.5)])
        MeasurementFamily(("0", "1"), (a, a), PROJECTIVE)
    # a valid Kraus pair is fine as general
    a = np.diag([np.sqrt(0.5), np.sqrt(0.5)])
    MeasurementFamily(("0", "1"), (a, a), GENERAL)


def test_construction_errors():
    with pytest.raises(InvalidFamilyError):
        MeasurementFamily(("0", "0"), (np.diag([1, 0]), np.diag([0, 1])), PROJECTIVE)
    with pytest.raises(InvalidFamilyError):
        MeasurementFamily(("0",), (np.eye(2), np.eye(2)))
    with pytest.raises(InvalidFamilyError):
        MeasurementFamily(("0", "1"), (np.eye(2), np.eye(4)), check=False)


def test_outcome_probabilities_examples():
    assert outcome_probabilities(maximally_mixed(), COMP) == pytest.approx([0.5, 0.5], abs=1e-15)
    assert outcome_probabilities(pure_density(Ket.basis(0)), COMP) == pytest.approx([1, 0], abs=1e-15)
    assert outcome_probabilities(pure_density(bell_state()), alice_family()) == pytest.approx([0.5, 0.5], abs=1e-15)


def test_outcome_probabilities_dim_mismatch():
    with pytest.raises(ValueError):
        outcome_probabilities(pure_density(bell_state()), COMP)


@pytest.mark.parametrize("seed", range(20))
def test_projective_trace_matches_general_formula(seed):
    rho = random_density(np.random.default_rng(seed))
    f = random_bob_family(seed, SPIN_AXIS).base
    general = MeasurementFamily(f.labels, f.operators, GENERAL)
    # equal up to rounding since pi^dagger pi = pi
    assert np.max(np.abs(outcome_probabilities(rho, f) - outcome_probabilities(rho, general))) <= 1e-15


@given(st.integers(0, 2**31), st.integers(1, 2))
def test_probabilities_normalized(seed, qubits):
    g = np.random.default_rng(seed)
    rho = random_density(g, 2**qubits)
    f = random_family(seed)
    if qubits == 2:
        f = lift(f, "B")
    p = outcome_probabilities(rho, f)
    assert p.min() >= 0
    assert abs(p.sum() - 1) <= 1e-10


def test_collapse_bell_alice_computational():
    fam = alice_family()
    assert np.allclose(collapse(bell_state(), fam, 0).amplitudes, [1, 0, 0, 0], atol=1e-15)
    assert np.allclose(collapse(bell_state(), fam, 1).amplitudes, [0, 0, 0, 1], atol=1e-15)


def test_collapse_null_branch():
    with pytest.raises(ValueError, match="null branch"):
        collapse(Ket.basis(0), COMP, 1)


def test_collapse_density_matches_ket_collapse():
    psi = Ket.normalized([1, 2j, 0.5, -1])
    f = lift(random_family(3), "B")
    for label in f.labels:
        via_ket = pure_density(collapse(psi, f, label)).mat
        assert approx_eq(collapse_density(pure_density(psi), f, label).mat, via_ket)


def test_compose_with_identity_relabels():
    ident = MeasurementFamily(("",), (IDENTITY_2,), PROJECTIVE)
    composed = compose_sequential(COMP, ident)
    assert composed.labels == ("0", "1")
    assert composed.kind == GENERAL
    for a, b in zip(composed.operators, COMP.operators):
        assert approx_eq(a, b)


def test_compose_computational_twice_kills_off_diagonal():
    composed = compose_sequential(COMP, COMP)
    for seed in range(10):
        p = dict(zip(composed.labels, outcome_probabilities(random_density(np.random.default_rng(seed)), composed)))
        assert p["01"] == 0 and p["10"] == 0


def test_compose_dim_mismatch():
    with pytest.raises(ValueError):
        compose_sequential(COMP, alice_family())


def sequential_joint(rho, first, second):
    """Measure ``first``, collapse each branch, then measure ``second``."""
    joint = {}
    for l_label, p_l in zip(first.labels, outcome_probabilities(rho, first)):
        if p_l <= 1e-15:
            for m_label in second.labels:
                joint[l_label + m_label] = 0.0
            continue
        post = collapse_density(rho, first, l_label)
        for m_label, p_m in zip(second.labels, outcome_probabilities(post, second)):
            joint[l_label + m_label] = p_l * p_m
    return joint


@pytest.mark.parametrize("seed", range(25))
def test_sequential_equals_composed(seed):
    g = np.random.default_rng(seed)
    rho = DensityOperator(random_density(g))
    first, second = random_family(2 * seed), random_family(2 * seed + 1)
    composed = compose_sequential(first, second)
    expected = sequential_joint(rho, first, second)
    got = dict(zip(composed.labels, outcome_probabilities(rho, composed)))
    assert max(abs(got[k] - expected[k]) for k in expected) <= 1e-12


def test_product_family_two_computational():
    f = product_family([COMP, COMP])
    assert f.labels == ("00", "01", "10", "11")
    for k, op in enumerate(f.operators):
        expected = np.zeros((4, 4))
        expected[k, k] = 1
        assert approx_eq(op, expected)
    assert f.kind == PROJECTIVE


def test_product_family_of_valid_families_is_valid():
    f = product_family([random_family(s) for s in range(3)])
    assert validate_family(f).valid
    assert len(f) == 8


def test_product_family_mixed_bob_alice_slots():
    # per pair: Alice computational (x) Bob spin axis, on 4-dim slots
    slots = []
    for s in range(2):
        bob = random_bob_family(s, SPIN_AXIS).base
        ops, labels = [], []
        for a_lab, a_op in zip(COMP.labels, COMP.operators):
            for b_lab, b_op in zip(bob.labels, bob.operators):
                ops.append(tensor(a_op, b_op))
                labels.append(a_lab + b_lab)
        slots.append(MeasurementFamily(tuple(labels), tuple(ops), PROJECTIVE))
    f = product_family(slots)
    assert f.dim == 16 and len(f) == 16
    assert validate_family(f).valid


def test_product_family_cap():
    with pytest.raises(ValueError, match="cap"):
        product_family([COMP] * 5, cap=4)


def test_string_probability_examples():
    assert string_probability(maximally_mixed(), COMP, "0110") == 2**-4
    assert string_probability(bernoulli_state(1.0), COMP, "000") == 1.0
    # Tr(rho pi_0) Tr(rho pi_1) = 1/4 * 3/4
    assert string_probability(bernoulli_state(0.25), COMP, "01") == pytest.approx(3 / 16, abs=1e-15)
    assert string_probability(bernoulli_state(0.25), COMP, [0, 1]) == pytest.approx(3 / 16, abs=1e-15)


@pytest.mark.parametrize("n", range(1, 5))
@pytest.mark.parametrize("seed", range(3))
def test_string_probability_factorizes(n, seed):
    g = np.random.default_rng(seed)
    rho = DensityOperator(random_density(g))
    f = random_bob_family(seed, SPIN_AXIS).base
    big = tensor_power(rho, n)
    prod = product_family([f] * n)
    full = outcome_probabilities(big, prod)
    for label, p in zip(prod.labels, full):
        assert abs(string_probability(rho, f, label) - p) <= 1e-12
    # independent route: explicit Kronecker of the per-symbol projectors
    for bits in product("01", repeat=n):
        op = np.ones((1, 1))
        for b in bits:
            op = np.kron(op, f.operators[int(b)])
        assert abs(np.trace(big.mat @ op).real - string_probability(rho, f, "".join(bits))) <= 1e-12


def test_sample_pure_zero():
    out = sample_outcomes(pure_density(Ket.basis(0)), COMP, 100, seed=3)
    assert out.tolist() == [0] * 100


def test_sample_fair_frequency():
    out = sample_outcomes(maximally_mixed(), COMP, 10**6, seed=42)
    # 4 sigma of a Bernoulli(1/2) mean over 1e6 shots is 0.002
    assert abs(out.mean() - 0.5) <= 0.002


def test_sample_deterministic():
    a = sample_outcomes(maximally_mixed(), COMP, 1000, seed=7)
    b = sample_outcomes(maximally_mixed(), COMP, 1000, seed=7)
    c = sample_outcomes(maximally_mixed(), COMP, 1000, seed=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_outcomes(maximally_mixed(), COMP, 0, seed=1)


@pytest.mark.parametrize("seed", range(5))
def test_sampling_chi_square_consistency(seed):
    from scipy.stats import chisquare

    g = np.random.default_rng(seed)
    rho = DensityOperator(random_density(g, 4))
    f = product_family([random_family(seed), COMP])
    p = outcome_probabilities(rho, f)
    shots = 10**5
    counts = np.bincount(sample_outcomes(rho, f, shots, seed), minlength=len(f))
    keep = p > 0
    assert chisquare(counts[keep], shots * p[keep]).pvalue > 0.001


def test_uniform_chi_square_through_own_routine():
    counts = np.bincount(sample_outcomes(tensor_power(maximally_mixed(), 3), product_family([COMP] * 3), 10**5, 1), minlength=8)
    assert chi_square_uniformity(counts)[1] > 0.001
