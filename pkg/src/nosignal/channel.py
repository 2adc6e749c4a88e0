"""Simulation of the compressibility channel over shared Bell pairs.

Bob sends 0 by measuring every pair of a block in the fixed computational
basis and 1 by measuring along N template-drawn random axes. Alice measures
her halves in the computational basis and decodes a block as 0 when it
compresses below a threshold. Each pair is simulated exactly in the
4-dimensional two-qubit space: Bob's lifted operator I (x) M collapses the
Bell state, then Alice measures.

Randomness is counter-based: the draws for pair j of trial i depend only on
(master_seed, i, j), and Bob's template axes only on (template_seed, i, j).
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import product as _cartesian

import numpy as np

from . import rng
from .linalg import IDENTITY_2
from .measurement import (
    PROJECTIVE,
    MeasurementFamily,
    compose_sequential,
    computational_family,
    lift,
    outcome_probabilities,
)
from .nosignaling import alice_family, axis_from_uniforms
from .randomness import (
    bits_to_str,
    calibrate_threshold,
    compression_ratio,
    compression_ratios,
    ks_two_sample,
)
from .states import bell_state, pure_density

HONEST = "honest-protocol"
ALWAYS_NOTHING = "always-nothing"
ALWAYS_SCRAMBLE = "always-scramble"
POLICIES = (HONEST, ALWAYS_NOTHING, ALWAYS_SCRAMBLE)

_CHUNK_PAIRS = 1 << 16
_BELL = bell_state().amplitudes
_ALICE_ZERO = alice_family().operators[0]
_COMPUTATIONAL = np.stack(computational_family().operators)


def thread_count() -> int:
    """Worker cap from NOSIGNAL_THREADS (0 or unset means one per CPU)."""
    raw = os.environ.get("NOSIGNAL_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError(f"NOSIGNAL_THREADS must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


@dataclass(frozen=True)
class ChannelConfig:
    block_len: int = 256
    trials: int = 10_000
    template_seed: int = 0
    master_seed: int = 0
    classifier_threshold: float | None = None
    bob_policy: str = HONEST
    calibration_samples: int = 10_000
    calibration_quantile: float = 0.05

    def __post_init__(self):
        if self.block_len < 8:
            raise ValueError(f"block_len must be >= 8, got {self.block_len}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.classifier_threshold is not None and not 0.0 < self.classifier_threshold < 2.0:
            raise ValueError(f"classifier_threshold must lie in (0, 2), got {self.classifier_threshold}")
        if self.bob_policy not in POLICIES:
            raise ValueError(f"bob_policy must be one of {POLICIES}, got {self.bob_policy!r}")

    def threshold(self) -> float:
        """The configured threshold, or one calibrated on uniform blocks."""
        if self.classifier_threshold is not None:
            return float(self.classifier_threshold)
        return _calibrated(self.block_len, self.calibration_samples, self.calibration_quantile, self.master_seed)


@lru_cache(maxsize=32)
def _calibrated(n_bits: int, samples: int, quantile: float, seed: int) -> float:
    return calibrate_threshold(n_bits, samples, quantile, seed)


def intended_bit(trial_index: int) -> int:
    return trial_index % 2


def encoded_bit(policy: str, intended) -> np.ndarray:
    intended = np.asarray(intended, dtype=np.uint8)
    if policy == HONEST:
        return intended
    if policy == ALWAYS_NOTHING:
        return np.zeros_like(intended)
    if policy == ALWAYS_SCRAMBLE:
        return np.ones_like(intended)
    raise ValueError(f"unknown policy {policy!r}")


def _template_axes(n: int, template_seed: int, block_indices: np.ndarray) -> np.ndarray:
    keys = np.asarray(block_indices, dtype=np.int64)[:, None]
    j = np.arange(n, dtype=np.int64)[None, :]
    u = rng.uniform(template_seed, rng.TEMPLATE, keys, 2 * j)
    v = rng.uniform(template_seed, rng.TEMPLATE, keys, 2 * j + 1)
    return axis_from_uniforms(u, v)


def _spin_projector_stack(axes: np.ndarray) -> np.ndarray:
    """(..., 3) axes -> (..., 2, 2, 2) projectors (I +- n.sigma)/2."""
    nx, ny, nz = axes[..., 0], axes[..., 1], axes[..., 2]
    plus = np.empty(axes.shape[:-1] + (2, 2), dtype=np.complex128)
    plus[..., 0, 0] = (1 + nz) / 2
    plus[..., 0, 1] = (nx - 1j * ny) / 2
    plus[..., 1, 0] = (nx + 1j * ny) / 2
    plus[..., 1, 1] = (1 - nz) / 2
    minus = IDENTITY_2 - plus
    return np.stack([plus, minus], axis=-3)


def bob_operator_stack(bits, n: int, template_seed: int, block_indices) -> np.ndarray:
    """Bob's measurement operators for a batch of blocks, shape (T, n, 2, 2, 2)."""
    bits = np.asarray(bits, dtype=np.uint8)
    block_indices = np.asarray(block_indices, dtype=np.int64)
    ops = np.broadcast_to(_COMPUTATIONAL, (bits.size, n, 2, 2, 2)).copy()
    scramble = bits == 1
    if scramble.any():
        axes = _template_axes(n, template_seed, block_indices[scramble])
        ops[scramble] = _spin_projector_stack(axes)
    return ops


def bob_encode(bit: int, n: int, template_seed: int, block_index: int) -> list[MeasurementFamily]:
    """Bob's N one-qubit families for one block.

    Bit 0 keeps the computational basis; bit 1 uses spin axes drawn from the
    template stream keyed by (template_seed, block_index).
    """
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    ops = bob_operator_stack([bit], n, template_seed, [block_index])[0]
    return [MeasurementFamily(("0", "1"), (o[0], o[1]), PROJECTIVE) for o in ops]


def simulate_pairs(bob_ops: np.ndarray, u_bob: np.ndarray, u_alice: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bob then Alice on independent Bell pairs.

    ``bob_ops`` has shape (P, K, 2, 2) (one K-outcome family per pair). Each
    pair is lifted to I (x) M_k, Bob's outcome is drawn by inverse CDF from
    ``u_bob``, the state collapses, and Alice's bit is drawn from ``u_alice``.
    Returns (alice_bits, bob_outcomes).
    """
    p_count, k_count = bob_ops.shape[:2]
    lifted = np.zeros((p_count, k_count, 4, 4), dtype=np.complex128)
    lifted[..., :2, :2] = bob_ops
    lifted[..., 2:, 2:] = bob_ops
    branches = lifted @ _BELL
    p_bob = np.clip(np.einsum("pki,pki->pk", branches.conj(), branches).real, 0.0, None)
    cdf = np.cumsum(p_bob, axis=1)
    cdf /= cdf[:, -1:]
    k = np.minimum((u_bob[:, None] >= cdf).sum(axis=1), k_count - 1)
    rows = np.arange(p_count)
    post = branches[rows, k] / np.sqrt(p_bob[rows, k])[:, None]
    seen = post @ _ALICE_ZERO.T
    p_zero = np.einsum("pi,pi->p", seen.conj(), seen).real
    alice = (u_alice >= p_zero).astype(np.uint8)
    return alice, k.astype(np.uint8)


def _simulate_chunk(bits, trial_indices, n, template_seed, master_seed) -> np.ndarray:
    ops = bob_operator_stack(bits, n, template_seed, trial_indices)
    keys = np.asarray(trial_indices, dtype=np.int64)[:, None]
    j = np.arange(n, dtype=np.int64)[None, :]
    u_bob = rng.uniform(master_seed, rng.BOB_OUTCOME, keys, j).ravel()
    u_alice = rng.uniform(master_seed, rng.ALICE_OUTCOME, keys, j).ravel()
    alice, _ = simulate_pairs(ops.reshape(-1, 2, 2, 2), u_bob, u_alice)
    return alice.reshape(len(trial_indices), n)


def _chunks(total: int, n: int):
    per = max(1, _CHUNK_PAIRS // n)
    return [(s, min(s + per, total)) for s in range(0, total, per)]


def _map(fn, items):
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def simulate_blocks(bits, trial_indices, n: int, template_seed: int, master_seed: int) -> np.ndarray:
    """Alice's blocks, shape (T, n), for Bob's encoded ``bits`` per trial."""
    bits = np.asarray(bits, dtype=np.uint8)
    trial_indices = np.asarray(trial_indices, dtype=np.int64)
    parts = _map(
        lambda se: _simulate_chunk(bits[se[0] : se[1]], trial_indices[se[0] : se[1]], n, template_seed, master_seed),
        _chunks(bits.size, n),
    )
    return np.concatenate(parts) if parts else np.zeros((0, n), dtype=np.uint8)


def policy_blocks(policy: str, n: int, count: int, master_seed: int, template_seed: int = 0) -> np.ndarray:
    """``count`` Alice blocks with trial indices 0..count-1 under ``policy``."""
    idx = np.arange(count, dtype=np.int64)
    return simulate_blocks(encoded_bit(policy, idx % 2), idx, n, template_seed, master_seed)


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    intended_bit: int
    alice_block: str
    compression_ratio: float
    decoded_bit: int


def alice_decode(block, threshold: float, block_len: int | None = None) -> int:
    """0 if the block compresses below ``threshold``, else 1."""
    s = bits_to_str(block)
    if block_len is not None and len(s) != block_len:
        raise ValueError(f"block has {len(s)} bits, expected {block_len}")
    return 0 if compression_ratio(s) < threshold else 1


def run_trial(cfg: ChannelConfig, intended: int, trial_index: int) -> TrialRecord:
    """One block: Bob encodes ``intended`` per his policy, Alice measures and decodes."""
    if intended not in (0, 1):
        raise ValueError(f"intended bit must be 0 or 1, got {intended!r}")
    bit = encoded_bit(cfg.bob_policy, [intended])
    block = _simulate_chunk(bit, [trial_index], cfg.block_len, cfg.template_seed, cfg.master_seed)[0]
    theta = cfg.threshold()
    ratio = compression_ratio(block)
    return TrialRecord(trial_index, int(intended), bits_to_str(block), ratio, int(ratio >= theta))


def mutual_information_from_counts(joint) -> float:
    """Plug-in mutual information (bits) of a 2-D contingency table."""
    c = np.asarray(joint, dtype=float)
    total = c.sum()
    if total <= 0:
        raise ValueError("empty contingency table")
    p = c / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    mi = float((p[nz] * np.log2(p[nz] / (px @ py)[nz])).sum())
    return min(max(mi, 0.0), 1.0) if c.shape == (2, 2) else max(mi, 0.0)


def confusion_counts(intended, decoded) -> np.ndarray:
    joint = np.zeros((2, 2), dtype=np.int64)
    np.add.at(joint, (np.asarray(intended, dtype=np.int64), np.asarray(decoded, dtype=np.int64)), 1)
    return joint


def estimate_mutual_information(records) -> float:
    """Plug-in MI between intended and decoded bits over trial records."""
    records = list(records)
    if not records:
        raise ValueError("no trial records")
    joint = confusion_counts([r.intended_bit for r in records], [r.decoded_bit for r in records])
    for bit in (0, 1):
        if joint[bit].sum() == 0:
            raise ValueError(f"intended bit {bit} never sent; mutual information is undefined")
    return mutual_information_from_counts(joint)


@dataclass
class ChannelReport:
    config: dict
    threshold: float
    confusion: list[list[int]]
    mutual_information: float
    accuracy: float
    ks_statistic: float
    ks_pvalue: float
    records: list[TrialRecord] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("records")
        return d

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial_index", "intended_bit", "decoded_bit", "compression_ratio"])
            for r in self.records:
                w.writerow([r.trial_index, r.intended_bit, r.decoded_bit, repr(r.compression_ratio)])


def run_experiment(cfg: ChannelConfig) -> ChannelReport:
    """All trials of ``cfg`` with intended bits alternating 0, 1, 0, ..."""
    idx = np.arange(cfg.trials, dtype=np.int64)
    intended = (idx % 2).astype(np.uint8)
    theta = cfg.threshold()
    blocks = simulate_blocks(encoded_bit(cfg.bob_policy, intended), idx, cfg.block_len, cfg.template_seed, cfg.master_seed)
    ratios = np.concatenate(_map(compression_ratios, np.array_split(blocks, max(1, min(thread_count(), len(blocks))))))
    decoded = (ratios >= theta).astype(np.uint8)
    records = [
        TrialRecord(int(i), int(b), bits_to_str(blk), float(r), int(d))
        for i, b, blk, r, d in zip(idx, intended, blocks, ratios, decoded)
    ]
    joint = confusion_counts(intended, decoded)
    if cfg.trials >= 2:
        mi = estimate_mutual_information(records)
        ks_d, ks_p = ks_two_sample(ratios[intended == 0], ratios[intended == 1])
    else:
        mi, ks_d, ks_p = float("nan"), float("nan"), float("nan")
    config = asdict(cfg)
    return ChannelReport(
        config=config,
        threshold=theta,
        confusion=joint.tolist(),
        mutual_information=mi,
        accuracy=float((intended == decoded).mean()),
        ks_statistic=ks_d,
        ks_pvalue=ks_p,
        records=records,
    )


# exact laws, small N


def pair_alice_law(bob: MeasurementFamily) -> np.ndarray:
    """Alice's exact bit law on one Bell pair after Bob measures with ``bob``.

    Bob's lifted family followed by Alice's is composed into one family and
    Bob's label is summed out.
    """
    joint = compose_sequential(lift(bob, "B"), alice_family())
    p = outcome_probabilities(pure_density(bell_state()), joint)
    law = np.zeros(2)
    for label, prob in zip(joint.labels, p):
        law[int(label[-1])] += prob
    return law


def block_law(families) -> np.ndarray:
    """Exact distribution of Alice's block over all 2^N strings (index = block as binary)."""
    law = np.ones(1)
    for f in families:
        law = np.kron(law, pair_alice_law(f))
    return law


def exact_decoder_mutual_information(law0: np.ndarray, law1: np.ndarray, decoder) -> float:
    """I(intended; decoded) for equiprobable intended bits and a deterministic decoder."""
    n = int(np.log2(law0.size))
    joint = np.zeros((2, 2))
    for idx, bits in enumerate(_cartesian((0, 1), repeat=n)):
        d = int(decoder(np.asarray(bits, dtype=np.uint8)))
        joint[0, d] += 0.5 * law0[idx]
        joint[1, d] += 0.5 * law1[idx]
    return mutual_information_from_counts(joint)


@dataclass(frozen=True)
class IndistinguishabilityReport:
    block_len: int
    blocks: int
    repetitions: int
    pvalues: list[float]
    statistics: list[float]
    alpha: float = 0.01

    @property
    def passes(self) -> int:
        return sum(p > self.alpha for p in self.pvalues)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passes"] = self.passes
        return d


def ratio_indistinguishability(
    repetitions: int = 100, blocks: int = 1000, block_len: int = 256, seed: int = 0, alpha: float = 0.01
) -> IndistinguishabilityReport:
    """KS comparison of compression ratios, always-nothing vs always-scramble, per repetition."""
    pvals, stats = [], []
    for r in range(repetitions):
        base = int(rng.raw(seed, 200, r, 0)[0])
        a = policy_blocks(ALWAYS_NOTHING, block_len, blocks, master_seed=base, template_seed=base)
        b = policy_blocks(ALWAYS_SCRAMBLE, block_len, blocks, master_seed=base ^ 1, template_seed=base ^ 1)
        d, p = ks_two_sample(compression_ratios(a), compression_ratios(b))
        pvals.append(p)
        stats.append(d)
    return IndistinguishabilityReport(block_len, blocks, repetitions, pvals, stats, alpha)
