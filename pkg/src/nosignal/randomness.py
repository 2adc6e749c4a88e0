"""Finite-string randomness statistics.

The incompressibility proxy is an LZ78 parse: each phrase is the longest
previously seen phrase plus one new symbol, coded as the parent's index in
ceil(log2(dictionary size)) bits followed by the symbol bit. The dictionary
starts with the empty phrase only. A trailing phrase that is already in the
dictionary is coded by its own (parent, symbol) pair at the current cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaincc, kolmogorov

from . import rng


def as_bits(x) -> np.ndarray:
    """Validate and convert a bit string ('0'/'1' text or 0/1 sequence) to uint8."""
    if isinstance(x, str):
        arr = np.frombuffer(x.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(x)
        if arr.dtype == bool:
            arr = arr.astype(np.uint8)
    arr = np.asarray(arr).ravel()
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError("bit strings may only contain 0 and 1")
    return arr.astype(np.uint8, copy=False)


def bits_to_str(x) -> str:
    return (as_bits(x) + ord("0")).tobytes().decode("ascii")


def lz78_parse(x) -> list[tuple[int, int]]:
    """(parent index, symbol) per phrase; index 0 is the empty phrase."""
    data = as_bits(x).tobytes()
    trie: dict[tuple[int, int], int] = {}
    phrases: list[tuple[int, int]] = []
    node = 0
    for sym in data:
        child = trie.get((node, sym))
        if child is None:
            phrases.append((node, sym))
            trie[(node, sym)] = len(phrases)
            node = 0
        else:
            node = child
    if node != 0:
        phrases.append(phrases[node - 1])
    return phrases


def _index_width(dict_size: int) -> int:
    return (dict_size - 1).bit_length()


def encoded_length(x) -> int:
    """Bits used by the LZ78 code for ``x``."""
    c = len(lz78_parse(x))
    return sum(_index_width(i) + 1 for i in range(1, c + 1))


def lz78_encode(x) -> np.ndarray:
    out = []
    for i, (parent, sym) in enumerate(lz78_parse(x), start=1):
        w = _index_width(i)
        out.extend((parent >> (w - 1 - j)) & 1 for j in range(w))
        out.append(sym)
    return np.asarray(out, dtype=np.uint8)


def lz78_decode(code, n: int) -> np.ndarray:
    """Invert ``lz78_encode`` given the original length ``n``."""
    code = as_bits(code)
    phrases: list[bytes] = [b""]
    out = bytearray()
    pos, i = 0, 1
    while len(out) < n:
        w = _index_width(i)
        parent = 0
        for _ in range(w):
            parent = (parent << 1) | int(code[pos])
            pos += 1
        phrase = phrases[parent] + bytes([int(code[pos])])
        pos += 1
        phrases.append(phrase)
        out += phrase
        i += 1
    return np.frombuffer(bytes(out[:n]), dtype=np.uint8)


def compression_ratio(x) -> float:
    """Encoded bits per input bit."""
    bits = as_bits(x)
    if bits.size == 0:
        raise ValueError("compression_ratio of an empty string")
    return encoded_length(bits) / bits.size


def compression_ratios(blocks: np.ndarray) -> np.ndarray:
    return np.array([compression_ratio(b) for b in np.asarray(blocks)])


def uniform_blocks(n_bits: int, count: int, seed: int, offset: int = 0) -> np.ndarray:
    """``count`` seeded fair-coin blocks of ``n_bits`` each, shape (count, n_bits)."""
    keys = np.arange(offset, offset + count, dtype=np.int64)[:, None]
    return rng.bits(seed, rng.UNIFORM_BITS, keys, np.arange(n_bits)[None, :])


def calibrate_threshold(n_bits: int, samples: int = 10_000, quantile: float = 0.05, seed: int = 0) -> float:
    """Empirical ``quantile`` of compression ratios of uniform ``n_bits`` blocks."""
    if not 0.0 < quantile < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {quantile}")
    if samples < 100:
        raise ValueError(f"need at least 100 calibration samples, got {samples}")
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    ratios = compression_ratios(uniform_blocks(n_bits, samples, seed))
    return float(np.quantile(ratios, quantile))


@dataclass(frozen=True)
class MetricReport:
    name: str
    value: float
    auxiliary: dict = field(default_factory=dict)
    passed: bool | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "auxiliary": self.auxiliary, "passed": self.passed}


def _block_codes(bits: np.ndarray, k: int, step: int) -> np.ndarray:
    n = (bits.size - k) // step + 1
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    idx = np.arange(n)[:, None] * step + np.arange(k)[None, :]
    return bits[idx].astype(np.int64) @ weights


def block_entropy(x, k: int) -> float:
    """Shannon entropy of overlapping k-blocks, in bits per symbol."""
    bits = as_bits(x)
    if k <= 0 or k > bits.size:
        raise ValueError(f"block size must be in [1, {bits.size}], got {k}")
    counts = np.bincount(_block_codes(bits, k, 1), minlength=1 << k)
    p = counts[counts > 0] / counts.sum()
    return float(max(-(p * np.log2(p)).sum(), 0.0) / k)


def borel_normality(x, max_k: int) -> MetricReport:
    """Non-overlapping k-block frequencies against 2^-k, for k = 1..max_k.

    A block size passes when the worst word deviates by at most
    sqrt(log2(n) / n), n being the string length.
    """
    bits = as_bits(x)
    n = bits.size
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    if n < (1 << max_k) * max_k:
        raise ValueError(f"string of length {n} is too short for max_k = {max_k}")
    bound = float(np.sqrt(np.log2(n) / n))
    per_k = {}
    worst = 0.0
    for k in range(1, max_k + 1):
        counts = np.bincount(_block_codes(bits, k, k), minlength=1 << k)
        dev = float(np.max(np.abs(counts / counts.sum() - 2.0**-k)))
        per_k[k] = {"deviation": dev, "bound": bound, "passed": dev <= bound}
        worst = max(worst, dev)
    passed = all(v["passed"] for v in per_k.values())
    return MetricReport("borel_normality", worst, per_k, passed)


def chi_square_uniformity(counts) -> tuple[float, float]:
    """Pearson statistic against equal bins and its upper-tail p-value."""
    c = np.asarray(counts, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise ValueError("need at least 2 bins")
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    total = c.sum()
    if total < 5 * c.size:
        raise ValueError(f"underpowered: total count {total:g} < 5 x {c.size} bins")
    expected = total / c.size
    stat = float(((c - expected) ** 2).sum() / expected)
    return stat, float(gammaincc((c.size - 1) / 2.0, stat / 2.0))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Largest ECDF gap and its asymptotic Kolmogorov p-value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = a.size * b.size / (a.size + b.size)
    return d, float(min(1.0, kolmogorov(np.sqrt(en) * d)))


def read_bits(path, raw: bool = False) -> np.ndarray:
    """Load a bit stream: ASCII '0'/'1' with whitespace ignored, or raw bytes MSB first."""
    data = Path(path).read_bytes()
    if raw:
        return np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    text = b"".join(data.split())
    arr = np.frombuffer(text, dtype=np.uint8)
    if arr.size and not np.all((arr == ord("0")) | (arr == ord("1"))):
        raise ValueError(f"{path}: bit files may only contain '0', '1' and whitespace")
    return (arr - ord("0")).astype(np.uint8)


def write_bits(path, x, width: int = 64) -> None:
    s = bits_to_str(x)
    lines = [s[i : i + width] for i in range(0, len(s), width)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
