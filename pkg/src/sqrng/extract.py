"""Privacy amplification by Toeplitz hashing over GF(2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import as_bits, bits_to_hex, hex_to_bits
from .protocol import Transcript
from .rate import (
    InconsistentStatisticsError,
    RateReport,
    asymptotic_output_length,
    coherence_detected,
    entropy_bound,
)
from .streams import substream

NOISE_TOO_HIGH = "noise-too-high"
INCONSISTENT_STATISTICS = "inconsistent-statistics"
INSUFFICIENT_TEST_ROUNDS = "insufficient-test-rounds"

# below this many multiply-adds the direct sliding-window product is used
_DIRECT_LIMIT = 1 << 22


def toeplitz_hash(raw, seed, ell: int) -> np.ndarray:
    """Hash ``raw`` (n bits) to ``ell`` bits with the Toeplitz matrix built from ``seed``.

    ``T[i, j] = seed[i - j + n - 1]``: the first row is ``seed[n-1], ..., seed[0]``
    and the first column is ``seed[n-1], ..., seed[n+ell-2]``. The seed must
    have exactly ``n + ell - 1`` bits.
    """
    raw = as_bits(raw)
    seed = as_bits(seed)
    n = raw.size
    if ell < 0 or ell > n:
        raise ValueError(f"output length {ell} must lie in [0, {n}]")
    if ell == 0:
        return np.zeros(0, dtype=np.uint8)
    if seed.size != n + ell - 1:
        raise ValueError(f"seed has {seed.size} bits, expected n + ell - 1 = {n + ell - 1}")
    # out[i] = sum_j seed[i - j + n - 1] raw[j] = (seed * raw)[i + n - 1], a linear convolution
    if n * ell <= _DIRECT_LIMIT:
        windows = np.lib.stride_tricks.sliding_window_view(seed.astype(np.int64), n)
        return ((windows[:ell, ::-1] @ raw.astype(np.int64)) & 1).astype(np.uint8)
    size = 1 << int(np.ceil(np.log2(seed.size + n - 1)))
    conv = np.fft.irfft(np.fft.rfft(seed, size) * np.fft.rfft(raw, size), size)
    full = conv[n - 1 : n - 1 + ell]
    rounded = np.rint(full)
    if np.max(np.abs(full - rounded)) > 0.25:
        raise ArithmeticError("FFT convolution lost integer precision")
    return (rounded.astype(np.int64) & 1).astype(np.uint8)


def toeplitz_matrix(seed, n: int, ell: int) -> np.ndarray:
    """Dense ``ell x n`` Toeplitz matrix for ``seed`` (mainly for checking)."""
    seed = as_bits(seed)
    i = np.arange(ell)[:, None]
    j = np.arange(n)[None, :]
    return seed[i - j + n - 1]


@dataclass(frozen=True)
class ExtractionConfig:
    """Extraction policy.

    ``hash_seed`` is either an explicit bit string with at least ``n + ell - 1``
    bits (only that prefix is used) or an integer from which the seed bits are
    derived.
    """

    margin: float = 0.0
    threshold_qfr: float | None = None
    hash_seed: object = 0

    def __post_init__(self):
        if not 0.0 <= self.margin <= 1.0:
            raise ValueError(f"margin must lie in [0, 1], got {self.margin!r}")


@dataclass(frozen=True, eq=False)
class ExtractionResult:
    output: np.ndarray
    ell: int
    rate_used: float
    aborted: bool
    reason: str | None = None
    report: RateReport | None = None


def select_length(n_raw: int, report: RateReport, config: ExtractionConfig, q_fr: float | None = None) -> int:
    """Output length from the rate bound, or 0 on abort or when ``q_fr`` exceeds the threshold."""
    if report.abort:
        return 0
    if config.threshold_qfr is not None and q_fr is not None and q_fr > config.threshold_qfr:
        return 0
    return asymptotic_output_length(n_raw, report.bound, config.margin)


def hash_seed_bits(config: ExtractionConfig, length: int) -> np.ndarray:
    if isinstance(config.hash_seed, (int, np.integer)):
        return substream(int(config.hash_seed), "hash_seed").integers(0, 2, length, dtype=np.uint8)
    bits = as_bits(config.hash_seed)
    if bits.size < length:
        raise ValueError(f"hash seed has {bits.size} bits, need at least {length}")
    return bits[:length]


def extract(transcript: Transcript, config: ExtractionConfig) -> ExtractionResult:
    """Compress the transcript's raw string to its certified length.

    Aborts (empty output, ``aborted=True``) with one of the reasons
    ``insufficient-test-rounds``, ``inconsistent-statistics`` or
    ``noise-too-high``. The last also covers test rounds whose recovered
    overlaps are within sampling error of zero: the plug-in bound is then
    positive only by chance.
    """
    empty = np.zeros(0, dtype=np.uint8)
    if transcript.stats is None:
        return ExtractionResult(empty, 0, 0.0, True, INSUFFICIENT_TEST_ROUNDS)
    try:
        report = entropy_bound(transcript.stats)
    except InconsistentStatisticsError:
        return ExtractionResult(empty, 0, 0.0, True, INCONSISTENT_STATISTICS)
    n = transcript.raw.size
    ell = select_length(n, report, config, q_fr=transcript.stats.p_minus_acc)
    if not coherence_detected(transcript.stats, report.inner2re):
        ell = 0
    if ell == 0:
        return ExtractionResult(empty, 0, report.bound, True, NOISE_TOO_HIGH, report)
    seed = hash_seed_bits(config, n + ell - 1)
    return ExtractionResult(toeplitz_hash(transcript.raw, seed, ell), ell, report.bound, False, None, report)


def write_bits_file(path, bits) -> None:
    """``ell=<n>`` header line followed by the MSB-first lowercase hex payload."""
    bits = as_bits(bits)
    with open(path, "w") as fh:
        fh.write(f"ell={bits.size}\n{bits_to_hex(bits)}\n")


def read_bits_file(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        payload = fh.read().strip()
    if not header.startswith("ell="):
        raise ValueError(f"{path}: missing 'ell=' header")
    return hex_to_bits(payload, int(header[4:]))
