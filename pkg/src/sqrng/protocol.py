"""Monte-Carlo simulation of the protocol with an honest server and depolarizing noise.

Rounds are not pushed through density matrices one by one. The per-round
outcome laws are computed once from :mod:`sqrng.quantum` (depolarize, then
measure) by :func:`round_laws`, and the simulator samples from them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .bits import as_bits, bits_to_hex, hex_to_bits
from .quantum import depolarize, outcome_probability, qubit
from .rate import MESSAGES, ChannelModel, ObservedStats
from .streams import substream

MEASURE_RESEND = "MeasureResend"
REFLECT = "Reflect"
CHUNK = 1 << 16


class MissingStatisticsError(ValueError):
    """No rounds of a category needed to estimate the statistics."""

    def __init__(self, category: str):
        super().__init__(f"no {category} rounds to estimate statistics from")
        self.category = category


@dataclass(frozen=True)
class ProtocolConfig:
    n_rounds: int
    n_test: int
    channel: ChannelModel = field(default_factory=lambda: ChannelModel(0.0))
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be at least 1")
        if not 0 <= self.n_test <= self.n_rounds:
            raise ValueError(f"n_test must lie in [0, {self.n_rounds}], got {self.n_test}")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned value")

    @property
    def seed_cost_bits(self) -> float:
        """``log2(N choose m)``, the seed randomness spent on choosing test rounds."""
        n, m = self.n_rounds, self.n_test
        return (math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)) / math.log(2)

    def to_dict(self) -> dict:
        return {
            "n_rounds": self.n_rounds,
            "n_test": self.n_test,
            "q": self.channel.q,
            "mode": self.channel.mode,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        return cls(
            int(d["n_rounds"]),
            int(d["n_test"]),
            ChannelModel(float(d["q"]), d["mode"]),
            int(d["rng_seed"]),
        )


@dataclass(frozen=True)
class RoundRecord:
    index: int
    choice: str
    alice_bit: int | None
    server_message: str

    def __post_init__(self):
        if self.choice not in (MEASURE_RESEND, REFLECT):
            raise ValueError(f"unknown choice {self.choice!r}")
        if (self.alice_bit is None) != (self.choice == REFLECT):
            raise ValueError("alice_bit is recorded exactly on Measure-Resend rounds")
        if self.server_message not in MESSAGES:
            raise ValueError(f"unknown message {self.server_message!r}")


@dataclass(frozen=True)
class RoundLaws:
    """Outcome probabilities for one round behind a given channel."""

    p_alice_zero: float
    p_plus_measure: tuple[float, float]
    p_plus_reflect: float


def round_laws(channel: ChannelModel) -> RoundLaws:
    """Derive the sampling laws from the single-qubit channel model.

    Alice receives ``D_q(|+><+|)`` and measures Z; on Measure-Resend the server
    receives ``D_q(|a><a|)``; on Reflect it receives ``D_{q_fr}(|+><+|)``. The
    server measures X and reports "+" on outcome ``|+>``.
    """
    plus = qubit("+").density()
    p0 = outcome_probability(depolarize(plus, channel.q), "Z", 0)
    measured = tuple(
        outcome_probability(depolarize(qubit(str(a)).density(), channel.q), "X", 0) for a in (0, 1)
    )
    reflected = outcome_probability(depolarize(plus, channel.q_fr), "X", 0)
    return RoundLaws(p0, measured, reflected)


def choose_schedule(config: ProtocolConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Uniform random ``n_test``-subset of rounds set to Reflect (0); the rest are 1."""
    if config.n_test > config.n_rounds:
        raise ValueError("more test rounds than rounds")
    if rng is None:
        rng = substream(config.rng_seed, "schedule")
    theta = np.ones(config.n_rounds, dtype=np.uint8)
    theta[rng.choice(config.n_rounds, size=config.n_test, replace=False)] = 0
    return theta


def _sample(choices: np.ndarray, laws: RoundLaws, rng: np.random.Generator):
    """Draw (alice_bits, messages) for a block; alice_bits is -1 on Reflect rounds."""
    u_alice = rng.random(choices.size)
    u_msg = rng.random(choices.size)
    bits = (u_alice >= laws.p_alice_zero).astype(np.int8)
    p_plus = np.where(bits == 0, laws.p_plus_measure[0], laws.p_plus_measure[1])
    p_plus = np.where(choices == 1, p_plus, laws.p_plus_reflect)
    messages = (u_msg >= p_plus).astype(np.uint8)
    bits = np.where(choices == 1, bits, -1).astype(np.int8)
    return bits, messages


def simulate_round(
    choice: str, channel: ChannelModel, rng: np.random.Generator, index: int = 0, laws: RoundLaws | None = None
) -> RoundRecord:
    """One honest-server round."""
    laws = laws or round_laws(channel)
    bits, msgs = _sample(np.array([1 if choice == MEASURE_RESEND else 0]), laws, rng)
    bit = None if choice == REFLECT else int(bits[0])
    return RoundRecord(index, choice, bit, MESSAGES[int(msgs[0])])


def _stats_from_arrays(alice_bits: np.ndarray, messages: np.ndarray) -> ObservedStats:
    measure = alice_bits >= 0
    n_m = int(measure.sum())
    n_r = int(alice_bits.size - n_m)
    if n_r == 0:
        raise MissingStatisticsError(REFLECT)
    if n_m == 0:
        raise MissingStatisticsError(MEASURE_RESEND)
    idx = 2 * alice_bits[measure].astype(np.int64) + messages[measure]
    counts = np.bincount(idx, minlength=4).reshape(2, 2)
    n_minus = int(messages[~measure].sum())
    return ObservedStats(
        counts / n_m,
        (n_r - n_minus) / n_r,
        n_minus / n_r,
        n_measure=n_m,
        n_reflect=n_r,
    )


def estimate_stats(rounds: Iterable[RoundRecord]) -> ObservedStats:
    """Empirical statistics: joint (a, c) frequencies and reflect-round message frequencies.

    Raises
    ------
    MissingStatisticsError
        If there is no Reflect round or no Measure-Resend round.
    """
    rounds = list(rounds)
    bits = np.array([-1 if r.alice_bit is None else r.alice_bit for r in rounds], dtype=np.int8)
    msgs = np.array([MESSAGES.index(r.server_message) for r in rounds], dtype=np.uint8)
    return _stats_from_arrays(bits, msgs)


@dataclass(frozen=True, eq=False)
class Transcript:
    """Outcome of a simulated run.

    Round data is held column-wise: ``schedule`` (0 Reflect, 1 Measure-Resend),
    ``alice_bits`` (-1 on Reflect rounds) and ``messages`` (0 "+", 1 "-").
    ``stats`` is ``None`` when a round category is empty; ``missing`` then
    names it.
    """

    config: ProtocolConfig
    schedule: np.ndarray | None
    alice_bits: np.ndarray | None
    messages: np.ndarray | None
    raw: np.ndarray
    stats: ObservedStats | None
    missing: str | None = None

    @property
    def seed_cost_bits(self) -> float:
        return self.config.seed_cost_bits

    @property
    def has_rounds(self) -> bool:
        return self.alice_bits is not None

    @property
    def rounds(self) -> list[RoundRecord]:
        if not self.has_rounds:
            raise ValueError("per-round records were not kept")
        return [
            RoundRecord(
                i,
                MEASURE_RESEND if b >= 0 else REFLECT,
                int(b) if b >= 0 else None,
                MESSAGES[int(m)],
            )
            for i, (b, m) in enumerate(zip(self.alice_bits, self.messages))
        ]

    def to_dict(self, keep_rounds: bool = False) -> dict:
        out = {
            "config": self.config.to_dict(),
            "raw": {"bits": int(self.raw.size), "hex": bits_to_hex(self.raw)},
            "stats": None if self.stats is None else self.stats.to_dict(),
            "missing_statistics": self.missing,
            "seed_cost_bits": self.seed_cost_bits,
        }
        if keep_rounds:
            out["rounds"] = [
                {
                    "index": r.index,
                    "choice": r.choice,
                    "alice_bit": r.alice_bit,
                    "server_message": r.server_message,
                }
                for r in self.rounds
            ]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Transcript":
        config = ProtocolConfig.from_dict(d["config"])
        raw = hex_to_bits(d["raw"]["hex"], int(d["raw"]["bits"]))
        stats = None if d.get("stats") is None else ObservedStats.from_dict(d["stats"])
        schedule = bits = msgs = None
        if d.get("rounds") is not None:
            recs = [RoundRecord(**r) for r in d["rounds"]]
            bits = np.array([-1 if r.alice_bit is None else r.alice_bit for r in recs], dtype=np.int8)
            msgs = np.array([MESSAGES.index(r.server_message) for r in recs], dtype=np.uint8)
            schedule = (bits >= 0).astype(np.uint8)
        return cls(config, schedule, bits, msgs, raw, stats, d.get("missing_statistics"))


def run_protocol(config: ProtocolConfig, workers: int = 1) -> Transcript:
    """Simulate ``config.n_rounds`` rounds.

    Round ``i`` draws from chunk ``i // CHUNK`` of the seed's "rounds" stream,
    so the transcript does not depend on ``workers``.
    """
    theta = choose_schedule(config)
    laws = round_laws(config.channel)
    starts = range(0, config.n_rounds, CHUNK)

    def block(k_start):
        k, start = k_start
        rng = substream(config.rng_seed, "rounds", k)
        return _sample(theta[start : start + CHUNK], laws, rng)

    jobs = list(enumerate(starts))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, jobs))
    else:
        parts = [block(j) for j in jobs]
    bits = np.concatenate([p[0] for p in parts])
    msgs = np.concatenate([p[1] for p in parts])
    raw = as_bits(bits[bits >= 0])
    try:
        stats, missing = _stats_from_arrays(bits, msgs), None
    except MissingStatisticsError as exc:
        stats, missing = None, exc.category
    return Transcript(config, theta, bits, msgs, raw, stats, missing)
