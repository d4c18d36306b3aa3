"""Entropy lower bound and asymptotic bit-generation rate from observed statistics.

Messages are indexed ``c = 0`` for "+" and ``c = 1`` for "-". All statistics
live in :class:`ObservedStats`; :func:`entropy_bound` turns them into a
:class:`RateReport`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .quantum import binary_entropy

MESSAGES = ("+", "-")
MODES = ("dependent", "independent")


class InconsistentStatisticsError(ValueError):
    """Observed statistics cannot come from any physical single-signal state."""


@dataclass(frozen=True)
class ChannelModel:
    """Depolarizing two-way channel with per-leg parameter ``q``.

    ``q_fr`` is the joint forward/reverse parameter seen on reflected qubits:
    ``q`` for a dependent channel, ``2q(1-q)`` for independent legs.
    """

    q: float
    mode: str = "dependent"

    def __post_init__(self):
        if not (0.0 <= self.q <= 0.5):
            raise ValueError(f"depolarization parameter must lie in [0, 0.5], got {self.q!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def q_fr(self) -> float:
        if self.mode == "dependent":
            return float(self.q)
        return 2.0 * self.q * (1.0 - self.q)


@dataclass(frozen=True)
class ObservedStats:
    """Statistics observable by Alice.

    Attributes
    ----------
    p_ac : ndarray, shape (2, 2)
        ``p_ac[a, c]`` is the joint frequency of raw bit ``a`` and message ``c``
        over Measure-Resend rounds.
    p_plus_acc, p_minus_acc : float
        Message frequencies over Reflect rounds.
    n_measure, n_reflect : int or None
        Sample sizes when the numbers are empirical. They widen the tolerance
        of the consistency check to a 3-sigma envelope; ``None`` means exact.
    """

    p_ac: np.ndarray
    p_plus_acc: float
    p_minus_acc: float
    n_measure: int | None = None
    n_reflect: int | None = None
    tol: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        p = np.array(self.p_ac, dtype=float).reshape(2, 2)
        p.flags.writeable = False
        object.__setattr__(self, "p_ac", p)
        object.__setattr__(self, "p_plus_acc", float(self.p_plus_acc))
        object.__setattr__(self, "p_minus_acc", float(self.p_minus_acc))
        entries = list(p.ravel()) + [self.p_plus_acc, self.p_minus_acc]
        if any(not (-self.tol <= x <= 1.0 + self.tol) for x in entries):
            raise InconsistentStatisticsError(f"probabilities outside [0, 1]: {entries}")
        if abs(p.sum() - 1.0) > self.tol:
            raise InconsistentStatisticsError(f"joint frequencies sum to {p.sum()!r}")
        if abs(self.p_plus_acc + self.p_minus_acc - 1.0) > self.tol:
            raise InconsistentStatisticsError("reflect-round message frequencies do not sum to 1")

    @property
    def p_acc(self) -> tuple[float, float]:
        return (self.p_plus_acc, self.p_minus_acc)

    def slack(self) -> float:
        """Allowed Cauchy-Schwarz violation: float noise, or 3 sigma for empirical counts."""
        s = self.tol
        if self.n_reflect:
            s += 3.0 * 0.5 / math.sqrt(self.n_reflect)
        if self.n_measure:
            s += 3.0 * 2.0 * 0.5 / math.sqrt(self.n_measure)
        return s

    def mass(self, c: int) -> float:
        return float(self.p_ac[0, c] + self.p_ac[1, c])

    @classmethod
    def from_dict(cls, d: dict) -> "ObservedStats":
        p = np.zeros((2, 2))
        for key, val in d["p_ac"].items():
            a, c = key.split(",")
            p[int(a), MESSAGES.index(c)] = float(val)
        return cls(
            p,
            d["p_plus_acc"],
            d["p_minus_acc"],
            n_measure=d.get("n_measure"),
            n_reflect=d.get("n_reflect"),
        )

    def to_dict(self) -> dict:
        return {
            "p_ac": {f"{a},{MESSAGES[c]}": float(self.p_ac[a, c]) for a in (0, 1) for c in (0, 1)},
            "p_plus_acc": self.p_plus_acc,
            "p_minus_acc": self.p_minus_acc,
            "n_measure": self.n_measure,
            "n_reflect": self.n_reflect,
        }


@dataclass(frozen=True)
class RateReport:
    lam: tuple[float, float]
    inner2re: tuple[float, float]
    term: tuple[float, float]
    bound: float
    abort: bool
    raw_bound: float

    def to_dict(self) -> dict:
        return {
            "lambda": list(self.lam),
            "inner2re": list(self.inner2re),
            "term": list(self.term),
            "bound": self.bound,
            "abort": self.abort,
            "raw_bound": self.raw_bound,
        }


def _message_index(c) -> int:
    if c in (0, 1):
        return int(c)
    if c in MESSAGES:
        return MESSAGES.index(c)
    raise ValueError(f"unknown message {c!r}")


def recover_inner_products(stats: ObservedStats) -> tuple[float, float]:
    """``2 Re<e_{0,c}|e_{1,c}>`` for both messages, from reflect-round frequencies.

    Raises
    ------
    InconsistentStatisticsError
        If a recovered value exceeds the Cauchy-Schwarz limit
        ``2 sqrt(P_{0,c} P_{1,c})`` by more than the statistics' slack.
    """
    out = []
    slack = stats.slack()
    for c in (0, 1):
        p0, p1 = stats.p_ac[0, c], stats.p_ac[1, c]
        x = stats.p_acc[c] - p0 - p1
        limit = 2.0 * math.sqrt(max(p0, 0.0) * max(p1, 0.0))
        if abs(x) > limit + slack:
            raise InconsistentStatisticsError(
                f"message {MESSAGES[c]}: recovered 2Re<e0|e1> = {x:.6g} exceeds "
                f"Cauchy-Schwarz limit {limit:.6g} (slack {slack:.3g})"
            )
        out.append(float(x))
    return out[0], out[1]


def coherence_detected(stats: ObservedStats, inner2re: Sequence[float] | None = None) -> bool:
    """Whether some recovered ``2Re<e_{0,c}|e_{1,c}>`` exceeds the statistical slack.

    The bound is positive only through these overlaps, so when none is
    distinguishable from zero the statistics certify nothing.
    """
    inner = recover_inner_products(stats) if inner2re is None else inner2re
    return max(abs(x) for x in inner) > stats.slack()


def lambda_c(stats: ObservedStats, c, inner2re: float | None = None) -> float:
    """Largest-eigenvalue ratio ``lambda_c`` of Eve's state for message ``c``.

    Raises ``ZeroDivisionError`` when ``P_{0,c} + P_{1,c} = 0``; callers treat
    such a branch as contributing nothing.
    """
    c = _message_index(c)
    p0, p1 = stats.p_ac[0, c], stats.p_ac[1, c]
    mass = p0 + p1
    if mass <= 0.0:
        raise ZeroDivisionError(f"no mass on message {MESSAGES[c]}")
    if inner2re is None:
        inner2re = recover_inner_products(stats)[c]
    ratio = math.sqrt((p0 - p1) ** 2 + inner2re**2) / mass
    # statistics already passed the consistency check, so any excess is noise
    return 0.5 * (1.0 + min(ratio, 1.0))


def entropy_bound(stats: ObservedStats) -> RateReport:
    """Lower bound on ``S(A|CE)`` per raw bit.

    Sums, over messages ``c`` with nonzero mass, the weighted difference
    ``(P_{0,c}+P_{1,c}) * (h[P_{0,c}/(P_{0,c}+P_{1,c})] - h[lambda_c])``.
    Negative totals are clamped to zero and flagged ``abort``.
    """
    inner = recover_inner_products(stats)
    lams, terms = [], []
    for c in (0, 1):
        mass = stats.mass(c)
        if mass <= 0.0:
            lams.append(1.0)
            terms.append(0.0)
            continue
        lam = lambda_c(stats, c, inner[c])
        lams.append(lam)
        terms.append(mass * (binary_entropy(stats.p_ac[0, c] / mass) - binary_entropy(lam)))
    raw = float(sum(terms))
    bound = min(max(raw, 0.0), 1.0)
    return RateReport(
        lam=(lams[0], lams[1]),
        inner2re=inner,
        term=(terms[0], terms[1]),
        bound=bound,
        abort=raw <= 0.0,
        raw_bound=raw,
    )


def depolarization_stats(channel: ChannelModel) -> ObservedStats:
    """Statistics produced by an honest server behind a depolarizing channel."""
    q_fr = channel.q_fr
    return ObservedStats(np.full((2, 2), 0.25), 1.0 - q_fr, q_fr)


def closed_form_rate(q_fr: float) -> float:
    """``max(0, 1 - h(1 - q_fr))``, the bound's value on depolarization statistics."""
    if not (0.0 <= q_fr <= 0.5):
        raise ValueError(f"q_fr must lie in [0, 0.5], got {q_fr!r}")
    return max(0.0, 1.0 - binary_entropy(1.0 - q_fr))


@dataclass(frozen=True)
class CurveRow:
    q: float
    q_fr: float
    rate: float


def rate_curve(q_grid: Iterable[float], mode: str = "dependent") -> list[CurveRow]:
    """Rate versus per-leg noise, evaluated through the full statistics pipeline.

    Rows come back sorted by ``q``.
    """
    rows = []
    for q in sorted(float(x) for x in q_grid):
        ch = ChannelModel(q, mode)
        rows.append(CurveRow(q, ch.q_fr, entropy_bound(depolarization_stats(ch)).bound))
    return rows


def write_curve_csv(path, rows: Sequence[CurveRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Q", "Q_FR", "rate"])
        for r in sorted(rows, key=lambda r: r.q):
            w.writerow([f"{r.q:.17g}", f"{r.q_fr:.17g}", f"{r.rate:.17g}"])


def read_curve_csv(path) -> list[CurveRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [CurveRow(float(r["Q"]), float(r["Q_FR"]), float(r["rate"])) for r in reader]


def asymptotic_output_length(n_raw: int, bound: float, margin: float = 0.0) -> int:
    """``floor(n_raw * (bound - margin))``, never negative.

    The product is rounded to 9 decimals first so that decimal inputs such
    as ``0.531004 - 0.01`` do not lose a bit to binary representation error.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    x = round(n_raw * (bound - margin), 9)
    return max(0, math.floor(x))
