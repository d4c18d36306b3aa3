"""Adversarial-server attacks and the entanglement-based reduction.

Register layout used by every state built here: ``N`` qubits for Alice (A),
then ``N`` qubits for the message/server register (M or C), then one ancilla
subsystem for Eve (E). Message registers hold X-basis kets, written out in
the computational basis; message bit 0 is ``|+>`` and 1 is ``|->``.

Bit strings indexing amplitudes are big-endian: round 1 is the most
significant bit, matching ``np.kron`` ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .bits import as_bits, count_bits, int_to_bits
from .quantum import (
    ATOL,
    HADAMARD,
    KET_0,
    KET_PLUS,
    DensityMatrix,
    QuantumError,
    StateVector,
    ZeroProbabilityError,
    apply_cnot,
    conditional_entropy,
    contract_qubit,
    fidelity,
)
from .rate import MESSAGES, ObservedStats


class InvalidAttackError(ValueError):
    """Attack description violates normalization or isometry constraints."""


def _hadamard_n(n: int) -> np.ndarray:
    return reduce(np.kron, [HADAMARD] * n, np.ones((1, 1), dtype=complex))


def check_schedule(theta, rounds: int | None = None, require_reflect: bool = False) -> np.ndarray:
    """Validate an operation schedule (0 = Reflect, 1 = Measure-Resend)."""
    theta = as_bits(theta)
    if theta.size < 1:
        raise ValueError("schedule must cover at least one round")
    if rounds is not None and theta.size != rounds:
        raise ValueError(f"schedule has {theta.size} rounds, attack has {rounds}")
    if require_reflect and count_bits(theta, 0) == 0:
        raise ValueError("schedule has no Reflect round")
    return theta


# ---------------------------------------------------------------------------
# collective (single-signal) attacks


@dataclass(frozen=True, eq=False)
class CollectiveAttack:
    """One i.i.d. signal ``|mu> = sum_{a,c} |a, c> |e_{a,c}>``.

    ``e[a, c]`` is Eve's (unnormalized) ancilla vector for raw bit ``a`` and
    message ``c``.
    """

    e: np.ndarray

    def __post_init__(self):
        e = np.array(self.e, dtype=complex)
        if e.ndim == 2:
            e = e[..., None]
        if e.shape[:2] != (2, 2) or e.ndim != 3 or e.shape[2] < 1:
            raise InvalidAttackError(f"e must have shape (2, 2, d_E), got {e.shape}")
        e.flags.writeable = False
        object.__setattr__(self, "e", e)
        norm = float(np.sum(np.abs(e) ** 2))
        if abs(norm - 1.0) > ATOL:
            raise InvalidAttackError(f"sum of <e_ac|e_ac> is {norm!r}, expected 1")
        cross = complex(sum(np.vdot(e[0, c], e[1, c]) for c in (0, 1)))
        if abs(cross) > ATOL:
            raise InvalidAttackError(
                f"sum_c <e_0c|e_1c> = {cross!r}; no isometric instrument produces this signal"
            )

    @property
    def ancilla_dim(self) -> int:
        return self.e.shape[2]

    @classmethod
    def from_general(cls, attack: "GeneralAttack") -> "CollectiveAttack":
        """Single-round attack ``e_{a,c} = alpha_a F_{a,c}``."""
        if attack.rounds != 1:
            raise InvalidAttackError("only single-round attacks define a signal state")
        return cls(attack.alpha[:, None, None] * attack.F)

    @classmethod
    def from_dict(cls, d: dict) -> "CollectiveAttack":
        vecs = {k: _complex_vec(v) for k, v in d["e"].items()}
        dim = len(next(iter(vecs.values())))
        e = np.zeros((2, 2, dim), dtype=complex)
        for key, v in vecs.items():
            a, c = key.split(",")
            if len(v) != dim:
                raise InvalidAttackError("ancilla vectors have inconsistent dimensions")
            e[int(a), MESSAGES.index(c)] = v
        return cls(e)

    def to_dict(self) -> dict:
        return {
            "d_E": self.ancilla_dim,
            "e": {f"{a},{MESSAGES[c]}": _complex_list(self.e[a, c]) for a in (0, 1) for c in (0, 1)},
        }


def honest_collective_attack() -> CollectiveAttack:
    """Honest server, noiseless channel: ``e_{a,c} = (-1)^{ac} / 2`` on a trivial ancilla."""
    return CollectiveAttack(np.array([[0.5, 0.5], [0.5, -0.5]])[..., None])


def orthogonal_collective_attack() -> CollectiveAttack:
    """Eve holds four orthogonal flags, so she reads ``a`` perfectly."""
    return CollectiveAttack(0.5 * np.eye(4).reshape(2, 2, 4))


def depolarization_collective_attack(q_fr: float) -> CollectiveAttack:
    """Signal reproducing the statistics of a depolarizing channel with parameter ``q_fr``.

    All ``P_{a,c} = 1/4`` and ``P_{+|acc} = 1 - q_fr``, with real overlaps so the
    entropy bound is tight.
    """
    if not 0.0 <= q_fr <= 0.5:
        raise ValueError(f"q_fr must lie in [0, 0.5], got {q_fr!r}")
    cos = 1.0 - 2.0 * q_fr
    sin = math.sqrt(max(0.0, 1.0 - cos * cos))
    u = np.array([1.0, 0.0])
    v = np.array([cos, sin])
    return CollectiveAttack(0.5 * np.array([[u, u], [v, -v]]))


def sample_collective_attack(ancilla_dim: int, rng: np.random.Generator) -> CollectiveAttack:
    """Random physical signal, drawn through a random single-round general attack."""
    return CollectiveAttack.from_general(sample_random_attack(1, ancilla_dim, rng, d_in=1))


def build_mu(attack: CollectiveAttack) -> StateVector:
    """``|mu>`` on A (qubit) x C (qubit, X-basis message) x E."""
    d = attack.ancilla_dim
    # t[a, c, :] in the message basis; rotate C into the computational basis
    t = np.einsum("kc,ace->ake", HADAMARD, attack.e)
    return StateVector((2, 2, d), t.reshape(-1))


def stats_from_attack(attack: CollectiveAttack) -> ObservedStats:
    e = attack.e
    p_ac = np.array([[np.vdot(e[a, c], e[a, c]).real for c in (0, 1)] for a in (0, 1)])
    p_acc = [
        float(p_ac[0, c] + p_ac[1, c] + 2.0 * np.vdot(e[0, c], e[1, c]).real) for c in (0, 1)
    ]
    return ObservedStats(p_ac, p_acc[0], p_acc[1])


def build_rho_ace(attack: CollectiveAttack) -> DensityMatrix:
    """State after Alice's Z measurement, with the message register made classical."""
    d = attack.ancilla_dim
    rho = np.zeros((4 * d, 4 * d), dtype=complex)
    for a in (0, 1):
        for c in (0, 1):
            v = np.zeros(4 * d, dtype=complex)
            v[(2 * a + c) * d : (2 * a + c + 1) * d] = attack.e[a, c]
            rho += np.outer(v, v.conj())
    return DensityMatrix((2, 2, d), rho)


def exact_conditional_entropy(attack: CollectiveAttack) -> float:
    """``S(A|CE)`` of :func:`build_rho_ace`, by direct diagonalization."""
    return conditional_entropy(build_rho_ace(attack), [0], [1, 2])


# ---------------------------------------------------------------------------
# general N-round attacks


@dataclass(frozen=True, eq=False)
class GeneralAttack:
    """An N-round attack: initial state plus the instrument's isometry on the relevant inputs.

    Attributes
    ----------
    alpha : ndarray, shape (2**N,)
        Amplitudes of Eve's initial state ``sum_a alpha_a |a>|E_a>``.
    E : ndarray, shape (2**N, d_in)
        Unit ancilla states ``E_a``.
    F : ndarray, shape (2**N, 2**N, d_out)
        ``F[a, m]`` is the ancilla paired with message string ``m`` in
        ``U|a, E_a> = sum_m |m, F_{a,m}>``.
    """

    rounds: int
    alpha: np.ndarray
    E: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        n = int(self.rounds)
        if n < 1:
            raise InvalidAttackError("an attack covers at least one round")
        size = 2**n
        alpha = np.array(self.alpha, dtype=complex).reshape(-1)
        E = np.array(self.E, dtype=complex)
        F = np.array(self.F, dtype=complex)
        if E.ndim == 1:
            E = E[:, None]
        if F.ndim == 2:
            F = F[..., None]
        if alpha.shape != (size,) or E.shape[0] != size or F.shape[:2] != (size, size):
            raise InvalidAttackError(
                f"shapes alpha {alpha.shape}, E {E.shape}, F {F.shape} do not fit {n} rounds"
            )
        for arr in (alpha, E, F):
            arr.flags.writeable = False
        object.__setattr__(self, "rounds", n)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)
        total = float(np.sum(np.abs(alpha) ** 2))
        if abs(total - 1.0) > ATOL:
            raise InvalidAttackError(f"sum |alpha_a|^2 = {total!r}, expected 1")
        norms = np.linalg.norm(E, axis=1)
        if np.max(np.abs(norms - 1.0)) > ATOL:
            raise InvalidAttackError("ancilla states E_a must be normalized")
        gram = self.images().conj() @ self.images().T
        err = float(np.max(np.abs(gram - np.eye(size))))
        if err > ATOL:
            raise InvalidAttackError(
                f"instrument is not isometric on |a, E_a>: max |Gram - I| = {err:.3g}"
            )

    @property
    def d_in(self) -> int:
        return self.E.shape[1]

    @property
    def d_out(self) -> int:
        return self.F.shape[2]

    def images(self) -> np.ndarray:
        """Rows ``sum_m |m>|F_{a,m}>`` in the message-index basis, shape (2**N, 2**N * d_out)."""
        return self.F.reshape(2**self.rounds, -1)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneralAttack":
        n = int(d["rounds"])
        size = 2**n
        alpha = _complex_vec(d["alpha"])
        d_in, d_out = int(d["d_in"]), int(d["d_out"])
        E = np.zeros((size, d_in), dtype=complex)
        F = np.zeros((size, size, d_out), dtype=complex)
        try:
            for a in range(size):
                E[a] = _complex_vec(d["E"][_bitkey(a, n)])
                for m in range(size):
                    key = f"{_bitkey(a, n)},{_bitkey(m, n)}"
                    F[a, m] = _complex_vec(d["F"][key])
        except KeyError as exc:
            raise InvalidAttackError(f"attack file is missing entry {exc}") from None
        except ValueError as exc:
            raise InvalidAttackError(str(exc)) from None
        return cls(n, alpha, E, F)

    def to_dict(self) -> dict:
        n, size = self.rounds, 2**self.rounds
        return {
            "rounds": n,
            "d_in": self.d_in,
            "d_out": self.d_out,
            "alpha": _complex_list(self.alpha),
            "E": {_bitkey(a, n): _complex_list(self.E[a]) for a in range(size)},
            "F": {
                f"{_bitkey(a, n)},{_bitkey(m, n)}": _complex_list(self.F[a, m])
                for a in range(size)
                for m in range(size)
            },
        }


def honest_attack(rounds: int) -> GeneralAttack:
    """Honest server: sends ``|+>^N`` and measures returning qubits in the X basis."""
    size = 2**rounds
    alpha = np.full(size, 2.0 ** (-rounds / 2))
    E = np.ones((size, 1))
    # <m|a> for X-basis messages is prod_i (-1)^{m_i a_i} / sqrt(2)
    parity = np.array([[bin(a & m).count("1") % 2 for m in range(size)] for a in range(size)])
    F = ((-1.0) ** parity * 2.0 ** (-rounds / 2))[..., None]
    return GeneralAttack(rounds, alpha, E, F)


def product_attack(single: GeneralAttack, rounds: int) -> GeneralAttack:
    """Repeat a one-round attack independently on every round (a collective attack)."""
    if single.rounds != 1:
        raise InvalidAttackError("product_attack expects a single-round attack")
    alpha, E, F = single.alpha, single.E, single.F
    for _ in range(rounds - 1):
        alpha = np.kron(alpha, single.alpha)
        E = np.einsum("ai,bj->abij", E, single.E).reshape(alpha.size, -1)
        k = F.shape[0]
        F = np.einsum("amx,bny->abmnxy", F, single.F).reshape(k * 2, k * 2, -1)
    return GeneralAttack(rounds, alpha, E, F)


def sample_random_attack(
    rounds: int, d_out: int, rng: np.random.Generator, d_in: int = 2
) -> GeneralAttack:
    """Random attack satisfying every GeneralAttack invariant.

    ``alpha`` and ``E_a`` are normalized complex Gaussians; the isometry images
    are orthonormal columns of a QR factorization of a complex Gaussian matrix.
    """
    if rounds < 1 or d_out < 1 or d_in < 1:
        raise ValueError("rounds, d_out and d_in must be positive")
    size = 2**rounds
    if size * size * d_out > 2**20:
        raise ValueError(f"attack with {rounds} rounds and d_out={d_out} is too large")

    def gauss(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    alpha = gauss(size)
    alpha /= np.linalg.norm(alpha)
    E = gauss(size, d_in)
    E /= np.linalg.norm(E, axis=1, keepdims=True)
    q, _ = np.linalg.qr(gauss(size * d_out, size))
    F = q.T.reshape(size, size, d_out)
    return GeneralAttack(rounds, alpha, E, F)


def build_sqrng_state(attack: GeneralAttack, theta) -> StateVector:
    """Purified prepare-and-measure state on A x M x E after Eve's instrument.

    Built operationally: Eve's transit qubits start entangled with her ancilla,
    Alice CNOTs each Measure-Resend qubit onto a fresh private qubit, and the
    instrument isometry acts on transit plus ancilla.
    """
    n = attack.rounds
    theta = check_schedule(theta, n)
    size = 2**n
    # |0..0>_A (x) sum_a alpha_a |a>_T |E_a>, subsystems A_1..A_N, T_1..T_N, E_in
    initial = (attack.alpha[:, None] * attack.E).reshape(-1)
    amps = np.kron(np.eye(size)[0], initial)
    psi = StateVector((2,) * (2 * n) + (attack.d_in,), amps)
    for i in range(n):
        if theta[i]:
            psi = apply_cnot(psi, control=n + i, target=i)
    # U = sum_a |Phi_a><a, E_a| with Phi_a rotated into the computational basis
    basis_in = np.einsum("ab,ax->abx", np.eye(size), attack.E).reshape(size, -1)
    images = attack.F.reshape(size, size, -1)
    images = np.einsum("km,amx->akx", _hadamard_n(n), images).reshape(size, -1)
    U = images.T @ basis_in.conj()
    out = psi.amplitudes.reshape(size, -1) @ U.T
    return StateVector((2,) * (2 * n) + (attack.d_out,), out.reshape(-1))


def build_eqrng_state(attack: GeneralAttack) -> StateVector:
    """``|tau> = sum_a alpha_a |a>_A sum_m |m, F_{a,m}>_{CE}`` (independent of the schedule)."""
    n = attack.rounds
    t = attack.alpha[:, None, None] * attack.F
    t = np.einsum("km,amx->akx", _hadamard_n(n), t)
    return StateVector((2,) * (2 * n) + (attack.d_out,), t.reshape(-1))


def accept_and_condition(tau: StateVector, theta) -> tuple[float, StateVector]:
    """Project every Reflect position of Alice's register onto ``|+>`` and drop it.

    Returns the joint acceptance probability and the renormalized remainder.
    """
    theta = as_bits(theta)
    n = theta.size
    if tau.n_subsystems < n or any(d != 2 for d in tau.dims[:n]):
        raise QuantumError(f"state with dims {tau.dims} has no {n}-qubit A register")
    amps = tau.tensor()
    dims = list(tau.dims)
    # contract from the highest index down so earlier positions keep their axis
    for i in sorted(np.flatnonzero(theta == 0), reverse=True):
        amps = np.tensordot(KET_PLUS.conj(), amps, axes=([0], [i]))
        del dims[i]
    prob = float(np.vdot(amps, amps).real)
    if prob < 1e-15:
        raise ZeroProbabilityError("acceptance has zero probability")
    return prob, StateVector(dims, amps.reshape(-1) / math.sqrt(prob))


def strip_reflect_positions(psi: StateVector, theta) -> StateVector:
    """Remove Alice's Reflect-position qubits, which must be in ``|0>``."""
    theta = as_bits(theta)
    amps = psi
    for i in sorted(np.flatnonzero(theta == 0), reverse=True):
        rest = contract_qubit(amps, int(i), KET_0)
        weight = float(np.vdot(rest, rest).real)
        if abs(weight - 1.0) > ATOL:
            raise QuantumError(f"Reflect position {i} is not in |0> (weight {weight:.3g})")
        amps = StateVector(amps.dims[:i] + amps.dims[i + 1 :], rest.reshape(-1), normalize=True)
    return amps


@dataclass(frozen=True)
class ReductionReport:
    accept_probability: float
    expected_accept: float
    state_fidelity: float
    passed: bool
    tol: float

    @property
    def accept_error(self) -> float:
        return abs(self.accept_probability - self.expected_accept)

    def to_dict(self) -> dict:
        return {
            "accept_probability": self.accept_probability,
            "expected_accept": self.expected_accept,
            "state_fidelity": self.state_fidelity,
            "passed": self.passed,
            "tol": self.tol,
        }


def verify_reduction(attack: GeneralAttack, theta, tol: float = 1e-9) -> ReductionReport:
    """Check the prepare-and-measure / entanglement-based correspondence for one schedule.

    The acceptance probability must equal ``2**-ct0(theta)`` and the accepted
    entanglement-based state must coincide with the prepare-and-measure state
    once Alice's Reflect-position qubits are removed from both.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    theta = check_schedule(theta, attack.rounds)
    prob, tau_cond = accept_and_condition(build_eqrng_state(attack), theta)
    psi = strip_reflect_positions(build_sqrng_state(attack, theta), theta)
    fid = fidelity(tau_cond, psi)
    expected = 2.0 ** (-count_bits(theta, 0))
    passed = abs(prob - expected) <= tol and fid >= 1.0 - tol
    return ReductionReport(prob, expected, fid, passed, tol)


def product_factorization_fidelity(single: GeneralAttack, rounds: int) -> float:
    """Fidelity between ``|tau>`` of the product attack and ``|tau_0>^{(x) N}``.

    The product attack's registers are regrouped round by round before comparing.
    """
    tau0 = build_eqrng_state(single)
    tau = build_eqrng_state(product_attack(single, rounds))
    d = single.d_out
    t = tau.amplitudes.reshape((2,) * (2 * rounds) + (d,) * rounds)
    order = [ax for i in range(rounds) for ax in (i, rounds + i, 2 * rounds + i)]
    regrouped = np.transpose(t, order).reshape(-1)
    ref = reduce(np.kron, [tau0.amplitudes] * rounds)
    return float(abs(np.vdot(ref, regrouped)) ** 2)


def _bitkey(x: int, width: int) -> str:
    return "".join(str(b) for b in int_to_bits(x, width))


def _complex_vec(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidAttackError("complex vectors are lists of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def _complex_list(vec) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec, dtype=complex).reshape(-1)]
