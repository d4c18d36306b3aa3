"""Dense state-vector and density-matrix primitives on small qubit registers.

Everything here is a pure function of its inputs. States are stored as dense
numpy arrays together with an explicit list of subsystem dimensions, ordered
so that ``np.kron`` of the factors (left to right) gives the joint amplitudes.

Entropies are in bits.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-9
EIG_CLIP = 1e-9
ZERO_PROB = 1e-15

SQRT_HALF = 1.0 / math.sqrt(2.0)
KET_0 = np.array([1.0, 0.0], dtype=complex)
KET_1 = np.array([0.0, 1.0], dtype=complex)
KET_PLUS = np.array([SQRT_HALF, SQRT_HALF], dtype=complex)
KET_MINUS = np.array([SQRT_HALF, -SQRT_HALF], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) * SQRT_HALF

# basis -> outcome bit -> ket; X outcome 0 is "+", 1 is "-"
BASIS_KETS = {
    "Z": (KET_0, KET_1),
    "X": (KET_PLUS, KET_MINUS),
}


class QuantumError(ValueError):
    """Invalid quantum object or operation."""


class ZeroProbabilityError(QuantumError):
    """Raised when asked to condition on an outcome of (numerically) zero probability."""


def max_dimension() -> int:
    """Largest total Hilbert-space dimension we are willing to allocate.

    Defaults to 2**14; override with the ``SQRNG_MAX_DIM`` environment variable.
    """
    return int(os.environ.get("SQRNG_MAX_DIM", 2**14))


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise QuantumError("at least one subsystem is required")
    if any(d < 1 for d in dims):
        raise QuantumError(f"subsystem dimensions must be positive, got {dims}")
    total = math.prod(dims)
    if total > max_dimension():
        raise QuantumError(
            f"total dimension {total} exceeds the configured cap {max_dimension()}"
        )
    return dims


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state on a tensor product of subsystems.

    Parameters
    ----------
    dims : sequence of int
        Subsystem dimensions, in tensor order.
    amplitudes : array_like
        Complex amplitudes of length ``prod(dims)``.
    """

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __init__(self, dims: Sequence[int], amplitudes, *, normalize: bool = False):
        dims = _check_dims(dims)
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise QuantumError(
                f"{amps.size} amplitudes do not match dimensions {dims}"
            )
        norm = float(np.linalg.norm(amps))
        if normalize:
            if norm < ZERO_PROB:
                raise ZeroProbabilityError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > ATOL:
            raise QuantumError(f"state is not normalized (norm {norm!r})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amplitudes.reshape(self.dims)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.dims, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:
        return f"StateVector(dims={self.dims})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state on a tensor product of subsystems."""

    dims: tuple[int, ...]
    entries: np.ndarray

    def __init__(self, dims: Sequence[int], entries):
        dims = _check_dims(dims)
        rho = np.asarray(entries, dtype=complex)
        d = math.prod(dims)
        if rho.shape != (d, d):
            raise QuantumError(f"matrix shape {rho.shape} does not match dimensions {dims}")
        if not np.allclose(rho, rho.conj().T, atol=ATOL, rtol=0):
            raise QuantumError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > ATOL:
            raise QuantumError(f"density matrix has trace {tr!r}")
        lowest = np.linalg.eigvalsh(rho).min()
        if lowest < -EIG_CLIP:
            raise QuantumError(f"density matrix has negative eigenvalue {lowest!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", _frozen(rho))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


def basis_state(dims: Sequence[int], digits: Sequence[int]) -> StateVector:
    """Computational basis ket ``|digits>`` on the given subsystems."""
    dims = tuple(dims)
    amps = np.zeros(math.prod(dims), dtype=complex)
    amps[np.ravel_multi_index(tuple(digits), dims)] = 1.0
    return StateVector(dims, amps)


def qubit(label: str) -> StateVector:
    """One of ``'0'``, ``'1'``, ``'+'``, ``'-'``."""
    kets = {"0": KET_0, "1": KET_1, "+": KET_PLUS, "-": KET_MINUS}
    return StateVector((2,), kets[label])


def tensor(*states):
    """Tensor product of StateVectors, or of DensityMatrices."""
    if not states:
        raise QuantumError("tensor of nothing")
    dims: tuple[int, ...] = ()
    if all(isinstance(s, StateVector) for s in states):
        amps = np.ones(1, dtype=complex)
        for s in states:
            amps = np.kron(amps, s.amplitudes)
            dims += s.dims
        return StateVector(dims, amps)
    if all(isinstance(s, DensityMatrix) for s in states):
        rho = np.ones((1, 1), dtype=complex)
        for s in states:
            rho = np.kron(rho, s.entries)
            dims += s.dims
        return DensityMatrix(dims, rho)
    raise QuantumError("cannot mix StateVector and DensityMatrix in a tensor product")


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """Squared overlap ``|<psi|phi>|^2`` of two pure states with equal dims."""
    if psi.dims != phi.dims:
        raise QuantumError(f"dimension mismatch {psi.dims} vs {phi.dims}")
    return float(abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2)


def binary_entropy(p: float) -> float:
    """Binary Shannon entropy ``h(p)`` in bits, with ``0 log 0 = 0``.

    >>> binary_entropy(0.5)
    1.0
    """
    p = float(p)
    if not (-1e-12 <= p <= 1.0 + 1e-12):
        raise ValueError(f"probability out of range: {p!r}")
    p = min(max(p, 0.0), 1.0)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def depolarize(rho: DensityMatrix, q: float) -> DensityMatrix:
    """Single-qubit depolarizing channel ``rho -> (1 - 2q) rho + q I``."""
    if rho.dims != (2,):
        raise QuantumError(f"depolarize acts on a single qubit, got dims {rho.dims}")
    if not (0.0 <= q <= 0.5):
        raise ValueError(f"depolarization parameter must lie in [0, 0.5], got {q!r}")
    out = (1.0 - 2.0 * q) * rho.entries + q * np.eye(2)
    return DensityMatrix((2,), out)


def _subsystem_set(indices: list[int], n: int, what: str) -> list[int]:
    idx = sorted(set(int(i) for i in indices))
    if len(idx) != len(indices):
        raise QuantumError(f"repeated subsystem index in {what}")
    if any(i < 0 or i >= n for i in idx):
        raise QuantumError(f"{what} index out of range for {n} subsystems: {idx}")
    return idx


def partial_trace(rho: DensityMatrix | StateVector, keep: Iterable[int]) -> DensityMatrix:
    """Reduce to the subsystems listed in ``keep`` (kept in their original order)."""
    if isinstance(rho, StateVector):
        return _partial_trace_pure(rho, keep)
    keep = _subsystem_set(list(keep), rho.n_subsystems, "keep")
    if not keep:
        raise QuantumError("keep must name at least one subsystem")
    n = rho.n_subsystems
    dims = rho.dims
    t = rho.entries.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # einsum labels: row indices then column indices, traced pairs share a label
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    row = [next(letters) for _ in range(n)]
    col = [row[i] if i in traced else next(letters) for i in range(n)]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    kd = tuple(dims[i] for i in keep)
    d = math.prod(kd)
    return DensityMatrix(kd, reduced.reshape(d, d))


def _partial_trace_pure(psi: StateVector, keep: Iterable[int]) -> DensityMatrix:
    keep = _subsystem_set(list(keep), psi.n_subsystems, "keep")
    if not keep:
        raise QuantumError("keep must name at least one subsystem")
    traced = [i for i in range(psi.n_subsystems) if i not in keep]
    t = np.transpose(psi.tensor(), keep + traced)
    kd = tuple(psi.dims[i] for i in keep)
    m = t.reshape(math.prod(kd), -1)
    return DensityMatrix(kd, m @ m.conj().T)


def _spectrum(rho: DensityMatrix) -> np.ndarray:
    w = np.linalg.eigvalsh(rho.entries)
    if w.min() < -EIG_CLIP:
        raise QuantumError(f"negative eigenvalue {w.min()!r} beyond clipping tolerance")
    return np.clip(w, 0.0, None)


def von_neumann_entropy(rho: DensityMatrix | StateVector) -> float:
    """``-tr(rho log2 rho)``; eigenvalues below 1e-12 contribute nothing."""
    if isinstance(rho, StateVector):
        return 0.0
    w = _spectrum(rho)
    w = w[w > 1e-12]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def conditional_entropy(
    rho: DensityMatrix | StateVector, part_a: Iterable[int], part_b: Iterable[int]
) -> float:
    """``S(A|B) = S(AB) - S(B)`` for a state on exactly the subsystems ``A ∪ B``."""
    part_a, part_b = list(part_a), list(part_b)
    n = rho.n_subsystems
    a = _subsystem_set(part_a, n, "part_a")
    b = _subsystem_set(part_b, n, "part_b")
    if set(a) & set(b):
        raise QuantumError(f"partitions overlap: {a} and {b}")
    if set(a) | set(b) != set(range(n)):
        raise QuantumError("partitions must cover every subsystem")
    if not a:
        raise QuantumError("part_a must be nonempty")
    s_ab = von_neumann_entropy(rho)
    s_b = von_neumann_entropy(partial_trace(rho, b)) if b else 0.0
    return s_ab - s_b


def _check_qubit(psi: StateVector, index: int) -> None:
    if not 0 <= index < psi.n_subsystems:
        raise QuantumError(f"subsystem {index} out of range for {psi.n_subsystems} subsystems")
    if psi.dims[index] != 2:
        raise QuantumError(f"subsystem {index} has dimension {psi.dims[index]}, not a qubit")


def apply_cnot(psi: StateVector, control: int, target: int) -> StateVector:
    """CNOT with the given control and target qubit subsystems."""
    _check_qubit(psi, control)
    _check_qubit(psi, target)
    if control == target:
        raise QuantumError("control and target must differ")
    t = np.array(psi.tensor())
    sel = [slice(None)] * psi.n_subsystems
    sel[control] = 1
    sub = t[tuple(sel)]
    # target axis shifts down by one once the control axis is indexed away
    axis = target if target < control else target - 1
    t[tuple(sel)] = np.flip(sub, axis=axis)
    return StateVector(psi.dims, t.reshape(-1))


def contract_qubit(psi: StateVector, index: int, bra: np.ndarray) -> np.ndarray:
    """Unnormalized amplitudes after applying ``<bra|`` to one qubit (which is removed)."""
    _check_qubit(psi, index)
    return np.tensordot(np.conj(bra), psi.tensor(), axes=([0], [index]))


def project_qubit(
    psi: StateVector, index: int, basis: str, outcome: int
) -> tuple[float, StateVector]:
    """Measure one qubit in the Z or X basis and condition on ``outcome``.

    X-basis outcome 0 is ``|+>``, outcome 1 is ``|->``.

    Returns
    -------
    probability : float
        Born probability of the outcome.
    state : StateVector
        Renormalized post-measurement state; the measured qubit is left in the
        corresponding eigenstate.

    Raises
    ------
    ZeroProbabilityError
        If the outcome has probability below 1e-15.
    """
    if basis not in BASIS_KETS:
        raise QuantumError(f"unknown basis {basis!r}")
    if outcome not in (0, 1):
        raise QuantumError(f"outcome must be 0 or 1, got {outcome!r}")
    ket = BASIS_KETS[basis][outcome]
    rest = contract_qubit(psi, index, ket)
    prob = float(np.vdot(rest, rest).real)
    if prob < ZERO_PROB:
        raise ZeroProbabilityError(
            f"outcome {outcome} in basis {basis} on subsystem {index} has probability {prob:.3g}"
        )
    post = np.multiply.outer(ket, rest)
    post = np.moveaxis(post, 0, index)
    return prob, StateVector(psi.dims, post.reshape(-1) / math.sqrt(prob))


def outcome_probability(rho: DensityMatrix, basis: str, outcome: int) -> float:
    """Born probability of a Z- or X-basis outcome on a single-qubit mixed state."""
    if rho.dims != (2,):
        raise QuantumError(f"expected a single qubit, got dims {rho.dims}")
    ket = BASIS_KETS[basis][outcome]
    return float(np.vdot(ket, rho.entries @ ket).real)


def random_state(dims: Sequence[int], rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    d = math.prod(dims)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return StateVector(dims, v, normalize=True)


def random_density(dims: Sequence[int], rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from a Ginibre ensemble of the given rank."""
    d = math.prod(dims)
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return DensityMatrix(dims, rho / np.trace(rho).real)
