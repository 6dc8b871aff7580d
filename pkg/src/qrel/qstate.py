"""Dense state-vector engine.

Amplitudes live in a complex128 array indexed by the basis integer, with
qubit 0 as the least significant bit. Every operation returns a new
:class:`StateVector`; inputs are never mutated.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Sequence

import numpy as np

from .errors import QrelError, QubitBudgetExceeded, TargetNotZero, ZeroNorm

log = logging.getLogger(__name__)

DEFAULT_MAX_QUBITS = 24
NORM_TOL = 1e-10

SQRT2_2 = math.sqrt(2) / 2
# Two-input combiner as printed; rows are not orthonormal.
MIX_MATRIX = np.array(
    [
        [1, 0, 0, 0],
        [SQRT2_2, SQRT2_2, 0, 0],
        [0, 0, SQRT2_2, SQRT2_2],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)

Marked = Callable[[int], bool] | Iterable[int] | np.ndarray


class StateVector:
    """An n-qubit pure state stored as 2**n complex amplitudes."""

    __slots__ = ("num_qubits", "_amps", "audit_log")

    def __init__(
        self,
        num_qubits: int,
        amplitudes,
        *,
        max_qubits: int = DEFAULT_MAX_QUBITS,
        audit_log: Sequence[str] = (),
        normalize: bool = False,
    ):
        if num_qubits < 1:
            raise QrelError("a register needs at least one qubit")
        if num_qubits > max_qubits:
            raise QubitBudgetExceeded(num_qubits, max_qubits, "state vector")
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << num_qubits:
            raise QrelError(
                f"expected {1 << num_qubits} amplitudes for {num_qubits} qubits, "
                f"got {amps.shape[0]}"
            )
        self.num_qubits = num_qubits
        self.audit_log = list(audit_log)
        norm2 = float(np.vdot(amps, amps).real)
        if norm2 == 0.0:
            raise ZeroNorm("state has zero norm")
        if normalize or abs(norm2 - 1.0) > NORM_TOL:
            if not normalize:
                log.debug("renormalizing state, |psi|^2 = %r", norm2)
                self.audit_log.append(f"renormalize: norm^2 was {norm2!r}")
            amps = amps / math.sqrt(norm2)
        amps.setflags(write=False)
        self._amps = amps

    @classmethod
    def basis(cls, num_qubits: int, index: int, **kw) -> StateVector:
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps, **kw)

    @classmethod
    def uniform(cls, num_qubits: int, **kw) -> StateVector:
        dim = 1 << num_qubits
        return cls(num_qubits, np.full(dim, 1 / math.sqrt(dim), dtype=np.complex128), **kw)

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def dim(self) -> int:
        return self._amps.shape[0]

    def probabilities(self) -> np.ndarray:
        return np.abs(self._amps) ** 2

    def norm(self) -> float:
        return math.sqrt(float(np.vdot(self._amps, self._amps).real))

    def _derive(self, amps: np.ndarray, event: str | None = None) -> StateVector:
        logged = self.audit_log + [event] if event else self.audit_log
        return StateVector(
            self.num_qubits, amps, max_qubits=max(self.num_qubits, DEFAULT_MAX_QUBITS),
            audit_log=logged,
        )

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits})"


def qubit_indices(indices: Iterable[int], num_qubits: int) -> tuple[int, ...]:
    """Validate a qubit index set and return it sorted."""
    idx = tuple(sorted(indices))
    if len(set(idx)) != len(idx):
        raise QrelError(f"duplicate qubit indices in {idx}")
    for q in idx:
        if not 0 <= q < num_qubits:
            raise QrelError(f"qubit {q} out of range for {num_qubits} qubits")
    return idx


def marked_mask(marked: Marked, dim: int) -> np.ndarray:
    """Turn a predicate, index collection or boolean array into a boolean mask."""
    if isinstance(marked, np.ndarray) and marked.dtype == bool:
        if marked.shape != (dim,):
            raise QrelError(f"mask has shape {marked.shape}, expected ({dim},)")
        return marked
    if callable(marked):
        return np.fromiter((bool(marked(i)) for i in range(dim)), dtype=bool, count=dim)
    mask = np.zeros(dim, dtype=bool)
    for i in marked:
        mask[i] = True
    return mask


def apply_phase_flip(state: StateVector, marked: Marked) -> StateVector:
    mask = marked_mask(marked, state.dim)
    amps = state.amplitudes.copy()
    amps[mask] = -amps[mask]
    return state._derive(amps)


def apply_diffusion(state: StateVector) -> StateVector:
    """Inversion about the mean amplitude: a_i -> 2*mean(a) - a_i."""
    a = state.amplitudes
    return state._derive(2 * a.mean() - a)


def apply_reflection(state: StateVector, about: StateVector) -> StateVector:
    """Reflect about a reference state: psi -> 2<ref|psi> ref - psi.

    With the uniform state as reference this equals :func:`apply_diffusion`.
    """
    if about.num_qubits != state.num_qubits:
        raise QrelError("reflection reference has a different register size")
    ref = about.amplitudes
    overlap = np.vdot(ref, state.amplitudes)
    return state._derive(2 * overlap * ref - state.amplitudes)


def apply_cnot_copy(
    state: StateVector, source: Iterable[int], target: Iterable[int]
) -> StateVector:
    """XOR each source qubit into the matching target qubit (pairwise, in order)."""
    src = qubit_indices(source, state.num_qubits)
    tgt = qubit_indices(target, state.num_qubits)
    if len(src) != len(tgt):
        raise QrelError("source and target must have the same number of qubits")
    if set(src) & set(tgt):
        raise QrelError("source and target qubits overlap")

    idx = np.arange(state.dim)
    tmask = sum(1 << t for t in tgt)
    occupied = state.amplitudes != 0
    if np.any(occupied & ((idx & tmask) != 0)):
        raise TargetNotZero("a target qubit is not in |0> for some populated basis state")

    dest = idx.copy()
    for s, t in zip(src, tgt):
        dest ^= ((idx >> s) & 1) << t
    amps = np.zeros_like(state.amplitudes)
    amps[dest] = state.amplitudes
    return state._derive(amps)


def measure_all(state: StateVector, rng_seed: int) -> int:
    rng = np.random.default_rng(rng_seed)
    p = state.probabilities()
    return int(rng.choice(state.dim, p=p / p.sum()))


def marginal_distribution(state: StateVector, keep: Iterable[int]) -> dict[int, float]:
    """Probability of each bit pattern over ``keep``.

    Bit j of a pattern is the value of the j-th kept qubit in increasing
    qubit order. Patterns with zero probability are omitted.
    """
    kept = qubit_indices(keep, state.num_qubits)
    if not kept:
        raise QrelError("keep must name at least one qubit")
    probs = state.probabilities()
    if kept == tuple(range(state.num_qubits)):
        return {int(i): float(probs[i]) for i in np.flatnonzero(probs)}
    idx = np.arange(state.dim)
    pattern = np.zeros(state.dim, dtype=np.int64)
    for j, q in enumerate(kept):
        pattern |= ((idx >> q) & 1) << j
    sums = np.bincount(pattern, weights=probs, minlength=1 << len(kept))
    return {int(b): float(sums[b]) for b in np.flatnonzero(sums)}


def _pair_product(state: StateVector, matrix: np.ndarray, qubit_a: int, qubit_b: int) -> np.ndarray:
    if qubit_a == qubit_b:
        raise QrelError("qubit_a and qubit_b must differ")
    qubit_indices((qubit_a, qubit_b), state.num_qubits)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (4, 4):
        raise QrelError("expected a 4x4 matrix")
    idx = np.arange(state.dim)
    base = idx[((idx >> qubit_a) & 1 == 0) & ((idx >> qubit_b) & 1 == 0)]
    ma, mb = 1 << qubit_a, 1 << qubit_b
    cols = [base, base | mb, base | ma, base | ma | mb]
    block = matrix @ np.stack([state.amplitudes[c] for c in cols])
    out = np.empty_like(state.amplitudes)
    for k, c in enumerate(cols):
        out[c] = block[k]
    return out


def apply_two_qubit_matrix(
    state: StateVector, matrix: np.ndarray, qubit_a: int, qubit_b: int, event: str = "matrix"
) -> StateVector:
    """Apply a 4x4 matrix to a qubit pair and renormalize.

    The pair's local index is 2*bit(a) + bit(b), so ``qubit_a`` is the high bit.
    Non-unitary matrices are allowed; the rescale is recorded in the audit log.
    """
    amps = _pair_product(state, matrix, qubit_a, qubit_b)
    norm2 = float(np.vdot(amps, amps).real)
    if norm2 == 0.0:
        raise ZeroNorm("the matrix annihilates the state")
    log.debug("%s on qubits (%d, %d), pre-normalization norm^2 %r", event, qubit_a, qubit_b, norm2)
    return StateVector(
        state.num_qubits,
        amps / math.sqrt(norm2),
        max_qubits=max(state.num_qubits, DEFAULT_MAX_QUBITS),
        audit_log=state.audit_log + [f"{event}({qubit_a},{qubit_b}): non-unitary, norm^2 {norm2!r}"],
    )


def mix_matrix_unnormalized(state: StateVector, qubit_a: int, qubit_b: int) -> np.ndarray:
    """Raw product of the MIX matrix with the state, before renormalization."""
    return _pair_product(state, MIX_MATRIX, qubit_a, qubit_b)


def mix_matrix_apply(state: StateVector, qubit_a: int, qubit_b: int) -> StateVector:
    return apply_two_qubit_matrix(state, MIX_MATRIX, qubit_a, qubit_b, "mix_matrix")
