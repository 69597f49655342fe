"""Dense N-qubit statevector simulation.

States are complex amplitude vectors over the 2^N computational basis,
with site n mapped to bit n of the basis index (site 0 least significant)
and |0> at a site being the Z = +1 eigenstate.  Pauli strings act as a
permutation of the basis combined with a per-index phase, so every
operation here is O(2^N).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import PauliString, PauliSum, PhasedString, Y, Z

NORM_TOL = 1e-10


@dataclass
class QuantumState:
    """Amplitude vector over the computational basis of n_sites qubits."""

    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_sites,):
            raise ValueError(
                f"amplitude vector has length {self.amplitudes.shape}, expected 2^{self.n_sites}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        return QuantumState(self.n_sites, self.amplitudes / self.norm())

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_sites, self.amplitudes.copy())

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.amplitudes.imag)))


@dataclass(frozen=True)
class ShotCounts:
    """Computational-basis measurement record; bitstring keys show site N-1 first."""

    shots: int
    counts: dict[str, int]
    seed: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts must add up to the number of shots")


def basis_state(i: int, n_sites: int) -> QuantumState:
    """The computational basis state with index i."""
    dim = 2**n_sites
    if not 0 <= i < dim:
        raise ValueError(f"basis index {i} out of range for {n_sites} sites")
    amps = np.zeros(dim, dtype=complex)
    amps[i] = 1.0
    return QuantumState(n_sites, amps)


def random_real_state(n_sites: int, rng: np.random.Generator) -> QuantumState:
    """Haar-uniform state on the real unit sphere (real Gaussian, normalized)."""
    v = rng.standard_normal(2**n_sites)
    return QuantumState(n_sites, (v / np.linalg.norm(v)).astype(complex))


@lru_cache(maxsize=None)
def _string_action(letters: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """(perm, phase) such that (P|phi>)[i] = phase[i] * phi[perm[i]]."""
    n = len(letters)
    idx = np.arange(2**n)
    flip = 0
    phase = np.ones(2**n, dtype=complex)
    for site, letter in enumerate(letters):
        bit = (idx >> site) & 1
        if letter == 1:  # X
            flip |= 1 << site
        elif letter == Y:
            flip |= 1 << site
            phase = phase * np.where(bit == 1, 1j, -1j)
        elif letter == Z:
            phase = phase * np.where(bit == 1, -1.0, 1.0)
    perm = idx ^ flip
    return perm, phase


def apply_string(state: QuantumState, ps: PauliString) -> QuantumState:
    """Apply a bare Pauli string to a state."""
    if ps.n_sites != state.n_sites:
        raise ValueError("state and string act on different site counts")
    perm, phase = _string_action(ps.letters)
    return QuantumState(state.n_sites, phase * state.amplitudes[perm])


def apply_phased_string(state: QuantumState, ps: PhasedString) -> QuantumState:
    """Apply a phase-carrying Pauli string to a state."""
    out = apply_string(state, ps.string)
    out.amplitudes *= ps.phase
    return out


def apply_rotation(state: QuantumState, p: PauliString, theta: float) -> QuantumState:
    """Apply exp(-i*theta*P) exactly: cos(theta)*state - i*sin(theta)*(P state)."""
    if p.n_sites != state.n_sites:
        raise ValueError("state and string act on different site counts")
    if not np.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    perm, phase = _string_action(p.letters)
    amps = state.amplitudes
    out = np.cos(theta) * amps + (-1j * np.sin(theta)) * (phase * amps[perm])
    return QuantumState(state.n_sites, out)


def expectation(state: QuantumState, op: PauliSum | PauliString) -> complex:
    """<state|op|state> computed exactly; real up to rounding for Hermitian op."""
    if isinstance(op, PauliString):
        op = PauliSum(op.n_sites, {op.packed_index: 1.0})
    if op.n_sites != state.n_sites:
        raise ValueError("state and operator act on different site counts")
    amps = state.amplitudes
    conj = amps.conj()
    val = 0.0 + 0.0j
    for j, c in op.terms.items():
        perm, phase = _string_action(
            tuple((j // 4**n) % 4 for n in range(op.n_sites))
        )
        val += c * np.dot(conj, phase * amps[perm])
    return complex(val)


def sample(state: QuantumState, shots: int, seed: int) -> ShotCounts:
    """Draw computational-basis shots i.i.d. with probability |amplitude|^2."""
    if shots < 1:
        raise ValueError("shots must be positive")
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(len(probs), size=shots, p=probs)
    values, counts = np.unique(outcomes, return_counts=True)
    n = state.n_sites
    return ShotCounts(
        shots=shots,
        counts={format(int(v), f"0{n}b"): int(c) for v, c in zip(values, counts)},
        seed=seed,
    )


def _diagonal_eigenvalues(op: PauliSum) -> np.ndarray:
    """Eigenvalue of a Z/identity-only sum on every basis index."""
    dim = 2**op.n_sites
    idx = np.arange(dim)
    eig = np.zeros(dim)
    for j, c in op.terms.items():
        letters = tuple((j // 4**n) % 4 for n in range(op.n_sites))
        if any(l not in (0, Z) for l in letters):
            raise ValueError(
                f"operator term {PauliString(letters)} is not Z-diagonal; "
                "shot estimation only supports Z/identity observables"
            )
        term = np.ones(dim)
        for site, l in enumerate(letters):
            if l == Z:
                term = term * (1 - 2 * ((idx >> site) & 1))
        eig += c.real * term
    return eig


def estimate_diagonal(counts: ShotCounts, op: PauliSum) -> float:
    """Counts-weighted average of the diagonal eigenvalues of op."""
    eig = _diagonal_eigenvalues(op)
    total = 0.0
    for bits, c in counts.counts.items():
        total += c * eig[int(bits, 2)]
    return total / counts.shots


def estimate_diagonal_variance(counts: ShotCounts, op: PauliSum) -> float:
    """Plug-in variance of the shot-mean estimator (sample variance / shots)."""
    eig = _diagonal_eigenvalues(op)
    m1 = 0.0
    m2 = 0.0
    for bits, c in counts.counts.items():
        v = eig[int(bits, 2)]
        m1 += c * v
        m2 += c * v * v
    m1 /= counts.shots
    m2 /= counts.shots
    return max(m2 - m1 * m1, 0.0) / counts.shots


def exact_diagonal_variance(state: QuantumState, op: PauliSum) -> float:
    """Single-shot variance of a Z-diagonal observable under |amplitude|^2."""
    eig = _diagonal_eigenvalues(op)
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    mean = float(np.dot(probs, eig))
    return float(np.dot(probs, eig**2) - mean**2)
