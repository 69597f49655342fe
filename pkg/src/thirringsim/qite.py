"""Quantum imaginary-time evolution steps and trajectories.

Each step builds the Gram system (S + S^T) a = b from expectation values
on the current state, solves it by truncated-SVD least squares, drops
coefficients below a magnitude threshold and applies the resulting
generator as a first-order Trotter product of Pauli rotations.  Chaining
steps from a basis state yields a trajectory with per-step weights whose
running product is the state's contribution to the thermal trace.

The pair structure of the Gram matrix and of the b vector is independent
of the state, so it is computed once per (pool, Hamiltonian) and cached;
per step only the expectation values of the distinct product strings are
evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import oracle
from .pauli import PauliString, PauliSum, minus_i_commutator, multiply, unpack
from .statevector import (
    QuantumState,
    _string_action,
    apply_rotation,
    basis_state,
    estimate_diagonal,
    estimate_diagonal_variance,
    expectation,
    sample,
)

ODD_Y = "odd-y"
FULL = "full-minus-identity"
POOL_KINDS = (ODD_Y, FULL)

C_LINEAR = "linear"
C_EXPONENTIAL = "exponential"
C_EXACT_NORM = "exact-norm"
C_MODES = (C_LINEAR, C_EXPONENTIAL, C_EXACT_NORM)

B_UNIT = "unit"
B_INVERSE_SQRT_C = "inverse-sqrt-c"
B_SCALINGS = (B_UNIT, B_INVERSE_SQRT_C)

DEFAULT_SVD_CUTOFF = 1e-8
DEFAULT_THRESHOLD = 1e-3
DEFAULT_TROTTER_STEPS = 10
REAL_STATE_TOL = 1e-6

MODE_EXACT = "exact"
MODE_SHOTS = "shots"


class NonPositiveWeightError(RuntimeError):
    """Raised when the linear weight 1 - 2*dbeta*<H> is not positive."""


@dataclass(frozen=True)
class OperatorPool:
    """Ordered set of generator strings; the identity never appears."""

    n_sites: int
    kind: str
    strings: tuple[PauliString, ...]

    def __post_init__(self):
        if self.kind not in POOL_KINDS:
            raise ValueError(f"unknown pool kind {self.kind!r}")
        if any(s.is_identity() for s in self.strings):
            raise ValueError("the identity string cannot be a generator")
        if len(set(self.strings)) != len(self.strings):
            raise ValueError("pool contains duplicate strings")

    @property
    def size(self) -> int:
        return len(self.strings)

    @classmethod
    def odd_y(cls, n_sites: int) -> "OperatorPool":
        """Strings with an odd Y count, in ascending packed order.

        On real states with a real-symmetric Hamiltonian the b component of
        every even-Y string vanishes, so this restriction is lossless.
        """
        strings = []
        for j in range(1, 4**n_sites):
            letters = unpack(j, n_sites)
            if sum(1 for l in letters if l == 2) % 2 == 1:
                strings.append(PauliString(letters))
        return cls(n_sites, ODD_Y, tuple(strings))

    @classmethod
    def full_minus_identity(cls, n_sites: int) -> "OperatorPool":
        strings = tuple(PauliString(unpack(j, n_sites)) for j in range(1, 4**n_sites))
        return cls(n_sites, FULL, strings)


def make_pool(kind: str, n_sites: int) -> OperatorPool:
    if kind == ODD_Y:
        return OperatorPool.odd_y(n_sites)
    if kind == FULL:
        return OperatorPool.full_minus_identity(n_sites)
    raise ValueError(f"unknown pool kind {kind!r}")


@dataclass
class StepRecord:
    """Solved coefficients and bookkeeping of one imaginary-time step."""

    a: np.ndarray
    c_step: float
    energy: float
    kept_terms: int
    residual: float


@dataclass
class Trajectory:
    """K chained steps from one initial state.

    ``cumulative_weights[k-1]`` is the product of the first k step weights;
    ``observables[name][k-1]`` is the measured value after step k, at
    inverse temperature beta = 2*k*dbeta.
    """

    initial_index: int
    records: list[StepRecord]
    cumulative_weights: list[float]
    observables: dict[str, list[float]]
    observable_variances: dict[str, list[float]]


# ---------------------------------------------------------------------------
# state-independent pair structure


@dataclass
class _ProductTable:
    """Permutation/phase arrays of the distinct product strings of a plan."""

    index_of: dict[int, int]
    perms: np.ndarray
    phases: np.ndarray


def _build_table(letters_by_packed: dict[int, tuple[int, ...]], n_sites: int) -> _ProductTable:
    dim = 2**n_sites
    packed = sorted(letters_by_packed)
    perms = np.empty((len(packed), dim), dtype=np.intp)
    phases = np.empty((len(packed), dim), dtype=complex)
    for row, j in enumerate(packed):
        perm, phase = _string_action(letters_by_packed[j])
        perms[row] = perm
        phases[row] = phase
    return _ProductTable({j: row for row, j in enumerate(packed)}, perms, phases)


def _table_expectations(table: _ProductTable, amps: np.ndarray) -> np.ndarray:
    """Real parts of <phi|P|phi> for every distinct product string."""
    return ((table.phases * amps[table.perms]) @ amps.conj()).real


@lru_cache(maxsize=8)
def _gram_plan(pool: OperatorPool):
    n = pool.size
    coef = np.zeros((n, n))
    pid = np.zeros((n, n), dtype=np.intp)
    letters_by_packed: dict[int, tuple[int, ...]] = {}
    packed_matrix = np.zeros((n, n), dtype=np.int64)
    for i, p1 in enumerate(pool.strings):
        for j in range(i, n):
            ph = multiply(p1, pool.strings[j])
            re = ph.phase.real
            if re == 0.0:  # anticommuting pair: the symmetrized entry vanishes
                continue
            jp = ph.string.packed_index
            letters_by_packed[jp] = ph.string.letters
            coef[i, j] = coef[j, i] = 2.0 * re
            packed_matrix[i, j] = packed_matrix[j, i] = jp
    letters_by_packed.setdefault(0, (0,) * pool.n_sites)
    table = _build_table(letters_by_packed, pool.n_sites)
    for i in range(n):
        for j in range(n):
            if coef[i, j] != 0.0:
                pid[i, j] = table.index_of[packed_matrix[i, j]]
    return coef, pid, table


def _rhs_key(ham: PauliSum) -> tuple:
    return (ham.n_sites, tuple(sorted((j, complex(c)) for j, c in ham.terms.items())))


@lru_cache(maxsize=16)
def _rhs_plan(pool: OperatorPool, ham_key: tuple):
    n_sites, items = ham_key
    if n_sites != pool.n_sites:
        raise ValueError("pool and Hamiltonian act on different site counts")
    ham_strings = [(PauliString(unpack(j, n_sites)), c) for j, c in items]
    letters_by_packed: dict[int, tuple[int, ...]] = {}
    triplets = []  # (pool row, product packed index, weight)
    for row, sigma in enumerate(pool.strings):
        for hs, hc in ham_strings:
            com = minus_i_commutator(sigma, hs)
            for ps, cc in com.items():
                letters_by_packed[ps.packed_index] = ps.letters
                triplets.append((row, ps.packed_index, (hc * cc).real))
    table = _build_table(letters_by_packed or {0: (0,) * n_sites}, n_sites)
    weights = np.zeros((pool.size, len(table.index_of)))
    for row, jp, w in triplets:
        weights[row, table.index_of[jp]] += w
    return weights, table


def _check_pool_state(state: QuantumState, pool: OperatorPool) -> None:
    if state.n_sites != pool.n_sites:
        raise ValueError("state and pool act on different site counts")
    if pool.kind == ODD_Y and state.max_imag() > REAL_STATE_TOL:
        raise ValueError(
            "the odd-Y pool requires a real-amplitude state "
            f"(max |imag| = {state.max_imag():.3e}); use the full pool instead"
        )


def build_gram(state: QuantumState, pool: OperatorPool) -> np.ndarray:
    """Symmetric matrix of anticommutator expectations over the pool.

    Entry (j1, j2) is <phi|s_j1 s_j2 + s_j2 s_j1|phi>, which equals twice
    the real Gram matrix of the vectors s_j|phi> and is therefore positive
    semidefinite for any state.
    """
    _check_pool_state(state, pool)
    coef, pid, table = _gram_plan(pool)
    exps = _table_expectations(table, state.amplitudes)
    return coef * exps[pid]


def build_rhs(state: QuantumState, pool: OperatorPool, ham: PauliSum, c_step: float) -> np.ndarray:
    """Commutator expectations against the Hamiltonian, scaled by 1/sqrt(C).

    Component j is sum_j' h_j' <phi| -i(s_j s_j' - s_j' s_j) |phi> / sqrt(C),
    the generator ordering that drives the state toward exp(-dbeta H)|phi>.
    """
    if c_step <= 0:
        raise NonPositiveWeightError(f"c_step must be positive, got {c_step}")
    _check_pool_state(state, pool)
    if not ham.is_hermitian():
        raise ValueError("the Hamiltonian must have real coefficients")
    weights, table = _rhs_plan(pool, _rhs_key(ham))
    exps = _table_expectations(table, state.amplitudes)
    return (weights @ exps) / math.sqrt(c_step)


def solve(gram: np.ndarray, b: np.ndarray, svd_cutoff: float = DEFAULT_SVD_CUTOFF):
    """Minimum-norm least-squares solution with singular-value truncation.

    Returns (a, residual_norm).  The Gram matrix is generically singular on
    product states, so plain solves are not an option.
    """
    gram = np.asarray(gram, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(gram)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries in the linear system")
    a, *_ = np.linalg.lstsq(gram, b, rcond=svd_cutoff)
    residual = float(np.linalg.norm(gram @ a - b))
    return a, residual


def _c_step_value(state: QuantumState, ham: PauliSum, dbeta: float, energy: float, c_mode: str) -> float:
    if c_mode == C_LINEAR:
        c = 1.0 - 2.0 * dbeta * energy
        if c <= 0:
            raise NonPositiveWeightError(
                f"linear weight 1 - 2*dbeta*<H> = {c:.6g} is not positive at "
                f"dbeta = {dbeta}; rerun with c_mode='exponential' or 'exact-norm'"
            )
        return c
    if c_mode == C_EXPONENTIAL:
        return math.exp(-2.0 * dbeta * energy)
    if c_mode == C_EXACT_NORM:
        return oracle.exact_imaginary_time_state(ham, state, dbeta)[1]
    raise ValueError(f"unknown c_mode {c_mode!r}; expected one of {C_MODES}")


def step(
    state: QuantumState,
    ham: PauliSum,
    dbeta: float,
    pool: OperatorPool,
    trotter_steps: int = DEFAULT_TROTTER_STEPS,
    threshold: float = DEFAULT_THRESHOLD,
    c_mode: str = C_EXPONENTIAL,
    svd_cutoff: float = DEFAULT_SVD_CUTOFF,
    b_scaling: str = B_UNIT,
) -> tuple[QuantumState, StepRecord]:
    """One imaginary-time step of size dbeta.

    Solves for the generator coefficients, zeroes those at or below the
    magnitude threshold, applies the rotations in ascending packed order
    repeated ``trotter_steps`` times, and returns the normalized state
    with the step record.

    ``b_scaling`` selects the normalization of the solved generator.  The
    default ``unit`` drops the 1/sqrt(C) factor from the linear system,
    which is what first-order matching against the normalized
    imaginary-time state demands; ``inverse-sqrt-c`` keeps the factor,
    which shrinks every rotation by sqrt(C) and visibly under-evolves
    trajectories whose energy is far from zero.
    """
    if dbeta < 0:
        raise ValueError("dbeta must be non-negative")
    if trotter_steps < 1:
        raise ValueError("trotter_steps must be at least 1")
    if b_scaling not in B_SCALINGS:
        raise ValueError(f"unknown b_scaling {b_scaling!r}; expected one of {B_SCALINGS}")
    energy = expectation(state, ham).real
    c_step = _c_step_value(state, ham, dbeta, energy, c_mode)
    gram = build_gram(state, pool)
    b = build_rhs(state, pool, ham, c_step if b_scaling == B_INVERSE_SQRT_C else 1.0)
    a, residual = solve(gram, b, svd_cutoff)
    a = np.where(np.abs(a) > threshold, a, 0.0)
    kept = int(np.count_nonzero(a))
    new_state = state.copy()
    if dbeta > 0 and kept > 0:
        angles = a * (dbeta / trotter_steps)
        active = [(pool.strings[i], angles[i]) for i in np.flatnonzero(a)]
        for _ in range(trotter_steps):
            for sigma, angle in active:
                new_state = apply_rotation(new_state, sigma, angle)
    new_state = new_state.normalized()
    return new_state, StepRecord(a, c_step, energy, kept, residual)


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, dtype=np.uint64)[0])


def run_trajectory_from_state(
    state: QuantumState,
    label: int,
    ham: PauliSum,
    dbeta: float,
    n_steps: int,
    observables: dict[str, PauliSum],
    pool: OperatorPool,
    mode: str = MODE_EXACT,
    shots: int = 1024,
    seed: int = 0,
    trotter_steps: int = DEFAULT_TROTTER_STEPS,
    threshold: float = DEFAULT_THRESHOLD,
    c_mode: str = C_EXPONENTIAL,
    b_scaling: str = B_UNIT,
) -> Trajectory:
    """Chain ``n_steps`` steps from an explicit initial state.

    After step k the cumulative weight and every observable are recorded;
    step k corresponds to inverse temperature beta = 2*k*dbeta.  In shots
    mode one batch of measurements per step serves all observables, with a
    sampling seed derived deterministically from (seed, label, k).
    """
    if mode not in (MODE_EXACT, MODE_SHOTS):
        raise ValueError(f"unknown measurement mode {mode!r}")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    records: list[StepRecord] = []
    weights: list[float] = []
    obs_values: dict[str, list[float]] = {name: [] for name in observables}
    obs_vars: dict[str, list[float]] = {name: [] for name in observables}
    cumulative = 1.0
    for k in range(1, n_steps + 1):
        state, record = step(
            state, ham, dbeta, pool, trotter_steps, threshold, c_mode,
            b_scaling=b_scaling,
        )
        records.append(record)
        cumulative *= record.c_step
        weights.append(cumulative)
        if mode == MODE_SHOTS:
            counts = sample(state, shots, _derived_seed(seed, label, k))
            for name, obs in observables.items():
                obs_values[name].append(estimate_diagonal(counts, obs))
                obs_vars[name].append(estimate_diagonal_variance(counts, obs))
        else:
            for name, obs in observables.items():
                obs_values[name].append(expectation(state, obs).real)
                obs_vars[name].append(0.0)
    return Trajectory(label, records, weights, obs_values, obs_vars)


def run_trajectory(
    initial_index: int,
    ham: PauliSum,
    dbeta: float,
    n_steps: int,
    observables: dict[str, PauliSum],
    pool: OperatorPool,
    mode: str = MODE_EXACT,
    shots: int = 1024,
    seed: int = 0,
    trotter_steps: int = DEFAULT_TROTTER_STEPS,
    threshold: float = DEFAULT_THRESHOLD,
    c_mode: str = C_EXPONENTIAL,
    b_scaling: str = B_UNIT,
) -> Trajectory:
    """Trajectory started from the computational basis state ``initial_index``."""
    state = basis_state(initial_index, ham.n_sites)
    return run_trajectory_from_state(
        state, initial_index, ham, dbeta, n_steps, observables, pool,
        mode, shots, seed, trotter_steps, threshold, c_mode, b_scaling,
    )
