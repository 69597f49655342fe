"""Lattice Hamiltonians for the staggered-fermion massive Thirring model.

Builds the four Pauli-sum pieces h1..h4 on an even number of sites and
assembles the dimensionless Hamiltonian aH for the Euclidean, Minkowski
or Gross-Neveu variant, plus the two physical observables (chiral
condensate and fermion number).  Additive constants are dropped
throughout except the explicit +N/2 inside the fermion number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .pauli import PauliString, PauliSum, X, Y, Z

EUCLIDEAN = "euclidean"
MINKOWSKI = "minkowski"
GROSS_NEVEU = "gross-neveu"
VARIANTS = (EUCLIDEAN, MINKOWSKI, GROSS_NEVEU)

CHIRAL_CONDENSATE = "chiral_condensate"
FERMION_NUMBER = "fermion_number"


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless couplings of one model variant.

    ``am`` is mass times lattice spacing, ``g2`` the four-fermion coupling
    (g^2 for the Euclidean/Minkowski variants, the quartic coupling for
    Gross-Neveu), ``a_mu`` the chemical potential times lattice spacing
    (Gross-Neveu only).
    """

    variant: str
    n_sites: int = 4
    am: float = 0.5
    g2: float = 0.0
    a_mu: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        _check_sites(self.n_sites)
        for name in ("am", "g2", "a_mu"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite real, got {v!r}")
        if self.g2 < 0:
            raise ValueError("the coupling g2 must be non-negative")
        if self.variant != GROSS_NEVEU and self.a_mu != 0.0:
            raise ValueError("a_mu is only meaningful for the Gross-Neveu variant")


@dataclass(frozen=True)
class HamiltonianSet:
    """The assembled pieces and the full dimensionless Hamiltonian."""

    params: ModelParams
    h1: PauliSum
    h2: PauliSum
    h3: PauliSum
    h4: PauliSum
    hamiltonian: PauliSum


def _check_sites(n_sites: int) -> None:
    if n_sites < 4 or n_sites % 2 != 0:
        raise ValueError(f"n_sites must be an even integer >= 4, got {n_sites}")


def _pair(n_sites: int, letter: int, a: int, b: int) -> PauliString:
    letters = [0] * n_sites
    letters[a] = letter
    letters[b] = letter
    return PauliString(tuple(letters))


def build_h1(n_sites: int) -> PauliSum:
    """Nearest-neighbour XX/YY hopping chain plus the Z-dressed boundary term.

    The boundary pair sigma(0)sigma(N-1) is multiplied by the Z string on
    sites 1..N-2 and carries the sign (-1)^(N/2).
    """
    _check_sites(n_sites)
    terms = []
    for letter in (X, Y):
        for n in range(n_sites - 1):
            terms.append((_pair(n_sites, letter, n, n + 1), 0.5))
        boundary = [Z] * n_sites
        boundary[0] = letter
        boundary[n_sites - 1] = letter
        sign = (-1) ** (n_sites // 2)
        terms.append((PauliString(tuple(boundary)), 0.5 * sign))
    return PauliSum.from_strings(terms, n_sites)


def build_h2(n_sites: int) -> PauliSum:
    """Staggered mass term: (1/2) * sum_n (-1)^(n+1) Z(n)."""
    _check_sites(n_sites)
    return PauliSum.from_strings(
        [(PauliString.single(n_sites, n, Z), 0.5 * (-1) ** (n + 1)) for n in range(n_sites)],
        n_sites,
    )


def _zz_ring(n_sites: int, coeff: float) -> list[tuple[PauliString, float]]:
    return [
        (_pair(n_sites, Z, n, (n + 1) % n_sites), coeff) for n in range(n_sites)
    ]


def build_h3(n_sites: int) -> PauliSum:
    """Charge-density-squared piece: sum_n Z(n) + (1/4) * ring of ZZ."""
    _check_sites(n_sites)
    terms = [(PauliString.single(n_sites, n, Z), 1.0) for n in range(n_sites)]
    terms += _zz_ring(n_sites, 0.25)
    return PauliSum.from_strings(terms, n_sites)


def build_h4(n_sites: int) -> PauliSum:
    """Current-squared piece: (1/4) * ring of ZZ."""
    _check_sites(n_sites)
    return PauliSum.from_strings(_zz_ring(n_sites, 0.25), n_sites)


def _sum_z(n_sites: int, coeff: float) -> PauliSum:
    return PauliSum.from_strings(
        [(PauliString.single(n_sites, n, Z), coeff) for n in range(n_sites)], n_sites
    )


def assemble(params: ModelParams) -> HamiltonianSet:
    """Build h1..h4 and combine them into the variant's dimensionless aH."""
    n = params.n_sites
    h1, h2, h3, h4 = build_h1(n), build_h2(n), build_h3(n), build_h4(n)
    if params.variant == EUCLIDEAN:
        ham = h1 + params.am * h2 - 0.25 * params.g2 * h3 - 0.25 * params.g2 * h4
    elif params.variant == MINKOWSKI:
        ham = h1 + params.am * h2 - 0.25 * params.g2 * h3 + 0.25 * params.g2 * h4
    else:
        ham = h1 + params.am * h2 - params.g2 * h4 - params.a_mu * _sum_z(n, 0.5)
    return HamiltonianSet(params, h1, h2, h3, h4, ham)


def observable_chiral(n_sites: int) -> PauliSum:
    """Chiral condensate; identical to the staggered mass term h2."""
    return build_h2(n_sites)


def observable_fermion_number(n_sites: int) -> PauliSum:
    """Fermion number N/2 + (1/2) * sum_n Z(n); integer-valued on basis states."""
    _check_sites(n_sites)
    out = _sum_z(n_sites, 0.5)
    return out + PauliSum(n_sites, {0: n_sites / 2})


def default_observables(n_sites: int) -> dict[str, PauliSum]:
    """The two reported observables keyed by their output names."""
    return {
        CHIRAL_CONDENSATE: observable_chiral(n_sites),
        FERMION_NUMBER: observable_fermion_number(n_sites),
    }
