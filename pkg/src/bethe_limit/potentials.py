"""Symmetric concave factor potentials and the Hamiltonian built from them.

A potential is a sequence ``h_0..h_k`` indexed by the number of ones among a
factor's ``k`` neighbours.  Symmetry ``h_i = h_{k-i}`` is checked with exact
float equality, so build inputs with :meth:`PotentialSequence.from_half`
when the values come out of arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import (
    ConcavityViolation,
    DimensionMismatch,
    OccupancyOutOfRange,
    PotentialError,
    SymmetryViolation,
    TooShort,
)

if TYPE_CHECKING:
    from .factor_graph import FactorGraph


def _check_sequence(values: Sequence[float]) -> None:
    n = len(values)
    if n < 3:
        raise TooShort(f"need at least 3 values (k >= 2), got {n}")
    if not all(math.isfinite(v) for v in values):
        raise PotentialError("potential values must be finite")
    k = n - 1
    for i in range(k + 1):
        if values[i] != values[k - i]:
            raise SymmetryViolation(i)
    for i in range(1, k):
        if 2 * values[i] < values[i - 1] + values[i + 1]:
            raise ConcavityViolation(i)


@dataclass(frozen=True)
class PotentialSequence:
    """Validated symmetric concave sequence ``h_0..h_k``."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        _check_sequence(vals)

    @classmethod
    def from_half(cls, half: Sequence[float], k: int) -> "PotentialSequence":
        """Mirror ``h_0..h_{floor(k/2)}`` into a full symmetric sequence."""
        if len(half) != k // 2 + 1:
            raise TooShort(f"need {k // 2 + 1} leading values for k={k}")
        full = [float(half[min(i, k - i)]) for i in range(k + 1)]
        return cls(tuple(full))

    @property
    def k(self) -> int:
        return len(self.values) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def spread(self) -> float:
        """``h_{floor(k/2)} - h_0``, the gap between the peak and the ends."""
        return self.values[self.k // 2] - self.values[0]

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)


def validate(seq: Sequence[float]) -> PotentialSequence:
    """Return ``seq`` as a :class:`PotentialSequence` or raise.

    Raises ``TooShort``, ``SymmetryViolation(index)`` or
    ``ConcavityViolation(index)``; the index is the first offending position.
    """
    return PotentialSequence(tuple(seq))


def parse_potentials(text: str) -> PotentialSequence:
    """Parse a comma separated list such as ``"0,1,1,0"``."""
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise PotentialError(f"cannot parse potentials {text!r}") from exc
    return validate(vals)


def random_potentials(k: int, rng: np.random.Generator, scale: float = 1.0) -> PotentialSequence:
    """Draw a random valid sequence: nonincreasing nonnegative increments, mirrored."""
    while True:
        # for odd k the two middle entries coincide after mirroring
        steps = np.sort(rng.exponential(scale, size=k // 2))[::-1]
        half = np.concatenate([[0.0], np.cumsum(steps)]) + rng.normal(0.0, scale)
        try:
            return PotentialSequence.from_half(half.tolist(), k)
        except ConcavityViolation:
            # near-equal steps can lose concavity to rounding; redraw
            continue


@dataclass(frozen=True)
class ModelParams:
    d: int
    potentials: PotentialSequence
    beta: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise PotentialError(f"d must be an integer >= 2, got {self.d}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise PotentialError(f"beta must be finite and >= 0, got {self.beta}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def k(self) -> int:
        return self.potentials.k

    @property
    def h(self) -> np.ndarray:
        return self.potentials.array

    @property
    def log_psi(self) -> np.ndarray:
        """``-beta * h_i`` for i = 0..k."""
        return -self.beta * self.potentials.array

    @property
    def message_bound(self) -> float:
        """``(d-1) * beta * (h_{floor(k/2)} - h_0)``; bounds every variable-to-factor message."""
        return (self.d - 1) * self.beta * self.potentials.spread

    def with_beta(self, beta: float) -> "ModelParams":
        return replace(self, beta=beta)


def factor_weight(params: ModelParams, occupancy: int) -> float:
    """``exp(-beta * h_occupancy)``."""
    if not 0 <= occupancy <= params.k:
        raise OccupancyOutOfRange(f"occupancy {occupancy} outside 0..{params.k}")
    return math.exp(-params.beta * params.potentials[occupancy])


def occupancies(graph: "FactorGraph", x) -> np.ndarray:
    """Number of ones seen by each factor, parallel edges counted twice.

    ``x`` may be a single assignment of shape ``(n_vars,)`` or a batch
    ``(m, n_vars)``.
    """
    x = np.asarray(x)
    if x.shape[-1] != graph.n_vars:
        raise DimensionMismatch(f"assignment has {x.shape[-1]} bits, graph has {graph.n_vars} variables")
    return x @ graph.incidence


def hamiltonian(graph: "FactorGraph", params: ModelParams, x) -> float | np.ndarray:
    """Sum over factors of ``h(occupancy)``; vectorised over a leading batch axis."""
    if np.any(graph.factor_degrees != params.k):
        raise DimensionMismatch(f"every factor must have degree k={params.k}")
    occ = occupancies(graph, x)
    energy = params.h[occ].sum(axis=-1)
    return float(energy) if np.ndim(energy) == 0 else energy
