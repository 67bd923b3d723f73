"""Contraction configurations between A's annihilation and B's creation slots."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from math import comb, factorial
import sys
from typing import Iterator, Sequence

__all__ = [
    "ContractionConfig",
    "config_count",
    "config_sign",
    "configs_for_arities",
    "enumerate_configs",
    "inversion_parity",
    "COUNT_LIMIT",
]

# Counts above this are reported instead of silently becoming huge ints.
COUNT_LIMIT = sys.maxsize


def _count_inversions(seq: list[int]) -> int:
    if len(seq) < 2:
        return 0
    mid = len(seq) // 2
    left, right = seq[:mid], seq[mid:]
    inv = _count_inversions(left) + _count_inversions(right)
    i = j = k = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            seq[k] = left[i]
            i += 1
        else:
            seq[k] = right[j]
            inv += len(left) - i
            j += 1
        k += 1
    seq[k:] = left[i:] + right[j:]
    return inv


def inversion_parity(seq: Sequence[int]) -> int:
    """+1 for an even number of inversions, -1 for odd."""
    return -1 if _count_inversions(list(seq)) & 1 else 1


def _crossing_targets(size: int, contracted: Sequence[int]) -> list[int]:
    # contracted[c-1] goes to position size-c+1; the rest keep their order below.
    target = [0] * (size + 1)
    for c, slot in enumerate(contracted, start=1):
        target[slot] = size - c + 1
    pos = 1
    for slot in range(1, size + 1):
        if not target[slot]:
            target[slot] = pos
            pos += 1
    return target[1:]


@dataclass(frozen=True)
class ContractionConfig:
    """C pairings (B-left π(c), A-right π'(c)) plus derived data.

    Slot numbers are 1-based positions among the external legs of the
    operands (the collapsed view of multi-vertex diagrams).
    """

    C: int
    pi: tuple[int, ...]
    pi_prime: tuple[int, ...]
    m_A: int
    n_B: int

    def __post_init__(self):
        C, pi, pp = self.C, self.pi, self.pi_prime
        if not (1 <= C <= min(self.m_A, self.n_B)):
            raise ValueError(f"C={C} outside [1, min({self.m_A}, {self.n_B})]")
        if len(pi) != C or len(pp) != C:
            raise ValueError("pi and pi_prime must have length C")
        if any(not 1 <= p <= self.n_B for p in pi) or any(a <= b for a, b in zip(pi, pi[1:])):
            raise ValueError(f"pi={pi} must be strictly decreasing within 1..{self.n_B}")
        if any(not 1 <= p <= self.m_A for p in pp) or len(set(pp)) != C:
            raise ValueError(f"pi_prime={pp} must be distinct within 1..{self.m_A}")

    @property
    def U(self) -> tuple[int, ...]:
        used = set(self.pi)
        return tuple(j for j in range(1, self.n_B + 1) if j not in used)

    @property
    def U_prime(self) -> tuple[int, ...]:
        used = set(self.pi_prime)
        return tuple(j for j in range(1, self.m_A + 1) if j not in used)

    @property
    def sgn_sigma(self) -> int:
        return inversion_parity(_crossing_targets(self.n_B, self.pi))

    @property
    def sgn_sigma_prime(self) -> int:
        return inversion_parity(_crossing_targets(self.m_A, self.pi_prime))

    @property
    def sign(self) -> int:
        return config_sign(self, self.m_A, self.n_B)


def config_count(m_A: int, n_B: int, limit: int = COUNT_LIMIT) -> int:
    """Σ_C C!·binom(n_B, C)·binom(m_A, C); raises OverflowError above ``limit``."""
    if m_A < 0 or n_B < 0:
        raise ValueError("arities must be nonnegative")
    total = 0
    for C in range(1, min(m_A, n_B) + 1):
        total += factorial(C) * comb(n_B, C) * comb(m_A, C)
        if total > limit:
            raise OverflowError(f"config count for (m_A={m_A}, n_B={n_B}) exceeds {limit}")
    return total


def config_sign(cfg: ContractionConfig, m_A: int, n_B: int) -> int:
    if (cfg.m_A, cfg.n_B) != (m_A, n_B):
        raise ValueError(f"config built for ({cfg.m_A},{cfg.n_B}) used with ({m_A},{n_B})")
    free = (m_A - cfg.C) * (n_B - cfg.C)
    return (-1 if free & 1 else 1) * cfg.sgn_sigma * cfg.sgn_sigma_prime


def configs_for_arities(m_A: int, n_B: int) -> Iterator[ContractionConfig]:
    """All configs in lexicographic (C, pi, pi_prime) order."""
    for C in range(1, min(m_A, n_B) + 1):
        pis = sorted(tuple(reversed(c)) for c in combinations(range(1, n_B + 1), C))
        for pi in pis:
            for pp in permutations(range(1, m_A + 1), C):
                yield ContractionConfig(C, pi, pp, m_A, n_B)


def enumerate_configs(A, B) -> list[ContractionConfig]:
    """Configs contracting A's annihilation legs with B's creation legs."""
    from .expression import as_term

    m_A = len(as_term(A).diagram.ext_right)
    n_B = len(as_term(B).diagram.ext_left)
    return list(configs_for_arities(m_A, n_B))
