"""Exact enumeration of projection-overlap equivalence classes.

Two words of equal length are equivalent when their cylinders project to
the same interval, i.e. share the same exact left endpoint (widths agree
at fixed length).  Class keys are canonical integer lattice vectors, so
the equivalence decision carries no tolerance whatsoever.  Class sizes
certify lower bounds for the overlap exponent H; no extrapolation to the
supremum is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .carpet import CarpetIFS, Word
from .errors import BudgetExceeded, ParameterOutOfRange
from .lattice import (
    check_word_budget,
    enumerate_coords,
    iter_words_coords,
    projection_lattice,
)
from .numberfield import FieldElement

DEFAULT_CLASS_BUDGET = 1 << 24
MEMBER_LIST_MAX_LENGTH = 12  # member words retained only below this length


@dataclass(frozen=True)
class EquivalenceClassTable:
    """Partition of the m^k length-k words by exact projected endpoint."""

    k: int
    m: int
    sizes: dict[tuple, int]              # lattice key -> class size
    denom: int
    field: object
    members: dict[tuple, list[Word]] | None  # retained only for small k

    @property
    def class_count(self) -> int:
        return len(self.sizes)

    @property
    def max_class_size(self) -> int:
        return max(self.sizes.values())

    def endpoint(self, key: tuple) -> FieldElement:
        return self.field.element([Fraction(int(c), self.denom) for c in key])

    def largest_classes(self, count: int = 1):
        """(endpoint key, size) pairs of the largest classes."""
        return sorted(self.sizes.items(), key=lambda kv: (-kv[1], kv[0]))[:count]

    def class_of(self, endpoint: FieldElement) -> list[Word]:
        if self.members is None:
            raise ValueError(f"member lists not retained at k={self.k}")
        for key, words in self.members.items():
            if self.endpoint(key) == endpoint:
                return list(words)
        return []


def equivalence_classes(ifs: CarpetIFS, k: int,
                        budget: int = DEFAULT_CLASS_BUDGET) -> EquivalenceClassTable:
    """Group all length-k words by exact left endpoint."""
    if k < 1:
        raise ParameterOutOfRange("word length must be >= 1")
    check_word_budget(ifs.m, k, budget)
    scheme = projection_lattice(ifs, k, adapted=False)
    keep_members = k < MEMBER_LIST_MAX_LENGTH
    sizes: dict[tuple, int] = {}
    members: dict[tuple, list[Word]] | None = {} if keep_members else None

    if keep_members or not scheme.fits_int64():
        for word, coords in iter_words_coords(scheme):
            sizes[coords] = sizes.get(coords, 0) + 1
            if members is not None:
                members.setdefault(coords, []).append(word)
    else:
        for _start, chunk in enumerate_coords(scheme):
            uniq, counts = np.unique(chunk, axis=0, return_counts=True)
            for row, cnt in zip(uniq, counts):
                key = tuple(int(c) for c in row)
                sizes[key] = sizes.get(key, 0) + int(cnt)

    total = sum(sizes.values())
    if total != ifs.m ** k:
        raise AssertionError("class sizes do not partition the words")
    return EquivalenceClassTable(k=k, m=ifs.m, sizes=sizes, denom=scheme.denom,
                                 field=ifs.field, members=members)


@dataclass(frozen=True)
class HEstimate:
    """Certified lower bound for the overlap exponent H from lengths 1..k_max."""

    per_k: tuple[tuple[int, int, float], ...]   # (k, max class size, H_k)
    best_k: int
    h_lower: float
    symbolic_min_dim: float

    def h_lower_at(self, k: int) -> float:
        best = 0.0
        for kk, _size, hk in self.per_k:
            if kk > k:
                break
            best = max(best, hk)
        return best


def h_lower_bound(ifs: CarpetIFS, k_max: int,
                  budget: int = DEFAULT_CLASS_BUDGET) -> HEstimate:
    """H_k = log(max class size at length k)/k for k = 1..k_max, and the
    certified lower bound H_lower = max_k H_k.

    symbolic_min_dim is (log m - H_lower)/(-log beta); computed with a lower
    bound for H it is an upper-biased stand-in for the paper quantity.
    """
    if k_max < 1:
        raise ParameterOutOfRange("k_max must be >= 1")
    per_k = []
    h_lower = 0.0
    best_k = 1
    for k in range(1, k_max + 1):
        table = equivalence_classes(ifs, k, budget=budget)
        size = table.max_class_size
        hk = math.log(size) / k
        if hk > h_lower:
            h_lower = hk
            best_k = k
        per_k.append((k, size, hk))
    sym = (math.log(ifs.m) - h_lower) / (-math.log(ifs.beta_float))
    return HEstimate(per_k=tuple(per_k), best_k=best_k, h_lower=h_lower,
                     symbolic_min_dim=sym)


def is_free_up_to(ifs: CarpetIFS, k: int, budget: int = DEFAULT_CLASS_BUDGET) -> bool:
    """True when every class at every length <= k is a singleton: evidence of
    (not proof of) freeness.  False proves non-freeness."""
    for length in range(1, k + 1):
        if equivalence_classes(ifs, length, budget=budget).max_class_size > 1:
            return False
    return True
