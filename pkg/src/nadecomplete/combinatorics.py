"""Observed sets, variable orderings, query distributions, and counting.

An observed set marks which of the D variables are conditioned on; an
ordering fixes the sequence in which the remaining variables are predicted.
Query distributions describe how observed sets are drawn, both for training
and for building evaluation query sets.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .validation import as_rng


@dataclass(frozen=True)
class ObservedSet:
    """A subset of variable indices {0..D-1} that are observed."""

    D: int
    members: tuple[int, ...]

    def __post_init__(self):
        if self.D < 1:
            raise ValueError("D must be >= 1")
        members = tuple(sorted(int(i) for i in self.members))
        if len(set(members)) != len(members):
            raise ValueError(f"duplicate indices in observed set: {self.members}")
        if members and (members[0] < 0 or members[-1] >= self.D):
            raise ValueError(f"indices out of range for D={self.D}: {self.members}")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, idx: int) -> bool:
        return idx in set(self.members)

    def missing(self) -> tuple[int, ...]:
        obs = set(self.members)
        return tuple(i for i in range(self.D) if i not in obs)

    def indicator(self) -> np.ndarray:
        m = np.zeros(self.D)
        m[list(self.members)] = 1.0
        return m

    def with_added(self, idx: int) -> "ObservedSet":
        return ObservedSet(self.D, self.members + (idx,))

    @staticmethod
    def empty(D: int) -> "ObservedSet":
        return ObservedSet(D, ())

    @staticmethod
    def full(D: int) -> "ObservedSet":
        return ObservedSet(D, tuple(range(D)))


@dataclass(frozen=True)
class Ordering:
    """A permutation of {0..D-1}: the order in which variables are predicted."""

    D: int
    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(i) for i in self.perm)
        if sorted(perm) != list(range(self.D)):
            raise ValueError(f"not a permutation of 0..{self.D - 1}: {self.perm}")
        object.__setattr__(self, "perm", perm)

    def position(self) -> dict[int, int]:
        """Map variable index -> position in this ordering."""
        return {v: i for i, v in enumerate(self.perm)}

    def inverse(self) -> "Ordering":
        inv = [0] * self.D
        for i, v in enumerate(self.perm):
            inv[v] = i
        return Ordering(self.D, tuple(inv))

    def sort_missing(self, obs: ObservedSet) -> tuple[int, ...]:
        """The unobserved variables, in the order this permutation visits them."""
        obs_set = set(obs.members)
        return tuple(v for v in self.perm if v not in obs_set)


@dataclass(frozen=True)
class OrderingSet:
    """K fixed, distinct orderings used for training and ensembling."""

    orderings: tuple[Ordering, ...]
    seed: int | None = None

    def __post_init__(self):
        if len(self.orderings) < 1:
            raise ValueError("need at least one ordering")
        D = self.orderings[0].D
        if any(o.D != D for o in self.orderings):
            raise ValueError("orderings have mismatched dimensionality")
        if len({o.perm for o in self.orderings}) != len(self.orderings):
            raise ValueError("orderings must be distinct")
        object.__setattr__(self, "orderings", tuple(self.orderings))

    @property
    def K(self) -> int:
        return len(self.orderings)

    @property
    def D(self) -> int:
        return self.orderings[0].D


def sample_ordering_set(D: int, K: int, seed: int) -> OrderingSet:
    """Draw K distinct uniform permutations of {0..D-1}, seeded.

    Duplicates are rejected and redrawn, so K must not exceed D!
    (checked exactly for D <= 20, where D! fits comfortably in an int).
    """
    if D < 1 or K < 1:
        raise ValueError("D and K must be >= 1")
    if D <= 20 and K > math.factorial(D):
        raise ValueError(f"K={K} exceeds the {math.factorial(D)} permutations of {D} items")
    rng = as_rng(seed)
    seen: set[tuple[int, ...]] = set()
    orderings: list[Ordering] = []
    while len(orderings) < K:
        perm = tuple(int(i) for i in rng.permutation(D))
        if perm in seen:
            continue
        seen.add(perm)
        orderings.append(Ordering(D, perm))
    return OrderingSet(tuple(orderings), seed=seed)


def save_ordering_set(ordering_set: OrderingSet, path) -> None:
    """One permutation per line, space-separated indices."""
    lines = [f"# ordering-set D={ordering_set.D} K={ordering_set.K} seed={ordering_set.seed}"]
    for o in ordering_set.orderings:
        lines.append(" ".join(str(i) for i in o.perm))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_ordering_set(path) -> OrderingSet:
    seed = None
    orderings = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("seed="):
                        val = tok.split("=", 1)[1]
                        seed = None if val == "None" else int(val)
                continue
            perm = tuple(int(t) for t in line.split())
            orderings.append(Ordering(len(perm), perm))
    if not orderings:
        raise ValueError(f"no orderings found in {path}")
    return OrderingSet(tuple(orderings), seed=seed)


# --- query distributions -------------------------------------------------
#
# A query never observes all D variables: at least one must be left to
# predict, so sizes run over {0..D-1}.


class QueryDistribution:
    """Base class for distributions over observed sets."""

    def sample(self, D: int, rng) -> ObservedSet:
        raise NotImplementedError

    def support(self, D: int, max_size: int = 64) -> list[tuple[ObservedSet, float]]:
        """Explicit (observed set, probability) pairs, for exact oracles."""
        raise NotImplementedError

    def validate(self, D: int) -> None:
        pass

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformQueries(QueryDistribution):
    """Size uniform on {0..D-1}, then a uniform subset of that size."""

    def sample(self, D: int, rng) -> ObservedSet:
        rng = as_rng(rng)
        s = int(rng.integers(0, D))
        members = tuple(int(i) for i in rng.choice(D, size=s, replace=False))
        return ObservedSet(D, members)

    def support(self, D: int, max_size: int = 64):
        total = 2**D - 1
        if total > max_size:
            raise EnumerationLimitError(
                f"uniform query support has {total} sets, above the cap of {max_size}"
            )
        out = []
        for s in range(D):
            p = (1.0 / D) / math.comb(D, s)
            for members in itertools.combinations(range(D), s):
                out.append((ObservedSet(D, members), p))
        return out

    def describe(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class FixedSizeQueries(QueryDistribution):
    """A uniform subset of a fixed size s, 0 <= s <= D-1."""

    size: int

    def validate(self, D: int) -> None:
        if not 0 <= self.size <= D - 1:
            raise ValueError(
                f"fixed query size {self.size} must leave at least one variable missing (D={D})"
            )

    def sample(self, D: int, rng) -> ObservedSet:
        self.validate(D)
        rng = as_rng(rng)
        members = tuple(int(i) for i in rng.choice(D, size=self.size, replace=False))
        return ObservedSet(D, members)

    def support(self, D: int, max_size: int = 64):
        self.validate(D)
        total = math.comb(D, self.size)
        if total > max_size:
            raise EnumerationLimitError(
                f"fixed-size query support has {total} sets, above the cap of {max_size}"
            )
        p = 1.0 / total
        return [
            (ObservedSet(D, members), p)
            for members in itertools.combinations(range(D), self.size)
        ]

    def describe(self) -> str:
        return f"fixed-size:{self.size}"


@dataclass(frozen=True)
class FixedSetQueries(QueryDistribution):
    """Point mass on one particular observed set."""

    members: tuple[int, ...]

    def validate(self, D: int) -> None:
        obs = ObservedSet(D, self.members)
        if len(obs) >= D:
            raise ValueError("fixed observed set must leave at least one variable missing")

    def sample(self, D: int, rng) -> ObservedSet:
        self.validate(D)
        return ObservedSet(D, self.members)

    def support(self, D: int, max_size: int = 64):
        self.validate(D)
        return [(ObservedSet(D, self.members), 1.0)]

    def describe(self) -> str:
        return "fixed-set:" + ",".join(str(i) for i in sorted(self.members))


@dataclass(frozen=True)
class EmptyQueries(QueryDistribution):
    """Point mass on the empty observed set (pure generation)."""

    def sample(self, D: int, rng) -> ObservedSet:
        return ObservedSet.empty(D)

    def support(self, D: int, max_size: int = 64):
        return [(ObservedSet.empty(D), 1.0)]

    def describe(self) -> str:
        return "empty"


def parse_query_dist(spec: str, D: int | None = None) -> QueryDistribution:
    """Parse a query-distribution spec string.

    Accepted forms: "uniform", "empty", "fixed-size:<s>", "fixed-size:half"
    (requires D), "fixed-set:i,j,k".
    """
    spec = spec.strip().lower()
    if spec == "uniform":
        return UniformQueries()
    if spec == "empty":
        return EmptyQueries()
    if spec.startswith("fixed-size:"):
        arg = spec.split(":", 1)[1]
        if arg == "half":
            if D is None:
                raise ValueError("fixed-size:half needs the data dimensionality")
            return FixedSizeQueries(D // 2)
        return FixedSizeQueries(int(arg))
    if spec.startswith("fixed-set:"):
        arg = spec.split(":", 1)[1]
        members = tuple(int(t) for t in arg.split(",") if t != "")
        return FixedSetQueries(members)
    raise ValueError(f"unrecognized query distribution: {spec!r}")


def sample_query(dist: QueryDistribution, D: int, rng) -> ObservedSet:
    """Draw one observed set from the distribution."""
    dist.validate(D)
    return dist.sample(D, rng)


class EnumerationLimitError(ValueError):
    """Raised when an exact oracle would have to enumerate too much."""


# --- counting ------------------------------------------------------------


def count_conditionals_of_size(D: int, d: int) -> int:
    """Number of one-dimensional conditionals with d-1 conditioning variables.

    C(D, d-1) choices of conditioning set times (D-d+1) choices of target.
    """
    if not 1 <= d <= D:
        raise ValueError(f"d must be in 1..{D}, got {d}")
    return math.comb(D, d - 1) * (D - d + 1)


def count_trained_conditionals_oapp(D: int, K: int) -> int:
    """Upper bound on conditionals reachable from K fixed orderings: K*(2^D - 1)."""
    if D < 1 or K < 1:
        raise ValueError("D and K must be >= 1")
    return K * (2**D - 1)


def audit_conditional_usage(events, D: int) -> Counter:
    """Histogram of trained-conditional sizes from logged training events.

    Each event exposes the conditioning mask via a ``prefix`` attribute
    (or is a bare ObservedSet); the conditional size is |mask| + 1.
    """
    hist: Counter = Counter()
    for ev in events:
        mask = getattr(ev, "prefix", ev)
        size = len(mask) + 1
        if not 1 <= size <= D:
            raise ValueError(f"event implies conditional size {size} outside 1..{D}")
        hist[size] += 1
    return hist
