"""Instance model: goods, bundles, valuations, matroid oracles, validation.

Conventions used throughout the package:

  * Goods are indexed 0..m-1 internally.  File formats and the CLI use
    1-indexed good labels; the shift happens only in `qfair.serialize`.
  * A bundle is a plain int bitmask over the goods (bit j <=> good j).
    m is capped at 63 so every bundle fits in a machine word.
  * All weights and table values are exact rationals
    (`fractions.Fraction`).  Floats are rejected at construction time:
    quantile boundaries live on the 1/n^m grid and float ties would
    corrupt fairness verdicts.
  * Valuation and matroid objects are immutable after construction and
    their oracles are pure functions, so they are safe to share across
    workers.

Constructors are lenient about semantic invariants (monotonicity,
antichain structure, matroid axioms): `validate` reports every violation
with a witness instead of raising, which also permits deliberately
non-monotone tables such as the single-chore demo instance.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

MAX_GOODS = 63
DEFAULT_EXACT_CAP = 24
EXACT_CAP_ENV = "QFAIR_EXACT_CAP"

Rational = Union[int, Fraction]


class BudgetExceeded(RuntimeError):
    """An operation refused to run because it would exceed a size budget."""


class ExactCapExceeded(BudgetExceeded):
    """2^m enumeration refused; raise the cap or fall back to sampling."""


def exact_cap() -> int:
    """Good-count cap for 2^m enumerations (env QFAIR_EXACT_CAP overrides)."""
    raw = os.environ.get(EXACT_CAP_ENV)
    if raw is None:
        return DEFAULT_EXACT_CAP
    cap = int(raw)
    if not 1 <= cap <= MAX_GOODS:
        raise ValueError(f"{EXACT_CAP_ENV} must be in 1..{MAX_GOODS}, got {cap}")
    return cap


def check_exact_cap(m: int, cap: int | None = None) -> None:
    limit = exact_cap() if cap is None else cap
    if m > limit:
        raise ExactCapExceeded(
            f"m={m} exceeds the exact-enumeration cap {limit}; use sampling "
            f"(sample_satisfaction) or raise {EXACT_CAP_ENV}"
        )


def as_rational(x, what: str = "value") -> Fraction:
    """Coerce int / Fraction / 'p/q' string to an exact Fraction.

    Floats are rejected: fairness verdicts must stay on the exact grid.
    """
    if isinstance(x, bool):
        raise TypeError(f"{what} must be a rational, got bool")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        raise TypeError(
            f"{what} must be an exact rational (int, Fraction or 'p/q' string), "
            f"got float {x!r}"
        )
    raise TypeError(f"{what} must be an exact rational, got {type(x).__name__}")


def rational_str(x: Rational) -> str:
    f = Fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------

def full_mask(m: int) -> int:
    return (1 << m) - 1


def mask_of(goods: Iterable[int]) -> int:
    """Bitmask of an iterable of 0-indexed goods."""
    mask = 0
    for g in goods:
        mask |= 1 << g
    return mask


def goods_in(mask: int) -> tuple[int, ...]:
    """Ascending 0-indexed goods of a bundle mask."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def check_bundle(mask: int, m: int) -> None:
    if mask < 0 or mask >> m:
        raise ValueError(f"bundle {bin(mask)} has goods outside 0..{m - 1}")


def check_good_count(m: int) -> None:
    if not 1 <= m <= MAX_GOODS:
        raise ValueError(f"good count must be in 1..{MAX_GOODS}, got {m}")


# ---------------------------------------------------------------------------
# matroids
# ---------------------------------------------------------------------------

class Matroid:
    """Rank/independence oracle over ground set 0..ground_size-1.

    Subclasses implement `_rank`; `rank` adds range checking.  The
    independence oracle is derived (S independent iff rank(S) == |S|),
    which keeps the two oracles consistent by construction.
    """

    ground_size: int

    def _rank(self, mask: int) -> int:
        raise NotImplementedError

    def rank(self, mask: int) -> int:
        check_bundle(mask, self.ground_size)
        return self._rank(mask)

    def is_independent(self, mask: int) -> bool:
        return self.rank(mask) == mask.bit_count()


@dataclass(frozen=True)
class UniformMatroid(Matroid):
    ground_size: int
    rank_cap: int

    def __post_init__(self):
        if self.rank_cap < 0 or self.ground_size < 0:
            raise ValueError("uniform matroid needs ground_size, rank_cap >= 0")

    def _rank(self, mask: int) -> int:
        return min(mask.bit_count(), self.rank_cap)


@dataclass(frozen=True)
class PartitionMatroid(Matroid):
    """Blocks are disjoint bundle masks; at most capacity[b] per block.

    Ground elements outside every block are loops (rank contribution 0).
    """

    ground_size: int
    blocks: tuple[int, ...]
    capacities: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "capacities", tuple(self.capacities))
        if len(self.blocks) != len(self.capacities):
            raise ValueError("one capacity per block required")
        seen = 0
        for b in self.blocks:
            check_bundle(b, self.ground_size)
            if seen & b:
                raise ValueError("partition matroid blocks must be disjoint")
            seen |= b
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be >= 0")

    def _rank(self, mask: int) -> int:
        return sum(
            min((mask & b).bit_count(), c)
            for b, c in zip(self.blocks, self.capacities)
        )


@dataclass(frozen=True)
class GraphicMatroid(Matroid):
    """Ground set = edge list of a multigraph on vertices 0..num_vertices-1."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((u, v) for u, v in self.edges))
        for u, v in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u},{v}) outside vertex range")

    @property
    def ground_size(self) -> int:  # type: ignore[override]
        return len(self.edges)

    def _rank(self, mask: int) -> int:
        # size of a maximal forest among the selected edges, via union-find
        parent = list(range(self.num_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        count = 0
        for j in goods_in(mask):
            u, v = self.edges[j]
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                count += 1
        return count


@dataclass(frozen=True)
class ExplicitBasesMatroid(Matroid):
    ground_size: int
    bases: tuple[int, ...]

    def __post_init__(self):
        if not self.bases:
            raise ValueError("at least one basis required")
        for b in self.bases:
            check_bundle(b, self.ground_size)
        object.__setattr__(self, "bases", tuple(sorted(set(self.bases))))

    def _rank(self, mask: int) -> int:
        # every independent set is a subset of a basis
        return max((mask & b).bit_count() for b in self.bases)


@dataclass(frozen=True)
class TruncationMatroid(Matroid):
    inner: Matroid
    cap: int

    def __post_init__(self):
        if self.cap < 0:
            raise ValueError("truncation cap must be >= 0")

    @property
    def ground_size(self) -> int:  # type: ignore[override]
        return self.inner.ground_size

    def _rank(self, mask: int) -> int:
        return min(self.inner._rank(mask), self.cap)


@dataclass(frozen=True)
class DirectSumMatroid(Matroid):
    """Parts placed side by side: part i occupies a contiguous bit range."""

    parts: tuple[Matroid, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("direct sum of zero matroids")

    @property
    def ground_size(self) -> int:  # type: ignore[override]
        return sum(p.ground_size for p in self.parts)

    def _rank(self, mask: int) -> int:
        total = 0
        shift = 0
        for p in self.parts:
            g = p.ground_size
            total += p._rank((mask >> shift) & full_mask(g))
            shift += g
        return total


@dataclass(frozen=True)
class RelabelMatroid(Matroid):
    """Element j of the relabeled matroid is element permutation[j] inside."""

    inner: Matroid
    permutation: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "permutation", tuple(self.permutation))
        if sorted(self.permutation) != list(range(self.inner.ground_size)):
            raise ValueError("permutation must be a bijection on the ground set")

    @property
    def ground_size(self) -> int:  # type: ignore[override]
        return self.inner.ground_size

    def _rank(self, mask: int) -> int:
        inner_mask = 0
        for j in goods_in(mask):
            inner_mask |= 1 << self.permutation[j]
        return self.inner._rank(inner_mask)


def rank(matroid: Matroid, mask: int) -> int:
    """Matroid rank of a ground subset, with range checking."""
    return matroid.rank(mask)


# ---------------------------------------------------------------------------
# valuations
# ---------------------------------------------------------------------------

class Valuation:
    """Monotone set function over bundles of m goods.

    `value(mask)` is exact: a Fraction for weighted variants, an int for
    matroid ranks.  Range checking is done once at the `evaluate` entry
    point, not in the inner oracles.
    """

    m: int

    def value(self, mask: int):
        raise NotImplementedError


def _freeze_weights(weights) -> tuple[Fraction, ...]:
    return tuple(as_rational(w, "weight") for w in weights)


@dataclass(frozen=True)
class Additive(Valuation):
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _freeze_weights(self.weights))
        check_good_count(len(self.weights))

    @property
    def m(self) -> int:  # type: ignore[override]
        return len(self.weights)

    def value(self, mask: int) -> Fraction:
        total = Fraction(0)
        for j in goods_in(mask):
            total += self.weights[j]
        return total


@dataclass(frozen=True)
class UnitDemand(Valuation):
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _freeze_weights(self.weights))
        check_good_count(len(self.weights))

    @property
    def m(self) -> int:  # type: ignore[override]
        return len(self.weights)

    def value(self, mask: int) -> Fraction:
        best = Fraction(0)
        for j in goods_in(mask):
            if self.weights[j] > best:
                best = self.weights[j]
        return best


@dataclass(frozen=True)
class MatroidRank(Valuation):
    matroid: Matroid

    @property
    def m(self) -> int:  # type: ignore[override]
        return self.matroid.ground_size

    def value(self, mask: int) -> int:
        return self.matroid._rank(mask)


@dataclass(frozen=True)
class Explicit01(Valuation):
    """0/1 valuation: value 1 iff the bundle contains some minimal one.

    Canonical form: members deduplicated and sorted by (cardinality, mask),
    so equal functions serialize identically.  Whether the members form an
    antichain is checked by `validate`, not here.
    """

    m: int
    minimal_ones: tuple[int, ...]

    def __post_init__(self):
        check_good_count(self.m)
        ones = sorted(set(self.minimal_ones), key=lambda s: (s.bit_count(), s))
        for s in ones:
            check_bundle(s, self.m)
        object.__setattr__(self, "minimal_ones", tuple(ones))

    def value(self, mask: int) -> int:
        for s in self.minimal_ones:
            if s & mask == s:
                return 1
        return 0


@dataclass(frozen=True)
class Table(Valuation):
    """Explicit value table over all 2^m bundles (small m only).

    `values[mask]` is the value of that bundle.  Use `table_from_dict` to
    build one from a partial-looking mapping; the table itself must be
    complete.
    """

    m: int
    values: tuple[Fraction, ...]

    def __post_init__(self):
        check_good_count(self.m)
        if len(self.values) != 1 << self.m:
            raise ValueError(
                f"table must list all {1 << self.m} bundle values, "
                f"got {len(self.values)}"
            )
        object.__setattr__(
            self, "values", tuple(as_rational(v, "table value") for v in self.values)
        )

    def value(self, mask: int) -> Fraction:
        return self.values[mask]


def table_from_dict(m: int, values: Mapping[int, Rational]) -> Table:
    """Build a Table from {mask: value}; every mask 0..2^m-1 must appear."""
    missing = [s for s in range(1 << m) if s not in values]
    if missing:
        raise ValueError(f"table is missing {len(missing)} bundle values")
    return Table(m, tuple(values[s] for s in range(1 << m)))


def evaluate(valuation: Valuation, bundle: int):
    """Exact value of a bundle under any valuation variant."""
    check_bundle(bundle, valuation.m)
    return valuation.value(bundle)


# ---------------------------------------------------------------------------
# instances and allocations
# ---------------------------------------------------------------------------

Allocation = tuple  # n bundle masks, pairwise disjoint, covering all goods


@dataclass(frozen=True)
class Instance:
    n: int
    m: int
    valuations: tuple[Valuation, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"agent count must be >= 1, got {self.n}")
        check_good_count(self.m)
        object.__setattr__(self, "valuations", tuple(self.valuations))
        if len(self.valuations) != self.n:
            raise ValueError("one valuation per agent required")
        for i, v in enumerate(self.valuations):
            if v.m != self.m:
                raise ValueError(
                    f"valuation {i} is over {v.m} goods, instance has {self.m}"
                )


def check_allocation(instance: Instance, bundles: Sequence[int]) -> tuple[int, ...]:
    """Ensure bundles form a partition of the goods; return them as a tuple."""
    if len(bundles) != instance.n:
        raise ValueError(f"allocation needs {instance.n} bundles, got {len(bundles)}")
    union = 0
    for b in bundles:
        check_bundle(b, instance.m)
        if union & b:
            raise ValueError("allocation bundles overlap")
        union |= b
    if union != full_mask(instance.m):
        raise ValueError("allocation does not cover all goods")
    return tuple(bundles)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    agent: int | None
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


MATROID_CHECK_LIMIT = 12


def _format_bundle(mask: int) -> str:
    return "{" + ",".join(str(g + 1) for g in goods_in(mask)) + "}"


def _check_matroid_axioms(matroid: Matroid, agent, out: list[Violation]) -> None:
    g = matroid.ground_size
    if g > MATROID_CHECK_LIMIT:
        return
    ranks = [matroid._rank(s) for s in range(1 << g)]
    if ranks[0] != 0:
        out.append(Violation("matroid_rank_empty", agent, f"rank(empty)={ranks[0]}"))
        return
    for s in range(1 << g):
        for j in range(g):
            if s >> j & 1:
                continue
            delta = ranks[s | 1 << j] - ranks[s]
            if delta not in (0, 1):
                out.append(Violation(
                    "matroid_unit_increment", agent,
                    f"rank({_format_bundle(s | 1 << j)}) - "
                    f"rank({_format_bundle(s)}) = {delta}",
                ))
                return
    # local exchange: flat S with two rank-preserving extensions j, j' must
    # keep rank when both are added; with unit increments this is equivalent
    # to submodularity
    for s in range(1 << g):
        flats = [j for j in range(g)
                 if not s >> j & 1 and ranks[s | 1 << j] == ranks[s]]
        for a in range(len(flats)):
            for b in range(a + 1, len(flats)):
                both = s | 1 << flats[a] | 1 << flats[b]
                if ranks[both] != ranks[s]:
                    out.append(Violation(
                        "matroid_submodularity", agent,
                        f"{_format_bundle(s)} +{flats[a] + 1} +{flats[b] + 1} "
                        f"raises rank {ranks[s]} -> {ranks[both]}",
                    ))
                    return
    if isinstance(matroid, ExplicitBasesMatroid):
        sizes = {b.bit_count() for b in matroid.bases}
        if len(sizes) > 1:
            out.append(Violation(
                "basis_cardinality", agent,
                f"bases of different sizes {sorted(sizes)}",
            ))
            return
        for b1 in matroid.bases:
            for b2 in matroid.bases:
                for x in goods_in(b1 & ~b2):
                    if not any(
                        (b1 & ~(1 << x)) | 1 << y in matroid.bases
                        for y in goods_in(b2 & ~b1)
                    ):
                        out.append(Violation(
                            "basis_exchange", agent,
                            f"no exchange for {x + 1} in "
                            f"{_format_bundle(b1)} vs {_format_bundle(b2)}",
                        ))
                        return


def validate(instance: Instance) -> ValidationReport:
    """Report every violated invariant with a witness; empty report = valid.

    Monotonicity is checked exhaustively for Explicit01/Table and is
    structural for the other variants; matroid axioms are spot-checked
    exhaustively for ground sets up to 12 elements.
    """
    out: list[Violation] = []
    for i, v in enumerate(instance.valuations):
        if isinstance(v, (Additive, UnitDemand)):
            for j, w in enumerate(v.weights):
                if w < 0:
                    out.append(Violation(
                        "negative_weight", i, f"good {j + 1} has weight {w}"))
        elif isinstance(v, Explicit01):
            ones = v.minimal_ones
            for a in range(len(ones)):
                for b in range(len(ones)):
                    if a != b and ones[a] & ones[b] == ones[a]:
                        out.append(Violation(
                            "not_antichain", i,
                            f"{_format_bundle(ones[a])} is contained in "
                            f"{_format_bundle(ones[b])}",
                        ))
        elif isinstance(v, Table):
            for s in range(1 << v.m):
                if v.values[s] < 0:
                    out.append(Violation(
                        "negative_value", i, f"value({_format_bundle(s)}) < 0"))
                    break
            done = False
            for s in range(1 << v.m):
                for j in goods_in(s):
                    if v.values[s ^ 1 << j] > v.values[s]:
                        out.append(Violation(
                            "not_monotone", i,
                            f"value({_format_bundle(s ^ 1 << j)}) = "
                            f"{v.values[s ^ 1 << j]} > "
                            f"value({_format_bundle(s)}) = {v.values[s]}",
                        ))
                        done = True
                        break
                if done:
                    break
        elif isinstance(v, MatroidRank):
            _check_matroid_axioms(v.matroid, i, out)
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# random monotone 0/1 valuations (shared by test harnesses and suites)
# ---------------------------------------------------------------------------

def random_explicit01(m: int, rng) -> Explicit01:
    """Random monotone 0/1 valuation, as a random antichain of minimal ones.

    Constants appear with small probability so sweeps exercise the edges.
    """
    roll = rng.random()
    if roll < 0.05:
        return Explicit01(m, ())            # constant 0
    if roll < 0.10:
        return Explicit01(m, (0,))          # constant 1
    count = rng.randint(1, max(2, m))
    picks = [rng.randrange(1, 1 << m) for _ in range(count)]
    minimal = [
        s for s in picks
        if not any(t != s and t & s == t for t in picks)
    ]
    return Explicit01(m, tuple(minimal))
