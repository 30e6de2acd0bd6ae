"""Exact value distributions under the uniform random allocation.

In a uniformly random allocation among n agents, an agent's bundle X
contains every good independently with probability 1/n.  Equivalently,
over the n^m equally likely allocations, the bundle S is received in
exactly (n-1)^(m-|S|) of them.  All distribution weights here are those
integer allocation counts with common denominator n^m, so every
probability, quantile and satisfaction value is an exact rational.

The q-quantile share of a valuation is the q-quantile of v(X):
sup{t : F(t) < q}.  On a discrete distribution this equals the least
atom value whose cumulative weight reaches q * n^m, which is how it is
computed (integer cross-multiplication, no floats).

`exact_distribution` is contractually the aggregation of all 2^m bundles
with weight (n-1)^(m-|S|); per-variant fast paths (convolution for
additive, closed form for unit-demand, inclusion-exclusion for 0/1) are
algebraically identical and are cross-checked against the plain
enumeration in the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .core import (
    Additive,
    Explicit01,
    ExactCapExceeded,
    Instance,
    MatroidRank,
    Table,
    UnitDemand,
    Valuation,
    as_rational,
    check_allocation,
    check_bundle,
    check_exact_cap,
    evaluate,
    full_mask,
)

SAMPLE_CHUNK = 4096


def _check_q(q) -> Fraction:
    q = as_rational(q, "q")
    if not 0 < q <= 1:
        raise ValueError(f"q must be a rational in (0, 1], got {q}")
    return q


@dataclass(frozen=True)
class ValueDistribution:
    """Distribution of v(X) as (value, allocation count) atoms.

    Atoms are strictly ascending in value, counts are positive integers
    summing to n^m.
    """

    n: int
    m: int
    atoms: tuple[tuple[Fraction, int], ...]

    @property
    def denominator(self) -> int:
        return self.n ** self.m

    @cached_property
    def _values(self):
        return [v for v, _ in self.atoms]

    @cached_property
    def _cumulative(self):
        out = []
        total = 0
        for _, w in self.atoms:
            total += w
            out.append(total)
        return out

    def cumulative_weight(self, value) -> int:
        """Number of allocations with v(X) <= value."""
        import bisect

        idx = bisect.bisect_right(self._values, value)
        return self._cumulative[idx - 1] if idx else 0

    def probability_at_most(self, value) -> Fraction:
        return Fraction(self.cumulative_weight(value), self.denominator)

    def quantile(self, q) -> Fraction:
        """Least atom value whose cumulative weight reaches q * n^m."""
        q = _check_q(q)
        target_num = q.numerator * self.denominator
        for value, cum in zip(self._values, self._cumulative):
            if cum * q.denominator >= target_num:
                return value
        return self._values[-1]


def _aggregate(pairs) -> tuple[tuple[Fraction, int], ...]:
    acc: dict = {}
    for value, weight in pairs:
        if weight:
            acc[value] = acc.get(value, 0) + weight
    return tuple(sorted(acc.items()))


def _additive_atoms(valuation: Additive, n: int):
    # convolution over goods: each good contributes its weight with
    # multiplicity 1 and nothing with multiplicity n-1
    scale = math.lcm(*(w.denominator for w in valuation.weights))
    scaled = [w.numerator * (scale // w.denominator) for w in valuation.weights]
    dist = {0: 1}
    for w in scaled:
        new: dict = {}
        for v, c in dist.items():
            new[v] = new.get(v, 0) + c * (n - 1)
            new[v + w] = new.get(v + w, 0) + c
        dist = new
    return _aggregate((Fraction(v, scale), c) for v, c in dist.items())


def _unit_demand_atoms(valuation: UnitDemand, n: int):
    # v(X) <= t  iff  X avoids every good with weight > t
    m = valuation.m
    levels = sorted({Fraction(0), *valuation.weights})
    pairs = []
    prev_cum = 0
    for t in levels:
        above = sum(1 for w in valuation.weights if w > t)
        cum = (n - 1) ** above * n ** (m - above)
        if cum > prev_cum:
            pairs.append((t, cum - prev_cum))
            prev_cum = cum
    return tuple(pairs)


def _explicit01_one_count(valuation: Explicit01, n: int) -> int:
    """Number of allocations whose bundle contains some minimal one.

    Inclusion-exclusion over the minimal ones: the bundles containing a
    fixed set M carry total weight n^(m-|M|); falls back to plain 2^m
    enumeration when the family is large.
    """
    m = valuation.m
    ones = valuation.minimal_ones
    if not ones:
        return 0
    if len(ones) <= m:
        total = 0
        r = len(ones)
        for picks in range(1, 1 << r):
            union = 0
            for i in range(r):
                if picks >> i & 1:
                    union |= ones[i]
            term = n ** (m - union.bit_count())
            total += term if picks.bit_count() % 2 else -term
        return total
    count = 0
    for s in range(1 << m):
        if valuation.value(s):
            count += (n - 1) ** (m - s.bit_count())
    return count


def _generic_atoms(valuation: Valuation, n: int):
    m = valuation.m
    pow_table = [(n - 1) ** k for k in range(m + 1)]
    acc: dict = {}
    for s in range(1 << m):
        v = valuation.value(s)
        w = pow_table[m - s.bit_count()]
        if w:
            acc[v] = acc.get(v, 0) + w
    return tuple(sorted(acc.items()))


@lru_cache(maxsize=1024)
def _distribution_cached(valuation: Valuation, n: int) -> ValueDistribution:
    m = valuation.m
    if isinstance(valuation, Additive):
        atoms = _additive_atoms(valuation, n)
    elif isinstance(valuation, UnitDemand):
        atoms = _unit_demand_atoms(valuation, n)
    elif isinstance(valuation, Explicit01):
        ones = _explicit01_one_count(valuation, n)
        zeros = n ** m - ones
        pairs = [(Fraction(0), zeros), (Fraction(1), ones)]
        atoms = tuple((v, w) for v, w in pairs if w)
    else:
        atoms = _generic_atoms(valuation, n)
    return ValueDistribution(n, m, atoms)


def exact_distribution(
    valuation: Valuation, n: int, cap: int | None = None
) -> ValueDistribution:
    """Exact distribution of v(X) with atom weights summing to n^m."""
    if n < 1:
        raise ValueError(f"agent count must be >= 1, got {n}")
    check_exact_cap(valuation.m, cap)
    return _distribution_cached(valuation, n)


def quantile_share(valuation: Valuation, n: int, q, cap: int | None = None):
    """The q-quantile of v(X) for exact rational q in (0, 1]."""
    q = _check_q(q)
    return exact_distribution(valuation, n, cap).quantile(q)


def satisfaction(
    valuation: Valuation, n: int, bundle: int, cap: int | None = None
) -> Fraction:
    """P[v(X) <= v(bundle)] as an exact rational with denominator n^m."""
    check_bundle(bundle, valuation.m)
    dist = exact_distribution(valuation, n, cap)
    return dist.probability_at_most(valuation.value(bundle))


def is_q_fair(
    valuation: Valuation, n: int, q, bundle: int, cap: int | None = None
) -> bool:
    """Whether v(bundle) weakly exceeds the q-quantile share."""
    check_bundle(bundle, valuation.m)
    tau = quantile_share(valuation, n, q, cap)
    return evaluate(valuation, bundle) >= tau


def sample_satisfaction(
    valuation: Valuation,
    n: int,
    bundle: int,
    samples: int,
    delta: float = 0.01,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo estimate of the satisfaction probability.

    Draws bundles with each good included independently with probability
    1/n from a counter-based generator (Philox), so a fixed seed yields a
    fixed estimate.  Returns (empirical frequency of v(X) <= v(bundle),
    Hoeffding half-width sqrt(ln(2/delta) / (2 * samples))).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    check_bundle(bundle, valuation.m)
    threshold = valuation.value(bundle)
    rng = np.random.Generator(np.random.Philox(key=seed))
    m = valuation.m
    hits = 0
    done = 0
    powers = np.array([1 << j for j in range(m)], dtype=np.int64)
    while done < samples:
        take = min(SAMPLE_CHUNK, samples - done)
        # fixed chunk width keeps the stream identical across call patterns
        include = rng.random((take, m)) < 1.0 / n
        masks = include @ powers
        for mask in masks:
            if valuation.value(int(mask)) <= threshold:
                hits += 1
        done += take
    half_width = math.sqrt(math.log(2.0 / delta) / (2.0 * samples))
    return hits / samples, half_width


@dataclass(frozen=True)
class Verdict:
    agent: int
    bundle_value: Fraction
    quantile_share: Fraction
    satisfaction: Fraction
    fair: bool


@dataclass(frozen=True)
class AllocationReport:
    q: Fraction
    verdicts: tuple[Verdict, ...]
    min_satisfaction: Fraction

    @property
    def fair(self) -> bool:
        return all(v.fair for v in self.verdicts)


def allocation_report(
    instance: Instance, allocation, q, cap: int | None = None
) -> AllocationReport:
    """Per-agent fairness verdicts for an allocation at quantile q.

    `min_satisfaction` is the largest q' for which this allocation is
    q'-fair towards every agent.
    """
    q = _check_q(q)
    bundles = check_allocation(instance, allocation)
    verdicts = []
    min_sat = Fraction(1)
    for i, (v, s) in enumerate(zip(instance.valuations, bundles)):
        dist = exact_distribution(v, instance.n, cap)
        value = v.value(s)
        tau = dist.quantile(q)
        sat = dist.probability_at_most(value)
        verdicts.append(Verdict(i, Fraction(value), Fraction(tau), sat, value >= tau))
        min_sat = min(min_sat, sat)
    return AllocationReport(q, tuple(verdicts), min_sat)


def count_zero_allocations(valuation: Explicit01, n: int) -> int:
    """Number of the n^m allocations that give this agent value 0."""
    if not isinstance(valuation, Explicit01):
        raise TypeError("count_zero_allocations expects an Explicit01 valuation")
    if n < 1:
        raise ValueError(f"agent count must be >= 1, got {n}")
    return n ** valuation.m - _explicit01_one_count(valuation, n)


# ---------------------------------------------------------------------------
# per-mask tables used by the allocation scanners
# ---------------------------------------------------------------------------

def bundle_values(valuation: Valuation, cap: int | None = None) -> list:
    """Values of all 2^m bundles, indexed by mask."""
    check_exact_cap(valuation.m, cap)
    return [valuation.value(s) for s in range(1 << valuation.m)]


def cumulative_table(
    valuation: Valuation, n: int, cap: int | None = None
) -> list[int]:
    """cumulative_table[mask] = number of allocations with v(X) <= v(mask)."""
    dist = exact_distribution(valuation, n, cap)
    return [dist.cumulative_weight(v) for v in bundle_values(valuation, cap)]
