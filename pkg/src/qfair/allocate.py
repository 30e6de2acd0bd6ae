"""Allocation algorithms and maximin-share machinery.

Contents:

  * round-robin picking for additive / unit-demand profiles, with the
    fixed tie-break "lowest-indexed good first";
  * exhaustive allocation scans in a canonical order (the allocation is
    encoded as the base-n string of agent-of-good digits, good 1 most
    significant, scanned ascending), used for q-fair search and for the
    exact maximin-satisfaction value q*;
  * maximin share (MMS) via brute-force set-partition enumeration, and
    for matroid-rank valuations via matroid intersection: n disjoint
    independent sets of size k exist iff the direct sum of n truncated
    copies and the one-copy-per-good partition matroid share a common
    independent set of size n*k;
  * the exact Bernoulli deviation check P[sum w_j b_j <= p sum w_j]
    >= 0.14 (1-p), with 0.14 taken as the exact rational 14/100.

Scans are chunked; chunk results merge by keeping the smallest canonical
index, so the outcome does not depend on chunking or thread count.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    Additive,
    BudgetExceeded,
    DirectSumMatroid,
    Instance,
    Matroid,
    MatroidRank,
    PartitionMatroid,
    TruncationMatroid,
    UnitDemand,
    Valuation,
    as_rational,
    full_mask,
    goods_in,
)
from .quantile import (
    bundle_values,
    cumulative_table,
    exact_distribution,
    quantile_share,
)

DEFAULT_SCAN_BUDGET = 10 ** 8
DEFAULT_PARTITION_BUDGET = 10 ** 6
SCAN_CHUNK = 1 << 14


# ---------------------------------------------------------------------------
# canonical allocation enumeration
# ---------------------------------------------------------------------------

def check_scan_budget(n: int, m: int, budget: int = DEFAULT_SCAN_BUDGET) -> int:
    total = n ** m
    if total > budget:
        raise BudgetExceeded(
            f"{n}^{m} = {total} allocations exceed the scan budget {budget}"
        )
    return total


def allocation_from_index(index: int, n: int, m: int) -> tuple[int, ...]:
    """Decode a canonical allocation index into per-agent bundle masks."""
    bundles = [0] * n
    for j in range(m):
        digit = (index // n ** (m - 1 - j)) % n
        bundles[digit] |= 1 << j
    return tuple(bundles)


def _chunk_masks(n: int, m: int, start: int, stop: int) -> np.ndarray:
    """(stop-start, n) int64 matrix of bundle masks for an index range."""
    idx = np.arange(start, stop, dtype=np.int64)
    rows = np.arange(stop - start)
    masks = np.zeros((stop - start, n), dtype=np.int64)
    for j in range(m):
        digit = (idx // n ** (m - 1 - j)) % n
        masks[rows, digit] |= 1 << j
    return masks


def _iter_chunks(total: int, chunk: int = SCAN_CHUNK):
    start = 0
    while start < total:
        stop = min(start + chunk, total)
        yield start, stop
        start = stop


def _map_chunks(fn, total: int, threads: int = 1):
    """Apply fn(start, stop) to every chunk, yielding results in order.

    With threads > 1 chunks run in a pool but results are still consumed
    in canonical order, so early-exit searches stay deterministic.
    """
    if threads <= 1:
        for start, stop in _iter_chunks(total):
            yield fn(start, stop)
        return
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = deque()
        for start, stop in _iter_chunks(total):
            pending.append(pool.submit(fn, start, stop))
            if len(pending) >= 2 * threads:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


# ---------------------------------------------------------------------------
# round robin
# ---------------------------------------------------------------------------

def round_robin(instance: Instance) -> tuple[int, ...]:
    """Round-robin allocation for additive or unit-demand profiles.

    Agents pick in instance order 1..n, m steps in total; at her turn an
    agent takes her maximum-weight remaining good, breaking ties in
    favor of the lowest-indexed good.
    """
    for v in instance.valuations:
        if not isinstance(v, (Additive, UnitDemand)):
            raise TypeError(
                "round_robin supports additive and unit-demand valuations only"
            )
    remaining = list(range(instance.m))
    bundles = [0] * instance.n
    for t in range(instance.m):
        agent = t % instance.n
        weights = instance.valuations[agent].weights
        pick = max(remaining, key=lambda j: (weights[j], -j))
        remaining.remove(pick)
        bundles[agent] |= 1 << pick
    return tuple(bundles)


# ---------------------------------------------------------------------------
# exhaustive q-fair search and maximin satisfaction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Proof that no allocation is q-fair for every agent.

    For every allocation the first unfair agent was recorded;
    `first_violator_counts` sums to n^m, so the violations cover the
    whole allocation space.
    """

    n: int
    m: int
    q: Fraction
    quantile_shares: tuple
    first_violator_counts: tuple[int, ...]
    example_violations: tuple

    @property
    def total(self) -> int:
        return self.n ** self.m

    @property
    def covers_all(self) -> bool:
        return sum(self.first_violator_counts) == self.total


def exhaustive_fair_allocation(
    instance: Instance,
    q,
    budget: int = DEFAULT_SCAN_BUDGET,
    threads: int = 1,
    cap: int | None = None,
):
    """First q-fair allocation in canonical order, else a certificate."""
    q = as_rational(q, "q")
    n, m = instance.n, instance.m
    total = check_scan_budget(n, m, budget)
    taus = [quantile_share(v, n, q, cap) for v in instance.valuations]
    ok = [
        np.array([value >= tau for value in bundle_values(v, cap)], dtype=bool)
        for v, tau in zip(instance.valuations, taus)
    ]

    counts = np.zeros(n, dtype=np.int64)
    examples: list[int | None] = [None] * n

    def scan(start, stop):
        masks = _chunk_masks(n, m, start, stop)
        good = np.ones(stop - start, dtype=bool)
        fails = np.zeros((n, stop - start), dtype=bool)
        for i in range(n):
            fail_i = ~ok[i][masks[:, i]]
            fails[i] = fail_i
            good &= ~fail_i
        hit = int(np.argmax(good)) if good.any() else None
        first_violator = np.argmax(fails, axis=0)
        chunk_counts = np.bincount(first_violator[~good], minlength=n)
        chunk_examples = [None] * n
        for i in range(n):
            where = (first_violator == i) & ~good
            if where.any():
                chunk_examples[i] = start + int(np.argmax(where))
        return start, hit, chunk_counts, chunk_examples

    for start, hit, chunk_counts, chunk_examples in _map_chunks(
        scan, total, threads
    ):
        if hit is not None:
            return allocation_from_index(start + hit, n, m)
        counts += chunk_counts
        for i in range(n):
            if examples[i] is None and chunk_examples[i] is not None:
                examples[i] = chunk_examples[i]
    return InfeasibilityCertificate(
        n, m, q, tuple(taus), tuple(int(c) for c in counts), tuple(examples)
    )


def maximin_satisfaction_allocation(
    instance: Instance,
    budget: int = DEFAULT_SCAN_BUDGET,
    threads: int = 1,
    cap: int | None = None,
) -> tuple[tuple[int, ...], Fraction]:
    """Allocation maximizing the minimum agent satisfaction, and that value.

    The returned q* is the largest q for which the instance admits a
    q-fair allocation; ties break to the earliest canonical allocation.
    """
    n, m = instance.n, instance.m
    total = check_scan_budget(n, m, budget)
    if total >= 1 << 62:
        raise BudgetExceeded("allocation count too large for exact int64 tables")
    cum = [
        np.array(cumulative_table(v, n, cap), dtype=np.int64)
        for v in instance.valuations
    ]

    def scan(start, stop):
        masks = _chunk_masks(n, m, start, stop)
        sat = cum[0][masks[:, 0]]
        for i in range(1, n):
            np.minimum(sat, cum[i][masks[:, i]], out=sat)
        best = int(np.argmax(sat))
        return int(sat[best]), start + best

    best_weight = -1
    best_index = 0
    for weight, index in _map_chunks(scan, total, threads):
        if weight > best_weight:
            best_weight, best_index = weight, index
    return (
        allocation_from_index(best_index, n, m),
        Fraction(best_weight, total),
    )


# ---------------------------------------------------------------------------
# maximin share
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MmsResult:
    value: Fraction
    witness: tuple[int, ...]
    method: str


def _stirling_partition_count(m: int, n: int) -> int:
    # number of set partitions of [m] into at most n nonempty blocks
    table = [[0] * (m + 1) for _ in range(m + 1)]
    table[0][0] = 1
    for i in range(1, m + 1):
        for k in range(1, m + 1):
            table[i][k] = table[i - 1][k - 1] + k * table[i - 1][k]
    return sum(table[m][k] for k in range(0, min(n, m) + 1))


def _iter_partitions(m: int, n: int):
    """All set partitions of goods 0..m-1 into at most n blocks, as masks.

    Restricted-growth enumeration: good j may open block k only if blocks
    0..k-1 are already open, which visits every partition exactly once.
    """
    blocks = [0] * n

    def rec(j, used):
        if j == m:
            yield tuple(blocks[:used])
            return
        for k in range(min(used + 1, n)):
            blocks[k] |= 1 << j
            yield from rec(j + 1, max(used, k + 1))
            blocks[k] &= ~(1 << j)

    yield from rec(0, 0)


def mms_value(
    valuation: Valuation,
    n: int,
    method: str = "auto",
    partition_budget: int = DEFAULT_PARTITION_BUDGET,
) -> MmsResult:
    """Maximin share: best-over-partitions worst bundle value.

    Matroid-rank valuations go through `matroid_mms` unless
    method="brute" forces the set-partition enumeration.
    """
    if method not in ("auto", "brute", "matroid"):
        raise ValueError(f"unknown method {method!r}")
    if method == "matroid" or (method == "auto" and isinstance(valuation, MatroidRank)):
        if not isinstance(valuation, MatroidRank):
            raise TypeError("matroid method requires a matroid-rank valuation")
        return matroid_mms(valuation.matroid, n)
    m = valuation.m
    if n == 1:
        grand = full_mask(m)
        return MmsResult(Fraction(valuation.value(grand)), (grand,), "brute")
    count = _stirling_partition_count(m, n)
    if count > partition_budget:
        raise BudgetExceeded(
            f"{count} set partitions exceed the budget {partition_budget}"
        )
    empty_value = valuation.value(0)
    best = None
    best_witness = None
    for blocks in _iter_partitions(m, n):
        worst = empty_value if len(blocks) < n else None
        for b in blocks:
            v = valuation.value(b)
            if worst is None or v < worst:
                worst = v
        if best is None or worst > best:
            best = worst
            best_witness = blocks + (0,) * (n - len(blocks))
    return MmsResult(Fraction(best), best_witness, "brute")


# ---------------------------------------------------------------------------
# matroid intersection
# ---------------------------------------------------------------------------

def _augmenting_path(m1: Matroid, m2: Matroid, common: int, ground: int):
    """Shortest augmenting path in the exchange graph, or None.

    Sources are the elements addable in m1, sinks those addable in m2;
    arcs x->y (x in I, y out) need I-x+y independent in m1 and arcs
    y->x need it independent in m2.  BFS with ascending expansion keeps
    the search deterministic.
    """
    inside = [e for e in range(ground) if common >> e & 1]
    outside = [e for e in range(ground) if not common >> e & 1]
    sources = [y for y in outside if m1.is_independent(common | 1 << y)]
    sinks = {y for y in outside if m2.is_independent(common | 1 << y)}
    if not sources or not sinks:
        return None
    for y in sources:
        if y in sinks:
            return [y]
    parent = {y: None for y in sources}
    queue = deque(sources)
    while queue:
        node = queue.popleft()
        if not common >> node & 1:
            # outside node: arcs to inside via m2 exchanges
            nexts = [
                x for x in inside
                if x not in parent
                and m2.is_independent((common ^ 1 << x) | 1 << node)
            ]
        else:
            # inside node: arcs to outside via m1 exchanges
            nexts = [
                y for y in outside
                if y not in parent
                and m1.is_independent((common ^ 1 << node) | 1 << y)
            ]
            for y in nexts:
                if y in sinks:
                    parent[y] = node
                    path = [y]
                    while path[-1] is not None:
                        path.append(parent[path[-1]])
                    return path[:-1][::-1]
        for nxt in nexts:
            parent[nxt] = node
            queue.append(nxt)
    return None


def matroid_intersection(m1: Matroid, m2: Matroid) -> int:
    """A maximum common independent set of two matroids, as a mask."""
    if m1.ground_size != m2.ground_size:
        raise ValueError(
            f"ground sizes differ: {m1.ground_size} vs {m2.ground_size}"
        )
    common = 0
    while True:
        path = _augmenting_path(m1, m2, common, m1.ground_size)
        if path is None:
            return common
        for e in path:
            common ^= 1 << e


@dataclass(frozen=True)
class EdmondsCertificate:
    certified: bool
    witness: int | None
    bound: int
    size: int
    reason: str


def edmonds_certificate(
    m1: Matroid,
    m2: Matroid,
    common: int,
    witness_set: int | None = None,
    scan_limit: int = 20,
) -> EdmondsCertificate:
    """Certify maximality of a common independent set by the min-max bound.

    Finds A with rank1(A) + rank2(E \\ A) equal to |common| (scanning all
    subsets unless one is supplied); refutes when the set is not common
    independent or not maximum.
    """
    if m1.ground_size != m2.ground_size:
        raise ValueError("ground sizes differ")
    ground = m1.ground_size
    size = common.bit_count()
    if not (m1.is_independent(common) and m2.is_independent(common)):
        return EdmondsCertificate(
            False, None, -1, size, "set is not independent in both matroids"
        )
    everything = full_mask(ground)
    if witness_set is not None:
        bound = m1.rank(witness_set) + m2.rank(everything & ~witness_set)
        if bound == size:
            return EdmondsCertificate(True, witness_set, bound, size, "certified")
        return EdmondsCertificate(
            False, witness_set, bound, size,
            f"supplied set bounds the maximum by {bound}, not {size}",
        )
    if ground > scan_limit:
        raise BudgetExceeded(
            f"ground size {ground} exceeds the exhaustive scan limit {scan_limit}"
        )
    best_bound = None
    best_set = None
    for a in range(1 << ground):
        bound = m1.rank(a) + m2.rank(everything & ~a)
        if best_bound is None or bound < best_bound:
            best_bound, best_set = bound, a
            if bound == size:
                break
    if best_bound == size:
        return EdmondsCertificate(True, best_set, best_bound, size, "certified")
    return EdmondsCertificate(
        False, best_set, best_bound, size,
        f"maximum common independent set has size {best_bound} > {size}",
    )


def matroid_mms(matroid: Matroid, n: int) -> MmsResult:
    """MMS of a matroid-rank valuation via matroid intersection.

    For ascending k, n disjoint independent k-sets exist iff the direct
    sum of n rank-k truncations meets the one-copy-per-good partition
    matroid in a common independent set of size n*k; feasibility is
    monotone in k, so the first failure stops the scan.
    """
    m = matroid.ground_size
    if n < 1:
        raise ValueError("agent count must be >= 1")
    if n == 1:
        grand = full_mask(m)
        return MmsResult(Fraction(matroid.rank(grand)), (grand,), "matroid")
    blocks = tuple(
        sum(1 << (i * m + j) for i in range(n)) for j in range(m)
    )
    one_per_good = PartitionMatroid(n * m, blocks, (1,) * m)
    best_k = 0
    best_bundles = [0] * n
    k = 1
    while k * n <= m:
        truncated = TruncationMatroid(matroid, k)
        copies = DirectSumMatroid((truncated,) * n)
        common = matroid_intersection(copies, one_per_good)
        if common.bit_count() != n * k:
            break
        best_k = k
        best_bundles = [
            (common >> (i * m)) & full_mask(m) for i in range(n)
        ]
        k += 1
    taken = 0
    for b in best_bundles:
        taken |= b
    best_bundles[0] |= full_mask(m) & ~taken  # leftovers cannot lower the min
    return MmsResult(Fraction(best_k), tuple(best_bundles), "matroid")


def mms_quantile(
    valuation: Valuation, n: int, cap: int | None = None
) -> Fraction:
    """Satisfaction probability of the maximin share: P[v(X) <= MMS]."""
    result = mms_value(valuation, n)
    dist = exact_distribution(valuation, n, cap)
    return dist.probability_at_most(result.value)


# ---------------------------------------------------------------------------
# Bernoulli deviation bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationCheck:
    probability: Fraction
    bound: Fraction
    ok: bool


BERNOULLI_CAP = 24


def bernoulli_deviation_check(weights: Sequence, p) -> DeviationCheck:
    """Exact P[sum w_j b_j <= p * sum w_j] for i.i.d. Bernoulli(p) b_j.

    The probability is compared against 0.14 (1-p) with 0.14 as the
    exact rational 14/100.
    """
    p = as_rational(p, "p")
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    ws = [as_rational(w, "weight") for w in weights]
    if any(w < 0 for w in ws):
        raise ValueError("weights must be nonnegative")
    m = len(ws)
    if m > BERNOULLI_CAP:
        raise BudgetExceeded(
            f"{m} weights exceed the exact enumeration cap {BERNOULLI_CAP}"
        )
    bound = Fraction(14, 100) * (1 - p)
    if m == 0:
        return DeviationCheck(Fraction(1), bound, True)
    scale = math.lcm(*(w.denominator for w in ws))
    scaled = [w.numerator * (scale // w.denominator) for w in ws]
    total = sum(scaled)
    a, b = p.numerator, p.denominator
    # value v is counted when v <= p * total, i.e. v * b <= a * total
    cutoff = (a * total) // b
    denominator = b ** m
    if denominator < 1 << 62 and total <= 1 << 20:
        counts = np.zeros(total + 1, dtype=np.int64)
        counts[0] = 1
        for w in scaled:
            nxt = counts * (b - a)
            if w == 0:
                nxt += counts * a
            else:
                nxt[w:] += counts[: total + 1 - w] * a
            counts = nxt
        below = int(counts[: cutoff + 1].sum())
    else:
        dist = {0: 1}
        for w in scaled:
            new: dict = {}
            for v, c in dist.items():
                new[v] = new.get(v, 0) + c * (b - a)
                new[v + w] = new.get(v + w, 0) + c * a
            dist = new
        below = sum(c for v, c in dist.items() if v <= cutoff)
    probability = Fraction(below, denominator)
    return DeviationCheck(probability, bound, probability >= bound)


def proportional_quantile_check(weights: Sequence, n: int) -> DeviationCheck:
    """Deviation check at p = 1/n: quantile of the proportional share."""
    if n < 1:
        raise ValueError("agent count must be >= 1")
    return bernoulli_deviation_check(weights, Fraction(1, n))
