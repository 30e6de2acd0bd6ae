"""Critical-threshold experiments over monotone 0/1 profiles.

The central question: with a per-agent budget B on the number of
allocations an agent may value at 0 (out of n^m), is there a profile in
which every allocation leaves someone at 0?  At the default budget

    B = n^(m-n+1) * (n-1)^(n-1) - 1

a profile with full coverage would push the critical feasibility
quantile above (1-1/n)^(n-1); an exhaustion certificate at this budget
pins the critical quantile exactly there for the searched sizes.

The built-in search enumerates downward-closed zero-families directly
(the frontier of a monotone 0/1 valuation), never raw 2^(2^m) value
tables; Dedekind growth still makes n=3, m=5 the practical in-process
limit, so larger sizes are exported as an integer program in LP format
(`export_ip`) for an external solver.  The emitted file is
byte-deterministic for a given spec.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    Additive,
    BudgetExceeded,
    Explicit01,
    Instance,
    Table,
    as_rational,
)
from .allocate import (
    DEFAULT_SCAN_BUDGET,
    InfeasibilityCertificate,
    _chunk_masks,
    _iter_chunks,
    allocation_from_index,
    check_scan_budget,
    exhaustive_fair_allocation,
    maximin_satisfaction_allocation,
)
from .quantile import count_zero_allocations, cumulative_table
from .veto import VetoList, valuation_from_veto


def budget(n: int, m: int) -> int:
    """Largest per-agent count of 0-valued allocations that cannot block
    everyone: n^(m-n+1) * (n-1)^(n-1) - 1."""
    if m < n - 1:
        raise ValueError(f"need m >= n-1, got n={n}, m={m}")
    return n ** (m - n + 1) * (n - 1) ** (n - 1) - 1


@dataclass(frozen=True)
class SearchSpec:
    n: int
    m: int
    budget: int | None = None
    symmetry: bool = True

    def resolved_budget(self) -> int:
        return budget(self.n, self.m) if self.budget is None else self.budget


@dataclass(frozen=True)
class CounterexampleProfile:
    """A profile within the budget in which no allocation satisfies everyone."""

    instance: Instance
    q: Fraction
    zero_counts: tuple[int, ...]
    budget: int


@dataclass(frozen=True)
class ExhaustionCertificate:
    """Every in-budget profile admits an all-satisfied allocation."""

    n: int
    m: int
    budget: int
    candidate_families: int
    profiles_examined: int
    symmetry: bool


# ---------------------------------------------------------------------------
# monotone zero-family enumeration
# ---------------------------------------------------------------------------

def downward_closed_families(m: int, n: int, max_cost: int | None = None):
    """Yield (bitmap, cost) for every downward-closed family over 2^[m].

    The bitmap has bit s set when bundle mask s is in the family; cost is
    the family's allocation count sum (n-1)^(m-|s|).  Families exceeding
    max_cost are pruned during generation, not filtered afterwards.
    """
    order = sorted(range(1 << m), key=lambda s: (s.bit_count(), s))
    weight = [(n - 1) ** (m - s.bit_count()) for s in order]
    subs = []
    for s in order:
        need = 0
        mask = s
        while mask:
            low = mask & -mask
            need |= 1 << (s ^ low)
            mask ^= low
        subs.append(need)

    results = []

    def rec(pos, bitmap, cost):
        if pos == len(order):
            results.append((bitmap, cost))
            return
        s = order[pos]
        rec(pos + 1, bitmap, cost)  # exclude s
        if bitmap & subs[pos] == subs[pos]:
            new_cost = cost + weight[pos]
            if max_cost is None or new_cost <= max_cost:
                rec(pos + 1, bitmap | 1 << s, new_cost)

    rec(0, 0, 0)
    return results


def _permuted_bitmap(bitmap: int, m: int, perm) -> int:
    out = 0
    for s in range(1 << m):
        if bitmap >> s & 1:
            t = 0
            for j in range(m):
                if s >> j & 1:
                    t |= 1 << perm[j]
            out |= 1 << t
    return out


def _is_canonical_under_good_permutations(bitmap: int, m: int) -> bool:
    for perm in itertools.permutations(range(m)):
        if _permuted_bitmap(bitmap, m, perm) < bitmap:
            return False
    return True


BUILTIN_SEARCH_SIZES = {(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3), (3, 4)}


def search_counterexample(spec: SearchSpec):
    """Exhaustive profile search at built-in sizes.

    Returns a CounterexampleProfile (a within-budget profile whose
    zero-families jointly cover all n^m allocations) or an
    ExhaustionCertificate that none exists.  Larger sizes are refused;
    use export_ip and an external IP solver for those.
    """
    n, m = spec.n, spec.m
    if (n, m) not in BUILTIN_SEARCH_SIZES:
        raise BudgetExceeded(
            f"built-in search supports n=2,3 with m <= 4; "
            f"(n={n}, m={m}) must go through export_ip"
        )
    cap = spec.resolved_budget()
    total = n ** m
    candidates = sorted(downward_closed_families(m, n, cap))
    # which of the n^m allocations give agent slot i the bundle s
    alloc_bits = [[0] * (1 << m) for _ in range(n)]
    for a in range(total):
        bundles = allocation_from_index(a, n, m)
        for i, s in enumerate(bundles):
            alloc_bits[i][s] |= 1 << a

    cover = [[0] * len(candidates) for _ in range(n)]
    for ci, (bitmap, _) in enumerate(candidates):
        members = [s for s in range(1 << m) if bitmap >> s & 1]
        for i in range(n):
            acc = 0
            for s in members:
                acc |= alloc_bits[i][s]
            cover[i][ci] = acc
    slot_union = [0] * n
    for i in range(n):
        for c in cover[i]:
            slot_union[i] |= c

    first_slot = list(range(len(candidates)))
    if spec.symmetry:
        first_slot = [
            ci for ci in first_slot
            if _is_canonical_under_good_permutations(candidates[ci][0], m)
        ]

    if not candidates or candidates[0][0] != 0:
        raise RuntimeError("candidate enumeration must start with the empty family")
    everything = (1 << total) - 1
    examined = 0
    chosen: list[int] = []

    def dfs(slot, uncovered):
        nonlocal examined
        if not uncovered:
            # remaining agents veto nothing (constant-1 valuations)
            while len(chosen) < n:
                chosen.append(0)  # candidate 0 is the empty family
            return True
        if slot == n:
            return False
        remaining = n - slot
        if uncovered.bit_count() > remaining * cap:
            return False
        reachable = 0
        for i in range(slot, n):
            reachable |= slot_union[i]
        if uncovered & ~reachable:
            return False
        pool = first_slot if slot == 0 else range(len(candidates))
        for ci in pool:
            examined += 1
            chosen.append(ci)
            if dfs(slot + 1, uncovered & ~cover[slot][ci]):
                return True
            chosen.pop()
        return False

    found = dfs(0, everything)
    if not found:
        return ExhaustionCertificate(
            n, m, cap, len(candidates), examined, spec.symmetry
        )
    valuations = []
    for ci in chosen:
        bitmap = candidates[ci][0]
        family = frozenset(s for s in range(1 << m) if bitmap >> s & 1)
        valuations.append(valuation_from_veto(VetoList(0, n, m, family)))
    instance = Instance(n, m, tuple(valuations))
    q = Fraction(cap + 1, total)
    zero_counts = tuple(count_zero_allocations(v, n) for v in valuations)
    if any(c > cap for c in zero_counts):
        raise RuntimeError("search returned a profile over budget")
    verdict = exhaustive_fair_allocation(instance, q)
    if not isinstance(verdict, InfeasibilityCertificate):
        raise RuntimeError("search returned a satisfiable profile")
    return CounterexampleProfile(instance, q, zero_counts, cap)


# ---------------------------------------------------------------------------
# LP export
# ---------------------------------------------------------------------------

def export_ip(spec: SearchSpec, path, max_rows: int = 2_000_000) -> None:
    """Write the profile-search integer program in LP format.

    Binaries x_<agent>_<hexmask> give each agent's 0/1 value per bundle.
    Rows: monotonicity x_{i,S} >= x_{i,S'} for S' = S minus one good;
    per-agent budget sum_S (n-1)^(m-|S|) x_{i,S} >= n^m - B (the vetoed
    count is at most B); per-allocation sum_i x_{i,S_i} <= n-1 (someone
    is unhappy).  Objective is the constant 0: pure feasibility.
    """
    n, m = spec.n, spec.m
    cap = spec.resolved_budget()
    total = n ** m
    rows = total + n * m * (1 << (m - 1)) + n
    if rows > max_rows:
        raise BudgetExceeded(f"{rows} rows exceed the export limit {max_rows}")
    hex_width = max(1, (m + 3) // 4)
    idx_width = len(str(total - 1))

    def var(agent, mask):
        return f"x_{agent + 1}_{mask:0{hex_width}x}"

    lines = [
        f"\\ monotone 0/1 profile search: n={n} m={m} budget={cap}",
        "Minimize",
        " obj: 0",
        "Subject To",
    ]
    for i in range(n):
        for s in range(1, 1 << m):
            mask = s
            while mask:
                low = mask & -mask
                sub = s ^ low
                lines.append(
                    f" mono_{i + 1}_{s:0{hex_width}x}_{sub:0{hex_width}x}: "
                    f"{var(i, s)} - {var(i, sub)} >= 0"
                )
                mask ^= low
    for i in range(n):
        terms = " + ".join(
            f"{(n - 1) ** (m - s.bit_count())} {var(i, s)}" for s in range(1 << m)
        )
        lines.append(f" cap_{i + 1}: {terms} >= {total - cap}")
    for a in range(total):
        bundles = allocation_from_index(a, n, m)
        terms = " + ".join(var(i, s) for i, s in enumerate(bundles))
        lines.append(f" alloc_{a:0{idx_width}d}: {terms} <= {n - 1}")
    lines.append("Binaries")
    for i in range(n):
        for s in range(1 << m):
            lines.append(f" {var(i, s)}")
    lines.append("End")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_lp_counts(path) -> dict:
    """Count variables and row kinds of an exported LP file (self-check)."""
    counts = {"variables": 0, "monotonicity": 0, "threshold": 0, "allocation": 0}
    in_binaries = False
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line == "Binaries":
                in_binaries = True
                continue
            if line == "End":
                in_binaries = False
                continue
            if in_binaries and line.startswith("x_"):
                counts["variables"] += 1
            elif line.startswith("mono_"):
                counts["monotonicity"] += 1
            elif line.startswith("cap_"):
                counts["threshold"] += 1
            elif line.startswith("alloc_"):
                counts["allocation"] += 1
    return counts


# ---------------------------------------------------------------------------
# named instances
# ---------------------------------------------------------------------------

def generate_named_instance(name: str, n: int | None = None, m: int | None = None,
                            epsilon=None) -> Instance:
    """Build one of the named demonstration instances.

    prop3            n-1 unit goods among m (identical additive); the
                     infeasibility witness with critical q = (1-1/n)^(n-1)
    unequal_bundles  n-1 unit goods plus m-n+1 epsilon-goods (identical
                     additive); separates equal-size from free allocation
    mms_gap          two 0/1 agents over 4 goods whose maximin shares are
                     1 while every allocation zeroes someone out
    identical_goods  m unit goods, identical additive
    single_chore     one bad: identical decreasing table on m=1 (flagged
                     by validate, by design)
    """
    if name == "prop3":
        if n is None or m is None:
            raise ValueError("prop3 requires n and m")
        if n < 2 or m < n - 1:
            raise ValueError("prop3 requires n >= 2 and m >= n-1")
        weights = (Fraction(1),) * (n - 1) + (Fraction(0),) * (m - n + 1)
        return Instance(n, m, (Additive(weights),) * n)
    if name == "unequal_bundles":
        if n is None or m is None:
            raise ValueError("unequal_bundles requires n and m")
        eps = as_rational(epsilon if epsilon is not None else Fraction(1, 100), "epsilon")
        weights = (Fraction(1),) * (n - 1) + (eps,) * (m - n + 1)
        return Instance(n, m, (Additive(weights),) * n)
    if name == "mms_gap":
        v1 = Explicit01(4, (0b0011, 0b1100))
        v2 = Explicit01(4, (0b0101, 0b1010))
        return Instance(2, 4, (v1, v2))
    if name == "identical_goods":
        if n is None or m is None:
            raise ValueError("identical_goods requires n and m")
        return Instance(n, m, (Additive((Fraction(1),) * m),) * n)
    if name == "single_chore":
        if n is None:
            raise ValueError("single_chore requires n")
        bad = Table(1, (Fraction(1), Fraction(0)))
        return Instance(n, 1, (bad,) * n)
    raise ValueError(f"unknown instance name {name!r}")


# ---------------------------------------------------------------------------
# equal-size vs unconstrained allocation gap
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EqualSizeGapReport:
    n: int
    m: int
    epsilon: Fraction
    size_slack: Fraction
    equal_size_q: Fraction | None
    equal_size_allocation: tuple | None
    unconstrained_q: Fraction
    unconstrained_allocation: tuple

    @property
    def strict_gap(self) -> bool:
        return self.equal_size_q is not None and self.equal_size_q < self.unconstrained_q


def equal_size_gap_report(
    n: int, m: int, epsilon, size_slack,
    scan_budget: int = DEFAULT_SCAN_BUDGET,
) -> EqualSizeGapReport:
    """Best min-satisfaction among near-equal-size allocations vs overall.

    Near-equal-size means every bundle size is within size_slack of m/n.
    On the unequal-bundles instance the free optimum beats the equal-size
    one: the valuable goods cannot reach everyone, so one agent must be
    paid off with the whole epsilon pile.
    """
    eps = as_rational(epsilon, "epsilon")
    slack = as_rational(size_slack, "size_slack")
    if slack < 0:
        raise ValueError("size_slack must be >= 0")
    instance = generate_named_instance("unequal_bundles", n=n, m=m, epsilon=eps)
    total = check_scan_budget(n, m, scan_budget)
    cum = [
        np.array(cumulative_table(v, n), dtype=np.int64)
        for v in instance.valuations
    ]
    popcounts = np.array([s.bit_count() for s in range(1 << m)], dtype=np.int64)
    # | size - m/n | <= slack  <=>  | size*n - m | * den <= num * n
    limit = slack.numerator * n
    den = slack.denominator

    best_weight = -1
    best_index = 0
    for start, stop in _iter_chunks(total):
        masks = _chunk_masks(n, m, start, stop)
        sizes = popcounts[masks]
        fits = (np.abs(sizes * n - m) * den <= limit).all(axis=1)
        if not fits.any():
            continue
        sat = cum[0][masks[:, 0]]
        for i in range(1, n):
            np.minimum(sat, cum[i][masks[:, i]], out=sat)
        sat = np.where(fits, sat, -1)
        idx = int(np.argmax(sat))
        if int(sat[idx]) > best_weight:
            best_weight, best_index = int(sat[idx]), start + idx
    unconstrained_alloc, unconstrained_q = maximin_satisfaction_allocation(
        instance, scan_budget
    )
    if best_weight < 0:
        equal_q, equal_alloc = None, None
    else:
        equal_q = Fraction(best_weight, total)
        equal_alloc = allocation_from_index(best_index, n, m)
    return EqualSizeGapReport(
        n, m, eps, slack, equal_q, equal_alloc, unconstrained_q, unconstrained_alloc
    )
