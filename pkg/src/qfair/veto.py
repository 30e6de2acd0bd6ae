"""Veto lists and their equivalence with quantile-share feasibility.

An agent's veto list marks allocations as unacceptable.  A list is
monotonicity-consistent when vetoing depends only on the agent's own
bundle and is closed downward: if a bundle is vetoed, so is every
sub-bundle (regardless of what the other agents hold).  Such a list is
therefore stored intensionally as a downward-closed family of bundle
masks; the number of vetoed allocations is sum over family members S of
(n-1)^(m-|S|), never materializing the n^m allocation space.

The three-way equivalence connects: (1) every collection of consistent
lists of size <= b leaves some allocation unvetoed, (2) the q-quantile
share with q = (b+1)/n^m is feasible for all monotone valuations, and
(3) it is feasible for all monotone 0/1 valuations.  `equivalence_suite`
drives the two constructive directions on random 0/1 profiles: an
infeasible profile yields covering lists within the size budget, and
lists round-trip through a 0/1 valuation with identical verdicts.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    Explicit01,
    Instance,
    Valuation,
    as_rational,
    check_bundle,
    random_explicit01,
)
from .allocate import (
    DEFAULT_SCAN_BUDGET,
    _chunk_masks,
    _iter_chunks,
    allocation_from_index,
    check_scan_budget,
    exhaustive_fair_allocation,
    maximin_satisfaction_allocation,
)
from .quantile import bundle_values, quantile_share


@dataclass(frozen=True)
class VetoList:
    """Downward-closed family of vetoed bundles for one agent."""

    owner: int
    n: int
    m: int
    zero_bundles: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "zero_bundles", frozenset(self.zero_bundles))
        for s in self.zero_bundles:
            check_bundle(s, self.m)

    def vetoes_bundle(self, mask: int) -> bool:
        return mask in self.zero_bundles

    def allocation_count(self) -> int:
        """Number of the n^m allocations this list vetoes."""
        return sum(
            (self.n - 1) ** (self.m - s.bit_count()) for s in self.zero_bundles
        )


def veto_from_valuation(
    valuation: Valuation, n: int, q, owner: int = 0, cap: int | None = None
) -> VetoList:
    """List of bundles valued strictly below the q-quantile share."""
    q = as_rational(q, "q")
    tau = quantile_share(valuation, n, q, cap)
    family = frozenset(
        s for s, v in enumerate(bundle_values(valuation, cap)) if v < tau
    )
    return VetoList(owner, n, valuation.m, family)


def is_monotonicity_consistent(veto_list: VetoList) -> bool:
    """Whether the family is closed under removing single goods."""
    family = veto_list.zero_bundles
    for s in family:
        mask = s
        while mask:
            low = mask & -mask
            if s ^ low not in family:
                return False
            mask ^= low
    return True


def valuation_from_veto(veto_list: VetoList) -> Explicit01:
    """Monotone 0/1 valuation with value 0 exactly on the vetoed family."""
    if not is_monotonicity_consistent(veto_list):
        raise ValueError("veto list is not monotonicity-consistent")
    m = veto_list.m
    family = veto_list.zero_bundles
    minimal_ones = []
    for s in range(1 << m):
        if s in family:
            continue
        mask = s
        minimal = True
        while mask:
            low = mask & -mask
            if s ^ low not in family:
                minimal = False
                break
            mask ^= low
        if minimal:
            minimal_ones.append(s)
    return Explicit01(m, tuple(minimal_ones))


def find_unvetoed_allocation(
    lists: list[VetoList],
    budget: int = DEFAULT_SCAN_BUDGET,
):
    """First canonical allocation avoiding every agent's family, or None."""
    if not lists:
        raise ValueError("at least one veto list required")
    n = len(lists)
    m = lists[0].m
    for i, vl in enumerate(lists):
        if vl.m != m or vl.n != n:
            raise ValueError(f"list {i} disagrees on n or m")
    total = check_scan_budget(n, m, budget)
    ok = [
        np.array([s not in vl.zero_bundles for s in range(1 << m)], dtype=bool)
        for vl in lists
    ]
    for start, stop in _iter_chunks(total):
        masks = _chunk_masks(n, m, start, stop)
        good = ok[0][masks[:, 0]]
        for i in range(1, n):
            good &= ok[i][masks[:, i]]
        if good.any():
            return allocation_from_index(start + int(np.argmax(good)), n, m)
    return None


def round_trips(veto_list: VetoList) -> bool:
    """Whether the list survives valuation_from_veto -> veto_from_valuation.

    The induced 0/1 valuation has zero mass count/n^m, so choosing
    q = (count+1)/n^m puts the share at 1 and recovers exactly the
    original family.  The all-vetoing list induces the constant-0
    valuation, whose share stays 0; it is the one family that cannot
    round-trip, and is checked for that shape instead.
    """
    total = veto_list.n ** veto_list.m
    induced = valuation_from_veto(veto_list)
    count = veto_list.allocation_count()
    if count >= total:
        return induced.minimal_ones == ()
    q = Fraction(count + 1, total)
    back = veto_from_valuation(induced, veto_list.n, q, owner=veto_list.owner)
    return back.zero_bundles == veto_list.zero_bundles


# ---------------------------------------------------------------------------
# equivalence checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileEquivalence:
    q_star: Fraction
    checks: int
    infeasible_probes: int
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def check_profile_equivalence(instance: Instance) -> ProfileEquivalence:
    """Exercise both constructive directions of the veto equivalence.

    At the critical grid points q* and q* + 1/n^m:

      * the q-fair allocation search and the unvetoed-allocation search
        (on lists built from the valuations) must agree;
      * when the profile is infeasible at q, every list vetoes at most b
        allocations for q = (b+1)/n^m and the lists jointly cover all
        n^m allocations;
      * every list round-trips through its induced 0/1 valuation.
    """
    n, m = instance.n, instance.m
    total = n ** m
    failures: list[str] = []
    checks = 0
    infeasible_probes = 0
    _, q_star = maximin_satisfaction_allocation(instance)
    probes = [q_star] if q_star == 1 else [q_star, q_star + Fraction(1, total)]
    probes = [q for q in probes if 0 < q <= 1]
    for q in probes:
        lists = [
            veto_from_valuation(v, n, q, owner=i)
            for i, v in enumerate(instance.valuations)
        ]
        fair = exhaustive_fair_allocation(instance, q)
        unvetoed = find_unvetoed_allocation(lists)
        feasible = isinstance(fair, tuple)
        checks += 1
        if feasible != (unvetoed is not None):
            failures.append(
                f"verdict mismatch at q={q}: fair search {feasible}, "
                f"veto search {unvetoed is not None}"
            )
        if not feasible:
            infeasible_probes += 1
            b = (q.numerator * total) // q.denominator - 1
            counts = [vl.allocation_count() for vl in lists]
            checks += 1
            if not all(c <= b for c in counts):
                failures.append(f"list sizes {counts} exceed b={b} at q={q}")
            checks += 1
            if not fair.covers_all:
                failures.append(
                    f"violations cover {sum(fair.first_violator_counts)} "
                    f"of {total} allocations at q={q}"
                )
        for vl in lists:
            checks += 1
            if not round_trips(vl):
                failures.append(f"round trip failed for agent {vl.owner} at q={q}")
    return ProfileEquivalence(q_star, checks, infeasible_probes, tuple(failures))


@dataclass(frozen=True)
class EquivalenceReport:
    n: int
    m: int
    trials: int
    checks: int
    infeasible_probes: int
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def equivalence_suite(n: int, m: int, trials: int, seed: int = 0) -> EquivalenceReport:
    """Run the per-profile equivalence checks on random 0/1 profiles."""
    rng = random.Random(seed)
    checks = 0
    infeasible = 0
    failures: list[str] = []
    for t in range(trials):
        valuations = tuple(random_explicit01(m, rng) for _ in range(n))
        result = check_profile_equivalence(Instance(n, m, valuations))
        checks += result.checks
        infeasible += result.infeasible_probes
        failures.extend(f"trial {t}: {msg}" for msg in result.failures)
    return EquivalenceReport(n, m, trials, checks, infeasible, tuple(failures))
