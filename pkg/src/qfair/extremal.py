"""Extremal set-family combinatorics and exact probability bounds.

Families are k-uniform subsets of [m], stored as deduplicated bundle
masks in a canonical order (minimum element, then mask value), which
keeps every search tree and certificate reproducible.

The toolkit covers: exact matching numbers via branch and bound, rainbow
matchings across a tuple of families, shadows and the Kruskal-Katona
implication, the two classical extremal constructions for families with
no n pairwise disjoint members (all sets meeting a fixed (n-1)-element
hitting set, and all k-subsets of a (kn-1)-element universe), a random
falsification harness around the corresponding open matching bound, and
an instance-level checker that walks a 0/1 valuation through the
matching-bound / shadow chain at k = m/n - 1.

Transcendental comparisons (1/e, Poisson tails) are done against exact
rational enclosures built from series with certified remainders, at an
explicit precision (default 10^-15); any verdict that falls inside the
enclosure is reported as "within_precision" rather than forced to a
boolean.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .core import BudgetExceeded, check_bundle, goods_in, mask_of

DEFAULT_FAMILY_BUDGET = 10 ** 5
DEFAULT_PRECISION = Fraction(1, 10 ** 15)


def _canonical_key(mask: int):
    return ((mask & -mask).bit_length() - 1, mask)


@dataclass(frozen=True)
class SetFamily:
    """k-uniform family of subsets of [m], canonically ordered."""

    m: int
    k: int
    sets: tuple[int, ...]

    def __post_init__(self):
        if self.k < 0 or self.k > self.m:
            raise ValueError(f"need 0 <= k <= m, got k={self.k}, m={self.m}")
        canon = sorted(set(self.sets), key=_canonical_key)
        for s in canon:
            check_bundle(s, self.m)
            if s.bit_count() != self.k:
                raise ValueError(
                    f"set {bin(s)} has size {s.bit_count()}, family is {self.k}-uniform"
                )
        object.__setattr__(self, "sets", tuple(canon))

    def __len__(self) -> int:
        return len(self.sets)


def family_from_goods(m: int, k: int, sets) -> SetFamily:
    return SetFamily(m, k, tuple(mask_of(s) for s in sets))


# ---------------------------------------------------------------------------
# matchings
# ---------------------------------------------------------------------------

def _check_family_budget(count: int, budget: int) -> None:
    if count > budget:
        raise BudgetExceeded(f"{count} sets exceed the search budget {budget}")


def matching_number(family: SetFamily, budget: int = DEFAULT_FAMILY_BUDGET) -> int:
    """Exact maximum number of pairwise disjoint members.

    Branch and bound over the canonical order; a branch is cut when even
    one new set per k free elements cannot beat the incumbent.
    """
    sets = family.sets
    _check_family_budget(len(sets), budget)
    if not sets:
        return 0
    if family.k == 0:
        return 1  # the empty set is the only member
    m, k = family.m, family.k
    best = 0

    def dfs(idx, used, count):
        nonlocal best
        if count > best:
            best = count
        free = (m - used.bit_count()) // k
        for i in range(idx, len(sets)):
            if count + min(len(sets) - i, free) <= best:
                return
            s = sets[i]
            if not s & used:
                dfs(i + 1, used | s, count + 1)

    dfs(0, 0, 0)
    return best


def has_matching(
    family: SetFamily, target: int, budget: int = DEFAULT_FAMILY_BUDGET
) -> bool:
    """Whether the family contains `target` pairwise disjoint members."""
    sets = family.sets
    _check_family_budget(len(sets), budget)
    if target <= 0:
        return True
    if family.k == 0:
        return target <= 1
    m, k = family.m, family.k

    def dfs(idx, used, count):
        if count == target:
            return True
        free = (m - used.bit_count()) // k
        for i in range(idx, len(sets)):
            if count + min(len(sets) - i, free) < target:
                return False
            s = sets[i]
            if not s & used and dfs(i + 1, used | s, count + 1):
                return True
        return False

    return dfs(0, 0, 0)


def rainbow_matching(
    families: list[SetFamily], budget: int = DEFAULT_FAMILY_BUDGET
):
    """Pairwise disjoint sets, one from each family, or None.

    None means the collection is cross-dependent.  Families are scanned
    in input order, sets in canonical order, so the returned matching is
    deterministic.
    """
    if not families:
        return ()
    m = families[0].m
    if any(f.m != m for f in families):
        raise ValueError("families must share the universe")
    _check_family_budget(sum(len(f) for f in families), budget)

    picked = []

    def dfs(i, used):
        if i == len(families):
            return True
        for s in families[i].sets:
            if not s & used:
                picked.append(s)
                if dfs(i + 1, used | s):
                    return True
                picked.pop()
        return False

    return tuple(picked) if dfs(0, 0) else None


# ---------------------------------------------------------------------------
# shadows and Kruskal-Katona
# ---------------------------------------------------------------------------

def shadow(family: SetFamily, k_prime: int) -> SetFamily:
    """All k'-subsets contained in some member of the family."""
    if k_prime > family.k:
        raise ValueError(f"shadow level {k_prime} above family level {family.k}")
    out = set()
    for s in family.sets:
        for combo in itertools.combinations(goods_in(s), k_prime):
            out.add(mask_of(combo))
    return SetFamily(family.m, k_prime, tuple(out))


def kruskal_katona_check(family: SetFamily, m_prime: int, k_prime: int) -> bool:
    """|family| >= C(m',k) implies |shadow_(k')| >= C(m',k'); vacuous otherwise."""
    if not k_prime <= family.k <= m_prime <= family.m:
        raise ValueError("need k' <= k <= m' <= m")
    if len(family) < math.comb(m_prime, family.k):
        return True
    return len(shadow(family, k_prime)) >= math.comb(m_prime, k_prime)


# ---------------------------------------------------------------------------
# extremal bounds and constructions
# ---------------------------------------------------------------------------

def emc_bounds(m: int, k: int, n: int) -> tuple[int, int, int]:
    """(hitting-set bound, small-universe bound, their max) for nu < n.

    C(m,k) - C(m-n+1,k) counts the k-sets meeting a fixed (n-1)-set;
    C(kn-1,k) counts all k-sets of a (kn-1)-element universe.  k = 0 is
    0 by convention.
    """
    if k == 0:
        return 0, 0, 0
    if m < k * n:
        raise ValueError(f"need m >= k*n, got m={m}, k={k}, n={n}")
    cover = math.comb(m, k) - math.comb(m - n + 1, k)
    clique = math.comb(k * n - 1, k)
    return cover, clique, max(cover, clique)


def emc_extremal_families(
    m: int, k: int, n: int, budget: int = DEFAULT_FAMILY_BUDGET
) -> tuple[SetFamily, SetFamily]:
    """The two extremal constructions, verified for size and matching number."""
    cover_size, clique_size, _ = emc_bounds(m, k, n)
    _check_family_budget(math.comb(m, k), budget)
    hitting = (1 << (n - 1)) - 1
    cover_sets = [
        mask_of(c)
        for c in itertools.combinations(range(m), k)
        if mask_of(c) & hitting
    ]
    clique_sets = [mask_of(c) for c in itertools.combinations(range(k * n - 1), k)]
    cover_family = SetFamily(m, k, tuple(cover_sets))
    clique_family = SetFamily(m, k, tuple(clique_sets))
    if len(cover_family) != cover_size or len(clique_family) != clique_size:
        raise RuntimeError("extremal construction size mismatch")
    for fam in (cover_family, clique_family):
        if matching_number(fam, budget) != n - 1:
            raise RuntimeError("extremal construction has wrong matching number")
    return cover_family, clique_family


@dataclass(frozen=True)
class FalsificationHit:
    """A sampled family (or tuple of families) beating the extremal bound.

    Finding one would refute the corresponding open matching bound; it is
    returned with the full data so it can be re-verified independently.
    """

    kind: str
    m: int
    k: int
    n: int
    trial: int
    families: tuple[SetFamily, ...]


def emc_falsify(
    m: int,
    k: int,
    n: int,
    trials: int,
    seed: int = 0,
    budget: int = DEFAULT_FAMILY_BUDGET,
):
    """Random search for a family above the bound with no (rainbow) n-matching.

    Samples families of size bound+1 and n-tuples of such families.
    Returning None is consistent with the conjectured bound at these
    parameters and trial count; it proves nothing.
    """
    total = math.comb(m, k)
    _check_family_budget(total, budget)
    _, _, bound = emc_bounds(m, k, n)
    size = bound + 1
    if size > total:
        return None
    all_sets = [mask_of(c) for c in itertools.combinations(range(m), k)]
    rng = random.Random(seed)
    for trial in range(trials):
        fam = SetFamily(m, k, tuple(rng.sample(all_sets, size)))
        if not has_matching(fam, n, budget):
            return FalsificationHit("matching", m, k, n, trial, (fam,))
        fams = [
            SetFamily(m, k, tuple(rng.sample(all_sets, size))) for _ in range(n)
        ]
        if rainbow_matching(fams, budget) is None:
            return FalsificationHit("rainbow", m, k, n, trial, tuple(fams))
    return None


# ---------------------------------------------------------------------------
# instance-level chain checker at k = m/n - 1
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelReport:
    k_prime: int
    zero_count: int
    required: int
    size_ok: bool
    shadow_contained: bool
    ratio: Fraction
    ratio_ok: bool


@dataclass(frozen=True)
class ChainReport:
    n: int
    m: int
    k: int
    applicable: bool
    matching_number: int
    emc_ok: bool
    levels: tuple[LevelReport, ...]
    ratio_bound: Fraction

    @property
    def conjecture_counterexample(self) -> bool:
        return self.applicable and not self.emc_ok


def theorem_chain_check(
    valuation, n: int, budget: int = DEFAULT_FAMILY_BUDGET
) -> ChainReport:
    """Walk a 0/1 valuation through the matching-bound and shadow chain.

    At k = m/n - 1: if the satisfied k-sets have no n-matching, the open
    bound predicts at least C(m-n+1, k) zero-valued k-sets, and the
    shadow propagation predicts C(m-n+1, k') at every k' <= k, with the
    zero fraction at least (1-1/n)^(n-1).  A failure of the first step
    is flagged (a genuine counterexample to the conjectured bound);
    failures below it would contradict a theorem and indicate a broken
    input (non-monotone valuation) or a bug.
    """
    m = valuation.m
    if m % n != 0:
        raise ValueError(f"need n | m, got n={n}, m={m}")
    k = m // n - 1
    if k < 1:
        raise ValueError(f"need m/n - 1 >= 1, got m={m}, n={n}")
    _check_family_budget(math.comb(m, k), budget)

    def level_sets(kk):
        ones, zeros = [], []
        for combo in itertools.combinations(range(m), kk):
            s = mask_of(combo)
            (ones if valuation.value(s) else zeros).append(s)
        return ones, zeros

    ones_k, zeros_k = level_sets(k)
    satisfied = SetFamily(m, k, tuple(ones_k))
    nu = matching_number(satisfied, budget)
    ratio_bound = Fraction((n - 1) ** (n - 1), n ** (n - 1))
    if nu >= n:
        return ChainReport(n, m, k, False, nu, True, (), ratio_bound)
    required_k = math.comb(m - n + 1, k)
    emc_ok = len(zeros_k) >= required_k
    zero_family_k = SetFamily(m, k, tuple(zeros_k))
    levels = []
    for k_prime in range(k, -1, -1):
        if k_prime == k:
            zero_sets = set(zeros_k)
            contained = True
        else:
            _, zeros_kp = level_sets(k_prime)
            zero_sets = set(zeros_kp)
            # monotonicity forces every sub-set of a zero set to be zero
            contained = set(shadow(zero_family_k, k_prime).sets) <= zero_sets
        required = math.comb(m - n + 1, k_prime)
        ratio = Fraction(len(zero_sets), math.comb(m, k_prime))
        levels.append(LevelReport(
            k_prime,
            len(zero_sets),
            required,
            len(zero_sets) >= required,
            contained,
            ratio,
            ratio >= ratio_bound,
        ))
    return ChainReport(n, m, k, True, nu, emc_ok, tuple(levels), ratio_bound)


# ---------------------------------------------------------------------------
# rational enclosures for 1/e, square roots, exponentials
# ---------------------------------------------------------------------------

def one_over_e_interval(precision: Fraction = DEFAULT_PRECISION):
    """Rational (lo, hi) with lo < 1/e < hi and hi - lo < precision.

    Partial sums of sum (-1)^k / k! alternate around 1/e, so two
    consecutive ones enclose it.
    """
    total = Fraction(0)
    term = Fraction(1)
    k = 0
    while term >= precision / 2:
        total += term if k % 2 == 0 else -term
        k += 1
        term /= k
    nxt = total + (term if k % 2 == 0 else -term)
    return min(total, nxt), max(total, nxt)


def inv_two_sqrt_interval(value: int, digits: int = 24):
    """Rational (lo, hi) enclosing 1 / (2 sqrt(value)) for a positive int."""
    scale = 10 ** digits
    root = math.isqrt(value * scale * scale)
    # root <= sqrt(value)*scale < root + 1
    return Fraction(scale, 2 * (root + 1)), Fraction(scale, 2 * root)


def matroid_share_bound_interval(n: int, precision: Fraction = DEFAULT_PRECISION):
    """Enclosure of 1/e - 1/(2 sqrt(n(n-1)))."""
    e_lo, e_hi = one_over_e_interval(precision / 2)
    s_lo, s_hi = inv_two_sqrt_interval(n * (n - 1))
    return e_lo - s_hi, e_hi - s_lo


def compare_interval(exact: Fraction, lo: Fraction, hi: Fraction) -> str:
    """Three-valued comparison of an exact value against an enclosure."""
    if exact > hi:
        return "above"
    if exact < lo:
        return "below"
    return "within_precision"


def exp_interval(x: Fraction, precision: Fraction):
    """Rational (lo, hi) with lo <= e^x <= hi for x >= 0."""
    if x < 0:
        raise ValueError("exp_interval expects x >= 0")
    total = Fraction(1)
    term = Fraction(1)
    k = 0
    while True:
        k += 1
        term *= x / k
        total += term
        if x < k + 2:
            tail = term * (x / (k + 1)) / (1 - x / (k + 2))
            if tail < precision:
                return total, total + tail


# ---------------------------------------------------------------------------
# binomial and Poisson quantile bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QnReport:
    """Scan of inf over t of P[Bin(tn-1, 1/n) < t] up to t_max.

    `value` is the exact minimum over the scanned range (an estimate of
    the true infimum), `argmin_t` its first witness; `gap` compares it
    against (1-1/n)^(n-1), whose sign is an open question and is only
    reported, never asserted.
    """

    n: int
    t_max: int
    value: Fraction
    argmin_t: int
    estimate: float
    bound_lo: Fraction
    bound_hi: Fraction
    bound: float
    bound_verdict: str
    conjecture_value: Fraction
    conjecture_gap: Fraction

    @property
    def gap(self) -> float:
        return float(self.conjecture_gap)


def binomial_cdf_below(t: int, n: int) -> Fraction:
    """P[Bin(tn-1, 1/n) < t], exactly.

    The common factor (n-1)^(trials-t+1) is pulled out of the sum so the
    per-term arithmetic stays on small integers.
    """
    trials = t * n - 1
    head = sum(
        math.comb(trials, i) * (n - 1) ** (t - 1 - i) for i in range(t)
    )
    num = head * (n - 1) ** (trials - t + 1)
    return Fraction(num, n ** trials)


def binomial_qn(
    n: int, t_max: int, precision: Fraction = DEFAULT_PRECISION
) -> QnReport:
    """Minimize the exact binomial CDF value over t = 1..t_max."""
    if n < 2 or t_max < 1:
        raise ValueError("need n >= 2 and t_max >= 1")
    best = None
    best_t = None
    for t in range(1, t_max + 1):
        value = binomial_cdf_below(t, n)
        if best is None or value < best:
            best, best_t = value, t
    lo, hi = matroid_share_bound_interval(n, precision)
    conjecture = Fraction((n - 1) ** (n - 1), n ** (n - 1))
    return QnReport(
        n=n,
        t_max=t_max,
        value=best,
        argmin_t=best_t,
        estimate=float(best),
        bound_lo=lo,
        bound_hi=hi,
        bound=float((lo + hi) / 2),
        bound_verdict=compare_interval(best, lo, hi),
        conjecture_value=conjecture,
        conjecture_gap=best - conjecture,
    )


def poisson_below_mean(lam, precision: Fraction = DEFAULT_PRECISION) -> float:
    """P[Poisson(lam) <= lam], to the requested precision."""
    lo, hi = poisson_below_mean_interval(lam, precision)
    return float((lo + hi) / 2)


def poisson_below_mean_interval(lam, precision: Fraction = DEFAULT_PRECISION):
    """Rational enclosure of P[Poisson(lam) <= lam]."""
    lam = Fraction(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    head = sum(lam ** k / math.factorial(k) for k in range(math.floor(lam) + 1))
    # P = head / e^lam; tighten the e^lam enclosure until P is pinned down
    target = precision / (2 * head) if head else precision
    e_lo, e_hi = exp_interval(lam, target)
    return head / e_hi, head / e_lo


def poisson_exceeds_one_over_e(
    lam, precision: Fraction = DEFAULT_PRECISION
) -> str:
    """Three-valued check of P[Poisson(lam) <= lam] > 1/e."""
    p_lo, p_hi = poisson_below_mean_interval(lam, precision)
    e_lo, e_hi = one_over_e_interval(precision)
    if p_lo > e_hi:
        return "above"
    if p_hi < e_lo:
        return "below"
    return "within_precision"


def lemma9_check(n: int, k: int) -> bool:
    """Exact check that the hitting-set bound dominates at m = (k+1)n.

    C(m,k) - C(m-n+1,k) >= C(kn-1,k), with equality required at k = 1.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    m = (k + 1) * n
    lhs = math.comb(m, k) - math.comb(m - n + 1, k)
    rhs = math.comb(k * n - 1, k)
    if k == 1:
        return lhs == rhs
    return lhs >= rhs
