"""Named acceptance checks, one per headline claim of the toolkit.

Each check runs the relevant library operations at desk scale with exact
arithmetic and returns a ReproResult; `run_target` drives one by name
and `run_all` the whole battery.  The names double as the `repro` CLI
targets.

Two checks mix vectorized sweeps with library calls: the exhaustive
monotone-0/1 sweeps at m = 5, 6 enumerate all 7581 / 7 828 354 monotone
functions and compare two independently computed routes (an allocation
scan against a set-partition search) entirely in integer numpy, then
replay a deterministic sample of the same functions through the plain
library operations to tie the fast path to the slow one.
"""
from __future__ import annotations

import itertools
import math
import os
import random
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    Additive,
    Explicit01,
    GraphicMatroid,
    Instance,
    MatroidRank,
    PartitionMatroid,
    Table,
    UniformMatroid,
    UnitDemand,
    full_mask,
    random_explicit01,
    validate,
)
from .quantile import (
    count_zero_allocations,
    exact_distribution,
    satisfaction,
)
from .allocate import (
    InfeasibilityCertificate,
    _chunk_masks,
    _iter_partitions,
    exhaustive_fair_allocation,
    maximin_satisfaction_allocation,
    mms_quantile,
    mms_value,
    bernoulli_deviation_check,
    round_robin,
)
from .veto import (
    VetoList,
    check_profile_equivalence,
    equivalence_suite,
    valuation_from_veto,
)
from .extremal import (
    SetFamily,
    binomial_cdf_below,
    binomial_qn,
    emc_bounds,
    emc_extremal_families,
    emc_falsify,
    kruskal_katona_check,
    lemma9_check,
    matching_number,
    matroid_share_bound_interval,
    theorem_chain_check,
)
from .lab import (
    CounterexampleProfile,
    ExhaustionCertificate,
    SearchSpec,
    downward_closed_families,
    equal_size_gap_report,
    export_ip,
    generate_named_instance,
    parse_lp_counts,
    search_counterexample,
)


@dataclass
class ReproResult:
    target: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extras = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"{status} {self.target}" + (f": {extras}" if extras else "")


def _frac(x) -> str:
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}" if f.denominator != 1 else str(f.numerator)


# ---------------------------------------------------------------------------
# shared sweep helpers: all monotone 0/1 valuations at small m
# ---------------------------------------------------------------------------

DEDEKIND = {1: 3, 2: 6, 3: 20, 4: 168, 5: 7581, 6: 7828354}


def monotone_zero_bitmaps(m: int) -> list[int]:
    """All downward-closed families over 2^[m], as subset-indexed bitmaps."""
    bitmaps = sorted(bm for bm, _ in downward_closed_families(m, 2))
    assert len(bitmaps) == DEDEKIND[m]
    return bitmaps


def explicit01_from_zero_bitmap(m: int, bitmap: int) -> Explicit01:
    family = frozenset(s for s in range(1 << m) if bitmap >> s & 1)
    return valuation_from_veto(VetoList(0, 2, m, family))


# ---------------------------------------------------------------------------
# criterion: prop3 critical quantile and the n=2 boundary
# ---------------------------------------------------------------------------

def check_prop3() -> ReproResult:
    """q* = 4/9 on the two-valued-goods instance at n=3, m=6."""
    instance = generate_named_instance("prop3", n=3, m=6)
    _, q_star = maximin_satisfaction_allocation(instance)
    at_boundary = exhaustive_fair_allocation(instance, Fraction(4, 9))
    above = exhaustive_fair_allocation(instance, Fraction(4, 9) + Fraction(1, 729))
    passed = (
        q_star == Fraction(4, 9)
        and isinstance(at_boundary, tuple)
        and isinstance(above, InfeasibilityCertificate)
        and above.covers_all
    )
    return ReproResult("prop3", passed, {"q_star": _frac(q_star)})


def check_corollary1(spot_checks: int = 150, seed: int = 7) -> ReproResult:
    """n=2, m <= 4: every monotone 0/1 pair is 1/2-feasible, and for each m
    some pair fails at 1/2 + 1/2^m.

    The sweep runs on precomputed satisfied-bundle bitmaps (exact integer
    work); a seeded sample of pairs is replayed through the library
    search to anchor the fast path.
    """
    rng = random.Random(seed)
    all_ok = True
    details = {}
    for m in range(1, 5):
        size = 1 << m
        half = 1 << (m - 1)
        bitmaps = monotone_zero_bitmaps(m)
        funcs = []
        for bm in bitmaps:
            ones = ~bm & ((1 << size) - 1)
            zero_count = bm.bit_count()
            rev = 0
            for s in range(size):
                if ones >> (size - 1 ^ s) & 1:
                    rev |= 1 << s
            funcs.append((ones, rev, zero_count))
        every = (1 << size) - 1

        def feasible(i, j, threshold):
            ones_i, _, z_i = funcs[i]
            _, rev_j, z_j = funcs[j]
            a = every if z_i >= threshold else ones_i
            b = every if z_j >= threshold else rev_j
            return a & b != 0

        all_half = all(
            feasible(i, j, half)
            for i in range(len(funcs))
            for j in range(len(funcs))
        )
        some_infeasible = any(
            not feasible(i, j, half + 1)
            for i in range(len(funcs))
            for j in range(len(funcs))
        )
        valuations = [explicit01_from_zero_bitmap(m, bm) for bm in bitmaps]
        agree = True
        for _ in range(spot_checks):
            i, j = rng.randrange(len(funcs)), rng.randrange(len(funcs))
            instance = Instance(2, m, (valuations[i], valuations[j]))
            lib_half = isinstance(
                exhaustive_fair_allocation(instance, Fraction(1, 2)), tuple
            )
            lib_above = isinstance(
                exhaustive_fair_allocation(
                    instance, Fraction(1, 2) + Fraction(1, size)
                ),
                tuple,
            )
            if lib_half != feasible(i, j, half):
                agree = False
            if lib_above != feasible(i, j, half + 1):
                agree = False
        details[f"m={m}"] = (
            f"feasible_at_half={all_half}, breaks_above={some_infeasible}"
        )
        all_ok = all_ok and all_half and some_infeasible and agree
    return ReproResult("corollary1", all_ok, details)


# ---------------------------------------------------------------------------
# criterion: profile search and IP export
# ---------------------------------------------------------------------------

def check_lab_search() -> ReproResult:
    tight = search_counterexample(SearchSpec(3, 4, budget=35))
    loose = search_counterexample(SearchSpec(3, 4, budget=36))
    passed = isinstance(tight, ExhaustionCertificate) and isinstance(
        loose, CounterexampleProfile
    )
    details = {"budget35": type(tight).__name__, "budget36": type(loose).__name__}
    if isinstance(loose, CounterexampleProfile):
        details["witness_zero_counts"] = str(list(loose.zero_counts))
    return ReproResult("lab_search", passed, details)


def check_export_counts() -> ReproResult:
    expected = {
        (3, 6): {"variables": 192, "monotonicity": 576, "threshold": 3,
                 "allocation": 729},
        (2, 1): {"variables": 4, "monotonicity": 2, "threshold": 2,
                 "allocation": 2},
    }
    passed = True
    details = {}
    with tempfile.TemporaryDirectory() as tmp:
        for (n, m), want in expected.items():
            path = os.path.join(tmp, f"model_{n}_{m}.lp")
            export_ip(SearchSpec(n, m), path)
            got = parse_lp_counts(path)
            with open(path, "rb") as fh:
                first = fh.read()
            export_ip(SearchSpec(n, m), path)
            with open(path, "rb") as fh:
                second = fh.read()
            ok = got == want and first == second
            passed = passed and ok
            details[f"n={n},m={m}"] = str(got)
    return ReproResult("export_counts", passed, details)


# ---------------------------------------------------------------------------
# criterion: round-robin guarantees
# ---------------------------------------------------------------------------

def check_round_robin(trials: int = 1000, seed: int = 11) -> ReproResult:
    """Additive round-robin: satisfaction >= 0.14 (1-1/n)^n for everyone,
    and the first picker's value covers her proportional share."""
    rng = random.Random(seed)
    worst_margin = None
    passed = True
    for _ in range(trials):
        n = rng.randint(2, 4)
        m = rng.randint(1, 14)
        valuations = tuple(
            Additive(tuple(Fraction(rng.randint(0, 20)) for _ in range(m)))
            for _ in range(n)
        )
        instance = Instance(n, m, valuations)
        bundles = round_robin(instance)
        guarantee = Fraction(14, 100) * Fraction((n - 1) ** n, n ** n)
        for i, v in enumerate(valuations):
            sat = satisfaction(v, n, bundles[i])
            margin = sat - guarantee
            if worst_margin is None or margin < worst_margin:
                worst_margin = margin
            if sat < guarantee:
                passed = False
        total = sum(valuations[0].weights)
        if valuations[0].value(bundles[0]) < Fraction(total, n):
            passed = False
    return ReproResult(
        "round_robin", passed,
        {"trials": trials, "worst_margin": f"{float(worst_margin):.6f}"},
    )


def check_unit_demand(trials: int = 1000, seed: int = 13) -> ReproResult:
    """Unit-demand round-robin: picker i is (1-1/n)^(i-1)-satisfied."""
    rng = random.Random(seed)
    passed = True
    worst_margin = None
    for _ in range(trials):
        n = rng.randint(2, 5)
        m = rng.randint(1, 14)
        valuations = tuple(
            UnitDemand(tuple(Fraction(rng.randint(0, 20)) for _ in range(m)))
            for _ in range(n)
        )
        instance = Instance(n, m, valuations)
        bundles = round_robin(instance)
        for i, v in enumerate(valuations):
            sat = satisfaction(v, n, bundles[i])
            guarantee = Fraction((n - 1) ** i, n ** i)  # i is 0-based here
            margin = sat - guarantee
            if worst_margin is None or margin < worst_margin:
                worst_margin = margin
            if sat < guarantee:
                passed = False
    return ReproResult(
        "unit_demand", passed,
        {"trials": trials, "worst_margin": f"{float(worst_margin):.6f}"},
    )


# ---------------------------------------------------------------------------
# criterion: matroid maximin machinery
# ---------------------------------------------------------------------------

def _matroid_grid():
    grid = []
    for m in range(1, 11):
        for r in range(1, m + 1):
            grid.append(UniformMatroid(m, r))
    for m in range(2, 6):
        for blocks in _iter_partitions(m, m):
            caps_one = tuple(1 for _ in blocks)
            caps_half = tuple(max(1, b.bit_count() // 2) for b in blocks)
            for caps in {caps_one, caps_half}:
                grid.append(PartitionMatroid(m, tuple(blocks), caps))
    graphs = [
        GraphicMatroid(2, ((0, 1),)),
        GraphicMatroid(4, ((0, 1), (1, 2), (2, 3))),
        GraphicMatroid(3, ((0, 1), (1, 2), (2, 0))),
        GraphicMatroid(5, ((0, 1), (1, 2), (2, 3), (3, 4), (4, 0))),
        GraphicMatroid(4, ((0, 1), (0, 2), (0, 3))),
        GraphicMatroid(4, tuple(itertools.combinations(range(4), 2))),
        GraphicMatroid(5, tuple(itertools.combinations(range(5), 2))),
        GraphicMatroid(3, ((0, 1), (0, 1), (1, 2))),  # parallel edges
        GraphicMatroid(5, ((0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2))),
    ]
    grid.extend(graphs)
    return grid


def check_matroid_mms() -> ReproResult:
    """Intersection-based MMS equals brute force; its quantile clears the
    1/e - 1/(2 sqrt(n(n-1))) floor; the uniform family is exactly tight."""
    passed = True
    compared = 0
    details = {}
    tolerance = Fraction(1, 10 ** 12)
    for matroid in _matroid_grid():
        valuation = MatroidRank(matroid)
        for n in (2, 3):
            fast = mms_value(valuation, n)
            brute = mms_value(valuation, n, method="brute")
            compared += 1
            if fast.value != brute.value:
                passed = False
                details.setdefault("mismatch", str((matroid, n)))
            quantile = mms_quantile(valuation, n)
            _, hi = matroid_share_bound_interval(n)
            if quantile < hi - tolerance:
                passed = False
                details.setdefault("bound_breach", str((matroid, n)))
    for n, t in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3), (4, 2), (5, 2)]:
        m = t * n - 1
        valuation = MatroidRank(UniformMatroid(m, t))
        result = mms_value(valuation, n)
        quantile = mms_quantile(valuation, n)
        if result.value != t - 1 or quantile != binomial_cdf_below(t, n):
            passed = False
            details.setdefault("tight_family_breach", f"n={n},t={t}")
    details["pairs_compared"] = compared
    return ReproResult("matroid_mms", passed, details)


# ---------------------------------------------------------------------------
# criterion: Bernoulli deviation bound
# ---------------------------------------------------------------------------

def check_lemma4(vectors: int = 10000, seed: int = 17) -> ReproResult:
    rng = random.Random(seed)
    ps = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4), Fraction(1, 5)]
    passed = True
    worst = None
    for _ in range(vectors):
        m = rng.randint(1, 20)
        weights = [Fraction(rng.randint(0, 30)) for _ in range(m)]
        for p in ps:
            result = bernoulli_deviation_check(weights, p)
            margin = result.probability - result.bound
            if worst is None or margin < worst:
                worst = margin
            if not result.ok:
                passed = False
    return ReproResult(
        "lemma4", passed,
        {"vectors": vectors, "worst_margin": f"{float(worst):.6f}"},
    )


# ---------------------------------------------------------------------------
# criterion: veto equivalence
# ---------------------------------------------------------------------------

def check_veto_equivalence() -> ReproResult:
    passed = True
    details = {}
    pairs_checked = 0
    for m in range(1, 5):
        bitmaps = monotone_zero_bitmaps(m)
        valuations = [explicit01_from_zero_bitmap(m, bm) for bm in bitmaps]
        failures = 0
        for u in valuations:
            for w in valuations:
                result = check_profile_equivalence(Instance(2, m, (u, w)))
                pairs_checked += 1
                if not result.ok:
                    failures += 1
                    passed = False
        details[f"n=2,m={m}"] = f"pairs={len(valuations) ** 2}, failures={failures}"
    random_total = 0
    for m, trials, seed in [(4, 350, 23), (5, 350, 29), (6, 300, 31)]:
        report = equivalence_suite(3, m, trials, seed)
        random_total += trials
        if not report.ok:
            passed = False
            details[f"n=3,m={m}"] = report.failures[:3]
    details["exhaustive_pairs"] = pairs_checked
    details["random_profiles"] = random_total
    return ReproResult("veto_equivalence", passed, details)


# ---------------------------------------------------------------------------
# criterion: maximin-share quantile link for identical profiles
# ---------------------------------------------------------------------------

def _identical_link_ok(valuation, n) -> bool:
    _, q_star = maximin_satisfaction_allocation(Instance(n, valuation.m,
                                                         (valuation,) * n))
    return mms_quantile(valuation, n) == q_star


def _zero_weights(m: int, n: int) -> np.ndarray:
    return np.array(
        [(n - 1) ** (m - s.bit_count()) for s in range(1 << m)], dtype=np.int64
    )


def _partition_index_matrix(m: int, n: int) -> np.ndarray:
    rows = []
    for blocks in _iter_partitions(m, n):
        rows.append(tuple(blocks) + (0,) * (n - len(blocks)))
    return np.array(rows, dtype=np.int64)


def _sweep_identical_01(m: int, n: int, tables: np.ndarray) -> np.ndarray:
    """Dual-route check over a batch of 0/1 value tables (B, 2^m).

    Route A scans all n^m allocations for one satisfying everybody;
    route B searches set partitions into at most n blocks.  Returns the
    boolean agreement vector; the caller asserts it is all-True.
    """
    total = n ** m
    alloc = _chunk_masks(n, m, 0, total)  # (total, n) bundle masks
    feas_a = tables[:, alloc].all(axis=2).any(axis=1)
    parts = _partition_index_matrix(m, n)
    feas_b = tables[:, parts].all(axis=2).any(axis=1)
    return feas_a == feas_b


def check_mms_quantile_link(seed: int = 37) -> ReproResult:
    """Identical profiles: the largest feasible q equals the MMS quantile.

    Exhaustive over all monotone 0/1 valuations for m <= 4 through the
    library operations; exhaustive at m = 5, 6 through the vectorized
    dual route with library replay on a seeded sample; random monotone
    rational tables up to m = 8.
    """
    rng = random.Random(seed)
    passed = True
    details = {}
    for m in range(1, 5):
        for n in (2, 3):
            for bm in monotone_zero_bitmaps(m):
                if not _identical_link_ok(explicit01_from_zero_bitmap(m, bm), n):
                    passed = False
                    details.setdefault("exhaustive_breach", f"m={m},n={n},bm={bm}")
    details["exhaustive_m4"] = sum(DEDEKIND[m] for m in range(1, 5)) * 2

    # m = 5: all 7581 monotone functions, vectorized + sampled replay
    bitmaps5 = monotone_zero_bitmaps(5)
    z5 = np.array(bitmaps5, dtype=np.uint64)
    shifts = np.arange(32, dtype=np.uint64)
    tables5 = (1 - ((z5[:, None] >> shifts[None, :]) & np.uint64(1))).astype(np.uint8)
    for n in (2, 3):
        agree = _sweep_identical_01(5, n, tables5)
        if not agree.all():
            passed = False
            details.setdefault("sweep5_breach", f"n={n}")
    for _ in range(120):
        idx = rng.randrange(len(bitmaps5))
        val = explicit01_from_zero_bitmap(5, bitmaps5[idx])
        for n in (2, 3):
            if not _identical_link_ok(val, n):
                passed = False
                details.setdefault("replay5_breach", f"idx={idx},n={n}")
    details["exhaustive_m5"] = len(bitmaps5) * 2

    # m = 6: monotone functions as compatible pairs (g, h) of m=5 functions
    # (zero(h) must sit inside zero(g)); tables are the two halves
    swept6 = 0
    replay_pool: list[tuple[int, int]] = []
    for n in (2, 3):
        batch_g: list[int] = []
        batch_h: list[np.ndarray] = []
        count = 0
        for gi, g in enumerate(bitmaps5):
            compatible = np.nonzero((z5 & np.uint64(g)) == z5)[0]
            batch_g.extend([gi] * len(compatible))
            batch_h.append(compatible)
            count += len(compatible)
            if count >= 8192 or gi == len(bitmaps5) - 1:
                g_idx = np.array(batch_g, dtype=np.int64)
                h_idx = np.concatenate(batch_h)
                tables6 = np.concatenate(
                    [tables5[g_idx], tables5[h_idx]], axis=1
                )
                agree = _sweep_identical_01(6, n, tables6)
                if not agree.all():
                    passed = False
                    details.setdefault("sweep6_breach", f"n={n}")
                if n == 2:
                    swept6 += len(g_idx)
                    for row in range(0, len(g_idx), 1009):
                        replay_pool.append(
                            (bitmaps5[int(g_idx[row])], bitmaps5[int(h_idx[row])])
                        )
                batch_g, batch_h, count = [], [], 0
    if swept6 != DEDEKIND[6]:
        passed = False
    details["exhaustive_m6"] = swept6
    rng.shuffle(replay_pool)
    for g, h in replay_pool[:60]:
        bitmap6 = g | (h << 32)
        val = explicit01_from_zero_bitmap(6, bitmap6)
        for n in (2, 3):
            if not _identical_link_ok(val, n):
                passed = False
                details.setdefault("replay6_breach", f"g={g},h={h},n={n}")

    # random rational tables up to m = 8
    tables_checked = 0
    for _ in range(250):
        n = rng.randint(2, 3)
        m = rng.randint(1, 8)
        values = [Fraction(0)] * (1 << m)
        for s in range(1, 1 << m):
            floor = max(values[s ^ (s & -s)], values[s & (s - 1)] if s & (s - 1) else Fraction(0))
            best = Fraction(0)
            mask = s
            while mask:
                low = mask & -mask
                best = max(best, values[s ^ low])
                mask ^= low
            values[s] = best + Fraction(rng.randint(0, 3))
        val = Table(m, tuple(values))
        if not _identical_link_ok(val, n):
            passed = False
            details.setdefault("table_breach", f"m={m},n={n}")
        tables_checked += 1
    details["random_tables"] = tables_checked
    return ReproResult("mms_quantile_link", passed, details)


# ---------------------------------------------------------------------------
# criterion: the zero-fraction maximin gap instance
# ---------------------------------------------------------------------------

def check_mms_gap() -> ReproResult:
    instance = generate_named_instance("mms_gap")
    results = [mms_value(v, 2) for v in instance.valuations]
    mms_ok = all(r.value == 1 for r in results)
    witness_ok = all(
        min(v.value(b) for b in r.witness) == 1
        for v, r in zip(instance.valuations, results)
    )
    someone_zero = True
    for index in range(2 ** 4):
        b0 = index
        b1 = full_mask(4) ^ index
        if (
            instance.valuations[0].value(b0) > 0
            and instance.valuations[1].value(b1) > 0
        ):
            someone_zero = False
    passed = mms_ok and witness_ok and someone_zero
    return ReproResult(
        "mms_gap", passed,
        {"mms_values": str([str(r.value) for r in results]),
         "every_allocation_zeroes_someone": someone_zero},
    )


# ---------------------------------------------------------------------------
# criterion: the binomial-dominance inequality behind the search budget
# ---------------------------------------------------------------------------

def check_lemma9() -> ReproResult:
    failures = []
    for n in range(2, 21):
        for k in range(1, 51):
            if not __import__("qfair.extremal", fromlist=["lemma9_check"]).lemma9_check(n, k):
                failures.append((n, k))
    passed = not failures
    return ReproResult(
        "lemma9", passed,
        {"range": "n=2..20, k=1..50", "failures": str(failures[:5])},
    )


# ---------------------------------------------------------------------------
# criterion: section-3 style property suite
# ---------------------------------------------------------------------------

def check_extremal_suite(seed: int = 41) -> ReproResult:
    rng = random.Random(seed)
    passed = True
    details = {}

    kk_trials = 10000
    for _ in range(kk_trials):
        m = rng.randint(4, 12)
        k = rng.randint(2, min(4, m - 1))
        population = list(itertools.combinations(range(m), k))
        size = rng.randint(1, min(len(population), 40))
        sets = tuple(
            sum(1 << g for g in combo) for combo in rng.sample(population, size)
        )
        family = SetFamily(m, k, sets)
        m_prime = rng.randint(k, m)
        k_prime = rng.randint(1, k)
        if not kruskal_katona_check(family, m_prime, k_prime):
            passed = False
            details.setdefault("kk_breach", f"m={m},k={k}")
    details["kk_trials"] = kk_trials

    for (m, k, n) in [(4, 1, 2), (6, 1, 3), (8, 2, 2), (9, 2, 3),
                      (10, 2, 3), (6, 2, 3), (9, 3, 3), (12, 3, 3)]:
        cover, clique = emc_extremal_families(m, k, n)
        bounds = emc_bounds(m, k, n)
        if len(cover) != bounds[0] or len(clique) != bounds[1]:
            passed = False
            details.setdefault("size_breach", f"({m},{k},{n})")
        if matching_number(cover) != n - 1 or matching_number(clique) != n - 1:
            passed = False
            details.setdefault("nu_breach", f"({m},{k},{n})")

    falsify_trials = 0
    for (m, k, n, trials) in [(6, 1, 2, 1700), (6, 1, 3, 1700), (8, 2, 2, 1700),
                              (9, 2, 3, 1700), (12, 2, 3, 1700), (45, 2, 3, 1700)]:
        hit = emc_falsify(m, k, n, trials, seed=rng.randrange(1 << 30))
        falsify_trials += trials
        if hit is not None:
            passed = False
            details.setdefault("falsified", f"({m},{k},{n}) trial {hit.trial}")
    details["falsify_trials"] = falsify_trials

    chain_checked = 0
    chain_rng = random.Random(seed + 1)
    chain_valuations = [Explicit01(6, (0b000001, 0b000010))]
    chain_valuations += [random_explicit01(6, chain_rng) for _ in range(2000)]
    for val in chain_valuations:
        report = theorem_chain_check(val, 3)
        chain_checked += 1
        if report.conjecture_counterexample:
            passed = False
            details.setdefault("chain_breach", str(val.minimal_ones))
        if report.applicable:
            for level in report.levels:
                if not (level.size_ok and level.shadow_contained and level.ratio_ok):
                    passed = False
                    details.setdefault("chain_level_breach", str(val.minimal_ones))
    details["chain_checked"] = chain_checked
    return ReproResult("extremal_suite", passed, details)


# ---------------------------------------------------------------------------
# criterion: binomial quantile floor across n
# ---------------------------------------------------------------------------

def check_qn_bound() -> ReproResult:
    tolerance = Fraction(1, 10 ** 12)
    passed = True
    worst_gap = None
    argmins = set()
    for n in range(2, 65):
        report = binomial_qn(n, 200)
        argmins.add(report.argmin_t)
        if report.value < report.bound_hi - tolerance:
            passed = False
        gap = report.conjecture_gap
        if worst_gap is None or gap < worst_gap:
            worst_gap = gap
    return ReproResult(
        "qn_bound", passed,
        {
            "n_range": "2..64",
            "t_max": 200,
            "argmin_t_values": str(sorted(argmins)),
            "min_conjecture_gap": f"{float(worst_gap):.3e}",
        },
    )


# ---------------------------------------------------------------------------
# criterion: chores flip the constant-threshold story
# ---------------------------------------------------------------------------

def check_chores() -> ReproResult:
    passed = True
    details = {}
    for n in range(2, 7):
        instance = generate_named_instance("single_chore", n=n)
        _, q_star = maximin_satisfaction_allocation(instance)
        feasible_at = exhaustive_fair_allocation(instance, Fraction(1, n))
        above = Fraction(1, n) + Fraction(1, n)
        infeasible_above = (
            above > 1
            or isinstance(
                exhaustive_fair_allocation(instance, above), InfeasibilityCertificate
            )
        )
        ok = q_star == Fraction(1, n) and isinstance(feasible_at, tuple) and infeasible_above
        details[f"n={n}"] = _frac(q_star)
        passed = passed and ok
    return ReproResult("chores", passed, details)


# ---------------------------------------------------------------------------
# criterion: unequal bundle sizes are necessary
# ---------------------------------------------------------------------------

def check_unequal_gap() -> ReproResult:
    report = equal_size_gap_report(3, 6, Fraction(1, 100), 0)
    passed = (
        report.strict_gap
        and report.equal_size_q == Fraction(32, 81)
        and report.unconstrained_q == Fraction(4, 9)
    )
    return ReproResult(
        "unequal_gap", passed,
        {
            "equal_size_q": _frac(report.equal_size_q),
            "unconstrained_q": _frac(report.unconstrained_q),
        },
    )


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

TARGETS = {
    "prop3": check_prop3,
    "corollary1": check_corollary1,
    "lab_search": check_lab_search,
    "export_counts": check_export_counts,
    "round_robin": check_round_robin,
    "unit_demand": check_unit_demand,
    "matroid_mms": check_matroid_mms,
    "lemma4": check_lemma4,
    "veto_equivalence": check_veto_equivalence,
    "mms_quantile_link": check_mms_quantile_link,
    "mms_gap": check_mms_gap,
    "lemma9": check_lemma9,
    "extremal_suite": check_extremal_suite,
    "qn_bound": check_qn_bound,
    "chores": check_chores,
    "unequal_gap": check_unequal_gap,
}


def run_target(target: str) -> ReproResult:
    if target not in TARGETS:
        raise ValueError(
            f"unknown repro target {target!r}; known: {', '.join(sorted(TARGETS))}"
        )
    return TARGETS[target]()


def run_all() -> list[ReproResult]:
    return [TARGETS[name]() for name in TARGETS]
