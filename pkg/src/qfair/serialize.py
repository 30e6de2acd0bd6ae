"""JSON (de)serialization for instances, matroids, families and lists.

All on-disk formats use 1-indexed good labels to match the usual [m]
notation; the shift to the internal 0-indexed bitmasks happens here and
only here.  Rationals serialize as plain integers when integral and as
"p/q" strings otherwise.
"""
from __future__ import annotations

import json
from fractions import Fraction

from .core import (
    Additive,
    DirectSumMatroid,
    Explicit01,
    ExplicitBasesMatroid,
    GraphicMatroid,
    Instance,
    Matroid,
    MatroidRank,
    PartitionMatroid,
    RelabelMatroid,
    Table,
    TruncationMatroid,
    UniformMatroid,
    UnitDemand,
    Valuation,
    as_rational,
    goods_in,
    mask_of,
)
from .veto import VetoList
from .extremal import SetFamily


def rational_to_json(x):
    f = Fraction(x)
    if f.denominator == 1:
        return f.numerator
    return f"{f.numerator}/{f.denominator}"


def rational_from_json(x) -> Fraction:
    return as_rational(x)


def goods_to_json(mask: int) -> list[int]:
    return [g + 1 for g in goods_in(mask)]


def goods_from_json(goods) -> int:
    return mask_of(g - 1 for g in goods)


# ---------------------------------------------------------------------------
# matroids
# ---------------------------------------------------------------------------

def matroid_to_json(matroid: Matroid) -> dict:
    if isinstance(matroid, UniformMatroid):
        return {
            "kind": "uniform",
            "ground_size": matroid.ground_size,
            "rank": matroid.rank_cap,
        }
    if isinstance(matroid, PartitionMatroid):
        return {
            "kind": "partition",
            "ground_size": matroid.ground_size,
            "blocks": [goods_to_json(b) for b in matroid.blocks],
            "capacities": list(matroid.capacities),
        }
    if isinstance(matroid, GraphicMatroid):
        return {
            "kind": "graphic",
            "vertices": matroid.num_vertices,
            "edges": [[u + 1, v + 1] for u, v in matroid.edges],
        }
    if isinstance(matroid, ExplicitBasesMatroid):
        return {
            "kind": "explicit_bases",
            "ground_size": matroid.ground_size,
            "bases": [goods_to_json(b) for b in matroid.bases],
        }
    if isinstance(matroid, TruncationMatroid):
        return {
            "kind": "truncation",
            "cap": matroid.cap,
            "inner": matroid_to_json(matroid.inner),
        }
    if isinstance(matroid, DirectSumMatroid):
        return {
            "kind": "direct_sum",
            "parts": [matroid_to_json(p) for p in matroid.parts],
        }
    if isinstance(matroid, RelabelMatroid):
        return {
            "kind": "relabel",
            "permutation": [p + 1 for p in matroid.permutation],
            "inner": matroid_to_json(matroid.inner),
        }
    raise TypeError(f"cannot serialize matroid {type(matroid).__name__}")


def matroid_from_json(data: dict) -> Matroid:
    kind = data["kind"]
    if kind == "uniform":
        return UniformMatroid(data["ground_size"], data["rank"])
    if kind == "partition":
        return PartitionMatroid(
            data["ground_size"],
            tuple(goods_from_json(b) for b in data["blocks"]),
            tuple(data["capacities"]),
        )
    if kind == "graphic":
        return GraphicMatroid(
            data["vertices"],
            tuple((u - 1, v - 1) for u, v in data["edges"]),
        )
    if kind == "explicit_bases":
        return ExplicitBasesMatroid(
            data["ground_size"],
            tuple(goods_from_json(b) for b in data["bases"]),
        )
    if kind == "truncation":
        return TruncationMatroid(matroid_from_json(data["inner"]), data["cap"])
    if kind == "direct_sum":
        return DirectSumMatroid(tuple(matroid_from_json(p) for p in data["parts"]))
    if kind == "relabel":
        return RelabelMatroid(
            matroid_from_json(data["inner"]),
            tuple(p - 1 for p in data["permutation"]),
        )
    raise ValueError(f"unknown matroid kind {kind!r}")


# ---------------------------------------------------------------------------
# valuations and instances
# ---------------------------------------------------------------------------

def _table_key(mask: int) -> str:
    return ",".join(str(g + 1) for g in goods_in(mask))


def _table_key_to_mask(key: str) -> int:
    if not key:
        return 0
    return mask_of(int(part) - 1 for part in key.split(","))


def valuation_to_json(valuation: Valuation) -> dict:
    if isinstance(valuation, Additive):
        return {"type": "additive",
                "weights": [rational_to_json(w) for w in valuation.weights]}
    if isinstance(valuation, UnitDemand):
        return {"type": "unit_demand",
                "weights": [rational_to_json(w) for w in valuation.weights]}
    if isinstance(valuation, MatroidRank):
        return {"type": "matroid_rank", "matroid": matroid_to_json(valuation.matroid)}
    if isinstance(valuation, Explicit01):
        return {
            "type": "explicit01",
            "m": valuation.m,
            "minimal_ones": [goods_to_json(s) for s in valuation.minimal_ones],
        }
    if isinstance(valuation, Table):
        return {
            "type": "table",
            "m": valuation.m,
            "values": {
                _table_key(s): rational_to_json(valuation.values[s])
                for s in range(1 << valuation.m)
            },
        }
    raise TypeError(f"cannot serialize valuation {type(valuation).__name__}")


def valuation_from_json(data: dict, m: int) -> Valuation:
    kind = data["type"]
    if kind == "additive":
        return Additive(tuple(rational_from_json(w) for w in data["weights"]))
    if kind == "unit_demand":
        return UnitDemand(tuple(rational_from_json(w) for w in data["weights"]))
    if kind == "matroid_rank":
        return MatroidRank(matroid_from_json(data["matroid"]))
    if kind == "explicit01":
        return Explicit01(
            data.get("m", m),
            tuple(goods_from_json(s) for s in data["minimal_ones"]),
        )
    if kind == "table":
        mm = data.get("m", m)
        values = [Fraction(0)] * (1 << mm)
        seen = set()
        for key, raw in data["values"].items():
            mask = _table_key_to_mask(key)
            values[mask] = rational_from_json(raw)
            seen.add(mask)
        if len(seen) != 1 << mm:
            raise ValueError(
                f"table lists {len(seen)} of {1 << mm} bundle values"
            )
        return Table(mm, tuple(values))
    raise ValueError(f"unknown valuation type {kind!r}")


def instance_to_json(instance: Instance) -> dict:
    return {
        "n": instance.n,
        "m": instance.m,
        "valuations": [valuation_to_json(v) for v in instance.valuations],
    }


def instance_from_json(data: dict) -> Instance:
    n, m = data["n"], data["m"]
    return Instance(
        n, m, tuple(valuation_from_json(v, m) for v in data["valuations"])
    )


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_json(json.load(fh))


def dump_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_json(instance), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# allocations, families, veto lists
# ---------------------------------------------------------------------------

def allocation_to_json(bundles) -> list[list[int]]:
    return [goods_to_json(b) for b in bundles]


def allocation_from_json(data) -> tuple[int, ...]:
    return tuple(goods_from_json(b) for b in data)


def family_to_json(family: SetFamily) -> dict:
    return {
        "m": family.m,
        "k": family.k,
        "sets": [goods_to_json(s) for s in family.sets],
    }


def family_from_json(data: dict) -> SetFamily:
    return SetFamily(
        data["m"], data["k"], tuple(goods_from_json(s) for s in data["sets"])
    )


def veto_lists_to_json(lists) -> dict:
    if not lists:
        raise ValueError("no veto lists to serialize")
    return {
        "n": lists[0].n,
        "m": lists[0].m,
        "families": [
            [goods_to_json(s) for s in sorted(vl.zero_bundles)] for vl in lists
        ],
    }


def veto_lists_from_json(data: dict) -> list[VetoList]:
    n, m = data["n"], data["m"]
    return [
        VetoList(i, n, m, frozenset(goods_from_json(s) for s in fam))
        for i, fam in enumerate(data["families"])
    ]
