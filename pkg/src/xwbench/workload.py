"""Benchmark queries and the streaming group-by cube computation.

The workload is eight group-by queries: Q21 groups every dimension at
instance granularity with SUM over both measures; Q22/Q23/Q24 exercise
MIN/MAX/AVG at mixed levels; D1..D4 are the 1-to-4-dimension SUM cubes over
the finest levels (day, type3, customer nation, supplier nation), the
grouping ladder whose matching cost grows with dimension count.

run_query streams the facts document once.  Each fact resolves to exactly
one group key (via the query-time engine, or by plain cell reads over
pretransformed data), is matched against the cube under the chosen
strategy (a faithful sequential scan comparing keys entry by entry, or a
hash lookup), and contributes its measures exactly once.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import engine_pedersen, engine_qbs, xmlio
from .errors import ConfigurationError, QueryError, ReferentialError
from .model import DwModel, F_QUANTITY, F_TOTALAMOUNT

AGGREGATES = ("SUM", "MIN", "MAX", "AVG")

ENGINE_QBS = "qbs"
ENGINE_PEDERSEN = "pedersen"

MATCH_SCAN = "scan"
MATCH_HASH = "hash"

# Grouping level entry meaning "the dimension instance itself".
INSTANCE = None


@dataclass(frozen=True)
class Query:
    """A group-by query descriptor: aggregate, measures, grouping levels."""

    id: str
    aggregate: str
    measures: tuple[str, ...]
    grouping: tuple[tuple[str, str | None], ...]


def validate_query(query: Query, model: DwModel) -> None:
    if query.aggregate not in AGGREGATES:
        raise QueryError(f"unknown aggregate {query.aggregate!r}")
    if not query.measures:
        raise QueryError(f"query {query.id!r} selects no measures")
    for measure in query.measures:
        if measure not in model.measures:
            raise QueryError(f"unknown measure {measure!r}")
    seen = set()
    for dim_id, level in query.grouping:
        if dim_id in seen:
            raise QueryError(f"query {query.id!r} groups dimension {dim_id!r} twice")
        seen.add(dim_id)
        try:
            schema = model.dimension(dim_id)
        except KeyError:
            raise QueryError(f"unknown dimension {dim_id!r}")
        if level is not None and level not in schema.levels:
            raise QueryError(f"dimension {dim_id!r} has no level {level!r}")


def standard_workload() -> list[Query]:
    both = (F_QUANTITY, F_TOTALAMOUNT)
    return [
        Query("Q21", "SUM", both,
              (("part", INSTANCE), ("customer", INSTANCE),
               ("supplier", INSTANCE), ("date", INSTANCE))),
        Query("Q22", "MIN", (F_QUANTITY,),
              (("customer", "nation"), ("part", "type3"),
               ("supplier", "nation"), ("date", "day"))),
        Query("Q23", "MAX", (F_TOTALAMOUNT,),
              (("date", "month"), ("part", "type2"),
               ("supplier", "nation"), ("customer", "region"))),
        Query("Q24", "AVG", (F_TOTALAMOUNT,),
              (("supplier", "region"), ("part", "type1"),
               ("customer", "region"), ("date", "year"))),
        Query("D1", "SUM", both, (("date", "day"),)),
        Query("D2", "SUM", both, (("part", "type3"), ("date", "day"))),
        Query("D3", "SUM", both,
              (("part", "type3"), ("customer", "nation"), ("date", "day"))),
        Query("D4", "SUM", both,
              (("part", "type3"), ("customer", "nation"),
               ("supplier", "nation"), ("date", "day"))),
    ]


def get_query(query_id: str, queries: Iterable[Query] | None = None) -> Query:
    for query in queries if queries is not None else standard_workload():
        if query.id == query_id:
            return query
    raise QueryError(f"unknown query {query_id!r}")


def parse_query_line(line: str) -> Query:
    """One query per line: `id aggregate measure[,measure] dim.level[,...]`.

    A bare dimension name (or `dim.instance`) groups at instance
    granularity; `-` as the grouping field means no grouping (grand total).
    """
    fields = line.split()
    if len(fields) != 4:
        raise QueryError(f"workload line needs 4 fields, got {len(fields)}: {line!r}")
    qid, aggregate, measure_field, grouping_field = fields
    measures = tuple(measure_field.split(","))
    grouping: list[tuple[str, str | None]] = []
    if grouping_field != "-":
        for token in grouping_field.split(","):
            dim, sep, level = token.partition(".")
            if not dim:
                raise QueryError(f"bad grouping token {token!r} in line {line!r}")
            grouping.append((dim, None if not sep or level == "instance" else level))
    return Query(qid, aggregate.upper(), measures, tuple(grouping))


def load_workload(path: str) -> list[Query]:
    queries = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line and not line.startswith("#"):
                queries.append(parse_query_line(line))
    return queries


# --- cubes -------------------------------------------------------------------


class AvgState:
    """Compensated running sum plus count; finalized to sum/count at close."""

    __slots__ = ("total", "_c", "count")

    def __init__(self):
        self.total = 0.0
        self._c = 0.0
        self.count = 0

    def add(self, value: float) -> None:
        y = value - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t
        self.count += 1

    @property
    def value(self) -> float:
        return self.total / self.count


class Entry:
    """One cube entry: per-measure aggregate state plus support count."""

    __slots__ = ("support", "states")

    def __init__(self, aggregate: str, width: int):
        self.support = 0
        if aggregate == "SUM":
            self.states = [0.0] * width
        elif aggregate == "AVG":
            self.states = [AvgState() for _ in range(width)]
        else:
            self.states = [None] * width

    def values(self, aggregate: str) -> tuple[float, ...]:
        if aggregate == "AVG":
            return tuple(state.value for state in self.states)
        return tuple(self.states)


def aggregate_step(entry: Entry, values: Sequence[float], aggregate: str) -> Entry:
    """Fold one fact's measure values into the entry."""
    states = entry.states
    if aggregate == "SUM":
        for i, v in enumerate(values):
            states[i] += v
    elif aggregate == "MIN":
        for i, v in enumerate(values):
            if states[i] is None or v < states[i]:
                states[i] = v
    elif aggregate == "MAX":
        for i, v in enumerate(values):
            if states[i] is None or v > states[i]:
                states[i] = v
    elif aggregate == "AVG":
        for i, v in enumerate(values):
            states[i].add(v)
    else:
        raise QueryError(f"unknown aggregate {aggregate!r}")
    return entry


class ResultCube:
    """Group keys mapped to aggregates, built under a matching strategy.

    The hash strategy locates entries by key digest; the scan strategy keeps
    insertion-ordered keys and compares each candidate key whole against the
    probe (the expensive matching the benchmark is designed to expose).
    """

    def __init__(self, query: Query, matching: str = MATCH_HASH):
        if matching not in (MATCH_SCAN, MATCH_HASH):
            raise QueryError(f"unknown matching strategy {matching!r}")
        self.query = query
        self.matching = matching
        self.fact_count = 0
        self.grand_totals = [0.0] * len(query.measures)
        self._entries: dict[tuple, Entry] = {}
        self._scan_keys: list[tuple] = []
        self._scan_entries: list[Entry] = []
        self._closed = False

    def observe_fact(self, values: Sequence[float]) -> None:
        self.fact_count += 1
        for i, v in enumerate(values):
            self.grand_totals[i] += v

    def entry_for(self, key: tuple) -> Entry:
        if self.matching == MATCH_HASH:
            entry = self._entries.get(key)
            if entry is None:
                entry = Entry(self.query.aggregate, len(self.query.measures))
                self._entries[key] = entry
            return entry
        try:
            return self._scan_entries[self._scan_keys.index(key)]
        except ValueError:
            entry = Entry(self.query.aggregate, len(self.query.measures))
            self._scan_keys.append(key)
            self._scan_entries.append(entry)
            return entry

    def contribute(self, key: tuple, values: Sequence[float]) -> Entry:
        entry = self.entry_for(key)
        entry.support += 1
        return aggregate_step(entry, values, self.query.aggregate)

    def close(self) -> "ResultCube":
        if not self._closed and self.matching == MATCH_SCAN:
            for key, entry in zip(self._scan_keys, self._scan_entries):
                if key in self._entries:
                    raise QueryError(f"duplicate group key {key!r}")
                self._entries[key] = entry
        self._closed = True
        return self

    @property
    def entries(self) -> dict[tuple, Entry]:
        if not self._closed:
            self.close()
        return self._entries

    def normalize(self) -> dict:
        """Comparison form shared with the independent oracle."""
        entries = {}
        for key, entry in self.entries.items():
            record = {
                "support": entry.support,
                "values": dict(zip(self.query.measures, entry.values(self.query.aggregate))),
            }
            if self.query.aggregate == "AVG":
                record["sums"] = dict(zip(self.query.measures,
                                          (s.total for s in entry.states)))
            entries[key] = record
        return {
            "query": self.query.id,
            "aggregate": self.query.aggregate,
            "measures": list(self.query.measures),
            "fact_count": self.fact_count,
            "grand_totals": dict(zip(self.query.measures, self.grand_totals)),
            "entries": entries,
        }


def match_group(key: tuple, cube: ResultCube, strategy: str | None = None) -> Entry:
    """Locate (or create) the entry whose key equals `key` under the cube's
    strategy; equal keys always land on the same entry."""
    if strategy is not None and strategy != cube.matching:
        raise QueryError(
            f"cube was built for {cube.matching!r} matching, not {strategy!r}")
    return cube.entry_for(key)


# --- query execution ---------------------------------------------------------


@dataclass(frozen=True)
class QueryTiming:
    """Wall-clock run breakdown in milliseconds.

    Phase fields are None unless the run was instrumented: the query-time
    engine embeds summarizability work inside execution, so by default only
    totals are reported.
    """

    load_ms: float
    query_ms: float
    read_ms: float | None = None
    resolve_ms: float | None = None
    match_ms: float | None = None
    agg_ms: float | None = None


def _values_getter(measures: tuple[str, ...]):
    if measures == (F_QUANTITY, F_TOTALAMOUNT):
        return lambda fact: (fact.f_quantity, fact.f_totalamount)
    if measures == (F_QUANTITY,):
        return lambda fact: (fact.f_quantity,)
    if measures == (F_TOTALAMOUNT,):
        return lambda fact: (fact.f_totalamount,)
    raise QueryError(f"unknown measures {measures!r}")


def run_query(query: Query, in_dir: str, engine: str = ENGINE_QBS,
              matching: str = MATCH_HASH, instrument: bool = False,
              ) -> tuple[ResultCube, QueryTiming]:
    """Stream the warehouse once and build the query's result cube.

    `engine` picks how group membership is resolved: "qbs" resolves complex
    hierarchies on the fly; "pedersen" expects transform_warehouse output and
    reads plain cells.  `matching` picks the group-matching strategy.
    """
    if engine == ENGINE_QBS:
        resolve = engine_qbs.resolve_component
    elif engine == ENGINE_PEDERSEN:
        resolve = engine_pedersen.resolve_component_pretransformed
    else:
        raise ConfigurationError(f"unknown engine {engine!r}")

    model = xmlio.read_metadata(in_dir)
    validate_query(query, model)
    values_of = _values_getter(query.measures)

    t0 = time.perf_counter()
    indexes = xmlio.load_dimensions(in_dir, model)
    load_ms = (time.perf_counter() - t0) * 1000.0

    plan = [(dim_id, level, model.dimension(dim_id), indexes[dim_id])
            for dim_id, level in query.grouping]
    cube = ResultCube(query, matching)
    facts = xmlio.iter_facts(in_dir, model)

    if not instrument:
        t0 = time.perf_counter()
        for fact in facts:
            components = []
            for dim_id, level, schema, index in plan:
                ref = fact.dim_refs[dim_id]
                inst = index.get(ref)
                if inst is None:
                    raise ReferentialError(
                        f"fact {fact.fact_id!r} references missing instance {ref!r}")
                components.append(resolve(inst, level, schema))
            values = values_of(fact)
            cube.observe_fact(values)
            cube.contribute(tuple(components), values)
        query_ms = (time.perf_counter() - t0) * 1000.0
        cube.close()
        return cube, QueryTiming(load_ms, query_ms)

    read_s = resolve_s = match_s = agg_s = 0.0
    pc = time.perf_counter
    start = pc()
    while True:
        t0 = pc()
        fact = next(facts, None)
        t1 = pc()
        read_s += t1 - t0
        if fact is None:
            break
        components = []
        for dim_id, level, schema, index in plan:
            ref = fact.dim_refs[dim_id]
            inst = index.get(ref)
            if inst is None:
                raise ReferentialError(
                    f"fact {fact.fact_id!r} references missing instance {ref!r}")
            components.append(resolve(inst, level, schema))
        key = tuple(components)
        t2 = pc()
        resolve_s += t2 - t1
        entry = cube.entry_for(key)
        t3 = pc()
        match_s += t3 - t2
        values = values_of(fact)
        cube.observe_fact(values)
        entry.support += 1
        aggregate_step(entry, values, query.aggregate)
        agg_s += pc() - t3
    query_ms = (pc() - start) * 1000.0
    cube.close()
    return cube, QueryTiming(load_ms, query_ms, read_s * 1000.0, resolve_s * 1000.0,
                             match_s * 1000.0, agg_s * 1000.0)
