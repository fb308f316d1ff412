"""Campaign orchestration, the two performance metrics, and verification.

The quantitative metric is response time per (dataset, engine, query,
matching) cell, split into load, preprocessing overhead (static engine
only) and query time with an optional phase breakdown.  The qualitative
metric checks each result cube: no duplicated groups, group totals summing
to the grand total, averages equal to total/count, min/max bounded by every
contributing value.

Verification machinery lives here too: a brute-force oracle that
materializes the whole warehouse and regroups it exhaustively (sharing no
code with the streaming query path), a deliberately broken double-counting
engine used as a negative control, and the report CSV emission.
"""

from __future__ import annotations

import csv
import math
import os
import time
import tracemalloc
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Sequence

from . import engine_pedersen, engine_qbs, xmlio
from .engine_qbs import OTHER, OTHER_LABEL, label_component
from .errors import BenchmarkError, DocumentError, OracleScopeError
from .generator import GeneratorConfig, generate_warehouse
from .model import HierarchyKind, classify_instance
from .workload import (
    ENGINE_PEDERSEN,
    ENGINE_QBS,
    MATCH_HASH,
    Query,
    ResultCube,
    get_query,
    run_query,
    standard_workload,
)

ENGINE_NAIVE = "naive"

REL_TOL = 1e-9

REPORT_COLUMNS = [
    "dataset", "regime", "facts", "incomplete_pct", "nonstrict_pct", "nonstrict_num",
    "engine", "matching", "query", "load_ms", "overhead_ms", "query_ms",
    "read_ms", "resolve_ms", "match_ms", "agg_ms", "groups",
    "chk_dup", "chk_grand", "chk_avg", "chk_minmax",
]

ORACLE_FACT_LIMIT = 10_000


def normalize_cube(cube: Any) -> dict:
    return cube if isinstance(cube, dict) else cube.normalize()


def _close(a: float, b: float, rel_tol: float = REL_TOL) -> bool:
    return math.isclose(a, b, rel_tol=rel_tol, abs_tol=1e-12)


# --- qualitative metric ------------------------------------------------------


@dataclass(frozen=True)
class CorrectnessReport:
    dup_ok: bool
    grand_ok: bool
    avg_ok: bool
    minmax_ok: bool
    notes: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.dup_ok and self.grand_ok and self.avg_ok and self.minmax_ok


def check_correctness(cube: Any, in_dir: str, query: Query,
                      engine: str = ENGINE_QBS) -> CorrectnessReport:
    """Evaluate the qualitative metric against an independent recount pass.

    The recount re-streams the warehouse, re-resolves every fact's group and
    rebuilds per-group count/sum/min/max, then checks the cube against them.
    Failures are report content, not exceptions.
    """
    norm = normalize_cube(cube)
    notes: list[str] = []

    resolve = (engine_pedersen.resolve_component_pretransformed
               if engine == ENGINE_PEDERSEN else engine_qbs.resolve_component)
    model = xmlio.read_metadata(in_dir)
    indexes = xmlio.load_dimensions(in_dir, model)
    plan = [(dim_id, level, model.dimension(dim_id), indexes[dim_id])
            for dim_id, level in query.grouping]

    recount: dict[tuple, list] = {}  # key -> [count, sums, mins, maxs]
    width = len(query.measures)
    fact_count = 0
    grand = [0.0] * width
    getter = {"f_quantity": lambda f: f.f_quantity,
              "f_totalamount": lambda f: f.f_totalamount}
    extract = [getter[m] for m in query.measures]
    for fact in xmlio.iter_facts(in_dir, model):
        fact_count += 1
        values = [fn(fact) for fn in extract]
        for i, v in enumerate(values):
            grand[i] += v
        key = tuple(resolve(index[fact.dim_refs[dim_id]], level, schema)
                    for dim_id, level, schema, index in plan)
        slot = recount.get(key)
        if slot is None:
            recount[key] = [1, list(values), list(values), list(values)]
        else:
            slot[0] += 1
            for i, v in enumerate(values):
                slot[1][i] += v
                if v < slot[2][i]:
                    slot[2][i] = v
                if v > slot[3][i]:
                    slot[3][i] = v

    entries = norm["entries"]
    keys = list(entries)
    dup_ok = len(keys) == len(set(keys))

    grand_ok = norm["fact_count"] == fact_count
    if not grand_ok:
        notes.append(f"fact count {norm['fact_count']} != {fact_count}")
    support_total = sum(e["support"] for e in entries.values())
    if support_total != fact_count:
        grand_ok = False
        notes.append(f"support total {support_total} != fact count {fact_count}")
    if set(entries) != set(recount):
        grand_ok = False
        notes.append("group keys differ from recount")
    if norm["aggregate"] in ("SUM", "AVG"):
        source = "values" if norm["aggregate"] == "SUM" else "sums"
        for i, measure in enumerate(query.measures):
            total = sum(e[source][measure] for e in entries.values())
            if not _close(total, grand[i]):
                grand_ok = False
                notes.append(f"{measure}: group total {total} != grand total {grand[i]}")

    avg_ok = True
    if norm["aggregate"] == "AVG":
        for key, entry in entries.items():
            slot = recount.get(key)
            if slot is None:
                avg_ok = False
                continue
            if entry["support"] != slot[0]:
                avg_ok = False
                notes.append(f"{key}: support {entry['support']} != count {slot[0]}")
            for i, measure in enumerate(query.measures):
                if not _close(entry["values"][measure], slot[1][i] / slot[0]):
                    avg_ok = False
                    notes.append(f"{key}/{measure}: average mismatch")

    minmax_ok = True
    if norm["aggregate"] in ("MIN", "MAX"):
        bound = 2 if norm["aggregate"] == "MIN" else 3
        for key, entry in entries.items():
            slot = recount.get(key)
            if slot is None:
                minmax_ok = False
                continue
            for i, measure in enumerate(query.measures):
                if entry["values"][measure] != slot[bound][i]:
                    minmax_ok = False
                    notes.append(f"{key}/{measure}: not the {norm['aggregate']} value")

    return CorrectnessReport(dup_ok, grand_ok, avg_ok, minmax_ok, tuple(notes))


# --- brute-force oracle ------------------------------------------------------


def _dom_rows(path: str, dim_id: str) -> list[list[dict[str, str]]]:
    root = ET.parse(path).getroot()
    instances = []
    for inst in root.findall("instance"):
        instances.append([{cell.tag: cell.text or "" for cell in row}
                          for row in inst.findall("row")])
    return instances


def oracle_cube(in_dir: str, query: Query, fact_limit: int = ORACLE_FACT_LIMIT) -> dict:
    """Reference cube by full materialization and exhaustive regrouping.

    DOM-parses every document, recomputes each fact's fused/OTHER component
    from raw rows, groups into plain dicts and aggregates with independent
    arithmetic (fsum for averages).  Returns the normalized comparison form.
    Refuses warehouses beyond fact_limit facts.
    """
    meta = ET.parse(os.path.join(in_dir, xmlio.METADATA_FILE)).getroot().find("fact")
    if meta is None:
        raise DocumentError(f"{in_dir}: metadata lacks a fact element")
    dim_paths = {d.get("idref"): d.get("path") for d in meta.findall("dimension")}

    sales_root = ET.parse(os.path.join(in_dir, meta.get("path", "f_sale.xml"))).getroot()
    sales = sales_root.findall("sale")
    if len(sales) > fact_limit:
        raise OracleScopeError(
            f"{len(sales)} facts exceed the oracle's {fact_limit}-fact capacity")

    rows_by_dim = {dim_id: _dom_rows(os.path.join(in_dir, path), dim_id)
                   for dim_id, path in dim_paths.items()}

    def component(dim_id: str, ordinal: int, level: str | None):
        if level is None:
            return f"{dim_id}#{ordinal}"
        members = {row.get(level, OTHER_LABEL) for row in rows_by_dim[dim_id][ordinal - 1]}
        if members == {OTHER_LABEL}:
            return OTHER
        if len(members) == 1:
            return next(iter(members))
        return frozenset(members)

    groups: dict[tuple, list[list[float]]] = {}
    order: list[tuple] = []
    fact_count = 0
    grand = [0.0] * len(query.measures)
    for sale in sales:
        refs = {d.get("dim"): d.get("idref") for d in sale.findall("dimref")}
        raw = {m.tag: m.text for m in sale if m.tag != "dimref"}
        values = [int(raw["f_quantity"]) if m == "f_quantity" else float(raw["f_totalamount"])
                  for m in query.measures]
        fact_count += 1
        for i, v in enumerate(values):
            grand[i] += v
        key = tuple(
            component(dim_id, int(refs[dim_id].rpartition("#")[2]), level)
            for dim_id, level in query.grouping
        )
        if key not in groups:
            groups[key] = [[] for _ in query.measures]
            order.append(key)
        for i, v in enumerate(values):
            groups[key][i].append(v)

    entries = {}
    for key in order:
        columns = groups[key]
        record = {"support": len(columns[0]), "values": {}}
        if query.aggregate == "AVG":
            record["sums"] = {}
        for i, measure in enumerate(query.measures):
            column = columns[i]
            if query.aggregate == "SUM":
                total = 0.0
                for v in column:
                    total += v
                record["values"][measure] = total
            elif query.aggregate == "MIN":
                record["values"][measure] = min(column)
            elif query.aggregate == "MAX":
                record["values"][measure] = max(column)
            else:
                record["sums"][measure] = math.fsum(column)
                record["values"][measure] = math.fsum(column) / len(column)
        entries[key] = record

    return {
        "query": query.id,
        "aggregate": query.aggregate,
        "measures": list(query.measures),
        "fact_count": fact_count,
        "grand_totals": dict(zip(query.measures, grand)),
        "entries": entries,
    }


# --- cube comparison ---------------------------------------------------------


def cubes_match(a: Any, b: Any, rel_tol: float = REL_TOL) -> tuple[bool, list[str]]:
    """Entry-wise cube equality: exact for SUM/MIN/MAX and supports,
    rel_tol for AVG values.  Returns (equal, differences)."""
    na, nb = normalize_cube(a), normalize_cube(b)
    diffs: list[str] = []
    if na["aggregate"] != nb["aggregate"] or na["measures"] != nb["measures"]:
        diffs.append("query shapes differ")
        return False, diffs
    if na["fact_count"] != nb["fact_count"]:
        diffs.append(f"fact counts differ: {na['fact_count']} != {nb['fact_count']}")
    for measure in na["measures"]:
        if not _close(na["grand_totals"][measure], nb["grand_totals"][measure], rel_tol):
            diffs.append(f"grand total {measure} differs")
    only_a = set(na["entries"]) - set(nb["entries"])
    only_b = set(nb["entries"]) - set(na["entries"])
    if only_a:
        diffs.append(f"{len(only_a)} groups only in first (e.g. {next(iter(only_a))!r})")
    if only_b:
        diffs.append(f"{len(only_b)} groups only in second (e.g. {next(iter(only_b))!r})")
    exact = na["aggregate"] != "AVG"
    for key in set(na["entries"]) & set(nb["entries"]):
        ea, eb = na["entries"][key], nb["entries"][key]
        if ea["support"] != eb["support"]:
            diffs.append(f"{key!r}: supports differ")
        for measure in na["measures"]:
            va, vb = ea["values"][measure], eb["values"][measure]
            if (va != vb) if exact else not _close(va, vb, rel_tol):
                diffs.append(f"{key!r}/{measure}: {va!r} != {vb!r}")
    return not diffs, diffs


def qbs_view_of_pedersen(cube: Any) -> dict:
    """Re-key a cube computed over transformed data into query-time components.

    The static engine's groups are atomic labels; "Other" maps onto OTHER
    and '+'-joined fused labels onto fused member sets, the shared naming
    both engines were designed around.
    """
    norm = dict(normalize_cube(cube))
    mapped = {}
    for key, entry in norm["entries"].items():
        new_key = tuple(
            label_component(c) if isinstance(c, str) else c for c in key)
        if new_key in mapped:
            raise BenchmarkError(f"label mapping collides on {new_key!r}")
        mapped[new_key] = entry
    norm["entries"] = mapped
    return norm


# --- negative control ----------------------------------------------------


def double_counting_cube(in_dir: str, query: Query) -> ResultCube:
    """Deliberately broken engine: every non-strict row aggregates separately.

    Each fact contributes once per combination of its instances' row-level
    values instead of once per fused group, re-creating the double counting
    the summarizability engines exist to prevent.  Negative control for the
    correctness checker; never a benchmark subject.
    """
    model = xmlio.read_metadata(in_dir)
    indexes = xmlio.load_dimensions(in_dir, model)
    getter = {"f_quantity": lambda f: f.f_quantity,
              "f_totalamount": lambda f: f.f_totalamount}
    extract = [getter[m] for m in query.measures]
    cube = ResultCube(query, MATCH_HASH)
    for fact in xmlio.iter_facts(in_dir, model):
        values = [fn(fact) for fn in extract]
        cube.observe_fact(values)
        alternatives = []
        for dim_id, level in query.grouping:
            inst = indexes[dim_id][fact.dim_refs[dim_id]]
            if level is None:
                alternatives.append([inst.instance_id])
            else:
                alternatives.append(
                    [row.cells.get(level, OTHER) for row in inst.rows])
        for combo in product(*alternatives):
            cube.contribute(combo, values)
    cube.close()
    return cube


# --- memory probe ---------------------------------------------------------


class _CountingVisitor:
    def __init__(self):
        self.facts = 0
        self.instances = 0

    def visit_instance(self, schema, inst):
        self.instances += 1

    def visit_fact(self, fact):
        self.facts += 1


def stream_memory_high_water(in_dir: str) -> tuple[int, int, int]:
    """Peak traced allocation while streaming the warehouse with a counting
    visitor; returns (peak_bytes, facts, instances)."""
    visitor = _CountingVisitor()
    tracemalloc.start()
    try:
        xmlio.stream_warehouse(in_dir, visitor)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return peak, visitor.facts, visitor.instances


# --- datasets and campaign -------------------------------------------------


@dataclass(frozen=True)
class DatasetSpec:
    """One benchmark dataset: generator parameters plus a campaign id."""

    id: str
    facts: int
    incomplete: int = 0
    nonstrict: int = 0
    nonstrict_number: int = 0
    seed: int = 0

    @property
    def regime(self) -> str:
        return self.config(None).regime.value

    def config(self, out_dir: str | None) -> GeneratorConfig:
        return GeneratorConfig(
            fact_number=self.facts,
            incomplete_percentage=self.incomplete,
            nonstrict_percentage=self.nonstrict,
            nonstrict_number=self.nonstrict_number,
            seed=self.seed,
            output_dir=out_dir,
        )


def standard_matrix(facts: int = 1000, seed: int = 42,
                    percentages: Sequence[int] = (5, 50),
                    nonstrict_number: int = 4) -> list[DatasetSpec]:
    """The seven-regime dataset grid: simple plus {incomplete, non-strict,
    complex} at each percentage."""
    specs = [DatasetSpec(f"simple-{facts}", facts, seed=seed)]
    for pct in percentages:
        specs.append(DatasetSpec(f"incomplete{pct}-{facts}", facts,
                                 incomplete=pct, seed=seed))
        specs.append(DatasetSpec(f"nonstrict{pct}-{facts}", facts, nonstrict=pct,
                                 nonstrict_number=nonstrict_number, seed=seed))
        specs.append(DatasetSpec(f"complex{pct}-{facts}", facts, incomplete=pct,
                                 nonstrict=pct, nonstrict_number=nonstrict_number,
                                 seed=seed))
    return specs


def ensure_dataset(spec: DatasetSpec, data_root: str) -> str:
    """Generate the dataset unless its six-document layout already exists."""
    out_dir = os.path.join(data_root, spec.id)
    probe = [xmlio.METADATA_FILE, "f_sale.xml", "d_part.xml", "d_customer.xml",
             "d_supplier.xml", "d_date.xml"]
    if not all(os.path.exists(os.path.join(out_dir, name)) for name in probe):
        generate_warehouse(spec.config(out_dir))
    return out_dir


def infer_regime(in_dir: str) -> str:
    """Instance sweep for layouts without provenance (standalone `run` rows)."""
    model = xmlio.read_metadata(in_dir)
    multi = absent = False
    for schema in model.dimensions:
        for inst in xmlio.iter_instances(in_dir, schema):
            kind = classify_instance(inst, schema)
            multi = multi or kind in (HierarchyKind.NONSTRICT, HierarchyKind.COMPLEX)
            absent = absent or kind in (HierarchyKind.INCOMPLETE, HierarchyKind.COMPLEX)
    if multi and absent:
        return HierarchyKind.COMPLEX.value
    if multi:
        return HierarchyKind.NONSTRICT.value
    if absent:
        return HierarchyKind.INCOMPLETE.value
    return HierarchyKind.SIMPLE.value


@dataclass
class RunReport:
    """One report row: identity, timings, group count, correctness flags."""

    dataset: str
    regime: str
    facts: int | None
    incomplete_pct: int | None
    nonstrict_pct: int | None
    nonstrict_num: int | None
    engine: str
    matching: str
    query: str
    load_ms: float | None = None
    overhead_ms: float = 0.0
    query_ms: float | None = None
    read_ms: float | None = None
    resolve_ms: float | None = None
    match_ms: float | None = None
    agg_ms: float | None = None
    groups: int | None = None
    chk_dup: bool | None = None
    chk_grand: bool | None = None
    chk_avg: bool | None = None
    chk_minmax: bool | None = None
    error: str | None = field(default=None, compare=False)

    @property
    def checks_passed(self) -> bool:
        return bool(self.chk_dup and self.chk_grand and self.chk_avg and self.chk_minmax)

    def row(self) -> list[str]:
        def fmt(value):
            if value is None:
                return ""
            if isinstance(value, bool):
                return "1" if value else "0"
            if isinstance(value, float):
                return f"{value:.3f}"
            return str(value)

        if self.error is not None:
            cells = [fmt(getattr(self, col)) for col in REPORT_COLUMNS]
            for col in ("chk_dup", "chk_grand", "chk_avg", "chk_minmax"):
                cells[REPORT_COLUMNS.index(col)] = "ERR"
            return cells
        return [fmt(getattr(self, col)) for col in REPORT_COLUMNS]


def run_cell(spec: DatasetSpec, run_dir: str, engine: str, query: Query,
             matching: str, repeats: int = 3, warmup: int = 1,
             overhead_ms: float = 0.0) -> RunReport:
    """One campaign cell: warm-up run discarded, median-of-`repeats` timing."""
    report = RunReport(
        dataset=spec.id, regime=spec.regime, facts=spec.facts,
        incomplete_pct=spec.incomplete, nonstrict_pct=spec.nonstrict,
        nonstrict_num=spec.nonstrict_number, engine=engine, matching=matching,
        query=query.id, overhead_ms=overhead_ms if engine == ENGINE_PEDERSEN else 0.0,
    )
    try:
        if engine == ENGINE_NAIVE:
            start = time.perf_counter()
            cube = double_counting_cube(run_dir, query)
            report.query_ms = (time.perf_counter() - start) * 1000.0
            checks = check_correctness(cube, run_dir, query, engine=ENGINE_QBS)
        else:
            timings = []
            cube = None
            for i in range(warmup + repeats):
                cube, timing = run_query(query, run_dir, engine=engine,
                                         matching=matching, instrument=True)
                if i >= warmup:
                    timings.append(timing)
            timing = sorted(timings, key=lambda t: t.query_ms)[len(timings) // 2]
            report.load_ms = timing.load_ms
            report.query_ms = timing.query_ms
            report.read_ms = timing.read_ms
            report.resolve_ms = timing.resolve_ms
            report.match_ms = timing.match_ms
            report.agg_ms = timing.agg_ms
            checks = check_correctness(cube, run_dir, query, engine=engine)
        report.groups = len(normalize_cube(cube)["entries"])
        report.chk_dup = checks.dup_ok
        report.chk_grand = checks.grand_ok
        report.chk_avg = checks.avg_ok
        report.chk_minmax = checks.minmax_ok
    except BenchmarkError as exc:
        report.error = str(exc)
    return report


def write_report(path: str, reports: Sequence[RunReport], append: bool = False) -> None:
    new_file = not (append and os.path.exists(path))
    mode = "a" if append and os.path.exists(path) else "w"
    with open(path, mode, encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(REPORT_COLUMNS)
        for report in reports:
            writer.writerow(report.row())


DATASET_COLUMNS = [
    "dataset", "regime", "facts", "incomplete_pct", "nonstrict_pct", "nonstrict_num",
    "seed", "dw_model_bytes", "f_sale_bytes", "d_part_bytes", "d_customer_bytes",
    "d_supplier_bytes", "d_date_bytes", "total_bytes",
]


def write_dataset_sizes(path: str, specs: Sequence[DatasetSpec],
                        dirs: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_COLUMNS)
        for spec, d in zip(specs, dirs):
            sizes = xmlio.document_sizes(d)
            writer.writerow([
                spec.id, spec.regime, spec.facts, spec.incomplete, spec.nonstrict,
                spec.nonstrict_number, spec.seed,
                sizes["dw-model.xml"], sizes["f_sale.xml"], sizes["d_part.xml"],
                sizes["d_customer.xml"], sizes["d_supplier.xml"], sizes["d_date.xml"],
                sum(sizes.values()),
            ])


def load_matrix(path: str) -> dict:
    import json

    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def run_campaign(matrix: dict, report_path: str, data_root: str | None = None,
                 parallel: bool = False) -> list[RunReport]:
    """Run every (dataset, engine, query, matching) cell of the matrix.

    Datasets are generated (or reused) under `data_root`; static-engine
    cells transform each dataset once and share the measured overhead.  One
    CSV row per cell lands in report_path, and per-document byte sizes in
    `<report stem>-datasets.csv`.  Cell failures are recorded in-row and the
    campaign continues.  `parallel` runs cells on a thread pool and is meant
    for correctness-only sweeps: timings then include scheduling noise.
    """
    data_root = data_root or matrix.get("data_dir") or "datasets"
    os.makedirs(data_root, exist_ok=True)
    specs = [spec if isinstance(spec, DatasetSpec) else DatasetSpec(**spec)
             for spec in matrix.get("datasets", [])]
    engines = list(matrix.get("engines", [ENGINE_QBS, ENGINE_PEDERSEN]))
    matchings = list(matrix.get("matching", [MATCH_HASH]))
    repeats = int(matrix.get("repeats", 3))
    warmup = int(matrix.get("warmup", 1))
    wanted = matrix.get("queries", "all")
    if wanted == "all":
        queries = standard_workload()
    else:
        queries = [get_query(qid) for qid in wanted]

    dirs = [ensure_dataset(spec, data_root) for spec in specs]
    stem, _ = os.path.splitext(report_path)
    if specs:
        write_dataset_sizes(f"{stem}-datasets.csv", specs, dirs)

    overheads: dict[str, tuple[str, float]] = {}
    if ENGINE_PEDERSEN in engines:
        for spec, d in zip(specs, dirs):
            out = d + "-pedersen"
            transform = engine_pedersen.transform_warehouse(d, out)
            overheads[spec.id] = (out, transform.overhead_ms)

    cells = []
    for (spec, d), engine, matching, query in product(
            zip(specs, dirs), engines, matchings, queries):
        run_dir, overhead = (overheads[spec.id] if engine == ENGINE_PEDERSEN
                             else (d, 0.0))
        cells.append((spec, run_dir, engine, query, matching, overhead))

    def execute(cell):
        spec, run_dir, engine, query, matching, overhead = cell
        return run_cell(spec, run_dir, engine, query, matching,
                        repeats=repeats, warmup=warmup, overhead_ms=overhead)

    if parallel:
        with ThreadPoolExecutor() as pool:
            reports = list(pool.map(execute, cells))
    else:
        reports = [execute(cell) for cell in cells]

    write_report(report_path, reports)
    return reports
