"""Synthetic scaling models and the comparison benchmark.

The generator emits PLCopen XML projects of parameterized size; the bench
self-compares them at increasing sizes, records created pair counts against
elapsed time, and reports the Pearson correlation.  Run time should grow
linearly with the number of created pairs.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass
from xml.sax.saxutils import escape

from . import kernels
from .attributes import clear_caches
from .compare import CompareStats, compare_inter_light
from .metrics import Metric, builtin_metric
from .model import Project
from .plcopen import parse_project

_ST_TEMPLATES = (
    "{out} := {a} + {n};",
    "{out} := {a} * {n} - {b};",
    "{out} := ({a} + {b}) * {n};",
    "IF {a} > {n} THEN {out} := {b}; END_IF",
    "IF {a} > {b} THEN {out} := {n}; ELSE {out} := {a} + 1; END_IF",
    "WHILE {a} < {n} DO {a} := {a} + 1; END_WHILE",
    "FOR I := 0 TO {n} DO {out} := {out} + {a}; END_FOR",
    "{out} := {a} MOD {n};",
)


def generate_project_xml(pou_count: int, statements_per_pou: int, rng_seed: int = 1) -> bytes:
    """A synthetic ST project with the requested shape."""
    rng = random.Random(rng_seed)
    pous = []
    for pou_index in range(pou_count):
        variables = "\n".join(
            f'            <variable name="V{i}"><type><INT/></type></variable>'
            for i in range(6)
        ) + '\n            <variable name="I"><type><INT/></type></variable>'
        statements = []
        for _ in range(statements_per_pou):
            template = _ST_TEMPLATES[rng.randrange(len(_ST_TEMPLATES))]
            statements.append(
                template.format(
                    out=f"V{rng.randrange(6)}",
                    a=f"V{rng.randrange(6)}",
                    b=f"V{rng.randrange(6)}",
                    n=rng.randrange(1, 500),
                )
            )
        body = escape("\n".join(statements))
        pous.append(
            f"""      <pou name="GEN_{pou_index}" pouType="program">
        <interface>
          <localVars>
{variables}
          </localVars>
        </interface>
        <body>
          <ST><xhtml xmlns="http://www.w3.org/1999/xhtml">{body}</xhtml></ST>
        </body>
      </pou>"""
        )
    document = f"""<?xml version="1.0" encoding="utf-8"?>
<project xmlns="http://www.plcopen.org/xml/tc6_0201">
  <fileHeader companyName="plcclone bench" productName="plcclone" productVersion="0.1.0" creationDateTime="2024-01-01T00:00:00"/>
  <contentHeader name="Synthetic_{pou_count}x{statements_per_pou}"/>
  <types>
    <dataTypes/>
    <pous>
{chr(10).join(pous)}
    </pous>
  </types>
  <instances>
    <configurations/>
  </instances>
</project>
"""
    return document.encode("utf-8")


def generate_project(pou_count: int, statements_per_pou: int, rng_seed: int = 1) -> Project:
    project, _ = parse_project(generate_project_xml(pou_count, statements_per_pou, rng_seed))
    return project


@dataclass
class BenchRow:
    pou_count: int
    statements_per_pou: int
    total_pairs: int
    attribute_evaluations: int
    elapsed_seconds: float
    similarity: float
    stats: CompareStats


@dataclass
class BenchResult:
    backend: str
    metric_name: str
    rows: list[BenchRow]

    @property
    def correlation(self) -> float:
        """Pearson correlation between created pair count and elapsed time."""
        if len(self.rows) < 2:
            return 1.0
        try:
            return statistics.correlation(
                [float(r.total_pairs) for r in self.rows],
                [r.elapsed_seconds for r in self.rows],
            )
        except statistics.StatisticsError:  # constant inputs (repeated sizes)
            return 0.0


#: (pou_count, statements_per_pou) shapes of increasing size; the largest
#: self-comparison creates roughly 430k element pairs
DEFAULT_SIZES = ((2, 20), (4, 30), (6, 40), (8, 48), (10, 55))


def run_bench(
    sizes=DEFAULT_SIZES,
    metric: Metric | None = None,
    backend: str = "auto",
    rng_seed: int = 1,
) -> BenchResult:
    """Self-compare generated projects of increasing size, timed."""
    active = kernels.set_backend(backend)
    metric = metric or builtin_metric("fine")
    rows = []
    for pou_count, statements_per_pou in sizes:
        project = generate_project(pou_count, statements_per_pou, rng_seed)
        clear_caches()
        started = time.perf_counter()
        similarity, stats = compare_inter_light(project, project, metric)
        elapsed = time.perf_counter() - started
        rows.append(
            BenchRow(
                pou_count=pou_count,
                statements_per_pou=statements_per_pou,
                total_pairs=stats.total_pairs,
                attribute_evaluations=stats.attribute_evaluations,
                elapsed_seconds=elapsed,
                similarity=similarity,
                stats=stats,
            )
        )
    return BenchResult(backend=active, metric_name=metric.name, rows=rows)


def bench_report_dict(result: BenchResult) -> dict:
    return {
        "backend": result.backend,
        "metric": result.metric_name,
        "correlationPairsTime": round(result.correlation, 4),
        "rows": [
            {
                "pous": row.pou_count,
                "statementsPerPou": row.statements_per_pou,
                "pairs": row.total_pairs,
                "pairsByType": dict(sorted(row.stats.pair_counts.items())),
                "attributeEvaluations": row.attribute_evaluations,
                "elapsedSeconds": round(row.elapsed_seconds, 4),
                "similarity": round(row.similarity, 4),
            }
            for row in result.rows
        ],
    }


def bench_report_text(result: BenchResult) -> str:
    lines = [
        f"benchmark (kernel backend: {result.backend}, metric: {result.metric_name})",
        f"{'pous':>6} {'stmts':>6} {'pairs':>10} {'attr evals':>12} {'seconds':>9} {'similarity':>10}",
    ]
    for row in result.rows:
        lines.append(
            f"{row.pou_count:>6} {row.statements_per_pou:>6} {row.total_pairs:>10}"
            f" {row.attribute_evaluations:>12} {row.elapsed_seconds:>9.4f} {row.similarity:>10.4f}"
        )
    lines.append(f"correlation(pairs, time) = {result.correlation:.4f}")
    return "\n".join(lines) + "\n"
