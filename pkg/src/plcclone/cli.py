"""Command-line interface.

Exit codes: 0 success, 2 input/parse error, 3 metric validation error,
4 internal invariant violation.  All commands are deterministic for a
fixed configuration (including --seed) except wall-clock report fields.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import __version__, bench as bench_mod, kernels, modeljson
from .compare import CompareError, compare_inter, compare_intra, count_pairs
from .family import (
    DEFAULT_CLONE_THRESHOLD,
    DEFAULT_LAMBDA,
    build_family_model,
    classify_clones,
    emit_report,
)
from .metrics import Metric, MetricValidationError, builtin_metric, dump_metric, load_metric
from .model import ModelError
from .mutation import (
    MutationError,
    campaign_report_dict,
    campaign_report_text,
    dump_context,
    mutate,
    run_campaign,
)
from .plcopen import ParseError, parse_project

EXIT_INPUT_ERROR = 2
EXIT_METRIC_ERROR = 3
EXIT_INTERNAL_ERROR = 4

_FORMATS = {"json": "structuredDoc", "text": "textTree", "dot": "graphDoc"}


def _handle_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ParseError, ModelError, FileNotFoundError, OSError, MutationError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
        except (MetricValidationError, CompareError) as exc:
            click.echo(f"metric error: {exc}", err=True)
            sys.exit(EXIT_METRIC_ERROR)
        except Exception as exc:  # noqa: BLE001 - map to the documented exit code
            click.echo(f"internal error: {exc}", err=True)
            sys.exit(EXIT_INTERNAL_ERROR)

    return wrapper


def _load_metric_arg(name: str) -> Metric:
    if name in ("coarse", "fine"):
        return builtin_metric(name)
    return load_metric(Path(name).read_bytes())


def _read_project(path: str):
    project, report = parse_project(Path(path).read_bytes())
    for locator, message in report.warnings:
        click.echo(f"warning: {locator}: {message}", err=True)
    return project


def _write_output(data: bytes, output: str | None) -> None:
    if output:
        Path(output).write_bytes(data)
    else:
        click.echo(data.decode("utf-8"), nl=False)


metric_option = click.option(
    "--metric",
    "metric_name",
    default="fine",
    show_default=True,
    help="builtin metric name (coarse|fine) or path to a metric document",
)
lambda_option = click.option(
    "--lambda",
    "lam",
    type=float,
    default=DEFAULT_LAMBDA,
    show_default=True,
    help="family-model threshold: mandatory when similarity >= lambda",
)
format_option = click.option(
    "--format",
    "output_format",
    type=click.Choice(sorted(_FORMATS)),
    default="text",
    show_default=True,
)
seed_option = click.option("--seed", "rng_seed", type=int, default=1, show_default=True)


@click.group()
@click.version_option(version=__version__, prog_name="plcclone")
def main() -> None:
    """Clone detection and variability analysis for IEC 61131-3 projects."""


@main.command("compare-inter")
@click.argument("left", type=click.Path(exists=True, dir_okay=False))
@click.argument("right", type=click.Path(exists=True, dir_okay=False))
@metric_option
@lambda_option
@format_option
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="report file (default: stdout)")
@_handle_errors
def cmd_compare_inter(left, right, metric_name, lam, output_format, output) -> None:
    """Compare two project variants and report a family model."""
    metric = _load_metric_arg(metric_name)
    project_a = _read_project(left)
    project_b = _read_project(right)
    root = compare_inter(project_a, project_b, metric)
    family = build_family_model(root, lam, project_a, project_b)
    _write_output(emit_report(family, _FORMATS[output_format]), output)
    click.echo(f"overall similarity: {root.similarity:.4f}")


@main.command("compare-intra")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@metric_option
@lambda_option
@click.option(
    "--threshold",
    type=float,
    default=DEFAULT_CLONE_THRESHOLD,
    show_default=True,
    help="clone reporting threshold on POU pair similarity",
)
@format_option
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="report file (default: stdout)")
@click.option(
    "--emit-family",
    "family_dir",
    type=click.Path(file_okay=False),
    help="also write one family-model report per candidate pair",
)
@click.option("--jobs", type=int, default=1, show_default=True)
@_handle_errors
def cmd_compare_intra(source, metric_name, lam, threshold, output_format, output, family_dir, jobs) -> None:
    """Detect clone candidates among the POUs of one project."""
    metric = _load_metric_arg(metric_name)
    project = _read_project(source)
    pairs = compare_intra(project, metric, jobs)
    candidates = classify_clones(pairs, threshold)
    if output_format == "json":
        document = {
            "project": project.name,
            "threshold": threshold,
            "candidates": [
                {
                    "left": c.left_pou,
                    "right": c.right_pou,
                    "similarity": round(c.similarity, 4),
                    "label": c.label,
                }
                for c in candidates
            ],
        }
        _write_output((json.dumps(document, indent=2) + "\n").encode(), output)
    else:
        lines = [f"clone candidates in {project.name} (threshold {threshold:.4f}):"]
        if not candidates:
            lines.append("  none")
        lines.extend(
            f"  {c.left_pou} <-> {c.right_pou}  similarity {c.similarity:.4f}  [{c.label}]"
            for c in candidates
        )
        _write_output(("\n".join(lines) + "\n").encode(), output)
    if family_dir:
        directory = Path(family_dir)
        directory.mkdir(parents=True, exist_ok=True)
        by_key = {(str(p.x), str(p.y)): p for p in pairs}
        for index, candidate in enumerate(candidates):
            pair = by_key[(candidate.left_pou, candidate.right_pou)]
            family = build_family_model(pair, lam, project, project)
            name = f"pair_{index:03d}.{'json' if output_format == 'json' else 'txt'}"
            report_format = "structuredDoc" if output_format == "json" else "textTree"
            (directory / name).write_bytes(emit_report(family, report_format))
    click.echo(f"{len(candidates)} clone candidate(s)")


@main.command("mutate")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--category", type=click.Choice(["t2", "t3"], case_sensitive=False), required=True)
@click.option("--count", type=int, default=1, show_default=True)
@seed_option
@click.option("--output-dir", "-o", type=click.Path(file_okay=False), default=".", show_default=True)
@_handle_errors
def cmd_mutate(source, category, count, rng_seed, output_dir) -> None:
    """Generate a mutant of a seed project plus its mutation context."""
    project = _read_project(source)
    mutant, context = mutate(project, category.upper(), count, rng_seed)
    directory = Path(output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    stem = Path(source).stem
    mutant_path = directory / f"{stem}.mutant.json"
    context_path = directory / f"{stem}.context.json"
    mutant_path.write_bytes(modeljson.dump_project(mutant))
    context_path.write_bytes(dump_context(context))
    click.echo(f"wrote {mutant_path} and {context_path} ({len(context.records)} record(s))")


@main.command("evaluate")
@click.argument("sources", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--iterations", type=int, default=1000, show_default=True)
@click.option("--category", type=click.Choice(["t2", "t3"], case_sensitive=False), required=True)
@metric_option
@lambda_option
@seed_option
@click.option("--jobs", type=int, default=1, show_default=True)
@format_option
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="report file (default: stdout)")
@_handle_errors
def cmd_evaluate(sources, iterations, category, metric_name, lam, rng_seed, jobs, output_format, output) -> None:
    """Run a mutation campaign and report precision/recall."""
    if not sources:
        from .samples import CORE_SAMPLES, load_sample

        seeds = [load_sample(name)[0] for name in CORE_SAMPLES]
    else:
        seeds = [_read_project(path) for path in sources]
    metric = _load_metric_arg(metric_name)
    result = run_campaign(seeds, iterations, category.upper(), metric, lam, rng_seed, jobs)
    if output_format == "json":
        _write_output((json.dumps(campaign_report_dict(result), indent=2) + "\n").encode(), output)
    else:
        _write_output(campaign_report_text(result).encode(), output)


@main.command("bench")
@click.option(
    "--sizes",
    default=",".join(f"{p}x{s}" for p, s in bench_mod.DEFAULT_SIZES),
    show_default=True,
    help="comma-separated POUSxSTATEMENTS shapes to generate and self-compare",
)
@metric_option
@click.option(
    "--backend",
    type=click.Choice(["auto", "pure", "compiled"]),
    default="auto",
    show_default=True,
    help="kernel backend to benchmark",
)
@click.option("--compare-backends", is_flag=True, help="run every available backend")
@seed_option
@format_option
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="report file (default: stdout)")
@_handle_errors
def cmd_bench(sizes, metric_name, backend, compare_backends, rng_seed, output_format, output) -> None:
    """Benchmark comparison time against created pair counts."""
    metric = _load_metric_arg(metric_name)
    shapes = []
    for part in sizes.split(","):
        pous, _, statements = part.strip().partition("x")
        shapes.append((int(pous), int(statements)))
    backends = list(kernels.available_backends()) if compare_backends else [backend]
    results = [
        bench_mod.run_bench(tuple(shapes), metric, name, rng_seed) for name in backends
    ]
    if output_format == "json":
        document = {"runs": [bench_mod.bench_report_dict(r) for r in results]}
        _write_output((json.dumps(document, indent=2) + "\n").encode(), output)
    else:
        text = "\n".join(bench_mod.bench_report_text(r) for r in results)
        _write_output(text.encode(), output)
    kernels.set_backend("auto")


@main.command("generate")
@click.option("--pous", type=int, default=4, show_default=True)
@click.option("--statements", type=int, default=30, show_default=True)
@seed_option
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True)
@_handle_errors
def cmd_generate(pous, statements, rng_seed, output) -> None:
    """Emit a synthetic scaling project (PLCopen XML)."""
    Path(output).write_bytes(bench_mod.generate_project_xml(pous, statements, rng_seed))
    click.echo(f"wrote {output}")


@main.command("export-metric")
@click.argument("kind", type=click.Choice(["coarse", "fine"]))
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="metric file (default: stdout)")
@_handle_errors
def cmd_export_metric(kind, output) -> None:
    """Write a builtin metric as an editable JSON document."""
    _write_output(dump_metric(builtin_metric(kind)), output)


@main.command("count-pairs")
@click.argument("left", type=click.Path(exists=True, dir_okay=False))
@click.argument("right", type=click.Path(exists=True, dir_okay=False), required=False)
@metric_option
@_handle_errors
def cmd_count_pairs(left, right, metric_name) -> None:
    """Show per-type pair counts for a comparison (self-comparison if one file)."""
    metric = _load_metric_arg(metric_name)
    project_a = _read_project(left)
    project_b = _read_project(right) if right else project_a
    root = compare_inter(project_a, project_b, metric)
    stats = count_pairs(root)
    click.echo(f"{'artifact type':>15} {'pairs':>10}")
    for type_tag, count in sorted(stats.pair_counts.items()):
        click.echo(f"{type_tag:>15} {count:>10}")
    click.echo(f"{'total':>15} {stats.total_pairs:>10}")
    click.echo(f"attribute evaluations: {stats.attribute_evaluations}")
    click.echo(f"overall similarity: {root.similarity:.4f}")


if __name__ == "__main__":
    main()
