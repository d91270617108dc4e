"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import itertools
import random
import time

import pytest

from plcclone import kernels
from plcclone.attributes import eval_attribute
from plcclone.bench import DEFAULT_SIZES, run_bench
from plcclone.compare import compare_inter, compare_pair
from plcclone.family import ALTERNATIVE, MANDATORY, build_family_model
from plcclone.matching import greedy_match
from plcclone.metrics import MetricAttribute, MetricOption, builtin_metric
from plcclone.model import Pou, Statement, StBody, VariableDecl, Literal
from plcclone.mutation import run_campaign
from plcclone.plcopen import parse_project
from plcclone.samples import CORE_SAMPLES, load_sample, sample_bytes
from plcclone.stparser import parse_expression


def _report(criterion: int, text: str) -> None:
    print(f"ACCEPTANCE {criterion} PASS: {text}")


def test_criterion_1_self_similarity():
    started = time.perf_counter()
    for name in CORE_SAMPLES:
        project, _ = load_sample(name)
        for kind in ("coarse", "fine"):
            metric = builtin_metric(kind)
            root = compare_inter(project, project, metric)
            assert abs(root.similarity - 1.0) <= 1e-9
            family = build_family_model(root, 1.0, project, project)
            assert all(node.category == MANDATORY for node in family.walk())
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"self-similarity runs took {elapsed:.2f}s"
    _report(1, f"3 samples x 2 metrics self-compare to 1.0, all-mandatory, in {elapsed:.2f}s")


def test_criterion_2_worked_example():
    pou = Pou(
        name="EXAMPLE",
        kind="program",
        variables=(VariableDecl("A", "BOOL"), VariableDecl("B", "BOOL")),
        body=StBody(
            (
                Statement(
                    kind="ifStmt",
                    condition=parse_expression("A"),
                    children=(Statement(kind="assignment", target="B", value=Literal("FALSE", "BOOL")),),
                ),
            )
        ),
    )
    metric_option = MetricOption(
        type_tag="pou",
        weight=1.0,
        options=(
            MetricOption(
                type_tag="variable",
                weight=1.0,
                attributes=(MetricAttribute("var-name", 0.5), MetricAttribute("var-type", 0.5)),
            ),
        ),
    )
    root = compare_pair(pou, pou, metric_option)
    (option,) = root.option_children()
    similarities = [pair.similarity for pair in option.children]
    assert similarities == [1.0, 0.5, 0.5, 1.0]
    assert option.matched_indices == (0, 3)
    selected = {(str(l), str(r)) for l, r, _ in option.match.selected}
    assert selected == {("variable:A", "variable:A"), ("variable:B", "variable:B")}
    assert option.similarity == 1.0
    _report(2, "variable pair similarities {1.0, 0.5, 0.5, 1.0}; matched option propagates to 1.0")


def test_criterion_3_count_attribute_ratio():
    def pou_with(n):
        statements = tuple(
            Statement(kind="assignment", target="x", value=Literal(str(i), "INT")) for i in range(n)
        )
        return Pou(name=f"P{n}", kind="program", variables=(VariableDecl("x", "INT"),), body=StBody(statements))

    value = eval_attribute("st-statement-count", pou_with(93), pou_with(95))
    assert abs(value - 0.9789) <= 0.0001
    _report(3, f"st-statement-count(93, 95) = {value:.6f}")


def test_criterion_4_mutation_campaigns():
    seeds = [load_sample(name)[0] for name in CORE_SAMPLES]
    fine = builtin_metric("fine")
    coarse = builtin_metric("coarse")
    iterations = 1000

    started = time.perf_counter()
    fine_t2 = run_campaign(seeds, iterations, "T2", fine, rng_seed=1)
    t2_elapsed = time.perf_counter() - started
    assert t2_elapsed <= 300.0
    assert fine_t2.outcome.precision == 1.0
    assert fine_t2.outcome.recall >= 0.75

    started = time.perf_counter()
    fine_t3 = run_campaign(seeds, iterations, "T3", fine, rng_seed=1)
    t3_elapsed = time.perf_counter() - started
    assert t3_elapsed <= 300.0
    assert fine_t3.outcome.precision == 1.0
    assert fine_t3.outcome.recall >= 0.95

    coarse_t2 = run_campaign(seeds, iterations, "T2", coarse, rng_seed=1)
    assert coarse_t2.outcome.recall <= 0.20

    _report(
        4,
        f"fine T2 precision {fine_t2.outcome.precision:.4f} recall {fine_t2.outcome.recall:.4f} "
        f"({t2_elapsed:.1f}s); fine T3 precision {fine_t3.outcome.precision:.4f} recall "
        f"{fine_t3.outcome.recall:.4f} ({t3_elapsed:.1f}s); coarse T2 recall "
        f"{coarse_t2.outcome.recall:.4f}",
    )


def _optimal_assignment(weights) -> float:
    rows = len(weights)
    columns = len(weights[0])
    if rows > columns:
        weights = [[weights[r][c] for r in range(rows)] for c in range(columns)]
        rows, columns = columns, rows
    best = 0.0
    for assignment in itertools.permutations(range(columns), rows):
        total = sum(weights[r][assignment[r]] for r in range(rows))
        if total > best:
            best = total
    return best


def test_criterion_5_matching_oracle():
    rng = random.Random(61)
    trials = 1000
    for _ in range(trials):
        rows = rng.randrange(1, 7)
        columns = rng.randrange(1, 7)
        weights = [[rng.random() for _ in range(columns)] for _ in range(rows)]
        edges = [
            (f"L{r:02d}", f"R{c:02d}", weights[r][c]) for r in range(rows) for c in range(columns)
        ]
        result = greedy_match(edges)
        lefts = [l for l, _, _ in result.selected]
        rights = [r for _, r, _ in result.selected]
        assert len(set(lefts)) == len(lefts) and len(set(rights)) == len(rights)
        free_left, free_right = set(result.unmatched_left), set(result.unmatched_right)
        assert not any(s > 0 and l in free_left and r in free_right for l, r, s in edges)
        greedy_total = sum(s for _, _, s in result.selected)
        assert greedy_total >= 0.5 * _optimal_assignment(weights) - 1e-12
    for size in range(1, 7):
        weights = [[1.0 if i == j else 0.3 for j in range(size)] for i in range(size)]
        edges = [(f"L{i}", f"R{j}", weights[i][j]) for i in range(size) for j in range(size)]
        total = sum(s for _, _, s in greedy_match(edges).selected)
        assert total == _optimal_assignment(weights) == float(size)
    _report(5, f"{trials} random trials up to 6x6: independent, maximal, >= 1/2 optimum; identity exact")


def test_criterion_6_nested_action_difference():
    original = sample_bytes("conveyor_sfc")
    variant = original.replace(b"Speed := Speed + 1;", b"Speed := Speed + 3;")
    assert variant != original
    left, _ = parse_project(original)
    right, _ = parse_project(variant)
    fine = builtin_metric("fine")
    root = compare_inter(left, right, fine)
    family = build_family_model(root, 1.0, left, right)
    nodes = list(family.walk())

    action_node = next(n for n in nodes if n.name == "action ACT_RUN")
    assert action_node.category == ALTERNATIVE
    changed = next(n for n in nodes if n.left_ref == "pou:CONVEYOR/action:ACT_RUN/statement:1")
    assert changed.category == ALTERNATIVE  # the changed statement is flagged
    siblings = [
        n
        for n in nodes
        if n.left_ref
        in ("pou:CONVEYOR/action:ACT_RUN/statement:0", "pou:CONVEYOR/action:ACT_RUN/statement:2")
    ]
    assert len(siblings) == 2
    assert all(n.category == MANDATORY for n in siblings)
    untouched_action = next(n for n in nodes if n.name == "action ACT_STOP")
    assert untouched_action.category == MANDATORY
    _report(6, "nested action is alternative, changed statement flagged, unchanged siblings mandatory")


def test_criterion_7_scaling():
    result = run_bench(DEFAULT_SIZES, builtin_metric("fine"), backend="auto", rng_seed=1)
    largest = result.rows[-1]
    assert largest.total_pairs >= 400_000
    assert largest.elapsed_seconds < 10.0
    assert result.correlation >= 0.95
    _report(
        7,
        f"{largest.total_pairs} pairs in {largest.elapsed_seconds:.2f}s "
        f"({result.backend} kernels); correlation(pairs, time) = {result.correlation:.4f}",
    )


def test_criterion_8_type_one_collapse():
    a, _ = parse_project(sample_bytes("example_basic"))
    b, _ = parse_project(sample_bytes("example_basic_ws"))
    assert a.pous == b.pous
    assert a.global_variables == b.global_variables
    for kind in ("coarse", "fine"):
        root = compare_inter(a, b, builtin_metric(kind))
        assert root.similarity == 1.0
    _report(8, "whitespace/comment variants parse to equal models and compare to 1.0")
