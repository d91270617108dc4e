import random

import pytest

from plcclone.compare import compare_inter
from plcclone.model import (
    Pou,
    Project,
    VariableDecl,
    iter_artifacts,
    resolve_path,
    validate_project,
)
from plcclone.mutation import (
    ALL_OPERATORS,
    MutationContext,
    MutationError,
    OPERATORS_BY_CATEGORY,
    _OPERATOR_IMPLS,
    detected_changes,
    derive_iteration_seed,
    dump_context,
    evaluate_detection,
    evaluate_per_operator,
    load_context,
    mutate,
    run_campaign,
    score_detection,
)
from plcclone.samples import CORE_SAMPLES
from plcclone.stparser import parse_structured_text


def test_mutate_is_deterministic(samples):
    seed = samples["conveyor_sfc"]
    first = mutate(seed, "T2", 1, 42)
    second = mutate(seed, "T2", 1, 42)
    assert first == second
    different = mutate(seed, "T2", 1, 43)
    assert different != first


def test_rename_variable_produces_var1():
    # the first fresh name drawn for a rename is VAR1
    pou = Pou(
        name="FRAGMENT",
        kind="program",
        variables=(VariableDecl("CONDITION", "BOOL"), VariableDecl("VALUE", "INT")),
        body=parse_structured_text("IF CONDITION THEN VALUE := 5; END_IF"),
    )
    project = Project(name="P", pous=(pou,))
    find_sites, apply = _OPERATOR_IMPLS["rename-variable"]
    site = next(s for s in find_sites(project) if s == ("FRAGMENT", "VALUE"))
    edit = apply(project, site, random.Random(1))
    mutant_pou = edit.project.pous[0]
    assert [v.name for v in mutant_pou.variables] == ["CONDITION", "VAR1"]
    (if_stmt,) = mutant_pou.body.statements
    assert if_stmt.children[0].target == "VAR1"
    # declaration plus the referencing assignment are recorded
    assert [str(r.origin_path) for r in edit.records] == [
        "pou:FRAGMENT/variable:VALUE",
        "pou:FRAGMENT/statement:0/statement:0",
    ]


def test_add_statement_record_has_no_origin(samples):
    seed = samples["example_basic"]
    find_sites, apply = _OPERATOR_IMPLS["add-statement"]
    edit = apply(seed, find_sites(seed)[0], random.Random(9))
    assert len(edit.records) == 1
    record = edit.records[0]
    assert record.origin_path is None
    assert record.mutant_path is not None
    resolve_path(edit.project, record.mutant_path)


def test_every_operator_preserves_validity(samples):
    rng_outer = random.Random(31)
    exercised = set()
    for name in CORE_SAMPLES:
        seed = samples[name]
        for operator_id in ALL_OPERATORS:
            find_sites, apply = _OPERATOR_IMPLS[operator_id]
            sites = find_sites(seed)
            for site in sites[:6]:
                edit = apply(seed, site, random.Random(rng_outer.randrange(10_000)))
                if edit is None:
                    continue
                exercised.add(operator_id)
                validate_project(edit.project)
                for record in edit.records:
                    if record.origin_path is not None:
                        resolve_path(seed, record.origin_path)
                    if record.mutant_path is not None:
                        resolve_path(edit.project, record.mutant_path)
    assert exercised == set(ALL_OPERATORS)


def test_category_purity(samples):
    for category, operators in OPERATORS_BY_CATEGORY.items():
        for iteration in range(40):
            seed = samples[CORE_SAMPLES[iteration % 3]]
            _, context = mutate(seed, category, 1, derive_iteration_seed(5, iteration))
            assert context.category == category
            assert all(record.operator_id in operators for record in context.records)


def test_ground_truth_minimality(samples, fine_metric):
    # the fine metric flags nothing outside the recorded changes
    for iteration in range(60):
        seed = samples[CORE_SAMPLES[iteration % 3]]
        category = "T2" if iteration % 2 else "T3"
        mutant, context = mutate(seed, category, 1, derive_iteration_seed(11, iteration))
        items = detected_changes(compare_inter(seed, mutant, fine_metric))
        outcome, _ = score_detection(items, context.records)
        assert outcome.fp == 0, (
            f"iteration {iteration}: spurious detections beyond the ground truth"
        )


def test_multi_mutation_paths_stay_valid(samples):
    for name in CORE_SAMPLES:
        seed = samples[name]
        for rng_seed in (3, 4, 5):
            mutant, context = mutate(seed, "T3", 4, rng_seed)
            validate_project(mutant)
            for record in context.records:
                if record.origin_path is not None:
                    resolve_path(seed, record.origin_path)
                if record.mutant_path is not None:
                    resolve_path(mutant, record.mutant_path)


def test_mutate_argument_validation(samples):
    with pytest.raises(MutationError):
        mutate(samples["example_basic"], "T9", 1, 1)
    with pytest.raises(MutationError):
        mutate(samples["example_basic"], "T2", 0, 1)
    # a project with no mutable sites names the operator pool
    empty = Project(name="E", pous=())
    with pytest.raises(MutationError, match="rename-variable"):
        mutate(empty, "T2", 1, 1)


def test_evaluate_empty_context_is_vacuous(samples, fine_metric):
    seed = samples["example_basic"]
    context = MutationContext(seed_name=seed.name, rng_seed=0, category="T2", records=())
    outcome = evaluate_detection(seed, seed, context, fine_metric)
    assert (outcome.tp, outcome.fp, outcome.fn) == (0, 0, 0)
    assert outcome.precision == 1.0
    assert outcome.recall == 1.0


def test_single_add_statement_scores_one_tp(samples, fine_metric):
    seed = samples["example_basic"]
    for rng_seed in range(30):
        mutant, context = mutate(seed, "T3", 1, rng_seed)
        if context.records[0].operator_id != "add-statement":
            continue
        outcome = evaluate_detection(seed, mutant, context, fine_metric)
        assert (outcome.tp, outcome.fp, outcome.fn) == (1, 0, 0)
        return
    pytest.fail("no add-statement draw found")


def test_single_rename_invisible_under_coarse(samples, coarse_metric):
    seed = samples["example_basic"]
    for rng_seed in range(40):
        mutant, context = mutate(seed, "T2", 1, rng_seed)
        if context.records[0].operator_id != "rename-pou":
            continue
        outcome = evaluate_detection(seed, mutant, context, coarse_metric)
        assert outcome.tp == 0
        assert outcome.fn == 1  # counts unchanged, the rename is invisible
        return
    pytest.fail("no rename-pou draw found")


def test_context_seed_mismatch_rejected(samples, fine_metric):
    seed = samples["example_basic"]
    mutant, context = mutate(seed, "T2", 1, 7)
    with pytest.raises(MutationError, match="seed"):
        evaluate_detection(samples["conveyor_sfc"], mutant, context, fine_metric)


def test_precision_recall_arithmetic(samples, fine_metric):
    seed = samples["conveyor_sfc"]
    mutant, context = mutate(seed, "T3", 2, 17)
    items = detected_changes(compare_inter(seed, mutant, fine_metric))
    outcome, _ = score_detection(items, context.records)
    # naive recomputation from the raw sets
    truth_keys = set()
    for record in context.records:
        if record.origin_path is not None:
            truth_keys.add(("seed", str(record.origin_path)))
        if record.mutant_path is not None:
            truth_keys.add(("mutant", str(record.mutant_path)))
    naive_tp = sum(1 for record in context.records if _hits(record, items))
    naive_fn = len(context.records) - naive_tp
    naive_fp = sum(1 for item in items if not (item & truth_keys))
    assert (outcome.tp, outcome.fp, outcome.fn) == (naive_tp, naive_fp, naive_fn)
    expected_precision = naive_tp / (naive_tp + naive_fp) if naive_tp + naive_fp else 1.0
    expected_recall = naive_tp / (naive_tp + naive_fn) if naive_tp + naive_fn else 1.0
    assert outcome.precision == expected_precision
    assert outcome.recall == expected_recall


def _hits(record, items):
    keys = set()
    if record.origin_path is not None:
        keys.add(("seed", str(record.origin_path)))
    if record.mutant_path is not None:
        keys.add(("mutant", str(record.mutant_path)))
    return any(item & keys for item in items)


def test_context_serialization_round_trip(samples):
    seed = samples["conveyor_sfc"]
    _, context = mutate(seed, "T3", 3, 23)
    data = dump_context(context)
    assert load_context(data) == context


def test_campaign_determinism_and_aggregation(samples, fine_metric):
    seeds = [samples[name] for name in CORE_SAMPLES]
    first = run_campaign(seeds, 12, "T3", fine_metric, rng_seed=3)
    second = run_campaign(seeds, 12, "T3", fine_metric, rng_seed=3)
    assert first.outcome == second.outcome
    assert first.per_operator == second.per_operator
    # aggregate equals the sum over iterations
    total_tp = total_fp = total_fn = 0
    from plcclone.mutation import run_iteration

    for i in range(12):
        outcome, _ = run_iteration(seeds, i, "T3", fine_metric, 3)
        total_tp += outcome.tp
        total_fp += outcome.fp
        total_fn += outcome.fn
    assert (first.outcome.tp, first.outcome.fp, first.outcome.fn) == (total_tp, total_fp, total_fn)


def test_campaign_validation(samples, fine_metric):
    with pytest.raises(MutationError):
        run_campaign([], 5, "T2", fine_metric)
    with pytest.raises(MutationError):
        run_campaign([samples["example_basic"]], 0, "T2", fine_metric)


def test_iterations_one_reduces_to_single_evaluation(samples, fine_metric):
    seeds = [samples["example_basic"]]
    campaign = run_campaign(seeds, 1, "T3", fine_metric, rng_seed=6)
    seed = seeds[0]
    mutant, context = mutate(seed, "T3", 1, derive_iteration_seed(6, 0))
    outcome, _ = evaluate_per_operator(seed, mutant, context, fine_metric)
    assert (campaign.outcome.tp, campaign.outcome.fp, campaign.outcome.fn) == (
        outcome.tp,
        outcome.fp,
        outcome.fn,
    )


def test_global_rename_respects_local_shadowing():
    from plcclone.model import StBody

    shadowing = Pou(
        name="SHADOW",
        kind="program",
        variables=(VariableDecl("Flag", "BOOL"),),
        body=parse_structured_text("Flag := TRUE;"),
    )
    user = Pou(
        name="USER",
        kind="program",
        variables=(),
        body=parse_structured_text("IF Flag THEN Done := TRUE; END_IF"),
    )
    project = Project(
        name="G",
        global_variables=(VariableDecl("Flag", "BOOL", section="global"), VariableDecl("Done", "BOOL", section="global")),
        pous=(shadowing, user),
    )
    find_sites, apply = _OPERATOR_IMPLS["rename-variable"]
    site = next(s for s in find_sites(project) if s == (None, "Flag"))
    edit = apply(project, site, random.Random(1))
    mutant = edit.project
    # the global declaration and the non-shadowing POU change ...
    assert mutant.global_variables[0].name == "VAR1"
    assert mutant.pous[1].body.statements[0].condition.name == "VAR1"
    # ... but the shadowing POU keeps its local name and references
    assert mutant.pous[0] == shadowing
    recorded = {str(r.origin_path) for r in edit.records}
    assert recorded == {"variable:Flag", "pou:USER/statement:0"}


def test_remove_variable_cascades_to_referencing_statements():
    pou = Pou(
        name="CASCADE",
        kind="program",
        variables=(VariableDecl("Keep", "INT"), VariableDecl("Drop", "INT")),
        body=parse_structured_text(
            "Keep := 1; Drop := 2; IF Drop > 0 THEN Keep := 3; END_IF Keep := Keep + 1;"
        ),
    )
    project = Project(name="R", pous=(pou,))
    find_sites, apply = _OPERATOR_IMPLS["remove-variable"]
    site = next(s for s in find_sites(project) if s == ("CASCADE", "Drop"))
    edit = apply(project, site, random.Random(1))
    mutant_pou = edit.project.pous[0]
    assert [v.name for v in mutant_pou.variables] == ["Keep"]
    # both the direct assignment and the whole IF (condition reference) vanish
    assert len(mutant_pou.body.statements) == 2
    assert all(not s.condition for s in mutant_pou.body.statements)
    origins = sorted(str(r.origin_path) for r in edit.records)
    assert origins == [
        "pou:CASCADE/statement:1",
        "pou:CASCADE/statement:2",
        "pou:CASCADE/variable:Drop",
    ]
    validate_project(edit.project)
