import pytest

from plcclone.model import SfcBody, StBody, VarRef
from plcclone.plcopen import ParseError, UnsupportedLanguageError, parse_project
from plcclone.samples import load_sample, sample_bytes


def test_basic_sample_matches_expected_shape():
    project, report = load_sample("example_basic")
    assert report.warnings == []
    assert len(project.pous) == 1
    pou = project.pous[0]
    assert pou.name == "EXAMPLE"
    assert [v.name for v in pou.variables] == ["A", "B"]
    (if_stmt,) = pou.body.statements
    assert if_stmt.kind == "ifStmt"
    assert if_stmt.condition == VarRef("A")
    (assign,) = if_stmt.children
    assert assign.kind == "assignment"
    assert assign.target == "B"


def test_sfc_action_body_is_structured_text():
    project, _ = load_sample("conveyor_sfc")
    conveyor = project.pous[0]
    assert isinstance(conveyor.body, SfcBody)
    run_action = next(a for a in conveyor.actions if a.name == "ACT_RUN")
    assert isinstance(run_action.body, StBody)
    assert len(run_action.body.statements) == 3
    running = next(s for s in conveyor.body.steps if s.name == "Running")
    assert running.associations[0].action_ref == "ACT_RUN"
    assert running.associations[0].qualifier == "N"
    stopped = next(s for s in conveyor.body.steps if s.name == "Stopped")
    assert stopped.associations[0].qualifier == "entry"  # P1 maps to entry


def test_sfc_transition_wiring():
    project, _ = load_sample("conveyor_sfc")
    body = project.pous[0].body
    first = body.transitions[0]
    assert first.from_steps == ("Init",)
    assert first.to_steps == ("Running",)
    assert first.condition is not None
    initials = [s for s in body.steps if s.is_initial]
    assert [s.name for s in initials] == ["Init"]


def test_graphical_sample_ld_and_fbd():
    project, _ = load_sample("logic_graphical")
    interlock = next(p for p in project.pous if p.name == "INTERLOCK")
    networks = interlock.body.networks
    assert len(networks) == 2
    assert networks[1].label == "TIMERNET"
    first = networks[0]
    assert [type(e).__name__ for e in first.elements] == ["Contact", "Contact", "Contact", "Coil"]
    assert first.elements[2].negated is True
    assert (0, 1) in first.wiring and (0, 2) in first.wiring
    assert (1, 3) in first.wiring and (2, 3) in first.wiring

    logic = next(p for p in project.pous if p.name == "LOGIC")
    fbd_networks = logic.body.networks
    assert fbd_networks[0].jumps == ("CALC",)
    assert fbd_networks[1].label == "CALC"
    assert fbd_networks[1].nested_st is not None
    assert len(fbd_networks[1].nested_st.statements) == 2
    connections = set(fbd_networks[0].connections)
    assert ("OR.OUT", "AND.IN2") in connections
    assert ("AND.OUT", "endpoint.3") in connections

    add2 = next(p for p in project.pous if p.name == "ADD2")
    assert add2.kind == "function"
    assert add2.return_type == "INT"


def test_empty_project():
    project, report = parse_project(
        b'<?xml version="1.0"?><project xmlns="http://www.plcopen.org/xml/tc6_0201"/>'
    )
    assert project.pous == ()
    assert report.warnings == []


def test_malformed_xml_reports_position():
    with pytest.raises(ParseError, match=r"line \d+"):
        parse_project(b"<project><unclosed></project>")


def test_instruction_list_is_fatal_and_names_the_pou():
    document = b"""<?xml version="1.0"?>
<project xmlns="http://www.plcopen.org/xml/tc6_0201">
  <types><pous>
    <pou name="LEGACY" pouType="program">
      <body><IL>LD A</IL></body>
    </pou>
  </pous></types>
</project>"""
    with pytest.raises(UnsupportedLanguageError, match="LEGACY"):
        parse_project(document)


def test_vendor_extension_skipped_with_warning():
    document = b"""<?xml version="1.0"?>
<project xmlns="http://www.plcopen.org/xml/tc6_0201">
  <types><pous>
    <pou name="X" pouType="program">
      <interface>
        <localVars><variable name="A"><type><BOOL/></type></variable></localVars>
        <vendorThing/>
      </interface>
      <body><ST><xhtml>A := TRUE;</xhtml></ST></body>
    </pou>
  </pous></types>
</project>"""
    project, report = parse_project(document)
    assert len(project.pous) == 1
    assert report.skipped_elements == 1
    assert any("vendorThing" in message for _, message in report.warnings)


def test_parse_is_deterministic():
    data = sample_bytes("conveyor_sfc")
    first, _ = parse_project(data)
    second, _ = parse_project(data)
    assert first == second


def test_type_one_variants_parse_to_equal_models():
    a, _ = load_sample("example_basic")
    b, _ = load_sample("example_basic_ws")
    assert a.pous == b.pous
    assert a.global_variables == b.global_variables


def test_not_a_project_document():
    with pytest.raises(ParseError, match="project"):
        parse_project(b"<pou name='X'/>")


def test_bad_encoding_declaration_is_a_parse_error():
    with pytest.raises(ParseError, match="unreadable"):
        parse_project(b'<?xml version="1.0" encoding="ut2-8"?><project/>')
