"""PLCopen XML (TC6) ingestion.

Parses the TC6 schema subset sufficient for ST, SFC, LD and FBD bodies:
``tc6_0200``/``tc6_0201`` namespaces or namespace-free documents.  Layout
geometry is discarded; only declarations, topology and embedded code are
kept.  Unknown or vendor-specific elements are skipped with a warning in
the :class:`ParseReport`; Instruction List bodies are a fatal error.

Graphical bodies use ``localId``/``connectionPointIn`` wiring as exported
by common IDEs.  ``<label>`` elements split an LD/FBD body into networks.
A ``<data name="nested-st">`` extension inside an FBD body attaches an
embedded ST implementation to the current network.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .model import (
    ActionAssociation,
    Coil,
    Contact,
    EmbeddedBlock,
    FbdBlock,
    FbdBody,
    FbdNetwork,
    LdBody,
    LdNetwork,
    Literal,
    NamedAction,
    Pou,
    Project,
    SfcBody,
    StBody,
    Step,
    Transition,
    VariableDecl,
    validate_project,
)
from .stparser import StSyntaxError, parse_expression, parse_structured_text

_NAMESPACES = (
    "{http://www.plcopen.org/xml/tc6_0201}",
    "{http://www.plcopen.org/xml/tc6_0200}",
    "",
)


class ParseError(Exception):
    """Fatal ingestion failure (malformed XML, unsupported language, ...)."""


class UnsupportedLanguageError(ParseError):
    pass


@dataclass
class ParseReport:
    warnings: list[tuple[str, str]] = field(default_factory=list)
    skipped_elements: int = 0

    def warn(self, locator: str, message: str) -> None:
        self.warnings.append((locator, message))

    def skip(self, locator: str, message: str) -> None:
        self.warn(locator, message)
        self.skipped_elements += 1


def _strip(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _find(element: ET.Element, name: str) -> ET.Element | None:
    for namespace in _NAMESPACES:
        found = element.find(f"{namespace}{name}")
        if found is not None:
            return found
    return None


def _findall(element: ET.Element, name: str) -> list[ET.Element]:
    for namespace in _NAMESPACES:
        found = element.findall(f"{namespace}{name}")
        if found:
            return found
    return []


def _text_content(element: ET.Element) -> str:
    """All text under an element (ST code may sit inside an xhtml wrapper)."""
    return "".join(element.itertext())


_SECTION_TAGS = {
    "localVars": "local",
    "inputVars": "input",
    "outputVars": "output",
    "inOutVars": "inOut",
    "tempVars": "temp",
    "globalVars": "global",
    "externalVars": "global",
}

_QUALIFIER_MAP = {"N": "N", "P": "P", "P1": "entry", "P0": "exit"}


def parse_project(data: bytes | str) -> tuple[Project, ParseReport]:
    """Transform a PLCopen XML document into a Project plus a parse report."""
    report = ParseReport()
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ParseError(f"malformed XML (line {line}, column {column}): {exc.msg}") from None
    except (LookupError, ValueError) as exc:  # bad encoding declarations
        raise ParseError(f"unreadable XML document: {exc}") from None
    if _strip(root.tag) != "project":
        raise ParseError(f"expected a <project> document, found <{_strip(root.tag)}>")

    name = "project"
    content_header = _find(root, "contentHeader")
    if content_header is not None and content_header.get("name"):
        name = content_header.get("name")

    pous: list[Pou] = []
    types = _find(root, "types")
    if types is not None:
        pous_element = _find(types, "pous")
        if pous_element is not None:
            for pou_element in _findall(pous_element, "pou"):
                pous.append(_parse_pou(pou_element, report))

    global_variables: list[VariableDecl] = []
    instances = _find(root, "instances")
    if instances is not None:
        configurations = _find(instances, "configurations")
        if configurations is not None:
            for configuration in _findall(configurations, "configuration"):
                for section in _findall(configuration, "globalVars"):
                    global_variables.extend(
                        _parse_variables(section, "global", "configuration", report)
                    )

    project = Project(name=name, global_variables=tuple(global_variables), pous=tuple(pous))
    validate_project(project)
    return project, report


def _parse_pou(element: ET.Element, report: ParseReport) -> Pou:
    name = element.get("name") or "POU"
    kind = element.get("pouType", "program")
    if kind not in ("program", "function", "functionBlock"):
        report.warn(f"pou {name}", f"unknown pouType {kind!r}, treating as program")
        kind = "program"

    return_type = None
    variables: list[VariableDecl] = []
    interface = _find(element, "interface")
    if interface is not None:
        for child in interface:
            tag = _strip(child.tag)
            if tag == "returnType":
                return_type = _data_type_name(child)
            elif tag in _SECTION_TAGS:
                variables.extend(
                    _parse_variables(child, _SECTION_TAGS[tag], f"pou {name}", report)
                )
            else:
                report.skip(f"pou {name}/interface", f"skipped element <{tag}>")
    if kind == "function" and return_type is None:
        return_type = "BOOL"
        report.warn(f"pou {name}", "function without returnType, assuming BOOL")
    if kind != "function":
        return_type = None

    actions: list[NamedAction] = []
    actions_element = _find(element, "actions")
    if actions_element is not None:
        for action_element in _findall(actions_element, "action"):
            action_name = action_element.get("name") or f"action{len(actions)}"
            body_element = _find(action_element, "body")
            if body_element is None:
                report.warn(f"pou {name}/action {action_name}", "action without body")
                continue
            actions.append(
                NamedAction(
                    name=action_name,
                    body=_parse_body(body_element, f"pou {name}/action {action_name}", report),
                )
            )

    body_element = _find(element, "body")
    if body_element is None:
        body = StBody(())
    else:
        body = _parse_body(body_element, f"pou {name}", report)

    return Pou(
        name=name,
        kind=kind,
        variables=tuple(variables),
        body=body,
        actions=tuple(actions),
        return_type=return_type,
    )


def _data_type_name(element: ET.Element) -> str:
    type_element = _find(element, "type") or element
    for child in type_element:
        tag = _strip(child.tag)
        if tag == "derived":
            return child.get("name", "ANY")
        return tag
    text = (element.text or "").strip()
    return text or "ANY"


def _parse_variables(
    section: ET.Element, section_name: str, context: str, report: ParseReport
) -> list[VariableDecl]:
    variables = []
    for variable in _findall(section, "variable"):
        name = variable.get("name")
        if not name:
            report.skip(context, "variable without a name")
            continue
        initial = None
        initial_element = _find(variable, "initialValue")
        if initial_element is not None:
            simple = _find(initial_element, "simpleValue")
            raw = simple.get("value") if simple is not None else _text_content(initial_element)
            if raw:
                try:
                    expr = parse_expression(raw)
                except StSyntaxError:
                    expr = None
                if isinstance(expr, Literal):
                    initial = expr
                else:
                    report.warn(
                        f"{context}/variable {name}", f"unparsed initial value {raw!r}"
                    )
        variables.append(
            VariableDecl(
                name=name,
                data_type=_data_type_name(variable),
                section=section_name,
                initial_value=initial,
            )
        )
    return variables


def _parse_body(element: ET.Element, context: str, report: ParseReport):
    for child in element:
        tag = _strip(child.tag)
        if tag == "ST":
            return _parse_st(child, context)
        if tag == "SFC":
            return _parse_sfc(child, context, report)
        if tag == "LD":
            return _parse_ld(child, context, report)
        if tag == "FBD":
            return _parse_fbd(child, context, report)
        if tag == "IL":
            raise UnsupportedLanguageError(
                f"{context}: Instruction List bodies are not supported"
            )
        report.skip(context, f"skipped body element <{tag}>")
    return StBody(())


def _parse_st(element: ET.Element, context: str) -> StBody:
    text = _text_content(element)
    try:
        return parse_structured_text(text)
    except StSyntaxError as exc:
        raise ParseError(f"{context}: {exc}") from None


def _parse_condition(element: ET.Element, context: str):
    """Transition condition: inline ST expression or a body reference."""
    condition = _find(element, "condition")
    if condition is None:
        return None, None
    reference = _find(condition, "reference")
    if reference is not None:
        return None, reference.get("name")
    inline = _find(condition, "inline")
    source = inline if inline is not None else condition
    text = _text_content(source).strip()
    if not text:
        return None, None
    try:
        return parse_expression(text), None
    except StSyntaxError as exc:
        raise ParseError(f"{context}: transition condition: {exc}") from None


def _in_connections(element: ET.Element) -> list[str]:
    refs = []
    for point in _findall(element, "connectionPointIn"):
        for connection in _findall(point, "connection"):
            ref = connection.get("refLocalId")
            if ref is not None:
                refs.append(ref)
    return refs


def _parse_sfc(element: ET.Element, context: str, report: ParseReport) -> SfcBody:
    steps: dict[str, str] = {}  # localId -> step name
    step_order: list[tuple[str, str, bool]] = []  # localId, name, initial
    transitions: list[tuple[str, ET.Element]] = []
    action_blocks: list[ET.Element] = []
    incoming: dict[str, list[str]] = {}  # localId -> referenced localIds

    for child in element:
        tag = _strip(child.tag)
        local_id = child.get("localId", "")
        if tag == "step":
            step_name = child.get("name") or f"step{len(step_order)}"
            steps[local_id] = step_name
            step_order.append((local_id, step_name, child.get("initialStep") == "true"))
            incoming[local_id] = _in_connections(child)
        elif tag == "transition":
            transitions.append((local_id, child))
            incoming[local_id] = _in_connections(child)
        elif tag == "actionBlock":
            action_blocks.append(child)
        elif tag in ("comment", "vendorElement", "addData"):
            report.skip(context, f"skipped SFC element <{tag}>")
        elif tag in ("jumpStep", "selectionDivergence", "selectionConvergence",
                     "simultaneousDivergence", "simultaneousConvergence"):
            report.skip(context, f"skipped SFC element <{tag}> (unmodeled)")
        else:
            report.skip(context, f"skipped SFC element <{tag}>")

    associations: dict[str, list[ActionAssociation]] = {}
    for block in action_blocks:
        targets = [ref for ref in _in_connections(block) if ref in steps]
        if not targets:
            report.warn(context, "actionBlock not connected to a step")
            continue
        step_name = steps[targets[0]]
        for action in _findall(block, "action"):
            qualifier = action.get("qualifier", "N")
            mapped = _QUALIFIER_MAP.get(qualifier)
            if mapped is None:
                report.warn(
                    context, f"unsupported action qualifier {qualifier!r}, treating as N"
                )
                mapped = "N"
            reference = _find(action, "reference")
            if reference is None or not reference.get("name"):
                report.skip(context, "action association without reference")
                continue
            associations.setdefault(step_name, []).append(
                ActionAssociation(qualifier=mapped, action_ref=reference.get("name"))
            )

    model_steps = tuple(
        Step(
            name=step_name,
            is_initial=initial,
            associations=tuple(associations.get(step_name, ())),
        )
        for _, step_name, initial in step_order
    )

    model_transitions = []
    for local_id, transition_element in transitions:
        from_steps = tuple(
            steps[ref] for ref in incoming.get(local_id, []) if ref in steps
        )
        to_steps = tuple(
            steps[step_id]
            for step_id in steps
            if local_id in incoming.get(step_id, [])
        )
        condition, body_ref = _parse_condition(transition_element, context)
        model_transitions.append(
            Transition(
                from_steps=from_steps,
                to_steps=to_steps,
                condition=condition,
                body_ref=body_ref,
            )
        )

    return SfcBody(steps=model_steps, transitions=tuple(model_transitions))


def _split_networks(element: ET.Element) -> list[tuple[str | None, list[ET.Element]]]:
    """Split a flat LD/FBD body into networks at <label> elements."""
    networks: list[tuple[str | None, list[ET.Element]]] = [(None, [])]
    for child in element:
        if _strip(child.tag) == "label":
            networks.append((child.get("label"), []))
        else:
            networks[-1][1].append(child)
    if not networks[0][1] and len(networks) > 1:
        networks = networks[1:]
    return networks


def _parse_ld(element: ET.Element, context: str, report: ParseReport) -> LdBody:
    networks = []
    for index, (label, children) in enumerate(_split_networks(element)):
        where = f"{context}/network {index}"
        elements = []
        positions: dict[str, int] = {}  # localId -> element index
        rails: set[str] = set()
        rail_inputs: dict[str, list[str]] = {}
        pending: list[tuple[ET.Element, int]] = []
        for child in children:
            tag = _strip(child.tag)
            local_id = child.get("localId", "")
            if tag in ("leftPowerRail", "rightPowerRail"):
                rails.add(local_id)
                rail_inputs[local_id] = _in_connections(child)
                continue
            if tag == "contact":
                variable = _text_content(_find(child, "variable") or child).strip()
                elements.append(Contact(variable=variable, negated=child.get("negated") == "true"))
            elif tag == "coil":
                variable = _text_content(_find(child, "variable") or child).strip()
                storage = child.get("storage", "normal")
                if storage not in ("normal", "set", "reset"):
                    report.warn(where, f"unknown coil storage {storage!r}, treating as normal")
                    storage = "normal"
                elements.append(Coil(variable=variable, storage_kind=storage))
            elif tag == "block":
                elements.append(EmbeddedBlock(_parse_block(child)))
            else:
                report.skip(where, f"skipped LD element <{tag}>")
                continue
            positions[local_id] = len(elements) - 1
            pending.append((child, len(elements) - 1))
        wiring = []
        for child, sink_index in pending:
            for ref in _in_connections(child):
                if ref in positions:
                    wiring.append((positions[ref], sink_index))
                elif ref in rails:
                    continue  # edges through power rails carry no topology
                else:
                    report.warn(where, f"connection to unknown element {ref!r}")
        networks.append(LdNetwork(label=label, elements=tuple(elements), wiring=tuple(wiring)))
    return LdBody(networks=tuple(networks))


def _parse_block(element: ET.Element) -> FbdBlock:
    input_ports = []
    output_ports = []
    inputs = _find(element, "inputVariables")
    if inputs is not None:
        for variable in _findall(inputs, "variable"):
            input_ports.append(variable.get("formalParameter", f"in{len(input_ports)}"))
    outputs = _find(element, "outputVariables")
    if outputs is not None:
        for variable in _findall(outputs, "variable"):
            output_ports.append(variable.get("formalParameter", f"out{len(output_ports)}"))
    return FbdBlock(
        type_name=element.get("typeName", "BLOCK"),
        instance_name=element.get("instanceName") or None,
        input_ports=tuple(input_ports),
        output_ports=tuple(output_ports),
    )


def _parse_fbd(element: ET.Element, context: str, report: ParseReport) -> FbdBody:
    networks = []
    for index, (label, children) in enumerate(_split_networks(element)):
        where = f"{context}/network {index}"
        blocks: list[FbdBlock] = []
        endpoints = []
        jumps = []
        nested_st = None
        port_names: dict[str, str] = {}  # localId -> connection name prefix
        endpoint_ids: dict[str, int] = {}
        block_elements: list[tuple[ET.Element, FbdBlock]] = []
        sink_elements: list[tuple[ET.Element, str]] = []
        for child in children:
            tag = _strip(child.tag)
            local_id = child.get("localId", "")
            if tag == "block":
                block = _parse_block(child)
                blocks.append(block)
                port_names[local_id] = block.instance_name or block.type_name
                block_elements.append((child, block))
            elif tag in ("inVariable", "outVariable", "inOutVariable"):
                raw = _text_content(_find(child, "expression") or child).strip()
                try:
                    endpoints.append(parse_expression(raw))
                except StSyntaxError as exc:
                    raise ParseError(f"{where}: endpoint expression: {exc}") from None
                endpoint_ids[local_id] = len(endpoints) - 1
                if tag != "inVariable":
                    sink_elements.append((child, f"endpoint.{len(endpoints) - 1}"))
            elif tag == "jump":
                if child.get("label"):
                    jumps.append(child.get("label"))
            elif tag == "addData":
                nested = _parse_add_data(child, where, report)
                if nested is not None:
                    nested_st = nested
            else:
                report.skip(where, f"skipped FBD element <{tag}>")

        def source_name(ref: str, formal: str | None) -> str | None:
            if ref in endpoint_ids:
                return f"endpoint.{endpoint_ids[ref]}"
            if ref in port_names:
                return f"{port_names[ref]}.{formal or 'OUT'}"
            return None

        connections = []
        for child, block in block_elements:
            inputs = _find(child, "inputVariables")
            if inputs is None:
                continue
            for variable in _findall(inputs, "variable"):
                formal = variable.get("formalParameter", "in")
                for point in _findall(variable, "connectionPointIn"):
                    for connection in _findall(point, "connection"):
                        src = source_name(
                            connection.get("refLocalId", ""),
                            connection.get("formalParameter"),
                        )
                        if src is None:
                            report.warn(where, "connection from unknown element")
                            continue
                        sink = f"{block.instance_name or block.type_name}.{formal}"
                        connections.append((src, sink))
        for child, sink in sink_elements:
            for point in _findall(child, "connectionPointIn"):
                for connection in _findall(point, "connection"):
                    src = source_name(
                        connection.get("refLocalId", ""), connection.get("formalParameter")
                    )
                    if src is None:
                        report.warn(where, "connection from unknown element")
                        continue
                    connections.append((src, sink))

        networks.append(
            FbdNetwork(
                label=label,
                blocks=tuple(blocks),
                endpoints=tuple(endpoints),
                connections=tuple(connections),
                jumps=tuple(jumps),
                nested_st=nested_st,
            )
        )
    return FbdBody(networks=tuple(networks))


def _parse_add_data(element: ET.Element, context: str, report: ParseReport) -> StBody | None:
    """The 'nested-st' extension carries an embedded ST implementation."""
    nested = None
    for data in _findall(element, "data"):
        if data.get("name") == "nested-st":
            st_element = _find(data, "ST")
            source = st_element if st_element is not None else data
            nested = _parse_st(source, context)
        else:
            report.skip(context, f"skipped vendor extension data {data.get('name')!r}")
    return nested
