"""JSON serialization of model values.

Mutants are written in this format (the toolkit deliberately does not
write PLCopen XML back out).  The encoding is a direct tree of
``{"_": "ClassName", ...fields}`` objects and round-trips exactly.
"""

from __future__ import annotations

import dataclasses
import json

from . import model

_CLASSES = {
    cls.__name__: cls
    for cls in (
        model.Project,
        model.Pou,
        model.VariableDecl,
        model.NamedAction,
        model.StBody,
        model.SfcBody,
        model.LdBody,
        model.FbdBody,
        model.Statement,
        model.CaseBranch,
        model.Literal,
        model.VarRef,
        model.UnaryOp,
        model.BinaryOp,
        model.FuncCall,
        model.Step,
        model.Transition,
        model.ActionAssociation,
        model.Contact,
        model.Coil,
        model.EmbeddedBlock,
        model.FbdBlock,
        model.LdNetwork,
        model.FbdNetwork,
    )
}


def _encode(value):
    if dataclasses.is_dataclass(value):
        encoded = {"_": type(value).__name__}
        for field in dataclasses.fields(value):
            encoded[field.name] = _encode(getattr(value, field.name))
        return encoded
    if isinstance(value, tuple):
        return [_encode(item) for item in value]
    return value


def _decode(value):
    if isinstance(value, dict):
        cls = _CLASSES[value["_"]]
        kwargs = {key: _decode(item) for key, item in value.items() if key != "_"}
        return cls(**kwargs)
    if isinstance(value, list):
        return tuple(_decode(item) for item in value)
    return value


def dump_project(project: model.Project) -> bytes:
    return (json.dumps(_encode(project), indent=2) + "\n").encode("utf-8")


def load_project(data: bytes | str) -> model.Project:
    project = _decode(json.loads(data))
    if not isinstance(project, model.Project):
        raise ValueError("document does not contain a project")
    return project
