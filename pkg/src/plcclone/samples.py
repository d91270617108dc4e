"""Access to the bundled sample projects."""

from __future__ import annotations

from importlib import resources

from .model import Project
from .plcopen import ParseReport, parse_project

SAMPLE_NAMES = (
    "example_basic",
    "example_basic_ws",
    "conveyor_sfc",
    "logic_graphical",
    "pump_station",
)

#: the three canonical sample projects (the _ws file is a formatting variant)
CORE_SAMPLES = ("example_basic", "conveyor_sfc", "logic_graphical")


def sample_bytes(name: str) -> bytes:
    if name not in SAMPLE_NAMES:
        raise KeyError(f"unknown sample {name!r}; available: {SAMPLE_NAMES}")
    return resources.files("plcclone.data").joinpath(f"{name}.xml").read_bytes()


def load_sample(name: str) -> tuple[Project, ParseReport]:
    return parse_project(sample_bytes(name))
