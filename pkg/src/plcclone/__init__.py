"""Clone detection and variability analysis for IEC 61131-3 projects.

Pipeline: parse PLCopen XML into a unified model, compare artifacts under a
configurable weighted metric, match pairs into an independent edge set, and
report the result as a family model or clone candidate list.  A mutation
framework generates ground-truth clone pairs to score the detector.
"""

from .compare import compare_inter, compare_intra, compare_pair
from .family import build_family_model, classify_clones, emit_report
from .metrics import builtin_metric, load_metric
from .plcopen import parse_project

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "build_family_model",
    "builtin_metric",
    "classify_clones",
    "compare_inter",
    "compare_intra",
    "compare_pair",
    "emit_report",
    "load_metric",
    "parse_project",
]
