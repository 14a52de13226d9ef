"""Lie groupoid constructions and a property-test harness for their axioms."""

from .constructions import (
    BundleOfGroups,
    FramePairGroupoid,
    PairGroupoid,
    QuotientGroupoid,
    TransformationGroupoid,
    antipodal_quotient,
    frame_gauge_quotient,
)
from .core import AXIOMS, Groupoid, axiom_suite, orbit, representation_check
from .pathclass import PathClassArrow, PathClassGroupoid, leafwise_moves, pathclass_transformation_groupoid

__all__ = [
    "AXIOMS",
    "BundleOfGroups",
    "FramePairGroupoid",
    "Groupoid",
    "PairGroupoid",
    "PathClassArrow",
    "PathClassGroupoid",
    "QuotientGroupoid",
    "TransformationGroupoid",
    "antipodal_quotient",
    "axiom_suite",
    "frame_gauge_quotient",
    "leafwise_moves",
    "orbit",
    "pathclass_transformation_groupoid",
    "representation_check",
]
