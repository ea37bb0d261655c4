"""Fixture gallery, identity suites and the command-line runner."""
from .fixtures import ALL_SUITES, CHART_SUITES, GEOM_PROPERTIES, WARPED_SUITES, Fixture, builtin_fixtures, fixture_from_file, get_fixture
from .suites import ANCHORS, SUITES, Geometry, outcome_matches, prepare, property_statuses, run_suite

__all__ = [
    "ALL_SUITES",
    "CHART_SUITES",
    "WARPED_SUITES",
    "GEOM_PROPERTIES",
    "ANCHORS",
    "SUITES",
    "Fixture",
    "Geometry",
    "builtin_fixtures",
    "fixture_from_file",
    "get_fixture",
    "outcome_matches",
    "property_statuses",
    "prepare",
    "run_suite",
]
