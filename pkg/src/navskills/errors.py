"""Exception hierarchy shared by all navskills modules."""

from __future__ import annotations


class NavError(Exception):
    """Base class for every error raised by this package."""


class GraphParseError(NavError):
    """A graph file is syntactically malformed (names the offending record/field)."""


class GraphValidationError(NavError):
    """A graph violates structural invariants; carries every violation found."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class UnknownNodeError(NavError, KeyError):
    """Lookup of a viewpoint id that does not exist in the graph."""

    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"unknown viewpoint {node_id!r}")


class ContractError(NavError):
    """A caller violated an operation precondition."""


class StateError(NavError):
    """An episode operation was called in the wrong lifecycle phase."""


class EvaluationError(NavError):
    """A trace cannot be scored (e.g. the task's goal is unreachable)."""


class GenerationError(NavError):
    """Trajectory/instruction synthesis could not produce the requested data."""


class ConfigError(NavError):
    """Invalid run configuration or agent registry state."""


class TranscriptError(NavError):
    """A replayed transcript is missing the requested request."""
