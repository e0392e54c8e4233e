"""Navigation scoring: error, success, oracle success and path-length weighting.

All distances are geodesic (along the graph), matching the discrete world the
episodes run in. The default success threshold is 3 meters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .episode import EpisodeTrace
from .errors import ContractError, EvaluationError
from .graph import NavGraph

DEFAULT_SUCCESS_THRESHOLD_M = 3.0


@dataclass(frozen=True)
class EvalResult:
    ne: float
    success: bool
    oracle_success: bool
    spl_term: float
    shortest: float
    traveled: float


@dataclass(frozen=True)
class AggregateReport:
    n: int
    mean_ne: float
    sr: float
    osr: float
    spl: float

    def to_dict(self) -> dict:
        return {"n": self.n, "mean_ne": self.mean_ne, "sr": self.sr, "osr": self.osr, "spl": self.spl}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def evaluate(
    trace: EpisodeTrace,
    graph: NavGraph,
    threshold: float = DEFAULT_SUCCESS_THRESHOLD_M,
) -> EvalResult:
    """Score one finished episode against its goal."""
    start = trace.spec["start"]
    goal = trace.spec["goal"]
    for node in trace.path:
        graph.node(node)
    graph.node(trace.final)

    shortest, _ = graph.geodesic(start, goal)
    if math.isinf(shortest):
        raise EvaluationError(f"goal {goal!r} is unreachable from start {start!r}")

    ne, _ = graph.geodesic(trace.final, goal)
    success = ne <= threshold
    oracle_success = any(graph.geodesic(node, goal)[0] <= threshold for node in trace.path)
    try:
        traveled = graph.path_length(trace.path)
    except ContractError as exc:
        raise EvaluationError(f"trace path is not a connected walk: {exc}") from exc

    if shortest == 0.0:
        spl_term = 1.0 if success else 0.0
    else:
        spl_term = (shortest / max(shortest, traveled)) if success else 0.0
    return EvalResult(
        ne=ne,
        success=success,
        oracle_success=oracle_success,
        spl_term=spl_term,
        shortest=shortest,
        traveled=traveled,
    )


def aggregate(results: Sequence[EvalResult] | Iterable[EvalResult]) -> AggregateReport:
    """Arithmetic means over a split; success rates as fractions in [0, 1]."""
    items = list(results)
    if not items:
        raise ContractError("aggregate requires at least one result")
    n = len(items)
    return AggregateReport(
        n=n,
        mean_ne=sum(r.ne for r in items) / n,
        sr=sum(1.0 for r in items if r.success) / n,
        osr=sum(1.0 for r in items if r.oracle_success) / n,
        spl=sum(r.spl_term for r in items) / n,
    )


def report_table(report: AggregateReport, label: str = "split") -> str:
    """Aligned text table in NE / OSR / SR / SPL column order."""
    headers = ["", "NE", "OSR", "SR", "SPL"]
    row = [
        label,
        f"{report.mean_ne:.2f}",
        f"{report.osr * 100:.1f}",
        f"{report.sr * 100:.1f}",
        f"{report.spl * 100:.1f}",
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()
    line = "  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()
    return head + "\n" + line
