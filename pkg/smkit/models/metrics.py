from dataclasses import dataclass, field

import numpy as np


@dataclass
class MetricSummary:
    mean: float
    ci95: float
    count: int


def _component_table(values: np.ndarray) -> list[list[float | None]]:
    """(L, K) array as nested lists, NaN as None"""
    return [[float(v) if np.isfinite(v) else None for v in row] for row in np.asarray(values)]


@dataclass
class MetricReport:
    """
    Per-component metrics and their aggregates.

    per_component maps a metric name to an (L, K) array; NaN marks components
    excluded from evaluation (all-zero ground truth). entries holds the same
    mapping for every pair of a collection, keyed by its label. groups maps
    a group key to per-metric summaries.
    """

    per_component: dict[str, np.ndarray] = field(default_factory=dict)
    aggregates: dict[str, MetricSummary] = field(default_factory=dict)
    groups: dict[str, dict[str, MetricSummary]] = field(default_factory=dict)
    entries: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def summary(s: MetricSummary) -> dict:
            return {"mean": s.mean, "ci95": s.ci95, "count": s.count}

        return {
            "aggregates": {k: summary(v) for k, v in self.aggregates.items()},
            "groups": {
                g: {k: summary(v) for k, v in metrics.items()}
                for g, metrics in self.groups.items()
            },
            "per_component": {
                k: _component_table(v) for k, v in self.per_component.items()
            },
            "entries": {
                label: {k: _component_table(v) for k, v in values.items()}
                for label, values in self.entries.items()
            },
        }
