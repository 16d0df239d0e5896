"""Synthetic event-log generation from a fitted (or hand-built) count model.

Counts are drawn from the discretized model by inverse transform: with
u uniform on (0, 1), the count is max(0, ceil(Q(u))), which reproduces the
same mass function discrete_pmf() assigns to each integer. Timestamps are
fabricated so the round trip through ingest.window_counts returns exactly
the generated counts: every rediscovery lands inside the requested window
and every discovery precedes both the window end and its own rediscoveries.
"""

from __future__ import annotations

import numpy as np

from .distfit import FittedModel
from .errors import ConfigError
from .ingest import DISCOVERY, REDISCOVERY, DefectEvent, EventLog, Window, write_events

__all__ = ["sample_counts", "synth_events", "synth_csv"]


def sample_counts(model: FittedModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n integer counts from the discretized model."""
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n!r}")
    if n == 0:
        return np.empty(0, dtype=int)
    u = rng.uniform(size=n) * model.cdf_at_inf()
    q = np.atleast_1d(np.asarray(model.quantile(np.clip(u, 1e-12, None))))
    return np.maximum(np.ceil(q - 1e-12), 0.0).astype(int)


def synth_events(
    model: FittedModel,
    n_defects: int,
    window: Window,
    seed: int,
    release_id: str = "synthetic",
) -> EventLog:
    """Fabricate an event log whose windowed counts follow the model.

    Each defect gets one discovery and count-many rediscoveries. The
    rediscoveries are uniform over the window; the discovery is uniform
    between zero and the earliest rediscovery (or the window end for
    defects that are never rediscovered).
    """
    if not release_id:
        raise ConfigError("release_id must be non-empty")
    rng = np.random.default_rng(seed)
    counts = sample_counts(model, n_defects, rng)
    width = len(str(max(n_defects, 1)))
    events: list[DefectEvent] = []
    for i, count in enumerate(counts):
        defect_id = f"d{i + 1:0{width}d}"
        times = np.sort(rng.uniform(window.s, window.t, size=int(count)))
        first = float(times[0]) if count else window.t
        discovery = float(rng.uniform(0.0, first))
        events.append(DefectEvent(defect_id, release_id, DISCOVERY, discovery))
        events.extend(
            DefectEvent(defect_id, release_id, REDISCOVERY, float(t)) for t in times
        )
    events.sort(key=lambda e: (e.release_id, e.defect_id, e.time, e.kind != DISCOVERY))
    releases = frozenset(e.release_id for e in events)
    return EventLog(events=tuple(events), releases=releases)


def synth_csv(
    model: FittedModel,
    n_defects: int,
    window: Window,
    seed: int,
    release_id: str = "synthetic",
) -> str:
    """CSV text for a synthetic log; header-only when n_defects is zero."""
    return write_events(synth_events(model, n_defects, window, seed, release_id))
