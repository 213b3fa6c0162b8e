"""Per-episode navigation metrics and their multi-episode aggregation.

All inputs are SI (meters, newtons); the formatted report converts path
length to centimeters and rates to percentages, matching the units the
evaluation tables are quoted in.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

SAFETY_FORCE_LIMIT = 2.0  # N; vessel-wall damage threshold


class MetricsError(ValueError):
    """Raised on empty pools or inconsistent episode records."""


@dataclass(frozen=True)
class TrajectoryRecord:
    """One logged episode: per-step arrays plus the episode outcome.

    contact_forces holds the net (component-wise summed) world contact
    force per control step; rewards and distances are aligned with tips.
    """

    tips: np.ndarray
    actions: np.ndarray
    contact_forces: np.ndarray
    rewards: np.ndarray
    distances: np.ndarray
    success: bool
    target_name: str
    seed: int = 0

    def __post_init__(self):
        for name, width in (
            ("tips", 3), ("actions", 2), ("contact_forces", 3),
            ("rewards", None), ("distances", None),
        ):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if width is not None:
                arr = arr.reshape(-1, width)
            else:
                arr = arr.reshape(-1)
            object.__setattr__(self, name, arr)
        n = self.tips.shape[0]
        if n == 0:
            raise MetricsError("episode record has no steps")
        for name in ("actions", "contact_forces", "rewards", "distances"):
            if getattr(self, name).shape[0] != n:
                raise MetricsError(
                    f"{name} has {getattr(self, name).shape[0]} steps, tips has {n}"
                )

    def __len__(self) -> int:
        return self.tips.shape[0]


def force_magnitude(f) -> float | np.ndarray:
    """Euclidean norm of a force vector; rows of a 2-D input map to a
    vector of magnitudes."""
    f = np.asarray(f, dtype=np.float64)
    out = np.linalg.norm(f, axis=-1)
    return float(out) if out.ndim == 0 else out


def path_length(tips) -> float:
    """Total arc length of the tip track: sum of step-to-step distances."""
    tips = np.asarray(tips, dtype=np.float64).reshape(-1, 3)
    if tips.shape[0] == 0:
        raise MetricsError("path needs at least one point")
    return float(np.linalg.norm(np.diff(tips, axis=0), axis=1).sum())


def safety(force_magnitudes, threshold: float = SAFETY_FORCE_LIMIT) -> float:
    """Fraction of steps below the damage threshold (>= threshold counts
    against)."""
    f = np.asarray(force_magnitudes, dtype=np.float64).reshape(-1)
    if f.size == 0:
        raise MetricsError("safety needs at least one step")
    return float(1.0 - np.mean(f >= threshold))


def spl(successes, path_lengths, optimal: float | None = None) -> float:
    """Success weighted by normalized inverse path length.

    optimal defaults to the shortest successful path in the pool; pass an
    external reference (centerline length) to normalize against instead.
    A pool with no successes scores 0 by convention.
    """
    s = np.asarray(successes, dtype=bool).reshape(-1)
    p = np.asarray(path_lengths, dtype=np.float64).reshape(-1)
    if s.size == 0 or s.size != p.size:
        raise MetricsError("successes and path_lengths must be equal-length, non-empty")
    if optimal is None:
        if not s.any():
            log.warning("SPL pool has no successful episode; returning 0")
            return 0.0
        optimal = float(p[s].min())
    if not optimal > 0.0:
        raise MetricsError(f"optimal path length must be positive, got {optimal}")
    return float(np.mean(s * (optimal / np.maximum(p, optimal))))


@dataclass(frozen=True)
class MetricsReport:
    """Per-episode metric arrays plus the pool-level SPL."""

    target_name: str
    force: np.ndarray          # N, per-step mean per episode
    path_length: np.ndarray    # m
    episode_length: np.ndarray
    safety: np.ndarray         # fraction in [0,1]
    success: np.ndarray        # bool
    spl: float

    def __post_init__(self):
        if not (0.0 <= self.spl <= 1.0):
            raise MetricsError(f"spl out of range: {self.spl}")
        if np.any(self.safety < 0.0) or np.any(self.safety > 1.0):
            raise MetricsError("safety out of range")

    def rows(self):
        """(label, mean, std) rows in report units: cm and percentages."""
        def ms(x):
            x = np.asarray(x, dtype=np.float64)
            return float(x.mean()), float(x.std())

        out = [("Force (N)", *ms(self.force))]
        out.append(("Path Length (cm)", *ms(self.path_length * 100.0)))
        out.append(("Episode Length (steps)", *ms(self.episode_length)))
        out.append(("Safety (%)", *ms(self.safety * 100.0)))
        out.append(("Success (%)", *ms(self.success.astype(np.float64) * 100.0)))
        out.append(("SPL (%)", self.spl * 100.0, 0.0))
        return out


def summarize_runs(
    records, delta: float = 0.004, optimal: float | None = None
) -> MetricsReport:
    """Aggregate a pool of same-target episodes into a MetricsReport."""
    records = list(records)
    if not records:
        raise MetricsError("empty episode pool")
    target = records[0].target_name
    for r in records:
        if r.target_name != target:
            raise MetricsError(
                f"mixed targets in pool: {r.target_name!r} vs {target!r}"
            )
        if r.success and float(r.distances[-1]) > delta:
            raise MetricsError(
                f"success flag with final distance {float(r.distances[-1]):.4g} > {delta}"
            )
    forces = np.array(
        [float(np.mean(force_magnitude(r.contact_forces))) for r in records]
    )
    paths = np.array([path_length(r.tips) for r in records])
    lengths = np.array([len(r) for r in records])
    safeties = np.array([safety(force_magnitude(r.contact_forces)) for r in records])
    successes = np.array([r.success for r in records], dtype=bool)
    return MetricsReport(
        target_name=target,
        force=forces,
        path_length=paths,
        episode_length=lengths,
        safety=safeties,
        success=successes,
        spl=spl(successes, paths, optimal=optimal),
    )


def format_report(report: MetricsReport) -> str:
    """Aligned mean +- std table, one metric per row."""
    rows = report.rows()
    width = max(len(label) for label, _, _ in rows)
    lines = [f"target: {report.target_name}  (n={report.success.size})"]
    for label, mean, std in rows:
        lines.append(f"{label:<{width}}  {mean:10.3f} +- {std:.3f}")
    return "\n".join(lines)
