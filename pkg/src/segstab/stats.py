"""Rating-study analysis: rank correlation, worker screening, aggregation.

Workers rate clips on a 1-5 scale; qualification clips additionally carry
known accuracy/consistency ranks. Workers whose ratings track accuracy
instead of consistency are screened out, ratings are aggregated per video,
and the mean ratings are rank-correlated against the automatic measures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import rankdata
from scipy.stats import t as t_dist

MIN_QUALIFICATION_RATINGS = 3
DEFAULT_AGREEMENT_CUTOFF = 1.0


@dataclass(frozen=True)
class Rating:
    video_id: str
    worker_id: str
    rating: float
    accuracy_rank: Optional[int] = None
    consistency_rank: Optional[int] = None

    def __post_init__(self):
        if not 1.0 <= self.rating <= 5.0:
            raise ValueError(f"rating {self.rating} outside [1, 5]")
        if (self.accuracy_rank is None) != (self.consistency_rank is None):
            raise ValueError("qualification rows need both ranks")
        for r in (self.accuracy_rank, self.consistency_rank):
            if r is not None and not 1 <= r <= 3:
                raise ValueError(f"rank {r} outside [1, 3]")

    @property
    def is_qualification(self) -> bool:
        return self.accuracy_rank is not None


@dataclass(frozen=True)
class RatingsTable:
    rows: tuple[Rating, ...]

    def qualification_rows(self) -> list[Rating]:
        return [r for r in self.rows if r.is_qualification]

    def study_rows(self) -> list[Rating]:
        return [r for r in self.rows if not r.is_qualification]

    def restrict_workers(self, workers: set[str]) -> "RatingsTable":
        return RatingsTable(tuple(r for r in self.rows if r.worker_id in workers))


def spearman(x, y) -> tuple[float, float]:
    """Spearman rank correlation with average ranks for ties.

    Returns (rho, two-sided p-value); the p-value uses the Student-t
    approximation ``t = rho * sqrt((n-2) / (1-rho^2))`` with n-2 degrees of
    freedom. Raises on constant input, where the correlation is undefined.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("correlation undefined for constant input")
    rx = rankdata(x)
    ry = rankdata(y)
    rho = float(np.corrcoef(rx, ry)[0, 1])
    rho = max(-1.0, min(1.0, rho))
    # Rank correlations are rationals with gaps far above float noise; snap
    # the perfectly monotone cases to exactly +/-1.
    if abs(abs(rho) - 1.0) < 1e-12:
        rho = math.copysign(1.0, rho)
    if 1.0 - rho * rho < 1e-15:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(t_dist.sf(abs(t), n - 2))
    return rho, p


def filter_workers(table: RatingsTable, min_ratings: int = MIN_QUALIFICATION_RATINGS) -> set[str]:
    """Workers whose qualification ratings track consistency, not accuracy.

    A worker is kept when the Spearman correlation of their ratings with the
    consistency ranks is at least the correlation with the accuracy ranks
    (ties keep). Workers with fewer than ``min_ratings`` qualification
    ratings, or with undefined correlations (e.g. constant ratings), are
    rejected.
    """
    by_worker: dict[str, list[Rating]] = {}
    for row in table.qualification_rows():
        by_worker.setdefault(row.worker_id, []).append(row)
    kept = set()
    for worker, rows in by_worker.items():
        if len(rows) < min_ratings:
            continue
        ratings = [r.rating for r in rows]
        try:
            s_cons, _ = spearman(ratings, [r.consistency_rank for r in rows])
            s_acc, _ = spearman(ratings, [r.accuracy_rank for r in rows])
        except ValueError:
            continue
        if s_cons >= s_acc:
            kept.add(worker)
    return kept


@dataclass(frozen=True)
class VideoAggregate:
    mean_rating: float
    rating_std: float
    num_ratings: int


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    num_videos: int


@dataclass(frozen=True)
class StudyReport:
    per_video: dict[str, VideoAggregate]
    unfiltered: dict[str, CorrelationResult]
    filtered: dict[str, CorrelationResult]
    excluded: tuple[str, ...]
    agreement_cutoff: float = field(default=DEFAULT_AGREEMENT_CUTOFF)

    def as_dict(self) -> dict:
        return {
            "agreement_cutoff": self.agreement_cutoff,
            "per_video": {
                v: {"mean_rating": a.mean_rating, "rating_std": a.rating_std, "num_ratings": a.num_ratings}
                for v, a in self.per_video.items()
            },
            "unfiltered": {
                m: {"rho": c.rho, "p_value": c.p_value, "num_videos": c.num_videos}
                for m, c in self.unfiltered.items()
            },
            "filtered": {
                m: {"rho": c.rho, "p_value": c.p_value, "num_videos": c.num_videos}
                for m, c in self.filtered.items()
            },
            "excluded": list(self.excluded),
        }


def _measure_scale(values: np.ndarray) -> np.ndarray:
    # Plots and correlations use the log scale; rank correlation is
    # invariant to it, so fall back to raw values when any are <= 0.
    if np.all(values > 0):
        return np.log(values)
    return values


def aggregate_and_correlate(
    table: RatingsTable,
    measures: dict[str, dict[str, float]],
    agreement_cutoff: float = DEFAULT_AGREEMENT_CUTOFF,
) -> StudyReport:
    """Aggregate ratings per video and rank-correlate against the measures.

    ``measures`` maps video id -> measure name -> value (an inconsistency
    scale: lower is better). Reported rho is oriented so that workers
    agreeing with the measure yield positive values. Videos whose rating
    standard deviation exceeds ``agreement_cutoff`` are excluded from the
    filtered correlations; both filtered and unfiltered results are
    reported.
    """
    by_video: dict[str, list[float]] = {}
    for row in table.rows:
        if row.video_id in measures:
            by_video.setdefault(row.video_id, []).append(row.rating)
    missing = sorted(set(measures) - set(by_video))
    if missing:
        raise ValueError(f"videos without any qualified rating: {missing}")

    per_video = {}
    for vid, vals in by_video.items():
        arr = np.asarray(vals, dtype=np.float64)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        per_video[vid] = VideoAggregate(float(arr.mean()), std, len(arr))

    measure_names = sorted({name for per in measures.values() for name in per})

    def correlate(videos: list[str]) -> dict[str, CorrelationResult]:
        out = {}
        means = np.asarray([per_video[v].mean_rating for v in videos])
        for name in measure_names:
            vals = np.asarray([measures[v][name] for v in videos], dtype=np.float64)
            rho, p = spearman(means, -_measure_scale(vals))
            out[name] = CorrelationResult(rho, p, len(videos))
        return out

    videos = sorted(per_video)
    unfiltered = correlate(videos)
    kept = [v for v in videos if per_video[v].rating_std <= agreement_cutoff]
    excluded = tuple(v for v in videos if v not in set(kept))
    if not kept:
        raise ValueError("agreement cutoff excluded every video")
    filtered = correlate(kept) if excluded else dict(unfiltered)
    return StudyReport(
        per_video=per_video,
        unfiltered=unfiltered,
        filtered=filtered,
        excluded=excluded,
        agreement_cutoff=agreement_cutoff,
    )
