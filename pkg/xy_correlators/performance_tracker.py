"""Per-stage timing and achieved-error bookkeeping for a run."""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class StageStats:
    """Timing and accuracy of one computation stage."""
    stage: str
    duration_ms: float = 0.0
    rows: int = 0
    est_error: float = 0.0
    converged: bool = True
    timestamp: float = field(default_factory=time.time)


class PerformanceTracker:
    """Collects StageStats over a whole CLI run."""

    def __init__(self):
        self.stages: Dict[str, StageStats] = {}
        self.session_start = time.time()

    def start_stage(self, stage: str) -> float:
        """
        Start timing a stage.

        Returns:
            Start time to hand back to record_stage()
        """
        logger.debug(f"Stage {stage} started")
        return time.time()

    def record_stage(self, stage: str, start_time: float, rows: int = 0,
                     est_error: Optional[float] = None, converged: bool = True) -> StageStats:
        """
        Record a finished stage.

        Args:
            stage: Stage identifier (e.g. "static", "kernel m=3")
            start_time: Value returned by start_stage()
            rows: Number of output rows the stage produced
            est_error: Worst error estimate reported by the numerics, if any
            converged: False when any kernel in the stage hit its cap
        """
        stats = StageStats(
            stage=stage,
            duration_ms=(time.time() - start_time) * 1000,
            rows=rows,
            est_error=0.0 if est_error is None else float(est_error),
            converged=converged,
        )
        self.stages[stage] = stats
        return stats

    @property
    def all_converged(self) -> bool:
        return all(stats.converged for stats in self.stages.values())

    def worst_error(self) -> float:
        errors = [stats.est_error for stats in self.stages.values() if not math.isnan(stats.est_error)]
        return max(errors) if errors else 0.0

    def get_session_summary(self) -> Dict[str, Any]:
        """Session-wide statistics."""
        stats: List[StageStats] = list(self.stages.values())
        summary = {
            'total_stages': len(stats),
            'total_rows': sum(s.rows for s in stats),
            'worst_est_error': self.worst_error(),
            'converged': self.all_converged,
            'session_duration_seconds': time.time() - self.session_start,
        }
        if stats:
            summary['slowest_stage'] = max(stats, key=lambda s: s.duration_ms).stage
            summary['total_stage_ms'] = sum(s.duration_ms for s in stats)
        return summary

