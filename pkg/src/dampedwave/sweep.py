"""Run a parameter grid in parallel and roll the family up.

Each run writes into its own sub-directory; ``family.json`` is written once,
after every worker has finished.
"""

import logging
from functools import partial
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel

from src.utils.async_utils import run_in_threads
from src.utils.logging import run_tag
from src.utils.pretty_printing import to_json
from src.utils.trees import tree_filter

from .config import FORMAT_VERSION, RunConfig, SweepConfig
from .errors import DampedWaveError
from .runner import RunSummary, execute_run
from .verifier import FamilyReport, family_rollup


logger = logging.getLogger(__name__)


class SweepRunRecord(BaseModel):
    """Status of one grid point."""

    run_id: str
    point: dict[str, Any]
    status: Literal["completed", "failed"]
    kind: str | None = None
    exit_code: int | None = None
    error: str | None = None


class SweepSummary(BaseModel):
    """Content of ``family.json``."""

    format_version: str = FORMAT_VERSION
    config: dict[str, Any]
    runs: list[SweepRunRecord]
    family: FamilyReport

    @property
    def all_completed(self) -> bool:
        """True when no run raised; blow-ups count as completed."""
        return all(_run.status == "completed" for _run in self.runs)


def _run_point(
    run_id: str,
    point: dict[str, Any],
    cfg: RunConfig,
    out_dir: Path,
    threads: int | None,
) -> tuple[SweepRunRecord, RunSummary | None]:
    token = run_tag.set(run_id)
    try:
        summary = execute_run(cfg, out_dir / run_id, run_id=run_id, threads=threads)
    except (DampedWaveError, OSError) as exc:
        logger.error("run failed: %s", exc)
        return (
            SweepRunRecord(run_id=run_id, point=point, status="failed", error=str(exc)),
            None,
        )
    finally:
        run_tag.reset(token)

    record = SweepRunRecord(
        run_id=run_id,
        point=point,
        status="completed",
        kind=summary.outcome.kind,
        exit_code=summary.exit_code,
    )
    return record, summary


def run_sweep(
    cfg: SweepConfig, out_dir: Path, threads: int | None = None
) -> SweepSummary:
    """Execute every grid point of ``cfg`` and write ``family.json``.

    Parameters
    ----------
    cfg : SweepConfig
        Base run, axes and parallelism.
    out_dir : pathlib.Path
        Parent directory; run ``run_007`` writes into ``out_dir / "run_007"``.
    threads : int, optional
        ``scipy.fft`` workers per run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = cfg.expand()
    logger.info(
        "sweep of %d runs over %s with parallelism %d",
        len(points),
        [_axis.path for _axis in cfg.axes],
        cfg.parallelism,
    )

    results = run_in_threads(
        [
            partial(_run_point, run_id, point, run_cfg, out_dir, threads)
            for run_id, point, run_cfg in points
        ],
        max_workers=cfg.parallelism,
        description="Sweep",
    )

    records = [_record for _record, _ in results]
    summaries = [_summary for _, _summary in results if _summary is not None]
    sweep_summary = SweepSummary(
        config=tree_filter(cfg.model_dump(mode="json", by_alias=True)),
        runs=records,
        family=family_rollup([_s.family for _s in summaries]),
    )
    (out_dir / "family.json").write_text(to_json(sweep_summary) + "\n")

    failed = [_r.run_id for _r in records if _r.status == "failed"]
    if failed:
        logger.warning("%d of %d runs failed: %s", len(failed), len(records), failed)
    return sweep_summary
