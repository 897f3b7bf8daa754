"""Parameter sweeps: grid expansion, concurrent evaluation, CSV emission.

Grid points are independent, so they may run on a process pool; results
are put back in grid order before anything is written, which makes the CSV
byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Sequence

from lzgate.config import RunConfig, sweep_points
from lzgate.errors import ConfigError, LzGateError
from lzgate.runners import MODE_COLUMNS, run_mode

WORKERS_ENV = "LZGATE_WORKERS"


@dataclass(frozen=True)
class SweepResult:
    """Swept values and mode scalars, one row per grid point, in grid order."""

    mode: str
    parameters: tuple[str, ...]
    columns: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...]

    def error_count(self) -> int:
        return sum(1 for r in self.rows if r[-1])

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "parameters": list(self.parameters),
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
        }


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def _evaluate(point_data: dict) -> tuple[list[Any], str]:
    """Scalars of one grid point, or NaN cells and an error string on failure."""
    cfg = RunConfig(point_data)
    columns = MODE_COLUMNS[cfg.mode]
    try:
        result = run_mode(cfg)
        if len(result.rows) != 1:
            raise ConfigError(f"a sweep point must produce one row, got {len(result.rows)}; make the swept section single-valued")
        return [result.rows[0][c] for c in columns], ""
    except LzGateError as exc:
        return [math.nan] * len(columns), f"{type(exc).__name__}: {exc}"


def sweep(cfg: RunConfig, workers: int | None = None) -> SweepResult:
    """Run ``cfg.sweep_mode`` at every grid point of ``cfg``.

    Every point is validated before anything runs, so a bad grid fails as a
    whole with :class:`ConfigError`; failures while computing a point are
    recorded in that row's ``error`` cell instead.
    """
    if cfg.mode != "sweep":
        raise ConfigError(f"sweep needs a sweep-mode config, got mode {cfg.mode!r}")
    paths, grid = sweep_points(cfg.data["sweep"])
    points = []
    for values in grid:
        try:
            points.append(cfg.point(paths, values).data)
        except ConfigError as exc:
            raise ConfigError(f"sweep point {dict(zip(paths, values))}: {exc}") from exc
    workers = int(cfg.data.get("workers") or 1) if workers is None else workers
    if workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers!r}")
    if workers == 1 or len(points) == 1:
        outcomes = [_evaluate(d) for d in points]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            # map preserves input order regardless of completion order
            outcomes = list(pool.map(_evaluate, points))
    mode = cfg.sweep_mode
    columns = tuple(paths) + MODE_COLUMNS[mode] + ("error",)
    rows = tuple(tuple(values) + tuple(cells) + (err,) for values, (cells, err) in zip(grid, outcomes))
    return SweepResult(mode, tuple(paths), columns, rows)


def format_cell(value: Any) -> str:
    """CSV text of one cell: floats with 17 significant digits, booleans lower-case."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, int):
        return str(value)
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return json.dumps(value, separators=(",", ":"))


def write_csv(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """RFC-4180 CSV with ``\\n`` line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()
