"""Stage-level decode timing over containers and strategies."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from pathlib import Path

from .codec import EncodedImage, StageTimings, decode_frame
from .perturb import RpSeries

CSV_COLUMNS = ("file", "strategy", "stage", "avg_ms", "min_ms", "max_ms", "reduction_pct")
SUMMARY_FILE = "summary"


@dataclass
class StageStats:
    avg_ms: float
    min_ms: float
    max_ms: float

    @classmethod
    def of(cls, values_s):
        ms = [1000.0 * v for v in values_s]
        return cls(statistics.fmean(ms), min(ms), max(ms))


def time_decodes(enc: EncodedImage, strategy, repeats: int, warmup: int = 1,
                 rp: RpSeries | None = None) -> list[StageTimings]:
    """Decode ``repeats`` times after ``warmup`` discarded runs."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    for _ in range(warmup):
        decode_frame(enc, strategy, rp)
    return [decode_frame(enc, strategy, rp).timings for _ in range(repeats)]


def run_bench(containers, strategies, repeats: int, warmup: int = 1):
    """Time every (container, strategy) pair.

    ``containers`` is a list of (name, EncodedImage); ``strategies`` a list of
    (label, strategy). Returns CSV-ready row dicts and a per-strategy summary
    of wall times.
    """
    if not containers:
        raise ValueError("no containers to benchmark")
    rows = []
    walls: dict = {label: [] for label, _ in strategies}
    for name, enc in containers:
        for label, strategy in strategies:
            runs = time_decodes(enc, strategy, repeats, warmup)
            for stage in StageTimings.STAGES:
                st = StageStats.of([getattr(t, stage) for t in runs])
                rows.append({"file": name, "strategy": label, "stage": stage,
                             "avg_ms": st.avg_ms, "min_ms": st.min_ms, "max_ms": st.max_ms,
                             "reduction_pct": ""})
            walls[label].extend(t.wall for t in runs)
    summary = {label: StageStats.of(v) for label, v in walls.items()}
    base = summary.get("standard")
    for label, st in summary.items():
        red = ""
        if base is not None and base.avg_ms > 0:
            red = 100.0 * (base.avg_ms - st.avg_ms) / base.avg_ms
        rows.append({"file": SUMMARY_FILE, "strategy": label, "stage": "wall",
                     "avg_ms": st.avg_ms, "min_ms": st.min_ms, "max_ms": st.max_ms,
                     "reduction_pct": red})
    return rows, summary


def load_containers(directory) -> list:
    paths = sorted(p for p in Path(directory).iterdir() if p.is_file() and p.suffix == ".hvs")
    return [(p.name, EncodedImage.from_bytes(p.read_bytes())) for p in paths]
