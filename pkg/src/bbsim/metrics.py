"""Evaluation metrics: waiting time, bounded slowdown, summaries, normalization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, TextIO

SLOWDOWN_BOUND_S = 600  # jobs shorter than 10 minutes are bounded
DEFAULT_TAIL_K = 3000

# letter-value quantile levels (median, fourths, eighths, ... sixty-fourths)
LETTER_VALUE_LEVELS = tuple(
    sorted(
        {1 / 2}
        | {1 / 2**k for k in range(2, 7)}
        | {1 - 1 / 2**k for k in range(2, 7)}
    )
)

RECORDS_HEADER = "# bbsim-records v1"
RECORD_COLUMNS = ("job_id", "submit", "start", "finish", "n_procs", "bb_total", "killed", "policy")


@dataclass(frozen=True)
class JobRecord:
    job_id: int
    submit: int
    start: int
    finish: float
    n_procs: int
    bb_total: int
    killed: bool
    policy: str


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    ci95: float
    quantiles: tuple[tuple[float, float], ...]  # (level, value), levels ascending
    tail: tuple[float, ...]  # top-k values, descending


def waiting_time(rec: JobRecord) -> float:
    return rec.start - rec.submit


def bounded_slowdown(rec: JobRecord, bound: float = SLOWDOWN_BOUND_S) -> float:
    """max(1, (wait + run) / max(run, bound)); killed jobs ran to their walltime."""
    wait = waiting_time(rec)
    run = rec.finish - rec.start
    return max(1.0, (wait + run) / max(run, bound))


def nearest_rank_quantile(sorted_values: list[float], level: float) -> float:
    n = len(sorted_values)
    idx = max(1, math.ceil(level * n))
    return sorted_values[idx - 1]


def summarize(
    records: Iterable[JobRecord],
    metric: Callable[[JobRecord], float],
    tail_k: int = DEFAULT_TAIL_K,
) -> Summary:
    values = [float(metric(r)) for r in records]
    if not values:
        raise ValueError("no records to summarize")
    n = len(values)
    mean = sum(values) / n
    if n > 1:
        var = sum((v - mean) ** 2 for v in values) / (n - 1)
        ci95 = 1.96 * math.sqrt(var) / math.sqrt(n)
    else:
        ci95 = 0.0
    ordered = sorted(values)
    quantiles = tuple(
        (level, nearest_rank_quantile(ordered, level)) for level in LETTER_VALUE_LEVELS
    )
    tail = tuple(sorted(values, reverse=True)[:tail_k])
    return Summary(count=n, mean=mean, ci95=ci95, quantiles=quantiles, tail=tail)


def normalize_by_reference(
    part_means: dict[tuple[str, int], float], reference: str
) -> dict[tuple[str, int], float]:
    """Divide each (policy, part) mean by the reference policy's mean of that part."""
    parts = {part for _, part in part_means}
    missing = [p for p in sorted(parts) if (reference, p) not in part_means]
    if missing:
        raise ValueError(f"reference policy {reference!r} missing for parts {missing}")
    return {
        (policy, part): mean / part_means[(reference, part)]
        for (policy, part), mean in part_means.items()
    }


# -- record CSV round-trip ----------------------------------------------------


def _fmt_time(x) -> str:
    f = float(x)
    return str(int(f)) if f == int(f) else repr(f)


def write_records(stream: TextIO, records: Iterable[JobRecord]) -> None:
    stream.write(RECORDS_HEADER + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.job_id,
                r.submit,
                r.start,
                _fmt_time(r.finish),
                r.n_procs,
                r.bb_total,
                int(r.killed),
                r.policy,
            ]
        )


def read_records(stream: TextIO) -> list[JobRecord]:
    first = stream.readline().strip()
    if first != RECORDS_HEADER:
        raise ValueError(f"not a bbsim records file (header {first!r})")
    reader = csv.DictReader(stream)
    out = []
    for row in reader:
        out.append(
            JobRecord(
                job_id=int(row["job_id"]),
                submit=int(row["submit"]),
                start=int(row["start"]),
                finish=float(row["finish"]),
                n_procs=int(row["n_procs"]),
                bb_total=int(row["bb_total"]),
                killed=bool(int(row["killed"])),
                policy=row["policy"],
            )
        )
    return out
