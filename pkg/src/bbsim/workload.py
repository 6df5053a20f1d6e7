"""Workload ingestion: SWF traces, burst-buffer synthesis, phase plans, parts."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, TextIO

import numpy as np

from .platform import LogNormalModel

SWF_FIELDS = 18
PART_SECONDS = 3 * 7 * 24 * 3600  # three weeks
N_PARTS = 16
MAX_PHASES = 10

WORKLOAD_FORMAT = "bbsim-workload"
WORKLOAD_VERSION = 1


class SwfParseError(Exception):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class JobSpec:
    id: int
    submit_time: int
    runtime: int
    walltime: int
    n_procs: int
    bb_per_proc: int = 0
    n_phases: int = 1
    # explicit aggregate request; overrides n_procs * bb_per_proc when set
    bb_total_bytes: int | None = None

    def __post_init__(self):
        if self.runtime <= 0:
            raise ValueError(f"job {self.id}: runtime must be positive")
        if self.walltime < self.runtime:
            raise ValueError(f"job {self.id}: walltime < runtime")
        if self.n_procs < 1:
            raise ValueError(f"job {self.id}: needs at least one processor")
        if self.bb_per_proc < 0 or (self.bb_total_bytes or 0) < 0:
            raise ValueError(f"job {self.id}: negative burst-buffer request")
        if not 1 <= self.n_phases <= MAX_PHASES:
            raise ValueError(f"job {self.id}: n_phases out of [1, {MAX_PHASES}]")

    @property
    def bb_total(self) -> int:
        if self.bb_total_bytes is not None:
            return self.bb_total_bytes
        return self.n_procs * self.bb_per_proc


@dataclass(frozen=True)
class PhasePlan:
    compute_durations: tuple[int, ...]
    checkpoint_bytes: int  # after each phase except the last
    stage_in_bytes: int
    stage_out_bytes: int

    @property
    def n_phases(self) -> int:
        return len(self.compute_durations)


@dataclass(frozen=True)
class WorkloadPart:
    index: int
    jobs: tuple[JobSpec, ...]


@dataclass
class SwfParseResult:
    jobs: list[JobSpec]
    n_dropped: int


def parse_swf(stream: Iterable[str]) -> SwfParseResult:
    """Parse a Standard Workload Format trace into JobSpecs (bb fields unset).

    Field mapping (1-indexed SWF): submit=2, runtime=4, processors=8 with
    fallback to 5 when -1, walltime=9 with fallback to runtime. Records with
    non-positive runtime or processor count are dropped and counted.
    """
    jobs: list[JobSpec] = []
    dropped = 0
    for line_no, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";"):
            continue
        fields = stripped.split()
        if len(fields) != SWF_FIELDS:
            raise SwfParseError(line_no, f"expected {SWF_FIELDS} fields, got {len(fields)}")
        try:
            values = [int(float(f)) for f in fields]
        except ValueError as exc:
            raise SwfParseError(line_no, str(exc)) from exc
        job_id, submit, runtime = values[0], values[1], values[3]
        n_procs = values[7] if values[7] > 0 else values[4]
        walltime = values[8] if values[8] > 0 else runtime
        if runtime <= 0 or n_procs <= 0:
            dropped += 1
            continue
        jobs.append(
            JobSpec(
                id=job_id,
                submit_time=submit,
                runtime=runtime,
                walltime=max(walltime, runtime),
                n_procs=n_procs,
            )
        )
    return SwfParseResult(jobs=jobs, n_dropped=dropped)


def _job_rng(seed: int, job_id: int, stream: int) -> np.random.Generator:
    # keyed on (seed, job id), not draw order: filtering jobs never shifts samples
    return np.random.default_rng([seed, job_id, stream])


def synthesize_bb(jobs: list[JobSpec], model: LogNormalModel, seed: int) -> list[JobSpec]:
    """Assign per-processor burst-buffer requests, i.i.d. log-normal per job."""
    out = []
    for job in jobs:
        rng = _job_rng(seed, job.id, 0)
        bb = int(round(rng.lognormal(model.mu, model.sigma)))
        out.append(replace(job, bb_per_proc=max(bb, 0)))
    return out


def phase_plan_for(job: JobSpec) -> PhasePlan:
    """Phase plan implied by a job's phase count: even split, remainder to last."""
    n = job.n_phases
    base, rem = divmod(job.runtime, n)
    durations = [base] * (n - 1) + [base + rem]
    return PhasePlan(
        compute_durations=tuple(durations),
        checkpoint_bytes=job.bb_total,
        stage_in_bytes=job.bb_total,
        stage_out_bytes=job.bb_total,
    )


def generate_phases(job: JobSpec, seed: int) -> PhasePlan:
    """Draw a phase count in 1..10 (capped so each phase lasts >= 1 s)."""
    rng = _job_rng(seed, job.id, 1)
    n = int(rng.integers(1, MAX_PHASES + 1))
    n = min(n, job.runtime)
    return phase_plan_for(replace(job, n_phases=n))


def assign_phases(jobs: list[JobSpec], seed: int) -> list[JobSpec]:
    """Set n_phases on every job from its generated phase plan."""
    return [replace(j, n_phases=generate_phases(j, seed).n_phases) for j in jobs]


def split_parts(jobs: list[JobSpec]) -> list[WorkloadPart]:
    """Split into 16 non-overlapping three-week parts; re-base submit times.

    Jobs beyond part 15 are discarded. Input must be sorted by submit time.
    """
    parts: list[list[JobSpec]] = [[] for _ in range(N_PARTS)]
    for job in jobs:
        idx = job.submit_time // PART_SECONDS
        if idx >= N_PARTS:
            continue
        parts[idx].append(
            replace(job, submit_time=job.submit_time - idx * PART_SECONDS)
        )
    return [WorkloadPart(index=i, jobs=tuple(p)) for i, p in enumerate(parts)]


# -- workload files (JSON lines, versioned header) --------------------------

_JOB_FIELDS = (
    "id",
    "submit_time",
    "runtime",
    "walltime",
    "n_procs",
    "bb_per_proc",
    "n_phases",
    "bb_total_bytes",
)


def write_workload(stream: TextIO, jobs: Iterable[JobSpec], meta: dict | None = None) -> None:
    header = {"format": WORKLOAD_FORMAT, "version": WORKLOAD_VERSION}
    if meta:
        header.update(meta)
    stream.write(json.dumps(header, sort_keys=True) + "\n")
    for job in jobs:
        stream.write(json.dumps({f: getattr(job, f) for f in _JOB_FIELDS}) + "\n")


def read_workload(stream: TextIO) -> tuple[list[JobSpec], dict]:
    header_line = stream.readline()
    if not header_line.strip():
        raise ValueError("empty workload file")
    header = json.loads(header_line)
    if header.get("format") != WORKLOAD_FORMAT:
        raise ValueError(f"not a {WORKLOAD_FORMAT} file")
    jobs = [JobSpec(**json.loads(line)) for line in stream if line.strip()]
    return jobs, header


# -- synthetic workloads (tests and demos) -----------------------------------


def synthetic_workload(
    n_jobs: int,
    seed: int,
    *,
    mean_interarrival: float = 30.0,
    runtime_range: tuple[int, int] = (60, 1200),
    max_procs: int = 32,
    walltime_factor: float = 2.0,
    bb_model: LogNormalModel | None = None,
) -> list[JobSpec]:
    """Poisson arrivals, log-uniform runtimes, geometric-ish processor counts."""
    rng = np.random.default_rng(seed)
    lo, hi = runtime_range
    t = 0.0
    jobs: list[JobSpec] = []
    for i in range(n_jobs):
        t += rng.exponential(mean_interarrival)
        runtime = int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))
        runtime = max(runtime, 1)
        walltime = max(runtime, int(round(runtime * rng.uniform(1.0, walltime_factor))))
        n_procs = min(int(2 ** rng.integers(0, int(math.log2(max_procs)) + 1)), max_procs)
        jobs.append(
            JobSpec(
                id=i + 1,
                submit_time=int(t),
                runtime=runtime,
                walltime=walltime,
                n_procs=n_procs,
            )
        )
    if bb_model is not None:
        jobs = synthesize_bb(jobs, bb_model, seed)
    return assign_phases(jobs, seed)
