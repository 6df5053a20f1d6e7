"""Queue-based schedulers: FCFS, filler, and EASY-backfilling variants.

All policies operate on a SchedulerState whose profile already contains a
"running" reservation for every executing job. Launching a job means adding
its running reservation (for its walltime) and removing it from the queue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .availability import AvailabilityProfile, Reservation
from .workload import JobSpec

POLICY_NAMES = ("fcfs", "fcfs-easy", "filler", "fcfs-bb", "sjf-bb", "plan")


@dataclass(frozen=True)
class PolicyConfig:
    name: str
    order: str = "fcfs"  # "fcfs" | "sjf"
    reserve_bb: bool = False
    backfilling: bool = False

    @classmethod
    def from_name(cls, name: str) -> "PolicyConfig":
        table = {
            "fcfs": cls("fcfs"),
            "fcfs-easy": cls("fcfs-easy", backfilling=True),
            "filler": cls("filler", backfilling=True),
            "fcfs-bb": cls("fcfs-bb", backfilling=True, reserve_bb=True),
            "sjf-bb": cls("sjf-bb", order="sjf", backfilling=True, reserve_bb=True),
        }
        if name not in table:
            raise ValueError(f"unknown queue policy: {name!r}")
        return table[name]


@dataclass
class SchedulerState:
    queue: list[JobSpec]  # pending jobs in arrival order
    profile: AvailabilityProfile
    now: int


@dataclass(frozen=True)
class HeadReservation:
    job_id: int
    start: int
    n_procs: int
    bb_bytes: int


@dataclass
class CycleResult:
    launched: list[JobSpec] = field(default_factory=list)
    head_reservation: HeadReservation | None = None


class EasyGuaranteeViolation(AssertionError):
    """A backfilled job delayed the head job's reserved start."""


def _launch(state: SchedulerState, job: JobSpec) -> None:
    state.profile.add(
        Reservation(
            job_id=job.id,
            start=state.now,
            end=state.now + job.walltime,
            n_procs=job.n_procs,
            bb_bytes=job.bb_total,
            kind="running",
        )
    )
    state.queue.remove(job)


def _fits_now(state: SchedulerState, job: JobSpec) -> bool:
    return state.profile.has_capacity(
        job.n_procs, job.bb_total, state.now, state.now + job.walltime
    )


def fcfs_pass(state: SchedulerState) -> list[JobSpec]:
    """Launch queue-order jobs that fit now; stop at the first that does not."""
    launched = []
    for job in list(state.queue):
        if _fits_now(state, job):
            _launch(state, job)
            launched.append(job)
        else:
            break
    return launched


def backfill_pass(state: SchedulerState, candidates: list[JobSpec]) -> list[JobSpec]:
    """Launch every candidate that fits now without touching any reservation.

    Feasibility over the job's whole walltime window means an allocation can
    never overlap a future reservation already in the profile.
    """
    launched = []
    for job in candidates:
        if job not in state.queue:
            continue
        if _fits_now(state, job):
            _launch(state, job)
            launched.append(job)
    return launched


def sjf_sorted(jobs: list[JobSpec]) -> list[JobSpec]:
    return sorted(jobs, key=lambda j: (j.walltime, j.submit_time, j.id))


def easy_schedule(
    state: SchedulerState, cfg: PolicyConfig, validate: bool = False
) -> CycleResult:
    """EASY-backfilling: FCFS pass, head reservation, backfill, drop reservation.

    The head reservation covers processors only, or processors and burst
    buffers when cfg.reserve_bb is set. SJF order applies to the backfill
    candidates only; the head is re-queued at the front either way.
    """
    result = CycleResult(launched=fcfs_pass(state))
    if not state.queue:
        return result
    head = state.queue.pop(0)
    bb_demand = head.bb_total if cfg.reserve_bb else 0
    start = state.profile.earliest_slot(
        head.n_procs, bb_demand, head.walltime, state.now
    )
    state.profile.add(
        Reservation(head.id, start, start + head.walltime, head.n_procs, bb_demand)
    )
    candidates = sjf_sorted(state.queue) if cfg.order == "sjf" else list(state.queue)
    result.launched += backfill_pass(state, candidates)
    state.profile.remove(head.id)
    if validate:
        recomputed = state.profile.earliest_slot(
            head.n_procs, bb_demand, head.walltime, state.now
        )
        if recomputed != start:
            raise EasyGuaranteeViolation(
                f"head job {head.id}: reserved start {start}, "
                f"post-backfill earliest slot {recomputed}"
            )
    state.queue.insert(0, head)
    result.head_reservation = HeadReservation(head.id, start, head.n_procs, bb_demand)
    return result


def filler_schedule(state: SchedulerState) -> CycleResult:
    """Greedy first-fit in arrival order, no reservations at all."""
    return CycleResult(launched=backfill_pass(state, list(state.queue)))


def run_policy(
    state: SchedulerState, cfg: PolicyConfig, validate: bool = False
) -> CycleResult:
    if cfg.name == "fcfs":
        return CycleResult(launched=fcfs_pass(state))
    if cfg.name == "filler":
        return filler_schedule(state)
    if cfg.backfilling:
        return easy_schedule(state, cfg, validate=validate)
    raise ValueError(f"policy {cfg.name!r} not handled here")
