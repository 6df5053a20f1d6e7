"""Deterministic discrete-event simulation of the cluster.

Job lifecycle: stage-in -> compute phases interleaved with checkpoints
(drained asynchronously to the PFS) -> stage-out. All PFS-link transfers share
bandwidth equally; checkpoint transfers (compute to burst buffer) run at the
compute link rate without cross-job contention. Transfer accounting uses
rational arithmetic, so completions are byte-exact.
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .availability import (
    AvailabilityProfile,
    InfeasibleError,
    Reservation,
    allocate_bb,
    allocate_nodes,
)
from .metrics import JobRecord
from .planner import AnnealConfig, SearchStats, plan_schedule
from .platform import Platform
from .policies import PolicyConfig, SchedulerState, run_policy
from .workload import JobSpec, PhasePlan, phase_plan_for

# event kind priorities: at equal timestamps, completions run before the
# scheduler so freed resources are visible to the same tick
JOB_FINISHED = 0
TRANSFER_COMPLETE = 1
PHASE_COMPLETE = 2
WALLTIME_EXPIRED = 3
JOB_SUBMITTED = 4
SCHEDULER_TICK = 5

PFS_ROUTES = ("pfs_to_bb", "bb_to_pfs")


@dataclass
class SimConfig:
    tick_period_s: int = 60
    io_model: str = "on"  # "on" | "off"
    seed: int = 0
    validate: bool = False
    collect_trace: bool = False

    def __post_init__(self):
        if self.io_model not in ("on", "off"):
            raise ValueError("io_model must be 'on' or 'off'")
        if self.tick_period_s <= 0:
            raise ValueError("tick period must be positive")


@dataclass
class Transfer:
    id: int
    job_id: int
    route: str  # pfs_to_bb | bb_to_pfs | compute_to_bb
    total: int
    delivered: Fraction = Fraction(0)


class FairShareLink:
    """Single shared link with equal bandwidth split among active transfers."""

    def __init__(self, bandwidth: int):
        self.bw = bandwidth
        self.active: dict[int, Fraction] = {}  # transfer id -> remaining bytes
        self.last = Fraction(0)
        self.version = 0

    def advance(self, now) -> None:
        now = Fraction(now)
        dt = now - self.last
        if self.active and dt > 0:
            rate = Fraction(self.bw, len(self.active))
            for tid in self.active:
                self.active[tid] -= rate * dt
        self.last = max(self.last, now)

    def add(self, now, tid: int, total: int) -> None:
        self.advance(now)
        self.active[tid] = Fraction(total)
        self.version += 1

    def remove(self, now, tid) -> Fraction:
        self.advance(now)
        remaining = self.active.pop(tid)
        self.version += 1
        return remaining

    def rate(self) -> Fraction:
        return Fraction(self.bw, len(self.active)) if self.active else Fraction(0)

    def next_completion(self):
        if not self.active:
            return None
        rate = Fraction(self.bw, len(self.active))
        return self.last + min(self.active.values()) / rate

    def finished_ids(self) -> list[int]:
        return sorted(tid for tid, rem in self.active.items() if rem <= 0)


@dataclass
class RunningJob:
    job: JobSpec
    plan: PhasePlan
    nodes: list[int]
    bb_shares: dict[int, int]
    start: int
    phase: int = 0  # current compute phase (1-based); 0 while staging in
    drains_pending: deque = field(default_factory=deque)
    drain_active: int | None = None  # transfer id
    stage_out_tid: int | None = None
    compute_done: bool = False
    stage_out_done: bool = False


class Simulation:
    """One deterministic simulation run of a workload under one policy."""

    def __init__(
        self,
        platform: Platform,
        jobs: list[JobSpec],
        policy: str,
        sim_cfg: SimConfig | None = None,
        anneal_cfg: AnnealConfig | None = None,
    ):
        self.platform = platform
        self.jobs = sorted(jobs, key=lambda j: (j.submit_time, j.id))
        self.policy_name = policy
        self.cfg = sim_cfg or SimConfig()
        if policy == "plan":
            self.anneal_cfg = anneal_cfg or AnnealConfig()
            self.policy_cfg = None
        else:
            self.anneal_cfg = None
            self.policy_cfg = PolicyConfig.from_name(policy)
        self.rng = random.Random(self.cfg.seed)

        for job in self.jobs:
            if job.n_procs > platform.n_procs or job.bb_total > platform.total_bb:
                raise InfeasibleError(
                    f"job {job.id} exceeds platform capacity "
                    f"({job.n_procs} procs, {job.bb_total} B)"
                )

        self.profile = AvailabilityProfile(platform.n_procs, platform.total_bb)
        self.queue: list[JobSpec] = []
        self.running: dict[int, RunningJob] = {}
        self.free_compute = set(platform.compute_nodes)
        self.bb_free = dict(platform.bb_capacity_per_node)
        self.link = FairShareLink(platform.pfs_link_bw)
        self.transfers: dict[int, Transfer] = {}
        self._tid = 0
        self.records: list[JobRecord] = []
        self.trace: list[dict] = []
        self.head_reservations: list[tuple[int, object]] = []  # (tick time, HeadReservation)
        self.plan_stats: list[SearchStats] = []
        self._heap: list = []
        self._seq = 0
        self._tick_at: int | None = None
        self._pending_submissions = 0

    # -- event machinery -----------------------------------------------------

    def _push(self, time, kind: int, payload=None) -> None:
        heapq.heappush(self._heap, (Fraction(time), kind, self._seq, payload))
        self._seq += 1

    def _schedule_tick(self, at: int) -> None:
        if self._tick_at is None or at < self._tick_at:
            self._tick_at = at
            self._push(at, SCHEDULER_TICK)

    def _trace(self, now, event: str, **data) -> None:
        if self.cfg.collect_trace:
            self.trace.append({"t": float(now), "event": event, **data})

    def run(self) -> list[JobRecord]:
        for job in self.jobs:
            self._push(job.submit_time, JOB_SUBMITTED, job)
            self._pending_submissions += 1
        if self.jobs:
            self._schedule_tick(0)
        while self._heap:
            now, kind, _, payload = heapq.heappop(self._heap)
            if kind != TRANSFER_COMPLETE and now == int(now):
                now = int(now)
            self._dispatch(now, kind, payload)
            if self.cfg.validate:
                self._check_invariants(now)
        assert not self.queue and not self.running, "simulation ended with live jobs"
        self.records.sort(key=lambda r: r.job_id)
        return self.records

    def _dispatch(self, now, kind: int, payload) -> None:
        if kind == JOB_SUBMITTED:
            self._pending_submissions -= 1
            self.queue.append(payload)
            self._trace(now, "submit", job=payload.id)
            tick = self.cfg.tick_period_s
            self._schedule_tick(-(-int(now) // tick) * tick)
        elif kind == SCHEDULER_TICK:
            self._tick_at = None
            self._on_tick(int(now))
        elif kind == JOB_FINISHED:
            if payload in self.running:
                self._finish(self.running[payload], now, killed=False)
        elif kind == WALLTIME_EXPIRED:
            if payload in self.running:
                self._kill(self.running[payload], now)
        elif kind == PHASE_COMPLETE:
            job_id, phase = payload
            rj = self.running.get(job_id)
            if rj is not None and rj.phase == phase and not rj.compute_done:
                self._on_phase_complete(rj, now)
        elif kind == TRANSFER_COMPLETE:
            tag = payload[0]
            if tag == "pfs":
                if payload[1] == self.link.version:
                    self._on_pfs_completions(now)
            else:  # checkpoint transfer, uncontended
                _, job_id, phase, tid = payload
                rj = self.running.get(job_id)
                if rj is not None and tid in self.transfers:
                    self._on_checkpoint_complete(rj, now, tid)
        else:
            raise AssertionError(f"unknown event kind {kind}")

    # -- scheduling ------------------------------------------------------------

    def _on_tick(self, now: int) -> None:
        self.profile.remove_kind("future")
        state = SchedulerState(self.queue, self.profile, now)
        if self.policy_name == "plan":
            stats = SearchStats()
            result = plan_schedule(state, self.anneal_cfg, self.rng, stats)
            if state.queue or result.launched:
                self.plan_stats.append(stats)
        else:
            result = run_policy(state, self.policy_cfg, validate=self.cfg.validate)
        if result.head_reservation is not None:
            self.head_reservations.append((now, result.head_reservation))
        for job in result.launched:
            self._start_job(job, now)
        if self.queue or self.running or self._pending_submissions:
            self._schedule_tick(now + self.cfg.tick_period_s)

    def _start_job(self, job: JobSpec, now: int) -> None:
        nodes = allocate_nodes(self.free_compute, job.n_procs)
        self.free_compute.difference_update(nodes)
        shares = allocate_bb(self.bb_free, job.bb_total)
        for node, share in shares.items():
            self.bb_free[node] -= share
        rj = RunningJob(
            job=job,
            plan=phase_plan_for(job),
            nodes=nodes,
            bb_shares={n: s for n, s in shares.items() if s},
            start=now,
        )
        self.running[job.id] = rj
        self._trace(now, "launch", job=job.id, nodes=nodes, bb_shares=rj.bb_shares)
        if self.cfg.io_model == "off":
            self._push(now + job.runtime, JOB_FINISHED, job.id)
            self._push(now + job.walltime, WALLTIME_EXPIRED, job.id)
            return
        self._push(now + job.walltime, WALLTIME_EXPIRED, job.id)
        if rj.plan.stage_in_bytes > 0:
            self._start_pfs_transfer(now, job.id, "pfs_to_bb", rj.plan.stage_in_bytes)
        else:
            self._start_phase(rj, now, 1)

    # -- lifecycle -------------------------------------------------------------

    def _start_phase(self, rj: RunningJob, now, phase: int) -> None:
        rj.phase = phase
        duration = rj.plan.compute_durations[phase - 1]
        self._push(now + duration, PHASE_COMPLETE, (rj.job.id, phase))

    def _on_phase_complete(self, rj: RunningJob, now) -> None:
        if rj.phase < rj.plan.n_phases:
            # checkpoint: compute suspended until the dump to BB completes
            bytes_ = rj.plan.checkpoint_bytes
            if bytes_ > 0:
                tid = self._new_transfer(rj.job.id, "compute_to_bb", bytes_)
                done = now + Fraction(bytes_, self.platform.compute_link_bw)
                self._push(done, TRANSFER_COMPLETE, ("ckpt", rj.job.id, rj.phase, tid))
            else:
                self._after_checkpoint(rj, now, 0)
        else:
            rj.compute_done = True
            bytes_ = rj.plan.stage_out_bytes
            if bytes_ > 0:
                rj.stage_out_tid = self._start_pfs_transfer(
                    now, rj.job.id, "bb_to_pfs", bytes_
                )
            else:
                rj.stage_out_done = True
                self._maybe_finish(rj, now)

    def _on_checkpoint_complete(self, rj: RunningJob, now, tid: int) -> None:
        del self.transfers[tid]
        self._after_checkpoint(rj, now, rj.plan.checkpoint_bytes)

    def _after_checkpoint(self, rj: RunningJob, now, drain_bytes: int) -> None:
        # drain to PFS asynchronously; next compute phase starts concurrently
        if drain_bytes > 0:
            if rj.drain_active is None:
                rj.drain_active = self._start_pfs_transfer(
                    now, rj.job.id, "bb_to_pfs", drain_bytes
                )
            else:
                rj.drains_pending.append(drain_bytes)  # FIFO per job
        self._start_phase(rj, now, rj.phase + 1)

    def _maybe_finish(self, rj: RunningJob, now) -> None:
        if (
            rj.compute_done
            and rj.stage_out_done
            and rj.drain_active is None
            and not rj.drains_pending
        ):
            self._finish(rj, now, killed=False)

    def _finish(self, rj: RunningJob, now, killed: bool) -> None:
        job = rj.job
        self.profile.remove(job.id)
        self.free_compute.update(rj.nodes)
        for node, share in rj.bb_shares.items():
            self.bb_free[node] += share
        del self.running[job.id]
        self.records.append(
            JobRecord(
                job_id=job.id,
                submit=job.submit_time,
                start=rj.start,
                finish=now,
                n_procs=job.n_procs,
                bb_total=job.bb_total,
                killed=killed,
                policy=self.policy_name,
            )
        )
        self._trace(now, "kill" if killed else "finish", job=job.id)

    def _kill(self, rj: RunningJob, now) -> None:
        for tid in [t for t, tr in self.transfers.items() if tr.job_id == rj.job.id]:
            if tid in self.link.active:
                self.link.remove(now, tid)
            del self.transfers[tid]
        self._schedule_next_pfs_completion()
        self._finish(rj, now, killed=True)

    # -- transfers ---------------------------------------------------------------

    def _new_transfer(self, job_id: int, route: str, total: int) -> int:
        self._tid += 1
        self.transfers[self._tid] = Transfer(self._tid, job_id, route, total)
        return self._tid

    def _start_pfs_transfer(self, now, job_id: int, route: str, total: int) -> int:
        assert route in PFS_ROUTES
        tid = self._new_transfer(job_id, route, total)
        self.link.add(now, tid, total)
        self._schedule_next_pfs_completion()
        return tid

    def _schedule_next_pfs_completion(self) -> None:
        at = self.link.next_completion()
        if at is not None:
            self._push(at, TRANSFER_COMPLETE, ("pfs", self.link.version))

    def _on_pfs_completions(self, now) -> None:
        self.link.advance(now)
        finished = self.link.finished_ids()
        for tid in finished:
            remaining = self.link.active.pop(tid)
            assert remaining == 0, "transfer completion must be byte-exact"
            transfer = self.transfers.pop(tid)
            transfer.delivered = Fraction(transfer.total)
            rj = self.running.get(transfer.job_id)
            if rj is None:
                continue
            if transfer.route == "pfs_to_bb":
                self._start_phase(rj, now, 1)
            elif tid == rj.stage_out_tid:
                rj.stage_out_done = True
                self._maybe_finish(rj, now)
            else:  # checkpoint drain
                rj.drain_active = None
                if rj.drains_pending:
                    rj.drain_active = self._start_pfs_transfer(
                        now, rj.job.id, "bb_to_pfs", rj.drains_pending.popleft()
                    )
                self._maybe_finish(rj, now)
        if finished:
            self.link.version += 1
            self._schedule_next_pfs_completion()

    # -- invariants ----------------------------------------------------------------

    def _check_invariants(self, now) -> None:
        used_procs = sum(rj.job.n_procs for rj in self.running.values())
        used_bb = sum(rj.job.bb_total for rj in self.running.values())
        assert used_procs <= self.platform.n_procs, "processor over-allocation"
        assert used_bb <= self.platform.total_bb, "burst-buffer over-allocation"
        assert len(self.free_compute) == self.platform.n_procs - used_procs
        for node, free in self.bb_free.items():
            cap = self.platform.bb_capacity_per_node[node]
            assert 0 <= free <= cap, f"storage node {node} share out of range"


def run(
    platform: Platform,
    jobs: list[JobSpec],
    policy: str,
    sim_cfg: SimConfig | None = None,
    anneal_cfg: AnnealConfig | None = None,
) -> list[JobRecord]:
    """Run one simulation and return per-job records."""
    return Simulation(platform, jobs, policy, sim_cfg, anneal_cfg).run()


def simulate_transfers(starts: list[tuple[int, int]], bandwidth: int) -> list[Fraction]:
    """Finish times of (start_time, bytes) transfers on one fair-share link.

    Standalone helper for reasoning about the sharing discipline; returns one
    exact finish time per input transfer, in input order.
    """
    link = FairShareLink(bandwidth)
    events = sorted((t, i) for i, (t, _) in enumerate(starts))
    finishes: dict[int, Fraction] = {}
    pending = deque(events)
    while pending or link.active:
        next_start = pending[0][0] if pending else None
        next_done = link.next_completion()
        if next_done is None or (next_start is not None and next_start <= next_done):
            t, i = pending.popleft()
            link.add(t, i, starts[i][1])
        else:
            link.advance(next_done)
            for tid in link.finished_ids():
                rem = link.active.pop(tid)
                assert rem == 0
                finishes[tid] = next_done
            link.version += 1
    return [finishes[i] for i in range(len(starts))]
