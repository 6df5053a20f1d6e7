"""Command-line interface: convert | simulate | analyze | gantt.

Exit codes: 0 success, 1 input error, 2 internal assertion failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

from . import __version__
from .availability import InfeasibleError
from .engine import SimConfig, Simulation
from .metrics import (
    DEFAULT_TAIL_K,
    JobRecord,
    bounded_slowdown,
    read_records,
    summarize,
    waiting_time,
    write_records,
    normalize_by_reference,
)
from .planner import AnnealConfig
from .platform import LogNormalModel, PlatformConfig, build_platform
from .workload import (
    PART_SECONDS,
    N_PARTS,
    SwfParseError,
    assign_phases,
    parse_swf,
    read_workload,
    synthesize_bb,
    write_workload,
)


class InputError(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get("BBSIM_SEED", "0"))


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# -- convert -------------------------------------------------------------------


def cmd_convert(args) -> int:
    model = LogNormalModel(mu=args.mu, sigma=args.sigma)
    try:
        with open(args.swf) as f:
            result = parse_swf(f)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    jobs = synthesize_bb(result.jobs, model, args.seed)
    jobs = assign_phases(jobs, args.seed)
    with open(args.output, "w") as f:
        write_workload(
            f,
            jobs,
            meta={
                "source": os.path.basename(args.swf),
                "mu": args.mu,
                "sigma": args.sigma,
                "seed": args.seed,
            },
        )
    print(f"wrote {len(jobs)} jobs to {args.output} ({result.n_dropped} records dropped)")
    if not jobs:
        print("warning: empty workload", file=sys.stderr)
    return 0


# -- simulate ------------------------------------------------------------------


def _platform_from_config(cfg: dict) -> PlatformConfig:
    cfg = dict(cfg)
    if "bb_request_model" in cfg:
        cfg["bb_request_model"] = LogNormalModel(**cfg["bb_request_model"])
    return PlatformConfig(**cfg)


def _run_simulation(config: dict, records_path: str, trace_path: str | None) -> None:
    platform = build_platform(_platform_from_config(config["platform"]))
    with open(config["workload"]) as f:
        jobs, _ = read_workload(f)
    bad = [
        j.id
        for j in jobs
        if j.n_procs > platform.n_procs or j.bb_total > platform.total_bb
    ]
    if bad:
        raise InputError(f"jobs exceed platform capacity: {bad[:20]}")
    sim_cfg = SimConfig(
        tick_period_s=config["tick_period_s"],
        io_model=config["io_model"],
        seed=config["seed"],
        collect_trace=trace_path is not None,
    )
    anneal_cfg = None
    if config["policy"] == "plan":
        anneal_cfg = AnnealConfig(
            alpha=config["alpha"],
            r=config["sa_r"],
            n_cooling=config["sa_n"],
            m_steps=config["sa_m"],
            seed=config["seed"],
        )
    sim = Simulation(platform, jobs, config["policy"], sim_cfg, anneal_cfg)
    records = sim.run()
    with open(records_path, "w") as f:
        write_records(f, records)
    if trace_path is not None:
        with open(trace_path, "w") as f:
            for entry in sim.trace:
                f.write(json.dumps(entry) + "\n")


def cmd_simulate(args) -> int:
    if args.from_manifest:
        with open(args.from_manifest) as f:
            manifest = json.load(f)
        config = manifest["config"]
        if _sha256(config["workload"]) != manifest["workload_sha256"]:
            raise InputError("workload file changed since the manifest was written")
        _run_simulation(config, args.output, args.trace)
        return 0

    if not args.workload:
        raise InputError("--workload is required (or use --from-manifest)")
    platform_cfg = {}
    if args.config:
        with open(args.config) as f:
            file_cfg = json.load(f)
        platform_cfg = file_cfg.get("platform", {})
    config = {
        "platform": platform_cfg,
        "workload": args.workload,
        "policy": args.policy,
        "alpha": args.alpha,
        "sa_r": args.sa_r,
        "sa_n": args.sa_n,
        "sa_m": args.sa_m,
        "seed": args.seed,
        "io_model": args.io_model,
        "tick_period_s": args.tick,
    }
    _run_simulation(config, args.output, args.trace)
    manifest = {
        "tool": "bbsim",
        "version": __version__,
        "command": "simulate",
        "config": config,
        "workload_sha256": _sha256(args.workload),
        "records": args.output,
        "trace": args.trace,
    }
    with open(args.manifest, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {args.output} and {args.manifest}")
    return 0


# -- analyze -------------------------------------------------------------------

METRICS = {"waiting_time": waiting_time, "bounded_slowdown": bounded_slowdown}


def _part_of(rec: JobRecord) -> int:
    return min(rec.submit // PART_SECONDS, N_PARTS - 1)


def cmd_analyze(args) -> int:
    records: list[JobRecord] = []
    for path in args.records:
        with open(path) as f:
            records.extend(read_records(f))
    if not records:
        raise InputError("no records found")
    policies = sorted({r.policy for r in records})

    groups: dict[tuple[str, int | None], list[JobRecord]] = {}
    for r in records:
        key = (r.policy, _part_of(r) if args.split else None)
        groups.setdefault(key, []).append(r)

    os.makedirs(args.outdir, exist_ok=True)
    summary_path = os.path.join(args.outdir, "summary.csv")
    with open(summary_path, "w") as f:
        level_cols = [f"q{lv:.6f}".rstrip("0").rstrip(".") for lv, _ in summarize(records[:1], waiting_time).quantiles]
        f.write("policy,part,metric,count,mean,ci95," + ",".join(level_cols) + "\n")
        for (policy, part) in sorted(groups, key=lambda k: (k[0], -1 if k[1] is None else k[1])):
            for metric_name, metric in METRICS.items():
                s = summarize(groups[(policy, part)], metric, tail_k=args.tail)
                part_label = "all" if part is None else str(part)
                qs = ",".join(repr(v) for _, v in s.quantiles)
                f.write(
                    f"{policy},{part_label},{metric_name},{s.count},{s.mean!r},{s.ci95!r},{qs}\n"
                )

    tail_path = os.path.join(args.outdir, "tail.csv")
    with open(tail_path, "w") as f:
        f.write("policy,metric,rank,value\n")
        for policy in policies:
            recs = [r for r in records if r.policy == policy]
            for metric_name, metric in METRICS.items():
                s = summarize(recs, metric, tail_k=args.tail)
                for rank, value in enumerate(s.tail, start=1):
                    f.write(f"{policy},{metric_name},{rank},{value!r}\n")

    if args.reference:
        if not args.split:
            raise InputError("--reference requires --split")
        if args.reference not in policies:
            raise InputError(f"reference policy {args.reference!r} has no records")
        norm_path = os.path.join(args.outdir, "normalized.csv")
        with open(norm_path, "w") as f:
            f.write("policy,part,metric,mean,normalized\n")
            for metric_name, metric in METRICS.items():
                part_means = {
                    (policy, part): sum(map(metric, recs)) / len(recs)
                    for (policy, part), recs in groups.items()
                }
                normalized = normalize_by_reference(part_means, args.reference)
                for (policy, part) in sorted(part_means):
                    f.write(
                        f"{policy},{part},{metric_name},"
                        f"{part_means[(policy, part)]!r},{normalized[(policy, part)]!r}\n"
                    )
        print(f"wrote {summary_path}, {tail_path}, {norm_path}")
    else:
        print(f"wrote {summary_path}, {tail_path}")
    return 0


# -- gantt ---------------------------------------------------------------------


def cmd_gantt(args) -> int:
    launches: dict[int, dict] = {}
    ends: dict[int, float] = {}
    try:
        with open(args.trace) as f:
            for line in f:
                entry = json.loads(line)
                if entry["event"] == "launch":
                    launches[entry["job"]] = entry
                elif entry["event"] in ("finish", "kill"):
                    ends[entry["job"]] = entry["t"]
    except OSError as exc:
        raise InputError(str(exc)) from exc
    for entry in launches.values():
        if "nodes" not in entry:
            raise InputError(
                "trace has no node bindings; re-run simulate with --trace"
            )
    rows = []
    ordered = sorted(launches.values(), key=lambda e: (e["t"], e["job"]))
    if args.first:
        ordered = ordered[: args.first]
    for entry in ordered:
        job = entry["job"]
        finish = ends.get(job, math.nan)
        shares = {int(k): v for k, v in entry.get("bb_shares", {}).items()}
        for node in entry["nodes"]:
            rows.append((job, node, entry["t"], finish, 0))
        for node, share in sorted(shares.items()):
            rows.append((job, node, entry["t"], finish, share))
    with open(args.output, "w") as f:
        f.write("job_id,node_id,start,finish,bb_bytes\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")
    print(f"wrote {args.output} ({len(rows)} rows)")
    return 0


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbsim",
        description="Burst-buffer-aware job scheduling simulator",
    )
    parser.add_argument("--version", action="version", version=f"bbsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert an SWF trace to a bbsim workload file")
    p.add_argument("swf", help="input SWF trace")
    p.add_argument("-o", "--output", required=True, help="output workload (JSON lines)")
    p.add_argument("--mu", type=float, default=math.log(4e9),
                   help="log-normal mu of per-processor BB request (default ln(4e9))")
    p.add_argument("--sigma", type=float, default=1.0, help="log-normal sigma")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("simulate", help="run one policy over a workload")
    p.add_argument("--workload", help="bbsim workload file")
    p.add_argument("--config", help="JSON config file (platform section)")
    p.add_argument("--policy", default="fcfs-bb",
                   choices=["fcfs", "fcfs-easy", "filler", "fcfs-bb", "sjf-bb", "plan"])
    p.add_argument("--alpha", type=float, default=2.0, help="plan policy exponent")
    p.add_argument("--sa-r", type=float, default=0.9, dest="sa_r")
    p.add_argument("--sa-n", type=int, default=30, dest="sa_n")
    p.add_argument("--sa-m", type=int, default=6, dest="sa_m")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--io-model", choices=["on", "off"], default="on")
    p.add_argument("--tick", type=int, default=60, help="scheduler period [s]")
    p.add_argument("--trace", help="write a JSON-lines event trace here")
    p.add_argument("-o", "--output", required=True, help="records CSV path")
    p.add_argument("--manifest", default="manifest.json", help="run manifest path")
    p.add_argument("--from-manifest", help="re-run a previous simulation bit-for-bit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="summarize record CSVs")
    p.add_argument("records", nargs="+", help="record CSVs (one or more policies)")
    p.add_argument("--split", action="store_true", help="split into three-week parts")
    p.add_argument("--reference", help="normalize per-part means by this policy")
    p.add_argument("--tail", type=int, default=DEFAULT_TAIL_K)
    p.add_argument("-o", "--outdir", default=".", help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gantt", help="emit per-(job, node) occupancy intervals")
    p.add_argument("trace", help="JSON-lines trace from simulate --trace")
    p.add_argument("-o", "--output", required=True, help="gantt CSV path")
    p.add_argument("--first", type=int, help="limit to the first N jobs by start time")
    p.set_defaults(func=cmd_gantt)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SwfParseError, InfeasibleError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
