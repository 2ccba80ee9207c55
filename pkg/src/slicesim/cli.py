"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .cost import TariffParams, solve_k_prime
from .engine import MetricsTrace, run, run_summary
from .errors import Degenerate, ParseError, SliceSimError, ValidationError
from .scenario import load_scenario, parse_json_bytes

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_IO = 3

log = logging.getLogger("slicesim")


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ValidationError, ParseError, Degenerate)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_RUNTIME


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _atomic_write(files: dict, out_dir: Path) -> None:
    """Write every ``name -> text`` into ``out_dir`` or nothing at all."""
    out_dir.mkdir(parents=True, exist_ok=True)
    umask = os.umask(0)
    os.umask(umask)
    staged = []
    created = []
    try:
        for name, content in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            staged.append((tmp, out_dir / name))
            with os.fdopen(fd, "w", newline="\n") as fh:
                if callable(content):
                    content(fh)
                else:
                    fh.write(content)
            os.chmod(tmp, 0o666 & ~umask)
        for tmp, final in staged:
            if not final.exists():
                created.append(final)
            os.replace(tmp, final)
    except BaseException:
        for path in [tmp for tmp, _ in staged] + created:
            try:
                os.unlink(path)
            except FileNotFoundError:
                pass
        raise


def rate_series_csv(trace: MetricsTrace, fh) -> None:
    """Per-tick rates: one column per slice aggregate and one per burst flow."""
    ticks = np.unique(trace.tick_index)
    row = np.searchsorted(ticks, trace.tick_index)
    slice_of = trace.session_slice()[trace.session] if len(trace) else np.zeros(0, dtype=np.int64)
    agg = np.zeros((len(ticks), len(trace.slices)))
    np.add.at(agg, (row, slice_of), trace.alloc)
    bursts = [f for f in trace.flows if f.kind == "finite_burst" and f.session_id is not None]
    pos = {s.session_id: k for k, s in enumerate(trace.sessions)}
    per_flow = np.zeros((len(ticks), len(bursts)))
    for c, f in enumerate(bursts):
        mask = trace.session == pos[f.session_id]
        np.add.at(per_flow[:, c], row[mask], trace.alloc[mask])
    names = [f"slice:{s.name or s.snssai}" for s in trace.slices] + [f"flow:{f.flow_id}" for f in bursts]
    fh.write(",".join(["time_s"] + names) + "\n")
    for n, t in enumerate(ticks.tolist()):
        values = [f"{v:.6f}" for v in agg[n].tolist()] + [f"{v:.6f}" for v in per_flow[n].tolist()]
        fh.write(",".join([f"{t * trace.tick:.6f}"] + values) + "\n")


# --- subcommands ------------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except (SliceSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    print(f"{sc.name}: OK ({len(sc.ues)} UEs, {len(sc.slices)} slices, {len(sc.flows)} flows)")
    return EXIT_OK


def cmd_run(args) -> int:
    out_dir = Path(args.out_dir)
    try:
        sc = load_scenario(args.scenario)
    except (SliceSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    if out_dir.exists() and not out_dir.is_dir():
        print(f"error: {out_dir} is not a directory", file=sys.stderr)
        return EXIT_IO
    tick = args.tick_ms / 1000.0 if args.tick_ms else None
    if tick is not None and not tick > 0:
        print("error: --tick-ms must be > 0", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        trace = run(sc, tick=tick, seed=args.seed)
    except SliceSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    summary = run_summary(trace, sc.name, sc.seed if args.seed is None else args.seed)
    try:
        _atomic_write({"trace.csv": trace.write_csv, "summary.json": _dumps(summary)}, out_dir)
    except OSError as exc:
        print(f"error: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_IO
    for f in summary["flows"]:
        if f["kind"] == "finite_burst":
            log.info("%s: %s completed in %s s", sc.name, f["flow_id"], f["duration_s"])
    return EXIT_OK


def _compare_one(path: str) -> dict:
    try:
        sc = load_scenario(path)
        trace = run(sc)
    except (SliceSimError, OSError) as exc:
        return {"path": str(path), "status": "error", "exit_code": _exit_code(exc), "error": str(exc)}
    summary = run_summary(trace, sc.name, sc.seed)
    buf = io.StringIO()
    rate_series_csv(trace, buf)
    return {"path": str(path), "status": "ok", "summary": summary, "rates_csv": buf.getvalue()}


def cmd_compare(args) -> int:
    paths = args.scenarios
    if len(paths) < 2:
        print("error: compare needs at least two scenarios", file=sys.stderr)
        return EXIT_VALIDATION
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_compare_one, paths))
    else:
        results = [_compare_one(p) for p in paths]

    files = {}
    entries = []
    for n, res in enumerate(results):
        label = f"{n}:{Path(res['path']).stem}"
        if res["status"] != "ok":
            entries.append({"label": label, "path": res["path"], "status": "error", "error": res["error"]})
            continue
        s = res["summary"]
        csv_name = f"{n:02d}_{Path(res['path']).stem}_rates.csv"
        files[csv_name] = res["rates_csv"]
        entries.append({
            "label": label,
            "path": res["path"],
            "status": "ok",
            "scenario": s["scenario"],
            "completion_s": {f["flow_id"]: f["duration_s"] for f in s["flows"] if f["kind"] == "finite_burst"},
            "mean_rate_mbps": {f["flow_id"]: f["mean_rate_mbps"] for f in s["flows"] if f["kind"] == "finite_burst"},
            "slices": s["slices"],
            "burst_windows": s["burst_windows"],
            "rates_csv": csv_name,
        })

    ok = [e for e in entries if e["status"] == "ok"]
    ratios = {}
    if ok:
        base = ok[0]
        for flow_id, t0 in base["completion_s"].items():
            for other in ok[1:]:
                t1 = other["completion_s"].get(flow_id)
                if t0 and t1:
                    ratios.setdefault(flow_id, {})[f"{base['label']} / {other['label']}"] = t0 / t1
    report = {"scenarios": entries, "completion_ratios": ratios}
    files["report.json"] = _dumps(report)
    try:
        _atomic_write(files, Path(args.out_dir))
    except OSError as exc:
        print(f"error: cannot write to {args.out_dir}: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(_dumps(report))
    failed = [r for r in results if r["status"] != "ok"]
    if failed:
        return min(r["exit_code"] for r in failed)
    return EXIT_OK


def cmd_cost(args) -> int:
    try:
        data = Path(args.params).read_bytes()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        params = TariffParams.from_json(parse_json_bytes(data, "params file"))
        result = solve_k_prime(params)
    except SliceSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    sys.stdout.write(_dumps(result.to_json()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicesim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and cross-validate a scenario file")
    p.add_argument("--scenario", required=True, help="scenario JSON (or the name of a bundled one)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate a scenario, write trace.csv and summary.json")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--tick-ms", type=int, default=None, help="override the scenario tick (milliseconds)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run several scenarios and report them side by side")
    p.add_argument("scenarios", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1, help="scenarios simulated in parallel")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cost", help="solve the tariff equilibrium for a params JSON file")
    p.add_argument("--params", required=True)
    p.set_defaults(func=cmd_cost)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("SLICESIM_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
