"""``coopcal`` command line: generate, run, sweep, inspect.

Exit status is 0 on success, 2 on usage or configuration errors and 1 on
runtime failures (unreadable files, malformed frame files, ...).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from typing import Optional, Sequence

from . import config as cfgmod
from .context import to_ego_frame
from .formats import FrameFormatError, export_results, read_frames, write_frames
from .geometry import relative_transform_from_poses
from .pipeline import calibrate_frame, run_frames, summarize
from .sim import generate_suite

SWEEP_AXES = ("eta", "sigma_p", "sigma_theta", "sigma_p_L", "sigma_theta_L")
# flag -> (section, key)
OVERRIDES = {
    "seed": ("noise", "seed"),
    "frames": ("suite", "n_frames"),
    "objects": ("suite", "n_objects"),
    "eta": ("suite", "eta"),
    "sigma_p": ("noise", "sigma_p"),
    "sigma_theta": ("noise", "sigma_theta"),
    "sigma_p_L": ("noise", "sigma_p_L"),
    "sigma_theta_L": ("noise", "sigma_theta_L"),
    "loc_mode": ("noise", "loc_mode"),
}


class UsageError(Exception):
    pass


def _value(text: str):
    """CLI scalars: ints, floats, or strings such as ``10deg``."""
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _add_common(p: argparse.ArgumentParser, run_flags: bool) -> None:
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--frames", type=int, help="frames per suite")
    p.add_argument("--objects", type=int, help="objects per scene")
    p.add_argument("--eta", type=float, help="co-visible rate")
    p.add_argument("--sigma-p", dest="sigma_p", type=float, help="perception position std (m)")
    p.add_argument("--sigma-theta", dest="sigma_theta", type=_value, help="heading std (rad or e.g. 10deg)")
    p.add_argument("--sigma-p-L", dest="sigma_p_L", type=float, help="localization position std (m)")
    p.add_argument("--sigma-theta-L", dest="sigma_theta_L", type=_value, help="localization heading std")
    p.add_argument("--loc-mode", dest="loc_mode", choices=("fixed", "gaussian"))
    p.add_argument("--out", help="output path")
    if run_flags:
        p.add_argument("--methods", help="comma-separated subset of cbm,cbm_no_consensus,icp,gnss")
        p.add_argument("--workers", type=int)
        p.add_argument("--no-timing", action="store_true", help="leave runtime_ms empty (byte-stable CSV)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coopcal", description=__doc__.splitlines()[0])
    ap.add_argument("--print-config", action="store_true", help="print the default configuration as YAML and exit")
    sub = ap.add_subparsers(dest="verb")

    g = sub.add_parser("generate", help="write a synthetic frame suite")
    _add_common(g, run_flags=False)

    r = sub.add_parser("run", help="evaluate methods on a frame file (or a freshly generated suite)")
    r.add_argument("frames_file", nargs="?", help="FrameFile; generated from the config when omitted")
    _add_common(r, run_flags=True)

    s = sub.add_parser("sweep", help="regenerate and evaluate one suite per axis value")
    _add_common(s, run_flags=True)
    s.add_argument("--axis", required=True, choices=SWEEP_AXES)
    s.add_argument("--values", required=True, help="comma-separated values")

    i = sub.add_parser("inspect", help="pretty-print one frame")
    i.add_argument("frames_file")
    i.add_argument("--index", type=int, default=0)
    i.add_argument("--config", help="YAML run configuration (matcher parameters)")
    return ap


def resolve_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if getattr(args, "config", None) else cfgmod.RunConfig()
    for flag, (sec, key) in OVERRIDES.items():
        v = getattr(args, flag, None)
        if v is not None:
            cfg = cfgmod.override(cfg, f"{sec}.{key}", v)
    if getattr(args, "methods", None):
        cfg = cfgmod.override(cfg, "methods", args.methods)
    if getattr(args, "workers", None) is not None:
        cfg = cfgmod.override(cfg, "workers", args.workers)
    if getattr(args, "no_timing", False):
        cfg = replace(cfg, record_runtime=False)
    return cfg


def format_table(summary: Sequence[dict], keys: Sequence[str]) -> str:
    cols = list(keys) + [
        "frames",
        "precision",
        "recall",
        "ad_m",
        "rre_deg_median",
        "rte_m_median",
        "map_07",
        "runtime_ms_mean",
    ]

    def cell(v):
        if isinstance(v, float):
            return "-" if math.isnan(v) else f"{v:.4g}"
        return str(v)

    body = [[cell(r[c]) for c in cols] for r in summary]
    widths = [max(len(c), *(len(b[k]) for b in body)) if body else len(c) for k, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def cmd_generate(args) -> int:
    cfg = resolve_config(args)
    out = args.out or cfg.paths.frames
    frames = generate_suite(cfg.suite, cfg.noise)
    write_frames(frames, out)
    print(f"wrote {len(frames)} frames (N={cfg.suite.n_objects}, eta={cfg.suite.eta}, seed={cfg.noise.seed}) to {out}")
    return 0


def _evaluate(cfg, frames, keys=("method",)):
    rows = run_frames(frames, cfg.methods, cfg.method_params(), cfg.workers, cfg.record_runtime)
    return rows, summarize(rows, keys)


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    frames = read_frames(args.frames_file) if args.frames_file else generate_suite(cfg.suite, cfg.noise)
    rows, summary = _evaluate(cfg, frames)
    out = args.out or cfg.paths.results
    export_results(rows, out)
    print(format_table(summary, ("method",)))
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _sweep_values(axis: str, text: str) -> list:
    vals = [v.strip() for v in text.split(",") if v.strip()]
    if not vals:
        raise UsageError("--values: empty value list")
    out = []
    for v in vals:
        x = _value(v)
        if axis in ("sigma_theta", "sigma_theta_L"):
            x = cfgmod.parse_angle(x, f"--values ({axis})")
        elif not isinstance(x, (int, float)):
            raise UsageError(f"--values: {v!r} is not a number")
        out.append(float(x))
    return out


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    values = _sweep_values(args.axis, args.values)
    if args.axis in ("sigma_p_L", "sigma_theta_L") and cfg.noise.loc_mode != "gaussian":
        cfg = cfgmod.override(cfg, "noise.loc_mode", "gaussian")
        print("note: localization sweep uses loc_mode=gaussian", file=sys.stderr)
    sec, key = OVERRIDES[args.axis]
    rows = []
    for v in values:
        c = cfgmod.override(cfg, f"{sec}.{key}", v)
        rows += run_frames(
            generate_suite(c.suite, c.noise), c.methods, c.method_params(), c.workers, c.record_runtime
        )
    out = args.out or cfg.paths.results
    export_results(rows, out)
    print(format_table(summarize(rows, (args.axis, "method")), (args.axis, "method")))
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_inspect(args) -> int:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    frames = read_frames(args.frames_file)
    if not 0 <= args.index < len(frames):
        raise UsageError(f"--index {args.index} out of range (file has {len(frames)} frames)")
    f = frames[args.index]
    t_tilde = relative_transform_from_poses(f.ego_view.pose_measurement, f.coop_view.pose_measurement)

    def tf(t):
        return f"angle={math.degrees(t.angle):+.4f}deg t=({t.tx:+.4f}, {t.ty:+.4f}) m"

    print(f"frame {f.frame_index}  seed={f.seed}  eta={f.eta}")
    print(f"  objects: ground truth {len(f.ground_truth)}, ego {len(f.ego_view)}, coop {len(f.coop_view)}")
    print(f"  co-visible pairs ({len(f.covisible_truth)}): {list(f.covisible_truth)}")
    print(f"  T_true   {tf(f.T_true)}")
    print(f"  T_tilde  {tf(t_tilde)}")
    ms, est, fallback = calibrate_frame(f, "cbm", cfg.method_params())
    print(f"  cbm      {tf(est)}{'  (fallback)' if fallback else ''}")
    print(f"  cbm pairs ({len(ms)}, status {ms.status}): {list(ms.pairs)}")
    coop = to_ego_frame(f.coop_view, f.ego_view.pose_measurement)
    for name, view in (("ego", f.ego_view), ("coop (ego frame, uncalibrated)", coop)):
        print(f"  {name}:")
        for k, b in enumerate(view.objects):
            print(f"    [{k:2d}] {b.id!s:>10}  x={b.x:+8.3f}  y={b.y:+8.3f}  heading={math.degrees(b.heading):7.2f}deg")
    return 0


VERBS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "inspect": cmd_inspect}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.print_config:
            print(cfgmod.default_yaml(), end="")
            return 0
        if not args.verb:
            parser.print_usage(sys.stderr)
            return 2
        return VERBS[args.verb](args)
    except (UsageError, cfgmod.ConfigError) as exc:
        print(f"coopcal: error: {exc}", file=sys.stderr)
        return 2
    except (FrameFormatError, OSError, RuntimeError, ValueError) as exc:
        print(f"coopcal: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
