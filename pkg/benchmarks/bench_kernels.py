"""Time the compiled and numpy matching kernels on synthetic frames.

    python benchmarks/bench_kernels.py [--objects 30 50] [--repeat 5]

Both backends are checked for identical output before timing.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from coopcal import kernels
from coopcal.context import canonicalize_headings, context_tensor, to_ego_frame
from coopcal.matcher import MatchParams
from coopcal.sim import NoiseConfig, SuiteConfig, generate_frame


def tensors(n: int, seed: int):
    area = (80.0, 80.0) if n <= 40 else (110.0, 110.0)
    f = generate_frame(seed, SuiteConfig(n_objects=n, area=area), NoiseConfig(seed=seed))
    coop = to_ego_frame(f.coop_view, f.ego_view.pose_measurement)
    out = []
    for objs in (f.ego_view.objects, coop.objects):
        objs = canonicalize_headings(objs)
        out.append(context_tensor([[o.x, o.y] for o in objs], [o.heading for o in objs]))
    return out


def timed(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--objects", type=int, nargs="+", default=[20, 30, 50])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    p = MatchParams()
    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy backend is timed")
    print(f"{'N':>4} {'backend':>8} {'coarse ms':>10} {'consensus ms':>13} {'speedup':>8}")
    for n in args.objects:
        P, Q = tensors(n, seed=n)
        base = None
        ref = None
        for name in ("python", "cython"):
            if name not in backends:
                continue
            mod = backends[name]
            t_c, (L, s) = timed(lambda: mod.coarse_match_all(P, Q, p.cos_threshold, p.sigma2, p.min_local_support), args.repeat)
            t_v, L1 = timed(lambda: mod.consensus_filter(L, p.consensus_min_votes), args.repeat)
            if ref is None:
                ref = (L, L1)
            else:
                assert np.array_equal(ref[0], L) and np.array_equal(ref[1], L1), "backends disagree"
            total = t_c + t_v
            base = base or total
            print(f"{n:>4} {name:>8} {t_c:>10.2f} {t_v:>13.2f} {base / total:>7.1f}x")


if __name__ == "__main__":
    main()
