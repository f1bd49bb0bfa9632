"""Benchmark the compiled collision kernels against the numpy fallback.

Run after an editable install:

    python3 benchmarks/bench_kernels.py [--pairs 200000] [--scenes 2000]
"""

import argparse
import math
import time

import numpy as np

from drivebench import _kernels
from drivebench._kernels import _fallback
from drivebench.planner import (AgentForecast, Command, Pose2,
                                select_trajectory)
from drivebench.sim import build_proposal_set

try:
    from drivebench._kernels import _core
except ImportError:
    _core = None


def random_boxes(rng, n):
    return np.column_stack([
        rng.uniform(-8, 8, n), rng.uniform(-8, 8, n),
        rng.uniform(-math.pi, math.pi, n),
        rng.uniform(0.1, 3.0, n), rng.uniform(0.1, 3.0, n),
    ])


def bench(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_overlap_mask(n_pairs):
    rng = np.random.default_rng(0)
    a = random_boxes(rng, n_pairs)
    b = random_boxes(rng, n_pairs)
    rows = {}
    if _core is not None:
        rows["native"] = bench(lambda: _core.overlap_mask(a, b))
    rows["python"] = bench(lambda: _fallback.overlap_mask(a, b))
    return rows


def bench_plan_collides(n_calls):
    rng = np.random.default_rng(1)
    egos = [random_boxes(rng, 6) for _ in range(n_calls)]
    agents = [np.stack([random_boxes(rng, 6) for _ in range(6)])
              for _ in range(n_calls)]

    def run(impl):
        for e, a in zip(egos, agents):
            impl.plan_collides(e, a)

    rows = {}
    if _core is not None:
        rows["native"] = bench(lambda: run(_core), repeat=3)
    rows["python"] = bench(lambda: run(_fallback), repeat=3)
    return rows


def bench_selection(n_scenes):
    rng = np.random.default_rng(2)
    proposals = build_proposal_set(5.0, 6, 6, 0.5)
    scenes = []
    for _ in range(n_scenes):
        agents = []
        for _ in range(3):
            start = np.array([rng.uniform(2, 12), rng.uniform(-4, 4)])
            vel = rng.uniform(-2, 2, 2)
            steps = np.arange(1, 13)[:, None] * 0.5
            modes = np.stack([start + steps * vel, start + steps * vel * 0.7])
            agents.append(AgentForecast(
                (1.9, 4.2), Pose2(*start, math.atan2(vel[1], vel[0])),
                modes, np.array([0.8, 0.4])))
        scenes.append(agents)

    def run():
        for agents in scenes:
            select_trajectory(proposals, Command.GO_STRAIGHT, agents,
                              (1.85, 4.08))

    rows = {}
    saved = (_kernels.obb_overlap, _kernels.overlap_mask, _kernels.plan_collides)
    try:
        if _core is not None:
            _kernels.plan_collides = _core.plan_collides
            rows["native"] = bench(run, repeat=3)
        _kernels.plan_collides = _fallback.plan_collides
        rows["python"] = bench(run, repeat=3)
    finally:
        _kernels.obb_overlap, _kernels.overlap_mask, _kernels.plan_collides = saved
    return rows


def print_table(name, unit_count, rows):
    print(f"\n{name}  ({unit_count:,} units)")
    base = rows.get("python")
    for backend, seconds in rows.items():
        rate = unit_count / seconds
        speedup = f"  {base / seconds:5.1f}x" if backend == "native" and base else ""
        print(f"  {backend:<8} {seconds * 1e3:9.2f} ms   {rate:12,.0f}/s{speedup}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=200_000)
    parser.add_argument("--calls", type=int, default=20_000)
    parser.add_argument("--scenes", type=int, default=2_000)
    args = parser.parse_args()

    if _core is None:
        print("compiled extension not available; timing the fallback only")
    print_table("overlap_mask (batched pair test)", args.pairs,
                bench_overlap_mask(args.pairs))
    print_table("plan_collides (6 steps x 6 agent modes)", args.calls,
                bench_plan_collides(args.calls))
    print_table("select_trajectory (6 candidates, 3 agents)", args.scenes,
                bench_selection(args.scenes))


if __name__ == "__main__":
    main()
