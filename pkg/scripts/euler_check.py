#!/usr/bin/env python3
"""One-off validation: dense-grid Euler integration of dZ = Z_- d(xi o X)
against the exact pathwise stochastic exponential.

Not part of the test suite; the exact evaluator needs no discretization, and
this script exists to show the two agree as the grid refines.

Usage: python scripts/euler_check.py [--steps N] [--seed S]
"""

import argparse
import math
import sys

import numpy as np

from stochexp.levycalc import GaussianJumps, LevyTriplet, Truncation, exp_return
from stochexp.mcoracle import SimConfig, pathwise_stoch_exp, simulate
from stochexp.numkernel import RandomStream


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=12)
    args = parser.parse_args(argv)

    trip = LevyTriplet(0.1, 0.04, GaussianJumps(1.0, 0.0, 0.04),
                       Truncation.zero())
    xi = exp_return(1.5)
    horizon = 1.0

    batch = simulate(trip, None, SimConfig(1, args.seed, horizon))
    rec = batch.record(0)
    exact = pathwise_stoch_exp(xi, trip, rec, horizon)

    # Brownian bridge through the terminal value on a uniform grid, jumps
    # inserted at their drawn times; Euler-integrate the image increments
    n = args.steps
    dt = horizon / n
    bridge_rng = RandomStream(args.seed).child("bridge")
    increments = bridge_rng.normals(n) * math.sqrt(dt) * math.sqrt(trip.sigma2)
    increments += (rec.brownian_terminal - increments.sum()) / n
    mu0 = trip.drift_no_compensation
    d0 = complex(xi.d0)
    d20 = complex(xi.d20)

    z = 1.0 + 0j
    jump_idx = np.searchsorted(np.arange(1, n + 1) * dt, rec.jump_times)
    jumps_by_step = {}
    for k, size in zip(jump_idx, rec.jump_sizes):
        jumps_by_step.setdefault(int(k), []).append(size)
    for k in range(n):
        dy = d0 * (mu0 * dt + increments[k]) + 0.5 * d20 * trip.sigma2 * dt
        z *= 1.0 + dy
        for size in jumps_by_step.get(k, []):
            z *= 1.0 + complex(xi(np.array([size]))[0])

    rel = abs(z - exact) / abs(exact)
    # the realized quadratic variation in the product converges at n^{-1/2}
    scale = 1.0 / math.sqrt(n)
    print(f"path: {len(rec.jump_sizes)} jumps, W_T = {rec.brownian_terminal:+.4f}")
    print(f"exact   = {exact:.10f}")
    print(f"euler   = {z:.10f}   ({n} steps)")
    print(f"rel gap = {rel:.3e}  (expected O(steps^-1/2) ~ {scale:.1e})")
    return 0 if rel < 10.0 * scale else 1


if __name__ == "__main__":
    sys.exit(main())
