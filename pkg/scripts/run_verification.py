#!/usr/bin/env python3
"""Run every Monte Carlo verification suite against a canned model.

Writes a temporary model spec, then drives the CLI verify command through
the yor, pii-mean, martingale and importance suites.

Usage: python scripts/run_verification.py [--paths N] [--seed S]
"""

import argparse
import json
import sys
import tempfile

from stochexp import cli

SPEC = {
    "levy": {"mu": 0.1, "sigma": 0.2,
             "jump": {"type": "gaussian_cpp", "intensity": 1.0,
                      "mean": 0.0, "var": 0.04}},
    "schedule": [
        {"time": 0.4, "law": {"type": "gaussian", "mean": 0.02, "var": 0.01}},
        {"time": 0.8, "law": {"type": "atoms",
                              "atoms": [[0.1, 0.5], [-0.1, 0.5]]}},
    ],
    "representation": {"id": "exp_return", "a": 1.5},
    "tilt": {"id": "exponential", "zeta": 0.4},
    "horizon": 1.0,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)

    doc = dict(SPEC)
    doc["sim"] = {"n_paths": args.paths, "seed": args.seed}
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(doc, fh)
        path = fh.name

    worst = 0
    for suite in ("yor", "pii-mean", "martingale", "importance"):
        print(f"== suite {suite}")
        code = cli.main(["verify", "--spec", path, "--suite", suite])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
