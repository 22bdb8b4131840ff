#!/usr/bin/env python3
"""Derive the default listener-model constants.

Sweeps the visual effective-level gain until the simulated mean
audiovisual benefit in noise matches the 5.0 dB reference for the default
population, then reports the training-curve and test-retest statistics the
shipped training/jitter defaults produce. The winning values are frozen
into avsync.listener as DEFAULT_VISUAL_GAIN and the PopulationConfig
defaults.

Run: python3 scripts/calibrate_listener_model.py [--seeds 10]
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

sys.path.insert(0, "src")

from avsync.experiment import SimConfig, simulate, summarize
from avsync.listener import PopulationConfig


def mean_noise_benefit(gain: float, seeds: range) -> float:
    values = []
    for seed in seeds:
        config = SimConfig(population=PopulationConfig(visual_gain=gain))
        report = summarize(simulate(config, seed))
        values.append(report["av_benefit"]["noise"]["mean"])
    return float(np.mean(values))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--target", type=float, default=5.0)
    args = parser.parse_args()
    seeds = range(args.seeds)

    # bisection on the monotone gain -> benefit map
    lo, hi = 2.0, 9.0
    b_lo, b_hi = mean_noise_benefit(lo, seeds), mean_noise_benefit(hi, seeds)
    print(f"benefit at g={lo}: {b_lo:.2f} dB, at g={hi}: {b_hi:.2f} dB")
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        b_mid = mean_noise_benefit(mid, seeds)
        print(f"  g={mid:.3f} -> benefit {b_mid:.3f} dB")
        if b_mid < args.target:
            lo = mid
        else:
            hi = mid
    gain = round(0.5 * (lo + hi), 1)
    print(f"\nderived visual gain: {gain} dB per unit speechreading score")

    config = SimConfig(population=PopulationConfig(visual_gain=gain))
    curves, diffs = [], []
    for seed in seeds:
        report = summarize(simulate(config, seed))
        curve = report["training_curve"]
        curves.append(curve["1"] - curve["5"])
        for name, entry in report["conditions"].items():
            if name.startswith("AV") and "Noise" in name and "test_retest_std" in entry:
                diffs.append(entry["test_retest_std"])
    print(f"training improvement trial 1 -> 5: {np.mean(curves):.2f} dB (reference 2.9)")
    print(f"AV-noise test-retest std: {np.mean(diffs):.2f} dB (reference ~2)")
    print(f"final benefit at g={gain}: {mean_noise_benefit(gain, seeds):.3f} dB")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
