#!/usr/bin/env python3
"""Regenerate the committed golden outputs of the scenario suite.

Run from the repository root after an intentional change to the pipeline,
then review the diff before committing.
"""

import time
from pathlib import Path

from rewardcentroids.gridworld import run_scenario

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
GOLDENS = ROOT / "goldens"


def main() -> None:
    GOLDENS.mkdir(exist_ok=True)
    start = time.time()
    for config in sorted(CONFIGS.glob("fig*.json")):
        t0 = time.time()
        run_scenario(config.stem, config, GOLDENS)
        print(f"{config.stem:12s} {time.time() - t0:5.1f}s")
    print(f"done in {time.time() - start:.1f}s -> {GOLDENS}")


if __name__ == "__main__":
    main()
