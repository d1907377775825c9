"""Run every sweep config under configs/ and write one result folder per config.

Usage: python3 scripts/run_panels.py [--out results] [--threads 4] [--detail]
"""

import argparse
import sys
from pathlib import Path

from cvqkd_wdm.io import RunManifest, config_digest, emit_results, load_config
from cvqkd_wdm.sweep import run_scenario, sweep

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--detail", action="store_true")
    args = ap.parse_args()

    failures = 0
    for path in sorted(CONFIGS.glob("*.yaml")):
        config, axes = load_config(path)
        results = sweep(config, axes, threads=args.threads) if axes else [run_scenario(config)]
        dest = Path(args.out) / path.stem
        emit_results(results, dest, detail=args.detail,
                     manifest=RunManifest.start(config_digest(config, axes)))
        bad = sum(1 for r in results if r.error)
        failures += bad
        print(f"{path.name}: {len(results)} rows -> {dest} ({bad} failed)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
