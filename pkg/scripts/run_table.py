"""Monte Carlo table for all three simulated situations.

    python3 scripts/run_table.py --replications 100 --seed 2024 --out results/
"""

import argparse
import time
from pathlib import Path

from sdspeckle.filters import FilterConfig
from sdspeckle.simulation import FILTER_NAMES, SITUATIONS, protocol_csv, run_protocol


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--replications", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--eta", type=float, default=0.9)
    ap.add_argument("--dof", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    config = FilterConfig(eta=args.eta, dof=args.dof)
    for sid, situation in SITUATIONS.items():
        t0 = time.perf_counter()
        result = run_protocol(situation, FILTER_NAMES, args.replications, args.seed, config,
                              workers=args.workers)
        text = protocol_csv(result)
        (args.out / f"situation{sid}.csv").write_text(text)
        print(f"# situation {sid}: {time.perf_counter() - t0:.0f} s")
        print(text)


if __name__ == "__main__":
    main()
