"""Print c_grid and c_wz for configs/cross_scheme.yaml from 200 calibration seeds.

The calibration master seed differs from the config's, so the two seed sets
do not overlap.
"""

import sys

from semiflow.harness.calibrate import calibrate_cross_scheme
from semiflow.harness.config import SeedSpec, load_config

CALIBRATION_MASTER = 99_000_001

cfg = load_config(sys.argv[1] if len(sys.argv) > 1 else "configs/cross_scheme.yaml")
seeds = SeedSpec(master=CALIBRATION_MASTER, count=200).resolve()
overlap = set(seeds) & set(cfg.seed_list())
if overlap:
    sys.exit(f"calibration seeds overlap the run seeds: {sorted(overlap)[:5]}")
consts = calibrate_cross_scheme(cfg, seeds)
for k, v in consts.items():
    print(f"{k}: {v:.6g}")
