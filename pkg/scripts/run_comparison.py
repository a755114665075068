#!/usr/bin/env python3
"""Run the GVF / LOS / NGL comparison from the shared starting pose.

Emits per-controller distance series and the overshoot / settling / steady
error table under out/comparison_experiment/.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from gvfpath.cli import main  # noqa: E402
from gvfpath.scenario import bundled_config_text  # noqa: E402

if __name__ == "__main__":
    cfg = pathlib.Path("/tmp/comparison_experiment.cfg")
    cfg.write_text(bundled_config_text("comparison_experiment.cfg"))
    sys.exit(main(["compare", str(cfg), "-o", "out/comparison_experiment"]))
