#!/usr/bin/env python3
"""Closed-loop basin sweeps: 40x40 starting grid x 4 headings per path.

Labels every run converged/critical and reports the aggregate fractions.
Takes a couple of minutes; writes out/<scenario name>/basin.csv.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from gvfpath.cli import main  # noqa: E402
from gvfpath.scenario import bundled_config_text  # noqa: E402

if __name__ == "__main__":
    for name in ("ellipse_experiment", "cassini_experiment"):
        cfg = pathlib.Path(f"/tmp/{name}.cfg")
        cfg.write_text(bundled_config_text(f"{name}.cfg"))
        print(f"== basin {name} ==")
        rc = main(["basin", str(cfg), "-o", f"out/{name}"])
        if rc != 0:
            sys.exit(rc)
