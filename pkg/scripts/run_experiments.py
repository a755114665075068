#!/usr/bin/env python3
"""Reproduce the two path-following experiments (ellipse and Cassini oval).

Writes one trajectory CSV per initial pose, a summary per scenario, the
guiding-field grid for plotting, and the critical-point report, all under
out/<scenario name>/.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from gvfpath.cli import main  # noqa: E402

if __name__ == "__main__":
    from gvfpath.scenario import bundled_config_text

    for name in ("ellipse_experiment", "cassini_experiment"):
        cfg = pathlib.Path(f"/tmp/{name}.cfg")
        cfg.write_text(bundled_config_text(f"{name}.cfg"))
        for verb in ("simulate", "field", "critical"):
            print(f"== {verb} {name} ==")
            rc = main([verb, str(cfg), "-o", f"out/{name}"])
            if rc != 0:
                sys.exit(rc)
