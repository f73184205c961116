"""Run a scenario file end to end and emit plot data.

Writes a small scenario to disk, runs it the same way the command line
tool does, and prints the resulting report paths.  Equivalent shell usage:

    dualgen mc scenario.json --out reports/
"""

import json
import tempfile
from pathlib import Path

from dualgen import emit_plot_data, load_scenario, run_scenario

SCENARIO = {
    "name": "demo-random-walk",
    "mode": "verify-matrix",
    "process": {
        "dim": 1,
        "jumps": [
            {"displacement": [1.0], "rate": 1.2},
            {"displacement": [-1.0], "rate": 0.8},
        ],
    },
    "grid": {"lower": [0.0], "upper": [10.0], "spacing": [1.0]},
    "cone": {"type": "pareto"},
    "probes": [{"x": [3.0], "y": [5.0], "t": 1.0}],
}

MC_SCENARIO = {
    "name": "demo-bm-pairing",
    "mode": "mc",
    "process": {"dim": 1, "diffusion": ["0.5"], "diffusion_deriv": ["0"]},
    "probes": [
        {"x": [0.5], "y": [0.0], "t": 1.0},
        {"x": [1.5], "y": [0.0], "t": 1.0},
    ],
    "path_config": {"n_paths": 20000, "dt": 0.005, "seed": 99},
}


def main():
    out = Path(tempfile.mkdtemp(prefix="dualgen_demo_"))
    for doc in (SCENARIO, MC_SCENARIO):
        scenario = load_scenario(doc)
        report = run_scenario(scenario, out_dir=str(out / scenario.name))
        status = "pass" if report["pass"] else "FAIL"
        print(f"{scenario.name} [{scenario.mode}]: {status}")
        if scenario.mode == "mc":
            plot = out / scenario.name / "plot_data.csv"
            emit_plot_data(report, plot)
            print("  plot data:", plot)
        print("  report:", out / scenario.name / "report.json")
    print()
    print(json.dumps(json.loads(
        (out / "demo-bm-pairing" / "report.json").read_text())["results"]
        ["probes"][0], indent=2))


if __name__ == "__main__":
    main()
