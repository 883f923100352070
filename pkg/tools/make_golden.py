"""Record fixed-seed regression traces into tests/data/golden_traces.json.

Only re-run after a deliberate change to the simulation semantics, and review
the diff of the JSON file before committing it.
"""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from golden_cases import CASES  # noqa: E402
from freeobs.harness.config import parse_config  # noqa: E402
from freeobs.harness.engine import run_single  # noqa: E402


def record():
    out = {}
    for name, obj in CASES.items():
        (config,) = parse_config(obj)
        trace = run_single(config, 3)
        out[name] = {"stages": trace.stages.tolist(), "regret": trace.regret.tolist(),
                     "pulls": trace.pulls.tolist(), "free": trace.free.tolist()}
    return out


if __name__ == "__main__":
    path = os.path.join(os.path.dirname(__file__), "..", "tests", "data", "golden_traces.json")
    with open(path, "w") as fh:
        json.dump(record(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(os.path.normpath(path))
