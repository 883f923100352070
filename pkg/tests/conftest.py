import json
import os

import numpy as np
import pytest

DATA = os.path.join(os.path.dirname(__file__), "data")
FOUR_ARM_MEANS = (2.0, 1.8, 0.5, 0.2)
FOUR_ARM_GAPS = np.array([0.0, 0.2, 1.5, 1.8])
FIVE_ARM_MEANS = (2.0, 1.8, 1.5, 1.0, 0.5)
FIVE_ARM_GAPS = np.array([0.0, 0.2, 0.5, 1.0, 1.5])


@pytest.fixture(scope="session")
def oracle():
    """Reference values evaluated at high precision by tools/derive_oracles.py."""
    with open(os.path.join(DATA, "oracle_values.json")) as fh:
        return json.load(fh)


def config_dict(**overrides):
    """Small passive UCB experiment, easy to tweak per test."""
    base = {
        "schema_version": 1,
        "name": "small",
        "arms": [{"kind": "gaussian", "mean": m} for m in FOUR_ARM_MEANS],
        "schedule": {"kind": "deterministic", "epsilon": 0.1},
        "observer": {"kind": "passive", "p": "uniform"},
        "policy": {"name": "ucb_passive"},
        "horizon": 200,
        "replications": 5,
        "seed": 11,
    }
    base.update(overrides)
    return base


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    """Remember one acceptance line; printed at the end of the session."""
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
