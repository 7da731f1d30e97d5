"""Shared helpers for building scenarios and small simulations."""

from __future__ import annotations

import pytest

from clocksim.harness import Scenario, run_scenario, scenario_from_dict

ALL_STRATEGIES = ("silent", "crash_recover", "equivocator", "rusher",
                  "value_splitter", "timing_skewer")


def scenario_doc(**over) -> dict:
    """Desk-scale scenario document; keyword overrides are shallow for
    the top level and merged for the nested timing/pulses blocks."""
    doc = {
        "name": over.pop("name", "test"),
        "algorithm": over.pop("algorithm", "clocksynch"),
        "seed": over.pop("seed", 0),
        "duration": over.pop("duration", "2500"),
        "timing": {
            "n": 7, "f": 2, "delta": "0.8", "pi": "0.2", "rho": "0",
            "M": 10000, "Cycle": "100", "sigma": "3",
        },
        "pulses": {"mode": "jitter"},
    }
    doc["timing"].update(over.pop("timing", {}))
    doc["pulses"].update(over.pop("pulses", {}))
    doc.update(over)
    return doc


def make_scenario(**over) -> Scenario:
    seed = over.get("seed", 0)
    return scenario_from_dict(scenario_doc(**over), seed=seed)


def byz_windows(nodes, strategy, start="0", end="9999"):
    return {"windows": [{"start": start, "end": end, "node": nd,
                         "strategy": strategy} for nd in nodes]}


def run_clean(**over):
    """Run a scenario and fail on any reported violation."""
    rep, trace = run_scenario(make_scenario(**over))
    assert not rep.violations, rep.violations[:3]
    return rep, trace


@pytest.fixture(scope="session")
def tmp_workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("work")
