import copy
import time
from importlib import resources

import pytest

from gridmarket.engine import Simulator
from gridmarket.scenario import load_scenario, scenario_from_dict


def scenario_path(name: str):
    return resources.files("gridmarket") / "scenarios" / name


#: minimal valid scenario; tests deep-copy and tweak what they need
BASE_SCENARIO_DICT = {
    "n_days": 2,
    "warmup_days": 0,
    "seed": 7,
    "users": {
        "min_load_mw": [0.001, 0.002],
        "max_load_mw": [0.003, 0.004],
        "optimizing_fraction": 0.0,
        "phase_jitter_minutes": 15,
    },
    "balancing": {"threshold_mw": 0.05, "markup": 0.4, "markdown": 0.2},
    "forecasting": {},
    "renewables": {},
    "utilities": [{"id": "U1", "users": 50}],
    "producers": [
        {"id": "P1", "kind": "basic", "capacity_mw": 1.0,
         "marginal_price": 10.0, "balancing_share": 0.3},
        {"id": "P2", "kind": "basic", "capacity_mw": 1.0,
         "marginal_price": 30.0, "balancing_share": 0.5},
    ],
}


def make_scenario(**overrides):
    """Small scenario built from BASE_SCENARIO_DICT with nested overrides.

    Top-level keys replace wholesale except the dict-valued sections
    (users, balancing, forecasting, renewables), which merge.
    """
    raw = copy.deepcopy(BASE_SCENARIO_DICT)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key].update(value)
        else:
            raw[key] = value
    return scenario_from_dict(raw)


@pytest.fixture(scope="session")
def default_run():
    """The shipped validation scenario, simulated once per test session.

    Returns (scenario, result, elapsed_seconds); shared by the
    acceptance tests so the 33-day run happens only once.
    """
    scenario = load_scenario(scenario_path("default.toml"))
    t0 = time.perf_counter()
    result = Simulator(scenario).run()
    elapsed = time.perf_counter() - t0
    return scenario, result, elapsed
