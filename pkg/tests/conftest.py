import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture(scope="session")
def run_cache():
    """Run each (scenario, policy) pair at most once per test session; the
    simulations are deterministic, so sharing results across tests is safe."""
    from hybridnav.scenario import load_scenario
    from hybridnav.simulator import run_scenario

    cache = {}

    def run(name: str, policy: str = "hybrid", seed: int | None = None):
        key = (name, policy, seed)
        if key not in cache:
            overrides = {"nav.policy": policy}
            if seed is not None:
                overrides["sim.seed"] = seed
            scenario = load_scenario(SCENARIO_DIR / f"{name}.json",
                                     overrides=overrides)
            cache[key] = (scenario, *run_scenario(scenario))
        return cache[key]

    return run
