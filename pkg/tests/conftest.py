import numpy as np
import pytest

from swimlap import LapScenario, get_animal, simulate
from swimlap.pipeline import RunConfig, analyze_trial


def make_config(animal, **kwargs) -> RunConfig:
    defaults = dict(inputs=("unused.csv",), output_dir="unused", animal=animal)
    defaults.update(kwargs)
    return RunConfig(**defaults)


@pytest.fixture(scope="session")
def default_lap():
    """One zero-noise lap: 30 m straights, 1.5 m semicircle, 4 m/s cruise."""
    scenario = LapScenario(animal=get_animal("TT01"))
    truth, tag = simulate(scenario)
    result = analyze_trial(tag, make_config(scenario.animal), "default_lap")
    return scenario, truth, tag, result


@pytest.fixture(scope="session")
def preset_trials():
    """Analyzed 8-lap trials for the three study-animal presets."""
    from swimlap import preset_scenario

    out = {}
    for name in ("TT01", "TT02", "TT03"):
        scenario = preset_scenario(name)
        truth, tag = simulate(scenario)
        result = analyze_trial(tag, make_config(scenario.animal), name)
        out[name] = (scenario, truth, tag, result)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
