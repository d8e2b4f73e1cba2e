import numpy as np
import pytest

from earlybias import SimulationConfig, sample_events
from earlybias.censoring import ObservedDataset


@pytest.fixture(scope="session")
def default_dataset():
    """The full-size simulation (N = 100000, default seed)."""
    return sample_events(SimulationConfig())


@pytest.fixture(scope="session")
def small_dataset():
    return sample_events(SimulationConfig(n_events=5000, seed=7))


def make_observed(probs, positive, scheduled=None, t_c=1.0, filtered=False):
    probs = np.asarray(probs, dtype=float)
    if scheduled is None:
        scheduled = np.zeros(len(probs))
    return ObservedDataset(
        collection_time=t_c,
        event_ids=np.array([f"x{i}" for i in range(len(probs))], dtype=object),
        probabilities=probs,
        scheduled=np.asarray(scheduled, dtype=float),
        positive=np.asarray(positive, dtype=bool),
        filtered=filtered,
    )


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
