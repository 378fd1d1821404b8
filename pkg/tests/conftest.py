from pathlib import Path

import pytest

from src.app.lib.data_files import read_data_file
from src.app.schemas.distribution import KumaParams
from src.app.schemas.fit import PhaseISample
from src.app.services.mc_evaluator import MonteCarloEvaluator

REPO_ROOT = Path(__file__).resolve().parent.parent
PHASE1_PATH = REPO_ROOT / "data" / "phase1_sample.txt"


@pytest.fixture(scope="session")
def phase1_path() -> Path:
    return PHASE1_PATH


@pytest.fixture(scope="session")
def phase1_sample() -> PhaseISample:
    return PhaseISample(values=read_data_file(PHASE1_PATH).values)


@pytest.fixture(scope="session")
def humidity_estimates() -> KumaParams:
    """Printed estimates of the yearly relative-humidity series."""
    return KumaParams(theta1=5.631625, theta2=13815.307376)


@pytest.fixture
def evaluator() -> MonteCarloEvaluator:
    """In-process evaluator with small chunks, so chunking is exercised even for small N."""
    return MonteCarloEvaluator(workers=1, chunk_size=64)
