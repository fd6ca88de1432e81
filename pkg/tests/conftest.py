import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for exact_q0

from spectra4 import ScanConfig, find_eigenvalues, parse_config

REFERENCE = {
    "a1": 1.0, "a2": 1.0, "beta": [0.0, 1.0], "delta": [1.0, 1.0],
    "q_left": "0", "q_right": "0",
}
HAND = {
    "a1": 1.0, "a2": 1.0, "beta": [0.0, 1.0], "delta": [0.0, 0.0],
    "q_left": "0", "q_right": "0", "strict_validation": False,
}
BETA10 = {
    "a1": 1.0, "a2": 1.0, "beta": [1.0, 0.0], "delta": [0.0, 0.0],
    "q_left": "0", "q_right": "0", "strict_validation": False,
}
# a generic configuration: different segment coefficients, varying q
GENERIC = {
    "a1": 1.2, "a2": 0.8, "beta": [0.5, 1.0], "delta": [0.7, -0.4],
    "q_left": "cos(x)", "q_right": "1/(x+2)+x^2",
}


def _problem(doc):
    return parse_config(json.dumps(doc))


@pytest.fixture(scope="session")
def ref_problem():
    return _problem(REFERENCE)


@pytest.fixture(scope="session")
def hand_problem():
    return _problem(HAND)


@pytest.fixture(scope="session")
def beta10_problem():
    return _problem(BETA10)


@pytest.fixture(scope="session")
def generic_problem():
    return _problem(GENERIC)


@pytest.fixture(scope="session")
def ref_spectrum_12(ref_problem):
    """Reference spectrum to s = 12 (positive and negative axes)."""
    cfg = ScanConfig(s_min=0.0, s_max=12.0, include_negative=True)
    return find_eigenvalues(ref_problem, cfg)


@pytest.fixture(scope="session")
def ref_spectrum_50(ref_problem):
    """Reference spectrum to s = 50; shared by the heavyweight checks."""
    cfg = ScanConfig(s_min=0.0, s_max=50.0, include_negative=True)
    return find_eigenvalues(ref_problem, cfg)


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "ref.json"
    path.write_text(json.dumps(REFERENCE), encoding="utf-8")
    return path
