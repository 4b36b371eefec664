import json
import os
import sys

import numpy as np
import pytest

# Ensure project root is on sys.path for test modules
PROJECT_ROOT = os.path.dirname(os.path.dirname(__file__))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

os.environ.setdefault("HAMLEARN_ENV", "testing")

from hamlearn.fixtures import create_model_generator  # noqa: E402

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")
DATA_DIR = os.path.join(PROJECT_ROOT, "data")


@pytest.fixture
def generator():
    return create_model_generator(seed=0)


@pytest.fixture
def single_qubit(generator):
    return generator.single_qubit_z()


@pytest.fixture
def ising2(generator):
    return generator.ising_chain(2)


@pytest.fixture
def ising3(generator):
    return generator.ising_chain(3)


@pytest.fixture
def golden():
    """Hand-derived values for h = ln2 Z with perturbers I, X, Y, Z"""
    with open(os.path.join(GOLDEN_DIR, "single_qubit.json"), "r") as f:
        data = json.load(f)
    for key in ("C", "B_Z"):
        pairs = np.asarray(data[key], dtype=float)
        data[key] = pairs[..., 0] + 1j * pairs[..., 1]
    return data
