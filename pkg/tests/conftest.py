import numpy as np
import pytest

from prognosis.data_model import SyntheticCohortSpec, generate_synthetic_cohort
from prognosis.glm import published_model


@pytest.fixture(scope="session")
def reference_model():
    return published_model()


@pytest.fixture(scope="session")
def small_cohort():
    """120-patient deterministic synthetic cohort shared by fast tests."""
    return generate_synthetic_cohort(SyntheticCohortSpec(n_patients=120, seed=7))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)
