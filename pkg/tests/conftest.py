import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from canoncurve import curvemodel
from canoncurve.fieldkit import FieldContext

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def fp():
    return FieldContext.prime_field()


@pytest.fixture(scope="session")
def cx():
    return FieldContext.complex_approx()


@pytest.fixture(scope="session", params=["fermat", "random42"])
def samples(request):
    model = curvemodel.fermat_model() if request.param == "fermat" else curvemodel.random_model(42)
    return curvemodel.sample_curve(model, 30, seed=0)


@pytest.fixture(scope="session")
def random_samples():
    return curvemodel.sample_curve(curvemodel.random_model(42), 30, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
