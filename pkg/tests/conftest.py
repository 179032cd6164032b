import numpy as np
import pytest
from hypothesis import settings

from nodalrec.asymptotics import synthesize_nodal_data
from nodalrec.fixtures import (
    cosine_roundtrip_problem,
    cosine_roundtrip_reference,
    free_problem,
    worked_example_problem,
    worked_example_reference,
)
from nodalrec.inverse import reconstruct
from nodalrec.spectrum import compute_spectrum, nodal_data

settings.register_profile("suite", deadline=None, max_examples=40)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def worked_problem():
    return worked_example_problem()


@pytest.fixture(scope="session")
def worked_ref():
    return worked_example_reference()


@pytest.fixture(scope="session")
def cosine_problem():
    return cosine_roundtrip_problem()


@pytest.fixture(scope="session")
def cosine_ref():
    return cosine_roundtrip_reference()


@pytest.fixture(scope="session")
def free_prob():
    return free_problem()


@pytest.fixture(scope="session")
def worked_synth_data(worked_problem):
    return synthesize_nodal_data(worked_problem, (50, 400))


# heavy numeric fixtures, shared between the unit suite and acceptance


@pytest.fixture(scope="session")
def worked_synth_recon(worked_synth_data):
    return reconstruct(worked_synth_data)


@pytest.fixture(scope="session")
def free_spectrum_fine(free_prob):
    return compute_spectrum(free_prob, (5, 30), tol=1e-11, points=32768)


@pytest.fixture(scope="session")
def free_numeric_data(free_prob):
    return nodal_data(free_prob, (5, 30), tol=1e-11, points=32768)


@pytest.fixture(scope="session")
def worked_numeric_nodes(worked_problem):
    return nodal_data(worked_problem, (20, 60))


@pytest.fixture(scope="session")
def worked_spectrum_3060(worked_problem):
    return compute_spectrum(worked_problem, (30, 60))


@pytest.fixture(scope="session")
def cosine_numeric_data(cosine_problem):
    return nodal_data(cosine_problem, (20, 120))


@pytest.fixture(scope="session")
def cosine_recon(cosine_numeric_data):
    return reconstruct(cosine_numeric_data)


def sup(a, b=0.0):
    return float(np.max(np.abs(np.asarray(a) - b)))
