import numpy as np
import pytest

from hypoflow.model import ModelSpec, build_equilibrium, compute_moments
from hypoflow.operators import GridBasis, HermiteBasis


@pytest.fixture(scope="session")
def spec_fp():
    return ModelSpec(case="fokker-planck", d=1, equilibrium="gaussian")


@pytest.fixture(scope="session")
def spec_bgk():
    return ModelSpec(case="scattering", d=1, equilibrium="gaussian", kernel="one")


@pytest.fixture(scope="session")
def moments_fp(spec_fp):
    return compute_moments(spec_fp)


@pytest.fixture(scope="session")
def moments_bgk(spec_bgk):
    return compute_moments(spec_bgk)


@pytest.fixture(scope="session")
def hermite64():
    return HermiteBasis(64)


@pytest.fixture(scope="session")
def grid256(spec_bgk):
    return GridBasis(20.0, 256, build_equilibrium(spec_bgk))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240613)
