import numpy as np
import pytest

from utils.drift import DriftSpec, PsiSpec
from utils.noise import NoiseSpec
from utils.triple import SpectralDomain, bump_field


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def dom32():
    return SpectralDomain(32)


@pytest.fixture
def pme():
    """Medio poroso Ψ(s) = s|s|."""
    return DriftSpec(psi=PsiSpec(terms=((1.0, 2.0),)))


@pytest.fixture
def fast_diffusion():
    return DriftSpec(psi=PsiSpec(terms=((1.0, 0.5),)))


@pytest.fixture
def linear():
    return DriftSpec(psi=PsiSpec(terms=((1.0, 1.0),)))


@pytest.fixture
def additive_noise():
    return NoiseSpec.from_decay(0.1, 2.0, 6)


@pytest.fixture
def no_noise():
    return NoiseSpec.from_decay(0.0, 1.0, 1)


@pytest.fixture
def bump32(dom32):
    return bump_field(dom32, 0.5, 0.3, 1.0)
