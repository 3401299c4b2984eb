import os

import numpy as np
import pytest
from hypothesis import settings

from ymlab.algebra import Group
from ymlab.lattice import Lattice

settings.register_profile("ci", deadline=None, max_examples=25, derandomize=True)
settings.register_profile("dev", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small():
    """3^3 lattice, unit spacing."""
    return Lattice(3, (3, 3, 3))


@pytest.fixture(params=[Group.U1, Group.SU2], ids=["u1", "su2"])
def group(request):
    return request.param
