import numpy as np
import pytest

from exotic_curv import metric_pipeline as mp
from exotic_curv import quat, sp2

ALPHA = quat.qnormalize(np.array([0.0, 0.3, -0.5, 0.81]))
P = quat.qnormalize(np.array([0.2, 0.1, -0.7, 0.4]))


@pytest.fixture(scope="session")
def point():
    return sp2.representative_point(0.3, 0.2, ALPHA, P)


@pytest.fixture(scope="session")
def cfg_bi():
    return mp.StageConfig(stage="bi", nu=0.5, l=1.0, s=0.0,
                          redistribute=False)


@pytest.fixture(scope="session")
def cfg_nu():
    return mp.StageConfig(stage="nu", nu=0.5, l=1.0, s=0.0,
                          redistribute=False)


@pytest.fixture(scope="session")
def cfg_nul():
    return mp.StageConfig(stage="nul", nu=0.5, l=1.0, s=0.0,
                          redistribute=False)


@pytest.fixture(scope="session")
def cfg_s():
    return mp.StageConfig(stage="s", nu=0.5, l=1.0, s=0.2,
                          redistribute=False)


def rand_tangent(point, seed=0):
    g = np.random.default_rng(seed)
    return sp2.tangent_project(point, g.standard_normal(16))
