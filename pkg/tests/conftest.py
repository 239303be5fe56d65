import numpy as np
import pytest

from scvr import problems
from scvr.core import QueryLedger
from scvr.estimators import take_snapshot


@pytest.fixture
def affine_small():
    return problems.make_affine_quadratic(n=5, m=4, dim_x=3, dim_w=3, seed=1)


@pytest.fixture
def nonconvex_small():
    return problems.make_nonconvex_synthetic(n=6, m=5, dim_x=3, dim_w=4, seed=2)


@pytest.fixture
def balanced_affine():
    return problems.make_balanced_affine(m_pairs=2, dim_x=3, dim_w=3, seed=6)


@pytest.fixture
def curved_inner():
    return problems.make_curved_inner(dim_x=3, dim_w=3, n=3, seed=5)


@pytest.fixture
def sne_small():
    data, _ = problems.make_cluster_data(6, clusters=2, dim=5, seed=3)
    return problems.build_sne(data, sigma=2.0, embed_dim=2)


def snapshot_at(problem, x):
    return take_snapshot(problem, np.asarray(x, dtype=float), QueryLedger())
