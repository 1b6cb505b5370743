"""Shared builders for instances, states, and synthetic cells."""

from __future__ import annotations

import numpy as np
import pytest

from anomsearch.distributions import DistributionSpec, ProcessModel, exponential
from anomsearch.policy import ProblemInstance
from anomsearch.state import SearchState, _rank


def cell(d_gf: float, d_fg: float) -> ProcessModel:
    """A cell with prescribed divergences (distribution pair is a placeholder)."""
    return ProcessModel(
        absent=exponential(1.0), present=exponential(2.0), d_gf=d_gf, d_fg=d_fg
    )


def instance_with(d_gf, d_fg, K=1, L=1, c=1e-3, priors=None) -> ProblemInstance:
    models = [cell(a, b) for a, b in zip(d_gf, d_fg)]
    return ProblemInstance(models, K=K, L=L, c=c, priors=priors)


def state_with(sums) -> SearchState:
    sums = np.asarray(sums, dtype=float)
    return SearchState(
        n=0,
        sums=sums,
        counts=np.zeros(sums.shape[0], dtype=np.int64),
        ranking=_rank(sums),
    )


def exp_instance(rates_g, rate_f=1.0, K=1, L=1, c=1e-3) -> ProblemInstance:
    models = [
        ProcessModel.from_specs(exponential(rate_f), exponential(r)) for r in rates_g
    ]
    return ProblemInstance(models, K=K, L=L, c=c)


def fig_instance(m: int, K=1, L=1, c=1e-3) -> ProblemInstance:
    """Exponential cells with widely separated rates: anomalous rate 9+i for
    cell i (1-based), normal rate 0.0188."""
    models = [
        ProcessModel.from_specs(exponential(0.0188), exponential(9.0 + i))
        for i in range(1, m + 1)
    ]
    return ProblemInstance(models, K=K, L=L, c=c)


def random_instance(
    rng: np.random.Generator,
    m_range=(3, 8),
    K=None,
    L=1,
    c=1e-2,
    gf_range=(0.1, 3.0),
    fg_range=(0.1, 3.0),
) -> ProblemInstance:
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    d_gf = rng.uniform(*gf_range, size=m)
    d_fg = rng.uniform(*fg_range, size=m)
    k = K if K is not None else int(rng.integers(1, m))
    return instance_with(d_gf, d_fg, K=k, L=L, c=c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
