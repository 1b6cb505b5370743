"""Search state: per-cell sum log-likelihood ratios, probe counts, ranking.

The ranking sorts cells by their accumulated sum LLR, descending, with ties
broken by ascending cell index so that every policy built on top of it is
deterministic (ties are certain at step 0, when all sums are zero).
Cell indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import ProcessModel


def _rank(sums: np.ndarray) -> np.ndarray:
    # descending by sum, ascending index among ties
    return np.lexsort((np.arange(sums.shape[0]), -sums))


@dataclass
class SearchState:
    """State after ``n`` steps of a probing run.

    ``ranking[r]`` is the cell holding the (r+1)-th largest sum LLR.
    A state belongs to a single trial; share copies, not instances.
    """

    n: int
    sums: np.ndarray
    counts: np.ndarray
    ranking: np.ndarray

    @property
    def m(self) -> int:
        return self.sums.shape[0]

    def copy(self) -> "SearchState":
        return SearchState(self.n, self.sums.copy(), self.counts.copy(), self.ranking.copy())


def init_state(m: int) -> SearchState:
    """Fresh state for ``m`` cells: zero sums and counts, identity ranking."""
    if m < 2:
        raise ValueError(f"need at least 2 cells to search, got M={m}")
    return SearchState(
        n=0,
        sums=np.zeros(m, dtype=float),
        counts=np.zeros(m, dtype=np.int64),
        ranking=np.arange(m, dtype=np.int64),
    )


def apply_observations(
    state: SearchState,
    probes: Sequence[int],
    ys: Sequence[float],
    models: Sequence[ProcessModel],
) -> SearchState:
    """Return the state after observing ``ys`` from the probed cells.

    Only the probed cells' sums and counts change; the step counter advances
    by one regardless of how many cells were probed.
    """
    m = state.m
    if len(probes) != len(ys):
        raise ValueError(f"{len(probes)} probes but {len(ys)} observations")
    if len(set(probes)) != len(probes):
        raise ValueError(f"duplicate probe indices in {tuple(probes)}")
    sums = state.sums.copy()
    counts = state.counts.copy()
    for i, y in zip(probes, ys):
        if not 0 <= i < m:
            raise ValueError(f"probe index {i} out of range for M={m}")
        sums[i] += models[i].llr(y)
        counts[i] += 1
    return SearchState(n=state.n + 1, sums=sums, counts=counts, ranking=_rank(sums))


def advance_inplace(
    state: SearchState,
    probes: Sequence[int],
    ys: Sequence[float],
    models: Sequence[ProcessModel],
) -> None:
    """Unchecked in-place variant of apply_observations for hot loops."""
    sums = state.sums
    for i, y in zip(probes, ys):
        sums[i] += models[i].llr(y)
        state.counts[i] += 1
    state.n += 1
    state.ranking = _rank(sums)


def delta_s(state: SearchState, top: int) -> float:
    """Gap between the ``top``-th and (``top``+1)-th largest sum LLRs (>= 0)."""
    if not 1 <= top < state.m:
        raise ValueError(f"rank gap needs 1 <= L < M, got L={top}, M={state.m}")
    r = state.ranking
    return float(state.sums[r[top - 1]] - state.sums[r[top]])
