"""Per-cell observation models.

Each monitored cell carries a pair of distributions: ``f`` describes the
observations when the cell is normal (no anomaly) and ``g`` when it is
anomalous.  This module provides the supported families, log-density
evaluation, seeded sampling, and the Kullback-Leibler divergence D(p||q)
in nats -- closed forms per family plus a numerical fallback used both for
cross-family pairs and as an independent check of the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

_LOG_2PI = math.log(2.0 * math.pi)
PROB_SUM_TOL = 1e-12

FAMILIES = ("exponential", "gaussian", "bernoulli", "discrete")


class DistributionError(ValueError):
    """Invalid distribution parameters or out-of-support evaluation."""


class AbsoluteContinuityError(DistributionError):
    """D(p||q) is infinite: p puts mass where q has none."""


@dataclass(frozen=True)
class DistributionSpec:
    """One observation distribution, tagged by family.

    Exactly the parameters of the stated family must be set:
    ``exponential`` uses ``rate``, ``gaussian`` uses ``mean``/``variance``,
    ``bernoulli`` uses ``p``, ``discrete`` uses ``probs`` (a pmf over the
    outcome indices 0..len(probs)-1).  Instances are immutable and safe to
    share across threads and processes.
    """

    family: str
    rate: float | None = None
    mean: float | None = None
    variance: float | None = None
    p: float | None = None
    probs: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DistributionError(f"unknown family {self.family!r}")
        given = {
            name
            for name in ("rate", "mean", "variance", "p", "probs")
            if getattr(self, name) is not None
        }
        required = {
            "exponential": {"rate"},
            "gaussian": {"mean", "variance"},
            "bernoulli": {"p"},
            "discrete": {"probs"},
        }[self.family]
        if given != required:
            raise DistributionError(
                f"family {self.family!r} takes parameters {sorted(required)}, got {sorted(given)}"
            )
        if self.family == "exponential":
            if not (self.rate > 0 and math.isfinite(self.rate)):
                raise DistributionError("exponential rate must be positive and finite")
        elif self.family == "gaussian":
            if not (self.variance > 0 and math.isfinite(self.variance)):
                raise DistributionError("gaussian variance must be positive and finite")
            if not math.isfinite(self.mean):
                raise DistributionError("gaussian mean must be finite")
        elif self.family == "bernoulli":
            if not (0.0 < self.p < 1.0):
                raise DistributionError("bernoulli p must lie in (0, 1)")
        else:
            probs = tuple(float(x) for x in self.probs)
            if len(probs) == 0:
                raise DistributionError("discrete probs must be nonempty")
            if any(x < 0 for x in probs):
                raise DistributionError("discrete probs must be nonnegative")
            if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
                raise DistributionError(
                    f"discrete probs must sum to 1 within {PROB_SUM_TOL}, got {sum(probs)!r}"
                )
            object.__setattr__(self, "probs", probs)


def exponential(rate: float) -> DistributionSpec:
    return DistributionSpec("exponential", rate=float(rate))


def gaussian(mean: float, variance: float) -> DistributionSpec:
    return DistributionSpec("gaussian", mean=float(mean), variance=float(variance))


def bernoulli(p: float) -> DistributionSpec:
    return DistributionSpec("bernoulli", p=float(p))


def discrete(probs: Sequence[float]) -> DistributionSpec:
    return DistributionSpec("discrete", probs=tuple(float(x) for x in probs))


def _check_discrete_outcome(y: float, size: int, family: str) -> int:
    i = int(y)
    if i != y or not (0 <= i < size):
        raise DistributionError(f"{y!r} is not a valid outcome for {family}")
    return i


def log_density(spec: DistributionSpec, y: float) -> float:
    """Natural-log density (or mass) of ``spec`` at ``y``.

    Discrete families reject out-of-support outcomes; a -inf return happens
    only for zero-mass discrete outcomes (and for continuous points outside
    the support, where the density is exactly zero).
    """
    if spec.family == "exponential":
        if y < 0.0:
            return -math.inf
        return math.log(spec.rate) - spec.rate * y
    if spec.family == "gaussian":
        d = y - spec.mean
        return -0.5 * (d * d / spec.variance + math.log(spec.variance) + _LOG_2PI)
    if spec.family == "bernoulli":
        i = _check_discrete_outcome(y, 2, "bernoulli")
        return math.log(spec.p) if i == 1 else math.log(1.0 - spec.p)
    probs = spec.probs
    i = _check_discrete_outcome(y, len(probs), "discrete")
    return math.log(probs[i]) if probs[i] > 0.0 else -math.inf


@lru_cache(maxsize=None)
def make_sampler(spec: DistributionSpec) -> Callable[[np.random.Generator], float]:
    """Compile a fast draw function for ``spec``.

    The returned callable consumes exactly one logical draw from the given
    generator, so identical stream state yields identical observations.
    """
    if spec.family == "exponential":
        scale = 1.0 / spec.rate
        return lambda rng: rng.exponential(scale)
    if spec.family == "gaussian":
        mean, std = spec.mean, math.sqrt(spec.variance)
        return lambda rng: rng.normal(mean, std)
    if spec.family == "bernoulli":
        p = spec.p
        return lambda rng: 1.0 if rng.random() < p else 0.0
    cum = np.cumsum(np.asarray(spec.probs, dtype=float))
    cum[-1] = 1.0  # guard against round-off at the top of the cdf
    return lambda rng: float(np.searchsorted(cum, rng.random(), side="right"))


def sample(spec: DistributionSpec, rng: np.random.Generator) -> float:
    """Draw one observation from ``spec`` using ``rng``."""
    return make_sampler(spec)(rng)


def _support(spec: DistributionSpec) -> tuple[float, float] | None:
    """Continuous support interval, or None for discrete families."""
    if spec.family == "exponential":
        return (0.0, math.inf)
    if spec.family == "gaussian":
        return (-math.inf, math.inf)
    return None


def _pmf(spec: DistributionSpec) -> tuple[float, ...]:
    if spec.family == "bernoulli":
        return (1.0 - spec.p, spec.p)
    return spec.probs


def _kl_discrete(p: tuple[float, ...], q: tuple[float, ...]) -> float:
    n = max(len(p), len(q))
    total = 0.0
    for i in range(n):
        pi = p[i] if i < len(p) else 0.0
        qi = q[i] if i < len(q) else 0.0
        if pi == 0.0:
            continue
        if qi == 0.0:
            raise AbsoluteContinuityError(
                f"outcome {i} has mass {pi} under p but zero mass under q"
            )
        total += pi * math.log(pi / qi)
    return total


def kl_divergence_numerical(p: DistributionSpec, q: DistributionSpec) -> float:
    """D(p||q) by adaptive quadrature (continuous) or exact summation (discrete).

    This path is independent of the per-family closed forms and is also the
    only route for cross-family continuous pairs.
    """
    sp, sq = _support(p), _support(q)
    if (sp is None) != (sq is None):
        raise AbsoluteContinuityError(
            "cannot mix a discrete and a continuous distribution: point masses "
            "have zero density under the other measure"
        )
    if sp is None:
        return _kl_discrete(_pmf(p), _pmf(q))
    if sq[0] > sp[0] or sq[1] < sp[1]:
        raise AbsoluteContinuityError(
            f"support of p {sp} is not contained in support of q {sq}"
        )

    def integrand(y: float) -> float:
        lp = log_density(p, y)
        if lp == -math.inf:
            return 0.0
        return math.exp(lp) * (lp - log_density(q, y))

    value, _ = integrate.quad(integrand, sp[0], sp[1], epsabs=1e-8, limit=200)
    return value


def kl_divergence(p: DistributionSpec, q: DistributionSpec) -> float:
    """D(p||q) in nats; closed form for same-family pairs, numerical otherwise.

    Raises AbsoluteContinuityError instead of returning infinity when p has
    mass outside q's support.
    """
    if p.family == q.family:
        if p.family == "exponential":
            return math.log(p.rate) - math.log(q.rate) + q.rate / p.rate - 1.0
        if p.family == "gaussian":
            return 0.5 * (
                math.log(q.variance / p.variance)
                + (p.variance + (p.mean - q.mean) ** 2) / q.variance
                - 1.0
            )
        if p.family == "bernoulli":
            return p.p * math.log(p.p / q.p) + (1.0 - p.p) * math.log(
                (1.0 - p.p) / (1.0 - q.p)
            )
        return _kl_discrete(p.probs, q.probs)
    return kl_divergence_numerical(p, q)


@dataclass(frozen=True)
class ProcessModel:
    """One cell's observation pair with cached divergences.

    ``absent`` is the normal distribution f, ``present`` the anomalous
    distribution g; ``d_gf`` = D(g||f) and ``d_fg`` = D(f||g), both finite
    (mutual absolute continuity is enforced when built via from_specs).
    """

    absent: DistributionSpec
    present: DistributionSpec
    d_gf: float
    d_fg: float

    def __post_init__(self) -> None:
        for name in ("d_gf", "d_fg"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise DistributionError(f"{name} must be finite and nonnegative, got {v!r}")

    @classmethod
    def from_specs(
        cls, absent: DistributionSpec, present: DistributionSpec
    ) -> "ProcessModel":
        """Build a cell model, computing and caching both divergences."""
        d_gf = kl_divergence(present, absent)
        d_fg = kl_divergence(absent, present)
        return cls(absent=absent, present=present, d_gf=d_gf, d_fg=d_fg)

    def llr(self, y: float) -> float:
        """log g(y) - log f(y): the per-observation evidence for an anomaly."""
        return log_density(self.present, y) - log_density(self.absent, y)
