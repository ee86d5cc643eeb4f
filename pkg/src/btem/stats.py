"""Distance moments and tail bounds for noisy binary observations.

Closed forms for the mean and variance of the Hamming distance between
noisy samples and templates, the matching Chernoff-style tail bounds, and
Monte Carlo estimators used to cross-check them.
"""

import math
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

__all__ = [
    "DistanceMoments",
    "moments_sample_to_own_template",
    "moments_sample_to_fixed_point",
    "moments_same_template_pair",
    "expected_cross_distance",
    "moments_cross_template_pair",
    "tail_bound_own_template",
    "tail_bound_sample_deviation",
    "tail_bound_pair_deviation",
    "mc_distance_moments",
    "mc_tail_exceedance",
]

SCENARIOS = ("own-template", "same-pair", "cross-pair")


class DistanceMoments(NamedTuple):
    mean: float
    variance: float


def _check_q(q, allow_zero=False):
    lo_ok = q > 0.0 or (allow_zero and q == 0.0)
    if not (lo_ok and q < 0.5):
        raise ParameterError(f"noise level {q} outside the valid range")


def moments_sample_to_own_template(n, q):
    """Distance from a noisy sample to its own template: Binomial(n, q)."""
    _check_q(q)
    return DistanceMoments(n * q, n * q * (1.0 - q))


def moments_sample_to_fixed_point(n, q, d):
    """Distance from a noisy sample of P to a fixed binary point at
    distance d from P.  Agreeing bits flip toward the point w.p. q,
    disagreeing bits stay away w.p. 1-q; the variance is unchanged."""
    _check_q(q)
    if not 0 <= d <= n:
        raise ParameterError("point distance must lie in [0, n]")
    return DistanceMoments(n * q + d * (1.0 - 2.0 * q), n * q * (1.0 - q))


def moments_same_template_pair(n, q):
    """Distance between two independent noisy samples of one template.

    Each bit differs when exactly one copy flipped: 2q(1-q) per bit.
    """
    _check_q(q)
    p = 2.0 * q * (1.0 - q)
    return DistanceMoments(n * p, n * p * (1.0 - p))


def expected_cross_distance(n, q, d):
    """Mean distance between noisy samples of two templates d apart.

    q = 0 is accepted here (the distance is then exactly d); the other
    moment helpers require q strictly positive.
    """
    _check_q(q, allow_zero=True)
    if not 0 <= d <= n:
        raise ParameterError("template distance must lie in [0, n]")
    return 2.0 * n * q * (1.0 - q) + d * (1.0 - 2.0 * q) ** 2


def moments_cross_template_pair(n, q, d):
    """Moments for the cross-template pair distance.

    Per-bit difference probabilities are 2q(1-q) on agreeing bits and
    q*q + (1-q)**2 on disagreeing ones; both Bernoulli variances equal
    2q(1-q)(1-2q+2q**2), so the total variance matches the same-pair.
    """
    mean = expected_cross_distance(n, q, d)
    var = 2.0 * n * q * (1.0 - q) * (1.0 - 2.0 * q + 2.0 * q * q)
    return DistanceMoments(mean, var)


def tail_bound_own_template(n, q, lam):
    """Upper bound on P(D(x, P) > lam*n*q) for lam >= 1, clipped to [0,1]."""
    _check_q(q)
    if lam < 1.0:
        raise ParameterError("the bound needs lam >= 1")
    return min(1.0, math.exp(-n * q * (lam - 1.0) ** 2 / 3.0))


def tail_bound_sample_deviation(n, eps):
    """Upper bound on P(|D(x,P) - nq| > eps*n*sqrt(q)), clipped to [0,1]."""
    if eps < 0.0:
        raise ParameterError("deviation must be non-negative")
    return min(1.0, 2.0 * math.exp(-n * eps * eps / 3.0))


def tail_bound_pair_deviation(n, q, d, eps):
    """Upper bound on the relative deviation of a cross-pair distance from
    its mean: P(|D(x,y) - mu| > eps*mu) <= 2 exp(-mu eps^2 / 3)."""
    mu = expected_cross_distance(n, q, d)
    if eps < 0.0:
        raise ParameterError("deviation must be non-negative")
    return min(1.0, 2.0 * math.exp(-mu * eps * eps / 3.0))


def _chunk_rows(n, trials):
    # cap transient buffers near 32 MB
    return max(1, min(trials, (1 << 22) // max(n, 1)))


def _scenario_distances(scenario, n, q, d, trials, rng):
    P = rng.integers(0, 2, size=n, dtype=np.uint8)
    if scenario == "cross-pair":
        Q = P.copy()
        Q[:d] ^= 1
    out = np.empty(trials, dtype=np.int64)
    done = 0
    step = _chunk_rows(n, trials)
    while done < trials:
        b = min(step, trials - done)
        x = P ^ (rng.random((b, n)) < q).astype(np.uint8)
        if scenario == "own-template":
            D = np.count_nonzero(x != P, axis=1)
        else:
            base = Q if scenario == "cross-pair" else P
            y = base ^ (rng.random((b, n)) < q).astype(np.uint8)
            D = np.count_nonzero(x != y, axis=1)
        out[done:done + b] = D
        done += b
    return out


def mc_distance_moments(scenario, n, q, d=None, trials=10_000, seed=0):
    """Empirical DistanceMoments over independent draws of a scenario.

    Parameters
    ----------
    scenario : str
        "own-template" (sample vs its template), "same-pair" (two samples
        of one template), or "cross-pair" (samples of templates d apart).
    d : int, optional
        Template distance, required for "cross-pair".
    trials : int
        Number of independent distance draws, at least 2.
    """
    if scenario not in SCENARIOS:
        raise ParameterError(f"unknown scenario {scenario!r}")
    _check_q(q, allow_zero=True)
    if trials < 2:
        raise ParameterError("variance needs at least 2 trials")
    if scenario == "cross-pair":
        if d is None or not 0 <= d <= n:
            raise ParameterError("cross-pair needs a distance d in [0, n]")
    else:
        d = 0
    rng = np.random.default_rng(np.random.SeedSequence(seed)
                                if not isinstance(seed, np.random.SeedSequence)
                                else seed)
    D = _scenario_distances(scenario, n, q, int(d), trials, rng)
    return DistanceMoments(float(D.mean()), float(D.var(ddof=1)))


def mc_tail_exceedance(n, q, lam, trials, seed=0):
    """Empirical frequency of D(x, P) > lam*n*q over independent samples."""
    _check_q(q, allow_zero=True)
    rng = np.random.default_rng(np.random.SeedSequence(seed)
                                if not isinstance(seed, np.random.SeedSequence)
                                else seed)
    D = _scenario_distances("own-template", n, q, 0, trials, rng)
    return float(np.count_nonzero(D > lam * n * q) / trials)
