"""Converters that turn probability estimators into approximate samplers.

Three constructions:

* ``sparse_sample`` / ``epsilon_simulate``: breadth-first heavy-prefix
  search over the outcome tree using any additive-precision estimator,
  followed by a categorical draw over the surviving heavy outcomes.  For
  an eps-approximately t-sparse target the induced distribution is within
  L1 distance 12*eps + delta.
* ``cdf_bitwise_sample``: inverse-CDF sampling bit by bit from joint
  prefix-marginal queries against an exponential-precision estimator,
  with an m-bit discretized uniform draw.
* ``conditional_chain_sample``: ancestral sampling from conditionals formed
  as ratios of successive prefix marginals (multiplicative-precision
  estimator contract); exact estimates reproduce the target exactly.

Outcome strings, prefixes, and distribution indices all use the big-endian
lexicographic convention from the circuits module.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, OutcomePattern
from .oracle import ExactDistribution, exact_distribution


@dataclass(frozen=True)
class SparsityPolynomial:
    """Polynomial with nonnegative coefficients (ascending degree), hence
    nondecreasing on [0, inf); bounds the sparsity t as a function of
    k/eps across a circuit family."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("need at least one coefficient")
        if any(c < 0 for c in coeffs):
            raise ValueError("coefficients must be nonnegative")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls, t: float) -> "SparsityPolynomial":
        return cls((float(t),))

    def __call__(self, x: float) -> float:
        if x < 0:
            raise ValueError("argument must be nonnegative")
        total = 0.0
        for c in reversed(self.coefficients):
            total = total * x + c
        return total


@dataclass(frozen=True)
class CdfSamplerConfig:
    m: int
    eps: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0, 1)")


# ---------------------------------------------------------------------------
# Heavy-prefix search and the sparse sampler
# ---------------------------------------------------------------------------

def survivor_cap(threshold: float) -> int:
    return 2 * math.ceil(2.0 / threshold) + 2


def heavy_prefixes(est, circuit: Circuit, threshold: float, delta: float,
                   rng=None) -> list[tuple[OutcomePattern, float]]:
    """Level-by-level search for outcomes whose prefix marginals all stay
    >= threshold.  Each prefix query runs at precision threshold/2 and
    confidence delta/(2*k*cap); at most cap survivors per level, ties broken
    lexicographically."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    k = circuit.k
    cap = survivor_cap(threshold)
    per_eps = threshold / 2.0
    per_delta = delta / (2.0 * k * cap)
    survivors: list[tuple[str, float]] = [("", 1.0)]
    for level in range(1, k + 1):
        scored: list[tuple[str, float]] = []
        for prefix, _ in survivors:
            for bit in "01":
                extended = prefix + bit
                pattern = OutcomePattern(extended + "*" * (k - level))
                e = est.estimate(pattern, per_eps, per_delta, rng)
                if e.value >= threshold:
                    scored.append((extended, e.value))
        scored.sort(key=lambda sv: (-sv[1], sv[0]))
        survivors = scored[:cap]
        if not survivors:
            return []
    return [(OutcomePattern(bits), value) for bits, value in survivors]


def survivor_distribution(est, circuit: Circuit, t: int, eps: float,
                           delta: float, rng):
    """Top-t surviving outcomes with clamped, renormalized weights.
    Returns (outcomes, probs) or (None, None) when nothing survives."""
    threshold = eps / (2.0 * t)
    survivors = heavy_prefixes(est, circuit, threshold, delta, rng)
    ranked = sorted(((pat.trits, value) for pat, value in survivors),
                    key=lambda sv: (-sv[1], sv[0]))[:t]
    weights = np.array([max(value, 0.0) for _, value in ranked])
    if not ranked or weights.sum() <= 0.0:
        return None, None
    return [bits for bits, _ in ranked], weights / weights.sum()


def _sparsity_warning(circuit: Circuit, threshold: float) -> str:
    return (f"no heavy prefixes at threshold {threshold:g}; the sparsity "
            "promise does not hold for this circuit, emitting all-zeros")


def sparse_sample(est, circuit: Circuit, t: int, eps: float, delta: float,
                  rng: np.random.Generator) -> str:
    """One draw from the heavy-outcome restriction.  Requires eps <= 1/6;
    if the search comes back empty (sparsity promise violated) the all-zeros
    outcome is emitted along with a warning rather than aborting."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if eps <= 0 or eps > 1.0 / 6.0 + 1e-12:
        raise ValueError("eps must lie in (0, 1/6]")
    outcomes, probs = survivor_distribution(est, circuit, t, eps, delta, rng)
    if outcomes is None:
        warnings.warn(_sparsity_warning(circuit, eps / (2.0 * t)))
        return "0" * circuit.k
    return outcomes[rng.choice(len(outcomes), p=probs)]


def epsilon_simulate(est, sp: SparsityPolynomial, circuit: Circuit,
                     eps_prime: float, count: int,
                     rng: np.random.Generator) -> list[str]:
    """count draws within total L1 budget eps_prime for poly-sparse
    targets: the budget splits as eps = delta = eps_prime/13, and
    12*(eps_prime/13) + eps_prime/13 = eps_prime.

    A deterministic estimator gives the same survivor set on every draw, so
    the categorical table is built once and sampled count times; the induced
    distribution is identical to the per-draw path.
    """
    if eps_prime <= 0:
        raise ValueError("eps_prime must be positive")
    if count < 0:
        raise ValueError("count must be nonnegative")
    inner = eps_prime / 13.0
    t = math.ceil(sp(circuit.k / inner))
    if getattr(est, "deterministic", False):
        outcomes, probs = survivor_distribution(est, circuit, t, inner,
                                                 inner, rng)
        if outcomes is None:
            warnings.warn(_sparsity_warning(circuit, inner / (2.0 * t)))
            return ["0" * circuit.k] * count
        idx = rng.choice(len(outcomes), size=count, p=probs)
        return [outcomes[i] for i in idx]
    return [sparse_sample(est, circuit, t, inner, inner, rng)
            for _ in range(count)]


# ---------------------------------------------------------------------------
# Prefix-marginal estimator handles
# ---------------------------------------------------------------------------

class ExactPrefixEstimator:
    """Joint prefix marginals Pr(first j bits = b) read off a tabulated
    distribution via cumulative sums; serves as the exact instance of both
    the exponential-precision and the multiplicative-precision contracts."""

    def __init__(self, dist: ExactDistribution):
        self.k = dist.k
        self._cum = np.concatenate(([0.0], np.cumsum(dist.probs)))

    def prefix_probability(self, bits: str) -> float:
        j = len(bits)
        if not 0 < j <= self.k:
            raise ValueError("prefix length out of range")
        if any(c not in "01" for c in bits):
            raise ValueError("prefix must be over 0/1")
        lo = int(bits, 2) << (self.k - j)
        return float(self._cum[lo + (1 << (self.k - j))] - self._cum[lo])


def oracle_prefix_estimator(circuit: Circuit) -> ExactPrefixEstimator:
    return ExactPrefixEstimator(exact_distribution(circuit))


# ---------------------------------------------------------------------------
# CDF-inversion sampler
# ---------------------------------------------------------------------------

def cdf_outcome_for_r(strong, k: int, r: float) -> str:
    """Deterministic CDF inversion: bit j is 0 exactly when r falls below
    the running lower edge plus the mass of the 0-extension.

    The lower edge is essential: comparing r against the bare marginal
    instead inverts the wrong map (on the lexicographic distribution
    (0.1, 0.2, 0.3, 0.4), r = 0.5 would come out as 11 where the CDF cell
    is 10).
    """
    lower = 0.0
    prefix = ""
    for _ in range(k):
        q0 = strong.prefix_probability(prefix + "0")
        if r < lower + q0:
            prefix += "0"
        else:
            prefix += "1"
            lower += q0
    return prefix


def cdf_bitwise_sample(strong, circuit: Circuit, cfg: CdfSamplerConfig,
                       rng: np.random.Generator) -> str:
    """Draw r as m uniform bits (r = sum r_i 2^-i) and invert the CDF built
    from prefix-marginal queries.  With exact queries the output error is
    only the 2^-m discretization; with (eps, delta) queries the L1 error is
    bounded by 2^k (2*eps + 2^-m + 1 - (1-delta)^k)."""
    bits = rng.integers(0, 2, size=cfg.m)
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    r = v / float(1 << cfg.m)
    return cdf_outcome_for_r(strong, circuit.k, r)


# ---------------------------------------------------------------------------
# Conditional-chain sampler
# ---------------------------------------------------------------------------

def chain_outcome(mult, k: int, rng: np.random.Generator) -> str:
    """Ancestral sampling: bit j is 0 with probability q_j/q_{j-1}, the
    ratio of successive joint prefix estimates (q_0 = 1).  A zero or
    negative denominator forces the 1 branch via the clamp; r is drawn in
    (0, 1] so a zero ratio can never take the 0 branch."""
    prefix = ""
    q_prev = 1.0
    for _ in range(k):
        q0 = mult.prefix_probability(prefix + "0")
        ratio = 0.0 if q_prev <= 0.0 else min(max(q0 / q_prev, 0.0), 1.0)
        r = 1.0 - rng.random()
        if ratio >= r:
            prefix += "0"
            q_prev = q0
        else:
            prefix += "1"
            q_prev = mult.prefix_probability(prefix)
    return prefix


def conditional_chain_sample(mult, circuit: Circuit,
                             rng: np.random.Generator) -> str:
    return chain_outcome(mult, circuit.k, rng)
