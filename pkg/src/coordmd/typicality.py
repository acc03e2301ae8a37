"""Strong-typicality membership tests and closed-form bound evaluators.

Typicality is strong (letter-frequency) typicality: a tuple of sequences is
epsilon-typical when every symbol-tuple frequency deviates from the
generating distribution by strictly less than epsilon divided by the product
of the alphabet sizes, and the empirical count is zero wherever the
distribution is zero.  Bounds are reported two-sided with a ``trivial`` flag
instead of clamping, so callers can tell "bound holds" apart from "bound
says nothing" at small n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .probability import (
    JointPmf,
    SymbolSequence,
    conditional_entropy,
    entropy,
    marginalize,
    mutual_information,
    type_counts,
)


@dataclass(frozen=True)
class TypicalityParams:
    """Typicality slack and blocklength."""

    epsilon: float
    n: int

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.n < 1:
            raise ValueError("n must be at least 1")


@dataclass(frozen=True)
class BoundReport:
    """Two-sided bound; ``trivial`` means the bound is vacuous at these parameters."""

    lower: float
    upper: float
    trivial: bool

    def __post_init__(self):
        if math.isfinite(self.lower) and math.isfinite(self.upper):
            if self.lower > self.upper:
                raise ValueError("lower bound exceeds upper bound")

    def to_json_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "trivial": self.trivial}


@dataclass(frozen=True)
class LemmaTaReport:
    """Probability-of-typicality lower bound and per-sequence probability window."""

    prob_typical: BoundReport
    sequence_prob: BoundReport

    def to_json_dict(self) -> dict:
        return {
            "prob_typical": self.prob_typical.to_json_dict(),
            "sequence_prob": self.sequence_prob.to_json_dict(),
        }


@dataclass(frozen=True)
class LemmaTcReport:
    """Windows on the probability that independent draws land jointly typical."""

    joint: BoundReport
    conditional: BoundReport

    def to_json_dict(self) -> dict:
        return {
            "joint": self.joint.to_json_dict(),
            "conditional": self.conditional.to_json_dict(),
        }


def eps_m(p: JointPmf, epsilon: float) -> float:
    """-epsilon * ln(p_min), with p_min the smallest positive table entry."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pos = p.probs[p.probs > 0]
    if pos.size == 0:
        raise ValueError("all-zero probability table")
    return -epsilon * math.log(float(pos.min()))


def delta_t(n: int, epsilon: float, alphabet_sizes: Sequence[int]) -> float:
    """(n+1)^m * exp(-n eps^2 / (2 m^2)) with m the product of alphabet sizes.

    May exceed 1, in which case any bound built on it is vacuous.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    sizes = [int(s) for s in alphabet_sizes]
    if any(s < 1 for s in sizes):
        raise ValueError("alphabet sizes must be at least 1")
    m = math.prod(sizes)
    log_val = m * math.log(n + 1) - n * epsilon**2 / (2 * m * m)
    try:
        return math.exp(log_val)
    except OverflowError:
        return math.inf


def _tuple_type_counts(seqs: Sequence[SymbolSequence], p: JointPmf) -> np.ndarray:
    if len(seqs) != p.ndim:
        raise ValueError("sequence count does not match distribution rank")
    n = seqs[0].n
    for s, m in zip(seqs, p.shape):
        if s.n != n:
            raise ValueError("sequences have mismatched lengths")
        if s.alphabet_size != m:
            raise ValueError("sequence alphabet does not match distribution axis")
    return type_counts([s.symbols for s in seqs], p.shape)


def typical_counts_mask(counts: np.ndarray, n: int, p: np.ndarray, epsilon: float) -> bool:
    """Typicality test on precomputed tuple counts (counts/n is the type)."""
    tol = epsilon / p.size
    dev = np.abs(counts / n - p)
    if np.any(dev >= tol):
        return False
    return not np.any(counts[p == 0])


def is_strongly_typical(
    seqs: Sequence[SymbolSequence], p: JointPmf, epsilon: float
) -> bool:
    """Strict strong-typicality membership of a tuple of sequences."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    counts = _tuple_type_counts(seqs, p)
    return typical_counts_mask(counts, seqs[0].n, p.probs, epsilon)


def is_conditionally_typical(
    ys: Sequence[SymbolSequence],
    xs: Sequence[SymbolSequence],
    p: JointPmf,
    epsilon: float,
) -> bool:
    """Conditional typicality of ys given xs: joint typicality of the full tuple.

    Axis order of ``p`` is the xs axes followed by the ys axes.
    """
    return is_strongly_typical(tuple(xs) + tuple(ys), p, epsilon)


def lemma_ta_bounds(p: JointPmf, params: TypicalityParams) -> LemmaTaReport:
    """Typicality probability lower bound and the typical-sequence probability window."""
    n, eps = params.n, params.epsilon
    dt = delta_t(n, eps, p.shape)
    h = entropy(p)
    em = eps_m(p, eps)
    prob = BoundReport(lower=1.0 - dt, upper=1.0, trivial=(1.0 - dt) <= 0.0)
    lo = math.exp(-n * (h + em))
    hi = math.exp(-n * (h - em))
    seq = BoundReport(lower=lo, upper=hi, trivial=(lo <= 0.0 or hi >= 1.0))
    return LemmaTaReport(prob_typical=prob, sequence_prob=seq)


def lemma_tb_size_bounds(
    p: JointPmf, xs: Sequence[SymbolSequence], params: TypicalityParams, given_ndim: int = 1
) -> BoundReport:
    """Size window for the conditionally typical set given the leading axes.

    The lower bound applies only when the conditioning sequences are typical
    at the reduced parameter eps / (2 |out alphabet|); otherwise the report
    is flagged trivial and only the upper bound is informative.
    """
    n, eps = params.n, params.epsilon
    out_size = math.prod(p.shape[given_ndim:])
    h_cond = conditional_entropy(p, range(given_ndim))
    em = eps_m(p, eps)
    upper = math.exp(n * (h_cond + em))
    x_marg = marginalize(p, range(given_ndim))
    precondition = is_strongly_typical(tuple(xs), x_marg, eps / (2 * out_size))
    dt = delta_t(n, eps / 2, p.shape)
    lower = (1.0 - dt) * math.exp(n * (h_cond - em))
    trivial = (not precondition) or lower <= 0.0
    if lower > upper:
        lower, trivial = 0.0, True
    return BoundReport(lower=lower, upper=upper, trivial=trivial)


def lemma_tc_prob_bounds(p: JointPmf, params: TypicalityParams) -> LemmaTcReport:
    """Probability windows for independently drawn tuples landing jointly typical.

    ``joint``: both coordinates drawn from their marginals independently.
    ``conditional``: the second coordinate drawn independently against a fixed
    typical first sequence; its lower side additionally assumes the fixed
    sequence is typical at eps / (2 |out alphabet|).
    """
    if p.ndim < 2:
        raise ValueError("lemma TC needs at least two axes")
    n, eps = params.n, params.epsilon
    first = (0,)
    rest = tuple(range(1, p.ndim))
    info = mutual_information(p, (first, rest))
    em_joint = eps_m(p, eps)
    em_x = eps_m(marginalize(p, first), eps)
    em_y = eps_m(marginalize(p, rest), eps)
    eps2 = em_joint + em_x + em_y
    eps3 = em_joint + em_y
    dt = delta_t(n, eps, p.shape)
    dt_half = delta_t(n, eps / 2, p.shape)

    j_lo = (1.0 - dt) * math.exp(-n * (info + eps2))
    j_hi = math.exp(-n * (info - eps2))
    if j_lo > j_hi:
        j_lo = 0.0
    joint = BoundReport(lower=j_lo, upper=j_hi, trivial=(j_lo <= 0.0 or j_hi >= 1.0))

    c_lo = (1.0 - dt_half) * math.exp(-n * (info + eps3))
    c_hi = math.exp(-n * (info - eps3))
    if c_lo > c_hi:
        c_lo = 0.0
    cond = BoundReport(lower=c_lo, upper=c_hi, trivial=(c_lo <= 0.0 or c_hi >= 1.0))
    return LemmaTcReport(joint=joint, conditional=cond)
