"""Finite-alphabet probability kernel.

Probability tables over indexed alphabets 0..m-1, joint types of symbol
sequences, total variation, composition/marginalization, and information
measures.  All information quantities are in nats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-9
NEIGHBORHOOD_SLACK = 1e-12


class DistributionError(ValueError):
    """Raised when a probability table violates its invariants."""


def _as_prob_array(probs) -> np.ndarray:
    a = np.array(probs, dtype=float)
    if a.size == 0:
        raise DistributionError("empty probability table")
    if np.any(a < 0):
        raise DistributionError("negative probability entry")
    if abs(a.sum() - 1.0) > NORMALIZATION_TOL:
        raise DistributionError(f"probabilities sum to {a.sum()!r}, not 1")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Pmf:
    """Distribution over a single alphabet 0..m-1."""

    probs: np.ndarray

    def __post_init__(self):
        a = _as_prob_array(self.probs)
        if a.ndim != 1:
            raise DistributionError("Pmf requires a 1-D table")
        object.__setattr__(self, "probs", a)

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    def to_json_dict(self) -> dict:
        return {"axes": [self.size], "probs": [float(x) for x in self.probs]}


@dataclass(frozen=True)
class JointPmf:
    """Distribution over a tuple of alphabets, one table axis per variable."""

    probs: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        a = _as_prob_array(self.probs)
        names = tuple(self.names) or tuple(f"v{i}" for i in range(a.ndim))
        if len(names) != a.ndim:
            raise DistributionError("axis name count does not match table rank")
        object.__setattr__(self, "probs", a)
        object.__setattr__(self, "names", names)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def ndim(self) -> int:
        return self.probs.ndim

    def to_json_dict(self) -> dict:
        return {
            "axes": list(self.shape),
            "probs": [float(x) for x in self.probs.ravel()],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "JointPmf":
        axes = tuple(int(s) for s in d["axes"])
        return cls(np.array(d["probs"], dtype=float).reshape(axes))


@dataclass(frozen=True)
class ConditionalPmf:
    """For each conditioning tuple, a distribution over the output variables.

    ``table`` has shape ``given_shape + out_shape``; ``undefined`` marks
    conditioning rows whose distribution is undefined (zero marginal in the
    joint the conditional was derived from).  Undefined rows hold zeros.
    """

    table: np.ndarray
    given_ndim: int
    undefined: np.ndarray | None = None

    def __post_init__(self):
        a = np.array(self.table, dtype=float)
        if not 1 <= self.given_ndim < a.ndim:
            raise DistributionError("given_ndim out of range")
        if np.any(a < 0):
            raise DistributionError("negative probability entry")
        gshape = a.shape[: self.given_ndim]
        out_axes = tuple(range(self.given_ndim, a.ndim))
        row_sums = a.sum(axis=out_axes)
        und = self.undefined
        if und is None:
            und = np.zeros(gshape, dtype=bool)
        else:
            und = np.array(und, dtype=bool)
            if und.shape != gshape:
                raise DistributionError("undefined mask shape mismatch")
        bad = ~und & (np.abs(row_sums - 1.0) > NORMALIZATION_TOL)
        if np.any(bad):
            raise DistributionError("conditional row does not sum to 1")
        if np.any(und & (row_sums > NORMALIZATION_TOL)):
            raise DistributionError("undefined row carries probability mass")
        a.setflags(write=False)
        und.setflags(write=False)
        object.__setattr__(self, "table", a)
        object.__setattr__(self, "undefined", und)

    @property
    def given_shape(self) -> tuple[int, ...]:
        return self.table.shape[: self.given_ndim]

    @property
    def out_shape(self) -> tuple[int, ...]:
        return self.table.shape[self.given_ndim :]

    def row(self, *index: int) -> np.ndarray:
        return self.table[index]

    def to_json_dict(self) -> dict:
        return {
            "given_axes": list(self.given_shape),
            "out_axes": list(self.out_shape),
            "probs": [float(x) for x in self.table.ravel()],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ConditionalPmf":
        g = tuple(int(s) for s in d["given_axes"])
        o = tuple(int(s) for s in d["out_axes"])
        table = np.array(d["probs"], dtype=float).reshape(g + o)
        return cls(table, given_ndim=len(g))


@dataclass(frozen=True)
class SymbolSequence:
    """Length-n sequence of alphabet indices."""

    symbols: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        s = np.array(self.symbols, dtype=np.int64)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("symbols must be a nonempty 1-D array")
        if np.any(s < 0) or np.any(s >= self.alphabet_size):
            raise ValueError("symbol out of alphabet range")
        s.setflags(write=False)
        object.__setattr__(self, "symbols", s)

    @property
    def n(self) -> int:
        return self.symbols.shape[0]


def type_counts(seqs: Sequence[np.ndarray], sizes: Sequence[int]) -> np.ndarray:
    """Occurrence counts of symbol tuples along equal-length sequences."""
    arrs = [np.asarray(s, dtype=np.int64) for s in seqs]
    n = arrs[0].shape[0]
    if any(a.shape != (n,) for a in arrs):
        raise ValueError("sequences have mismatched lengths")
    flat = np.zeros(n, dtype=np.int64)
    for a, m in zip(arrs, sizes):
        flat = flat * m + a
    total = int(np.prod(sizes))
    counts = np.bincount(flat, minlength=total)
    return counts.reshape(tuple(sizes))


def joint_type(*seqs: SymbolSequence) -> JointPmf:
    """Empirical distribution of symbol tuples along the given sequences."""
    if not seqs:
        raise ValueError("need at least one sequence")
    n = seqs[0].n
    if any(s.n != n for s in seqs):
        raise ValueError("sequences have mismatched lengths")
    counts = type_counts([s.symbols for s in seqs], [s.alphabet_size for s in seqs])
    return JointPmf(counts / n)


def _probs_of(p) -> np.ndarray:
    return p.probs if hasattr(p, "probs") else np.asarray(p, dtype=float)


def total_variation(p, q) -> float:
    """Half the L1 distance between two distributions of identical shape."""
    a, b = _probs_of(p), _probs_of(q)
    if a.shape != b.shape:
        raise DistributionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return 0.5 * float(np.abs(a - b).sum())


def in_delta_neighborhood(p, q, delta: float) -> bool:
    """Closed total-variation ball membership test."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return total_variation(p, q) <= delta + NEIGHBORHOOD_SLACK


def compose(p0: Pmf, cond: ConditionalPmf) -> JointPmf:
    """Joint table p0(x) * cond(outputs | x)."""
    if cond.given_ndim != 1 or cond.given_shape[0] != p0.size:
        raise DistributionError("conditional rows do not match p0 alphabet")
    if np.any(cond.undefined & (p0.probs > 0)):
        raise DistributionError("p0 puts mass on an undefined conditional row")
    shape = (p0.size,) + (1,) * len(cond.out_shape)
    return JointPmf(p0.probs.reshape(shape) * cond.table)


def marginalize(p: JointPmf, keep: Iterable[int]) -> JointPmf:
    """Sum out all axes not listed in ``keep``; kept axes stay in the given order."""
    keep = tuple(keep)
    if len(set(keep)) != len(keep) or any(a < 0 or a >= p.ndim for a in keep):
        raise ValueError(f"invalid axis set {keep!r}")
    drop = tuple(a for a in range(p.ndim) if a not in keep)
    summed = p.probs.sum(axis=drop) if drop else p.probs
    # reorder to the caller's axis order
    order = np.argsort(np.argsort(keep))
    summed = np.transpose(summed, axes=order)
    return JointPmf(summed, tuple(p.names[a] for a in keep))


def condition(p: JointPmf, given: Iterable[int]) -> ConditionalPmf:
    """Conditional of the remaining axes given the listed axes.

    Rows whose conditioning marginal is zero are flagged undefined rather
    than producing NaNs.
    """
    given = tuple(given)
    if len(set(given)) != len(given) or any(a < 0 or a >= p.ndim for a in given):
        raise ValueError(f"invalid axis set {given!r}")
    rest = tuple(a for a in range(p.ndim) if a not in given)
    if not rest:
        raise ValueError("conditioning on every axis leaves nothing to condition")
    reordered = np.transpose(p.probs, axes=given + rest)
    marg = reordered.sum(axis=tuple(range(len(given), p.ndim)))
    undefined = marg == 0
    denom = np.where(undefined, 1.0, marg)
    table = reordered / denom.reshape(denom.shape + (1,) * len(rest))
    table[undefined] = 0.0
    return ConditionalPmf(table, given_ndim=len(given), undefined=undefined)


def entropy(p) -> float:
    """Shannon entropy in nats, with 0 ln 0 = 0."""
    a = _probs_of(p)
    pos = a[a > 0]
    return float(-(pos * np.log(pos)).sum())


def conditional_entropy(p: JointPmf, given: Iterable[int]) -> float:
    """H(rest | given) = H(all) - H(given)."""
    return entropy(p) - entropy(marginalize(p, given))


def _check_partition(p: JointPmf, groups: Sequence[Sequence[int]]):
    seen: list[int] = []
    for g in groups:
        seen.extend(g)
    if len(set(seen)) != len(seen) or any(a < 0 or a >= p.ndim for a in seen):
        raise ValueError(f"invalid axis partition {groups!r}")


def mutual_information(p: JointPmf, between: Sequence[Sequence[int]]) -> float:
    """I(A;B) = H(A) + H(B) - H(A,B) for two groups of axes.

    Axes outside the two groups are marginalized out first.
    """
    if len(between) != 2:
        raise ValueError("mutual_information takes exactly two axis groups")
    _check_partition(p, between)
    a, b = (tuple(g) for g in between)
    return (
        entropy(marginalize(p, a))
        + entropy(marginalize(p, b))
        - entropy(marginalize(p, a + b))
    )


def conditional_mutual_information(
    p: JointPmf, a: Sequence[int], b: Sequence[int], given: Sequence[int]
) -> float:
    """I(A;B | C) = H(A,C) + H(B,C) - H(C) - H(A,B,C)."""
    _check_partition(p, [a, b, given])
    a, b, c = tuple(a), tuple(b), tuple(given)
    if not c:
        return mutual_information(p, (a, b))
    return (
        entropy(marginalize(p, a + c))
        + entropy(marginalize(p, b + c))
        - entropy(marginalize(p, c))
        - entropy(marginalize(p, a + b + c))
    )
