"""Executable random-coding schemes for the two-description setup.

Single-layer scheme: independent per-letter codebooks for each description
plus a per-pair refinement codeword; joint-typicality encoding with a
lexicographic tie-break and an all-ones fallback.  Layered scheme: a common
layer drawn first, the per-description and refinement codewords drawn
conditionally on it.  Codeword indices are 1-based so the fallback is
(1, 1) / (1, 1, 1).
"""
from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass

import numpy as np

from .probability import JointPmf, SymbolSequence, condition, marginalize
from .typicality import is_strongly_typical

DEFAULT_CELL_BUDGET = 2**24
BUDGET_ENV_VAR = "COORDMD_BUDGET"


class BudgetError(ValueError):
    """Raised when the requested codebook exceeds the cell budget."""


class UndefinedConditionalError(ValueError):
    """Raised when codeword generation hits a zero-probability conditioning row."""


def cell_budget() -> int:
    return int(os.environ.get(BUDGET_ENV_VAR, DEFAULT_CELL_BUDGET))


def codebook_size(rate: float, slack: float, n: int) -> int:
    """floor(e^{n (rate + slack)}), at least 1."""
    if rate < 0 or slack < 0:
        raise ValueError("rates and slacks must be nonnegative")
    return max(1, math.floor(math.exp(n * (rate + slack))))


@dataclass(frozen=True)
class EncodeResult:
    """Encoder output: chosen indices, whether a typical tuple was found, case label."""

    indices: tuple[int, ...]
    found: bool
    case_label: str

    def __post_init__(self):
        if self.case_label not in ("a", "b", "c"):
            raise ValueError("case label must be one of a, b, c")
        if not self.found and any(i != 1 for i in self.indices):
            raise ValueError("fallback result must use all-ones indices")
        if (self.case_label == "c") != self.found:
            raise ValueError("case c iff a typical tuple was found")


@dataclass(frozen=True)
class CodebookTh1:
    """Single-layer codebook: y1[w1], y2[w2], y12[w1, w2] (0-based storage).

    The refinement table y12 is materialized lazily: ``y12_block(w1)`` is a
    pure function of (seed, w1), so any access order reproduces the same
    codewords and unvisited blocks cost nothing.
    """

    y1: np.ndarray
    y2: np.ndarray
    cond12_table: np.ndarray  # p(y12 | y1, y2) used to draw refinement words
    cond12_undefined: np.ndarray
    sizes: tuple[int, int, int]  # reconstruction alphabet sizes for y1, y2, y12
    seed: int

    def __post_init__(self):
        for a in (self.y1, self.y2, self.cond12_table, self.cond12_undefined):
            a.setflags(write=False)

    @property
    def m1(self) -> int:
        return self.y1.shape[0]

    @property
    def m2(self) -> int:
        return self.y2.shape[0]

    @property
    def n(self) -> int:
        return self.y1.shape[1]

    def y12_block(self, w1: int) -> np.ndarray:
        """Refinement codewords y12[w1, :, :] (shape (M2, n)), 0-based w1."""
        rng = _generator(self.seed, (2, w1))
        idx = np.broadcast_arrays(self.y1[w1][None, :], self.y2)
        block = _sample_conditional(rng, self.cond12_table, self.cond12_undefined, tuple(idx))
        block.setflags(write=False)
        return block

    @functools.cached_property
    def y12(self) -> np.ndarray:
        """Full [M1][M2][n] refinement table (materialized on first access)."""
        full = np.stack([self.y12_block(w1) for w1 in range(self.m1)])
        full.setflags(write=False)
        return full

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "y1": self.y1.tolist(),
            "y2": self.y2.tolist(),
            "y12": self.y12.tolist(),
        }


@dataclass(frozen=True)
class CodebookTh2:
    """Layered codebook: y0[w0], y1[w0, w1], y2[w0, w2], y12[w0, w1, w2].

    As in the single-layer codebook, y12 is materialized lazily per
    (w0, w1) block, purely from (seed, w0, w1).
    """

    y0: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    cond12_table: np.ndarray  # p(y12 | y0, y1, y2)
    cond12_undefined: np.ndarray
    sizes: tuple[int, int, int, int]  # alphabet sizes for y0, y1, y2, y12
    seed: int

    def __post_init__(self):
        for a in (self.y0, self.y1, self.y2, self.cond12_table, self.cond12_undefined):
            a.setflags(write=False)

    @property
    def m0(self) -> int:
        return self.y0.shape[0]

    @property
    def m1(self) -> int:
        return self.y1.shape[1]

    @property
    def m2(self) -> int:
        return self.y2.shape[1]

    @property
    def n(self) -> int:
        return self.y0.shape[1]

    def y12_block(self, w0: int, w1: int) -> np.ndarray:
        """Refinement codewords y12[w0, w1, :, :] (shape (M2, n)), 0-based."""
        rng = _generator(self.seed, (3, w0, w1))
        idx = np.broadcast_arrays(self.y0[w0][None, :], self.y1[w0, w1][None, :], self.y2[w0])
        block = _sample_conditional(rng, self.cond12_table, self.cond12_undefined, tuple(idx))
        block.setflags(write=False)
        return block

    @functools.cached_property
    def y12(self) -> np.ndarray:
        """Full [M0][M1][M2][n] refinement table (materialized on first access)."""
        full = np.stack([
            np.stack([self.y12_block(w0, w1) for w1 in range(self.m1)])
            for w0 in range(self.m0)
        ])
        full.setflags(write=False)
        return full

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "y0": self.y0.tolist(),
            "y1": self.y1.tolist(),
            "y2": self.y2.tolist(),
            "y12": self.y12.tolist(),
        }


def _sample_iid(rng: np.random.Generator, pmf: np.ndarray, shape) -> np.ndarray:
    cdf = np.cumsum(pmf)
    u = rng.random(shape)
    return np.searchsorted(cdf, u, side="right").astype(np.int64).clip(0, pmf.size - 1)


def _sample_conditional(
    rng: np.random.Generator, table: np.ndarray, undefined: np.ndarray, idx: tuple
) -> np.ndarray:
    """Per-cell draw from table[idx + (.,)] for index arrays of a common shape."""
    k = table.shape[-1]
    # flatten the conditioning tuple to one row code so the gather is cheap
    flat = np.zeros(idx[0].shape, dtype=np.int64)
    for size, part in zip(table.shape[:-1], idx):
        flat *= size
        flat += part
    if undefined.reshape(-1)[flat].any():
        raise UndefinedConditionalError(
            "realized conditioning tuple has zero probability under the design distribution"
        )
    cdf = np.cumsum(table.reshape(-1, k), axis=-1)
    u = rng.random(idx[0].shape)
    out = np.zeros(idx[0].shape, dtype=np.int64)
    for col in range(k - 1):
        out += u >= cdf[:, col][flat]
    return out


def _presence(words: np.ndarray, size: int, n: int) -> np.ndarray:
    """Boolean (n, size) mask of symbols appearing in each position across rows."""
    mask = np.zeros((n, size), dtype=bool)
    mask[np.broadcast_to(np.arange(n), words.shape), words] = True
    return mask


def _generator(seed: int, stream) -> np.random.Generator:
    key = stream if isinstance(stream, tuple) else (stream,)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def generate_codebook_th1(
    dist: JointPmf,
    r1: float,
    r2: float,
    eps1: float,
    eps2: float,
    n: int,
    seed: int,
    budget: int | None = None,
) -> CodebookTh1:
    """Draw a single-layer codebook for a design distribution over (X, Y1, Y2, Y12)."""
    if dist.ndim != 4:
        raise ValueError("design distribution must have axes (X, Y1, Y2, Y12)")
    m1 = codebook_size(r1, eps1, n)
    m2 = codebook_size(r2, eps2, n)
    limit = cell_budget() if budget is None else budget
    if m1 * m2 > limit:
        raise BudgetError(f"codebook has {m1 * m2} index pairs, budget is {limit}")
    p1 = marginalize(dist, (1,)).probs
    p2 = marginalize(dist, (2,)).probs
    cond12 = condition(marginalize(dist, (1, 2, 3)), given=(0, 1))
    g1, g2 = (_generator(seed, s) for s in (0, 1))
    y1 = _sample_iid(g1, p1, (m1, n))
    y2 = _sample_iid(g2, p2, (m2, n))
    if cond12.undefined.any():
        pres1 = _presence(y1, dist.shape[1], n)
        pres2 = _presence(y2, dist.shape[2], n)
        if (pres1[:, :, None] & pres2[:, None, :] & cond12.undefined[None]).any():
            raise UndefinedConditionalError(
                "realized (y1, y2) pair has zero probability under the design distribution"
            )
    return CodebookTh1(
        y1=y1, y2=y2,
        cond12_table=cond12.table.copy(), cond12_undefined=cond12.undefined.copy(),
        sizes=dist.shape[1:], seed=seed,
    )


def generate_codebook_th2(
    dist: JointPmf,
    r0: float,
    r1: float,
    r2: float,
    eps0: float,
    eps1: float,
    eps2: float,
    n: int,
    seed: int,
    budget: int | None = None,
) -> CodebookTh2:
    """Draw a layered codebook for a design distribution over (X, Y0, Y1, Y2, Y12)."""
    if dist.ndim != 5:
        raise ValueError("design distribution must have axes (X, Y0, Y1, Y2, Y12)")
    m0 = codebook_size(r0, eps0, n)
    m1 = codebook_size(r1, eps1, n)
    m2 = codebook_size(r2, eps2, n)
    limit = cell_budget() if budget is None else budget
    if m0 * m1 * m2 > limit:
        raise BudgetError(f"codebook has {m0 * m1 * m2} index triples, budget is {limit}")
    p0 = marginalize(dist, (1,)).probs
    cond1 = condition(marginalize(dist, (1, 2)), given=(0,))
    cond2 = condition(marginalize(dist, (1, 3)), given=(0,))
    cond12 = condition(marginalize(dist, (1, 2, 3, 4)), given=(0, 1, 2))
    g0, g1, g2 = (_generator(seed, s) for s in (0, 1, 2))
    y0 = _sample_iid(g0, p0, (m0, n))
    y1 = _sample_conditional(
        g1, cond1.table, cond1.undefined, (np.broadcast_to(y0[:, None, :], (m0, m1, n)),)
    )
    y2 = _sample_conditional(
        g2, cond2.table, cond2.undefined, (np.broadcast_to(y0[:, None, :], (m0, m2, n)),)
    )
    if cond12.undefined.any():
        for w0 in range(m0):
            pres1 = _presence(y1[w0], dist.shape[2], n)
            pres2 = _presence(y2[w0], dist.shape[3], n)
            und = cond12.undefined[y0[w0]]  # (n, |Y1|, |Y2|)
            if (pres1[:, :, None] & pres2[:, None, :] & und).any():
                raise UndefinedConditionalError(
                    "realized (y0, y1, y2) tuple has zero probability "
                    "under the design distribution"
                )
    return CodebookTh2(
        y0=y0, y1=y1, y2=y2,
        cond12_table=cond12.table.copy(), cond12_undefined=cond12.undefined.copy(),
        sizes=dist.shape[1:], seed=seed,
    )


def _combined_codes(seqs: list[np.ndarray], sizes: tuple[int, ...]) -> np.ndarray:
    flat = np.zeros_like(seqs[0])
    for a, m in zip(seqs, sizes):
        flat = flat * m + a
    return flat


def _typical_w2_mask(
    xs: np.ndarray, y1_row: np.ndarray, y2: np.ndarray, y12_rows: np.ndarray,
    p_flat: np.ndarray, sizes: tuple[int, ...], epsilon: float,
) -> np.ndarray:
    """Vectorized 4-tuple typicality over all rows of the second index."""
    n = xs.shape[0]
    m2 = y2.shape[0]
    ncells = p_flat.size
    codes = _combined_codes(
        [np.broadcast_to(xs, (m2, n)), np.broadcast_to(y1_row, (m2, n)), y2, y12_rows],
        sizes,
    )
    offset = codes + ncells * np.arange(m2, dtype=np.int64)[:, None]
    counts = np.bincount(offset.ravel(), minlength=m2 * ncells).reshape(m2, ncells)
    tol = epsilon / ncells
    ok = np.all(np.abs(counts / n - p_flat) < tol, axis=1)
    zero = p_flat == 0
    if zero.any():
        ok &= ~np.any(counts[:, zero] > 0, axis=1)
    return ok


def _source_typical(xs: SymbolSequence, dist: JointPmf, epsilon: float) -> bool:
    out_size = math.prod(dist.shape[1:])
    eps_prime = epsilon / (2 * out_size)
    return is_strongly_typical((xs,), marginalize(dist, (0,)), eps_prime)


def encode_th1(
    xs: SymbolSequence, cb: CodebookTh1, dist: JointPmf, epsilon: float
) -> EncodeResult:
    """First (w1, w2) in lexicographic order whose 4-tuple is strongly typical."""
    if xs.n != cb.n:
        raise ValueError("source length does not match codebook blocklength")
    if not _source_typical(xs, dist, epsilon):
        return EncodeResult(indices=(1, 1), found=False, case_label="a")
    p_flat = dist.probs.ravel()
    for w1 in range(cb.m1):
        ok = _typical_w2_mask(
            xs.symbols, cb.y1[w1], cb.y2, cb.y12_block(w1), p_flat, dist.shape, epsilon
        )
        if ok.any():
            w2 = int(np.argmax(ok))
            return EncodeResult(indices=(w1 + 1, w2 + 1), found=True, case_label="c")
    return EncodeResult(indices=(1, 1), found=False, case_label="b")


def count_typical_tuples(
    xs: SymbolSequence, cb: CodebookTh1, dist: JointPmf, epsilon: float
) -> int:
    """Exact count of index pairs whose 4-tuple is strongly typical."""
    if xs.n != cb.n:
        raise ValueError("source length does not match codebook blocklength")
    p_flat = dist.probs.ravel()
    total = 0
    for w1 in range(cb.m1):
        ok = _typical_w2_mask(
            xs.symbols, cb.y1[w1], cb.y2, cb.y12_block(w1), p_flat, dist.shape, epsilon
        )
        total += int(ok.sum())
    return total


def decode_th1(cb: CodebookTh1, result: EncodeResult, scenario: int) -> SymbolSequence:
    """Reconstruction for the given reception scenario (1, 2, or 12)."""
    w1, w2 = result.indices
    if not (1 <= w1 <= cb.m1 and 1 <= w2 <= cb.m2):
        raise IndexError("codeword index out of range")
    if scenario == 1:
        row, size = cb.y1[w1 - 1], cb.sizes[0]
    elif scenario == 2:
        row, size = cb.y2[w2 - 1], cb.sizes[1]
    elif scenario == 12:
        row, size = cb.y12_block(w1 - 1)[w2 - 1], cb.sizes[2]
    else:
        raise ValueError("scenario must be 1, 2, or 12")
    return SymbolSequence(symbols=row.copy(), alphabet_size=size)


def encode_th2(
    xs: SymbolSequence, cb: CodebookTh2, dist: JointPmf, epsilon: float
) -> EncodeResult:
    """First (w0, w1, w2), w0 major, whose 5-tuple is strongly typical."""
    if xs.n != cb.n:
        raise ValueError("source length does not match codebook blocklength")
    if not _source_typical(xs, dist, epsilon):
        return EncodeResult(indices=(1, 1, 1), found=False, case_label="a")
    p_flat = dist.probs.ravel()
    n = xs.n
    ncells = p_flat.size
    tol = epsilon / ncells
    zero = p_flat == 0
    for w0 in range(cb.m0):
        for w1 in range(cb.m1):
            codes = _combined_codes(
                [
                    np.broadcast_to(xs.symbols, (cb.m2, n)),
                    np.broadcast_to(cb.y0[w0], (cb.m2, n)),
                    np.broadcast_to(cb.y1[w0, w1], (cb.m2, n)),
                    cb.y2[w0],
                    cb.y12_block(w0, w1),
                ],
                dist.shape,
            )
            offset = codes + ncells * np.arange(cb.m2, dtype=np.int64)[:, None]
            counts = np.bincount(offset.ravel(), minlength=cb.m2 * ncells).reshape(
                cb.m2, ncells
            )
            ok = np.all(np.abs(counts / n - p_flat) < tol, axis=1)
            if zero.any():
                ok &= ~np.any(counts[:, zero] > 0, axis=1)
            if ok.any():
                w2 = int(np.argmax(ok))
                return EncodeResult(
                    indices=(w0 + 1, w1 + 1, w2 + 1), found=True, case_label="c"
                )
    return EncodeResult(indices=(1, 1, 1), found=False, case_label="b")


def decode_th2(cb: CodebookTh2, result: EncodeResult, scenario: int) -> SymbolSequence:
    """Reconstruction for the given scenario; the common index always arrives."""
    w0, w1, w2 = result.indices
    if not (1 <= w0 <= cb.m0 and 1 <= w1 <= cb.m1 and 1 <= w2 <= cb.m2):
        raise IndexError("codeword index out of range")
    if scenario == 1:
        row, size = cb.y1[w0 - 1, w1 - 1], cb.sizes[1]
    elif scenario == 2:
        row, size = cb.y2[w0 - 1, w2 - 1], cb.sizes[2]
    elif scenario == 12:
        row, size = cb.y12_block(w0 - 1, w1 - 1)[w2 - 1], cb.sizes[3]
    else:
        raise ValueError("scenario must be 1, 2, or 12")
    return SymbolSequence(symbols=row.copy(), alphabet_size=size)


def effective_rates_th2(r0: float, r1: float, r2: float) -> tuple[float, float]:
    """Per-link rates after splitting the common rate onto both descriptions."""
    return (r1 + r0, r2 + r0)
