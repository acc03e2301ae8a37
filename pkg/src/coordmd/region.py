"""Achievable rate-region evaluation and frontier search.

A query fixes a source distribution, a target channel, and three
total-variation thresholds (description 1 only, description 2 only, both).
Candidates are conditional distributions of the reconstruction variables
given the source; each feasible candidate contributes three half-space
constraints on (R1, R2), and the region is the union over candidates.  The
search (grid + random restarts + coordinate descent) provides inner
approximations only: a negative answer means "not found within budget".
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .probability import (
    ConditionalPmf,
    JointPmf,
    Pmf,
    compose,
    conditional_mutual_information,
    entropy,
    in_delta_neighborhood,
    marginalize,
    mutual_information,
    total_variation,
)

CONSTRAINT_TOL = 1e-9


class SearchConfigError(ValueError):
    """Raised on an invalid search configuration."""


class GridTooLargeError(ValueError):
    """Raised when the exhaustive grid would exceed its candidate limit."""


@dataclass(frozen=True)
class RegionQuery:
    """Problem instance: source, target channel, and the three TV thresholds."""

    p0: Pmf
    target_channel: ConditionalPmf
    delta1: float
    delta2: float
    delta12: float

    def __post_init__(self):
        for d in (self.delta1, self.delta2, self.delta12):
            if not 0.0 <= d <= 1.0:
                raise ValueError("deltas must lie in [0, 1]")
        if self.target_channel.given_ndim != 1 or len(self.target_channel.out_shape) != 1:
            raise ValueError("target channel must map one source axis to one output axis")
        if self.target_channel.given_shape[0] != self.p0.size:
            raise ValueError("target channel rows do not match the source alphabet")

    @property
    def x_size(self) -> int:
        return self.p0.size

    @property
    def y_size(self) -> int:
        return self.target_channel.out_shape[0]

    @property
    def deltas(self) -> tuple[float, float, float]:
        return (self.delta1, self.delta2, self.delta12)

    def target_joint(self) -> JointPmf:
        return compose(self.p0, self.target_channel)


@dataclass(frozen=True)
class CandidateTh1:
    """Conditional of the three reconstructions given the source."""

    cond: ConditionalPmf

    def __post_init__(self):
        if self.cond.given_ndim != 1 or len(self.cond.out_shape) != 3:
            raise ValueError("candidate must condition (Y1, Y2, Y12) on X")


@dataclass(frozen=True)
class CandidateTh2:
    """Conditional of (U, Y1, Y2, Y12) given the source."""

    cond: ConditionalPmf

    def __post_init__(self):
        if self.cond.given_ndim != 1 or len(self.cond.out_shape) != 4:
            raise ValueError("candidate must condition (U, Y1, Y2, Y12) on X")

    @property
    def u_size(self) -> int:
        return self.cond.out_shape[0]


@dataclass(frozen=True)
class RateConstraints:
    """Right-hand sides of the three rate inequalities (nats per symbol)."""

    r1_min: float
    r2_min: float
    rsum_min: float

    def __post_init__(self):
        for v in (self.r1_min, self.r2_min, self.rsum_min):
            if v < -1e-12:
                raise ValueError("mutual informations must be nonnegative")

    def satisfied_by(self, r1: float, r2: float, tol: float = CONSTRAINT_TOL) -> bool:
        return (
            r1 >= self.r1_min - tol
            and r2 >= self.r2_min - tol
            and r1 + r2 >= self.rsum_min - tol
        )

    def corner_points(self) -> list[tuple[float, float]]:
        a, b, c = max(self.r1_min, 0.0), max(self.r2_min, 0.0), max(self.rsum_min, 0.0)
        return [(a, max(b, c - a)), (max(a, c - b), b)]


@dataclass(frozen=True)
class SearchConfig:
    """Budgeted search: simplex grid step, random restarts, local refinement."""

    grid_step: int = 4
    restarts: int = 32
    refine_iters: int = 400
    seed: int = 0
    max_grid_candidates: int = 2_000_000
    u_sizes: tuple[int, ...] = ()

    def __post_init__(self):
        if self.grid_step < 1 or self.restarts < 0 or self.refine_iters < 0:
            raise SearchConfigError("grid_step must be >= 1, budgets nonnegative")
        if self.max_grid_candidates < 1:
            raise SearchConfigError("max_grid_candidates must be positive")


@dataclass(frozen=True)
class FrontierPoint:
    r1: float
    r2: float
    rsum: float
    witness_id: str


@dataclass(frozen=True)
class RegionFrontier:
    """Pareto-minimal (R1, R2) corner points with witness candidates."""

    points: tuple[FrontierPoint, ...]
    witnesses: dict[str, np.ndarray]
    complete: bool
    metadata: dict = field(default_factory=dict)

    def min_sum_rate(self) -> float:
        if not self.points:
            return math.inf
        return min(p.r1 + p.r2 for p in self.points)


# ---------------------------------------------------------------------------
# single-candidate evaluation (module route; the batch route below is used by
# the search and cross-checked against this one in tests)


def feasible_th1(cand: CandidateTh1, q: RegionQuery) -> bool:
    """All three composed source-reconstruction marginals lie in their TV balls."""
    joint = compose(q.p0, cand.cond)  # axes (X, Y1, Y2, Y12)
    if joint.shape[1:] != (q.y_size,) * 3:
        raise ValueError("candidate reconstruction alphabets do not match the target")
    target = q.target_joint()
    for axis, delta in zip((1, 2, 3), q.deltas):
        if not in_delta_neighborhood(marginalize(joint, (0, axis)), target, delta):
            return False
    return True


def feasible_th2(cand: CandidateTh2, q: RegionQuery) -> bool:
    """Neighborhood feasibility; the auxiliary variable is unconstrained."""
    joint = compose(q.p0, cand.cond)  # axes (X, U, Y1, Y2, Y12)
    if joint.shape[2:] != (q.y_size,) * 3:
        raise ValueError("candidate reconstruction alphabets do not match the target")
    target = q.target_joint()
    for axis, delta in zip((2, 3, 4), q.deltas):
        if not in_delta_neighborhood(marginalize(joint, (0, axis)), target, delta):
            return False
    return True


def th1_constraints(p0: Pmf, cand: CandidateTh1) -> RateConstraints:
    """R1 >= I(X;Y1), R2 >= I(X;Y2), R1+R2 >= I(X;Y1,Y2,Y12) + I(Y1;Y2)."""
    joint = compose(p0, cand.cond)
    return RateConstraints(
        r1_min=mutual_information(joint, ((0,), (1,))),
        r2_min=mutual_information(joint, ((0,), (2,))),
        rsum_min=mutual_information(joint, ((0,), (1, 2, 3)))
        + mutual_information(joint, ((1,), (2,))),
    )


def th2_constraints(p0: Pmf, cand: CandidateTh2) -> RateConstraints:
    """Layered-scheme constraints with the auxiliary common variable."""
    joint = compose(p0, cand.cond)  # axes (X, U, Y1, Y2, Y12)
    return RateConstraints(
        r1_min=mutual_information(joint, ((0,), (2, 1))),
        r2_min=mutual_information(joint, ((0,), (3, 1))),
        rsum_min=mutual_information(joint, ((0,), (1,)))
        + mutual_information(joint, ((0,), (1, 2, 3, 4)))
        + conditional_mutual_information(joint, (2,), (3,), (1,)),
    )


# ---------------------------------------------------------------------------
# batch evaluation over stacks of candidate tables


def _batch_entropy(a: np.ndarray) -> np.ndarray:
    """Entropy along all axes but the first, with 0 ln 0 = 0."""
    flat = a.reshape(a.shape[0], -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(flat > 0, flat * np.log(flat), 0.0)
    return -t.sum(axis=1)


def _batch_eval_th1(p0: np.ndarray, tables: np.ndarray, target: np.ndarray):
    """TV distances and rate constraints for a stack of (X -> Y1,Y2,Y12) tables."""
    j = p0[None, :, None, None, None] * tables  # (B, x, y1, y2, y12)
    hx = entropy(p0)
    tvs = np.stack(
        [
            0.5 * np.abs(j.sum(axis=(3, 4)) - target[None]).sum(axis=(1, 2)),
            0.5 * np.abs(j.sum(axis=(2, 4)) - target[None]).sum(axis=(1, 2)),
            0.5 * np.abs(j.sum(axis=(2, 3)) - target[None]).sum(axis=(1, 2)),
        ],
        axis=1,
    )
    jy = j.sum(axis=1)  # (B, y1, y2, y12)
    r1 = hx + _batch_entropy(jy.sum(axis=(2, 3))) - _batch_entropy(j.sum(axis=(3, 4)))
    r2 = hx + _batch_entropy(jy.sum(axis=(1, 3))) - _batch_entropy(j.sum(axis=(2, 4)))
    i_all = hx + _batch_entropy(jy) - _batch_entropy(j)
    jy1y2 = jy.sum(axis=3)
    i_12 = (
        _batch_entropy(jy1y2.sum(axis=2))
        + _batch_entropy(jy1y2.sum(axis=1))
        - _batch_entropy(jy1y2)
    )
    cons = np.stack([r1, r2, i_all + i_12], axis=1)
    return tvs, cons


def _batch_eval_th2(p0: np.ndarray, tables: np.ndarray, target: np.ndarray):
    """Same as the single-layer batch but over (X -> U,Y1,Y2,Y12) tables."""
    j = p0[None, :, None, None, None, None] * tables  # (B, x, u, y1, y2, y12)
    hx = entropy(p0)
    tvs = np.stack(
        [
            0.5 * np.abs(j.sum(axis=(2, 4, 5)) - target[None]).sum(axis=(1, 2)),
            0.5 * np.abs(j.sum(axis=(2, 3, 5)) - target[None]).sum(axis=(1, 2)),
            0.5 * np.abs(j.sum(axis=(2, 3, 4)) - target[None]).sum(axis=(1, 2)),
        ],
        axis=1,
    )
    r1 = hx + _batch_entropy(j.sum(axis=(1, 4, 5))) - _batch_entropy(j.sum(axis=(4, 5)))
    r2 = hx + _batch_entropy(j.sum(axis=(1, 3, 5))) - _batch_entropy(j.sum(axis=(3, 5)))
    ju = j.sum(axis=(1, 3, 4, 5))
    i_xu = hx + _batch_entropy(ju) - _batch_entropy(j.sum(axis=(3, 4, 5)))
    i_xall = hx + _batch_entropy(j.sum(axis=1)) - _batch_entropy(j)
    juy1 = j.sum(axis=(1, 4, 5))
    juy2 = j.sum(axis=(1, 3, 5))
    juy1y2 = j.sum(axis=(1, 5))
    i_12_u = (
        _batch_entropy(juy1)
        + _batch_entropy(juy2)
        - _batch_entropy(ju)
        - _batch_entropy(juy1y2)
    )
    cons = np.stack([r1, r2, i_xu + i_xall + i_12_u], axis=1)
    return tvs, cons


def _batch_eval(p0, tables, target, theorem):
    return (_batch_eval_th1 if theorem == 1 else _batch_eval_th2)(p0, tables, target)


# ---------------------------------------------------------------------------
# Pareto bookkeeping


def _dominates(p: tuple[float, float], q: tuple[float, float]) -> bool:
    return p[0] <= q[0] + 1e-12 and p[1] <= q[1] + 1e-12


def _constraint_corners(cons: np.ndarray) -> np.ndarray:
    """Both (R1, R2) corner points for a stack of constraint triples (B, 3)."""
    a = np.maximum(cons[:, 0], 0.0)
    b = np.maximum(cons[:, 1], 0.0)
    c = np.maximum(cons[:, 2], 0.0)
    c1 = np.stack([a, np.maximum(b, c - a)], axis=1)
    c2 = np.stack([np.maximum(a, c - b), b], axis=1)
    return np.stack([c1, c2], axis=1)  # (B, 2, 2)


def _pareto_indices(points: np.ndarray) -> list[int]:
    """Indices of the Pareto-minimal rows of an (N, 2) point array."""
    order = np.lexsort((points[:, 1], points[:, 0]))
    keep: list[int] = []
    best = math.inf
    for idx in order:
        if points[idx, 1] < best - 1e-12:
            keep.append(int(idx))
            best = points[idx, 1]
    return keep


class _ParetoAccumulator:
    """Merge of partial Pareto sets; associative and commutative."""

    def __init__(self):
        self.entries: list[tuple[float, float, np.ndarray]] = []

    def add(self, r1: float, r2: float, witness: np.ndarray):
        point = (max(r1, 0.0), max(r2, 0.0))
        for e in self.entries:
            if _dominates((e[0], e[1]), point):
                return
        self.entries = [e for e in self.entries if not _dominates(point, (e[0], e[1]))]
        self.entries.append((point[0], point[1], witness))

    def add_batch(self, cons: np.ndarray, tables: np.ndarray):
        corners = _constraint_corners(cons).reshape(-1, 2)
        owners = np.repeat(np.arange(cons.shape[0]), 2)
        for idx in _pareto_indices(corners):
            r1, r2 = corners[idx]
            self.add(float(r1), float(r2), tables[owners[idx]])

    def frontier(self, complete: bool, metadata: dict) -> RegionFrontier:
        pts = sorted(self.entries, key=lambda e: (e[0], e[1]))
        witnesses = {}
        points = []
        for i, (r1, r2, w) in enumerate(pts):
            wid = f"w{i}"
            witnesses[wid] = w
            points.append(FrontierPoint(r1=r1, r2=r2, rsum=r1 + r2, witness_id=wid))
        return RegionFrontier(
            points=tuple(points), witnesses=witnesses, complete=complete, metadata=metadata
        )


# ---------------------------------------------------------------------------
# grid enumeration


def _simplex_grid(step: int, dim: int) -> np.ndarray:
    """All distributions on `dim` cells with entries that are multiples of 1/step."""
    rows = []
    for comp in itertools.combinations(range(step + dim - 1), dim - 1):
        prev = -1
        parts = []
        for c in comp:
            parts.append(c - prev - 1)
            prev = c
        parts.append(step + dim - 2 - prev)
        rows.append(parts)
    return np.array(rows, dtype=float) / step


def _grid_candidate_count(step: int, dim: int, nx: int) -> int:
    rows = math.comb(step + dim - 1, dim - 1)
    return rows**nx


def _iter_grid_tables(rows: np.ndarray, nx: int, out_shape, chunk: int):
    """Yield stacks of candidate tables built from per-row grid choices."""
    nrows = rows.shape[0]
    total = nrows**nx
    for lo in range(0, total, chunk):
        ids = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        sel = np.empty((ids.size, nx), dtype=np.int64)
        rem = ids.copy()
        for ax in range(nx - 1, -1, -1):
            sel[:, ax] = rem % nrows
            rem //= nrows
        tables = rows[sel]  # (B, nx, dim)
        yield tables.reshape((ids.size, nx) + tuple(out_shape))


def grid_oracle(
    q: RegionQuery,
    theorem: int,
    step: int,
    u_size: int = 1,
    max_candidates: int = 10_000_000,
    chunk: int = 65536,
) -> RegionFrontier:
    """Exhaustive frontier over all simplex-grid candidates at spacing 1/step."""
    if theorem not in (1, 2):
        raise ValueError("theorem must be 1 or 2")
    y = q.y_size
    out_shape = (y, y, y) if theorem == 1 else (u_size, y, y, y)
    dim = math.prod(out_shape)
    total = _grid_candidate_count(step, dim, q.x_size)
    if total > max_candidates:
        raise GridTooLargeError(
            f"grid has {total} candidates, limit is {max_candidates}"
        )
    rows = _simplex_grid(step, dim)
    target = q.target_joint().probs
    deltas = np.array(q.deltas)
    acc = _ParetoAccumulator()
    for tables in _iter_grid_tables(rows, q.x_size, out_shape, chunk):
        tvs, cons = _batch_eval(q.p0.probs, tables, target, theorem)
        feas = np.all(tvs <= deltas[None] + 1e-12, axis=1)
        if feas.any():
            acc.add_batch(cons[feas], tables[feas])
    return acc.frontier(
        complete=True,
        metadata={"method": "grid_oracle", "step": step, "candidates": total,
                  "theorem": theorem, "u_size": u_size},
    )


# ---------------------------------------------------------------------------
# budgeted search: grid + random restarts + coordinate descent


def _random_tables(rng: np.random.Generator, nx: int, out_shape, count: int) -> np.ndarray:
    dim = math.prod(out_shape)
    flat = rng.dirichlet(np.ones(dim), size=(count, nx))
    return flat.reshape((count, nx) + tuple(out_shape))


def _eval_one(p0, table, target, deltas, theorem):
    tvs, cons = _batch_eval(p0, table[None], target, theorem)
    feasible = bool(np.all(tvs[0] <= deltas + 1e-12))
    return feasible, cons[0]


def _refine_sum_rate(p0, table, target, deltas, theorem, rng, iters):
    """Stochastic coordinate descent on the sum-rate constraint, staying feasible."""
    table = table.copy()
    feasible, cons = _eval_one(p0, table, target, deltas, theorem)
    if not feasible:
        return table, cons, False
    nx = table.shape[0]
    dim = table[0].size
    step = 0.25
    flat = table.reshape(nx, dim)
    best = cons[2]
    misses = 0
    for _ in range(iters):
        x = int(rng.integers(nx))
        i, jcell = rng.choice(dim, size=2, replace=False)
        move = min(step * rng.random(), flat[x, i])
        if move <= 0:
            misses += 1
            continue
        trial = flat.copy()
        trial[x, i] -= move
        trial[x, jcell] += move
        cand = trial.reshape(table.shape)
        ok, c = _eval_one(p0, cand, target, deltas, theorem)
        if ok and c[2] < best - 1e-12:
            flat, best, cons = trial, c[2], c
            misses = 0
        else:
            misses += 1
            if misses >= 25:
                step *= 0.5
                misses = 0
                if step < 1e-4:
                    break
    return flat.reshape(table.shape), cons, True


def _search(q: RegionQuery, theorem: int, search: SearchConfig, u_size: int,
            visit) -> bool:
    """Run all search stages for one auxiliary-alphabet size.

    ``visit(tables, cons)`` receives each batch of feasible candidates and
    returns True to stop early.  Returns grid completeness.
    """
    y = q.y_size
    out_shape = (y, y, y) if theorem == 1 else (u_size, y, y, y)
    dim = math.prod(out_shape)
    target = q.target_joint().probs
    deltas = np.array(q.deltas)
    p0 = q.p0.probs
    rng = np.random.default_rng(search.seed)

    complete = True
    step = search.grid_step
    while step >= 1 and _grid_candidate_count(step, dim, q.x_size) > search.max_grid_candidates:
        step -= 1
        complete = False
    if step >= 1:
        rows = _simplex_grid(step, dim)
        for tables in _iter_grid_tables(rows, q.x_size, out_shape, 65536):
            tvs, cons = _batch_eval(p0, tables, target, theorem)
            feas = np.all(tvs <= deltas[None] + 1e-12, axis=1)
            if feas.any() and visit(tables[feas], cons[feas]):
                return complete
    else:
        complete = False

    if search.restarts:
        starts = _random_tables(rng, q.x_size, out_shape, search.restarts)
        for t in starts:
            refined, cons, feasible = _refine_sum_rate(
                p0, t, target, deltas, theorem, rng, search.refine_iters
            )
            if feasible and visit(refined[None], np.asarray(cons)[None]):
                return complete
    return complete


def _u_sweep(q: RegionQuery, search: SearchConfig) -> tuple[int, ...]:
    return search.u_sizes or (1, 2, q.y_size + 1)


def trace_frontier(q: RegionQuery, theorem: int, search: SearchConfig) -> RegionFrontier:
    """Pareto-minimal (R1, R2) corner points found within the search budget."""
    if theorem not in (1, 2):
        raise ValueError("theorem must be 1 or 2")
    acc = _ParetoAccumulator()

    def visit(tables, cons):
        acc.add_batch(cons, tables)
        return False

    complete = True
    u_sizes = (1,) if theorem == 1 else _u_sweep(q, search)
    for u in u_sizes:
        complete &= _search(q, theorem, search, u, visit)
    return acc.frontier(
        complete=complete,
        metadata={"method": "trace_frontier", "grid_step": search.grid_step,
                  "restarts": search.restarts, "theorem": theorem,
                  "u_sizes": list(u_sizes)},
    )


def point_achievable(
    q: RegionQuery, r1: float, r2: float, theorem: int, search: SearchConfig
) -> tuple[bool, np.ndarray | None]:
    """Inner-bound membership: True iff a feasible witness is found within budget.

    False is "not found within budget", never a converse claim.
    """
    if r1 < 0 or r2 < 0:
        raise ValueError("rates must be nonnegative")
    if theorem not in (1, 2):
        raise ValueError("theorem must be 1 or 2")
    hit: list[np.ndarray] = []

    def visit(tables, cons):
        ok = (
            (cons[:, 0] <= r1 + CONSTRAINT_TOL)
            & (cons[:, 1] <= r2 + CONSTRAINT_TOL)
            & (cons[:, 2] <= r1 + r2 + CONSTRAINT_TOL)
        )
        if ok.any():
            hit.append(tables[int(np.argmax(ok))])
            return True
        return False

    u_sizes = (1,) if theorem == 1 else _u_sweep(q, search)
    for u in u_sizes:
        _search(q, theorem, search, u, visit)
        if hit:
            return True, hit[0]
    return False, None
