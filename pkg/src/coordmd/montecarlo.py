"""End-to-end coordination simulation harness.

Estimates the expected total variation between the realized joint type and
the target joint distribution in the three reception scenarios, averaging
over source and codebook randomness (fresh codebook per trial by default).
Per-trial randomness is derived by keying the master seed with (n, trial),
so results are bit-identical regardless of worker count or schedule.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import coding
from .probability import (
    JointPmf,
    SymbolSequence,
    compose,
    conditional_entropy,
    entropy,
    joint_type,
    marginalize,
    total_variation,
)
from .region import CandidateTh1, CandidateTh2, RegionQuery
from .typicality import BoundReport, delta_t, eps_m, is_strongly_typical

SCENARIOS = (1, 2, 12)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a coordination experiment."""

    query: RegionQuery
    candidate: CandidateTh1 | CandidateTh2
    rates: tuple[float, ...]
    rate_slacks: tuple[float, ...]
    epsilon: float
    n_values: tuple[int, ...]
    trials: int
    master_seed: int
    fresh_codebook_per_trial: bool = True

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "rate_slacks", tuple(float(s) for s in self.rate_slacks))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.n_values:
            raise ValueError("n_values must be nonempty")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        want = 3 if self.theorem == 2 else 2
        if len(self.rates) != want or len(self.rate_slacks) != want:
            raise ValueError(f"theorem {self.theorem} needs {want} rates and slacks")

    @property
    def theorem(self) -> int:
        return 2 if isinstance(self.candidate, CandidateTh2) else 1

    def design_dist(self) -> JointPmf:
        return compose(self.query.p0, self.candidate.cond)

    def target_joint(self) -> JointPmf:
        return self.query.target_joint()


@dataclass(frozen=True)
class TrialResult:
    n: int
    trial_index: int
    tv: dict[int, float]  # scenario -> total variation
    encode: coding.EncodeResult


@dataclass(frozen=True)
class ScenarioStats:
    """Sample mean/stderr of the per-trial TV plus case tallies for one scenario."""

    scenario: int
    mean_tv: float
    std_err: float
    case_counts: tuple[int, int, int]  # (a, b, c)


@dataclass(frozen=True)
class KStatistics:
    """Sample moments of the typical-pair count plus the closed-form diagnostics."""

    mean_k: float
    var_k: float
    frac_k_zero: float
    ek_lower_bound: BoundReport
    pr_zero_chebyshev: BoundReport


def _seed_int(master_seed: int, key: tuple[int, ...]) -> int:
    state = np.random.SeedSequence(master_seed, spawn_key=key).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def _source_rng(cfg: ExperimentConfig, n: int, trial_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(n, trial_index, 0))
    return np.random.Generator(np.random.Philox(ss))


def _codebook_seed(cfg: ExperimentConfig, n: int, trial_index: int) -> int:
    t = trial_index if cfg.fresh_codebook_per_trial else 0
    return _seed_int(cfg.master_seed, (n, t, 1))


def _draw_source(cfg: ExperimentConfig, n: int, trial_index: int) -> SymbolSequence:
    rng = _source_rng(cfg, n, trial_index)
    p = cfg.query.p0.probs
    cdf = np.cumsum(p)
    symbols = np.searchsorted(cdf, rng.random(n), side="right").clip(0, p.size - 1)
    return SymbolSequence(symbols=symbols.astype(np.int64), alphabet_size=p.size)


def _build_codebook(cfg: ExperimentConfig, dist: JointPmf, n: int, seed: int):
    if cfg.theorem == 1:
        return coding.generate_codebook_th1(
            dist, cfg.rates[0], cfg.rates[1], cfg.rate_slacks[0], cfg.rate_slacks[1], n, seed
        )
    return coding.generate_codebook_th2(
        dist,
        cfg.rates[0], cfg.rates[1], cfg.rates[2],
        cfg.rate_slacks[0], cfg.rate_slacks[1], cfg.rate_slacks[2],
        n, seed,
    )


def run_trial(cfg: ExperimentConfig, n: int, trial_index: int) -> TrialResult:
    """One end-to-end trial: draw source, build codebook, encode, decode, measure."""
    dist = cfg.design_dist()
    target = cfg.target_joint()
    xs = _draw_source(cfg, n, trial_index)
    cb = _build_codebook(cfg, dist, n, _codebook_seed(cfg, n, trial_index))
    if cfg.theorem == 1:
        result = coding.encode_th1(xs, cb, dist, cfg.epsilon)
        decode = coding.decode_th1
    else:
        result = coding.encode_th2(xs, cb, dist, cfg.epsilon)
        decode = coding.decode_th2
    tv = {
        s: total_variation(joint_type(xs, decode(cb, result, s)), target)
        for s in SCENARIOS
    }
    return TrialResult(n=n, trial_index=trial_index, tv=tv, encode=result)


def _run_trial_star(args) -> TrialResult:
    return run_trial(*args)


def run_experiment(
    cfg: ExperimentConfig, workers: int = 1
) -> list[tuple[int, dict[int, ScenarioStats], list[TrialResult]]]:
    """Per-blocklength scenario statistics; schedule-independent given the seed."""
    out = []
    for n in cfg.n_values:
        jobs = [(cfg, n, t) for t in range(cfg.trials)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_trial_star, jobs, chunksize=8))
        else:
            results = [run_trial(*j) for j in jobs]
        results.sort(key=lambda r: r.trial_index)
        cases = {"a": 0, "b": 0, "c": 0}
        for r in results:
            cases[r.encode.case_label] += 1
        stats = {}
        for s in SCENARIOS:
            vals = np.array([r.tv[s] for r in results])
            se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
            stats[s] = ScenarioStats(
                scenario=s,
                mean_tv=float(vals.mean()),
                std_err=se,
                case_counts=(cases["a"], cases["b"], cases["c"]),
            )
        out.append((n, stats, results))
    return out


def case_c_tv_bound(cfg: ExperimentConfig, n: int) -> float:
    """Relaxed finite-n bound on the both-indices TV for found-tuple trials."""
    xsz = cfg.query.x_size
    ysz = cfg.query.y_size
    return cfg.epsilon / 2 + cfg.query.delta12 + xsz * ysz / n


def nearest_typical_source(p0_probs: np.ndarray, n: int) -> SymbolSequence:
    """Sequence of the realizable type closest to p0 in TV, symbols ascending."""
    scaled = p0_probs * n
    counts = np.floor(scaled).astype(np.int64)
    remainder = n - counts.sum()
    if remainder > 0:
        order = np.argsort(-(scaled - counts))
        counts[order[:remainder]] += 1
    symbols = np.repeat(np.arange(p0_probs.size), counts)
    return SymbolSequence(symbols=symbols, alphabet_size=p0_probs.size)


def expected_k_lower_bound(dist: JointPmf, m1: int, m2: int, n: int, epsilon: float) -> BoundReport:
    """Closed-form lower bound on the expected typical-pair count.

    Valid for a source sequence typical at the reduced parameter
    epsilon / (2 |Y1||Y2||Y12|); vacuous (trivial) whenever the counting
    correction exceeds 1 at this (n, epsilon).
    """
    h1 = entropy(marginalize(dist, (1,)))
    h2 = entropy(marginalize(dist, (2,)))
    h12_given = conditional_entropy(marginalize(dist, (1, 2, 3)), given=(0, 1))
    h_cond_x = conditional_entropy(dist, given=(0,))
    em = (
        eps_m(marginalize(dist, (1,)), epsilon)
        + eps_m(marginalize(dist, (2,)), epsilon)
        + eps_m(marginalize(dist, (1, 2, 3)), epsilon)
        + eps_m(dist, epsilon)
    )
    dt = delta_t(n, epsilon / 2, dist.shape)
    exponent = -n * (h1 + h2 + h12_given - h_cond_x + em)
    lower = m1 * m2 * (1.0 - dt) * math.exp(exponent)
    return BoundReport(lower=lower, upper=math.inf, trivial=lower <= 0.0)


def k_statistics(
    cfg: ExperimentConfig, n: int, codebook_draws: int, workers: int = 1
) -> KStatistics:
    """Typical-pair count moments over fresh codebooks at a fixed typical source."""
    if cfg.theorem != 1:
        raise ValueError("count diagnostics are defined for the single-layer scheme")
    if codebook_draws < 1:
        raise ValueError("codebook_draws must be at least 1")
    dist = cfg.design_dist()
    out_size = math.prod(dist.shape[1:])
    eps_prime = cfg.epsilon / (2 * out_size)
    xs = nearest_typical_source(cfg.query.p0.probs, n)
    if not is_strongly_typical((xs,), marginalize(dist, (0,)), eps_prime):
        raise ValueError(
            f"no strongly typical source sequence is constructible at n={n}"
        )
    jobs = [(cfg, dist, xs, n, d) for d in range(codebook_draws)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            ks = list(pool.map(_count_star, jobs, chunksize=4))
    else:
        ks = [_count_star(j) for j in jobs]
    ks = np.array(ks, dtype=float)
    mean_k = float(ks.mean())
    var_k = float(ks.var(ddof=1)) if ks.size > 1 else 0.0
    frac_zero = float((ks == 0).mean())
    ek_lb = expected_k_lower_bound(
        dist, coding.codebook_size(cfg.rates[0], cfg.rate_slacks[0], n),
        coding.codebook_size(cfg.rates[1], cfg.rate_slacks[1], n), n, cfg.epsilon
    )
    if mean_k > 0:
        cheb = 4.0 * var_k / mean_k**2
        pr_zero = BoundReport(lower=0.0, upper=cheb, trivial=cheb >= 1.0)
    else:
        pr_zero = BoundReport(lower=0.0, upper=math.inf, trivial=True)
    return KStatistics(
        mean_k=mean_k,
        var_k=var_k,
        frac_k_zero=frac_zero,
        ek_lower_bound=ek_lb,
        pr_zero_chebyshev=pr_zero,
    )


def _count_star(args) -> int:
    cfg, dist, xs, n, draw = args
    seed = _seed_int(cfg.master_seed, (n, draw, 2))
    cb = coding.generate_codebook_th1(
        dist, cfg.rates[0], cfg.rates[1], cfg.rate_slacks[0], cfg.rate_slacks[1], n, seed
    )
    return coding.count_typical_tuples(xs, cb, dist, cfg.epsilon)
