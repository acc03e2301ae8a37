import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordmd import (
    JointPmf,
    SymbolSequence,
    is_conditionally_typical,
    is_strongly_typical,
    joint_type,
    lemma_ta_bounds,
    lemma_tb_size_bounds,
    lemma_tc_prob_bounds,
    marginalize,
)
from coordmd.typicality import TypicalityParams, delta_t, eps_m
from conftest import joint_pmfs

# pinned by direct evaluation of the closed form: (n+1)^(|X||Y|) e^{-n eps^2 / (2 |X|^2 |Y|^2)}
DELTA_T_100_03_22 = 78548911.67365657


def seq(symbols, size):
    return SymbolSequence(symbols=np.array(symbols), alphabet_size=size)


def all_binary_seqs(n):
    return (np.array(bits) for bits in itertools.product((0, 1), repeat=n))


# ---------------------------------------------------------------------------
# eps_m / delta_t

def test_eps_m_exponential_pmin():
    p = JointPmf(np.array([math.exp(-1), 1 - math.exp(-1)]))
    assert eps_m(p, 0.1) == pytest.approx(0.1, abs=1e-15)


def test_eps_m_uniform_binary():
    p = JointPmf(np.array([0.5, 0.5]))
    assert eps_m(p, 0.1) == pytest.approx(0.1 * math.log(2), abs=1e-15)


def test_eps_m_point_mass_is_zero():
    p = JointPmf(np.array([1.0, 0.0]))
    assert eps_m(p, 0.7) == 0.0


def test_eps_m_all_zero_errors():
    with pytest.raises(ValueError):
        eps_m(JointPmf(np.array([1.0, 0.0])), -0.1)


def test_delta_t_n_zero_is_one():
    assert delta_t(0, 0.3, (2, 2)) == pytest.approx(1.0, abs=1e-15)


def test_delta_t_pinned_regression_value():
    assert delta_t(100, 0.3, (2, 2)) == pytest.approx(DELTA_T_100_03_22, rel=1e-12)


def test_delta_t_monotone_once_exponential_dominates():
    assert delta_t(200, 3.0, (2, 2)) < delta_t(100, 3.0, (2, 2))


# ---------------------------------------------------------------------------
# membership tests

def test_type_equal_to_p_is_typical_for_any_eps():
    p = JointPmf(np.full((2, 2), 0.25))
    xs = seq([0, 0, 1, 1], 2)
    ys = seq([0, 1, 0, 1], 2)
    assert is_strongly_typical((xs, ys), p, 1e-9)


def test_zero_support_clause():
    p = JointPmf(np.array([[0.5, 0.0], [0.0, 0.5]]))
    xs = seq([0, 1, 0, 1], 2)
    ys = seq([0, 1, 1, 0], 2)  # hits the zero cell (0,1)
    assert not is_strongly_typical((xs, ys), p, 100.0)


def test_boundary_deviation_is_excluded():
    # deviation exactly eps / (|X||Y|): counts (3,2,2,1)/8 vs uniform 0.25, eps = 0.5
    p = JointPmf(np.full((2, 2), 0.25))
    xs = seq([0, 0, 0, 0, 0, 1, 1, 1], 2)
    ys = seq([0, 0, 0, 1, 1, 0, 0, 1], 2)
    t = joint_type(xs, ys)
    dev = np.max(np.abs(t.probs - p.probs))
    assert dev == pytest.approx(0.5 / 4, abs=0)
    assert not is_strongly_typical((xs, ys), p, 0.5)
    assert is_strongly_typical((xs, ys), p, 0.5 + 1e-9)


def test_conditional_diagonal_trivial():
    p = JointPmf(np.diag([0.5, 0.5]))
    xs = seq([0, 1, 0, 1], 2)
    assert is_conditionally_typical((xs,), (xs,), p, 0.1)


def test_conditional_false_when_xs_atypical():
    p = JointPmf(np.full((2, 2), 0.25))
    xs = seq([0, 0, 0, 0], 2)  # far from uniform at small eps
    ys = seq([0, 1, 0, 1], 2)
    assert not is_strongly_typical((xs,), marginalize(p, (0,)), 0.4)
    assert not is_conditionally_typical((ys,), (xs,), p, 0.4)


@settings(max_examples=500, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(2, 20),
       st.floats(0.05, 2.0), joint_pmfs(min_axes=2, max_axes=2, max_size=3))
def test_conditional_equals_joined_membership(rnd, n, eps, p):
    rng = np.random.default_rng(rnd.randrange(2**32))
    xs = seq(rng.integers(0, p.shape[0], n), p.shape[0])
    ys = seq(rng.integers(0, p.shape[1], n), p.shape[1])
    assert is_conditionally_typical((ys,), (xs,), p, eps) == is_strongly_typical(
        (xs, ys), p, eps
    )


@settings(max_examples=500, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(2, 20),
       st.floats(0.05, 2.0), joint_pmfs(min_axes=2, max_axes=2, max_size=3))
def test_chain_decomposition_equivalence(rnd, n, eps, p):
    # joint typicality == (marginal typicality AND conditional typicality)
    rng = np.random.default_rng(rnd.randrange(2**32))
    xs = seq(rng.integers(0, p.shape[0], n), p.shape[0])
    ys = seq(rng.integers(0, p.shape[1], n), p.shape[1])
    joint = is_strongly_typical((xs, ys), p, eps)
    decomposed = is_strongly_typical((xs,), marginalize(p, (0,)), eps) and (
        is_conditionally_typical((ys,), (xs,), p, eps)
    )
    assert joint == decomposed


@settings(max_examples=300, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(2, 20), st.floats(0.05, 1.0))
def test_membership_monotone_in_eps(rnd, n, eps):
    rng = np.random.default_rng(rnd.randrange(2**32))
    p = JointPmf(rng.dirichlet(np.ones(4)).reshape(2, 2))
    xs = seq(rng.integers(0, 2, n), 2)
    ys = seq(rng.integers(0, 2, n), 2)
    if is_strongly_typical((xs, ys), p, eps):
        assert is_strongly_typical((xs, ys), p, eps * 1.5)
        assert is_strongly_typical((xs, ys), p, eps + 0.5)


def test_reduced_parameter_implies_plain():
    rng = np.random.default_rng(0)
    p = JointPmf(rng.dirichlet(np.ones(4)).reshape(2, 2))
    eps = 0.9
    eps_prime = eps / (2 * 2**3)
    for _ in range(200):
        xs = seq(rng.integers(0, 2, 16), 2)
        ys = seq(rng.integers(0, 2, 16), 2)
        if is_strongly_typical((xs, ys), p, eps_prime):
            assert is_strongly_typical((xs, ys), p, eps)


# ---------------------------------------------------------------------------
# Lemma bounds

def test_lemma_ta_point_mass():
    p = JointPmf(np.array([1.0, 0.0]))
    rep = lemma_ta_bounds(p, TypicalityParams(epsilon=0.3, n=10))
    assert rep.sequence_prob.lower <= 1.0 <= rep.sequence_prob.upper


def test_lemma_ta_pinned_uniform_binary():
    rep = lemma_ta_bounds(JointPmf(np.array([0.5, 0.5])), TypicalityParams(epsilon=0.4, n=20))
    # direct evaluation of the closed forms
    em = 0.4 * math.log(2)
    h = math.log(2)
    assert rep.sequence_prob.lower == pytest.approx(math.exp(-20 * (h + em)), rel=1e-12)
    assert rep.sequence_prob.upper == pytest.approx(math.exp(-20 * (h - em)), rel=1e-12)
    dt = 21**2 * math.exp(-20 * 0.4**2 / (2 * 2**2))  # single binary axis: m = 2
    assert rep.prob_typical.lower == pytest.approx(1 - dt, rel=1e-12)
    assert rep.prob_typical.trivial  # dt >> 1 at these parameters


def test_lemma_ta_window_by_enumeration_n10():
    p = JointPmf(np.array([0.4, 0.6]))
    n, eps = 10, 0.5
    rep = lemma_ta_bounds(p, TypicalityParams(epsilon=eps, n=n))
    found = 0
    for k in range(n + 1):  # k = number of zeros; all sequences of a type share a probability
        t = np.array([k / n, 1 - k / n])
        xs = seq([0] * k + [1] * (n - k), 2)
        if is_strongly_typical((xs,), p, eps):
            found += 1
            prob = 0.4**k * 0.6 ** (n - k)
            assert rep.sequence_prob.lower <= prob <= rep.sequence_prob.upper
    assert found > 0


def test_lemma_tb_deterministic_channel():
    p = JointPmf(np.diag([0.5, 0.5]))  # H(Y|X) = 0
    n, eps = 8, 0.4
    xs = seq([0, 1] * 4, 2)
    rep = lemma_tb_size_bounds(p, (xs,), TypicalityParams(epsilon=eps, n=n))
    em = eps_m(p, eps)
    assert rep.upper == pytest.approx(math.exp(n * em), rel=1e-12)
    # exact conditional set size is 1 (ys must equal xs)
    count = sum(
        is_strongly_typical((xs, seq(ys, 2)), p, eps) for ys in
        ([list(b) for b in __import__("itertools").product((0, 1), repeat=n)])
    )
    assert 1 <= count <= rep.upper


def test_lemma_tb_enumeration_binary_symmetric():
    p = JointPmf(np.array([[0.4, 0.1], [0.1, 0.4]]))
    n, eps = 10, 0.8
    xs = seq([0] * 5 + [1] * 5, 2)
    rep = lemma_tb_size_bounds(p, (xs,), TypicalityParams(epsilon=eps, n=n))
    count = 0
    for c00 in range(6):
        for c10 in range(6):
            t = np.array([[c00, 5 - c00], [c10, 5 - c10]]) / n
            if np.all(np.abs(t - p.probs) < eps / 4):
                count += math.comb(5, c00) * math.comb(5, c10)
    assert count <= rep.upper
    if not rep.trivial:
        assert rep.lower <= count


def test_lemma_tb_independent_joint_inclusion():
    # joint-typical ys given a type-exact xs form a subset of the typical ys;
    # enumeration: 625 vs 967 at these parameters (strict inclusion, not equality)
    pX, pY = np.array([0.5, 0.5]), np.array([0.4, 0.6])
    p = JointPmf(np.outer(pX, pY))
    n, eps = 10, 0.8
    xs = seq([0] * 5 + [1] * 5, 2)
    cond_members = []
    marg_members = []
    for ys in itertools.product((0, 1), repeat=n):
        s = seq(list(ys), 2)
        if is_strongly_typical((xs, s), p, eps):
            cond_members.append(ys)
        if is_strongly_typical((s,), JointPmf(pY), eps):
            marg_members.append(ys)
    assert len(cond_members) == 625
    assert len(marg_members) == 967
    assert set(cond_members) <= set(marg_members)
    rep = lemma_tb_size_bounds(p, (xs,), TypicalityParams(epsilon=eps, n=n))
    assert len(cond_members) <= rep.upper


def test_lemma_tc_independent_joint():
    p = JointPmf(np.outer([0.5, 0.5], [0.5, 0.5]))
    rep = lemma_tc_prob_bounds(p, TypicalityParams(epsilon=0.4, n=10))
    assert rep.joint.lower <= rep.joint.upper or not (
        math.isfinite(rep.joint.lower) and math.isfinite(rep.joint.upper)
    )
    # I = 0: upper side is e^{+n eps2} >= 1, flagged vacuous
    assert rep.joint.upper >= 1.0


def test_lemma_tc_monte_carlo_within_window():
    p = JointPmf(np.array([[0.4, 0.1], [0.1, 0.4]]))
    n, eps, draws = 10, 0.4, 10**5
    rep = lemma_tc_prob_bounds(p, TypicalityParams(epsilon=eps, n=n))
    rng = np.random.default_rng(99)
    pX = p.probs.sum(axis=1)
    pY = p.probs.sum(axis=0)
    xs = (rng.random((draws, n)) < pX[1]).astype(np.int64)
    ys = (rng.random((draws, n)) < pY[1]).astype(np.int64)
    codes = xs * 2 + ys
    counts = np.stack([(codes == c).sum(axis=1) for c in range(4)], axis=1)
    tol = eps / 4
    ok = np.all(np.abs(counts / n - p.probs.ravel()) < tol, axis=1)
    phat = ok.mean()
    sigma = math.sqrt(max(phat * (1 - phat), 1e-12) / draws)
    assert rep.joint.lower - 3 * sigma <= phat <= rep.joint.upper + 3 * sigma


@settings(max_examples=200, deadline=None)
@given(joint_pmfs(min_axes=2, max_axes=2, max_size=4), st.floats(0.05, 1.0))
def test_eps2_eps3_stated_inequalities(p, eps):
    em_joint = eps_m(p, eps)
    em_x = eps_m(marginalize(p, (0,)), eps)
    em_y = eps_m(marginalize(p, (1,)), eps)
    eps2 = em_joint + em_x + em_y
    eps3 = em_joint + em_y
    assert eps3 <= 2 * em_joint + 1e-12
    assert eps2 <= 3 * em_joint + 1e-12


def test_bound_report_invariant():
    from coordmd import BoundReport

    with pytest.raises(ValueError):
        BoundReport(lower=2.0, upper=1.0, trivial=False)
