"""Metric implementations checked against independent formulations.

The rank-sum U is cross-checked with the pair-counting definition
U = #{a > b} + 0.5 #{a = b}, and the exact p-value against a brute-force
enumeration built on that pair count. Aggregation is checked against a
hand-computed three-episode fixture.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wirenav.metrics import (
    MetricsError,
    TrajectoryRecord,
    force_magnitude,
    format_report,
    mann_whitney_u,
    path_length,
    safety,
    spl,
    summarize_runs,
)


def u_by_pair_count(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    gt = (a[:, None] > b[None, :]).sum()
    eq = (a[:, None] == b[None, :]).sum()
    return float(gt) + 0.5 * float(eq)


def exact_p_oracle(a, b):
    """Share of group assignments with |U - mu| at least the observed."""
    x = list(a) + list(b)
    na = len(a)
    mu = na * len(b) / 2.0
    dev = abs(u_by_pair_count(a, b) - mu)
    hits = total = 0
    for idx in itertools.combinations(range(len(x)), na):
        chosen = [x[i] for i in idx]
        rest = [x[i] for i in range(len(x)) if i not in idx]
        hits += abs(u_by_pair_count(chosen, rest) - mu) >= dev - 1e-12
        total += 1
    return hits / total


# ------------------------------------------------------------------- force


def test_force_magnitude_examples():
    assert force_magnitude((1.0, 2.0, 2.0)) == pytest.approx(3.0)
    assert force_magnitude((0.0, 0.0, 0.0)) == 0.0
    rows = np.array([[1.0, 2.0, 2.0], [3.0, 4.0, 0.0]])
    assert np.allclose(force_magnitude(rows), [3.0, 5.0])


@given(
    f=st.lists(st.floats(-50, 50), min_size=3, max_size=3),
    s=st.floats(-10, 10),
)
def test_force_magnitude_properties(f, s):
    f = np.array(f)
    assert force_magnitude(f) ** 2 == pytest.approx(float(f @ f), rel=1e-12, abs=1e-12)
    assert force_magnitude(s * f) == pytest.approx(abs(s) * force_magnitude(f), rel=1e-9, abs=1e-9)


# -------------------------------------------------------------------- path


def test_path_length_examples():
    pts = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0)]
    assert path_length(pts) == pytest.approx(2.0)
    assert path_length([(3.0, 4.0, 5.0)]) == 0.0
    with pytest.raises(MetricsError):
        path_length(np.empty((0, 3)))


def test_path_length_rigid_invariance():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(20, 3))
    A = rng.normal(size=(3, 3))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    moved = pts @ Q.T + rng.normal(size=3)
    assert path_length(moved) == pytest.approx(path_length(pts), abs=1e-12)
    assert path_length(pts) >= np.linalg.norm(pts[-1] - pts[0]) - 1e-12


# ------------------------------------------------------------------ safety


def test_safety_examples():
    assert safety([2.0, 3.0, 5.0]) == 0.0
    assert safety([0.1, 1.9, 0.0]) == 1.0
    assert safety([2.5, 0.5, 0.5, 0.5]) == pytest.approx(0.75)
    # the threshold itself counts as a violation
    assert safety([2.0]) == 0.0
    assert safety([1.0, 1.0], threshold=0.5) == 0.0


# --------------------------------------------------------------------- spl


def test_spl_examples():
    assert spl([True], [0.10], optimal=0.10) == pytest.approx(1.0)
    assert spl([True, False], [0.10, 0.10], optimal=0.10) == pytest.approx(0.5)
    # shorter-than-optimal paths clamp to 1 rather than exceeding it
    assert spl([True], [0.05], optimal=0.10) == pytest.approx(1.0)


def test_spl_matches_direct_formula():
    rng = np.random.default_rng(5)
    s = rng.random(10) < 0.6
    p = rng.uniform(0.05, 0.5, size=10)
    got = spl(s, p)
    l = p[s].min()
    want = np.mean([si * l / max(pi, l) for si, pi in zip(s, p)])
    assert got == pytest.approx(want, abs=1e-12)
    assert 0.0 <= got <= 1.0


def test_spl_no_success_is_zero(caplog):
    with caplog.at_level("WARNING"):
        assert spl([False, False], [0.1, 0.2]) == 0.0
    assert any("no successful episode" in m for m in caplog.messages)


# ------------------------------------------------------------- aggregation


def episode(tips, forces, success, distances, target="bca"):
    n = len(tips)
    return TrajectoryRecord(
        tips=np.asarray(tips, dtype=np.float64),
        actions=np.zeros((n, 2)),
        contact_forces=np.asarray(forces, dtype=np.float64),
        rewards=np.zeros(n),
        distances=np.asarray(distances, dtype=np.float64),
        success=success,
        target_name=target,
    )


def fixture_pool():
    e1 = episode(
        [(0, 0, 0), (0.03, 0, 0), (0.03, 0.04, 0)],
        [(0, 0, 0), (1, 2, 2), (0, 0, 0)],
        True,
        [0.10, 0.05, 0.003],
    )
    e2 = episode(
        [(0, 0, 0), (0.05, 0, 0)],
        [(0, 0, 0), (0, 0, 0)],
        True,
        [0.10, 0.001],
    )
    e3 = episode(
        [(0, 0, 0), (0.2, 0, 0), (0.2, 0.2, 0)],
        [(2, 0, 0), (2, 0, 0), (5, 0, 0)],
        False,
        [0.5, 0.4, 0.3],
    )
    return [e1, e2, e3]


def test_summarize_matches_hand_calculation():
    report = summarize_runs(fixture_pool())
    assert np.allclose(report.force, [1.0, 0.0, 3.0])
    assert np.allclose(report.path_length, [0.07, 0.05, 0.4])
    assert np.array_equal(report.episode_length, [3, 2, 3])
    assert np.allclose(report.safety, [2 / 3, 1.0, 0.0])
    assert np.array_equal(report.success, [True, True, False])
    # optimal = shortest successful path = 0.05
    assert report.spl == pytest.approx((0.05 / 0.07 + 1.0) / 3.0)


def test_summarize_identical_episodes_zero_std():
    e = fixture_pool()[0]
    report = summarize_runs([e, e])
    for _, mean, std in report.rows():
        assert std == 0.0
        assert np.isfinite(mean)


def test_summarize_is_order_invariant():
    pool = fixture_pool()
    a = summarize_runs(pool)
    b = summarize_runs(pool[::-1])
    assert a.spl == pytest.approx(b.spl)
    assert sorted(a.force) == pytest.approx(sorted(b.force))


def test_report_units_path_in_cm():
    e = episode(
        [(0, 0, 0), (0.15, 0, 0)], [(0, 0, 0), (0, 0, 0)], True, [0.2, 0.001]
    )
    report = summarize_runs([e])
    rows = {label: (mean, std) for label, mean, std in report.rows()}
    assert rows["Path Length (cm)"][0] == pytest.approx(15.0)
    assert rows["Success (%)"][0] == pytest.approx(100.0)
    text = format_report(report)
    assert "Path Length (cm)" in text and "15.000" in text


def test_summarize_rejects_bad_pools():
    with pytest.raises(MetricsError):
        summarize_runs([])
    pool = fixture_pool()
    other = episode([(0, 0, 0)], [(0, 0, 0)], False, [0.5], target="lcca")
    with pytest.raises(MetricsError, match="mixed targets"):
        summarize_runs(pool + [other])
    liar = episode([(0, 0, 0)], [(0, 0, 0)], True, [0.5])
    with pytest.raises(MetricsError, match="final distance"):
        summarize_runs([liar])


def test_record_rejects_ragged_steps():
    with pytest.raises(MetricsError):
        TrajectoryRecord(
            tips=np.zeros((3, 3)),
            actions=np.zeros((2, 2)),
            contact_forces=np.zeros((3, 3)),
            rewards=np.zeros(3),
            distances=np.zeros(3),
            success=False,
            target_name="bca",
        )
    with pytest.raises(MetricsError):
        TrajectoryRecord(
            tips=np.zeros((0, 3)),
            actions=np.zeros((0, 2)),
            contact_forces=np.zeros((0, 3)),
            rewards=np.zeros(0),
            distances=np.zeros(0),
            success=False,
            target_name="bca",
        )


# ---------------------------------------------------------------- rank sum


def test_u_statistic_examples():
    u, _ = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert u == 0.0
    u, p = mann_whitney_u([1, 2, 3], [1, 2, 3])
    assert u == pytest.approx(4.5)  # n^2 / 2
    assert p == 1.0
    u, p = mann_whitney_u([5, 5, 5], [5, 5, 5])
    assert p == 1.0


def test_u_matches_pair_counting():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a = rng.integers(0, 8, rng.integers(2, 12)).astype(float)
        b = rng.integers(0, 8, rng.integers(2, 12)).astype(float)
        u, _ = mann_whitney_u(a, b)
        assert u == pytest.approx(u_by_pair_count(a, b), abs=1e-9)


@given(
    a=st.lists(st.integers(0, 9), min_size=1, max_size=10),
    b=st.lists(st.integers(0, 9), min_size=1, max_size=10),
)
@settings(max_examples=60, deadline=None)
def test_u_complement_identity(a, b):
    ua, _ = mann_whitney_u(a, b)
    ub, _ = mann_whitney_u(b, a)
    assert ua + ub == pytest.approx(len(a) * len(b), abs=1e-9)


def test_small_sample_p_matches_enumeration():
    rng = np.random.default_rng(9)
    for _ in range(15):
        na, nb = rng.integers(3, 8, size=2)
        if rng.random() < 0.5:
            a = rng.integers(0, 5, na).astype(float)
            b = rng.integers(0, 5, nb).astype(float)
        else:
            a = np.round(rng.normal(size=na), 1)
            b = np.round(rng.normal(0.6, 1.0, size=nb), 1)
        _, p = mann_whitney_u(a, b)
        assert abs(p - exact_p_oracle(a, b)) <= 0.02


def test_normal_approximation_tracks_exact():
    rng = np.random.default_rng(13)
    for _ in range(5):
        a = np.round(rng.normal(size=11), 1)
        b = np.round(rng.normal(0.4, 1.0, size=11), 1)
        _, p_norm = mann_whitney_u(a, b, method="normal")
        _, p_exact = mann_whitney_u(a, b, method="exact")
        assert abs(p_norm - p_exact) <= 0.05


def test_mann_whitney_rejects_bad_input():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])
    with pytest.raises(ValueError):
        mann_whitney_u([1.0], [2.0], method="bogus")
