import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipticmaps import EvaluationError, InvalidParameter
from ellipticmaps.constraint import (
    Verdict,
    canonical,
    check_duality_identities,
    check_q_monotone,
    dual,
    enlarge,
    from_function,
    interior_probe,
    membership,
    q_distance,
    spectral_set,
)
from ellipticmaps.jetcore import Jet, SampleBox, random_jets

Q2 = canonical("Q", 2)


@pytest.mark.parametrize("r, a, verdict", [
    (-1.0, np.eye(2), Verdict.INSIDE),
    (0.0, np.zeros((2, 2)), Verdict.BOUNDARY),
    (1.0, np.eye(2), Verdict.OUTSIDE),
])
def test_q_membership(r, a, verdict):
    assert membership(Q2, Jet.of(r, a)).verdict == verdict


def test_dual_q_examples():
    dq = dual(Q2)
    assert membership(dq, Jet.of(1.0, np.diag([-1.0, 1.0]))).verdict == Verdict.INSIDE
    assert membership(dq, Jet.of(1.0, -np.eye(2))).verdict == Verdict.OUTSIDE


def test_canonical_margins():
    m = membership(Q2, Jet.of(-3.0, np.diag([2.0, 5.0])))
    assert m.margin == pytest.approx(2.0) and m.verdict == Verdict.INSIDE
    m = membership(canonical("Qdual", 2), Jet.of(4.0, np.diag([-2.0, -1.0])))
    assert m.margin == pytest.approx(-1.0) and m.verdict == Verdict.OUTSIDE
    assert membership(canonical("P_cone", 2), Jet.of(7.0, np.zeros((2, 2)))).verdict == Verdict.BOUNDARY
    assert canonical("full_J", 3).improper


def test_guards():
    with pytest.raises(InvalidParameter):
        canonical("nope", 2)
    with pytest.raises(InvalidParameter):
        membership(Q2, Jet.of(0.0, np.eye(3)))
    bad = from_function(2, lambda r, a: np.full(np.shape(r), np.nan))
    with pytest.raises(EvaluationError):
        bad.margin([0.0], np.eye(2)[None])


@pytest.mark.parametrize("n", [2, 3, 5])
def test_double_dual_and_closed_form(n):
    jets = random_jets(SampleBox(seed=n, count=1000, eig_scale=10, r_range=(-10, 10)), n)
    lam = np.linalg.eigvalsh(jets.a)
    q = np.minimum(-jets.r, lam[:, 0])
    qd = np.maximum(-jets.r, lam[:, -1])
    keep = np.abs(q) > 1e-8
    s = canonical("Q", n)
    assert np.array_equal(np.sign(dual(dual(s)).margin(jets.r, jets.a))[keep], np.sign(q[keep]))
    assert np.allclose(dual(s).margin(jets.r, jets.a), qd)


def test_q_monotone_checks():
    assert check_q_monotone(Q2, SampleBox(count=2000)).passed
    half = from_function(2, lambda r, a: np.asarray(r, dtype=float), "r>=0")
    rep = check_q_monotone(half, SampleBox(count=500))
    assert not rep.passed
    assert rep.witness["jet"]["r"] == 0.0 and rep.witness["translate"] == {"r": -1.0, "A": [[0.0, 0.0], [0.0, 0.0]]}


def test_slag_fiber_is_q_monotone():
    s = spectral_set(2, lambda r, lam: np.arctan(lam).sum(-1), "slag0")
    assert check_q_monotone(s, SampleBox(count=10_000, eig_scale=10)).passed


def test_duality_identities_q_and_slag():
    assert check_duality_identities(Q2, SampleBox(count=10_000, eig_scale=10, r_range=(-10, 10))).passed
    s = spectral_set(2, lambda r, lam: np.arctan(lam).sum(-1) - math.pi / 2, "slag")
    assert check_duality_identities(s, SampleBox(count=5000, eig_scale=10)).passed
    jets = random_jets(SampleBox(seed=2, count=2000, eig_scale=10), 2)
    g = np.arctan(np.linalg.eigvalsh(jets.a)).sum(1)
    closed = g + math.pi / 2  # dual is {G >= -π/2}
    keep = np.abs(closed) > 1e-8
    ds = dual(s).margin(jets.r, jets.a)
    assert np.array_equal(np.sign(ds[keep]), np.sign(closed[keep]))


def test_half_space_boundary_identity():
    s = from_function(2, lambda r, a: -np.asarray(r, dtype=float), "r<=0", q_monotone_declared=True)
    P = np.diag([1.0, 3.0])
    assert membership(s, Jet.of(0.0, P)).verdict == Verdict.BOUNDARY
    assert membership(dual(s), Jet.of(0.0, -P)).verdict == Verdict.BOUNDARY


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_q_distance_exact_for_q(r, l1, l2):
    a = np.diag([l1, l2])
    t = q_distance(Q2, [r], a[None])[0]
    # smallest t >= 0 with min(-(r - t), l1 + t) >= 0
    expected = max(0.0, r, -min(l1, l2))
    assert t == pytest.approx(expected, abs=1e-7 * (1 + abs(expected)))


def test_interior_probe():
    assert interior_probe(Q2, [-1.0], np.eye(2)[None])[0]
    assert not interior_probe(Q2, [1.0], np.eye(2)[None])[0]


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 2.0))
def test_enlargement_contains_original(eps):
    big = enlarge(Q2, eps)
    jets = random_jets(SampleBox(seed=3, count=500, eig_scale=5, r_range=(-5, 5)), 2)
    inside = Q2.margin(jets.r, jets.a) >= 0
    assert (big.margin(jets.r[inside], jets.a[inside]) >= 0).all()
