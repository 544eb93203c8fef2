import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipticmaps import InvalidParameter
from ellipticmaps.constraint import Verdict, interior_probe
from ellipticmaps.elliptic_map import BoxDomain
from ellipticmaps.jetcore import Jet, SampleBox
from ellipticmaps.operators import (
    CoefficientField,
    MonotoneProfile,
    certify_pair,
    check_RC,
    classify_jet,
    correspondence_check,
    custom_operator,
    make_builtin,
    operator_from_json,
    theta_from_pair,
)

SQ = BoxDomain((0.0, 0.0), (1.0, 1.0))
X = np.array([[0.5, 0.5]])


def _has(h=1.0, **kw):
    return make_builtin("hyperbolic_affine_sphere", 2, SQ, {"h": h}, **kw)


def test_builtin_values():
    assert _has().F(X, [-1.0], np.eye(2)[None])[0] == pytest.approx(0.0)
    sl = make_builtin("special_lagrangian", 2, SQ, {"h": 0.0})
    for a in (0.1, 3.0, 1e4):
        assert sl.F(X, [0.0], np.diag([-a, a])[None])[0] == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 0), st.floats(0, 5), st.floats(0, 5))
def test_perturbed_ma_reduces_to_ma(r, l1, l2):
    op = make_builtin("perturbed_ma", 2, SQ, {"h": 0.0, "m": 0.0, "M": 0.0},
                      params={"r0": 0.0, "g": {"t": [-1, 1], "g": [-1, 1]}})
    a = np.diag([l1, l2])[None]
    assert op.F(X, [r], a)[0] == pytest.approx(-r * l1 * l2, abs=1e-9 * (1 + abs(r * l1 * l2)))


def test_theta_membership_examples():
    m = theta_from_pair(_has())
    assert m.margin(X, [-2.0], np.eye(2)[None])[0] > 0  # min(g_Q, 16 - 1)
    # on the r = 0 face F = -h < 0, so the jet leaves Θ
    assert m.margin(X, [0.0], np.eye(2)[None])[0] == pytest.approx(-1.0)
    assert m.margin(X, [-1.0], np.eye(2)[None])[0] == pytest.approx(0.0, abs=1e-12)
    sl = theta_from_pair(make_builtin("special_lagrangian", 2, SQ, {"h": math.pi / 2}))
    assert sl.margin(X, [7.0], np.eye(2)[None])[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("r, sub, sup", [(-1.0, True, True), (0.0, False, True), (-2.0, True, False)])
def test_classify_jet(r, sub, sup):
    v = classify_jet(_has(), X[0], Jet.of(r, np.eye(2)))
    assert (v.sub, v.super) == (sub, sup)
    if r == -2.0:
        assert v.F == pytest.approx(15.0) and v.phi_verdict == Verdict.INSIDE


def test_guards():
    with pytest.raises(InvalidParameter):
        make_builtin("unknown", 2)
    with pytest.raises(InvalidParameter):
        _has(-1.0)
    with pytest.raises(InvalidParameter):
        make_builtin("special_lagrangian", 2, SQ, {"h": 4.0})
    with pytest.raises(InvalidParameter):
        MonotoneProfile(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(InvalidParameter):
        make_builtin("perturbed_ma", 2, SQ, {"h": 0.0}, params={"r0": 0.5})
    with pytest.raises(InvalidParameter):
        CoefficientField(SQ, np.array([[np.nan, 0.0], [0.0, 0.0]]))


def test_coefficient_field_interpolates_and_bounds_slope():
    f = CoefficientField.sample(lambda x: 2 * x[:, 0] + 3 * x[:, 1], SQ, (9, 9))
    assert f(np.array([[0.3, 0.4]]))[0] == pytest.approx(1.8)
    assert f.lipschitz == pytest.approx(math.sqrt(13))


def test_spec_json_roundtrip():
    op = make_builtin("perturbed_ma", 2, SQ, {"h": lambda x: x[:, 0] * x[:, 1], "m": 1.0, "M": 0.1},
                      params={"r0": 0.0}, grid_shape=(5, 5))
    text = json.dumps(op.to_json())
    back = operator_from_json(json.loads(text))
    rng = np.random.default_rng(0)
    x = rng.random((20, 2))
    a = np.tile(np.diag([0.3, 0.8]), (20, 1, 1))
    r = -rng.random(20)
    assert np.allclose(back.F(x, r, a), op.F(x, r, a))
    with pytest.raises(InvalidParameter):
        operator_from_json({"kind": "linear"})


def test_has_certifies():
    op = _has(lambda x: (x ** 2).sum(1))
    cert = certify_pair(op, n_points=128, jets_per_x=20)
    assert cert.passed, cert.to_json()
    assert set(cert.conditions) == {"PEP", "PB1", "PB2", "NDC"}


def test_has_with_negative_h_fails_pb1():
    op = _has(-1.0, validate=False)
    cert = certify_pair(op, n_points=64, jets_per_x=10)
    assert cert.verdict("PB1") == "fail"
    assert cert.conditions["PB1"].witness is not None


def _ndc_fixture():
    return custom_operator(2, SQ, lambda x, r, lam: np.minimum(-r, 0.0), "min(-r,0)", spectral=True)


def test_ndc_failure_and_correspondence_mismatch():
    op = _ndc_fixture()
    assert certify_pair(op, n_points=64, jets_per_x=10).verdict("NDC") == "fail"
    rep = correspondence_check(op, n_points=50, jets_per_x=20)
    assert not rep.passed and rep.details["mismatches"] > 0
    # (-1, 0): super-admissible (F = 0) yet interior to {r <= 0}
    v = classify_jet(op, X[0], Jet.of(-1.0, np.zeros((2, 2))))
    fiber = theta_from_pair(op).fiber(X[0])
    assert v.super and interior_probe(fiber, [-1.0], np.zeros((1, 2, 2)))[0]


def test_correspondence_holds_for_has_and_slag():
    assert correspondence_check(_has(lambda x: (x ** 2).sum(1)), n_points=100, jets_per_x=100).passed
    sl = make_builtin("special_lagrangian", 2, SQ, {"h": lambda x: math.pi / 2 + 0.3 * np.sin(2 * np.pi * x[:, 0])})
    assert correspondence_check(sl, n_points=100, jets_per_x=50).passed


def test_correspondence_where_h_vanishes():
    # (-r)^4 det A is tiny but positive on interior jets near the corner
    op = _has(lambda x: (x ** 2).sum(1))
    corner = BoxDomain((0.0, 0.0), (1e-3, 1e-3))
    rep = correspondence_check(op, region=corner, box=SampleBox(r_range=(-0.1, 0.1), eig_scale=0.1),
                               n_points=20, jets_per_x=200)
    assert rep.passed, rep.witness


def test_rc_slack_table_for_has():
    op = _has(lambda x: (x ** 2).sum(1))
    cert = check_RC(op, [0.5], n_points=300, jets_per_x=10, max_halvings=32)
    assert cert.certified
    row = cert.table[0]
    assert row["min_slack"] >= 0
    assert 0.5 ** 6 - (2 * math.sqrt(2) * row["delta"] - row["delta"] ** 2) >= 0


def test_rc_refutations():
    sl = make_builtin("special_lagrangian", 2, SQ, {"h": lambda x: 0.5 - x[:, 0]})
    cert = check_RC(sl, [1.0], box=SampleBox(r_range=(-1, 1), eig_scale=1e6), n_points=300, jets_per_x=20)
    assert cert.verdict == "refuted"
    lin = make_builtin("linear", 2, SQ, {"c": lambda x: 1 + x[:, 0]})
    cert = check_RC(lin, [1.0], box=SampleBox(r_range=(-1e9, 1e9), eig_scale=10), n_points=300, jets_per_x=20)
    assert cert.verdict == "refuted"
    assert abs(cert.witness["jet"]["r"]) > 1e3
