import numpy as np
import pytest

from conelab import envelopes as ev
from conelab import geometry as geo
from conelab.errors import DomainError

P = 2 / 3


def env(family, df, l=0, case="i", j=None):
    return ev.Envelope(family, df, P, l, ev.min_tail_order(P, df.d), case, j=j)


def test_family_a_reference_value(euclid):
    e = env("A", euclid)
    assert ev.envelope_eval(e, np.zeros(2), 4.0) == pytest.approx(0.03125, rel=1e-12)


def test_envelope_vanishes_off_region(euclid):
    assert ev.envelope_eval(env("A", euclid), np.array([8.0, 0.0]), 4.0) == 0.0
    assert ev.envelope_eval(env("C", euclid), np.array([8.0, 0.0]), 20.0) == 0.0
    assert ev.envelope_eval(env("E", euclid, j=1), np.array([8.0, 0.0]), 11.0) == 0.0


def test_e_shells_drop_by_tail_order(lq4):
    # the same point moved one shell out keeps r and Phi, so only 2^(-jN) changes
    N = ev.min_tail_order(P, 2)
    x = np.array([8.0, 0.0])
    gamma = geo.gamma_of(lq4)
    a = ev.envelope_eval(env("E", lq4, j=2), x, gamma * 8 + 3.0)
    b = ev.envelope_eval(env("E", lq4, j=3), x, gamma * 8 + 6.0)
    assert b / a == pytest.approx(2.0 ** (-N), rel=1e-12)


def test_family_e_needs_positive_shell(euclid):
    with pytest.raises(DomainError):
        env("E", euclid, j=0)
    with pytest.raises(DomainError):
        env("F", euclid)


def test_exponent_cases_differ_by_tail_order():
    i = ev.exponent_set("i", P, 2, 3)
    ii = ev.exponent_set("ii", P, 2, 3)
    assert ii.a - i.a == pytest.approx(3)
    assert i.a - i.b == pytest.approx(3)
    assert ii.c - i.c == pytest.approx(3)
    assert ev.min_tail_order(P, 2) == 2
    assert ev.min_tail_order(0.5, 2) == 4


def test_aligned_lambdas_sit_below_peak():
    lams = ev.aligned_lambdas(3.0, 4)
    assert lams.max() < 3.0 <= lams.max() * 2 ** (1 / 8) + 1e-12
    assert len(lams) == 33


def _grid_measures(e, lams, box, n):
    """Level-set volumes by counting cells of a uniform (x1, x2, t >= 0) grid."""
    g = np.linspace(-box, box, n)
    h = g[1] - g[0]
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], 1)
    tot = np.zeros(len(lams))
    for t in g[g > 0]:
        v = ev.envelope_eval(e, pts, np.full(len(pts), t))
        tot += np.array([(v > lam).sum() for lam in lams])
    return 2 * tot * h**3


@pytest.mark.parametrize("family,j,box,n,tol", [("B", None, 14, 241, 0.06), ("C", None, 14, 241, 0.06),
                                                 ("E", 2, 14, 241, 0.08), ("D", None, 8, 401, 0.05)])
def test_measures_match_grid_counting(lq4, family, j, box, n, tol):
    e = env(family, lq4, j=j)
    lams, meas = ev.envelope_measures(e, octaves=8)
    pick = [len(lams) - 9, len(lams) - 17]
    brute = _grid_measures(e, lams[pick], box, n)
    assert np.all(np.abs(brute / meas[pick] - 1) < tol)


def test_family_a_measure_closed_form(euclid):
    e = env("A", euclid)
    lam = 1e-3
    top = lam ** (-1 / 2.5)
    expected = np.pi * 16 * 2 * (top - 2)
    assert ev.envelope_measures(e, lambdas=[lam])[1][0] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("family", ["A", "C", "E"])
def test_constants_are_level_invariant(lq4, family):
    rows = ev.lemma43_measure_check(lq4, P, families=(family,), cases=("i",), levels=(-1, 0, 2))
    assert ev.constant_spread(rows, family, "i") <= 1.2


def test_lambda_slopes(euclid):
    rows = ev.lemma43_measure_check(euclid, P, families=("A", "C"), cases=("ii",), levels=(0,))
    slopes = {r.family: r.slope for r in rows}
    assert slopes["C"] == pytest.approx(-P, abs=0.1)
    # the time-only envelope has slope -1/(delta+1), not -p
    assert slopes["A"] == pytest.approx(-1 / 2.5, abs=0.01)
