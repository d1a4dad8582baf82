import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelab import geometry as geo
from conelab import weaktype as wt
from conelab.errors import DomainError, ResolutionError
from conelab.fields import SampledField
from conelab.operator import ConeSymbol, apply_T, delta_critical

P = 2 / 3


@pytest.fixture(scope="module")
def template():
    return SampledField.zeros((48, 48, 48), (2.0, 2.0, 2.0))


@pytest.fixture(scope="module")
def atom(template):
    return wt.make_atom(P, wt.min_moment_order(P, 3), template, 0.5, seed=4)


# --- atoms ---------------------------------------------------------------------------------


def test_atom_moments_and_size(atom):
    assert atom.nu == 2
    assert atom.size_ratio() == pytest.approx(1.0, abs=1e-12)
    assert atom.moment_defect() < 1e-10
    assert atom.is_valid()


def test_atom_l2_bound(atom):
    assert atom.field.l2_norm() <= atom.volume ** (0.5 - 1 / P)


def test_atom_is_supported_in_cube(atom):
    grids = np.meshgrid(*atom.field.axes(), indexing="ij")
    outside = np.any([np.abs(g) > atom.diameter / 2 for g in grids], axis=0)
    assert np.all(atom.field.data[outside] == 0)


def test_rescaled_atom_is_unit_atom(atom):
    b = wt.rescale_atom(atom)
    assert b.diameter == 1.0
    assert b.size_ratio() == pytest.approx(1.0, abs=1e-12)
    assert b.moment_defect() < 1e-10


def test_atom_preconditions(template):
    with pytest.raises(DomainError):
        wt.make_atom(P, 1, template, 0.5)
    with pytest.raises(DomainError):
        wt.make_atom(1.2, 2, template, 0.5)
    with pytest.raises(ResolutionError):
        wt.make_atom(P, 2, template, 0.05)


def test_atom_seed_is_reproducible(template):
    a = wt.make_atom(P, 2, template, 0.5, seed=9)
    b = wt.make_atom(P, 2, template, 0.5, seed=9)
    assert np.array_equal(a.field.data, b.field.data)


# --- distribution function and quasinorm -------------------------------------------------------


def plateau_field(height, side_cells=8, n=32):
    data = np.zeros((n, n, n))
    data[:side_cells, :side_cells, :side_cells] = height
    return SampledField(data, (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))


def test_distribution_examples():
    g = plateau_field(3.0)
    V = (8 / 32) ** 3
    assert wt.distribution_function(g, 3.5) == 0.0
    assert wt.distribution_function(g, 1.0) == pytest.approx(V)
    d = wt.distribution_function(g, [0.5, 1.0, 2.9, 3.0])
    assert np.all(np.diff(d) <= 0)


def test_plateau_quasinorm():
    g = plateau_field(3.0)
    V = (8 / 32) ** 3
    rep = wt.weak_quasinorm(g, P)
    assert rep.exact_quasinorm == pytest.approx(3.0 * V ** (1 / P))
    # the grid starts at max|g|, so the first strictly-below threshold is one step down
    assert rep.quasinorm == pytest.approx(3.0 * 2 ** (-1 / 8) * V ** (1 / P))


@given(st.floats(1e-3, 1e3))
@settings(max_examples=20)
def test_quasinorm_homogeneity(c):
    rng = np.random.default_rng(1)
    g = SampledField(rng.standard_cauchy((16, 16, 16)), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))
    a = wt.weak_quasinorm(g, P).quasinorm
    b = wt.weak_quasinorm(g.like(c * g.data), P).quasinorm
    assert b == pytest.approx(c * a, rel=1e-12)


def test_quasinorm_grid_refinement(atom, lq4):
    g = apply_T(ConeSymbol(1.5, lq4), atom.field)
    a = wt.weak_quasinorm(g, P, octaves=30).quasinorm
    b = wt.weak_quasinorm(g, P, octaves=30, per_octave=16).quasinorm
    assert abs(a - b) / b <= 0.02


def test_quasinorm_scales_with_domain():
    rng = np.random.default_rng(2)
    data = rng.normal(size=(8, 8, 8))
    s = 0.25
    a = wt.weak_quasinorm(SampledField(data, (1.0,) * 3, (0.0,) * 3), P).exact_quasinorm
    b = wt.weak_quasinorm(SampledField(data, (s,) * 3, (0.0,) * 3), P).exact_quasinorm
    assert b == pytest.approx(a * s ** (3 / P), rel=1e-12)


def test_quasinorm_translation_invariant(atom, lq4):
    g = apply_T(ConeSymbol(1.5, lq4), atom.field)
    a = wt.weak_quasinorm(g, P).quasinorm
    b = wt.weak_quasinorm(apply_T(ConeSymbol(1.5, lq4), atom.field.shifted((5, -3, 7))), P).quasinorm
    assert b == pytest.approx(a, rel=1e-9)


@pytest.mark.parametrize("gauge", ["euclid", "lq4"])
def test_smoother_symbol_has_smaller_quasinorm(gauge, request):
    df = request.getfixturevalue(gauge)
    crit = delta_critical(P, 2)
    a = wt.weak_type_experiment(df, P, scales=(0, 2), n=64)
    b = wt.weak_type_experiment(df, P, delta=crit + 2, scales=(0, 2), n=64)
    for ra, rb in zip(a, b):
        assert np.isfinite(rb.quasinorm_full) and rb.quasinorm_full < ra.quasinorm_full


# --- summation of weak-type pieces ---------------------------------------------------------------


def brute_measure(centers, weights, p, lam, lo=-60, hi=60, n=2_000_001):
    x = np.linspace(lo, hi, n)
    total = np.zeros_like(x)
    for c, w in zip(centers, weights):
        with np.errstate(divide="ignore"):
            total += w * np.abs(x - c) ** (-1 / p)
    return np.count_nonzero(total > lam) * (x[1] - x[0])


def test_single_power_law_measure_closed_form():
    for p in (1 / 3, 0.5, P):
        for lam in (0.1, 1.0, 7.0):
            assert wt.power_sum_measure([0.3], [1.0], p, lam) == pytest.approx(2 * lam ** (-p), rel=1e-10)


def test_power_sum_measure_against_grid_count():
    centers, weights = [-2.0, 0.5, 1.1, 4.0], [1.0, 0.3, 2.0, 0.7]
    for lam in (0.8, 2.0, 5.0):
        exact = wt.power_sum_measure(centers, weights, 0.5, lam)
        assert exact == pytest.approx(brute_measure(centers, weights, 0.5, lam), abs=2e-4)


def test_summation_bound_constant():
    assert wt.stw_constant(0.5) == pytest.approx(3.0)
    rep = wt.stw_sum_check(0.5, [0.0], [1.0], [0.5, 1.0, 4.0])
    # one piece of weak constant 2 sits a factor 3 under the bound
    assert rep.worst_ratio == pytest.approx(1 / 3, rel=1e-9)


@pytest.mark.parametrize("p", [1 / 3, 0.5, P])
def test_summation_bound_random_pieces(p, rng):
    centers = rng.uniform(-5, 5, 12)
    weights = rng.exponential(1.0, 12)
    rep = wt.stw_sum_check(p, centers, weights, np.geomspace(1e-2, 1e3, 25))
    assert rep.holds


def test_summation_rejects_bad_input():
    with pytest.raises(DomainError):
        wt.stw_sum_check(1.0, [0.0], [1.0], [1.0])
    with pytest.raises(DomainError):
        wt.stw_sum_check(0.5, [0.0], [-1.0], [1.0])


def test_geometric_sum_single_piece():
    rep = wt.lemma42_check(0.5, 1.0, [0.0], np.geomspace(0.01, 100, 9))
    # one piece 2^-a |x|^-2: measure 2 * 2^(-a p) lam^-p, divided by the per-piece 2
    assert rep.constant == pytest.approx(2 ** (-0.5), rel=1e-9)


def test_geometric_sum_bounded_and_control_grows():
    lams = np.geomspace(1e-3, 1e3, 13)
    centers = np.linspace(-3, 3, 30)
    decaying = wt.lemma42_check(0.5, 1.0, centers, lams).constant
    assert decaying <= wt.stw_constant(0.5) / (2**0.5 - 1)
    few = wt.lemma42_check(0.5, 0.0, centers[:3], lams).constant
    many = wt.lemma42_check(0.5, 0.0, centers, lams).constant
    assert many > 3 * few


# --- atom experiment -----------------------------------------------------------------------------


def test_experiment_refuses_unresolved_atoms(euclid):
    with pytest.raises(ResolutionError):
        wt.weak_type_experiment(euclid, P, scales=range(6), n=32)


def test_small_experiment_rows(lq4):
    rows = wt.weak_type_experiment(lq4, P, scales=range(3), n=48, octaves=30)
    assert [r.j for r in rows] == [0, 1, 2]
    assert all(r.quasinorm_cone <= r.quasinorm_full * (1 + 1e-12) for r in rows)
    assert rows[0].delta == pytest.approx(1.5)
    assert wt.cone_mask(SampledField.zeros((4, 4, 4), (2.0,) * 3), geo.gamma_of(lq4)).any()
