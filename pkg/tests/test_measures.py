import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from freeconv.exceptions import DomainError
from freeconv.io import load_measure, save_measure
from freeconv.measures import (
    Arcsine,
    Atoms,
    GridDensity,
    Semicircle,
    measure_from_dict,
    moment,
    point_mass,
    shift,
    stieltjes_derivative,
    stieltjes_eval,
    support_bounds,
)

from conftest import sample_measures

MEASURES = sample_measures()


# --- documented examples -------------------------------------------------

def test_point_mass_at_zero():
    assert stieltjes_eval(Atoms([0.0], [1.0]), 1j) == pytest.approx(1j, abs=1e-15)


def test_symmetric_two_atom():
    assert stieltjes_eval(Atoms([-1.0, 1.0], [0.5, 0.5]), 2j) == pytest.approx(0.4j, abs=1e-15)


def test_semicircle_value():
    expected = 1j * (math.sqrt(17) - 3) / 4
    assert stieltjes_eval(Semicircle(1.0), 3j) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("c", [-2.5, 0.0, 3.0])
def test_point_mass_mean(c):
    assert moment(point_mass(c), 1) == pytest.approx(c)


def test_semicircle_variance():
    assert moment(Semicircle(1.0), 2) == pytest.approx(2.0)


def test_arcsine_variance():
    assert moment(Arcsine(1.0), 2) == pytest.approx(0.5)


def test_support_bounds():
    assert support_bounds(Atoms([0.0, 1.0], [0.5, 0.5])) == (0.0, 1.0)
    lo, hi = support_bounds(Semicircle(1.0))
    assert (lo, hi) == pytest.approx((-2 * math.sqrt(2), 2 * math.sqrt(2)))


def test_grid_support_covers_positive_cells():
    xs = np.linspace(0, 4, 9)
    ps = np.array([0, 0, 1, 2, 1, 0, 0, 0, 0], dtype=float)
    lo, hi = support_bounds(GridDensity(xs, ps))
    assert lo <= 1.0 and hi >= 1.5
    assert lo >= 0.5 and hi <= 2.5


# --- quadrature oracles --------------------------------------------------

@pytest.mark.parametrize("k", range(0, 9))
def test_semicircle_moments_by_quadrature(k):
    m = Semicircle(0.7)
    a, b = m.support()
    ref = quad(lambda x: x**k * m.density(x), a, b)[0]
    assert moment(m, k) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("k", range(0, 9))
def test_arcsine_moments_by_quadrature(k):
    m = Arcsine(1.3)
    # substitute x = a cos t to remove the endpoint singularities
    ref = quad(lambda t: (1.3 * math.cos(t)) ** k / math.pi, 0, math.pi)[0]
    assert moment(m, k) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("z", [0.3 + 1j, -2 + 1.5j, 1j * 4, 3 - 1j])
def test_closed_forms_against_quadrature(z):
    sc = Semicircle(1.0)
    a, b = sc.support()
    ref = complex(
        quad(lambda x: (sc.density(x) / (x - z)).real, a, b)[0],
        quad(lambda x: (sc.density(x) / (x - z)).imag, a, b)[0],
    )
    assert abs(stieltjes_eval(sc, z) - ref) <= 1e-4
    arc = Arcsine(1.0)
    g = lambda t: 1.0 / (math.pi * (math.cos(t) - z))
    ref = complex(quad(lambda t: g(t).real, 0, math.pi)[0], quad(lambda t: g(t).imag, 0, math.pi)[0])
    assert abs(stieltjes_eval(arc, z) - ref) <= 1e-4


def test_grid_density_matches_closed_form():
    sc = Semicircle(1.0)
    e = sc.edge
    xs = np.linspace(-e, e, 4001)
    grid = GridDensity(xs, sc.density(xs))
    for z in [0.5 + 1j, 2j, -1 + 0.2j]:
        assert abs(grid.stieltjes(z) - sc.stieltjes(z)) < 1e-4


def test_derivatives_match_finite_differences():
    h = 1e-6
    for m in MEASURES:
        for z in [0.4 + 1.1j, -1.2 + 0.6j]:
            fd = (stieltjes_eval(m, z + h) - stieltjes_eval(m, z - h)) / (2 * h)
            assert abs(stieltjes_derivative(m, z) - fd) < 1e-5 * max(1, abs(fd))


# --- properties -----------------------------------------------------------

upper = st.tuples(
    st.floats(-20, 20, allow_nan=False),
    st.floats(0.1, 100, allow_nan=False),
).map(lambda t: complex(*t))


@settings(max_examples=150, deadline=None)
@given(idx=st.integers(0, len(MEASURES) - 1), z=upper)
def test_bound_and_sign(idx, z):
    s = stieltjes_eval(MEASURES[idx], z)
    assert abs(s) <= 1.0 / z.imag * (1 + 1e-12)
    assert s.imag > 0


@settings(max_examples=100, deadline=None)
@given(idx=st.integers(0, len(MEASURES) - 1), z=upper)
def test_conjugate_symmetry(idx, z):
    m = MEASURES[idx]
    assert stieltjes_eval(m, z.conjugate()) == pytest.approx(stieltjes_eval(m, z).conjugate(), abs=1e-14)


@pytest.mark.parametrize("m", MEASURES, ids=lambda m: type(m).__name__)
def test_large_y_asymptotics(m):
    errs = [abs(1j * y * stieltjes_eval(m, 1j * y) + 1) for y in (10, 100, 1000)]
    assert errs[0] >= errs[1] >= errs[2]
    # the defect behaves like |mean| / y
    assert errs[2] <= 1.01 * m.radius() / 1000


@settings(max_examples=50, deadline=None)
@given(
    pts=st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6),
    raw=st.lists(st.floats(0.05, 1.0), min_size=6, max_size=6),
)
def test_random_atoms_cdf_and_quantile(pts, raw):
    w = np.array(raw[: len(pts)])
    m = Atoms(pts, w / w.sum())
    xs = np.sort(np.unique(pts))
    assert m.cdf(xs[-1]) == pytest.approx(1.0)
    assert m.cdf(xs[0] - 1e-9) == pytest.approx(0.0, abs=1e-12)
    q = m.quantile(np.array([0.01, 0.5, 0.99]))
    assert np.all(np.isin(q, xs))


# --- validation -----------------------------------------------------------

def test_real_axis_rejected():
    with pytest.raises(DomainError):
        stieltjes_eval(Semicircle(1.0), 0.5 + 0j)


@pytest.mark.parametrize(
    "points,weights",
    [([0.0, 1.0], [0.5, 0.4]), ([0.0], [-1.0]), ([], []), ([0.0, float("nan")], [0.5, 0.5])],
)
def test_bad_atoms(points, weights):
    with pytest.raises(DomainError):
        Atoms(points, weights)


def test_atoms_merge_duplicates():
    m = Atoms([1.0, 1.0 + 1e-14, 2.0], [0.25, 0.25, 0.5])
    assert len(m.points) == 2
    assert m.weights[0] == pytest.approx(0.5)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("inf")])
def test_bad_parameters(bad):
    with pytest.raises(DomainError):
        Semicircle(bad)
    with pytest.raises(DomainError):
        Arcsine(bad)


def test_moment_order_range():
    with pytest.raises(DomainError):
        moment(Semicircle(1.0), 9)


def test_shift_moves_mean():
    for m in (Atoms([0.0, 1.0], [0.5, 0.5]), Semicircle(1.0), Arcsine(1.0)):
        assert moment(shift(m, 1.5), 1) == pytest.approx(moment(m, 1) + 1.5, abs=1e-4)


# --- serialization --------------------------------------------------------

@pytest.mark.parametrize("m", MEASURES, ids=lambda m: type(m).__name__)
def test_json_round_trip(m, tmp_path):
    path = tmp_path / "m.json"
    save_measure(m, path)
    back = load_measure(path)
    for z in [0.3 + 0.5j, -1 + 2j, 5j]:
        assert abs(stieltjes_eval(back, z) - stieltjes_eval(m, z)) <= 1e-15


def test_schema_example():
    m = measure_from_dict({"type": "atoms", "points": [{"x": 0, "w": 0.5}, {"x": 1, "w": 0.5}]})
    assert isinstance(m, Atoms)


def test_truncated_json_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"type": "atoms", "points": [{"x": 0')
    with pytest.raises(DomainError, match=r"line 1 column \d+"):
        load_measure(path)


def test_unknown_type(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"type": "cauchy"}))
    with pytest.raises(DomainError):
        load_measure(path)


def test_shifted_law_is_exact():
    m = shift(Arcsine(1.0), 2.0)
    z = 1.7 + 0.3j
    assert stieltjes_eval(m, z) == pytest.approx(stieltjes_eval(Arcsine(1.0), z - 2.0), abs=1e-15)
    assert support_bounds(m) == pytest.approx((1.0, 3.0))
    assert m.quantile(0.5) == pytest.approx(2.0)
    assert moment(m, 2) == pytest.approx(4.5)
