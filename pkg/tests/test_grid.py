import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kpzlab.errors import LabError
from kpzlab.grid import (
    ExtendedValue,
    GridFunction,
    RngKey,
    Tag,
    load_grid_function,
    make_grid,
    sample_line_ensemble,
    sample_two_sided_bm,
    shift_values,
    window_grid,
    with_drift,
)


def test_make_grid_points():
    assert make_grid(0.0, 0.5, 3).points.tolist() == [0.0, 0.5, 1.0]
    assert make_grid(-1.0, 1.0, 3).points.tolist() == [-1.0, 0.0, 1.0]


@pytest.mark.parametrize("args, code", [((0.0, -0.1, 5), "NON_POSITIVE_STEP"),
                                        ((0.0, 0.0, 5), "NON_POSITIVE_STEP"),
                                        ((0.0, 0.1, 1), "COUNT_TOO_SMALL")])
def test_make_grid_errors(args, code):
    with pytest.raises(LabError) as e:
        make_grid(*args)
    assert e.value.code == code


def test_window_grid_reaches_hi():
    g = window_grid(-1.0, 1.0, 0.3)
    assert g.origin == -1.0 and g.last >= 1.0 - 1e-12


def test_extended_value_order():
    lo = ExtendedValue.of(-math.inf)
    assert lo.tag is Tag.MINUS_INFINITY
    for x in (-1e300, 0.0, 5.0):
        assert lo < ExtendedValue.of(x)
    with pytest.raises(LabError):
        ExtendedValue.of(math.nan)
    with pytest.raises(LabError):
        ExtendedValue.of(math.inf)


def test_grid_function_invariants():
    g = make_grid(0.0, 1.0, 3)
    with pytest.raises(LabError) as e:
        GridFunction(g, [-np.inf] * 3)
    assert e.value.code == "NO_FINITE_VALUE"
    with pytest.raises(LabError) as e:
        GridFunction(g, [0.0, 1.0])
    assert e.value.code == "LENGTH_MISMATCH"
    f = GridFunction(g, [0.0, 1.0, 2.0])
    with pytest.raises(LabError) as e:
        f.eval(3)
    assert e.value.code == "INDEX_OUT_OF_RANGE"
    with pytest.raises(ValueError):
        f.values[0] = 9.0  # read-only


def test_shift_examples():
    g = make_grid(-1.0, 1.0, 3)
    wedge = GridFunction(g, [-np.inf, 0.0, -np.inf])
    s5 = shift_values(wedge, 5.0)
    assert s5.eval(1).value == 5.0 and not s5.eval(0).is_finite
    assert shift_values(wedge, 0.0).same_as(wedge)
    assert shift_values(shift_values(wedge, 2.5), -2.5).same_as(wedge)


@given(st.lists(st.one_of(st.floats(-1e6, 1e6), st.just(-math.inf)), min_size=2, max_size=12)
       .filter(lambda v: any(math.isfinite(x) for x in v)))
def test_csv_roundtrip(vals):
    f = GridFunction(make_grid(-0.5, 0.25, len(vals)), vals)
    back = GridFunction.from_csv(f.to_csv())
    assert np.array_equal(back.values, f.values)
    assert np.allclose(back.grid.points, f.grid.points, atol=1e-12)


def test_load_grid_function(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("x,value\n-1.0,-inf\n0.0,0.0\n1.0,-inf\n")
    f = load_grid_function(p)
    assert f.values[1] == 0.0 and f.values[0] == -np.inf


def test_rng_key_pure_and_distinct():
    a = RngKey(7, 1, 2).derive(3).generator().standard_normal(5)
    b = RngKey(7, 1, 2).derive(3).generator().standard_normal(5)
    c = RngKey(7, 1, 2).derive(4).generator().standard_normal(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    with pytest.raises(LabError):
        RngKey(-1)


def test_ensemble_determinism_and_pinning():
    g = make_grid(-1.0, 0.01, 200)
    e1 = sample_line_ensemble(g, 4, RngKey(3))
    e2 = sample_line_ensemble(g, 4, RngKey(3))
    assert np.array_equal(e1.lines, e2.lines)
    assert (e1.lines[:, 0] == 0.0).all()
    with pytest.raises(LabError) as e:
        sample_line_ensemble(g, 0, RngKey(3))
    assert e.value.code == "BAD_K"


def test_ensemble_increment_variance():
    g = make_grid(0.0, 1e-3, 100_001)
    e = sample_line_ensemble(g, 1, RngKey(5))
    v = np.diff(e.line(1)).var()
    assert abs(v / g.step - 1.0) < 0.05


def test_lines_independent_by_key():
    g = make_grid(0.0, 1e-3, 20_001)
    e = sample_line_ensemble(g, 2, RngKey(5))
    d1, d2 = np.diff(e.line(1)), np.diff(e.line(2))
    assert abs(np.corrcoef(d1, d2)[0, 1]) < 3 / math.sqrt(d1.size)


def test_two_sided_bm_degenerate_and_pinned():
    g = make_grid(-1.0, 0.5, 5)
    f = sample_two_sided_bm(g, 0.0, 3.0, RngKey(1))
    assert np.array_equal(f.values, 3.0 * g.points)
    b = sample_two_sided_bm(make_grid(-2.0, 0.1, 41), 2.0, 0.0, RngKey(2))
    assert b.values[20] == 0.0
    with pytest.raises(LabError) as e:
        sample_two_sided_bm(make_grid(1.0, 0.1, 5), 2.0, 0.0, RngKey(2))
    assert e.value.code == "ORIGIN_NOT_ON_GRID"


def test_two_sided_bm_variance_at_one():
    g = make_grid(-1.0, 0.05, 41)
    i1 = g.nearest_index(1.0)
    vals = np.array([sample_two_sided_bm(g, 2.0, 0.0, RngKey(9, i)).values[i1]
                     for i in range(10_000)])
    assert abs(vals.var() / 2.0 - 1.0) < 0.05


def test_with_drift_shares_path():
    g = make_grid(-1.0, 0.1, 21)
    b = sample_two_sided_bm(g, 2.0, 0.0, RngKey(4))
    up, dn = with_drift(b, 1.5), with_drift(b, -1.5)
    assert np.allclose(up.values - dn.values, 3.0 * g.points)
