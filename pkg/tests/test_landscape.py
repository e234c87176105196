import math

import numpy as np
import pytest

from kpzlab import lpp
from kpzlab.errors import LabError
from kpzlab.grid import RngKey, make_grid, window_grid
from kpzlab.landscape import (
    ScalingParams,
    airy_sheet,
    composition_across_times,
    coupled_slices,
    disjoint_time_slices,
    environment_for,
    remove_parabola,
    rescale_to_landscape,
    sample_landscape_slice,
    scale_composition_pair,
)
from kpzlab.stats import ks_two_sample

ZG = window_grid(-1.0, 1.0, 0.25)
XG = window_grid(-1.0, 1.0, 0.25)


def test_scaling_params():
    p = ScalingParams(8.0)
    assert p.n13 == pytest.approx(2.0) and p.n16 == pytest.approx(math.sqrt(2.0))
    assert p.space_map(1.0, 0.5) == pytest.approx(1.5)
    assert p.line_map(0.5) == -4 and p.line_map(0.0) == 0
    assert p.line_map(0.25) > p.line_map(0.5)
    assert p.lines_per_unit_time == 8
    with pytest.raises(LabError):
        ScalingParams(0.5)


def test_rescale_examples():
    n, s, t, x, y = 27.0, 0.0, 2.0, 0.3, -0.4
    raw = 2 * (t - s) * math.sqrt(n) + 2 * (y - x) * n ** (1 / 6)
    assert rescale_to_landscape(raw, n, x, s, y, t) == pytest.approx(0.0, abs=1e-12)
    assert rescale_to_landscape(5.0, 1.0, 0.0, 0.0, 0.0, 1.0) == pytest.approx(3.0)
    d = rescale_to_landscape(raw + 1.5, n, x, s, y, t) - rescale_to_landscape(raw, n, x, s, y, t)
    assert d == pytest.approx(1.5 * n ** (1 / 6))
    with pytest.raises(LabError) as e:
        rescale_to_landscape(0.0, n, 0.0, 1.0, 0.0, 1.0)
    assert e.value.code == "BAD_TIME_ORDER"


def test_slice_determinism_and_kernel_consistency():
    a = sample_landscape_slice(50.0, 0.0, 1.0, ZG, XG, RngKey(3))
    b = sample_landscape_slice(50.0, 0.0, 1.0, ZG, XG, RngKey(3))
    assert np.array_equal(a.values, b.values)
    env = a.env
    for i in range(0, ZG.count, 3):
        for j in range(0, a.x_grid.count, 2):
            raw = lpp.last_passage(env.ensemble, lpp.LppEndpoint(int(a.z_index[i]), env.line(0.0)),
                                   lpp.LppEndpoint(int(a.x_index[j]), env.line(1.0))).value
            ref = rescale_to_landscape(raw, 50.0, a.z_grid.point(i), 0.0, a.x_grid.point(j), 1.0)
            assert abs(a.values[i, j] - ref) <= 1e-12


def test_inadmissible_entries_are_minus_infinity():
    zg = window_grid(0.0, 4.0, 0.5)
    xg = window_grid(-4.0, 0.0, 0.5)
    sl = sample_landscape_slice(8.0, 0.0, 0.25, zg, xg, RngKey(1))
    p = sl.params
    for i, z in enumerate(sl.z_grid.points):
        for j, x in enumerate(sl.x_grid.points):
            ok = p.space_map(z, 0.0) <= p.space_map(x, 0.25) + 1e-12
            assert np.isfinite(sl.values[i, j]) == ok


def test_slice_serialization():
    sl = sample_landscape_slice(20.0, 0.0, 1.0, make_grid(0.0, 0.5, 2), make_grid(0.0, 0.5, 2),
                                RngKey(2))
    text = sl.to_csv()
    assert text.startswith("# n=20.0") and "z_index,x_index,value" in text
    assert len(text.strip().splitlines()) == 5 + 1 + 4
    assert '"values"' in sl.to_json()


def test_airy_sheet_parabola():
    # at n = 8 the 0.25 grid embeds exactly, so no snapping perturbs the parabola
    sl = sample_landscape_slice(8.0, 0.0, 1.0, ZG, ZG, RngKey(4))
    sh = airy_sheet(sl)
    diag = np.arange(ZG.count)
    assert np.array_equal(sh.sheet[diag, diag], sl.values[diag, diag])
    back = remove_parabola(sh)
    fin = np.isfinite(sl.values)
    assert fin.any() and np.array_equal(np.isfinite(back), fin)
    assert np.max(np.abs(back[fin] - sl.values[fin])) <= 1e-12
    other = sample_landscape_slice(8.0, 0.0, 2.0, ZG, ZG, RngKey(4))
    with pytest.raises(LabError) as e:
        airy_sheet(other)
    assert e.value.code == "WRONG_TIMES"


def test_composition_across_times_exact():
    gap = composition_across_times(40.0, 0.0, 0.5, 1.0, ZG, XG, RngKey(5))
    assert gap <= 1e-9
    with pytest.raises(LabError) as e:
        composition_across_times(40.0, 0.0, 0.51, 1.0, ZG, XG, RngKey(5))
    assert e.value.code == "MISALIGNED_SPLIT"


def test_composition_single_middle_point_is_a_deficit():
    rs, st, rt = coupled_slices(40.0, 0.0, 0.5, 1.0, ZG, XG, RngKey(6))
    mid = make_grid(float(st.z_grid.point(st.z_grid.count // 2)), st.z_grid.step, 2)
    rs1, st1, rt1 = coupled_slices(40.0, 0.0, 0.5, 1.0, ZG, XG, RngKey(6), middle_grid=mid)
    one = np.maximum(rs1.values[:, :1] + st1.values[:1, :], rs1.values[:, 1:] + st1.values[1:, :])
    fin = np.isfinite(one)
    assert (rt1.values[fin] - one[fin] >= -1e-9).all()


def test_disjoint_slices():
    g = (make_grid(0.0, 0.5, 2), make_grid(0.0, 0.5, 2))
    single = disjoint_time_slices(30.0, [(0.0, 1.0)], g, RngKey(7))[0]
    ref = environment_for(30.0, 0.0, 1.0, *g, RngKey(7)).slice(0.0, 1.0, *g)
    assert np.array_equal(single.values, ref.values)
    with pytest.raises(LabError) as e:
        disjoint_time_slices(30.0, [(0.0, 1.0), (0.5, 2.0)], g, RngKey(7))
    assert e.value.code == "OVERLAPPING_INTERVALS"
    u, v = [], []
    for i in range(1000):
        a, b = disjoint_time_slices(30.0, [(0.0, 0.5), (0.5, 1.0)], g, RngKey(8, i))
        u.append(a.values[0, 0])
        v.append(b.values[0, 0])
    assert abs(np.corrcoef(u, v)[0, 1]) < 3 / math.sqrt(1000)


def test_sheet_stationarity_in_law():
    # a finer LPP grid than the default: the prelimit mean bias grows with the
    # grid step and tilts A(z, -z) against A(0, 0)
    e, n = 0.1, 50.0
    g = make_grid(-e, e, 3)
    a, b = [], []
    for i in range(1000):
        sl = sample_landscape_slice(n, 0.0, 1.0, g, g, RngKey(10, i), 1 / (20 * n))
        sh = airy_sheet(sl).sheet
        a.append(sh[1, 1])
        b.append(sh[2, 0])
    assert ks_two_sample(a, b) < 0.08


def test_scale_composition_in_law():
    pairs = np.array([scale_composition_pair(30.0, 1.0, 1.0, RngKey(12, i), halfwidth=3.0)
                      for i in range(1000)])
    assert ks_two_sample(pairs[:, 0], pairs[:, 1]) < 0.1
