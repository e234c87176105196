"""Directed-landscape estimates from Brownian LPP.

Landscape points ``(x, s)`` are embedded into the LPP plane by

    position = s + 2 x / n^{1/3},    line = -floor(s n),

and raw last-passage values are centred and scaled by
:func:`rescale_to_landscape`.  An :class:`Environment` is one sampled
line ensemble covering a time range; every slice cut from it is coupled
to every other, which is what the pathwise comparison checks rely on.

Ensemble lines are renumbered so that the latest time of the
environment is line 1 and the earliest is line ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lpp
from .errors import LabError
from .grid import Grid, LineEnsemble, RngKey, make_grid, sample_line_ensemble, window_grid

#: default ensemble resolution, in grid points per line spacing 1/n
POINTS_PER_LINE = 5
_ALIGN_TOL = 1e-9


def _floor(x: float) -> int:
    r = round(x)
    return int(r) if abs(x - r) < _ALIGN_TOL else math.floor(x)


def is_line_aligned(s: float, n: float) -> bool:
    return abs(s * n - round(s * n)) < _ALIGN_TOL


@dataclass(frozen=True)
class ScalingParams:
    n: float

    def __post_init__(self) -> None:
        if not self.n >= 1:
            raise LabError("BAD_N", f"n={self.n!r} must be >= 1")

    @property
    def lines_per_unit_time(self) -> int:
        return math.floor(self.n)

    @property
    def n13(self) -> float:
        return self.n ** (1.0 / 3.0)

    @property
    def n16(self) -> float:
        return self.n ** (1.0 / 6.0)

    def space_map(self, x, s: float):
        """LPP position of landscape point ``x`` at time ``s`` (arrays welcome)."""
        return s + 2.0 * np.asarray(x, dtype=np.float64) / self.n13

    def inverse_space_map(self, pos, s: float):
        return (np.asarray(pos, dtype=np.float64) - s) * self.n13 / 2.0

    def line_map(self, s: float) -> int:
        return -_floor(s * self.n)

    def default_grid_step(self) -> float:
        return 1.0 / (POINTS_PER_LINE * self.n)


def rescale_to_landscape(raw, n: float, x, s: float, y, t: float):
    """``n^{1/6} (raw - 2(t-s) sqrt(n) - 2(y-x) n^{1/6})``; broadcasts over arrays."""
    if not s < t:
        raise LabError("BAD_TIME_ORDER", f"s={s} must be < t={t}")
    n16 = n ** (1.0 / 6.0)
    return n16 * (raw - 2.0 * (t - s) * math.sqrt(n) - 2.0 * (np.subtract(y, x)) * n16)


@dataclass(frozen=True, eq=False)
class Environment:
    """One line ensemble covering landscape times ``[t_lo, t_hi]``."""

    params: ScalingParams
    t_lo: float
    t_hi: float
    ensemble: LineEnsemble

    @property
    def grid(self) -> Grid:
        return self.ensemble.grid

    @property
    def seed_record(self) -> dict:
        return self.ensemble.seed_record

    def line(self, time: float) -> int:
        if not self.t_lo - _ALIGN_TOL <= time <= self.t_hi + _ALIGN_TOL:
            raise LabError("TIME_OUT_OF_RANGE", f"{time} not in [{self.t_lo}, {self.t_hi}]")
        return self.params.line_map(time) - self.params.line_map(self.t_hi) + 1

    def index(self, x, time: float) -> np.ndarray:
        """Nearest ensemble indices of landscape points ``x`` at ``time``."""
        pos = self.params.space_map(np.atleast_1d(np.asarray(x, dtype=np.float64)), time)
        idx = np.rint((pos - self.grid.origin) / self.grid.step).astype(np.int64)
        if idx.min() < 0 or idx.max() >= self.grid.count:
            raise LabError("WINDOW_TOO_SMALL", f"points at time {time} fall outside the ensemble")
        return idx

    def coordinate(self, idx, time: float) -> np.ndarray:
        pos = self.grid.origin + np.asarray(idx, dtype=np.float64) * self.grid.step
        return self.params.inverse_space_map(pos, time)

    def landscape_step(self) -> float:
        return self.grid.step * self.params.n13 / 2.0

    def native_grid(self, time: float, lo: float, hi: float, stride: int = 1):
        """Landscape grid made of every ``stride``-th ensemble point in ``[lo, hi]``.

        Returns ``(Grid, indices)``.
        """
        g = self.grid
        a = math.ceil((self.params.space_map(lo, time) - g.origin) / g.step - _ALIGN_TOL)
        b = math.floor((self.params.space_map(hi, time) - g.origin) / g.step + _ALIGN_TOL)
        a, b = max(a, 0), min(b, g.count - 1)
        idx = np.arange(a, b + 1, stride, dtype=np.int64)
        if idx.size < 2:
            raise LabError("WINDOW_TOO_SMALL", f"window [{lo}, {hi}] holds < 2 points")
        origin = float(self.coordinate(idx[0], time))
        return make_grid(origin, stride * self.landscape_step(), idx.size), idx

    def snap(self, grid: Grid, time: float):
        """Map a landscape grid to ensemble indices.

        The grid is returned unchanged when it embeds exactly; otherwise
        the realized (snapped) grid is returned.  A non-uniform snap is
        rejected rather than silently aliased.
        """
        idx = self.index(grid.points, time)
        strides = np.diff(idx)
        if strides.size and (strides.min() < 1 or strides.min() != strides.max()):
            raise LabError("GRID_ALIASING", "grid does not embed with a uniform stride")
        exact = self.coordinate(idx, time)
        if np.allclose(exact, grid.points, rtol=0, atol=_ALIGN_TOL * max(1.0, grid.step)):
            return grid, idx
        stride = int(strides[0])
        return make_grid(float(exact[0]), stride * self.landscape_step(), grid.count), idx

    def raw_matrix(self, s: float, t: float, z_idx, x_idx) -> np.ndarray:
        """Raw LPP values between ``(z_idx, line(s))`` and ``(x_idx, line(t))``."""
        if not s < t:
            raise LabError("BAD_TIME_ORDER", f"s={s} must be < t={t}")
        m, e = self.line(s), self.line(t)
        z_idx = np.asarray(z_idx, dtype=np.int64)
        x_idx = np.asarray(x_idx, dtype=np.int64)
        if z_idx.size <= x_idx.size:
            rows = lpp.last_passage_profiles(self.ensemble, z_idx, m, e)
            return rows[:, x_idx]
        cols = np.empty((z_idx.size, x_idx.size))
        for j, x in enumerate(x_idx):
            cols[:, j] = lpp.last_passage_to(self.ensemble, lpp.LppEndpoint(int(x), e), m)[z_idx]
        return cols

    def slice(self, s: float, t: float, z_grid: Grid, x_grid: Grid) -> "LandscapeSlice":
        """Landscape slice on (possibly snapped) grids, sharing this environment."""
        zg, zi = self.snap(z_grid, s)
        xg, xi = self.snap(x_grid, t)
        raw = self.raw_matrix(s, t, zi, xi)
        vals = rescale_to_landscape(raw, self.params.n, zg.points[:, None], s,
                                    xg.points[None, :], t)
        return LandscapeSlice(s, t, zg, xg, vals, self.params, self.seed_record,
                              env=self, z_index=zi, x_index=xi)

    def value(self, z: float, s: float, x: float, t: float) -> float:
        """Single landscape estimate at the snapped endpoints."""
        zi = int(self.index(z, s)[0])
        xi = int(self.index(x, t)[0])
        raw = lpp.last_passage(self.ensemble, lpp.LppEndpoint(zi, self.line(s)),
                               lpp.LppEndpoint(xi, self.line(t))).value
        return float(rescale_to_landscape(raw, self.params.n, self.coordinate(zi, s), s,
                                          self.coordinate(xi, t), t))

    def evolve_values(self, h: np.ndarray, z_idx, s: float, t: float, x_idx):
        """Fast path for ``max_z h(z) + L(z, s; x, t)`` by one weighted sweep.

        Returns ``(h_t, origin)`` with ``origin`` the rightmost maximizing
        ensemble index (-1 where no finite value reaches ``x``).
        """
        p = self.params
        z_idx = np.asarray(z_idx, dtype=np.int64)
        x_idx = np.asarray(x_idx, dtype=np.int64)
        zc = self.coordinate(z_idx, s)
        w = np.full(self.grid.count, -np.inf)
        w[z_idx] = np.asarray(h, dtype=np.float64) / p.n16 + 2.0 * zc * p.n16
        v, origin = lpp.sweep_weights(self.ensemble, w, self.line(s), self.line(t),
                                      track_origin=True)
        xc = self.coordinate(x_idx, t)
        ht = p.n16 * (v[x_idx] - 2.0 * (t - s) * math.sqrt(p.n) - 2.0 * xc * p.n16)
        return ht, origin[x_idx]


def sample_environment(n: float, t_lo: float, t_hi: float, lpp_lo: float, lpp_hi: float,
                       key: RngKey, step: float, anchor: float | None = None,
                       interval: int = 0) -> Environment:
    """Sample lines for times ``[t_lo, t_hi]`` on an LPP window ``[lpp_lo, lpp_hi]``.

    ``anchor`` (an LPP position) is forced onto the grid.  Lines draw from
    ``key.derive(interval, j)``.
    """
    params = ScalingParams(float(n))
    if not t_lo < t_hi:
        raise LabError("BAD_TIME_ORDER", f"t_lo={t_lo} must be < t_hi={t_hi}")
    if not step > 0:
        raise LabError("NON_POSITIVE_STEP", f"step={step}")
    anchor = lpp_lo if anchor is None else anchor
    origin = anchor - math.ceil((anchor - lpp_lo) / step - _ALIGN_TOL) * step
    count = max(int(math.ceil((lpp_hi - origin) / step - _ALIGN_TOL)) + 1, 2)
    k = params.line_map(t_lo) - params.line_map(t_hi) + 1
    ens = sample_line_ensemble(make_grid(origin, step, count), k, key.derive(interval))
    return Environment(params, float(t_lo), float(t_hi), ens)


def aligned_step(n: float, z_grid: Grid, x_grid: Grid, grid_step: float | None) -> float:
    """Ensemble step no coarser than either embedded spacing and dividing the z spacing."""
    p = ScalingParams(float(n))
    ez = 2.0 * z_grid.step / p.n13
    ex = 2.0 * x_grid.step / p.n13
    d = min(grid_step if grid_step else p.default_grid_step(), ez, ex)
    return ez / math.ceil(ez / d - _ALIGN_TOL)


def environment_for(n: float, s: float, t: float, z_grid: Grid, x_grid: Grid, key: RngKey,
                    grid_step: float | None = None, interval: int = 0) -> Environment:
    p = ScalingParams(float(n))
    step = aligned_step(n, z_grid, x_grid, grid_step)
    lo = min(p.space_map(z_grid.origin, s), p.space_map(x_grid.origin, t))
    hi = max(p.space_map(z_grid.last, s), p.space_map(x_grid.last, t))
    return sample_environment(n, s, t, lo, hi, key, step,
                              anchor=p.space_map(z_grid.origin, s), interval=interval)


@dataclass(frozen=True, eq=False)
class LandscapeSlice:
    """Matrix ``values[i, j]`` estimating ``L(z_i, s; x_j, t)`` (``-inf`` if no path)."""

    s: float
    t: float
    z_grid: Grid
    x_grid: Grid
    values: np.ndarray
    params: ScalingParams
    seed_record: dict
    env: Environment | None = field(default=None, repr=False)
    z_index: np.ndarray | None = field(default=None, repr=False)
    x_index: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape != (self.z_grid.count, self.x_grid.count):
            raise LabError("LENGTH_MISMATCH", f"values {v.shape}")
        if np.isnan(v).any() or (v == np.inf).any():
            raise LabError("NON_FINITE_VALUE", "slice values must lie in [-inf, inf)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> float:
        return self.params.n

    def header(self) -> dict:
        g = lambda gr: {"origin": gr.origin, "step": gr.step, "count": gr.count}  # noqa: E731
        return {"n": self.n, "s": self.s, "t": self.t, "z_grid": g(self.z_grid),
                "x_grid": g(self.x_grid), "seed_record": self.seed_record}

    def to_csv(self) -> str:
        h = self.header()
        lines = [f"# n={h['n']!r}", f"# s={h['s']!r}", f"# t={h['t']!r}"]
        for name in ("z_grid", "x_grid"):
            gr = h[name]
            lines.append(f"# {name}={gr['origin']!r},{gr['step']!r},{gr['count']}")
        lines.append("z_index,x_index,value")
        for i in range(self.z_grid.count):
            for j in range(self.x_grid.count):
                v = self.values[i, j]
                lines.append(f"{i},{j},{'-inf' if v == -np.inf else repr(float(v))}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        d = self.header()
        d["values"] = [["-inf" if v == -np.inf else float(v) for v in row] for row in self.values]
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True, eq=False)
class AirySheetSample:
    slice: LandscapeSlice
    sheet: np.ndarray


def _parabola(slice_: LandscapeSlice) -> np.ndarray:
    return (slice_.z_grid.points[:, None] - slice_.x_grid.points[None, :]) ** 2


def airy_sheet(slice_: LandscapeSlice) -> AirySheetSample:
    """Parabolic shift ``A[z][x] = L[z][x] + (z - x)^2`` of a unit-time slice."""
    if slice_.s != 0.0 or slice_.t != 1.0:
        raise LabError("WRONG_TIMES", f"need (s, t) = (0, 1), got ({slice_.s}, {slice_.t})")
    sheet = slice_.values + _parabola(slice_)
    sheet.setflags(write=False)
    return AirySheetSample(slice_, sheet)


def remove_parabola(sample: AirySheetSample) -> np.ndarray:
    return sample.sheet - _parabola(sample.slice)


def sample_landscape_slice(n: float, s: float, t: float, z_grid: Grid, x_grid: Grid,
                           key: RngKey, grid_step: float | None = None) -> LandscapeSlice:
    """Sample one ensemble and fill ``L[z][x]`` for all grid pairs.

    The ensemble step is the smallest of ``grid_step`` (default
    ``1/(5n)``) and the embedded spacings of both grids, adjusted so the
    z-grid lands exactly on ensemble points.  The x-grid is snapped; the
    slice records the realized grid.
    """
    if not s < t:
        raise LabError("BAD_TIME_ORDER", f"s={s} must be < t={t}")
    env = environment_for(n, s, t, z_grid, x_grid, key, grid_step)
    return env.slice(s, t, z_grid, x_grid)


def maxplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Max-plus matrix product ``C[i, j] = max_m a[i, m] + b[m, j]``."""
    out = np.full((a.shape[0], b.shape[1]), -np.inf)
    for i in range(a.shape[0]):
        np.max(a[i][:, None] + b, axis=0, out=out[i])
    return out


def extended_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Max |a - b| treating equal ``-inf`` entries as agreeing."""
    fa, fb = np.isfinite(a), np.isfinite(b)
    if (fa != fb).any():
        return math.inf
    if not fa.any():
        return 0.0
    return float(np.max(np.abs(a[fa] - b[fa])))


def coupled_slices(n: float, r: float, s: float, t: float, z_grid: Grid, x_grid: Grid,
                   key: RngKey, grid_step: float | None = None,
                   middle_grid: Grid | None = None):
    """Slices ``(r,s)``, ``(s,t)``, ``(r,t)`` cut from one environment.

    By default the middle grid holds every ensemble point at time ``s``
    between the leftmost start and the rightmost end, which is what makes
    composition exact.
    """
    if not r < s < t:
        raise LabError("BAD_TIME_ORDER", f"need r < s < t, got {r}, {s}, {t}")
    if not is_line_aligned(s, n):
        raise LabError("MISALIGNED_SPLIT", f"s*n = {s * n} is not an integer")
    p = ScalingParams(float(n))
    step = aligned_step(n, z_grid, x_grid, grid_step)
    lo = min(p.space_map(z_grid.origin, r), p.space_map(x_grid.origin, t))
    hi = max(p.space_map(z_grid.last, r), p.space_map(x_grid.last, t))
    env = sample_environment(n, r, t, lo, hi, key, step, anchor=p.space_map(z_grid.origin, r))
    if middle_grid is None:
        middle_grid, _ = env.native_grid(s, p.inverse_space_map(p.space_map(z_grid.origin, r), s),
                                         p.inverse_space_map(p.space_map(x_grid.last, t), s))
    return (env.slice(r, s, z_grid, middle_grid), env.slice(s, t, middle_grid, x_grid),
            env.slice(r, t, z_grid, x_grid))


def composition_across_times(n: float, r: float, s: float, t: float, z_grid: Grid,
                             x_grid: Grid, key: RngKey, grid_step: float | None = None,
                             middle_grid: Grid | None = None) -> float:
    """Max over grid pairs of ``|L(x,r;y,t) - max_z [L(x,r;z,s) + L(z,s;y,t)]|``.

    With a one-point ``middle_grid`` the composed value is a single
    split, so the result is the (nonnegative) deficit of that split.
    """
    rs, st, rt = coupled_slices(n, r, s, t, z_grid, x_grid, key, grid_step, middle_grid)
    return extended_gap(rt.values, maxplus(rs.values, st.values))


def disjoint_time_slices(n: float, intervals: Sequence[tuple[float, float]], grids,
                         key: RngKey, grid_step: float | None = None) -> list[LandscapeSlice]:
    """Independent slices for disjoint time intervals.

    ``grids`` is either one ``(z_grid, x_grid)`` pair used for every
    interval or a list of pairs.  Interval ``i`` draws its lines from
    ``key.derive(i, line)``; intervals may touch but not overlap.
    """
    ivs = [(float(a), float(b)) for a, b in intervals]
    for a, b in ivs:
        if not a < b:
            raise LabError("BAD_TIME_ORDER", f"interval ({a}, {b})")
    order = sorted(range(len(ivs)), key=lambda i: ivs[i])
    for i, j in zip(order, order[1:]):
        if ivs[j][0] < ivs[i][1]:
            raise LabError("OVERLAPPING_INTERVALS", f"{ivs[i]} and {ivs[j]}")
    if isinstance(grids, tuple) and len(grids) == 2 and isinstance(grids[0], Grid):
        grids = [grids] * len(ivs)
    if len(grids) != len(ivs):
        raise LabError("LENGTH_MISMATCH", "one grid pair per interval")
    out = []
    for i, ((a, b), (zg, xg)) in enumerate(zip(ivs, grids)):
        env = environment_for(n, a, b, zg, xg, key, grid_step, interval=i)
        out.append(env.slice(a, b, zg, xg))
    return out


def scale_composition_pair(n: float, s: float, t: float, key: RngKey, halfwidth: float = 4.0,
                           dz: float = 0.05, grid_step: float | None = None):
    """One sample each of ``L_r(0, 0)`` and ``max_z L_s(0, z) + L'_t(z, 0)``, ``r^3 = s^3 + t^3``.

    The scale-``s`` sheet is the landscape over a time span ``s^3``.  The
    two composed pieces are independent slices over disjoint times and the
    direct value uses its own key, so the pair is independent and only the
    laws should agree.
    """
    r3 = s ** 3 + t ** 3
    g0 = make_grid(0.0, dz, 2)
    mid = window_grid(-halfwidth, halfwidth, dz)
    direct = sample_landscape_slice(n, 0.0, r3, g0, g0, key.derive(0), grid_step).values[0, 0]
    first, second = disjoint_time_slices(n, [(0.0, s ** 3), (s ** 3, r3)],
                                         [(g0, mid), (mid, g0)], key.derive(1), grid_step)
    composed = np.max(first.values[0, :] + second.values[:, 0])
    return float(direct), float(composed)
