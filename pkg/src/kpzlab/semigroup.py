"""Variational evolution ``h_t(x) = max_z h(z) + L(z, s; x, t)`` and its geometry.

Profiles are evolved through a :class:`~kpzlab.landscape.LandscapeSlice`
by an exact column scan, keeping the rightmost maximizer ``Z_t(x)``.
Because all slices of one environment come from a single line ensemble,
several initial conditions evolved through the same slice are coupled,
and the comparison statements below are checked sample by sample.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import LabError
from .grid import Grid, GridFunction, RngKey, sample_two_sided_bm, with_drift
from .landscape import Environment, LandscapeSlice, extended_gap, is_line_aligned

TOL = 1e-9


class Kind(enum.Enum):
    NARROW_WEDGE = "narrow_wedge"
    FLAT = "flat"
    BROWNIAN = "brownian"
    POWER = "power"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class InitialCondition:
    kind: Kind
    params: dict
    realized: GridFunction

    @property
    def grid(self) -> Grid:
        return self.realized.grid

    @property
    def values(self) -> np.ndarray:
        return self.realized.values


def make_initial(kind, z_grid: Grid, *, x0: float = 0.0, drift: float = 0.0,
                 diffusion: float = 2.0, key: RngKey | None = None,
                 zeta: float | None = None, values=None) -> InitialCondition:
    """Realize an initial profile on ``z_grid``.

    Parameters
    ----------
    kind : Kind or str
        ``narrow_wedge`` (apex ``x0``), ``flat``, ``brownian`` (``drift``,
        ``diffusion``, ``key``), ``power`` (``zeta``) or ``custom``
        (``values``: a GridFunction or array on ``z_grid``).

    Notes
    -----
    ``power`` is ``|x|**zeta`` on both half-lines with ``0**0 = 1``.
    """
    kind = Kind(kind) if not isinstance(kind, Kind) else kind
    pts = z_grid.points
    if kind is Kind.NARROW_WEDGE:
        half = 0.5 * z_grid.step * (1 + 1e-9)
        if not z_grid.origin - half <= x0 <= z_grid.last + half:
            raise LabError("APEX_OFF_GRID", f"apex {x0} outside [{z_grid.origin}, {z_grid.last}]")
        v = np.full(z_grid.count, -np.inf)
        v[z_grid.nearest_index(x0)] = 0.0
        params = {"x0": float(x0)}
    elif kind is Kind.FLAT:
        v, params = np.zeros(z_grid.count), {}
    elif kind is Kind.POWER:
        if zeta is None or not 0.0 <= zeta <= 1.0:
            raise LabError("BAD_EXPONENT", f"zeta={zeta!r} must lie in [0, 1]")
        v = np.abs(pts) ** zeta if zeta > 0 else np.ones(z_grid.count)
        params = {"zeta": float(zeta)}
    elif kind is Kind.BROWNIAN:
        if key is None:
            raise LabError("MISSING_KEY", "brownian initial data needs an RngKey")
        return InitialCondition(kind, {"drift": float(drift), "diffusion": float(diffusion),
                                       "key": key.record()},
                                sample_two_sided_bm(z_grid, diffusion, drift, key))
    else:
        if values is None:
            raise LabError("MISSING_VALUES", "custom initial data needs values")
        f = values if isinstance(values, GridFunction) else GridFunction(z_grid, values)
        if f.grid != z_grid:
            raise LabError("GRID_MISMATCH", "custom values live on another grid")
        return InitialCondition(kind, {}, f)
    return InitialCondition(kind, params, GridFunction(z_grid, v))


def _as_function(h) -> GridFunction:
    return h.realized if isinstance(h, InitialCondition) else h


@dataclass(frozen=True, eq=False)
class EvolvedProfile:
    """``h_t`` on the x-grid with rightmost argmax indices into the z-grid.

    ``argmax[j] == -1`` marks an x with no finite candidate (only allowed
    for intermediate steps, see :func:`evolve`).
    """

    h_t: GridFunction
    argmax: np.ndarray
    z_grid: Grid
    initial: GridFunction = field(repr=False)
    slice: LandscapeSlice | None = field(default=None, repr=False)

    @property
    def values(self) -> np.ndarray:
        return self.h_t.values

    @property
    def argmax_points(self) -> np.ndarray:
        out = np.full(self.argmax.shape, np.nan)
        ok = self.argmax >= 0
        out[ok] = self.z_grid.origin + self.argmax[ok] * self.z_grid.step
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,h_t,Z_t\n")
        for x, v, z in zip(self.h_t.grid.points, self.values, self.argmax_points):
            hv = "-inf" if v == -np.inf else repr(float(v))
            zv = "" if math.isnan(z) else repr(float(z))
            buf.write(f"{float(x)!r},{hv},{zv}\n")
        return buf.getvalue()


def column_max(h: np.ndarray, L: np.ndarray):
    """Column max of ``h[:, None] + L`` and its rightmost argmax (-1 if all ``-inf``)."""
    M = h[:, None] + L
    nz = M.shape[0]
    arg = nz - 1 - np.argmax(M[::-1], axis=0)
    best = M[arg, np.arange(M.shape[1])]
    arg = np.where(np.isfinite(best), arg, -1)
    return best, arg


def evolve(h, slice_: LandscapeSlice, allow_minus_infinity: bool = False) -> EvolvedProfile:
    """Evolve ``h`` (InitialCondition or GridFunction on ``slice_.z_grid``) through a slice."""
    f = _as_function(h)
    if f.grid != slice_.z_grid:
        raise LabError("GRID_MISMATCH", f"{f.grid} vs slice z-grid {slice_.z_grid}")
    best, arg = column_max(f.values, slice_.values)
    if (arg < 0).any() and not allow_minus_infinity:
        raise LabError("ALL_MINUS_INFINITY_COLUMN",
                       f"{int((arg < 0).sum())} x-points have no finite candidate")
    return EvolvedProfile(GridFunction(slice_.x_grid, best), arg, slice_.z_grid, f, slice_)


def evolve_on(h, env: Environment, s: float, t: float, x_grid: Grid) -> EvolvedProfile:
    """Evolve by a single weighted sweep over the environment.

    Equivalent to ``evolve(h, env.slice(s, t, h.grid, x_grid))`` up to
    float rounding, but costs one sweep instead of one per z-point.
    ``h`` must live on a grid that embeds exactly into ``env`` at time ``s``.
    """
    f = _as_function(h)
    zg, zi = env.snap(f.grid, s)
    if zg is not f.grid:
        raise LabError("GRID_MISMATCH", "initial grid must embed exactly into the environment")
    xg, xi = env.snap(x_grid, t)
    fin = f.finite_mask
    ht, origin = env.evolve_values(f.values[fin], zi[fin], s, t, xi)
    if (origin < 0).any():
        raise LabError("ALL_MINUS_INFINITY_COLUMN", "some x-points have no finite candidate")
    arg = np.searchsorted(zi, origin)
    return EvolvedProfile(GridFunction(xg, ht), arg.astype(np.int64), zg, f, None)


def _same_env(*slices: LandscapeSlice) -> None:
    env = slices[0].env
    if env is None or any(s.env is not env for s in slices):
        raise LabError("CONTRACT_VIOLATION", "slices must be cut from one environment")


def semigroup_gap(h, slice_rs: LandscapeSlice, slice_st: LandscapeSlice,
                  slice_rt: LandscapeSlice) -> float:
    """``max_x |evolve(evolve(h, rs), st) - evolve(h, rt)|`` on coupled slices."""
    _same_env(slice_rs, slice_st, slice_rt)
    if not (slice_rs.s == slice_rt.s and slice_rs.t == slice_st.s and slice_st.t == slice_rt.t):
        raise LabError("BAD_TIME_ORDER", "slices must cover (r,s), (s,t), (r,t)")
    if not (slice_rs.x_grid == slice_st.z_grid and slice_rs.z_grid == slice_rt.z_grid
            and slice_st.x_grid == slice_rt.x_grid):
        raise LabError("GRID_MISMATCH", "slice grids do not chain")
    if not is_line_aligned(slice_rs.t, slice_rs.n):
        raise LabError("MISALIGNED_SPLIT", f"s*n = {slice_rs.t * slice_rs.n}")
    mid = evolve(h, slice_rs, allow_minus_infinity=True)
    two = evolve(mid.h_t, slice_st, allow_minus_infinity=True)
    one = evolve(h, slice_rt, allow_minus_infinity=True)
    return extended_gap(two.values, one.values)


@dataclass(frozen=True)
class ComparisonVerdict:
    hypothesis_held: bool
    inequality_held: bool

    @property
    def violation(self) -> bool:
        return self.hypothesis_held and not self.inequality_held


def _profile(h, slice_):
    return h if isinstance(h, EvolvedProfile) else evolve(h, slice_)


def argmax_comparison_check(h, h_tilde, slice_: LandscapeSlice, x: int, y: int,
                            tol: float = TOL) -> ComparisonVerdict:
    """If ``Z_t(y; h) <= Z_t(x; h~)`` then the h-increment over [x, y] is at most the h~ one.

    ``x < y`` are x-grid indices.  ``h`` and ``h_tilde`` may be initial
    data or already evolved profiles on this slice.
    """
    if not x < y:
        raise LabError("BAD_ORDER", f"need x < y, got {x}, {y}")
    a, b = _profile(h, slice_), _profile(h_tilde, slice_)
    if a.z_grid != b.z_grid or a.h_t.grid != b.h_t.grid:
        raise LabError("GRID_MISMATCH", "profiles live on different grids")
    hyp = bool(a.argmax[y] <= b.argmax[x])
    lhs = a.values[y] - a.values[x]
    rhs = b.values[y] - b.values[x]
    return ComparisonVerdict(hyp, bool(lhs <= rhs + tol))


def argmax_comparison_counts(a: EvolvedProfile, b: EvolvedProfile, tol: float = TOL):
    """Over all index pairs ``x < y``: (#pairs where the hypothesis holds, #violations)."""
    za, zb = a.argmax, b.argmax
    d = b.values - a.values
    hyp = za[None, :] <= zb[:, None]          # [x, y]: Z(y; h) <= Z(x; h~)
    ok = d[None, :] >= d[:, None] - tol        # D(y) >= D(x)
    upper = np.triu(np.ones_like(hyp), k=1)
    hyp &= upper
    return int(hyp.sum()), int((hyp & ~ok).sum())


@dataclass(frozen=True)
class AttractivenessVerdict:
    pairs: int
    max_violation: float

    @property
    def held(self) -> bool:
        return self.max_violation <= TOL


def increments_ordered(f: np.ndarray, g: np.ndarray, tol: float = TOL) -> bool:
    """``f(y) - f(x) <= g(y) - g(x)`` for all ``x < y``, in ``[-inf, inf)`` arithmetic.

    Written as ``f(y) + g(x) <= g(y) + f(x)`` so ``-inf`` never meets ``-inf`` in a difference.
    """
    if np.isfinite(f).all() and np.isfinite(g).all():
        return _monotone_violation(g - f) <= tol
    lhs = f[None, :] + g[:, None]
    rhs = g[None, :] + f[:, None]
    upper = np.triu(np.ones(lhs.shape, dtype=bool), k=1)
    with np.errstate(invalid="ignore"):
        bad = upper & ~(lhs <= rhs + tol)
    return not bad.any()


def _monotone_violation(d: np.ndarray) -> float:
    """Largest drop ``max_{x<y} d(x) - d(y)`` (<= 0 means nondecreasing)."""
    if d.size < 2:
        return 0.0
    run = np.maximum.accumulate(d)[:-1]
    return float(np.max(run - d[1:]))


def attractiveness_check(h, h_tilde, slice_: LandscapeSlice, tol: float = TOL
                         ) -> AttractivenessVerdict:
    """Ordered initial increments stay ordered after evolution.

    Raises ``HYPOTHESIS_FAILED`` unless ``h(y)-h(x) <= h~(y)-h~(x)`` for all ``x < y``.
    """
    f, g = _as_function(h), _as_function(h_tilde)
    if f.grid != g.grid or f.grid != slice_.z_grid:
        raise LabError("GRID_MISMATCH", "initial data must share the slice z-grid")
    if not increments_ordered(f.values, g.values, tol):
        raise LabError("HYPOTHESIS_FAILED", "initial increments are not ordered")
    a, b = evolve(f, slice_), evolve(g, slice_)
    n = a.values.size
    return AttractivenessVerdict(n * (n - 1) // 2,
                                 max(_monotone_violation(b.values - a.values), 0.0))


@dataclass(frozen=True)
class SandwichResult:
    event_held: bool
    I_t: float
    sandwich_held: bool
    max_violation: float


def _index_on(grid: Grid, x: float) -> int:
    if not grid.contains(x):
        raise LabError("WINDOW_TOO_SMALL", f"{x} is not on the x-grid [{grid.origin}, {grid.last}]")
    return grid.nearest_index(x)


def sandwich_profiles(ph: EvolvedProfile, pp: EvolvedProfile, pm: EvolvedProfile,
                      a: float, tol: float = TOL) -> SandwichResult:
    """Sandwich event from evolved ``h``, ``b^{+mu}`` and ``b^{-mu}`` profiles."""
    g = ph.h_t.grid
    ia, ima, i0 = _index_on(g, a), _index_on(g, -a), _index_on(g, 0.0)
    # coordinates, not indices: h and b may live on different z-grids
    za, zp, zm = ph.argmax_points, pp.argmax_points, pm.argmax_points
    event = bool(za[ia] <= zp[ima] and za[ima] >= zm[ia])
    d = lambda p, i: p.values[i] - p.values[i0]  # noqa: E731
    I_t = d(pp, ia) - d(pm, ia) + d(pm, ima) - d(pp, ima)
    worst = 0.0
    if event:
        sl = slice(min(ia, ima), max(ia, ima) + 1)
        hv, up, lo = ph.values[sl], pp.values[sl], pm.values[sl]
        worst = max(_monotone_violation(up - hv), _monotone_violation(hv - lo), 0.0)
    return SandwichResult(event, float(I_t), worst <= tol, float(worst))


def sandwich_event(h, b: GridFunction, mu: float, a: float,
                   slice_: LandscapeSlice) -> SandwichResult:
    """Evaluate the event ``E_t(mu)`` and the increment gap ``I_t`` on one slice.

    ``b^{+mu}`` and ``b^{-mu}`` are both derived from the single path ``b``.
    On the event, the increments of ``h_t`` over ``[-a, a]`` must lie
    between those of the two drifted evolutions; ``sandwich_held`` records it.
    """
    if b.grid != slice_.z_grid:
        raise LabError("GRID_MISMATCH", "b must live on the slice z-grid")
    for x in (a, -a, 0.0):
        _index_on(slice_.x_grid, x)
    ph = evolve(h, slice_)
    pp = evolve(with_drift(b, mu), slice_)
    pm = evolve(with_drift(b, -mu), slice_)
    return sandwich_profiles(ph, pp, pm, a)


@dataclass(frozen=True)
class TailEstimate:
    thresholds: tuple[float, ...]
    frequencies: tuple[float, ...]
    replications: int
    z_samples: np.ndarray = field(repr=False)


def tail_frequencies(z_samples, t: float, thresholds: Sequence[float]) -> TailEstimate:
    z = np.asarray(z_samples, dtype=np.float64)
    scale = t ** (2.0 / 3.0)
    freqs = tuple(float(np.mean(np.abs(z) > r * scale)) for r in thresholds)
    return TailEstimate(tuple(float(r) for r in thresholds), freqs, int(z.size), z)


def argmax_tail(h, slices: Sequence[LandscapeSlice], x: float,
                thresholds: Sequence[float]) -> TailEstimate:
    """Fraction of replications with ``|Z_t(x; h)| > r t^{2/3}`` per threshold ``r``.

    ``h`` is one initial condition used for every slice, or a sequence
    aligned with ``slices`` (random initial data).
    """
    hs = h if isinstance(h, (list, tuple)) else [h] * len(slices)
    zs = []
    for hi, sl in zip(hs, slices):
        p = evolve(hi, sl)
        j = _index_on(sl.x_grid, x)
        zs.append(p.argmax_points[j])
    t = slices[0].t - slices[0].s
    return tail_frequencies(zs, t, thresholds)
