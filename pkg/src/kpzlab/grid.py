"""Uniform grids, extended-real grid functions and keyed random sampling.

Everything here is immutable.  Randomness is counter based: an
:class:`RngKey` is turned into a Philox generator through a
``SeedSequence`` whose spawn key is the key path, so a draw depends only
on the key and never on call order or thread scheduling.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import LabError

MINUS_INF = -np.inf
_U64 = 1 << 64


@dataclass(frozen=True)
class Grid:
    """Uniform lattice ``origin + i * step`` for ``0 <= i < count``."""

    origin: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not (self.step > 0) or not math.isfinite(self.step):
            raise LabError("NON_POSITIVE_STEP", f"step={self.step!r}")
        if self.count < 2:
            raise LabError("COUNT_TOO_SMALL", f"count={self.count!r}")
        if not math.isfinite(self.origin):
            raise LabError("NON_FINITE_ORIGIN", f"origin={self.origin!r}")

    def point(self, i: int) -> float:
        if not 0 <= i < self.count:
            raise LabError("INDEX_OUT_OF_RANGE", f"i={i}, count={self.count}")
        return self.origin + i * self.step

    @property
    def points(self) -> np.ndarray:
        return self.origin + np.arange(self.count) * self.step

    @property
    def last(self) -> float:
        return self.origin + (self.count - 1) * self.step

    def nearest_index(self, x: float) -> int:
        """Index of the grid point closest to ``x`` (clipped to the grid)."""
        i = int(round((x - self.origin) / self.step))
        return min(max(i, 0), self.count - 1)

    def contains(self, x: float, tol: float | None = None) -> bool:
        """True if ``x`` lies within ``tol`` (default step/2) of a grid point."""
        tol = 0.5 * self.step if tol is None else tol
        return abs(self.point(self.nearest_index(x)) - x) <= tol * (1 + 1e-12)


def make_grid(origin: float, step: float, count: int) -> Grid:
    return Grid(float(origin), float(step), int(count))


def window_grid(lo: float, hi: float, step: float) -> Grid:
    """Grid of spacing ``step`` starting at ``lo`` and reaching at least ``hi``."""
    count = int(math.ceil((hi - lo) / step - 1e-9)) + 1
    return make_grid(lo, step, max(count, 2))


class Tag(enum.Enum):
    FINITE = "finite"
    MINUS_INFINITY = "-inf"


@dataclass(frozen=True, order=False)
class ExtendedValue:
    """A point of ``[-inf, inf)``; MINUS_INFINITY sorts below every finite value."""

    tag: Tag
    value: float = 0.0

    @classmethod
    def of(cls, x: float) -> "ExtendedValue":
        if x == MINUS_INF:
            return cls(Tag.MINUS_INFINITY, 0.0)
        if not math.isfinite(x):
            raise LabError("NON_FINITE_VALUE", repr(x))
        return cls(Tag.FINITE, float(x))

    @property
    def is_finite(self) -> bool:
        return self.tag is Tag.FINITE

    def as_float(self) -> float:
        return self.value if self.is_finite else MINUS_INF

    def __lt__(self, other: "ExtendedValue") -> bool:
        return self.as_float() < other.as_float()

    def __le__(self, other: "ExtendedValue") -> bool:
        return self.as_float() <= other.as_float()

    def __gt__(self, other: "ExtendedValue") -> bool:
        return self.as_float() > other.as_float()

    def __ge__(self, other: "ExtendedValue") -> bool:
        return self.as_float() >= other.as_float()


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Extended-real function on a grid.

    Values are stored as float64 with ``-inf`` encoding the MINUS_INFINITY
    tag; IEEE arithmetic then gives the absorbing and ordering rules of
    ``[-inf, inf)`` for free.  ``+inf`` and NaN are rejected.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = _frozen(self.values)
        if v.ndim != 1 or v.shape[0] != self.grid.count:
            raise LabError("LENGTH_MISMATCH", f"{v.shape} vs count {self.grid.count}")
        if np.isnan(v).any() or (v == np.inf).any():
            raise LabError("NON_FINITE_VALUE", "values must lie in [-inf, inf)")
        if not np.isfinite(v).any():
            raise LabError("NO_FINITE_VALUE", "a grid function needs one finite value")
        object.__setattr__(self, "values", v)

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def all_finite(self) -> bool:
        return bool(self.finite_mask.all())

    def eval(self, i: int) -> ExtendedValue:
        if not 0 <= i < self.grid.count:
            raise LabError("INDEX_OUT_OF_RANGE", f"i={i}, count={self.grid.count}")
        return ExtendedValue.of(float(self.values[i]))

    def shift_values(self, c: float) -> "GridFunction":
        # -inf + c stays -inf
        return GridFunction(self.grid, self.values + float(c))

    def same_as(self, other: "GridFunction") -> bool:
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(self.grid.points, self.values):
            w.writerow([repr(float(x)), "-inf" if v == MINUS_INF else repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["x", "value"]:
            raise LabError("BAD_CSV", "expected header x,value")
        xs = np.array([float(r[0]) for r in rows[1:]])
        vals = np.array([MINUS_INF if r[1] == "-inf" else float(r[1]) for r in rows[1:]])
        if xs.size < 2:
            raise LabError("COUNT_TOO_SMALL", "need two rows")
        step = (xs[-1] - xs[0]) / (xs.size - 1)
        return cls(make_grid(xs[0], step, xs.size), vals)


def shift_values(f: GridFunction, c: float) -> GridFunction:
    return f.shift_values(c)


@dataclass(frozen=True)
class RngKey:
    """Counter-based key ``(master_seed, stream_id, substream_id, *path)``.

    ``stream_id`` is the replication index, ``substream_id`` the purpose.
    ``derive`` appends further integers (line index, interval index, ...).
    """

    master_seed: int
    stream_id: int = 0
    substream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not 0 <= int(self.master_seed) < _U64:
            raise LabError("BAD_SEED", "master_seed must be an unsigned 64-bit integer")
        for p in (self.stream_id, self.substream_id, *self.path):
            if int(p) < 0:
                raise LabError("BAD_SEED", "key components must be non-negative")

    def derive(self, *more: int) -> "RngKey":
        return RngKey(self.master_seed, self.stream_id, self.substream_id,
                      self.path + tuple(int(m) for m in more))

    def with_substream(self, substream_id: int) -> "RngKey":
        return RngKey(self.master_seed, self.stream_id, int(substream_id), ())

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            int(self.master_seed),
            spawn_key=(int(self.stream_id), int(self.substream_id), *self.path),
        )
        return np.random.Generator(np.random.Philox(key=ss.generate_state(2, np.uint64)))

    def record(self) -> dict:
        return {
            "master_seed": int(self.master_seed),
            "stream_id": int(self.stream_id),
            "substream_id": int(self.substream_id),
            "path": list(self.path),
        }


@dataclass(frozen=True, eq=False)
class LineEnsemble:
    """``k`` discretized standard Brownian lines; row 0 is line 1 (the top line)."""

    grid: Grid
    lines: np.ndarray
    seed_record: dict

    def __post_init__(self) -> None:
        a = np.array(self.lines, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[1] != self.grid.count or a.shape[0] < 1:
            raise LabError("LENGTH_MISMATCH", f"lines shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "lines", a)

    @property
    def k(self) -> int:
        return self.lines.shape[0]

    def line(self, j: int) -> np.ndarray:
        if not 1 <= j <= self.k:
            raise LabError("LINE_OUT_OF_RANGE", f"line {j} not in 1..{self.k}")
        return self.lines[j - 1]


def sample_line_ensemble(grid: Grid, k: int, key: RngKey) -> LineEnsemble:
    """Sample ``k`` independent Brownian lines pinned to 0 at ``grid.point(0)``.

    Line ``j`` (1-based) draws its increments from ``key.derive(j - 1)``.
    """
    if k < 1:
        raise LabError("BAD_K", f"k={k}")
    sd = math.sqrt(grid.step)
    lines = np.empty((k, grid.count), dtype=np.float64)
    lines[:, 0] = 0.0
    for j in range(k):
        row = lines[j, 1:]
        key.derive(j).generator().standard_normal(out=row)
        row *= sd
    np.cumsum(lines, axis=1, out=lines)
    return LineEnsemble(grid, lines, {"kind": "line_ensemble", "k": k, **key.record()})


def ensemble_from_array(grid: Grid, lines: Iterable) -> LineEnsemble:
    """Wrap explicit line values (tests and fixtures)."""
    return LineEnsemble(grid, np.asarray(lines, dtype=np.float64), {"kind": "explicit"})


def origin_index(grid: Grid) -> int:
    """Index of the grid point nearest 0; errors if 0 is not within step/2."""
    i = int(round(-grid.origin / grid.step))
    if not 0 <= i < grid.count or abs(grid.origin + i * grid.step) > 0.5 * grid.step * (1 + 1e-9):
        raise LabError("ORIGIN_NOT_ON_GRID", f"grid [{grid.origin}, {grid.last}] misses 0")
    return i


def sample_two_sided_bm(grid: Grid, diffusion: float, drift: float, key: RngKey) -> GridFunction:
    """Two-sided Brownian motion with given diffusion and drift, pinned at 0.

    The walks right and left of the pin use ``key.derive(0)`` and
    ``key.derive(1)``.  The drift term is ``drift * (x - x_pin)`` so the
    pin value is exactly 0 even when the pin is not exactly at 0.
    """
    if not diffusion >= 0:
        raise LabError("BAD_DIFFUSION", f"diffusion={diffusion!r}")
    pin = origin_index(grid)
    n = grid.count
    vals = np.zeros(n)
    sd = math.sqrt(diffusion * grid.step)
    if n - pin - 1 > 0:
        right = key.derive(0).generator().standard_normal(n - pin - 1) * sd
        vals[pin + 1:] = np.cumsum(right)
    if pin > 0:
        left = key.derive(1).generator().standard_normal(pin) * sd
        vals[:pin] = np.cumsum(left)[::-1]
    pts = grid.points
    if drift != 0.0:
        vals = vals + drift * (pts - pts[pin])
    vals[pin] = 0.0
    return GridFunction(grid, vals)


def with_drift(f: GridFunction, mu: float) -> GridFunction:
    """``f(x) + mu * x``: drifted copies that share one underlying path."""
    return GridFunction(f.grid, f.values + mu * f.grid.points)


def load_grid_function(path: str | Path) -> GridFunction:
    return GridFunction.from_csv(Path(path).read_text(encoding="utf-8"))
