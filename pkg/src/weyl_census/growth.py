"""Counting functions and growth estimators over a :class:`CensusTable`.

Counts past a table's horizon are flagged incomplete: words longer than the
census bound could contribute there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .census import CensusTable
from .errors import DegenerateWindow, RankOne, WindowBeyondHorizon
from .symspace import Flag, chamber_angle, flag_distance


class Count(int):
    """An integer count that remembers whether it lies inside the horizon."""

    complete: bool

    def __new__(cls, value: int, complete: bool = True):
        obj = super().__new__(cls, int(value))
        obj.complete = bool(complete)
        return obj

    def __repr__(self):
        return f"Count({int(self)}, complete={self.complete})"


def count_orbit(table: CensusTable, R: float) -> Count:
    """N(R): number of group elements with d(o, g.o) < R."""
    n = int(np.count_nonzero(table.distance < R))
    return Count(n, complete=R <= table.horizon_R)


def orbit_counts(table: CensusTable, grid) -> np.ndarray:
    """Vectorised N(R) over a grid of radii."""
    d = np.sort(table.distance)
    return np.searchsorted(d, np.asarray(grid, dtype=float), side="left")


def primitive_class_lengths(table: CensusTable) -> np.ndarray:
    """Translation length of every primitive class, sorted."""
    keep = table.class_power == 1
    return np.sort(table.class_length[keep])


def count_primitive_classes(table: CensusTable, t: float) -> Count:
    """P(t): number of primitive classes (up to inversion) with length < t."""
    n = int(np.count_nonzero(primitive_class_lengths(table) < t))
    return Count(n, complete=t <= table.horizon_t)


def class_counts(table: CensusTable, grid) -> np.ndarray:
    lengths = primitive_class_lengths(table)
    return np.searchsorted(lengths, np.asarray(grid, dtype=float), side="left")


@dataclass(frozen=True, eq=False)
class FlagBall:
    center: Flag
    radius: float

    def contains(self, frames) -> np.ndarray:
        return np.asarray(flag_distance(frames, self.center)) <= self.radius


@dataclass
class DirectionalCount:
    count: int
    excluded: int
    complete: bool


def count_directional(table: CensusTable, R: float, A: FlagBall, B: FlagBall) -> DirectionalCount:
    """N(R; A, B): elements with d(o, g.o) < R whose direction flag lies in A
    and whose inverse's direction flag lies in B.

    Records without a defined flag (non-regular Cartan vector) are left out
    and their number is reported as ``excluded``.
    """
    if table.flags is None:
        raise ValueError("census was built without flags")
    inside = table.distance < R
    defined = inside & table.flag_defined
    idx = np.nonzero(defined)[0]
    hit = A.contains(table.flags[idx]) & B.contains(table.inv_flags[idx])
    return DirectionalCount(
        count=int(np.count_nonzero(hit)),
        excluded=int(np.count_nonzero(inside & ~table.flag_defined)),
        complete=R <= table.horizon_R,
    )


def directional_counts(table: CensusTable, grid, A: FlagBall, B: FlagBall) -> np.ndarray:
    """Vectorised N(R; A, B) over a grid of radii."""
    ok = table.flag_defined & A.contains(table.flags) & B.contains(table.inv_flags)
    d = np.sort(table.distance[ok])
    return np.searchsorted(d, np.asarray(grid, dtype=float), side="left")


@dataclass
class DeltaEstimate:
    delta: float
    stderr: float
    window: tuple
    grid: np.ndarray
    counts: np.ndarray
    residuals: np.ndarray

    def to_dict(self) -> dict:
        return {"delta_hat": self.delta, "stderr": self.stderr,
                "window": list(self.window),
                "residual_rms": float(np.sqrt(np.mean(self.residuals ** 2)))}


def _fit_log_counts(grid, counts):
    res = stats.linregress(grid, np.log(counts))
    resid = np.log(counts) - (res.intercept + res.slope * grid)
    return res.slope, res.stderr, resid


def estimate_delta(table: CensusTable, window=None, bins: int = 20) -> DeltaEstimate:
    """Critical exponent estimate: least-squares slope of log N(R) against R.

    The default window is ``[0.5 H, H]`` with ``H`` the distance horizon.
    """
    H = table.horizon_R
    if window is None:
        window = (0.5 * H, H)
    r1, r2 = map(float, window)
    if r2 > H * (1 + 1e-12):
        raise WindowBeyondHorizon(f"window end {r2:.6g} exceeds the horizon {H:.6g}")
    if not r2 > r1 or bins < 5:
        raise DegenerateWindow("need R1 < R2 and at least 5 grid points")
    grid = np.linspace(r1, r2, bins)
    counts = orbit_counts(table, grid)
    if np.count_nonzero(np.diff(counts)) < 4 or np.any(counts == 0):
        raise DegenerateWindow("too few distinct counts in the window")
    slope, stderr, resid = _fit_log_counts(grid, counts)
    return DeltaEstimate(float(slope), float(stderr), (r1, r2), grid, counts, resid)


@dataclass
class ConeReport:
    alpha_hat: float
    min_wall_gap: float
    count: int
    min_gap_by_length: dict
    directions: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"alpha_hat": self.alpha_hat, "min_wall_gap": self.min_wall_gap,
                "samples": self.count,
                "min_gap_by_length": {str(k): v for k, v in self.min_gap_by_length.items()}}


def _max_pairwise_angle(dirs: np.ndarray) -> float:
    # the maximum angle is attained between extreme points of the sample
    # set; in rank 2 these are the two ends of an arc
    if len(dirs) < 2:
        return 0.0
    if dirs.shape[1] == 3:
        # coordinates in an orthonormal basis of the zero-sum plane
        e1 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2)
        e2 = np.array([1.0, 1.0, -2.0]) / np.sqrt(6)
        theta = np.arctan2(dirs @ e2, dirs @ e1)
        i, j = int(np.argmin(theta)), int(np.argmax(theta))
        return chamber_angle(dirs[i], dirs[j])
    from scipy.spatial import ConvexHull
    try:
        hull = ConvexHull(np.vstack([dirs, np.zeros(dirs.shape[1])]))
        pts = dirs[hull.vertices[hull.vertices < len(dirs)]]
    except Exception:
        pts = dirs
    g = np.clip(pts @ pts.T, -1.0, 1.0)
    return float(np.arccos(g.min()))


def limit_cone(table: CensusTable, min_len: int) -> ConeReport:
    """Sample of the limit cone: unit Cartan directions of long words.

    ``alpha_hat`` is the largest angle between two sampled directions and
    ``min_wall_gap`` the smallest consecutive-coordinate gap of a unit
    direction (distance to the chamber walls).
    """
    if table.dim == 2:
        raise RankOne("rank one: the limit cone is a single ray")
    if min_len > table.max_len:
        raise ValueError("min_len exceeds the census word length")
    sel = (table.word_len >= min_len) & (table.distance >= 1e-9)
    dirs = table.cartan[sel] / table.distance[sel, None]
    gaps = np.min(-np.diff(dirs, axis=1), axis=1)
    lens = table.word_len[sel]
    by_len = {int(k): float(gaps[lens == k].min()) for k in np.unique(lens)}
    return ConeReport(
        alpha_hat=_max_pairwise_angle(dirs),
        min_wall_gap=float(gaps.min()) if len(gaps) else float("nan"),
        count=int(len(dirs)),
        min_gap_by_length=by_len,
        directions=dirs,
    )


@dataclass
class BenoistGap:
    per_length: dict
    M_hat: float

    def to_dict(self) -> dict:
        return {"M_hat": self.M_hat,
                "per_length": {str(k): v for k, v in self.per_length.items()}}


def benoist_gap(table: CensusTable) -> BenoistGap:
    """Per word length, the largest ||L(g) - H(o, g.o)|| over very reduced words."""
    gap = np.linalg.norm(table.jordan - table.cartan, axis=1)
    per = {}
    for k in range(1, table.max_len + 1):
        sel = table.very_reduced & (table.word_len == k)
        if sel.any():
            per[k] = float(gap[sel].max())
    return BenoistGap(per, max(per.values()) if per else 0.0)


@dataclass
class Multiplicity:
    t: float
    counts: dict
    max_count: int
    slope: float
    grid: np.ndarray = field(repr=False)
    max_by_t: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"t": self.t, "max_count": self.max_count, "loglog_slope": self.slope,
                "classes_counted": len(self.counts)}


def class_multiplicity(table: CensusTable, t: float, points: int = 10) -> Multiplicity:
    """Number of census elements in each class whose translation length is <= t.

    ``slope`` is the log-log slope of the largest such count against t,
    taken over ``points`` values up to ``t``; the class bound predicts
    growth no faster than t^rank.
    """
    nonid = table.class_id >= 0
    cid = table.class_id[nonid]
    lengths = table.length[nonid]
    n_classes = len(table.class_words)

    def per_class(s):
        return np.bincount(cid[lengths <= s], minlength=n_classes)

    final = per_class(t)
    counts = {table.class_key(i): int(c) for i, c in enumerate(final) if c}
    systole = float(table.class_length.min()) if n_classes else 0.0
    grid = np.linspace(max(systole, 1e-9), t, points) if t > systole else np.array([t])
    max_by_t = np.array([per_class(s).max() if n_classes else 0 for s in grid], dtype=float)
    ok = max_by_t > 0
    if np.count_nonzero(ok) >= 2 and np.ptp(np.log(grid[ok])) > 0:
        slope = float(np.polyfit(np.log(grid[ok]), np.log(max_by_t[ok]), 1)[0])
    else:
        slope = float("nan")
    return Multiplicity(t, counts, int(final.max()) if len(final) else 0, slope, grid, max_by_t)


@dataclass
class RatioTable:
    """Normalised counts on a grid; columns follow the CSV export."""

    kind: str
    x: np.ndarray
    count: np.ndarray
    ratio_lower: np.ndarray
    ratio_upper: np.ndarray
    window: tuple

    def in_window(self) -> np.ndarray:
        return (self.x >= self.window[0] - 1e-12) & (self.x <= self.window[1] + 1e-12)

    def band(self, which: str) -> tuple[float, float]:
        vals = getattr(self, which)[self.in_window()]
        return float(vals.min()), float(vals.max())


@dataclass
class GrowthReport:
    delta: DeltaEstimate
    orbit: RatioTable
    classes: RatioTable
    class_slope: float
    class_slope_stderr: float
    rank: int
    benoist: BenoistGap
    cone: ConeReport | None
    multiplicity: Multiplicity | None
    directional: dict | None = None

    @property
    def delta_hat(self) -> float:
        return self.delta.delta

    @property
    def benoist_M_hat(self) -> float:
        return self.benoist.M_hat

    @property
    def alpha_hat(self) -> float:
        return self.cone.alpha_hat if self.cone else 0.0

    @property
    def min_wall_gap(self) -> float:
        return self.cone.min_wall_gap if self.cone else float("nan")

    def to_dict(self) -> dict:
        lo_o, hi_o = self.orbit.band("ratio_upper")
        lo_l, hi_l = self.classes.band("ratio_lower")
        lo_u, hi_u = self.classes.band("ratio_upper")
        out = {
            "rank": self.rank,
            **self.delta.to_dict(),
            "orbit_window": list(self.orbit.window),
            "orbit_ratio_min": lo_o,
            "orbit_ratio_max": hi_o,
            "class_window": list(self.classes.window),
            "class_slope": self.class_slope,
            "class_slope_stderr": self.class_slope_stderr,
            "lower_ratio_min": lo_l,
            "lower_ratio_max": hi_l,
            "upper_ratio_min": lo_u,
            "upper_ratio_max": hi_u,
            "benoist": self.benoist.to_dict(),
            "benoist_M_hat": self.benoist_M_hat,
            "alpha_hat": self.alpha_hat,
            "min_wall_gap": self.min_wall_gap if self.cone else None,
            "cone": self.cone.to_dict() if self.cone else None,
            "multiplicity": self.multiplicity.to_dict() if self.multiplicity else None,
        }
        if self.directional is not None:
            out["directional"] = self.directional
        return out


def orbit_ratio_table(table: CensusTable, delta: float, window=None, bins: int = 40) -> RatioTable:
    H = table.horizon_R
    window = window or (0.4 * H, H)
    lo = max(float(np.min(table.distance[table.distance > 0])), 1e-9) if len(table) > 1 else 0.0
    grid = np.unique(np.concatenate([np.linspace(lo, H, bins), np.linspace(*window, bins)]))
    counts = orbit_counts(table, grid)
    ratio = counts * np.exp(-delta * grid)
    return RatioTable("orbit", grid, counts, ratio, ratio, tuple(window))


def class_ratio_table(table: CensusTable, delta: float, rank: int, window=None,
                      bins: int = 40) -> RatioTable:
    Ht = table.horizon_t
    window = window or (0.5 * Ht, Ht)
    lengths = primitive_class_lengths(table)
    lo = float(lengths[0]) if len(lengths) else 0.0
    grid = np.unique(np.concatenate([np.linspace(lo, Ht, bins), np.linspace(*window, bins)]))
    counts = class_counts(table, grid)
    lower = counts * grid ** rank * np.exp(-delta * grid)
    upper = counts * grid * np.exp(-delta * grid)
    return RatioTable("classes", grid, counts, lower, upper, tuple(window))


def class_growth_slope(table: CensusTable, window=None, bins: int = 20) -> tuple[float, float]:
    """Slope of log P(t) against t over a window (default ``[0.5 h_t, h_t]``)."""
    Ht = table.horizon_t
    t1, t2 = window or (0.5 * Ht, Ht)
    grid = np.linspace(t1, t2, bins)
    counts = class_counts(table, grid)
    if np.any(counts == 0) or np.count_nonzero(np.diff(counts)) < 2:
        raise DegenerateWindow("too few primitive classes in the window")
    slope, stderr, _ = _fit_log_counts(grid, counts)
    return float(slope), float(stderr)


def theorem_report(table: CensusTable, delta: DeltaEstimate | float, *,
                   orbit_window=None, class_window=None, bins: int = 40,
                   cone_min_len: int | None = None, directional=None) -> GrowthReport:
    """Ratio tables for N(R) e^{-dR}, P(t) t e^{-dt} and P(t) t^r e^{-dt}.

    ``delta`` is either an estimate from :func:`estimate_delta` or a bare
    value.  The rank ``r`` is ``d - 1``.
    """
    if not isinstance(delta, DeltaEstimate):
        delta = DeltaEstimate(float(delta), float("nan"), (np.nan, np.nan),
                              np.empty(0), np.empty(0), np.zeros(1))
    for name, w, h in (("orbit", orbit_window, table.horizon_R),
                       ("class", class_window, table.horizon_t)):
        if w is not None and w[1] > h * (1 + 1e-12):
            raise WindowBeyondHorizon(f"{name} window end {w[1]:.6g} exceeds the horizon {h:.6g}")
    rank = table.rank
    orbit = orbit_ratio_table(table, delta.delta, orbit_window, bins)
    classes = class_ratio_table(table, delta.delta, rank, class_window, bins)
    slope, stderr = class_growth_slope(table, classes.window)
    cone = None
    if table.dim >= 3:
        cone = limit_cone(table, cone_min_len or max(1, table.max_len // 2))
    mult = class_multiplicity(table, table.horizon_t)
    return GrowthReport(delta, orbit, classes, slope, stderr, rank,
                        benoist_gap(table), cone, mult, directional)
