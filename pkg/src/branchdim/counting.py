"""Exact packing/covering counts on interval sets and spectrum estimators.

All geometry is one-dimensional and exact: interval endpoints are dyadic
rationals stored as integers at a common power-of-two scale, packings use
strictly-greater-than-4r gaps (so counts compose multiplicatively across
scales), and coverings count level-u dyadic cubes.  Tables of per-cell
counts feed the lower, monotone-lower, and Assouad spectrum estimators.

Packings are internal: a packing of the ball B(x, R) at scale r is a set
of points whose closed 2r-balls are pairwise disjoint (pairwise distance
strictly greater than 4r) and contained in B(x, R), so the points live in
the shrunken window [x - (R-2r), x + (R-2r)].  Containment is what makes
counts compose multiplicatively across scales with no slack: a packing of
a packing is again a packing of the original ball.  Counts are clamped to
at least 1 (the center itself witnesses a single point).

The strict gap condition needs care: the greedy packing wants to place a
point "immediately after" position p + 4r, which is not a dyadic number.
Positions therefore carry an infinitesimal-offset counter alongside the
integer coordinate; a position (x, n) means x plus n dialed epsilons.  A
point fits a closed interval iff its integer part is strictly inside, or
sits at the right endpoint with a zero counter.  This keeps every count
an exact integer while honoring strict inequalities.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .branch import EtaBound
from .errors import DomainError, ParameterError
from ._num import Rational, as_fraction, fmt_decimal

__all__ = [
    "IntervalSet",
    "CountTable",
    "SpectrumEstimate",
    "UniformityReport",
    "packing_count",
    "covering_count",
    "lb_table",
    "ub_table",
    "estimate_lower_spectrum",
    "monotonize_estimate",
    "estimate_assouad_spectrum",
    "check_uniformity",
    "table_to_csv",
    "estimate_to_csv",
    "uniformity_report_to_csv",
]

SPARSE_KEEP = 8


def _dyadic_exponent(x: Fraction, what: str) -> int:
    d = x.denominator
    e = d.bit_length() - 1
    if (1 << e) != d:
        raise ParameterError(f"{what} must be a dyadic rational, got {x}")
    return e


class IntervalSet:
    """Sorted disjoint closed intervals with exact dyadic endpoints.

    Inputs are canonicalized: pairs are sorted and touching or overlapping
    intervals merged, so the stored runs are separated by positive gaps.
    Degenerate pairs (lo == hi) represent isolated points.
    """

    def __init__(self, pairs):
        frs = []
        for lo, hi in pairs:
            lo, hi = as_fraction(lo), as_fraction(hi)
            if lo > hi:
                raise ParameterError(f"interval ({lo}, {hi}) is reversed")
            frs.append((lo, hi))
        if not frs:
            raise ParameterError("interval set cannot be empty")
        scale = 0
        for lo, hi in frs:
            scale = max(scale, _dyadic_exponent(lo, "endpoint"),
                        _dyadic_exponent(hi, "endpoint"))
        unit = 1 << scale
        ints = sorted((int(lo * unit), int(hi * unit)) for lo, hi in frs)
        merged = [ints[0]]
        for lo, hi in ints[1:]:
            if lo <= merged[-1][1]:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        self.scale = scale
        self.pairs = merged

    def intervals(self) -> list[tuple[Fraction, Fraction]]:
        unit = Fraction(1, 1 << self.scale)
        return [(lo * unit, hi * unit) for lo, hi in self.pairs]

    @property
    def hull(self) -> tuple[Fraction, Fraction]:
        unit = Fraction(1, 1 << self.scale)
        return (self.pairs[0][0] * unit, self.pairs[-1][1] * unit)

    def scaled_pairs(self, scale: int) -> list[tuple[int, int]]:
        if scale < self.scale:
            raise ParameterError("cannot reduce interval set scale")
        shift = scale - self.scale
        return [(lo << shift, hi << shift) for lo, hi in self.pairs]

    def contains(self, x: Rational) -> bool:
        x = as_fraction(x)
        unit = 1 << self.scale
        scaled = x * unit
        los = [lo for lo, _ in self.pairs]
        i = bisect_right(los, scaled) - 1
        return i >= 0 and self.pairs[i][0] <= scaled <= self.pairs[i][1]

    def __len__(self) -> int:
        return len(self.pairs)


# ---------------------------------------------------------------------------
# exact counts

def _greedy_pack(pieces, window_lo: int, window_hi: int, gap: int,
                 cutoff: int | None = None) -> int:
    """Greedy strict-gap packing over clipped integer pieces.

    ``pieces`` are sorted disjoint (lo, hi) integers; the count is the
    maximum number of points in the window-clipped union with pairwise
    distances strictly greater than ``gap``.  Leftmost-greedy is optimal
    in one dimension.  With ``cutoff`` the scan stops as soon as the
    running count reaches it (useful when minimizing over candidates).
    """
    count = 0
    px = pn = None  # position of the last placed point: px + pn epsilons
    for lo, hi in pieces:
        lo, hi = max(lo, window_lo), min(hi, window_hi)
        if lo > hi:
            continue
        if px is None or px + gap < lo:
            x, n = lo, 0
        else:
            x, n = px + gap, pn + 1
        if n == 0:
            span = hi - x
            m = max(1, -(-span // gap)) if span >= 0 else 0
        else:
            span = hi - x
            m = -(-span // gap) if span > 0 else 0
        if m <= 0:
            continue
        count += m
        px, pn = x + (m - 1) * gap, (n if n else 0) + (m - 1)
        if cutoff is not None and count >= cutoff:
            return count
    return count


def _cover_cubes(pieces, window_lo: int, window_hi: int, shift: int) -> int:
    """Level-u cubes hit by the clipped union; ``shift`` = scale - u.

    Nondegenerate clipped pieces [x, y] hit cubes floor(x) .. ceil(y)-1
    in level-u units; a degenerate point hits the single cube floor(x).
    Adjacent pieces may hit overlapping cube ranges, merged on the fly.
    """
    count = 0
    unit = 1 << shift
    last_hi = None  # last counted cube index
    for lo, hi in pieces:
        lo, hi = max(lo, window_lo), min(hi, window_hi)
        if lo > hi:
            continue
        if lo == hi:
            j_lo = j_hi = lo >> shift
        else:
            j_lo = lo >> shift
            j_hi = ((hi + unit - 1) >> shift) - 1
        if last_hi is not None and j_lo <= last_hi:
            j_lo = last_hi + 1
            if j_lo > j_hi:
                continue
        count += j_hi - j_lo + 1
        last_hi = j_hi
    return count


class _Workspace:
    """The set rescaled once to a working scale fine enough for all cells."""

    def __init__(self, iset: IntervalSet, scale: int):
        self.scale = max(iset.scale, scale)
        self.pieces = iset.scaled_pairs(self.scale)
        self.starts = [lo for lo, _ in self.pieces]
        self.ends = [hi for _, hi in self.pieces]

    def window_slice(self, wl: int, wr: int):
        first = bisect_left(self.ends, wl)
        last = bisect_right(self.starts, wr)
        return self.pieces[first:last]

    def locate(self, x: int) -> bool:
        i = bisect_right(self.starts, x) - 1
        return i >= 0 and self.pieces[i][0] <= x <= self.pieces[i][1]


def packing_count(iset: IntervalSet, center: Rational, radius: Rational,
                  r: Rational) -> int:
    """Exact maximum internal packing of B(center, radius) at scale r.

    Counts set points whose closed 2r-balls are pairwise disjoint and
    contained in the closed ball: pairwise gaps strictly above 4r, points
    within radius - 2r of the center.  At least 1, since the center is a
    set point.  Greedy from the left is optimal in one dimension, and the
    dyadic inputs make the arithmetic exact.
    """
    center, radius, r = as_fraction(center), as_fraction(radius), as_fraction(r)
    if r <= 0:
        raise ParameterError(f"packing scale r must be positive, got {r}")
    if radius <= 0:
        raise ParameterError(f"ball radius must be positive, got {radius}")
    gap = 4 * r
    # Two extra bits beyond r itself so the half-gap shrink by 2r stays
    # exact in integer units; a scale based on 4r would truncate it.
    scale = max(_dyadic_exponent(r, "r") + 2, _dyadic_exponent(center, "center"),
                _dyadic_exponent(radius, "radius"))
    ws = _Workspace(iset, scale)
    unit = 1 << ws.scale
    c = int(center * unit)
    if not ws.locate(c):
        raise DomainError(f"center {center} lies outside the set")
    g = int(gap * unit)
    rad = int(radius * unit) - g // 2
    if rad < 0:
        return 1
    return max(1, _greedy_pack(ws.window_slice(c - rad, c + rad),
                               c - rad, c + rad, g))


def covering_count(iset: IntervalSet, center: Rational, radius: Rational,
                   u: int) -> int:
    """Level-u dyadic cubes hit by set ∩ B(center, radius)."""
    center, radius = as_fraction(center), as_fraction(radius)
    if radius <= 0:
        raise ParameterError(f"ball radius must be positive, got {radius}")
    if u < 0:
        raise ParameterError(f"cube level must be non-negative, got {u}")
    scale = max(u, _dyadic_exponent(center, "center"),
                _dyadic_exponent(radius, "radius"))
    ws = _Workspace(iset, scale)
    unit = 1 << ws.scale
    c = int(center * unit)
    if not ws.locate(c):
        raise DomainError(f"center {center} lies outside the set")
    rad = int(radius * unit)
    return _cover_cubes(ws.window_slice(c - rad, c + rad), c - rad, c + rad,
                        ws.scale - u)


# ---------------------------------------------------------------------------
# tables

@dataclass(frozen=True)
class CountTable:
    """Per-cell extremal counts over the (u, v) grid, 0 ≤ v ≤ u ≤ u_max.

    ``cells`` maps (u, v) to an exact integer count; logs are base-2 and
    computed on demand so that exactness lives in the integers.  ``kind``
    is "lb" (min over ball centers of packing counts) or "ub" (max over
    centers of covering counts).
    """

    kind: str
    u_max: int
    cells: dict
    candidate_rule: str
    label: str = ""

    def count(self, u: int, v: int) -> int:
        try:
            return self.cells[(u, v)]
        except KeyError:
            raise ParameterError(f"table has no cell ({u}, {v})") from None

    def log2(self, u: int, v: int) -> float:
        return math.log2(self.count(u, v))

    def grid(self):
        return sorted(self.cells)

    def validate(self) -> list[str]:
        """Invariant violations: diagonal, monotonicity, superadditivity."""
        problems = []
        for (u, v), cnt in sorted(self.cells.items()):
            if cnt < 1:
                problems.append(f"cell ({u},{v}) has count {cnt} < 1")
            if u == v and cnt != 1:
                problems.append(f"diagonal cell ({u},{u}) has count {cnt} != 1")
            if (u - 1, v) in self.cells and self.cells[(u - 1, v)] > cnt:
                problems.append(f"count decreases from ({u - 1},{v}) to ({u},{v})")
            if (u, v - 1) in self.cells and self.cells[(u, v - 1)] < cnt:
                problems.append(f"count increases from ({u},{v - 1}) to ({u},{v})")
        if self.kind == "lb":
            problems.extend(self.superadditivity_violations())
        return problems

    def superadditivity_violations(self) -> list[str]:
        """Triples with count(u,v) < count(u,w) * count(w,v), exact."""
        out = []
        for (u, v) in sorted(self.cells):
            for w in range(v, u + 1):
                if (u, w) not in self.cells or (w, v) not in self.cells:
                    continue
                lhs = self.cells[(u, v)]
                rhs = self.cells[(u, w)] * self.cells[(w, v)]
                if lhs < rhs:
                    out.append(
                        f"superadditivity fails at u={u}, w={w}, v={v}: "
                        f"{lhs} < {self.cells[(u, w)]}*{self.cells[(w, v)]}"
                    )
        return out


def _candidate_positions(ws: _Workspace, rule: str, v: int) -> list[int]:
    """Ball-center candidates at the workspace scale for ball level v.

    endpoints: every interval endpoint.
    dense: endpoints plus all level-(v+3) dyadic points inside the set.
    sparse: the extremes, the first and last few interval endpoints, and
      the endpoints flanking the widest interior gaps; meant for very deep
      sets where the endpoint list itself is huge.
    """
    if rule == "endpoints" or rule == "dense":
        cands = []
        for lo, hi in ws.pieces:
            cands.append(lo)
            if hi != lo:
                cands.append(hi)
        if rule == "dense":
            shift = ws.scale - min(v + 3, ws.scale)
            unit = 1 << shift
            for lo, hi in ws.pieces:
                j = -(-lo // unit)
                top = hi // unit
                cands.extend(j2 * unit for j2 in range(j, top + 1))
        return sorted(set(cands))
    if rule == "sparse":
        k = SPARSE_KEEP
        cands = set()
        for lo, hi in ws.pieces[:k] + ws.pieces[-k:]:
            cands.add(lo)
            cands.add(hi)
        gaps = sorted(
            range(len(ws.pieces) - 1),
            key=lambda i: ws.pieces[i + 1][0] - ws.pieces[i][1],
            reverse=True,
        )[:k]
        for i in gaps:
            cands.add(ws.pieces[i][1])
            cands.add(ws.pieces[i + 1][0])
        return sorted(cands)
    raise ParameterError(f"unknown candidate rule {rule!r}")


def _table(iset: IntervalSet, u_max: int, candidate_rule: str, kind: str,
           cells, label: str) -> CountTable:
    if u_max < 0:
        raise ParameterError("u_max must be non-negative")
    if cells is None:
        wanted = [(u, v) for u in range(u_max + 1) for v in range(u + 1)]
    else:
        wanted = sorted(set(cells))
        for (u, v) in wanted:
            if not (0 <= v <= u <= u_max):
                raise ParameterError(f"cell ({u}, {v}) outside the grid")
    ws = _Workspace(iset, u_max + 3)
    hull_lo, hull_hi = ws.pieces[0][0], ws.pieces[-1][1]
    by_v: dict[int, list[int]] = {}
    for (u, v) in wanted:
        by_v.setdefault(v, []).append(u)
    out = {}
    for v, us in sorted(by_v.items()):
        cands = _candidate_positions(ws, candidate_rule, v)
        rad = 1 << (ws.scale - v)
        for u in sorted(us):
            gap = 1 << (ws.scale - u + 2)
            if kind == "lb":
                eff = rad - gap // 2
                if eff < 0:
                    out[(u, v)] = 1
                    continue
            else:
                if u == v:
                    # A radius-r ball is covered by one radius-r ball
                    # (itself); the cube surrogate would say 2 or 3 here
                    # and break the zero diagonal shared by both kinds.
                    out[(u, v)] = 1
                    continue
                eff = rad
            full_cover = eff >= hull_hi - hull_lo
            best = None
            for c in cands:
                wl, wr = c - eff, c + eff
                pieces = ws.window_slice(wl, wr)
                if kind == "lb":
                    got = max(1, _greedy_pack(pieces, wl, wr, gap, cutoff=best))
                    if best is None or got < best:
                        best = got
                    if best <= 1 or full_cover:
                        break
                else:
                    got = _cover_cubes(pieces, wl, wr, ws.scale - u)
                    if best is None or got > best:
                        best = got
                    if full_cover:
                        break
            out[(u, v)] = best
    return CountTable(kind=kind, u_max=u_max, cells=out,
                      candidate_rule=candidate_rule, label=label)


def lb_table(iset: IntervalSet, u_max: int, candidate_rule: str = "dense",
             cells=None, label: str = "") -> CountTable:
    """Worst-case packing counts: min over ball-center candidates.

    For each grid cell (u, v) the value is the minimum over candidate
    centers x of the exact strict-gap packing count of set ∩ B(x, 2^-v)
    at scale 2^-u.  ``cells`` restricts evaluation to selected grid cells
    (everything else stays absent), which keeps very deep measurements
    affordable.
    """
    return _table(iset, u_max, candidate_rule, "lb", cells, label)


def ub_table(iset: IntervalSet, u_max: int, candidate_rule: str = "dense",
             cells=None, label: str = "") -> CountTable:
    """Best-case covering counts: max over ball-center candidates.

    Diagonal cells (u, u) are pinned to the exact value 1: any radius-r
    ball is covered by itself, while the cube surrogate would report the
    2 or 3 level-u cubes the ball merely touches.
    """
    return _table(iset, u_max, candidate_rule, "ub", cells, label)


# ---------------------------------------------------------------------------
# estimators

@dataclass(frozen=True)
class SpectrumEstimate:
    """Finite-window spectrum estimate on a theta grid.

    Values approximate (1-theta) times the dimension quantity; ``window``
    is the integer range of coarse exponents u the extremum ran over.  A
    window shorter than four samples sets ``warning`` instead of failing.
    """

    kind: str
    thetas: tuple
    values: tuple
    window: tuple
    warning: bool = False

    def value_at(self, theta: Rational) -> float:
        t = as_fraction(theta)
        for th, val in zip(self.thetas, self.values):
            if th == t:
                return val
        raise ParameterError(f"theta {theta} not on the estimate grid")

    def dimensions(self) -> list[float]:
        """values divided by (1-theta); infinity at theta = 1."""
        return [v / (1 - float(t)) if t != 1 else math.inf
                for t, v in zip(self.thetas, self.values)]


def _resolve_window(window, u_max: int) -> tuple[int, int]:
    if window is None:
        window = (max(1, u_max // 2), u_max)
    lo, hi = int(window[0]), int(window[1])
    if not (0 < lo <= hi <= u_max):
        raise ParameterError(f"window {window} not within (0, {u_max}]")
    return lo, hi


def estimate_lower_spectrum(table: CountTable, theta_grid, window=None) -> SpectrumEstimate:
    """min over u in the window of log2(count(u, ceil(theta*u))) / u.

    Thetas should be exact rationals: ceil(theta*u) is sensitive to float
    representation error exactly at the grid points one cares about.  The
    ceiling rounds the ball level pessimistically (smaller ball).
    """
    if table.kind != "lb":
        raise ParameterError("lower-spectrum estimation needs an lb table")
    lo, hi = _resolve_window(window, table.u_max)
    thetas = tuple(as_fraction(t) for t in theta_grid)
    values = []
    for theta in thetas:
        if not (0 <= theta <= 1):
            raise DomainError(f"theta {theta} outside [0, 1]")
        values.append(min(
            table.log2(u, min(u, math.ceil(theta * u))) / u
            for u in range(lo, hi + 1)
        ))
    return SpectrumEstimate(kind="lower", thetas=thetas, values=tuple(values),
                            window=(lo, hi), warning=hi - lo + 1 < 4)


def monotonize_estimate(est: SpectrumEstimate) -> SpectrumEstimate:
    """Running-infimum correction: the monotone variant of the estimate.

    value'(theta) = (1-theta) * min over grid lambda <= theta of
    value(lambda)/(1-lambda).  Idempotent; theta = 1 contributes nothing
    to the running minimum and maps to value 0.
    """
    if est.kind not in ("lower", "monotone_lower"):
        raise ParameterError("monotonization applies to lower-spectrum estimates")
    order = sorted(range(len(est.thetas)), key=lambda i: est.thetas[i])
    values = [0.0] * len(est.thetas)
    running = math.inf
    for i in order:
        t = est.thetas[i]
        if t != 1:
            running = min(running, est.values[i] / (1 - float(t)))
        values[i] = (1 - float(t)) * (running if running < math.inf else 0.0)
    return SpectrumEstimate(kind="monotone_lower", thetas=est.thetas,
                            values=tuple(values), window=est.window,
                            warning=est.warning)


def estimate_assouad_spectrum(table: CountTable, theta_grid, window=None) -> SpectrumEstimate:
    """max over u in the window of log2(count(u, floor(theta*u))) / u.

    The floor rounds the ball level pessimistically for a supremum
    (larger ball).
    """
    if table.kind != "ub":
        raise ParameterError("Assouad estimation needs an ub table")
    lo, hi = _resolve_window(window, table.u_max)
    thetas = tuple(as_fraction(t) for t in theta_grid)
    values = []
    for theta in thetas:
        if not (0 <= theta <= 1):
            raise DomainError(f"theta {theta} outside [0, 1]")
        values.append(max(
            table.log2(u, math.floor(theta * u)) / u
            for u in range(lo, hi + 1)
        ))
    return SpectrumEstimate(kind="assouad", thetas=thetas, values=tuple(values),
                            window=(lo, hi), warning=hi - lo + 1 < 4)


@dataclass(frozen=True)
class UniformityReport:
    """Worst excess of ub over lb + eta across the common grid."""

    passed: bool
    worst_excess: float
    witness: tuple | None
    eta_description: str


def check_uniformity(lb: CountTable, ub: CountTable, eta: EtaBound) -> UniformityReport:
    """Is the set uniform at the measured scales: ub ≤ lb + eta everywhere?"""
    if lb.kind != "lb" or ub.kind != "ub":
        raise ParameterError("check_uniformity expects one lb and one ub table")
    if lb.u_max != ub.u_max or set(lb.cells) != set(ub.cells):
        raise ParameterError("uniformity check needs matching table grids")
    worst = -math.inf
    witness = None
    for (u, v) in sorted(lb.cells):
        excess = ub.log2(u, v) - lb.log2(u, v) - float(eta.at(u))
        if excess > worst:
            worst, witness = excess, (u, v)
    if eta.constant is not None:
        desc = f"constant {fmt_decimal(eta.constant)}"
    else:
        desc = "profile"
    return UniformityReport(passed=worst <= 0, worst_excess=worst,
                            witness=witness, eta_description=desc)


# ---------------------------------------------------------------------------
# serialization

def table_to_csv(table: CountTable) -> str:
    lines = [
        f"# kind={table.kind}",
        f"# u_max={table.u_max}",
        f"# candidate_rule={table.candidate_rule}",
    ]
    if table.label:
        lines.append(f"# label={table.label}")
    lines.append("u,v,count,log2")
    for (u, v) in table.grid():
        cnt = table.cells[(u, v)]
        lines.append(f"{u},{v},{cnt},{math.log2(cnt)!r}")
    return "\n".join(lines) + "\n"


def estimate_to_csv(est: SpectrumEstimate) -> str:
    lines = [
        f"# kind={est.kind}",
        f"# window={est.window[0]}..{est.window[1]}",
        f"# warning={str(est.warning).lower()}",
        "theta,value",
    ]
    for t, v in zip(est.thetas, est.values):
        lines.append(f"{fmt_decimal(t)},{v!r}")
    return "\n".join(lines) + "\n"


def uniformity_report_to_csv(report: UniformityReport) -> str:
    if report.witness is None:
        witness = ""
    else:
        witness = f"u={report.witness[0]} v={report.witness[1]}"
    return (
        "check,passed,worst,witness\n"
        f"uniformity,{str(report.passed).lower()},{report.worst_excess!r},{witness}\n"
    )
