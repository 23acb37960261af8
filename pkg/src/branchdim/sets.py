"""Constructions of dyadic-cube subsets of [0,1]^d and of [0,5].

Three constructions are provided:

* ``build_moran`` realizes a subdivision profile (how many child cubes,
  ``2^{a_k}``, each retained cube keeps at level k) as a nested dyadic
  tree truncated at a finite depth.  In one dimension the set is stored
  as maximal runs of consecutive leaf cubes, which keeps deep
  constructions tractable: the run count is bounded by the cube count at
  the last level that kept a single child, not by the leaf count.
* ``realize_uniform_profile`` turns a spectrum satisfying the
  superadditivity and Lipschitz inequalities into the one-variable growth
  profile whose Moran set measures back that spectrum, by alternating
  spectrum-shaped segments with full-speed segments along a schedule.
* ``build_assembly`` glues scaled Moran pieces along a geometric sequence
  of scales accumulating at the origin; this realizes spectra that are
  not achievable by uniform sets alone.

``enumerate_components`` flattens any construction into the sorted
interval form consumed by the counting module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .branch import LipschitzProfile
from .counting import IntervalSet
from .errors import ParameterError
from .spectra import Spectrum, check_inequality
from ._num import Rational, as_fraction, fmt_number

__all__ = [
    "SubdivisionProfile",
    "DyadicSet",
    "Assembly",
    "AssemblyComponent",
    "profile_from_lipschitz",
    "build_moran",
    "realize_uniform_profile",
    "geometric_schedule",
    "build_assembly",
    "enumerate_components",
    "dyadic_set_to_csv",
    "assembly_to_csv",
]

EXPLICIT_CUBE_CAP = 1 << 20


@dataclass(frozen=True)
class SubdivisionProfile:
    """Bits of branching per level: each level-k cube keeps 2^{a_{k+1}} children."""

    d: int
    a: tuple[int, ...]

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError("ambient dimension d must be a positive integer")
        if any(not (0 <= ak <= self.d) for ak in self.a):
            raise ParameterError("profile entries must lie in {0, ..., d}")

    def h(self, k: int) -> int:
        """Cumulative bit count: log2 of the cube count at level k."""
        if not (0 <= k <= len(self.a)):
            raise ParameterError(f"level {k} outside the profile range")
        return sum(self.a[:k])


class DyadicSet:
    """A truncated nested dyadic-cube set.

    One-dimensional sets store maximal runs ``[start, end)`` of consecutive
    level-``depth`` cube indices.  Higher-dimensional sets store explicit
    per-level coordinate lists and are capped in size; they exist for the
    profile identities, not for deep counting runs.
    """

    def __init__(self, d: int, depth: int, scheme: str,
                 runs: list[tuple[int, int]] | None = None,
                 levels: list[list[tuple[int, ...]]] | None = None,
                 profile: SubdivisionProfile | None = None):
        if (runs is None) == (levels is None):
            raise ParameterError("provide exactly one of runs/levels")
        self.d = d
        self.depth = depth
        self.scheme = scheme
        self.runs = runs
        self.levels = levels
        self.profile = profile

    # -- one-dimensional run helpers ------------------------------------

    def runs_at_level(self, level: int) -> list[tuple[int, int]]:
        """Merged index ranges of retained cubes at a coarser level."""
        if self.runs is None:
            raise ParameterError("runs_at_level needs the 1-D backend")
        if not (0 <= level <= self.depth):
            raise ParameterError(f"level {level} outside [0, {self.depth}]")
        shift = self.depth - level
        out: list[tuple[int, int]] = []
        for s, e in self.runs:
            lo, hi = s >> shift, ((e - 1) >> shift) + 1
            if out and lo <= out[-1][1]:
                if hi > out[-1][1]:
                    out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
        return out

    def level_count(self, level: int) -> int:
        """Number of retained cubes at the given level."""
        if self.runs is not None:
            return sum(e - s for s, e in self.runs_at_level(level))
        if not (0 <= level < len(self.levels)):
            raise ParameterError(f"level {level} outside the stored tree")
        return len(self.levels[level])

    def descendant_count(self, level: int, index: int, target_level: int) -> int:
        """Retained level-``target_level`` cubes below one level-``level`` cube."""
        if self.runs is None:
            raise ParameterError("descendant_count needs the 1-D backend")
        if not (0 <= level <= target_level <= self.depth):
            raise ParameterError("need level <= target_level <= depth")
        shift = target_level - level
        lo, hi = index << shift, (index + 1) << shift
        total = 0
        for s, e in self.runs_at_level(target_level):
            a, b = max(s, lo), min(e, hi)
            if b > a:
                total += b - a
        return total


@dataclass(frozen=True)
class AssemblyComponent:
    k: int
    translation: Fraction
    dset: DyadicSet

    @property
    def center(self) -> Fraction:
        """Center of the ball isolating this component."""
        return self.translation + Fraction(1, 2 ** (self.k + 1))


@dataclass(frozen=True)
class Assembly:
    """A geometric-sequence glueing of scaled Moran pieces plus the origin.

    Component ``k`` lives in ``[4*2^-k, 5*2^-k]``, inside the ball of
    radius ``2^-k`` around ``x_k = 4.5*2^-k`` and inside the ball of
    radius ``2^{-k+3}`` around the origin; distinct components' isolating
    balls are pairwise disjoint.  The whole set sits in [0, 5] (in fact in
    [0, 2.5] since components start at k=1; no rescaling is applied).
    """

    spectrum: Spectrum
    components: tuple[AssemblyComponent, ...]
    k_max: int
    depth: int
    separation_m: int
    certified: bool

    def component_intervals(self, component: AssemblyComponent):
        """Exact global closed intervals of one component's leaf runs."""
        unit = Fraction(1, 2 ** self.depth)
        for s, e in component.dset.runs:
            yield (component.translation + s * unit,
                   component.translation + e * unit)


def profile_from_lipschitz(f: LipschitzProfile, d: int, depth: int) -> SubdivisionProfile:
    """Integer profile below a growth function.

    ``h(k) = min(floor(f(k)), h(k-1) + d)`` followed by a suffix-minimum
    monotonicity pass; for ``f`` increasing and d-Lipschitz with f(0) = 0
    this is the maximal integer-valued non-decreasing d-Lipschitz sequence
    under ``f``, and it satisfies ``f(k) - 1 < h(k) <= f(k)``.
    """
    if d < 1:
        raise ParameterError("d must be a positive integer")
    if depth < 0:
        raise ParameterError("depth must be non-negative")
    if f.at(0) != 0:
        raise ParameterError(f"profile source must vanish at 0, got {f.at(0)}")
    h = [0]
    for k in range(1, depth + 1):
        h.append(min(math.floor(f.at(k)), h[-1] + d))
    for k in range(depth - 1, -1, -1):
        h[k] = min(h[k], h[k + 1])
    return SubdivisionProfile(d, tuple(h[k] - h[k - 1] for k in range(1, depth + 1)))


def _spread_corners(d: int, count: int) -> list[tuple[int, ...]]:
    """Deterministic maximally-separated choice of hypercube corners.

    Greedy farthest-point selection over {0,1}^d starting at the origin
    corner, ties broken lexicographically.  For count = 2^d this is all
    corners; for count = 1 it is the origin corner, matching the
    lexicographic rule in one dimension.
    """
    corners = [tuple((i >> j) & 1 for j in range(d - 1, -1, -1))
               for i in range(1 << d)]
    chosen = [corners[0]]
    while len(chosen) < count:
        best = None
        best_dist = -1
        for c in corners:
            if c in chosen:
                continue
            dist = min(sum((x - y) ** 2 for x, y in zip(c, ch)) for ch in chosen)
            if dist > best_dist:
                best, best_dist = c, dist
        chosen.append(best)
    return sorted(chosen)


def build_moran(profile: SubdivisionProfile, depth: int,
                child_rule: str = "lex") -> DyadicSet:
    """Realize a subdivision profile as a truncated dyadic set.

    ``child_rule`` is "lex" (keep the lexicographically first children) or
    "spread" (keep a maximally separated corner subset).  In one dimension
    the two rules coincide, since keeping one child of two is the only
    non-trivial choice and both rules take the left one.
    """
    if child_rule not in ("lex", "spread"):
        raise ParameterError(f"unknown child_rule {child_rule!r}")
    if depth > len(profile.a):
        raise ParameterError(
            f"profile has {len(profile.a)} levels, need at least {depth}"
        )
    d = profile.d
    if d == 1:
        runs = [(0, 1)]
        for k in range(depth):
            if profile.a[k] == 1:
                runs = [(2 * s, 2 * e) for s, e in runs]
            else:
                runs = [(2 * i, 2 * i + 1) for s, e in runs for i in range(s, e)]
        return DyadicSet(1, depth, child_rule, runs=runs, profile=profile)

    levels: list[list[tuple[int, ...]]] = [[(0,) * d]]
    total = 1
    for k in range(depth):
        keep = 1 << profile.a[k]
        total *= keep
        if total > EXPLICIT_CUBE_CAP:
            raise ParameterError(
                "explicit cube tree too large; deep constructions are 1-D only"
            )
        if child_rule == "lex":
            offsets = [tuple((i >> j) & 1 for j in range(d - 1, -1, -1))
                       for i in range(keep)]
        else:
            offsets = _spread_corners(d, keep)
        nxt = []
        for cube in levels[-1]:
            base = tuple(2 * c for c in cube)
            for off in offsets:
                nxt.append(tuple(b + o for b, o in zip(base, off)))
        nxt.sort()
        levels.append(nxt)
    return DyadicSet(d, depth, child_rule, levels=levels, profile=profile)


def geometric_schedule(ratio: int, limit: Rational, start: Rational = 1) -> list[Fraction]:
    """Schedule 1, R, R^2, ... capped at ``limit`` (which must be hit exactly)."""
    if ratio < 2:
        raise ParameterError("schedule ratio must be at least 2")
    top = as_fraction(limit)
    point = as_fraction(start)
    if point <= 0 or top < point:
        raise ParameterError("need 0 < start <= limit")
    out = [point]
    while out[-1] < top:
        out.append(out[-1] * ratio)
    if out[-1] != top:
        raise ParameterError(
            f"limit {limit} is not start * ratio^n for any n"
        )
    return out


def realize_uniform_profile(spec: Spectrum, schedule, d: int = 1,
                            cert_grid: int = 64) -> LipschitzProfile:
    """Growth profile whose uniform Moran set realizes ``spec``.

    The schedule entries alternate roles v1 < u1 < v2 < u2 < ...; on each
    [v_k, u_k] the profile follows the spectrum shape,

        f(u) = f(v_k) + u_k * phi(v_k / u_k) - u_k * phi(u / u_k),

    and on [0, v_1] and each [u_k, v_{k+1}] it climbs at full slope d.
    Requires the spectrum to satisfy superadditivity (so it is decreasing
    with phi(1) = 0, making f increasing) and the d-Lipschitz bound (so f
    never climbs faster than d).  The output is therefore an increasing
    d-Lipschitz profile with f(0) = 0, exactly what the Moran builder
    consumes.
    """
    if d < 1:
        raise ParameterError("d must be a positive integer")
    if spec.alpha > d:
        raise ParameterError("spectrum bound alpha exceeds ambient dimension d")
    if not check_inequality(spec, "L", cert_grid).passed:
        raise ParameterError("spectrum is not d-Lipschitz; construction needs (L)")
    if not check_inequality(spec, "S", cert_grid).passed:
        raise ParameterError("spectrum fails superadditivity; construction needs (S)")
    pts = [as_fraction(x) for x in schedule]
    if len(pts) < 2 or any(a >= b for a, b in zip(pts, pts[1:])) or pts[0] <= 0:
        raise ParameterError("schedule must be strictly increasing and positive")

    knots = [Fraction(0)]
    values = [Fraction(0)]

    def extend_full_slope(to: Fraction):
        knots.append(to)
        values.append(values[-1] + d * (to - knots[-2]))

    def extend_spectrum_segment(v_k: Fraction, u_k: Fraction):
        base = values[-1] + u_k * spec.eval_exact(v_k / u_k)
        inner = sorted(
            b * u_k for b in spec.breakpoints if v_k < b * u_k < u_k
        )
        for u in inner + [u_k]:
            knots.append(u)
            values.append(base - u_k * spec.eval_exact(u / u_k))

    extend_full_slope(pts[0])
    for i in range(1, len(pts)):
        if i % 2 == 1:
            extend_spectrum_segment(pts[i - 1], pts[i])
        else:
            extend_full_slope(pts[i])
    return LipschitzProfile(tuple(knots), tuple(values), Fraction(d))


def build_assembly(spec: Spectrum, d: int = 1, k_max: int = 8,
                   depth: int = 16, child_rule: str = "lex",
                   cert_grid: int = 64) -> Assembly:
    """Assemble scaled Moran pieces along a geometric sequence of scales.

    For each k in 1..k_max the strip spectrum ``f_k(u) = u * phi(k/u)``
    (zero below u = k) drives a Moran set built at local depth
    ``depth - k``, scaled to side ``2^-k`` and translated to
    ``[4*2^-k, 5*2^-k]``.  The origin joins as the accumulation point of
    the sequence.  A spectrum failing the superadditivity or
    weak-Lipschitz check still builds, with ``certified=False``, so the
    verification pipeline can gate on the flag.
    """
    if d != 1:
        raise ParameterError("assemblies are one-dimensional in this toolkit")
    if spec.alpha > d:
        raise ParameterError("spectrum bound alpha exceeds ambient dimension d")
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    if depth < k_max:
        raise ParameterError("depth must be at least k_max")
    certified = (
        check_inequality(spec, "S", cert_grid).passed
        and check_inequality(spec, "W", cert_grid).passed
    )
    components = []
    for k in range(1, k_max + 1):
        local_depth = depth - k
        strip = _strip_profile(spec, k, local_depth)
        profile = profile_from_lipschitz(strip, 1, local_depth)
        dset = build_moran(profile, local_depth, child_rule)
        components.append(
            AssemblyComponent(k=k, translation=Fraction(4, 2 ** k), dset=dset)
        )
    return Assembly(
        spectrum=spec,
        components=tuple(components),
        k_max=k_max,
        depth=depth,
        separation_m=3,
        certified=certified,
    )


def _strip_profile(spec: Spectrum, k: int, local_depth: int) -> LipschitzProfile:
    """The strip function u -> (k+u) * phi(k / (k+u)) in local coordinates.

    Piecewise-linear in u with knots where k/(k+u) crosses a spectrum
    breakpoint; increasing and alpha-Lipschitz whenever the spectrum
    satisfies (S) and (W).
    """
    if local_depth == 0:
        return LipschitzProfile((Fraction(0),), (Fraction(0),), spec.alpha)
    knots = {Fraction(0), Fraction(local_depth)}
    for b in spec.breakpoints:
        if b == 0:
            continue
        u = Fraction(k, 1) / b - k  # global scale k/b, shifted to local
        if 0 < u < local_depth:
            knots.add(u)
    ordered = sorted(knots)
    values = tuple((k + u) * spec.eval_exact(Fraction(k) / (k + u)) for u in ordered)
    return LipschitzProfile(tuple(ordered), values, spec.alpha)


def enumerate_components(obj, resolution: int) -> IntervalSet:
    """Flatten a construction into sorted disjoint closed dyadic intervals.

    The output is the level-``resolution`` cube cover of the construction:
    maximal runs of touching cubes merge into single intervals.  At
    ``resolution == depth`` this is exactly the truncated set.  The
    assembly's origin stays an exact degenerate interval rather than being
    fattened to a cube; at the scales the toolkit counts, the two choices
    give identical packings, and the point form matches the constructed
    set.
    """
    if isinstance(obj, DyadicSet):
        if obj.d != 1:
            raise ParameterError("interval enumeration is one-dimensional")
        if resolution > obj.depth:
            raise ParameterError(
                f"resolution {resolution} exceeds construction depth {obj.depth}"
            )
        unit = Fraction(1, 2 ** resolution)
        pairs = [(s * unit, e * unit) for s, e in obj.runs_at_level(resolution)]
        return IntervalSet(pairs)
    if isinstance(obj, Assembly):
        if resolution > obj.depth:
            raise ParameterError(
                f"resolution {resolution} exceeds construction depth {obj.depth}"
            )
        unit = Fraction(1, 2 ** resolution)
        cube_ranges: list[tuple[int, int]] = []
        for comp in obj.components:
            for lo, hi in obj.component_intervals(comp):
                a = math.floor(lo / unit)
                b = math.ceil(hi / unit)
                cube_ranges.append((a, b))
        cube_ranges.sort()
        merged: list[tuple[int, int]] = []
        for a, b in cube_ranges:
            if merged and a <= merged[-1][1]:
                if b > merged[-1][1]:
                    merged[-1] = (merged[-1][0], b)
            else:
                merged.append((a, b))
        pairs = [(a * unit, b * unit) for a, b in merged]
        if not pairs or pairs[0][0] > 0:
            pairs.insert(0, (Fraction(0), Fraction(0)))
        return IntervalSet(pairs)
    raise ParameterError(f"cannot enumerate {type(obj).__name__}")


# ---------------------------------------------------------------------------
# serialization

def dyadic_set_to_csv(dset: DyadicSet) -> str:
    """Header + one row per maximal run (1-D) or per cube (explicit).

    Rows are ``level,left_numerator,width`` with width in cubes; explicit
    trees emit one row per leaf cube with width 1 and one coordinate
    column per axis row-major (1-D only in this format).
    """
    lines = [
        f"# d={dset.d}",
        f"# depth={dset.depth}",
        f"# scheme={dset.scheme}",
        "level,left_numerator,width",
    ]
    if dset.runs is not None:
        for s, e in dset.runs:
            lines.append(f"{dset.depth},{s},{e - s}")
    else:
        if dset.d != 1:
            raise ParameterError("CSV export of explicit trees is 1-D only")
        for (x,) in dset.levels[-1]:
            lines.append(f"{dset.depth},{x},1")
    return "\n".join(lines) + "\n"


def assembly_to_csv(assembly: Assembly) -> str:
    """Per-run rows with the owning component and its exact translation."""
    lines = [
        "# d=1",
        f"# depth={assembly.depth}",
        f"# k_max={assembly.k_max}",
        f"# separation_m={assembly.separation_m}",
        f"# certified={str(assembly.certified).lower()}",
        "component_k,translation_num,translation_den,level,left_numerator,width",
    ]
    for comp in assembly.components:
        t = comp.translation
        local_depth = comp.dset.depth
        for s, e in comp.dset.runs:
            lines.append(
                f"{comp.k},{t.numerator},{t.denominator},{local_depth},{s},{e - s}"
            )
    lines.append("0,0,1,0,0,0")  # the origin point
    return "\n".join(lines) + "\n"
