"""Two-scale branching functions on the truncated half-plane 0 <= v <= u.

A branching function ``f(u, v)`` measures, in bits, how much a set branches
between the dyadic scales ``2^-v`` (outer) and ``2^-u`` (inner).  The class
of interest consists of functions that vanish on the diagonal, are
superadditive under splitting the scale range at any intermediate ``w``,
and are alpha-Lipschitz in ``u``.  This module provides the evaluable
variants used by the rest of the toolkit:

* ``lift``            -- ``f(u, v) = u * phi(v / u)`` from a spectrum,
* ``strip_envelope``  -- the envelope built from a one-variable profile
  ``g`` and a base height ``z``,
* ``inf_branch``      -- pointwise minima of families,
* ``TableBranch``     -- measured count tables (see ``counting``),
* ``GridBranch``      -- explicit integer-grid samples, handy for
  perturbation experiments,

plus the operations on them: the maximal increasing Lipschitz minorant,
Lipschitz regularization, the normalized scale limit, property checks,
and the shifted-sandwich comparison.

Exact-variant evaluations (lift / strip / inf / grid) are carried out in
Fractions, so tolerance-zero property checks are meaningful; table-backed
functions evaluate to float log2 values but expose exact integer counts,
which the property checks use instead of logs.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, ParameterError
from ._num import Rational, as_fraction, fmt_decimal, fmt_number
from .spectra import Spectrum, check_inequality

__all__ = [
    "BranchFn",
    "LiftBranch",
    "StripEnvelopeBranch",
    "InfBranch",
    "GridBranch",
    "TableBranch",
    "LipschitzProfile",
    "EtaBound",
    "BranchReport",
    "EquivReport",
    "PreconditionReport",
    "lift",
    "strip_envelope",
    "inf_branch",
    "max_lipschitz_minorant",
    "regularize",
    "lambda_limit",
    "check_branch",
    "equiv_compare",
    "branch_to_csv",
    "profile_to_csv",
]


@dataclass(frozen=True)
class LipschitzProfile:
    """Piecewise-linear one-variable profile g with a slope bound.

    Knots ascend; values are non-negative and non-decreasing with exact
    slope at most ``alpha`` between consecutive knots.  When the domain
    starts at 0 the profile must vanish there.  Evaluation clamps to the
    endpoint values outside the knot range.
    """

    knots: tuple[Fraction, ...]
    values: tuple[Fraction, ...]
    alpha: Fraction

    def __post_init__(self):
        ks, vs = self.knots, self.values
        if len(ks) != len(vs) or not ks:
            raise ParameterError("profile needs matching non-empty knots/values")
        if any(a >= b for a, b in zip(ks, ks[1:])):
            raise ParameterError("profile knots must be strictly ascending")
        if any(v < 0 for v in vs):
            raise ParameterError("profile values must be non-negative")
        if ks[0] == 0 and vs[0] != 0:
            raise ParameterError("profile must vanish at 0")
        if self.alpha < 0:
            raise ParameterError("alpha must be non-negative")
        for k0, k1, v0, v1 in zip(ks, ks[1:], vs, vs[1:]):
            if v1 < v0:
                raise ParameterError("profile must be non-decreasing")
            if v1 - v0 > self.alpha * (k1 - k0):
                raise ParameterError(
                    f"profile slope exceeds alpha={self.alpha} on [{k0}, {k1}]"
                )

    def at(self, u: Rational) -> Fraction:
        x = as_fraction(u)
        ks = self.knots
        if x <= ks[0]:
            return self.values[0]
        if x >= ks[-1]:
            return self.values[-1]
        i = bisect_right(ks, x) - 1
        k0, k1 = ks[i], ks[i + 1]
        v0, v1 = self.values[i], self.values[i + 1]
        return v0 + (v1 - v0) * (x - k0) / (k1 - k0)

    def max_slope(self) -> Fraction:
        return max(
            (v1 - v0) / (k1 - k0)
            for k0, k1, v0, v1 in zip(
                self.knots, self.knots[1:], self.values, self.values[1:]
            )
        ) if len(self.knots) > 1 else Fraction(0)


class EtaBound:
    """A non-negative error allowance eta(u), constant or piecewise-linear.

    ``validate(u_max)`` enforces the configured sublinearity gate
    ``eta(u_max) / u_max <= threshold``; desk-scale data cannot witness a
    true limit, so the gate is a knob rather than a theorem.
    """

    def __init__(self, profile: LipschitzProfile | None = None,
                 constant: Rational | None = None,
                 threshold: Rational = 1):
        if (profile is None) == (constant is None):
            raise ParameterError("provide exactly one of profile/constant")
        self._profile = profile
        self._constant = None if constant is None else as_fraction(constant)
        if self._constant is not None and self._constant < 0:
            raise ParameterError("eta must be non-negative")
        self.threshold = as_fraction(threshold)

    @classmethod
    def const(cls, c: Rational, threshold: Rational = 1) -> "EtaBound":
        return cls(constant=c, threshold=threshold)

    @property
    def constant(self) -> Fraction | None:
        """The constant value, or None when backed by a profile."""
        return self._constant

    def at(self, u: Rational) -> Fraction:
        if self._constant is not None:
            return self._constant
        return self._profile.at(u)

    def validate(self, u_max: Rational) -> None:
        top = as_fraction(u_max)
        if top <= 0:
            raise ParameterError("u_max must be positive")
        if self.at(top) / top > self.threshold:
            raise ParameterError(
                f"eta({top}) / {top} exceeds the sublinearity threshold "
                f"{self.threshold}"
            )

    def __repr__(self):
        if self._constant is not None:
            return f"EtaBound.const({self._constant})"
        return f"EtaBound(profile over {self._profile.knots[0]}..{self._profile.knots[-1]})"


class BranchFn:
    """Base class: evaluable on 0 <= v <= u <= u_max.

    ``certified`` records whether the diagonal/superadditive/Lipschitz
    properties are guaranteed by construction; deliberately broken inputs
    keep evaluating with ``certified=False`` so negative tests can run.
    """

    variant = "abstract"

    def __init__(self, u_max: Rational, certified: bool):
        self.u_max = as_fraction(u_max)
        if self.u_max <= 0:
            raise ParameterError("u_max must be positive")
        self.certified = bool(certified)

    def _domain(self, u: Rational, v: Rational) -> tuple[Fraction, Fraction]:
        uu, vv = as_fraction(u), as_fraction(v)
        if not (0 <= vv <= uu <= self.u_max):
            raise DomainError(
                f"(u, v) = ({u}, {v}) outside 0 <= v <= u <= {self.u_max}"
            )
        return uu, vv

    def value(self, u: Rational, v: Rational):
        raise NotImplementedError


class LiftBranch(BranchFn):
    """``f(u, v) = u * phi(v / u)``, the canonical lift of a spectrum."""

    variant = "lift"

    def __init__(self, spec: Spectrum, u_max: Rational, certified: bool):
        super().__init__(u_max, certified)
        self.spec = spec

    def value(self, u: Rational, v: Rational) -> Fraction:
        uu, vv = self._domain(u, v)
        if uu == 0:
            return Fraction(0)
        return uu * self.spec.eval_exact(vv / uu)


class StripEnvelopeBranch(BranchFn):
    """Envelope ``g(u) - g(v)`` above the base height, steep slope below.

    For ``v >= z`` the value is ``g(u) - g(v)``; for ``v < z`` it is
    ``alpha * (u - v)``.  With ``g`` increasing, alpha-Lipschitz and zero
    up to ``z`` this lies in the certified class.
    """

    variant = "strip_envelope"

    def __init__(self, profile: LipschitzProfile, z: Rational, alpha: Rational,
                 u_max: Rational):
        super().__init__(u_max, certified=True)
        self.profile = profile
        self.z = as_fraction(z)
        self.alpha = as_fraction(alpha)

    def value(self, u: Rational, v: Rational) -> Fraction:
        uu, vv = self._domain(u, v)
        if vv >= self.z:
            return self.profile.at(uu) - self.profile.at(vv)
        return self.alpha * (uu - vv)


class InfBranch(BranchFn):
    """Pointwise minimum of a finite family of branch functions."""

    variant = "inf_family"

    def __init__(self, members, precondition: "PreconditionReport | None" = None):
        members = tuple(members)
        if not members:
            raise ParameterError("inf_branch needs a non-empty family")
        u_max = members[0].u_max
        if any(m.u_max != u_max for m in members):
            raise ParameterError("inf_branch members must share u_max")
        certified = all(m.certified for m in members)
        if precondition is not None and not precondition.passed:
            certified = False
        super().__init__(u_max, certified)
        self.members = members
        self.precondition = precondition

    def value(self, u: Rational, v: Rational):
        self._domain(u, v)
        return min(m.value(u, v) for m in self.members)


class GridBranch(BranchFn):
    """Explicit samples on the integer grid.

    Used for perturbation experiments and as the parsing target of the
    ``u,v,value`` CSV format.  Values are exact Fractions.  ``u`` must be
    an integer; a fractional ``v`` rounds up to the next integer, the same
    pessimistic convention the table variant uses, so windowed limits work
    on grid-backed functions too.
    """

    variant = "grid"

    def __init__(self, samples: dict[tuple[int, int], Rational], u_max: int,
                 certified: bool = False):
        super().__init__(u_max, certified)
        self.samples = {
            (int(u), int(v)): as_fraction(x) for (u, v), x in samples.items()
        }
        for u in range(int(u_max) + 1):
            for v in range(u + 1):
                if (u, v) not in self.samples:
                    raise ParameterError(f"grid sample missing at ({u}, {v})")

    @classmethod
    def from_function(cls, fn, u_max: int, certified: bool = False) -> "GridBranch":
        samples = {
            (u, v): fn(u, v) for u in range(int(u_max) + 1) for v in range(u + 1)
        }
        return cls(samples, u_max, certified)

    def value(self, u: Rational, v: Rational) -> Fraction:
        uu, vv = self._domain(u, v)
        if uu.denominator != 1:
            raise DomainError("grid branch functions need integer u")
        v_int = min(int(math.ceil(vv)), int(uu))
        return self.samples[(int(uu), v_int)]


class TableBranch(BranchFn):
    """Measured count table wrapped as a branch function.

    Evaluation requires an integer ``u`` and rounds ``v`` up to the next
    integer (the pessimistic direction for lower-type estimates).  The
    value is the float log2 of the stored count; exact integer counts are
    available through ``count`` and are what the property checks use.
    """

    variant = "table"

    def __init__(self, table):
        super().__init__(table.u_max, certified=False)
        self.table = table

    def count(self, u: int, v: int) -> int:
        return self.table.count(u, v)

    def value(self, u: Rational, v: Rational) -> float:
        uu, vv = self._domain(u, v)
        if uu.denominator != 1:
            raise DomainError("table branch functions need integer u")
        v_int = int(math.ceil(vv))
        u_int = int(uu)
        if v_int > u_int:
            v_int = u_int
        return self.table.log2(u_int, v_int)


def lift(spec: Spectrum, u_max: Rational, cert_grid: int = 64) -> LiftBranch:
    """Lift a spectrum to the two-scale domain.

    The lift is certified when the spectrum passes the superadditivity and
    weak-Lipschitz checks (evaluated exactly for piecewise-linear input);
    otherwise it is still constructed, flagged uncertified, because the
    negative tests need broken examples to probe the checkers.
    """
    ok = (
        check_inequality(spec, "S", cert_grid).passed
        and check_inequality(spec, "W", cert_grid).passed
    )
    return LiftBranch(spec, u_max, certified=ok)


def strip_envelope(g: LipschitzProfile, z: Rational, alpha: Rational,
                   u_max: Rational | None = None) -> StripEnvelopeBranch:
    """Build the envelope with base height ``z`` from profile ``g``.

    Requires ``g`` to vanish on [0, z]; rejects profiles steeper than
    ``alpha``.  ``u_max`` defaults to the last knot of ``g``.
    """
    zz = as_fraction(z)
    if zz < 0:
        raise ParameterError("z must be non-negative")
    if g.at(zz) != 0:
        raise ParameterError(f"profile must vanish on [0, z]; g({zz}) = {g.at(zz)}")
    a = as_fraction(alpha)
    if len(g.knots) > 1 and g.max_slope() > a:
        raise ParameterError("profile slope exceeds the requested alpha")
    top = g.knots[-1] if u_max is None else as_fraction(u_max)
    return StripEnvelopeBranch(g, zz, a, top)


def inf_branch(members) -> InfBranch:
    """Pointwise minimum; certified when every member is."""
    return InfBranch(members)


def max_lipschitz_minorant(samples, alpha: Rational) -> LipschitzProfile:
    """Largest non-decreasing alpha-Lipschitz function below the samples.

    Samples must sit on a uniform knot grid.  Computed by the forward pass
    ``p[k] = min(f[k], p[k-1] + alpha*delta)`` followed by a suffix-minimum
    pass; the forward pass enforces the Lipschitz ceiling coming from the
    left, the suffix pass pulls values down to the smallest reachable
    future sample, and together they realize the pointwise-maximal
    feasible profile.
    """
    pts = [(as_fraction(u), as_fraction(x)) for u, x in samples]
    if len(pts) < 1:
        raise ParameterError("need at least one sample")
    if any(u1 <= u0 for (u0, _), (u1, _) in zip(pts, pts[1:])):
        raise ParameterError("sample knots must be strictly ascending")
    if any(x < 0 for _, x in pts):
        raise ParameterError("sample values must be non-negative")
    a = as_fraction(alpha)
    if len(pts) > 1:
        delta = pts[1][0] - pts[0][0]
        for (u0, _), (u1, _) in zip(pts[1:], pts[2:]):
            if u1 - u0 != delta:
                raise ParameterError("sample knots must form a uniform grid")
        step = a * delta
        forward = [pts[0][1]]
        for _, x in pts[1:]:
            forward.append(min(x, forward[-1] + step))
        out = list(forward)
        for k in range(len(out) - 2, -1, -1):
            out[k] = min(out[k], out[k + 1])
    else:
        out = [pts[0][1]]
    return LipschitzProfile(tuple(u for u, _ in pts), tuple(out), a)


@dataclass(frozen=True)
class PreconditionReport:
    """Result of scanning regularization preconditions on the sample grid."""

    passed: bool
    diagonal_witness: tuple[int, ...] | None
    superadd_violation: float
    superadd_witness: tuple[int, int, int] | None
    lipschitz_violation: float
    lipschitz_witness: tuple[int, int, int] | None


def _scan_preconditions(f: BranchFn, alpha: Fraction, eta: EtaBound,
                        grid: int) -> PreconditionReport:
    top = int(f.u_max)
    us = list(range(0, top + 1, grid))
    vals = {}
    for u in us:
        for v in us:
            if v <= u:
                vals[(u, v)] = f.value(u, v)
    diag = next(((u,) for u in us if vals[(u, u)] != 0), None)
    worst_s, wit_s = Fraction(0), None
    worst_l, wit_l = Fraction(0), None
    for u in us:
        eta_u = eta.at(u)
        for w in us:
            if w > u:
                break
            for v in us:
                if v > w:
                    break
                m_s = vals[(u, w)] + vals[(w, v)] - vals[(u, v)]
                if m_s > worst_s:
                    worst_s, wit_s = m_s, (u, w, v)
                m_l = vals[(u, v)] - vals[(w, v)] - alpha * (u - w) - eta_u
                if m_l > worst_l:
                    worst_l, wit_l = m_l, (u, w, v)
    return PreconditionReport(
        passed=diag is None and worst_s == 0 and worst_l == 0,
        diagonal_witness=diag,
        superadd_violation=float(worst_s),
        superadd_witness=wit_s,
        lipschitz_violation=float(worst_l),
        lipschitz_witness=wit_l,
    )


def regularize(f: BranchFn, alpha: Rational, eta: EtaBound,
               grid: int = 1) -> InfBranch:
    """Replace ``f`` by a certified branch function within ``eta`` below it.

    For every integer base height ``z`` the one-variable slice
    ``u -> f(u, z)`` is replaced by its maximal increasing alpha-Lipschitz
    minorant and wrapped into a strip envelope; the output is the pointwise
    infimum of those envelopes.  On the sample grid the output ``g``
    satisfies ``f - eta <= g <= f`` and the certified-class properties
    exactly, provided ``f`` satisfies the scanned preconditions (zero
    diagonal, superadditivity, and u-Lipschitz up to ``eta``).  Violations
    do not abort the construction: they are reported on the returned
    object's ``precondition`` attribute and clear its ``certified`` flag,
    so deliberately broken inputs can still be regularized and inspected.
    """
    a = as_fraction(alpha)
    if a < 0:
        raise ParameterError("alpha must be non-negative")
    if grid < 1:
        raise ParameterError("grid spacing must be a positive integer")
    eta.validate(f.u_max)
    report = _scan_preconditions(f, a, eta, grid)
    top = int(f.u_max)
    envelopes = []
    for z in range(0, top + 1, grid):
        knots = list(range(z, top + 1, grid))
        if knots[-1] != top:
            knots.append(top)
        samples = [(u, f.value(u, z)) for u in knots]
        minorant = max_lipschitz_minorant(samples, a)
        envelopes.append(StripEnvelopeBranch(minorant, z, a, f.u_max))
    return InfBranch(envelopes, precondition=report)


def lambda_limit(f: BranchFn, theta: Rational, u_min: Rational,
                 u_max: Rational | None = None, step: Rational = 1):
    """Finite-window surrogate of the normalized limit of ``f``.

    Returns ``min f(u, theta*u) / u`` over ``u = u_min, u_min+step, ...``
    up to ``u_max`` (default: the function's own bound).  For lift-backed
    functions this equals the spectrum value at ``theta`` at every ``u``,
    so the window does not matter; for measured tables it is a pessimistic
    finite-scale reading of the liminf.
    """
    th = as_fraction(theta)
    if not (0 < th <= 1):
        raise ParameterError("theta must lie in (0, 1]")
    lo = as_fraction(u_min)
    hi = f.u_max if u_max is None else as_fraction(u_max)
    st = as_fraction(step)
    if st <= 0 or lo <= 0 or lo > hi or hi > f.u_max:
        raise ParameterError(
            f"empty or out-of-range window [{u_min}, {u_max}] step {step}"
        )
    best = None
    u = lo
    while u <= hi:
        val = f.value(u, th * u)
        ratio = val / u
        if best is None or ratio < best:
            best = ratio
        u += st
    return best


@dataclass(frozen=True)
class BranchReport:
    """Property-check outcome for a branch function on a sample grid."""

    passed: bool
    superadd_violation: float
    superadd_witness: tuple | None
    lipschitz_violation: float
    lipschitz_witness: tuple | None
    tolerance: float


def check_branch(f: BranchFn, alpha: Rational, grid: int = 1,
                 tolerance: float = 0.0) -> BranchReport:
    """Verify superadditivity and the u-Lipschitz bound on sampled triples.

    Exact variants are compared in Fractions; table-backed functions are
    compared through their integer counts (``c(u,v) >= c(u,w) * c(w,v)``),
    so a tolerance of zero is a meaningful request in both cases.
    """
    a = as_fraction(alpha)
    if grid < 1:
        raise ParameterError("grid spacing must be a positive integer")
    top = int(f.u_max)
    us = list(range(0, top + 1, grid))
    table_mode = isinstance(f, TableBranch)
    if table_mode:
        cnt = {(u, v): f.count(u, v) for u in us for v in us if v <= u}
        logs = {uv: math.log2(c) for uv, c in cnt.items()}
    else:
        vals = {(u, v): f.value(u, v) for u in us for v in us if v <= u}
    worst_s, wit_s = None, None
    worst_l, wit_l = None, None
    for u in us:
        for w in us:
            if w > u:
                break
            for v in us:
                if v > w:
                    break
                if table_mode:
                    if cnt[(u, w)] * cnt[(w, v)] > cnt[(u, v)]:
                        m_s = max(
                            logs[(u, w)] + logs[(w, v)] - logs[(u, v)], 1e-15
                        )
                    else:
                        m_s = logs[(u, w)] + logs[(w, v)] - logs[(u, v)]
                    m_l = logs[(u, v)] - logs[(w, v)] - float(a) * (u - w)
                else:
                    m_s = vals[(u, w)] + vals[(w, v)] - vals[(u, v)]
                    m_l = vals[(u, v)] - vals[(w, v)] - a * (u - w)
                if worst_s is None or m_s > worst_s:
                    worst_s, wit_s = m_s, (u, w, v)
                if worst_l is None or m_l > worst_l:
                    worst_l, wit_l = m_l, (u, w, v)
    v_s = max(0.0, float(worst_s))
    v_l = max(0.0, float(worst_l))
    return BranchReport(
        passed=v_s <= tolerance and v_l <= tolerance,
        superadd_violation=v_s,
        superadd_witness=wit_s,
        lipschitz_violation=v_l,
        lipschitz_witness=wit_l,
        tolerance=tolerance,
    )


@dataclass(frozen=True)
class EquivReport:
    """Outcome of the shifted-sandwich comparison of two branch functions."""

    passed: bool
    worst_violation: float
    witness: tuple[int, int] | None
    direction: str | None
    shift: float


def equiv_compare(f: BranchFn, g: BranchFn, z: Rational) -> EquivReport:
    """Check ``f(u, v+z) - z <= g(u, v)`` and the mirrored clause.

    Sampled on the integer grid; pairs where ``v + z`` would cross the
    diagonal are skipped, matching the domain of the definition.  Returns
    the worst margin, its location, and which clause was binding.
    """
    zz = as_fraction(z)
    if zz < 0:
        raise ParameterError("shift z must be non-negative")
    if f.u_max != g.u_max:
        raise ParameterError("equiv_compare requires a common u_max")
    top = int(f.u_max)
    worst = None
    witness = None
    direction = None
    for u in range(top + 1):
        for v in range(u + 1):
            if v + zz > u:
                continue
            m1 = f.value(u, v + zz) - zz - g.value(u, v)
            m2 = g.value(u, v + zz) - zz - f.value(u, v)
            for name, m in (("f-vs-g", m1), ("g-vs-f", m2)):
                if worst is None or m > worst:
                    worst, witness, direction = m, (u, v), name
    violation = max(0.0, float(worst)) if worst is not None else 0.0
    return EquivReport(
        passed=violation == 0.0,
        worst_violation=violation,
        witness=witness,
        direction=direction,
        shift=float(zz),
    )


# ---------------------------------------------------------------------------
# serialization

def branch_to_csv(f: BranchFn, grid: int = 1) -> str:
    """CSV ``u,v,value`` over the integer sample grid."""
    rows = ["u,v,value"]
    top = int(f.u_max)
    for u in range(0, top + 1, grid):
        for v in range(0, u + 1, grid):
            rows.append(f"{u},{v},{fmt_decimal(f.value(u, v))}")
    return "\n".join(rows) + "\n"


def profile_to_csv(profile: LipschitzProfile) -> str:
    """CSV ``u,value`` at the profile's knots (exact where terminating)."""
    rows = ["u,value"]
    for k, v in zip(profile.knots, profile.values):
        rows.append(f"{fmt_number(k)},{fmt_number(v)}")
    return "\n".join(rows) + "\n"
