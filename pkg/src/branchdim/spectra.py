"""Piecewise-linear spectrum functions and their classification inequalities.

A *spectrum* here is a continuous piecewise-linear function
``phi : [0, 1] -> [0, alpha]`` describing how a dimension-like quantity,
scaled by ``(1 - theta)``, varies with the scale-ratio exponent ``theta``.
The module provides:

* exact constructors for the three named families used throughout the
  toolkit (``make_phi``, ``make_psi``, ``make_q``),
* exact pointwise minima of families (``min_family``),
* decision procedures for the inequalities that classify which functions
  occur as spectra of actual sets (``check_inequality``, ``check_joint``).

All breakpoint arithmetic is done in :class:`fractions.Fraction`; the
inequality checks evaluate on a grid augmented with every breakpoint and
every pairwise breakpoint ratio, which for piecewise-linear inputs covers
the corner points of every affine region of the two-parameter margin
functions.  Reports carry float margins for readability.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, FormatError, ParameterError
from ._num import Rational, as_fraction, fmt_decimal, fmt_number

__all__ = [
    "Spectrum",
    "FamilyParams",
    "InequalityReport",
    "eval_spectrum",
    "make_phi",
    "make_psi",
    "make_q",
    "min_family",
    "check_inequality",
    "check_joint",
    "spectrum_from_breakpoints",
    "spectrum_to_text",
    "spectrum_from_text",
    "spectrum_to_csv",
]

INEQUALITIES = ("S", "W", "M", "L", "AQ")


@dataclass(frozen=True)
class FamilyParams:
    """Parameters of a named spectrum family member.

    ``kind`` is one of ``phi``, ``psi``, ``q``.  The two-piece families use
    ``(alpha, lam, t)``; the four-piece family uses ``(alpha, a1, a2, kappa)``
    together with the derived interior slopes ``alpha1 >= alpha2 >= kappa``.
    """

    kind: str
    alpha: Fraction
    lam: Fraction | None = None
    t: Fraction | None = None
    a1: Fraction | None = None
    a2: Fraction | None = None
    kappa: Fraction | None = None
    alpha1: Fraction | None = None
    alpha2: Fraction | None = None


@dataclass(frozen=True)
class Spectrum:
    """A continuous piecewise-linear function on [0, 1].

    ``breakpoints`` are strictly ascending Fractions with first 0 and last 1;
    ``values`` are the exact function values there, all within
    ``[0, alpha]``.  Evaluation is affine between breakpoints.  Instances
    are immutable and safe to share between threads.
    """

    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]
    alpha: Fraction
    kind: str = "generic"
    params: FamilyParams | None = None

    def __post_init__(self):
        bps, vals = self.breakpoints, self.values
        if len(bps) != len(vals) or len(bps) < 2:
            raise ParameterError("need matching breakpoints/values, at least two")
        if bps[0] != 0 or bps[-1] != 1:
            raise ParameterError("breakpoints must start at 0 and end at 1")
        if any(b1 >= b2 for b1, b2 in zip(bps, bps[1:])):
            raise ParameterError("breakpoints must be strictly ascending")
        if self.alpha < 0:
            raise ParameterError("alpha must be non-negative")
        for v in vals:
            if v < 0 or v > self.alpha:
                raise ParameterError(
                    f"value {v} outside [0, {self.alpha}]"
                )

    def __call__(self, theta: Rational):
        return eval_spectrum(self, theta)

    def eval_exact(self, theta: Fraction) -> Fraction:
        """Exact value at an in-range Fraction argument (no domain check)."""
        bps = self.breakpoints
        i = bisect_right(bps, theta) - 1
        if i == len(bps) - 1:
            return self.values[-1]
        x0, x1 = bps[i], bps[i + 1]
        y0, y1 = self.values[i], self.values[i + 1]
        return y0 + (y1 - y0) * (theta - x0) / (x1 - x0)

    def piece_slopes(self) -> tuple[Fraction, ...]:
        """Exact slope of each affine piece, left to right."""
        return tuple(
            (v1 - v0) / (x1 - x0)
            for (x0, x1, v0, v1) in zip(
                self.breakpoints, self.breakpoints[1:], self.values, self.values[1:]
            )
        )


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of a single inequality check.

    ``worst_violation`` is the positive part of the worst margin (0.0 when
    the inequality holds everywhere sampled), so ``passed`` is equivalent
    to ``worst_violation <= tolerance``.  ``worst_margin`` keeps the signed
    value for auditing how much slack a passing check had.  ``witness`` is
    the sample pair where the worst margin occurred.
    """

    inequality: str
    passed: bool
    worst_violation: float
    witness: tuple[float, float] | None
    tolerance: float
    worst_margin: float = float("-inf")
    binding: str | None = None


def eval_spectrum(spec: Spectrum, theta: Rational):
    """Evaluate ``spec`` at ``theta`` in [0, 1].

    Returns a Fraction for exact inputs (int/Fraction/str), a float for
    float input.  Raises :class:`DomainError` outside [0, 1].
    """
    want_float = isinstance(theta, float)
    x = as_fraction(theta)
    if x < 0 or x > 1:
        raise DomainError(f"theta={theta} outside [0, 1]")
    y = spec.eval_exact(x)
    return float(y) if want_float else y


def spectrum_from_breakpoints(
    breakpoints, values, alpha: Rational, kind: str = "generic"
) -> Spectrum:
    """Build a validated Spectrum from raw breakpoint/value sequences."""
    return Spectrum(
        tuple(as_fraction(b) for b in breakpoints),
        tuple(as_fraction(v) for v in values),
        as_fraction(alpha),
        kind=kind,
    )


def _check_two_piece_params(alpha: Fraction, lam: Fraction, t: Fraction) -> None:
    if alpha < 0:
        raise ParameterError("alpha must be non-negative")
    if not (0 < lam <= 1):
        raise ParameterError(f"lambda={lam} must lie in (0, 1]")
    if not (0 <= t <= alpha * (1 - lam)):
        raise ParameterError(
            f"t={t} outside [0, alpha*(1-lambda)] = [0, {alpha * (1 - lam)}]; "
            "the slope ordering of the two pieces would be violated"
        )


def make_phi(alpha: Rational, lam: Rational, t: Rational) -> Spectrum:
    """Two-piece affine spectrum through (0, alpha), (lam, t), (1, 0).

    Requires ``0 <= t <= alpha*(1-lam)`` so the left piece falls at least
    as steeply as the right one.  With ``t`` equal to the upper bound the
    two pieces are collinear and the function is the straight segment from
    (0, alpha) to (1, 0).
    """
    a, l, tt = as_fraction(alpha), as_fraction(lam), as_fraction(t)
    _check_two_piece_params(a, l, tt)
    params = FamilyParams(kind="phi", alpha=a, lam=l, t=tt)
    if l == 1:
        return Spectrum((Fraction(0), Fraction(1)), (a, Fraction(0)), a, "phi", params)
    return Spectrum(
        (Fraction(0), l, Fraction(1)), (a, tt, Fraction(0)), a, "phi", params
    )


def make_psi(alpha: Rational, lam: Rational, t: Rational) -> Spectrum:
    """Two-piece spectrum with constant slope ``-alpha`` left of ``lam``.

    The left piece is ``t + alpha*(lam - theta)`` on [0, lam]; the right
    piece is ``t*(1-theta)/(1-lam)``, the same right piece as
    ``make_phi``.  The result lies below the matching ``make_phi`` output
    everywhere on (0, lam), with equality exactly when ``t`` equals its
    upper bound ``alpha*(1-lam)``.  Parameter constraints are those of
    ``make_phi``; the value at 0, ``t + alpha*lam``, then automatically
    stays within [0, alpha].
    """
    a, l, tt = as_fraction(alpha), as_fraction(lam), as_fraction(t)
    _check_two_piece_params(a, l, tt)
    params = FamilyParams(kind="psi", alpha=a, lam=l, t=tt)
    if l == 1:
        return Spectrum((Fraction(0), Fraction(1)), (a, Fraction(0)), a, "psi", params)
    return Spectrum(
        (Fraction(0), l, Fraction(1)),
        (tt + a * l, tt, Fraction(0)),
        a,
        "psi",
        params,
    )


def make_q(alpha: Rational, a1: Rational, a2: Rational, kappa: Rational) -> Spectrum:
    """Four-piece spectrum with a non-monotone normalized profile.

    The function is pinned down by its geometric description rather than a
    closed case formula: it is continuous with q(0) = alpha and q(1) = 0,
    has slope ``-kappa`` on [a1*a2, a1] and on [a2, 1], and on [0, a1*a2]
    and [a1, a2] lies on chords through (0, alpha) (the configurations
    where the weak-Lipschitz inequality is tight).  Solving the continuity
    chain backwards from q(1) = 0 gives

        q(a2)    = kappa*(1 - a2)
        alpha2   = (alpha - q(a2)) / a2          (slope on [a1, a2])
        q(a1)    = alpha - alpha2*a1
        q(a1*a2) = q(a1) + kappa*(a1 - a1*a2)
        alpha1   = (alpha - q(a1*a2)) / (a1*a2)  (slope on [0, a1*a2])

    With ``a1 <= a2`` and ``0 <= kappa <= alpha`` the derived slopes obey
    ``kappa <= alpha2 <= alpha1`` automatically (strictly when kappa < alpha
    and a2 < 1); unordered ``a1 > a2`` is rejected because the breakpoints
    would not be ascending.
    """
    a = as_fraction(alpha)
    b1, b2, k = as_fraction(a1), as_fraction(a2), as_fraction(kappa)
    if a < 0:
        raise ParameterError("alpha must be non-negative")
    if not (0 < b1 <= 1 and 0 < b2 <= 1):
        raise ParameterError("a1 and a2 must lie in (0, 1]")
    if not (0 <= k <= a):
        raise ParameterError(f"kappa={k} must lie in [0, alpha]")
    if b1 > b2:
        raise ParameterError(
            "a1 must not exceed a2 (breakpoints 0 < a1*a2 <= a1 <= a2 <= 1)"
        )
    q_a2 = k * (1 - b2)
    alpha2 = (a - q_a2) / b2
    q_a1 = a - alpha2 * b1
    q_a12 = q_a1 + k * (b1 - b1 * b2)
    alpha1 = (a - q_a12) / (b1 * b2)
    if not (k <= alpha2 <= alpha1):
        raise ParameterError(
            f"derived slopes unordered: alpha1={alpha1}, alpha2={alpha2}, kappa={k}"
        )
    params = FamilyParams(
        kind="q", alpha=a, a1=b1, a2=b2, kappa=k, alpha1=alpha1, alpha2=alpha2
    )
    raw = [
        (Fraction(0), a),
        (b1 * b2, q_a12),
        (b1, q_a1),
        (b2, q_a2),
        (Fraction(1), Fraction(0)),
    ]
    bps: list[Fraction] = []
    vals: list[Fraction] = []
    for x, y in raw:
        if bps and x == bps[-1]:
            if y != vals[-1]:  # degenerate interval must collapse consistently
                raise ParameterError("inconsistent degenerate breakpoint")
            continue
        bps.append(x)
        vals.append(y)
    return Spectrum(tuple(bps), tuple(vals), a, "q", params)


def _pieces(spec: Spectrum) -> list[tuple[Fraction, Fraction, Fraction, Fraction]]:
    """Affine pieces as (x0, x1, intercept, slope)."""
    out = []
    for x0, x1, y0, y1 in zip(
        spec.breakpoints, spec.breakpoints[1:], spec.values, spec.values[1:]
    ):
        slope = (y1 - y0) / (x1 - x0)
        out.append((x0, x1, y0 - slope * x0, slope))
    return out


def min_family(specs) -> Spectrum:
    """Exact pointwise minimum of spectra sharing one alpha.

    The output's breakpoints are the union of the inputs' breakpoints plus
    every crossing point of two input pieces, so the minimum is again an
    exact piecewise-linear Spectrum.
    """
    specs = list(specs)
    if not specs:
        raise ParameterError("min_family needs a non-empty family")
    alpha = specs[0].alpha
    if any(s.alpha != alpha for s in specs):
        raise ParameterError("min_family requires a common alpha")
    if len(specs) == 1:
        return specs[0]

    knots: set[Fraction] = set()
    for s in specs:
        knots.update(s.breakpoints)
    base = sorted(knots)
    pieces = [_pieces(s) for s in specs]

    def piece_at(idx: int, x0: Fraction):
        for (p0, p1, a, b) in pieces[idx]:
            if p0 <= x0 < p1:
                return a, b
        return pieces[idx][-1][2], pieces[idx][-1][3]

    crossings: set[Fraction] = set()
    for x0, x1 in zip(base, base[1:]):
        for i in range(len(specs)):
            ai, bi = piece_at(i, x0)
            for j in range(i + 1, len(specs)):
                aj, bj = piece_at(j, x0)
                if bi == bj:
                    continue
                x = (aj - ai) / (bi - bj)
                if x0 < x < x1:
                    crossings.add(x)
    knots.update(crossings)
    bps = tuple(sorted(knots))
    vals = tuple(min(s.eval_exact(x) for s in specs) for x in bps)
    return Spectrum(bps, vals, alpha, kind="min")


def _sample_points(spec: Spectrum, grid_resolution: int) -> list[Fraction]:
    """Grid on (0, 1] augmented with breakpoints and breakpoint ratios.

    For piecewise-linear spectra the two-parameter margin functions of the
    (S)/(W)/(AQ) checks are bilinear on regions whose corners have both
    coordinates of the form b_i or b_i/b_j, so including those makes the
    sampled extremum the true extremum.
    """
    pts = {Fraction(i, grid_resolution) for i in range(1, grid_resolution + 1)}
    bps = [b for b in spec.breakpoints if 0 < b <= 1]
    pts.update(bps)
    for bi in bps:
        for bj in bps:
            r = bi / bj
            if 0 < r <= 1:
                pts.add(r)
    return sorted(pts)


def _m_ratio_sequence(spec: Spectrum, points: list[Fraction]):
    """Values of phi(theta)/(1-theta) over the sample, with a limit at 1.

    At theta = 1 the ratio is the limit slope: the negated slope of the
    last piece when phi(1) = 0, and +infinity otherwise (the normalized
    profile blows up when phi does not vanish at 1).
    """
    out = []
    for x in points:
        if x == 1:
            if spec.values[-1] == 0:
                out.append(-spec.piece_slopes()[-1])
            else:
                out.append(math.inf)
        else:
            out.append(spec.eval_exact(x) / (1 - x))
    return out


def check_inequality(
    spec: Spectrum,
    inequality: str,
    grid_resolution: int = 512,
    tolerance: float = 1e-9,
) -> InequalityReport:
    """Check one classification inequality and report the worst margin.

    Inequalities, for all lambda, theta in (0, 1]:

    * ``S``  phi(lambda*theta) >= phi(theta) + theta*phi(lambda)
    * ``W``  phi(lambda*theta) <= (1-theta)*alpha + theta*phi(lambda)
    * ``M``  phi(theta1)/(1-theta1) >= phi(theta2)/(1-theta2) for
      theta1 < theta2, the value at 1 being the limit slope
    * ``L``  every piece slope bounded by alpha in absolute value
      (exactly the alpha-Lipschitz property for piecewise-linear phi)
    * ``AQ`` phi(theta) + theta*phi(lambda) >= phi(lambda*theta)
      and phi(lambda*theta) >= phi(theta)

    A failed check is a report with ``passed=False``, not an error.
    """
    if inequality not in INEQUALITIES:
        raise ParameterError(f"unknown inequality {inequality!r}")
    if grid_resolution < 2:
        raise ParameterError("grid_resolution must be at least 2")

    if inequality == "L":
        alpha = spec.alpha
        worst = None
        witness = None
        for x0, x1, y0, y1 in zip(
            spec.breakpoints, spec.breakpoints[1:], spec.values, spec.values[1:]
        ):
            margin = abs((y1 - y0) / (x1 - x0)) - alpha
            if worst is None or margin > worst:
                worst, witness = margin, (float(x0), float(x1))
        return _report(inequality, worst, witness, tolerance)

    points = _sample_points(spec, grid_resolution)

    if inequality == "M":
        ratios = _m_ratio_sequence(spec, points)
        worst = None
        witness = None
        best = ratios[0]
        best_at = points[0]
        for x, r in zip(points[1:], ratios[1:]):
            margin = r - best if not math.isinf(r) else (
                math.inf if not math.isinf(best) else Fraction(0)
            )
            if worst is None or margin > worst:
                worst, witness = margin, (float(best_at), float(x))
            if r < best:
                best, best_at = r, x
        return _report(inequality, worst, witness, tolerance)

    vals = {x: spec.eval_exact(x) for x in points}
    alpha = spec.alpha
    worst = None
    witness = None
    for lam in points:
        v_lam = vals[lam]
        for theta in points:
            prod_val = spec.eval_exact(lam * theta)
            if inequality == "S":
                margin = vals[theta] + theta * v_lam - prod_val
            elif inequality == "W":
                margin = prod_val - (1 - theta) * alpha - theta * v_lam
            else:  # AQ: worst of the two clauses at this pair
                margin = max(
                    prod_val - vals[theta] - theta * v_lam,
                    vals[theta] - prod_val,
                )
            if worst is None or margin > worst:
                worst, witness = margin, (float(lam), float(theta))
    return _report(inequality, worst, witness, tolerance)


def _report(
    inequality: str,
    worst,
    witness,
    tolerance: float,
    binding: str | None = None,
) -> InequalityReport:
    margin = float(worst) if worst is not None else float("-inf")
    violation = max(0.0, margin)
    return InequalityReport(
        inequality=inequality,
        passed=violation <= tolerance,
        worst_violation=violation,
        witness=witness,
        tolerance=tolerance,
        worst_margin=margin,
        binding=binding,
    )


def check_joint(
    phi_lower: Spectrum,
    phi_assouad: Spectrum,
    grid_resolution: int = 512,
    tolerance: float = 1e-9,
) -> InequalityReport:
    """Check the joint chains tying a lower-type and an Assouad-type spectrum.

    For all lambda, theta in (0, 1]:

        phiL(theta) <= phiL(lambda*theta) - theta*phiL(lambda) <= phiA(theta)
        theta*phiL(lambda) <= phiA(lambda*theta) - phiA(theta) <= theta*phiA(lambda)

    Both chains are evaluated on the shared grid plus both spectra's
    breakpoint-derived points; the report's ``binding`` names the clause
    where the worst margin occurred.
    """
    if phi_lower.alpha != phi_assouad.alpha:
        raise ParameterError("joint check requires a common alpha")
    if grid_resolution < 2:
        raise ParameterError("grid_resolution must be at least 2")
    pts = sorted(
        set(_sample_points(phi_lower, grid_resolution))
        | set(_sample_points(phi_assouad, grid_resolution))
    )
    vl = {x: phi_lower.eval_exact(x) for x in pts}
    va = {x: phi_assouad.eval_exact(x) for x in pts}
    worst = None
    witness = None
    binding = None
    for lam in pts:
        for theta in pts:
            prod = lam * theta
            mid_l = phi_lower.eval_exact(prod) - theta * vl[lam]
            diff_a = phi_assouad.eval_exact(prod) - va[theta]
            clauses = (
                ("lower-chain lower bound", vl[theta] - mid_l),
                ("lower-chain upper bound", mid_l - va[theta]),
                ("assouad-chain lower bound", theta * vl[lam] - diff_a),
                ("assouad-chain upper bound", diff_a - theta * va[lam]),
            )
            for name, margin in clauses:
                if worst is None or margin > worst:
                    worst, witness, binding = margin, (float(lam), float(theta)), name
    report = _report("JOINT", worst, witness, tolerance, binding=binding)
    return report


# ---------------------------------------------------------------------------
# serialization

def spectrum_to_text(spec: Spectrum) -> str:
    """Line format: family one-liner when available, else alpha + pairs."""
    if spec.params is not None:
        p = spec.params
        if p.kind in ("phi", "psi"):
            return (
                f"family={p.kind} alpha={fmt_number(p.alpha)} "
                f"lambda={fmt_number(p.lam)} t={fmt_number(p.t)}\n"
            )
        if p.kind == "q":
            return (
                f"family=q alpha={fmt_number(p.alpha)} a1={fmt_number(p.a1)} "
                f"a2={fmt_number(p.a2)} kappa={fmt_number(p.kappa)}\n"
            )
    lines = [f"alpha={fmt_number(spec.alpha)}"]
    for b, v in zip(spec.breakpoints, spec.values):
        lines.append(f"{fmt_number(b)} {fmt_number(v)}")
    return "\n".join(lines) + "\n"


def _parse_kv_line(line: str) -> dict[str, str]:
    out = {}
    for token in line.split():
        if "=" not in token:
            raise FormatError(f"expected key=value, got {token!r}")
        k, _, v = token.partition("=")
        out[k] = v
    return out


def spectrum_from_text(text: str) -> Spectrum:
    """Parse either a ``family=...`` one-liner or an alpha+pairs listing."""
    lines = [
        ln.strip()
        for ln in text.splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise FormatError("empty spectrum text")
    first = lines[0]
    try:
        if first.startswith("family="):
            kv = _parse_kv_line(first)
            kind = kv.pop("family")
            if kind in ("phi", "psi"):
                maker = make_phi if kind == "phi" else make_psi
                return maker(kv["alpha"], kv["lambda"], kv["t"])
            if kind == "q":
                return make_q(kv["alpha"], kv["a1"], kv["a2"], kv["kappa"])
            raise FormatError(f"unknown family kind {kind!r}")
        if not first.startswith("alpha="):
            raise FormatError("spectrum text must start with family= or alpha=")
        alpha = as_fraction(first.partition("=")[2])
        bps = []
        vals = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise FormatError(f"expected 'theta value', got {ln!r}")
            bps.append(as_fraction(parts[0]))
            vals.append(as_fraction(parts[1]))
        return spectrum_from_breakpoints(bps, vals, alpha)
    except FormatError:
        raise
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"bad spectrum text: {exc}") from exc
    except ParameterError as exc:
        raise FormatError(f"bad spectrum parameters: {exc}") from exc


def spectrum_to_csv(spec: Spectrum, resolution: int = 256) -> str:
    """CSV sampling ``theta,value`` at resolution+1 evenly spaced thetas."""
    if resolution < 1:
        raise ParameterError("resolution must be positive")
    rows = ["theta,value"]
    for i in range(resolution + 1):
        theta = Fraction(i, resolution)
        rows.append(f"{fmt_decimal(theta)},{fmt_decimal(spec.eval_exact(theta))}")
    return "\n".join(rows) + "\n"
