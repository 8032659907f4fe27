"""Coefficient triples (a, rho, b) of the operator (rho/2)(a u')' + b u'.

This module owns the deterministic preprocessing chain of the simulator:

* representation and validation of piecewise-smooth coefficients,
* drift removal by an exponential change of the pair (a, rho),
* the natural scale S and speed density of the diffusion,
* piecewise-constant discretization on a target mesh,
* the piecewise-linear change of scale that turns the discretized process
  into a unit Brownian motion between interfaces, with one skewness
  parameter per interface.

Everything here is pure and immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from .expressions import (
    Constant,
    Expression,
    ShiftedProduct,
    expression_from_json,
)

__all__ = [
    "Piece",
    "Coefficients",
    "Violation",
    "ValidationReport",
    "ScaleData",
    "StepCoefficients",
    "UnitScaleMap",
    "validate",
    "remove_drift",
    "natural_scale",
    "discretize",
    "build_scale_map",
    "load_coefficients",
    "coefficients_digest",
    "DriftRemovalError",
    "QuadratureError",
]

#: minimal admissible gap between breakpoints (relative to position scale)
MIN_GAP = 1e-12

#: quadrature absolute tolerance for scale/speed integrals
QUAD_TOL = 1e-12


class DriftRemovalError(ValueError):
    """Drift removal needs a bounded domain (localize first)."""


class QuadratureError(RuntimeError):
    """A piece integral failed to converge to the requested tolerance."""


@dataclass(frozen=True)
class Piece:
    """One maximal smoothness interval [x_left, next breakpoint)."""

    x_left: float
    a: Expression
    rho: Expression
    b: Expression


@dataclass(frozen=True)
class Coefficients:
    """The full coefficient description on [left, right].

    ``pieces`` are ordered by ``x_left``; the first piece starts at ``left``
    (possibly -inf) and the last extends to ``right``.  Outside the domain
    the coefficients are implicitly extended with (1, 1, 0).  ``lam`` and
    ``big_lam`` are the ellipticity bounds; if omitted they are estimated by
    dense sampling.
    """

    left: float
    right: float
    pieces: tuple
    bc_left: str | None = None
    bc_right: str | None = None
    lam: float | None = None
    big_lam: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    # -- evaluation ------------------------------------------------------

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([p.x_left for p in self.pieces], dtype=float)

    def _eval(self, which: str, x, outside: float):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(xs.shape, outside)
        inside = (xs >= self.left) & (xs <= self.right)
        bp = self.breakpoints
        idx = np.clip(np.searchsorted(bp, xs, side="right") - 1, 0, len(self.pieces) - 1)
        for j, piece in enumerate(self.pieces):
            m = inside & (idx == j)
            if np.any(m):
                out[m] = getattr(piece, which)(xs[m])
        return out if np.ndim(x) else float(out[0])

    def a(self, x):
        return self._eval("a", x, 1.0)

    def rho(self, x):
        return self._eval("rho", x, 1.0)

    def b(self, x):
        return self._eval("b", x, 0.0)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.left) and math.isfinite(self.right)

    @property
    def driftless(self) -> bool:
        return all(p.b.is_constant and float(p.b(_probe_point(p))) == 0.0
                   for p in self.pieces)

    def ellipticity(self) -> tuple[float, float]:
        """(lam, big_lam): declared bounds, or sampled estimates."""
        if self.lam is not None and self.big_lam is not None:
            return float(self.lam), float(self.big_lam)
        lo, hi = math.inf, -math.inf
        for j, piece in enumerate(self.pieces):
            xs = _piece_samples(self, j)
            for f in (piece.a, piece.rho):
                v = np.asarray(f(xs), dtype=float)
                lo = min(lo, float(v.min()))
                hi = max(hi, float(v.max()))
            hi = max(hi, float(np.max(np.abs(np.asarray(piece.b(xs), dtype=float)))))
        return lo, hi


def _probe_point(piece: Piece) -> float:
    x = piece.x_left
    return x if math.isfinite(x) else 0.0


def _piece_samples(coeffs: Coefficients, j: int, n: int = 257) -> np.ndarray:
    """Sample points covering piece j (window-clipped if unbounded)."""
    lo = coeffs.pieces[j].x_left
    hi = coeffs.pieces[j + 1].x_left if j + 1 < len(coeffs.pieces) else coeffs.right
    if not math.isfinite(lo):
        lo = min(hi, 0.0) - 100.0 if math.isfinite(hi) else -100.0
    if not math.isfinite(hi):
        hi = lo + 100.0
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)


def validate(coeffs: Coefficients) -> ValidationReport:
    """Check every structural invariant; returns all violations found."""
    out: list[Violation] = []

    if not coeffs.left < coeffs.right:
        out.append(Violation("domain", "domain", f"left {coeffs.left} must be < right {coeffs.right}"))
    if not coeffs.pieces:
        out.append(Violation("pieces", "pieces", "at least one piece required"))
        return ValidationReport(tuple(out))

    bp = coeffs.breakpoints
    if bp[0] != coeffs.left:
        out.append(Violation("pieces", "pieces[0]",
                             f"first piece must start at the domain left ({bp[0]} != {coeffs.left})"))
    gaps = np.diff(bp)
    scale = np.maximum(1.0, np.abs(bp[:-1]))
    bad = np.nonzero(gaps <= MIN_GAP * scale)[0]
    for j in bad:
        out.append(Violation("minimal gap", f"breakpoints[{j}]",
                             f"gap {gaps[j]:.3e} at x={bp[j]} below the minimal admissible spacing"))

    for side, bc, endpoint in (("left", coeffs.bc_left, coeffs.left),
                               ("right", coeffs.bc_right, coeffs.right)):
        finite = math.isfinite(endpoint)
        if finite and bc not in ("dirichlet", "neumann"):
            out.append(Violation("bc", f"bc_{side}", f"finite endpoint needs dirichlet or neumann, got {bc!r}"))
        if not finite and bc is not None:
            out.append(Violation("bc", f"bc_{side}", f"infinite endpoint cannot carry bc {bc!r}"))

    lam, big_lam = (coeffs.lam, coeffs.big_lam)
    declared = lam is not None and big_lam is not None
    if declared and not (0.0 < lam <= big_lam):
        out.append(Violation("ellipticity", "lam", f"need 0 < lam <= Lam, got ({lam}, {big_lam})"))
    for j, piece in enumerate(coeffs.pieces):
        xs = _piece_samples(coeffs, j)
        a = np.asarray(piece.a(xs), dtype=float)
        rho = np.asarray(piece.rho(xs), dtype=float)
        bb = np.asarray(piece.b(xs), dtype=float)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(rho)) and np.all(np.isfinite(bb))):
            out.append(Violation("finite", f"pieces[{j}]", "non-finite coefficient value"))
            continue
        if a.min() <= 0.0 or rho.min() <= 0.0:
            out.append(Violation("ellipticity", f"pieces[{j}]",
                                 "a and rho must stay above a positive lower bound lam"))
        elif declared:
            if a.min() < lam - 1e-12 or a.max() > big_lam + 1e-12:
                out.append(Violation("ellipticity", f"pieces[{j}]",
                                     f"a ranges over [{a.min():.6g}, {a.max():.6g}] outside [lam, Lam]"))
            if rho.min() < lam - 1e-12 or rho.max() > big_lam + 1e-12:
                out.append(Violation("ellipticity", f"pieces[{j}]",
                                     f"rho ranges over [{rho.min():.6g}, {rho.max():.6g}] outside [lam, Lam]"))
            if np.max(np.abs(bb)) > big_lam + 1e-12:
                out.append(Violation("ellipticity", f"pieces[{j}]", "|b| exceeds Lam"))

    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# cumulative piece integrals (shared by drift removal and scale/speed)


class _Cumulative:
    """Antiderivative of a piecewise-smooth integrand, anchored at 0.

    Constant pieces integrate in closed form; smooth pieces get adaptive
    quadrature (abs tol QUAD_TOL) at 256 knots plus a cubic interpolant for
    interior evaluation.
    """

    def __init__(self, breakpoints, fns, const_vals):
        from scipy.interpolate import CubicSpline

        self.bp = np.asarray(breakpoints, dtype=float)  # finite, sorted, covers support
        self.fns = fns                                   # callable per cell, or None if constant
        self.const_vals = const_vals                     # constant value per cell, or None
        n = len(self.bp) - 1
        inc = np.zeros(n)
        self.splines = [None] * n
        for j in range(n):
            lo, hi = self.bp[j], self.bp[j + 1]
            if self.fns[j] is None:
                inc[j] = self.const_vals[j] * (hi - lo)
            else:
                knots = np.linspace(lo, hi, 257)
                vals = np.zeros(257)
                for i in range(256):
                    piece, err = quad(self.fns[j], knots[i], knots[i + 1],
                                      epsabs=QUAD_TOL / 256, epsrel=1e-12, limit=200)
                    if err > 10 * max(QUAD_TOL, 1e-14 * abs(piece)):
                        raise QuadratureError(
                            f"integral over cell [{knots[i]:.6g}, {knots[i+1]:.6g}] did not converge")
                    vals[i + 1] = vals[i] + piece
                inc[j] = vals[-1]
                self.splines[j] = CubicSpline(knots, vals)
        cum = np.concatenate([[0.0], np.cumsum(inc)])
        # shift so the antiderivative vanishes at 0
        j0 = int(np.clip(np.searchsorted(self.bp, 0.0, side="right") - 1, 0, n - 1))
        self.cum = cum - (cum[j0] + self._local(j0, 0.0))

    def _local(self, j, x):
        if self.fns[j] is None:
            return self.const_vals[j] * (x - self.bp[j])
        return float(self.splines[j](x))

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(xs.shape)
        n = len(self.bp) - 1
        idx = np.clip(np.searchsorted(self.bp, xs, side="right") - 1, 0, n - 1)
        for j in range(n):
            m = idx == j
            if not np.any(m):
                continue
            if self.fns[j] is None:
                out[m] = self.cum[j] + self.const_vals[j] * (xs[m] - self.bp[j])
            else:
                out[m] = self.cum[j] + self.splines[j](xs[m])
        return out if np.ndim(x) else float(out[0])


def _support_breakpoints(coeffs: Coefficients, pad: float = 1.0) -> np.ndarray:
    """Finite breakpoint cover of the domain plus the anchor 0."""
    bp = [x for x in coeffs.breakpoints if math.isfinite(x)]
    lo = coeffs.left if math.isfinite(coeffs.left) else (min(bp + [0.0]) - pad if bp else -pad)
    hi = coeffs.right if math.isfinite(coeffs.right) else (max(bp + [0.0]) + pad if bp else pad)
    pts = sorted(set([lo, hi, 0.0] + bp))
    return np.array([p for p in pts if lo <= p <= hi], dtype=float)


def _cell_fns(coeffs: Coefficients, bp: np.ndarray, integrand):
    """Per-cell callables/constants of integrand(a, rho, b, x) over cover bp."""
    fns, consts = [], []
    mids = 0.5 * (bp[:-1] + bp[1:])
    for j, mid in enumerate(mids):
        if mid < coeffs.left or mid > coeffs.right:
            piece = Piece(bp[j], Constant(1.0), Constant(1.0), Constant(0.0))
        else:
            pidx = int(np.clip(np.searchsorted(coeffs.breakpoints, mid, side="right") - 1,
                               0, len(coeffs.pieces) - 1))
            piece = coeffs.pieces[pidx]
        if piece.a.is_constant and piece.rho.is_constant and piece.b.is_constant:
            consts.append(float(integrand(piece.a(mid), piece.rho(mid), piece.b(mid), mid)))
            fns.append(None)
        else:
            consts.append(None)
            fns.append(lambda x, p=piece: integrand(p.a(x), p.rho(x), p.b(x), x))
    return fns, consts


# ---------------------------------------------------------------------------
# drift removal


def remove_drift(coeffs: Coefficients) -> Coefficients:
    """Return an equivalent characteristic (a e^psi, rho e^-psi, 0).

    psi is the antiderivative of 2 b / (a rho), anchored at 0, which makes
    (rho~/2)(a~ u')' reproduce the original operator including its drift.
    The pointwise product a*rho (and hence the unit-scale map) is unchanged.
    """
    if coeffs.driftless:
        return coeffs
    if not coeffs.bounded:
        raise DriftRemovalError(
            "drift removal on an unbounded domain is ill-posed; localize the "
            "problem to a bounded window first")

    bp = _support_breakpoints(coeffs)
    fns, consts = _cell_fns(coeffs, bp, lambda a, r, b, x: 2.0 * b / (a * r))
    psi = _Cumulative(bp, fns, consts)

    def dpsi(x, c=coeffs):
        return 2.0 * np.asarray(c.b(x)) / (np.asarray(c.a(x)) * np.asarray(c.rho(x)))

    new_pieces = tuple(
        Piece(p.x_left,
              ShiftedProduct(p.a, psi, dpsi, +1),
              ShiftedProduct(p.rho, psi, dpsi, -1),
              Constant(0.0))
        for p in coeffs.pieces)
    return replace(coeffs, pieces=new_pieces, lam=None, big_lam=None)


# ---------------------------------------------------------------------------
# natural scale and speed


@dataclass(frozen=True)
class ScaleData:
    """Scale function S, speed density, and their ingredients.

    ``S`` is strictly increasing with S(0) = 0; ``speed_density`` is
    exp(h)/rho; ``V`` is its antiderivative with V(0) = 0; ``h`` is the
    drift functional 2 * integral of b/(a rho), h(0) = 0.
    """

    h: object
    S: object
    V: object
    speed_density: object
    left: float
    right: float

    def S_range(self) -> tuple[float, float]:
        return float(self.S(self.left)), float(self.S(self.right))


def natural_scale(coeffs: Coefficients) -> ScaleData:
    """Compute h, S, speed density and V by piecewise integration.

    Constant cells integrate in closed form; smooth cells use adaptive
    quadrature to QUAD_TOL.  Works on bounded domains (localize first
    otherwise).
    """
    if not coeffs.bounded:
        raise DriftRemovalError("natural scale needs a bounded domain; localize first")
    bp = _support_breakpoints(coeffs)
    fns_h, consts_h = _cell_fns(coeffs, bp, lambda a, r, b, x: 2.0 * b / (a * r))
    h = _Cumulative(bp, fns_h, consts_h)

    h_is_zero = all(f is None and c == 0.0 for f, c in zip(fns_h, consts_h))

    def s_integrand(a, r, b, x):
        return np.exp(-h(x)) / a

    def v_integrand(a, r, b, x):
        return np.exp(h(x)) / r

    if h_is_zero:
        fns_s, consts_s = _cell_fns(coeffs, bp, lambda a, r, b, x: 1.0 / a)
        fns_v, consts_v = _cell_fns(coeffs, bp, lambda a, r, b, x: 1.0 / r)
    else:
        # h varies: no cell is constant for S/V integrands
        fns_s, consts_s = _cell_fns(coeffs, bp, s_integrand)
        fns_s = [f if f is not None else (lambda x, j=j: s_integrand(
            coeffs.a(x), coeffs.rho(x), 0.0, x)) for j, f in enumerate(fns_s)]
        consts_s = [None] * len(consts_s)
        fns_v, consts_v = _cell_fns(coeffs, bp, v_integrand)
        fns_v = [f if f is not None else (lambda x, j=j: v_integrand(
            coeffs.a(x), coeffs.rho(x), 0.0, x)) for j, f in enumerate(fns_v)]
        consts_v = [None] * len(consts_v)

    S = _Cumulative(bp, fns_s, consts_s)
    V = _Cumulative(bp, fns_v, consts_v)

    def speed_density(x, c=coeffs, hh=h):
        return np.exp(hh(x)) / np.asarray(c.rho(x))

    return ScaleData(h=h, S=S, V=V, speed_density=speed_density,
                     left=coeffs.left, right=coeffs.right)


# ---------------------------------------------------------------------------
# discretization


@dataclass(frozen=True)
class StepCoefficients:
    """Piecewise-constant approximation on a finite window.

    Cell j is [xs[j], xs[j+1]) with values (a_vals[j], rho_vals[j]); xs
    contains every original breakpoint.  ``sup_error`` bounds
    ||a - a_n||_inf + ||rho - rho_n||_inf.
    """

    xs: np.ndarray
    a_vals: np.ndarray
    rho_vals: np.ndarray
    sup_error: float
    bc_left: str | None = None
    bc_right: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "xs", np.asarray(self.xs, dtype=float))
        object.__setattr__(self, "a_vals", np.asarray(self.a_vals, dtype=float))
        object.__setattr__(self, "rho_vals", np.asarray(self.rho_vals, dtype=float))

    @property
    def n_cells(self) -> int:
        return len(self.a_vals)

    def a(self, x):
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, self.n_cells - 1)
        return self.a_vals[idx]

    def rho(self, x):
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, self.n_cells - 1)
        return self.rho_vals[idx]


def discretize(coeffs: Coefficients, mesh: float, sample_at: str = "left") -> StepCoefficients:
    """Freeze the coefficients on cells whose image under the unit-scale map
    has length ``mesh``.

    The X-space step from x is mesh * sqrt(a(x) rho(x)) so the image grid is
    uniform; each cell carries the values at its left endpoint (or midpoint
    with sample_at='mid').  A remainder shorter than half a step at the end
    of a smoothness piece is merged into the previous cell.  Requires b == 0
    and a bounded window.
    """
    if mesh <= 0.0:
        raise ValueError("mesh must be positive")
    if not coeffs.driftless:
        raise ValueError("discretize requires b == 0; call remove_drift first")
    if not coeffs.bounded:
        raise ValueError("discretize requires a bounded window; localize first")
    if sample_at not in ("left", "mid"):
        raise ValueError("sample_at must be 'left' or 'mid'")

    original = [x for x in coeffs.breakpoints if math.isfinite(x)]
    interior = [x for x in original if coeffs.left < x < coeffs.right]
    gaps = np.diff(np.array(sorted(set([coeffs.left] + interior + [coeffs.right]))))
    if len(gaps) and mesh > float(gaps.min()):
        raise ValueError(
            f"mesh {mesh} exceeds the minimal original breakpoint gap {gaps.min():.6g}")

    piece_edges = sorted(set([coeffs.left] + interior + [coeffs.right]))
    xs = [coeffs.left]
    a_vals: list[float] = []
    rho_vals: list[float] = []
    err_a = 0.0
    err_rho = 0.0

    def cell_error(piece: Piece, lo: float, hi: float) -> tuple[float, float]:
        w = hi - lo
        half = 0.5 if sample_at == "mid" else 1.0
        return (piece.a.sup_abs_deriv(lo, hi) * w * half,
                piece.rho.sup_abs_deriv(lo, hi) * w * half)

    for lo_edge, hi_edge in zip(piece_edges[:-1], piece_edges[1:]):
        pidx = int(np.clip(np.searchsorted(coeffs.breakpoints,
                                           0.5 * (lo_edge + hi_edge), side="right") - 1,
                           0, len(coeffs.pieces) - 1))
        piece = coeffs.pieces[pidx]
        x = lo_edge
        while True:
            step = mesh * math.sqrt(float(piece.a(x)) * float(piece.rho(x)))
            nxt = x + step
            if nxt >= hi_edge - 0.5 * step:
                nxt = hi_edge
            sample = x if sample_at == "left" else 0.5 * (x + nxt)
            a_vals.append(float(piece.a(sample)))
            rho_vals.append(float(piece.rho(sample)))
            ea, er = cell_error(piece, x, nxt)
            err_a = max(err_a, ea)
            err_rho = max(err_rho, er)
            xs.append(nxt)
            x = nxt
            if x >= hi_edge:
                break

    return StepCoefficients(
        xs=np.array(xs), a_vals=np.array(a_vals), rho_vals=np.array(rho_vals),
        sup_error=err_a + err_rho, bc_left=coeffs.bc_left, bc_right=coeffs.bc_right)


# ---------------------------------------------------------------------------
# unit-scale map


@dataclass(frozen=True)
class UnitScaleMap:
    """Continuous piecewise-linear bijection with slope 1/sqrt(a rho) per cell.

    In the image scale the discretized diffusion is a Brownian motion away
    from the knot images, where it behaves like a skew Brownian motion with
    parameter ``betas[k]``.  Evaluation beyond the window continues the edge
    slopes (only relevant for diagnostics).
    """

    xs: np.ndarray          # knot positions, original scale
    ys: np.ndarray          # knot images
    slopes: np.ndarray      # per cell, len(xs) - 1
    betas: np.ndarray       # skewness per knot (endpoints: placeholder 0)
    x_betas: np.ndarray     # jump ratio (a+ - a-)/(a+ + a-) per knot, diagnostics

    def forward(self, x):
        xs = np.asarray(x, dtype=float)
        j = np.clip(np.searchsorted(self.xs, xs, side="right") - 1, 0, len(self.slopes) - 1)
        out = self.ys[j] + (xs - self.xs[j]) * self.slopes[j]
        return out if np.ndim(x) else float(out)

    def inverse(self, y):
        ys = np.asarray(y, dtype=float)
        j = np.clip(np.searchsorted(self.ys, ys, side="right") - 1, 0, len(self.slopes) - 1)
        out = self.xs[j] + (ys - self.ys[j]) / self.slopes[j]
        return out if np.ndim(y) else float(out)

    @property
    def y_left(self) -> float:
        return float(self.ys[0])

    @property
    def y_right(self) -> float:
        return float(self.ys[-1])


def build_scale_map(step: StepCoefficients) -> UnitScaleMap:
    """Build the unit-scale map and per-knot skewness from cell constants.

    The skewness at an interior knot is
    (sqrt(a+/rho+) - sqrt(a-/rho-)) / (sqrt(a+/rho+) + sqrt(a-/rho-)),
    which makes (1+beta)/2 the probability that an excursion from the knot
    image goes right.  The same flux balance in the original scale,
    (a+ - a-)/(a+ + a-), is exposed as ``x_betas`` for diagnostics.
    """
    a, rho = step.a_vals, step.rho_vals
    slopes = 1.0 / np.sqrt(a * rho)
    dy = np.diff(step.xs) * slopes
    ys = np.concatenate([[0.0], np.cumsum(dy)])
    ys = ys - ys[0] if step.xs[0] == 0.0 else ys - np.interp(0.0, step.xs, ys)

    r = np.sqrt(a / rho)
    betas = np.zeros(len(step.xs))
    x_betas = np.zeros(len(step.xs))
    betas[1:-1] = (r[1:] - r[:-1]) / (r[1:] + r[:-1])
    x_betas[1:-1] = (a[1:] - a[:-1]) / (a[1:] + a[:-1])
    return UnitScaleMap(xs=step.xs.copy(), ys=ys, slopes=slopes,
                        betas=betas, x_betas=x_betas)


# ---------------------------------------------------------------------------
# JSON interface


def _parse_endpoint(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
        raise ValueError(f"bad endpoint {v!r}")
    return float(v)


def load_coefficients(source) -> Coefficients:
    """Load coefficients from a JSON document (path, file object or dict).

    Schema::

        {"domain": [l, r],              # numbers or "inf"/"-inf"
         "bc": ["dirichlet"|"neumann"|null, ...],   # left, right
         "pieces": [{"x": x_k, "a": expr, "rho": expr, "b": expr}, ...],
         "lambda": optional lower ellipticity bound,
         "Lambda": optional upper bound}

    Expressions are numbers, {"poly": [c0, c1, ...]}, or
    {"fn": "sin"|"cos"|"exp", "offset":, "amp":, "scale":, "shift":}.
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)

    left, right = (_parse_endpoint(v) for v in doc["domain"])
    bc = doc.get("bc", [None, None])
    bc = [None if v in (None, "none") else str(v).lower() for v in bc]
    pieces = []
    for praw in doc["pieces"]:
        pieces.append(Piece(
            x_left=_parse_endpoint(praw["x"]),
            a=expression_from_json(praw["a"]),
            rho=expression_from_json(praw.get("rho", 1.0)),
            b=expression_from_json(praw.get("b", 0.0)),
        ))
    pieces.sort(key=lambda p: p.x_left)
    return Coefficients(
        left=left, right=right, pieces=tuple(pieces),
        bc_left=bc[0], bc_right=bc[1],
        lam=doc.get("lambda"), big_lam=doc.get("Lambda"),
    )


def coefficients_digest(doc_or_coeffs) -> str:
    """sha256 of the canonical JSON serialization (for run metadata)."""
    import hashlib

    if isinstance(doc_or_coeffs, Coefficients):
        c = doc_or_coeffs
        doc = {
            "domain": [c.left, c.right],
            "bc": [c.bc_left, c.bc_right],
            "pieces": [{"x": p.x_left, "a": p.a.to_json(), "rho": p.rho.to_json(),
                        "b": p.b.to_json()} for p in c.pieces],
        }
    else:
        doc = doc_or_coeffs
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()
