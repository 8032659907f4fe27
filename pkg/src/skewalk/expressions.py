"""Small expression grammar for coefficient pieces.

A coefficient piece is one of: a constant, a polynomial, or
``offset + amp * fn(scale * x + shift)`` with ``fn`` in {sin, cos, exp}.
That is enough to describe every configuration this package targets while
keeping derivative and sup-norm bounds exact (no symbolic machinery needed).

All expressions evaluate vectorized on numpy arrays and scalars alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expression",
    "Constant",
    "Polynomial",
    "Transcendental",
    "ShiftedProduct",
    "expression_from_json",
]

_SAMPLES = 257  # dense-sampling resolution for bounds with no closed form


class Expression:
    """Base class; subclasses are immutable and vectorized."""

    def __call__(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def sup_abs_deriv(self, lo: float, hi: float) -> float:
        """Upper bound for sup |f'| on [lo, hi]."""
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return False

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Expression):
    value: float

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value) if np.ndim(x) else float(self.value)

    def deriv(self, x):
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0

    def sup_abs_deriv(self, lo, hi):
        return 0.0

    @property
    def is_constant(self):
        return True

    def to_json(self):
        return float(self.value)


@dataclass(frozen=True)
class Polynomial(Expression):
    """c0 + c1*x + c2*x^2 + ... (coeffs in ascending order)."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def deriv(self, x):
        d = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(x, d)

    def sup_abs_deriv(self, lo, hi):
        xs = np.linspace(lo, hi, _SAMPLES)
        # small inflation covers the gap between sampled and true sup
        return float(np.max(np.abs(self.deriv(xs)))) * (1.0 + 1e-6) + 1e-300

    @property
    def is_constant(self):
        return all(c == 0.0 for c in self.coeffs[1:])

    def to_json(self):
        return {"poly": list(self.coeffs)}


@dataclass(frozen=True)
class Transcendental(Expression):
    """offset + amp * fn(scale * x + shift), fn in {sin, cos, exp}."""

    fn: str
    offset: float = 0.0
    amp: float = 1.0
    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.fn not in ("sin", "cos", "exp"):
            raise ValueError(f"unsupported function {self.fn!r}")

    def _f(self, u):
        return getattr(np, self.fn)(u)

    def __call__(self, x):
        return self.offset + self.amp * self._f(self.scale * np.asarray(x, dtype=float) + self.shift) \
            if np.ndim(x) else self.offset + self.amp * getattr(math, self.fn)(self.scale * x + self.shift)

    def deriv(self, x):
        u = self.scale * np.asarray(x, dtype=float)
        u = u + self.shift
        if self.fn == "sin":
            g = np.cos(u)
        elif self.fn == "cos":
            g = -np.sin(u)
        else:
            g = np.exp(u)
        out = self.amp * self.scale * g
        return out if np.ndim(x) else float(out)

    def sup_abs_deriv(self, lo, hi):
        c = abs(self.amp * self.scale)
        if self.fn == "exp":
            return c * math.exp(max(self.scale * lo, self.scale * hi) + self.shift)
        return c  # |cos|, |sin| <= 1

    @property
    def is_constant(self):
        return self.amp == 0.0 or self.scale == 0.0

    def to_json(self):
        return {
            "fn": self.fn,
            "offset": self.offset,
            "amp": self.amp,
            "scale": self.scale,
            "shift": self.shift,
        }


class ShiftedProduct(Expression):
    """f(x) * exp(sign * psi(x)) for drift removal.

    ``psi`` and ``dpsi`` are plain callables (cumulative integral and its
    derivative); bounds fall back to dense sampling.
    """

    def __init__(self, base: Expression, psi, dpsi, sign: int):
        self.base = base
        self.psi = psi
        self.dpsi = dpsi
        self.sign = int(sign)

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        val = np.asarray(self.base(xs)) * np.exp(self.sign * np.asarray(self.psi(xs)))
        return val if np.ndim(x) else float(val)

    def deriv(self, x):
        xs = np.asarray(x, dtype=float)
        e = np.exp(self.sign * np.asarray(self.psi(xs)))
        val = (np.asarray(self.base.deriv(xs))
               + np.asarray(self.base(xs)) * self.sign * np.asarray(self.dpsi(xs))) * e
        return val if np.ndim(x) else float(val)

    def sup_abs_deriv(self, lo, hi):
        xs = np.linspace(lo, hi, _SAMPLES)
        return float(np.max(np.abs(self.deriv(xs)))) * (1.0 + 1e-6) + 1e-300

    @property
    def is_constant(self):
        # constant only if the base is constant and psi does not vary,
        # which in drift removal means b == 0 there; detect via dpsi.
        if not self.base.is_constant:
            return False
        xs = np.linspace(-1.0, 1.0, 5)
        return bool(np.all(np.asarray(self.dpsi(xs)) == 0.0))

    def to_json(self):
        raise TypeError("drift-adjusted pieces are runtime objects; serialize the original coefficients")


def expression_from_json(spec) -> Expression:
    """Parse a JSON fragment: a bare number, {"poly": [...]}, or
    {"fn": "sin"|"cos"|"exp", "offset": .., "amp": .., "scale": .., "shift": ..}.
    """
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    if not isinstance(spec, dict):
        raise ValueError(f"cannot parse expression {spec!r}")
    if "poly" in spec:
        return Polynomial(tuple(spec["poly"]))
    if "fn" in spec:
        return Transcendental(
            fn=spec["fn"],
            offset=float(spec.get("offset", 0.0)),
            amp=float(spec.get("amp", 1.0)),
            scale=float(spec.get("scale", 1.0)),
            shift=float(spec.get("shift", 0.0)),
        )
    raise ValueError(f"cannot parse expression {spec!r}")
